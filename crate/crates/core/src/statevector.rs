//! Dense statevector simulation.
//!
//! Basis convention: `|0⟩ = |↑⟩`, `|1⟩ = |↓⟩`. Site 1 is the most
//! significant bit of the amplitude index, so site `j` of an `N`-site chain
//! lives at bit `N − j`. Bitstrings print site 1 leftmost.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{ChainSpec, Circuit, Gate};
use crate::error::{check_site, Error, Result};

/// Default memory guard: 2^26 amplitudes is 1 GiB.
pub const DEFAULT_MAX_QUBITS: usize = 26;

/// Largest chain handled by [`exact_unitary_evolve`].
pub const EXACT_MAX_QUBITS: usize = 14;

/// Largest chain for which dense `2^N × 2^N` oracles are built.
pub const DENSE_MAX_QUBITS: usize = 10;

/// Identity of the sampling generator, recorded in result metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

const PAR_THRESHOLD: usize = 1 << 14;

type C64 = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Computational basis state with `1`s exactly at `flips`.
    pub fn product(n_qubits: usize, flips: &[usize]) -> Result<Self> {
        Self::product_with_cap(n_qubits, flips, DEFAULT_MAX_QUBITS)
    }

    pub fn product_with_cap(n_qubits: usize, flips: &[usize], max_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Config("statevector needs at least one qubit".into()));
        }
        if n_qubits > max_qubits {
            return Err(Error::Capability(format!(
                "statevector backend is capped at {max_qubits} qubits, requested {n_qubits}"
            )));
        }
        let mut index = 0usize;
        for &f in flips {
            check_site(f, n_qubits)?;
            let mask = 1usize << (n_qubits - f);
            if index & mask != 0 {
                return Err(Error::InvalidArgument(format!("site {f} flipped twice")));
            }
            index |= mask;
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1usize << n_qubits];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Bit position of site `j` in the amplitude index.
    pub fn bit_of(&self, site: usize) -> usize {
        self.n_qubits - site
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        let n = self.n_qubits;
        let (a, b) = gate.qubits();
        check_site(a, n)?;
        if let Some(b) = b {
            check_site(b, n)?;
        }
        match *gate {
            Gate::Rx { qubit, angle } => {
                let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
                let m = [
                    [C64::new(c, 0.0), C64::new(0.0, -s)],
                    [C64::new(0.0, -s), C64::new(c, 0.0)],
                ];
                apply_single(&mut self.amps, n - qubit, m);
            }
            Gate::Ry { qubit, angle } => {
                let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
                let m = [
                    [C64::new(c, 0.0), C64::new(-s, 0.0)],
                    [C64::new(s, 0.0), C64::new(c, 0.0)],
                ];
                apply_single(&mut self.amps, n - qubit, m);
            }
            Gate::Rz { qubit, angle } => {
                let lo = C64::from_polar(1.0, -angle / 2.0);
                apply_diagonal(&mut self.amps, n - qubit, lo, lo.conj());
            }
            Gate::X { qubit } => apply_cnot_masked(&mut self.amps, n - qubit, 0),
            Gate::Cnot { control, target } => {
                apply_cnot_masked(&mut self.amps, n - target, 1usize << (n - control))
            }
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: circuit.n_qubits(),
            });
        }
        for gate in circuit.gates() {
            self.apply_gate(gate)?;
        }
        Ok(())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Exact `⟨σ^z_j⟩`.
    pub fn expectation_z(&self, j: usize) -> Result<f64> {
        check_site(j, self.n_qubits)?;
        let bit = self.bit_of(j);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(b, a)| a.norm_sqr() * spin(b, bit))
            .sum())
    }

    /// Exact `⟨σ^z_i σ^z_j⟩`.
    pub fn expectation_zz(&self, i: usize, j: usize) -> Result<f64> {
        check_site(i, self.n_qubits)?;
        check_site(j, self.n_qubits)?;
        let (bi, bj) = (self.bit_of(i), self.bit_of(j));
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(b, a)| a.norm_sqr() * spin(b, bi) * spin(b, bj))
            .sum())
    }

    /// All `⟨σ^z_j⟩` and the full matrix of `⟨σ^z_i σ^z_j⟩`.
    ///
    /// The index is split into high and low halves `b = h·2^L + l`. Row sums
    /// over `l`, column sums over `h` and the mixed moments `Σ_l p s_k(l)`
    /// per row give every pair in `O(N 2^N)`. Partitions are fixed, so the
    /// result is bit-identical for any thread count.
    pub fn z_moments(&self) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.n_qubits;
        let lo_bits = n / 2;
        let hi_bits = n - lo_bits;
        let width = 1usize << lo_bits;
        let rows: Vec<(f64, Vec<f64>)> = self
            .amps
            .par_chunks(width)
            .map(|row| {
                let mut total = 0.0;
                let mut mixed = vec![0.0; lo_bits];
                for (l, a) in row.iter().enumerate() {
                    let p = a.norm_sqr();
                    total += p;
                    for (k, w) in mixed.iter_mut().enumerate() {
                        *w += p * spin(l, k);
                    }
                }
                (total, mixed)
            })
            .collect();
        let columns: Vec<f64> = (0..width)
            .into_par_iter()
            .map(|l| (0..rows.len()).map(|h| self.amps[h * width + l].norm_sqr()).sum())
            .collect();

        // bit k of the index is site N − k, i.e. 0-based row N − 1 − k
        let site = |bit: usize| n - 1 - bit;
        let mut m = vec![0.0; n];
        let mut zz = DMatrix::zeros(n, n);
        for (l, &p) in columns.iter().enumerate() {
            for a in 0..lo_bits {
                let sa = spin(l, a);
                m[site(a)] += p * sa;
                for b in 0..lo_bits {
                    zz[(site(a), site(b))] += p * sa * spin(l, b);
                }
            }
        }
        for (h, (p, mixed)) in rows.iter().enumerate() {
            for a in 0..hi_bits {
                let sa = spin(h, a);
                let ia = site(lo_bits + a);
                m[ia] += p * sa;
                for b in 0..hi_bits {
                    zz[(ia, site(lo_bits + b))] += p * sa * spin(h, b);
                }
                for (k, w) in mixed.iter().enumerate() {
                    zz[(ia, site(k))] += sa * w;
                    zz[(site(k), ia)] += sa * w;
                }
            }
        }
        (m, zz)
    }

    /// Draws `shots` bitstrings from `|amplitude|²`, deterministically in `seed`.
    pub fn sample_counts(&self, shots: u64, seed: u64, step: usize, dt: f64) -> Result<ShotTable> {
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        let mut cumulative = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cumulative.push(acc);
        }
        let total = acc;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits: HashMap<usize, u64> = HashMap::new();
        for _ in 0..shots {
            let u: f64 = rng.random::<f64>() * total;
            let idx = cumulative
                .partition_point(|&c| c <= u)
                .min(self.amps.len() - 1);
            *hits.entry(idx).or_insert(0) += 1;
        }
        let counts = hits
            .into_iter()
            .map(|(idx, n)| (bitstring(idx, self.n_qubits), n))
            .collect();
        Ok(ShotTable {
            step,
            time: step as f64 * dt,
            shots,
            seed,
            counts,
        })
    }
}

fn spin(index: usize, bit: usize) -> f64 {
    if (index >> bit) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Bitstring of basis index `idx`, site 1 leftmost.
pub fn bitstring(idx: usize, n_qubits: usize) -> String {
    (1..=n_qubits)
        .map(|j| if (idx >> (n_qubits - j)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn apply_single(amps: &mut [C64], bit: usize, m: [[C64; 2]; 2]) {
    let stride = 1usize << bit;
    let kernel = |chunk: &mut [C64]| {
        let (lo, hi) = chunk.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = m[0][0] * x + m[0][1] * y;
            *b = m[1][0] * x + m[1][1] * y;
        }
    };
    if amps.len() >= PAR_THRESHOLD {
        amps.par_chunks_mut(2 * stride).for_each(kernel);
    } else {
        amps.chunks_mut(2 * stride).for_each(kernel);
    }
}

fn apply_diagonal(amps: &mut [C64], bit: usize, d0: C64, d1: C64) {
    let kernel = |(idx, a): (usize, &mut C64)| {
        *a *= if (idx >> bit) & 1 == 0 { d0 } else { d1 };
    };
    if amps.len() >= PAR_THRESHOLD {
        amps.par_iter_mut().enumerate().for_each(kernel);
    } else {
        amps.iter_mut().enumerate().for_each(kernel);
    }
}

/// Flips the target bit on every index whose control bits (`control_mask`) are all set.
fn apply_cnot_masked(amps: &mut [C64], target_bit: usize, control_mask: usize) {
    let stride = 1usize << target_bit;
    let kernel = |(chunk_idx, chunk): (usize, &mut [C64])| {
        let base = chunk_idx * 2 * stride;
        let (lo, hi) = chunk.split_at_mut(stride);
        for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
            if (base + k) & control_mask == control_mask {
                std::mem::swap(a, b);
            }
        }
    };
    if amps.len() >= PAR_THRESHOLD {
        amps.par_chunks_mut(2 * stride).enumerate().for_each(kernel);
    } else {
        amps.chunks_mut(2 * stride).enumerate().for_each(kernel);
    }
}

/// Computational-basis measurement record of one circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotTable {
    pub step: usize,
    pub time: f64,
    pub shots: u64,
    pub seed: u64,
    /// Bitstring (site 1 leftmost, `1` = down) to number of occurrences.
    pub counts: BTreeMap<String, u64>,
}

impl ShotTable {
    pub fn n_qubits(&self) -> Option<usize> {
        self.counts.keys().next().map(String::len)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("shot table serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: ShotTable =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("shot table: {e}")))?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        let total: u64 = self.counts.values().sum();
        if total != self.shots {
            return Err(Error::Parse(format!(
                "counts sum to {total} but shots = {}",
                self.shots
            )));
        }
        let mut lens = self.counts.keys().map(String::len);
        if let Some(first) = lens.next() {
            if lens.any(|l| l != first) {
                return Err(Error::Parse("bitstrings have different lengths".into()));
            }
        }
        if self.counts.keys().any(|k| k.chars().any(|c| c != '0' && c != '1')) {
            return Err(Error::Parse("bitstrings must contain only 0 and 1".into()));
        }
        Ok(())
    }
}

/// Sparse action of the deformed XXZ Hamiltonian on statevectors.
#[derive(Debug, Clone)]
pub struct XxzOperator {
    n_qubits: usize,
    /// `(pair mask, 2 J v_j)` for every bond.
    flips: Vec<(usize, f64)>,
    diagonal: Vec<f64>,
}

impl XxzOperator {
    pub fn new(spec: &ChainSpec) -> Self {
        let n = spec.n_sites();
        let bonds: Vec<(usize, usize, f64)> = (1..n)
            .map(|j| (n - j, n - j - 1, spec.bond_coupling(j)))
            .collect();
        let diagonal = (0..1usize << n)
            .into_par_iter()
            .map(|b| {
                bonds
                    .iter()
                    .map(|&(bi, bj, c)| c * spec.delta * spin(b, bi) * spin(b, bj))
                    .sum()
            })
            .collect();
        let flips = bonds
            .iter()
            .map(|&(bi, bj, c)| ((1usize << bi) | (1usize << bj), 2.0 * c))
            .collect();
        Self {
            n_qubits: n,
            flips,
            diagonal,
        }
    }

    /// Upper bound on the spectral radius: `Σ_j |J v_j| (2 + |Δ|)`.
    pub fn spectral_bound(spec: &ChainSpec) -> f64 {
        (1..spec.n_sites())
            .map(|j| spec.bond_coupling(j).abs() * (2.0 + spec.delta.abs()))
            .sum()
    }

    /// `out = scale · H · input`.
    fn apply_scaled(&self, input: &[C64], out: &mut [C64], scale: f64) {
        out.par_iter_mut().enumerate().for_each(|(b, o)| {
            let mut acc = input[b] * self.diagonal[b];
            for &(mask, c) in &self.flips {
                let pair = b & mask;
                if pair != 0 && pair != mask {
                    acc += input[b ^ mask] * c;
                }
            }
            *o = acc * scale;
        });
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        let mut out = vec![C64::new(0.0, 0.0); state.amps.len()];
        self.apply_scaled(&state.amps, &mut out, 1.0);
        StateVector {
            n_qubits: self.n_qubits,
            amps: out,
        }
    }
}

/// `exp(−iHt)|state⟩` for the chain in `spec`, by Chebyshev expansion of the
/// propagator over the sparse Hamiltonian.
pub fn exact_unitary_evolve(spec: &ChainSpec, state: &StateVector, t: f64) -> Result<StateVector> {
    spec.validate()?;
    let n = spec.n_sites();
    if n > EXACT_MAX_QUBITS {
        return Err(Error::Capability(format!(
            "exact evolution is limited to N <= {EXACT_MAX_QUBITS}, requested {n}"
        )));
    }
    if state.n_qubits != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: state.n_qubits,
        });
    }
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite, got {t}")));
    }
    let op = XxzOperator::new(spec);
    let bound = XxzOperator::spectral_bound(spec) * 1.01 + 1e-12;
    // keep each Chebyshev segment at a modest Bessel argument
    let segments = ((bound * t.abs()) / 20.0).ceil().max(1.0) as usize;
    let tau = t / segments as f64;
    let mut psi = state.amps.clone();
    for _ in 0..segments {
        psi = chebyshev_step(&op, &psi, bound, tau);
    }
    Ok(StateVector {
        n_qubits: n,
        amps: psi,
    })
}

fn chebyshev_step(op: &XxzOperator, psi: &[C64], bound: f64, tau: f64) -> Vec<C64> {
    let x = bound * tau;
    let coeffs = bessel_sequence(x.abs(), x.abs().ceil() as usize + 60);
    let len = psi.len();
    let mut result: Vec<C64> = psi.iter().map(|a| a * coeffs[0]).collect();
    if x == 0.0 {
        return result;
    }
    let scale = 1.0 / bound;
    let mut prev = psi.to_vec();
    let mut cur = vec![C64::new(0.0, 0.0); len];
    op.apply_scaled(&prev, &mut cur, scale);
    // exp(−i x cosθ) = J0(x) + 2 Σ_k (−i)^k J_k(x) T_k(cosθ); negative x flips (−1)^k
    let mut phase = C64::new(0.0, -1.0) * x.signum();
    for k in 1..coeffs.len() {
        let c = phase * (2.0 * coeffs[k]);
        result.par_iter_mut().zip(cur.par_iter()).for_each(|(r, v)| *r += v * c);
        if k + 1 == coeffs.len() || (k as f64 > x.abs() && coeffs[k].abs() < 1e-18) {
            break;
        }
        let mut next = vec![C64::new(0.0, 0.0); len];
        op.apply_scaled(&cur, &mut next, 2.0 * scale);
        next.par_iter_mut().zip(prev.par_iter()).for_each(|(n, p)| *n -= p);
        prev = cur;
        cur = next;
        phase *= C64::new(0.0, -1.0) * x.signum();
    }
    result
}

/// `J_0(x) .. J_kmax(x)` for `x ≥ 0` by Miller's downward recurrence,
/// normalised with `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_sequence(x: f64, kmax: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0;
        return out;
    }
    let start = {
        let m = kmax.max(x.ceil() as usize) + 30 + (40.0 * x.max(1.0)).sqrt() as usize;
        m + (m % 2)
    };
    let mut vals = vec![0.0f64; start + 2];
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        vals[k - 1] = (2.0 * k as f64 / x) * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            for v in vals.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let norm: f64 = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    vals.truncate(kmax + 1);
    vals.iter_mut().for_each(|v| *v /= norm);
    vals
}

/// Dense real Hamiltonian matrix (small `N` oracle).
pub fn dense_hamiltonian(spec: &ChainSpec) -> Result<DMatrix<f64>> {
    let n = spec.n_sites();
    if n > DENSE_MAX_QUBITS {
        return Err(Error::Capability(format!(
            "dense matrices are limited to N <= {DENSE_MAX_QUBITS}, requested {n}"
        )));
    }
    let dim = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for j in 1..n {
        let c = spec.bond_coupling(j);
        let (bi, bj) = (n - j, n - j - 1);
        for b in 0..dim {
            let (si, sj) = (spin(b, bi), spin(b, bj));
            h[(b, b)] += c * spec.delta * si * sj;
            if si != sj {
                h[(b ^ (1 << bi) ^ (1 << bj), b)] += 2.0 * c;
            }
        }
    }
    Ok(h)
}

/// Dense `exp(−iHt)` from a symmetric eigendecomposition (small `N` oracle).
pub fn dense_propagator(spec: &ChainSpec, t: f64) -> Result<DMatrix<C64>> {
    let h = dense_hamiltonian(spec)?;
    let eig = SymmetricEigen::new(h);
    let q = eig.eigenvectors.map(|v| C64::new(v, 0.0));
    let phases = DMatrix::from_diagonal(
        &eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t)),
    );
    Ok(&q * phases * q.transpose())
}

/// Dense unitary realised by the gate sequence (global phase not applied).
pub fn circuit_unitary(circuit: &Circuit) -> Result<DMatrix<C64>> {
    let n = circuit.n_qubits();
    if n > DENSE_MAX_QUBITS {
        return Err(Error::Capability(format!(
            "dense matrices are limited to N <= {DENSE_MAX_QUBITS}, requested {n}"
        )));
    }
    let dim = 1usize << n;
    let mut u = DMatrix::<C64>::zeros(dim, dim);
    for col in 0..dim {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[col] = C64::new(1.0, 0.0);
        let mut state = StateVector { n_qubits: n, amps };
        state.apply_circuit(circuit)?;
        for (row, a) in state.amps.into_iter().enumerate() {
            u[(row, col)] = a;
        }
    }
    Ok(u)
}

/// Maximum entrywise distance between `a` and `e^{iφ} b`, minimised over the
/// global phase `φ` (aligned on the largest entry of `b`).
pub fn phase_insensitive_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let (k, pivot) = b
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .map(|(k, v)| (k, *v))
        .expect("non-empty matrix");
    let ratio = a.as_slice()[k] / pivot;
    let phase = ratio / ratio.norm();
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - phase * y).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_quench_circuit, n_gate, CircuitOptions};
    use crate::lattice::DeformationProfile;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn product_states() {
        let s = StateVector::product(3, &[]).unwrap();
        assert_eq!(s.amplitudes()[0], C64::new(1.0, 0.0));
        let neel = StateVector::product(4, &[2, 4]).unwrap();
        assert_eq!(neel.amplitudes()[0b0101], C64::new(1.0, 0.0));
        let s = StateVector::product(2, &[1]).unwrap();
        assert_eq!(s.expectation_z(1).unwrap(), -1.0);
        assert_eq!(s.expectation_z(2).unwrap(), 1.0);
        assert!(StateVector::product(3, &[2, 2]).is_err());
        assert!(matches!(StateVector::product(3, &[4]), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(StateVector::product(27, &[]), Err(Error::Capability(_))));
    }

    #[test]
    fn neel_expectations() {
        let n = 6;
        let flips: Vec<usize> = (2..=n).step_by(2).collect();
        let s = StateVector::product(n, &flips).unwrap();
        for j in 1..=n {
            let expected = if j % 2 == 1 { 1.0 } else { -1.0 };
            assert_eq!(s.expectation_z(j).unwrap(), expected);
            assert_eq!(s.expectation_zz(j, j).unwrap(), 1.0);
            for i in 1..=n {
                let c = s.expectation_zz(i, j).unwrap()
                    - s.expectation_z(i).unwrap() * s.expectation_z(j).unwrap();
                assert_eq!(c, 0.0);
            }
        }
    }

    #[test]
    fn x_gate_and_empty_circuit() {
        let mut s = StateVector::product(2, &[]).unwrap();
        let before = s.clone();
        s.apply_circuit(&Circuit::new(2)).unwrap();
        assert_eq!(s, before);
        let mut c = Circuit::new(2);
        c.x(1).unwrap();
        s.apply_circuit(&c).unwrap();
        assert_eq!(s.amplitudes()[0b10], C64::new(1.0, 0.0));
        assert!(s.apply_circuit(&Circuit::new(3)).is_err());
    }

    #[test]
    fn cnot_respects_control() {
        let mut c = Circuit::new(3);
        c.cnot(1, 3).unwrap();
        let mut s = StateVector::product(3, &[1]).unwrap();
        s.apply_circuit(&c).unwrap();
        assert_eq!(s.amplitudes()[0b101], C64::new(1.0, 0.0));
        let mut s = StateVector::product(3, &[2]).unwrap();
        s.apply_circuit(&c).unwrap();
        assert_eq!(s.amplitudes()[0b010], C64::new(1.0, 0.0));
    }

    #[test]
    fn bessel_values() {
        // reference values of J_n(x)
        let j = bessel_sequence(1.0, 3);
        assert!(close(j[0], 0.765_197_686_557_966_6, 1e-15));
        assert!(close(j[1], 0.440_050_585_744_933_5, 1e-15));
        let j = bessel_sequence(10.0, 12);
        assert!(close(j[0], -0.245_935_764_451_348_3, 1e-14));
        assert!(close(j[10], 0.207_486_106_633_358_8, 1e-14));
    }

    #[test]
    fn chebyshev_matches_dense_propagator() {
        let profile = DeformationProfile::horizon(7, 1.3).unwrap();
        let spec = ChainSpec::new(profile, 0.7).with_coupling(1.3);
        let state = StateVector::product(7, &[2, 3, 6]).unwrap();
        let u = dense_propagator(&spec, 1.7).unwrap();
        let evolved = exact_unitary_evolve(&spec, &state, 1.7).unwrap();
        let reference = &u * nalgebra::DVector::from_column_slice(state.amplitudes());
        for (a, b) in evolved.amplitudes().iter().zip(reference.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        let back = exact_unitary_evolve(&spec, &evolved, -1.7).unwrap();
        assert!((back.inner(&state).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_evolution_edge_cases() {
        let spec = ChainSpec::new(DeformationProfile::uniform(4).unwrap(), 0.5);
        let s = StateVector::product(4, &[2, 4]).unwrap();
        assert_eq!(exact_unitary_evolve(&spec, &s, 0.0).unwrap(), s);
        let up = StateVector::product(4, &[]).unwrap();
        let evolved = exact_unitary_evolve(&spec, &up, 3.0).unwrap();
        assert!(close(evolved.inner(&up).norm(), 1.0, 1e-12));
        let big = ChainSpec::new(DeformationProfile::uniform(15).unwrap(), 0.5);
        let s15 = StateVector::product(15, &[]).unwrap();
        assert!(matches!(exact_unitary_evolve(&big, &s15, 1.0), Err(Error::Capability(_))));
    }

    #[test]
    fn two_site_xx_rabi_oscillation() {
        let spec = ChainSpec::new(DeformationProfile::uniform(2).unwrap(), 0.0);
        let s = StateVector::product(2, &[2]).unwrap();
        for t in [0.1, 0.37, 1.0, 2.5] {
            let e = exact_unitary_evolve(&spec, &s, t).unwrap();
            assert!(close(e.expectation_z(1).unwrap(), (4.0 * t).cos(), 1e-12));
        }
    }

    #[test]
    fn embedded_n_gate_matches_dense_block() {
        // apply the three-CNOT block inside a 4-qubit register and compare with
        // the 4x4 exponential acting on the same two qubits
        let (a, b, g) = (0.31, -0.72, 1.13);
        let mut c = Circuit::new(4);
        c.push_n_gate(3, 2, a, b, g).unwrap();
        let u = circuit_unitary(&c).unwrap();
        let pauli_block = {
            let two = n_gate(1, 2, a, b, g).unwrap();
            circuit_unitary(&two).unwrap()
        };
        // swap-symmetric block, so the (3,2) orientation gives the same matrix
        for col in 0..16usize {
            for row in 0..16usize {
                let other_bits_equal = (row & 0b1001) == (col & 0b1001);
                let sub = |x: usize| (x >> 1) & 0b11;
                let expected = if other_bits_equal {
                    let (r, c2) = (sub(row), sub(col));
                    // qubit 2 is bit 2 (high), qubit 3 bit 1 (low) of the pair
                    pauli_block[(r, c2)]
                } else {
                    C64::new(0.0, 0.0)
                };
                assert!((u[(row, col)] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_normalised() {
        let mut c = Circuit::new(3);
        c.ry(1, 0.7).unwrap().rx(3, 1.9).unwrap().cnot(1, 2).unwrap();
        let mut s = StateVector::product(3, &[]).unwrap();
        s.apply_circuit(&c).unwrap();
        let a = s.sample_counts(1000, 42, 3, 0.1).unwrap();
        let b = s.sample_counts(1000, 42, 3, 0.1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.values().sum::<u64>(), 1000);
        assert!(a.counts.keys().all(|k| k.len() == 3));
        assert!(close(a.time, 0.3, 1e-15));
        let c2 = s.sample_counts(1000, 43, 3, 0.1).unwrap();
        assert_ne!(a.counts, c2.counts);
        assert!(s.sample_counts(0, 1, 0, 0.1).is_err());
        let back = ShotTable::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn all_up_samples_all_zeros() {
        let s = StateVector::product(5, &[]).unwrap();
        let t = s.sample_counts(500, 7, 0, 0.1).unwrap();
        assert_eq!(t.counts.len(), 1);
        assert_eq!(t.counts["00000"], 500);
    }

    #[test]
    fn equal_superposition_frequency_within_five_sigma() {
        let mut c = Circuit::new(1);
        c.ry(1, std::f64::consts::FRAC_PI_2).unwrap();
        let mut s = StateVector::product(1, &[]).unwrap();
        s.apply_circuit(&c).unwrap();
        let shots = 1u64 << 14;
        let t = s.sample_counts(shots, 2024, 0, 0.1).unwrap();
        let freq = t.counts.get("0").copied().unwrap_or(0) as f64 / shots as f64;
        let sigma = (0.25 / shots as f64).sqrt();
        assert!((freq - 0.5).abs() <= 5.0 * sigma);
    }

    #[test]
    fn shot_table_validation() {
        let mut t = ShotTable {
            step: 0,
            time: 0.0,
            shots: 3,
            seed: 0,
            counts: BTreeMap::from([("01".to_string(), 2), ("10".to_string(), 1)]),
        };
        assert!(t.validate().is_ok());
        t.shots = 4;
        assert!(t.validate().is_err());
        t.shots = 3;
        t.counts.insert("1".into(), 0);
        assert!(t.validate().is_err());
    }

    #[test]
    fn magnetization_conserved_by_quench_circuits() {
        let profile = DeformationProfile::horizon(8, 8.0 / 7.0).unwrap();
        for delta in [0.0, 0.5, 2.0] {
            let spec = ChainSpec::new(profile.clone(), delta);
            let flips = [2, 4, 6, 8];
            let c = build_quench_circuit(&spec, &flips, 5, CircuitOptions::default()).unwrap();
            let mut s = StateVector::product(8, &[]).unwrap();
            s.apply_circuit(&c).unwrap();
            let (m, _) = s.z_moments();
            assert!(close(m.iter().sum::<f64>(), 0.0, 1e-12));
            assert!(close(s.norm_sqr(), 1.0, 1e-12));
        }
    }

    #[test]
    fn z_moments_agree_with_single_expectations() {
        let spec = ChainSpec::new(DeformationProfile::uniform(5).unwrap(), 0.5);
        let s0 = StateVector::product(5, &[1, 4]).unwrap();
        let s = exact_unitary_evolve(&spec, &s0, 0.8).unwrap();
        let (m, zz) = s.z_moments();
        for i in 1..=5 {
            assert!(close(m[i - 1], s.expectation_z(i).unwrap(), 1e-14));
            for j in 1..=5 {
                assert!(close(zz[(i - 1, j - 1)], s.expectation_zz(i, j).unwrap(), 1e-14));
            }
        }
    }
}
