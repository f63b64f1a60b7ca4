//! Gate-level Trotter circuits for the deformed XXZ chain.
//!
//! Rotations follow `R_a(θ) = exp(−iθσ^a/2)`. A [`Circuit`] lists gates in
//! application order: the first gate acts on the state first. Qubit `j`
//! carries chain site `j` (1-based).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{check_site, Error, Result};
use crate::fmt::float;
use crate::lattice::DeformationProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum Gate {
    Rx { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    X { qubit: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }

    /// Qubits touched by the gate; the second entry is set for CNOT targets.
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::Rx { qubit, .. } | Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } | Gate::X { qubit } => {
                (qubit, None)
            }
            Gate::Cnot { control, target } => (control, Some(target)),
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let (a, b) = self.qubits();
        check_site(a, n_qubits)?;
        if let Some(b) = b {
            check_site(b, n_qubits)?;
            if a == b {
                return Err(Error::InvalidArgument(format!(
                    "CNOT control and target coincide on qubit {a}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    /// Phase `φ` such that the intended operator is `e^{iφ}` times the gate product.
    global_phase: f64,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
            global_phase: 0.0,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn rx(&mut self, qubit: usize, angle: f64) -> Result<&mut Self> {
        self.push(Gate::Rx { qubit, angle })
    }

    pub fn ry(&mut self, qubit: usize, angle: f64) -> Result<&mut Self> {
        self.push(Gate::Ry { qubit, angle })
    }

    pub fn rz(&mut self, qubit: usize, angle: f64) -> Result<&mut Self> {
        self.push(Gate::Rz { qubit, angle })
    }

    pub fn x(&mut self, qubit: usize) -> Result<&mut Self> {
        self.push(Gate::X { qubit })
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.push(Gate::Cnot { control, target })
    }

    /// Appends every gate of `other` after the gates of `self`.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits > self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        self.gates.extend_from_slice(&other.gates);
        self.global_phase += other.global_phase;
        Ok(())
    }

    /// `exp(i(α XX + β YY + γ ZZ))` on qubits `j1`, `j2` with three CNOTs.
    pub fn push_n_gate(&mut self, j1: usize, j2: usize, alpha: f64, beta: f64, gamma: f64) -> Result<()> {
        distinct(j1, j2)?;
        self.rz(j2, -FRAC_PI_2)?
            .cnot(j2, j1)?
            .rz(j1, FRAC_PI_2 - 2.0 * gamma)?
            .ry(j2, 2.0 * alpha - FRAC_PI_2)?
            .cnot(j1, j2)?
            .ry(j2, FRAC_PI_2 - 2.0 * beta)?
            .cnot(j2, j1)?
            .rz(j1, FRAC_PI_2)?;
        self.global_phase += FRAC_PI_4;
        Ok(())
    }

    /// `exp(i(α XX + β YY))` on qubits `j1`, `j2` with two CNOTs: the XZ
    /// Ising block conjugated by `R_x(±π/2)` frame rotations.
    pub fn push_xy_gate(&mut self, j1: usize, j2: usize, alpha: f64, beta: f64) -> Result<()> {
        distinct(j1, j2)?;
        self.rx(j1, FRAC_PI_2)?.rx(j2, FRAC_PI_2)?;
        self.push_xz_core(j1, j2, alpha, beta)?;
        self.rx(j1, -FRAC_PI_2)?.rx(j2, -FRAC_PI_2)?;
        Ok(())
    }

    /// `exp(i(α XX + γ ZZ))`: the two-CNOT core of [`push_xy_gate`](Self::push_xy_gate).
    fn push_xz_core(&mut self, j1: usize, j2: usize, alpha: f64, gamma: f64) -> Result<()> {
        self.cnot(j2, j1)?
            .rz(j1, -2.0 * gamma)?
            .rx(j2, -2.0 * alpha)?
            .cnot(j2, j1)?;
        Ok(())
    }

    pub fn stats(&self) -> CircuitStats {
        circuit_stats(self)
    }

    pub fn to_openqasm(&self) -> String {
        export_openqasm(self)
    }
}

fn distinct(j1: usize, j2: usize) -> Result<()> {
    if j1 == j2 {
        return Err(Error::InvalidArgument(format!(
            "two-qubit block needs distinct qubits, got {j1} twice"
        )));
    }
    Ok(())
}

/// Standalone three-CNOT block on a register just wide enough for `j1`, `j2`.
pub fn n_gate(j1: usize, j2: usize, alpha: f64, beta: f64, gamma: f64) -> Result<Circuit> {
    let mut c = Circuit::new(j1.max(j2));
    c.push_n_gate(j1, j2, alpha, beta, gamma)?;
    Ok(c)
}

/// Standalone two-CNOT XY block on a register just wide enough for `j1`, `j2`.
pub fn xy_gate(j1: usize, j2: usize, alpha: f64, beta: f64) -> Result<Circuit> {
    let mut c = Circuit::new(j1.max(j2));
    c.push_xy_gate(j1, j2, alpha, beta)?;
    Ok(c)
}

/// Deformed XXZ chain `H = J Σ_j v_j [XX + YY + Δ ZZ]` and its Trotter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub profile: DeformationProfile,
    pub delta: f64,
    pub coupling: f64,
    pub dt: f64,
    pub steps: usize,
}

impl ChainSpec {
    /// Defaults `J = 1`, `δt = 0.1`, 20 steps.
    pub fn new(profile: DeformationProfile, delta: f64) -> Self {
        Self {
            profile,
            delta,
            coupling: 1.0,
            dt: 0.1,
            steps: 20,
        }
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn n_sites(&self) -> usize {
        self.profile.n_sites()
    }

    pub fn is_free(&self) -> bool {
        self.delta == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.delta.is_finite() || !self.coupling.is_finite() {
            return Err(Error::Config("delta and J must be finite".into()));
        }
        Ok(())
    }

    /// Effective coupling `J·v_j` of bond `j`.
    pub fn bond_coupling(&self, j: usize) -> f64 {
        self.coupling * self.profile.bond(j)
    }
}

/// Options for circuit construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitOptions {
    /// Use the two-CNOT XY block when `Δ = 0`.
    pub xy_optimize: bool,
}

impl Default for CircuitOptions {
    fn default() -> Self {
        Self { xy_optimize: true }
    }
}

/// One first-order Trotter step: every odd bond, then every even bond.
pub fn trotter_step(spec: &ChainSpec, options: CircuitOptions) -> Result<Circuit> {
    spec.validate()?;
    let n = spec.n_sites();
    let mut c = Circuit::new(n);
    let use_xy = spec.is_free() && options.xy_optimize;
    for parity in [1usize, 0] {
        for j in (1..n).filter(|j| j % 2 == parity) {
            let angle = -spec.dt * spec.bond_coupling(j);
            if use_xy {
                c.push_xy_gate(j, j + 1, angle, angle)?;
            } else {
                c.push_n_gate(j, j + 1, angle, angle, angle * spec.delta)?;
            }
        }
    }
    Ok(c)
}

/// X gates on `flips` followed by `steps` Trotter layers. In the XY path the
/// frame rotations between consecutive sublayers cancel, leaving one opening
/// `R_x(π/2)` layer and one closing `R_x(−π/2)` layer.
pub fn build_quench_circuit(
    spec: &ChainSpec,
    flips: &[usize],
    steps: usize,
    options: CircuitOptions,
) -> Result<Circuit> {
    spec.validate()?;
    if steps > spec.steps {
        return Err(Error::Config(format!(
            "requested {steps} steps but the chain spec allows {}",
            spec.steps
        )));
    }
    let n = spec.n_sites();
    let mut c = Circuit::new(n);
    for &f in flips {
        c.x(f)?;
    }
    if steps == 0 {
        return Ok(c);
    }
    let layer = trotter_step(spec, options)?;
    for _ in 0..steps {
        c.append(&layer)?;
    }
    if spec.is_free() && options.xy_optimize {
        c = cancel_inverse_rx(&c);
    }
    Ok(c)
}

/// Removes pairs `R_x(θ) R_x(−θ)` that are adjacent on the same qubit,
/// repeatedly, so nested pairs also vanish.
pub fn cancel_inverse_rx(circuit: &Circuit) -> Circuit {
    let mut slots: Vec<Option<Gate>> = Vec::with_capacity(circuit.len());
    // per-qubit stack of indices into `slots` of gates still alive on that qubit
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); circuit.n_qubits + 1];
    for &gate in circuit.gates() {
        if let Gate::Rx { qubit, angle } = gate {
            if let Some(&top) = stacks[qubit].last() {
                if let Some(Gate::Rx { angle: prev, .. }) = slots[top] {
                    if (prev + angle).abs() <= 1e-15 {
                        slots[top] = None;
                        stacks[qubit].pop();
                        continue;
                    }
                }
            }
        }
        let idx = slots.len();
        slots.push(Some(gate));
        let (a, b) = gate.qubits();
        stacks[a].push(idx);
        if let Some(b) = b {
            stacks[b].push(idx);
        }
    }
    Circuit {
        n_qubits: circuit.n_qubits,
        gates: slots.into_iter().flatten().collect(),
        global_phase: circuit.global_phase,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitStats {
    pub cnot_count: usize,
    pub single_qubit_count: usize,
    /// Longest chain of gates linked through shared qubits.
    pub depth: usize,
}

pub fn circuit_stats(circuit: &Circuit) -> CircuitStats {
    let mut level = vec![0usize; circuit.n_qubits + 1];
    let mut stats = CircuitStats::default();
    for gate in circuit.gates() {
        let (a, b) = gate.qubits();
        match b {
            Some(b) => {
                stats.cnot_count += 1;
                let d = level[a].max(level[b]) + 1;
                level[a] = d;
                level[b] = d;
            }
            None => {
                stats.single_qubit_count += 1;
                level[a] += 1;
            }
        }
    }
    stats.depth = level.into_iter().max().unwrap_or(0);
    stats
}

/// OpenQASM 2.0 text over a single register `q`; site `j` maps to `q[j-1]`.
pub fn export_openqasm(circuit: &Circuit) -> String {
    let mut s = String::new();
    s.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    s.push_str("// site j is stored in q[j-1]\n");
    let _ = writeln!(s, "// global phase {}", float(circuit.global_phase));
    let _ = writeln!(s, "qreg q[{}];", circuit.n_qubits);
    for gate in circuit.gates() {
        let _ = match *gate {
            Gate::Rx { qubit, angle } => writeln!(s, "rx({}) q[{}];", float(angle), qubit - 1),
            Gate::Ry { qubit, angle } => writeln!(s, "ry({}) q[{}];", float(angle), qubit - 1),
            Gate::Rz { qubit, angle } => writeln!(s, "rz({}) q[{}];", float(angle), qubit - 1),
            Gate::X { qubit } => writeln!(s, "x q[{}];", qubit - 1),
            Gate::Cnot { control, target } => {
                writeln!(s, "cx q[{}],q[{}];", control - 1, target - 1)
            }
        };
    }
    s
}
