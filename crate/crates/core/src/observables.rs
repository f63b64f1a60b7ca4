//! Estimators, standard errors and derived analyses of z-basis data.
//!
//! Shot-based standard errors use `δ⟨O⟩ = sqrt(Var(O)/shots)`; for Pauli
//! products `O² = 1`, so `δ = sqrt((1 − ⟨O⟩²)/shots)`. Exact (infinite-shot)
//! data carries zero standard error.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{check_site, Error, Result};
use crate::fmt::float;
use crate::freefermion::{ff_magnetization, CorrelationMatrix};
use crate::lattice::DeformationProfile;
use crate::statevector::{ShotTable, StateVector};

/// First and second z-moments of one measured (or exact) state.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    /// `None` for exact expectation values.
    pub shots: Option<u64>,
    pub magnetization: Vec<f64>,
    /// Raw `⟨σ^z_i σ^z_j⟩` (diagonal is 1).
    pub zz: DMatrix<f64>,
}

impl Moments {
    pub fn from_state(state: &StateVector) -> Self {
        let (magnetization, zz) = state.z_moments();
        Self {
            shots: None,
            magnetization,
            zz,
        }
    }

    pub fn from_correlations(g: &CorrelationMatrix) -> Self {
        let n = g.n_sites();
        let m = ff_magnetization(g);
        let gm = g.matrix();
        let zz = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else {
                m[i] * m[j] - 4.0 * gm[(i, j)].norm_sqr()
            }
        });
        Self {
            shots: None,
            magnetization: m,
            zz,
        }
    }

    /// Empirical moments of a shot table: `⟨σ^z_j⟩ = Σ p (1 − 2 n_j)`.
    pub fn from_counts(table: &ShotTable) -> Result<Self> {
        if table.shots == 0 {
            return Err(Error::InvalidArgument("shot table has zero shots".into()));
        }
        table.validate()?;
        let n = table
            .n_qubits()
            .ok_or_else(|| Error::InvalidArgument("shot table has no counts".into()))?;
        let mut m = vec![0.0; n];
        let mut zz = DMatrix::zeros(n, n);
        let mut spins = vec![0.0; n];
        for (bits, &count) in &table.counts {
            let p = count as f64 / table.shots as f64;
            for (s, c) in spins.iter_mut().zip(bits.bytes()) {
                *s = if c == b'1' { -1.0 } else { 1.0 };
            }
            for i in 0..n {
                m[i] += p * spins[i];
                for j in 0..n {
                    zz[(i, j)] += p * spins[i] * spins[j];
                }
            }
        }
        Ok(Self {
            shots: Some(table.shots),
            magnetization: m,
            zz,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.magnetization.len()
    }

    pub fn magnetization_stderr(&self) -> Vec<f64> {
        self.magnetization.iter().map(|&m| pauli_stderr(m, self.shots)).collect()
    }

    /// `C_ij = ⟨σ^z_i σ^z_j⟩ − M_i M_j`.
    pub fn connected(&self) -> DMatrix<f64> {
        let m = &self.magnetization;
        DMatrix::from_fn(self.n_sites(), self.n_sites(), |i, j| {
            self.zz[(i, j)] - m[i] * m[j]
        })
    }

    pub fn connected_stderr(&self) -> DMatrix<f64> {
        self.zz.map(|zz| pauli_stderr(zz, self.shots))
    }

    pub fn site_frame(&self, step: usize) -> SiteFrame {
        SiteFrame {
            step,
            values: self.magnetization.clone(),
            stderr: self.magnetization_stderr(),
        }
    }

    pub fn pair_frame(&self, step: usize) -> PairFrame {
        PairFrame {
            step,
            values: self.connected(),
            stderr: self.connected_stderr(),
        }
    }
}

/// `sqrt((1 − ⟨O⟩²)/shots)` for a Pauli product `O`, or 0 for exact data.
pub fn pauli_stderr(expectation: f64, shots: Option<u64>) -> f64 {
    match shots {
        Some(s) => ((1.0 - expectation * expectation).max(0.0) / s as f64).sqrt(),
        None => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteFrame {
    pub step: usize,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFrame {
    pub step: usize,
    pub values: DMatrix<f64>,
    pub stderr: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceFrame {
    pub step: usize,
    /// Separations `x`, usually `0..N`.
    pub separations: Vec<usize>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarFrame {
    pub step: usize,
    pub value: f64,
    pub stderr: f64,
}

/// Frames that know their CSV layout.
pub trait CsvFrame {
    const HEADER: &'static str;
    fn step(&self) -> usize;
    fn write_rows(&self, t: f64, out: &mut String);
}

impl CsvFrame for SiteFrame {
    const HEADER: &'static str = "step,t,site,value,stderr";

    fn step(&self) -> usize {
        self.step
    }

    fn write_rows(&self, t: f64, out: &mut String) {
        for (j, (v, e)) in self.values.iter().zip(&self.stderr).enumerate() {
            let _ = writeln!(out, "{},{},{},{},{}", self.step, float(t), j + 1, float(*v), float(*e));
        }
    }
}

impl CsvFrame for PairFrame {
    const HEADER: &'static str = "step,t,i,j,value,stderr";

    fn step(&self) -> usize {
        self.step
    }

    fn write_rows(&self, t: f64, out: &mut String) {
        let n = self.values.nrows();
        for i in 0..n {
            for j in 0..n {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    self.step,
                    float(t),
                    i + 1,
                    j + 1,
                    float(self.values[(i, j)]),
                    float(self.stderr[(i, j)])
                );
            }
        }
    }
}

impl CsvFrame for DistanceFrame {
    const HEADER: &'static str = "step,t,x,value,stderr";

    fn step(&self) -> usize {
        self.step
    }

    fn write_rows(&self, t: f64, out: &mut String) {
        for ((x, v), e) in self.separations.iter().zip(&self.values).zip(&self.stderr) {
            let _ = writeln!(out, "{},{},{},{},{}", self.step, float(t), x, float(*v), float(*e));
        }
    }
}

impl CsvFrame for ScalarFrame {
    const HEADER: &'static str = "step,t,value,stderr";

    fn step(&self) -> usize {
        self.step
    }

    fn write_rows(&self, t: f64, out: &mut String) {
        let _ = writeln!(out, "{},{},{},{}", self.step, float(t), float(self.value), float(self.stderr));
    }
}

/// Time-indexed observable; `t = step · dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<F> {
    pub name: String,
    pub backend: String,
    pub dt: f64,
    pub frames: Vec<F>,
}

pub type SiteSeries = Series<SiteFrame>;
pub type PairSeries = Series<PairFrame>;
pub type DistanceSeries = Series<DistanceFrame>;
pub type ScalarSeries = Series<ScalarFrame>;

impl<F> Series<F> {
    pub fn new(name: impl Into<String>, backend: impl Into<String>, dt: f64) -> Self {
        Self {
            name: name.into(),
            backend: backend.into(),
            dt,
            frames: Vec::new(),
        }
    }

    pub fn with_frames(mut self, frames: Vec<F>) -> Self {
        self.frames = frames;
        self
    }
}

impl<F: CsvFrame> Series<F> {
    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.step() as f64 * self.dt).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(F::HEADER);
        out.push('\n');
        for f in &self.frames {
            f.write_rows(f.step() as f64 * self.dt, &mut out);
        }
        out
    }
}

impl SiteSeries {
    /// Values of site `j` over time.
    pub fn site_trace(&self, j: usize) -> Vec<f64> {
        self.frames.iter().map(|f| f.values[j - 1]).collect()
    }
}

pub fn magnetization_from_counts(table: &ShotTable) -> Result<SiteFrame> {
    Ok(Moments::from_counts(table)?.site_frame(table.step))
}

pub fn connected_zz_from_counts(table: &ShotTable) -> Result<PairFrame> {
    Ok(Moments::from_counts(table)?.pair_frame(table.step))
}

/// `C(x) = (1/N_x) Σ_i C_{i,i+|x|}` over pairs with both sites in `window`
/// (inclusive, 1-based; whole chain if `None`). Errors add in quadrature.
pub fn distance_average(frame: &PairFrame, x: isize, window: Option<(usize, usize)>) -> Result<(f64, f64)> {
    let n = frame.values.nrows();
    let d = x.unsigned_abs();
    if d >= n {
        return Err(Error::InvalidArgument(format!("separation {x} must be below N = {n}")));
    }
    let (lo, hi) = window.unwrap_or((1, n));
    check_site(lo, n)?;
    check_site(hi, n)?;
    if hi < lo + d {
        return Err(Error::InvalidArgument(format!(
            "window [{lo}, {hi}] holds no pair at separation {d}"
        )));
    }
    let pairs = hi - lo + 1 - d;
    let (mut sum, mut var) = (0.0, 0.0);
    for i in lo..=hi - d {
        sum += frame.values[(i - 1, i - 1 + d)];
        var += frame.stderr[(i - 1, i - 1 + d)].powi(2);
    }
    Ok((sum / pairs as f64, var.sqrt() / pairs as f64))
}

/// Distance-averaged correlator for every separation `0..N` (or the window width).
pub fn distance_averaged_correlator(frame: &PairFrame, window: Option<(usize, usize)>) -> Result<DistanceFrame> {
    let n = frame.values.nrows();
    let (lo, hi) = window.unwrap_or((1, n));
    if hi < lo {
        return Err(Error::InvalidArgument(format!("empty window [{lo}, {hi}]")));
    }
    let mut out = DistanceFrame {
        step: frame.step,
        separations: Vec::new(),
        values: Vec::new(),
        stderr: Vec::new(),
    };
    for d in 0..=(hi - lo) {
        let (v, e) = distance_average(frame, d as isize, Some((lo, hi)))?;
        out.separations.push(d);
        out.values.push(v);
        out.stderr.push(e);
    }
    Ok(out)
}

/// `M_s = (1/(N−2n)) Σ_{j=n+1}^{N−n} (−1)^{j−1} M_j`, with error
/// `sqrt(Σ f_i f_j C_ij / shots)` when shot data and correlators are given.
pub fn staggered_magnetization(
    m: &SiteFrame,
    connected: Option<&PairFrame>,
    shots: Option<u64>,
    n_cut: usize,
) -> Result<ScalarFrame> {
    let n = m.values.len();
    if n < 2 * n_cut + 2 {
        return Err(Error::InvalidArgument(format!(
            "staggered window is empty: N = {n}, n_cut = {n_cut}"
        )));
    }
    let width = (n - 2 * n_cut) as f64;
    let weight = |j: usize| if j % 2 == 1 { 1.0 / width } else { -1.0 / width };
    let sites = n_cut + 1..=n - n_cut;
    let value = sites
        .clone()
        .map(|j| if j % 2 == 1 { m.values[j - 1] } else { -m.values[j - 1] })
        .sum::<f64>()
        / width;
    let stderr = match (connected, shots) {
        (Some(c), Some(shots)) => {
            let mut acc = 0.0;
            for i in sites.clone() {
                for j in sites.clone() {
                    acc += weight(i) * weight(j) * c.values[(i - 1, j - 1)];
                }
            }
            (acc.max(0.0) / shots as f64).sqrt()
        }
        _ => 0.0,
    };
    Ok(ScalarFrame {
        step: m.step,
        value,
        stderr,
    })
}

/// `G_ji(t, 0) ≈ M_j(t) M_i(0)` for product initial states.
pub fn unequal_time_proxy(m: &SiteFrame, m0: &SiteFrame) -> Result<PairFrame> {
    let n = m.values.len();
    if m0.values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m0.values.len(),
        });
    }
    let values = DMatrix::from_fn(n, n, |j, i| m.values[j] * m0.values[i]);
    let stderr = DMatrix::from_fn(n, n, |j, i| {
        (m0.values[i] * m.stderr[j]).hypot(m.values[j] * m0.stderr[i])
    });
    Ok(PairFrame {
        step: m.step,
        values,
        stderr,
    })
}

/// Background-subtraction protocols for spin-flip initial states.
#[derive(Debug, Clone, Copy)]
pub enum Subtraction<'a> {
    /// `½ |M − M_bg|`
    Single(&'a SiteSeries),
    /// `½ |M_a + M_b − 2 M_bg|`
    Pair(&'a SiteSeries, &'a SiteSeries),
}

pub fn background_subtract(mode: Subtraction<'_>, background: &SiteSeries) -> Result<SiteSeries> {
    let check = |s: &SiteSeries| -> Result<()> {
        let same_grid = s.frames.len() == background.frames.len()
            && s.frames.iter().zip(&background.frames).all(|(a, b)| {
                a.step == b.step && a.values.len() == b.values.len()
            })
            && (s.dt - background.dt).abs() <= 1e-15 * s.dt.abs().max(1.0);
        if same_grid {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "series `{}` and background `{}` are on different grids",
                s.name, background.name
            )))
        }
    };
    let frames: Vec<SiteFrame> = match mode {
        Subtraction::Single(m) => {
            check(m)?;
            m.frames
                .iter()
                .zip(&background.frames)
                .map(|(f, bg)| SiteFrame {
                    step: f.step,
                    values: f.values.iter().zip(&bg.values).map(|(a, b)| 0.5 * (a - b).abs()).collect(),
                    stderr: f.stderr.iter().zip(&bg.stderr).map(|(a, b)| 0.5 * a.hypot(*b)).collect(),
                })
                .collect()
        }
        Subtraction::Pair(a, b) => {
            check(a)?;
            check(b)?;
            a.frames
                .iter()
                .zip(&b.frames)
                .zip(&background.frames)
                .map(|((fa, fb), bg)| SiteFrame {
                    step: fa.step,
                    values: (0..fa.values.len())
                        .map(|j| 0.5 * (fa.values[j] + fb.values[j] - 2.0 * bg.values[j]).abs())
                        .collect(),
                    stderr: (0..fa.values.len())
                        .map(|j| {
                            0.5 * (fa.stderr[j].powi(2) + fb.stderr[j].powi(2) + 4.0 * bg.stderr[j].powi(2)).sqrt()
                        })
                        .collect(),
                })
                .collect()
        }
    };
    let name = match mode {
        Subtraction::Single(m) => format!("{}_minus_background", m.name),
        Subtraction::Pair(a, b) => format!("{}_plus_{}_minus_background", a.name, b.name),
    };
    Ok(Series::new(name, background.backend.clone(), background.dt).with_frames(frames))
}

/// Result of [`fit_local_frequency`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyFit {
    /// Angular frequency, `None` when fewer than two sign changes occur.
    pub omega: Option<f64>,
    /// Exponential decay time; `f64::INFINITY` when the envelope does not decay.
    pub tau: f64,
    /// RMS deviation of the zero-crossing times from a uniform spacing.
    pub residual: f64,
}

/// Zero-crossing times of a sampled series, refined by a parabola through
/// the three samples around each sign change.
pub fn zero_crossings(times: &[f64], values: &[f64]) -> Vec<f64> {
    let len = values.len();
    let mut out = Vec::new();
    for k in 0..len.saturating_sub(1) {
        let (y0, y1) = (values[k], values[k + 1]);
        if y0 == 0.0 {
            if k > 0 && values[k - 1] * y1 < 0.0 {
                out.push(times[k]);
            }
            continue;
        }
        if y0 * y1 >= 0.0 {
            continue;
        }
        let linear = times[k] - y0 * (times[k + 1] - times[k]) / (y1 - y0);
        let root = if len >= 3 {
            let i0 = k.saturating_sub(1).min(len - 3);
            parabola_root(&times[i0..i0 + 3], &values[i0..i0 + 3], times[k], times[k + 1])
        } else {
            None
        };
        out.push(root.unwrap_or(linear));
    }
    out
}

/// Lagrange parabola through three points; its root inside `[lo, hi]`.
fn parabola_root(t: &[f64], y: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let (a, b, c) = parabola(t, y);
    let inside = |r: f64| r >= lo - 1e-12 && r <= hi + 1e-12;
    if a.abs() < 1e-14 * (b.abs() + c.abs()).max(1.0) {
        return if b != 0.0 { Some(-c / b).filter(|&r| inside(r)) } else { None };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // numerically stable pair of roots
    let q = -0.5 * (b + b.signum() * sq);
    let roots = [q / a, if q != 0.0 { c / q } else { f64::NAN }];
    roots.into_iter().find(|&r| r.is_finite() && inside(r))
}

/// Coefficients `(a, b, c)` of `a t² + b t + c` through three points.
fn parabola(t: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (t0, t1, t2) = (t[0], t[1], t[2]);
    let d0 = y[0] / ((t0 - t1) * (t0 - t2));
    let d1 = y[1] / ((t1 - t0) * (t1 - t2));
    let d2 = y[2] / ((t2 - t0) * (t2 - t1));
    let a = d0 + d1 + d2;
    let b = -(d0 * (t1 + t2) + d1 * (t0 + t2) + d2 * (t0 + t1));
    let c = d0 * t1 * t2 + d1 * t0 * t2 + d2 * t0 * t1;
    (a, b, c)
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Oscillation frequency from zero-crossing spacing and decay time from a
/// log-linear fit to the oscillation peaks (or to `|y|` without oscillations).
pub fn fit_local_frequency(times: &[f64], values: &[f64]) -> Result<FrequencyFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    if values.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 samples to fit, got {}",
            values.len()
        )));
    }
    let crossings = zero_crossings(times, values);
    let (omega, residual) = if crossings.len() >= 2 {
        let idx: Vec<f64> = (0..crossings.len()).map(|k| k as f64).collect();
        let (half_period, _, rms) = linear_fit(&idx, &crossings);
        (Some(std::f64::consts::PI / half_period), rms)
    } else {
        (None, 0.0)
    };
    let peaks = oscillation_peaks(times, values, &crossings);
    let (xs, ys): (Vec<f64>, Vec<f64>) = if peaks.len() >= 2 {
        peaks.into_iter().map(|(t, a)| (t, a.ln())).unzip()
    } else {
        times
            .iter()
            .zip(values)
            .filter(|(_, y)| y.abs() > 1e-12)
            .map(|(t, y)| (*t, y.abs().ln()))
            .unzip()
    };
    let tau = if xs.len() >= 2 {
        let (slope, _, _) = linear_fit(&xs, &ys);
        if slope < 0.0 {
            -1.0 / slope
        } else {
            f64::INFINITY
        }
    } else {
        f64::INFINITY
    };
    Ok(FrequencyFit {
        omega,
        tau,
        residual,
    })
}

/// Largest `|y|` within each lobe between crossings; the trailing lobe is
/// skipped because it is cut off by the end of the window.
fn oscillation_peaks(times: &[f64], values: &[f64], crossings: &[f64]) -> Vec<(f64, f64)> {
    if crossings.is_empty() {
        return Vec::new();
    }
    let mut bounds = vec![times[0] - 1e-12];
    bounds.extend_from_slice(crossings);
    let mut peaks = Vec::new();
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let Some(k) = (0..values.len())
            .filter(|&k| times[k] > lo && times[k] < hi)
            .max_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs()))
        else {
            continue;
        };
        let amp = |i: usize| values[i].abs();
        if k == 0 {
            peaks.push((times[0], amp(0)));
        } else if k + 1 < values.len() {
            let ts = [times[k - 1], times[k], times[k + 1]];
            let ys = [amp(k - 1), amp(k), amp(k + 1)];
            let (a, b, c) = parabola(&ts, &ys);
            if a < 0.0 {
                let tv = (-b / (2.0 * a)).clamp(ts[0], ts[2]);
                peaks.push((tv, (a * tv * tv + b * tv + c).max(amp(k))));
            } else {
                peaks.push((times[k], amp(k)));
            }
        }
    }
    peaks.retain(|&(_, a)| a > 0.0);
    peaks
}

/// Number of strict sign changes, ignoring exact zeros.
pub fn sign_changes(values: &[f64]) -> usize {
    let signs: Vec<f64> = values.iter().filter(|v| **v != 0.0).map(|v| v.signum()).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Spread of a set of curves before and after rescaling time by `|v|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseSpread {
    pub raw: f64,
    pub rescaled: f64,
}

/// Mean over a common grid of the standard deviation across curves, in raw
/// time and in rescaled time `τ = |v| t`. Curves share the sample `times`.
pub fn collapse_spread(times: &[f64], curves: &[(f64, Vec<f64>)]) -> Result<CollapseSpread> {
    if curves.len() < 2 {
        return Err(Error::InvalidArgument("collapse needs at least two curves".into()));
    }
    if times.len() < 2 || curves.iter().any(|(_, c)| c.len() != times.len()) {
        return Err(Error::InvalidArgument("curves must match the time grid".into()));
    }
    if curves.iter().any(|(v, _)| !(v.abs() > 0.0)) {
        return Err(Error::InvalidArgument("rescaling velocity must be nonzero".into()));
    }
    let raw_rows: Vec<Vec<f64>> = (0..times.len())
        .map(|k| curves.iter().map(|(_, c)| c[k]).collect())
        .collect();
    let raw = mean_std(&raw_rows);

    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    let min_step = times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let vmin = curves.iter().map(|(v, _)| v.abs()).fold(f64::INFINITY, f64::min);
    let tau_max = vmin * span;
    let h = vmin * min_step;
    if !(tau_max > 0.0) {
        return Err(Error::InvalidArgument("rescaled domains do not overlap".into()));
    }
    let points = (tau_max / h + 1e-9).floor() as usize + 1;
    let rows: Vec<Vec<f64>> = (0..points)
        .map(|k| {
            let tau = (k as f64 * h).min(tau_max);
            curves
                .iter()
                .map(|(v, c)| interpolate(times, c, t0 + tau / v.abs()))
                .collect()
        })
        .collect();
    Ok(CollapseSpread {
        raw,
        rescaled: mean_std(&rows),
    })
}

/// Collapse of the magnetization curves of `sites`, each normalised by its
/// initial value and rescaled with the local velocity `|v(j)|`.
pub fn collapse_metric(
    series: &SiteSeries,
    sites: &[usize],
    profile: &DeformationProfile,
) -> Result<CollapseSpread> {
    if sites.len() < 2 {
        return Err(Error::InvalidArgument("collapse needs at least two sites".into()));
    }
    let horizons = profile.horizons();
    let n = profile.n_sites();
    let mut curves = Vec::with_capacity(sites.len());
    for &j in sites {
        check_site(j, n)?;
        let x = j as f64;
        let left = horizons.iter().filter(|&&h| h < x).count();
        if left % 2 == 0 && !horizons.is_empty() {
            return Err(Error::InvalidArgument(format!("site {j} is not between horizons")));
        }
        let trace = series.site_trace(j);
        let sign = if trace[0] < 0.0 { -1.0 } else { 1.0 };
        curves.push((profile.velocity_at(x), trace.into_iter().map(|y| sign * y).collect()));
    }
    collapse_spread(&series.times(), &curves)
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&a| a <= x);
    if k == 0 {
        return ys[0];
    }
    if k >= xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    ys[k - 1] + (ys[k] - ys[k - 1]) * (x - x0) / (x1 - x0)
}

fn mean_std(rows: &[Vec<f64>]) -> f64 {
    let total: f64 = rows
        .iter()
        .map(|r| {
            let n = r.len() as f64;
            let mean = r.iter().sum::<f64>() / n;
            (r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
        })
        .sum();
    total / rows.len() as f64
}

/// Outermost sites left and right of `origin` whose `|C_{origin,j}|` reaches
/// `threshold`; the origin itself when none does.
pub fn correlation_front(frame: &PairFrame, origin: usize, threshold: f64) -> Result<(usize, usize)> {
    let n = frame.values.nrows();
    check_site(origin, n)?;
    let hit = |j: usize| frame.values[(origin - 1, j - 1)].abs() >= threshold;
    let left = (1..origin).find(|&j| hit(j)).unwrap_or(origin);
    let right = (origin + 1..=n).rev().find(|&j| hit(j)).unwrap_or(origin);
    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn table(entries: &[(&str, u64)]) -> ShotTable {
        let counts: BTreeMap<String, u64> = entries.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        ShotTable {
            step: 2,
            time: 0.2,
            shots: counts.values().sum(),
            seed: 0,
            counts,
        }
    }

    #[test]
    fn all_zero_counts_give_unit_magnetization() {
        let f = magnetization_from_counts(&table(&[("000", 100)])).unwrap();
        assert_eq!(f.values, vec![1.0; 3]);
        assert_eq!(f.stderr, vec![0.0; 3]);
        assert_eq!(f.step, 2);
    }

    #[test]
    fn maximal_standard_error() {
        let half = 1u64 << 13;
        let f = magnetization_from_counts(&table(&[("0", half), ("1", half)])).unwrap();
        assert_eq!(f.values[0], 0.0);
        assert_eq!(f.stderr[0], 0.0078125);
    }

    #[test]
    fn zero_shots_is_an_error() {
        let t = ShotTable {
            step: 0,
            time: 0.0,
            shots: 0,
            seed: 0,
            counts: BTreeMap::new(),
        };
        assert!(magnetization_from_counts(&t).is_err());
        assert!(connected_zz_from_counts(&t).is_err());
    }

    #[test]
    fn connected_diagonal_is_one_minus_m_squared() {
        let f = connected_zz_from_counts(&table(&[("01", 30), ("10", 50), ("00", 20)])).unwrap();
        let m = magnetization_from_counts(&table(&[("01", 30), ("10", 50), ("00", 20)])).unwrap();
        for j in 0..2 {
            assert!((f.values[(j, j)] - (1.0 - m.values[j].powi(2))).abs() < 1e-15);
        }
        assert_eq!(f.values[(0, 1)], f.values[(1, 0)]);
    }

    fn pair_frame(n: usize, f: impl Fn(usize, usize) -> f64) -> PairFrame {
        PairFrame {
            step: 0,
            values: DMatrix::from_fn(n, n, |i, j| f(i, j)),
            stderr: DMatrix::zeros(n, n),
        }
    }

    #[test]
    fn distance_average_counts_pairs() {
        let frame = pair_frame(6, |i, j| (i * 10 + j) as f64);
        let (v0, _) = distance_average(&frame, 0, None).unwrap();
        let diag_mean = (0..6).map(|i| (i * 11) as f64).sum::<f64>() / 6.0;
        assert!((v0 - diag_mean).abs() < 1e-12);
        let (v2, _) = distance_average(&frame, 2, None).unwrap();
        let expected = (0..4).map(|i| (i * 10 + i + 2) as f64).sum::<f64>() / 4.0;
        assert!((v2 - expected).abs() < 1e-12);
        assert!(distance_average(&frame, 6, None).is_err());
        let sym = pair_frame(6, |i, j| ((i as f64) - (j as f64)).abs().sin() + (i + j) as f64);
        assert_eq!(distance_average(&sym, 3, None).unwrap(), distance_average(&sym, -3, None).unwrap());
        let all = distance_averaged_correlator(&frame, Some((2, 5))).unwrap();
        assert_eq!(all.separations, vec![0, 1, 2, 3]);
    }

    #[test]
    fn staggered_magnetization_cases() {
        let neel = SiteFrame {
            step: 0,
            values: (1..=24).map(|j| if j % 2 == 1 { 1.0 } else { -1.0 }).collect(),
            stderr: vec![0.0; 24],
        };
        assert_eq!(staggered_magnetization(&neel, None, None, 9).unwrap().value, 1.0);
        let up = SiteFrame {
            step: 0,
            values: vec![1.0; 24],
            stderr: vec![0.0; 24],
        };
        assert!(staggered_magnetization(&up, None, None, 9).unwrap().value.abs() < 1e-15);
        assert!(staggered_magnetization(&up, None, None, 12).is_err());
        assert!(staggered_magnetization(&up, None, None, 11).is_ok());
    }

    #[test]
    fn staggered_error_uses_weighted_covariance() {
        // independent sites with unit variance: error = sqrt(Σ f_j² / shots)
        let n = 6;
        let m = SiteFrame {
            step: 0,
            values: vec![0.0; n],
            stderr: vec![0.0; n],
        };
        let c = pair_frame(n, |i, j| if i == j { 1.0 } else { 0.0 });
        let s = staggered_magnetization(&m, Some(&c), Some(100), 1).unwrap();
        let expected = (4.0 * (1.0f64 / 4.0).powi(2) / 100.0).sqrt();
        assert!((s.stderr - expected).abs() < 1e-15);
    }

    #[test]
    fn proxy_is_outer_product() {
        let m = SiteFrame {
            step: 1,
            values: vec![0.5, -0.25, 0.75],
            stderr: vec![0.0; 3],
        };
        let up = SiteFrame {
            step: 0,
            values: vec![1.0; 3],
            stderr: vec![0.0; 3],
        };
        let p = unequal_time_proxy(&m, &up).unwrap();
        for j in 0..3 {
            for i in 0..3 {
                assert_eq!(p.values[(j, i)], m.values[j]);
            }
        }
        let flipped = SiteFrame {
            values: vec![1.0, -1.0, 1.0],
            ..up.clone()
        };
        let q = unequal_time_proxy(&m, &flipped).unwrap();
        for j in 0..3 {
            assert_eq!(q.values[(j, 1)], -p.values[(j, 1)]);
            assert_eq!(q.values[(j, 0)], p.values[(j, 0)]);
        }
    }

    fn site_series(name: &str, rows: Vec<Vec<f64>>) -> SiteSeries {
        let frames = rows
            .into_iter()
            .enumerate()
            .map(|(s, values)| SiteFrame {
                step: s,
                stderr: vec![0.0; values.len()],
                values,
            })
            .collect();
        Series::new(name, "test", 0.1).with_frames(frames)
    }

    #[test]
    fn background_subtraction_modes() {
        let up = site_series("up", vec![vec![1.0; 3]; 2]);
        let zero = background_subtract(Subtraction::Single(&up), &up).unwrap();
        assert!(zero.frames.iter().all(|f| f.values.iter().all(|v| *v == 0.0)));
        let a = site_series("a", vec![vec![-1.0, 1.0, 1.0], vec![0.2, 0.9, 1.0]]);
        let b = site_series("b", vec![vec![1.0, 1.0, -1.0], vec![1.0, 0.7, 0.1]]);
        let r = background_subtract(Subtraction::Pair(&a, &b), &up).unwrap();
        assert_eq!(r.frames[0].values, vec![1.0, 0.0, 1.0]);
        let short = site_series("s", vec![vec![1.0; 3]]);
        assert!(background_subtract(Subtraction::Single(&short), &up).is_err());
    }

    #[test]
    fn synthetic_damped_cosine_fit() {
        let times: Vec<f64> = (0..1000).map(|k| k as f64 * 0.01).collect();
        let values: Vec<f64> = times.iter().map(|t| (-t / 2.0).exp() * (5.0 * t).cos()).collect();
        let fit = fit_local_frequency(&times, &values).unwrap();
        let omega = fit.omega.unwrap();
        assert!((omega - 5.0).abs() <= 0.02 * 5.0, "{omega}");
        assert!((fit.tau - 2.0).abs() <= 0.05 * 2.0, "{}", fit.tau);
    }

    #[test]
    fn constant_series_has_no_frequency() {
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let fit = fit_local_frequency(&times, &vec![0.7; 20]).unwrap();
        assert_eq!(fit.omega, None);
        assert_eq!(fit.tau, f64::INFINITY);
        assert!(fit_local_frequency(&times[..2], &[1.0, 0.5]).is_err());
    }

    #[test]
    fn pure_decay_gives_tau_from_log_fit() {
        let times: Vec<f64> = (0..30).map(|k| k as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t| -(-t / 0.8f64).exp()).collect();
        let fit = fit_local_frequency(&times, &values).unwrap();
        assert!((fit.tau - 0.8).abs() < 1e-9);
    }

    #[test]
    fn collapse_of_scaled_cosines() {
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.01).collect();
        let curves: Vec<(f64, Vec<f64>)> = [0.5, 0.8, 1.3]
            .iter()
            .map(|&v| (v, times.iter().map(|t| (v * t).cos()).collect()))
            .collect();
        let s = collapse_spread(&times, &curves).unwrap();
        assert!(s.raw > 0.01);
        assert!(s.rescaled < 1e-4, "{}", s.rescaled);
        let same: Vec<(f64, Vec<f64>)> = vec![(1.0, curves[0].1.clone()), (2.0, curves[0].1.clone())];
        let s = collapse_spread(&times, &[same[0].clone(), (1.0, curves[0].1.clone())]).unwrap();
        assert_eq!((s.raw, s.rescaled), (0.0, 0.0));
        assert!(collapse_spread(&times, &same[..1]).is_err());
    }

    #[test]
    fn sign_change_counting() {
        assert_eq!(sign_changes(&[1.0, 0.5, -0.1, 0.0, -0.2, 0.3]), 2);
        assert_eq!(sign_changes(&[1.0, 0.9, 0.8]), 0);
    }

    #[test]
    fn csv_headers() {
        let s: SiteSeries = Series::new("m", "statevector", 0.1).with_frames(vec![SiteFrame {
            step: 3,
            values: vec![0.5],
            stderr: vec![0.0],
        }]);
        let csv = s.to_csv();
        assert!(csv.starts_with("step,t,site,value,stderr\n"));
        assert!(csv.ends_with('\n'));
        assert!(csv.contains("3,0.30000000000000004,1,0.5,0\n"));
    }
}
