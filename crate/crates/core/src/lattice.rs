//! Deformation profiles and light-cone geodesics of the emergent metric.
//!
//! A profile assigns a dimensionless velocity factor `v_j` to every bond
//! `j = 1..N-1`. The continuous velocity `v(x)` is the piecewise-linear
//! interpolation of the bond values, with bond `j` anchored at the midpoint
//! `x = j + 1/2` and constant extrapolation towards the chain ends.
//! Lightlike geodesics satisfy `dx/dt = ±front_speed · |v(x)|`, so the travel
//! time between two coordinates is `(1/front_speed) ∫ dx / |v(x)|`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::float;

/// Below this magnitude the velocity is treated as a horizon.
pub const V_FLOOR: f64 = 1e-9;

/// Default front speed of correlation fronts (twice the quasiparticle speed `4J`).
pub const DEFAULT_FRONT_SPEED: f64 = 8.0;

/// Default trapezoid resolution per lattice cell.
pub const DEFAULT_POINTS_PER_CELL: usize = 64;

/// Trapezoid error allowed per linear segment at the default resolution.
const SEGMENT_ERROR_BUDGET: f64 = 1e-10;
const MAX_SEGMENT_POINTS: f64 = 4_194_304.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    Uniform,
    /// Sine-product profile with two Rindler horizons near sites
    /// `j_star + 1` and `N + 1 - j_star`.
    Horizon { j_star: f64 },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeformationProfile {
    n_sites: usize,
    bond_values: Vec<f64>,
    kind: ProfileKind,
}

impl DeformationProfile {
    pub fn uniform(n_sites: usize) -> Result<Self> {
        check_n(n_sites)?;
        Ok(Self {
            n_sites,
            bond_values: vec![1.0; n_sites - 1],
            kind: ProfileKind::Uniform,
        })
    }

    /// `v_j = sin(π(j−1−j*)/N) · sin(π(j−1+j*)/N) / sin(2π j*/N)`.
    pub fn horizon(n_sites: usize, j_star: f64) -> Result<Self> {
        check_n(n_sites)?;
        let n = n_sites as f64;
        if !(j_star.is_finite() && j_star > 0.0 && j_star < n / 2.0) {
            return Err(Error::Config(format!(
                "j_star must satisfy 0 < j_star < N/2 = {}, got {j_star}",
                n / 2.0
            )));
        }
        let denom = (2.0 * PI * j_star / n).sin();
        let bond_values = (1..n_sites)
            .map(|j| {
                let shifted = j as f64 - 1.0;
                (PI * (shifted - j_star) / n).sin() * (PI * (shifted + j_star) / n).sin() / denom
            })
            .collect();
        Ok(Self {
            n_sites,
            bond_values,
            kind: ProfileKind::Horizon { j_star },
        })
    }

    /// Caller-supplied bond values; the chain has `values.len() + 1` sites.
    pub fn custom(bond_values: Vec<f64>) -> Result<Self> {
        if bond_values.is_empty() {
            return Err(Error::Config("custom profile needs at least one bond".into()));
        }
        if let Some(bad) = bond_values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("bond {} is not finite", bad + 1)));
        }
        Ok(Self {
            n_sites: bond_values.len() + 1,
            bond_values,
            kind: ProfileKind::Custom,
        })
    }

    /// Dispatches on `kind`; `Custom` requires `values`.
    pub fn build(kind: ProfileKind, n_sites: usize, values: Option<Vec<f64>>) -> Result<Self> {
        match kind {
            ProfileKind::Uniform => Self::uniform(n_sites),
            ProfileKind::Horizon { j_star } => Self::horizon(n_sites, j_star),
            ProfileKind::Custom => {
                let values =
                    values.ok_or_else(|| Error::Config("custom profile needs bond values".into()))?;
                if values.len() + 1 != n_sites {
                    return Err(Error::Config(format!(
                        "custom profile has {} bonds but N = {n_sites}",
                        values.len()
                    )));
                }
                Self::custom(values)
            }
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn bond_values(&self) -> &[f64] {
        &self.bond_values
    }

    /// Value of bond `j` (1-based).
    pub fn bond(&self, j: usize) -> f64 {
        self.bond_values[j - 1]
    }

    fn anchor(bond: usize) -> f64 {
        bond as f64 + 0.5
    }

    /// Interpolated velocity at coordinate `x`.
    pub fn velocity_at(&self, x: f64) -> f64 {
        let nb = self.bond_values.len();
        let first = Self::anchor(1);
        let last = Self::anchor(nb);
        if x <= first {
            return self.bond_values[0];
        }
        if x >= last {
            return self.bond_values[nb - 1];
        }
        let k = (x - first).floor() as usize;
        let k = k.min(nb - 2);
        let frac = x - Self::anchor(k + 1);
        let (a, b) = (self.bond_values[k], self.bond_values[k + 1]);
        a + (b - a) * frac
    }

    /// Coordinates in `[1, N]` where the interpolated velocity vanishes.
    pub fn horizons(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        let push = |x: f64, out: &mut Vec<f64>| {
            if out.last().is_none_or(|last| (x - last).abs() > 1e-12) {
                out.push(x);
            }
        };
        let nb = self.bond_values.len();
        if self.bond_values[0].abs() <= V_FLOOR {
            push(1.0, &mut out);
        }
        for k in 0..nb {
            let a = self.bond_values[k];
            if a.abs() <= V_FLOOR {
                push(Self::anchor(k + 1), &mut out);
            }
            if k + 1 < nb {
                let b = self.bond_values[k + 1];
                if a.abs() > V_FLOOR && b.abs() > V_FLOOR && a.signum() != b.signum() {
                    push(Self::anchor(k + 1) + a / (a - b), &mut out);
                }
            }
        }
        if self.bond_values[nb - 1].abs() <= V_FLOOR {
            push(self.n_sites as f64, &mut out);
        }
        out
    }

    /// Horizon coordinates `j_star + 1` and `N + 1 − j_star` of the analytic
    /// profile, if this is a horizon profile.
    pub fn nominal_horizons(&self) -> Option<(f64, f64)> {
        match self.kind {
            ProfileKind::Horizon { j_star } => {
                Some((j_star + 1.0, self.n_sites as f64 + 1.0 - j_star))
            }
            _ => None,
        }
    }

    /// `bond,v` CSV with one row per bond.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bond,v\n");
        for (j, v) in self.bond_values.iter().enumerate() {
            let _ = writeln!(s, "{},{}", j + 1, float(*v));
        }
        s
    }

    /// Reads the format written by [`to_csv`](Self::to_csv) as a custom profile.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "bond,v" => {}
            other => return Err(Error::Parse(format!("expected header `bond,v`, got {other:?}"))),
        }
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            let (bond, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("malformed row `{line}`")))?;
            let bond: usize = bond
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bond index `{bond}`: {e}")))?;
            if bond != row + 1 {
                return Err(Error::Parse(format!("expected bond {}, got {bond}", row + 1)));
            }
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bond value `{v}`: {e}")))?;
            values.push(v);
        }
        Self::custom(values)
    }

    fn check_coordinate(&self, x: f64) -> Result<()> {
        if !(x >= 1.0 && x <= self.n_sites as f64) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {x} outside [1, {}]",
                self.n_sites
            )));
        }
        Ok(())
    }

    /// Breakpoints of the piecewise-linear velocity strictly inside `(a, b)`.
    fn breakpoints(&self, a: f64, b: f64) -> impl Iterator<Item = f64> {
        let nb = self.bond_values.len();
        (1..=nb).map(Self::anchor).filter(move |&x| x > a && x < b)
    }
}

fn check_n(n_sites: usize) -> Result<()> {
    if n_sites < 2 {
        return Err(Error::Config(format!("need N >= 2 sites, got {n_sites}")));
    }
    Ok(())
}

/// Travel-time integrator for lightlike geodesics of a profile.
#[derive(Debug, Clone, Copy)]
pub struct Geodesics<'a> {
    profile: &'a DeformationProfile,
    front_speed: f64,
    points_per_cell: usize,
}

impl<'a> Geodesics<'a> {
    pub fn new(profile: &'a DeformationProfile) -> Self {
        Self {
            profile,
            front_speed: DEFAULT_FRONT_SPEED,
            points_per_cell: DEFAULT_POINTS_PER_CELL,
        }
    }

    pub fn with_front_speed(mut self, front_speed: f64) -> Self {
        self.front_speed = front_speed;
        self
    }

    pub fn with_points_per_cell(mut self, points: usize) -> Self {
        self.points_per_cell = points.max(1);
        self
    }

    /// Travel time between coordinates `from` and `to`, or `None` when the
    /// path touches a point with `|v| ≤ V_FLOOR`.
    pub fn time_between(&self, from: f64, to: f64) -> Result<Option<f64>> {
        self.profile.check_coordinate(from)?;
        self.profile.check_coordinate(to)?;
        if !(self.front_speed > 0.0) {
            return Err(Error::InvalidArgument("front_speed must be positive".into()));
        }
        let (a, b) = if from <= to { (from, to) } else { (to, from) };
        if a == b {
            return Ok(if self.profile.velocity_at(a).abs() <= V_FLOOR {
                None
            } else {
                Some(0.0)
            });
        }
        let mut total = 0.0;
        let mut left = a;
        for right in self.profile.breakpoints(a, b).chain(std::iter::once(b)) {
            match self.segment_integral(left, right) {
                Some(v) => total += v,
                None => return Ok(None),
            }
            left = right;
        }
        Ok(Some(total / self.front_speed))
    }

    /// Trapezoid nodes for a linear segment: at least `points_per_cell` per
    /// unit length, more where the curvature of `1/|v|` would push the
    /// error bound `L³ max|f''| / 12n²` past the budget. Both terms scale
    /// with `points_per_cell`, so doubling it doubles the grid.
    fn segment_points(&self, a: f64, b: f64, va: f64, vb: f64) -> usize {
        let len = (b - a).abs();
        let ppc = self.points_per_cell as f64;
        let base = (len * ppc).ceil().max(1.0);
        let vmin = va.abs().min(vb.abs());
        let slope = (vb - va) / (b - a);
        let curvature = 2.0 * slope * slope / vmin.powi(3);
        let budget = SEGMENT_ERROR_BUDGET * (DEFAULT_POINTS_PER_CELL as f64 / ppc).powi(2);
        let needed = (len.powi(3) * curvature / (12.0 * budget)).sqrt().ceil();
        base.max(needed).min(MAX_SEGMENT_POINTS * ppc / DEFAULT_POINTS_PER_CELL as f64) as usize
    }

    /// `∫ dx/|v|` over a segment on which `v` is linear; `None` if blocked.
    fn segment_integral(&self, a: f64, b: f64) -> Option<f64> {
        let va = self.profile.velocity_at(a);
        let vb = self.profile.velocity_at(b);
        if va.abs() <= V_FLOOR || vb.abs() <= V_FLOOR || va.signum() != vb.signum() {
            return None;
        }
        let n = self.segment_points(a, b, va, vb);
        let h = (b - a) / n as f64;
        let inv = |x: f64| 1.0 / (va + (vb - va) * (x - a) / (b - a)).abs();
        let mut sum = 0.5 * (1.0 / va.abs() + 1.0 / vb.abs());
        for k in 1..n {
            sum += inv(a + h * k as f64);
        }
        Some(sum * h)
    }

    /// Samples the left and right fronts of the light cone emanating from
    /// `origin` at `n_samples` equally spaced times in `[0, t_max]`.
    pub fn light_cone(&self, origin: f64, t_max: f64, n_samples: usize) -> Result<GeodesicCurve> {
        self.profile.check_coordinate(origin)?;
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
        }
        if n_samples < 2 {
            return Err(Error::InvalidArgument("n_samples must be at least 2".into()));
        }
        let right = self.march(origin, self.profile.n_sites as f64);
        let left = self.march(origin, 1.0);
        let samples = (0..n_samples)
            .map(|k| {
                let t = t_max * k as f64 / (n_samples - 1) as f64;
                FrontSample {
                    time: t,
                    left_front: left.position_at(t),
                    right_front: right.position_at(t),
                }
            })
            .collect();
        Ok(GeodesicCurve {
            origin,
            samples,
            horizon_clamped: (left.blocked.is_some(), right.blocked.is_some()),
        })
    }

    /// Cumulative travel times from `origin` towards `end` on the quadrature grid.
    fn march(&self, origin: f64, end: f64) -> March {
        let dir = if end >= origin { 1.0 } else { -1.0 };
        let mut nodes = vec![(origin, 0.0)];
        let mut blocked = None;
        let (lo, hi) = if dir > 0.0 { (origin, end) } else { (end, origin) };
        let mut cuts: Vec<f64> = self.profile.breakpoints(lo, hi).collect();
        if dir < 0.0 {
            cuts.reverse();
        }
        cuts.push(end);
        let mut from = origin;
        let mut elapsed = 0.0;
        for to in cuts {
            if from == to {
                continue;
            }
            let va = self.profile.velocity_at(from);
            let vb = self.profile.velocity_at(to);
            if va.abs() <= V_FLOOR || vb.abs() <= V_FLOOR || va.signum() != vb.signum() {
                blocked = Some(BlockedSegment {
                    start: from,
                    start_time: elapsed,
                    v_start: va,
                    v_end: vb,
                    end: to,
                });
                break;
            }
            let n = self.segment_points(from, to, va, vb);
            let h = (to - from) / n as f64;
            let inv = |x: f64| 1.0 / (va + (vb - va) * (x - from) / (to - from)).abs();
            let mut prev = 1.0 / va.abs();
            for k in 1..=n {
                let x = if k == n { to } else { from + h * k as f64 };
                let cur = inv(x);
                elapsed += 0.5 * (prev + cur) * h.abs() / self.front_speed;
                nodes.push((x, elapsed));
                prev = cur;
            }
            from = to;
        }
        March {
            nodes,
            blocked,
            front_speed: self.front_speed,
        }
    }
}

struct BlockedSegment {
    start: f64,
    start_time: f64,
    v_start: f64,
    v_end: f64,
    end: f64,
}

struct March {
    nodes: Vec<(f64, f64)>,
    blocked: Option<BlockedSegment>,
    front_speed: f64,
}

impl March {
    fn position_at(&self, t: f64) -> f64 {
        let (last_x, last_t) = *self.nodes.last().expect("march has an origin node");
        if t <= last_t {
            let k = self.nodes.partition_point(|&(_, nt)| nt <= t);
            if k == 0 {
                return self.nodes[0].0;
            }
            if k >= self.nodes.len() {
                return last_x;
            }
            let (x0, t0) = self.nodes[k - 1];
            let (x1, t1) = self.nodes[k];
            return x0 + (x1 - x0) * (t - t0) / (t1 - t0);
        }
        let Some(seg) = &self.blocked else {
            return last_x;
        };
        // |v| is linear on the blocked segment and reaches zero at `zero`; the
        // travel time diverges logarithmically, so the front only approaches it.
        let (va, vb) = (seg.v_start, seg.v_end);
        if va.abs() <= V_FLOOR {
            return seg.start;
        }
        let len = seg.end - seg.start;
        let slope = (vb - va) / len;
        if slope == 0.0 {
            return seg.start;
        }
        let zero = seg.start - va / slope;
        let rate = slope.abs() * self.front_speed;
        let remaining = (t - seg.start_time).max(0.0);
        seg.start + (zero - seg.start) * (1.0 - (-rate * remaining).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontSample {
    pub time: f64,
    pub left_front: f64,
    pub right_front: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicCurve {
    pub origin: f64,
    pub samples: Vec<FrontSample>,
    /// Whether the (left, right) front is bounded by a horizon rather than a chain end.
    pub horizon_clamped: (bool, bool),
}

/// Travel time `(1/front_speed) |∫_i^j dx/|v(x)||` between sites `i` and `j`.
pub fn geodesic_time(
    profile: &DeformationProfile,
    i: usize,
    j: usize,
    front_speed: f64,
) -> Result<Option<f64>> {
    crate::error::check_site(i, profile.n_sites())?;
    crate::error::check_site(j, profile.n_sites())?;
    Geodesics::new(profile)
        .with_front_speed(front_speed)
        .time_between(i as f64, j as f64)
}

pub fn light_cone(
    profile: &DeformationProfile,
    origin: f64,
    t_max: f64,
    n_samples: usize,
    front_speed: f64,
) -> Result<GeodesicCurve> {
    Geodesics::new(profile)
        .with_front_speed(front_speed)
        .light_cone(origin, t_max, n_samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_profile() -> DeformationProfile {
        DeformationProfile::horizon(80, 80.0 / 7.0).unwrap()
    }

    #[test]
    fn uniform_profile_is_all_ones() {
        let p = DeformationProfile::uniform(5).unwrap();
        assert_eq!(p.bond_values(), &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(p.kind(), ProfileKind::Uniform);
    }

    #[test]
    fn invalid_sizes_are_rejected() {
        assert!(matches!(DeformationProfile::uniform(1), Err(Error::Config(_))));
        assert!(DeformationProfile::horizon(80, 0.0).is_err());
        assert!(DeformationProfile::horizon(80, 40.0).is_err());
        assert!(DeformationProfile::horizon(80, -1.0).is_err());
        assert!(DeformationProfile::custom(vec![1.0, f64::NAN]).is_err());
        assert!(DeformationProfile::build(ProfileKind::Custom, 4, Some(vec![1.0])).is_err());
    }

    #[test]
    fn horizon_profile_regression_values() {
        // 40-digit evaluation of the sine-product formula.
        let p = paper_profile();
        assert!((p.bond(12) - -0.016_600_921_716_216_252_833_668).abs() < 1e-14);
        assert!((p.bond(41) - 1.038_260_698_286_168_283_581_769).abs() < 1e-14);
        assert!((p.bond(13) - 0.022_833_916_494_095_906_858_548).abs() < 1e-14);
        assert!((p.bond(1) - -0.240_787_309_403_764_322_166_081).abs() < 1e-14);
    }

    #[test]
    fn horizon_profile_sign_pattern_and_symmetry() {
        for n in [20usize, 40, 80] {
            let j_star = n as f64 / 7.0;
            let p = DeformationProfile::horizon(n, j_star).unwrap();
            for j in 1..n {
                let v = p.bond(j);
                let shifted = j as f64 - 1.0;
                if shifted < j_star || shifted > n as f64 - j_star {
                    assert!(v < 0.0, "N={n} bond {j}: {v}");
                } else if shifted > j_star && shifted < n as f64 - j_star {
                    assert!(v > 0.0, "N={n} bond {j}: {v}");
                }
                let mirror = n + 2 - j;
                if (1..n).contains(&mirror) {
                    assert!((v - p.bond(mirror)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn horizons_sit_next_to_nominal_sites() {
        let p = paper_profile();
        let h = p.horizons();
        assert_eq!(h.len(), 2);
        let (a, b) = p.nominal_horizons().unwrap();
        // midpoint anchoring shifts the zero by half a cell
        assert!((h[0] - (a + 0.5)).abs() < 0.01, "{h:?}");
        assert!((h[1] - (b + 0.5)).abs() < 0.01, "{h:?}");
        assert!(p.velocity_at(h[0]).abs() < 1e-12);
    }

    #[test]
    fn uniform_geodesic_is_distance_over_eight() {
        let p = DeformationProfile::uniform(80).unwrap();
        let t = geodesic_time(&p, 20, 28, 8.0).unwrap().unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert_eq!(geodesic_time(&p, 33, 33, 8.0).unwrap(), Some(0.0));
        let t = geodesic_time(&p, 20, 28, 4.0).unwrap().unwrap();
        assert!((t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn horizon_blocks_geodesics() {
        let p = paper_profile();
        assert_eq!(geodesic_time(&p, 40, 75, 8.0).unwrap(), None);
        assert_eq!(geodesic_time(&p, 40, 5, 8.0).unwrap(), None);
        assert!(geodesic_time(&p, 40, 60, 8.0).unwrap().is_some());
    }

    #[test]
    fn out_of_range_indices_error() {
        let p = DeformationProfile::uniform(10).unwrap();
        assert!(matches!(
            geodesic_time(&p, 0, 3, 8.0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(geodesic_time(&p, 3, 11, 8.0).is_err());
    }

    #[test]
    fn geodesic_time_symmetric_and_additive() {
        let p = paper_profile();
        for (i, j, k) in [(20, 33, 51), (40, 45, 66), (15, 16, 30)] {
            let ij = geodesic_time(&p, i, j, 8.0).unwrap().unwrap();
            let ji = geodesic_time(&p, j, i, 8.0).unwrap().unwrap();
            let jk = geodesic_time(&p, j, k, 8.0).unwrap().unwrap();
            let ik = geodesic_time(&p, i, k, 8.0).unwrap().unwrap();
            assert_eq!(ij, ji);
            assert!((ik - ij - jk).abs() < 1e-9, "{ik} vs {}", ij + jk);
        }
    }

    #[test]
    fn grid_refinement_is_converged() {
        let p = paper_profile();
        // |v| >= 0.05 on [18, 63]
        for x in 18..=63 {
            assert!(p.velocity_at(x as f64).abs() >= 0.05);
        }
        let coarse = Geodesics::new(&p).time_between(18.0, 63.0).unwrap().unwrap();
        let fine = Geodesics::new(&p)
            .with_points_per_cell(128)
            .time_between(18.0, 63.0)
            .unwrap()
            .unwrap();
        assert!((coarse - fine).abs() < 1e-6, "{coarse} {fine}");
    }

    #[test]
    fn uniform_light_cone_has_speed_eight() {
        let p = DeformationProfile::uniform(80).unwrap();
        let cone = light_cone(&p, 40.0, 1.0, 11, 8.0).unwrap();
        let last = cone.samples.last().unwrap();
        assert!((last.left_front - 32.0).abs() < 1e-9);
        assert!((last.right_front - 48.0).abs() < 1e-9);
        assert_eq!(cone.horizon_clamped, (false, false));
        assert_eq!(cone.samples[0].left_front, 40.0);
    }

    #[test]
    fn light_cone_clamps_at_horizon() {
        let p = paper_profile();
        let right_horizon = p.horizons()[1];
        let cone = light_cone(&p, 40.0, 200.0, 400, 8.0).unwrap();
        assert_eq!(cone.horizon_clamped, (true, true));
        for s in &cone.samples {
            assert!(s.right_front <= right_horizon);
            assert!(s.left_front >= p.horizons()[0]);
        }
        let last = cone.samples.last().unwrap();
        assert!(right_horizon - last.right_front < 0.05, "{}", last.right_front);
        for w in cone.samples.windows(2) {
            assert!(w[1].time > w[0].time);
            assert!(w[1].right_front >= w[0].right_front);
            assert!(w[1].left_front <= w[0].left_front);
        }
    }

    #[test]
    fn light_cone_pinned_at_horizon_origin() {
        let p = paper_profile();
        let h = p.horizons()[0];
        let cone = light_cone(&p, h, 2.0, 5, 8.0).unwrap();
        for s in &cone.samples {
            assert_eq!(s.left_front, h);
            assert_eq!(s.right_front, h);
        }
    }

    #[test]
    fn light_cone_matches_bisection_oracle() {
        let p = paper_profile();
        let cone = light_cone(&p, 40.0, 0.5, 2, 8.0).unwrap();
        let front = cone.samples[1];
        let geo = Geodesics::new(&p);
        // bisection on the travel-time integral; `inner` is inside the cone
        let solve = |mut inner: f64, mut outer: f64| {
            for _ in 0..80 {
                let mid = 0.5 * (inner + outer);
                if geo.time_between(40.0, mid).unwrap().unwrap() <= 0.5 {
                    inner = mid;
                } else {
                    outer = mid;
                }
            }
            0.5 * (inner + outer)
        };
        let right = solve(40.0, 60.0);
        let left = solve(40.0, 20.0);
        let cell = 1.0 / DEFAULT_POINTS_PER_CELL as f64;
        assert!((front.right_front - right).abs() < cell, "{} vs {right}", front.right_front);
        assert!((front.left_front - left).abs() < cell, "{} vs {left}", front.left_front);
    }

    #[test]
    fn csv_round_trip() {
        let p = paper_profile();
        let text = p.to_csv();
        assert!(text.starts_with("bond,v\n1,"));
        let back = DeformationProfile::from_csv(&text).unwrap();
        assert_eq!(back.bond_values(), p.bond_values());
        assert!(DeformationProfile::from_csv("b,v\n1,2\n").is_err());
    }
}
