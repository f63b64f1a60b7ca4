//! Experiment configuration files (TOML).
//!
//! ```toml
//! initial_state = "neel"          # "all_up" | { flips = [5, 11] }
//! backend = "statevector"         # "freefermion" | "exact_oracle"
//! shots = "exact"                 # or a positive integer
//! seed = 7
//! outputs = ["magnetization", "connected_zz"]
//! out_dir = "runs/fig2a"
//!
//! [spec]
//! delta = 0.5
//! J = 1.0
//! dt = 0.1
//! steps = 20
//!
//! [spec.profile]
//! n_sites = 16
//! kind = "horizon"                # "uniform" | "custom" (with bond_values)
//! j_star = 2.2857142857142856     # defaults to N/7
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::circuit::ChainSpec;
use crate::error::{Error, Result};
use crate::lattice::{DeformationProfile, ProfileKind};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    #[default]
    Neel,
    AllUp,
    Flips(Vec<usize>),
}

impl InitialState {
    /// Sites that start spin-down (1-based).
    pub fn flips(&self, n_sites: usize) -> Vec<usize> {
        match self {
            Self::Neel => (2..=n_sites).step_by(2).collect(),
            Self::AllUp => Vec::new(),
            Self::Flips(f) => f.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Statevector,
    Freefermion,
    ExactOracle,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Self::Statevector => "statevector",
            Self::Freefermion => "freefermion",
            Self::ExactOracle => "exact_oracle",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "statevector" => Ok(Self::Statevector),
            "freefermion" => Ok(Self::Freefermion),
            "exact_oracle" => Ok(Self::ExactOracle),
            other => Err(Error::Config(format!(
                "unknown backend `{other}` (expected statevector, freefermion or exact_oracle)"
            ))),
        }
    }
}

/// Number of measurement shots per step, or exact expectation values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ShotsRepr", into = "ShotsRepr")]
pub enum Shots {
    #[default]
    Exact,
    Count(u64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ShotsRepr {
    Count(u64),
    Word(String),
}

impl TryFrom<ShotsRepr> for Shots {
    type Error = String;

    fn try_from(r: ShotsRepr) -> std::result::Result<Self, String> {
        match r {
            ShotsRepr::Count(0) => Err("shots must be positive".into()),
            ShotsRepr::Count(n) => Ok(Shots::Count(n)),
            ShotsRepr::Word(w) if w == "exact" => Ok(Shots::Exact),
            ShotsRepr::Word(w) => Err(format!("shots must be a positive integer or \"exact\", got \"{w}\"")),
        }
    }
}

impl From<Shots> for ShotsRepr {
    fn from(s: Shots) -> Self {
        match s {
            Shots::Exact => ShotsRepr::Word("exact".into()),
            Shots::Count(n) => ShotsRepr::Count(n),
        }
    }
}

impl Shots {
    pub fn count(self) -> Option<u64> {
        match self {
            Shots::Exact => None,
            Shots::Count(n) => Some(n),
        }
    }
}

impl std::str::FromStr for Shots {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(Shots::Exact);
        }
        match s.parse::<u64>() {
            Ok(0) | Err(_) => Err(Error::Config(format!(
                "shots must be a positive integer or `exact`, got `{s}`"
            ))),
            Ok(n) => Ok(Shots::Count(n)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Magnetization,
    ConnectedZz,
    DistanceCorrelator,
    StaggeredMagnetization,
    /// Raw shot tables as JSON, one file per step.
    Counts,
}

impl Output {
    pub const DEFAULT: [Output; 4] = [
        Output::Magnetization,
        Output::ConnectedZz,
        Output::DistanceCorrelator,
        Output::StaggeredMagnetization,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[default]
    NeelQuench,
    Ballistic,
    DeltaSweep,
    FrequencyScan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: ChainSpec,
    pub initial_state: InitialState,
    pub backend: Backend,
    pub shots: Shots,
    pub seed: u64,
    pub outputs: Vec<Output>,
    pub out_dir: Option<PathBuf>,
    pub protocol: Protocol,
    /// Geodesic overlay origins; empty means the chain centre for horizon profiles.
    pub origins: Vec<usize>,
    /// Δ values for the sweep protocol.
    pub deltas: Vec<f64>,
    /// Edge sites excluded on each side from the staggered magnetization.
    pub n_cut: usize,
    /// Sites for per-site correlator cuts.
    pub sites: Vec<usize>,
}

/// Staggered-magnetization cut `round(9 N / 80)`: 9 at N = 80.
pub fn default_n_cut(n_sites: usize) -> usize {
    (9.0 * n_sites as f64 / 80.0).round() as usize
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    initial_state: InitialState,
    backend: Backend,
    #[serde(default)]
    shots: Shots,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outputs: Option<Vec<Output>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    out_dir: Option<PathBuf>,
    #[serde(default)]
    protocol: Protocol,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    origins: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    deltas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_cut: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    sites: Vec<usize>,
    spec: RawSpec,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    delta: f64,
    #[serde(rename = "J", default = "one")]
    coupling: f64,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_steps")]
    steps: usize,
    profile: RawProfile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    n_sites: usize,
    kind: RawKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    j_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bond_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawKind {
    Uniform,
    Horizon,
    Custom,
}

fn one() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    0.1
}

fn default_steps() -> usize {
    20
}

impl ExperimentConfig {
    /// Neel quench with exact expectation values and default outputs.
    pub fn new(spec: ChainSpec, backend: Backend) -> Self {
        let n = spec.n_sites();
        Self {
            spec,
            initial_state: InitialState::Neel,
            backend,
            shots: Shots::Exact,
            seed: 0,
            outputs: Output::DEFAULT.to_vec(),
            out_dir: None,
            protocol: Protocol::NeelQuench,
            origins: Vec::new(),
            deltas: Vec::new(),
            n_cut: default_n_cut(n),
            sites: Vec::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let p = raw.spec.profile;
        let kind = match p.kind {
            RawKind::Uniform => ProfileKind::Uniform,
            RawKind::Horizon => ProfileKind::Horizon {
                j_star: p.j_star.unwrap_or(p.n_sites as f64 / 7.0),
            },
            RawKind::Custom => ProfileKind::Custom,
        };
        if p.j_star.is_some() && !matches!(p.kind, RawKind::Horizon) {
            return Err(Error::Config("j_star only applies to kind = \"horizon\"".into()));
        }
        if p.bond_values.is_some() && !matches!(p.kind, RawKind::Custom) {
            return Err(Error::Config("bond_values only applies to kind = \"custom\"".into()));
        }
        let profile = DeformationProfile::build(kind, p.n_sites, p.bond_values).map_err(as_config)?;
        let spec = ChainSpec {
            profile,
            delta: raw.spec.delta,
            coupling: raw.spec.coupling,
            dt: raw.spec.dt,
            steps: raw.spec.steps,
        };
        let n = spec.n_sites();
        let config = Self {
            spec,
            initial_state: raw.initial_state,
            backend: raw.backend,
            shots: raw.shots,
            seed: raw.seed,
            outputs: raw.outputs.unwrap_or_else(|| Output::DEFAULT.to_vec()),
            out_dir: raw.out_dir,
            protocol: raw.protocol,
            origins: raw.origins,
            deltas: raw.deltas,
            n_cut: raw.n_cut.unwrap_or_else(|| default_n_cut(n)),
            sites: raw.sites,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks that do not depend on the backend's capacity.
    pub fn validate(&self) -> Result<()> {
        self.spec.validate().map_err(as_config)?;
        if !self.spec.delta.is_finite() || !self.spec.coupling.is_finite() {
            return Err(Error::Config("delta and J must be finite".into()));
        }
        let n = self.spec.n_sites();
        let in_range = |what: &str, sites: &[usize]| -> Result<()> {
            match sites.iter().find(|&&s| s == 0 || s > n) {
                Some(s) => Err(Error::Config(format!("{what} site {s} outside 1..={n}"))),
                None => Ok(()),
            }
        };
        if let InitialState::Flips(f) = &self.initial_state {
            in_range("flip", f)?;
            let mut sorted = f.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Config(format!("flip sites collide: {f:?}")));
            }
        }
        in_range("origin", &self.origins)?;
        in_range("cut", &self.sites)?;
        if self.outputs.contains(&Output::StaggeredMagnetization) && n < 2 * self.n_cut + 2 {
            return Err(Error::Config(format!(
                "staggered window is empty: N = {n}, n_cut = {}",
                self.n_cut
            )));
        }
        if self.outputs.contains(&Output::Counts) && self.shots == Shots::Exact {
            return Err(Error::Config("output `counts` needs a finite number of shots".into()));
        }
        match self.protocol {
            Protocol::Ballistic => match &self.initial_state {
                InitialState::Flips(f) if f.len() == 2 => {}
                _ => {
                    return Err(Error::Config(
                        "ballistic protocol needs initial_state = { flips = [a, b] } with two sites".into(),
                    ))
                }
            },
            Protocol::DeltaSweep if self.deltas.is_empty() => {
                return Err(Error::Config("delta_sweep needs a non-empty `deltas` list".into()));
            }
            _ => {}
        }
        if self.deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::Config("deltas must be finite".into()));
        }
        Ok(())
    }

    /// Canonical TOML text; parsing it back yields an equal config.
    pub fn to_toml(&self) -> String {
        let profile = &self.spec.profile;
        let (kind, j_star, bond_values) = match profile.kind() {
            ProfileKind::Uniform => (RawKind::Uniform, None, None),
            ProfileKind::Horizon { j_star } => (RawKind::Horizon, Some(j_star), None),
            ProfileKind::Custom => (RawKind::Custom, None, Some(profile.bond_values().to_vec())),
        };
        let raw = RawConfig {
            initial_state: self.initial_state.clone(),
            backend: self.backend,
            shots: self.shots,
            seed: self.seed,
            outputs: Some(self.outputs.clone()),
            out_dir: self.out_dir.clone(),
            protocol: self.protocol,
            origins: self.origins.clone(),
            deltas: self.deltas.clone(),
            n_cut: Some(self.n_cut),
            sites: self.sites.clone(),
            spec: RawSpec {
                delta: self.spec.delta,
                coupling: self.spec.coupling,
                dt: self.spec.dt,
                steps: self.spec.steps,
                profile: RawProfile {
                    n_sites: profile.n_sites(),
                    kind,
                    j_star,
                    bond_values,
                },
            },
        };
        toml::to_string(&raw).expect("config always serializes")
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Config(m),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
initial_state = { flips = [5, 11] }
backend = "statevector"
shots = 16384
seed = 3
protocol = "ballistic"

[spec]
delta = 0.5
steps = 10

[spec.profile]
n_sites = 16
kind = "uniform"
"#;

    #[test]
    fn parses_sample_with_defaults() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.initial_state, InitialState::Flips(vec![5, 11]));
        assert_eq!(c.shots, Shots::Count(16384));
        assert_eq!(c.spec.dt, 0.1);
        assert_eq!(c.spec.coupling, 1.0);
        assert_eq!(c.spec.steps, 10);
        assert_eq!(c.n_cut, 2);
        assert_eq!(c.outputs, Output::DEFAULT.to_vec());
    }

    #[test]
    fn echo_round_trips() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let echo = c.to_toml();
        let back = ExperimentConfig::from_toml(&echo).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), echo);

        let spec = ChainSpec::new(DeformationProfile::horizon(80, 80.0 / 7.0).unwrap(), 0.0);
        let mut c = ExperimentConfig::new(spec, Backend::Freefermion);
        c.origins = vec![20, 40];
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);

        let spec = ChainSpec::new(DeformationProfile::custom(vec![0.1, 1.0 / 3.0, 0.7]).unwrap(), 1.0);
        let c = ExperimentConfig::new(spec, Backend::ExactOracle);
        let mut c = c;
        c.n_cut = 0;
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = SAMPLE.replace("delta = 0.5", "detla = 0.5");
        assert!(matches!(ExperimentConfig::from_toml(&typo), Err(Error::Parse(_))));
        let extra = format!("{SAMPLE}\n[extra]\nx = 1\n");
        assert!(ExperimentConfig::from_toml(&extra).is_err());
        let nested = SAMPLE.replace("kind = \"uniform\"", "kind = \"uniform\"\nslope = 2");
        assert!(ExperimentConfig::from_toml(&nested).is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let bad_shots = SAMPLE.replace("shots = 16384", "shots = 0");
        assert_eq!(ExperimentConfig::from_toml(&bad_shots).unwrap_err().exit_code(), 2);
        let word = SAMPLE.replace("shots = 16384", "shots = \"many\"");
        assert!(ExperimentConfig::from_toml(&word).is_err());
        let collide = SAMPLE.replace("[5, 11]", "[5, 5]");
        assert!(ExperimentConfig::from_toml(&collide).is_err());
        let outside = SAMPLE.replace("[5, 11]", "[5, 17]");
        assert!(ExperimentConfig::from_toml(&outside).is_err());
        let one_flip = SAMPLE.replace("[5, 11]", "[5]");
        assert!(ExperimentConfig::from_toml(&one_flip).is_err());
        let dt = SAMPLE.replace("steps = 10", "steps = 10\ndt = -0.1");
        assert!(matches!(ExperimentConfig::from_toml(&dt), Err(Error::Config(_))));
        let cut = SAMPLE.replace("seed = 3", "seed = 3\nn_cut = 8");
        assert!(ExperimentConfig::from_toml(&cut).is_err());
    }

    #[test]
    fn horizon_defaults_to_n_over_seven() {
        let text = SAMPLE
            .replace("kind = \"uniform\"", "kind = \"horizon\"")
            .replace("n_sites = 16", "n_sites = 21");
        let c = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(c.spec.profile.kind(), ProfileKind::Horizon { j_star: 3.0 });
    }

    #[test]
    fn cli_strings() {
        assert_eq!("exact".parse::<Shots>().unwrap(), Shots::Exact);
        assert_eq!("1024".parse::<Shots>().unwrap(), Shots::Count(1024));
        assert!("0".parse::<Shots>().is_err());
        assert_eq!("exact_oracle".parse::<Backend>().unwrap(), Backend::ExactOracle);
        assert!("gpu".parse::<Backend>().is_err());
    }
}
