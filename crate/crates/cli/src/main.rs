use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use curvedchain::circuit::{build_quench_circuit, CircuitOptions};
use curvedchain::config::{Backend, ExperimentConfig, Shots};
use curvedchain::experiments::{preset, preset_summary, run, write_bundles, RunOptions, PRESETS};
use curvedchain::fmt::float;
use curvedchain::lattice::{DeformationProfile, Geodesics, DEFAULT_FRONT_SPEED};
use curvedchain::statevector::DEFAULT_MAX_QUBITS;
use curvedchain::{Error, Result};

/// Quench dynamics of XXZ chains with spatially deformed couplings.
#[derive(Debug, Parser)]
#[command(name = "curvedchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write a result bundle.
    Simulate(SimulateArgs),
    /// Print geodesic light-cone fronts as `origin,t,left,right` CSV.
    Geodesic(GeodesicArgs),
    /// Print a deformation profile as `bond,v` CSV.
    Profile(ProfileArgs),
    /// Write the OpenQASM 2.0 circuit of a quench.
    ExportQasm(ExportQasmArgs),
    /// List the named presets, or print one as a config file.
    Presets(PresetsArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// TOML experiment config.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Named preset (see `curvedchain presets`).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig> {
        match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::from_file(path),
            (None, Some(name)) => preset(name),
            (None, None) => Err(Error::Config("one of --config or --preset is required".into())),
        }
    }

    fn default_out(&self) -> PathBuf {
        let stem = match (&self.config, &self.preset) {
            (Some(path), _) => path.file_stem().map(|s| s.to_string_lossy().into_owned()),
            (None, name) => name.clone(),
        };
        Path::new("runs").join(stem.unwrap_or_else(|| "run".into()))
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory; defaults to the config's out_dir, else runs/<name>.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Base seed for shot sampling; step s uses seed + s.
    #[arg(long)]
    seed: Option<u64>,
    /// statevector, freefermion or exact_oracle.
    #[arg(long, value_name = "NAME")]
    backend: Option<Backend>,
    /// Shots per circuit, or `exact` for expectation values.
    #[arg(long, value_name = "N|exact")]
    shots: Option<Shots>,
    /// Worker threads; all cores if unset.
    #[arg(long, env = "CURVEDCHAIN_WORKERS", value_name = "K")]
    workers: Option<usize>,
    /// Carry the state between steps instead of rebuilding each circuit.
    #[arg(long)]
    incremental: bool,
    /// Keep the three-CNOT block on free chains.
    #[arg(long)]
    no_xy_optimize: bool,
    /// Largest chain the statevector backend accepts.
    #[arg(long, default_value_t = DEFAULT_MAX_QUBITS, value_name = "N")]
    max_qubits: usize,
}

#[derive(Debug, Args)]
struct ProfileSpec {
    /// `uniform:N`, `horizon:N[:J_STAR]` or `file:PATH` (a `bond,v` CSV).
    /// j_star defaults to N/7.
    #[arg(long, value_name = "SPEC")]
    profile: String,
}

impl ProfileSpec {
    fn build(&self) -> Result<DeformationProfile> {
        let bad = || Error::InvalidArgument(format!("cannot parse profile `{}`", self.profile));
        let mut parts = self.profile.splitn(3, ':');
        let kind = parts.next().unwrap_or_default();
        if kind == "file" {
            let path = self.profile.split_once(':').map(|(_, p)| p).ok_or_else(bad)?;
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidArgument(format!("cannot read profile {path}: {e}")))?;
            return DeformationProfile::from_csv(&text);
        }
        let n: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let j_star = parts.next().map(|s| s.parse::<f64>().map_err(|_| bad())).transpose()?;
        match (kind, j_star) {
            ("uniform", None) => DeformationProfile::uniform(n),
            ("horizon", j) => DeformationProfile::horizon(n, j.unwrap_or(n as f64 / 7.0)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Args)]
struct GeodesicArgs {
    #[command(flatten)]
    profile: ProfileSpec,
    /// Starting coordinate; need not be an integer.
    #[arg(long)]
    origin: f64,
    /// Last sample time.
    #[arg(long)]
    tmax: f64,
    /// Number of equally spaced samples on [0, tmax].
    #[arg(long, default_value_t = 101)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_FRONT_SPEED)]
    front_speed: f64,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[command(flatten)]
    profile: ProfileSpec,
    /// Write to a file instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportQasmArgs {
    #[command(flatten)]
    source: Source,
    /// Trotter steps; defaults to the config's step count.
    #[arg(long)]
    steps: Option<usize>,
    /// Write to a file instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long)]
    no_xy_optimize: bool,
}

#[derive(Debug, Args)]
struct PresetsArgs {
    /// Print this preset as a TOML config.
    name: Option<String>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut config = args.source.load()?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(backend) = args.backend {
        config.backend = backend;
    }
    if let Some(shots) = args.shots {
        config.shots = shots;
    }
    config.validate()?;
    let out = args
        .out
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| args.source.default_out());
    let options = RunOptions {
        workers: args.workers,
        incremental: args.incremental,
        xy_optimize: !args.no_xy_optimize,
        max_qubits: args.max_qubits,
    };
    let bundles = run(&config, &options)?;
    write_bundles(&bundles, &out)?;
    eprintln!("wrote {} run(s) to {}", bundles.len(), out.display());
    Ok(())
}

fn geodesic(args: GeodesicArgs) -> Result<()> {
    if args.samples == 0 {
        return Err(Error::InvalidArgument("--samples must be positive".into()));
    }
    let profile = args.profile.build()?;
    let curve = Geodesics::new(&profile)
        .with_front_speed(args.front_speed)
        .light_cone(args.origin, args.tmax, args.samples)?;
    let mut csv = String::from("origin,t,left,right\n");
    for s in &curve.samples {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            float(curve.origin),
            float(s.time),
            float(s.left_front),
            float(s.right_front)
        );
    }
    emit(None, &csv)
}

fn export_qasm(args: ExportQasmArgs) -> Result<()> {
    let config = args.source.load()?;
    let n = config.spec.n_sites();
    let steps = args.steps.unwrap_or(config.spec.steps);
    let options = CircuitOptions {
        xy_optimize: !args.no_xy_optimize,
    };
    let circuit = build_quench_circuit(&config.spec, &config.initial_state.flips(n), steps, options)?;
    emit(args.out.as_deref(), &circuit.to_openqasm())
}

fn presets(args: PresetsArgs) -> Result<()> {
    match args.name {
        Some(name) => emit(None, &preset(&name)?.to_toml()),
        None => {
            let mut text = String::new();
            for name in PRESETS {
                let _ = writeln!(text, "{name:<6}  {}", preset_summary(name).unwrap_or_default());
            }
            emit(None, &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Geodesic(a) => geodesic(a),
        Command::Profile(a) => a.profile.build().and_then(|p| emit(a.out.as_deref(), &p.to_csv())),
        Command::ExportQasm(a) => export_qasm(a),
        Command::Presets(a) => presets(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("curvedchain: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
