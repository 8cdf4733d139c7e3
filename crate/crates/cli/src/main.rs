use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use scrambling_cli::config::{ExperimentConfig, Format, InitialState, Spacing, TimeGrid};
use scrambling_cli::manifest::Manifest;
use scrambling_cli::output::{csv, float, json, Sink};
use scrambling_cli::pipeline::{self, derive_seed};
use scrambling_core::{decode, logical_to_physical, sample_batch_with, spectrum_check, Error, LogicalConfig, SamplerKind};

#[derive(Parser)]
#[command(name = "scramble", version, about = "Scrambling diagnostics for the constrained fermion chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate a bitstring between the logical and physical chains.
    Map {
        direction: Direction,
        bitstring: String,
    },
    /// Compare the constrained many-body spectrum with logical subset sums.
    SpectrumCheck {
        #[arg(short = 'L', long = "sites")]
        sites: usize,
        #[arg(short = 'N', long = "particles")]
        particles: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Hamming distance D(t) averaged over initial states.
    Hamming(RunArgs),
    /// Natural-orbital relaxation Z(t) and its power-law tail.
    Relax(RunArgs),
    /// Momentum distribution, structure factor and Luttinger parameter.
    Nk(RunArgs),
    /// Thermal OTOC from exact diagonalization.
    Otoc {
        #[command(flatten)]
        run: RunArgs,
        /// Use the unconstrained free-fermion chain instead.
        #[arg(long)]
        free_fermion: bool,
    },
    /// Draw physical configurations from an evolved Slater state.
    Sample {
        #[command(flatten)]
        run: RunArgs,
        /// Evolution time; defaults to the first entry of the time grid.
        #[arg(long)]
        time: Option<f64>,
        #[arg(long, value_enum, default_value_t = SamplerChoice::ChainRule)]
        sampler: SamplerChoice,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Encode,
    Decode,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerChoice {
    ChainRule,
    Reference,
    Dpp,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short = 'L', long = "sites")]
    sites: Option<usize>,
    #[arg(short = 'N', long = "particles")]
    particles: Option<usize>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',', conflicts_with = "t_range")]
    t_grid: Option<Vec<f64>>,
    /// `t_min,t_max,count,linear|log`.
    #[arg(long)]
    t_range: Option<String>,
    #[arg(long = "samples")]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// `ground`, `random-product` or a logical bitstring.
    #[arg(long)]
    initial_state: Option<String>,
    #[arg(long)]
    n_initial_states: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatChoice>,
    #[arg(long)]
    t_inf: Option<f64>,
    #[arg(long)]
    t_inf_average: Option<bool>,
    /// `t_lo,t_hi`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    fit_window: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Perturbed OTOC site, 1-based.
    #[arg(long)]
    site: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    momentum: Option<bool>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatChoice {
    Csv,
    Json,
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        let t_grid = match (&self.t_grid, &self.t_range) {
            (Some(v), _) => Some(TimeGrid::Explicit(v.clone())),
            (None, Some(r)) => Some(parse_range(r)?),
            (None, None) => None,
        };
        let flags = ExperimentConfig {
            sites: self.sites,
            particles: self.particles,
            t_grid,
            samples: self.samples,
            seed: self.seed,
            threads: self.threads,
            initial_state: self.initial_state.as_deref().map(str::parse::<InitialState>).transpose()?,
            n_initial_states: self.n_initial_states,
            output: self.output.clone(),
            format: self.format.map(|f| match f {
                FormatChoice::Csv => Format::Csv,
                FormatChoice::Json => Format::Json,
            }),
            t_inf: self.t_inf,
            t_inf_average: self.t_inf_average,
            fit_window: self.fit_window.as_ref().map(|w| (w[0], w[1])),
            beta: self.beta,
            site: self.site,
            threshold: self.threshold,
            momentum: self.momentum,
        };
        let cfg = base.overlay(flags);
        cfg.sector()?;
        Ok(cfg)
    }
}

fn parse_range(s: &str) -> Result<TimeGrid, Error> {
    let bad = || Error::InvalidArgument(format!("bad --t-range {s:?}; expected t_min,t_max,count,linear|log"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(bad());
    }
    let spacing = match parts[3] {
        "linear" => Spacing::Linear,
        "log" => Spacing::Log,
        _ => return Err(bad()),
    };
    Ok(TimeGrid::Range {
        t_min: parts[0].parse().map_err(|_| bad())?,
        t_max: parts[1].parse().map_err(|_| bad())?,
        count: parts[2].parse().map_err(|_| bad())?,
        spacing,
    })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ConstraintViolation(_)
        | Error::InvalidSector { .. }
        | Error::SectorMismatch { .. }
        | Error::InvalidBitstring(_)
        | Error::InvalidArgument(_) => 2,
        Error::TooLarge { .. } | Error::SectorTooLarge { .. } => 3,
        Error::Sample { source, .. } => exit_code(source),
        _ => 4,
    }
}

enum Failure {
    Core(Error),
    Io(std::io::Error),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Check) => ExitCode::from(4),
    }
}

/// Runs an experiment, leaving a partial-output marker if it fails.
fn experiment(
    name: &str,
    args: &RunArgs,
    body: impl FnOnce(&ExperimentConfig, &Sink, Manifest) -> Result<(), Failure>,
) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let sink = Sink::new(cfg.output.clone());
    let manifest = Manifest::new(name, &cfg);
    match body(&cfg, &sink, manifest.clone()) {
        Err(Failure::Core(e)) => {
            sink.mark_partial(&manifest, &e.to_string());
            Err(Failure::Core(e))
        }
        other => other,
    }
}

fn is_json(cfg: &ExperimentConfig) -> bool {
    cfg.format == Some(Format::Json)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Map { direction, bitstring } => {
            let out = match direction {
                Direction::Encode => logical_to_physical(&bitstring.parse::<LogicalConfig>()?).to_string(),
                Direction::Decode => decode(&bitstring.parse()?)?.to_string(),
            };
            println!("{out}");
            Ok(())
        }
        Command::SpectrumCheck { sites, particles, tol } => {
            let report = spectrum_check(sites, particles, tol)?;
            print!("{}", json(&report));
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Check)
            }
        }
        Command::Hamming(args) => experiment("hamming", &args, |cfg, sink, manifest| {
            let run = pipeline::run_hamming(cfg)?;
            let manifest = manifest.with_initial_states(run.initial_states.clone());
            let table = if is_json(cfg) {
                json(&run)
            } else {
                csv(
                    &["t", "D_mean", "D_stderr"],
                    (0..run.times.len()).map(|i| vec![float(run.times[i]), float(run.d_mean[i]), float(run.d_stderr[i])]),
                )
            };
            let fit = json(&json!({
                "arctan": run.fit,
                "plateau": run.plateau,
                "plateau_window": run.plateau_window,
                "target_plateau": run.target_plateau,
                "max_clipped_mass": run.max_clipped,
            }));
            sink.write(&table, &manifest, Some(&fit))?;
            Ok(())
        }),
        Command::Relax(args) => experiment("relax", &args, |cfg, sink, manifest| {
            let run = pipeline::run_relax(cfg)?;
            let manifest = manifest.with_initial_states(run.initial_states.clone());
            let t_inf = run.t_inf.last().copied().unwrap_or(f64::NAN);
            let table = if is_json(cfg) {
                json(&run)
            } else {
                csv(
                    &["t", "Z", "Z_stderr", "t_inf"],
                    (0..run.times.len())
                        .map(|i| vec![float(run.times[i]), float(run.z_mean[i]), float(run.z_stderr[i]), float(t_inf)]),
                )
            };
            let fit = json(&json!({ "powerlaw": run.fit, "window": run.fit_window, "t_inf": run.t_inf }));
            sink.write(&table, &manifest, Some(&fit))?;
            Ok(())
        }),
        Command::Nk(args) => experiment("nk", &args, |cfg, sink, manifest| {
            let run = pipeline::run_nk(cfg)?;
            let manifest = manifest.with_initial_states(vec![run.initial_state.clone()]);
            let table = if is_json(cfg) {
                json(&run)
            } else {
                let mut header = vec!["k"];
                if run.n_k.is_some() {
                    header.push("n_k");
                }
                header.extend(["S_k", "S_k_stderr"]);
                csv(
                    &header,
                    (0..run.k.len()).map(|i| {
                        let mut row = vec![float(run.k[i])];
                        if let Some(n) = &run.n_k {
                            row.push(float(n[i]));
                        }
                        row.extend([float(run.s_k[i]), float(run.s_k_stderr[i])]);
                        row
                    }),
                )
            };
            let fit = json(&json!({ "luttinger_K": run.luttinger_k }));
            sink.write(&table, &manifest, Some(&fit))?;
            Ok(())
        }),
        Command::Otoc { run: args, free_fermion } => experiment("otoc", &args, |cfg, sink, manifest| {
            let run = pipeline::run_otoc(cfg, !free_fermion)?;
            let manifest = manifest.with_ensemble(run.ensemble);
            let table = if is_json(cfg) {
                json(&run)
            } else {
                let (times, sites, g) = (&run.times, &run.sites, &run.g);
                csv(
                    &["t", "j", "G"],
                    times.iter().enumerate().flat_map(|(ti, t)| {
                        sites.iter().enumerate().map(move |(c, j)| vec![float(*t), j.to_string(), float(g[ti][c])])
                    }),
                )
            };
            let fit = json(&json!({
                "site": run.site,
                "threshold": run.threshold,
                "butterfly": run.butterfly,
                "lyapunov": run.lyapunov,
            }));
            sink.write(&table, &manifest, Some(&fit))?;
            Ok(())
        }),
        Command::Sample { run: args, time, sampler } => experiment("sample", &args, |cfg, sink, manifest| {
            let t = match time {
                Some(t) => t,
                None => cfg.times()?[0],
            };
            let seed = cfg.require_seed()?;
            let mut single = cfg.clone();
            single.n_initial_states = Some(1);
            let (label, s0) = pipeline::initial_states(&single)?.remove(0);
            let kind = match sampler {
                SamplerChoice::ChainRule => SamplerKind::ChainRule,
                SamplerChoice::Reference => SamplerKind::ChainRuleReference,
                SamplerChoice::Dpp => SamplerKind::Dpp,
            };
            let batch = sample_batch_with(&s0.evolve(t), cfg.samples()?, derive_seed(seed, &[2, 0, 0]), cfg.threads(), kind)?;
            let manifest = manifest.with_initial_states(vec![label]);
            let table = if is_json(cfg) {
                json(&json!({ "sidecar": batch.sidecar(), "configs": batch.configs }))
            } else {
                csv(&["logical", "physical"], batch.configs.iter().map(|c| vec![c.to_string(), logical_to_physical(c).to_string()]))
            };
            sink.write(&table, &manifest, Some(&json(&batch.sidecar())))?;
            Ok(())
        }),
    }
}
