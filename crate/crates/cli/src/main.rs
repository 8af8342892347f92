//! `magnon`: batch front-end for the spin-wave computations.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or validation error,
//! 3 numerical failure.

mod commands;
mod config;
mod verify;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::{json, Value};

use config::{Format, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<magnon::Error> for CliError {
    fn from(e: magnon::Error) -> Self {
        use magnon::Error as E;
        match e {
            E::NonConvergence(_) | E::Numerical(_) | E::NotSymmetric(_) | E::BadTrace(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "magnon", version, about = "Spin-wave free-energy bounds, corrections and oracle checks")]
struct Cli {
    /// Flat key=value configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Extra configuration entry, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// Spatial dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Box side length in sites.
    #[arg(long)]
    ell: Option<usize>,
    /// Twice the spin.
    #[arg(long = "two-s")]
    two_s: Option<u32>,
    /// One value or a comma-separated list.
    #[arg(long = "beta-tilde", allow_hyphen_values = true)]
    beta_tilde: Option<String>,
    /// dirichlet or periodic.
    #[arg(long)]
    boundary: Option<String>,
    /// Per-site occupation cutoff of the Fock oracles.
    #[arg(long = "n-max")]
    n_max: Option<usize>,
    /// Relative tolerance of the momentum-space integrals.
    #[arg(long = "quad-tolerance")]
    quad_tolerance: Option<String>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Default)]
struct BoundFlags {
    /// theorem or preliminary.
    #[arg(long)]
    bound: Option<String>,
    /// low_temperature or small_beta.
    #[arg(long)]
    regime: Option<String>,
    /// Constant of the leading-term lattice-sum gap C/(bt ell).
    #[arg(long = "c-finite-size")]
    c_finite_size: Option<f64>,
    /// Prefactor of the projector tail.
    #[arg(long = "c-projector-tail")]
    c_projector_tail: Option<f64>,
    /// Prefactor of the second-order remainder.
    #[arg(long = "c-remainder")]
    c_remainder: Option<f64>,
    /// Prefactor of the discrete-versus-continuum correction gap.
    #[arg(long = "c-correction-finite-size")]
    c_correction_finite_size: Option<f64>,
    /// Prefactor of the reported r_d term.
    #[arg(long = "c-r-d")]
    c_r_d: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Free-energy upper bound with its error budget, one report per beta_tilde.
    FreeEnergy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bound: BoundFlags,
    },
    /// Exact, bulk and continuum first-order corrections on a Dirichlet box.
    Correction {
        #[command(flatten)]
        common: Common,
    },
    /// Exact-diagonalization free energy against the preliminary bound.
    EdCompare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bound: BoundFlags,
    },
    /// Quartic expectation: mode space, position-space Wick and Fock trace.
    WickVerify {
        #[command(flatten)]
        common: Common,
    },
    /// Second-order cancellation scan on the periodic grid.
    Diagrams {
        #[command(flatten)]
        common: Common,
        /// Allow ell above the default cap of 10.
        #[arg(long)]
        force: bool,
        /// Only `exclude` is implemented.
        #[arg(long = "zero-mode")]
        zero_mode: Option<String>,
    },
    /// Pass/fail suite over the module invariants.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated suites: hp, magnon, trig, wick, rho, riemann, variational.
        #[arg(long)]
        only: Option<String>,
        /// Shift added to the expected magnon energy (harness self-test).
        #[arg(long = "perturb-epsilon", allow_hyphen_values = true)]
        perturb_epsilon: Option<f64>,
    },
}

impl Common {
    fn insert(&self, m: &mut BTreeMap<String, String>) {
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("d", self.d.map(|v| v.to_string()));
        put("ell", self.ell.map(|v| v.to_string()));
        put("two_s", self.two_s.map(|v| v.to_string()));
        put("beta_tilde", self.beta_tilde.clone());
        put("boundary", self.boundary.clone());
        put("n_max", self.n_max.map(|v| v.to_string()));
        put("quad_tolerance", self.quad_tolerance.clone());
        put("thread_count", self.threads.map(|v| v.to_string()));
        put("output_path", self.output.as_ref().map(|p| p.display().to_string()));
        put("output_format", self.format.clone());
    }
}

impl BoundFlags {
    fn insert(&self, m: &mut BTreeMap<String, String>) {
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("bound", self.bound.clone());
        put("regime", self.regime.clone());
        put("c_finite_size", self.c_finite_size.map(|v| v.to_string()));
        put("c_projector_tail", self.c_projector_tail.map(|v| v.to_string()));
        put("c_remainder", self.c_remainder.map(|v| v.to_string()));
        put("c_correction_finite_size", self.c_correction_finite_size.map(|v| v.to_string()));
        put("c_r_d", self.c_r_d.map(|v| v.to_string()));
    }
}

/// What a subcommand produced.
pub struct Outcome {
    pub results: Value,
    /// Header plus rows, without the comment preamble.
    pub csv: String,
    /// Written next to the main output (or appended on stdout) when present.
    pub summary: Option<Value>,
    pub failed: bool,
}

fn main() -> ExitCode {
    // the long version carries the git revision baked in at build time
    let long: &'static str = Box::leak(magnon::version().into_boxed_str());
    let matches = Cli::command().version(long.trim_start_matches("magnon ")).get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut merged = match &cli.config {
        Some(p) => config::read_file(p)?,
        None => BTreeMap::new(),
    };
    let mut flags = BTreeMap::new();
    let (name, defaults): (&str, &[(&str, &str)]) = match &cli.command {
        Command::FreeEnergy { common, bound } => {
            common.insert(&mut flags);
            bound.insert(&mut flags);
            ("free-energy", &[("d", "3"), ("two_s", "2")])
        }
        Command::Correction { common } => {
            common.insert(&mut flags);
            ("correction", &[])
        }
        Command::EdCompare { common, bound } => {
            common.insert(&mut flags);
            bound.insert(&mut flags);
            ("ed-compare", &[("two_s", "1")])
        }
        Command::WickVerify { common } => {
            common.insert(&mut flags);
            ("wick-verify", &[])
        }
        Command::Diagrams { common, force, zero_mode } => {
            common.insert(&mut flags);
            if *force {
                flags.insert("force".into(), "true".into());
            }
            if let Some(z) = zero_mode {
                flags.insert("zero_mode".into(), z.clone());
            }
            (
                "diagrams",
                &[("d", "3"), ("ell", "8"), ("two_s", "2"), ("beta_tilde", "4,6,8,12,16"), ("output_format", "csv")],
            )
        }
        Command::Verify { common, only, perturb_epsilon } => {
            common.insert(&mut flags);
            if let Some(o) = only {
                flags.insert("only".into(), o.clone());
            }
            if let Some(p) = perturb_epsilon {
                flags.insert("perturb_epsilon".into(), p.to_string());
            }
            ("verify", &[])
        }
    };
    for kv in &cli.set {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {kv:?}")))?;
        merged.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    merged.extend(flags);
    let cfg = RunConfig::resolve(merged, defaults)?;

    if let Some(n) = cfg.thread_count {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))?;
    }

    let outcome = match name {
        "free-energy" => commands::free_energy(&cfg)?,
        "correction" => commands::correction(&cfg)?,
        "ed-compare" => commands::ed_compare(&cfg)?,
        "wick-verify" => commands::wick_verify(&cfg)?,
        "diagrams" => commands::diagrams(&cfg)?,
        _ => verify::run(&cfg)?,
    };
    // verify always reports on stdout; a file copy is written only on request
    if name != "verify" || cfg.output_path.is_some() {
        emit(name, &cfg, &outcome)?;
    }
    Ok(!outcome.failed)
}

fn emit(command: &str, cfg: &RunConfig, out: &Outcome) -> Result<(), CliError> {
    let version = magnon::version();
    let body = match cfg.output_format {
        Format::Json => {
            let mut env = json!({
                "version": version,
                "command": command,
                "config": cfg.to_json(),
                "results": out.results,
            });
            if let Some(s) = &out.summary {
                env["summary"] = s.clone();
            }
            pretty(&env)
        }
        Format::Csv => {
            format!("# version: {version}\n# command: {command}\n# config: {}\n{}", cfg.to_comment(), out.csv)
        }
    };
    let summary = match (&out.summary, cfg.output_format) {
        (Some(s), Format::Csv) => Some(json!({
            "version": version,
            "command": command,
            "config": cfg.to_json(),
            "summary": s,
        })),
        _ => None,
    };
    match &cfg.output_path {
        Some(p) => {
            write_file(p, &body)?;
            if let Some(s) = summary {
                let mut sp = p.clone().into_os_string();
                sp.push(".summary.json");
                write_file(&PathBuf::from(sp), &pretty(&s))?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let mut text = body;
            if let Some(s) = summary {
                text.push_str(&format!("# summary: {}\n", serde_json::to_string(&s).expect("json")));
            }
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Usage(format!("cannot write to stdout: {e}")))?;
        }
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

fn write_file(p: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(p, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))
}
