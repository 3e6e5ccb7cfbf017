//! `hyatt`: run observer scenarios, write traces and summaries, report
//! design constants, run the acceptance suite, and plot traces.

mod output;
mod plot;
mod report;

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybrid_attitude::sim::metrics;
use hybrid_attitude::{default_example, Mode, ScenarioConfig, Variant};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "hyatt", version, about = "Hybrid attitude and gyro-bias observers on SO(3)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run scenario files and write trace.csv and summary.json.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Scenarios run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run a builtin example (1 or 2).
    Example {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=2))]
        which: u8,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Gap bounds, warp limits, the D3/D4 axis and sampled flow-set constants.
    DesignReport {
        /// JSON file `{"vectors": [[x, y, z], ...], "rho": [...]}`; the
        /// second example's vectors when omitted.
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[arg(long, default_value_t = 0.95 / 5f64.sqrt())]
        k: f64,
        #[arg(long = "delta-frac", default_value_t = 0.8)]
        delta_frac: f64,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write design_report.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Verify {
        #[arg(long, default_value_t = hybrid_attitude_verify::DEFAULT_SEED)]
        seed: u64,
    },
    /// Render attitude and bias error against time from a trace.
    Plot {
        trace: PathBuf,
        #[arg(long, default_value = "plot.svg")]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Default, Clone)]
struct Overrides {
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Simulate this design's hybrid mode and its smooth baseline.
    #[arg(long, conflicts_with = "modes")]
    design: Option<Variant>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long = "delta-frac")]
    delta_frac: Option<f64>,
    /// Comma-separated modes, e.g. `hybridI,smoothI`.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<Mode>>,
    #[arg(long)]
    q0: Option<usize>,
    /// Accepted for symmetry with the property suites; runs are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(t) = self.t_end {
            cfg.t_end = t;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(f) = self.delta_frac {
            cfg.delta_fraction = f;
        }
        if let Some(q) = self.q0 {
            cfg.q0 = q;
        }
        if let Some(v) = self.design {
            let baseline = if v.is_isotropic() { Mode::SmoothI } else { Mode::SmoothII };
            cfg.modes = vec![Mode::from_variant(v), baseline];
        }
        if let Some(m) = &self.modes {
            cfg.modes = m.clone();
        }
    }
}

/// Error reported on stderr as JSON; exit code 1 for bad inputs, 2 for
/// faults during execution.
#[derive(Debug, Serialize)]
pub struct Failure {
    #[serde(skip)]
    code: u8,
    kind: String,
    message: String,
}

impl Failure {
    pub fn validation(kind: &str, message: impl fmt::Display) -> Self {
        Failure { code: 1, kind: kind.into(), message: message.to_string() }
    }

    pub fn fault(kind: &str, message: impl fmt::Display) -> Self {
        Failure { code: 2, kind: kind.into(), message: message.to_string() }
    }

    fn emit(&self) -> ExitCode {
        let body = serde_json::json!({ "error": self, "exit_code": self.code });
        eprintln!("{body}");
        ExitCode::from(self.code)
    }
}

impl From<hybrid_attitude::Error> for Failure {
    fn from(e: hybrid_attitude::Error) -> Self {
        let code = if e.is_validation() { 1 } else { 2 };
        Failure { code, kind: e.kind().into(), message: e.to_string() }
    }
}

type CliResult<T> = Result<T, Failure>;

fn load_scenario(path: &Path) -> CliResult<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation("io", format!("cannot read {}: {e}", path.display())))?;
    let mut cfg: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::validation("scenario_parse", format!("{}: {e}", path.display())))?;
    if cfg.name.is_empty() {
        cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(cfg)
}

/// Runs one scenario and writes its artifacts into `dir`.
fn execute(cfg: &ScenarioConfig, dir: &Path) -> CliResult<String> {
    cfg.validate()?;
    let out = hybrid_attitude::run(cfg)?;
    std::fs::create_dir_all(dir).map_err(|e| Failure::fault("io", format!("cannot create {}: {e}", dir.display())))?;
    output::write_trace(&dir.join("trace.csv"), &out.records)?;
    let summary = metrics(cfg, &out);
    output::write_json(&dir.join("summary.json"), &summary)?;
    Ok(output::summary_lines(&summary))
}

fn run_many(cfgs: Vec<ScenarioConfig>, out: &Path, jobs: usize) -> CliResult<()> {
    for cfg in &cfgs {
        cfg.validate()?;
    }
    let dirs: Vec<PathBuf> = if cfgs.len() == 1 {
        vec![out.to_path_buf()]
    } else {
        cfgs.iter()
            .enumerate()
            .map(|(i, c)| out.join(if c.name.is_empty() { format!("scenario{i}") } else { c.name.clone() }))
            .collect()
    };
    let jobs = jobs.max(1);
    let work: Vec<(&ScenarioConfig, &PathBuf)> = cfgs.iter().zip(&dirs).collect();
    for chunk in work.chunks(jobs) {
        let results: Vec<CliResult<String>> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|(c, d)| s.spawn(move || execute(c, d))).collect();
            handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
        });
        for r in results {
            print!("{}", r?);
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { scenarios, overrides, out, jobs } => {
            let cfgs = scenarios
                .iter()
                .map(|p| {
                    let mut c = load_scenario(p)?;
                    overrides.apply(&mut c);
                    Ok(c)
                })
                .collect::<CliResult<Vec<_>>>()?;
            run_many(cfgs, &out, jobs)
        }
        Command::Example { which, overrides, out } => {
            let mut cfg = default_example(which)?;
            overrides.apply(&mut cfg);
            run_many(vec![cfg], &out, 1)
        }
        Command::DesignReport { vectors, k, delta_frac, samples, seed, out } => {
            let (vecs, rho) = match vectors {
                Some(p) => report::load_vectors(&p)?,
                None => {
                    let c = default_example(2)?;
                    (c.inertial(), c.rho)
                }
            };
            let rep = report::design_report(&vecs, &rho, k, delta_frac, samples, seed)?;
            let text = serde_json::to_string_pretty(&rep).expect("report serializes");
            // A closed pipe on stdout is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)
                    .map_err(|e| Failure::fault("io", format!("cannot create {}: {e}", dir.display())))?;
                output::write_json(&dir.join("design_report.json"), &rep)?;
            }
            Ok(())
        }
        Command::Verify { seed } => {
            println!("acceptance suite, seed {seed}");
            let reports = hybrid_attitude_verify::run_all_with(seed, |r| println!("{r}"));
            let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
            if failed.is_empty() {
                println!("all {} criteria passed", reports.len());
                Ok(())
            } else {
                Err(Failure::fault("verify_failed", format!("criteria {failed:?} failed")))
            }
        }
        Command::Plot { trace, out } => {
            let rows = output::read_trace(&trace)?;
            let svg = plot::render(&rows)?;
            std::fs::write(&out, svg).map_err(|e| Failure::fault("io", format!("cannot write {}: {e}", out.display())))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return Failure::validation("usage", e.to_string().trim_end()).emit(),
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.emit(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_flag_selects_modes() {
        let mut cfg = default_example(1).unwrap();
        let o = Overrides { design: Some(Variant::D4), dt: Some(2e-3), ..Default::default() };
        o.apply(&mut cfg);
        assert_eq!(cfg.modes, vec![Mode::HybridIV, Mode::SmoothII]);
        assert_eq!(cfg.dt, 2e-3);
    }

    #[test]
    fn modes_flag_parses() {
        let cli =
            Cli::try_parse_from(["hyatt", "example", "2", "--modes", "hybridIII,smoothII", "--t-end", "1"]).unwrap();
        let Command::Example { overrides, .. } = cli.command else { panic!("wrong subcommand") };
        assert_eq!(overrides.modes, Some(vec![Mode::HybridIII, Mode::SmoothII]));
        assert!(Cli::try_parse_from(["hyatt", "example", "1", "--modes", "hybridI", "--design", "d1"]).is_err());
        assert!(Cli::try_parse_from(["hyatt", "example", "3"]).is_err());
    }

    #[test]
    fn error_codes() {
        let e: Failure = hybrid_attitude::Error::InvalidDeltaFraction(2.0).into();
        assert_eq!(e.code, 1);
        let e: Failure = hybrid_attitude::Error::Singularity { u: 1.0 }.into();
        assert_eq!(e.code, 2);
    }
}
