use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mixed_hk::batch::batch_run_with;
use mixed_hk::dynamics::{initial_state, simulate, Trajectory};
use mixed_hk::io::{parse_config, read_any, write_trajectory, write_trajectory_json};
use mixed_hk::monitors::check_trajectory;
use mixed_hk::profile::{build_profile, Graph};
use mixed_hk::scenario::{run_scenario_seeded, SCENARIO_NAMES};
use mixed_hk::spectral::{lambda2_chain_check, spectral_report, update_factorization};
use mixed_hk::HkError;

#[derive(Parser)]
#[command(name = "mixed-hk", version, about = "Mixed Hegselmann-Krause simulation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Overrides the seed from the config (base seed for `batch`).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (a directory for `batch`); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the extension of `--out`, else JSON.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Common {
    fn format(&self) -> Format {
        self.format.unwrap_or_else(|| match self.out.as_deref().and_then(Path::extension) {
            Some(e) if e == "csv" => Format::Csv,
            _ => Format::Json,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a model config and write the trajectory.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        max_steps: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-check every monitored inequality on a stored trajectory.
    Check {
        trajectory: PathBuf,
        /// Triviality scale for tau and the interaction checks; eps/4 by default.
        #[arg(long)]
        delta: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Laplacian spectrum and bound verdicts for one profile.
    Spectral {
        /// A trajectory file, or a model config with `--from-config`.
        input: PathBuf,
        #[arg(long)]
        from_config: bool,
        /// Recorded time to analyse.
        #[arg(long, default_value_t = 0)]
        t: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Run a built-in scenario and evaluate its assertions.
    Scenario {
        /// One of example1, example2, example3, sync-hk, async-hk, powerlaw-a2; `list` prints them.
        name: String,
        /// Also write the trajectory here (CSV unless the name ends in .json).
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Independent runs with seeds base, base + 1, ...
    Batch {
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long)]
        delta: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    emit(out, &bytes)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}

fn write_traj(traj: &Trajectory, path: &Path, format: Format) -> anyhow::Result<()> {
    if format == Format::Json {
        write_trajectory_json(traj, path)?;
    } else {
        write_trajectory(traj, path)?;
    }
    Ok(())
}

/// `Ok(true)` on success, `Ok(false)` on a violated assertion or monitor.
fn run(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Simulate { config, max_steps, common } => {
            let mut cfg = parse_config(&config)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            if let Some(m) = max_steps {
                cfg.max_steps = m;
            }
            let traj = simulate(&cfg)?;
            match &common.out {
                Some(p) => write_traj(&traj, p, common.format())?,
                None if common.format() == Format::Json => emit_json(None, &traj)?,
                None => {
                    let dir = tempdir_path();
                    fs::create_dir_all(&dir)?;
                    let p = dir.join("trajectory.csv");
                    write_trajectory(&traj, &p)?;
                    emit(None, &fs::read(&p)?)?;
                    let _ = fs::remove_dir_all(&dir);
                }
            }
            eprintln!(
                "{} states, stop {:?}, {} online violations",
                traj.states.len(),
                traj.stop,
                traj.violations.len()
            );
            Ok(traj.violations.is_empty())
        }
        Command::Check { trajectory, delta, common } => {
            let traj = read_any(&trajectory)?;
            let delta = delta.unwrap_or(traj.header.epsilon / 4.0);
            let report = check_trajectory(&traj, delta);
            match common.format() {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out<'a> {
                        seed: Option<u64>,
                        #[serde(flatten)]
                        report: &'a mixed_hk::monitors::CheckReport,
                    }
                    emit_json(common.out.as_deref(), &Out { seed: common.seed, report: &report })?;
                }
                Format::Csv => {
                    let header = [
                        "t",
                        "Z",
                        "beta",
                        "diam_global",
                        "nl8_lhs",
                        "nl8_rhs",
                        "interaction",
                        "nl8_ok",
                        "nonexpansion_ok",
                        "contraction_ok",
                        "theorem2_ok",
                    ];
                    let rows = report.steps.iter().map(|s| {
                        let m = &s.metrics;
                        vec![
                            m.t.to_string(),
                            format!("{:?}", m.z),
                            m.beta.map_or(String::new(), |b| format!("{b:?}")),
                            format!("{:?}", m.diam_global),
                            format!("{:?}", m.nl8_lhs),
                            format!("{:?}", m.nl8_rhs),
                            m.interaction_flag.to_string(),
                            s.nl8_ok.to_string(),
                            s.nonexpansion_ok.to_string(),
                            s.contraction_ok.map_or(String::new(), |b| b.to_string()),
                            s.theorem2_ok.to_string(),
                        ]
                    });
                    emit(common.out.as_deref(), &csv_bytes(&header, rows)?)?;
                }
            }
            eprintln!("summary: {}", serde_json::to_string(&report.summary)?);
            Ok(report.ok())
        }
        Command::Spectral { input, from_config, t, common } => {
            let (state, alpha) = if from_config {
                let mut cfg = parse_config(&input)?;
                if let Some(seed) = common.seed {
                    cfg.seed = seed;
                }
                let x0 = initial_state(&cfg)?;
                let alpha = cfg.schedule.alpha(0, cfg.n, cfg.seed)?;
                (x0, alpha)
            } else {
                let traj = read_any(&input)?;
                let Some(k) = traj.states.iter().position(|s| s.t() == t) else {
                    bail!("no recorded state at t = {t}");
                };
                let alpha = traj.alphas.get(k).cloned().unwrap_or_else(|| vec![0.0; traj.header.n]);
                (traj.states[k].clone(), alpha)
            };
            let profile = build_profile(&state);
            let graph: &Graph = &profile.graph;
            let report = spectral_report(graph)?;
            let factorization = update_factorization(&state, &alpha)?;
            let chain = match lambda2_chain_check(&state, &alpha, common.seed.unwrap_or(0)) {
                Ok(c) => Some(c),
                Err(HkError::Precondition(_)) | Err(HkError::SizeLimit { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let ok = report.all_hold()
                && factorization.residual <= 1e-12
                && chain.as_ref().is_none_or(|c| c.all_hold());
            match common.format() {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out<'a> {
                        t: u64,
                        edges: &'a [(usize, usize)],
                        spectral: &'a mixed_hk::spectral::SpectralReport,
                        factorization_residual: f64,
                        chain: Option<&'a mixed_hk::spectral::ChainVerdicts>,
                    }
                    emit_json(
                        common.out.as_deref(),
                        &Out {
                            t: state.t(),
                            edges: graph.edges(),
                            spectral: &report,
                            factorization_residual: factorization.residual,
                            chain: chain.as_ref(),
                        },
                    )?;
                }
                Format::Csv => {
                    let rows =
                        report.eigenvalues.iter().enumerate().map(|(k, v)| vec![k.to_string(), format!("{v:?}")]);
                    emit(common.out.as_deref(), &csv_bytes(&["index", "eigenvalue"], rows)?)?;
                }
            }
            Ok(ok)
        }
        Command::Scenario { name, trajectory, common } => {
            if name == "list" {
                for n in SCENARIO_NAMES {
                    println!("{n}");
                }
                return Ok(true);
            }
            let (report, traj) = run_scenario_seeded(&name, common.seed)?;
            if let Some(p) = &trajectory {
                let f = if p.extension().is_some_and(|e| e == "json") { Format::Json } else { Format::Csv };
                write_traj(&traj, p, f)?;
            }
            match common.format() {
                Format::Json => emit_json(common.out.as_deref(), &report)?,
                Format::Csv => {
                    let rows = report.assertions.iter().map(|a| {
                        vec![a.claim.clone(), a.expected.clone(), a.observed.clone(), a.passed.to_string()]
                    });
                    emit(common.out.as_deref(), &csv_bytes(&["claim", "expected", "observed", "passed"], rows)?)?;
                }
            }
            for a in report.assertions.iter().filter(|a| !a.passed) {
                eprintln!("FAILED {}\n  expected: {}\n  observed: {}", a.claim, a.expected, a.observed);
            }
            Ok(report.passed)
        }
        Command::Batch { config, runs, delta, common } => {
            let cfg = parse_config(&config)?;
            let base = common.seed.unwrap_or(cfg.seed);
            if let Some(dir) = &common.out {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let ext = if common.format() == Format::Json { "json" } else { "csv" };
            let summary = batch_run_with(&cfg, runs, base, delta, |i, traj| match &common.out {
                Some(dir) => {
                    let p = dir.join(format!("run_{i:04}.{ext}"));
                    if ext == "json" {
                        write_trajectory_json(traj, p)
                    } else {
                        write_trajectory(traj, p)
                    }
                }
                None => Ok(()),
            })?;
            let summary_path = common.out.as_ref().map(|d| d.join("summary.json"));
            emit_json(summary_path.as_deref(), &summary)?;
            eprintln!(
                "{} runs, tau found in {}, consensus rate {:.3}, {} violations",
                summary.runs, summary.tau.found, summary.consensus_rate, summary.total_violations
            );
            Ok(summary.total_violations == 0)
        }
    }
}

fn tempdir_path() -> PathBuf {
    std::env::temp_dir().join(format!("mixed-hk-{}", std::process::id()))
}
