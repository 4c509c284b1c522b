use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use kr_steer::conversion::build_chain;
use kr_steer::kr_forms::{build_kr, derived_flag_dims, KrWord};
use kr_steer::nilpotency::{nilpotency_report, DEFAULT_MAX_DIM};
use kr_steer::planner::{plan, SteeringPlan};
use kr_steer::sim::{
    angle_svg, bundled_scenario, path_svg, run_scenario, trajectory_csv, verify_plan, ScenarioSpec,
    BUNDLED_SCENARIOS, DEFAULT_STEPS,
};
use kr_steer::trailer::{trailer_fields, Configuration};
use kr_steer::{Error, Result};

/// Kumpera-Ruiz normal forms and steering for a car towing trailers.
#[derive(Parser, Debug)]
#[command(name = "kr-steer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert the n-trailer system to KR normal form at a configuration and
    /// print the chain report.
    Convert {
        /// Number of trailers.
        #[arg(long)]
        n: usize,
        /// Configuration JSON file: {"xi1": .., "xi2": .., "thetas": [..]}.
        #[arg(long)]
        config: PathBuf,
        /// Also print the coordinate functions x1..x_{n+3}.
        #[arg(long)]
        expressions: bool,
    },
    /// Generate the Lie algebra of a KR normal form and report its
    /// dimension, lower central series and nilindex.
    Nilpotency {
        /// KR word, e.g. "R(0).S.R(1/2)"; "" is the three-dimensional form.
        #[arg(long, allow_hyphen_values = true)]
        word: String,
        /// Give up when the algebra exceeds this dimension.
        #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
        max_dim: usize,
    },
    /// Derived-flag dimensions at a point, for a KR word or the trailer
    /// fields.
    Flag {
        /// KR word (exclusive with --trailers).
        #[arg(long, allow_hyphen_values = true, conflicts_with = "trailers")]
        word: Option<String>,
        /// Use the n-trailer fields instead of a KR word.
        #[arg(long)]
        trailers: Option<usize>,
        /// Comma-separated coordinates of the point.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Flag depth; defaults to dimension - 2.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Plan a two-trailer maneuver from a scenario file.
    Plan {
        /// Scenario JSON: {"n": 2, "zeta0": [..], "zetaT": [..], "steps": N,
        /// "root_choice": "min_abs"|"max_abs"}.
        #[arg(long)]
        scenario: PathBuf,
        /// Write the plan here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a plan in closed loop and write trajectory CSV and SVG plots.
    Simulate {
        /// Plan JSON produced by `plan`.
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
    },
    /// Run the bundled two-trailer scenarios and write their artifacts.
    ReproduceFigures {
        #[arg(long, default_value = "figures")]
        out_dir: PathBuf,
    },
}

#[derive(Serialize)]
struct ErrorJson<'a> {
    error: &'a str,
    message: String,
}

// a closed pipe (e.g. `| head`) is not an error worth reporting
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    emit(&(serde_json::to_string_pretty(v)? + "\n"))
}

fn parse_word(s: &str) -> Result<KrWord> {
    s.parse()
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!("bad coordinate `{}` in --point", t.trim()))
            })
        })
        .collect()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct ConvertOutput {
    #[serde(flatten)]
    report: kr_steer::conversion::ChainReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_functions: Option<Vec<String>>,
}

#[derive(Serialize)]
struct FlagOutput {
    dimension: usize,
    point: Vec<f64>,
    dims: Vec<usize>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convert {
            n,
            config,
            expressions,
        } => {
            let cfg: Configuration = serde_json::from_str(&read(&config)?)?;
            let cfg = cfg.normalized()?;
            let chain = build_chain(n, &cfg)?;
            let names: Vec<String> = ["xi1", "xi2"]
                .iter()
                .map(|s| s.to_string())
                .chain((0..=n).map(|i| format!("theta{i}")))
                .collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let x_functions = expressions.then(|| {
                chain
                    .x_funcs
                    .iter()
                    .map(|e| e.display_with(&refs).to_string())
                    .collect()
            });
            print_json(&ConvertOutput {
                report: chain.report()?,
                x_functions,
            })
        }
        Command::Nilpotency { word, max_dim } => {
            let w = parse_word(&word)?;
            print_json(&nilpotency_report(&build_kr(&w), max_dim)?)
        }
        Command::Flag {
            word,
            trailers,
            point,
            depth,
        } => {
            let p = parse_point(&point)?;
            let (dim, dims) = match (word, trailers) {
                (_, Some(n)) => {
                    let d = n + 3;
                    kr_steer::error::check_dim(d, p.len())?;
                    let (t1, t2) = trailer_fields(n);
                    (d, derived_flag_dims(&[t1, t2], &p, depth.unwrap_or(d - 2))?)
                }
                (Some(w), None) => {
                    let pair = build_kr(&parse_word(&w)?);
                    let d = pair.dim();
                    kr_steer::error::check_dim(d, p.len())?;
                    (
                        d,
                        derived_flag_dims(&pair.fields(), &p, depth.unwrap_or(d - 2))?,
                    )
                }
                (None, None) => {
                    return Err(Error::InvalidInput(
                        "give either --word or --trailers".into(),
                    ))
                }
            };
            print_json(&FlagOutput {
                dimension: dim,
                point: p,
                dims,
            })
        }
        Command::Plan { scenario, out } => {
            let spec = ScenarioSpec::from_json(&read(&scenario)?)?;
            let z0 = Configuration::from_state(&spec.zeta0)?;
            let zt = Configuration::from_state(&spec.zeta_t)?;
            let p = plan(&z0, &zt, spec.root_choice)?;
            let text = serde_json::to_string_pretty(&p)? + "\n";
            match out {
                Some(path) => Ok(fs::write(path, text)?),
                None => emit(&text),
            }
        }
        Command::Simulate {
            plan,
            out_dir,
            steps,
        } => {
            let p: SteeringPlan = serde_json::from_str(&read(&plan)?)?;
            let (report, traj) = verify_plan(&p, steps)?;
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join("trajectory.csv"), trajectory_csv(&traj))?;
            fs::write(
                out_dir.join("path.svg"),
                path_svg(&traj, "last trailer path"),
            )?;
            fs::write(
                out_dir.join("angles.svg"),
                angle_svg(&traj, "theta0, theta1, theta2"),
            )?;
            let text = serde_json::to_string_pretty(&report)? + "\n";
            fs::write(out_dir.join("report.json"), &text)?;
            emit(&text)
        }
        Command::ReproduceFigures { out_dir } => {
            let mut summaries = Vec::new();
            let mut failed = Vec::new();
            for (name, _) in BUNDLED_SCENARIOS {
                let spec = bundled_scenario(name).expect("bundled");
                let outcome = run_scenario(&spec, Some(&out_dir))?;
                log::info!("{name}: terminal error {:e}", outcome.report.trailer_error);
                if !(outcome.report.passed && spec.terminal_on_singular_locus()) {
                    failed.push(format!(
                        "{name} (terminal error {:e})",
                        outcome.report.trailer_error
                    ));
                }
                summaries.push(serde_json::from_str::<serde_json::Value>(
                    &outcome.summary_json()?,
                )?);
            }
            print_json(&summaries)?;
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Error::VerificationFailed(format!(
                    "endpoint checks failed: {}",
                    failed.join(", ")
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KR_STEER_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = ErrorJson {
                error: "invalid_arguments",
                message: e.to_string().trim().to_string(),
            };
            eprintln!("{}", serde_json::to_string(&msg).unwrap_or_default());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = ErrorJson {
                error: e.kind(),
                message: e.to_string(),
            };
            eprintln!("{}", serde_json::to_string(&msg).unwrap_or_default());
            ExitCode::from(1)
        }
    }
}
