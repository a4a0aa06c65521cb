use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use sphere_rigidity::experiments::{
    convergence_study, generate, run_sweep, write_csv, ExperimentConfig, Family, GenerateParams,
    SweepSummary, DEFAULT_BAND_MAX,
};
use sphere_rigidity::maps::SphereMap;
use sphere_rigidity::moebius::center_map;
use sphere_rigidity::rigidity::{
    analyze_signed, explicit_constants, AnalyzeOptions, SearchOptions, DEFAULT_THETA,
};
use sphere_rigidity::sphere::SphereGrid;

/// Exit status for runs that completed but flagged anomalies.
const EXIT_ANOMALY: u8 = 1;
/// Exit status for hard errors.
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "sphere-rigidity",
    version,
    about = "Conformal deficit and Möbius rigidity checks for maps S² → S²"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a test map from one of the generator families.
    Generate {
        #[arg(long)]
        family: Family,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "ntheta", default_value_t = 48)]
        n_theta: usize,
        /// Smallest and largest λ of the random Möbius part.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        lambda_range: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_BAND_MAX)]
        band_max: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the rigidity pipeline on a map file and emit a JSON report.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        /// Also locally minimize over Möbius maps starting from the candidate.
        #[arg(long)]
        optimize: bool,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the centering transform ψ and the mean of u∘ψ.
    Center {
        #[arg(long)]
        input: PathBuf,
    },
    /// Analyze every (family, ε, grid) of a JSON config and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.csv` from the config; stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate residuals of one family member across grid sizes.
    Converge {
        #[arg(long)]
        family: Family,
        #[arg(long, value_delimiter = ',', default_values_t = [24usize, 48, 96])]
        grids: Vec<usize>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        lambda_range: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the explicit constants c₁(θ) and c(θ).
    Constants {
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
    },
}

fn params(eps: f64, lambda_range: Option<Vec<f64>>, band_max: usize) -> GenerateParams {
    let mut p = GenerateParams::with_eps(eps);
    if let Some(r) = lambda_range {
        p.lambda_range = (r[0], r[1]);
    }
    p.band_max = band_max;
    p
}

fn read_map(path: &Path) -> Result<SphereMap> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SphereMap::from_file_text(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Generate {
            family,
            eps,
            seed,
            n_theta,
            lambda_range,
            band_max,
            out,
        } => {
            let grid = SphereGrid::with_resolution(n_theta)?;
            let u = generate(family, &params(eps, lambda_range, band_max), &grid, seed)?;
            emit(Some(&out), &u.to_file_text())?;
            Ok(0)
        }
        Command::Analyze {
            input,
            theta,
            optimize,
            out,
        } => {
            let u = read_map(&input)?;
            let opts = AnalyzeOptions {
                optimize: optimize.then(SearchOptions::default),
                ..AnalyzeOptions::default()
            };
            let report = analyze_signed(&u, theta, &opts)?;
            emit(out.as_deref(), &(report.to_json() + "\n"))?;
            eprintln!("status: {}", report.status);
            Ok(if report.status.is_hard_error() {
                EXIT_ERROR
            } else if !report.bound_respected() {
                EXIT_ANOMALY
            } else {
                0
            })
        }
        Command::Center { input } => {
            let u = read_map(&input)?;
            let c = center_map(&u)?;
            let text = format!(
                "psi {}\nresidual {:e}\niterations {}\n",
                c.psi.to_line(),
                c.residual.norm(),
                c.iterations
            );
            emit(None, &text)?;
            Ok(0)
        }
        Command::Sweep { config, out } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            let sweep = run_sweep(&cfg)?;
            let csv_path = out.or_else(|| cfg.output.csv.clone());
            emit(csv_path.as_deref(), &write_csv(&sweep.rows))?;
            if let Some(dir) = &cfg.output.reports {
                fs::create_dir_all(dir)?;
                for (row, report) in sweep.rows.iter().zip(&sweep.reports) {
                    if let Some(r) = report {
                        let name = format!("{}_eps{:e}_n{}.json", row.family, row.eps, row.n_theta);
                        fs::write(dir.join(name), r.to_json() + "\n")?;
                    }
                }
            }
            for (row, msg) in sweep.rows.iter().zip(&sweep.messages) {
                if let Some(m) = msg {
                    eprintln!(
                        "{} eps={} n_theta={}: {m}",
                        row.family, row.eps, row.n_theta
                    );
                }
            }
            let summary = SweepSummary::new(&sweep.rows, cfg.theta)?;
            eprintln!("{summary}");
            Ok(summary.exit_code() as u8)
        }
        Command::Converge {
            family,
            grids,
            eps,
            seed,
            lambda_range,
            theta,
            out,
        } => {
            let table = convergence_study(
                family,
                &params(eps, lambda_range, DEFAULT_BAND_MAX),
                &grids,
                seed,
                theta,
            )?;
            emit(out.as_deref(), &table.to_csv())?;
            for a in &table.anomalies {
                eprintln!("anomaly: {a}");
            }
            Ok(if table.anomalies.is_empty() {
                0
            } else {
                EXIT_ANOMALY
            })
        }
        Command::Constants { theta } => {
            let k = explicit_constants(theta)?;
            let json = serde_json::json!({ "theta": k.theta, "c1": k.c1, "c": k.c });
            emit(None, &(serde_json::to_string_pretty(&json)? + "\n"))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
