//! `coopcf`: runs the numerical scenarios and writes their curves as CSV.
//!
//! Each run prints or writes one CSV whose first line records the scenario,
//! seed and search budget. With `--out`, a JSON sidecar next to the CSV holds
//! the full configuration, the invariant checks and any scalar results. The
//! process exits with status 1 if any invariant check fails.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use coopcf::dmt::{self, OutageScheme};
use coopcf::scenarios::{self, linspace, LinkSimSpec, ScenarioReport, ScenarioSpec};
use coopcf::search::SearchBudget;

#[derive(Parser, Debug)]
#[command(name = "coopcf", version, about = "Cooperative compute-and-forward scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Transmit SNR(s) in dB, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    snr_db: Vec<f64>,

    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Search budget as coeff_bound,grid_points,refine_iters.
    #[arg(long, global = true, default_value = "3,9,40")]
    budget: SearchBudget,

    /// CSV output path; a JSON sidecar is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Trials (example2, linksim) or Monte Carlo samples (outage).
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Symmetric two-transmitter network, sweep of the inter-transmitter gain.
    Example1 {
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        g2_min_db: f64,
        #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
        g2_max_db: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
    /// Three transmitters placed at random on an arc around the receiver.
    Example2 {
        #[arg(long, default_value_t = 9)]
        points: usize,
        /// Path-loss exponent.
        #[arg(long, default_value_t = 4.0)]
        alpha: f64,
    },
    /// Two transmitters, one receiver, sweep of h21.
    Example3 {
        #[arg(long, default_value_t = 0.0)]
        h21_min: f64,
        #[arg(long, default_value_t = 2.0)]
        h21_max: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
    /// Two transmitters, two receivers with zero-forcing beams, sweep of h21.
    Example4 {
        #[arg(long, default_value_t = 0.0)]
        h21_min: f64,
        #[arg(long, default_value_t = 2.0)]
        h21_max: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
    /// Analytic diversity-multiplexing tradeoff curves.
    Dmt {
        /// Numbers of transmitters, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,5")]
        transmitters: Vec<usize>,
        #[arg(long, default_value_t = dmt::CURVE_POINTS)]
        points: usize,
    },
    /// End-to-end lattice link simulation on the symmetric network.
    Linksim {
        /// Inter-transmitter gain in dB.
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        g2_db: f64,
        /// Codebook rate as a fraction of the optimised cooperative rate.
        #[arg(long, default_value_t = 0.5)]
        rate_fraction: f64,
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Field size (prime).
        #[arg(long, default_value_t = 5)]
        field: u32,
        /// Noise variances, comma separated; the rate is sized for the first.
        #[arg(long, value_delimiter = ',', default_value = "1,4,16")]
        noise_vars: Vec<f64>,
    },
    /// Outage probability under Rayleigh fading and its diversity slope.
    Outage {
        #[arg(long, default_value_t = 2)]
        transmitters: usize,
        /// Multiplexing gain r; the target rate is (r/2) log2 P.
        #[arg(long, default_value_t = 0.0)]
        multiplexing: f64,
        /// nc_align or random_coop.
        #[arg(long, default_value = "nc_align")]
        scheme: OutageScheme,
    },
}

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    spec: &'a ScenarioSpec,
    parameters: T,
    checks: &'a [scenarios::Check],
    notes: &'a std::collections::BTreeMap<String, f64>,
}

fn snr_or(cli: &Cli, default: &[f64]) -> Vec<f64> {
    if cli.snr_db.is_empty() {
        default.to_vec()
    } else {
        cli.snr_db.clone()
    }
}

fn spec(cli: &Cli, scenario: &str, variable: &str, sweep: Vec<f64>, p_db: Vec<f64>, trials: usize) -> ScenarioSpec {
    ScenarioSpec {
        scenario: scenario.to_string(),
        sweep_variable: variable.to_string(),
        sweep,
        p_db,
        budget: cli.budget,
        seed: cli.seed,
        trials,
        out: cli.out.clone(),
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn emit<T: Serialize>(spec: &ScenarioSpec, parameters: T, report: &ScenarioReport) -> Result<()> {
    let comment = spec.header_comment();
    match &spec.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            report.table.write_csv(BufWriter::new(file), &comment)?;
            let side = sidecar_path(path);
            let body = Sidecar { spec, parameters, checks: &report.checks, notes: &report.notes };
            let file = File::create(&side).with_context(|| format!("creating {}", side.display()))?;
            serde_json::to_writer_pretty(BufWriter::new(file), &body)?;
        }
        None => {
            let stdout = io::stdout();
            report.table.write_csv(stdout.lock(), &comment)?;
        }
    }
    let mut err = io::stderr().lock();
    for c in &report.checks {
        writeln!(err, "{} {}", if c.passed { "ok  " } else { "FAIL" }, c.name)?;
    }
    for (k, v) in &report.notes {
        writeln!(err, "{k} = {v}")?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    let report = match &cli.command {
        Command::Example1 { g2_min_db, g2_max_db, points } => {
            let p_db = snr_or(cli, &[10.0]);
            let sweep = linspace(*g2_min_db, *g2_max_db, *points);
            let s = spec(cli, "example1", "g2_db", sweep.clone(), p_db.clone(), 1);
            s.validate()?;
            let r = scenarios::run_example1(p_db[0], &sweep, &cli.budget)?;
            emit(&s, (), &r)?;
            r
        }
        Command::Example2 { points, alpha } => {
            let p_db = snr_or(cli, &[10.0]);
            let trials = cli.trials.unwrap_or(500);
            let sweep = linspace(0.0, std::f64::consts::PI, *points);
            let s = spec(cli, "example2", "arclength", sweep.clone(), p_db.clone(), trials);
            s.validate()?;
            let r = scenarios::run_example2(p_db[0], *alpha, &sweep, trials, cli.seed, &cli.budget)?;
            emit(&s, serde_json::json!({ "alpha": alpha, "transmitters": 3 }), &r)?;
            r
        }
        Command::Example3 { h21_min, h21_max, points } | Command::Example4 { h21_min, h21_max, points } => {
            let p_db = snr_or(cli, &[10.0, 20.0, 30.0]);
            let sweep = linspace(*h21_min, *h21_max, *points);
            let name = if matches!(cli.command, Command::Example3 { .. }) { "example3" } else { "example4" };
            let s = spec(cli, name, "h21", sweep.clone(), p_db.clone(), 1);
            s.validate()?;
            let r = if name == "example3" {
                scenarios::run_example3(&p_db, &sweep, &cli.budget)?
            } else {
                scenarios::run_example4(&p_db, &sweep, &cli.budget)?
            };
            emit(&s, (), &r)?;
            r
        }
        Command::Dmt { transmitters, points } => {
            let s = spec(cli, "dmt", "r", linspace(0.0, 1.0, *points), Vec::new(), 0);
            let r = scenarios::run_dmt_figure(transmitters, *points)?;
            emit(&s, serde_json::json!({ "transmitters": transmitters }), &r)?;
            r
        }
        Command::Linksim { g2_db, rate_fraction, n, field, noise_vars } => {
            let p_db = snr_or(cli, &[30.0]);
            let trials = cli.trials.unwrap_or(200);
            let ls = LinkSimSpec {
                g2_db: *g2_db,
                p_db: p_db[0],
                n: *n,
                p_field: *field,
                rate_fraction: *rate_fraction,
                noise_vars: noise_vars.clone(),
                trials,
                seed: cli.seed,
                budget: cli.budget,
            };
            let s = spec(cli, "linksim", "noise_var", noise_vars.clone(), p_db, trials);
            let r = scenarios::run_linksim(&ls)?;
            emit(&s, &ls, &r)?;
            r
        }
        Command::Outage { transmitters, multiplexing, scheme } => {
            let snr = snr_or(cli, &dmt::default_snr_grid());
            let samples = cli.trials.unwrap_or(100_000);
            let s = spec(cli, "outage", "snr_db", snr.clone(), snr.clone(), samples);
            s.validate()?;
            let r = scenarios::run_outage(*transmitters, *multiplexing, &snr, *scheme, samples, cli.seed)?;
            emit(&s, serde_json::json!({ "transmitters": transmitters, "multiplexing": multiplexing, "scheme": scheme }), &r)?;
            r
        }
    };
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("invariant check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
