use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use newsvendor_core::experiment::write_atomic;
use newsvendor_core::{
    critical_fractile, curve_argmax, expected_profit, linear_grid, optimal_quantity, profit_curve,
    rng_stream, run_experiment, write_report, CurvePoint, DemandDistribution, EconomicParams,
    Error, ExperimentConfigFile, Phase, DAYS,
};

/// Newsvendor solver, Monte Carlo oracle and TD3 experiment runner.
#[derive(Parser, Debug)]
#[command(name = "newsvendor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the critical fractile, optimal stock and its expected profit as JSON.
    Solve {
        /// Demand law as JSON, e.g. '{"kind":"normal","mu":50,"sigma":20}'.
        #[arg(long)]
        dist: String,
        /// Profit per unit sold.
        #[arg(long)]
        profit: f64,
        /// Cost per unsold unit.
        #[arg(long)]
        cost: f64,
    },
    /// Train TD3 agents for every seed of an experiment file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run this single seed instead of the config's seed list.
        #[arg(long)]
        seed: Option<u64>,
        /// Suppress per-episode progress on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Monte Carlo profit curve as CSV (q,estimate,std_error).
    Oracle {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        profit: f64,
        #[arg(long)]
        cost: f64,
        /// Inclusive grid `start:stop:step`.
        #[arg(long, default_value = "0:100:0.25")]
        grid: String,
        /// Demand draws shared by every grid point.
        #[arg(long, default_value_t = 400_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Usage(_) | Error::Config(_) | Error::Json(_) => {
                Failure::Usage(e.to_string())
            }
            Error::Numeric(_) | Error::Io(_) | Error::Csv(_) => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Solve { dist, profit, cost } => solve(&dist, profit, cost),
        Command::Train {
            config,
            out,
            seed,
            quiet,
        } => train(&config, out, seed, quiet),
        Command::Oracle {
            dist,
            profit,
            cost,
            grid,
            n,
            seed,
            out,
        } => oracle(&dist, profit, cost, &grid, n, seed, out.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn parse_problem(
    dist: &str,
    profit: f64,
    cost: f64,
) -> Result<(DemandDistribution, EconomicParams), Failure> {
    let dist: DemandDistribution =
        serde_json::from_str(dist).map_err(|e| Failure::Usage(format!("invalid --dist: {e}")))?;
    Ok((dist, EconomicParams::new(profit, cost)?))
}

fn solve(dist: &str, profit: f64, cost: f64) -> Result<(), Failure> {
    let (dist, params) = parse_problem(dist, profit, cost)?;
    let q = optimal_quantity(&dist, &params);
    let out = serde_json::json!({
        "fractile": critical_fractile(&params),
        "optimal_q": q,
        "expected_profit": expected_profit(&dist, q, &params)?,
    });
    println!("{out}");
    Ok(())
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("invalid --grid {text:?}; expected start:stop:step"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    Ok(linear_grid(start, stop, step)?)
}

fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut s = String::from("q,estimate,std_error\n");
    for p in curve {
        let se = p.std_error.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{},{}\n", p.q, p.estimate, se));
    }
    s
}

fn oracle(
    dist: &str,
    profit: f64,
    cost: f64,
    grid: &str,
    n: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let (dist, params) = parse_problem(dist, profit, cost)?;
    let grid = parse_grid(grid)?;
    let curve = profit_curve(&dist, &params, &grid, n, &mut rng_stream(seed, 0))?;
    let csv = curve_csv(&curve);
    match out {
        Some(path) => {
            write_atomic(path, csv.as_bytes())?;
            if let Some(q) = curve_argmax(&curve) {
                eprintln!(
                    "argmax q = {q} (analytic optimum {})",
                    optimal_quantity(&dist, &params)
                );
            }
        }
        None => std::io::stdout().lock().write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn train(
    config: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    quiet: bool,
) -> Result<(), Failure> {
    let mut file = ExperimentConfigFile::load(config)?;
    if let Some(s) = seed {
        file.seeds = vec![s];
    }
    file.validate()?;
    let out_dir = out.or_else(|| file.output_dir.clone()).unwrap_or_else(|| {
        PathBuf::from("runs").join(file.name.as_deref().unwrap_or("experiment"))
    });
    let episodes = file.train.total_episodes;
    let report = run_experiment(&file, |seed, rec| {
        if !quiet && (rec.episode + 1) % 10 == 0 {
            eprintln!(
                "seed {seed} episode {}/{episodes} reward {:.1}",
                rec.episode + 1,
                rec.total_raw_reward
            );
        }
    })?;
    write_report(&out_dir, &file, &report)?;

    let medians = report.median_actions();
    let days: Vec<String> = (0..DAYS).map(|d| format!("{:.2}", medians[d])).collect();
    let priming: Vec<String> = report
        .runs
        .iter()
        .map(|r| {
            r.metrics
                .mean_episode_reward(Phase::Priming)
                .map_or("-".into(), |v| format!("{v:.1}"))
        })
        .collect();
    println!(
        "{}: {} seed(s), median eval actions by day [{}], priming episode reward [{}], outputs in {}",
        file.name.as_deref().unwrap_or("experiment"),
        report.runs.len(),
        days.join(", "),
        priming.join(", "),
        out_dir.display()
    );
    Ok(())
}
