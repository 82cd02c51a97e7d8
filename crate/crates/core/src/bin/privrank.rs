use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use privrank::base::BaseRanker;
use privrank::central::Mechanism;
use privrank::harness::{
    format_order, mallows_sample, read_profile, rows_to_csv, run_algorithm_traced, run_experiment, uniform_profile,
    write_profile, Algorithm, AlgorithmSpec, ExperimentConfig, Model, RunParams,
};
use privrank::lowerbound::run_lowerbound_check;
use privrank::oracle::opt_bruteforce;
use privrank::ranking::{build_weights, Ranking};
use privrank::seed::rng_from_seed;
use privrank::Error;

#[derive(Parser)]
#[command(name = "privrank", version, about = "Differentially private Kemeny rank aggregation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate a profile file and print the ranking and its cost.
    Aggregate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "none")]
        model: String,
        #[arg(long)]
        algorithm: String,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long)]
        mechanism: Option<String>,
        #[arg(long)]
        base: Option<String>,
        #[arg(long)]
        budget_constant: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the adaptive query transcript (ldpkwiksort only) as JSON lines.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Generate a synthetic profile file.
    Gen {
        #[arg(long, value_enum)]
        model: GenModel,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        phi: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a parameter sweep from a TOML or JSON config and emit CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Exact Kemeny ranking and optimum (m <= 10).
    Oracle {
        #[arg(long)]
        input: PathBuf,
    },
    /// Randomized check of the lower-bound embedding inequalities; JSON lines.
    LowerboundCheck {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// Voters per instance.
        #[arg(long, default_value_t = 5)]
        n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenModel {
    Mallows,
    Uniform,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Guard(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn emit(text: &str) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Aggregate {
            input,
            model,
            algorithm,
            epsilon,
            delta,
            mechanism,
            base,
            budget_constant,
            seed,
            transcript,
        } => {
            let model: Model = model.parse()?;
            let spec: AlgorithmSpec = algorithm.parse()?;
            if spec.algorithm.model() != model {
                return Err(Error::InvalidParameter(format!(
                    "algorithm '{algorithm}' belongs to the {} model, not {}",
                    spec.algorithm.model().name(),
                    model.name()
                )));
            }
            if transcript.is_some() && spec.algorithm != Algorithm::LdpKwikSort {
                return Err(Error::InvalidParameter("--transcript is only produced by ldpkwiksort".into()));
            }
            let profile = read_profile(&input)?;
            let params = RunParams {
                mechanism: mechanism.map(|m| m.parse::<Mechanism>()).transpose()?,
                base: base.map(|b| b.parse::<BaseRanker>()).transpose()?,
                budget_constant,
                ..RunParams::new(epsilon, delta)
            };
            let (result, records) = run_algorithm_traced(&spec, &profile, &params, seed)?;
            if let (Some(path), Some(records)) = (transcript, records) {
                let mut text = String::new();
                for rec in &records {
                    text.push_str(&serde_json::to_string(rec).expect("transcript records serialize"));
                    text.push('\n');
                }
                std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            emit(&format!(
                "ranking: {}\ncost: {}\nqueries_used: {}\nfallback_used: {}\n",
                format_order(&result.ranking),
                result.cost,
                result.queries_used,
                result.fallback_used
            ))
        }
        Command::Gen {
            model,
            m,
            n,
            phi,
            seed,
            output,
        } => {
            let mut rng = rng_from_seed(seed);
            let profile = match model {
                GenModel::Mallows => mallows_sample(&Ranking::identity(m), phi, n, &mut rng)?,
                GenModel::Uniform => uniform_profile(m, n, &mut rng)?,
            };
            write_profile(&output, &profile)
        }
        Command::Experiment { config } => {
            let config = ExperimentConfig::from_path(&config)?;
            let rows = run_experiment(&config)?;
            let csv = rows_to_csv(&rows);
            match &config.output {
                Some(path) => std::fs::write(path, csv).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
                None => emit(&csv),
            }
        }
        Command::Oracle { input } => {
            let profile = read_profile(&input)?;
            let res = opt_bruteforce(&build_weights(&profile))?;
            emit(&format!("ranking: {}\nopt: {}\n", format_order(&res.ranking), res.cost))
        }
        Command::LowerboundCheck { d, t, trials, seed, n } => {
            let summary = run_lowerbound_check(d, t, n, trials, seed)?;
            let mut text = String::new();
            for ce in &summary.counterexamples {
                text.push_str(&serde_json::to_string(ce).expect("counterexamples serialize"));
                text.push('\n');
            }
            let line = serde_json::json!({
                "d": summary.d,
                "t": summary.t,
                "n": summary.n,
                "trials": summary.trials,
                "lower_violations": summary.lower_violations,
                "upper_violations": summary.upper_violations,
                "upper_corrected_violations": summary.upper_corrected_violations,
                "passed": summary.passed(),
            });
            text.push_str(&line.to_string());
            text.push('\n');
            emit(&text)
        }
    }
}
