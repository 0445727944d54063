use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mdimlab::constructions::{list_constructions, CascadeSpec, MRule};
use mdimlab::experiment::{perturbation_sweep, run, Built, Construction, ExperimentConfig};
use mdimlab::Error;

#[derive(Parser)]
#[command(name = "mdimlab", version, about = "Entropy and metric mean dimension experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's CSV path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Overrides the config's summary path.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Splice cascades of shrinking width into a base map.
    Sweep {
        /// Construction id of the base map.
        #[arg(long, default_value = "identity")]
        base: String,
        /// Comma-separated splice widths.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 0.1, 0.05])]
        deltas: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Splice::Cascade)]
        splice: Splice,
        #[arg(long, default_value_t = 8)]
        blocks: usize,
        #[arg(long, value_enum, default_value_t = Growth::Linear)]
        m: Growth,
        /// Scales are `epsilon_base^-k` for `k_min ≤ k ≤ k_max`.
        #[arg(long, default_value_t = 3.0)]
        epsilon_base: f64,
        #[arg(long, default_value_t = 2)]
        k_min: i32,
        #[arg(long, default_value_t = 9)]
        k_max: i32,
        /// Largest horizon for itinerary counts.
        #[arg(long, default_value_t = 20)]
        horizon: usize,
    },
    /// List the available constructions.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Splice {
    Cascade,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum Growth {
    Linear,
    Quadratic,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } => 3,
        Error::Json(_)
        | Error::InvalidParameter(_)
        | Error::UnknownConstruction(_)
        | Error::NonMonotoneSchedule(_)
        | Error::ScheduleTooShort { .. }
        | Error::InsufficientSamples { .. } => 2,
        _ => 1,
    }
}

fn run_config(config: PathBuf, csv: Option<PathBuf>, summary: Option<PathBuf>) -> Result<u8, Error> {
    let text = fs::read_to_string(&config)?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if csv.is_some() {
        config.output.csv = csv;
    }
    if summary.is_some() {
        config.output.summary = summary;
    }
    let outcome = run(&config)?;
    outcome.write(&config)?;
    if config.output.csv.is_none() {
        print!("{}", outcome.csv());
    }
    if config.output.summary.is_none() {
        eprintln!("{}", outcome.summary_text());
    }
    Ok(match &outcome.partial {
        Some(reason) => {
            eprintln!("partial result: {reason}");
            3
        }
        None => 0,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_sweep(
    base: String,
    deltas: Vec<f64>,
    splice: Splice,
    blocks: usize,
    m: Growth,
    epsilon_base: f64,
    k_min: i32,
    k_max: i32,
    horizon: usize,
) -> Result<u8, Error> {
    let construction = Construction::from_value(serde_json::json!({ "construction": base }))?;
    let Built::Map(map) = construction.build(0)? else {
        return Err(Error::InvalidParameter(format!("{base} is not a map")));
    };
    let base_map = map.to_pam()?;
    let spec = CascadeSpec {
        m: match m {
            Growth::Linear => MRule::Linear,
            Growth::Quadratic => MRule::Quadratic,
        },
        block_count: blocks,
        circle: false,
    };
    let epsilons = mdimlab::experiment::EpsilonSchedule {
        base: epsilon_base,
        k_min,
        k_max,
        scale: 1.0,
    }
    .epsilons()?;
    if horizon < 3 {
        return Err(Error::InvalidParameter("horizon must be ≥ 3".into()));
    }
    let horizons: Vec<usize> = (1..=horizon).collect();
    let splice = match splice {
        Splice::Cascade => Some(&spec),
        Splice::None => None,
    };
    let rows = perturbation_sweep(&base_map, splice, &deltas, &epsilons, &horizons)?;
    println!("delta,x0,c0_distance,mdim_lower,mdim_upper");
    for r in rows {
        println!(
            "{},{},{},{},{}",
            r.delta,
            r.x0.map(|x| x.to_string()).unwrap_or_default(),
            r.c0_distance,
            r.mdim_lower,
            r.mdim_upper
        );
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, csv, summary } => run_config(config, csv, summary),
        Command::Sweep {
            base,
            deltas,
            splice,
            blocks,
            m,
            epsilon_base,
            k_min,
            k_max,
            horizon,
        } => run_sweep(base, deltas, splice, blocks, m, epsilon_base, k_min, k_max, horizon),
        Command::List => {
            println!("{:<24} {:<44} kind", "id", "parameters");
            for c in list_constructions() {
                println!("{:<24} {:<44} {}", c.id, c.parameters, c.kind);
            }
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
