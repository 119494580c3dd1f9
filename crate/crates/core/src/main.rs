use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cachedse::cost_model::ObjectiveVector;
use cachedse::explorer::{
    hypervolume_table, read_front_csv, ExperimentSpec, Explorer, ExplorerError, Overrides,
};
use cachedse::genome::{Genome, Restriction};
use cachedse::moea::{NormBounds, DEFAULT_HV_REFERENCE};

#[derive(Parser)]
#[command(
    name = "cachedse",
    version,
    about = "Cache configuration design-space exploration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// GA seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluation threads (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Read at most this many records from each trace.
    #[arg(long)]
    max_records: Option<usize>,
    /// Count demand misses only in the cost model.
    #[arg(long)]
    demand_only: bool,
    /// Fix genes, e.g. `LI=0,WI=1`.
    #[arg(long)]
    restrict: Option<Restriction>,
    /// Disable memoization of evaluations.
    #[arg(long)]
    no_cache: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentSpec, ExplorerError> {
        let o = Overrides {
            seed: self.seed,
            workers: self.workers,
            max_records: self.max_records,
            demand_only: self.demand_only,
            restrict: self.restrict,
            no_cache: self.no_cache,
        };
        ExperimentSpec::load(&self.spec, &o)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run NSGA-II and write front.csv, pareto_set.json, log.csv and summary.csv.
    Optimize(Common),
    /// Evaluate every genome of the (restricted) space.
    Exhaustive {
        #[command(flatten)]
        common: Common,
        /// Maximum number of genomes to evaluate.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Print counters and objectives for one genome.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Nine comma-separated gene indices.
        #[arg(long)]
        genome: Genome,
    },
    /// Improvements of a front file over the spec's baselines.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        front: PathBuf,
        /// Trace the baselines are evaluated on (needed for multi-trace specs).
        #[arg(long)]
        trace: Option<String>,
    },
    /// Hypervolume indicator of one or more front files.
    Hypervolume {
        #[arg(required = true)]
        fronts: Vec<PathBuf>,
        /// Reference point in normalized space, `time,energy`.
        #[arg(long = "ref", value_parser = parse_pair)]
        reference: Option<ObjectiveVector>,
        /// Normalization bounds `tmin,emin,tmax,emax` (default: over all fronts).
        #[arg(long, value_parser = parse_bounds)]
        bounds: Option<NormBounds>,
    },
}

fn floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.len() == n {
        Ok(v)
    } else {
        Err(format!("expected {n} comma-separated numbers"))
    }
}

fn parse_pair(s: &str) -> Result<ObjectiveVector, String> {
    let v = floats(s, 2)?;
    Ok(ObjectiveVector::new(v[0], v[1]))
}

fn parse_bounds(s: &str) -> Result<NormBounds, String> {
    let v = floats(s, 4)?;
    Ok(NormBounds {
        min: ObjectiveVector::new(v[0], v[1]),
        max: ObjectiveVector::new(v[2], v[3]),
    })
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn run(cli: Cli) -> Result<(), ExplorerError> {
    match cli.command {
        Command::Optimize(c) => {
            let explorer = Explorer::new(c.load()?);
            for o in explorer.optimize()? {
                println!(
                    "{}: {} front points -> {}",
                    o.trace,
                    o.front.len(),
                    o.output_dir.display()
                );
                for s in &o.summaries {
                    for (phase, imp) in [("INI", s.initial), ("AVG", s.average), ("END", s.last)] {
                        println!(
                            "  {} {phase}: time {:.2}% energy {:.2}%",
                            s.baseline, imp.time_pct, imp.energy_pct
                        );
                    }
                }
            }
            println!("simulations run: {}", explorer.cache().computed());
        }
        Command::Exhaustive { common, budget } => {
            let mut spec = common.load()?;
            if let Some(b) = budget {
                spec.exhaustive_budget = b;
            }
            for o in Explorer::new(spec).exhaustive()? {
                println!(
                    "{}: {} genomes, {} front points -> {}",
                    o.trace,
                    o.table.len(),
                    o.front.len(),
                    o.output_dir.display()
                );
            }
        }
        Command::Simulate { common, genome } => {
            let reports = Explorer::new(common.load()?).simulate(&genome)?;
            println!("{}", to_json(&reports));
        }
        Command::Compare {
            common,
            front,
            trace,
        } => {
            let report = Explorer::new(common.load()?).compare(&front, trace.as_deref())?;
            for c in &report {
                for (k, p) in c.points.iter().enumerate() {
                    println!(
                        "{} point {k}: time {}% energy {}%",
                        c.baseline, p.time_pct, p.energy_pct
                    );
                }
                println!(
                    "{} mean: time {}% energy {}%",
                    c.baseline, c.mean.time_pct, c.mean.energy_pct
                );
            }
        }
        Command::Hypervolume {
            fronts,
            reference,
            bounds,
        } => {
            let loaded = fronts
                .iter()
                .map(|p| {
                    let objs = read_front_csv(p)?
                        .into_iter()
                        .map(|r| r.objectives)
                        .collect();
                    Ok((p.display().to_string(), objs))
                })
                .collect::<Result<Vec<_>, ExplorerError>>()?;
            let t = hypervolume_table(&loaded, bounds, reference.unwrap_or(DEFAULT_HV_REFERENCE))?;
            println!("file,I_H_minus");
            for (name, v) in &t.rows {
                println!("{name},{v:e}");
            }
            println!("mean,{:e}", t.mean);
            println!("std,{:e}", t.std);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
