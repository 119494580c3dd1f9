use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use super::artifacts::{
    self, fmt_f64, read_front_csv, write_front_csv, FrontRow, FRONT_FILE, LOG_FILE, PARETO_SET_FILE,
};
use super::eval::{EvalCache, Evaluation, TraceEvaluator};
use super::spec::{ExperimentSpec, NamedTrace};
use super::{ExplorerError, Result};
use crate::cache_sim::CacheConfig;
use crate::cost_model::{improvement, Improvement, ObjectiveVector};
use crate::genome::Genome;
use crate::moea::{self, cmp_objectives, EvolveError, GenerationStats, NormBounds};

pub const EXHAUSTIVE_TABLE_FILE: &str = "exhaustive.csv";
pub const EXHAUSTIVE_FRONT_FILE: &str = "exhaustive_front.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const COMPARE_FILE: &str = "compare.csv";

/// One generation's statistics and the improvement of its mean over each baseline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationLog {
    pub stats: GenerationStats,
    pub improvements: Vec<Improvement>,
}

/// Initial, average and final improvement over one baseline.
///
/// `initial` uses the mean of generation 0, `average` the mean of the
/// per-generation improvements, `last` the mean over final front points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub baseline: String,
    pub initial: Improvement,
    pub average: Improvement,
    pub last: Improvement,
}

#[derive(Clone, Debug)]
pub struct OptimizeOutcome {
    pub trace: String,
    pub front: Vec<FrontRow>,
    pub log: Vec<GenerationLog>,
    pub summaries: Vec<Summary>,
    /// Evaluation requests issued by the GA, before memoization.
    pub evaluations: usize,
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug)]
pub struct ExhaustiveOutcome {
    pub trace: String,
    /// Every genome of the restricted space, in enumeration order.
    pub table: Vec<FrontRow>,
    pub front: Vec<FrontRow>,
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulateReport {
    pub trace: String,
    pub genome: Genome,
    pub icache: CacheConfig,
    pub dcache: CacheConfig,
    pub evaluation: Evaluation,
}

/// Improvements of every front point over one baseline, and their mean.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineComparison {
    pub baseline: String,
    pub baseline_objectives: ObjectiveVector,
    pub points: Vec<Improvement>,
    pub mean: Improvement,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypervolumeTable {
    pub bounds: NormBounds,
    pub reference: ObjectiveVector,
    pub rows: Vec<(String, f64)>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

fn mean_improvement(items: &[Improvement]) -> Improvement {
    let n = items.len() as f64;
    Improvement {
        time_pct: items.iter().map(|i| i.time_pct).sum::<f64>() / n,
        energy_pct: items.iter().map(|i| i.energy_pct).sum::<f64>() / n,
    }
}

/// Per-point and mean improvements of `front` over each baseline.
pub fn compare_front(
    front: &[ObjectiveVector],
    baselines: &[(String, ObjectiveVector)],
) -> Result<Vec<BaselineComparison>> {
    if front.is_empty() {
        return Err(ExplorerError::Spec("cannot compare an empty front".into()));
    }
    baselines
        .iter()
        .map(|(name, b)| {
            let points = front
                .iter()
                .map(|p| improvement(b, p))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(BaselineComparison {
                baseline: name.clone(),
                baseline_objectives: *b,
                mean: mean_improvement(&points),
                points,
            })
        })
        .collect()
}

/// Shifted mean and population standard deviation; exact for constant input.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let first = values[0];
    let mean = first + values.iter().map(|v| v - first).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Gives a zero-width axis a positive span so its points normalize to 0.
fn widen(mut b: NormBounds) -> NormBounds {
    let fix = |min: f64, max: &mut f64, axis: &str| {
        if *max <= min {
            warn!("hypervolume: every point has the same {axis}; that axis normalizes to 0");
            *max = if min == 0.0 { 1.0 } else { min + min.abs() };
        }
    };
    fix(b.min.exec_time, &mut b.max.exec_time, "exec_time");
    fix(b.min.energy, &mut b.max.energy, "energy");
    b
}

/// I_H⁻ of each front. Bounds default to the min/max over all fronts.
pub fn hypervolume_table(
    fronts: &[(String, Vec<ObjectiveVector>)],
    bounds: Option<NormBounds>,
    reference: ObjectiveVector,
) -> Result<HypervolumeTable> {
    if fronts.is_empty() {
        return Err(ExplorerError::Spec(
            "hypervolume needs at least one front".into(),
        ));
    }
    let bounds = match bounds {
        Some(b) => b,
        None => widen(
            NormBounds::enclosing(fronts.iter().flat_map(|(_, f)| f.iter()))
                .ok_or_else(|| ExplorerError::Spec("all fronts are empty".into()))?,
        ),
    };
    let rows = fronts
        .iter()
        .map(|(name, f)| {
            Ok((
                name.clone(),
                moea::hypervolume_minus(f, &reference, &bounds)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = rows.iter().map(|(_, v)| *v).collect();
    let (mean, std) = mean_std(&values);
    Ok(HypervolumeTable {
        bounds,
        reference,
        rows,
        mean,
        std,
    })
}

fn sort_rows(rows: &mut [FrontRow]) {
    rows.sort_by(|a, b| {
        cmp_objectives(&a.objectives, &b.objectives).then_with(|| a.genome.cmp(&b.genome))
    });
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| ExplorerError::Output {
        path: path.to_path_buf(),
        source,
    })
}

pub struct Explorer {
    spec: ExperimentSpec,
    cache: Arc<EvalCache>,
}

impl Explorer {
    pub fn new(spec: ExperimentSpec) -> Self {
        let cache = if spec.use_cache {
            EvalCache::new()
        } else {
            EvalCache::disabled()
        };
        Self::with_cache(spec, Arc::new(cache))
    }

    pub fn with_cache(spec: ExperimentSpec, cache: Arc<EvalCache>) -> Self {
        Self { spec, cache }
    }

    pub fn spec(&self) -> &ExperimentSpec {
        &self.spec
    }

    pub fn cache(&self) -> &EvalCache {
        &self.cache
    }

    fn evaluator<'a>(&'a self, trace: &'a NamedTrace) -> TraceEvaluator<'a> {
        TraceEvaluator::new(&self.spec, trace, &self.cache)
    }

    fn trace_dir(&self, trace: &NamedTrace) -> Result<PathBuf> {
        let dir = self.spec.output_dir.join(&trace.name);
        create_dir(&dir)?;
        Ok(dir)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.spec.workers.max(1))
            .build()
            .map_err(|e| ExplorerError::Runtime(format!("cannot start worker pool: {e}")))
    }

    fn baseline_objectives(&self, eval: &TraceEvaluator) -> Result<Vec<(String, ObjectiveVector)>> {
        self.spec
            .baselines
            .iter()
            .map(|b| {
                Ok((
                    b.name.clone(),
                    eval.evaluate_configs(&b.icache, &b.dcache)?.objectives,
                ))
            })
            .collect()
    }

    fn rows_for(&self, eval: &TraceEvaluator, genomes: &[Genome]) -> Result<Vec<FrontRow>> {
        genomes
            .iter()
            .map(|g| {
                let (i, d, e) = eval.evaluate_genome(g)?;
                Ok(FrontRow::new(*g, i, d, e))
            })
            .collect()
    }

    /// Runs the GA on every trace and writes front, Pareto set, log and summary.
    pub fn optimize(&self) -> Result<Vec<OptimizeOutcome>> {
        let bounds = self.spec.space.bounds(&self.spec.restriction)?;
        let mut outcomes = Vec::with_capacity(self.spec.traces.len());
        for trace in &self.spec.traces {
            let eval = self.evaluator(trace);
            let baselines = self.baseline_objectives(&eval)?;
            info!(
                "optimizing `{}` ({} records, {} genomes in space)",
                trace.name,
                trace.records.len(),
                bounds.size()
            );
            let evo = moea::evolve(&eval, &bounds, &self.spec.params, self.spec.workers).map_err(
                |e| match e {
                    EvolveError::Params(p) => ExplorerError::Params(p),
                    EvolveError::Evaluation { genome, source } => ExplorerError::Evaluation {
                        genome,
                        source: Box::new(source),
                    },
                    EvolveError::Pool(m) => {
                        ExplorerError::Runtime(format!("cannot start worker pool: {m}"))
                    }
                },
            )?;

            let genomes: Vec<Genome> = evo.front.iter().map(|i| i.genome).collect();
            let mut front = self.rows_for(&eval, &genomes)?;
            sort_rows(&mut front);

            let log = evo
                .history
                .into_iter()
                .map(|stats| {
                    let improvements = baselines
                        .iter()
                        .map(|(_, b)| improvement(b, &stats.mean))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(GenerationLog {
                        stats,
                        improvements,
                    })
                })
                .collect::<Result<Vec<_>>>()?;

            let front_objs: Vec<ObjectiveVector> = front.iter().map(|r| r.objectives).collect();
            let summaries = if baselines.is_empty() {
                Vec::new()
            } else {
                let ends = compare_front(&front_objs, &baselines)?;
                baselines
                    .iter()
                    .enumerate()
                    .zip(ends)
                    .map(|((k, (name, _)), end)| {
                        let per_gen: Vec<Improvement> =
                            log.iter().map(|l| l.improvements[k]).collect();
                        Summary {
                            baseline: name.clone(),
                            initial: per_gen[0],
                            average: mean_improvement(&per_gen),
                            last: end.mean,
                        }
                    })
                    .collect()
            };

            let dir = self.trace_dir(trace)?;
            write_front_csv(&dir.join(FRONT_FILE), &front)?;
            artifacts::write_pareto_set(
                &dir.join(PARETO_SET_FILE),
                &trace.name,
                &trace.digest,
                self.spec.params.seed,
                &front,
            )?;
            let names: Vec<String> = baselines.iter().map(|(n, _)| n.clone()).collect();
            artifacts::write_log(&dir.join(LOG_FILE), &names, &log)?;
            write_summary(&dir.join(SUMMARY_FILE), &summaries)?;
            info!(
                "`{}`: {} front points, {} evaluations requested",
                trace.name,
                front.len(),
                evo.evaluations
            );

            outcomes.push(OptimizeOutcome {
                trace: trace.name.clone(),
                front,
                log,
                summaries,
                evaluations: evo.evaluations,
                output_dir: dir,
            });
        }
        Ok(outcomes)
    }

    /// Evaluates every genome of the restricted space on every trace.
    pub fn exhaustive(&self) -> Result<Vec<ExhaustiveOutcome>> {
        let bounds = self.spec.space.bounds(&self.spec.restriction)?;
        let size = bounds.size();
        if size > self.spec.exhaustive_budget {
            return Err(ExplorerError::BudgetExceeded {
                size,
                budget: self.spec.exhaustive_budget,
            });
        }
        let genomes: Vec<Genome> = bounds.enumerate().collect();
        let pool = self.pool()?;
        let mut outcomes = Vec::with_capacity(self.spec.traces.len());
        for trace in &self.spec.traces {
            let eval = self.evaluator(trace);
            info!("exhaustive search of {size} genomes on `{}`", trace.name);
            let table = pool.install(|| {
                genomes
                    .par_iter()
                    .map(|g| {
                        let (i, d, e) = eval.evaluate_genome(g)?;
                        Ok(FrontRow::new(*g, i, d, e))
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            let objectives: Vec<ObjectiveVector> = table.iter().map(|r| r.objectives).collect();
            let mut front: Vec<FrontRow> = moea::nondominated_indices(&objectives)
                .into_iter()
                .map(|i| table[i].clone())
                .collect();
            sort_rows(&mut front);

            let dir = self.trace_dir(trace)?;
            artifacts::write_table(&dir.join(EXHAUSTIVE_TABLE_FILE), &table)?;
            write_front_csv(&dir.join(EXHAUSTIVE_FRONT_FILE), &front)?;
            outcomes.push(ExhaustiveOutcome {
                trace: trace.name.clone(),
                table,
                front,
                output_dir: dir,
            });
        }
        Ok(outcomes)
    }

    /// Counters and objectives of one genome on every trace.
    pub fn simulate(&self, genome: &Genome) -> Result<Vec<SimulateReport>> {
        self.spec.space.check(genome)?;
        self.spec
            .traces
            .iter()
            .map(|trace| {
                let (icache, dcache, evaluation) = self.evaluator(trace).evaluate_genome(genome)?;
                Ok(SimulateReport {
                    trace: trace.name.clone(),
                    genome: *genome,
                    icache,
                    dcache,
                    evaluation,
                })
            })
            .collect()
    }

    /// Compares a front file against every baseline evaluated on `trace`
    /// (optional when the spec has a single trace). Writes `compare.csv`
    /// next to the front file.
    pub fn compare(
        &self,
        front_path: &Path,
        trace: Option<&str>,
    ) -> Result<Vec<BaselineComparison>> {
        if self.spec.baselines.is_empty() {
            return Err(ExplorerError::Spec(
                "compare needs at least one baseline".into(),
            ));
        }
        let trace = match trace {
            Some(name) => self
                .spec
                .traces
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| ExplorerError::Spec(format!("no trace named `{name}`")))?,
            None if self.spec.traces.len() == 1 => &self.spec.traces[0],
            None => {
                return Err(ExplorerError::Spec(
                    "spec has several traces; name one".into(),
                ))
            }
        };
        let records = read_front_csv(front_path)?;
        for r in &records {
            r.genome(&self.spec.space)?;
        }
        let front: Vec<ObjectiveVector> = records.iter().map(|r| r.objectives).collect();
        let baselines = self.baseline_objectives(&self.evaluator(trace))?;
        let report = compare_front(&front, &baselines)?;
        write_compare(&front_path.with_file_name(COMPARE_FILE), &front, &report)?;
        Ok(report)
    }
}

fn write_summary(path: &Path, summaries: &[Summary]) -> Result<()> {
    let mut out = String::from("baseline,phase,time_pct,energy_pct\n");
    for s in summaries {
        for (phase, imp) in [("INI", s.initial), ("AVG", s.average), ("END", s.last)] {
            out.push_str(&format!(
                "{},{phase},{},{}\n",
                s.baseline,
                fmt_f64(imp.time_pct),
                fmt_f64(imp.energy_pct)
            ));
        }
    }
    artifacts::write_text(path, &out)
}

fn write_compare(
    path: &Path,
    front: &[ObjectiveVector],
    report: &[BaselineComparison],
) -> Result<()> {
    let mut out = String::from("baseline,point,ExTime,Energy,time_pct,energy_pct\n");
    for c in report {
        for (k, (p, imp)) in front.iter().zip(&c.points).enumerate() {
            out.push_str(&format!(
                "{},{k},{},{},{},{}\n",
                c.baseline,
                fmt_f64(p.exec_time),
                fmt_f64(p.energy),
                fmt_f64(imp.time_pct),
                fmt_f64(imp.energy_pct)
            ));
        }
        out.push_str(&format!(
            "{},mean,,,{},{}\n",
            c.baseline,
            fmt_f64(c.mean.time_pct),
            fmt_f64(c.mean.energy_pct)
        ));
    }
    artifacts::write_text(path, &out)
}
