use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ExplorerError, Result};
use crate::cache_sim::CacheConfig;
use crate::cost_model::{Characterization, MissAccounting};
use crate::genome::{Genome, Restriction, SearchSpace};
use crate::moea::NsgaParams;
use crate::trace::{self, AccessRecord, SynthSpec, TraceSource};

/// A loaded trace and its content digest.
#[derive(Clone, Debug)]
pub struct NamedTrace {
    pub name: String,
    pub records: Arc<[AccessRecord]>,
    pub digest: String,
}

impl NamedTrace {
    pub fn new(name: impl Into<String>, records: impl Into<Arc<[AccessRecord]>>) -> Self {
        let records = records.into();
        let digest = trace::digest(&records);
        Self {
            name: name.into(),
            records,
            digest,
        }
    }
}

/// A reference configuration pair to measure improvements against.
#[derive(Clone, Debug, PartialEq)]
pub struct Baseline {
    pub name: String,
    pub icache: CacheConfig,
    pub dcache: CacheConfig,
}

/// Command-line overrides applied on top of a spec file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub max_records: Option<usize>,
    pub demand_only: bool,
    pub restrict: Option<Restriction>,
    pub no_cache: bool,
}

/// A fully loaded and validated experiment.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub traces: Vec<NamedTrace>,
    pub space: SearchSpace,
    pub characterization: Characterization,
    pub params: NsgaParams,
    pub baselines: Vec<Baseline>,
    pub miss_accounting: MissAccounting,
    /// Seeds RANDOM replacement; independent of the GA seed.
    pub sim_seed: u64,
    pub restriction: Restriction,
    pub exhaustive_budget: u64,
    pub workers: usize,
    pub use_cache: bool,
    pub output_dir: PathBuf,
}

pub const DEFAULT_EXHAUSTIVE_BUDGET: u64 = 64_800;

pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(NonZeroUsize::get)
        .unwrap_or(1)
}

impl ExperimentSpec {
    /// Spec with default GA parameters, no baselines and no restriction.
    pub fn new(
        traces: Vec<NamedTrace>,
        space: SearchSpace,
        characterization: Characterization,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            traces,
            space,
            characterization,
            params: NsgaParams::default(),
            baselines: Vec::new(),
            miss_accounting: MissAccounting::default(),
            sim_seed: 0,
            restriction: Restriction::default(),
            exhaustive_budget: DEFAULT_EXHAUSTIVE_BUDGET,
            workers: default_workers(),
            use_cache: true,
            output_dir: output_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.traces.is_empty() {
            return Err(ExplorerError::Spec("no traces given".into()));
        }
        for (i, t) in self.traces.iter().enumerate() {
            check_name(&t.name)?;
            if self.traces[..i].iter().any(|o| o.name == t.name) {
                return Err(ExplorerError::Spec(format!(
                    "duplicate trace name `{}`",
                    t.name
                )));
            }
        }
        self.space.validate()?;
        self.params.validate()?;
        self.space.bounds(&self.restriction)?;
        let (ipairs, dpairs) = self.space.line_way_pairs();
        self.characterization.ensure_covers(ipairs, dpairs)?;
        for b in &self.baselines {
            check_name(&b.name)?;
            b.icache.validate()?;
            b.dcache.validate()?;
            if b.icache.writable() || !b.dcache.writable() {
                return Err(ExplorerError::Spec(format!(
                    "baseline `{}`: icache must be read-only and dcache writable",
                    b.name
                )));
            }
            self.characterization.ensure_covers(
                [(b.icache.line_size, b.icache.ways)],
                [(b.dcache.line_size, b.dcache.ways)],
            )?;
        }
        if self.workers == 0 {
            return Err(ExplorerError::Spec("workers must be >= 1".into()));
        }
        Ok(())
    }

    /// Loads a JSON spec file; relative paths resolve against its directory.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = read(path)?;
        let file: SpecFile = serde_json::from_str(&text).map_err(|source| ExplorerError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        file.resolve(base, overrides)
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Self {
        if let Some(seed) = o.seed {
            self.params.seed = seed;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if o.demand_only {
            self.miss_accounting = MissAccounting::DemandOnly;
        }
        if let Some(r) = &o.restrict {
            self.restriction = self.restriction.overlay(r);
        }
        if o.no_cache {
            self.use_cache = false;
        }
        self
    }
}

fn check_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name != "."
        && name != ".."
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(ExplorerError::Spec(format!(
            "name `{name}` must be non-empty and use only [A-Za-z0-9._-]"
        )))
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| ExplorerError::Input {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    traces: Vec<TraceEntry>,
    #[serde(default)]
    search_space: Option<PathBuf>,
    characterization: PathBuf,
    #[serde(default)]
    nsga: NsgaParams,
    #[serde(default)]
    baselines: Vec<BaselineEntry>,
    #[serde(default)]
    miss_accounting: MissAccounting,
    #[serde(default)]
    sim_seed: u64,
    #[serde(default)]
    restrict: Option<String>,
    #[serde(default)]
    exhaustive_budget: Option<u64>,
    #[serde(default)]
    workers: Option<usize>,
    output_dir: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceEntry {
    name: String,
    #[serde(default)]
    path: Option<PathBuf>,
    #[serde(default)]
    synthetic: Option<SyntheticTrace>,
    #[serde(default)]
    max_records: Option<usize>,
}

/// Components are generated with `seed + index` and interleaved round-robin.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTrace {
    pub components: Vec<SynthSpec>,
    /// Records per component.
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticTrace {
    pub fn generate(&self) -> Result<Vec<AccessRecord>> {
        if self.components.is_empty() {
            return Err(ExplorerError::Spec(
                "synthetic trace without components".into(),
            ));
        }
        let streams = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| trace::synth_trace(c, self.count, self.seed.wrapping_add(i as u64)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(trace::interleave(&streams))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BaselineEntry {
    Genome {
        name: String,
        genome: Genome,
    },
    Configs {
        name: String,
        icache: CacheConfig,
        dcache: CacheConfig,
    },
}

fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl SpecFile {
    fn resolve(self, base: &Path, o: &Overrides) -> Result<ExperimentSpec> {
        let space = match &self.search_space {
            Some(p) => SearchSpace::load(&resolve_path(base, p))?,
            None => SearchSpace::default(),
        };
        let characterization = Characterization::load(&resolve_path(base, &self.characterization))?;

        let mut traces = Vec::with_capacity(self.traces.len());
        for t in self.traces {
            let limit = o.max_records.or(t.max_records);
            if limit == Some(0) {
                return Err(ExplorerError::Spec(format!(
                    "trace `{}`: max_records must be > 0",
                    t.name
                )));
            }
            let limit = limit.and_then(NonZeroUsize::new);
            let records = match (t.path, t.synthetic) {
                (Some(p), None) => TraceSource::file(resolve_path(base, &p))
                    .with_limit(limit)
                    .load()?,
                (None, Some(s)) => TraceSource::memory(s.generate()?)
                    .with_limit(limit)
                    .load()?,
                _ => {
                    return Err(ExplorerError::Spec(format!(
                        "trace `{}` needs exactly one of `path` or `synthetic`",
                        t.name
                    )))
                }
            };
            traces.push(NamedTrace::new(t.name, records));
        }

        let mut baselines = Vec::with_capacity(self.baselines.len());
        for b in self.baselines {
            baselines.push(match b {
                BaselineEntry::Genome { name, genome } => {
                    let (icache, dcache) = space.decode(&genome)?;
                    Baseline {
                        name,
                        icache,
                        dcache,
                    }
                }
                BaselineEntry::Configs {
                    name,
                    icache,
                    dcache,
                } => Baseline {
                    name,
                    icache,
                    dcache,
                },
            });
        }

        let restriction = match &self.restrict {
            Some(r) => r.parse()?,
            None => Restriction::default(),
        };

        let mut spec = ExperimentSpec::new(
            traces,
            space,
            characterization,
            resolve_path(base, &self.output_dir),
        );
        spec.params = self.nsga;
        spec.baselines = baselines;
        spec.miss_accounting = self.miss_accounting;
        spec.sim_seed = self.sim_seed;
        spec.restriction = restriction;
        if let Some(b) = self.exhaustive_budget {
            spec.exhaustive_budget = b;
        }
        if let Some(w) = self.workers {
            spec.workers = w;
        }
        let spec = spec.with_overrides(o);
        spec.validate()?;
        Ok(spec)
    }
}
