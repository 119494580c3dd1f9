use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::spec::{ExperimentSpec, NamedTrace};
use super::{ExplorerError, Result};
use crate::cache_sim::{self, splitmix64, CacheConfig, SimResult};
use crate::cost_model::{self, MissAccounting, ObjectiveVector};
use crate::genome::Genome;
use crate::moea::Problem;

/// Counters and objectives of one configuration pair on one trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub counters: SimResult,
    pub objectives: ObjectiveVector,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct EvalKey {
    trace: String,
    characterization: String,
    icache: CacheConfig,
    dcache: CacheConfig,
    mode: MissAccounting,
    sim_seed: u64,
}

/// Memo table shared by all evaluations of a session.
///
/// Evaluations are pure, so concurrent inserts of the same key store
/// identical values and the last writer wins.
#[derive(Debug, Default)]
pub struct EvalCache {
    map: Mutex<HashMap<EvalKey, Evaluation>>,
    computed: AtomicUsize,
    disabled: bool,
}

impl EvalCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// A cache that never stores anything; every lookup recomputes.
    pub fn disabled() -> Self {
        Self {
            disabled: true,
            ..Self::default()
        }
    }

    /// Number of simulations actually run.
    pub fn computed(&self) -> usize {
        self.computed.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("eval cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_compute(
        &self,
        key: EvalKey,
        compute: impl FnOnce() -> Result<Evaluation>,
    ) -> Result<Evaluation> {
        if !self.disabled {
            if let Some(hit) = self.map.lock().expect("eval cache poisoned").get(&key) {
                return Ok(*hit);
            }
        }
        let value = compute()?;
        self.computed.fetch_add(1, Ordering::Relaxed);
        if !self.disabled {
            self.map
                .lock()
                .expect("eval cache poisoned")
                .insert(key, value);
        }
        Ok(value)
    }
}

fn config_hash(h: &mut u64, c: &CacheConfig) {
    let fields = [
        c.total_size,
        c.line_size,
        c.ways,
        c.replacement as u64,
        c.prefetch as u64,
    ];
    for f in fields {
        for b in f.to_le_bytes() {
            *h ^= u64::from(b);
            *h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
}

/// RANDOM-replacement seed for a configuration pair. The write policy is
/// left out so that write-policy twins replay the same victim sequence.
pub(crate) fn pair_seed(sim_seed: u64, i: &CacheConfig, d: &CacheConfig) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325;
    config_hash(&mut h, i);
    config_hash(&mut h, d);
    splitmix64(sim_seed ^ h)
}

/// Evaluates configurations of one spec against one of its traces.
pub struct TraceEvaluator<'a> {
    spec: &'a ExperimentSpec,
    trace: &'a NamedTrace,
    characterization_digest: String,
    cache: &'a EvalCache,
}

impl<'a> TraceEvaluator<'a> {
    pub fn new(spec: &'a ExperimentSpec, trace: &'a NamedTrace, cache: &'a EvalCache) -> Self {
        Self {
            spec,
            trace,
            characterization_digest: spec.characterization.digest(),
            cache,
        }
    }

    pub fn trace(&self) -> &NamedTrace {
        self.trace
    }

    pub fn evaluate_configs(
        &self,
        icache: &CacheConfig,
        dcache: &CacheConfig,
    ) -> Result<Evaluation> {
        let key = EvalKey {
            trace: self.trace.digest.clone(),
            characterization: self.characterization_digest.clone(),
            icache: *icache,
            dcache: *dcache,
            mode: self.spec.miss_accounting,
            sim_seed: self.spec.sim_seed,
        };
        self.cache.get_or_compute(key, || {
            let seed = pair_seed(self.spec.sim_seed, icache, dcache);
            let counters = cache_sim::simulate(&self.trace.records, icache, dcache, seed)?;
            let objectives = cost_model::objectives(
                &counters,
                icache,
                dcache,
                &self.spec.characterization,
                self.spec.miss_accounting,
            )?;
            Ok(Evaluation {
                counters,
                objectives,
            })
        })
    }

    pub fn evaluate_genome(
        &self,
        genome: &Genome,
    ) -> Result<(CacheConfig, CacheConfig, Evaluation)> {
        let (i, d) = self.spec.space.decode(genome)?;
        let eval = self
            .evaluate_configs(&i, &d)
            .map_err(|e| ExplorerError::Evaluation {
                genome: *genome,
                source: Box::new(e),
            })?;
        Ok((i, d, eval))
    }
}

impl Problem for TraceEvaluator<'_> {
    type Error = ExplorerError;

    fn evaluate(&self, genome: &Genome) -> Result<ObjectiveVector> {
        let (i, d) = self.spec.space.decode(genome)?;
        Ok(self.evaluate_configs(&i, &d)?.objectives)
    }
}
