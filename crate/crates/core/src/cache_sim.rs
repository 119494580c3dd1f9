//! Functional set-associative cache simulator for a split I-cache/D-cache.
//!
//! Every access touches exactly one line (the one containing the address).
//! Counters are exact tallies; timing is left to [`crate::cost_model`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{AccessKind, AccessRecord};

pub const LINE_SIZES: [u64; 4] = [8, 16, 32, 64];
pub const MAX_WAYS: u64 = 64;

macro_rules! symbol_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $sym:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $sym)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn symbol(self) -> &'static str {
                match self { $($name::$variant => $sym),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.symbol())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($sym => Ok($name::$variant),)+
                    _ => Err(format!("unknown {} `{}`", stringify!($name), s)),
                }
            }
        }
    };
}

symbol_enum!(
    /// Victim selection within a set.
    Replacement { Lru => "LRU", Fifo => "FIFO", Random => "RANDOM" }
);
symbol_enum!(
    /// When block `b + 1` is brought in after a reference to block `b`.
    Prefetch { OnDemand => "ON_DEMAND", Always => "ALWAYS_PREFETCH", OnMiss => "MISS_PREFETCH" }
);
symbol_enum!(
    WritePolicy { CopyBack => "COPY_BACK", WriteThrough => "WRITE_THROUGH" }
);

/// Parameters of one cache. A cache without a write policy is read-only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheConfig {
    pub total_size: u64,
    pub line_size: u64,
    pub ways: u64,
    pub replacement: Replacement,
    pub prefetch: Prefetch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub write_policy: Option<WritePolicy>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{field} = {value} is not a power of two")]
    NotPowerOfTwo { field: &'static str, value: u64 },
    #[error("{field} = {value} is outside the supported domain")]
    OutOfDomain { field: &'static str, value: u64 },
    #[error("total_size {total_size} cannot hold {ways} ways of {line_size}-byte lines")]
    TooFewLines {
        total_size: u64,
        line_size: u64,
        ways: u64,
    },
    #[error("instruction cache must be read-only and data cache writable")]
    Writability,
}

/// Derived indexing parameters of a validated config.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Geometry {
    pub sets: u64,
    pub ways: u64,
    line_shift: u32,
    set_shift: u32,
    block_mask: u64,
}

/// Where an address lands in a cache.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Location {
    pub tag: u64,
    pub set_index: u64,
    pub block: u64,
}

impl Geometry {
    pub fn decompose(&self, address: u64) -> Location {
        let block = address >> self.line_shift;
        self.locate(block)
    }

    fn locate(&self, block: u64) -> Location {
        Location {
            tag: block >> self.set_shift,
            set_index: block & (self.sets - 1),
            block,
        }
    }
}

impl CacheConfig {
    pub fn writable(&self) -> bool {
        self.write_policy.is_some()
    }

    pub fn validate(&self) -> Result<Geometry, ConfigError> {
        for (field, value) in [
            ("total_size", self.total_size),
            ("line_size", self.line_size),
            ("ways", self.ways),
        ] {
            if !value.is_power_of_two() {
                return Err(ConfigError::NotPowerOfTwo { field, value });
            }
        }
        if !LINE_SIZES.contains(&self.line_size) {
            return Err(ConfigError::OutOfDomain {
                field: "line_size",
                value: self.line_size,
            });
        }
        if self.ways > MAX_WAYS {
            return Err(ConfigError::OutOfDomain {
                field: "ways",
                value: self.ways,
            });
        }
        let set_bytes = self.line_size * self.ways;
        if self.total_size < set_bytes {
            return Err(ConfigError::TooFewLines {
                total_size: self.total_size,
                line_size: self.line_size,
                ways: self.ways,
            });
        }
        let sets = self.total_size / set_bytes;
        let line_shift = self.line_size.trailing_zeros();
        Ok(Geometry {
            sets,
            ways: self.ways,
            line_shift,
            set_shift: sets.trailing_zeros(),
            block_mask: u64::MAX >> line_shift,
        })
    }

    pub fn decompose(&self, address: u64) -> Result<Location, ConfigError> {
        Ok(self.validate()?.decompose(address))
    }
}

/// Event tallies from one simulation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SimCounters {
    pub accesses: u64,
    pub demand_misses: u64,
    pub prefetch_fetches: u64,
    pub writebacks: u64,
    pub writethroughs: u64,
}

impl SimCounters {
    pub fn hits(&self) -> u64 {
        self.accesses - self.demand_misses
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AccessOutcome {
    pub hit: bool,
    pub lines_fetched: u32,
    pub writebacks_emitted: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("data write at {address:#x} sent to a read-only cache")]
    WriteToReadOnly { address: u64 },
}

/// xorshift64* stream used for RANDOM victim selection.
#[derive(Clone, Debug)]
struct XorShift64(u64);

impl XorShift64 {
    fn new(seed: u64) -> Self {
        let s = splitmix64(seed);
        XorShift64(if s == 0 { 0x9E37_79B9_7F4A_7C15 } else { s })
    }

    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, Default)]
struct Line {
    tag: u64,
    valid: bool,
    dirty: bool,
    stamp: u64,
}

/// Contents and counters of one cache during a simulation.
#[derive(Clone, Debug)]
pub struct CacheState {
    config: CacheConfig,
    geometry: Geometry,
    lines: Vec<Line>,
    clock: u64,
    rng: XorShift64,
    counters: SimCounters,
}

impl CacheState {
    pub fn new(config: CacheConfig, seed: u64) -> Result<Self, ConfigError> {
        let geometry = config.validate()?;
        Ok(Self {
            config,
            geometry,
            lines: vec![Line::default(); (geometry.sets * geometry.ways) as usize],
            clock: 0,
            rng: XorShift64::new(seed),
            counters: SimCounters::default(),
        })
    }

    pub fn config(&self) -> &CacheConfig {
        &self.config
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn counters(&self) -> SimCounters {
        self.counters
    }

    pub fn valid_lines(&self) -> usize {
        self.lines.iter().filter(|l| l.valid).count()
    }

    /// True if the block is currently resident.
    pub fn contains_block(&self, block: u64) -> bool {
        let loc = self.geometry.locate(block & self.geometry.block_mask);
        self.find(loc.set_index, loc.tag).is_some()
    }

    fn set_range(&self, set: u64) -> std::ops::Range<usize> {
        let ways = self.geometry.ways as usize;
        let start = set as usize * ways;
        start..start + ways
    }

    fn find(&self, set: u64, tag: u64) -> Option<usize> {
        let range = self.set_range(set);
        let base = range.start;
        self.lines[range]
            .iter()
            .position(|l| l.valid && l.tag == tag)
            .map(|w| base + w)
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Places `tag` in `set`, returning 1 if a dirty victim was written back.
    fn install(&mut self, set: u64, tag: u64, dirty: bool) -> u32 {
        let range = self.set_range(set);
        let base = range.start;
        let ways = &self.lines[range];
        let victim = match ways.iter().position(|l| !l.valid) {
            Some(w) => w,
            None => match self.config.replacement {
                Replacement::Lru | Replacement::Fifo => ways
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, l)| l.stamp)
                    .map(|(w, _)| w)
                    .unwrap_or(0),
                Replacement::Random => (self.rng.next() % self.geometry.ways) as usize,
            },
        };
        let stamp = self.tick();
        let slot = &mut self.lines[base + victim];
        let written_back = u32::from(slot.valid && slot.dirty);
        *slot = Line {
            tag,
            valid: true,
            dirty,
            stamp,
        };
        self.counters.writebacks += u64::from(written_back);
        written_back
    }

    pub fn access(&mut self, record: &AccessRecord) -> Result<AccessOutcome, SimError> {
        let is_write = record.kind == AccessKind::DataWrite;
        if is_write && !self.config.writable() {
            return Err(SimError::WriteToReadOnly {
                address: record.address,
            });
        }
        self.counters.accesses += 1;
        let loc = self.geometry.decompose(record.address);
        let mut outcome = AccessOutcome::default();

        match self.find(loc.set_index, loc.tag) {
            Some(idx) => {
                outcome.hit = true;
                if self.config.replacement == Replacement::Lru {
                    let stamp = self.tick();
                    self.lines[idx].stamp = stamp;
                }
                if is_write {
                    match self.config.write_policy {
                        Some(WritePolicy::CopyBack) => self.lines[idx].dirty = true,
                        Some(WritePolicy::WriteThrough) => self.counters.writethroughs += 1,
                        None => unreachable!("checked above"),
                    }
                }
            }
            None => {
                self.counters.demand_misses += 1;
                if is_write && self.config.write_policy == Some(WritePolicy::WriteThrough) {
                    // no-write-allocate
                    self.counters.writethroughs += 1;
                } else {
                    outcome.writebacks_emitted += self.install(loc.set_index, loc.tag, is_write);
                    outcome.lines_fetched += 1;
                }
            }
        }

        let prefetch = match self.config.prefetch {
            Prefetch::OnDemand => false,
            Prefetch::Always => true,
            Prefetch::OnMiss => !outcome.hit,
        };
        if prefetch {
            let next = self
                .geometry
                .locate(loc.block.wrapping_add(1) & self.geometry.block_mask);
            if self.find(next.set_index, next.tag).is_none() {
                outcome.writebacks_emitted += self.install(next.set_index, next.tag, false);
                outcome.lines_fetched += 1;
                self.counters.prefetch_fetches += 1;
            }
        }
        Ok(outcome)
    }

    /// Checks the structural invariants; used by tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        let lru = self.config.replacement == Replacement::Lru;
        for set in 0..self.geometry.sets {
            let ways = &self.lines[self.set_range(set)];
            for (i, a) in ways.iter().enumerate() {
                if a.dirty && !a.valid {
                    return Err(format!("set {set} way {i}: dirty but invalid"));
                }
                if a.dirty && self.config.write_policy != Some(WritePolicy::CopyBack) {
                    return Err(format!("set {set} way {i}: dirty outside copy-back"));
                }
                for b in &ways[i + 1..] {
                    if a.valid && b.valid && a.tag == b.tag {
                        return Err(format!("set {set}: duplicate tag {:#x}", a.tag));
                    }
                    if lru && a.valid && b.valid && a.stamp == b.stamp {
                        return Err(format!("set {set}: repeated LRU stamp"));
                    }
                }
            }
        }
        if self.counters.demand_misses > self.counters.accesses {
            return Err("more demand misses than accesses".into());
        }
        Ok(())
    }
}

/// Counters for both caches of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SimResult {
    pub icache: SimCounters,
    pub dcache: SimCounters,
}

/// Per-cache RNG seeds derived from a single simulation seed.
pub fn cache_seeds(seed: u64) -> (u64, u64) {
    (splitmix64(seed ^ 0x1CAC4E), splitmix64(seed ^ 0x0DCAC4E))
}

/// Runs a trace through the split caches: fetches go to `icache`, data
/// references to `dcache`.
pub fn simulate(
    trace: &[AccessRecord],
    icache: &CacheConfig,
    dcache: &CacheConfig,
    seed: u64,
) -> Result<SimResult, SimError> {
    if icache.writable() || !dcache.writable() {
        return Err(ConfigError::Writability.into());
    }
    let (iseed, dseed) = cache_seeds(seed);
    let mut ic = CacheState::new(*icache, iseed)?;
    let mut dc = CacheState::new(*dcache, dseed)?;
    for rec in trace {
        match rec.kind {
            AccessKind::InstrFetch => ic.access(rec)?,
            AccessKind::DataRead | AccessKind::DataWrite => dc.access(rec)?,
        };
    }
    Ok(SimResult {
        icache: ic.counters(),
        dcache: dc.counters(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(total: u64, line: u64, ways: u64) -> CacheConfig {
        CacheConfig {
            total_size: total,
            line_size: line,
            ways,
            replacement: Replacement::Lru,
            prefetch: Prefetch::OnDemand,
            write_policy: Some(WritePolicy::CopyBack),
        }
    }

    fn read(a: u64) -> AccessRecord {
        AccessRecord::new(AccessKind::DataRead, a)
    }

    fn write(a: u64) -> AccessRecord {
        AccessRecord::new(AccessKind::DataWrite, a)
    }

    #[test]
    fn geometry_examples() {
        assert_eq!(cfg(16384, 8, 4).validate().unwrap().sets, 512);
        assert_eq!(cfg(16384, 64, 64).validate().unwrap().sets, 4);
        let state = CacheState::new(cfg(16384, 8, 4), 0).unwrap();
        assert_eq!(state.valid_lines(), 0);
        assert_eq!(state.counters(), SimCounters::default());
    }

    #[test]
    fn config_errors() {
        assert_eq!(
            cfg(1000, 8, 4).validate(),
            Err(ConfigError::NotPowerOfTwo {
                field: "total_size",
                value: 1000
            })
        );
        assert!(matches!(
            cfg(16384, 4, 4).validate(),
            Err(ConfigError::OutOfDomain {
                field: "line_size",
                ..
            })
        ));
        assert!(matches!(
            cfg(1 << 20, 8, 128).validate(),
            Err(ConfigError::OutOfDomain { field: "ways", .. })
        ));
        assert!(matches!(
            cfg(64, 8, 64).validate(),
            Err(ConfigError::TooFewLines { .. })
        ));
        assert!(matches!(
            cfg(16384, 8, 3).validate(),
            Err(ConfigError::NotPowerOfTwo { field: "ways", .. })
        ));
    }

    #[test]
    fn decompose_examples() {
        // line 8, 4 sets, direct mapped
        let c = cfg(32, 8, 1);
        assert_eq!(
            c.decompose(0x10).unwrap(),
            Location {
                tag: 0,
                set_index: 2,
                block: 2
            }
        );
        assert_eq!(
            c.decompose(0x27).unwrap(),
            Location {
                tag: 1,
                set_index: 0,
                block: 4
            }
        );
        let fully = cfg(64 * 8, 64, 8);
        for a in [0u64, 0x40, 0xdead_beef, u64::MAX] {
            assert_eq!(fully.decompose(a).unwrap().set_index, 0);
        }
    }

    #[test]
    fn direct_mapped_read_sequence() {
        let mut c = CacheState::new(cfg(16, 8, 1), 0).unwrap();
        let hits: Vec<bool> = [0x00, 0x04, 0x10, 0x00]
            .iter()
            .map(|&a| c.access(&read(a)).unwrap().hit)
            .collect();
        assert_eq!(hits, vec![false, true, false, false]);
        assert_eq!(c.counters().accesses, 4);
        assert_eq!(c.counters().demand_misses, 3);
    }

    #[test]
    fn always_prefetch_sequence() {
        let mut config = cfg(16, 8, 1);
        config.prefetch = Prefetch::Always;
        let mut c = CacheState::new(config, 0).unwrap();
        let o1 = c.access(&read(0x00)).unwrap();
        assert!(!o1.hit && o1.lines_fetched == 2);
        assert!(c.contains_block(1));
        let o2 = c.access(&read(0x04)).unwrap();
        assert!(o2.hit && o2.lines_fetched == 0);
        let o3 = c.access(&read(0x10)).unwrap();
        assert!(!o3.hit && o3.lines_fetched == 2);
        assert!(c.contains_block(3) && !c.contains_block(1));
        // block 0 misses again and block 1 is absent, so it is prefetched too
        let o4 = c.access(&read(0x00)).unwrap();
        assert!(!o4.hit && o4.lines_fetched == 2);
        let n = c.counters();
        assert_eq!((n.accesses, n.demand_misses, n.prefetch_fetches), (4, 3, 3));
    }

    #[test]
    fn miss_prefetch_only_on_miss() {
        let mut config = cfg(64, 8, 2);
        config.prefetch = Prefetch::OnMiss;
        let mut c = CacheState::new(config, 0).unwrap();
        c.access(&read(0)).unwrap();
        assert_eq!(c.counters().prefetch_fetches, 1);
        c.access(&read(8)).unwrap(); // hit on prefetched block 1
        assert_eq!(c.counters().prefetch_fetches, 1);
        assert_eq!(c.counters().demand_misses, 1);
    }

    #[test]
    fn copy_back_writeback_on_eviction() {
        let mut c = CacheState::new(cfg(16, 8, 1), 0).unwrap();
        c.access(&read(0)).unwrap();
        let w = c.access(&write(0)).unwrap();
        assert!(w.hit);
        assert_eq!(w.writebacks_emitted, 0);
        let evict = c.access(&read(0x10)).unwrap();
        assert_eq!(evict.writebacks_emitted, 1);
        assert_eq!(c.counters().writebacks, 1);
        assert_eq!(c.counters().writethroughs, 0);
        c.check_invariants().unwrap();
    }

    #[test]
    fn write_through_no_allocate() {
        let mut config = cfg(16, 8, 1);
        config.write_policy = Some(WritePolicy::WriteThrough);
        let mut c = CacheState::new(config, 0).unwrap();
        let o = c.access(&write(0)).unwrap();
        assert!(!o.hit);
        assert_eq!(o.lines_fetched, 0);
        assert_eq!(c.valid_lines(), 0);
        c.access(&read(0)).unwrap();
        c.access(&write(0)).unwrap();
        c.access(&read(0x10)).unwrap();
        let n = c.counters();
        assert_eq!(n.demand_misses, 3);
        assert_eq!(n.writethroughs, 2);
        assert_eq!(n.writebacks, 0);
    }

    #[test]
    fn write_to_read_only_is_rejected() {
        let mut config = cfg(16, 8, 1);
        config.write_policy = None;
        let mut c = CacheState::new(config, 0).unwrap();
        assert_eq!(
            c.access(&write(0x40)),
            Err(SimError::WriteToReadOnly { address: 0x40 })
        );
    }

    #[test]
    fn fifo_ignores_hits_lru_does_not() {
        // one set, two ways: A B A C -> LRU evicts B, FIFO evicts A
        let trace = [0u64, 8, 0, 16];
        for (policy, a_kept) in [(Replacement::Lru, true), (Replacement::Fifo, false)] {
            let mut config = cfg(16, 8, 2);
            config.replacement = policy;
            let mut c = CacheState::new(config, 0).unwrap();
            for a in trace {
                c.access(&read(a)).unwrap();
            }
            assert_eq!(c.contains_block(0), a_kept, "{policy}");
            assert_eq!(c.contains_block(1), !a_kept, "{policy}");
        }
    }

    #[test]
    fn prefetch_wraps_at_top_of_address_space() {
        let mut config = cfg(64, 8, 2);
        config.prefetch = Prefetch::Always;
        let mut c = CacheState::new(config, 0).unwrap();
        c.access(&read(u64::MAX)).unwrap();
        assert!(c.contains_block(0));
    }

    #[test]
    fn simulate_routes_by_kind() {
        let mut icfg = cfg(1024, 16, 4);
        icfg.write_policy = None;
        let dcfg = cfg(1024, 16, 4);
        let empty = simulate(&[], &icfg, &dcfg, 0).unwrap();
        assert_eq!(empty, SimResult::default());

        let trace: Vec<_> = (0..100)
            .map(|i| AccessRecord::new(AccessKind::InstrFetch, i * 4))
            .collect();
        let r = simulate(&trace, &icfg, &dcfg, 0).unwrap();
        assert_eq!(r.dcache, SimCounters::default());
        assert_eq!(r.icache.accesses, 100);
        assert_eq!(r.icache.demand_misses, 25);

        assert!(matches!(
            simulate(&trace, &dcfg, &dcfg, 0),
            Err(SimError::Config(ConfigError::Writability))
        ));
    }

    fn arb_config() -> impl Strategy<Value = CacheConfig> {
        (
            0usize..4,
            0u32..5,
            4u32..10,
            0usize..3,
            0usize..3,
            0usize..2,
        )
            .prop_filter_map("geometry", |(l, w, s, r, p, wp)| {
                let line = LINE_SIZES[l];
                let ways = 1u64 << w;
                let total = 1u64 << (s + 3);
                let c = CacheConfig {
                    total_size: total,
                    line_size: line,
                    ways,
                    replacement: Replacement::ALL[r],
                    prefetch: Prefetch::ALL[p],
                    write_policy: Some(WritePolicy::ALL[wp]),
                };
                c.validate().ok().map(|_| c)
            })
    }

    fn arb_trace() -> impl Strategy<Value = Vec<AccessRecord>> {
        prop::collection::vec(
            (0u8..2, 0u64..2048)
                .prop_map(|(k, a)| AccessRecord::new(AccessKind::from_label(k).unwrap(), a)),
            0..300,
        )
    }

    proptest! {
        #[test]
        fn invariants_hold(config in arb_config(), trace in arb_trace(), seed in any::<u64>()) {
            let mut c = CacheState::new(config, seed).unwrap();
            let mut prev = c.counters();
            for rec in &trace {
                c.access(rec).unwrap();
                let now = c.counters();
                prop_assert!(now.accesses >= prev.accesses && now.demand_misses >= prev.demand_misses
                    && now.prefetch_fetches >= prev.prefetch_fetches && now.writebacks >= prev.writebacks
                    && now.writethroughs >= prev.writethroughs);
                prev = now;
            }
            c.check_invariants().map_err(TestCaseError::fail)?;
            let n = c.counters();
            prop_assert_eq!(n.hits() + n.demand_misses, n.accesses);
            match config.write_policy {
                Some(WritePolicy::WriteThrough) => prop_assert_eq!(n.writebacks, 0),
                _ => prop_assert_eq!(n.writethroughs, 0),
            }
        }

        #[test]
        fn read_only_traces_ignore_write_policy(config in arb_config(), trace in arb_trace(), seed in any::<u64>()) {
            let reads: Vec<_> = trace.into_iter().map(|r| read(r.address)).collect();
            let run = |wp| {
                let mut c = CacheState::new(CacheConfig { write_policy: Some(wp), ..config }, seed).unwrap();
                for r in &reads { c.access(r).unwrap(); }
                c.counters()
            };
            prop_assert_eq!(run(WritePolicy::CopyBack), run(WritePolicy::WriteThrough));
        }

        #[test]
        fn second_pass_hits_when_everything_fits(trace in arb_trace(), r in 0usize..3, seed in any::<u64>()) {
            // 2048-byte address range fits in a fully associative 64 x 32 B cache
            let config = CacheConfig {
                total_size: 2048, line_size: 32, ways: 64,
                replacement: Replacement::ALL[r], prefetch: Prefetch::OnDemand,
                write_policy: Some(WritePolicy::CopyBack),
            };
            let mut c = CacheState::new(config, seed).unwrap();
            for rec in &trace { c.access(rec).unwrap(); }
            let first = c.counters().demand_misses;
            for rec in &trace { c.access(rec).unwrap(); }
            prop_assert_eq!(c.counters().demand_misses, first);
        }

        #[test]
        fn deterministic_for_seed(config in arb_config(), trace in arb_trace(), seed in any::<u64>()) {
            let run = || {
                let mut c = CacheState::new(config, seed).unwrap();
                for r in &trace { c.access(r).unwrap(); }
                c.counters()
            };
            prop_assert_eq!(run(), run());
        }
    }
}
