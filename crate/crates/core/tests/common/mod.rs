//! Independent oracles shared by the integration and acceptance tests.
//!
//! Nothing here calls into the library's algorithms; only its plain data
//! types are reused so results can be compared directly.

#![allow(dead_code)]

use std::collections::VecDeque;
use std::path::PathBuf;

use cachedse::cache_sim::{
    CacheConfig, Prefetch, Replacement, SimCounters, SimResult, WritePolicy,
};
use cachedse::cost_model::{Characterization, ObjectiveVector};
use cachedse::trace::{AccessKind, AccessRecord};
use rand::Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn sample_characterization() -> Characterization {
    Characterization::load(&data_dir().join("sample_characterization.json"))
        .expect("sample table loads")
}

// ---------------------------------------------------------------------------
// Reference simulator: one explicit list of resident blocks per set.

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Xs(u64);

impl Xs {
    fn seeded(seed: u64) -> Self {
        let s = mix64(seed);
        Xs(if s == 0 { 0x9E37_79B9_7F4A_7C15 } else { s })
    }

    fn draw(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }
}

#[derive(Clone, Copy)]
struct Entry {
    block: u64,
    dirty: bool,
}

/// LRU/FIFO sets are queues ordered oldest-first; RANDOM sets are slot
/// vectors filled left to right.
pub struct RefCache {
    cfg: CacheConfig,
    sets: u64,
    ways: usize,
    queues: Vec<VecDeque<Entry>>,
    slots: Vec<Vec<Entry>>,
    rng: Xs,
    pub counters: SimCounters,
}

impl RefCache {
    pub fn new(cfg: CacheConfig, seed: u64) -> Self {
        let sets = cfg.total_size / (cfg.line_size * cfg.ways);
        assert!(sets >= 1);
        RefCache {
            cfg,
            sets,
            ways: cfg.ways as usize,
            queues: vec![VecDeque::new(); sets as usize],
            slots: vec![Vec::new(); sets as usize],
            rng: Xs::seeded(seed),
            counters: SimCounters::default(),
        }
    }

    fn random(&self) -> bool {
        self.cfg.replacement == Replacement::Random
    }

    fn set_of(&self, block: u64) -> usize {
        (block % self.sets) as usize
    }

    fn resident(&self, block: u64) -> Option<usize> {
        let s = self.set_of(block);
        if self.random() {
            self.slots[s].iter().position(|e| e.block == block)
        } else {
            self.queues[s].iter().position(|e| e.block == block)
        }
    }

    fn fill(&mut self, block: u64, dirty: bool) {
        let s = self.set_of(block);
        let new = Entry { block, dirty };
        let evicted = if self.random() {
            let set = &mut self.slots[s];
            if set.len() < self.ways {
                set.push(new);
                None
            } else {
                let k = (self.rng.draw() % self.ways as u64) as usize;
                Some(std::mem::replace(&mut set[k], new))
            }
        } else {
            let q = &mut self.queues[s];
            let out = if q.len() == self.ways {
                q.pop_front()
            } else {
                None
            };
            q.push_back(new);
            out
        };
        if evicted.is_some_and(|e| e.dirty) {
            self.counters.writebacks += 1;
        }
    }

    pub fn access(&mut self, rec: &AccessRecord) {
        let write = rec.kind == AccessKind::DataWrite;
        assert!(!write || self.cfg.write_policy.is_some());
        self.counters.accesses += 1;
        let shift = self.cfg.line_size.trailing_zeros();
        let block = rec.address >> shift;
        let s = self.set_of(block);
        let through = self.cfg.write_policy == Some(WritePolicy::WriteThrough);

        let hit = match self.resident(block) {
            Some(pos) => {
                if self.random() {
                    if write && !through {
                        self.slots[s][pos].dirty = true;
                    }
                } else {
                    let mut e = self.queues[s][pos];
                    if write && !through {
                        e.dirty = true;
                    }
                    if self.cfg.replacement == Replacement::Lru {
                        self.queues[s].remove(pos);
                        self.queues[s].push_back(e);
                    } else {
                        self.queues[s][pos] = e;
                    }
                }
                if write && through {
                    self.counters.writethroughs += 1;
                }
                true
            }
            None => {
                self.counters.demand_misses += 1;
                if write && through {
                    self.counters.writethroughs += 1;
                } else {
                    self.fill(block, write);
                }
                false
            }
        };

        let wants = match self.cfg.prefetch {
            Prefetch::OnDemand => false,
            Prefetch::Always => true,
            Prefetch::OnMiss => !hit,
        };
        if wants {
            let top = u64::MAX >> shift;
            let next = if block == top { 0 } else { block + 1 };
            if self.resident(next).is_none() {
                self.counters.prefetch_fetches += 1;
                self.fill(next, false);
            }
        }
    }
}

pub fn ref_seeds(seed: u64) -> (u64, u64) {
    (mix64(seed ^ 0x1CAC4E), mix64(seed ^ 0x0DCAC4E))
}

pub fn ref_simulate(
    trace: &[AccessRecord],
    i: &CacheConfig,
    d: &CacheConfig,
    seed: u64,
) -> SimResult {
    let (si, sd) = ref_seeds(seed);
    let mut ic = RefCache::new(*i, si);
    let mut dc = RefCache::new(*d, sd);
    for r in trace {
        if r.kind == AccessKind::InstrFetch {
            ic.access(r);
        } else {
            dc.access(r);
        }
    }
    SimResult {
        icache: ic.counters,
        dcache: dc.counters,
    }
}

// ---------------------------------------------------------------------------
// Cost oracle: the two objective formulas written out term by term.

pub struct HandSide {
    pub accesses: f64,
    pub misses: f64,
    pub line: f64,
    pub access_time: f64,
    pub access_energy: f64,
}

pub struct HandDram {
    pub access_time: f64,
    pub power: f64,
    pub bandwidth: f64,
}

pub fn hand_time(i: &HandSide, d: &HandSide, m: &HandDram) -> f64 {
    i.accesses * i.access_time
        + d.accesses * d.access_time
        + i.misses * m.access_time
        + d.misses * m.access_time
        + i.misses * (i.line / m.bandwidth)
        + d.misses * (d.line / m.bandwidth)
}

pub fn hand_energy(i: &HandSide, d: &HandSide, m: &HandDram) -> f64 {
    i.accesses * i.access_energy
        + d.accesses * d.access_energy
        + i.misses * i.access_energy * i.line
        + d.misses * d.access_energy * d.line
        + i.misses * m.power * (m.access_time + i.line / m.bandwidth)
        + d.misses * m.power * (m.access_time + d.line / m.bandwidth)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

// ---------------------------------------------------------------------------
// Pareto oracles by pairwise comparison.

pub fn dom(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    a.exec_time <= b.exec_time
        && a.energy <= b.energy
        && (a.exec_time < b.exec_time || a.energy < b.energy)
}

/// Fronts by repeated peeling of the non-dominated remainder.
pub fn brute_fronts(points: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| dom(&points[j], &points[i])))
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

pub fn brute_nondominated(points: &[ObjectiveVector]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| dom(q, &points[i])))
        .collect()
}

/// Fraction of `samples` uniform points in the reference box dominated by
/// some member of `front`, scaled by the box area.
pub fn mc_hypervolume<R: Rng>(
    front: &[ObjectiveVector],
    r: &ObjectiveVector,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let mut inside = 0usize;
    for _ in 0..samples {
        let x = rng.gen::<f64>() * r.exec_time;
        let y = rng.gen::<f64>() * r.energy;
        if front.iter().any(|p| p.exec_time <= x && p.energy <= y) {
            inside += 1;
        }
    }
    inside as f64 / samples as f64 * r.exec_time * r.energy
}

// ---------------------------------------------------------------------------
// Trace helpers.

pub fn rec(kind: AccessKind, address: u64) -> AccessRecord {
    AccessRecord::new(kind, address)
}

/// Mixed trace over a few hot regions so that every policy sees hits,
/// conflicts and evictions.
pub fn random_trace<R: Rng>(rng: &mut R, n: usize, writes: bool) -> Vec<AccessRecord> {
    let regions = [0x0u64, 0x4000, 0x1_0000, 0x7fff_0000];
    let mut pc = 0x40_0000u64;
    (0..n)
        .map(|_| {
            let roll = rng.gen_range(0..10);
            if roll < 4 {
                pc = if rng.gen_bool(0.1) {
                    0x40_0000 + rng.gen_range(0..0x2000)
                } else {
                    pc + 4
                };
                rec(AccessKind::InstrFetch, pc)
            } else {
                let base = regions[rng.gen_range(0..regions.len())];
                let addr = base + rng.gen_range(0..0x3000);
                let kind = if writes && roll >= 8 {
                    AccessKind::DataWrite
                } else {
                    AccessKind::DataRead
                };
                rec(kind, addr)
            }
        })
        .collect()
}
