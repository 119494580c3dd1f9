//! Execution-time and energy objectives computed from simulation counters
//! and a hardware characterization table.
//!
//! Both objectives are linear in the counters. For each cache:
//!
//! ```text
//! time   = accesses * access_time
//!        + misses * dram_access_time
//!        + misses * line_size / dram_bandwidth
//! energy = accesses * access_energy
//!        + misses * access_energy * line_size
//!        + misses * dram_access_power * (dram_access_time + line_size / dram_bandwidth)
//! ```
//!
//! No CPU-energy term is included. Units are seconds, joules, watts, bytes
//! and bytes per second.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cache_sim::{CacheConfig, SimCounters, SimResult};

/// Per-(line size, ways) cache figures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheFigures {
    pub access_time_s: f64,
    pub access_energy_j: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DramFigures {
    pub access_time_s: f64,
    pub access_power_w: f64,
    pub bandwidth_bps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CacheSide {
    Instruction,
    Data,
}

impl std::fmt::Display for CacheSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CacheSide::Instruction => "icache",
            CacheSide::Data => "dcache",
        })
    }
}

#[derive(Debug, Error)]
pub enum CostError {
    #[error("no {side} characterization for line size {line_size}, {ways} ways")]
    MissingKey {
        side: CacheSide,
        line_size: u64,
        ways: u64,
    },
    #[error("duplicate {side} characterization for line size {line_size}, {ways} ways")]
    DuplicateKey {
        side: CacheSide,
        line_size: u64,
        ways: u64,
    },
    #[error("characterization value `{field}` must be finite and > 0 (got {value})")]
    NonPositive { field: String, value: f64 },
    #[error("baseline {which} component is zero")]
    ZeroBaseline { which: &'static str },
    #[error("cannot read characterization {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed characterization: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Serialize, Deserialize)]
struct CharacterizationFile {
    icache: Vec<CharacterizationRow>,
    dcache: Vec<CharacterizationRow>,
    dram: DramFigures,
}

#[derive(Serialize, Deserialize)]
struct CharacterizationRow {
    line_size: u64,
    ways: u64,
    access_time_s: f64,
    access_energy_j: f64,
}

/// Hardware figures standing in for an analytical cache model's output.
#[derive(Clone, Debug, PartialEq)]
pub struct Characterization {
    icache: BTreeMap<(u64, u64), CacheFigures>,
    dcache: BTreeMap<(u64, u64), CacheFigures>,
    pub dram: DramFigures,
}

fn check_positive(field: impl Into<String>, value: f64) -> Result<(), CostError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(CostError::NonPositive {
            field: field.into(),
            value,
        })
    }
}

impl Characterization {
    pub fn new(
        icache: impl IntoIterator<Item = ((u64, u64), CacheFigures)>,
        dcache: impl IntoIterator<Item = ((u64, u64), CacheFigures)>,
        dram: DramFigures,
    ) -> Result<Self, CostError> {
        check_positive("dram.access_time_s", dram.access_time_s)?;
        check_positive("dram.access_power_w", dram.access_power_w)?;
        check_positive("dram.bandwidth_bps", dram.bandwidth_bps)?;
        let build = |side, rows: &mut dyn Iterator<Item = ((u64, u64), CacheFigures)>| {
            let mut map = BTreeMap::new();
            for ((line_size, ways), fig) in rows {
                check_positive(format!("{side}.access_time_s"), fig.access_time_s)?;
                check_positive(format!("{side}.access_energy_j"), fig.access_energy_j)?;
                if map.insert((line_size, ways), fig).is_some() {
                    return Err(CostError::DuplicateKey {
                        side,
                        line_size,
                        ways,
                    });
                }
            }
            Ok(map)
        };
        let icache = build(CacheSide::Instruction, &mut icache.into_iter())?;
        let dcache = build(CacheSide::Data, &mut dcache.into_iter())?;
        Ok(Self {
            icache,
            dcache,
            dram,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CostError> {
        let file: CharacterizationFile = serde_json::from_str(text)?;
        let rows = |v: Vec<CharacterizationRow>| {
            v.into_iter()
                .map(|r| {
                    (
                        (r.line_size, r.ways),
                        CacheFigures {
                            access_time_s: r.access_time_s,
                            access_energy_j: r.access_energy_j,
                        },
                    )
                })
                .collect::<Vec<_>>()
        };
        Self::new(rows(file.icache), rows(file.dcache), file.dram)
    }

    pub fn load(path: &Path) -> Result<Self, CostError> {
        let text = std::fs::read_to_string(path).map_err(|source| CostError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let rows = |m: &BTreeMap<(u64, u64), CacheFigures>| {
            m.iter()
                .map(|(&(line_size, ways), f)| CharacterizationRow {
                    line_size,
                    ways,
                    access_time_s: f.access_time_s,
                    access_energy_j: f.access_energy_j,
                })
                .collect()
        };
        let file = CharacterizationFile {
            icache: rows(&self.icache),
            dcache: rows(&self.dcache),
            dram: self.dram,
        };
        serde_json::to_string_pretty(&file).expect("characterization serializes")
    }

    /// Content digest of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn lookup(
        &self,
        side: CacheSide,
        line_size: u64,
        ways: u64,
    ) -> Result<&CacheFigures, CostError> {
        let map = match side {
            CacheSide::Instruction => &self.icache,
            CacheSide::Data => &self.dcache,
        };
        map.get(&(line_size, ways)).ok_or(CostError::MissingKey {
            side,
            line_size,
            ways,
        })
    }

    /// Fails on the first `(line_size, ways)` pair absent for either side.
    pub fn ensure_covers(
        &self,
        icache_pairs: impl IntoIterator<Item = (u64, u64)>,
        dcache_pairs: impl IntoIterator<Item = (u64, u64)>,
    ) -> Result<(), CostError> {
        for (l, w) in icache_pairs {
            self.lookup(CacheSide::Instruction, l, w)?;
        }
        for (l, w) in dcache_pairs {
            self.lookup(CacheSide::Data, l, w)?;
        }
        Ok(())
    }
}

/// Which simulator events count as misses in the objectives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissAccounting {
    /// Demand misses plus prefetch fills; both cost a DRAM round trip.
    #[default]
    Combined,
    DemandOnly,
}

impl MissAccounting {
    pub fn misses(self, c: &SimCounters) -> u64 {
        match self {
            MissAccounting::Combined => c.demand_misses + c.prefetch_fetches,
            MissAccounting::DemandOnly => c.demand_misses,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub exec_time: f64,
    pub energy: f64,
}

impl ObjectiveVector {
    pub fn new(exec_time: f64, energy: f64) -> Self {
        Self { exec_time, energy }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.exec_time, self.energy]
    }
}

/// Everything the two objectives need about one cache.
struct Side<'a> {
    counters: &'a SimCounters,
    line_size: f64,
    figures: &'a CacheFigures,
}

fn sides<'a>(
    sim: &'a SimResult,
    icfg: &CacheConfig,
    dcfg: &CacheConfig,
    ch: &'a Characterization,
) -> Result<[Side<'a>; 2], CostError> {
    Ok([
        Side {
            counters: &sim.icache,
            line_size: icfg.line_size as f64,
            figures: ch.lookup(CacheSide::Instruction, icfg.line_size, icfg.ways)?,
        },
        Side {
            counters: &sim.dcache,
            line_size: dcfg.line_size as f64,
            figures: ch.lookup(CacheSide::Data, dcfg.line_size, dcfg.ways)?,
        },
    ])
}

pub fn exec_time(
    sim: &SimResult,
    icfg: &CacheConfig,
    dcfg: &CacheConfig,
    ch: &Characterization,
    mode: MissAccounting,
) -> Result<f64, CostError> {
    let dram = &ch.dram;
    Ok(sides(sim, icfg, dcfg, ch)?
        .iter()
        .map(|s| {
            let accesses = s.counters.accesses as f64;
            let misses = mode.misses(s.counters) as f64;
            accesses * s.figures.access_time_s
                + misses * dram.access_time_s
                + misses * s.line_size / dram.bandwidth_bps
        })
        .sum())
}

pub fn energy(
    sim: &SimResult,
    icfg: &CacheConfig,
    dcfg: &CacheConfig,
    ch: &Characterization,
    mode: MissAccounting,
) -> Result<f64, CostError> {
    let dram = &ch.dram;
    Ok(sides(sim, icfg, dcfg, ch)?
        .iter()
        .map(|s| {
            let accesses = s.counters.accesses as f64;
            let misses = mode.misses(s.counters) as f64;
            accesses * s.figures.access_energy_j
                + misses * s.figures.access_energy_j * s.line_size
                + misses
                    * dram.access_power_w
                    * (dram.access_time_s + s.line_size / dram.bandwidth_bps)
        })
        .sum())
}

pub fn objectives(
    sim: &SimResult,
    icfg: &CacheConfig,
    dcfg: &CacheConfig,
    ch: &Characterization,
    mode: MissAccounting,
) -> Result<ObjectiveVector, CostError> {
    Ok(ObjectiveVector {
        exec_time: exec_time(sim, icfg, dcfg, ch, mode)?,
        energy: energy(sim, icfg, dcfg, ch, mode)?,
    })
}

/// Signed improvement percentages of `optimized` over `baseline`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub time_pct: f64,
    pub energy_pct: f64,
}

pub fn improvement(
    baseline: &ObjectiveVector,
    optimized: &ObjectiveVector,
) -> Result<Improvement, CostError> {
    if baseline.exec_time == 0.0 {
        return Err(CostError::ZeroBaseline { which: "exec_time" });
    }
    if baseline.energy == 0.0 {
        return Err(CostError::ZeroBaseline { which: "energy" });
    }
    Ok(Improvement {
        time_pct: 100.0 * (baseline.exec_time - optimized.exec_time) / baseline.exec_time,
        energy_pct: 100.0 * (baseline.energy - optimized.energy) / baseline.energy,
    })
}
