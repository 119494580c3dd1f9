//! The 9-gene integer chromosome and the search space it indexes.
//!
//! Gene order is `[LI, WI, RI, SI, LD, WD, RD, SD, AD]`: line size, ways,
//! replacement and prefetch for the I-cache, the same four for the D-cache,
//! then the D-cache write policy. Each gene is an index into the matching
//! value table of a [`SearchSpace`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache_sim::{CacheConfig, Prefetch, Replacement, WritePolicy};

pub const GENE_COUNT: usize = 9;
pub const GENE_NAMES: [&str; GENE_COUNT] = ["LI", "WI", "RI", "SI", "LD", "WD", "RD", "SD", "AD"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Genome(pub [u8; GENE_COUNT]);

impl Genome {
    pub fn genes(&self) -> &[u8; GENE_COUNT] {
        &self.0
    }

    /// FNV-1a over the genes; stable across platforms and releases.
    pub fn stable_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &g in &self.0 {
            h ^= u64::from(g);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for Genome {
    type Err = GenomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<_> = s.split(',').map(str::trim).collect();
        if parts.len() != GENE_COUNT {
            return Err(GenomeError::Syntax(format!(
                "expected {GENE_COUNT} comma-separated genes, got `{s}`"
            )));
        }
        let mut genes = [0u8; GENE_COUNT];
        for (slot, p) in genes.iter_mut().zip(parts) {
            *slot = p
                .parse()
                .map_err(|_| GenomeError::Syntax(format!("bad gene `{p}`")))?;
        }
        Ok(Genome(genes))
    }
}

#[derive(Debug, Error)]
pub enum GenomeError {
    #[error("gene {gene} = {value} out of range (max {max})")]
    GeneOutOfRange {
        gene: &'static str,
        value: u8,
        max: usize,
    },
    #[error("{field} = {value} is not part of the search space")]
    NotInSpace { field: &'static str, value: String },
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("{0}")]
    Syntax(String),
    #[error("cannot read search space {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed search space: {0}")]
    Json(#[from] serde_json::Error),
}

/// Value tables for the four per-cache genes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheAxes {
    pub line_sizes: Vec<u64>,
    pub ways: Vec<u64>,
    pub replacement: Vec<Replacement>,
    pub prefetch: Vec<Prefetch>,
}

impl Default for CacheAxes {
    fn default() -> Self {
        Self {
            line_sizes: vec![8, 16, 32, 64],
            ways: vec![4, 8, 16, 32, 64],
            replacement: vec![Replacement::Lru, Replacement::Fifo, Replacement::Random],
            prefetch: vec![Prefetch::OnDemand, Prefetch::Always, Prefetch::OnMiss],
        }
    }
}

/// A `(line_size, ways)` key.
pub type LineWays = (u64, u64);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub icache_size: u64,
    pub dcache_size: u64,
    #[serde(default)]
    pub icache: CacheAxes,
    #[serde(default)]
    pub dcache: CacheAxes,
    #[serde(default = "default_write_policies")]
    pub write_policy: Vec<WritePolicy>,
}

fn default_write_policies() -> Vec<WritePolicy> {
    vec![WritePolicy::CopyBack, WritePolicy::WriteThrough]
}

impl Default for SearchSpace {
    /// 16 KB caches with the full parameter tables: 64800 configurations.
    fn default() -> Self {
        Self {
            icache_size: 16 * 1024,
            dcache_size: 16 * 1024,
            icache: CacheAxes::default(),
            dcache: CacheAxes::default(),
            write_policy: default_write_policies(),
        }
    }
}

fn check_table<T: PartialEq + fmt::Debug>(name: &str, table: &[T]) -> Result<(), GenomeError> {
    if table.is_empty() || table.len() > usize::from(u8::MAX) + 1 {
        return Err(GenomeError::InvalidSpace(format!(
            "table {name} must have 1..=256 entries"
        )));
    }
    for (i, v) in table.iter().enumerate() {
        if table[..i].contains(v) {
            return Err(GenomeError::InvalidSpace(format!(
                "table {name} repeats {v:?}"
            )));
        }
    }
    Ok(())
}

fn index_in<T: PartialEq + fmt::Display>(
    table: &[T],
    value: &T,
    field: &'static str,
) -> Result<u8, GenomeError> {
    table
        .iter()
        .position(|v| v == value)
        .map(|i| i as u8)
        .ok_or_else(|| GenomeError::NotInSpace {
            field,
            value: value.to_string(),
        })
}

impl SearchSpace {
    pub fn from_json(text: &str) -> Result<Self, GenomeError> {
        let space: SearchSpace = serde_json::from_str(text)?;
        space.validate()?;
        Ok(space)
    }

    pub fn load(path: &Path) -> Result<Self, GenomeError> {
        let text = std::fs::read_to_string(path).map_err(|source| GenomeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Every table non-empty and duplicate-free, every combination a valid cache.
    pub fn validate(&self) -> Result<(), GenomeError> {
        for (side, axes) in [("icache", &self.icache), ("dcache", &self.dcache)] {
            check_table(&format!("{side}.line_sizes"), &axes.line_sizes)?;
            check_table(&format!("{side}.ways"), &axes.ways)?;
            check_table(&format!("{side}.replacement"), &axes.replacement)?;
            check_table(&format!("{side}.prefetch"), &axes.prefetch)?;
        }
        check_table("write_policy", &self.write_policy)?;
        for (size, axes, wp) in [
            (self.icache_size, &self.icache, None),
            (self.dcache_size, &self.dcache, Some(WritePolicy::CopyBack)),
        ] {
            for &line_size in &axes.line_sizes {
                for &ways in &axes.ways {
                    CacheConfig {
                        total_size: size,
                        line_size,
                        ways,
                        replacement: Replacement::Lru,
                        prefetch: Prefetch::OnDemand,
                        write_policy: wp,
                    }
                    .validate()
                    .map_err(|e| GenomeError::InvalidSpace(e.to_string()))?;
                }
            }
        }
        Ok(())
    }

    pub fn cardinalities(&self) -> [usize; GENE_COUNT] {
        let (i, d) = (&self.icache, &self.dcache);
        [
            i.line_sizes.len(),
            i.ways.len(),
            i.replacement.len(),
            i.prefetch.len(),
            d.line_sizes.len(),
            d.ways.len(),
            d.replacement.len(),
            d.prefetch.len(),
            self.write_policy.len(),
        ]
    }

    pub fn size(&self) -> u64 {
        self.cardinalities().iter().map(|&c| c as u64).product()
    }

    pub fn check(&self, g: &Genome) -> Result<(), GenomeError> {
        for ((i, &value), card) in g.0.iter().enumerate().zip(self.cardinalities()) {
            if usize::from(value) >= card {
                return Err(GenomeError::GeneOutOfRange {
                    gene: GENE_NAMES[i],
                    value,
                    max: card - 1,
                });
            }
        }
        Ok(())
    }

    /// Genome to (I-cache, D-cache) configs.
    pub fn decode(&self, g: &Genome) -> Result<(CacheConfig, CacheConfig), GenomeError> {
        self.check(g)?;
        let at = |i: usize| usize::from(g.0[i]);
        let (i, d) = (&self.icache, &self.dcache);
        let icfg = CacheConfig {
            total_size: self.icache_size,
            line_size: i.line_sizes[at(0)],
            ways: i.ways[at(1)],
            replacement: i.replacement[at(2)],
            prefetch: i.prefetch[at(3)],
            write_policy: None,
        };
        let dcfg = CacheConfig {
            total_size: self.dcache_size,
            line_size: d.line_sizes[at(4)],
            ways: d.ways[at(5)],
            replacement: d.replacement[at(6)],
            prefetch: d.prefetch[at(7)],
            write_policy: Some(self.write_policy[at(8)]),
        };
        Ok((icfg, dcfg))
    }

    pub fn encode(&self, icfg: &CacheConfig, dcfg: &CacheConfig) -> Result<Genome, GenomeError> {
        if icfg.total_size != self.icache_size {
            return Err(GenomeError::NotInSpace {
                field: "icache.total_size",
                value: icfg.total_size.to_string(),
            });
        }
        if dcfg.total_size != self.dcache_size {
            return Err(GenomeError::NotInSpace {
                field: "dcache.total_size",
                value: dcfg.total_size.to_string(),
            });
        }
        if icfg.write_policy.is_some() {
            return Err(GenomeError::NotInSpace {
                field: "icache.write_policy",
                value: format!("{:?}", icfg.write_policy),
            });
        }
        let dwp = dcfg.write_policy.ok_or(GenomeError::NotInSpace {
            field: "dcache.write_policy",
            value: "none".into(),
        })?;
        let (i, d) = (&self.icache, &self.dcache);
        Ok(Genome([
            index_in(&i.line_sizes, &icfg.line_size, "icache.line_size")?,
            index_in(&i.ways, &icfg.ways, "icache.ways")?,
            index_in(&i.replacement, &icfg.replacement, "icache.replacement")?,
            index_in(&i.prefetch, &icfg.prefetch, "icache.prefetch")?,
            index_in(&d.line_sizes, &dcfg.line_size, "dcache.line_size")?,
            index_in(&d.ways, &dcfg.ways, "dcache.ways")?,
            index_in(&d.replacement, &dcfg.replacement, "dcache.replacement")?,
            index_in(&d.prefetch, &dcfg.prefetch, "dcache.prefetch")?,
            index_in(&self.write_policy, &dwp, "write_policy")?,
        ]))
    }

    /// Per-gene inclusive bounds after applying `restriction`.
    pub fn bounds(&self, restriction: &Restriction) -> Result<GeneBounds, GenomeError> {
        let cards = self.cardinalities();
        let mut lo = [0u8; GENE_COUNT];
        let mut hi = [0u8; GENE_COUNT];
        for i in 0..GENE_COUNT {
            let max = (cards[i] - 1) as u8;
            match restriction.0[i] {
                Some(v) if usize::from(v) >= cards[i] => {
                    return Err(GenomeError::GeneOutOfRange {
                        gene: GENE_NAMES[i],
                        value: v,
                        max: cards[i] - 1,
                    })
                }
                Some(v) => (lo[i], hi[i]) = (v, v),
                None => (lo[i], hi[i]) = (0, max),
            }
        }
        Ok(GeneBounds { lo, hi })
    }

    /// All genomes of the (restricted) space in lexicographic order.
    pub fn enumerate(&self, restriction: &Restriction) -> Result<Enumerate, GenomeError> {
        Ok(self.bounds(restriction)?.enumerate())
    }

    /// Distinct `(line_size, ways)` pairs per cache, for characterization checks.
    pub fn line_way_pairs(&self) -> (Vec<LineWays>, Vec<LineWays>) {
        let pairs = |a: &CacheAxes| {
            a.line_sizes
                .iter()
                .flat_map(|&l| a.ways.iter().map(move |&w| (l, w)))
                .collect()
        };
        (pairs(&self.icache), pairs(&self.dcache))
    }
}

/// Per-gene fixed values; `None` leaves a gene free.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Restriction(pub [Option<u8>; GENE_COUNT]);

impl Restriction {
    pub fn fix(mut self, gene: usize, value: u8) -> Self {
        self.0[gene] = Some(value);
        self
    }

    /// Fixes the four I-cache genes.
    pub fn icache_fixed(values: [u8; 4]) -> Self {
        let mut r = Restriction::default();
        for (i, v) in values.into_iter().enumerate() {
            r.0[i] = Some(v);
        }
        r
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(Option::is_none)
    }

    /// Merges `other` on top of `self`.
    pub fn overlay(mut self, other: &Restriction) -> Self {
        for (slot, v) in self.0.iter_mut().zip(other.0) {
            if v.is_some() {
                *slot = v;
            }
        }
        self
    }
}

impl FromStr for Restriction {
    type Err = GenomeError;

    /// `LI=1,WD=3` or positional `0=1,5=3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut r = Restriction::default();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| GenomeError::Syntax(format!("expected gene=value, got `{item}`")))?;
            let name = name.trim();
            let gene = GENE_NAMES
                .iter()
                .position(|n| n.eq_ignore_ascii_case(name))
                .or_else(|| name.parse::<usize>().ok().filter(|&i| i < GENE_COUNT))
                .ok_or_else(|| GenomeError::Syntax(format!("unknown gene `{name}`")))?;
            let value = value
                .trim()
                .parse()
                .map_err(|_| GenomeError::Syntax(format!("bad value in `{item}`")))?;
            r.0[gene] = Some(value);
        }
        Ok(r)
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<_> = self
            .0
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| format!("{}={v}", GENE_NAMES[i])))
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Inclusive per-gene value ranges that operators sample within.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneBounds {
    pub lo: [u8; GENE_COUNT],
    pub hi: [u8; GENE_COUNT],
}

impl GeneBounds {
    pub fn contains(&self, g: &Genome) -> bool {
        (0..GENE_COUNT).all(|i| (self.lo[i]..=self.hi[i]).contains(&g.0[i]))
    }

    pub fn size(&self) -> u64 {
        (0..GENE_COUNT)
            .map(|i| u64::from(self.hi[i] - self.lo[i]) + 1)
            .product()
    }

    pub fn enumerate(&self) -> Enumerate {
        Enumerate {
            bounds: *self,
            next: Some(Genome(self.lo)),
        }
    }
}

/// Mixed-radix counter over a [`GeneBounds`], last gene fastest.
#[derive(Clone, Debug)]
pub struct Enumerate {
    bounds: GeneBounds,
    next: Option<Genome>,
}

impl Iterator for Enumerate {
    type Item = Genome;

    fn next(&mut self) -> Option<Genome> {
        let current = self.next?;
        let mut genes = current.0;
        let mut i = GENE_COUNT;
        self.next = loop {
            if i == 0 {
                break None;
            }
            i -= 1;
            if genes[i] < self.bounds.hi[i] {
                genes[i] += 1;
                break Some(Genome(genes));
            }
            genes[i] = self.bounds.lo[i];
        };
        Some(current)
    }
}
