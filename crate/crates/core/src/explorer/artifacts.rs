use std::path::Path;

use serde::Serialize;

use super::eval::Evaluation;
use super::ops::GenerationLog;
use super::{ExplorerError, Result};
use crate::cache_sim::{CacheConfig, Prefetch, Replacement, WritePolicy};
use crate::cost_model::ObjectiveVector;
use crate::genome::{Genome, SearchSpace};

pub const FRONT_FILE: &str = "front.csv";
pub const PARETO_SET_FILE: &str = "pareto_set.json";
pub const LOG_FILE: &str = "log.csv";

/// Column order of front files: the decoded genes, write policy before
/// the D-cache prefetch policy, then the two objectives.
pub const FRONT_HEADER: [&str; 11] = [
    "LI", "WI", "RI", "SI", "LD", "WD", "RD", "AD", "SD", "ExTime", "Energy",
];

/// One evaluated member of a front.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrontRow {
    pub genome: Genome,
    pub icache: CacheConfig,
    pub dcache: CacheConfig,
    pub objectives: ObjectiveVector,
    pub counters: crate::cache_sim::SimResult,
}

impl FrontRow {
    pub fn new(genome: Genome, icache: CacheConfig, dcache: CacheConfig, eval: Evaluation) -> Self {
        Self {
            genome,
            icache,
            dcache,
            objectives: eval.objectives,
            counters: eval.counters,
        }
    }
}

/// Shortest decimal form that parses back to the same bits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn output_err(path: &Path, e: impl Into<std::io::Error>) -> ExplorerError {
    ExplorerError::Output {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

fn csv_to_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

pub(crate) fn write_text(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| output_err(path, e))
}

fn front_symbols(i: &CacheConfig, d: &CacheConfig) -> [String; 9] {
    [
        i.line_size.to_string(),
        i.ways.to_string(),
        i.replacement.to_string(),
        i.prefetch.to_string(),
        d.line_size.to_string(),
        d.ways.to_string(),
        d.replacement.to_string(),
        d.write_policy
            .map_or_else(|| "NONE".into(), |w| w.to_string()),
        d.prefetch.to_string(),
    ]
}

pub fn write_front_csv(path: &Path, rows: &[FrontRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_err(path, csv_to_io(e)))?;
    let write = |w: &mut csv::Writer<std::fs::File>| -> csv::Result<()> {
        w.write_record(FRONT_HEADER)?;
        for r in rows {
            let mut rec: Vec<String> = front_symbols(&r.icache, &r.dcache).into();
            rec.push(fmt_f64(r.objectives.exec_time));
            rec.push(fmt_f64(r.objectives.energy));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    };
    write(&mut w).map_err(|e| output_err(path, csv_to_io(e)))
}

/// One row read back from a front file.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontRecord {
    pub icache_line: u64,
    pub icache_ways: u64,
    pub icache_replacement: Replacement,
    pub icache_prefetch: Prefetch,
    pub dcache_line: u64,
    pub dcache_ways: u64,
    pub dcache_replacement: Replacement,
    pub dcache_write: WritePolicy,
    pub dcache_prefetch: Prefetch,
    pub objectives: ObjectiveVector,
}

impl FrontRecord {
    pub fn configs(&self, space: &SearchSpace) -> (CacheConfig, CacheConfig) {
        (
            CacheConfig {
                total_size: space.icache_size,
                line_size: self.icache_line,
                ways: self.icache_ways,
                replacement: self.icache_replacement,
                prefetch: self.icache_prefetch,
                write_policy: None,
            },
            CacheConfig {
                total_size: space.dcache_size,
                line_size: self.dcache_line,
                ways: self.dcache_ways,
                replacement: self.dcache_replacement,
                prefetch: self.dcache_prefetch,
                write_policy: Some(self.dcache_write),
            },
        )
    }

    pub fn genome(&self, space: &SearchSpace) -> Result<Genome> {
        let (i, d) = self.configs(space);
        Ok(space.encode(&i, &d)?)
    }
}

pub fn read_front_csv(path: &Path) -> Result<Vec<FrontRecord>> {
    let bad = |message: String| ExplorerError::FrontFile {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => ExplorerError::Input {
            path: path.to_path_buf(),
            source,
        },
        other => bad(format!("{other:?}")),
    })?;
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().ne(FRONT_HEADER.iter().copied()) {
        return Err(bad(format!("expected header {}", FRONT_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let row = n + 2;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let num = |i: usize| {
            field(i)
                .parse::<u64>()
                .map_err(|_| bad(format!("row {row}: bad {} `{}`", FRONT_HEADER[i], field(i))))
        };
        let float = |i: usize| {
            field(i)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("row {row}: bad {} `{}`", FRONT_HEADER[i], field(i))))
        };
        fn sym<T: std::str::FromStr<Err = String>>(
            s: &str,
            row: usize,
        ) -> std::result::Result<T, String> {
            s.parse().map_err(|e| format!("row {row}: {e}"))
        }
        out.push(FrontRecord {
            icache_line: num(0)?,
            icache_ways: num(1)?,
            icache_replacement: sym(field(2), row).map_err(bad)?,
            icache_prefetch: sym(field(3), row).map_err(bad)?,
            dcache_line: num(4)?,
            dcache_ways: num(5)?,
            dcache_replacement: sym(field(6), row).map_err(bad)?,
            dcache_write: sym(field(7), row).map_err(bad)?,
            dcache_prefetch: sym(field(8), row).map_err(bad)?,
            objectives: ObjectiveVector::new(float(9)?, float(10)?),
        });
    }
    Ok(out)
}

#[derive(Serialize)]
struct ParetoSetFile<'a> {
    trace: &'a str,
    trace_digest: &'a str,
    seed: u64,
    members: &'a [FrontRow],
}

pub(crate) fn write_pareto_set(
    path: &Path,
    trace: &str,
    digest: &str,
    seed: u64,
    rows: &[FrontRow],
) -> Result<()> {
    let file = ParetoSetFile {
        trace,
        trace_digest: digest,
        seed,
        members: rows,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("pareto set serializes");
    text.push('\n');
    write_text(path, &text)
}

/// Per-generation means and bests, with improvements of the population mean
/// over each baseline.
pub(crate) fn write_log(path: &Path, baselines: &[String], logs: &[GenerationLog]) -> Result<()> {
    let mut header: Vec<String> = [
        "generation",
        "best_exec_time",
        "mean_exec_time",
        "best_energy",
        "mean_energy",
        "front_size",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for b in baselines {
        header.push(format!("{b}_time_pct"));
        header.push(format!("{b}_energy_pct"));
    }
    let mut out = header.join(",");
    out.push('\n');
    for l in logs {
        let g = &l.stats;
        let mut row = vec![
            g.generation.to_string(),
            fmt_f64(g.best.exec_time),
            fmt_f64(g.mean.exec_time),
            fmt_f64(g.best.energy),
            fmt_f64(g.mean.energy),
            g.front.len().to_string(),
        ];
        for imp in &l.improvements {
            row.push(fmt_f64(imp.time_pct));
            row.push(fmt_f64(imp.energy_pct));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

/// Every evaluated genome with its counters and objectives.
pub(crate) fn write_table(path: &Path, rows: &[FrontRow]) -> Result<()> {
    let mut out = String::from(
        "genome,LI,WI,RI,SI,LD,WD,RD,AD,SD,i_accesses,i_demand_misses,i_prefetch_fetches,\
         d_accesses,d_demand_misses,d_prefetch_fetches,d_writebacks,d_writethroughs,ExTime,Energy\n",
    );
    for r in rows {
        let (i, d) = (&r.counters.icache, &r.counters.dcache);
        let mut fields = vec![format!("\"{}\"", r.genome)];
        fields.extend(front_symbols(&r.icache, &r.dcache));
        fields.extend(
            [
                i.accesses,
                i.demand_misses,
                i.prefetch_fetches,
                d.accesses,
                d.demand_misses,
                d.prefetch_fetches,
                d.writebacks,
                d.writethroughs,
            ]
            .map(|v| v.to_string()),
        );
        fields.push(fmt_f64(r.objectives.exec_time));
        fields.push(fmt_f64(r.objectives.energy));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}
