//! NSGA-II over integer genomes, Pareto utilities and the 2-D hypervolume
//! indicator.
//!
//! Both objectives are minimized. One master RNG drives initialization,
//! tournaments, crossover and mutation; evaluation draws nothing from it, so
//! results do not depend on how many workers evaluate a generation.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost_model::ObjectiveVector;
use crate::genome::{GeneBounds, Genome, GENE_COUNT};

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    a.exec_time <= b.exec_time
        && a.energy <= b.energy
        && (a.exec_time < b.exec_time || a.energy < b.energy)
}

/// `a` dominates or equals `b`.
pub fn weakly_dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    a.exec_time <= b.exec_time && a.energy <= b.energy
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Genome,
    pub objectives: ObjectiveVector,
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    pub fn new(genome: Genome, objectives: ObjectiveVector) -> Self {
        Self {
            genome,
            objectives,
            rank: 0,
            crowding: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NsgaParams {
    pub generations: usize,
    pub population_size: usize,
    pub p_crossover: f64,
    /// Per-gene probability.
    pub p_mutation: f64,
    pub seed: u64,
}

impl Default for NsgaParams {
    fn default() -> Self {
        Self {
            generations: 250,
            population_size: 100,
            p_crossover: 0.9,
            p_mutation: 1.0 / GENE_COUNT as f64,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum MoeaError {
    #[error("invalid NSGA-II parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate normalization bounds for {objective}: min {min}, max {max}")]
    DegenerateBounds {
        objective: &'static str,
        min: f64,
        max: f64,
    },
}

impl NsgaParams {
    pub fn validate(&self) -> Result<(), MoeaError> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(MoeaError::InvalidParams(format!(
                    "{name} = {p} not in [0, 1]"
                )))
            }
        };
        prob("p_crossover", self.p_crossover)?;
        prob("p_mutation", self.p_mutation)?;
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(MoeaError::InvalidParams(format!(
                "population_size = {} must be even and >= 2",
                self.population_size
            )));
        }
        Ok(())
    }
}

/// Splits objective vectors into successive non-dominated fronts (indices).
pub fn nondominated_fronts(points: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for p in 0..n {
        for q in p + 1..n {
            if dominates(&points[p], &points[q]) {
                dominated_by_me[p].push(q);
                domination_count[q] += 1;
            } else if dominates(&points[q], &points[p]) {
                dominated_by_me[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Assigns `rank` to every individual and returns the fronts as indices.
pub fn fast_nondominated_sort(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let points: Vec<_> = pop.iter().map(|i| i.objectives).collect();
    let fronts = nondominated_fronts(&points);
    for (rank, front) in fronts.iter().enumerate() {
        for &i in front {
            pop[i].rank = rank;
        }
    }
    fronts
}

/// Crowding distance of each point of a (mutually non-dominating) front.
pub fn crowding_distances(points: &[ObjectiveVector]) -> Vec<f64> {
    let n = points.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for objective in 0..2 {
        let value = |i: usize| points[i].as_array()[objective];
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
        let (lo, hi) = (value(order[0]), value(order[n - 1]));
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range == 0.0 {
            continue;
        }
        for w in order.windows(3) {
            dist[w[1]] += (value(w[2]) - value(w[0])) / range;
        }
    }
    dist
}

pub fn crowding_distance(pop: &mut [Individual], front: &[usize]) {
    let points: Vec<_> = front.iter().map(|&i| pop[i].objectives).collect();
    for (&i, d) in front.iter().zip(crowding_distances(&points)) {
        pop[i].crowding = d;
    }
}

/// Crowded comparison: lower rank first, then larger crowding.
pub fn crowded_cmp(a: &Individual, b: &Individual) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then_with(|| b.crowding.total_cmp(&a.crowding))
}

/// Binary tournament with replacement; a full tie goes to the first draw.
pub fn tournament_select<R: Rng>(pop: &[Individual], rng: &mut R) -> usize {
    let a = rng.gen_range(0..pop.len());
    let b = rng.gen_range(0..pop.len());
    match crowded_cmp(&pop[a], &pop[b]) {
        Ordering::Greater => b,
        _ => a,
    }
}

/// Children swap the genes from position `cut` on.
pub fn crossover_at(p1: &Genome, p2: &Genome, cut: usize) -> (Genome, Genome) {
    let (mut c1, mut c2) = (*p1, *p2);
    c1.0[cut..].copy_from_slice(&p2.0[cut..]);
    c2.0[cut..].copy_from_slice(&p1.0[cut..]);
    (c1, c2)
}

pub fn single_point_crossover<R: Rng>(p1: &Genome, p2: &Genome, rng: &mut R) -> (Genome, Genome) {
    crossover_at(p1, p2, rng.gen_range(1..GENE_COUNT))
}

/// Resamples each gene uniformly within its bounds with probability `p_mutation`.
pub fn int_flip_mutation<R: Rng>(
    g: &Genome,
    p_mutation: f64,
    bounds: &GeneBounds,
    rng: &mut R,
) -> Genome {
    let mut out = *g;
    for (i, gene) in out.0.iter_mut().enumerate() {
        if rng.gen::<f64>() < p_mutation {
            *gene = rng.gen_range(bounds.lo[i]..=bounds.hi[i]);
        }
    }
    out
}

pub fn random_genome<R: Rng>(bounds: &GeneBounds, rng: &mut R) -> Genome {
    let mut g = Genome(bounds.lo);
    for (i, gene) in g.0.iter_mut().enumerate() {
        *gene = rng.gen_range(bounds.lo[i]..=bounds.hi[i]);
    }
    g
}

/// Maps a genome to its objectives. Must be pure.
pub trait Problem: Sync {
    type Error: std::error::Error + Send;

    fn evaluate(&self, genome: &Genome) -> Result<ObjectiveVector, Self::Error>;
}

#[derive(Debug, Error)]
pub enum EvolveError<E: std::error::Error + 'static> {
    #[error(transparent)]
    Params(#[from] MoeaError),
    #[error("evaluation of genome [{genome}] failed: {source}")]
    Evaluation {
        genome: Genome,
        #[source]
        source: E,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Summary of one generation's population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: ObjectiveVector,
    pub mean: ObjectiveVector,
    /// Distinct objective vectors of the rank-0 set, sorted.
    pub front: Vec<ObjectiveVector>,
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub population: Vec<Individual>,
    /// Rank-0 individuals of the final population, one per genome, sorted by objectives.
    pub front: Vec<Individual>,
    pub history: Vec<GenerationStats>,
    /// Evaluation requests issued, before any deduplication.
    pub evaluations: usize,
}

fn evaluate_all<P: Problem>(
    problem: &P,
    genomes: &[Genome],
    pool: &rayon::ThreadPool,
) -> Result<Vec<ObjectiveVector>, EvolveError<P::Error>> {
    let mut seen = HashSet::new();
    let unique: Vec<Genome> = genomes
        .iter()
        .copied()
        .filter(|g| seen.insert(*g))
        .collect();
    let results: Vec<_> = pool.install(|| unique.par_iter().map(|g| problem.evaluate(g)).collect());
    let mut by_genome = HashMap::with_capacity(unique.len());
    for (g, r) in unique.into_iter().zip(results) {
        match r {
            Ok(o) => {
                by_genome.insert(g, o);
            }
            Err(source) => return Err(EvolveError::Evaluation { genome: g, source }),
        }
    }
    Ok(genomes.iter().map(|g| by_genome[g]).collect())
}

fn rank_and_crowd(pop: &mut [Individual]) {
    for front in fast_nondominated_sort(pop) {
        crowding_distance(pop, &front);
    }
}

/// Elitist truncation of `candidates` to `n` by rank, then crowding.
fn select_best(mut candidates: Vec<Individual>, n: usize) -> Vec<Individual> {
    let fronts = fast_nondominated_sort(&mut candidates);
    let mut chosen = Vec::with_capacity(n);
    for front in fronts {
        if chosen.len() == n {
            break;
        }
        crowding_distance(&mut candidates, &front);
        if chosen.len() + front.len() <= n {
            chosen.extend(front);
        } else {
            let mut last = front;
            last.sort_by(|&a, &b| candidates[b].crowding.total_cmp(&candidates[a].crowding));
            last.truncate(n - chosen.len());
            last.sort_unstable();
            chosen.extend(last);
        }
    }
    chosen.into_iter().map(|i| candidates[i].clone()).collect()
}

/// (mu + lambda) survival. Copies of a genome already present only compete
/// for the slots left once every distinct genome has been ranked.
fn environmental_selection(combined: Vec<Individual>, n: usize) -> Vec<Individual> {
    let mut seen = HashSet::new();
    let (unique, copies): (Vec<_>, Vec<_>) = combined
        .into_iter()
        .partition(|ind| seen.insert(ind.genome));
    if unique.len() >= n {
        select_best(unique, n)
    } else {
        let missing = n - unique.len();
        let mut out = unique;
        out.extend(select_best(copies, missing));
        out
    }
}

fn stats(generation: usize, pop: &[Individual]) -> GenerationStats {
    let n = pop.len() as f64;
    let fold = |f: fn(&ObjectiveVector) -> f64| {
        let best = pop
            .iter()
            .map(|i| f(&i.objectives))
            .fold(f64::INFINITY, f64::min);
        let mean = pop.iter().map(|i| f(&i.objectives)).sum::<f64>() / n;
        (best, mean)
    };
    let (bt, mt) = fold(|o| o.exec_time);
    let (be, me) = fold(|o| o.energy);
    let mut front: Vec<ObjectiveVector> = pop
        .iter()
        .filter(|i| i.rank == 0)
        .map(|i| i.objectives)
        .collect();
    front.sort_by(cmp_objectives);
    front.dedup();
    GenerationStats {
        generation,
        best: ObjectiveVector::new(bt, be),
        mean: ObjectiveVector::new(mt, me),
        front,
    }
}

pub fn cmp_objectives(a: &ObjectiveVector, b: &ObjectiveVector) -> Ordering {
    a.exec_time
        .total_cmp(&b.exec_time)
        .then_with(|| a.energy.total_cmp(&b.energy))
}

/// Runs NSGA-II within `bounds`. Output is fully determined by
/// `params.seed`; `workers` only changes how fast evaluation runs.
pub fn evolve<P: Problem>(
    problem: &P,
    bounds: &GeneBounds,
    params: &NsgaParams,
    workers: usize,
) -> Result<Evolution, EvolveError<P::Error>> {
    params.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EvolveError::Pool(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.population_size;

    let genomes: Vec<Genome> = (0..n).map(|_| random_genome(bounds, &mut rng)).collect();
    let objectives = evaluate_all(problem, &genomes, &pool)?;
    let mut evaluations = genomes.len();
    let mut population: Vec<Individual> = genomes
        .into_iter()
        .zip(objectives)
        .map(|(g, o)| Individual::new(g, o))
        .collect();
    rank_and_crowd(&mut population);
    let mut history = vec![stats(0, &population)];

    for generation in 1..=params.generations {
        let mut offspring = Vec::with_capacity(n);
        while offspring.len() < n {
            let p1 = population[tournament_select(&population, &mut rng)].genome;
            let p2 = population[tournament_select(&population, &mut rng)].genome;
            let (c1, c2) = if rng.gen::<f64>() < params.p_crossover {
                single_point_crossover(&p1, &p2, &mut rng)
            } else {
                (p1, p2)
            };
            offspring.push(int_flip_mutation(&c1, params.p_mutation, bounds, &mut rng));
            offspring.push(int_flip_mutation(&c2, params.p_mutation, bounds, &mut rng));
        }
        let objectives = evaluate_all(problem, &offspring, &pool)?;
        evaluations += offspring.len();
        let mut combined = population;
        combined.extend(
            offspring
                .into_iter()
                .zip(objectives)
                .map(|(g, o)| Individual::new(g, o)),
        );
        population = environmental_selection(combined, n);
        rank_and_crowd(&mut population);
        history.push(stats(generation, &population));
    }

    let front = front_of(&population);
    Ok(Evolution {
        population,
        front,
        history,
        evaluations,
    })
}

/// Rank-0 members, deduplicated by genome and sorted by objectives then genome.
fn front_of(pop: &[Individual]) -> Vec<Individual> {
    let mut seen = HashSet::new();
    let mut front: Vec<Individual> = pop
        .iter()
        .filter(|i| i.rank == 0 && seen.insert(i.genome))
        .cloned()
        .collect();
    front.sort_by(|a, b| {
        cmp_objectives(&a.objectives, &b.objectives).then_with(|| a.genome.cmp(&b.genome))
    });
    front
}

/// Indices of the non-dominated points, ties kept, in input order.
///
/// Sort-and-sweep: after ordering by `(exec_time, energy)`, a point survives
/// iff it has the smallest energy among equal-time points and that energy
/// is below every strictly faster point's.
pub fn nondominated_indices(points: &[ObjectiveVector]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| cmp_objectives(&points[a], &points[b]));
    let mut keep = Vec::new();
    let mut best_energy = f64::INFINITY;
    let mut i = 0;
    while i < order.len() {
        let t = points[order[i]].exec_time;
        let group_min = points[order[i]].energy;
        let mut j = i;
        while j < order.len() && points[order[j]].exec_time == t {
            if points[order[j]].energy == group_min && group_min < best_energy {
                keep.push(order[j]);
            }
            j += 1;
        }
        best_energy = best_energy.min(group_min);
        i = j;
    }
    keep.sort_unstable();
    keep
}

/// Area dominated by `points` and bounded by `reference`.
pub fn hypervolume_2d(points: &[ObjectiveVector], reference: &ObjectiveVector) -> f64 {
    let mut inside: Vec<ObjectiveVector> = points
        .iter()
        .copied()
        .filter(|p| p.exec_time < reference.exec_time && p.energy < reference.energy)
        .collect();
    if inside.len() < points.len() {
        warn!(
            "hypervolume: {} point(s) do not dominate the reference point and were ignored",
            points.len() - inside.len()
        );
    }
    if inside.is_empty() {
        warn!("hypervolume: empty point set, indicator is 0");
        return 0.0;
    }
    inside.sort_by(cmp_objectives);
    let mut area = 0.0;
    let mut ceiling = reference.energy;
    for p in inside {
        if p.energy < ceiling {
            area += (reference.exec_time - p.exec_time) * (ceiling - p.energy);
            ceiling = p.energy;
        }
    }
    area
}

/// Min/max per objective used for normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub min: ObjectiveVector,
    pub max: ObjectiveVector,
}

impl NormBounds {
    /// Tightest bounds enclosing every given point; `None` if there are none.
    pub fn enclosing<'a>(points: impl IntoIterator<Item = &'a ObjectiveVector>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let (mut min, mut max) = (first, first);
        for p in it {
            min.exec_time = min.exec_time.min(p.exec_time);
            min.energy = min.energy.min(p.energy);
            max.exec_time = max.exec_time.max(p.exec_time);
            max.energy = max.energy.max(p.energy);
        }
        Some(Self { min, max })
    }

    pub fn validate(&self) -> Result<(), MoeaError> {
        for (objective, min, max) in [
            ("exec_time", self.min.exec_time, self.max.exec_time),
            ("energy", self.min.energy, self.max.energy),
        ] {
            if !(min.is_finite() && max.is_finite() && min < max) {
                return Err(MoeaError::DegenerateBounds {
                    objective,
                    min,
                    max,
                });
            }
        }
        Ok(())
    }

    pub fn normalize(&self, p: &ObjectiveVector) -> ObjectiveVector {
        ObjectiveVector::new(
            (p.exec_time - self.min.exec_time) / (self.max.exec_time - self.min.exec_time),
            (p.energy - self.min.energy) / (self.max.energy - self.min.energy),
        )
    }
}

pub const DEFAULT_HV_REFERENCE: ObjectiveVector = ObjectiveVector {
    exec_time: 1.1,
    energy: 1.1,
};

/// Hypervolume difference to an empty reference set: `0 - I_H` of the
/// normalized front. Smaller is better.
pub fn hypervolume_minus(
    front: &[ObjectiveVector],
    reference: &ObjectiveVector,
    bounds: &NormBounds,
) -> Result<f64, MoeaError> {
    bounds.validate()?;
    let normalized: Vec<_> = front.iter().map(|p| bounds.normalize(p)).collect();
    Ok(0.0 - hypervolume_2d(&normalized, reference))
}
