//! Seed-deterministic classical QUBO samplers.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{count_satisfied, Assignment, CnfFormula};
use crate::qubo::{brute_force_min, Adjacency, QuboMatrix};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Brute,
    Tabu,
    Sa,
    Random,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(SolverKind::Brute),
            "tabu" => Ok(SolverKind::Tabu),
            "sa" => Ok(SolverKind::Sa),
            "random" => Ok(SolverKind::Random),
            other => Err(Error::invalid(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub samples: usize,
    pub seed: u64,
    /// Tabu iterations per run; defaults to `10_000 · dim`.
    pub iteration_limit: Option<u64>,
    pub time_limit_ms: Option<u64>,
    /// Defaults to `max(10, dim / 10)`.
    pub tabu_tenure: Option<usize>,
    pub sa_beta_start: f64,
    pub sa_beta_end: f64,
    pub sa_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kind: SolverKind::Tabu,
            samples: 1,
            seed: 0,
            iteration_limit: None,
            time_limit_ms: None,
            tabu_tenure: None,
            sa_beta_start: 0.1,
            sa_beta_end: 10.0,
            sa_sweeps: 1000,
        }
    }
}

impl SolverConfig {
    pub fn tabu(samples: usize, iteration_limit: u64) -> Self {
        SolverConfig {
            kind: SolverKind::Tabu,
            samples,
            iteration_limit: Some(iteration_limit),
            ..Default::default()
        }
    }

    pub fn sa(samples: usize, sweeps: usize) -> Self {
        SolverConfig {
            kind: SolverKind::Sa,
            samples,
            sa_sweeps: sweeps,
            ..Default::default()
        }
    }

    pub fn brute(samples: usize) -> Self {
        SolverConfig {
            kind: SolverKind::Brute,
            samples,
            ..Default::default()
        }
    }

    pub fn random(samples: usize) -> Self {
        SolverConfig {
            kind: SolverKind::Random,
            samples,
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("samples must be at least 1"));
        }
        if self.time_limit_ms == Some(0) {
            return Err(Error::invalid("time limit must be positive"));
        }
        if self.kind == SolverKind::Sa {
            check_schedule(self.sa_beta_start, self.sa_beta_end)?;
        }
        Ok(())
    }

    pub fn default_tenure(dim: usize) -> usize {
        (dim / 10).max(10)
    }

    pub fn default_iterations(dim: usize) -> u64 {
        10_000 * dim as u64
    }

    /// Seed used by run `run`.
    pub fn run_seed(&self, run: usize) -> u64 {
        seed::mix(self.seed, run as u64)
    }
}

fn check_schedule(beta_start: f64, beta_end: f64) -> Result<()> {
    if !(beta_start > 0.0 && beta_start.is_finite() && beta_end.is_finite() && beta_start < beta_end) {
        return Err(Error::invalid(format!(
            "annealing schedule needs 0 < beta_start < beta_end, got {beta_start}..{beta_end}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    #[serde(with = "bitstring")]
    pub bits: Vec<bool>,
    pub energy: i64,
    pub run_index: usize,
    pub elapsed_ms: u64,
    pub seed_used: u64,
}

/// Bit vectors as `"0110…"` strings.
pub mod bitstring {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn to_string(bits: &[bool]) -> String {
        bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_str(s: &str) -> Option<Vec<bool>> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect()
    }

    pub fn serialize<S: Serializer>(bits: &[bool], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(bits))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let s = String::deserialize(d)?;
        from_str(&s).ok_or_else(|| serde::de::Error::custom("bit string must contain only 0 and 1"))
    }
}

/// Runs `config.samples` independent runs; run `r` is seeded with
/// `config.run_seed(r)`. Results are ordered by run index.
pub fn solve(q: &QuboMatrix, config: &SolverConfig) -> Result<Vec<SolveResult>> {
    config.validate()?;
    let dim = q.dim();
    match config.kind {
        SolverKind::Brute => {
            let start = Instant::now();
            let (energy, bits) = brute_force_min(q)?;
            let elapsed_ms = start.elapsed().as_millis() as u64;
            Ok((0..config.samples)
                .map(|r| SolveResult {
                    bits: bits.clone(),
                    energy,
                    run_index: r,
                    elapsed_ms,
                    seed_used: config.run_seed(r),
                })
                .collect())
        }
        SolverKind::Random => Ok((0..config.samples)
            .map(|r| {
                let s = config.run_seed(r);
                let mut rng = seed::rng(s);
                let bits: Vec<bool> = (0..dim).map(|_| rng.gen()).collect();
                SolveResult {
                    energy: q.energy_unchecked(&bits),
                    bits,
                    run_index: r,
                    elapsed_ms: 0,
                    seed_used: s,
                }
            })
            .collect()),
        SolverKind::Tabu | SolverKind::Sa => {
            let adj = q.adjacency();
            let time_limit = config.time_limit_ms.map(Duration::from_millis);
            (0..config.samples)
                .into_par_iter()
                .map(|r| {
                    let s = config.run_seed(r);
                    let mut res = match config.kind {
                        SolverKind::Tabu => tabu_on(
                            &adj,
                            config
                                .iteration_limit
                                .unwrap_or_else(|| SolverConfig::default_iterations(dim)),
                            config
                                .tabu_tenure
                                .unwrap_or_else(|| SolverConfig::default_tenure(dim)),
                            s,
                            time_limit,
                        ),
                        _ => sa_on(&adj, config.sa_sweeps, config.sa_beta_start, config.sa_beta_end, s, time_limit)?,
                    };
                    res.run_index = r;
                    Ok(res)
                })
                .collect()
        }
    }
}

/// Current vector with cached local fields; flip deltas are exact.
struct FlipState<'a> {
    adj: &'a Adjacency,
    bits: Vec<bool>,
    field: Vec<i64>,
    energy: i64,
}

impl<'a> FlipState<'a> {
    fn new(adj: &'a Adjacency, bits: Vec<bool>) -> Self {
        let field = adj.local_fields(&bits);
        let energy = (0..bits.len())
            .filter(|&i| bits[i])
            .map(|i| {
                adj.diag(i)
                    + adj
                        .neighbors(i)
                        .iter()
                        .filter(|&&(j, _)| (j as usize) > i && bits[j as usize])
                        .map(|&(_, c)| c)
                        .sum::<i64>()
            })
            .sum();
        FlipState {
            adj,
            bits,
            field,
            energy,
        }
    }

    #[inline]
    fn delta(&self, i: usize) -> i64 {
        if self.bits[i] {
            -self.field[i]
        } else {
            self.field[i]
        }
    }

    fn flip(&mut self, i: usize) {
        let d = self.delta(i);
        let sign = if self.bits[i] { -1 } else { 1 };
        self.bits[i] = !self.bits[i];
        self.energy += d;
        for &(j, c) in self.adj.neighbors(i) {
            self.field[j as usize] += sign * c;
        }
    }
}

fn random_bits<R: Rng>(n: usize, rng: &mut R) -> Vec<bool> {
    (0..n).map(|_| rng.gen()).collect()
}

/// Single-flip tabu search with aspiration.
///
/// Each iteration flips the non-tabu bit with the lowest energy delta
/// (random among ties); a tabu bit is eligible if flipping it beats the best
/// energy found so far. Flipped bits stay tabu for `tenure` iterations
/// (capped at `dim − 1`).
pub fn tabu_search(q: &QuboMatrix, iteration_limit: u64, tenure: usize, seed: u64, time_limit: Option<Duration>) -> SolveResult {
    tabu_on(&q.adjacency(), iteration_limit, tenure, seed, time_limit)
}

fn tabu_on(adj: &Adjacency, iteration_limit: u64, tenure: usize, seed: u64, time_limit: Option<Duration>) -> SolveResult {
    let start = Instant::now();
    let n = adj.dim();
    let mut rng = seed::rng(seed);
    let mut state = FlipState::new(adj, random_bits(n, &mut rng));
    let mut best_energy = state.energy;
    let mut best_bits = state.bits.clone();
    let tenure = tenure.min(n.saturating_sub(1)) as u64;
    let mut tabu_until = vec![0u64; n];

    for it in 0..iteration_limit {
        if let Some(limit) = time_limit {
            if it % 256 == 0 && start.elapsed() >= limit {
                break;
            }
        }
        let mut chosen = usize::MAX;
        let mut chosen_delta = i64::MAX;
        let mut ties = 0u32;
        for i in 0..n {
            let d = state.delta(i);
            if d > chosen_delta {
                continue;
            }
            if tabu_until[i] > it && state.energy + d >= best_energy {
                continue;
            }
            if d < chosen_delta {
                chosen = i;
                chosen_delta = d;
                ties = 1;
            } else {
                ties += 1;
                if rng.gen_range(0..ties) == 0 {
                    chosen = i;
                }
            }
        }
        if chosen == usize::MAX {
            continue;
        }
        state.flip(chosen);
        tabu_until[chosen] = it + 1 + tenure;
        if state.energy < best_energy {
            best_energy = state.energy;
            best_bits.copy_from_slice(&state.bits);
        }
    }
    SolveResult {
        bits: best_bits,
        energy: best_energy,
        run_index: 0,
        elapsed_ms: start.elapsed().as_millis() as u64,
        seed_used: seed,
    }
}

/// Metropolis single-flip annealing over `sweeps` full passes with a
/// geometric inverse-temperature schedule; returns the best vector seen.
pub fn simulated_annealing(q: &QuboMatrix, sweeps: usize, beta_start: f64, beta_end: f64, seed: u64) -> Result<SolveResult> {
    sa_on(&q.adjacency(), sweeps, beta_start, beta_end, seed, None)
}

fn sa_on(adj: &Adjacency, sweeps: usize, beta_start: f64, beta_end: f64, seed: u64, time_limit: Option<Duration>) -> Result<SolveResult> {
    check_schedule(beta_start, beta_end)?;
    let start = Instant::now();
    let n = adj.dim();
    let mut rng = seed::rng(seed);
    let mut state = FlipState::new(adj, random_bits(n, &mut rng));
    let mut best_energy = state.energy;
    let mut best_bits = state.bits.clone();
    let ratio = if sweeps > 1 {
        (beta_end / beta_start).powf(1.0 / (sweeps - 1) as f64)
    } else {
        1.0
    };
    let mut beta = beta_start;
    for _ in 0..sweeps {
        if let Some(limit) = time_limit {
            if start.elapsed() >= limit {
                break;
            }
        }
        for i in 0..n {
            let d = state.delta(i);
            if d <= 0 || rng.gen::<f64>() < (-beta * d as f64).exp() {
                state.flip(i);
                if state.energy < best_energy {
                    best_energy = state.energy;
                    best_bits.copy_from_slice(&state.bits);
                }
            }
        }
        beta *= ratio;
    }
    Ok(SolveResult {
        bits: best_bits,
        energy: best_energy,
        run_index: 0,
        elapsed_ms: start.elapsed().as_millis() as u64,
        seed_used: seed,
    })
}

/// `k` uniform random assignments scored by satisfied-clause count.
pub fn random_baseline(formula: &CnfFormula, k: usize, seed: u64) -> Result<Vec<(Assignment, usize)>> {
    if k == 0 {
        return Err(Error::invalid("baseline needs at least one sample"));
    }
    let mut rng = seed::rng(seed);
    (0..k)
        .map(|_| {
            let a = Assignment::random(formula.num_vars(), &mut rng);
            let c = count_satisfied(formula, &a)?;
            Ok((a, c))
        })
        .collect()
}
