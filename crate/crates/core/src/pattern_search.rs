//! Exhaustive searches over small clause patterns.
//!
//! The 3×3 search enumerates `(α1, α2, α3, α12, α13, α23) ∈ S^6`; the 4×4
//! search enumerates the ten coefficients of a pattern with one auxiliary
//! slot. Both iterate in lexicographic order over the value-set ordering
//! (diagonal coefficients first, then off-diagonal in row-major order), and
//! return matches in that order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formula::{canonical_satisfied, CnfFormula};
use crate::solvers::{solve, SolverConfig};
use crate::transform::{all_triples, assemble, decode, verify_pattern, ClausePattern, Criterion, Triple, TransformSpec};
use crate::seed;

/// Guard on the number of 4×4 candidates.
pub const MAX_4X4_CANDIDATES: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueSet(Vec<i64>);

impl ValueSet {
    pub fn new(values: Vec<i64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("value set must not be empty"));
        }
        for (i, v) in values.iter().enumerate() {
            if values[..i].contains(v) {
                return Err(Error::invalid(format!("value {v} repeated in value set")));
            }
        }
        Ok(ValueSet(values))
    }

    /// Parses `"-1,0,1"`.
    pub fn parse(text: &str) -> Result<Self> {
        let values = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::invalid(format!("invalid value '{}'", s.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        ValueSet::new(values)
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Coefficient slots in enumeration order for each pattern size.
const SLOTS_3: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
const SLOTS_4: [(usize, usize); 10] = [
    (0, 0),
    (1, 1),
    (2, 2),
    (3, 3),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 2),
    (1, 3),
    (2, 3),
];

/// For each full slot vector (aux last), which coefficient slots are active.
/// `active[v]` is a bitmask over the coefficient list.
fn activity_masks(slots: &[(usize, usize)], width: usize) -> Vec<u16> {
    (0..1usize << width)
        .map(|v| {
            let bit = |s: usize| (v >> (width - 1 - s)) & 1 == 1;
            slots
                .iter()
                .enumerate()
                .filter(|(_, &(r, c))| bit(r) && bit(c))
                .fold(0u16, |m, (idx, _)| m | (1 << idx))
        })
        .collect()
}

/// Acceptance predicate on the 8 triple energies.
fn accepts(energies: &[i64; 8], satisfied: &[bool; 8], criterion: Criterion) -> bool {
    let min = *energies.iter().min().expect("8 entries");
    let mut sat_at_min = 0;
    for c in 0..8 {
        if energies[c] == min {
            if satisfied[c] {
                sat_at_min += 1;
            } else {
                return false;
            }
        }
    }
    match criterion {
        Criterion::Exact => sat_at_min == 7,
        Criterion::Approx => sat_at_min == 6,
    }
}

fn satisfied_table(clause_type: u8) -> [bool; 8] {
    all_triples().map(|t| canonical_satisfied(clause_type, t))
}

/// Decodes candidate number `index` into coefficient values, most
/// significant digit first.
fn digits(index: u64, base: u64, out: &mut [i64], values: &[i64]) {
    let mut rest = index;
    for slot in out.iter_mut().rev() {
        *slot = values[(rest % base) as usize];
        rest /= base;
    }
}

fn build_pattern(dim: usize, slots: &[(usize, usize)], coeffs: &[i64]) -> ClausePattern {
    let entries: Vec<(usize, usize, i64)> = slots
        .iter()
        .zip(coeffs)
        .map(|(&(r, c), &v)| (r, c, v))
        .collect();
    ClausePattern::from_entries(dim, &entries).expect("slots within dim")
}

fn search(dim: usize, values: &ValueSet, clause_type: u8, criterion: Criterion) -> Vec<ClausePattern> {
    let slots: &[(usize, usize)] = if dim == 3 { &SLOTS_3 } else { &SLOTS_4 };
    let masks = activity_masks(slots, dim);
    let satisfied = satisfied_table(clause_type);
    let base = values.len() as u64;
    let total = base.pow(slots.len() as u32);
    let chunk = base.pow(slots.len().saturating_sub(3) as u32).max(1);
    let chunks = total.div_ceil(chunk);

    let per_chunk: Vec<Vec<ClausePattern>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut found = Vec::new();
            let mut coeffs = vec![0i64; slots.len()];
            for index in ci * chunk..((ci + 1) * chunk).min(total) {
                digits(index, base, &mut coeffs, values.values());
                let energy_of = |v: usize| -> i64 {
                    let mask = masks[v];
                    coeffs
                        .iter()
                        .enumerate()
                        .filter(|(s, _)| mask >> s & 1 == 1)
                        .map(|(_, &c)| c)
                        .sum()
                };
                let energies: [i64; 8] = std::array::from_fn(|t| {
                    if dim == 3 {
                        energy_of(t)
                    } else {
                        energy_of(t << 1).min(energy_of((t << 1) | 1))
                    }
                });
                if accepts(&energies, &satisfied, criterion) {
                    found.push(build_pattern(dim, slots, &coeffs));
                }
            }
            found
        })
        .collect();
    per_chunk.into_iter().flatten().collect()
}

/// All 3×3 patterns over `values` meeting `criterion` for `clause_type`.
pub fn search_3x3(values: &ValueSet, clause_type: u8, criterion: Criterion) -> Vec<ClausePattern> {
    search(3, values, clause_type, criterion)
}

/// All 4×4 patterns over `values` that are exact for `clause_type`, with the
/// auxiliary slot minimized out.
pub fn search_4x4(values: &ValueSet, clause_type: u8) -> Result<Vec<ClausePattern>> {
    let total = (values.len() as u64).checked_pow(10).unwrap_or(u64::MAX);
    if total > MAX_4X4_CANDIDATES {
        return Err(Error::TooLarge {
            what: "4x4 candidate count",
            actual: total,
            limit: MAX_4X4_CANDIDATES,
        });
    }
    Ok(search(4, values, clause_type, Criterion::Exact))
}

/// For each of the 7 satisfying triples, the index of the first pattern in
/// which it attains the minimum.
pub fn coverage_check(patterns: &[ClausePattern], clause_type: u8) -> (bool, Vec<(Triple, Option<usize>)>) {
    let reports: Vec<_> = patterns
        .iter()
        .map(|p| verify_pattern(p, clause_type, Criterion::Approx))
        .collect();
    let witnesses: Vec<(Triple, Option<usize>)> = all_triples()
        .into_iter()
        .filter(|&t| canonical_satisfied(clause_type, t))
        .map(|t| (t, reports.iter().position(|r| r.attains_min(t))))
        .collect();
    let covered = witnesses.iter().all(|(_, w)| w.is_some());
    (covered, witnesses)
}

/// One pattern index per clause type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CombinationChoice {
    pub indices: [usize; 4],
    pub score: usize,
}

/// Cartesian product of the per-type lists, type 0 varying slowest.
pub fn enumerate_combinations(per_type: &[Vec<ClausePattern>; 4]) -> Result<Vec<(TransformSpec, [usize; 4])>> {
    if let Some(t) = per_type.iter().position(|l| l.is_empty()) {
        return Err(Error::invalid(format!("no patterns for clause type {t}")));
    }
    let dim = per_type[0][0].dim();
    if per_type.iter().flatten().any(|p| p.dim() != dim) {
        return Err(Error::invalid("all patterns must share a dimension"));
    }
    let mut out = Vec::with_capacity(per_type.iter().map(Vec::len).product());
    for a in 0..per_type[0].len() {
        for b in 0..per_type[1].len() {
            for c in 0..per_type[2].len() {
                for d in 0..per_type[3].len() {
                    let idx = [a, b, c, d];
                    let patterns = std::array::from_fn(|t| per_type[t][idx[t]]);
                    let spec = TransformSpec::new(format!("combo_{a}{b}{c}{d}"), patterns)?;
                    out.push((spec, idx));
                }
            }
        }
    }
    Ok(out)
}

/// Scores each spec on the calibration formula with the configured solver
/// (seeded per spec index) and returns the best index; ties go to the
/// lowest index.
pub fn select_best_combination(formula: &CnfFormula, specs: &[TransformSpec], solver: &SolverConfig, seed: u64) -> Result<(usize, Vec<usize>)> {
    if specs.is_empty() {
        return Err(Error::invalid("no specs to select from"));
    }
    let scores = specs
        .par_iter()
        .enumerate()
        .map(|(idx, spec)| score_spec(formula, spec, solver, seed::mix(seed, idx as u64)))
        .collect::<Result<Vec<usize>>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok((best, scores))
}

fn score_spec(formula: &CnfFormula, spec: &TransformSpec, solver: &SolverConfig, seed: u64) -> Result<usize> {
    let (q, layout) = assemble(formula, spec);
    let config = SolverConfig { seed, ..solver.clone() };
    let mut best = 0;
    for r in solve(&q, &config)? {
        let a = decode(&r.bits, &layout)?;
        best = best.max(formula.count_satisfied(&a)?);
    }
    Ok(best)
}
