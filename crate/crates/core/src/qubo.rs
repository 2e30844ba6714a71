//! Sparse upper-triangular integer QUBO matrices.
//!
//! Energy is `Σ_i Q_ii x_i + Σ_{i<j} Q_ij x_i x_j`. Coefficients are `i64`
//! throughout so minima compare exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::Assignment;
use crate::seed;

/// Largest dimension `brute_force_min` will enumerate.
pub const MAX_BRUTE_FORCE_DIM: usize = 25;
/// Largest aux count for exhaustive aux completion in `energy_min_aux`.
pub const MAX_EXHAUSTIVE_AUX: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QuboMatrix {
    dim: usize,
    entries: BTreeMap<(usize, usize), i64>,
}

impl QuboMatrix {
    pub fn new(dim: usize) -> Self {
        QuboMatrix {
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// Sums `(i, j, coeff)` triples into a matrix; `(i, j)` and `(j, i)`
    /// address the same coefficient and entries that cancel are dropped.
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, i64)>,
    {
        let mut q = QuboMatrix::new(dim);
        for (i, j, c) in entries {
            q.add(i, j, c)?;
        }
        Ok(q)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.entries.get(&key).copied().unwrap_or(0)
    }

    pub fn add(&mut self, i: usize, j: usize, coeff: i64) -> Result<()> {
        let key = if i <= j { (i, j) } else { (j, i) };
        if key.1 >= self.dim {
            return Err(Error::invalid(format!(
                "index ({i}, {j}) outside a {0}x{0} matrix",
                self.dim
            )));
        }
        if coeff == 0 {
            return Ok(());
        }
        let slot = self.entries.entry(key).or_insert(0);
        *slot += coeff;
        if *slot == 0 {
            self.entries.remove(&key);
        }
        Ok(())
    }

    fn remove(&mut self, key: (usize, usize)) {
        self.entries.remove(&key);
    }

    /// Stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        self.entries.iter().map(|(&(i, j), &c)| (i, j, c))
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        self.entries().filter(|&(i, j, _)| i < j)
    }

    pub fn diagonal(&self) -> Vec<i64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn nnz_offdiag(&self) -> usize {
        self.off_diagonal().count()
    }

    pub fn energy(&self, bits: &[bool]) -> Result<i64> {
        if bits.len() != self.dim {
            return Err(Error::invalid(format!(
                "bit vector has length {}, matrix dimension is {}",
                bits.len(),
                self.dim
            )));
        }
        Ok(self.energy_unchecked(bits))
    }

    pub(crate) fn energy_unchecked(&self, bits: &[bool]) -> i64 {
        self.entries
            .iter()
            .filter(|(&(i, j), _)| bits[i] && bits[j])
            .map(|(_, &c)| c)
            .sum()
    }

    /// Symmetric adjacency view for incremental evaluation.
    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self)
    }
}

/// Row-compressed symmetric view: per variable, its diagonal coefficient
/// and the off-diagonal couplings to every other variable.
#[derive(Debug, Clone)]
pub struct Adjacency {
    diag: Vec<i64>,
    offsets: Vec<usize>,
    neighbors: Vec<(u32, i64)>,
}

impl Adjacency {
    fn new(q: &QuboMatrix) -> Self {
        let n = q.dim();
        let mut diag = vec![0i64; n];
        let mut degree = vec![0usize; n];
        for (i, j, c) in q.entries() {
            if i == j {
                diag[i] = c;
            } else {
                degree[i] += 1;
                degree[j] += 1;
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![(0u32, 0i64); offsets[n]];
        for (i, j, c) in q.off_diagonal() {
            neighbors[fill[i]] = (j as u32, c);
            fill[i] += 1;
            neighbors[fill[j]] = (i as u32, c);
            fill[j] += 1;
        }
        Adjacency {
            diag,
            offsets,
            neighbors,
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self, i: usize) -> i64 {
        self.diag[i]
    }

    pub fn neighbors(&self, i: usize) -> &[(u32, i64)] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// `Q_ii + Σ_{j≠i} Q_ij x_j` for every `i`.
    pub fn local_fields(&self, bits: &[bool]) -> Vec<i64> {
        (0..self.dim())
            .map(|i| {
                self.diag[i]
                    + self
                        .neighbors(i)
                        .iter()
                        .filter(|(j, _)| bits[*j as usize])
                        .map(|&(_, c)| c)
                        .sum::<i64>()
            })
            .collect()
    }
}

/// Maps matrix indices beyond the problem variables to the clauses whose
/// auxiliary variable they hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableLayout {
    pub num_problem_vars: usize,
    /// `aux_owners[t]` is the clause served by matrix index `n + t`.
    pub aux_owners: Vec<usize>,
}

impl VariableLayout {
    pub fn plain(n: usize) -> Self {
        VariableLayout {
            num_problem_vars: n,
            aux_owners: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.num_problem_vars + self.aux_owners.len()
    }

    pub fn num_aux(&self) -> usize {
        self.aux_owners.len()
    }
}

pub fn energy(q: &QuboMatrix, bits: &[bool]) -> Result<i64> {
    q.energy(bits)
}

/// Energy of a problem-variable assignment with the auxiliary variables
/// minimized out.
pub fn energy_min_aux(q: &QuboMatrix, layout: &VariableLayout, assignment: &Assignment) -> Result<i64> {
    let n = layout.num_problem_vars;
    if layout.dim() != q.dim() {
        return Err(Error::invalid(format!(
            "layout dimension {} does not match matrix dimension {}",
            layout.dim(),
            q.dim()
        )));
    }
    if assignment.len() != n {
        return Err(Error::invalid(format!(
            "assignment has {} bits, layout has {n} problem variables",
            assignment.len()
        )));
    }
    let x = assignment.bits();
    let num_aux = layout.num_aux();
    let mut base = 0i64;
    let mut aux_field = vec![0i64; num_aux];
    let mut coupled = false;
    for (i, j, c) in q.entries() {
        match (i < n, j < n) {
            (true, true) => {
                if x[i] && x[j] {
                    base += c;
                }
            }
            (true, false) => {
                if x[i] {
                    aux_field[j - n] += c;
                }
            }
            (false, _) if i == j => aux_field[i - n] += c,
            (false, _) => coupled = true,
        }
    }
    if !coupled {
        return Ok(base + aux_field.iter().map(|&c| c.min(0)).sum::<i64>());
    }
    exhaustive_min_aux(q, n, num_aux, x)
}

fn exhaustive_min_aux(q: &QuboMatrix, n: usize, num_aux: usize, x: &[bool]) -> Result<i64> {
    if num_aux > MAX_EXHAUSTIVE_AUX {
        return Err(Error::TooLarge {
            what: "coupled auxiliary variable count",
            actual: num_aux as u64,
            limit: MAX_EXHAUSTIVE_AUX as u64,
        });
    }
    let mut bits = x.to_vec();
    bits.resize(n + num_aux, false);
    let mut best = i64::MAX;
    for code in 0u64..(1u64 << num_aux) {
        for t in 0..num_aux {
            bits[n + t] = code >> t & 1 == 1;
        }
        best = best.min(q.energy_unchecked(&bits));
    }
    Ok(best)
}

/// Exact minimum over all `2^dim` vectors; the witness is the minimizer of
/// least binary value (index 0 least significant).
pub fn brute_force_min(q: &QuboMatrix) -> Result<(i64, Vec<bool>)> {
    let n = q.dim();
    if n > MAX_BRUTE_FORCE_DIM {
        return Err(Error::TooLarge {
            what: "matrix dimension",
            actual: n as u64,
            limit: MAX_BRUTE_FORCE_DIM as u64,
        });
    }
    let adj = q.adjacency();
    let mut bits = vec![false; n];
    let mut field: Vec<i64> = (0..n).map(|i| adj.diag(i)).collect();
    let mut code = 0u64;
    let mut e = 0i64;
    let mut best = (0i64, 0u64);
    for step in 1u64..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        let sign = if bits[v] { -1 } else { 1 };
        e += sign * field[v];
        bits[v] = !bits[v];
        code ^= 1 << v;
        for &(j, c) in adj.neighbors(v) {
            field[j as usize] += sign * c;
        }
        if e < best.0 || (e == best.0 && code < best.1) {
            best = (e, code);
        }
    }
    Ok((best.0, (0..n).map(|i| best.1 >> i & 1 == 1).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PruneStrategy {
    Min,
    Random,
}

impl PruneStrategy {
    pub fn label(self) -> &'static str {
        match self {
            PruneStrategy::Min => "min",
            PruneStrategy::Random => "random",
        }
    }
}

impl std::str::FromStr for PruneStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(PruneStrategy::Min),
            "random" => Ok(PruneStrategy::Random),
            other => Err(Error::invalid(format!("unknown prune strategy '{other}'"))),
        }
    }
}

fn check_prune_count(q: &QuboMatrix, count: usize) -> Result<usize> {
    let nnz = q.nnz_offdiag();
    if count > nnz {
        return Err(Error::invalid(format!(
            "cannot prune {count} entries, only {nnz} off-diagonal entries stored"
        )));
    }
    Ok(nnz)
}

/// Removes the `count` off-diagonal entries of smallest signed value
/// (ties by ascending `(i, j)`).
pub fn prune_min(q: &QuboMatrix, count: usize) -> Result<QuboMatrix> {
    check_prune_count(q, count)?;
    let mut offdiag: Vec<(i64, usize, usize)> = q.off_diagonal().map(|(i, j, c)| (c, i, j)).collect();
    offdiag.sort_unstable();
    let mut out = q.clone();
    for &(_, i, j) in &offdiag[..count] {
        out.remove((i, j));
    }
    Ok(out)
}

/// Removes a seeded uniform sample of `count` off-diagonal entries.
pub fn prune_random(q: &QuboMatrix, count: usize, seed: u64) -> Result<QuboMatrix> {
    let nnz = check_prune_count(q, count)?;
    let keys: Vec<(usize, usize)> = q.off_diagonal().map(|(i, j, _)| (i, j)).collect();
    let mut rng = seed::rng(seed);
    let mut out = q.clone();
    for idx in index::sample(&mut rng, nnz, count) {
        out.remove(keys[idx]);
    }
    Ok(out)
}

pub fn prune(q: &QuboMatrix, strategy: PruneStrategy, count: usize, seed: u64) -> Result<QuboMatrix> {
    match strategy {
        PruneStrategy::Min => prune_min(q, count),
        PruneStrategy::Random => prune_random(q, count, seed),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneStage {
    pub stage: usize,
    pub matrix: QuboMatrix,
    pub removed_cumulative: usize,
}

pub const PRUNE_STAGES: usize = 10;

/// Cumulative removal target after `stage` tenths: `round(stage·N/10)`,
/// halves rounded up.
pub fn cumulative_target(nnz_initial: usize, stage: usize) -> usize {
    (2 * stage * nnz_initial + PRUNE_STAGES) / (2 * PRUNE_STAGES)
}

/// Stages 0..=10, each removing another tenth of the initial off-diagonal
/// entries from the previous stage.
pub fn pruning_schedule(q: &QuboMatrix, strategy: PruneStrategy, seed: u64) -> Vec<PruneStage> {
    let nnz = q.nnz_offdiag();
    let mut stages = Vec::with_capacity(PRUNE_STAGES + 1);
    stages.push(PruneStage {
        stage: 0,
        matrix: q.clone(),
        removed_cumulative: 0,
    });
    for k in 1..=PRUNE_STAGES {
        let prev = &stages[k - 1];
        let target = cumulative_target(nnz, k);
        let step = target - prev.removed_cumulative;
        let matrix = prune(&prev.matrix, strategy, step, seed::mix(seed, k as u64))
            .expect("cumulative targets never exceed the remaining entries");
        stages.push(PruneStage {
            stage: k,
            matrix,
            removed_cumulative: target,
        });
    }
    stages
}

/// Serializes a matrix in the `p qubo` text format, with aux ownership as
/// `c aux <index> clause <clause>` comment lines.
pub fn write_qubo(q: &QuboMatrix, layout: Option<&VariableLayout>, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "c {c}");
    }
    if let Some(layout) = layout {
        for (t, owner) in layout.aux_owners.iter().enumerate() {
            let _ = writeln!(out, "c aux {} clause {owner}", layout.num_problem_vars + t);
        }
    }
    let _ = writeln!(out, "p qubo {} {}", q.dim(), q.num_entries());
    for (i, j, c) in q.entries() {
        let _ = writeln!(out, "{i} {j} {c}");
    }
    out
}

/// Parses the `p qubo` text format. Aux comment lines, if present, must
/// name the trailing indices `n..dim` in order.
pub fn parse_qubo(text: &str) -> Result<(QuboMatrix, VariableLayout)> {
    let mut header: Option<(usize, usize)> = None;
    let mut aux: Vec<(usize, usize)> = Vec::new();
    let mut q = QuboMatrix::new(0);
    let mut seen = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts[0] == "c" {
            if parts.len() == 5 && parts[1] == "aux" && parts[3] == "clause" {
                let index = parse_num(parts[2], line_no)?;
                let clause = parse_num(parts[4], line_no)?;
                aux.push((index, clause));
            }
            continue;
        }
        if parts[0] == "p" {
            if header.is_some() {
                return Err(Error::parse(line_no, "duplicate problem line"));
            }
            if parts.len() != 4 || parts[1] != "qubo" {
                return Err(Error::parse(line_no, "expected 'p qubo <dim> <entries>'"));
            }
            let dim = parse_num(parts[2], line_no)?;
            let count = parse_num(parts[3], line_no)?;
            header = Some((dim, count));
            q = QuboMatrix::new(dim);
            continue;
        }
        if header.is_none() {
            return Err(Error::parse(line_no, "entry before 'p qubo' header"));
        }
        let (i, j, c) = parse_entry(&parts, line_no)?;
        if i > j {
            return Err(Error::parse(line_no, "entries must satisfy i <= j"));
        }
        if q.get(i, j) != 0 {
            return Err(Error::parse(line_no, format!("duplicate entry ({i}, {j})")));
        }
        if c == 0 {
            return Err(Error::parse(line_no, "zero coefficients are not stored"));
        }
        q.add(i, j, c).map_err(|e| Error::parse(line_no, e.to_string()))?;
        seen += 1;
    }
    let Some((dim, count)) = header else {
        return Err(Error::parse(0, "missing 'p qubo' header"));
    };
    if seen != count {
        return Err(Error::parse(0, format!("header declares {count} entries, found {seen}")));
    }
    if aux.len() > dim {
        return Err(Error::parse(0, "more aux lines than matrix indices"));
    }
    let n = dim - aux.len();
    let mut aux_owners = Vec::with_capacity(aux.len());
    for (t, &(index, clause)) in aux.iter().enumerate() {
        if index != n + t {
            return Err(Error::parse(
                0,
                format!("aux index {index} out of order, expected {}", n + t),
            ));
        }
        aux_owners.push(clause);
    }
    Ok((
        q,
        VariableLayout {
            num_problem_vars: n,
            aux_owners,
        },
    ))
}

pub(crate) fn parse_num(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::parse(line, format!("invalid index '{tok}'")))
}

pub(crate) fn parse_entry(parts: &[&str], line: usize) -> Result<(usize, usize, i64)> {
    if parts.len() != 3 {
        return Err(Error::parse(line, "expected 'i j coeff'"));
    }
    let i = parse_num(parts[0], line)?;
    let j = parse_num(parts[1], line)?;
    let c = parts[2]
        .parse::<i64>()
        .map_err(|_| Error::parse(line, format!("invalid coefficient '{}'", parts[2])))?;
    Ok((i, j, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn m(dim: usize, entries: &[(usize, usize, i64)]) -> QuboMatrix {
        QuboMatrix::from_entries(dim, entries.iter().copied()).unwrap()
    }

    fn fullapprox_type0() -> QuboMatrix {
        m(3, &[(0, 0, -1), (1, 1, -1), (2, 2, -1), (0, 1, 1), (0, 2, 1), (1, 2, 1)])
    }

    fn five_var_example() -> QuboMatrix {
        m(
            5,
            &[
                (0, 0, -3),
                (0, 1, 2),
                (0, 2, 1),
                (0, 3, 1),
                (0, 4, 1),
                (1, 1, -3),
                (1, 2, 1),
                (1, 3, 1),
                (1, 4, 1),
                (2, 2, -2),
                (2, 3, 1),
                (2, 4, 1),
                (3, 3, -2),
                (4, 4, -1),
            ],
        )
    }

    fn chancellor_a() -> QuboMatrix {
        let mut e = vec![];
        for i in 0..4 {
            e.push((i, i, -2));
            for j in i + 1..4 {
                e.push((i, j, 1));
            }
        }
        m(4, &e)
    }

    // Dense naive evaluator: x^T Q x with Q upper-triangular.
    fn dense_energy(q: &QuboMatrix, bits: &[bool]) -> i64 {
        let n = q.dim();
        let mut e = 0;
        for i in 0..n {
            for j in 0..n {
                if j >= i && bits[i] && bits[j] {
                    e += q.get(i, j);
                }
            }
        }
        e
    }

    fn random_matrix<R: Rng>(rng: &mut R, dim: usize, density: f64) -> QuboMatrix {
        let mut q = QuboMatrix::new(dim);
        for i in 0..dim {
            for j in i..dim {
                if rng.gen_bool(density) {
                    q.add(i, j, rng.gen_range(-5..=5)).unwrap();
                }
            }
        }
        q
    }

    #[test]
    fn energy_examples() {
        assert_eq!(fullapprox_type0().energy(&[true, false, false]).unwrap(), -1);
        assert_eq!(five_var_example().energy(&[false; 5]).unwrap(), 0);
        assert_eq!(five_var_example().energy(&[true, false, false, false, false]).unwrap(), -3);
        assert!(five_var_example().energy(&[true]).is_err());
    }

    #[test]
    fn cancellation_drops_entries() {
        let q = m(3, &[(0, 2, 1), (2, 0, -1), (1, 1, 4)]);
        assert_eq!(q.num_entries(), 1);
        assert_eq!(q.get(0, 2), 0);
        assert!(QuboMatrix::from_entries(2, [(0, 2, 1)]).is_err());
    }

    #[test]
    fn energy_min_aux_examples() {
        let q = chancellor_a();
        let layout = VariableLayout {
            num_problem_vars: 3,
            aux_owners: vec![0],
        };
        assert_eq!(energy_min_aux(&q, &layout, &Assignment::from_bits(&[1, 0, 0])).unwrap(), -3);
        assert_eq!(energy_min_aux(&q, &layout, &Assignment::from_bits(&[0, 0, 0])).unwrap(), -2);
        let plain = VariableLayout::plain(5);
        let a = Assignment::from_bits(&[1, 1, 0, 1, 0]);
        assert_eq!(
            energy_min_aux(&five_var_example(), &plain, &a).unwrap(),
            five_var_example().energy(a.bits()).unwrap()
        );
    }

    #[test]
    fn energy_min_aux_coupled_fallback() {
        // Two coupled aux variables at indices 1, 2.
        let q = m(3, &[(0, 1, -1), (1, 2, -3), (2, 2, 1), (1, 1, 1)]);
        let layout = VariableLayout {
            num_problem_vars: 1,
            aux_owners: vec![0, 1],
        };
        // x0 = 1: best is y=(1,1): -1 -3 +1 +1 = -2.
        assert_eq!(energy_min_aux(&q, &layout, &Assignment::from_bits(&[1])).unwrap(), -2);
        let mut big = QuboMatrix::new(23);
        big.add(1, 2, 1).unwrap();
        let layout = VariableLayout {
            num_problem_vars: 1,
            aux_owners: (0..22).collect(),
        };
        assert!(matches!(
            energy_min_aux(&big, &layout, &Assignment::from_bits(&[0])),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_min(&fullapprox_type0()).unwrap(), (-1, vec![true, false, false]));
        assert_eq!(brute_force_min(&QuboMatrix::new(3)).unwrap(), (0, vec![false; 3]));
        assert_eq!(brute_force_min(&m(1, &[(0, 0, -1)])).unwrap(), (-1, vec![true]));
        assert!(brute_force_min(&QuboMatrix::new(26)).is_err());
    }

    #[test]
    fn nnz_examples() {
        assert_eq!(five_var_example().nnz_offdiag(), 9);
        assert_eq!(m(3, &[(0, 0, 1), (2, 2, -1)]).nnz_offdiag(), 0);
        assert_eq!(fullapprox_type0().nnz_offdiag(), 3);
    }

    #[test]
    fn prune_min_examples() {
        let q = m(3, &[(0, 1, 2), (0, 2, -1), (1, 2, 1)]);
        let p = prune_min(&q, 1).unwrap();
        assert_eq!(p.get(0, 2), 0);
        assert_eq!(p.nnz_offdiag(), 2);

        let q = m(3, &[(0, 1, 1), (0, 2, 1)]);
        let p = prune_min(&q, 1).unwrap();
        assert_eq!((p.get(0, 1), p.get(0, 2)), (0, 1));

        let full = prune_min(&five_var_example(), 9).unwrap();
        assert_eq!(full.nnz_offdiag(), 0);
        assert_eq!(full.diagonal(), five_var_example().diagonal());
        assert!(prune_min(&five_var_example(), 10).is_err());
    }

    #[test]
    fn prune_random_examples() {
        let q = five_var_example();
        let full = prune_random(&q, 9, 123).unwrap();
        assert_eq!(full.nnz_offdiag(), 0);
        assert_eq!(full.diagonal(), q.diagonal());
        assert_eq!(prune_random(&q, 0, 5).unwrap(), q);
        assert_eq!(prune_random(&q, 4, 77).unwrap(), prune_random(&q, 4, 77).unwrap());
        assert_eq!(prune_random(&q, 4, 77).unwrap().nnz_offdiag(), 5);
    }

    #[test]
    fn schedule_targets() {
        let targets: Vec<usize> = (0..=10).map(|k| cumulative_target(9, k)).collect();
        assert_eq!(targets, vec![0, 1, 2, 3, 4, 5, 5, 6, 7, 8, 9]);
        let stages = pruning_schedule(&five_var_example(), PruneStrategy::Min, 0);
        assert_eq!(stages.len(), 11);
        assert_eq!(
            stages.iter().map(|s| s.removed_cumulative).collect::<Vec<_>>(),
            targets
        );
        for s in &stages {
            assert_eq!(s.matrix.nnz_offdiag(), 9 - s.removed_cumulative);
        }

        let q10 = m(5, &(0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j, 1))).collect::<Vec<_>>());
        assert_eq!(q10.nnz_offdiag(), 10);
        let stages = pruning_schedule(&q10, PruneStrategy::Random, 4);
        for w in stages.windows(2) {
            assert_eq!(w[0].matrix.nnz_offdiag() - w[1].matrix.nnz_offdiag(), 1);
        }
    }

    #[test]
    fn qubo_text_round_trip() {
        let q = five_var_example();
        let layout = VariableLayout {
            num_problem_vars: 3,
            aux_owners: vec![0, 1],
        };
        let text = write_qubo(&q, Some(&layout), &["generated".into()]);
        assert!(text.contains("c aux 3 clause 0\nc aux 4 clause 1\np qubo 5 14\n"));
        let (q2, l2) = parse_qubo(&text).unwrap();
        assert_eq!((q2, l2), (q, layout));
    }

    #[test]
    fn qubo_parse_errors() {
        assert!(parse_qubo("p qubo 2 1\n1 0 3\n").is_err());
        assert!(parse_qubo("p qubo 2 2\n0 1 3\n").is_err());
        assert!(parse_qubo("p qubo 2 1\n0 2 3\n").is_err());
        assert!(parse_qubo("0 1 3\n").is_err());
        assert!(parse_qubo("p qubo 2 2\n0 1 3\n0 1 3\n").is_err());
        assert!(parse_qubo("c aux 0 clause 0\np qubo 2 0\n").is_err());
    }

    proptest! {
        #[test]
        fn energy_matches_dense(seed: u64, dim in 1usize..=12) {
            let mut rng = seed::rng(seed);
            let q = random_matrix(&mut rng, dim, 0.6);
            for _ in 0..10 {
                let bits: Vec<bool> = (0..dim).map(|_| rng.gen()).collect();
                prop_assert_eq!(q.energy(&bits).unwrap(), dense_energy(&q, &bits));
            }
        }

        #[test]
        fn fast_aux_min_matches_exhaustive(seed: u64, n in 1usize..8, aux in 0usize..=10) {
            let mut rng = seed::rng(seed);
            let dim = n + aux;
            let mut q = random_matrix(&mut rng, dim, 0.5);
            // Remove aux-aux couplings so the fast path applies.
            let keys: Vec<_> = q.off_diagonal().filter(|&(i, _, _)| i >= n).map(|(i, j, _)| (i, j)).collect();
            for k in keys { q.remove(k); }
            let layout = VariableLayout { num_problem_vars: n, aux_owners: (0..aux).collect() };
            let a = Assignment::random(n, &mut rng);
            let fast = energy_min_aux(&q, &layout, &a).unwrap();
            prop_assert_eq!(fast, exhaustive_min_aux(&q, n, aux, a.bits()).unwrap());
        }

        #[test]
        fn brute_force_is_lower_bound(seed: u64, dim in 1usize..=12) {
            let mut rng = seed::rng(seed);
            let q = random_matrix(&mut rng, dim, 0.5);
            let (best, witness) = brute_force_min(&q).unwrap();
            prop_assert_eq!(q.energy(&witness).unwrap(), best);
            for _ in 0..100 {
                let bits: Vec<bool> = (0..dim).map(|_| rng.gen()).collect();
                prop_assert!(best <= q.energy(&bits).unwrap());
            }
        }

        #[test]
        fn schedule_is_monotone(seed: u64, dim in 2usize..=12, random in any::<bool>()) {
            let mut rng = seed::rng(seed);
            let q = random_matrix(&mut rng, dim, 0.7);
            let strategy = if random { PruneStrategy::Random } else { PruneStrategy::Min };
            let stages = pruning_schedule(&q, strategy, seed);
            prop_assert_eq!(stages.len(), 11);
            prop_assert_eq!(&stages[0].matrix, &q);
            prop_assert_eq!(stages[10].matrix.nnz_offdiag(), 0);
            for w in stages.windows(2) {
                for (i, j, c) in w[1].matrix.entries() {
                    prop_assert_eq!(w[0].matrix.get(i, j), c);
                }
                prop_assert_eq!(w[1].matrix.diagonal(), q.diagonal());
            }
        }

        #[test]
        fn prune_min_commutes_with_relabeling(seed: u64, dim in 2usize..=9) {
            let mut rng = seed::rng(seed);
            let mut q = QuboMatrix::new(dim);
            let mut next = -40i64;
            for i in 0..dim {
                for j in i..dim {
                    if rng.gen_bool(0.6) {
                        // Distinct values so tie-breaks never apply.
                        next += rng.gen_range(1..4);
                        q.add(i, j, next).unwrap();
                    }
                }
            }
            let mut perm: Vec<usize> = (0..dim).collect();
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
            let relabel = |m: &QuboMatrix| {
                QuboMatrix::from_entries(dim, m.entries().map(|(i, j, c)| (perm[i], perm[j], c))).unwrap()
            };
            let count = rng.gen_range(0..=q.nnz_offdiag());
            let a = relabel(&prune_min(&q, count).unwrap());
            let b = prune_min(&relabel(&q), count).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
