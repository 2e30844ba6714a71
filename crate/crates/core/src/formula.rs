//! 3-CNF formulas: representation, DIMACS I/O, evaluation, generation and
//! the brute-force MAX-3SAT oracle.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Largest variable count `brute_force_maxsat` will enumerate.
pub const MAX_BRUTE_FORCE_VARS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    /// 1-based variable index.
    pub variable: u32,
    pub negated: bool,
}

impl Literal {
    pub fn new(variable: u32, negated: bool) -> Result<Self> {
        if variable == 0 {
            return Err(Error::invalid("literal variable index must be >= 1"));
        }
        Ok(Literal { variable, negated })
    }

    pub fn pos(variable: u32) -> Self {
        Literal { variable, negated: false }
    }

    pub fn neg(variable: u32) -> Self {
        Literal { variable, negated: true }
    }

    /// Signed DIMACS form.
    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.variable);
        if self.negated {
            -v
        } else {
            v
        }
    }

    pub fn from_dimacs(lit: i64) -> Result<Self> {
        if lit == 0 {
            return Err(Error::invalid("0 is not a literal"));
        }
        let var = u32::try_from(lit.unsigned_abs())
            .map_err(|_| Error::invalid(format!("literal {lit} out of range")))?;
        Ok(Literal {
            variable: var,
            negated: lit < 0,
        })
    }

    pub fn eval(self, value: bool) -> bool {
        value != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬x{}", self.variable)
        } else {
            write!(f, "x{}", self.variable)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    literals: [Literal; 3],
}

impl Clause {
    pub fn new(literals: [Literal; 3]) -> Result<Self> {
        let [a, b, c] = literals;
        if a.variable == 0 || b.variable == 0 || c.variable == 0 {
            return Err(Error::invalid("literal variable index must be >= 1"));
        }
        if a.variable == b.variable || a.variable == c.variable || b.variable == c.variable {
            return Err(Error::invalid(format!(
                "repeated variable in clause ({a} ∨ {b} ∨ {c})"
            )));
        }
        Ok(Clause { literals })
    }

    /// Builds a clause from signed DIMACS integers.
    pub fn from_dimacs(lits: [i64; 3]) -> Result<Self> {
        Clause::new([
            Literal::from_dimacs(lits[0])?,
            Literal::from_dimacs(lits[1])?,
            Literal::from_dimacs(lits[2])?,
        ])
    }

    pub fn literals(&self) -> &[Literal; 3] {
        &self.literals
    }

    pub fn max_variable(&self) -> u32 {
        self.literals.iter().map(|l| l.variable).max().unwrap_or(0)
    }

    /// Evaluates the clause; `bits[v - 1]` is the value of variable `v`.
    pub fn is_satisfied(&self, bits: &[bool]) -> bool {
        self.literals
            .iter()
            .any(|l| l.eval(bits[l.variable as usize - 1]))
    }

    pub fn classify(&self) -> ClauseClass {
        classify_clause(self)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.literals;
        write!(f, "({a} ∨ {b} ∨ {c})")
    }
}

/// Clause type (number of negations) and the canonical slot order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClauseClass {
    pub clause_type: u8,
    /// Variables for slots (i, j, k): positive literals first, then negated
    /// ones, each group in original clause order.
    pub order: [u32; 3],
}

/// Number of negated literals plus the canonical (i, j, k) variable order.
pub fn classify_clause(clause: &Clause) -> ClauseClass {
    let mut order = [0u32; 3];
    let mut slot = 0;
    for negated in [false, true] {
        for lit in clause.literals.iter().filter(|l| l.negated == negated) {
            order[slot] = lit.variable;
            slot += 1;
        }
    }
    let clause_type = clause.literals.iter().filter(|l| l.negated).count() as u8;
    ClauseClass { clause_type, order }
}

/// Whether the canonical clause of `clause_type` is satisfied by `bits`
/// (slots ordered as in [`classify_clause`]).
pub fn canonical_satisfied(clause_type: u8, bits: [bool; 3]) -> bool {
    let negated_from = 3 - clause_type as usize;
    (0..3).any(|s| bits[s] != (s >= negated_from))
}

/// Evaluates the clause-type pseudo-Boolean polynomial: −1 when the
/// canonical clause is satisfied, 0 otherwise.
pub fn clause_penalty(clause_type: u8, bits: [bool; 3]) -> i64 {
    let [i, j, k] = bits.map(i64::from);
    match clause_type {
        0 => -i - j - k + i * j + i * k + j * k - i * j * k,
        1 => -1 + k - i * k - j * k + i * j * k,
        2 => -1 + j * k - i * j * k,
        3 => -1 + i * j * k,
        _ => panic!("clause type must be in 0..=3, got {clause_type}"),
    }
}

/// Truth assignment for variables `x1..xn` (`bits[0]` is x1).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment(pub Vec<bool>);

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Assignment(vec![false; n])
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        Assignment(bits.iter().map(|&b| b != 0).collect())
    }

    /// Assignment whose binary value (x1 least significant) is `value`.
    pub fn from_index(n: usize, value: u64) -> Self {
        Assignment((0..n).map(|i| value >> i & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        Assignment((0..n).map(|_| rng.gen()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::invalid("formula must have at least one variable"));
        }
        if let Some(c) = clauses.iter().find(|c| c.max_variable() as usize > num_vars) {
            return Err(Error::invalid(format!(
                "clause {c} references a variable above {num_vars}"
            )));
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn count_satisfied(&self, assignment: &Assignment) -> Result<usize> {
        count_satisfied(self, assignment)
    }
}

pub fn count_satisfied(formula: &CnfFormula, assignment: &Assignment) -> Result<usize> {
    if assignment.len() != formula.num_vars {
        return Err(Error::invalid(format!(
            "assignment has {} bits, formula has {} variables",
            assignment.len(),
            formula.num_vars
        )));
    }
    Ok(formula
        .clauses
        .iter()
        .filter(|c| c.is_satisfied(&assignment.0))
        .count())
}

pub fn parse_dimacs(text: &str) -> Result<CnfFormula> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut pending: Vec<(i64, usize)> = Vec::new();

    'lines: for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::parse(line_no, "duplicate problem line"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(Error::parse(line_no, "expected 'p cnf <vars> <clauses>'"));
            }
            let n = parts[2]
                .parse::<usize>()
                .map_err(|_| Error::parse(line_no, "invalid variable count"))?;
            let m = parts[3]
                .parse::<usize>()
                .map_err(|_| Error::parse(line_no, "invalid clause count"))?;
            if n == 0 {
                return Err(Error::parse(line_no, "variable count must be positive"));
            }
            header = Some((n, m));
            continue;
        }
        let Some((n, _)) = header else {
            return Err(Error::parse(line_no, "clause data before 'p cnf' header"));
        };
        for tok in line.split_whitespace() {
            if tok == "%" {
                break 'lines;
            }
            let lit = tok
                .parse::<i64>()
                .map_err(|_| Error::parse(line_no, format!("invalid literal '{tok}'")))?;
            if lit == 0 {
                let start_line = pending.first().map_or(line_no, |p| p.1);
                if pending.len() != 3 {
                    return Err(Error::parse(
                        start_line,
                        format!("clause has {} literals, expected 3", pending.len()),
                    ));
                }
                let lits = [pending[0].0, pending[1].0, pending[2].0];
                let clause = Clause::from_dimacs(lits)
                    .map_err(|e| Error::parse(start_line, e.to_string()))?;
                if clause.max_variable() as usize > n {
                    return Err(Error::parse(
                        start_line,
                        format!("variable index exceeds declared count {n}"),
                    ));
                }
                clauses.push(clause);
                pending.clear();
            } else {
                pending.push((lit, line_no));
            }
        }
    }

    let Some((n, m)) = header else {
        return Err(Error::parse(0, "missing 'p cnf' header"));
    };
    if let Some(&(_, line)) = pending.first() {
        return Err(Error::parse(line, "unterminated clause (missing 0)"));
    }
    if clauses.len() != m {
        return Err(Error::parse(
            0,
            format!("header declares {m} clauses, found {}", clauses.len()),
        ));
    }
    CnfFormula::new(n, clauses)
}

pub fn write_dimacs(formula: &CnfFormula) -> String {
    write_dimacs_with_comments(formula, &[])
}

pub fn write_dimacs_with_comments(formula: &CnfFormula, comments: &[String]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "c {c}");
    }
    let _ = writeln!(out, "p cnf {} {}", formula.num_vars, formula.clauses.len());
    for clause in &formula.clauses {
        let [a, b, c] = clause.literals.map(Literal::to_dimacs);
        let _ = writeln!(out, "{a} {b} {c} 0");
    }
    out
}

/// Comment line the balanced generator attaches to emitted files.
pub fn generator_comment(seed: u64) -> String {
    format!("seed={seed} generator=balanced")
}

const DUPLICATE_RETRIES: usize = 1000;
const RETRIES_PER_LEVEL: usize = 100;

/// Random 3-CNF with balanced variable occurrences and literal polarities.
///
/// Each clause takes three variables of lowest current occurrence count
/// (ties broken uniformly at random), and each literal gets the polarity the
/// variable has used less often so far (ties random). A clause identical to
/// an earlier one (same variables, same polarities) is redrawn. When the
/// strict rule keeps producing duplicates, as happens for small dense
/// instances, each further batch of redraws widens the variable pool and the
/// polarity tolerance by one.
pub fn generate_balanced(num_vars: usize, num_clauses: usize, seed: u64) -> Result<CnfFormula> {
    if num_vars < 3 {
        return Err(Error::invalid("balanced generation needs at least 3 variables"));
    }
    if num_clauses == 0 {
        return Err(Error::invalid("balanced generation needs at least one clause"));
    }
    if u32::try_from(num_vars).is_err() {
        return Err(Error::invalid("too many variables"));
    }
    let mut rng = seed::rng(seed);
    let mut occurrences = vec![0usize; num_vars];
    let mut positive = vec![0usize; num_vars];
    let mut negative = vec![0usize; num_vars];
    let mut seen: HashSet<[Literal; 3]> = HashSet::with_capacity(num_clauses);
    let mut clauses = Vec::with_capacity(num_clauses);

    let mut order: Vec<usize> = (0..num_vars).collect();
    for _ in 0..num_clauses {
        let mut accepted = None;
        for retry in 0..DUPLICATE_RETRIES {
            let slack = retry / RETRIES_PER_LEVEL;
            // Random permutation then stable sort by count = uniform tie-breaking.
            order.shuffle(&mut rng);
            order.sort_by_key(|&v| occurrences[v]);
            let mut vars = if slack == 0 {
                [order[0], order[1], order[2]]
            } else {
                let limit = occurrences[order[2]] + slack - 1;
                let pool = order.iter().take_while(|&&v| occurrences[v] <= limit).count();
                let picked = rand::seq::index::sample(&mut rng, pool, 3);
                [order[picked.index(0)], order[picked.index(1)], order[picked.index(2)]]
            };
            vars.sort_unstable();
            let lits = vars.map(|v| {
                let negated = if positive[v].abs_diff(negative[v]) <= slack {
                    rng.gen()
                } else {
                    positive[v] > negative[v]
                };
                Literal::new(v as u32 + 1, negated).expect("index >= 1")
            });
            if !seen.contains(&lits) {
                accepted = Some(lits);
                break;
            }
        }
        let Some(lits) = accepted else {
            return Err(Error::invalid(format!(
                "could not draw a new distinct balanced clause for n={num_vars}, m={num_clauses}"
            )));
        };
        for lit in &lits {
            let v = lit.variable as usize - 1;
            occurrences[v] += 1;
            if lit.negated {
                negative[v] += 1;
            } else {
                positive[v] += 1;
            }
        }
        seen.insert(lits);
        clauses.push(Clause::new(lits)?);
    }
    CnfFormula::new(num_vars, clauses)
}

/// Exact MAX-3SAT by enumeration of all `2^n` assignments.
///
/// Returns the best satisfied-clause count and the optimal assignment of
/// least binary value (x1 least significant).
pub fn brute_force_maxsat(formula: &CnfFormula) -> Result<(usize, Assignment)> {
    let n = formula.num_vars;
    if n > MAX_BRUTE_FORCE_VARS {
        return Err(Error::TooLarge {
            what: "variable count",
            actual: n as u64,
            limit: MAX_BRUTE_FORCE_VARS as u64,
        });
    }
    // Gray-code walk keeping the number of true literals per clause.
    let mut occurs: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for (ci, clause) in formula.clauses.iter().enumerate() {
        for lit in clause.literals() {
            occurs[lit.variable as usize - 1].push((ci, lit.negated));
        }
    }
    let mut true_lits: Vec<u8> = formula
        .clauses
        .iter()
        .map(|c| c.literals().iter().filter(|l| l.negated).count() as u8)
        .collect();
    let mut satisfied = true_lits.iter().filter(|&&t| t > 0).count();
    let mut bits = 0u64;
    let mut best = (satisfied, bits);

    for step in 1u64..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        bits ^= 1 << v;
        let now_true = bits >> v & 1 == 1;
        for &(ci, negated) in &occurs[v] {
            let lit_true = now_true != negated;
            let t = &mut true_lits[ci];
            if lit_true {
                if *t == 0 {
                    satisfied += 1;
                }
                *t += 1;
            } else {
                *t -= 1;
                if *t == 0 {
                    satisfied -= 1;
                }
            }
        }
        if satisfied > best.0 || (satisfied == best.0 && bits < best.1) {
            best = (satisfied, bits);
        }
    }
    Ok((best.0, Assignment::from_index(n, best.1)))
}
