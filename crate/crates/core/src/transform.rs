//! Clause patterns and formula-to-QUBO assembly.
//!
//! A pattern is a 3×3 (no auxiliary) or 4×4 (one auxiliary in slot 3)
//! upper-triangular template over the canonical clause slots `(i, j, k)`.
//! A [`TransformSpec`] holds one pattern per clause type and is summed over
//! all clauses to produce the formula's QUBO.

use std::fmt::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{canonical_satisfied, classify_clause, Assignment, CnfFormula};
use crate::pattern_search::coverage_check;
use crate::qubo::{parse_entry, parse_num, QuboMatrix, VariableLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// All 7 satisfying triples share the minimum; the unsatisfying one is above it.
    Exact,
    /// Exactly 6 satisfying triples share the minimum; the other satisfying
    /// triple and the unsatisfying one are both above it.
    Approx,
}

impl Criterion {
    pub fn label(self) -> &'static str {
        match self {
            Criterion::Exact => "exact-all-7",
            Criterion::Approx => "approx-6-of-7",
        }
    }

    fn satisfying_minima(self) -> usize {
        match self {
            Criterion::Exact => 7,
            Criterion::Approx => 6,
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact-all-7" => Ok(Criterion::Exact),
            "approx" | "approx-6-of-7" => Ok(Criterion::Approx),
            other => Err(Error::invalid(format!("unknown criterion '{other}'"))),
        }
    }
}

/// Bit triple `(x_i, x_j, x_k)`.
pub type Triple = [bool; 3];

/// The 8 triples in lexicographic order, `(0,0,0)` first.
pub fn all_triples() -> [Triple; 8] {
    std::array::from_fn(|code| [code & 4 != 0, code & 2 != 0, code & 1 != 0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClausePattern {
    dim: usize,
    coeffs: [[i64; 4]; 4],
}

impl ClausePattern {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim != 3 && dim != 4 {
            return Err(Error::invalid(format!("pattern dimension must be 3 or 4, got {dim}")));
        }
        Ok(ClausePattern {
            dim,
            coeffs: [[0; 4]; 4],
        })
    }

    pub fn from_entries(dim: usize, entries: &[(usize, usize, i64)]) -> Result<Self> {
        let mut p = ClausePattern::zeros(dim)?;
        for &(r, c, v) in entries {
            p.add(r, c, v)?;
        }
        Ok(p)
    }

    /// 3×3 pattern from `(α1, α2, α3, α12, α13, α23)`.
    pub fn from_alphas(alphas: [i64; 6]) -> Self {
        let [a1, a2, a3, a12, a13, a23] = alphas;
        let mut coeffs = [[0; 4]; 4];
        coeffs[0][0] = a1;
        coeffs[1][1] = a2;
        coeffs[2][2] = a3;
        coeffs[0][1] = a12;
        coeffs[0][2] = a13;
        coeffs[1][2] = a23;
        ClausePattern { dim: 3, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn uses_aux(&self) -> bool {
        self.dim == 4
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        self.coeffs[r][c]
    }

    pub fn add(&mut self, r: usize, c: usize, v: i64) -> Result<()> {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        if c >= self.dim {
            return Err(Error::invalid(format!(
                "slot ({r}, {c}) outside a {0}x{0} pattern",
                self.dim
            )));
        }
        self.coeffs[r][c] += v;
        Ok(())
    }

    /// Nonzero coefficients in row-major order.
    pub fn entries(&self) -> Vec<(usize, usize, i64)> {
        let mut out = Vec::new();
        for r in 0..self.dim {
            for c in r..self.dim {
                if self.coeffs[r][c] != 0 {
                    out.push((r, c, self.coeffs[r][c]));
                }
            }
        }
        out
    }

    /// Energy of a full slot vector (length `dim`).
    pub fn energy(&self, slots: &[bool]) -> i64 {
        let mut e = 0;
        for r in 0..self.dim {
            if !slots[r] {
                continue;
            }
            for c in r..self.dim {
                if slots[c] {
                    e += self.coeffs[r][c];
                }
            }
        }
        e
    }

    /// Energy of a variable triple, minimizing over the aux bit if present.
    pub fn triple_energy(&self, t: Triple) -> i64 {
        if self.dim == 3 {
            self.energy(&t)
        } else {
            let off = self.energy(&[t[0], t[1], t[2], false]);
            let on = self.energy(&[t[0], t[1], t[2], true]);
            off.min(on)
        }
    }
}

impl fmt::Display for ClausePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    if c < r {
                        ".".to_string()
                    } else {
                        self.coeffs[r][c].to_string()
                    }
                })
                .collect();
            writeln!(f, "{}", row.join("\t"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformSpec {
    pub name: String,
    patterns: [ClausePattern; 4],
}

impl TransformSpec {
    pub fn new(name: impl Into<String>, patterns: [ClausePattern; 4]) -> Result<Self> {
        let dim = patterns[0].dim();
        if patterns.iter().any(|p| p.dim() != dim) {
            return Err(Error::invalid("all four patterns of a spec must share a dimension"));
        }
        Ok(TransformSpec {
            name: name.into(),
            patterns,
        })
    }

    pub fn pattern(&self, clause_type: u8) -> &ClausePattern {
        &self.patterns[clause_type as usize]
    }

    pub fn patterns(&self) -> &[ClausePattern; 4] {
        &self.patterns
    }

    pub fn uses_aux(&self) -> bool {
        self.patterns[0].uses_aux()
    }

    /// QUBO dimension this spec produces for `n` variables and `m` clauses.
    pub fn qubo_dim(&self, n: usize, m: usize) -> usize {
        if self.uses_aux() {
            n + m
        } else {
            n
        }
    }
}

pub const BUILTIN_NAMES: [&str; 4] = ["chancellor_printed", "chancellor_repaired", "nuesslein", "fullapprox"];

fn full_upper(diag: i64, off: i64) -> ClausePattern {
    let mut p = ClausePattern::zeros(4).expect("dim 4");
    for r in 0..4 {
        p.coeffs[r][r] = diag;
        for c in r + 1..4 {
            p.coeffs[r][c] = off;
        }
    }
    p
}

fn pat4(entries: &[(usize, usize, i64)]) -> ClausePattern {
    ClausePattern::from_entries(4, entries).expect("built-in table is well formed")
}

fn chancellor_printed() -> [ClausePattern; 4] {
    [
        full_upper(-2, 1),
        pat4(&[(0, 0, -1), (0, 1, 1), (0, 3, 1), (1, 1, -1), (1, 3, 1), (3, 3, -1)]),
        pat4(&[(0, 0, -1), (0, 3, 1), (1, 1, -1), (1, 2, 1), (1, 3, 1), (2, 2, -1), (2, 3, 1), (3, 3, 2)]),
        full_upper(-1, 1),
    ]
}

fn nuesslein() -> [ClausePattern; 4] {
    [
        pat4(&[(0, 1, 2), (0, 3, -2), (1, 3, -2), (2, 2, -1), (2, 3, 1), (3, 3, 1)]),
        pat4(&[(0, 1, 2), (0, 3, -2), (1, 3, -2), (2, 2, 1), (2, 3, -1), (3, 3, 2)]),
        pat4(&[(0, 0, 2), (0, 1, -2), (0, 3, -2), (1, 3, 2), (2, 2, 1), (2, 3, -1)]),
        full_upper(-1, 1),
    ]
}

fn fullapprox() -> [ClausePattern; 4] {
    [
        ClausePattern::from_alphas([-1, -1, -1, 1, 1, 1]),
        ClausePattern::from_alphas([0, 0, 1, 1, -1, -1]),
        ClausePattern::from_alphas([1, 0, 0, -1, -1, 1]),
        ClausePattern::from_alphas([-1, -1, -1, 1, 1, 1]),
    ]
}

/// Negation masks placing the negated literals on the trailing slots.
pub fn canonical_mask(clause_type: u8) -> [bool; 3] {
    std::array::from_fn(|s| s >= 3 - clause_type as usize)
}

fn chancellor_repaired() -> [ClausePattern; 4] {
    let base = full_upper(-2, 1);
    std::array::from_fn(|t| {
        negation_substitute(&base, canonical_mask(t as u8)).expect("base pattern is exact for type 0")
    })
}

pub fn builtin_spec(name: &str) -> Result<TransformSpec> {
    let patterns = match name {
        "chancellor_printed" => chancellor_printed(),
        "chancellor_repaired" => chancellor_repaired(),
        "nuesslein" => nuesslein(),
        "fullapprox" => fullapprox(),
        other => return Err(Error::UnknownSpec(other.to_string())),
    };
    TransformSpec::new(name, patterns)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub clause_type: u8,
    pub criterion: Criterion,
    pub valid: bool,
    pub min_energy: i64,
    /// Triples attaining `min_energy`, lexicographic order.
    pub minima: Vec<Triple>,
    pub unsat_energy: i64,
    /// Energy of each triple in [`all_triples`] order.
    pub energies: [i64; 8],
}

impl VerificationReport {
    /// Unsatisfying energy minus the minimum.
    pub fn gap(&self) -> i64 {
        self.unsat_energy - self.min_energy
    }

    pub fn attains_min(&self, t: Triple) -> bool {
        self.minima.contains(&t)
    }
}

/// Checks a pattern against the canonical clause of `clause_type`.
pub fn verify_pattern(pattern: &ClausePattern, clause_type: u8, criterion: Criterion) -> VerificationReport {
    verify_masked(pattern, canonical_mask(clause_type), criterion)
}

/// Checks a pattern against the clause whose slot `s` is negated iff
/// `negations[s]`.
pub fn verify_masked(pattern: &ClausePattern, negations: [bool; 3], criterion: Criterion) -> VerificationReport {
    let triples = all_triples();
    let energies = triples.map(|t| pattern.triple_energy(t));
    let satisfied = triples.map(|t| (0..3).any(|s| t[s] != negations[s]));
    let min_energy = *energies.iter().min().expect("8 triples");
    let minima: Vec<Triple> = (0..8)
        .filter(|&c| energies[c] == min_energy)
        .map(|c| triples[c])
        .collect();
    let unsat = (0..8).find(|&c| !satisfied[c]).expect("exactly one unsatisfying triple");
    let sat_at_min = (0..8)
        .filter(|&c| satisfied[c] && energies[c] == min_energy)
        .count();
    let valid = sat_at_min == criterion.satisfying_minima() && energies[unsat] > min_energy;
    VerificationReport {
        clause_type: negations.iter().filter(|&&b| b).count() as u8,
        criterion,
        valid,
        min_energy,
        minima,
        unsat_energy: energies[unsat],
        energies,
    }
}

/// Substitutes `x_s → 1 − x_s` for each masked slot of an exact type-0
/// pattern, dropping the constant. The result is checked to be exact for the
/// clause with those negations.
pub fn negation_substitute(base: &ClausePattern, mask: [bool; 3]) -> Result<ClausePattern> {
    if base.dim() != 4 {
        return Err(Error::invalid("negation substitution needs a 4x4 pattern"));
    }
    let flip = [mask[0], mask[1], mask[2], false];
    let mut out = ClausePattern::zeros(4)?;
    for (r, c, v) in base.entries() {
        if r == c {
            // v·x → v − v·y
            if flip[r] {
                out.coeffs[r][r] -= v;
            } else {
                out.coeffs[r][r] += v;
            }
            continue;
        }
        match (flip[r], flip[c]) {
            (false, false) => out.coeffs[r][c] += v,
            // v·(1−y_r)·x_c = v·x_c − v·y_r·x_c
            (true, false) => {
                out.coeffs[c][c] += v;
                out.coeffs[r][c] -= v;
            }
            (false, true) => {
                out.coeffs[r][r] += v;
                out.coeffs[r][c] -= v;
            }
            // v·(1−y_r)(1−y_c) = v − v·y_r − v·y_c + v·y_r·y_c
            (true, true) => {
                out.coeffs[r][r] -= v;
                out.coeffs[c][c] -= v;
                out.coeffs[r][c] += v;
            }
        }
    }
    let report = verify_masked(&out, mask, Criterion::Exact);
    if !report.valid {
        return Err(Error::invalid(format!(
            "substituted pattern for negations {mask:?} is not exact; base pattern is invalid"
        )));
    }
    Ok(out)
}

/// Global `(row, col, coeff)` entries of a pattern placed on matrix indices
/// `slots` (and `aux` for slot 3).
pub fn instantiate(
    pattern: &ClausePattern,
    slots: [usize; 3],
    aux: Option<usize>,
) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
    let index = move |s: usize| if s < 3 { slots[s] } else { aux.expect("aux slot bound") };
    pattern
        .entries()
        .into_iter()
        .map(move |(r, c, v)| (index(r), index(c), v))
}

fn clause_slots(order: [u32; 3]) -> [usize; 3] {
    order.map(|v| v as usize - 1)
}

/// Sums the spec's per-type pattern over every clause. Dim-4 specs bind the
/// auxiliary slot of clause `l` to index `n + l`.
pub fn assemble(formula: &CnfFormula, spec: &TransformSpec) -> (QuboMatrix, VariableLayout) {
    let n = formula.num_vars();
    let m = formula.num_clauses();
    let dim = spec.qubo_dim(n, m);
    let mut q = QuboMatrix::new(dim);
    for (l, clause) in formula.clauses().iter().enumerate() {
        let class = classify_clause(clause);
        let aux = spec.uses_aux().then_some(n + l);
        for (r, c, v) in instantiate(spec.pattern(class.clause_type), clause_slots(class.order), aux) {
            q.add(r, c, v).expect("indices within dim");
        }
    }
    let layout = VariableLayout {
        num_problem_vars: n,
        aux_owners: if spec.uses_aux() { (0..m).collect() } else { Vec::new() },
    };
    (q, layout)
}

/// Per-type lists of 3×3 approximation patterns.
pub type ApproxSets = [Vec<ClausePattern>; 4];

/// Chooses, for each clause, the first approximation pattern whose minima
/// include the hint's restriction to that clause (the first pattern when the
/// hint falsifies the clause), then assembles.
pub fn approximate_with_hint(formula: &CnfFormula, hint: &Assignment, approx_sets: &ApproxSets) -> Result<QuboMatrix> {
    let (q, _) = approximate_with_hint_choices(formula, hint, approx_sets)?;
    Ok(q)
}

/// As [`approximate_with_hint`], also returning the chosen pattern index
/// per clause.
pub fn approximate_with_hint_choices(
    formula: &CnfFormula,
    hint: &Assignment,
    approx_sets: &ApproxSets,
) -> Result<(QuboMatrix, Vec<usize>)> {
    let n = formula.num_vars();
    if hint.len() != n {
        return Err(Error::invalid(format!(
            "hint has {} bits, formula has {n} variables",
            hint.len()
        )));
    }
    let mut reports = Vec::with_capacity(4);
    for t in 0..4u8 {
        let set = &approx_sets[t as usize];
        if set.iter().any(|p| p.dim() != 3) {
            return Err(Error::invalid("approximation patterns must be 3x3"));
        }
        let (covered, _) = coverage_check(set, t);
        if !covered {
            return Err(Error::invalid(format!(
                "approximation set for clause type {t} does not cover all satisfying triples"
            )));
        }
        reports.push(
            set.iter()
                .map(|p| verify_pattern(p, t, Criterion::Approx))
                .collect::<Vec<_>>(),
        );
    }

    let mut q = QuboMatrix::new(n);
    let mut choices = Vec::with_capacity(formula.num_clauses());
    for clause in formula.clauses() {
        let class = classify_clause(clause);
        let t = class.clause_type;
        let triple: Triple = class.order.map(|v| hint.bits()[v as usize - 1]);
        let choice = if canonical_satisfied(t, triple) {
            reports[t as usize]
                .iter()
                .position(|r| r.attains_min(triple))
                .expect("coverage guarantees a pattern")
        } else {
            0
        };
        choices.push(choice);
        let pattern = &approx_sets[t as usize][choice];
        for (r, c, v) in instantiate(pattern, clause_slots(class.order), None) {
            q.add(r, c, v).expect("indices within dim");
        }
    }
    Ok((q, choices))
}

/// Projects a sample onto the problem variables.
pub fn decode(bits: &[bool], layout: &VariableLayout) -> Result<Assignment> {
    if bits.len() != layout.dim() {
        return Err(Error::invalid(format!(
            "sample has {} bits, layout expects {}",
            bits.len(),
            layout.dim()
        )));
    }
    Ok(Assignment(bits[..layout.num_problem_vars].to_vec()))
}

// ---- pattern files and bundles ----

pub fn write_pattern(pattern: &ClausePattern, clause_type: u8, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "c {c}");
    }
    let entries = pattern.entries();
    let _ = writeln!(out, "p pattern {} {clause_type} {}", pattern.dim(), entries.len());
    for (r, c, v) in entries {
        let _ = writeln!(out, "{r} {c} {v}");
    }
    out
}

/// Parses a pattern file, returning the pattern and its clause type.
pub fn parse_pattern(text: &str) -> Result<(ClausePattern, u8)> {
    let mut header: Option<(usize, u8, usize)> = None;
    let mut pattern = None;
    let mut seen = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts[0] == "p" {
            if header.is_some() {
                return Err(Error::parse(line_no, "duplicate problem line"));
            }
            if parts.len() != 5 || parts[1] != "pattern" {
                return Err(Error::parse(
                    line_no,
                    "expected 'p pattern <dim> <clause_type> <entries>'",
                ));
            }
            let dim = parse_num(parts[2], line_no)?;
            let t = parse_num(parts[3], line_no)?;
            let count = parse_num(parts[4], line_no)?;
            if t > 3 {
                return Err(Error::parse(line_no, "clause type must be 0..3"));
            }
            pattern = Some(ClausePattern::zeros(dim).map_err(|e| Error::parse(line_no, e.to_string()))?);
            header = Some((dim, t as u8, count));
            continue;
        }
        let Some(p) = pattern.as_mut() else {
            return Err(Error::parse(line_no, "entry before 'p pattern' header"));
        };
        let (r, c, v) = parse_entry(&parts, line_no)?;
        if r > c {
            return Err(Error::parse(line_no, "entries must satisfy row <= col"));
        }
        if c < p.dim() && p.get(r, c) != 0 {
            return Err(Error::parse(line_no, format!("duplicate entry ({r}, {c})")));
        }
        p.add(r, c, v).map_err(|e| Error::parse(line_no, e.to_string()))?;
        seen += 1;
    }
    let (Some((_, t, count)), Some(p)) = (header, pattern) else {
        return Err(Error::parse(0, "missing 'p pattern' header"));
    };
    if seen != count {
        return Err(Error::parse(0, format!("header declares {count} entries, found {seen}")));
    }
    Ok((p, t))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub clause_type: u8,
}

/// Index of the pattern files in a directory. A spec bundle has exactly one
/// entry per clause type; a search output lists every found pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternManifest {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<Criterion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub patterns: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes the patterns as `<prefix><n>.pattern` files plus `manifest.json`.
pub fn write_pattern_dir(dir: &Path, manifest_name: &str, patterns: &[(ClausePattern, u8)], extra: PatternManifest) -> Result<PatternManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = PatternManifest {
        name: manifest_name.to_string(),
        patterns: Vec::with_capacity(patterns.len()),
        ..extra
    };
    for (idx, (pattern, t)) in patterns.iter().enumerate() {
        let file = format!("type{t}_{idx:03}.pattern");
        let path = dir.join(&file);
        std::fs::write(&path, write_pattern(pattern, *t, &[])).map_err(|e| Error::io(&path, e))?;
        manifest.patterns.push(ManifestEntry { file, clause_type: *t });
    }
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_pattern_dir(dir: &Path) -> Result<(PatternManifest, Vec<(ClausePattern, u8)>)> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: PatternManifest = serde_json::from_str(&text)?;
    let mut patterns = Vec::with_capacity(manifest.patterns.len());
    for entry in &manifest.patterns {
        let path = dir.join(&entry.file);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let (p, t) = parse_pattern(&text)?;
        if t != entry.clause_type {
            return Err(Error::invalid(format!(
                "{} declares clause type {t}, manifest says {}",
                entry.file, entry.clause_type
            )));
        }
        patterns.push((p, t));
    }
    Ok((manifest, patterns))
}

pub fn write_spec_bundle(dir: &Path, spec: &TransformSpec) -> Result<PatternManifest> {
    let patterns: Vec<(ClausePattern, u8)> = (0..4u8).map(|t| (*spec.pattern(t), t)).collect();
    write_pattern_dir(
        dir,
        &spec.name,
        &patterns,
        PatternManifest {
            name: String::new(),
            criterion: None,
            values: None,
            notes: Vec::new(),
            patterns: Vec::new(),
        },
    )
}

pub fn read_spec_bundle(dir: &Path) -> Result<TransformSpec> {
    let (manifest, patterns) = read_pattern_dir(dir)?;
    let mut slots: [Option<ClausePattern>; 4] = [None; 4];
    for (p, t) in patterns {
        if slots[t as usize].replace(p).is_some() {
            return Err(Error::invalid(format!("bundle has two patterns for clause type {t}")));
        }
    }
    let [Some(a), Some(b), Some(c), Some(d)] = slots else {
        return Err(Error::invalid("bundle must contain one pattern per clause type"));
    };
    TransformSpec::new(manifest.name, [a, b, c, d])
}

/// Built-in name or a bundle directory path.
pub fn resolve_spec(name_or_path: &str) -> Result<TransformSpec> {
    match builtin_spec(name_or_path) {
        Ok(spec) => Ok(spec),
        Err(Error::UnknownSpec(_)) if Path::new(name_or_path).is_dir() => read_spec_bundle(Path::new(name_or_path)),
        Err(e) => Err(e),
    }
}
