//! Experiment orchestration: pruning sweeps, transformation comparisons and
//! scaling runs over seeded balanced datasets, with JSONL records and CSV
//! summaries.
//!
//! Solver runs for a given `(formula, sample)` use the same seed regardless
//! of method, so identical matrices always produce identical samples.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{count_satisfied, generate_balanced, CnfFormula};
use crate::qubo::{pruning_schedule, PruneStrategy, QuboMatrix, VariableLayout};
use crate::seed;
use crate::solvers::{random_baseline, solve, SolverConfig};
use crate::transform::{assemble, decode, resolve_spec, TransformSpec};

pub const BASELINE_LABEL: &str = "random";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PruningSweep,
    Comparison,
    Scaling,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::PruningSweep => "pruning_sweep",
            ExperimentKind::Comparison => "comparison",
            ExperimentKind::Scaling => "scaling",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub count: usize,
    pub num_vars: usize,
    pub num_clauses: usize,
    pub seed: u64,
}

impl DatasetConfig {
    pub fn formula_seed(&self, formula_id: usize) -> u64 {
        seed::mix(self.seed, formula_id as u64)
    }

    pub fn generate(&self) -> Result<Vec<CnfFormula>> {
        (0..self.count)
            .map(|f| generate_balanced(self.num_vars, self.num_clauses, self.formula_seed(f)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dataset: DatasetConfig,
    /// Built-in names or spec bundle directories. Empty selects the defaults
    /// for the experiment kind.
    #[serde(default)]
    pub transformations: Vec<String>,
    pub solver: SolverConfig,
    /// Random assignments per formula; defaults to `solver.samples`.
    #[serde(default)]
    pub baseline_samples: Option<usize>,
    /// Store wall-clock times in records. Off by default so record files
    /// are byte-reproducible.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn transformation_names(&self) -> Vec<String> {
        if !self.transformations.is_empty() {
            return self.transformations.clone();
        }
        let names: &[&str] = match self.kind {
            ExperimentKind::PruningSweep => &["nuesslein", "chancellor_repaired"],
            _ => &["fullapprox", "chancellor_repaired", "nuesslein"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    pub fn validate(&self) -> Result<Vec<TransformSpec>> {
        let d = &self.dataset;
        if d.count == 0 {
            return Err(Error::invalid("dataset count must be positive"));
        }
        if d.num_vars < 3 || d.num_clauses == 0 {
            return Err(Error::invalid("dataset needs num_vars >= 3 and num_clauses >= 1"));
        }
        self.solver.validate()?;
        if self.baseline_samples == Some(0) {
            return Err(Error::invalid("baseline_samples must be positive"));
        }
        let specs = self
            .transformation_names()
            .iter()
            .map(|n| resolve_spec(n))
            .collect::<Result<Vec<_>>>()?;
        if self.kind == ExperimentKind::PruningSweep {
            if let Some(s) = specs.iter().find(|s| !s.uses_aux()) {
                return Err(Error::invalid(format!(
                    "pruning sweeps need auxiliary-variable specs, '{}' has none",
                    s.name
                )));
            }
        }
        Ok(specs)
    }

    fn baseline_k(&self) -> usize {
        self.baseline_samples.unwrap_or(self.solver.samples)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub formula_id: usize,
    pub method: String,
    pub sample: usize,
    pub satisfied: usize,
    /// Clause count of the formula, so summaries need only the records.
    pub clauses: usize,
    /// QUBO energy of the sample; absent for the random baseline.
    pub energy: Option<i64>,
    pub elapsed_ms: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Best-of-k satisfied count of one formula.
    BestOfK,
    /// Mean of best-of-k over formulas.
    MeanBestOfK,
    /// Best-of-k of `method` minus best-of-k of `other`, one formula.
    Difference,
    /// `(best_A − best_random) / (best_B − best_random) − 1`, one formula.
    Improvement,
    /// Number of formulas whose improvement denominator was not positive.
    ImprovementOmitted,
    /// Best-of-k divided by the clause count, one formula.
    Fraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: Metric,
    pub method: String,
    pub other: String,
    pub formula_id: Option<usize>,
    pub value: f64,
}

impl SummaryRow {
    fn new(metric: Metric, method: &str, other: &str, formula_id: Option<usize>, value: f64) -> Self {
        SummaryRow {
            metric,
            method: method.to_string(),
            other: other.to_string(),
            formula_id,
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub kind: ExperimentKind,
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

pub fn best_of_k(records: &[RunRecord]) -> Result<usize> {
    records
        .iter()
        .map(|r| r.satisfied)
        .max()
        .ok_or_else(|| Error::invalid("best-of-k needs at least one record"))
}

/// `(best_a − best_random) / (best_b − best_random) − 1`, or `None` when
/// the denominator is not positive.
pub fn baseline_improvement(best_a: usize, best_b: usize, best_random: usize) -> Option<f64> {
    let denom = best_b as f64 - best_random as f64;
    if denom <= 0.0 {
        return None;
    }
    Some((best_a as f64 - best_random as f64) / denom - 1.0)
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
}

impl Ctx<'_> {
    fn solver_for(&self, formula_id: usize) -> SolverConfig {
        let mut s = self.config.solver.clone();
        s.seed = seed::mix(self.config.solver.seed, formula_id as u64);
        s
    }

    fn solve_records(
        &self,
        formula_id: usize,
        formula: &CnfFormula,
        method: &str,
        q: &QuboMatrix,
        layout: &VariableLayout,
    ) -> Result<Vec<RunRecord>> {
        let results = solve(q, &self.solver_for(formula_id))?;
        results
            .into_iter()
            .map(|r| {
                let a = decode(&r.bits, layout)?;
                Ok(RunRecord {
                    formula_id,
                    method: method.to_string(),
                    sample: r.run_index,
                    satisfied: count_satisfied(formula, &a)?,
                    clauses: formula.num_clauses(),
                    energy: Some(r.energy),
                    elapsed_ms: if self.config.record_timing { r.elapsed_ms } else { 0 },
                    seed: r.seed_used,
                })
            })
            .collect()
    }

    fn baseline_records(&self, formula_id: usize, formula: &CnfFormula) -> Result<Vec<RunRecord>> {
        let s = seed::mix_all(self.config.solver.seed, &[formula_id as u64, seed::label_salt(BASELINE_LABEL)]);
        Ok(random_baseline(formula, self.config.baseline_k(), s)?
            .into_iter()
            .enumerate()
            .map(|(i, (_, c))| RunRecord {
                formula_id,
                method: BASELINE_LABEL.to_string(),
                sample: i,
                satisfied: c,
                clauses: formula.num_clauses(),
                energy: None,
                elapsed_ms: 0,
                seed: s,
            })
            .collect())
    }
}

pub fn pruning_label(spec: &str, strategy: PruneStrategy, stage: usize) -> String {
    format!("{spec}/{}/{stage}", strategy.label())
}

fn per_formula<F>(formulas: &[CnfFormula], f: F) -> Result<Vec<RunRecord>>
where
    F: Fn(usize, &CnfFormula) -> Result<Vec<RunRecord>> + Sync,
{
    let chunks = formulas
        .par_iter()
        .enumerate()
        .map(|(id, formula)| f(id, formula))
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

pub fn run_pruning_sweep(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let specs = config.validate()?;
    let formulas = config.dataset.generate()?;
    let ctx = Ctx { config };
    let records = per_formula(&formulas, |id, formula| {
        let mut out = Vec::new();
        for spec in &specs {
            let (q, layout) = assemble(formula, spec);
            for strategy in [PruneStrategy::Min, PruneStrategy::Random] {
                let prune_seed = seed::mix_all(config.dataset.seed, &[id as u64, seed::label_salt(&spec.name)]);
                for stage in pruning_schedule(&q, strategy, prune_seed) {
                    let label = pruning_label(&spec.name, strategy, stage.stage);
                    out.extend(ctx.solve_records(id, formula, &label, &stage.matrix, &layout)?);
                }
            }
        }
        out.extend(ctx.baseline_records(id, formula)?);
        Ok(out)
    })?;
    let summary = summarize(ExperimentKind::PruningSweep, &records)?;
    Ok(ExperimentOutput {
        kind: ExperimentKind::PruningSweep,
        records,
        summary,
    })
}

fn run_methods(config: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentOutput> {
    let specs = config.validate()?;
    let formulas = config.dataset.generate()?;
    let ctx = Ctx { config };
    let records = per_formula(&formulas, |id, formula| {
        let mut out = Vec::new();
        for spec in &specs {
            let (q, layout) = assemble(formula, spec);
            out.extend(ctx.solve_records(id, formula, &spec.name, &q, &layout)?);
        }
        out.extend(ctx.baseline_records(id, formula)?);
        Ok(out)
    })?;
    let summary = summarize(kind, &records)?;
    Ok(ExperimentOutput { kind, records, summary })
}

pub fn run_comparison(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_methods(config, ExperimentKind::Comparison)
}

pub fn run_scaling(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_methods(config, ExperimentKind::Scaling)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    match config.kind {
        ExperimentKind::PruningSweep => run_pruning_sweep(config),
        ExperimentKind::Comparison => run_comparison(config),
        ExperimentKind::Scaling => run_scaling(config),
    }
}

/// Per method: formula id to (best-of-k, clause count).
pub type BestTable = Vec<(String, BTreeMap<usize, (usize, usize)>)>;

/// Best-of-k per method and formula, methods in first-appearance order.
pub fn best_table(records: &[RunRecord]) -> BestTable {
    let mut methods: BestTable = Vec::new();
    for r in records {
        let idx = match methods.iter().position(|(m, _)| *m == r.method) {
            Some(i) => i,
            None => {
                methods.push((r.method.clone(), BTreeMap::new()));
                methods.len() - 1
            }
        };
        let slot = methods[idx].1.entry(r.formula_id).or_insert((r.satisfied, r.clauses));
        slot.0 = slot.0.max(r.satisfied);
    }
    methods
}

/// Pure function of the records.
pub fn summarize(kind: ExperimentKind, records: &[RunRecord]) -> Result<Vec<SummaryRow>> {
    let table = best_table(records);
    let mut rows = Vec::new();
    if kind == ExperimentKind::Scaling {
        for (method, bests) in &table {
            for (&f, &(best, m)) in bests {
                let frac = if m == 0 { 1.0 } else { best as f64 / m as f64 };
                rows.push(SummaryRow::new(Metric::Fraction, method, "", Some(f), frac));
            }
        }
        return Ok(rows);
    }

    for (method, bests) in &table {
        for (&f, &(best, _)) in bests {
            rows.push(SummaryRow::new(Metric::BestOfK, method, "", Some(f), best as f64));
        }
        let mean = bests.values().map(|&(b, _)| b as f64).sum::<f64>() / bests.len() as f64;
        rows.push(SummaryRow::new(Metric::MeanBestOfK, method, "", None, mean));
    }
    if kind == ExperimentKind::PruningSweep {
        return Ok(rows);
    }

    let baseline = table.iter().find(|(m, _)| m == BASELINE_LABEL).map(|(_, b)| b);
    for (a, best_a) in &table {
        for (b, best_b) in &table {
            if a == b {
                continue;
            }
            for (&f, &(va, _)) in best_a {
                if let Some(&(vb, _)) = best_b.get(&f) {
                    rows.push(SummaryRow::new(Metric::Difference, a, b, Some(f), va as f64 - vb as f64));
                }
            }
            let (Some(base), false, false) = (baseline, a == BASELINE_LABEL, b == BASELINE_LABEL) else {
                continue;
            };
            let mut omitted = 0usize;
            for (&f, &(va, _)) in best_a {
                let (Some(&(vb, _)), Some(&(vr, _))) = (best_b.get(&f), base.get(&f)) else {
                    continue;
                };
                match baseline_improvement(va, vb, vr) {
                    Some(x) => rows.push(SummaryRow::new(Metric::Improvement, a, b, Some(f), x)),
                    None => omitted += 1,
                }
            }
            rows.push(SummaryRow::new(Metric::ImprovementOmitted, a, b, None, omitted as f64));
        }
    }
    Ok(rows)
}

// ---- persistence ----

pub fn records_to_jsonl(records: &[RunRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn records_from_jsonl(text: &str) -> Result<Vec<RunRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(i + 1, e.to_string())))
        .collect()
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(["metric", "method", "other", "formula_id", "value"])?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
}

pub fn summary_from_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub meta: PathBuf,
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    experiment: &'a str,
    config: Option<&'a ExperimentConfig>,
    records: usize,
    notes: &'a [&'a str],
}

const META_NOTES: &[&str] = &[
    "samples are independent seeded classical solver runs; hardware embeddings have no classical analogue",
];

/// Writes `<experiment>_<timestamp>_records.jsonl`, `_summary.csv` and
/// `_meta.json` into `dir`.
pub fn emit(
    kind: ExperimentKind,
    records: &[RunRecord],
    summary: &[SummaryRow],
    config: Option<&ExperimentConfig>,
    dir: &Path,
) -> Result<EmittedFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let stem = format!("{}_{stamp}", kind.label());
    let files = EmittedFiles {
        records: dir.join(format!("{stem}_records.jsonl")),
        summary: dir.join(format!("{stem}_summary.csv")),
        meta: dir.join(format!("{stem}_meta.json")),
    };
    write_file(&files.records, records_to_jsonl(records)?.as_bytes())?;
    write_file(&files.summary, summary_to_csv(summary)?.as_bytes())?;
    let meta = Meta {
        experiment: kind.label(),
        config,
        records: records.len(),
        notes: META_NOTES,
    };
    write_file(&files.meta, (serde_json::to_string_pretty(&meta)? + "\n").as_bytes())?;
    Ok(files)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
