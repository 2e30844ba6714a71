use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use satqubo::formula::{count_satisfied, generator_comment, parse_dimacs, write_dimacs_with_comments};
use satqubo::harness::{self, DatasetConfig, ExperimentConfig};
use satqubo::pattern_search::{search_3x3, search_4x4, ValueSet};
use satqubo::qubo::{parse_qubo, pruning_schedule, write_qubo, PruneStrategy, PRUNE_STAGES};
use satqubo::solvers::{bitstring, solve, SolverConfig, SolverKind};
use satqubo::transform::{assemble, decode, parse_pattern, resolve_spec, verify_pattern, write_pattern_dir, Criterion, PatternManifest};
use satqubo::{Error, Result};

#[derive(Parser)]
#[command(name = "satqubo", version, about = "MAX-3SAT to QUBO transformations and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate balanced random 3-SAT formulas as DIMACS files.
    Gen {
        #[arg(long)]
        vars: usize,
        #[arg(long)]
        clauses: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the QUBO of a formula with a named transformation or bundle directory.
    Transform {
        #[arg(long)]
        method: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove off-diagonal entries up to a pruning stage (0..=10).
    Prune {
        #[arg(long)]
        strategy: PruneStrategy,
        #[arg(long)]
        stage: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a QUBO and write one JSON line per run.
    Solve {
        #[arg(long, default_value = "tabu")]
        solver: SolverKind,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tabu iterations or annealing sweeps.
        #[arg(long)]
        iter: Option<u64>,
        #[arg(long)]
        time_limit_ms: Option<u64>,
        #[arg(long = "in")]
        input: PathBuf,
        /// Formula used to decode samples and count satisfied clauses.
        #[arg(long)]
        cnf: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Enumerate clause patterns over a value set.
    Search {
        #[arg(long)]
        dim: usize,
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long = "type")]
        clause_type: u8,
        #[arg(long, default_value = "exact")]
        criterion: Criterion,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a pattern file against a clause type. Exits 1 if it fails.
    Verify {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long = "type")]
        clause_type: Option<u8>,
        #[arg(long, default_value = "exact")]
        criterion: Criterion,
    },
    /// Run an experiment from a JSON config and write records and summary.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct SolveLine {
    run_index: usize,
    energy: i64,
    #[serde(with = "bitstring")]
    bits: Vec<bool>,
    seed_used: u64,
    elapsed_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    satisfied: Option<usize>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen {
            vars,
            clauses,
            count,
            seed,
            out,
        } => {
            let dataset = DatasetConfig {
                count,
                num_vars: vars,
                num_clauses: clauses,
                seed,
            };
            for (i, formula) in dataset.generate()?.iter().enumerate() {
                let text = write_dimacs_with_comments(formula, &[generator_comment(dataset.formula_seed(i))]);
                let path = out.join(format!("formula_{i:04}.cnf"));
                write(&path, &text)?;
                println!("{}", path.display());
            }
        }
        Command::Transform { method, input, out } => {
            let formula = parse_dimacs(&read(&input)?)?;
            let spec = resolve_spec(&method)?;
            let (q, layout) = assemble(&formula, &spec);
            write(&out, &write_qubo(&q, Some(&layout), &[format!("method {}", spec.name)]))?;
            println!("dim {} entries {}", q.dim(), q.num_entries());
        }
        Command::Prune {
            strategy,
            stage,
            seed,
            input,
            out,
        } => {
            if stage > PRUNE_STAGES {
                return Err(Error::Invalid(format!("stage must be in 0..={PRUNE_STAGES}")));
            }
            let (q, layout) = parse_qubo(&read(&input)?)?;
            let pruned = pruning_schedule(&q, strategy, seed).swap_remove(stage);
            let comment = format!("pruned {} stage {stage} removed {}", strategy.label(), pruned.removed_cumulative);
            write(&out, &write_qubo(&pruned.matrix, Some(&layout), &[comment]))?;
            println!("removed {}", pruned.removed_cumulative);
        }
        Command::Solve {
            solver,
            samples,
            seed,
            iter,
            time_limit_ms,
            input,
            cnf,
            out,
        } => {
            let (q, layout) = parse_qubo(&read(&input)?)?;
            let formula = cnf.map(|p| read(&p).and_then(|t| parse_dimacs(&t))).transpose()?;
            let mut config = SolverConfig {
                kind: solver,
                samples,
                seed,
                time_limit_ms,
                ..SolverConfig::default()
            };
            match solver {
                SolverKind::Sa => config.sa_sweeps = iter.map_or(config.sa_sweeps, |n| n as usize),
                _ => config.iteration_limit = iter,
            }
            let mut text = String::new();
            for r in solve(&q, &config)? {
                let satisfied = match &formula {
                    Some(f) => Some(count_satisfied(f, &decode(&r.bits, &layout)?)?),
                    None => None,
                };
                let line = SolveLine {
                    run_index: r.run_index,
                    energy: r.energy,
                    bits: r.bits,
                    seed_used: r.seed_used,
                    elapsed_ms: r.elapsed_ms,
                    satisfied,
                };
                text.push_str(&serde_json::to_string(&line)?);
                text.push('\n');
            }
            write(&out, &text)?;
        }
        Command::Search {
            dim,
            values,
            clause_type,
            criterion,
            out,
        } => {
            if clause_type > 3 {
                return Err(Error::Invalid("clause type must be 0..=3".into()));
            }
            let set = ValueSet::parse(&values)?;
            let found = match (dim, criterion) {
                (3, c) => search_3x3(&set, clause_type, c),
                (4, Criterion::Exact) => search_4x4(&set, clause_type)?,
                (4, Criterion::Approx) => return Err(Error::Invalid("4x4 search supports the exact criterion only".into())),
                _ => return Err(Error::Invalid("dim must be 3 or 4".into())),
            };
            let patterns: Vec<_> = found.into_iter().map(|p| (p, clause_type)).collect();
            let manifest = PatternManifest {
                name: format!("search_{dim}x{dim}_type{clause_type}"),
                criterion: Some(criterion),
                values: Some(set.values().to_vec()),
                notes: Vec::new(),
                patterns: Vec::new(),
            };
            let name = manifest.name.clone();
            write_pattern_dir(&out, &name, &patterns, manifest)?;
            println!("found {}", patterns.len());
        }
        Command::Verify {
            pattern,
            clause_type,
            criterion,
        } => {
            let (p, file_type) = parse_pattern(&read(&pattern)?)?;
            let t = clause_type.unwrap_or(file_type);
            if t > 3 {
                return Err(Error::Invalid("clause type must be 0..=3".into()));
            }
            let report = verify_pattern(&p, t, criterion);
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !report.valid {
                return Err(Error::Invalid(format!("pattern fails {} for clause type {t}", criterion.label())));
            }
        }
        Command::Experiment { config, out } => {
            let cfg: ExperimentConfig = serde_json::from_str(&read(&config)?)?;
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| Error::Invalid("no output directory given".into()))?;
            let result = harness::run_experiment(&cfg)?;
            let files = harness::emit(result.kind, &result.records, &result.summary, Some(&cfg), &dir)?;
            println!("{}", files.records.display());
            println!("{}", files.summary.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
