//! C ABI over the `satqubo` library.
//!
//! Objects are opaque heap handles released with their `*_free` function.
//! Every fallible call returns an [`SqStatus`]; on failure the message is
//! available from [`sq_last_error`] on the same thread. Strings returned
//! through out-parameters are owned by the caller and released with
//! [`sq_string_free`]. Bit vectors are passed as one byte per variable,
//! zero meaning false.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use satqubo::formula::{generate_balanced, parse_dimacs, write_dimacs, Assignment, CnfFormula};
use satqubo::qubo::{parse_qubo, prune, write_qubo, PruneStrategy, QuboMatrix, VariableLayout};
use satqubo::solvers::{solve, SolverConfig, SolverKind};
use satqubo::transform::{assemble, decode, resolve_spec};
use satqubo::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    TooLarge = 5,
    UnknownSpec = 6,
    Utf8 = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqPrune {
    Min = 0,
    Random = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqSolver {
    Tabu = 0,
    Sa = 1,
    Brute = 2,
    Random = 3,
}

/// A parsed or generated 3-CNF formula.
pub struct SqFormula(CnfFormula);

/// A QUBO matrix together with its problem/auxiliary variable layout.
pub struct SqQubo {
    matrix: QuboMatrix,
    layout: VariableLayout,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SqStatus, msg: impl Into<String>) -> SqStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> SqStatus {
    let status = match e {
        Error::Parse { .. } => SqStatus::Parse,
        Error::Invalid(_) | Error::Serde(_) => SqStatus::InvalidArgument,
        Error::TooLarge { .. } => SqStatus::TooLarge,
        Error::UnknownSpec(_) => SqStatus::UnknownSpec,
        Error::Io { .. } => SqStatus::Io,
    };
    fail(status, e.to_string())
}

/// Runs `f`, clearing the last error first and turning panics into
/// [`SqStatus::Panic`].
fn guard<F: FnOnce() -> SqStatus>(f: F) -> SqStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SqStatus::Panic, "internal panic"),
    }
}

macro_rules! try_sq {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, SqStatus> {
    if p.is_null() {
        return Err(fail(SqStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SqStatus::Utf8, "string argument is not valid UTF-8"))
}

unsafe fn bits_arg(bits: *const u8, len: usize) -> Result<Vec<bool>, SqStatus> {
    if bits.is_null() && len > 0 {
        return Err(fail(SqStatus::NullPointer, "null bit buffer"));
    }
    if len == 0 {
        return Ok(Vec::new());
    }
    Ok(std::slice::from_raw_parts(bits, len).iter().map(|&b| b != 0).collect())
}

unsafe fn write_out<T>(out: *mut T, value: T) -> SqStatus {
    if out.is_null() {
        return fail(SqStatus::NullPointer, "null output pointer");
    }
    out.write(value);
    SqStatus::Ok
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> SqStatus {
    match CString::new(s) {
        Ok(c) => write_out(out, c.into_raw()),
        Err(_) => fail(SqStatus::InvalidArgument, "output contains a nul byte"),
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn sq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---- formulas ----

/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_formula_parse_dimacs(text: *const c_char, out: *mut *mut SqFormula) -> SqStatus {
    guard(|| {
        let text = match str_arg(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let f = try_sq!(parse_dimacs(text));
        write_out(out, Box::into_raw(Box::new(SqFormula(f))))
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_formula_generate_balanced(
    num_vars: usize,
    num_clauses: usize,
    seed: u64,
    out: *mut *mut SqFormula,
) -> SqStatus {
    guard(|| {
        let f = try_sq!(generate_balanced(num_vars, num_clauses, seed));
        write_out(out, Box::into_raw(Box::new(SqFormula(f))))
    })
}

/// # Safety
/// `f` must be null or a live formula handle.
#[no_mangle]
pub unsafe extern "C" fn sq_formula_num_vars(f: *const SqFormula) -> usize {
    f.as_ref().map_or(0, |f| f.0.num_vars())
}

/// # Safety
/// `f` must be null or a live formula handle.
#[no_mangle]
pub unsafe extern "C" fn sq_formula_num_clauses(f: *const SqFormula) -> usize {
    f.as_ref().map_or(0, |f| f.0.num_clauses())
}

/// # Safety
/// `f` must be a live formula handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_formula_to_dimacs(f: *const SqFormula, out: *mut *mut c_char) -> SqStatus {
    guard(|| match f.as_ref() {
        Some(f) => write_string(out, write_dimacs(&f.0)),
        None => fail(SqStatus::NullPointer, "null formula"),
    })
}

/// Counts clauses satisfied by `bits` (one byte per variable, `len` must
/// equal the variable count).
///
/// # Safety
/// `f` must be a live formula handle, `bits` must hold `len` bytes and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_formula_count_satisfied(
    f: *const SqFormula,
    bits: *const u8,
    len: usize,
    out: *mut usize,
) -> SqStatus {
    guard(|| {
        let Some(f) = f.as_ref() else {
            return fail(SqStatus::NullPointer, "null formula");
        };
        let bits = match bits_arg(bits, len) {
            Ok(b) => b,
            Err(s) => return s,
        };
        let n = try_sq!(f.0.count_satisfied(&Assignment(bits)));
        write_out(out, n)
    })
}

/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sq_formula_free(f: *mut SqFormula) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

// ---- QUBOs ----

/// Builds the QUBO of `f` with a built-in transformation name or a bundle
/// directory path.
///
/// # Safety
/// `f` must be a live formula handle, `method` a nul-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_qubo_assemble(f: *const SqFormula, method: *const c_char, out: *mut *mut SqQubo) -> SqStatus {
    guard(|| {
        let Some(f) = f.as_ref() else {
            return fail(SqStatus::NullPointer, "null formula");
        };
        let method = match str_arg(method) {
            Ok(m) => m,
            Err(s) => return s,
        };
        let spec = try_sq!(resolve_spec(method));
        let (matrix, layout) = assemble(&f.0, &spec);
        write_out(out, Box::into_raw(Box::new(SqQubo { matrix, layout })))
    })
}

/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_qubo_parse(text: *const c_char, out: *mut *mut SqQubo) -> SqStatus {
    guard(|| {
        let text = match str_arg(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let (matrix, layout) = try_sq!(parse_qubo(text));
        write_out(out, Box::into_raw(Box::new(SqQubo { matrix, layout })))
    })
}

/// # Safety
/// `q` must be a live QUBO handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_qubo_to_text(q: *const SqQubo, out: *mut *mut c_char) -> SqStatus {
    guard(|| match q.as_ref() {
        Some(q) => write_string(out, write_qubo(&q.matrix, Some(&q.layout), &[])),
        None => fail(SqStatus::NullPointer, "null qubo"),
    })
}

/// # Safety
/// `q` must be null or a live QUBO handle.
#[no_mangle]
pub unsafe extern "C" fn sq_qubo_dim(q: *const SqQubo) -> usize {
    q.as_ref().map_or(0, |q| q.matrix.dim())
}

/// # Safety
/// `q` must be null or a live QUBO handle.
#[no_mangle]
pub unsafe extern "C" fn sq_qubo_num_problem_vars(q: *const SqQubo) -> usize {
    q.as_ref().map_or(0, |q| q.layout.num_problem_vars)
}

/// # Safety
/// `q` must be null or a live QUBO handle.
#[no_mangle]
pub unsafe extern "C" fn sq_qubo_nnz_offdiag(q: *const SqQubo) -> usize {
    q.as_ref().map_or(0, |q| q.matrix.nnz_offdiag())
}

/// # Safety
/// `q` must be a live QUBO handle, `bits` must hold `len` bytes and `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_qubo_energy(q: *const SqQubo, bits: *const u8, len: usize, out: *mut i64) -> SqStatus {
    guard(|| {
        let Some(q) = q.as_ref() else {
            return fail(SqStatus::NullPointer, "null qubo");
        };
        let bits = match bits_arg(bits, len) {
            Ok(b) => b,
            Err(s) => return s,
        };
        let e = try_sq!(q.matrix.energy(&bits));
        write_out(out, e)
    })
}

/// Returns a new handle with `count` off-diagonal entries removed.
///
/// # Safety
/// `q` must be a live QUBO handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_qubo_prune(
    q: *const SqQubo,
    strategy: SqPrune,
    count: usize,
    seed: u64,
    out: *mut *mut SqQubo,
) -> SqStatus {
    guard(|| {
        let Some(q) = q.as_ref() else {
            return fail(SqStatus::NullPointer, "null qubo");
        };
        let strategy = match strategy {
            SqPrune::Min => PruneStrategy::Min,
            SqPrune::Random => PruneStrategy::Random,
        };
        let matrix = try_sq!(prune(&q.matrix, strategy, count, seed));
        let layout = q.layout.clone();
        write_out(out, Box::into_raw(Box::new(SqQubo { matrix, layout })))
    })
}

/// Runs `samples` independent solver runs and writes the lowest-energy
/// sample (earliest run on ties) to `out_bits`, which must hold
/// `sq_qubo_dim(q)` bytes. `iterations` is the tabu iteration count or the
/// annealing sweep count; zero selects the default.
///
/// # Safety
/// `q` must be a live QUBO handle, `out_bits` must hold `out_len` bytes and
/// `out_energy` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sq_qubo_solve(
    q: *const SqQubo,
    solver: SqSolver,
    samples: usize,
    iterations: u64,
    seed: u64,
    out_bits: *mut u8,
    out_len: usize,
    out_energy: *mut i64,
) -> SqStatus {
    guard(|| {
        let Some(q) = q.as_ref() else {
            return fail(SqStatus::NullPointer, "null qubo");
        };
        if out_bits.is_null() || out_energy.is_null() {
            return fail(SqStatus::NullPointer, "null output pointer");
        }
        if out_len < q.matrix.dim() {
            return fail(SqStatus::BufferTooSmall, format!("need {} bytes", q.matrix.dim()));
        }
        let kind = match solver {
            SqSolver::Tabu => SolverKind::Tabu,
            SqSolver::Sa => SolverKind::Sa,
            SqSolver::Brute => SolverKind::Brute,
            SqSolver::Random => SolverKind::Random,
        };
        let mut config = SolverConfig {
            kind,
            samples,
            seed,
            ..SolverConfig::default()
        };
        if iterations > 0 {
            match kind {
                SolverKind::Sa => config.sa_sweeps = iterations as usize,
                _ => config.iteration_limit = Some(iterations),
            }
        }
        let results = try_sq!(solve(&q.matrix, &config));
        let Some(best) = results.iter().min_by_key(|r| (r.energy, r.run_index)) else {
            return fail(SqStatus::InvalidArgument, "no samples");
        };
        let dst = std::slice::from_raw_parts_mut(out_bits, out_len);
        for (d, &b) in dst.iter_mut().zip(&best.bits) {
            *d = b as u8;
        }
        write_out(out_energy, best.energy)
    })
}

/// Copies the problem-variable part of `bits` into `out_assignment`,
/// which must hold `sq_qubo_num_problem_vars(q)` bytes.
///
/// # Safety
/// `q` must be a live QUBO handle, `bits` must hold `len` bytes and
/// `out_assignment` must hold `out_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sq_qubo_decode(
    q: *const SqQubo,
    bits: *const u8,
    len: usize,
    out_assignment: *mut u8,
    out_len: usize,
) -> SqStatus {
    guard(|| {
        let Some(q) = q.as_ref() else {
            return fail(SqStatus::NullPointer, "null qubo");
        };
        let bits = match bits_arg(bits, len) {
            Ok(b) => b,
            Err(s) => return s,
        };
        let a = try_sq!(decode(&bits, &q.layout));
        if out_assignment.is_null() {
            return fail(SqStatus::NullPointer, "null output buffer");
        }
        if out_len < a.len() {
            return fail(SqStatus::BufferTooSmall, format!("need {} bytes", a.len()));
        }
        let dst = std::slice::from_raw_parts_mut(out_assignment, out_len);
        for (d, &b) in dst.iter_mut().zip(a.bits()) {
            *d = b as u8;
        }
        SqStatus::Ok
    })
}

/// # Safety
/// `q` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sq_qubo_free(q: *mut SqQubo) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}
