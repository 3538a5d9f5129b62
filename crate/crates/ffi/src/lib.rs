//! C interface to `nqs-core`.
//!
//! Objects cross the boundary as opaque handles created by `nqs_*_new` style
//! constructors and released by the matching `*_free`. Every fallible call
//! returns an [`NqsStatus`]; on failure the message is available from
//! [`nqs_last_error`] on the same thread. Strings returned to the caller are
//! owned by the caller and released with [`nqs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nqs_core::harness::{train, ExperimentConfig, RunRecord};
use nqs_core::hilbert::SymmetrySector;
use nqs_core::operators::{build_j1j2, build_tfi, load_pauli_file, marshall_transform, PauliHamiltonian};
use nqs_core::oracle::exact_ground_state;
use nqs_core::NqsError;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NqsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Resource = 4,
    Parse = 5,
    Validation = 6,
    Numerical = 7,
    Config = 8,
    Io = 9,
    Serialization = 10,
    OutOfRange = 11,
    Panic = 12,
}

/// Hamiltonian as a sum of Pauli strings.
pub struct NqsHamiltonian(PauliHamiltonian);

/// Experiment configuration.
pub struct NqsConfig(ExperimentConfig);

/// Record of one training run.
pub struct NqsRun(RunRecord);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &NqsError) -> NqsStatus {
    match e {
        NqsError::Domain(_) => NqsStatus::Domain,
        NqsError::Resource(_) => NqsStatus::Resource,
        NqsError::Parse { .. } => NqsStatus::Parse,
        NqsError::Validation(_) => NqsStatus::Validation,
        NqsError::LmStep(_) | NqsError::Solver(_) => NqsStatus::Numerical,
        NqsError::Config(_) => NqsStatus::Config,
        NqsError::Io(_) => NqsStatus::Io,
        NqsError::Json(_) | NqsError::Csv(_) => NqsStatus::Serialization,
    }
}

struct Failure(NqsStatus, String);

impl From<NqsError> for Failure {
    fn from(e: NqsError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> NqsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NqsStatus::Ok
        }
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            NqsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure(NqsStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(NqsStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| Failure(NqsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(Failure(NqsStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

fn c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(NqsStatus::Serialization, "string contains a nul byte".into()))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn nqs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn nqs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nqs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Transverse-field Ising ring with `n_sites` sites and field `h`.
///
/// # Safety
/// `out` must be a valid pointer to write a handle into.
#[no_mangle]
pub unsafe extern "C" fn nqs_hamiltonian_tfi(n_sites: usize, h: f64, out: *mut *mut NqsHamiltonian) -> NqsStatus {
    guard(|| {
        let ham = build_tfi(n_sites, h)?;
        write_out(out, Box::into_raw(Box::new(NqsHamiltonian(ham))))
    })
}

/// J1-J2 Heisenberg ring, optionally with the Marshall sign rotation applied.
///
/// # Safety
/// `out` must be a valid pointer to write a handle into.
#[no_mangle]
pub unsafe extern "C" fn nqs_hamiltonian_j1j2(
    n_sites: usize,
    j2: f64,
    marshall: bool,
    out: *mut *mut NqsHamiltonian,
) -> NqsStatus {
    guard(|| {
        let mut ham = build_j1j2(n_sites, j2)?;
        if marshall {
            ham = marshall_transform(&ham)?;
        }
        write_out(out, Box::into_raw(Box::new(NqsHamiltonian(ham))))
    })
}

/// Loads a Pauli-sum text file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqs_hamiltonian_load(path: *const c_char, out: *mut *mut NqsHamiltonian) -> NqsStatus {
    guard(|| {
        let ham = load_pauli_file(str_arg(path, "path")?)?;
        write_out(out, Box::into_raw(Box::new(NqsHamiltonian(ham))))
    })
}

/// # Safety
/// `h` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn nqs_hamiltonian_free(h: *mut NqsHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqs_hamiltonian_n_sites(h: *const NqsHamiltonian, out: *mut usize) -> NqsStatus {
    guard(|| write_out(out, handle(h, "hamiltonian")?.0.n_sites()))
}

/// # Safety
/// `h` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqs_hamiltonian_n_terms(h: *const NqsHamiltonian, out: *mut usize) -> NqsStatus {
    guard(|| write_out(out, handle(h, "hamiltonian")?.0.terms().len()))
}

/// Exact ground-state energy over the full Hilbert space.
///
/// # Safety
/// `h` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqs_hamiltonian_ground_energy(h: *const NqsHamiltonian, out: *mut f64) -> NqsStatus {
    guard(|| {
        let sol = exact_ground_state(&handle(h, "hamiltonian")?.0, SymmetrySector::Unrestricted)?;
        write_out(out, sol.e0)
    })
}

/// Parses a TOML experiment configuration; absent keys take preset values.
///
/// # Safety
/// `toml` must be a nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqs_config_from_toml(toml: *const c_char, out: *mut *mut NqsConfig) -> NqsStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_toml_str(str_arg(toml, "toml")?)?;
        cfg.validate()?;
        write_out(out, Box::into_raw(Box::new(NqsConfig(cfg))))
    })
}

/// Serializes the full configuration as TOML into a new string.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqs_config_to_toml(cfg: *const NqsConfig, out: *mut *mut c_char) -> NqsStatus {
    guard(|| {
        let text = handle(cfg, "config")?.0.to_toml()?;
        write_out(out, c_string(text)?)
    })
}

/// # Safety
/// `cfg` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn nqs_config_free(cfg: *mut NqsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Trains one seed of `cfg`. A run that fails part way still produces a
/// handle; its summary carries the failure.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqs_train(cfg: *const NqsConfig, seed: u64, out: *mut *mut NqsRun) -> NqsStatus {
    guard(|| {
        let rec = train(&handle(cfg, "config")?.0, seed)?;
        write_out(out, Box::into_raw(Box::new(NqsRun(rec))))
    })
}

/// # Safety
/// `run` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn nqs_run_free(run: *mut NqsRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqs_run_epochs(run: *const NqsRun, out: *mut usize) -> NqsStatus {
    guard(|| write_out(out, handle(run, "run")?.0.rows.len()))
}

/// Batch energy of the 0-based epoch `index`.
///
/// # Safety
/// `run` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqs_run_energy(run: *const NqsRun, index: usize, out: *mut f64) -> NqsStatus {
    guard(|| {
        let rows = &handle(run, "run")?.0.rows;
        let row = rows
            .get(index)
            .ok_or_else(|| Failure(NqsStatus::OutOfRange, format!("epoch {index} of {}", rows.len())))?;
        write_out(out, row.energy_re)
    })
}

/// First epoch at which the run met its threshold, or 0 when it never did.
///
/// # Safety
/// `run` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqs_run_n_conv(run: *const NqsRun, out: *mut usize) -> NqsStatus {
    guard(|| write_out(out, handle(run, "run")?.0.summary.n_conv.unwrap_or(0)))
}

/// Run summary as a JSON document in a new string.
///
/// # Safety
/// `run` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nqs_run_summary_json(run: *const NqsRun, out: *mut *mut c_char) -> NqsStatus {
    guard(|| {
        let text = serde_json::to_string(&handle(run, "run")?.0.summary).map_err(NqsError::from)?;
        write_out(out, c_string(text)?)
    })
}

/// Writes the per-epoch CSV, summary and parameters into directory `dir`.
///
/// # Safety
/// `run` must be a live handle; `dir` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nqs_run_write(run: *const NqsRun, dir: *const c_char) -> NqsStatus {
    guard(|| {
        handle(run, "run")?.0.write(str_arg(dir, "dir")?)?;
        Ok(())
    })
}
