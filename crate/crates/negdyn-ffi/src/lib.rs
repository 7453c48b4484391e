//! C ABI over the negdyn library.
//!
//! Callers hold an opaque model handle describing one configuration
//! (excitation case plus ensemble sizes); every query takes the handle
//! plus output pointers and returns a status code. No function unwinds
//! across the boundary, writes to its outputs on failure, or takes
//! ownership of caller memory except through the documented free call.
//!
//! The C header is generated into `include/negdyn.h` at build time.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use negdyn::config::{validate_config, EnsembleConfig, ExcitationCase};
use negdyn::dynamics::{coeff_closed, COEFF_COUNT};
use negdyn::error::Error;
use negdyn::negativity::{negativity, stationary_negativity};
use negdyn::oracle::oracle_negativity;

/// Result of every fallible call. Zero means success; anything else
/// leaves the output parameters untouched.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NegdynStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// The case code or the ensemble sizes describe no valid model.
    InvalidConfig = 2,
    /// The requested computation needs more qubits than the given cap.
    CapExceeded = 3,
    /// Integration or eigensolving failed to converge.
    NumericalFailure = 4,
    /// An internal invariant was violated; the library state is still
    /// sound, the call simply did nothing.
    InternalPanic = 5,
}

/// Excitation case selector for [`negdyn_model_new`]: 0 places the
/// initial excitation on a shared qubit, 1 inside one ensemble.
pub const NEGDYN_CASE_COMMON: u32 = 0;
/// See [`NEGDYN_CASE_COMMON`].
pub const NEGDYN_CASE_SIDE: u32 = 1;

/// Opaque model handle: one excitation case and one geometry.
pub struct NegdynModel {
    cfg: EnsembleConfig,
    case: ExcitationCase,
}

fn status_of(err: &Error) -> NegdynStatus {
    match err {
        Error::InvalidConfig(_) => NegdynStatus::InvalidConfig,
        Error::CapExceeded { .. } => NegdynStatus::CapExceeded,
        Error::IntegrationDiverged { .. } | Error::EigenNoConvergence(_) => {
            NegdynStatus::NumericalFailure
        }
    }
}

fn guarded<F>(f: F) -> NegdynStatus
where
    F: FnOnce() -> NegdynStatus,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => NegdynStatus::InternalPanic,
    }
}

/// Creates a model. `case` is [`NEGDYN_CASE_COMMON`] or
/// [`NEGDYN_CASE_SIDE`]; `side_count` is the qubits per ensemble and
/// `common_count` the qubits shared by both environments. On success
/// writes a handle to `out`; release it with [`negdyn_model_free`].
#[no_mangle]
pub extern "C" fn negdyn_model_new(
    case: u32,
    side_count: u32,
    common_count: u32,
    out: *mut *mut NegdynModel,
) -> NegdynStatus {
    guarded(|| {
        if out.is_null() {
            return NegdynStatus::NullArgument;
        }
        let case = match case {
            NEGDYN_CASE_COMMON => ExcitationCase::CommonSite,
            NEGDYN_CASE_SIDE => ExcitationCase::SideSite,
            _ => return NegdynStatus::InvalidConfig,
        };
        let cfg = EnsembleConfig::new(side_count, common_count);
        match validate_config(cfg, case) {
            Ok(cfg) => {
                let model = Box::new(NegdynModel { cfg, case });
                unsafe { out.write(Box::into_raw(model)) };
                NegdynStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Releases a handle from [`negdyn_model_new`]. Null is a no-op.
#[no_mangle]
pub extern "C" fn negdyn_model_free(model: *mut NegdynModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

unsafe fn model_ref<'a>(model: *const NegdynModel) -> Option<&'a NegdynModel> {
    unsafe { model.as_ref() }
}

/// Closed-form negativity between the two ensembles at time `t`.
#[no_mangle]
pub extern "C" fn negdyn_negativity(
    model: *const NegdynModel,
    t: f64,
    out: *mut f64,
) -> NegdynStatus {
    guarded(|| {
        let Some(m) = (unsafe { model_ref(model) }) else {
            return NegdynStatus::NullArgument;
        };
        if out.is_null() {
            return NegdynStatus::NullArgument;
        }
        if !t.is_finite() || t < 0.0 {
            return NegdynStatus::InvalidConfig;
        }
        let value = negativity(m.case, t, m.cfg.side_count, m.cfg.common_count).value;
        unsafe { out.write(value) };
        NegdynStatus::Ok
    })
}

/// Long-time limit of the negativity.
#[no_mangle]
pub extern "C" fn negdyn_stationary_negativity(
    model: *const NegdynModel,
    out: *mut f64,
) -> NegdynStatus {
    guarded(|| {
        let Some(m) = (unsafe { model_ref(model) }) else {
            return NegdynStatus::NullArgument;
        };
        if out.is_null() {
            return NegdynStatus::NullArgument;
        }
        let value = stationary_negativity(m.case, m.cfg.side_count, m.cfg.common_count);
        unsafe { out.write(value) };
        NegdynStatus::Ok
    })
}

/// Number of coefficient slots written by [`negdyn_coefficients`].
/// Spelled as a literal so the generated header carries the value.
pub const NEGDYN_COEFF_COUNT: usize = 11;

const _: () = assert!(NEGDYN_COEFF_COUNT == COEFF_COUNT);

/// Closed-form state coefficients at time `t`, written into an
/// `out` buffer of [`NEGDYN_COEFF_COUNT`] doubles.
#[no_mangle]
pub extern "C" fn negdyn_coefficients(
    model: *const NegdynModel,
    t: f64,
    out: *mut f64,
) -> NegdynStatus {
    guarded(|| {
        let Some(m) = (unsafe { model_ref(model) }) else {
            return NegdynStatus::NullArgument;
        };
        if out.is_null() {
            return NegdynStatus::NullArgument;
        }
        if !t.is_finite() || t < 0.0 {
            return NegdynStatus::InvalidConfig;
        }
        let c = coeff_closed(m.case, t, m.cfg.side_count, m.cfg.common_count);
        for (i, &v) in c.values().iter().enumerate() {
            unsafe { out.add(i).write(v) };
        }
        NegdynStatus::Ok
    })
}

/// Brute-force negativity from integrating the full master equation,
/// for cross-checking the closed form. Refuses models with more than
/// `cap` total qubits.
#[no_mangle]
pub extern "C" fn negdyn_oracle_negativity(
    model: *const NegdynModel,
    t: f64,
    cap: u32,
    out: *mut f64,
) -> NegdynStatus {
    guarded(|| {
        let Some(m) = (unsafe { model_ref(model) }) else {
            return NegdynStatus::NullArgument;
        };
        if out.is_null() {
            return NegdynStatus::NullArgument;
        }
        if !t.is_finite() || t < 0.0 {
            return NegdynStatus::InvalidConfig;
        }
        match oracle_negativity(m.cfg, m.case, t, cap) {
            Ok(value) => {
                unsafe { out.write(value) };
                NegdynStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Total qubit count 2N + n of the model.
#[no_mangle]
pub extern "C" fn negdyn_total_qubits(
    model: *const NegdynModel,
    out: *mut u32,
) -> NegdynStatus {
    guarded(|| {
        let Some(m) = (unsafe { model_ref(model) }) else {
            return NegdynStatus::NullArgument;
        };
        if out.is_null() {
            return NegdynStatus::NullArgument;
        }
        unsafe { out.write(m.cfg.total_qubits()) };
        NegdynStatus::Ok
    })
}

/// Library version as a static NUL-terminated string; never null, never
/// freed by the caller.
#[no_mangle]
pub extern "C" fn negdyn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
