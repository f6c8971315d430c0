//! C ABI over `flagkernel`.
//!
//! Objects are opaque handles created by `fk_*_new`/`fk_*_parse` and released
//! with the matching `fk_*_free`. Every fallible call returns an `FkStatus`;
//! on failure `fk_last_error` gives the message for the calling thread.
//! Strings handed out by the library are released with `fk_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use flagkernel::cli::RunConfig;
use flagkernel::graded::{GradedLayout, NormVariant, OrderVector};
use flagkernel::groupconv::{GroupLaw, NilpotentAlgebra};
use flagkernel::kernels::KernelModel;
use flagkernel::verify::run_suite;
use flagkernel::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Invalid layout, order, algebra or configuration.
    InvalidInput = 3,
    /// Expression syntax error; the message carries the position.
    Parse = 4,
    /// Numerical failure (quadrature, regression, resolution, ...).
    Runtime = 5,
    /// A panic was caught at the boundary.
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> FkStatus {
    match e {
        Error::Parse { .. } => FkStatus::Parse,
        Error::Layout(_) | Error::Shape { .. } | Error::Argument { .. } | Error::Algebra(_) | Error::Class(_) | Error::Config(_) => FkStatus::InvalidInput,
        _ => FkStatus::Runtime,
    }
}

fn fail(e: Error) -> FkStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn guard(f: impl FnOnce() -> FkStatus) -> FkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned()).unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            FkStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, FkStatus> {
    if p.is_null() {
        set_error(format!("{name} is null"));
        return Err(FkStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        FkStatus::InvalidUtf8
    })
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! nonnull {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_error(concat!(stringify!($p), " is null"));
            return FkStatus::NullPointer;
        })+
    };
}

fn give_string(s: String, out: *mut *mut c_char) {
    let c = CString::new(s.replace('\0', " ")).unwrap_or_default();
    unsafe { *out = c.into_raw() };
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn fk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn fk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- layouts -------------------------------------------------------------

/// Graded layout handle.
pub struct FkLayout(GradedLayout);

/// Parses `p:n,p:n,...`. `flag_blocks` nonzero allows equal consecutive exponents.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fk_layout_parse(spec: *const c_char, flag_blocks: i32, out: *mut *mut FkLayout) -> FkStatus {
    guard(|| {
        nonnull!(out);
        let spec = tri!(str_arg(spec, "spec"));
        match GradedLayout::parse_spec(spec, flag_blocks != 0) {
            Ok(l) => {
                *out = Box::into_raw(Box::new(FkLayout(l)));
                FkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `l` must come from `fk_layout_parse` or be null.
#[no_mangle]
pub unsafe extern "C" fn fk_layout_free(l: *mut FkLayout) {
    if !l.is_null() {
        drop(Box::from_raw(l));
    }
}

/// Number of coordinates, or 0 for a null handle.
///
/// # Safety
/// `l` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fk_layout_dim(l: *const FkLayout) -> usize {
    l.as_ref().map_or(0, |l| l.0.total_dim())
}

/// Homogeneous dimension `Q`, or NaN for a null handle.
///
/// # Safety
/// `l` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fk_layout_homogeneous_dim(l: *const FkLayout) -> f64 {
    l.as_ref().map_or(f64::NAN, |l| l.0.q_f64())
}

/// Homogeneous norm (default smooth variant) of `x[0..n]`.
///
/// # Safety
/// `x` must point to `n` doubles and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn fk_layout_norm(l: *const FkLayout, x: *const f64, n: usize, out: *mut f64) -> FkStatus {
    guard(|| {
        nonnull!(l, x, out);
        let l = &(*l).0;
        let x = std::slice::from_raw_parts(x, n);
        match l.hom_norm(x, l.default_norm()) {
            Ok(v) => {
                *out = v;
                FkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

// ---- kernels -------------------------------------------------------------

/// Kernel handle.
pub struct FkKernel(KernelModel);

/// Flag power kernel of the given order, written `"-1/2,0"`. `norm_m` 0 picks
/// the default smooth norm; a positive value selects `smooth:norm_m`.
///
/// # Safety
/// `layout` must be live, `order` NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn fk_kernel_flag_power(layout: *const FkLayout, order: *const c_char, norm_m: u32, out: *mut *mut FkKernel) -> FkStatus {
    guard(|| {
        nonnull!(layout, out);
        let l = &(*layout).0;
        let order = tri!(str_arg(order, "order"));
        let parts: Vec<&str> = order.split(',').collect();
        let built = OrderVector::parse(&parts).and_then(|o| {
            let norm = if norm_m == 0 { l.default_norm() } else { NormVariant::Smooth(norm_m) };
            KernelModel::flag_power(l, o, norm)
        });
        match built {
            Ok(k) => {
                *out = Box::into_raw(Box::new(FkKernel(k)));
                FkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Gaussian `exp(-|x|^2 / scale^2)` on a layout.
///
/// # Safety
/// `layout` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn fk_kernel_gaussian(layout: *const FkLayout, scale: f64, out: *mut *mut FkKernel) -> FkStatus {
    guard(|| {
        nonnull!(layout, out);
        match KernelModel::gaussian(&(*layout).0, scale) {
            Ok(k) => {
                *out = Box::into_raw(Box::new(FkKernel(k)));
                FkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `k` must come from a kernel constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn fk_kernel_free(k: *mut FkKernel) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// Kernel value at `x[0..n]`; points on the singular set are an error.
///
/// # Safety
/// `x` must point to `n` doubles and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn fk_kernel_eval(k: *const FkKernel, x: *const f64, n: usize, out: *mut f64) -> FkStatus {
    guard(|| {
        nonnull!(k, x, out);
        match (*k).0.evaluate(std::slice::from_raw_parts(x, n)) {
            Ok(v) => {
                *out = v;
                FkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Claimed class as text, e.g. `F[-1/2]`; free with `fk_string_free`.
///
/// # Safety
/// `k` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn fk_kernel_class(k: *const FkKernel, out: *mut *mut c_char) -> FkStatus {
    guard(|| {
        nonnull!(k, out);
        give_string((*k).0.class.to_string(), out);
        FkStatus::Ok
    })
}

// ---- group laws ----------------------------------------------------------

/// Group law handle.
pub struct FkGroupLaw(GroupLaw);

/// Preset law: `"abelian"` (size = dimension), `"heisenberg"` (size ignored)
/// or `"filiform"` (size = step, 2 to 4).
///
/// # Safety
/// `name` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn fk_group_law_preset(name: *const c_char, size: usize, out: *mut *mut FkGroupLaw) -> FkStatus {
    guard(|| {
        nonnull!(out);
        let name = tri!(str_arg(name, "name"));
        let alg = match name {
            "abelian" => NilpotentAlgebra::abelian(size),
            "heisenberg" => Ok(NilpotentAlgebra::heisenberg()),
            "filiform" => NilpotentAlgebra::filiform(size),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        };
        match alg.and_then(|a| GroupLaw::from_algebra(&a)) {
            Ok(law) => {
                *out = Box::into_raw(Box::new(FkGroupLaw(law)));
                FkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `g` must come from `fk_group_law_preset` or be null.
#[no_mangle]
pub unsafe extern "C" fn fk_group_law_free(g: *mut FkGroupLaw) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Dimension of the group, or 0 for a null handle.
///
/// # Safety
/// `g` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn fk_group_law_dim(g: *const FkGroupLaw) -> usize {
    g.as_ref().map_or(0, |g| g.0.dim())
}

/// `out = x * y`; all three arrays hold `n` doubles and `n` must equal the dimension.
///
/// # Safety
/// Pointers must be valid for `n` doubles each.
#[no_mangle]
pub unsafe extern "C" fn fk_group_law_multiply(g: *const FkGroupLaw, x: *const f64, y: *const f64, n: usize, out: *mut f64) -> FkStatus {
    guard(|| {
        nonnull!(g, x, y, out);
        let g = &(*g).0;
        if n != g.dim() {
            return fail(Error::Shape { expected: g.dim(), got: n });
        }
        let z = g.multiply(std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(y, n));
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&z);
        FkStatus::Ok
    })
}

/// Canonical polynomial text of the law; free with `fk_string_free`.
///
/// # Safety
/// `g` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn fk_group_law_text(g: *const FkGroupLaw, out: *mut *mut c_char) -> FkStatus {
    guard(|| {
        nonnull!(g, out);
        give_string((*g).0.canonical_text(), out);
        FkStatus::Ok
    })
}

// ---- order calculus and suites ------------------------------------------

/// Evaluates an order-calculus expression on a layout. The result text goes
/// to `out`; `composable` is set to 1 for a class and 0 for a gate failure.
///
/// # Safety
/// `expr` must be NUL-terminated, `layout` live, `out` and `composable` valid.
#[no_mangle]
pub unsafe extern "C" fn fk_classcalc(expr: *const c_char, layout: *const FkLayout, out: *mut *mut c_char, composable: *mut i32) -> FkStatus {
    guard(|| {
        nonnull!(layout, out, composable);
        let expr = tri!(str_arg(expr, "expr"));
        match flagkernel::classcalc::evaluate(expr, &(*layout).0) {
            Ok(o) => {
                *composable = o.is_class() as i32;
                give_string(o.to_string(), out);
                FkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Runs every check of a TOML configuration given as text. The suite JSON
/// goes to `out`; `passed` is 1 when every verdict passes. Nothing is
/// written to disk.
///
/// # Safety
/// `config` must be NUL-terminated, `out` and `passed` valid.
#[no_mangle]
pub unsafe extern "C" fn fk_verify_config(config: *const c_char, out: *mut *mut c_char, passed: *mut i32) -> FkStatus {
    guard(|| {
        nonnull!(out, passed);
        let text = tri!(str_arg(config, "config"));
        let run = || -> flagkernel::Result<(String, bool)> {
            let cfg = RunConfig::parse(text)?;
            let sc = cfg.context()?;
            let reports = run_suite(&cfg.check, &sc, &cfg.check_context())?;
            let info = flagkernel::cli::output::RunInfo::new("ffi", cfg.seed, cfg.tol_scale);
            let ok = flagkernel::cli::output::Summary::of(&reports).all_pass();
            Ok((flagkernel::cli::output::suite_json(info, &cfg, &reports)?, ok))
        };
        match run() {
            Ok((json, ok)) => {
                *passed = ok as i32;
                give_string(json, out);
                FkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
