//! C interface to `noncausal`.
//!
//! Every fallible function returns an [`NcStatus`]. On failure the message is
//! available from [`nc_last_error`] on the same thread. Models and series are
//! opaque handles released with their `_free` functions.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use noncausal::credibility::{roc_curve, CredibilityIndex, Outcome, OutcomeSeries};
use noncausal::error::Error;
use noncausal::estimation::{fit_mar_amle, select_mar};
use noncausal::forecast::{gj_probability, lls_probability, sir_forecast, ProbabilityForecast, SirSettings};
use noncausal::process::{simulate, AnyModel, MarModel};
use noncausal::timeseries::{BoundsSeries, Dated, TimeSeries, YearMonth};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcStatus {
    Ok = 0,
    Panic = 1,
    InvalidInput = 2,
    NonConvergence = 3,
    DegenerateImportance = 4,
    UndefinedRate = 5,
}

pub struct NcModel(AnyModel);

pub struct NcSeries(TimeSeries);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NcProbability {
    pub p_in_bounds: f64,
    pub p_below: f64,
    pub p_above: f64,
    /// NaN when not produced by the method.
    pub point_mean: f64,
    pub point_median: f64,
    pub ess: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(e: Error) -> NcStatus {
    let status = match e.exit_code() {
        3 => NcStatus::NonConvergence,
        4 => NcStatus::DegenerateImportance,
        5 => NcStatus::UndefinedRate,
        _ => NcStatus::InvalidInput,
    };
    set_error(e.to_string());
    status
}

fn guard(f: impl FnOnce() -> Result<(), NcStatus>) -> NcStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            NcStatus::Panic
        }
    }
}

fn null_arg(name: &str) -> NcStatus {
    set_error(format!("null pointer: {name}"));
    NcStatus::InvalidInput
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, NcStatus> {
    p.as_ref().ok_or_else(|| null_arg(name))
}

unsafe fn write_out<T>(p: *mut T, name: &str, value: T) -> Result<(), NcStatus> {
    if p.is_null() {
        return Err(null_arg(name));
    }
    p.write(value);
    Ok(())
}

fn month(year: i32, month: u32) -> Result<YearMonth, NcStatus> {
    YearMonth::new(year, month).map_err(fail)
}

fn to_c(p: &ProbabilityForecast) -> NcProbability {
    NcProbability {
        p_in_bounds: p.p_in_bounds,
        p_below: p.p_below,
        p_above: p.p_above,
        point_mean: p.point_mean.unwrap_or(f64::NAN),
        point_median: p.point_median.unwrap_or(f64::NAN),
        ess: p.ess.unwrap_or(f64::NAN),
    }
}

fn flat_bounds(series: &TimeSeries, h: usize, lb: f64, ub: f64) -> Result<BoundsSeries, NcStatus> {
    BoundsSeries::constant(series.end().add_months(h as i64), 1, lb, ub).map_err(fail)
}

/// Message of the last failure on this thread; empty after a success. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn nc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `out` must be a valid pointer to a `NcModel *`.
#[no_mangle]
pub unsafe extern "C" fn nc_model_mar11(phi: f64, psi: f64, dof: f64, scale: f64, out: *mut *mut NcModel) -> NcStatus {
    guard(|| {
        let m = MarModel::mar11(phi, psi, dof, scale).map_err(fail)?;
        write_out(out, "out", Box::into_raw(Box::new(NcModel(AnyModel::Mar(m)))))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nc_model_load(path: *const c_char, out: *mut *mut NcModel) -> NcStatus {
    guard(|| {
        if path.is_null() {
            return Err(null_arg("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|e| {
            set_error(format!("path is not UTF-8: {e}"));
            NcStatus::InvalidInput
        })?;
        let m = AnyModel::load(path).map_err(fail)?;
        write_out(out, "out", Box::into_raw(Box::new(NcModel(m))))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `model` a live handle.
#[no_mangle]
pub unsafe extern "C" fn nc_model_save(model: *const NcModel, path: *const c_char) -> NcStatus {
    guard(|| {
        let model = deref(model, "model")?;
        if path.is_null() {
            return Err(null_arg("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|e| {
            set_error(format!("path is not UTF-8: {e}"));
            NcStatus::InvalidInput
        })?;
        model.0.save(path, None).map_err(fail)
    })
}

/// Causal and noncausal orders, error degrees of freedom and scale.
///
/// # Safety
/// `model` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn nc_model_orders(
    model: *const NcModel,
    r: *mut usize,
    s: *mut usize,
    dof: *mut f64,
    scale: *mut f64,
) -> NcStatus {
    guard(|| {
        let base = deref(model, "model")?.0.base();
        for (p, v) in [(r, base.r()), (s, base.s())] {
            if !p.is_null() {
                p.write(v);
            }
        }
        for (p, v) in [(dof, base.noise().dof()), (scale, base.noise().scale())] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// Copies up to `cap` lag then lead coefficients into `buf` and returns the
/// number available through `len`.
///
/// # Safety
/// `model` must be a live handle and `buf` writable for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn nc_model_coefficients(
    model: *const NcModel,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> NcStatus {
    guard(|| {
        let base = deref(model, "model")?.0.base();
        let all: Vec<f64> = base.lag_coeffs().iter().chain(base.lead_coeffs()).copied().collect();
        if !buf.is_null() {
            ptr::copy_nonoverlapping(all.as_ptr(), buf, all.len().min(cap));
        }
        write_out(len, "len", all.len())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nc_model_free(model: *mut NcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `values` must be readable for `len` values and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nc_series_new(
    start_year: i32,
    start_month: u32,
    values: *const f64,
    len: usize,
    out: *mut *mut NcSeries,
) -> NcStatus {
    guard(|| {
        if values.is_null() {
            return Err(null_arg("values"));
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        let s = TimeSeries::new("y", month(start_year, start_month)?, v).map_err(fail)?;
        write_out(out, "out", Box::into_raw(Box::new(NcSeries(s))))
    })
}

/// # Safety
/// `series` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nc_series_len(series: *const NcSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// Copies up to `cap` values into `buf`; returns the number copied.
///
/// # Safety
/// `series` must be a live handle and `buf` writable for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn nc_series_values(series: *const NcSeries, buf: *mut f64, cap: usize) -> usize {
    match series.as_ref() {
        Some(s) if !buf.is_null() => {
            let n = s.0.len().min(cap);
            ptr::copy_nonoverlapping(s.0.values().as_ptr(), buf, n);
            n
        }
        _ => 0,
    }
}

/// # Safety
/// `series` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nc_series_free(series: *mut NcSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Simulates `n` observations of a MAR or SMAR model.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nc_simulate(
    model: *const NcModel,
    n: usize,
    seed: u64,
    start_year: i32,
    start_month: u32,
    out: *mut *mut NcSeries,
) -> NcStatus {
    guard(|| {
        let model = deref(model, "model")?;
        let sim = simulate(&model.0, n, seed, None, None, month(start_year, start_month)?).map_err(fail)?;
        write_out(out, "out", Box::into_raw(Box::new(NcSeries(sim.series))))
    })
}

/// Fits a MAR(r, s) by approximate maximum likelihood. When the optimiser
/// does not converge the best model found is still returned together with
/// `NC_STATUS_NON_CONVERGENCE`.
///
/// # Safety
/// `series` must be a live handle and `out` a valid pointer; `loglik` may be null.
#[no_mangle]
pub unsafe extern "C" fn nc_fit_mar(
    series: *const NcSeries,
    r: usize,
    s: usize,
    n_starts: usize,
    out: *mut *mut NcModel,
    loglik: *mut f64,
) -> NcStatus {
    guard(|| {
        let series = deref(series, "series")?;
        let fit = fit_mar_amle(&series.0, r, s, n_starts).map_err(fail)?;
        if !loglik.is_null() {
            loglik.write(fit.loglik);
        }
        let converged = fit.converged;
        write_out(out, "out", Box::into_raw(Box::new(NcModel(fit.model))))?;
        if converged {
            Ok(())
        } else {
            set_error(format!("optimiser did not converge (gradient norm {:.3e})", fit.grad_norm));
            Err(NcStatus::NonConvergence)
        }
    })
}

/// Selects the MAR(r, p - r) with the highest likelihood.
///
/// # Safety
/// `series` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nc_select_mar(
    series: *const NcSeries,
    p: usize,
    n_starts: usize,
    out: *mut *mut NcModel,
) -> NcStatus {
    guard(|| {
        let series = deref(series, "series")?;
        let sel = select_mar(&series.0, p, n_starts).map_err(fail)?;
        write_out(out, "out", Box::into_raw(Box::new(NcModel(sel.best.model))))
    })
}

/// Probability that `y_{T+h}` lies in `[lb, ub]` by lookahead simulation.
///
/// # Safety
/// `model` and `series` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nc_forecast_lls(
    model: *const NcModel,
    series: *const NcSeries,
    lb: f64,
    ub: f64,
    h: usize,
    n: usize,
    m: usize,
    seed: u64,
    out: *mut NcProbability,
) -> NcStatus {
    guard(|| {
        let (model, series) = (deref(model, "model")?, deref(series, "series")?);
        let bounds = flat_bounds(&series.0, h, lb, ub)?;
        let p = lls_probability(&model.0, &series.0, &bounds, h, n, m, seed).map_err(fail)?;
        write_out(out, "out", to_c(&p))
    })
}

/// One-step probability from the sample-based predictive density.
///
/// # Safety
/// `model` and `series` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nc_forecast_gj(
    model: *const NcModel,
    series: *const NcSeries,
    lb: f64,
    ub: f64,
    grid_points: usize,
    out: *mut NcProbability,
) -> NcStatus {
    guard(|| {
        let (model, series) = (deref(model, "model")?, deref(series, "series")?);
        let bounds = flat_bounds(&series.0, 1, lb, ub)?;
        let p = gj_probability(&model.0, &series.0, &bounds, grid_points).map_err(fail)?;
        write_out(out, "out", to_c(&p))
    })
}

/// Probability from `k` importance-weighted paths, `s` of them resampled.
///
/// # Safety
/// `model` and `series` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nc_forecast_sir(
    model: *const NcModel,
    series: *const NcSeries,
    lb: f64,
    ub: f64,
    h: usize,
    k: usize,
    s: usize,
    seed: u64,
    out: *mut NcProbability,
) -> NcStatus {
    guard(|| {
        let (model, series) = (deref(model, "model")?, deref(series, "series")?);
        let bounds = flat_bounds(&series.0, h, lb, ub)?;
        let f = sir_forecast(&model.0, &series.0, h, &SirSettings::new(k, s, seed)).map_err(fail)?;
        let p = f.probability(&bounds).map_err(fail)?;
        write_out(out, "out", to_c(&p))
    })
}

/// Area under the ROC curve of `index` against outcomes (nonzero means the
/// realised value was inside its bounds). NaN entries in `index` are skipped.
///
/// # Safety
/// `index` and `inside` must be readable for `len` entries; `auc` writable.
#[no_mangle]
pub unsafe extern "C" fn nc_auc(index: *const f64, inside: *const u8, len: usize, auc: *mut f64) -> NcStatus {
    guard(|| {
        if index.is_null() || inside.is_null() {
            return Err(null_arg("index/inside"));
        }
        let start = month(2000, 1)?;
        let index = std::slice::from_raw_parts(index, len);
        let inside = std::slice::from_raw_parts(inside, len);
        let values = (0..len)
            .map(|i| (start.add_months(i as i64), Some(index[i]).filter(|v| !v.is_nan())))
            .collect();
        let outcomes = (0..len)
            .map(|i| (start.add_months(i as i64), if inside[i] != 0 { Outcome::In } else { Outcome::Out }))
            .collect();
        let ci = CredibilityIndex::new("index", values).map_err(fail)?;
        let curve = roc_curve(&ci, &OutcomeSeries::new(outcomes), None).map_err(fail)?;
        write_out(auc, "auc", curve.auc)
    })
}
