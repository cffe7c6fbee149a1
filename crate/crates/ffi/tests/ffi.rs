use std::ffi::{CStr, CString};
use std::ptr;

use noncausal_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(nc_last_error()) }.to_string_lossy().into_owned()
}

fn mar11(phi: f64, psi: f64) -> *mut NcModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { nc_model_mar11(phi, psi, 4.0, 1.0, &mut m) }, NcStatus::Ok);
    m
}

fn simulated(model: *const NcModel, n: usize, seed: u64) -> *mut NcSeries {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { nc_simulate(model, n, seed, 2000, 1, &mut s) }, NcStatus::Ok);
    s
}

#[test]
fn model_round_trip_through_file() {
    let m = mar11(0.5, 0.7);
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.txt").to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(nc_model_save(m, path.as_ptr()), NcStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(nc_model_load(path.as_ptr(), &mut back), NcStatus::Ok);
        let (mut r, mut s, mut dof, mut scale) = (0, 0, 0.0, 0.0);
        assert_eq!(nc_model_orders(back, &mut r, &mut s, &mut dof, &mut scale), NcStatus::Ok);
        assert_eq!((r, s, dof, scale), (1, 1, 4.0, 1.0));
        let mut buf = [0.0; 4];
        let mut len = 0;
        assert_eq!(nc_model_coefficients(back, buf.as_mut_ptr(), buf.len(), &mut len), NcStatus::Ok);
        assert_eq!(len, 2);
        assert!((buf[0] - 0.5).abs() < 1e-12 && (buf[1] - 0.7).abs() < 1e-12);
        nc_model_free(back);
        nc_model_free(m);
    }
}

#[test]
fn invalid_model_reports_input_error() {
    let mut m = ptr::null_mut();
    let status = unsafe { nc_model_mar11(1.5, 0.2, 4.0, 1.0, &mut m) };
    assert_eq!(status, NcStatus::InvalidInput);
    assert!(m.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_handles_are_rejected() {
    let mut p = NcProbability::default();
    let status = unsafe { nc_forecast_lls(ptr::null(), ptr::null(), 0.0, 1.0, 1, 100, 50, 1, &mut p) };
    assert_eq!(status, NcStatus::InvalidInput);
    assert!(last_error().contains("null"));
    unsafe {
        nc_model_free(ptr::null_mut());
        nc_series_free(ptr::null_mut());
        assert_eq!(nc_series_len(ptr::null()), 0);
    }
}

#[test]
fn series_values_copy_out() {
    let v = [1.0, 2.0, 3.0];
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(nc_series_new(2001, 6, v.as_ptr(), v.len(), &mut s), NcStatus::Ok);
        assert_eq!(nc_series_len(s), 3);
        let mut buf = [0.0; 2];
        assert_eq!(nc_series_values(s, buf.as_mut_ptr(), 2), 2);
        assert_eq!(buf, [1.0, 2.0]);
        nc_series_free(s);
        assert_eq!(nc_series_new(2001, 13, v.as_ptr(), v.len(), &mut s), NcStatus::InvalidInput);
    }
}

#[test]
fn simulate_fit_and_forecast() {
    let truth = mar11(0.5, 0.7);
    let s = simulated(truth, 400, 11);
    unsafe {
        assert_eq!(nc_series_len(s), 400);
        let mut fitted = ptr::null_mut();
        let mut loglik = 0.0;
        let status = nc_fit_mar(s, 1, 1, 4, &mut fitted, &mut loglik);
        assert!(matches!(status, NcStatus::Ok | NcStatus::NonConvergence));
        assert!(!fitted.is_null() && loglik.is_finite());

        let mut lls = NcProbability::default();
        assert_eq!(nc_forecast_lls(truth, s, -1.0, 1.0, 1, 20_000, 50, 7, &mut lls), NcStatus::Ok);
        assert!((lls.p_in_bounds + lls.p_below + lls.p_above - 1.0).abs() < 1e-9);
        assert!(lls.ess > 0.0);

        let mut sir = NcProbability::default();
        assert_eq!(nc_forecast_sir(truth, s, -1.0, 1.0, 1, 5_000, 500, 7, &mut sir), NcStatus::Ok);
        let mut gj = NcProbability::default();
        assert_eq!(nc_forecast_gj(truth, s, -1.0, 1.0, 1001, &mut gj), NcStatus::Ok);
        assert!(gj.ess.is_nan());
        for p in [sir.p_in_bounds, gj.p_in_bounds] {
            assert!((p - lls.p_in_bounds).abs() < 0.1, "{p} vs {}", lls.p_in_bounds);
        }

        let mut again = NcProbability::default();
        assert_eq!(nc_forecast_lls(truth, s, -1.0, 1.0, 1, 20_000, 50, 7, &mut again), NcStatus::Ok);
        assert_eq!(again.p_in_bounds, lls.p_in_bounds);

        nc_model_free(fitted);
        nc_model_free(truth);
        nc_series_free(s);
    }
}

#[test]
fn lls_horizon_beyond_truncation_is_input_error() {
    let m = mar11(0.5, 0.7);
    let s = simulated(m, 100, 3);
    let mut p = NcProbability::default();
    unsafe {
        assert_eq!(nc_forecast_lls(m, s, 0.0, 1.0, 30, 100, 50, 1, &mut p), NcStatus::InvalidInput);
        nc_model_free(m);
        nc_series_free(s);
    }
}

#[test]
fn auc_matches_perfect_ranking_and_flags_single_class() {
    let index = [0.9, 0.8, f64::NAN, 0.2, 0.1];
    let inside = [1u8, 1, 0, 0, 0];
    let mut auc = 0.0;
    unsafe {
        assert_eq!(nc_auc(index.as_ptr(), inside.as_ptr(), 5, &mut auc), NcStatus::Ok);
        assert!((auc - 1.0).abs() < 1e-12);
        let all_in = [1u8; 5];
        assert_eq!(nc_auc(index.as_ptr(), all_in.as_ptr(), 5, &mut auc), NcStatus::UndefinedRate);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/noncausal.h")).unwrap();
    for f in [
        "nc_last_error",
        "nc_model_mar11",
        "nc_model_load",
        "nc_model_save",
        "nc_model_orders",
        "nc_model_coefficients",
        "nc_model_free",
        "nc_series_new",
        "nc_series_len",
        "nc_series_values",
        "nc_series_free",
        "nc_simulate",
        "nc_fit_mar",
        "nc_select_mar",
        "nc_forecast_lls",
        "nc_forecast_gj",
        "nc_forecast_sir",
        "nc_auc",
        "NC_STATUS_UNDEFINED_RATE = 5",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}
