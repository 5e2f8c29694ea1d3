use std::ffi::{CStr, CString};
use std::ptr;

use ecoselect_ffi::*;

fn design(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Deterministic, non-collinear columns; y depends on the first two.
    let mut x = Vec::with_capacity(n * 3);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64;
        let a = (0.37 * t).sin();
        let b = (1.3 * t + 0.5).cos();
        let c = ((0.11 * t * t) % 1.0) - 0.5;
        x.extend_from_slice(&[a, b, c]);
        y.push(1.0 + 2.0 * a - b + 0.05 * (2.9 * t).sin());
    }
    (y, x)
}

fn last_error() -> String {
    let p = eco_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn dataset_analysis_round_trip() {
    let (y, x) = design(40);
    unsafe {
        let mut raw = ptr::null_mut();
        assert_eq!(
            eco_dataset_new(y.as_ptr(), x.as_ptr(), 40, 3, &mut raw),
            EcoStatus::EcoOk
        );
        assert!(eco_last_error().is_null());
        assert_eq!((eco_dataset_rows(raw), eco_dataset_predictors(raw)), (40, 3));
        let mut ds = ptr::null_mut();
        assert_eq!(eco_dataset_standardize(raw, &mut ds), EcoStatus::EcoOk);

        let mut a = ptr::null_mut();
        assert_eq!(eco_analyze(ds, 5, 7, 0.0, 0.5, &mut a), EcoStatus::EcoOk);
        let mut l_full = 0.0;
        let mut l_null = 0.0;
        assert_eq!(eco_analysis_loss(a, 0b011, &mut l_full), EcoStatus::EcoOk);
        assert_eq!(eco_analysis_loss(a, 0, &mut l_null), EcoStatus::EcoOk);
        assert!(l_full < l_null);

        let mut probs = [0.0; 3];
        assert_eq!(
            eco_analysis_inclusion(a, 0b111, probs.as_mut_ptr(), 3),
            EcoStatus::EcoOk
        );
        assert!(probs[0] > 0.99 && probs[1] > 0.99);
        assert_eq!(
            eco_analysis_inclusion(a, 0b111, probs.as_mut_ptr(), 2),
            EcoStatus::EcoErrConfig
        );

        let (mut bits, mut total) = (u32::MAX, 0.0);
        assert_eq!(
            eco_analysis_optimal_uniform(a, 0.0, &mut bits, &mut total),
            EcoStatus::EcoOk
        );
        assert!(bits & 0b011 == 0b011, "bits = {bits:b}");
        assert_eq!(
            eco_analysis_optimal_uniform(a, 1e6, &mut bits, &mut total),
            EcoStatus::EcoOk
        );
        assert_eq!(bits, 0);

        assert_eq!(eco_analysis_loss(a, 0b1000, &mut l_full), EcoStatus::EcoErrConfig);
        assert!(!last_error().is_empty());

        eco_analysis_free(a);
        eco_dataset_free(ds);
        eco_dataset_free(raw);
    }
}

#[test]
fn error_codes_follow_classes() {
    let (y, x) = design(10);
    unsafe {
        let mut ds = ptr::null_mut();
        let mut bad = x.clone();
        bad[4] = f64::NAN;
        assert_eq!(
            eco_dataset_new(y.as_ptr(), bad.as_ptr(), 10, 3, &mut ds),
            EcoStatus::EcoErrData
        );
        assert!(ds.is_null());
        assert!(last_error().starts_with("E_DATA"));

        assert_eq!(
            eco_dataset_new(ptr::null(), x.as_ptr(), 10, 3, &mut ds),
            EcoStatus::EcoErrArgument
        );

        let wide = vec![0.0; 30 * 25];
        let yy = vec![0.0; 30];
        assert_eq!(
            eco_dataset_new(yy.as_ptr(), wide.as_ptr(), 30, 25, &mut ds),
            EcoStatus::EcoErrCapacity
        );

        assert_eq!(
            eco_dataset_new(y.as_ptr(), x.as_ptr(), 10, 3, &mut ds),
            EcoStatus::EcoOk
        );
        let mut a = ptr::null_mut();
        assert_eq!(eco_analyze(ds, 1, 0, 0.0, 0.5, &mut a), EcoStatus::EcoErrConfig);
        assert_eq!(eco_analyze(ds, 2, 0, 0.0, 1.5, &mut a), EcoStatus::EcoErrConfig);
        assert!(a.is_null());
        eco_dataset_free(ds);

        let path = CString::new("/nonexistent/file.csv").unwrap();
        let resp = CString::new("y").unwrap();
        let name = CString::new("x1").unwrap();
        let names = [name.as_ptr()];
        let status = eco_dataset_load_csv(path.as_ptr(), resp.as_ptr(), names.as_ptr(), 1, &mut ds);
        assert_eq!(status, EcoStatus::EcoErrData);
    }
}

#[test]
fn timing_decision() {
    let l = [1.0, 1.0, 1.0, 1.0];
    let ls = [0.5, 0.5, 0.5, 0.5];
    let (mut wave, mut obj) = (99u32, 0.0);
    unsafe {
        assert_eq!(
            eco_optimal_wave(l.as_ptr(), ls.as_ptr(), 4, 0.0, 0.1, &mut wave, &mut obj),
            EcoStatus::EcoOk
        );
        assert_eq!(wave, 1);
        assert!((obj - 2.1).abs() < 1e-12);
        assert_eq!(
            eco_optimal_wave(l.as_ptr(), ls.as_ptr(), 4, 0.0, 100.0, &mut wave, &mut obj),
            EcoStatus::EcoOk
        );
        assert_eq!(wave, 0);
        assert!((obj - 4.0).abs() < 1e-12);
    }
}

#[test]
fn null_handles_are_tolerated() {
    unsafe {
        eco_dataset_free(ptr::null_mut());
        eco_analysis_free(ptr::null_mut());
        assert_eq!(eco_dataset_rows(ptr::null()), 0);
        let mut v = 0.0;
        assert_eq!(eco_analysis_loss(ptr::null(), 0, &mut v), EcoStatus::EcoErrArgument);
    }
    let v = unsafe { CStr::from_ptr(eco_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
