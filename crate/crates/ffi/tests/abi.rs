use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use uidforge_ffi::*;

fn fixture(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = uf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn toy_demand_through_handles() {
    unsafe {
        let mut pop = ptr::null_mut();
        let mut surv = ptr::null_mut();
        let mut fert = ptr::null_mut();
        let mut series = ptr::null_mut();
        assert_eq!(uf_pyramid_load_csv(fixture("toy_population.csv").as_ptr(), 49, 2011, &mut pop), UfStatus::Ok);
        assert_eq!(uf_survival_load_csv(fixture("toy_survival.csv").as_ptr(), &mut surv), UfStatus::Ok);
        assert_eq!(uf_fertility_load_csv(fixture("toy_fertility.csv").as_ptr(), &mut fert), UfStatus::Ok);
        let flows = fixture("toy_flows.csv");
        assert_eq!(
            uf_demand_series(pop, surv, fert, flows.as_ptr(), 3, UF_POLICY_AT_BIRTH, &mut series),
            UfStatus::Ok
        );
        assert_eq!(uf_demand_len(series), 3);
        let mut row = UfDemandRow::default();
        assert_eq!(uf_demand_row(series, 0, &mut row), UfStatus::Ok);
        assert_eq!(row.year, 2011);
        assert_eq!(row.new_cards_male.round_ties_even(), 209.0);
        assert_eq!(uf_demand_row(series, 3, &mut row), UfStatus::InvalidArgument);

        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("demand.csv");
        let c_out = CString::new(out.to_str().unwrap()).unwrap();
        assert_eq!(uf_demand_write_csv(series, c_out.as_ptr()), UfStatus::Ok);
        let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/demand_toy_golden.csv");
        assert_eq!(std::fs::read(out).unwrap(), std::fs::read(golden).unwrap());

        uf_demand_free(series);
        uf_fertility_free(fert);
        uf_survival_free(surv);
        uf_pyramid_free(pop);
    }
}

#[test]
fn built_handles_project() {
    unsafe {
        let region = CString::new("X").unwrap();
        let mut pop = ptr::null_mut();
        assert_eq!(uf_pyramid_new(region.as_ptr(), 2011, 60, &mut pop), UfStatus::Ok);
        assert_eq!(uf_pyramid_set(pop, UF_SEX_FEMALE, 25, 1000.0), UfStatus::Ok);
        assert_eq!(uf_pyramid_set(pop, UF_SEX_MALE, 25, 1000.0), UfStatus::Ok);
        let mut s = vec![0.9; 61];
        s[60] = 0.0;
        let mut surv = ptr::null_mut();
        assert_eq!(uf_survival_new(s.as_ptr(), s.as_ptr(), s.len(), &mut surv), UfStatus::Ok);
        let mut fert = ptr::null_mut();
        assert_eq!(uf_fertility_new(1.0, 1.0, 0.0, &mut fert), UfStatus::Ok);
        assert_eq!(uf_fertility_set_rate(fert, 25, 0.1), UfStatus::Ok);
        assert_eq!(uf_fertility_set_rate(fert, 60, 0.1), UfStatus::Domain);

        let mut next = ptr::null_mut();
        assert_eq!(uf_project(pop, surv, fert, 1, &mut next), UfStatus::Ok);
        let mut v = 0.0;
        assert_eq!(uf_pyramid_get(next, UF_SEX_FEMALE, 26, &mut v), UfStatus::Ok);
        assert!((v - 900.0).abs() < 1e-9);
        // births 0.9 · 1000 · 0.1, split evenly
        assert_eq!(uf_pyramid_get(next, UF_SEX_MALE, 0, &mut v), UfStatus::Ok);
        assert!((v - 45.0).abs() < 1e-9);
        let mut total = 0.0;
        assert_eq!(uf_pyramid_total(next, &mut total), UfStatus::Ok);
        assert!((total - 1890.0).abs() < 1e-9);

        uf_pyramid_free(next);
        uf_fertility_free(fert);
        uf_survival_free(surv);
        uf_pyramid_free(pop);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut est = 0.0;
        assert_eq!(uf_dual_system_estimate(900, 800, 720, &mut est), UfStatus::Ok);
        assert_eq!(est, 1000.0);
        assert_eq!(uf_dual_system_estimate(900, 800, 0, &mut est), UfStatus::UndefinedEstimate);
        assert!(!last_error().is_empty());
        assert_eq!(uf_dual_system_estimate(1, 1, 1, ptr::null_mut()), UfStatus::NullPointer);
        assert!(last_error().contains("out"));

        let mut pop = ptr::null_mut();
        let missing = CString::new("/nonexistent/pop.csv").unwrap();
        assert_eq!(uf_pyramid_load_csv(missing.as_ptr(), 100, 2011, &mut pop), UfStatus::Io);
        assert!(pop.is_null());
        assert!(last_error().contains("/nonexistent/pop.csv"));

        let flows = fixture("flows_counts_unbalanced.csv");
        let mut series = ptr::null_mut();
        assert_eq!(
            uf_demand_series(ptr::null(), ptr::null(), ptr::null(), flows.as_ptr(), 1, 0, &mut series),
            UfStatus::Data
        );
        assert_eq!(uf_pyramid_set(ptr::null_mut(), 7, 0, 1.0), UfStatus::NullPointer);

        let region = CString::new("X").unwrap();
        assert_eq!(uf_pyramid_new(region.as_ptr(), 2011, 10, &mut pop), UfStatus::Ok);
        assert_eq!(uf_pyramid_set(pop, 7, 0, 1.0), UfStatus::InvalidArgument);
        assert!(last_error().contains("sex"));
        uf_pyramid_free(pop);

        uf_pyramid_free(ptr::null_mut());
        assert_eq!(uf_demand_len(ptr::null()), 0);
        assert!(!uf_version().is_null());
    }
}

#[test]
fn chain_matches_library_and_is_reproducible() {
    let counts = [4u64, 6];
    let exposures = [1.0, 1.0];
    unsafe {
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        for out in [&mut a, &mut b] {
            assert_eq!(
                uf_metropolis_sample(counts.as_ptr(), exposures.as_ptr(), 2, 1.0, 1.0, 20_000, 9, 0.7, out),
                UfStatus::Ok
            );
        }
        let n = uf_chain_len(a);
        assert_eq!(n, 20_000);
        assert_eq!(uf_chain_burn_in(a), 2_000);
        let sa = std::slice::from_raw_parts(uf_chain_samples(a), n);
        let sb = std::slice::from_raw_parts(uf_chain_samples(b), n);
        assert_eq!(sa, sb);
        let kept = &sa[2_000..];
        let mean = kept.iter().sum::<f64>() / kept.len() as f64;
        assert!((mean - 11.0 / 3.0).abs() < 0.15, "{mean}");
        let rate = uf_chain_acceptance_rate(a);
        assert!(rate > 0.0 && rate < 1.0);
        uf_chain_free(a);
        uf_chain_free(b);

        let mut c = ptr::null_mut();
        assert_eq!(
            uf_metropolis_sample(counts.as_ptr(), exposures.as_ptr(), 2, -1.0, 1.0, 10, 9, 0.7, &mut c),
            UfStatus::Domain
        );
        assert!(c.is_null());
    }
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/uidforge.h")).unwrap();
    for name in [
        "UfStatus",
        "UF_STATUS_OK",
        "typedef struct UfPyramid UfPyramid",
        "UfDemandRow",
        "uf_pyramid_load_csv",
        "uf_demand_series",
        "uf_metropolis_sample",
        "uf_last_error",
        "UF_POLICY_FULL",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
