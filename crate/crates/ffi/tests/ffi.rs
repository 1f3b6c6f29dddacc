// SPDX-License-Identifier: Apache-2.0

use std::ffi::{CStr, CString};
use std::ptr;

use hfp_ffi::*;

const DESIGN: &str = r#"{
  "technologies": [
    {"id": "45nm", "scale_to_oldest": 1, "defect_density": 0.09, "alpha": 10, "cost_per_area": 1},
    {"id": "7nm", "scale_to_oldest": 9, "defect_density": 0.09, "alpha": 10, "cost_per_area": 2.5}
  ],
  "blocks": [
    {"id": "a", "ppa": {"45nm": {"area": 9000, "power": 40, "tns": 30, "kappa": 0.1}, "7nm": {"area": 1000, "power": 20, "tns": 12, "kappa": 0.1}}, "ratios": [0.5, 1, 2]},
    {"id": "b", "ppa": {"45nm": {"area": 4500, "power": 30, "tns": 20, "kappa": 0.2}, "7nm": {"area": 500, "power": 15, "tns": 8, "kappa": 0.2}}, "ratios": [0.5, 1, 2]},
    {"id": "c", "ppa": {"45nm": {"area": 6300, "power": 50, "tns": 25, "kappa": 0.0}, "7nm": {"area": 700, "power": 25, "tns": 10, "kappa": 0.0}}, "ratios": [1]}
  ],
  "nets": [{"id": "n0", "pins": ["a", "b"]}, {"id": "n1", "pins": ["b", "c"], "weight": 2}],
  "dies": [{"id": "d0", "tech": "45nm"}, {"id": "d1", "tech": "7nm"}]
}"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(hfp_last_error_message()) }.to_string_lossy().into_owned()
}

fn load(json: &str) -> (HfpStatus, *mut HfpDesign) {
    let c = CString::new(json).unwrap();
    let mut d = ptr::null_mut();
    let s = unsafe { hfp_design_from_json(c.as_ptr(), &mut d) };
    (s, d)
}

#[test]
fn design_run_and_export() {
    let (s, d) = load(DESIGN);
    assert_eq!(s, HfpStatus::Ok);
    assert_eq!(unsafe { hfp_design_block_count(d) }, 3);
    let mut opts = hfp_run_options_default();
    opts.method = HfpMethod::Sa as u32;
    opts.seed = 3;
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { hfp_run(d, &opts, &mut sol) }, HfpStatus::Ok, "{}", last_error());
    let f = unsafe { hfp_solution_objective(sol) };
    assert!(f.is_finite() && f > 0.0);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { hfp_solution_to_json(sol, &mut json) }, HfpStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { hfp_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["breakdown"]["f"].as_f64().unwrap(), f);
    assert_eq!(v["method"], "sa");

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("x.svg").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { hfp_solution_write_svg(sol, path.as_ptr()) }, HfpStatus::Ok);
    assert!(std::fs::read_to_string(dir.path().join("x.svg")).unwrap().starts_with("<svg"));

    // same options, same answer
    let mut sol2 = ptr::null_mut();
    assert_eq!(unsafe { hfp_run(d, &opts, &mut sol2) }, HfpStatus::Ok);
    assert_eq!(unsafe { hfp_solution_objective(sol2) }, f);

    unsafe {
        hfp_solution_free(sol);
        hfp_solution_free(sol2);
        hfp_design_free(d);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let (s, d) = load("{ not json");
    assert_eq!(s, HfpStatus::Parse);
    assert!(d.is_null());
    assert!(last_error().contains("parse"));

    let (s, _) = load(&DESIGN.replace("\"ghost\"", "").replace("[\"b\", \"c\"]", "[\"b\", \"ghost\"]"));
    assert_eq!(s, HfpStatus::Integrity);
    assert!(last_error().contains("ghost"));

    let (s, _) = load(&DESIGN.replace("\"scale_to_oldest\": 9", "\"scale_to_oldest\": 1"));
    assert_eq!(s, HfpStatus::Schema);

    let hard = DESIGN.replace(
        r#""ratios": [1]}"#,
        r#""ratios": [1], "hard_ip": {"tech": "7nm", "ratio": 1}}"#,
    )
    .replace(r#"{"id": "d1", "tech": "7nm"}"#, r#"{"id": "d1", "tech": "45nm"}"#);
    let (s, d) = load(&hard);
    assert_eq!(s, HfpStatus::Ok, "{}", last_error());
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { hfp_run(d, ptr::null(), &mut sol) }, HfpStatus::Infeasible);
    assert!(sol.is_null());
    unsafe { hfp_design_free(d) };

    let (_, d) = load(DESIGN);
    let mut opts = hfp_run_options_default();
    opts.method = 9;
    assert_eq!(unsafe { hfp_run(d, &opts, &mut sol) }, HfpStatus::Config);
    opts = hfp_run_options_default();
    opts.n_max = 0;
    assert_eq!(unsafe { hfp_run(d, &opts, &mut sol) }, HfpStatus::Config);
    unsafe { hfp_design_free(d) };
}

#[test]
fn null_arguments_are_rejected() {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { hfp_design_from_json(ptr::null(), &mut d) }, HfpStatus::NullArgument);
    assert_eq!(unsafe { hfp_design_load(ptr::null(), &mut d) }, HfpStatus::NullArgument);
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { hfp_run(ptr::null(), ptr::null(), &mut sol) }, HfpStatus::NullArgument);
    assert!(unsafe { hfp_solution_objective(ptr::null()) }.is_nan());
    assert_eq!(unsafe { hfp_design_block_count(ptr::null()) }, 0);
    unsafe {
        hfp_design_free(ptr::null_mut());
        hfp_solution_free(ptr::null_mut());
        hfp_string_free(ptr::null_mut());
    }
    let missing = CString::new("/nonexistent/design.json").unwrap();
    assert_eq!(unsafe { hfp_design_load(missing.as_ptr(), &mut d) }, HfpStatus::Io);
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hfp.h")).unwrap();
    for f in [
        "hfp_design_from_json",
        "hfp_design_load",
        "hfp_design_free",
        "hfp_design_block_count",
        "hfp_run_options_default",
        "hfp_run(",
        "hfp_solution_objective",
        "hfp_solution_feasible",
        "hfp_solution_to_json",
        "hfp_string_free",
        "hfp_solution_write_svg",
        "hfp_solution_free",
        "hfp_last_error_message",
        "typedef struct HfpDesign HfpDesign;",
        "HFP_STATUS_INFEASIBLE = 7",
    ] {
        assert!(h.contains(f), "header lacks {f}");
    }
}
