use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use biasaudit_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ba_last_error()) }.to_string_lossy().into_owned()
}

fn synthetic(n: usize, seed: u64) -> *mut BaDataset {
    let mut cfg = BaSynthConfig {
        n: 0,
        p_minority: 0.0,
        class_rate: 0.0,
        minority_share: 0.0,
        sat_noise_sd: 0.0,
        seed: 0,
    };
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(ba_synth_config_default(&mut cfg), BaStatus::Ok);
        cfg.n = n;
        cfg.seed = seed;
        cfg.class_rate = 0.3;
        cfg.minority_share = 0.3;
        assert_eq!(ba_dataset_generate(&cfg, &mut d), BaStatus::Ok);
    }
    d
}

#[test]
fn generate_split_fit_audit_round_trip() {
    unsafe {
        let d = synthetic(600, 3);
        let (mut rows, mut cols) = (0, 0);
        assert_eq!(ba_dataset_shape(d, &mut rows, &mut cols), BaStatus::Ok);
        assert_eq!((rows, cols), (600, 2));

        let (mut train, mut test) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(ba_dataset_split(d, 0.7, 9, &mut train, &mut test), BaStatus::Ok);
        let mut model = ptr::null_mut();
        assert_eq!(ba_model_fit(train, BaLearner::LogReg, 1e-3, true, 1, &mut model), BaStatus::Ok);

        let mut n_test = 0;
        ba_dataset_shape(test, &mut n_test, &mut cols);
        let mut pred = vec![0u8; n_test];
        let mut y = vec![0u8; n_test];
        let mut s = vec![0u8; n_test];
        assert_eq!(ba_model_predict(model, test, pred.as_mut_ptr(), n_test), BaStatus::Ok);
        assert_eq!(ba_dataset_target(test, y.as_mut_ptr(), n_test), BaStatus::Ok);
        assert_eq!(ba_dataset_sensitive(test, s.as_mut_ptr(), n_test), BaStatus::Ok);

        // The audit matches the metrics recomputed from the raw arrays.
        let mut a = std::mem::zeroed::<BaAuditReport>();
        let mut b = std::mem::zeroed::<BaAuditReport>();
        assert_eq!(ba_audit(model, test, &mut a), BaStatus::Ok);
        assert_eq!(ba_audit_predictions(y.as_ptr(), pred.as_ptr(), s.as_ptr(), n_test, &mut b), BaStatus::Ok);
        assert_eq!(a.n_test, n_test);
        assert!(a.balanced_accuracy_defined);
        assert_eq!(a.balanced_accuracy.to_bits(), b.balanced_accuracy.to_bits());
        let mut ba = 0.0;
        assert_eq!(ba_balanced_accuracy(y.as_ptr(), pred.as_ptr(), n_test, &mut ba), BaStatus::Ok);
        assert_eq!(ba, a.balanced_accuracy);

        ba_model_free(model);
        ba_dataset_free(train);
        ba_dataset_free(test);
        ba_dataset_free(d);
    }
}

#[test]
fn undefined_metric_reports_status_and_nan() {
    unsafe {
        // No minority positives: US_S has a zero denominator.
        let y = [0u8, 0, 1, 1];
        let yh = [1u8, 0, 1, 0];
        let s = [0u8, 0, 1, 1];
        let mut v = 7.0;
        assert_eq!(ba_underestimation_score(y.as_ptr(), yh.as_ptr(), s.as_ptr(), 4, &mut v), BaStatus::Undefined);
        assert_eq!(v, 7.0);
        assert!(last_error().contains("undefined"));

        let mut r = std::mem::zeroed::<BaAuditReport>();
        assert_eq!(ba_audit_predictions(y.as_ptr(), yh.as_ptr(), s.as_ptr(), 4, &mut r), BaStatus::Ok);
        assert!(!r.us_s_defined && r.us_s.is_nan());
        assert!(r.di_s_defined);
        assert_eq!(r.di_s, 1.0);

        let mut di = 0.0;
        assert_eq!(ba_disparate_impact(yh.as_ptr(), s.as_ptr(), 4, &mut di), BaStatus::Ok);
        assert_eq!(di, 1.0);
    }
}

#[test]
fn hand_case_underestimation() {
    let mut v = 0.0;
    let status = unsafe { ba_underestimation_score([1u8, 1, 0, 0].as_ptr(), [1u8, 0, 0, 0].as_ptr(), [0u8; 4].as_ptr(), 4, &mut v) };
    assert_eq!(status, BaStatus::Ok);
    assert_eq!(v, 0.5);
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(ba_dataset_generate(ptr::null(), &mut d), BaStatus::NullPointer);
        assert!(last_error().contains("cfg"));

        let path = CString::new("/definitely/not/here.csv").unwrap();
        let schema = CString::new("synthetic").unwrap();
        assert_eq!(ba_dataset_load_csv(path.as_ptr(), schema.as_ptr(), &mut d), BaStatus::Io);
        assert!(d.is_null());

        let bad_schema = CString::new("no-such-preset").unwrap();
        assert_eq!(ba_dataset_load_csv(path.as_ptr(), bad_schema.as_ptr(), &mut d), BaStatus::InvalidArgument);

        // Label values outside {0, 1}.
        let x = [1.0, 2.0];
        assert_eq!(
            ba_dataset_from_arrays(2, 1, x.as_ptr(), [0u8, 2].as_ptr(), [0u8, 1].as_ptr(), &mut d),
            BaStatus::InvalidData
        );

        let mut cfg = std::mem::zeroed::<BaSynthConfig>();
        ba_synth_config_default(&mut cfg);
        cfg.n = 100;
        cfg.class_rate = 0.9;
        cfg.minority_share = 0.9;
        cfg.p_minority = 0.1;
        assert_eq!(ba_dataset_generate(&cfg, &mut d), BaStatus::Infeasible);

        let g = synthetic(200, 1);
        let mut out = ptr::null_mut();
        assert_eq!(ba_repair(g, BaStrategy::SmoteF, 1.5, 0, &mut out), BaStatus::InvalidArgument);
        let mut buf = [0u8; 3];
        assert_eq!(ba_dataset_target(g, buf.as_mut_ptr(), buf.len()), BaStatus::InvalidArgument);
        ba_dataset_free(g);
        ba_dataset_free(ptr::null_mut());
        ba_model_free(ptr::null_mut());
    }
}

#[test]
fn repair_tune_and_csv_round_trip() {
    unsafe {
        let d = synthetic(400, 11);
        let mut amount = 0.0;
        assert_eq!(
            ba_tune_amount(d, BaStrategy::CounterfactualF, BaLearner::GaussianNb, 1e-9, true, 3, 5, &mut amount),
            BaStatus::Ok
        );
        assert!(amount > 0.0 && amount <= 1.0);

        let mut repaired = ptr::null_mut();
        assert_eq!(ba_repair(d, BaStrategy::CounterfactualF, amount, 5, &mut repaired), BaStatus::Ok);
        let (mut before, mut after, mut cols) = (0, 0, 0);
        ba_dataset_shape(d, &mut before, &mut cols);
        ba_dataset_shape(repaired, &mut after, &mut cols);
        assert!(after > before);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("r.csv").to_str().unwrap()).unwrap();
        assert_eq!(ba_dataset_write_csv(repaired, path.as_ptr()), BaStatus::Ok);
        let schema = CString::new("synthetic").unwrap();
        let mut loaded = ptr::null_mut();
        assert_eq!(ba_dataset_load_csv(path.as_ptr(), schema.as_ptr(), &mut loaded), BaStatus::Ok);
        let mut rows = 0;
        ba_dataset_shape(loaded, &mut rows, &mut cols);
        assert_eq!(rows, after);

        let mut a = vec![0u8; rows];
        let mut b = vec![0u8; rows];
        ba_dataset_target(repaired, a.as_mut_ptr(), rows);
        ba_dataset_target(loaded, b.as_mut_ptr(), rows);
        assert_eq!(a, b);

        for p in [d, repaired, loaded] {
            ba_dataset_free(p);
        }
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(ba_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// The generated header compiles as C and the status values match.
#[test]
fn header_compiles_as_c() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/biasaudit.h");
    let text = std::fs::read_to_string(&header).expect("build script writes the header");
    for name in ["BaDataset", "BaModel", "ba_model_fit", "ba_audit", "ba_last_error", "BA_STATUS_INFEASIBLE = 4"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; header syntax check skipped");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"biasaudit.h\"\n\
         _Static_assert(BA_STATUS_OK == 0, \"ok\");\n\
         _Static_assert(BA_STATUS_PANIC == 7, \"panic\");\n\
         int probe(const BaDataset *d, BaModel **m) { return ba_model_fit(d, BA_LEARNER_LOG_REG, 0.001, true, 1, m); }\n",
    )
    .unwrap();
    let status = Command::new(cc)
        .args(["-std=c11", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
