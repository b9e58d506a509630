use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use explkit::corpus::{write_canonical, Dataset, Instance, Split};
use explkit_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = explkit_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    explkit_string_free(s);
    out
}

fn write_fixture(dir: &Path) -> PathBuf {
    let instances = (0..10)
        .map(|i| {
            Instance::nli(
                format!("t{i}"),
                format!("A man plays guitar number {i}."),
                "A person makes music.",
                "entailment",
                vec![format!("Playing guitar is making music {i}.")],
            )
        })
        .collect();
    let ds = Dataset::new("fixture", Split::Train, instances).unwrap();
    let path = dir.join("train.jsonl");
    write_canonical(&ds, &path).unwrap();
    path
}

fn load(path: &Path) -> *mut ExplkitDataset {
    let mut ds = ptr::null_mut();
    let path = c(path.to_str().unwrap());
    let status = unsafe { explkit_dataset_load(path.as_ptr(), c("train").as_ptr(), &mut ds) };
    assert_eq!(status, ExplkitStatus::Ok);
    ds
}

#[test]
fn load_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let ds = load(&write_fixture(dir.path()));
    unsafe {
        assert_eq!(explkit_dataset_len(ds), 10);
        let mut stats = ExplkitStats::default();
        assert_eq!(explkit_dataset_stats(ds, &mut stats), ExplkitStatus::Ok);
        assert_eq!(stats.count, 10);
        assert_eq!(stats.explanation_count, 10);
        // "A man plays guitar number i." + "A person makes music."
        assert_eq!(stats.mean_input_tokens, 10.0);
        assert_eq!(stats.sd_input_tokens, 0.0);
        assert_eq!(stats.mean_expl_tokens, 6.0);
        explkit_dataset_free(ds);
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let mut ds = ptr::null_mut();
    let status = unsafe {
        explkit_dataset_load(
            c("/nonexistent/x.jsonl").as_ptr(),
            c("train").as_ptr(),
            &mut ds,
        )
    };
    assert_eq!(status, ExplkitStatus::Io);
    assert!(ds.is_null());
    assert!(last_error().contains("/nonexistent/x.jsonl"));
}

#[test]
fn null_and_bad_arguments() {
    let mut ds = ptr::null_mut();
    unsafe {
        assert_eq!(
            explkit_dataset_load(ptr::null(), c("train").as_ptr(), &mut ds),
            ExplkitStatus::NullPointer
        );
        assert!(last_error().contains("path"));
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(
            explkit_dataset_load(bad.as_ptr().cast(), c("train").as_ptr(), &mut ds),
            ExplkitStatus::InvalidUtf8
        );
        assert_eq!(
            explkit_dataset_load(c("x").as_ptr(), c("holdout").as_ptr(), &mut ds),
            ExplkitStatus::InvalidInput
        );
        assert_eq!(explkit_dataset_len(ptr::null()), 0);
        explkit_dataset_free(ptr::null_mut());
        explkit_string_free(ptr::null_mut());
        explkit_eval_set_free(ptr::null_mut());
    }
}

#[test]
fn compile_pte_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let ds = load(&write_fixture(dir.path()));
    unsafe {
        let mut out = ptr::null_mut();
        let status = explkit_compile_pairs_jsonl(
            ds,
            c("pte").as_ptr(),
            c("pte_predictor").as_ptr(),
            30.0,
            7,
            &mut out,
        );
        assert_eq!(status, ExplkitStatus::Ok);
        assert_eq!(take(out).lines().count(), 10);

        let status = explkit_compile_pairs_jsonl(
            ds,
            c("pte").as_ptr(),
            c("pte_explainer").as_ptr(),
            30.0,
            7,
            &mut out,
        );
        assert_eq!(status, ExplkitStatus::Ok);
        let explainer = take(out);
        assert_eq!(explainer.lines().count(), 3);
        for line in explainer.lines() {
            assert!(line.starts_with('{') && line.ends_with('}'), "{line}");
        }
        explkit_dataset_free(ds);
    }
}

#[test]
fn compile_rejects_foreign_stage_and_semi_labeling() {
    let dir = tempfile::tempdir().unwrap();
    let ds = load(&write_fixture(dir.path()));
    unsafe {
        let mut out = ptr::null_mut();
        let status = explkit_compile_pairs_jsonl(
            ds,
            c("joint").as_ptr(),
            c("pte_explainer").as_ptr(),
            100.0,
            7,
            &mut out,
        );
        assert_eq!(status, ExplkitStatus::InvalidInput);
        assert!(out.is_null());
        let status = explkit_compile_pairs_jsonl(
            ds,
            c("etp_sl").as_ptr(),
            c("etp_predictor").as_ptr(),
            30.0,
            7,
            &mut out,
        );
        assert_eq!(status, ExplkitStatus::BackendRequired);
        let status = explkit_compile_pairs_jsonl(
            ds,
            c("etp").as_ptr(),
            c("etp_predictor").as_ptr(),
            150.0,
            7,
            &mut out,
        );
        assert_eq!(status, ExplkitStatus::Budget);
        explkit_dataset_free(ds);
    }
}

#[test]
fn render_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let ds = load(&write_fixture(dir.path()));
    unsafe {
        let mut out = ptr::null_mut();
        let status = explkit_render_input(
            ds,
            c("t3").as_ptr(),
            c("pte_explainer").as_ptr(),
            c("contradiction").as_ptr(),
            ptr::null(),
            &mut out,
        );
        assert_eq!(status, ExplkitStatus::Ok);
        let text = take(out);
        assert!(text.contains("guitar number 3"), "{text}");
        assert!(text.contains("contradiction"), "{text}");
        assert!(!text.contains("entailment"), "{text}");

        let status = explkit_render_input(
            ds,
            c("t3").as_ptr(),
            c("etp_predictor").as_ptr(),
            ptr::null(),
            c("  raw explainer output ").as_ptr(),
            &mut out,
        );
        assert_eq!(status, ExplkitStatus::Ok);
        assert!(take(out).contains("  raw explainer output "));

        let status = explkit_render_input(
            ds,
            c("nope").as_ptr(),
            c("joint").as_ptr(),
            ptr::null(),
            ptr::null(),
            &mut out,
        );
        assert_eq!(status, ExplkitStatus::NotFound);
        assert!(last_error().contains("nope"));
        explkit_dataset_free(ds);
    }
}

#[test]
fn recover_ratio_values() {
    let mut r = 0.0;
    unsafe {
        assert_eq!(
            explkit_recover_ratio(90.31, 97.81, &mut r),
            ExplkitStatus::Ok
        );
        assert!((r - 92.332).abs() < 1e-3);
        assert_eq!(
            explkit_recover_ratio(50.0, 0.0, &mut r),
            ExplkitStatus::ZeroGoldAccuracy
        );
        assert_eq!(
            explkit_recover_ratio(1.0, 1.0, ptr::null_mut()),
            ExplkitStatus::NullPointer
        );
    }
}

#[test]
fn eval_set_scores() {
    unsafe {
        let set = explkit_eval_set_new();
        let refs = [c("the cat sat on the mat"), c("a cat sat")];
        let ref_ptrs: Vec<*const c_char> = refs.iter().map(|r| r.as_ptr()).collect();
        let push = |cand: &str, gold: &str, pred: &str| {
            explkit_eval_set_push(
                set,
                c(cand).as_ptr(),
                ref_ptrs.as_ptr(),
                ref_ptrs.len(),
                c(gold).as_ptr(),
                c(pred).as_ptr(),
            )
        };
        assert_eq!(
            push("the cat sat on the mat", "yes", "yes"),
            ExplkitStatus::Ok
        );
        assert_eq!(
            push("the cat sat on the mat", "yes", "no"),
            ExplkitStatus::Ok
        );
        let mut report = ExplkitReport::default();
        assert_eq!(explkit_eval_set_report(set, &mut report), ExplkitStatus::Ok);
        assert_eq!(report.n_evaluated, 2);
        assert_eq!(report.n_parse_failures, 0);
        assert_eq!(report.accuracy, 0.5);
        assert!((report.bleu - 100.0).abs() < 1e-9, "{}", report.bleu);
        assert_eq!(report.rouge_l, 1.0);
        assert!(
            report.meteor > 0.99 && report.meteor <= 1.0,
            "{}",
            report.meteor
        );
        explkit_eval_set_free(set);
    }
}

#[test]
fn eval_set_without_references_has_nan_generation_scores() {
    unsafe {
        let set = explkit_eval_set_new();
        let status = explkit_eval_set_push(
            set,
            c("x").as_ptr(),
            ptr::null(),
            0,
            c("a").as_ptr(),
            c("a").as_ptr(),
        );
        assert_eq!(status, ExplkitStatus::Ok);
        let mut report = ExplkitReport::default();
        assert_eq!(explkit_eval_set_report(set, &mut report), ExplkitStatus::Ok);
        assert!(report.bleu.is_nan());
        assert!(report.meteor.is_nan());
        explkit_eval_set_free(set);
    }
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(explkit_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn errors_are_per_thread() {
    let mut r = 0.0;
    unsafe { explkit_recover_ratio(1.0, 0.0, &mut r) };
    let here = last_error();
    let other = std::thread::spawn(|| explkit_last_error_message().is_null())
        .join()
        .unwrap();
    assert!(other);
    assert_eq!(here, last_error());
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"explkit.h\"\n\
         int probe(void) {\n\
           ExplkitDataset *ds = 0;\n\
           ExplkitStats s;\n\
           ExplkitStatus st = explkit_dataset_load(\"x\", \"train\", &ds);\n\
           if (st != EXPLKIT_STATUS_OK) return (int)st;\n\
           explkit_dataset_stats(ds, &s);\n\
           explkit_dataset_free(ds);\n\
           return (int)s.count;\n\
         }\n",
    )
    .unwrap();
    for lang in ["c", "c++"] {
        let out = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg("-I")
            .arg(&include)
            .arg(&src)
            .output()
            .expect("cc is available");
        assert!(
            out.status.success(),
            "{lang}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
