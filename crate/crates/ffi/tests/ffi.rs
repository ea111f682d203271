use std::ffi::{c_char, CStr, CString};
use std::ptr;

use mcfill_ffi::*;

const TWO: &str = r#"{"blocks":[{"measure":"1/2","points":["a"]},{"measure":"1/2","points":["b"]}]}"#;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = mcf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn model(json: &str) -> *mut McfModel {
    let mut m = ptr::null_mut();
    assert_eq!(mcf_model_from_json(c(json).as_ptr(), &mut m), McfStatus::Ok);
    m
}

#[test]
fn model_and_family_handles() {
    unsafe {
        let m = model(TWO);
        let mut n = 0usize;
        assert_eq!(mcf_model_point_count(m, &mut n), McfStatus::Ok);
        assert_eq!(n, 2);

        let mut f = ptr::null_mut();
        let fam = c(r#"{"kind":"explicit","generators":[["a"]]}"#);
        assert_eq!(mcf_family_from_json(fam.as_ptr(), m, &mut f), McfStatus::Ok);
        let mut member = false;
        assert_eq!(mcf_family_contains(f, [0u64].as_ptr(), 1, &mut member), McfStatus::Ok);
        assert!(member);
        assert_eq!(
            mcf_family_contains(f, [0u64, 1].as_ptr(), 2, &mut member),
            McfStatus::Ok
        );
        assert!(!member);
        assert_eq!(mcf_family_contains(f, ptr::null(), 0, &mut member), McfStatus::Ok);
        assert!(member);

        let mut holds = true;
        let mut json: *mut c_char = ptr::null_mut();
        let eps = c("1/2");
        assert_eq!(
            mcf_check_mcfilling(m, f, eps.as_ptr(), 0, 10, &mut holds, &mut json),
            McfStatus::Ok
        );
        assert!(!holds);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(v["value"], "1/2");
        assert_eq!(v["certificate"]["kind"], "partition");
        mcf_string_free(json);

        let eps = c("1/3");
        assert_eq!(
            mcf_check_mcfilling(m, f, eps.as_ptr(), 1, 10, &mut holds, &mut json),
            McfStatus::Ok
        );
        assert!(holds);
        mcf_string_free(json);

        mcf_family_free(f);
        mcf_model_free(m);
        mcf_model_free(ptr::null_mut());
        mcf_family_free(ptr::null_mut());
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(mcf_model_from_json(ptr::null(), &mut m), McfStatus::NullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(mcf_model_from_json(c("{").as_ptr(), &mut m), McfStatus::Parse);
        let bad = c(r#"{"blocks":[{"measure":"1/2","points":["a"]}]}"#);
        assert_eq!(mcf_model_from_json(bad.as_ptr(), &mut m), McfStatus::InvalidInput);
        assert!(m.is_null());

        let two = model(TWO);
        let mut f = ptr::null_mut();
        let fam = c(r#"{"kind":"all"}"#);
        assert_eq!(mcf_family_from_json(fam.as_ptr(), two, &mut f), McfStatus::Ok);
        let mut holds = false;
        let mut json = ptr::null_mut();
        let eps = c("half");
        assert_eq!(
            mcf_check_mcfilling(two, f, eps.as_ptr(), 0, 10, &mut holds, &mut json),
            McfStatus::Parse
        );
        let eps = c("1/2");
        assert_eq!(
            mcf_check_mcfilling(two, f, eps.as_ptr(), 0, 1, &mut holds, &mut json),
            McfStatus::ResourceLimit
        );
        assert!(json.is_null());
        assert_eq!(
            mcf_check_mcfilling(ptr::null(), f, eps.as_ptr(), 0, 10, &mut holds, &mut json),
            McfStatus::NullPointer
        );
        mcf_family_free(f);
        mcf_model_free(two);
    }
}

#[test]
fn schreier_buffers() {
    unsafe {
        let h = [4u64, 1, 3, 2, 5];
        let mut out = [0u64; 5];
        let mut len = 0;
        assert_eq!(
            mcf_schreier_extract(h.as_ptr(), 5, out.as_mut_ptr(), 5, &mut len),
            McfStatus::Ok
        );
        assert_eq!(&out[..len], &[3, 4, 5]);
        assert_eq!(
            mcf_schreier_extract(h.as_ptr(), 5, out.as_mut_ptr(), 2, &mut len),
            McfStatus::BufferTooSmall
        );
        assert_eq!(len, 3);
        assert_eq!(
            mcf_schreier_extract(ptr::null(), 0, ptr::null_mut(), 0, &mut len),
            McfStatus::Ok
        );
        assert_eq!(len, 0);
    }
}

#[test]
fn cli_through_the_abi() {
    unsafe {
        let args: Vec<CString> = ["mcfill", "schreier-extract", "1,2,3,4"].iter().map(|s| c(s)).collect();
        let argv: Vec<*const c_char> = args.iter().map(|a| a.as_ptr()).collect();
        let mut report = ptr::null_mut();
        assert_eq!(mcf_run_cli(argv.len() as i32, argv.as_ptr(), &mut report), 0);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(report).to_str().unwrap()).unwrap();
        assert_eq!(v["member"], serde_json::json!([3, 4]));
        mcf_string_free(report);

        let args: Vec<CString> = ["mcfill", "--bogus"].iter().map(|s| c(s)).collect();
        let argv: Vec<*const c_char> = args.iter().map(|a| a.as_ptr()).collect();
        assert_eq!(mcf_run_cli(argv.len() as i32, argv.as_ptr(), &mut report), 2);
        mcf_string_free(report);
        assert_eq!(mcf_run_cli(1, ptr::null(), &mut report), -1);
    }
}

/// The generated header is valid C when a compiler is available.
#[test]
fn header_compiles() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/mcfill.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(
        &src,
        format!("#include \"{header}\"\nint main(void) {{ return MCF_STATUS_OK; }}\n"),
    )
    .unwrap();
    match std::process::Command::new("cc").arg("-fsyntax-only").arg(&src).status() {
        Ok(status) => assert!(status.success()),
        Err(_) => eprintln!("no C compiler; header not checked"),
    }
}
