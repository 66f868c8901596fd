use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use hyperpair_ffi::*;

fn generated(n: usize, field: HpField, seed: u64) -> *mut HpPair {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { hp_pair_generate(n, field, seed, HpMode::Strong, &mut p) }, HpStatus::Ok);
    assert!(!p.is_null());
    p
}

fn take_string(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { hp_string_free(s) };
    out
}

#[test]
fn pair_json_round_trip() {
    let p = generated(3, HpField::Quaternion, 1);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { hp_pair_to_json(p, &mut s) }, HpStatus::Ok);
    let text = take_string(s);
    let c = CString::new(text.clone()).unwrap();
    let mut q = ptr::null_mut();
    assert_eq!(unsafe { hp_pair_from_json(c.as_ptr(), &mut q) }, HpStatus::Ok);
    let mut s2 = ptr::null_mut();
    assert_eq!(unsafe { hp_pair_to_json(q, &mut s2) }, HpStatus::Ok);
    assert_eq!(take_string(s2), text);
    unsafe {
        hp_pair_free(p);
        hp_pair_free(q);
    }
}

#[test]
fn invariants_and_conjugacy_through_handles() {
    for field in [HpField::Quaternion, HpField::Complex] {
        let p = generated(3, field, 4);
        let mut q = ptr::null_mut();
        assert_eq!(unsafe { hp_pair_conjugate_random(p, 99, &mut q) }, HpStatus::Ok);

        let (mut ip, mut iq) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(unsafe { hp_invariants_compute(p, HpMode::Strong, 0.0, &mut ip) }, HpStatus::Ok);
        assert_eq!(unsafe { hp_invariants_compute(q, HpMode::Strong, 0.0, &mut iq) }, HpStatus::Ok);
        let (mut ap, mut aq) = ([0.0; 3], [0.0; 3]);
        unsafe {
            assert_eq!(hp_invariants_angular(ip, ap.as_mut_ptr()), HpStatus::Ok);
            assert_eq!(hp_invariants_angular(iq, aq.as_mut_ptr()), HpStatus::Ok);
        }
        for (x, y) in ap.iter().zip(&aq) {
            assert!((x - y).abs() < 1e-8);
        }
        let mut js = ptr::null_mut();
        assert_eq!(unsafe { hp_invariants_to_json(ip, &mut js) }, HpStatus::Ok);
        assert!(take_string(js).contains("cross_ratios"));

        let mut c = ptr::null_mut();
        assert_eq!(unsafe { hp_conjugacy_test(p, q, HpMode::Strong, 0.0, &mut c) }, HpStatus::Ok);
        unsafe {
            assert_eq!(hp_conjugacy_is_conjugate(c), 1);
            assert!(hp_conjugacy_residual(c) <= 1e-7);
            assert_eq!(CStr::from_ptr(hp_conjugacy_stage(c)).to_str().unwrap(), "verified");
            let mut cj = ptr::null_mut();
            assert_eq!(hp_conjugacy_to_json(c, &mut cj), HpStatus::Ok);
            assert!(take_string(cj).contains("\"conjugate\": true"));
            hp_conjugacy_free(c);
        }

        let other = generated(3, field, 5);
        let mut c = ptr::null_mut();
        assert_eq!(unsafe { hp_conjugacy_test(p, other, HpMode::Strong, 0.0, &mut c) }, HpStatus::Ok);
        unsafe {
            assert_eq!(hp_conjugacy_is_conjugate(c), 0);
            let stage = CStr::from_ptr(hp_conjugacy_stage(c)).to_str().unwrap();
            assert!(stage == "real-trace" || stage == "tuple", "{stage}");
            hp_conjugacy_free(c);
            hp_invariants_free(ip);
            hp_invariants_free(iq);
            hp_pair_free(p);
            hp_pair_free(q);
            hp_pair_free(other);
        }
    }
}

#[test]
fn errors_are_reported() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { hp_pair_from_json(ptr::null(), &mut p) }, HpStatus::NullPointer);
    let bad = CString::new("{\"space\": 3}").unwrap();
    assert_eq!(unsafe { hp_pair_from_json(bad.as_ptr(), &mut p) }, HpStatus::Parse);
    let msg = unsafe { CStr::from_ptr(hp_last_error_message()) }.to_str().unwrap();
    assert!(msg.contains("line 1"), "{msg}");
    assert!(p.is_null());

    assert_eq!(unsafe { hp_pair_generate(1, HpField::Quaternion, 0, HpMode::Strong, &mut p) }, HpStatus::InvalidArgument);
    let q = generated(2, HpField::Quaternion, 0);
    let mut inv = ptr::null_mut();
    assert_eq!(unsafe { hp_invariants_compute(q, HpMode::Strong, -1.0, &mut inv) }, HpStatus::InvalidArgument);
    assert_eq!(unsafe { hp_invariants_compute(q, HpMode::Strong, 0.0, ptr::null_mut()) }, HpStatus::NullPointer);
    unsafe {
        assert_eq!(hp_conjugacy_is_conjugate(ptr::null()), -1);
        assert!(hp_conjugacy_residual(ptr::null()).is_nan());
        hp_pair_free(q);
        hp_pair_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/hyperpair.h")).unwrap();
    for name in ["hp_pair_generate", "hp_invariants_compute", "hp_conjugacy_test", "hp_last_error_message", "HP_STATUS_OK"] {
        assert!(header.contains(name), "{name}");
    }
    let Ok(cc) = which_cc() else { return };
    let src = std::env::temp_dir().join(format!("hyperpair-ffi-{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"hyperpair.h\"\nint use(void) { HpPair *p = 0; return hp_pair_generate(3, HP_FIELD_QUATERNION, 1, HP_MODE_STRONG, &p); }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
