//! The C ABI exercised from Rust, plus a C compile check of the header.

use std::ffi::{CStr, CString};
use std::ptr;

use monodromy_ffi::*;

fn z(re: f64, im: f64) -> MonoComplex {
    MonoComplex { re, im }
}

fn last_error() -> String {
    let p = mono_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

const FUCHSIAN: &str = "\
coords: tau q
momenta: ptau p
H = ptau + (2*0.3*q*p)/(2*(tau - (1 + i))) + (-0.25*q^2 + 0.25*p^2)/(2*(tau - (1 - i)))
";

unsafe fn fuchsian_generator(sys: *const MonoSystem, candidate: MonoComplex) -> Vec<MonoComplex> {
    let x0 = [z(0.0, 0.0); 4];
    let mut p = ptr::null_mut();
    assert_eq!(mono_probe(sys, x0.as_ptr(), 4, z(0.0, 0.0), candidate, 0.0, &mut p), MonoStatus::Ok);
    assert_eq!(mono_probe_classification(p), MonoClassification::Generator);
    assert_eq!(mono_probe_traversals(p), 1);
    let mut m = vec![MonoComplex::default(); 16];
    assert_eq!(mono_probe_matrix(p, m.as_mut_ptr(), m.len()), MonoStatus::Ok);
    mono_probe_free(p);
    m
}

#[test]
fn catalog_probe_round_trip() {
    unsafe {
        let name = CString::new("oracle_cubic").unwrap();
        let mut sys = ptr::null_mut();
        assert_eq!(mono_system_from_catalog(name.as_ptr(), &mut sys), MonoStatus::Ok);
        assert_eq!(mono_system_dim(sys), 1);
        let x0 = [z(1.0, 0.0)];
        let mut p = ptr::null_mut();
        assert_eq!(mono_probe(sys, x0.as_ptr(), 1, z(0.0, 0.0), z(0.5, 0.0), 0.0, &mut p), MonoStatus::Ok);
        assert_eq!(mono_probe_classification(p), MonoClassification::Trivial);
        assert_eq!(mono_probe_traversals(p), 2);
        let mut m = [MonoComplex::default(); 1];
        assert_eq!(mono_probe_matrix(p, m.as_mut_ptr(), 1), MonoStatus::Ok);
        assert!((m[0].re - 1.0).abs() < 1e-7 && m[0].im.abs() < 1e-7);
        assert_eq!(mono_probe_matrix(p, m.as_mut_ptr(), 0), MonoStatus::BufferTooSmall);
        mono_probe_free(p);
        mono_system_free(sys);
    }
}

#[test]
fn dsl_generators_do_not_commute() {
    unsafe {
        let text = CString::new(FUCHSIAN).unwrap();
        let mut sys = ptr::null_mut();
        assert_eq!(mono_system_from_dsl(text.as_ptr(), &mut sys), MonoStatus::Ok);
        let a = fuchsian_generator(sys, z(1.0, 1.0));
        let b = fuchsian_generator(sys, z(1.0, -1.0));
        let mut c = vec![MonoComplex::default(); 16];
        assert_eq!(mono_commutator(a.as_ptr(), b.as_ptr(), 4, c.as_mut_ptr()), MonoStatus::Ok);
        let norm: f64 = c.iter().map(|w| w.re * w.re + w.im * w.im).sum::<f64>().sqrt();
        assert!(norm > 1e-2, "{norm}");
        let mut zero = vec![MonoComplex::default(); 16];
        assert_eq!(mono_commutator(a.as_ptr(), a.as_ptr(), 4, zero.as_mut_ptr()), MonoStatus::Ok);
        assert!(zero.iter().all(|w| w.re.abs() < 1e-12 && w.im.abs() < 1e-12));
        mono_system_free(sys);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut sys = ptr::null_mut();
        let bad = CString::new("no_such_system").unwrap();
        assert_eq!(mono_system_from_catalog(bad.as_ptr(), &mut sys), MonoStatus::System);
        assert!(last_error().contains("no_such_system"));
        assert!(sys.is_null());

        assert_eq!(mono_system_from_catalog(ptr::null(), &mut sys), MonoStatus::NullPointer);
        let broken = CString::new("state: x\nx' = (x +\n").unwrap();
        assert_eq!(mono_system_from_dsl(broken.as_ptr(), &mut sys), MonoStatus::System);

        let name = CString::new("henon_heiles").unwrap();
        assert_eq!(mono_system_from_catalog(name.as_ptr(), &mut sys), MonoStatus::Ok);
        let x0 = [z(1.0, 0.0); 2];
        let mut p = ptr::null_mut();
        assert_eq!(mono_probe(sys, x0.as_ptr(), 2, z(1.0, 0.0), z(0.2, 2.5), 0.0, &mut p), MonoStatus::Dimension);
        let x0 = [z(1.0, 0.0); 4];
        assert_eq!(mono_probe(sys, x0.as_ptr(), 4, z(1.0, 0.0), z(1.0, 0.0), 0.0, &mut p), MonoStatus::Probe);
        assert!(p.is_null());
        mono_system_free(sys);
        mono_system_free(ptr::null_mut());
        mono_string_free(ptr::null_mut());
    }
}

#[test]
fn run_json_returns_a_report() {
    let config = serde_json::json!({
        "system": {"catalog": "oracle_riccati"},
        "initial_state": [[1.0, 0.0]],
        "t0": [0.0, 0.0],
        "mode": "probe",
        "candidates": [[1.0, 0.0]],
    });
    unsafe {
        let text = CString::new(config.to_string()).unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(mono_run_json(text.as_ptr(), &mut out), MonoStatus::Ok);
        let report: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        mono_string_free(out);
        assert_eq!(report["outcomes"][0]["classification"], "Trivial");
        assert_eq!(report["verdict"]["conclusion"], "NoObstructionFound");

        let mut out = ptr::null_mut();
        let missing = CString::new(r#"{"mode": "probe"}"#).unwrap();
        assert_eq!(mono_run_json(missing.as_ptr(), &mut out), MonoStatus::Config);
        assert!(out.is_null());
        assert!(last_error().contains("missing field"));
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/monodromy.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in ["mono_probe", "mono_commutator", "mono_run_json", "mono_last_error", "MONO_STATUS_OK"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\nint main(void) {{ MonoSystem *s = 0; MonoStatus st = mono_system_from_catalog(\"satellite\", &s); mono_system_free(s); return st == MONO_STATUS_OK ? 0 : 1; }}\n"
        ),
    )
    .unwrap();
    let Ok(out) = std::process::Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output()
    else {
        eprintln!("no C compiler found; skipping the compile check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
