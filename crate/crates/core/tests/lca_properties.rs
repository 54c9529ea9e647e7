mod common;

use chirpcode::lca::{drive_residual, hard_threshold};
use chirpcode::{encode, init_gammatone_dictionary, project, reconstruct, snr, threshold, LcaConfig};
use common::*;
use rand::RngExt;

const PAPER_LAMBDA: f64 = 0.00045;

#[test]
fn energy_trace_is_non_increasing() {
    let mut r = rng(21);
    for _ in 0..30 {
        let d = coding_dictionary(&mut r, 6);
        let frames = r.random_range(4..=12);
        let extra = r.random_range(0..d.stride());
        let s = random_signal(&mut r, d.span(frames) + extra, 0.5);
        let cfg = LcaConfig::new(PAPER_LAMBDA);
        let (_, st) = encode(&s, &d, &cfg).unwrap();
        let e0 = st.energy_trace[0];
        for w in st.energy_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-6 * e0, "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn final_state_is_thresholded_and_stationary() {
    let mut r = rng(22);
    let d = coding_dictionary(&mut r, 5);
    let s = random_signal(&mut r, d.span(8), 0.5);
    let cfg = LcaConfig {
        max_iters: 20000,
        rel_tol: 1e-9,
        ..LcaConfig::new(0.02)
    };
    let (code, st) = encode(&s, &d, &cfg).unwrap();
    assert!(st.converged);
    assert_eq!(st.a, threshold(&st.v, cfg.lambda));
    for (&v, &a) in st.v.as_slice().iter().zip(st.a.as_slice()) {
        assert_eq!(a, hard_threshold(v, cfg.lambda));
    }
    let p = project(&d, &s).unwrap();
    let res = drive_residual(&p, &st.v, &st.a, d.kernel()).max_abs();
    assert!(res <= cfg.rel_tol * p.max_abs());
    assert!(code.events().iter().all(|e| e.2.abs() >= cfg.lambda));
}

#[test]
fn encoding_is_deterministic() {
    let mut r = rng(23);
    let d = coding_dictionary(&mut r, 6);
    let s = random_signal(&mut r, d.span(10), 0.5);
    let cfg = LcaConfig::new(0.01);
    let (a, sa) = encode(&s, &d, &cfg).unwrap();
    let (b, sb) = encode(&s, &d, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(sa.energy_trace, sb.energy_trace);
}

#[test]
fn recovers_sparse_combination() {
    let d = init_gammatone_dictionary(16, 100.0f64, 6000.0, 256, 128, SR).unwrap();
    let lambda = 1e-4;
    let events = [(1, 1, 0.3), (5, 3, -0.2), (9, 6, 0.25), (12, 2, 0.15), (15, 8, -0.4)];
    let (s, _) = synthesize(&d, 10, &events, lambda);
    let cfg = LcaConfig {
        max_iters: 6000,
        ..LcaConfig::new(lambda)
    };
    let (code, _) = encode(&s, &d, &cfg).unwrap();
    let y = reconstruct(&d, &code).unwrap();
    assert!(snr(&s, &y).unwrap() >= 40.0);
    assert!(code.len() <= 3 * events.len());
}

#[test]
fn single_precision_tracks_double() {
    let d64 = init_gammatone_dictionary(8, 200.0f64, 5000.0, 64, 32, SR).unwrap();
    let d32 = init_gammatone_dictionary(8, 200.0f32, 5000.0, 64, 32, SR).unwrap();
    let mut r = rng(24);
    let s64 = random_signal(&mut r, d64.span(10), 0.5);
    let s32: Vec<f32> = s64.iter().map(|&x| x as f32).collect();
    let (c64, _) = encode(&s64, &d64, &LcaConfig::new(0.05)).unwrap();
    let (c32, _) = encode(&s32, &d32, &LcaConfig::new(0.05f32)).unwrap();
    let y64 = reconstruct(&d64, &c64).unwrap();
    let y32 = reconstruct(&d32, &c32).unwrap();
    let q64 = snr(&s64, &y64).unwrap();
    let q32 = f64::from(snr(&s32, &y32).unwrap());
    assert!((q64 - q32).abs() < 0.5, "{q64} vs {q32}");
}
