#![allow(dead_code)]

//! Dense-matrix oracles, finite differences and synthetic data shared by the
//! integration tests.

use chirpcode::{
    atom_jacobian, encode_traced, energy_gradient, synthesize_atom, AdaptConfig, AdaptMode, CoefMatrix, Dictionary,
    GammachirpParams, LcaConfig, SparseCode,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SR: u32 = 16000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_params(rng: &mut ChaCha8Rng, sample_rate: u32) -> GammachirpParams<f64> {
    let nyquist = f64::from(sample_rate) / 2.0;
    GammachirpParams::new(
        rng.random_range(80.0..0.8 * nyquist),
        rng.random_range(0.5..3.0),
        rng.random_range(-3.0..3.0),
        rng.random_range(1.5..6.0),
    )
}

/// Arbitrary chirps with arbitrary stride: the operator oracles must hold for
/// any geometry.
pub fn random_dictionary(rng: &mut ChaCha8Rng, max_channels: usize, max_filter_len: usize) -> Dictionary<f64> {
    let n = rng.random_range(1..=max_channels);
    let filter_len = rng.random_range(2..=max_filter_len);
    let stride = rng.random_range(1..=filter_len);
    let channels = (0..n).map(|_| random_params(rng, SR)).collect();
    Dictionary::new(channels, filter_len, stride, SR).unwrap()
}

/// Half-overlap chirp dictionary with log-spread frequencies; the kind of
/// geometry the solver is run with.
pub fn coding_dictionary(rng: &mut ChaCha8Rng, max_channels: usize) -> Dictionary<f64> {
    let n = rng.random_range(2..=max_channels);
    let filter_len = [16, 32, 64][rng.random_range(0..3usize)];
    let (lo, hi) = (150.0f64.ln(), 6000.0f64.ln());
    let channels = (0..n)
        .map(|i| {
            let u = (i as f64 + rng.random_range(0.2..0.8)) / n as f64;
            GammachirpParams::new(
                (lo + u * (hi - lo)).exp(),
                rng.random_range(0.7..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(2.0..5.0),
            )
        })
        .collect();
    Dictionary::new(channels, filter_len, filter_len / 2, SR).unwrap()
}

pub fn random_signal(rng: &mut ChaCha8Rng, len: usize, amplitude: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-amplitude..amplitude)).collect()
}

/// Columns of the explicit synthesis matrix, indexed `frame * n + channel`.
pub fn dense_columns(d: &Dictionary<f64>, n_frames: usize) -> Vec<Vec<f64>> {
    let n = d.n_channels();
    let span = d.span(n_frames);
    let mut cols = vec![vec![0.0; span]; n * n_frames];
    for t in 0..n_frames {
        for i in 0..n {
            let col = &mut cols[t * n + i];
            for (k, &g) in d.atom(i).iter().enumerate() {
                col[t * d.stride() + k] = g;
            }
        }
    }
    cols
}

pub fn dense_project(d: &Dictionary<f64>, s: &[f64], n_frames: usize) -> Vec<f64> {
    dense_columns(d, n_frames)
        .iter()
        .map(|c| c.iter().zip(s).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn dense_reconstruct(d: &Dictionary<f64>, a: &[f64], n_frames: usize) -> Vec<f64> {
    let cols = dense_columns(d, n_frames);
    let mut out = vec![0.0; d.span(n_frames)];
    for (c, &w) in cols.iter().zip(a) {
        for (o, x) in out.iter_mut().zip(c) {
            *o += w * x;
        }
    }
    out
}

/// `DᵀD` with the diagonal removed.
pub fn dense_gram(d: &Dictionary<f64>, n_frames: usize) -> Vec<Vec<f64>> {
    let cols = dense_columns(d, n_frames);
    let m = cols.len();
    let mut g = vec![vec![0.0; m]; m];
    for p in 0..m {
        for q in 0..m {
            if p != q {
                g[p][q] = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
            }
        }
    }
    g
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let num: f64 = got.iter().zip(want).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = want.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

pub fn central_diff(f: impl Fn(f64) -> Vec<f64>, x: f64, h: f64) -> Vec<f64> {
    let (hi, lo) = (f(x + h), f(x - h));
    hi.iter().zip(&lo).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

/// Energy after running the dynamics densely with the thresholding pattern
/// frozen to `masks` (one mask per iteration, flat `frame * n + channel`).
pub fn unrolled_energy(s: &[f64], d: &Dictionary<f64>, masks: &[Vec<bool>], eta: f64, lambda: f64, alpha: f64) -> f64 {
    let n_frames = d.n_frames(s.len()).unwrap();
    let span = d.span(n_frames);
    let p = dense_project(d, &s[..span], n_frames);
    let g = dense_gram(d, n_frames);
    let m = p.len();
    let mut v = vec![0.0; m];
    let mut a = vec![0.0; m];
    for mask in masks {
        let inhib: Vec<f64> = (0..m).map(|r| g[r].iter().zip(&a).map(|(x, y)| x * y).sum()).collect();
        for q in 0..m {
            v[q] += eta * (p[q] - v[q] - inhib[q]);
            a[q] = if mask[q] { v[q] } else { 0.0 };
        }
    }
    let recon = dense_reconstruct(d, &a, n_frames);
    let resid: f64 = s
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let y = recon.get(k).copied().unwrap_or(0.0);
            (y - x) * (y - x)
        })
        .sum();
    0.5 * resid + alpha * lambda * a.iter().map(|x| x.abs()).sum::<f64>()
}

/// Exact superposition of atoms; returns the signal and its generating code.
pub fn synthesize(d: &Dictionary<f64>, n_frames: usize, events: &[(usize, usize, f64)], lambda: f64) -> (Vec<f64>, SparseCode<f64>) {
    let code = SparseCode::from_events(d.n_channels(), n_frames, lambda, events.to_vec()).unwrap();
    let s = chirpcode::reconstruct(d, &code).unwrap();
    (s, code)
}

pub fn dense(m: &CoefMatrix<f64>) -> Vec<f64> {
    m.as_slice().to_vec()
}

/// Voiced, vowel-like utterance: a jittered glottal pulse train whose pulses
/// excite two chirped formant resonances, with pitch and formant frequencies
/// gliding over the utterance. Peak amplitude 0.5.
pub fn formant_sweep(rng: &mut ChaCha8Rng, len: usize, sample_rate: u32) -> Vec<f64> {
    let sr = f64::from(sample_rate);
    let f0 = rng.random_range(100.0..220.0);
    let f0_end = f0 * rng.random_range(0.8..1.25);
    // (start Hz, end Hz, bandwidth Hz, chirp, envelope order, gain)
    let formants = [
        (rng.random_range(300.0..800.0), rng.random_range(300.0..800.0), rng.random_range(50.0..90.0), rng.random_range(-2.0..2.0), rng.random_range(2.0..3.0), 1.0),
        (rng.random_range(900.0..2400.0), rng.random_range(900.0..2400.0), rng.random_range(70.0..130.0), rng.random_range(-2.0..2.0), rng.random_range(2.0..3.0), 0.5),
    ];
    let resp_len = (0.03 * sr) as usize;
    let mut out = vec![0.0; len];
    let mut at = rng.random_range(0.0..sr / f0);
    while (at as usize) < len {
        let start = at as usize;
        let u = start as f64 / len as f64;
        for &(fa, fb, bw, c, l, gain) in &formants {
            let fc = fa + (fb - fa) * u;
            for k in 0..resp_len.min(len - start) {
                let t = (k + 1) as f64 / sr;
                let env = t.powf(l - 1.0) * (-std::f64::consts::TAU * bw * t).exp();
                out[start + k] += gain * env * (std::f64::consts::TAU * fc * t + c * t.ln()).cos();
            }
        }
        let period = sr / (f0 + (f0_end - f0) * u);
        at += period * rng.random_range(0.97..1.03);
    }
    let ramp = (len / 10).max(1);
    for k in 0..ramp {
        let w = k as f64 / ramp as f64;
        out[k] *= w;
        out[len - 1 - k] *= w;
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    out.iter_mut().for_each(|v| *v *= 0.5 / peak);
    out
}

/// Worst relative error of each partial `[c, b, l, f]` over `draws` random
/// parameter sets.
pub fn jacobian_errors(seed: u64, draws: usize) -> [f64; 4] {
    let mut r = rng(seed);
    let mut worst = [0.0f64; 4];
    for _ in 0..draws {
        let p = random_params(&mut r, SR);
        let fl = r.random_range(32..=256);
        let jac = atom_jacobian(&p, fl, SR).unwrap();
        let at = |q: GammachirpParams<f64>| synthesize_atom(&q, fl, SR).unwrap().samples;
        let fd = [
            central_diff(|x| at(GammachirpParams { c: x, ..p }), p.c, 1e-5),
            central_diff(|x| at(GammachirpParams { b: x, ..p }), p.b, 1e-6),
            central_diff(|x| at(GammachirpParams { l: x, ..p }), p.l, 1e-5),
            central_diff(|x| at(GammachirpParams { f: x, ..p }), p.f, 1e-4),
        ];
        for (k, (got, want)) in [&jac.dc, &jac.db, &jac.dl, &jac.df].into_iter().zip(&fd).enumerate() {
            worst[k] = worst[k].max(rel_err(got, want));
        }
    }
    worst
}

/// Relative error of the truncated-backprop gradient against central
/// differences of the unrolled energy with the thresholding pattern frozen,
/// on a 2-channel toy.
pub fn frozen_set_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let channels = vec![
        GammachirpParams::new(r.random_range(600.0..1500.0), r.random_range(0.8..1.6), r.random_range(-1.0..1.0), r.random_range(2.5..4.5)),
        GammachirpParams::new(r.random_range(2500.0..5000.0), r.random_range(0.8..1.6), r.random_range(-1.0..1.0), r.random_range(2.5..4.5)),
    ];
    let d = Dictionary::new(channels, 16, 8, SR).unwrap();
    let n_frames = 5;
    let len = d.span(n_frames) + 3;
    let s = random_signal(&mut r, len, 1.0);
    let iters = 2500;
    let lca = LcaConfig {
        eta: 0.1,
        max_iters: iters,
        rel_tol: 0.0,
        ..LcaConfig::new(0.08)
    };
    let (_, trace) = encode_traced(&s, &d, &lca, iters).unwrap();
    let masks: Vec<Vec<bool>> = trace
        .history()
        .iter()
        .skip(1)
        .map(|a| {
            let mut m = vec![false; d.n_channels() * n_frames];
            a.index.iter().for_each(|&k| m[k] = true);
            m
        })
        .collect();
    assert_eq!(masks.len(), trace.iter);
    let alpha = 0.7;
    let cfg = AdaptConfig {
        alpha,
        tbptt_window: iters,
        ..AdaptConfig::new(AdaptMode::AlcaCf, SR)
    };
    let grad = energy_gradient(&s, &d, &trace, &lca, &cfg).unwrap();

    let mut got = Vec::new();
    let mut want = Vec::new();
    for i in 0..d.n_channels() {
        let base = d.channels()[i];
        let g = grad.channel(i);
        let steps = [1e-5, 1e-6, 1e-5, 1e-4];
        for (k, h) in steps.into_iter().enumerate() {
            let e_at = |x: f64| {
                let mut q = base;
                match k {
                    0 => q.c = x,
                    1 => q.b = x,
                    2 => q.l = x,
                    _ => q.f = x,
                }
                let mut ch = d.channels().to_vec();
                ch[i] = q;
                let d2 = d.with_channels(ch).unwrap();
                vec![unrolled_energy(&s, &d2, &masks, lca.eta, lca.lambda, alpha)]
            };
            let x0 = [base.c, base.b, base.l, base.f][k];
            want.push(central_diff(e_at, x0, h)[0]);
            got.push(g[k]);
        }
    }
    rel_err(&got, &want)
}
