//! Gradient-based adaptation of Gammachirp parameters.
//!
//! The energy gradient has two parts. The residual part differentiates
//! `½‖Da − s‖²` with respect to the atoms at the final code. The sparsity part
//! pushes `α·λ·sign(a)` back through the last `tbptt_window` Euler iterations,
//! where each iteration depends on the atoms through the drive `p = Dᵀs` and
//! the inhibition kernel `DᵀD − I`. Both land in atom space and are then
//! contracted with the per-channel Jacobian of the normalized atom.
//!
//! Two modes: `Alca` adapts `(c, b, l)`, `AlcaCf` also adapts the central
//! frequency `f` with its own learning rate.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{CoefMatrix, Signal};
use crate::dictionary::{erb_slope, erb_unchecked, raw_chirp, reconstruct_active_into, Dictionary, GammachirpParams};
use crate::error::{Error, Result};
use crate::lca::{encode_traced, LcaConfig, LcaState};
use crate::metrics::snr;
use crate::scalar::{axpy, dot, norm_sq, Scalar};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdaptMode {
    /// Modulation parameters `(c, b, l)` only.
    #[serde(rename = "alca")]
    Alca,
    /// Modulation parameters and central frequencies.
    #[serde(rename = "alca-cf")]
    AlcaCf,
}

impl AdaptMode {
    pub fn adapts_frequency(self) -> bool {
        matches!(self, AdaptMode::AlcaCf)
    }
}

impl fmt::Display for AdaptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdaptMode::Alca => "alca",
            AdaptMode::AlcaCf => "alca-cf",
        })
    }
}

impl FromStr for AdaptMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "alca" => Ok(AdaptMode::Alca),
            "alca-cf" | "alcacf" => Ok(AdaptMode::AlcaCf),
            other => Err(Error::Config(format!("unknown adaptation mode {other:?}"))),
        }
    }
}

/// Closed clamp ranges applied after each optimizer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds<T> {
    pub f: (T, T),
    pub b: (T, T),
    pub c: (T, T),
    pub l: (T, T),
}

impl<T: Scalar> ParamBounds<T> {
    /// f ∈ [20 Hz, 0.45·sr], b ∈ [0.2, 5], l ∈ [1.5, 8], c ∈ [−5, 5].
    pub fn for_sample_rate(sample_rate: u32) -> Self {
        Self {
            f: (T::lit(20.0), T::lit(0.45 * f64::from(sample_rate))),
            b: (T::lit(0.2), T::lit(5.0)),
            c: (T::lit(-5.0), T::lit(5.0)),
            l: (T::lit(1.5), T::lit(8.0)),
        }
    }

    fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = T::lit(f64::from(sample_rate) / 2.0);
        let ordered = [self.f, self.b, self.c, self.l].iter().all(|(lo, hi)| lo <= hi);
        if !ordered {
            return Err(Error::Config(format!("parameter bounds must satisfy lo ≤ hi: {self:?}")));
        }
        if !(self.f.0 > T::zero() && self.f.1 < nyquist) {
            return Err(Error::Config(format!("frequency bounds must lie inside (0, {nyquist}) Hz")));
        }
        if !(self.b.0 > T::zero()) || !(self.l.0 >= T::one()) {
            return Err(Error::Config("bounds must keep b > 0 and l ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig<T> {
    pub mode: AdaptMode,
    /// Learning rate for `c`, `b`, `l`.
    pub lr_mod: T,
    /// Learning rate for `f` (Hz per step scale).
    pub lr_cf: T,
    /// Weight of the sparsity term in the adaptation objective.
    pub alpha: T,
    pub tbptt_window: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub bounds: ParamBounds<T>,
    /// Seeds the per-epoch corpus shuffle.
    pub seed: u64,
}

impl<T: Scalar> AdaptConfig<T> {
    pub fn new(mode: AdaptMode, sample_rate: u32) -> Self {
        Self {
            mode,
            lr_mod: T::lit(0.01),
            lr_cf: T::lit(1.0),
            alpha: T::one(),
            tbptt_window: 50,
            epochs: 10,
            batch_size: 8,
            bounds: ParamBounds::for_sample_rate(sample_rate),
            seed: 0,
        }
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if !(self.lr_mod > T::zero()) {
            return Err(Error::Config(format!("lr_mod must be positive, got {}", self.lr_mod)));
        }
        if self.mode.adapts_frequency() && !(self.lr_cf > T::zero()) {
            return Err(Error::Config(format!("lr_cf must be positive in alca-cf mode, got {}", self.lr_cf)));
        }
        if !(self.alpha >= T::zero()) {
            return Err(Error::Config(format!("alpha must be ≥ 0, got {}", self.alpha)));
        }
        if self.tbptt_window == 0 {
            return Err(Error::Config("tbptt_window must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        self.bounds.validate(sample_rate)
    }
}

/// Log-spaced candidate values for `lr_cf` over `[1e−6, 1e2]`.
pub fn lr_cf_search_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![1e-6],
        n => (0..n)
            .map(|k| 10f64.powf(-6.0 + 8.0 * k as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Per-channel partial derivatives of the energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradients<T> {
    pub dc: Vec<T>,
    pub db: Vec<T>,
    pub dl: Vec<T>,
    pub df: Vec<T>,
}

impl<T: Scalar> ParamGradients<T> {
    pub fn zeros(n_channels: usize) -> Self {
        Self {
            dc: vec![T::zero(); n_channels],
            db: vec![T::zero(); n_channels],
            dl: vec![T::zero(); n_channels],
            df: vec![T::zero(); n_channels],
        }
    }

    pub fn n_channels(&self) -> usize {
        self.dc.len()
    }

    /// `[dc, db, dl, df]` of one channel.
    pub fn channel(&self, i: usize) -> [T; 4] {
        [self.dc[i], self.db[i], self.dl[i], self.df[i]]
    }

    pub fn is_finite(&self) -> bool {
        [&self.dc, &self.db, &self.dl, &self.df]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    fn scale(&mut self, k: T) {
        for v in [&mut self.dc, &mut self.db, &mut self.dl, &mut self.df] {
            v.iter_mut().for_each(|x| *x *= k);
        }
    }
}

/// Partials of the normalized atom with respect to each parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomJacobian<T> {
    pub dc: Vec<T>,
    pub db: Vec<T>,
    pub dl: Vec<T>,
    pub df: Vec<T>,
}

pub fn atom_jacobian<T: Scalar>(p: &GammachirpParams<T>, filter_len: usize, sample_rate: u32) -> Result<AtomJacobian<T>> {
    p.validate(sample_rate)?;
    let raw = raw_chirp(p, filter_len, sample_rate);
    let norm = norm_sq(&raw.samples).sqrt();
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::Gradient(format!("degenerate atom (norm {norm}) for {p:?}")));
    }
    let two_pi = T::TAU();
    let erb_f = erb_unchecked(p.f);
    let slope = erb_slope::<T>();
    let n = filter_len;
    let (mut dc, mut db, mut dl, mut df) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for k in 0..n {
        let (t, env, g) = (raw.t[k], raw.env[k], raw.samples[k]);
        let ln_t = t.ln();
        let sin = raw.phase[k].sin();
        dl.push(ln_t * g);
        db.push(-two_pi * erb_f * t * g);
        dc.push(-ln_t * env * sin);
        df.push(-two_pi * p.b * slope * t * g - two_pi * t * env * sin);
    }
    let unit: Vec<T> = raw.samples.iter().map(|&g| g / norm).collect();
    let project_out = |v: &mut Vec<T>| {
        let along = dot(&unit, v);
        for (x, &u) in v.iter_mut().zip(&unit) {
            *x = (*x - u * along) / norm;
        }
    };
    for v in [&mut dc, &mut db, &mut dl, &mut df] {
        project_out(v);
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Gradient(format!("non-finite atom partials for {p:?}")));
        }
    }
    Ok(AtomJacobian { dc, db, dl, df })
}

/// Energy sensitivities with respect to the atoms and the inhibition kernel
/// entries, accumulated before either is expanded into parameter space.
struct AtomAdjoint<T> {
    /// `N × F_l`, channel-major.
    atoms: Vec<T>,
    /// Kernel layout: `[(j * lags + d) * N + i]` for `entry(i, j, δ)`.
    kernel: Vec<T>,
}

impl<T: Scalar> AtomAdjoint<T> {
    fn zeros(n: usize, filter_len: usize, lags: usize) -> Self {
        Self {
            atoms: vec![T::zero(); n * filter_len],
            kernel: vec![T::zero(); n * n * lags],
        }
    }

    fn add(&mut self, other: &Self) {
        axpy(T::one(), &other.atoms, &mut self.atoms);
        axpy(T::one(), &other.kernel, &mut self.kernel);
    }
}

fn utterance_adjoint<T: Scalar>(
    s: &[T],
    d: &Dictionary<T>,
    state: &LcaState<T>,
    lca: &LcaConfig<T>,
    alpha: T,
    window: usize,
) -> Result<AtomAdjoint<T>> {
    let n = d.n_channels();
    let n_frames = d.n_frames(s.len())?;
    if state.n_channels() != n || state.n_frames() != n_frames {
        return Err(Error::Contract(format!(
            "trace is {}×{} but dictionary and signal give {}×{}",
            state.n_channels(),
            state.n_frames(),
            n,
            n_frames
        )));
    }
    let history = state.history();
    let final_a = history
        .back()
        .ok_or_else(|| Error::Contract("trace holds no activations".into()))?;
    if final_a.len() != state.a.count_nonzero() {
        return Err(Error::Contract("trace history does not end at the final activations".into()));
    }

    let (fl, r) = (d.filter_len(), d.stride());
    let kernel = d.kernel();
    let overlap = kernel.overlap() as isize;
    let lags = kernel.lags();
    let eta = lca.eta;
    let mut adj = AtomAdjoint::zeros(n, fl, lags);

    // Residual term at the final code: ∂/∂atom_i[m] = Σ_t a[i][t]·(Da − s)[t·r + m].
    let span = d.span(n_frames);
    let mut resid = vec![T::zero(); span];
    reconstruct_active_into(d, final_a, &mut resid);
    for (x, &y) in resid.iter_mut().zip(s) {
        *x -= y;
    }
    for (&k, &val) in final_a.index.iter().zip(&final_a.value) {
        let (i, t) = (k % n, k / n);
        axpy(val, &resid[t * r..t * r + fl], &mut adj.atoms[i * fl..(i + 1) * fl]);
    }

    // Sparsity term: reverse accumulation through the last `steps` iterations.
    let steps = window.min(history.len() - 1);
    if steps == 0 || alpha.is_zero() || lca.lambda.is_zero() {
        return Ok(adj);
    }
    let scale = alpha * lca.lambda;
    let mut g = CoefMatrix::zeros(n, n_frames);
    for (&k, &val) in final_a.index.iter().zip(&final_a.value) {
        g.as_mut_slice()[k] = scale * val.signum();
    }
    let mut drive_adj = CoefMatrix::zeros(n, n_frames);
    let last = history.len() - 1;
    for m in 1..=steps {
        // g = ∂L/∂v_{k+1}; a_k is the activation entering step k → k+1
        let a_k = &history[last - m];
        axpy(eta, g.as_slice(), drive_adj.as_mut_slice());
        for (&k, &val) in a_k.index.iter().zip(&a_k.value) {
            let (j, src) = (k % n, (k / n) as isize);
            for delta in -(overlap - 1)..overlap {
                let t = src - delta;
                if t < 0 || t >= n_frames as isize {
                    continue;
                }
                let dl = (delta + overlap - 1) as usize;
                let start = (j * lags + dl) * n;
                axpy(-eta * val, g.frame(t as usize), &mut adj.kernel[start..start + n]);
            }
        }
        // ∂v_{k+1}/∂v_k = (1 − η)·I − η·K·M_k, and K is symmetric
        let mut next = g.clone();
        next.as_mut_slice().iter_mut().for_each(|x| *x *= T::one() - eta);
        for &k in &a_k.index {
            let (i, t) = (k % n, k / n);
            let kg = kernel.apply_at(&g, i, t);
            next.as_mut_slice()[k] -= eta * kg;
        }
        g = next;
    }

    // Drive term: ∂p[i][t]/∂atom_i[m] = s[t·r + m].
    for t in 0..n_frames {
        let window = &s[t * r..t * r + fl];
        for (i, &w) in drive_adj.frame(t).iter().enumerate() {
            if !w.is_zero() {
                axpy(w, window, &mut adj.atoms[i * fl..(i + 1) * fl]);
            }
        }
    }
    Ok(adj)
}

/// Expands kernel-entry sensitivities into atom space and adds them to the
/// direct atom sensitivities.
fn expand_kernel_adjoint<T: Scalar>(d: &Dictionary<T>, adj: &AtomAdjoint<T>) -> Vec<T> {
    let n = d.n_channels();
    let (fl, r) = (d.filter_len(), d.stride());
    let overlap = d.overlap_frames() as isize;
    let lags = (2 * overlap - 1) as usize;
    // entry(i, j, δ) = Σ_m atom_i[m]·atom_j[m − δr]
    let per_channel: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|q| {
            let mut out = adj.atoms[q * fl..(q + 1) * fl].to_vec();
            for other in 0..n {
                for dl in 0..lags {
                    let delta = dl as isize - (overlap - 1);
                    if q == other && delta == 0 {
                        continue;
                    }
                    let shift = delta * r as isize;
                    // q as target i = q, source j = other: out[m] += C·atom_j[m − shift]
                    let c_target = adj.kernel[(other * lags + dl) * n + q];
                    // q as source j = q, target i = other: out[m'] += C·atom_i[m' + shift]
                    let c_source = adj.kernel[(q * lags + dl) * n + other];
                    let lo = shift.max(0) as usize;
                    let hi = (fl as isize + shift).min(fl as isize).max(0) as usize;
                    if lo >= hi {
                        continue;
                    }
                    let partner = d.atom(other);
                    if !c_target.is_zero() {
                        let src = &partner[(lo as isize - shift) as usize..(hi as isize - shift) as usize];
                        axpy(c_target, src, &mut out[lo..hi]);
                    }
                    if !c_source.is_zero() {
                        // m' ranges over [lo − shift, hi − shift)
                        let (a, b) = ((lo as isize - shift) as usize, (hi as isize - shift) as usize);
                        axpy(c_source, &partner[lo..hi], &mut out[a..b]);
                    }
                }
            }
            out
        })
        .collect();
    per_channel.concat()
}

fn contract<T: Scalar>(d: &Dictionary<T>, atom_grad: &[T], mode: AdaptMode) -> Result<ParamGradients<T>> {
    let fl = d.filter_len();
    let per_channel: Vec<[T; 4]> = d
        .channels()
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let jac = atom_jacobian(p, fl, d.sample_rate())?;
            let g = &atom_grad[i * fl..(i + 1) * fl];
            let df = if mode.adapts_frequency() { dot(g, &jac.df) } else { T::zero() };
            Ok([dot(g, &jac.dc), dot(g, &jac.db), dot(g, &jac.dl), df])
        })
        .collect::<Result<_>>()?;
    let mut out = ParamGradients::zeros(d.n_channels());
    for (i, [c, b, l, f]) in per_channel.into_iter().enumerate() {
        out.dc[i] = c;
        out.db[i] = b;
        out.dl[i] = l;
        out.df[i] = f;
    }
    if !out.is_finite() {
        return Err(Error::Gradient("non-finite parameter gradient".into()));
    }
    Ok(out)
}

/// Energy gradient for one utterance from a trace recorded by
/// [`encode_traced`] on the same signal and dictionary. A trace with fewer
/// snapshots than `tbptt_window` is used in full.
pub fn energy_gradient<T: Scalar>(
    s: &[T],
    d: &Dictionary<T>,
    trace: &LcaState<T>,
    lca: &LcaConfig<T>,
    cfg: &AdaptConfig<T>,
) -> Result<ParamGradients<T>> {
    let adj = utterance_adjoint(s, d, trace, lca, cfg.alpha, cfg.tbptt_window)?;
    let atom_grad = expand_kernel_adjoint(d, &adj);
    contract(d, &atom_grad, cfg.mode)
}

/// Adamax moment estimates per channel, ordered `[c, b, l, f]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamaxState<T> {
    pub m: Vec<[T; 4]>,
    pub u: Vec<[T; 4]>,
    /// Number of steps taken so far.
    pub step: usize,
}

impl<T: Scalar> AdamaxState<T> {
    pub fn new(n_channels: usize) -> Self {
        Self {
            m: vec![[T::zero(); 4]; n_channels],
            u: vec![[T::zero(); 4]; n_channels],
            step: 0,
        }
    }
}

/// One Adamax update, `lr_mod` for `(c, b, l)` and `lr_cf` for `f`, followed
/// by clamping. In `Alca` mode the frequencies are passed through untouched.
pub fn adamax_step<T: Scalar>(
    params: &[GammachirpParams<T>],
    grads: &ParamGradients<T>,
    moments: &mut AdamaxState<T>,
    cfg: &AdaptConfig<T>,
) -> Result<Vec<GammachirpParams<T>>> {
    if grads.n_channels() != params.len() || moments.m.len() != params.len() {
        return Err(Error::Contract(format!(
            "{} channels, {} gradients, {} moment slots",
            params.len(),
            grads.n_channels(),
            moments.m.len()
        )));
    }
    let (b1, b2, eps) = (T::lit(BETA1), T::lit(BETA2), T::lit(EPSILON));
    moments.step += 1;
    let bias = T::one() - b1.powi(moments.step as i32);
    let bounds = &cfg.bounds;
    let mut out = Vec::with_capacity(params.len());
    for (i, p) in params.iter().enumerate() {
        let g = grads.channel(i);
        let mut theta = [p.c, p.b, p.l, p.f];
        let ranges = [bounds.c, bounds.b, bounds.l, bounds.f];
        let n_params = if cfg.mode.adapts_frequency() { 4 } else { 3 };
        for k in 0..n_params {
            let m = &mut moments.m[i][k];
            let u = &mut moments.u[i][k];
            *m = b1 * *m + (T::one() - b1) * g[k];
            *u = (b2 * *u).max(g[k].abs());
            let lr = if k == 3 { cfg.lr_cf } else { cfg.lr_mod };
            let updated = theta[k] - lr / bias * *m / (*u + eps);
            if !updated.is_finite() {
                return Err(Error::Optimizer(format!(
                    "non-finite update for channel {i}, parameter {}",
                    ["c", "b", "l", "f"][k]
                )));
            }
            theta[k] = updated.max(ranges[k].0).min(ranges[k].1);
        }
        out.push(GammachirpParams::new(theta[3], theta[1], theta[0], theta[2]));
    }
    Ok(out)
}

/// Corpus statistics of one dictionary state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_energy: f64,
    /// Mean over utterances with finite SNR.
    pub mean_snr_db: f64,
    pub mean_active_count: f64,
}

pub fn write_history_csv<W: std::io::Write>(history: &[EpochStats], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["epoch", "mean_energy", "mean_snr_db", "mean_active_count"])?;
    for h in history {
        w.write_record([
            h.epoch.to_string(),
            h.mean_energy.to_string(),
            h.mean_snr_db.to_string(),
            h.mean_active_count.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("writing history csv", e))?;
    Ok(())
}

struct UtteranceOutcome<T> {
    energy: f64,
    snr_db: f64,
    active: usize,
    adjoint: Option<AtomAdjoint<T>>,
}

fn run_utterance<T: Scalar>(
    signal: &Signal<T>,
    d: &Dictionary<T>,
    lca: &LcaConfig<T>,
    cfg: &AdaptConfig<T>,
    with_gradient: bool,
) -> Result<UtteranceOutcome<T>> {
    let s = &signal.samples;
    let window = if with_gradient { cfg.tbptt_window } else { 0 };
    let (code, state) = encode_traced(s, d, lca, window)?;
    let final_a = state.history().back().expect("final activations recorded");
    let mut recon = vec![T::zero(); s.len()];
    reconstruct_active_into(d, final_a, &mut recon);
    let snr_db = snr(s, &recon).map(|v| v.as_f64()).unwrap_or(f64::NAN);
    let resid: T = recon.iter().zip(s).map(|(&x, &y)| (x - y) * (x - y)).sum();
    let energy = T::lit(0.5) * resid + cfg.alpha * lca.lambda * final_a.l1();
    let adjoint = if with_gradient {
        Some(utterance_adjoint(s, d, &state, lca, cfg.alpha, cfg.tbptt_window)?)
    } else {
        None
    };
    Ok(UtteranceOutcome {
        energy: energy.as_f64(),
        snr_db,
        active: code.len(),
        adjoint,
    })
}

#[derive(Default)]
struct StatsAccumulator {
    energy: f64,
    snr: f64,
    snr_count: usize,
    active: f64,
    count: usize,
}

impl StatsAccumulator {
    fn push<T>(&mut self, o: &UtteranceOutcome<T>) {
        self.energy += o.energy;
        if o.snr_db.is_finite() {
            self.snr += o.snr_db;
            self.snr_count += 1;
        }
        self.active += o.active as f64;
        self.count += 1;
    }

    fn finish(&self, epoch: usize) -> EpochStats {
        let n = self.count.max(1) as f64;
        EpochStats {
            epoch,
            mean_energy: self.energy / n,
            mean_snr_db: if self.snr_count > 0 { self.snr / self.snr_count as f64 } else { f64::NAN },
            mean_active_count: self.active / n,
        }
    }
}

fn run_batch<T: Scalar>(
    corpus: &[Signal<T>],
    indices: &[usize],
    d: &Dictionary<T>,
    lca: &LcaConfig<T>,
    cfg: &AdaptConfig<T>,
    with_gradient: bool,
) -> Result<Vec<UtteranceOutcome<T>>> {
    indices
        .par_iter()
        .map(|&k| run_utterance(&corpus[k], d, lca, cfg, with_gradient).map_err(|e| e.in_utterance(&corpus[k].id)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Adapts `d0` to a corpus with mini-batch Adamax.
///
/// History row `e < epochs` holds the statistics of the codes computed while
/// running epoch `e`; the final row (`epoch = epochs`) evaluates the returned
/// dictionary on the whole corpus.
pub fn adapt_corpus<T: Scalar>(
    corpus: &[Signal<T>],
    d0: &Dictionary<T>,
    lca: &LcaConfig<T>,
    cfg: &AdaptConfig<T>,
) -> Result<(Dictionary<T>, Vec<EpochStats>)> {
    lca.validate()?;
    cfg.validate(d0.sample_rate())?;
    if corpus.is_empty() {
        return Err(Error::Input("adaptation corpus is empty".into()));
    }
    if let Some(bad) = corpus.iter().find(|u| u.sample_rate != d0.sample_rate()) {
        return Err(Error::Contract(format!(
            "utterance {} is at {} Hz but the dictionary expects {} Hz",
            bad.id,
            bad.sample_rate,
            d0.sample_rate()
        )));
    }
    for c in d0.channels() {
        c.validate(d0.sample_rate())?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut dict = d0.clone();
    let mut moments = AdamaxState::new(d0.n_channels());
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    let lags = 2 * d0.overlap_frames() - 1;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut stats = StatsAccumulator::default();
        for batch in order.chunks(cfg.batch_size) {
            let outcomes = run_batch(corpus, batch, &dict, lca, cfg, true)?;
            let mut total = AtomAdjoint::zeros(dict.n_channels(), dict.filter_len(), lags);
            for o in &outcomes {
                stats.push(o);
                total.add(o.adjoint.as_ref().expect("gradient requested"));
            }
            let atom_grad = expand_kernel_adjoint(&dict, &total);
            let mut grads = contract(&dict, &atom_grad, cfg.mode)?;
            grads.scale(T::one() / T::of_usize(batch.len()));
            let channels = adamax_step(dict.channels(), &grads, &mut moments, cfg)?;
            dict = dict.with_channels(channels)?;
        }
        let row = stats.finish(epoch);
        log::info!(
            "epoch {epoch}: energy {:.6e}, snr {:.3} dB, active {:.1}",
            row.mean_energy,
            row.mean_snr_db,
            row.mean_active_count
        );
        history.push(row);
    }

    let all: Vec<usize> = (0..corpus.len()).collect();
    let mut stats = StatsAccumulator::default();
    for o in run_batch(corpus, &all, &dict, lca, cfg, false)? {
        stats.push(&o);
    }
    history.push(stats.finish(cfg.epochs));
    Ok((dict, history))
}
