//! Locally Competitive Algorithm: leaky-integrator neurons with hard-threshold
//! activations and lateral inhibition through the dictionary Gram kernel.
//!
//! The dynamics `τ·dv/dt = p − v − (DᵀD − I)·a` are integrated with explicit
//! Euler steps of size `eta = Δt/τ` from `v = 0`.

use std::collections::VecDeque;

use crate::code::{ActiveSet, CoefMatrix, SparseCode};
use crate::dictionary::{project, reconstruct, reconstruct_active_into, Dictionary, GramKernel};
use crate::error::{Error, Result};
use crate::scalar::{norm_sq, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcaConfig<T> {
    /// Activation threshold, also the sparsity multiplier of the energy.
    pub lambda: T,
    /// Euler step `Δt/τ`.
    pub eta: T,
    pub max_iters: usize,
    /// Tolerance on the relative energy change and on the drive residual.
    pub rel_tol: T,
}

impl<T: Scalar> LcaConfig<T> {
    pub fn new(lambda: T) -> Self {
        Self {
            lambda,
            eta: T::lit(0.1),
            max_iters: 500,
            rel_tol: T::lit(1e-6),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be ≥ 0, got {}", self.lambda)));
        }
        if !(self.eta > T::zero() && self.eta <= T::one()) {
            return Err(Error::Config(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol >= T::zero()) {
            return Err(Error::Config(format!("rel_tol must be ≥ 0, got {}", self.rel_tol)));
        }
        Ok(())
    }
}

/// Solver state after some number of Euler iterations.
#[derive(Debug, Clone)]
pub struct LcaState<T> {
    /// Membrane potentials.
    pub v: CoefMatrix<T>,
    /// Activations, always `threshold(v, λ)`.
    pub a: CoefMatrix<T>,
    pub iter: usize,
    /// Energy before the first iteration followed by the energy after each one.
    pub energy_trace: Vec<T>,
    pub converged: bool,
    /// Activations of the most recent iterations, oldest first; the last entry
    /// is the current `a`.
    history: VecDeque<ActiveSet<T>>,
    history_cap: usize,
    scratch: CoefMatrix<T>,
}

impl<T: Scalar> LcaState<T> {
    /// Resting state; keeps `window + 1` activation snapshots for truncated
    /// backpropagation.
    pub fn new(n_channels: usize, n_frames: usize, window: usize) -> Self {
        let mut history = VecDeque::with_capacity(window + 1);
        history.push_back(ActiveSet::default());
        Self {
            v: CoefMatrix::zeros(n_channels, n_frames),
            a: CoefMatrix::zeros(n_channels, n_frames),
            iter: 0,
            energy_trace: Vec::new(),
            converged: false,
            history,
            history_cap: window + 1,
            scratch: CoefMatrix::zeros(n_channels, n_frames),
        }
    }

    pub fn n_channels(&self) -> usize {
        self.v.n_channels()
    }

    pub fn n_frames(&self) -> usize {
        self.v.n_frames()
    }

    /// Recorded activation snapshots `a_{K−W} ..= a_K`.
    pub fn history(&self) -> &VecDeque<ActiveSet<T>> {
        &self.history
    }

    fn record(&mut self) {
        if self.history.len() == self.history_cap {
            self.history.pop_front();
        }
        self.history.push_back(self.a.active());
    }
}

/// Hard threshold of one potential: zero when `|v| < λ`, `v` otherwise.
#[inline]
pub fn hard_threshold<T: Scalar>(v: T, lambda: T) -> T {
    if v.abs() < lambda {
        T::zero()
    } else {
        v
    }
}

pub fn threshold<T: Scalar>(v: &CoefMatrix<T>, lambda: T) -> CoefMatrix<T> {
    let mut a = v.clone();
    a.as_mut_slice().iter_mut().for_each(|x| *x = hard_threshold(*x, lambda));
    a
}

/// `p − v − inhibit(a)` at every coordinate.
pub fn drive_residual<T: Scalar>(
    drive: &CoefMatrix<T>,
    v: &CoefMatrix<T>,
    a: &CoefMatrix<T>,
    kernel: &GramKernel<T>,
) -> CoefMatrix<T> {
    let inh = kernel.inhibit(a);
    let mut r = drive.clone();
    for ((r, &v), &h) in r.as_mut_slice().iter_mut().zip(v.as_slice()).zip(inh.as_slice()) {
        *r = *r - v - h;
    }
    r
}

/// One explicit Euler step of the dynamics followed by thresholding. Returns
/// the largest drive residual `|p − v − inhibit(a)|` seen before the update.
pub fn lca_step<T: Scalar>(
    state: &mut LcaState<T>,
    drive: &CoefMatrix<T>,
    kernel: &GramKernel<T>,
    cfg: &LcaConfig<T>,
) -> T {
    kernel.inhibit_into(&state.a.active(), &mut state.scratch);
    let mut max_res = T::zero();
    let eta = cfg.eta;
    let lambda = cfg.lambda;
    let v = state.v.as_mut_slice();
    let a = state.a.as_mut_slice();
    for (((v, a), &p), &h) in v.iter_mut().zip(a.iter_mut()).zip(drive.as_slice()).zip(state.scratch.as_slice()) {
        let r = p - *v - h;
        // NaN propagates through max so divergence stays visible
        max_res = if r.abs() > max_res || r.is_nan() { r.abs() } else { max_res };
        *v += eta * r;
        *a = hard_threshold(*v, lambda);
    }
    state.iter += 1;
    state.record();
    max_res
}

/// Runs the dynamics to convergence; see [`encode_traced`].
pub fn encode<T: Scalar>(s: &[T], d: &Dictionary<T>, cfg: &LcaConfig<T>) -> Result<(SparseCode<T>, LcaState<T>)> {
    encode_traced(s, d, cfg, 0)
}

/// Runs the dynamics from `v = 0` until `max_iters` or convergence, keeping the
/// activations of the final `window` iterations in the returned state.
///
/// Convergence requires all three of: relative energy change below
/// `rel_tol`, drive residual below `rel_tol·‖p‖∞`, and an unchanged active set.
/// The energy stays flat while potentials charge up to threshold, so the
/// energy test alone would stop before any neuron fires.
pub fn encode_traced<T: Scalar>(
    s: &[T],
    d: &Dictionary<T>,
    cfg: &LcaConfig<T>,
    window: usize,
) -> Result<(SparseCode<T>, LcaState<T>)> {
    cfg.validate()?;
    let drive = project(d, s)?;
    let kernel = d.kernel();
    let (n, n_frames) = (drive.n_channels(), drive.n_frames());
    let span = d.span(n_frames);
    let tail = norm_sq(&s[span..]);
    let half = T::lit(0.5);
    let p_max = drive.max_abs();
    let tiny = T::min_positive_value();

    let mut state = LcaState::new(n, n_frames, window.max(1));
    let e0 = half * norm_sq(s);
    state.energy_trace.push(e0);
    let mut recon = vec![T::zero(); span];
    let mut prev_energy = e0;

    for k in 1..=cfg.max_iters {
        let prev_index = state.history.back().map(|a| a.index.clone()).unwrap_or_default();
        let res = lca_step(&mut state, &drive, kernel, cfg);
        let act = state.history.back().expect("history keeps the current activations");
        reconstruct_active_into(d, act, &mut recon);
        let resid: T = recon.iter().zip(&s[..span]).map(|(&x, &y)| (x - y) * (x - y)).sum();
        let energy = half * (resid + tail) + cfg.lambda * act.l1();
        if !energy.is_finite() || !res.is_finite() {
            return Err(Error::Solver {
                iteration: k,
                message: format!("non-finite state (energy {energy}, residual {res})"),
            });
        }
        state.energy_trace.push(energy);
        let stable_set = act.index == prev_index;
        let energy_settled = (energy - prev_energy).abs() <= cfg.rel_tol * energy.max(tiny);
        prev_energy = energy;
        if stable_set && energy_settled && res <= cfg.rel_tol * p_max {
            state.converged = true;
            break;
        }
    }
    if window == 0 {
        // only the final activations are kept
        while state.history.len() > 1 {
            state.history.pop_front();
        }
    }
    let code = SparseCode::from_dense(&state.a, cfg.lambda);
    Ok((code, state))
}

/// `½‖reconstruct(d, code) − s‖² + α·λ·Σ|a|`.
pub fn energy<T: Scalar>(s: &[T], code: &SparseCode<T>, d: &Dictionary<T>, lambda: T, alpha: T) -> Result<T> {
    let recon = reconstruct(d, code)?;
    if recon.len() > s.len() {
        return Err(Error::Contract(format!(
            "code spans {} samples but signal has {}",
            recon.len(),
            s.len()
        )));
    }
    let l1: T = code.events().iter().map(|e| e.2.abs()).sum();
    let mut resid = T::zero();
    for (k, &x) in s.iter().enumerate() {
        let y = recon.get(k).copied().unwrap_or_else(T::zero);
        resid += (y - x) * (y - x);
    }
    Ok(T::lit(0.5) * resid + alpha * lambda * l1)
}
