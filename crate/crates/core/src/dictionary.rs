//! Gammachirp atoms, the strided dictionary built from them, and the lateral
//! inhibition kernel `DᵀD − I` in strided form.
//!
//! A dictionary of `N` channels with filter length `F_l` and stride `r`
//! represents a signal of `(T − 1)·r + F_l` samples with `N·T` shifted atoms:
//! column `(i, t)` is atom `i` placed at sample offset `t·r`. None of the
//! operators here materialize that matrix.

use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{CoefMatrix, SparseCode};
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, norm_sq, Scalar};

/// Gamma envelope scale of the standard Gammatone.
pub const GAMMATONE_B: f64 = 1.019;
/// Gamma order of the standard Gammatone.
pub const GAMMATONE_L: f64 = 4.0;

const ERB_OFFSET: f64 = 24.7;
const ERB_SLOPE_PER_KHZ: f64 = 4.37;

/// Parameters of one Gammachirp channel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GammachirpParams<T> {
    /// Central frequency in Hz.
    pub f: T,
    /// Envelope bandwidth scale.
    pub b: T,
    /// Chirp parameter.
    pub c: T,
    /// Gamma order.
    pub l: T,
}

impl<T: Scalar> GammachirpParams<T> {
    pub fn new(f: T, b: T, c: T, l: T) -> Self {
        Self { f, b, c, l }
    }

    /// Standard Gammatone (no chirp) at frequency `f`.
    pub fn gammatone(f: T) -> Self {
        Self {
            f,
            b: T::lit(GAMMATONE_B),
            c: T::zero(),
            l: T::lit(GAMMATONE_L),
        }
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = T::lit(f64::from(sample_rate) / 2.0);
        let all_finite = [self.f, self.b, self.c, self.l].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Config(format!("non-finite gammachirp parameters {self:?}")));
        }
        if !(self.f > T::zero() && self.f < nyquist) {
            return Err(Error::Config(format!(
                "central frequency {} Hz outside (0, {}) Hz",
                self.f, nyquist
            )));
        }
        if !(self.b > T::zero()) {
            return Err(Error::Config(format!("bandwidth scale b = {} must be positive", self.b)));
        }
        if !(self.l >= T::one()) {
            return Err(Error::Config(format!("gamma order l = {} must be at least 1", self.l)));
        }
        Ok(())
    }
}

/// Equivalent rectangular bandwidth in Hz (Glasberg–Moore linear map).
pub fn erb<T: Scalar>(f: T) -> Result<T> {
    if !(f >= T::zero()) {
        return Err(Error::Domain(format!("erb undefined for frequency {f}")));
    }
    Ok(erb_unchecked(f))
}

#[inline]
pub(crate) fn erb_unchecked<T: Scalar>(f: T) -> T {
    T::lit(ERB_OFFSET) * (T::lit(ERB_SLOPE_PER_KHZ / 1000.0) * f + T::one())
}

/// d erb / df.
#[inline]
pub fn erb_slope<T: Scalar>() -> T {
    T::lit(ERB_OFFSET * ERB_SLOPE_PER_KHZ / 1000.0)
}

/// Per-sample pieces of the raw (unnormalized) Gammachirp, shared with the
/// gradient code.
pub(crate) struct RawChirp<T> {
    /// Sample times `(k + 1) / sample_rate`.
    pub t: Vec<T>,
    /// Gamma envelope `t^(l−1)·exp(−2π·b·erb(f)·t)`.
    pub env: Vec<T>,
    /// Carrier phase `2π·f·t + c·ln t`.
    pub phase: Vec<T>,
    pub samples: Vec<T>,
}

pub(crate) fn raw_chirp<T: Scalar>(p: &GammachirpParams<T>, filter_len: usize, sample_rate: u32) -> RawChirp<T> {
    let two_pi = T::TAU();
    let decay = two_pi * p.b * erb_unchecked(p.f);
    let sr = T::lit(f64::from(sample_rate));
    let mut out = RawChirp {
        t: Vec::with_capacity(filter_len),
        env: Vec::with_capacity(filter_len),
        phase: Vec::with_capacity(filter_len),
        samples: Vec::with_capacity(filter_len),
    };
    for k in 0..filter_len {
        let t = T::of_usize(k + 1) / sr;
        let ln_t = t.ln();
        let env = ((p.l - T::one()) * ln_t - decay * t).exp();
        let phase = two_pi * p.f * t + p.c * ln_t;
        out.t.push(t);
        out.env.push(env);
        out.phase.push(phase);
        out.samples.push(env * phase.cos());
    }
    out
}

/// A sampled, L2-normalized atom together with the norm it had before
/// normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom<T> {
    pub samples: Vec<T>,
    pub raw_norm: T,
}

pub fn synthesize_atom<T: Scalar>(p: &GammachirpParams<T>, filter_len: usize, sample_rate: u32) -> Result<Atom<T>> {
    p.validate(sample_rate)?;
    if filter_len == 0 {
        return Err(Error::Config("filter length must be positive".into()));
    }
    let raw = raw_chirp(p, filter_len, sample_rate);
    let norm = norm_sq(&raw.samples).sqrt();
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::Synthesis(format!("degenerate atom (norm {norm}) for {p:?}")));
    }
    let samples = raw.samples.into_iter().map(|v| v / norm).collect();
    Ok(Atom {
        samples,
        raw_norm: norm,
    })
}

/// Strided dictionary of Gammachirp atoms.
#[derive(Debug, Clone)]
pub struct Dictionary<T> {
    channels: Vec<GammachirpParams<T>>,
    filter_len: usize,
    stride: usize,
    sample_rate: u32,
    /// Channel-major `N × F_l` normalized atoms.
    atoms: Vec<T>,
    raw_norms: Vec<T>,
    kernel: OnceLock<GramKernel<T>>,
}

impl<T: Scalar> Dictionary<T> {
    pub fn new(channels: Vec<GammachirpParams<T>>, filter_len: usize, stride: usize, sample_rate: u32) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Config("dictionary needs at least one channel".into()));
        }
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if filter_len == 0 || stride == 0 || stride > filter_len {
            return Err(Error::Config(format!(
                "need 0 < stride ≤ filter_len, got stride {stride}, filter_len {filter_len}"
            )));
        }
        let synthesized: Vec<Atom<T>> = channels
            .par_iter()
            .map(|p| synthesize_atom(p, filter_len, sample_rate))
            .collect::<Result<_>>()?;
        let mut atoms = Vec::with_capacity(channels.len() * filter_len);
        let mut raw_norms = Vec::with_capacity(channels.len());
        for a in synthesized {
            atoms.extend_from_slice(&a.samples);
            raw_norms.push(a.raw_norm);
        }
        Ok(Self {
            channels,
            filter_len,
            stride,
            sample_rate,
            atoms,
            raw_norms,
            kernel: OnceLock::new(),
        })
    }

    /// Same geometry, new channel parameters; atoms are re-synthesized.
    pub fn with_channels(&self, channels: Vec<GammachirpParams<T>>) -> Result<Self> {
        Self::new(channels, self.filter_len, self.stride, self.sample_rate)
    }

    #[inline]
    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    #[inline]
    pub fn filter_len(&self) -> usize {
        self.filter_len
    }

    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> &[GammachirpParams<T>] {
        &self.channels
    }

    #[inline]
    pub fn atom(&self, channel: usize) -> &[T] {
        &self.atoms[channel * self.filter_len..(channel + 1) * self.filter_len]
    }

    pub fn raw_norm(&self, channel: usize) -> T {
        self.raw_norms[channel]
    }

    /// `L = ceil(F_l / r)`: number of frames one atom overlaps in each direction,
    /// counting its own.
    pub fn overlap_frames(&self) -> usize {
        self.filter_len.div_ceil(self.stride)
    }

    /// Frames available in a signal of `len` samples.
    pub fn n_frames(&self, len: usize) -> Result<usize> {
        if len < self.filter_len {
            return Err(Error::Input(format!(
                "signal of {len} samples is shorter than one filter ({} samples)",
                self.filter_len
            )));
        }
        Ok((len - self.filter_len) / self.stride + 1)
    }

    /// Samples covered by `n_frames` frames.
    pub fn span(&self, n_frames: usize) -> usize {
        if n_frames == 0 {
            0
        } else {
            (n_frames - 1) * self.stride + self.filter_len
        }
    }

    /// Lateral inhibition kernel, computed on first use.
    pub fn kernel(&self) -> &GramKernel<T> {
        self.kernel.get_or_init(|| gram_kernel(self))
    }

    pub fn frequency_range(&self) -> (T, T) {
        self.channels.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
            (lo.min(p.f), hi.max(p.f))
        })
    }

    pub fn to_file(&self) -> DictionaryFile {
        DictionaryFile {
            sample_rate: self.sample_rate,
            filter_len: self.filter_len,
            stride: self.stride,
            channels: self
                .channels
                .iter()
                .map(|p| ChannelFile {
                    f: p.f.as_f64(),
                    b: p.b.as_f64(),
                    c: p.c.as_f64(),
                    l: p.l.as_f64(),
                })
                .collect(),
        }
    }

    /// Re-synthesizes atoms from stored parameters.
    pub fn from_file(file: &DictionaryFile) -> Result<Self> {
        let channels = file
            .channels
            .iter()
            .map(|c| GammachirpParams::new(T::lit(c.f), T::lit(c.b), T::lit(c.c), T::lit(c.l)))
            .collect();
        Self::new(channels, file.filter_len, file.stride, file.sample_rate)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(json)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = self.to_json()?;
        json.push('\n');
        std::fs::write(path, json).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }
}

/// On-disk dictionary: geometry plus channel parameters only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryFile {
    pub sample_rate: u32,
    pub filter_len: usize,
    pub stride: usize,
    pub channels: Vec<ChannelFile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub f: f64,
    pub b: f64,
    pub c: f64,
    pub l: f64,
}

/// Gammatone dictionary with log-spaced central frequencies in `[f_min, f_max]`.
pub fn init_gammatone_dictionary<T: Scalar>(
    n_channels: usize,
    f_min: T,
    f_max: T,
    filter_len: usize,
    stride: usize,
    sample_rate: u32,
) -> Result<Dictionary<T>> {
    if n_channels < 2 {
        return Err(Error::Config(format!("need at least 2 channels, got {n_channels}")));
    }
    let nyquist = T::lit(f64::from(sample_rate) / 2.0);
    if !(f_min > T::zero() && f_min < f_max && f_max < nyquist) {
        return Err(Error::Config(format!(
            "need 0 < f_min < f_max < {nyquist} Hz, got [{f_min}, {f_max}]"
        )));
    }
    let (lo, hi) = (f_min.ln(), f_max.ln());
    let last = T::of_usize(n_channels - 1);
    let channels = (0..n_channels)
        .map(|k| {
            let f = match k {
                0 => f_min,
                k if k == n_channels - 1 => f_max,
                k => (lo + (hi - lo) * T::of_usize(k) / last).exp(),
            };
            GammachirpParams::gammatone(f)
        })
        .collect();
    Dictionary::new(channels, filter_len, stride, sample_rate)
}

/// Strided Gram matrix minus identity: `entry(i, j, δ) = ⟨atom_i, atom_j shifted
/// by δ·r⟩`, zero at `i = j, δ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramKernel<T> {
    n_channels: usize,
    overlap: usize,
    /// Indexed `[(j * lags + (δ + L − 1)) * N + i]`, i.e. contiguous over the
    /// target channel `i` for a fixed source `j` and lag.
    data: Vec<T>,
}

impl<T: Scalar> GramKernel<T> {
    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// `L`; lags range over `−(L−1) ..= L−1`.
    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn lags(&self) -> usize {
        2 * self.overlap - 1
    }

    #[inline]
    fn lag_index(&self, delta: isize) -> usize {
        (delta + self.overlap as isize - 1) as usize
    }

    pub fn entry(&self, i: usize, j: usize, delta: isize) -> T {
        let d = self.lag_index(delta);
        self.data[(j * self.lags() + d) * self.n_channels + i]
    }

    /// `entry(·, j, δ)` for all target channels, with `d = δ + L − 1`.
    #[inline]
    pub fn column(&self, j: usize, d: usize) -> &[T] {
        let start = (j * self.lags() + d) * self.n_channels;
        &self.data[start..start + self.n_channels]
    }

    /// `Σ_j Σ_δ entry(i, j, δ)·a[j][t + δ]` for every `(i, t)`, with out-of-range
    /// frames contributing zero. Only nonzero activations are visited.
    pub fn inhibit(&self, a: &CoefMatrix<T>) -> CoefMatrix<T> {
        let mut out = CoefMatrix::zeros(a.n_channels(), a.n_frames());
        self.inhibit_into(&a.active(), &mut out);
        out
    }

    /// Accumulates the inhibition produced by the active set into `out`
    /// (which is overwritten).
    pub(crate) fn inhibit_into(&self, active: &crate::code::ActiveSet<T>, out: &mut CoefMatrix<T>) {
        let n = self.n_channels;
        let n_frames = out.n_frames();
        let l = self.overlap as isize;
        out.as_mut_slice().iter_mut().for_each(|v| *v = T::zero());
        for (&k, &val) in active.index.iter().zip(&active.value) {
            let (j, src_frame) = (k % n, (k / n) as isize);
            for delta in -(l - 1)..l {
                // a[j][t + δ] feeds frame t = src_frame − δ
                let t = src_frame - delta;
                if t < 0 || t >= n_frames as isize {
                    continue;
                }
                let d = (delta + l - 1) as usize;
                axpy(val, self.column(j, d), out.frame_mut(t as usize));
            }
        }
    }

    /// `Σ_j Σ_δ entry(i, j, δ)·g[j][t + δ]` at a single coordinate.
    #[inline]
    pub(crate) fn apply_at(&self, g: &CoefMatrix<T>, i: usize, t: usize) -> T {
        // entry(i, j, δ) = entry(j, i, −δ) = column(i, −δ + L − 1)[j]
        let l = self.overlap as isize;
        let n_frames = g.n_frames() as isize;
        let mut acc = T::zero();
        for delta in -(l - 1)..l {
            let src = t as isize + delta;
            if src < 0 || src >= n_frames {
                continue;
            }
            let d = (-delta + l - 1) as usize;
            acc += dot(self.column(i, d), g.frame(src as usize));
        }
        acc
    }
}

/// Lateral inhibition weights of the strided dictionary.
pub fn gram_kernel<T: Scalar>(d: &Dictionary<T>) -> GramKernel<T> {
    let n = d.n_channels();
    let fl = d.filter_len();
    let r = d.stride();
    let overlap = d.overlap_frames();
    let lags = 2 * overlap - 1;
    // entry(i, j, δ) = Σ_n atom_i[n]·atom_j[n − δr]
    let cross = |i: usize, j: usize, delta: isize| -> T {
        let shift = delta * r as isize;
        let lo = shift.max(0) as usize;
        let hi = (fl as isize + shift).min(fl as isize).max(0) as usize;
        if lo >= hi {
            return T::zero();
        }
        let ai = &d.atom(i)[lo..hi];
        let aj = &d.atom(j)[(lo as isize - shift) as usize..(hi as isize - shift) as usize];
        dot(ai, aj)
    };
    let l = overlap as isize;
    // Upper triangle (i ≤ j) per source j, mirrored afterwards.
    let upper: Vec<Vec<(usize, usize, T)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut vals = Vec::with_capacity((j + 1) * lags);
            for i in 0..=j {
                for delta in -(l - 1)..l {
                    let v = if i == j && delta == 0 { T::zero() } else { cross(i, j, delta) };
                    vals.push((i, (delta + l - 1) as usize, v));
                }
            }
            vals
        })
        .collect();
    let mut data = vec![T::zero(); n * n * lags];
    for (j, vals) in upper.into_iter().enumerate() {
        for (i, dl, v) in vals {
            // entry(i, j, δ) and its mirror entry(j, i, −δ)
            data[(j * lags + dl) * n + i] = v;
            data[(i * lags + (lags - 1 - dl)) * n + j] = v;
        }
    }
    GramKernel {
        n_channels: n,
        overlap,
        data,
    }
}

/// Strided correlation `p[i][t] = ⟨atom_i, s[t·r .. t·r + F_l]⟩`.
pub fn project<T: Scalar>(d: &Dictionary<T>, s: &[T]) -> Result<CoefMatrix<T>> {
    let n_frames = d.n_frames(s.len())?;
    let n = d.n_channels();
    let (fl, r) = (d.filter_len(), d.stride());
    let mut out = CoefMatrix::zeros(n, n_frames);
    out.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(t, frame)| {
            let window = &s[t * r..t * r + fl];
            for (i, v) in frame.iter_mut().enumerate() {
                *v = dot(d.atom(i), window);
            }
        });
    Ok(out)
}

/// Overlap-add synthesis `Σ a[i][t]·atom_i` at offsets `t·r`; returns
/// `span(n_frames)` samples.
pub fn reconstruct<T: Scalar>(d: &Dictionary<T>, a: &SparseCode<T>) -> Result<Vec<T>> {
    if a.n_channels != d.n_channels() {
        return Err(Error::Code(format!(
            "code has {} channels, dictionary has {}",
            a.n_channels,
            d.n_channels()
        )));
    }
    let mut out = vec![T::zero(); d.span(a.n_frames)];
    for &(c, f, v) in a.events() {
        if c >= d.n_channels() || f >= a.n_frames {
            return Err(Error::Code(format!("event (channel {c}, frame {f}) out of range")));
        }
        let off = f * d.stride();
        axpy(v, d.atom(c), &mut out[off..off + d.filter_len()]);
    }
    Ok(out)
}

/// Overlap-add of an active set into `out` (length at least the span).
pub(crate) fn reconstruct_active_into<T: Scalar>(d: &Dictionary<T>, active: &crate::code::ActiveSet<T>, out: &mut [T]) {
    out.iter_mut().for_each(|v| *v = T::zero());
    let n = d.n_channels();
    for (&k, &v) in active.index.iter().zip(&active.value) {
        let (c, f) = (k % n, k / n);
        let off = f * d.stride();
        axpy(v, d.atom(c), &mut out[off..off + d.filter_len()]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erb_values() {
        assert_eq!(erb(0.0f64).unwrap(), 24.7);
        assert!((erb(1000.0f64).unwrap() - 132.639).abs() < 1e-9);
        let step = erb(2000.0f64).unwrap() - erb(1000.0).unwrap();
        assert!((step - (erb(1000.0f64).unwrap() - erb(0.0).unwrap())).abs() < 1e-9);
        assert!(matches!(erb(-1.0f64), Err(Error::Domain(_))));
        assert!((erb_slope::<f64>() - 0.107939).abs() < 1e-12);
    }

    #[test]
    fn atoms_have_unit_norm() {
        let p = GammachirpParams::new(523.0f64, 1.3, -1.2, 3.1);
        let a = synthesize_atom(&p, 300, 16000).unwrap();
        assert!((norm_sq(&a.samples).sqrt() - 1.0).abs() < 1e-12);
        assert!(a.raw_norm > 0.0);
    }

    #[test]
    fn zero_chirp_is_gammatone() {
        let f = 1000.0f64;
        let p = GammachirpParams::gammatone(f);
        let a = synthesize_atom(&p, 256, 16000).unwrap();
        let sr = 16000.0;
        let decay = std::f64::consts::TAU * 1.019 * erb(f).unwrap();
        let raw: Vec<f64> = (0..256)
            .map(|k| {
                let t = (k + 1) as f64 / sr;
                t.powi(3) * (-decay * t).exp() * (std::f64::consts::TAU * f * t).cos()
            })
            .collect();
        let norm = norm_sq(&raw).sqrt();
        for (x, y) in a.samples.iter().zip(&raw) {
            assert!((x - y / norm).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_peaks_at_gamma_mode() {
        let p = GammachirpParams::new(1000.0f64, 1.019, 0.0, 4.0);
        let raw = raw_chirp(&p, 1024, 48000);
        let argmax = raw
            .env
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let mode = 3.0 / (std::f64::consts::TAU * 1.019 * erb(1000.0f64).unwrap());
        assert!((mode - 3.53e-3).abs() < 1e-5);
        let expected = mode * 48000.0 - 1.0;
        assert!((argmax as f64 - expected).abs() <= 1.0, "argmax {argmax}, expected {expected}");
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(synthesize_atom(&GammachirpParams::new(9000.0f64, 1.0, 0.0, 4.0), 64, 16000).is_err());
        assert!(synthesize_atom(&GammachirpParams::new(100.0f64, 0.0, 0.0, 4.0), 64, 16000).is_err());
        assert!(synthesize_atom(&GammachirpParams::new(100.0f64, 1.0, 0.0, 0.5), 64, 16000).is_err());
    }

    #[test]
    fn log_spaced_init() {
        let d = init_gammatone_dictionary(2, 100.0f64, 400.0, 64, 32, 16000).unwrap();
        let f: Vec<_> = d.channels().iter().map(|p| p.f).collect();
        assert_eq!(f, vec![100.0, 400.0]);
        let d = init_gammatone_dictionary(3, 100.0f64, 400.0, 64, 32, 16000).unwrap();
        assert!((d.channels()[1].f - 200.0).abs() < 1e-9);
        assert!(d.channels().iter().all(|p| p.c == 0.0 && p.l == 4.0 && p.b == 1.019));
        assert!(init_gammatone_dictionary(1, 100.0f64, 400.0, 64, 32, 16000).is_err());
        assert!(init_gammatone_dictionary(4, 400.0f64, 100.0, 64, 32, 16000).is_err());
        assert!(init_gammatone_dictionary(4, 100.0f64, 8000.0, 64, 32, 16000).is_err());
    }

    #[test]
    fn hd_configuration_builds() {
        let d = init_gammatone_dictionary(700, 50.0f64, 20000.0, 1024, 512, 48000).unwrap();
        assert_eq!(d.n_channels(), 700);
        assert_eq!(d.overlap_frames(), 2);
        for i in [0, 350, 699] {
            assert!((norm_sq(d.atom(i)).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn geometry_checks() {
        let d = init_gammatone_dictionary(3, 100.0f64, 400.0, 16, 8, 16000).unwrap();
        assert_eq!(d.n_frames(16).unwrap(), 1);
        assert_eq!(d.n_frames(31).unwrap(), 2);
        assert_eq!(d.n_frames(32).unwrap(), 3);
        assert!(matches!(d.n_frames(15), Err(Error::Input(_))));
        assert_eq!(d.span(3), 32);
        let bad = Dictionary::new(d.channels().to_vec(), 16, 17, 16000);
        assert!(bad.is_err());
    }

    #[test]
    fn kernel_diagonal_zero_and_single_atom_projection() {
        let d = init_gammatone_dictionary(4, 200.0f64, 3000.0, 32, 16, 16000).unwrap();
        let k = d.kernel();
        for i in 0..4 {
            assert_eq!(k.entry(i, i, 0), 0.0);
        }
        let mut s = vec![0.0f64; 64];
        s[16..48].copy_from_slice(d.atom(2));
        let p = project(&d, &s).unwrap();
        assert!((p.get(2, 1) - 1.0).abs() < 1e-12);
        assert!(project(&d, &vec![0.0; 64]).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn reconstruct_single_event_and_bounds() {
        let d = init_gammatone_dictionary(3, 200.0f64, 3000.0, 16, 8, 16000).unwrap();
        let code = SparseCode::from_events(3, 4, 0.1, vec![(1, 2, 1.0)]).unwrap();
        let y = reconstruct(&d, &code).unwrap();
        assert_eq!(y.len(), 40);
        assert_eq!(&y[16..32], d.atom(1));
        assert!(y[..16].iter().chain(&y[32..]).all(|v| *v == 0.0));
        assert!(reconstruct(&d, &SparseCode::empty(3, 4, 0.1)).unwrap().iter().all(|v| *v == 0.0));
        let wrong = SparseCode::<f64>::empty(5, 4, 0.1);
        assert!(matches!(reconstruct(&d, &wrong), Err(Error::Code(_))));
    }

    #[test]
    fn json_round_trip_resynthesizes() {
        let d = init_gammatone_dictionary(5, 100.0f64, 4000.0, 64, 32, 16000).unwrap();
        let back = Dictionary::<f64>::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back.channels(), d.channels());
        assert_eq!(back.atom(3), d.atom(3));
        let v: serde_json::Value = serde_json::from_str(&d.to_json().unwrap()).unwrap();
        assert_eq!(v["sample_rate"], 16000);
        assert_eq!(v["channels"][0]["l"], 4.0);
    }

    #[test]
    fn single_precision_dictionary() {
        let d = init_gammatone_dictionary(4, 100.0f32, 4000.0, 128, 64, 16000).unwrap();
        for i in 0..4 {
            assert!((norm_sq(d.atom(i)).sqrt() - 1.0).abs() < 1e-5);
        }
    }
}
