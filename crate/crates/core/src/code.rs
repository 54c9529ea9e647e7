//! Coefficient containers: dense channel × frame matrices and sparse event codes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense `n_channels × n_frames` matrix stored frame-major (all channels of a
/// frame are contiguous).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefMatrix<T> {
    n_channels: usize,
    n_frames: usize,
    data: Vec<T>,
}

impl<T: Scalar> CoefMatrix<T> {
    pub fn zeros(n_channels: usize, n_frames: usize) -> Self {
        Self {
            n_channels,
            n_frames,
            data: vec![T::zero(); n_channels * n_frames],
        }
    }

    /// Builds a matrix from a channel-major closure `f(channel, frame)`.
    pub fn from_fn(n_channels: usize, n_frames: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n_channels, n_frames);
        for t in 0..n_frames {
            for i in 0..n_channels {
                m.data[t * n_channels + i] = f(i, t);
            }
        }
        m
    }

    #[inline]
    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    #[inline]
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    #[inline]
    pub fn get(&self, channel: usize, frame: usize) -> T {
        self.data[frame * self.n_channels + channel]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, frame: usize, value: T) {
        self.data[frame * self.n_channels + channel] = value;
    }

    /// All channels of one frame.
    #[inline]
    pub fn frame(&self, frame: usize) -> &[T] {
        &self.data[frame * self.n_channels..(frame + 1) * self.n_channels]
    }

    #[inline]
    pub fn frame_mut(&mut self, frame: usize) -> &mut [T] {
        let n = self.n_channels;
        &mut self.data[frame * n..(frame + 1) * n]
    }

    /// Flat frame-major storage, index `frame * n_channels + channel`.
    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_channels == other.n_channels && self.n_frames == other.n_frames
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Frobenius inner product.
    pub fn inner(&self, other: &Self) -> T {
        crate::scalar::dot(&self.data, &other.data)
    }

    pub fn active(&self) -> ActiveSet<T> {
        ActiveSet::from_dense(self)
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| !v.is_zero()).count()
    }
}

/// Nonzero entries of a [`CoefMatrix`] in storage order (frame-major).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActiveSet<T> {
    /// Flat indices `frame * n_channels + channel`.
    pub index: Vec<usize>,
    pub value: Vec<T>,
}

impl<T: Scalar> ActiveSet<T> {
    pub fn from_dense(m: &CoefMatrix<T>) -> Self {
        let mut out = Self {
            index: Vec::new(),
            value: Vec::new(),
        };
        for (k, &v) in m.as_slice().iter().enumerate() {
            if !v.is_zero() {
                out.index.push(k);
                out.value.push(v);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn l1(&self) -> T {
        self.value.iter().map(|v| v.abs()).sum()
    }

    pub fn to_dense(&self, n_channels: usize, n_frames: usize) -> CoefMatrix<T> {
        let mut m = CoefMatrix::zeros(n_channels, n_frames);
        for (&k, &v) in self.index.iter().zip(&self.value) {
            m.data[k] = v;
        }
        m
    }
}

/// Sparse code: the nonzero coefficients of an encoding as
/// `(channel, frame, value)` events, ordered by frame then channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode<T> {
    pub n_channels: usize,
    pub n_frames: usize,
    /// Threshold of the run that produced the code.
    pub lambda: T,
    events: Vec<(usize, usize, T)>,
}

impl<T: Scalar> SparseCode<T> {
    pub fn empty(n_channels: usize, n_frames: usize, lambda: T) -> Self {
        Self {
            n_channels,
            n_frames,
            lambda,
            events: Vec::new(),
        }
    }

    /// Builds a code from arbitrary events; zero values are dropped, events
    /// are sorted, and duplicated `(channel, frame)` keys are rejected.
    pub fn from_events(
        n_channels: usize,
        n_frames: usize,
        lambda: T,
        events: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut events: Vec<_> = events.into_iter().filter(|e| !e.2.is_zero()).collect();
        events.sort_by_key(|&(c, f, _)| (f, c));
        for w in events.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::Code(format!(
                    "duplicate event at channel {}, frame {}",
                    w[0].0, w[0].1
                )));
            }
        }
        if let Some(&(c, f, _)) = events.iter().find(|e| e.0 >= n_channels || e.1 >= n_frames) {
            return Err(Error::Code(format!(
                "event (channel {c}, frame {f}) outside {n_channels} channels × {n_frames} frames"
            )));
        }
        Ok(Self {
            n_channels,
            n_frames,
            lambda,
            events,
        })
    }

    pub fn from_dense(m: &CoefMatrix<T>, lambda: T) -> Self {
        let n = m.n_channels();
        let events = m
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(k, &v)| (k % n, k / n, v))
            .collect();
        Self {
            n_channels: n,
            n_frames: m.n_frames(),
            lambda,
            events,
        }
    }

    pub fn to_dense(&self) -> CoefMatrix<T> {
        let mut m = CoefMatrix::zeros(self.n_channels, self.n_frames);
        for &(c, f, v) in &self.events {
            m.set(c, f, v);
        }
        m
    }

    pub fn events(&self) -> &[(usize, usize, T)] {
        &self.events
    }

    /// Number of active coefficients.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn to_file(&self) -> SparseCodeFile {
        SparseCodeFile {
            n_channels: self.n_channels,
            n_frames: self.n_frames,
            lambda: self.lambda.as_f64(),
            events: self
                .events
                .iter()
                .map(|&(c, f, v)| (c, f, v.as_f64()))
                .collect(),
        }
    }

    pub fn from_file(file: &SparseCodeFile) -> Result<Self> {
        Self::from_events(
            file.n_channels,
            file.n_frames,
            T::lit(file.lambda),
            file.events.iter().map(|&(c, f, v)| (c, f, T::lit(v))),
        )
    }

    /// Writes `channel,frame,value` rows with a header.
    pub fn write_events_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["channel", "frame", "value"])?;
        for &(c, f, v) in &self.events {
            w.write_record([c.to_string(), f.to_string(), v.as_f64().to_string()])?;
        }
        w.flush().map_err(|e| Error::io("writing event csv", e))?;
        Ok(())
    }
}

/// On-disk JSON form of a [`SparseCode`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCodeFile {
    pub n_channels: usize,
    pub n_frames: usize,
    pub lambda: f64,
    pub events: Vec<(usize, usize, f64)>,
}

/// A named mono signal at a known sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    pub id: String,
    pub samples: Vec<T>,
    pub sample_rate: u32,
}

impl<T: Scalar> Signal<T> {
    pub fn new(id: impl Into<String>, samples: Vec<T>, sample_rate: u32) -> Self {
        Self {
            id: id.into(),
            samples,
            sample_rate,
        }
    }
}
