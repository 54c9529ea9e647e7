//! Reconstruction quality and sparsity statistics, and the multi-dictionary
//! benchmark report.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::code::{Signal, SparseCode};
use crate::dictionary::{reconstruct, Dictionary};
use crate::error::{Error, Result};
use crate::lca::{encode, energy, LcaConfig};
use crate::scalar::{norm_sq, Scalar};

/// `10·log10(‖s‖² / ‖s − ŝ‖²)`; `+∞` when the residual vanishes.
pub fn snr<T: Scalar>(s: &[T], s_hat: &[T]) -> Result<T> {
    if s.len() != s_hat.len() {
        return Err(Error::Contract(format!(
            "snr needs equal lengths, got {} and {}",
            s.len(),
            s_hat.len()
        )));
    }
    let signal = norm_sq(s);
    if signal.is_zero() {
        return Err(Error::Domain("snr of an all-zero reference".into()));
    }
    let noise: T = s.iter().zip(s_hat).map(|(&a, &b)| (a - b) * (a - b)).sum();
    if noise.is_zero() {
        return Ok(T::infinity());
    }
    Ok(T::lit(10.0) * (signal / noise).log10())
}

/// Number of active coefficients.
pub fn sparsity<T: Scalar>(code: &SparseCode<T>) -> usize {
    code.len()
}

fn ser_snr<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn fmt_snr(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".to_string()
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtteranceReport {
    pub id: String,
    #[serde(serialize_with = "ser_snr")]
    pub snr_db: f64,
    pub active_count: usize,
    pub energy: f64,
    pub n_frames: usize,
}

/// Encodes one signal and measures it; the reconstruction is zero-padded to
/// the signal length.
pub fn evaluate<T: Scalar>(signal: &Signal<T>, d: &Dictionary<T>, cfg: &LcaConfig<T>) -> Result<(UtteranceReport, SparseCode<T>)> {
    let s = &signal.samples;
    let (code, _) = encode(s, d, cfg)?;
    let mut recon = reconstruct(d, &code)?;
    recon.resize(s.len(), T::zero());
    let report = UtteranceReport {
        id: signal.id.clone(),
        snr_db: snr(s, &recon)?.as_f64(),
        active_count: sparsity(&code),
        energy: energy(s, &code, d, cfg.lambda, T::one())?.as_f64(),
        n_frames: code.n_frames,
    };
    Ok((report, code))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub dictionary: String,
    pub utterance: String,
    #[serde(serialize_with = "ser_snr")]
    pub snr_db: f64,
    pub active_count: usize,
    pub n_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub dictionary: String,
    pub mean_snr_db: f64,
    pub mean_active_count: f64,
    /// Utterances that contributed a report.
    pub n_utterances: usize,
    /// Mean of `active_count / n_frames`.
    pub mean_active_per_frame: f64,
    /// Utterances left out of `mean_snr_db` because their SNR is infinite.
    pub n_infinite_snr: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub dictionary: String,
    pub utterance: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<Failure>,
    /// True when any utterance failed.
    pub partial: bool,
}

impl BenchmarkReport {
    pub fn write_rows_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["dictionary", "utterance", "snr_db", "active_count", "n_frames"])?;
        for r in &self.rows {
            w.write_record([
                r.dictionary.clone(),
                r.utterance.clone(),
                fmt_snr(r.snr_db),
                r.active_count.to_string(),
                r.n_frames.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("writing report csv", e))?;
        Ok(())
    }

    pub fn write_summary_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["dictionary", "mean_snr_db", "mean_active_count", "n_utterances"])?;
        for r in &self.summary {
            w.write_record([
                r.dictionary.clone(),
                r.mean_snr_db.to_string(),
                r.mean_active_count.to_string(),
                r.n_utterances.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("writing summary csv", e))?;
        Ok(())
    }

    pub fn summary_for(&self, dictionary: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.dictionary == dictionary)
    }
}

fn summarize(name: &str, reports: &[UtteranceReport]) -> SummaryRow {
    let finite: Vec<f64> = reports.iter().map(|r| r.snr_db).filter(|v| v.is_finite()).collect();
    let n = reports.len();
    let mean = |sum: f64, count: usize| if count == 0 { f64::NAN } else { sum / count as f64 };
    SummaryRow {
        dictionary: name.to_string(),
        mean_snr_db: mean(finite.iter().sum(), finite.len()),
        mean_active_count: mean(reports.iter().map(|r| r.active_count as f64).sum(), n),
        n_utterances: n,
        mean_active_per_frame: mean(
            reports
                .iter()
                .map(|r| r.active_count as f64 / r.n_frames.max(1) as f64)
                .sum(),
            n,
        ),
        n_infinite_snr: n - finite.len(),
    }
}

/// Encodes every utterance with every dictionary. Per-utterance failures are
/// recorded in the report rather than aborting the run.
pub fn benchmark<T: Scalar>(
    corpus: &[Signal<T>],
    dictionaries: &[(String, Dictionary<T>)],
    cfg: &LcaConfig<T>,
) -> Result<BenchmarkReport> {
    cfg.validate()?;
    if let Some((_, first)) = dictionaries.first() {
        for (name, d) in dictionaries {
            if d.filter_len() != first.filter_len() || d.stride() != first.stride() || d.sample_rate() != first.sample_rate() {
                return Err(Error::Config(format!("dictionary {name} has a different geometry")));
            }
        }
        if let Some(u) = corpus.iter().find(|u| u.sample_rate != first.sample_rate()) {
            return Err(Error::Config(format!(
                "utterance {} is at {} Hz, dictionaries at {} Hz",
                u.id,
                u.sample_rate,
                first.sample_rate()
            )));
        }
    }
    let mut report = BenchmarkReport {
        rows: Vec::new(),
        summary: Vec::new(),
        failures: Vec::new(),
        partial: false,
    };
    for (name, d) in dictionaries {
        let results: Vec<Result<UtteranceReport>> = corpus
            .par_iter()
            .map(|u| evaluate(u, d, cfg).map(|(r, _)| r))
            .collect();
        let mut ok = Vec::with_capacity(results.len());
        for (u, res) in corpus.iter().zip(results) {
            match res {
                Ok(r) => {
                    report.rows.push(ReportRow {
                        dictionary: name.clone(),
                        utterance: r.id.clone(),
                        snr_db: r.snr_db,
                        active_count: r.active_count,
                        n_frames: r.n_frames,
                    });
                    ok.push(r);
                }
                Err(e) => report.failures.push(Failure {
                    dictionary: name.clone(),
                    utterance: u.id.clone(),
                    error: e.to_string(),
                }),
            }
        }
        report.summary.push(summarize(name, &ok));
    }
    report.partial = !report.failures.is_empty();
    Ok(report)
}
