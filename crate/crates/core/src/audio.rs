//! WAV ingestion and corpus manifests.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::code::Signal;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A decoded mono recording with samples in `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub label: Option<String>,
}

impl Utterance {
    /// Scales the samples so that the peak magnitude is 1; silent input is
    /// left alone.
    pub fn peak_normalize(&mut self) {
        let peak = self.samples.iter().fold(0.0f32, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            self.samples.iter_mut().for_each(|v| *v /= peak);
        }
    }

    pub fn to_signal<T: Scalar>(&self) -> Signal<T> {
        Signal::new(
            self.id.clone(),
            self.samples.iter().map(|&v| T::lit(f64::from(v))).collect(),
            self.sample_rate,
        )
    }
}

fn ingest_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Ingestion {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Decodes a mono 16-bit PCM or 32-bit float WAV file. The id is the file stem.
pub fn load_wav(path: &Path) -> Result<Utterance> {
    let reader = hound::WavReader::open(path).map_err(|e| ingest_err(path, e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(ingest_err(path, format!("expected mono audio, found {} channels", spec.channels)));
    }
    let samples: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f32::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| ingest_err(path, e.to_string()))?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| ingest_err(path, e.to_string()))?,
        (format, bits) => {
            return Err(ingest_err(path, format!("unsupported encoding: {bits}-bit {format:?}")));
        }
    };
    if let Some(bad) = samples.iter().find(|v| !(v.abs() <= 1.0)) {
        return Err(ingest_err(path, format!("sample {bad} outside [-1, 1]")));
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Utterance {
        id,
        samples,
        sample_rate: spec.sample_rate,
        label: None,
    })
}

/// Writes mono 32-bit float PCM.
pub fn write_wav<T: Scalar>(path: &Path, samples: &[T], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let wrap = |e: hound::Error| ingest_err(path, e.to_string());
    let mut w = hound::WavWriter::create(path, spec).map_err(wrap)?;
    for &v in samples {
        w.write_sample(v.to_f32().unwrap_or(f32::NAN)).map_err(wrap)?;
    }
    w.finalize().map_err(wrap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Resolved against the manifest's directory.
    pub path: PathBuf,
    pub id: String,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    pub sample_rate: u32,
}

#[derive(Deserialize)]
struct ManifestRecord {
    path: String,
    #[serde(default)]
    id: String,
    #[serde(default)]
    label: String,
}

/// Parses a `path,id,label` CSV; `sample_rate` is the rate every file must have.
pub fn read_manifest(manifest_path: &Path, sample_rate: u32) -> Result<CorpusManifest> {
    if sample_rate == 0 {
        return Err(Error::Config("declared sample rate must be positive".into()));
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(manifest_path)
        .map_err(|e| ingest_err(manifest_path, e.to_string()))?;
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for rec in reader.deserialize::<ManifestRecord>() {
        let rec = rec.map_err(|e| ingest_err(manifest_path, e.to_string()))?;
        let path = base.join(&rec.path);
        if !seen.insert(path.clone()) {
            return Err(ingest_err(manifest_path, format!("duplicate path {}", rec.path)));
        }
        let id = if rec.id.is_empty() {
            path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        } else {
            rec.id
        };
        entries.push(ManifestEntry {
            path,
            id,
            label: (!rec.label.is_empty()).then_some(rec.label),
        });
    }
    Ok(CorpusManifest { entries, sample_rate })
}

/// Loads every manifest entry in manifest order. No resampling: a file at any
/// other rate than the declared one is an error.
pub fn load_corpus(manifest_path: &Path, sample_rate: u32) -> Result<Vec<Utterance>> {
    let manifest = read_manifest(manifest_path, sample_rate)?;
    if manifest.entries.is_empty() {
        log::warn!("manifest {} lists no files", manifest_path.display());
        return Ok(Vec::new());
    }
    let missing: Vec<PathBuf> = manifest
        .entries
        .iter()
        .filter(|e| !e.path.is_file())
        .map(|e| e.path.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFiles(missing));
    }
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let mut u = load_wav(&e.path)?;
            if u.sample_rate != manifest.sample_rate {
                return Err(Error::RateMismatch {
                    path: e.path.clone(),
                    expected: manifest.sample_rate,
                    found: u.sample_rate,
                });
            }
            u.id = e.id.clone();
            u.label = e.label.clone();
            Ok(u)
        })
        .collect()
}
