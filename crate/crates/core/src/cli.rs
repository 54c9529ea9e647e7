//! Command-line front end.
//!
//! Every subcommand can take a JSON run configuration (`--config`); flags
//! override file values, which override built-in defaults. Exit codes: 0 on
//! success, 1 on runtime failure, 2 on usage or configuration errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::adapt::{adapt_corpus, write_history_csv, AdaptConfig, AdaptMode, ParamBounds};
use crate::audio::{load_corpus, load_wav, write_wav, Utterance};
use crate::code::{Signal, SparseCode, SparseCodeFile};
use crate::dictionary::{init_gammatone_dictionary, reconstruct, Dictionary};
use crate::error::{Error, Result};
use crate::lca::LcaConfig;
use crate::metrics::{benchmark, evaluate};

const DEFAULT_LAMBDA: f64 = 0.00045;
const DEFAULT_F_MIN: f64 = 50.0;

#[derive(Debug, Parser)]
#[command(name = "chirpcode", version, about = "Sparse LCA coding of audio over adaptive Gammachirp dictionaries")]
pub struct Cli {
    /// Print failures as a JSON object on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,

    /// Worker threads for corpus-level parallelism.
    #[arg(long, global = true, env = "CHIRPCODE_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a log-spaced Gammatone dictionary.
    BuildDict(BuildDictArgs),
    /// Encode WAV files into sparse codes.
    Encode(EncodeArgs),
    /// Reconstruct WAV files from sparse codes.
    Decode(DecodeArgs),
    /// Adapt a dictionary to a corpus (ALCA / ALCA-CF).
    Adapt(AdaptArgs),
    /// Compare dictionaries on a corpus by SNR and sparsity.
    Benchmark(BenchmarkArgs),
    /// Export sparse codes as channel,frame,value CSV event streams.
    ExportEvents(ExportArgs),
}

#[derive(Debug, Args, Default)]
pub struct LcaArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Euler step Δt/τ.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Peak-normalize every utterance after decoding.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub filter_len: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Sample rate in Hz.
    #[arg(long)]
    pub sr: Option<u32>,
    #[arg(long)]
    pub f_min: Option<f64>,
    /// Highest central frequency; defaults to 0.45·sr.
    #[arg(long)]
    pub f_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BuildDictArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub dict: PathBuf,
    /// Single WAV input.
    #[arg(long, conflicts_with = "manifest")]
    pub input: Option<PathBuf>,
    /// Corpus manifest (`path,id,label`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Code file for a single input.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Directory receiving `<id>.json` per utterance.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Per-utterance report CSV (stdout when absent).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub lca: LcaArgs,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long, required = true)]
    pub code: Vec<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdaptArgs {
    /// Initial dictionary; a Gammatone grid is built from geometry otherwise.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// `alca` or `alca-cf`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub lr_mod: Option<f64>,
    #[arg(long)]
    pub lr_cf: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub tbptt_window: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub lca: LcaArgs,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// `NAME=PATH` or `PATH` (named after the file stem); repeatable.
    #[arg(long = "dict", required = true)]
    pub dicts: Vec<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub lca: LcaArgs,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, required = true)]
    pub code: Vec<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Clamp ranges as stored in a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsFile {
    pub f: Option<(f64, f64)>,
    pub b: Option<(f64, f64)>,
    pub c: Option<(f64, f64)>,
    pub l: Option<(f64, f64)>,
}

/// Serialized run configuration; every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub max_iters: Option<usize>,
    pub rel_tol: Option<f64>,
    pub mode: Option<AdaptMode>,
    pub lr_mod: Option<f64>,
    pub lr_cf: Option<f64>,
    pub alpha: Option<f64>,
    pub tbptt_window: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
    pub bounds: Option<BoundsFile>,
    pub normalize: Option<bool>,
    pub channels: Option<usize>,
    pub filter_len: Option<usize>,
    pub stride: Option<usize>,
    pub sample_rate: Option<u32>,
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    /// Corpus manifest path.
    pub manifest: Option<PathBuf>,
    /// Initial dictionary path.
    pub dictionary: Option<PathBuf>,
    /// Output dictionary path.
    pub output: Option<PathBuf>,
    /// History CSV path.
    pub history: Option<PathBuf>,
}

impl RunConfig {
    /// Reads a configuration file; relative paths inside it are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for p in [&mut cfg.manifest, &mut cfg.dictionary, &mut cfg.output, &mut cfg.history]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    fn load_opt(path: Option<&PathBuf>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), |p| Self::load(p))
    }

    fn apply_lca(&mut self, a: &LcaArgs) {
        override_with(&mut self.lambda, a.lambda);
        override_with(&mut self.eta, a.eta);
        override_with(&mut self.max_iters, a.max_iters);
        override_with(&mut self.rel_tol, a.rel_tol);
        if a.normalize {
            self.normalize = Some(true);
        }
    }

    fn apply_geometry(&mut self, g: &GeometryArgs) {
        override_with(&mut self.channels, g.channels);
        override_with(&mut self.filter_len, g.filter_len);
        override_with(&mut self.stride, g.stride);
        override_with(&mut self.sample_rate, g.sr);
        override_with(&mut self.f_min, g.f_min);
        override_with(&mut self.f_max, g.f_max);
    }

    pub fn lca_config(&self) -> LcaConfig<f64> {
        let d = LcaConfig::new(self.lambda.unwrap_or(DEFAULT_LAMBDA));
        LcaConfig {
            eta: self.eta.unwrap_or(d.eta),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            ..d
        }
    }

    pub fn adapt_config(&self, sample_rate: u32) -> AdaptConfig<f64> {
        let d = AdaptConfig::new(self.mode.unwrap_or(AdaptMode::AlcaCf), sample_rate);
        let mut bounds = ParamBounds::for_sample_rate(sample_rate);
        if let Some(b) = self.bounds {
            bounds.f = b.f.unwrap_or(bounds.f);
            bounds.b = b.b.unwrap_or(bounds.b);
            bounds.c = b.c.unwrap_or(bounds.c);
            bounds.l = b.l.unwrap_or(bounds.l);
        }
        AdaptConfig {
            lr_mod: self.lr_mod.unwrap_or(d.lr_mod),
            lr_cf: self.lr_cf.unwrap_or(d.lr_cf),
            alpha: self.alpha.unwrap_or(d.alpha),
            tbptt_window: self.tbptt_window.unwrap_or(d.tbptt_window),
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            seed: self.seed.unwrap_or(d.seed),
            bounds,
            ..d
        }
    }

    /// Gammatone dictionary from the geometry fields (HD-style defaults).
    pub fn build_dictionary(&self) -> Result<Dictionary<f64>> {
        let sr = self.sample_rate.unwrap_or(48000);
        init_gammatone_dictionary(
            self.channels.unwrap_or(700),
            self.f_min.unwrap_or(DEFAULT_F_MIN),
            self.f_max.unwrap_or(0.45 * f64::from(sr)),
            self.filter_len.unwrap_or(1024),
            self.stride.unwrap_or(512),
            sr,
        )
    }
}

fn override_with<V>(slot: &mut Option<V>, value: Option<V>) {
    if value.is_some() {
        *slot = value;
    }
}

fn require<V: Clone>(value: &Option<V>, what: &str) -> Result<V> {
    value.clone().ok_or_else(|| Error::Config(format!("missing required {what}")))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn write_csv_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    write_text(path, &String::from_utf8_lossy(&buf))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

fn load_inputs(input: Option<&PathBuf>, manifest: Option<&PathBuf>, sample_rate: u32, normalize: bool) -> Result<Vec<Utterance>> {
    let mut corpus = match (input, manifest) {
        (Some(wav), None) => vec![load_wav(wav)?],
        (None, Some(m)) => load_corpus(m, sample_rate)?,
        _ => return Err(Error::Config("give exactly one of --input or --manifest".into())),
    };
    if let Some(u) = corpus.iter().find(|u| u.sample_rate != sample_rate) {
        return Err(Error::RateMismatch {
            path: PathBuf::from(&u.id),
            expected: sample_rate,
            found: u.sample_rate,
        });
    }
    if normalize {
        corpus.iter_mut().for_each(Utterance::peak_normalize);
    }
    Ok(corpus)
}

fn load_code(path: &Path) -> Result<SparseCode<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let file: SparseCodeFile = serde_json::from_str(&text)?;
    SparseCode::from_file(&file)
}

fn code_json(code: &SparseCode<f64>) -> Result<String> {
    let mut s = serde_json::to_string(&code.to_file())?;
    s.push('\n');
    Ok(s)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Output file per input: `--output` for a single input, else `<out_dir>/<stem>.<ext>`.
fn outputs_for(inputs: &[String], output: Option<&PathBuf>, out_dir: Option<&PathBuf>, ext: &str) -> Result<Vec<PathBuf>> {
    match (output, out_dir) {
        (Some(o), None) if inputs.len() == 1 => Ok(vec![o.clone()]),
        (None, Some(dir)) => {
            create_dir(dir)?;
            Ok(inputs.iter().map(|id| dir.join(format!("{id}.{ext}"))).collect())
        }
        (Some(_), None) => Err(Error::Config("--output takes a single input; use --out-dir".into())),
        _ => Err(Error::Config("give exactly one of --output or --out-dir".into())),
    }
}

pub fn cmd_build_dict(args: &BuildDictArgs) -> Result<Dictionary<f64>> {
    let mut cfg = RunConfig::load_opt(args.config.as_ref())?;
    cfg.apply_geometry(&args.geometry);
    let d = cfg.build_dictionary()?;
    write_text(&args.output, &format!("{}\n", d.to_json()?))?;
    let (lo, hi) = d.frequency_range();
    println!("{} channels, {lo:.2}–{hi:.2} Hz", d.n_channels());
    Ok(d)
}

pub fn cmd_encode(args: &EncodeArgs) -> Result<()> {
    let mut cfg = RunConfig::load_opt(args.lca.config.as_ref())?;
    cfg.apply_lca(&args.lca);
    let lca = cfg.lca_config();
    lca.validate()?;
    let d = Dictionary::<f64>::load(&args.dict)?;
    let corpus = load_inputs(
        args.input.as_ref(),
        args.manifest.as_ref().or(cfg.manifest.as_ref()),
        d.sample_rate(),
        cfg.normalize.unwrap_or(false),
    )?;
    let ids: Vec<String> = corpus.iter().map(|u| u.id.clone()).collect();
    let outputs = outputs_for(&ids, args.output.as_ref(), args.out_dir.as_ref(), "json")?;

    use rayon::prelude::*;
    let results: Vec<_> = corpus
        .par_iter()
        .map(|u| evaluate(&u.to_signal::<f64>(), &d, &lca).map_err(|e| e.in_utterance(&u.id)))
        .collect();
    let mut report = csv::Writer::from_writer(Vec::new());
    report.write_record(["utterance", "snr_db", "active_count", "energy", "n_frames"])?;
    for (res, out) in results.into_iter().zip(&outputs) {
        let (rep, code) = res?;
        write_text(out, &code_json(&code)?)?;
        report.write_record([
            rep.id.clone(),
            if rep.snr_db.is_infinite() { "inf".into() } else { rep.snr_db.to_string() },
            rep.active_count.to_string(),
            rep.energy.to_string(),
            rep.n_frames.to_string(),
        ])?;
    }
    let bytes = report.into_inner().map_err(|e| Error::io("writing report", e.into_error()))?;
    match &args.report {
        Some(p) => write_text(p, &String::from_utf8_lossy(&bytes))?,
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    Ok(())
}

pub fn cmd_decode(args: &DecodeArgs) -> Result<()> {
    let d = Dictionary::<f64>::load(&args.dict)?;
    let ids: Vec<String> = args.code.iter().map(|p| stem(p)).collect();
    let outputs = outputs_for(&ids, args.output.as_ref(), args.out_dir.as_ref(), "wav")?;
    for (path, out) in args.code.iter().zip(&outputs) {
        let code = load_code(path)?;
        let signal = reconstruct(&d, &code)?;
        write_wav(out, &signal, d.sample_rate())?;
    }
    Ok(())
}

pub fn cmd_adapt(args: &AdaptArgs) -> Result<Dictionary<f64>> {
    let mut cfg = RunConfig::load_opt(args.lca.config.as_ref())?;
    cfg.apply_lca(&args.lca);
    cfg.apply_geometry(&args.geometry);
    override_with(&mut cfg.dictionary, args.dict.clone());
    override_with(&mut cfg.manifest, args.manifest.clone());
    override_with(&mut cfg.output, args.output.clone());
    override_with(&mut cfg.history, args.history.clone());
    override_with(&mut cfg.lr_mod, args.lr_mod);
    override_with(&mut cfg.lr_cf, args.lr_cf);
    override_with(&mut cfg.alpha, args.alpha);
    override_with(&mut cfg.tbptt_window, args.tbptt_window);
    override_with(&mut cfg.epochs, args.epochs);
    override_with(&mut cfg.batch_size, args.batch_size);
    override_with(&mut cfg.seed, args.seed);
    if let Some(m) = &args.mode {
        cfg.mode = Some(m.parse()?);
    }
    let manifest = require(&cfg.manifest, "corpus manifest (--manifest)")?;
    let output = require(&cfg.output, "output dictionary path (--output)")?;

    let d0 = match &cfg.dictionary {
        Some(p) => Dictionary::<f64>::load(p)?,
        None => cfg.build_dictionary()?,
    };
    let lca = cfg.lca_config();
    let adapt = cfg.adapt_config(d0.sample_rate());
    lca.validate()?;
    adapt.validate(d0.sample_rate())?;

    let mut corpus = load_corpus(&manifest, d0.sample_rate())?;
    if cfg.normalize.unwrap_or(false) {
        corpus.iter_mut().for_each(Utterance::peak_normalize);
    }
    let signals: Vec<Signal<f64>> = corpus.iter().map(Utterance::to_signal).collect();
    let (d, history) = adapt_corpus(&signals, &d0, &lca, &adapt)?;
    write_text(&output, &format!("{}\n", d.to_json()?))?;
    if let Some(h) = &cfg.history {
        write_csv_file(h, |buf| write_history_csv(&history, buf))?;
    }
    if let (Some(first), Some(last)) = (history.first(), history.last()) {
        println!(
            "{} epochs: mean energy {:.6e} → {:.6e}, mean SNR {:.3} → {:.3} dB",
            adapt.epochs, first.mean_energy, last.mean_energy, first.mean_snr_db, last.mean_snr_db
        );
    }
    Ok(d)
}

fn parse_dict_spec(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => (stem(Path::new(spec)), PathBuf::from(spec)),
    }
}

pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<crate::metrics::BenchmarkReport> {
    let mut cfg = RunConfig::load_opt(args.lca.config.as_ref())?;
    cfg.apply_lca(&args.lca);
    let lca = cfg.lca_config();
    lca.validate()?;
    let dicts = args
        .dicts
        .iter()
        .map(|spec| {
            let (name, path) = parse_dict_spec(spec);
            Dictionary::<f64>::load(&path).map(|d| (name, d))
        })
        .collect::<Result<Vec<_>>>()?;
    let rate = dicts[0].1.sample_rate();
    let mut corpus = load_corpus(&args.manifest, rate)?;
    if cfg.normalize.unwrap_or(false) {
        corpus.iter_mut().for_each(Utterance::peak_normalize);
    }
    let signals: Vec<Signal<f64>> = corpus.iter().map(Utterance::to_signal).collect();
    let report = benchmark(&signals, &dicts, &lca)?;

    create_dir(&args.out_dir)?;
    write_csv_file(&args.out_dir.join("report.csv"), |b| report.write_rows_csv(b))?;
    write_csv_file(&args.out_dir.join("summary.csv"), |b| report.write_summary_csv(b))?;
    let rows = serde_json::json!({
        "rows": report.rows,
        "failures": report.failures,
        "partial": report.partial,
    });
    let summary = serde_json::json!({
        "summary": report.summary,
        "partial": report.partial,
    });
    write_text(&args.out_dir.join("report.json"), &format!("{}\n", serde_json::to_string_pretty(&rows)?))?;
    write_text(&args.out_dir.join("summary.json"), &format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
    for row in &report.summary {
        println!(
            "{}: mean SNR {:.3} dB, mean active {:.2} over {} utterances",
            row.dictionary, row.mean_snr_db, row.mean_active_count, row.n_utterances
        );
        if row.n_infinite_snr > 0 {
            println!("  ({} utterances with infinite SNR excluded from the mean)", row.n_infinite_snr);
        }
    }
    if report.partial {
        log::warn!("{} utterance failures; report is partial", report.failures.len());
    }
    Ok(report)
}

pub fn cmd_export_events(args: &ExportArgs) -> Result<()> {
    let ids: Vec<String> = args.code.iter().map(|p| stem(p)).collect();
    let outputs = outputs_for(&ids, args.output.as_ref(), args.out_dir.as_ref(), "csv")?;
    for (path, out) in args.code.iter().zip(&outputs) {
        let code = load_code(path)?;
        write_csv_file(out, |b| code.write_events_csv(b))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::BuildDict(a) => cmd_build_dict(a).map(drop),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Adapt(a) => cmd_adapt(a).map(drop),
        Command::Benchmark(a) => cmd_benchmark(a).map(drop),
        Command::ExportEvents(a) => cmd_export_events(a),
    }
}

fn report_error(json: bool, kind: &str, message: &str, code: i32) {
    if json {
        let obj = serde_json::json!({ "error": kind, "message": message, "exit_code": code });
        eprintln!("{obj}");
    } else {
        eprintln!("error: {message}");
    }
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json_requested = args.iter().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            if json_requested {
                report_error(true, "usage", &e.to_string(), 2);
            } else {
                let _ = e.print();
            }
            return 2;
        }
    };
    if let Some(jobs) = cli.jobs.filter(|&j| j > 0) {
        // the global pool can only be installed once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = if e.is_usage() { 2 } else { 1 };
            report_error(cli.json_errors, e.kind(), &e.to_string(), code);
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.json");
        std::fs::write(&p, r#"{"lambda": 0.01, "eta": 0.2, "epochs": 3, "manifest": "m.csv", "bounds": {"f": [30, 5000]}}"#).unwrap();
        let mut cfg = RunConfig::load(&p).unwrap();
        assert_eq!(cfg.manifest.as_deref(), Some(dir.path().join("m.csv").as_path()));
        cfg.apply_lca(&LcaArgs { lambda: Some(0.02), ..Default::default() });
        let lca = cfg.lca_config();
        assert_eq!(lca.lambda, 0.02);
        assert_eq!(lca.eta, 0.2);
        assert_eq!(lca.max_iters, 500);
        let ad = cfg.adapt_config(16000);
        assert_eq!(ad.epochs, 3);
        assert_eq!(ad.bounds.f, (30.0, 5000.0));
        assert_eq!(ad.bounds.b, (0.2, 5.0));
    }

    #[test]
    fn unknown_config_fields_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.json");
        std::fs::write(&p, r#"{"lamda": 0.01}"#).unwrap();
        let err = RunConfig::load(&p).unwrap_err();
        assert!(err.is_usage());
    }

    #[test]
    fn dict_spec_parsing() {
        assert_eq!(parse_dict_spec("base=/a/b.json"), ("base".into(), PathBuf::from("/a/b.json")));
        assert_eq!(parse_dict_spec("/a/lca.json"), ("lca".into(), PathBuf::from("/a/lca.json")));
    }
}
