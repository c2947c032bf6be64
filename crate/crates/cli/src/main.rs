//! `qfa-lab`: command-line front end to `qfa-core`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.

mod config;
mod error;
mod manifest;

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qfa_core::automata::{qfa2_build, qfa2d_build, QfaSpec};
use qfa_core::expsim::{
    accept_probabilities, calibration_fit, qst_direct_inversion, simulate_repeats, BinGeometry,
    ExperimentConfig, HistogramMeta, Mode, TimeHistogram, TomographyRow,
};
use qfa_core::holography::{
    fit_to_envelope, hologram_phase, lg_field, petal_field, Grid, ScalarField,
};
use qfa_core::kset::{
    exhaustive_best_kset_with, is_prime, randomized_best_kset_with, verify_log_bound_with,
    AngleRule, SearchOptions,
};
use qfa_core::photonic::{accept_prob_closed_form, dove_angle_for_p, PetalSign};
use serde::{Deserialize, Serialize};

use config::{parse_list, RunConfig};
use error::{CliError, Result};
use manifest::ManifestBuilder;

#[derive(Parser)]
#[command(
    name = "qfa-lab",
    version,
    about = "Quantum finite automata for MOD_p on photon OAM"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a QFA spec (JSON) recognizing MOD_p.
    Build(BuildArgs),
    /// Theory acceptance curve P_n for n = 0..n_max (CSV).
    Sweep(SweepArgs),
    /// Simulate coincidence histograms for a QFA mode and its Gaussian reference.
    Simulate(SimulateArgs),
    /// Turn simulated or measured histograms into P_n ± σ (CSV).
    Analyze(AnalyzeArgs),
    /// Bloch vectors by direct inversion of six projection counts.
    Tomography(TomographyArgs),
    /// Fit A cos²(ℓ(θ − δ)) + B to Dove-angle calibration data.
    Calibrate(CalibrateArgs),
    /// Search rotation sets K minimizing the worst false acceptance.
    Search(SearchArgs),
    /// Export an LG or petal field, optionally with its hologram.
    Field(FieldArgs),
}

/// Comma-separated list; a newtype so clap treats it as one value.
#[derive(Debug, Clone)]
struct KList(Vec<u32>);

fn k_list(s: &str) -> std::result::Result<KList, String> {
    parse_list(s).map(KList)
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    p: usize,
    /// Comma-separated rotation indices, e.g. `1,3`.
    #[arg(long, value_parser = k_list)]
    k: KList,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// OAM values / rotation indices.
    #[arg(long, value_parser = k_list, conflicts_with = "spec")]
    k: Option<KList>,
    /// Dove angle in degrees; derived from `--p` when omitted.
    #[arg(long)]
    phi_deg: Option<f64>,
    #[arg(long)]
    p: Option<usize>,
    /// Evaluate an explicit spec file from `build` instead of the closed form.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    n_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = k_list)]
    k: Option<KList>,
    #[arg(long)]
    phi_deg: Option<f64>,
    /// Beamsplitter `R:T`, e.g. `70:30`.
    #[arg(long)]
    bs: Option<String>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    repeats: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Directory written by `simulate`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TomographyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// CSV with `angle_deg,power` rows.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    ell: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Abstract,
    Dove,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    p: usize,
    /// Set size; required unless `--epsilon` is given.
    #[arg(long, required_unless_present = "epsilon")]
    d: Option<usize>,
    /// Random search with this many draws instead of exhaustive.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Find the smallest d reaching this worst case, up to (4/ε) ln 2p.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    rule: Option<RuleArg>,
    /// Search all of 1..p−1 instead of 1..(p−1)/2.
    #[arg(long)]
    no_dedup: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldFormat {
    Bin,
    Csv,
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long, allow_hyphen_values = true)]
    ell: i32,
    /// Petal mode of |ℓ| instead of a single LG mode.
    #[arg(long, value_enum)]
    petal: Option<SignArg>,
    #[arg(long, default_value_t = 1e-3)]
    waist: f64,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    #[arg(long, value_enum, default_value = "bin")]
    format: FieldFormat,
    /// Also write the hologram carving this field out of a Gaussian of waist `--w-in`.
    #[arg(long)]
    w_in: Option<f64>,
    #[arg(long, default_value_t = 20e-6)]
    period: f64,
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Writes to `out` with a manifest beside it, or to stdout.
fn emit(out: Option<&Path>, bytes: &[u8], mut m: ManifestBuilder) -> Result<()> {
    match out {
        Some(p) => {
            write(p, bytes)?;
            m.output(p);
            m.write(&manifest_path(p))
        }
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn cmd_build(a: &BuildArgs) -> Result<()> {
    if !is_prime(a.p) {
        return Err(CliError::Usage(format!("--p {} is not prime", a.p)));
    }
    let ks: Vec<usize> = a.k.0.iter().map(|&k| k as usize).collect();
    let spec = match ks.as_slice() {
        [] => return Err(CliError::Usage("--k needs at least one value".into())),
        [k] => qfa2_build(a.p, *k)?,
        _ => qfa2d_build(a.p, &ks)?,
    };
    let text = serde_json::to_string_pretty(&spec)? + "\n";
    let args = serde_json::json!({ "p": a.p, "k": a.k.0 });
    emit(
        a.out.as_deref(),
        text.as_bytes(),
        ManifestBuilder::new("build", args.to_string().as_bytes(), None),
    )
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let mut csv = String::from("n,P_n\n");
    let args;
    if let Some(path) = &a.spec {
        let text = read(path)?;
        let spec: QfaSpec = serde_json::from_str(&text)?;
        for n in 0..=a.n_max {
            csv += &format!("{n},{}\n", spec.run(n).accept_prob);
        }
        args = text;
    } else {
        let ks =
            a.k.clone().map(|k| k.0).ok_or_else(|| {
                CliError::Usage("give --k (with --phi-deg or --p) or --spec".into())
            })?;
        let phi = match (a.phi_deg, a.p) {
            (Some(d), _) => d.to_radians(),
            (None, Some(p)) => dove_angle_for_p(p, &ks)?,
            (None, None) => return Err(CliError::Usage("give --phi-deg or --p".into())),
        };
        for n in 0..=a.n_max {
            csv += &format!("{n},{}\n", accept_prob_closed_form(&ks, phi, n as u64));
        }
        args = serde_json::json!({ "k": ks, "phi_rad": phi, "n_max": a.n_max }).to_string();
    }
    emit(
        a.out.as_deref(),
        csv.as_bytes(),
        ManifestBuilder::new("sweep", args.as_bytes(), None),
    )
}

/// `experiment.json` written next to the histogram CSVs.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSidecar {
    run: RunConfig,
    experiment: ExperimentConfig,
    geometry: BinGeometry,
    datasets: Vec<DatasetEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetEntry {
    reference: bool,
    file: String,
    meta: HistogramMeta,
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut run = match &a.config {
        Some(p) => RunConfig::parse(&read(p)?, &p.display().to_string())?,
        None => {
            let (Some(KList(ells)), Some(phi_deg)) = (a.k.clone(), a.phi_deg) else {
                return Err(CliError::Usage(
                    "give --config, or both --k and --phi-deg".into(),
                ));
            };
            RunConfig {
                qfa: config::QfaSection { ells, phi_deg },
                ..Default::default()
            }
        }
    };
    if let Some(k) = &a.k {
        run.qfa.ells = k.0.clone();
    }
    if let Some(v) = a.phi_deg {
        run.qfa.phi_deg = v;
    }
    if let Some(v) = &a.bs {
        run.loop_.bs = v.clone();
    }
    if let Some(v) = a.n_max {
        run.sim.n_max = v;
    }
    if let Some(v) = a.budget {
        run.sim.budget = v;
    }
    if let Some(v) = a.repeats {
        run.run.repeats = v;
    }
    if let Some(v) = a.seed {
        run.run.seed = v;
    }
    if run.run.repeats == 0 {
        return Err(CliError::Usage("repeats must be at least 1".into()));
    }
    let cfg = run.experiment()?;
    let geometry = cfg.validate()?;
    let canonical = serde_json::to_string(&run)?;
    let mut m = ManifestBuilder::new("simulate", canonical.as_bytes(), Some(run.run.seed));

    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let mut datasets = Vec::new();
    for (reference, c) in [(false, cfg.clone()), (true, cfg.with_mode(Mode::Gaussian))] {
        for h in simulate_repeats(&c, run.run.repeats)? {
            let name = format!(
                "{}_r{:03}.csv",
                if reference { "gaussian" } else { "qfa" },
                h.meta.repeat
            );
            let path = a.out.join(&name);
            let mut buf = Vec::new();
            h.write_csv(&mut buf)?;
            write(&path, &buf)?;
            m.output(&path);
            datasets.push(DatasetEntry {
                reference,
                file: name,
                meta: h.meta,
            });
        }
    }
    let sidecar = ExperimentSidecar {
        run,
        experiment: cfg,
        geometry,
        datasets,
    };
    let side_path = a.out.join("experiment.json");
    write(
        &side_path,
        serde_json::to_string_pretty(&sidecar)?.as_bytes(),
    )?;
    m.output(&side_path);
    m.write(&a.out.join("manifest.json"))
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let side_path = a.input.join("experiment.json");
    let side_text = read(&side_path)?;
    let side: ExperimentSidecar =
        serde_json::from_str(&side_text).map_err(|e| CliError::Config {
            path: side_path.display().to_string(),
            message: e.to_string(),
        })?;
    let (mut qfa, mut gauss) = (Vec::new(), Vec::new());
    for d in &side.datasets {
        let path = a.input.join(&d.file);
        let f = fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
        let h = TimeHistogram::read_csv(BufReader::new(f), side.geometry, d.meta.clone())?;
        if d.reference {
            gauss.push(h);
        } else {
            qfa.push(h);
        }
    }
    let n_max = a.n_max.unwrap_or(side.experiment.n_max);
    let r = accept_probabilities(&qfa, &gauss, n_max)?;
    let mut buf = Vec::new();
    r.write_csv(&mut buf)?;
    let m = ManifestBuilder::new("analyze", side_text.as_bytes(), Some(side.experiment.seed));
    emit(a.out.as_deref(), &buf, m)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TomographyDoc {
    /// Multiplies every count, e.g. `1e5` when counts are listed in units of 10⁵.
    #[serde(default = "unit_scale")]
    scale: f64,
    rows: Vec<TomographyRow>,
}

fn unit_scale() -> f64 {
    1.0
}

fn cmd_tomography(a: &TomographyArgs) -> Result<()> {
    let text = read(&a.input)?;
    let mut doc: TomographyDoc = serde_json::from_str(&text).map_err(|e| CliError::Config {
        path: a.input.display().to_string(),
        message: e.to_string(),
    })?;
    for row in &mut doc.rows {
        let scaled = qfa_core::expsim::ProjectionCounts::from_array(
            row.counts.to_array().map(|c| c * doc.scale),
        );
        row.bloch = Some(qst_direct_inversion(&scaled)?);
    }
    let out = serde_json::to_string_pretty(&doc)? + "\n";
    emit(
        a.out.as_deref(),
        out.as_bytes(),
        ManifestBuilder::new("tomography", text.as_bytes(), None),
    )
}

fn cmd_calibrate(a: &CalibrateArgs) -> Result<()> {
    let text = read(&a.input)?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(char::is_alphabetic) {
            continue;
        }
        let parse = || -> Option<(f64, f64)> {
            let (t, p) = line.split_once(',')?;
            Some((t.trim().parse().ok()?, p.trim().parse().ok()?))
        };
        samples.push(parse().ok_or_else(|| CliError::Config {
            path: a.input.display().to_string(),
            message: format!("line {}: expected angle_deg,power", i + 1),
        })?);
    }
    let fit = calibration_fit(&samples, a.ell)?;
    let out = serde_json::to_string_pretty(&fit)? + "\n";
    emit(
        a.out.as_deref(),
        out.as_bytes(),
        ManifestBuilder::new("calibrate", text.as_bytes(), None),
    )
}

fn cmd_search(a: &SearchArgs) -> Result<()> {
    let rule = match a.rule {
        Some(RuleArg::Dove) => AngleRule::Dove,
        Some(RuleArg::Abstract) => AngleRule::Abstract,
        None if a.epsilon.is_some() => AngleRule::Dove,
        None => AngleRule::Abstract,
    };
    let opts = SearchOptions {
        rule,
        dedup: !a.no_dedup && rule == AngleRule::Abstract,
    };
    let args = serde_json::json!({
        "p": a.p, "d": a.d, "trials": a.trials, "epsilon": a.epsilon,
        "rule": rule, "dedup": opts.dedup,
    });
    let text = if let Some(eps) = a.epsilon {
        serde_json::to_string_pretty(&verify_log_bound_with(a.p, eps, &opts)?)?
    } else {
        let d = a.d.expect("clap enforces --d without --epsilon");
        let r = match a.trials {
            Some(t) => randomized_best_kset_with(a.p, d, t, a.seed, &opts)?,
            None => exhaustive_best_kset_with(a.p, d, &opts)?,
        };
        serde_json::to_string_pretty(&r)?
    } + "\n";
    let seed = a.trials.map(|_| a.seed);
    emit(
        a.out.as_deref(),
        text.as_bytes(),
        ManifestBuilder::new("search", args.to_string().as_bytes(), seed),
    )
}

fn cmd_field(a: &FieldArgs) -> Result<()> {
    let grid = Grid::for_waist(a.grid, a.waist)?;
    let field: ScalarField = match a.petal {
        Some(s) => {
            let sign = match s {
                SignArg::Plus => PetalSign::Plus,
                SignArg::Minus => PetalSign::Minus,
            };
            petal_field(a.ell.unsigned_abs(), sign, a.waist, &grid)?
        }
        None => lg_field(a.ell, a.waist, &grid)?,
    };
    let args = serde_json::json!({
        "ell": a.ell, "petal": a.petal.map(|s| matches!(s, SignArg::Plus)),
        "waist": a.waist, "grid": a.grid, "w_in": a.w_in, "period": a.period,
    });
    let mut m = ManifestBuilder::new("field", args.to_string().as_bytes(), None);
    let mut buf = Vec::new();
    match a.format {
        FieldFormat::Bin => field.write_binary(&mut buf)?,
        FieldFormat::Csv => field.write_csv(&mut buf)?,
    }
    write(&a.out, &buf)?;
    m.output(&a.out);
    if let Some(w_in) = a.w_in {
        let target = fit_to_envelope(&field, w_in, 1.0)?;
        let h = hologram_phase(&target, w_in, a.period)?;
        let mut csv = String::from("ix,iy,M,F,phase\n");
        for (i, ((mm, f), ph)) in h.m.iter().zip(&h.f).zip(&h.phase).enumerate() {
            csv += &format!("{},{},{mm},{f},{ph}\n", i % a.grid, i / a.grid);
        }
        let hp = a.out.with_extension("hologram.csv");
        write(&hp, csv.as_bytes())?;
        m.output(&hp);
    }
    m.write(&manifest_path(&a.out))
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("QFA_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!("QFA_LAB_THREADS={v:?} is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match &cli.cmd {
        Command::Build(a) => cmd_build(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Tomography(a) => cmd_tomography(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Search(a) => cmd_search(a),
        Command::Field(a) => cmd_field(a),
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("qfa-lab: error: {e}");
        std::process::exit(e.exit_code());
    }
}
