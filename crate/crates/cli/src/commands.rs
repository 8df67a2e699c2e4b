use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use hydrostrip::band::apply_weight;
use hydrostrip::config::{RunConfig, OUTPUT_ROOT_ENV};
use hydrostrip::io::{list_runs, read_snapshot, RunDir, RunKind, RunManifest, Stamp};
use hydrostrip::limit::{run_limit_from, LimitParams, LimitRun, RunStatus};
use hydrostrip::lp::{block_l2_norms, DyadicFilterBank};
use hydrostrip::pe::{run_pe_from, PeParams, PeRun};
use hydrostrip::verify::{
    certify_dtu, certify_limit_energy, certify_pe_energy, convergence_sweep, fitted_constant,
    smallness_check, CertificateReport, SampleFamily,
};
use hydrostrip::{initial, Error, Result};

/// Number of synthetic samples per estimate when `λ` is fitted.
const FIT_SAMPLES: usize = 8;

/// `(C, λ, ratios)`: from the override `λ = 2C²`, or fitted on the reference sample family.
fn constants(cfg: &RunConfig) -> Result<(f64, f64, Value)> {
    match cfg.lambda {
        Some(l) => Ok(((l / 2.0).sqrt(), l, Value::Null)),
        None => {
            let fit = fitted_constant(&SampleFamily::reference(cfg.grid.lx())?, FIT_SAMPLES, cfg.r)?;
            Ok((fit.c, fit.lambda, serde_json::to_value(&fit.ratios)?))
        }
    }
}

fn exhausted_at(status: RunStatus) -> Option<f64> {
    match status {
        RunStatus::Completed => None,
        RunStatus::BandExhausted { t } => Some(t),
    }
}

fn limit_certificates(run: &LimitRun, cfg: &RunConfig, c: f64, bank: &DyadicFilterBank) -> Result<(Vec<CertificateReport>, Vec<String>)> {
    let mut reports = vec![certify_limit_energy(run, bank, cfg.r, c)?];
    let mut skipped = Vec::new();
    match certify_dtu(run, bank, cfg.r, c, cfg.c1) {
        Ok(r) => reports.push(r),
        Err(e @ Error::Sampling(_)) => skipped.push(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok((reports, skipped))
}

pub fn run_limit(cfg: &RunConfig) -> Result<Value> {
    let (c, lambda, ratios) = constants(cfg)?;
    let bank = DyadicFilterBank::new(cfg.grid)?;
    let (u0, t0) = initial::build(cfg, lambda, &bank)?;
    let small = smallness_check(&u0, &t0, cfg.a, cfg.c0, c, lambda, &bank)?;
    let run = run_limit_from(&u0, &t0, LimitParams::from_config(cfg), cfg.num_steps(), cfg.sample_every, cfg.a, lambda)?;
    let stamp = Stamp::of(cfg);
    let manifest = RunManifest {
        stamp: stamp.clone(),
        kind: RunKind::Limit,
        config: cfg.clone(),
        lambda,
        c,
        eps: None,
        exhausted_at: exhausted_at(run.status),
    };
    let dir = RunDir::create(&cfg.output_root(), &manifest)?;
    dir.write_limit_run(&run, &stamp)?;
    let (reports, skipped) = limit_certificates(&run, cfg, c, &bank)?;
    dir.write_certificates(&reports, &stamp)?;
    Ok(json!({
        "command": "run-limit",
        "dir": dir.path(),
        "status": run.status,
        "t": run.last().t,
        "theta": run.band.accumulated(),
        "c": c,
        "lambda": lambda,
        "lemma_ratios": ratios,
        "smallness": small,
        "certificates": reports,
        "skipped": skipped,
    }))
}

pub fn run_pe(cfg: &RunConfig) -> Result<Value> {
    let (c, lambda, ratios) = constants(cfg)?;
    let bank = DyadicFilterBank::new(cfg.grid)?;
    let (u0, t0) = initial::build(cfg, lambda, &bank)?;
    let small = smallness_check(&u0, &t0, cfg.a, cfg.c0, c, lambda, &bank)?;
    let stamp = Stamp::of(cfg);
    let mut legs = Vec::new();
    for &eps in &cfg.eps {
        let run = run_pe_from(&u0, &t0, PeParams::from_config(cfg, eps), cfg.num_steps(), cfg.sample_every, cfg.a, lambda)?;
        let manifest = RunManifest {
            stamp: stamp.clone(),
            kind: RunKind::Pe,
            config: cfg.clone(),
            lambda,
            c,
            eps: Some(eps),
            exhausted_at: exhausted_at(run.status),
        };
        let dir = RunDir::create(&cfg.output_root(), &manifest)?;
        dir.write_pe_run(&run, &stamp)?;
        let reports = vec![certify_pe_energy(&run, &bank, cfg.r, c)?];
        dir.write_certificates(&reports, &stamp)?;
        legs.push(json!({
            "eps": eps,
            "dir": dir.path(),
            "status": run.status,
            "t": run.last().t,
            "tau": run.band.accumulated(),
            "certificates": reports,
        }));
    }
    Ok(json!({
        "command": "run-pe",
        "c": c,
        "lambda": lambda,
        "lemma_ratios": ratios,
        "smallness": small,
        "runs": legs,
    }))
}

pub fn sweep(cfg: &RunConfig) -> Result<Value> {
    let (c, lambda, ratios) = constants(cfg)?;
    let bank = DyadicFilterBank::new(cfg.grid)?;
    let (u0, t0) = initial::build(cfg, lambda, &bank)?;
    let result = convergence_sweep(&u0, &t0, cfg, lambda, c)?;
    let stamp = Stamp::of(cfg);
    let manifest = RunManifest {
        stamp: stamp.clone(),
        kind: RunKind::Sweep,
        config: cfg.clone(),
        lambda,
        c,
        eps: None,
        exhausted_at: None,
    };
    let dir = RunDir::create(&cfg.output_root(), &manifest)?;
    let csv = dir.write_sweep(&result, &stamp)?;
    Ok(json!({
        "command": "sweep",
        "csv": csv,
        "c": c,
        "lambda": lambda,
        "lemma_ratios": ratios,
        "result": result,
    }))
}

fn default_root(root: Option<&Path>) -> PathBuf {
    if let Some(r) = root {
        return r.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(r) if !r.is_empty() => PathBuf::from(r),
        _ => PathBuf::from("runs"),
    }
}

pub fn verify(runs: &[PathBuf], root: Option<&Path>) -> Result<Value> {
    let dirs = if runs.is_empty() {
        list_runs(&default_root(root))?
    } else {
        runs.to_vec()
    };
    let mut out = Vec::new();
    for path in &dirs {
        let (dir, manifest) = RunDir::open(path)?;
        let cfg = &manifest.config;
        let bank = DyadicFilterBank::new(cfg.grid)?;
        let (reports, skipped) = match manifest.kind {
            RunKind::Limit => limit_certificates(&dir.read_limit_run(&manifest)?, cfg, manifest.c, &bank)?,
            RunKind::Pe => {
                let run: PeRun = dir.read_pe_run(&manifest)?;
                (vec![certify_pe_energy(&run, &bank, cfg.r, manifest.c)?], Vec::new())
            }
            RunKind::Sweep => continue,
        };
        dir.write_certificates(&reports, &manifest.stamp)?;
        out.push(json!({ "dir": path, "certificates": reports, "skipped": skipped }));
    }
    if out.is_empty() {
        return Ok(json!({ "command": "verify", "status": "nothing to verify" }));
    }
    Ok(json!({ "command": "verify", "status": "verified", "runs": out }))
}

pub fn norms(path: &Path, s: f64, radius: f64) -> Result<Value> {
    let (header, field) = read_snapshot(path)?;
    let bank = DyadicFilterBank::new(*field.grid())?;
    let norms = block_l2_norms(&apply_weight(&field, radius)?, &bank)?;
    let blocks: Vec<Value> = norms
        .blocks
        .iter()
        .enumerate()
        .map(|(n, b)| json!({ "q": norms.q_min + n as i32, "l2": b }))
        .collect();
    Ok(json!({
        "command": "norms",
        "name": header.name,
        "t": header.t,
        "parity": header.parity,
        "s": s,
        "radius": radius,
        "besov": norms.besov(s),
        "besov_with_mean": norms.besov_with_mean(s),
        "mean_block": norms.low,
        "blocks": blocks,
    }))
}
