//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails. Tolerances are fixed here and never tuned.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hydrostrip::band::apply_weight;
use hydrostrip::config::{InitialData, MeanFlow, RunConfig, SchemeOrder};
use hydrostrip::field::{Parity, PhysicalField, SpectralField};
use hydrostrip::grid::StripGrid;
use hydrostrip::initial;
use hydrostrip::limit::{run_limit_from, LimitParams, RunStatus};
use hydrostrip::lp::{besov_norm, bony_split, partition_sum, phi, psi, DyadicFilterBank};
use hydrostrip::pe::{run_pe_from, PeParams};
use hydrostrip::verify::{convergence_sweep, family_ratios, fitted_constant, smallness_check, LemmaKind, SampleFamily};

const PARTITION_TOL: f64 = 1e-10;
const PARTITION_SAMPLES: usize = 10_000;
const PARTITION_BUDGET: Duration = Duration::from_secs(1);

const BESOV_TOL: f64 = 1e-8;
const BESOV_FIELDS: usize = 20;
const BESOV_BUDGET: Duration = Duration::from_secs(10);

const BONY_TOL: f64 = 1e-8;
const BONY_PAIRS: usize = 20;

const HEAT_TOL: f64 = 1e-6;
const HEAT_PE_TOL: f64 = 1e-8;
const HEAT_DT: f64 = 1e-4;
const HEAT_T: f64 = 0.1;
const HEAT_NY: usize = 64;

const DIVERGENCE_TOL: f64 = 1e-8;
const DIVERGENCE_STEPS: usize = 10_000;

const COLUMN_MEAN_TOL: f64 = 1e-8;

const BAND_HORIZON: f64 = 5.0;

const LEMMA_SAMPLES: usize = 50;
const LEMMA_DRIFT: f64 = 10.0;
const LEMMA_ROUTE_TOL: f64 = 1e-6;
const LEMMA_BUDGET: Duration = Duration::from_secs(300);

const SWEEP_EPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
const SWEEP_N: usize = 128;
const SWEEP_SLOPE: (f64, f64) = (0.7, 1.3);
const SWEEP_BUDGET: Duration = Duration::from_secs(1800);

const MMS_DT: [f64; 4] = [8e-3, 4e-3, 2e-3, 1e-3];
const MMS_FIRST: (f64, f64) = (0.9, 1.1);
const MMS_SECOND: (f64, f64) = (1.8, 2.2);

const R: f64 = PI * PI / 2.0;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&x)
}

/// Least-squares slope of `ln y` against `ln x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn partition_of_unity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (q_min, q_max) = (-10, 9);
    let mut worst = 0.0f64;
    for _ in 0..PARTITION_SAMPLES {
        let xi = 2f64.powf(rng.gen_range(-8.0..=8.0));
        let mut by_hand = psi(xi * 2f64.powi(-q_min));
        for q in q_min..=q_max {
            by_hand += phi(xi * 2f64.powi(-q));
        }
        worst = worst.max((by_hand - 1.0).abs()).max((partition_sum(xi, q_min, q_max) - 1.0).abs());
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst < PARTITION_TOL && elapsed < PARTITION_BUDGET,
        format!("max deviation {worst:.2e} (tol {PARTITION_TOL:.0e}), {elapsed:.2?}"),
    )
}

/// Real coefficients of `Σ (a cos kx + b sin kx) sin mπy`.
struct TrigField {
    terms: Vec<(usize, usize, f64, f64)>,
}

impl TrigField {
    fn random(rng: &mut ChaCha8Rng, band: usize, modes: usize) -> Self {
        let mut terms = Vec::new();
        for k in 0..=band {
            for m in 1..=modes {
                let decay = (-0.3 * k as f64).exp();
                let b = if k == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) * decay };
                terms.push((k, m, rng.gen_range(-1.0..1.0) * decay, b));
            }
        }
        Self { terms }
    }

    fn value(&self, x: f64, y: f64, mult: impl Fn(usize) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|&(k, m, a, b)| {
                let kx = k as f64 * x;
                mult(k) * (a * kx.cos() + b * kx.sin()) * (m as f64 * PI * y).sin()
            })
            .sum()
    }
}

/// `Σ_q 2^{qs} ‖Δ_q f‖_{L²}` by pointwise evaluation of each block on a fine
/// tensor trapezoid rule, exact for the trigonometric degrees involved.
fn besov_by_quadrature(f: &TrigField, s: f64, q_range: (i32, i32), lx: f64) -> f64 {
    let (nqx, nqy) = (96, 96);
    let mut total = 0.0;
    for q in q_range.0..=q_range.1 {
        let cut = |k: usize| phi(2f64.powi(-q) * (2.0 * PI * k as f64 / lx).abs()) * if k == 0 { 0.0 } else { 1.0 };
        let mut acc = 0.0;
        for i in 0..nqx {
            let x = lx * i as f64 / nqx as f64;
            for j in 0..=nqy {
                let y = j as f64 / nqy as f64;
                let w = if j == 0 || j == nqy { 0.5 } else { 1.0 };
                let v = f.value(x, y, cut);
                acc += w * v * v;
            }
        }
        let norm = (acc * lx / nqx as f64 / nqy as f64).sqrt();
        total += 2f64.powf(q as f64 * s) * norm;
    }
    total
}

fn besov_oracle() -> Outcome {
    let start = Instant::now();
    let grid = StripGrid::new(32, 32, 2.0 * PI).unwrap();
    let bank = DyadicFilterBank::new(grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for n in 0..BESOV_FIELDS {
        let f = TrigField::random(&mut rng, 10, 8);
        let s = [0.5, 1.5, -0.5, 1.0][n % 4];
        let field = SpectralField::from_fn(grid, Parity::DirichletSine, |x, y| f.value(x, y, |_| 1.0));
        let fast = besov_norm(&field, s, &bank).unwrap();
        let slow = besov_by_quadrature(&f, s, (bank.q_min(), bank.q_max()), grid.lx());
        worst = worst.max((fast - slow).abs() / slow);
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst < BESOV_TOL && elapsed < BESOV_BUDGET,
        format!("{BESOV_FIELDS} fields, max relative error {worst:.2e} (tol {BESOV_TOL:.0e}), {elapsed:.2?}"),
    )
}

fn bony_reconstruction() -> Outcome {
    let grid = StripGrid::new(32, 32, 2.0 * PI).unwrap();
    let bank = DyadicFilterBank::new(grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for _ in 0..BONY_PAIRS {
        let fa = TrigField::random(&mut rng, 10, 8);
        let fb = TrigField::random(&mut rng, 10, 8);
        let a = SpectralField::from_fn(grid, Parity::DirichletSine, |x, y| fa.value(x, y, |_| 1.0));
        let b = SpectralField::from_fn(grid, Parity::DirichletSine, |x, y| fb.value(x, y, |_| 1.0));
        let nodal = PhysicalField::from_fn(grid, |x, y| fa.value(x, y, |_| 1.0) * fb.value(x, y, |_| 1.0));
        let product = SpectralField::from_physical(&nodal, Parity::Collocation).dealiased();
        let sum = bony_split(&a, &b, &bank, true).unwrap().sum();
        worst = worst.max((&sum - &product).l2_norm() / product.l2_norm());
    }
    Outcome::new(
        worst < BONY_TOL,
        format!("{BONY_PAIRS} pairs, max relative error {worst:.2e} (tol {BONY_TOL:.0e})"),
    )
}

fn heat_reduction() -> Outcome {
    let grid = StripGrid::new(16, HEAT_NY, 2.0 * PI).unwrap();
    let (u0, t0) = initial::heat(grid, 1.0);
    let steps = (HEAT_T / HEAT_DT).round() as usize;
    let limit = run_limit_from(&u0, &t0, LimitParams::new(HEAT_DT), steps, 100, 0.5, 32.0).unwrap();
    let exact = |t: f64| SpectralField::from_fn(grid, Parity::DirichletSine, move |_, y| (-PI * PI * t).exp() * (PI * y).sin());
    let limit_err = limit
        .samples
        .iter()
        .map(|s| (&s.u - &exact(s.t)).l2_norm())
        .fold(0.0, f64::max);
    let mut pe_err = 0.0f64;
    let mut pe_gap = 0.0f64;
    for eps in [1.0, 0.1] {
        let pe = run_pe_from(&u0, &t0, PeParams::new(eps, HEAT_DT), steps, 100, 0.5, 32.0).unwrap();
        assert_eq!(pe.samples.len(), limit.samples.len());
        for (p, l) in pe.samples.iter().zip(&limit.samples) {
            pe_err = pe_err.max((&p.u - &exact(p.t)).l2_norm());
            pe_gap = pe_gap.max((&p.u - &l.u).l2_norm()).max(p.temp.l2_norm());
        }
    }
    let t_end = limit.last().t;
    Outcome::new(
        limit_err < HEAT_TOL && pe_err < HEAT_TOL && pe_gap < HEAT_PE_TOL && (t_end - HEAT_T).abs() < 1e-12,
        format!(
            "limit error {limit_err:.2e}, PE error {pe_err:.2e} (tol {HEAT_TOL:.0e}); PE vs limit {pe_gap:.2e} (tol {HEAT_PE_TOL:.0e})"
        ),
    )
}

fn band_data(grid: StripGrid, seed: u64) -> (SpectralField, SpectralField) {
    let bank = DyadicFilterBank::new(grid).unwrap();
    initial::analytic_band(grid, 0.5, initial::budget_amplitude(0.5, 32.0), 8, 8, seed, &bank).unwrap()
}

fn divergence_invariant() -> Outcome {
    let grid = StripGrid::new(32, 32, 2.0 * PI).unwrap();
    let (u0, t0) = band_data(grid, 3);
    let run = run_pe_from(&u0, &t0, PeParams::new(0.5, 1e-3), DIVERGENCE_STEPS, 1000, 0.5, 32.0).unwrap();
    let worst = run.diagnostics.iter().map(|d| d.divergence.max(d.wall_flux)).fold(0.0, f64::max);
    let steps = run.diagnostics.len() - 1;
    Outcome::new(
        worst < DIVERGENCE_TOL && steps == DIVERGENCE_STEPS,
        format!("{steps} steps, max divergence {worst:.2e} (tol {DIVERGENCE_TOL:.0e})"),
    )
}

/// Default gauge: the `x`-dependent part of `∫_0^1 u dy` must vanish. Fixed-flux
/// gauge: the whole column integral must.
fn column_mean_invariant() -> Outcome {
    let grid = StripGrid::new(32, 32, 2.0 * PI).unwrap();
    let (u0, t0) = band_data(grid, 4);
    let worst = |mean_flow: MeanFlow| {
        let mut p = LimitParams::new(1e-3);
        p.mean_flow = mean_flow;
        let run = run_limit_from(&u0, &t0, p, 2000, 100, 0.5, 32.0).unwrap();
        run.diagnostics
            .iter()
            .map(|d| match mean_flow {
                MeanFlow::ZeroMeanGradient => d.column_mean_fluctuation / d.u_l2,
                MeanFlow::FixedFlux => d.column_mean / d.u_l2,
            })
            .fold(0.0, f64::max)
    };
    let fluctuation = worst(MeanFlow::ZeroMeanGradient);
    let full = worst(MeanFlow::FixedFlux);
    Outcome::new(
        fluctuation < COLUMN_MEAN_TOL && full < COLUMN_MEAN_TOL,
        format!(
            "x-dependent part {fluctuation:.2e} (default gauge), full column mean {full:.2e} (fixed flux), relative to |u| (tol {COLUMN_MEAN_TOL:.0e})"
        ),
    )
}

/// Rate constants from the reference sample family, as the CLI fits them.
fn fitted() -> (f64, f64) {
    let fit = fitted_constant(&SampleFamily::reference(2.0 * PI).unwrap(), 8, R).unwrap();
    (fit.c, fit.lambda)
}

fn band_boundedness(c: f64, lambda: f64) -> Outcome {
    let grid = StripGrid::new(32, 32, 2.0 * PI).unwrap();
    let bank = DyadicFilterBank::new(grid).unwrap();
    let cfg = RunConfig::new(
        grid,
        BAND_HORIZON,
        InitialData::AnalyticBand { amplitude: None, band: 8, modes: 8, seed: 1 },
    );
    let (u0, t0) = initial::build(&cfg, lambda, &bank).unwrap();
    let small = smallness_check(&u0, &t0, cfg.a, cfg.c0, c, lambda, &bank).unwrap();
    let run = run_limit_from(&u0, &t0, LimitParams::from_config(&cfg), cfg.num_steps(), 50, cfg.a, lambda).unwrap();
    let theta = run.band.accumulated();
    let cap = cfg.a / lambda;
    let weighted = |s: &hydrostrip::limit::LimitSnapshot| {
        let u = besov_norm(&apply_weight(&s.u, s.radius).unwrap(), 0.5, &bank).unwrap();
        let t = besov_norm(&apply_weight(&s.temp, s.radius).unwrap(), 0.5, &bank).unwrap();
        (R * s.t).exp() * (u + t)
    };
    let initial = weighted(run.initial());
    let peak = run.samples.iter().map(weighted).fold(0.0, f64::max);
    let completed = run.status == RunStatus::Completed && (run.last().t - BAND_HORIZON).abs() < 1e-9;
    Outcome::new(
        small.pass && completed && theta < cap && peak <= 2.0 * c * initial,
        format!(
            "theta(5) {theta:.3e} < a/lambda {cap:.3e}; peak weighted norm {peak:.3e} vs 2C*initial {:.3e} (C {c})",
            2.0 * c * initial
        ),
    )
}

fn lemma_stability() -> Outcome {
    let start = Instant::now();
    let base = SampleFamily::reference(2.0 * PI).unwrap();
    let fine = base.refined();
    let mut drift = 1.0f64;
    let mut gap = 0.0f64;
    let mut parts = Vec::new();
    for kind in LemmaKind::ALL {
        let a = family_ratios(kind, &base, LEMMA_SAMPLES, 0.5, R).unwrap();
        let b = family_ratios(kind, &fine, LEMMA_SAMPLES, 0.5, R).unwrap();
        let d = (a.max_ratio / b.max_ratio).max(b.max_ratio / a.max_ratio);
        drift = drift.max(d);
        gap = gap.max(a.max_route_gap).max(b.max_route_gap);
        parts.push(format!("{} {:.3e}->{:.3e}", kind.name(), a.max_ratio, b.max_ratio));
    }
    let elapsed = start.elapsed();
    Outcome::new(
        drift < LEMMA_DRIFT && gap < LEMMA_ROUTE_TOL && elapsed < LEMMA_BUDGET,
        format!(
            "{}; drift x{drift:.4} (tol x{LEMMA_DRIFT}), route gap {gap:.1e} (tol {LEMMA_ROUTE_TOL:.0e}), {elapsed:.1?}",
            parts.join(", ")
        ),
    )
}

fn convergence_rate(c: f64, lambda: f64) -> Outcome {
    let start = Instant::now();
    let grid = StripGrid::new(SWEEP_N, SWEEP_N, 2.0 * PI).unwrap();
    let bank = DyadicFilterBank::new(grid).unwrap();
    let mut cfg = RunConfig::new(grid, 1.0, InitialData::AnalyticBand { amplitude: None, band: 8, modes: 8, seed: 1 });
    cfg.eps = SWEEP_EPS.to_vec();
    let (u0, t0) = initial::build(&cfg, lambda, &bank).unwrap();
    let result = convergence_sweep(&u0, &t0, &cfg, lambda, c).unwrap();
    let elapsed = start.elapsed();
    let fitted = result.slope.unwrap_or(f64::NAN);
    let errors: Vec<String> = result.legs.iter().map(|l| format!("{:.3e}", l.error_total)).collect();
    Outcome::new(
        within(fitted, SWEEP_SLOPE) && elapsed < SWEEP_BUDGET,
        format!(
            "slope {fitted:.4} (window [{}, {}]), errors [{}], {elapsed:.1?}",
            SWEEP_SLOPE.0,
            SWEEP_SLOPE.1,
            errors.join(", ")
        ),
    )
}

fn temporal_order(order: SchemeOrder, window: (f64, f64)) -> Outcome {
    let horizon = 0.4;
    let errors: Vec<f64> = MMS_DT
        .iter()
        .map(|&dt| {
            let u = common::solve_mms(order, dt, horizon);
            (&u - &common::mms_exact(*u.grid(), horizon)).l2_norm()
        })
        .collect();
    let p = slope(&MMS_DT, &errors);
    Outcome::new(
        within(p, window),
        format!("observed order {p:.4} (window [{}, {}])", window.0, window.1),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, o: Outcome| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("{tag} {name}: {}", o.detail);
    };
    report("partition of unity", partition_of_unity());
    report("besov transform vs quadrature", besov_oracle());
    report("bony reconstruction", bony_reconstruction());
    report("heat reduction", heat_reduction());
    report("divergence invariant", divergence_invariant());
    report("column-mean invariant", column_mean_invariant());
    let (c, lambda) = fitted();
    report("band boundedness", band_boundedness(c, lambda));
    report("lemma ratio stability", lemma_stability());
    report("temporal order (first)", temporal_order(SchemeOrder::First, MMS_FIRST));
    report("temporal order (second)", temporal_order(SchemeOrder::Second, MMS_SECOND));
    report("convergence rate", convergence_rate(c, lambda));
    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
