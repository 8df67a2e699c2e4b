use std::io::Write;

use serde::Serialize;

use crate::band::{apply_weight, eta_integrand, BandKind, BandState, BandStatus};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::limit::{v_from_u, LimitParams, LimitSolver, LimitState};
use crate::lp::{block_norms_from_energies, chemin_lerner_norm, DyadicFilterBank, NormSeries, TimeExponent};
use crate::pe::{PeParams, PeSolver, PeState};

/// Unweighted per-mode energies of the error at one instant; weights are applied afterwards.
#[derive(Debug, Clone)]
struct ErrorSample {
    t: f64,
    eta: f64,
    /// Mode energies of `(w¹, εw²)`.
    state: Vec<f64>,
    /// Mode energies of `∂_y(w¹, εw²)`.
    dy: Vec<f64>,
}

/// Recorded history of one `ε` leg.
#[derive(Debug, Clone)]
pub struct LegRecord {
    pub eps: f64,
    samples: Vec<ErrorSample>,
    /// Time at which the limit or PE band closed, if it did.
    pub exhausted: Option<f64>,
}

impl LegRecord {
    pub fn eta_final(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.eta)
    }
}

/// The three error norms at one `ε` for a given `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepLeg {
    pub eps: f64,
    pub error_total: f64,
    /// `‖(w¹_φ, εw²_φ)‖_{L̃^∞(B^{1/2})}`.
    pub error_sup: f64,
    /// `‖∂_y(w¹_φ, εw²_φ)‖_{L̃²(B^{1/2})}`.
    pub error_dy: f64,
    /// `ε‖(w¹_φ, εw²_φ)‖_{L̃²(B^{3/2})}`.
    pub error_eps32: f64,
    /// `‖(w¹, εw²)(0)‖_{B^{1/2}}`.
    pub initial_error: f64,
    /// Time at which a weight radius reached zero; norms stop there.
    pub exhausted: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub eps: Vec<f64>,
    pub legs: Vec<SweepLeg>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub mu: f64,
    /// Fit of the first pass (`μ = λ`) when `μ` was chosen from the intercept.
    pub first_pass: Option<(f64, f64)>,
}

pub const SWEEP_CSV_HEADER: &str = "eps,error_total,error_sup,error_dy,error_eps32,slope,intercept";

impl SweepResult {
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{SWEEP_CSV_HEADER}")?;
        let fmt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.12e}"));
        for leg in &self.legs {
            writeln!(
                w,
                "{:.6e},{:.12e},{:.12e},{:.12e},{:.12e},{},{}",
                leg.eps,
                leg.error_total,
                leg.error_sup,
                leg.error_dy,
                leg.error_eps32,
                fmt(self.slope),
                fmt(self.intercept)
            )?;
        }
        Ok(())
    }
}

fn error_energies(pe: &PeState, limit: &LimitState) -> Result<(Vec<f64>, Vec<f64>)> {
    let eps = pe.eps;
    let w1 = pe.u.try_sub(&limit.u)?;
    let w2 = pe.v()?.try_sub(&v_from_u(&limit.u)?)?.scaled(eps);
    let add = |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).map(|(x, y)| x + y).collect::<Vec<_>>();
    Ok((
        add(w1.mode_energies(), w2.mode_energies()),
        add(w1.dy().mode_energies(), w2.dy().mode_energies()),
    ))
}

/// Advances the limit and PE systems from identical data in lockstep,
/// accumulating `η` and recording the unweighted error every `sample_every` steps.
pub fn run_leg(
    u0: &SpectralField,
    temp0: &SpectralField,
    config: &RunConfig,
    eps: f64,
    lambda: f64,
    bank: &DyadicFilterBank,
) -> Result<LegRecord> {
    let grid = *u0.grid();
    if grid != config.grid || temp0.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    let dt = config.dt;
    let mut ls = LimitSolver::new(grid, LimitParams::from_config(config))?;
    let mut ps = PeSolver::new(grid, PeParams::from_config(config, eps))?;
    let mut limit = ls.prepare(&LimitState::new(u0.clone(), temp0.clone())?);
    let mut pe = ps.prepare(&PeState::new(u0.clone(), temp0.clone(), eps)?);
    let mut theta = BandState::new(BandKind::ThetaLimit, config.a, lambda)?;
    let mut tau = BandState::new(BandKind::TauPe, config.a, lambda)?;
    let mut eta = 0.0;
    let every = config.sample_every.max(1);
    let steps = config.num_steps();
    let mut samples = Vec::new();
    let mut exhausted = None;

    let mut record = |pe: &PeState, limit: &LimitState, eta: f64| -> Result<()> {
        let (state, dy) = error_energies(pe, limit)?;
        samples.push(ErrorSample {
            t: pe.t,
            eta,
            state,
            dy,
        });
        Ok(())
    };

    for n in 0..steps {
        if n % every == 0 {
            record(&pe, &limit, eta)?;
        }
        let u_phi = apply_weight(&limit.u, theta.radius())?;
        let u_theta = apply_weight(&pe.u, tau.radius())?;
        let v_theta = apply_weight(&pe.v()?, tau.radius())?;
        eta += dt * eta_integrand(&u_theta, &u_phi, eps, bank)?;
        theta = theta.advance_theta(&u_phi, dt, bank)?;
        tau = tau.advance_tau(&u_theta, &v_theta, eps, dt, bank)?;
        limit = ls.step(&limit)?;
        pe = ps.step(&pe)?;
        for band in [&theta, &tau] {
            if let BandStatus::Exhausted { t } = band.status() {
                exhausted = Some(t);
            }
        }
        if exhausted.is_some() {
            break;
        }
    }
    if exhausted.is_none() {
        record(&pe, &limit, eta)?;
    }
    Ok(LegRecord {
        eps,
        samples,
        exhausted,
    })
}

/// Error norms of a recorded leg under the weight `(a − μη(t))|ξ|`.
pub fn leg_norms(record: &LegRecord, a: f64, mu: f64, bank: &DyadicFilterBank) -> Result<SweepLeg> {
    let grid = *bank.grid();
    let mut state = NormSeries::new(bank, 0.5, false);
    let mut dy = NormSeries::new(bank, 0.5, false);
    let mut exhausted = record.exhausted;
    for s in &record.samples {
        let radius = a - mu * s.eta;
        if radius <= 0.0 {
            exhausted.get_or_insert(s.t);
            break;
        }
        let weight: Vec<f64> = (0..grid.nx()).map(|i| (2.0 * radius * grid.xi(i).abs()).exp()).collect();
        let apply = |e: &[f64]| e.iter().zip(&weight).map(|(x, w)| x * w).collect::<Vec<_>>();
        state.push(s.t, block_norms_from_energies(&apply(&s.state), bank))?;
        dy.push(s.t, block_norms_from_energies(&apply(&s.dy), bank))?;
    }
    if state.len() < 2 {
        return Err(Error::Sampling(format!(
            "leg at eps = {} kept fewer than two samples",
            record.eps
        )));
    }
    let error_sup = chemin_lerner_norm(&state, TimeExponent::Inf)?;
    let error_dy = chemin_lerner_norm(&dy, TimeExponent::Two)?;
    let error_eps32 = record.eps * chemin_lerner_norm(&state.with_s(1.5), TimeExponent::Two)?;
    Ok(SweepLeg {
        eps: record.eps,
        error_total: error_sup + error_dy + error_eps32,
        error_sup,
        error_dy,
        error_eps32,
        initial_error: state.rows()[0].besov(0.5),
        exhausted,
    })
}

/// Least-squares `(slope, intercept)` of `ln y` against `ln x`; `None` with fewer than two positive points.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn fit_legs(legs: &[SweepLeg]) -> Option<(f64, f64)> {
    let usable: Vec<&SweepLeg> = legs.iter().filter(|l| l.exhausted.is_none()).collect();
    let x: Vec<f64> = usable.iter().map(|l| l.eps).collect();
    let y: Vec<f64> = usable.iter().map(|l| l.error_total).collect();
    loglog_fit(&x, &y)
}

/// Combines recorded legs: with `config.mu` unset, pass 1 uses `μ = λ`, pass 2
/// `μ = max(λ, C·M)` with `M = e^{intercept}` of pass 1.
pub fn sweep_from_records(
    records: &[LegRecord],
    config: &RunConfig,
    lambda: f64,
    c: f64,
    bank: &DyadicFilterBank,
) -> Result<SweepResult> {
    let legs_for = |mu: f64| {
        records
            .iter()
            .map(|r| leg_norms(r, config.a, mu, bank))
            .collect::<Result<Vec<_>>>()
    };
    let eps: Vec<f64> = records.iter().map(|r| r.eps).collect();
    if let Some(mu) = config.mu {
        let legs = legs_for(mu)?;
        let fit = fit_legs(&legs);
        return Ok(SweepResult {
            eps,
            legs,
            slope: fit.map(|f| f.0),
            intercept: fit.map(|f| f.1),
            mu,
            first_pass: None,
        });
    }
    let legs = legs_for(lambda)?;
    let Some(first) = fit_legs(&legs) else {
        return Ok(SweepResult {
            eps,
            legs,
            slope: None,
            intercept: None,
            mu: lambda,
            first_pass: None,
        });
    };
    let mu = lambda.max(c * first.1.exp());
    let legs = legs_for(mu)?;
    let fit = fit_legs(&legs);
    Ok(SweepResult {
        eps,
        legs,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        mu,
        first_pass: Some(first),
    })
}

fn check_eps(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::config("eps", "sweep needs at least one value"));
    }
    if eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(Error::config("eps", "values must lie in (0, 1]"));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("eps", "sweep values must be strictly decreasing"));
    }
    Ok(())
}

/// Runs every `ε` leg of `config` from the same data and fits the error rate.
pub fn convergence_sweep(
    u0: &SpectralField,
    temp0: &SpectralField,
    config: &RunConfig,
    lambda: f64,
    c: f64,
) -> Result<SweepResult> {
    check_eps(&config.eps)?;
    let bank = DyadicFilterBank::new(config.grid)?;
    let records = config
        .eps
        .iter()
        .map(|&e| run_leg(u0, temp0, config, e, lambda, &bank))
        .collect::<Result<Vec<_>>>()?;
    sweep_from_records(&records, config, lambda, c, &bank)
}
