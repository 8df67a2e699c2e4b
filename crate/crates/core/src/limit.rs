//! Hydrostatic limit system on the strip:
//! `∂_t u + u∂_x u + v∂_y u − ∂_y²u + ∂_x p = 0`, `∂_y p = T`,
//! `∂_x u + ∂_y v = 0`, `∂_t T + u∂_x T + v∂_y T − ΔT = 0`,
//! with `u = v = T = 0` on both walls.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::band::{apply_weight, BandKind, BandState};
use crate::config::{MeanFlow, RunConfig, SchemeOrder};
use crate::error::{Error, Result};
use crate::field::{product, Parity, PhysicalField, SpectralField};
use crate::galerkin::{slaved_v, Engine, EngineParams, Forces};
use crate::grid::StripGrid;
use crate::lp::{block_l2_norms, DyadicFilterBank, NormSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitParams {
    pub dt: f64,
    pub dealias: bool,
    /// Exponential time-weight rate used by certificates, in `(0, π²)`.
    pub r: f64,
    pub order: SchemeOrder,
    pub mean_flow: MeanFlow,
}

impl LimitParams {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            dealias: true,
            r: PI * PI / 2.0,
            order: SchemeOrder::First,
            mean_flow: MeanFlow::ZeroMeanGradient,
        }
    }

    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            dt: cfg.dt,
            dealias: cfg.dealias,
            r: cfg.r,
            order: cfg.order,
            mean_flow: cfg.mean_flow,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.r > 0.0 && self.r < PI * PI) {
            return Err(Error::InvalidInput(format!("R = {} not in (0, π²)", self.r)));
        }
        Ok(())
    }
}

/// Prognostic limit state; `v` and `∂_x p` are derived on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitState {
    pub t: f64,
    pub u: SpectralField,
    pub temp: SpectralField,
}

/// Cheap per-step invariants.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FlowDiagnostics {
    pub t: f64,
    /// `‖∂_x u + ∂_y v‖_{L²}`.
    pub divergence: f64,
    /// `‖v(·, 1)‖_{L²(x)}`.
    pub wall_flux: f64,
    /// `sup_x |∫_0^1 u dy|`.
    pub column_mean: f64,
    /// `sup_x |∫_0^1 u dy − ⟨∫_0^1 u dy⟩_x|`.
    pub column_mean_fluctuation: f64,
    pub u_l2: f64,
}

impl FlowDiagnostics {
    pub fn of(t: f64, u: &SpectralField) -> Result<Self> {
        let v = v_from_u(u)?;
        let div = &u.dx() + &v.dy();
        let (column_mean, column_mean_fluctuation) = u.column_mean_sup();
        Ok(Self {
            t,
            divergence: div.l2_norm(),
            wall_flux: wall_flux(u)?,
            column_mean,
            column_mean_fluctuation,
            u_l2: u.l2_norm(),
        })
    }
}

impl LimitState {
    pub fn new(u: SpectralField, temp: SpectralField) -> Result<Self> {
        u.expect_parity(Parity::DirichletSine)?;
        temp.expect_parity(Parity::DirichletSine)?;
        if u.grid() != temp.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { t: 0.0, u, temp })
    }

    pub fn zeros(grid: StripGrid) -> Self {
        Self {
            t: 0.0,
            u: SpectralField::zeros(grid, Parity::DirichletSine),
            temp: SpectralField::zeros(grid, Parity::DirichletSine),
        }
    }

    pub fn grid(&self) -> &StripGrid {
        self.u.grid()
    }

    pub fn v(&self) -> Result<SpectralField> {
        v_from_u(&self.u)
    }

    pub fn pressure_gradient(&self) -> Result<SpectralField> {
        pressure_gradient_limit(&self.u, &self.temp)
    }

    pub fn diagnostics(&self) -> Result<FlowDiagnostics> {
        FlowDiagnostics::of(self.t, &self.u)
    }
}

/// `v = −∫_0^y ∂_x u`, exact in cosine form.
pub fn v_from_u(u: &SpectralField) -> Result<SpectralField> {
    u.expect_parity(Parity::DirichletSine)?;
    slaved_v(u)
}

/// `‖v(·,1)‖_{L²(x)}`; nonzero values flag violated compatibility `∂_x∫_0^1 u dy = 0`.
pub fn wall_flux(u: &SpectralField) -> Result<f64> {
    let v = v_from_u(u)?;
    let grid = *u.grid();
    let mut acc = 0.0;
    for i in 0..grid.nx() {
        let top: Complex64 = v
            .column(i)
            .iter()
            .enumerate()
            .map(|(m, c)| if m % 2 == 0 { *c } else { -*c })
            .sum();
        acc += top.norm_sqr();
    }
    Ok((grid.lx() * acc).sqrt())
}

/// Relative wall flux above which initial data count as incompatible.
const COMPATIBILITY_TOL: f64 = 1e-10;

/// Rejects `u` unless `‖v(·,1)‖ <= 1e-10 ‖∂_x u‖`. The solvers keep every
/// step on `∫_0^1 u dy = 0` for `k ≠ 0`, so incompatible data would be altered.
pub fn check_compatible(u: &SpectralField) -> Result<()> {
    let flux = wall_flux(u)?;
    let scale = u.dx().l2_norm();
    if flux > COMPATIBILITY_TOL * scale {
        return Err(Error::InvalidInput(format!(
            "initial u violates the compatibility condition: wall flux {flux:.3e} vs |u_x| {scale:.3e}"
        )));
    }
    Ok(())
}

/// `∂_x p` of the limit system as a cosine field.
///
/// Per mode `k ≠ 0`: `ik[∫_0^y T̂ − ∫_0^1∫_0^y T̂] + ∂_y û(1) − ∂_y û(0) − ik∫_0^1 (u²)^ dy`.
/// The `k = 0` mode is zero (periodic gauge absorbing `ċ`).
pub fn pressure_gradient_limit(u: &SpectralField, temp: &SpectralField) -> Result<SpectralField> {
    u.expect_parity(Parity::DirichletSine)?;
    temp.expect_parity(Parity::DirichletSine)?;
    if u.grid() != temp.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *u.grid();
    let ny = grid.ny();
    let u2 = product(u, u, false)?;
    let mut out = SpectralField::zeros(grid, Parity::NeumannCosine);
    for i in 0..grid.nx() {
        let kappa = grid.xi(i);
        if kappa == 0.0 || grid.is_nyquist(i) {
            continue;
        }
        let ik = Complex64::new(0.0, kappa);
        let tau = temp.column(i).to_vec();
        let a = u.column(i).to_vec();
        let wall_shear: Complex64 = a
            .iter()
            .enumerate()
            .map(|(mi, am)| {
                let m = (mi + 1) as f64;
                let sign = if (mi + 1) % 2 == 0 { 1.0 } else { -1.0 };
                am * (m * PI * (sign - 1.0))
            })
            .sum();
        let flux = u2.column_mean(i);
        let c = out.column_mut(i);
        for l in 1..ny {
            c[l] = -ik * tau[l - 1] / (l as f64 * PI);
        }
        c[0] = wall_shear - ik * flux;
    }
    Ok(out)
}

/// Continuous tendencies split into explicit and diffusive parts.
#[derive(Debug, Clone)]
pub struct LimitTendencies {
    /// `−(u∂_x u + v∂_y u) − ∂_x p`, collocation.
    pub du_explicit: SpectralField,
    /// `∂_y² u`, sine.
    pub du_diffusion: SpectralField,
    /// `−(u∂_x T + v∂_y T)`, collocation.
    pub dtemp_explicit: SpectralField,
    /// `ΔT`, sine.
    pub dtemp_diffusion: SpectralField,
}

impl LimitTendencies {
    pub fn du(&self) -> SpectralField {
        &self.du_explicit + &self.du_diffusion.to_parity(Parity::Collocation)
    }

    pub fn dtemp(&self) -> SpectralField {
        &self.dtemp_explicit + &self.dtemp_diffusion.to_parity(Parity::Collocation)
    }
}

fn sine_laplacian(f: &SpectralField, horizontal: bool) -> SpectralField {
    let grid = *f.grid();
    let mut out = f.clone();
    for i in 0..grid.nx() {
        let k2 = if horizontal { grid.xi(i).powi(2) } else { 0.0 };
        for (m, c) in out.column_mut(i).iter_mut().enumerate() {
            *c *= -(((m + 1) as f64 * PI).powi(2) + k2);
        }
    }
    out
}

/// Pseudospectral tendencies of the limit system at `state`.
pub fn rhs_limit(state: &LimitState, params: &LimitParams) -> Result<LimitTendencies> {
    let u = &state.u;
    let temp = &state.temp;
    let v = v_from_u(u)?;
    let adv_u = &product(u, &u.dx(), params.dealias)? + &product(&v, &u.dy(), params.dealias)?;
    let adv_t = &product(u, &temp.dx(), params.dealias)? + &product(&v, &temp.dy(), params.dealias)?;
    let px = pressure_gradient_limit(u, temp)?.to_parity(Parity::Collocation);
    let du_explicit = -&(&adv_u + &px);
    let dtemp_explicit = -&adv_t;
    if !du_explicit.is_finite() || !dtemp_explicit.is_finite() {
        return Err(Error::NonFinite {
            what: "limit tendency",
            step: 0,
        });
    }
    Ok(LimitTendencies {
        du_explicit,
        du_diffusion: sine_laplacian(u, false),
        dtemp_explicit,
        dtemp_diffusion: sine_laplacian(temp, true),
    })
}

/// External momentum and heat sources `(F_u, F_T)` at time `t`.
pub type SourceFn = Box<dyn Fn(f64) -> (PhysicalField, PhysicalField)>;

/// Time stepper for the limit system.
pub struct LimitSolver {
    engine: Engine,
    params: LimitParams,
    sources: Option<SourceFn>,
    steps: usize,
}

impl LimitSolver {
    pub fn new(grid: StripGrid, params: LimitParams) -> Result<Self> {
        params.validate()?;
        let engine = Engine::new(
            grid,
            EngineParams {
                eps: 0.0,
                dt: params.dt,
                order: params.order,
                dealias: params.dealias,
                mean_flow: params.mean_flow,
                hydrostatic_split: true,
            },
        )?;
        Ok(Self {
            engine,
            params,
            sources: None,
            steps: 0,
        })
    }

    pub fn with_sources(mut self, sources: SourceFn) -> Self {
        self.sources = Some(sources);
        self
    }

    pub fn params(&self) -> &LimitParams {
        &self.params
    }

    /// Projects initial data onto the resolved modes.
    pub fn prepare(&self, state: &LimitState) -> LimitState {
        LimitState {
            t: state.t,
            u: self.engine.truncate(&state.u),
            temp: self.engine.truncate(&state.temp),
        }
    }

    fn forces(&self, state: &LimitState) -> Result<Forces> {
        let src = self.sources.as_ref().map(|f| f(state.t));
        let extra = src.as_ref().map(|(a, b)| (a, b));
        self.engine.forces(&state.u, &state.temp, extra, self.steps)
    }

    /// Semi-discrete `(∂_t u, ∂_t T)` at `state`.
    pub fn tendency(&self, state: &LimitState) -> Result<(SpectralField, SpectralField)> {
        let f = self.forces(state)?;
        Ok(self.engine.tendency(&state.u, &state.temp, &f))
    }

    /// One step; also returns `∂_t u` at the input state.
    pub fn step_with_tendency(&mut self, state: &LimitState) -> Result<(LimitState, SpectralField)> {
        let f = self.forces(state)?;
        let grid = state.grid();
        let courant = f.u_max * self.params.dt * grid.nx() as f64 / grid.lx();
        if courant > 0.5 {
            return Err(Error::Cfl { t: state.t, courant });
        }
        let (du, _) = self.engine.tendency(&state.u, &state.temp, &f);
        let (u, temp) = self.engine.advance(&state.u, &state.temp, f);
        self.steps += 1;
        if !u.is_finite() || !temp.is_finite() {
            return Err(Error::NonFinite {
                what: "limit state",
                step: self.steps,
            });
        }
        Ok((
            LimitState {
                t: state.t + self.params.dt,
                u,
                temp,
            },
            du,
        ))
    }

    pub fn step(&mut self, state: &LimitState) -> Result<LimitState> {
        Ok(self.step_with_tendency(state)?.0)
    }
}

/// Single first-order step from scratch. Prefer [`LimitSolver`] for runs.
pub fn step_limit(state: &LimitState, params: &LimitParams) -> Result<LimitState> {
    let mut p = *params;
    p.order = SchemeOrder::First;
    let mut solver = LimitSolver::new(*state.grid(), p)?;
    let prepared = solver.prepare(state);
    solver.step(&prepared)
}

/// Recorded sample of a limit run.
#[derive(Debug, Clone)]
pub struct LimitSnapshot {
    pub t: f64,
    /// `a − λθ(t)`.
    pub radius: f64,
    pub u: SpectralField,
    pub temp: SpectralField,
    /// Semi-discrete `∂_t u` at this instant.
    pub du_dt: SpectralField,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    BandExhausted { t: f64 },
}

/// Trajectory, radius history and norm series of a limit run.
#[derive(Debug, Clone)]
pub struct LimitRun {
    pub grid: StripGrid,
    pub params: LimitParams,
    pub a: f64,
    pub lambda: f64,
    pub samples: Vec<LimitSnapshot>,
    pub band: BandState,
    pub status: RunStatus,
    pub diagnostics: Vec<FlowDiagnostics>,
    /// Named per-block series of the weighted fields.
    pub series: Vec<(String, NormSeries)>,
}

impl LimitRun {
    pub fn initial(&self) -> &LimitSnapshot {
        &self.samples[0]
    }

    pub fn last(&self) -> &LimitSnapshot {
        self.samples.last().expect("runs hold at least the initial sample")
    }
}

/// Per-block series of `u_φ`, `T_φ`, `∂_y u_φ` at `s = ½` and `s = 3/2`, named `"{field}@B{s}"`.
pub fn limit_series(samples: &[LimitSnapshot], bank: &DyadicFilterBank) -> Result<Vec<(String, NormSeries)>> {
    let names = ["u_phi", "temp_phi", "dy_u_phi"];
    let mut series: Vec<(String, NormSeries)> = names
        .iter()
        .flat_map(|n| [0.5, 1.5].map(|s| (format!("{n}@B{s}"), NormSeries::new(bank, s, false))))
        .collect();
    for snap in samples {
        let u_phi = apply_weight(&snap.u, snap.radius)?;
        let t_phi = apply_weight(&snap.temp, snap.radius)?;
        let rows = [
            block_l2_norms(&u_phi, bank)?,
            block_l2_norms(&t_phi, bank)?,
            block_l2_norms(&u_phi.dy(), bank)?,
        ];
        for (n, row) in rows.iter().enumerate() {
            for j in 0..2 {
                series[2 * n + j].1.push(snap.t, row.clone())?;
            }
        }
    }
    Ok(series)
}

/// Integrates the limit system from `(u0, T0)` for `steps` steps of `params.dt`.
pub fn run_limit_from(
    u0: &SpectralField,
    temp0: &SpectralField,
    params: LimitParams,
    steps: usize,
    sample_every: usize,
    a: f64,
    lambda: f64,
) -> Result<LimitRun> {
    check_compatible(u0)?;
    let grid = *u0.grid();
    let bank = DyadicFilterBank::new(grid)?;
    let mut solver = LimitSolver::new(grid, params)?;
    let mut state = solver.prepare(&LimitState::new(u0.clone(), temp0.clone())?);
    let mut band = BandState::new(BandKind::ThetaLimit, a, lambda)?;
    let mut samples = Vec::new();
    let mut diagnostics = Vec::with_capacity(steps + 1);
    let mut status = RunStatus::Completed;
    let every = sample_every.max(1);
    let snapshot = |state: &LimitState, radius: f64, du_dt: SpectralField| LimitSnapshot {
        t: state.t,
        radius,
        u: state.u.clone(),
        temp: state.temp.clone(),
        du_dt,
    };

    for n in 0..steps {
        diagnostics.push(state.diagnostics()?);
        let radius = band.radius();
        let u_phi = apply_weight(&state.u, radius)?;
        let (next, du) = solver.step_with_tendency(&state)?;
        if n % every == 0 {
            samples.push(snapshot(&state, radius, du));
        }
        band = band.advance_theta(&u_phi, params.dt, &bank)?;
        state = next;
        if let crate::band::BandStatus::Exhausted { t } = band.status() {
            status = RunStatus::BandExhausted { t };
            break;
        }
    }
    diagnostics.push(state.diagnostics()?);
    if status == RunStatus::Completed {
        let (du, _) = solver.tendency(&state)?;
        samples.push(snapshot(&state, band.radius(), du));
    }
    let series = limit_series(&samples, &bank)?;
    Ok(LimitRun {
        grid,
        params,
        a,
        lambda,
        samples,
        band,
        status,
        diagnostics,
        series,
    })
}

/// Runs the limit system described by `config` with rate constant `lambda`.
pub fn run_limit(config: &RunConfig, lambda: f64) -> Result<LimitRun> {
    let bank = DyadicFilterBank::new(config.grid)?;
    let (u0, t0) = crate::initial::build(config, lambda, &bank)?;
    run_limit_from(
        &u0,
        &t0,
        LimitParams::from_config(config),
        config.num_steps(),
        config.sample_every,
        config.a,
        lambda,
    )
}
