//! Scaled primitive equations on the unit strip:
//! `∂_t u + u∂_x u + v∂_y u − ε²∂_x²u − ∂_y²u + ∂_x p = 0`,
//! `ε²(∂_t v + u∂_x v + v∂_y v − ε²∂_x²v − ∂_y²v) + ∂_y p = T`,
//! `∂_x u + ∂_y v = 0`, `∂_t T + u∂_x T + v∂_y T − ΔT = 0`,
//! with `u = v = T = 0` on both walls.
//!
//! The solver carries `u` and `T`; `v = −∫_0^y ∂_x u` is recovered exactly, so
//! the divergence vanishes to round-off and the projection is the
//! `ε`-weighted Galerkin projection onto `{v(1) = 0}`.


use rustfft::num_complex::Complex64;

use crate::band::{apply_weight, BandKind, BandState, BandStatus};
use crate::config::{MeanFlow, RunConfig, SchemeOrder};
use crate::error::{Error, Result};
use crate::field::{product, Parity, PhysicalField, SpectralField};
use crate::galerkin::{slaved_v, Engine, EngineParams, Forces};
use crate::grid::StripGrid;
use crate::limit::{check_compatible, wall_flux, RunStatus, SourceFn};
use crate::lp::{block_l2_norms, BlockNorms, DyadicFilterBank, NormSeries};
use crate::pressure::{anisotropic_pressure_solve, solvability_defect, NeumannData, PressureField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeParams {
    pub eps: f64,
    pub dt: f64,
    pub dealias: bool,
    pub order: SchemeOrder,
    pub mean_flow: MeanFlow,
    /// Split `p = p_h + q` with `∂_y p_h = T`.
    pub hydrostatic_split: bool,
    /// Safety factor of the buoyancy stiffness bound used without the split.
    pub stiffness_safety: f64,
}

impl PeParams {
    pub fn new(eps: f64, dt: f64) -> Self {
        Self {
            eps,
            dt,
            dealias: true,
            order: SchemeOrder::First,
            mean_flow: MeanFlow::ZeroMeanGradient,
            hydrostatic_split: true,
            stiffness_safety: 1.0,
        }
    }

    pub fn from_config(cfg: &RunConfig, eps: f64) -> Self {
        Self {
            eps,
            dt: cfg.dt,
            dealias: cfg.dealias,
            order: cfg.order,
            mean_flow: cfg.mean_flow,
            hydrostatic_split: cfg.hydrostatic_split,
            stiffness_safety: cfg.stiffness_safety,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::InvalidInput(format!("eps = {} outside (0, 1]", self.eps)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.stiffness_safety > 0.0) {
            return Err(Error::InvalidInput("stiffness safety must be positive".into()));
        }
        Ok(())
    }
}

/// State of the primitive equations; `v` is derived from `u`.
#[derive(Debug, Clone)]
pub struct PeState {
    pub t: f64,
    pub eps: f64,
    pub u: SpectralField,
    pub temp: SpectralField,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PeDiagnostics {
    pub t: f64,
    /// `‖∂_x u + ∂_y v‖_{L²}`.
    pub divergence: f64,
    /// `‖v(·, 1)‖_{L²(x)}`.
    pub wall_flux: f64,
    /// `½‖(u, εv)‖²_{L²}`.
    pub energy: f64,
    pub temp_l2: f64,
}

impl PeState {
    pub fn new(u: SpectralField, temp: SpectralField, eps: f64) -> Result<Self> {
        u.expect_parity(Parity::DirichletSine)?;
        temp.expect_parity(Parity::DirichletSine)?;
        if u.grid() != temp.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { t: 0.0, eps, u, temp })
    }

    pub fn grid(&self) -> &StripGrid {
        self.u.grid()
    }

    pub fn v(&self) -> Result<SpectralField> {
        slaved_v(&self.u)
    }

    pub fn energy(&self) -> Result<f64> {
        let v = self.v()?;
        Ok(0.5 * (self.u.l2_norm_sq() + self.eps * self.eps * v.l2_norm_sq()))
    }

    pub fn diagnostics(&self) -> Result<PeDiagnostics> {
        let v = self.v()?;
        let div = &self.u.dx() + &v.dy();
        Ok(PeDiagnostics {
            t: self.t,
            divergence: div.l2_norm(),
            wall_flux: wall_flux(&self.u)?,
            energy: 0.5 * (self.u.l2_norm_sq() + self.eps * self.eps * v.l2_norm_sq()),
            temp_l2: self.temp.l2_norm(),
        })
    }
}

/// Pseudospectral tendencies with the pressure recovered from the Neumann problem.
#[derive(Debug, Clone)]
pub struct PeTendencies {
    /// Collocation.
    pub du: SpectralField,
    /// Collocation.
    pub dv: SpectralField,
    /// Collocation.
    pub dtemp: SpectralField,
    /// Hydrostatic part `∫_0^y T` (zero without the split), cosine.
    pub hydrostatic: SpectralField,
    /// Solved pressure: the correction `q` with the split, the full `p` without.
    pub pressure: PressureField,
    /// `k = 0` compatibility defect removed before the solve.
    pub defect: f64,
}

impl PeTendencies {
    /// Full pressure `p = p_h + q`, collocation.
    pub fn total_pressure(&self) -> SpectralField {
        &self.pressure.p + &self.hydrostatic.to_parity(Parity::Collocation)
    }

    /// `‖∂_y p − T‖_{L²}` given the state's temperature.
    pub fn hydrostatic_residual(&self, temp: &SpectralField) -> f64 {
        let dp = &self.pressure.dy + &self.hydrostatic.dy().to_parity(Parity::Collocation);
        (&dp - &temp.to_parity(Parity::Collocation)).l2_norm()
    }
}

/// Wall values of a cosine field per horizontal mode, `(y = 0, y = 1)`.
fn wall_values(f: &SpectralField) -> (Vec<Complex64>, Vec<Complex64>) {
    let nx = f.grid().nx();
    let mut bottom = Vec::with_capacity(nx);
    let mut top = Vec::with_capacity(nx);
    for i in 0..nx {
        let c = f.column(i);
        bottom.push(c.iter().sum());
        top.push(
            c.iter()
                .enumerate()
                .map(|(m, x)| if m % 2 == 0 { *x } else { -*x })
                .sum(),
        );
    }
    (bottom, top)
}

fn laplacian(f: &SpectralField, eps2: f64) -> SpectralField {
    let yy = f.dy().dy();
    let xx = f.dx().dx().scaled(eps2);
    &yy.to_parity(f.parity()) + &xx
}

/// Tendencies `(∂_t u, ∂_t v, ∂_t T)` at `state`.
///
/// Differentiating the divergence constraint in time gives
/// `(∂_x² + ε⁻²∂_y²) p = ∂_x N_u + ∂_y N_v + ε⁻²∂_y T` with
/// `∂_y p = ε²∂_y²v + T` on the walls, `N` the advection terms.
pub fn rhs_pe(state: &PeState, params: &PeParams) -> Result<PeTendencies> {
    params.validate()?;
    let eps = params.eps;
    let e2 = eps * eps;
    let u = &state.u;
    let temp = &state.temp;
    let grid = *u.grid();
    let v = slaved_v(u)?;
    let dl = params.dealias;
    let nu = -&(&product(u, &u.dx(), dl)? + &product(&v, &u.dy(), dl)?);
    let nv = -&(&product(u, &v.dx(), dl)? + &product(&v, &v.dy(), dl)?);
    let nt = -&(&product(u, &temp.dx(), dl)? + &product(&v, &temp.dy(), dl)?);
    if !nu.is_finite() || !nv.is_finite() || !nt.is_finite() {
        return Err(Error::NonFinite {
            what: "primitive-equation tendency",
            step: 0,
        });
    }
    let du_visc = laplacian(u, e2).to_parity(Parity::Collocation);
    let dv_visc = laplacian(&v, e2).to_parity(Parity::Collocation);

    let hydrostatic = if params.hydrostatic_split {
        temp.antiderivative_y()?
    } else {
        SpectralField::zeros(grid, Parity::NeumannCosine)
    };
    let mut rhs = &nu.dx() + &nv.dy().to_parity(Parity::Collocation);
    if params.hydrostatic_split {
        rhs = &rhs - &hydrostatic.dx().dx().to_parity(Parity::Collocation);
    } else {
        rhs = &rhs + &temp.dy().to_parity(Parity::Collocation).scaled(1.0 / e2);
    }
    let (bottom, top) = wall_values(&v.dy().dy().scaled(e2));
    let data = NeumannData { bottom, top };
    let defect = solvability_defect(&rhs, &data, eps)?;
    rhs.column_mut(0).iter_mut().for_each(|c| *c -= defect);
    let pressure = anisotropic_pressure_solve(&rhs, &data, eps)?;

    let temp_c = temp.to_parity(Parity::Collocation);
    let dp_h = hydrostatic.dy().to_parity(Parity::Collocation);
    let buoyancy = (&(&temp_c - &dp_h) - &pressure.dy).scaled(1.0 / e2);
    let du = &(&nu + &du_visc) - &(&pressure.p.dx() + &hydrostatic.dx().to_parity(Parity::Collocation));
    let dv = &(&nv + &dv_visc) + &buoyancy;
    let dtemp = &nt + &laplacian(temp, 1.0).to_parity(Parity::Collocation);
    Ok(PeTendencies {
        du,
        dv,
        dtemp,
        hydrostatic,
        pressure,
        defect: defect.norm(),
    })
}

/// Fields on the thin strip `0 < y < ε` at the nodes `(x_n, ε y_j)`.
#[derive(Debug, Clone)]
pub struct ThinStrip {
    pub eps: f64,
    /// Physical heights `ε y_j`.
    pub heights: Vec<f64>,
    pub u1: PhysicalField,
    pub u2: PhysicalField,
    pub temp: PhysicalField,
    pub pressure: PhysicalField,
}

/// `U(x, y) = (u(x, y/ε), εv(x, y/ε))`, `T(x, y/ε)`, `P(x, y/ε)`.
pub fn rescale_to_physical(state: &PeState, params: &PeParams) -> Result<ThinStrip> {
    let grid = *state.grid();
    let eps = state.eps;
    let v = state.v()?;
    let tend = rhs_pe(state, params)?;
    Ok(ThinStrip {
        eps,
        heights: (0..=grid.ny()).map(|j| eps * grid.y_node(j)).collect(),
        u1: state.u.to_physical(),
        u2: v.scaled(eps).to_physical(),
        temp: state.temp.to_physical(),
        pressure: tend.total_pressure().to_physical(),
    })
}

/// Time stepper for the primitive equations at fixed `ε`.
pub struct PeSolver {
    engine: Engine,
    params: PeParams,
    sources: Option<SourceFn>,
    steps: usize,
}

impl PeSolver {
    pub fn new(grid: StripGrid, params: PeParams) -> Result<Self> {
        params.validate()?;
        let engine = Engine::new(
            grid,
            EngineParams {
                eps: params.eps,
                dt: params.dt,
                order: params.order,
                dealias: params.dealias,
                mean_flow: params.mean_flow,
                hydrostatic_split: params.hydrostatic_split,
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

    pub fn params(&self) -> &PeParams {
        &self.params
    }

    pub fn prepare(&self, state: &PeState) -> PeState {
        PeState {
            t: state.t,
            eps: self.params.eps,
            u: self.engine.truncate(&state.u),
            temp: self.engine.truncate(&state.temp),
        }
    }

    fn forces(&self, state: &PeState) -> Result<Forces> {
        let src = self.sources.as_ref().map(|f| f(state.t));
        let extra = src.as_ref().map(|(a, b)| (a, b));
        self.engine.forces(&state.u, &state.temp, extra, self.steps)
    }

    /// Semi-discrete `(∂_t u, ∂_t T)` of the scheme.
    pub fn tendency(&self, state: &PeState) -> Result<(SpectralField, SpectralField)> {
        let f = self.forces(state)?;
        Ok(self.engine.tendency(&state.u, &state.temp, &f))
    }

    pub fn step(&mut self, state: &PeState) -> Result<PeState> {
        let f = self.forces(state)?;
        let grid = state.grid();
        let dt = self.params.dt;
        let courant = f.u_max * dt * grid.nx() as f64 / grid.lx();
        if courant > 0.5 {
            return Err(Error::Cfl { t: state.t, courant });
        }
        if !self.params.hydrostatic_split && f.t_max > 0.0 {
            let limit = self.params.eps.powi(2) * self.params.stiffness_safety / f.t_max;
            if dt > limit {
                return Err(Error::Stiffness { dt, limit });
            }
        }
        let (u, temp) = self.engine.advance(&state.u, &state.temp, f);
        self.steps += 1;
        if !u.is_finite() || !temp.is_finite() {
            return Err(Error::NonFinite {
                what: "primitive-equation state",
                step: self.steps,
            });
        }
        Ok(PeState {
            t: state.t + dt,
            eps: state.eps,
            u,
            temp,
        })
    }
}

/// Single first-order step from scratch. Prefer [`PeSolver`] for runs.
pub fn step_pe(state: &PeState, params: &PeParams) -> Result<PeState> {
    let mut p = *params;
    p.order = SchemeOrder::First;
    let mut solver = PeSolver::new(*state.grid(), p)?;
    let prepared = solver.prepare(state);
    solver.step(&prepared)
}

#[derive(Debug, Clone)]
pub struct PeSnapshot {
    pub t: f64,
    /// `a − λτ(t)`.
    pub radius: f64,
    pub u: SpectralField,
    pub temp: SpectralField,
}

/// Block norms of the four weighted families at one instant:
/// `(u, εv, T)`, `∂_y(u, εv)`, `ε∂_x(u, εv)`, `∇T`.
pub fn weighted_families(state: &PeState, radius: f64, bank: &DyadicFilterBank) -> Result<[BlockNorms; 4]> {
    let eps = state.eps;
    let u = apply_weight(&state.u, radius)?;
    let v = apply_weight(&state.v()?, radius)?.scaled(eps);
    let t = apply_weight(&state.temp, radius)?;
    let b = |f: &SpectralField| block_l2_norms(f, bank);
    Ok([
        BlockNorms::combine(&[&b(&u)?, &b(&v)?, &b(&t)?])?,
        BlockNorms::combine(&[&b(&u.dy())?, &b(&v.dy())?])?,
        BlockNorms::combine(&[&b(&u.dx())?, &b(&v.dx())?])?.scaled(eps),
        BlockNorms::combine(&[&b(&t.dx())?, &b(&t.dy())?])?,
    ])
}

pub const FAMILY_NAMES: [&str; 4] = ["state_theta", "dy_velocity", "eps_dx_velocity", "grad_temp"];

#[derive(Debug, Clone)]
pub struct PeRun {
    pub grid: StripGrid,
    pub params: PeParams,
    pub a: f64,
    pub lambda: f64,
    pub samples: Vec<PeSnapshot>,
    pub band: BandState,
    pub status: RunStatus,
    pub diagnostics: Vec<PeDiagnostics>,
    /// The four weighted families at `s = ½`, named by [`FAMILY_NAMES`].
    pub series: Vec<(String, NormSeries)>,
}

impl PeRun {
    pub fn initial(&self) -> &PeSnapshot {
        &self.samples[0]
    }

    pub fn last(&self) -> &PeSnapshot {
        self.samples.last().expect("runs hold at least the initial sample")
    }
}

/// The four weighted families of every sample, named `"{family}@B0.5"`.
pub fn pe_series(samples: &[PeSnapshot], eps: f64, bank: &DyadicFilterBank) -> Result<Vec<(String, NormSeries)>> {
    let mut series: Vec<(String, NormSeries)> = FAMILY_NAMES
        .iter()
        .map(|n| (format!("{n}@B0.5"), NormSeries::new(bank, 0.5, false)))
        .collect();
    for snap in samples {
        let state = PeState::new(snap.u.clone(), snap.temp.clone(), eps)?;
        for (slot, row) in series.iter_mut().zip(weighted_families(&state, snap.radius, bank)?) {
            slot.1.push(snap.t, row)?;
        }
    }
    Ok(series)
}

pub fn run_pe_from(
    u0: &SpectralField,
    temp0: &SpectralField,
    params: PeParams,
    steps: usize,
    sample_every: usize,
    a: f64,
    lambda: f64,
) -> Result<PeRun> {
    check_compatible(u0)?;
    let grid = *u0.grid();
    let bank = DyadicFilterBank::new(grid)?;
    let mut solver = PeSolver::new(grid, params)?;
    let mut state = solver.prepare(&PeState::new(u0.clone(), temp0.clone(), params.eps)?);
    let mut band = BandState::new(BandKind::TauPe, a, lambda)?;
    let mut samples = Vec::new();
    let mut diagnostics = Vec::with_capacity(steps + 1);
    let mut status = RunStatus::Completed;
    let every = sample_every.max(1);
    let snapshot = |state: &PeState, radius: f64| PeSnapshot {
        t: state.t,
        radius,
        u: state.u.clone(),
        temp: state.temp.clone(),
    };

    for n in 0..steps {
        diagnostics.push(state.diagnostics()?);
        let radius = band.radius();
        if n % every == 0 {
            samples.push(snapshot(&state, radius));
        }
        let u_theta = apply_weight(&state.u, radius)?;
        let v_theta = apply_weight(&state.v()?, radius)?;
        let next = solver.step(&state)?;
        band = band.advance_tau(&u_theta, &v_theta, params.eps, params.dt, &bank)?;
        state = next;
        if let BandStatus::Exhausted { t } = band.status() {
            status = RunStatus::BandExhausted { t };
            break;
        }
    }
    diagnostics.push(state.diagnostics()?);
    if status == RunStatus::Completed {
        samples.push(snapshot(&state, band.radius()));
    }
    let series = pe_series(&samples, params.eps, &bank)?;
    Ok(PeRun {
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

/// Runs the primitive equations described by `config` at aspect `eps`.
pub fn run_pe(config: &RunConfig, eps: f64, lambda: f64) -> Result<PeRun> {
    let bank = DyadicFilterBank::new(config.grid)?;
    let (u0, t0) = crate::initial::build(config, lambda, &bank)?;
    run_pe_from(
        &u0,
        &t0,
        PeParams::from_config(config, eps),
        config.num_steps(),
        config.sample_every,
        config.a,
        lambda,
    )
}
