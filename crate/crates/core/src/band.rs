//! Analytic-in-x weights `e^{r|D_x|}` and the radius-loss functionals of the
//! limit, primitive and error systems.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lp::{block_l2_norms, BlockNorms, DyadicFilterBank};

/// Largest admissible exponent `r·|ξ|` in [`apply_weight`].
pub const MAX_WEIGHT_EXPONENT: f64 = 30.0;

/// Multiplies every horizontal mode by `e^{radius·|ξ|}`.
///
/// The overflow guard is checked on populated modes only.
pub fn apply_weight(f: &SpectralField, radius: f64) -> Result<SpectralField> {
    let grid = *f.grid();
    for i in 0..grid.nx() {
        let e = radius * grid.xi(i).abs();
        if e > MAX_WEIGHT_EXPONENT && f.column(i).iter().any(|c| c.norm() > 0.0) {
            return Err(Error::WeightOverflow {
                mode: grid.wavenumber(i),
                exponent: e,
            });
        }
    }
    Ok(f.map_modes(|_, xi| (radius * xi.abs()).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandKind {
    ThetaLimit,
    TauPe,
    EtaError,
}

impl BandKind {
    pub fn name(self) -> &'static str {
        match self {
            BandKind::ThetaLimit => "theta-limit",
            BandKind::TauPe => "tau-pe",
            BandKind::EtaError => "eta-error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSample {
    pub t: f64,
    pub integrand: f64,
    pub accumulated: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum BandStatus {
    Valid,
    Exhausted { t: f64 },
}

/// Radius record `a − λ·accumulated` with its Euler history.
///
/// Each history row holds the integrand evaluated at `t` together with the
/// accumulated loss and radius at `t`, before the step taken from `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandState {
    kind: BandKind,
    a: f64,
    lambda: f64,
    t: f64,
    accumulated: f64,
    history: Vec<BandSample>,
    status: BandStatus,
}

impl BandState {
    pub fn new(kind: BandKind, a: f64, lambda: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidInput(format!("initial radius a = {a} must be positive")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("rate lambda = {lambda} must be positive")));
        }
        Ok(Self {
            kind,
            a,
            lambda,
            t: 0.0,
            accumulated: 0.0,
            history: Vec::new(),
            status: BandStatus::Valid,
        })
    }

    pub fn kind(&self) -> BandKind {
        self.kind
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn accumulated(&self) -> f64 {
        self.accumulated
    }

    pub fn radius(&self) -> f64 {
        self.a - self.lambda * self.accumulated
    }

    pub fn history(&self) -> &[BandSample] {
        &self.history
    }

    pub fn status(&self) -> BandStatus {
        self.status
    }

    pub fn is_exhausted(&self) -> bool {
        matches!(self.status, BandStatus::Exhausted { .. })
    }

    /// Euler step with a precomputed nonnegative integrand.
    pub fn advance_with(mut self, integrand: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt = {dt} must be positive")));
        }
        if !(integrand >= 0.0 && integrand.is_finite()) {
            return Err(Error::InvalidInput(format!("integrand {integrand} must be finite and nonnegative")));
        }
        if self.is_exhausted() {
            return Err(Error::InvalidInput("band already exhausted".into()));
        }
        self.history.push(BandSample {
            t: self.t,
            integrand,
            accumulated: self.accumulated,
            radius: self.radius(),
        });
        self.accumulated += dt * integrand;
        self.t += dt;
        if self.radius() <= 0.0 {
            self.status = BandStatus::Exhausted { t: self.t };
        }
        Ok(self)
    }

    fn expect_kind(&self, kind: BandKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::InvalidInput(format!(
                "band of kind {} advanced as {}",
                self.kind.name(),
                kind.name()
            )));
        }
        Ok(())
    }

    /// `θ̇ = ‖∂_y u_φ‖_{B^{1/2}}`.
    pub fn advance_theta(self, u_phi: &SpectralField, dt: f64, bank: &DyadicFilterBank) -> Result<Self> {
        self.expect_kind(BandKind::ThetaLimit)?;
        let rate = theta_integrand(u_phi, bank)?;
        self.advance_with(rate, dt)
    }

    /// `τ̇ = ‖∂_y u_Θ‖_{B^{1/2}} + ε‖∂_y v_Θ‖_{B^{1/2}}`.
    pub fn advance_tau(
        self,
        u_theta: &SpectralField,
        v_theta: &SpectralField,
        eps: f64,
        dt: f64,
        bank: &DyadicFilterBank,
    ) -> Result<Self> {
        self.expect_kind(BandKind::TauPe)?;
        let rate = tau_integrand(u_theta, v_theta, eps, bank)?;
        self.advance_with(rate, dt)
    }

    /// `η̇ = ‖(∂_y u^ε_Θ, ε∂_x u^ε_Θ)‖_{B^{1/2}} + ‖∂_y u_φ‖_{B^{1/2}}`.
    pub fn advance_eta(
        self,
        u_theta_pe: &SpectralField,
        u_phi_limit: &SpectralField,
        eps: f64,
        dt: f64,
        bank: &DyadicFilterBank,
    ) -> Result<Self> {
        self.expect_kind(BandKind::EtaError)?;
        let rate = eta_integrand(u_theta_pe, u_phi_limit, eps, bank)?;
        self.advance_with(rate, dt)
    }

    /// CSV rows `t,integrand,accumulated,radius`.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "t,integrand,accumulated,radius")?;
        for s in &self.history {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e}",
                s.t, s.integrand, s.accumulated, s.radius
            )?;
        }
        Ok(())
    }
}

pub fn theta_integrand(u_phi: &SpectralField, bank: &DyadicFilterBank) -> Result<f64> {
    Ok(block_l2_norms(&u_phi.dy(), bank)?.besov(0.5))
}

pub fn tau_integrand(
    u_theta: &SpectralField,
    v_theta: &SpectralField,
    eps: f64,
    bank: &DyadicFilterBank,
) -> Result<f64> {
    let du = block_l2_norms(&u_theta.dy(), bank)?.besov(0.5);
    let dv = if eps == 0.0 {
        0.0
    } else {
        block_l2_norms(&v_theta.dy(), bank)?.besov(0.5)
    };
    Ok(du + eps * dv)
}

pub fn eta_integrand(
    u_theta_pe: &SpectralField,
    u_phi_limit: &SpectralField,
    eps: f64,
    bank: &DyadicFilterBank,
) -> Result<f64> {
    let dy = block_l2_norms(&u_theta_pe.dy(), bank)?;
    let dx = block_l2_norms(&u_theta_pe.dx(), bank)?.scaled(eps);
    let pe = BlockNorms::combine(&[&dy, &dx])?.besov(0.5);
    Ok(pe + theta_integrand(u_phi_limit, bank)?)
}
