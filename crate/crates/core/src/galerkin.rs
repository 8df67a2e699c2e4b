//! Divergence-constrained sine-Galerkin engine shared by the limit (`ε = 0`)
//! and primitive-equation solvers.
//!
//! Per horizontal wavenumber `κ ≠ 0` the unknown is the sine coefficient
//! vector `a` of `u`; `v = −∫_0^y ∂_x u` is the exact cosine series slaved to
//! it and the wall condition `v(1) = 0` is the linear constraint `w·a = 0`.
//! The weak form tested against `(sin mπy, ψ_m)` reads `G ȧ = −A a + f`
//! restricted to `w⊥`, with
//! `G = ½I + ε²κ²B`, `A = ½ diag(m²π²) + ε²κ²I + ε⁴κ⁴B`,
//! `B = π⁻²(r rᵀ + ½ diag(m⁻²))`, `r_m = 1/m`.
//! The restricted pencil is diagonalised once and stepped with exponential
//! time differencing.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;

use crate::config::{MeanFlow, SchemeOrder};
use crate::error::{Error, Result};
use crate::field::{Parity, PhysicalField, SpectralField};
use crate::grid::StripGrid;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// `∫_0^1 sin(mπy) dy` for `m = 1..=n`.
pub(crate) fn sine_means(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|m| {
            if m % 2 == 1 {
                2.0 / (m as f64 * PI)
            } else {
                0.0
            }
        })
        .collect()
}

/// `J[l][m] = ∫_0^1 sin(lπy) cos(mπy) dy`, `l, m = 1..=n`, row-major.
pub(crate) fn sine_cosine_overlap(n: usize) -> Vec<f64> {
    let mut j = vec![0.0; n * n];
    for l in 1..=n {
        for m in 1..=n {
            if (l + m) % 2 == 1 {
                let (lf, mf) = (l as f64, m as f64);
                j[(l - 1) * n + (m - 1)] = 2.0 * lf / (PI * (lf * lf - mf * mf));
            }
        }
    }
    j
}

/// `v = −∫_0^y ∂_x u` for a sine field `u`, as a cosine field.
pub(crate) fn slaved_v(u: &SpectralField) -> Result<SpectralField> {
    Ok(-&u.dx().antiderivative_y()?)
}

/// Exponential-integrator weights per eigenvalue.
#[derive(Debug, Clone)]
pub(crate) struct Etd {
    decay: Vec<f64>,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl Etd {
    fn new(lambda: &[f64], dt: f64) -> Self {
        let mut decay = Vec::with_capacity(lambda.len());
        let mut w1 = Vec::with_capacity(lambda.len());
        let mut w2 = Vec::with_capacity(lambda.len());
        for &l in lambda {
            let x = l * dt;
            decay.push((-x).exp());
            w1.push(dt * phi1(x));
            w2.push(dt * phi2(x));
        }
        Self { decay, w1, w2 }
    }

    /// `x⁺ = e^{−Λh}x + hφ₁ g + hφ₂ (g − g_prev)`.
    fn apply(&self, x: &mut [C], g: &[C], g_prev: Option<&[C]>) {
        for n in 0..x.len() {
            let mut next = x[n] * self.decay[n] + g[n] * self.w1[n];
            if let Some(p) = g_prev {
                next += (g[n] - p[n]) * self.w2[n];
            }
            x[n] = next;
        }
    }
}

/// `(1 − e^{−x})/x`.
fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// `(e^{−x} − 1 + x)/x²`.
fn phi2(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0
    } else {
        ((-x).exp_m1() + x) / (x * x)
    }
}

fn mat_vec(m: &DMatrix<f64>, x: &[C]) -> Vec<C> {
    let rows = m.nrows();
    let data = m.as_slice();
    let mut y = vec![ZERO; rows];
    for (c, xc) in x.iter().enumerate() {
        let col = &data[c * rows..(c + 1) * rows];
        for (yr, &mr) in y.iter_mut().zip(col) {
            *yr += xc * mr;
        }
    }
    y
}

fn mat_t_vec(m: &DMatrix<f64>, x: &[C]) -> Vec<C> {
    let rows = m.nrows();
    let data = m.as_slice();
    (0..m.ncols())
        .map(|c| {
            let col = &data[c * rows..(c + 1) * rows];
            col.iter().zip(x).map(|(&mr, xr)| xr * mr).sum()
        })
        .collect()
}

fn dot_real(w: &[f64], x: &[C]) -> C {
    w.iter().zip(x).map(|(&wi, xi)| xi * wi).sum()
}

/// Orthonormal basis of `w⊥` from a Householder reflection, `n × (n−1)`.
fn complement_basis(w: &[f64]) -> DMatrix<f64> {
    let n = w.len();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut v = w.to_vec();
    v[0] += if w[0] >= 0.0 { norm } else { -norm };
    let vv: f64 = v.iter().map(|x| x * x).sum();
    DMatrix::from_fn(n, n - 1, |r, c| {
        let col = c + 1;
        let id = if r == col { 1.0 } else { 0.0 };
        id - 2.0 * v[r] * v[col] / vv
    })
}

/// Linear structure of one horizontal wavenumber.
#[derive(Debug, Clone)]
pub(crate) enum ModeSystem {
    Diagonal {
        lambda: Vec<f64>,
        inv_mass: Vec<f64>,
        etd: Etd,
    },
    Constrained {
        basis: DMatrix<f64>,
        proj: DMatrix<f64>,
        lambda: Vec<f64>,
        w: Vec<f64>,
        w_hat: Vec<f64>,
        etd: Etd,
    },
}

/// Coordinates of one mode in the integrator's eigenbasis.
pub(crate) struct Reduced {
    pub x: Vec<C>,
    pub g: Vec<C>,
}

impl ModeSystem {
    /// Unconstrained diagonal system `ȧ_m = −m²π² a_m + 2 f_m`.
    pub fn diagonal(m: usize, dt: f64) -> Self {
        let lambda: Vec<f64> = (1..=m).map(|j| (j as f64 * PI).powi(2)).collect();
        let etd = Etd::new(&lambda, dt);
        ModeSystem::Diagonal {
            lambda,
            inv_mass: vec![2.0; m],
            etd,
        }
    }

    /// Constrained system at horizontal wavenumber `kappa` and aspect `eps`.
    pub fn constrained(m: usize, kappa: f64, eps: f64, dt: f64) -> Result<Self> {
        let e2k2 = (eps * kappa).powi(2);
        let mut g = DMatrix::<f64>::zeros(m, m);
        let mut a = DMatrix::<f64>::zeros(m, m);
        for r in 0..m {
            for c in 0..m {
                let (rf, cf) = ((r + 1) as f64, (c + 1) as f64);
                let mut b = 1.0 / (rf * cf);
                if r == c {
                    b += 0.5 / (rf * rf);
                }
                b /= PI * PI;
                g[(r, c)] = e2k2 * b;
                a[(r, c)] = e2k2 * e2k2 * b;
            }
            g[(r, r)] += 0.5;
            a[(r, r)] += 0.5 * ((r + 1) as f64 * PI).powi(2) + e2k2;
        }
        let w = sine_means(m);
        let z = complement_basis(&w);
        let gr = z.transpose() * &g * &z;
        let ar = z.transpose() * &a * &z;
        let chol = gr
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("reduced mass matrix not positive definite".into()))?;
        let l = chol.l();
        let l_inv = l
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("singular Cholesky factor".into()))?;
        let cmat = &l_inv * ar * l_inv.transpose();
        let cmat = (&cmat + cmat.transpose()) * 0.5;
        let eig = cmat.symmetric_eigen();
        let basis = z * l_inv.transpose() * &eig.eigenvectors;
        let proj = basis.transpose() * &g;
        let lambda: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        let ww: f64 = w.iter().map(|x| x * x).sum();
        let w_hat: Vec<f64> = w.iter().map(|x| x / ww).collect();
        let etd = Etd::new(&lambda, dt);
        Ok(ModeSystem::Constrained {
            basis,
            proj,
            lambda,
            w,
            w_hat,
            etd,
        })
    }

    pub fn reduce(&self, a: &[C], f: &[C]) -> Reduced {
        match self {
            ModeSystem::Diagonal { inv_mass, .. } => Reduced {
                x: a.to_vec(),
                g: f.iter().zip(inv_mass).map(|(fi, s)| fi * s).collect(),
            },
            ModeSystem::Constrained { basis, proj, w, w_hat, .. } => {
                // the wall condition is re-imposed, so round-off in `w·a` never accumulates
                let flux = dot_real(w, a);
                let shifted: Vec<C> = a.iter().zip(w_hat).map(|(ai, wh)| ai - flux * wh).collect();
                Reduced {
                    x: mat_vec(proj, &shifted),
                    g: mat_t_vec(basis, f),
                }
            }
        }
    }

    pub fn expand(&self, r: &Reduced) -> Vec<C> {
        match self {
            ModeSystem::Diagonal { .. } => r.x.clone(),
            ModeSystem::Constrained { basis, w, w_hat, .. } => {
                let mut a = mat_vec(basis, &r.x);
                let flux = dot_real(w, &a);
                for (ai, wh) in a.iter_mut().zip(w_hat) {
                    *ai -= flux * wh;
                }
                a
            }
        }
    }

    fn lambda(&self) -> &[f64] {
        match self {
            ModeSystem::Diagonal { lambda, .. } | ModeSystem::Constrained { lambda, .. } => lambda,
        }
    }

    fn etd(&self) -> &Etd {
        match self {
            ModeSystem::Diagonal { etd, .. } | ModeSystem::Constrained { etd, .. } => etd,
        }
    }

    /// Semi-discrete `ȧ`.
    pub fn tendency(&self, a: &[C], f: &[C]) -> Vec<C> {
        let r = self.reduce(a, f);
        let dx: Vec<C> = r
            .x
            .iter()
            .zip(&r.g)
            .zip(self.lambda())
            .map(|((x, g), l)| g - x * l)
            .collect();
        match self {
            ModeSystem::Diagonal { .. } => dx,
            ModeSystem::Constrained { basis, .. } => mat_vec(basis, &dx),
        }
    }
}

/// Nonlinear, buoyancy and external forcing in Galerkin form.
pub(crate) struct Forces {
    /// Momentum forcing per storage index, length `ny − 1`.
    pub momentum: Vec<Vec<C>>,
    /// Temperature coefficient tendency per storage index.
    pub heat: Vec<Vec<C>>,
    pub u_max: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EngineParams {
    pub eps: f64,
    pub dt: f64,
    pub order: SchemeOrder,
    pub dealias: bool,
    pub mean_flow: MeanFlow,
    /// Buoyancy through the exact sine-cosine overlap (`true`) or the nodal cosine route.
    pub hydrostatic_split: bool,
}

struct History {
    momentum: Vec<Vec<C>>,
    heat: Vec<Vec<C>>,
}

pub(crate) struct Engine {
    grid: StripGrid,
    params: EngineParams,
    systems: Vec<Option<Arc<ModeSystem>>>,
    heat: Vec<Option<(Vec<f64>, Etd)>>,
    w: Vec<f64>,
    overlap: Vec<f64>,
    history: Option<History>,
}

impl Engine {
    pub fn new(grid: StripGrid, params: EngineParams) -> Result<Self> {
        if !(params.dt > 0.0 && params.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt = {} must be positive", params.dt)));
        }
        let m = grid.ny() - 1;
        let nx = grid.nx();
        let kmax = grid.dealias_cutoff() as i64;
        let mut systems: Vec<Option<Arc<ModeSystem>>> = vec![None; nx];
        let mut heat = Vec::with_capacity(nx);
        let mut by_k: Vec<Option<Arc<ModeSystem>>> = vec![None; nx / 2 + 1];
        let shared_limit = if params.eps == 0.0 {
            Some(Arc::new(ModeSystem::constrained(m, 0.0, 0.0, params.dt)?))
        } else {
            None
        };
        for i in 0..nx {
            let k = grid.wavenumber(i);
            let active = !grid.is_nyquist(i) && (!params.dealias || k.abs() <= kmax);
            if !active {
                heat.push(None);
                continue;
            }
            let kappa = grid.xi(i);
            let lam: Vec<f64> = (1..=m).map(|j| kappa * kappa + (j as f64 * PI).powi(2)).collect();
            let etd = Etd::new(&lam, params.dt);
            heat.push(Some((lam, etd)));
            let sys = if k == 0 {
                match params.mean_flow {
                    MeanFlow::ZeroMeanGradient => Arc::new(ModeSystem::diagonal(m, params.dt)),
                    MeanFlow::FixedFlux => Arc::new(ModeSystem::constrained(m, 0.0, 0.0, params.dt)?),
                }
            } else if let Some(s) = &shared_limit {
                s.clone()
            } else {
                let slot = k.unsigned_abs() as usize;
                match &by_k[slot] {
                    Some(s) => s.clone(),
                    None => {
                        let s = Arc::new(ModeSystem::constrained(m, kappa.abs(), params.eps, params.dt)?);
                        by_k[slot] = Some(s.clone());
                        s
                    }
                }
            };
            systems[i] = Some(sys);
        }
        Ok(Self {
            grid,
            params,
            systems,
            heat,
            w: sine_means(m),
            overlap: sine_cosine_overlap(m),
            history: None,
        })
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.systems[i].is_some()
    }

    /// Zeroes inactive modes.
    pub fn truncate(&self, f: &SpectralField) -> SpectralField {
        f.map_modes(|i, _| if self.is_active(i) { 1.0 } else { 0.0 })
    }

    /// Galerkin forcing at the current state. `extra` holds physical-space
    /// momentum and heat sources.
    pub fn forces(
        &self,
        u: &SpectralField,
        temp: &SpectralField,
        extra: Option<(&PhysicalField, &PhysicalField)>,
        step: usize,
    ) -> Result<Forces> {
        let eps = self.params.eps;
        let v = slaved_v(u)?;
        let ux = u.dx();
        let up = u.to_physical();
        let uxp = ux.to_physical();
        let uyp = u.dy().to_physical();
        let vp = v.to_physical();
        let tp = temp.to_physical();
        let txp = temp.dx().to_physical();
        let typ = temp.dy().to_physical();
        let nu = PhysicalField::combine(&[(-1.0, &up.mul(&uxp)), (-1.0, &vp.mul(&uyp))]);
        let nt = PhysicalField::combine(&[(-1.0, &up.mul(&txp)), (-1.0, &vp.mul(&typ))]);
        let (nu, nt) = match extra {
            Some((fu, ft)) => (
                PhysicalField::combine(&[(1.0, &nu), (1.0, fu)]),
                PhysicalField::combine(&[(1.0, &nt), (1.0, ft)]),
            ),
            None => (nu, nt),
        };
        if !nu.is_finite() {
            return Err(Error::NonFinite { what: "momentum advection", step });
        }
        if !nt.is_finite() {
            return Err(Error::NonFinite { what: "heat advection", step });
        }
        let ru = self.truncate(&SpectralField::from_physical(&nu, Parity::DirichletSine));
        let rt = self.truncate(&SpectralField::from_physical(&nt, Parity::DirichletSine));
        let rv = if eps > 0.0 {
            let vxp = v.dx().to_physical();
            let nv = PhysicalField::combine(&[(-1.0, &up.mul(&vxp)), (1.0, &vp.mul(&uxp))]);
            if !nv.is_finite() {
                return Err(Error::NonFinite { what: "vertical advection", step });
            }
            Some(self.truncate(&SpectralField::from_physical(&nv, Parity::NeumannCosine)))
        } else {
            None
        };
        let t_nodal_cos = if self.params.hydrostatic_split {
            None
        } else {
            Some(temp.to_parity(Parity::NeumannCosine))
        };

        let m = self.grid.ny() - 1;
        let nx = self.grid.nx();
        let mut momentum = vec![vec![ZERO; m]; nx];
        let mut heat = vec![vec![ZERO; m]; nx];
        for i in 0..nx {
            if !self.is_active(i) {
                continue;
            }
            let kappa = self.grid.xi(i);
            let f = &mut momentum[i];
            for (fm, r) in f.iter_mut().zip(ru.column(i)) {
                *fm = r * 0.5;
            }
            heat[i].copy_from_slice(rt.column(i));
            if kappa == 0.0 {
                continue;
            }
            let ik = C::new(0.0, kappa);
            if let Some(rv) = &rv {
                let c = rv.column(i);
                for (mi, fm) in f.iter_mut().enumerate() {
                    let mm = (mi + 1) as f64 * PI;
                    *fm += ik / mm * (c[0] - c[mi + 1] * 0.5) * (eps * eps);
                }
            }
            match &t_nodal_cos {
                None => {
                    let tau = temp.column(i);
                    let mean = dot_real(&self.w, tau);
                    for (mi, fm) in f.iter_mut().enumerate() {
                        let mut over = ZERO;
                        for (l, tl) in tau.iter().enumerate() {
                            over += tl * self.overlap[l * m + mi];
                        }
                        *fm += ik / ((mi + 1) as f64 * PI) * (mean - over);
                    }
                }
                Some(tc) => {
                    let c = tc.column(i);
                    for (mi, fm) in f.iter_mut().enumerate() {
                        *fm += ik / ((mi + 1) as f64 * PI) * (c[0] - c[mi + 1] * 0.5);
                    }
                }
            }
        }
        Ok(Forces {
            momentum,
            heat,
            u_max: up.max_abs(),
            t_max: tp.max_abs(),
        })
    }

    /// Advances `(u, T)` by one step given the forcing at the current state.
    pub fn advance(&mut self, u: &SpectralField, temp: &SpectralField, forces: Forces) -> (SpectralField, SpectralField) {
        let nx = self.grid.nx();
        let m = self.grid.ny() - 1;
        let second = self.params.order == SchemeOrder::Second;
        let mut u_next = SpectralField::zeros(self.grid, Parity::DirichletSine);
        let mut t_next = SpectralField::zeros(self.grid, Parity::DirichletSine);
        let mut g_hist = vec![Vec::new(); nx];
        for i in 0..nx {
            let Some(sys) = &self.systems[i] else { continue };
            let mut r = sys.reduce(u.column(i), &forces.momentum[i]);
            let prev = self
                .history
                .as_ref()
                .filter(|_| second)
                .map(|h| h.momentum[i].as_slice());
            let g = r.g.clone();
            sys.etd().apply(&mut r.x, &g, prev);
            u_next.column_mut(i).copy_from_slice(&sys.expand(&r));
            g_hist[i] = g;

            let (_, etd) = self.heat[i].as_ref().expect("active mode has heat operator");
            let mut tau = temp.column(i).to_vec();
            let prev_t = self
                .history
                .as_ref()
                .filter(|_| second)
                .map(|h| h.heat[i].as_slice());
            etd.apply(&mut tau, &forces.heat[i], prev_t);
            t_next.column_mut(i).copy_from_slice(&tau);
        }
        debug_assert_eq!(u_next.vlen(), m);
        if second {
            self.history = Some(History {
                momentum: g_hist,
                heat: forces.heat,
            });
        }
        (u_next, t_next)
    }

    /// Semi-discrete tendencies `(∂_t u, ∂_t T)` as sine fields.
    pub fn tendency(&self, u: &SpectralField, temp: &SpectralField, forces: &Forces) -> (SpectralField, SpectralField) {
        let nx = self.grid.nx();
        let mut du = SpectralField::zeros(self.grid, Parity::DirichletSine);
        let mut dt = SpectralField::zeros(self.grid, Parity::DirichletSine);
        for i in 0..nx {
            let Some(sys) = &self.systems[i] else { continue };
            du.column_mut(i)
                .copy_from_slice(&sys.tendency(u.column(i), &forces.momentum[i]));
            let (lam, _) = self.heat[i].as_ref().expect("active mode has heat operator");
            let col: Vec<C> = temp
                .column(i)
                .iter()
                .zip(&forces.heat[i])
                .zip(lam)
                .map(|((t, f), l)| f - t * l)
                .collect();
            dt.column_mut(i).copy_from_slice(&col);
        }
        (du, dt)
    }
}
