//! Anisotropic Neumann problem `(∂_x² + ε⁻²∂_y²) p = f` on the strip.
//!
//! Each horizontal mode is a two-point problem `p'' − s²p = ε²f̂`, `s = ε|κ|`,
//! with `p'(0) = g₀`, `p'(1) = g₁`. The cosine interpolant of `f̂` is inverted
//! exactly in the cosine basis and the wall data are carried by the exact
//! homogeneous solution `A cosh(sy) + B cosh(s(1 − y))`, or by
//! `g₀y + ½(g₁ − g₀)y²` when `s = 0`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Parity, SpectralField};
use crate::grid::StripGrid;
use crate::transform;

type C = Complex64;

/// Per-mode Neumann data `∂_y p` at the walls, in the horizontal Fourier basis.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannData {
    pub bottom: Vec<C>,
    pub top: Vec<C>,
}

impl NeumannData {
    pub fn homogeneous(grid: StripGrid) -> Self {
        Self {
            bottom: vec![C::new(0.0, 0.0); grid.nx()],
            top: vec![C::new(0.0, 0.0); grid.nx()],
        }
    }

    /// From wall values sampled at the `x` nodes.
    pub fn from_values(grid: StripGrid, bottom: &[f64], top: &[f64]) -> Result<Self> {
        if bottom.len() != grid.nx() || top.len() != grid.nx() {
            return Err(Error::GridMismatch);
        }
        let fwd = |v: &[f64]| {
            let mut b: Vec<C> = v.iter().map(|&x| C::new(x, 0.0)).collect();
            transform::horizontal_forward(&mut b);
            b
        };
        Ok(Self {
            bottom: fwd(bottom),
            top: fwd(top),
        })
    }

    fn check(&self, grid: &StripGrid) -> Result<()> {
        if self.bottom.len() != grid.nx() || self.top.len() != grid.nx() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Solution of the Neumann problem, both parts in nodal (collocation) form.
#[derive(Debug, Clone)]
pub struct PressureField {
    pub p: SpectralField,
    /// `∂_y p`, carrying the wall data exactly.
    pub dy: SpectralField,
}

/// `cosh(sy) / (s sinh s)` and its `y`-derivative, overflow-free.
fn neumann_kernel(s: f64, y: f64) -> (f64, f64) {
    let den = s * (1.0 - (-2.0 * s).exp());
    let a = (s * (y - 1.0)).exp();
    let b = (-s * (y + 1.0)).exp();
    ((a + b) / den, s * (a - b) / den)
}

/// Compatibility defect of the `k = 0` mode: `∫_0^1 f̂₀ − ε⁻²(g₁ − g₀)`.
pub fn solvability_defect(rhs: &SpectralField, data: &NeumannData, eps: f64) -> Result<C> {
    data.check(rhs.grid())?;
    let i0 = 0;
    let flux = (data.top[i0] - data.bottom[i0]) / (eps * eps);
    Ok(rhs.column_mean(i0) - flux)
}

/// Solves `(∂_x² + ε⁻²∂_y²) p = rhs` with `∂_y p = data` on the walls.
///
/// The `k = 0` mode is fixed by `∫∫ p = 0`; an incompatible `k = 0` mode is an
/// error carrying the defect. The Nyquist mode is left at zero.
pub fn anisotropic_pressure_solve(rhs: &SpectralField, data: &NeumannData, eps: f64) -> Result<PressureField> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps = {eps} must be positive")));
    }
    let grid = *rhs.grid();
    data.check(&grid)?;
    let defect = solvability_defect(rhs, data, eps)?;
    let i0 = 0;
    let scale = 1.0
        + rhs.column_mean(i0).norm()
        + (data.top[i0].norm() + data.bottom[i0].norm()) / (eps * eps);
    if defect.norm() > 1e-10 * scale {
        return Err(Error::Solvability {
            mode: 0,
            defect: defect.norm(),
        });
    }

    let n = grid.ny();
    let e2 = eps * eps;
    let cos_rhs = rhs.to_parity(Parity::NeumannCosine);
    let mut p = SpectralField::zeros(grid, Parity::Collocation);
    let mut dy = SpectralField::zeros(grid, Parity::Collocation);
    for i in 0..grid.nx() {
        if grid.is_nyquist(i) {
            continue;
        }
        let s = eps * grid.xi(i).abs();
        let (g0, g1) = (data.bottom[i], data.top[i]);
        let f = cos_rhs.column(i);
        let mut c = vec![C::new(0.0, 0.0); n + 1];
        for m in 0..=n {
            let denom = (m as f64 * PI).powi(2) + s * s;
            if denom > 0.0 {
                c[m] = -f[m] * e2 / denom;
            }
        }
        let mut vals = transform::cosine_inverse(&c);
        let slope: Vec<C> = (1..n).map(|m| -c[m] * (m as f64 * PI)).collect();
        let interior = transform::sine_inverse(&slope);
        let mut dvals = vec![C::new(0.0, 0.0); n + 1];
        for (j, dv) in dvals.iter_mut().enumerate().take(n).skip(1) {
            *dv = interior[j - 1];
        }
        for (j, (val, dv)) in vals.iter_mut().zip(dvals.iter_mut()).enumerate() {
            let y = grid.y_node(j);
            if s == 0.0 {
                let jump = g1 - g0;
                *val += g0 * (y - 0.5) + jump * (0.5 * y * y - 1.0 / 6.0);
                *dv += g0 + jump * y;
            } else {
                let (top, dtop) = neumann_kernel(s, y);
                let (bot, dbot) = neumann_kernel(s, 1.0 - y);
                *val += g1 * top - g0 * bot;
                *dv += g1 * dtop + g0 * dbot;
            }
        }
        p.column_mut(i).copy_from_slice(&vals);
        dy.column_mut(i).copy_from_slice(&dvals);
    }
    Ok(PressureField { p, dy })
}
