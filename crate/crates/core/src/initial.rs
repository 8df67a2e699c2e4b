//! Initial-data families.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::band::apply_weight;
use crate::config::{InitialData, RunConfig};
use crate::error::{Error, Result};
use crate::field::{Parity, SpectralField};
use crate::galerkin::sine_means;
use crate::grid::StripGrid;
use crate::lp::{besov_norm, DyadicFilterBank};

/// `u_0 = amplitude · sin(πy)`, `T_0 = 0`.
pub fn heat(grid: StripGrid, amplitude: f64) -> (SpectralField, SpectralField) {
    let mut u = SpectralField::zeros(grid, Parity::DirichletSine);
    u.column_mut(0)[0] = Complex64::new(amplitude, 0.0);
    (u, SpectralField::zeros(grid, Parity::DirichletSine))
}

/// Default size `0.9 · min{1/(2C²), a/(2λ)} / C` of `‖e^{a|D|}u_0‖ + ‖e^{a|D|}T_0‖`
/// in `B^{1/2}`, with `C = √(λ/2)`.
pub fn budget_amplitude(a: f64, lambda: f64) -> f64 {
    let c = (lambda / 2.0).sqrt();
    0.9 * (1.0 / (2.0 * c * c)).min(a / (2.0 * lambda)) / c
}

/// Random-phase coefficients `e^{-a|ξ|} ρ e^{iθ}` for `1 <= k <= band`, `1 <= m <= modes`.
///
/// Draw order depends only on `(band, modes, seed)`, so the same data are
/// produced on every grid that resolves them.
pub fn random_band_field(
    grid: StripGrid,
    a: f64,
    band: usize,
    modes: usize,
    rng: &mut ChaCha8Rng,
    compatible: bool,
) -> Result<SpectralField> {
    if band > grid.dealias_cutoff() || modes >= grid.ny() {
        return Err(Error::InvalidInput(format!(
            "band {band} x modes {modes} not resolved on {}x{} grid",
            grid.nx(),
            grid.ny()
        )));
    }
    let mut f = SpectralField::zeros(grid, Parity::DirichletSine);
    let w: Vec<f64> = sine_means(modes);
    let ww: f64 = w.iter().map(|x| x * x).sum();
    for k in 1..=band as i64 {
        let xi = 2.0 * PI * k as f64 / grid.lx();
        let mut col: Vec<Complex64> = (0..modes)
            .map(|_| {
                let rho: f64 = rng.gen_range(0.5..1.0);
                let theta: f64 = rng.gen_range(0.0..2.0 * PI);
                Complex64::from_polar(rho * (-a * xi).exp(), theta)
            })
            .collect();
        if compatible {
            let flux: Complex64 = col.iter().zip(&w).map(|(c, wi)| c * wi).sum();
            for (c, wi) in col.iter_mut().zip(&w) {
                *c -= flux * (wi / ww);
            }
        }
        for (m, c) in col.into_iter().enumerate() {
            f.set_real_mode(k, m, c)?;
        }
    }
    Ok(f)
}

/// Compatible analytic band data scaled so each of `‖e^{a|D|}u_0‖_{B^{1/2}}`,
/// `‖e^{a|D|}T_0‖_{B^{1/2}}` equals `amplitude / 2`.
pub fn analytic_band(
    grid: StripGrid,
    a: f64,
    amplitude: f64,
    band: usize,
    modes: usize,
    seed: u64,
    bank: &DyadicFilterBank,
) -> Result<(SpectralField, SpectralField)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_band_field(grid, a, band, modes, &mut rng, true)?;
    let t = random_band_field(grid, a, band, modes, &mut rng, false)?;
    let nu = besov_norm(&apply_weight(&u, a)?, 0.5, bank)?;
    let nt = besov_norm(&apply_weight(&t, a)?, 0.5, bank)?;
    Ok((u.scaled(0.5 * amplitude / nu), t.scaled(0.5 * amplitude / nt)))
}

/// Initial data described by `config`; `lambda` fixes the default budget.
pub fn build(config: &RunConfig, lambda: f64, bank: &DyadicFilterBank) -> Result<(SpectralField, SpectralField)> {
    match &config.initial {
        InitialData::Heat { amplitude } => Ok(heat(config.grid, *amplitude)),
        InitialData::AnalyticBand {
            amplitude,
            band,
            modes,
            seed,
        } => {
            let amp = amplitude.unwrap_or_else(|| budget_amplitude(config.a, lambda));
            analytic_band(config.grid, config.a, amp, *band, *modes, *seed, bank)
        }
        InitialData::Snapshot { u, temp } => {
            let (_, fu) = crate::io::read_snapshot(u)?;
            let (_, ft) = crate::io::read_snapshot(temp)?;
            if *fu.grid() != config.grid || *ft.grid() != config.grid {
                return Err(Error::GridMismatch);
            }
            Ok((
                fu.to_parity(Parity::DirichletSine),
                ft.to_parity(Parity::DirichletSine),
            ))
        }
    }
}
