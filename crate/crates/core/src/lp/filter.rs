use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::StripGrid;

const INNER: f64 = 0.75;
const OUTER: f64 = 4.0 / 3.0;

/// `e^{-1/t}` for `t > 0`, else 0.
fn bump_tail(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`.
fn smooth_step(t: f64) -> f64 {
    let a = bump_tail(t);
    let b = bump_tail(1.0 - t);
    a / (a + b)
}

/// Low-frequency cutoff: even, 1 on `|z| <= 3/4`, 0 on `|z| >= 4/3`.
pub fn psi(z: f64) -> f64 {
    let z = z.abs();
    if z <= INNER {
        1.0
    } else if z >= OUTER {
        0.0
    } else {
        smooth_step((OUTER - z) / (OUTER - INNER))
    }
}

/// Annulus cutoff `ψ(z/2) − ψ(z)`, supported in `3/4 <= |z| <= 8/3`.
pub fn phi(z: f64) -> f64 {
    psi(z / 2.0) - psi(z)
}

/// `ψ(2^{-q_min} ξ) + Σ_{q=q_min}^{q_max} φ(2^{-q} ξ)`, summed directly.
pub fn partition_sum(xi: f64, q_min: i32, q_max: i32) -> f64 {
    let mut s = psi(xi * 2f64.powi(-q_min));
    for q in q_min..=q_max {
        s += phi(xi * 2f64.powi(-q));
    }
    s
}

/// Cutoff values of every block at every grid wavenumber.
#[derive(Debug, Clone)]
pub struct DyadicFilterBank {
    grid: StripGrid,
    q_min: i32,
    q_max: i32,
    psi_values: Vec<f64>,
    phi_values: Vec<f64>,
    annulus: Vec<bool>,
}

impl DyadicFilterBank {
    /// Bank covering every grid wavenumber; the catch-all holds only `k = 0`.
    pub fn new(grid: StripGrid) -> Result<Self> {
        let q_min = (INNER * grid.xi_min()).log2().floor() as i32;
        let q_max = grid.xi_max().log2().ceil() as i32;
        Self::with_range(grid, q_min, q_max)
    }

    pub fn with_range(grid: StripGrid, q_min: i32, q_max: i32) -> Result<Self> {
        if grid.nx() < 8 {
            return Err(Error::InvalidGrid("nx < 8 has no resolvable annuli".into()));
        }
        if q_max < q_min {
            return Err(Error::InvalidInput(format!("empty block range [{q_min}, {q_max}]")));
        }
        let nx = grid.nx();
        let nb = (q_max - q_min + 1) as usize;
        let psi_values = (0..nx)
            .map(|i| psi(grid.xi(i).abs() * 2f64.powi(-q_min)))
            .collect();
        let mut phi_values = Vec::with_capacity(nb * nx);
        let mut annulus = Vec::with_capacity(nb * nx);
        for q in q_min..=q_max {
            for i in 0..nx {
                let z = grid.xi(i).abs() * 2f64.powi(-q);
                phi_values.push(phi(z));
                annulus.push((OUTER..=1.5).contains(&z));
            }
        }
        Ok(Self {
            grid,
            q_min,
            q_max,
            psi_values,
            phi_values,
            annulus,
        })
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn q_min(&self) -> i32 {
        self.q_min
    }

    pub fn q_max(&self) -> i32 {
        self.q_max
    }

    pub fn num_blocks(&self) -> usize {
        (self.q_max - self.q_min + 1) as usize
    }

    pub fn blocks(&self) -> std::ops::RangeInclusive<i32> {
        self.q_min..=self.q_max
    }

    /// `φ(2^{-q}|ξ_i|)`, zero outside the bank's range.
    pub fn phi_at(&self, q: i32, i: usize) -> f64 {
        if q < self.q_min || q > self.q_max {
            return 0.0;
        }
        self.phi_values[(q - self.q_min) as usize * self.grid.nx() + i]
    }

    /// Catch-all value `ψ(2^{-q_min}|ξ_i|)`.
    pub fn psi_low(&self, i: usize) -> f64 {
        self.psi_values[i]
    }

    pub fn in_annulus(&self, q: i32, i: usize) -> bool {
        if q < self.q_min || q > self.q_max {
            return false;
        }
        self.annulus[(q - self.q_min) as usize * self.grid.nx() + i]
    }

    pub(crate) fn check_grid(&self, f: &SpectralField) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// `Δ_q f`. Out-of-range `q` gives the zero field.
pub fn dyadic_block(f: &SpectralField, q: i32, bank: &DyadicFilterBank) -> Result<SpectralField> {
    bank.check_grid(f)?;
    Ok(f.map_modes(|i, _| bank.phi_at(q, i)))
}

/// `S_q f` with multiplier `ψ(2^{-q}|ξ|)`.
pub fn low_pass(f: &SpectralField, q: i32, bank: &DyadicFilterBank) -> Result<SpectralField> {
    bank.check_grid(f)?;
    let scale = 2f64.powi(-q);
    Ok(f.map_modes(|_, xi| psi(xi.abs() * scale)))
}
