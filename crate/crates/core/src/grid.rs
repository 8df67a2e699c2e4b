use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic-in-x unit strip discretisation.
///
/// `nx` horizontal Fourier modes on `[0, lx)`, vertical nodes `y_j = j / ny`
/// for `j = 0..=ny`. Both counts are powers of two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripGrid {
    nx: usize,
    ny: usize,
    lx: f64,
}

impl StripGrid {
    pub fn new(nx: usize, ny: usize, lx: f64) -> Result<Self> {
        if nx < 8 || !nx.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "nx = {nx} must be a power of two >= 8"
            )));
        }
        if ny < 8 || !ny.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "ny = {ny} must be a power of two >= 8"
            )));
        }
        if !(lx.is_finite() && lx > 0.0) {
            return Err(Error::InvalidGrid(format!("lx = {lx} must be positive")));
        }
        Ok(Self { nx, ny, lx })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    /// Signed integer wavenumber of storage index `i` (Nyquist maps to `-nx/2`).
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.nx as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Storage index of integer wavenumber `k`, if representable.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let n = self.nx as i64;
        if k < -n / 2 || k >= n / 2 {
            return None;
        }
        Some(k.rem_euclid(n) as usize)
    }

    /// Angular wavenumber `2πk/Lx` of storage index `i`.
    pub fn xi(&self, i: usize) -> f64 {
        2.0 * PI * self.wavenumber(i) as f64 / self.lx
    }

    pub fn xi_min(&self) -> f64 {
        2.0 * PI / self.lx
    }

    pub fn xi_max(&self) -> f64 {
        PI * self.nx as f64 / self.lx
    }

    /// Largest |k| kept by the 2/3 truncation.
    pub fn dealias_cutoff(&self) -> usize {
        (self.nx - 1) / 3
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.nx / 2
    }

    pub fn x_node(&self, n: usize) -> f64 {
        self.lx * n as f64 / self.nx as f64
    }

    pub fn y_node(&self, j: usize) -> f64 {
        j as f64 / self.ny as f64
    }

    /// Same grid with both resolutions doubled.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx,
            ny: 2 * self.ny,
            lx: self.lx,
        }
    }
}
