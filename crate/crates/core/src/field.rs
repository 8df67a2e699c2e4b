use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::StripGrid;
use crate::transform;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Vertical representation of a [`SpectralField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    /// `Σ_{m=1}^{ny-1} a_m sin(mπy)`; vanishes at both walls.
    DirichletSine,
    /// `Σ_{m=0}^{ny} c_m cos(mπy)`.
    NeumannCosine,
    /// Nodal values at `y_j = j/ny`, `j = 0..=ny`.
    Collocation,
}

impl Parity {
    pub fn vertical_len(self, ny: usize) -> usize {
        match self {
            Parity::DirichletSine => ny - 1,
            Parity::NeumannCosine | Parity::Collocation => ny + 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parity::DirichletSine => "dirichlet-sine",
            Parity::NeumannCosine => "neumann-cosine",
            Parity::Collocation => "collocation",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "dirichlet-sine" => Some(Parity::DirichletSine),
            "neumann-cosine" => Some(Parity::NeumannCosine),
            "collocation" => Some(Parity::Collocation),
            _ => None,
        }
    }
}

/// Real scalar field on the strip in horizontal-Fourier × vertical form.
///
/// Storage is row-major by horizontal mode: `data[i * vlen + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: StripGrid,
    parity: Parity,
    data: Vec<Complex64>,
}

/// Real point values on the `nx × (ny+1)` node lattice, `values[j * nx + n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: StripGrid,
    values: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(grid: StripGrid, parity: Parity) -> Self {
        let len = grid.nx() * parity.vertical_len(grid.ny());
        Self {
            grid,
            parity,
            data: vec![ZERO; len],
        }
    }

    pub fn from_coefficients(grid: StripGrid, parity: Parity, data: Vec<Complex64>) -> Result<Self> {
        let len = grid.nx() * parity.vertical_len(grid.ny());
        if data.len() != len {
            return Err(Error::InvalidInput(format!(
                "expected {len} coefficients, got {}",
                data.len()
            )));
        }
        Ok(Self { grid, parity, data })
    }

    /// Samples `f` on the node lattice and transforms into `parity`.
    pub fn from_fn(grid: StripGrid, parity: Parity, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_physical(&PhysicalField::from_fn(grid, f), parity)
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn vlen(&self) -> usize {
        self.parity.vertical_len(self.grid.ny())
    }

    pub fn column(&self, i: usize) -> &[Complex64] {
        let v = self.vlen();
        &self.data[i * v..(i + 1) * v]
    }

    pub fn column_mut(&mut self, i: usize) -> &mut [Complex64] {
        let v = self.vlen();
        &mut self.data[i * v..(i + 1) * v]
    }

    /// Sets vertical entry `j` of wavenumber `k` and its conjugate partner.
    ///
    /// For `k = 0` only the real part is kept.
    pub fn set_real_mode(&mut self, k: i64, j: usize, value: Complex64) -> Result<()> {
        let i = self
            .grid
            .index_of(k)
            .ok_or_else(|| Error::InvalidInput(format!("wavenumber {k} not on grid")))?;
        let v = self.vlen();
        if j >= v {
            return Err(Error::InvalidInput(format!("vertical index {j} >= {v}")));
        }
        if k == 0 {
            self.data[j] = Complex64::new(value.re, 0.0);
            return Ok(());
        }
        let ic = self
            .grid
            .index_of(-k)
            .ok_or_else(|| Error::InvalidInput(format!("wavenumber {} not on grid", -k)))?;
        self.data[i * v + j] = value;
        self.data[ic * v + j] = value.conj();
        Ok(())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.parity != other.parity {
            return Err(Error::ParityMismatch {
                expected: self.parity.name(),
                found: other.parity.name(),
            });
        }
        Ok(())
    }

    pub fn expect_parity(&self, parity: Parity) -> Result<()> {
        if self.parity != parity {
            return Err(Error::ParityMismatch {
                expected: parity.name(),
                found: self.parity.name(),
            });
        }
        Ok(())
    }

    pub fn from_physical(phys: &PhysicalField, parity: Parity) -> Self {
        let grid = phys.grid;
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut nodal = vec![ZERO; nx * (ny + 1)];
        let mut row = vec![ZERO; nx];
        for j in 0..=ny {
            for (n, r) in row.iter_mut().enumerate() {
                *r = Complex64::new(phys.values[j * nx + n], 0.0);
            }
            transform::horizontal_forward(&mut row);
            for i in 0..nx {
                nodal[i * (ny + 1) + j] = row[i];
            }
        }
        let colloc = Self {
            grid,
            parity: Parity::Collocation,
            data: nodal,
        };
        colloc.to_parity(parity)
    }

    /// Nodal (collocation) representation of the same interpolant.
    pub fn to_nodal(&self) -> SpectralField {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        match self.parity {
            Parity::Collocation => self.clone(),
            Parity::DirichletSine => {
                let mut out = Self::zeros(self.grid, Parity::Collocation);
                for i in 0..nx {
                    let f = transform::sine_inverse(self.column(i));
                    out.column_mut(i)[1..ny].copy_from_slice(&f);
                }
                out
            }
            Parity::NeumannCosine => {
                let mut out = Self::zeros(self.grid, Parity::Collocation);
                for i in 0..nx {
                    let f = transform::cosine_inverse(self.column(i));
                    out.column_mut(i).copy_from_slice(&f);
                }
                out
            }
        }
    }

    /// Re-expresses the nodal interpolant in `parity`.
    ///
    /// Converting to sine discards wall values.
    pub fn to_parity(&self, parity: Parity) -> SpectralField {
        if parity == self.parity {
            return self.clone();
        }
        let nodal = self.to_nodal();
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut out = Self::zeros(self.grid, parity);
        for i in 0..nx {
            let col = nodal.column(i);
            match parity {
                Parity::Collocation => out.column_mut(i).copy_from_slice(col),
                Parity::DirichletSine => {
                    let a = transform::sine_forward(&col[1..ny]);
                    out.column_mut(i).copy_from_slice(&a);
                }
                Parity::NeumannCosine => {
                    let c = transform::cosine_forward(col);
                    out.column_mut(i).copy_from_slice(&c);
                }
            }
        }
        out
    }

    pub fn to_physical(&self) -> PhysicalField {
        let nodal = self.to_nodal();
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut values = vec![0.0; nx * (ny + 1)];
        let mut row = vec![ZERO; nx];
        for j in 0..=ny {
            for (i, r) in row.iter_mut().enumerate() {
                *r = nodal.data[i * (ny + 1) + j];
            }
            transform::horizontal_inverse(&mut row);
            for n in 0..nx {
                values[j * nx + n] = row[n].re;
            }
        }
        PhysicalField {
            grid: self.grid,
            values,
        }
    }

    /// Horizontal derivative.
    pub fn dx(&self) -> SpectralField {
        let mut out = self.clone();
        let v = self.vlen();
        for i in 0..self.grid.nx() {
            let m = if self.grid.is_nyquist(i) {
                ZERO
            } else {
                Complex64::new(0.0, self.grid.xi(i))
            };
            for c in &mut out.data[i * v..(i + 1) * v] {
                *c *= m;
            }
        }
        out
    }

    /// Vertical derivative. Sine maps to cosine, cosine and collocation map to sine.
    pub fn dy(&self) -> SpectralField {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        match self.parity {
            Parity::DirichletSine => {
                let mut out = Self::zeros(self.grid, Parity::NeumannCosine);
                for i in 0..nx {
                    let a = self.column(i).to_vec();
                    let c = out.column_mut(i);
                    for m in 1..ny {
                        c[m] = a[m - 1] * (m as f64 * PI);
                    }
                }
                out
            }
            Parity::NeumannCosine => {
                let mut out = Self::zeros(self.grid, Parity::DirichletSine);
                for i in 0..nx {
                    let c = self.column(i).to_vec();
                    let a = out.column_mut(i);
                    for m in 1..ny {
                        a[m - 1] = c[m] * (-(m as f64) * PI);
                    }
                }
                out
            }
            Parity::Collocation => self.to_parity(Parity::NeumannCosine).dy(),
        }
    }

    /// `∫_0^y f ds` for a sine field, exact in cosine form.
    pub fn antiderivative_y(&self) -> Result<SpectralField> {
        self.expect_parity(Parity::DirichletSine)?;
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut out = Self::zeros(self.grid, Parity::NeumannCosine);
        for i in 0..nx {
            let a = self.column(i).to_vec();
            let c = out.column_mut(i);
            for m in 1..ny {
                let s = a[m - 1] / (m as f64 * PI);
                c[0] += s;
                c[m] -= s;
            }
        }
        Ok(out)
    }

    /// `∫_0^1 f̂_i(y) dy` for horizontal mode `i`.
    pub fn column_mean(&self, i: usize) -> Complex64 {
        let col = self.column(i);
        let ny = self.grid.ny();
        match self.parity {
            Parity::DirichletSine => col
                .iter()
                .enumerate()
                .filter(|(j, _)| j % 2 == 0)
                .map(|(j, a)| a * (2.0 / ((j + 1) as f64 * PI)))
                .sum(),
            Parity::NeumannCosine => col[0],
            Parity::Collocation => {
                let inner: Complex64 = col[1..ny].iter().sum();
                (inner + (col[0] + col[ny]) * 0.5) / ny as f64
            }
        }
    }

    /// `∫_0^1 |f̂_i(y)|² dy` for horizontal mode `i`.
    pub fn column_energy(&self, i: usize) -> f64 {
        let col = self.column(i);
        let ny = self.grid.ny();
        match self.parity {
            Parity::DirichletSine => 0.5 * col.iter().map(|a| a.norm_sqr()).sum::<f64>(),
            Parity::NeumannCosine => {
                col[0].norm_sqr() + 0.5 * col[1..].iter().map(|a| a.norm_sqr()).sum::<f64>()
            }
            Parity::Collocation => {
                let inner: f64 = col[1..ny].iter().map(|a| a.norm_sqr()).sum();
                (inner + 0.5 * (col[0].norm_sqr() + col[ny].norm_sqr())) / ny as f64
            }
        }
    }

    /// Per-mode vertical energies, indexed by storage index.
    pub fn mode_energies(&self) -> Vec<f64> {
        (0..self.grid.nx()).map(|i| self.column_energy(i)).collect()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.lx() * self.mode_energies().iter().sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Real L² inner product over the strip.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.check_same(other)?;
        let ny = self.grid.ny();
        let v = self.vlen();
        let mut acc = 0.0;
        for i in 0..self.grid.nx() {
            let a = &self.data[i * v..(i + 1) * v];
            let b = &other.data[i * v..(i + 1) * v];
            let dot = |j: usize| (a[j] * b[j].conj()).re;
            acc += match self.parity {
                Parity::DirichletSine => 0.5 * (0..v).map(dot).sum::<f64>(),
                Parity::NeumannCosine => dot(0) + 0.5 * (1..v).map(dot).sum::<f64>(),
                Parity::Collocation => {
                    ((1..ny).map(dot).sum::<f64>() + 0.5 * (dot(0) + dot(ny))) / ny as f64
                }
            };
        }
        Ok(self.grid.lx() * acc)
    }

    /// Applies a real horizontal multiplier `m(storage index, ξ)`.
    pub fn map_modes(&self, m: impl Fn(usize, f64) -> f64) -> SpectralField {
        let mut out = self.clone();
        let v = self.vlen();
        for i in 0..self.grid.nx() {
            let s = m(i, self.grid.xi(i));
            for c in &mut out.data[i * v..(i + 1) * v] {
                *c *= s;
            }
        }
        out
    }

    /// Zeroes modes beyond the 2/3 cutoff and the Nyquist mode.
    pub fn dealiased(&self) -> SpectralField {
        let kmax = self.grid.dealias_cutoff() as i64;
        let g = self.grid;
        self.map_modes(|i, _| if g.wavenumber(i).abs() <= kmax { 1.0 } else { 0.0 })
    }

    /// Copy with every mode except `k = 0` removed.
    pub fn mean_mode(&self) -> SpectralField {
        self.map_modes(|i, _| if i == 0 { 1.0 } else { 0.0 })
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        let mut out = self.clone();
        for c in &mut out.data {
            *c *= s;
        }
        out
    }

    pub fn try_add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| *c == ZERO)
    }

    /// Direct evaluation of the represented function at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.grid.nx() {
            let col = self.column(i);
            let vert: Complex64 = match self.parity {
                Parity::DirichletSine => col
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * ((j + 1) as f64 * PI * y).sin())
                    .sum(),
                Parity::NeumannCosine => col
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * (j as f64 * PI * y).cos())
                    .sum(),
                Parity::Collocation => {
                    let c = transform::cosine_forward(col);
                    c.iter()
                        .enumerate()
                        .map(|(j, a)| a * (j as f64 * PI * y).cos())
                        .sum()
                }
            };
            let phase = Complex64::new(0.0, self.grid.xi(i) * x).exp();
            acc += (vert * phase).re;
        }
        acc
    }

    /// `sup_x |∫_0^1 f dy|` and the same with the horizontal mean removed.
    pub fn column_mean_sup(&self) -> (f64, f64) {
        let nx = self.grid.nx();
        let mut row: Vec<Complex64> = (0..nx).map(|i| self.column_mean(i)).collect();
        let mean = row[0].re;
        transform::horizontal_inverse(&mut row);
        let full = row.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
        let fluct = row.iter().map(|c| (c.re - mean).abs()).fold(0.0, f64::max);
        (full, fluct)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.try_add(rhs).expect("field addition requires matching grid and parity")
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.try_sub(rhs).expect("field subtraction requires matching grid and parity")
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

impl PhysicalField {
    pub fn from_fn(grid: StripGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut values = Vec::with_capacity(nx * (ny + 1));
        for j in 0..=ny {
            let y = grid.y_node(j);
            for n in 0..nx {
                values.push(f(grid.x_node(n), y));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx() + n]
    }

    /// Pointwise product.
    pub fn mul(&self, other: &PhysicalField) -> PhysicalField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        PhysicalField {
            grid: self.grid,
            values,
        }
    }

    /// `Σ c_i f_i` for matching lattices.
    pub fn combine(terms: &[(f64, &PhysicalField)]) -> PhysicalField {
        let grid = terms[0].1.grid;
        let mut values = vec![0.0; terms[0].1.values.len()];
        for (c, f) in terms {
            for (v, x) in values.iter_mut().zip(&f.values) {
                *v += c * x;
            }
        }
        PhysicalField { grid, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Pseudospectral product `a·b` in collocation form, 2/3-truncated when `dealias`.
pub fn product(a: &SpectralField, b: &SpectralField, dealias: bool) -> Result<SpectralField> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let p = a.to_physical().mul(&b.to_physical());
    let out = SpectralField::from_physical(&p, Parity::Collocation);
    Ok(if dealias { out.dealiased() } else { out })
}
