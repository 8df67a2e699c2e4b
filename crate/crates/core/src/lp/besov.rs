use std::io::Write;

use crate::error::{Error, Result};
use crate::field::SpectralField;

use super::filter::DyadicFilterBank;

/// Per-block L² norms of one field at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockNorms {
    pub q_min: i32,
    /// `‖Δ_q f‖_{L²}` for `q = q_min..=q_max`.
    pub blocks: Vec<f64>,
    /// Norm of the catch-all `ψ(2^{-q_min}D) f` (the horizontal mean on default banks).
    pub low: f64,
}

impl BlockNorms {
    pub fn besov(&self, s: f64) -> f64 {
        self.blocks
            .iter()
            .enumerate()
            .map(|(n, b)| 2f64.powf((self.q_min + n as i32) as f64 * s) * b)
            .sum()
    }

    pub fn besov_with_mean(&self, s: f64) -> f64 {
        self.besov(s) + 2f64.powf((self.q_min - 1) as f64 * s) * self.low
    }

    /// Block-wise Euclidean combination of a tuple of fields.
    pub fn combine(parts: &[&BlockNorms]) -> Result<BlockNorms> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("empty tuple".into()))?;
        let mut blocks = vec![0.0; first.blocks.len()];
        let mut low = 0.0;
        for p in parts {
            if p.q_min != first.q_min || p.blocks.len() != blocks.len() {
                return Err(Error::Series("tuple members use different block sets".into()));
            }
            for (b, x) in blocks.iter_mut().zip(&p.blocks) {
                *b += x * x;
            }
            low += p.low * p.low;
        }
        Ok(BlockNorms {
            q_min: first.q_min,
            blocks: blocks.into_iter().map(f64::sqrt).collect(),
            low: low.sqrt(),
        })
    }

    pub fn scaled(&self, c: f64) -> BlockNorms {
        BlockNorms {
            q_min: self.q_min,
            blocks: self.blocks.iter().map(|b| b * c).collect(),
            low: self.low * c,
        }
    }
}

/// Block norms from per-mode vertical energies `∫|f̂_i|² dy`.
pub fn block_norms_from_energies(energies: &[f64], bank: &DyadicFilterBank) -> BlockNorms {
    let lx = bank.grid().lx();
    let blocks = bank
        .blocks()
        .map(|q| {
            let s: f64 = energies
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let w = bank.phi_at(q, i);
                    w * w * e
                })
                .sum();
            (lx * s).sqrt()
        })
        .collect();
    let low: f64 = energies
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let w = bank.psi_low(i);
            w * w * e
        })
        .sum();
    BlockNorms {
        q_min: bank.q_min(),
        blocks,
        low: (lx * low).sqrt(),
    }
}

pub fn block_l2_norms(f: &SpectralField, bank: &DyadicFilterBank) -> Result<BlockNorms> {
    bank.check_grid(f)?;
    Ok(block_norms_from_energies(&f.mode_energies(), bank))
}

/// `Σ_q 2^{qs} ‖Δ_q f‖_{L²}`, horizontal mean excluded. Validated for `s ∈ [-2, 3]`.
pub fn besov_norm(f: &SpectralField, s: f64, bank: &DyadicFilterBank) -> Result<f64> {
    Ok(block_l2_norms(f, bank)?.besov(s))
}

/// As [`besov_norm`] plus the catch-all block weighted by `2^{(q_min-1)s}`.
pub fn besov_norm_with_mean(f: &SpectralField, s: f64, bank: &DyadicFilterBank) -> Result<f64> {
    Ok(block_l2_norms(f, bank)?.besov_with_mean(s))
}

/// Besov norm of a tuple `(f_1, …, f_n)` with blocks `‖(Δ_q f_1, …, Δ_q f_n)‖_{L²}`.
pub fn besov_norm_tuple(fields: &[&SpectralField], s: f64, bank: &DyadicFilterBank) -> Result<f64> {
    let norms = fields
        .iter()
        .map(|f| block_l2_norms(f, bank))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&BlockNorms> = norms.iter().collect();
    Ok(BlockNorms::combine(&refs)?.besov(s))
}

/// Time exponent of a Chemin-Lerner norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeExponent {
    One,
    Two,
    Inf,
}

impl TimeExponent {
    pub fn label(self) -> &'static str {
        match self {
            TimeExponent::One => "1",
            TimeExponent::Two => "2",
            TimeExponent::Inf => "inf",
        }
    }
}

/// Sampled history of per-block L² norms.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSeries {
    q_min: i32,
    n_blocks: usize,
    s: f64,
    include_mean: bool,
    times: Vec<f64>,
    rows: Vec<BlockNorms>,
}

impl NormSeries {
    /// `include_mean` adds the catch-all block at index `q_min - 1` to every norm.
    pub fn new(bank: &DyadicFilterBank, s: f64, include_mean: bool) -> Self {
        Self {
            q_min: bank.q_min(),
            n_blocks: bank.num_blocks(),
            s,
            include_mean,
            times: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, norms: BlockNorms) -> Result<()> {
        if norms.q_min != self.q_min || norms.blocks.len() != self.n_blocks {
            return Err(Error::Series(format!(
                "block set [{}; {}] does not match series [{}; {}]",
                norms.q_min,
                norms.blocks.len(),
                self.q_min,
                self.n_blocks
            )));
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::Series(format!("time {t} not after {last}")));
            }
        }
        if norms.blocks.iter().any(|b| !(*b >= 0.0)) || !(norms.low >= 0.0) {
            return Err(Error::Series("negative or NaN block norm".into()));
        }
        self.times.push(t);
        self.rows.push(norms);
        Ok(())
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn with_s(&self, s: f64) -> NormSeries {
        NormSeries { s, ..self.clone() }
    }

    pub fn include_mean(&self) -> bool {
        self.include_mean
    }

    pub fn with_mean(&self, include_mean: bool) -> NormSeries {
        NormSeries {
            include_mean,
            ..self.clone()
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rows(&self) -> &[BlockNorms] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Multiplies the row at time `t` by `g(t)`, e.g. `e^{Rt}`.
    pub fn time_weighted(&self, g: impl Fn(f64) -> f64) -> NormSeries {
        let rows = self
            .times
            .iter()
            .zip(&self.rows)
            .map(|(&t, r)| r.scaled(g(t)))
            .collect();
        NormSeries {
            rows,
            ..self.clone()
        }
    }

    /// Block-wise Euclidean combination of series sampled at the same times.
    pub fn tuple(parts: &[&NormSeries]) -> Result<NormSeries> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Series("empty tuple".into()))?;
        let mut out = NormSeries {
            rows: Vec::with_capacity(first.rows.len()),
            ..(*first).clone()
        };
        for p in parts {
            if p.times != first.times {
                return Err(Error::Series("tuple members sampled at different times".into()));
            }
        }
        for n in 0..first.rows.len() {
            let row: Vec<&BlockNorms> = parts.iter().map(|p| &p.rows[n]).collect();
            out.rows.push(BlockNorms::combine(&row)?);
        }
        Ok(out)
    }

    /// Per-block columns including the catch-all when enabled, with their indices.
    fn columns(&self) -> Vec<(i32, Vec<f64>)> {
        let mut cols = Vec::new();
        if self.include_mean {
            cols.push((self.q_min - 1, self.rows.iter().map(|r| r.low).collect()));
        }
        for b in 0..self.n_blocks {
            cols.push((
                self.q_min + b as i32,
                self.rows.iter().map(|r| r.blocks[b]).collect(),
            ));
        }
        cols
    }

    /// CSV rows `t,q,block_l2`; the catch-all is written as `q_min - 1` when included.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "t,q,block_l2")?;
        for (t, r) in self.times.iter().zip(&self.rows) {
            if self.include_mean {
                writeln!(w, "{t:.12e},{},{:.12e}", self.q_min - 1, r.low)?;
            }
            for (b, v) in r.blocks.iter().enumerate() {
                writeln!(w, "{t:.12e},{},{v:.12e}", self.q_min + b as i32)?;
            }
        }
        Ok(())
    }
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

fn cl_norm_inner(series: &NormSeries, weight: Option<&[f64]>, p: TimeExponent) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::Series("empty series".into()));
    }
    let mut total = 0.0;
    for (q, col) in series.columns() {
        let block = match p {
            TimeExponent::Inf => col.iter().cloned().fold(0.0, f64::max),
            TimeExponent::One | TimeExponent::Two => {
                let e = if p == TimeExponent::One { 1 } else { 2 };
                let vals: Vec<f64> = col
                    .iter()
                    .enumerate()
                    .map(|(n, d)| weight.map_or(1.0, |w| w[n]) * d.powi(e))
                    .collect();
                let integral = trapezoid(&series.times, &vals);
                if e == 1 {
                    integral
                } else {
                    integral.sqrt()
                }
            }
        };
        total += 2f64.powf(q as f64 * series.s) * block;
    }
    Ok(total)
}

/// `Σ_q 2^{qs} (∫ ‖Δ_q f‖^p dt)^{1/p}` by trapezoid quadrature; `Inf` uses per-block suprema.
pub fn chemin_lerner_norm(series: &NormSeries, p: TimeExponent) -> Result<f64> {
    cl_norm_inner(series, None, p)
}

/// As [`chemin_lerner_norm`] with integrand `w(t) ‖Δ_q f‖^p`.
pub fn weighted_cl_norm(series: &NormSeries, weight: &[f64], p: TimeExponent) -> Result<f64> {
    if weight.len() != series.len() {
        return Err(Error::Series(format!(
            "weight has {} samples, series has {}",
            weight.len(),
            series.len()
        )));
    }
    if weight.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Series("negative weight".into()));
    }
    if p == TimeExponent::Inf {
        return Err(Error::Series("weighted norm needs a finite exponent".into()));
    }
    cl_norm_inner(series, Some(weight), p)
}
