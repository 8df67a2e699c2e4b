use serde::Serialize;

use crate::band::{apply_weight, tau_integrand, theta_integrand};
use crate::error::{Error, Result};
use crate::field::{Parity, SpectralField};
use crate::grid::StripGrid;
use crate::initial::analytic_band;
use crate::limit::{run_limit_from, v_from_u, LimitParams, LimitRun};
use crate::lp::{
    block_l2_norms, bony_split, chemin_lerner_norm, weighted_cl_norm, BlockNorms, DyadicFilterBank,
    NormSeries, TimeExponent,
};
use crate::pe::{run_pe_from, PeParams, PeRun};

use super::certificate::{CertificateReport, RunMeta};

/// The four trilinear estimates checked by [`lemma_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LemmaKind {
    /// `⟨u∂_x w, w⟩` against the `θ̇`-weighted `L̃²` norm of `w`.
    #[serde(rename = "uww")]
    Uww,
    /// `⟨v∂_y u, u⟩` against the `θ̇`-weighted `L̃²` norm of `u`.
    #[serde(rename = "vww-u")]
    VwwU,
    /// `⟨v∂_y T, T⟩` against `‖u_φ‖_{L̃^∞} ‖∇T_φ‖²_{L̃²}`.
    #[serde(rename = "vww-T")]
    VwwT,
    /// `ε²⟨v∂_y v, v⟩` against the `τ̇`-weighted norm of `(u, εv)`.
    #[serde(rename = "vvv")]
    Vvv,
}

impl LemmaKind {
    pub const ALL: [LemmaKind; 4] = [LemmaKind::Uww, LemmaKind::VwwU, LemmaKind::VwwT, LemmaKind::Vvv];

    pub fn name(self) -> &'static str {
        match self {
            LemmaKind::Uww => "uww",
            LemmaKind::VwwU => "vww-u",
            LemmaKind::VwwT => "vww-T",
            LemmaKind::Vvv => "vvv",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Whether samples come from the primitive equations (`Θ` weight, `τ̇` rate).
    pub fn uses_pe(self) -> bool {
        self == LemmaKind::Vvv
    }
}

/// Fields on a short time window with their weight radius and rate histories.
#[derive(Debug, Clone)]
pub struct LemmaSample {
    /// Aspect ratio of the generating run; zero for limit samples.
    pub eps: f64,
    pub times: Vec<f64>,
    /// Radius `a − λθ` (or `a − λτ`) at each time.
    pub radius: Vec<f64>,
    /// `θ̇` (or `τ̇`) at each time.
    pub rate: Vec<f64>,
    pub u: Vec<SpectralField>,
    pub temp: Vec<SpectralField>,
}

impl LemmaSample {
    pub fn new(
        eps: f64,
        times: Vec<f64>,
        radius: Vec<f64>,
        rate: Vec<f64>,
        u: Vec<SpectralField>,
        temp: Vec<SpectralField>,
    ) -> Result<Self> {
        let n = times.len();
        if n < 2 {
            return Err(Error::Sampling("lemma samples need at least two instants".into()));
        }
        if radius.len() != n || rate.len() != n || u.len() != n || temp.len() != n {
            return Err(Error::InvalidInput("lemma sample histories differ in length".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("lemma sample times must increase".into()));
        }
        for f in &u {
            f.expect_parity(Parity::DirichletSine)?;
        }
        for f in &temp {
            f.expect_parity(Parity::DirichletSine)?;
        }
        Ok(Self {
            eps,
            times,
            radius,
            rate,
            u,
            temp,
        })
    }

    pub fn grid(&self) -> &StripGrid {
        self.u[0].grid()
    }

    pub fn from_limit_run(run: &LimitRun, bank: &DyadicFilterBank) -> Result<Self> {
        let rate = run
            .samples
            .iter()
            .map(|s| theta_integrand(&apply_weight(&s.u, s.radius)?, bank))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            0.0,
            run.samples.iter().map(|s| s.t).collect(),
            run.samples.iter().map(|s| s.radius).collect(),
            rate,
            run.samples.iter().map(|s| s.u.clone()).collect(),
            run.samples.iter().map(|s| s.temp.clone()).collect(),
        )
    }

    pub fn from_pe_run(run: &PeRun, bank: &DyadicFilterBank) -> Result<Self> {
        let eps = run.params.eps;
        let rate = run
            .samples
            .iter()
            .map(|s| {
                let u = apply_weight(&s.u, s.radius)?;
                let v = apply_weight(&v_from_u(&s.u)?, s.radius)?;
                tau_integrand(&u, &v, eps, bank)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            eps,
            run.samples.iter().map(|s| s.t).collect(),
            run.samples.iter().map(|s| s.radius).collect(),
            rate,
            run.samples.iter().map(|s| s.u.clone()).collect(),
            run.samples.iter().map(|s| s.temp.clone()).collect(),
        )
    }

    /// Every field multiplied by `c` (rates scale with it).
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rate: self.rate.iter().map(|r| r * c.abs()).collect(),
            u: self.u.iter().map(|f| f.scaled(c)).collect(),
            temp: self.temp.iter().map(|f| f.scaled(c)).collect(),
            ..self.clone()
        }
    }
}

/// How the nonlinear term entering the pairing is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingRoute {
    /// Sum of the paraproduct and remainder pieces.
    Bony,
    /// Pointwise product.
    Direct,
}

/// `Re Σ_j ŵ_j n̂_ij conj(f̂_ij)` per horizontal mode with the collocation quadrature weights.
fn mode_pairings(n: &SpectralField, f: &SpectralField) -> Vec<f64> {
    let f = f.to_nodal();
    let ny = n.grid().ny();
    (0..n.grid().nx())
        .map(|i| {
            let a = n.column(i);
            let b = f.column(i);
            let dot = |j: usize| (a[j] * b[j].conj()).re;
            ((1..ny).map(dot).sum::<f64>() + 0.5 * (dot(0) + dot(ny))) / ny as f64
        })
        .collect()
}

fn product(a: &SpectralField, b: &SpectralField, route: PairingRoute, bank: &DyadicFilterBank) -> Result<Vec<SpectralField>> {
    match route {
        PairingRoute::Bony => {
            let p = bony_split(a, b, bank, true)?;
            Ok(vec![p.para_ab, p.para_ba, p.remainder])
        }
        PairingRoute::Direct => {
            let phys = a.to_physical().mul(&b.to_physical());
            Ok(vec![SpectralField::from_physical(&phys, Parity::Collocation).dealiased()])
        }
    }
}

/// `(a, b, f)` with `N = a·b` paired against `f` at one instant.
fn factors(kind: LemmaKind, u: &SpectralField, temp: &SpectralField) -> Result<[SpectralField; 3]> {
    Ok(match kind {
        LemmaKind::Uww => [u.clone(), temp.dx(), temp.clone()],
        LemmaKind::VwwU => [v_from_u(u)?, u.dy(), u.clone()],
        LemmaKind::VwwT => [v_from_u(u)?, temp.dy(), temp.clone()],
        LemmaKind::Vvv => {
            let v = v_from_u(u)?;
            let dv = v.dy();
            [v.clone(), dv, v]
        }
    })
}

/// `Σ_q 2^{2qs} ∫ |⟨e^{Rt}Δ_q N_φ, e^{Rt}Δ_q f_φ⟩| dt` (times `ε²` for `vvv`).
pub fn lemma_lhs(
    kind: LemmaKind,
    sample: &LemmaSample,
    s: f64,
    r: f64,
    bank: &DyadicFilterBank,
    route: PairingRoute,
) -> Result<f64> {
    bank.check_grid(&sample.u[0])?;
    let grid = *sample.grid();
    let blocks: Vec<i32> = bank.blocks().collect();
    // per time, per block: the weighted pairing
    let mut pairings = vec![vec![0.0; sample.times.len()]; blocks.len()];
    for (n, (u, temp)) in sample.u.iter().zip(&sample.temp).enumerate() {
        let [a, b, f] = factors(kind, u, temp)?;
        let mut cross = vec![0.0; grid.nx()];
        for piece in product(&a, &b, route, bank)? {
            for (c, p) in cross.iter_mut().zip(mode_pairings(&piece, &f)) {
                *c += p;
            }
        }
        let rad = sample.radius[n];
        let grow = (2.0 * r * sample.times[n]).exp();
        for (bq, &q) in blocks.iter().enumerate() {
            let mut acc = 0.0;
            for (i, c) in cross.iter().enumerate() {
                let w = bank.phi_at(q, i);
                if w != 0.0 {
                    acc += w * w * (2.0 * rad * grid.xi(i).abs()).exp() * c;
                }
            }
            pairings[bq][n] = grow * grid.lx() * acc;
        }
    }
    let mut total = 0.0;
    for (bq, &q) in blocks.iter().enumerate() {
        let vals: Vec<f64> = pairings[bq].iter().map(|p| p.abs()).collect();
        total += 2f64.powf(2.0 * q as f64 * s) * trapezoid(&sample.times, &vals);
    }
    let pre = if kind == LemmaKind::Vvv {
        sample.eps * sample.eps
    } else {
        1.0
    };
    Ok(pre * total)
}

fn trapezoid(t: &[f64], v: &[f64]) -> f64 {
    t.windows(2)
        .zip(v.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

fn weighted_series(
    sample: &LemmaSample,
    bank: &DyadicFilterBank,
    s: f64,
    r: f64,
    norms: impl Fn(usize, f64) -> Result<BlockNorms>,
) -> Result<NormSeries> {
    let mut series = NormSeries::new(bank, s, false);
    for (n, &t) in sample.times.iter().enumerate() {
        series.push(t, norms(n, sample.radius[n])?.scaled((r * t).exp()))?;
    }
    Ok(series)
}

/// Right-hand side of the estimate without its constant.
pub fn lemma_rhs(kind: LemmaKind, sample: &LemmaSample, s: f64, r: f64, bank: &DyadicFilterBank) -> Result<f64> {
    let b = |f: &SpectralField, rad: f64| block_l2_norms(&apply_weight(f, rad)?, bank);
    match kind {
        LemmaKind::Uww | LemmaKind::VwwU => {
            let fields = if kind == LemmaKind::Uww {
                &sample.temp
            } else {
                &sample.u
            };
            let series = weighted_series(sample, bank, s + 0.5, r, |n, rad| b(&fields[n], rad))?;
            Ok(weighted_cl_norm(&series, &sample.rate, TimeExponent::Two)?.powi(2))
        }
        LemmaKind::VwwT => {
            let mut u_sup = NormSeries::new(bank, 0.5, false);
            for (n, &t) in sample.times.iter().enumerate() {
                u_sup.push(t, b(&sample.u[n], sample.radius[n])?)?;
            }
            let grad = weighted_series(sample, bank, s, r, |n, rad| {
                let t = &sample.temp[n];
                BlockNorms::combine(&[&b(&t.dx(), rad)?, &b(&t.dy(), rad)?])
            })?;
            Ok(chemin_lerner_norm(&u_sup, TimeExponent::Inf)?
                * chemin_lerner_norm(&grad, TimeExponent::Two)?.powi(2))
        }
        LemmaKind::Vvv => {
            let eps = sample.eps;
            let series = weighted_series(sample, bank, s + 0.5, r, |n, rad| {
                let u = &sample.u[n];
                let v = v_from_u(u)?;
                BlockNorms::combine(&[&b(u, rad)?, &b(&v, rad)?.scaled(eps)])
            })?;
            Ok(weighted_cl_norm(&series, &sample.rate, TimeExponent::Two)?.powi(2))
        }
    }
}

/// Both pairing routes and the right-hand side for one sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LemmaEvaluation {
    pub kind: LemmaKind,
    pub s: f64,
    pub lhs_bony: f64,
    pub lhs_direct: f64,
    pub rhs: f64,
}

impl LemmaEvaluation {
    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs_bony / self.rhs
        } else if self.lhs_bony == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Relative gap between the two routes.
    pub fn route_gap(&self) -> f64 {
        let scale = self.lhs_bony.abs().max(self.lhs_direct.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.lhs_bony - self.lhs_direct).abs() / scale
        }
    }

    pub fn certificate(&self, budget: f64, meta: RunMeta) -> Result<CertificateReport> {
        CertificateReport::judge(
            format!("lemma_{}", self.kind.name()),
            self.lhs_bony,
            self.rhs,
            1.0,
            budget,
            meta,
        )
    }
}

pub fn lemma_ratio(
    kind: LemmaKind,
    sample: &LemmaSample,
    s: f64,
    r: f64,
    bank: &DyadicFilterBank,
) -> Result<LemmaEvaluation> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidInput(format!("index s = {s} outside (0, 1]")));
    }
    if kind.uses_pe() && !(sample.eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "{} needs a sample from the primitive equations",
            kind.name()
        )));
    }
    Ok(LemmaEvaluation {
        kind,
        s,
        lhs_bony: lemma_lhs(kind, sample, s, r, bank, PairingRoute::Bony)?,
        lhs_direct: lemma_lhs(kind, sample, s, r, bank, PairingRoute::Direct)?,
        rhs: lemma_rhs(kind, sample, s, r, bank)?,
    })
}

/// Generator of synthetic samples: analytic band data evolved for a few steps.
#[derive(Debug, Clone, Copy)]
pub struct SampleFamily {
    pub grid: StripGrid,
    pub a: f64,
    pub lambda: f64,
    pub amplitude: f64,
    pub band: usize,
    pub modes: usize,
    pub steps: usize,
    pub dt: f64,
    /// Aspect ratio of the `vvv` samples.
    pub eps: f64,
    pub seed: u64,
}

impl SampleFamily {
    /// Band of 8 horizontal and 8 vertical modes on a `32 × 32` strip of length `lx`.
    pub fn reference(lx: f64) -> Result<Self> {
        Ok(Self {
            grid: StripGrid::new(32, 32, lx)?,
            a: 0.5,
            lambda: 1.0,
            amplitude: 0.1,
            band: 8,
            modes: 8,
            steps: 10,
            dt: 1e-3,
            eps: 0.5,
            seed: 1,
        })
    }

    /// Same family on a grid with doubled resolution.
    pub fn refined(&self) -> Self {
        Self {
            grid: self.grid.refined(),
            ..*self
        }
    }

    pub fn sample(&self, kind: LemmaKind, index: u64, bank: &DyadicFilterBank) -> Result<LemmaSample> {
        let (u, t) = analytic_band(
            self.grid,
            self.a,
            self.amplitude,
            self.band,
            self.modes,
            self.seed.wrapping_add(index),
            bank,
        )?;
        if kind.uses_pe() {
            let run = run_pe_from(&u, &t, PeParams::new(self.eps, self.dt), self.steps, 1, self.a, self.lambda)?;
            LemmaSample::from_pe_run(&run, bank)
        } else {
            let run = run_limit_from(&u, &t, LimitParams::new(self.dt), self.steps, 1, self.a, self.lambda)?;
            LemmaSample::from_limit_run(&run, bank)
        }
    }
}

/// Maximum ratio and route gap of one kind over `count` samples.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FamilyRatios {
    pub kind: LemmaKind,
    pub max_ratio: f64,
    pub max_route_gap: f64,
}

pub fn family_ratios(
    kind: LemmaKind,
    family: &SampleFamily,
    count: usize,
    s: f64,
    r: f64,
) -> Result<FamilyRatios> {
    let bank = DyadicFilterBank::new(family.grid)?;
    let mut out = FamilyRatios {
        kind,
        max_ratio: 0.0,
        max_route_gap: 0.0,
    };
    for n in 0..count as u64 {
        let sample = family.sample(kind, n, &bank)?;
        let e = lemma_ratio(kind, &sample, s, r, &bank)?;
        out.max_ratio = out.max_ratio.max(e.ratio());
        out.max_route_gap = out.max_route_gap.max(e.route_gap());
    }
    Ok(out)
}

/// Empirical constant `C` of the trilinear estimates and the rate `λ = 2C²`.
#[derive(Debug, Clone, Serialize)]
pub struct FittedConstant {
    pub c: f64,
    pub lambda: f64,
    pub ratios: Vec<FamilyRatios>,
}

/// `C = max{4, 1/(2R), max ratio over all kinds}` at `s = ½`, floor values
/// taken so that `λ = 2C²` dominates the weight rate.
pub fn fitted_constant(family: &SampleFamily, count: usize, r: f64) -> Result<FittedConstant> {
    let ratios = LemmaKind::ALL
        .into_iter()
        .map(|k| family_ratios(k, family, count, 0.5, r))
        .collect::<Result<Vec<_>>>()?;
    let c = ratios
        .iter()
        .map(|f| f.max_ratio)
        .fold(4f64.max(1.0 / (2.0 * r)), f64::max);
    Ok(FittedConstant {
        c,
        lambda: 2.0 * c * c,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::dyadic_block;
    use std::f64::consts::PI;

    const R: f64 = PI * PI / 2.0;

    fn family() -> SampleFamily {
        let mut f = SampleFamily::reference(2.0 * PI).unwrap();
        f.grid = StripGrid::new(16, 16, 2.0 * PI).unwrap();
        f.band = 4;
        f.modes = 6;
        f.steps = 4;
        f
    }

    #[test]
    fn zero_fields_give_zero_sides() {
        let f = family();
        let bank = DyadicFilterBank::new(f.grid).unwrap();
        let z = SpectralField::zeros(f.grid, Parity::DirichletSine);
        let s = LemmaSample::new(
            0.5,
            vec![0.0, 0.1],
            vec![0.5, 0.5],
            vec![0.0, 0.0],
            vec![z.clone(), z.clone()],
            vec![z.clone(), z],
        )
        .unwrap();
        for k in LemmaKind::ALL {
            let e = lemma_ratio(k, &s, 0.5, R, &bank).unwrap();
            assert_eq!((e.lhs_bony, e.lhs_direct, e.rhs), (0.0, 0.0, 0.0));
            assert_eq!(e.ratio(), 0.0);
        }
    }

    #[test]
    fn routes_agree_on_evolved_samples() {
        let f = family();
        let bank = DyadicFilterBank::new(f.grid).unwrap();
        for k in LemmaKind::ALL {
            let s = f.sample(k, 3, &bank).unwrap();
            let e = lemma_ratio(k, &s, 0.5, R, &bank).unwrap();
            assert!(e.lhs_bony > 0.0 && e.rhs > 0.0, "{e:?}");
            assert!(e.route_gap() < 1e-10, "{e:?}");
            assert!(e.ratio().is_finite());
        }
    }

    // Pairing built from point evaluations, library filters and inner products.
    #[test]
    fn pairing_matches_pointwise_oracle() {
        let g = StripGrid::new(16, 16, 2.0 * PI).unwrap();
        let bank = DyadicFilterBank::new(g).unwrap();
        let u = SpectralField::from_fn(g, Parity::DirichletSine, |x, y| {
            (x.cos() + 0.5 * (2.0 * x).sin()) * ((PI * y).sin() + 0.6 * (2.0 * PI * y).sin())
        });
        let w = SpectralField::from_fn(g, Parity::DirichletSine, |x, y| {
            (2.0 * x).sin() * (PI * y).sin()
                + 0.3 * (3.0 * x).cos() * (2.0 * PI * y).sin()
                + 0.5 * x.cos() * (3.0 * PI * y).sin()
        });
        let (rad, s) = (0.3, 0.5);
        let sample = LemmaSample::new(
            0.0,
            vec![0.0, 0.2],
            vec![rad, rad],
            vec![1.0, 1.0],
            vec![u.clone(), u.clone()],
            vec![w.clone(), w.clone()],
        )
        .unwrap();
        let wx = w.dx();
        let prod = crate::field::PhysicalField::from_fn(g, |x, y| u.eval(x, y) * wx.eval(x, y));
        let n = apply_weight(&SpectralField::from_physical(&prod, Parity::Collocation).dealiased(), rad).unwrap();
        let f = apply_weight(&w, rad).unwrap().to_nodal();
        let mut per_time = 0.0;
        for q in bank.blocks() {
            let p = dyadic_block(&n, q, &bank)
                .unwrap()
                .inner(&dyadic_block(&f, q, &bank).unwrap())
                .unwrap();
            per_time += 2f64.powf(2.0 * q as f64 * s) * p.abs();
        }
        let lhs = lemma_lhs(LemmaKind::Uww, &sample, s, R, &bank, PairingRoute::Direct).unwrap();
        // trapezoid of e^{2Rt} over the two instants
        let quad = per_time * 0.1 * (1.0 + (2.0 * R * 0.2).exp());
        assert!(per_time > 1e-3, "{per_time}");
        assert!((lhs - quad).abs() < 1e-10 * quad, "{lhs} vs {quad}");
    }

    #[test]
    fn ratio_is_amplitude_invariant() {
        let f = family();
        let bank = DyadicFilterBank::new(f.grid).unwrap();
        for k in LemmaKind::ALL {
            let s = f.sample(k, 5, &bank).unwrap();
            let e1 = lemma_ratio(k, &s, 0.5, R, &bank).unwrap();
            let e2 = lemma_ratio(k, &s.scaled(3.0), 0.5, R, &bank).unwrap();
            assert!((e1.ratio() / e2.ratio() - 1.0).abs() < 1e-10, "{k:?}");
        }
    }

    #[test]
    fn rejects_bad_index_and_limit_sample_for_vvv() {
        let f = family();
        let bank = DyadicFilterBank::new(f.grid).unwrap();
        let s = f.sample(LemmaKind::Uww, 0, &bank).unwrap();
        assert!(lemma_ratio(LemmaKind::Uww, &s, 1.5, R, &bank).is_err());
        assert!(lemma_ratio(LemmaKind::Vvv, &s, 0.5, R, &bank).is_err());
        assert_eq!(LemmaKind::from_name("vww-T"), Some(LemmaKind::VwwT));
    }

    #[test]
    fn fitted_constant_has_floor() {
        let f = family();
        let c = fitted_constant(&f, 2, R).unwrap();
        assert!(c.c >= 4.0);
        assert!((c.lambda - 2.0 * c.c * c.c).abs() < 1e-12);
        assert_eq!(c.ratios.len(), 4);
    }
}
