use std::io::Write;

use serde::Serialize;

use crate::band::apply_weight;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::StripGrid;
use crate::limit::{LimitRun, RunStatus};
use crate::lp::{
    block_l2_norms, chemin_lerner_norm, BlockNorms, DyadicFilterBank, NormSeries, TimeExponent,
};
use crate::pe::{weighted_families, PeRun, PeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateStatus {
    Holds,
    Violated,
    /// Zero right-hand side, or a run whose analytic band closed early.
    Degenerate,
}

impl CertificateStatus {
    pub fn name(self) -> &'static str {
        match self {
            CertificateStatus::Holds => "holds",
            CertificateStatus::Violated => "violated",
            CertificateStatus::Degenerate => "degenerate",
        }
    }
}

/// Resolution and step of the run a certificate was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunMeta {
    pub nx: usize,
    pub ny: usize,
    pub eps: Option<f64>,
    pub dt: f64,
}

impl RunMeta {
    pub fn new(grid: &StripGrid, eps: Option<f64>, dt: f64) -> Self {
        Self {
            nx: grid.nx(),
            ny: grid.ny(),
            eps,
            dt,
        }
    }
}

/// One checked inequality `lhs ≤ budget · rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / (scale · rhs)` where `scale` is the constant's multiplicity in the bound.
    pub fitted_c: f64,
    pub budget: f64,
    pub status: CertificateStatus,
    pub meta: RunMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub const CERTIFICATE_CSV_HEADER: &str = "name,lhs,rhs,fitted_C,status,grid,eps,dt";

impl CertificateReport {
    /// Judges `lhs ≤ budget · rhs`; `scale` relates the fitted constant to the ratio.
    pub fn judge(
        name: impl Into<String>,
        lhs: f64,
        rhs: f64,
        scale: f64,
        budget: f64,
        meta: RunMeta,
    ) -> Result<Self> {
        if !(lhs >= 0.0 && rhs >= 0.0 && lhs.is_finite() && rhs.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "certificate sides must be finite and nonnegative, got {lhs} and {rhs}"
            )));
        }
        let fitted_c = if rhs > 0.0 {
            lhs / (scale * rhs)
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let status = if lhs > budget * rhs {
            CertificateStatus::Violated
        } else if rhs == 0.0 {
            CertificateStatus::Degenerate
        } else {
            CertificateStatus::Holds
        };
        Ok(Self {
            name: name.into(),
            lhs,
            rhs,
            fitted_c,
            budget,
            status,
            meta,
            note: None,
        })
    }

    /// Whether `lhs ≤ budget · rhs`, regardless of degeneracy.
    pub fn holds(&self) -> bool {
        self.lhs <= self.budget * self.rhs
    }

    fn degenerate(mut self, note: String) -> Self {
        self.status = CertificateStatus::Degenerate;
        self.note = Some(note);
        self
    }

    fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }

    pub fn csv_row(&self) -> String {
        let eps = self.meta.eps.map_or(String::new(), |e| format!("{e:.6e}"));
        format!(
            "{},{:.12e},{:.12e},{:.12e},{},{}x{},{},{:.6e}",
            self.name,
            self.lhs,
            self.rhs,
            self.fitted_c,
            self.status.name(),
            self.meta.nx,
            self.meta.ny,
            eps,
            self.meta.dt
        )
    }
}

pub fn write_certificates_csv(reports: &[CertificateReport], w: &mut impl Write) -> Result<()> {
    writeln!(w, "{CERTIFICATE_CSV_HEADER}")?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Whether the catch-all block enters the norms of a certificate.
///
/// Data without horizontal structure have vanishing `B^s` norms when the mean
/// is excluded; those are measured with the mean-inclusive variant instead.
pub fn needs_mean(initial: &[&SpectralField], bank: &DyadicFilterBank) -> Result<bool> {
    let mut structured = false;
    let mut mean = false;
    for f in initial {
        let b = block_l2_norms(f, bank)?;
        structured |= b.blocks.iter().any(|&x| x > 0.0);
        mean |= b.low > 0.0;
    }
    Ok(!structured && mean)
}

fn besov_of(norms: &BlockNorms, s: f64, with_mean: bool) -> f64 {
    if with_mean {
        norms.besov_with_mean(s)
    } else {
        norms.besov(s)
    }
}

fn weighted_tuple(fields: &[&SpectralField], radius: f64, bank: &DyadicFilterBank) -> Result<BlockNorms> {
    let norms = fields
        .iter()
        .map(|f| block_l2_norms(&apply_weight(f, radius)?, bank))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&BlockNorms> = norms.iter().collect();
    BlockNorms::combine(&refs)
}

fn named<'a>(series: &'a [(String, NormSeries)], name: &str) -> Result<&'a NormSeries> {
    series
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, s)| s)
        .ok_or_else(|| Error::Series(format!("run has no series `{name}`")))
}

fn exhausted_note(status: RunStatus) -> Option<String> {
    match status {
        RunStatus::Completed => None,
        RunStatus::BandExhausted { t } => Some(format!("analytic band exhausted at t = {t:.6}")),
    }
}

/// `‖e^{Rt}(u_φ,T_φ)‖_{L̃^∞(B^{1/2})} + ½‖e^{Rt}∂_y u_φ‖_{L̃²(B^{1/2})} ≤ 2C ‖e^{a|D|}(u_0,T_0)‖_{B^{1/2}}`.
pub fn certify_limit_energy(
    run: &LimitRun,
    bank: &DyadicFilterBank,
    r: f64,
    c: f64,
) -> Result<CertificateReport> {
    let first = run.initial();
    let mean = needs_mean(&[&first.u, &first.temp], bank)?;
    let grow = |t: f64| (r * t).exp();
    let state = NormSeries::tuple(&[
        named(&run.series, "u_phi@B0.5")?,
        named(&run.series, "temp_phi@B0.5")?,
    ])?
    .with_mean(mean)
    .time_weighted(grow);
    let dy = named(&run.series, "dy_u_phi@B0.5")?
        .with_mean(mean)
        .time_weighted(grow);
    let lhs = chemin_lerner_norm(&state, TimeExponent::Inf)?
        + 0.5 * chemin_lerner_norm(&dy, TimeExponent::Two)?;
    let rhs = besov_of(&weighted_tuple(&[&first.u, &first.temp], run.a, bank)?, 0.5, mean);
    let meta = RunMeta::new(&run.grid, None, run.params.dt);
    let report = CertificateReport::judge("limit_energy", lhs, rhs, 2.0, 2.0 * c, meta)?;
    Ok(match exhausted_note(run.status) {
        Some(n) => report.degenerate(n),
        None => report,
    })
}

/// Whether `‖u_0‖_{B^{1/2}} ≤ c_1 a / (1 + ‖u_0‖_{B^{3/2}} + ‖T_0‖_{B^{3/2}})`, analytic weights included.
pub fn dtu_budget(
    u0: &SpectralField,
    t0: &SpectralField,
    a: f64,
    c1: f64,
    bank: &DyadicFilterBank,
) -> Result<(bool, f64, f64)> {
    let mean = needs_mean(&[u0, t0], bank)?;
    let u = block_l2_norms(&apply_weight(u0, a)?, bank)?;
    let t = block_l2_norms(&apply_weight(t0, a)?, bank)?;
    let size = besov_of(&u, 0.5, mean);
    let limit = c1 * a / (1.0 + besov_of(&u, 1.5, mean) + besov_of(&t, 1.5, mean));
    Ok((size <= limit, size, limit))
}

/// `‖e^{Rt}(∂_t u)_φ‖_{L̃²(B^{3/2})} + ½‖e^{Rt}∂_y u_φ‖_{L̃^∞(B^{3/2})}` against
/// `‖∂_y u_0‖_{B^{3/2}} + ‖∂_y u_0‖_{B^{5/2}} + ‖∂_y T_0‖_{B^{3/2}}` (weighted by `e^{a|D|}`).
pub fn certify_dtu(
    run: &LimitRun,
    bank: &DyadicFilterBank,
    r: f64,
    c: f64,
    c1: f64,
) -> Result<CertificateReport> {
    if run.samples.len() < 3 {
        return Err(Error::Sampling(format!(
            "time-derivative certificate needs at least 3 recorded samples, run has {}; \
             lower sample_every",
            run.samples.len()
        )));
    }
    let first = run.initial();
    let mean = needs_mean(&[&first.u, &first.temp], bank)?;
    let mut dtu = NormSeries::new(bank, 1.5, mean);
    for s in &run.samples {
        dtu.push(s.t, block_l2_norms(&apply_weight(&s.du_dt, s.radius)?, bank)?)?;
    }
    let grow = |t: f64| (r * t).exp();
    let dy = named(&run.series, "dy_u_phi@B1.5")?
        .with_mean(mean)
        .time_weighted(grow);
    let lhs = chemin_lerner_norm(&dtu.time_weighted(grow), TimeExponent::Two)?
        + 0.5 * chemin_lerner_norm(&dy, TimeExponent::Inf)?;
    let du0 = block_l2_norms(&apply_weight(&first.u.dy(), run.a)?, bank)?;
    let dt0 = block_l2_norms(&apply_weight(&first.temp.dy(), run.a)?, bank)?;
    let rhs = besov_of(&du0, 1.5, mean) + besov_of(&du0, 2.5, mean) + besov_of(&dt0, 1.5, mean);
    let meta = RunMeta::new(&run.grid, None, run.params.dt);
    let report = CertificateReport::judge("limit_dtu", lhs, rhs, 1.0, c, meta)?;
    let (ok, size, limit) = dtu_budget(&first.u, &first.temp, run.a, c1, bank)?;
    let report = if ok {
        report
    } else {
        report.with_note(format!(
            "initial data outside the c1 budget: {size:.3e} > {limit:.3e}"
        ))
    };
    Ok(match exhausted_note(run.status) {
        Some(n) => report.degenerate(n),
        None => report,
    })
}

/// Four-family energy of the primitive equations against `‖e^{a|D|}(u_0, εv_0, T_0)‖_{B^{1/2}}`.
///
/// Left side: `L̃^∞` of `(u, εv, T)_Θ` plus `L̃²` of `∂_y(u, εv)_Θ`, `ε∂_x(u, εv)_Θ`
/// and `∇T_Θ`, all in `B^{1/2}` and weighted by `e^{Rt}`.
pub fn certify_pe_energy(
    run: &PeRun,
    bank: &DyadicFilterBank,
    r: f64,
    c: f64,
) -> Result<CertificateReport> {
    let first = run.initial();
    let eps = run.params.eps;
    let state0 = PeState::new(first.u.clone(), first.temp.clone(), eps)?;
    let v0 = state0.v()?;
    let mean = needs_mean(&[&first.u, &v0, &first.temp], bank)?;
    let grow = |t: f64| (r * t).exp();
    let mut lhs = 0.0;
    for (n, (name, series)) in run.series.iter().enumerate() {
        let s = series.with_mean(mean).time_weighted(grow);
        let p = if n == 0 {
            TimeExponent::Inf
        } else {
            TimeExponent::Two
        };
        if !name.starts_with(crate::pe::FAMILY_NAMES[n]) {
            return Err(Error::Series(format!("unexpected family order at `{name}`")));
        }
        lhs += chemin_lerner_norm(&s, p)?;
    }
    let families = weighted_families(&state0, run.a, bank)?;
    let rhs = besov_of(&families[0], 0.5, mean);
    let meta = RunMeta::new(&run.grid, Some(eps), run.params.dt);
    let report = CertificateReport::judge("pe_energy", lhs, rhs, 1.0, c, meta)?;
    Ok(match exhausted_note(run.status) {
        Some(n) => report.degenerate(n),
        None => report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial;
    use crate::limit::{run_limit_from, LimitParams};
    use crate::pe::{run_pe_from, PeParams};
    use std::f64::consts::PI;

    const R: f64 = PI * PI / 2.0;

    fn grid() -> StripGrid {
        StripGrid::new(16, 64, 2.0 * PI).unwrap()
    }

    fn heat_run(steps: usize) -> LimitRun {
        let (u, t) = initial::heat(grid(), 1.0);
        run_limit_from(&u, &t, LimitParams::new(1e-3), steps, 1, 0.5, 10.0).unwrap()
    }

    // Mean-only fields: the catch-all block is the whole L² norm.
    fn heat_constants(bank: &DyadicFilterBank) -> (f64, f64) {
        let c = (2.0 * PI / 2.0).sqrt();
        let w = 2f64.powf((bank.q_min() - 1) as f64 * 0.5);
        (c, w)
    }

    #[test]
    fn zero_data_is_degenerate_but_holds() {
        let g = grid();
        let z = SpectralField::zeros(g, crate::field::Parity::DirichletSine);
        let run = run_limit_from(&z, &z, LimitParams::new(1e-3), 5, 1, 0.5, 10.0).unwrap();
        let bank = DyadicFilterBank::new(g).unwrap();
        let rep = certify_limit_energy(&run, &bank, R, 4.0).unwrap();
        assert_eq!(rep.status, CertificateStatus::Degenerate);
        assert!(rep.holds());
        assert_eq!(rep.lhs, 0.0);
        let rep = certify_dtu(&run, &bank, R, 4.0, 0.1).unwrap();
        assert_eq!(rep.status, CertificateStatus::Degenerate);
        assert!(rep.holds());
    }

    #[test]
    fn heat_energy_matches_closed_form() {
        let run = heat_run(200);
        let bank = DyadicFilterBank::new(grid()).unwrap();
        let (c, w) = heat_constants(&bank);
        let horizon = run.last().t;
        let lhs = c * w * (1.0 + 0.5 * (1.0 - (-PI * PI * horizon).exp()).sqrt());
        let rep = certify_limit_energy(&run, &bank, R, 4.0).unwrap();
        assert!((rep.rhs - c * w).abs() < 1e-12 * c * w);
        assert!((rep.lhs - lhs).abs() < 1e-5 * lhs, "{} vs {lhs}", rep.lhs);
        assert_eq!(rep.status, CertificateStatus::Holds);
    }

    #[test]
    fn heat_time_derivative_matches_closed_form() {
        let run = heat_run(200);
        let bank = DyadicFilterBank::new(grid()).unwrap();
        let (c, w) = heat_constants(&bank);
        let horizon = run.last().t;
        let w3 = w.powi(3);
        let lhs = w3 * (PI * c * (1.0 - (-PI * PI * horizon).exp()).sqrt() + 0.5 * PI * c);
        let rhs = PI * c * (w3 + w.powi(5));
        let rep = certify_dtu(&run, &bank, R, 4.0, 0.1).unwrap();
        assert!((rep.rhs - rhs).abs() < 1e-12 * rhs);
        assert!((rep.lhs - lhs).abs() < 1e-5 * lhs, "{} vs {lhs}", rep.lhs);
    }

    #[test]
    fn sparse_sampling_is_rejected() {
        let (u, t) = initial::heat(grid(), 1.0);
        let run = run_limit_from(&u, &t, LimitParams::new(1e-3), 4, 10, 0.5, 10.0).unwrap();
        let bank = DyadicFilterBank::new(grid()).unwrap();
        assert!(matches!(
            certify_dtu(&run, &bank, R, 4.0, 0.1),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn pe_heat_matches_closed_form() {
        let bank = DyadicFilterBank::new(grid()).unwrap();
        let (c, w) = heat_constants(&bank);
        let (u, t) = initial::heat(grid(), 1.0);
        for eps in [1.0, 0.1] {
            let run = run_pe_from(&u, &t, PeParams::new(eps, 1e-3), 200, 1, 0.5, 10.0).unwrap();
            let horizon = run.last().t;
            // Only the state and ∂_y velocity families are populated.
            let lhs = c * w * (1.0 + (1.0 - (-PI * PI * horizon).exp()).sqrt());
            let rep = certify_pe_energy(&run, &bank, R, 4.0).unwrap();
            assert!((rep.rhs - c * w).abs() < 1e-12 * c * w);
            assert!((rep.lhs - lhs).abs() < 1e-5 * lhs, "eps {eps}: {} vs {lhs}", rep.lhs);
        }
    }

    #[test]
    fn budget_is_judged_against_recorded_constant() {
        let meta = RunMeta::new(&grid(), None, 1e-3);
        let r = CertificateReport::judge("x", 3.0, 1.0, 2.0, 4.0, meta).unwrap();
        assert_eq!(r.status, CertificateStatus::Holds);
        assert!((r.fitted_c - 1.5).abs() < 1e-15);
        let r = CertificateReport::judge("x", 5.0, 1.0, 2.0, 4.0, meta).unwrap();
        assert_eq!(r.status, CertificateStatus::Violated);
        let r = CertificateReport::judge("x", 1.0, 0.0, 1.0, 4.0, meta).unwrap();
        assert_eq!(r.status, CertificateStatus::Violated);
        assert!(r.csv_row().starts_with("x,1.0"));
    }

    #[test]
    fn small_band_data_hold_and_are_resolution_stable() {
        let mut fitted = Vec::new();
        for g in [grid(), StripGrid::new(32, 64, 2.0 * PI).unwrap()] {
            let bank = DyadicFilterBank::new(g).unwrap();
            let (u, t) = initial::analytic_band(g, 0.5, 1e-3, 4, 6, 7, &bank).unwrap();
            let run = run_limit_from(&u, &t, LimitParams::new(1e-3), 100, 5, 0.5, 32.0).unwrap();
            let rep = certify_limit_energy(&run, &bank, R, 4.0).unwrap();
            assert_eq!(rep.status, CertificateStatus::Holds, "{rep:?}");
            fitted.push(rep.fitted_c);
        }
        assert!((fitted[0] / fitted[1] - 1.0).abs() < 0.2, "{fitted:?}");
    }
}
