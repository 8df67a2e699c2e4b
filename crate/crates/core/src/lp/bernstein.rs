use crate::error::{Error, Result};
use crate::field::SpectralField;

/// Outcome of a Bernstein-inequality check.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinReport {
    /// `‖∂_x^k f‖ / (λ^k ‖f‖)`; `None` for the zero field.
    pub ratio: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

impl BernsteinReport {
    pub fn is_degenerate(&self) -> bool {
        self.ratio.is_none()
    }
}

/// Checks `C^{-k} <= ‖∂_x^k f‖/(λ^k‖f‖) <= C^k` for `f` supported in `r1 λ <= |ξ| <= r2 λ`,
/// with `C = max(1/r1, r2)`.
pub fn bernstein_ratio(
    f: &SpectralField,
    k: u32,
    lambda: f64,
    ring: (f64, f64),
) -> Result<BernsteinReport> {
    let (r1, r2) = ring;
    if !(lambda > 0.0 && r1 > 0.0 && r2 > r1) {
        return Err(Error::InvalidInput(format!("bad ring ({r1}, {r2}) at scale {lambda}")));
    }
    let grid = *f.grid();
    let tol = 1e-12 * lambda;
    let peak = f.data().iter().map(|c| c.norm()).fold(0.0, f64::max);
    for i in 0..grid.nx() {
        let xi = grid.xi(i).abs();
        let populated = f.column(i).iter().any(|c| c.norm() > 1e-12 * peak);
        if populated && (xi < r1 * lambda - tol || xi > r2 * lambda + tol) {
            return Err(Error::InvalidInput(format!(
                "mode k = {} lies outside the ring",
                grid.wavenumber(i)
            )));
        }
    }
    let c = (1.0 / r1).max(r2);
    let lower = c.powi(-(k as i32));
    let upper = c.powi(k as i32);
    let base = f.l2_norm();
    if base == 0.0 {
        return Ok(BernsteinReport { ratio: None, lower, upper, within: true });
    }
    let mut d = f.clone();
    for _ in 0..k {
        d = d.dx();
    }
    let ratio = d.l2_norm() / (lambda.powi(k as i32) * base);
    Ok(BernsteinReport {
        ratio: Some(ratio),
        lower,
        upper,
        within: ratio >= lower && ratio <= upper,
    })
}
