use std::f64::consts::PI;

use hydrostrip::config::SchemeOrder;
use hydrostrip::field::{Parity, PhysicalField, SpectralField};
use hydrostrip::grid::StripGrid;
use hydrostrip::limit::{LimitParams, LimitSolver, LimitState};

/// Manufactured solution `u* = g(t) cos x sin 2πy`, `T* = 0`.
pub fn manufactured(grid: StripGrid) -> (SpectralField, Box<dyn Fn(f64) -> (PhysicalField, PhysicalField)>) {
    let g = |t: f64| 0.5 + 0.5 * (5.0 * t).sin();
    let dg = |t: f64| 2.5 * (5.0 * t).cos();
    let u0 = SpectralField::from_fn(grid, Parity::DirichletSine, move |x, y| g(0.0) * x.cos() * (2.0 * PI * y).sin());
    let src = move |t: f64| {
        let fu = PhysicalField::from_fn(grid, move |x, y| {
            let s = (2.0 * PI * y).sin();
            let c = (2.0 * PI * y).cos();
            let u = g(t) * x.cos() * s;
            let ux = -g(t) * x.sin() * s;
            let uy = g(t) * x.cos() * 2.0 * PI * c;
            let v = g(t) * x.sin() * (1.0 - c) / (2.0 * PI);
            let uyy = -(2.0 * PI).powi(2) * u;
            dg(t) * x.cos() * s + u * ux + v * uy - uyy
        });
        (fu, PhysicalField::from_fn(grid, |_, _| 0.0))
    };
    (u0, Box::new(src))
}

/// `u` after `horizon / dt` steps of the forced limit system.
pub fn solve_mms(order: SchemeOrder, dt: f64, horizon: f64) -> SpectralField {
    let grid = StripGrid::new(16, 32, 2.0 * PI).unwrap();
    let (u0, src) = manufactured(grid);
    let mut p = LimitParams::new(dt);
    p.order = order;
    let mut solver = LimitSolver::new(grid, p).unwrap().with_sources(src);
    let mut st = solver.prepare(&LimitState::new(u0, SpectralField::zeros(grid, Parity::DirichletSine)).unwrap());
    let n = (horizon / dt).round() as usize;
    for _ in 0..n {
        st = solver.step(&st).unwrap();
    }
    st.u
}

/// Exact `u*` at time `t`.
pub fn mms_exact(grid: StripGrid, t: f64) -> SpectralField {
    let g = 0.5 + 0.5 * (5.0 * t).sin();
    SpectralField::from_fn(grid, Parity::DirichletSine, |x, y| g * x.cos() * (2.0 * PI * y).sin())
}
