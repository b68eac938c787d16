use std::f64::consts::PI;
use std::sync::Arc;

use gdm_core::functionals::{DensityField, GammaParams};
use gdm_core::geometry::{hessian_at_equilibrium, hessian_form, hessian_report, log_gradient_coupling, yano_check, yano_cross_term};
use gdm_core::grid::{build_grid, Grid, GridConfig, Topology};
use proptest::prelude::*;

fn circle(n: usize) -> Arc<Grid<f64>> {
    Arc::new(build_grid(&GridConfig::line(Topology::Periodic, 1.0, n)).unwrap())
}

fn torus(n: usize) -> Arc<Grid<f64>> {
    Arc::new(build_grid(&GridConfig::plane(Topology::Periodic, [1.0, 1.0], [n, n])).unwrap())
}

fn density(g: &Arc<Grid<f64>>, f: impl Fn([f64; 2]) -> f64) -> DensityField<f64> {
    DensityField::normalized(g.clone(), g.sample(f)).unwrap()
}

#[test]
fn uniform_kl_hessian_is_weighted_hessian_norm() {
    let g = torus(32);
    let mu = DensityField::uniform(g.clone());
    let rho = density(&g, |x| 1.0 + 0.3 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos());
    let phi = g.sample(|x| (2.0 * PI * (x[0] + 2.0 * x[1])).cos());
    let h = hessian_form(&rho, &mu, &GammaParams::new(1.0).unwrap(), &phi).unwrap();
    let hess = g.hessian_field(&phi).unwrap().frobenius_sq();
    let direct = g.integrate(&rho.field().mul(&hess)).unwrap();
    assert!((h - direct).abs() <= 1e-10 * direct.abs());
}

#[test]
fn pearson_equilibrium_matches_reciprocal_form() {
    let g = circle(128);
    let mu = density(&g, |x| (0.3 * (2.0 * PI * x[0]).cos()).exp());
    let phi = g.sample(|x| (2.0 * PI * x[0]).sin());
    let h = hessian_form(&mu, &mu, &GammaParams::new(0.0).unwrap(), &phi).unwrap();
    let inv = mu.field().map(|m| 1.0 / m);
    let hinv = g.smooth_hessian(&inv).unwrap();
    let dphi = g.nodal_gradient(&phi).unwrap();
    let lap_inv = hinv.trace();
    let hs = g.hessian_field(&phi).unwrap().frobenius_sq();
    let integrand: Vec<f64> = (0..g.len())
        .map(|k| {
            let p = dphi.at(k)[0];
            (hinv.at(k)[0][0] - lap_inv.values()[k]) * p * p + inv.values()[k] * hs.values()[k]
        })
        .collect();
    let expect = g.integrate(&gdm_core::grid::ScalarField::new(integrand)).unwrap();
    assert!((h - expect).abs() <= 1e-10 * expect.abs().max(1e-12));
}

#[test]
fn equilibrium_hessian_fourier() {
    let g = circle(256);
    let mu = DensityField::uniform(g.clone());
    let phi = g.sample(|x| (2.0 * PI * x[0]).sin());
    let h = hessian_at_equilibrium(&mu, &GammaParams::new(1.0).unwrap(), &phi).unwrap();
    let exact = (2.0 * PI).powi(4) / 2.0;
    assert!((h - exact).abs() / exact < 1e-3);
    assert_eq!(hessian_at_equilibrium(&mu, &GammaParams::new(1.0).unwrap(), &g.constant(3.0)).unwrap(), 0.0);
}

#[test]
fn classical_yano_on_line() {
    let g = circle(64);
    let mu = DensityField::uniform(g.clone());
    let phi = g.sample(|x| (2.0 * PI * x[0]).sin() + 0.5 * (6.0 * PI * x[0]).cos());
    let y = yano_check(&mu, &GammaParams::new(1.0).unwrap(), &phi).unwrap();
    let lap = g.laplacian(&phi).unwrap();
    let direct = g.integrate(&lap.mul(&lap)).unwrap();
    assert!((y.lhs - direct).abs() <= 1e-12 * direct);
    assert!((y.rhs - direct).abs() <= 1e-12 * direct);
}

#[test]
fn yano_torus_second_order() {
    let params = GammaParams::new(0.5).unwrap();
    let gap = |n: usize| {
        let g = torus(n);
        let mu = density(&g, |x| (0.3 * (2.0 * PI * x[0]).cos() + 0.2 * (2.0 * PI * x[1]).sin()).exp());
        let phi = g.sample(|x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos());
        yano_check(&mu, &params, &phi).unwrap().relative_gap
    };
    let (coarse, fine) = (gap(64), gap(128));
    assert!(fine <= 1e-3, "gap {fine}");
    let ratio = coarse / fine;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn equilibrium_consistency_battery() {
    let g = circle(128);
    let mu = density(&g, |x| (0.3 * (2.0 * PI * x[0]).cos() + 0.1 * (4.0 * PI * x[0]).sin()).exp());
    let phi = g.sample(|x| (2.0 * PI * x[0]).sin() + 0.2 * (4.0 * PI * x[0]).cos());
    for gamma in [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0] {
        let p = GammaParams::new(gamma).unwrap();
        let a = hessian_form(&mu, &mu, &p, &phi).unwrap();
        let b = hessian_at_equilibrium(&mu, &p, &phi).unwrap();
        assert!((a - b).abs() / b < 1e-3, "gamma {gamma}: {a} vs {b}");
    }
}

#[test]
fn hessian_matches_time_derivative() {
    let g = circle(128);
    let mu = density(&g, |x| (0.3 * (2.0 * PI * x[0]).cos()).exp());
    let rho = density(&g, |x| (0.2 * (2.0 * PI * x[0]).sin() + 0.1 * (4.0 * PI * x[0]).cos()).exp());
    let phi = g.sample(|x| 0.5 * (2.0 * PI * x[0]).cos());
    for gamma in [0.0, 0.5, 1.0] {
        let r = hessian_report(&rho, &mu, &GammaParams::new(gamma).unwrap(), &phi, 1024).unwrap();
        let gap = r.relative_gap.unwrap();
        assert!(gap <= 1e-2, "gamma {gamma}: closed {} fd {:?}", r.closed_form, r.fd_value);
    }
}

#[test]
fn one_dimensional_cross_term_vanishes() {
    let g = circle(64);
    let mu = density(&g, |x| (0.4 * (2.0 * PI * x[0]).sin()).exp());
    let phi = g.sample(|x| (4.0 * PI * x[0]).cos());
    assert!(yano_cross_term(&mu, &phi).unwrap().max_abs() < 1e-10);
}

#[test]
fn coupling_trivial_cases() {
    let g = torus(16);
    let u = DensityField::uniform(g.clone());
    let phi = g.sample(|x| (2.0 * PI * x[0]).sin());
    assert_eq!(log_gradient_coupling(&u, &u, &phi).unwrap().total, 0.0);
}

#[test]
fn coupling_matches_term_by_term() {
    let g = torus(24);
    let rho = density(&g, |x| (0.3 * (2.0 * PI * x[0]).sin() + 0.2 * (2.0 * PI * x[1]).cos()).exp());
    let mu = density(&g, |x| (0.25 * (2.0 * PI * (x[0] + x[1])).sin()).exp());
    let phi = g.sample(|x| (2.0 * PI * x[0]).cos() * (4.0 * PI * x[1]).sin());
    let c = log_gradient_coupling(&rho, &mu, &phi).unwrap();
    let dr = g.smooth_gradient(rho.field()).unwrap();
    let dm = g.smooth_gradient(mu.field()).unwrap();
    let dp = g.nodal_gradient(&phi).unwrap();
    let mut total = 0.0;
    for k in 0..g.len() {
        let r = rho.values()[k];
        let m = mu.values()[k];
        let (rx, ry) = (dr.component(0)[k] / r, dr.component(1)[k] / r);
        let (mx, my) = (dm.component(0)[k] / m, dm.component(1)[k] / m);
        let (px, py) = (dp.component(0)[k], dp.component(1)[k]);
        let term1 = (rx * px + ry * py) * (mx * px + my * py);
        let term2 = 0.5 * (rx * (rx + mx) + ry * (ry + my)) * (px * px + py * py);
        let v = term1 - term2;
        assert!((v - c.pointwise.values()[k]).abs() <= 1e-12 * v.abs().max(1.0));
        total += g.weight(k) * v;
    }
    assert!((total - c.total).abs() <= 1e-12 * total.abs().max(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coupling_at_equilibrium_is_bounded(a in -0.5f64..0.5, b in -0.5f64..0.5, c in -1.0f64..1.0, d in -1.0f64..1.0) {
        let g = torus(16);
        let mu = density(&g, |x| (a * (2.0 * PI * x[0]).cos() + b * (2.0 * PI * (x[0] - x[1])).sin()).exp());
        let phi = g.sample(|x| c * (2.0 * PI * x[1]).sin() + d * (2.0 * PI * (x[0] + x[1])).cos());
        let c = log_gradient_coupling(&mu, &mu, &phi).unwrap();
        let lm = g.smooth_gradient(mu.field()).unwrap();
        let dp = g.nodal_gradient(&phi).unwrap();
        for k in 0..g.len() {
            let m = mu.values()[k];
            let l2 = (lm.component(0)[k] / m).powi(2) + (lm.component(1)[k] / m).powi(2);
            let p2 = dp.component(0)[k].powi(2) + dp.component(1)[k].powi(2);
            let v = c.pointwise.values()[k];
            prop_assert!(v <= 1e-12);
            prop_assert!(v >= -l2 * p2 - 1e-12);
        }
    }
}
