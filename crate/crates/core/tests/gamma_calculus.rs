use std::f64::consts::PI;
use std::sync::Arc;

use gdm_core::densities::gaussian_interval;
use gdm_core::functionals::{fisher_gamma, DensityField, GammaParams};
use gdm_core::gamma_calculus::{be_criterion_ratio, criterion_kappa, gamma1, gamma2, poincare_bound, gamma2_energy_check};
use gdm_core::geodesic::hamiltonian;
use gdm_core::geometry::{hessian_at_equilibrium, hessian_form};
use gdm_core::grid::{build_grid, Grid, GridConfig, Topology};
use proptest::prelude::*;

fn circle(n: usize) -> Arc<Grid<f64>> {
    Arc::new(build_grid(&GridConfig::line(Topology::Periodic, 1.0, n)).unwrap())
}

fn torus(n: usize) -> Arc<Grid<f64>> {
    Arc::new(build_grid(&GridConfig::plane(Topology::Periodic, [1.0, 1.0], [n, n])).unwrap())
}

fn interval(n: usize) -> Arc<Grid<f64>> {
    Arc::new(build_grid(&GridConfig::line(Topology::Reflecting, 2.0, n).with_origin([-1.0, 0.0])).unwrap())
}

fn density(g: &Arc<Grid<f64>>, f: impl Fn([f64; 2]) -> f64) -> DensityField<f64> {
    DensityField::normalized(g.clone(), g.sample(f)).unwrap()
}

fn p(gamma: f64) -> GammaParams<f64> {
    GammaParams::new(gamma).unwrap()
}

#[test]
fn gaussian_interval_kappa_is_two() {
    let g = interval(129);
    let mu = gaussian_interval(g, [0.0, 0.0], 0.5).unwrap();
    let r = criterion_kappa(&mu, &p(1.0)).unwrap();
    assert!((r.kappa - 2.0).abs() < 1e-10, "kappa {}", r.kappa);
    assert!(r.positive);
    for v in r.tensor_min_eig.values() {
        assert!((v - 2.0).abs() < 1e-9);
    }
}

#[test]
fn torus_kl_kappa_not_positive() {
    let g = torus(32);
    let mu = density(&g, |x| (0.3 * (2.0 * PI * x[0]).cos() + 0.2 * (2.0 * PI * x[1]).sin()).exp());
    assert!(criterion_kappa(&mu, &p(1.0)).unwrap().kappa <= 0.0);
}

#[test]
fn kappa_is_refinement_stable() {
    let k = |n: usize| {
        let g = circle(n);
        let mu = density(&g, |x| (0.3 * (2.0 * PI * x[0]).cos()).exp());
        criterion_kappa(&mu, &p(0.5)).unwrap().kappa
    };
    assert!((k(128) - k(256)).abs() < 1e-3);
}

#[test]
fn branches_agree_at_one_and_differ_by_log_gradient_term() {
    let g = torus(24);
    let mu = density(&g, |x| (0.3 * (2.0 * PI * x[0]).cos() + 0.25 * (2.0 * PI * (x[0] + x[1])).sin()).exp());
    let a = criterion_kappa(&mu, &p(1.0)).unwrap();
    let b = poincare_bound(&mu, &p(1.0)).unwrap();
    assert_eq!(a.tensor, b.tensor);

    let lm = g.smooth_gradient(mu.field()).unwrap();
    for gamma in [0.3, 0.7] {
        let c = criterion_kappa(&mu, &p(gamma)).unwrap();
        let pb = poincare_bound(&mu, &p(gamma)).unwrap();
        for k in 0..g.len() {
            let m = mu.values()[k];
            let l2 = (lm.component(0)[k] / m).powi(2) + (lm.component(1)[k] / m).powi(2);
            let expect = -0.125 * gamma * (gamma - 1.0) * l2 * m.powf(gamma - 1.0);
            let (x, y) = (pb.tensor.at(k), c.tensor.at(k));
            assert!((x[0][0] - y[0][0] - expect).abs() < 1e-12);
            assert!((x[1][1] - y[1][1] - expect).abs() < 1e-12);
            assert!((x[0][1] - y[0][1]).abs() < 1e-12);
        }
    }
}

#[test]
fn reverse_kl_poincare_includes_log_gradient_penalty() {
    let g = circle(64);
    let mu = density(&g, |x| (0.3 * (2.0 * PI * x[0]).sin()).exp());
    let plain = gdm_core::geometry::reference_tensor(&mu, &p(2.0)).unwrap();
    let pb = poincare_bound(&mu, &p(2.0)).unwrap();
    let lm = g.smooth_gradient(mu.field()).unwrap();
    for k in 0..g.len() {
        let m = mu.values()[k];
        let l2 = (lm.component(0)[k] / m).powi(2);
        assert!((pb.tensor.at(k)[0][0] - plain.at(k)[0][0] + 2.0 * l2 * m).abs() < 1e-12);
    }
}

#[test]
fn gamma1_at_one_ignores_density() {
    let g = circle(64);
    let rho = density(&g, |x| (0.4 * (2.0 * PI * x[0]).cos()).exp());
    let a = g.sample(|x| (2.0 * PI * x[0]).sin());
    let b = g.sample(|x| (4.0 * PI * x[0]).cos());
    assert_eq!(gamma1(&a, &b, &rho, &p(1.0)).unwrap(), g.grad_dot(&a, &b).unwrap());
}

#[test]
fn gamma1_energy_is_twice_hamiltonian() {
    for g in [circle(64), interval(65), torus(16)] {
        let rho = density(&g, |x| (0.3 * (3.0 * x[0]).sin() + 0.1 * x[1]).exp());
        let phi = g.sample(|x| (2.0 * x[0]).cos() + x[1] * x[1]);
        for gamma in [0.0, 0.5, 1.0, 2.0] {
            let e = g.integrate(&gamma1(&phi, &phi, &rho, &p(gamma)).unwrap().mul(rho.field())).unwrap();
            let h = hamiltonian(&rho, &phi, &p(gamma)).unwrap();
            assert!((e - 2.0 * h).abs() <= 1e-12 * h.abs().max(1.0));
        }
    }
}

#[test]
fn flat_bochner() {
    let g = torus(128);
    let mu = DensityField::uniform(g.clone());
    let phi = g.sample(|x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos() + 0.3 * (4.0 * PI * x[1]).sin());
    let g2 = g.integrate(&gamma2(&phi, &phi, &mu, &p(1.0), &mu).unwrap()).unwrap();
    let hess = g.integrate(&g.hessian_field(&phi).unwrap().frobenius_sq()).unwrap();
    let lap = g.laplacian(&phi).unwrap();
    let lap_sq = g.integrate(&lap.mul(&lap)).unwrap();
    assert!((g2 - hess).abs() / hess < 1e-3);
    assert!((g2 - lap_sq).abs() / lap_sq < 1e-3);
}

#[test]
fn gamma2_symmetric() {
    let g = torus(24);
    let mu = density(&g, |x| (0.2 * (2.0 * PI * x[0]).cos()).exp());
    let rho = density(&g, |x| (0.3 * (2.0 * PI * x[1]).sin()).exp());
    let a = g.sample(|x| (2.0 * PI * (x[0] - x[1])).sin());
    let b = g.sample(|x| (4.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos());
    let ab = gamma2(&a, &b, &rho, &p(0.6), &mu).unwrap();
    let ba = gamma2(&b, &a, &rho, &p(0.6), &mu).unwrap();
    for (x, y) in ab.values().iter().zip(ba.values()) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }
}

#[test]
fn hessian_equals_gamma2_energy_torus() {
    let gap = |n: usize, gamma: f64| {
        let g = torus(n);
        let mu = density(&g, |x| (0.3 * (2.0 * PI * x[0]).cos() + 0.2 * (2.0 * PI * x[1]).sin()).exp());
        let rho = density(&g, |x| (0.25 * (2.0 * PI * (x[0] + x[1])).sin() + 0.1 * (4.0 * PI * x[0]).cos()).exp());
        let phi = g.sample(|x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos());
        gamma2_energy_check(&rho, &mu, &p(gamma), &phi).unwrap().relative_gap
    };
    for gamma in [0.0, 0.5, 1.0, 2.0] {
        let (coarse, fine) = (gap(64, gamma), gap(128, gamma));
        assert!(fine <= 1e-3, "gamma {gamma}: gap {fine}");
        assert!(coarse / fine > 3.0, "gamma {gamma}: ratio {}", coarse / fine);
    }
}

#[test]
fn identity_triangle_at_equilibrium() {
    let g = circle(256);
    let mu = density(&g, |x| (0.3 * (2.0 * PI * x[0]).cos() + 0.1 * (4.0 * PI * x[0]).sin()).exp());
    let phi = g.sample(|x| (2.0 * PI * x[0]).sin() + 0.3 * (4.0 * PI * x[0]).cos());
    for gamma in [0.0, 0.5, 1.0, 1.5] {
        let r = gamma2_energy_check(&mu, &mu, &p(gamma), &phi).unwrap();
        let eq = hessian_at_equilibrium(&mu, &p(gamma), &phi).unwrap();
        assert!((r.lhs - eq).abs() / eq < 1e-3);
        assert!((r.rhs - eq).abs() / eq < 1e-3);
    }
}

#[test]
fn ratio_fourier_mode() {
    let g = circle(256);
    let mu = DensityField::uniform(g.clone());
    let rho = density(&g, |x| 1.0 + 0.1 * (2.0 * PI * x[0]).sin());
    let r = be_criterion_ratio(&rho, &mu, &p(1.0)).unwrap();
    let target = 4.0 * PI * PI;
    assert!((r - target).abs() / target < 2e-2, "ratio {r}");
}

#[test]
fn ratio_is_hessian_over_fisher() {
    let g = circle(128);
    let mu = density(&g, |x| (0.3 * (2.0 * PI * x[0]).cos()).exp());
    let rho = density(&g, |x| (0.2 * (2.0 * PI * x[0]).sin()).exp());
    for gamma in [0.0, 0.5, 1.0, 2.0] {
        let r = be_criterion_ratio(&rho, &mu, &p(gamma)).unwrap();
        let dd = gdm_core::functionals::first_variation(&rho, &mu, &p(gamma)).unwrap();
        let h = hessian_form(&rho, &mu, &p(gamma), &dd).unwrap();
        let i = fisher_gamma(&rho, &mu, &p(gamma)).unwrap();
        assert!((r - h / i).abs() / (h / i).abs() < 1e-3, "gamma {gamma}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ratio_dominates_kappa_on_gaussian_interval(
        gamma in 0.0f64..=1.0,
        a in -0.3f64..0.3,
        b in -0.3f64..0.3,
    ) {
        let g = interval(129);
        let mu = gaussian_interval(g.clone(), [0.0, 0.0], 0.5).unwrap();
        let rho = gdm_core::densities::perturbed(&mu, 1.0, |x| a * (PI * x[0]).sin() + b * (2.0 * PI * x[0]).cos()).unwrap();
        let kappa = criterion_kappa(&mu, &p(gamma)).unwrap().kappa;
        let r = be_criterion_ratio(&rho, &mu, &p(gamma)).unwrap();
        prop_assert!(r >= kappa - 1e-3, "ratio {} kappa {}", r, kappa);
    }
}
