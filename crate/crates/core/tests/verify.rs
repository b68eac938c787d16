use std::f64::consts::PI;
use std::sync::Arc;

use gdm_core::densities::{gaussian_interval, perturbed, random_trig};
use gdm_core::flow::run_flow;
use gdm_core::functionals::{divergence_gamma, fisher_gamma, DensityField, GammaParams};
use gdm_core::gamma_calculus::{criterion_kappa, poincare_bound};
use gdm_core::geodesic::ShootingOptions;
use gdm_core::grid::{build_grid, Grid, GridConfig, Topology};
use gdm_core::verify::{
    poincare_optimal_lambda, verify_hypercontractivity, verify_lsi, verify_ph1i, verify_poincare, verify_talagrand,
    ENVELOPE_TOLERANCE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn circle(n: usize) -> Arc<Grid<f64>> {
    Arc::new(build_grid(&GridConfig::line(Topology::Periodic, 1.0, n)).unwrap())
}

fn torus(n: usize) -> Arc<Grid<f64>> {
    Arc::new(build_grid(&GridConfig::plane(Topology::Periodic, [1.0, 1.0], [n, n])).unwrap())
}

fn gaussian(n: usize) -> DensityField<f64> {
    let g = Arc::new(build_grid(&GridConfig::line(Topology::Reflecting, 2.0, n).with_origin([-1.0, 0.0])).unwrap());
    gaussian_interval(g, [0.0, 0.0], 0.5).unwrap()
}

fn p(gamma: f64) -> GammaParams<f64> {
    GammaParams::new(gamma).unwrap()
}

fn bump(a: f64, b: f64) -> impl Fn([f64; 2]) -> f64 {
    move |x| a * (PI * (x[0] + 1.0) / 2.0).cos() + b * (2.0 * PI * (x[0] + 1.0) / 2.0).cos()
}

#[test]
fn classical_scenario_envelope_and_lsi() {
    let mu = gaussian(128);
    let kappa = criterion_kappa(&mu, &p(1.0)).unwrap().kappa;
    assert!((kappa - 2.0).abs() < 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let rho0 = perturbed(&mu, 1.0, bump(rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4))).unwrap();
        let trace = run_flow(&rho0, &mu, &p(1.0), 0.5, 1e-3).unwrap();
        let r = verify_hypercontractivity(&trace, &p(1.0), kappa, ENVELOPE_TOLERANCE).unwrap();
        assert!(r.applicable && r.pass, "{r:?}");
        let lsi = verify_lsi(&rho0, &mu, &p(1.0), kappa).unwrap();
        assert!(lsi.pass && lsi.margin > 0.0);
    }
    assert!(verify_lsi(&mu, &mu, &p(1.0), kappa).unwrap().pass);
}

#[test]
fn classical_scenario_talagrand() {
    let mu = gaussian(96);
    let kappa = criterion_kappa(&mu, &p(1.0)).unwrap().kappa;
    let rho = perturbed(&mu, 1.0, bump(0.3, -0.2)).unwrap();
    let opts = ShootingOptions {
        steps: 128,
        ..Default::default()
    };
    let r = verify_talagrand(&rho, &mu, &p(1.0), kappa, &opts).unwrap();
    assert!(r.pass && !r.inconclusive, "{r:?}");
    let d = divergence_gamma(&rho, &mu, &p(1.0)).unwrap();
    assert!((r.rhs * r.rhs * kappa / 2.0 - d).abs() <= 1e-14 * d);
    let same = verify_talagrand(&mu, &mu, &p(1.0), kappa, &opts).unwrap();
    assert!(same.pass && same.lhs == 0.0);
}

#[test]
fn pearson_talagrand_uses_h_minus1() {
    let mu = gaussian(64);
    let k = criterion_kappa(&mu, &p(0.0)).unwrap();
    let rho = perturbed(&mu, 1.0, bump(0.2, 0.1)).unwrap();
    let r = verify_talagrand(&rho, &mu, &p(0.0), k.kappa, &ShootingOptions::default()).unwrap();
    if k.positive {
        let h = gdm_core::elliptic::h_minus1_distance(&rho, &mu).unwrap();
        assert!((r.lhs - h).abs() <= 1e-6 * h);
        assert!(r.pass);
    } else {
        assert!(!r.applicable);
    }
}

#[test]
fn decay_checks_gate_on_gamma_and_kappa() {
    let g = circle(32);
    let mu = DensityField::uniform(g.clone());
    let rho = DensityField::normalized(g.clone(), g.sample(|x| 1.0 + 0.1 * (2.0 * PI * x[0]).sin())).unwrap();
    assert!(!verify_lsi(&rho, &mu, &p(1.0), 0.0).unwrap().applicable);
    assert!(!verify_lsi(&rho, &mu, &p(1.5), 1.0).unwrap().applicable);
    let opts = ShootingOptions::default();
    assert!(!verify_talagrand(&rho, &mu, &p(2.0), 1.0, &opts).unwrap().applicable);
}

#[test]
fn poincare_eigenpair_and_bounds() {
    let g = circle(128);
    let mu = DensityField::uniform(g.clone());
    let e = poincare_optimal_lambda(&mu, &p(1.0)).unwrap();
    assert!((e.lambda - 4.0 * PI * PI).abs() / (4.0 * PI * PI) < 1e-3);
    let r = verify_poincare(&e.eigenfunction, &mu, &p(1.0), e.lambda).unwrap();
    assert!(r.pass && r.margin.abs() <= 1e-6 * r.lhs);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for gamma in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let mu = random_trig(circle(64), &mut rng, 2, 0.5).unwrap();
        let lambda = poincare_optimal_lambda(&mu, &p(gamma)).unwrap().lambda;
        let bound = poincare_bound(&mu, &p(gamma)).unwrap().kappa;
        assert!(lambda >= bound - 1e-3, "gamma {gamma}: {lambda} < {bound}");
    }
}

#[test]
fn random_centered_functions_satisfy_poincare() {
    let mu = gaussian(64);
    let g = mu.grid().clone();
    let lambda = poincare_bound(&mu, &p(1.0)).unwrap().kappa;
    assert!(lambda > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mass = g.integrate(mu.field()).unwrap();
    for _ in 0..100 {
        let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = g.sample(|x| (1..=4).map(|k| c[k - 1] * (k as f64 * PI * (x[0] + 1.0) / 2.0).cos()).sum());
        let shift = g.integrate(&f.mul(mu.field())).unwrap() / mass;
        let f = f.map(|v| v - shift);
        assert!(verify_poincare(&f, &mu, &p(1.0), lambda).unwrap().pass);
    }
}

#[test]
fn log_sobolev_is_sharp_near_equilibrium() {
    let g = circle(64);
    let mu = DensityField::normalized(g.clone(), g.sample(|x| (0.3 * (2.0 * PI * x[0]).cos()).exp())).unwrap();
    for gamma in [0.0, 1.0] {
        let e = poincare_optimal_lambda(&mu, &p(gamma)).unwrap();
        let rho = DensityField::normalized(g.clone(), mu.field().zip_map(&e.eigenfunction, |m, f| m * (1.0 + 1e-3 * f))).unwrap();
        let ratio = fisher_gamma(&rho, &mu, &p(gamma)).unwrap() / (2.0 * divergence_gamma(&rho, &mu, &p(gamma)).unwrap());
        assert!((ratio - e.lambda).abs() / e.lambda < 5e-2, "gamma {gamma}: {ratio} vs {}", e.lambda);
    }
}

#[test]
fn ph1i_battery() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 0..40 {
        let g = if k % 2 == 0 { circle(64) } else { torus(16) };
        let mu = random_trig(g.clone(), &mut rng, 2, 0.6).unwrap();
        let rho = random_trig(g, &mut rng, 3, 0.6).unwrap();
        let kappa = criterion_kappa(&mu, &p(0.0)).unwrap().kappa;
        let r = verify_ph1i(&rho, &mu, kappa).unwrap();
        assert!(r.pass && r.margin >= 0.0, "{r:?}");
    }
    let g = circle(32);
    let u = DensityField::uniform(g);
    let r = verify_ph1i(&u, &u, 0.0).unwrap();
    assert!(r.pass && r.lhs == 0.0);
}

#[test]
fn reports_are_reproducible() {
    let mu = gaussian(64);
    let rho = perturbed(&mu, 1.0, bump(0.2, 0.1)).unwrap();
    let a = verify_lsi(&rho, &mu, &p(0.5), 1.0).unwrap();
    let b = verify_lsi(&rho, &mu, &p(0.5), 1.0).unwrap();
    assert_eq!(a, b);
    let e1 = poincare_optimal_lambda(&mu, &p(0.5)).unwrap();
    let e2 = poincare_optimal_lambda(&mu, &p(0.5)).unwrap();
    assert_eq!(e1, e2);
}
