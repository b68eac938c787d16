use std::f64::consts::PI;
use std::sync::Arc;

use gdm_core::densities::random_trig;
use gdm_core::flow::{estimate_decay_rate, forward_operator, generator_backward, run_flow, run_flow_with, FlowOptions};
use gdm_core::functionals::{DensityField, GammaParams};
use gdm_core::geometry::grad_divergence;
use gdm_core::grid::{build_grid, Grid, GridConfig, Topology};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn circle(n: usize) -> Arc<Grid<f64>> {
    Arc::new(build_grid(&GridConfig::line(Topology::Periodic, 1.0, n)).unwrap())
}

fn p(gamma: f64) -> GammaParams<f64> {
    GammaParams::new(gamma).unwrap()
}

fn heat_mode(g: &Arc<Grid<f64>>) -> DensityField<f64> {
    DensityField::new(g.clone(), g.sample(|x| 1.0 + 0.1 * (2.0 * PI * x[0]).sin())).unwrap()
}

#[test]
fn forward_operator_fourier() {
    let g = circle(128);
    let mu = DensityField::uniform(g.clone());
    let rho = heat_mode(&g);
    let out = forward_operator(&rho, &mu, &p(0.0)).unwrap();
    for (k, v) in out.values().iter().enumerate() {
        let x = g.coords(k)[0];
        let exact = -0.1 * (2.0 * PI).powi(2) * (2.0 * PI * x).sin();
        assert!((v - exact).abs() <= 1e-3 * 0.1 * (2.0 * PI).powi(2));
    }
    assert_eq!(forward_operator(&mu, &mu, &p(0.5)).unwrap().field().max_abs(), 0.0);
}

#[test]
fn heat_mode_decay() {
    let g = circle(128);
    let mu = DensityField::uniform(g.clone());
    let opts = FlowOptions {
        keep_densities: true,
        ..Default::default()
    };
    let trace = run_flow_with(&heat_mode(&g), &mu, &p(1.0), 0.05, 1e-5, &opts).unwrap();
    let last = trace.densities.as_ref().unwrap().last().unwrap();
    let t = *trace.times.last().unwrap();
    for (k, v) in last.values().iter().enumerate() {
        let x = g.coords(k)[0];
        let exact = 1.0 + 0.1 * (-4.0 * PI * PI * t).exp() * (2.0 * PI * x).sin();
        assert!((v - exact).abs() <= 1e-3);
    }
    let start = trace.times.iter().position(|&s| s >= 0.02 - 1e-12).unwrap();
    let rate = estimate_decay_rate(&trace, start..trace.times.len()).unwrap();
    assert!((rate - 8.0 * PI * PI).abs() / (8.0 * PI * PI) < 2e-2, "rate {rate}");
    assert!(trace.mass_drift <= 1e-10);

    for n in 1..trace.times.len() {
        let slope = (trace.divergence_series[n] - trace.divergence_series[n - 1]) / 1e-5;
        let i = trace.fisher_series[n];
        assert!((slope + i).abs() <= 5e-2 * i, "step {n}: {slope} vs {i}");
    }
}

#[test]
fn dissipation_and_conservation_on_random_scenarios() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for gamma in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let g = circle(64);
        let mu = random_trig(g.clone(), &mut rng, 2, 0.5).unwrap();
        let rho = random_trig(g.clone(), &mut rng, 2, 0.5).unwrap();
        let trace = run_flow(&rho, &mu, &p(gamma), 0.02, 1e-3).unwrap();
        assert!(trace.mass_drift <= 1e-10);
        for w in trace.divergence_series.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generator_is_adjoint_of_forward(seed in any::<u64>(), gamma in 0.0f64..=2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = circle(48);
        let mu = random_trig(g.clone(), &mut rng, 2, 0.6).unwrap();
        let rho = random_trig(g.clone(), &mut rng, 2, 0.6).unwrap();
        let phi = random_trig(g.clone(), &mut rng, 3, 0.8).unwrap().into_field();
        let lhs = g.l2_inner(&generator_backward(&phi, &mu, &p(gamma)).unwrap(), rho.field()).unwrap();
        let rhs = g.l2_inner(&phi, forward_operator(&rho, &mu, &p(gamma)).unwrap().field()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()).max(1e-12));
    }

    #[test]
    fn flow_is_linear(a in 0.1f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = circle(32);
        let mu = random_trig(g.clone(), &mut rng, 2, 0.4).unwrap();
        let sigma = g.sample(|x| 0.1 * (2.0 * PI * x[0]).cos());
        let opts = FlowOptions { keep_densities: true, ..Default::default() };
        let run = |s: f64| {
            let rho = DensityField::new(g.clone(), mu.field().add(&sigma.scale(s))).unwrap();
            run_flow_with(&rho, &mu, &p(0.5), 5e-3, 1e-3, &opts).unwrap().densities.unwrap()
        };
        let (full, part) = (run(1.0), run(a));
        for (x, y) in full.iter().zip(&part) {
            let dx = x.sub(mu.field());
            let dy = y.sub(mu.field());
            for (u, v) in dx.values().iter().zip(dy.values()) {
                prop_assert!((a * u - v).abs() <= 1e-9 * dx.max_abs());
            }
        }
    }

    #[test]
    fn forward_tracks_negative_gradient(seed in any::<u64>(), gamma in 0.0f64..=2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = circle(256);
        let mu = random_trig(g.clone(), &mut rng, 2, 0.5).unwrap();
        let rho = random_trig(g.clone(), &mut rng, 2, 0.5).unwrap();
        let f = forward_operator(&rho, &mu, &p(gamma)).unwrap();
        let gr = grad_divergence(&rho, &mu, &p(gamma)).unwrap();
        let scale = f.field().max_abs();
        for (a, b) in f.values().iter().zip(gr.values()) {
            prop_assert!((a + b).abs() <= 1e-2 * scale);
        }
    }
}
