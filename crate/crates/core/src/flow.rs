//! γ-drift-diffusion at the PDE level: generator pair, implicit time
//! stepping and decay-rate estimation.

use std::ops::Range;

use crate::elliptic::{SolverOptions, TangentField};
use crate::error::{Error, Result};
use crate::functionals::{apply_floor, divergence_gamma, fisher_gamma, Branch, DensityField, GammaParams};
use crate::grid::{Grid, ScalarField};
use crate::linalg::{pcg, CgSetup};
use crate::scalar::Real;

/// Density level below which a flow step is reported as a positivity failure.
pub const NEGATIVITY_THRESHOLD: f64 = -1e-8;

/// Backward generator `L_γ Φ = μ⁻¹ ∇·(μ^γ ∇Φ)`, assembled in divergence form
/// so that it is the exact quadrature adjoint of [`forward_operator`].
pub fn generator_backward<T: Real>(
    phi: &ScalarField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
) -> Result<ScalarField<T>> {
    let grid = mu.grid();
    let weight = mu.field().powf(params.gamma());
    Ok(grid.flux_divergence(&weight, phi)?.div(mu.field()))
}

/// Non-conservative evaluation `(γ/(γ−1))(∇μ^{γ−1}, ∇Φ) + μ^{γ−1}ΔΦ`
/// (`(∇log μ, ∇Φ) + ΔΦ` at γ = 1).
pub fn generator_backward_pointwise<T: Real>(
    phi: &ScalarField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
) -> Result<ScalarField<T>> {
    let grid = mu.grid();
    let g = params.gamma();
    let dphi = grid.nodal_gradient(phi)?;
    let lap = grid.laplacian(phi)?;
    Ok(match params.branch() {
        Branch::One => {
            let dlog = grid.smooth_gradient(&mu.field().map(|m| m.ln()))?;
            dlog.dot(&dphi).add(&lap)
        }
        _ => {
            let m = mu.field().powf(g - T::one());
            let dm = grid.smooth_gradient(&m)?;
            let c = g / (g - T::one());
            dm.dot(&dphi).scale(c).add(&m.mul(&lap))
        }
    })
}

pub(crate) fn forward_raw<T: Real>(
    grid: &Grid<T>,
    rho: &ScalarField<T>,
    mu: &ScalarField<T>,
    params: &GammaParams<T>,
) -> Result<ScalarField<T>> {
    grid.flux_divergence(&mu.powf(params.gamma()), &rho.div(mu))
}

/// Kolmogorov forward operator `∇·(μ^γ ∇(ρ/μ))`.
pub fn forward_operator<T: Real>(
    rho: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
) -> Result<TangentField<T>> {
    rho.same_grid(mu)?;
    Ok(TangentField::from_raw(forward_raw(rho.grid(), rho.field(), mu.field(), params)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace<T> {
    pub times: Vec<T>,
    pub divergence_series: Vec<T>,
    pub fisher_series: Vec<T>,
    /// `max_t |∫ρ_t − 1|`.
    pub mass_drift: T,
    pub min_density: T,
    /// Density snapshots per recorded time (only when requested).
    pub densities: Option<Vec<ScalarField<T>>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub keep_densities: bool,
    pub solver: SolverOptions,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            keep_densities: false,
            solver: SolverOptions {
                rel_tol: 1e-13,
                max_iter: None,
            },
        }
    }
}

pub fn run_flow<T: Real>(
    rho0: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
    t_max: T,
    dt: T,
) -> Result<FlowTrace<T>> {
    run_flow_with(rho0, mu, params, t_max, dt, &FlowOptions::default())
}

/// Implicit Euler for `∂_t ρ = ∇·(μ^γ ∇(ρ/μ))`, solved for `u = ρ/μ`:
/// `μ u − dt ∇·(μ^γ ∇u) = ρ_n`, a symmetric positive definite system.
pub fn run_flow_with<T: Real>(
    rho0: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
    t_max: T,
    dt: T,
    options: &FlowOptions,
) -> Result<FlowTrace<T>> {
    rho0.same_grid(mu)?;
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::Input("dt must be positive".into()));
    }
    if !(t_max >= dt) || !t_max.is_finite() {
        return Err(Error::Input("t_max must be at least dt".into()));
    }
    let steps = (t_max / dt).round().to_usize().unwrap_or(0).max(1);
    let grid = rho0.grid().clone();
    let weights = grid.weights();
    let w = weights.values();
    let mu_v = mu.values();
    let mobility = mu.field().powf(params.gamma());
    let stiff = grid.flux_diagonal(&mobility)?;
    let diag: Vec<T> = mu_v.iter().zip(&stiff).map(|(&m, &s)| m + dt * s).collect();
    let mu_mass: T = w.iter().zip(mu_v).map(|(&a, &b)| a * b).sum();
    let op = |u: &[T]| -> Vec<T> {
        let f = ScalarField::new(u.to_vec());
        match grid.flux_divergence(&mobility, &f) {
            Ok(div) => u
                .iter()
                .zip(mu_v)
                .zip(div.values())
                .map(|((&u, &m), &d)| m * u - dt * d)
                .collect(),
            Err(_) => vec![T::nan(); u.len()],
        }
    };
    let setup = CgSetup {
        weights: w,
        diag: &diag,
        project: false,
        rel_tol: T::lit(options.solver.rel_tol),
        max_iter: options.solver.max_iter.unwrap_or(50 * grid.len()),
    };

    let mut trace = FlowTrace {
        times: Vec::with_capacity(steps + 1),
        divergence_series: Vec::with_capacity(steps + 1),
        fisher_series: Vec::with_capacity(steps + 1),
        mass_drift: T::zero(),
        min_density: T::infinity(),
        densities: options.keep_densities.then(Vec::new),
    };
    let mut rho = rho0.field().clone();
    let record = |trace: &mut FlowTrace<T>, step: usize, rho: &ScalarField<T>| -> Result<()> {
        let min = rho.min();
        if min < T::lit(NEGATIVITY_THRESHOLD) {
            return Err(Error::Positivity {
                step,
                min: min.as_f64(),
                threshold: NEGATIVITY_THRESHOLD,
            });
        }
        let mass = grid.integrate(rho)?;
        let d = DensityField::from_parts_unchecked(grid.clone(), apply_floor(rho.clone()));
        trace.times.push(T::from_count(step) * dt);
        trace.divergence_series.push(divergence_gamma(&d, mu, params)?);
        trace.fisher_series.push(fisher_gamma(&d, mu, params)?);
        trace.mass_drift = trace.mass_drift.max((mass - T::one()).abs());
        trace.min_density = trace.min_density.min(min);
        if let Some(list) = trace.densities.as_mut() {
            list.push(rho.clone());
        }
        Ok(())
    };
    record(&mut trace, 0, &rho)?;
    let mass0 = grid.integrate(&rho)?;
    for step in 1..=steps {
        let mut u = pcg(op, rho.values(), &setup)?;
        let new_mass: T = w.iter().zip(mu_v).zip(&u).map(|((&a, &m), &u)| a * m * u).sum();
        let shift = (mass0 - new_mass) / mu_mass;
        for v in u.iter_mut() {
            *v += shift;
        }
        rho = ScalarField::new(u.iter().zip(mu_v).map(|(&u, &m)| u * m).collect());
        record(&mut trace, step, &rho)?;
    }
    Ok(trace)
}

/// Negated least-squares slope of `log D` against `t` over `window`.
pub fn estimate_decay_rate<T: Real>(trace: &FlowTrace<T>, window: Range<usize>) -> Result<T> {
    if window.end > trace.times.len() || window.end < window.start || window.len() < 5 {
        return Err(Error::Input("window must hold at least 5 recorded steps".into()));
    }
    let ts = &trace.times[window.clone()];
    let ds = &trace.divergence_series[window];
    if let Some(bad) = ds.iter().find(|d| !(**d > T::zero())) {
        return Err(Error::Input(format!("divergence {bad} in window is not positive")));
    }
    let n = T::from_count(ts.len());
    let logs: Vec<T> = ds.iter().map(|d| d.ln()).collect();
    let tm = ts.iter().copied().sum::<T>() / n;
    let lm = logs.iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&t, &l) in ts.iter().zip(&logs) {
        sxy += (t - tm) * (l - lm);
        sxx += (t - tm) * (t - tm);
    }
    Ok(-sxy / sxx)
}
