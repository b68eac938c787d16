//! Riemannian calculus of the γ-divergence: gradient, closed-form Hessian,
//! the `J` bilinear form with its ratio bound, and the weighted Yano identity.

use rand::Rng;

use crate::elliptic::TangentField;
use crate::error::Result;
use crate::functionals::{apply_floor, divergence_gamma, first_variation_raw, Branch, DensityField, GammaParams};
use crate::geodesic::integrate_partial;
use crate::grid::{Grid, ScalarField, SymMatrixField, VectorField};
use crate::scalar::Real;

/// Riemannian gradient `−∇·(ρ^γ ∇δD)`.
pub fn grad_divergence<T: Real>(
    rho: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
) -> Result<TangentField<T>> {
    rho.same_grid(mu)?;
    let grid = rho.grid();
    let dd = first_variation_raw(rho.field(), mu.field(), params);
    let out = grid.flux_divergence(&rho.field().powf(params.gamma()), &dd)?;
    Ok(TangentField::from_raw(out.scale(-T::one())))
}

/// Pointwise tensor `μ^{γ−1}Ric − Δμ^{γ−1} − (1/(γ−1)) Hess μ^{γ−1}`
/// (`Ric − Hess log μ` at γ = 1). Coefficients use one-sided closures at walls.
pub fn reference_tensor<T: Real>(mu: &DensityField<T>, params: &GammaParams<T>) -> Result<SymMatrixField<T>> {
    let grid = mu.grid();
    let g = params.gamma();
    let ric = grid.curvature().ricci_matrix::<T>();
    let mut out = SymMatrixField::zeros(grid.dim(), grid.len());
    if params.branch() == Branch::One {
        let hess = grid.smooth_hessian(&mu.field().map(|m| m.ln()))?;
        for k in 0..grid.len() {
            let h = hess.at(k);
            out.set(k, [[ric[0][0] - h[0][0], ric[0][1] - h[0][1]], [ric[1][0] - h[1][0], ric[1][1] - h[1][1]]]);
        }
        return Ok(out);
    }
    let m = mu.field().powf(g - T::one());
    let hess = grid.smooth_hessian(&m)?;
    let lap = hess.trace();
    let c = T::one() / (g - T::one());
    for k in 0..grid.len() {
        let h = hess.at(k);
        let (mk, lk) = (m.values()[k], lap.values()[k]);
        let entry = |i: usize, j: usize| {
            let id = if i == j { T::one() } else { T::zero() };
            mk * ric[i][j] - lk * id - c * h[i][j]
        };
        out.set(k, [[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]]);
    }
    Ok(out)
}

/// `∇f / f` with one-sided closures at walls.
pub(crate) fn log_gradient<T: Real>(grid: &Grid<T>, f: &ScalarField<T>) -> Result<VectorField<T>> {
    let d = grid.smooth_gradient(f)?;
    let comps = (0..grid.dim())
        .map(|a| d.component(a).iter().zip(f.values()).map(|(&x, &v)| x / v).collect())
        .collect();
    Ok(VectorField::new(comps, d.location()))
}

#[inline]
fn dot2<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

/// Pointwise integrand of the closed-form Hessian `Hess D(σ, σ)`, `σ = −Δ_{ρ^γ}Φ`.
pub fn hessian_integrand<T: Real>(
    rho: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
    phi: &ScalarField<T>,
) -> Result<ScalarField<T>> {
    rho.same_grid(mu)?;
    let grid = rho.grid();
    let g = params.gamma();
    let tensor = reference_tensor(mu, params)?;
    let dphi = grid.nodal_gradient(phi)?;
    let quad = tensor.quadratic(&dphi);
    let hess_sq = grid.hessian_field(phi)?.frobenius_sq();
    let rho_g = rho.field().powf(g);
    if params.branch() == Branch::One {
        return Ok(rho_g.mul(&quad.add(&hess_sq)));
    }
    let m = mu.field().powf(g - T::one());
    let lr = log_gradient(grid, rho.field())?;
    let lm = log_gradient(grid, mu.field())?;
    let c = g * (g - T::one());
    let half = T::lit(0.5);
    Ok(ScalarField::new(
        (0..grid.len())
            .map(|k| {
                let (p, a, b) = (dphi.at(k), lr.at(k), lm.at(k));
                let coupling = dot2(a, p) * dot2(b, p) - half * dot2(a, [a[0] + b[0], a[1] + b[1]]) * dot2(p, p);
                let mk = m.values()[k];
                rho_g.values()[k] * (quad.values()[k] + mk * hess_sq.values()[k] + c * mk * coupling)
            })
            .collect(),
    ))
}

/// Closed-form Hessian of the γ-divergence in the direction `σ = −Δ_{ρ^γ}Φ`.
pub fn hessian_form<T: Real>(
    rho: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
    phi: &ScalarField<T>,
) -> Result<T> {
    rho.grid().integrate(&hessian_integrand(rho, mu, params, phi)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianReport<T> {
    pub closed_form: T,
    pub fd_value: Option<T>,
    pub relative_gap: Option<T>,
}

/// `(d²/dt²) D(ρ_t‖μ)` at `t = 0` along the co-geodesic through `(ρ, Φ)`,
/// by the five-point stencil with time step `1/steps`.
pub fn hessian_time_derivative<T: Real>(
    rho: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
    phi: &ScalarField<T>,
    steps: usize,
) -> Result<T> {
    rho.same_grid(mu)?;
    let grid = rho.grid();
    let dt = T::one() / T::from_count(steps.max(1));
    let g = params.gamma();
    let mut values = [T::zero(); 5];
    for (sign, offset) in [(T::one(), 2isize), (-T::one(), 2isize)] {
        integrate_partial(grid, rho.field(), &phi.scale(sign), g, dt, 2, |k, r, _| {
            let d = DensityField::from_parts_unchecked(grid.clone(), apply_floor(r.clone()));
            let idx = offset + if sign > T::zero() { k as isize } else { -(k as isize) };
            values[idx as usize] = divergence_gamma(&d, mu, params)?;
            Ok(())
        })?;
    }
    let [m2, m1, z, p1, p2] = values;
    Ok((-p2 + T::lit(16.0) * p1 - T::lit(30.0) * z + T::lit(16.0) * m1 - m2) / (T::lit(12.0) * dt * dt))
}

/// Closed form together with the time-derivative oracle.
pub fn hessian_report<T: Real>(
    rho: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
    phi: &ScalarField<T>,
    steps: usize,
) -> Result<HessianReport<T>> {
    let closed_form = hessian_form(rho, mu, params, phi)?;
    let fd = hessian_time_derivative(rho, mu, params, phi, steps)?;
    Ok(HessianReport {
        closed_form,
        fd_value: Some(fd),
        relative_gap: Some(relative_gap(closed_form, fd)),
    })
}

pub(crate) fn relative_gap<T: Real>(reference: T, other: T) -> T {
    (reference - other).abs() / reference.abs().max(T::lit(1e-14))
}

/// `∫ μ⁻¹ (∇·(μ^γ ∇Φ))²`.
pub fn hessian_at_equilibrium<T: Real>(mu: &DensityField<T>, params: &GammaParams<T>, phi: &ScalarField<T>) -> Result<T> {
    let grid = mu.grid();
    let s = grid.flux_divergence(&mu.field().powf(params.gamma()), phi)?;
    grid.integrate(&s.mul(&s).div(mu.field()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YanoReport<T> {
    pub lhs: T,
    pub rhs: T,
    pub relative_gap: T,
}

/// Weighted Yano identity: `∫μ⁻¹(∇·(μ^γ∇Φ))²` against its curvature/Hessian
/// expansion (flat base, so the Ricci slot contributes zero).
pub fn yano_check<T: Real>(mu: &DensityField<T>, params: &GammaParams<T>, phi: &ScalarField<T>) -> Result<YanoReport<T>> {
    let grid = mu.grid();
    let g = params.gamma();
    let lhs = hessian_at_equilibrium(mu, params, phi)?;
    let tensor = reference_tensor(mu, params)?;
    let dphi = grid.nodal_gradient(phi)?;
    let quad = tensor.quadratic(&dphi);
    let hess_sq = grid.hessian_field(phi)?.frobenius_sq();
    let m = mu.field().powf(g - T::one());
    let lm = log_gradient(grid, mu.field())?;
    let c = g * (g - T::one());
    let mu_g = mu.field().powf(g);
    let integrand = ScalarField::new(
        (0..grid.len())
            .map(|k| {
                let (p, b) = (dphi.at(k), lm.at(k));
                let cross = if params.branch() == Branch::One {
                    T::zero()
                } else {
                    dot2(b, p) * dot2(b, p) - dot2(b, b) * dot2(p, p)
                };
                let mk = m.values()[k];
                mu_g.values()[k] * (quad.values()[k] + mk * hess_sq.values()[k] + c * mk * cross)
            })
            .collect(),
    );
    let rhs = grid.integrate(&integrand)?;
    Ok(YanoReport {
        lhs,
        rhs,
        relative_gap: relative_gap(lhs, rhs),
    })
}

/// Cross term `(∇log μ, ∇Φ)² − ‖∇log μ‖²‖∇Φ‖²` per node.
pub fn yano_cross_term<T: Real>(mu: &DensityField<T>, phi: &ScalarField<T>) -> Result<ScalarField<T>> {
    let grid = mu.grid();
    let dphi = grid.nodal_gradient(phi)?;
    let lm = log_gradient(grid, mu.field())?;
    Ok(ScalarField::new(
        (0..grid.len())
            .map(|k| {
                let (p, b) = (dphi.at(k), lm.at(k));
                dot2(b, p) * dot2(b, p) - dot2(b, b) * dot2(p, p)
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogGradientCoupling<T> {
    pub total: T,
    pub pointwise: ScalarField<T>,
}

/// Log-gradient coupling `(∇ρ/ρ,∇Φ)(∇μ/μ,∇Φ) − ½(∇ρ/ρ, ∇ρ/ρ + ∇μ/μ)(∇Φ,∇Φ)`.
pub fn log_gradient_coupling<T: Real>(rho: &DensityField<T>, mu: &DensityField<T>, phi: &ScalarField<T>) -> Result<LogGradientCoupling<T>> {
    rho.same_grid(mu)?;
    let grid = rho.grid();
    let dphi = grid.nodal_gradient(phi)?;
    let lr = log_gradient(grid, rho.field())?;
    let lm = log_gradient(grid, mu.field())?;
    let half = T::lit(0.5);
    let pointwise = ScalarField::new(
        (0..grid.len())
            .map(|k| {
                let (p, a, b) = (dphi.at(k), lr.at(k), lm.at(k));
                dot2(a, p) * dot2(b, p) - half * dot2(a, [a[0] + b[0], a[1] + b[1]]) * dot2(p, p)
            })
            .collect(),
    );
    Ok(LogGradientCoupling {
        total: grid.integrate(&pointwise)?,
        pointwise,
    })
}

/// Ratio of the coupling to its quadratic normalizer, in terms of `a = ∇log(ρ/μ)`, `a₀ = ∇log μ`:
/// `[(a+a₀, a)(a₀, a) − ½(a+a₀, a+2a₀)(a, a)] / (a, a)`.
pub fn coupling_ratio<T: Real>(a: &[T], a0: &[T]) -> T {
    let dot = |x: &[T], y: &[T]| x.iter().zip(y).map(|(&p, &q)| p * q).sum::<T>();
    let aa = dot(a, a);
    let a0a = dot(a0, a);
    let sum: Vec<T> = a.iter().zip(a0).map(|(&x, &y)| x + y).collect();
    let shifted: Vec<T> = a.iter().zip(a0).map(|(&x, &y)| x + T::lit(2.0) * y).collect();
    (dot(&sum, a) * a0a - T::lit(0.5) * dot(&sum, &shifted) * aa) / aa
}

/// Largest `coupling_ratio − ⅛‖a₀‖²` over random pairs in dimensions 1 to 3.
pub fn coupling_ratio_check<R: Rng + ?Sized>(samples: usize, rng: &mut R) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    let mut a = [0.0f64; 3];
    let mut a0 = [0.0f64; 3];
    for _ in 0..samples.max(1) {
        let dim = rng.random_range(1..=3usize);
        let sa = rng.random_range(-3.0f64..3.0).exp();
        let s0 = rng.random_range(-3.0f64..3.0).exp();
        loop {
            for i in 0..dim {
                a[i] = sa * rng.random_range(-1.0..1.0);
                a0[i] = s0 * rng.random_range(-1.0..1.0);
            }
            if a[..dim].iter().any(|&v| v != 0.0) {
                break;
            }
        }
        let r = coupling_ratio(&a[..dim], &a0[..dim]);
        let bound = 0.125 * a0[..dim].iter().map(|v| v * v).sum::<f64>();
        worst = worst.max(r - bound);
    }
    worst
}

/// Scans the anti-parallel family `a = −t a₀/‖a₀‖`, `‖a₀‖ = 1`, over
/// `t ∈ (0, 1]` and returns the largest `coupling_ratio − ⅛`.
pub fn coupling_ratio_scan(resolution: usize) -> f64 {
    let a0 = [1.0f64];
    (1..=resolution.max(1))
        .map(|i| {
            let t = i as f64 / resolution.max(1) as f64;
            coupling_ratio(&[-t], &a0) - 0.125
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridConfig, Topology};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn circle(n: usize) -> Arc<Grid<f64>> {
        Arc::new(build_grid(&GridConfig::line(Topology::Periodic, 1.0, n)).unwrap())
    }

    #[test]
    fn gradient_vanishes_at_equilibrium() {
        let g = circle(64);
        let mu = DensityField::normalized(g.clone(), g.sample(|x| (0.3 * (2.0 * PI * x[0]).cos()).exp())).unwrap();
        for gamma in [0.0, 0.5, 1.0, 2.0] {
            let gr = grad_divergence(&mu, &mu, &GammaParams::new(gamma).unwrap()).unwrap();
            assert!(gr.field().max_abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_reference_pearson_gradient_is_minus_laplacian() {
        let g = circle(64);
        let mu = DensityField::uniform(g.clone());
        let rho = DensityField::normalized(g.clone(), g.sample(|x| 1.0 + 0.2 * (2.0 * PI * x[0]).sin())).unwrap();
        let gr = grad_divergence(&rho, &mu, &GammaParams::new(0.0).unwrap()).unwrap();
        let lap = g.laplacian(rho.field()).unwrap();
        for (a, b) in gr.values().iter().zip(lap.values()) {
            assert!((a + b).abs() < 1e-10);
        }
    }

    #[test]
    fn coupling_ratio_scan_reaches_bound() {
        assert!(coupling_ratio_scan(200_000).abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(coupling_ratio_check(10_000, &mut rng) <= 1e-12);
    }

    #[test]
    fn coupling_ratio_orthogonal_large_is_negative() {
        let r = coupling_ratio(&[0.0, 100.0], &[1.0, 0.0]);
        assert!(r < -1000.0);
    }

    #[test]
    fn classical_yano_uniform() {
        let g = circle(64);
        let mu = DensityField::uniform(g.clone());
        let phi = g.sample(|x| (2.0 * PI * x[0]).sin() + 0.3 * (4.0 * PI * x[0]).cos());
        let y = yano_check(&mu, &GammaParams::new(1.0).unwrap(), &phi).unwrap();
        assert!(y.relative_gap < 1e-12);
    }
}
