//! Bakry–Émery side: curvature-dimension tensors and their constants, the
//! mean-field Γ₁/Γ₂ operators, and the identities tying them to the Hessian.

use crate::error::{Error, Result};
use crate::flow::generator_backward;
use crate::functionals::{first_variation_raw, Branch, DensityField, GammaParams};
use crate::geometry::{hessian_form, log_gradient, reference_tensor, relative_gap};
use crate::grid::{min_eig, ScalarField, SymMatrixField};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport<T> {
    pub tensor: SymMatrixField<T>,
    /// Smallest eigenvalue of the tensor at each node.
    pub tensor_min_eig: ScalarField<T>,
    pub kappa: T,
    pub positive: bool,
}

impl<T: Real> CriterionReport<T> {
    fn from_tensor(tensor: SymMatrixField<T>) -> Self {
        let dim = tensor.dim();
        let tensor_min_eig = ScalarField::new((0..tensor.len()).map(|k| min_eig(dim, tensor.at(k))).collect());
        let kappa = tensor_min_eig.min();
        Self {
            tensor,
            tensor_min_eig,
            kappa,
            positive: kappa > T::zero(),
        }
    }
}

/// Adds `c(x)·Id` to a tensor field.
fn shift_identity<T: Real>(tensor: &mut SymMatrixField<T>, c: &[T]) {
    for (k, &s) in c.iter().enumerate() {
        let mut m = tensor.at(k);
        m[0][0] += s;
        m[1][1] += s;
        tensor.set(k, m);
    }
}

/// `γ(γ−1)‖∇log μ‖²μ^{γ−1}` per node.
fn log_gradient_term<T: Real>(mu: &DensityField<T>, params: &GammaParams<T>) -> Result<Vec<T>> {
    let g = params.gamma();
    let grid = mu.grid();
    let lm = log_gradient(grid, mu.field())?;
    let m = mu.field().powf(g - T::one());
    let c = g * (g - T::one());
    Ok((0..grid.len())
        .map(|k| {
            let v = lm.at(k);
            c * (v[0] * v[0] + v[1] * v[1]) * m.values()[k]
        })
        .collect())
}

/// Hypercontractivity tensor: the reference tensor plus `⅛γ(γ−1)‖∇log μ‖²μ^{γ−1}·Id`.
pub fn criterion_kappa<T: Real>(mu: &DensityField<T>, params: &GammaParams<T>) -> Result<CriterionReport<T>> {
    let mut tensor = reference_tensor(mu, params)?;
    if params.branch() != Branch::One {
        let extra: Vec<T> = log_gradient_term(mu, params)?.into_iter().map(|v| v * T::lit(0.125)).collect();
        shift_identity(&mut tensor, &extra);
    }
    Ok(CriterionReport::from_tensor(tensor))
}

/// Poincaré tensor. For `γ ∈ [0,1]` this is the reference tensor; outside
/// it `γ(γ−1)‖∇log μ‖²μ^{γ−1}·Id` is subtracted.
pub fn poincare_bound<T: Real>(mu: &DensityField<T>, params: &GammaParams<T>) -> Result<CriterionReport<T>> {
    let mut tensor = reference_tensor(mu, params)?;
    if !params.in_unit_interval() {
        let extra: Vec<T> = log_gradient_term(mu, params)?.into_iter().map(|v| -v).collect();
        shift_identity(&mut tensor, &extra);
    }
    Ok(CriterionReport::from_tensor(tensor))
}

/// `Γ₁(Φ₁, Φ₂, ρ) = (∇Φ₁, ∇Φ₂) ρ^{γ−1}`.
pub fn gamma1<T: Real>(
    phi1: &ScalarField<T>,
    phi2: &ScalarField<T>,
    rho: &DensityField<T>,
    params: &GammaParams<T>,
) -> Result<ScalarField<T>> {
    let dot = rho.grid().grad_dot(phi1, phi2)?;
    Ok(dot.mul(&rho.field().powf(params.gamma() - T::one())))
}

/// `Γ₂(Φ₁, Φ₂, ρ) = (γ/2) L Γ₁(Φ₁,Φ₂) − ½Γ₁(Φ₁, LΦ₂) − ½Γ₁(Φ₂, LΦ₁)` with `L`
/// the backward generator.
pub fn gamma2<T: Real>(
    phi1: &ScalarField<T>,
    phi2: &ScalarField<T>,
    rho: &DensityField<T>,
    params: &GammaParams<T>,
    mu: &DensityField<T>,
) -> Result<ScalarField<T>> {
    rho.same_grid(mu)?;
    let half = T::lit(0.5);
    let g11 = gamma1(phi1, phi2, rho, params)?;
    let first = generator_backward(&g11, mu, params)?.scale(half * params.gamma());
    let l1 = generator_backward(phi1, mu, params)?;
    let l2 = generator_backward(phi2, mu, params)?;
    let a = gamma1(phi1, &l2, rho, params)?;
    let b = gamma1(phi2, &l1, rho, params)?;
    Ok(first.sub(&a.add(&b).scale(half)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport<T> {
    pub lhs: T,
    pub rhs: T,
    pub relative_gap: T,
}

/// `Hess D(σ,σ)` against `∫Γ₂(Φ,Φ,ρ)ρ`.
pub fn gamma2_energy_check<T: Real>(
    rho: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
    phi: &ScalarField<T>,
) -> Result<IdentityReport<T>> {
    let lhs = hessian_form(rho, mu, params, phi)?;
    let g2 = gamma2(phi, phi, rho, params, mu)?;
    let rhs = rho.grid().integrate(&g2.mul(rho.field()))?;
    Ok(IdentityReport {
        lhs,
        rhs,
        relative_gap: relative_gap(lhs, rhs),
    })
}

/// `∫Γ₂ρ / ∫Γ₁ρ` at the mean-removed first variation of the divergence.
pub fn be_criterion_ratio<T: Real>(rho: &DensityField<T>, mu: &DensityField<T>, params: &GammaParams<T>) -> Result<T> {
    rho.same_grid(mu)?;
    let grid = rho.grid();
    let raw = first_variation_raw(rho.field(), mu.field(), params);
    let mean = grid.integrate(&raw)? / grid.volume();
    let phi = raw.map(|v| v - mean);
    let num = grid.integrate(&gamma2(&phi, &phi, rho, params, mu)?.mul(rho.field()))?;
    let den = grid.integrate(&gamma1(&phi, &phi, rho, params)?.mul(rho.field()))?;
    let scale = grid.integrate(&phi.mul(&phi))?.max(T::one());
    if !(den > T::lit(1e-24) * scale) {
        return Err(Error::UndefinedRatio(format!(
            "Γ₁ energy {den} vanishes (density equals the reference)"
        )));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Grid, GridConfig, Topology};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn circle(n: usize) -> Arc<Grid<f64>> {
        Arc::new(build_grid(&GridConfig::line(Topology::Periodic, 1.0, n)).unwrap())
    }

    #[test]
    fn uniform_reference_has_zero_constants() {
        let g = circle(32);
        let mu = DensityField::uniform(g);
        for gamma in [0.0, 0.5, 1.0, 2.0] {
            let p = GammaParams::new(gamma).unwrap();
            assert_eq!(criterion_kappa(&mu, &p).unwrap().kappa, 0.0);
            assert_eq!(poincare_bound(&mu, &p).unwrap().kappa, 0.0);
        }
    }

    #[test]
    fn gamma_operators_vanish_on_constants() {
        let g = circle(32);
        let mu = DensityField::normalized(g.clone(), g.sample(|x| (0.2 * (2.0 * PI * x[0]).sin()).exp())).unwrap();
        let phi = g.sample(|x| (2.0 * PI * x[0]).cos());
        let c = g.constant(1.5);
        let p = GammaParams::new(0.5).unwrap();
        assert_eq!(gamma1(&phi, &c, &mu, &p).unwrap().max_abs(), 0.0);
        assert!(gamma2(&c, &c, &mu, &p, &mu).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn ratio_undefined_at_equilibrium() {
        let g = circle(32);
        let mu = DensityField::uniform(g);
        let r = be_criterion_ratio(&mu, &mu, &GammaParams::new(1.0).unwrap());
        assert!(matches!(r, Err(Error::UndefinedRatio(_))));
    }
}
