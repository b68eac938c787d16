//! Weighted elliptic operator `∇·(h∇·)`, its inverse on mean-zero fields,
//! the density-manifold metric and the H⁻¹ distance.

use crate::error::{Error, Result};
use crate::functionals::{DensityField, GammaParams};
use crate::grid::{Grid, ScalarField};
use crate::linalg::{pcg, project_mean_zero, CgSetup};
use crate::scalar::Real;

fn zero_mean_tolerance<T: Real>(grid: &Grid<T>, f: &ScalarField<T>) -> Result<T> {
    let abs_mass = grid.integrate(&f.map(|v| v.abs()))?;
    Ok(T::lit(1e-10).max(T::epsilon() * T::lit(256.0)) * abs_mass.max(T::one()))
}

fn checked_mean_zero<T: Real>(grid: &Grid<T>, f: &ScalarField<T>) -> Result<()> {
    let mass = grid.integrate(f)?;
    if mass.abs() > zero_mean_tolerance(grid, f)? {
        return Err(Error::NotMeanZero(mass.as_f64()));
    }
    Ok(())
}

fn projected<T: Real>(grid: &Grid<T>, f: ScalarField<T>) -> Result<ScalarField<T>> {
    grid.check(&f)?;
    let w = grid.weights();
    let mut v = f.into_values();
    project_mean_zero(w.values(), &mut v);
    Ok(ScalarField::new(v))
}

/// Zero-integral field (tangent vector of the density manifold).
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField<T> {
    values: ScalarField<T>,
}

impl<T: Real> TangentField<T> {
    pub fn new(grid: &Grid<T>, values: ScalarField<T>) -> Result<Self> {
        grid.check(&values)?;
        checked_mean_zero(grid, &values)?;
        Ok(Self { values })
    }

    /// Subtracts the mean.
    pub fn project(grid: &Grid<T>, values: ScalarField<T>) -> Result<Self> {
        Ok(Self {
            values: projected(grid, values)?,
        })
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Self {
            values: grid.constant(T::zero()),
        }
    }

    pub(crate) fn from_raw(values: ScalarField<T>) -> Self {
        Self { values }
    }

    pub fn field(&self) -> &ScalarField<T> {
        &self.values
    }

    pub fn values(&self) -> &[T] {
        self.values.values()
    }

    pub fn into_field(self) -> ScalarField<T> {
        self.values
    }
}

/// Mean-zero representative of a potential modulo constants.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField<T> {
    values: ScalarField<T>,
}

impl<T: Real> PotentialField<T> {
    pub fn new(grid: &Grid<T>, values: ScalarField<T>) -> Result<Self> {
        grid.check(&values)?;
        checked_mean_zero(grid, &values)?;
        Ok(Self { values })
    }

    pub fn project(grid: &Grid<T>, values: ScalarField<T>) -> Result<Self> {
        Ok(Self {
            values: projected(grid, values)?,
        })
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Self {
            values: grid.constant(T::zero()),
        }
    }

    pub fn field(&self) -> &ScalarField<T> {
        &self.values
    }

    pub fn values(&self) -> &[T] {
        self.values.values()
    }

    pub fn into_field(self) -> ScalarField<T> {
        self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target in the quadrature norm.
    pub rel_tol: f64,
    /// Iteration cap; `None` means 50 × node count.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iter: None,
        }
    }
}

fn check_positive<T: Real>(grid: &Grid<T>, h: &ScalarField<T>) -> Result<()> {
    grid.check(h)?;
    if let Some((node, &value)) = h.values().iter().enumerate().find(|(_, v)| !(**v > T::zero()) || !v.is_finite()) {
        return Err(Error::NonPositiveWeight {
            node,
            value: value.as_f64(),
        });
    }
    Ok(())
}

/// `∇·(h ∇Φ)`.
pub fn weighted_apply<T: Real>(grid: &Grid<T>, h: &ScalarField<T>, phi: &PotentialField<T>) -> Result<TangentField<T>> {
    check_positive(grid, h)?;
    Ok(TangentField::from_raw(grid.flux_divergence(h, phi.field())?))
}

/// Mean-zero `Φ` with `∇·(h∇Φ) = −σ`.
pub fn weighted_solve<T: Real>(grid: &Grid<T>, h: &ScalarField<T>, sigma: &TangentField<T>) -> Result<PotentialField<T>> {
    weighted_solve_with(grid, h, sigma, &SolverOptions::default())
}

pub fn weighted_solve_with<T: Real>(
    grid: &Grid<T>,
    h: &ScalarField<T>,
    sigma: &TangentField<T>,
    options: &SolverOptions,
) -> Result<PotentialField<T>> {
    check_positive(grid, h)?;
    grid.check(sigma.field())?;
    checked_mean_zero(grid, sigma.field())?;
    let phi = solve_raw(grid, h, sigma.values(), options)?;
    Ok(PotentialField {
        values: ScalarField::new(phi),
    })
}

pub(crate) fn solve_raw<T: Real>(grid: &Grid<T>, h: &ScalarField<T>, rhs: &[T], options: &SolverOptions) -> Result<Vec<T>> {
    let weights = grid.weights();
    let diag = grid.flux_diagonal(h)?;
    let op = |x: &[T]| {
        let f = ScalarField::new(x.to_vec());
        grid.flux_divergence(h, &f)
            .map(|v| v.into_values().into_iter().map(|a| -a).collect())
            .unwrap_or_else(|_| vec![T::nan(); x.len()])
    };
    let setup = CgSetup {
        weights: weights.values(),
        diag: &diag,
        project: true,
        rel_tol: T::lit(options.rel_tol),
        max_iter: options.max_iter.unwrap_or(50 * grid.len()),
    };
    pcg(op, rhs, &setup)
}

/// `g_ρ(σ₁, σ₂) = ∫ (∇Φ₁, ∇Φ₂) ρ^γ` with `Φᵢ = (−Δ_{ρ^γ})⁻¹ σᵢ`.
pub fn metric_inner<T: Real>(
    rho: &DensityField<T>,
    params: &GammaParams<T>,
    s1: &TangentField<T>,
    s2: &TangentField<T>,
) -> Result<T> {
    let grid = rho.grid();
    let mobility = rho.field().powf(params.gamma());
    let p1 = weighted_solve(grid, &mobility, s1)?;
    let p2 = if s1 == s2 {
        p1.clone()
    } else {
        weighted_solve(grid, &mobility, s2)?
    };
    grid.weighted_energy(&mobility, p1.field(), p2.field())
}

/// `sqrt(∫ (ρ−μ) (−Δ)⁻¹(ρ−μ))`.
pub fn h_minus1_distance<T: Real>(rho: &DensityField<T>, mu: &DensityField<T>) -> Result<T> {
    rho.same_grid(mu)?;
    let grid = rho.grid();
    let diff = rho.field().sub(mu.field());
    let sigma = TangentField::project(grid, diff)?;
    let phi = weighted_solve(grid, &grid.constant(T::one()), &sigma)?;
    Ok(grid.l2_inner(sigma.field(), phi.field())?.max(T::zero()).sqrt())
}
