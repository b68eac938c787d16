//! γ-divergence, γ-Fisher information and first variations.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::scalar::Real;

/// Lower clamp for density values.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

static FLOOR_HITS: AtomicUsize = AtomicUsize::new(0);

/// Number of node values raised to [`POSITIVITY_FLOOR`] since process start.
pub fn floor_hits() -> usize {
    FLOOR_HITS.load(Ordering::Relaxed)
}

pub(crate) fn mass_tolerance<T: Real>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(256.0))
}

/// Strictly positive unit-mass field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField<T> {
    grid: Arc<Grid<T>>,
    values: ScalarField<T>,
}

impl<T: Real> DensityField<T> {
    /// Validates unit mass; values below the floor are raised to it and counted.
    pub fn new(grid: Arc<Grid<T>>, values: ScalarField<T>) -> Result<Self> {
        grid.check(&values)?;
        if !values.all_finite() {
            return Err(Error::Input("density has non-finite values".into()));
        }
        let values = apply_floor(values);
        let mass = grid.integrate(&values)?;
        if (mass - T::one()).abs() > mass_tolerance() {
            return Err(Error::Input(format!("density mass is {mass}, expected 1")));
        }
        Ok(Self { grid, values })
    }

    /// Scales a positive field to unit mass.
    pub fn normalized(grid: Arc<Grid<T>>, values: ScalarField<T>) -> Result<Self> {
        grid.check(&values)?;
        let mass = grid.integrate(&values)?;
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::Input("density must have positive finite mass".into()));
        }
        Self::new(grid, values.scale(T::one() / mass))
    }

    pub fn uniform(grid: Arc<Grid<T>>) -> Self {
        let v = T::one() / grid.volume();
        let values = grid.constant(v);
        Self { grid, values }
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<Grid<T>>, values: ScalarField<T>) -> Self {
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
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

    pub(crate) fn same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::Input("densities live on different grids".into()))
        }
    }
}

pub(crate) fn apply_floor<T: Real>(values: ScalarField<T>) -> ScalarField<T> {
    let floor = T::lit(POSITIVITY_FLOOR);
    let hits = values.values().iter().filter(|&&v| v < floor).count();
    let out = values.map(|v| v.max(floor));
    if hits > 0 {
        FLOOR_HITS.fetch_add(hits, Ordering::Relaxed);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Generic,
    /// γ = 1 (relative entropy).
    One,
    /// γ = 2 (reverse relative entropy).
    Two,
}

/// Distance from 1 or 2 below which γ snaps to a dedicated branch.
pub const BRANCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams<T> {
    gamma: T,
    branch: Branch,
}

impl<T: Real> GammaParams<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::Input("gamma must be finite".into()));
        }
        let tol = T::lit(BRANCH_TOL);
        let branch = if (gamma - T::one()).abs() <= tol {
            Branch::One
        } else if (gamma - T::lit(2.0)).abs() <= tol {
            Branch::Two
        } else {
            Branch::Generic
        };
        Ok(Self { gamma, branch })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Whether γ ∈ [0, 1], the range where the decay theorem applies.
    pub fn in_unit_interval(&self) -> bool {
        self.gamma >= T::zero() && self.gamma <= T::one()
    }
}

/// Convex generator `f` with `f(1) = 0`.
pub fn f_gamma<T: Real>(u: T, params: &GammaParams<T>) -> Result<T> {
    if !(u > T::zero()) {
        return Err(Error::Input(format!("f_gamma needs a positive argument, got {u}")));
    }
    Ok(f_unchecked(u, params))
}

#[inline]
fn f_unchecked<T: Real>(u: T, params: &GammaParams<T>) -> T {
    let g = params.gamma;
    match params.branch {
        Branch::One => u * u.ln(),
        Branch::Two => -u.ln(),
        Branch::Generic => {
            let two = T::lit(2.0);
            (u.powf(two - g) - T::one()) / ((T::one() - g) * (two - g))
        }
    }
}

/// `∫ f(ρ/μ) μ`.
pub fn divergence_gamma<T: Real>(rho: &DensityField<T>, mu: &DensityField<T>, params: &GammaParams<T>) -> Result<T> {
    rho.same_grid(mu)?;
    let integrand = ScalarField::new(
        rho.values()
            .iter()
            .zip(mu.values())
            .map(|(&r, &m)| f_unchecked(r / m, params) * m)
            .collect(),
    );
    rho.grid.integrate(&integrand)
}

/// `δD/δρ`, up to an additive constant.
pub fn first_variation<T: Real>(
    rho: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
) -> Result<ScalarField<T>> {
    rho.same_grid(mu)?;
    Ok(first_variation_raw(rho.field(), mu.field(), params))
}

pub(crate) fn first_variation_raw<T: Real>(
    rho: &ScalarField<T>,
    mu: &ScalarField<T>,
    params: &GammaParams<T>,
) -> ScalarField<T> {
    let g = params.gamma;
    rho.zip_map(mu, |r, m| match params.branch {
        Branch::One => (r / m).ln() + T::one(),
        Branch::Two => -m / r,
        Branch::Generic => (r / m).powf(T::one() - g) / (T::one() - g),
    })
}

/// Which expression [`fisher_gamma_with`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FisherForm {
    /// `∫ ‖∇δD‖² ρ^γ`, the squared metric norm of the gradient (dissipation rate of the flow).
    #[default]
    GradientNorm,
    /// `∫ ‖∇log(ρ/μ)‖² ρ^γ μ^{2γ−2}`, kept for comparison only.
    Displayed,
}

/// γ-Fisher information (gradient-norm form).
pub fn fisher_gamma<T: Real>(rho: &DensityField<T>, mu: &DensityField<T>, params: &GammaParams<T>) -> Result<T> {
    fisher_gamma_with(rho, mu, params, FisherForm::GradientNorm)
}

pub fn fisher_gamma_with<T: Real>(
    rho: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
    form: FisherForm,
) -> Result<T> {
    rho.same_grid(mu)?;
    let grid = rho.grid();
    let g = params.gamma;
    match form {
        FisherForm::GradientNorm => {
            let dd = first_variation_raw(rho.field(), mu.field(), params);
            let mobility = rho.field().powf(g);
            Ok(grid.weighted_energy(&mobility, &dd, &dd)?.max(T::zero()))
        }
        FisherForm::Displayed => {
            let log_ratio = rho.field().zip_map(mu.field(), |r, m| (r / m).ln());
            let weight = rho
                .field()
                .zip_map(mu.field(), |r, m| r.powf(g) * m.powf(T::lit(2.0) * g - T::lit(2.0)));
            Ok(grid.weighted_energy(&weight, &log_ratio, &log_ratio)?.max(T::zero()))
        }
    }
}
