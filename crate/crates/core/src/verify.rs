//! Inequality verdicts: hypercontractivity envelope, log-Sobolev, Talagrand,
//! Poincaré and PH⁻¹I.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elliptic::{h_minus1_distance, solve_raw, SolverOptions};
use crate::error::{Error, Result};
use crate::flow::FlowTrace;
use crate::functionals::{divergence_gamma, fisher_gamma, DensityField, GammaParams};
use crate::geodesic::{wasserstein_gamma, ShootingOptions};
use crate::grid::ScalarField;
use crate::scalar::Real;

/// Default slack of the decay envelope.
pub const ENVELOPE_TOLERANCE: f64 = 1e-2;
/// Relative stopping tolerance on the Poincaré eigenvalue.
pub const EIGEN_TOLERANCE: f64 = 1e-8;
const EIGEN_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport<T> {
    pub name: String,
    pub lhs: T,
    pub rhs: T,
    /// Signed slack, `rhs − lhs` for `lhs ≤ rhs` statements.
    pub margin: T,
    pub pass: bool,
    /// False when the statement's hypotheses (κ > 0, γ ∈ [0,1]) fail.
    pub applicable: bool,
    /// Set when an inner solver did not converge; `pass` is then false.
    pub inconclusive: bool,
    pub context: String,
}

/// `1e-9 · max(|lhs|, |rhs|, 1)`.
pub fn report_tolerance<T: Real>(lhs: T, rhs: T) -> T {
    T::lit(1e-9) * lhs.abs().max(rhs.abs()).max(T::one())
}

impl<T: Real> VerifyReport<T> {
    fn decided(name: &str, lhs: T, rhs: T, extra_tol: T, context: String) -> Self {
        let margin = rhs - lhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin,
            pass: margin >= -(report_tolerance(lhs, rhs) + extra_tol),
            applicable: true,
            inconclusive: false,
            context,
        }
    }

    fn not_applicable(name: &str, context: String) -> Self {
        Self {
            name: name.into(),
            lhs: T::zero(),
            rhs: T::zero(),
            margin: T::zero(),
            pass: false,
            applicable: false,
            inconclusive: false,
            context,
        }
    }
}

fn gate<T: Real>(params: &GammaParams<T>, kappa: T) -> Option<String> {
    if !(kappa > T::zero()) {
        Some(format!("kappa = {kappa} is not positive"))
    } else if !params.in_unit_interval() {
        Some(format!("gamma = {} lies outside [0, 1]", params.gamma()))
    } else {
        None
    }
}

/// `D(t) ≤ e^{−2κt} D(0) (1 + tol_env)` at every recorded time. The report
/// carries the tightest time.
pub fn verify_hypercontractivity<T: Real>(
    trace: &FlowTrace<T>,
    params: &GammaParams<T>,
    kappa: T,
    tol_env: T,
) -> Result<VerifyReport<T>> {
    const NAME: &str = "hypercontractivity";
    if trace.times.is_empty() {
        return Err(Error::Input("empty flow trace".into()));
    }
    if let Some(why) = gate(params, kappa) {
        return Ok(VerifyReport::not_applicable(NAME, why));
    }
    let d0 = trace.divergence_series[0];
    let two = T::lit(2.0);
    let mut worst: Option<(T, T, T, T)> = None;
    for (&t, &d) in trace.times.iter().zip(&trace.divergence_series) {
        let bound = (-two * kappa * t).exp() * d0 * (T::one() + tol_env);
        let slack = bound - d;
        if worst.is_none_or(|w| slack < w.3) {
            worst = Some((t, d, bound, slack));
        }
    }
    let (t, lhs, rhs, _) = worst.expect("trace is non-empty");
    Ok(VerifyReport::decided(
        NAME,
        lhs,
        rhs,
        T::zero(),
        format!("gamma = {}, kappa = {kappa}, tightest at t = {t}", params.gamma()),
    ))
}

/// `D ≤ I / (2κ)`.
pub fn verify_lsi<T: Real>(
    rho: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
    kappa: T,
) -> Result<VerifyReport<T>> {
    const NAME: &str = "log_sobolev";
    if let Some(why) = gate(params, kappa) {
        return Ok(VerifyReport::not_applicable(NAME, why));
    }
    let d = divergence_gamma(rho, mu, params)?;
    let i = fisher_gamma(rho, mu, params)?;
    Ok(VerifyReport::decided(
        NAME,
        d,
        i / (T::lit(2.0) * kappa),
        T::zero(),
        format!("gamma = {}, kappa = {kappa}", params.gamma()),
    ))
}

/// `W_γ ≤ sqrt(2D/κ)`. The shooting misfit widens the tolerance by the
/// implied distance uncertainty `sqrt(2·misfit)`.
pub fn verify_talagrand<T: Real>(
    rho: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
    kappa: T,
    shooting: &ShootingOptions,
) -> Result<VerifyReport<T>> {
    const NAME: &str = "talagrand";
    if let Some(why) = gate(params, kappa) {
        return Ok(VerifyReport::not_applicable(NAME, why));
    }
    let d = divergence_gamma(rho, mu, params)?;
    let rhs = (T::lit(2.0) * d / kappa).max(T::zero()).sqrt();
    let context = format!("gamma = {}, kappa = {kappa}", params.gamma());
    if rho.values() == mu.values() {
        return Ok(VerifyReport::decided(NAME, T::zero(), rhs, T::zero(), context));
    }
    let w = wasserstein_gamma(rho, mu, params, shooting)?;
    let mut report = VerifyReport::decided(NAME, w.distance, rhs, (T::lit(2.0) * w.misfit).sqrt(), context);
    if !w.converged {
        report.pass = false;
        report.inconclusive = true;
        report.context.push_str(&format!(", shooting stopped after {} iterations", w.iterations));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareEigen<T> {
    pub lambda: T,
    /// Normalized with `∫f²μ = 1` and `∫fμ = 0`.
    pub eigenfunction: ScalarField<T>,
    pub iterations: usize,
}

/// Smallest nonzero eigenvalue of `−∇·(μ^γ∇f) = λ μ f` by inverse iteration
/// with Rayleigh quotients on `{∫fμ = 0}`.
pub fn poincare_optimal_lambda<T: Real>(mu: &DensityField<T>, params: &GammaParams<T>) -> Result<PoincareEigen<T>> {
    let grid = mu.grid();
    let mobility = mu.field().powf(params.gamma());
    let m = mu.field();
    let mu_mass = grid.integrate(m)?;
    let center_and_normalize = |f: ScalarField<T>| -> Result<ScalarField<T>> {
        let c = grid.integrate(&f.mul(m))? / mu_mass;
        let f = f.map(|v| v - c);
        let norm = grid.integrate(&f.mul(&f).mul(m))?.sqrt();
        Ok(f.scale(T::one() / norm))
    };
    let rayleigh = |f: &ScalarField<T>| -> Result<T> {
        Ok(grid.weighted_energy(&mobility, f, f)? / grid.integrate(&f.mul(f).mul(m))?)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let start = grid.sample(|x| {
        let e = grid.extent();
        let o = grid.origin();
        (0..grid.dim()).map(|a| (x[a] - o[a]) / e[a]).sum::<T>()
    });
    let start = ScalarField::new(
        start
            .values()
            .iter()
            .map(|&v| v + T::lit(0.1 * rng.random_range(-1.0..1.0)))
            .collect(),
    );
    let mut f = center_and_normalize(start)?;
    let mut lambda = rayleigh(&f)?;
    let options = SolverOptions {
        rel_tol: 1e-13,
        max_iter: None,
    };
    for it in 1..=EIGEN_MAX_ITER {
        let rhs = f.mul(m);
        let next = ScalarField::new(solve_raw(grid, &mobility, rhs.values(), &options)?);
        f = center_and_normalize(next)?;
        let updated = rayleigh(&f)?;
        let change = (updated - lambda).abs();
        lambda = updated;
        if change <= T::lit(EIGEN_TOLERANCE) * lambda.abs() && it > 2 {
            return Ok(PoincareEigen {
                lambda,
                eigenfunction: f,
                iterations: it,
            });
        }
    }
    Err(Error::SolverFailure {
        iterations: EIGEN_MAX_ITER,
        residual: lambda.as_f64(),
    })
}

/// `∫f²μ ≤ (1/λ) ∫‖∇f‖²μ^γ` for `μ`-centered `f`.
pub fn verify_poincare<T: Real>(
    f: &ScalarField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
    lambda: T,
) -> Result<VerifyReport<T>> {
    const NAME: &str = "poincare";
    let grid = mu.grid();
    grid.check(f)?;
    let m = mu.field();
    let lhs = grid.integrate(&f.mul(f).mul(m))?;
    let mean = grid.integrate(&f.mul(m))?;
    if mean.abs() > T::lit(1e-8) * lhs.sqrt().max(T::one()) {
        return Err(Error::NotMeanZero(mean.as_f64()));
    }
    let context = format!("gamma = {}, lambda = {lambda}", params.gamma());
    if !(lambda > T::zero()) {
        return Ok(VerifyReport::not_applicable(NAME, context));
    }
    let energy = grid.weighted_energy(&m.powf(params.gamma()), f, f)?;
    Ok(VerifyReport::decided(NAME, lhs, energy / lambda, T::zero(), context))
}

/// `D₀ ≤ sqrt(I₀)·H⁻¹ − (κ/2)(H⁻¹)²` for any real κ.
pub fn verify_ph1i<T: Real>(rho: &DensityField<T>, mu: &DensityField<T>, kappa: T) -> Result<VerifyReport<T>> {
    let pearson = GammaParams::new(T::zero())?;
    let d = divergence_gamma(rho, mu, &pearson)?;
    let i = fisher_gamma(rho, mu, &pearson)?;
    let h = h_minus1_distance(rho, mu)?;
    let rhs = i.max(T::zero()).sqrt() * h - T::lit(0.5) * kappa * h * h;
    Ok(VerifyReport::decided("ph1i", d, rhs, T::zero(), format!("kappa = {kappa}, h_minus1 = {h}")))
}
