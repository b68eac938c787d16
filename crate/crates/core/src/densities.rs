//! Density families used by scenarios and test batteries.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::functionals::DensityField;
use crate::grid::{Grid, Topology};
use crate::scalar::Real;

/// Smallest admissible density value (relative to the uniform level).
pub const MIN_RELATIVE_DENSITY: f64 = 0.05;

/// Log-space trigonometric coefficients, `[axis][mode - 1] = (a, b)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigCoefficients {
    pub modes: [Vec<(f64, f64)>; 2],
}

impl TrigCoefficients {
    pub fn set(&mut self, axis: usize, mode: usize, cos_coef: Option<f64>, sin_coef: Option<f64>) {
        let list = &mut self.modes[axis];
        if list.len() < mode {
            list.resize(mode, (0.0, 0.0));
        }
        if let Some(a) = cos_coef {
            list[mode - 1].0 = a;
        }
        if let Some(b) = sin_coef {
            list[mode - 1].1 = b;
        }
    }

    /// Sum of absolute coefficients, a bound on the log-oscillation.
    pub fn total_variation(&self) -> f64 {
        self.modes.iter().flatten().map(|(a, b)| a.abs() + b.abs()).sum()
    }
}

fn scaled_coordinate<T: Real>(grid: &Grid<T>, x: [T; 2], axis: usize) -> T {
    (x[axis] - grid.origin()[axis]) / grid.extent()[axis]
}

/// Log-potential `Σ a_k cos(ω_k s) + b_k sin(ω_k s)` per axis, with
/// `ω_k = 2πk` on periodic axes and `πk` on reflecting ones.
pub fn trig_log<T: Real>(grid: &Grid<T>, coeffs: &TrigCoefficients, x: [T; 2]) -> T {
    let base = match grid.topology() {
        Topology::Periodic => T::lit(2.0) * T::PI(),
        Topology::Reflecting => T::PI(),
    };
    let mut acc = T::zero();
    for axis in 0..grid.dim() {
        let s = scaled_coordinate(grid, x, axis);
        for (k, &(a, b)) in coeffs.modes[axis].iter().enumerate() {
            let arg = base * T::from_count(k + 1) * s;
            acc += T::lit(a) * arg.cos() + T::lit(b) * arg.sin();
        }
    }
    acc
}

pub fn uniform<T: Real>(grid: Arc<Grid<T>>) -> DensityField<T> {
    DensityField::uniform(grid)
}

fn check_floor<T: Real>(d: DensityField<T>) -> Result<DensityField<T>> {
    let level = T::lit(MIN_RELATIVE_DENSITY) / d.grid().volume();
    let min = d.field().min();
    if min < level {
        return Err(Error::Input(format!(
            "density minimum {min} falls below {level}"
        )));
    }
    Ok(d)
}

/// `exp(trig_log)` normalized to unit mass.
pub fn trig<T: Real>(grid: Arc<Grid<T>>, coeffs: &TrigCoefficients) -> Result<DensityField<T>> {
    let values = grid.sample(|x| trig_log(&grid, coeffs, x).exp());
    check_floor(DensityField::normalized(grid, values)?)
}

/// Truncated Gaussian `exp(−|x − c|² / (2 var))` on a reflecting domain.
pub fn gaussian_interval<T: Real>(grid: Arc<Grid<T>>, center: [T; 2], variance: T) -> Result<DensityField<T>> {
    if grid.topology() != Topology::Reflecting {
        return Err(Error::Input("gaussian_interval requires a reflecting domain".into()));
    }
    if !(variance > T::zero()) {
        return Err(Error::Input("gaussian_interval variance must be positive".into()));
    }
    let dim = grid.dim();
    let two = T::lit(2.0);
    let values = grid.sample(|x| {
        let r2: T = (0..dim).map(|a| (x[a] - center[a]) * (x[a] - center[a])).sum();
        (-r2 / (two * variance)).exp()
    });
    check_floor(DensityField::normalized(grid, values)?)
}

/// Midpoint of the domain.
pub fn domain_center<T: Real>(grid: &Grid<T>) -> [T; 2] {
    let half = T::lit(0.5);
    let o = grid.origin();
    let e = grid.extent();
    [o[0] + half * e[0], o[1] + half * e[1]]
}

/// Random log-trig density with `modes` modes per axis and total log
/// oscillation at most `amplitude` (so `max/min ≤ e^{2·amplitude}`).
pub fn random_trig<T: Real, R: Rng + ?Sized>(
    grid: Arc<Grid<T>>,
    rng: &mut R,
    modes: usize,
    amplitude: f64,
) -> Result<DensityField<T>> {
    random_trig_with_coefficients(grid, rng, modes, amplitude).map(|(d, _)| d)
}

pub fn random_trig_with_coefficients<T: Real, R: Rng + ?Sized>(
    grid: Arc<Grid<T>>,
    rng: &mut R,
    modes: usize,
    amplitude: f64,
) -> Result<(DensityField<T>, TrigCoefficients)> {
    let mut coeffs = TrigCoefficients::default();
    for axis in 0..grid.dim() {
        for k in 1..=modes {
            coeffs.set(axis, k, Some(rng.random_range(-1.0..1.0)), Some(rng.random_range(-1.0..1.0)));
        }
    }
    let tv = coeffs.total_variation();
    if tv > 0.0 {
        let s = amplitude / tv;
        for list in coeffs.modes.iter_mut() {
            for c in list.iter_mut() {
                c.0 *= s;
                c.1 *= s;
            }
        }
    }
    let d = trig(grid, &coeffs)?;
    Ok((d, coeffs))
}

/// `μ(1 + ε f)` renormalized; `f` is evaluated at node coordinates.
pub fn perturbed<T: Real>(mu: &DensityField<T>, eps: T, f: impl Fn([T; 2]) -> T) -> Result<DensityField<T>> {
    let grid = mu.grid().clone();
    let values = grid.sample(&f);
    let v = mu.field().zip_map(&values, |m, p| m * (T::one() + eps * p));
    DensityField::normalized(grid, v)
}
