//! γ-Wasserstein geodesics: Hamiltonian co-geodesic integration, shooting
//! for the distance, the Christoffel operator and Lagrangian characteristics.

use std::sync::Arc;

use rayon::prelude::*;

use crate::elliptic::{solve_raw, weighted_solve, PotentialField, SolverOptions, TangentField};
use crate::error::{Error, Result};
use crate::functionals::{DensityField, GammaParams, POSITIVITY_FLOOR};
use crate::grid::{Grid, ScalarField, Topology};
use crate::linalg::{cholesky_solve, project_mean_zero};
use crate::scalar::Real;

/// Field magnitude treated as blow-up.
pub const BLOW_UP_LIMIT: f64 = 1e12;
/// Minimum number of time steps on `[0, 1]`.
pub const MIN_STEPS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath<T> {
    pub grid: Arc<Grid<T>>,
    pub gamma: GammaParams<T>,
    /// Uniform partition of `[0, 1]`.
    pub times: Vec<T>,
    pub densities: Vec<ScalarField<T>>,
    /// Potentials per time (representatives modulo constants).
    pub potentials: Vec<ScalarField<T>>,
    pub hamiltonian_series: Vec<T>,
}

impl<T: Real> GeodesicPath<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn step(&self) -> T {
        self.times[1] - self.times[0]
    }

    /// `max_t |H(t) − H(0)| / H(0)` (absolute drift when `H(0) = 0`).
    pub fn hamiltonian_drift(&self) -> T {
        let h0 = self.hamiltonian_series[0];
        let worst = self
            .hamiltonian_series
            .iter()
            .fold(T::zero(), |m, &h| m.max((h - h0).abs()));
        if h0 > T::zero() {
            worst / h0
        } else {
            worst
        }
    }
}

pub(crate) fn hamiltonian_raw<T: Real>(grid: &Grid<T>, rho: &ScalarField<T>, phi: &ScalarField<T>, gamma: T) -> Result<T> {
    Ok(T::lit(0.5) * grid.weighted_energy(&rho.powf(gamma), phi, phi)?)
}

/// `½ ∫ ‖∇Φ‖² ρ^γ`.
pub fn hamiltonian<T: Real>(rho: &DensityField<T>, phi: &ScalarField<T>, params: &GammaParams<T>) -> Result<T> {
    hamiltonian_raw(rho.grid(), rho.field(), phi, params.gamma())
}

struct Stepper<'a, T> {
    grid: &'a Grid<T>,
    gamma: T,
}

impl<T: Real> Stepper<'_, T> {
    fn phi_rate(&self, rho_pow: &ScalarField<T>, phi: &ScalarField<T>) -> Result<ScalarField<T>> {
        let gd = self.grid.grad_dot(phi, phi)?;
        let c = -T::lit(0.5) * self.gamma;
        Ok(gd.zip_map(rho_pow, |g, r| c * r * g))
    }

    fn rho_rate(&self, rho: &ScalarField<T>, phi: &ScalarField<T>) -> Result<ScalarField<T>> {
        if rho.min() < T::lit(POSITIVITY_FLOOR) {
            return Err(Error::Positivity {
                step: 0,
                min: rho.min().as_f64(),
                threshold: POSITIVITY_FLOOR,
            });
        }
        Ok(self.grid.flux_divergence(&rho.powf(self.gamma), phi)?.scale(-T::one()))
    }

    fn rk4(
        &self,
        y: &ScalarField<T>,
        dt: T,
        rate: impl Fn(&ScalarField<T>) -> Result<ScalarField<T>>,
    ) -> Result<ScalarField<T>> {
        let half = T::lit(0.5) * dt;
        let k1 = rate(y)?;
        let k2 = rate(&y.zip_map(&k1, |a, k| a + half * k))?;
        let k3 = rate(&y.zip_map(&k2, |a, k| a + half * k))?;
        let k4 = rate(&y.zip_map(&k3, |a, k| a + dt * k))?;
        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);
        Ok(ScalarField::new(
            (0..y.len())
                .map(|i| {
                    y.values()[i]
                        + sixth
                            * (k1.values()[i] + two * k2.values()[i] + two * k3.values()[i] + k4.values()[i])
                })
                .collect(),
        ))
    }

    /// One Strang step: Φ half step (ρ frozen), ρ full step (Φ frozen), Φ half step.
    fn step(&self, rho: &ScalarField<T>, phi: &ScalarField<T>, dt: T) -> Result<(ScalarField<T>, ScalarField<T>)> {
        let half = T::lit(0.5) * dt;
        let phi = if self.gamma == T::zero() {
            phi.clone()
        } else {
            let c = rho.powf(self.gamma - T::one());
            self.rk4(phi, half, |p| self.phi_rate(&c, p))?
        };
        let rho = self.rk4(rho, dt, |r| self.rho_rate(r, &phi))?;
        let phi = if self.gamma == T::zero() {
            phi
        } else {
            let c = rho.powf(self.gamma - T::one());
            self.rk4(&phi, half, |p| self.phi_rate(&c, p))?
        };
        Ok((rho, phi))
    }
}

fn check_blow_up<T: Real>(step: usize, rho: &ScalarField<T>, phi: &ScalarField<T>) -> Result<()> {
    let limit = T::lit(BLOW_UP_LIMIT);
    if !rho.all_finite() || !phi.all_finite() || rho.max_abs() > limit || phi.max_abs() > limit {
        return Err(Error::BlowUp {
            step,
            limit: BLOW_UP_LIMIT,
        });
    }
    Ok(())
}

fn integrate<T: Real>(
    grid: &Grid<T>,
    rho0: &ScalarField<T>,
    phi0: &ScalarField<T>,
    gamma: T,
    steps: usize,
    visit: impl FnMut(usize, &ScalarField<T>, &ScalarField<T>) -> Result<()>,
) -> Result<(ScalarField<T>, ScalarField<T>)> {
    integrate_partial(grid, rho0, phi0, gamma, T::one() / T::from_count(steps), steps, visit)
}

/// Runs `count` Strang steps of size `dt`.
pub(crate) fn integrate_partial<T: Real>(
    grid: &Grid<T>,
    rho0: &ScalarField<T>,
    phi0: &ScalarField<T>,
    gamma: T,
    dt: T,
    count: usize,
    mut visit: impl FnMut(usize, &ScalarField<T>, &ScalarField<T>) -> Result<()>,
) -> Result<(ScalarField<T>, ScalarField<T>)> {
    let stepper = Stepper { grid, gamma };
    let mut rho = rho0.clone();
    let mut phi = phi0.clone();
    visit(0, &rho, &phi)?;
    for k in 1..=count {
        let (r, p) = stepper.step(&rho, &phi, dt).map_err(|e| match e {
            Error::Positivity { min, threshold, .. } => Error::Positivity { step: k, min, threshold },
            other => other,
        })?;
        check_blow_up(k, &r, &p)?;
        rho = r;
        phi = p;
        visit(k, &rho, &phi)?;
    }
    Ok((rho, phi))
}

/// Integrates `∂_tρ + ∇·(ρ^γ∇Φ) = 0`, `∂_tΦ + (γ/2)‖∇Φ‖²ρ^{γ−1} = 0` on `[0, 1]`.
pub fn cogeodesic_integrate<T: Real>(
    rho0: &DensityField<T>,
    phi0: &ScalarField<T>,
    params: &GammaParams<T>,
    steps: usize,
) -> Result<GeodesicPath<T>> {
    cogeodesic_integrate_raw(rho0.grid().clone(), rho0.field(), phi0, params, steps)
}

pub(crate) fn cogeodesic_integrate_raw<T: Real>(
    grid: Arc<Grid<T>>,
    rho0: &ScalarField<T>,
    phi0: &ScalarField<T>,
    params: &GammaParams<T>,
    steps: usize,
) -> Result<GeodesicPath<T>> {
    if steps < MIN_STEPS {
        return Err(Error::Input(format!("need at least {MIN_STEPS} steps, got {steps}")));
    }
    grid.check(rho0)?;
    grid.check(phi0)?;
    let gamma = params.gamma();
    let mut path = GeodesicPath {
        grid: grid.clone(),
        gamma: *params,
        times: Vec::with_capacity(steps + 1),
        densities: Vec::with_capacity(steps + 1),
        potentials: Vec::with_capacity(steps + 1),
        hamiltonian_series: Vec::with_capacity(steps + 1),
    };
    let dt = T::one() / T::from_count(steps);
    integrate(&grid, rho0, phi0, gamma, steps, |k, r, p| {
        path.times.push(T::from_count(k) * dt);
        path.hamiltonian_series.push(hamiltonian_raw(&grid, r, p, gamma)?);
        path.densities.push(r.clone());
        path.potentials.push(p.clone());
        Ok(())
    })?;
    Ok(path)
}

/// Terminal density of the co-geodesic started at `(ρ₀, Φ₀)`.
fn shoot<T: Real>(grid: &Grid<T>, rho0: &ScalarField<T>, phi0: &ScalarField<T>, gamma: T, steps: usize) -> Result<ScalarField<T>> {
    integrate(grid, rho0, phi0, gamma, steps, |_, _, _| Ok(())).map(|(r, _)| r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    /// Time steps on `[0, 1]`.
    pub steps: usize,
    /// Target for `‖ρ(1) − μ‖ / ‖ρ − μ‖` (L² norms).
    pub tol: f64,
    pub max_iter: usize,
    /// Number of continuation stages in γ starting from 0 (`None` = direct).
    pub continuation: Option<usize>,
    /// Relative finite-difference increment for Jacobian columns.
    pub fd_eps: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            steps: 256,
            tol: 1e-9,
            max_iter: 40,
            continuation: None,
            fd_eps: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WassersteinResult<T> {
    pub distance: T,
    pub path: GeodesicPath<T>,
    /// `½ ‖ρ(1) − μ‖²_{L²}`.
    pub misfit: T,
    pub converged: bool,
    pub iterations: usize,
}

/// Largest node count accepted by the shooting solver per dimension.
pub const SHOOTING_CAP: [usize; 2] = [128, 32 * 32];

/// γ-Wasserstein distance by shooting on the initial potential.
pub fn wasserstein_gamma<T: Real>(
    rho: &DensityField<T>,
    mu: &DensityField<T>,
    params: &GammaParams<T>,
    options: &ShootingOptions,
) -> Result<WassersteinResult<T>> {
    rho.same_grid(mu)?;
    let grid = rho.grid().clone();
    if grid.len() > SHOOTING_CAP[grid.dim() - 1] {
        return Err(Error::Input(format!(
            "shooting is limited to {} nodes in {}D",
            SHOOTING_CAP[grid.dim() - 1],
            grid.dim()
        )));
    }
    let gamma = params.gamma();
    if gamma < T::zero() || gamma > T::lit(2.0) {
        return Err(Error::Input("gamma must lie in [0, 2] for geodesics".into()));
    }
    if options.steps < MIN_STEPS {
        return Err(Error::Input(format!("need at least {MIN_STEPS} steps")));
    }
    let weights = grid.weights();
    let sqrt_w: Vec<T> = weights.values().iter().map(|w| w.sqrt()).collect();
    let gap = rho.field().sub(mu.field());
    let scale = grid.l2_inner(&gap, &gap)?.sqrt();
    let target = T::lit(options.tol) * scale;

    let stages: Vec<T> = match options.continuation {
        Some(k) if k > 1 => (0..=k).map(|j| gamma * T::from_count(j) / T::from_count(k)).collect(),
        _ => vec![gamma],
    };
    let solver = SolverOptions::default();
    let first = stages[0];
    let mobility = rho.field().powf(first);
    let rhs: Vec<T> = mu.values().iter().zip(rho.values()).map(|(&m, &r)| m - r).collect();
    let mut x = solve_raw(&grid, &mobility, &rhs, &solver)?;

    let mut iterations = 0;
    let mut converged = false;
    let mut res_norm = T::infinity();
    for &g in &stages {
        let stage = GaussNewton {
            grid: &grid,
            rho: rho.field(),
            mu: mu.values(),
            sqrt_w: &sqrt_w,
            gamma: g,
            steps: options.steps,
            fd_eps: T::lit(options.fd_eps),
        };
        let (xs, norm, its, ok) = stage.run(x, target, options.max_iter)?;
        x = xs;
        res_norm = norm;
        iterations += its;
        converged = ok;
    }
    let phi0 = ScalarField::new(x);
    let path = cogeodesic_integrate_raw(grid.clone(), rho.field(), &phi0, params, options.steps)?;
    let distance = (T::lit(2.0) * path.hamiltonian_series[0]).max(T::zero()).sqrt();
    let misfit = T::lit(0.5) * res_norm * res_norm;
    Ok(WassersteinResult {
        distance,
        path,
        misfit,
        converged: converged || scale == T::zero(),
        iterations,
    })
}

struct GaussNewton<'a, T> {
    grid: &'a Grid<T>,
    rho: &'a ScalarField<T>,
    mu: &'a [T],
    sqrt_w: &'a [T],
    gamma: T,
    steps: usize,
    fd_eps: T,
}

impl<T: Real> GaussNewton<'_, T> {
    fn residual(&self, x: &[T]) -> Result<Vec<T>> {
        let end = shoot(self.grid, self.rho, &ScalarField::new(x.to_vec()), self.gamma, self.steps)?;
        Ok(end
            .values()
            .iter()
            .zip(self.mu)
            .zip(self.sqrt_w)
            .map(|((&r, &m), &s)| s * (r - m))
            .collect())
    }

    fn norm(v: &[T]) -> T {
        v.iter().map(|&a| a * a).sum::<T>().sqrt()
    }

    /// Residual at `x`, shrinking `x` towards zero while the shot breaks
    /// positivity (a linearized start can overshoot into crossing characteristics).
    fn admissible_start(&self, x: &mut [T]) -> Result<Vec<T>> {
        let mut attempts = 0;
        loop {
            match self.residual(x) {
                Ok(r) => return Ok(r),
                Err(Error::Positivity { .. } | Error::BlowUp { .. }) if attempts < 40 => {
                    x.iter_mut().for_each(|v| *v *= T::lit(0.5));
                    attempts += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Levenberg–Marquardt on the weighted terminal residual. Returns the
    /// final iterate, residual norm, iteration count and convergence flag.
    fn run(&self, mut x: Vec<T>, target: T, max_iter: usize) -> Result<(Vec<T>, T, usize, bool)> {
        let n = x.len();
        let w: Vec<T> = self.sqrt_w.iter().map(|&s| s * s).collect();
        let mut r = self.admissible_start(&mut x)?;
        let mut norm = Self::norm(&r);
        let mut lambda = T::lit(1e-6);
        for it in 0..max_iter {
            if norm <= target {
                return Ok((x, norm, it, true));
            }
            let xmax = x.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
            let eps = self.fd_eps * xmax.max(T::one());
            let columns: Vec<Result<Vec<T>>> = (0..n)
                .into_par_iter()
                .map(|k| {
                    let mut xp = x.clone();
                    xp[k] += eps;
                    let rp = self.residual(&xp)?;
                    Ok(rp.iter().zip(&r).map(|(&a, &b)| (a - b) / eps).collect())
                })
                .collect();
            let columns: Vec<Vec<T>> = columns.into_iter().collect::<Result<_>>()?;
            let mut normal = vec![T::zero(); n * n];
            let mut grad = vec![T::zero(); n];
            for i in 0..n {
                for j in i..n {
                    let v: T = columns[i].iter().zip(&columns[j]).map(|(&a, &b)| a * b).sum();
                    normal[i * n + j] = v;
                    normal[j * n + i] = v;
                }
                grad[i] = columns[i].iter().zip(&r).map(|(&a, &b)| a * b).sum();
            }
            let mean_diag = (0..n).map(|i| normal[i * n + i]).sum::<T>() / T::from_count(n);
            let mut improved = false;
            for _ in 0..12 {
                let mut a = normal.clone();
                let shift = lambda * mean_diag.max(T::min_positive_value());
                for i in 0..n {
                    a[i * n + i] += shift;
                }
                let mut delta: Vec<T> = grad.iter().map(|&g| -g).collect();
                if cholesky_solve(&mut a, &mut delta).is_err() {
                    lambda *= T::lit(10.0);
                    continue;
                }
                project_mean_zero(&w, &mut delta);
                let trial: Vec<T> = x.iter().zip(&delta).map(|(&a, &d)| a + d).collect();
                match self.residual(&trial) {
                    Ok(rt) => {
                        let nt = Self::norm(&rt);
                        if nt < norm {
                            x = trial;
                            r = rt;
                            norm = nt;
                            lambda = (lambda / T::lit(3.0)).max(T::lit(1e-12));
                            improved = true;
                            break;
                        }
                        lambda *= T::lit(4.0);
                    }
                    Err(_) => lambda *= T::lit(4.0),
                }
            }
            if !improved {
                return Ok((x, norm, it + 1, norm <= target));
            }
        }
        Ok((x, norm, max_iter, norm <= target))
    }
}

/// `Γ_ρ(σ₁, σ₂)` expressed through `Φᵢ = (−Δ_{ρ^γ})⁻¹ σᵢ`.
pub fn christoffel_apply<T: Real>(
    rho: &DensityField<T>,
    params: &GammaParams<T>,
    s1: &TangentField<T>,
    s2: &TangentField<T>,
) -> Result<TangentField<T>> {
    let grid = rho.grid();
    let g = params.gamma();
    let mobility = rho.field().powf(g);
    let p1 = weighted_solve(grid, &mobility, s1)?;
    let p2 = weighted_solve(grid, &mobility, s2)?;
    christoffel_from_potentials(grid, rho.field(), g, p1.field(), p2.field()).map(TangentField::from_raw)
}

pub(crate) fn christoffel_from_potentials<T: Real>(
    grid: &Grid<T>,
    rho: &ScalarField<T>,
    gamma: T,
    p1: &ScalarField<T>,
    p2: &ScalarField<T>,
) -> Result<ScalarField<T>> {
    let mobility = rho.powf(gamma);
    let lower = rho.powf(gamma - T::one());
    let w1 = lower.mul(&grid.flux_divergence(&mobility, p1)?);
    let w2 = lower.mul(&grid.flux_divergence(&mobility, p2)?);
    let t1 = grid.flux_divergence(&w1, p2)?;
    let t2 = grid.flux_divergence(&w2, p1)?;
    let t3 = grid.flux_divergence(&mobility, &grid.grad_dot(p1, p2)?.mul(&lower))?;
    let c = -T::lit(0.5) * gamma;
    Ok(ScalarField::new(
        (0..grid.len())
            .map(|k| c * (t1.values()[k] + t2.values()[k] + t3.values()[k]))
            .collect(),
    ))
}

/// `max_t ‖∂_ttρ + Γ_ρ(∂_tρ, ∂_tρ)‖ / max_t ‖∂_ttρ‖` along a path, with
/// central differences in time (L² norms).
pub fn geodesic_equation_residual<T: Real>(path: &GeodesicPath<T>) -> Result<T> {
    let grid = &path.grid;
    let dt = path.step();
    let g = path.gamma.gamma();
    let mut worst = T::zero();
    let mut scale = T::zero();
    for k in 1..path.len() - 1 {
        let (rm, r0, rp) = (&path.densities[k - 1], &path.densities[k], &path.densities[k + 1]);
        let acc = ScalarField::new(
            (0..grid.len())
                .map(|i| (rp.values()[i] - T::lit(2.0) * r0.values()[i] + rm.values()[i]) / (dt * dt))
                .collect(),
        );
        let vel = rp.sub(rm).scale(T::one() / (T::lit(2.0) * dt));
        let sigma = TangentField::project(grid, vel)?;
        let phi = solve_raw(grid, &r0.powf(g), sigma.values(), &SolverOptions::default())?;
        let phi = ScalarField::new(phi);
        let chris = christoffel_from_potentials(grid, r0, g, &phi, &phi)?;
        let res = acc.add(&chris);
        worst = worst.max(grid.l2_inner(&res, &res)?.sqrt());
        scale = scale.max(grid.l2_inner(&acc, &acc)?.sqrt());
    }
    Ok(if scale > T::zero() { worst / scale } else { worst })
}

fn interpolate<T: Real>(grid: &Grid<T>, f: &[T], x: T) -> Option<T> {
    let h = grid.spacing()[0];
    let n = grid.shape()[0];
    let s = (x - grid.origin()[0]) / h;
    match grid.topology() {
        Topology::Periodic => {
            let nf = T::from_count(n);
            let s = s - (s / nf).floor() * nf;
            let i = s.floor().to_usize()?.min(n - 1);
            let frac = s - T::from_count(i);
            let j = (i + 1) % n;
            Some(f[i] + frac * (f[j] - f[i]))
        }
        Topology::Reflecting => {
            if s < T::zero() || s > T::from_count(n - 1) {
                return None;
            }
            let i = s.floor().to_usize()?.min(n - 2);
            let frac = s - T::from_count(i);
            Some(f[i] + frac * (f[i + 1] - f[i]))
        }
    }
}

/// Residual of the Lagrangian second-order ODE along characteristics
/// `Ẋ = ρ^{γ−1}∂_xΦ` (1D). For `v = ρ^{γ−1}∂_xΦ` the particle acceleration
/// satisfies `Ẍ + 2(γ−1) v v_x − ((γ−2)(γ−1)/2) (log ρ)_x v² = 0`; the
/// maximum residual is normalized by the largest of `|Ẍ|` and `|v v_x|`.
pub fn lagrangian_residual<T: Real>(path: &GeodesicPath<T>) -> Result<T> {
    let grid = &path.grid;
    if grid.dim() != 1 {
        return Err(Error::Input("lagrangian_residual needs a 1D path".into()));
    }
    let g = path.gamma.gamma();
    let dt = path.step();
    let nt = path.len();
    let mut vel = Vec::with_capacity(nt);
    let mut vel_x = Vec::with_capacity(nt);
    let mut log_x = Vec::with_capacity(nt);
    for (rho, phi) in path.densities.iter().zip(&path.potentials) {
        let dphi = grid.nodal_gradient(phi)?;
        let v = ScalarField::new(
            rho.values()
                .iter()
                .zip(dphi.component(0))
                .map(|(&r, &d)| r.powf(g - T::one()) * d)
                .collect(),
        );
        vel_x.push(grid.smooth_gradient(&v)?.component(0).to_vec());
        log_x.push(grid.smooth_gradient(&rho.map(|r| r.ln()))?.component(0).to_vec());
        vel.push(v.into_values());
    }
    let particles = 32;
    let origin = grid.origin()[0];
    let extent = grid.extent()[0];
    let (lo, span) = match grid.topology() {
        Topology::Periodic => (origin, extent),
        Topology::Reflecting => (origin + T::lit(0.1) * extent, T::lit(0.8) * extent),
    };
    let half = T::lit(0.5);
    let mut tracks = vec![vec![T::zero(); nt]; particles];
    for (p, track) in tracks.iter_mut().enumerate() {
        let mut x = lo + span * T::from_count(p) / T::from_count(particles);
        track[0] = x;
        for k in 0..nt - 1 {
            let escaped = || Error::ParticleEscaped { time_index: k };
            let v0 = interpolate(grid, &vel[k], x).ok_or_else(escaped)?;
            let xm = x + half * dt * v0;
            let va = interpolate(grid, &vel[k], xm).ok_or_else(escaped)?;
            let vb = interpolate(grid, &vel[k + 1], xm).ok_or_else(escaped)?;
            x += dt * half * (va + vb);
            track[k + 1] = x;
        }
    }
    let c_vv = T::lit(2.0) * (g - T::one());
    let c_log = (g - T::lit(2.0)) * (g - T::one()) / T::lit(2.0);
    let mut worst = T::zero();
    let mut scale = T::zero();
    for track in &tracks {
        for k in 1..nt - 1 {
            let acc = (track[k + 1] - T::lit(2.0) * track[k] + track[k - 1]) / (dt * dt);
            let x = track[k];
            let err = || Error::ParticleEscaped { time_index: k };
            let v = interpolate(grid, &vel[k], x).ok_or_else(err)?;
            let vx = interpolate(grid, &vel_x[k], x).ok_or_else(err)?;
            let lx = interpolate(grid, &log_x[k], x).ok_or_else(err)?;
            let res = acc + c_vv * v * vx - c_log * lx * v * v;
            worst = worst.max(res.abs());
            scale = scale.max(acc.abs()).max((v * vx).abs());
        }
    }
    Ok(if scale > T::zero() { worst / scale } else { T::zero() })
}

/// Convenience wrapper returning a mean-zero initial potential from a field.
pub fn potential<T: Real>(grid: &Grid<T>, f: ScalarField<T>) -> Result<ScalarField<T>> {
    PotentialField::project(grid, f).map(PotentialField::into_field)
}
