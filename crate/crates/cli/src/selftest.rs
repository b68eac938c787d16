//! Quick battery of exact identities that every build must satisfy.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gdm_core::densities::gaussian_interval;
use gdm_core::elliptic::{weighted_solve, TangentField};
use gdm_core::flow::{forward_operator, generator_backward};
use gdm_core::functionals::{divergence_gamma, f_gamma};
use gdm_core::gamma_calculus::criterion_kappa;
use gdm_core::geodesic::hamiltonian;
use gdm_core::geometry::{grad_divergence, hessian_form, log_gradient_coupling};
use gdm_core::verify::{verify_lsi, verify_ph1i};
use gdm_core::{build_grid, Branch, DensityField, GammaParams, Grid, GridConfig, Topology};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::Result;
use crate::report::write_json;
use crate::{EXIT_PASS, EXIT_VIOLATED};

type Check = fn() -> gdm_core::Result<bool>;

const GAMMAS: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];

fn circle() -> Arc<Grid<f64>> {
    Arc::new(build_grid(&GridConfig::line(Topology::Periodic, 1.0, 64)).expect("valid grid"))
}

fn torus() -> Arc<Grid<f64>> {
    Arc::new(build_grid(&GridConfig::plane(Topology::Periodic, [1.0, 1.0], [16, 16])).expect("valid grid"))
}

fn bumpy(g: &Arc<Grid<f64>>) -> gdm_core::Result<DensityField<f64>> {
    DensityField::normalized(g.clone(), g.sample(|x| (0.3 * (2.0 * PI * x[0]).sin()).exp()))
}

fn all_gammas(f: impl Fn(&GammaParams<f64>) -> gdm_core::Result<bool>) -> gdm_core::Result<bool> {
    for g in GAMMAS {
        if !f(&GammaParams::new(g)?)? {
            return Ok(false);
        }
    }
    Ok(true)
}

const CHECKS: [(&str, Check); 14] = [
    ("generator_vanishes_at_one", || all_gammas(|p| Ok(f_gamma(1.0, p)? == 0.0))),
    ("divergence_of_equal_densities", || {
        let mu = bumpy(&torus())?;
        all_gammas(|p| Ok(divergence_gamma(&mu, &mu, p)? == 0.0))
    }),
    ("backward_generator_kills_constants", || {
        let mu = bumpy(&circle())?;
        let c = mu.grid().constant(2.5);
        all_gammas(|p| Ok(generator_backward(&c, &mu, p)?.max_abs() == 0.0))
    }),
    ("backward_generator_is_laplacian_for_uniform", || {
        let g = torus();
        let mu = DensityField::uniform(g.clone());
        let phi = g.sample(|x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos());
        let lap = g.laplacian(&phi)?;
        all_gammas(|p| Ok(generator_backward(&phi, &mu, p)?.sub(&lap).max_abs() <= 1e-9 * lap.max_abs()))
    }),
    ("forward_operator_stationary", || {
        let mu = bumpy(&circle())?;
        all_gammas(|p| Ok(forward_operator(&mu, &mu, p)?.field().max_abs() == 0.0))
    }),
    ("gradient_vanishes_at_equilibrium", || {
        let mu = bumpy(&torus())?;
        all_gammas(|p| Ok(grad_divergence(&mu, &mu, p)?.field().max_abs() == 0.0))
    }),
    ("hamiltonian_of_zero_potential", || {
        let rho = bumpy(&circle())?;
        let zero = rho.grid().constant(0.0);
        all_gammas(|p| Ok(hamiltonian(&rho, &zero, p)? == 0.0))
    }),
    ("hessian_of_constant_potential", || {
        let g = circle();
        let rho = bumpy(&g)?;
        let mu = DensityField::uniform(g.clone());
        all_gammas(|p| Ok(hessian_form(&rho, &mu, p, &g.constant(1.0))?.abs() <= 1e-12))
    }),
    ("log_gradient_form_trivial", || {
        let g = torus();
        let u = DensityField::uniform(g.clone());
        let phi = g.sample(|x| (2.0 * PI * x[0]).sin());
        Ok(log_gradient_coupling(&u, &u, &phi)?.total == 0.0)
    }),
    ("gaussian_needs_reflecting", || Ok(gaussian_interval(circle(), [0.5, 0.0], 0.5).is_err())),
    ("flat_uniform_kappa_is_zero", || {
        let mu = DensityField::uniform(torus());
        all_gammas(|p| Ok(criterion_kappa(&mu, p)?.kappa.abs() <= 1e-12))
    }),
    ("inequalities_at_equilibrium", || {
        let mu = bumpy(&circle())?;
        let ph1i = verify_ph1i(&mu, &mu, 1.0)?;
        let lsi = verify_lsi(&mu, &mu, &GammaParams::new(0.5)?, 1.0)?;
        Ok(ph1i.pass && ph1i.lhs == 0.0 && lsi.pass && lsi.lhs == 0.0)
    }),
    ("branch_classification", || {
        Ok(GammaParams::new(1.0)?.branch() == Branch::One
            && GammaParams::new(2.0)?.branch() == Branch::Two
            && GammaParams::new(0.5)?.branch() == Branch::Generic)
    }),
    ("solve_of_zero_is_zero", || {
        let g = torus();
        let phi = weighted_solve(&g, &g.constant(1.0), &TangentField::zeros(&g))?;
        Ok(phi.field().max_abs() == 0.0)
    }),
];

/// Runs the battery across the rayon pool and writes `selftest.json`.
pub fn run(out: &Path) -> Result<(PathBuf, u8, String)> {
    let results: Vec<(&str, std::result::Result<bool, String>)> = CHECKS
        .par_iter()
        .map(|(name, check)| (*name, check().map_err(|e| e.to_string())))
        .collect();
    let failed: Vec<&str> = results
        .iter()
        .filter(|(_, r)| !matches!(r, Ok(true)))
        .map(|(n, _)| *n)
        .collect();
    let entries: Vec<Value> = results
        .iter()
        .map(|(name, r)| match r {
            Ok(pass) => json!({ "name": name, "pass": pass }),
            Err(e) => json!({ "name": name, "pass": false, "error": e }),
        })
        .collect();
    let code = if failed.is_empty() { EXIT_PASS } else { EXIT_VIOLATED };
    let path = out.join("selftest.json");
    write_json(&path, &json!({ "command": "selftest", "checks": entries, "failed": failed, "exit_code": code }))?;
    let summary = format!("selftest: {}/{} checks pass", CHECKS.len() - failed.len(), CHECKS.len());
    Ok((path, code, summary))
}
