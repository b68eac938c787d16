use std::path::{Path, PathBuf};
use std::time::Instant;

use gdm_core::densities::{trig_log, TrigCoefficients};
use gdm_core::flow::{run_flow_with, FlowOptions};
use gdm_core::functionals::divergence_gamma;
use gdm_core::gamma_calculus::{criterion_kappa, poincare_bound, gamma2_energy_check};
use gdm_core::geodesic::{wasserstein_gamma, ShootingOptions};
use gdm_core::geometry::yano_check;
use gdm_core::verify::{
    poincare_optimal_lambda, verify_hypercontractivity, verify_lsi, verify_ph1i, verify_poincare, verify_talagrand,
    ENVELOPE_TOLERANCE,
};
use gdm_core::{GammaParams, Grid, ScalarField, Topology, VerifyReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::error::Result;
use crate::report::{check_json, digest, number, write_csv, write_json};
use crate::scenario::Scenario;
use crate::{EXIT_NOT_APPLICABLE, EXIT_PASS, EXIT_SOLVER, EXIT_VIOLATED};

/// Most density snapshots written by `flow`.
const MAX_DUMP_ROWS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Yano,
    Kappa,
    Poincare,
    Flow,
    Lsi,
    Talagrand,
    Ph1i,
    Geodesic,
    Gamma2,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Yano => "yano",
            Command::Kappa => "kappa",
            Command::Poincare => "poincare",
            Command::Flow => "flow",
            Command::Lsi => "lsi",
            Command::Talagrand => "talagrand",
            Command::Ph1i => "ph1i",
            Command::Geodesic => "geodesic",
            Command::Gamma2 => "gamma2",
        }
    }
}

/// Inputs of one invocation.
pub struct Invocation<'a> {
    pub command: Command,
    pub scenario: &'a Scenario,
    /// Raw scenario file, hashed into the report.
    pub source: &'a [u8],
    pub overrides: (Option<usize>, Option<f64>),
    pub out: &'a Path,
}

/// Outcome of a subcommand: report path, exit code, one-line summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: PathBuf,
    pub exit_code: u8,
    pub summary: String,
}

struct Collected {
    checks: Vec<VerifyReport<f64>>,
    values: Map<String, Value>,
    /// Forces the solver-failure code (e.g. shooting did not converge).
    solver_failed: bool,
}

impl Collected {
    fn new() -> Self {
        Self {
            checks: Vec::new(),
            values: Map::new(),
            solver_failed: false,
        }
    }

    fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.into(), number(v));
    }

    fn status(&self) -> (&'static str, u8) {
        if self.solver_failed || self.checks.iter().any(|c| c.inconclusive) {
            return ("solver_failure", EXIT_SOLVER);
        }
        let applicable: Vec<_> = self.checks.iter().filter(|c| c.applicable).collect();
        if !self.checks.is_empty() && applicable.is_empty() {
            ("not_applicable", EXIT_NOT_APPLICABLE)
        } else if applicable.iter().any(|c| !c.pass) {
            ("violated", EXIT_VIOLATED)
        } else {
            ("pass", EXIT_PASS)
        }
    }
}

/// Identity check expressed as a report: passes when the relative gap is
/// within `tol`.
fn identity_check(name: &str, lhs: f64, rhs: f64, tol: f64) -> VerifyReport<f64> {
    let gap = (lhs - rhs).abs();
    let scale = lhs.abs().max(rhs.abs()).max(1e-300);
    VerifyReport {
        name: name.into(),
        lhs,
        rhs,
        margin: tol * scale - gap,
        pass: gap <= tol * scale,
        applicable: true,
        inconclusive: false,
        context: format!("relative gap {:.3e}, tolerance {tol:e}", gap / scale),
    }
}

/// Deterministic smooth test potential drawn from the scenario seed. On
/// reflecting domains only cosine modes are used so the potential has zero
/// normal derivative at the walls.
pub fn test_potential(grid: &Grid<f64>, seed: u64) -> ScalarField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = TrigCoefficients::default();
    let walls = grid.topology() == Topology::Reflecting;
    for axis in 0..grid.dim() {
        for k in 1..=2 {
            let a = rng.random_range(-1.0..1.0);
            let b = rng.random_range(-1.0..1.0);
            c.set(axis, k, Some(a), (!walls).then_some(b));
        }
    }
    grid.sample(|x| trig_log(grid, &c, x))
}

fn inputs_json(s: &Scenario, overrides: (Option<usize>, Option<f64>)) -> Value {
    json!({
        "dim": s.dim,
        "topology": format!("{:?}", s.topology).to_lowercase(),
        "extent": s.extent[..s.dim].iter().map(|&e| number(e)).collect::<Vec<_>>(),
        "n": &s.n[..s.dim],
        "gamma": number(s.gamma),
        "mu": s.mu.to_string(),
        "rho0": s.rho0.as_ref().map(|r| r.to_string()),
        "tmax": number(s.tmax),
        "dt": number(s.dt),
        "tol": number(s.tol),
        "seed": s.seed,
        "overrides": { "n": overrides.0, "gamma": overrides.1.map(number) },
    })
}

pub fn run(inv: &Invocation<'_>) -> Result<Outcome> {
    let start = Instant::now();
    let s = inv.scenario;
    let grid = s.grid()?;
    let mu = s.mu(&grid)?;
    let params = GammaParams::new(s.gamma)?;
    let name = inv.command.name();
    let mut c = Collected::new();

    match inv.command {
        Command::Yano => {
            let phi = test_potential(&grid, s.seed);
            let y = yano_check(&mu, &params, &phi)?;
            c.value("relative_gap", y.relative_gap);
            c.checks.push(identity_check("yano", y.lhs, y.rhs, s.tol));
        }
        Command::Gamma2 => {
            let rho = s.rho0(&grid)?;
            let phi = test_potential(&grid, s.seed);
            let r = gamma2_energy_check(&rho, &mu, &params, &phi)?;
            c.value("relative_gap", r.relative_gap);
            c.checks.push(identity_check("gamma2", r.lhs, r.rhs, s.tol));
        }
        Command::Kappa => {
            let k = criterion_kappa(&mu, &params)?;
            c.value("kappa", k.kappa);
            c.values.insert("positive".into(), Value::Bool(k.positive));
            c.value("poincare_bound", poincare_bound(&mu, &params)?.kappa);
        }
        Command::Poincare => {
            let eig = poincare_optimal_lambda(&mu, &params)?;
            let bound = poincare_bound(&mu, &params)?.kappa;
            c.value("lambda_opt", eig.lambda);
            c.value("poincare_bound", bound);
            c.values.insert("iterations".into(), json!(eig.iterations));
            let mut sharp = verify_poincare(&eig.eigenfunction, &mu, &params, eig.lambda)?;
            sharp.name = "poincare_eigenfunction".into();
            c.checks.push(sharp);
            c.checks.push(VerifyReport {
                name: "bound_below_optimum".into(),
                lhs: eig.lambda,
                rhs: bound,
                margin: eig.lambda - bound,
                pass: eig.lambda >= bound - s.tol,
                applicable: true,
                inconclusive: false,
                context: "optimal constant against the curvature bound".into(),
            });
            if s.rho0.is_some() {
                let rho = s.rho0(&grid)?;
                let f = rho.field().zip_map(mu.field(), |r, m| r / m - 1.0);
                let mut r = verify_poincare(&f, &mu, &params, bound)?;
                r.name = "poincare_rho0".into();
                c.checks.push(r);
            }
        }
        Command::Flow => {
            let rho = s.rho0(&grid)?;
            let opts = FlowOptions {
                keep_densities: true,
                ..Default::default()
            };
            let trace = run_flow_with(&rho, &mu, &params, s.tmax, s.dt, &opts)?;
            let kappa = criterion_kappa(&mu, &params)?.kappa;
            c.value("kappa", kappa);
            c.value("final_divergence", *trace.divergence_series.last().unwrap_or(&0.0));
            c.value("mass_drift", trace.mass_drift);
            c.value("min_density", trace.min_density);
            c.values.insert("steps".into(), json!(trace.times.len() - 1));
            c.checks
                .push(verify_hypercontractivity(&trace, &params, kappa, ENVELOPE_TOLERANCE)?);

            let rows = trace.times.iter().enumerate().map(|(k, &t)| {
                vec![t, trace.divergence_series[k], trace.fisher_series[k]]
            });
            write_csv(&inv.out.join("flow.csv"), &["t", "D", "I"].map(String::from), rows)?;

            let snaps = trace.densities.as_deref().unwrap_or_default();
            let stride = snaps.len().div_ceil(MAX_DUMP_ROWS).max(1);
            let mut picks: Vec<usize> = (0..snaps.len()).step_by(stride).collect();
            if picks.last() != Some(&(snaps.len() - 1)) {
                picks.push(snaps.len() - 1);
            }
            let mut header = vec!["t".to_string()];
            header.extend((0..grid.len()).map(|k| format!("rho_{k}")));
            let rows = picks.iter().map(|&k| {
                let mut row = vec![trace.times[k]];
                row.extend_from_slice(snaps[k].values());
                row
            });
            write_csv(&inv.out.join("flow_density.csv"), &header, rows)?;
            let header = ["node", "x", "y", "weight", "mu"].map(String::from);
            let rows = (0..grid.len()).map(|k| {
                let x = grid.coords(k);
                vec![k as f64, x[0], x[1], grid.weight(k), mu.values()[k]]
            });
            write_csv(&inv.out.join("flow_mu.csv"), &header, rows)?;
        }
        Command::Lsi => {
            let rho = s.rho0(&grid)?;
            let kappa = criterion_kappa(&mu, &params)?.kappa;
            c.value("kappa", kappa);
            c.checks.push(verify_lsi(&rho, &mu, &params, kappa)?);
        }
        Command::Talagrand => {
            let rho = s.rho0(&grid)?;
            let kappa = criterion_kappa(&mu, &params)?.kappa;
            c.value("kappa", kappa);
            c.checks
                .push(verify_talagrand(&rho, &mu, &params, kappa, &ShootingOptions::default())?);
        }
        Command::Ph1i => {
            let rho = s.rho0(&grid)?;
            let kappa = criterion_kappa(&mu, &GammaParams::new(0.0)?)?.kappa;
            c.value("kappa_pearson", kappa);
            c.checks.push(verify_ph1i(&rho, &mu, kappa)?);
        }
        Command::Geodesic => {
            let rho = s.rho0(&grid)?;
            let w = wasserstein_gamma(&rho, &mu, &params, &ShootingOptions::default())?;
            c.value("distance", w.distance);
            c.value("misfit", w.misfit);
            c.value("hamiltonian_drift", w.path.hamiltonian_drift());
            c.values.insert("converged".into(), Value::Bool(w.converged));
            c.values.insert("iterations".into(), json!(w.iterations));
            c.solver_failed = !w.converged;
            let rows = w
                .path
                .times
                .iter()
                .zip(&w.path.densities)
                .zip(&w.path.hamiltonian_series)
                .map(|((&t, r), &h)| {
                    let d = r.sub(mu.field());
                    let misfit = 0.5 * grid.l2_inner(&d, &d).unwrap_or(f64::NAN);
                    vec![t, h, misfit]
                });
            write_csv(&inv.out.join("geodesic.csv"), &["t", "H", "misfit"].map(String::from), rows)?;
        }
    }

    if let Command::Flow | Command::Lsi | Command::Talagrand | Command::Ph1i | Command::Gamma2 = inv.command {
        let rho = s.rho0(&grid)?;
        c.value("initial_divergence", divergence_gamma(&rho, &mu, &params)?);
    }

    let (status, exit_code) = c.status();
    let report = json!({
        "command": name,
        "scenario_digest": digest(inv.source),
        "inputs": inputs_json(s, inv.overrides),
        "checks": c.checks.iter().map(check_json).collect::<Vec<_>>(),
        "values": Value::Object(c.values),
        "status": status,
        "exit_code": exit_code,
    });
    let path = inv.out.join(format!("{name}.json"));
    write_json(&path, &report)?;
    write_json(
        &inv.out.join(format!("{name}.timing.json")),
        &json!({ "command": name, "seconds": number(start.elapsed().as_secs_f64()) }),
    )?;
    Ok(Outcome {
        report: path,
        exit_code,
        summary: format!("{name}: {status}"),
    })
}
