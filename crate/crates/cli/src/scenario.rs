//! Line-based scenario files.
//!
//! ```text
//! # comment
//! dim = 1
//! topology = reflecting
//! n = 64
//! gamma = 0.5
//! mu = gaussian_interval:var=0.2
//! rho0 = trig:a1=0.1,b2=-0.05
//! ```
//!
//! Density families: `uniform`, `trig:<coefficients>` with `a<k>`/`b<k>`
//! the cosine/sine coefficients of mode `k` along x and `c<k>`/`d<k>` along
//! y (applied in log space, then normalized), and
//! `gaussian_interval:var=<v>[,center=<x>][,center_y=<y>]` on reflecting
//! domains.

use std::fmt;
use std::sync::Arc;

use gdm_core::densities::{self, TrigCoefficients};
use gdm_core::{build_grid, DensityField, Grid, GridConfig, Topology};

use crate::error::{CliError, Result};

pub const DEFAULT_TMAX: f64 = 0.1;
pub const DEFAULT_DT: f64 = 1e-4;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_SEED: u64 = 42;

const KEYS: [&str; 11] = ["dim", "topology", "extent", "n", "gamma", "mu", "rho0", "tmax", "dt", "seed", "tol"];
const REQUIRED: [&str; 4] = ["dim", "n", "gamma", "mu"];

#[derive(Debug, Clone, PartialEq)]
pub enum DensitySpec {
    Uniform,
    Trig(TrigCoefficients),
    GaussianInterval { variance: f64, center: [Option<f64>; 2] },
}

impl DensitySpec {
    pub fn build(&self, grid: Arc<Grid<f64>>) -> Result<DensityField<f64>> {
        let d = match self {
            DensitySpec::Uniform => densities::uniform(grid),
            DensitySpec::Trig(c) => densities::trig(grid, c)?,
            DensitySpec::GaussianInterval { variance, center } => {
                let mid = densities::domain_center(&grid);
                let c = [center[0].unwrap_or(mid[0]), center[1].unwrap_or(mid[1])];
                densities::gaussian_interval(grid, c, *variance)?
            }
        };
        Ok(d)
    }

    fn parse(text: &str, line: usize) -> Result<Self> {
        let (family, params) = match text.split_once(':') {
            Some((f, p)) => (f.trim(), p.trim()),
            None => (text.trim(), ""),
        };
        let pairs = params
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|kv| {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| CliError::parse(line, format!("expected key=value in density parameters, got `{kv}`")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| CliError::parse(line, format!("`{}` is not a number", v.trim())))?;
                if !v.is_finite() {
                    return Err(CliError::parse(line, format!("density parameter `{}` must be finite", k.trim())));
                }
                Ok((k.trim().to_string(), v))
            })
            .collect::<Result<Vec<_>>>()?;
        match family {
            "uniform" => {
                if !pairs.is_empty() {
                    return Err(CliError::parse(line, "uniform takes no parameters"));
                }
                Ok(DensitySpec::Uniform)
            }
            "trig" => {
                let mut coeffs = TrigCoefficients::default();
                for (k, v) in pairs {
                    let bad = || CliError::parse(line, format!("unknown trig coefficient `{k}`"));
                    let (letter, mode) = k.split_at(1);
                    let mode: usize = mode.parse().map_err(|_| bad())?;
                    if mode == 0 {
                        return Err(bad());
                    }
                    match letter {
                        "a" => coeffs.set(0, mode, Some(v), None),
                        "b" => coeffs.set(0, mode, None, Some(v)),
                        "c" => coeffs.set(1, mode, Some(v), None),
                        "d" => coeffs.set(1, mode, None, Some(v)),
                        _ => return Err(bad()),
                    }
                }
                Ok(DensitySpec::Trig(coeffs))
            }
            "gaussian_interval" => {
                let mut variance = None;
                let mut center = [None, None];
                for (k, v) in pairs {
                    match k.as_str() {
                        "var" => variance = Some(v),
                        "center" => center[0] = Some(v),
                        "center_y" => center[1] = Some(v),
                        _ => return Err(CliError::parse(line, format!("unknown gaussian_interval parameter `{k}`"))),
                    }
                }
                let variance = variance.ok_or_else(|| CliError::parse(line, "gaussian_interval needs var"))?;
                if variance <= 0.0 {
                    return Err(CliError::parse(line, "gaussian_interval var must be positive"));
                }
                Ok(DensitySpec::GaussianInterval { variance, center })
            }
            other => Err(CliError::parse(line, format!("unknown density family `{other}`"))),
        }
    }

    fn uses_second_axis(&self) -> bool {
        match self {
            DensitySpec::Trig(c) => !c.modes[1].is_empty(),
            DensitySpec::GaussianInterval { center, .. } => center[1].is_some(),
            DensitySpec::Uniform => false,
        }
    }
}

impl fmt::Display for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensitySpec::Uniform => write!(f, "uniform"),
            DensitySpec::Trig(c) => {
                let mut parts = Vec::new();
                for (axis, letters) in [(0, ["a", "b"]), (1, ["c", "d"])] {
                    for (k, (a, b)) in c.modes[axis].iter().enumerate() {
                        if *a != 0.0 {
                            parts.push(format!("{}{}={a:?}", letters[0], k + 1));
                        }
                        if *b != 0.0 {
                            parts.push(format!("{}{}={b:?}", letters[1], k + 1));
                        }
                    }
                }
                write!(f, "trig:{}", parts.join(","))
            }
            DensitySpec::GaussianInterval { variance, center } => {
                write!(f, "gaussian_interval:var={variance:?}")?;
                if let Some(c) = center[0] {
                    write!(f, ",center={c:?}")?;
                }
                if let Some(c) = center[1] {
                    write!(f, ",center_y={c:?}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub dim: usize,
    pub topology: Topology,
    pub extent: [f64; 2],
    pub n: [usize; 2],
    pub gamma: f64,
    pub mu: DensitySpec,
    pub rho0: Option<DensitySpec>,
    pub tmax: f64,
    pub dt: f64,
    pub seed: u64,
    pub tol: f64,
}

impl Scenario {
    pub fn grid(&self) -> Result<Arc<Grid<f64>>> {
        let cfg = if self.dim == 1 {
            GridConfig::line(self.topology, self.extent[0], self.n[0])
        } else {
            GridConfig::plane(self.topology, self.extent, self.n)
        };
        Ok(Arc::new(build_grid(&cfg)?))
    }

    pub fn mu(&self, grid: &Arc<Grid<f64>>) -> Result<DensityField<f64>> {
        self.mu.build(grid.clone())
    }

    pub fn rho0(&self, grid: &Arc<Grid<f64>>) -> Result<DensityField<f64>> {
        self.rho0
            .as_ref()
            .ok_or_else(|| CliError::Input("this subcommand needs `rho0` in the scenario".into()))?
            .build(grid.clone())
    }

    /// Applies command-line overrides and re-checks the constraints that
    /// depend on them.
    pub fn with_overrides(mut self, n: Option<usize>, gamma: Option<f64>) -> Result<Self> {
        if let Some(n) = n {
            self.n = [n, if self.dim == 1 { 1 } else { n }];
        }
        if let Some(g) = gamma {
            self.gamma = g;
        }
        self.validate(&Lines::default()).map_err(|e| match e {
            CliError::Parse { line: 0, message } => CliError::Input(format!("after overrides: {message}")),
            other => other,
        })?;
        Ok(self)
    }

    fn validate(&self, lines: &Lines) -> Result<()> {
        let at = |key: &str| lines.of(key);
        if self.n[..self.dim].iter().any(|&k| k < 4) {
            return Err(CliError::parse(at("n"), "n must be at least 4"));
        }
        if self.extent[..self.dim].iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(CliError::parse(at("extent"), "extent must be positive"));
        }
        if !self.gamma.is_finite() {
            return Err(CliError::parse(at("gamma"), "gamma must be finite"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::parse(at("dt"), "dt must be positive"));
        }
        if !(self.tmax >= self.dt && self.tmax.is_finite()) {
            return Err(CliError::parse(at("tmax"), "tmax must be at least dt"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::parse(at("tol"), "tol must be positive"));
        }
        let grid = self.grid()?;
        for (key, spec) in [("mu", Some(&self.mu)), ("rho0", self.rho0.as_ref())] {
            let Some(spec) = spec else { continue };
            if self.dim == 1 && spec.uses_second_axis() {
                return Err(CliError::parse(at(key), "second-axis parameters need dim = 2"));
            }
            if let DensitySpec::GaussianInterval { .. } = spec {
                if self.topology != Topology::Reflecting {
                    return Err(CliError::parse(at(key), "gaussian_interval needs topology = reflecting"));
                }
            }
            spec.build(grid.clone()).map_err(|e| CliError::parse(at(key), e.to_string()))?;
        }
        Ok(())
    }
}

/// Line numbers of the keys, for error messages after the first pass.
#[derive(Default)]
struct Lines(Vec<(&'static str, usize)>);

impl Lines {
    fn of(&self, key: &str) -> usize {
        self.0.iter().find(|(k, _)| *k == key).map_or(0, |&(_, l)| l)
    }
}

fn parse_number<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::parse(line, format!("`{value}` is not a valid value for {key}")))
}

fn parse_pair<T: std::str::FromStr + Copy>(value: &str, line: usize, key: &str) -> Result<Vec<T>> {
    let parts = value
        .split(',')
        .map(|v| parse_number(v.trim(), line, key))
        .collect::<Result<Vec<T>>>()?;
    if parts.is_empty() || parts.len() > 2 {
        return Err(CliError::parse(line, format!("{key} takes one or two values")));
    }
    Ok(parts)
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut lines = Lines::default();
    let mut dim = None;
    let mut topology = Topology::Periodic;
    let mut extent: Option<Vec<f64>> = None;
    let mut n: Option<Vec<usize>> = None;
    let mut gamma = None;
    let mut mu = None;
    let mut rho0 = None;
    let mut tmax = DEFAULT_TMAX;
    let mut dt = DEFAULT_DT;
    let mut seed = DEFAULT_SEED;
    let mut tol = DEFAULT_TOL;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| CliError::parse(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
            return Err(CliError::parse(line, format!("unknown key `{key}`")));
        };
        if lines.0.iter().any(|(k, _)| *k == known) {
            return Err(CliError::parse(line, format!("duplicate key `{key}`")));
        }
        lines.0.push((known, line));
        match known {
            "dim" => {
                let d: usize = parse_number(value, line, key)?;
                if d != 1 && d != 2 {
                    return Err(CliError::parse(line, "dim must be 1 or 2"));
                }
                dim = Some(d);
            }
            "topology" => {
                topology = match value {
                    "periodic" => Topology::Periodic,
                    "reflecting" => Topology::Reflecting,
                    _ => return Err(CliError::parse(line, format!("unknown topology `{value}`"))),
                }
            }
            "extent" => extent = Some(parse_pair(value, line, key)?),
            "n" => n = Some(parse_pair(value, line, key)?),
            "gamma" => gamma = Some(parse_number(value, line, key)?),
            "mu" => mu = Some(DensitySpec::parse(value, line)?),
            "rho0" => rho0 = Some(DensitySpec::parse(value, line)?),
            "tmax" => tmax = parse_number(value, line, key)?,
            "dt" => dt = parse_number(value, line, key)?,
            "seed" => seed = parse_number(value, line, key)?,
            "tol" => tol = parse_number(value, line, key)?,
            _ => unreachable!(),
        }
    }

    let last = text.lines().count().max(1);
    if let Some(missing) = REQUIRED.iter().find(|k| lines.of(k) == 0) {
        return Err(CliError::parse(last, format!("missing required key `{missing}`")));
    }
    let dim = dim.unwrap_or(1);
    let spread = |v: Vec<f64>| if v.len() == 1 { [v[0], v[0]] } else { [v[0], v[1]] };
    let extent = spread(extent.unwrap_or_else(|| vec![1.0]));
    let n = n.unwrap_or_default();
    if dim == 1 && n.len() == 2 {
        return Err(CliError::parse(lines.of("n"), "dim = 1 takes a single n"));
    }
    let n = if dim == 1 {
        [n[0], 1]
    } else if n.len() == 1 {
        [n[0], n[0]]
    } else {
        [n[0], n[1]]
    };
    let scenario = Scenario {
        dim,
        topology,
        extent,
        n,
        gamma: gamma.unwrap_or(1.0),
        mu: mu.unwrap_or(DensitySpec::Uniform),
        rho0,
        tmax,
        dt,
        seed,
        tol,
    };
    scenario.validate(&lines)?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = parse_scenario("dim=1\nn=64\ngamma=1\nmu=uniform\nrho0=trig:a1=0.1").unwrap();
        assert_eq!(s.n, [64, 1]);
        assert_eq!(s.topology, Topology::Periodic);
        assert_eq!((s.tmax, s.dt, s.tol, s.seed), (0.1, 1e-4, 1e-3, 42));
        match s.rho0 {
            Some(DensitySpec::Trig(c)) => assert_eq!(c.modes[0], vec![(0.1, 0.0)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_gamma_names_the_line() {
        let err = parse_scenario("dim=1\nn=64\ngamma=abc\nmu=uniform").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err}");
        assert!(err.to_string().starts_with("line 3:"));
    }

    #[test]
    fn gaussian_needs_reflecting_domain() {
        let err = parse_scenario("dim=1\ntopology=periodic\nn=64\ngamma=1\nmu=gaussian_interval:var=0.5").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 5, .. }), "{err}");
        assert!(parse_scenario("dim=1\ntopology=reflecting\nn=64\ngamma=1\nmu=gaussian_interval:var=0.5").is_ok());
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let err = parse_scenario("dim=1\nn=64\ngamma=1\nmu=uniform\nsteps=3").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 5, .. }));
        let err = parse_scenario("dim=1\nn=64\nn=32\ngamma=1\nmu=uniform").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }));
    }

    #[test]
    fn comments_and_blank_lines() {
        let s = parse_scenario("# header\n\ndim = 2   # plane\nn = 16, 20\ngamma = 0.5\nmu = trig:a1=0.2,d2=0.1\n").unwrap();
        assert_eq!(s.n, [16, 20]);
        assert_eq!(s.mu.to_string(), "trig:a1=0.2,d2=0.1");
    }

    #[test]
    fn density_floor_is_enforced() {
        let err = parse_scenario("dim=1\nn=64\ngamma=1\nmu=trig:a1=3").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn second_axis_needs_plane() {
        assert!(parse_scenario("dim=1\nn=64\ngamma=1\nmu=trig:c1=0.1").is_err());
    }

    #[test]
    fn overrides_revalidate() {
        let s = parse_scenario("dim=2\nn=16\ngamma=1\nmu=uniform").unwrap();
        let s = s.with_overrides(Some(24), Some(0.5)).unwrap();
        assert_eq!((s.n, s.gamma), ([24, 24], 0.5));
        assert!(matches!(s.with_overrides(Some(2), None), Err(CliError::Input(_))));
    }
}
