//! Run configuration: a TOML file with `[grid]`, `[model]`, `[solver]` and
//! `[experiment]` sections, overridden by `--set section.key=value` flags.
//! Every key is optional; each command fills its own defaults.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use psdecay::field::strict_dealias_rule;
use psdecay::solver::{Integrator, ModelParams, SolverConfig};
use psdecay::{GridSpec, HypothesisViolation};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Greens,
    Solve,
    Picard,
    Decay,
    VerifyLemmas,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Greens => "greens",
            Command::Solve => "solve",
            Command::Picard => "picard",
            Command::Decay => "decay",
            Command::VerifyLemmas => "verify-lemmas",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: Option<usize>,
    pub points: Option<usize>,
    pub extent: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub theta: Option<u32>,
    pub flux_dir: Option<Vec<f64>>,
    pub flux_coefficient: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub integrator: Option<Integrator>,
    pub dealias_rule: Option<f64>,
    /// Shrinks the retained band to `2/(theta+2)` of the half-band.
    pub strict_dealias: Option<bool>,
    pub record_every: Option<usize>,
    pub sobolev_order: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub id: Option<String>,
    pub seed: Option<u64>,
    // initial data
    pub amplitude: Option<f64>,
    pub width: Option<f64>,
    pub snapshots: Option<bool>,
    // greens
    pub times: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub radius: Option<f64>,
    pub envelope_order: Option<u32>,
    // picard
    pub t0: Option<f64>,
    pub nodes: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    // decay
    pub lambda_orders: Option<Vec<f64>>,
    pub low_orders: Option<Vec<f64>>,
    pub regularity: Option<f64>,
    pub mu: Option<f64>,
    pub t_min: Option<f64>,
    pub tolerance: Option<f64>,
    pub tolerance_overrides: Option<BTreeMap<String, f64>>,
    pub l1_bound: Option<f64>,
    pub wrap_threshold: Option<f64>,
    // verify-lemmas
    pub fields: Option<usize>,
    pub interpolation: Option<(f64, f64)>,
    pub equivalence_orders: Option<Vec<f64>>,
    pub product_order: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

/// Parses a `key=value` override into its dotted path and TOML value. Values
/// that are not valid TOML are taken as strings.
fn parse_override(raw: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{raw}` is not of the form section.key=value"))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.len() != 2 || path.iter().any(String::is_empty) {
        bail!("override key `{}` must be section.key", key.trim());
    }
    let doc = format!("v = {}", value.trim());
    let parsed = match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(value.trim().to_string()),
    };
    Ok((path, parsed))
}

/// Reads the file (if any), applies overrides and validates every key.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let (text, origin) = match path {
        Some(p) => (
            std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?,
            p.display().to_string(),
        ),
        None => (String::new(), "<defaults>".to_string()),
    };
    // syntax and key checks against the file alone, so line numbers refer to it
    toml::from_str::<RunConfig>(&text).map_err(|e| anyhow!("{origin}: {e}"))?;
    let mut table: toml::Table = text.parse().map_err(|e| anyhow!("{origin}: {e}"))?;
    for raw in overrides {
        let (path, value) = parse_override(raw)?;
        let section = table
            .entry(path[0].clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let section = section
            .as_table_mut()
            .ok_or_else(|| anyhow!("`{}` is not a section", path[0]))?;
        section.insert(path[1].clone(), value);
    }
    RunConfig::deserialize(toml::Value::Table(table)).map_err(|e| anyhow!("override: {e}"))
}

fn pick<T: Clone>(slot: &mut Option<T>, default: T) -> T {
    slot.get_or_insert(default).clone()
}

/// Fully resolved inputs for one command; the `RunConfig` it was built from
/// has every consulted key filled in, for echoing.
pub struct Resolved {
    pub grid: GridSpec,
    pub model: ModelParams,
    pub solver: SolverConfig,
}

impl RunConfig {
    /// Fills defaults for `command` in place and builds the core types.
    pub fn resolve(&mut self, command: Command) -> Result<Resolved> {
        let (dim, points, extent) = match command {
            Command::Greens => (1, 65536, 512.0),
            Command::Solve => (1, 1024, 64.0),
            Command::Picard => (1, 512, 64.0),
            Command::Decay => (1, 8192, 2048.0),
            Command::VerifyLemmas => (1, 256, 16.0 * std::f64::consts::PI),
        };
        let grid = GridSpec {
            dim: pick(&mut self.grid.dim, dim),
            points: pick(&mut self.grid.points, points),
            extent: pick(&mut self.grid.extent, extent),
        };
        grid.build().context("[grid]")?;
        let m = &mut self.model;
        let s1 = pick(&mut m.s1, 0.25);
        let s2 = pick(&mut m.s2, 0.75);
        let theta = pick(&mut m.theta, 2);
        let mut model = ModelParams::new(grid.dim, s1, s2, theta).context("[model]")?;
        if let Some(b) = m.flux_dir.clone() {
            model = model.with_flux_dir(b).context("[model] flux_dir")?;
        }
        let coefficient = pick(&mut m.flux_coefficient, 1.0);
        model = model.with_flux_coefficient(coefficient).context("[model]")?;
        m.flux_dir = Some(model.flux_dir.clone());

        let (dt, t_final, record_every) = match command {
            Command::Decay => (0.05, 100.0, 10),
            Command::Picard => (0.0005, 0.1, 1),
            _ => (0.01, 1.0, 10),
        };
        let s = &mut self.solver;
        let strict = pick(&mut s.strict_dealias, false);
        let rule = if strict {
            s.dealias_rule = Some(strict_dealias_rule(theta));
            strict_dealias_rule(theta)
        } else {
            pick(&mut s.dealias_rule, psdecay::field::TWO_THIRDS)
        };
        let solver = SolverConfig {
            model: model.clone(),
            dt: pick(&mut s.dt, dt),
            t_final: pick(&mut s.t_final, t_final),
            integrator: pick(&mut s.integrator, Integrator::Etdrk2),
            dealias_rule: rule,
            record_every: pick(&mut s.record_every, record_every),
            sobolev_order: pick(&mut s.sobolev_order, 1.0),
            keep_snapshots: false,
        };
        Ok(Resolved { grid, model, solver })
    }

    /// Hypothesis warnings relevant to `command`.
    pub fn warnings(&self, command: Command, resolved: &Resolved) -> Vec<HypothesisViolation> {
        match command {
            Command::Decay => resolved.model.decay_hypothesis_violations(resolved.grid.dim),
            Command::VerifyLemmas => Vec::new(),
            _ => resolved.model.hypothesis_violations(resolved.grid.dim),
        }
    }
}

/// Expands `t=A..B` (doubling from `A` up to `B`, with `B` appended) or
/// `t=A..B/K` (`K` log-spaced points) into sweep times.
pub fn parse_sweep(raw: &str) -> Result<Vec<f64>> {
    let (name, range) = raw
        .split_once('=')
        .ok_or_else(|| anyhow!("sweep `{raw}` is not of the form t=A..B"))?;
    if name.trim() != "t" {
        bail!("only time sweeps are supported, got `{}`", name.trim());
    }
    let (range, count) = match range.split_once('/') {
        Some((r, k)) => (r, Some(k.trim().parse::<usize>().context("sweep point count")?)),
        None => (range, None),
    };
    let (a, b) = range
        .split_once("..")
        .ok_or_else(|| anyhow!("sweep range `{range}` is not of the form A..B"))?;
    let a: f64 = a.trim().parse().context("sweep start")?;
    let b: f64 = b.trim().parse().context("sweep end")?;
    if !(a > 0.0 && b >= a && b.is_finite()) {
        bail!("sweep needs 0 < A <= B, got {a}..{b}");
    }
    let mut out = Vec::new();
    match count {
        Some(k) if k >= 2 => {
            let ratio = (b / a).ln() / (k - 1) as f64;
            out.extend((0..k).map(|i| if i + 1 == k { b } else { a * (ratio * i as f64).exp() }));
        }
        Some(_) => bail!("sweep needs at least 2 points"),
        None => {
            let mut t = a;
            while t < b {
                out.push(t);
                t *= 2.0;
            }
            out.push(b);
        }
    }
    Ok(out)
}
