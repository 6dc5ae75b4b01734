//! Sweep configuration: TOML text, parsed with span-aware errors and then
//! validated against the attached spectral problem.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use dswkb::potential::RegularityReport;
use dswkb::{Cplx, Potential, Problem, Strip};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Every suite the harness knows, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    Wkb,
    UniformGamma,
    NearRplus,
    BasisWronskian,
    PoleStructure,
    BranchIdentities,
    Stirling,
    ContinuationPrinciple,
}

impl SuiteName {
    pub const ALL: [SuiteName; 8] = [
        SuiteName::Wkb,
        SuiteName::UniformGamma,
        SuiteName::NearRplus,
        SuiteName::BasisWronskian,
        SuiteName::PoleStructure,
        SuiteName::BranchIdentities,
        SuiteName::Stirling,
        SuiteName::ContinuationPrinciple,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Wkb => "wkb",
            SuiteName::UniformGamma => "uniform_gamma",
            SuiteName::NearRplus => "near_rplus",
            SuiteName::BasisWronskian => "basis_wronskian",
            SuiteName::PoleStructure => "pole_structure",
            SuiteName::BranchIdentities => "branch_identities",
            SuiteName::Stirling => "stirling",
            SuiteName::ContinuationPrinciple => "continuation_principle",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            SuiteName::Wkb => "recursion and uniform law against the standard WKB form away from the positive axis",
            SuiteName::UniformGamma => "recursion against the uniform Gamma-function law, plus a maximum-principle check near 0",
            SuiteName::NearRplus => "near-axis form, G0 analyticity and its continued representation",
            SuiteName::BasisWronskian => "Wronskian of the lattice basis f+, f- against 2i",
            SuiteName::PoleStructure => "simple poles of f+ and phi, simple zeros of f-, by residue probes",
            SuiteName::BranchIdentities => "momentum shift by 2 pi and square-root sign flip across the positive axis",
            SuiteName::Stirling => "Gamma recurrence, reflection and sector-uniform Stirling convergence",
            SuiteName::ContinuationPrinciple => "standard behaviour of the recursion along a horizontal segment",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        SuiteName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Pass/fail limits; the defaults come from runs on the reference problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub uniform_gamma: f64,
    pub basis_wronskian: f64,
    pub probe_residual: f64,
    pub branch_identity: f64,
    pub g0_equality: f64,
    pub contour_coefficient: f64,
    pub specfun_residual: f64,
    pub stirling_at_10: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            uniform_gamma: 0.10,
            basis_wronskian: 0.10,
            probe_residual: 0.05,
            branch_identity: 1e-10,
            g0_equality: 1e-9,
            contour_coefficient: 1e-8,
            specfun_residual: 1e-12,
            stirling_at_10: 0.01,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    potential: String,
    #[serde(default)]
    parameters: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    energy: [f64; 2],
    d_x: f64,
    d_y: f64,
    z0: [f64; 2],
    z1: [f64; 2],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    h: Vec<f64>,
    #[serde(default)]
    suites: Vec<String>,
    #[serde(default)]
    format: OutputFormat,
    #[serde(default = "default_seed")]
    seed: u64,
}

fn default_seed() -> u64 {
    7
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: RawProblem,
    sweep: RawSweep,
    #[serde(default)]
    samples: BTreeMap<String, Vec<[f64; 2]>>,
    #[serde(default)]
    thresholds: Thresholds,
}

/// A validated sweep configuration.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub potential: String,
    pub parameters: BTreeMap<String, Cplx>,
    pub energy: Cplx,
    pub strip: Strip,
    pub z0: Cplx,
    pub z1: Cplx,
    pub h_list: Vec<f64>,
    pub suites: Vec<SuiteName>,
    pub format: OutputFormat,
    pub seed: u64,
    pub samples: BTreeMap<String, Vec<Cplx>>,
    pub thresholds: Thresholds,
    pub problem: Problem,
    pub regularity: RegularityReport<f64>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid configuration ({invariant}): {message}")]
    Validation { invariant: &'static str, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn validation(invariant: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation { invariant, message: message.into() }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn cplx([re, im]: [f64; 2]) -> Cplx {
    Cplx::new(re, im)
}

/// The largest admissible `h` as a fraction of `d_x`.
pub const MAX_H_FRACTION: f64 = 0.1;

/// Parses and validates configuration text, running the regularity check
/// of the attached problem.
pub fn parse_config(text: &str) -> Result<SweepConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ConfigError::Parse { line, column, message: e.message().to_string() }
    })?;

    let parameters: BTreeMap<String, Cplx> = raw.problem.parameters.iter().map(|(k, v)| (k.clone(), cplx(*v))).collect();
    let params_map = parameters.clone().into_iter().collect();
    let potential = Potential::parse(&raw.problem.potential, &params_map)
        .map_err(|e| validation("potential expression", e.to_string()))?;
    let strip = Strip::new(raw.problem.d_x, raw.problem.d_y).map_err(|e| validation("strip dimensions", e.to_string()))?;
    let energy = cplx(raw.problem.energy);
    let problem = Problem::new(potential, energy, strip).map_err(|e| validation("single simple pole in the strip", e.to_string()))?;

    let h_list = raw.sweep.h;
    if h_list.is_empty() {
        return Err(validation("h_list nonempty", "the sweep needs at least one h"));
    }
    if let Some(bad) = h_list.iter().find(|h| !(**h > 0.0) || !h.is_finite()) {
        return Err(validation("h positive", format!("h = {bad}")));
    }
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(validation("h_list strictly decreasing", format!("{h_list:?}")));
    }
    let h_max = MAX_H_FRACTION * strip.d_x;
    if let Some(bad) = h_list.iter().find(|h| **h >= h_max) {
        return Err(validation("h small against the strip", format!("h = {bad} is not below {h_max}")));
    }

    let mut suites = Vec::new();
    for s in &raw.sweep.suites {
        let name: SuiteName = s.parse().map_err(|m: String| validation("known suites", m))?;
        if suites.contains(&name) {
            return Err(validation("suites listed once", format!("`{s}` appears twice")));
        }
        suites.push(name);
    }
    suites.sort();

    let z0 = cplx(raw.problem.z0);
    let z1 = cplx(raw.problem.z1);
    if !(z0.re < 0.0 && z0.im == 0.0 && strip.contains(z0)) {
        return Err(validation("z0 on the negative axis inside the strip", format!("z0 = {z0}")));
    }
    if !(z1.re > 0.0 && z1.im == 0.0 && strip.contains(z1)) {
        return Err(validation("z1 on the positive axis inside the strip", format!("z1 = {z1}")));
    }

    let mut samples = BTreeMap::new();
    for (name, pts) in raw.samples {
        let pts: Vec<Cplx> = pts.into_iter().map(cplx).collect();
        if let Some(z) = pts.iter().find(|z| !strip.contains(**z)) {
            return Err(validation("sample points inside the strip", format!("set `{name}` contains {z}")));
        }
        samples.insert(name, pts);
    }

    let regularity = problem.verify_regular().map_err(|e| validation("regular strip", e.to_string()))?;
    if !regularity.regular {
        return Err(validation(
            "regular strip",
            format!(
                "turning points {:?}, minimal |Im p| {:.3e} at {}",
                regularity.turning_points, regularity.im_p_margin, regularity.margin_at
            ),
        ));
    }

    Ok(SweepConfig {
        potential: raw.problem.potential,
        parameters,
        energy,
        strip,
        z0,
        z1,
        h_list,
        suites,
        format: raw.sweep.format,
        seed: raw.sweep.seed,
        samples,
        thresholds: raw.thresholds,
        problem,
        regularity,
    })
}

/// Reads and parses a configuration file.
pub fn load_config(path: &std::path::Path) -> Result<SweepConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

/// The reference configuration shipped with the harness.
pub const REFERENCE_CONFIG: &str = include_str!("../configs/reference.toml");
