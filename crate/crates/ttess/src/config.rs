//! Run configuration: a TOML file describing the domain, the energy model,
//! the proposal mixture, chain length and output artifacts. Field-level
//! validation produces diagnostics naming the offending key.

use crate::geom::{Point, Polygon};
use crate::models::{
    AcsModel, AngleModel, AngleVertices, AreaModel, CompositeModel, CrttModel, EnergyModel,
};
use crate::sampler::ProposalConfig;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config field `{field}`: {msg}")]
    Invalid { field: &'static str, msg: String },
}

fn invalid(field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub domain: DomainSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub proposals: ProposalsSpec,
    #[serde(default)]
    pub chain: ChainSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub verify: VerifySpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(default = "default_domain_kind")]
    pub kind: String,
    pub side: Option<f64>,
    pub vertices: Option<Vec<[f64; 2]>>,
}

fn default_domain_kind() -> String {
    "unit-square".into()
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec {
            kind: default_domain_kind(),
            side: None,
            vertices: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub tau: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// `all-non-corner` (default) or `internal`: which vertices enter the
    /// angle sum.
    pub angle_vertices: Option<String>,
    #[serde(default)]
    pub components: Vec<ModelSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalsSpec {
    pub split: f64,
    pub merge: f64,
    pub flip: f64,
}

impl Default for ProposalsSpec {
    fn default() -> Self {
        ProposalsSpec {
            split: 1.0 / 3.0,
            merge: 1.0 / 3.0,
            flip: 1.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    #[serde(default = "default_iterations")]
    pub iterations: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: u64,
    #[serde(default = "default_subsample")]
    pub subsample: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_iterations() -> u64 {
    100_000
}
fn default_burn_in() -> u64 {
    1_000
}
fn default_subsample() -> u64 {
    100
}

impl Default for ChainSpec {
    fn default() -> Self {
        ChainSpec {
            iterations: default_iterations(),
            burn_in: default_burn_in(),
            subsample: default_subsample(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    /// Trace CSV row period in iterations (0 disables the trace).
    #[serde(default = "default_trace_period")]
    pub trace_period: u64,
    /// State snapshot period in iterations; defaults to the chain subsample
    /// period. Snapshots start after the chain burn-in; 0 disables them.
    #[serde(default)]
    pub snapshot_period: Option<u64>,
    /// Intermediate SVG period in iterations (0 renders only the final state).
    #[serde(default)]
    pub svg_period: u64,
    #[serde(default = "default_true")]
    pub color_segments: bool,
}

fn default_out_dir() -> String {
    "out".into()
}
fn default_trace_period() -> u64 {
    100
}
fn default_true() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_out_dir(),
            trace_period: default_trace_period(),
            snapshot_period: None,
            svg_period: 0,
            color_segments: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "default_gnz_states")]
    pub gnz_states: usize,
    #[serde(default = "default_gnz_subsample")]
    pub gnz_subsample: usize,
    #[serde(default = "default_gnz_burn_in")]
    pub gnz_burn_in: usize,
    #[serde(default = "default_gnz_split_draws")]
    pub gnz_split_draws: usize,
    #[serde(default = "default_uniformity_retained")]
    pub uniformity_retained: usize,
    #[serde(default = "default_uniformity_subsample")]
    pub uniformity_subsample: usize,
    /// Acceptance threshold in combined standard errors.
    #[serde(default = "default_sigma")]
    pub tolerance_sigma: f64,
    /// p-value threshold for the uniformity chi-square test.
    #[serde(default = "default_p_threshold")]
    pub p_threshold: f64,
}

fn default_gnz_states() -> usize {
    10_000
}
fn default_gnz_subsample() -> usize {
    50
}
fn default_gnz_burn_in() -> usize {
    5_000
}
fn default_gnz_split_draws() -> usize {
    10
}
fn default_uniformity_retained() -> usize {
    100_000
}
fn default_uniformity_subsample() -> usize {
    5
}
fn default_sigma() -> f64 {
    3.0
}
fn default_p_threshold() -> f64 {
    0.01
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            gnz_states: default_gnz_states(),
            gnz_subsample: default_gnz_subsample(),
            gnz_burn_in: default_gnz_burn_in(),
            gnz_split_draws: default_gnz_split_draws(),
            uniformity_retained: default_uniformity_retained(),
            uniformity_subsample: default_uniformity_subsample(),
            tolerance_sigma: default_sigma(),
            p_threshold: default_p_threshold(),
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.build_domain()?;
        build_model(&self.model)?;
        self.build_proposals()?;
        if self.verify.tolerance_sigma <= 0.0 {
            return Err(invalid("verify.tolerance_sigma", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.verify.p_threshold) {
            return Err(invalid("verify.p_threshold", "must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn build_domain(&self) -> Result<Polygon<f64>, ConfigError> {
        match self.domain.kind.as_str() {
            "unit-square" => Ok(crate::geom::unit_square()),
            "square" => {
                let side = self
                    .domain
                    .side
                    .ok_or_else(|| invalid("domain.side", "required for kind = \"square\""))?;
                if !(side > 0.0 && side.is_finite()) {
                    return Err(invalid("domain.side", "must be positive and finite"));
                }
                Polygon::convex_domain(vec![
                    Point::new(0.0, 0.0),
                    Point::new(side, 0.0),
                    Point::new(side, side),
                    Point::new(0.0, side),
                ])
                .map_err(|e| invalid("domain.side", e.to_string()))
            }
            "polygon" => {
                let vs =
                    self.domain.vertices.as_ref().ok_or_else(|| {
                        invalid("domain.vertices", "required for kind = \"polygon\"")
                    })?;
                Polygon::convex_domain(vs.iter().map(|&[x, y]| Point::new(x, y)).collect())
                    .map_err(|e| invalid("domain.vertices", e.to_string()))
            }
            other => Err(invalid(
                "domain.kind",
                format!("unknown kind `{other}` (expected unit-square, square or polygon)"),
            )),
        }
    }

    pub fn build_model(&self) -> Result<Box<dyn EnergyModel<f64> + Send + Sync>, ConfigError> {
        build_model(&self.model)
    }

    pub fn build_proposals(&self) -> Result<ProposalConfig<f64>, ConfigError> {
        let p = &self.proposals;
        for (field, v) in [
            ("proposals.split", p.split),
            ("proposals.merge", p.merge),
            ("proposals.flip", p.flip),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(field, "must be non-negative and finite"));
            }
        }
        if p.split + p.merge + p.flip > 1.0 + 1e-12 {
            return Err(invalid(
                "proposals",
                "probabilities must sum to at most one",
            ));
        }
        Ok(ProposalConfig::new(p.split, p.merge, p.flip))
    }
}

fn require_tau(spec: &ModelSpec) -> Result<f64, ConfigError> {
    let tau = spec.tau.ok_or_else(|| invalid("model.tau", "required"))?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid("model.tau", "must be positive and finite"));
    }
    Ok(tau)
}

fn angle_vertices(spec: &ModelSpec) -> Result<AngleVertices, ConfigError> {
    match spec.angle_vertices.as_deref() {
        None | Some("all-non-corner") => Ok(AngleVertices::AllNonCorner),
        Some("internal") => Ok(AngleVertices::InternalOnly),
        Some(other) => Err(invalid(
            "model.angle_vertices",
            format!("unknown value `{other}` (expected all-non-corner or internal)"),
        )),
    }
}

pub fn build_model(
    spec: &ModelSpec,
) -> Result<Box<dyn EnergyModel<f64> + Send + Sync>, ConfigError> {
    match spec.name.as_str() {
        "crtt" => Ok(Box::new(CrttModel::new(require_tau(spec)?))),
        "acs" => Ok(Box::new(AcsModel::new(require_tau(spec)?))),
        "area" => {
            let tau = require_tau(spec)?;
            let alpha = spec
                .alpha
                .ok_or_else(|| invalid("model.alpha", "required"))?;
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(invalid("model.alpha", "must be non-negative and finite"));
            }
            Ok(Box::new(AreaModel::new(tau, alpha)))
        }
        "angle" => {
            let tau = require_tau(spec)?;
            let beta = spec.beta.ok_or_else(|| invalid("model.beta", "required"))?;
            if !(beta >= 0.0 && beta.is_finite()) {
                return Err(invalid("model.beta", "must be non-negative and finite"));
            }
            Ok(Box::new(
                AngleModel::new(tau, beta).with_vertices(angle_vertices(spec)?),
            ))
        }
        "composite" => {
            if spec.components.is_empty() {
                return Err(invalid(
                    "model.components",
                    "composite model needs components",
                ));
            }
            let comps = spec
                .components
                .iter()
                .map(build_model)
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Box::new(CompositeModel::new(comps)))
        }
        other => Err(invalid(
            "model.name",
            format!("unknown model `{other}` (expected crtt, acs, area, angle or composite)"),
        )),
    }
}
