//! Scenario configuration: one schema, accepted as TOML or JSON.

use std::path::{Path, PathBuf};

use ergoscope_core::dynamics::Schedule;
use ergoscope_core::eth::ReferencePolicy;
use ergoscope_core::hamiltonian::Decay;
use ergoscope_core::lattice::{Boundary, PartitionMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub partition: PartitionConfig,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub channels: Vec<ChannelConfig>,
    #[serde(default)]
    pub thermo: ThermoConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub fig1: Fig1Config,
    #[serde(default)]
    pub eth: EthConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub thermo_curve: ThermoCurveConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(default = "one")]
    pub dim: usize,
    pub size: usize,
    #[serde(default = "periodic")]
    pub boundary: Boundary,
}

fn one() -> usize {
    1
}

fn periodic() -> Boundary {
    Boundary::Periodic
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `-Σ s^z s^z - h Σ s^z`.
    #[default]
    IsingZzField,
    /// `-J Σ s^z s^z - g Σ s^x - h Σ s^z`.
    MixedFieldIsing,
    /// Terms listed under `model.terms`.
    Explicit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub preset: Preset,
    pub j: Option<f64>,
    pub g: Option<f64>,
    pub h: Option<f64>,
    #[serde(default)]
    pub terms: Vec<TermConfig>,
    /// Defaults to the smallest admissible `U0` at `δ = 1`.
    pub decay: Option<Decay>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            preset: Preset::IsingZzField,
            j: None,
            g: None,
            h: None,
            terms: Vec::new(),
            decay: None,
        }
    }
}

/// `coefficient · σ^{a} ⊗ σ^{b}` on 1-based sites, with `a, b ∈ {i, x, y, z}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub sites: Vec<usize>,
    pub pauli: String,
    #[serde(default = "unit")]
    pub coefficient: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    #[serde(default = "two")]
    pub l: usize,
    #[serde(default = "strict")]
    pub mode: PartitionMode,
}

fn two() -> usize {
    2
}

fn strict() -> PartitionMode {
    PartitionMode::Strict
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            l: 2,
            mode: PartitionMode::Strict,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    /// `|0...0>`.
    #[default]
    ProductZero,
    /// Pairs `(i, i + pair_distance)`; the distance defaults to the block size.
    PairFamily {
        lambda: f64,
        pair_distance: Option<usize>,
    },
    /// Eigenstate by index, or by fractional position in the spectrum.
    Eigenstate {
        index: Option<usize>,
        fraction: Option<f64>,
    },
    Gibbs {
        beta: f64,
    },
    /// Every spin rotated by `theta` about the y axis.
    Tilted {
        theta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Global Gibbs state with the input state's energy.
    #[default]
    CanonicalMatched,
    /// Equal-weight shell around the input state's energy.
    MicrocanonicalWindow,
    /// Global Gibbs state at `reference.beta`.
    Gibbs,
    /// The input state itself.
    SelfReference,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    #[serde(default)]
    pub policy: ReferenceKind,
    pub beta: Option<f64>,
    pub window: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelConfig {
    Identity,
    /// Needs a pair-family initial state geometry (`2l | L`).
    CnotProtocol,
    RandomCircuits {
        count: usize,
        #[serde(default = "two")]
        depth: usize,
        #[serde(default = "unit")]
        layer_time: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoConfig {
    #[serde(default = "unit")]
    pub beta0: f64,
    pub beta1: Option<f64>,
    /// Defaults to `4 ln d`.
    pub c_tilde: Option<f64>,
    /// Declared operation time of the local controls.
    #[serde(default)]
    pub duration: f64,
}

impl Default for ThermoConfig {
    fn default() -> Self {
        ThermoConfig {
            beta0: 1.0,
            beta1: None,
            c_tilde: None,
            duration: 0.0,
        }
    }
}

/// Inverse temperatures `min..=max` with `points` entries, log-spaced when `log`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default = "yes")]
    pub log: bool,
}

fn yes() -> bool {
    true
}

impl BetaGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        (0..self.points)
            .map(|k| {
                let x = k as f64 / (self.points - 1) as f64;
                if self.log {
                    (self.min.ln() + x * (self.max.ln() - self.min.ln())).exp()
                } else {
                    self.min + x * (self.max - self.min)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig1Config {
    #[serde(default = "ten")]
    pub l: usize,
    /// Free parameter of the figure; `1` is a default, flagged in the output.
    #[serde(default = "unit")]
    pub h: f64,
    #[serde(default = "fifty")]
    pub lambda_points: usize,
    #[serde(default = "fig1_betas")]
    pub betas: BetaGrid,
    #[serde(default = "ed_sizes")]
    pub ed_l: Vec<usize>,
}

fn ten() -> usize {
    10
}

fn fifty() -> usize {
    50
}

fn fig1_betas() -> BetaGrid {
    BetaGrid {
        min: 0.01,
        max: 20.0,
        points: 200,
        log: true,
    }
}

fn ed_sizes() -> Vec<usize> {
    vec![2, 3, 4, 5]
}

impl Default for Fig1Config {
    fn default() -> Self {
        Fig1Config {
            l: 10,
            h: 1.0,
            lambda_points: 50,
            betas: fig1_betas(),
            ed_l: ed_sizes(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EthConfig {
    #[serde(default)]
    pub policy: ReferencePolicy,
    pub window: Option<f64>,
    /// Fractional eigenstate band, e.g. `[0.4, 0.6]`.
    pub band: Option<(f64, f64)>,
    #[serde(default = "eight")]
    pub circuits: usize,
    #[serde(default = "two")]
    pub depth: usize,
}

fn eight() -> usize {
    8
}

impl Default for EthConfig {
    fn default() -> Self {
        EthConfig {
            policy: ReferencePolicy::CanonicalMatched,
            window: None,
            band: None,
            circuits: 8,
            depth: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    /// `onsite(i)` or `pair(i,j)`, 1-based.
    pub term: String,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(default = "unit")]
    pub total_time: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "five")]
    pub stride: usize,
    /// Block sizes of the entanglement-rate sweep.
    #[serde(default)]
    pub l_sweep: Vec<usize>,
    #[serde(default)]
    pub schedules: Vec<ScheduleConfig>,
}

fn default_dt() -> f64 {
    0.01
}

fn five() -> usize {
    5
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            total_time: 1.0,
            dt: 0.01,
            stride: 5,
            l_sweep: Vec::new(),
            schedules: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CurveTarget {
    /// Full Hamiltonian on the lattice.
    #[default]
    Full,
    /// First block of the partition.
    Block,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoCurveConfig {
    #[serde(default)]
    pub target: CurveTarget,
    #[serde(default = "curve_betas")]
    pub betas: BetaGrid,
}

fn curve_betas() -> BetaGrid {
    BetaGrid {
        min: 0.01,
        max: 10.0,
        points: 100,
        log: true,
    }
}

impl Default for ThermoCurveConfig {
    fn default() -> Self {
        ThermoCurveConfig {
            target: CurveTarget::Full,
            betas: curve_betas(),
        }
    }
}

impl ScenarioConfig {
    /// Parses by extension: `.json` as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| format!("{e}"))
        } else {
            toml::from_str(&text).map_err(|e| format!("{e}"))
        };
        let config: ScenarioConfig =
            parsed.map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        config
            .validate()
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        config
            .validate()
            .map_err(|e| CliError::Validation(format!("config: {e}")))?;
        Ok(config)
    }

    /// Range checks that serde cannot express; errors name the offending key.
    /// `!(x > 0.0)` also rejects NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        let key = |k: &str, msg: &str| Err(format!("key `{k}`: {msg}"));
        if self.lattice.dim == 0 || self.lattice.size < 2 {
            return key("lattice", "need dim >= 1 and size >= 2");
        }
        if self.partition.l == 0 {
            return key("partition.l", "must be positive");
        }
        match self.model.preset {
            Preset::Explicit => {
                if self.model.terms.is_empty() {
                    return key("model.terms", "explicit model needs at least one term");
                }
                if self.model.j.is_some() || self.model.g.is_some() || self.model.h.is_some() {
                    return key("model", "j, g, h only apply to presets");
                }
            }
            Preset::IsingZzField => {
                if self.model.j.is_some() || self.model.g.is_some() {
                    return key("model", "ising_zz_field takes only h");
                }
                if !self.model.terms.is_empty() {
                    return key("model.terms", "only allowed with preset = \"explicit\"");
                }
            }
            Preset::MixedFieldIsing => {
                if !self.model.terms.is_empty() {
                    return key("model.terms", "only allowed with preset = \"explicit\"");
                }
            }
        }
        for (k, t) in self.model.terms.iter().enumerate() {
            if t.sites.is_empty() || t.sites.len() > 2 || t.sites.len() != t.pauli.len() {
                return key(
                    &format!("model.terms[{k}]"),
                    "need one or two sites and a matching Pauli string",
                );
            }
            if t.sites.contains(&0) {
                return key(&format!("model.terms[{k}].sites"), "sites are 1-based");
            }
            if !t.pauli.chars().all(|c| "ixyzIXYZ".contains(c)) {
                return key(&format!("model.terms[{k}].pauli"), "letters must be i, x, y or z");
            }
        }
        match &self.state {
            StateConfig::PairFamily { lambda, .. } if !(0.0..=0.5).contains(lambda) => {
                return key("state.lambda", "must lie in [0, 1/2]");
            }
            StateConfig::Eigenstate { index, fraction } => {
                if index.is_some() == fraction.is_some() {
                    return key("state", "eigenstate needs exactly one of index, fraction");
                }
                if fraction.is_some_and(|f| !(0.0..=1.0).contains(&f)) {
                    return key("state.fraction", "must lie in [0, 1]");
                }
            }
            StateConfig::Gibbs { beta } if !(*beta > 0.0) => return key("state.beta", "must be positive"),
            _ => {}
        }
        if self.reference.policy == ReferenceKind::Gibbs && !self.reference.beta.is_some_and(|b| b > 0.0) {
            return key("reference.beta", "gibbs reference needs a positive beta");
        }
        if !(self.thermo.beta0 > 0.0) {
            return key("thermo.beta0", "must be positive");
        }
        if self.thermo.beta1.is_some_and(|b| !(b > 0.0)) {
            return key("thermo.beta1", "must be positive");
        }
        if self.thermo.duration < 0.0 {
            return key("thermo.duration", "must be nonnegative");
        }
        for (name, grid) in [
            ("fig1.betas", &self.fig1.betas),
            ("thermo_curve.betas", &self.thermo_curve.betas),
        ] {
            if grid.points == 0 || !(grid.min > 0.0) || grid.max < grid.min {
                return key(name, "need points >= 1 and 0 < min <= max");
            }
        }
        if self.fig1.lambda_points < 2 {
            return key("fig1.lambda_points", "need at least two points");
        }
        if self.fig1.l < 2 || self.fig1.ed_l.iter().any(|&l| l < 2) {
            return key("fig1", "block sizes must be at least 2");
        }
        if self
            .eth
            .band
            .is_some_and(|(lo, hi)| !(0.0..=1.0).contains(&lo) || !(lo..=1.0).contains(&hi))
        {
            return key("eth.band", "need 0 <= lo <= hi <= 1");
        }
        if !(self.dynamics.dt > 0.0) || self.dynamics.total_time < 0.0 || self.dynamics.stride == 0 {
            return key("dynamics", "need dt > 0, total_time >= 0 and stride >= 1");
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form. The
    /// output directory is left out so relocated runs share a hash.
    pub fn hash(&self) -> String {
        let mut scenario = self.clone();
        scenario.output = PathBuf::new();
        let canonical = serde_json::to_string(&scenario).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = ScenarioConfig::from_toml("[lattice]\nsize = 8\n").unwrap();
        assert_eq!(c.partition.l, 2);
        assert_eq!(c.fig1.h, 1.0);
        assert_eq!(c.hash().len(), 16);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ScenarioConfig::from_toml("[lattice]\nsize = 8\ncolour = 1\n").unwrap_err();
        assert!(err.to_string().contains("colour"));
        assert!(ScenarioConfig::from_toml(
            "[lattice]\nsize = 8\n[state]\nbuilder = \"gibbs\"\nbeta = 1.0\nextra = 2\n"
        )
        .is_err());
    }

    #[test]
    fn range_errors_name_the_key() {
        let err = ScenarioConfig::from_toml("[lattice]\nsize = 8\n[state]\nbuilder = \"pair_family\"\nlambda = 0.7\n")
            .unwrap_err();
        assert!(err.to_string().contains("state.lambda"));
    }

    #[test]
    fn schedules_and_channels_parse() {
        let text = r#"
            [lattice]
            size = 4
            [[channels]]
            kind = "identity"
            [[channels]]
            kind = "random_circuits"
            count = 3
            [[dynamics.schedules]]
            term = "onsite(1)"
            schedule = { kind = "sine", offset = 1.0, amplitude = 0.2, omega = 3.0 }
        "#;
        let c = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(c.channels.len(), 2);
        assert_eq!(c.dynamics.schedules[0].term, "onsite(1)");
    }

    #[test]
    fn grids() {
        let g = BetaGrid {
            min: 1.0,
            max: 100.0,
            points: 3,
            log: true,
        };
        let v = g.values();
        assert!((v[1] - 10.0).abs() < 1e-12);
    }
}
