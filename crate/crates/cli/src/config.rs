//! JSON run configuration: parsing, validation and canonical emission.

use num_complex::Complex64;
use qfec_core::linalg::Mat2;
use qfec_core::trajectory::{LogicalState, SimConfig};
use qfec_core::{BlochVector, ErrorChannel, Generator};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("malformed config at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config field `{field}`: {message}")]
    Schema { field: String, message: String },
}

impl ConfigError {
    fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Schema {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// `[re, im]`
pub type ComplexDoc = [f64; 2];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum LabelDoc {
    Text(String),
    Number(u64),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelDoc {
    pub qubit: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<LabelDoc>,
    #[serde(rename = "E")]
    pub e: Vec<Vec<ComplexDoc>>,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub phi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum InitialStateDoc {
    Index(usize),
    Coefficients(Vec<ComplexDoc>),
}

impl Default for InitialStateDoc {
    fn default() -> Self {
        InitialStateDoc::Index(0)
    }
}

fn default_trajectories() -> usize {
    1
}

fn default_samples() -> usize {
    10
}

fn yes() -> bool {
    true
}

/// On-disk layout of a run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub n: usize,
    pub dt: f64,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "yes")]
    pub feedback: bool,
    #[serde(default = "yes")]
    pub driving: bool,
    #[serde(default)]
    pub initial_state: InitialStateDoc,
    /// Number of evenly spaced output times.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Code override, one Bloch vector per qubit for each generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<Vec<Vec<[f64; 3]>>>,
    #[serde(default)]
    pub channels: Vec<ChannelDoc>,
}

fn position_error(err: serde_json::Error) -> ConfigError {
    use serde_json::error::Category;
    match err.classify() {
        Category::Data => {
            let text = err.to_string();
            // serde reports missing/unknown fields as "... field `name` ..."
            let field = text
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<document>".into());
            ConfigError::Schema {
                field,
                message: text,
            }
        }
        _ => ConfigError::Malformed {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        },
    }
}

fn finite(field: &str, x: f64) -> Result<f64, ConfigError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::schema(field, "must be finite"))
    }
}

fn matrix_from_doc(field: &str, rows: &[Vec<ComplexDoc>]) -> Result<Mat2, ConfigError> {
    if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
        return Err(ConfigError::schema(field, "matrix must be 2x2"));
    }
    let mut m = Mat2::zeros();
    for (r, row) in rows.iter().enumerate() {
        for (col, [re, im]) in row.iter().enumerate() {
            m[(r, col)] = Complex64::new(finite(field, *re)?, finite(field, *im)?);
        }
    }
    Ok(m)
}

fn matrix_to_doc(m: &Mat2) -> Vec<Vec<ComplexDoc>> {
    (0..2)
        .map(|r| (0..2).map(|col| [m[(r, col)].re, m[(r, col)].im]).collect())
        .collect()
}

impl ConfigDoc {
    /// Validated simulation configuration.
    pub fn to_sim_config(&self) -> Result<SimConfig, ConfigError> {
        let n = self.n;
        if n == 0 || n > qfec_core::linalg::MAX_QUBITS {
            return Err(ConfigError::schema(
                "n",
                format!("must be in 1..={}", qfec_core::linalg::MAX_QUBITS),
            ));
        }
        if finite("dt", self.dt)? <= 0.0 {
            return Err(ConfigError::schema("dt", "must be positive"));
        }
        if finite("duration", self.duration)? < self.dt {
            return Err(ConfigError::schema("duration", "must be at least dt"));
        }
        if self.trajectories == 0 {
            return Err(ConfigError::schema("trajectories", "must be at least 1"));
        }
        if self.samples == 0 {
            return Err(ConfigError::schema("samples", "must be at least 1"));
        }

        let mut channels = Vec::with_capacity(self.channels.len());
        for (i, doc) in self.channels.iter().enumerate() {
            let at = |f: &str| format!("channels[{i}].{f}");
            if doc.qubit >= n {
                return Err(ConfigError::schema(
                    at("qubit"),
                    format!("qubit {} out of range for n = {n}", doc.qubit),
                ));
            }
            let op = matrix_from_doc(&at("E"), &doc.e)?;
            let gamma = finite(&at("gamma"), doc.gamma)?;
            if gamma < 0.0 {
                return Err(ConfigError::schema(at("gamma"), "must be non-negative"));
            }
            let phi = finite(&at("phi"), doc.phi)?;
            let label = match &doc.label {
                Some(LabelDoc::Text(s)) => s.clone(),
                Some(LabelDoc::Number(k)) => k.to_string(),
                None => i.to_string(),
            };
            let ch = ErrorChannel::new(doc.qubit, op)
                .with_label(label)
                .with_offset(gamma, phi)
                .map_err(|e| ConfigError::schema(at("gamma"), e.to_string()))?;
            channels.push(ch);
        }

        let initial_state = match &self.initial_state {
            InitialStateDoc::Index(k) => LogicalState::Index(*k),
            InitialStateDoc::Coefficients(cs) => LogicalState::Coefficients(
                cs.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
            ),
        };

        let code = match &self.code {
            None => None,
            Some(gens) => {
                let mut out = Vec::with_capacity(gens.len());
                for (g, factors) in gens.iter().enumerate() {
                    if factors.len() != n {
                        return Err(ConfigError::schema(
                            format!("code[{g}]"),
                            format!("expected {n} Bloch vectors, got {}", factors.len()),
                        ));
                    }
                    out.push(Generator::new(
                        factors
                            .iter()
                            .map(|v| BlochVector::from_array(*v))
                            .collect(),
                    ));
                }
                Some(out)
            }
        };

        let mut cfg = SimConfig::new(n, channels, self.dt, self.duration);
        cfg.seed = self.seed;
        cfg.trajectories = self.trajectories;
        cfg.feedback = self.feedback;
        cfg.driving = self.driving;
        cfg.initial_state = initial_state;
        cfg.samples = self.samples;
        cfg.code = code;
        cfg.validate()
            .map_err(|e| ConfigError::schema("<document>", e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_sim_config(cfg: &SimConfig) -> Self {
        ConfigDoc {
            n: cfg.n,
            dt: cfg.dt,
            duration: cfg.duration,
            seed: cfg.seed,
            trajectories: cfg.trajectories,
            feedback: cfg.feedback,
            driving: cfg.driving,
            initial_state: match &cfg.initial_state {
                LogicalState::Index(k) => InitialStateDoc::Index(*k),
                LogicalState::Coefficients(cs) => {
                    InitialStateDoc::Coefficients(cs.iter().map(|z| [z.re, z.im]).collect())
                }
            },
            samples: cfg.samples,
            code: cfg.code.as_ref().map(|gens| {
                gens.iter()
                    .map(|g| g.factors.iter().map(|v| v.to_array()).collect())
                    .collect()
            }),
            channels: cfg
                .channels
                .iter()
                .map(|ch| ChannelDoc {
                    qubit: ch.qubit,
                    label: Some(LabelDoc::Text(ch.label.clone())),
                    e: matrix_to_doc(&ch.operator),
                    gamma: ch.gamma(),
                    phi: ch.phi(),
                })
                .collect(),
        }
    }
}

/// Parses and validates a JSON configuration document.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let doc: ConfigDoc = serde_json::from_str(text).map_err(position_error)?;
    doc.to_sim_config()
}

/// Canonical pretty-printed JSON with every field explicit.
pub fn canonical_config(cfg: &SimConfig) -> String {
    serde_json::to_string_pretty(&ConfigDoc::from_sim_config(cfg)).expect("config serializes")
}

/// Hex SHA-256 of the canonical form.
pub fn config_digest(cfg: &SimConfig) -> String {
    hex::encode(Sha256::digest(canonical_config(cfg).as_bytes()))
}
