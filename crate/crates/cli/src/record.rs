use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RunMethod {
    Mf,
    Spn,
    OracleEnum,
    OracleTransfer,
    Importance,
}

impl RunMethod {
    pub fn name(self) -> &'static str {
        match self {
            RunMethod::Mf => "mf",
            RunMethod::Spn => "spn",
            RunMethod::OracleEnum => "oracle-enum",
            RunMethod::OracleTransfer => "oracle-transfer",
            RunMethod::Importance => "importance",
        }
    }

    pub fn uses_k(self) -> bool {
        matches!(self, RunMethod::Spn | RunMethod::Importance)
    }
}

/// One experiment run. Optional fields are omitted when they do not apply,
/// so every number present is finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub method: RunMethod,
    pub instance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elbo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_err: Option<f64>,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn new(method: RunMethod, instance: impl Into<String>) -> Self {
        Self {
            key: None,
            method,
            instance: instance.into(),
            k: None,
            restarts: None,
            iters: None,
            elbo: None,
            log_z: None,
            std_err: None,
            wall_ms: 0.0,
            seed: None,
            version: version(),
            error: None,
        }
    }

    /// Drops non-finite values, which JSON cannot carry.
    pub fn sanitized(mut self) -> Self {
        for v in [&mut self.elbo, &mut self.log_z, &mut self.std_err] {
            if v.is_some_and(|x| !x.is_finite()) {
                *v = None;
            }
        }
        if !self.wall_ms.is_finite() {
            self.wall_ms = 0.0;
        }
        self
    }
}

pub fn version() -> String {
    format!("circuit-vi {}", env!("CARGO_PKG_VERSION"))
}
