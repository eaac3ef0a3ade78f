use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Stage of the translate/cut-off/mollify pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Translate,
    Cutoff,
    Mollify,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Translate => "translate",
            Stage::Cutoff => "cutoff",
            Stage::Mollify => "mollify",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid N-function: {0}")]
    InvalidNFunction(String),

    #[error("sampling error at node {node:?}: {reason}")]
    Sampling { node: Vec<f64>, reason: String },

    #[error("translation {shift:?} is not aligned with grid spacing {spacing}")]
    Alignment { shift: Vec<f64>, spacing: f64 },

    #[error("mollifier radius {epsilon} is below twice the grid spacing {spacing}")]
    Resolution { epsilon: f64, spacing: f64 },

    #[error("function is not in the modular space: {0}")]
    NotInSpace(String),

    #[error("error budget infeasible at the {stage} stage: {reason}")]
    BudgetInfeasible { stage: Stage, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {v}")))
    }
}
