use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: `{field}` {reason}")]
    Config { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("cost model: {stage} layer {layer} needs a {kernel_w}x{kernel_h} kernel but the input is {width}x{height}")]
    ShapeUnderflow {
        stage: &'static str,
        layer: usize,
        kernel_w: u32,
        kernel_h: u32,
        width: u32,
        height: u32,
    },

    #[error("cost model: exit point {exit} out of range ({available} exits)")]
    ExitOutOfRange { exit: usize, available: usize },

    #[error("deadlines infeasible on MEC {mec}: minimum capacities sum to {required:.6e} > budget {budget:.6e} (terminals {terminals:?})")]
    InfeasibleDeadline {
        mec: usize,
        required: f64,
        budget: f64,
        terminals: Vec<usize>,
    },

    #[error("no feasible initial association: {0}")]
    InfeasibleInit(String),

    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}
