use thiserror::Error;
use woe_core::Condition;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServiceError {
    #[error("no tasks registered")]
    NoTasks,
    #[error("unknown session '{0}'")]
    UnknownSession(String),
    #[error("task {index} out of range for {len} tasks")]
    TaskOutOfRange { index: usize, len: usize },
    #[error("unknown hypothesis '{0}'")]
    UnknownHypothesis(String),
    #[error("{request} is not available under {condition}")]
    ConditionViolation { condition: Condition, request: String },
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("session log: {0}")]
    Log(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::NoTasks => "no-tasks",
            Self::UnknownSession(_) => "unknown-session",
            Self::TaskOutOfRange { .. } => "task-out-of-range",
            Self::UnknownHypothesis(_) => "unknown-hypothesis",
            Self::ConditionViolation { .. } => "condition-violation",
            Self::Validation(_) => "validation",
            Self::Conflict(_) => "conflict",
            Self::BadRequest(_) => "bad-request",
            Self::Log(_) => "log",
            Self::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> u16 {
        match self {
            Self::NoTasks => 409,
            Self::UnknownSession(_) | Self::TaskOutOfRange { .. } | Self::UnknownHypothesis(_) => 404,
            Self::ConditionViolation { .. } => 403,
            Self::Validation(_) => 422,
            Self::Conflict(_) => 409,
            Self::BadRequest(_) => 400,
            Self::Log(_) | Self::Internal(_) => 500,
        }
    }
}
