//! HTTP study harness: sessions with counterbalanced conditions, per-condition
//! task delivery, on-demand evidence, decisions, ratings and exportable logs.

mod clock;
mod error;
mod export;
mod http;
mod policy;
mod session;
mod study;
mod tasks;

pub use clock::{Clock, ManualClock, SystemClock};
pub use error::ServiceError;
pub use export::{ExportDocument, ExportSummary, EXPORT_FORMAT, EXPORT_VERSION};
pub use http::{router, serve, ErrorBody};
pub use policy::ConditionPolicy;
pub use session::{
    BipolarRating, ConditionViolation, DecisionRecord, EventKind, InteractionEvent, LogEntry, RatingMetric,
    SessionInfo, SessionState,
};
pub use study::{
    read_session_log, CreateSession, FeatureValue, PostEvent, ServiceConfig, StudyService, SubmitDecision,
    SubmitRating, TaskPayload, TaskView,
};
pub use tasks::{Task, TaskPool, TASK_POOL_FORMAT, TASK_POOL_VERSION};
