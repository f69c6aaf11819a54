//! Deterministic scenario runner.
//!
//! A [`Community`] holds the agreed parameters, the CA and every member. A
//! [`Scenario`] names a group, an initiator and what happens to the session;
//! [`run_scenario`] plays it out over a reliable public broadcast channel
//! with a simulated clock and records a [`Transcript`].

mod community;
mod scenario;
mod transcript;

use thiserror::Error;

pub use community::{setup_community, Community, IdAssignment, ParamsSource};
pub use scenario::{
    run_scenario, AttackOptions, ClockSchedule, HonestSession, NewKey, Scenario, ScenarioKind, Simulation,
    DEFAULT_START_TIME,
};
pub use transcript::{
    AttackAction, AuditError, BroadcastOrigin, DeliveryCounts, Event, Transcript, TranscriptLine, Verdict,
};

use crate::adversary::AttackError;
use crate::group_math::MathError;
use crate::pki::PkiError;
use crate::protocol::ProtocolError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    ScenarioInvalid(String),
    #[error("invalid community: {0}")]
    CommunityInvalid(String),
    #[error("invalid transcript: {0}")]
    TranscriptInvalid(String),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Pki(#[from] PkiError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
