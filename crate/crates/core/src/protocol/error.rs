use crate::rca::RcaError;

use super::ids::EntityId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("invalid state: {0}")]
    State(String),
    #[error("unknown base station {0}")]
    UnknownBaseStation(EntityId),
    #[error("no pending join for serial {0}")]
    NoPendingJoin(String),
    #[error("join failed: {0}")]
    JoinFailure(&'static str),
    #[error("session key must be nonzero")]
    InvalidKey,
    #[error("frame integrity check failed")]
    Integrity,
    #[error("stale timestamp {ts} from {sender} (last accepted {last})")]
    Replay { sender: EntityId, ts: u32, last: u32 },
    #[error("mote {0} is not registered with this base station")]
    Unauthorized(EntityId),
    #[error("no route to {0}")]
    Routing(EntityId),
    #[error("provisioning failed: {0}")]
    Provisioning(&'static str),
    #[error("refresh rejected: recovered key is zero")]
    RefreshRejected,
    #[error("refresh acknowledgement from {0} does not match the issued key")]
    RefreshDesync(EntityId),
    #[error("malformed envelope: {0}")]
    Malformed(String),
    #[error(transparent)]
    Rca(#[from] RcaError),
}

impl ProtocolError {
    /// Short machine-readable label used in traces and metrics.
    pub fn cause(&self) -> &'static str {
        match self {
            ProtocolError::State(_) => "state",
            ProtocolError::UnknownBaseStation(_) => "unknown_base_station",
            ProtocolError::NoPendingJoin(_) => "no_pending_join",
            ProtocolError::JoinFailure(_) => "join_failure",
            ProtocolError::InvalidKey => "invalid_key",
            ProtocolError::Integrity => "integrity",
            ProtocolError::Replay { .. } => "replay",
            ProtocolError::Unauthorized(_) => "unauthorized",
            ProtocolError::Routing(_) => "routing",
            ProtocolError::Provisioning(_) => "provisioning",
            ProtocolError::RefreshRejected => "refresh_rejected",
            ProtocolError::RefreshDesync(_) => "refresh_desync",
            ProtocolError::Malformed(_) => "malformed",
            ProtocolError::Rca(_) => "cipher",
        }
    }
}
