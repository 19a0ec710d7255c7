use serde::{Deserialize, Serialize};

use crate::protocol::{EntityId, Envelope};

use super::Time;

pub const TRACE_SCHEMA: &str = "caws-trace";
pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Send,
    Deliver,
    Drop,
    Reject,
    AdversaryAction,
    KeyEvent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvelopeSummary {
    pub kind: String,
    pub len: usize,
    /// Full wire encoding, hex.
    pub wire: String,
}

impl From<&Envelope> for EnvelopeSummary {
    fn from(env: &Envelope) -> Self {
        let wire = env.encode();
        Self {
            kind: env.kind().name().to_string(),
            len: wire.len(),
            wire: hex::encode(wire),
        }
    }
}

/// One line of the trace. Field order is the serialization order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: Time,
    pub kind: TraceKind,
    pub src: Option<EntityId>,
    pub dst: Option<EntityId>,
    pub envelope: Option<EnvelopeSummary>,
    /// End-to-end message id (`origin:ts`) for data-bearing events.
    pub msg: Option<String>,
    pub outcome: String,
    pub cause: Option<String>,
    pub value: Option<u64>,
}

impl TraceEvent {
    pub fn new(time: Time, kind: TraceKind, outcome: impl Into<String>) -> Self {
        Self {
            time,
            kind,
            src: None,
            dst: None,
            envelope: None,
            msg: None,
            outcome: outcome.into(),
            cause: None,
            value: None,
        }
    }

    pub fn with_envelope(mut self, env: &Envelope) -> Self {
        self.src = Some(env.src);
        self.dst = Some(env.dst);
        self.msg = env.message_id();
        self.envelope = Some(env.into());
        self
    }

    pub fn with_actors(mut self, src: Option<EntityId>, dst: Option<EntityId>) -> Self {
        self.src = src;
        self.dst = dst;
        self
    }

    pub fn with_msg(mut self, msg: Option<String>) -> Self {
        self.msg = msg;
        self
    }

    pub fn with_cause(mut self, cause: impl Into<String>) -> Self {
        self.cause = Some(cause.into());
        self
    }

    pub fn with_value(mut self, value: u64) -> Self {
        self.value = Some(value);
        self
    }

    /// Decodes the carried envelope, if any.
    pub fn decode_envelope(&self) -> Option<Envelope> {
        let s = self.envelope.as_ref()?;
        Envelope::decode(&hex::decode(&s.wire).ok()?).ok()
    }
}
