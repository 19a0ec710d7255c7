//! Scripted attackers that sit on links.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::protocol::{EntityId, Envelope, Kind};

use super::Time;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryMode {
    /// Copies matching envelopes; never alters traffic.
    Eavesdrop,
    /// Captures matching envelopes and re-sends one per trigger time.
    Replay,
    /// Flips one bit of each matching envelope in transit.
    Tamper,
    /// Injects traffic from an unprovisioned identity at trigger times.
    RogueMote,
}

/// Region of an envelope body a tamper flip lands in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TamperField {
    /// Sealed payload (`C` of data, `P` of a grant).
    Ciphertext,
    /// Wrapped key material (`R″`, `M″`, `A‖B`, replicated keys).
    KeyWrap,
    #[default]
    Any,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RogueAction {
    #[default]
    Join,
    Data,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryScript {
    pub mode: AdversaryMode,
    /// Directed links `(src, dst)` the adversary watches or injects on.
    #[serde(default)]
    pub links: Vec<(EntityId, EntityId)>,
    #[serde(default)]
    pub triggers: Vec<Time>,
    /// Envelope kinds acted on; empty means every kind for eavesdropping
    /// and data only otherwise.
    #[serde(default)]
    pub kinds: Vec<Kind>,
    #[serde(default)]
    pub field: TamperField,
    /// Fixed bit offset within the field; drawn at random when absent.
    #[serde(default)]
    pub bit: Option<usize>,
    /// Stop tampering after this many flips.
    #[serde(default)]
    pub max_actions: Option<usize>,
    #[serde(default)]
    pub rogue_action: RogueAction,
    /// Destination of injected rogue data.
    #[serde(default)]
    pub rogue_target: Option<EntityId>,
}

impl AdversaryScript {
    pub fn new(mode: AdversaryMode, links: Vec<(EntityId, EntityId)>) -> Self {
        Self {
            mode,
            links,
            triggers: Vec::new(),
            kinds: Vec::new(),
            field: TamperField::Any,
            bit: None,
            max_actions: None,
            rogue_action: RogueAction::Join,
            rogue_target: None,
        }
    }

    pub fn with_triggers(mut self, triggers: Vec<Time>) -> Self {
        self.triggers = triggers;
        self
    }

    pub fn matches_kind(&self, kind: Kind) -> bool {
        if self.kinds.is_empty() {
            self.mode == AdversaryMode::Eavesdrop || kind == Kind::Data
        } else {
            self.kinds.contains(&kind)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AdversaryHandle(pub(crate) usize);

#[derive(Debug)]
pub(crate) struct Adversary {
    pub script: AdversaryScript,
    pub captured: VecDeque<Envelope>,
    pub log: Vec<Envelope>,
    pub actions: usize,
}

impl Adversary {
    pub fn new(script: AdversaryScript) -> Self {
        Self {
            script,
            captured: VecDeque::new(),
            log: Vec::new(),
            actions: 0,
        }
    }

    pub fn watches(&self, link: (EntityId, EntityId)) -> bool {
        self.script.links.contains(&link)
    }
}

/// Byte range of the tamperable field within an encoded body.
pub(crate) fn field_range(kind: Kind, field: TamperField, body_len: usize) -> Option<std::ops::Range<usize>> {
    use TamperField::*;
    let r = match (kind, field) {
        (Kind::Data | Kind::InterForward, Ciphertext) => 16..body_len,
        (Kind::Data | Kind::InterForward, KeyWrap) => 8..16,
        (Kind::Data | Kind::InterForward, Any) => 8..body_len,
        (Kind::AuthGrant, Ciphertext | Any) => 3..10,
        (Kind::KeyAssign, KeyWrap | Any) => 0..16,
        (Kind::Refresh | Kind::RefreshAck, KeyWrap | Any) => 0..8,
        (Kind::FailoverSync, KeyWrap | Any) => 2..10,
        _ => return None,
    };
    (r.start < r.end && r.end <= body_len).then_some(r)
}
