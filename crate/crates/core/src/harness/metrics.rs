//! Run metrics, computed from the trace alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::protocol::EntityId;
use crate::simnet::{TraceEvent, TraceKind};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryOutcome {
    pub actions: u64,
    pub detected: u64,
    pub undetected: u64,
    /// Neither rejected nor accepted before the run ended.
    pub unresolved: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub joins_attempted: u64,
    pub joins_succeeded: u64,
    pub joins_denied: u64,
    pub messages_sent: u64,
    pub messages_delivered: u64,
    pub messages_corrupted: u64,
    pub rejected: BTreeMap<String, u64>,
    pub refresh_rounds: u64,
    pub refresh_completed: u64,
    /// Distinct stored-key sizes observed per mote.
    pub stored_key_bytes: BTreeMap<EntityId, BTreeSet<u64>>,
    pub adversary: AdversaryOutcome,
    pub envelopes_sent: u64,
    pub envelopes_delivered: u64,
    pub envelopes_dropped: u64,
    pub envelopes_undeliverable: u64,
    pub violations: Vec<String>,
}

fn is_active_action(e: &TraceEvent) -> bool {
    e.kind == TraceKind::AdversaryAction && matches!(e.outcome.as_str(), "tampered" | "replayed" | "injected")
}

impl MetricsReport {
    pub fn from_trace(trace: &[TraceEvent]) -> Self {
        let mut r = MetricsReport::default();
        for e in trace {
            let env_kind = e.envelope.as_ref().map(|s| s.kind.as_str());
            match (e.kind, e.outcome.as_str()) {
                (TraceKind::Send, _) => {
                    r.envelopes_sent += 1;
                    if env_kind == Some("join_request") {
                        r.joins_attempted += 1;
                    }
                }
                (TraceKind::Deliver, _) => r.envelopes_delivered += 1,
                (TraceKind::Drop, _) => r.envelopes_dropped += 1,
                (TraceKind::Reject, _) => {
                    let cause = e.cause.clone().unwrap_or_else(|| "unspecified".into());
                    if cause == "unknown_destination" {
                        r.envelopes_undeliverable += 1;
                    }
                    if cause == "auth_denied" {
                        r.joins_denied += 1;
                    }
                    *r.rejected.entry(cause).or_default() += 1;
                }
                (TraceKind::KeyEvent, "operational") => r.joins_succeeded += 1,
                (TraceKind::KeyEvent, "data_sent") => r.messages_sent += 1,
                (TraceKind::KeyEvent, "data_received") => r.messages_delivered += 1,
                (TraceKind::KeyEvent, "corrupted") => r.messages_corrupted += 1,
                (TraceKind::KeyEvent, "refresh_round") => r.refresh_rounds += 1,
                (TraceKind::KeyEvent, "refresh_completed") => r.refresh_completed += 1,
                (TraceKind::KeyEvent, "footprint") => {
                    if let (Some(m), Some(v)) = (e.src, e.value) {
                        r.stored_key_bytes.entry(m).or_default().insert(v);
                    }
                }
                (TraceKind::KeyEvent, "invariant_violation") => {
                    r.violations.push(e.cause.clone().unwrap_or_default());
                }
                _ => {}
            }
        }
        r.adversary = Self::adversary_outcome(trace);
        r
    }

    /// Matches each active adversary action to the first verdict at or after
    /// it: a rejection or a corrupted delivery of the same message, or for
    /// actions without a message id, a rejection involving the same entity.
    fn adversary_outcome(trace: &[TraceEvent]) -> AdversaryOutcome {
        let mut out = AdversaryOutcome::default();
        for (i, a) in trace.iter().enumerate().filter(|(_, e)| is_active_action(e)) {
            out.actions += 1;
            let parties = [a.src, a.dst];
            let verdict = trace[i + 1..].iter().find_map(|e| match &a.msg {
                Some(m) if e.msg.as_ref() == Some(m) => match (e.kind, e.outcome.as_str()) {
                    (TraceKind::Reject, _) => Some(true),
                    (TraceKind::KeyEvent, "corrupted") => Some(false),
                    _ => None,
                },
                Some(_) => None,
                None => (e.kind == TraceKind::Reject
                    && (parties.contains(&e.src) || parties.contains(&e.dst)))
                .then_some(true),
            });
            match verdict {
                Some(true) => out.detected += 1,
                Some(false) => out.undetected += 1,
                None => out.unresolved += 1,
            }
        }
        out
    }

    /// Every send ends in exactly one delivery, drop or undeliverable
    /// rejection once the run is finished.
    pub fn conserved(&self) -> bool {
        self.envelopes_sent == self.envelopes_delivered + self.envelopes_dropped + self.envelopes_undeliverable
    }

    pub fn rejected_total(&self) -> u64 {
        self.rejected.values().sum()
    }

    /// Every mote reported exactly `bytes` of stored keys throughout.
    pub fn uniform_footprint(&self, bytes: u64) -> bool {
        !self.stored_key_bytes.is_empty()
            && self
                .stored_key_bytes
                .values()
                .all(|s| s.len() == 1 && s.contains(&bytes))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k:<24} {v}");
        };
        line("joins_attempted", self.joins_attempted.to_string());
        line("joins_succeeded", self.joins_succeeded.to_string());
        line("joins_denied", self.joins_denied.to_string());
        line("messages_sent", self.messages_sent.to_string());
        line("messages_delivered", self.messages_delivered.to_string());
        line("messages_corrupted", self.messages_corrupted.to_string());
        line("rejected", self.rejected_total().to_string());
        for (cause, n) in &self.rejected {
            line(&format!("  {cause}"), n.to_string());
        }
        line("refresh_rounds", self.refresh_rounds.to_string());
        line("refresh_completed", self.refresh_completed.to_string());
        let sizes: BTreeSet<u64> = self.stored_key_bytes.values().flatten().copied().collect();
        let sizes: Vec<String> = sizes.iter().map(u64::to_string).collect();
        line(
            "stored_key_bytes",
            format!("{} ({} motes)", sizes.join(","), self.stored_key_bytes.len()),
        );
        line("adversary_actions", self.adversary.actions.to_string());
        line("  detected", self.adversary.detected.to_string());
        line("  undetected", self.adversary.undetected.to_string());
        line("  unresolved", self.adversary.unresolved.to_string());
        line("envelopes_sent", self.envelopes_sent.to_string());
        line("envelopes_delivered", self.envelopes_delivered.to_string());
        line("envelopes_dropped", self.envelopes_dropped.to_string());
        line("envelopes_undeliverable", self.envelopes_undeliverable.to_string());
        line("violations", self.violations.len().to_string());
        for v in &self.violations {
            line("  -", v.clone());
        }
        s
    }
}
