//! Scenario files (JSON).
//!
//! ```json
//! {
//!   "seed": 7,
//!   "horizon": 500,
//!   "keystream": { "rule": 30, "warmup": 64 },
//!   "flags": { "allow_credential_reuse": false },
//!   "links": { "mote_bs": { "delay": 1, "drop": 0.0 } },
//!   "clusters": [ { "bs_id": 1, "backup_id": 2, "mote_count": 2, "refresh_period": 100 } ],
//!   "traffic": [ { "time": 20, "src": 1000, "dst": 1001, "payload_hex": "48656c6c6f" } ],
//!   "adversary": { "mode": "tamper", "links": [[1000, 1]] },
//!   "bs_failures": [ { "time": 250, "bs": 1 } ],
//!   "mote_failures": [ { "time": 300, "mote": 1001, "recover_after": 10 } ]
//! }
//! ```
//!
//! `seed`, `horizon` and `clusters` are required. Motes are listed
//! explicitly with `motes` or allocated with `mote_count` from id 1000
//! upward, skipping ids already taken. A `refresh_period` of 0 disables
//! rekeying for that cluster.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::protocol::{EntityId, CENTRAL_SERVER};
use crate::rca::{KeystreamParams, TapPolicy, DEFAULT_RULE, DEFAULT_WARMUP, MAX_WARMUP};
use crate::simnet::{AdversaryMode, AdversaryScript, Time};

pub const DEFAULT_REFRESH_PERIOD: Time = 100;
pub const FIRST_AUTO_MOTE_ID: u16 = 1000;
pub const MAX_PAYLOAD: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {msg}")]
    Invalid { field: String, msg: String },
}

fn invalid(field: impl Into<String>, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        msg: msg.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeystreamConfig {
    #[serde(default = "default_rule")]
    pub rule: u8,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
}

fn default_rule() -> u8 {
    DEFAULT_RULE
}

fn default_warmup() -> usize {
    DEFAULT_WARMUP
}

impl Default for KeystreamConfig {
    fn default() -> Self {
        Self {
            rule: DEFAULT_RULE,
            warmup: DEFAULT_WARMUP,
        }
    }
}

impl KeystreamConfig {
    pub fn params(&self) -> KeystreamParams {
        KeystreamParams {
            rule: self.rule,
            warmup_steps: self.warmup,
            tap: TapPolicy::Center,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// Let a recovered mote rejoin with its original, already consumed
    /// credentials instead of being reprovisioned.
    #[serde(default)]
    pub allow_credential_reuse: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    #[serde(default = "default_delay")]
    pub delay: Time,
    #[serde(default)]
    pub drop: f64,
}

fn default_delay() -> Time {
    1
}

impl Default for LinkSpec {
    fn default() -> Self {
        Self { delay: 1, drop: 0.0 }
    }
}

/// Link parameters per class of link.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkClasses {
    #[serde(default)]
    pub mote_bs: LinkSpec,
    #[serde(default)]
    pub bs_cs: LinkSpec,
    #[serde(default)]
    pub bs_bs: LinkSpec,
    #[serde(default)]
    pub bs_backup: LinkSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub bs_id: u16,
    #[serde(default)]
    pub backup_id: Option<u16>,
    #[serde(default)]
    pub mote_count: Option<usize>,
    #[serde(default)]
    pub motes: Option<Vec<u16>>,
    #[serde(default = "default_refresh")]
    pub refresh_period: Time,
    #[serde(default)]
    pub join_time: Time,
}

fn default_refresh() -> Time {
    DEFAULT_REFRESH_PERIOD
}

impl ClusterConfig {
    pub fn new(bs_id: u16, mote_count: usize) -> Self {
        Self {
            bs_id,
            backup_id: None,
            mote_count: Some(mote_count),
            motes: None,
            refresh_period: DEFAULT_REFRESH_PERIOD,
            join_time: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficItem {
    pub time: Time,
    pub src: u16,
    pub dst: u16,
    #[serde(default)]
    pub payload_len: Option<usize>,
    #[serde(default)]
    pub payload_hex: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsFailure {
    pub time: Time,
    pub bs: u16,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoteFailure {
    pub time: Time,
    pub mote: u16,
    #[serde(default)]
    pub recover_after: Option<Time>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub horizon: Time,
    #[serde(default)]
    pub keystream: KeystreamConfig,
    #[serde(default)]
    pub flags: Flags,
    #[serde(default)]
    pub links: LinkClasses,
    pub clusters: Vec<ClusterConfig>,
    #[serde(default)]
    pub traffic: Vec<TrafficItem>,
    #[serde(default)]
    pub adversary: Option<AdversaryScript>,
    #[serde(default)]
    pub bs_failures: Vec<BsFailure>,
    #[serde(default)]
    pub mote_failures: Vec<MoteFailure>,
}

/// Cluster with its mote ids resolved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedCluster {
    pub bs: EntityId,
    pub backup: Option<EntityId>,
    pub motes: Vec<EntityId>,
    pub refresh_period: Time,
    pub join_time: Time,
}

impl ScenarioConfig {
    pub fn new(seed: u64, horizon: Time, clusters: Vec<ClusterConfig>) -> Self {
        Self {
            seed,
            horizon,
            keystream: KeystreamConfig::default(),
            flags: Flags::default(),
            links: LinkClasses::default(),
            clusters,
            traffic: Vec::new(),
            adversary: None,
            bs_failures: Vec::new(),
            mote_failures: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Resolves mote ids: explicit lists first, then auto-allocation in
    /// cluster order.
    pub fn resolve_clusters(&self) -> Vec<ResolvedCluster> {
        let mut taken: BTreeSet<u16> = BTreeSet::from([CENTRAL_SERVER.0]);
        for c in &self.clusters {
            taken.insert(c.bs_id);
            taken.extend(c.backup_id);
            taken.extend(c.motes.iter().flatten().copied());
        }
        let mut next = FIRST_AUTO_MOTE_ID;
        self.clusters
            .iter()
            .map(|c| {
                let motes = match &c.motes {
                    Some(list) => list.iter().map(|&m| EntityId(m)).collect(),
                    None => (0..c.mote_count.unwrap_or(0))
                        .map(|_| {
                            while taken.contains(&next) {
                                next += 1;
                            }
                            taken.insert(next);
                            EntityId(next)
                        })
                        .collect(),
                };
                ResolvedCluster {
                    bs: EntityId(c.bs_id),
                    backup: c.backup_id.map(EntityId),
                    motes,
                    refresh_period: c.refresh_period,
                    join_time: c.join_time,
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.keystream.warmup > MAX_WARMUP {
            return Err(invalid(
                "keystream.warmup",
                format!("{} exceeds maximum {MAX_WARMUP}", self.keystream.warmup),
            ));
        }
        for (name, spec) in [
            ("links.mote_bs", &self.links.mote_bs),
            ("links.bs_cs", &self.links.bs_cs),
            ("links.bs_bs", &self.links.bs_bs),
            ("links.bs_backup", &self.links.bs_backup),
        ] {
            if !(0.0..=1.0).contains(&spec.drop) {
                return Err(invalid(format!("{name}.drop"), format!("{} outside [0, 1]", spec.drop)));
            }
        }
        if self.clusters.is_empty() {
            return Err(invalid("clusters", "at least one cluster is required"));
        }
        let mut ids: BTreeSet<u16> = BTreeSet::new();
        let mut claim = |id: u16, field: String| -> Result<(), ScenarioError> {
            if id == CENTRAL_SERVER.0 {
                return Err(invalid(field, "id 0 is reserved for the central server"));
            }
            if !ids.insert(id) {
                return Err(invalid(field, format!("duplicate id {id}")));
            }
            Ok(())
        };
        for (i, c) in self.clusters.iter().enumerate() {
            claim(c.bs_id, format!("clusters[{i}].bs_id"))?;
            if let Some(b) = c.backup_id {
                claim(b, format!("clusters[{i}].backup_id"))?;
            }
            match (&c.motes, c.mote_count) {
                (None, None) => {
                    return Err(invalid(
                        format!("clusters[{i}]"),
                        "one of `motes` or `mote_count` is required",
                    ))
                }
                (Some(list), Some(n)) if list.len() != n => {
                    return Err(invalid(
                        format!("clusters[{i}].mote_count"),
                        format!("{n} does not match {} listed motes", list.len()),
                    ))
                }
                _ => {}
            }
            for &m in c.motes.iter().flatten() {
                claim(m, format!("clusters[{i}].motes"))?;
            }
            if c.join_time > self.horizon {
                return Err(invalid(format!("clusters[{i}].join_time"), "after horizon"));
            }
        }
        let resolved = self.resolve_clusters();
        let motes: BTreeSet<u16> = resolved.iter().flat_map(|c| c.motes.iter().map(|m| m.0)).collect();
        let stations: BTreeSet<u16> = self.clusters.iter().map(|c| c.bs_id).collect();
        let mote_total: usize = resolved.iter().map(|c| c.motes.len()).sum();
        if motes.len() != mote_total {
            return Err(invalid("clusters", "auto-allocated mote ids overflowed"));
        }
        for (i, t) in self.traffic.iter().enumerate() {
            let f = |name: &str| format!("traffic[{i}].{name}");
            if t.time > self.horizon {
                return Err(invalid(f("time"), format!("{} is after horizon {}", t.time, self.horizon)));
            }
            if !motes.contains(&t.src) {
                return Err(invalid(f("src"), format!("unknown mote {}", t.src)));
            }
            if !motes.contains(&t.dst) {
                return Err(invalid(f("dst"), format!("unknown mote {}", t.dst)));
            }
            match (&t.payload_len, &t.payload_hex) {
                (Some(n), None) if *n > MAX_PAYLOAD => {
                    return Err(invalid(f("payload_len"), format!("{n} exceeds {MAX_PAYLOAD}")))
                }
                (Some(_), None) => {}
                (None, Some(h)) => {
                    let bytes = hex::decode(h).map_err(|e| invalid(f("payload_hex"), e.to_string()))?;
                    if bytes.len() > MAX_PAYLOAD {
                        return Err(invalid(f("payload_hex"), format!("longer than {MAX_PAYLOAD} bytes")));
                    }
                }
                _ => {
                    return Err(invalid(
                        format!("traffic[{i}]"),
                        "exactly one of `payload_len` or `payload_hex` is required",
                    ))
                }
            }
        }
        for (i, f) in self.bs_failures.iter().enumerate() {
            if !stations.contains(&f.bs) {
                return Err(invalid(format!("bs_failures[{i}].bs"), format!("unknown base station {}", f.bs)));
            }
        }
        for (i, f) in self.mote_failures.iter().enumerate() {
            if !motes.contains(&f.mote) {
                return Err(invalid(format!("mote_failures[{i}].mote"), format!("unknown mote {}", f.mote)));
            }
        }
        if let Some(adv) = &self.adversary {
            let known = |id: EntityId| id == CENTRAL_SERVER || ids.contains(&id.0) || motes.contains(&id.0);
            if adv.mode == AdversaryMode::RogueMote {
                let Some(&(rogue, bs)) = adv.links.first() else {
                    return Err(invalid("adversary.links", "rogue mote needs [rogue_id, bs_id]"));
                };
                if known(rogue) {
                    return Err(invalid("adversary.links", format!("rogue id {rogue} is already provisioned")));
                }
                if !stations.contains(&bs.0) {
                    return Err(invalid("adversary.links", format!("{bs} is not a base station")));
                }
            } else {
                for &(a, b) in &adv.links {
                    if !known(a) || !known(b) {
                        return Err(invalid("adversary.links", format!("unknown endpoint in link [{a}, {b}]")));
                    }
                }
            }
            if let Some(t) = adv.triggers.iter().find(|&&t| t > self.horizon) {
                return Err(invalid("adversary.triggers", format!("{t} is after horizon")));
            }
        }
        Ok(())
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_json(&text)
}
