//! The simulated deployment: entity setup and event dispatch.
//!
//! Besides driving the state machines, the world keeps a ground-truth oracle
//! (plaintext and session key per message) and checks invariants as events
//! happen. A violation is recorded both in [`SimWorld::violations`] and as an
//! `invariant_violation` key event in the trace.
//!
//! Setup draws from the network RNG in a fixed order: for each cluster in
//! file order, its base-station key, then credentials for each of its motes.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::protocol::{
    is_zero, random_nonzero, BaseStationState, Body, CentralServerRegistry, DataBody, EntityId, Envelope,
    KeyMaterial, Mote, ProtocolError, CENTRAL_SERVER,
};
use crate::rca::RcaCipher;
use crate::simnet::{AdversaryMode, LinkModel, Network, Presence, Time, TraceEvent, TraceKind, World};

use super::scenario::{LinkSpec, MoteFailure, ScenarioConfig, ScenarioError, TrafficItem};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Timer {
    Join(EntityId),
    Traffic(usize),
    Refresh(EntityId),
    BsFailure(EntityId),
    MoteFailure(usize),
    MoteRecover(EntityId),
}

pub struct SimWorld {
    cipher: RcaCipher,
    allow_reuse: bool,
    horizon: Time,
    registry: CentralServerRegistry,
    /// Keyed by device id.
    stations: BTreeMap<EntityId, BaseStationState>,
    /// Cluster id to the device currently acting for it.
    serving: BTreeMap<EntityId, EntityId>,
    backups: BTreeMap<EntityId, EntityId>,
    refresh_periods: BTreeMap<EntityId, Time>,
    down: BTreeSet<EntityId>,
    motes: BTreeMap<EntityId, Mote>,
    traffic: Vec<TrafficItem>,
    mote_failures: Vec<MoteFailure>,
    sent: BTreeMap<String, Vec<u8>>,
    session_keys: BTreeMap<String, [u8; 8]>,
    received: BTreeSet<String>,
    tainted_msgs: BTreeSet<String>,
    tainted_motes: BTreeSet<EntityId>,
    violations: Vec<String>,
}

fn link(spec: &LinkSpec) -> Result<LinkModel, ScenarioError> {
    LinkModel::new(spec.delay, spec.drop).map_err(|e| ScenarioError::Invalid {
        field: "links".into(),
        msg: e.to_string(),
    })
}

impl SimWorld {
    /// Builds entities, links and the initial event schedule.
    pub fn setup(config: &ScenarioConfig, net: &mut Network<Timer>) -> Result<Self, ScenarioError> {
        config.validate()?;
        let cipher = RcaCipher::new(config.keystream.params()).map_err(|e| ScenarioError::Invalid {
            field: "keystream".into(),
            msg: e.to_string(),
        })?;
        let clusters = config.resolve_clusters();
        let mut registry = CentralServerRegistry::new();
        let mut stations = BTreeMap::new();
        let mut motes = BTreeMap::new();
        for c in &clusters {
            let kb = random_nonzero::<8>(net.rng());
            registry.register_base_station(c.bs, kb);
            stations.insert(c.bs, BaseStationState::new(c.bs, kb, c.refresh_period, cipher));
            for &m in &c.motes {
                let creds = registry
                    .provision_mote(net.rng())
                    .map_err(|e| ScenarioError::Invalid { field: "clusters".into(), msg: e.to_string() })?;
                motes.insert(m, Mote::new(m, c.bs, creds, cipher));
            }
        }

        let keys: Vec<(EntityId, [u8; 8])> = stations.iter().map(|(id, s)| (*id, *s.base_key())).collect();
        for st in stations.values_mut() {
            for &(peer, kb) in &keys {
                if peer != st.cluster() {
                    st.add_peer(peer, kb);
                }
            }
            for c in &clusters {
                for &m in &c.motes {
                    st.locate(m, c.bs);
                }
            }
        }

        let mote_bs = link(&config.links.mote_bs)?;
        let bs_cs = link(&config.links.bs_cs)?;
        let bs_bs = link(&config.links.bs_bs)?;
        let bs_backup = link(&config.links.bs_backup)?;
        let mut backups = BTreeMap::new();
        for c in &clusters {
            net.add_duplex(c.bs, CENTRAL_SERVER, bs_cs);
            for &m in &c.motes {
                net.add_duplex(m, c.bs, mote_bs);
            }
            for other in &clusters {
                if other.bs != c.bs {
                    net.add_link(c.bs, other.bs, bs_bs);
                }
            }
            if let Some(b) = c.backup {
                let replica = BaseStationState::new_backup(b, &stations[&c.bs]);
                stations.get_mut(&c.bs).expect("principal exists").set_backup(Some(b));
                stations.insert(b, replica);
                backups.insert(c.bs, b);
                net.add_duplex(c.bs, b, bs_backup);
                net.add_duplex(CENTRAL_SERVER, b, bs_cs);
            }
        }
        if let Some(adv) = &config.adversary {
            if adv.mode == AdversaryMode::RogueMote {
                let (rogue, bs) = adv.links[0];
                net.add_duplex(rogue, bs, mote_bs);
            }
            net.attach_adversary(adv.clone()).map_err(|e| ScenarioError::Invalid {
                field: "adversary".into(),
                msg: e.to_string(),
            })?;
        }

        let mut refresh_periods = BTreeMap::new();
        for c in &clusters {
            for &m in &c.motes {
                net.schedule_timer(c.join_time, Timer::Join(m));
            }
            refresh_periods.insert(c.bs, c.refresh_period);
            if c.refresh_period > 0 && c.refresh_period <= config.horizon {
                net.schedule_timer(c.refresh_period, Timer::Refresh(c.bs));
            }
        }
        for (i, t) in config.traffic.iter().enumerate() {
            net.schedule_timer(t.time, Timer::Traffic(i));
        }
        for f in &config.bs_failures {
            net.schedule_timer(f.time, Timer::BsFailure(EntityId(f.bs)));
        }
        for (i, f) in config.mote_failures.iter().enumerate() {
            net.schedule_timer(f.time, Timer::MoteFailure(i));
        }

        let world = Self {
            cipher,
            allow_reuse: config.flags.allow_credential_reuse,
            horizon: config.horizon,
            registry,
            serving: clusters.iter().map(|c| (c.bs, c.bs)).collect(),
            stations,
            backups,
            refresh_periods,
            down: BTreeSet::new(),
            motes,
            traffic: config.traffic.clone(),
            mote_failures: config.mote_failures.clone(),
            sent: BTreeMap::new(),
            session_keys: BTreeMap::new(),
            received: BTreeSet::new(),
            tainted_msgs: BTreeSet::new(),
            tainted_motes: BTreeSet::new(),
            violations: Vec::new(),
        };
        let ids: Vec<EntityId> = world.motes.keys().copied().collect();
        for m in ids {
            world.footprint(net, m);
        }
        Ok(world)
    }

    pub fn motes(&self) -> &BTreeMap<EntityId, Mote> {
        &self.motes
    }

    pub fn mote(&self, id: EntityId) -> Option<&Mote> {
        self.motes.get(&id)
    }

    /// Station by device id.
    pub fn station(&self, device: EntityId) -> Option<&BaseStationState> {
        self.stations.get(&device)
    }

    /// Station currently acting for `cluster`.
    pub fn serving(&self, cluster: EntityId) -> Option<&BaseStationState> {
        self.serving.get(&cluster).and_then(|d| self.stations.get(d))
    }

    pub fn registry(&self) -> &CentralServerRegistry {
        &self.registry
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    /// Plaintext the oracle recorded for message `origin:ts`.
    pub fn sent_payload(&self, msg: &str) -> Option<&[u8]> {
        self.sent.get(msg).map(Vec::as_slice)
    }

    fn key_event(net: &mut Network<Timer>, outcome: &str, src: EntityId, dst: Option<EntityId>) -> TraceEvent {
        TraceEvent::new(net.now(), TraceKind::KeyEvent, outcome).with_actors(Some(src), dst)
    }

    fn footprint(&self, net: &mut Network<Timer>, mote: EntityId) {
        let bytes = self.motes[&mote].stored_key_bytes();
        let e = Self::key_event(net, "footprint", mote, None).with_value(bytes as u64);
        net.record(e);
    }

    fn violation(&mut self, net: &mut Network<Timer>, msg: String) {
        net.record(TraceEvent::new(net.now(), TraceKind::KeyEvent, "invariant_violation").with_cause(msg.clone()));
        self.violations.push(msg);
    }

    fn reject(net: &mut Network<Timer>, env: &Envelope, cause: &str) {
        net.record(
            TraceEvent::new(net.now(), TraceKind::Reject, "rejected")
                .with_envelope(env)
                .with_cause(cause),
        );
    }

    fn send(&mut self, net: &mut Network<Timer>, env: Envelope) {
        if let Some(what) = self.leak(&env) {
            self.violation(
                net,
                format!("{what} visible in {} from {} to {}", env.kind().name(), env.src, env.dst),
            );
        }
        if let Err(e) = net.schedule_send(env) {
            self.violation(net, format!("send failed: {e}"));
        }
    }

    /// Looks for key material in the encoded body of an outgoing envelope.
    fn leak(&self, env: &Envelope) -> Option<String> {
        let body = env.body.encode();
        let contains = |s: &[u8]| !is_zero(s) && body.windows(s.len()).any(|w| w == s);
        for st in self.stations.values() {
            if contains(st.base_key()) {
                return Some(format!("base key of {}", st.cluster()));
            }
            for (m, k) in st.mote_table() {
                if contains(k) || st.pending_refresh(*m).is_some_and(|p| contains(p)) {
                    return Some(format!("operating key of {m}"));
                }
            }
        }
        if let Some(key) = env.message_id().and_then(|id| self.session_keys.get(&id)) {
            if contains(key) {
                return Some("session key".into());
            }
        }
        for id in [env.src, env.dst] {
            if let Some(mote) = self.motes.get(&id) {
                let creds = mote.credentials();
                if contains(&creds.k_s2()) || contains(&creds.k) {
                    return Some(format!("credentials of {id}"));
                }
                if mote.operating_key().is_some_and(|k| contains(k)) {
                    return Some(format!("operating key of {id}"));
                }
            }
        }
        None
    }

    fn check_agreement(&mut self, net: &mut Network<Timer>, mote: EntityId) {
        if self.tainted_motes.contains(&mote) {
            return;
        }
        let m = &self.motes[&mote];
        let Some(st) = self.serving(m.base_station()) else { return };
        let agree = m.base_key() == Some(st.base_key()) && m.operating_key() == st.mote_table().get(&mote);
        if !agree {
            self.violation(net, format!("key disagreement for mote {mote}"));
        }
    }

    fn on_mote(&mut self, net: &mut Network<Timer>, env: Envelope, altered: bool) {
        let id = env.dst;
        let mote = self.motes.get_mut(&id).expect("mote exists");
        match &env.body {
            Body::KeyAssign { a, b } => {
                match mote.derive_keys(a, b) {
                    Ok(()) => {
                        let bs = mote.base_station();
                        if altered {
                            self.tainted_motes.insert(id);
                        } else {
                            self.tainted_motes.remove(&id);
                        }
                        let e = Self::key_event(net, "operational", id, Some(bs));
                        net.record(e);
                        self.footprint(net, id);
                        self.check_agreement(net, id);
                    }
                    Err(e) => Self::reject(net, &env, e.cause()),
                }
            }
            Body::Data(d) => {
                let msg = d.message_id();
                if altered {
                    self.tainted_msgs.insert(msg.clone());
                }
                match mote.receive_data(d) {
                    Ok(frame) => {
                        if !self.received.insert(msg.clone()) {
                            self.violation(net, format!("message {msg} accepted twice"));
                        }
                        let ev = |net: &mut Network<Timer>, outcome| {
                            Self::key_event(net, outcome, d.origin, Some(id)).with_msg(Some(msg.clone()))
                        };
                        if self.sent.get(&msg) == Some(&frame.payload) {
                            let e = ev(net, "data_received");
                            net.record(e);
                        } else if self.tainted_msgs.contains(&msg) {
                            let e = ev(net, "corrupted");
                            net.record(e);
                        } else {
                            self.violation(net, format!("payload mismatch for message {msg}"));
                        }
                    }
                    Err(e) => Self::reject(net, &env, e.cause()),
                }
            }
            Body::Refresh { m2 } => {
                if altered {
                    self.tainted_motes.insert(id);
                }
                match mote.apply_refresh(m2) {
                    Ok(ack) => {
                        let e = Self::key_event(net, "refresh_applied", id, Some(env.src));
                        net.record(e);
                        self.footprint(net, id);
                        self.send(net, ack);
                    }
                    Err(e) => Self::reject(net, &env, e.cause()),
                }
            }
            _ => Self::reject(net, &env, "unexpected_kind"),
        }
    }

    fn on_central(&mut self, net: &mut Network<Timer>, env: Envelope) {
        let Body::AuthQuery { s1 } = env.body else {
            return Self::reject(net, &env, "unexpected_kind");
        };
        match self.registry.authenticate(&self.cipher, env.src, s1, self.allow_reuse) {
            Ok(reply) => self.send(net, reply),
            Err(e) => Self::reject(net, &env, e.cause()),
        }
    }

    fn opacity_problem(inbound: &DataBody, out: &Envelope) -> Option<String> {
        let same = match &out.body {
            Body::Data(d) | Body::InterForward(d) => d.ciphertext == inbound.ciphertext,
            _ => false,
        };
        (!same).then(|| format!("relay altered ciphertext of {}", inbound.message_id()))
    }

    fn on_station(&mut self, net: &mut Network<Timer>, env: Envelope, altered: bool) {
        let device = self.serving.get(&env.dst).copied().unwrap_or(env.dst);
        let Some(st) = self.stations.get_mut(&device) else {
            return Self::reject(net, &env, "unknown_destination");
        };
        let cluster = st.cluster();
        let mut problems = Vec::new();
        let result: Result<Vec<Envelope>, ProtocolError> = match &env.body {
            Body::JoinRequest { s1 } => st.on_join_request(env.src, *s1).map(|q| vec![q]),
            Body::AuthGrant { s1, p } => {
                if altered {
                    if let Some(m) = st.pending_join(s1) {
                        self.tainted_motes.insert(m);
                    }
                }
                st.process_auth_grant(*s1, p, net.rng()).map(|a| {
                    let e = Self::key_event(net, "key_assigned", cluster, Some(a.mote));
                    net.record(e);
                    std::iter::once(a.key_assign).chain(a.sync).collect()
                })
            }
            Body::AuthDeny { s1 } => match st.process_auth_deny(*s1) {
                Ok(m) => {
                    net.record(
                        TraceEvent::new(net.now(), TraceKind::Reject, "rejected")
                            .with_envelope(&env)
                            .with_actors(Some(m), Some(cluster))
                            .with_cause("auth_denied"),
                    );
                    Ok(Vec::new())
                }
                Err(e) => Err(e),
            },
            Body::Data(d) | Body::InterForward(d) => {
                if altered {
                    self.tainted_msgs.insert(d.message_id());
                }
                let out = if matches!(env.body, Body::Data(_)) {
                    st.relay(env.src, d)
                } else {
                    st.on_inter_forward(env.src, d)
                };
                if let Ok(out) = &out {
                    problems.extend(Self::opacity_problem(d, out));
                }
                out.map(|o| vec![o])
            }
            Body::RefreshAck { proof } => {
                if altered {
                    self.tainted_motes.insert(env.src);
                }
                let old = st.mote_table().get(&env.src).copied();
                match st.on_refresh_ack(env.src, proof) {
                    Ok(sync) => {
                        let round = st.refresh_round();
                        let fresh = st.mote_table().get(&env.src).copied();
                        let e = Self::key_event(net, "refresh_completed", cluster, Some(env.src)).with_value(round);
                        net.record(e);
                        if fresh == old {
                            problems.push(format!("refresh left key of {} unchanged", env.src));
                        }
                        let mote_key = self.motes.get(&env.src).and_then(|m| m.operating_key().copied());
                        if !self.tainted_motes.contains(&env.src) && mote_key != fresh {
                            problems.push(format!("refreshed keys disagree for {}", env.src));
                        }
                        Ok(sync.into_iter().collect())
                    }
                    Err(e) => Err(e),
                }
            }
            Body::FailoverSync { mote, wrapped } => {
                if altered {
                    self.tainted_motes.insert(*mote);
                }
                st.on_failover_sync(env.src, *mote, wrapped).map(|()| Vec::new())
            }
            Body::Promote { principal } => {
                let r = st.mark_principal_failed(*principal).and_then(|()| st.promote());
                if r.is_ok() {
                    self.serving.insert(cluster, device);
                    let e = Self::key_event(net, "promoted", device, Some(cluster));
                    net.record(e);
                }
                r.map(|()| Vec::new())
            }
            _ => return Self::reject(net, &env, "unexpected_kind"),
        };
        for p in problems {
            self.violation(net, p);
        }
        match result {
            Ok(out) => {
                for o in out {
                    self.send(net, o);
                }
            }
            Err(e) => Self::reject(net, &env, e.cause()),
        }
    }

    fn on_traffic(&mut self, net: &mut Network<Timer>, i: usize) {
        let item = self.traffic[i].clone();
        let (src, dst) = (EntityId(item.src), EntityId(item.dst));
        let payload = match (&item.payload_hex, item.payload_len) {
            (Some(h), _) => hex::decode(h).expect("validated hex"),
            (None, n) => {
                let mut p = vec![0u8; n.unwrap_or(0)];
                net.rng().fill(&mut p[..]);
                p
            }
        };
        let mote = self.motes.get_mut(&src).expect("validated mote");
        match mote.send_data(dst, &payload, net.rng()) {
            Ok(out) => {
                let msg = out.envelope.message_id().expect("data has an id");
                let e = Self::key_event(net, "data_sent", src, Some(dst))
                    .with_msg(Some(msg.clone()))
                    .with_value(payload.len() as u64);
                net.record(e);
                self.sent.insert(msg.clone(), payload);
                self.session_keys.insert(msg, out.session_key);
                self.send(net, out.envelope);
            }
            Err(e) => net.record(
                TraceEvent::new(net.now(), TraceKind::Reject, "rejected")
                    .with_actors(Some(src), Some(dst))
                    .with_cause(e.cause()),
            ),
        }
    }

    fn on_refresh(&mut self, net: &mut Network<Timer>, cluster: EntityId) {
        let period = self.refresh_periods[&cluster];
        let next = net.now() + period;
        if next <= self.horizon {
            net.schedule_timer(next, Timer::Refresh(cluster));
        }
        let device = self.serving[&cluster];
        if self.down.contains(&device) {
            return;
        }
        let st = self.stations.get_mut(&device).expect("serving station exists");
        let round = st.next_refresh_round();
        let mut out = Vec::new();
        let targets: Vec<EntityId> = st.mote_table().keys().copied().collect();
        for m in targets {
            match st.begin_refresh(m, net.rng()) {
                Ok((env, abandoned)) => {
                    if abandoned {
                        net.record(
                            TraceEvent::new(net.now(), TraceKind::Reject, "rejected")
                                .with_actors(Some(cluster), Some(m))
                                .with_cause("refresh_unacknowledged"),
                        );
                    }
                    out.push(env);
                }
                Err(e) => net.record(
                    TraceEvent::new(net.now(), TraceKind::Reject, "rejected")
                        .with_actors(Some(cluster), Some(m))
                        .with_cause(e.cause()),
                ),
            }
        }
        let e = Self::key_event(net, "refresh_round", cluster, None)
            .with_value(round);
        net.record(e);
        for env in out {
            let e = Self::key_event(net, "refresh_issued", cluster, Some(env.dst)).with_value(round);
            net.record(e);
            self.send(net, env);
        }
    }

    fn on_join(&mut self, net: &mut Network<Timer>, id: EntityId) {
        let mote = self.motes.get_mut(&id).expect("mote exists");
        match mote.join_request() {
            Ok(env) => {
                let e = Self::key_event(net, "join_requested", id, Some(env.dst));
                net.record(e);
                self.send(net, env);
            }
            Err(e) => net.record(
                TraceEvent::new(net.now(), TraceKind::Reject, "rejected")
                    .with_actors(Some(id), None)
                    .with_cause(e.cause()),
            ),
        }
    }

    /// Final invariant: an intact backup mirrors its principal's key table.
    pub(crate) fn check_replicas(&mut self, net: &mut Network<Timer>, replication_clean: bool) {
        if !replication_clean {
            return;
        }
        let pairs: Vec<(EntityId, EntityId)> = self.backups.iter().map(|(p, b)| (*p, *b)).collect();
        for (principal, backup) in pairs {
            if self.down.contains(&principal) || self.serving[&principal] != principal {
                continue;
            }
            if self.stations[&principal].mote_table() != self.stations[&backup].mote_table() {
                self.violation(net, format!("backup {backup} diverged from {principal}"));
            }
        }
    }
}

impl World for SimWorld {
    type Timer = Timer;

    fn presence(&self, id: EntityId) -> Presence {
        if id == CENTRAL_SERVER {
            return Presence::Up;
        }
        let device = self.serving.get(&id).copied().unwrap_or(id);
        if !self.motes.contains_key(&id) && !self.stations.contains_key(&device) {
            Presence::Unknown
        } else if self.down.contains(&device) {
            Presence::Down
        } else {
            Presence::Up
        }
    }

    fn on_deliver(&mut self, net: &mut Network<Timer>, env: Envelope) {
        let altered = net.delivery_altered();
        if env.dst == CENTRAL_SERVER {
            self.on_central(net, env);
        } else if self.motes.contains_key(&env.dst) {
            self.on_mote(net, env, altered);
        } else {
            self.on_station(net, env, altered);
        }
    }

    fn on_timer(&mut self, net: &mut Network<Timer>, timer: Timer) {
        match timer {
            Timer::Join(m) => self.on_join(net, m),
            Timer::Traffic(i) => self.on_traffic(net, i),
            Timer::Refresh(c) => self.on_refresh(net, c),
            Timer::BsFailure(bs) => {
                self.down.insert(bs);
                let e = Self::key_event(net, "bs_failed", bs, None);
                net.record(e);
                if let Some(&backup) = self.backups.get(&bs) {
                    self.send(net, Envelope::new(CENTRAL_SERVER, backup, Body::Promote { principal: bs }));
                }
            }
            Timer::MoteFailure(i) => {
                let f = self.mote_failures[i].clone();
                let id = EntityId(f.mote);
                self.motes.get_mut(&id).expect("validated mote").fail();
                self.down.insert(id);
                let e = Self::key_event(net, "mote_failed", id, None);
                net.record(e);
                self.footprint(net, id);
                if let Some(after) = f.recover_after {
                    let at = net.now() + after;
                    if at <= self.horizon {
                        net.schedule_timer(at, Timer::MoteRecover(id));
                    }
                }
            }
            Timer::MoteRecover(id) => {
                self.down.remove(&id);
                if !self.allow_reuse {
                    match self.registry.provision_mote(net.rng()) {
                        Ok(creds) => {
                            let mote = self.motes.get_mut(&id).expect("mote exists");
                            if let Err(e) = mote.reprovision(creds) {
                                self.violation(net, format!("reprovisioning {id}: {e}"));
                            }
                        }
                        Err(e) => self.violation(net, format!("reprovisioning {id}: {e}")),
                    }
                }
                let e = Self::key_event(net, "mote_recovered", id, None);
                net.record(e);
                self.footprint(net, id);
                self.on_join(net, id);
            }
        }
    }
}

/// A world plus its network, advanced together.
pub struct Simulation {
    horizon: Time,
    replication_clean: bool,
    net: Network<Timer>,
    world: SimWorld,
    finished: bool,
}

impl Simulation {
    pub fn new(config: &ScenarioConfig) -> Result<Self, ScenarioError> {
        let mut net = Network::new(config.seed);
        let world = SimWorld::setup(config, &mut net)?;
        Ok(Self {
            horizon: config.horizon,
            replication_clean: config.links.bs_backup.drop == 0.0 && config.adversary.is_none(),
            net,
            world,
            finished: false,
        })
    }

    pub fn horizon(&self) -> Time {
        self.horizon
    }

    pub fn now(&self) -> Time {
        self.net.now()
    }

    pub fn world(&self) -> &SimWorld {
        &self.world
    }

    pub fn network(&self) -> &Network<Timer> {
        &self.net
    }

    pub fn trace(&self) -> &[TraceEvent] {
        self.net.trace()
    }

    /// Processes events due at or before `t`, capped at the horizon.
    pub fn run_until(&mut self, t: Time) {
        assert!(!self.finished, "simulation already finished");
        self.net.run_until(&mut self.world, t.min(self.horizon));
    }

    /// Runs to the horizon, closes out in-flight envelopes and applies the
    /// end-of-run checks. Idempotent.
    pub fn finish(&mut self) {
        if self.finished {
            return;
        }
        self.net.run_until(&mut self.world, self.horizon);
        self.net.finish(self.horizon);
        let clean = self.replication_clean
            && !self.net.trace().iter().any(|e| {
                e.kind == TraceKind::Drop && e.envelope.as_ref().is_some_and(|s| s.kind == "failover_sync")
            });
        self.world.check_replicas(&mut self.net, clean);
        self.finished = true;
    }

    pub fn into_trace(mut self) -> Vec<TraceEvent> {
        self.finish();
        self.net.into_trace()
    }
}

/// Bytes of persistent key material per mote.
pub const KEY_RECORD_BYTES: usize = KeyMaterial::BYTES;
