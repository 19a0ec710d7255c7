use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::protocol::{random_nonzero, Body, DataBody, EntityId, Envelope};

use super::adversary::{field_range, Adversary, AdversaryHandle, AdversaryMode, AdversaryScript, RogueAction};
use super::trace::{TraceEvent, TraceKind};
use super::{NetError, Time};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkModel {
    pub delay: Time,
    pub drop_probability: f64,
}

impl LinkModel {
    pub fn new(delay: Time, drop_probability: f64) -> Result<Self, NetError> {
        if !(0.0..=1.0).contains(&drop_probability) {
            return Err(NetError::BadDropProbability(drop_probability));
        }
        Ok(Self {
            delay,
            drop_probability,
        })
    }

    pub fn reliable(delay: Time) -> Self {
        Self {
            delay,
            drop_probability: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub enum EventPayload<T> {
    /// `injected_by` marks traffic an adversary put on the link itself.
    Deliver {
        env: Envelope,
        injected_by: Option<AdversaryHandle>,
    },
    Timer(T),
    AdversaryTrigger(AdversaryHandle),
}

#[derive(Clone, Debug)]
pub struct Event<T> {
    pub time: Time,
    pub seq: u64,
    pub payload: EventPayload<T>,
}

impl<T> PartialEq for Event<T> {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl<T> Eq for Event<T> {}

impl<T> PartialOrd for Event<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Event<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Presence {
    Up,
    /// Known but failed; traffic to it is dropped.
    Down,
    Unknown,
}

/// Entities reachable through the network.
pub trait World {
    type Timer: Clone + std::fmt::Debug;

    fn presence(&self, id: EntityId) -> Presence;

    fn on_deliver(&mut self, net: &mut Network<Self::Timer>, env: Envelope);

    fn on_timer(&mut self, net: &mut Network<Self::Timer>, timer: Self::Timer);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SendOutcome {
    Scheduled { at: Time, seq: u64 },
    Dropped,
}

/// Discrete-event network: a time-ordered queue, per-link delay and loss, a
/// seeded RNG shared with the entities, adversary hooks and the trace.
///
/// RNG draw order: one `f64` per send on a lossy link (drop probability
/// strictly between 0 and 1), one bit index per tamper without a fixed bit,
/// and rogue injection bytes; entities draw their own keys through
/// [`Network::rng`] while handling events.
pub struct Network<T> {
    queue: BinaryHeap<Reverse<Event<T>>>,
    next_seq: u64,
    now: Time,
    links: BTreeMap<(EntityId, EntityId), LinkModel>,
    adversaries: Vec<Adversary>,
    trace: Vec<TraceEvent>,
    rng: ChaCha8Rng,
    altered: bool,
}

impl<T: Clone + std::fmt::Debug> Network<T> {
    pub fn new(seed: u64) -> Self {
        Self {
            queue: BinaryHeap::new(),
            next_seq: 0,
            now: 0,
            links: BTreeMap::new(),
            adversaries: Vec::new(),
            trace: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            altered: false,
        }
    }

    pub fn now(&self) -> Time {
        self.now
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn add_link(&mut self, src: EntityId, dst: EntityId, model: LinkModel) {
        self.links.insert((src, dst), model);
    }

    pub fn add_duplex(&mut self, a: EntityId, b: EntityId, model: LinkModel) {
        self.add_link(a, b, model);
        self.add_link(b, a, model);
    }

    pub fn link(&self, src: EntityId, dst: EntityId) -> Option<&LinkModel> {
        self.links.get(&(src, dst))
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn into_trace(self) -> Vec<TraceEvent> {
        self.trace
    }

    pub fn record(&mut self, event: TraceEvent) {
        self.trace.push(event);
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn peek_time(&self) -> Option<Time> {
        self.queue.peek().map(|Reverse(e)| e.time)
    }

    fn push(&mut self, time: Time, payload: EventPayload<T>) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Event { time, seq, payload }));
        seq
    }

    /// Queues `env` on its link, or drops it by the link's loss draw.
    pub fn schedule_send(&mut self, env: Envelope) -> Result<SendOutcome, NetError> {
        self.send_tagged(env, None)
    }

    fn send_tagged(
        &mut self,
        env: Envelope,
        injected_by: Option<AdversaryHandle>,
    ) -> Result<SendOutcome, NetError> {
        let model = *self
            .links
            .get(&(env.src, env.dst))
            .ok_or(NetError::UnknownLink(env.src, env.dst))?;
        self.trace
            .push(TraceEvent::new(self.now, TraceKind::Send, "sent").with_envelope(&env));
        let p = model.drop_probability;
        let dropped = p >= 1.0 || (p > 0.0 && self.rng.gen::<f64>() < p);
        if dropped {
            self.trace.push(
                TraceEvent::new(self.now, TraceKind::Drop, "dropped")
                    .with_envelope(&env)
                    .with_cause("link_loss"),
            );
            return Ok(SendOutcome::Dropped);
        }
        let at = self.now + model.delay;
        let seq = self.push(at, EventPayload::Deliver { env, injected_by });
        Ok(SendOutcome::Scheduled { at, seq })
    }

    pub fn schedule_timer(&mut self, at: Time, timer: T) -> u64 {
        self.push(at.max(self.now), EventPayload::Timer(timer))
    }

    pub fn attach_adversary(&mut self, script: AdversaryScript) -> Result<AdversaryHandle, NetError> {
        for &(a, b) in &script.links {
            if !self.links.contains_key(&(a, b)) {
                return Err(NetError::UnknownLink(a, b));
            }
        }
        if script.mode == AdversaryMode::RogueMote && script.links.is_empty() {
            return Err(NetError::Adversary("rogue mote needs an injection link".into()));
        }
        let handle = AdversaryHandle(self.adversaries.len());
        if matches!(script.mode, AdversaryMode::Replay | AdversaryMode::RogueMote) {
            for &t in &script.triggers {
                self.push(t, EventPayload::AdversaryTrigger(handle));
            }
        }
        self.adversaries.push(Adversary::new(script));
        Ok(handle)
    }

    /// Whether the envelope being delivered right now was tampered with or
    /// injected by an adversary. Only meaningful inside `on_deliver`.
    pub fn delivery_altered(&self) -> bool {
        self.altered
    }

    /// Envelopes the adversary has copied so far, in capture order.
    pub fn captured(&self, handle: AdversaryHandle) -> &[Envelope] {
        &self.adversaries[handle.0].log
    }

    /// Processes the earliest event. Returns its time, or `None` when the
    /// queue is empty.
    pub fn step<W: World<Timer = T>>(&mut self, world: &mut W) -> Option<Time> {
        let Reverse(event) = self.queue.pop()?;
        debug_assert!(event.time >= self.now);
        self.now = event.time;
        match event.payload {
            EventPayload::Deliver { env, injected_by } => {
                let before = self.trace.len();
                let env = self.intercept(env, injected_by);
                self.altered = injected_by.is_some()
                    || self.trace[before..].iter().any(|e| e.outcome == "tampered");
                match world.presence(env.dst) {
                    Presence::Up => {
                        self.trace.push(
                            TraceEvent::new(self.now, TraceKind::Deliver, "delivered").with_envelope(&env),
                        );
                        world.on_deliver(self, env);
                    }
                    Presence::Down => self.trace.push(
                        TraceEvent::new(self.now, TraceKind::Drop, "dropped")
                            .with_envelope(&env)
                            .with_cause("node_down"),
                    ),
                    Presence::Unknown => self.trace.push(
                        TraceEvent::new(self.now, TraceKind::Reject, "rejected")
                            .with_envelope(&env)
                            .with_cause("unknown_destination"),
                    ),
                }
            }
            EventPayload::Timer(t) => world.on_timer(self, t),
            EventPayload::AdversaryTrigger(h) => self.fire(h),
        }
        Some(self.now)
    }

    /// Steps every event due at or before `horizon`.
    pub fn run_until<W: World<Timer = T>>(&mut self, world: &mut W, horizon: Time) {
        while self.peek_time().is_some_and(|t| t <= horizon) {
            self.step(world);
        }
    }

    /// Ends the run: envelopes still in flight are traced as dropped at
    /// `horizon`; pending timers and triggers are discarded.
    pub fn finish(&mut self, horizon: Time) {
        let mut rest: Vec<_> = std::mem::take(&mut self.queue).into_iter().map(|Reverse(e)| e).collect();
        rest.sort();
        self.now = self.now.max(horizon);
        for e in rest {
            if let EventPayload::Deliver { env, .. } = e.payload {
                self.trace.push(
                    TraceEvent::new(self.now, TraceKind::Drop, "dropped")
                        .with_envelope(&env)
                        .with_cause("horizon"),
                );
            }
        }
    }

    fn intercept(&mut self, mut env: Envelope, injected_by: Option<AdversaryHandle>) -> Envelope {
        let link = (env.src, env.dst);
        for i in 0..self.adversaries.len() {
            if injected_by == Some(AdversaryHandle(i))
                || !self.adversaries[i].watches(link) || !self.adversaries[i].script.matches_kind(env.kind()) {
                continue;
            }
            match self.adversaries[i].script.mode {
                AdversaryMode::Eavesdrop | AdversaryMode::Replay => {
                    let adv = &mut self.adversaries[i];
                    adv.log.push(env.clone());
                    if adv.script.mode == AdversaryMode::Replay {
                        adv.captured.push_back(env.clone());
                    }
                    self.trace.push(
                        TraceEvent::new(self.now, TraceKind::AdversaryAction, "captured")
                            .with_envelope(&env)
                            .with_cause(format!("{:?}", adv.script.mode).to_lowercase()),
                    );
                }
                AdversaryMode::Tamper => {
                    if let Some(t) = self.tamper(i, &env) {
                        env = t;
                    }
                }
                AdversaryMode::RogueMote => {}
            }
        }
        env
    }

    fn tamper(&mut self, i: usize, env: &Envelope) -> Option<Envelope> {
        let adv = &self.adversaries[i];
        if adv.script.max_actions.is_some_and(|m| adv.actions >= m) {
            return None;
        }
        let (field, fixed_bit) = (adv.script.field, adv.script.bit);
        let mut body = env.body.encode();
        let range = field_range(env.kind(), field, body.len())?;
        let nbits = range.len() * 8;
        let bit = match fixed_bit {
            Some(b) => b % nbits,
            None => self.rng.gen_range(0..nbits),
        };
        body[range.start + bit / 8] ^= 0x80 >> (bit % 8);
        let tampered = Envelope::new(env.src, env.dst, Body::decode(env.kind(), &body).ok()?);
        self.adversaries[i].actions += 1;
        self.trace.push(
            TraceEvent::new(self.now, TraceKind::AdversaryAction, "tampered")
                .with_envelope(&tampered)
                .with_msg(env.message_id())
                .with_cause(format!("{field:?}:{bit}").to_lowercase()),
        );
        Some(tampered)
    }

    fn fire(&mut self, handle: AdversaryHandle) {
        let mode = self.adversaries[handle.0].script.mode;
        match mode {
            AdversaryMode::Replay => match self.adversaries[handle.0].captured.pop_front() {
                Some(env) => {
                    self.adversaries[handle.0].actions += 1;
                    self.trace.push(
                        TraceEvent::new(self.now, TraceKind::AdversaryAction, "replayed").with_envelope(&env),
                    );
                    // the link was configured when the envelope was captured
                    let _ = self.send_tagged(env, Some(handle));
                }
                None => self.trace.push(
                    TraceEvent::new(self.now, TraceKind::AdversaryAction, "noop")
                        .with_cause("nothing_captured"),
                ),
            },
            AdversaryMode::RogueMote => {
                let script = self.adversaries[handle.0].script.clone();
                let (rogue, bs) = script.links[0];
                let body = match script.rogue_action {
                    RogueAction::Join => Body::JoinRequest {
                        s1: random_nonzero::<3>(&mut self.rng),
                    },
                    RogueAction::Data => {
                        let mut ciphertext = vec![0u8; 16];
                        self.rng.fill(&mut ciphertext[..]);
                        Body::Data(DataBody {
                            origin: rogue,
                            target: script.rogue_target.unwrap_or(bs),
                            ts: self.adversaries[handle.0].actions as u32,
                            wrapped_key: random_nonzero::<8>(&mut self.rng),
                            ciphertext,
                        })
                    }
                };
                let env = Envelope::new(rogue, bs, body);
                self.adversaries[handle.0].actions += 1;
                self.trace.push(
                    TraceEvent::new(self.now, TraceKind::AdversaryAction, "injected").with_envelope(&env),
                );
                let _ = self.send_tagged(env, Some(handle));
            }
            AdversaryMode::Eavesdrop | AdversaryMode::Tamper => {}
        }
    }
}
