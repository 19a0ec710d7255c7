//! Deterministic discrete-event network simulator.
//!
//! Time is an integer count of simulated units. Events are processed in
//! `(time, seq)` order, where `seq` increases with every insertion, so
//! envelopes sent on one link with equal delay arrive in FIFO order and a
//! run is a pure function of its inputs and seed.

mod adversary;
mod network;
mod trace;

pub use adversary::{AdversaryHandle, AdversaryMode, AdversaryScript, RogueAction, TamperField};
pub use network::{Event, EventPayload, LinkModel, Network, Presence, SendOutcome, World};
pub use trace::{EnvelopeSummary, TraceEvent, TraceKind, TRACE_SCHEMA, TRACE_SCHEMA_VERSION};

use crate::protocol::EntityId;

pub type Time = u64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("no link configured from {0} to {1}")]
    UnknownLink(EntityId, EntityId),
    #[error("drop probability {0} outside [0, 1]")]
    BadDropProbability(f64),
    #[error("adversary script: {0}")]
    Adversary(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{Body, DataBody, Envelope, Kind};

    const A: EntityId = EntityId(1);
    const B: EntityId = EntityId(2);

    /// Records what it receives; optionally bounces data back once.
    #[derive(Default)]
    struct Sink {
        got: Vec<(Time, Envelope)>,
        down: Vec<EntityId>,
        bounce: bool,
        timers: Vec<(Time, u32)>,
    }

    impl World for Sink {
        type Timer = u32;

        fn presence(&self, id: EntityId) -> Presence {
            if self.down.contains(&id) {
                Presence::Down
            } else if id == A || id == B {
                Presence::Up
            } else {
                Presence::Unknown
            }
        }

        fn on_deliver(&mut self, net: &mut Network<u32>, env: Envelope) {
            if self.bounce && env.dst == B {
                net.schedule_send(Envelope::new(B, A, env.body.clone())).unwrap();
            }
            self.got.push((net.now(), env));
        }

        fn on_timer(&mut self, net: &mut Network<u32>, timer: u32) {
            self.timers.push((net.now(), timer));
        }
    }

    fn data(ts: u32) -> Envelope {
        Envelope::new(
            A,
            B,
            Body::Data(DataBody {
                origin: A,
                target: B,
                ts,
                wrapped_key: [ts as u8; 8],
                ciphertext: vec![0x55; 10],
            }),
        )
    }

    fn net(delay: Time, drop: f64, seed: u64) -> Network<u32> {
        let mut n = Network::new(seed);
        n.add_duplex(A, B, LinkModel::new(delay, drop).unwrap());
        n
    }

    fn count(net: &Network<u32>, kind: TraceKind) -> usize {
        net.trace().iter().filter(|e| e.kind == kind).count()
    }

    #[test]
    fn unknown_link_is_config_error() {
        let mut n: Network<u32> = Network::new(0);
        assert_eq!(n.schedule_send(data(0)), Err(NetError::UnknownLink(A, B)));
        assert!(LinkModel::new(1, 1.5).is_err());
    }

    #[test]
    fn lossless_and_total_loss() {
        for (p, expect) in [(0.0, 1000), (1.0, 0)] {
            let mut n = net(3, p, 1);
            let mut w = Sink::default();
            for i in 0..1000 {
                n.schedule_send(data(i)).unwrap();
            }
            n.run_until(&mut w, 1000);
            assert_eq!(w.got.len(), expect);
            assert_eq!(count(&n, TraceKind::Send), 1000);
            assert_eq!(count(&n, TraceKind::Deliver) + count(&n, TraceKind::Drop), 1000);
        }
    }

    #[test]
    fn drop_pattern_reproducible() {
        let pattern = |seed| {
            let mut n = net(1, 0.3, seed);
            (0..500).map(|i| n.schedule_send(data(i)).unwrap() == SendOutcome::Dropped).collect::<Vec<_>>()
        };
        let a = pattern(42);
        assert_eq!(a, pattern(42));
        let dropped = a.iter().filter(|d| **d).count();
        assert!((100..200).contains(&dropped), "dropped {dropped}");
        assert_ne!(a, pattern(43));
    }

    #[test]
    fn equal_times_deliver_in_insertion_order() {
        let mut n = net(5, 0.0, 0);
        let mut w = Sink::default();
        for i in 0..20 {
            n.schedule_send(data(i)).unwrap();
        }
        n.schedule_timer(5, 7);
        n.run_until(&mut w, 100);
        let ts: Vec<u32> = w.got.iter().map(|(_, e)| match &e.body { Body::Data(d) => d.ts, _ => 0 }).collect();
        assert_eq!(ts, (0..20).collect::<Vec<_>>());
        assert_eq!(w.timers, vec![(5, 7)]);
        let times: Vec<Time> = n.trace().iter().map(|e| e.time).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn empty_queue_refuses_step() {
        let mut n = net(1, 0.0, 0);
        assert_eq!(n.step(&mut Sink::default()), None);
    }

    #[test]
    fn horizon_zero_delivers_nothing_and_finish_drops_rest() {
        let mut n = net(4, 0.0, 0);
        let mut w = Sink::default();
        n.schedule_send(data(0)).unwrap();
        n.run_until(&mut w, 0);
        assert_eq!(count(&n, TraceKind::Deliver), 0);
        n.finish(0);
        assert_eq!(count(&n, TraceKind::Drop), 1);
        assert_eq!(n.trace().last().unwrap().cause.as_deref(), Some("horizon"));
    }

    #[test]
    fn down_and_unknown_destinations() {
        let mut n = net(1, 0.0, 0);
        n.add_link(A, EntityId(9), LinkModel::reliable(1));
        let mut w = Sink { down: vec![B], ..Default::default() };
        n.schedule_send(data(0)).unwrap();
        n.schedule_send(Envelope::new(A, EntityId(9), Body::Promote { principal: A })).unwrap();
        n.run_until(&mut w, 10);
        assert!(w.got.is_empty());
        let causes: Vec<_> = n.trace().iter().filter_map(|e| e.cause.clone()).collect();
        assert_eq!(causes, vec!["node_down", "unknown_destination"]);
    }

    #[test]
    fn tamper_flips_scripted_bit() {
        let mut n = net(1, 0.0, 0);
        let mut script = AdversaryScript::new(AdversaryMode::Tamper, vec![(A, B)]);
        script.field = TamperField::KeyWrap;
        script.bit = Some(0);
        n.attach_adversary(script).unwrap();
        let mut w = Sink::default();
        n.schedule_send(data(3)).unwrap();
        n.run_until(&mut w, 10);
        let Body::Data(d) = &w.got[0].1.body else { panic!() };
        assert_eq!(d.wrapped_key[0], 3 ^ 0x80);
        assert_eq!(d.ciphertext, vec![0x55; 10]);
        let act = n.trace().iter().find(|e| e.kind == TraceKind::AdversaryAction).unwrap();
        assert_eq!(act.outcome, "tampered");
        assert_eq!(act.msg.as_deref(), Some("1:3"));
    }

    #[test]
    fn tamper_respects_max_actions() {
        let mut n = net(1, 0.0, 0);
        let mut script = AdversaryScript::new(AdversaryMode::Tamper, vec![(A, B)]);
        script.max_actions = Some(2);
        n.attach_adversary(script).unwrap();
        let mut w = Sink::default();
        for i in 0..5 {
            n.schedule_send(data(i)).unwrap();
        }
        n.run_until(&mut w, 10);
        assert_eq!(count(&n, TraceKind::AdversaryAction), 2);
    }

    #[test]
    fn eavesdrop_does_not_interfere() {
        let delivered = |spy: bool| {
            let mut n = net(2, 0.2, 9);
            if spy {
                n.attach_adversary(AdversaryScript::new(AdversaryMode::Eavesdrop, vec![(A, B), (B, A)])).unwrap();
            }
            let mut w = Sink { bounce: true, ..Default::default() };
            for i in 0..100 {
                n.schedule_send(data(i)).unwrap();
            }
            n.run_until(&mut w, 1000);
            let spied = n.trace().iter().filter(|e| e.kind == TraceKind::AdversaryAction).count();
            let deliveries: Vec<_> = n.trace().iter().filter(|e| e.kind == TraceKind::Deliver).cloned().collect();
            (deliveries, spied)
        };
        let (clean, none) = delivered(false);
        let (spied, seen) = delivered(true);
        assert_eq!(none, 0);
        assert_eq!(clean, spied);
        assert_eq!(seen, clean.len());
    }

    #[test]
    fn replay_reinjects_capture_or_noops() {
        let mut n = net(1, 0.0, 0);
        let h = n
            .attach_adversary(AdversaryScript::new(AdversaryMode::Replay, vec![(A, B)]).with_triggers(vec![0, 50]))
            .unwrap();
        let mut w = Sink::default();
        n.run_until(&mut w, 0);
        assert_eq!(n.trace()[0].outcome, "noop");
        n.schedule_send(data(8)).unwrap();
        n.run_until(&mut w, 100);
        assert_eq!(w.got.len(), 2);
        assert_eq!(w.got[0].1, w.got[1].1);
        assert_eq!(w.got[1].0, 51);
        assert_eq!(n.captured(h).len(), 1);
    }

    #[test]
    fn rogue_injection_needs_configured_link() {
        let mut n = net(1, 0.0, 0);
        let bad = AdversaryScript::new(AdversaryMode::RogueMote, vec![(EntityId(66), B)]);
        assert!(n.attach_adversary(bad.clone()).is_err());
        n.add_link(EntityId(66), B, LinkModel::reliable(1));
        n.attach_adversary(bad.with_triggers(vec![3, 4])).unwrap();
        let mut w = Sink::default();
        n.run_until(&mut w, 10);
        assert_eq!(w.got.len(), 2);
        assert!(w.got.iter().all(|(_, e)| e.kind() == Kind::JoinRequest && e.src == EntityId(66)));
    }
}
