//! Base station (cluster head) state machine.
//!
//! A base station owns its cluster's key table, relays every data message
//! without opening the ciphertext, and periodically refreshes mote keys. A
//! backup device holds a replica that is kept in sync through
//! `FailoverSync` envelopes and takes over when its principal fails.

use std::collections::BTreeMap;

use rand::RngCore;

use crate::rca::{xor_extend, RcaCipher};

use super::envelope::{Body, DataBody, Envelope};
use super::error::ProtocolError;
use super::frame::ReplayWindow;
use super::ids::{EntityId, CENTRAL_SERVER};
use super::keys::{is_zero, random_nonzero, xor8};

/// Result of a completed join on the base-station side.
#[derive(Debug)]
pub struct Assignment {
    pub mote: EntityId,
    pub key_assign: Envelope,
    pub sync: Option<Envelope>,
}

#[derive(Clone, Debug)]
pub struct BaseStationState {
    /// Physical device address.
    device: EntityId,
    /// Cluster address; equal to `device` for a principal.
    cluster: EntityId,
    base_key: [u8; 8],
    mote_table: BTreeMap<EntityId, [u8; 8]>,
    peer_table: BTreeMap<EntityId, [u8; 8]>,
    /// Location service: which cluster each known mote lives in.
    directory: BTreeMap<EntityId, EntityId>,
    refresh_period: u64,
    refresh_round: u64,
    pending_joins: BTreeMap<[u8; 3], EntityId>,
    /// New key issued but not yet acknowledged.
    pending_refresh: BTreeMap<EntityId, [u8; 8]>,
    seen: ReplayWindow,
    is_backup: bool,
    replica_of: Option<EntityId>,
    principal_failed: bool,
    backup: Option<EntityId>,
    cipher: RcaCipher,
}

impl BaseStationState {
    pub fn new(id: EntityId, base_key: [u8; 8], refresh_period: u64, cipher: RcaCipher) -> Self {
        Self {
            device: id,
            cluster: id,
            base_key,
            mote_table: BTreeMap::new(),
            peer_table: BTreeMap::new(),
            directory: BTreeMap::new(),
            refresh_period,
            refresh_round: 0,
            pending_joins: BTreeMap::new(),
            pending_refresh: BTreeMap::new(),
            seen: ReplayWindow::default(),
            is_backup: false,
            replica_of: None,
            principal_failed: false,
            backup: None,
            cipher,
        }
    }

    /// A standby replica of `principal`, sharing its key and peer table.
    pub fn new_backup(device: EntityId, principal: &BaseStationState) -> Self {
        Self {
            device,
            cluster: principal.cluster,
            is_backup: true,
            replica_of: Some(principal.cluster),
            backup: None,
            mote_table: BTreeMap::new(),
            pending_joins: BTreeMap::new(),
            pending_refresh: BTreeMap::new(),
            seen: ReplayWindow::default(),
            ..principal.clone()
        }
    }

    pub fn device(&self) -> EntityId {
        self.device
    }

    pub fn cluster(&self) -> EntityId {
        self.cluster
    }

    pub fn base_key(&self) -> &[u8; 8] {
        &self.base_key
    }

    pub fn mote_table(&self) -> &BTreeMap<EntityId, [u8; 8]> {
        &self.mote_table
    }

    pub fn peer_table(&self) -> &BTreeMap<EntityId, [u8; 8]> {
        &self.peer_table
    }

    pub fn refresh_period(&self) -> u64 {
        self.refresh_period
    }

    pub fn refresh_round(&self) -> u64 {
        self.refresh_round
    }

    pub fn is_backup(&self) -> bool {
        self.is_backup
    }

    pub fn replica_of(&self) -> Option<EntityId> {
        self.replica_of
    }

    pub fn backup(&self) -> Option<EntityId> {
        self.backup
    }

    pub fn pending_refresh(&self, mote: EntityId) -> Option<&[u8; 8]> {
        self.pending_refresh.get(&mote)
    }

    pub fn set_backup(&mut self, backup: Option<EntityId>) {
        self.backup = backup;
    }

    pub fn add_peer(&mut self, cluster: EntityId, key: [u8; 8]) {
        self.peer_table.insert(cluster, key);
    }

    /// Records that `mote` lives in `cluster`.
    pub fn locate(&mut self, mote: EntityId, cluster: EntityId) {
        self.directory.insert(mote, cluster);
    }

    fn sync_envelope(&self, mote: EntityId) -> Result<Option<Envelope>, ProtocolError> {
        let Some(backup) = self.backup.filter(|_| !self.is_backup) else {
            return Ok(None);
        };
        let key = self.mote_table[&mote];
        let wrapped = self.cipher.wrap8(&self.base_key, &key)?;
        Ok(Some(Envelope::new(
            self.cluster,
            backup,
            Body::FailoverSync { mote, wrapped },
        )))
    }

    fn require_active(&self) -> Result<(), ProtocolError> {
        if self.is_backup {
            Err(ProtocolError::State(format!(
                "backup {} is not active",
                self.device
            )))
        } else {
            Ok(())
        }
    }

    /// Forwards a join request's S1 to the central server.
    pub fn on_join_request(
        &mut self,
        mote: EntityId,
        s1: [u8; 3],
    ) -> Result<Envelope, ProtocolError> {
        self.require_active()?;
        self.pending_joins.insert(s1, mote);
        Ok(Envelope::new(
            self.cluster,
            CENTRAL_SERVER,
            Body::AuthQuery { s1 },
        ))
    }

    pub fn pending_join(&self, s1: &[u8; 3]) -> Option<EntityId> {
        self.pending_joins.get(s1).copied()
    }

    /// Completes a join: draws `M_K` and answers with
    /// `A = RCA(K_B, M_K ⊕ S2*)`, `B = RCA(K, K_B)`.
    pub fn process_auth_grant(
        &mut self,
        s1: [u8; 3],
        p: &[u8; 7],
        rng: &mut dyn RngCore,
    ) -> Result<Assignment, ProtocolError> {
        let mote = self
            .pending_joins
            .remove(&s1)
            .ok_or_else(|| ProtocolError::NoPendingJoin(hex::encode(s1)))?;
        let plain = self.cipher.stream_encrypt(&self.base_key, p)?;
        let (k, s2) = plain.split_at(4);
        let operating_key = random_nonzero::<8>(rng);
        let masked = xor8(&operating_key, &xor_extend(s2, 8)?);
        let a = self.cipher.wrap8(&self.base_key, &masked)?;
        let b: [u8; 8] = self
            .cipher
            .transform_bytes(k, &self.base_key)?
            .try_into()
            .expect("8-byte wrap");
        self.mote_table.insert(mote, operating_key);
        self.pending_refresh.remove(&mote);
        self.directory.insert(mote, self.cluster);
        Ok(Assignment {
            mote,
            key_assign: Envelope::new(self.cluster, mote, Body::KeyAssign { a, b }),
            sync: self.sync_envelope(mote)?,
        })
    }

    /// Drops the pending join for a denied serial, returning the mote that
    /// asked.
    pub fn process_auth_deny(&mut self, s1: [u8; 3]) -> Result<EntityId, ProtocolError> {
        self.pending_joins
            .remove(&s1)
            .ok_or_else(|| ProtocolError::NoPendingJoin(hex::encode(s1)))
    }

    /// Key used when wrapping for `mote`: a key still awaiting
    /// acknowledgement has already been installed on the mote.
    fn outbound_key(&self, mote: EntityId) -> Option<&[u8; 8]> {
        self.pending_refresh
            .get(&mote)
            .or_else(|| self.mote_table.get(&mote))
    }

    fn unwrap_session_key(
        &self,
        outer: &[u8; 8],
        inner: &[u8; 8],
        wrapped: &[u8; 8],
    ) -> Result<[u8; 8], ProtocolError> {
        let r1 = self.cipher.wrap8(outer, wrapped)?;
        Ok(self.cipher.wrap8(inner, &r1)?)
    }

    fn deliver_local(&self, data: &DataBody, session_key: &[u8; 8]) -> Result<Envelope, ProtocolError> {
        let key = self
            .outbound_key(data.target)
            .ok_or(ProtocolError::Routing(data.target))?;
        let r1 = self.cipher.wrap8(key, session_key)?;
        let wrapped_key = self.cipher.wrap8(&self.base_key, &r1)?;
        Ok(Envelope::new(
            self.cluster,
            data.target,
            Body::Data(DataBody {
                wrapped_key,
                ..data.clone()
            }),
        ))
    }

    /// Relays a mote's data message.
    ///
    /// Recovers `R` with `K_B` and the sender's `M_K`, then rewraps it for the
    /// destination mote or, for another cluster, for the peer base station.
    /// The ciphertext is copied unchanged.
    pub fn relay(&mut self, src: EntityId, data: &DataBody) -> Result<Envelope, ProtocolError> {
        self.require_active()?;
        if src != data.origin {
            return Err(ProtocolError::Unauthorized(src));
        }
        let sender_key = *self
            .mote_table
            .get(&src)
            .ok_or(ProtocolError::Unauthorized(src))?;
        self.seen.check(src, data.ts)?;
        let session_key = self.unwrap_session_key(&self.base_key, &sender_key, &data.wrapped_key)?;
        let out = if self.mote_table.contains_key(&data.target) {
            self.deliver_local(data, &session_key)?
        } else {
            let cluster = *self
                .directory
                .get(&data.target)
                .filter(|c| **c != self.cluster)
                .ok_or(ProtocolError::Routing(data.target))?;
            let peer_key = self
                .peer_table
                .get(&cluster)
                .ok_or(ProtocolError::Routing(cluster))?;
            let r1 = self.cipher.wrap8(peer_key, &session_key)?;
            let wrapped_key = self.cipher.wrap8(&self.base_key, &r1)?;
            Envelope::new(
                self.cluster,
                cluster,
                Body::InterForward(DataBody {
                    wrapped_key,
                    ..data.clone()
                }),
            )
        };
        self.seen.accept(src, data.ts)?;
        Ok(out)
    }

    /// Accepts a message forwarded by the base station of `src_cluster`:
    /// `R′ = RCA(K_B_src, R″)`, `R = RCA(K_B_own, R′)`.
    pub fn on_inter_forward(
        &mut self,
        src_cluster: EntityId,
        data: &DataBody,
    ) -> Result<Envelope, ProtocolError> {
        self.require_active()?;
        let peer_key = *self
            .peer_table
            .get(&src_cluster)
            .ok_or(ProtocolError::Unauthorized(src_cluster))?;
        if !self.mote_table.contains_key(&data.target) {
            return Err(ProtocolError::Routing(data.target));
        }
        self.seen.check(data.origin, data.ts)?;
        let session_key = self.unwrap_session_key(&peer_key, &self.base_key, &data.wrapped_key)?;
        let out = self.deliver_local(data, &session_key)?;
        self.seen.accept(data.origin, data.ts)?;
        Ok(out)
    }

    /// Issues a new operating key for `mote`:
    /// `M′ = RCA(K_B, M_new)`, `M″ = RCA(M_old, M′)`.
    ///
    /// The table keeps the old key until the mote acknowledges. Returns the
    /// refresh envelope and whether an unacknowledged earlier refresh was
    /// abandoned.
    pub fn begin_refresh(
        &mut self,
        mote: EntityId,
        rng: &mut dyn RngCore,
    ) -> Result<(Envelope, bool), ProtocolError> {
        self.require_active()?;
        let old = *self.mote_table.get(&mote).ok_or_else(|| {
            ProtocolError::State(format!("mote {mote} is not in the key table"))
        })?;
        let abandoned = self.pending_refresh.remove(&mote).is_some();
        let fresh = loop {
            let k = random_nonzero::<8>(rng);
            if k != old {
                break k;
            }
        };
        let m1 = self.cipher.wrap8(&self.base_key, &fresh)?;
        let m2 = self.cipher.wrap8(&old, &m1)?;
        self.pending_refresh.insert(mote, fresh);
        Ok((
            Envelope::new(self.cluster, mote, Body::Refresh { m2 }),
            abandoned,
        ))
    }

    /// Marks the start of a refresh round across the cluster.
    pub fn next_refresh_round(&mut self) -> u64 {
        self.refresh_round += 1;
        self.refresh_round
    }

    /// Second phase of a refresh: swaps the table entry once the mote proves
    /// it holds the new key. A wrong proof leaves the old entry in place.
    /// Returns the replica update for the backup, if any.
    pub fn on_refresh_ack(
        &mut self,
        mote: EntityId,
        proof: &[u8; 8],
    ) -> Result<Option<Envelope>, ProtocolError> {
        let fresh = self.pending_refresh.remove(&mote).ok_or_else(|| {
            ProtocolError::State(format!("no refresh pending for mote {mote}"))
        })?;
        if self.cipher.wrap8(&fresh, &self.base_key)? != *proof {
            return Err(ProtocolError::RefreshDesync(mote));
        }
        self.mote_table.insert(mote, fresh);
        self.sync_envelope(mote)
    }

    /// Applies a replicated table entry on a backup.
    pub fn on_failover_sync(
        &mut self,
        src: EntityId,
        mote: EntityId,
        wrapped: &[u8; 8],
    ) -> Result<(), ProtocolError> {
        if !self.is_backup || self.replica_of != Some(src) {
            return Err(ProtocolError::State(format!(
                "{} does not replicate {src}",
                self.device
            )));
        }
        let key = self.cipher.wrap8(&self.base_key, wrapped)?;
        if is_zero(&key) {
            return Err(ProtocolError::State(format!("zero key replicated for {mote}")));
        }
        self.mote_table.insert(mote, key);
        self.directory.insert(mote, self.cluster);
        Ok(())
    }

    pub fn mark_principal_failed(&mut self, principal: EntityId) -> Result<(), ProtocolError> {
        if !self.is_backup || self.replica_of != Some(principal) {
            return Err(ProtocolError::State(format!(
                "{} is not the configured backup of {principal}",
                self.device
            )));
        }
        self.principal_failed = true;
        Ok(())
    }

    /// Activates a backup in place of its failed principal.
    pub fn promote(&mut self) -> Result<(), ProtocolError> {
        if !self.is_backup {
            return Err(ProtocolError::State(format!("{} is not a backup", self.device)));
        }
        if !self.principal_failed {
            return Err(ProtocolError::State(format!(
                "principal of {} has not failed",
                self.device
            )));
        }
        if self.mote_table.is_empty() {
            return Err(ProtocolError::State(format!(
                "backup {} has an empty replica",
                self.device
            )));
        }
        self.is_backup = false;
        Ok(())
    }
}

/// Consumes a backup and returns it promoted.
pub fn bs_failover_promote(
    mut backup: BaseStationState,
) -> Result<BaseStationState, ProtocolError> {
    backup.promote()?;
    Ok(backup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::keys::MoteCredentials;
    use crate::protocol::mote::Mote;
    use crate::protocol::registry::CentralServerRegistry;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const BS: EntityId = EntityId(1);
    const KB: [u8; 8] = [1, 3, 5, 7, 9, 11, 13, 15];

    struct Cluster {
        bs: BaseStationState,
        reg: CentralServerRegistry,
        motes: Vec<Mote>,
        rng: ChaCha8Rng,
        cipher: RcaCipher,
    }

    fn join(c: &mut Cluster, id: u16) -> Assignment {
        let creds = c.reg.provision_mote(&mut c.rng).unwrap();
        let mut m = Mote::new(EntityId(id), BS, creds, c.cipher);
        let Body::JoinRequest { s1 } = m.join_request().unwrap().body else { unreachable!() };
        let query = c.bs.on_join_request(m.id(), s1).unwrap();
        assert_eq!(query.dst, CENTRAL_SERVER);
        let grant = c.reg.authenticate(&c.cipher, BS, s1, false).unwrap();
        let Body::AuthGrant { s1, p } = grant.body else { unreachable!() };
        let asg = c.bs.process_auth_grant(s1, &p, &mut c.rng).unwrap();
        let Body::KeyAssign { a, b } = &asg.key_assign.body else { unreachable!() };
        m.derive_keys(a, b).unwrap();
        c.motes.push(m);
        asg
    }

    fn cluster(n: u16) -> Cluster {
        let cipher = RcaCipher::default();
        let mut reg = CentralServerRegistry::new();
        reg.register_base_station(BS, KB);
        let mut c = Cluster {
            bs: BaseStationState::new(BS, KB, 100, cipher),
            reg,
            motes: vec![],
            rng: ChaCha8Rng::seed_from_u64(11),
            cipher,
        };
        for i in 0..n {
            join(&mut c, 100 + i);
        }
        c
    }

    #[test]
    fn join_agrees_on_keys() {
        let c = cluster(5);
        assert_eq!(c.bs.mote_table().len(), 5);
        for m in &c.motes {
            assert_eq!(m.base_key(), Some(&KB));
            assert_eq!(m.operating_key(), c.bs.mote_table().get(&m.id()));
        }
    }

    #[test]
    fn assignment_fields_are_8_bytes() {
        let mut c = cluster(0);
        let asg = join(&mut c, 7);
        assert_eq!(asg.key_assign.body.encode().len(), 16);
        assert!(asg.sync.is_none());
    }

    #[test]
    fn grant_without_pending_join_is_state_error() {
        let mut c = cluster(0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            c.bs.process_auth_grant([4, 5, 6], &[0; 7], &mut rng),
            Err(ProtocolError::NoPendingJoin(_))
        ));
        assert!(c.bs.process_auth_deny([4, 5, 6]).is_err());
    }

    #[test]
    fn relay_keeps_ciphertext_and_rewraps_key() {
        let mut c = cluster(2);
        let (dst_id, payload) = (c.motes[1].id(), b"reading");
        let out = c.motes[0].send_data(dst_id, payload, &mut c.rng).unwrap();
        let Body::Data(incoming) = &out.envelope.body else { unreachable!() };
        let fwd = c.bs.relay(c.motes[0].id(), incoming).unwrap();
        assert_eq!(fwd.dst, dst_id);
        let Body::Data(outgoing) = &fwd.body else { unreachable!() };
        assert_eq!(outgoing.ciphertext, incoming.ciphertext);
        assert_ne!(outgoing.wrapped_key, incoming.wrapped_key);
        assert_eq!(c.motes[1].receive_data(outgoing).unwrap().payload, payload);
        // the same data again is stale at the relay
        assert!(matches!(
            c.bs.relay(c.motes[0].id(), incoming),
            Err(ProtocolError::Replay { .. })
        ));
    }

    #[test]
    fn unknown_sender_and_destination_rejected() {
        let mut c = cluster(1);
        let rogue_creds = MoteCredentials { k: [1; 4], s1: [2; 3], s2: [3; 3] };
        let mut rogue = Mote::new(EntityId(666), BS, rogue_creds, c.cipher);
        rogue.join_request().unwrap();
        // forge an operational rogue by deriving from a self-made assignment
        let b = c.cipher.transform_bytes(&[1; 4], &KB).unwrap().try_into().unwrap();
        rogue.derive_keys(&[5; 8], &b).unwrap();
        let out = rogue.send_data(c.motes[0].id(), b"evil", &mut c.rng).unwrap();
        let Body::Data(d) = &out.envelope.body else { unreachable!() };
        assert_eq!(c.bs.relay(EntityId(666), d), Err(ProtocolError::Unauthorized(EntityId(666))));

        let out = c.motes[0].send_data(EntityId(4242), b"lost", &mut c.rng).unwrap();
        let Body::Data(d) = &out.envelope.body else { unreachable!() };
        assert_eq!(c.bs.relay(c.motes[0].id(), d), Err(ProtocolError::Routing(EntityId(4242))));
    }

    #[test]
    fn spoofed_origin_rejected() {
        let mut c = cluster(2);
        let dst = c.motes[1].id();
        let out = c.motes[0].send_data(dst, b"x", &mut c.rng).unwrap();
        let Body::Data(d) = &out.envelope.body else { unreachable!() };
        assert!(matches!(c.bs.relay(c.motes[1].id(), d), Err(ProtocolError::Unauthorized(_))));
    }

    #[test]
    fn two_phase_refresh() {
        let mut c = cluster(1);
        let id = c.motes[0].id();
        let old = c.bs.mote_table()[&id];
        let (env, abandoned) = c.bs.begin_refresh(id, &mut c.rng).unwrap();
        assert!(!abandoned);
        assert_eq!(c.bs.mote_table()[&id], old, "old key kept until ack");
        let Body::Refresh { m2 } = env.body else { unreachable!() };
        let ack = c.motes[0].apply_refresh(&m2).unwrap();
        let Body::RefreshAck { proof } = ack.body else { unreachable!() };
        c.bs.on_refresh_ack(id, &proof).unwrap();
        assert_ne!(c.bs.mote_table()[&id], old);
        assert_eq!(c.motes[0].operating_key(), Some(&c.bs.mote_table()[&id]));
        assert!(c.bs.begin_refresh(EntityId(999), &mut c.rng).is_err());
    }

    #[test]
    fn tampered_refresh_is_detected_at_ack() {
        let mut c = cluster(1);
        let id = c.motes[0].id();
        let old = c.bs.mote_table()[&id];
        let (env, _) = c.bs.begin_refresh(id, &mut c.rng).unwrap();
        let Body::Refresh { mut m2 } = env.body else { unreachable!() };
        m2[0] ^= 0x80;
        let ack = c.motes[0].apply_refresh(&m2).unwrap();
        let Body::RefreshAck { proof } = ack.body else { unreachable!() };
        assert_eq!(c.bs.on_refresh_ack(id, &proof).unwrap_err(), ProtocolError::RefreshDesync(id));
        assert_eq!(c.bs.mote_table()[&id], old);
        assert_ne!(c.motes[0].operating_key(), Some(&old));
    }

    #[test]
    fn backup_replicates_and_promotes() {
        let mut c = cluster(0);
        c.bs.set_backup(Some(EntityId(2)));
        let mut backup = BaseStationState::new_backup(EntityId(2), &c.bs);
        assert!(matches!(backup.clone().promote(), Err(ProtocolError::State(_))));
        let asg = join(&mut c, 50);
        let sync = asg.sync.expect("sync to backup");
        let Body::FailoverSync { mote, wrapped } = sync.body else { unreachable!() };
        backup.on_failover_sync(sync.src, mote, &wrapped).unwrap();
        assert_eq!(backup.mote_table(), c.bs.mote_table());
        assert!(matches!(backup.relay(EntityId(50), &DataBody {
            origin: EntityId(50), target: EntityId(50), ts: 0, wrapped_key: [0; 8], ciphertext: vec![0; 6],
        }), Err(ProtocolError::State(_))));

        assert!(bs_failover_promote(backup.clone()).is_err(), "principal still alive");
        backup.mark_principal_failed(BS).unwrap();
        let promoted = bs_failover_promote(backup).unwrap();
        assert!(!promoted.is_backup());
        assert_eq!(promoted.cluster(), BS);
    }

    #[test]
    fn empty_replica_and_foreign_backup_cannot_promote() {
        let c = cluster(0);
        let mut empty = BaseStationState::new_backup(EntityId(2), &c.bs);
        empty.mark_principal_failed(BS).unwrap();
        assert!(matches!(empty.promote(), Err(ProtocolError::State(m)) if m.contains("empty")));

        let mut other = BaseStationState::new_backup(EntityId(3), &c.bs);
        other.replica_of = Some(EntityId(9));
        assert!(other.mark_principal_failed(BS).is_err());
    }

    #[test]
    fn inter_cluster_forward_round_trip() {
        let cipher = RcaCipher::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let kb2 = [2u8; 8];
        let mut reg = CentralServerRegistry::new();
        reg.register_base_station(BS, KB);
        reg.register_base_station(EntityId(2), kb2);
        let mut bs1 = BaseStationState::new(BS, KB, 100, cipher);
        let mut bs2 = BaseStationState::new(EntityId(2), kb2, 100, cipher);
        bs1.add_peer(EntityId(2), kb2);
        bs2.add_peer(BS, KB);
        let mut motes = vec![];
        for (bs, id) in [(&mut bs1, 10u16), (&mut bs2, 20u16)] {
            let creds = reg.provision_mote(&mut rng).unwrap();
            let mut m = Mote::new(EntityId(id), bs.cluster(), creds, cipher);
            m.join_request().unwrap();
            bs.on_join_request(m.id(), creds.s1).unwrap();
            let Body::AuthGrant { s1, p } = reg.authenticate(&cipher, bs.cluster(), creds.s1, false).unwrap().body else { unreachable!() };
            let asg = bs.process_auth_grant(s1, &p, &mut rng).unwrap();
            let Body::KeyAssign { a, b } = asg.key_assign.body else { unreachable!() };
            m.derive_keys(&a, &b).unwrap();
            motes.push(m);
        }
        bs1.locate(EntityId(20), EntityId(2));
        let out = motes[0].send_data(EntityId(20), b"across", &mut rng).unwrap();
        let Body::Data(d) = &out.envelope.body else { unreachable!() };
        let fwd = bs1.relay(EntityId(10), d).unwrap();
        assert_eq!(fwd.dst, EntityId(2));
        let Body::InterForward(f) = &fwd.body else { panic!("expected inter-forward") };
        let last = bs2.on_inter_forward(BS, f).unwrap();
        let Body::Data(l) = &last.body else { unreachable!() };
        assert_eq!(l.ciphertext, d.ciphertext);
        assert_eq!(motes[1].receive_data(l).unwrap().payload, b"across");
    }
}
