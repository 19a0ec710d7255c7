//! Sensor mote state machine.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::rca::{xor_extend, RcaCipher};

use super::envelope::{Body, DataBody, Envelope};
use super::error::ProtocolError;
use super::frame::{open_frame, seal_frame, PlainFrame, ReplayWindow};
use super::ids::EntityId;
use super::keys::{is_zero, random_nonzero, xor8, KeyMaterial, MoteCredentials};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Preloaded,
    JoinPending,
    Operational,
    Failed,
}

/// A data envelope together with the session key that sealed it.
///
/// The mote keeps no copy of the key; it is handed back only so a caller
/// (the simulator's oracle) can check that it never appears on the wire.
#[derive(Debug)]
pub struct Outgoing {
    pub envelope: Envelope,
    pub session_key: [u8; 8],
}

#[derive(Clone, Debug)]
pub struct Mote {
    id: EntityId,
    base_station: EntityId,
    keys: KeyMaterial,
    phase: Phase,
    clock: u32,
    seen: ReplayWindow,
    cipher: RcaCipher,
}

impl Mote {
    pub fn new(
        id: EntityId,
        base_station: EntityId,
        credentials: MoteCredentials,
        cipher: RcaCipher,
    ) -> Self {
        Self {
            id,
            base_station,
            keys: KeyMaterial::preloaded(credentials),
            phase: Phase::Preloaded,
            clock: 0,
            seen: ReplayWindow::default(),
            cipher,
        }
    }

    pub fn id(&self) -> EntityId {
        self.id
    }

    pub fn base_station(&self) -> EntityId {
        self.base_station
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn credentials(&self) -> &MoteCredentials {
        &self.keys.credentials
    }

    /// `K_B`, once operational.
    pub fn base_key(&self) -> Option<&[u8; 8]> {
        (self.phase == Phase::Operational).then_some(&self.keys.base_key)
    }

    /// `M_K`, once operational.
    pub fn operating_key(&self) -> Option<&[u8; 8]> {
        (self.phase == Phase::Operational).then_some(&self.keys.operating_key)
    }

    pub fn clock(&self) -> u32 {
        self.clock
    }

    /// Bytes of persistent key material: always the full fixed-size record.
    pub fn stored_key_bytes(&self) -> usize {
        std::mem::size_of_val(&self.keys)
    }

    fn require(&self, phase: Phase, what: &str) -> Result<(), ProtocolError> {
        if self.phase == phase {
            Ok(())
        } else {
            Err(ProtocolError::State(format!(
                "mote {} cannot {what} in phase {:?}",
                self.id, self.phase
            )))
        }
    }

    /// Starts key distribution by announcing S1 to the base station.
    pub fn join_request(&mut self) -> Result<Envelope, ProtocolError> {
        if !matches!(self.phase, Phase::Preloaded | Phase::Failed) {
            return Err(ProtocolError::State(format!(
                "mote {} cannot join in phase {:?}",
                self.id, self.phase
            )));
        }
        self.phase = Phase::JoinPending;
        Ok(Envelope::new(
            self.id,
            self.base_station,
            Body::JoinRequest {
                s1: self.keys.credentials.s1,
            },
        ))
    }

    /// Recovers `K_B` and `M_K` from a key assignment.
    ///
    /// `K_B = RCA(K, B)`, then `M_K ⊕ S2 = RCA(K_B, A)`, then unmask with the
    /// cyclically extended S2. A zero result means the assignment was corrupt;
    /// the mote falls back to `Failed` and must rejoin.
    pub fn derive_keys(&mut self, a: &[u8; 8], b: &[u8; 8]) -> Result<(), ProtocolError> {
        self.require(Phase::JoinPending, "accept keys")?;
        let creds = self.keys.credentials;
        let base_key: [u8; 8] = self
            .cipher
            .transform_bytes(&creds.k, b)?
            .try_into()
            .expect("8-byte key");
        let masked = self.cipher.wrap8(&base_key, a)?;
        let operating_key = xor8(&masked, &xor_extend(&creds.s2, 8)?);
        if is_zero(&base_key) || is_zero(&operating_key) {
            self.fail();
            return Err(ProtocolError::JoinFailure("derived key is zero"));
        }
        self.keys.base_key = base_key;
        self.keys.operating_key = operating_key;
        self.phase = Phase::Operational;
        Ok(())
    }

    /// Seals `payload` under a fresh session key `R` and wraps `R` as
    /// `R″ = RCA(K_B, RCA(M_K, R))`.
    pub fn send_data(
        &mut self,
        target: EntityId,
        payload: &[u8],
        rng: &mut dyn RngCore,
    ) -> Result<Outgoing, ProtocolError> {
        self.require(Phase::Operational, "send data")?;
        let session_key = random_nonzero::<8>(rng);
        let ts = self.clock;
        let ciphertext = seal_frame(&self.cipher, &session_key, payload, ts)?;
        let inner = self.cipher.wrap8(&self.keys.operating_key, &session_key)?;
        let wrapped_key = self.cipher.wrap8(&self.keys.base_key, &inner)?;
        self.clock = self.clock.wrapping_add(1);
        Ok(Outgoing {
            envelope: Envelope::new(
                self.id,
                self.base_station,
                Body::Data(DataBody {
                    origin: self.id,
                    target,
                    ts,
                    wrapped_key,
                    ciphertext,
                }),
            ),
            session_key,
        })
    }

    /// Unwraps `R` with `K_B` then `M_K`, opens the frame and enforces
    /// strictly increasing timestamps per origin.
    pub fn receive_data(&mut self, data: &DataBody) -> Result<PlainFrame, ProtocolError> {
        self.require(Phase::Operational, "receive data")?;
        let inner = self.cipher.wrap8(&self.keys.base_key, &data.wrapped_key)?;
        let session_key = self.cipher.wrap8(&self.keys.operating_key, &inner)?;
        let frame = open_frame(&self.cipher, &session_key, &data.ciphertext)?;
        if frame.ts != data.ts {
            return Err(ProtocolError::Integrity);
        }
        self.seen.accept(data.origin, frame.ts)?;
        Ok(frame)
    }

    /// Installs a refreshed operating key: `M′ = RCA(M_K, M″)`,
    /// `M_K_new = RCA(K_B, M′)`. Returns the acknowledgement, which proves
    /// possession of the new key by wrapping `K_B` under it.
    pub fn apply_refresh(&mut self, m2: &[u8; 8]) -> Result<Envelope, ProtocolError> {
        self.require(Phase::Operational, "refresh")?;
        let m1 = self.cipher.wrap8(&self.keys.operating_key, m2)?;
        let fresh = self.cipher.wrap8(&self.keys.base_key, &m1)?;
        if is_zero(&fresh) {
            return Err(ProtocolError::RefreshRejected);
        }
        self.keys.operating_key = fresh;
        let proof = self.cipher.wrap8(&fresh, &self.keys.base_key)?;
        Ok(Envelope::new(
            self.id,
            self.base_station,
            Body::RefreshAck { proof },
        ))
    }

    /// Node failure: operational keys are wiped; credentials and the logical
    /// clock survive.
    pub fn fail(&mut self) {
        self.keys.base_key = [0; 8];
        self.keys.operating_key = [0; 8];
        self.phase = Phase::Failed;
    }

    /// Loads fresh credentials after a failure.
    pub fn reprovision(&mut self, credentials: MoteCredentials) -> Result<(), ProtocolError> {
        self.require(Phase::Failed, "be reprovisioned")?;
        self.keys = KeyMaterial::preloaded(credentials);
        Ok(())
    }
}
