//! Sealed data frames: `E_R(payload ‖ ts ‖ crc16(payload ‖ ts))`.

use std::collections::BTreeMap;

use crate::rca::RcaCipher;

use super::crc::crc16;
use super::error::ProtocolError;
use super::ids::EntityId;

/// Bytes a sealed frame adds to its payload (4-byte timestamp, 2-byte CRC).
pub const FRAME_OVERHEAD: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainFrame {
    pub payload: Vec<u8>,
    pub ts: u32,
}

pub fn seal_frame(
    cipher: &RcaCipher,
    session_key: &[u8; 8],
    payload: &[u8],
    ts: u32,
) -> Result<Vec<u8>, ProtocolError> {
    if session_key.iter().all(|&b| b == 0) {
        return Err(ProtocolError::InvalidKey);
    }
    let mut plain = Vec::with_capacity(payload.len() + FRAME_OVERHEAD);
    plain.extend_from_slice(payload);
    plain.extend_from_slice(&ts.to_be_bytes());
    let crc = crc16(&plain);
    plain.extend_from_slice(&crc.to_be_bytes());
    Ok(cipher.stream_encrypt(session_key, &plain)?)
}

pub fn open_frame(
    cipher: &RcaCipher,
    session_key: &[u8; 8],
    sealed: &[u8],
) -> Result<PlainFrame, ProtocolError> {
    if sealed.len() < FRAME_OVERHEAD {
        return Err(ProtocolError::Integrity);
    }
    let plain = cipher.stream_encrypt(session_key, sealed)?;
    let (body, crc) = plain.split_at(plain.len() - 2);
    if crc16(body) != u16::from_be_bytes([crc[0], crc[1]]) {
        return Err(ProtocolError::Integrity);
    }
    let (payload, ts) = body.split_at(body.len() - 4);
    Ok(PlainFrame {
        payload: payload.to_vec(),
        ts: u32::from_be_bytes(ts.try_into().expect("4-byte timestamp")),
    })
}

/// Last accepted timestamp per sender; accepts only strictly newer values.
#[derive(Debug, Clone, Default)]
pub struct ReplayWindow {
    last: BTreeMap<EntityId, u32>,
}

impl ReplayWindow {
    pub fn check(&self, sender: EntityId, ts: u32) -> Result<(), ProtocolError> {
        match self.last.get(&sender) {
            Some(&last) if ts <= last => Err(ProtocolError::Replay { sender, ts, last }),
            _ => Ok(()),
        }
    }

    pub fn accept(&mut self, sender: EntityId, ts: u32) -> Result<(), ProtocolError> {
        self.check(sender, ts)?;
        self.last.insert(sender, ts);
        Ok(())
    }

    pub fn last(&self, sender: EntityId) -> Option<u32> {
        self.last.get(&sender).copied()
    }
}
