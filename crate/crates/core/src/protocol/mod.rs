//! Key distribution and secure messaging between motes, base stations and
//! the central server.
//!
//! Each entity is a single-threaded state machine that consumes and emits
//! [`Envelope`]s; the simulator in [`crate::simnet`] carries them.

mod base_station;
mod crc;
mod envelope;
mod error;
mod frame;
mod ids;
mod keys;
mod mote;
mod registry;

pub use base_station::{bs_failover_promote, Assignment, BaseStationState};
pub use crc::crc16;
pub use envelope::{Body, DataBody, Envelope, Kind, DATA_FIXED_LEN, HEADER_LEN};
pub use error::ProtocolError;
pub use frame::{open_frame, seal_frame, PlainFrame, ReplayWindow, FRAME_OVERHEAD};
pub use ids::{EntityId, CENTRAL_SERVER};
pub use keys::{is_zero, random_nonzero, KeyMaterial, MoteCredentials};
pub use mote::{Mote, Outgoing, Phase};
pub use registry::{CentralServerRegistry, CredentialEntry, RegistryFileError};
