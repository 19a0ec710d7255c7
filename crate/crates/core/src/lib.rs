//! Cellular-automata security suite for clustered sensor networks.
//!
//! * [`rca`]: elementary and reversible CA engines and the keystream cipher.
//! * [`protocol`]: mote, base station and central server state machines for
//!   key distribution, relayed secure messaging and periodic rekeying.
//! * [`simnet`]: a deterministic discrete-event network with scripted
//!   adversaries on links.
//! * [`harness`]: scenario files, simulation runs, traces and metrics.
//! * [`batch`]: runs many independent simulations, in parallel when the
//!   `parallel` feature is enabled.

pub mod batch;
pub mod harness;
pub mod protocol;
pub mod rca;
pub mod simnet;
