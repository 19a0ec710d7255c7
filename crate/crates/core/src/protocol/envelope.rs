//! Protocol messages and their wire encoding.
//!
//! Wire layout (big-endian): 1-byte kind tag, 2-byte src, 2-byte dst,
//! 2-byte body length, then the body. Body layouts per kind:
//!
//! | kind          | tag | body                                                     |
//! |---------------|-----|----------------------------------------------------------|
//! | JoinRequest   | 1   | S1 (3)                                                   |
//! | AuthQuery     | 2   | S1 (3)                                                   |
//! | AuthGrant     | 3   | S1 (3) ‖ P (7)                                           |
//! | AuthDeny      | 4   | S1 (3)                                                   |
//! | KeyAssign     | 5   | A (8) ‖ B (8)                                            |
//! | Data          | 6   | origin (2) ‖ target (2) ‖ ts (4) ‖ R″ (8) ‖ C (≥ 6)      |
//! | InterForward  | 7   | same as Data                                             |
//! | Refresh       | 8   | M″ (8)                                                   |
//! | FailoverSync  | 9   | mote (2) ‖ wrapped M_K (8)                               |
//! | Promote       | 10  | principal (2)                                            |
//! | RefreshAck    | 11  | proof (8)                                                |

use serde::{Deserialize, Serialize};

use super::error::ProtocolError;
use super::frame::FRAME_OVERHEAD;
use super::ids::EntityId;

pub const HEADER_LEN: usize = 7;
pub const DATA_FIXED_LEN: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    JoinRequest,
    AuthQuery,
    AuthGrant,
    AuthDeny,
    KeyAssign,
    Data,
    InterForward,
    Refresh,
    FailoverSync,
    Promote,
    RefreshAck,
}

impl Kind {
    pub fn tag(self) -> u8 {
        match self {
            Kind::JoinRequest => 1,
            Kind::AuthQuery => 2,
            Kind::AuthGrant => 3,
            Kind::AuthDeny => 4,
            Kind::KeyAssign => 5,
            Kind::Data => 6,
            Kind::InterForward => 7,
            Kind::Refresh => 8,
            Kind::FailoverSync => 9,
            Kind::Promote => 10,
            Kind::RefreshAck => 11,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Kind> {
        Some(match tag {
            1 => Kind::JoinRequest,
            2 => Kind::AuthQuery,
            3 => Kind::AuthGrant,
            4 => Kind::AuthDeny,
            5 => Kind::KeyAssign,
            6 => Kind::Data,
            7 => Kind::InterForward,
            8 => Kind::Refresh,
            9 => Kind::FailoverSync,
            10 => Kind::Promote,
            11 => Kind::RefreshAck,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::JoinRequest => "join_request",
            Kind::AuthQuery => "auth_query",
            Kind::AuthGrant => "auth_grant",
            Kind::AuthDeny => "auth_deny",
            Kind::KeyAssign => "key_assign",
            Kind::Data => "data",
            Kind::InterForward => "inter_forward",
            Kind::Refresh => "refresh",
            Kind::FailoverSync => "failover_sync",
            Kind::Promote => "promote",
            Kind::RefreshAck => "refresh_ack",
        }
    }
}

/// Relayed data, shared by `Data` and `InterForward`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataBody {
    pub origin: EntityId,
    pub target: EntityId,
    /// Sender's logical clock, also sealed inside the ciphertext.
    pub ts: u32,
    /// Session key wrapped for the next hop (R″).
    pub wrapped_key: [u8; 8],
    pub ciphertext: Vec<u8>,
}

impl DataBody {
    /// Stable identifier of the end-to-end message, `origin:ts`.
    pub fn message_id(&self) -> String {
        format!("{}:{}", self.origin, self.ts)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Body {
    JoinRequest { s1: [u8; 3] },
    AuthQuery { s1: [u8; 3] },
    AuthGrant { s1: [u8; 3], p: [u8; 7] },
    AuthDeny { s1: [u8; 3] },
    KeyAssign { a: [u8; 8], b: [u8; 8] },
    Data(DataBody),
    InterForward(DataBody),
    Refresh { m2: [u8; 8] },
    FailoverSync { mote: EntityId, wrapped: [u8; 8] },
    Promote { principal: EntityId },
    RefreshAck { proof: [u8; 8] },
}

impl Body {
    pub fn kind(&self) -> Kind {
        match self {
            Body::JoinRequest { .. } => Kind::JoinRequest,
            Body::AuthQuery { .. } => Kind::AuthQuery,
            Body::AuthGrant { .. } => Kind::AuthGrant,
            Body::AuthDeny { .. } => Kind::AuthDeny,
            Body::KeyAssign { .. } => Kind::KeyAssign,
            Body::Data(_) => Kind::Data,
            Body::InterForward(_) => Kind::InterForward,
            Body::Refresh { .. } => Kind::Refresh,
            Body::FailoverSync { .. } => Kind::FailoverSync,
            Body::Promote { .. } => Kind::Promote,
            Body::RefreshAck { .. } => Kind::RefreshAck,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Body::JoinRequest { s1 } | Body::AuthQuery { s1 } | Body::AuthDeny { s1 } => {
                out.extend_from_slice(s1)
            }
            Body::AuthGrant { s1, p } => {
                out.extend_from_slice(s1);
                out.extend_from_slice(p);
            }
            Body::KeyAssign { a, b } => {
                out.extend_from_slice(a);
                out.extend_from_slice(b);
            }
            Body::Data(d) | Body::InterForward(d) => {
                out.extend_from_slice(&d.origin.0.to_be_bytes());
                out.extend_from_slice(&d.target.0.to_be_bytes());
                out.extend_from_slice(&d.ts.to_be_bytes());
                out.extend_from_slice(&d.wrapped_key);
                out.extend_from_slice(&d.ciphertext);
            }
            Body::Refresh { m2: v } | Body::RefreshAck { proof: v } => out.extend_from_slice(v),
            Body::FailoverSync { mote, wrapped } => {
                out.extend_from_slice(&mote.0.to_be_bytes());
                out.extend_from_slice(wrapped);
            }
            Body::Promote { principal } => out.extend_from_slice(&principal.0.to_be_bytes()),
        }
        out
    }

    pub fn decode(kind: Kind, bytes: &[u8]) -> Result<Body, ProtocolError> {
        let exact = |n: usize| {
            if bytes.len() == n {
                Ok(())
            } else {
                Err(ProtocolError::Malformed(format!(
                    "{} body must be {n} bytes, got {}",
                    kind.name(),
                    bytes.len()
                )))
            }
        };
        let arr = |r: std::ops::Range<usize>| bytes[r].to_vec();
        let id = |i: usize| EntityId(u16::from_be_bytes([bytes[i], bytes[i + 1]]));
        Ok(match kind {
            Kind::JoinRequest | Kind::AuthQuery | Kind::AuthDeny => {
                exact(3)?;
                let s1 = arr(0..3).try_into().unwrap();
                match kind {
                    Kind::JoinRequest => Body::JoinRequest { s1 },
                    Kind::AuthQuery => Body::AuthQuery { s1 },
                    _ => Body::AuthDeny { s1 },
                }
            }
            Kind::AuthGrant => {
                exact(10)?;
                Body::AuthGrant {
                    s1: arr(0..3).try_into().unwrap(),
                    p: arr(3..10).try_into().unwrap(),
                }
            }
            Kind::KeyAssign => {
                exact(16)?;
                Body::KeyAssign {
                    a: arr(0..8).try_into().unwrap(),
                    b: arr(8..16).try_into().unwrap(),
                }
            }
            Kind::Data | Kind::InterForward => {
                if bytes.len() < DATA_FIXED_LEN + FRAME_OVERHEAD {
                    return Err(ProtocolError::Malformed(format!(
                        "{} body must be at least {} bytes, got {}",
                        kind.name(),
                        DATA_FIXED_LEN + FRAME_OVERHEAD,
                        bytes.len()
                    )));
                }
                let d = DataBody {
                    origin: id(0),
                    target: id(2),
                    ts: u32::from_be_bytes(bytes[4..8].try_into().unwrap()),
                    wrapped_key: arr(8..16).try_into().unwrap(),
                    ciphertext: bytes[16..].to_vec(),
                };
                if kind == Kind::Data {
                    Body::Data(d)
                } else {
                    Body::InterForward(d)
                }
            }
            Kind::Refresh | Kind::RefreshAck => {
                exact(8)?;
                let v = arr(0..8).try_into().unwrap();
                if kind == Kind::Refresh {
                    Body::Refresh { m2: v }
                } else {
                    Body::RefreshAck { proof: v }
                }
            }
            Kind::FailoverSync => {
                exact(10)?;
                Body::FailoverSync {
                    mote: id(0),
                    wrapped: arr(2..10).try_into().unwrap(),
                }
            }
            Kind::Promote => {
                exact(2)?;
                Body::Promote { principal: id(0) }
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub src: EntityId,
    pub dst: EntityId,
    pub body: Body,
}

impl Envelope {
    pub fn new(src: EntityId, dst: EntityId, body: Body) -> Self {
        Self { src, dst, body }
    }

    pub fn kind(&self) -> Kind {
        self.body.kind()
    }

    /// End-to-end message id for data-bearing envelopes.
    pub fn message_id(&self) -> Option<String> {
        match &self.body {
            Body::Data(d) | Body::InterForward(d) => Some(d.message_id()),
            _ => None,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let body = self.body.encode();
        let len = u16::try_from(body.len()).expect("envelope body exceeds 65535 bytes");
        let mut out = Vec::with_capacity(HEADER_LEN + body.len());
        out.push(self.kind().tag());
        out.extend_from_slice(&self.src.0.to_be_bytes());
        out.extend_from_slice(&self.dst.0.to_be_bytes());
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(&body);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Envelope, ProtocolError> {
        if bytes.len() < HEADER_LEN {
            return Err(ProtocolError::Malformed(format!(
                "header needs {HEADER_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        let kind = Kind::from_tag(bytes[0])
            .ok_or_else(|| ProtocolError::Malformed(format!("unknown kind tag {}", bytes[0])))?;
        let src = EntityId(u16::from_be_bytes([bytes[1], bytes[2]]));
        let dst = EntityId(u16::from_be_bytes([bytes[3], bytes[4]]));
        let len = u16::from_be_bytes([bytes[5], bytes[6]]) as usize;
        let body = &bytes[HEADER_LEN..];
        if body.len() != len {
            return Err(ProtocolError::Malformed(format!(
                "declared body length {len}, found {}",
                body.len()
            )));
        }
        Ok(Envelope {
            src,
            dst,
            body: Body::decode(kind, body)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn data_body() -> impl Strategy<Value = DataBody> {
        (any::<u16>(), any::<u16>(), any::<u32>(), any::<[u8; 8]>(), proptest::collection::vec(any::<u8>(), 6..80))
            .prop_map(|(o, t, ts, w, c)| DataBody {
                origin: EntityId(o),
                target: EntityId(t),
                ts,
                wrapped_key: w,
                ciphertext: c,
            })
    }

    fn body() -> impl Strategy<Value = Body> {
        prop_oneof![
            any::<[u8; 3]>().prop_map(|s1| Body::JoinRequest { s1 }),
            any::<[u8; 3]>().prop_map(|s1| Body::AuthQuery { s1 }),
            (any::<[u8; 3]>(), any::<[u8; 7]>()).prop_map(|(s1, p)| Body::AuthGrant { s1, p }),
            any::<[u8; 3]>().prop_map(|s1| Body::AuthDeny { s1 }),
            (any::<[u8; 8]>(), any::<[u8; 8]>()).prop_map(|(a, b)| Body::KeyAssign { a, b }),
            data_body().prop_map(Body::Data),
            data_body().prop_map(Body::InterForward),
            any::<[u8; 8]>().prop_map(|m2| Body::Refresh { m2 }),
            (any::<u16>(), any::<[u8; 8]>()).prop_map(|(m, w)| Body::FailoverSync { mote: EntityId(m), wrapped: w }),
            any::<u16>().prop_map(|p| Body::Promote { principal: EntityId(p) }),
            any::<[u8; 8]>().prop_map(|proof| Body::RefreshAck { proof }),
        ]
    }

    proptest! {
        #[test]
        fn wire_round_trip(src in any::<u16>(), dst in any::<u16>(), body in body()) {
            let env = Envelope::new(EntityId(src), EntityId(dst), body);
            let wire = env.encode();
            prop_assert_eq!(wire[0], env.kind().tag());
            prop_assert_eq!(u16::from_be_bytes([wire[5], wire[6]]) as usize, wire.len() - HEADER_LEN);
            prop_assert_eq!(Envelope::decode(&wire).unwrap(), env);
        }
    }

    #[test]
    fn join_request_layout() {
        let env = Envelope::new(EntityId(0x0102), EntityId(0x0304), Body::JoinRequest { s1: [0xA, 0xB, 0xC] });
        assert_eq!(env.encode(), vec![1, 1, 2, 3, 4, 0, 3, 0xA, 0xB, 0xC]);
    }

    #[test]
    fn unknown_kind_rejected() {
        let err = Envelope::decode(&[0x7F, 0, 1, 0, 2, 0, 0]).unwrap_err();
        assert!(matches!(err, ProtocolError::Malformed(m) if m.contains("unknown kind")));
    }

    #[test]
    fn wrong_body_lengths_rejected() {
        assert!(Body::decode(Kind::KeyAssign, &[0; 15]).is_err());
        assert!(Body::decode(Kind::Data, &[0; 21]).is_err());
        assert!(Body::decode(Kind::Data, &[0; 22]).is_ok());
        assert!(Envelope::decode(&[1, 0, 1, 0, 2, 0, 4, 1, 2, 3]).is_err());
    }
}
