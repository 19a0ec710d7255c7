//! Central server: authoritative credential table and base-station keys.
//!
//! Persistence format is plain text, one record per line. Credential lines
//! have four fields `S1_hex,K_hex,S2_hex,consumed` (`consumed` is `0` or
//! `1`); base-station lines have two fields `bs_id,K_B_hex`. Blank lines and
//! lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::RngCore;

use crate::rca::RcaCipher;

use super::envelope::{Body, Envelope};
use super::error::ProtocolError;
use super::ids::{EntityId, CENTRAL_SERVER};
use super::keys::{random_nonzero, MoteCredentials};

const PROVISION_RETRIES: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CredentialEntry {
    pub k: [u8; 4],
    pub s2: [u8; 3],
    pub consumed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CentralServerRegistry {
    credentials: BTreeMap<[u8; 3], CredentialEntry>,
    base_stations: BTreeMap<EntityId, [u8; 8]>,
    capacity: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryFileError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CentralServerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity_limit(limit: usize) -> Self {
        Self {
            capacity: Some(limit),
            ..Self::default()
        }
    }

    pub fn register_base_station(&mut self, id: EntityId, key: [u8; 8]) {
        self.base_stations.insert(id, key);
    }

    pub fn base_station_key(&self, id: EntityId) -> Option<&[u8; 8]> {
        self.base_stations.get(&id)
    }

    pub fn credential(&self, s1: &[u8; 3]) -> Option<&CredentialEntry> {
        self.credentials.get(s1)
    }

    pub fn len(&self) -> usize {
        self.credentials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.credentials.is_empty()
    }

    /// Draws fresh nonzero credentials with an unused S1 and registers them.
    pub fn provision_mote(
        &mut self,
        rng: &mut dyn RngCore,
    ) -> Result<MoteCredentials, ProtocolError> {
        if self.capacity.is_some_and(|c| self.credentials.len() >= c) {
            return Err(ProtocolError::Provisioning("registry is full"));
        }
        let k = random_nonzero::<4>(rng);
        let s1 = (0..PROVISION_RETRIES)
            .map(|_| random_nonzero::<3>(rng))
            .find(|s1| !self.credentials.contains_key(s1))
            .ok_or(ProtocolError::Provisioning("could not draw an unused S1"))?;
        let s2 = random_nonzero::<3>(rng);
        self.credentials.insert(
            s1,
            CredentialEntry {
                k,
                s2,
                consumed: false,
            },
        );
        Ok(MoteCredentials { k, s1, s2 })
    }

    /// Answers a base station's query for `s1`.
    ///
    /// A known, unconsumed serial is marked consumed and answered with
    /// `P = E_{K_B}(K ‖ S2)`. Unknown or already used serials get a denial.
    /// With `allow_reuse` a consumed serial is granted again.
    pub fn authenticate(
        &mut self,
        cipher: &RcaCipher,
        bs: EntityId,
        s1: [u8; 3],
        allow_reuse: bool,
    ) -> Result<Envelope, ProtocolError> {
        let kb = *self
            .base_stations
            .get(&bs)
            .ok_or(ProtocolError::UnknownBaseStation(bs))?;
        let body = match self.credentials.get_mut(&s1) {
            Some(entry) if !entry.consumed || allow_reuse => {
                entry.consumed = true;
                let mut plain = [0u8; 7];
                plain[..4].copy_from_slice(&entry.k);
                plain[4..].copy_from_slice(&entry.s2);
                let p = cipher.stream_encrypt(&kb, &plain)?;
                Body::AuthGrant {
                    s1,
                    p: p.try_into().expect("7-byte grant"),
                }
            }
            _ => Body::AuthDeny { s1 },
        };
        Ok(Envelope::new(CENTRAL_SERVER, bs, body))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# S1,K,S2,consumed\n");
        for (s1, e) in &self.credentials {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                hex::encode(s1),
                hex::encode(e.k),
                hex::encode(e.s2),
                e.consumed as u8
            );
        }
        out.push_str("# bs_id,K_B\n");
        for (id, kb) in &self.base_stations {
            let _ = writeln!(out, "{},{}", id.0, hex::encode(kb));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, RegistryFileError> {
        fn fixed<const N: usize>(line: usize, field: &str, s: &str) -> Result<[u8; N], RegistryFileError> {
            let bytes = hex::decode(s).map_err(|e| RegistryFileError::Parse {
                line,
                msg: format!("{field}: {e}"),
            })?;
            bytes.try_into().map_err(|_| RegistryFileError::Parse {
                line,
                msg: format!("{field} must be {N} bytes"),
            })
        }
        let mut reg = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
            match fields.as_slice() {
                [s1, k, s2, consumed] => {
                    let s1 = fixed::<3>(line, "S1", s1)?;
                    let consumed = match *consumed {
                        "0" => false,
                        "1" => true,
                        other => {
                            return Err(RegistryFileError::Parse {
                                line,
                                msg: format!("consumed flag must be 0 or 1, got {other:?}"),
                            })
                        }
                    };
                    let entry = CredentialEntry {
                        k: fixed::<4>(line, "K", k)?,
                        s2: fixed::<3>(line, "S2", s2)?,
                        consumed,
                    };
                    if reg.credentials.insert(s1, entry).is_some() {
                        return Err(RegistryFileError::Parse {
                            line,
                            msg: format!("duplicate S1 {}", hex::encode(s1)),
                        });
                    }
                }
                [id, kb] => {
                    let id: u16 = id.parse().map_err(|e| RegistryFileError::Parse {
                        line,
                        msg: format!("bs_id: {e}"),
                    })?;
                    reg.register_base_station(EntityId(id), fixed::<8>(line, "K_B", kb)?);
                }
                _ => {
                    return Err(RegistryFileError::Parse {
                        line,
                        msg: format!("expected 2 or 4 fields, got {}", fields.len()),
                    })
                }
            }
        }
        Ok(reg)
    }

    pub fn save(&self, path: &Path) -> Result<(), RegistryFileError> {
        std::fs::write(path, self.to_text()).map_err(|source| RegistryFileError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, RegistryFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| RegistryFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const BS: EntityId = EntityId(1);
    const KB: [u8; 8] = [9, 8, 7, 6, 5, 4, 3, 2];

    fn registry() -> CentralServerRegistry {
        let mut r = CentralServerRegistry::new();
        r.register_base_station(BS, KB);
        r
    }

    #[test]
    fn provisions_distinct_nonzero_credentials() {
        let mut reg = registry();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = reg.provision_mote(&mut rng).unwrap();
        let b = reg.provision_mote(&mut rng).unwrap();
        assert_ne!(a.s1, b.s1);
        for c in [a, b] {
            assert!(c.k != [0; 4] && c.s1 != [0; 3] && c.s2 != [0; 3]);
            assert_eq!(c.k.len() + c.s1.len() + c.s2.len(), 10);
            assert!(!reg.credential(&c.s1).unwrap().consumed);
        }
    }

    #[test]
    fn provisioning_is_reproducible() {
        let run = || {
            let mut reg = registry();
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            (0..20).map(|_| reg.provision_mote(&mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn capacity_limit_enforced() {
        let mut reg = CentralServerRegistry::with_capacity_limit(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        reg.provision_mote(&mut rng).unwrap();
        assert!(matches!(reg.provision_mote(&mut rng), Err(ProtocolError::Provisioning(_))));
    }

    #[test]
    fn grant_decrypts_to_k_and_s2_once() {
        let cipher = RcaCipher::default();
        let mut reg = registry();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let creds = reg.provision_mote(&mut rng).unwrap();
        let env = reg.authenticate(&cipher, BS, creds.s1, false).unwrap();
        let Body::AuthGrant { s1, p } = env.body else {
            panic!("expected grant, got {env:?}");
        };
        assert_eq!(s1, creds.s1);
        assert_eq!(cipher.stream_encrypt(&KB, &p).unwrap(), creds.k_s2());
        let again = reg.authenticate(&cipher, BS, creds.s1, false).unwrap();
        assert!(matches!(again.body, Body::AuthDeny { .. }));
        let reused = reg.authenticate(&cipher, BS, creds.s1, true).unwrap();
        assert!(matches!(reused.body, Body::AuthGrant { .. }));
    }

    #[test]
    fn fabricated_serial_denied_and_unknown_bs_is_error() {
        let cipher = RcaCipher::default();
        let mut reg = registry();
        let env = reg.authenticate(&cipher, BS, [1, 2, 3], false).unwrap();
        assert_eq!(env.body, Body::AuthDeny { s1: [1, 2, 3] });
        assert_eq!(
            reg.authenticate(&cipher, EntityId(9), [1, 2, 3], false),
            Err(ProtocolError::UnknownBaseStation(EntityId(9)))
        );
    }

    #[test]
    fn text_round_trip_and_errors() {
        let mut reg = registry();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = reg.provision_mote(&mut rng).unwrap();
        reg.provision_mote(&mut rng).unwrap();
        reg.authenticate(&RcaCipher::default(), BS, c.s1, false).unwrap();
        let text = reg.to_text();
        assert!(text.contains(&format!("{},{},{},1", hex::encode(c.s1), hex::encode(c.k), hex::encode(c.s2))));
        assert!(text.contains("1,0908070605040302"));
        assert_eq!(CentralServerRegistry::from_text(&text).unwrap(), reg);

        let err = CentralServerRegistry::from_text("abc,01020304,aabbcc,0\n").unwrap_err();
        assert!(err.to_string().contains("line 1"));
        assert!(CentralServerRegistry::from_text("aabbcc,01020304,aabbcc,2").is_err());
        assert!(CentralServerRegistry::from_text("1,2,3").is_err());
    }

    #[test]
    fn save_and_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("registry.txt");
        let mut reg = registry();
        reg.provision_mote(&mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        reg.save(&path).unwrap();
        assert_eq!(CentralServerRegistry::load(&path).unwrap(), reg);
        assert!(CentralServerRegistry::load(&dir.path().join("missing")).is_err());
    }
}
