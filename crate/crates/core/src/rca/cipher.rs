//! CA keystream generator and the keyed involutive transform built on it.
//!
//! The key seeds a ring of `|key|` cells. After a warm-up, each further
//! generation contributes one keystream bit read from a fixed tap cell. The
//! transform XORs that keystream into the payload, so applying it twice with
//! the same key returns the payload.
//!
//! Keystream reuse is linear: two payloads under one key XOR to the XOR of
//! their ciphertexts. Protocol keys that wrap fresh random values avoid this;
//! callers wrapping structured data under a long-lived key do not.

use serde::{Deserialize, Serialize};

use super::bitvec::BitVector;
use super::rule::{step_words, RuleTable};
use super::RcaError;

pub const DEFAULT_RULE: u8 = 30;
pub const DEFAULT_WARMUP: usize = 64;
pub const MAX_WARMUP: usize = 1 << 16;
/// Smallest key accepted by [`rca_transform`] (the 3-byte serial size).
pub const MIN_TRANSFORM_KEY_BITS: usize = 24;
pub const MIN_SEED_BITS: usize = 3;

/// Which cell of the seed ring the keystream is read from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TapPolicy {
    /// `floor(n / 2)` for an `n`-cell ring.
    #[default]
    Center,
    Fixed(usize),
}

impl TapPolicy {
    fn resolve(self, ring: usize) -> Result<usize, RcaError> {
        match self {
            TapPolicy::Center => Ok(ring / 2),
            TapPolicy::Fixed(i) if i < ring => Ok(i),
            TapPolicy::Fixed(i) => Err(RcaError::TapOutOfRange { tap: i, ring }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeystreamParams {
    pub rule: u8,
    pub warmup_steps: usize,
    #[serde(default)]
    pub tap: TapPolicy,
}

impl Default for KeystreamParams {
    fn default() -> Self {
        Self {
            rule: DEFAULT_RULE,
            warmup_steps: DEFAULT_WARMUP,
            tap: TapPolicy::Center,
        }
    }
}

impl KeystreamParams {
    pub fn new(rule: u8, warmup_steps: usize) -> Result<Self, RcaError> {
        let p = Self {
            rule,
            warmup_steps,
            tap: TapPolicy::Center,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), RcaError> {
        if self.warmup_steps > MAX_WARMUP {
            return Err(RcaError::WarmupTooLong {
                steps: self.warmup_steps,
                max: MAX_WARMUP,
            });
        }
        Ok(())
    }
}

pub fn keystream(
    params: &KeystreamParams,
    seed: &BitVector,
    nbits: usize,
) -> Result<BitVector, RcaError> {
    params.validate()?;
    let n = seed.len();
    if n < MIN_SEED_BITS {
        return Err(RcaError::SeedTooShort {
            bits: n,
            min: MIN_SEED_BITS,
        });
    }
    let tap = params.tap.resolve(n)?;
    let rule = RuleTable::new(params.rule);
    let mut out = vec![0u64; nbits.div_ceil(64)];
    if n <= 64 {
        ring64_keystream(rule, seed.words()[0], n, params.warmup_steps, tap, nbits, &mut out);
    } else {
        let mut cur = seed.words().to_vec();
        let mut next = vec![0u64; cur.len()];
        for _ in 0..params.warmup_steps {
            step_words(rule, &cur, &mut next, n);
            std::mem::swap(&mut cur, &mut next);
        }
        for k in 0..nbits {
            step_words(rule, &cur, &mut next, n);
            std::mem::swap(&mut cur, &mut next);
            out[k / 64] |= ((cur[tap / 64] >> (tap % 64)) & 1) << (k % 64);
        }
    }
    Ok(BitVector::from_words(out, nbits))
}

/// Allocation-free path for rings that fit in one word.
fn ring64_keystream(
    rule: RuleTable,
    mut s: u64,
    n: usize,
    warmup: usize,
    tap: usize,
    nbits: usize,
    out: &mut [u64],
) {
    let mask = BitVector::tail_mask(n);
    let step = |s: u64| -> u64 {
        let (left, right) = if n == 64 {
            (s.rotate_left(1), s.rotate_right(1))
        } else {
            (
                ((s << 1) | (s >> (n - 1))) & mask,
                ((s >> 1) | (s << (n - 1))) & mask,
            )
        };
        rule.eval_word(left, s, right) & mask
    };
    for _ in 0..warmup {
        s = step(s);
    }
    for k in 0..nbits {
        s = step(s);
        out[k / 64] |= ((s >> tap) & 1) << (k % 64);
    }
}

/// Keyed transform with explicit parameters. See [`rca_transform`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RcaCipher {
    params: KeystreamParams,
}

impl RcaCipher {
    pub fn new(params: KeystreamParams) -> Result<Self, RcaError> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &KeystreamParams {
        &self.params
    }

    pub fn transform(&self, key: &BitVector, payload: &BitVector) -> Result<BitVector, RcaError> {
        if key.len() < MIN_TRANSFORM_KEY_BITS {
            return Err(RcaError::KeyTooShort {
                bits: key.len(),
                min: MIN_TRANSFORM_KEY_BITS,
            });
        }
        let ks = keystream(&self.params, key, payload.len())?;
        Ok(&ks ^ payload)
    }

    /// Byte-level transform; the key may be any length of at least 3 bytes.
    pub fn transform_bytes(&self, key: &[u8], payload: &[u8]) -> Result<Vec<u8>, RcaError> {
        self.transform(&BitVector::from_bytes(key), &BitVector::from_bytes(payload))
            .map(|v| v.to_bytes())
    }

    /// Message encryption; keys are restricted to 4 or 8 bytes.
    pub fn stream_encrypt(&self, key: &[u8], message: &[u8]) -> Result<Vec<u8>, RcaError> {
        if key.len() != 4 && key.len() != 8 {
            return Err(RcaError::BadKeyLength {
                bits: key.len() * 8,
            });
        }
        self.transform_bytes(key, message)
    }

    /// Fixed-size wrap of an 8-byte value.
    pub fn wrap8(&self, key: &[u8], value: &[u8; 8]) -> Result<[u8; 8], RcaError> {
        let v = self.transform_bytes(key, value)?;
        Ok(v.try_into().expect("transform preserves length"))
    }
}

/// `keystream(key, |payload|) XOR payload` under default parameters.
pub fn rca_transform(key: &BitVector, payload: &BitVector) -> Result<BitVector, RcaError> {
    RcaCipher::default().transform(key, payload)
}

pub fn stream_encrypt(key: &[u8], message: &[u8]) -> Result<Vec<u8>, RcaError> {
    RcaCipher::default().stream_encrypt(key, message)
}

/// Repeats `short` cyclically and truncates to `target_len` bytes.
pub fn xor_extend(short: &[u8], target_len: usize) -> Result<Vec<u8>, RcaError> {
    if short.is_empty() {
        return Err(RcaError::EmptyState);
    }
    Ok(short.iter().copied().cycle().take(target_len).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bv_hex(h: &str) -> BitVector {
        BitVector::from_hex(h).unwrap()
    }

    #[test]
    fn zero_bits_is_empty() {
        let ks = keystream(&KeystreamParams::default(), &bv_hex("deadbeef"), 0).unwrap();
        assert!(ks.is_empty());
    }

    #[test]
    fn identity_rule_freezes_tap() {
        let seed = bv_hex("00010000"); // cell 15 set
        for (tap, expect) in [(TapPolicy::Center, false), (TapPolicy::Fixed(15), true)] {
            let p = KeystreamParams {
                rule: 204,
                warmup_steps: 7,
                tap,
            };
            let ks = keystream(&p, &seed, 40).unwrap();
            assert_eq!(ks.len(), 40);
            assert!(ks.iter().all(|b| b == expect));
        }
    }

    #[test]
    fn zero_seed_is_rule30_fixed_point() {
        let ks = keystream(&KeystreamParams::default(), &BitVector::zeros(64), 500).unwrap();
        assert!(ks.is_all_zero());
        let y = bv_hex("0123456789");
        assert_eq!(rca_transform(&BitVector::zeros(32), &y).unwrap(), y);
    }

    #[test]
    fn short_seed_and_key_rejected() {
        let p = KeystreamParams::default();
        assert!(matches!(
            keystream(&p, &BitVector::zeros(2), 4),
            Err(RcaError::SeedTooShort { bits: 2, .. })
        ));
        assert!(matches!(
            rca_transform(&BitVector::zeros(16), &BitVector::zeros(8)),
            Err(RcaError::KeyTooShort { bits: 16, .. })
        ));
        assert!(matches!(
            stream_encrypt(&[1, 2, 3], b"abc"),
            Err(RcaError::BadKeyLength { bits: 24 })
        ));
    }

    #[test]
    fn warmup_bound_and_tap_range_enforced() {
        assert!(KeystreamParams::new(30, MAX_WARMUP + 1).is_err());
        let p = KeystreamParams {
            tap: TapPolicy::Fixed(32),
            ..Default::default()
        };
        assert!(matches!(
            keystream(&p, &BitVector::zeros(32), 1),
            Err(RcaError::TapOutOfRange { tap: 32, ring: 32 })
        ));
    }

    #[test]
    fn golden_vector() {
        let c = stream_encrypt(&0xDEAD_BEEFu32.to_be_bytes(), &0x0123_4567_89AB_CDEFu64.to_be_bytes())
            .unwrap();
        assert_eq!(hex::encode(c), "bbd7bd2c39a2eb78");
    }

    #[test]
    fn stream_encrypt_examples() {
        let kb = hex::decode("8899aabbccddeeff").unwrap();
        let m = b"k4y|s2!";
        let c = stream_encrypt(&kb, m).unwrap();
        assert_eq!(c.len(), 7);
        assert_ne!(&c[..], &m[..]);
        assert_eq!(stream_encrypt(&kb, &c).unwrap(), m);
        assert!(stream_encrypt(&kb, &[]).unwrap().is_empty());
    }

    #[test]
    fn xor_extend_examples() {
        assert_eq!(
            xor_extend(&[0xAA, 0xBB, 0xCC], 8).unwrap(),
            vec![0xAA, 0xBB, 0xCC, 0xAA, 0xBB, 0xCC, 0xAA, 0xBB]
        );
        assert_eq!(xor_extend(&[0xAA, 0xBB, 0xCC], 3).unwrap(), vec![0xAA, 0xBB, 0xCC]);
        assert_eq!(xor_extend(&[0xFF], 4).unwrap(), vec![0xFF; 4]);
        assert_eq!(xor_extend(&[], 4), Err(RcaError::EmptyState));
    }

    #[test]
    fn multiword_ring_matches_bytes_path() {
        // 96-cell ring goes through the generic stepper
        let key = bv_hex("0f1e2d3c4b5a69788796a5b4");
        let a = keystream(&KeystreamParams::default(), &key, 300).unwrap();
        let b = keystream(&KeystreamParams::default(), &key, 300).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 300);
    }

    proptest! {
        #[test]
        fn prefix_stable(seed in proptest::collection::vec(any::<u8>(), 1..12), n1 in 0usize..300, extra in 0usize..300) {
            let seed = BitVector::from_bytes(&seed);
            let p = KeystreamParams::default();
            let short = keystream(&p, &seed, n1).unwrap();
            let long = keystream(&p, &seed, n1 + extra).unwrap();
            prop_assert_eq!(short.len(), n1);
            for i in 0..n1 {
                prop_assert_eq!(short.get(i), long.get(i));
            }
        }

        #[test]
        fn involution_and_linearity(key in proptest::collection::vec(any::<u8>(), 3..9), y in proptest::collection::vec(any::<u8>(), 0..64)) {
            let key = BitVector::from_bytes(&key);
            let y1 = BitVector::from_bytes(&y);
            let y2 = BitVector::from_bytes(&y.iter().map(|b| b.rotate_left(3) ^ 0x5a).collect::<Vec<_>>());
            let c1 = rca_transform(&key, &y1).unwrap();
            let c2 = rca_transform(&key, &y2).unwrap();
            prop_assert_eq!(rca_transform(&key, &c1).unwrap(), y1.clone());
            prop_assert_eq!(&c1 ^ &c2, &y1 ^ &y2);
        }
    }
}
