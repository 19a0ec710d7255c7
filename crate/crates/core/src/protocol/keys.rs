use rand::RngCore;

/// Uniform random bytes, rerolled until not all zero.
pub fn random_nonzero<const N: usize>(rng: &mut dyn RngCore) -> [u8; N] {
    let mut out = [0u8; N];
    loop {
        rng.fill_bytes(&mut out);
        if !is_zero(&out) {
            return out;
        }
    }
}

pub fn is_zero(bytes: &[u8]) -> bool {
    bytes.iter().all(|&b| b == 0)
}

pub fn xor8(a: &[u8; 8], b: &[u8]) -> [u8; 8] {
    std::array::from_fn(|i| a[i] ^ b[i])
}

/// Preloaded secrets of one mote.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(C)]
pub struct MoteCredentials {
    pub k: [u8; 4],
    pub s1: [u8; 3],
    pub s2: [u8; 3],
}

impl MoteCredentials {
    pub const BYTES: usize = 10;

    /// `K ‖ S2`, the plaintext of the authentication grant.
    pub fn k_s2(&self) -> [u8; 7] {
        let mut out = [0u8; 7];
        out[..4].copy_from_slice(&self.k);
        out[4..].copy_from_slice(&self.s2);
        out
    }
}

/// Everything a mote stores persistently: credentials plus the base-station
/// key and its own operating key. The operational slots hold zeros until the
/// mote joins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(C)]
pub struct KeyMaterial {
    pub credentials: MoteCredentials,
    pub base_key: [u8; 8],
    pub operating_key: [u8; 8],
}

impl KeyMaterial {
    pub const BYTES: usize = std::mem::size_of::<KeyMaterial>();

    pub fn preloaded(credentials: MoteCredentials) -> Self {
        Self {
            credentials,
            base_key: [0; 8],
            operating_key: [0; 8],
        }
    }
}

const _: () = assert!(KeyMaterial::BYTES == 26);
const _: () = assert!(std::mem::size_of::<MoteCredentials>() == MoteCredentials::BYTES);
