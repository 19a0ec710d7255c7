//! Elementary (radius-1, binary) cellular automata on a periodic ring.

use super::bitvec::BitVector;
use super::RcaError;

/// One of the 256 elementary rules.
///
/// `output(p)` is bit `p` of the rule number, where the neighborhood
/// `(left, center, right)` is read as the 3-bit number `left·4 + center·2 + right`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RuleTable {
    number: u8,
}

impl RuleTable {
    pub const IDENTITY: RuleTable = RuleTable { number: 204 };

    pub const fn new(number: u8) -> Self {
        Self { number }
    }

    pub fn number(self) -> u8 {
        self.number
    }

    pub fn output(self, left: bool, center: bool, right: bool) -> bool {
        let pattern = (left as u8) << 2 | (center as u8) << 1 | right as u8;
        self.lookup(pattern)
    }

    pub fn lookup(self, pattern: u8) -> bool {
        assert!(pattern < 8, "neighborhood pattern {pattern} out of range");
        (self.number >> pattern) & 1 == 1
    }

    /// Full 8-entry table, indexed by pattern.
    pub fn table(self) -> [bool; 8] {
        std::array::from_fn(|p| self.lookup(p as u8))
    }

    /// Word-parallel rule evaluation: each lane of `left`/`center`/`right`
    /// is an independent neighborhood.
    #[inline]
    pub(crate) fn eval_word(self, left: u64, center: u64, right: u64) -> u64 {
        let mut out = 0;
        for p in 0..8u8 {
            if (self.number >> p) & 1 == 1 {
                let l = if p & 4 != 0 { left } else { !left };
                let c = if p & 2 != 0 { center } else { !center };
                let r = if p & 1 != 0 { right } else { !right };
                out |= l & c & r;
            }
        }
        out
    }
}

impl From<u8> for RuleTable {
    fn from(number: u8) -> Self {
        Self::new(number)
    }
}

/// Writes one synchronous update of `src` into `dst` (both `len` cells).
pub(crate) fn step_words(rule: RuleTable, src: &[u64], dst: &mut [u64], len: usize) {
    debug_assert!(len >= 1);
    let last = src.len() - 1;
    let mask = BitVector::tail_mask(len);
    if last == 0 {
        let s = src[0];
        let (left, right) = if len == 64 {
            (s.rotate_left(1), s.rotate_right(1))
        } else {
            (
                ((s << 1) | (s >> (len - 1))) & mask,
                ((s >> 1) | (s << (len - 1))) & mask,
            )
        };
        dst[0] = rule.eval_word(left, s, right) & mask;
        return;
    }
    let top_bit = (len - 1) % 64;
    let last_cell = (src[last] >> top_bit) & 1;
    let first_cell = src[0] & 1;
    for w in 0..=last {
        let s = src[w];
        // left[i] = s[i-1], right[i] = s[i+1]
        let carry_in = if w == 0 { last_cell } else { src[w - 1] >> 63 };
        let left = (s << 1) | carry_in;
        let right = if w == last {
            (s >> 1) | (first_cell << top_bit)
        } else {
            (s >> 1) | ((src[w + 1] & 1) << 63)
        };
        dst[w] = rule.eval_word(left, s, right);
    }
    dst[last] &= mask;
}

pub fn apply_rule(rule: RuleTable, state: &BitVector) -> Result<BitVector, RcaError> {
    if state.is_empty() {
        return Err(RcaError::EmptyState);
    }
    let mut out = vec![0u64; state.words().len()];
    step_words(rule, state.words(), &mut out, state.len());
    Ok(BitVector::from_words(out, state.len()))
}

pub fn evolve(rule: RuleTable, state: &BitVector, steps: usize) -> Result<BitVector, RcaError> {
    if state.is_empty() {
        return Err(RcaError::EmptyState);
    }
    let len = state.len();
    let mut cur = state.words().to_vec();
    let mut next = vec![0u64; cur.len()];
    for _ in 0..steps {
        step_words(rule, &cur, &mut next, len);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(BitVector::from_words(cur, len))
}
