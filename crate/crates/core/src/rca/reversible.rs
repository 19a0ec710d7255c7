//! Second-order (Fredkin) reversible automata.
//!
//! The next state is `F(cur) XOR prev`, where `F` is any elementary rule.
//! Because XOR is its own inverse, the previous state is recovered exactly
//! from `(cur, next)` whatever rule is chosen.

use super::bitvec::BitVector;
use super::rule::{apply_rule, RuleTable};
use super::RcaError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecondOrderState {
    prev: BitVector,
    cur: BitVector,
}

impl SecondOrderState {
    pub fn new(prev: BitVector, cur: BitVector) -> Result<Self, RcaError> {
        if prev.len() != cur.len() {
            return Err(RcaError::LengthMismatch {
                left: prev.len(),
                right: cur.len(),
            });
        }
        Ok(Self { prev, cur })
    }

    pub fn prev(&self) -> &BitVector {
        &self.prev
    }

    pub fn cur(&self) -> &BitVector {
        &self.cur
    }

    /// Advances in place: `(prev, cur) -> (cur, next)`.
    pub fn advance(&mut self, rule: RuleTable) -> Result<(), RcaError> {
        let next = second_order_step(rule, self)?;
        self.prev = std::mem::replace(&mut self.cur, next);
        Ok(())
    }

    /// Steps backwards in place: `(prev, cur) -> (prev', prev)`.
    pub fn retreat(&mut self, rule: RuleTable) -> Result<(), RcaError> {
        let earlier = second_order_reverse(rule, &self.prev, &self.cur)?;
        self.cur = std::mem::replace(&mut self.prev, earlier);
        Ok(())
    }
}

pub fn second_order_step(rule: RuleTable, s: &SecondOrderState) -> Result<BitVector, RcaError> {
    let image = apply_rule(rule, &s.cur)?;
    Ok(&image ^ &s.prev)
}

/// Recovers `prev` from `(cur, next)`.
pub fn second_order_reverse(
    rule: RuleTable,
    cur: &BitVector,
    next: &BitVector,
) -> Result<BitVector, RcaError> {
    if cur.len() != next.len() {
        return Err(RcaError::LengthMismatch {
            left: cur.len(),
            right: next.len(),
        });
    }
    let image = apply_rule(rule, cur)?;
    Ok(&image ^ next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    #[test]
    fn step_examples() {
        let p = bv("10110");
        let c = bv("01100");
        let s = SecondOrderState::new(p.clone(), c.clone()).unwrap();
        assert_eq!(second_order_step(0.into(), &s).unwrap(), p);
        assert_eq!(second_order_step(204.into(), &s).unwrap(), &p ^ &c);
        let s = SecondOrderState::new(bv("000"), bv("001")).unwrap();
        assert_eq!(second_order_step(30.into(), &s).unwrap(), bv("111"));
    }

    #[test]
    fn reverse_examples() {
        assert_eq!(
            second_order_reverse(0.into(), &bv("1100"), &bv("0110")).unwrap(),
            bv("0110")
        );
        assert_eq!(
            second_order_reverse(30.into(), &bv("001"), &bv("111")).unwrap(),
            bv("000")
        );
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(matches!(
            SecondOrderState::new(bv("01"), bv("011")),
            Err(RcaError::LengthMismatch { left: 2, right: 3 })
        ));
        assert!(second_order_reverse(30.into(), &bv("01"), &bv("011")).is_err());
    }

    #[test]
    fn advance_then_retreat_returns_to_start() {
        let start = SecondOrderState::new(bv("1001011010"), bv("0111000101")).unwrap();
        let mut s = start.clone();
        for _ in 0..25 {
            s.advance(90.into()).unwrap();
        }
        for _ in 0..25 {
            s.retreat(90.into()).unwrap();
        }
        assert_eq!(s, start);
    }

    proptest! {
        #[test]
        fn reverse_undoes_step(rule in any::<u8>(), pairs in proptest::collection::vec(any::<(bool, bool)>(), 1..100)) {
            let (p, c): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let prev = BitVector::from_bits(p);
            let s = SecondOrderState::new(prev.clone(), BitVector::from_bits(c)).unwrap();
            let next = second_order_step(rule.into(), &s).unwrap();
            prop_assert_eq!(next.len(), prev.len());
            prop_assert_eq!(second_order_reverse(rule.into(), s.cur(), &next).unwrap(), prev);
        }
    }
}
