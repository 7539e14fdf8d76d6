use std::fmt;

use serde::{Deserialize, Serialize};

use super::{parse_word, word_to_string, Symbol, Word};
use crate::error::{Error, Result};

/// An eventually periodic bi-infinite sequence.
///
/// Coordinates `start .. start + core.len()` hold `core`; to the right the word
/// `right` repeats forever (its first symbol sits at `start + core.len()`), to
/// the left the word `left` repeats (its last symbol sits at `start - 1`).
///
/// Values are always canonical: both tails are primitive, the core is as short
/// as possible, and a globally periodic sequence has an empty core anchored at
/// 0. Structural equality is therefore equality of sequences.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolicPoint {
    left: Word,
    core: Word,
    right: Word,
    start: i64,
}

impl SymbolicPoint {
    pub fn new(left: Word, core: Word, right: Word, start: i64) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidPoint("periodic tails must be non-empty".into()));
        }
        Ok(SymbolicPoint { left, core, right, start }.canonical())
    }

    /// The periodic point with `x_i = word[i mod len]`.
    pub fn periodic(word: &[Symbol]) -> Self {
        Self::periodic_with_phase(word, 0)
    }

    /// The periodic point with `x_i = word[(i - phase) mod len]`.
    pub fn periodic_with_phase(word: &[Symbol], phase: i64) -> Self {
        assert!(!word.is_empty(), "periodic word must be non-empty");
        let n = word.len() as i64;
        Self::from_fn(word.len(), word.len(), 0, 0, |i| word[(i - phase).rem_euclid(n) as usize])
    }

    /// Builds a point from a coordinate function that is `left_period`-periodic
    /// below `lo` and `right_period`-periodic from `hi` on.
    pub fn from_fn(
        left_period: usize,
        right_period: usize,
        lo: i64,
        hi: i64,
        f: impl Fn(i64) -> Symbol,
    ) -> Self {
        let hi = hi.max(lo);
        let left = (lo - left_period as i64..lo).map(&f).collect();
        let core = (lo..hi).map(&f).collect();
        let right = (hi..hi + right_period as i64).map(&f).collect();
        SymbolicPoint { left, core, right, start: lo }.canonical()
    }

    pub fn left_word(&self) -> &[Symbol] {
        &self.left
    }

    pub fn core(&self) -> &[Symbol] {
        &self.core
    }

    pub fn right_word(&self) -> &[Symbol] {
        &self.right
    }

    /// First coordinate of the core.
    pub fn start(&self) -> i64 {
        self.start
    }

    /// First coordinate of the right tail.
    pub fn end(&self) -> i64 {
        self.start + self.core.len() as i64
    }

    /// Symbol at coordinate `i`.
    pub fn at(&self, i: i64) -> Symbol {
        let end = self.end();
        if i >= end {
            self.right[(i - end).rem_euclid(self.right.len() as i64) as usize]
        } else if i >= self.start {
            self.core[(i - self.start) as usize]
        } else {
            let pl = self.left.len() as i64;
            self.left[(pl - 1 - (self.start - 1 - i).rem_euclid(pl)) as usize]
        }
    }

    /// Symbols on `lo..hi`.
    pub fn window(&self, lo: i64, hi: i64) -> Word {
        (lo..hi).map(|i| self.at(i)).collect()
    }

    /// Minimal period if the sequence is periodic.
    pub fn period(&self) -> Option<usize> {
        (self.core.is_empty() && self.left == self.right && self.start == 0).then_some(self.right.len())
    }

    /// `sigma^n(x)`: coordinate `i` of the result is `x_{i+n}`.
    pub fn shift(&self, n: i64) -> Self {
        SymbolicPoint { start: self.start - n, ..self.clone() }.canonical()
    }

    /// Largest `N` with `x_i = y_i` for all `|i| < N`, or `None` when the points
    /// coincide.
    pub fn agreement(&self, other: &Self) -> Option<u64> {
        if self == other {
            return None;
        }
        let bound = self.reach().max(other.reach()) + 1;
        for n in 0..=bound {
            if self.at(n) != other.at(n) || self.at(-n) != other.at(-n) {
                return Some(n as u64);
            }
        }
        unreachable!("distinct canonical points must differ within {bound} coordinates")
    }

    /// Radius beyond which two points that still agree must be equal.
    fn reach(&self) -> i64 {
        self.start.abs().max(self.end().abs()) + (self.left.len() + self.right.len()) as i64 * 2
    }

    /// Smallest `m` with `x_i = y_i` for every `i >= m`, if the points are
    /// forward asymptotic. Equal points give `None`; check equality first.
    pub fn stable_index(&self, other: &Self) -> Option<i64> {
        if self == other {
            return None;
        }
        let e = self.end().max(other.end());
        let span = (self.right.len() + other.right.len()) as i64;
        if (e..e + span).any(|i| self.at(i) != other.at(i)) {
            return None;
        }
        let mut m = e;
        while self.at(m - 1) == other.at(m - 1) {
            m -= 1;
        }
        Some(m)
    }

    /// Largest `u` with `x_i = y_i` for every `i <= u`, if the points are
    /// backward asymptotic. Equal points give `None`.
    pub fn unstable_index(&self, other: &Self) -> Option<i64> {
        if self == other {
            return None;
        }
        let s = self.start.min(other.start);
        let span = (self.left.len() + other.left.len()) as i64;
        if (s - span..s).any(|i| self.at(i) != other.at(i)) {
            return None;
        }
        let mut u = s - 1;
        while self.at(u + 1) == other.at(u + 1) {
            u += 1;
        }
        Some(u)
    }

    pub fn in_stable_set(&self, other: &Self) -> bool {
        self == other || self.stable_index(other).is_some()
    }

    pub fn in_unstable_set(&self, other: &Self) -> bool {
        self == other || self.unstable_index(other).is_some()
    }

    /// `x_n = y_n` for all `n >= 0`.
    pub fn in_local_stable_set(&self, other: &Self) -> bool {
        self == other || self.stable_index(other).is_some_and(|m| m <= 0)
    }

    /// `x_n = y_n` for all `n <= 0`.
    pub fn in_local_unstable_set(&self, other: &Self) -> bool {
        self == other || self.unstable_index(other).is_some_and(|u| u >= 0)
    }

    fn canonical(mut self) -> Self {
        self.left = primitive_root(&self.left);
        self.right = primitive_root(&self.right);
        let pl = self.left.len() as i64;
        let pr = self.right.len() as i64;

        // Extend the right tail leftwards as far as it stays periodic.
        let floor = self.start - pl - pr;
        let mut r = self.end();
        while r > floor && self.at(r - 1) == self.at(r - 1 + pr) {
            r -= 1;
        }
        if r == floor {
            let word = (0..pr).map(|i| self.at(i)).collect::<Word>();
            return SymbolicPoint { left: word.clone(), core: Vec::new(), right: word, start: 0 };
        }

        let mut l = self.start - 1;
        while self.at(l + 1) == self.at(l + 1 - pl) {
            l += 1;
        }
        let left = (l - pl + 1..=l).map(|i| self.at(i)).collect();
        if l < r {
            SymbolicPoint {
                left,
                core: (l + 1..r).map(|i| self.at(i)).collect(),
                right: (r..r + pr).map(|i| self.at(i)).collect(),
                start: l + 1,
            }
        } else {
            SymbolicPoint {
                left,
                core: Vec::new(),
                right: (l + 1..l + 1 + pr).map(|i| self.at(i)).collect(),
                start: l + 1,
            }
        }
    }
}

fn primitive_root(w: &[Symbol]) -> Word {
    let n = w.len();
    for d in 1..n {
        if n.is_multiple_of(d) && (d..n).all(|i| w[i] == w[i - d]) {
            return w[..d].to_vec();
        }
    }
    w.to_vec()
}

impl fmt::Display for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({})~[{}]({})~@{}",
            word_to_string(&self.left),
            word_to_string(&self.core),
            word_to_string(&self.right),
            self.start
        )
    }
}

impl fmt::Debug for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Serialize, Deserialize)]
struct PointDoc {
    left: String,
    core: String,
    right: String,
    start: i64,
}

impl Serialize for SymbolicPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PointDoc {
            left: word_to_string(&self.left),
            core: word_to_string(&self.core),
            right: word_to_string(&self.right),
            start: self.start,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymbolicPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = PointDoc::deserialize(d)?;
        let parse = |s: &str| parse_word(s).map_err(D::Error::custom);
        SymbolicPoint::new(parse(&doc.left)?, parse(&doc.core)?, parse(&doc.right)?, doc.start)
            .map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(l: &str, c: &str, r: &str, start: i64) -> SymbolicPoint {
        SymbolicPoint::new(
            parse_word(l).unwrap(),
            parse_word(c).unwrap(),
            parse_word(r).unwrap(),
            start,
        )
        .unwrap()
    }

    #[test]
    fn canonical_forms() {
        let a = pt("00", "000", "0", 5);
        assert_eq!(a, SymbolicPoint::periodic(&[0]));
        assert_eq!(a.period(), Some(1));

        let b = pt("0", "0010", "0", -3);
        assert_eq!(b.core(), &[1]);
        assert_eq!(b.start(), -1);

        // ...000 0111 0111...: the boundary is pushed as far right as possible
        let c = pt("0", "", "0111", 0);
        assert_eq!(c.core(), &[] as &[u8]);
        assert_eq!(c.start(), 1);
        assert_eq!(c.right_word(), &[1, 1, 1, 0]);
        assert_eq!(c.at(0), 0);
        assert_eq!(c.at(1), 1);

        let d = SymbolicPoint::periodic_with_phase(&[0, 1], 1);
        assert_eq!(d, SymbolicPoint::periodic(&[1, 0]));
        assert_eq!(d.period(), Some(2));
    }

    #[test]
    fn shift_examples() {
        let zero = SymbolicPoint::periodic(&[0]);
        assert_eq!(zero.shift(5), zero);
        let alt = SymbolicPoint::periodic(&[0, 1]);
        assert_eq!(alt.shift(1).at(0), 1);
        assert_eq!(alt.shift(1), SymbolicPoint::periodic(&[1, 0]));
        let y = pt("0", "1", "0", 0);
        let s = y.shift(3);
        assert_eq!(s.start(), -3);
        assert_eq!(s.at(-3), 1);
    }

    #[test]
    fn stable_and_unstable_indices() {
        let zero = SymbolicPoint::periodic(&[0]);
        let y = pt("1", "0", "0", 2); // ...111 | 0 0 0 ... with x_i = 1 for i < 2
        assert_eq!(zero.stable_index(&y), Some(2));
        assert!(zero.unstable_index(&y).is_none());
        assert!(!zero.in_local_stable_set(&y));
        assert!(zero.in_local_stable_set(&y.shift(2)));
        let w = pt("0", "1", "1", 3);
        assert_eq!(zero.unstable_index(&w), Some(2));
        assert!(zero.in_local_unstable_set(&w));
    }

    fn arb_point() -> impl Strategy<Value = SymbolicPoint> {
        (
            prop::collection::vec(0u8..3, 1..4),
            prop::collection::vec(0u8..3, 0..6),
            prop::collection::vec(0u8..3, 1..4),
            -6i64..6,
        )
            .prop_map(|(l, c, r, s)| SymbolicPoint::new(l, c, r, s).unwrap())
    }

    proptest! {
        #[test]
        fn canonical_form_preserves_sequence(
            l in prop::collection::vec(0u8..3, 1..4),
            c in prop::collection::vec(0u8..3, 0..6),
            r in prop::collection::vec(0u8..3, 1..4),
            s in -6i64..6,
        ) {
            let raw = SymbolicPoint { left: l, core: c, right: r, start: s };
            let canon = raw.clone().canonical();
            for i in -40..40 {
                prop_assert_eq!(raw.at(i), canon.at(i));
            }
            prop_assert_eq!(canon.clone().canonical(), canon);
        }

        #[test]
        fn shift_round_trip(x in arb_point(), n in -20i64..20) {
            prop_assert_eq!(x.shift(n).shift(-n), x.clone());
            for i in -10..10 {
                prop_assert_eq!(x.shift(n).at(i), x.at(i + n));
            }
        }

        #[test]
        fn agreement_matches_brute_force(x in arb_point(), y in arb_point()) {
            let brute = (0..200i64).find(|&n| x.at(n) != y.at(n) || x.at(-n) != y.at(-n));
            prop_assert_eq!(x.agreement(&y), brute.map(|n| n as u64));
        }
    }
}
