//! Cocycles over a shift of finite type with values in circle maps.
//!
//! A generator is a table indexed by the central word `x_{-w} .. x_w`,
//! optionally followed by a rotation through a sum of geometric potentials
//! (the drift), which makes the cocycle depend on every coordinate while
//! staying Hölder.

mod analysis;
mod potential;

pub use analysis::{
    check_bounded_distortion, check_domination, holder_const_cocycle, CocycleHolder, DistortionReport,
    DominationReport,
};
pub use potential::Potential;

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::lipmaps::PlMap;
use crate::scalar::{Portable, Scalar};
use crate::symbolic::{parse_word, word_to_string, SftSpace, SymbolicPoint, Word};

/// Largest breakpoint count allowed for an iterated map.
pub const BREAKPOINT_CAP: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct CocycleSpec<T: Scalar = f64> {
    space: SftSpace,
    window: usize,
    alpha: f64,
    table: BTreeMap<Word, PlMap<T>>,
    drift: Vec<Potential<T>>,
}

impl<T: Scalar> CocycleSpec<T> {
    pub fn new(
        space: SftSpace,
        window: usize,
        alpha: f64,
        table: BTreeMap<Word, PlMap<T>>,
        drift: Vec<Potential<T>>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidExponent(alpha));
        }
        let words = space.admissible_words(2 * window + 1);
        if words.len() != table.len() || words.iter().any(|w| !table.contains_key(w)) {
            let missing: Vec<String> =
                words.iter().filter(|w| !table.contains_key(*w)).map(|w| word_to_string(w)).collect();
            let extra: Vec<String> =
                table.keys().filter(|w| !space.is_admissible_word(w) || w.len() != 2 * window + 1).map(|w| word_to_string(w)).collect();
            return Err(Error::InvalidCocycle(format!(
                "table must cover the admissible words of length {}: missing {missing:?}, unexpected {extra:?}",
                2 * window + 1
            )));
        }
        let limit = space.rho().powf(-alpha) * (1.0 + 1e-12);
        for p in &drift {
            p.validate(space.k())?;
            if p.kappa.to_f64() > limit {
                return Err(Error::InvalidCocycle(format!(
                    "drift decay {} exceeds rho^-alpha = {}; the potential would not be alpha-Hölder",
                    p.kappa.to_f64(),
                    space.rho().powf(-alpha)
                )));
            }
        }
        Ok(CocycleSpec { space, window, alpha, table, drift })
    }

    /// Builds the table from a function of the central word.
    pub fn from_fn(space: SftSpace, window: usize, alpha: f64, mut f: impl FnMut(&[u8]) -> PlMap<T>) -> Result<Self> {
        let table = space.admissible_words(2 * window + 1).into_iter().map(|w| {
            let m = f(&w);
            (w, m)
        });
        Self::new(space, window, alpha, table.collect(), Vec::new())
    }

    pub fn constant(space: SftSpace, map: PlMap<T>) -> Self {
        Self::from_fn(space, 0, 1.0, |_| map.clone()).expect("constant table is valid")
    }

    pub fn with_drift(mut self, p: Potential<T>) -> Result<Self> {
        let mut drift = std::mem::take(&mut self.drift);
        drift.push(p);
        Self::new(self.space, self.window, self.alpha, self.table, drift)
    }

    pub fn space(&self) -> &SftSpace {
        &self.space
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn table(&self) -> &BTreeMap<Word, PlMap<T>> {
        &self.table
    }

    pub fn drift(&self) -> &[Potential<T>] {
        &self.drift
    }

    /// Applies `f` to every table entry, keeping window and drift.
    pub fn map_entries(&self, mut f: impl FnMut(&[u8], &PlMap<T>) -> PlMap<T>) -> Self {
        let table = self.table.iter().map(|(w, m)| (w.clone(), f(w, m))).collect();
        CocycleSpec { table, ..self.clone() }
    }

    pub fn central_word(&self, x: &SymbolicPoint) -> Word {
        let w = self.window as i64;
        x.window(-w, w + 1)
    }

    /// Total drift angle at `x`.
    pub fn drift_at(&self, x: &SymbolicPoint) -> T {
        self.drift.iter().fold(T::zero(), |acc, p| acc + p.eval(x))
    }

    /// `f_x`.
    pub fn evaluate_generator(&self, x: &SymbolicPoint) -> PlMap<T> {
        let base = &self.table[&self.central_word(x)];
        if self.drift.is_empty() {
            base.clone()
        } else {
            base.then_rotate(&self.drift_at(x))
        }
    }

    /// `f^n_x`; for negative `n` this is `(f^{|n|}_{sigma^n x})^-1`.
    pub fn iterate(&self, x: &SymbolicPoint, n: i64) -> Result<PlMap<T>> {
        if n < 0 {
            return Ok(self.iterate(&x.shift(n), -n)?.invert());
        }
        let mut acc = PlMap::identity();
        let mut y = x.clone();
        for _ in 0..n {
            acc = self.evaluate_generator(&y).compose(&acc);
            if acc.kinks() > BREAKPOINT_CAP {
                return Err(Error::ResourceLimit(format!(
                    "iterate reached {} breakpoints (cap {BREAKPOINT_CAP})",
                    acc.kinks()
                )));
            }
            y = y.shift(1);
        }
        Ok(acc)
    }

    /// Whether every generator is a rotation.
    pub fn is_isometric(&self) -> bool {
        self.table.values().all(PlMap::is_rotation)
    }

    pub fn to_float(&self) -> CocycleSpec<f64> {
        CocycleSpec {
            space: self.space.clone(),
            window: self.window,
            alpha: self.alpha,
            table: self.table.iter().map(|(w, m)| (w.clone(), m.to_float())).collect(),
            drift: self.drift.iter().map(Potential::to_float).collect(),
        }
    }
}

impl<T: Portable> CocycleSpec<T> {
    /// `{"window", "alpha", "table": {word: map}, "drift": [...]}`; the space
    /// is stored separately.
    pub fn to_json(&self) -> Result<Value> {
        let mut table = Map::new();
        for (w, m) in &self.table {
            table.insert(word_to_string(w), serde_json::to_value(m)?);
        }
        let mut doc = json!({ "window": self.window, "alpha": self.alpha, "table": table });
        if !self.drift.is_empty() {
            let drift: Result<Vec<Value>> = self.drift.iter().map(Potential::to_json).collect();
            doc["drift"] = Value::Array(drift?);
        }
        Ok(doc)
    }

    pub fn from_json(space: SftSpace, doc: &Value) -> Result<Self> {
        let field = |name: &str| doc.get(name).ok_or_else(|| Error::Json(format!("missing field {name:?}")));
        let window = field("window")?
            .as_u64()
            .ok_or_else(|| Error::Json("\"window\" must be a non-negative integer".into()))? as usize;
        let alpha = match doc.get("alpha") {
            None => 1.0,
            Some(a) => a.as_f64().ok_or_else(|| Error::Json("\"alpha\" must be a number".into()))?,
        };
        let entries = field("table")?.as_object().ok_or_else(|| Error::Json("\"table\" must be an object".into()))?;
        let mut table = BTreeMap::new();
        for (key, m) in entries {
            let map: PlMap<T> =
                serde_json::from_value(m.clone()).map_err(|e| Error::Json(format!("table[{key:?}]: {e}")))?;
            table.insert(parse_word(key)?, map);
        }
        let drift = match doc.get("drift") {
            None => Vec::new(),
            Some(Value::Array(items)) => items.iter().map(Potential::from_json).collect::<Result<_>>()?,
            Some(_) => return Err(Error::Json("\"drift\" must be an array".into())),
        };
        Self::new(space, window, alpha, table, drift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lipmaps::{d_inf, family_fb};
    use crate::scalar::Rational;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(l: &str, c: &str, r: &str, s: i64) -> SymbolicPoint {
        SymbolicPoint::new(parse_word(l).unwrap(), parse_word(c).unwrap(), parse_word(r).unwrap(), s).unwrap()
    }

    fn rot_spec() -> CocycleSpec<Rational> {
        let angles = [Rational::from_ratio(1, 8), Rational::from_ratio(1, 3)];
        CocycleSpec::from_fn(SftSpace::full_shift(2), 0, 1.0, |w| PlMap::rotation(angles[w[0] as usize].clone()))
            .unwrap()
    }

    #[test]
    fn lookup_and_validation() {
        let space = SftSpace::full_shift(2);
        let c = CocycleSpec::from_fn(space.clone(), 0, 1.0, |w| {
            if w[0] == 1 { PlMap::rotation(0.25) } else { PlMap::identity() }
        })
        .unwrap();
        assert_eq!(c.evaluate_generator(&pt("0", "1", "0", 0)), PlMap::rotation(0.25));
        assert_eq!(c.evaluate_generator(&pt("1", "0", "1", 0)), PlMap::identity());
        let mut table = c.table().clone();
        table.remove(&vec![1]);
        assert!(matches!(CocycleSpec::new(space.clone(), 0, 1.0, table, vec![]), Err(Error::InvalidCocycle(_))));
        assert!(CocycleSpec::new(space, 0, 0.0, c.table().clone(), vec![]).is_err());
        let k = CocycleSpec::constant(SftSpace::golden_mean(), family_fb(0.25).unwrap());
        assert_eq!(k.evaluate_generator(&pt("0", "1", "0", 3)), family_fb(0.25).unwrap());
    }

    #[test]
    fn window_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c: CocycleSpec<f64> =
            CocycleSpec::from_fn(SftSpace::full_shift(2), 1, 1.0, |_| PlMap::random(&mut rng, 3, 32, 3)).unwrap();
        let x = pt("0", "0110", "1", -1);
        let y = pt("1", "011", "0", -1);
        assert_eq!(c.central_word(&x), c.central_word(&y));
        assert_eq!(c.evaluate_generator(&x), c.evaluate_generator(&y));
    }

    #[test]
    fn rotation_iterates_sum_angles() {
        let c = rot_spec();
        let x = pt("0", "1101", "01", -2);
        assert!(c.iterate(&x, 0).unwrap().is_identity());
        for n in 1..12i64 {
            let angle = (0..n).fold(Rational::from_int(0), |acc, i| {
                acc + if x.at(i) == 0 { Rational::from_ratio(1, 8) } else { Rational::from_ratio(1, 3) }
            });
            assert_eq!(c.iterate(&x, n).unwrap(), PlMap::rotation(angle));
        }
    }

    #[test]
    fn two_steps_unroll() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c: CocycleSpec<Rational> =
            CocycleSpec::from_fn(SftSpace::golden_mean(), 1, 1.0, |_| PlMap::random(&mut rng, 3, 16, 3)).unwrap();
        let x = pt("0", "10", "0", 0);
        let two = c.evaluate_generator(&x.shift(1)).compose(&c.evaluate_generator(&x));
        assert_eq!(c.iterate(&x, 2).unwrap(), two);
    }

    #[test]
    fn json_round_trip() {
        let c = rot_spec().with_drift(Potential::symmetric(
            Rational::from_ratio(1, 2),
            Rational::from_ratio(1, 20),
            vec![Rational::from_int(0), Rational::from_int(1)],
        ))
        .unwrap();
        let doc = c.to_json().unwrap();
        assert_eq!(doc["table"]["1"]["values"][0], json!([1, 3]));
        let back = CocycleSpec::<Rational>::from_json(SftSpace::full_shift(2), &doc).unwrap();
        assert_eq!(back, c);
        let f = c.to_float();
        let fdoc = f.to_json().unwrap();
        assert_eq!(CocycleSpec::<f64>::from_json(SftSpace::full_shift(2), &fdoc).unwrap(), f);
        let bad = json!({"window": 0, "table": {"0": fdoc["table"]["0"]}});
        assert!(CocycleSpec::<f64>::from_json(SftSpace::full_shift(2), &bad).is_err());
    }

    #[test]
    fn fast_drift_is_rejected() {
        let c = rot_spec();
        let p = Potential::symmetric(Rational::from_ratio(3, 4), Rational::from_int(1), vec![
            Rational::from_int(0),
            Rational::from_int(1),
        ]);
        assert!(matches!(c.with_drift(p), Err(Error::InvalidCocycle(_))));
    }

    fn random_spec(seed: u64) -> CocycleSpec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CocycleSpec::from_fn(SftSpace::golden_mean(), 1, 1.0, |_| PlMap::random(&mut rng, 3, 64, 3))
            .unwrap()
            .with_drift(Potential::symmetric(0.5, 0.03, vec![0.0, 1.0]))
            .unwrap()
    }

    proptest! {
        #[test]
        fn cocycle_law(seed in any::<u64>(), n in -6i64..=6, m in -6i64..=6, core in proptest::collection::vec(0u8..2, 1..8)) {
            let c = random_spec(seed);
            let mut w = core.clone();
            for i in 1..w.len() {
                if w[i - 1] == 1 && w[i] == 1 {
                    w[i] = 0;
                }
            }
            let x = SymbolicPoint::new(vec![0], w, vec![0], -2).unwrap();
            let lhs = c.iterate(&x, n + m).unwrap();
            let rhs = c.iterate(&x.shift(n), m).unwrap().compose(&c.iterate(&x, n).unwrap());
            prop_assert!(d_inf(&lhs, &rhs) <= 1e-10);
            let back = c.iterate(&x, -n.abs()).unwrap();
            let fwd = c.iterate(&x.shift(-n.abs()), n.abs()).unwrap().invert();
            prop_assert!(d_inf(&back, &fwd) <= 1e-12);
        }
    }
}
