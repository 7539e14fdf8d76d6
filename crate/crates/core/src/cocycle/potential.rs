use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{Portable, Scalar};
use crate::symbolic::SymbolicPoint;

/// `tau(x) = sum_i c_i v[x_i]` with `c_0 = center`, `c_i = right kappa^i` for
/// `i >= 1` and `c_i = left kappa^|i|` for `i <= -1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential<T: Scalar = f64> {
    pub kappa: T,
    pub left: T,
    pub center: T,
    pub right: T,
    pub values: Vec<T>,
}

impl<T: Scalar> Potential<T> {
    pub fn symmetric(kappa: T, amp: T, values: Vec<T>) -> Self {
        Potential { kappa, left: amp.clone(), center: amp.clone(), right: amp, values }
    }

    pub(crate) fn validate(&self, k: usize) -> Result<()> {
        if !(self.kappa > T::zero() && self.kappa < T::one()) {
            return Err(Error::InvalidCocycle(format!("drift decay {:?} must lie in (0, 1)", self.kappa.to_f64())));
        }
        if self.values.len() != k {
            return Err(Error::InvalidCocycle(format!(
                "drift has {} symbol values, space has {k} symbols",
                self.values.len()
            )));
        }
        Ok(())
    }

    pub fn coefficient(&self, i: i64) -> T {
        match i {
            0 => self.center.clone(),
            i if i > 0 => self.right.clone() * self.kappa.powi(i as u32),
            i => self.left.clone() * self.kappa.powi(i.unsigned_abs() as u32),
        }
    }

    /// Exact value on an eventually periodic point: explicit terms on the
    /// non-periodic part, geometric series on both tails.
    pub fn eval(&self, x: &SymbolicPoint) -> T {
        let a = x.start().min(0);
        let b = x.end().max(1);
        let v = |i: i64| self.values[x.at(i) as usize].clone();
        let mut total = T::zero();
        for i in a..b {
            total = total + self.coefficient(i) * v(i);
        }
        let one = T::one();
        let pr = x.right_word().len();
        let mut s = T::zero();
        let mut kp = T::one();
        for j in 0..pr {
            s = s + kp.clone() * v(b + j as i64);
            kp = kp * self.kappa.clone();
        }
        total = total + self.right.clone() * self.kappa.powi(b as u32) * s / (one.clone() - kp);
        let pl = x.left_word().len();
        let mut s = T::zero();
        let mut kp = T::one();
        for j in 0..pl {
            s = s + kp.clone() * v(a - 1 - j as i64);
            kp = kp * self.kappa.clone();
        }
        total + self.left.clone() * self.kappa.powi(a.unsigned_abs() as u32 + 1) * s / (one - kp)
    }

    /// `psi - psi o sigma` for `psi = self`; needs `center == right`.
    pub fn coboundary(&self) -> Result<Potential<T>> {
        if self.center != self.right {
            return Err(Error::Domain("coboundary needs center == right".into()));
        }
        let one = T::one();
        Ok(Potential {
            kappa: self.kappa.clone(),
            left: self.left.clone() * (one.clone() - self.kappa.clone()),
            center: self.center.clone() - self.left.clone() * self.kappa.clone(),
            right: self.right.clone() * (one.clone() - one / self.kappa.clone()),
            values: self.values.clone(),
        })
    }

    /// `sum_{|i| >= n} |c_i|`.
    pub fn tail_mass(&self, n: u64) -> f64 {
        let k = self.kappa.to_f64();
        let start = n.max(1) as i32;
        let sides = (self.left.to_f64().abs() + self.right.to_f64().abs()) * k.powi(start) / (1.0 - k);
        if n == 0 {
            sides + self.center.to_f64().abs()
        } else {
            sides
        }
    }

    /// Spread of the symbol values.
    pub fn value_span(&self) -> f64 {
        let vs: Vec<f64> = self.values.iter().map(Scalar::to_f64).collect();
        vs.iter().copied().fold(f64::MIN, f64::max) - vs.iter().copied().fold(f64::MAX, f64::min)
    }

    /// Bound on `|tau(x) - tau(y)|` for points agreeing on `|i| < n`.
    pub fn oscillation(&self, n: u64) -> f64 {
        self.value_span() * self.tail_mass(n)
    }

    pub fn to_float(&self) -> Potential<f64> {
        Potential {
            kappa: self.kappa.to_f64(),
            left: self.left.to_f64(),
            center: self.center.to_f64(),
            right: self.right.to_f64(),
            values: self.values.iter().map(Scalar::to_f64).collect(),
        }
    }
}

impl<T: Portable> Potential<T> {
    pub fn to_json(&self) -> Result<Value> {
        let enc = |v: &T| v.to_json().ok_or_else(|| Error::Json(format!("{v:?} is not representable")));
        let values: Result<Vec<Value>> = self.values.iter().map(enc).collect();
        Ok(json!({
            "kappa": enc(&self.kappa)?,
            "left": enc(&self.left)?,
            "center": enc(&self.center)?,
            "right": enc(&self.right)?,
            "values": values?,
        }))
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let num = |name: &str| {
            doc.get(name)
                .and_then(T::from_json)
                .ok_or_else(|| Error::Json(format!("drift field {name:?} missing or not a number")))
        };
        let values = doc
            .get("values")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Json("drift field \"values\" must be an array".into()))?
            .iter()
            .map(|v| T::from_json(v).ok_or_else(|| Error::Json(format!("bad drift value {v}"))))
            .collect::<Result<Vec<T>>>()?;
        Ok(Potential { kappa: num("kappa")?, left: num("left")?, center: num("center")?, right: num("right")?, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::symbolic::parse_word;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn brute(p: &Potential<f64>, x: &SymbolicPoint) -> f64 {
        (-80..=80).map(|i| p.coefficient(i) * p.values[x.at(i) as usize]).sum()
    }

    #[test]
    fn closed_form_matches_truncated_series() {
        let p = Potential { kappa: 0.5, left: 0.3, center: -0.2, right: 0.7, values: vec![0.1, 1.0, -0.4] };
        for (l, c, r, s) in [("0", "", "0", 0), ("01", "2", "12", -3), ("2", "0110", "01", 2), ("1", "20", "0", 5)] {
            let x = SymbolicPoint::new(parse_word(l).unwrap(), parse_word(c).unwrap(), parse_word(r).unwrap(), s).unwrap();
            assert!((p.eval(&x) - brute(&p, &x)).abs() < 1e-12);
        }
    }

    #[test]
    fn coboundary_telescopes_exactly() {
        let psi = Potential::symmetric(q(1, 2), q(1, 10), vec![q(0, 1), q(1, 1)]);
        let d = psi.coboundary().unwrap();
        for (l, c, r, s) in [("0", "1", "0", 0), ("01", "1101", "1", -2), ("1", "0", "10", 4)] {
            let x = SymbolicPoint::new(parse_word(l).unwrap(), parse_word(c).unwrap(), parse_word(r).unwrap(), s).unwrap();
            assert_eq!(d.eval(&x), psi.eval(&x) - psi.eval(&x.shift(1)));
        }
    }

    #[test]
    fn oscillation_bounds_differences() {
        let p = Potential::symmetric(0.5, 0.2, vec![0.0, 1.0]);
        let x = SymbolicPoint::new(vec![0], vec![1, 0, 1, 1, 0], vec![1], -2).unwrap();
        let y = SymbolicPoint::new(vec![1], vec![1, 0, 1, 1, 1], vec![0], -2).unwrap();
        let n = x.agreement(&y).unwrap();
        assert!((p.eval(&x) - p.eval(&y)).abs() <= p.oscillation(n) + 1e-15);
    }
}
