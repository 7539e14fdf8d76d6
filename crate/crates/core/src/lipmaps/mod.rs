//! Piecewise-linear orientation-preserving circle homeomorphisms.
//!
//! The circle has circumference 1. A map is stored through a degree-1 lift
//! `F` with `F(x + 1) = F(x) + 1`: breakpoints `xs` in `[0, 1)` and lift values
//! `ys`, linear in between and across the wrap from the last breakpoint to
//! `xs[0] + 1`. Lifts are normalized so that `F(0)` lies in `[0, 1)`.

mod holder;
mod json;
mod metric;

pub use holder::{holder_const, holder_const_tol, DEFAULT_HOLDER_TOL};
pub use metric::{d_1, d_inf, d_max, lip_seminorm_diff, metric_report, MetricReport};

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct PlMap<T: Scalar = f64> {
    xs: Vec<T>,
    ys: Vec<T>,
}

impl<T: Scalar> PlMap<T> {
    pub fn identity() -> Self {
        Self::rotation(T::zero())
    }

    /// Rotation by `r`. Rotations keep a single node at 0 and have no kinks.
    pub fn rotation(r: T) -> Self {
        PlMap { xs: vec![T::zero()], ys: vec![r.frac()] }
    }

    /// Builds a map from lift points `(x, F(x))`. Any `x` is accepted; points
    /// are reduced mod 1, sorted and stripped of non-kinks.
    pub fn from_lift_points(points: Vec<(T, T)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMap("no breakpoints".into()));
        }
        let mut pts = reduce(points);
        pts.dedup_by(|b, a| {
            if a.0 == b.0 && a.1 != b.1 && T::EXACT {
                // keep the conflict so that validation below rejects it
                return false;
            }
            T::negligible_len(&(b.0.clone() - a.0.clone()))
        });
        for w in pts.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidMap(format!("two values at breakpoint {:?}", w[0].0)));
            }
        }
        check_increasing(&pts)?;
        Ok(Self::canonical(pts))
    }

    pub fn from_breakpoints(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidMap(format!(
                "{} breakpoints but {} values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().any(|x| *x < T::zero() || *x >= T::one()) {
            return Err(Error::InvalidMap("breakpoints must lie in [0, 1)".into()));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMap("breakpoints must be strictly increasing".into()));
        }
        Self::from_lift_points(xs.into_iter().zip(ys).collect())
    }

    /// Sorted, non-degenerate, increasing points; infallible.
    fn canonical(mut pts: Vec<(T, T)>) -> Self {
        if pts.len() >= 2 {
            let wrap = pts[0].0.clone() + T::one() - pts[pts.len() - 1].0.clone();
            if T::negligible_len(&wrap) {
                pts.pop();
            }
        }
        let anchor = pts[0].clone();
        loop {
            let n = pts.len();
            if n <= 1 {
                break;
            }
            let slopes: Vec<T> = (0..n).map(|i| seg_slope(&pts, i)).collect();
            let keep: Vec<bool> =
                (0..n).map(|i| !T::same_slope(&slopes[(i + n - 1) % n], &slopes[i])).collect();
            if keep.iter().all(|&k| k) {
                break;
            }
            pts = pts.into_iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p).collect();
        }
        if pts.len() <= 1 {
            let p = pts.pop().unwrap_or(anchor);
            return Self::rotation(p.1 - p.0);
        }
        let (xs, ys): (Vec<T>, Vec<T>) = pts.into_iter().unzip();
        let mut map = PlMap { xs, ys };
        let shift = map.eval(&T::zero()).floor();
        if shift != T::zero() {
            map.ys.iter_mut().for_each(|y| *y = y.clone() - shift.clone());
        }
        map
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.xs
    }

    pub fn values(&self) -> &[T] {
        &self.ys
    }

    /// Number of kinks; 0 for rotations.
    pub fn kinks(&self) -> usize {
        if self.is_rotation() {
            0
        } else {
            self.xs.len()
        }
    }

    pub fn is_rotation(&self) -> bool {
        self.xs.len() == 1
    }

    pub fn is_identity(&self) -> bool {
        self.is_rotation() && self.ys[0] == T::zero()
    }

    /// Rotation angle in `[0, 1)` when the map is a rotation.
    pub fn rotation_angle(&self) -> Option<T> {
        self.is_rotation().then(|| (self.ys[0].clone() - self.xs[0].clone()).frac())
    }

    /// Endpoints `(x0, x1, y0, y1)` of segment `i`, wrapping past the last node.
    pub fn segment(&self, i: usize) -> (T, T, T, T) {
        let n = self.xs.len();
        if i + 1 < n {
            (self.xs[i].clone(), self.xs[i + 1].clone(), self.ys[i].clone(), self.ys[i + 1].clone())
        } else {
            (
                self.xs[i].clone(),
                self.xs[0].clone() + T::one(),
                self.ys[i].clone(),
                self.ys[0].clone() + T::one(),
            )
        }
    }

    pub fn slopes(&self) -> Vec<T> {
        (0..self.xs.len())
            .map(|i| {
                let (x0, x1, y0, y1) = self.segment(i);
                (y1 - y0) / (x1 - x0)
            })
            .collect()
    }

    /// Index of the segment containing the lift coordinate `t`, together with
    /// the integer translate `k` such that `t - k` lies in `[xs[0], xs[0] + 1)`.
    fn locate(&self, t: &T) -> (usize, T) {
        let k = (t.clone() - self.xs[0].clone()).floor();
        let u = t.clone() - k.clone();
        let idx = self.xs.partition_point(|x| *x <= u);
        (idx.max(1) - 1, k)
    }

    /// Evaluates the lift `F`.
    pub fn eval(&self, t: &T) -> T {
        let (i, k) = self.locate(t);
        let (x0, x1, y0, y1) = self.segment(i);
        let u = t.clone() - k.clone();
        y0.clone() + (y1 - y0) * (u - x0.clone()) / (x1 - x0) + k
    }

    /// Evaluates the circle map, returning a value in `[0, 1)`.
    pub fn apply(&self, p: &T) -> T {
        self.eval(p).frac()
    }

    /// Slope of the segment containing `t` (right derivative of the lift).
    pub fn slope_at(&self, t: &T) -> T {
        let (i, _) = self.locate(t);
        let (x0, x1, y0, y1) = self.segment(i);
        (y1 - y0) / (x1 - x0)
    }

    /// Lipschitz constant: the largest slope.
    pub fn lipschitz_const(&self) -> T {
        self.slopes().into_iter().reduce(T::max_of).expect("non-empty")
    }

    pub fn min_slope(&self) -> T {
        self.slopes().into_iter().reduce(T::min_of).expect("non-empty")
    }

    /// `self ∘ f`.
    pub fn compose(&self, f: &PlMap<T>) -> PlMap<T> {
        compose(self, f)
    }

    pub fn invert(&self) -> PlMap<T> {
        let pts = self.xs.iter().cloned().zip(self.ys.iter().cloned()).map(|(x, y)| (y, x)).collect();
        let mut pts = reduce(pts);
        pts.dedup_by(|b, a| T::negligible_len(&(b.0.clone() - a.0.clone())));
        Self::canonical(pts)
    }

    /// Convex combination `(1 - t) F + t Id` of lifts.
    pub fn blend_identity(&self, t: &T) -> PlMap<T> {
        let s = T::one() - t.clone();
        let pts = self
            .xs
            .iter()
            .zip(&self.ys)
            .map(|(x, y)| (x.clone(), s.clone() * y.clone() + t.clone() * x.clone()))
            .collect();
        Self::canonical(pts)
    }

    /// `R_r ∘ self`.
    pub fn then_rotate(&self, r: &T) -> PlMap<T> {
        let pts = self.xs.iter().cloned().zip(self.ys.iter().map(|y| y.clone() + r.clone())).collect();
        Self::canonical(pts)
    }

    pub fn to_float(&self) -> PlMap<f64> {
        PlMap::canonical(self.xs.iter().zip(&self.ys).map(|(x, y)| (x.to_f64(), y.to_f64())).collect())
    }

    /// A random map on the grid `k / den` with segment slopes drawn from
    /// ratios `a / b`, `1 <= a, b <= spread`, then rescaled to degree 1.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, pieces: usize, den: i64, spread: i64) -> PlMap<T> {
        let pieces = pieces.clamp(1, den.max(1) as usize);
        let mut grid: Vec<i64> = rand::seq::index::sample(rng, den as usize, pieces)
            .into_iter()
            .map(|i| i as i64)
            .collect();
        grid.sort_unstable();
        let xs: Vec<T> = grid.iter().map(|&k| T::from_ratio(k, den)).collect();
        let raw: Vec<T> =
            (0..pieces).map(|_| T::from_ratio(rng.gen_range(1..=spread), rng.gen_range(1..=spread))).collect();
        let lens: Vec<T> = (0..pieces)
            .map(|i| {
                let next = if i + 1 < pieces { xs[i + 1].clone() } else { xs[0].clone() + T::one() };
                next - xs[i].clone()
            })
            .collect();
        let mass = raw.iter().zip(&lens).fold(T::zero(), |acc, (s, l)| acc + s.clone() * l.clone());
        let mut y = T::from_ratio(rng.gen_range(0..den), den);
        let mut pts = Vec::with_capacity(pieces);
        for i in 0..pieces {
            pts.push((xs[i].clone(), y.clone()));
            y = y + raw[i].clone() * lens[i].clone() / mass.clone();
        }
        Self::canonical(pts)
    }
}

impl PlMap<f64> {
    /// Exact rational copy of a floating map.
    pub fn to_rational(&self) -> PlMap<Rational> {
        PlMap::canonical(
            self.xs.iter().zip(&self.ys).map(|(x, y)| (Rational::from_f64(*x), Rational::from_f64(*y))).collect(),
        )
    }
}

impl<T: Scalar> Default for PlMap<T> {
    fn default() -> Self {
        Self::identity()
    }
}

fn reduce<T: Scalar>(points: Vec<(T, T)>) -> Vec<(T, T)> {
    let mut pts: Vec<(T, T)> = points
        .into_iter()
        .map(|(x, y)| {
            let k = x.floor();
            (x - k.clone(), y - k)
        })
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable breakpoints"));
    pts
}

fn check_increasing<T: Scalar>(pts: &[(T, T)]) -> Result<()> {
    let n = pts.len();
    for i in 0..n {
        let (lo, hi) = if i + 1 < n {
            (pts[i].1.clone(), pts[i + 1].1.clone())
        } else {
            (pts[i].1.clone(), pts[0].1.clone() + T::one())
        };
        if !(lo < hi) {
            return Err(Error::InvalidMap(format!("lift is not increasing after breakpoint {:?}", pts[i].0)));
        }
    }
    Ok(())
}

fn seg_slope<T: Scalar>(pts: &[(T, T)], i: usize) -> T {
    let n = pts.len();
    let (x0, y0) = pts[i].clone();
    let (x1, y1) = if i + 1 < n {
        pts[i + 1].clone()
    } else {
        (pts[0].0.clone() + T::one(), pts[0].1.clone() + T::one())
    };
    (y1 - y0) / (x1 - x0)
}

/// `g ∘ f`. Breakpoints are those of `f` and the `f`-preimages of those of `g`.
pub fn compose<T: Scalar>(g: &PlMap<T>, f: &PlMap<T>) -> PlMap<T> {
    if g.is_rotation() {
        return f.then_rotate(&(g.ys[0].clone() - g.xs[0].clone()));
    }
    let finv = f.invert();
    let mut ts: Vec<T> = f.xs.clone();
    ts.extend(g.xs.iter().map(|x| finv.eval(x).frac()));
    ts.sort_by(|a, b| a.partial_cmp(b).expect("comparable breakpoints"));
    ts.dedup_by(|b, a| T::negligible_len(&(b.clone() - a.clone())));
    let pts = ts
        .into_iter()
        .map(|t| {
            let v = g.eval(&f.eval(&t));
            (t, v)
        })
        .collect();
    PlMap::canonical(pts)
}

/// The three-piece map `f_b` fixing 0, with slopes 3/2 on `(0, b)`, 1/2 on
/// `(b, 1/2)` and `(3 - 4b)/2` on `(1/2, 1)`.
pub fn family_fb<T: Scalar>(b: T) -> Result<PlMap<T>> {
    let half = T::from_ratio(1, 2);
    if !(b > T::zero() && b < half) {
        return Err(Error::Domain(format!("f_b needs 0 < b < 1/2, got {:?}", b.to_f64())));
    }
    PlMap::from_lift_points(vec![
        (T::zero(), T::zero()),
        (b.clone(), T::from_ratio(3, 2) * b.clone()),
        (half, T::from_ratio(1, 4) + b),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn rotations_form_a_group() {
        let a = PlMap::rotation(q(1, 4));
        let b = PlMap::rotation(q(1, 2));
        assert_eq!(a.compose(&b), PlMap::rotation(q(3, 4)));
        assert_eq!(b.invert(), PlMap::rotation(q(1, 2)));
        assert_eq!(a.invert(), PlMap::rotation(q(3, 4)));
        assert_eq!(PlMap::<Rational>::identity().invert(), PlMap::identity());
        assert_eq!(a.compose(&a).compose(&b), PlMap::identity());
    }

    #[test]
    fn fb_values() {
        let f = family_fb(q(1, 4)).unwrap();
        assert_eq!(f.eval(&q(1, 4)), q(3, 8));
        assert_eq!(f.eval(&q(1, 2)), q(1, 2));
        assert_eq!(f.eval(&q(1, 1)), q(1, 1));
        assert_eq!(f.slopes(), vec![q(3, 2), q(1, 2), q(1, 1)]);
        assert_eq!(f.lipschitz_const(), q(3, 2));
        let g = f.invert();
        // inverse slopes on the image intervals [0, 3/8], [3/8, 1/2], [1/2, 1]
        assert_eq!(g.breakpoints(), &[q(0, 1), q(3, 8), q(1, 2)]);
        assert_eq!(g.slopes(), vec![q(2, 3), q(2, 1), q(1, 1)]);
        assert!(family_fb(q(1, 2)).is_err());
        assert!(family_fb(0.0).is_err());
    }

    #[test]
    fn fb_junction_is_continuous() {
        for b in [q(1, 8), q(1, 3), q(7, 16)] {
            let f = family_fb(b.clone()).unwrap();
            let left = q(1, 2) * q(1, 2) + b.clone();
            let right = (q(3, 1) - q(4, 1) * b.clone()) / q(2, 1) * q(1, 2) - (q(1, 1) - q(4, 1) * b.clone()) / q(2, 1);
            assert_eq!(left, right);
            assert_eq!(f.eval(&q(1, 2)), left);
        }
    }

    #[test]
    fn validation() {
        assert!(PlMap::from_breakpoints(vec![0.0, 0.5], vec![0.0, 0.0]).is_err());
        assert!(PlMap::from_breakpoints(vec![0.5, 0.2], vec![0.0, 0.3]).is_err());
        assert!(PlMap::from_breakpoints(vec![0.0, 0.5], vec![0.0, 1.2]).is_err());
        assert!(PlMap::from_breakpoints(vec![0.0], vec![0.0, 0.1]).is_err());
        assert!(PlMap::<f64>::from_lift_points(vec![]).is_err());
        let m = PlMap::from_breakpoints(vec![0.0, 0.25, 0.5], vec![0.1, 0.35, 0.6]).unwrap();
        assert_eq!(m.rotation_angle(), Some(0.1));
        assert_eq!(m.kinks(), 0);
    }

    #[test]
    fn lift_normalization() {
        let m = PlMap::from_lift_points(vec![(q(1, 2), q(7, 4)), (q(3, 4), q(2, 1))]).unwrap();
        assert_eq!(m.rotation_angle(), Some(q(1, 4)));
        let f = family_fb(q(1, 4)).unwrap().then_rotate(&q(5, 2));
        let v = f.eval(&q(0, 1));
        assert!(v >= q(0, 1) && v < q(1, 1));
        assert_eq!(v, q(1, 2));
    }

    #[test]
    fn compose_matches_pointwise_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let f: PlMap<f64> = PlMap::random(&mut rng, 5, 64, 4);
            let g: PlMap<f64> = PlMap::random(&mut rng, 4, 64, 4);
            let h = g.compose(&f);
            for i in 0..1000 {
                let p = i as f64 / 1000.0;
                let want = g.eval(&f.eval(&p));
                let got = h.eval(&p);
                assert!((want - got).dist_to_int() < 1e-12, "{want} vs {got}");
            }
            assert!(h.lipschitz_const() <= g.lipschitz_const() * f.lipschitz_const() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn inverse_is_exact_in_rational_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            let f: PlMap<Rational> = PlMap::random(&mut rng, 6, 32, 5);
            assert_eq!(f.compose(&f.invert()), PlMap::identity());
            assert_eq!(f.invert().compose(&f), PlMap::identity());
            assert_eq!(f.invert().lipschitz_const(), q(1, 1) / f.min_slope());
            assert_eq!(f.compose(&PlMap::identity()), f);
        }
    }

    #[test]
    fn float_and_rational_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f: PlMap<Rational> = PlMap::random(&mut rng, 5, 16, 3);
            let g: PlMap<Rational> = PlMap::random(&mut rng, 5, 16, 3);
            let exact = g.compose(&f).to_float();
            let float = g.to_float().compose(&f.to_float());
            assert!(d_inf(&exact, &float) < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn group_closure(seed in any::<u64>(), pieces in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: PlMap<f64> = PlMap::random(&mut rng, pieces, 128, 6);
            let g: PlMap<f64> = PlMap::random(&mut rng, pieces, 128, 6);
            for m in [g.compose(&f), f.invert(), g.compose(&f).invert()] {
                let xs = m.breakpoints();
                prop_assert!(xs.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(xs[0] >= 0.0 && xs[xs.len() - 1] < 1.0);
                prop_assert!(m.slopes().iter().all(|s| *s > 0.0 && s.is_finite()));
                let y0 = m.eval(&0.0);
                prop_assert!((0.0..1.0).contains(&y0));
                if !m.is_rotation() {
                    let s = m.slopes();
                    let n = s.len();
                    prop_assert!((0..n).all(|i| !f64::same_slope(&s[(i + n - 1) % n], &s[i])));
                }
            }
            let r = f.invert().compose(&f);
            prop_assert!(d_inf(&r, &PlMap::identity()) <= 1e-12);
        }
    }
}
