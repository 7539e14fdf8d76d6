use serde::{Deserialize, Serialize};

use super::PlMap;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub d_inf: f64,
    pub lip_seminorm_diff: f64,
    pub d_1: f64,
    pub d_max: f64,
}

/// Common refinement of the two breakpoint sets, sorted in `[0, 1)`.
fn merged<T: Scalar>(f: &PlMap<T>, g: &PlMap<T>) -> Vec<T> {
    let mut ps: Vec<T> = f.breakpoints().iter().chain(g.breakpoints()).cloned().collect();
    ps.sort_by(|a, b| a.partial_cmp(b).expect("comparable breakpoints"));
    ps.dedup_by(|b, a| T::negligible_len(&(b.clone() - a.clone())));
    ps
}

fn segments<T: Scalar>(ps: &[T]) -> impl Iterator<Item = (T, T)> + '_ {
    (0..ps.len()).map(move |i| {
        let hi = if i + 1 < ps.len() { ps[i + 1].clone() } else { ps[0].clone() + T::one() };
        (ps[i].clone(), hi)
    })
}

/// Largest distance to the integers of a linear function with end values `a`, `b`.
pub(crate) fn seg_max_dist<T: Scalar>(a: &T, b: &T) -> T {
    let half = T::from_ratio(1, 2);
    let (lo, hi) = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
    if (hi - half.clone()).floor() + half.clone() >= lo {
        half
    } else {
        T::max_of(a.dist_to_int(), b.dist_to_int())
    }
}

/// `sup_p d(f(p), g(p))`. The lift difference is linear on each merged
/// segment, so each segment contributes an endpoint value or 1/2 when it
/// crosses a half-integer.
pub fn d_inf<T: Scalar>(f: &PlMap<T>, g: &PlMap<T>) -> T {
    let ps = merged(f, g);
    let mut best = T::zero();
    let mut prev: Option<T> = None;
    for (lo, hi) in segments(&ps) {
        let a = prev.take().unwrap_or_else(|| f.eval(&lo) - g.eval(&lo));
        let b = f.eval(&hi) - g.eval(&hi);
        best = T::max_of(best, seg_max_dist(&a, &b));
        prev = Some(b);
    }
    best
}

/// Lipschitz seminorm of the lift difference: largest slope gap.
pub fn lip_seminorm_diff<T: Scalar>(f: &PlMap<T>, g: &PlMap<T>) -> T {
    let ps = merged(f, g);
    let two = T::from_int(2);
    segments(&ps)
        .map(|(lo, hi)| {
            let mid = (lo + hi) / two.clone();
            (f.slope_at(&mid) - g.slope_at(&mid)).abs()
        })
        .fold(T::zero(), T::max_of)
}

pub fn d_1<T: Scalar>(f: &PlMap<T>, g: &PlMap<T>) -> T {
    d_inf(f, g) + lip_seminorm_diff(f, g)
}

/// `max(d_1(f, g), d_1(f^-1, g^-1))`.
pub fn d_max<T: Scalar>(f: &PlMap<T>, g: &PlMap<T>) -> T {
    T::max_of(d_1(f, g), d_1(&f.invert(), &g.invert()))
}

pub fn metric_report<T: Scalar>(f: &PlMap<T>, g: &PlMap<T>) -> MetricReport {
    let di = d_inf(f, g);
    let lip = lip_seminorm_diff(f, g);
    let d1 = di.clone() + lip.clone();
    let inv = d_1(&f.invert(), &g.invert());
    MetricReport {
        d_inf: di.to_f64(),
        lip_seminorm_diff: lip.to_f64(),
        d_1: d1.to_f64(),
        d_max: T::max_of(d1, inv).to_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::family_fb;
    use super::*;
    use crate::scalar::Rational;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid_d_inf(f: &PlMap<f64>, g: &PlMap<f64>, n: usize) -> f64 {
        (0..=n)
            .map(|i| {
                let p = i as f64 / n as f64;
                (f.eval(&p) - g.eval(&p)).dist_to_int()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn trivial_distances() {
        let f = family_fb(0.3).unwrap();
        assert_eq!(d_inf(&f, &f), 0.0);
        assert_eq!(lip_seminorm_diff(&f, &f), 0.0);
        let id = PlMap::identity();
        let r = PlMap::rotation(0.1);
        assert!((d_inf(&id, &r) - 0.1).abs() < 1e-15);
        assert_eq!(lip_seminorm_diff(&id, &r), 0.0);
        assert_eq!(d_inf(&id, &PlMap::rotation(0.75)), 0.25);
    }

    #[test]
    fn fb_pair_matches_grid() {
        let f = family_fb(0.125).unwrap();
        let g = family_fb(0.375).unwrap();
        let exact = d_inf(&f, &g);
        let grid = grid_d_inf(&f, &g, 1 << 16);
        assert!((exact - grid).abs() < 1e-12, "{exact} vs {grid}");
        assert!((exact - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sup_inside_a_segment() {
        // lift difference crosses 1/2 strictly between breakpoints
        let f = PlMap::from_breakpoints(vec![0.0, 0.25], vec![0.0, 0.9]).unwrap();
        let g = PlMap::identity();
        assert_eq!(d_inf(&f, &g), 0.5);
    }

    #[test]
    fn non_separable_family() {
        let pairs = [(1, 8, 3, 8), (1, 100, 49, 100), (1, 3, 1, 4), (2, 5, 1, 5)];
        for (a, b, c, d) in pairs {
            let f = family_fb(Rational::from_ratio(a, b)).unwrap();
            let g = family_fb(Rational::from_ratio(c, d)).unwrap();
            assert!(lip_seminorm_diff(&f, &g) > Rational::from_ratio(1, 2));
        }
    }

    #[test]
    fn report_is_consistent() {
        let f = family_fb(0.2).unwrap();
        let g = family_fb(0.3).unwrap().then_rotate(&0.05);
        let r = metric_report(&f, &g);
        assert!((r.d_1 - r.d_inf - r.lip_seminorm_diff).abs() < 1e-15);
        assert!(r.d_max >= r.d_1);
    }

    fn random_triple(seed: u64) -> [PlMap<f64>; 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        [PlMap::random(&mut rng, 4, 256, 5), PlMap::random(&mut rng, 4, 256, 5), PlMap::random(&mut rng, 4, 256, 5)]
    }

    proptest! {
        #[test]
        fn d_inf_agrees_with_dense_grid(seed in any::<u64>()) {
            let [f, g, _] = random_triple(seed);
            let exact = d_inf(&f, &g);
            let grid = grid_d_inf(&f, &g, 4096);
            // slopes are at most 25 so the grid misses by at most 25 / 4096
            prop_assert!(grid <= exact + 1e-12);
            prop_assert!(exact - grid <= 25.0 / 4096.0);
            prop_assert!((d_inf(&g, &f) - exact).abs() <= 1e-15);
        }

        #[test]
        fn right_invariance_and_lipschitz_bounds(seed in any::<u64>()) {
            let [f, g, h] = random_triple(seed);
            let lhs = d_inf(&g.compose(&f), &h.compose(&f));
            prop_assert!((lhs - d_inf(&g, &h)).abs() <= 1e-12);
            let left = d_inf(&f.compose(&g), &f.compose(&h));
            prop_assert!(left <= f.lipschitz_const() * d_inf(&g, &h) + 1e-12);
            prop_assert!(g.compose(&f).lipschitz_const() <= g.lipschitz_const() * f.lipschitz_const() * (1.0 + 1e-12));
        }

        #[test]
        fn d1_triangle(seed in any::<u64>()) {
            let [f, g, h] = random_triple(seed);
            prop_assert!(d_1(&f, &h) <= d_1(&f, &g) + d_1(&g, &h) + 1e-12);
        }
    }
}
