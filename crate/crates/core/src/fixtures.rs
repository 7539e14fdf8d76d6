//! Synthetic cocycles and conjugacies with known answers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cocycle::{CocycleSpec, Potential};
use crate::error::{Error, Result};
use crate::lipmaps::{d_inf, PlMap};
use crate::rigidity::{ConjugacyRule, MeasurableConjugacy};
use crate::scalar::Scalar;
use crate::symbolic::{sample_measure, MarkovMeasure, SftSpace, SymbolicPoint};

pub const FIXTURE_KINDS: [&str; 5] =
    ["rotation-cocycle", "pl-dominated-cocycle", "conjugated-pair", "corrupted-conjugacy", "fb-family"];

/// Rotations by `k / den` with `k` drawn per table word.
pub fn rotation_cocycle<T: Scalar>(
    space: SftSpace,
    window: usize,
    alpha: f64,
    den: i64,
    seed: u64,
    drift: Option<Potential<T>>,
) -> Result<CocycleSpec<T>> {
    if den < 1 {
        return Err(Error::Domain(format!("angle denominator {den} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = CocycleSpec::from_fn(space, window, alpha, |_| PlMap::rotation(T::from_ratio(rng.gen_range(0..den), den)))?;
    match drift {
        Some(p) => c.with_drift(p),
        None => Ok(c),
    }
}

/// Circle map commuting with the half turn, with attracting fixed points 0
/// and 1/2 of slope `1/s` and repelling fixed points 1/4 and 3/4 of slope `s`.
pub fn two_fixed_point_map(s: f64) -> Result<PlMap<f64>> {
    if !(s > 1.0) {
        return Err(Error::Domain(format!("slope {s} must exceed 1")));
    }
    let a = s / (4.0 * (1.0 + s));
    let b = a / s;
    PlMap::from_breakpoints(vec![0.0, a, 0.5 - a, 0.5 + a, 1.0 - a], vec![0.0, b, 0.5 - b, 0.5 + b, 1.0 - b])
}

/// Window-1 cocycle over the full 2-shift with `theta_s = theta_u = theta`:
/// every entry is `two_fixed_point_map(rho^(alpha - theta))` followed by a
/// word-dependent rotation, plus a drift decaying at `rho^-alpha`.
pub fn dominated_fixed_point_cocycle(rho: f64, alpha: f64, theta: f64) -> Result<CocycleSpec<f64>> {
    if !(theta > 0.0 && theta < alpha) {
        return Err(Error::Domain(format!("theta {theta} must lie in (0, alpha = {alpha})")));
    }
    let g = two_fixed_point_map(rho.powf(alpha - theta))?;
    let space = SftSpace::full_shift(2).with_rho(rho)?;
    CocycleSpec::from_fn(space, 1, alpha, |w| {
        let idx = (4 * w[0] + 2 * w[1] + w[2]) as f64;
        g.then_rotate(&(0.01 * idx))
    })?
    .with_drift(Potential::symmetric(rho.powf(-alpha), 0.05, vec![0.0, 1.0]))
}

/// The holonomy benchmark: `rho = 2`, `alpha = 1/2`, `theta = 0.4`.
pub fn holonomy_fixture() -> CocycleSpec<f64> {
    dominated_fixed_point_cocycle(2.0, 0.5, 0.4).expect("fixture parameters are valid")
}

/// Random PL cocycle with all slopes strictly inside `(rho^-(alpha-theta), rho^(alpha-theta))`.
pub fn pl_dominated_cocycle(
    space: SftSpace,
    window: usize,
    alpha: f64,
    theta: f64,
    pieces: usize,
    seed: u64,
) -> Result<CocycleSpec<f64>> {
    if !(theta > 0.0 && theta < alpha) {
        return Err(Error::Domain(format!("theta {theta} must lie in (0, alpha = {alpha})")));
    }
    let s = space.rho().powf(alpha - theta);
    // aim slightly inside the open interval
    let target = s.powf(0.95);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CocycleSpec::from_fn(space, window, alpha, |_| {
        let m: PlMap<f64> = PlMap::random(&mut rng, pieces.max(2), 64, 4);
        let (hi, lo) = (m.lipschitz_const(), m.min_slope());
        let mut t: f64 = 0.0;
        if hi > target {
            t = t.max((hi - target) / (hi - 1.0));
        }
        if lo < 1.0 / target {
            t = t.max((1.0 / target - lo) / (1.0 - lo));
        }
        m.blend_identity(&t.clamp(0.0, 1.0)).then_rotate(&rng.gen_range(0.0..1.0))
    })
}

/// `g_x = psi_{sigma x}^-1 f_x psi_x` for a rotation-valued `f` and
/// `psi_x = R_{psi(x)}`; periodic data coincide exactly.
pub fn conjugated_pair<T: Scalar>(f: &CocycleSpec<T>, psi: &Potential<T>) -> Result<CocycleSpec<T>> {
    if !f.is_isometric() {
        return Err(Error::Domain("rotation conjugation keeps periodic data only for rotation cocycles".into()));
    }
    f.clone().with_drift(psi.coboundary()?)
}

/// `g_x = R_{-x_1/2} f_x R_{x_0/2}` for a cocycle whose entries commute with
/// the half turn; periodic data coincide and `phi_y = R_{(y_0 - x0_0)/2}`.
pub fn half_turn_pair(f: &CocycleSpec<f64>) -> Result<CocycleSpec<f64>> {
    if f.space().k() != 2 || f.window() == 0 {
        return Err(Error::Domain("half-turn conjugation needs two symbols and window >= 1".into()));
    }
    let half = PlMap::rotation(0.5);
    for m in f.table().values() {
        if d_inf(&m.compose(&half), &half.compose(m)) > 1e-12 {
            return Err(Error::Domain("table entries must commute with the half turn".into()));
        }
    }
    let w = f.window();
    Ok(f.map_entries(|word, m| m.then_rotate(&((word[w] as f64 - word[w + 1] as f64) / 2.0))))
}

/// Rotation-rule conjugacy overridden at `count` draws of `mu` by extra
/// rotations of size in `[0.05, 0.45]`.
#[allow(clippy::too_many_arguments)]
pub fn corrupted_conjugacy(
    space: &SftSpace,
    mu: &MarkovMeasure,
    psi: Potential<f64>,
    base: SymbolicPoint,
    count: usize,
    depth: usize,
    seed: u64,
) -> Result<MeasurableConjugacy> {
    let mut phi = MeasurableConjugacy::new(ConjugacyRule::Rotation { psi, base });
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for x in sample_measure(space, mu, count, depth, seed) {
        let v = phi.rule_value(&x)?.then_rotate(&rng.gen_range(0.05..0.45));
        phi = phi.corrupt(x, v);
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::check_domination;
    use crate::scalar::Rational;
    use crate::transfer::check_periodic_data;

    #[test]
    fn fixed_point_map_shape() {
        let s = 2f64.powf(0.1);
        let g = two_fixed_point_map(s).unwrap();
        for (p, slope) in [(0.0, 1.0 / s), (0.25, s), (0.5, 1.0 / s), (0.75, s)] {
            assert!((g.apply(&p) - p).abs() < 1e-15);
            assert!((g.slope_at(&(p + 1e-3)) - slope).abs() < 1e-12);
            assert!((g.slope_at(&(p + 1.0 - 1e-3)) - slope).abs() < 1e-12);
        }
        let half = PlMap::rotation(0.5);
        assert!(d_inf(&g.compose(&half), &half.compose(&g)) < 1e-15);
    }

    #[test]
    fn holonomy_fixture_theta() {
        let c = holonomy_fixture();
        let d = check_domination(&c);
        assert!((d.theta_s - 0.4).abs() < 1e-9 && (d.theta_u - 0.4).abs() < 1e-9, "{d:?}");
    }

    #[test]
    fn pl_fixture_respects_slope_window() {
        let space = SftSpace::full_shift(2);
        let c = pl_dominated_cocycle(space.clone(), 1, 1.0, 0.5, 4, 9).unwrap();
        let s = 2f64.powf(0.5);
        for m in c.table().values() {
            assert!(m.lipschitz_const() < s && m.min_slope() > 1.0 / s);
        }
        assert!(check_domination(&c).su_dominated);
        assert!(pl_dominated_cocycle(space, 1, 0.5, 0.6, 4, 9).is_err());
    }

    #[test]
    fn rotation_fixture_and_pair() {
        let space = SftSpace::full_shift(2);
        let f = rotation_cocycle::<Rational>(space.clone(), 1, 1.0, 100, 4, None).unwrap();
        assert_eq!(f.table().len(), 8);
        assert!(f.is_isometric());
        let psi = Potential::symmetric(Rational::from_ratio(1, 2), Rational::from_ratio(1, 10), vec![Rational::from_ratio(0, 1), Rational::from_ratio(1, 1)]);
        let g = conjugated_pair(&f, &psi).unwrap();
        assert_eq!(check_periodic_data(&f, &g, 6, 0.0).unwrap().worst_residual, 0.0);
    }

    #[test]
    fn half_turn_pair_keeps_periodic_data() {
        let f = holonomy_fixture();
        let g = half_turn_pair(&f).unwrap();
        let r = check_periodic_data(&f, &g, 5, 1e-12).unwrap();
        assert!(r.coincide, "{r:?}");
        assert!(half_turn_pair(&pl_dominated_cocycle(SftSpace::full_shift(2), 1, 1.0, 0.5, 3, 1).unwrap()).is_err());
    }
}
