//! Stable and unstable holonomies as limits of `(f^n_y)^-1 f^n_x`.
//!
//! Truncation uses a certified geometric tail. For a stable pair agreeing
//! from coordinate `m` on, the generators at step `j` differ by at most
//! `H rho^{-alpha (j - m + 1)}` in `d_inf`, and the step-`j` increment is at
//! most that times `L((f^{j+1}_y)^-1)`, which grows at most like
//! `rho^{(alpha - theta_s)}` per step. Summing gives the tail
//! `L((f^n_y)^-1) H Lmax rho^{-alpha (n - m + 1)} / (1 - rho^{-theta_s})`.

use serde::{Deserialize, Serialize};

use crate::cocycle::{check_domination, holder_const_cocycle, CocycleSpec, DominationReport, BREAKPOINT_CAP};
use crate::error::{Error, Result};
use crate::lipmaps::{d_inf, PlMap};
use crate::stats::{linear_fit, upper_envelope};
use crate::symbolic::SymbolicPoint;

pub const DEFAULT_MAX_ITER: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "s")]
    Stable,
    #[serde(rename = "u")]
    Unstable,
}

impl Side {
    pub fn letter(self) -> char {
        match self {
            Side::Stable => 's',
            Side::Unstable => 'u',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolonomyResult {
    pub map: PlMap<f64>,
    pub side: Side,
    pub n_used: usize,
    /// `d_inf(h_n, h_{n+1})` at the returned index.
    pub cauchy_tail: f64,
    /// Certified bound on `d_inf(h_n, h)`.
    pub error_bound: f64,
    pub gamma_bound: f64,
    /// `d_inf(h, Id) / d(x, y)^alpha`; 0 when `x = y`.
    pub c_ratio: f64,
}

/// Hölder exponent budget `alpha theta / (theta + 1)` for the holonomies.
pub fn gamma_budget(alpha: f64, theta: f64) -> f64 {
    alpha * theta / (theta + 1.0)
}

/// Per-cocycle constants shared by many holonomy computations.
#[derive(Clone, Debug)]
pub struct HolonomyContext<'a> {
    c: &'a CocycleSpec<f64>,
    dom: DominationReport,
    holder: f64,
    max_iter: usize,
}

/// Partial products along an orbit: forward `f^n_x` for the stable side,
/// `f^n_{sigma^-n x}` for the unstable side.
struct Orbit<'a> {
    c: &'a CocycleSpec<f64>,
    side: Side,
    point: SymbolicPoint,
    prod: PlMap<f64>,
}

impl<'a> Orbit<'a> {
    fn new(c: &'a CocycleSpec<f64>, side: Side, x: &SymbolicPoint) -> Self {
        Orbit { c, side, point: x.clone(), prod: PlMap::identity() }
    }

    fn step(&mut self) -> Result<()> {
        match self.side {
            Side::Stable => {
                self.prod = self.c.evaluate_generator(&self.point).compose(&self.prod);
                self.point = self.point.shift(1);
            }
            Side::Unstable => {
                self.point = self.point.shift(-1);
                self.prod = self.prod.compose(&self.c.evaluate_generator(&self.point));
            }
        }
        if self.prod.kinks() > BREAKPOINT_CAP {
            return Err(Error::ResourceLimit(format!("holonomy product reached {} breakpoints", self.prod.kinks())));
        }
        Ok(())
    }
}

/// One truncation step of a holonomy sequence.
struct Approx {
    map: PlMap<f64>,
    /// Tail bound from this index, infinite before it applies.
    bound: f64,
}

impl<'a> HolonomyContext<'a> {
    pub fn new(c: &'a CocycleSpec<f64>) -> Self {
        HolonomyContext { c, dom: check_domination(c), holder: holder_const_cocycle(c).value, max_iter: DEFAULT_MAX_ITER }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn cocycle(&self) -> &CocycleSpec<f64> {
        self.c
    }

    pub fn domination(&self) -> &DominationReport {
        &self.dom
    }

    pub fn holder(&self) -> f64 {
        self.holder
    }

    pub fn theta(&self, side: Side) -> f64 {
        match side {
            Side::Stable => self.dom.theta_s,
            Side::Unstable => self.dom.theta_u,
        }
    }

    pub fn gamma(&self, side: Side) -> f64 {
        gamma_budget(self.c.alpha(), self.theta(side).max(0.0))
    }

    /// Index `m` from which the pair agrees: `x_i = y_i` for `i >= m` (stable)
    /// or for `i <= m` (unstable).
    fn anchor(side: Side, x: &SymbolicPoint, y: &SymbolicPoint) -> Result<i64> {
        let idx = match side {
            Side::Stable => x.stable_index(y),
            Side::Unstable => x.unstable_index(y),
        };
        idx.ok_or(Error::NotStablePair { side: side.letter() })
    }

    /// Drives the sequence `h_0, h_1, ...` and calls `visit` on each; stops
    /// when `visit` returns false or after `limit` steps.
    fn walk(
        &self,
        side: Side,
        x: &SymbolicPoint,
        y: &SymbolicPoint,
        limit: usize,
        mut visit: impl FnMut(usize, &Approx) -> bool,
    ) -> Result<()> {
        let m = Self::anchor(side, x, y)?;
        let rho = self.c.space().rho();
        let alpha = self.c.alpha();
        let theta = self.theta(side);
        let geo = 1.0 - rho.powf(-theta);
        let mut ox = Orbit::new(self.c, side, x);
        let mut oy = Orbit::new(self.c, side, y);
        for n in 0..=limit {
            if n > 0 {
                ox.step()?;
                oy.step()?;
            }
            let (map, bound) = match side {
                Side::Stable => {
                    let inv = oy.prod.invert();
                    let lam = inv.lipschitz_const();
                    let exp = n as i64 - m + 1;
                    let bound = if theta > 0.0 && exp >= 1 {
                        lam * self.holder * self.dom.max_lip_inv * rho.powf(-alpha * exp as f64) / geo
                    } else {
                        f64::INFINITY
                    };
                    (inv.compose(&ox.prod), bound)
                }
                Side::Unstable => {
                    let lam = oy.prod.lipschitz_const();
                    let exp = m + n as i64 + 2;
                    let bound = if theta > 0.0 && exp >= 1 {
                        lam * self.holder * rho.powf(-alpha * exp as f64) / geo
                    } else {
                        f64::INFINITY
                    };
                    (oy.prod.compose(&ox.prod.invert()), bound)
                }
            };
            if !visit(n, &Approx { map, bound }) {
                break;
            }
        }
        Ok(())
    }

    pub fn holonomy(&self, side: Side, x: &SymbolicPoint, y: &SymbolicPoint, tol: f64) -> Result<HolonomyResult> {
        let theta = self.theta(side);
        if !(theta > 0.0) {
            return Err(Error::NotDominated { side: side.letter(), theta });
        }
        let gamma_bound = self.gamma(side);
        if x == y {
            return Ok(HolonomyResult {
                map: PlMap::identity(),
                side,
                n_used: 0,
                cauchy_tail: 0.0,
                error_bound: 0.0,
                gamma_bound,
                c_ratio: 0.0,
            });
        }
        let mut prev: Option<(usize, Approx)> = None;
        let mut done: Option<HolonomyResult> = None;
        self.walk(side, x, y, self.max_iter + 1, |n, a| {
            if let Some((pn, p)) = prev.take() {
                if p.bound <= tol {
                    let tail = d_inf(&p.map, &a.map);
                    done = Some(HolonomyResult {
                        map: p.map,
                        side,
                        n_used: pn,
                        cauchy_tail: tail,
                        error_bound: p.bound.max(tail),
                        gamma_bound,
                        c_ratio: 0.0,
                    });
                    return false;
                }
            }
            prev = Some((n, Approx { map: a.map.clone(), bound: a.bound }));
            true
        })?;
        let mut res = done.ok_or(Error::NoConvergence(self.max_iter))?;
        let d = self.c.space().distance(x, y);
        res.c_ratio = d_inf(&res.map, &PlMap::identity()) / d.powf(self.c.alpha());
        Ok(res)
    }

    pub fn stable(&self, x: &SymbolicPoint, y: &SymbolicPoint, tol: f64) -> Result<HolonomyResult> {
        self.holonomy(Side::Stable, x, y, tol)
    }

    pub fn unstable(&self, x: &SymbolicPoint, y: &SymbolicPoint, tol: f64) -> Result<HolonomyResult> {
        self.holonomy(Side::Unstable, x, y, tol)
    }

    /// Increments `d_inf(h_n, h_{n+1})` for `n < n_max` with the certified tail
    /// bound at `n`. No domination requirement: bounds are infinite without it.
    pub fn convergence_table(
        &self,
        side: Side,
        x: &SymbolicPoint,
        y: &SymbolicPoint,
        n_max: usize,
    ) -> Result<ConvergenceTable> {
        let mut rows = Vec::with_capacity(n_max);
        if x == y {
            rows.extend((0..n_max).map(|n| ConvergenceRow { n, increment: 0.0, bound: 0.0 }));
            return Ok(ConvergenceTable::from_rows(rows, 0));
        }
        let m = Self::anchor(side, x, y)?;
        let mut prev: Option<Approx> = None;
        self.walk(side, x, y, n_max, |n, a| {
            if let Some(p) = prev.take() {
                rows.push(ConvergenceRow { n: n - 1, increment: d_inf(&p.map, &a.map), bound: p.bound });
            }
            prev = Some(Approx { map: a.map.clone(), bound: a.bound });
            true
        })?;
        // past the window the generators differ only through the drift
        let transient = match side {
            Side::Stable => m.max(0) as usize + self.c.window() + 1,
            Side::Unstable => (-m).max(0) as usize + self.c.window() + 1,
        };
        Ok(ConvergenceTable::from_rows(rows, transient))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub increment: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Slope of `ln` of the increment envelope against `n`, if fittable.
    pub slope: Option<f64>,
    pub decaying: bool,
}

impl ConvergenceTable {
    fn from_rows(rows: Vec<ConvergenceRow>, transient: usize) -> Self {
        let inc: Vec<f64> = rows.iter().map(|r| r.increment).collect();
        let env = upper_envelope(&inc);
        let from = if transient + 3 < rows.len() { transient } else { 0 };
        let (ns, ls): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .zip(&env)
            .skip(from)
            .filter(|(_, e)| **e > 0.0)
            .map(|(r, e)| (r.n as f64, e.ln()))
            .unzip();
        let slope = linear_fit(&ns, &ls).map(|f| f.slope);
        let all_zero = env.iter().skip(from).all(|e| *e == 0.0);
        let decaying = all_zero || slope.is_some_and(|s| s < -1e-3);
        ConvergenceTable { rows, slope, decaying }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,increment,bound\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:e},{:e}\n", r.n, r.increment, r.bound));
        }
        out
    }
}

pub fn stable_holonomy(c: &CocycleSpec<f64>, x: &SymbolicPoint, y: &SymbolicPoint, tol: f64) -> Result<HolonomyResult> {
    HolonomyContext::new(c).stable(x, y, tol)
}

pub fn unstable_holonomy(
    c: &CocycleSpec<f64>,
    x: &SymbolicPoint,
    y: &SymbolicPoint,
    tol: f64,
) -> Result<HolonomyResult> {
    HolonomyContext::new(c).unstable(x, y, tol)
}

pub fn holonomy_convergence_table(
    c: &CocycleSpec<f64>,
    x: &SymbolicPoint,
    y: &SymbolicPoint,
    n_max: usize,
) -> Result<ConvergenceTable> {
    HolonomyContext::new(c).convergence_table(Side::Stable, x, y, n_max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomRow {
    pub triple: usize,
    /// `d_inf(h_yz h_xy, h_xz)`.
    pub composition: f64,
    pub composition_bound: f64,
    /// `d_inf(f_y h_xy, h_{sx sy} f_x)`.
    pub equivariance: f64,
    pub equivariance_bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub side: Side,
    pub rows: Vec<AxiomRow>,
    pub max_composition: f64,
    pub max_equivariance: f64,
    pub pass: bool,
}

/// Checks `h_yz h_xy = h_xz` and `f_y h_xy = h_{sigma x sigma y} f_x` on each
/// triple, allowing `tol` plus the propagated truncation errors.
pub fn verify_holonomy_axioms(
    ctx: &HolonomyContext,
    side: Side,
    triples: &[(SymbolicPoint, SymbolicPoint, SymbolicPoint)],
    trunc_tol: f64,
    tol: f64,
) -> Result<AxiomReport> {
    let c = ctx.cocycle();
    let mut rows = Vec::with_capacity(triples.len());
    for (i, (x, y, z)) in triples.iter().enumerate() {
        let hxy = ctx.holonomy(side, x, y, trunc_tol)?;
        let hyz = ctx.holonomy(side, y, z, trunc_tol)?;
        let hxz = ctx.holonomy(side, x, z, trunc_tol)?;
        let composition = d_inf(&hyz.map.compose(&hxy.map), &hxz.map);
        let composition_bound =
            tol + hyz.map.lipschitz_const() * hxy.error_bound + hyz.error_bound + hxz.error_bound;
        let (sx, sy) = (x.shift(1), y.shift(1));
        let hs = ctx.holonomy(side, &sx, &sy, trunc_tol)?;
        let fx = c.evaluate_generator(x);
        let fy = c.evaluate_generator(y);
        let equivariance = d_inf(&fy.compose(&hxy.map), &hs.map.compose(&fx));
        let equivariance_bound = tol + fy.lipschitz_const() * hxy.error_bound + hs.error_bound;
        rows.push(AxiomRow {
            triple: i,
            composition,
            composition_bound,
            equivariance,
            equivariance_bound,
            pass: composition <= composition_bound && equivariance <= equivariance_bound,
        });
    }
    Ok(AxiomReport {
        side,
        max_composition: rows.iter().map(|r| r.composition).fold(0.0, f64::max),
        max_equivariance: rows.iter().map(|r| r.equivariance).fold(0.0, f64::max),
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::Potential;
    use crate::lipmaps::family_fb;
    use crate::symbolic::{parse_word, SftSpace};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(l: &str, c: &str, r: &str, s: i64) -> SymbolicPoint {
        SymbolicPoint::new(parse_word(l).unwrap(), parse_word(c).unwrap(), parse_word(r).unwrap(), s).unwrap()
    }

    fn rotations() -> CocycleSpec<f64> {
        CocycleSpec::from_fn(SftSpace::full_shift(2), 1, 1.0, |w| {
            PlMap::rotation(0.05 * w[0] as f64 + 0.11 * w[1] as f64 + 0.02 * w[2] as f64)
        })
        .unwrap()
    }

    fn pl_cocycle(seed: u64) -> CocycleSpec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CocycleSpec::from_fn(SftSpace::full_shift(2), 1, 1.0, |_| {
            // slopes within [3/4, 4/3] keep theta near 0.58
            PlMap::random(&mut rng, 3, 64, 1).blend_identity(&0.0).then_rotate(&0.0)
        })
        .unwrap()
        .map_entries(|w, _| {
            let b = 0.1 + 0.05 * (w[0] + 2 * w[1] + 3 * w[2]) as f64;
            family_fb(b).unwrap().blend_identity(&0.6)
        })
        .with_drift(Potential::symmetric(0.5, 0.04, vec![0.0, 1.0]))
        .unwrap()
    }

    #[test]
    fn trivial_cases() {
        let k = CocycleSpec::constant(SftSpace::full_shift(2), family_fb(0.2).unwrap().blend_identity(&0.5));
        let x = pt("0", "1101", "0", -1);
        let y = pt("1", "0", "0", -3);
        let h = stable_holonomy(&k, &x, &y, 1e-10).unwrap();
        assert!(d_inf(&h.map, &PlMap::identity()) < 1e-15);
        let h = stable_holonomy(&pl_cocycle(1), &x, &x, 1e-10).unwrap();
        assert!(h.map.is_identity() && h.n_used == 0);
        assert!(matches!(stable_holonomy(&k, &x, &pt("1", "", "1", 0), 1e-8), Err(Error::NotStablePair { side: 's' })));
    }

    #[test]
    fn rotation_holonomy_is_angle_series() {
        let c = rotations();
        let x = pt("1", "", "0", 0);
        let y = pt("0", "1", "0", -2);
        let h = stable_holonomy(&c, &x, &y, 1e-12).unwrap();
        let angle = |p: &SymbolicPoint, i: i64| 0.05 * p.at(i - 1) as f64 + 0.11 * p.at(i) as f64 + 0.02 * p.at(i + 1) as f64;
        let sum: f64 = (0..40).map(|i| angle(&x, i) - angle(&y, i)).sum();
        assert!(d_inf(&h.map, &PlMap::rotation(sum)) < 1e-12);
        let xu = pt("0", "", "1", 0);
        let yu = pt("0", "1", "1", 1);
        let hu = unstable_holonomy(&c, &xu, &yu, 1e-12).unwrap();
        let sum_u: f64 = (1..40).map(|i| angle(&yu, -i) - angle(&xu, -i)).sum();
        assert!(d_inf(&hu.map, &PlMap::rotation(sum_u)) < 1e-12, "{:?} vs {sum_u}", hu.map.rotation_angle());
    }

    #[test]
    fn not_dominated_is_rejected() {
        let steep = PlMap::from_breakpoints(vec![0.0, 0.2], vec![0.0, 0.8]).unwrap();
        let c = CocycleSpec::constant(SftSpace::full_shift(2), steep);
        let x = pt("0", "", "0", 0);
        let y = pt("1", "", "0", 0);
        assert!(matches!(stable_holonomy(&c, &x, &y, 1e-8), Err(Error::NotDominated { side: 's', .. })));
    }

    #[test]
    fn error_bound_covers_the_limit() {
        let c = pl_cocycle(3);
        let x = pt("1", "0", "0", 0);
        let y = pt("0", "", "0", 0);
        let coarse = stable_holonomy(&c, &x, &y, 1e-4).unwrap();
        let fine = stable_holonomy(&c, &x, &y, 1e-12).unwrap();
        assert!(coarse.error_bound >= coarse.cauchy_tail);
        assert!(d_inf(&coarse.map, &fine.map) <= coarse.error_bound + fine.error_bound);
        assert!(fine.gamma_bound > 0.0 && fine.gamma_bound < c.alpha());
    }

    #[test]
    fn axioms_hold_for_pl_cocycle() {
        let c = pl_cocycle(4);
        let ctx = HolonomyContext::new(&c);
        let x = pt("1", "01", "0", -2);
        let y = pt("0", "11", "0", -2);
        let z = pt("1", "1", "0", -1);
        let rep = verify_holonomy_axioms(&ctx, Side::Stable, &[(x.clone(), y.clone(), z.clone())], 1e-9, 1e-9).unwrap();
        assert!(rep.pass, "{rep:?}");
        let xu = pt("0", "10", "1", 0);
        let yu = pt("0", "11", "0", 0);
        let zu = pt("0", "", "1", 0);
        let rep = verify_holonomy_axioms(&ctx, Side::Unstable, &[(xu, yu, zu)], 1e-9, 1e-9).unwrap();
        assert!(rep.pass, "{rep:?}");
        let same = verify_holonomy_axioms(&ctx, Side::Stable, &[(x.clone(), x.clone(), x)], 1e-9, 0.0).unwrap();
        assert_eq!(same.max_composition, 0.0);
    }

    #[test]
    fn convergence_tables() {
        let k = CocycleSpec::constant(SftSpace::full_shift(2), family_fb(0.2).unwrap());
        let x = pt("1", "0", "0", 0);
        let y = pt("0", "", "0", 0);
        let t = holonomy_convergence_table(&k, &x, &y, 10).unwrap();
        assert!(t.rows.iter().all(|r| r.increment < 1e-15) && t.decaying);
        let t = holonomy_convergence_table(&pl_cocycle(5), &x, &y, 30).unwrap();
        assert!(t.decaying && t.slope.unwrap() < 0.0);
        assert!(t.rows.iter().all(|r| r.increment <= r.bound * (1.0 + 1e-9) + 1e-15));
        assert!(t.to_csv().starts_with("n,increment,bound\n0,"));

        // slope 1/4 at the fixed point 0 of the word 0 generator, so the
        // holonomy sequence amplifies the drift
        let contracting = PlMap::from_breakpoints(vec![0.0, 0.4, 0.9], vec![0.0, 0.1, 0.975]).unwrap();
        let bad = CocycleSpec::from_fn(SftSpace::full_shift(2), 0, 1.0, |_| contracting.clone())
            .unwrap()
            .with_drift(Potential::symmetric(0.5, 0.01, vec![0.0, 1.0]))
            .unwrap();
        let t = holonomy_convergence_table(&bad, &x, &y, 12).unwrap();
        assert!(!t.decaying, "{t:?}");
    }
}
