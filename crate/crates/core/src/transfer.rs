//! Transfer maps between cocycles with equal periodic data.
//!
//! With `x0` of period `n0` and anchors `A_j = f^j_{x0} (g^j_{x0})^-1` on its
//! orbit, a point `z` on the stable set of `sigma^j x0` gets
//! `phi_z = h^{s,f}_{sigma^j x0, z} A_j (h^{s,g}_{sigma^j x0, z})^-1`, and the
//! unstable version uses unstable holonomies. For `n0 = 1` the only anchor is
//! the identity.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::cocycle::CocycleSpec;
use crate::error::{Error, Result};
use crate::holonomy::{HolonomyContext, Side};
use crate::lipmaps::{d_inf, PlMap};
use crate::par::par_map;
use crate::report::{Check, CheckTable};
use crate::scalar::Scalar;
use crate::stats::linear_fit;
use crate::symbolic::{closing_window, homoclinic_points, periodic_points, SftSpace, SymbolicPoint, DEFAULT_ENUMERATION_CAP};

pub const DEFAULT_PERIOD_CHECK: usize = 6;
pub const MIN_HOLDER_SAMPLES: usize = 30;
pub const MIN_SCALES: usize = 3;
/// Differences below this are treated as zero by the regressions.
pub const NOISE_FLOOR: f64 = 1e-12;
const MAX_REGRESSION_SAMPLES: usize = 400;
const CLOSING_SAMPLES: usize = 4;
const CLOSING_DEPTH: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicDataReport {
    pub max_period: usize,
    pub points_checked: usize,
    pub worst_residual: f64,
    pub worst_point: Option<SymbolicPoint>,
    pub tol: f64,
    pub coincide: bool,
}

/// Compares `f^n_{x0}` with `g^n_{x0}` at every point of period `n <= max_period`.
pub fn check_periodic_data<T: Scalar>(
    f: &CocycleSpec<T>,
    g: &CocycleSpec<T>,
    max_period: usize,
    tol: f64,
) -> Result<PeriodicDataReport> {
    if f.space() != g.space() {
        return Err(Error::InvalidCocycle("cocycles live over different shift spaces".into()));
    }
    let points = periodic_points(f.space(), max_period, DEFAULT_ENUMERATION_CAP)?;
    let mut worst = 0.0;
    let mut worst_point = None;
    for x in &points {
        let n = x.period().expect("enumerated points are periodic") as i64;
        let r = d_inf(&f.iterate(x, n)?, &g.iterate(x, n)?).to_f64();
        if r > worst || worst_point.is_none() {
            worst = r;
            worst_point = Some(x.clone());
        }
    }
    Ok(PeriodicDataReport {
        max_period,
        points_checked: points.len(),
        worst_residual: worst,
        worst_point,
        tol,
        coincide: worst <= tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    /// Regression slope; infinite when every difference vanishes.
    pub exponent: f64,
    /// Smallest `C` with `diff <= C d^exponent` on the data.
    pub constant: f64,
    /// `exp(intercept)` of the fitted line.
    pub fit_constant: f64,
    pub pairs: usize,
    pub scales: usize,
}

impl HolderFit {
    pub fn bound(&self, d: f64) -> f64 {
        if self.exponent.is_infinite() {
            0.0
        } else {
            self.constant * d.powf(self.exponent)
        }
    }
}

/// Log-log regression of the largest difference seen at each distance scale.
/// Zero differences are dropped; if all vanish the fit is the perfectly
/// regular sentinel.
pub fn holder_regression(data: &[(f64, f64)]) -> Result<HolderFit> {
    holder_regression_above(data, NOISE_FLOOR)
}

/// As `holder_regression`, treating differences up to `floor` as zero.
pub fn holder_regression_above(data: &[(f64, f64)], floor: f64) -> Result<HolderFit> {
    let floor = floor.max(NOISE_FLOOR);
    let live: Vec<(f64, f64)> = data.iter().copied().filter(|&(d, v)| d > 0.0 && v > floor).collect();
    if live.is_empty() {
        return Ok(HolderFit { exponent: f64::INFINITY, constant: 0.0, fit_constant: 0.0, pairs: 0, scales: 0 });
    }
    let mut sorted = live.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut envelope: Vec<(f64, f64)> = Vec::new();
    for (d, v) in sorted {
        match envelope.last_mut() {
            Some(last) if (d / last.0 - 1.0).abs() < 1e-9 => last.1 = last.1.max(v),
            _ => envelope.push((d, v)),
        }
    }
    if envelope.len() < MIN_SCALES {
        return Err(Error::InsufficientScales { needed: MIN_SCALES, found: envelope.len() });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = envelope.iter().map(|&(d, v)| (d.ln(), v.ln())).unzip();
    let fit = linear_fit(&xs, &ys).ok_or(Error::InsufficientScales { needed: MIN_SCALES, found: 1 })?;
    let constant = live.iter().map(|&(d, v)| v / d.powf(fit.slope)).fold(0.0, f64::max);
    Ok(HolderFit {
        exponent: fit.slope,
        constant,
        fit_constant: fit.intercept.exp(),
        pairs: live.len(),
        scales: envelope.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferSample {
    pub point: SymbolicPoint,
    pub phi: PlMap<f64>,
    pub error_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferMap {
    pub base_point: SymbolicPoint,
    pub period: usize,
    /// Sorted by point.
    pub samples: Vec<TransferSample>,
    pub beta_budget: f64,
    pub holder_estimate: Option<HolderFit>,
    /// Largest `max(L(phi_y), L(phi_y^-1))` over the samples.
    pub fiber_lipschitz: f64,
    pub tol: f64,
    pub error_bound: f64,
}

impl TransferMap {
    pub fn get(&self, y: &SymbolicPoint) -> Option<&TransferSample> {
        self.samples.binary_search_by(|s| s.point.cmp(y)).ok().map(|i| &self.samples[i])
    }

    pub fn points(&self) -> Vec<SymbolicPoint> {
        self.samples.iter().map(|s| s.point.clone()).collect()
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self)?)
    }
}

/// Holonomy contexts of both cocycles plus the anchors along the base orbit.
pub struct TransferEngine<'a> {
    f: HolonomyContext<'a>,
    g: HolonomyContext<'a>,
    orbit: Vec<SymbolicPoint>,
    anchors: Vec<PlMap<f64>>,
    tol: f64,
}

impl<'a> TransferEngine<'a> {
    pub fn new(f: &'a CocycleSpec<f64>, g: &'a CocycleSpec<f64>, x0: &SymbolicPoint, tol: f64) -> Result<Self> {
        if f.space() != g.space() {
            return Err(Error::InvalidCocycle("cocycles live over different shift spaces".into()));
        }
        let n0 = x0.period().ok_or_else(|| Error::Domain(format!("base point {x0} is not periodic")))?;
        let (fc, gc) = (HolonomyContext::new(f), HolonomyContext::new(g));
        for ctx in [&fc, &gc] {
            let d = ctx.domination();
            if !(d.theta_s > 0.0) {
                return Err(Error::NotDominated { side: 's', theta: d.theta_s });
            }
            if !(d.theta_u > 0.0) {
                return Err(Error::NotDominated { side: 'u', theta: d.theta_u });
            }
        }
        let orbit: Vec<SymbolicPoint> = (0..n0 as i64).map(|j| x0.shift(j)).collect();
        let anchors = (0..n0 as i64)
            .map(|j| Ok(f.iterate(x0, j)?.compose(&g.iterate(x0, j)?.invert())))
            .collect::<Result<Vec<_>>>()?;
        Ok(TransferEngine { f: fc, g: gc, orbit, anchors, tol })
    }

    pub fn base_point(&self) -> &SymbolicPoint {
        &self.orbit[0]
    }

    pub fn period(&self) -> usize {
        self.orbit.len()
    }

    pub fn f(&self) -> &HolonomyContext<'a> {
        &self.f
    }

    pub fn g(&self) -> &HolonomyContext<'a> {
        &self.g
    }

    pub fn beta_budget(&self) -> f64 {
        self.f.gamma(Side::Stable) * self.g.gamma(Side::Stable)
    }

    fn anchor_of(&self, side: Side, z: &SymbolicPoint) -> Option<usize> {
        self.orbit.iter().position(|o| match side {
            Side::Stable => o.in_stable_set(z),
            Side::Unstable => o.in_unstable_set(z),
        })
    }

    /// `phi_z` built from `side` holonomies, with a bound on its error.
    pub fn phi(&self, side: Side, z: &SymbolicPoint) -> Result<(PlMap<f64>, f64)> {
        let j = self
            .anchor_of(side, z)
            .ok_or_else(|| Error::MissingSample(format!("{z} is not on a {} set of the base orbit", side.letter())))?;
        let o = &self.orbit[j];
        if o == z {
            return Ok((self.anchors[j].clone(), 0.0));
        }
        let hf = self.f.holonomy(side, o, z, self.tol)?;
        let hg = self.g.holonomy(side, o, z, self.tol)?;
        let ginv = hg.map.invert();
        let map = hf.map.compose(&self.anchors[j]).compose(&ginv);
        let bound = hf.error_bound
            + hf.map.lipschitz_const() * self.anchors[j].lipschitz_const() * ginv.lipschitz_const() * hg.error_bound;
        Ok((map, bound))
    }

    fn lookup(&self, t: &TransferMap, z: &SymbolicPoint) -> Result<(PlMap<f64>, f64)> {
        match t.get(z) {
            Some(s) => Ok((s.phi.clone(), s.error_bound)),
            None => self.phi(Side::Stable, z),
        }
    }
}

pub fn build_transfer(
    f: &CocycleSpec<f64>,
    g: &CocycleSpec<f64>,
    x0: &SymbolicPoint,
    core_len: usize,
    tol: f64,
) -> Result<TransferMap> {
    let engine = TransferEngine::new(f, g, x0, tol)?;
    let period_check = DEFAULT_PERIOD_CHECK.max(engine.period());
    let pd = check_periodic_data(f, g, period_check, tol)?;
    if !pd.coincide {
        return Err(Error::PeriodicDataMismatch { residual: pd.worst_residual, tol });
    }
    let points = homoclinic_points(f.space(), x0, core_len, DEFAULT_ENUMERATION_CAP)?;
    let built = par_map(&points, |y| engine.phi(Side::Stable, y));
    let mut samples = Vec::with_capacity(points.len());
    for (point, r) in points.into_iter().zip(built) {
        let (phi, error_bound) = r?;
        samples.push(TransferSample { point, phi, error_bound });
    }
    let fiber_lipschitz = samples
        .iter()
        .map(|s| s.phi.lipschitz_const().max(1.0 / s.phi.min_slope()))
        .fold(1.0, f64::max);
    let error_bound = samples.iter().map(|s| s.error_bound).fold(0.0, f64::max);
    let mut t = TransferMap {
        base_point: x0.clone(),
        period: engine.period(),
        samples,
        beta_budget: engine.beta_budget(),
        holder_estimate: None,
        fiber_lipschitz,
        tol,
        error_bound,
    };
    t.holder_estimate = estimate_holder(&t, f.space()).ok();
    Ok(t)
}

/// Pairwise `(d(y, z), d_inf(phi_y, phi_z))` over an evenly thinned sample set.
pub fn pair_data(space: &SftSpace, items: &[(SymbolicPoint, PlMap<f64>)]) -> Vec<(f64, f64)> {
    let stride = items.len().div_ceil(MAX_REGRESSION_SAMPLES).max(1);
    let picked: Vec<&(SymbolicPoint, PlMap<f64>)> = items.iter().step_by(stride).collect();
    let idx: Vec<usize> = (0..picked.len()).collect();
    par_map(&idx, |&i| {
        picked[i + 1..]
            .iter()
            .map(|b| (space.distance(&picked[i].0, &b.0), d_inf(&picked[i].1, &b.1)))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// As `pair_data`, restricted to pairs that differ only at the coordinates
/// `±n`, `n` their agreement radius. The largest such differences decay at the
/// Hölder exponent however narrow the sampled window is.
pub fn shell_pair_data(space: &SftSpace, items: &[(SymbolicPoint, PlMap<f64>)]) -> Vec<(f64, f64)> {
    let index: HashMap<&SymbolicPoint, usize> = items.iter().enumerate().map(|(i, (p, _))| (p, i)).collect();
    let idx: Vec<usize> = (0..items.len()).collect();
    let pairs: BTreeSet<(usize, usize)> = par_map(&idx, |&i| {
        let y = &items[i].0;
        let radius = y.start().unsigned_abs().max(y.end().unsigned_abs());
        (0..=radius)
            .flat_map(|n| space.shell_neighbors(y, n))
            .filter_map(|z| index.get(&z).map(|&j| (i.min(j), i.max(j))))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    pairs
        .into_iter()
        .map(|(i, j)| (space.distance(&items[i].0, &items[j].0), d_inf(&items[i].1, &items[j].1)))
        .collect()
}

/// Exponent from the shell pairs of `items`, constant from all pairs.
/// Differences up to `floor` count as zero.
pub fn fit_holder(space: &SftSpace, items: &[(SymbolicPoint, PlMap<f64>)], floor: f64) -> Result<HolderFit> {
    let mut fit = holder_regression_above(&shell_pair_data(space, items), floor)?;
    if fit.exponent.is_finite() {
        let floor = floor.max(NOISE_FLOOR);
        for (d, v) in pair_data(space, items) {
            if d > 0.0 && v > floor {
                fit.constant = fit.constant.max(v / d.powf(fit.exponent));
            }
        }
    }
    Ok(fit)
}

pub fn estimate_holder(t: &TransferMap, space: &SftSpace) -> Result<HolderFit> {
    if t.samples.len() < MIN_HOLDER_SAMPLES {
        return Err(Error::InsufficientScales { needed: MIN_SCALES, found: 0 });
    }
    let items: Vec<(SymbolicPoint, PlMap<f64>)> = t.samples.iter().map(|s| (s.point.clone(), s.phi.clone())).collect();
    fit_holder(space, &items, 10.0 * t.error_bound)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosingRow {
    pub point: SymbolicPoint,
    pub n: usize,
    /// `d_inf((f^N_y)^-1 g^N_y, (f^{-N+1}_y)^-1 g^{-N+1}_y)` with `N = n n0`.
    pub gap: f64,
    /// Periodic-data residual at the closing point of the segment.
    pub closing_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideAgreementReport {
    pub table: CheckTable,
    pub closing: Vec<ClosingRow>,
    pub pass: bool,
}

/// Compares the stable-built and unstable-built transfer values on `samples`.
/// For a base point of period `n0 > 1` the forward and backward products
/// along the orbit are also compared through closing points.
pub fn verify_side_agreement(
    t: &TransferMap,
    f: &CocycleSpec<f64>,
    g: &CocycleSpec<f64>,
    samples: &[SymbolicPoint],
    tol: f64,
) -> Result<SideAgreementReport> {
    let engine = TransferEngine::new(f, g, &t.base_point, t.tol)?;
    let rows = par_map(samples, |y| -> Result<Check> {
        let (s, es) = engine.lookup(t, y)?;
        let (u, eu) = engine.phi(Side::Unstable, y)?;
        Ok(Check::new(y.to_string(), d_inf(&s, &u), tol + es + eu))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut checks = rows;
    let mut closing = Vec::new();
    let n0 = t.period;
    if n0 > 1 {
        let last = t.base_point.shift(n0 as i64 - 1);
        let w: Vec<&SymbolicPoint> = samples
            .iter()
            .filter(|y| **y != t.base_point && t.base_point.in_stable_set(y) && last.in_unstable_set(y))
            .take(CLOSING_SAMPLES)
            .collect();
        for y in w {
            for n in 1..=CLOSING_DEPTH {
                let big = (n * n0) as i64;
                let m = big - 1;
                let s = f.iterate(y, big)?.invert().compose(&g.iterate(y, big)?);
                let back = y.shift(-m);
                let u = f.iterate(&back, m)?.compose(&g.iterate(&back, m)?.invert());
                let gap = d_inf(&s, &u);
                let closing_residual = match closing_window(f.space(), y, -m, big) {
                    Ok(z) => {
                        let p = big + m;
                        let zs = z.shift(-m);
                        Some(d_inf(&f.iterate(&zs, p)?, &g.iterate(&zs, p)?))
                    }
                    Err(Error::InadmissibleLoop(..)) => None,
                    Err(e) => return Err(e),
                };
                if let Some(r) = closing_residual {
                    checks.push(Check::new(format!("closing {y} n={n}"), r, tol));
                }
                closing.push(ClosingRow { point: y.clone(), n, gap, closing_residual });
            }
        }
    }
    let table = CheckTable::new(checks);
    Ok(SideAgreementReport { pass: table.pass, table, closing })
}

/// Residuals of `f_y = phi_{sigma y} g_y phi_y^-1` over the samples of `t`.
pub fn verify_cohomology(t: &TransferMap, f: &CocycleSpec<f64>, g: &CocycleSpec<f64>, tol: f64) -> Result<CheckTable> {
    let engine = TransferEngine::new(f, g, &t.base_point, t.tol)?;
    let rows = par_map(&t.samples, |s| -> Result<Check> {
        let sy = s.point.shift(1);
        let (ps, es) = engine.lookup(t, &sy)?;
        let gy = g.evaluate_generator(&s.point);
        let left = ps.compose(&gy);
        let inv = s.phi.invert();
        let rhs = left.compose(&inv);
        let res = d_inf(&f.evaluate_generator(&s.point), &rhs);
        let bound = tol + es + left.lipschitz_const() * inv.lipschitz_const() * s.error_bound;
        Ok(Check::new(s.point.to_string(), res, bound))
    });
    Ok(CheckTable::new(rows.into_iter().collect::<Result<Vec<_>>>()?))
}

/// Residuals of `phi_z = h^{s,f}_{yz} phi_y h^{s,g}_{zy}` on stable pairs.
pub fn verify_holonomy_intertwining(
    t: &TransferMap,
    f: &CocycleSpec<f64>,
    g: &CocycleSpec<f64>,
    pairs: &[(SymbolicPoint, SymbolicPoint)],
    tol: f64,
) -> Result<CheckTable> {
    let engine = TransferEngine::new(f, g, &t.base_point, t.tol)?;
    let rows = par_map(pairs, |(y, z)| -> Result<Check> {
        let id = format!("{y}~{z}");
        if y == z {
            return Ok(Check::new(id, 0.0, tol));
        }
        let hf = engine.f().stable(y, z, t.tol)?;
        let hg = engine.g().stable(z, y, t.tol)?;
        let (py, ey) = engine.lookup(t, y)?;
        let (pz, ez) = engine.lookup(t, z)?;
        let lhs = hf.map.compose(&py).compose(&hg.map);
        let lf = hf.map.lipschitz_const();
        let bound = tol + ez + hf.error_bound + lf * ey + lf * py.lipschitz_const() * hg.error_bound;
        Ok(Check::new(id, d_inf(&pz, &lhs), bound))
    });
    Ok(CheckTable::new(rows.into_iter().collect::<Result<Vec<_>>>()?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Extension {
    pub approximant: SymbolicPoint,
    pub distance: f64,
    pub map: PlMap<f64>,
    pub error_bound: f64,
}

/// A homoclinic point agreeing with `x` on `|i| < depth`: the window of `x`
/// is joined to the base orbit by shortest admissible paths on both sides.
pub fn splice_homoclinic(
    space: &SftSpace,
    x0: &SymbolicPoint,
    x: &SymbolicPoint,
    depth: usize,
) -> Result<SymbolicPoint> {
    let n0 = x0.period().ok_or_else(|| Error::Domain(format!("base point {x0} is not periodic")))?;
    if depth == 0 {
        return Ok(x0.clone());
    }
    let d = depth as i64;
    let (a, b) = (x.at(d - 1), x.at(-d + 1));
    // forward: a -> x0_j, then x0 from phase j
    let right = (0..n0 as i64)
        .filter_map(|j| space.shortest_path(a, x0.at(j)).map(|p| (p, j)))
        .min_by_key(|(p, _)| p.len())
        .ok_or(Error::DepthUnreachable(depth))?;
    let left = (0..n0 as i64)
        .filter_map(|j| space.shortest_path(x0.at(j), b).map(|p| (p, j)))
        .min_by_key(|(p, _)| p.len())
        .ok_or(Error::DepthUnreachable(depth))?;
    let hi = d - 1 + right.0.len() as i64 - 1;
    let lo = -d + 1 - (left.0.len() as i64 - 1);
    let (rp, rj, lp, lj) = (right.0, right.1, left.0, left.1);
    let y = SymbolicPoint::from_fn(n0, n0, lo, hi + 1, |i| {
        if i > hi {
            x0.at(rj + i - hi)
        } else if i >= d - 1 {
            rp[(i - (d - 1)) as usize]
        } else if i > -d + 1 {
            x.at(i)
        } else if i >= lo {
            lp[(i - lo) as usize]
        } else {
            x0.at(lj + i - lo)
        }
    });
    space.check_point(&y).map_err(|_| Error::DepthUnreachable(depth))?;
    Ok(y)
}

/// `phi` at a homoclinic approximant of `x` with the Hölder bound
/// `C d(x, y)^beta` from the regression of `t`.
pub fn extend_transfer(
    t: &TransferMap,
    f: &CocycleSpec<f64>,
    g: &CocycleSpec<f64>,
    x: &SymbolicPoint,
    depth: usize,
) -> Result<Extension> {
    if let Some(s) = t.get(x) {
        return Ok(Extension { approximant: x.clone(), distance: 0.0, map: s.phi.clone(), error_bound: 0.0 });
    }
    let fit = t
        .holder_estimate
        .as_ref()
        .ok_or_else(|| Error::Domain("transfer map has no Hölder estimate".into()))?;
    let engine = TransferEngine::new(f, g, &t.base_point, t.tol)?;
    let y = splice_homoclinic(f.space(), &t.base_point, x, depth)?;
    let (map, e) = engine.lookup(t, &y)?;
    let distance = f.space().distance(x, &y);
    Ok(Extension { approximant: y, distance, map, error_bound: fit.bound(distance) + e })
}
