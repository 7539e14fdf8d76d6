//! Repairing a measurable conjugacy into a Hölder one.
//!
//! A conjugacy rule corrupted on a finite set is screened by its local
//! cohomological residual. Surviving points serve as anchors, and values are
//! transported to targets through the bracket: a stable leg to `[a, y]` then
//! an unstable leg to `y`, using `phi_y = h^f_{ay} phi_a (h^g_{ay})^-1`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cocycle::{check_bounded_distortion, CocycleSpec, Potential};
use crate::error::{Error, Result};
use crate::holonomy::{HolonomyContext, Side};
use crate::lipmaps::{d_inf, PlMap};
use crate::par::par_map;
use crate::report::{Check, CheckTable};
use crate::symbolic::{sample_measure, MarkovMeasure, SftSpace, SymbolicPoint};
use crate::transfer::{fit_holder, holder_regression, HolderFit, TransferMap, TransferSample};

/// Uncorrupted values of a conjugacy.
#[derive(Clone, Debug, PartialEq)]
pub enum ConjugacyRule {
    /// `phi_y = R_{psi(y) - psi(base)}`.
    Rotation { psi: Potential<f64>, base: SymbolicPoint },
    /// Values stored on finitely many points.
    Table(TransferMap),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurableConjugacy {
    pub rule: ConjugacyRule,
    pub corruption: Vec<(SymbolicPoint, PlMap<f64>)>,
}

impl MeasurableConjugacy {
    pub fn new(rule: ConjugacyRule) -> Self {
        MeasurableConjugacy { rule, corruption: Vec::new() }
    }

    pub fn corrupt(mut self, x: SymbolicPoint, value: PlMap<f64>) -> Self {
        self.corruption.retain(|(p, _)| *p != x);
        self.corruption.push((x, value));
        self
    }

    pub fn is_corrupted(&self, x: &SymbolicPoint) -> bool {
        self.corruption.iter().any(|(p, _)| p == x)
    }

    /// Value of the uncorrupted rule.
    pub fn rule_value(&self, x: &SymbolicPoint) -> Result<PlMap<f64>> {
        match &self.rule {
            ConjugacyRule::Rotation { psi, base } => Ok(PlMap::rotation(psi.eval(x) - psi.eval(base))),
            ConjugacyRule::Table(t) => {
                t.get(x).map(|s| s.phi.clone()).ok_or_else(|| Error::MissingSample(x.to_string()))
            }
        }
    }

    pub fn value(&self, x: &SymbolicPoint) -> Result<PlMap<f64>> {
        match self.corruption.iter().find(|(p, _)| p == x) {
            Some((_, v)) => Ok(v.clone()),
            None => self.rule_value(x),
        }
    }

    pub fn to_json(&self) -> Result<Value> {
        let rule = match &self.rule {
            ConjugacyRule::Rotation { psi, base } => json!({"rotation": {"psi": psi.to_json()?, "base": base}}),
            ConjugacyRule::Table(t) => json!({"table": t.to_json()?["samples"]}),
        };
        let corruption: Vec<Value> =
            self.corruption.iter().map(|(p, m)| json!({"point": p, "phi": m})).collect();
        Ok(json!({"rule": rule, "corruption": corruption}))
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let rule = doc.get("rule").ok_or_else(|| Error::Json("conjugacy needs a \"rule\"".into()))?;
        let rule = if let Some(r) = rule.get("rotation") {
            let psi = Potential::from_json(r.get("psi").ok_or_else(|| Error::Json("rotation rule needs \"psi\"".into()))?)?;
            let base = serde_json::from_value(r.get("base").cloned().unwrap_or(Value::Null))?;
            ConjugacyRule::Rotation { psi, base }
        } else if let Some(rows) = rule.get("table").and_then(Value::as_array) {
            let mut samples = Vec::with_capacity(rows.len());
            for row in rows {
                samples.push(TransferSample {
                    point: serde_json::from_value(row.get("point").cloned().unwrap_or(Value::Null))?,
                    phi: serde_json::from_value(row.get("phi").cloned().unwrap_or(Value::Null))?,
                    error_bound: row.get("error_bound").and_then(Value::as_f64).unwrap_or(0.0),
                });
            }
            samples.sort_by(|a, b| a.point.cmp(&b.point));
            let base_point = samples
                .first()
                .map(|s| s.point.clone())
                .ok_or_else(|| Error::Json("table rule is empty".into()))?;
            ConjugacyRule::Table(TransferMap {
                period: base_point.period().unwrap_or(0),
                base_point,
                samples,
                beta_budget: 0.0,
                holder_estimate: None,
                fiber_lipschitz: 1.0,
                tol: 0.0,
                error_bound: 0.0,
            })
        } else {
            return Err(Error::Json("rule must be \"rotation\" or \"table\"".into()));
        };
        let mut out = MeasurableConjugacy::new(rule);
        if let Some(rows) = doc.get("corruption").and_then(Value::as_array) {
            for row in rows {
                let p: SymbolicPoint = serde_json::from_value(row.get("point").cloned().unwrap_or(Value::Null))?;
                let m: PlMap<f64> = serde_json::from_value(row.get("phi").cloned().unwrap_or(Value::Null))?;
                out = out.corrupt(p, m);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityConfig {
    pub tol: f64,
    /// Holonomy truncation tolerance.
    pub trunc_tol: f64,
    pub horizon: usize,
    pub k_max: f64,
    /// Anchors must have local cohomological residual below `screen_factor * tol`.
    pub screen_factor: f64,
    /// Fiber regularity of the conjugacy.
    pub beta: f64,
    /// Factor applied to the fitted Hölder constant before it is frozen.
    pub holder_margin: f64,
}

impl Default for RigidityConfig {
    fn default() -> Self {
        RigidityConfig { tol: 1e-6, trunc_tol: 1e-10, horizon: 24, k_max: 1e6, screen_factor: 10.0, beta: 1.0, holder_margin: 4.0 }
    }
}

fn distortion_gate(g: &CocycleSpec<f64>, points: &[SymbolicPoint], cfg: &RigidityConfig) -> Result<()> {
    let sample: Vec<SymbolicPoint> = points.iter().take(32).cloned().collect();
    let d = check_bounded_distortion(g, cfg.horizon, &sample)?;
    if !d.certified && (d.growing || d.k_est > cfg.k_max) {
        return Err(Error::DistortionUnbounded { k_est: d.k_est, k_max: cfg.k_max });
    }
    Ok(())
}

/// Residuals of `h^f_{xy} = phi_y h^g_{xy} phi_x^-1` on stable or unstable pairs.
pub fn check_conj_hol_relation(
    phi: &MeasurableConjugacy,
    f: &CocycleSpec<f64>,
    g: &CocycleSpec<f64>,
    pairs: &[(SymbolicPoint, SymbolicPoint)],
    cfg: &RigidityConfig,
) -> Result<CheckTable> {
    let pts: Vec<SymbolicPoint> = pairs.iter().map(|p| p.0.clone()).collect();
    distortion_gate(g, &pts, cfg)?;
    let (fc, gc) = (HolonomyContext::new(f), HolonomyContext::new(g));
    let rows = par_map(pairs, |(x, y)| -> Result<Check> {
        let id = format!("{x}~{y}");
        if x == y {
            return Ok(Check::new(id, 0.0, cfg.tol));
        }
        let side = pair_side(x, y)?;
        let hf = fc.holonomy(side, x, y, cfg.trunc_tol)?;
        let hg = gc.holonomy(side, x, y, cfg.trunc_tol)?;
        let py = phi.value(y)?;
        let rhs = py.compose(&hg.map).compose(&phi.value(x)?.invert());
        let bound = cfg.tol + hf.error_bound + py.lipschitz_const() * hg.error_bound;
        Ok(Check::new(id, d_inf(&hf.map, &rhs), bound))
    });
    Ok(CheckTable::new(rows.into_iter().collect::<Result<Vec<_>>>()?))
}

fn pair_side(x: &SymbolicPoint, y: &SymbolicPoint) -> Result<Side> {
    if x.in_stable_set(y) {
        Ok(Side::Stable)
    } else if x.in_unstable_set(y) {
        Ok(Side::Unstable)
    } else {
        Err(Error::NotStablePair { side: 's' })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub exponent: f64,
    pub target_exponent: f64,
    /// Frozen constant for `d_inf(phi_x, phi_y) <= C d(x, y)^target_exponent`.
    pub constant: f64,
    pub regression: HolderFit,
    pub validation: CheckTable,
    /// Generic pairs joined through the bracket point.
    pub chain: CheckTable,
    pub pass: bool,
}

/// Fits `C` on `fit_pairs` at exponent `beta gamma` and validates it on
/// `fresh_pairs`; `generic` pairs in a common 0-cylinder are checked through
/// the bracket `z = [x, y]` with `d(phi_x, phi_y) <= C (d(x,z)^e + d(z,y)^e)`.
pub fn stable_pair_holder_check(
    phi: &MeasurableConjugacy,
    f: &CocycleSpec<f64>,
    fit_pairs: &[(SymbolicPoint, SymbolicPoint)],
    fresh_pairs: &[(SymbolicPoint, SymbolicPoint)],
    generic: &[(SymbolicPoint, SymbolicPoint)],
    cfg: &RigidityConfig,
) -> Result<HolderCheck> {
    let space = f.space();
    let target = cfg.beta * HolonomyContext::new(f).gamma(Side::Stable);
    let diff = |x: &SymbolicPoint, y: &SymbolicPoint| -> Result<f64> { Ok(d_inf(&phi.value(x)?, &phi.value(y)?)) };
    let data = fit_pairs
        .iter()
        .map(|(x, y)| Ok((space.distance(x, y), diff(x, y)?)))
        .collect::<Result<Vec<_>>>()?;
    let regression = holder_regression(&data)?;
    let constant = data
        .iter()
        .filter(|(d, _)| *d > 0.0)
        .map(|(d, v)| v / d.powf(target))
        .fold(0.0, f64::max)
        * cfg.holder_margin;
    let slack = 1.0 + cfg.tol;
    let validation = fresh_pairs
        .iter()
        .map(|(x, y)| Ok(Check::new(format!("{x}~{y}"), diff(x, y)?, constant * space.distance(x, y).powf(target) * slack + cfg.tol)))
        .collect::<Result<Vec<_>>>()?;
    let chain = generic
        .iter()
        .map(|(x, y)| {
            let z = space.bracket(x, y)?;
            let b = constant * (space.distance(x, &z).powf(target) + space.distance(&z, y).powf(target));
            Ok(Check::new(format!("{x}~{y}"), diff(x, y)?, b * slack + cfg.tol))
        })
        .collect::<Result<Vec<_>>>()?;
    let (validation, chain) = (CheckTable::new(validation), CheckTable::new(chain));
    Ok(HolderCheck {
        exponent: regression.exponent,
        target_exponent: target,
        constant,
        pass: validation.pass && chain.pass,
        regression,
        validation,
        chain,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Repair {
    pub point: SymbolicPoint,
    /// `d_inf` between the corrupted and the repaired value.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub gamma: f64,
    pub beta_gamma: f64,
    pub regression: Option<HolderFit>,
    pub repaired_points: Vec<Repair>,
    pub anchors: usize,
    pub excluded: usize,
    /// Stable-then-unstable against unstable-then-stable transport.
    pub path_independence: CheckTable,
    /// `f_x = phi~_{sigma x} g_x phi~_x^-1` on the targets.
    pub cohomology: CheckTable,
    pub fiber_lipschitz_rule: f64,
    pub fiber_lipschitz_repaired: f64,
    pub pass: bool,
}

impl RigidityReport {
    pub fn repairs_csv(&self) -> String {
        let mut out = String::from("point,delta\n");
        for r in &self.repaired_points {
            out.push_str(&format!("{},{:e}\n", r.point, r.delta));
        }
        out
    }
}

struct Transport<'a> {
    f: HolonomyContext<'a>,
    g: HolonomyContext<'a>,
    space: &'a SftSpace,
    trunc: f64,
}

impl Transport<'_> {
    /// `h^f_{ab} v (h^g_{ab})^-1` with its error bound, given `v` up to `e`.
    fn leg(&self, side: Side, a: &SymbolicPoint, b: &SymbolicPoint, v: &PlMap<f64>, e: f64) -> Result<(PlMap<f64>, f64)> {
        if a == b {
            return Ok((v.clone(), e));
        }
        let hf = self.f.holonomy(side, a, b, self.trunc)?;
        let hg = self.g.holonomy(side, a, b, self.trunc)?;
        let ginv = hg.map.invert();
        let lf = hf.map.lipschitz_const();
        let bound = hf.error_bound + lf * e + lf * v.lipschitz_const() * ginv.lipschitz_const() * hg.error_bound;
        Ok((hf.map.compose(v).compose(&ginv), bound))
    }

    /// Both bracket routes from anchor `a` to `y`.
    fn routes(&self, a: &SymbolicPoint, va: &PlMap<f64>, y: &SymbolicPoint) -> Result<[(PlMap<f64>, f64); 2]> {
        let p = self.space.bracket(a, y)?;
        let (vp, ep) = self.leg(Side::Stable, a, &p, va, 0.0)?;
        let su = self.leg(Side::Unstable, &p, y, &vp, ep)?;
        let q = self.space.bracket(y, a)?;
        let (vq, eq) = self.leg(Side::Unstable, a, &q, va, 0.0)?;
        let us = self.leg(Side::Stable, &q, y, &vq, eq)?;
        Ok([su, us])
    }
}

/// Builds `phi~` on `targets` (plus the corrupted points) by transport from
/// screened anchors. Anchors are chosen among the targets themselves.
pub fn regularize(
    phi: &MeasurableConjugacy,
    f: &CocycleSpec<f64>,
    g: &CocycleSpec<f64>,
    targets: &[SymbolicPoint],
    cfg: &RigidityConfig,
) -> Result<(TransferMap, RigidityReport)> {
    let (fc, gc) = (HolonomyContext::new(f), HolonomyContext::new(g));
    for ctx in [&fc, &gc] {
        let d = ctx.domination();
        if !(d.theta_s > 0.0 && d.theta_u > 0.0) {
            let (side, theta) = if d.theta_s > 0.0 { ('u', d.theta_u) } else { ('s', d.theta_s) };
            if std::ptr::eq(ctx, &fc) {
                return Err(Error::NotDominated { side, theta });
            }
        }
    }
    let mut all: Vec<SymbolicPoint> = targets.to_vec();
    for (p, _) in &phi.corruption {
        if !all.contains(p) {
            all.push(p.clone());
        }
    }
    all.sort();
    all.dedup();
    distortion_gate(g, &all, cfg)?;

    // anchor screening by the local cohomological residual
    let screened = par_map(&all, |x| -> Option<PlMap<f64>> {
        let vx = phi.value(x).ok()?;
        let vs = phi.value(&x.shift(1)).ok()?;
        let r = d_inf(&f.evaluate_generator(x), &vs.compose(&g.evaluate_generator(x)).compose(&vx.invert()));
        (r <= cfg.screen_factor * cfg.tol).then_some(vx)
    });
    let anchors: Vec<(SymbolicPoint, PlMap<f64>)> = all
        .iter()
        .zip(screened)
        .filter_map(|(x, v)| v.map(|v| (x.clone(), v)))
        .collect();
    let tr = Transport { f: fc, g: gc, space: f.space(), trunc: cfg.trunc_tol };
    let pick = |y: &SymbolicPoint| -> Result<&(SymbolicPoint, PlMap<f64>)> {
        anchors
            .iter()
            .filter(|(a, _)| a != y && a.at(0) == y.at(0))
            .max_by_key(|(a, _)| (a.agreement(y).unwrap_or(u64::MAX), std::cmp::Reverse((*a).clone())))
            .ok_or_else(|| Error::MissingSample(format!("no screened anchor shares the 0-cylinder of {y}")))
    };
    let build = |y: &SymbolicPoint| -> Result<([(PlMap<f64>, f64); 2], SymbolicPoint)> {
        let (a, va) = pick(y)?;
        Ok((tr.routes(a, va, y)?, a.clone()))
    };
    let built = par_map(&all, |y| -> Result<(TransferSample, Check, Check)> {
        let ([(v, e), (w, ew)], _) = build(y)?;
        let path = Check::new(y.to_string(), d_inf(&v, &w), cfg.tol + e + ew);
        let sy = y.shift(1);
        let ([(vs, es), _], _) = build(&sy)?;
        let left = vs.compose(&g.evaluate_generator(y));
        let inv = v.invert();
        let res = d_inf(&f.evaluate_generator(y), &left.compose(&inv));
        let coh = Check::new(y.to_string(), res, cfg.tol + es + left.lipschitz_const() * inv.lipschitz_const() * e);
        Ok((TransferSample { point: y.clone(), phi: v, error_bound: e }, path, coh))
    });
    let mut samples = Vec::with_capacity(all.len());
    let (mut paths, mut cohs) = (Vec::new(), Vec::new());
    for r in built {
        let (s, p, c) = r?;
        samples.push(s);
        paths.push(p);
        cohs.push(c);
    }
    let repaired_points = phi
        .corruption
        .iter()
        .map(|(p, bad)| {
            let s = samples.iter().find(|s| s.point == *p).expect("corrupted points are targets");
            Repair { point: p.clone(), delta: d_inf(bad, &s.phi) }
        })
        .collect();
    let fiber = |m: &PlMap<f64>| m.lipschitz_const().max(1.0 / m.min_slope());
    let fiber_lipschitz_rule = anchors.iter().map(|(_, v)| fiber(v)).fold(1.0, f64::max);
    let fiber_lipschitz_repaired = samples.iter().map(|s| fiber(&s.phi)).fold(1.0, f64::max);
    let items: Vec<(SymbolicPoint, PlMap<f64>)> = samples.iter().map(|s| (s.point.clone(), s.phi.clone())).collect();
    let worst_error = samples.iter().map(|s| s.error_bound).fold(0.0, f64::max);
    let regression = fit_holder(f.space(), &items, 10.0 * worst_error).ok();
    let gamma = tr.f.gamma(Side::Stable);
    let (path_independence, cohomology) = (CheckTable::new(paths), CheckTable::new(cohs));
    let report = RigidityReport {
        gamma,
        beta_gamma: cfg.beta * gamma,
        regression: regression.clone(),
        repaired_points,
        anchors: anchors.len(),
        excluded: all.len() - anchors.len(),
        pass: path_independence.pass && cohomology.pass,
        path_independence,
        cohomology,
        fiber_lipschitz_rule,
        fiber_lipschitz_repaired,
    };
    let base_point = anchors.first().map(|a| a.0.clone()).unwrap_or_else(|| all[0].clone());
    let t = TransferMap {
        period: base_point.period().unwrap_or(0),
        base_point,
        error_bound: worst_error,
        samples,
        beta_budget: report.beta_gamma,
        holder_estimate: regression,
        fiber_lipschitz: fiber_lipschitz_repaired,
        tol: cfg.tol,
    };
    Ok((t, report))
}

/// `regularize` on `count` draws of `mu`.
#[allow(clippy::too_many_arguments)]
pub fn regularize_sampled(
    phi: &MeasurableConjugacy,
    f: &CocycleSpec<f64>,
    g: &CocycleSpec<f64>,
    mu: &MarkovMeasure,
    count: usize,
    depth: usize,
    seed: u64,
    cfg: &RigidityConfig,
) -> Result<(TransferMap, RigidityReport)> {
    let targets = sample_measure(f.space(), mu, count, depth, seed);
    regularize(phi, f, g, &targets, cfg)
}

/// Pairs `(x, x')` with `x'` on the local stable (even index) or unstable
/// (odd index) set of a draw `x` of `mu`.
pub fn local_pairs(
    space: &SftSpace,
    mu: &MarkovMeasure,
    count: usize,
    depth: usize,
    seed: u64,
) -> Vec<(SymbolicPoint, SymbolicPoint)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let x = mu.sample_point(space, depth, &mut rng);
            // vary how far back the pair agrees to spread the distance scales
            let d = 2 + 2 * (i % 8);
            let y = if i % 2 == 0 {
                mu.resample_past(space, &x.shift(-(d as i64) / 2), depth, &mut rng).shift(d as i64 / 2)
            } else {
                mu.resample_future(space, &x.shift(d as i64 / 2), depth, &mut rng).shift(-(d as i64) / 2)
            };
            (x, y)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse_word;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rot_f(space: SftSpace) -> CocycleSpec<f64> {
        CocycleSpec::from_fn(space, 1, 1.0, |w| PlMap::rotation((3 * w[0] as i64 + 7 * w[1] as i64 + 2 * w[2] as i64) as f64 / 100.0))
            .unwrap()
            .with_drift(Potential::symmetric(0.5, 0.05, vec![0.0, 1.0]))
            .unwrap()
    }

    fn psi() -> Potential<f64> {
        Potential::symmetric(0.5, 0.1, vec![0.0, 1.0])
    }

    fn setup() -> (SftSpace, CocycleSpec<f64>, CocycleSpec<f64>, MeasurableConjugacy) {
        let space = SftSpace::full_shift(2);
        let f = rot_f(space.clone());
        let g = f.clone().with_drift(psi().coboundary().unwrap()).unwrap();
        let phi = MeasurableConjugacy::new(ConjugacyRule::Rotation { psi: psi(), base: SymbolicPoint::periodic(&[0]) });
        (space, f, g, phi)
    }

    fn circle(a: f64) -> f64 {
        let r = a.rem_euclid(1.0);
        r.min(1.0 - r)
    }

    #[test]
    fn relation_holds_and_detects_corruption() {
        let (space, f, g, phi) = setup();
        let mu = MarkovMeasure::bernoulli(&space, &[0.5, 0.5]).unwrap();
        let pairs = local_pairs(&space, &mu, 20, 16, 3);
        let cfg = RigidityConfig::default();
        let t = check_conj_hol_relation(&phi, &f, &g, &pairs, &cfg).unwrap();
        assert!(t.pass && t.max_residual < 1e-9, "{t:?}");
        let same = MeasurableConjugacy::new(ConjugacyRule::Rotation { psi: Potential::symmetric(0.5, 0.0, vec![0.0, 1.0]), base: SymbolicPoint::periodic(&[0]) });
        assert_eq!(check_conj_hol_relation(&same, &f, &f, &pairs, &cfg).unwrap().max_residual, 0.0);
        let x = pairs[0].0.clone();
        let bad = phi.clone().corrupt(x.clone(), phi.value(&x).unwrap().then_rotate(&0.2));
        let t = check_conj_hol_relation(&bad, &f, &g, &pairs[..1], &cfg).unwrap();
        assert!(t.max_residual >= 0.2 - 1e-6 && !t.pass);
    }

    #[test]
    fn unbounded_distortion_is_refused() {
        let (space, f, _, phi) = setup();
        let steep = PlMap::from_breakpoints(vec![0.0, 0.2, 0.8], vec![0.0, 0.3, 0.7]).unwrap();
        let g = CocycleSpec::constant(space.clone(), steep);
        let mu = MarkovMeasure::bernoulli(&space, &[0.5, 0.5]).unwrap();
        let pairs = local_pairs(&space, &mu, 4, 16, 3);
        let cfg = RigidityConfig { horizon: 16, ..Default::default() };
        assert!(matches!(check_conj_hol_relation(&phi, &f, &g, &pairs, &cfg), Err(Error::DistortionUnbounded { .. })));
    }

    #[test]
    fn holder_check_on_rotation_conjugacy() {
        let (space, f, _, phi) = setup();
        let mu = MarkovMeasure::bernoulli(&space, &[0.5, 0.5]).unwrap();
        let fit = local_pairs(&space, &mu, 60, 32, 5);
        let fresh = local_pairs(&space, &mu, 60, 32, 6);
        let generic: Vec<_> = sample_measure(&space, &mu, 40, 32, 7)
            .chunks(2)
            .filter(|c| c[0].at(0) == c[1].at(0))
            .map(|c| (c[0].clone(), c[1].clone()))
            .collect();
        let cfg = RigidityConfig::default();
        let h = stable_pair_holder_check(&phi, &f, &fit, &fresh, &generic, &cfg).unwrap();
        assert!(h.pass, "{h:?}");
        assert!(h.exponent >= h.target_exponent - 0.1);
        let one_scale: Vec<_> = fit.iter().filter(|(x, y)| x.agreement(y) == fit[0].0.agreement(&fit[0].1)).cloned().collect();
        assert!(matches!(
            stable_pair_holder_check(&phi, &f, &one_scale, &fresh, &[], &cfg),
            Err(Error::InsufficientScales { .. })
        ));
    }

    #[test]
    fn repair_recovers_ground_truth() {
        let (space, f, g, phi) = setup();
        let mu = MarkovMeasure::bernoulli(&space, &[0.5, 0.5]).unwrap();
        let mut targets = sample_measure(&space, &mu, 80, 16, 11);
        let probes = space.shell_probes(&targets[..3], 12);
        targets.extend(probes);
        // a corrupted point off the sample set, present in both runs
        let extra = SymbolicPoint::new(parse_word("1").unwrap(), parse_word("0110").unwrap(), parse_word("01").unwrap(), -2).unwrap();
        targets.push(extra.clone());
        let cfg = RigidityConfig::default();
        let (clean, rep0) = regularize(&phi, &f, &g, &targets, &cfg).unwrap();
        for s in &clean.samples {
            assert!(d_inf(&s.phi, &phi.value(&s.point).unwrap()) < 1e-6);
        }
        assert!(rep0.pass && rep0.excluded == 0);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut bad = phi.clone();
        for x in targets.iter().take(10) {
            bad = bad.corrupt(x.clone(), phi.value(x).unwrap().then_rotate(&rng.gen_range(0.05..0.45)));
        }
        bad = bad.corrupt(extra.clone(), PlMap::rotation(0.3));
        let (fixed, rep) = regularize(&bad, &f, &g, &targets, &cfg).unwrap();
        assert_eq!(rep.repaired_points.len(), 11);
        for r in &rep.repaired_points {
            let truth = psi().eval(&r.point) - psi().eval(&SymbolicPoint::periodic(&[0]));
            let got = fixed.get(&r.point).unwrap().phi.rotation_angle().unwrap();
            assert!(circle(got - truth) < 1e-6);
            assert!(r.delta > 0.04);
        }
        assert!(rep.pass && rep.path_independence.max_residual < 1e-6);
        let (e0, e1) = (rep0.regression.unwrap().exponent, rep.regression.unwrap().exponent);
        assert!((e0 - e1).abs() <= 0.02 && e1 >= rep.beta_gamma - 0.1, "{e0} {e1} {}", rep.beta_gamma);
        assert!(rep.fiber_lipschitz_repaired <= rep.fiber_lipschitz_rule * (1.0 + cfg.tol));
    }

    #[test]
    fn json_round_trip() {
        let (_, _, _, phi) = setup();
        let bad = phi.corrupt(SymbolicPoint::periodic(&[1]), PlMap::rotation(0.25));
        let back = MeasurableConjugacy::from_json(&bad.to_json().unwrap()).unwrap();
        assert_eq!(back, bad);
    }
}
