use std::time::Instant;

use livsic_core::error::Error;
use livsic_core::holonomy::{verify_holonomy_axioms, HolonomyContext, Side};
use livsic_core::lipmaps::{d_inf, family_fb, lip_seminorm_diff, PlMap};
use livsic_core::par::par_map;
use livsic_core::rigidity::{local_pairs, regularize, RigidityConfig};
use livsic_core::scalar::{Rational, Scalar};
use livsic_core::symbolic::{
    closing_point, homoclinic_points, sample_measure, verify_closing, SftSpace, SymbolicPoint, DEFAULT_ENUMERATION_CAP,
};
use livsic_core::transfer::{
    build_transfer, check_periodic_data, NOISE_FLOOR, verify_cohomology, verify_holonomy_intertwining, verify_side_agreement,
};
use livsic_core::cocycle::check_bounded_distortion;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ConfigError, Experiment, ExperimentConfig};
use crate::report::{csv_table, Outcome, ReportDocument, Row, Table};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Module {
        context: String,
        #[source]
        source: Error,
    },
    #[error("writing outputs: {0}")]
    Io(#[from] std::io::Error),
}

trait Context<T> {
    fn context(self, what: &str) -> Result<T, RunError>;
}

impl<T> Context<T> for Result<T, Error> {
    fn context(self, what: &str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Module { context: what.to_string(), source })
    }
}

type Produced = (Vec<Row>, Vec<Table>);

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let start = Instant::now();
    let (rows, tables) = match cfg.experiment {
        Experiment::MetricSuite => metric_suite(cfg)?,
        Experiment::Holonomy => holonomy(cfg)?,
        Experiment::LivsicTransfer => livsic_transfer(cfg)?,
        Experiment::MeasurableRigidity => measurable_rigidity(cfg)?,
        Experiment::ClosingLemma => closing_lemma(cfg)?,
        Experiment::Distortion => distortion(cfg)?,
    };
    let report = ReportDocument::new(cfg.experiment.id(), cfg.digest(), cfg.seed, rows, start.elapsed().as_secs_f64());
    Ok(Outcome { report, tables })
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

#[derive(Serialize)]
struct MetricSample {
    triple: usize,
    right_invariance: f64,
    left_lipschitz: f64,
    submultiplicative: f64,
    right_invariance_exact: f64,
    left_lipschitz_exact: f64,
    submultiplicative_exact: f64,
}

/// Residuals of the three composition laws; non-negative, zero when they hold.
fn composition_laws<T: Scalar>(f: &PlMap<T>, g: &PlMap<T>, h: &PlMap<T>) -> [T; 3] {
    let zero = T::zero();
    let dgh = d_inf(g, h);
    let right = d_inf(&g.compose(f), &h.compose(f)) - dgh.clone();
    let right = if right < zero { zero.clone() - right } else { right };
    let one = T::one();
    // the inequalities are scored relative to their right-hand side once it exceeds 1
    let excess = |lhs: T, rhs: T| {
        let v = lhs - rhs.clone();
        if v < zero {
            zero.clone()
        } else if rhs > one {
            v / rhs
        } else {
            v
        }
    };
    let left = excess(d_inf(&f.compose(g), &f.compose(h)), f.lipschitz_const() * dgh);
    let sub = excess(g.compose(f).lipschitz_const(), g.lipschitz_const() * f.lipschitz_const());
    [right, left, sub]
}

fn random_rational(rng: &mut ChaCha8Rng, below_half: bool) -> Rational {
    let q = rng.gen_range(3..=400i64);
    let p = if below_half { rng.gen_range(1..=(q - 1) / 2) } else { rng.gen_range(1..q) };
    Rational::from_ratio(p, q)
}

fn metric_suite(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let triples = cfg.param_usize("triples", 200)?;
    let pieces = cfg.param_usize("pieces", 4)?.max(2);
    let fb_pairs = cfg.param_usize("fb_pairs", 50)?;
    let tol = cfg.tol("tol");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let maps: Vec<[PlMap<Rational>; 3]> = (0..triples)
        .map(|_| std::array::from_fn(|_| PlMap::random(&mut rng, pieces, 64, 4)))
        .collect();
    let samples: Vec<MetricSample> = par_map(&maps, |[f, g, h]| {
        let exact = composition_laws(f, g, h).map(|r| r.to_f64());
        let float = composition_laws(&f.to_float(), &g.to_float(), &h.to_float());
        MetricSample {
            triple: 0,
            right_invariance: float[0],
            left_lipschitz: float[1],
            submultiplicative: float[2],
            right_invariance_exact: exact[0],
            left_lipschitz_exact: exact[1],
            submultiplicative_exact: exact[2],
        }
    })
    .into_iter()
    .enumerate()
    .map(|(i, s)| MetricSample { triple: i, ..s })
    .collect();

    let mut fb = Vec::with_capacity(fb_pairs);
    while fb.len() < fb_pairs {
        let (b, c) = (random_rational(&mut rng, true), random_rational(&mut rng, true));
        if b != c {
            fb.push((b, c));
        }
    }
    let half = Rational::from_ratio(1, 2);
    let fb_short = fb
        .iter()
        .map(|(b, c)| -> Result<f64, RunError> {
            let l = lip_seminorm_diff(&family_fb(b.clone()).context("tent map")?, &family_fb(c.clone()).context("tent map")?);
            Ok(if l < half { (half.clone() - l).to_f64() } else { 0.0 })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let col = |k: fn(&MetricSample) -> f64| max_of(samples.iter().map(k));
    let rows = vec![
        Row::new("sup distance is invariant under right composition", col(|s| s.right_invariance), tol),
        Row::new("sup distance is invariant under right composition (exact)", col(|s| s.right_invariance_exact), 0.0),
        Row::new("left composition scales sup distance by at most the Lipschitz constant", col(|s| s.left_lipschitz), tol),
        Row::new(
            "left composition scales sup distance by at most the Lipschitz constant (exact)",
            col(|s| s.left_lipschitz_exact),
            0.0,
        ),
        Row::new("Lipschitz constant is submultiplicative under composition", col(|s| s.submultiplicative), tol),
        Row::new("Lipschitz constant is submultiplicative under composition (exact)", col(|s| s.submultiplicative_exact), 0.0),
        Row::new("tent family pairs stay half apart in Lipschitz seminorm (exact)", max_of(fb_short), 0.0),
    ];
    Ok((rows, vec![csv_table("metric_samples", samples)]))
}

#[derive(Serialize)]
struct ConvergenceRecord {
    pair: usize,
    side: char,
    n: usize,
    increment: f64,
    bound: f64,
}

#[derive(Serialize)]
struct DisplacementRecord {
    set: &'static str,
    distance: f64,
    displacement: f64,
    bound: f64,
}

type Pair = (SymbolicPoint, SymbolicPoint);

/// `count` pairs on a common stable (even) or unstable (odd) set.
fn side_pairs(cfg: &ExperimentConfig, side: Side, count: usize, depth: usize, seed: u64) -> Vec<Pair> {
    let skip = if side == Side::Stable { 0 } else { 1 };
    local_pairs(&cfg.space, &cfg.measure, 2 * count, depth, seed).into_iter().skip(skip).step_by(2).collect()
}

fn triples(cfg: &ExperimentConfig, side: Side, count: usize, depth: usize, seed: u64) -> Vec<(SymbolicPoint, SymbolicPoint, SymbolicPoint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (space, mu) = (&cfg.space, &cfg.measure);
    (0..count)
        .map(|i| {
            let x = mu.sample_point(space, depth, &mut rng);
            let mut partner = |d: i64| match side {
                Side::Stable => mu.resample_past(space, &x.shift(-d), depth, &mut rng).shift(d),
                Side::Unstable => mu.resample_future(space, &x.shift(d), depth, &mut rng).shift(-d),
            };
            let y = partner(1 + (i % 5) as i64);
            let z = partner((i % 3) as i64);
            (x, y, z)
        })
        .collect()
}

fn holonomy(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let c = &cfg.cocycle("cocycle", "F")?.float;
    let pairs = cfg.param_usize("pairs", 40)?;
    let n_max = cfg.param_usize("n_max", 40)?;
    let n_triples = cfg.param_usize("triples", 10)?;
    let depth = cfg.param_usize("depth", 24)?;
    let (tol, trunc, rate, margin) = (cfg.tol("tol"), cfg.tol("trunc"), cfg.tol("rate"), cfg.tol("margin"));
    let ctx = HolonomyContext::new(c);
    let dom = ctx.domination();
    let rho = c.space().rho();
    let mut rows = vec![Row::new(
        "generators are dominated by the base expansion",
        dom.max_lip.max(dom.max_lip_inv),
        rho.powf(c.alpha()),
    )];
    if !dom.su_dominated {
        return Ok((rows, Vec::new()));
    }

    let fit = side_pairs(cfg, Side::Stable, pairs, depth, cfg.seed);
    let fresh = side_pairs(cfg, Side::Stable, pairs, depth, cfg.seed.wrapping_add(1));
    let unstable = side_pairs(cfg, Side::Unstable, pairs, depth, cfg.seed.wrapping_add(2));
    let jobs: Vec<(Side, &Pair)> =
        fit.iter().map(|p| (Side::Stable, p)).chain(unstable.iter().map(|p| (Side::Unstable, p))).collect();
    let tables = par_map(&jobs, |(side, (x, y))| ctx.convergence_table(*side, x, y, n_max))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .context("holonomy convergence table")?;
    let mut shortfall: f64 = 0.0;
    let mut over_bound = 0;
    let mut records = Vec::new();
    for (i, ((side, _), t)) in jobs.iter().zip(&tables).enumerate() {
        let target = -ctx.theta(*side) * rho.ln();
        let s = if t.rows.iter().all(|r| r.increment <= NOISE_FLOOR) {
            0.0
        } else {
            t.slope.map_or(f64::INFINITY, |s| (1.0 - s / target).max(0.0))
        };
        shortfall = shortfall.max(s);
        for r in &t.rows {
            if r.increment > r.bound * (1.0 + 1e-9) + 1e-15 {
                over_bound += 1;
            }
            records.push(ConvergenceRecord { pair: i, side: side.letter(), n: r.n, increment: r.increment, bound: r.bound });
        }
    }
    rows.push(Row::new("holonomy increments decay at the domination rate", shortfall, rate));
    rows.push(Row::count("holonomy increments stay below the certified tail", over_bound));

    for side in [Side::Stable, Side::Unstable] {
        let ts = triples(cfg, side, n_triples, depth, cfg.seed.wrapping_add(3 + side as u64));
        let rep = verify_holonomy_axioms(&ctx, side, &ts, trunc, tol).context("holonomy axioms")?;
        let label = if side == Side::Stable { "stable" } else { "unstable" };
        rows.push(Row::new(format!("{label} holonomy composition axiom"), rep.max_composition, tol));
        rows.push(Row::new(format!("{label} holonomy equivariance axiom"), rep.max_equivariance, tol));
    }

    let displacement = |set: &[Pair]| -> Result<Vec<(f64, f64)>, RunError> {
        par_map(set, |(x, y)| ctx.stable(x, y, trunc).map(|h| (c.space().distance(x, y), d_inf(&h.map, &PlMap::identity()))))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .context("stable holonomy")
    };
    let alpha = c.alpha();
    let fit_data = displacement(&fit)?;
    let fresh_data = displacement(&fresh)?;
    let constant = margin * max_of(fit_data.iter().filter(|p| p.0 > 0.0).map(|&(d, v)| v / d.powf(alpha)));
    let excess = max_of(fresh_data.iter().map(|&(d, v)| {
        let b = constant * d.powf(alpha);
        if v <= tol {
            0.0
        } else if b > 0.0 {
            v / b
        } else {
            f64::INFINITY
        }
    }));
    rows.push(Row::new("holonomy displacement within fitted Hölder bound", excess, 1.0));
    let disp_records = fit_data
        .iter()
        .map(|p| ("fit", p))
        .chain(fresh_data.iter().map(|p| ("fresh", p)))
        .map(|(set, &(distance, displacement))| DisplacementRecord {
            set,
            distance,
            displacement,
            bound: constant * distance.powf(alpha),
        });
    Ok((rows, vec![csv_table("convergence", records), csv_table("displacement", disp_records)]))
}

#[derive(Serialize)]
struct SampleRecord {
    point: String,
    angle: Option<f64>,
    displacement: f64,
    error_bound: f64,
}

fn livsic_transfer(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let f = cfg.cocycle("f", "F")?;
    let g = cfg.cocycle("g", "G")?;
    let x0 = cfg.param_base("base", "0")?;
    let core_len = cfg.param_usize("core_len", 4)?;
    let max_period = cfg.param_usize("max_period", 6)?;
    let min_samples = cfg.param_usize("min_samples", 200)?;
    let n_pairs = cfg.param_usize("intertwining_pairs", 40)?;
    let truth = cfg.param_f64("exponent")?;
    let (tol, trunc, periodic_tol, exp_tol) = (cfg.tol("tol"), cfg.tol("trunc"), cfg.tol("periodic"), cfg.tol("exponent"));

    let mut rows = Vec::new();
    let (exact, report) = match (&f.exact, &g.exact) {
        (Some(fe), Some(ge)) => (true, check_periodic_data(fe, ge, max_period, 0.0)),
        _ => (false, check_periodic_data(&f.float, &g.float, max_period, periodic_tol)),
    };
    let report = report.context("periodic data")?;
    if exact {
        rows.push(Row::new("periodic data coincide (exact)", report.worst_residual, 0.0));
    } else {
        rows.push(Row::new("periodic data coincide", report.worst_residual, periodic_tol));
    }
    if !report.coincide {
        return Ok((rows, Vec::new()));
    }

    let (f, g) = (&f.float, &g.float);
    let core_len = wide_enough(&cfg.space, &x0, core_len, min_samples)?;
    let t = build_transfer(f, g, &x0, core_len, trunc).context("transfer map")?;
    rows.push(Row::count("homoclinic samples short of the requested count", min_samples.saturating_sub(t.samples.len())));
    let coh = verify_cohomology(&t, f, g, tol).context("cohomological equation")?;
    rows.push(Row::from_table("transfer map solves the cohomological equation", &coh, tol));
    let agree = verify_side_agreement(&t, f, g, &t.points(), tol).context("stable/unstable agreement")?;
    rows.push(Row::from_table("stable and unstable constructions agree", &agree.table, tol));
    if !agree.closing.is_empty() {
        let worst = max_of(agree.closing.iter().filter_map(|r| r.closing_residual));
        rows.push(Row::new("closing points along the base orbit have matching periodic data", worst, periodic_tol));
    }

    let ys = t.points();
    let pairs: Vec<Pair> = ys
        .iter()
        .flat_map(|y| ys.iter().filter(move |z| *z != y && y.in_stable_set(z)).map(move |z| (y.clone(), z.clone())))
        .take(n_pairs)
        .collect();
    let hc = verify_holonomy_intertwining(&t, f, g, &pairs, tol).context("holonomy intertwining")?;
    rows.push(Row::from_table("transfer map intertwines stable holonomies", &hc, tol));

    let fitted = t.holder_estimate.as_ref().map_or(f64::NAN, |h| h.exponent);
    match truth {
        Some(e) => rows.push(Row::new("transfer map Hölder exponent matches the construction", (fitted.min(1.0) - e).abs(), exp_tol)),
        None => rows.push(Row::new(
            "transfer map Hölder exponent reaches the regularity budget",
            (t.beta_budget - fitted).max(0.0),
            exp_tol,
        )),
    }

    let records = t.samples.iter().map(|s| SampleRecord {
        point: s.point.to_string(),
        angle: s.phi.rotation_angle(),
        displacement: d_inf(&s.phi, &PlMap::identity()),
        error_bound: s.error_bound,
    });
    let tables = vec![
        csv_table("transfer_samples", records),
        Table { name: "cohomology".into(), csv: coh.to_csv() },
        Table { name: "agreement".into(), csv: agree.table.to_csv() },
    ];
    Ok((rows, tables))
}

fn measurable_rigidity(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let f = &cfg.cocycle("f", "F")?.float;
    let g = &cfg.cocycle("g", "G")?.float;
    let phi = cfg.conjugacy.as_ref().ok_or_else(|| ConfigError::new("conjugacy", "missing"))?;
    let count = cfg.param_usize("targets", 80)?;
    let depth = cfg.param_usize("depth", 16)?;
    let rc = RigidityConfig {
        tol: cfg.tol("tol"),
        trunc_tol: cfg.tol("trunc"),
        horizon: cfg.param_usize("horizon", 24)?,
        k_max: cfg.tol("k_max"),
        beta: cfg.param_f64("beta")?.unwrap_or(1.0),
        holder_margin: cfg.tol("margin"),
        ..RigidityConfig::default()
    };
    let probes = cfg.param_usize("probes", 4)?;
    let mut targets = sample_measure(&cfg.space, &cfg.measure, count, depth, cfg.seed);
    // shell neighbours give the exponent fit one clean pair per scale
    let shells = cfg.space.shell_probes(&targets[..probes.min(targets.len())], depth as u64);
    targets.extend(shells);
    for (p, _) in &phi.corruption {
        if !targets.contains(p) {
            targets.push(p.clone());
        }
    }
    let (fixed, rep) = regularize(phi, f, g, &targets, &rc).context("regularization")?;

    let mut recovery = 0.0f64;
    for (p, _) in &phi.corruption {
        let truth = phi.rule_value(p).context("conjugacy rule")?;
        recovery = recovery.max(fixed.get(p).map_or(f64::INFINITY, |s| d_inf(&s.phi, &truth)));
    }
    let missed = phi.corruption.iter().filter(|(p, _)| !rep.repaired_points.iter().any(|r| r.point == *p)).count();
    let exponent = rep.regression.as_ref().map_or(f64::NAN, |h| h.exponent);
    let rows = vec![
        Row::new("repaired conjugacy recovers the rule at corrupted points", recovery, rc.tol),
        Row::count("corrupted points left unrepaired", missed),
        Row::new("bracket transport is path independent", rep.path_independence.max_residual, rc.tol),
        Row::new("repaired conjugacy solves the cohomological equation", rep.cohomology.max_residual, rc.tol),
        Row::new("repaired Hölder exponent reaches the regularity budget", (rep.beta_gamma - exponent).max(0.0), cfg.tol("exponent")),
    ];
    let tables = vec![
        Table { name: "repairs".into(), csv: rep.repairs_csv() },
        Table { name: "path_independence".into(), csv: rep.path_independence.to_csv() },
    ];
    Ok((rows, tables))
}

const MAX_CORE_LEN: usize = 12;

/// Smallest free window from `start` on with at least `count` homoclinic points.
fn wide_enough(space: &SftSpace, x0: &SymbolicPoint, start: usize, count: usize) -> Result<usize, RunError> {
    let mut core_len = start;
    while core_len < MAX_CORE_LEN
        && homoclinic_points(space, x0, core_len, DEFAULT_ENUMERATION_CAP).context("homoclinic points")?.len() < count
    {
        core_len += 1;
    }
    Ok(core_len)
}

#[derive(Serialize)]
struct ClosingRecord {
    point: String,
    n: usize,
    outcome: &'static str,
    /// Largest shortfall of the observed agreement radius below the required one.
    deficit: Option<u64>,
}

fn closing_lemma(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let x0 = cfg.param_base("base", "0")?;
    let count = cfg.param_usize("samples", 100)?;
    let n_min = cfg.param_usize("n_min", 2)?.max(1);
    let n_max = cfg.param_usize("n_max", 8)?;
    let space = &cfg.space;
    let core_len = wide_enough(space, &x0, cfg.param_usize("core_len", 4)?, count)?;
    let mut points = homoclinic_points(space, &x0, core_len, DEFAULT_ENUMERATION_CAP).context("homoclinic points")?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    points.shuffle(&mut rng);
    points.truncate(count);
    points.sort();

    let mut records = Vec::new();
    let mut deficit_max = 0u64;
    let (mut mismatched, mut aperiodic, mut unexpected) = (0, 0, 0);
    for y in &points {
        for n in n_min..=n_max {
            let word = y.window(-(n as i64), n as i64);
            let loop_ok = space.allows(word[word.len() - 1], word[0]);
            let (outcome, deficit) = match closing_point(space, y, n) {
                Ok(z) => {
                    if !loop_ok {
                        mismatched += 1;
                    }
                    if z.period().is_none_or(|p| (2 * n) % p != 0) || space.check_point(&z).is_err() {
                        aperiodic += 1;
                    }
                    let chk = verify_closing(y, &z, n);
                    let d = chk
                        .rows
                        .iter()
                        .map(|&(_, obs, req)| match (obs, req) {
                            (None, _) => 0,
                            (Some(_), None) => u64::MAX,
                            (Some(o), Some(r)) => r.saturating_sub(o),
                        })
                        .max()
                        .unwrap_or(0);
                    deficit_max = deficit_max.max(d);
                    ("closed", Some(d))
                }
                Err(Error::InadmissibleLoop(..)) => {
                    if loop_ok {
                        mismatched += 1;
                    }
                    ("inadmissible", None)
                }
                Err(_) => {
                    unexpected += 1;
                    ("error", None)
                }
            };
            records.push(ClosingRecord { point: y.to_string(), n, outcome, deficit });
        }
    }
    let rows = vec![
        Row::count("homoclinic points short of the requested count", count.saturating_sub(points.len())),
        Row::new("closing points satisfy the exponential shadowing estimate", deficit_max as f64, 0.0),
        Row::count("closing points that are not admissible periodic orbits", aperiodic),
        Row::count("loops whose admissibility disagrees with the outcome", mismatched),
        Row::count("closing attempts failing with other errors", unexpected),
    ];
    Ok((rows, vec![csv_table("closing", records)]))
}

#[derive(Serialize)]
struct DistortionRecord {
    n: usize,
    k: f64,
}

fn distortion(cfg: &ExperimentConfig) -> Result<Produced, RunError> {
    let c = cfg.cocycle("cocycle", "F")?;
    let horizon = cfg.param_usize("horizon", 24)?;
    let count = cfg.param_usize("samples", 32)?;
    let depth = cfg.param_usize("depth", 16)?;
    let samples = sample_measure(&cfg.space, &cfg.measure, count, depth, cfg.seed);
    let d = match &c.exact {
        Some(e) => check_bounded_distortion(e, horizon, &samples),
        None => check_bounded_distortion(&c.float, horizon, &samples),
    }
    .context("distortion")?;
    let rows = vec![
        Row::new("forward compositions have bounded distortion", d.k_est, cfg.tol("k_max")),
        Row::new("distortion does not grow with the horizon", d.growth_rate, cfg.tol("growth")),
    ];
    let records = d.curve.iter().enumerate().map(|(i, &k)| DistortionRecord { n: i + 1, k });
    Ok((rows, vec![csv_table("distortion", records)]))
}
