//! Periodic orbits, homoclinic points and combinatorial shadowing.

use std::collections::BTreeSet;

use super::{SftSpace, Symbol, SymbolicPoint, Word};
use crate::error::{Error, Result};

/// Default bound on the number of candidate words visited by enumerations.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 22;

/// All points of period at most `max_period`, each listed once.
pub fn periodic_points(space: &SftSpace, max_period: usize, cap: usize) -> Result<Vec<SymbolicPoint>> {
    if max_period == 0 {
        return Err(Error::Domain("max_period must be at least 1".into()));
    }
    let mut found = BTreeSet::new();
    let mut visited = 0usize;
    for n in 1..=max_period {
        let mut word = Vec::with_capacity(n);
        closed_words(space, n, &mut word, &mut visited, cap, &mut |w| {
            found.insert(SymbolicPoint::periodic(w));
        })?;
    }
    Ok(found.into_iter().collect())
}

fn closed_words(
    space: &SftSpace,
    n: usize,
    word: &mut Word,
    visited: &mut usize,
    cap: usize,
    emit: &mut impl FnMut(&[Symbol]),
) -> Result<()> {
    *visited += 1;
    if *visited > cap {
        return Err(Error::ResourceLimit(format!("periodic enumeration exceeded {cap} words")));
    }
    if word.len() == n {
        if space.allows(word[n - 1], word[0]) {
            emit(word);
        }
        return Ok(());
    }
    for s in 0..space.k() as Symbol {
        if word.last().is_none_or(|&p| space.allows(p, s)) {
            word.push(s);
            closed_words(space, n, word, visited, cap, emit)?;
            word.pop();
        }
    }
    Ok(())
}

/// Points forward asymptotic to `x0` (in phase) and backward asymptotic to
/// `sigma^left_phase(x0)`, free on the coordinates `-core_len .. core_len`.
pub fn homoclinic_class(
    space: &SftSpace,
    x0: &SymbolicPoint,
    core_len: usize,
    left_phase: i64,
    cap: usize,
) -> Result<Vec<SymbolicPoint>> {
    let n0 = x0
        .period()
        .ok_or_else(|| Error::Domain(format!("base point {x0} is not periodic")))?;
    let lo = -(core_len as i64);
    let hi = core_len as i64;
    let left_ref = |i: i64| x0.at(i + left_phase);
    let mut out = BTreeSet::new();
    let mut free = Vec::with_capacity(2 * core_len);
    let mut visited = 0usize;
    homoclinic_fill(space, lo, hi, &left_ref, &|i| x0.at(i), &mut free, &mut visited, cap, &mut |w| {
        out.insert(SymbolicPoint::from_fn(n0, n0, lo, hi, |i| {
            if i < lo {
                left_ref(i)
            } else if i >= hi {
                x0.at(i)
            } else {
                w[(i - lo) as usize]
            }
        }));
    })?;
    Ok(out.into_iter().collect())
}

#[allow(clippy::too_many_arguments)]
fn homoclinic_fill(
    space: &SftSpace,
    lo: i64,
    hi: i64,
    left_ref: &dyn Fn(i64) -> Symbol,
    right_ref: &dyn Fn(i64) -> Symbol,
    free: &mut Word,
    visited: &mut usize,
    cap: usize,
    emit: &mut impl FnMut(&[Symbol]),
) -> Result<()> {
    *visited += 1;
    if *visited > cap {
        return Err(Error::ResourceLimit(format!("homoclinic enumeration exceeded {cap} words")));
    }
    let pos = lo + free.len() as i64;
    let prev = free.last().copied().unwrap_or_else(|| left_ref(lo - 1));
    if pos == hi {
        if space.allows(prev, right_ref(hi)) {
            emit(free);
        }
        return Ok(());
    }
    for s in 0..space.k() as Symbol {
        if space.allows(prev, s) {
            free.push(s);
            homoclinic_fill(space, lo, hi, left_ref, right_ref, free, visited, cap, emit)?;
            free.pop();
        }
    }
    Ok(())
}

/// The homoclinic points of a periodic `x0` free on `-core_len .. core_len`.
///
/// For period `n0 > 1` this also contains the points forward asymptotic to
/// `x0` and backward asymptotic to `sigma^(n0-1)(x0)`.
pub fn homoclinic_points(
    space: &SftSpace,
    x0: &SymbolicPoint,
    core_len: usize,
    cap: usize,
) -> Result<Vec<SymbolicPoint>> {
    let n0 = x0
        .period()
        .ok_or_else(|| Error::Domain(format!("base point {x0} is not periodic")))?;
    let mut all: BTreeSet<SymbolicPoint> = homoclinic_class(space, x0, core_len, 0, cap)?.into_iter().collect();
    if n0 > 1 {
        all.extend(homoclinic_class(space, x0, core_len, n0 as i64 - 1, cap)?);
    }
    Ok(all.into_iter().collect())
}

/// The periodic point repeating `y_lo .. y_hi`, placed at coordinates `lo .. hi`.
pub fn closing_window(space: &SftSpace, y: &SymbolicPoint, lo: i64, hi: i64) -> Result<SymbolicPoint> {
    if hi <= lo {
        return Err(Error::Domain(format!("empty closing window {lo}..{hi}")));
    }
    let word = y.window(lo, hi);
    if !space.is_admissible_word(&word) {
        return Err(Error::InvalidPoint(format!("{y} is not admissible on {lo}..{hi}")));
    }
    let (last, first) = (word[word.len() - 1], word[0]);
    if !space.allows(last, first) {
        return Err(Error::InadmissibleLoop(last, first));
    }
    Ok(SymbolicPoint::periodic_with_phase(&word, lo))
}

/// The `2n`-periodic point shadowing the orbit segment `sigma^-n(y) .. sigma^(n-1)(y)`.
pub fn closing_point(space: &SftSpace, y: &SymbolicPoint, n: usize) -> Result<SymbolicPoint> {
    if n == 0 {
        return Err(Error::Domain("closing length must be positive".into()));
    }
    closing_window(space, y, -(n as i64), n as i64)
}

/// Result of checking the exponential shadowing estimate of a closing point.
///
/// With `M` the agreement radius of `sigma^n(y)` and `sigma^-n(y)`, the
/// estimate asks `d(sigma^(j-n) y, sigma^(j-n) z) <= rho^-min(j, 2n-j) * rho^-M`
/// for `0 <= j <= 2n`, i.e. an agreement radius of at least `min(j, 2n-j) + M`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosingCheck {
    pub n: usize,
    /// Agreement radius of `sigma^n(y)` and `sigma^-n(y)`; `None` if equal.
    pub loop_gap: Option<u64>,
    /// `(j, observed agreement, required agreement)`; `None` means equal points
    /// (observed) or a zero right-hand side (required).
    pub rows: Vec<(usize, Option<u64>, Option<u64>)>,
    pub holds: bool,
}

pub fn verify_closing(y: &SymbolicPoint, z: &SymbolicPoint, n: usize) -> ClosingCheck {
    let n_i = n as i64;
    let loop_gap = y.shift(n_i).agreement(&y.shift(-n_i));
    let mut holds = true;
    let rows = (0..=2 * n)
        .map(|j| {
            let offset = j as i64 - n_i;
            let observed = y.shift(offset).agreement(&z.shift(offset));
            let required = loop_gap.map(|m| m + j.min(2 * n - j) as u64);
            let ok = match (observed, required) {
                (None, _) => true,
                (Some(_), None) => false,
                (Some(o), Some(r)) => o >= r,
            };
            holds &= ok;
            (j, observed, required)
        })
        .collect();
    ClosingCheck { n, loop_gap, rows, holds }
}

/// A finite sequence of points whose successive shift images stay within `eps`.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoOrbit {
    points: Vec<SymbolicPoint>,
    eps: f64,
}

impl PseudoOrbit {
    pub fn new(space: &SftSpace, points: Vec<SymbolicPoint>, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("pseudo-orbit gap {eps} must be positive")));
        }
        let worst = Self::max_gap_of(space, &points);
        if worst > eps {
            return Err(Error::Domain(format!("pseudo-orbit gap {worst} exceeds {eps}")));
        }
        Ok(PseudoOrbit { points, eps })
    }

    /// The closed loop `sigma^lo(y), ..., sigma^(hi-1)(y), sigma^lo(y)`, with the
    /// smallest admissible gap bound.
    pub fn loop_segment(space: &SftSpace, y: &SymbolicPoint, lo: i64, hi: i64) -> Self {
        let mut points: Vec<SymbolicPoint> = (lo..hi).map(|i| y.shift(i)).collect();
        points.push(y.shift(lo));
        let eps = Self::max_gap_of(space, &points).max(f64::MIN_POSITIVE);
        PseudoOrbit { points, eps }
    }

    fn max_gap_of(space: &SftSpace, points: &[SymbolicPoint]) -> f64 {
        points
            .windows(2)
            .map(|p| space.distance(&p[0].shift(1), &p[1]))
            .fold(0.0, f64::max)
    }

    pub fn points(&self) -> &[SymbolicPoint] {
        &self.points
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn max_gap(&self, space: &SftSpace) -> f64 {
        Self::max_gap_of(space, &self.points)
    }
}
