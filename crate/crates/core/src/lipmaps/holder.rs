use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::metric::seg_max_dist;
use super::PlMap;
use crate::error::{Error, Result};

pub const DEFAULT_HOLDER_TOL: f64 = 1e-9;

const MAX_REFINEMENTS: usize = 200_000;
const INITIAL_CELLS: usize = 64;

/// Statistics of the chord displacement `D(p) = F(p + t) - F(p)`:
/// `(max_p dist(D, Z), max_p D, min_p D)`.
fn chord_stats(f: &PlMap<f64>, t: f64) -> (f64, f64, f64) {
    let mut ps: Vec<f64> = f.breakpoints().iter().flat_map(|&x| [x, (x - t).rem_euclid(1.0)]).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    let d: Vec<f64> = ps.iter().map(|p| f.eval(&(p + t)) - f.eval(p)).collect();
    let n = d.len();
    let mut phi = 0.0f64;
    for i in 0..n {
        phi = phi.max(seg_max_dist(&d[i], &d[(i + 1) % n]));
    }
    let hi = d.iter().copied().fold(f64::MIN, f64::max);
    let lo = d.iter().copied().fold(f64::MAX, f64::min);
    (phi, hi, lo)
}

struct Cell {
    upper: f64,
    t0: f64,
    t1: f64,
    lo_stats: (f64, f64, f64),
    hi_stats: (f64, f64, f64),
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.upper == other.upper
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper.total_cmp(&other.upper)
    }
}

pub fn holder_const(f: &PlMap<f64>, beta: f64) -> Result<f64> {
    holder_const_tol(f, beta, DEFAULT_HOLDER_TOL)
}

/// Upper bound on `sup d(f(p), f(q)) / d(p, q)^beta`, within `tol` (relative
/// to the value when it exceeds 1) of the supremum.
///
/// Chords of length `t <= t_min` stay inside a steepest segment, where the
/// ratio is `L t^(1 - beta)`. Longer chords are handled by branch and bound
/// on `t`, using that `D(p)` is increasing in `t` for every `p`.
pub fn holder_const_tol(f: &PlMap<f64>, beta: f64, tol: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidExponent(beta));
    }
    let slopes = f.slopes();
    let lip = slopes.iter().copied().fold(0.0, f64::max);
    if beta == 1.0 {
        return Ok(lip);
    }
    let steep_len = (0..slopes.len())
        .filter(|&i| slopes[i] == lip)
        .map(|i| {
            let (x0, x1, _, _) = f.segment(i);
            x1 - x0
        })
        .fold(0.0, f64::max);
    let t_min = steep_len.min(0.5 / lip).min(0.5);
    let mut lower = lip * t_min.powf(1.0 - beta);
    if t_min >= 0.5 {
        return Ok(lower);
    }
    let ratio = |t: f64, phi: f64| phi / t.powf(beta);
    let make = |t0: f64, t1: f64, a: (f64, f64, f64), b: (f64, f64, f64)| {
        let num = 0.5f64.min(b.1).min(1.0 - a.2).min(lip * t1);
        Cell { upper: num / t0.powf(beta), t0, t1, lo_stats: a, hi_stats: b }
    };

    let mut heap = BinaryHeap::new();
    let step = (0.5 - t_min) / INITIAL_CELLS as f64;
    let mut prev = chord_stats(f, t_min);
    for i in 0..INITIAL_CELLS {
        let t0 = t_min + step * i as f64;
        let t1 = if i + 1 == INITIAL_CELLS { 0.5 } else { t_min + step * (i + 1) as f64 };
        let next = chord_stats(f, t1);
        lower = lower.max(ratio(t1, next.0));
        heap.push(make(t0, t1, prev, next));
        prev = next;
    }
    for _ in 0..MAX_REFINEMENTS {
        let Some(cell) = heap.pop() else { break };
        if cell.upper <= lower + tol * lower.max(1.0) {
            return Ok(cell.upper.max(lower));
        }
        let mid = 0.5 * (cell.t0 + cell.t1);
        let ms = chord_stats(f, mid);
        lower = lower.max(ratio(mid, ms.0));
        heap.push(make(cell.t0, mid, cell.lo_stats, ms));
        heap.push(make(mid, cell.t1, ms, cell.hi_stats));
    }
    Ok(heap.peek().map_or(lower, |c| c.upper.max(lower)))
}
