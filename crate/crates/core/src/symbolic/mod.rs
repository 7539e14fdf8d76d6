//! Shifts of finite type and their eventually periodic points.

mod measure;
mod orbits;
mod point;

pub use measure::{sample_measure, MarkovMeasure, DEFAULT_SAMPLE_DEPTH};
pub use orbits::{
    closing_point, closing_window, homoclinic_class, homoclinic_points, periodic_points,
    verify_closing, ClosingCheck, PseudoOrbit, DEFAULT_ENUMERATION_CAP,
};
pub use point::SymbolicPoint;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = u8;
pub type Word = Vec<Symbol>;

const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// Renders a word with one character per symbol (`0-9`, then `a-z`).
pub fn word_to_string(w: &[Symbol]) -> String {
    w.iter().map(|&s| DIGITS[s as usize] as char).collect()
}

pub fn parse_word(s: &str) -> Result<Word> {
    s.bytes()
        .map(|b| {
            DIGITS
                .iter()
                .position(|&d| d == b.to_ascii_lowercase())
                .map(|p| p as Symbol)
                .ok_or_else(|| Error::InvalidPoint(format!("bad symbol {:?} in {s:?}", b as char)))
        })
        .collect()
}

/// A subshift of finite type given by a 0/1 transition matrix, with the metric
/// `d(x, y) = rho^-N` where `N` is the largest radius of agreement around 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SftSpace {
    k: usize,
    #[serde(rename = "P")]
    transitions: Vec<Vec<u8>>,
    rho: f64,
}

impl SftSpace {
    pub fn new(transitions: Vec<Vec<u8>>, rho: f64) -> Result<Self> {
        let k = transitions.len();
        if !(2..=DIGITS.len()).contains(&k) {
            return Err(Error::InvalidSpace(format!("symbol count {k} outside 2..=36")));
        }
        if transitions.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidSpace("transition matrix is not square".into()));
        }
        if transitions.iter().flatten().any(|&e| e > 1) {
            return Err(Error::InvalidSpace("transition entries must be 0 or 1".into()));
        }
        if let Some(i) = transitions.iter().position(|row| row.iter().all(|&e| e == 0)) {
            return Err(Error::InvalidSpace(format!("row {i} of the transition matrix is zero")));
        }
        if !(rho > 1.0) || !rho.is_finite() {
            return Err(Error::InvalidSpace(format!("metric base rho = {rho} must exceed 1")));
        }
        let space = SftSpace { k, transitions, rho };
        if (0..k).all(|s| space.shortest_cycle(s as Symbol).is_none()) {
            return Err(Error::InvalidSpace("transition graph has no cycle".into()));
        }
        Ok(space)
    }

    pub fn full_shift(k: usize) -> Self {
        SftSpace::new(vec![vec![1; k]; k], 2.0).expect("full shift is valid")
    }

    /// `P = [[1,1],[1,0]]`: the symbol 1 never follows itself.
    pub fn golden_mean() -> Self {
        SftSpace::new(vec![vec![1, 1], vec![1, 0]], 2.0).expect("golden mean shift is valid")
    }

    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        if !(rho > 1.0) || !rho.is_finite() {
            return Err(Error::InvalidSpace(format!("metric base rho = {rho} must exceed 1")));
        }
        self.rho = rho;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn transitions(&self) -> &[Vec<u8>] {
        &self.transitions
    }

    pub fn allows(&self, a: Symbol, b: Symbol) -> bool {
        self.transitions[a as usize][b as usize] == 1
    }

    pub fn is_admissible_word(&self, w: &[Symbol]) -> bool {
        w.iter().all(|&s| (s as usize) < self.k) && w.windows(2).all(|p| self.allows(p[0], p[1]))
    }

    /// Checks every transition of the realized bi-infinite sequence.
    pub fn check_point(&self, x: &SymbolicPoint) -> Result<()> {
        let (l, c, r) = (x.left_word(), x.core(), x.right_word());
        if l.iter().chain(c).chain(r).any(|&s| s as usize >= self.k) {
            return Err(Error::InvalidPoint(format!("symbol out of range in {x}")));
        }
        let mut bad = None;
        let mut check = |a: Symbol, b: Symbol| {
            if bad.is_none() && !self.allows(a, b) {
                bad = Some((a, b));
            }
        };
        // cyclic junctions of the periodic tails
        check(l[l.len() - 1], l[0]);
        check(r[r.len() - 1], r[0]);
        let mid: Vec<Symbol> = std::iter::once(l[l.len() - 1])
            .chain(c.iter().copied())
            .chain(std::iter::once(r[0]))
            .collect();
        for p in l.windows(2).chain(r.windows(2)).chain(mid.windows(2)) {
            check(p[0], p[1]);
        }
        match bad {
            None => Ok(()),
            Some((a, b)) => Err(Error::InvalidPoint(format!(
                "forbidden transition {a} -> {b} in {x}"
            ))),
        }
    }

    /// All admissible words of the given length, in lexicographic order.
    pub fn admissible_words(&self, len: usize) -> Vec<Word> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(len);
        self.extend_words(len, &mut cur, &mut out);
        out
    }

    fn extend_words(&self, len: usize, cur: &mut Word, out: &mut Vec<Word>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for s in 0..self.k as Symbol {
            if cur.last().is_none_or(|&p| self.allows(p, s)) {
                cur.push(s);
                self.extend_words(len, cur, out);
                cur.pop();
            }
        }
    }

    /// `trace(P^n)`, the number of points fixed by the n-th power of the shift.
    pub fn trace_power(&self, n: usize) -> u128 {
        let k = self.k;
        let mut acc: Vec<Vec<u128>> = (0..k)
            .map(|i| (0..k).map(|j| u128::from(i == j)).collect())
            .collect();
        for _ in 0..n {
            let mut next = vec![vec![0u128; k]; k];
            for i in 0..k {
                for m in 0..k {
                    if acc[i][m] == 0 {
                        continue;
                    }
                    for j in 0..k {
                        if self.transitions[m][j] == 1 {
                            next[i][j] += acc[i][m];
                        }
                    }
                }
            }
            acc = next;
        }
        (0..k).map(|i| acc[i][i]).sum()
    }

    /// Shortest admissible loop `s -> ... -> s`, returned starting at `s`.
    pub fn shortest_cycle(&self, s: Symbol) -> Option<Word> {
        let k = self.k;
        let mut prev = vec![None; k];
        let mut seen = vec![false; k];
        let mut queue = VecDeque::new();
        for t in 0..k {
            if self.allows(s, t as Symbol) {
                if t == s as usize {
                    return Some(vec![s]);
                }
                seen[t] = true;
                prev[t] = Some(s as usize);
                queue.push_back(t);
            }
        }
        while let Some(u) = queue.pop_front() {
            if self.allows(u as Symbol, s) {
                let mut path = vec![u as Symbol];
                let mut cur = u;
                while let Some(p) = prev[cur] {
                    if p == s as usize {
                        break;
                    }
                    path.push(p as Symbol);
                    cur = p;
                }
                path.push(s);
                path.reverse();
                return Some(path);
            }
            for t in 0..k {
                if !seen[t] && t != s as usize && self.allows(u as Symbol, t as Symbol) {
                    seen[t] = true;
                    prev[t] = Some(u);
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// Shortest admissible path from `a` to `b` (both endpoints included).
    pub fn shortest_path(&self, a: Symbol, b: Symbol) -> Option<Word> {
        if a == b {
            return Some(vec![a]);
        }
        let k = self.k;
        let mut prev: Vec<Option<usize>> = vec![None; k];
        let mut seen = vec![false; k];
        seen[a as usize] = true;
        let mut queue = VecDeque::from([a as usize]);
        while let Some(u) = queue.pop_front() {
            for t in 0..k {
                if !seen[t] && self.allows(u as Symbol, t as Symbol) {
                    seen[t] = true;
                    prev[t] = Some(u);
                    if t == b as usize {
                        let mut path = vec![b];
                        let mut cur = t;
                        while let Some(p) = prev[cur] {
                            path.push(p as Symbol);
                            cur = p;
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(t);
                }
            }
        }
        None
    }

    pub fn is_irreducible(&self) -> bool {
        (0..self.k).all(|a| (0..self.k).all(|b| self.shortest_path(a as Symbol, b as Symbol).is_some()))
    }

    /// `rho^-n`, the distance of two points whose agreement radius is `n`.
    pub fn scale(&self, n: u64) -> f64 {
        self.rho.powf(-(n as f64))
    }

    pub fn distance(&self, x: &SymbolicPoint, y: &SymbolicPoint) -> f64 {
        match x.agreement(y) {
            None => 0.0,
            Some(n) => self.scale(n),
        }
    }

    /// Admissible points differing from `y` exactly on a nonempty subset of the
    /// coordinates `n` and `-n`.
    pub fn shell_neighbors(&self, y: &SymbolicPoint, n: u64) -> Vec<SymbolicPoint> {
        let n = n as i64;
        let sites: Vec<i64> = if n == 0 { vec![0] } else { vec![-n, n] };
        let (lo, hi) = (y.start().min(-n), y.end().max(n + 1));
        let choices = |i: i64| -> Vec<Option<Symbol>> {
            std::iter::once(None).chain((0..self.k as Symbol).filter(|&a| a != y.at(i)).map(Some)).collect()
        };
        let mut out = Vec::new();
        let first = choices(sites[0]);
        let second = if sites.len() > 1 { choices(sites[1]) } else { vec![None] };
        for a in &first {
            for b in &second {
                if a.is_none() && b.is_none() {
                    continue;
                }
                let at = |i: i64| match (i == sites[0], sites.len() > 1 && i == sites[1]) {
                    (true, _) => a.unwrap_or(y.at(i)),
                    (_, true) => b.unwrap_or(y.at(i)),
                    _ => y.at(i),
                };
                let z = SymbolicPoint::from_fn(y.left_word().len(), y.right_word().len(), lo, hi, at);
                if self.check_point(&z).is_ok() {
                    out.push(z);
                }
            }
        }
        out
    }

    /// Shell neighbours of each point in `points` out to `radius`, excluding
    /// the points themselves.
    pub fn shell_probes(&self, points: &[SymbolicPoint], radius: u64) -> Vec<SymbolicPoint> {
        let mut seen: std::collections::BTreeSet<SymbolicPoint> = points.iter().cloned().collect();
        let mut out = Vec::new();
        for y in points {
            for z in (0..=radius).flat_map(|n| self.shell_neighbors(y, n)) {
                if seen.insert(z.clone()) {
                    out.push(z);
                }
            }
        }
        out
    }

    /// Local product point: the future of `y` glued to the past of `z`.
    pub fn bracket(&self, y: &SymbolicPoint, z: &SymbolicPoint) -> Result<SymbolicPoint> {
        let (a, b) = (y.at(0), z.at(0));
        if a != b {
            return Err(Error::CylinderMismatch(a, b));
        }
        let lo = z.start().min(0);
        let hi = y.end().max(1);
        Ok(SymbolicPoint::from_fn(
            z.left_word().len(),
            y.right_word().len(),
            lo,
            hi,
            |i| if i >= 0 { y.at(i) } else { z.at(i) },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_neighbors_differ_only_on_the_shell() {
        let full = SftSpace::full_shift(2);
        let y = SymbolicPoint::new(vec![0], vec![1, 0, 1], vec![0], -1).unwrap();
        for n in 0..5u64 {
            let zs = full.shell_neighbors(&y, n);
            assert_eq!(zs.len(), if n == 0 { 1 } else { 3 });
            for z in &zs {
                assert_eq!(z.agreement(&y), Some(n));
                for i in -8i64..=8 {
                    if i.unsigned_abs() != n {
                        assert_eq!(z.at(i), y.at(i));
                    }
                }
            }
        }
        let golden = SftSpace::golden_mean();
        let zero = SymbolicPoint::periodic(&[0]);
        assert_eq!(golden.shell_neighbors(&zero, 2).len(), 3);
        let one = SymbolicPoint::new(vec![0], vec![1], vec![0], 0).unwrap();
        assert!(golden.shell_neighbors(&one, 1).is_empty());
        assert_eq!(golden.shell_neighbors(&one, 2).len(), 3);
    }

    fn pt(l: &str, c: &str, r: &str, start: i64) -> SymbolicPoint {
        SymbolicPoint::new(
            parse_word(l).unwrap(),
            parse_word(c).unwrap(),
            parse_word(r).unwrap(),
            start,
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(SftSpace::new(vec![vec![1, 1], vec![0, 0]], 2.0).is_err());
        assert!(SftSpace::new(vec![vec![1, 1], vec![1, 1]], 1.0).is_err());
        assert!(SftSpace::new(vec![vec![1, 2], vec![1, 1]], 2.0).is_err());
        assert!(SftSpace::new(vec![vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 1]], 2.0).is_ok());
    }

    #[test]
    fn distance_examples() {
        let s = SftSpace::full_shift(2);
        let zero = SymbolicPoint::periodic(&[0]);
        assert_eq!(s.distance(&zero, &zero), 0.0);
        let one = SymbolicPoint::periodic(&[1]);
        assert_eq!(s.distance(&zero, &one), 1.0);
        let y = pt("0", "1", "0", 3);
        // coordinates -2..=2 agree, coordinate 3 differs
        assert_eq!(s.distance(&zero, &y), 0.125);
    }

    #[test]
    fn bracket_examples() {
        let s = SftSpace::full_shift(2);
        let x = pt("0", "1", "0", 0);
        assert_eq!(s.bracket(&x, &x).unwrap(), x);

        let y = SymbolicPoint::periodic(&[0]);
        let z = pt("1", "", "0", 0);
        assert_eq!(s.bracket(&y, &z).unwrap(), z);

        let y = pt("0", "1", "0", 0);
        let z = pt("1", "1", "1", 0);
        assert_eq!(s.bracket(&y, &z).unwrap(), pt("1", "1", "0", 0));
        assert_eq!(s.bracket(&y, &z).unwrap(), pt("1", "", "0", 1));

        let w = SymbolicPoint::periodic(&[1]);
        assert!(matches!(
            s.bracket(&SymbolicPoint::periodic(&[0]), &w),
            Err(Error::CylinderMismatch(0, 1))
        ));
    }

    #[test]
    fn shortest_cycles() {
        let g = SftSpace::golden_mean();
        assert_eq!(g.shortest_cycle(0), Some(vec![0]));
        assert_eq!(g.shortest_cycle(1), Some(vec![1, 0]));
        let swap = SftSpace::new(vec![vec![0, 1], vec![1, 0]], 2.0).unwrap();
        assert_eq!(swap.shortest_cycle(0), Some(vec![0, 1]));
        let three = SftSpace::new(vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]], 2.0).unwrap();
        assert_eq!(three.shortest_cycle(1), Some(vec![1, 2, 0]));
        assert_eq!(three.shortest_path(0, 2), Some(vec![0, 1, 2]));
    }

    #[test]
    fn trace_counts() {
        assert_eq!(SftSpace::full_shift(2).trace_power(2), 4);
        assert_eq!(SftSpace::golden_mean().trace_power(5), 11);
        let swap = SftSpace::new(vec![vec![0, 1], vec![1, 0]], 2.0).unwrap();
        assert_eq!(swap.trace_power(1), 0);
    }

    #[test]
    fn check_point_catches_junctions() {
        let g = SftSpace::golden_mean();
        assert!(g.check_point(&pt("0", "1", "0", 0)).is_ok());
        assert!(g.check_point(&pt("0", "11", "0", 0)).is_err());
        assert!(g.check_point(&pt("1", "", "0", 0)).is_err());
        assert!(g.check_point(&pt("01", "", "0", 0)).is_ok());
    }
}
