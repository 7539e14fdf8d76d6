use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SftSpace, Symbol, SymbolicPoint};
use crate::error::{Error, Result};

/// Number of coordinates drawn from the chain before periodic completion.
pub const DEFAULT_SAMPLE_DEPTH: usize = 64;

const STATIONARY_TOL: f64 = 1e-9;

/// A stationary Markov measure compatible with the transition matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovMeasure {
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    pi: Vec<f64>,
}

impl MarkovMeasure {
    pub fn new(space: &SftSpace, q: Vec<Vec<f64>>, pi: Vec<f64>) -> Result<Self> {
        let k = space.k();
        if q.len() != k || q.iter().any(|r| r.len() != k) || pi.len() != k {
            return Err(Error::InvalidMeasure(format!("Q and pi must have dimension {k}")));
        }
        for (i, row) in q.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(v >= 0.0) || (v > 0.0) != space.allows(i as Symbol, j as Symbol) {
                    return Err(Error::InvalidMeasure(format!(
                        "Q[{i}][{j}] = {v} is incompatible with the transition matrix"
                    )));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STATIONARY_TOL {
                return Err(Error::InvalidMeasure(format!("row {i} of Q sums to {sum}")));
            }
        }
        if pi.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidMeasure("pi must be strictly positive".into()));
        }
        if (pi.iter().sum::<f64>() - 1.0).abs() > STATIONARY_TOL {
            return Err(Error::InvalidMeasure("pi must sum to 1".into()));
        }
        for j in 0..k {
            let v: f64 = (0..k).map(|i| pi[i] * q[i][j]).sum();
            if (v - pi[j]).abs() > STATIONARY_TOL {
                return Err(Error::InvalidMeasure(format!("pi is not stationary at {j}")));
            }
        }
        if !space.is_irreducible() {
            return Err(Error::InvalidMeasure("transition matrix is not irreducible".into()));
        }
        Ok(MarkovMeasure { q, pi })
    }

    /// Computes the stationary vector of `q` by power iteration.
    pub fn from_transition(space: &SftSpace, q: Vec<Vec<f64>>) -> Result<Self> {
        let k = q.len();
        let mut pi = vec![1.0 / k as f64; k];
        for _ in 0..100_000 {
            // lazy chain: converges for periodic chains too
            let next: Vec<f64> = (0..k)
                .map(|j| 0.5 * pi[j] + 0.5 * (0..k).map(|i| pi[i] * q[i].get(j).copied().unwrap_or(0.0)).sum::<f64>())
                .collect();
            let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            if diff < 1e-15 {
                break;
            }
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        Self::new(space, q, pi)
    }

    /// Bernoulli measure on a full shift.
    pub fn bernoulli(space: &SftSpace, weights: &[f64]) -> Result<Self> {
        let q = vec![weights.to_vec(); space.k()];
        Self::new(space, q, weights.to_vec())
    }

    /// Uniform transition probabilities over allowed successors.
    pub fn uniform_walk(space: &SftSpace) -> Result<Self> {
        let q = space
            .transitions()
            .iter()
            .map(|row| {
                let deg = row.iter().filter(|&&e| e == 1).count() as f64;
                row.iter().map(|&e| f64::from(e) / deg).collect()
            })
            .collect();
        Self::from_transition(space, q)
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.q
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    fn draw(rng: &mut impl Rng, weights: impl Iterator<Item = f64>) -> Symbol {
        let w: Vec<f64> = weights.collect();
        let total: f64 = w.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        for (i, &p) in w.iter().enumerate() {
            if u < p {
                return i as Symbol;
            }
            u -= p;
        }
        w.iter().rposition(|&p| p > 0.0).unwrap_or(0) as Symbol
    }

    fn step_forward(&self, rng: &mut impl Rng, s: Symbol) -> Symbol {
        Self::draw(rng, self.q[s as usize].iter().copied())
    }

    fn step_backward(&self, rng: &mut impl Rng, s: Symbol) -> Symbol {
        let j = s as usize;
        Self::draw(rng, (0..self.pi.len()).map(|i| self.pi[i] * self.q[i][j] / self.pi[j]))
    }

    /// One draw: the coordinates `-depth/2 .. depth - depth/2` come from the
    /// chain and both ends continue along the shortest loop through the last
    /// drawn symbol.
    pub fn sample_point(&self, space: &SftSpace, depth: usize, rng: &mut impl Rng) -> SymbolicPoint {
        let depth = depth.max(1);
        let lo = -((depth / 2) as i64);
        let x0 = Self::draw(rng, self.pi.iter().copied());
        let mut past = Vec::with_capacity(depth / 2);
        let mut s = x0;
        for _ in lo..0 {
            s = self.step_backward(rng, s);
            past.push(s);
        }
        past.reverse();
        let mut future = vec![x0];
        let mut s = x0;
        for _ in 1..depth - depth / 2 {
            s = self.step_forward(rng, s);
            future.push(s);
        }
        let word: Vec<Symbol> = past.into_iter().chain(future).collect();
        complete(space, &word, lo)
    }

    /// Keeps coordinates `n >= 0` of `x` and redraws the past: a point of the
    /// local stable set of `x`, drawn from the conditional measure.
    pub fn resample_past(&self, space: &SftSpace, x: &SymbolicPoint, depth: usize, rng: &mut impl Rng) -> SymbolicPoint {
        let h = (depth / 2).max(1) as i64;
        let mut past = Vec::with_capacity(h as usize);
        let mut s = x.at(0);
        for _ in 0..h {
            s = self.step_backward(rng, s);
            past.push(s);
        }
        past.reverse();
        let cycle = space.shortest_cycle(past[0]).expect("irreducible space");
        let hi = x.end().max(1);
        SymbolicPoint::from_fn(cycle.len(), x.right_word().len(), -h, hi, |i| {
            if i >= 0 {
                x.at(i)
            } else if i >= -h {
                past[(i + h) as usize]
            } else {
                cycle[(i + h).rem_euclid(cycle.len() as i64) as usize]
            }
        })
    }

    /// Keeps coordinates `n <= 0` of `x` and redraws the future.
    pub fn resample_future(&self, space: &SftSpace, x: &SymbolicPoint, depth: usize, rng: &mut impl Rng) -> SymbolicPoint {
        let h = (depth / 2).max(1) as i64;
        let mut future = Vec::with_capacity(h as usize);
        let mut s = x.at(0);
        for _ in 0..h {
            s = self.step_forward(rng, s);
            future.push(s);
        }
        let last = future[future.len() - 1];
        let cycle = space.shortest_cycle(last).expect("irreducible space");
        let lo = x.start().min(0);
        SymbolicPoint::from_fn(x.left_word().len(), cycle.len(), lo, h + 1, |i| {
            if i <= 0 {
                x.at(i)
            } else if i <= h {
                future[(i - 1) as usize]
            } else {
                cycle[(i - h).rem_euclid(cycle.len() as i64) as usize]
            }
        })
    }
}

/// Completes the word placed at `lo ..` by looping through its end symbols.
fn complete(space: &SftSpace, word: &[Symbol], lo: i64) -> SymbolicPoint {
    let hi = lo + word.len() as i64;
    let head = space.shortest_cycle(word[0]).expect("irreducible space");
    let tail = space.shortest_cycle(word[word.len() - 1]).expect("irreducible space");
    SymbolicPoint::from_fn(head.len(), tail.len(), lo, hi, |i| {
        if i < lo {
            head[(i - lo).rem_euclid(head.len() as i64) as usize]
        } else if i < hi {
            word[(i - lo) as usize]
        } else {
            tail[(i - hi + 1).rem_euclid(tail.len() as i64) as usize]
        }
    })
}

/// `count` independent draws, deterministic in `seed`.
pub fn sample_measure(
    space: &SftSpace,
    mu: &MarkovMeasure,
    count: usize,
    depth: usize,
    seed: u64,
) -> Vec<SymbolicPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| mu.sample_point(space, depth, &mut rng)).collect()
}
