use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::CocycleSpec;
use crate::error::Result;
use crate::lipmaps::{d_1, PlMap};
use crate::scalar::Scalar;
use crate::stats::linear_fit;
use crate::symbolic::{word_to_string, SymbolicPoint, Word};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleHolder {
    pub value: f64,
    /// False when drift makes `value` an upper bound rather than the supremum.
    pub exact: bool,
}

/// `sup d_1(f_x, f_y) / d(x, y)^alpha`.
///
/// Points with agreement radius `N <= w` can carry any pair of table words
/// that agree on `|i| < N`; beyond the window only the drift separates them,
/// and its contribution times `rho^(alpha N)` does not grow with `N`.
pub fn holder_const_cocycle<T: Scalar>(c: &CocycleSpec<T>) -> CocycleHolder {
    let w = c.window();
    let rho_a = c.space().rho().powf(c.alpha());
    let osc = |n: u64| c.drift().iter().map(|p| p.oscillation(n)).sum::<f64>();
    let mut best = 0.0f64;
    for n in 0..=w {
        let mut groups: BTreeMap<Word, Vec<&PlMap<T>>> = BTreeMap::new();
        for (word, m) in c.table() {
            let key = if n == 0 { Vec::new() } else { word[w + 1 - n..w + n].to_vec() };
            groups.entry(key).or_default().push(m);
        }
        let mut e = 0.0f64;
        for maps in groups.values() {
            for i in 0..maps.len() {
                for j in i + 1..maps.len() {
                    e = e.max(d_1(maps[i], maps[j]).to_f64());
                }
            }
        }
        best = best.max((e + osc(n as u64)) * rho_a.powi(n as i32));
    }
    best = best.max(osc(w as u64 + 1) * rho_a.powi(w as i32 + 1));
    CocycleHolder { value: best, exact: c.drift().is_empty() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub theta_s: f64,
    pub theta_u: f64,
    pub su_dominated: bool,
    /// Largest `L(f_x^-1)` and the word attaining it.
    pub max_lip_inv: f64,
    pub witness_s: String,
    /// Largest `L(f_x)` and the word attaining it.
    pub max_lip: f64,
    pub witness_u: String,
    pub alpha: f64,
    pub rho: f64,
}

impl DominationReport {
    /// `rho^(n (alpha - theta))`, the bound on `L((f^n_x)^-1)` (side `'s'`)
    /// or `L(f^n_x)` (side `'u'`).
    pub fn n_step_bound(&self, side: char, n: u32) -> f64 {
        let theta = if side == 's' { self.theta_s } else { self.theta_u };
        self.rho.powf(n as f64 * (self.alpha - theta))
    }
}

/// Rotations do not change Lipschitz constants, so the table decides.
pub fn check_domination<T: Scalar>(c: &CocycleSpec<T>) -> DominationReport {
    let mut max_inv = (0.0f64, String::new());
    let mut max_fwd = (0.0f64, String::new());
    for (word, m) in c.table() {
        let l = m.lipschitz_const().to_f64();
        let li = 1.0 / m.min_slope().to_f64();
        if l > max_fwd.0 {
            max_fwd = (l, word_to_string(word));
        }
        if li > max_inv.0 {
            max_inv = (li, word_to_string(word));
        }
    }
    let rho = c.space().rho();
    let theta_s = c.alpha() - max_inv.0.ln() / rho.ln();
    let theta_u = c.alpha() - max_fwd.0.ln() / rho.ln();
    DominationReport {
        theta_s,
        theta_u,
        su_dominated: theta_s > 0.0 && theta_u > 0.0,
        max_lip_inv: max_inv.0,
        witness_s: max_inv.1,
        max_lip: max_fwd.0,
        witness_u: max_fwd.1,
        alpha: c.alpha(),
        rho,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub k_est: f64,
    pub horizon: usize,
    pub certified: bool,
    /// `K_n`: the largest `max(L(f^n_x), L((f^n_x)^-1))` over samples.
    pub curve: Vec<f64>,
    /// Slope of `log K_n` against `n` over the second half of the horizon.
    pub growth_rate: f64,
    pub growing: bool,
}

const GROWTH_FLAG: f64 = 1e-2;

pub fn check_bounded_distortion<T: Scalar>(
    c: &CocycleSpec<T>,
    horizon: usize,
    samples: &[SymbolicPoint],
) -> Result<DistortionReport> {
    let horizon = horizon.max(1);
    let mut curve = vec![1.0f64; horizon];
    for x in samples {
        let mut acc = PlMap::<T>::identity();
        let mut y = x.clone();
        for k in curve.iter_mut() {
            acc = c.evaluate_generator(&y).compose(&acc);
            if acc.kinks() > super::BREAKPOINT_CAP {
                return Err(crate::error::Error::ResourceLimit(format!(
                    "distortion iterate reached {} breakpoints",
                    acc.kinks()
                )));
            }
            let l = acc.lipschitz_const().to_f64().max(1.0 / acc.min_slope().to_f64());
            *k = k.max(l);
            y = y.shift(1);
        }
    }
    let lo = horizon / 2;
    let ns: Vec<f64> = (lo..horizon).map(|n| (n + 1) as f64).collect();
    let logs: Vec<f64> = curve[lo..].iter().map(|k| k.ln()).collect();
    let growth_rate = linear_fit(&ns, &logs).map_or(0.0, |f| f.slope);
    Ok(DistortionReport {
        k_est: curve.iter().copied().fold(1.0, f64::max),
        horizon,
        certified: c.is_isometric(),
        curve,
        growth_rate,
        growing: growth_rate > GROWTH_FLAG,
    })
}
