//! Run-length-limited `(d, k)` constraints.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::constraint::FiniteTypeConstraint;
use crate::error::{param, Error, Result};
use crate::markov::MarkovChain;
use crate::numeric::NeumaierSum;
use crate::spectral::parry_chain;
use crate::word::BitWord;

/// Between `d` and `k` zeros separate consecutive ones; `k = None` means no
/// upper limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RllParams {
    pub d: usize,
    pub k: Option<usize>,
}

impl RllParams {
    pub fn new(d: usize, k: Option<usize>) -> Result<Self> {
        if let Some(k) = k {
            if k < d {
                return Err(param(format!("k = {k} is below d = {d}")));
            }
            if k + 2 > BitWord::MAX_LEN {
                return Err(param(format!("k = {k} is too large")));
            }
        }
        if d + 2 > BitWord::MAX_LEN {
            return Err(param(format!("d = {d} is too large")));
        }
        Ok(Self { d, k })
    }
}

impl fmt::Display for RllParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.k {
            Some(k) => write!(f, "{},{}", self.d, k),
            None => write!(f, "{},inf", self.d),
        }
    }
}

impl FromStr for RllParams {
    type Err = Error;

    /// Parses `D,K` with `K` a nonnegative integer or `inf`.
    fn from_str(s: &str) -> Result<Self> {
        let (d, k) = s
            .split_once(',')
            .ok_or_else(|| param(format!("expected D,K, got {s:?}")))?;
        let d: usize = d
            .trim()
            .parse()
            .map_err(|_| param(format!("bad d in {s:?}")))?;
        let k = match k.trim() {
            "inf" | "infinity" | "∞" => None,
            k => Some(
                k.parse::<usize>()
                    .map_err(|_| param(format!("bad k in {s:?}")))?,
            ),
        };
        Self::new(d, k)
    }
}

/// `1 0^l 1` for `l < d`, plus `0^(k+1)` when `k` is finite.
pub fn rll_constraint(p: RllParams) -> FiniteTypeConstraint {
    let mut forbidden: Vec<BitWord> = (0..p.d)
        .map(|l| BitWord::raw((1u64 << (l + 1)) | 1, l + 2))
        .collect();
    if let Some(k) = p.k {
        forbidden.push(BitWord::repeat(0, k + 1));
    }
    FiniteTypeConstraint::new(forbidden).expect("run-length words are nonempty")
}

/// Root in `(0, 1)` of `sum_{l=d..k} rho^(l+1) = 1`; the noiseless capacity
/// is `ln(1/rho)`.
pub fn rho0(p: RllParams) -> Result<f64> {
    let d = p.d as i32;
    let excess = |r: f64| -> f64 {
        match p.k {
            // rho^(d+1) / (1 - rho) = 1, cleared of the denominator
            None => r.powi(d + 1) + r - 1.0,
            Some(k) => (p.d..=k).map(|l| r.powi(l as i32 + 1)).sum::<f64>() - 1.0,
        }
    };
    if let Some(k) = p.k {
        if k <= p.d {
            return Err(param(format!("({},{}) has zero capacity", p.d, k)));
        }
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn ones_zeros(pattern: &[(u8, usize)]) -> BitWord {
    let mut w = BitWord::EMPTY;
    for &(b, n) in pattern {
        for _ in 0..n {
            w = w.push(b);
        }
    }
    w
}

/// Log-term coefficient of a chain supported in `S(d, k)`, from run-length
/// word probabilities. With no upper limit the tail sums telescope:
/// `sum_{L >= L0} p(1 0^L 1) = p(1 0^L0)`.
pub fn f_general(x: &MarkovChain, p: RllParams) -> f64 {
    let d = p.d;
    let mut acc = NeumaierSum::new();
    match p.k {
        Some(k) => {
            for l2 in 0..d {
                for l1 in d..k.saturating_sub(l2) {
                    acc.add(x.word_prob(&ones_zeros(&[(1, 1), (0, l1 + l2 + 1), (1, 1)])));
                }
            }
            for l1 in d..=k {
                acc.add(x.word_prob(&ones_zeros(&[(1, 1), (0, l1), (1, 1), (0, k - l1)])));
            }
        }
        None => {
            for l2 in 0..d {
                acc.add(x.word_prob(&ones_zeros(&[(1, 1), (0, d + l2 + 1)])));
            }
        }
    }
    for l in 1..=d {
        acc.add(x.word_prob(&ones_zeros(&[(1, 1), (0, l)])));
    }
    acc.value()
}

/// Log-term coefficient of the maximum-entropy chain, as a sum of powers of
/// `rho0` times `p(1)`. `p(1)` is read off the numerically built chain.
///
/// Under that chain a run of zeros after a one has length `L` with
/// probability `rho^(L+1)`, so `p(1 0^j) = p(1) * sum_{L >= max(j, d)} rho^(L+1)`:
/// the first `d` zeros are forced.
pub fn f_maxentropy_closed_form(p: RllParams) -> Result<f64> {
    let x = parry_chain(&rll_constraint(p))?;
    let p1 = x.word_prob(&BitWord::raw(1, 1));
    let r = rho0(p)?;
    let d = p.d;
    let pw = |e: usize| r.powi(e as i32);
    // sum_{L = max(j, d)..=k} rho^(L+1)
    let run_at_least = |j: usize| {
        let j = j.max(d);
        match p.k {
            Some(k) => pw(j + 1) * (1.0 - pw(k - j + 1)) / (1.0 - r),
            None => pw(j + 1) / (1.0 - r),
        }
    };
    let mut acc = NeumaierSum::new();
    match p.k {
        Some(k) => {
            acc.add(p1 * pw(k + 1));
            for l2 in 0..d {
                for l1 in d..k.saturating_sub(l2) {
                    acc.add(p1 * pw(l1 + l2 + 2));
                }
            }
            for l1 in d..k {
                acc.add(p1 * pw(l1 + 1) * run_at_least(k - l1));
            }
        }
        None => {
            for l2 in 0..d {
                acc.add(p1 * run_at_least(d + l2 + 1));
            }
        }
    }
    for l in 1..=d {
        acc.add(p1 * run_at_least(l));
    }
    Ok(acc.value())
}

fn check_prob(p: f64, allow_one: bool) -> Result<()> {
    let ok = p > 0.0 && (p < 1.0 || (allow_one && p == 1.0));
    if !ok {
        return Err(param(format!("transition probability {p} is out of range")));
    }
    Ok(())
}

/// Log-term coefficient of the isolated-ones chain with `T(0,1) = p`:
/// `p (2 - p) / (1 + p)`.
pub fn isolated_ones_f(p: f64) -> Result<f64> {
    check_prob(p, true)?;
    Ok(p * (2.0 - p) / (1.0 + p))
}

/// Linear coefficient of the isolated-ones chain with `T(0,1) = p`.
pub fn isolated_ones_g(p: f64) -> Result<f64> {
    check_prob(p, false)?;
    let q = p * p - 3.0 * p + 1.0;
    let num =
        (2.0 * p - p * p) + 2.0 * p * (p - 1.0) * 2f64.ln() - q * p.ln() + 2.0 * q * (1.0 - p).ln();
    Ok(num / (1.0 + p))
}
