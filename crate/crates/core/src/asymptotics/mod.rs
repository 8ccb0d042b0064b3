//! Small-noise expansion coefficients of the output entropy rate.
//!
//! For a chain `X` of order `m` the output entropy rate of the channel obeys
//! `H(Z) = H(X) + f(X) eps ln(1/eps) + g(X) eps + O(eps^2 ln eps)`. The
//! coefficients are computed exactly from word probabilities of `X`; no
//! quantity here is evaluated at a positive `eps`.

pub mod window;

use serde::Serialize;

use crate::error::{param, Result};
use crate::markov::MarkovChain;
use crate::numeric::NeumaierSum;
use crate::word::BitWord;

/// Coefficients `(H(X), f, g)` of one chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticExpansion {
    pub h0: f64,
    pub f: f64,
    pub g: f64,
}

impl AsymptoticExpansion {
    /// `h0 + f eps ln(1/eps) + g eps`.
    pub fn eval(&self, eps: f64) -> f64 {
        if eps == 0.0 {
            return self.h0;
        }
        self.h0 + self.f * eps * (1.0 / eps).ln() + self.g * eps
    }
}

/// Order of vanishing of `P(X-part, Z-part = w)` as `eps -> 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum WordClass {
    /// Positive probability at `eps = 0`.
    AllowedPositive,
    /// Zero at `eps = 0` with a nonzero first derivative.
    ThetaEps,
    /// Vanishes to second order.
    OEpsSquared,
}

fn check_k(u: &BitWord, k: usize) -> Result<()> {
    if k > u.len() {
        return Err(param(format!("k = {k} exceeds word length {}", u.len())));
    }
    Ok(())
}

fn check_nk(x: &MarkovChain, n: usize, k: usize) -> Result<()> {
    if n < x.order() {
        return Err(param(format!(
            "n = {n} is below the chain order {}",
            x.order()
        )));
    }
    if k > n {
        return Err(param(format!("k = {k} exceeds n = {n}")));
    }
    if n + 1 > BitWord::MAX_LEN {
        return Err(param(format!("n = {n} is too long")));
    }
    Ok(())
}

/// Sum of the probabilities of the single-flip neighbours of `u` over the
/// last `n - k` positions, minus `(n - k) p(u)`. This is the derivative at
/// `eps = 0` of the probability that the first `k` input symbols and the
/// remaining outputs read `u`.
pub(crate) fn flip_derivative(x: &MarkovChain, u: &BitWord, k: usize) -> f64 {
    let free = u.len() - k;
    let mut acc = NeumaierSum::new();
    for j in 1..=free {
        acc.add(x.word_prob(&u.flip_from_right(j)));
    }
    let p = x.word_prob(u);
    if p > 0.0 {
        acc.add(-(free as f64) * p);
    }
    acc.value()
}

/// Derivative at `eps = 0` of the joint input/output probability of `u`
/// with the first `k` symbols read from the input.
pub fn h_nk(x: &MarkovChain, u: &BitWord, k: usize) -> Result<f64> {
    check_k(u, k)?;
    Ok(flip_derivative(x, u, k))
}

pub(crate) fn class_of(x: &MarkovChain, u: &BitWord, k: usize) -> WordClass {
    if x.in_support(u) {
        WordClass::AllowedPositive
    } else if (1..=u.len() - k).any(|j| x.in_support(&u.flip_from_right(j))) {
        WordClass::ThetaEps
    } else {
        WordClass::OEpsSquared
    }
}

/// Combinatorial classification of `u` by its order of vanishing.
pub fn classify_word(x: &MarkovChain, u: &BitWord, k: usize) -> Result<WordClass> {
    check_k(u, k)?;
    Ok(class_of(x, u, k))
}

/// Coefficient of `eps ln(1/eps)` at conditioning length `n`.
pub fn f_nk(x: &MarkovChain, n: usize, k: usize) -> Result<f64> {
    check_nk(x, n, k)?;
    let mut acc = NeumaierSum::new();
    for w in x.support_words(n)? {
        for v in 0..2 {
            let wv = w.push(v);
            if !x.in_support(&wv) {
                acc.add(flip_derivative(x, &wv, k));
            }
        }
    }
    Ok(acc.value())
}

/// The three sums whose negated total is the `eps` coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GTerms {
    /// Sum over positive pairs of `(h(wv) p(w) - h(w) p(wv)) / p(w)`.
    pub linear_drift: f64,
    /// Sum over boundary pairs (`w` positive, `wv` not) of `h(wv) ln(h(wv)/p(w))`.
    pub boundary_log: f64,
    /// Sum over positive pairs of `h(wv) ln p(v|w)` plus the sum over pairs
    /// with both `w` and `wv` of first order of `h(wv) ln(h(wv)/h(w))`.
    pub interior_log: f64,
}

impl GTerms {
    pub fn g(&self) -> f64 {
        -(self.linear_drift + self.boundary_log + self.interior_log)
    }
}

/// Single-flip neighbours of positive words that have zero probability
/// themselves and a positive first derivative, sorted.
fn first_order_words(x: &MarkovChain, positive: &[BitWord], k: usize) -> Vec<BitWord> {
    let mut out: Vec<BitWord> = positive
        .iter()
        .flat_map(|w| (1..=w.len() - k).map(move |j| w.flip_from_right(j)))
        .filter(|u| !x.in_support(u))
        .collect();
    out.sort();
    out.dedup();
    out
}

pub fn g_terms(x: &MarkovChain, n: usize, k: usize) -> Result<GTerms> {
    check_nk(x, n, k)?;
    let positive = x.support_words(n)?;
    let mut drift = NeumaierSum::new();
    let mut boundary = NeumaierSum::new();
    let mut interior = NeumaierSum::new();
    for w in &positive {
        let pw = x.word_prob(w);
        let hw = flip_derivative(x, w, k);
        for v in 0..2 {
            let wv = w.push(v);
            let hwv = flip_derivative(x, &wv, k);
            if x.in_support(&wv) {
                let pwv = x.word_prob(&wv);
                interior.add(hwv * (pwv / pw).ln());
                drift.add((hwv * pw - hw * pwv) / pw);
            } else {
                assert!(
                    hwv > 0.0,
                    "boundary word {wv} has nonpositive derivative {hwv}"
                );
                boundary.add(hwv * (hwv / pw).ln());
            }
        }
    }
    for w in first_order_words(x, &positive, k) {
        let hw = flip_derivative(x, &w, k);
        for v in 0..2 {
            let wv = w.push(v);
            if class_of(x, &wv, k) == WordClass::ThetaEps {
                let hwv = flip_derivative(x, &wv, k);
                assert!(
                    hw > 0.0 && hwv > 0.0,
                    "first-order word {wv} with nonpositive derivative"
                );
                interior.add(hwv * (hwv / hw).ln());
            }
        }
    }
    Ok(GTerms {
        linear_drift: drift.value(),
        boundary_log: boundary.value(),
        interior_log: interior.value(),
    })
}

/// Coefficient of `eps` at conditioning length `n`.
pub fn g_nk(x: &MarkovChain, n: usize, k: usize) -> Result<f64> {
    Ok(g_terms(x, n, k)?.g())
}

/// Divergence form of the `eps` coefficient for chains whose kernel is
/// strictly positive: `sum_z P(z) ln(P(z)/P(z'))` over words of length
/// `2m + 1`, with `z'` equal to `z` with its middle symbol flipped.
pub fn g_positive(x: &MarkovChain) -> Result<f64> {
    let m = x.order();
    if x.contexts().len() != 1usize << m || x.kernel().iter().any(|r| r[0] == 0.0 || r[1] == 0.0) {
        return Err(param(
            "the divergence form needs a strictly positive kernel",
        ));
    }
    let mut acc = NeumaierSum::new();
    for z in BitWord::all(2 * m + 1) {
        let p = x.word_prob(&z);
        let q = x.word_prob(&z.flip_at(m));
        acc.add(p * (p / q).ln());
    }
    Ok(acc.value())
}

/// `(H(X), f_{2m}^0, g_{3m}^0)`.
pub fn expansion_of(x: &MarkovChain) -> Result<AsymptoticExpansion> {
    let m = x.order();
    Ok(AsymptoticExpansion {
        h0: x.entropy_rate(),
        f: f_nk(x, 2 * m, 0)?,
        g: g_nk(x, 3 * m, 0)?,
    })
}
