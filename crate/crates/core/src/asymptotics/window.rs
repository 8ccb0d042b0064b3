//! Fixed-window forms of the three sums in [`GTerms`](super::GTerms).
//!
//! Each sum is independent of the conditioning length once `n` is at least
//! `2m` (drift and boundary) or `3m` (interior). The functions here evaluate
//! the sums directly on words of length `m`, `2m` and `3m` and are checked
//! against [`g_terms`](super::g_terms) at longer lengths.

use crate::error::Result;
use crate::markov::MarkovChain;
use crate::numeric::NeumaierSum;
use crate::word::BitWord;

use super::{class_of, flip_derivative, WordClass};

/// `sum_{j=1..m} p(flip_j(w) v) + p(w v')` for a word `w` of length `2m`:
/// the derivative of `p(w v)` at `eps = 0` before subtracting the own term,
/// restricted to flips that reach into the last `m` symbols of `w` or `v`.
fn near_flip_weight(x: &MarkovChain, w: &BitWord, v: u8) -> f64 {
    let m = x.order();
    let mut acc = NeumaierSum::new();
    for j in 1..=m {
        acc.add(x.word_prob(&w.flip_from_right(j).push(v)));
    }
    acc.add(x.word_prob(&w.push(1 - v)));
    acc.value()
}

/// Closed form of the drift sum.
pub fn linear_drift(x: &MarkovChain) -> Result<f64> {
    let m = x.order();
    let mut acc = NeumaierSum::new();
    for w in x.support_words(2 * m)? {
        for v in 0..2 {
            if !x.in_support(&w.push(v)) {
                for j in 1..=m {
                    acc.add(-x.word_prob(&w.flip_from_right(j).push(v)));
                }
            }
        }
    }
    for u in BitWord::all(m) {
        for v in 0..2 {
            if x.in_support(&u.push(v)) {
                acc.add(x.word_prob(&u.push(1 - v)));
            }
        }
    }
    acc.add(-1.0);
    Ok(acc.value())
}

/// Closed form of the boundary sum.
pub fn boundary_log(x: &MarkovChain) -> Result<f64> {
    let m = x.order();
    let mut acc = NeumaierSum::new();
    for w in x.support_words(2 * m)? {
        let pw = x.word_prob(&w);
        for v in 0..2 {
            let wv = w.push(v);
            if !x.in_support(&wv) {
                let weight = near_flip_weight(x, &w, v);
                acc.add(weight * (flip_derivative(x, &wv, 0) / pw).ln());
            }
        }
    }
    Ok(acc.value())
}

/// Closed form of the interior sum.
pub fn interior_log(x: &MarkovChain) -> Result<f64> {
    let m = x.order();
    let mut acc = NeumaierSum::new();
    for u in BitWord::all(m) {
        let pu = x.word_prob(&u);
        for v in 0..2 {
            let uv = u.push(v);
            let puv = x.word_prob(&uv);
            if puv > 0.0 {
                acc.add(-((m + 1) as f64) * puv * (puv / pu).ln());
            }
        }
    }
    let head = x.support_words(2 * m)?;
    for w in &head {
        let tail = w.suffix(m);
        let pt = x.word_prob(&tail);
        for v in 0..2 {
            if x.in_support(&w.push(v)) {
                let cond = x.word_prob(&tail.push(v)) / pt;
                acc.add(near_flip_weight(x, w, v) * cond.ln());
            }
        }
    }
    // length-3m words whose first 2m symbols are positive
    for w2 in &head {
        for u in BitWord::all(m) {
            let w3 = w2.concat(&u)?;
            if class_of(x, &w3, 0) != WordClass::ThetaEps {
                continue;
            }
            // Flips at distance m+1..2m from the end that repair such a word
            // were counted in the (m+1) entropy term above; take them back.
            let pt = x.word_prob(&u);
            for v in 0..2 {
                let cond = x.word_prob(&u.push(v)) / pt;
                for j in m + 1..=2 * m {
                    let q = x.word_prob(&w3.flip_from_right(j).push(v));
                    if q > 0.0 {
                        acc.add(-q * cond.ln());
                    }
                }
            }
            let h3 = flip_derivative(x, &w3, 0);
            for v in 0..2 {
                let wv = w3.push(v);
                if class_of(x, &wv, 0) == WordClass::ThetaEps {
                    let h4 = flip_derivative(x, &wv, 0);
                    acc.add(h4 * (h4 / h3).ln());
                }
            }
        }
    }
    Ok(acc.value())
}
