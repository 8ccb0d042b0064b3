//! Binary symmetric channel driven by a Markov input.
//!
//! Output word probabilities are computed by a forward recursion over the
//! input contexts. Entropy sums walk the tree of output words depth first,
//! reusing the forward vector of each prefix for both children.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::markov::{MarkovChain, StationaryPVector};
use crate::numeric::{cond_term, xlnx, NeumaierSum};
use crate::word::BitWord;

/// Largest conditioning length accepted by the output entropy routines.
pub const MAX_OUTPUT_N: usize = 24;

// depth at which the output-word tree is split into parallel subtrees
const SPLIT_DEPTH: usize = 10;

/// Crossover probability of the channel, restricted to `[0, 1/2]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct ChannelParameter(f64);

impl ChannelParameter {
    pub const NOISELESS: ChannelParameter = ChannelParameter(0.0);

    pub fn new(eps: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&eps) {
            return Err(param(format!(
                "crossover probability {eps} is outside [0, 1/2]"
            )));
        }
        Ok(Self(eps))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// `H(eps)` in nats.
pub fn binary_entropy(eps: ChannelParameter) -> f64 {
    -(xlnx(eps.0) + xlnx(1.0 - eps.0))
}

/// Lower and upper entropy-rate bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropySandwich {
    pub lower: f64,
    pub upper: f64,
}

impl EntropySandwich {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Forward recursion for words whose first `k` symbols are input symbols and
/// the rest channel outputs.
struct Trellis<'a> {
    x: &'a MarkovChain,
    eps: f64,
    k: usize,
    // (source, target, kernel entry, symbol) for every possible transition
    edges: Vec<(usize, usize, f64, u8)>,
}

impl<'a> Trellis<'a> {
    fn new(x: &'a MarkovChain, eps: f64, k: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..x.contexts().len() {
            for b in 0..2u8 {
                if let Some(t) = x.successor_index(i, b) {
                    edges.push((i, t, x.kernel()[i][b as usize], b));
                }
            }
        }
        Self { x, eps, k, edges }
    }

    #[inline]
    fn weight(&self, pos: usize, input: u8, observed: u8) -> f64 {
        if pos < self.k {
            (input == observed) as u8 as f64
        } else if input == observed {
            1.0 - self.eps
        } else {
            self.eps
        }
    }

    fn root(&self) -> Vec<f64> {
        self.x.stationary().to_vec()
    }

    /// Forward vector after observing symbol `z` at position `pos`.
    fn extend(&self, pos: usize, alpha: &[f64], z: u8) -> Vec<f64> {
        let m = self.x.order();
        if pos < m {
            // still inside the initial context: weight each context by its own symbol
            self.x
                .contexts()
                .iter()
                .zip(alpha)
                .map(|(c, a)| a * self.weight(pos, c.at(pos), z))
                .collect()
        } else {
            let w = [self.weight(pos, 0, z), self.weight(pos, 1, z)];
            let mut next = vec![0.0; alpha.len()];
            for &(s, t, p, b) in &self.edges {
                next[t] += alpha[s] * p * w[b as usize];
            }
            next
        }
    }

    /// Mass of the one-symbol extension without building its forward vector.
    fn child_mass(&self, pos: usize, alpha: &[f64], z: u8) -> f64 {
        let m = self.x.order();
        let mut acc = NeumaierSum::new();
        if pos < m {
            for (c, a) in self.x.contexts().iter().zip(alpha) {
                acc.add(a * self.weight(pos, c.at(pos), z));
            }
        } else {
            let w = [self.weight(pos, 0, z), self.weight(pos, 1, z)];
            for &(s, _, p, b) in &self.edges {
                acc.add(alpha[s] * p * w[b as usize]);
            }
        }
        acc.value()
    }

    fn word_prob(&self, w: &BitWord) -> f64 {
        if w.is_empty() {
            return 1.0;
        }
        let mut alpha = self.root();
        for pos in 0..w.len() - 1 {
            alpha = self.extend(pos, &alpha, w.at(pos));
        }
        self.child_mass(w.len() - 1, &alpha, w.at(w.len() - 1))
    }

    /// `-sum p(w) ln p(w_last | w_prefix)` over words of length `n + 1`.
    fn cond_entropy(&self, n: usize) -> f64 {
        let split = n.min(SPLIT_DEPTH);
        let mut frontier = vec![self.root()];
        for pos in 0..split {
            frontier = frontier
                .iter()
                .flat_map(|a| [self.extend(pos, a, 0), self.extend(pos, a, 1)])
                .filter(|a| a.iter().any(|v| *v != 0.0))
                .collect();
        }
        let parts: Vec<NeumaierSum> = frontier
            .par_iter()
            .map(|a| {
                let mut acc = NeumaierSum::new();
                self.descend(split, n, a, &mut acc);
                acc
            })
            .collect();
        let mut total = NeumaierSum::new();
        for p in parts {
            total += p;
        }
        total.value()
    }

    fn descend(&self, depth: usize, n: usize, alpha: &[f64], acc: &mut NeumaierSum) {
        if depth == n {
            let p0 = self.child_mass(depth, alpha, 0);
            let p1 = self.child_mass(depth, alpha, 1);
            let total = p0 + p1;
            acc.add(cond_term(p0, total));
            acc.add(cond_term(p1, total));
            return;
        }
        for z in 0..2 {
            let child = self.extend(depth, alpha, z);
            if child.iter().any(|v| *v != 0.0) {
                self.descend(depth + 1, n, &child, acc);
            }
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n > MAX_OUTPUT_N {
        return Err(Error::ResourceLimit {
            what: format!("conditioning length {n}"),
            limit: MAX_OUTPUT_N,
        });
    }
    Ok(())
}

/// Probability that the first `k` symbols of `X` and the remaining symbols
/// of the channel output spell `w`.
pub fn joint_xz_prob(x: &MarkovChain, eps: ChannelParameter, k: usize, w: &BitWord) -> Result<f64> {
    if k > w.len() {
        return Err(param(format!("k = {k} exceeds word length {}", w.len())));
    }
    if eps.0 == 0.0 || k == w.len() {
        return Ok(x.word_prob(w));
    }
    Ok(Trellis::new(x, eps.0, k).word_prob(w))
}

/// Output word probability `p_Z(w)`.
pub fn output_prob(x: &MarkovChain, eps: ChannelParameter, w: &BitWord) -> f64 {
    joint_xz_prob(x, eps, 0, w).expect("k = 0 is always valid")
}

/// `H(Z_0 | Z_{-n}^{-1})`: upper bound on the output entropy rate.
pub fn cond_entropy_output(x: &MarkovChain, eps: ChannelParameter, n: usize) -> Result<f64> {
    check_n(n)?;
    Ok(Trellis::new(x, eps.0, 0).cond_entropy(n))
}

/// `H(Z_0 | Z_{-n+m}^{-1}, X_{-n}^{-n+m-1})`: lower bound on the output entropy rate.
pub fn cond_entropy_birch_lower(x: &MarkovChain, eps: ChannelParameter, n: usize) -> Result<f64> {
    check_n(n)?;
    if n < x.order() {
        return Err(param(format!(
            "n = {n} is below the chain order {}",
            x.order()
        )));
    }
    Ok(Trellis::new(x, eps.0, x.order()).cond_entropy(n))
}

/// Both bounds at conditioning length `n >= m`.
pub fn entropy_rate_sandwich(
    x: &MarkovChain,
    eps: ChannelParameter,
    n: usize,
) -> Result<EntropySandwich> {
    let lower = cond_entropy_birch_lower(x, eps, n)?;
    let upper = cond_entropy_output(x, eps, n)?;
    Ok(EntropySandwich { lower, upper })
}

/// Output word distribution for a p-vector input, as a dense table over
/// all `2^(n+1)` words indexed by packed bits.
pub fn output_table(p: &StationaryPVector, eps: ChannelParameter) -> Result<Vec<f64>> {
    output_table_raw(p.n(), p.index(), p.probs(), eps.0)
}

pub(crate) fn output_table_raw(n: usize, index: &[BitWord], p: &[f64], e: f64) -> Result<Vec<f64>> {
    check_n(n)?;
    let len = n + 1;
    let mut q = vec![0.0; 1usize << len];
    for (w, v) in index.iter().zip(p) {
        q[w.bits() as usize] = *v;
    }
    if e > 0.0 {
        // the channel acts on each position independently
        for axis in 0..len {
            let bit = 1usize << axis;
            for x in 0..q.len() {
                if x & bit == 0 {
                    let (a, b) = (q[x], q[x | bit]);
                    q[x] = (1.0 - e) * a + e * b;
                    q[x | bit] = e * a + (1.0 - e) * b;
                }
            }
        }
    }
    Ok(q)
}

pub(crate) fn cond_entropy_output_raw(
    n: usize,
    index: &[BitWord],
    p: &[f64],
    e: f64,
) -> Result<f64> {
    let q = output_table_raw(n, index, p, e)?;
    let mut acc = NeumaierSum::new();
    for pair in q.chunks_exact(2) {
        let total = pair[0] + pair[1];
        acc.add(cond_term(pair[0], total));
        acc.add(cond_term(pair[1], total));
    }
    Ok(acc.value())
}

/// `H(Z_0 | Z_{-n}^{-1})` when the input's `(n+1)`-marginal is `p`.
pub fn cond_entropy_output_of_pvector(p: &StationaryPVector, eps: ChannelParameter) -> Result<f64> {
    cond_entropy_output_raw(p.n(), p.index(), p.probs(), eps.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{chain_from_kernel, cond_entropy_words, fair_coin, pvector_of};
    use crate::word::w;

    fn golden() -> MarkovChain {
        let l = (1.0 + 5f64.sqrt()) / 2.0;
        chain_from_kernel(
            1,
            vec![(w("0"), [1.0 / l, 1.0 / (l * l)]), (w("1"), [1.0, 0.0])],
        )
        .unwrap()
    }

    #[test]
    fn entropy_values() {
        assert!((binary_entropy(ChannelParameter::new(0.5).unwrap()) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(binary_entropy(ChannelParameter::NOISELESS), 0.0);
        assert!(
            (binary_entropy(ChannelParameter::new(0.11).unwrap()) - 0.34651533691866615).abs()
                < 1e-15
        );
        assert!(ChannelParameter::new(0.6).is_err());
        assert!(ChannelParameter::new(-0.1).is_err());
    }

    #[test]
    fn noiseless_reduces_to_input() {
        let x = golden();
        let e = ChannelParameter::NOISELESS;
        for n in 1..6 {
            let h = cond_entropy_words(&pvector_of(&x, n).unwrap());
            assert!((cond_entropy_output(&x, e, n).unwrap() - h).abs() < 1e-13);
            assert!((cond_entropy_birch_lower(&x, e, n).unwrap() - h).abs() < 1e-13);
        }
    }

    #[test]
    fn fair_coin_output_is_fair() {
        let e = ChannelParameter::new(0.07).unwrap();
        for n in 0..5 {
            assert!((cond_entropy_output(&fair_coin(), e, n).unwrap() - 2f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn small_noise_first_order_of_forbidden_word() {
        let x = golden();
        let e = 1e-6;
        let v = joint_xz_prob(&x, ChannelParameter::new(e).unwrap(), 0, &w("11")).unwrap() / e;
        let expect = x.word_prob(&w("01")) + x.word_prob(&w("10"));
        assert!((v - expect).abs() < 1e-5);
        assert!((expect - 0.552786404500042).abs() < 1e-12);
    }

    #[test]
    fn pvector_route_matches_trellis() {
        let x = golden();
        let e = ChannelParameter::new(0.03).unwrap();
        for n in 1..7 {
            let a = cond_entropy_output(&x, e, n).unwrap();
            let b = cond_entropy_output_of_pvector(&pvector_of(&x, n).unwrap(), e).unwrap();
            assert!((a - b).abs() < 1e-14, "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn rejects_short_lower_bound() {
        let x = golden().lift(3).unwrap();
        assert!(cond_entropy_birch_lower(&x, ChannelParameter::new(0.1).unwrap(), 2).is_err());
        assert!(cond_entropy_output(&x, ChannelParameter::new(0.1).unwrap(), 25).is_err());
    }
}
