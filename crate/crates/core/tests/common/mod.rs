//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's probability or entropy code; chains are read only through
//! their context list and kernel.
#![allow(dead_code)]

use nccap::markov::random_chain_on;
use nccap::{rll_constraint, BitWord, FiniteTypeConstraint, MarkovChain, RllParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn word(s: &str) -> BitWord {
    s.parse().unwrap()
}

pub fn constraint(words: &[&str]) -> FiniteTypeConstraint {
    FiniteTypeConstraint::new(words.iter().map(|s| word(s))).unwrap()
}

pub fn rll(d: usize, k: Option<usize>) -> FiniteTypeConstraint {
    rll_constraint(RllParams::new(d, k).unwrap())
}

pub fn random_on(c: &FiniteTypeConstraint, order: usize, seed: u64) -> MarkovChain {
    random_chain_on(c, order, &mut rng(seed)).unwrap()
}

/// Symbols of `w` as a plain vector, oldest first.
pub fn bits(w: &BitWord) -> Vec<u8> {
    (0..w.len()).map(|i| w.at(i)).collect()
}

/// Contains `f` as a contiguous factor, by direct string search.
pub fn has_factor(w: &[u8], f: &[u8]) -> bool {
    f.len() <= w.len() && w.windows(f.len()).any(|win| win == f)
}

pub fn all_words(len: usize) -> Vec<Vec<u8>> {
    (0..1u64 << len)
        .map(|v| (0..len).rev().map(|i| ((v >> i) & 1) as u8).collect())
        .collect()
}

/// Word probabilities straight from the kernel: stationary law by lazy power
/// iteration, then products of transitions.
pub struct WordOracle {
    order: usize,
    contexts: Vec<Vec<u8>>,
    kernel: Vec<[f64; 2]>,
    pi: Vec<f64>,
}

impl WordOracle {
    pub fn new(x: &MarkovChain) -> Self {
        let order = x.order();
        let contexts: Vec<Vec<u8>> = x.contexts().iter().map(bits).collect();
        let kernel = x.kernel().to_vec();
        let n = contexts.len();
        let succ: Vec<[Option<usize>; 2]> = contexts
            .iter()
            .map(|c| {
                [0u8, 1].map(|b| {
                    let mut next = c[1..].to_vec();
                    next.push(b);
                    contexts.iter().position(|d| *d == next)
                })
            })
            .collect();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..200_000 {
            let mut next = vec![0.0; n];
            for i in 0..n {
                next[i] += 0.5 * pi[i];
                for b in 0..2 {
                    if kernel[i][b] > 0.0 {
                        next[succ[i][b].unwrap()] += 0.5 * pi[i] * kernel[i][b];
                    }
                }
            }
            let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            if diff < 1e-17 {
                break;
            }
        }
        Self {
            order,
            contexts,
            kernel,
            pi,
        }
    }

    pub fn prob(&self, w: &[u8]) -> f64 {
        let m = self.order;
        if w.len() < m {
            return all_words(m - w.len())
                .iter()
                .map(|tail| {
                    let mut full = w.to_vec();
                    full.extend(tail);
                    self.prob(&full)
                })
                .sum();
        }
        let Some(mut i) = self.contexts.iter().position(|c| c[..] == w[..m]) else {
            return 0.0;
        };
        let mut p = self.pi[i];
        for t in m..w.len() {
            let b = w[t] as usize;
            p *= self.kernel[i][b];
            if p == 0.0 {
                return 0.0;
            }
            let next = &w[t + 1 - m..=t];
            i = self.contexts.iter().position(|c| c[..] == *next).unwrap();
        }
        p
    }
}

/// Exhaustive input-times-noise enumeration of the probability that the
/// first `k` input symbols and the remaining outputs read `z`.
pub fn brute_joint(oracle: &WordOracle, eps: f64, k: usize, z: &[u8]) -> f64 {
    let len = z.len();
    let mut total = 0.0;
    for x in all_words(len) {
        if x[..k] != z[..k] {
            continue;
        }
        let px = oracle.prob(&x);
        if px == 0.0 {
            continue;
        }
        // the noise word is forced: it is the difference of input and output
        let flips = x[k..].iter().zip(&z[k..]).filter(|(a, b)| a != b).count() as i32;
        total += px * eps.powi(flips) * (1.0 - eps).powi((len - k) as i32 - flips);
    }
    total
}

fn entropy(ps: impl Iterator<Item = f64>) -> f64 {
    ps.filter(|p| *p > 0.0).map(|p| -p * p.ln()).sum()
}

/// `H(last | rest)` of the brute-force joint law on words of length `n + 1`.
pub fn brute_cond_entropy(oracle: &WordOracle, eps: f64, k: usize, n: usize) -> f64 {
    let long = entropy(
        all_words(n + 1)
            .iter()
            .map(|z| brute_joint(oracle, eps, k, z)),
    );
    let short = entropy(all_words(n).iter().map(|z| brute_joint(oracle, eps, k, z)));
    long - short
}
