//! Stationary binary Markov chains of arbitrary order.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::FiniteTypeConstraint;
use crate::error::{param, Error, Result};
use crate::numeric::{compensated, cond_term, xlnx, NeumaierSum};
use crate::word::BitWord;

/// Largest supported chain order (context tables are dense in `2^order`).
pub const MAX_ORDER: usize = 20;

/// Above this many contexts the stationary law is found by power iteration.
pub const DIRECT_SOLVE_LIMIT: usize = 4096;

const ROW_SUM_TOL: f64 = 1e-9;
const STATIONARITY_TOL: f64 = 1e-9;
const NONE: u32 = u32::MAX;

/// An irreducible stationary binary Markov chain of order `m >= 1`.
///
/// Kernel zeros are exact: a word has positive probability iff every
/// transition along it has a nonzero kernel entry.
#[derive(Clone, Debug)]
pub struct MarkovChain {
    order: usize,
    contexts: Vec<BitWord>,
    kernel: Vec<[f64; 2]>,
    stationary: Vec<f64>,
    // dense context lookup by packed bits
    lookup: Vec<u32>,
    // successor context index per (context, bit), NONE when the transition is impossible
    successor: Vec<[u32; 2]>,
    // marginals[l][bits] for words of length l <= order
    marginals: Vec<Vec<f64>>,
    short_support: Vec<Vec<bool>>,
}

/// JSON layout of a chain file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ChainFile {
    pub order: usize,
    pub contexts: Vec<BitWord>,
    pub kernel: Vec<[f64; 2]>,
}

/// Builds a chain from its kernel and solves for the stationary law.
pub fn chain_from_kernel(order: usize, kernel: Vec<(BitWord, [f64; 2])>) -> Result<MarkovChain> {
    let (contexts, rows) = validate_kernel(order, kernel)?;
    let skeleton = Skeleton::new(order, &contexts, &rows)?;
    let pi = solve_stationary(&skeleton, &rows)?;
    Ok(skeleton.finish(contexts, rows, pi))
}

fn validate_kernel(
    order: usize,
    mut kernel: Vec<(BitWord, [f64; 2])>,
) -> Result<(Vec<BitWord>, Vec<[f64; 2]>)> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::InvalidChain(format!(
            "order must be in 1..={MAX_ORDER}, got {order}"
        )));
    }
    if kernel.is_empty() {
        return Err(Error::InvalidChain("no contexts".into()));
    }
    kernel.sort_by_key(|(c, _)| *c);
    for pair in kernel.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::InvalidChain(format!(
                "context {} listed twice",
                pair[0].0
            )));
        }
    }
    let mut contexts = Vec::with_capacity(kernel.len());
    let mut rows = Vec::with_capacity(kernel.len());
    for (c, [t0, t1]) in kernel {
        if c.len() != order {
            return Err(Error::InvalidChain(format!(
                "context {c} does not have length {order}"
            )));
        }
        for t in [t0, t1] {
            if !t.is_finite() || !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidChain(format!(
                    "context {c}: entry {t} is not a probability"
                )));
            }
        }
        let s = t0 + t1;
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidChain(format!("context {c}: row sums to {s}")));
        }
        let row = if t0 == 0.0 {
            [0.0, 1.0]
        } else if t1 == 0.0 {
            [1.0, 0.0]
        } else if (s - 1.0).abs() <= 2.0 * f64::EPSILON {
            // already normalized up to rounding; keep the bits so files roundtrip
            [t0, t1]
        } else {
            [t0 / s, t1 / s]
        };
        contexts.push(c);
        rows.push(row);
    }
    Ok((contexts, rows))
}

/// Lookup tables shared by both construction paths.
struct Skeleton {
    order: usize,
    lookup: Vec<u32>,
    successor: Vec<[u32; 2]>,
}

impl Skeleton {
    fn new(order: usize, contexts: &[BitWord], rows: &[[f64; 2]]) -> Result<Self> {
        let mut lookup = vec![NONE; 1usize << order];
        for (i, c) in contexts.iter().enumerate() {
            lookup[c.bits() as usize] = i as u32;
        }
        let mut successor = Vec::with_capacity(contexts.len());
        for (c, row) in contexts.iter().zip(rows) {
            let mut s = [NONE; 2];
            for b in 0..2u8 {
                if row[b as usize] > 0.0 {
                    let next = lookup[c.shift_in(b).bits() as usize];
                    if next == NONE {
                        return Err(Error::InvalidChain(format!(
                            "context {c} moves with symbol {b} to unlisted context {}",
                            c.shift_in(b)
                        )));
                    }
                    s[b as usize] = next;
                }
            }
            successor.push(s);
        }
        let sk = Self {
            order,
            lookup,
            successor,
        };
        if !sk.strongly_connected() {
            return Err(Error::Reducible);
        }
        Ok(sk)
    }

    fn strongly_connected(&self) -> bool {
        let n = self.successor.len();
        let mut back: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, s) in self.successor.iter().enumerate() {
            for &t in s.iter().filter(|&&t| t != NONE) {
                back[t as usize].push(i);
            }
        }
        let forward = |v: usize| -> Vec<usize> {
            self.successor[v]
                .iter()
                .filter(|&&t| t != NONE)
                .map(|&t| t as usize)
                .collect()
        };
        let reach = |next: &dyn Fn(usize) -> Vec<usize>| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(v) = stack.pop() {
                for t in next(v) {
                    if !seen[t] {
                        seen[t] = true;
                        count += 1;
                        stack.push(t);
                    }
                }
            }
            count == n
        };
        reach(&forward) && reach(&|v| back[v].clone())
    }

    fn finish(
        self,
        contexts: Vec<BitWord>,
        kernel: Vec<[f64; 2]>,
        stationary: Vec<f64>,
    ) -> MarkovChain {
        let order = self.order;
        let mut marginals = vec![Vec::new(); order + 1];
        let mut short_support = vec![Vec::new(); order + 1];
        let mut top = vec![0.0; 1usize << order];
        let mut top_support = vec![false; 1usize << order];
        for (c, p) in contexts.iter().zip(&stationary) {
            top[c.bits() as usize] = *p;
            top_support[c.bits() as usize] = true;
        }
        marginals[order] = top;
        short_support[order] = top_support;
        for l in (0..order).rev() {
            let size = 1usize << l;
            let above = &marginals[l + 1];
            let above_s = &short_support[l + 1];
            // drop the oldest symbol: x and x | (1 << l) collapse onto x
            let m: Vec<f64> = (0..size).map(|x| above[x] + above[x | size]).collect();
            let s: Vec<bool> = (0..size).map(|x| above_s[x] || above_s[x | size]).collect();
            marginals[l] = m;
            short_support[l] = s;
        }
        marginals[0] = vec![1.0];
        MarkovChain {
            order,
            contexts,
            kernel,
            stationary,
            lookup: self.lookup,
            successor: self.successor,
            marginals,
            short_support,
        }
    }
}

fn solve_stationary(sk: &Skeleton, rows: &[[f64; 2]]) -> Result<Vec<f64>> {
    let n = rows.len();
    let pi = if n <= DIRECT_SOLVE_LIMIT {
        // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1
        let mut a = DMatrix::<f64>::zeros(n, n);
        for (i, s) in sk.successor.iter().enumerate() {
            for b in 0..2 {
                if s[b] != NONE {
                    a[(s[b] as usize, i)] += rows[i][b];
                }
            }
            a[(i, i)] -= 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(n);
        rhs[n - 1] = 1.0;
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular stationary system".into()))?;
        sol.iter().copied().collect::<Vec<f64>>()
    } else {
        power_stationary(sk, rows)?
    };
    if pi.iter().any(|p| !p.is_finite() || *p <= 0.0) {
        return Err(Error::Numerical(
            "stationary law has a nonpositive entry".into(),
        ));
    }
    let total = compensated(pi.iter().copied());
    Ok(pi.iter().map(|p| p / total).collect())
}

fn power_stationary(sk: &Skeleton, rows: &[[f64; 2]]) -> Result<Vec<f64>> {
    let n = rows.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..1_000_000 {
        // lazy chain (P + I)/2 is aperiodic with the same stationary law
        let mut next: Vec<f64> = pi.iter().map(|p| 0.5 * p).collect();
        for (i, s) in sk.successor.iter().enumerate() {
            for b in 0..2 {
                if s[b] != NONE {
                    next[s[b] as usize] += 0.5 * pi[i] * rows[i][b];
                }
            }
        }
        let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if diff <= 1e-14 {
            return Ok(pi);
        }
    }
    Err(Error::Numerical(
        "stationary power iteration did not converge".into(),
    ))
}

impl MarkovChain {
    /// Builds a chain from a kernel and an externally known stationary law,
    /// which is checked rather than solved for.
    pub(crate) fn with_stationary(
        order: usize,
        kernel: Vec<(BitWord, [f64; 2])>,
        pi: HashMap<u64, f64>,
    ) -> Result<Self> {
        let (contexts, rows) = validate_kernel(order, kernel)?;
        let skeleton = Skeleton::new(order, &contexts, &rows)?;
        let mut stationary: Vec<f64> = contexts
            .iter()
            .map(|c| pi.get(&c.bits()).copied().unwrap_or(0.0))
            .collect();
        let total = compensated(stationary.iter().copied());
        stationary.iter_mut().for_each(|p| *p /= total);
        let mut flow = vec![NeumaierSum::new(); contexts.len()];
        for (i, s) in skeleton.successor.iter().enumerate() {
            for b in 0..2 {
                if s[b] != NONE {
                    flow[s[b] as usize].add(stationary[i] * rows[i][b]);
                }
            }
        }
        let residual: f64 = flow
            .iter()
            .zip(&stationary)
            .map(|(f, p)| (f.value() - p).abs())
            .sum();
        if residual > STATIONARITY_TOL {
            return Err(Error::InvalidChain(format!(
                "supplied law is not stationary (residual {residual:e})"
            )));
        }
        Ok(skeleton.finish(contexts, rows, stationary))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn contexts(&self) -> &[BitWord] {
        &self.contexts
    }

    pub fn kernel(&self) -> &[[f64; 2]] {
        &self.kernel
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn context_index(&self, c: &BitWord) -> Option<usize> {
        if c.len() != self.order {
            return None;
        }
        let i = self.lookup[c.bits() as usize];
        (i != NONE).then_some(i as usize)
    }

    /// `T(c, b)`, zero for unlisted contexts.
    pub fn transition(&self, c: &BitWord, b: u8) -> f64 {
        self.context_index(c)
            .map_or(0.0, |i| self.kernel[i][b as usize])
    }

    pub(crate) fn successor_index(&self, i: usize, b: u8) -> Option<usize> {
        let s = self.successor[i][b as usize];
        (s != NONE).then_some(s as usize)
    }

    /// Stationary probability of a word.
    pub fn word_prob(&self, w: &BitWord) -> f64 {
        let m = self.order;
        let len = w.len();
        if len <= m {
            return self.marginals[len][w.bits() as usize];
        }
        let mut ctx = self.lookup[w.prefix(m).bits() as usize];
        if ctx == NONE {
            return 0.0;
        }
        let mut p = self.stationary[ctx as usize];
        for t in m..len {
            let b = w.at(t);
            let next = self.successor[ctx as usize][b as usize];
            if next == NONE {
                return 0.0;
            }
            p *= self.kernel[ctx as usize][b as usize];
            ctx = next;
        }
        p
    }

    /// Combinatorial support test; agrees exactly with `word_prob(w) > 0`.
    pub fn in_support(&self, w: &BitWord) -> bool {
        let m = self.order;
        let len = w.len();
        if len <= m {
            return self.short_support[len][w.bits() as usize];
        }
        let mut ctx = self.lookup[w.prefix(m).bits() as usize];
        if ctx == NONE {
            return false;
        }
        for t in m..len {
            ctx = self.successor[ctx as usize][w.at(t) as usize];
            if ctx == NONE {
                return false;
            }
        }
        true
    }

    /// Entropy rate `-sum pi(c) T(c,v) ln T(c,v)` in nats.
    pub fn entropy_rate(&self) -> f64 {
        -compensated(
            self.stationary
                .iter()
                .zip(&self.kernel)
                .flat_map(|(p, row)| row.iter().map(move |t| p * xlnx(*t))),
        )
    }

    /// Constraint whose allowed words are exactly the support of the chain.
    pub fn support_constraint(&self) -> FiniteTypeConstraint {
        let mut forbidden = Vec::new();
        for len in 1..=self.order + 1 {
            forbidden.extend(BitWord::all(len).filter(|w| !self.in_support(w)));
        }
        FiniteTypeConstraint::new(forbidden).expect("nonempty words")
    }

    /// Words of length `n` with positive probability, lexicographically sorted.
    pub fn support_words(&self, n: usize) -> Result<Vec<BitWord>> {
        self.support_constraint().enumerate_allowed(n)
    }

    /// Every chain of order `m` is also a chain of any larger order.
    pub fn lift(&self, order: usize) -> Result<MarkovChain> {
        if order < self.order {
            return Err(param(format!(
                "cannot lower order {} to {order}",
                self.order
            )));
        }
        if order == self.order {
            return Ok(self.clone());
        }
        let words = self.support_words(order)?;
        let kernel: Vec<(BitWord, [f64; 2])> = words
            .iter()
            .map(|c| {
                let i = self
                    .context_index(&c.suffix(self.order))
                    .expect("support word ends in a context");
                (*c, self.kernel[i])
            })
            .collect();
        let pi = words
            .iter()
            .map(|c| (c.bits(), self.word_prob(c)))
            .collect();
        MarkovChain::with_stationary(order, kernel, pi)
    }

    pub fn to_file(&self) -> ChainFile {
        ChainFile {
            order: self.order,
            contexts: self.contexts.clone(),
            kernel: self.kernel.clone(),
        }
    }

    pub fn from_file(file: ChainFile) -> Result<Self> {
        if file.contexts.len() != file.kernel.len() {
            return Err(Error::InvalidChain(format!(
                "{} contexts but {} kernel rows",
                file.contexts.len(),
                file.kernel.len()
            )));
        }
        chain_from_kernel(
            file.order,
            file.contexts.into_iter().zip(file.kernel).collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ChainFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidChain(format!("malformed chain file: {e}")))?;
        Self::from_file(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("chain serializes")
    }
}

/// Entropy rate of a chain in nats.
pub fn entropy_rate_markov(x: &MarkovChain) -> f64 {
    x.entropy_rate()
}

/// A shift-stationary probability vector on allowed words of length `n + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryPVector {
    n: usize,
    index: Vec<BitWord>,
    p: Vec<f64>,
}

impl StationaryPVector {
    /// Checks lengths, ordering, nonnegativity and normalization. Shift
    /// stationarity is reported by [`Self::stationarity_residual`].
    pub fn new(n: usize, index: Vec<BitWord>, p: Vec<f64>) -> Result<Self> {
        if index.len() != p.len() {
            return Err(param("index and probability vector differ in length"));
        }
        if index.iter().any(|w| w.len() != n + 1) {
            return Err(param(format!("index words must have length {}", n + 1)));
        }
        if index.windows(2).any(|x| x[0] >= x[1]) {
            return Err(param("index must be strictly sorted"));
        }
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(param("probabilities must be finite and nonnegative"));
        }
        let total = compensated(p.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(param(format!("probabilities sum to {total}")));
        }
        Ok(Self { n, index, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn index(&self) -> &[BitWord] {
        &self.index
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, w: &BitWord) -> f64 {
        self.index.binary_search(w).map_or(0.0, |i| self.p[i])
    }

    pub fn min_entry(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest violation of `sum_a p(w a) = sum_b p(b w)` over words of length `n`.
    pub fn stationarity_residual(&self) -> f64 {
        let mut balance: HashMap<u64, NeumaierSum> = HashMap::new();
        for (w, p) in self.index.iter().zip(&self.p) {
            balance.entry(w.prefix(self.n).bits()).or_default().add(*p);
            balance.entry(w.suffix(self.n).bits()).or_default().add(-*p);
        }
        balance
            .values()
            .map(|s| s.value().abs())
            .fold(0.0, f64::max)
    }

    /// Rebuilds a vector on the same index with new probabilities.
    pub fn with_probs(&self, p: Vec<f64>) -> Result<Self> {
        Self::new(self.n, self.index.clone(), p)
    }
}

/// `H(X_0 | X_{-n}^{-1})` for the process whose `(n+1)`-marginal is `p`.
pub fn cond_entropy_words(p: &StationaryPVector) -> f64 {
    let idx = &p.index;
    let mut acc = NeumaierSum::new();
    let mut i = 0;
    while i < idx.len() {
        let w = idx[i];
        if w.from_right(1) == 0 && i + 1 < idx.len() && idx[i + 1] == w.flip_from_right(1) {
            let (a, b) = (p.p[i], p.p[i + 1]);
            let total = a + b;
            acc.add(cond_term(a, total));
            acc.add(cond_term(b, total));
            i += 2;
        } else {
            // sole continuation: conditional probability one
            i += 1;
        }
    }
    acc.value()
}

/// The `(n+1)`-marginal of a chain on its support words.
pub fn pvector_of(x: &MarkovChain, n: usize) -> Result<StationaryPVector> {
    let index = x.support_words(n + 1)?;
    pvector_on(x, index)
}

/// Marginal of a chain on a caller-chosen index of words of equal length.
pub fn pvector_on(x: &MarkovChain, index: Vec<BitWord>) -> Result<StationaryPVector> {
    let n = index.first().map_or(0, |w| w.len().saturating_sub(1));
    let p: Vec<f64> = index.iter().map(|w| x.word_prob(w)).collect();
    let total = compensated(p.iter().copied());
    if (total - 1.0).abs() > 1e-12 {
        return Err(param(format!(
            "index carries mass {total}, not the full support"
        )));
    }
    StationaryPVector::new(n, index, p)
}

/// The order-`max(n, 1)` chain with the given `(n+1)`-marginal.
pub fn chain_from_pvector(p: &StationaryPVector) -> Result<MarkovChain> {
    let residual = p.stationarity_residual();
    if residual > STATIONARITY_TOL {
        return Err(param(format!(
            "p-vector is not shift-stationary (residual {residual:e})"
        )));
    }
    let n = p.n;
    let lookup: HashMap<u64, f64> = p
        .index
        .iter()
        .zip(&p.p)
        .map(|(w, q)| (w.bits(), *q))
        .collect();
    let get = |bits: u64| lookup.get(&bits).copied().unwrap_or(0.0);
    if n == 0 {
        let marg = [get(0), get(1)];
        let kernel = (0..2u8)
            .filter(|&b| marg[b as usize] > 0.0)
            .map(|b| (BitWord::raw(b as u64, 1), marg))
            .collect();
        let pi = (0..2u64).map(|b| (b, marg[b as usize])).collect();
        return MarkovChain::with_stationary(1, kernel, pi);
    }
    let mut kernel = Vec::new();
    let mut pi = HashMap::new();
    for c in p.index.iter().map(|w| w.prefix(n)) {
        if pi.contains_key(&c.bits()) {
            continue;
        }
        let (a, b) = (get(c.bits() << 1), get((c.bits() << 1) | 1));
        let total = a + b;
        if total > 0.0 {
            pi.insert(c.bits(), total);
            kernel.push((c, [a / total, b / total]));
        }
    }
    MarkovChain::with_stationary(n, kernel, pi)
}

/// Random chain of the given order supported on the essential core of a
/// constraint. Free transitions are drawn uniformly from `[0.05, 0.95]`.
pub fn random_chain_on<R: Rng + ?Sized>(
    c: &FiniteTypeConstraint,
    order: usize,
    rng: &mut R,
) -> Result<MarkovChain> {
    let order = order.max(1);
    if order < c.order() {
        return Err(param(format!(
            "order {order} is below the constraint order {}",
            c.order()
        )));
    }
    let g = c.word_graph(order)?.essential();
    if g.is_empty() || !g.is_strongly_connected() {
        return Err(Error::Reducible);
    }
    let kernel = g
        .vertices()
        .iter()
        .zip(g.successors())
        .map(|(v, s)| {
            let row = match (s[0], s[1]) {
                (Some(_), Some(_)) => {
                    let a: f64 = rng.gen_range(0.05..0.95);
                    [1.0 - a, a]
                }
                (Some(_), None) => [1.0, 0.0],
                (None, Some(_)) => [0.0, 1.0],
                (None, None) => unreachable!("essential vertices have successors"),
            };
            (*v, row)
        })
        .collect();
    chain_from_kernel(order, kernel)
}

/// Random chain of the given order with every transition positive.
pub fn random_positive_chain<R: Rng + ?Sized>(order: usize, rng: &mut R) -> Result<MarkovChain> {
    random_chain_on(&FiniteTypeConstraint::full_shift(), order, rng)
}

/// Fair coin as an order-1 chain.
pub fn fair_coin() -> MarkovChain {
    chain_from_kernel(
        1,
        vec![
            (BitWord::raw(0, 1), [0.5, 0.5]),
            (BitWord::raw(1, 1), [0.5, 0.5]),
        ],
    )
    .expect("fair coin is valid")
}

/// Order-1 chain with `T(0,1) = p` and `T(1,0) = 1`: ones never repeat.
pub fn isolated_ones_chain(p: f64) -> Result<MarkovChain> {
    if !(p > 0.0 && p < 1.0) {
        return Err(param(format!(
            "transition probability {p} must lie in (0, 1)"
        )));
    }
    chain_from_kernel(
        1,
        vec![
            (BitWord::raw(0, 1), [1.0 - p, p]),
            (BitWord::raw(1, 1), [1.0, 0.0]),
        ],
    )
}
