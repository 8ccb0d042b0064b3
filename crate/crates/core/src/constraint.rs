//! Binary finite-type constraints given by forbidden words.

use std::collections::{HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::word::BitWord;

/// Default cap on the number of words any enumeration may produce.
pub const ENUMERATION_CAP: usize = 1 << 24;

/// A binary finite-type constraint.
///
/// Stores the user-given forbidden set together with its factor-minimal
/// reduction; membership is always decided against the reduced set.
#[derive(Clone, Debug)]
pub struct FiniteTypeConstraint {
    forbidden: Vec<BitWord>,
    minimal: Vec<BitWord>,
    order: usize,
    // by_len[l] holds the packed bits of minimal forbidden words of length l
    by_len: Vec<HashSet<u64>>,
}

/// Reduces a forbidden set to the words that contain no other forbidden word
/// as a factor. The result is sorted by length, then lexicographically.
pub fn minimal_forbidden_set<I: IntoIterator<Item = BitWord>>(forbidden: I) -> Vec<BitWord> {
    let mut words: Vec<BitWord> = forbidden.into_iter().collect();
    words.sort();
    words.dedup();
    let mut kept: Vec<BitWord> = Vec::with_capacity(words.len());
    // shortest first, so a word only needs checking against already-kept ones
    for w in words {
        if !kept.iter().any(|k| w.contains_factor(k)) {
            kept.push(w);
        }
    }
    kept
}

impl FiniteTypeConstraint {
    pub fn new<I: IntoIterator<Item = BitWord>>(forbidden: I) -> Result<Self> {
        let mut given: Vec<BitWord> = forbidden.into_iter().collect();
        if given.iter().any(|w| w.is_empty()) {
            return Err(Error::InvalidConstraint(
                "the empty word cannot be forbidden".into(),
            ));
        }
        given.sort();
        given.dedup();
        let minimal = minimal_forbidden_set(given.iter().copied());
        let max_len = minimal.iter().map(|w| w.len()).max().unwrap_or(0);
        let mut by_len = vec![HashSet::new(); max_len + 1];
        for w in &minimal {
            by_len[w.len()].insert(w.bits());
        }
        Ok(Self {
            forbidden: given,
            minimal,
            order: max_len.saturating_sub(1),
            by_len,
        })
    }

    /// The unconstrained full shift.
    pub fn full_shift() -> Self {
        Self::new(std::iter::empty()).expect("empty forbidden set is valid")
    }

    /// Parses one forbidden word per line; blank lines and `#` comments are skipped.
    pub fn parse_forbidden_list(text: &str) -> Result<Self> {
        let mut words = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let word: BitWord = line
                .parse()
                .map_err(|e| Error::InvalidConstraint(format!("line {}: {e}", lineno + 1)))?;
            if word.is_empty() {
                return Err(Error::InvalidConstraint(format!(
                    "line {}: empty word",
                    lineno + 1
                )));
            }
            words.push(word);
        }
        Self::new(words)
    }

    pub fn forbidden(&self) -> &[BitWord] {
        &self.forbidden
    }

    pub fn minimal_forbidden(&self) -> &[BitWord] {
        &self.minimal
    }

    /// Topological order: longest minimal forbidden word minus one.
    pub fn order(&self) -> usize {
        self.order
    }

    fn max_forbidden_len(&self) -> usize {
        self.by_len.len() - 1
    }

    /// True when `w` contains no forbidden factor.
    pub fn allows(&self, w: &BitWord) -> bool {
        (1..=w.len()).all(|end| self.suffixes_ok(w.prefix(end)))
    }

    /// True when no forbidden word is a suffix of `w`. Together with `w`
    /// minus its last symbol being allowed, this decides whether `w` is.
    #[inline]
    pub fn suffixes_ok(&self, w: BitWord) -> bool {
        let top = self.max_forbidden_len().min(w.len());
        (1..=top).all(|l| !self.by_len[l].contains(&w.suffix(l).bits()))
    }

    /// Lexicographically sorted list of allowed words of length `n`.
    pub fn enumerate_allowed(&self, n: usize) -> Result<Vec<BitWord>> {
        self.enumerate_allowed_capped(n, ENUMERATION_CAP)
    }

    pub fn enumerate_allowed_capped(&self, n: usize, cap: usize) -> Result<Vec<BitWord>> {
        if n > BitWord::MAX_LEN {
            return Err(Error::ResourceLimit {
                what: format!("word length {n}"),
                limit: BitWord::MAX_LEN,
            });
        }
        let mut level = vec![BitWord::EMPTY];
        for _ in 0..n {
            let mut next = Vec::with_capacity(level.len() * 2);
            for w in &level {
                for b in 0..2 {
                    let x = w.push(b);
                    if self.suffixes_ok(x) {
                        next.push(x);
                    }
                }
            }
            if next.len() > cap {
                return Err(Error::ResourceLimit {
                    what: "allowed-word enumeration".into(),
                    limit: cap,
                });
            }
            level = next;
        }
        Ok(level)
    }

    /// Number of allowed words of length `n`, without materializing them
    /// beyond length `order`.
    pub fn count_allowed(&self, n: usize) -> Result<u128> {
        let g = self.graph_presentation()?;
        if n < g.word_len() {
            return Ok(self.enumerate_allowed(n)?.len() as u128);
        }
        let mut counts = vec![1u128; g.len()];
        for _ in g.word_len()..n {
            let mut next = vec![0u128; g.len()];
            for (i, succ) in g.successors().iter().enumerate() {
                for t in succ.iter().flatten() {
                    next[i] += counts[*t];
                }
            }
            counts = next;
        }
        Ok(counts.iter().sum())
    }

    /// Vertex graph on allowed words of length `len` (must be at least the
    /// order for the graph to present the constraint).
    pub fn word_graph(&self, len: usize) -> Result<VertexGraph> {
        let vertices = self.enumerate_allowed(len)?;
        let succ = vertices
            .iter()
            .map(|v| {
                let mut s = [None, None];
                for b in 0..2u8 {
                    let ext = v.push(b);
                    if self.suffixes_ok(ext) {
                        let target = ext.suffix(len);
                        s[b as usize] = vertices.binary_search(&target).ok();
                    }
                }
                s
            })
            .collect();
        Ok(VertexGraph {
            word_len: len,
            vertices,
            succ,
        })
    }

    /// Standard presentation on allowed words of length `order`.
    pub fn graph_presentation(&self) -> Result<VertexGraph> {
        self.word_graph(self.order)
    }

    /// Irreducibility of the bi-extendable core of the vertex graph.
    pub fn is_irreducible(&self) -> bool {
        match self.graph_presentation() {
            Ok(g) => {
                let core = g.essential();
                !core.is_empty() && core.is_strongly_connected()
            }
            Err(_) => false,
        }
    }
}

/// A labeled vertex graph whose vertices are words of a fixed length.
///
/// `successors()[i][b]` is the vertex reached from `i` by appending symbol `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexGraph {
    word_len: usize,
    vertices: Vec<BitWord>,
    succ: Vec<[Option<usize>; 2]>,
}

impl VertexGraph {
    pub fn word_len(&self) -> usize {
        self.word_len
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[BitWord] {
        &self.vertices
    }

    pub fn successors(&self) -> &[[Option<usize>; 2]] {
        &self.succ
    }

    pub fn index_of(&self, v: &BitWord) -> Option<usize> {
        self.vertices.binary_search(v).ok()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(|s| s.iter().flatten().count()).sum()
    }

    /// Dense adjacency matrix; entries count parallel edges (only the
    /// single-vertex graph of the full shift has an entry of 2).
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let n = self.len();
        let mut a = vec![vec![0u32; n]; n];
        for (i, s) in self.succ.iter().enumerate() {
            for t in s.iter().flatten() {
                a[i][*t] += 1;
            }
        }
        a
    }

    /// Restriction to vertices lying on bi-infinite paths.
    pub fn essential(&self) -> VertexGraph {
        let n = self.len();
        let mut alive = vec![true; n];
        let mut out_deg: Vec<usize> = self
            .succ
            .iter()
            .map(|s| s.iter().flatten().count())
            .collect();
        let mut in_deg = vec![0usize; n];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, s) in self.succ.iter().enumerate() {
            for t in s.iter().flatten() {
                in_deg[*t] += 1;
                preds[*t].push(i);
            }
        }
        let mut queue: VecDeque<usize> = (0..n)
            .filter(|&i| out_deg[i] == 0 || in_deg[i] == 0)
            .collect();
        while let Some(v) = queue.pop_front() {
            if !alive[v] {
                continue;
            }
            alive[v] = false;
            for t in self.succ[v].iter().flatten() {
                if alive[*t] {
                    in_deg[*t] -= 1;
                    if in_deg[*t] == 0 {
                        queue.push_back(*t);
                    }
                }
            }
            for &p in &preds[v] {
                if alive[p] {
                    out_deg[p] -= 1;
                    if out_deg[p] == 0 {
                        queue.push_back(p);
                    }
                }
            }
        }
        self.restrict(&alive)
    }

    fn restrict(&self, keep: &[bool]) -> VertexGraph {
        let mut remap = vec![None; self.len()];
        let mut vertices = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if keep[i] {
                remap[i] = Some(vertices.len());
                vertices.push(*v);
            }
        }
        let succ = self
            .succ
            .iter()
            .enumerate()
            .filter(|(i, _)| keep[*i])
            .map(|(_, s)| [s[0].and_then(|t| remap[t]), s[1].and_then(|t| remap[t])])
            .collect();
        VertexGraph {
            word_len: self.word_len,
            vertices,
            succ,
        }
    }

    fn reach(&self, start: usize, forward: bool) -> Vec<bool> {
        let n = self.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, s) in self.succ.iter().enumerate() {
            for t in s.iter().flatten() {
                if forward {
                    adj[i].push(*t);
                } else {
                    adj[*t].push(i);
                }
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &t in &adj[v] {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen
    }

    pub fn is_strongly_connected(&self) -> bool {
        if self.is_empty() {
            return false;
        }
        self.reach(0, true).iter().all(|&x| x) && self.reach(0, false).iter().all(|&x| x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::w;

    fn c(words: &[&str]) -> FiniteTypeConstraint {
        FiniteTypeConstraint::new(words.iter().map(|s| w(s))).unwrap()
    }

    #[test]
    fn minimal_set_drops_superwords() {
        assert_eq!(minimal_forbidden_set([w("11"), w("110")]), vec![w("11")]);
        assert!(minimal_forbidden_set([]).is_empty());
        assert_eq!(
            minimal_forbidden_set([w("11"), w("101")]),
            vec![w("11"), w("101")]
        );
    }

    #[test]
    fn orders() {
        assert_eq!(c(&["11"]).order(), 1);
        assert_eq!(c(&[]).order(), 0);
        assert_eq!(c(&["11", "101", "0000"]).order(), 3);
    }

    #[test]
    fn enumerate_small() {
        let g = c(&["11"]);
        assert_eq!(
            g.enumerate_allowed(2).unwrap(),
            vec![w("00"), w("01"), w("10")]
        );
        let sizes: Vec<usize> = (1..=3)
            .map(|n| g.enumerate_allowed(n).unwrap().len())
            .collect();
        assert_eq!(sizes, [2, 3, 5]);
        assert_eq!(c(&[]).enumerate_allowed(5).unwrap().len(), 32);
        assert_eq!(g.enumerate_allowed(0).unwrap(), vec![BitWord::EMPTY]);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let e = c(&[]).enumerate_allowed_capped(10, 1000).unwrap_err();
        assert!(matches!(e, Error::ResourceLimit { .. }));
    }

    #[test]
    fn irreducibility() {
        assert!(c(&["11"]).is_irreducible());
        assert!(!c(&["01", "10"]).is_irreducible());
        assert!(c(&[]).is_irreducible());
        // 0 and 1 both forbidden: nothing survives
        assert!(!c(&["0", "1"]).is_irreducible());
        // only transient words besides a loop: 1 may appear once at most
        assert!(!c(&["10"]).is_irreducible());
    }

    #[test]
    fn presentations() {
        assert_eq!(
            c(&["11"]).graph_presentation().unwrap().adjacency(),
            vec![vec![1, 1], vec![1, 0]]
        );
        assert_eq!(
            c(&[]).graph_presentation().unwrap().adjacency(),
            vec![vec![2]]
        );
        let g = c(&["11", "101"]).graph_presentation().unwrap();
        assert_eq!(g.vertices(), &[w("00"), w("01"), w("10")]);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(
            g.adjacency(),
            vec![vec![1, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]
        );
    }

    #[test]
    fn parse_file_format() {
        let text = "# no two ones\n\n11\n  101  \n";
        let k = FiniteTypeConstraint::parse_forbidden_list(text).unwrap();
        assert_eq!(k.minimal_forbidden(), &[w("11"), w("101")]);
        assert!(FiniteTypeConstraint::parse_forbidden_list("1a1\n").is_err());
    }

    #[test]
    fn essential_core_trims_transients() {
        // 1 can only be followed by 1 and preceded by 1 once reached: 10 forbidden
        let g = c(&["10"]).graph_presentation().unwrap();
        let core = g.essential();
        assert_eq!(core.vertices(), &[w("0"), w("1")]);
        assert!(!core.is_strongly_connected());
    }
}
