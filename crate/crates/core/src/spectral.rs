//! Perron data of a constraint and its maximum-entropy chain.

use serde::Serialize;

use crate::constraint::{FiniteTypeConstraint, VertexGraph};
use crate::error::{param, Error, Result};
use crate::markov::{chain_from_kernel, cond_entropy_words, MarkovChain, StationaryPVector};
use crate::numeric::compensated;
use crate::word::BitWord;

const MAX_ITER: usize = 1_000_000;
const RESIDUAL_TOL: f64 = 1e-12;

/// Largest eigenvalue of the essential vertex graph with positive left and
/// right eigenvectors scaled so that `left . right = 1`.
#[derive(Clone, Debug, Serialize)]
pub struct PerronData {
    pub lambda: f64,
    pub rho: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// Vertices (words of length equal to the constraint order) indexing the vectors.
    pub vertices: Vec<BitWord>,
}

fn essential_graph(c: &FiniteTypeConstraint) -> Result<VertexGraph> {
    let core = c.graph_presentation()?.essential();
    if core.is_empty() || !core.is_strongly_connected() {
        return Err(Error::Reducible);
    }
    Ok(core)
}

fn max_normalize(v: &mut [f64]) -> f64 {
    let top = v.iter().copied().fold(0.0, f64::max);
    v.iter_mut().for_each(|x| *x /= top);
    top
}

/// Power iteration on `A + I` (aperiodic even when `A` is periodic).
/// Returns the eigenvalue of `A` and the max-normalized eigenvector.
fn dominant(g: &VertexGraph, transpose: bool) -> Result<(f64, Vec<f64>)> {
    let n = g.len();
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (i, s) in g.successors().iter().enumerate() {
            for t in s.iter().flatten() {
                if transpose {
                    out[*t] += v[i];
                } else {
                    out[i] += v[*t];
                }
            }
        }
        out
    };
    let mut v = vec![1.0; n];
    let mut prev = f64::NAN;
    for _ in 0..MAX_ITER {
        let av = apply(&v);
        let mut next: Vec<f64> = av.iter().zip(&v).map(|(a, x)| a + x).collect();
        let mu = max_normalize(&mut next);
        let lambda = mu - 1.0;
        let residual = apply(&next)
            .iter()
            .zip(&next)
            .map(|(a, x)| (a - lambda * x).abs())
            .fold(0.0, f64::max);
        let settled = (lambda - prev).abs() <= 1e-15 * lambda.max(1.0);
        v = next;
        prev = lambda;
        if residual <= RESIDUAL_TOL * 1e-2 || (settled && residual <= RESIDUAL_TOL) {
            return Ok((lambda, v));
        }
    }
    Err(Error::Numerical(
        "Perron power iteration did not converge".into(),
    ))
}

/// Perron eigenvalue and eigenvectors of an irreducible constraint.
pub fn perron(c: &FiniteTypeConstraint) -> Result<PerronData> {
    let g = essential_graph(c)?;
    let (lambda_r, right) = dominant(&g, false)?;
    let (lambda_l, mut left) = dominant(&g, true)?;
    if (lambda_r - lambda_l).abs() > 1e-10 * lambda_r {
        return Err(Error::Numerical(format!(
            "left/right eigenvalues disagree: {lambda_r} vs {lambda_l}"
        )));
    }
    let dot = compensated(left.iter().zip(&right).map(|(a, b)| a * b));
    left.iter_mut().for_each(|x| *x /= dot);
    if right.iter().chain(&left).any(|x| *x <= 0.0) {
        return Err(Error::Numerical(
            "Perron vector has a nonpositive entry".into(),
        ));
    }
    Ok(PerronData {
        lambda: lambda_r,
        rho: 1.0 / lambda_r,
        left,
        right,
        vertices: g.vertices().to_vec(),
    })
}

/// Maximum-entropy Markov chain of an irreducible constraint.
///
/// For order-0 constraints the result is the order-1 chain that picks each
/// allowed symbol uniformly.
pub fn parry_chain(c: &FiniteTypeConstraint) -> Result<MarkovChain> {
    let data = perron(c)?;
    if c.order() == 0 {
        let symbols: Vec<u8> = (0..2u8)
            .filter(|&b| c.allows(&BitWord::raw(b as u64, 1)))
            .collect();
        let share = 1.0 / symbols.len() as f64;
        let mut row = [0.0; 2];
        for &b in &symbols {
            row[b as usize] = share;
        }
        let kernel = symbols
            .iter()
            .map(|&b| (BitWord::raw(b as u64, 1), row))
            .collect();
        return chain_from_kernel(1, kernel);
    }
    let g = essential_graph(c)?;
    let v = &data.right;
    let kernel = g
        .vertices()
        .iter()
        .zip(g.successors())
        .enumerate()
        .map(|(i, (u, s))| {
            let mut row = [0.0; 2];
            for b in 0..2 {
                if let Some(t) = s[b] {
                    row[b] = v[t] / (data.lambda * v[i]);
                }
            }
            let total = row[0] + row[1];
            if row[0] > 0.0 && row[1] > 0.0 {
                row = [row[0] / total, row[1] / total];
            } else if row[0] > 0.0 {
                row = [1.0, 0.0];
            } else {
                row = [0.0, 1.0];
            }
            (*u, row)
        })
        .collect();
    chain_from_kernel(c.order(), kernel)
}

/// Noiseless capacity `ln lambda` in nats.
pub fn noiseless_capacity(c: &FiniteTypeConstraint) -> Result<f64> {
    let lambda = perron(c)?.lambda;
    Ok(lambda.ln())
}

/// Second derivative of the conditional entropy along `t p + (1 - t) q`,
/// by a central second difference.
pub fn hessian_probe(p: &StationaryPVector, q: &StationaryPVector, t: f64) -> Result<f64> {
    if p.index() != q.index() {
        return Err(param("p-vectors must share an index"));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(param(format!("t = {t} must lie in (0, 1)")));
    }
    let mut step: f64 = 1e-4;
    step = step.min(t / 2.0).min((1.0 - t) / 2.0);
    let at = |s: f64| -> Result<f64> {
        let r: Vec<f64> = p
            .probs()
            .iter()
            .zip(q.probs())
            .map(|(a, b)| s * a + (1.0 - s) * b)
            .collect();
        let total: f64 = compensated(r.iter().copied());
        let r: Vec<f64> = r.iter().map(|x| x / total).collect();
        Ok(cond_entropy_words(&p.with_probs(r)?))
    };
    let (lo, mid, hi) = (at(t - step)?, at(t)?, at(t + step)?);
    Ok((hi - 2.0 * mid + lo) / (step * step))
}
