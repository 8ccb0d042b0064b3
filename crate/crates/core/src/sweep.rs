//! Entropy-rate sweeps over the crossover probability and regression of the
//! results onto the small-noise expansion.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::asymptotics::{expansion_of, AsymptoticExpansion};
use crate::channel::{entropy_rate_sandwich, ChannelParameter};
use crate::error::{param, Error, Result};
use crate::markov::MarkovChain;

/// Gaps below this are treated as this value when weighting fit points.
pub const GAP_FLOOR: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub lower: f64,
    pub upper: f64,
    pub asymptotic: f64,
    /// Sandwich midpoint minus the asymptotic value.
    pub residual: f64,
}

impl SweepRecord {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Entropy-rate sandwich at each grid point against the chain's expansion.
pub fn sweep(
    x: &MarkovChain,
    grid: &[ChannelParameter],
    n: usize,
) -> Result<(AsymptoticExpansion, Vec<SweepRecord>)> {
    let e = expansion_of(x)?;
    let rows = grid
        .iter()
        .map(|&eps| {
            let s = entropy_rate_sandwich(x, eps, n)?;
            let asymptotic = e.eval(eps.value());
            Ok(SweepRecord {
                eps: eps.value(),
                lower: s.lower,
                upper: s.upper,
                asymptotic,
                residual: s.midpoint() - asymptotic,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((e, rows))
}

/// Weighted least-squares fit of sandwich midpoints.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepFit {
    /// Constant term.
    pub a: f64,
    /// Coefficient of `eps ln(1/eps)`.
    pub b: f64,
    /// Coefficient of `eps`.
    pub c: f64,
    /// Coefficient of `eps^2 ln(1/eps)` when the extended model is used.
    pub d: Option<f64>,
}

impl SweepFit {
    /// `(b - f)/f` and `(c - g)/g`; an exact zero target gives the absolute error.
    pub fn relative_errors(&self, e: &AsymptoticExpansion) -> (f64, f64) {
        let rel = |got: f64, want: f64| {
            if want == 0.0 {
                got
            } else {
                (got - want) / want
            }
        };
        (rel(self.b, e.f), rel(self.c, e.g))
    }
}

fn fit(records: &[SweepRecord], extended: bool) -> Result<SweepFit> {
    let cols = if extended { 4 } else { 3 };
    if records.len() < cols {
        return Err(param(format!(
            "need at least {cols} grid points, got {}",
            records.len()
        )));
    }
    if records.iter().any(|r| !(r.eps > 0.0)) {
        return Err(param("fit requires every eps to be positive"));
    }
    let rows = records.len();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut y = DVector::<f64>::zeros(rows);
    for (i, r) in records.iter().enumerate() {
        let w = (1.0 / r.gap().max(GAP_FLOOR)).sqrt();
        let l = (1.0 / r.eps).ln();
        let basis = [1.0, r.eps * l, r.eps, r.eps * r.eps * l];
        for j in 0..cols {
            a[(i, j)] = w * basis[j];
        }
        y[i] = w * r.midpoint();
    }
    // normalize columns so the solve does not depend on their scales
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    for j in 0..cols {
        let s = norms[j];
        a.column_mut(j).iter_mut().for_each(|v| *v /= s);
    }
    let sol = a
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;
    let coef: Vec<f64> = (0..cols).map(|j| sol[j] / norms[j]).collect();
    Ok(SweepFit {
        a: coef[0],
        b: coef[1],
        c: coef[2],
        d: extended.then(|| coef[3]),
    })
}

/// Fit of `a + b eps ln(1/eps) + c eps` with weights `1/gap`.
pub fn fit_expansion(records: &[SweepRecord]) -> Result<SweepFit> {
    fit(records, false)
}

/// Fit that also carries an `eps^2 ln(1/eps)` term.
pub fn fit_expansion_extended(records: &[SweepRecord]) -> Result<SweepFit> {
    fit(records, true)
}
