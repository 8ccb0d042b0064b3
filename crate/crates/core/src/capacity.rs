//! Noisy constrained capacity: small-noise expansion and computable bounds.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::expansion_of;
use crate::channel::{
    binary_entropy, cond_entropy_output_raw, entropy_rate_sandwich, ChannelParameter,
};
use crate::constraint::FiniteTypeConstraint;
use crate::error::{param, Error, Result};
use crate::markov::{
    chain_from_kernel, cond_entropy_words, isolated_ones_chain, pvector_on, random_chain_on,
    MarkovChain, StationaryPVector,
};
use crate::rll::{isolated_ones_f, isolated_ones_g};
use crate::spectral::{parry_chain, perron};
use crate::word::BitWord;

/// `C(S, eps) = c0 + c_log eps ln(1/eps) + c_lin eps + O(eps^2 ln^2 eps)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CapacityExpansion {
    pub c0: f64,
    pub c_log: f64,
    pub c_lin: f64,
    pub lambda: f64,
    pub order: usize,
}

impl CapacityExpansion {
    pub fn eval(&self, eps: f64) -> f64 {
        if eps == 0.0 {
            return self.c0;
        }
        self.c0 + self.c_log * eps * (1.0 / eps).ln() + self.c_lin * eps
    }
}

/// Capacity expansion of an irreducible constraint, from the coefficients
/// of its maximum-entropy chain.
pub fn capacity_expansion(c: &FiniteTypeConstraint) -> Result<CapacityExpansion> {
    let lambda = perron(c)?.lambda;
    let x = parry_chain(c)?;
    let e = expansion_of(&x)?;
    Ok(CapacityExpansion {
        c0: lambda.ln(),
        c_log: e.f - 1.0,
        c_lin: e.g - 1.0,
        lambda,
        order: c.order(),
    })
}

/// Settings shared by the ascent routines.
#[derive(Clone, Debug)]
pub struct AscentConfig {
    /// Random restarts in addition to the maximum-entropy start.
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub fd_step: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            restarts: 4,
            seed: 0,
            max_iter: 10_000,
            grad_tol: 1e-9,
            fd_step: 1e-6,
        }
    }
}

// gradient level accepted when the line search can no longer make progress
const STALL_GRAD_TOL: f64 = 1e-7;

struct AscentResult {
    z: Vec<f64>,
    value: f64,
    iterations: usize,
    grad_norm: f64,
}

/// Backtracking gradient ascent of `f` over the box-free coordinates `z`,
/// kept inside the region where `max_step(z, dir)` is positive.
fn ascend(
    f: &dyn Fn(&[f64]) -> f64,
    max_step: &dyn Fn(&[f64], &[f64]) -> f64,
    z0: Vec<f64>,
    cfg: &AscentConfig,
) -> AscentResult {
    let dim = z0.len();
    let mut z = z0;
    let mut value = f(&z);
    let mut step: f64 = 1.0;
    let mut grad_norm = 0.0;
    if dim == 0 {
        return AscentResult {
            z,
            value,
            iterations: 0,
            grad_norm,
        };
    }
    for iter in 0..cfg.max_iter {
        let mut grad = vec![0.0; dim];
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            let room =
                max_step(&z, &e).min(max_step(&z, &e.iter().map(|x| -x).collect::<Vec<_>>()));
            let h = cfg.fd_step.min(0.5 * room);
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] += h;
            zm[i] -= h;
            grad[i] = if h > 0.0 {
                (f(&zp) - f(&zm)) / (2.0 * h)
            } else {
                0.0
            };
        }
        grad_norm = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if grad_norm <= cfg.grad_tol {
            return AscentResult {
                z,
                value,
                iterations: iter,
                grad_norm,
            };
        }
        let sq: f64 = grad.iter().map(|g| g * g).sum();
        let limit = 0.99 * max_step(&z, &grad);
        let mut s = (2.0 * step).min(limit);
        let mut accepted = false;
        for _ in 0..80 {
            if s <= 0.0 {
                break;
            }
            let trial: Vec<f64> = z.iter().zip(&grad).map(|(a, g)| a + s * g).collect();
            let v = f(&trial);
            if v >= value + 1e-4 * s * sq {
                z = trial;
                value = v;
                step = s;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            // no representable improvement along the gradient
            return AscentResult {
                z,
                value,
                iterations: iter,
                grad_norm,
            };
        }
    }
    AscentResult {
        z,
        value,
        iterations: cfg.max_iter,
        grad_norm,
    }
}

/// Maximizer of `H(Z_0 | Z_{-n}^{-1})` over stationary input marginals.
#[derive(Clone, Debug, Serialize)]
pub struct HnOptimum {
    #[serde(skip)]
    pub pvector: StationaryPVector,
    pub value: f64,
    /// Objective at the maximum-entropy marginals.
    pub start_value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Smallest entry of the maximizer: distance to the simplex boundary.
    pub min_entry: f64,
    /// Final objective of every start, maximum-entropy start first.
    pub start_values: Vec<f64>,
}

/// Orthonormal basis of the directions that keep the shift-stationarity
/// and normalization constraints.
fn stationary_directions(index: &[BitWord], n: usize) -> DMatrix<f64> {
    let mut rows: Vec<u64> = index
        .iter()
        .flat_map(|w| [w.prefix(n).bits(), w.suffix(n).bits()])
        .collect();
    rows.sort_unstable();
    rows.dedup();
    let d = index.len();
    let mut e = DMatrix::<f64>::zeros(rows.len() + 1, d);
    for (j, w) in index.iter().enumerate() {
        let r = rows.binary_search(&w.prefix(n).bits()).unwrap();
        e[(r, j)] += 1.0;
        let r = rows.binary_search(&w.suffix(n).bits()).unwrap();
        e[(r, j)] -= 1.0;
        e[(rows.len(), j)] = 1.0;
    }
    let gram = e.transpose() * &e;
    let eig = SymmetricEigen::new(gram);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let cols: Vec<usize> = (0..d)
        .filter(|&i| eig.eigenvalues[i].abs() <= 1e-10 * scale)
        .collect();
    let mut basis = DMatrix::<f64>::zeros(d, cols.len());
    for (k, &i) in cols.iter().enumerate() {
        basis.set_column(k, &eig.eigenvectors.column(i));
    }
    basis
}

fn check_order(c: &FiniteTypeConstraint, n: usize, what: &str) -> Result<()> {
    if n < c.order() {
        return Err(param(format!(
            "{what} = {n} is below the constraint order {}",
            c.order()
        )));
    }
    Ok(())
}

/// `sup H(Z_0 | Z_{-n}^{-1})` over stationary inputs supported in `c`, with
/// the default ascent settings.
pub fn optimize_hn(c: &FiniteTypeConstraint, n: usize, eps: ChannelParameter) -> Result<HnOptimum> {
    optimize_hn_with(c, n, eps, &AscentConfig::default())
}

pub fn optimize_hn_with(
    c: &FiniteTypeConstraint,
    n: usize,
    eps: ChannelParameter,
    cfg: &AscentConfig,
) -> Result<HnOptimum> {
    check_order(c, n, "n")?;
    let parry = parry_chain(c)?;
    let index = parry.support_words(n + 1)?;
    let start = pvector_on(&parry, index.clone())?;
    if eps.value() == 0.0 {
        let value = cond_entropy_words(&start);
        return Ok(HnOptimum {
            min_entry: start.min_entry(),
            pvector: start,
            value,
            start_value: value,
            iterations: 0,
            grad_norm: 0.0,
            converged: true,
            start_values: vec![value],
        });
    }
    let basis = stationary_directions(&index, n);
    let e = eps.value();
    let objective_at = |p: &[f64]| -> f64 {
        cond_entropy_output_raw(n, &index, p, e).expect("length checked by caller")
    };
    let mut starts = vec![start.probs().to_vec()];
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64 + 1);
        let x = random_chain_on(c, n, &mut rng)?;
        starts.push(pvector_on(&x, index.clone())?.probs().to_vec());
    }
    let runs: Vec<(Vec<f64>, AscentResult)> = starts
        .into_par_iter()
        .map(|p0| {
            let point = |z: &[f64]| -> Vec<f64> {
                let mut p = p0.clone();
                for (k, zk) in z.iter().enumerate() {
                    for (i, pi) in p.iter_mut().enumerate() {
                        *pi += basis[(i, k)] * zk;
                    }
                }
                p
            };
            let f = |z: &[f64]| objective_at(&point(z));
            let max_step = |z: &[f64], dir: &[f64]| -> f64 {
                let p = point(z);
                let mut s = f64::INFINITY;
                for (i, pi) in p.iter().enumerate() {
                    let di: f64 = dir
                        .iter()
                        .enumerate()
                        .map(|(k, dk)| basis[(i, k)] * dk)
                        .sum();
                    if di < 0.0 {
                        s = s.min(pi.max(0.0) / -di);
                    }
                }
                s
            };
            let res = ascend(&f, &max_step, vec![0.0; basis.ncols()], cfg);
            let p = point(&res.z);
            (p, res)
        })
        .collect();
    let start_values: Vec<f64> = runs.iter().map(|(_, r)| r.value).collect();
    let best = (0..runs.len()).fold(0, |b, i| {
        if runs[i].1.value > runs[b].1.value {
            i
        } else {
            b
        }
    });
    let (p, res) = &runs[best];
    let converged = res.grad_norm <= cfg.grad_tol.max(STALL_GRAD_TOL);
    if !converged {
        return Err(Error::Numerical(format!(
            "ascent stopped with gradient {:.3e} after {} iterations (best value {})",
            res.grad_norm, res.iterations, res.value
        )));
    }
    // clean up rounding so the vector validates
    let mut p: Vec<f64> = p.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = crate::numeric::compensated(p.iter().copied());
    p.iter_mut().for_each(|x| *x /= total);
    let pvector = StationaryPVector::new(n, index.clone(), p)?;
    Ok(HnOptimum {
        min_entry: pvector.min_entry(),
        value: res.value,
        start_value: objective_at(start.probs()),
        iterations: res.iterations,
        grad_norm: res.grad_norm,
        converged,
        start_values,
        pvector,
    })
}

/// Best order-`m` chain found for the output entropy rate, with its
/// entropy-rate sandwich.
#[derive(Clone, Debug, Serialize)]
pub struct HmOptimum {
    #[serde(skip)]
    pub chain: MarkovChain,
    pub lower: f64,
    pub upper: f64,
    /// Conditioning length of the reported sandwich.
    pub n: usize,
    /// Sandwich of the maximum-entropy chain at the same length.
    pub start_lower: f64,
    pub start_upper: f64,
    pub iterations: usize,
}

/// Largest conditioning length used when growing a sandwich.
pub const SANDWICH_N_CAP: usize = 22;

/// Default target width of entropy-rate sandwiches.
pub const DEFAULT_SANDWICH_TOL: f64 = 1e-10;

fn sandwich_until(x: &MarkovChain, eps: ChannelParameter, tol: f64) -> Result<(usize, f64, f64)> {
    let mut n = x.order();
    loop {
        let s = entropy_rate_sandwich(x, eps, n)?;
        if s.gap() <= tol || n >= SANDWICH_N_CAP {
            return Ok((n, s.lower, s.upper));
        }
        n += 1;
    }
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Ascent over order-`m` chains supported in `c`, one logit per context with
/// two allowed continuations, starting from the maximum-entropy chain.
pub fn optimize_hm(
    c: &FiniteTypeConstraint,
    m: usize,
    eps: ChannelParameter,
    tol: f64,
) -> Result<HmOptimum> {
    optimize_hm_with(c, m, eps, tol, &AscentConfig::default())
}

pub fn optimize_hm_with(
    c: &FiniteTypeConstraint,
    m: usize,
    eps: ChannelParameter,
    tol: f64,
    cfg: &AscentConfig,
) -> Result<HmOptimum> {
    check_order(c, m, "m")?;
    if !(tol > 0.0) {
        return Err(param("tolerance must be positive"));
    }
    let start = parry_chain(c)?.lift(m.max(1))?;
    if eps.value() == 0.0 {
        let h = start.entropy_rate();
        return Ok(HmOptimum {
            chain: start,
            lower: h,
            upper: h,
            n: m.max(1),
            start_lower: h,
            start_upper: h,
            iterations: 0,
        });
    }
    let (n_eval, start_lower, start_upper) = sandwich_until(&start, eps, tol)?;
    let free: Vec<usize> = (0..start.contexts().len())
        .filter(|&i| start.kernel()[i].iter().all(|t| *t > 0.0))
        .collect();
    let build = |theta: &[f64]| -> Result<MarkovChain> {
        let mut kernel: Vec<(BitWord, [f64; 2])> = start
            .contexts()
            .iter()
            .copied()
            .zip(start.kernel().iter().copied())
            .collect();
        for (slot, &i) in free.iter().enumerate() {
            let one = logistic(theta[slot]);
            kernel[i].1 = [1.0 - one, one];
        }
        chain_from_kernel(start.order(), kernel)
    };
    let objective = |theta: &[f64]| -> f64 {
        match build(theta).and_then(|x| entropy_rate_sandwich(&x, eps, n_eval)) {
            Ok(s) => s.midpoint(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let theta0: Vec<f64> = free
        .iter()
        .map(|&i| {
            let t = start.kernel()[i][1];
            (t / (1.0 - t)).ln()
        })
        .collect();
    let unbounded = |_: &[f64], _: &[f64]| f64::INFINITY;
    let res = ascend(&objective, &unbounded, theta0, cfg);
    let chain = build(&res.z)?;
    let (n, lower, upper) = sandwich_until(&chain, eps, tol)?;
    Ok(HmOptimum {
        chain,
        lower,
        upper,
        n,
        start_lower,
        start_upper,
        iterations: res.iterations,
    })
}

/// Lower and upper bounds on the capacity at `eps`.
#[derive(Clone, Debug, Serialize)]
pub struct CapacitySandwich {
    pub lower: f64,
    pub upper: f64,
    pub hm: HmOptimum,
    pub hn: HnOptimum,
}

impl CapacitySandwich {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// `h_m(S, eps) - H(eps) <= C(S, eps) <= H_n(S, eps) - H(eps)`.
pub fn capacity_sandwich(
    c: &FiniteTypeConstraint,
    eps: ChannelParameter,
    m: usize,
    n: usize,
) -> Result<CapacitySandwich> {
    capacity_sandwich_with(c, eps, m, n, &AscentConfig::default())
}

pub fn capacity_sandwich_with(
    c: &FiniteTypeConstraint,
    eps: ChannelParameter,
    m: usize,
    n: usize,
    cfg: &AscentConfig,
) -> Result<CapacitySandwich> {
    let hm = optimize_hm_with(c, m, eps, DEFAULT_SANDWICH_TOL, cfg)?;
    let hn = optimize_hn_with(c, n, eps, cfg)?;
    let h = binary_entropy(eps);
    Ok(CapacitySandwich {
        lower: hm.lower - h,
        upper: hn.value - h,
        hm,
        hn,
    })
}

/// Derivatives along the isolated-ones family at its entropy maximizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TaylorProbe {
    /// Second derivative of the entropy rate.
    pub k1: f64,
    /// First derivative of the log-term coefficient.
    pub k2: f64,
    /// First derivative of the linear coefficient.
    pub k3: f64,
    /// Maximizing transition probability `1/lambda^2`.
    pub p_max: f64,
}

fn family_entropy(p: f64) -> f64 {
    isolated_ones_chain(p)
        .expect("p inside (0,1)")
        .entropy_rate()
}

/// Taylor data of the no-consecutive-ones constraint along the one-parameter
/// family of order-1 chains.
pub fn taylor_probe() -> TaylorProbe {
    let lambda = (1.0 + 5f64.sqrt()) / 2.0;
    let p = 1.0 / (lambda * lambda);
    let h = 1e-5;
    let k1 = (family_entropy(p + h) - 2.0 * family_entropy(p) + family_entropy(p - h)) / (h * h);
    let d = |f: fn(f64) -> Result<f64>| (f(p + h).unwrap() - f(p - h).unwrap()) / (2.0 * h);
    TaylorProbe {
        k1,
        k2: d(isolated_ones_f),
        k3: d(isolated_ones_g),
        p_max: p,
    }
}

/// One row of the sharpness diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SharpnessRow {
    pub eps: f64,
    pub p: f64,
    /// Achieved rate minus the capacity expansion.
    pub residual: f64,
    /// Width of the entropy-rate sandwich used for the achieved rate.
    pub uncertainty: f64,
}

/// Rate achieved on the no-consecutive-ones constraint by the family member
/// `p(eps) = p_max + alpha eps ln(1/eps)`, compared against the capacity
/// expansion. Requires `0 < alpha < K2/|K1|`.
pub fn sharpness_probe(
    alpha: f64,
    eps_grid: &[ChannelParameter],
    n: usize,
) -> Result<Vec<SharpnessRow>> {
    let t = taylor_probe();
    let bound = t.k2 / t.k1.abs();
    if !(alpha > 0.0 && alpha < bound) {
        return Err(param(format!("alpha = {alpha} must lie in (0, {bound})")));
    }
    let golden = FiniteTypeConstraint::new([BitWord::raw(3, 2)])?;
    let expansion = capacity_expansion(&golden)?;
    eps_grid
        .iter()
        .map(|&eps| {
            let e = eps.value();
            if !(e > 0.0 && e <= 1e-2) {
                return Err(param(format!("eps = {e} must lie in (0, 1e-2]")));
            }
            let p = t.p_max + alpha * e * (1.0 / e).ln();
            let x = isolated_ones_chain(p)?;
            let s = entropy_rate_sandwich(&x, eps, n)?;
            let residual = s.midpoint() - binary_entropy(eps) - expansion.eval(e);
            Ok(SharpnessRow {
                eps: e,
                p,
                residual,
                uncertainty: s.gap(),
            })
        })
        .collect()
}
