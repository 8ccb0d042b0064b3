//! Self-check suite: identities that must hold between independently
//! computed quantities, plus frozen reference coefficients.

use serde::Serialize;

use crate::asymptotics::{f_nk, g_nk, g_positive, g_terms, window};
use crate::constraint::FiniteTypeConstraint;
use crate::error::Result;
use crate::markov::{chain_from_kernel, isolated_ones_chain, MarkovChain};
use crate::rll::{
    f_general, f_maxentropy_closed_form, isolated_ones_f, isolated_ones_g, rho0, rll_constraint,
    RllParams,
};
use crate::spectral::{noiseless_capacity, parry_chain};
use crate::word::BitWord;

const STABILITY_TOL: f64 = 1e-12;
const FROZEN_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn from_result(name: impl Into<String>, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

/// A chain with reference values of `(H, f, g)`.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub chain: MarkovChain,
    pub h: f64,
    pub f: f64,
    pub g: f64,
}

fn rll_parry(d: usize, k: Option<usize>) -> Result<MarkovChain> {
    parry_chain(&rll_constraint(RllParams::new(d, k)?))
}

/// Built-in reference chains.
pub fn fixtures() -> Result<Vec<Fixture>> {
    let l = (1.0 + 5f64.sqrt()) / 2.0;
    Ok(vec![
        Fixture {
            name: "rll(1,inf) max-entropy".into(),
            chain: rll_parry(1, None)?,
            h: l.ln(),
            f: 1.0 / 5f64.sqrt(),
            g: 0.2104062475732884,
        },
        Fixture {
            name: "rll(1,3) max-entropy".into(),
            chain: rll_parry(1, Some(3))?,
            h: 0.3822450858400356,
            f: 0.8424267759834871,
            g: 0.40138932006812267,
        },
        Fixture {
            name: "rll(2,inf) max-entropy".into(),
            chain: rll_parry(2, None)?,
            h: 0.3822450858400357,
            f: 0.6114919919508127,
            g: 0.30237055244794186,
        },
        Fixture {
            name: "isolated ones p=0.3".into(),
            chain: isolated_ones_chain(0.3)?,
            h: 0.46989561696530274,
            f: 0.3923076923076923,
            g: 0.24007426022310185,
        },
    ])
}

/// Largest deviation of `values` from their first entry.
fn spread(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|v| (v - values[0]).abs())
        .fold(0.0, f64::max)
}

/// Rows `(n, k, value)`.
pub type CoefficientTable = Vec<(usize, usize, f64)>;

/// `f_n^k` over `n` in `2m..=3m+2` and `g_n^k` over `n` in `3m..=3m+2`, all `k <= m`.
pub fn stability_tables(x: &MarkovChain) -> Result<(CoefficientTable, CoefficientTable)> {
    let m = x.order();
    let mut fs = Vec::new();
    let mut gs = Vec::new();
    for k in 0..=m {
        for n in 2 * m..=3 * m + 2 {
            fs.push((n, k, f_nk(x, n, k)?));
        }
        for n in 3 * m..=3 * m + 2 {
            gs.push((n, k, g_nk(x, n, k)?));
        }
    }
    Ok((fs, gs))
}

fn check_fixture(fx: &Fixture) -> Result<(bool, String)> {
    let (fs, gs) = stability_tables(&fx.chain)?;
    let fv: Vec<f64> = fs.iter().map(|t| t.2).collect();
    let gv: Vec<f64> = gs.iter().map(|t| t.2).collect();
    let (fsp, gsp) = (spread(&fv), spread(&gv));
    let h = fx.chain.entropy_rate();
    let (dh, df, dg) = ((h - fx.h).abs(), (fv[0] - fx.f).abs(), (gv[0] - fx.g).abs());
    let passed = fsp <= STABILITY_TOL
        && gsp <= STABILITY_TOL
        && dh <= FROZEN_TOL
        && df <= FROZEN_TOL
        && dg <= FROZEN_TOL;
    Ok((
        passed,
        format!(
            "f spread {fsp:.1e}, g spread {gsp:.1e}, |dH| {dh:.1e}, |df| {df:.1e}, |dg| {dg:.1e}"
        ),
    ))
}

fn check_windows(x: &MarkovChain) -> Result<(bool, String)> {
    let m = x.order();
    let t = g_terms(x, 3 * m, 0)?;
    let d1 = (window::linear_drift(x)? - t.linear_drift).abs();
    let d2 = (window::boundary_log(x)? - t.boundary_log).abs();
    let d3 = (window::interior_log(x)? - t.interior_log).abs();
    let worst = d1.max(d2).max(d3);
    Ok((worst <= STABILITY_TOL, format!("max deviation {worst:.1e}")))
}

fn check_run_length_f() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (d, k) in [(1, None), (1, Some(3)), (2, None), (2, Some(4))] {
        let p = RllParams::new(d, k)?;
        let x = parry_chain(&rll_constraint(p))?;
        let direct = f_nk(&x, 2 * x.order(), 0)?;
        worst = worst.max((f_general(&x, p) - direct).abs());
        worst = worst.max((f_maxentropy_closed_form(p)? - direct).abs());
    }
    Ok((worst <= 1e-10, format!("max deviation {worst:.1e}")))
}

fn positive_chains() -> Result<Vec<MarkovChain>> {
    let b = |s: &str| s.parse::<BitWord>().expect("literal");
    Ok(vec![
        chain_from_kernel(1, vec![(b("0"), [0.3, 0.7]), (b("1"), [0.6, 0.4])])?,
        chain_from_kernel(
            2,
            vec![
                (b("00"), [0.2, 0.8]),
                (b("01"), [0.55, 0.45]),
                (b("10"), [0.9, 0.1]),
                (b("11"), [0.35, 0.65]),
            ],
        )?,
    ])
}

fn check_divergence_form() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut f_zero = true;
    for x in positive_chains()? {
        let m = x.order();
        f_zero &= f_nk(&x, 2 * m, 0)? == 0.0;
        worst = worst.max((g_nk(&x, 3 * m, 0)? - g_positive(&x)?).abs());
    }
    Ok((
        f_zero && worst <= 1e-9,
        format!("f exactly zero: {f_zero}, max g deviation {worst:.1e}"),
    ))
}

fn check_spectral() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (d, k) in [(1, None), (1, Some(3)), (2, None), (2, Some(4))] {
        let p = RllParams::new(d, k)?;
        worst = worst.max(((1.0 / rho0(p)?).ln() - noiseless_capacity(&rll_constraint(p))?).abs());
    }
    let full = noiseless_capacity(&FiniteTypeConstraint::full_shift())? == 2f64.ln();
    Ok((
        worst <= 1e-10 && full,
        format!("max deviation {worst:.1e}, full shift exact: {full}"),
    ))
}

fn check_family() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for p in [0.3, 0.5, 0.7] {
        let x = isolated_ones_chain(p)?;
        worst = worst.max((f_nk(&x, 2, 0)? - isolated_ones_f(p)?).abs());
        worst = worst.max((g_nk(&x, 3, 0)? - isolated_ones_g(p)?).abs());
    }
    Ok((worst <= 1e-10, format!("max deviation {worst:.1e}")))
}

/// Runs the fixture checks on a caller-supplied fixture list.
pub fn check_fixtures(fixtures: &[Fixture]) -> Vec<Check> {
    let mut out = Vec::new();
    for fx in fixtures {
        out.push(Check::from_result(
            format!("stability and reference values: {}", fx.name),
            check_fixture(fx),
        ));
        out.push(Check::from_result(
            format!("fixed-window forms: {}", fx.name),
            check_windows(&fx.chain),
        ));
    }
    out
}

/// Full suite.
pub fn run_all() -> Vec<Check> {
    let mut out = match fixtures() {
        Ok(f) => check_fixtures(&f),
        Err(e) => vec![Check::new("fixtures", false, format!("error: {e}"))],
    };
    out.push(Check::from_result(
        "run-length log-term forms",
        check_run_length_f(),
    ));
    out.push(Check::from_result(
        "divergence form for positive kernels",
        check_divergence_form(),
    ));
    out.push(Check::from_result(
        "Perron eigenvalue vs run-length root",
        check_spectral(),
    ));
    out.push(Check::from_result(
        "isolated-ones closed forms",
        check_family(),
    ));
    out
}
