mod common;

use common::{constraint, random_on, rll};
use nccap::spectral::hessian_probe;
use nccap::{
    binary_entropy, capacity_expansion, capacity_sandwich, entropy_rate_sandwich,
    noiseless_capacity, optimize_hm, optimize_hn, parry_chain, perron, pvector_of, rho0,
    sharpness_probe, taylor_probe, ChannelParameter, FiniteTypeConstraint, RllParams,
};

fn eps(e: f64) -> ChannelParameter {
    ChannelParameter::new(e).unwrap()
}

fn golden() -> FiniteTypeConstraint {
    constraint(&["11"])
}

#[test]
fn perron_data_invariants() {
    for c in [
        golden(),
        rll(1, Some(3)),
        rll(2, None),
        rll(2, Some(4)),
        constraint(&["00", "11"]),
    ] {
        let d = perron(&c).unwrap();
        let g = c.word_graph(c.order().max(1)).unwrap().essential();
        let a = g.adjacency();
        let vmax = d.right.iter().cloned().fold(0.0, f64::max);
        for i in 0..a.len() {
            let av: f64 = (0..a.len()).map(|j| a[i][j] as f64 * d.right[j]).sum();
            let wa: f64 = (0..a.len()).map(|j| d.left[j] * a[j][i] as f64).sum();
            assert!((av - d.lambda * d.right[i]).abs() / vmax <= 1e-12);
            assert!(
                (wa - d.lambda * d.left[i]).abs()
                    <= 1e-12 * d.left.iter().cloned().fold(0.0, f64::max)
            );
        }
        assert!(d.right.iter().chain(&d.left).all(|v| *v > 0.0));
        let x = parry_chain(&c).unwrap();
        assert!((x.entropy_rate() - d.lambda.ln()).abs() <= 1e-12);
    }
}

#[test]
fn spectral_and_run_length_roots_agree() {
    for (d, k) in [
        (1, None),
        (1, Some(3)),
        (2, None),
        (2, Some(4)),
        (3, Some(7)),
    ] {
        let p = RllParams::new(d, k).unwrap();
        let c = nccap::rll_constraint(p);
        assert!(((1.0 / rho0(p).unwrap()).ln() - noiseless_capacity(&c).unwrap()).abs() <= 1e-10);
    }
    assert_eq!(
        noiseless_capacity(&FiniteTypeConstraint::full_shift()).unwrap(),
        2f64.ln()
    );
}

#[test]
fn expansion_examples() {
    let e = capacity_expansion(&rll(1, Some(2))).unwrap();
    assert!(e.c_log.abs() <= 1e-12);
    let e = capacity_expansion(&rll(2, Some(4))).unwrap();
    assert!(e.c_log.abs() <= 1e-12);
    for c in [golden(), rll(1, Some(3)), rll(2, None)] {
        let e = capacity_expansion(&c).unwrap();
        assert!(e.c_log <= 0.0);
        assert_eq!(e.c0, noiseless_capacity(&c).unwrap());
    }
}

#[test]
fn noiseless_optimizers_return_the_capacity() {
    let c = golden();
    let cap = noiseless_capacity(&c).unwrap();
    for n in 1..=3 {
        let hn = optimize_hn(&c, n, ChannelParameter::NOISELESS).unwrap();
        assert!((hn.value - cap).abs() <= 1e-6, "n={n}: {}", hn.value);
        let parry = pvector_of(&parry_chain(&c).unwrap(), n).unwrap();
        for (a, b) in hn.pvector.probs().iter().zip(parry.probs()) {
            assert!((a - b).abs() <= 1e-4);
        }
    }
    let hm = optimize_hm(&c, 1, ChannelParameter::NOISELESS, 1e-10).unwrap();
    assert!((hm.lower - cap).abs() <= 1e-6 && (hm.upper - cap).abs() <= 1e-6);
    let s = capacity_sandwich(&c, ChannelParameter::NOISELESS, 1, 2).unwrap();
    assert!((s.lower - cap).abs() <= 1e-6 && (s.upper - cap).abs() <= 1e-6);
}

#[test]
fn full_shift_is_saturated_by_the_fair_coin() {
    let c = FiniteTypeConstraint::full_shift();
    let hn = optimize_hn(&c, 1, eps(0.1)).unwrap();
    assert!((hn.value - 2f64.ln()).abs() <= 1e-9);
    let s = capacity_sandwich(&c, eps(0.1), 1, 1).unwrap();
    let want = 2f64.ln() - binary_entropy(eps(0.1));
    assert!((s.lower - want).abs() <= 1e-9 && (s.upper - want).abs() <= 1e-9);
}

#[test]
fn upper_bound_decreases_with_length() {
    let c = golden();
    let values: Vec<f64> = (2..=4)
        .map(|n| optimize_hn(&c, n, eps(1e-2)).unwrap().value)
        .collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{values:?}");
}

#[test]
fn upper_bound_at_small_noise_tracks_the_expansion() {
    let c = golden();
    let e = 1e-3;
    let hn = optimize_hn(&c, 4, eps(e)).unwrap();
    let x = expansion_of_parry(&c);
    let asymptotic = x.0 + x.1 * e * (1.0 / e).ln() + x.2 * e;
    assert!(
        (hn.value - asymptotic).abs() <= 5e-5,
        "{} vs {asymptotic}",
        hn.value
    );
    assert!(hn.value >= hn.start_value);
}

fn expansion_of_parry(c: &FiniteTypeConstraint) -> (f64, f64, f64) {
    let e = nccap::expansion_of(&parry_chain(c).unwrap()).unwrap();
    (e.h0, e.f, e.g)
}

#[test]
fn lower_bound_is_at_least_the_max_entropy_chain() {
    let c = golden();
    for e in [1e-3, 1e-2] {
        let tol = if e == 1e-2 { 1e-4 } else { 1e-10 };
        let hm = optimize_hm(&c, 1, eps(e), tol).unwrap();
        let parry = parry_chain(&c).unwrap();
        let s = entropy_rate_sandwich(&parry, eps(e), hm.n).unwrap();
        assert!(hm.lower >= s.lower - tol, "eps={e}");
        assert!(0.5 * (hm.lower + hm.upper) >= 0.5 * (hm.start_lower + hm.start_upper));
    }
}

#[test]
fn sandwich_is_ordered_and_near_the_expansion() {
    let c = golden();
    let e = 1e-3;
    let s = capacity_sandwich(&c, eps(e), 1, 4).unwrap();
    assert!(s.lower <= s.upper);
    let x = capacity_expansion(&c).unwrap().eval(e);
    assert!((s.lower - x).abs() <= 2e-4 && (s.upper - x).abs() <= 2e-4);
}

#[test]
fn objective_is_concave_at_the_noiseless_maximizer() {
    let c = golden();
    let n = 2;
    let top = optimize_hn(&c, n, ChannelParameter::NOISELESS)
        .unwrap()
        .pvector;
    for seed in 0..50 {
        let q = pvector_of(&random_on(&c, n, 500 + seed), n).unwrap();
        let h = hessian_probe(&top, &q, 0.98).unwrap();
        assert!(h < 0.0, "seed {seed}: {h}");
    }
}

#[test]
fn taylor_constants() {
    let t = taylor_probe();
    assert!(t.k1 < 0.0);
    assert!((t.k1 + 3.065).abs() <= 0.005);
    assert!((t.k2 - 0.571).abs() <= 0.005);
    assert!(t.k3.is_finite());
}

#[test]
fn sharpness_rows() {
    let t = taylor_probe();
    let alpha = 0.5 * t.k2 / t.k1.abs();
    let grid: Vec<ChannelParameter> = [1e-2, 1e-3, 1e-4].iter().map(|e| eps(*e)).collect();
    let rows = sharpness_probe(alpha, &grid, 12).unwrap();
    for r in &rows {
        assert!(r.residual + r.uncertainty >= 0.0, "{r:?}");
    }
    assert!(sharpness_probe(0.0, &grid, 12).is_err());
    assert!(sharpness_probe(t.k2 / t.k1.abs(), &grid, 12).is_err());
    assert!(sharpness_probe(alpha, &[eps(0.1)], 12).is_err());
}
