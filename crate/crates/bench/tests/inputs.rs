use nccap::noiseless_capacity;
use nccap_bench::rll_chain;

#[test]
fn bench_chains_are_max_entropy() {
    let x = rll_chain(1, None);
    let l = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((x.entropy_rate() - l.ln()).abs() < 1e-12);
    let y = rll_chain(2, Some(4));
    let c = noiseless_capacity(&x.support_constraint()).unwrap();
    assert!((c - l.ln()).abs() < 1e-12);
    assert!(y.entropy_rate() > 0.0);
}
