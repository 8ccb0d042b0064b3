mod common;

use common::{all_words, bits, constraint, has_factor, word};
use nccap::constraint::minimal_forbidden_set;
use nccap::{BitWord, FiniteTypeConstraint};
use proptest::prelude::*;

fn brute_allowed(forbidden: &[Vec<u8>], n: usize) -> Vec<Vec<u8>> {
    all_words(n)
        .into_iter()
        .filter(|w| !forbidden.iter().any(|f| has_factor(w, f)))
        .collect()
}

fn forbidden_strategy() -> impl Strategy<Value = Vec<BitWord>> {
    prop::collection::vec((1usize..=4, any::<u64>()), 0..5).prop_map(|v| {
        v.into_iter()
            .map(|(len, b)| BitWord::new(b & ((1 << len) - 1), len).unwrap())
            .collect()
    })
}

#[test]
fn enumeration_matches_brute_force() {
    let sets: [&[&str]; 6] = [
        &[],
        &["11"],
        &["11", "0000"],
        &["11", "101"],
        &["00", "11"],
        &["010", "111", "0110"],
    ];
    for set in sets {
        let c = constraint(set);
        let f: Vec<Vec<u8>> = set.iter().map(|s| bits(&word(s))).collect();
        for n in 0..=14 {
            let got: Vec<Vec<u8>> = c.enumerate_allowed(n).unwrap().iter().map(bits).collect();
            let want = brute_allowed(&f, n);
            assert_eq!(got, want, "{set:?} n={n}");
            assert_eq!(
                c.count_allowed(n).unwrap(),
                want.len() as u128,
                "{set:?} n={n}"
            );
        }
    }
}

#[test]
fn path_counting_identity() {
    // |S_n| = sum over entries of A^(n - order) started from allowed order-words
    for set in [
        &["11"][..],
        &["11", "0000"],
        &["11", "101"],
        &["010", "111"],
    ] {
        let c = constraint(set);
        let m = c.order();
        let g = c.word_graph(m.max(1)).unwrap();
        let a = g.adjacency();
        for n in m.max(1)..=14 {
            let mut counts = vec![1u128; g.len()];
            for _ in m.max(1)..n {
                let mut next = vec![0u128; g.len()];
                for (i, row) in a.iter().enumerate() {
                    for (j, &e) in row.iter().enumerate() {
                        next[j] += counts[i] * e as u128;
                    }
                }
                counts = next;
            }
            let total: u128 = counts.iter().sum();
            assert_eq!(total, c.count_allowed(n).unwrap(), "{set:?} n={n}");
        }
    }
}

#[test]
fn examples() {
    let c = constraint(&["11", "110"]);
    assert_eq!(c.minimal_forbidden(), &[word("11")]);
    assert_eq!(c.order(), 1);
    assert_eq!(FiniteTypeConstraint::full_shift().order(), 0);
    assert_eq!(constraint(&["11"]).enumerate_allowed(3).unwrap().len(), 5);
    assert!(constraint(&["11"]).is_irreducible());
    assert!(!constraint(&["01"]).is_irreducible());
    assert!(!constraint(&["0", "1"]).is_irreducible());
    assert!(FiniteTypeConstraint::new([BitWord::EMPTY]).is_err());
}

#[test]
fn parses_forbidden_lists() {
    let c = FiniteTypeConstraint::parse_forbidden_list("# run-length (1,3)\n11\n\n0000\n").unwrap();
    assert_eq!(c.minimal_forbidden(), &[word("11"), word("0000")]);
    assert!(FiniteTypeConstraint::parse_forbidden_list("1a\n").is_err());
}

proptest! {
    #[test]
    fn minimal_set_is_idempotent_and_preserves_language(f in forbidden_strategy()) {
        let once = minimal_forbidden_set(f.clone());
        let twice = minimal_forbidden_set(once.clone());
        prop_assert_eq!(&once, &twice);
        for a in &once {
            for b in &once {
                prop_assert!(a == b || !b.contains_factor(a));
            }
        }
        let full = FiniteTypeConstraint::new(f.clone()).unwrap();
        let reduced = FiniteTypeConstraint::new(once.clone()).unwrap();
        for n in 0..=12 {
            prop_assert_eq!(full.enumerate_allowed(n).unwrap(), reduced.enumerate_allowed(n).unwrap());
        }
        let order = once.iter().map(|w| w.len()).max().map_or(0, |l| l - 1);
        prop_assert_eq!(full.order(), order);
    }

    #[test]
    fn allowed_words_are_factor_closed(f in forbidden_strategy(), n in 1usize..10) {
        let c = FiniteTypeConstraint::new(f).unwrap();
        let shorter = c.enumerate_allowed(n).unwrap();
        for w in c.enumerate_allowed(n + 1).unwrap() {
            prop_assert!(shorter.binary_search(&w.prefix(n)).is_ok());
            prop_assert!(shorter.binary_search(&w.suffix(n)).is_ok());
        }
    }

    #[test]
    fn membership_is_factor_avoidance(f in forbidden_strategy(), v in any::<u64>(), len in 0usize..16) {
        let c = FiniteTypeConstraint::new(f).unwrap();
        let w = BitWord::new(v & ((1u64 << len) - 1), len).unwrap();
        let brute = !c.minimal_forbidden().iter().any(|g| has_factor(&bits(&w), &bits(g)));
        prop_assert_eq!(c.allows(&w), brute);
    }

    #[test]
    fn flips_and_concatenation_keep_lengths(a in any::<u64>(), la in 1usize..30, b in any::<u64>(), lb in 0usize..30, j in 1usize..30) {
        let x = BitWord::new(a & ((1 << la) - 1), la).unwrap();
        let y = BitWord::new(b & ((1 << lb) - 1), lb).unwrap();
        prop_assert_eq!(x.concat(&y).unwrap().len(), la + lb);
        let j = 1 + (j - 1) % la;
        let f = x.flip_from_right(j);
        prop_assert_eq!(f.len(), la);
        prop_assert_eq!(f.flip_from_right(j), x);
        prop_assert!(bits(&x).iter().all(|s| *s <= 1));
        prop_assert_eq!(x.to_string().parse::<BitWord>().unwrap(), x);
    }
}
