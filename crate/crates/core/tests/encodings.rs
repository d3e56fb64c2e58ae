use pdte_core::encodings::*;
use proptest::prelude::*;
use std::collections::HashSet;

/// Largest aligned block starting at `lo` that stays inside `[lo, hi]`, repeated: the unique
/// minimal prefix decomposition of the interval.
fn greedy_blocks(mut lo: u64, hi: u64) -> Vec<(u32, u64)> {
    let mut out = Vec::new();
    while lo <= hi {
        let mut level = 0;
        while lo % (1 << (level + 1)) == 0 && lo + (1 << (level + 1)) - 1 <= hi {
            level += 1;
        }
        out.push((level, lo >> level));
        lo += 1 << level;
    }
    out.sort();
    out
}

fn colex_combinations(len: usize, weight: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (0u64..1 << len)
        .filter(|m| m.count_ones() as usize == weight)
        .map(|m| (0..len).rev().filter(|&i| m >> i & 1 == 1).collect())
        .collect();
    // colex: compare by the largest position first
    all.sort();
    all
}

#[test]
fn ourc_matches_greedy_cover_exhaustively() {
    for n in 1..=10u32 {
        for x in 0..1u64 << n {
            let enc = ourc(x, n).unwrap();
            let mut got: Vec<(u32, u64)> =
                enc.levels.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i as u32, v))).collect();
            got.sort();
            assert_eq!(got, greedy_blocks(x, (1 << n) - 1), "x = {x}, n = {n}");
            let used = enc.levels.iter().filter(|v| v.is_some()).count() as u32;
            if x > 0 {
                assert_eq!(used, ((1u64 << n) - x).count_ones());
            }
        }
    }
}

#[test]
fn ourc_inclusion_is_leq_exhaustively() {
    for n in 1..=10u32 {
        let covers: Vec<_> = (0..1u64 << n).map(|a| ourc(a, n).unwrap()).collect();
        let points: Vec<_> = (0..1u64 << n).map(|b| point_encoding(b, n).unwrap()).collect();
        for (a, c) in covers.iter().enumerate() {
            for (b, p) in points.iter().enumerate() {
                assert_eq!(ourc_pe_inclusion(c, p), u64::from(a <= b), "a = {a}, b = {b}, n = {n}");
            }
        }
    }
}

#[test]
fn best_cover_is_minimal_and_two_per_level() {
    for n in 1..=10u32 {
        let top = (1u64 << n) - 1;
        for a in 0..=top {
            for b in a..=top {
                let rc = best_range_cover(a, b, n).unwrap();
                assert!(rc.levels.iter().all(|l| l.len() <= 2));
                let mut got: Vec<_> = rc.nodes().collect();
                got.sort();
                let want = if a == 0 && b == top { vec![(n - 1, 0), (n - 1, 1)] } else { greedy_blocks(a, b) };
                assert_eq!(got, want, "[{a}, {b}] n = {n}");
            }
        }
    }
}

#[test]
fn two_sided_inclusion_exhaustive_small() {
    for n in 1..=8u32 {
        let top = (1u64 << n) - 1;
        let points: Vec<_> = (0..=top).map(|c| point_encoding(c, n).unwrap()).collect();
        for a in 0..=top {
            for b in a..=top {
                let u = uniform_range_cover(a, b, n).unwrap();
                assert_eq!(u.entries.len(), 2 * n as usize);
                for (c, pe) in points.iter().enumerate() {
                    let c = c as u64;
                    assert_eq!(rc_pe_inclusion(&u, pe), u64::from(a <= c && c <= b));
                }
            }
        }
    }
}

#[test]
fn cw_encoding_is_injective_with_constant_weight() {
    for n in 1..=16u32 {
        for h in 1..=n as usize {
            let enc = CwEncoder::for_precision(n, h).unwrap();
            let mut seen = HashSet::new();
            for x in 0..1u64 << n {
                let c = enc.encode(Some(x)).unwrap();
                assert_eq!(c.ones.len(), h);
                assert!(c.ones.windows(2).all(|w| w[0] > w[1]));
                assert!(c.ones[0] < enc.len());
                assert!(seen.insert(c.ones), "n = {n}, h = {h}, x = {x}");
            }
        }
    }
}

#[test]
fn cw_encoding_follows_colex_order() {
    for len in 1..=12 {
        for h in 1..=len {
            let enc = CwEncoder::new(len, h).unwrap();
            for (x, want) in colex_combinations(len, h).into_iter().enumerate() {
                let mut want = want;
                want.sort_by(|a, b| b.cmp(a));
                assert_eq!(enc.encode(Some(x as u64)).unwrap().ones, want);
            }
        }
    }
}

#[test]
fn null_matches_nothing() {
    let enc = CwEncoder::new(6, 3).unwrap();
    let null = enc.encode(None).unwrap();
    assert!(null.is_null());
    assert_eq!(null.overlap(&null), 0);
    for x in 0..20 {
        assert!(null.overlap(&enc.encode(Some(x)).unwrap()) < 3);
    }
}

#[test]
fn min_length_is_tight() {
    for n in 1..=40u32 {
        for h in 1..=8usize {
            if n > 20 && h == 1 {
                continue;
            }
            let l = cw_min_length(n, h);
            assert!(binom(l as u64, h as u64) >= num_bigint::BigUint::from(1u8) << n);
            assert!(l == h || binom(l as u64 - 1, h as u64) < num_bigint::BigUint::from(1u8) << n);
        }
    }
}

proptest! {
    #[test]
    fn ourc_cover_is_exact_at_high_precision(n in 11u32..=40, seed in any::<u64>()) {
        let x = seed % (1u64 << n);
        let cover = ourc(x, n).unwrap();
        let mut spans = cover.covered();
        spans.sort();
        prop_assert_eq!(spans.first().unwrap().0, x);
        prop_assert_eq!(spans.last().unwrap().1, (1u64 << n) - 1);
        for w in spans.windows(2) {
            prop_assert_eq!(w[0].1 + 1, w[1].0);
        }
    }

    #[test]
    fn inclusion_is_leq_at_high_precision(n in 11u32..=40, a in any::<u64>(), b in any::<u64>()) {
        let (a, b) = (a % (1u64 << n), b % (1u64 << n));
        prop_assert_eq!(ourc_pe_inclusion(&ourc(a, n).unwrap(), &point_encoding(b, n).unwrap()), u64::from(a <= b));
    }

    #[test]
    fn point_interval_contains_itself(n in 1u32..=40, a in any::<u64>()) {
        let a = a % (1u64 << n);
        let rc = uniform_range_cover(a, a, n).unwrap();
        prop_assert_eq!(rc_pe_inclusion(&rc, &point_encoding(a, n).unwrap()), 1);
    }

    #[test]
    fn two_sided_inclusion_at_high_precision(n in 9u32..=40, a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let m = 1u64 << n;
        let (mut a, mut b, c) = (a % m, b % m, c % m);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let rc = uniform_range_cover(a, b, n).unwrap();
        prop_assert_eq!(rc_pe_inclusion(&rc, &point_encoding(c, n).unwrap()), u64::from(a <= c && c <= b));
    }

    #[test]
    fn cw_encode_is_injective_at_high_precision(n in 17u32..=40, h in 2usize..=10, x in any::<u64>(), y in any::<u64>()) {
        let enc = CwEncoder::for_precision(n, h).unwrap();
        let (x, y) = (x % (1u64 << n), y % (1u64 << n));
        let (cx, cy) = (enc.encode(Some(x)).unwrap(), enc.encode(Some(y)).unwrap());
        prop_assert_eq!(cx.ones.len(), h);
        prop_assert_eq!(cx == cy, x == y);
        prop_assert_eq!(cx.overlap(&cy) == h, x == y);
    }
}
