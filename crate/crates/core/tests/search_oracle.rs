//! Cross-checks the pruned enumerator against decoding every string.

mod common;

use num_traits::Zero;
use orgcx::bitio::codec::{decode_conditional, decode_oc_circuit, decode_structured};
use orgcx::dist::{restrict, statistical_distance, FiniteDistribution};
use orgcx::search::{
    conditional_oc_search, oc_search, soc_search, RejectReason, SearchBudget, SearchResult, SearchStatus,
};
use orgcx::{BitString, Distribution, Rational};

use common::{dist, marginal, q};

const BUDGET: usize = 20;

/// Outcome of one string under the plain decoder and reference evaluator.
enum Verdict {
    Invalid,
    Candidate,
    Accepted,
}

fn close(x: &Distribution, y: &Distribution, delta: &Rational) -> bool {
    statistical_distance(x, y).unwrap() <= *delta
}

fn flat_verdict(b: &BitString, x: &Distribution, delta: &Rational) -> Verdict {
    match decode_oc_circuit(b) {
        Ok(c) if c.n == x.n() => {
            let y = marginal(&c.logic.circuit, &c.widths(), c.n, |r| c.run(r).unwrap());
            if close(x, &y, delta) {
                Verdict::Accepted
            } else {
                Verdict::Candidate
            }
        }
        _ => Verdict::Invalid,
    }
}

fn conditional_verdict(b: &BitString, x: &Distribution, z: &Distribution, delta: &Rational) -> Verdict {
    match decode_conditional(b) {
        Ok(c) if c.n == x.n() => {
            let need = c.condition_bits();
            if need > z.n() {
                return Verdict::Invalid;
            }
            let zs = restrict(z, need).unwrap();
            let all = zs.support().all(|zv| {
                let y = marginal(&c.logic.circuit, &c.widths(), c.n, |r| c.run(zv, r).unwrap());
                close(x, &y, delta)
            });
            if all {
                Verdict::Accepted
            } else {
                Verdict::Candidate
            }
        }
        _ => Verdict::Invalid,
    }
}

fn structured_verdict(b: &BitString, x: &Distribution, delta: &Rational) -> Verdict {
    match decode_structured(b) {
        Ok(c) if c.n == x.n() => {
            let flat = c.expand().unwrap();
            let y = marginal(&flat.logic.circuit, &flat.widths(), c.n, |r| flat.run(r).unwrap());
            if c.random_bits() <= 12 {
                assert_eq!(c.output_distribution_direct(BUDGET).unwrap(), y);
            }
            if close(x, &y, delta) {
                Verdict::Accepted
            } else {
                Verdict::Candidate
            }
        }
        _ => Verdict::Invalid,
    }
}

/// Brute force over lengths `1..=max`: the first accepted string and, per
/// length, the number of well-formed candidates examined.
fn brute(max: usize, verdict: impl Fn(&BitString) -> Verdict) -> (Option<BitString>, Vec<u64>) {
    let mut per_len = Vec::new();
    for len in 1..=max {
        let mut candidates = 0;
        for v in 0..1u64 << len {
            let b = BitString::from_u64(v, len);
            match verdict(&b) {
                Verdict::Invalid => {}
                Verdict::Candidate => candidates += 1,
                Verdict::Accepted => {
                    per_len.push(candidates + 1);
                    return (Some(b), per_len);
                }
            }
        }
        per_len.push(candidates);
    }
    (None, per_len)
}

fn check<W>(r: &SearchResult<W>, max: usize, expected: (Option<BitString>, Vec<u64>)) {
    let (first, per_len) = expected;
    for (stats, brute_count) in r.lengths.iter().zip(&per_len) {
        let examined = stats.candidates + stats.counts.get(RejectReason::OverBudget);
        assert_eq!(examined, *brute_count, "candidates at length {}", stats.bits);
        if stats.exhausted {
            assert_eq!(
                stats.counts.total(),
                1u64 << stats.bits,
                "coverage at length {}",
                stats.bits
            );
        }
    }
    match first {
        Some(b) => {
            assert_eq!(r.status, SearchStatus::ExactMinimum);
            assert_eq!(r.payload.as_ref(), Some(&b));
            assert_eq!(r.oc_bits, b.len());
            assert_eq!(r.lengths.len(), b.len());
        }
        None => {
            assert_eq!(r.lengths.len(), max.min(r.baseline_bits));
            assert!(r.lengths.iter().all(|l| l.exhausted));
            assert_eq!(r.oc_bits, r.baseline_bits);
        }
    }
}

#[test]
fn flat_point_mass_matches_brute_force() {
    let x = dist(1, &[("1", q(1, 1))]);
    let max = 16;
    let r = oc_search(&x, &Rational::zero(), &SearchBudget::with_max_bits(max)).unwrap();
    check(&r, max, brute(max, |b| flat_verdict(b, &x, &Rational::zero())));
    assert_eq!(r.oc_bits, 14);
}

#[test]
fn flat_uniform_matches_brute_force() {
    let x = FiniteDistribution::uniform(1);
    let max = 16;
    let r = oc_search(&x, &Rational::zero(), &SearchBudget::with_max_bits(max)).unwrap();
    check(&r, max, brute(max, |b| flat_verdict(b, &x, &Rational::zero())));
}

#[test]
fn flat_unreachable_target_counts_match_brute_force() {
    let x = dist(1, &[("0", q(3, 4)), ("1", q(1, 4))]);
    let max = 17;
    let r = oc_search(&x, &Rational::zero(), &SearchBudget::with_max_bits(max)).unwrap();
    check(&r, max, brute(max, |b| flat_verdict(b, &x, &Rational::zero())));
    assert_eq!(r.status, SearchStatus::UpperBoundOnly);
}

#[test]
fn flat_two_bit_targets_match_brute_force() {
    let max = 17;
    for x in [
        dist(2, &[("10", q(1, 1))]),
        dist(2, &[("00", q(1, 2)), ("11", q(1, 2))]),
    ] {
        let r = oc_search(&x, &Rational::zero(), &SearchBudget::with_max_bits(max)).unwrap();
        check(&r, max, brute(max, |b| flat_verdict(b, &x, &Rational::zero())));
    }
}

#[test]
fn flat_approximate_target_matches_brute_force() {
    let x = dist(1, &[("0", q(2, 3)), ("1", q(1, 3))]);
    let delta = q(1, 3);
    let max = 16;
    let r = oc_search(&x, &delta, &SearchBudget::with_max_bits(max)).unwrap();
    check(&r, max, brute(max, |b| flat_verdict(b, &x, &delta)));
    assert!(close(&x, &r.witness.output_distribution(BUDGET).unwrap(), &delta));
}

#[test]
fn conditional_matches_brute_force() {
    let x = dist(1, &[("1", q(1, 1))]);
    let max = 16;
    for z in [
        dist(1, &[("1", q(1, 1))]),
        FiniteDistribution::uniform(2),
        dist(0, &[("", q(1, 1))]),
    ] {
        let r = conditional_oc_search(&x, &z, &Rational::zero(), &SearchBudget::with_max_bits(max)).unwrap();
        check(
            &r,
            max,
            brute(max, |b| conditional_verdict(b, &x, &z, &Rational::zero())),
        );
    }
}

#[test]
fn conditional_copy_matches_brute_force() {
    // The condition bit alone determines X.
    let x = dist(1, &[("1", q(1, 1))]);
    let z = dist(1, &[("1", q(1, 1))]);
    let max = 15;
    let r = conditional_oc_search(&x, &z, &Rational::zero(), &SearchBudget::with_max_bits(max)).unwrap();
    check(
        &r,
        max,
        brute(max, |b| conditional_verdict(b, &x, &z, &Rational::zero())),
    );
    assert_eq!(r.status, SearchStatus::ExactMinimum);
}

#[test]
fn structured_matches_brute_force() {
    let max = 16;
    for x in [dist(1, &[("1", q(1, 1))]), FiniteDistribution::uniform(1)] {
        let r = soc_search(&x, &Rational::zero(), &SearchBudget::with_max_bits(max)).unwrap();
        check(&r, max, brute(max, |b| structured_verdict(b, &x, &Rational::zero())));
    }
}

#[test]
fn structured_with_macro_table_matches_brute_force() {
    // Non-empty macro tables first fit at 24 bits.
    let x = dist(1, &[("0", q(3, 4)), ("1", q(1, 4))]);
    let max = 25;
    let r = soc_search(&x, &Rational::zero(), &SearchBudget::with_max_bits(max)).unwrap();
    let with_macros = std::sync::atomic::AtomicU64::new(0);
    let expected = brute(max, |b| {
        if let Ok(c) = decode_structured(b) {
            if !c.logic.macros.is_empty() && c.n == 1 {
                with_macros.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            }
        }
        structured_verdict(b, &x, &Rational::zero())
    });
    check(&r, max, expected);
    assert!(with_macros.into_inner() > 0);
    assert!(r.lengths.iter().all(|l| l.exhausted));
}
