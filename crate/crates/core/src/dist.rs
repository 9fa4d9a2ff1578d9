//! Finite distributions over fixed-length bitstrings.
//!
//! [`FiniteDistribution`] is generic over the probability scalar. Closeness
//! decisions that feed organized complexity always run on the exact
//! [`Rational`](crate::Rational) instantiation; entropies are reported as
//! `f64` (agreement with closed forms is checked to 1e-12).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitio::BitString;
use crate::scalar::{dyadic_exponent, format_rational, parse_rational, Scalar};

/// Largest exponent tried by [`dyadic_approximation`].
pub const MAX_DYADIC_EXPONENT: u32 = 62;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistError {
    #[error("key {key} has length {found}, distribution is over {expected}-bit strings")]
    KeyLength { key: String, expected: usize, found: usize },
    #[error("probability of {key} outside [0, 1]")]
    OutOfRange { key: String },
    #[error("probabilities sum to {sum}, not 1")]
    BadSum { sum: String },
    #[error("distributions are over different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("cannot restrict a {from}-bit distribution to {to} bits")]
    RestrictTooLong { from: usize, to: usize },
    #[error("exact (delta = 0) approximation of a non-dyadic distribution")]
    NonDyadicExact,
    #[error("precision level must be in [0, 1)")]
    BadDelta,
    #[error("no dyadic approximation within delta up to exponent {0}")]
    ExponentLimit(u32),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Probability map over `{0,1}^n`; absent keys carry mass zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution<P> {
    n: usize,
    probs: BTreeMap<BitString, P>,
}

impl<P: Scalar> FiniteDistribution<P> {
    /// Validates key lengths, ranges and the total mass. Exact scalars must
    /// sum to exactly one; floating scalars to within 1e-9.
    pub fn new(n: usize, probs: impl IntoIterator<Item = (BitString, P)>) -> Result<Self, DistError> {
        let mut map: BTreeMap<BitString, P> = BTreeMap::new();
        for (k, p) in probs {
            if k.len() != n {
                return Err(DistError::KeyLength {
                    key: k.to_string(),
                    expected: n,
                    found: k.len(),
                });
            }
            if p < P::zero() || p > P::one() {
                return Err(DistError::OutOfRange { key: k.to_string() });
            }
            if p.is_zero() {
                continue;
            }
            let slot = map.entry(k).or_insert_with(P::zero);
            *slot = slot.clone() + p;
        }
        let sum = map.values().fold(P::zero(), |a, p| a + p.clone());
        let ok = if P::EXACT {
            sum == P::one()
        } else {
            (sum.clone() - P::one()).abs().as_f64() <= 1e-9
        };
        if !ok {
            return Err(DistError::BadSum {
                sum: format!("{sum:?}"),
            });
        }
        Ok(Self { n, probs: map })
    }

    /// Point mass on `x`.
    pub fn point(x: BitString) -> Self {
        let n = x.len();
        Self {
            n,
            probs: BTreeMap::from([(x, P::one())]),
        }
    }

    /// Uniform over all `2^n` strings.
    pub fn uniform(n: usize) -> Self {
        assert!(n < 32, "uniform distribution over 2^{n} strings is not enumerable");
        let p = P::one() / P::from_u64(1u64 << n).expect("power of two");
        Self {
            n,
            probs: (0..1u64 << n).map(|x| (BitString::from_u64(x, n), p.clone())).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prob(&self, x: &BitString) -> P {
        self.probs.get(x).cloned().unwrap_or_else(P::zero)
    }

    /// Support in lexicographic order.
    pub fn support(&self) -> impl Iterator<Item = &BitString> {
        self.probs.keys()
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitString, &P)> {
        self.probs.iter()
    }

    pub fn is_point(&self) -> bool {
        self.probs.len() == 1
    }

    pub fn max_prob(&self) -> P {
        self.probs
            .values()
            .fold(P::zero(), |m, p| if *p > m { p.clone() } else { m })
    }

    /// `weight * self + (1 - weight) * other`.
    pub fn mixture(&self, other: &Self, weight: &P) -> Result<Self, DistError> {
        if self.n != other.n {
            return Err(DistError::LengthMismatch(self.n, other.n));
        }
        let rest = P::one() - weight.clone();
        let a = self.probs.iter().map(|(k, p)| (k.clone(), p.clone() * weight.clone()));
        let b = other.probs.iter().map(|(k, p)| (k.clone(), p.clone() * rest.clone()));
        Self::new(self.n, a.chain(b))
    }

    /// Pushforward along a length-preserving map of keys.
    pub fn map_keys(&self, n: usize, f: impl Fn(&BitString) -> BitString) -> Result<Self, DistError> {
        Self::new(n, self.probs.iter().map(|(k, p)| (f(k), p.clone())))
    }

    /// Converts the scalar type (e.g. exact to `f64` for reporting).
    pub fn convert<Q: Scalar>(&self, f: impl Fn(&P) -> Q) -> FiniteDistribution<Q> {
        FiniteDistribution {
            n: self.n,
            probs: self.probs.iter().map(|(k, p)| (k.clone(), f(p))).collect(),
        }
    }
}

/// Half the L1 distance.
pub fn statistical_distance<P: Scalar>(x: &FiniteDistribution<P>, y: &FiniteDistribution<P>) -> Result<P, DistError> {
    if x.n != y.n {
        return Err(DistError::LengthMismatch(x.n, y.n));
    }
    let mut sum = P::zero();
    for (k, p) in &x.probs {
        sum = sum + (p.clone() - y.prob(k)).abs();
    }
    for (k, q) in &y.probs {
        if !x.probs.contains_key(k) {
            sum = sum + q.clone();
        }
    }
    Ok(sum / P::two())
}

/// Whether `SD(x, y) <= delta` (closed bound).
pub fn within<P: Scalar>(x: &FiniteDistribution<P>, y: &FiniteDistribution<P>, delta: &P) -> Result<bool, DistError> {
    Ok(statistical_distance(x, y)? <= *delta)
}

/// Shannon entropy in bits.
pub fn shannon_entropy<P: Scalar>(x: &FiniteDistribution<P>) -> f64 {
    entropy_of(x.probs.values().map(Scalar::as_f64))
}

/// Rényi order. `Infinity` is min-entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Finite(f64),
    Infinity,
}

impl Order {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Some(Order::Infinity),
            t => {
                let v = if let Some((a, b)) = t.split_once('/') {
                    a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?
                } else {
                    t.parse::<f64>().ok()?
                };
                if v.is_infinite() && v > 0.0 {
                    Some(Order::Infinity)
                } else {
                    (v >= 0.0).then_some(Order::Finite(v))
                }
            }
        }
    }
}

/// Rényi entropy of order `alpha` in bits. Order 1 is Shannon, order 0 is
/// `log2` of the support size.
pub fn renyi_entropy<P: Scalar>(x: &FiniteDistribution<P>, alpha: Order) -> f64 {
    renyi_of(x.probs.values().map(Scalar::as_f64).collect(), alpha)
}

pub(crate) fn entropy_of(ps: impl Iterator<Item = f64>) -> f64 {
    let h: f64 = ps.filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum();
    // Clamp -0.0 from single-point sums.
    h.max(0.0)
}

pub(crate) fn renyi_of(ps: Vec<f64>, alpha: Order) -> f64 {
    let ps: Vec<f64> = ps.into_iter().filter(|&p| p > 0.0).collect();
    match alpha {
        Order::Infinity => -ps.iter().cloned().fold(0.0, f64::max).log2(),
        Order::Finite(0.0) => (ps.len() as f64).log2(),
        Order::Finite(a) if (a - 1.0).abs() < 1e-15 => entropy_of(ps.into_iter()),
        Order::Finite(a) => {
            let s: f64 = ps.iter().map(|p| p.powf(a)).sum();
            (s.log2() / (1.0 - a)).max(0.0)
        }
    }
}

/// Marginal of the first `n` bits.
pub fn restrict<P: Scalar>(x: &FiniteDistribution<P>, n: usize) -> Result<FiniteDistribution<P>, DistError> {
    if n > x.n {
        return Err(DistError::RestrictTooLong { from: x.n, to: n });
    }
    let mut probs: BTreeMap<BitString, P> = BTreeMap::new();
    for (k, p) in &x.probs {
        let slot = probs.entry(k.prefix(n)).or_insert_with(P::zero);
        *slot = slot.clone() + p.clone();
    }
    Ok(FiniteDistribution { n, probs })
}

impl FiniteDistribution<BigRational> {
    /// Smallest exponent `e` with every mass a multiple of `2^-e`, if any.
    pub fn dyadic_exponent(&self) -> Option<u32> {
        self.probs
            .values()
            .try_fold(0u32, |e, p| dyadic_exponent(p).map(|d| e.max(d)))
    }

    pub fn from_json(text: &str) -> Result<Self, DistError> {
        let raw: DistJson = serde_json::from_str(text).map_err(|e| DistError::Parse(e.to_string()))?;
        raw.try_into()
    }

    pub fn to_json(&self) -> DistJson {
        DistJson {
            n: self.n,
            probs: self
                .probs
                .iter()
                .map(|(k, p)| (k.to_string(), format_rational(p)))
                .collect(),
        }
    }
}

/// On-disk form: `{"n": 2, "probs": {"00": "1/4", "11": "3/4"}}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DistJson {
    pub n: usize,
    pub probs: BTreeMap<String, String>,
}

impl TryFrom<DistJson> for FiniteDistribution<BigRational> {
    type Error = DistError;

    fn try_from(raw: DistJson) -> Result<Self, DistError> {
        let mut probs = Vec::with_capacity(raw.probs.len());
        for (k, v) in raw.probs {
            let key: BitString = k.parse().map_err(|e| DistError::Parse(format!("{k:?}: {e}")))?;
            let p = parse_rational(&v).ok_or_else(|| DistError::Parse(format!("bad probability {v:?}")))?;
            probs.push((key, p));
        }
        Self::new(raw.n, probs)
    }
}

/// Splits `2^exp` units among `masses` (which sum to one): floors first,
/// then the leftover units by largest remainder, ties to the earlier index.
pub fn apportion(masses: &[BigRational], exp: u32) -> Vec<BigInt> {
    let scale = BigRational::from_integer(BigInt::one() << exp);
    let total = BigInt::one() << exp;
    let mut units = Vec::with_capacity(masses.len());
    let mut rema = Vec::with_capacity(masses.len());
    for p in masses {
        let scaled = p * &scale;
        let fl = scaled.floor();
        rema.push(scaled - &fl);
        units.push(fl.to_integer());
    }
    let assigned: BigInt = units.iter().sum();
    let mut left = (total - assigned).to_usize().unwrap_or(0);
    let mut order: Vec<usize> = (0..masses.len()).collect();
    order.sort_by(|&a, &b| rema[b].cmp(&rema[a]).then(a.cmp(&b)));
    for i in order {
        if left == 0 {
            break;
        }
        if rema[i].is_positive() {
            units[i] += 1;
            left -= 1;
        }
    }
    units
}

/// Dyadic distribution within `delta` of `x`, with the exponent of its grid.
///
/// A dyadic `x` is returned unchanged with its natural exponent. Otherwise the
/// exponent grows from 1 until the apportioned grid distribution is within
/// `delta`.
pub fn dyadic_approximation(
    x: &FiniteDistribution<BigRational>,
    delta: &BigRational,
) -> Result<(FiniteDistribution<BigRational>, u32), DistError> {
    if delta.is_negative() || *delta >= BigRational::one() {
        return Err(DistError::BadDelta);
    }
    if let Some(e) = x.dyadic_exponent() {
        return Ok((x.clone(), e));
    }
    if delta.is_zero() {
        return Err(DistError::NonDyadicExact);
    }
    let keys: Vec<BitString> = x.probs.keys().cloned().collect();
    let masses: Vec<BigRational> = x.probs.values().cloned().collect();
    for exp in 1..=MAX_DYADIC_EXPONENT {
        let units = apportion(&masses, exp);
        let denom = BigInt::one() << exp;
        let approx = FiniteDistribution::new(
            x.n,
            keys.iter()
                .cloned()
                .zip(units.into_iter().map(|u| BigRational::new(u, denom.clone()))),
        )?;
        if statistical_distance(x, &approx)? <= *delta {
            return Ok((approx, exp));
        }
    }
    Err(DistError::ExponentLimit(MAX_DYADIC_EXPONENT))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn dist(n: usize, items: &[(&str, Rational)]) -> FiniteDistribution<Rational> {
        FiniteDistribution::new(n, items.iter().map(|(k, p)| (bs(k), p.clone()))).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(matches!(
            FiniteDistribution::new(2, [(bs("0"), q(1, 1))]),
            Err(DistError::KeyLength { .. })
        ));
        assert!(matches!(
            FiniteDistribution::new(1, [(bs("0"), q(1, 2))]),
            Err(DistError::BadSum { .. })
        ));
        assert!(matches!(
            FiniteDistribution::new(1, [(bs("0"), q(3, 2)), (bs("1"), q(-1, 2))]),
            Err(DistError::OutOfRange { .. })
        ));
        let d = dist(1, &[("0", q(1, 2)), ("1", q(1, 2)), ("1", q(0, 1))]);
        assert_eq!(d.support_len(), 2);
    }

    #[test]
    fn statistical_distance_examples() {
        let u2 = FiniteDistribution::<Rational>::uniform(2);
        assert_eq!(statistical_distance(&u2, &u2).unwrap(), q(0, 1));
        let zero = FiniteDistribution::point(bs("0"));
        let one = FiniteDistribution::point(bs("1"));
        assert_eq!(statistical_distance(&zero, &one).unwrap(), q(1, 1));
        let p00 = FiniteDistribution::point(bs("00"));
        assert_eq!(statistical_distance(&u2, &p00).unwrap(), q(3, 4));
        assert_eq!(statistical_distance(&u2, &zero), Err(DistError::LengthMismatch(2, 1)));
    }

    #[test]
    fn entropy_examples() {
        let u1 = FiniteDistribution::<Rational>::uniform(1);
        for a in [
            Order::Finite(0.0),
            Order::Finite(0.5),
            Order::Finite(1.0),
            Order::Finite(2.0),
            Order::Infinity,
        ] {
            assert!((renyi_entropy(&u1, a) - 1.0).abs() < 1e-12);
        }
        let pt = FiniteDistribution::<Rational>::point(bs("101"));
        assert_eq!(shannon_entropy(&pt), 0.0);
        assert_eq!(renyi_entropy(&pt, Order::Infinity), 0.0);
        let d = dist(1, &[("0", q(2, 3)), ("1", q(1, 3))]);
        let closed = 3f64.log2() - 2.0 / 3.0;
        assert!((shannon_entropy(&d) - closed).abs() < 1e-12);
        assert!((closed - 0.9182958340544896).abs() < 1e-12);
    }

    #[test]
    fn renyi_over_floats_matches_exact() {
        let d = dist(2, &[("00", q(1, 2)), ("01", q(1, 4)), ("11", q(1, 4))]);
        let f = d.convert(|p| p.as_f64());
        for a in [0.0, 0.5, 1.0, 2.0, 3.0] {
            assert!((renyi_entropy(&d, Order::Finite(a)) - renyi_entropy(&f, Order::Finite(a))).abs() < 1e-12);
        }
        assert!((shannon_entropy(&f) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn restrict_examples() {
        let d = dist(2, &[("00", q(1, 2)), ("11", q(1, 2))]);
        assert_eq!(restrict(&d, 2).unwrap(), d);
        assert_eq!(restrict(&d, 1).unwrap(), dist(1, &[("0", q(1, 2)), ("1", q(1, 2))]));
        let u2 = FiniteDistribution::<Rational>::uniform(2);
        assert_eq!(restrict(&u2, 1).unwrap(), FiniteDistribution::uniform(1));
        assert_eq!(restrict(&u2, 3), Err(DistError::RestrictTooLong { from: 2, to: 3 }));
        assert_eq!(restrict(&u2, 0).unwrap(), FiniteDistribution::point(BitString::new()));
    }

    #[test]
    fn dyadic_approximation_examples() {
        let d = dist(1, &[("0", q(1, 4)), ("1", q(3, 4))]);
        assert_eq!(dyadic_approximation(&d, &q(1, 8)).unwrap(), (d.clone(), 2));
        assert_eq!(dyadic_approximation(&d, &q(0, 1)).unwrap(), (d, 2));

        let third = dist(1, &[("0", q(1, 3)), ("1", q(2, 3))]);
        assert_eq!(dyadic_approximation(&third, &q(0, 1)), Err(DistError::NonDyadicExact));

        // By hand: exp 1 gives {1/2, 1/2} at SD 1/6 > 1/8; exp 2 floors to
        // {1, 2} units, the leftover unit goes to "1" (remainder 2/3 beats
        // 1/3): {1/4, 3/4} at SD 1/12 <= 1/8.
        let (approx, exp) = dyadic_approximation(&third, &q(1, 8)).unwrap();
        assert_eq!(exp, 2);
        assert_eq!(approx, dist(1, &[("0", q(1, 4)), ("1", q(3, 4))]));
        assert!(statistical_distance(&third, &approx).unwrap() <= q(1, 8));
    }

    #[test]
    fn apportion_tie_break_is_by_key_order() {
        let thirds = vec![q(1, 3), q(1, 3), q(1, 3)];
        let u = apportion(&thirds, 2);
        assert_eq!(u, vec![BigInt::from(2), BigInt::from(1), BigInt::from(1)]);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"n": 2, "probs": {"00": "1/4", "11": "3/4"}}"#;
        let d = FiniteDistribution::from_json(text).unwrap();
        assert_eq!(d.prob(&bs("11")), q(3, 4));
        assert_eq!(d.prob(&bs("01")), q(0, 1));
        let again: FiniteDistribution<Rational> = d.to_json().try_into().unwrap();
        assert_eq!(again, d);
        assert!(FiniteDistribution::from_json(r#"{"n": 1, "probs": {"0": "1/3"}}"#).is_err());
    }

    fn arb_dist(n: usize) -> impl Strategy<Value = FiniteDistribution<Rational>> {
        proptest::collection::vec(0u32..8, 1usize << n).prop_filter_map("nonzero", move |w| {
            let total: u32 = w.iter().sum();
            (total > 0).then(|| {
                FiniteDistribution::new(
                    n,
                    w.iter()
                        .enumerate()
                        .map(|(i, &k)| (BitString::from_u64(i as u64, n), q(k as i64, total as i64))),
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn approximation_conserves_mass_and_bound(d in arb_dist(2), num in 1i64..16) {
            let delta = q(num, 16);
            let (approx, exp) = dyadic_approximation(&d, &delta).unwrap();
            let total = approx.iter().fold(q(0, 1), |a, (_, p)| a + p);
            prop_assert_eq!(total, q(1, 1));
            prop_assert!(statistical_distance(&d, &approx).unwrap() <= delta);
            prop_assert!(approx.dyadic_exponent().unwrap() <= exp);
        }
    }
}
