//! Bit-sliced candidate evaluation with an exact early-exit distance check.
//!
//! Random bits that no output depends on are marginalized away, so only the
//! `K * e` bits actually read are enumerated, 64 per batch. Acceptance is
//! decided in integers: with `D` a common denominator of the target and
//! `delta`, a candidate with counts `c(y)` over `2^R` outcomes is within
//! `delta` iff `sum_y max(0, c(y) D - P(y) 2^R) <= Delta 2^R`, where `P = D p`
//! and `Delta = D delta`. The left side only grows while counting, so the
//! check can fire before enumeration ends.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::bitio::BitString;
use crate::circuit::{Circuit, CompiledCircuit, GateLabel};
use crate::dist::statistical_distance;
use crate::ocmachine::Widths;
use crate::{Distribution, Rational};

/// Word whose lane `l` carries bit `g` of `l`, for `g < 6`.
const LANE_BITS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Indices (relative to the `r` block) of random inputs that some output
/// depends on.
pub(crate) fn live_random_inputs(c: &Circuit, w: &Widths) -> Vec<usize> {
    let mut seen = vec![false; c.labels.len()];
    let mut stack: Vec<usize> = c.outputs.clone();
    let mut live = vec![false; w.n_r];
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        if let GateLabel::Input(i) = c.labels[v] {
            if (w.r_offset()..w.r_offset() + w.n_r).contains(&i) {
                live[i - w.r_offset()] = true;
            }
        }
        stack.extend(c.in_edges[v].iter().copied());
    }
    (0..w.n_r).filter(|&i| live[i]).collect()
}

/// Everything about one run except the random bits.
pub(crate) struct Run<'a> {
    pub cc: &'a CompiledCircuit,
    pub widths: Widths,
    pub n: usize,
    pub s1: &'a BitString,
    pub u: &'a BitString,
    pub m: &'a BitString,
    pub z: &'a BitString,
    /// Live random inputs, relative to the `r` block.
    pub live: &'a [usize],
}

impl Run<'_> {
    pub fn random_bits(&self) -> usize {
        self.widths.steps(self.n) * self.live.len()
    }

    /// Calls `visit(key)` for every lane of every batch; keys
    /// are outputs packed MSB-first. Stops when `visit` returns false.
    /// Requires `n <= 64`.
    fn for_each_output(&self, mut visit: impl FnMut(u64) -> bool) -> bool {
        let w = &self.widths;
        let k = w.steps(self.n);
        let e = self.live.len();
        let total_bits = k * e;
        let lanes = if total_bits >= 6 { 64 } else { 1usize << total_bits };
        let batches = 1u64 << total_bits.saturating_sub(6);
        let const_word = |b: bool| if b { !0u64 } else { 0 };

        let mut inputs = vec![0u64; w.num_inputs()];
        let mut scratch = Vec::new();
        let mut out = vec![0u64; w.num_outputs()];
        let mut y = vec![0u64; self.n];
        for batch in 0..batches {
            for (i, b) in self.u.iter().enumerate() {
                inputs[i] = const_word(b);
            }
            for (i, b) in self.s1.iter().enumerate() {
                inputs[w.s_offset() + i] = const_word(b);
            }
            for step in 0..k {
                for j in 0..w.n_z {
                    inputs[w.z_offset() + j] = const_word(self.z.bit(step * w.n_z + j));
                }
                for j in 0..w.n_m {
                    inputs[w.m_offset() + j] = const_word(self.m.bit(step * w.n_m + j));
                }
                for (t, &ri) in self.live.iter().enumerate() {
                    let g = step * e + t;
                    inputs[w.r_offset() + ri] = if g < 6 {
                        LANE_BITS[g]
                    } else {
                        const_word((batch >> (g - 6)) & 1 == 1)
                    };
                }
                self.cc.eval_lanes(&inputs, &mut scratch, &mut out);
                inputs[w.s_offset()..w.s_offset() + w.n_s].copy_from_slice(&out[..w.n_s]);
                for j in 0..w.l_y {
                    let p = step * w.l_y + j;
                    if p < self.n {
                        y[p] = out[w.n_s + j];
                    }
                }
            }
            for lane in 0..lanes {
                let mut key = 0u64;
                for &word in &y {
                    key = (key << 1) | ((word >> lane) & 1);
                }
                if !visit(key) {
                    return false;
                }
            }
        }
        true
    }

    /// Exact outcome counts over all `2^random_bits()` live random strings.
    pub fn counts(&self) -> HashMap<u64, u64> {
        let mut c = HashMap::new();
        self.for_each_output(|key| {
            *c.entry(key).or_insert(0) += 1;
            true
        });
        c
    }

    pub fn distribution(&self) -> Distribution {
        let r = self.random_bits();
        let denom = BigInt::one() << r;
        let n = self.n;
        let probs = self
            .counts()
            .into_iter()
            .map(|(k, c)| (BitString::from_u64(k, n), Rational::new(c.into(), denom.clone())));
        Distribution::new(n, probs).expect("counts form a distribution")
    }
}

/// Integer view of `(X, delta)`; falls back to exact rationals when the
/// scaled quantities do not fit.
pub(crate) struct Target {
    pub x: Distribution,
    pub delta: Rational,
    scaled: Option<Scaled>,
}

struct Scaled {
    d: u128,
    delta: u128,
    mass: HashMap<u64, u128>,
}

impl Target {
    pub fn new(x: &Distribution, delta: &Rational) -> Self {
        Self {
            x: x.clone(),
            delta: delta.clone(),
            scaled: Self::scale(x, delta),
        }
    }

    fn scale(x: &Distribution, delta: &Rational) -> Option<Scaled> {
        if x.n() > 64 {
            return None;
        }
        let mut d = delta.denom().clone();
        for (_, p) in x.iter() {
            d = d.lcm(p.denom());
        }
        // Leave headroom for multiplication by counts and 2^R (R <= 62).
        if d.bits() > 60 {
            return None;
        }
        let to_int = |q: &Rational| (q * Rational::from_integer(d.clone())).to_integer().to_u128();
        let mass = x
            .iter()
            .map(|(k, p)| Some((k.to_u64()?, to_int(p)?)))
            .collect::<Option<HashMap<_, _>>>()?;
        Some(Scaled {
            d: d.to_u128()?,
            delta: to_int(delta)?,
            mass,
        })
    }

    /// True iff the run's distribution is within `delta` of the target.
    pub fn accepts(&self, run: &Run<'_>) -> bool {
        let r = run.random_bits();
        match &self.scaled {
            Some(s) if r <= 62 => {
                let two_r = 1u128 << r;
                let Some(limit) = s.delta.checked_mul(two_r) else {
                    return self.accepts_exact(run);
                };
                let mut counts: HashMap<u64, u128> = HashMap::new();
                let mut excess: u128 = 0;
                let mut overflow = false;
                let finished = run.for_each_output(|key| {
                    let c = counts.entry(key).or_insert(0);
                    *c += 1;
                    let have = *c * s.d;
                    let Some(want) = s.mass.get(&key).copied().unwrap_or(0).checked_mul(two_r) else {
                        overflow = true;
                        return false;
                    };
                    // Increment of max(0, c D - P 2^R) when c grows by one.
                    if have > want {
                        excess += (have - want).min(s.d);
                    }
                    excess <= limit
                });
                if overflow {
                    return self.accepts_exact(run);
                }
                finished && excess <= limit
            }
            _ => self.accepts_exact(run),
        }
    }

    fn accepts_exact(&self, run: &Run<'_>) -> bool {
        if run.n > 64 {
            return false;
        }
        let y = run.distribution();
        statistical_distance(&self.x, &y)
            .map(|sd| sd <= self.delta)
            .unwrap_or(false)
    }
}
