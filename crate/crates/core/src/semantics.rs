//! Semantic information measured on proper circuits.
//!
//! The semantic amount of a target is the number of semantics bits its
//! proper circuit consumes for `n` output bits, `ceil(n N_m / L_y)`. All
//! values here are for a fixed `n` and are only as exact as the searches
//! that produced them; reports carry the search status.

use std::collections::BTreeMap;

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitio::BitString;
use crate::circuit::{Circuit, GateLabel};
use crate::dist::{shannon_entropy, statistical_distance, DistError, FiniteDistribution};
use crate::ocmachine::{ConditionalOcCircuit, ConditionalOcLogic, MachineError, OcCircuit, OcLogic, Widths};
use crate::scalar::{format_rational, parse_rational};
use crate::search::{conditional_oc_search, oc_search, SearchBudget, SearchError, SearchStatus};
use crate::{Distribution, Rational, CODEC_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("effectiveness is undefined when the semantic amount is 0")]
    EffUndefined,
    #[error("invalid channel: {0}")]
    Channel(String),
}

/// Semantic amount of one search witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticReport {
    pub sa_bits: u64,
    pub n: usize,
    pub n_u: usize,
    pub n_z: usize,
    pub n_s: usize,
    pub n_m: usize,
    pub n_r: usize,
    pub l_y: usize,
    pub oc_bits: usize,
    pub status: SearchStatus,
    /// True unless the witness is a proven minimum.
    pub provisional: bool,
    pub codec: String,
}

/// `ceil(n N_m / L_y)`.
pub fn semantic_amount(n: usize, w: &Widths) -> u64 {
    (n * w.n_m).div_ceil(w.l_y) as u64
}

fn report(n: usize, w: Widths, oc_bits: usize, status: SearchStatus) -> SemanticReport {
    SemanticReport {
        sa_bits: semantic_amount(n, &w),
        n,
        n_u: w.n_u,
        n_z: w.n_z,
        n_s: w.n_s,
        n_m: w.n_m,
        n_r: w.n_r,
        l_y: w.l_y,
        oc_bits,
        status,
        provisional: status != SearchStatus::ExactMinimum,
        codec: CODEC_VERSION.to_string(),
    }
}

/// Semantic amount of the proper circuit of `x`.
pub fn sa(x: &Distribution, delta: &Rational, budget: &SearchBudget) -> Result<SemanticReport, SemanticsError> {
    let r = oc_search(x, delta, budget)?;
    Ok(report(x.n(), r.witness.widths(), r.oc_bits, r.status))
}

/// Semantic amount of the proper conditional circuit of `x` given `z`.
pub fn conditional_sa(
    x: &Distribution,
    z: &Distribution,
    delta: &Rational,
    budget: &SearchBudget,
) -> Result<SemanticReport, SemanticsError> {
    let r = conditional_oc_search(x, z, delta, budget)?;
    Ok(report(x.n(), r.witness.widths(), r.oc_bits, r.status))
}

/// Semantic mutual information: `SA(x) - SA(x : z)`, signed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiReport {
    pub si_bits: i64,
    pub sa: SemanticReport,
    pub conditional_sa: SemanticReport,
    pub provisional: bool,
}

pub fn si(
    x: &Distribution,
    z: &Distribution,
    delta: &Rational,
    budget: &SearchBudget,
) -> Result<SiReport, SemanticsError> {
    let a = sa(x, delta, budget)?;
    let c = conditional_sa(x, z, delta, budget)?;
    Ok(SiReport {
        si_bits: a.sa_bits as i64 - c.sa_bits as i64,
        provisional: a.provisional || c.provisional,
        sa: a,
        conditional_sa: c,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffReport {
    /// `SI / SA` as `"p/q"`.
    pub effectiveness: String,
    pub si: SiReport,
}

impl EffReport {
    pub fn value(&self) -> Rational {
        parse_rational(&self.effectiveness).expect("written by format_rational")
    }
}

/// `SI / SA`; undefined when `SA = 0`.
pub fn effectiveness(
    x: &Distribution,
    z: &Distribution,
    delta: &Rational,
    budget: &SearchBudget,
) -> Result<EffReport, SemanticsError> {
    let s = si(x, z, delta, budget)?;
    if s.sa.sa_bits == 0 {
        return Err(SemanticsError::EffUndefined);
    }
    let e = Rational::new(s.si_bits.into(), (s.sa.sa_bits as i64).into());
    Ok(EffReport {
        effectiveness: format_rational(&e),
        si: s,
    })
}

/// Rewires a circuit so the semantics input becomes a condition input of
/// the same width: the result with `z = m` behaves exactly like `c`.
pub fn to_receiver(c: &OcCircuit) -> Result<ConditionalOcCircuit, SemanticsError> {
    let w = c.widths();
    let (n_u, n_s, n_m) = (w.n_u, w.n_s, w.n_m);
    // Old input order u, s, m, r; new order u, z, s, r with z in m's place.
    let remap = |i: usize| {
        if i < n_u {
            i
        } else if i < n_u + n_s {
            i + n_m
        } else if i < n_u + n_s + n_m {
            i - n_s
        } else {
            i
        }
    };
    let old = &c.logic.circuit;
    let labels = old
        .labels
        .iter()
        .map(|l| match *l {
            GateLabel::Input(i) => GateLabel::Input(remap(i)),
            g => g,
        })
        .collect();
    let circuit =
        Circuit::new(old.num_inputs, labels, old.in_edges.clone(), old.outputs.clone()).map_err(MachineError::from)?;
    let logic = ConditionalOcLogic {
        circuit,
        n_u,
        n_z: n_m,
        n_s,
        n_m: 0,
        n_r: w.n_r,
        l_y: w.l_y,
        s1: c.logic.s1.clone(),
    };
    Ok(ConditionalOcCircuit::new(logic, c.u.clone(), c.n, BitString::new())?)
}

/// Source-coding demonstration: the sender transmits the semantics stream,
/// the receiver runs the rewired circuit on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    /// Code length `|m| = K N_m`.
    pub code_bits: usize,
    pub message: BitString,
    /// Statistical distance between sender and receiver outputs, `"p/q"`.
    pub reconstruction_distance: String,
    pub exact: bool,
    /// Semantic amount of the sender's output distribution.
    pub sa: SemanticReport,
    /// `SA <= code_bits`; only meaningful when `sa` is not provisional.
    pub bound_holds: bool,
    pub budget: SearchBudget,
    pub codec: String,
}

pub fn ssoc_demo(c: &OcCircuit, delta: &Rational, budget: &SearchBudget) -> Result<DemoReport, SemanticsError> {
    let sender = c.output_distribution(budget.randomness_budget)?;
    let receiver = to_receiver(c)?;
    let z = c.m.clone();
    let received = receiver.conditional_distribution(&z, budget.randomness_budget)?;
    let d = statistical_distance(&sender, &received)?;
    let s = sa(&sender, delta, budget)?;
    Ok(DemoReport {
        code_bits: z.len(),
        message: z.clone(),
        exact: d.is_zero(),
        reconstruction_distance: format_rational(&d),
        bound_holds: s.sa_bits <= z.len() as u64,
        sa: s,
        budget: budget.clone(),
        codec: CODEC_VERSION.to_string(),
    })
}

/// Explicit channel from `{0,1}^n` to distributions over `{0,1}^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub n: usize,
    pub l: usize,
    pub rows: BTreeMap<BitString, Distribution>,
}

impl ChannelMatrix {
    pub fn new(n: usize, l: usize, rows: BTreeMap<BitString, Distribution>) -> Result<Self, SemanticsError> {
        for (x, row) in &rows {
            if x.len() != n || row.n() != l {
                return Err(SemanticsError::Channel(format!("row {x} has the wrong shape")));
            }
        }
        Ok(Self { n, l, rows })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..1u64 << n)
            .map(|v| {
                let x = BitString::from_u64(v, n);
                (x.clone(), FiniteDistribution::point(x))
            })
            .collect();
        Self { n, l: n, rows }
    }

    /// Every input maps to the all-zero string of length `l`.
    pub fn erasing(n: usize, l: usize) -> Self {
        let rows = (0..1u64 << n)
            .map(|v| {
                (
                    BitString::from_u64(v, n),
                    FiniteDistribution::point(BitString::zeros(l)),
                )
            })
            .collect();
        Self { n, l, rows }
    }

    /// Distribution of the channel output when the input has law `x`.
    pub fn push(&self, x: &Distribution) -> Result<Distribution, SemanticsError> {
        if x.n() != self.n {
            return Err(SemanticsError::Channel(format!(
                "input has {} bits, channel expects {}",
                x.n(),
                self.n
            )));
        }
        let mut out: Vec<(BitString, Rational)> = Vec::new();
        for (xv, p) in x.iter() {
            let row = self
                .rows
                .get(xv)
                .ok_or_else(|| SemanticsError::Channel(format!("no row for {xv}")))?;
            out.extend(row.iter().map(|(z, q)| (z.clone(), p * q)));
        }
        Ok(FiniteDistribution::new(self.l, out)?)
    }

    pub fn from_json(text: &str) -> Result<Self, SemanticsError> {
        let raw: ChannelJson = serde_json::from_str(text).map_err(|e| SemanticsError::Channel(e.to_string()))?;
        let mut rows = BTreeMap::new();
        for (x, probs) in raw.rows {
            let key: BitString = x
                .parse()
                .map_err(|_| SemanticsError::Channel(format!("bad input {x:?}")))?;
            let dist = crate::dist::DistJson { n: raw.l, probs }.try_into()?;
            rows.insert(key, dist);
        }
        Self::new(raw.n, raw.l, rows)
    }
}

/// On-disk form: `{"n":1, "l":1, "rows": {"0": {"0":"1"}, "1": {"1":"1"}}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelJson {
    pub n: usize,
    pub l: usize,
    pub rows: BTreeMap<String, BTreeMap<String, String>>,
}

/// Capacity objective of one candidate message distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateObjective {
    pub entropy_bits: f64,
    /// `E_M[SA(X(m) : Z(m))]` as `"p/q"`.
    pub expected_conditional_sa: String,
    /// `(H(M) - E[SA]) / n`.
    pub objective: f64,
    pub provisional: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub candidates: Vec<CandidateObjective>,
    /// Largest objective: a lower bound on the capacity, since only the
    /// given candidates are examined.
    pub max: f64,
    pub argmax: usize,
    pub provisional: bool,
}

/// Evaluates `(H(M) - sum_m p(m) SA(X(m) : Z(m))) / n` for every candidate
/// `M`, where `X(m)` is the output of `logic` with universe `u` on
/// semantics `m` and `Z(m)` is `X(m)` through `channel`.
pub fn capacity_objective(
    logic: &OcLogic,
    u: &BitString,
    n: usize,
    candidates: &[Distribution],
    channel: &ChannelMatrix,
    delta: &Rational,
    budget: &SearchBudget,
) -> Result<CapacityReport, SemanticsError> {
    let mut cache: BTreeMap<BitString, SemanticReport> = BTreeMap::new();
    let mut out = Vec::with_capacity(candidates.len());
    for m_dist in candidates {
        let mut expected = Rational::zero();
        let mut provisional = false;
        for (m, p) in m_dist.iter() {
            let rep = match cache.get(m) {
                Some(r) => r.clone(),
                None => {
                    let c = OcCircuit::new(logic.clone(), u.clone(), n, m.clone())?;
                    let x = c.output_distribution(budget.randomness_budget)?;
                    let z = channel.push(&x)?;
                    let r = conditional_sa(&x, &z, delta, budget)?;
                    cache.insert(m.clone(), r.clone());
                    r
                }
            };
            provisional |= rep.provisional;
            expected += p * Rational::from_integer(rep.sa_bits.into());
        }
        let h = shannon_entropy(m_dist);
        let objective = (h - expected.to_f64().unwrap_or(f64::NAN)) / n as f64;
        out.push(CandidateObjective {
            entropy_bits: h,
            expected_conditional_sa: format_rational(&expected),
            objective,
            provisional,
        });
    }
    let argmax = (0..out.len())
        .max_by(|&a, &b| {
            out[a]
                .objective
                .partial_cmp(&out[b].objective)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    Ok(CapacityReport {
        max: out.get(argmax).map_or(f64::NEG_INFINITY, |c| c.objective),
        argmax,
        provisional: out.iter().any(|c| c.provisional),
        candidates: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocmachine::fixtures;

    fn budget() -> SearchBudget {
        SearchBudget::with_max_bits(24)
    }

    fn point(s: &str) -> Distribution {
        FiniteDistribution::point(s.parse().unwrap())
    }

    #[test]
    fn receiver_matches_sender() {
        for m in ["1011", "0000", "0110"] {
            let c = fixtures::echo(&m.parse().unwrap());
            let r = to_receiver(&c).unwrap();
            let z: BitString = m.parse().unwrap();
            assert_eq!(
                r.conditional_distribution(&z, 20).unwrap(),
                c.output_distribution(20).unwrap()
            );
            let mut bad = z.clone();
            bad.flip(1);
            assert_ne!(
                r.conditional_distribution(&bad, 20).unwrap(),
                c.output_distribution(20).unwrap()
            );
        }
    }

    #[test]
    fn ones_has_no_semantics() {
        let r = sa(&point("1111"), &Rational::zero(), &budget()).unwrap();
        assert_eq!(r.status, SearchStatus::ExactMinimum);
        assert_eq!(r.sa_bits, 0);
    }

    #[test]
    fn semantic_amount_rounds_up() {
        let w = Widths {
            n_m: 1,
            l_y: 2,
            ..Widths::default()
        };
        assert_eq!(semantic_amount(3, &w), 2);
        assert_eq!(semantic_amount(4, &w), 2);
    }

    #[test]
    fn channel_push() {
        let x = FiniteDistribution::uniform(1);
        assert_eq!(ChannelMatrix::identity(1).push(&x).unwrap(), x);
        assert_eq!(ChannelMatrix::erasing(1, 2).push(&x).unwrap(), point("00"));
        let ch = ChannelMatrix::from_json(r#"{"n":1,"l":1,"rows":{"0":{"0":"1"},"1":{"1":"1"}}}"#).unwrap();
        assert_eq!(ch, ChannelMatrix::identity(1));
    }
}
