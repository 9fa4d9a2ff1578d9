//! Exact minimization of encoded oc-circuit length.
//!
//! [`oc_search`] enumerates canonical payloads by increasing length and,
//! within a length, in lexicographic order; the first payload whose machine
//! reproduces the target within `delta` is the proper circuit. A one-step
//! truth-table machine ([`baseline_circuit`]) bounds the range from above.
//! The conditional and structured variants run the same discipline over
//! their own encodings.

mod enumerate;
pub(crate) mod eval;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::bitio::codec::{self, payload_len, CodecError, Kind};
use crate::bitio::BitString;
use crate::circuit::{synth_from_table, Circuit, GateLabel, TruthTable};
use crate::dist::{apportion, dyadic_approximation, statistical_distance, DistError};
use crate::ocmachine::{
    ConditionalOcCircuit, ConditionalOcLogic, MachineError, MacroLibrary, OcCircuit, OcLogic, StructuredCircuit,
    StructuredLabel, StructuredOcCircuit, StructuredOcLogic, Widths,
};
use crate::scalar::format_rational;
use crate::{Distribution, Rational, CODEC_VERSION};

use enumerate::{run_length, Found, ShardContext};
use eval::{live_random_inputs, Run, Target};

pub const DEFAULT_MAX_PAYLOAD_BITS: usize = 28;
/// Counters are `u64`, so no length beyond this is enumerated.
pub const MAX_SEARCH_BITS: usize = 60;
/// Payloads longer than this are reported by length only.
const MAX_MATERIALIZED_BITS: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("baseline needs {required} random bits, budget is {budget}")]
    Budget { required: usize, budget: usize },
    #[error("invalid budget: {0}")]
    BadBudget(&'static str),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("accepted witness failed re-verification")]
    Unsound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Longest payload enumerated.
    pub max_payload_bits: usize,
    /// Largest number of live random bits whose outcomes are enumerated.
    pub randomness_budget: usize,
    #[serde(with = "opt_secs")]
    pub time_limit: Option<Duration>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

mod opt_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_some(&d.as_secs_f64()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map(Duration::from_secs_f64))
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_payload_bits: DEFAULT_MAX_PAYLOAD_BITS,
            randomness_budget: crate::ocmachine::DEFAULT_RANDOMNESS_BUDGET,
            time_limit: None,
            workers: None,
        }
    }
}

impl SearchBudget {
    pub fn with_max_bits(max_payload_bits: usize) -> Self {
        Self {
            max_payload_bits,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.max_payload_bits == 0 || self.max_payload_bits > MAX_SEARCH_BITS {
            return Err(SearchError::BadBudget("max payload bits must be in 1..=60"));
        }
        if self.randomness_budget == 0 || self.randomness_budget > 62 {
            return Err(SearchError::BadBudget("randomness budget must be in 1..=62"));
        }
        if self.workers == Some(0) {
            return Err(SearchError::BadBudget("worker count must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SearchStatus {
    /// Every shorter payload, and every earlier one of the same length, was
    /// examined and rejected.
    ExactMinimum,
    /// The witness accepts, but the enumeration below it was incomplete.
    UpperBoundOnly,
    /// No length was enumerated; the witness is the baseline.
    BaselineOnly,
}

/// Why a payload (or a bulk-counted set of payloads) was not accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RejectReason {
    Truncated,
    LengthMismatch,
    NMismatch,
    BadHeader,
    Cycle,
    BadInDegree,
    BadLabel,
    BadOutput,
    OverBudget,
    ConditionTooShort,
    DistanceExceeded,
}

impl RejectReason {
    pub const ALL: [RejectReason; 11] = [
        RejectReason::Truncated,
        RejectReason::LengthMismatch,
        RejectReason::NMismatch,
        RejectReason::BadHeader,
        RejectReason::Cycle,
        RejectReason::BadInDegree,
        RejectReason::BadLabel,
        RejectReason::BadOutput,
        RejectReason::OverBudget,
        RejectReason::ConditionTooShort,
        RejectReason::DistanceExceeded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RejectReason::Truncated => "truncated",
            RejectReason::LengthMismatch => "length-mismatch",
            RejectReason::NMismatch => "n-mismatch",
            RejectReason::BadHeader => "bad-header",
            RejectReason::Cycle => "cycle",
            RejectReason::BadInDegree => "bad-in-degree",
            RejectReason::BadLabel => "bad-label",
            RejectReason::BadOutput => "bad-output",
            RejectReason::OverBudget => "over-budget",
            RejectReason::ConditionTooShort => "condition-too-short",
            RejectReason::DistanceExceeded => "distance-exceeded",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RejectCounts([u64; 11]);

impl RejectCounts {
    pub fn add(&mut self, r: RejectReason, k: u64) {
        self.0[r as usize] += k;
    }

    pub fn get(&self, r: RejectReason) -> u64 {
        self.0[r as usize]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }

    /// Nonzero counters.
    pub fn iter(&self) -> impl Iterator<Item = (RejectReason, u64)> + '_ {
        RejectReason::ALL
            .into_iter()
            .map(|r| (r, self.get(r)))
            .filter(|&(_, c)| c > 0)
    }

    pub fn to_map(&self) -> BTreeMap<&'static str, u64> {
        self.iter().map(|(r, c)| (r.name(), c)).collect()
    }
}

/// Statistics of one enumerated length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthStats {
    pub bits: usize,
    /// True when every payload of this length was examined; the counters
    /// then sum to `2^bits`.
    pub exhausted: bool,
    pub counts: RejectCounts,
    pub candidates: u64,
}

#[derive(Debug, Clone)]
pub struct SearchResult<W> {
    pub status: SearchStatus,
    /// Payload length of the witness.
    pub oc_bits: usize,
    pub witness: W,
    /// The witness payload, when small enough to materialize.
    pub payload: Option<BitString>,
    pub baseline_bits: usize,
    /// Decoded candidates whose distribution was evaluated.
    pub candidates_tested: u64,
    /// Rejects over all enumerated lengths. At the accepting length only
    /// payloads ordered before the witness's header, plus semantic rejects
    /// within it, are included.
    pub rejected_by_reason: RejectCounts,
    pub lengths: Vec<LengthStats>,
    pub timed_out: bool,
}

/// Machine kinds the search can return.
pub trait Witness: Sized + Clone + Send {
    const KIND: Kind;
    fn from_flat(c: &OcCircuit) -> Self;
    fn encode(&self) -> Result<BitString, CodecError>;
    fn encoded_len(&self) -> usize;
    /// Flat circuit, logic widths, `s_1`, `u`, `m`, `n` for evaluation.
    fn flat_parts(&self) -> Result<(Circuit, Widths, BitString, BitString, BitString, usize), SearchError>;
}

pub(crate) trait Build: Witness {
    fn from_found(f: Found, n: usize) -> Result<Self, SearchError>;
}

fn flat_circuit(main: StructuredCircuit) -> Result<Circuit, SearchError> {
    let labels = main
        .labels
        .iter()
        .map(|l| match *l {
            StructuredLabel::Gate(g) => Ok(g),
            StructuredLabel::Macro { .. } => Err(SearchError::Unsound),
        })
        .collect::<Result<Vec<GateLabel>, _>>()?;
    Ok(Circuit::new(main.num_inputs, labels, main.in_edges, main.outputs).map_err(MachineError::from)?)
}

impl Build for OcCircuit {
    fn from_found(f: Found, n: usize) -> Result<Self, SearchError> {
        let w = f.widths;
        let logic = OcLogic {
            circuit: flat_circuit(f.main)?,
            n_u: w.n_u,
            n_s: w.n_s,
            n_m: w.n_m,
            n_r: w.n_r,
            l_y: w.l_y,
            s1: f.s1,
        };
        Ok(OcCircuit::new(logic, f.u, n, f.m)?)
    }
}

impl Witness for OcCircuit {
    const KIND: Kind = Kind::Flat;

    fn from_flat(c: &OcCircuit) -> Self {
        c.clone()
    }

    fn encode(&self) -> Result<BitString, CodecError> {
        codec::encode_oc_circuit(self)
    }

    fn encoded_len(&self) -> usize {
        codec::oc_circuit_len(self)
    }

    fn flat_parts(&self) -> Result<(Circuit, Widths, BitString, BitString, BitString, usize), SearchError> {
        Ok((
            self.logic.circuit.clone(),
            self.widths(),
            self.logic.s1.clone(),
            self.u.clone(),
            self.m.clone(),
            self.n,
        ))
    }
}

impl Build for ConditionalOcCircuit {
    fn from_found(f: Found, n: usize) -> Result<Self, SearchError> {
        let w = f.widths;
        let logic = ConditionalOcLogic {
            circuit: flat_circuit(f.main)?,
            n_u: w.n_u,
            n_z: w.n_z,
            n_s: w.n_s,
            n_m: w.n_m,
            n_r: w.n_r,
            l_y: w.l_y,
            s1: f.s1,
        };
        Ok(ConditionalOcCircuit::new(logic, f.u, n, f.m)?)
    }
}

impl Witness for ConditionalOcCircuit {
    const KIND: Kind = Kind::Conditional;

    fn from_flat(c: &OcCircuit) -> Self {
        ConditionalOcCircuit {
            logic: c.logic.to_conditional(),
            u: c.u.clone(),
            n: c.n,
            m: c.m.clone(),
        }
    }

    fn encode(&self) -> Result<BitString, CodecError> {
        codec::encode_conditional(self)
    }

    fn encoded_len(&self) -> usize {
        payload_len(
            Kind::Conditional,
            &self.widths(),
            &MacroLibrary::default(),
            self.logic.circuit.labels.len(),
            self.n,
        )
    }

    fn flat_parts(&self) -> Result<(Circuit, Widths, BitString, BitString, BitString, usize), SearchError> {
        Ok((
            self.logic.circuit.clone(),
            self.widths(),
            self.logic.s1.clone(),
            self.u.clone(),
            self.m.clone(),
            self.n,
        ))
    }
}

impl Build for StructuredOcCircuit {
    fn from_found(f: Found, n: usize) -> Result<Self, SearchError> {
        let w = f.widths;
        let logic = StructuredOcLogic {
            macros: f.macros,
            circuit: f.main,
            n_u: w.n_u,
            n_s: w.n_s,
            n_m: w.n_m,
            n_r: w.n_r,
            l_y: w.l_y,
            s1: f.s1,
        };
        Ok(StructuredOcCircuit::new(logic, f.u, n, f.m)?)
    }
}

impl Witness for StructuredOcCircuit {
    const KIND: Kind = Kind::Structured;

    fn from_flat(c: &OcCircuit) -> Self {
        StructuredOcCircuit::from_flat(c)
    }

    fn encode(&self) -> Result<BitString, CodecError> {
        codec::encode_structured(self)
    }

    fn encoded_len(&self) -> usize {
        payload_len(
            Kind::Structured,
            &self.logic.widths(),
            &self.logic.macros,
            self.logic.circuit.labels.len(),
            self.n,
        )
    }

    fn flat_parts(&self) -> Result<(Circuit, Widths, BitString, BitString, BitString, usize), SearchError> {
        let flat = self.expand()?;
        Ok((
            flat.logic.circuit.clone(),
            flat.widths(),
            flat.logic.s1,
            flat.u,
            flat.m,
            flat.n,
        ))
    }
}

/// One-step truth-table machine realizing a dyadic approximation of `x`
/// within `delta`: `N_r` random bits index a table whose rows are split
/// among outcomes in lexicographic order, proportionally to their mass.
pub fn baseline_circuit(
    x: &Distribution,
    delta: &Rational,
    randomness_budget: usize,
) -> Result<OcCircuit, SearchError> {
    let (approx, exp) = dyadic_approximation(x, delta)?;
    let n_r = (exp as usize).max(1);
    if n_r > randomness_budget {
        return Err(SearchError::Budget {
            required: n_r,
            budget: randomness_budget,
        });
    }
    let keys: Vec<BitString> = approx.support().cloned().collect();
    let masses: Vec<Rational> = approx.iter().map(|(_, p)| p.clone()).collect();
    let units = apportion(&masses, n_r as u32);
    let mut rows = Vec::with_capacity(1 << n_r);
    for (k, u) in keys.iter().zip(&units) {
        let count: usize = u.try_into().expect("units fit");
        rows.extend(std::iter::repeat_n(k.clone(), count));
    }
    let n = x.n();
    let circuit =
        synth_from_table(&TruthTable::new(n_r, n, rows).map_err(MachineError::from)?).map_err(MachineError::from)?;
    let logic = OcLogic {
        circuit,
        n_u: 0,
        n_s: 0,
        n_m: 0,
        n_r,
        l_y: n,
        s1: BitString::new(),
    };
    Ok(OcCircuit::new(logic, BitString::new(), n, BitString::new())?)
}

fn check_inputs(x: &Distribution, delta: &Rational) -> Result<(), SearchError> {
    if delta.is_negative() || *delta >= Rational::one() {
        return Err(DistError::BadDelta.into());
    }
    if x.n() == 0 {
        return Err(MachineError::Invariant("n must be at least 1").into());
    }
    Ok(())
}

/// Exact distribution of a witness, enumerating live random bits only.
fn exact_distribution<W: Witness>(w: &W) -> Result<Distribution, SearchError> {
    let (c, widths, s1, u, m, n) = w.flat_parts()?;
    let cc = c.compile().map_err(MachineError::from)?;
    let live = live_random_inputs(&c, &widths);
    let z = BitString::zeros(widths.steps(n) * widths.n_z);
    let run = Run {
        cc: &cc,
        widths,
        n,
        s1: &s1,
        u: &u,
        m: &m,
        z: &z,
        live: &live,
    };
    Ok(run.distribution())
}

fn search<W: Build>(
    x: &Distribution,
    z: Option<&Distribution>,
    delta: &Rational,
    budget: &SearchBudget,
) -> Result<SearchResult<W>, SearchError> {
    budget.validate()?;
    check_inputs(x, delta)?;
    let baseline = W::from_flat(&baseline_circuit(x, delta, budget.randomness_budget)?);
    let baseline_bits = baseline.encoded_len();
    let target = Target::new(x, delta);
    let best = AtomicUsize::new(usize::MAX);
    let timed_out = AtomicBool::new(false);
    let start = Instant::now();
    let ctx = ShardContext {
        kind: W::KIND,
        n: x.n(),
        target: &target,
        condition: z,
        randomness_budget: budget.randomness_budget,
        deadline: budget.time_limit.map(|t| start + t),
        best: &best,
        timed_out: &timed_out,
    };
    let last = baseline_bits.min(budget.max_payload_bits);
    let mut lengths = Vec::new();
    let mut total = RejectCounts::default();
    let mut tested = 0u64;
    let mut found = None;
    let mut stopped_by_time = false;
    let mut work = || {
        for len in 1..=last {
            if ctx.deadline.is_some_and(|d| Instant::now() > d) {
                stopped_by_time = true;
                break;
            }
            let out = run_length(&ctx, len);
            if out.timed_out {
                // Earlier shards may be incomplete; a winner is still sound.
                stopped_by_time = true;
                found = out.found;
                break;
            }
            total.merge(&out.counts);
            tested += out.tested;
            lengths.push(LengthStats {
                bits: len,
                exhausted: out.found.is_none(),
                counts: out.counts,
                candidates: out.tested,
            });
            if out.found.is_some() {
                found = out.found;
                break;
            }
        }
    };
    match budget.workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|_| SearchError::BadBudget("cannot start worker pool"))?
            .install(work),
        None => work(),
    }

    let skipped = total.get(RejectReason::OverBudget) > 0;
    let (status, witness, payload) = match found {
        Some(f) => {
            let payload = f.payload.clone();
            let w = W::from_found(f, x.n())?;
            let status = if skipped || stopped_by_time {
                SearchStatus::UpperBoundOnly
            } else {
                SearchStatus::ExactMinimum
            };
            (status, w, Some(payload))
        }
        None => {
            let status = if lengths.is_empty() {
                SearchStatus::BaselineOnly
            } else {
                SearchStatus::UpperBoundOnly
            };
            let payload = if baseline_bits <= MAX_MATERIALIZED_BITS {
                Some(baseline.encode()?)
            } else {
                None
            };
            (status, baseline, payload)
        }
    };
    verify(&witness, x, z, delta)?;
    if let Some(p) = &payload {
        debug_assert_eq!(witness.encode().ok().as_ref(), Some(p));
    }
    Ok(SearchResult {
        status,
        oc_bits: witness.encoded_len(),
        witness,
        payload,
        baseline_bits,
        candidates_tested: tested,
        rejected_by_reason: total,
        lengths,
        timed_out: stopped_by_time,
    })
}

/// Post-hoc soundness check of a witness against the target.
fn verify<W: Witness>(w: &W, x: &Distribution, z: Option<&Distribution>, delta: &Rational) -> Result<(), SearchError> {
    let (c, widths, s1, u, m, n) = w.flat_parts()?;
    let cc = c.compile().map_err(MachineError::from)?;
    let live = live_random_inputs(&c, &widths);
    let need = widths.steps(n) * widths.n_z;
    let conditions: Vec<BitString> = match z {
        Some(z) if need > 0 => crate::dist::restrict(z, need)?.support().cloned().collect(),
        _ => vec![BitString::zeros(need)],
    };
    for zv in &conditions {
        let run = Run {
            cc: &cc,
            widths,
            n,
            s1: &s1,
            u: &u,
            m: &m,
            z: zv,
            live: &live,
        };
        if run.random_bits() > 62 || n > 64 {
            continue;
        }
        if statistical_distance(x, &run.distribution())? > *delta {
            return Err(SearchError::Unsound);
        }
    }
    Ok(())
}

/// `OC(X, delta)` over flat payloads.
pub fn oc_search(
    x: &Distribution,
    delta: &Rational,
    budget: &SearchBudget,
) -> Result<SearchResult<OcCircuit>, SearchError> {
    search(x, None, delta, budget)
}

/// Conditional complexity of `x` given side information `z`: a candidate
/// must be within `delta` for every value in the support of `z` restricted
/// to the `K * N_z` bits it reads.
pub fn conditional_oc_search(
    x: &Distribution,
    z: &Distribution,
    delta: &Rational,
    budget: &SearchBudget,
) -> Result<SearchResult<ConditionalOcCircuit>, SearchError> {
    search(x, Some(z), delta, budget)
}

/// Structured complexity: payloads carry a macro table; acceptance is
/// checked on the expanded circuit.
pub fn soc_search(
    x: &Distribution,
    delta: &Rational,
    budget: &SearchBudget,
) -> Result<SearchResult<StructuredOcCircuit>, SearchError> {
    search(x, None, delta, budget)
}

impl<W: Witness> SearchResult<W> {
    /// Proven lower bound on the minimum length: one more than the longest
    /// length below which every payload was examined and rejected.
    pub fn lower_bound(&self) -> usize {
        if self.status == SearchStatus::ExactMinimum {
            return self.oc_bits;
        }
        let mut bound = 1;
        for l in &self.lengths {
            if !l.exhausted || l.counts.get(RejectReason::OverBudget) > 0 {
                break;
            }
            bound = l.bits + 1;
        }
        bound
    }

    /// Exact output distribution of the witness (unconditional view).
    pub fn witness_distribution(&self) -> Result<Distribution, SearchError> {
        exact_distribution(&self.witness)
    }

    /// JSON report: status, length, witness container as hex, counters,
    /// budget and codec version.
    pub fn report(&self, delta: &Rational, budget: &SearchBudget) -> serde_json::Value {
        let hex = self.payload.as_ref().map(|p| {
            codec::write_container(W::KIND, p)
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect::<String>()
        });
        json!({
            "codec": CODEC_VERSION,
            "kind": match W::KIND { Kind::Flat => "flat", Kind::Conditional => "conditional", Kind::Structured => "structured" },
            "status": self.status,
            "oc_bits": self.oc_bits,
            "oc_lower_bound": self.lower_bound(),
            "baseline_bits": self.baseline_bits,
            "delta": format_rational(delta),
            "witness_hex": hex,
            "witness_bits": self.payload.as_ref().map(|p| p.to_string()),
            "candidates_tested": self.candidates_tested,
            "rejected_by_reason": self.rejected_by_reason.to_map(),
            "lengths": self.lengths.iter().map(|l| json!({
                "bits": l.bits,
                "exhausted": l.exhausted,
                "candidates": l.candidates,
                "rejected": l.counts.to_map(),
            })).collect::<Vec<_>>(),
            "timed_out": self.timed_out,
            "budget": budget,
        })
    }
}

/// `2^bits` as a big integer, for checking exhausted-length counters.
pub fn payload_space(bits: usize) -> BigInt {
    BigInt::one() << bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::FiniteDistribution;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn bern(p1: Rational) -> Distribution {
        let p0 = Rational::one() - &p1;
        FiniteDistribution::new(1, [("0".parse().unwrap(), p0), ("1".parse().unwrap(), p1)]).unwrap()
    }

    fn budget(bits: usize) -> SearchBudget {
        SearchBudget::with_max_bits(bits)
    }

    #[test]
    fn baseline_examples() {
        let one = FiniteDistribution::point("1".parse().unwrap());
        let b = baseline_circuit(&one, &q(0, 1), 20).unwrap();
        assert_eq!(b.output_distribution(20).unwrap(), one);
        let u = FiniteDistribution::uniform(1);
        assert_eq!(
            baseline_circuit(&u, &q(0, 1), 20)
                .unwrap()
                .output_distribution(20)
                .unwrap(),
            u
        );
        let x = bern(q(3, 4));
        let b = baseline_circuit(&x, &q(0, 1), 20).unwrap();
        assert_eq!(b.logic.n_r, 2);
        assert_eq!(b.output_distribution(20).unwrap(), x);
        assert_eq!(
            baseline_circuit(&bern(q(1, 3)), &q(0, 1), 20).unwrap_err(),
            SearchError::Dist(DistError::NonDyadicExact)
        );
    }

    #[test]
    fn point_mass_minimum() {
        let r = oc_search(&bern(q(1, 1)), &q(0, 1), &budget(28)).unwrap();
        assert_eq!(r.status, SearchStatus::ExactMinimum);
        assert_eq!(r.oc_bits, 14);
        assert_eq!(r.witness.output_distribution(20).unwrap(), bern(q(1, 1)));
        assert_eq!(
            codec::decode_oc_circuit(r.payload.as_ref().unwrap()).unwrap(),
            r.witness
        );
        for l in &r.lengths {
            if l.exhausted {
                assert_eq!(l.counts.total(), 1u64 << l.bits, "length {}", l.bits);
            }
        }
    }

    #[test]
    fn uniform_minimum() {
        let r = oc_search(&FiniteDistribution::uniform(1), &q(0, 1), &budget(28)).unwrap();
        assert_eq!(r.status, SearchStatus::ExactMinimum);
        assert_eq!(r.oc_bits, 13);
    }

    #[test]
    fn cap_below_minimum_gives_baseline() {
        let r = oc_search(&bern(q(1, 1)), &q(0, 1), &budget(10)).unwrap();
        assert_eq!(r.status, SearchStatus::UpperBoundOnly);
        assert_eq!(r.oc_bits, r.baseline_bits);
        assert!(r.oc_bits > 14);
    }

    #[test]
    fn zero_time_gives_baseline_only() {
        let b = SearchBudget {
            time_limit: Some(Duration::ZERO),
            ..budget(28)
        };
        let r = oc_search(&bern(q(1, 1)), &q(0, 1), &b).unwrap();
        assert_eq!(r.status, SearchStatus::BaselineOnly);
        assert!(r.timed_out);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let x = FiniteDistribution::uniform(1);
        let a = oc_search(
            &x,
            &q(0, 1),
            &SearchBudget {
                workers: Some(1),
                ..budget(20)
            },
        )
        .unwrap();
        let b = oc_search(
            &x,
            &q(0, 1),
            &SearchBudget {
                workers: Some(4),
                ..budget(20)
            },
        )
        .unwrap();
        assert_eq!(a.payload, b.payload);
        assert_eq!(a.rejected_by_reason, b.rejected_by_reason);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(
            oc_search(&bern(q(1, 2)), &q(1, 1), &budget(20)),
            Err(SearchError::Dist(DistError::BadDelta))
        ));
        assert!(matches!(
            oc_search(&bern(q(1, 2)), &q(0, 1), &budget(0)),
            Err(SearchError::BadBudget(_))
        ));
    }
}
