//! Epsilon-machines: stochastic finite-state automata whose transitions emit
//! fixed-width symbols.
//!
//! The stationary state distribution is solved exactly (or in floating
//! point, for the float instantiations) by Gaussian elimination; statistical
//! complexity is a Rényi entropy of it. [`compile`] turns a dyadic machine
//! into a one-state-register oc-circuit that emits the same process.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitio::BitString;
use crate::circuit::{synth_from_table, TruthTable};
use crate::dist::{apportion, renyi_of, DistError, FiniteDistribution, Order};
use crate::ocmachine::{MachineError, OcCircuit, OcLogic};
use crate::scalar::{dyadic_exponent, format_rational, parse_rational, Scalar};
use crate::{Distribution, Rational};

/// Largest `t * L_y` for which [`EpsilonMachine::process_distribution`]
/// enumerates paths.
pub const DEFAULT_PROCESS_BUDGET: usize = 20;
/// Largest truth-table input count `N_s + N_r` accepted by [`compile`].
pub const MAX_COMPILE_INPUTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpsError {
    #[error("invalid machine: {0}")]
    Invalid(String),
    #[error("stationary distribution is not unique")]
    NonErgodic,
    #[error("transition {from}->{to} has a non-dyadic probability")]
    DyadicRequired { from: usize, to: usize },
    #[error("needs {required} enumerated bits, budget is {budget}")]
    Budget { required: usize, budget: usize },
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("cannot parse machine: {0}")]
    Parse(String),
}

/// States `0..k`, transition matrix `trans[i][j] = Pr[j | i]`, and the
/// symbol emitted on each positive-probability transition.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonMachine<P = Rational> {
    pub trans: Vec<Vec<P>>,
    pub symbols: Vec<Vec<Option<BitString>>>,
    pub l_y: usize,
    pub start: usize,
}

/// Exact stationary state distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution<P = Rational> {
    pub pi: Vec<P>,
}

impl<P: Scalar> EpsilonMachine<P> {
    pub fn new(
        trans: Vec<Vec<P>>,
        symbols: Vec<Vec<Option<BitString>>>,
        l_y: usize,
        start: usize,
    ) -> Result<Self, EpsError> {
        let m = Self {
            trans,
            symbols,
            l_y,
            start,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn k(&self) -> usize {
        self.trans.len()
    }

    pub fn validate(&self) -> Result<(), EpsError> {
        let k = self.k();
        let bad = |s: String| Err(EpsError::Invalid(s));
        if k == 0 {
            return bad("no states".into());
        }
        if self.start >= k {
            return bad(format!("start state {} out of range", self.start));
        }
        if self.l_y == 0 {
            return bad("symbols must be at least one bit".into());
        }
        if self.symbols.len() != k {
            return bad("symbol table has the wrong shape".into());
        }
        for i in 0..k {
            if self.trans[i].len() != k || self.symbols[i].len() != k {
                return bad(format!("row {i} has the wrong length"));
            }
            let mut sum = P::zero();
            for j in 0..k {
                let p = &self.trans[i][j];
                if *p < P::zero() || *p > P::one() {
                    return bad(format!("T[{i}][{j}] outside [0,1]"));
                }
                match (&self.symbols[i][j], p.is_zero()) {
                    (None, false) => return bad(format!("transition {i}->{j} has no symbol")),
                    (Some(s), _) if s.len() != self.l_y => {
                        return bad(format!("symbol {i}->{j} has length {}, expected {}", s.len(), self.l_y))
                    }
                    _ => {}
                }
                sum = sum + p.clone();
            }
            if !(sum - P::one()).is_negligible() {
                return bad(format!("row {i} does not sum to 1"));
            }
        }
        Ok(())
    }

    /// Converts probabilities, e.g. to `f64` for a floating-point solve.
    pub fn convert<Q: Scalar>(&self, f: impl Fn(&P) -> Q) -> EpsilonMachine<Q> {
        EpsilonMachine {
            trans: self.trans.iter().map(|row| row.iter().map(&f).collect()).collect(),
            symbols: self.symbols.clone(),
            l_y: self.l_y,
            start: self.start,
        }
    }

    /// Solves `pi T = pi`, `sum pi = 1`.
    pub fn stationary(&self) -> Result<StationaryDistribution<P>, EpsError> {
        let k = self.k();
        // Unknowns pi_0..pi_{k-1}; column k is the right-hand side.
        let mut a: Vec<Vec<P>> = (0..k)
            .map(|j| {
                let mut row: Vec<P> = (0..k)
                    .map(|i| {
                        if i == j {
                            self.trans[i][j].clone() - P::one()
                        } else {
                            self.trans[i][j].clone()
                        }
                    })
                    .collect();
                row.push(P::zero());
                row
            })
            .collect();
        let mut norm = vec![P::one(); k];
        norm.push(P::one());
        a.push(norm);

        let rows = a.len();
        let mut pivot_row = 0;
        let mut pivots = Vec::with_capacity(k);
        for col in 0..k {
            let best = (pivot_row..rows)
                .filter(|&r| !a[r][col].is_negligible())
                .max_by(|&x, &y| {
                    a[x][col]
                        .abs()
                        .partial_cmp(&a[y][col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
            let Some(best) = best else { continue };
            a.swap(pivot_row, best);
            let p = a[pivot_row][col].clone();
            for x in &mut a[pivot_row][col..] {
                *x = x.clone() / p.clone();
            }
            let pivot = a[pivot_row].clone();
            for (r, row) in a.iter_mut().enumerate() {
                if r != pivot_row && !row[col].is_zero() {
                    let f = row[col].clone();
                    for (x, y) in row[col..].iter_mut().zip(&pivot[col..]) {
                        *x = x.clone() - f.clone() * y.clone();
                    }
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        if pivots.len() < k {
            return Err(EpsError::NonErgodic);
        }
        let pi: Vec<P> = (0..k).map(|i| a[i][k].clone()).collect();
        if pi.iter().any(|p| *p < P::zero() && !p.is_negligible()) {
            return Err(EpsError::NonErgodic);
        }
        Ok(StationaryDistribution { pi })
    }

    /// Rényi entropy of the stationary distribution, in bits. Order 0 counts
    /// every state, reachable or not.
    pub fn statistical_complexity(&self, alpha: Order) -> Result<f64, EpsError> {
        let st = self.stationary()?;
        Ok(match alpha {
            Order::Finite(0.0) => (self.k() as f64).log2(),
            _ => renyi_of(st.pi.iter().map(Scalar::as_f64).collect(), alpha),
        })
    }

    /// Distribution of the first `t` symbols emitted from `start`, by path
    /// enumeration.
    pub fn process_distribution(&self, t: usize, budget: usize) -> Result<FiniteDistribution<P>, EpsError> {
        let bits = t * self.l_y;
        if bits > budget {
            return Err(EpsError::Budget { required: bits, budget });
        }
        let mut frontier: BTreeMap<(usize, BitString), P> = BTreeMap::new();
        frontier.insert((self.start, BitString::new()), P::one());
        for _ in 0..t {
            let mut next: BTreeMap<(usize, BitString), P> = BTreeMap::new();
            for ((i, y), p) in frontier {
                for j in 0..self.k() {
                    let q = &self.trans[i][j];
                    if q.is_zero() {
                        continue;
                    }
                    let mut y2 = y.clone();
                    y2.extend_from(self.symbols[i][j].as_ref().expect("validated"));
                    let slot = next.entry((j, y2)).or_insert_with(P::zero);
                    *slot = slot.clone() + p.clone() * q.clone();
                }
            }
            frontier = next;
        }
        Ok(FiniteDistribution::new(
            bits,
            frontier.into_iter().map(|((_, y), p)| (y, p)),
        )?)
    }
}

impl<P: Scalar> StationaryDistribution<P> {
    /// `pi T`, for checking the fixed point.
    pub fn apply(&self, m: &EpsilonMachine<P>) -> Vec<P> {
        (0..m.k())
            .map(|j| (0..m.k()).fold(P::zero(), |acc, i| acc + self.pi[i].clone() * m.trans[i][j].clone()))
            .collect()
    }
}

/// State register width used by [`compile`]: `ceil(log2 k) + 1`.
pub fn state_width(k: usize) -> usize {
    (usize::BITS - (k.max(1) - 1).leading_zeros()) as usize + 1
}

impl EpsilonMachine<Rational> {
    /// Largest dyadic exponent among transition probabilities.
    pub fn dyadic_exponent(&self) -> Result<u32, EpsError> {
        let mut e = 0;
        for (i, row) in self.trans.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                e = e.max(dyadic_exponent(p).ok_or(EpsError::DyadicRequired { from: i, to: j })?);
            }
        }
        Ok(e)
    }

    /// Rounds every row to multiples of `2^-exp` by largest remainder.
    /// Transitions rounded to zero drop their symbol.
    pub fn dyadicize(&self, exp: u32) -> Result<Self, EpsError> {
        let denom = BigInt::one() << exp;
        let mut trans = Vec::with_capacity(self.k());
        let mut symbols = self.symbols.clone();
        for (i, row) in self.trans.iter().enumerate() {
            let units = apportion(row, exp);
            let new_row: Vec<Rational> = units.into_iter().map(|u| Rational::new(u, denom.clone())).collect();
            for (j, p) in new_row.iter().enumerate() {
                if p.is_zero() {
                    symbols[i][j] = None;
                }
            }
            trans.push(new_row);
        }
        Self::new(trans, symbols, self.l_y, self.start)
    }

    pub fn from_json(text: &str) -> Result<Self, EpsError> {
        let raw: MachineJson = serde_json::from_str(text).map_err(|e| EpsError::Parse(e.to_string()))?;
        raw.try_into()
    }

    pub fn to_json(&self) -> MachineJson {
        let mut trans = Vec::new();
        for i in 0..self.k() {
            for j in 0..self.k() {
                if let Some(sym) = &self.symbols[i][j] {
                    if !self.trans[i][j].is_zero() {
                        trans.push(TransitionJson {
                            from: i,
                            to: j,
                            p: format_rational(&self.trans[i][j]),
                            sym: sym.to_string(),
                        });
                    }
                }
            }
        }
        MachineJson {
            k: self.k(),
            l_y: self.l_y,
            start: self.start,
            trans,
        }
    }
}

/// On-disk form: `{"k":2, "L_y":1, "start":0, "trans":[{"from":0,"to":0,"p":"1/2","sym":"0"}, ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineJson {
    pub k: usize,
    #[serde(rename = "L_y")]
    pub l_y: usize,
    pub start: usize,
    pub trans: Vec<TransitionJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionJson {
    pub from: usize,
    pub to: usize,
    pub p: String,
    pub sym: String,
}

impl TryFrom<MachineJson> for EpsilonMachine<Rational> {
    type Error = EpsError;

    fn try_from(raw: MachineJson) -> Result<Self, EpsError> {
        let k = raw.k;
        let mut trans = vec![vec![Rational::zero(); k]; k];
        let mut symbols = vec![vec![None; k]; k];
        for t in raw.trans {
            if t.from >= k || t.to >= k {
                return Err(EpsError::Invalid(format!(
                    "transition {}->{} out of range",
                    t.from, t.to
                )));
            }
            if symbols[t.from][t.to].is_some() {
                return Err(EpsError::Invalid(format!("duplicate transition {}->{}", t.from, t.to)));
            }
            trans[t.from][t.to] =
                parse_rational(&t.p).ok_or_else(|| EpsError::Parse(format!("bad probability {:?}", t.p)))?;
            symbols[t.from][t.to] = Some(
                t.sym
                    .parse()
                    .map_err(|_| EpsError::Parse(format!("bad symbol {:?}", t.sym)))?,
            );
        }
        EpsilonMachine::new(trans, symbols, raw.l_y, raw.start)
    }
}

/// One-step oc-circuit emitting the machine's process: `N_s = ceil(log2 k)+1`
/// state bits, `N_r` = the largest dyadic exponent, `N_u = N_m = 0`, and `n`
/// output bits. For state `i` the random block is split into contiguous
/// ranges of size `T_ij 2^N_r`, `j` ascending, each emitting `(j, sigma_ij)`.
/// Unused state codes go to state 0 emitting zeros.
pub fn compile(m: &EpsilonMachine<Rational>, n: usize) -> Result<OcCircuit, EpsError> {
    let n_r = m.dyadic_exponent()? as usize;
    let n_s = state_width(m.k());
    let inputs = n_s + n_r;
    if inputs > MAX_COMPILE_INPUTS {
        return Err(EpsError::Budget {
            required: inputs,
            budget: MAX_COMPILE_INPUTS,
        });
    }
    let width = 1usize << n_r;
    let scale = BigInt::one() << n_r;
    let mut rows = Vec::with_capacity(1 << inputs);
    for code in 0..1usize << n_s {
        if code >= m.k() {
            let mut sink = BitString::zeros(n_s);
            sink.extend_from(&BitString::zeros(m.l_y));
            rows.extend(std::iter::repeat_n(sink, width));
            continue;
        }
        for j in 0..m.k() {
            let block = (&m.trans[code][j] * Rational::from_integer(scale.clone())).to_integer();
            let block: usize = (&block).try_into().expect("block fits");
            if block == 0 {
                continue;
            }
            let mut out = BitString::from_u64(j as u64, n_s);
            out.extend_from(m.symbols[code][j].as_ref().expect("validated"));
            rows.extend(std::iter::repeat_n(out, block));
        }
    }
    let table = TruthTable::new(inputs, n_s + m.l_y, rows).map_err(MachineError::from)?;
    let circuit = synth_from_table(&table).map_err(MachineError::from)?;
    let logic = OcLogic {
        circuit,
        n_u: 0,
        n_s,
        n_m: 0,
        n_r,
        l_y: m.l_y,
        s1: BitString::from_u64(m.start as u64, n_s),
    };
    Ok(OcCircuit::new(logic, BitString::new(), n, BitString::new())?)
}

/// Process of `t` symbols as the exact distribution over `{0,1}^(t L_y)`.
pub fn process_distribution(m: &EpsilonMachine<Rational>, t: usize) -> Result<Distribution, EpsError> {
    m.process_distribution(t, DEFAULT_PROCESS_BUDGET)
}

/// Machines shipped with the toolkit.
pub mod fixtures {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn sym(s: &str) -> Option<BitString> {
        Some(s.parse().expect("fixture symbol"))
    }

    /// One state emitting `symbol` forever.
    pub fn constant(symbol: &str) -> EpsilonMachine {
        let s: BitString = symbol.parse().expect("fixture symbol");
        EpsilonMachine::new(vec![vec![Rational::one()]], vec![vec![Some(s.clone())]], s.len(), 0).expect("valid")
    }

    /// Fair coin flips. Each state remembers the last bit, since a
    /// transition carries a single symbol.
    pub fn fair_coin() -> EpsilonMachine {
        EpsilonMachine::new(
            vec![vec![q(1, 2), q(1, 2)], vec![q(1, 2), q(1, 2)]],
            vec![vec![sym("0"), sym("1")], vec![sym("0"), sym("1")]],
            1,
            0,
        )
        .expect("valid")
    }

    /// No two consecutive 1s: A emits 0 and stays or emits 1 and moves to
    /// B, each with probability 1/2; B emits 0 and returns to A.
    pub fn golden_mean() -> EpsilonMachine {
        EpsilonMachine::new(
            vec![vec![q(1, 2), q(1, 2)], vec![Rational::one(), Rational::zero()]],
            vec![vec![sym("0"), sym("1")], vec![sym("0"), None]],
            1,
            0,
        )
        .expect("valid")
    }

    /// 1s come in even-length runs.
    pub fn even_process() -> EpsilonMachine {
        EpsilonMachine::new(
            vec![vec![q(1, 2), q(1, 2)], vec![Rational::one(), Rational::zero()]],
            vec![vec![sym("0"), sym("1")], vec![sym("1"), None]],
            1,
            0,
        )
        .expect("valid")
    }

    /// Three states, quarter-grained transitions and two-bit symbols.
    pub fn three_state() -> EpsilonMachine {
        EpsilonMachine::new(
            vec![
                vec![q(1, 4), q(3, 4), Rational::zero()],
                vec![Rational::zero(), q(1, 2), q(1, 2)],
                vec![q(3, 4), Rational::zero(), q(1, 4)],
            ],
            vec![
                vec![sym("00"), sym("01"), None],
                vec![None, sym("11"), sym("10")],
                vec![sym("01"), None, sym("00")],
            ],
            2,
            1,
        )
        .expect("valid")
    }

    /// Two disconnected absorbing states.
    pub fn disconnected() -> EpsilonMachine {
        EpsilonMachine::new(
            vec![
                vec![Rational::one(), Rational::zero()],
                vec![Rational::zero(), Rational::one()],
            ],
            vec![vec![sym("0"), None], vec![None, sym("1")]],
            1,
            0,
        )
        .expect("valid")
    }
}
