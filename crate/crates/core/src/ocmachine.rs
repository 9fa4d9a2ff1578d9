//! Executable semantics of oc-circuits.
//!
//! One step feeds `(u, z_i, s_i, m_i, r_i)` (in that order; `z` only for
//! conditional machines) to the circuit and splits its output into
//! `(s_{i+1}, y_i)`, state first. `K = ceil(n / L_y)` steps run from `s_1`
//! and the concatenated `y` blocks are cut to the first `n` bits.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitio::BitString;
use crate::circuit::{topo_order, Circuit, CircuitError, CompiledCircuit, GateLabel};
use crate::dist::{DistError, FiniteDistribution};
use crate::{Distribution, Rational};

/// Default cap on `K * N_r`, the number of random bits enumerated exactly.
pub const DEFAULT_RANDOMNESS_BUDGET: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("{field} has {found} bits, expected {expected}")]
    Width {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invariant violated: {0}")]
    Invariant(&'static str),
    #[error("exact enumeration needs {required} random bits, budget is {budget}")]
    Budget { required: usize, budget: usize },
    #[error("macro error: {0}")]
    Macro(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Bit widths of one step. `n_z` is zero for unconditional machines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Widths {
    pub n_u: usize,
    pub n_z: usize,
    pub n_s: usize,
    pub n_m: usize,
    pub n_r: usize,
    pub l_y: usize,
}

impl Widths {
    pub fn num_inputs(&self) -> usize {
        self.n_u + self.n_z + self.n_s + self.n_m + self.n_r
    }

    pub fn num_outputs(&self) -> usize {
        self.n_s + self.l_y
    }

    /// `K = ceil(n / L_y)`.
    pub fn steps(&self, n: usize) -> usize {
        n.div_ceil(self.l_y.max(1))
    }

    pub fn z_offset(&self) -> usize {
        self.n_u
    }

    pub fn s_offset(&self) -> usize {
        self.n_u + self.n_z
    }

    pub fn m_offset(&self) -> usize {
        self.s_offset() + self.n_s
    }

    pub fn r_offset(&self) -> usize {
        self.m_offset() + self.n_m
    }

    fn check(&self) -> Result<(), MachineError> {
        if self.l_y == 0 {
            return Err(MachineError::Invariant("L_y must be at least 1"));
        }
        if self.n_m > self.l_y {
            return Err(MachineError::Invariant("N_m must not exceed L_y"));
        }
        Ok(())
    }
}

fn check_width(field: &'static str, expected: usize, s: &BitString) -> Result<(), MachineError> {
    if s.len() != expected {
        return Err(MachineError::Width {
            field,
            expected,
            found: s.len(),
        });
    }
    Ok(())
}

fn check_circuit_shape(num_inputs: usize, num_outputs: usize, w: &Widths) -> Result<(), MachineError> {
    if num_inputs != w.num_inputs() {
        return Err(MachineError::Width {
            field: "circuit inputs",
            expected: w.num_inputs(),
            found: num_inputs,
        });
    }
    if num_outputs != w.num_outputs() {
        return Err(MachineError::Width {
            field: "circuit outputs",
            expected: w.num_outputs(),
            found: num_outputs,
        });
    }
    Ok(())
}

/// Runs `K` steps. `eval` maps one input vector to one output vector.
#[allow(clippy::too_many_arguments)]
pub(crate) fn execute(
    w: &Widths,
    s1: &BitString,
    u: &BitString,
    n: usize,
    m: &BitString,
    z: &BitString,
    r: &BitString,
    mut eval: impl FnMut(&BitString) -> BitString,
) -> BitString {
    let k = w.steps(n);
    let mut s = s1.clone();
    let mut y = BitString::with_capacity(k * w.l_y);
    let mut input = BitString::with_capacity(w.num_inputs());
    for i in 0..k {
        input.truncate(0);
        input.extend_from(u);
        input.extend_from(&z.slice(i * w.n_z, (i + 1) * w.n_z));
        input.extend_from(&s);
        input.extend_from(&m.slice(i * w.n_m, (i + 1) * w.n_m));
        input.extend_from(&r.slice(i * w.n_r, (i + 1) * w.n_r));
        let out = eval(&input);
        s = out.slice(0, w.n_s);
        y.extend_from(&out.slice(w.n_s, out.len()));
    }
    y.truncate(n);
    y
}

/// Exact distribution of `run` over all `2^rbits` random strings. Shards are
/// merged by integer counts, so the result does not depend on scheduling.
pub(crate) fn enumerate_distribution(
    rbits: usize,
    n: usize,
    budget: usize,
    run: impl Fn(&BitString) -> BitString + Sync,
) -> Result<Distribution, MachineError> {
    if rbits > budget {
        return Err(MachineError::Budget {
            required: rbits,
            budget,
        });
    }
    const SHARD: u64 = 1 << 10;
    let total = 1u64 << rbits;
    let shards: Vec<u64> = (0..total.div_ceil(SHARD)).collect();
    let counts: Vec<BTreeMap<BitString, u64>> = shards
        .par_iter()
        .map(|&s| {
            let mut local = BTreeMap::new();
            for r in s * SHARD..((s + 1) * SHARD).min(total) {
                *local.entry(run(&BitString::from_u64(r, rbits))).or_insert(0u64) += 1;
            }
            local
        })
        .collect();
    let mut merged: BTreeMap<BitString, u64> = BTreeMap::new();
    for local in counts {
        for (k, c) in local {
            *merged.entry(k).or_insert(0) += c;
        }
    }
    let denom = BigInt::one() << rbits;
    Ok(FiniteDistribution::new(
        n,
        merged
            .into_iter()
            .map(|(k, c)| (k, Rational::new(BigInt::from(c), denom.clone()))),
    )?)
}

/// Logic `(C, N_u, N_s, N_m, N_r, L_y, s_1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OcLogic {
    pub circuit: Circuit,
    pub n_u: usize,
    pub n_s: usize,
    pub n_m: usize,
    pub n_r: usize,
    pub l_y: usize,
    pub s1: BitString,
}

impl OcLogic {
    pub fn widths(&self) -> Widths {
        Widths {
            n_u: self.n_u,
            n_z: 0,
            n_s: self.n_s,
            n_m: self.n_m,
            n_r: self.n_r,
            l_y: self.l_y,
        }
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        let w = self.widths();
        w.check()?;
        self.circuit.validate()?;
        check_circuit_shape(self.circuit.num_inputs, self.circuit.num_outputs(), &w)?;
        check_width("s_1", self.n_s, &self.s1)
    }

    /// One step: `(s_{i+1}, y_i) = C(u, s_i, m_i, r_i)`.
    pub fn step(
        &self,
        u: &BitString,
        s: &BitString,
        m: &BitString,
        r: &BitString,
    ) -> Result<(BitString, BitString), MachineError> {
        self.validate()?;
        check_width("u", self.n_u, u)?;
        check_width("s", self.n_s, s)?;
        check_width("m", self.n_m, m)?;
        check_width("r", self.n_r, r)?;
        let out = self.circuit.eval(&BitString::concat(&[u, s, m, r]))?;
        Ok((out.slice(0, self.n_s), out.slice(self.n_s, out.len())))
    }

    /// Same logic viewed as a conditional logic with `N_z = 0`.
    pub fn to_conditional(&self) -> ConditionalOcLogic {
        ConditionalOcLogic {
            circuit: self.circuit.clone(),
            n_u: self.n_u,
            n_z: 0,
            n_s: self.n_s,
            n_m: self.n_m,
            n_r: self.n_r,
            l_y: self.l_y,
            s1: self.s1.clone(),
        }
    }
}

/// Oc-circuit `(logic, u, n, m)`; `m` holds `K * N_m` bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OcCircuit {
    pub logic: OcLogic,
    pub u: BitString,
    pub n: usize,
    pub m: BitString,
}

impl OcCircuit {
    pub fn new(logic: OcLogic, u: BitString, n: usize, m: BitString) -> Result<Self, MachineError> {
        let c = Self { logic, u, n, m };
        c.validate()?;
        Ok(c)
    }

    pub fn widths(&self) -> Widths {
        self.logic.widths()
    }

    pub fn steps(&self) -> usize {
        self.widths().steps(self.n)
    }

    /// Random bits consumed by one run, `K * N_r`.
    pub fn random_bits(&self) -> usize {
        self.steps() * self.logic.n_r
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        self.logic.validate()?;
        if self.n == 0 {
            return Err(MachineError::Invariant("n must be at least 1"));
        }
        check_width("u", self.logic.n_u, &self.u)?;
        check_width("semantics", self.steps() * self.logic.n_m, &self.m)
    }

    pub fn run(&self, r: &BitString) -> Result<BitString, MachineError> {
        self.validate()?;
        check_width("randomness", self.random_bits(), r)?;
        let cc = self.logic.circuit.compile()?;
        Ok(self.run_compiled(&cc, r))
    }

    fn run_compiled(&self, cc: &CompiledCircuit, r: &BitString) -> BitString {
        let w = self.widths();
        execute(
            &w,
            &self.logic.s1,
            &self.u,
            self.n,
            &self.m,
            &BitString::new(),
            r,
            |x| cc.eval(x).expect("widths checked"),
        )
    }

    /// Exact output distribution, by enumeration of all `K * N_r` random bits.
    pub fn output_distribution(&self, budget: usize) -> Result<Distribution, MachineError> {
        self.validate()?;
        let cc = self.logic.circuit.compile()?;
        enumerate_distribution(self.random_bits(), self.n, budget, |r| self.run_compiled(&cc, r))
    }
}

/// Conditional logic: a condition block `z_i` of `N_z` bits is spliced
/// between `u` and `s` in every step's input.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConditionalOcLogic {
    pub circuit: Circuit,
    pub n_u: usize,
    pub n_z: usize,
    pub n_s: usize,
    pub n_m: usize,
    pub n_r: usize,
    pub l_y: usize,
    pub s1: BitString,
}

impl ConditionalOcLogic {
    pub fn widths(&self) -> Widths {
        Widths {
            n_u: self.n_u,
            n_z: self.n_z,
            n_s: self.n_s,
            n_m: self.n_m,
            n_r: self.n_r,
            l_y: self.l_y,
        }
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        let w = self.widths();
        w.check()?;
        self.circuit.validate()?;
        check_circuit_shape(self.circuit.num_inputs, self.circuit.num_outputs(), &w)?;
        check_width("s_1", self.n_s, &self.s1)
    }

    /// Conditional steps over `z` (`K * N_z` bits) and `r` (`K * N_r` bits).
    pub fn run_conditional(
        &self,
        u: &BitString,
        n: usize,
        m: &BitString,
        z: &BitString,
        r: &BitString,
    ) -> Result<BitString, MachineError> {
        ConditionalOcCircuit::new(self.clone(), u.clone(), n, m.clone())?.run(z, r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConditionalOcCircuit {
    pub logic: ConditionalOcLogic,
    pub u: BitString,
    pub n: usize,
    pub m: BitString,
}

impl ConditionalOcCircuit {
    pub fn new(logic: ConditionalOcLogic, u: BitString, n: usize, m: BitString) -> Result<Self, MachineError> {
        let c = Self { logic, u, n, m };
        c.validate()?;
        Ok(c)
    }

    pub fn widths(&self) -> Widths {
        self.logic.widths()
    }

    pub fn steps(&self) -> usize {
        self.widths().steps(self.n)
    }

    pub fn random_bits(&self) -> usize {
        self.steps() * self.logic.n_r
    }

    /// Condition bits consumed by one run, `K * N_z`.
    pub fn condition_bits(&self) -> usize {
        self.steps() * self.logic.n_z
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        self.logic.validate()?;
        if self.n == 0 {
            return Err(MachineError::Invariant("n must be at least 1"));
        }
        check_width("u", self.logic.n_u, &self.u)?;
        check_width("semantics", self.steps() * self.logic.n_m, &self.m)
    }

    pub fn run(&self, z: &BitString, r: &BitString) -> Result<BitString, MachineError> {
        self.validate()?;
        check_width("condition", self.condition_bits(), z)?;
        check_width("randomness", self.random_bits(), r)?;
        let cc = self.logic.circuit.compile()?;
        Ok(self.run_compiled(&cc, z, r))
    }

    fn run_compiled(&self, cc: &CompiledCircuit, z: &BitString, r: &BitString) -> BitString {
        execute(&self.widths(), &self.logic.s1, &self.u, self.n, &self.m, z, r, |x| {
            cc.eval(x).expect("widths checked")
        })
    }

    /// Exact output distribution for the fixed condition `z`.
    pub fn conditional_distribution(&self, z: &BitString, budget: usize) -> Result<Distribution, MachineError> {
        self.validate()?;
        check_width("condition", self.condition_bits(), z)?;
        let cc = self.logic.circuit.compile()?;
        enumerate_distribution(self.random_bits(), self.n, budget, |r| self.run_compiled(&cc, z, r))
    }
}

// ---------------------------------------------------------------------------
// Structured circuits

/// A vertex label in a structured circuit: a basis gate, or output `output`
/// of macro `index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StructuredLabel {
    Gate(GateLabel),
    Macro { index: usize, output: usize },
}

/// DAG over the basis plus macros. Sources of a macro vertex, in ascending
/// order, bind the macro's inputs `0..arity`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StructuredCircuit {
    pub num_inputs: usize,
    pub labels: Vec<StructuredLabel>,
    pub in_edges: Vec<Vec<usize>>,
    pub outputs: Vec<usize>,
}

/// A macro gate: its body's inputs are the macro's arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MacroDef {
    pub body: StructuredCircuit,
}

impl MacroDef {
    pub fn arity(&self) -> usize {
        self.body.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.body.outputs.len()
    }
}

/// Ordered macro table; macro `i` may only use macros `0..i`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct MacroLibrary {
    pub macros: Vec<MacroDef>,
}

impl StructuredCircuit {
    pub fn from_flat(c: &Circuit) -> Self {
        Self {
            num_inputs: c.num_inputs,
            labels: c.labels.iter().map(|&l| StructuredLabel::Gate(l)).collect(),
            in_edges: c.in_edges.clone(),
            outputs: c.outputs.clone(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    fn arity_of(label: StructuredLabel, visible: &[MacroDef]) -> usize {
        match label {
            StructuredLabel::Gate(g) => g.arity(),
            StructuredLabel::Macro { index, .. } => visible[index].arity(),
        }
    }

    /// Validates against the macros visible at this point of the hierarchy.
    pub fn validate(&self, visible: &[MacroDef]) -> Result<(), MachineError> {
        let v = self.labels.len();
        if v == 0 {
            return Err(CircuitError::Empty.into());
        }
        if self.outputs.is_empty() {
            return Err(CircuitError::NoOutputs.into());
        }
        if self.in_edges.len() != v {
            return Err(CircuitError::BadEdge {
                vertex: v.min(self.in_edges.len()),
            }
            .into());
        }
        for (j, srcs) in self.in_edges.iter().enumerate() {
            if srcs.windows(2).any(|w| w[0] >= w[1]) || srcs.iter().any(|&s| s >= v) {
                return Err(CircuitError::BadEdge { vertex: j }.into());
            }
        }
        for (j, l) in self.labels.iter().enumerate() {
            match *l {
                StructuredLabel::Gate(GateLabel::Input(i)) if i >= self.num_inputs => {
                    return Err(CircuitError::BadLabel { vertex: j }.into());
                }
                StructuredLabel::Macro { index, .. } if index >= visible.len() => {
                    return Err(MachineError::Macro(format!(
                        "vertex {j}: forward reference to macro {index}"
                    )));
                }
                StructuredLabel::Macro { index, output } if output >= visible[index].num_outputs() => {
                    return Err(MachineError::Macro(format!(
                        "vertex {j}: macro {index} has no output {output}"
                    )));
                }
                _ => {}
            }
        }
        if let Some(index) = self.outputs.iter().position(|&o| o >= v) {
            return Err(CircuitError::BadOutput { index }.into());
        }
        topo_order(&self.in_edges)?;
        for (j, &l) in self.labels.iter().enumerate() {
            let expected = Self::arity_of(l, visible);
            let found = self.in_edges[j].len();
            if found != expected {
                return Err(match l {
                    StructuredLabel::Macro { index, .. } => MachineError::Macro(format!(
                        "vertex {j}: macro {index} takes {expected} argument(s), got {found}"
                    )),
                    _ => CircuitError::BadInDegree {
                        vertex: j,
                        expected,
                        found,
                    }
                    .into(),
                });
            }
        }
        Ok(())
    }

    /// Direct interpretation, macros evaluated by recursion. Serves as the
    /// reference semantics for [`StructuredCircuit::expand`].
    pub fn eval_direct(&self, lib: &MacroLibrary, x: &[bool]) -> Vec<bool> {
        let order = topo_order(&self.in_edges).expect("validated");
        let mut val = vec![false; self.labels.len()];
        for j in order {
            let args: Vec<bool> = self.in_edges[j].iter().map(|&s| val[s]).collect();
            val[j] = match self.labels[j] {
                StructuredLabel::Gate(GateLabel::Input(i)) => x[i],
                StructuredLabel::Gate(GateLabel::And) => args[0] & args[1],
                StructuredLabel::Gate(GateLabel::Or) => args[0] | args[1],
                StructuredLabel::Gate(GateLabel::Not) => !args[0],
                StructuredLabel::Macro { index, output } => lib.macros[index].body.eval_direct(lib, &args)[output],
            };
        }
        self.outputs.iter().map(|&o| val[o]).collect()
    }

    /// Inlines every macro into a flat circuit over the basis.
    pub fn expand(&self, lib: &MacroLibrary) -> Result<Circuit, MachineError> {
        self.validate(&lib.macros)?;
        lib.validate()?;
        let mut fb = FlatBuilder::default();
        let order = topo_order(&self.in_edges)?;
        let mut map = vec![usize::MAX; self.labels.len()];
        for j in order {
            let args: Vec<usize> = self.in_edges[j].iter().map(|&s| map[s]).collect();
            map[j] = match self.labels[j] {
                StructuredLabel::Gate(GateLabel::Input(i)) => fb.add(GateLabel::Input(i), vec![]),
                StructuredLabel::Gate(g) => fb.gate(g, args),
                StructuredLabel::Macro { index, output } => fb.inline(lib, index, output, &args),
            };
        }
        let outputs = self.outputs.iter().map(|&o| map[o]).collect();
        Ok(Circuit::new(self.num_inputs, fb.labels, fb.in_edges, outputs)?)
    }
}

impl MacroLibrary {
    pub fn new(macros: Vec<MacroDef>) -> Result<Self, MachineError> {
        let lib = Self { macros };
        lib.validate()?;
        Ok(lib)
    }

    pub fn len(&self) -> usize {
        self.macros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.macros.is_empty()
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        for (i, m) in self.macros.iter().enumerate() {
            if m.arity() == 0 {
                return Err(MachineError::Macro(format!("macro {i} has arity 0")));
            }
            m.body.validate(&self.macros[..i])?;
        }
        Ok(())
    }

    /// Number of distinct `(macro, output)` label values.
    pub fn label_count(&self) -> usize {
        self.macros.iter().map(MacroDef::num_outputs).sum()
    }
}

#[derive(Default)]
struct FlatBuilder {
    labels: Vec<GateLabel>,
    in_edges: Vec<Vec<usize>>,
}

impl FlatBuilder {
    fn add(&mut self, label: GateLabel, mut srcs: Vec<usize>) -> usize {
        srcs.sort_unstable();
        self.labels.push(label);
        self.in_edges.push(srcs);
        self.labels.len() - 1
    }

    /// Adds a basis gate. A binary gate whose two arguments resolved to the
    /// same vertex gets a duplicate of that vertex as its second source,
    /// since adjacency cannot express a doubled edge.
    fn gate(&mut self, g: GateLabel, mut args: Vec<usize>) -> usize {
        if args.len() == 2 && args[0] == args[1] {
            let v = args[1];
            args[1] = self.add(self.labels[v], self.in_edges[v].clone());
        }
        self.add(g, args)
    }

    fn inline(&mut self, lib: &MacroLibrary, index: usize, output: usize, args: &[usize]) -> usize {
        let body = &lib.macros[index].body;
        // Only the cone of the selected output is materialized.
        let mut needed = vec![false; body.labels.len()];
        let mut stack = vec![body.outputs[output]];
        while let Some(v) = stack.pop() {
            if !needed[v] {
                needed[v] = true;
                stack.extend(body.in_edges[v].iter().copied());
            }
        }
        let order = topo_order(&body.in_edges).expect("validated");
        let mut map = vec![usize::MAX; body.labels.len()];
        for j in order.into_iter().filter(|&j| needed[j]) {
            let a: Vec<usize> = body.in_edges[j].iter().map(|&s| map[s]).collect();
            map[j] = match body.labels[j] {
                StructuredLabel::Gate(GateLabel::Input(i)) => args[i],
                StructuredLabel::Gate(g) => self.gate(g, a),
                StructuredLabel::Macro { index, output } => self.inline(lib, index, output, &a),
            };
        }
        map[body.outputs[output]]
    }
}

/// Structured logic: a macro table plus a main circuit over basis and macros.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StructuredOcLogic {
    pub macros: MacroLibrary,
    pub circuit: StructuredCircuit,
    pub n_u: usize,
    pub n_s: usize,
    pub n_m: usize,
    pub n_r: usize,
    pub l_y: usize,
    pub s1: BitString,
}

impl StructuredOcLogic {
    pub fn widths(&self) -> Widths {
        Widths {
            n_u: self.n_u,
            n_z: 0,
            n_s: self.n_s,
            n_m: self.n_m,
            n_r: self.n_r,
            l_y: self.l_y,
        }
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        let w = self.widths();
        w.check()?;
        self.macros.validate()?;
        self.circuit.validate(&self.macros.macros)?;
        check_circuit_shape(self.circuit.num_inputs, self.circuit.outputs.len(), &w)?;
        check_width("s_1", self.n_s, &self.s1)
    }

    pub fn from_flat(logic: &OcLogic) -> Self {
        Self {
            macros: MacroLibrary::default(),
            circuit: StructuredCircuit::from_flat(&logic.circuit),
            n_u: logic.n_u,
            n_s: logic.n_s,
            n_m: logic.n_m,
            n_r: logic.n_r,
            l_y: logic.l_y,
            s1: logic.s1.clone(),
        }
    }

    pub fn expand(&self) -> Result<OcLogic, MachineError> {
        self.validate()?;
        Ok(OcLogic {
            circuit: self.circuit.expand(&self.macros)?,
            n_u: self.n_u,
            n_s: self.n_s,
            n_m: self.n_m,
            n_r: self.n_r,
            l_y: self.l_y,
            s1: self.s1.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StructuredOcCircuit {
    pub logic: StructuredOcLogic,
    pub u: BitString,
    pub n: usize,
    pub m: BitString,
}

impl StructuredOcCircuit {
    pub fn new(logic: StructuredOcLogic, u: BitString, n: usize, m: BitString) -> Result<Self, MachineError> {
        let c = Self { logic, u, n, m };
        c.validate()?;
        Ok(c)
    }

    pub fn from_flat(c: &OcCircuit) -> Self {
        Self {
            logic: StructuredOcLogic::from_flat(&c.logic),
            u: c.u.clone(),
            n: c.n,
            m: c.m.clone(),
        }
    }

    pub fn steps(&self) -> usize {
        self.logic.widths().steps(self.n)
    }

    pub fn random_bits(&self) -> usize {
        self.steps() * self.logic.n_r
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        self.logic.validate()?;
        if self.n == 0 {
            return Err(MachineError::Invariant("n must be at least 1"));
        }
        check_width("u", self.logic.n_u, &self.u)?;
        check_width("semantics", self.steps() * self.logic.n_m, &self.m)
    }

    /// Flat oc-circuit with every macro inlined.
    pub fn expand(&self) -> Result<OcCircuit, MachineError> {
        OcCircuit::new(self.logic.expand()?, self.u.clone(), self.n, self.m.clone())
    }

    /// Output distribution computed by direct interpretation of the macros.
    pub fn output_distribution_direct(&self, budget: usize) -> Result<Distribution, MachineError> {
        self.validate()?;
        let w = self.logic.widths();
        enumerate_distribution(self.random_bits(), self.n, budget, |r| {
            execute(
                &w,
                &self.logic.s1,
                &self.u,
                self.n,
                &self.m,
                &BitString::new(),
                r,
                |x| BitString::from_bits(self.logic.circuit.eval_direct(&self.logic.macros, x.as_bits())),
            )
        })
    }
}

/// Circuits shipped with the toolkit.
pub mod fixtures {
    use super::*;

    /// Constant-ones machine: `N_u = 1, u = 1, N_s = 1, s_1 = 0, L_y = 1`;
    /// vertex 0 reads `u`, vertex 1 reads `s`; outputs `[s, u]`.
    ///
    /// The edge-free adjacency replaces the identity matrix of the textbook
    /// presentation, which would put a self-loop on each input gate.
    pub fn ones(n: usize) -> OcCircuit {
        let circuit = Circuit::pass_through(2, &[0, 1], vec![1, 0]).expect("valid");
        let logic = OcLogic {
            circuit,
            n_u: 1,
            n_s: 1,
            n_m: 0,
            n_r: 0,
            l_y: 1,
            s1: BitString::zeros(1),
        };
        OcCircuit::new(logic, BitString::ones(1), n, BitString::new()).expect("valid fixture")
    }

    /// Uniform machine: `N_s = 1, N_r = 1, L_y = 1`; vertex 0 reads `s`,
    /// vertex 1 reads `r`; outputs `[s, r]`.
    pub fn coin(n: usize) -> OcCircuit {
        let circuit = Circuit::pass_through(2, &[0, 1], vec![0, 1]).expect("valid");
        let logic = OcLogic {
            circuit,
            n_u: 0,
            n_s: 1,
            n_m: 0,
            n_r: 1,
            l_y: 1,
            s1: BitString::zeros(1),
        };
        OcCircuit::new(logic, BitString::new(), n, BitString::new()).expect("valid fixture")
    }

    /// Semantics-driven machine: `N_m = 1, L_y = 1`, each output bit is the
    /// step's semantics bit. `n = |m|`.
    pub fn echo(m: &BitString) -> OcCircuit {
        let circuit = Circuit::pass_through(1, &[0], vec![0]).expect("valid");
        let logic = OcLogic {
            circuit,
            n_u: 0,
            n_s: 0,
            n_m: 1,
            n_r: 0,
            l_y: 1,
            s1: BitString::new(),
        };
        OcCircuit::new(logic, BitString::new(), m.len(), m.clone()).expect("valid fixture")
    }

    /// `NAND(a, b) = NOT(AND(a, b))`, one output.
    pub fn nand_macro() -> MacroDef {
        MacroDef {
            body: StructuredCircuit {
                num_inputs: 2,
                labels: vec![
                    StructuredLabel::Gate(GateLabel::Input(0)),
                    StructuredLabel::Gate(GateLabel::Input(1)),
                    StructuredLabel::Gate(GateLabel::And),
                    StructuredLabel::Gate(GateLabel::Not),
                ],
                in_edges: vec![vec![], vec![], vec![0, 1], vec![2]],
                outputs: vec![3],
            },
        }
    }

    /// XOR from four NANDs; expects the NAND macro at index `nand`.
    pub fn xor_from_nand_macro(nand: usize) -> MacroDef {
        let g = |i| StructuredLabel::Gate(GateLabel::Input(i));
        let n = StructuredLabel::Macro { index: nand, output: 0 };
        MacroDef {
            body: StructuredCircuit {
                num_inputs: 2,
                labels: vec![g(0), g(1), n, n, n, n],
                in_edges: vec![vec![], vec![], vec![0, 1], vec![0, 2], vec![1, 2], vec![3, 4]],
                outputs: vec![5],
            },
        }
    }

    /// Two-input circuit applying macro output `(index, 0)` to inputs 0 and 1.
    pub fn apply_binary_macro(index: usize) -> StructuredCircuit {
        StructuredCircuit {
            num_inputs: 2,
            labels: vec![
                StructuredLabel::Gate(GateLabel::Input(0)),
                StructuredLabel::Gate(GateLabel::Input(1)),
                StructuredLabel::Macro { index, output: 0 },
            ],
            in_edges: vec![vec![], vec![], vec![0, 1]],
            outputs: vec![2],
        }
    }
}
