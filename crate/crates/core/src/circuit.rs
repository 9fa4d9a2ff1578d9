//! Combinational circuits over the basis {AND, OR, NOT} plus input gates.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitio::BitString;

/// Default cap on the number of inputs for exhaustive truth tables.
pub const DEFAULT_TABLE_BUDGET: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateLabel {
    Input(usize),
    And,
    Or,
    Not,
}

impl GateLabel {
    /// Required in-degree of a vertex carrying this label.
    pub fn arity(self) -> usize {
        match self {
            GateLabel::Input(_) => 0,
            GateLabel::Not => 1,
            GateLabel::And | GateLabel::Or => 2,
        }
    }
}

impl fmt::Display for GateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateLabel::Input(i) => write!(f, "in{i}"),
            GateLabel::And => f.write_str("and"),
            GateLabel::Or => f.write_str("or"),
            GateLabel::Not => f.write_str("not"),
        }
    }
}

impl FromStr for GateLabel {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "and" => Ok(GateLabel::And),
            "or" => Ok(GateLabel::Or),
            "not" => Ok(GateLabel::Not),
            _ => s
                .strip_prefix("in")
                .and_then(|d| d.parse().ok())
                .map(GateLabel::Input)
                .ok_or_else(|| CircuitError::Parse(format!("unknown label {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("circuit has no vertices")]
    Empty,
    #[error("circuit has no outputs")]
    NoOutputs,
    #[error("vertex {vertex}: in-edge list is unsorted, duplicated or out of range")]
    BadEdge { vertex: usize },
    #[error("vertex {vertex}: input label out of range")]
    BadLabel { vertex: usize },
    #[error("output {index} refers to a missing vertex")]
    BadOutput { index: usize },
    #[error("cycle through vertex {vertex}")]
    Cycle { vertex: usize },
    #[error("vertex {vertex}: in-degree {found}, label requires {expected}")]
    BadInDegree {
        vertex: usize,
        expected: usize,
        found: usize,
    },
    #[error("input has {found} bits, circuit expects {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("exhaustive evaluation over {required} inputs exceeds the budget of {budget}")]
    BudgetExceeded { required: usize, budget: usize },
    #[error("truth table is empty or ragged")]
    EmptyTable,
    #[error("constant outputs need at least one input")]
    NoInputs,
    #[error("parse error: {0}")]
    Parse(String),
}

impl CircuitError {
    /// Stable short reason code used in counters and reports.
    pub fn reason(&self) -> &'static str {
        match self {
            CircuitError::Empty => "empty",
            CircuitError::NoOutputs => "no-outputs",
            CircuitError::BadEdge { .. } => "bad-edge",
            CircuitError::BadLabel { .. } => "bad-label",
            CircuitError::BadOutput { .. } => "bad-output",
            CircuitError::Cycle { .. } => "cycle",
            CircuitError::BadInDegree { .. } => "bad-in-degree",
            CircuitError::LengthMismatch { .. } => "length-mismatch",
            CircuitError::BudgetExceeded { .. } => "budget",
            CircuitError::EmptyTable => "empty-table",
            CircuitError::NoInputs => "no-inputs",
            CircuitError::Parse(_) => "parse",
        }
    }
}

/// A labeled DAG. `in_edges[v]` lists the sources of `v` in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Circuit {
    pub num_inputs: usize,
    pub labels: Vec<GateLabel>,
    pub in_edges: Vec<Vec<usize>>,
    pub outputs: Vec<usize>,
}

impl Circuit {
    /// Builds and validates.
    pub fn new(
        num_inputs: usize,
        labels: Vec<GateLabel>,
        in_edges: Vec<Vec<usize>>,
        outputs: Vec<usize>,
    ) -> Result<Self, CircuitError> {
        let c = Self {
            num_inputs,
            labels,
            in_edges,
            outputs,
        };
        c.validate()?;
        Ok(c)
    }

    /// Edge-free circuit of input gates whose outputs pick among them.
    pub fn pass_through(num_inputs: usize, labels: &[usize], outputs: Vec<usize>) -> Result<Self, CircuitError> {
        Self::new(
            num_inputs,
            labels.iter().map(|&i| GateLabel::Input(i)).collect(),
            vec![Vec::new(); labels.len()],
            outputs,
        )
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Checks the invariants in a fixed order: shape, edge lists, labels,
    /// outputs, acyclicity, in-degrees. Reports the first violation.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let v = self.labels.len();
        if v == 0 {
            return Err(CircuitError::Empty);
        }
        if self.outputs.is_empty() {
            return Err(CircuitError::NoOutputs);
        }
        if self.in_edges.len() != v {
            return Err(CircuitError::BadEdge {
                vertex: v.min(self.in_edges.len()),
            });
        }
        for (j, srcs) in self.in_edges.iter().enumerate() {
            if srcs.windows(2).any(|w| w[0] >= w[1]) || srcs.iter().any(|&s| s >= v) {
                return Err(CircuitError::BadEdge { vertex: j });
            }
        }
        for (j, l) in self.labels.iter().enumerate() {
            if let GateLabel::Input(i) = l {
                if *i >= self.num_inputs {
                    return Err(CircuitError::BadLabel { vertex: j });
                }
            }
        }
        if let Some(index) = self.outputs.iter().position(|&o| o >= v) {
            return Err(CircuitError::BadOutput { index });
        }
        topo_order(&self.in_edges)?;
        for (j, l) in self.labels.iter().enumerate() {
            let found = self.in_edges[j].len();
            if found != l.arity() {
                return Err(CircuitError::BadInDegree {
                    vertex: j,
                    expected: l.arity(),
                    found,
                });
            }
        }
        Ok(())
    }

    pub fn compile(&self) -> Result<CompiledCircuit, CircuitError> {
        self.validate()?;
        Ok(CompiledCircuit::from_valid(self))
    }

    pub fn eval(&self, x: &BitString) -> Result<BitString, CircuitError> {
        self.compile()?.eval(x)
    }

    /// Row `x` (as an unsigned integer, input 0 most significant) holds `eval(x)`.
    pub fn truth_table(&self, budget: usize) -> Result<TruthTable, CircuitError> {
        if self.num_inputs > budget {
            return Err(CircuitError::BudgetExceeded {
                required: self.num_inputs,
                budget,
            });
        }
        let cc = self.compile()?;
        let rows = (0..1u64 << self.num_inputs)
            .map(|x| cc.eval_bits(&BitString::from_u64(x, self.num_inputs)))
            .collect();
        Ok(TruthTable {
            num_inputs: self.num_inputs,
            num_outputs: self.outputs.len(),
            rows,
        })
    }

    /// Adjacency bit `w_ij`: an edge from `i` to `j`.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.in_edges[j].binary_search(&i).is_ok()
    }

    /// Parses the debug text format written by `Display`.
    pub fn parse_debug(num_inputs: usize, text: &str) -> Result<Self, CircuitError> {
        let mut labels = Vec::new();
        let mut in_edges = Vec::new();
        let mut outputs = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix("out:") {
                outputs = Some(parse_list(rest)?);
                continue;
            }
            let (head, srcs) = line
                .split_once("<-")
                .ok_or_else(|| CircuitError::Parse(format!("missing '<-' in {line:?}")))?;
            let mut head = head.split_whitespace();
            let idx: usize = head
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| CircuitError::Parse(format!("bad vertex index in {line:?}")))?;
            if idx != labels.len() {
                return Err(CircuitError::Parse(format!("vertex {idx} out of sequence")));
            }
            let label = head
                .next()
                .ok_or_else(|| CircuitError::Parse(format!("missing label in {line:?}")))?
                .parse()?;
            labels.push(label);
            in_edges.push(parse_list(srcs)?);
        }
        let outputs = outputs.ok_or_else(|| CircuitError::Parse("missing 'out:' line".into()))?;
        Circuit::new(num_inputs, labels, in_edges, outputs)
    }
}

fn parse_list(s: &str) -> Result<Vec<usize>, CircuitError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CircuitError::Parse(format!("bad index {t:?}"))))
        .collect()
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, l) in self.labels.iter().enumerate() {
            let srcs: Vec<String> = self.in_edges[j].iter().map(|s| s.to_string()).collect();
            writeln!(f, "{j} {l} <- {}", srcs.join(","))?;
        }
        let outs: Vec<String> = self.outputs.iter().map(|o| o.to_string()).collect();
        write!(f, "out: {}", outs.join(","))
    }
}

/// Deterministic Kahn order (smallest ready vertex first).
pub(crate) fn topo_order(in_edges: &[Vec<usize>]) -> Result<Vec<usize>, CircuitError> {
    let v = in_edges.len();
    let mut indeg: Vec<usize> = in_edges.iter().map(Vec::len).collect();
    let mut succ = vec![Vec::new(); v];
    for (j, srcs) in in_edges.iter().enumerate() {
        for &s in srcs {
            succ[s].push(j);
        }
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..v).filter(|&j| indeg[j] == 0).collect();
    let mut order = Vec::with_capacity(v);
    while let Some(j) = ready.pop_first() {
        order.push(j);
        for &k in &succ[j] {
            indeg[k] -= 1;
            if indeg[k] == 0 {
                ready.insert(k);
            }
        }
    }
    if order.len() < v {
        let vertex = (0..v).find(|&j| indeg[j] > 0).unwrap_or(0);
        return Err(CircuitError::Cycle { vertex });
    }
    Ok(order)
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Input(usize),
    And(usize, usize),
    Or(usize, usize),
    Not(usize),
}

/// A validated circuit flattened into topological order. Evaluation is
/// bit-sliced: every `u64` word carries 64 independent evaluations.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    num_inputs: usize,
    // (vertex, op) in topological order
    ops: Vec<(usize, Op)>,
    outputs: Vec<usize>,
    num_vertices: usize,
}

impl CompiledCircuit {
    fn from_valid(c: &Circuit) -> Self {
        let order = topo_order(&c.in_edges).expect("validated circuit is acyclic");
        let ops = order
            .into_iter()
            .map(|j| {
                let e = &c.in_edges[j];
                let op = match c.labels[j] {
                    GateLabel::Input(i) => Op::Input(i),
                    GateLabel::And => Op::And(e[0], e[1]),
                    GateLabel::Or => Op::Or(e[0], e[1]),
                    GateLabel::Not => Op::Not(e[0]),
                };
                (j, op)
            })
            .collect();
        Self {
            num_inputs: c.num_inputs,
            ops,
            outputs: c.outputs.clone(),
            num_vertices: c.labels.len(),
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn eval(&self, x: &BitString) -> Result<BitString, CircuitError> {
        if x.len() != self.num_inputs {
            return Err(CircuitError::LengthMismatch {
                expected: self.num_inputs,
                found: x.len(),
            });
        }
        Ok(self.eval_bits(x))
    }

    fn eval_bits(&self, x: &BitString) -> BitString {
        let inputs: Vec<u64> = x.iter().map(|b| if b { !0 } else { 0 }).collect();
        let mut scratch = Vec::new();
        let mut out = vec![0u64; self.outputs.len()];
        self.eval_lanes(&inputs, &mut scratch, &mut out);
        BitString::from_bits(out.iter().map(|w| w & 1 == 1).collect())
    }

    /// Evaluates 64 lanes at once. `inputs[i]` holds input bit `i` of every
    /// lane; `out[j]` receives output `j`.
    pub fn eval_lanes(&self, inputs: &[u64], scratch: &mut Vec<u64>, out: &mut [u64]) {
        debug_assert_eq!(inputs.len(), self.num_inputs);
        scratch.clear();
        scratch.resize(self.num_vertices, 0);
        #[cfg(debug_assertions)]
        let mut written = vec![false; self.num_vertices];
        for &(j, op) in &self.ops {
            #[cfg(debug_assertions)]
            {
                let reads: &[usize] = match &op {
                    Op::Input(_) => &[],
                    Op::And(a, b) | Op::Or(a, b) => &[*a, *b][..],
                    Op::Not(a) => std::slice::from_ref(a),
                };
                debug_assert!(reads.iter().all(|&r| written[r]), "read of unwritten vertex");
                written[j] = true;
            }
            scratch[j] = match op {
                Op::Input(i) => inputs[i],
                Op::And(a, b) => scratch[a] & scratch[b],
                Op::Or(a, b) => scratch[a] | scratch[b],
                Op::Not(a) => !scratch[a],
            };
        }
        for (o, &v) in out.iter_mut().zip(&self.outputs) {
            *o = scratch[v];
        }
    }
}

/// `rows[x]` is the `num_outputs`-bit image of input `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub num_inputs: usize,
    pub num_outputs: usize,
    pub rows: Vec<BitString>,
}

impl TruthTable {
    pub fn new(num_inputs: usize, num_outputs: usize, rows: Vec<BitString>) -> Result<Self, CircuitError> {
        if num_outputs == 0
            || num_inputs >= usize::BITS as usize
            || rows.len() != 1usize << num_inputs
            || rows.iter().any(|r| r.len() != num_outputs)
        {
            return Err(CircuitError::EmptyTable);
        }
        Ok(Self {
            num_inputs,
            num_outputs,
            rows,
        })
    }

    /// Single-output table from a list of output bits.
    pub fn from_column(num_inputs: usize, bits: &[bool]) -> Result<Self, CircuitError> {
        Self::new(
            num_inputs,
            1,
            bits.iter().map(|&b| BitString::from_bits(vec![b])).collect(),
        )
    }
}

struct Builder {
    labels: Vec<GateLabel>,
    in_edges: Vec<Vec<usize>>,
}

impl Builder {
    fn add(&mut self, label: GateLabel, mut srcs: Vec<usize>) -> usize {
        srcs.sort_unstable();
        self.labels.push(label);
        self.in_edges.push(srcs);
        self.labels.len() - 1
    }

    fn tree(&mut self, label: GateLabel, mut level: Vec<usize>) -> usize {
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len().div_ceil(2));
            for pair in level.chunks(2) {
                next.push(match pair {
                    [a, b] => self.add(label, vec![*a, *b]),
                    [a] => *a,
                    _ => unreachable!(),
                });
            }
            level = next;
        }
        level[0]
    }
}

/// Sum-of-minterms synthesis. Input 0 is the most significant bit of the row
/// index. Constant columns become `AND(x0, NOT x0)` / `OR(x0, NOT x0)`.
pub fn synth_from_table(t: &TruthTable) -> Result<Circuit, CircuitError> {
    if t.rows.is_empty() || t.num_outputs == 0 || t.rows.len() != 1usize << t.num_inputs {
        return Err(CircuitError::EmptyTable);
    }
    let n = t.num_inputs;
    let mut b = Builder {
        labels: Vec::new(),
        in_edges: Vec::new(),
    };
    let inputs: Vec<usize> = (0..n).map(|i| b.add(GateLabel::Input(i), vec![])).collect();
    let mut negs: Vec<Option<usize>> = vec![None; n];
    let mut neg = |b: &mut Builder, i: usize| *negs[i].get_or_insert_with(|| b.add(GateLabel::Not, vec![inputs[i]]));
    let mut minterms: HashMap<usize, usize> = HashMap::new();
    let mut constants: [Option<usize>; 2] = [None, None];
    let mut outputs = Vec::with_capacity(t.num_outputs);

    for j in 0..t.num_outputs {
        let on: Vec<usize> = (0..t.rows.len()).filter(|&x| t.rows[x].bit(j)).collect();
        let vertex = if on.is_empty() || on.len() == t.rows.len() {
            let one = !on.is_empty();
            if n == 0 {
                return Err(CircuitError::NoInputs);
            }
            match constants[one as usize] {
                Some(v) => v,
                None => {
                    let nx = neg(&mut b, 0);
                    let label = if one { GateLabel::Or } else { GateLabel::And };
                    let v = b.add(label, vec![inputs[0], nx]);
                    constants[one as usize] = Some(v);
                    v
                }
            }
        } else {
            let terms: Vec<usize> = on
                .iter()
                .map(|&x| {
                    if let Some(&v) = minterms.get(&x) {
                        return v;
                    }
                    let lits: Vec<usize> = (0..n)
                        .map(|i| {
                            if (x >> (n - 1 - i)) & 1 == 1 {
                                inputs[i]
                            } else {
                                neg(&mut b, i)
                            }
                        })
                        .collect();
                    let v = b.tree(GateLabel::And, lits);
                    minterms.insert(x, v);
                    v
                })
                .collect();
            b.tree(GateLabel::Or, terms)
        };
        outputs.push(vertex);
    }
    Circuit::new(n, b.labels, b.in_edges, outputs)
}
