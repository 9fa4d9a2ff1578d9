//! Reference implementations shared by integration tests. Nothing here
//! calls the library's evaluators or enumerators.

#![allow(dead_code)]

use std::collections::BTreeMap;

use orgcx::bitio::codec::encode_oc_circuit;
use orgcx::circuit::{Circuit, GateLabel};
use orgcx::dist::{statistical_distance, FiniteDistribution};
use orgcx::ocmachine::{OcCircuit, OcLogic, Widths};
use orgcx::{BitString, Distribution, Rational};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn dist(n: usize, pairs: &[(&str, Rational)]) -> Distribution {
    FiniteDistribution::new(n, pairs.iter().map(|(k, p)| (k.parse().unwrap(), p.clone()))).unwrap()
}

pub fn gamma_len(k: usize) -> usize {
    2 * (usize::BITS - 1 - k.leading_zeros()) as usize + 1
}

pub fn field_width(x: usize) -> usize {
    let mut w = 0;
    while (1usize << w) < x {
        w += 1;
    }
    w.max(1)
}

/// Gate-by-gate recursive evaluation.
pub fn eval_circuit(c: &Circuit, x: &[bool]) -> Vec<bool> {
    fn value(c: &Circuit, x: &[bool], v: usize, memo: &mut Vec<Option<bool>>) -> bool {
        if let Some(b) = memo[v] {
            return b;
        }
        let args: Vec<bool> = c.in_edges[v].iter().map(|&s| value(c, x, s, memo)).collect();
        let b = match c.labels[v] {
            GateLabel::Input(i) => x[i],
            GateLabel::And => args[0] && args[1],
            GateLabel::Or => args[0] || args[1],
            GateLabel::Not => !args[0],
        };
        memo[v] = Some(b);
        b
    }
    let mut memo = vec![None; c.labels.len()];
    c.outputs.iter().map(|&o| value(c, x, o, &mut memo)).collect()
}

/// Output of a flat machine for one random string, by the step recurrence
/// `(s_{i+1}, y_i) = C(u, s_i, m_i, r_i)`.
pub fn run_steps(c: &OcCircuit, r: &[bool]) -> BitString {
    let w = c.widths();
    let k = c.n.div_ceil(w.l_y);
    let mut s: Vec<bool> = c.logic.s1.as_bits().to_vec();
    let mut y = Vec::new();
    for i in 0..k {
        let mut input: Vec<bool> = c.u.as_bits().to_vec();
        input.extend_from_slice(&s);
        input.extend_from_slice(&c.m.as_bits()[i * w.n_m..(i + 1) * w.n_m]);
        input.extend_from_slice(&r[i * w.n_r..(i + 1) * w.n_r]);
        let out = eval_circuit(&c.logic.circuit, &input);
        s = out[..w.n_s].to_vec();
        y.extend_from_slice(&out[w.n_s..]);
    }
    y.truncate(c.n);
    BitString::from_bits(y)
}

/// Random inputs (within one step's `r` block) reachable from an output.
pub fn reachable_random(c: &Circuit, w: &Widths) -> Vec<usize> {
    let mut seen = vec![false; c.labels.len()];
    let mut queue: Vec<usize> = c.outputs.clone();
    let mut out = Vec::new();
    while let Some(v) = queue.pop() {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        match c.labels[v] {
            GateLabel::Input(i) if i >= w.r_offset() => out.push(i - w.r_offset()),
            _ => queue.extend(&c.in_edges[v]),
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Distribution of `run` with unreachable random bits held at zero.
pub fn marginal(c: &Circuit, w: &Widths, n: usize, run: impl Fn(&BitString) -> BitString) -> Distribution {
    let live = reachable_random(c, w);
    let k = w.steps(n);
    let bits = k * live.len();
    assert!(bits <= 20, "reference evaluation over {bits} random bits");
    let mut counts = BTreeMap::new();
    for a in 0..1u64 << bits {
        let mut r = BitString::zeros(k * w.n_r);
        for step in 0..k {
            for (j, &i) in live.iter().enumerate() {
                r.set(step * w.n_r + i, (a >> (step * live.len() + j)) & 1 == 1);
            }
        }
        *counts.entry(run(&r)).or_insert(0i64) += 1;
    }
    FiniteDistribution::new(
        n,
        counts
            .into_iter()
            .map(|(y, c)| (y, Rational::new(c.into(), (1i64 << bits).into()))),
    )
    .unwrap()
}

/// Exact output distribution of a flat machine by the reference evaluator.
pub fn reference_distribution(c: &OcCircuit) -> Distribution {
    marginal(&c.logic.circuit, &c.widths(), c.n, |r| run_steps(c, r.as_bits()))
}

/// Payload length from the layout alone.
pub fn layout_len(w: &Widths, v: usize, n: usize) -> usize {
    let inputs = w.n_u + w.n_s + w.n_m + w.n_r;
    let k = n.div_ceil(w.l_y);
    gamma_len(v)
        + gamma_len(w.n_u + 1)
        + gamma_len(w.n_s + 1)
        + gamma_len(w.n_m + 1)
        + gamma_len(w.n_r + 1)
        + gamma_len(w.l_y)
        + w.n_s
        + v * v
        + v * field_width(inputs + 3)
        + (w.n_s + w.l_y) * field_width(v)
        + gamma_len(n)
        + w.n_u
        + k * w.n_m
}

/// Every labelled graph on `v` vertices whose in-degrees match the labels;
/// acyclicity is left to `Circuit::new`.
fn labelled_graphs(v: usize, inputs: usize) -> Vec<(Vec<GateLabel>, Vec<Vec<usize>>)> {
    let mut labels: Vec<GateLabel> = (0..inputs).map(GateLabel::Input).collect();
    labels.extend([GateLabel::And, GateLabel::Or, GateLabel::Not]);
    let mut per_vertex: Vec<Vec<(GateLabel, Vec<usize>)>> = Vec::new();
    for _ in 0..v {
        let mut options = Vec::new();
        for &l in &labels {
            let arity = match l {
                GateLabel::Input(_) => 0,
                GateLabel::Not => 1,
                _ => 2,
            };
            for set in subsets(v, arity) {
                options.push((l, set));
            }
        }
        per_vertex.push(options);
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; v];
    loop {
        out.push((
            (0..v).map(|j| per_vertex[j][idx[j]].0).collect(),
            (0..v).map(|j| per_vertex[j][idx[j]].1.clone()).collect(),
        ));
        let mut j = 0;
        loop {
            if j == v {
                return out;
            }
            idx[j] += 1;
            if idx[j] < per_vertex[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

fn subsets(v: usize, size: usize) -> Vec<Vec<usize>> {
    (0u32..1 << v)
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| (0..v).filter(|&i| m >> i & 1 == 1).collect())
        .collect()
}

fn tuples(len: usize, base: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| (0..base).map(move |x| [t.clone(), vec![x]].concat()))
            .collect();
    }
    out
}

/// Result of the structural enumeration.
pub struct StructuralMinimum {
    pub payload: Option<BitString>,
    pub machines: u64,
}

/// Shortest (then lexicographically first) flat machine within `delta` of
/// `x` with payload at most `max_len` bits. Machines are generated from
/// their components, encoded, and evaluated with the reference evaluator.
pub fn structural_minimum(x: &Distribution, delta: &Rational, max_len: usize) -> StructuralMinimum {
    let n = x.n();
    // Payload length grows with V, N_u, N_s, N_m and N_r for every L_y, so
    // each loop stops at the first value where no L_y fits.
    let fits = |v, n_u, n_s, n_m, n_r| {
        (1..=max_len).any(|l_y| {
            layout_len(
                &Widths {
                    n_u,
                    n_z: 0,
                    n_s,
                    n_m,
                    n_r,
                    l_y,
                },
                v,
                n,
            ) <= max_len
        })
    };
    let mut configs: Vec<(usize, Widths, usize)> = Vec::new();
    for v in (1..).take_while(|&v| fits(v, 0, 0, 0, 0)) {
        for n_u in (0..).take_while(|&a| fits(v, a, 0, 0, 0)) {
            for n_s in (0..).take_while(|&b| fits(v, n_u, b, 0, 0)) {
                for n_m in (0..).take_while(|&c| fits(v, n_u, n_s, c, 0)) {
                    for n_r in (0..).take_while(|&d| fits(v, n_u, n_s, n_m, d)) {
                        for l_y in 1..=max_len {
                            let w = Widths {
                                n_u,
                                n_z: 0,
                                n_s,
                                n_m,
                                n_r,
                                l_y,
                            };
                            let len = layout_len(&w, v, n);
                            if len <= max_len && n_m <= l_y {
                                configs.push((len, w, v));
                            }
                        }
                    }
                }
            }
        }
    }
    configs.sort_by_key(|c| c.0);
    let mut machines = 0;
    let mut best: Option<BitString> = None;
    let mut best_len = usize::MAX;
    for (len, w, v) in configs {
        if len > best_len {
            break;
        }
        let inputs = w.n_u + w.n_s + w.n_m + w.n_r;
        let k = n.div_ceil(w.l_y);
        let graphs = labelled_graphs(v, inputs);
        let outs = tuples(w.n_s + w.l_y, v);
        for (labels, in_edges) in &graphs {
            for outputs in &outs {
                let Ok(circuit) = Circuit::new(inputs, labels.clone(), in_edges.clone(), outputs.clone()) else {
                    continue;
                };
                for s1 in 0..1u64 << w.n_s {
                    for u in 0..1u64 << w.n_u {
                        for m in 0..1u64 << (k * w.n_m) {
                            let logic = OcLogic {
                                circuit: circuit.clone(),
                                n_u: w.n_u,
                                n_s: w.n_s,
                                n_m: w.n_m,
                                n_r: w.n_r,
                                l_y: w.l_y,
                                s1: BitString::from_u64(s1, w.n_s),
                            };
                            let c = OcCircuit::new(
                                logic,
                                BitString::from_u64(u, w.n_u),
                                n,
                                BitString::from_u64(m, k * w.n_m),
                            )
                            .expect("generated machines are valid");
                            machines += 1;
                            let payload = encode_oc_circuit(&c).expect("valid machines encode");
                            assert_eq!(payload.len(), len, "layout length of {w:?}, v = {v}");
                            if best.as_ref().is_some_and(|b| b.as_bits() <= payload.as_bits()) {
                                continue;
                            }
                            if statistical_distance(x, &reference_distribution(&c)).unwrap() <= *delta {
                                best = Some(payload);
                                best_len = len;
                            }
                        }
                    }
                }
            }
        }
    }
    StructuralMinimum {
        payload: best,
        machines,
    }
}

pub fn random_circuit(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> Circuit {
    let v = rng.gen_range(1..=8);
    // Vertex ids are a random relabelling of a topological order.
    let mut ids: Vec<usize> = (0..v).collect();
    ids.shuffle(rng);
    let mut labels = vec![GateLabel::And; v];
    let mut in_edges = vec![Vec::new(); v];
    for p in 0..v {
        let label = match rng.gen_range(0..4) {
            2 if p >= 1 => GateLabel::Not,
            3 if p >= 2 => {
                if rng.gen() {
                    GateLabel::And
                } else {
                    GateLabel::Or
                }
            }
            _ => GateLabel::Input(rng.gen_range(0..inputs)),
        };
        let mut srcs: Vec<usize> = ids[..p].choose_multiple(rng, label.arity()).copied().collect();
        srcs.sort_unstable();
        labels[ids[p]] = label;
        in_edges[ids[p]] = srcs;
    }
    let outs = (0..outputs).map(|_| rng.gen_range(0..v)).collect();
    Circuit::new(inputs, labels, in_edges, outs).expect("generated circuits are valid")
}

pub fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> BitString {
    BitString::from_bits((0..n).map(|_| rng.gen()).collect())
}

pub struct Shape {
    pub n_u: usize,
    pub n_z: usize,
    pub n_s: usize,
    pub n_m: usize,
    pub n_r: usize,
    pub l_y: usize,
    pub n: usize,
}

impl Shape {
    pub fn random(rng: &mut ChaCha8Rng, with_z: bool) -> Self {
        let l_y = rng.gen_range(1..=3);
        let mut s = Shape {
            n_u: rng.gen_range(0..=2),
            n_z: if with_z { rng.gen_range(0..=2) } else { 0 },
            n_s: rng.gen_range(0..=2),
            n_m: rng.gen_range(0..=l_y),
            n_r: rng.gen_range(0..=2),
            l_y,
            n: rng.gen_range(1..=6),
        };
        if s.n_u + s.n_z + s.n_s + s.n_m + s.n_r == 0 {
            s.n_r = 1;
        }
        s
    }

    pub fn inputs(&self) -> usize {
        self.n_u + self.n_z + self.n_s + self.n_m + self.n_r
    }

    pub fn m_len(&self) -> usize {
        self.n.div_ceil(self.l_y) * self.n_m
    }
}

pub fn random_flat(rng: &mut ChaCha8Rng) -> OcCircuit {
    let s = Shape::random(rng, false);
    let logic = OcLogic {
        circuit: random_circuit(rng, s.inputs(), s.n_s + s.l_y),
        n_u: s.n_u,
        n_s: s.n_s,
        n_m: s.n_m,
        n_r: s.n_r,
        l_y: s.l_y,
        s1: random_bits(rng, s.n_s),
    };
    let (u, m) = (random_bits(rng, s.n_u), random_bits(rng, s.m_len()));
    OcCircuit::new(logic, u, s.n, m).expect("valid")
}
