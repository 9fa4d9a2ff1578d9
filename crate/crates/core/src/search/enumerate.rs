//! Exhaustive enumeration of canonical payloads of one exact length.
//!
//! Instead of decoding all `2^L` strings, the payload is walked field by
//! field in layout order. Gamma fields are visited in code order (longer
//! codes first, then ascending value), raw fields in numeric order, so the
//! traversal order is the lexicographic order of payloads. Every subtree
//! that cannot hold a valid payload is counted in bulk under a reject
//! reason; the counts of an exhausted length sum to exactly `2^L`.
//!
//! The walk over the macro table and header fields is sequential and emits
//! an ordered list of events. Each complete header becomes a shard; shards
//! enumerate state, circuit body, universe and semantics bits, and are run
//! in parallel.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use super::eval::{live_random_inputs, Run, Target};
use super::{RejectCounts, RejectReason};
use crate::bitio::codec::{graph_len, Kind};
use crate::bitio::{field_width, gamma_len, BitString};
use crate::circuit::{topo_order, GateLabel};
use crate::dist::restrict;
use crate::ocmachine::{MacroDef, MacroLibrary, StructuredCircuit, StructuredLabel, Widths};
use crate::Distribution;

/// Smallest possible macro definition: arity 1, one vertex, one output.
const MIN_MACRO_BITS: usize = 7;

/// Gamma codes that fit in `r` bits, in payload order.
struct GammaCodes {
    z: usize,
    next: u64,
    done: bool,
}

impl GammaCodes {
    fn new(r: usize) -> Self {
        if r == 0 {
            return Self {
                z: 0,
                next: 0,
                done: true,
            };
        }
        let z = (r - 1) / 2;
        Self {
            z,
            next: 1 << z,
            done: false,
        }
    }

    /// Strings of `r` bits with too many leading zeros to hold a code.
    fn truncated(r: usize) -> u64 {
        if r == 0 {
            1
        } else {
            1 << (r - (r - 1) / 2 - 1)
        }
    }

    fn next(&mut self) -> Option<(u64, usize)> {
        if self.done {
            return None;
        }
        let item = (self.next, 2 * self.z + 1);
        self.next += 1;
        if self.next == 1 << (self.z + 1) {
            if self.z == 0 {
                self.done = true;
            } else {
                self.z -= 1;
                self.next = 1 << self.z;
            }
        }
        Some(item)
    }

    /// Skips the values left in the code length of the last item returned;
    /// returns how many.
    fn skip_block(&mut self) -> u64 {
        if self.done || self.next == 1 << self.z {
            // The last item closed its block.
            return 0;
        }
        let end = 1u64 << (self.z + 1);
        let skipped = end - self.next;
        if self.z == 0 {
            self.done = true;
        } else {
            self.z -= 1;
            self.next = 1 << self.z;
        }
        skipped
    }
}

fn push_gamma(bits: &mut BitString, k: u64) {
    let w = 64 - k.leading_zeros() as usize;
    bits.push_u64(0, w - 1);
    bits.push_u64(k, w);
}

/// Labels available to a graph: inputs, basis gates, then macro outputs.
struct LabelSpace {
    /// `(code, label)` grouped by arity.
    by_arity: Vec<Vec<(u64, StructuredLabel)>>,
    size: usize,
}

impl LabelSpace {
    fn new(num_inputs: usize, macros: &[MacroDef]) -> Self {
        let mut by_arity: Vec<Vec<(u64, StructuredLabel)>> = vec![Vec::new(); 3];
        let mut code = 0u64;
        let mut put = |arity: usize, l: StructuredLabel, by_arity: &mut Vec<Vec<_>>| {
            if by_arity.len() <= arity {
                by_arity.resize(arity + 1, Vec::new());
            }
            by_arity[arity].push((code, l));
            code += 1;
        };
        for i in 0..num_inputs {
            put(0, StructuredLabel::Gate(GateLabel::Input(i)), &mut by_arity);
        }
        put(2, StructuredLabel::Gate(GateLabel::And), &mut by_arity);
        put(2, StructuredLabel::Gate(GateLabel::Or), &mut by_arity);
        put(1, StructuredLabel::Gate(GateLabel::Not), &mut by_arity);
        for (index, m) in macros.iter().enumerate() {
            for output in 0..m.num_outputs() {
                put(m.arity(), StructuredLabel::Macro { index, output }, &mut by_arity);
            }
        }
        let size = code as usize;
        for group in &mut by_arity {
            group.sort_unstable_by_key(|&(c, _)| c);
        }
        Self { by_arity, size }
    }

    fn count(&self, arity: usize) -> u64 {
        self.by_arity.get(arity).map_or(0, |g| g.len() as u64)
    }
}

/// One valid adjacency-plus-labels assignment.
pub(crate) struct Graph {
    pub bits: BitString,
    pub labels: Vec<StructuredLabel>,
    pub in_edges: Vec<Vec<usize>>,
}

/// All valid graphs on `v` vertices in payload order, plus reject counts in
/// units of graph bit patterns.
pub(crate) struct GraphSet {
    pub graphs: Vec<Graph>,
    pub rejects: RejectCounts,
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

fn enumerate_graphs(v: usize, num_inputs: usize, macros: &[MacroDef]) -> GraphSet {
    let space = LabelSpace::new(num_inputs, macros);
    let lw = field_width(space.size);
    let degrees: Vec<usize> = (0..space.by_arity.len())
        .filter(|&d| d <= v && space.count(d) > 0)
        .collect();
    let mut rejects = RejectCounts::default();
    let label_patterns = 1u128 << (v * lw);
    let in_range = (space.size as u128).pow(v as u32);

    // Columns whose in-degree no label can take.
    let per_column: u128 = degrees.iter().map(|&d| binomial(v, d) as u128).sum();
    let all_adj = 1u128 << (v * v);
    let deg_ok_adj = per_column.pow(v as u32);
    rejects.add(
        RejectReason::BadInDegree,
        ((all_adj - deg_ok_adj) * label_patterns) as u64,
    );

    // Candidate source sets per column.
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for mask in 0u64..1 << v {
        if degrees.contains(&(mask.count_ones() as usize)) {
            sets.push((0..v).filter(|&i| mask >> i & 1 == 1).collect());
        }
    }

    let mut graphs = Vec::new();
    if sets.is_empty() {
        return GraphSet { graphs, rejects };
    }
    let mut cols: Vec<usize> = vec![0; v];
    loop {
        let in_edges: Vec<Vec<usize>> = cols.iter().map(|&c| sets[c].clone()).collect();
        if topo_order(&in_edges).is_err() {
            rejects.add(RejectReason::Cycle, label_patterns as u64);
        } else {
            let per_vertex: Vec<&Vec<(u64, StructuredLabel)>> =
                in_edges.iter().map(|e| &space.by_arity[e.len()]).collect();
            let valid: u128 = per_vertex.iter().map(|g| g.len() as u128).product();
            rejects.add(RejectReason::BadLabel, (label_patterns - in_range) as u64);
            rejects.add(RejectReason::BadInDegree, (in_range - valid) as u64);
            let mut adj = BitString::with_capacity(v * v);
            for i in 0..v {
                for e in &in_edges {
                    adj.push(e.binary_search(&i).is_ok());
                }
            }
            let mut pick = vec![0usize; v];
            'labels: loop {
                let mut bits = adj.clone();
                let mut labels = Vec::with_capacity(v);
                for (j, g) in per_vertex.iter().enumerate() {
                    let (code, l) = g[pick[j]];
                    bits.push_u64(code, lw);
                    labels.push(l);
                }
                graphs.push(Graph {
                    bits,
                    labels,
                    in_edges: in_edges.clone(),
                });
                for j in (0..v).rev() {
                    pick[j] += 1;
                    if pick[j] < per_vertex[j].len() {
                        continue 'labels;
                    }
                    pick[j] = 0;
                }
                break;
            }
        }
        // Next column assignment (odometer).
        let mut j = v;
        loop {
            if j == 0 {
                graphs.sort_by(|a, b| a.bits.cmp(&b.bits));
                return GraphSet { graphs, rejects };
            }
            j -= 1;
            cols[j] += 1;
            if cols[j] < sets.len() {
                break;
            }
            cols[j] = 0;
        }
    }
}

/// All output lists of `count` indices below `v`, in payload order.
fn output_lists(count: usize, v: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; count];
    loop {
        out.push(cur.clone());
        let mut j = count;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            cur[j] += 1;
            if cur[j] < v {
                break;
            }
            cur[j] = 0;
        }
    }
}

/// A complete macro table and header, ready for body enumeration.
#[derive(Clone)]
pub(crate) struct Shard {
    pub prefix: BitString,
    pub macros: MacroLibrary,
    pub widths: Widths,
    pub v: usize,
}

pub(crate) enum Event {
    Prune(RejectReason, u64),
    Shard(Shard),
}

/// Header values read so far.
#[derive(Clone, Copy, Default)]
struct Partial {
    v: Option<usize>,
    n_u: Option<usize>,
    n_s: Option<usize>,
    n_m: Option<usize>,
    n_r: Option<usize>,
    n_z: Option<usize>,
    l_y: Option<usize>,
}

/// Sequential walk over macro tables and headers at one exact length.
pub(crate) struct PrefixWalk {
    kind: Kind,
    len: usize,
    n: usize,
    bits: BitString,
    macros: MacroLibrary,
    header_start: usize,
    pub events: Vec<Event>,
}

impl PrefixWalk {
    pub fn run(kind: Kind, len: usize, n: usize) -> Vec<Event> {
        let mut w = PrefixWalk {
            kind,
            len,
            n,
            bits: BitString::new(),
            macros: MacroLibrary::default(),
            header_start: 0,
            events: Vec::new(),
        };
        if kind == Kind::Structured {
            w.macro_table();
        } else {
            w.header(0, Partial::default());
        }
        w.events
    }

    fn remaining(&self) -> usize {
        self.len - self.bits.len()
    }

    fn prune(&mut self, reason: RejectReason, count: u64) {
        if count == 0 {
            return;
        }
        if let Some(Event::Prune(r, c)) = self.events.last_mut() {
            if *r == reason {
                *c += count;
                return;
            }
        }
        self.events.push(Event::Prune(reason, count));
    }

    /// Minimum payload length of the main part once the macro table is done.
    fn main_min(&self) -> usize {
        let header = if self.kind == Kind::Conditional { 7 } else { 6 };
        header + 1 + field_width(3 + self.macros.label_count()) + 1 + gamma_len(self.n as u64)
    }

    fn macro_table(&mut self) {
        let r = self.remaining();
        self.prune(RejectReason::Truncated, GammaCodes::truncated(r));
        let mut codes = GammaCodes::new(r);
        while let Some((k, cl)) = codes.next() {
            let count = (k - 1) as usize;
            let sub = r - cl;
            if cl + count * MIN_MACRO_BITS + self.main_min() > r {
                let c = 1 + codes.skip_block();
                self.prune(RejectReason::LengthMismatch, c << sub);
                continue;
            }
            push_gamma(&mut self.bits, k);
            self.macro_def(count);
            self.bits.truncate(self.len - r);
        }
    }

    /// Defines the next macro, `left` macros still to go.
    fn macro_def(&mut self, left: usize) {
        if left == 0 {
            self.header_start = self.bits.len();
            self.header(0, Partial::default());
            return;
        }
        let after = (left - 1) * MIN_MACRO_BITS + self.main_min();
        let r = self.remaining();
        self.prune(RejectReason::Truncated, GammaCodes::truncated(r));
        let mut arities = GammaCodes::new(r);
        while let Some((arity, acl)) = arities.next() {
            let arity = arity as usize;
            let lw_min = field_width(arity + 3 + self.macros.label_count());
            if acl + 1 + 1 + lw_min + 2 + after > r {
                let c = 1 + arities.skip_block();
                self.prune(RejectReason::LengthMismatch, c << (r - acl));
                continue;
            }
            push_gamma(&mut self.bits, arity as u64);
            let r2 = self.remaining();
            self.prune(RejectReason::Truncated, GammaCodes::truncated(r2));
            let mut sizes = GammaCodes::new(r2);
            while let Some((v, vcl)) = sizes.next() {
                let v = v as usize;
                let g = graph_len(v, arity, &self.macros.macros);
                if vcl + g + 1 + field_width(v) + after > r2 {
                    let c = 1 + sizes.skip_block();
                    self.prune(RejectReason::LengthMismatch, c << (r2 - vcl));
                    continue;
                }
                push_gamma(&mut self.bits, v as u64);
                self.macro_body(arity, v, left, after);
                self.bits.truncate(self.len - r2);
            }
            self.bits.truncate(self.len - r);
        }
    }

    fn macro_body(&mut self, arity: usize, v: usize, left: usize, after: usize) {
        let set = enumerate_graphs(v, arity, &self.macros.macros);
        let g = graph_len(v, arity, &self.macros.macros);
        let sub = self.remaining() - g;
        for (reason, c) in set.rejects.iter() {
            self.prune(reason, c << sub);
        }
        let ow = field_width(v);
        let base = self.bits.len();
        for graph in set.graphs {
            self.bits.extend_from(&graph.bits);
            let at_count = self.bits.len();
            let r = self.remaining();
            self.prune(RejectReason::Truncated, GammaCodes::truncated(r));
            let mut counts = GammaCodes::new(r);
            while let Some((k, cl)) = counts.next() {
                let k = k as usize;
                if cl + k * ow + after > r {
                    let c = 1 + counts.skip_block();
                    self.prune(RejectReason::LengthMismatch, c << (r - cl));
                    continue;
                }
                push_gamma(&mut self.bits, k as u64);
                let at_outputs = self.bits.len();
                let lists = output_lists(k, v);
                let bad = (1u64 << (k * ow)) - lists.len() as u64;
                self.prune(RejectReason::BadOutput, bad << (r - cl - k * ow));
                for outputs in lists {
                    for &o in &outputs {
                        self.bits.push_u64(o as u64, ow);
                    }
                    let body = StructuredCircuit {
                        num_inputs: arity,
                        labels: graph.labels.clone(),
                        in_edges: graph.in_edges.clone(),
                        outputs,
                    };
                    self.macros.macros.push(MacroDef { body });
                    self.macro_def(left - 1);
                    self.macros.macros.pop();
                    self.bits.truncate(at_outputs);
                }
                self.bits.truncate(at_count);
            }
            self.bits.truncate(base);
        }
    }

    /// Lower bound on the full payload length given the header so far.
    /// Non-decreasing in every field except `L_y`.
    fn min_total(&self, h: &Partial) -> usize {
        let g = |k: usize| gamma_len(k as u64);
        let n_u = h.n_u.unwrap_or(0);
        let n_s = h.n_s.unwrap_or(0);
        let n_m = h.n_m.unwrap_or(0);
        let n_r = h.n_r.unwrap_or(0);
        let n_z = h.n_z.unwrap_or(0);
        let v = h.v.unwrap_or(1);
        let mut len = self.header_start;
        len += g(v) + g(n_u + 1) + g(n_s + 1) + g(n_m + 1) + g(n_r + 1);
        if self.kind == Kind::Conditional {
            len += g(n_z + 1);
        }
        let (l_y_len, outputs, k_m) = match h.l_y {
            Some(l_y) => (g(l_y), n_s + l_y, self.n.div_ceil(l_y) * n_m),
            None => (g(n_m.max(1)), n_s + n_m.max(1), n_m),
        };
        let ins = n_u + n_z + n_s + n_m + n_r;
        len + l_y_len + n_s + graph_len(v, ins, &self.macros.macros) + outputs * field_width(v) + g(self.n) + n_u + k_m
    }

    fn header(&mut self, field: usize, h: Partial) {
        // Field order: V, N_u, N_s, N_m, N_r, [N_z], L_y.
        const V: usize = 0;
        const NU: usize = 1;
        const NS: usize = 2;
        const NM: usize = 3;
        const NR: usize = 4;
        const NZ: usize = 5;
        const LY: usize = 6;
        let field = if field == NZ && self.kind != Kind::Conditional {
            LY
        } else {
            field
        };
        let r = self.remaining();
        self.prune(RejectReason::Truncated, GammaCodes::truncated(r));
        let mut codes = GammaCodes::new(r);
        while let Some((k, cl)) = codes.next() {
            let sub = r - cl;
            let value = k as usize;
            let mut next = h;
            match field {
                V => next.v = Some(value),
                NU => next.n_u = Some(value - 1),
                NS => next.n_s = Some(value - 1),
                NM => next.n_m = Some(value - 1),
                NR => next.n_r = Some(value - 1),
                NZ => next.n_z = Some(value - 1),
                _ => next.l_y = Some(value),
            }
            if field == LY {
                let n_m = h.n_m.unwrap_or(0);
                if value < n_m {
                    self.prune(RejectReason::BadHeader, 1 << sub);
                    continue;
                }
                let total = self.min_total(&next);
                if total != self.len {
                    if total > self.len && (n_m == 0 || value >= self.n) {
                        let c = 1 + codes.skip_block();
                        self.prune(RejectReason::LengthMismatch, c << sub);
                    } else {
                        self.prune(RejectReason::LengthMismatch, 1 << sub);
                    }
                    continue;
                }
                push_gamma(&mut self.bits, k);
                let widths = Widths {
                    n_u: next.n_u.unwrap_or(0),
                    n_z: next.n_z.unwrap_or(0),
                    n_s: next.n_s.unwrap_or(0),
                    n_m: next.n_m.unwrap_or(0),
                    n_r: next.n_r.unwrap_or(0),
                    l_y: value,
                };
                self.events.push(Event::Shard(Shard {
                    prefix: self.bits.clone(),
                    macros: self.macros.clone(),
                    widths,
                    v: next.v.unwrap_or(1),
                }));
                self.bits.truncate(self.len - r);
                continue;
            }
            if self.min_total(&next) > self.len {
                let c = 1 + codes.skip_block();
                self.prune(RejectReason::LengthMismatch, c << sub);
                continue;
            }
            push_gamma(&mut self.bits, k);
            self.header(field + 1, next);
            self.bits.truncate(self.len - r);
        }
    }
}

/// Everything a shard needs besides its own header.
pub(crate) struct ShardContext<'a> {
    pub kind: Kind,
    pub n: usize,
    pub target: &'a Target,
    pub condition: Option<&'a Distribution>,
    pub randomness_budget: usize,
    pub deadline: Option<Instant>,
    pub best: &'a AtomicUsize,
    pub timed_out: &'a AtomicBool,
}

/// Bits and parts of an accepted payload.
#[derive(Clone, Debug)]
pub(crate) struct Found {
    pub payload: BitString,
    pub widths: Widths,
    pub macros: MacroLibrary,
    pub main: StructuredCircuit,
    pub s1: BitString,
    pub u: BitString,
    pub m: BitString,
}

pub(crate) struct ShardOutcome {
    pub counts: RejectCounts,
    pub tested: u64,
    pub found: Option<Found>,
    pub aborted: bool,
}

impl ShardOutcome {
    fn aborted() -> Self {
        Self {
            counts: RejectCounts::default(),
            tested: 0,
            found: None,
            aborted: true,
        }
    }
}

struct Prepared {
    graph: usize,
    outputs: Vec<usize>,
    cc: crate::circuit::CompiledCircuit,
    live: Vec<usize>,
    over_budget: bool,
}

pub(crate) fn run_shard(ctx: &ShardContext<'_>, index: usize, shard: &Shard) -> ShardOutcome {
    let w = shard.widths;
    let v = shard.v;
    let n = ctx.n;
    let k = w.steps(n);
    let set = enumerate_graphs(v, w.num_inputs(), &shard.macros.macros);
    let outs = w.num_outputs();
    let ow = field_width(v);
    let lists = output_lists(outs, v);
    let tail_free = w.n_u + k * w.n_m;
    let after_outputs = gamma_len(n as u64) + tail_free;
    let mut counts = RejectCounts::default();

    let graph_mult = 1u64 << (w.n_s + outs * ow + after_outputs);
    for (reason, c) in set.rejects.iter() {
        counts.add(reason, c * graph_mult);
    }
    let valid_graphs = set.graphs.len() as u64;
    let s1_mult = 1u64 << w.n_s;
    let bad_outputs = (1u64 << (outs * ow)) - lists.len() as u64;
    counts.add(
        RejectReason::BadOutput,
        valid_graphs * s1_mult * bad_outputs * (1 << after_outputs),
    );
    let bodies = valid_graphs * lists.len() as u64 * s1_mult;
    counts.add(
        RejectReason::NMismatch,
        bodies * ((1u64 << after_outputs) - (1u64 << tail_free)),
    );
    let per_body = 1u64 << tail_free;

    let z_support: Option<Vec<BitString>> = match ctx.condition {
        None => None,
        Some(z) => {
            let need = k * w.n_z;
            if need > z.n() {
                counts.add(RejectReason::ConditionTooShort, bodies * per_body);
                return ShardOutcome {
                    counts,
                    tested: 0,
                    found: None,
                    aborted: false,
                };
            }
            Some(restrict(z, need).expect("length checked").support().cloned().collect())
        }
    };

    let mut prepared = Vec::with_capacity(set.graphs.len() * lists.len());
    for (gi, g) in set.graphs.iter().enumerate() {
        for outputs in &lists {
            let main = StructuredCircuit {
                num_inputs: w.num_inputs(),
                labels: g.labels.clone(),
                in_edges: g.in_edges.clone(),
                outputs: outputs.clone(),
            };
            let flat = main.expand(&shard.macros).expect("enumerated structures are valid");
            let live = live_random_inputs(&flat, &w);
            let over_budget = k * live.len() > ctx.randomness_budget;
            prepared.push(Prepared {
                graph: gi,
                outputs: outputs.clone(),
                cc: flat.compile().expect("valid"),
                live,
                over_budget,
            });
        }
    }

    let mut tested = 0u64;
    let empty = BitString::new();
    let mut ticks = 0u32;
    for s1v in 0..s1_mult {
        let s1 = BitString::from_u64(s1v, w.n_s);
        for p in &prepared {
            ticks += 1;
            if ticks.is_multiple_of(64) {
                if ctx.best.load(Ordering::Relaxed) < index {
                    return ShardOutcome::aborted();
                }
                if ctx.deadline.is_some_and(|d| Instant::now() > d) {
                    ctx.timed_out.store(true, Ordering::Relaxed);
                    return ShardOutcome::aborted();
                }
            }
            if p.over_budget {
                counts.add(RejectReason::OverBudget, per_body);
                continue;
            }
            for tail in 0..per_body {
                let u = BitString::from_u64(tail >> (k * w.n_m), w.n_u);
                let m = BitString::from_u64(tail & ((1u64 << (k * w.n_m)) - 1), k * w.n_m);
                tested += 1;
                let accepts = |z: &BitString| {
                    let run = Run {
                        cc: &p.cc,
                        widths: w,
                        n,
                        s1: &s1,
                        u: &u,
                        m: &m,
                        z,
                        live: &p.live,
                    };
                    ctx.target.accepts(&run)
                };
                let ok = match &z_support {
                    None => accepts(&empty),
                    Some(zs) => zs.iter().all(accepts),
                };
                if !ok {
                    counts.add(RejectReason::DistanceExceeded, 1);
                    continue;
                }
                let g = &set.graphs[p.graph];
                let mut payload = shard.prefix.clone();
                payload.extend_from(&s1);
                payload.extend_from(&g.bits);
                for &o in &p.outputs {
                    payload.push_u64(o as u64, ow);
                }
                push_gamma(&mut payload, n as u64);
                payload.extend_from(&u);
                payload.extend_from(&m);
                let main = StructuredCircuit {
                    num_inputs: w.num_inputs(),
                    labels: g.labels.clone(),
                    in_edges: g.in_edges.clone(),
                    outputs: p.outputs.clone(),
                };
                return ShardOutcome {
                    counts,
                    tested,
                    found: Some(Found {
                        payload,
                        widths: w,
                        macros: shard.macros.clone(),
                        main,
                        s1,
                        u,
                        m,
                    }),
                    aborted: false,
                };
            }
        }
    }
    ShardOutcome {
        counts,
        tested,
        found: None,
        aborted: false,
    }
}

/// Result of enumerating one length.
pub(crate) struct LengthOutcome {
    pub counts: RejectCounts,
    pub tested: u64,
    pub found: Option<Found>,
    pub timed_out: bool,
}

/// Enumerates every payload of exactly `len` bits; stops at the
/// lexicographically first acceptor.
pub(crate) fn run_length(ctx_template: &ShardContext<'_>, len: usize) -> LengthOutcome {
    let events = PrefixWalk::run(ctx_template.kind, len, ctx_template.n);
    let shards: Vec<(usize, &Shard)> = events
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match e {
            Event::Shard(s) => Some((i, s)),
            Event::Prune(..) => None,
        })
        .collect();
    let outcomes: Vec<(usize, ShardOutcome)> = shards
        .par_iter()
        .map(|&(i, s)| {
            if ctx_template.best.load(Ordering::Relaxed) < i {
                return (i, ShardOutcome::aborted());
            }
            let out = run_shard(ctx_template, i, s);
            if out.found.is_some() {
                ctx_template.best.fetch_min(i, Ordering::Relaxed);
            }
            (i, out)
        })
        .collect();
    let timed_out = ctx_template.timed_out.load(Ordering::Relaxed);
    let winner = outcomes.iter().find(|(_, o)| o.found.is_some()).map(|(i, _)| *i);
    let cutoff = winner.unwrap_or(usize::MAX);
    let mut counts = RejectCounts::default();
    let mut tested = 0;
    let mut shard_iter = outcomes.into_iter().peekable();
    let mut found = None;
    for (i, e) in events.iter().enumerate() {
        if i > cutoff {
            break;
        }
        match e {
            Event::Prune(r, c) => counts.add(*r, *c),
            Event::Shard(_) => {
                let (j, out) = shard_iter.next().expect("one outcome per shard");
                debug_assert_eq!(i, j);
                debug_assert!(!out.aborted || timed_out, "shard {i} aborted before the winner");
                tested += out.tested;
                if i == cutoff {
                    // Only the semantic rejects seen before the winner.
                    for r in [RejectReason::DistanceExceeded, RejectReason::OverBudget] {
                        counts.add(r, out.counts.get(r));
                    }
                    found = out.found;
                } else {
                    counts.merge(&out.counts);
                }
            }
        }
    }
    ctx_template.best.store(usize::MAX, Ordering::Relaxed);
    LengthOutcome {
        counts,
        tested,
        found,
        timed_out,
    }
}
