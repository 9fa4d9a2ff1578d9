//! OCC1 payload codec and on-disk container.
//!
//! Flat, conditional and structured machines share one layout; the
//! conditional variant adds a condition-width header and the structured
//! variant prepends a macro table. Decoding is strict: a payload is accepted
//! only if it re-encodes to itself, so each circuit has exactly one payload.

use thiserror::Error;

use super::{field_width, gamma_len, BitError, BitReader, BitString, BitWriter};
use crate::circuit::{Circuit, CircuitError, GateLabel};
use crate::ocmachine::{
    ConditionalOcCircuit, ConditionalOcLogic, MachineError, MacroDef, MacroLibrary, OcCircuit, OcLogic,
    StructuredCircuit, StructuredLabel, StructuredOcCircuit, StructuredOcLogic, Widths,
};

/// Version tag stamped into every report that carries a codec-relative length.
pub const CODEC_VERSION: &str = "OCC1";

/// Fields wider than this are rejected before any allocation happens.
const MAX_FIELD: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Flat,
    Conditional,
    Structured,
}

impl Kind {
    pub fn magic(self) -> &'static [u8] {
        match self {
            Kind::Flat => b"OCC1",
            Kind::Conditional => b"OCC1C",
            Kind::Structured => b"OCC1S",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("truncated payload while reading {field}")]
    Truncated { field: &'static str },
    #[error("bad header: {0}")]
    BadHeader(&'static str),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Machine(MachineError),
    #[error("{extra} trailing bit(s) after the payload")]
    TrailingBits { extra: usize },
    #[error("container: {0}")]
    Container(String),
}

impl CodecError {
    /// Stable reject code.
    pub fn reason(&self) -> &'static str {
        match self {
            CodecError::Truncated { .. } => "truncated",
            CodecError::BadHeader(_) => "bad-header",
            CodecError::Circuit(e) => e.reason(),
            CodecError::Machine(MachineError::Circuit(e)) => e.reason(),
            CodecError::Machine(MachineError::Macro(_)) => "bad-macro",
            CodecError::Machine(_) => "bad-machine",
            CodecError::TrailingBits { .. } => "trailing-bits",
            CodecError::Container(_) => "container",
        }
    }
}

impl From<MachineError> for CodecError {
    fn from(e: MachineError) -> Self {
        match e {
            MachineError::Circuit(c) => CodecError::Circuit(c),
            other => CodecError::Machine(other),
        }
    }
}

/// Kind-independent view of a machine, shared by encoder and decoder.
struct RawMachine {
    kind: Kind,
    widths: Widths,
    s1: BitString,
    macros: MacroLibrary,
    main: StructuredCircuit,
    n: usize,
    u: BitString,
    m: BitString,
}

/// Label code: inputs, then AND, OR, NOT, then one code per
/// `(macro, output)` pair in table order.
fn label_code(l: StructuredLabel, num_inputs: usize, macros: &[MacroDef]) -> u64 {
    let base = num_inputs as u64;
    match l {
        StructuredLabel::Gate(GateLabel::Input(i)) => i as u64,
        StructuredLabel::Gate(GateLabel::And) => base,
        StructuredLabel::Gate(GateLabel::Or) => base + 1,
        StructuredLabel::Gate(GateLabel::Not) => base + 2,
        StructuredLabel::Macro { index, output } => {
            let before: usize = macros[..index].iter().map(MacroDef::num_outputs).sum();
            base + 3 + (before + output) as u64
        }
    }
}

fn label_from_code(v: u64, num_inputs: usize, macros: &[MacroDef]) -> Option<StructuredLabel> {
    let base = num_inputs as u64;
    if v < base {
        return Some(StructuredLabel::Gate(GateLabel::Input(v as usize)));
    }
    match v - base {
        0 => Some(StructuredLabel::Gate(GateLabel::And)),
        1 => Some(StructuredLabel::Gate(GateLabel::Or)),
        2 => Some(StructuredLabel::Gate(GateLabel::Not)),
        k => {
            let mut k = (k - 3) as usize;
            for (index, m) in macros.iter().enumerate() {
                if k < m.num_outputs() {
                    return Some(StructuredLabel::Macro { index, output: k });
                }
                k -= m.num_outputs();
            }
            None
        }
    }
}

fn label_space(num_inputs: usize, macros: &[MacroDef]) -> usize {
    num_inputs + 3 + macros.iter().map(MacroDef::num_outputs).sum::<usize>()
}

fn gamma(w: &mut BitWriter, k: usize) {
    w.write_gamma(k as u64).expect("encoded fields are positive");
}

/// Adjacency, labels. Output indices are written by the caller because the
/// macro layout puts an output count in between.
fn write_graph(w: &mut BitWriter, c: &StructuredCircuit, macros: &[MacroDef]) {
    let v = c.labels.len();
    for i in 0..v {
        for j in 0..v {
            w.write_bit(c.in_edges[j].binary_search(&i).is_ok());
        }
    }
    let lw = field_width(label_space(c.num_inputs, macros));
    for &l in &c.labels {
        w.write_bits(label_code(l, c.num_inputs, macros), lw);
    }
}

fn write_outputs(w: &mut BitWriter, c: &StructuredCircuit) {
    let ow = field_width(c.labels.len());
    for &o in &c.outputs {
        w.write_bits(o as u64, ow);
    }
}

fn encode_raw(r: &RawMachine) -> BitString {
    let mut w = BitWriter::new();
    if r.kind == Kind::Structured {
        gamma(&mut w, r.macros.len() + 1);
        for (i, m) in r.macros.macros.iter().enumerate() {
            gamma(&mut w, m.arity());
            gamma(&mut w, m.body.labels.len());
            write_graph(&mut w, &m.body, &r.macros.macros[..i]);
            gamma(&mut w, m.num_outputs());
            write_outputs(&mut w, &m.body);
        }
    }
    let ws = &r.widths;
    gamma(&mut w, r.main.labels.len());
    gamma(&mut w, ws.n_u + 1);
    gamma(&mut w, ws.n_s + 1);
    gamma(&mut w, ws.n_m + 1);
    gamma(&mut w, ws.n_r + 1);
    if r.kind == Kind::Conditional {
        gamma(&mut w, ws.n_z + 1);
    }
    gamma(&mut w, ws.l_y);
    w.write_bitstring(&r.s1);
    write_graph(&mut w, &r.main, &r.macros.macros);
    write_outputs(&mut w, &r.main);
    gamma(&mut w, r.n);
    w.write_bitstring(&r.u);
    w.write_bitstring(&r.m);
    w.finish()
}

struct Decoder<'a> {
    r: BitReader<'a>,
}

impl Decoder<'_> {
    fn gamma(&mut self, field: &'static str) -> Result<usize, CodecError> {
        let k = self.r.read_gamma().map_err(|_| CodecError::Truncated { field })?;
        if k > MAX_FIELD {
            return Err(CodecError::BadHeader("field value out of range"));
        }
        Ok(k as usize)
    }

    fn need(&self, bits: usize, field: &'static str) -> Result<(), CodecError> {
        if bits > self.r.remaining() {
            return Err(CodecError::Truncated { field });
        }
        Ok(())
    }

    fn bits(&mut self, n: usize, field: &'static str) -> Result<BitString, CodecError> {
        self.need(n, field)?;
        self.r
            .read_bitstring(n)
            .map_err(|_: BitError| CodecError::Truncated { field })
    }

    fn value(&mut self, width: usize, field: &'static str) -> Result<u64, CodecError> {
        self.need(width, field)?;
        self.r.read_bits(width).map_err(|_| CodecError::Truncated { field })
    }

    /// Adjacency and labels of a `v`-vertex graph. Label range is checked
    /// here; structure (acyclicity, in-degree) is checked by the caller once
    /// the whole graph is known.
    fn graph(
        &mut self,
        v: usize,
        num_inputs: usize,
        macros: &[MacroDef],
    ) -> Result<(Vec<StructuredLabel>, Vec<Vec<usize>>), CodecError> {
        self.need(v.saturating_mul(v), "adjacency")?;
        let mut in_edges = vec![Vec::new(); v];
        for i in 0..v {
            for srcs in in_edges.iter_mut() {
                if self
                    .r
                    .read_bit()
                    .map_err(|_| CodecError::Truncated { field: "adjacency" })?
                {
                    srcs.push(i);
                }
            }
        }
        let lw = field_width(label_space(num_inputs, macros));
        self.need(v * lw, "labels")?;
        let mut labels = Vec::with_capacity(v);
        for vertex in 0..v {
            let code = self.value(lw, "labels")?;
            labels.push(label_from_code(code, num_inputs, macros).ok_or(CircuitError::BadLabel { vertex })?);
        }
        Ok((labels, in_edges))
    }

    fn outputs(&mut self, count: usize, v: usize) -> Result<Vec<usize>, CodecError> {
        let ow = field_width(v);
        self.need(count.saturating_mul(ow), "outputs")?;
        let mut out = Vec::with_capacity(count);
        for index in 0..count {
            let o = self.value(ow, "outputs")? as usize;
            if o >= v {
                return Err(CircuitError::BadOutput { index }.into());
            }
            out.push(o);
        }
        Ok(out)
    }
}

fn decode_raw(kind: Kind, b: &BitString) -> Result<RawMachine, CodecError> {
    let mut d = Decoder { r: BitReader::new(b) };
    let mut macros = MacroLibrary::default();
    if kind == Kind::Structured {
        let count = d.gamma("macro count")? - 1;
        for _ in 0..count {
            let arity = d.gamma("macro arity")?;
            let v = d.gamma("macro size")?;
            let (labels, in_edges) = d.graph(v, arity, &macros.macros)?;
            let outs = d.gamma("macro output count")?;
            let outputs = d.outputs(outs, v)?;
            let body = StructuredCircuit {
                num_inputs: arity,
                labels,
                in_edges,
                outputs,
            };
            body.validate(&macros.macros)?;
            macros.macros.push(MacroDef { body });
        }
    }
    let v = d.gamma("V")?;
    let n_u = d.gamma("N_u")? - 1;
    let n_s = d.gamma("N_s")? - 1;
    let n_m = d.gamma("N_m")? - 1;
    let n_r = d.gamma("N_r")? - 1;
    let n_z = if kind == Kind::Conditional {
        d.gamma("N_z")? - 1
    } else {
        0
    };
    let l_y = d.gamma("L_y")?;
    if n_m > l_y {
        return Err(CodecError::BadHeader("N_m exceeds L_y"));
    }
    let widths = Widths {
        n_u,
        n_z,
        n_s,
        n_m,
        n_r,
        l_y,
    };
    let s1 = d.bits(n_s, "s_1")?;
    let (labels, in_edges) = d.graph(v, widths.num_inputs(), &macros.macros)?;
    let outputs = d.outputs(widths.num_outputs(), v)?;
    let main = StructuredCircuit {
        num_inputs: widths.num_inputs(),
        labels,
        in_edges,
        outputs,
    };
    main.validate(&macros.macros)?;
    let n = d.gamma("n")?;
    let u = d.bits(n_u, "u")?;
    let m_len = widths
        .steps(n)
        .checked_mul(n_m)
        .ok_or(CodecError::Truncated { field: "m" })?;
    let m = d.bits(m_len, "m")?;
    if !d.r.is_at_end() {
        return Err(CodecError::TrailingBits { extra: d.r.remaining() });
    }
    Ok(RawMachine {
        kind,
        widths,
        s1,
        macros,
        main,
        n,
        u,
        m,
    })
}

fn flatten(c: StructuredCircuit) -> Result<Circuit, CodecError> {
    let labels = c
        .labels
        .iter()
        .map(|l| match *l {
            StructuredLabel::Gate(g) => Ok(g),
            StructuredLabel::Macro { .. } => Err(CodecError::BadHeader("macro label in flat circuit")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Circuit::new(c.num_inputs, labels, c.in_edges, c.outputs)?)
}

/// Bits taken by the adjacency and labels of a `v`-vertex graph.
pub(crate) fn graph_len(v: usize, num_inputs: usize, macros: &[MacroDef]) -> usize {
    v * v + v * field_width(label_space(num_inputs, macros))
}

/// Bits taken by one macro definition.
pub(crate) fn macro_len(m: &MacroDef, earlier: &[MacroDef]) -> usize {
    let v = m.body.labels.len();
    gamma_len(m.arity() as u64)
        + gamma_len(v as u64)
        + graph_len(v, m.arity(), earlier)
        + gamma_len(m.num_outputs() as u64)
        + m.num_outputs() * field_width(v)
}

/// Payload length computed from the fields, without materializing the bits.
/// Agrees with the encoders; used where the payload itself would be huge.
pub fn payload_len(kind: Kind, w: &Widths, macros: &MacroLibrary, v: usize, n: usize) -> usize {
    let mut len = 0;
    if kind == Kind::Structured {
        len += gamma_len(macros.len() as u64 + 1);
        for (i, m) in macros.macros.iter().enumerate() {
            len += macro_len(m, &macros.macros[..i]);
        }
    }
    let g = |k: usize| gamma_len(k as u64);
    len += g(v) + g(w.n_u + 1) + g(w.n_s + 1) + g(w.n_m + 1) + g(w.n_r + 1) + g(w.l_y);
    if kind == Kind::Conditional {
        len += g(w.n_z + 1);
    }
    len + w.n_s
        + graph_len(v, w.num_inputs(), &macros.macros)
        + w.num_outputs() * field_width(v)
        + g(n)
        + w.n_u
        + w.steps(n) * w.n_m
}

/// `|C|` of a flat oc-circuit.
pub fn oc_circuit_len(c: &OcCircuit) -> usize {
    payload_len(
        Kind::Flat,
        &c.widths(),
        &MacroLibrary::default(),
        c.logic.circuit.labels.len(),
        c.n,
    )
}

/// Canonical payload of a flat oc-circuit; its length is `|C|`.
pub fn encode_oc_circuit(c: &OcCircuit) -> Result<BitString, CodecError> {
    c.validate()?;
    let l = &c.logic;
    Ok(encode_raw(&RawMachine {
        kind: Kind::Flat,
        widths: l.widths(),
        s1: l.s1.clone(),
        macros: MacroLibrary::default(),
        main: StructuredCircuit::from_flat(&l.circuit),
        n: c.n,
        u: c.u.clone(),
        m: c.m.clone(),
    }))
}

pub fn decode_oc_circuit(b: &BitString) -> Result<OcCircuit, CodecError> {
    let r = decode_raw(Kind::Flat, b)?;
    let w = r.widths;
    let logic = OcLogic {
        circuit: flatten(r.main)?,
        n_u: w.n_u,
        n_s: w.n_s,
        n_m: w.n_m,
        n_r: w.n_r,
        l_y: w.l_y,
        s1: r.s1,
    };
    Ok(OcCircuit::new(logic, r.u, r.n, r.m)?)
}

pub fn encode_conditional(c: &ConditionalOcCircuit) -> Result<BitString, CodecError> {
    c.validate()?;
    let l = &c.logic;
    Ok(encode_raw(&RawMachine {
        kind: Kind::Conditional,
        widths: l.widths(),
        s1: l.s1.clone(),
        macros: MacroLibrary::default(),
        main: StructuredCircuit::from_flat(&l.circuit),
        n: c.n,
        u: c.u.clone(),
        m: c.m.clone(),
    }))
}

pub fn decode_conditional(b: &BitString) -> Result<ConditionalOcCircuit, CodecError> {
    let r = decode_raw(Kind::Conditional, b)?;
    let w = r.widths;
    let logic = ConditionalOcLogic {
        circuit: flatten(r.main)?,
        n_u: w.n_u,
        n_z: w.n_z,
        n_s: w.n_s,
        n_m: w.n_m,
        n_r: w.n_r,
        l_y: w.l_y,
        s1: r.s1,
    };
    Ok(ConditionalOcCircuit::new(logic, r.u, r.n, r.m)?)
}

pub fn encode_structured(c: &StructuredOcCircuit) -> Result<BitString, CodecError> {
    c.validate()?;
    let l = &c.logic;
    Ok(encode_raw(&RawMachine {
        kind: Kind::Structured,
        widths: l.widths(),
        s1: l.s1.clone(),
        macros: l.macros.clone(),
        main: l.circuit.clone(),
        n: c.n,
        u: c.u.clone(),
        m: c.m.clone(),
    }))
}

pub fn decode_structured(b: &BitString) -> Result<StructuredOcCircuit, CodecError> {
    let r = decode_raw(Kind::Structured, b)?;
    let w = r.widths;
    let logic = StructuredOcLogic {
        macros: r.macros,
        circuit: r.main,
        n_u: w.n_u,
        n_s: w.n_s,
        n_m: w.n_m,
        n_r: w.n_r,
        l_y: w.l_y,
        s1: r.s1,
    };
    Ok(StructuredOcCircuit::new(logic, r.u, r.n, r.m)?)
}

/// Any decoded machine, as read from a container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyMachine {
    Flat(OcCircuit),
    Conditional(ConditionalOcCircuit),
    Structured(StructuredOcCircuit),
}

impl AnyMachine {
    pub fn kind(&self) -> Kind {
        match self {
            AnyMachine::Flat(_) => Kind::Flat,
            AnyMachine::Conditional(_) => Kind::Conditional,
            AnyMachine::Structured(_) => Kind::Structured,
        }
    }

    pub fn encode(&self) -> Result<BitString, CodecError> {
        match self {
            AnyMachine::Flat(c) => encode_oc_circuit(c),
            AnyMachine::Conditional(c) => encode_conditional(c),
            AnyMachine::Structured(c) => encode_structured(c),
        }
    }

    pub fn decode(kind: Kind, b: &BitString) -> Result<Self, CodecError> {
        Ok(match kind {
            Kind::Flat => AnyMachine::Flat(decode_oc_circuit(b)?),
            Kind::Conditional => AnyMachine::Conditional(decode_conditional(b)?),
            Kind::Structured => AnyMachine::Structured(decode_structured(b)?),
        })
    }
}

/// Magic, 8-byte big-endian payload bit length, payload padded to bytes.
pub fn write_container(kind: Kind, payload: &BitString) -> Vec<u8> {
    let mut out = kind.magic().to_vec();
    out.extend_from_slice(&(payload.len() as u64).to_be_bytes());
    out.extend_from_slice(&payload.to_bytes());
    out
}

/// Inverse of [`write_container`]. The flat magic is a prefix of the other
/// two; the byte after it disambiguates because a flat container continues
/// with the high byte of the length, which is zero.
pub fn read_container(bytes: &[u8]) -> Result<(Kind, BitString), CodecError> {
    let bad = |m: &str| CodecError::Container(m.to_string());
    if !bytes.starts_with(b"OCC1") {
        return Err(bad("missing OCC1 magic"));
    }
    let kind = match bytes.get(4) {
        Some(b'C') => Kind::Conditional,
        Some(b'S') => Kind::Structured,
        _ => Kind::Flat,
    };
    let rest = &bytes[kind.magic().len()..];
    if rest.len() < 8 {
        return Err(bad("truncated length field"));
    }
    let nbits = u64::from_be_bytes(rest[..8].try_into().expect("8 bytes"));
    let body = &rest[8..];
    let nbits = usize::try_from(nbits).map_err(|_| bad("length out of range"))?;
    if body.len() != nbits.div_ceil(8) {
        return Err(bad("payload size does not match the length field"));
    }
    if nbits % 8 != 0 && body[body.len() - 1] & (0xff >> (nbits % 8)) != 0 {
        return Err(bad("non-zero padding"));
    }
    let payload = BitString::from_bytes(body, nbits).map_err(|e| CodecError::Container(e.to_string()))?;
    Ok((kind, payload))
}

/// Reads and decodes a container in one go.
pub fn read_machine(bytes: &[u8]) -> Result<AnyMachine, CodecError> {
    let (kind, payload) = read_container(bytes)?;
    AnyMachine::decode(kind, &payload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{synth_from_table, TruthTable};
    use crate::ocmachine::fixtures::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ones_4_length_by_hand() {
        // gamma(2) gamma(2) gamma(2) gamma(1) gamma(1) gamma(1): 12
        // s_1: 1; adjacency 2x2: 4; labels 2 x ceil(log2 5): 6
        // outputs 2 x 1: 2; gamma(4): 5; u: 1
        let b = encode_oc_circuit(&ones(4)).unwrap();
        assert_eq!(b.len(), 12 + 1 + 4 + 6 + 2 + 5 + 1);
        assert_eq!(b.len(), 31);
        assert_eq!(b.to_string(), "0100100101110000000000110001001");
    }

    #[test]
    fn coin_4_length_by_hand() {
        // gamma(2) gamma(1) gamma(2) gamma(1) gamma(2) gamma(1): 12
        // s_1: 1; adjacency: 4; labels: 6; outputs: 2; gamma(4): 5; u: 0
        let b = encode_oc_circuit(&coin(4)).unwrap();
        assert_eq!(b.len(), 30);
        assert_eq!(oc_circuit_len(&coin(4)), 30);
        assert_eq!(oc_circuit_len(&ones(4)), 31);
    }

    #[test]
    fn fixtures_round_trip() {
        for c in [ones(4), coin(4), ones(1), coin(9), echo(&"1011".parse().unwrap())] {
            let b = encode_oc_circuit(&c).unwrap();
            assert_eq!(decode_oc_circuit(&b).unwrap(), c);
        }
    }

    #[test]
    fn empty_string_is_truncated() {
        let e = decode_oc_circuit(&BitString::new()).unwrap_err();
        assert_eq!(e.reason(), "truncated");
    }

    #[test]
    fn self_loop_is_cycle() {
        // Adjacency starts right after the 12 header bits and 1 state bit.
        let mut b = encode_oc_circuit(&ones(4)).unwrap();
        b.flip(13);
        assert_eq!(decode_oc_circuit(&b).unwrap_err().reason(), "cycle");
    }

    #[test]
    fn trailing_bits_rejected() {
        let mut b = encode_oc_circuit(&ones(4)).unwrap();
        b.push(false);
        assert_eq!(
            decode_oc_circuit(&b).unwrap_err(),
            CodecError::TrailingBits { extra: 1 }
        );
    }

    #[test]
    fn out_of_range_label_rejected() {
        // Labels of ones(4) sit at bits 17..23 with width 3; code 7 > N + 2.
        let mut b = encode_oc_circuit(&ones(4)).unwrap();
        for i in 17..20 {
            b.set(i, true);
        }
        assert_eq!(decode_oc_circuit(&b).unwrap_err().reason(), "bad-label");
    }

    #[test]
    fn container_round_trip() {
        for kind in [Kind::Flat, Kind::Conditional, Kind::Structured] {
            let b = encode_oc_circuit(&ones(4)).unwrap();
            let bytes = write_container(kind, &b);
            assert_eq!(&bytes[..kind.magic().len()], kind.magic());
            assert_eq!(read_container(&bytes).unwrap(), (kind, b));
        }
        assert!(read_container(b"OCC2").is_err());
        let mut bytes = write_container(Kind::Flat, &encode_oc_circuit(&ones(4)).unwrap());
        *bytes.last_mut().unwrap() |= 1;
        assert!(read_container(&bytes).is_err());
        assert_eq!(
            read_machine(&write_container(Kind::Flat, &encode_oc_circuit(&coin(4)).unwrap())).unwrap(),
            AnyMachine::Flat(coin(4))
        );
    }

    #[test]
    fn conditional_round_trip_and_header_position() {
        let circuit = Circuit::pass_through(1, &[0], vec![0]).unwrap();
        let logic = ConditionalOcLogic {
            circuit,
            n_u: 0,
            n_z: 1,
            n_s: 0,
            n_m: 0,
            n_r: 0,
            l_y: 1,
            s1: BitString::new(),
        };
        let c = ConditionalOcCircuit::new(logic, BitString::new(), 3, BitString::new()).unwrap();
        let b = encode_conditional(&c).unwrap();
        // gamma(V = 1), four gamma(1) widths, gamma(N_z + 1 = 2), gamma(L_y = 1)
        assert_eq!(b.slice(0, 9).to_string(), "111110101");
        assert_eq!(decode_conditional(&b).unwrap(), c);
        // The same bits are not a valid flat payload of the same machine.
        assert_ne!(
            decode_oc_circuit(&b).ok().map(|x| encode_oc_circuit(&x).unwrap()),
            Some(b)
        );
    }

    #[test]
    fn structured_round_trip() {
        let lib = MacroLibrary::new(vec![nand_macro(), xor_from_nand_macro(0)]).unwrap();
        let logic = StructuredOcLogic {
            macros: lib,
            circuit: apply_binary_macro(1),
            n_u: 0,
            n_s: 0,
            n_m: 0,
            n_r: 2,
            l_y: 1,
            s1: BitString::new(),
        };
        let c = StructuredOcCircuit::new(logic, BitString::new(), 2, BitString::new()).unwrap();
        let b = encode_structured(&c).unwrap();
        assert_eq!(decode_structured(&b).unwrap(), c);
        let w = c.logic.widths();
        assert_eq!(
            payload_len(Kind::Structured, &w, &c.logic.macros, c.logic.circuit.labels.len(), c.n),
            b.len()
        );
        // A flat machine is a structured one with an empty table, one bit longer.
        let flat = coin(3);
        let sb = encode_structured(&StructuredOcCircuit::from_flat(&flat)).unwrap();
        assert_eq!(sb.len(), encode_oc_circuit(&flat).unwrap().len() + 1);
    }

    #[test]
    fn random_strings_never_panic() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0cc1);
        let mut accepted = 0usize;
        for _ in 0..1_000_000 {
            let len = rng.gen_range(0..=64);
            let b = BitString::from_bits((0..len).map(|_| rng.gen()).collect());
            match decode_oc_circuit(&b) {
                Ok(c) => {
                    accepted += 1;
                    assert_eq!(encode_oc_circuit(&c).unwrap(), b);
                }
                Err(e) => assert!(!e.reason().is_empty()),
            }
            let _ = decode_conditional(&b);
            let _ = decode_structured(&b);
        }
        assert!(accepted > 0);
    }

    fn arb_machine() -> impl Strategy<Value = OcCircuit> {
        (
            0usize..2,
            0usize..2,
            0usize..2,
            0usize..2,
            1usize..3,
            1usize..6,
            any::<u64>(),
        )
            .prop_map(|(n_u, n_s, n_m, n_r, l_y, n, seed)| {
                let n_m = n_m.min(l_y);
                let ins = n_u + n_s + n_m + n_r;
                let outs = n_s + l_y;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let circuit = if ins == 0 {
                    // No inputs means no valid circuit; use a pass-through machine.
                    return fixtures_with_outputs(outs, n);
                } else {
                    let rows = (0..1usize << ins)
                        .map(|_| BitString::from_bits((0..outs).map(|_| rng.gen()).collect()))
                        .collect();
                    synth_from_table(&TruthTable::new(ins, outs, rows).unwrap()).unwrap()
                };
                let logic = OcLogic {
                    circuit,
                    n_u,
                    n_s,
                    n_m,
                    n_r,
                    l_y,
                    s1: BitString::from_bits((0..n_s).map(|_| rng.gen()).collect()),
                };
                let k = n.div_ceil(l_y);
                let u = BitString::from_bits((0..n_u).map(|_| rng.gen()).collect());
                let m = BitString::from_bits((0..k * n_m).map(|_| rng.gen()).collect());
                OcCircuit::new(logic, u, n, m).unwrap()
            })
    }

    fn fixtures_with_outputs(outs: usize, n: usize) -> OcCircuit {
        let circuit = Circuit::pass_through(outs, &[0], vec![0; outs]).unwrap();
        let logic = OcLogic {
            circuit,
            n_u: 1,
            n_s: outs - 1,
            n_m: 0,
            n_r: 0,
            l_y: 1,
            s1: BitString::zeros(outs - 1),
        };
        OcCircuit::new(logic, BitString::ones(1), n, BitString::new()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn round_trip(c in arb_machine()) {
            let b = encode_oc_circuit(&c).unwrap();
            prop_assert_eq!(oc_circuit_len(&c), b.len());
            prop_assert_eq!(decode_oc_circuit(&b).unwrap(), c.clone());
            let bytes = write_container(Kind::Flat, &b);
            prop_assert_eq!(read_machine(&bytes).unwrap(), AnyMachine::Flat(c));
        }

        #[test]
        fn accepted_payloads_are_canonical(bits in proptest::collection::vec(any::<bool>(), 0..48)) {
            let b = BitString::from_bits(bits);
            if let Ok(c) = decode_oc_circuit(&b) {
                prop_assert_eq!(encode_oc_circuit(&c).unwrap(), b);
            }
        }
    }
}
