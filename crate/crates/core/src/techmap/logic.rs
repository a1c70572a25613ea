// SPDX-License-Identifier: Apache-2.0

//! Technology-independent logic network: leaf generators, graph nodes, the
//! group-propagate network, carry conversion and sum bits, all in positive
//! logic. Polarity is assigned separately.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::ling::Operands;
use crate::prefix::{NodeId, NodeKind, PrefixGraph, Span};

pub type VertexId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }

    /// Odd levels carry true values, even levels complemented ones.
    pub fn from_level(level: i32) -> Self {
        if level.rem_euclid(2) == 1 {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }

    pub fn is_negative(self) -> bool {
        self == Polarity::Negative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Input,
    And2,
    Or2,
    /// `x0 + x1 x2`
    Ao21,
    /// `x0 x1 + x2 x3`
    Ao22,
    Xor2,
    /// The carry-out port; reads one vertex and produces nothing.
    Port,
}

impl Op {
    pub fn arity(self) -> usize {
        match self {
            Op::Input => 0,
            Op::Port => 1,
            Op::And2 | Op::Or2 | Op::Xor2 => 2,
            Op::Ao21 => 3,
            Op::Ao22 => 4,
        }
    }

    pub fn eval(self, x: &[bool]) -> bool {
        match self {
            Op::Input => false,
            Op::Port => x[0],
            Op::And2 => x[0] & x[1],
            Op::Or2 => x[0] | x[1],
            Op::Ao21 => x[0] | (x[1] & x[2]),
            Op::Ao22 => (x[0] & x[1]) | (x[2] & x[3]),
            Op::Xor2 => x[0] ^ x[1],
        }
    }

    /// Reads either input polarity without cost.
    pub fn polarity_agnostic(self) -> bool {
        self == Op::Xor2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub op: Op,
    pub inputs: Vec<VertexId>,
    /// Leaf generators and ports have a polarity that cannot be flipped.
    pub fixed: Option<Polarity>,
    pub level: i32,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PFlavor {
    /// From XOR-form bit propagates.
    Xor,
    /// From OR-form bit propagates.
    Or,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogicNet {
    pub width: usize,
    pub vertices: Vec<Vertex>,
    pub a: Vec<VertexId>,
    pub b: Vec<VertexId>,
    pub cin: VertexId,
    pub sums: Vec<VertexId>,
    pub cout: VertexId,
    /// Vertex of each prefix graph node.
    pub node_vertex: Vec<VertexId>,
    /// Multi-bit group propagates that were built.
    pub p_spans: BTreeMap<(Span, PFlavor), VertexId>,
}

impl LogicNet {
    pub fn is_input(&self, v: VertexId) -> bool {
        self.vertices[v].op == Op::Input
    }

    /// Consumers of each vertex.
    pub fn fanouts(&self) -> Vec<Vec<VertexId>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (id, v) in self.vertices.iter().enumerate() {
            for &u in &v.inputs {
                out[u].push(id);
            }
        }
        out
    }

    /// Level-parity polarity, overridden by fixed polarities.
    pub fn natural_polarity(&self) -> Vec<Polarity> {
        self.vertices.iter().map(|v| v.fixed.unwrap_or_else(|| Polarity::from_level(v.level))).collect()
    }

    /// Positive-logic value of every vertex.
    pub fn eval(&self, ops: &Operands) -> Vec<bool> {
        let mut val = vec![false; self.vertices.len()];
        for i in 0..self.width {
            val[self.a[i]] = ops.a >> i & 1 == 1;
            val[self.b[i]] = ops.b >> i & 1 == 1;
        }
        val[self.cin] = ops.cin;
        let mut args = Vec::with_capacity(4);
        for (id, v) in self.vertices.iter().enumerate() {
            if v.op == Op::Input {
                continue;
            }
            args.clear();
            args.extend(v.inputs.iter().map(|&u| val[u]));
            val[id] = v.op.eval(&args);
        }
        val
    }

    /// Sum bits and carry-out for one operand pair.
    pub fn add(&self, ops: &Operands) -> (u128, bool) {
        let val = self.eval(ops);
        let sum = self.sums.iter().enumerate().fold(0u128, |acc, (i, &s)| acc | (val[s] as u128) << i);
        (sum, val[self.cout])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Gen(usize),
    Xor(usize),
    Or(usize),
    P(Span, PFlavor),
    Node(NodeId),
    Carry(usize),
}

struct Builder<'g> {
    g: &'g PrefixGraph,
    net: LogicNet,
    memo: HashMap<Key, VertexId>,
}

impl Builder<'_> {
    fn push(&mut self, op: Op, inputs: Vec<VertexId>, fixed: Option<Polarity>, label: String) -> VertexId {
        let level = 1 + inputs.iter().map(|&u| self.net.vertices[u].level).max().unwrap_or(-1);
        self.net.vertices.push(Vertex { op, inputs, fixed, level, label });
        self.net.vertices.len() - 1
    }

    /// Leaf generators sit at level 0 with a fixed polarity.
    fn push_leaf(&mut self, op: Op, inputs: Vec<VertexId>, fixed: Polarity, label: String) -> VertexId {
        self.net.vertices.push(Vertex { op, inputs, fixed: Some(fixed), level: 0, label });
        self.net.vertices.len() - 1
    }

    fn memo(&mut self, key: Key, make: impl FnOnce(&mut Self) -> VertexId) -> VertexId {
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = make(self);
        self.memo.insert(key, v);
        v
    }

    fn x(&mut self, i: usize) -> VertexId {
        self.memo(Key::Xor(i), |s| {
            let fixed = if i == 0 { Polarity::Positive } else { Polarity::Negative };
            let (a, b) = (s.net.a[i], s.net.b[i]);
            s.push_leaf(Op::Xor2, vec![a, b], fixed, format!("x{i}"))
        })
    }

    fn t(&mut self, i: usize) -> VertexId {
        self.memo(Key::Or(i), |s| {
            let (a, b) = (s.net.a[i], s.net.b[i]);
            s.push_leaf(Op::Or2, vec![a, b], Polarity::Negative, format!("t{i}"))
        })
    }

    /// Bit generate. Bit 0 absorbs the carry-in as `a0 b0 + t0 cin`, with a
    /// true-polarity `t0` so the whole term is one inverting gate.
    fn gen(&mut self, i: usize) -> VertexId {
        self.memo(Key::Gen(i), |s| {
            let (a, b) = (s.net.a[i], s.net.b[i]);
            if i == 0 {
                let t0 = s.push_leaf(Op::Or2, vec![a, b], Polarity::Positive, "t0".into());
                let cin = s.net.cin;
                s.push_leaf(Op::Ao22, vec![a, b, t0, cin], Polarity::Negative, "g0".into())
            } else {
                s.push_leaf(Op::And2, vec![a, b], Polarity::Negative, format!("g{i}"))
            }
        })
    }

    fn p_split(&self, span: Span) -> usize {
        let g = self.g;
        let (a, b) = (span.hi, span.lo);
        let internal = |s: Span| g.find(s).filter(|&id| !g.node(id).is_leaf());
        if let Some(id) = internal(span) {
            return g.mid(id).expect("internal node");
        }
        if a + 1 < g.width() {
            if let Some(id) = internal(Span::new(a + 1, b + 1)) {
                return g.mid(id).expect("internal node") - 1;
            }
            if let Some(id) = internal(Span::new(a + 1, b)) {
                let m = g.mid(id).expect("internal node");
                if m > b && m <= a {
                    return m;
                }
            }
        }
        if g.find(Span::new(a, b + 1)).is_some() {
            return b + 1;
        }
        b + span.len() / 2
    }

    fn p(&mut self, span: Span, flavor: PFlavor) -> VertexId {
        if span.is_leaf() {
            return match flavor {
                PFlavor::Xor => self.x(span.hi),
                PFlavor::Or => self.t(span.hi),
            };
        }
        if let Some(&v) = self.memo.get(&Key::P(span, flavor)) {
            return v;
        }
        let (hi, lo) = span.split(self.p_split(span));
        let vh = self.p(hi, flavor);
        let vl = self.p(lo, flavor);
        let name = match flavor {
            PFlavor::Xor => "P",
            PFlavor::Or => "T",
        };
        let v = self.push(Op::And2, vec![vh, vl], None, format!("{name}{span}"));
        self.memo.insert(Key::P(span, flavor), v);
        self.net.p_spans.insert((span, flavor), v);
        v
    }

    fn node(&mut self, id: NodeId) -> VertexId {
        if let Some(&v) = self.memo.get(&Key::Node(id)) {
            return v;
        }
        let node = self.g.node(id).clone();
        let i = node.span.hi;
        let v = match node.children() {
            None => self.gen(i),
            Some((h, l)) => {
                let (hn, ln) = (self.g.node(h).clone(), self.g.node(l).clone());
                let m = hn.span.lo;
                let ling_lo = ln.kind == NodeKind::Ling;
                let label = match node.kind {
                    NodeKind::Ling => format!("H{}", node.span),
                    _ => format!("G{}", node.span),
                };
                match node.kind {
                    NodeKind::Ling if hn.is_leaf() && ln.is_leaf() && ln.span.lo != 0 => {
                        // g_i + g_{i-1} straight from the operand bits.
                        let (a, b) = (&self.net.a, &self.net.b);
                        let inputs = vec![a[i], b[i], a[i - 1], b[i - 1]];
                        self.push_leaf(Op::Ao22, inputs, Polarity::Negative, label)
                    }
                    NodeKind::Ling if hn.is_leaf() && !ling_lo => {
                        let (gi, lo) = (self.gen(i), self.node(l));
                        self.push(Op::Or2, vec![gi, lo], None, label)
                    }
                    NodeKind::Ling => {
                        let hi = if hn.is_leaf() { self.gen(i) } else { self.node(h) };
                        let lo = self.node(l);
                        let p = if ling_lo {
                            self.p(Span::new(i - 1, m - 1), PFlavor::Or)
                        } else {
                            self.p(Span::new(i - 1, m), PFlavor::Xor)
                        };
                        self.push(Op::Ao21, vec![hi, p, lo], None, label)
                    }
                    _ => {
                        let hi = self.node(h);
                        let lo = self.node(l);
                        let p = if ling_lo {
                            self.p(Span::new(i, m - 1), PFlavor::Or)
                        } else {
                            self.p(Span::new(i, m), PFlavor::Xor)
                        };
                        if hn.kind == NodeKind::Ling {
                            let ti = self.t(i);
                            self.push(Op::Ao22, vec![ti, hi, p, lo], None, label)
                        } else {
                            self.push(Op::Ao21, vec![hi, p, lo], None, label)
                        }
                    }
                }
            }
        };
        self.memo.insert(Key::Node(id), v);
        v
    }

    /// True carry into column `c` (`1..=n`).
    fn carry(&mut self, c: usize) -> VertexId {
        let o = self.g.outputs()[c - 1];
        self.memo(Key::Carry(c), |s| {
            let h = s.node(o);
            if s.g.node(o).kind == NodeKind::Ling {
                let t = s.t(c - 1);
                s.push(Op::And2, vec![t, h], None, format!("c{c}"))
            } else {
                h
            }
        })
    }
}

/// Builds the full adder logic for a (possibly hybrid) prefix graph.
pub fn build_logic(graph: &PrefixGraph) -> LogicNet {
    let n = graph.width();
    let mut vertices = Vec::new();
    let mut input = |label: String| {
        vertices.push(Vertex { op: Op::Input, inputs: vec![], fixed: Some(Polarity::Positive), level: -1, label });
        vertices.len() - 1
    };
    let a = (0..n).map(|i| input(format!("a{i}"))).collect();
    let b = (0..n).map(|i| input(format!("b{i}"))).collect();
    let cin = input("cin".into());
    let net = LogicNet {
        width: n,
        vertices,
        a,
        b,
        cin,
        sums: Vec::new(),
        cout: 0,
        node_vertex: Vec::new(),
        p_spans: BTreeMap::new(),
    };
    let mut s = Builder { g: graph, net, memo: HashMap::new() };
    s.net.node_vertex = (0..graph.nodes().len()).map(|id| s.node(id)).collect();
    for i in 0..n {
        let c = if i == 0 { s.net.cin } else { s.carry(i) };
        let x = s.x(i);
        let v = s.push(Op::Xor2, vec![x, c], Some(Polarity::Positive), format!("s{i}"));
        s.net.sums.push(v);
    }
    let c = s.carry(n);
    s.net.cout = s.push(Op::Port, vec![c], Some(Polarity::Negative), "cout".into());
    s.net
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ling::{hybridize, CoarseModel};
    use crate::prefix::{make_classical, Arch};

    fn exhaustive_ok(net: &LogicNet) {
        let n = net.width;
        for a in 0..1u64 << n {
            for b in 0..1u64 << n {
                for cin in [false, true] {
                    let want = a as u128 + b as u128 + cin as u128;
                    let (sum, cout) = net.add(&Operands { a, b, cin });
                    assert_eq!(sum | (cout as u128) << n, want, "{a}+{b}+{cin}");
                }
            }
        }
    }

    #[test]
    fn classical_and_hybrid_logic_adds() {
        for n in [1, 2, 3, 5, 8] {
            for arch in Arch::ALL {
                let g = make_classical(arch, n).unwrap();
                exhaustive_ok(&build_logic(&g));
                exhaustive_ok(&build_logic(&hybridize(&g, &CoarseModel::default()).graph));
            }
        }
    }

    #[test]
    fn no_propagate_reaches_bit_zero() {
        for arch in Arch::ALL {
            let g = hybridize(&make_classical(arch, 16).unwrap(), &CoarseModel::default()).graph;
            let net = build_logic(&g);
            assert!(net.p_spans.keys().all(|(s, _)| s.lo > 0), "{arch}");
        }
    }
}
