// SPDX-License-Identifier: Apache-2.0

//! Hybrid prefix/Ling carry networks.
//!
//! A Ling node over `[i:j]` produces the pseudo-carry `H = g_i + G[i-1:j]`,
//! related to the group generate by `G[i:j] = t_i * H[i:j]` where `t` is the
//! OR-form propagate. For a node with high child `[i:m]` and low child
//! `[m-1:j]` the combining rules are:
//!
//! | node   | high   | low    | function                        |
//! |--------|--------|--------|---------------------------------|
//! | prefix | G      | G      | `G_hi + X[i:m] G_lo`            |
//! | prefix | G      | H      | `G_hi + T[i:m-1] H_lo`          |
//! | prefix | H      | G      | `t_i H_hi + X[i:m] G_lo`        |
//! | prefix | H      | H      | `t_i H_hi + T[i:m-1] H_lo`      |
//! | Ling   | leaf   | G/leaf | `g_i + G_lo`                    |
//! | Ling   | leaf   | H      | `g_i + t_{i-1} H_lo`            |
//! | Ling   | H      | G/leaf | `H_hi + X[i-1:m] G_lo`          |
//! | Ling   | H      | H      | `H_hi + T[i-1:m-1] H_lo`        |
//!
//! `X` and `T` are group propagates built from XOR-form and OR-form bits.
//! A Ling node never has a prefix node as its high child.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::library::CellLibrary;
use crate::prefix::{AdapterDoc, GraphDoc, GraphError, NodeId, NodeKind, PrefixGraph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LingError {
    #[error("node {0} is not a Ling node")]
    KindMismatch(NodeId),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unknown adapter rule '{0}'")]
    UnknownRule(String),
}

/// Per-bit input signals; bit 0's generate has the carry-in folded in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeafSignals {
    pub g: bool,
    pub p_xor: bool,
    pub p_or: bool,
}

impl LeafSignals {
    pub fn new(a: bool, b: bool) -> Self {
        LeafSignals { g: a & b, p_xor: a ^ b, p_or: a | b }
    }
}

/// Operand bit `i` of `a`, `b` and the folded carry-in.
#[derive(Debug, Clone, Copy)]
pub struct Operands {
    pub a: u64,
    pub b: u64,
    pub cin: bool,
}

impl Operands {
    pub fn leaf(&self, i: usize) -> LeafSignals {
        LeafSignals::new(self.a >> i & 1 == 1, self.b >> i & 1 == 1)
    }

    /// Generate of bit `i`; bit 0 absorbs the carry-in.
    pub fn g(&self, i: usize) -> bool {
        let l = self.leaf(i);
        if i == 0 {
            l.g | (l.p_xor & self.cin)
        } else {
            l.g
        }
    }

    fn group_x(&self, hi: usize, lo: usize) -> bool {
        (lo..=hi).all(|k| self.leaf(k).p_xor)
    }

    fn group_t(&self, hi: usize, lo: usize) -> bool {
        (lo..=hi).all(|k| self.leaf(k).p_or)
    }
}

/// Small Boolean expression over operand signals and graph-node values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    G(usize),
    PXor(usize),
    POr(usize),
    Node(NodeId),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl Expr {
    /// `nodes[id]` supplies the value of [`Expr::Node`] terms.
    pub fn eval(&self, ops: &Operands, nodes: &[bool]) -> bool {
        match self {
            Expr::G(i) => ops.g(*i),
            Expr::PXor(i) => ops.leaf(*i).p_xor,
            Expr::POr(i) => ops.leaf(*i).p_or,
            Expr::Node(id) => nodes[*id],
            Expr::And(xs) => xs.iter().all(|x| x.eval(ops, nodes)),
            Expr::Or(xs) => xs.iter().any(|x| x.eval(ops, nodes)),
        }
    }
}

/// The true group generate of a Ling node: `t_i * H[i:j]`.
pub fn ling_to_carry(graph: &PrefixGraph, id: NodeId) -> Result<Expr, LingError> {
    let node = graph.node(id);
    if node.kind != NodeKind::Ling {
        return Err(LingError::KindMismatch(id));
    }
    Ok(Expr::And(vec![Expr::POr(node.span.hi), Expr::Node(id)]))
}

/// Evaluates every node's own signal (G for prefix nodes and leaves, H for
/// Ling nodes) directly from the combining rules. Group propagates are taken
/// straight from the operand bits, independent of any P network.
pub fn eval_nodes(graph: &PrefixGraph, ops: &Operands) -> Vec<bool> {
    let mut val = vec![false; graph.nodes().len()];
    // Ids are in level order, so children precede parents.
    for node in graph.nodes() {
        let i = node.span.hi;
        val[node.id] = match node.children() {
            None => ops.g(i),
            Some((h, l)) => {
                let m = graph.node(h).span.lo;
                let (hk, lk) = (graph.node(h).kind, graph.node(l).kind);
                let (vh, vl) = (val[h], val[l]);
                match (node.kind, hk, lk) {
                    (NodeKind::Ling, NodeKind::Leaf, NodeKind::Ling) => ops.g(i) | (ops.leaf(i - 1).p_or & vl),
                    (NodeKind::Ling, NodeKind::Leaf, _) => ops.g(i) | vl,
                    (NodeKind::Ling, _, NodeKind::Ling) => vh | (ops.group_t(i - 1, m - 1) & vl),
                    (NodeKind::Ling, _, _) => vh | (ops.group_x(i - 1, m) & vl),
                    (_, NodeKind::Ling, NodeKind::Ling) => (ops.leaf(i).p_or & vh) | (ops.group_t(i, m - 1) & vl),
                    (_, NodeKind::Ling, _) => (ops.leaf(i).p_or & vh) | (ops.group_x(i, m) & vl),
                    (_, _, NodeKind::Ling) => vh | (ops.group_t(i, m - 1) & vl),
                    _ => vh | (ops.group_x(i, m) & vl),
                }
            }
        };
    }
    val
}

/// Carries into columns `1..=n` computed through the graph (Ling outputs converted).
pub fn graph_carries(graph: &PrefixGraph, ops: &Operands) -> Vec<bool> {
    let val = eval_nodes(graph, ops);
    graph
        .outputs()
        .iter()
        .map(|&o| match graph.node(o).kind {
            NodeKind::Ling => ling_to_carry(graph, o).expect("Ling output").eval(ops, &val),
            _ => val[o],
        })
        .collect()
}

/// Per-kind stage delays (FO1) used before mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseModel {
    pub leaf: f64,
    /// Extra leaf delay on bit 0, which absorbs the carry-in.
    pub carry_in: f64,
    pub prefix_first: f64,
    pub prefix: f64,
    pub ling_first: f64,
    pub ling: f64,
}

impl CoarseModel {
    /// Derives stage constants from library cells at unit electrical effort.
    ///
    /// A first-level prefix node waits for the XOR propagate before its
    /// AOI21; a first-level Ling node replaces the NAND generate with one
    /// AOI22 straight from the operands. Bit 0 builds its true-polarity
    /// `t0` through an inverter and then folds the carry-in with an AOI22.
    pub fn from_library(lib: &CellLibrary) -> Self {
        let unit = |name: &str, fallback: f64| {
            lib.by_name(name).map_or(fallback, |c| lib.normalize(c.raw_delay(1, c.c_in(1))))
        };
        let nand = unit("NAND2", 5.0 / 3.0);
        let xor = unit("XOR2", 4.0);
        let aoi21 = unit("AOI21", 2.5);
        let aoi22 = unit("AOI22", 19.0 / 6.0);
        let inv = unit("INV", 1.0);
        CoarseModel {
            leaf: nand,
            carry_in: inv + aoi22,
            prefix_first: (xor - nand).max(0.0) + aoi21,
            prefix: aoi21,
            ling_first: (aoi22 - nand).max(0.0),
            ling: aoi21,
        }
    }

    pub fn stage(&self, kind: NodeKind, level: u32) -> f64 {
        match (kind, level) {
            (NodeKind::Leaf, _) => self.leaf,
            (NodeKind::Prefix, 1) => self.prefix_first,
            (NodeKind::Prefix, _) => self.prefix,
            (NodeKind::Ling, 1) => self.ling_first,
            (NodeKind::Ling, _) => self.ling,
        }
    }
}

impl Default for CoarseModel {
    fn default() -> Self {
        CoarseModel::from_library(&CellLibrary::generic())
    }
}

/// Arrival time of every node: leaf stage, then max child arrival plus the node's stage.
pub fn arrival_estimate(graph: &PrefixGraph, model: &CoarseModel) -> Vec<f64> {
    let mut at = vec![0.0; graph.nodes().len()];
    for node in graph.nodes() {
        let stage = model.stage(node.kind, node.level);
        at[node.id] = match node.children() {
            None if node.span.lo == 0 => stage + model.carry_in,
            None => stage,
            Some((h, l)) => at[h].max(at[l]) + stage,
        };
    }
    at
}

const SLACK_EPS: f64 = 1e-9;

/// Non-leaf nodes with zero slack against the latest output arrival.
pub fn critical_nodes(graph: &PrefixGraph, model: &CoarseModel) -> BTreeSet<NodeId> {
    let at = arrival_estimate(graph, model);
    let worst = graph.outputs().iter().map(|&o| at[o]).fold(0.0, f64::max);
    let mut req = vec![f64::INFINITY; at.len()];
    for &o in graph.outputs() {
        req[o] = worst;
    }
    for node in graph.nodes().iter().rev() {
        if let Some((h, l)) = node.children() {
            let r = req[node.id] - model.stage(node.kind, node.level);
            req[h] = req[h].min(r);
            req[l] = req[l].min(r);
        }
    }
    graph
        .nodes()
        .iter()
        .filter(|n| !n.is_leaf() && (req[n.id] - at[n.id]).abs() < SLACK_EPS)
        .map(|n| n.id)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterRule {
    /// `G = t_i * H`: Ling signal read where a true carry is needed.
    LingToCarry,
    /// Ling low child under a prefix node, joined through `T[i:m-1]`.
    LingLoIntoPrefix,
    /// Prefix low child under a Ling node, joined through `X[i-1:m]`.
    PrefixLoIntoLing,
}

impl AdapterRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            AdapterRule::LingToCarry => "ling_to_carry",
            AdapterRule::LingLoIntoPrefix => "ling_lo_into_prefix",
            AdapterRule::PrefixLoIntoLing => "prefix_lo_into_ling",
        }
    }

    fn parse(s: &str) -> Result<Self, LingError> {
        match s {
            "ling_to_carry" => Ok(AdapterRule::LingToCarry),
            "ling_lo_into_prefix" => Ok(AdapterRule::LingLoIntoPrefix),
            "prefix_lo_into_ling" => Ok(AdapterRule::PrefixLoIntoLing),
            other => Err(LingError::UnknownRule(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Adapter {
    /// `None` marks an output column.
    pub parent: Option<NodeId>,
    pub child: NodeId,
    pub rule: AdapterRule,
}

/// Kind-boundary adapters implied by a graph's node kinds.
pub fn boundary_adapters(graph: &PrefixGraph) -> Vec<Adapter> {
    let mut out = Vec::new();
    for node in graph.nodes() {
        let Some((h, l)) = node.children() else { continue };
        let (hk, lk) = (graph.node(h).kind, graph.node(l).kind);
        match node.kind {
            NodeKind::Prefix => {
                if hk == NodeKind::Ling {
                    out.push(Adapter { parent: Some(node.id), child: h, rule: AdapterRule::LingToCarry });
                }
                if lk == NodeKind::Ling {
                    out.push(Adapter { parent: Some(node.id), child: l, rule: AdapterRule::LingLoIntoPrefix });
                }
            }
            NodeKind::Ling => {
                if lk != NodeKind::Ling {
                    out.push(Adapter { parent: Some(node.id), child: l, rule: AdapterRule::PrefixLoIntoLing });
                }
            }
            NodeKind::Leaf => {}
        }
    }
    for &o in graph.outputs() {
        if graph.node(o).kind == NodeKind::Ling {
            out.push(Adapter { parent: None, child: o, rule: AdapterRule::LingToCarry });
        }
    }
    out
}

/// A prefix graph with some nodes converted to Ling form.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridGraph {
    pub graph: PrefixGraph,
    pub converted: BTreeSet<NodeId>,
    /// Zero-slack nodes of the source graph; `converted` is a subset.
    pub critical: BTreeSet<NodeId>,
    pub adapters: Vec<Adapter>,
}

impl HybridGraph {
    /// Wraps a graph without converting anything.
    pub fn plain(graph: PrefixGraph) -> Self {
        let converted: BTreeSet<NodeId> =
            graph.nodes().iter().filter(|n| n.kind == NodeKind::Ling).map(|n| n.id).collect();
        let adapters = boundary_adapters(&graph);
        HybridGraph { critical: converted.clone(), converted, adapters, graph }
    }

    pub fn to_doc(&self) -> GraphDoc {
        let mut doc = self.graph.to_doc();
        doc.adapters = self
            .adapters
            .iter()
            .map(|a| AdapterDoc { parent: a.parent, child: a.child, rule: a.rule.as_str().into() })
            .collect();
        doc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("graph documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, LingError> {
        let doc: GraphDoc = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        for a in &doc.adapters {
            AdapterRule::parse(&a.rule)?;
        }
        Ok(HybridGraph::plain(PrefixGraph::from_doc(&doc)?))
    }
}

/// Converts zero-slack nodes to Ling form, lowest level first. A node is
/// converted only when its high child is a leaf or already converted, since
/// a Ling node cannot take a prefix high child.
pub fn hybridize(graph: &PrefixGraph, model: &CoarseModel) -> HybridGraph {
    let critical = critical_nodes(graph, model);
    let mut order: Vec<NodeId> = critical.iter().copied().collect();
    order.sort_by_key(|&id| (graph.node(id).level, id));
    let consumers = graph.consumers();
    let mut converted = BTreeSet::new();
    for id in order {
        // Terminal outputs stay prefix: a Ling output would need its own
        // carry recovery stage, while a prefix node over a Ling hi child
        // recovers the carry in the same gate.
        if graph.is_output(id) && consumers[id].is_empty() {
            continue;
        }
        let (h, _) = graph.node(id).children().expect("critical nodes are internal");
        if graph.node(h).is_leaf() || converted.contains(&h) {
            converted.insert(id);
        }
    }
    let kinds = converted.iter().map(|&id| (id, NodeKind::Ling)).collect();
    let hybrid = graph.with_kinds(&kinds);
    let adapters = boundary_adapters(&hybrid);
    HybridGraph { graph: hybrid, converted, critical, adapters }
}
