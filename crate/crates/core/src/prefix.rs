// SPDX-License-Identifier: Apache-2.0

//! Prefix-graph data model, classical topology generators and structural checks.
//!
//! A [`PrefixGraph`] of width `n` holds one leaf per bit (`[i:i]`, level 0) and
//! a DAG of combining nodes. Node `[i:j]` is built from a high child `[i:m]`
//! and a low child `[m-1:j]`; `m` is called the node's *mid*. Column `c`
//! (`1..=n`) receives its carry from the node spanning `[c-1:0]`; the
//! carry-in is folded into bit 0, so column 1 reads leaf 0 directly.
//!
//! Spans are unique within a graph: two nodes never cover the same interval.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

/// Inclusive bit interval `[hi:lo]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub hi: usize,
    pub lo: usize,
}

impl Span {
    pub fn new(hi: usize, lo: usize) -> Self {
        debug_assert!(hi >= lo, "span [{hi}:{lo}] is reversed");
        Span { hi, lo }
    }

    pub fn leaf(bit: usize) -> Self {
        Span { hi: bit, lo: bit }
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_leaf(&self) -> bool {
        self.hi == self.lo
    }

    /// `[hi:mid]` and `[mid-1:lo]`.
    pub fn split(&self, mid: usize) -> (Span, Span) {
        debug_assert!(mid > self.lo && mid <= self.hi);
        (Span::new(self.hi, mid), Span::new(mid - 1, self.lo))
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.hi >= other.hi && self.lo <= other.lo
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}:{}]", self.hi, self.lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Leaf,
    /// Produces the group generate `G` over its span.
    Prefix,
    /// Produces the pseudo-carry `H` over its span.
    Ling,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixNode {
    pub id: NodeId,
    pub span: Span,
    pub kind: NodeKind,
    pub hi_child: Option<NodeId>,
    pub lo_child: Option<NodeId>,
    pub level: u32,
}

impl PrefixNode {
    pub fn is_leaf(&self) -> bool {
        self.kind == NodeKind::Leaf
    }

    pub fn children(&self) -> Option<(NodeId, NodeId)> {
        Some((self.hi_child?, self.lo_child?))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unsupported width {0}: a prefix graph needs at least one bit")]
    UnsupportedWidth(usize),
    #[error("node list is malformed: {0}")]
    Malformed(String),
    #[error("span {0} is required but was never defined")]
    MissingSpan(Span),
    #[error("invalid JSON graph document: {0}")]
    Json(String),
}

/// Classical parallel-prefix architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arch {
    KoggeStone,
    BrentKung,
    Sklansky,
    HanCarlson,
}

impl Arch {
    pub const ALL: [Arch; 4] = [Arch::KoggeStone, Arch::BrentKung, Arch::Sklansky, Arch::HanCarlson];

    pub fn short_name(&self) -> &'static str {
        match self {
            Arch::KoggeStone => "ks",
            Arch::BrentKung => "bk",
            Arch::Sklansky => "sk",
            Arch::HanCarlson => "hc",
        }
    }
}

impl FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ks" | "kogge-stone" | "koggestone" => Ok(Arch::KoggeStone),
            "bk" | "brent-kung" | "brentkung" => Ok(Arch::BrentKung),
            "sk" | "sklansky" => Ok(Arch::Sklansky),
            "hc" | "han-carlson" | "hancarlson" => Ok(Arch::HanCarlson),
            other => Err(format!("unknown architecture '{other}' (expected ks, bk, sk or hc)")),
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Collects span decompositions and turns them into a pruned, id-ordered graph.
#[derive(Debug, Clone, Default)]
pub struct TopologyBuilder {
    width: usize,
    mids: BTreeMap<Span, usize>,
    kinds: BTreeMap<Span, NodeKind>,
}

impl TopologyBuilder {
    pub fn new(width: usize) -> Self {
        TopologyBuilder { width, ..Default::default() }
    }

    /// Declares `span = [hi:mid] o [mid-1:lo]`. Later declarations of the same span are ignored.
    pub fn combine(&mut self, span: Span, mid: usize) -> &mut Self {
        debug_assert!(mid > span.lo && mid <= span.hi, "bad mid {mid} for {span}");
        self.mids.entry(span).or_insert(mid);
        self
    }

    pub fn kind(&mut self, span: Span, kind: NodeKind) -> &mut Self {
        self.kinds.insert(span, kind);
        self
    }

    pub fn contains(&self, span: &Span) -> bool {
        span.is_leaf() || self.mids.contains_key(span)
    }

    /// Keeps only nodes reachable from the `width` output columns and assigns
    /// dense ids in (level, lo, hi) order.
    pub fn build(&self) -> Result<PrefixGraph, GraphError> {
        let n = self.width;
        if n == 0 {
            return Err(GraphError::UnsupportedWidth(0));
        }
        let mut reachable: BTreeSet<Span> = (0..n).map(Span::leaf).collect();
        let mut stack: Vec<Span> = (1..n).map(|i| Span::new(i, 0)).collect();
        while let Some(span) = stack.pop() {
            if span.is_leaf() || !reachable.insert(span) {
                continue;
            }
            let mid = *self.mids.get(&span).ok_or(GraphError::MissingSpan(span))?;
            let (hi, lo) = span.split(mid);
            stack.push(hi);
            stack.push(lo);
        }

        let mut levels: HashMap<Span, u32> = HashMap::new();
        // Children are strictly shorter than parents, so ascending length is a topological order.
        let mut by_len: Vec<Span> = reachable.iter().copied().collect();
        by_len.sort_by_key(|s| (s.len(), s.lo));
        for span in &by_len {
            let level = if span.is_leaf() {
                0
            } else {
                let (hi, lo) = span.split(self.mids[span]);
                1 + levels[&hi].max(levels[&lo])
            };
            levels.insert(*span, level);
        }

        let mut order = by_len;
        order.sort_by_key(|s| (levels[s], s.lo, s.hi));
        let ids: HashMap<Span, NodeId> = order.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let nodes = order
            .iter()
            .enumerate()
            .map(|(id, span)| {
                if span.is_leaf() {
                    PrefixNode { id, span: *span, kind: NodeKind::Leaf, hi_child: None, lo_child: None, level: 0 }
                } else {
                    let (hi, lo) = span.split(self.mids[span]);
                    PrefixNode {
                        id,
                        span: *span,
                        kind: self.kinds.get(span).copied().unwrap_or(NodeKind::Prefix),
                        hi_child: Some(ids[&hi]),
                        lo_child: Some(ids[&lo]),
                        level: levels[span],
                    }
                }
            })
            .collect();
        let outputs = (0..n).map(|i| ids[&Span::new(i, 0)]).collect();
        PrefixGraph::from_parts(n, nodes, outputs)
    }
}

/// Directed acyclic graph of prefix (and Ling) nodes over `width` bit columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixGraph {
    width: usize,
    nodes: Vec<PrefixNode>,
    outputs: Vec<NodeId>,
    index: HashMap<Span, NodeId>,
}

impl PrefixGraph {
    /// Assembles a graph from raw parts. Only index sanity is checked here;
    /// use [`validate`] for the structural invariants.
    pub fn from_parts(width: usize, nodes: Vec<PrefixNode>, outputs: Vec<NodeId>) -> Result<Self, GraphError> {
        if width == 0 {
            return Err(GraphError::UnsupportedWidth(0));
        }
        for (pos, node) in nodes.iter().enumerate() {
            if node.id != pos {
                return Err(GraphError::Malformed(format!("node at position {pos} has id {}", node.id)));
            }
            for child in [node.hi_child, node.lo_child].into_iter().flatten() {
                if child >= nodes.len() {
                    return Err(GraphError::Malformed(format!("node {pos} references missing node {child}")));
                }
            }
        }
        if let Some(bad) = outputs.iter().find(|&&o| o >= nodes.len()) {
            return Err(GraphError::Malformed(format!("output references missing node {bad}")));
        }
        let mut index = HashMap::new();
        for node in &nodes {
            index.entry(node.span).or_insert(node.id);
        }
        Ok(PrefixGraph { width, nodes, outputs, index })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn nodes(&self) -> &[PrefixNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &PrefixNode {
        &self.nodes[id]
    }

    /// `outputs()[c-1]` is the node spanning `[c-1:0]`, the carry into column `c`.
    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn find(&self, span: Span) -> Option<NodeId> {
        self.index.get(&span).copied()
    }

    pub fn leaf(&self, bit: usize) -> NodeId {
        self.index[&Span::leaf(bit)]
    }

    /// Split point `m` of a non-leaf node: children are `[hi:m]` and `[m-1:lo]`.
    pub fn mid(&self, id: NodeId) -> Option<usize> {
        self.nodes[id].hi_child.map(|h| self.nodes[h].span.lo)
    }

    pub fn size(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_leaf()).count()
    }

    pub fn depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    pub fn ling_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Ling).count()
    }

    /// For every node, the non-leaf nodes that read it (one entry per child edge).
    pub fn consumers(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for node in &self.nodes {
            if let Some((h, l)) = node.children() {
                out[h].push(node.id);
                out[l].push(node.id);
            }
        }
        out
    }

    pub fn is_output(&self, id: NodeId) -> bool {
        let span = self.nodes[id].span;
        span.lo == 0 && self.outputs.get(span.hi) == Some(&id)
    }

    /// Returns a copy with the given node kinds replaced. Spans and ids are unchanged.
    pub fn with_kinds(&self, kinds: &BTreeMap<NodeId, NodeKind>) -> PrefixGraph {
        let mut g = self.clone();
        for (&id, &kind) in kinds {
            g.nodes[id].kind = kind;
        }
        g
    }

    pub fn to_doc(&self) -> GraphDoc {
        GraphDoc {
            width: self.width,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    id: n.id,
                    hi: n.span.hi,
                    lo: n.span.lo,
                    kind: n.kind,
                    hi_child: n.hi_child,
                    lo_child: n.lo_child,
                })
                .collect(),
            outputs: self.outputs.clone(),
            adapters: Vec::new(),
        }
    }

    /// Rebuilds a graph from its document form; levels are recomputed from the children.
    pub fn from_doc(doc: &GraphDoc) -> Result<Self, GraphError> {
        let count = doc.nodes.len();
        let mut level: Vec<Option<u32>> = vec![None; count];
        // Iterative longest-path levels; entries stay at 0 on a cycle so validate can report it.
        for start in 0..count {
            let mut stack = vec![(start, false)];
            let mut on_stack = vec![false; count];
            while let Some((id, expanded)) = stack.pop() {
                if id >= count || level[id].is_some() {
                    continue;
                }
                let node = &doc.nodes[id];
                let kids: Vec<usize> = [node.hi_child, node.lo_child].into_iter().flatten().collect();
                if expanded {
                    on_stack[id] = false;
                    let l = kids.iter().filter_map(|&k| level.get(k).copied().flatten()).max();
                    level[id] = Some(if kids.is_empty() { 0 } else { 1 + l.unwrap_or(0) });
                } else if on_stack[id] {
                    level[id] = Some(0);
                } else {
                    on_stack[id] = true;
                    stack.push((id, true));
                    for k in kids {
                        if k < count && !on_stack[k] {
                            stack.push((k, false));
                        }
                    }
                }
            }
        }
        let nodes = doc
            .nodes
            .iter()
            .enumerate()
            .map(|(pos, n)| {
                if n.hi < n.lo {
                    return Err(GraphError::Json(format!("node {} has reversed span [{}:{}]", n.id, n.hi, n.lo)));
                }
                Ok(PrefixNode {
                    id: n.id,
                    span: Span::new(n.hi, n.lo),
                    kind: n.kind,
                    hi_child: n.hi_child,
                    lo_child: n.lo_child,
                    level: level[pos].unwrap_or(0),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        PrefixGraph::from_parts(doc.width, nodes, doc.outputs.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("graph documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDoc = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        PrefixGraph::from_doc(&doc)
    }
}

/// Stable JSON layout of a graph. Field names are part of the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub width: usize,
    pub nodes: Vec<NodeDoc>,
    pub outputs: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adapters: Vec<AdapterDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: NodeId,
    pub hi: usize,
    pub lo: usize,
    pub kind: NodeKind,
    pub hi_child: Option<NodeId>,
    pub lo_child: Option<NodeId>,
}

/// Kind-boundary record carried by hybrid graphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterDoc {
    /// Consuming node, or `None` for an output column.
    pub parent: Option<NodeId>,
    pub child: NodeId,
    pub rule: String,
}

fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

pub fn min_depth(width: usize) -> u32 {
    ceil_log2(width)
}

/// Builds a classical topology. Non-power-of-two widths are cut out of the
/// next power-of-two structure and pruned to the first `n` columns.
pub fn make_classical(arch: Arch, n: usize) -> Result<PrefixGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::UnsupportedWidth(0));
    }
    let full = n.next_power_of_two();
    let levels = ceil_log2(full);
    let mut b = TopologyBuilder::new(n);
    match arch {
        Arch::KoggeStone => {
            for l in 1..=levels {
                let half = 1usize << (l - 1);
                for i in 0..full {
                    let prev_lo = (i + 1).saturating_sub(half);
                    if prev_lo == 0 {
                        continue;
                    }
                    let lo = (i + 1).saturating_sub(2 * half);
                    b.combine(Span::new(i, lo), prev_lo);
                }
            }
        }
        Arch::Sklansky => {
            for l in 1..=levels {
                let half = 1usize << (l - 1);
                for i in (0..full).filter(|i| i & half != 0) {
                    let base = i & !(2 * half - 1);
                    b.combine(Span::new(i, base), base + half);
                }
            }
        }
        Arch::BrentKung => {
            for l in 1..=levels {
                let block = 1usize << l;
                for i in (block - 1..full).step_by(block) {
                    b.combine(Span::new(i, i + 1 - block), i + 1 - block / 2);
                }
            }
            for l in (1..levels).rev() {
                let block = 1usize << l;
                let half = block / 2;
                for i in (block + half - 1..full).step_by(block) {
                    b.combine(Span::new(i, 0), i + 1 - half);
                }
            }
        }
        Arch::HanCarlson => {
            for i in (1..full).step_by(2) {
                b.combine(Span::new(i, i - 1), i);
            }
            for l in 2..=levels {
                let half = 1usize << (l - 1);
                for i in (1..full).step_by(2) {
                    let prev_lo = (i + 1).saturating_sub(half);
                    if prev_lo == 0 {
                        continue;
                    }
                    b.combine(Span::new(i, (i + 1).saturating_sub(2 * half)), prev_lo);
                }
            }
            for i in (2..full).step_by(2) {
                b.combine(Span::new(i, 0), i);
            }
        }
    }
    b.build()
}

/// One structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    SpanOutOfRange { node: NodeId },
    /// Children do not abut at `m`, `m-1` or do not cover the parent span exactly.
    SpanMismatch { node: NodeId },
    /// Leaf/non-leaf shape disagrees with the span or children.
    ShapeMismatch { node: NodeId },
    DuplicateSpan { span: Span },
    MissingLeaf { bit: usize },
    MissingOutput { column: usize },
    Cycle { node: NodeId },
    LevelInconsistency { node: NodeId, stored: u32, expected: u32 },
    /// Non-leaf node not reachable from any output column.
    DeadNode { node: NodeId },
    /// A Ling node whose high child is a standard prefix node.
    InvalidLingChild { node: NodeId },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, pred: impl Fn(&Violation) -> bool) -> bool {
        self.violations.iter().any(pred)
    }
}

/// Checks every structural invariant and collects all violations.
pub fn validate(graph: &PrefixGraph) -> ValidationReport {
    let mut v = Vec::new();
    let n = graph.width;
    let nodes = &graph.nodes;

    let mut seen: HashMap<Span, NodeId> = HashMap::new();
    for node in nodes {
        if node.span.hi >= n {
            v.push(Violation::SpanOutOfRange { node: node.id });
        }
        if seen.insert(node.span, node.id).is_some() {
            v.push(Violation::DuplicateSpan { span: node.span });
        }
        match (node.kind, node.children()) {
            (NodeKind::Leaf, None) if node.span.is_leaf() && node.hi_child.is_none() && node.lo_child.is_none() => {}
            (NodeKind::Leaf, _) => v.push(Violation::ShapeMismatch { node: node.id }),
            (_, None) => v.push(Violation::ShapeMismatch { node: node.id }),
            (kind, Some((h, l))) => {
                let hs = nodes[h].span;
                let ls = nodes[l].span;
                if hs.hi != node.span.hi || ls.lo != node.span.lo || hs.lo != ls.hi + 1 || h == node.id || l == node.id {
                    v.push(Violation::SpanMismatch { node: node.id });
                }
                if kind == NodeKind::Ling && nodes[h].kind == NodeKind::Prefix {
                    v.push(Violation::InvalidLingChild { node: node.id });
                }
            }
        }
    }
    for bit in 0..n {
        if !nodes.iter().any(|x| x.span == Span::leaf(bit) && x.kind == NodeKind::Leaf) {
            v.push(Violation::MissingLeaf { bit });
        }
    }
    for column in 1..=n {
        let want = Span::new(column - 1, 0);
        let ok = graph.outputs.get(column - 1).is_some_and(|&id| nodes[id].span == want);
        if !ok {
            v.push(Violation::MissingOutput { column });
        }
    }

    // Cycle detection with colours; only recurse into in-range children.
    let mut colour = vec![0u8; nodes.len()];
    let mut cyclic = vec![false; nodes.len()];
    for start in 0..nodes.len() {
        if colour[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        colour[start] = 1;
        while let Some(&mut (id, ref mut next)) = stack.last_mut() {
            let kids: Vec<NodeId> = [nodes[id].hi_child, nodes[id].lo_child].into_iter().flatten().collect();
            if *next < kids.len() {
                let k = kids[*next];
                *next += 1;
                match colour[k] {
                    0 => {
                        colour[k] = 1;
                        stack.push((k, 0));
                    }
                    1 => cyclic[k] = true,
                    _ => {}
                }
            } else {
                colour[id] = 2;
                stack.pop();
            }
        }
    }
    let has_cycle = cyclic.iter().any(|&c| c);
    for (id, _) in cyclic.iter().enumerate().filter(|(_, &c)| c) {
        v.push(Violation::Cycle { node: id });
    }

    if !has_cycle {
        for node in nodes {
            let expected = match node.children() {
                Some((h, l)) => 1 + nodes[h].level.max(nodes[l].level),
                None => 0,
            };
            if expected != node.level {
                v.push(Violation::LevelInconsistency { node: node.id, stored: node.level, expected });
            }
        }
    }

    let mut live = vec![false; nodes.len()];
    let mut stack: Vec<NodeId> = graph.outputs.clone();
    while let Some(id) = stack.pop() {
        if std::mem::replace(&mut live[id], true) {
            continue;
        }
        stack.extend([nodes[id].hi_child, nodes[id].lo_child].into_iter().flatten());
    }
    for node in nodes.iter().filter(|x| !x.is_leaf() && !live[x.id]) {
        v.push(Violation::DeadNode { node: node.id });
    }

    ValidationReport { violations: v }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub size: usize,
    pub depth: u32,
    pub max_fanout: usize,
}

/// Size excludes leaves; fanout counts prefix-node consumers only.
pub fn metrics(graph: &PrefixGraph) -> GraphMetrics {
    let max_fanout = graph.consumers().iter().map(Vec::len).max().unwrap_or(0);
    GraphMetrics { size: graph.size(), depth: graph.depth(), max_fanout }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(id: usize, hi: usize, lo: usize, kind: NodeKind, kids: Option<(usize, usize)>, level: u32) -> PrefixNode {
        PrefixNode { id, span: Span::new(hi, lo), kind, hi_child: kids.map(|k| k.0), lo_child: kids.map(|k| k.1), level }
    }

    #[test]
    fn kogge_stone_16_shape() {
        let g = make_classical(Arch::KoggeStone, 16).unwrap();
        // Without forwarding buffers leaf 0 feeds [1:0], [2:0], [4:0] and [8:0].
        assert_eq!(metrics(&g), GraphMetrics { size: 49, depth: 4, max_fanout: 4 });
        assert!(validate(&g).is_ok());
        let internal = g.consumers().iter().enumerate().filter(|(id, _)| !g.is_output(*id)).map(|(_, c)| c.len()).max();
        assert_eq!(internal, Some(2));
    }

    #[test]
    fn brent_kung_16_shape() {
        let g = make_classical(Arch::BrentKung, 16).unwrap();
        assert_eq!(g.size(), 26);
        assert_eq!(g.depth(), 6);
    }

    #[test]
    fn sklansky_fanout() {
        let g = make_classical(Arch::Sklansky, 16).unwrap();
        let m = metrics(&g);
        assert_eq!(m.max_fanout, 8);
        assert_eq!(m.depth, 4);
        let seven = g.find(Span::new(7, 0)).unwrap();
        assert_eq!(g.consumers()[seven].len(), 8);
    }

    #[test]
    fn width_one_is_empty() {
        for arch in Arch::ALL {
            let g = make_classical(arch, 1).unwrap();
            assert_eq!(metrics(&g), GraphMetrics { size: 0, depth: 0, max_fanout: 0 });
            assert!(validate(&g).is_ok());
        }
    }

    #[test]
    fn width_zero_rejected() {
        assert_eq!(make_classical(Arch::KoggeStone, 0), Err(GraphError::UnsupportedWidth(0)));
    }

    #[test]
    fn ids_follow_level_lo_hi_order() {
        let g = make_classical(Arch::HanCarlson, 13).unwrap();
        let keys: Vec<_> = g.nodes().iter().map(|n| (n.level, n.span.lo, n.span.hi)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for bit in 0..13 {
            assert_eq!(g.leaf(bit), bit);
        }
    }

    #[test]
    fn span_mismatch_detected() {
        // [5:2] built from [5:4] and [2:0] neither abuts nor covers.
        let mut nodes: Vec<PrefixNode> = (0..6).map(|b| raw(b, b, b, NodeKind::Leaf, None, 0)).collect();
        nodes.push(raw(6, 5, 4, NodeKind::Prefix, Some((5, 4)), 1));
        nodes.push(raw(7, 1, 0, NodeKind::Prefix, Some((1, 0)), 1));
        nodes.push(raw(8, 2, 0, NodeKind::Prefix, Some((2, 7)), 2));
        nodes.push(raw(9, 5, 2, NodeKind::Prefix, Some((6, 8)), 2));
        let g = PrefixGraph::from_parts(6, nodes, vec![0, 7, 8]).unwrap();
        let report = validate(&g);
        assert!(report.has(|v| matches!(v, Violation::SpanMismatch { node: 9 })), "{report:?}");
    }

    #[test]
    fn missing_output_detected() {
        let mut nodes: Vec<PrefixNode> = (0..4).map(|b| raw(b, b, b, NodeKind::Leaf, None, 0)).collect();
        nodes.push(raw(4, 1, 0, NodeKind::Prefix, Some((1, 0)), 1));
        nodes.push(raw(5, 2, 0, NodeKind::Prefix, Some((2, 4)), 2));
        let g = PrefixGraph::from_parts(4, nodes, vec![0, 4, 5]).unwrap();
        let report = validate(&g);
        assert!(report.has(|v| matches!(v, Violation::MissingOutput { column: 4 })), "{report:?}");
    }

    #[test]
    fn cycle_and_level_detected() {
        let mut nodes: Vec<PrefixNode> = (0..2).map(|b| raw(b, b, b, NodeKind::Leaf, None, 0)).collect();
        nodes.push(raw(2, 1, 0, NodeKind::Prefix, Some((1, 0)), 3));
        let g = PrefixGraph::from_parts(2, nodes.clone(), vec![0, 2]).unwrap();
        assert!(validate(&g).has(|v| matches!(v, Violation::LevelInconsistency { node: 2, .. })));

        nodes[2] = raw(2, 1, 0, NodeKind::Prefix, Some((3, 0)), 1);
        nodes.push(raw(3, 1, 1, NodeKind::Prefix, Some((2, 0)), 2));
        let g = PrefixGraph::from_parts(2, nodes, vec![0, 2]).unwrap();
        assert!(validate(&g).has(|v| matches!(v, Violation::Cycle { .. })));
    }

    #[test]
    fn json_round_trip_keeps_levels() {
        let g = make_classical(Arch::BrentKung, 11).unwrap();
        let back = PrefixGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn json_field_names_are_stable() {
        let g = make_classical(Arch::KoggeStone, 2).unwrap();
        let v: serde_json::Value = serde_json::from_str(&g.to_json()).unwrap();
        assert_eq!(v["width"], 2);
        assert_eq!(v["outputs"], serde_json::json!([0, 2]));
        let node = &v["nodes"][2];
        for key in ["id", "hi", "lo", "kind", "hi_child", "lo_child"] {
            assert!(node.get(key).is_some(), "missing {key}");
        }
        assert_eq!(node["kind"], "prefix");
    }
}
