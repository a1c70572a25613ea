// SPDX-License-Identifier: Apache-2.0

//! Polarity assignment and inverter candidates.
//!
//! Every mapped gate inverts, so a vertex wants inputs of the opposite
//! polarity. An edge whose endpoints share a polarity is mismatched and needs
//! an inverter unless one endpoint is flipped. Mismatched edges that share a
//! flippable endpoint form a cluster; each cluster contributes its feasible
//! flip sets, and candidates are the product over clusters.

use std::collections::BTreeSet;

use super::logic::{LogicNet, Op, Polarity, VertexId};

/// Flip sets kept per cluster before the cluster is marked truncated.
pub const MAX_RESOLUTIONS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub edges: Vec<(VertexId, VertexId)>,
    pub flippable: Vec<VertexId>,
    /// Feasible flip sets; the empty set is always first.
    pub resolutions: Vec<Vec<VertexId>>,
    /// More than [`MAX_RESOLUTIONS`] flip sets exist.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarityPlan {
    pub base: Vec<Polarity>,
    pub clusters: Vec<Cluster>,
}

impl PolarityPlan {
    /// Number of inverter candidates, saturating at `u128::MAX`.
    pub fn candidate_count(&self) -> u128 {
        self.clusters.iter().fold(1u128, |acc, c| acc.saturating_mul(c.resolutions.len() as u128))
    }

    pub fn truncated(&self) -> bool {
        self.clusters.iter().any(|c| c.truncated)
    }

    /// Mixed-radix decoding of a candidate index into a full polarity vector.
    pub fn assignment(&self, mut index: u128) -> Option<Vec<Polarity>> {
        if index >= self.candidate_count() {
            return None;
        }
        let mut pol = self.base.clone();
        for c in &self.clusters {
            let r = c.resolutions.len() as u128;
            for &v in &c.resolutions[(index % r) as usize] {
                pol[v] = pol[v].flip();
            }
            index /= r;
        }
        Some(pol)
    }
}

/// Edges whose polarity matters: every input of a non-XOR gate or port.
pub fn polarity_edges(net: &LogicNet) -> Vec<(VertexId, VertexId)> {
    let mut out = Vec::new();
    for (v, vx) in net.vertices.iter().enumerate() {
        if vx.op == Op::Input || vx.op.polarity_agnostic() {
            continue;
        }
        out.extend(vx.inputs.iter().map(|&u| (u, v)));
    }
    out
}

pub fn mismatched_edges(net: &LogicNet, pol: &[Polarity]) -> Vec<(VertexId, VertexId)> {
    polarity_edges(net).into_iter().filter(|&(u, v)| pol[u] == pol[v]).collect()
}

fn incident(net: &LogicNet) -> Vec<Vec<(VertexId, VertexId)>> {
    let mut inc = vec![Vec::new(); net.vertices.len()];
    for (u, v) in polarity_edges(net) {
        inc[u].push((u, v));
        inc[v].push((u, v));
    }
    inc
}

fn mismatches_at(inc: &[(VertexId, VertexId)], pol: &[Polarity]) -> usize {
    inc.iter().filter(|&&(u, v)| pol[u] == pol[v]).count()
}

/// A flip set is feasible when no flipped vertex ends up with more
/// mismatched incident edges than before, all flips applied together.
pub fn flip_feasible(net: &LogicNet, base: &[Polarity], flips: &[VertexId]) -> bool {
    let inc = incident(net);
    let mut pol = base.to_vec();
    for &v in flips {
        pol[v] = pol[v].flip();
    }
    flips.iter().all(|&v| mismatches_at(&inc[v], &pol) <= mismatches_at(&inc[v], base))
}

struct Find(Vec<usize>);

impl Find {
    fn root(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut x = x;
        while self.0[x] != r {
            let next = self.0[x];
            self.0[x] = r;
            x = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.root(a), self.root(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups the mismatches of `base` into clusters and enumerates their flip sets.
pub fn plan_polarity(net: &LogicNet, base: Vec<Polarity>) -> PolarityPlan {
    let edges = mismatched_edges(net, &base);
    let nv = net.vertices.len();
    let fixed = |v: VertexId| net.vertices[v].fixed.is_some();

    // Union-find over vertices then edges; edges join through non-fixed endpoints.
    let mut uf = Find((0..nv + edges.len()).collect());
    for (k, &(u, v)) in edges.iter().enumerate() {
        for w in [u, v] {
            if !fixed(w) {
                uf.union(nv + k, w);
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut members: Vec<Vec<(VertexId, VertexId)>> = Vec::new();
    for (k, &e) in edges.iter().enumerate() {
        let r = uf.root(nv + k);
        let slot = roots.iter().position(|&x| x == r).unwrap_or_else(|| {
            roots.push(r);
            members.push(Vec::new());
            roots.len() - 1
        });
        members[slot].push(e);
    }

    let mut owner = vec![usize::MAX; nv];
    for (c, es) in members.iter().enumerate() {
        for &(u, v) in es {
            owner[u] = c;
            owner[v] = c;
        }
    }
    let inc = incident(net);
    let clusters = members
        .into_iter()
        .enumerate()
        .map(|(c, edges)| {
            let ends: BTreeSet<VertexId> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
            let flippable: Vec<VertexId> = ends
                .into_iter()
                .filter(|&w| !fixed(w))
                .filter(|&w| inc[w].iter().all(|&(u, v)| {
                    let other = if u == w { v } else { u };
                    owner[other] == usize::MAX || owner[other] == c
                }))
                .collect();
            let (resolutions, truncated) = resolve(&inc, &base, &flippable);
            Cluster { edges, flippable, resolutions, truncated }
        })
        .collect();
    PolarityPlan { base, clusters }
}

/// Depth-first enumeration of feasible flip sets over `cand`. A flipped
/// vertex is checked as soon as it and all its candidate neighbours are decided.
fn resolve(inc: &[Vec<(VertexId, VertexId)>], base: &[Polarity], cand: &[VertexId]) -> (Vec<Vec<VertexId>>, bool) {
    let pos = |v: VertexId| cand.iter().position(|&c| c == v);
    // check_at[k]: candidates whose condition is fully decided after choice k.
    let mut check_at = vec![Vec::new(); cand.len()];
    for (k, &v) in cand.iter().enumerate() {
        let last = inc[v]
            .iter()
            .filter_map(|&(a, b)| pos(if a == v { b } else { a }))
            .chain([k])
            .max()
            .expect("non-empty");
        check_at[last].push(k);
    }
    let before: Vec<usize> = cand.iter().map(|&v| mismatches_at(&inc[v], base)).collect();

    struct State<'a> {
        inc: &'a [Vec<(VertexId, VertexId)>],
        cand: &'a [VertexId],
        check_at: Vec<Vec<usize>>,
        before: Vec<usize>,
        pol: Vec<Polarity>,
        chosen: Vec<bool>,
        out: Vec<Vec<VertexId>>,
        truncated: bool,
    }

    fn go(s: &mut State, k: usize) {
        if s.truncated {
            return;
        }
        if k == s.cand.len() {
            if s.out.len() == MAX_RESOLUTIONS {
                s.truncated = true;
                return;
            }
            s.out.push(s.cand.iter().zip(&s.chosen).filter(|(_, &c)| c).map(|(&v, _)| v).collect());
            return;
        }
        for flip in [false, true] {
            let v = s.cand[k];
            if flip {
                s.pol[v] = s.pol[v].flip();
            }
            s.chosen[k] = flip;
            let ok = s.check_at[k]
                .iter()
                .all(|&j| !s.chosen[j] || mismatches_at(&s.inc[s.cand[j]], &s.pol) <= s.before[j]);
            if ok {
                go(s, k + 1);
            }
            if flip {
                s.pol[v] = s.pol[v].flip();
            }
            s.chosen[k] = false;
        }
    }

    let mut s = State {
        inc,
        cand,
        check_at,
        before,
        pol: base.to_vec(),
        chosen: vec![false; cand.len()],
        out: Vec::new(),
        truncated: false,
    };
    go(&mut s, 0);
    (s.out, s.truncated)
}
