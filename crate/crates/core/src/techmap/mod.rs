// SPDX-License-Identifier: Apache-2.0

//! Technology mapping of hybrid prefix graphs onto an inverting cell library.

pub mod logic;
pub mod polarity;

use thiserror::Error;

use crate::analysis::{AnalysisError, TimingGraph};
use crate::library::CellLibrary;
use crate::netlist::{GateNetlist, NetId, NetlistError};
use crate::prefix::PrefixGraph;

pub use logic::{build_logic, LogicNet, Op, PFlavor, Polarity, VertexId};
pub use polarity::{plan_polarity, PolarityPlan};

/// Rounds of gate sizing before giving up on a fixpoint.
const MAX_SIZING_ROUNDS: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TechmapError {
    #[error("no library cell implements node {0}")]
    UnmappableNode(String),
    #[error("inverter candidate {index} out of range ({count} candidates)")]
    CandidateOutOfRange { index: u128, count: u128 },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

/// Logic network and polarity plan for one graph; candidates are mapped on demand.
#[derive(Debug, Clone)]
pub struct Mapper {
    pub logic: LogicNet,
    pub plan: PolarityPlan,
    module: String,
}

impl Mapper {
    pub fn new(graph: &PrefixGraph) -> Self {
        let logic = build_logic(graph);
        let plan = plan_polarity(&logic, logic.natural_polarity());
        Mapper { logic, plan, module: format!("adder{}", graph.width()) }
    }

    pub fn with_module(mut self, name: &str) -> Self {
        self.module = name.into();
        self
    }

    pub fn candidate_count(&self) -> u128 {
        self.plan.candidate_count()
    }

    /// Maps inverter candidate `index` at unit size.
    pub fn map(&self, index: u128, lib: &CellLibrary) -> Result<GateNetlist, TechmapError> {
        let pol = self
            .plan
            .assignment(index)
            .ok_or(TechmapError::CandidateOutOfRange { index, count: self.candidate_count() })?;
        map_cells(&self.logic, &pol, lib, &self.module)
    }

    /// Maps and sizes inverter candidate `index`.
    pub fn map_sized(&self, index: u128, lib: &CellLibrary) -> Result<GateNetlist, TechmapError> {
        let mut nl = self.map(index, lib)?;
        size_gates(&mut nl, lib)?;
        Ok(nl)
    }
}

/// Candidate 0, sized.
pub fn map_adder(graph: &PrefixGraph, lib: &CellLibrary) -> Result<GateNetlist, TechmapError> {
    Mapper::new(graph).map_sized(0, lib)
}

/// Emits one cell per vertex under the given polarities. Edges whose ends
/// share a polarity read a shared inverter on the driver.
pub fn map_cells(net: &LogicNet, pol: &[Polarity], lib: &CellLibrary, module: &str) -> Result<GateNetlist, TechmapError> {
    let mut nl = GateNetlist::with_ports(module, net.width);
    let nv = net.vertices.len();
    let mut net_of: Vec<Option<NetId>> = vec![None; nv];
    let mut inv_of: Vec<Option<NetId>> = vec![None; nv];
    for i in 0..net.width {
        net_of[net.a[i]] = Some(nl.ports.a[i]);
        net_of[net.b[i]] = Some(nl.ports.b[i]);
        net_of[net.sums[i]] = Some(nl.ports.sum[i]);
    }
    net_of[net.cin] = Some(nl.ports.cin);

    let carry_out = net.vertices[net.cout].inputs[0];
    if pol[carry_out] == Polarity::Positive {
        net_of[carry_out] = Some(nl.ports.cout);
    }
    let inv_name = lib.reference().name.clone();

    for (v, vx) in net.vertices.iter().enumerate() {
        if vx.op == Op::Input {
            continue;
        }
        // (net, polarity) seen on each input.
        let mut ins = Vec::with_capacity(vx.inputs.len());
        for &u in &vx.inputs {
            let direct = vx.op.polarity_agnostic() || pol[u] != pol[v];
            if direct {
                ins.push((net_of[u].expect("drivers precede readers"), pol[u]));
                continue;
            }
            let inv = match inv_of[u] {
                Some(n) => n,
                None => {
                    let out = if vx.op == Op::Port { nl.ports.cout } else { nl.add_net() };
                    let src = net_of[u].expect("drivers precede readers");
                    nl.add_instance(&inv_name, 1, vec![src], out, format!("~{}", net.vertices[u].label));
                    inv_of[u] = Some(out);
                    out
                }
            };
            ins.push((inv, pol[u].flip()));
        }
        if vx.op == Op::Port {
            continue;
        }

        let k = ins.len();
        let mut function = 0u64;
        let mut args = vec![false; k];
        for row in 0..1usize << k {
            for (j, &(_, p)) in ins.iter().enumerate() {
                args[j] = (row >> j & 1 == 1) ^ p.is_negative();
            }
            if vx.op.eval(&args) ^ pol[v].is_negative() {
                function |= 1 << row;
            }
        }
        let m = lib.match_function(k, function).ok_or_else(|| TechmapError::UnmappableNode(vx.label.clone()))?;
        let cell = lib.cell(m.cell);
        let mut pins = vec![0; k];
        for (j, &(n, _)) in ins.iter().enumerate() {
            pins[m.pins[j]] = n;
        }
        let out = match net_of[v] {
            Some(n) => n,
            None => {
                let n = nl.add_net();
                net_of[v] = Some(n);
                n
            }
        };
        nl.add_instance(&cell.name.clone(), 1, pins, out, vx.label.clone());
    }
    nl.canonicalize();
    Ok(nl)
}

/// Greedy drive-strength selection. Instances on or loading the critical
/// path try every library size in dependency order. A size is kept if the
/// worst output arrival does not rise and either it drops or the sum of all
/// output arrivals drops; the second term breaks ties between parallel
/// critical paths. Repeats until nothing changes and returns the number of
/// accepted resizes.
pub fn size_gates(nl: &mut GateNetlist, lib: &CellLibrary) -> Result<usize, TechmapError> {
    const EPS: f64 = 1e-9;
    let tg = TimingGraph::new(nl, lib)?;
    let (mut worst, mut total) = tg.delay_and_total(nl, lib);
    let mut accepted = 0;
    let mut rank = vec![0; nl.instances.len()];
    for (r, &i) in tg.order().iter().enumerate() {
        rank[i] = r;
    }
    for _ in 0..MAX_SIZING_ROUNDS {
        let report = tg.report(nl, lib);
        let mut cands: Vec<usize> = (0..nl.instances.len())
            .filter(|&i| {
                let inst = &nl.instances[i];
                report.is_critical(inst.output) || inst.inputs.iter().any(|&n| report.is_critical(n))
            })
            .collect();
        cands.sort_by_key(|&i| rank[i]);
        let mut changed = false;
        for i in cands {
            let sizes = lib.by_name(&nl.instances[i].cell).expect("mapped cells exist").sizes.clone();
            let start = nl.instances[i].size;
            let mut keep = start;
            for s in sizes.into_iter().filter(|&s| s != start) {
                nl.instances[i].size = s;
                let (w, t) = tg.delay_and_total(nl, lib);
                if w < worst - EPS || (w <= worst + EPS && t < total - EPS) {
                    (worst, total) = (w.min(worst), t);
                    keep = s;
                    changed = true;
                    accepted += 1;
                }
            }
            nl.instances[i].size = keep;
        }
        if !changed {
            break;
        }
    }
    Ok(accepted)
}

#[cfg(test)]
mod tests {
    use super::polarity::{flip_feasible, mismatched_edges};
    use super::*;
    use crate::analysis::{evaluate, sta};
    use crate::ling::{hybridize, CoarseModel};
    use crate::prefix::{make_classical, Arch, NodeKind, TopologyBuilder, Span};

    fn sim(nl: &GateNetlist, lib: &CellLibrary, a: u64, b: u64, cin: bool) -> u128 {
        let mut val = vec![false; nl.nets.len()];
        for i in 0..nl.width {
            val[nl.ports.a[i]] = a >> i & 1 == 1;
            val[nl.ports.b[i]] = b >> i & 1 == 1;
        }
        val[nl.ports.cin] = cin;
        for i in nl.topo_order().unwrap() {
            let inst = &nl.instances[i];
            let cell = lib.by_name(&inst.cell).unwrap();
            let row = inst.inputs.iter().enumerate().fold(0, |r, (k, &n)| r | (val[n] as usize) << k);
            val[inst.output] = cell.eval(row);
        }
        let s = nl.ports.sum.iter().enumerate().fold(0u128, |acc, (i, &n)| acc | (val[n] as u128) << i);
        s | (val[nl.ports.cout] as u128) << nl.width
    }

    fn exhaustive(nl: &GateNetlist, lib: &CellLibrary) {
        let n = nl.width;
        for a in 0..1u64 << n {
            for b in 0..1u64 << n {
                for cin in [false, true] {
                    assert_eq!(sim(nl, lib, a, b, cin), a as u128 + b as u128 + cin as u128, "{a}+{b}+{cin}");
                }
            }
        }
    }

    #[test]
    fn every_candidate_adds() {
        let lib = CellLibrary::generic();
        for n in [1, 2, 3, 4, 6] {
            for arch in Arch::ALL {
                let g = make_classical(arch, n).unwrap();
                for graph in [g.clone(), hybridize(&g, &CoarseModel::default()).graph] {
                    let m = Mapper::new(&graph);
                    for idx in 0..m.candidate_count().min(16) {
                        let nl = m.map_sized(idx, &lib).unwrap();
                        nl.check(&lib).unwrap();
                        exhaustive(&nl, &lib);
                    }
                }
            }
        }
    }

    #[test]
    fn one_bit_full_adder() {
        let lib = CellLibrary::generic();
        let nl = map_adder(&make_classical(Arch::KoggeStone, 1).unwrap(), &lib).unwrap();
        let cells: Vec<&str> = nl.instances.iter().map(|i| i.cell.as_str()).collect();
        assert_eq!(cells, ["INV", "INV", "NAND2", "AOI22", "XOR2", "XOR2", "INV"]);
        exhaustive(&nl, &lib);
    }

    #[test]
    fn first_level_ling_node_is_one_aoi22() {
        let lib = CellLibrary::generic();
        let mut b = TopologyBuilder::new(3);
        b.combine(Span::new(2, 1), 2);
        b.combine(Span::new(1, 0), 1);
        b.combine(Span::new(2, 0), 1);
        let g = b.build().unwrap();
        let id = g.find(Span::new(2, 1)).unwrap();
        let g = g.with_kinds(&[(id, NodeKind::Ling)].into_iter().collect());
        let nl = map_adder(&g, &lib).unwrap();
        let h: Vec<_> = nl.instances.iter().filter(|i| i.node == "H[2:1]").collect();
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].cell, "AOI22");
        let a = |i: usize| nl.ports.a[i];
        let b = |i: usize| nl.ports.b[i];
        let mut pins = h[0].inputs.clone();
        pins.sort();
        let mut want = vec![a(2), b(2), a(1), b(1)];
        want.sort();
        assert_eq!(pins, want);
        exhaustive(&nl, &lib);
    }

    #[test]
    fn propagate_network_never_spans_bit_zero() {
        let lib = CellLibrary::generic();
        for arch in Arch::ALL {
            let g = hybridize(&make_classical(arch, 16).unwrap(), &CoarseModel::default()).graph;
            let nl = map_adder(&g, &lib).unwrap();
            for inst in &nl.instances {
                assert!(!(inst.node.starts_with('P') || inst.node.starts_with('T')) || !inst.node.ends_with(":0]"), "{}", inst.node);
            }
        }
    }

    fn brute_force_count(net: &LogicNet, plan: &PolarityPlan) -> u128 {
        plan.clusters
            .iter()
            .map(|c| {
                let k = c.flippable.len();
                (0u32..1 << k)
                    .filter(|mask| {
                        let flips: Vec<_> = (0..k).filter(|j| mask >> j & 1 == 1).map(|j| c.flippable[j]).collect();
                        flip_feasible(net, &plan.base, &flips)
                    })
                    .count() as u128
            })
            .product()
    }

    #[test]
    fn candidate_counts_match_brute_force() {
        for n in [4, 8, 12] {
            for arch in Arch::ALL {
                let g = make_classical(arch, n).unwrap();
                for graph in [g.clone(), hybridize(&g, &CoarseModel::default()).graph] {
                    let m = Mapper::new(&graph);
                    assert!(!m.plan.truncated());
                    assert_eq!(m.candidate_count(), brute_force_count(&m.logic, &m.plan), "{arch} {n}");
                }
            }
        }
    }

    #[test]
    fn kogge_stone_eight_has_one_candidate() {
        let m = Mapper::new(&make_classical(Arch::KoggeStone, 8).unwrap());
        assert_eq!(m.candidate_count(), 1);
        let internal = mismatched_edges(&m.logic, &m.plan.base).into_iter().filter(|&(u, _)| !m.logic.is_input(u)).count();
        assert_eq!(internal, 2);
    }

    #[test]
    fn brent_kung_four_has_two_candidates() {
        let m = Mapper::new(&make_classical(Arch::BrentKung, 4).unwrap());
        assert_eq!(m.candidate_count(), 2);
    }

    #[test]
    fn sizing_never_slows_down() {
        let lib = CellLibrary::generic();
        for arch in Arch::ALL {
            let m = Mapper::new(&make_classical(arch, 16).unwrap());
            let mut nl = m.map(0, &lib).unwrap();
            let before = sta(&nl, &lib).unwrap().delay;
            size_gates(&mut nl, &lib).unwrap();
            let after = evaluate(&nl, &lib).unwrap();
            assert!(after.delay_fo1 <= before, "{arch}");
        }
    }
}
