// SPDX-License-Identifier: Apache-2.0

//! Coarse static timing and transistor-count area.
//!
//! Stage delay is `p + (r / size) * load`, normalized so that a unit inverter
//! driving one unit inverter costs 1.0. Each output port adds one unit of
//! load. Primary inputs are driven by an ideal unit inverter whose stage
//! delay is part of the input arrival.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::library::CellLibrary;
use crate::netlist::{GateNetlist, InstId, NetId, NetlistError};

const SLACK_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("combinational cycle through instance '{0}'")]
    CycleDetected(String),
    #[error("net '{0}' is read but never driven")]
    DanglingNet(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    /// Arrival time of every net.
    pub arrival: Vec<f64>,
    /// Required time of every net.
    pub required: Vec<f64>,
    /// Stage delay of every instance.
    pub stage: Vec<f64>,
    /// Load on every net.
    pub load: Vec<f64>,
    /// Worst arrival over the output ports.
    pub delay: f64,
    /// Instances on the worst path, from input to output.
    pub critical_path: Vec<InstId>,
}

impl TimingReport {
    pub fn net_slack(&self, net: NetId) -> f64 {
        self.required[net] - self.arrival[net]
    }

    pub fn is_critical(&self, net: NetId) -> bool {
        self.net_slack(net) <= SLACK_EPS
    }
}

/// Precomputed evaluation order; reused across repeated timing runs.
#[derive(Debug, Clone)]
pub struct TimingGraph {
    order: Vec<InstId>,
    driver: Vec<Option<InstId>>,
}

impl TimingGraph {
    pub fn new(netlist: &GateNetlist, lib: &CellLibrary) -> Result<Self, AnalysisError> {
        for inst in &netlist.instances {
            if lib.by_name(&inst.cell).is_none() {
                return Err(NetlistError::UnknownCell(inst.cell.clone()).into());
            }
        }
        let order = netlist.topo_order().map_err(|e| match e {
            NetlistError::Cycle(name) => AnalysisError::CycleDetected(name),
            other => other.into(),
        })?;
        let driver = netlist.drivers()?;
        let read = netlist.instances.iter().flat_map(|i| i.inputs.iter().copied()).chain(netlist.output_nets());
        for net in read {
            if !netlist.is_input(net) && driver[net].is_none() {
                return Err(AnalysisError::DanglingNet(netlist.nets[net].clone()));
            }
        }
        Ok(TimingGraph { order, driver })
    }

    pub fn order(&self) -> &[InstId] {
        &self.order
    }

    /// Worst output arrival only.
    pub fn delay(&self, netlist: &GateNetlist, lib: &CellLibrary) -> f64 {
        self.delay_and_total(netlist, lib).0
    }

    /// Worst output arrival and the sum of all output arrivals.
    pub fn delay_and_total(&self, netlist: &GateNetlist, lib: &CellLibrary) -> (f64, f64) {
        let load = loads(netlist, lib);
        let arrival = self.arrivals(netlist, lib, &load);
        netlist.output_nets().map(|n| arrival[n]).fold((0.0, 0.0), |(m, s), a| (f64::max(m, a), s + a))
    }

    fn arrivals(&self, netlist: &GateNetlist, lib: &CellLibrary, load: &[f64]) -> Vec<f64> {
        let mut arrival = vec![0.0; netlist.nets.len()];
        let inv = lib.reference();
        for net in netlist.input_nets() {
            arrival[net] = lib.normalize(inv.raw_delay(1, load[net]));
        }
        for &i in &self.order {
            let inst = &netlist.instances[i];
            let cell = lib.by_name(&inst.cell).expect("checked");
            let start = inst.inputs.iter().map(|&n| arrival[n]).fold(0.0, f64::max);
            arrival[inst.output] = start + lib.normalize(cell.raw_delay(inst.size, load[inst.output]));
        }
        arrival
    }

    pub fn report(&self, netlist: &GateNetlist, lib: &CellLibrary) -> TimingReport {
        let load = loads(netlist, lib);
        let arrival = self.arrivals(netlist, lib, &load);
        let stage: Vec<f64> = netlist
            .instances
            .iter()
            .map(|inst| lib.normalize(lib.by_name(&inst.cell).expect("checked").raw_delay(inst.size, load[inst.output])))
            .collect();
        let (worst_net, delay) = netlist
            .output_nets()
            .map(|n| (n, arrival[n]))
            .fold((netlist.ports.cout, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });

        let mut required = vec![f64::INFINITY; netlist.nets.len()];
        for net in netlist.output_nets() {
            required[net] = delay;
        }
        for &i in self.order.iter().rev() {
            let inst = &netlist.instances[i];
            let r = required[inst.output] - stage[i];
            for &n in &inst.inputs {
                required[n] = required[n].min(r);
            }
        }
        for r in required.iter_mut().filter(|r| r.is_infinite()) {
            *r = delay;
        }

        let mut critical_path = Vec::new();
        let mut net = worst_net;
        while let Some(i) = self.driver[net] {
            critical_path.push(i);
            let inst = &netlist.instances[i];
            net = *inst
                .inputs
                .iter()
                .max_by(|&&x, &&y| arrival[x].total_cmp(&arrival[y]))
                .expect("cells have inputs");
        }
        critical_path.reverse();
        TimingReport { arrival, required, stage, load, delay, critical_path }
    }
}

/// Load on every net: consumer pin capacitance plus one unit per output port.
pub fn loads(netlist: &GateNetlist, lib: &CellLibrary) -> Vec<f64> {
    let mut load = vec![0.0; netlist.nets.len()];
    for inst in &netlist.instances {
        let cin = lib.by_name(&inst.cell).map_or(0.0, |c| c.c_in(inst.size));
        for &n in &inst.inputs {
            load[n] += cin;
        }
    }
    for n in netlist.output_nets() {
        load[n] += 1.0;
    }
    load
}

pub fn sta(netlist: &GateNetlist, lib: &CellLibrary) -> Result<TimingReport, AnalysisError> {
    Ok(TimingGraph::new(netlist, lib)?.report(netlist, lib))
}

/// Total transistor count weighted by drive size.
pub fn area(netlist: &GateNetlist, lib: &CellLibrary) -> Result<u64, AnalysisError> {
    netlist
        .instances
        .iter()
        .map(|i| {
            lib.by_name(&i.cell)
                .map(|c| c.t_count as u64 * i.size as u64)
                .ok_or_else(|| NetlistError::UnknownCell(i.cell.clone()).into())
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub area_transistors: u64,
    pub delay_fo1: f64,
    pub n_instances: usize,
    pub n_inverters: usize,
}

impl EvalPoint {
    pub fn adp(&self) -> f64 {
        self.area_transistors as f64 * self.delay_fo1
    }
}

pub fn evaluate(netlist: &GateNetlist, lib: &CellLibrary) -> Result<EvalPoint, AnalysisError> {
    let report = sta(netlist, lib)?;
    Ok(EvalPoint {
        area_transistors: area(netlist, lib)?,
        delay_fo1: report.delay,
        n_instances: netlist.instances.len(),
        n_inverters: netlist.inverter_count(lib),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverter_into_inverter_is_one() {
        let lib = CellLibrary::generic();
        let mut nl = GateNetlist::with_ports("t", 1);
        let x = nl.add_net();
        nl.add_instance("INV", 1, vec![0], x, "");
        nl.add_instance("INV", 1, vec![x], nl.ports.sum[0], "");
        nl.add_instance("INV", 1, vec![2], nl.ports.cout, "");
        let r = sta(&nl, &lib).unwrap();
        let u0 = r.arrival[x] - r.arrival[0];
        assert!((u0 - 1.0).abs() < 1e-12, "{u0}");
        assert!((r.stage[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lone_xor_stage() {
        let lib = CellLibrary::generic();
        let mut nl = GateNetlist::with_ports("t", 1);
        nl.add_instance("XOR2", 1, vec![0, 1], nl.ports.sum[0], "s0");
        nl.add_instance("INV", 1, vec![2], nl.ports.cout, "");
        let r = sta(&nl, &lib).unwrap();
        assert!((r.stage[0] - 2.5).abs() < 1e-12);
        assert_eq!(r.critical_path, vec![0]);
        assert_eq!(area(&nl, &lib).unwrap(), 14);
    }

    #[test]
    fn dangling_and_cycles() {
        let lib = CellLibrary::generic();
        let mut nl = GateNetlist::with_ports("t", 1);
        let x = nl.add_net();
        nl.add_instance("INV", 1, vec![x], nl.ports.sum[0], "");
        assert_eq!(sta(&nl, &lib), Err(AnalysisError::DanglingNet(format!("n{x}"))));
        let y = nl.add_net();
        nl.add_instance("INV", 1, vec![y], x, "");
        nl.add_instance("INV", 1, vec![x], y, "");
        assert!(matches!(sta(&nl, &lib), Err(AnalysisError::CycleDetected(_))));
    }
}
