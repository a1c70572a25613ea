// SPDX-License-Identifier: Apache-2.0

//! Gate-level simulation and equivalence against integer addition.
//!
//! Simulation is bit-parallel: each net holds a 64-lane word and each
//! instance is evaluated from its cell's truth table as a sum of minterms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::library::CellLibrary;
use crate::netlist::{GateNetlist, NetId, NetlistError};

/// Widths up to this are checked on every input vector.
pub const EXHAUSTIVE_MAX_WIDTH: usize = 10;
pub const RANDOM_VECTORS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0x5eed_adde;
pub const MAX_KEPT_MISMATCHES: usize = 10;
/// Operands are carried in `u128`.
pub const MAX_WIDTH: usize = 127;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("net '{0}' is read but never driven")]
    XState(String),
    #[error("width {0} is outside 1..={MAX_WIDTH}")]
    Width(usize),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

fn mask(n: usize) -> u128 {
    (1u128 << n) - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimVector {
    pub a: u128,
    pub b: u128,
    pub cin: bool,
    pub sum: u128,
    pub cout: bool,
}

impl SimVector {
    /// Operands are truncated to `n` bits; the expectation is plain integer addition.
    pub fn new(n: usize, a: u128, b: u128, cin: bool) -> Self {
        let (a, b) = (a & mask(n), b & mask(n));
        let total = a + b + cin as u128;
        SimVector { a, b, cin, sum: total & mask(n), cout: total >> n & 1 == 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub vector: SimVector,
    pub got_sum: u128,
    pub got_cout: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivMode {
    Exhaustive,
    Randomized,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivVerdict {
    pub mode: EquivMode,
    pub vectors: u64,
    /// First few failing vectors.
    pub mismatches: Vec<Mismatch>,
    pub mismatch_count: u64,
    /// Set when the netlist could not be simulated at all.
    pub error: Option<String>,
    pub pass: bool,
}

struct Gate {
    function: u64,
    arity: usize,
    inputs: Vec<NetId>,
    output: NetId,
}

/// A netlist compiled for repeated simulation.
pub struct Simulator {
    width: usize,
    a: Vec<NetId>,
    b: Vec<NetId>,
    cin: NetId,
    sum: Vec<NetId>,
    cout: NetId,
    nets: usize,
    gates: Vec<Gate>,
}

impl Simulator {
    pub fn new(netlist: &GateNetlist, lib: &CellLibrary) -> Result<Self, VerifyError> {
        let n = netlist.width;
        if n == 0 || n > MAX_WIDTH {
            return Err(VerifyError::Width(n));
        }
        netlist.check(lib).or_else(|e| match e {
            NetlistError::Undriven(net) => Err(VerifyError::XState(net)),
            other => Err(other.into()),
        })?;
        let driver = netlist.drivers()?;
        let read = netlist.instances.iter().flat_map(|i| i.inputs.iter().copied()).chain(netlist.output_nets());
        for net in read {
            if !netlist.is_input(net) && driver[net].is_none() {
                return Err(VerifyError::XState(netlist.nets[net].clone()));
            }
        }
        let gates = netlist
            .topo_order()?
            .into_iter()
            .map(|i| {
                let inst = &netlist.instances[i];
                let cell = lib.by_name(&inst.cell).ok_or_else(|| NetlistError::UnknownCell(inst.cell.clone()))?;
                Ok(Gate { function: cell.function, arity: cell.arity(), inputs: inst.inputs.clone(), output: inst.output })
            })
            .collect::<Result<_, VerifyError>>()?;
        let p = &netlist.ports;
        Ok(Simulator {
            width: n,
            a: p.a.clone(),
            b: p.b.clone(),
            cin: p.cin,
            sum: p.sum.clone(),
            cout: p.cout,
            nets: netlist.nets.len(),
            gates,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Evaluates up to 64 input triples at once.
    pub fn run(&self, batch: &[(u128, u128, bool)]) -> Vec<(u128, bool)> {
        assert!(batch.len() <= 64, "at most 64 lanes");
        let mut word = vec![0u64; self.nets];
        for (lane, &(a, b, cin)) in batch.iter().enumerate() {
            for i in 0..self.width {
                word[self.a[i]] |= ((a >> i & 1) as u64) << lane;
                word[self.b[i]] |= ((b >> i & 1) as u64) << lane;
            }
            word[self.cin] |= (cin as u64) << lane;
        }
        for g in &self.gates {
            let mut out = 0u64;
            for row in (0..1usize << g.arity).filter(|r| g.function >> r & 1 == 1) {
                out |= g.inputs.iter().enumerate().fold(!0u64, |acc, (j, &net)| {
                    acc & if row >> j & 1 == 1 { word[net] } else { !word[net] }
                });
            }
            word[g.output] = out;
        }
        (0..batch.len())
            .map(|lane| {
                let sum = (0..self.width).fold(0u128, |acc, i| acc | ((word[self.sum[i]] >> lane & 1) as u128) << i);
                (sum, word[self.cout] >> lane & 1 == 1)
            })
            .collect()
    }
}

pub fn simulate(netlist: &GateNetlist, lib: &CellLibrary, a: u128, b: u128, cin: bool) -> Result<(u128, bool), VerifyError> {
    let sim = Simulator::new(netlist, lib)?;
    Ok(sim.run(&[(a, b, cin)])[0])
}

/// Fixed corner vectors: zeros, ones, alternating patterns, single-bit walks
/// on each operand and the full carry chain, each with both carry-in values.
pub fn corner_vectors(n: usize) -> Vec<SimVector> {
    let m = mask(n);
    let (hi, lo) = (0xAAAA_AAAA_AAAA_AAAA_AAAA_AAAA_AAAA_AAAAu128 & m, 0x5555_5555_5555_5555_5555_5555_5555_5555u128 & m);
    let mut pairs = vec![(0, 0), (m, m), (m, 0), (0, m), (hi, lo), (lo, hi), (hi, hi), (lo, lo), (m, 1), (1, m)];
    for i in 0..n {
        pairs.push((1 << i, 0));
        pairs.push((0, 1 << i));
        pairs.push((1 << i, m));
        pairs.push((m, 1 << i));
    }
    pairs
        .into_iter()
        .flat_map(|(a, b)| [false, true].map(|cin| SimVector::new(n, a, b, cin)))
        .collect()
}

/// Seeded uniform vectors; the same seed gives the same sequence.
pub fn random_vectors(n: usize, count: usize, seed: u64) -> Vec<SimVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| SimVector::new(n, rng.gen(), rng.gen(), rng.gen())).collect()
}

fn exhaustive_vectors(n: usize) -> impl Iterator<Item = SimVector> {
    let m = 1u128 << n;
    (0..m).flat_map(move |a| (0..m).flat_map(move |b| [false, true].map(|cin| SimVector::new(n, a, b, cin))))
}

/// Checks a vector stream 64 at a time, keeping the first few mismatches.
fn run_vectors(sim: &Simulator, vectors: impl Iterator<Item = SimVector>, mode: EquivMode) -> EquivVerdict {
    let mut verdict = EquivVerdict { mode, vectors: 0, mismatches: Vec::new(), mismatch_count: 0, error: None, pass: false };
    let mut batch = Vec::with_capacity(64);
    let flush = |batch: &mut Vec<SimVector>, verdict: &mut EquivVerdict| {
        let inputs: Vec<_> = batch.iter().map(|v| (v.a, v.b, v.cin)).collect();
        for (v, (sum, cout)) in batch.iter().zip(sim.run(&inputs)) {
            if sum != v.sum || cout != v.cout {
                verdict.mismatch_count += 1;
                if verdict.mismatches.len() < MAX_KEPT_MISMATCHES {
                    verdict.mismatches.push(Mismatch { vector: *v, got_sum: sum, got_cout: cout });
                }
            }
        }
        verdict.vectors += batch.len() as u64;
        batch.clear();
    };
    for v in vectors {
        batch.push(v);
        if batch.len() == 64 {
            flush(&mut batch, &mut verdict);
        }
    }
    if !batch.is_empty() {
        flush(&mut batch, &mut verdict);
    }
    verdict.pass = verdict.mismatch_count == 0;
    verdict
}

/// Exhaustive for narrow adders, otherwise the corner suite plus
/// [`RANDOM_VECTORS`] seeded random vectors.
pub fn check_equiv(netlist: &GateNetlist, lib: &CellLibrary, seed: u64) -> EquivVerdict {
    check_equiv_with(netlist, lib, seed, RANDOM_VECTORS)
}

/// [`check_equiv`] with a custom random vector count for wide adders.
pub fn check_equiv_with(netlist: &GateNetlist, lib: &CellLibrary, seed: u64, random: usize) -> EquivVerdict {
    let n = netlist.width;
    let mode = if n <= EXHAUSTIVE_MAX_WIDTH { EquivMode::Exhaustive } else { EquivMode::Randomized };
    let sim = match Simulator::new(netlist, lib) {
        Ok(sim) => sim,
        Err(e) => {
            return EquivVerdict { mode, vectors: 0, mismatches: Vec::new(), mismatch_count: 0, error: Some(e.to_string()), pass: false }
        }
    };
    match mode {
        EquivMode::Exhaustive => run_vectors(&sim, exhaustive_vectors(n), mode),
        EquivMode::Randomized => check_sampled(netlist, lib, seed, random),
    }
}

/// Corner suite plus `random` seeded vectors at any width; the cheap
/// screen applied to every explored candidate.
pub fn check_sampled(netlist: &GateNetlist, lib: &CellLibrary, seed: u64, random: usize) -> EquivVerdict {
    let mode = EquivMode::Randomized;
    match Simulator::new(netlist, lib) {
        Ok(sim) => {
            let n = sim.width();
            run_vectors(&sim, corner_vectors(n).into_iter().chain(random_vectors(n, random, seed)), mode)
        }
        Err(e) => EquivVerdict { mode, vectors: 0, mismatches: Vec::new(), mismatch_count: 0, error: Some(e.to_string()), pass: false },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefix::{make_classical, Arch};
    use crate::techmap::map_adder;

    fn adder(n: usize) -> (GateNetlist, CellLibrary) {
        let lib = CellLibrary::generic();
        let nl = map_adder(&make_classical(Arch::Sklansky, n).unwrap(), &lib).unwrap();
        (nl, lib)
    }

    #[test]
    fn sixteen_bit_examples() {
        let (nl, lib) = adder(16);
        assert_eq!(simulate(&nl, &lib, 5, 7, false).unwrap(), (12, false));
        assert_eq!(simulate(&nl, &lib, 0xFFFF, 1, false).unwrap(), (0, true));
    }

    #[test]
    fn four_bit_exhaustive() {
        let (nl, lib) = adder(4);
        let v = check_equiv(&nl, &lib, DEFAULT_SEED);
        assert_eq!((v.mode, v.vectors, v.pass), (EquivMode::Exhaustive, 512, true));
    }

    #[test]
    fn undriven_net_is_x() {
        let (mut nl, lib) = adder(4);
        let s0 = nl.ports.sum[0];
        nl.instances.retain(|i| i.output != s0);
        assert_eq!(simulate(&nl, &lib, 1, 1, false).unwrap_err(), VerifyError::XState("sum[0]".into()));
        assert!(!check_equiv(&nl, &lib, 0).pass);
    }

    #[test]
    fn xnor_fault_is_caught() {
        let (mut nl, lib) = adder(8);
        let xor = nl.instances.iter().position(|i| i.cell == "XOR2" || i.cell == "XNOR2").unwrap();
        nl.instances[xor].cell = if nl.instances[xor].cell == "XOR2" { "XNOR2" } else { "XOR2" }.into();
        let v = check_equiv(&nl, &lib, DEFAULT_SEED);
        assert!(!v.pass);
        assert_eq!(v.mismatches.len(), MAX_KEPT_MISMATCHES);
        let first = v.mismatches[0];
        assert_ne!((first.got_sum, first.got_cout), (first.vector.sum, first.vector.cout));
    }

    #[test]
    fn random_sequence_is_seeded() {
        assert_eq!(random_vectors(32, 100, 7), random_vectors(32, 100, 7));
        assert_ne!(random_vectors(32, 100, 7), random_vectors(32, 100, 8));
        let (nl, lib) = adder(32);
        let v = check_equiv_with(&nl, &lib, 7, 2000);
        assert_eq!(v.mode, EquivMode::Randomized);
        assert_eq!(v.vectors, corner_vectors(32).len() as u64 + 2000);
        assert!(v.pass);
    }

    #[test]
    fn corner_suite_contents() {
        let c = corner_vectors(8);
        assert!(c.contains(&SimVector::new(8, 0xFF, 1, false)));
        assert!(c.contains(&SimVector::new(8, 0xAA, 0x55, true)));
        assert!(c.contains(&SimVector::new(8, 0, 0x10, false)));
        assert!(c.iter().all(|v| v.a + v.b + v.cin as u128 == (v.cout as u128) << 8 | v.sum));
    }
}
