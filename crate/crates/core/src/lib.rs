// SPDX-License-Identifier: Apache-2.0

//! Parallel-prefix adder generation and evaluation.
//!
//! The pipeline runs topology search ([`search`]), optional hybrid Ling
//! conversion ([`ling`]), technology mapping with polarity and inverter
//! enumeration ([`techmap`]), coarse timing and area ([`analysis`]), and
//! design-space exploration ([`dse`]). [`verify`] and [`netlist`] provide the
//! simulation oracle and the structural Verilog hand-off.

pub mod prefix;
pub mod search;
pub mod library;
pub mod ling;
pub mod netlist;
pub mod techmap;
pub mod analysis;
pub mod verify;
pub mod dse;
