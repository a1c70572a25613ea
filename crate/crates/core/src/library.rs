// SPDX-License-Identifier: Apache-2.0

//! Generic standard-cell library with logical-effort parameters.
//!
//! Delays are normalized so that a x1 reference inverter driving one identical
//! inverter takes exactly 1.0 (one FO1). Input capacitance of a pin is
//! `g * size`; drive resistance is `r_dr / size`.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const GENERIC_JSON: &str = include_str!("../data/generic_cells.json");

/// Largest arity handled by the truth-table encoding.
pub const MAX_CELL_INPUTS: usize = 6;

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("cannot read library {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid library JSON: {0}")]
    Json(String),
    #[error("cell {0} is defined twice")]
    DuplicateCell(String),
    #[error("cell {name}: {reason}")]
    BadCell { name: String, reason: String },
    #[error("FO1 reference cell {0} is missing or is not a single-input inverter")]
    BadReference(String),
    #[error("FO1 self-check failed: reference stage evaluates to {0} instead of 1.0")]
    Calibration(f64),
}

fn default_output() -> String {
    "Y".into()
}

fn default_r_dr() -> f64 {
    1.0
}

/// One cell as written in the library JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellModel {
    pub name: String,
    /// Input pin names; pin `k` is bit `k` of a truth-table row index.
    pub inputs: Vec<String>,
    #[serde(default = "default_output")]
    pub output: String,
    /// Truth table: bit `m` is the output for input row `m`.
    pub function: u64,
    pub inverting: bool,
    pub g: f64,
    pub p_par: f64,
    pub t_count: u32,
    pub sizes: Vec<u32>,
    #[serde(default = "default_r_dr")]
    pub r_dr: f64,
}

impl CellModel {
    pub fn arity(&self) -> usize {
        self.inputs.len()
    }

    pub fn c_in(&self, size: u32) -> f64 {
        self.g * size as f64
    }

    pub fn r_drive(&self, size: u32) -> f64 {
        self.r_dr / size as f64
    }

    /// Raw (un-normalized) stage delay for a given total load.
    pub fn raw_delay(&self, size: u32, load: f64) -> f64 {
        self.p_par + self.r_drive(size) * load
    }

    pub fn eval(&self, row: usize) -> bool {
        self.function >> row & 1 == 1
    }

    pub fn pin_index(&self, pin: &str) -> Option<usize> {
        self.inputs.iter().position(|p| p == pin)
    }

    fn check(&self) -> Result<(), LibraryError> {
        let bad = |reason: &str| LibraryError::BadCell { name: self.name.clone(), reason: reason.into() };
        let k = self.arity();
        if k == 0 || k > MAX_CELL_INPUTS {
            return Err(bad("input count must be between 1 and 6"));
        }
        let rows = 1u32 << k;
        if rows < 64 && self.function >> rows != 0 {
            return Err(bad("function has bits beyond its truth table"));
        }
        if self.t_count == 0 {
            return Err(bad("transistor count must be positive"));
        }
        if !(self.g.is_finite() && self.g > 0.0 && self.p_par.is_finite() && self.p_par >= 0.0) {
            return Err(bad("g and p_par must be finite, g positive"));
        }
        if !(self.r_dr.is_finite() && self.r_dr > 0.0) {
            return Err(bad("r_dr must be positive"));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(bad("sizes must be non-empty and positive"));
        }
        let mut pins: Vec<&String> = self.inputs.iter().chain([&self.output]).collect();
        pins.sort();
        pins.dedup();
        if pins.len() != k + 1 {
            return Err(bad("pin names must be distinct"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LibraryDoc {
    cells: Vec<CellModel>,
    fo1_reference: String,
}

/// A cell chosen for a target function: `pins[k]` is the cell pin that receives target input `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMatch {
    pub cell: usize,
    pub pins: Vec<usize>,
}

#[derive(Debug)]
pub struct CellLibrary {
    cells: Vec<CellModel>,
    by_name: HashMap<String, usize>,
    fo1_reference: String,
    fo1_raw: f64,
    matches: Mutex<HashMap<(usize, u64), Option<CellMatch>>>,
}

impl Clone for CellLibrary {
    fn clone(&self) -> Self {
        CellLibrary {
            cells: self.cells.clone(),
            by_name: self.by_name.clone(),
            fo1_reference: self.fo1_reference.clone(),
            fo1_raw: self.fo1_raw,
            matches: Mutex::new(HashMap::new()),
        }
    }
}

impl CellLibrary {
    /// The built-in generic library.
    pub fn generic() -> Self {
        Self::from_json(GENERIC_JSON).expect("built-in library is valid")
    }

    pub fn load(path: &Path) -> Result<Self, LibraryError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| LibraryError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, LibraryError> {
        let doc: LibraryDoc = serde_json::from_str(text).map_err(|e| LibraryError::Json(e.to_string()))?;
        Self::new(doc.cells, doc.fo1_reference)
    }

    pub fn new(cells: Vec<CellModel>, fo1_reference: String) -> Result<Self, LibraryError> {
        let mut by_name = HashMap::new();
        for (i, cell) in cells.iter().enumerate() {
            cell.check()?;
            if by_name.insert(cell.name.clone(), i).is_some() {
                return Err(LibraryError::DuplicateCell(cell.name.clone()));
            }
        }
        let reference = by_name
            .get(&fo1_reference)
            .map(|&i| &cells[i])
            .filter(|c| c.arity() == 1 && c.function == 0b01)
            .ok_or_else(|| LibraryError::BadReference(fo1_reference.clone()))?;
        if !reference.sizes.contains(&1) {
            return Err(LibraryError::BadReference(fo1_reference.clone()));
        }
        let fo1_raw = reference.raw_delay(1, reference.c_in(1));
        let lib = CellLibrary { cells, by_name, fo1_reference, fo1_raw, matches: Mutex::new(HashMap::new()) };
        let check = lib.fo1_check();
        if (check - 1.0).abs() > 1e-9 {
            return Err(LibraryError::Calibration(check));
        }
        Ok(lib)
    }

    pub fn to_json(&self) -> String {
        let doc = LibraryDoc { cells: self.cells.clone(), fo1_reference: self.fo1_reference.clone() };
        serde_json::to_string_pretty(&doc).expect("library serializes")
    }

    /// Normalized delay of a x1 reference inverter driving one x1 reference inverter.
    pub fn fo1_check(&self) -> f64 {
        let r = self.reference();
        self.normalize(r.raw_delay(1, r.c_in(1)))
    }

    pub fn normalize(&self, raw: f64) -> f64 {
        raw / self.fo1_raw
    }

    pub fn cells(&self) -> &[CellModel] {
        &self.cells
    }

    pub fn cell(&self, idx: usize) -> &CellModel {
        &self.cells[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn by_name(&self, name: &str) -> Option<&CellModel> {
        self.index_of(name).map(|i| &self.cells[i])
    }

    pub fn reference(&self) -> &CellModel {
        &self.cells[self.by_name[&self.fo1_reference]]
    }

    pub fn reference_index(&self) -> usize {
        self.by_name[&self.fo1_reference]
    }

    /// Finds the cheapest cell computing `function` over `arity` inputs, allowing any pin permutation.
    pub fn match_function(&self, arity: usize, function: u64) -> Option<CellMatch> {
        let key = (arity, function);
        if let Some(hit) = self.matches.lock().expect("match cache").get(&key) {
            return hit.clone();
        }
        let mut found: Option<(u32, &str, CellMatch)> = None;
        for (idx, cell) in self.cells.iter().enumerate().filter(|(_, c)| c.arity() == arity) {
            for perm in permutations(arity) {
                if permuted_function(function, &perm) == cell.function {
                    let better = found.as_ref().is_none_or(|(t, name, _)| (cell.t_count, cell.name.as_str()) < (*t, *name));
                    if better {
                        found = Some((cell.t_count, &cell.name, CellMatch { cell: idx, pins: perm }));
                    }
                    break;
                }
            }
        }
        let result = found.map(|(_, _, m)| m);
        self.matches.lock().expect("match cache").insert(key, result.clone());
        result
    }
}

/// Truth table of the cell that sees target input `k` on pin `perm[k]`.
fn permuted_function(function: u64, perm: &[usize]) -> u64 {
    let k = perm.len();
    let mut out = 0u64;
    for row in 0..1usize << k {
        // `row` indexes cell pins; rebuild the target row it corresponds to.
        let mut target = 0usize;
        for (input, &pin) in perm.iter().enumerate() {
            target |= (row >> pin & 1) << input;
        }
        out |= (function >> target & 1) << row;
    }
    out
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..left.len() {
            let x = left.remove(i);
            prefix.push(x);
            go(prefix, left, out);
            prefix.pop();
            left.insert(i, x);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..k).collect(), &mut out);
    out
}
