// SPDX-License-Identifier: Apache-2.0

//! Gate-level netlists and their structural Verilog form.
//!
//! Nets are numbered canonically: operand ports `a`, `b`, then `cin`, the
//! `sum` bits, `cout`, and finally internal nets `n<k>` in driver order.
//! Instance pin lists follow the cell's input order.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::library::CellLibrary;

pub type NetId = usize;
pub type InstId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetlistError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown cell '{0}'")]
    UnknownCell(String),
    #[error("cell '{0}' has no entry in the cell name map")]
    UnmappedCell(String),
    #[error("net '{0}' has more than one driver")]
    MultipleDrivers(String),
    #[error("net '{0}' has no driver")]
    Undriven(String),
    #[error("instance '{inst}' connects {got} pins, cell {cell} has {want}")]
    PinCount { inst: String, cell: String, got: usize, want: usize },
    #[error("combinational cycle through instance '{0}'")]
    Cycle(String),
    #[error("cell name map is not one-to-one: '{0}' is used twice")]
    AmbiguousMap(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub cell: String,
    pub size: u32,
    /// Net on each cell input pin, in the cell's pin order.
    pub inputs: Vec<NetId>,
    pub output: NetId,
    /// Which graph signal this instance implements.
    pub node: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ports {
    pub a: Vec<NetId>,
    pub b: Vec<NetId>,
    pub cin: NetId,
    pub sum: Vec<NetId>,
    pub cout: NetId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateNetlist {
    pub module: String,
    pub width: usize,
    pub nets: Vec<String>,
    pub instances: Vec<Instance>,
    pub ports: Ports,
}

impl GateNetlist {
    /// An empty netlist with only port nets.
    pub fn with_ports(module: &str, width: usize) -> Self {
        let mut nets = Vec::new();
        let mut add = |name: String| {
            nets.push(name);
            nets.len() - 1
        };
        let a = (0..width).map(|i| add(format!("a[{i}]"))).collect();
        let b = (0..width).map(|i| add(format!("b[{i}]"))).collect();
        let cin = add("cin".into());
        let sum = (0..width).map(|i| add(format!("sum[{i}]"))).collect();
        let cout = add("cout".into());
        GateNetlist { module: module.into(), width, nets, instances: Vec::new(), ports: Ports { a, b, cin, sum, cout } }
    }

    pub fn port_net_count(&self) -> usize {
        3 * self.width + 2
    }

    pub fn input_nets(&self) -> impl Iterator<Item = NetId> + '_ {
        self.ports.a.iter().chain(&self.ports.b).copied().chain([self.ports.cin])
    }

    pub fn output_nets(&self) -> impl Iterator<Item = NetId> + '_ {
        self.ports.sum.iter().copied().chain([self.ports.cout])
    }

    pub fn is_input(&self, net: NetId) -> bool {
        net < 2 * self.width + 1
    }

    pub fn add_net(&mut self) -> NetId {
        self.nets.push(format!("n{}", self.nets.len()));
        self.nets.len() - 1
    }

    pub fn add_instance(&mut self, cell: &str, size: u32, inputs: Vec<NetId>, output: NetId, node: impl Into<String>) -> InstId {
        let id = self.instances.len();
        self.instances.push(Instance {
            name: format!("u{id}"),
            cell: cell.into(),
            size,
            inputs,
            output,
            node: node.into(),
        });
        id
    }

    /// Driver instance of every net (`None` for inputs and undriven nets).
    pub fn drivers(&self) -> Result<Vec<Option<InstId>>, NetlistError> {
        let mut d = vec![None; self.nets.len()];
        for (id, inst) in self.instances.iter().enumerate() {
            if self.is_input(inst.output) || d[inst.output].replace(id).is_some() {
                return Err(NetlistError::MultipleDrivers(self.nets[inst.output].clone()));
            }
        }
        Ok(d)
    }

    /// `(instance, pin)` pairs reading each net.
    pub fn consumers(&self) -> Vec<Vec<(InstId, usize)>> {
        let mut c = vec![Vec::new(); self.nets.len()];
        for (id, inst) in self.instances.iter().enumerate() {
            for (pin, &net) in inst.inputs.iter().enumerate() {
                c[net].push((id, pin));
            }
        }
        c
    }

    /// Instances in dependency order; fails on cycles and multiple drivers.
    pub fn topo_order(&self) -> Result<Vec<InstId>, NetlistError> {
        let drivers = self.drivers()?;
        let mut indeg: Vec<usize> = self
            .instances
            .iter()
            .map(|i| i.inputs.iter().filter(|&&n| drivers[n].is_some()).count())
            .collect();
        let consumers = self.consumers();
        let mut ready: Vec<InstId> = (0..self.instances.len()).filter(|&i| indeg[i] == 0).collect();
        ready.reverse();
        let mut order = Vec::with_capacity(self.instances.len());
        while let Some(i) = ready.pop() {
            order.push(i);
            for &(c, _) in &consumers[self.instances[i].output] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.push(c);
                }
            }
        }
        if order.len() != self.instances.len() {
            let stuck = (0..self.instances.len()).find(|&i| indeg[i] > 0).expect("cycle member");
            return Err(NetlistError::Cycle(self.instances[stuck].name.clone()));
        }
        Ok(order)
    }

    /// Structural checks against a library: known cells, pin counts, one driver per net, no cycles.
    pub fn check(&self, lib: &CellLibrary) -> Result<(), NetlistError> {
        for inst in &self.instances {
            let cell = lib.by_name(&inst.cell).ok_or_else(|| NetlistError::UnknownCell(inst.cell.clone()))?;
            if inst.inputs.len() != cell.arity() {
                return Err(NetlistError::PinCount {
                    inst: inst.name.clone(),
                    cell: cell.name.clone(),
                    got: inst.inputs.len() + 1,
                    want: cell.arity() + 1,
                });
            }
        }
        let drivers = self.drivers()?;
        for net in self.output_nets().chain(self.instances.iter().flat_map(|i| i.inputs.iter().copied())) {
            if !self.is_input(net) && drivers[net].is_none() {
                return Err(NetlistError::Undriven(self.nets[net].clone()));
            }
        }
        self.topo_order().map(|_| ())
    }

    pub fn inverter_count(&self, lib: &CellLibrary) -> usize {
        let inv = &lib.reference().name;
        self.instances.iter().filter(|i| &i.cell == inv).count()
    }

    /// Renumbers internal nets in order of first driver and renames them `n<k>`;
    /// unreferenced internal nets are dropped.
    pub fn canonicalize(&mut self) {
        let fixed = self.port_net_count();
        let mut map: HashMap<NetId, NetId> = (0..fixed).map(|i| (i, i)).collect();
        let mut names: Vec<String> = self.nets[..fixed].to_vec();
        for inst in &self.instances {
            if !map.contains_key(&inst.output) {
                map.insert(inst.output, names.len());
                names.push(format!("n{}", names.len()));
            }
        }
        for inst in &self.instances {
            for &n in &inst.inputs {
                if !map.contains_key(&n) {
                    map.insert(n, names.len());
                    names.push(format!("n{}", names.len()));
                }
            }
        }
        for (k, inst) in self.instances.iter_mut().enumerate() {
            inst.name = format!("u{k}");
            inst.output = map[&inst.output];
            for n in &mut inst.inputs {
                *n = map[n];
            }
        }
        self.nets = names;
    }
}

/// Cell and pin renaming applied on emit and reversed on parse.
/// An empty map is the identity; a non-empty map must name every cell used.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellNameMap(pub BTreeMap<String, String>);

impl CellNameMap {
    pub fn identity() -> Self {
        CellNameMap::default()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn cell(&self, name: &str) -> Result<String, NetlistError> {
        if self.0.is_empty() {
            return Ok(name.into());
        }
        self.0.get(name).cloned().ok_or_else(|| NetlistError::UnmappedCell(name.into()))
    }

    fn pin<'a>(&'a self, name: &'a str) -> &'a str {
        self.0.get(name).map_or(name, String::as_str)
    }

    fn inverse(&self) -> Result<HashMap<String, String>, NetlistError> {
        let mut inv = HashMap::new();
        for (k, v) in &self.0 {
            if inv.insert(v.clone(), k.clone()).is_some() {
                return Err(NetlistError::AmbiguousMap(v.clone()));
            }
        }
        Ok(inv)
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Emits the netlist as one structural Verilog module with named pin connections.
pub fn emit_verilog(netlist: &GateNetlist, lib: &CellLibrary, map: &CellNameMap) -> Result<String, NetlistError> {
    let n = netlist.width;
    let mut out = String::new();
    let _ = writeln!(out, "module {} (a, b, cin, sum, cout);", netlist.module);
    let _ = writeln!(out, "  input [{}:0] a;", n - 1);
    let _ = writeln!(out, "  input [{}:0] b;", n - 1);
    let _ = writeln!(out, "  input cin;");
    let _ = writeln!(out, "  output [{}:0] sum;", n - 1);
    let _ = writeln!(out, "  output cout;");
    for name in &netlist.nets[netlist.port_net_count()..] {
        let _ = writeln!(out, "  wire {name};");
    }
    for inst in &netlist.instances {
        let cell = lib.by_name(&inst.cell).ok_or_else(|| NetlistError::UnknownCell(inst.cell.clone()))?;
        let mut pins: Vec<String> = cell
            .inputs
            .iter()
            .zip(&inst.inputs)
            .map(|(pin, &net)| format!(".{}({})", map.pin(pin), netlist.nets[net]))
            .collect();
        pins.push(format!(".{}({})", map.pin(&cell.output), netlist.nets[inst.output]));
        let _ = writeln!(out, "  (* size = {}, node = \"{}\" *)", inst.size, escape(&inst.node));
        let _ = writeln!(out, "  {} {} ({});", map.cell(&inst.cell)?, inst.name, pins.join(", "));
    }
    out.push_str("endmodule\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(u64),
    Str(String),
    Sym(&'static str),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 12] = ["(*", "*)", "(", ")", ";", ",", ".", "[", "]", ":", "=", "#"];
const BEHAVIOURAL: [&str; 12] =
    ["assign", "always", "initial", "reg", "begin", "end", "if", "else", "case", "function", "task", "generate"];

impl<'a> Lexer<'a> {
    fn err(&self, line: usize, col: usize, msg: impl Into<String>) -> NetlistError {
        NetlistError::Syntax { line, col, msg: msg.into() }
    }

    fn bump(&mut self) {
        if self.src[self.pos] == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        self.pos += 1;
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, NetlistError> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let (line, col) = (self.line, self.col);
            let rest = &self.src[self.pos..];
            if c.is_ascii_whitespace() {
                self.bump();
            } else if rest.starts_with(b"//") {
                while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                    self.bump();
                }
            } else if rest.starts_with(b"/*") {
                let Some(end) = rest.windows(2).position(|w| w == b"*/") else {
                    return Err(self.err(line, col, "unterminated comment"));
                };
                for _ in 0..end + 2 {
                    self.bump();
                }
            } else if c.is_ascii_alphabetic() || c == b'_' {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_' || self.src[self.pos] == b'$') {
                    self.bump();
                }
                let word = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                out.push((Tok::Ident(word), line, col));
            } else if c.is_ascii_digit() {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.bump();
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).expect("digits");
                let v = text.parse().map_err(|_| self.err(line, col, "number out of range"))?;
                out.push((Tok::Num(v), line, col));
            } else if c == b'"' {
                self.bump();
                let mut s = Vec::new();
                loop {
                    if self.pos >= self.src.len() || self.src[self.pos] == b'\n' {
                        return Err(self.err(line, col, "unterminated string"));
                    }
                    let ch = self.src[self.pos];
                    self.bump();
                    match ch {
                        b'"' => break,
                        b'\\' if self.pos < self.src.len() => {
                            s.push(self.src[self.pos]);
                            self.bump();
                        }
                        _ => s.push(ch),
                    }
                }
                out.push((Tok::Str(String::from_utf8_lossy(&s).into_owned()), line, col));
            } else if let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(s.as_bytes())) {
                for _ in 0..sym.len() {
                    self.bump();
                }
                out.push((Tok::Sym(sym), line, col));
            } else {
                return Err(self.err(line, col, format!("unexpected character '{}'", c as char)));
            }
        }
        Ok(out)
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize, usize)>,
    at: usize,
    lib: &'a CellLibrary,
}

impl Parser<'_> {
    fn here(&self) -> (usize, usize) {
        self.toks.get(self.at).or(self.toks.last()).map_or((1, 1), |t| (t.1, t.2))
    }

    fn err(&self, msg: impl Into<String>) -> NetlistError {
        let (line, col) = self.here();
        NetlistError::Syntax { line, col, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.0)
    }

    fn next(&mut self) -> Result<Tok, NetlistError> {
        let t = self.toks.get(self.at).map(|t| t.0.clone()).ok_or_else(|| self.err("unexpected end of input"))?;
        self.at += 1;
        Ok(t)
    }

    fn sym(&mut self, s: &str) -> Result<(), NetlistError> {
        match self.peek() {
            Some(Tok::Sym(x)) if *x == s => {
                self.at += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected '{s}'"))),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn ident(&mut self) -> Result<String, NetlistError> {
        match self.peek() {
            Some(Tok::Ident(w)) if BEHAVIOURAL.contains(&w.as_str()) => {
                Err(self.err(format!("'{w}' is outside the structural subset")))
            }
            Some(Tok::Ident(w)) => {
                let w = w.clone();
                self.at += 1;
                Ok(w)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn num(&mut self) -> Result<u64, NetlistError> {
        match self.next()? {
            Tok::Num(v) => Ok(v),
            _ => {
                self.at -= 1;
                Err(self.err("expected number"))
            }
        }
    }

    /// `[msb:0]` range; returns the width.
    fn range(&mut self) -> Result<Option<usize>, NetlistError> {
        if !self.is_sym("[") {
            return Ok(None);
        }
        self.sym("[")?;
        let msb = self.num()?;
        self.sym(":")?;
        if self.num()? != 0 {
            self.at -= 1;
            return Err(self.err("bus ranges must end at 0"));
        }
        self.sym("]")?;
        Ok(Some(msb as usize + 1))
    }

    fn parse(&mut self, map: &CellNameMap) -> Result<GateNetlist, NetlistError> {
        let inverse = map.inverse()?;
        let unmap = |s: &str| inverse.get(s).cloned().unwrap_or_else(|| s.to_string());
        match self.ident()?.as_str() {
            "module" => {}
            _ => {
                self.at -= 1;
                return Err(self.err("expected 'module'"));
            }
        }
        let module = self.ident()?;
        self.sym("(")?;
        let mut header = vec![self.ident()?];
        while self.is_sym(",") {
            self.sym(",")?;
            header.push(self.ident()?);
        }
        self.sym(")")?;
        self.sym(";")?;
        if header != ["a", "b", "cin", "sum", "cout"] {
            return Err(self.err("port list must be (a, b, cin, sum, cout)"));
        }

        // Port declarations, in emitted order.
        let mut width = None;
        for (dir, name, bus) in [
            ("input", "a", true),
            ("input", "b", true),
            ("input", "cin", false),
            ("output", "sum", true),
            ("output", "cout", false),
        ] {
            if self.ident()? != dir {
                self.at -= 1;
                return Err(self.err(format!("expected '{dir}' declaration for {name}")));
            }
            let w = self.range()?;
            if self.ident()? != name {
                self.at -= 1;
                return Err(self.err(format!("expected port '{name}'")));
            }
            self.sym(";")?;
            match (bus, w) {
                (true, Some(w)) if width.is_none_or(|x| x == w) => width = Some(w),
                (false, None) => {}
                _ => return Err(self.err(format!("port '{name}' has the wrong shape"))),
            }
        }
        let width = width.expect("bus ports declared");
        let mut nl = GateNetlist::with_ports(&module, width);
        let mut by_name: HashMap<String, NetId> = nl.nets.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();

        loop {
            match self.peek() {
                Some(Tok::Ident(w)) if w == "endmodule" => {
                    self.at += 1;
                    break;
                }
                Some(Tok::Ident(w)) if w == "wire" => {
                    self.at += 1;
                    loop {
                        let name = self.ident()?;
                        if by_name.contains_key(&name) {
                            return Err(self.err(format!("net '{name}' declared twice")));
                        }
                        nl.nets.push(name.clone());
                        by_name.insert(name, nl.nets.len() - 1);
                        if self.is_sym(",") {
                            self.sym(",")?;
                        } else {
                            break;
                        }
                    }
                    self.sym(";")?;
                }
                None => return Err(self.err("missing 'endmodule'")),
                _ => self.instance(&mut nl, &by_name, &unmap)?,
            }
        }
        if self.at != self.toks.len() {
            return Err(self.err("text after 'endmodule'"));
        }
        nl.drivers()?;
        Ok(nl)
    }

    fn net_ref(&mut self, by_name: &HashMap<String, NetId>) -> Result<NetId, NetlistError> {
        let mut name = self.ident()?;
        if self.is_sym("[") {
            self.sym("[")?;
            let i = self.num()?;
            self.sym("]")?;
            name = format!("{name}[{i}]");
        }
        by_name.get(&name).copied().ok_or_else(|| {
            self.at -= 1;
            self.err(format!("undeclared net '{name}'"))
        })
    }

    fn instance(
        &mut self,
        nl: &mut GateNetlist,
        by_name: &HashMap<String, NetId>,
        unmap: &dyn Fn(&str) -> String,
    ) -> Result<(), NetlistError> {
        let mut size = 1u32;
        let mut node = String::new();
        if self.is_sym("(*") {
            self.sym("(*")?;
            loop {
                let key = self.ident()?;
                self.sym("=")?;
                match (key.as_str(), self.next()?) {
                    ("size", Tok::Num(v)) if v > 0 && v <= u32::MAX as u64 => size = v as u32,
                    ("node", Tok::Str(s)) => node = s,
                    _ => {
                        self.at -= 1;
                        return Err(self.err(format!("bad attribute '{key}'")));
                    }
                }
                if self.is_sym(",") {
                    self.sym(",")?;
                } else {
                    break;
                }
            }
            self.sym("*)")?;
        }
        let (cl, cc) = self.here();
        let cell_name = unmap(&self.ident()?);
        let Some(cell) = self.lib.by_name(&cell_name) else {
            return Err(if self.is_sym("=") {
                NetlistError::Syntax { line: cl, col: cc, msg: "continuous assignment is outside the structural subset".into() }
            } else {
                NetlistError::UnknownCell(cell_name)
            });
        };
        let cell = cell.clone();
        let inst_name = self.ident()?;
        self.sym("(")?;
        let mut pins: Vec<Option<NetId>> = vec![None; cell.arity() + 1];
        loop {
            self.sym(".")?;
            let pin = unmap(&self.ident()?);
            let slot = if pin == cell.output { Some(cell.arity()) } else { cell.pin_index(&pin) };
            let Some(slot) = slot else {
                self.at -= 1;
                return Err(self.err(format!("cell {} has no pin '{pin}'", cell.name)));
            };
            self.sym("(")?;
            let net = self.net_ref(by_name)?;
            self.sym(")")?;
            if pins[slot].replace(net).is_some() {
                return Err(self.err(format!("pin '{pin}' connected twice")));
            }
            if self.is_sym(",") {
                self.sym(",")?;
            } else {
                break;
            }
        }
        self.sym(")")?;
        self.sym(";")?;
        let got = pins.iter().filter(|p| p.is_some()).count();
        if got != pins.len() {
            return Err(NetlistError::PinCount { inst: inst_name, cell: cell.name.clone(), got, want: pins.len() });
        }
        let output = pins.pop().flatten().expect("output pin");
        nl.instances.push(Instance {
            name: inst_name,
            cell: cell.name.clone(),
            size,
            inputs: pins.into_iter().map(|p| p.expect("connected")).collect(),
            output,
            node,
        });
        Ok(())
    }
}

/// Parses the structural subset produced by [`emit_verilog`].
pub fn parse_netlist(text: &str, lib: &CellLibrary, map: &CellNameMap) -> Result<GateNetlist, NetlistError> {
    let toks = Lexer { src: text.as_bytes(), pos: 0, line: 1, col: 1 }.tokens()?;
    Parser { toks, at: 0, lib }.parse(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> GateNetlist {
        let mut nl = GateNetlist::with_ports("adder1", 1);
        let x = nl.add_net();
        let ng = nl.add_net();
        nl.add_instance("XOR2", 1, vec![0, 1], x, "x0");
        nl.add_instance("AOI22", 1, vec![0, 1, x, 2], ng, "g0");
        nl.add_instance("XOR2", 1, vec![x, 2], nl.ports.sum[0], "s0");
        nl.add_instance("INV", 2, vec![ng], nl.ports.cout, "cout");
        nl
    }

    #[test]
    fn round_trip() {
        let lib = CellLibrary::generic();
        let nl = tiny();
        nl.check(&lib).unwrap();
        let text = emit_verilog(&nl, &lib, &CellNameMap::identity()).unwrap();
        assert_eq!(parse_netlist(&text, &lib, &CellNameMap::identity()).unwrap(), nl);
    }

    #[test]
    fn renaming_map_round_trips() {
        let lib = CellLibrary::generic();
        let nl = tiny();
        let map = CellNameMap(
            [("INV", "INV_X1"), ("XOR2", "XOR2_X1"), ("AOI22", "AOI22_X1"), ("A", "I")]
                .into_iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        );
        let text = emit_verilog(&nl, &lib, &map).unwrap();
        assert!(text.contains("INV_X1 u3 (.I(n6), .Y(cout));"), "{text}");
        assert_eq!(parse_netlist(&text, &lib, &map).unwrap(), nl);
        let partial = CellNameMap([("INV".to_string(), "INV_X1".to_string())].into_iter().collect());
        assert_eq!(emit_verilog(&nl, &lib, &partial), Err(NetlistError::UnmappedCell("XOR2".into())));
    }

    #[test]
    fn rejects_assign_and_double_drivers() {
        let lib = CellLibrary::generic();
        let text = emit_verilog(&tiny(), &lib, &CellNameMap::identity()).unwrap();
        let bad = text.replace("  wire n5;\n", "  wire n5;\n  assign n5 = cin;\n");
        assert!(matches!(parse_netlist(&bad, &lib, &CellNameMap::identity()), Err(NetlistError::Syntax { line: 8, .. })));
        let dup = text.replace(".Y(cout)", ".Y(n5)");
        assert_eq!(parse_netlist(&dup, &lib, &CellNameMap::identity()), Err(NetlistError::MultipleDrivers("n5".into())));
        let unknown = text.replace("INV u3", "BUF u3");
        assert_eq!(parse_netlist(&unknown, &lib, &CellNameMap::identity()), Err(NetlistError::UnknownCell("BUF".into())));
    }

    #[test]
    fn canonicalize_renames_in_driver_order() {
        let mut nl = tiny();
        nl.instances.swap(0, 1);
        nl.canonicalize();
        assert_eq!(nl.instances[0].output, 5);
        assert_eq!(nl.instances[0].name, "u0");
        assert_eq!(nl.nets[5], "n5");
    }

    #[test]
    fn cycle_detected() {
        let lib = CellLibrary::generic();
        let mut nl = GateNetlist::with_ports("loop", 1);
        let x = nl.add_net();
        let y = nl.add_net();
        nl.add_instance("INV", 1, vec![y], x, "");
        nl.add_instance("INV", 1, vec![x], y, "");
        nl.add_instance("INV", 1, vec![x], nl.ports.sum[0], "");
        nl.add_instance("INV", 1, vec![y], nl.ports.cout, "");
        assert!(matches!(nl.check(&lib), Err(NetlistError::Cycle(_))));
    }
}
