// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. `main.rs` only forwards to [`run`].

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use adderopt::dse::{explore, export_reports, DseError, ExploreConfig, Manifest, MANIFEST_FORMAT};
use adderopt::library::CellLibrary;
use adderopt::ling::{hybridize, CoarseModel};
use adderopt::netlist::{emit_verilog, parse_netlist, CellNameMap};
use adderopt::prefix::{make_classical, metrics, min_depth, validate, Arch, PrefixGraph};
use adderopt::search::{search_min_size, SearchConstraints};
use adderopt::techmap::Mapper;
use adderopt::verify::{check_equiv_with, EquivMode, DEFAULT_SEED as VERIFY_SEED, RANDOM_VECTORS};
use anyhow::{anyhow, bail, Context};
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;
pub const THREADS_ENV: &str = "AXON_THREADS";
pub const BENCH_WIDTHS: [&str; 4] = ["16", "23", "31", "32"];

#[derive(Debug, Parser)]
#[command(name = "adderopt", version, about = "Parallel-prefix adder design-space exploration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a classical prefix graph as JSON
    Gen(GenArgs),
    /// Find a minimum-size prefix graph under depth and fanout bounds
    Search(SearchArgs),
    /// Convert timing-critical nodes of a graph to Ling form
    Hybridize(HybridizeArgs),
    /// Enumerate, evaluate and rank candidate netlists
    Explore(ExploreArgs),
    /// Check a netlist against integer addition
    Verify(VerifyArgs),
    /// Map a prefix graph to a gate-level Verilog netlist
    Emit(EmitArgs),
    /// Print the frontier and selected candidates of an explore run
    Report(ReportArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Width {
    /// Adder width in bits
    #[arg(long)]
    pub bits: Option<usize>,
    /// Benchmark width preset
    #[arg(long, value_parser = BENCH_WIDTHS)]
    pub bench: Option<String>,
}

impl Width {
    fn get(&self) -> usize {
        self.bits.or_else(|| self.bench.as_deref().and_then(|b| b.parse().ok())).unwrap_or(0)
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Cell library JSON (built-in generic library if absent)
    #[arg(long, value_name = "PATH")]
    pub lib: Option<PathBuf>,
    /// Run manifest path [default: <output>.manifest.json, or adderopt.manifest.json]
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Architecture
    #[arg(long, value_parser = ["ks", "bk", "sk", "hc"])]
    pub arch: String,
    #[command(flatten)]
    pub width: Width,
    /// Output graph JSON (stdout if absent)
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub width: Width,
    /// Maximum logic depth [default: minimum for the width]
    #[arg(long)]
    pub depth: Option<u32>,
    /// Maximum fanout of any node
    #[arg(long)]
    pub fanout: Option<usize>,
    /// Maximum number of prefix nodes
    #[arg(long)]
    pub node_budget: Option<usize>,
    /// Wall-clock budget in seconds
    #[arg(long, value_name = "SECONDS")]
    pub time_limit: Option<f64>,
    /// Output graph JSON (stdout if absent)
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct HybridizeArgs {
    /// Input graph JSON
    #[arg(long, value_name = "PATH")]
    pub graph: PathBuf,
    /// Output graph JSON (stdout if absent)
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExploreArgs {
    #[command(flatten)]
    pub width: Width,
    /// Maximum logic depth [default: deepest classical generator]
    #[arg(long)]
    pub depth: Option<u32>,
    /// Maximum fanout of any node
    #[arg(long)]
    pub fanout: Option<usize>,
    /// Add Ling hybrids of every seed topology
    #[arg(long)]
    pub hybrid: bool,
    /// Candidates to select, clamped to 5..=20
    #[arg(long, default_value_t = adderopt::dse::DEFAULT_TOP_K)]
    pub top_k: usize,
    /// Candidate cap
    #[arg(long, default_value_t = adderopt::dse::DEFAULT_CAP)]
    pub cap: usize,
    /// Sampling seed
    #[arg(long, default_value_t = adderopt::dse::DEFAULT_SEED)]
    pub seed: u64,
    /// Cell and pin renaming JSON for emitted netlists
    #[arg(long, value_name = "PATH")]
    pub cell_map: Option<PathBuf>,
    /// Cell library JSON (built-in generic library if absent)
    #[arg(long, value_name = "PATH")]
    pub lib: Option<PathBuf>,
    /// Output directory
    #[arg(short, long, value_name = "DIR", default_value = "out")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Verilog netlist to check
    #[arg(long, value_name = "PATH")]
    pub netlist: PathBuf,
    /// Expected width; mismatching ports are an error
    #[arg(long)]
    pub bits: Option<usize>,
    /// Random vector seed
    #[arg(long, default_value_t = VERIFY_SEED)]
    pub seed: u64,
    /// Random vectors above the exhaustive width
    #[arg(long, default_value_t = RANDOM_VECTORS)]
    pub vectors: usize,
    /// Cell and pin renaming JSON used by the netlist
    #[arg(long, value_name = "PATH")]
    pub cell_map: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EmitArgs {
    /// Input graph JSON
    #[arg(long, value_name = "PATH")]
    pub graph: PathBuf,
    /// Inverter candidate index
    #[arg(long, default_value_t = 0)]
    pub candidate: u128,
    /// Skip gate sizing
    #[arg(long = "no-size")]
    pub no_size: bool,
    /// Verilog module name
    #[arg(long, default_value = "adder")]
    pub module: String,
    /// Cell and pin renaming JSON
    #[arg(long, value_name = "PATH")]
    pub cell_map: Option<PathBuf>,
    /// Output Verilog (stdout if absent)
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by explore
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

/// Marks a failure of the tool itself rather than of its inputs.
#[derive(Debug, thiserror::Error)]
#[error("internal error: {0}")]
pub struct Internal(pub String);

fn internal(e: impl std::fmt::Display) -> anyhow::Error {
    anyhow::Error::new(Internal(e.to_string()))
}

/// What a subcommand produced, for the console and the manifest.
#[derive(Default)]
struct Outcome {
    outputs: Vec<PathBuf>,
    summary: Value,
    /// Verification failures still write a manifest but exit non-zero.
    failed: bool,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    format: u32,
    command: &'a str,
    argv: &'a [String],
    version: &'a str,
    status: &'a str,
    error: Option<String>,
    outputs: Vec<String>,
    summary: Value,
    /// Not covered by the determinism guarantee.
    wall_time_s: f64,
}

pub fn command() -> clap::Command {
    Cli::command()
}

/// Runs one invocation and returns the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USER } else { EXIT_OK };
        }
    };
    let started = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(|| dispatch(&cli.command, started)))
        .unwrap_or_else(|p| Err(internal(p.downcast_ref::<String>().cloned().unwrap_or_else(|| format!("{:?}", p.downcast_ref::<&str>())))));
    let code = match &result {
        Ok(o) if o.failed => EXIT_USER,
        Ok(_) => EXIT_OK,
        Err(e) if e.downcast_ref::<Internal>().is_some() => EXIT_INTERNAL,
        Err(_) => EXIT_USER,
    };
    if let Err(e) = &result {
        eprintln!("error: {e:#}");
    }
    if let Some((path, name)) = manifest_path(&cli.command) {
        let (outputs, summary) = match &result {
            Ok(o) => (o.outputs.iter().map(|p| p.display().to_string()).collect(), o.summary.clone()),
            Err(_) => (Vec::new(), Value::Null),
        };
        let m = RunManifest {
            format: MANIFEST_FORMAT,
            command: name,
            argv: &argv[1..],
            version: env!("CARGO_PKG_VERSION"),
            status: match code {
                EXIT_OK => "ok",
                _ if result.is_ok() => "failed",
                _ => "error",
            },
            error: result.as_ref().err().map(|e| format!("{e:#}")),
            outputs,
            summary,
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        if let Err(e) = fs::write(&path, text) {
            eprintln!("error: cannot write manifest {}: {e}", path.display());
            return code.max(EXIT_USER);
        }
    }
    code
}

/// Explore writes its own manifest into the output directory; every other
/// subcommand gets a run manifest here, including failed runs.
fn manifest_path(cmd: &Command) -> Option<(PathBuf, &'static str)> {
    let (name, common, output) = match cmd {
        Command::Gen(a) => ("gen", &a.common, a.output.as_deref()),
        Command::Search(a) => ("search", &a.common, a.output.as_deref()),
        Command::Hybridize(a) => ("hybridize", &a.common, a.output.as_deref()),
        Command::Explore(_) => return None,
        Command::Verify(a) => ("verify", &a.common, None),
        Command::Emit(a) => ("emit", &a.common, a.output.as_deref()),
        Command::Report(a) => ("report", &a.common, None),
    };
    let path = common.manifest.clone().unwrap_or_else(|| match output {
        Some(out) => {
            let mut s = out.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        }
        None => PathBuf::from("adderopt.manifest.json"),
    });
    Some((path, name))
}

fn dispatch(cmd: &Command, started: Instant) -> anyhow::Result<Outcome> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Search(a) => search(a),
        Command::Hybridize(a) => hybrid(a),
        Command::Explore(a) => explore_cmd(a, started),
        Command::Verify(a) => verify(a),
        Command::Emit(a) => emit(a),
        Command::Report(a) => report(a),
    }
}

fn load_lib(path: Option<&Path>) -> anyhow::Result<CellLibrary> {
    match path {
        Some(p) => CellLibrary::load(p).with_context(|| format!("loading cell library {}", p.display())),
        None => Ok(CellLibrary::generic()),
    }
}

fn load_map(path: Option<&Path>) -> anyhow::Result<CellNameMap> {
    match path {
        Some(p) => CellNameMap::from_json(&read(p)?).with_context(|| format!("parsing cell map {}", p.display())),
        None => Ok(CellNameMap::identity()),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(path: &Path) -> anyhow::Result<PrefixGraph> {
    PrefixGraph::from_json(&read(path)?).with_context(|| format!("parsing graph {}", path.display()))
}

/// Writes to `path`, or to stdout when there is none.
fn deliver(path: Option<&Path>, text: &str, outcome: &mut Outcome) -> anyhow::Result<bool> {
    match path {
        Some(p) => {
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
            outcome.outputs.push(p.to_path_buf());
            Ok(true)
        }
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(false)
        }
    }
}

fn graph_summary(g: &PrefixGraph) -> Value {
    let m = metrics(g);
    json!({ "width": g.width(), "size": m.size, "depth": m.depth, "max_fanout": m.max_fanout, "ling_nodes": g.ling_count() })
}

fn print_graph_summary(g: &PrefixGraph) {
    let m = metrics(g);
    println!("width {}  size {}  depth {}  max fanout {}  ling {}", g.width(), m.size, m.depth, m.max_fanout, g.ling_count());
}

fn gen(a: &GenArgs) -> anyhow::Result<Outcome> {
    let arch: Arch = a.arch.parse().map_err(|e: String| anyhow!(e))?;
    let g = make_classical(arch, a.width.get())?;
    let report = validate(&g);
    if !report.is_ok() {
        return Err(internal(format!("generated graph is invalid: {:?}", report.violations)));
    }
    let mut out = Outcome { summary: graph_summary(&g), ..Outcome::default() };
    if deliver(a.output.as_deref(), &g.to_json(), &mut out)? {
        print_graph_summary(&g);
    }
    Ok(out)
}

fn search(a: &SearchArgs) -> anyhow::Result<Outcome> {
    let n = a.width.get();
    let mut c = SearchConstraints::new(n, a.depth.unwrap_or_else(|| min_depth(n))).with_fanout(a.fanout);
    c.node_budget = a.node_budget;
    if let Some(s) = a.time_limit {
        if !(s.is_finite() && s > 0.0) {
            bail!("--time-limit must be a positive number of seconds");
        }
        c.time_budget = Some(Duration::from_secs_f64(s));
    }
    let r = search_min_size(&c)?;
    let mut summary = graph_summary(&r.graph);
    summary["complete"] = json!(r.complete);
    summary["steps"] = json!(r.steps);
    let mut out = Outcome { summary, ..Outcome::default() };
    if deliver(a.output.as_deref(), &r.graph.to_json(), &mut out)? {
        print_graph_summary(&r.graph);
        println!("optimal {}", if r.complete { "proven" } else { "not proven" });
    }
    Ok(out)
}

fn hybrid(a: &HybridizeArgs) -> anyhow::Result<Outcome> {
    let lib = load_lib(a.common.lib.as_deref())?;
    let g = load_graph(&a.graph)?;
    let h = hybridize(&g, &CoarseModel::from_library(&lib));
    let mut summary = graph_summary(&h.graph);
    summary["critical"] = json!(h.critical.len());
    summary["converted"] = json!(h.converted.len());
    summary["adapters"] = json!(h.adapters.len());
    let mut out = Outcome { summary, ..Outcome::default() };
    if deliver(a.output.as_deref(), &h.to_json(), &mut out)? {
        print_graph_summary(&h.graph);
        println!("critical {}  converted {}  adapters {}", h.critical.len(), h.converted.len(), h.adapters.len());
    }
    Ok(out)
}

fn threads() -> anyhow::Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => bail!("{THREADS_ENV} must be a positive integer, got '{v}'"),
        },
        Err(_) => Ok(None),
    }
}

fn dse_error(e: DseError) -> anyhow::Error {
    match e {
        DseError::Techmap(_) | DseError::Netlist(_) => internal(e),
        e => e.into(),
    }
}

fn explore_cmd(a: &ExploreArgs, started: Instant) -> anyhow::Result<Outcome> {
    let lib = load_lib(a.lib.as_deref())?;
    let map = load_map(a.cell_map.as_deref())?;
    let config = ExploreConfig {
        width: a.width.get(),
        max_depth: a.depth,
        max_fanout: a.fanout,
        hybrid: a.hybrid,
        top_k: a.top_k,
        cap: a.cap,
        seed: a.seed,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(internal)?;
    let set = pool.install(|| explore(&config, &lib)).map_err(dse_error)?;
    let m = export_reports(&set, &lib, &map, &a.output, started).map_err(dse_error)?;
    println!(
        "{} candidates ({} rejected{})  frontier {}  selected {}",
        m.candidates,
        m.rejected,
        if m.sampled { ", sampled" } else { "" },
        m.frontier,
        m.selected.len()
    );
    println!("wrote {}", a.output.display());
    Ok(Outcome::default())
}

fn verify(a: &VerifyArgs) -> anyhow::Result<Outcome> {
    let lib = load_lib(a.common.lib.as_deref())?;
    let map = load_map(a.cell_map.as_deref())?;
    let nl = parse_netlist(&read(&a.netlist)?, &lib, &map).with_context(|| format!("parsing {}", a.netlist.display()))?;
    if let Some(n) = a.bits {
        if n != nl.width {
            bail!("netlist {} is {} bits wide, expected {n}", a.netlist.display(), nl.width);
        }
    }
    let v = check_equiv_with(&nl, &lib, a.seed, a.vectors);
    let mode = match v.mode {
        EquivMode::Exhaustive => "exhaustive",
        EquivMode::Randomized => "randomized",
    };
    println!("netlist {}  width {}", a.netlist.display(), nl.width);
    println!("mode {mode}  vectors {}  mismatches {}", v.vectors, v.mismatch_count);
    if let Some(e) = &v.error {
        println!("error {e}");
    }
    for m in &v.mismatches {
        println!(
            "  a={:#x} b={:#x} cin={} expected sum={:#x} cout={} got sum={:#x} cout={}",
            m.vector.a, m.vector.b, m.vector.cin as u8, m.vector.sum, m.vector.cout as u8, m.got_sum, m.got_cout as u8
        );
    }
    println!("result {}", if v.pass { "PASS" } else { "FAIL" });
    Ok(Outcome { summary: serde_json::to_value(&v).map_err(internal)?, failed: !v.pass, ..Outcome::default() })
}

fn emit(a: &EmitArgs) -> anyhow::Result<Outcome> {
    let lib = load_lib(a.common.lib.as_deref())?;
    let map = load_map(a.cell_map.as_deref())?;
    let g = load_graph(&a.graph)?;
    let report = validate(&g);
    if !report.is_ok() {
        bail!("graph {} is invalid: {:?}", a.graph.display(), report.violations);
    }
    let m = Mapper::new(&g).with_module(&a.module);
    if a.candidate >= m.candidate_count() {
        bail!("inverter candidate {} out of range ({} candidates)", a.candidate, m.candidate_count());
    }
    let nl = if a.no_size { m.map(a.candidate, &lib) } else { m.map_sized(a.candidate, &lib) }.map_err(internal)?;
    let eval = adderopt::analysis::evaluate(&nl, &lib).map_err(internal)?;
    let text = emit_verilog(&nl, &lib, &map)?;
    let summary = json!({
        "candidates": m.candidate_count().to_string(),
        "candidate": a.candidate.to_string(),
        "instances": eval.n_instances,
        "inverters": eval.n_inverters,
        "area_transistors": eval.area_transistors,
        "delay_fo1": format!("{:.3}", eval.delay_fo1),
    });
    let mut out = Outcome { summary, ..Outcome::default() };
    if deliver(a.output.as_deref(), &text, &mut out)? {
        println!(
            "candidate {} of {}  instances {}  inverters {}  area {} T  delay {:.3} FO1",
            a.candidate,
            m.candidate_count(),
            eval.n_instances,
            eval.n_inverters,
            eval.area_transistors,
            eval.delay_fo1
        );
    }
    Ok(out)
}

struct Row {
    id: usize,
    area: u64,
    delay: f64,
    inverters: usize,
    ling: usize,
    frontier: bool,
}

fn parse_scatter(text: &str) -> anyhow::Result<Vec<Row>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("scatter.csv is empty"))?;
    if header != "id,area_transistors,delay_fo1,n_inverters,n_ling,on_frontier,selected" {
        bail!("scatter.csv has an unexpected header '{header}'");
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || anyhow!("scatter.csv line {}: malformed row '{line}'", k + 2);
            if f.len() != 7 {
                return Err(bad());
            }
            Ok(Row {
                id: f[0].parse().map_err(|_| bad())?,
                area: f[1].parse().map_err(|_| bad())?,
                delay: f[2].parse().map_err(|_| bad())?,
                inverters: f[3].parse().map_err(|_| bad())?,
                ling: f[4].parse().map_err(|_| bad())?,
                frontier: f[5] == "1",
            })
        })
        .collect()
}

fn report(a: &ReportArgs) -> anyhow::Result<Outcome> {
    let manifest_file = a.input.join("manifest.json");
    let m: Manifest = serde_json::from_str(&read(&manifest_file)?).with_context(|| format!("parsing {}", manifest_file.display()))?;
    let rows = parse_scatter(&read(&a.input.join("scatter.csv"))?)?;
    let selected: std::collections::BTreeSet<usize> = m.selected.iter().map(|s| s.id).collect();
    let mut frontier: Vec<&Row> = rows.iter().filter(|r| r.frontier).collect();
    frontier.sort_by(|x, y| x.delay.total_cmp(&y.delay).then(x.area.cmp(&y.area)).then(x.id.cmp(&y.id)));

    println!(
        "width {}  candidates {}  rejected {}  frontier {}  selected {}{}",
        m.config.width,
        m.candidates,
        m.rejected,
        m.frontier,
        m.selected.len(),
        if m.sampled { "  (sampled)" } else { "" }
    );
    println!();
    println!("frontier");
    println!("{:>7} {:>8} {:>10} {:>5} {:>5} {:>4}", "id", "area_T", "delay_FO1", "inv", "ling", "sel");
    for r in &frontier {
        let sel = if selected.contains(&r.id) { "*" } else { "" };
        println!("{:>7} {:>8} {:>10.3} {:>5} {:>5} {:>4}", r.id, r.area, r.delay, r.inverters, r.ling, sel);
    }
    println!();
    println!("selected (by area-delay product)");
    println!("{:>7} {:<16} {:>8} {:>10} {:>12}  file", "id", "topology", "area_T", "delay_FO1", "adp");
    for s in &m.selected {
        let adp = s.area_transistors as f64 * s.delay_fo1;
        println!("{:>7} {:<16} {:>8} {:>10.3} {:>12.1}  {}", s.id, s.topology, s.area_transistors, s.delay_fo1, adp, s.file);
    }
    let summary = json!({ "candidates": m.candidates, "frontier": frontier.len(), "selected": m.selected.len() });
    Ok(Outcome { summary, ..Outcome::default() })
}
