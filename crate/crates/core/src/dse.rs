// SPDX-License-Identifier: Apache-2.0

//! Design-space exploration: seed topologies, optional Ling hybrids, every
//! inverter candidate of each, sized and evaluated, then a Pareto frontier
//! and an area-delay ranked selection.
//!
//! Candidates keep only their provenance and evaluation; netlists are
//! rebuilt on demand, which is deterministic.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{evaluate, EvalPoint};
use crate::library::CellLibrary;
use crate::ling::{hybridize, CoarseModel};
use crate::netlist::{emit_verilog, CellNameMap, GateNetlist, NetlistError};
use crate::prefix::{make_classical, metrics, min_depth, validate, Arch, PrefixGraph};
use crate::search::{search_min_size, SearchConstraints, SearchError};
use crate::techmap::{Mapper, TechmapError};
use crate::verify::check_sampled;

pub const DEFAULT_TOP_K: usize = 12;
pub const TOP_K_RANGE: (usize, usize) = (5, 20);
pub const DEFAULT_CAP: usize = 50_000;
pub const DEFAULT_SEED: u64 = 1;
/// Random vectors per candidate in the screening check.
pub const SCREEN_VECTORS: usize = 256;
pub const MANIFEST_FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum DseError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("no candidate survived exploration")]
    EmptyDesignSpace,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Techmap(#[from] TechmapError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreConfig {
    pub width: usize,
    /// Defaults to the deepest classical generator, so every classical seed qualifies.
    pub max_depth: Option<u32>,
    pub max_fanout: Option<usize>,
    pub hybrid: bool,
    pub top_k: usize,
    pub cap: usize,
    pub seed: u64,
}

impl ExploreConfig {
    pub fn new(width: usize) -> Self {
        ExploreConfig { width, max_depth: None, max_fanout: None, hybrid: false, top_k: DEFAULT_TOP_K, cap: DEFAULT_CAP, seed: DEFAULT_SEED }
    }

    pub fn depth_bound(&self) -> u32 {
        self.max_depth.unwrap_or_else(|| {
            Arch::ALL
                .iter()
                .filter_map(|&a| make_classical(a, self.width).ok())
                .map(|g| g.depth())
                .fold(min_depth(self.width), u32::max)
        })
    }

    pub fn effective_top_k(&self) -> usize {
        self.top_k.clamp(TOP_K_RANGE.0, TOP_K_RANGE.1)
    }

    pub fn check(&self) -> Result<(), DseError> {
        if self.cap < self.effective_top_k() {
            return Err(DseError::Config(format!("candidate cap {} is below top-k {}", self.cap, self.effective_top_k())));
        }
        self.constraints().check()?;
        Ok(())
    }

    pub fn constraints(&self) -> SearchConstraints {
        SearchConstraints::new(self.width, self.depth_bound()).with_fanout(self.max_fanout)
    }
}

/// A seed topology or its hybrid.
#[derive(Debug, Clone)]
pub struct Topology {
    pub name: String,
    pub graph: PrefixGraph,
    pub n_ling: usize,
    /// The prefix-only topology a hybrid was derived from.
    pub parent: Option<usize>,
    /// Inverter candidates this topology offers before the cap.
    pub space: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: usize,
    pub topology: usize,
    /// Inverter candidate index within the topology.
    pub assignment: u128,
    pub eval: EvalPoint,
}

#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub config: ExploreConfig,
    pub topologies: Vec<Topology>,
    pub candidates: Vec<Candidate>,
    /// Ids on the Pareto frontier, ordered by delay then area.
    pub frontier: Vec<usize>,
    /// Top-k ids by area-delay product.
    pub selected: Vec<usize>,
    /// Candidates dropped by the screening check.
    pub rejected: usize,
    /// True when the cap forced sampling of inverter candidates.
    pub sampled: bool,
    mappers: Vec<Mapper>,
}

impl CandidateSet {
    pub fn netlist(&self, id: usize, lib: &CellLibrary) -> Result<GateNetlist, DseError> {
        let c = &self.candidates[id];
        Ok(self.mappers[c.topology].map_sized(c.assignment, lib)?)
    }

    pub fn unsized_netlist(&self, id: usize, lib: &CellLibrary) -> Result<GateNetlist, DseError> {
        let c = &self.candidates[id];
        Ok(self.mappers[c.topology].map(c.assignment, lib)?)
    }

    pub fn points(&self) -> Vec<EvalPoint> {
        self.candidates.iter().map(|c| c.eval).collect()
    }

    /// Lowest area-delay product among the candidates of `topology`, ties by id.
    pub fn best_of(&self, topology: usize) -> Option<&Candidate> {
        self.candidates
            .iter()
            .filter(|c| c.topology == topology)
            .min_by(|a, b| a.eval.adp().total_cmp(&b.eval.adp()).then(a.id.cmp(&b.id)))
    }

    /// The hybrid derived from `topology`, if exploration produced one.
    pub fn hybrid_of(&self, topology: usize) -> Option<usize> {
        self.topologies.iter().position(|t| t.parent == Some(topology))
    }

    /// The top selected candidate, optionally restricted to Ling or pure prefix topologies.
    pub fn best(&self, ling: Option<bool>) -> Option<&Candidate> {
        let want = |c: &&Candidate| ling.is_none_or(|l| (self.topologies[c.topology].n_ling > 0) == l);
        self.selected.iter().map(|&id| &self.candidates[id]).find(want).or_else(|| {
            let mut pool: Vec<&Candidate> = self.candidates.iter().filter(want).collect();
            pool.sort_by(|a, b| a.eval.adp().total_cmp(&b.eval.adp()).then(a.id.cmp(&b.id)));
            pool.first().copied()
        })
    }
}

fn seed_topologies(config: &ExploreConfig, lib: &CellLibrary) -> Result<Vec<Topology>, DseError> {
    let c = config.constraints();
    let mut seeds = vec![("search".to_string(), search_min_size(&c)?.graph)];
    for arch in Arch::ALL {
        let Ok(g) = make_classical(arch, config.width) else { continue };
        let m = metrics(&g);
        if m.depth <= c.max_depth && c.max_fanout.is_none_or(|f| m.max_fanout <= f) && validate(&g).is_ok() {
            seeds.push((arch.short_name().to_string(), g));
        }
    }
    let mut out: Vec<Topology> = Vec::new();
    for (name, graph) in seeds {
        if !out.iter().any(|t| t.graph == graph) {
            out.push(Topology { name, n_ling: 0, parent: None, graph, space: 0 });
        }
    }
    if config.hybrid {
        let model = CoarseModel::from_library(lib);
        for k in 0..out.len() {
            let h = hybridize(&out[k].graph, &model);
            if !h.converted.is_empty() && !out.iter().any(|t| t.graph == h.graph) {
                let name = format!("{}+ling", out[k].name);
                out.push(Topology { name, n_ling: h.graph.ling_count(), parent: Some(k), graph: h.graph, space: 0 });
            }
        }
    }
    Ok(out)
}

/// Splits `cap` across topologies: small spaces are taken whole and the
/// remainder is shared evenly by the rest.
fn allot(spaces: &[u128], cap: usize) -> Vec<usize> {
    let mut share = vec![0usize; spaces.len()];
    let mut open: Vec<usize> = (0..spaces.len()).collect();
    let mut left = cap;
    while !open.is_empty() && left > 0 {
        let even = (left / open.len()).max(1);
        let (small, big): (Vec<usize>, Vec<usize>) = open.iter().partition(|&&t| spaces[t] <= even as u128);
        if small.is_empty() {
            for (k, &t) in big.iter().enumerate() {
                share[t] = left / big.len() + usize::from(k < left % big.len());
            }
            break;
        }
        for &t in &small {
            share[t] = spaces[t] as usize;
            left -= share[t];
        }
        open = big;
    }
    share
}

/// `take` distinct inverter indices out of `space`, always including 0.
fn pick(space: u128, take: usize, rng: &mut ChaCha8Rng) -> Vec<u128> {
    if space <= take as u128 {
        return (0..space).collect();
    }
    let mut out: BTreeSet<u128> = BTreeSet::from([0]);
    if space <= 4 * take as u128 {
        out.extend(sample(rng, space as usize - 1, take - 1).into_iter().map(|i| i as u128 + 1));
    } else {
        while out.len() < take {
            out.insert(rng.gen_range(0..space));
        }
    }
    out.into_iter().collect()
}

pub fn explore(config: &ExploreConfig, lib: &CellLibrary) -> Result<CandidateSet, DseError> {
    config.check()?;
    let mut topologies = seed_topologies(config, lib)?;
    let mappers: Vec<Mapper> = topologies
        .iter()
        .map(|t| Mapper::new(&t.graph).with_module(&format!("adder{}", config.width)))
        .collect();
    for (t, m) in topologies.iter_mut().zip(&mappers) {
        t.space = m.candidate_count();
    }
    let spaces: Vec<u128> = topologies.iter().map(|t| t.space).collect();
    let total = spaces.iter().fold(0u128, |a, &s| a.saturating_add(s));
    let sampled = total > config.cap as u128;
    let share = allot(&spaces, config.cap);

    let mut work: Vec<(usize, u128)> = Vec::new();
    for (t, &space) in spaces.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        work.extend(pick(space, share[t], &mut rng).into_iter().map(|i| (t, i)));
    }

    let seed = config.seed;
    let results: Vec<Result<Option<EvalPoint>, DseError>> = work
        .par_iter()
        .map(|&(t, i)| {
            let nl = mappers[t].map_sized(i, lib)?;
            if !check_sampled(&nl, lib, seed, SCREEN_VECTORS).pass {
                return Ok(None);
            }
            Ok(Some(evaluate(&nl, lib).map_err(TechmapError::from)?))
        })
        .collect();

    let mut candidates = Vec::new();
    let mut rejected = 0;
    for (&(t, i), r) in work.iter().zip(results) {
        match r? {
            Some(eval) => candidates.push(Candidate { id: candidates.len(), topology: t, assignment: i, eval }),
            None => rejected += 1,
        }
    }
    if candidates.is_empty() {
        return Err(DseError::EmptyDesignSpace);
    }
    let points: Vec<EvalPoint> = candidates.iter().map(|c| c.eval).collect();
    let frontier = pareto(&points);
    let ranked: Vec<(usize, EvalPoint)> = frontier.iter().map(|&id| (id, points[id])).collect();
    let selected = select_topk(&ranked, config.effective_top_k());
    Ok(CandidateSet { config: config.clone(), topologies, candidates, frontier, selected, rejected, sampled, mappers })
}

pub fn dominates(p: &EvalPoint, q: &EvalPoint) -> bool {
    p.area_transistors <= q.area_transistors
        && p.delay_fo1 <= q.delay_fo1
        && (p.area_transistors < q.area_transistors || p.delay_fo1 < q.delay_fo1)
}

/// Indices of the non-dominated points, ordered by delay, area, then index.
pub fn pareto(points: &[EvalPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .delay_fo1
            .total_cmp(&points[j].delay_fo1)
            .then(points[i].area_transistors.cmp(&points[j].area_transistors))
            .then(i.cmp(&j))
    });
    let mut out = Vec::new();
    let mut best_area = u64::MAX;
    let mut k = 0;
    while k < order.len() {
        // One run of equal delay; only its minimum area can survive.
        let d = points[order[k]].delay_fo1;
        let end = k + order[k..].iter().take_while(|&&i| points[i].delay_fo1 == d).count();
        let a = points[order[k]].area_transistors;
        if a < best_area {
            out.extend(order[k..end].iter().copied().filter(|&i| points[i].area_transistors == a));
            best_area = a;
        }
        k = end;
    }
    out
}

/// The `k` lowest area-delay products, ties broken by id.
pub fn select_topk(frontier: &[(usize, EvalPoint)], k: usize) -> Vec<usize> {
    let mut ranked: Vec<&(usize, EvalPoint)> = frontier.iter().collect();
    ranked.sort_by(|a, b| a.1.adp().total_cmp(&b.1.adp()).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(k).map(|&(id, _)| id).collect()
}

pub fn scatter_csv(set: &CandidateSet) -> String {
    let on_frontier: BTreeSet<usize> = set.frontier.iter().copied().collect();
    let selected: BTreeSet<usize> = set.selected.iter().copied().collect();
    let mut out = String::from("id,area_transistors,delay_fo1,n_inverters,n_ling,on_frontier,selected\n");
    for c in &set.candidates {
        out.push_str(&format!(
            "{},{},{:.3},{},{},{},{}\n",
            c.id,
            c.eval.area_transistors,
            c.eval.delay_fo1,
            c.eval.n_inverters,
            set.topologies[c.topology].n_ling,
            on_frontier.contains(&c.id) as u8,
            selected.contains(&c.id) as u8
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestTopology {
    pub name: String,
    pub size: usize,
    pub depth: u32,
    pub n_ling: usize,
    pub inverter_space: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectedEntry {
    pub id: usize,
    pub file: String,
    pub topology: String,
    pub assignment: String,
    pub area_transistors: u64,
    pub delay_fo1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub config: ExploreConfig,
    pub seed: u64,
    pub candidates: usize,
    pub rejected: usize,
    pub frontier: usize,
    pub sampled: bool,
    pub topologies: Vec<ManifestTopology>,
    pub selected: Vec<SelectedEntry>,
    /// Not covered by the determinism guarantee.
    pub wall_time_s: f64,
}

pub fn selected_file_name(id: usize) -> String {
    format!("cand_{id:05}.v")
}

fn write(path: &Path, text: &str) -> Result<(), DseError> {
    fs::write(path, text).map_err(|source| DseError::Io { path: path.to_path_buf(), source })
}

/// Writes `scatter.csv`, one Verilog file per selected candidate and `manifest.json`.
pub fn export_reports(
    set: &CandidateSet,
    lib: &CellLibrary,
    map: &CellNameMap,
    dir: &Path,
    started: Instant,
) -> Result<Manifest, DseError> {
    fs::create_dir_all(dir).map_err(|source| DseError::Io { path: dir.to_path_buf(), source })?;
    write(&dir.join("scatter.csv"), &scatter_csv(set))?;
    let mut selected = Vec::new();
    for &id in &set.selected {
        let c = &set.candidates[id];
        let file = selected_file_name(id);
        write(&dir.join(&file), &emit_verilog(&set.netlist(id, lib)?, lib, map)?)?;
        selected.push(SelectedEntry {
            id,
            file,
            topology: set.topologies[c.topology].name.clone(),
            assignment: c.assignment.to_string(),
            area_transistors: c.eval.area_transistors,
            delay_fo1: c.eval.delay_fo1,
        });
    }
    let manifest = Manifest {
        format: MANIFEST_FORMAT,
        config: set.config.clone(),
        seed: set.config.seed,
        candidates: set.candidates.len(),
        rejected: set.rejected,
        frontier: set.frontier.len(),
        sampled: set.sampled,
        topologies: set
            .topologies
            .iter()
            .map(|t| ManifestTopology {
                name: t.name.clone(),
                size: t.graph.size(),
                depth: t.graph.depth(),
                n_ling: t.n_ling,
                inverter_space: t.space.to_string(),
            })
            .collect(),
        selected,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&dir.join("manifest.json"), &text)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(area: u64, delay: f64) -> EvalPoint {
        EvalPoint { area_transistors: area, delay_fo1: delay, n_instances: 0, n_inverters: 0 }
    }

    #[test]
    fn pareto_examples() {
        assert_eq!(pareto(&[pt(1, 2.0), pt(2, 1.0), pt(2, 2.0)]), vec![1, 0]);
        assert_eq!(pareto(&[pt(3, 3.0)]), vec![0]);
        assert_eq!(pareto(&[pt(3, 3.0), pt(3, 3.0), pt(4, 3.0)]), vec![0, 1]);
    }

    #[test]
    fn topk_examples() {
        let f = [(0, pt(10, 1.0)), (1, pt(8, 1.5)), (2, pt(20, 0.9))];
        assert_eq!(select_topk(&f, 2), vec![0, 1]);
        assert_eq!(select_topk(&f, 5), vec![0, 1, 2]);
        let scaled: Vec<_> = f.iter().map(|&(i, p)| (i, pt(p.area_transistors * 7, p.delay_fo1))).collect();
        assert_eq!(select_topk(&scaled, 2), vec![0, 1]);
    }

    #[test]
    fn top_k_is_clamped() {
        let mut c = ExploreConfig::new(8);
        c.top_k = 2;
        assert_eq!(c.effective_top_k(), 5);
        c.top_k = 99;
        assert_eq!(c.effective_top_k(), 20);
        c.cap = 10;
        assert!(matches!(c.check(), Err(DseError::Config(_))));
    }

    #[test]
    fn allotment_fills_cap() {
        assert_eq!(allot(&[3, 100, 100], 53), vec![3, 25, 25]);
        assert_eq!(allot(&[3, 4], 53), vec![3, 4]);
        assert_eq!(allot(&[1000, 1000, 1000], 10), vec![4, 3, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = pick(1 << 90, 50, &mut rng);
        assert_eq!((p.len(), p[0]), (50, 0));
        assert_eq!(pick(30, 20, &mut rng).len(), 20);
    }

    #[test]
    fn two_bit_space_is_one_candidate() {
        let set = explore(&ExploreConfig::new(2), &CellLibrary::generic()).unwrap();
        assert_eq!((set.topologies.len(), set.candidates.len()), (1, 1));
        assert_eq!(set.selected, vec![0]);
    }

    #[test]
    fn infeasible_depth_propagates() {
        let mut c = ExploreConfig::new(16);
        c.max_depth = Some(3);
        assert!(matches!(
            explore(&c, &CellLibrary::generic()),
            Err(DseError::Search(SearchError::InfeasibleConstraints(_)))
        ));
    }
}
