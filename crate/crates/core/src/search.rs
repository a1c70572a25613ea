// SPDX-License-Identifier: Apache-2.0

//! Minimal-size prefix topology search and an exhaustive small-width enumerator.
//!
//! [`search_min_size`] is a depth-first search over output columns. Each
//! unbuilt span picks a split point; existing spans are reused. Enumeration
//! ([`visit_topologies`]) uses a different strategy (longest span decided
//! first, depth budgets propagated downwards) so it can serve as an oracle.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::prefix::{make_classical, metrics, min_depth, Arch, GraphError, PrefixGraph, Span, TopologyBuilder};

/// Step limit applied by default above this width, where exact search is out of reach.
pub const EXACT_SEARCH_WIDTH: usize = 8;
pub const DEFAULT_STEP_LIMIT: u64 = 2_000_000;
pub const MAX_ENUMERATION_WIDTH: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConstraints {
    pub width: usize,
    pub max_depth: u32,
    /// `None` means unbounded.
    pub max_fanout: Option<usize>,
    /// Only graphs with at most this many prefix nodes are accepted.
    pub node_budget: Option<usize>,
    pub time_budget: Option<Duration>,
    /// Deterministic cap on search steps; `None` searches to completion.
    pub step_limit: Option<u64>,
}

impl SearchConstraints {
    pub fn new(width: usize, max_depth: u32) -> Self {
        SearchConstraints {
            width,
            max_depth,
            max_fanout: None,
            node_budget: None,
            time_budget: None,
            step_limit: (width > EXACT_SEARCH_WIDTH).then_some(DEFAULT_STEP_LIMIT),
        }
    }

    pub fn with_fanout(mut self, max_fanout: Option<usize>) -> Self {
        self.max_fanout = max_fanout;
        self
    }

    pub fn check(&self) -> Result<(), SearchError> {
        if self.width == 0 {
            return Err(SearchError::Graph(GraphError::UnsupportedWidth(0)));
        }
        let need = min_depth(self.width);
        if self.max_depth < need {
            return Err(SearchError::InfeasibleConstraints(format!(
                "depth {} is below the minimum {need} for {} bits",
                self.max_depth, self.width
            )));
        }
        if let Some(f) = self.max_fanout {
            if f < 2 && self.width > 2 {
                return Err(SearchError::InfeasibleConstraints(format!("fanout bound {f} must be at least 2")));
            }
        }
        Ok(())
    }

    fn fanout_ok(&self, fanout: usize) -> bool {
        self.max_fanout.is_none_or(|f| fanout <= f)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("infeasible constraints: {0}")]
    InfeasibleConstraints(String),
    #[error("no prefix graph satisfies the constraints")]
    NoFeasibleGraph,
    #[error("search budget ran out before any graph was found")]
    BudgetExhausted,
    #[error("width {0} is too large to enumerate (limit {MAX_ENUMERATION_WIDTH})")]
    WidthTooLarge(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub graph: PrefixGraph,
    /// True when the search space was exhausted, so the size is a proven minimum.
    pub complete: bool,
    pub time_budget_exceeded: bool,
    pub steps: u64,
}

/// Ordering key: size, max fanout, sum of levels, then the sorted span list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct RankKey {
    size: usize,
    max_fanout: usize,
    level_sum: u64,
    spans: Vec<(usize, usize)>,
}

fn rank_graph(g: &PrefixGraph) -> RankKey {
    let mut spans: Vec<(usize, usize)> = g.nodes().iter().filter(|n| !n.is_leaf()).map(|n| (n.span.hi, n.span.lo)).collect();
    spans.sort_unstable();
    RankKey {
        size: g.size(),
        max_fanout: metrics(g).max_fanout,
        level_sum: g.nodes().iter().map(|n| n.level as u64).sum(),
        spans,
    }
}

#[derive(Debug, Clone, Copy)]
enum Goal {
    Ensure { span: Span, budget: u32 },
    Finish { span: Span, mid: usize },
}

#[derive(Debug, Clone, Copy)]
struct Built {
    mid: usize,
    level: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Order {
    /// Fewest new nodes first; finds small graphs.
    Compact,
    /// Lowest resulting level first; finds some feasible graph quickly on wide inputs.
    Shallow,
}

struct Dfs<'a> {
    c: &'a SearchConstraints,
    order: Order,
    built: HashMap<Span, Built>,
    fanout: HashMap<Span, usize>,
    goals: Vec<Goal>,
    size: usize,
    pending_outputs: usize,
    best: Option<(RankKey, Vec<(Span, usize)>)>,
    best_size: usize,
    steps: u64,
    started: Instant,
    limit: u64,
    first_only: bool,
    stopped: bool,
    timed_out: bool,
}

impl<'a> Dfs<'a> {
    fn new(
        c: &'a SearchConstraints,
        order: Order,
        best: Option<(RankKey, Vec<(Span, usize)>)>,
        best_size: usize,
        started: Instant,
    ) -> Self {
        let n = c.width;
        // Low columns are popped first.
        let goals = (1..n).rev().map(|i| Goal::Ensure { span: Span::new(i, 0), budget: c.max_depth }).collect();
        Dfs {
            c,
            order,
            built: HashMap::new(),
            fanout: HashMap::new(),
            goals,
            size: 0,
            pending_outputs: n - 1,
            best,
            best_size,
            steps: 0,
            started,
            limit: u64::MAX,
            first_only: false,
            stopped: false,
            timed_out: false,
        }
    }

    fn level_of(&self, span: Span) -> u32 {
        if span.is_leaf() {
            0
        } else {
            self.built[&span].level
        }
    }

    fn exists(&self, span: Span) -> bool {
        span.is_leaf() || self.built.contains_key(&span)
    }

    fn usable(&self, span: Span, budget: u32) -> bool {
        if span.is_leaf() {
            return true;
        }
        match self.built.get(&span) {
            Some(b) => b.level <= budget,
            None => min_depth(span.len()) <= budget,
        }
    }

    fn saturated(&self, span: Span) -> bool {
        self.c.max_fanout.is_some_and(|f| self.fanout.get(&span).copied().unwrap_or(0) >= f)
    }

    fn level_estimate(&self, span: Span) -> u32 {
        match self.built.get(&span) {
            Some(b) => b.level,
            None if span.is_leaf() => 0,
            None => min_depth(span.len()),
        }
    }

    /// Split points in the preferred trial order for the current mode; ties go to the higher mid.
    fn mid_order(&self, span: Span, budget: u32) -> Vec<usize> {
        let mut mids: Vec<((u32, u8), usize)> = (span.lo + 1..=span.hi)
            .rev()
            .filter_map(|mid| {
                let (hi, lo) = span.split(mid);
                if !self.usable(hi, budget - 1) || !self.usable(lo, budget - 1) {
                    return None;
                }
                if self.saturated(hi) || self.saturated(lo) {
                    return None;
                }
                let fresh = match (self.exists(hi), self.exists(lo)) {
                    (true, true) => 0,
                    (false, true) => 1,
                    (true, false) => 2,
                    (false, false) => 3,
                };
                let rank = match self.order {
                    Order::Compact => (0, fresh),
                    Order::Shallow => (self.level_estimate(hi).max(self.level_estimate(lo)), fresh),
                };
                Some((rank, mid))
            })
            .collect();
        mids.sort_by_key(|&(rank, _)| rank);
        mids.into_iter().map(|(_, m)| m).collect()
    }

    fn tick(&mut self) -> bool {
        self.steps += 1;
        if self.steps > self.limit {
            self.stopped = true;
        }
        if self.steps % 4096 == 0 {
            if let Some(t) = self.c.time_budget {
                if self.started.elapsed() > t {
                    self.stopped = true;
                    self.timed_out = true;
                }
            }
        }
        !self.stopped
    }

    fn run(&mut self) {
        if !self.tick() {
            return;
        }
        let Some(goal) = self.goals.pop() else {
            self.record();
            return;
        };
        match goal {
            Goal::Ensure { span, budget } => {
                if span.is_leaf() {
                    self.run();
                } else if let Some(b) = self.built.get(&span) {
                    if b.level <= budget {
                        self.run();
                    }
                } else {
                    let is_output = span.lo == 0;
                    let lower = self.size + self.pending_outputs + usize::from(!is_output);
                    if budget > 0 && lower <= self.best_size {
                        let mark = self.goals.len();
                        for mid in self.mid_order(span, budget) {
                            let (hi, lo) = span.split(mid);
                            self.goals.push(Goal::Finish { span, mid });
                            self.goals.push(Goal::Ensure { span: lo, budget: budget - 1 });
                            self.goals.push(Goal::Ensure { span: hi, budget: budget - 1 });
                            self.run();
                            self.goals.truncate(mark);
                            if self.stopped {
                                break;
                            }
                        }
                    }
                }
                self.goals.push(goal);
            }
            Goal::Finish { span, mid } => {
                let (hi, lo) = span.split(mid);
                let fh = self.fanout.get(&hi).copied().unwrap_or(0) + 1;
                let fl = self.fanout.get(&lo).copied().unwrap_or(0) + 1;
                if self.c.fanout_ok(fh) && self.c.fanout_ok(fl) {
                    let level = 1 + self.level_of(hi).max(self.level_of(lo));
                    self.fanout.insert(hi, fh);
                    self.fanout.insert(lo, fl);
                    self.built.insert(span, Built { mid, level });
                    self.size += 1;
                    if span.lo == 0 {
                        self.pending_outputs -= 1;
                    }
                    self.run();
                    if span.lo == 0 {
                        self.pending_outputs += 1;
                    }
                    self.size -= 1;
                    self.built.remove(&span);
                    self.fanout.insert(hi, fh - 1);
                    self.fanout.insert(lo, fl - 1);
                }
                self.goals.push(goal);
            }
        }
    }

    fn record(&mut self) {
        let mut spans: Vec<(usize, usize)> = self.built.keys().map(|s| (s.hi, s.lo)).collect();
        spans.sort_unstable();
        let key = RankKey {
            size: self.size,
            max_fanout: self.fanout.values().copied().max().unwrap_or(0),
            level_sum: self.built.values().map(|b| b.level as u64).sum(),
            spans,
        };
        if self.best.as_ref().is_none_or(|(k, _)| key < *k) {
            self.best_size = key.size;
            let recipe = self.built.iter().map(|(s, b)| (*s, b.mid)).collect();
            self.best = Some((key, recipe));
        }
        if self.first_only {
            self.stopped = true;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tie {
    HighMid,
    LowMid,
}

/// Builds outputs column by column; each column takes the cheapest subtree
/// over the nodes already placed. Subtree spans form a laminar family, so the
/// per-column cost is exact even though the overall result is not.
fn column_greedy(c: &SearchConstraints, weight: u32, tie: Tie) -> Option<Vec<(Span, usize)>> {
    let n = c.width;
    let mut built: HashMap<Span, Built> = HashMap::new();
    let mut fanout: HashMap<Span, usize> = HashMap::new();
    // (cost, level, mid) per (span, budget); mid is 0 for reuse of an existing node.
    type Plan = Option<(usize, u32, usize)>;
    for i in 1..n {
        let mut memo: HashMap<(Span, u32), Plan> = HashMap::new();
        fn plan(
            span: Span,
            b: u32,
            c: &SearchConstraints,
            built: &HashMap<Span, Built>,
            fanout: &HashMap<Span, usize>,
            memo: &mut HashMap<(Span, u32), Plan>,
            weight: u32,
            tie: Tie,
        ) -> Plan {
            if span.is_leaf() || built.contains_key(&span) {
                let level = built.get(&span).map_or(0, |x| x.level);
                let free = c.max_fanout.is_none_or(|f| fanout.get(&span).copied().unwrap_or(0) < f);
                return (level <= b && free).then_some((0, level, 0));
            }
            if b == 0 || min_depth(span.len()) > b {
                return None;
            }
            if let Some(p) = memo.get(&(span, b)) {
                return *p;
            }
            let mut best: Plan = None;
            let mids: Vec<usize> = match tie {
                Tie::HighMid => (span.lo + 1..=span.hi).rev().collect(),
                Tie::LowMid => (span.lo + 1..=span.hi).collect(),
            };
            for mid in mids {
                let (hi, lo) = span.split(mid);
                let Some(ph) = plan(hi, b - 1, c, built, fanout, memo, weight, tie) else { continue };
                let Some(pl) = plan(lo, b - 1, c, built, fanout, memo, weight, tie) else { continue };
                let cand = (1 + ph.0 + pl.0, 1 + ph.1.max(pl.1), mid);
                // Cost in quarter nodes per level of the result, so low outputs stay reusable.
                let score = |p: (usize, u32, usize)| (4 * p.0 + (weight * p.1) as usize, p.1);
                let better = best.is_none_or(|bp| score(cand) < score(bp));
                if better {
                    best = Some(cand);
                }
            }
            memo.insert((span, b), best);
            best
        }
        plan(Span::new(i, 0), c.max_depth, c, &built, &fanout, &mut memo, weight, tie)?;
        // Materialize the chosen subtree.
        let mut stack = vec![(Span::new(i, 0), c.max_depth)];
        let mut created = Vec::new();
        while let Some((span, b)) = stack.pop() {
            let (_, _, mid) = memo[&(span, b)].expect("planned span");
            let (hi, lo) = span.split(mid);
            for child in [hi, lo] {
                *fanout.entry(child).or_insert(0) += 1;
                if !child.is_leaf() && !built.contains_key(&child) {
                    stack.push((child, b - 1));
                }
            }
            created.push((span, mid));
            built.insert(span, Built { mid, level: 0 });
        }
        for &(span, mid) in created.iter().rev() {
            let (hi, lo) = span.split(mid);
            let lv = |s: Span| if s.is_leaf() { 0 } else { built[&s].level };
            let level = 1 + lv(hi).max(lv(lo));
            built.insert(span, Built { mid, level });
        }
    }
    Some(built.into_iter().map(|(s, b)| (s, b.mid)).collect())
}

fn rank_recipe(width: usize, recipe: &[(Span, usize)]) -> Option<(RankKey, PrefixGraph)> {
    let g = build_from_recipe(width, recipe).ok()?;
    Some((rank_graph(&g), g))
}

fn build_from_recipe(width: usize, recipe: &[(Span, usize)]) -> Result<PrefixGraph, GraphError> {
    let mut b = TopologyBuilder::new(width);
    for &(span, mid) in recipe {
        b.combine(span, mid);
    }
    b.build()
}

/// Finds a smallest prefix graph meeting the constraints.
///
/// Exact when the search completes (always for widths up to 8 with no step
/// or time limit); otherwise the best graph seen is returned.
pub fn search_min_size(c: &SearchConstraints) -> Result<SearchResult, SearchError> {
    c.check()?;
    let n = c.width;
    let mut best: Option<(RankKey, Vec<(Span, usize)>)> = None;
    let mut best_size = c.node_budget.unwrap_or(usize::MAX);

    // Feasible classical graphs bound the search from the start.
    for arch in Arch::ALL {
        let g = make_classical(arch, n)?;
        let m = metrics(&g);
        if m.depth <= c.max_depth && c.fanout_ok(m.max_fanout) && m.size <= best_size {
            let key = rank_graph(&g);
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                let recipe = g
                    .nodes()
                    .iter()
                    .filter(|x| !x.is_leaf())
                    .map(|x| (x.span, g.mid(x.id).expect("non-leaf has a mid")))
                    .collect();
                best_size = key.size;
                best = Some((key, recipe));
            }
        }
    }

    for weight in [0, 1, 2, 3, 4, 6, 8, 16] {
        for tie in [Tie::HighMid, Tie::LowMid] {
            let Some(recipe) = column_greedy(c, weight, tie) else { continue };
            let Some((key, g)) = rank_recipe(n, &recipe) else { continue };
            let m = metrics(&g);
            if m.depth <= c.max_depth && c.fanout_ok(m.max_fanout) && m.size <= best_size && best.as_ref().is_none_or(|(k, _)| key < *k) {
                best_size = key.size;
                best = Some((key, recipe));
            }
        }
    }

    let started = Instant::now();
    let mut steps = 0;
    let mut timed_out = false;
    // With a step limit and no starting bound, spend part of the budget on any feasible graph first.
    if best.is_none() {
        if let Some(limit) = c.step_limit {
            let mut probe = Dfs::new(c, Order::Shallow, best.take(), best_size, started);
            probe.first_only = true;
            probe.limit = limit / 2;
            probe.run();
            steps += probe.steps;
            timed_out |= probe.timed_out;
            best_size = probe.best_size;
            best = probe.best;
        }
    }

    let mut dfs = Dfs::new(c, Order::Compact, best, best_size, started);
    dfs.limit = c.step_limit.map_or(u64::MAX, |l| l.saturating_sub(steps));
    if !timed_out {
        dfs.run();
    }
    let complete = !dfs.stopped && !timed_out;
    let timed_out = timed_out || dfs.timed_out;
    match dfs.best {
        Some((_, recipe)) => Ok(SearchResult {
            graph: build_from_recipe(n, &recipe)?,
            complete,
            time_budget_exceeded: timed_out,
            steps: steps + dfs.steps,
        }),
        None if complete => Err(SearchError::NoFeasibleGraph),
        None => Err(SearchError::BudgetExhausted),
    }
}

/// One complete topology produced by the enumerator.
pub struct TopologyView<'a> {
    width: usize,
    mids: &'a [Option<usize>],
    required: &'a [bool],
}

impl TopologyView<'_> {
    fn index(&self, span: Span) -> usize {
        span.hi * self.width + span.lo
    }

    pub fn spans(&self) -> impl Iterator<Item = (Span, usize)> + '_ {
        (0..self.width).flat_map(move |hi| (0..hi).map(move |lo| Span::new(hi, lo))).filter_map(move |s| {
            let i = self.index(s);
            if self.required[i] {
                self.mids[i].map(|m| (s, m))
            } else {
                None
            }
        })
    }

    pub fn size(&self) -> usize {
        self.spans().count()
    }

    pub fn max_fanout(&self) -> usize {
        let mut count = vec![0usize; self.width * self.width];
        for (s, m) in self.spans() {
            let (hi, lo) = s.split(m);
            count[self.index(hi)] += 1;
            count[self.index(lo)] += 1;
        }
        count.into_iter().max().unwrap_or(0)
    }

    pub fn to_graph(&self) -> Result<PrefixGraph, GraphError> {
        let recipe: Vec<(Span, usize)> = self.spans().collect();
        build_from_recipe(self.width, &recipe)
    }
}

struct Enumerator<'a, F> {
    c: &'a SearchConstraints,
    order: Vec<Span>,
    budget: Vec<u32>,
    required: Vec<bool>,
    mids: Vec<Option<usize>>,
    visit: F,
}

impl<F: FnMut(&TopologyView<'_>) -> ControlFlow<()>> Enumerator<'_, F> {
    fn idx(&self, s: Span) -> usize {
        s.hi * self.c.width + s.lo
    }

    fn go(&mut self, at: usize) -> ControlFlow<()> {
        let Some(&span) = self.order.get(at) else {
            let view = TopologyView { width: self.c.width, mids: &self.mids, required: &self.required };
            if self.c.fanout_ok(view.max_fanout()) && self.c.node_budget.is_none_or(|b| view.size() <= b) {
                return (self.visit)(&view);
            }
            return ControlFlow::Continue(());
        };
        let i = self.idx(span);
        if !self.required[i] {
            return self.go(at + 1);
        }
        let b = self.budget[i];
        for mid in span.lo + 1..=span.hi {
            let (hi, lo) = span.split(mid);
            if min_depth(hi.len()) > b - 1 || min_depth(lo.len()) > b - 1 {
                continue;
            }
            let (ih, il) = (self.idx(hi), self.idx(lo));
            let saved = (self.required[ih], self.budget[ih], self.required[il], self.budget[il]);
            for k in [ih, il] {
                self.required[k] = true;
                self.budget[k] = self.budget[k].min(b - 1);
            }
            self.mids[i] = Some(mid);
            let flow = self.go(at + 1);
            self.mids[i] = None;
            (self.required[ih], self.budget[ih], self.required[il], self.budget[il]) = saved;
            flow?;
        }
        ControlFlow::Continue(())
    }
}

/// Calls `visit` once per distinct valid topology, in a deterministic order.
pub fn visit_topologies<F>(c: &SearchConstraints, visit: F) -> Result<(), SearchError>
where
    F: FnMut(&TopologyView<'_>) -> ControlFlow<()>,
{
    if c.width > MAX_ENUMERATION_WIDTH {
        return Err(SearchError::WidthTooLarge(c.width));
    }
    c.check()?;
    let n = c.width;
    let mut order: Vec<Span> = (0..n).flat_map(|hi| (0..hi).map(move |lo| Span::new(hi, lo))).collect();
    order.sort_by(|a, b| match b.len().cmp(&a.len()) {
        Ordering::Equal => b.hi.cmp(&a.hi),
        o => o,
    });
    let mut e = Enumerator {
        c,
        order,
        budget: vec![u32::MAX; n * n],
        required: vec![false; n * n],
        mids: vec![None; n * n],
        visit,
    };
    for i in 1..n {
        let k = i * n;
        e.required[k] = true;
        e.budget[k] = c.max_depth;
    }
    let _ = e.go(0);
    Ok(())
}

/// Collects up to `limit` topologies (all of them when `limit` is `None`).
pub fn enumerate_topologies(c: &SearchConstraints, limit: Option<usize>) -> Result<Vec<PrefixGraph>, SearchError> {
    let mut out = Vec::new();
    let mut err = None;
    visit_topologies(c, |view| {
        if limit.is_some_and(|l| out.len() >= l) {
            return ControlFlow::Break(());
        }
        match view.to_graph() {
            Ok(g) => out.push(g),
            Err(e) => {
                err = Some(e);
                return ControlFlow::Break(());
            }
        }
        if limit.is_some_and(|l| out.len() >= l) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    match err {
        Some(e) => Err(e.into()),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefix::validate;

    fn min_enumerated(c: &SearchConstraints) -> Option<usize> {
        let mut best = None;
        visit_topologies(c, |v| {
            let s = v.size();
            best = Some(best.map_or(s, |b: usize| b.min(s)));
            ControlFlow::Continue(())
        })
        .unwrap();
        best
    }

    #[test]
    fn width_four_depth_two_needs_four_nodes() {
        let r = search_min_size(&SearchConstraints::new(4, 2)).unwrap();
        assert_eq!(r.graph.size(), 4);
        assert!(r.complete);
        assert_eq!(min_enumerated(&SearchConstraints::new(4, 2)), Some(4));
    }

    #[test]
    fn width_four_depth_three_is_ripple() {
        let g = search_min_size(&SearchConstraints::new(4, 3)).unwrap().graph;
        let spans: Vec<Span> = g.nodes().iter().filter(|n| !n.is_leaf()).map(|n| n.span).collect();
        assert_eq!(spans, vec![Span::new(1, 0), Span::new(2, 0), Span::new(3, 0)]);
    }

    #[test]
    fn width_eight_depth_three_matches_oracle() {
        let c = SearchConstraints::new(8, 3);
        let r = search_min_size(&c).unwrap();
        assert_eq!(Some(r.graph.size()), min_enumerated(&c));
    }

    #[test]
    fn enumeration_counts() {
        let count = |n, d| {
            let mut k = 0usize;
            visit_topologies(&SearchConstraints::new(n, d), |_| {
                k += 1;
                ControlFlow::Continue(())
            })
            .unwrap();
            k
        };
        assert_eq!(count(2, 1), 1);
        assert_eq!(count(3, 2), 2);
        assert_eq!(count(4, 2), 2);
        assert_eq!(count(4, 3), 8);
        assert_eq!(count(8, 3), 120);
    }

    #[test]
    fn three_bit_graphs_have_sizes_two_and_three() {
        let gs = enumerate_topologies(&SearchConstraints::new(3, 2), None).unwrap();
        let mut sizes: Vec<usize> = gs.iter().map(|g| g.size()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![2, 3]);
        assert!(gs.iter().all(|g| validate(g).is_ok()));
    }

    #[test]
    fn limit_is_honoured() {
        assert_eq!(enumerate_topologies(&SearchConstraints::new(4, 3), Some(5)).unwrap().len(), 5);
    }

    #[test]
    fn width_guard_and_infeasible_depth() {
        assert_eq!(
            enumerate_topologies(&SearchConstraints::new(13, 12), None).unwrap_err(),
            SearchError::WidthTooLarge(13)
        );
        assert!(matches!(search_min_size(&SearchConstraints::new(8, 2)), Err(SearchError::InfeasibleConstraints(_))));
    }

    #[test]
    fn wide_search_respects_fanout() {
        for (n, d, f) in [(32, 6, 4), (16, 5, 2), (23, 6, 4), (31, 6, 4)] {
            let c = SearchConstraints::new(n, d).with_fanout(Some(f));
            let g = search_min_size(&c).unwrap().graph;
            let m = metrics(&g);
            assert!(validate(&g).is_ok());
            assert!(m.depth <= d && m.max_fanout <= f, "{n}/{d}/{f}: {m:?}");
        }
    }
}
