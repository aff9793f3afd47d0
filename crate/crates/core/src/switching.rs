//! Optimal state switching between processing intervals.
//!
//! The instance's transition diagram is expanded over the horizon into a
//! layered *interval-state graph*: vertex `(i, s)` means "at the beginning
//! of interval `i` the machine is in state `s`". An edge for transition
//! `(s, s')` of duration `d` runs from `(i, s)` to `(i + d, s')` and costs
//! the energy of holding that transition's power over intervals
//! `i .. i + d`. Shortest paths in this graph are the cheapest ways to
//! bridge the gap between two anchor intervals, which is everything the
//! sequence DP needs to know about the machine's states.
//!
//! One single-source tree per anchor fills the switching table. Instances
//! with non-negative energy costs use Dijkstra; negative costs switch to a
//! layer-ordered relaxation (edges never point to an earlier interval, and
//! intra-layer edges all have zero duration and zero weight, so one forward
//! sweep with an intra-layer fixpoint is exact).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::model::{Instance, Label, ProcessingWindow, StateId};
use crate::num::{is_finite, Rational, INF};
use crate::{Error, Result};

const NO_PARENT: u32 = u32::MAX;

/// The layered expansion of the transition diagram over the horizon.
///
/// Vertex ids: 0 is the initial off vertex (interval 1), 1 is the final off
/// vertex (interval `h + 1`), and interval layers `2..=h` follow in
/// interval-major, state-minor order.
#[derive(Debug, Clone)]
pub struct IntervalStateGraph {
    h: usize,
    n_states: usize,
    off: StateId,
    adj: Vec<Vec<(u32, i64)>>,
    scale: i64,
}

impl IntervalStateGraph {
    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// Money scale of the edge weights (see [`crate::num::CostScale`]).
    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn initial_off(&self) -> usize {
        0
    }

    pub fn final_off(&self) -> usize {
        1
    }

    /// Vertex id for interval `i` (in `2..=h`) and state `s`.
    pub fn vertex(&self, interval: usize, state: StateId) -> Option<usize> {
        if (2..=self.h).contains(&interval) && state.0 < self.n_states {
            Some(2 + (interval - 2) * self.n_states + state.0)
        } else {
            None
        }
    }

    /// Interval and state of a vertex; the two boundary off vertices report
    /// intervals `1` and `h + 1`.
    pub fn vertex_info(&self, vid: usize) -> (usize, StateId) {
        match vid {
            0 => (1, self.off),
            1 => (self.h + 1, self.off),
            v => {
                let v = v - 2;
                (2 + v / self.n_states, StateId(v % self.n_states))
            }
        }
    }

    pub fn edges_from(&self, vid: usize) -> &[(u32, i64)] {
        &self.adj[vid]
    }
}

/// Builds the interval-state graph for an instance. Deterministic; edges
/// from a vertex are ordered by target state index.
pub fn build_graph(instance: &Instance) -> IntervalStateGraph {
    let h = instance.horizon();
    let d = instance.diagram();
    let ns = d.n_states();
    let scaled = instance.scaled();
    let off = d.off();

    let count = 2 + (h - 1) * ns;
    let mut g = IntervalStateGraph {
        h,
        n_states: ns,
        off,
        adj: vec![Vec::new(); count],
        scale: scaled.scale,
    };

    let p_off = instance.scaled_power(off, off).expect("self transitions always exist");
    // Boundary edges for the mandatory off intervals 1 and h.
    let first_target = g.vertex(2, off).unwrap() as u32;
    g.adj[0].push((first_target, scaled.span_cost(1, 2, p_off)));
    if let Some(from_h) = g.vertex(h, off) {
        g.adj[from_h].push((1, scaled.span_cost(h, h + 1, p_off)));
    }

    for i in 2..=h {
        for s in 0..ns {
            let from = g.vertex(i, StateId(s)).unwrap();
            for sp in 0..ns {
                let Some(t) = d.time(StateId(s), StateId(sp)) else {
                    continue;
                };
                let target_interval = i + t as usize;
                // Transitions must complete by the beginning of interval h.
                if target_interval > h {
                    continue;
                }
                let to = g.vertex(target_interval, StateId(sp)).unwrap() as u32;
                let p = instance.scaled_power(StateId(s), StateId(sp)).unwrap();
                let w = scaled.span_cost(i, target_interval, p);
                g.adj[from].push((to, w));
            }
        }
    }
    g
}

/// A single-source shortest-path tree with deterministic tie-breaking:
/// labels compare by (cost, edge count, parent vertex id).
pub(crate) struct SsspTree {
    pub dist: Vec<i64>,
    pub hops: Vec<u32>,
    pub parent: Vec<u32>,
}

impl SsspTree {
    fn new(n: usize) -> Self {
        SsspTree {
            dist: vec![INF; n],
            hops: vec![u32::MAX; n],
            parent: vec![NO_PARENT; n],
        }
    }

    fn consider(&mut self, to: usize, cand: (i64, u32, u32)) -> bool {
        let cur = (self.dist[to], self.hops[to], self.parent[to]);
        if cand < cur {
            self.dist[to] = cand.0;
            self.hops[to] = cand.1;
            self.parent[to] = cand.2;
            // Only a cost/hops improvement needs re-relaxation.
            cand.0 < cur.0 || cand.1 < cur.1
        } else {
            false
        }
    }
}

fn dijkstra(g: &IntervalStateGraph, source: usize) -> SsspTree {
    let mut tree = SsspTree::new(g.vertex_count());
    tree.dist[source] = 0;
    tree.hops[source] = 0;
    let mut heap: BinaryHeap<Reverse<(i64, u32, usize)>> = BinaryHeap::new();
    heap.push(Reverse((0, 0, source)));
    while let Some(Reverse((d, hops, v))) = heap.pop() {
        if (d, hops) > (tree.dist[v], tree.hops[v]) {
            continue;
        }
        for &(to, w) in g.edges_from(v) {
            let cand = (d + w, hops + 1, v as u32);
            if tree.consider(to as usize, cand) {
                heap.push(Reverse((cand.0, cand.1, to as usize)));
            }
        }
    }
    tree
}

/// Exact single-source shortest paths tolerating negative edge weights.
/// Layers are processed in interval order; intra-layer (zero-duration)
/// edges have zero weight, so a bounded fixpoint per layer settles them.
fn layered_sweep(g: &IntervalStateGraph, source: usize) -> SsspTree {
    let mut tree = SsspTree::new(g.vertex_count());
    tree.dist[source] = 0;
    tree.hops[source] = 0;
    let ns = g.n_states;

    let relax_forward = |tree: &mut SsspTree, vid: usize, layer: usize| {
        if !is_finite(tree.dist[vid]) {
            return;
        }
        let (d, hops) = (tree.dist[vid], tree.hops[vid]);
        for &(to, w) in g.edges_from(vid) {
            let (to_layer, _) = g.vertex_info(to as usize);
            if to_layer > layer {
                tree.consider(to as usize, (d + w, hops + 1, vid as u32));
            }
        }
    };

    // Interval 1 holds only the initial off vertex.
    relax_forward(&mut tree, 0, 1);
    for i in 2..=g.h {
        // Settle zero-duration edges within the layer.
        for _ in 0..ns {
            let mut changed = false;
            for s in 0..ns {
                let vid = g.vertex(i, StateId(s)).unwrap();
                if !is_finite(tree.dist[vid]) {
                    continue;
                }
                let (d, hops) = (tree.dist[vid], tree.hops[vid]);
                for &(to, w) in g.edges_from(vid) {
                    let (to_layer, _) = g.vertex_info(to as usize);
                    if to_layer == i {
                        changed |= tree.consider(to as usize, (d + w, hops + 1, vid as u32));
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for s in 0..ns {
            relax_forward(&mut tree, g.vertex(i, StateId(s)).unwrap(), i);
        }
    }
    tree
}

pub(crate) fn shortest_path_tree(g: &IntervalStateGraph, source: usize, nonneg: bool) -> SsspTree {
    if nonneg {
        dijkstra(g, source)
    } else {
        layered_sweep(g, source)
    }
}

/// A switching behavior between two anchors: one label per occupied
/// interval, zero-duration transitions contributing none.
pub type Behavior = Vec<Label>;

/// Precomputed optimal switching costs between anchor intervals.
///
/// `cost(i, i')` for `i < i'` is, in scaled money:
/// - the cheapest path between the proc vertices after interval `i` and at
///   interval `i'` (gap between two jobs),
/// - from the initial off vertex when `i == 1`,
/// - to the final off vertex when `i' == h`.
///
/// Unreachable pairs are absent. Behaviors are reconstructed on demand from
/// a fresh shortest-path tree of the stored graph.
#[derive(Debug, Clone)]
pub struct SwitchingTable {
    h: usize,
    nonneg: bool,
    graph: IntervalStateGraph,
    /// `by_target[(t - 1) * h + (a - 1)]`: scaled cost from anchor `a` to
    /// target `t`; row-per-target so the DP's predecessor scans are
    /// contiguous.
    by_target: Vec<i64>,
}

fn anchor_source(g: &IntervalStateGraph, instance: &Instance, anchor: usize) -> usize {
    let d = instance.diagram();
    if anchor == 1 {
        g.vertex(2, d.off()).unwrap()
    } else {
        g.vertex(anchor + 1, d.proc()).unwrap()
    }
}

fn anchor_target(g: &IntervalStateGraph, instance: &Instance, target: usize) -> usize {
    let d = instance.diagram();
    if target == instance.horizon() {
        g.vertex(target, d.off()).unwrap()
    } else {
        g.vertex(target, d.proc()).unwrap()
    }
}

/// Precomputes the full switching table: one shortest-path tree per anchor.
pub fn spaces(instance: &Instance) -> SwitchingTable {
    let g = build_graph(instance);
    let h = instance.horizon();
    let nonneg = instance.costs().iter().all(|c| *c >= Rational::from_integer(0));
    let mut by_target = vec![INF; h * h];
    for anchor in 1..h {
        let tree = shortest_path_tree(&g, anchor_source(&g, instance, anchor), nonneg);
        for target in anchor + 1..=h {
            let tv = anchor_target(&g, instance, target);
            by_target[(target - 1) * h + (anchor - 1)] = tree.dist[tv];
        }
    }
    SwitchingTable {
        h,
        nonneg,
        graph: g,
        by_target,
    }
}

impl SwitchingTable {
    pub fn horizon(&self) -> usize {
        self.h
    }

    pub fn scale(&self) -> i64 {
        self.graph.scale()
    }

    pub fn graph(&self) -> &IntervalStateGraph {
        &self.graph
    }

    /// Scaled switching cost, `None` when the pair is undefined/unreachable.
    pub fn cost_scaled(&self, i: usize, ip: usize) -> Option<i64> {
        if i == 0 || ip <= i || ip > self.h {
            return None;
        }
        let v = self.by_target[(ip - 1) * self.h + (i - 1)];
        is_finite(v).then_some(v)
    }

    pub fn cost(&self, i: usize, ip: usize) -> Option<Rational> {
        self.cost_scaled(i, ip)
            .map(|v| Rational::new(v, self.graph.scale()))
    }

    pub(crate) fn row_for_target(&self, target: usize) -> &[i64] {
        &self.by_target[(target - 1) * self.h..target * self.h]
    }

    /// Reconstructs the optimal switching behavior between two anchors as
    /// per-interval labels covering `i + 1 ..= i' - 1`. Deterministic under
    /// the (cost, transition count, parent id) tie-break.
    pub fn behavior(&self, instance: &Instance, i: usize, ip: usize) -> Option<Behavior> {
        self.cost_scaled(i, ip)?;
        let g = &self.graph;
        let tree = shortest_path_tree(g, anchor_source(g, instance, i), self.nonneg);
        let mut vid = anchor_target(g, instance, ip);
        if !is_finite(tree.dist[vid]) {
            return None;
        }
        let mut labels_rev: Vec<Label> = Vec::new();
        while tree.parent[vid] != NO_PARENT {
            let parent = tree.parent[vid] as usize;
            let (pi, ps) = g.vertex_info(parent);
            let (ci, cs) = g.vertex_info(vid);
            for _ in pi..ci {
                labels_rev.push((ps, cs));
            }
            vid = parent;
        }
        labels_rev.reverse();
        Some(labels_rev)
    }
}

/// Sums a behavior's energy cost over its span and checks that it tiles
/// `i + 1 ..= i' - 1` with existing transitions of the right durations.
pub fn replay(instance: &Instance, behavior: &Behavior, i: usize, ip: usize) -> Result<Rational> {
    let h = instance.horizon();
    let d = instance.diagram();
    if i == 0 || ip <= i || ip > h {
        return Err(Error::MalformedBehavior(format!("bad anchors ({i}, {ip})")));
    }
    let span_start = i + 1;
    let span_end = ip - 1;
    let span_len = (span_end + 1).saturating_sub(span_start);
    if behavior.len() != span_len {
        return Err(Error::MalformedBehavior(format!(
            "behavior has {} labels, span {span_start}..={span_end} needs {span_len}",
            behavior.len()
        )));
    }

    let zero_reach = d.zero_duration_closure();
    let ns = d.n_states();
    let start_state = if i == 1 { d.off() } else { d.proc() };
    let end_state = if ip == h { d.off() } else { d.proc() };

    let mut total = Rational::from_integer(0);
    let mut idx = 0;
    let mut prev_target = start_state;
    while idx < span_len {
        let (s, sp) = behavior[idx];
        let Some(t) = d.time(s, sp) else {
            return Err(Error::MalformedBehavior(format!(
                "label {idx} names a non-existent transition"
            )));
        };
        if !zero_reach[prev_target.0 * ns + s.0] {
            return Err(Error::MalformedBehavior(format!(
                "label {idx} does not chain from previous state"
            )));
        }
        let mut run = 0;
        while idx + run < span_len && behavior[idx + run] == (s, sp) {
            run += 1;
        }
        let take = if s == sp {
            run // self transitions: one interval each
        } else {
            let expected = t as usize;
            if run < expected || expected == 0 {
                return Err(Error::MalformedBehavior(format!(
                    "transition at label {idx} occupies {run} intervals, expected {expected}"
                )));
            }
            expected
        };
        let power = d.power(s, sp).expect("presence checked with time");
        for k in 0..take {
            total += instance.cost(span_start + idx + k) * power;
        }
        prev_target = sp;
        idx += take;
    }
    if !zero_reach[prev_target.0 * ns + end_state.0] {
        return Err(Error::MalformedBehavior(
            "behavior does not end in a state reaching the target anchor".into(),
        ));
    }
    Ok(total)
}

/// Earliest/latest processing intervals via reachability on the
/// interval-state graph.
pub(crate) fn compute_window(instance: &Instance) -> Result<ProcessingWindow> {
    let g = build_graph(instance);
    let d = instance.diagram();
    let h = instance.horizon();
    let n = g.vertex_count();

    let mut fwd = vec![false; n];
    let mut stack = vec![g.vertex(2, d.off()).map_or(0, |v| v)];
    // h == 2 has no interior layers; the window is empty either way.
    if h >= 2 {
        if let Some(start) = g.vertex(2, d.off()) {
            stack = vec![start];
        }
    }
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut fwd[v], true) {
            continue;
        }
        for &(to, _) in g.edges_from(v) {
            if !fwd[to as usize] {
                stack.push(to as usize);
            }
        }
    }

    let mut radj = vec![Vec::new(); n];
    for v in 0..n {
        for &(to, _) in g.edges_from(v) {
            radj[to as usize].push(v);
        }
    }
    let mut bwd = vec![false; n];
    if let Some(end) = g.vertex(h, d.off()) {
        let mut stack = vec![end];
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut bwd[v], true) {
                continue;
            }
            for &from in &radj[v] {
                if !bwd[from] {
                    stack.push(from);
                }
            }
        }
    }

    let mut first = None;
    let mut last = None;
    for i in 2..=h {
        let v = g.vertex(i, d.proc()).unwrap();
        if fwd[v] && first.is_none() {
            first = Some(i);
        }
        if bwd[v] {
            last = Some(i - 1);
        }
    }
    match (first, last) {
        (Some(f), Some(l)) if f <= l => Ok(ProcessingWindow { first: f, last: l }),
        _ => Err(Error::NoProcessingWindow),
    }
}
