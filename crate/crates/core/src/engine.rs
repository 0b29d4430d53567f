//! Layer-synchronous exploration of the folded lattice.
//!
//! Each layer is processed against a frozen snapshot of the lists; workers
//! return private deltas which are merged single-threaded at the barrier.
//! When the worst-case size of the layer after next would exceed the memory
//! budget, the current frontier is instead explored one depth-first task per
//! node. Entries found that way are flagged and verified after the final
//! merge.
//!
//! Two pruning rules remove a target from a node's subtree:
//!
//! * `NC(X, U) >= s(X, {})`: the complexity term alone already costs more
//!   than the empty parent set.
//! * `d(X, U) <= m * H(X | rest) + NC(X, U)`: even a perfect entropy floor
//!   cannot make a superset beat the best subset of `U`.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::lattice::{LatticeNode, BYTES_PER_NODE};
use crate::scalar::Real;
use crate::scoring::{ScoreTables, Scorer, TargetScore};
use crate::store::{self, Delta, MpsEntry, MpsList};
use crate::varset::VarSet;

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub workers: usize,
    /// Cap on the bytes of one materialized frontier.
    pub memory_budget_bytes: u64,
    /// The frontier is cut into `workers * chunks_per_worker` chunks.
    pub chunks_per_worker: usize,
    /// Deepest layer to explore; `None` means `n`.
    pub max_layer: Option<usize>,
    /// Explore this layer depth-first regardless of the budget.
    pub dfs_force_layer: Option<usize>,
    pub pruning_enabled: bool,
    /// Keep a [`NodeTrace`] for every processed node.
    pub record_trace: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            workers: std::thread::available_parallelism().map_or(1, |p| p.get()),
            memory_budget_bytes: u64::MAX,
            chunks_per_worker: 4,
            max_layer: None,
            dfs_force_layer: None,
            pruning_enabled: true,
            record_trace: false,
        }
    }
}

impl EngineConfig {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    /// Nodes processed at each layer.
    pub layer_nodes: Vec<u64>,
    /// Sum of target counts at each layer: the unfolded task count.
    pub layer_tasks: Vec<u64>,
    pub nodes_processed: u64,
    /// Deepest processed layer.
    pub l_max: usize,
    /// Largest parent set among the final entries.
    pub l_z: usize,
    /// Total maximal parent sets reported.
    pub z: usize,
    /// Entries flagged during depth-first exploration.
    pub z_f: usize,
    /// Flagged entries rejected by verification.
    pub flagged_rejected: usize,
    pub pruned_by_cond1: u64,
    pub pruned_by_cond2: u64,
    pub dfs_switch_layer: Option<usize>,
    /// `(layer, worst-case bytes)` for every estimate made.
    pub layer_estimates: Vec<(usize, u64)>,
    pub peak_frontier_bytes: u64,
    pub wall_time: Duration,
}

/// Record of one processed node, kept when `record_trace` is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeTrace {
    pub parents: VarSet,
    pub targets: VarSet,
    pub survivors: VarSet,
    pub depth_first: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutput<S> {
    /// One list per canonical variable.
    pub lists: Vec<MpsList<S>>,
    pub stats: RunStats,
    pub trace: Vec<NodeTrace>,
}

/// Worst-case bytes of the layer after `frontier` under the max-element rule.
pub fn estimate_next2_layer(frontier: &[LatticeNode], n: usize, bytes_per_node: u64) -> u64 {
    frontier
        .iter()
        .map(|v| v.successor_bound(n) as u64)
        .sum::<u64>()
        .saturating_mul(bytes_per_node)
}

/// Enumerates all maximal parent sets of every variable.
pub fn run<S: Real>(dataset: &Dataset, config: &EngineConfig) -> Result<RunOutput<S>> {
    Engine::new(dataset, config)?.run()
}

/// Per-node accounting, merged across chunks and tasks.
struct Partial<S> {
    deltas: Vec<Delta<S>>,
    next: Vec<LatticeNode>,
    layer_nodes: Vec<u64>,
    layer_tasks: Vec<u64>,
    cond1: u64,
    cond2: u64,
    l_max: usize,
    trace: Vec<NodeTrace>,
}

impl<S> Default for Partial<S> {
    fn default() -> Self {
        Partial {
            deltas: Vec::new(),
            next: Vec::new(),
            layer_nodes: Vec::new(),
            layer_tasks: Vec::new(),
            cond1: 0,
            cond2: 0,
            l_max: 0,
            trace: Vec::new(),
        }
    }
}

impl<S> Partial<S> {
    fn count(&mut self, node: &LatticeNode) {
        let l = node.layer();
        if self.layer_nodes.len() <= l {
            self.layer_nodes.resize(l + 1, 0);
            self.layer_tasks.resize(l + 1, 0);
        }
        self.layer_nodes[l] += 1;
        self.layer_tasks[l] += node.targets.len() as u64;
        self.l_max = self.l_max.max(l);
    }

    fn absorb(&mut self, other: Partial<S>) {
        self.deltas.extend(other.deltas);
        self.next.extend(other.next);
        add_into(&mut self.layer_nodes, &other.layer_nodes);
        add_into(&mut self.layer_tasks, &other.layer_tasks);
        self.cond1 += other.cond1;
        self.cond2 += other.cond2;
        self.l_max = self.l_max.max(other.l_max);
        self.trace.extend(other.trace);
    }
}

fn add_into(acc: &mut Vec<u64>, other: &[u64]) {
    if acc.len() < other.len() {
        acc.resize(other.len(), 0);
    }
    for (a, b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}

struct NodeOutcome {
    survivors: VarSet,
    cond1: u32,
    cond2: u32,
}

/// Immutable per-run state shared by all workers.
struct Engine<'d, S> {
    dataset: &'d Dataset,
    config: &'d EngineConfig,
    n: usize,
    max_layer: usize,
    tables: ScoreTables<S>,
    /// `s(X, {})` per canonical variable.
    empty_scores: Vec<S>,
    /// `m * H(X | all other variables)` per canonical variable.
    entropy_floor: Vec<S>,
    pool: Option<ThreadPool>,
}

struct Worker<'d, S> {
    scorer: Scorer<'d, S>,
    scores: Vec<TargetScore<S>>,
}

impl<'d, S: Real> Engine<'d, S> {
    fn new(dataset: &'d Dataset, config: &'d EngineConfig) -> Result<Self> {
        if config.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if config.chunks_per_worker == 0 {
            return Err(Error::InvalidConfig("chunks_per_worker must be at least 1".into()));
        }
        let n = dataset.n();
        let pool = if config.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.workers)
                    .build()
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?,
            )
        } else {
            None
        };
        let tables = ScoreTables::new(dataset.m());
        let root = LatticeNode::root(n);
        let empty_scores = Scorer::with_tables(dataset, tables.clone())
            .score_targets(&root)
            .targets
            .iter()
            .map(|t| t.score)
            .collect();
        let m = dataset.m() as f64;
        let entropy_floor = (0..n)
            .map(|k| S::of_f64(m * dataset.canon_full_cond_entropy(k)))
            .collect();
        Ok(Engine {
            dataset,
            config,
            n,
            max_layer: config.max_layer.unwrap_or(n).min(n),
            tables,
            empty_scores,
            entropy_floor,
            pool,
        })
    }

    fn worker(&self) -> Worker<'d, S> {
        Worker {
            scorer: Scorer::with_tables(self.dataset, self.tables.clone()),
            scores: Vec::new(),
        }
    }

    /// Scores `node`, reports new maximal entries through `emit` and decides
    /// which targets may continue to the node's successors.
    ///
    /// `prior(var, parents)` returns the best known score of a strict subset.
    fn process_node(
        &self,
        worker: &mut Worker<'d, S>,
        node: &LatticeNode,
        prior: impl Fn(usize, VarSet) -> S,
        mut emit: impl FnMut(usize, S),
    ) -> NodeOutcome {
        let Worker { scorer, scores } = worker;
        scorer.score_into(node, scores);
        let mut out = NodeOutcome {
            survivors: VarSet::EMPTY,
            cond1: 0,
            cond2: 0,
        };
        for t in scores.iter() {
            let best_subset = prior(t.var, node.parents);
            if t.score < best_subset {
                emit(t.var, t.score);
            }
            if !self.config.pruning_enabled {
                out.survivors.insert(t.var);
                continue;
            }
            let d = t.score.min(best_subset);
            if t.nc >= self.empty_scores[t.var] {
                out.cond1 += 1;
            } else if d <= self.entropy_floor[t.var] + t.nc {
                out.cond2 += 1;
            } else {
                out.survivors.insert(t.var);
            }
        }
        out
    }

    fn bfs_chunk(
        &self,
        worker: &mut Worker<'d, S>,
        chunk: &[LatticeNode],
        snapshot: &[MpsList<S>],
        expand: bool,
    ) -> Partial<S> {
        let mut part = Partial::default();
        for node in chunk {
            let outcome = self.process_node(
                worker,
                node,
                |var, parents| snapshot[var].strict_subset_min(parents),
                |var, score| part.deltas.push((var, MpsEntry::new(node.parents, score))),
            );
            self.account(&mut part, node, &outcome, false);
            if expand {
                part.next.extend(node.successors(outcome.survivors, self.n));
            }
        }
        part
    }

    /// Depth-first exploration of the subtree under `start`.
    ///
    /// Children are pushed in ascending order, so the largest index is
    /// explored first. With that order every subset of a node that lies in
    /// the same subtree is processed before the node itself.
    fn dfs_task(
        &self,
        worker: &mut Worker<'d, S>,
        start: LatticeNode,
        snapshot: &[MpsList<S>],
    ) -> Partial<S> {
        let mut part = Partial::default();
        let mut overlay: Vec<MpsList<S>> = vec![MpsList::new(); self.n];
        let mut stack = vec![start];
        while let Some(node) = stack.pop() {
            let mut found: Vec<(usize, S)> = Vec::new();
            let outcome = self.process_node(
                worker,
                &node,
                |var, parents| {
                    snapshot[var]
                        .strict_subset_min(parents)
                        .min(overlay[var].strict_subset_min(parents))
                },
                |var, score| found.push((var, score)),
            );
            for (var, score) in found {
                let entry = MpsEntry::flagged(node.parents, score);
                overlay[var].insert(entry);
                part.deltas.push((var, entry));
            }
            self.account(&mut part, &node, &outcome, true);
            if node.layer() < self.max_layer {
                stack.extend(node.successors(outcome.survivors, self.n));
            }
        }
        part
    }

    fn account(&self, part: &mut Partial<S>, node: &LatticeNode, outcome: &NodeOutcome, dfs: bool) {
        part.count(node);
        part.cond1 += outcome.cond1 as u64;
        part.cond2 += outcome.cond2 as u64;
        if self.config.record_trace {
            part.trace.push(NodeTrace {
                parents: node.parents,
                targets: node.targets,
                survivors: outcome.survivors,
                depth_first: dfs,
            });
        }
    }

    fn chunk_len(&self, items: usize) -> usize {
        let chunks = self.config.workers * self.config.chunks_per_worker;
        items.div_ceil(chunks).max(1)
    }

    /// Runs `f` over contiguous chunks of `items`; idle workers claim the
    /// next unclaimed chunk. Results come back in chunk order.
    fn map_chunks<T, F>(&self, items: &[T], chunk_len: usize, parallel: bool, f: F) -> Partial<S>
    where
        T: Sync,
        F: Fn(&mut Worker<'d, S>, &[T]) -> Partial<S> + Sync,
    {
        let parts: Vec<Partial<S>> = match &self.pool {
            Some(pool) if parallel => pool.install(|| {
                items
                    .par_chunks(chunk_len)
                    .with_max_len(1)
                    .map_init(|| self.worker(), |w, c| f(w, c))
                    .collect()
            }),
            _ => {
                let mut w = self.worker();
                items.chunks(chunk_len).map(|c| f(&mut w, c)).collect()
            }
        };
        let mut total = Partial::default();
        for p in parts {
            total.absorb(p);
        }
        total
    }

    fn run(self) -> Result<RunOutput<S>> {
        let started = Instant::now();
        let n = self.n;
        let budget = self.config.memory_budget_bytes;
        let mut stats = RunStats::default();

        let mut frontier = vec![LatticeNode::root(n)];
        let first = estimate_next2_layer(&frontier, n, BYTES_PER_NODE);
        if first > budget {
            return Err(Error::BudgetTooSmall {
                budget,
                required: first,
            });
        }
        stats.layer_estimates.push((1, first));

        let mut lists: Vec<MpsList<S>> = vec![MpsList::new(); n];
        let mut totals: Partial<S> = Partial::default();
        let mut dfs_at = self.config.dfs_force_layer;
        let mut layer = 0;

        while !frontier.is_empty() {
            stats.peak_frontier_bytes = stats
                .peak_frontier_bytes
                .max(frontier.len() as u64 * BYTES_PER_NODE);

            if dfs_at == Some(layer) {
                stats.dfs_switch_layer = Some(layer);
                let snapshot = &lists;
                let mut part = self.map_chunks(&frontier, 1, true, |w, tasks| {
                    let mut acc = Partial::default();
                    for &start in tasks {
                        acc.absorb(self.dfs_task(w, start, snapshot));
                    }
                    acc
                });
                store::merge(&mut lists, part.deltas.drain(..));
                stats.z_f = lists.iter().map(MpsList::flagged_count).sum();
                stats.flagged_rejected = store::verify_flagged(&mut lists);
                totals.absorb(part);
                break;
            }

            let expand = layer < self.max_layer;
            let snapshot = &lists;
            let mut part = self.map_chunks(
                &frontier,
                self.chunk_len(frontier.len()),
                layer > 1,
                |w, chunk| self.bfs_chunk(w, chunk, snapshot, expand),
            );
            store::merge(&mut lists, part.deltas.drain(..));
            frontier = std::mem::take(&mut part.next);
            totals.absorb(part);
            layer += 1;

            if !frontier.is_empty() && dfs_at.is_none_or(|f| f > layer) {
                let estimate = estimate_next2_layer(&frontier, n, BYTES_PER_NODE);
                stats.layer_estimates.push((layer + 1, estimate));
                if estimate > budget {
                    dfs_at = Some(layer);
                }
            }
        }

        stats.layer_nodes = totals.layer_nodes;
        stats.layer_tasks = totals.layer_tasks;
        stats.nodes_processed = stats.layer_nodes.iter().sum();
        stats.l_max = totals.l_max;
        stats.pruned_by_cond1 = totals.cond1;
        stats.pruned_by_cond2 = totals.cond2;
        stats.z = lists.iter().map(MpsList::len).sum();
        stats.l_z = lists
            .iter()
            .flat_map(|l| l.entries().iter().map(|e| e.parents.len()))
            .max()
            .unwrap_or(0);
        stats.wall_time = started.elapsed();

        Ok(RunOutput {
            lists,
            stats,
            trace: totals.trace,
        })
    }
}

/// Outcome of the fully synchronized reference exploration.
#[derive(Clone, Debug)]
pub struct ReferenceRun<S> {
    pub lists: Vec<MpsList<S>>,
    pub layer_nodes: Vec<u64>,
    /// Targets of every generated node, keyed by parent set.
    pub targets: HashMap<VarSet, VarSet>,
}

impl<S> ReferenceRun<S> {
    pub fn nodes(&self) -> u64 {
        self.layer_nodes.iter().sum()
    }
}

/// Breadth-first exploration that only keeps a target at `U` when it
/// survived at every predecessor `U - {k}`. Sequential; for measurement.
pub fn synchronized_reference<S: Real>(
    dataset: &Dataset,
    config: &EngineConfig,
) -> Result<ReferenceRun<S>> {
    let config = EngineConfig {
        workers: 1,
        memory_budget_bytes: u64::MAX,
        dfs_force_layer: None,
        ..config.clone()
    };
    let engine = Engine::<S>::new(dataset, &config)?;
    let n = engine.n;
    let mut worker = engine.worker();
    let mut lists: Vec<MpsList<S>> = vec![MpsList::new(); n];
    let mut layer_nodes = Vec::new();
    let mut targets = HashMap::new();

    let mut frontier = vec![LatticeNode::root(n)];
    let mut layer = 0;
    while !frontier.is_empty() {
        layer_nodes.push(frontier.len() as u64);
        let mut deltas = Vec::new();
        let mut survivors: HashMap<VarSet, VarSet> = HashMap::with_capacity(frontier.len());
        for node in &frontier {
            targets.insert(node.parents, node.targets);
            let outcome = engine.process_node(
                &mut worker,
                node,
                |var, parents| lists[var].strict_subset_min(parents),
                |var, score| deltas.push((var, MpsEntry::new(node.parents, score))),
            );
            survivors.insert(node.parents, outcome.survivors);
        }
        store::merge(&mut lists, deltas);
        if layer >= engine.max_layer {
            break;
        }
        let mut next = Vec::new();
        for node in &frontier {
            for k in node.parents.successor_start()..n {
                let parents = node.parents.with(k);
                let mut t = VarSet::full(n).difference(parents);
                for j in parents {
                    t = t.intersection(survivors.get(&parents.without(j)).copied().unwrap_or_default());
                }
                if !t.is_empty() {
                    next.push(LatticeNode { targets: t, parents });
                }
            }
        }
        frontier = next;
        layer += 1;
    }
    Ok(ReferenceRun {
        lists,
        layer_nodes,
        targets,
    })
}

/// Cost of skipping intra-layer synchronization.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtraWork {
    pub engine_nodes: u64,
    pub reference_nodes: u64,
    /// `(engine_nodes - reference_nodes) / reference_nodes`.
    pub fraction: f64,
    /// Engine nodes the reference never generates.
    pub elision_nodes: u64,
    /// Of those, how many kept a surviving target. Expected to be zero.
    pub elision_nodes_with_survivors: u64,
    /// `(target, node)` pairs present only because of elision.
    pub elided_tasks: u64,
    /// Of those, how many survived pruning. Expected to be zero.
    pub elided_tasks_surviving: u64,
}

/// Runs the engine breadth-first and the synchronized reference, and
/// compares how many nodes each generated.
pub fn measure_extra_work<S: Real>(dataset: &Dataset, config: &EngineConfig) -> Result<ExtraWork> {
    let config = EngineConfig {
        memory_budget_bytes: u64::MAX,
        dfs_force_layer: None,
        record_trace: true,
        ..config.clone()
    };
    let out = run::<S>(dataset, &config)?;
    let reference = synchronized_reference::<S>(dataset, &config)?;

    let mut report = ExtraWork {
        engine_nodes: out.stats.nodes_processed,
        reference_nodes: reference.nodes(),
        fraction: 0.0,
        elision_nodes: 0,
        elision_nodes_with_survivors: 0,
        elided_tasks: 0,
        elided_tasks_surviving: 0,
    };
    for t in &out.trace {
        let synced = reference.targets.get(&t.parents).copied();
        if synced.is_none() {
            report.elision_nodes += 1;
            if !t.survivors.is_empty() {
                report.elision_nodes_with_survivors += 1;
            }
        }
        let extra = t.targets.difference(synced.unwrap_or_default());
        report.elided_tasks += extra.len() as u64;
        report.elided_tasks_surviving += extra.intersection(t.survivors).len() as u64;
    }
    report.fraction = if report.reference_nodes == 0 {
        0.0
    } else {
        (report.engine_nodes as f64 - report.reference_nodes as f64) / report.reference_nodes as f64
    };
    Ok(report)
}
