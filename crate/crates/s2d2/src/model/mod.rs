//! Game state, strategy representations, deterministic rollout semantics, and
//! exhaustive small-instance oracles.
//!
//! Everything here is a pure function of its inputs. Node ids are 1-based and
//! contiguous after graph construction; per-node arrays carry a dead slot 0 so
//! ids index directly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod brute;
pub(crate) mod enumerate;
mod rollout;

pub use brute::{brute_force_sse, SseOutcome};
pub use enumerate::{count_attacker_strategies, enumerate_attacker_strategies, enumerate_paths};
pub use rollout::{greedy_playout, mixed_utility, rollout, GameState, Rollout};

/// Default ceiling on materialized pure-strategy enumerations.
pub const DEFAULT_EXPLOSION_LIMIT: u64 = 5_000_000;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("policy for defender {drone} returned {to} which is not reachable from {from} at step {t}")]
    PolicyRejected { drone: usize, t: u32, from: u32, to: u32 },
    #[error("enumeration would produce {estimated} strategies, above the limit {limit}")]
    Explosion { estimated: u128, limit: u64 },
    #[error("mixed defense invalid: {0}")]
    BadMixture(String),
    #[error("lambda {0} outside [0, 1]")]
    LambdaRange(f64),
    #[error("unsupported instance: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Optim(#[from] crate::optim::OptimError),
}

/// Undirected city graph with per-node attacker rewards and defender
/// penalties. Immutable after construction.
#[derive(Debug, Clone)]
pub struct CityGraph {
    n: u32,
    /// 1-based adjacency, each list sorted ascending; slot 0 unused.
    adj: Vec<Vec<u32>>,
    /// 1-based rewards R^a(v) >= 0; slot 0 unused.
    rewards: Vec<u64>,
    /// 1-based penalties P^d(v) <= 0; slot 0 unused.
    penalties: Vec<i64>,
    /// Optional planar coordinates (needed only by the K-Means fallback).
    coords: Option<Vec<(f64, f64)>>,
}

impl CityGraph {
    /// Builds a graph over nodes `1..=rewards.len()`. The reward, penalty and
    /// coordinate vectors are in node order (index 0 = node 1); edges use
    /// node ids.
    pub fn new(
        rewards: Vec<u64>,
        penalties: Vec<i64>,
        edges: &[(u32, u32)],
        coords: Option<Vec<(f64, f64)>>,
    ) -> Result<CityGraph, ModelError> {
        let n = rewards.len() as u32;
        if n == 0 {
            return Err(ModelError::InvalidGraph("graph has no nodes".into()));
        }
        if penalties.len() != rewards.len() {
            return Err(ModelError::InvalidGraph(format!(
                "{} rewards vs {} penalties",
                rewards.len(),
                penalties.len()
            )));
        }
        if let Some(c) = &coords {
            if c.len() != rewards.len() {
                return Err(ModelError::InvalidGraph(format!(
                    "{} coordinates for {} nodes",
                    c.len(),
                    rewards.len()
                )));
            }
        }
        if let Some(v) = penalties.iter().position(|&p| p > 0) {
            return Err(ModelError::InvalidGraph(format!(
                "node {} has positive penalty {}",
                v + 1,
                penalties[v]
            )));
        }

        let mut adj = vec![Vec::new(); n as usize + 1];
        for &(u, v) in edges {
            if u == 0 || v == 0 || u > n || v > n {
                return Err(ModelError::InvalidGraph(format!(
                    "edge ({u}, {v}) references a node outside 1..={n}"
                )));
            }
            if u == v {
                return Err(ModelError::InvalidGraph(format!("self-loop at node {u}")));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }

        let mut rw = Vec::with_capacity(n as usize + 1);
        rw.push(0);
        rw.extend(rewards);
        let mut pen = Vec::with_capacity(n as usize + 1);
        pen.push(0);
        pen.extend(penalties);
        let coords = coords.map(|c| {
            let mut full = Vec::with_capacity(n as usize + 1);
            full.push((0.0, 0.0));
            full.extend(c);
            full
        });
        Ok(CityGraph { n, adj, rewards: rw, penalties: pen, coords })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nodes(&self) -> impl Iterator<Item = u32> {
        1..=self.n
    }

    #[inline]
    pub fn reward(&self, v: u32) -> u64 {
        self.rewards[v as usize]
    }

    #[inline]
    pub fn penalty(&self, v: u32) -> i64 {
        self.penalties[v as usize]
    }

    #[inline]
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn has_coords(&self) -> bool {
        self.coords.is_some()
    }

    pub fn coord(&self, v: u32) -> Option<(f64, f64)> {
        self.coords.as_ref().map(|c| c[v as usize])
    }

    pub fn max_reward(&self) -> u64 {
        self.rewards[1..].iter().copied().max().unwrap_or(0)
    }

    #[inline]
    pub fn contains(&self, v: u32) -> bool {
        v >= 1 && v <= self.n
    }

    /// True when `to == from` or they share an edge.
    pub fn step_ok(&self, from: u32, to: u32) -> bool {
        to == from || self.adj[from as usize].binary_search(&to).is_ok()
    }

    /// BFS distances from `from`; unreachable nodes get `u32::MAX`. The
    /// returned vector is 1-based like every per-node array here.
    pub fn bfs_dists(&self, from: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n as usize + 1];
        dist[from as usize] = 0;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(from);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            for &w in &self.adj[u as usize] {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = du + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// One shortest path from `from` to `to` (inclusive of both endpoints),
    /// deterministic: at every step the lowest-id neighbor that decreases the
    /// distance to `to` is taken.
    pub fn shortest_path(&self, from: u32, to: u32) -> Option<Vec<u32>> {
        let dist = self.bfs_dists(to);
        if dist[from as usize] == u32::MAX {
            return None;
        }
        let mut path = vec![from];
        let mut cur = from;
        while cur != to {
            let d = dist[cur as usize];
            let next = self.adj[cur as usize]
                .iter()
                .copied()
                .find(|&w| dist[w as usize] + 1 == d)
                .expect("distance field is locally decreasing");
            path.push(next);
            cur = next;
        }
        Some(path)
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<u32>> {
        let mut seen = vec![false; self.n as usize + 1];
        let mut out = Vec::new();
        for v in 1..=self.n {
            if seen[v as usize] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![v];
            seen[v as usize] = true;
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &w in &self.adj[u as usize] {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Extracts the induced subgraph on `nodes` with fresh contiguous ids.
    /// Returns the subgraph and the local→original id map (entry `i` is the
    /// original id of local node `i+1`).
    pub fn induced(&self, nodes: &[u32]) -> Result<(CityGraph, Vec<u32>), ModelError> {
        let mut originals: Vec<u32> = nodes.to_vec();
        originals.sort_unstable();
        originals.dedup();
        if originals.is_empty() {
            return Err(ModelError::InvalidGraph("empty node set".into()));
        }
        if let Some(&v) = originals.iter().find(|&&v| !self.contains(v)) {
            return Err(ModelError::InvalidGraph(format!("node {v} not in graph")));
        }
        let mut local = BTreeMap::new();
        for (i, &v) in originals.iter().enumerate() {
            local.insert(v, i as u32 + 1);
        }
        let rewards = originals.iter().map(|&v| self.reward(v)).collect();
        let penalties = originals.iter().map(|&v| self.penalty(v)).collect();
        let coords = self
            .coords
            .as_ref()
            .map(|c| originals.iter().map(|&v| c[v as usize]).collect());
        let mut edges = Vec::new();
        for &v in &originals {
            for &w in self.neighbors(v) {
                if v < w {
                    if let (Some(&lv), Some(&lw)) = (local.get(&v), local.get(&w)) {
                        edges.push((lv, lw));
                    }
                }
            }
        }
        Ok((CityGraph::new(rewards, penalties, &edges, coords)?, originals))
    }
}

/// Instance-wide game parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    /// Attacker drone count A.
    pub attackers: u32,
    /// Defender drone count D.
    pub defenders: u32,
    /// Strikes each attacker drone can deliver (P).
    pub payload: u32,
    /// Time horizon / battery (B): paths have B positions and B-1 moves.
    pub battery: u32,
    /// Number of λ grid points (#λ) for utility curves.
    pub lambda_grid_size: u32,
    /// λ cutoff λ_c: grid covers [0, λ_c] plus the point λ=1.
    pub lambda_cutoff: f64,
    /// Candidate-set cap for attacker strategy scans (Algorithm 3's th).
    pub attack_candidate_cap: usize,
    /// Neighborhood count per defense drone when clustering falls back to
    /// K-Means (|V̂| = this × D).
    pub zones_per_defender: u32,
    pub lp_tolerance: f64,
    pub milp_gap: f64,
    pub seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            attackers: 4,
            defenders: 4,
            payload: 4,
            battery: 6,
            lambda_grid_size: 3,
            lambda_cutoff: 0.5,
            attack_candidate_cap: 32,
            zones_per_defender: 8,
            lp_tolerance: crate::optim::DEFAULT_LP_TOLERANCE,
            milp_gap: crate::optim::DEFAULT_MILP_GAP,
            seed: 0,
        }
    }
}

impl GameConfig {
    /// Convenience constructor used all over the tests.
    pub fn sized(attackers: u32, defenders: u32, battery: u32, payload: u32) -> Self {
        GameConfig { attackers, defenders, battery, payload, ..GameConfig::default() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        if self.attackers < 1 || self.defenders < 1 {
            return bad(format!(
                "need at least one drone per side (A={}, D={})",
                self.attackers, self.defenders
            ));
        }
        if self.battery < 1 {
            return bad("battery must be >= 1".into());
        }
        if self.payload < 1 || self.payload > self.battery {
            return bad(format!(
                "payload must satisfy 1 <= P <= B (P={}, B={})",
                self.payload, self.battery
            ));
        }
        if self.lambda_grid_size < 2 {
            return bad("lambda_grid_size must be >= 2".into());
        }
        if self.zones_per_defender < 1 {
            return bad("zones_per_defender must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.lambda_cutoff) {
            return bad(format!("lambda_cutoff {} outside [0, 1]", self.lambda_cutoff));
        }
        if !(self.lp_tolerance > 0.0) || !(self.milp_gap > 0.0) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }
}

/// One attacker drone's pure strategy: a B-position path (hovering allowed)
/// and the set of steps at which it strikes its current node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttackPlan {
    pub path: Vec<u32>,
    /// Strictly increasing step indices in 1..=B, at most P of them.
    pub attacks: Vec<u32>,
}

impl AttackPlan {
    pub fn validate(&self, graph: &CityGraph, battery: u32, payload: u32) -> Result<(), ModelError> {
        if self.path.len() != battery as usize {
            return Err(ModelError::InvalidStrategy(format!(
                "path has {} positions, battery is {}",
                self.path.len(),
                battery
            )));
        }
        for &v in &self.path {
            if !graph.contains(v) {
                return Err(ModelError::InvalidStrategy(format!("path visits unknown node {v}")));
            }
        }
        for w in self.path.windows(2) {
            if !graph.step_ok(w[0], w[1]) {
                return Err(ModelError::InvalidStrategy(format!(
                    "path step {} -> {} is not an edge or hover",
                    w[0], w[1]
                )));
            }
        }
        if self.attacks.len() > payload as usize {
            return Err(ModelError::InvalidStrategy(format!(
                "{} attacks exceed payload {}",
                self.attacks.len(),
                payload
            )));
        }
        if self.attacks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::InvalidStrategy("attack times must be strictly increasing".into()));
        }
        if self.attacks.iter().any(|&t| t < 1 || t > battery) {
            return Err(ModelError::InvalidStrategy("attack time outside 1..=B".into()));
        }
        Ok(())
    }

    /// Node struck at step `t`, if this plan strikes then.
    pub fn strike_at(&self, t: u32) -> Option<u32> {
        self.attacks.binary_search(&t).ok().map(|_| self.path[(t - 1) as usize])
    }
}

/// Joint attacker pure strategy, one plan per drone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackerPureStrategy {
    pub drones: Vec<AttackPlan>,
}

impl AttackerPureStrategy {
    pub fn single(plan: AttackPlan) -> Self {
        AttackerPureStrategy { drones: vec![plan] }
    }

    pub fn validate(&self, graph: &CityGraph, config: &GameConfig) -> Result<(), ModelError> {
        if self.drones.len() != config.attackers as usize {
            return Err(ModelError::InvalidStrategy(format!(
                "{} attack plans for {} attacker drones",
                self.drones.len(),
                config.attackers
            )));
        }
        for plan in &self.drones {
            plan.validate(graph, config.battery, config.payload)?;
        }
        Ok(())
    }
}

/// What a defender policy sees of one attacker drone at the end of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Obs {
    /// Position not (yet) revealed.
    Hidden,
    /// Revealed position.
    At(u32),
    /// Drone eliminated (caught or out of payload).
    Down,
}

/// True per-drone attacker state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pos {
    At(u32),
    Down,
}

/// When attacker positions become visible to defender policies. The destroyed
/// set is visible in both modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    /// Hidden until the drone's first executed strike, then tracked.
    FirstStrike,
    /// Tracked from placement on (the within-neighborhood convention).
    AlwaysVisible,
}

/// End-of-step snapshot handed to defender policies: one observation per
/// attacker drone plus the destroyed set so far (sorted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepObs {
    pub obs: Vec<Obs>,
    pub destroyed: Vec<u32>,
}

/// A defender drone's contingency plan. Implementations must be pure: the
/// move may depend only on the arguments (plus construction-time data), so
/// traces are replayable.
pub trait DefensePolicy {
    /// Placement node for t=1.
    fn start(&self) -> u32;

    /// Move for step `t` (2..=B) given own position and the end-of-step
    /// snapshots of steps 1..t-1. Must return the current node or a neighbor.
    fn next_move(&self, t: u32, own: u32, seen: &[StepObs]) -> u32;
}

impl<T: DefensePolicy + ?Sized> DefensePolicy for &T {
    fn start(&self) -> u32 {
        (**self).start()
    }
    fn next_move(&self, t: u32, own: u32, seen: &[StepObs]) -> u32 {
        (**self).next_move(t, own, seen)
    }
}

impl<T: DefensePolicy + ?Sized> DefensePolicy for Box<T> {
    fn start(&self) -> u32 {
        (**self).start()
    }
    fn next_move(&self, t: u32, own: u32, seen: &[StepObs]) -> u32 {
        (**self).next_move(t, own, seen)
    }
}

/// Observation key a policy tree branches on: one attacker's observed
/// position plus the destroyed set within the tree's scope.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObsKey {
    pub pos: Obs,
    pub destroyed: Vec<u32>,
}

/// Branch of a [`PolicyTree`]: the move taken on an observation and the
/// subtree that handles what follows.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyBranch {
    pub mv: u32,
    pub then: PolicyNode,
}

/// Decision node mapping end-of-step observations to branches. Observations
/// with no entry fall back to hovering, which keeps partially-built trees
/// (and trees replayed under a different visibility mode) well-defined.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyNode {
    pub branches: BTreeMap<ObsKey, PolicyBranch>,
}

/// Explicit single-watcher contingency policy: a start node plus a decision
/// tree over (observed position, destroyed set) histories of one attacker.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTree {
    pub start: u32,
    pub root: PolicyNode,
}

impl PolicyTree {
    pub fn parked(start: u32) -> Self {
        PolicyTree { start, root: PolicyNode::default() }
    }
}

impl DefensePolicy for PolicyTree {
    fn start(&self) -> u32 {
        self.start
    }

    fn next_move(&self, _t: u32, own: u32, seen: &[StepObs]) -> u32 {
        let mut node = &self.root;
        let mut mv = own;
        for step in seen {
            let key = ObsKey { pos: step.obs.first().copied().unwrap_or(Obs::Hidden), destroyed: step.destroyed.clone() };
            match node.branches.get(&key) {
                Some(branch) => {
                    mv = branch.mv;
                    node = &branch.then;
                }
                None => return own, // off-tree history: hover from here on
            }
        }
        mv
    }
}

/// Finite-support distribution over joint defender policies (one policy per
/// drone in each atom).
#[derive(Debug, Clone)]
pub struct MixedDefense<P> {
    pub support: Vec<(Vec<P>, f64)>,
}

impl<P> MixedDefense<P> {
    pub fn pure(policies: Vec<P>) -> Self {
        MixedDefense { support: vec![(policies, 1.0)] }
    }

    pub fn validate(&self, defenders: u32, tol: f64) -> Result<(), ModelError> {
        if self.support.is_empty() {
            return Err(ModelError::BadMixture("empty support".into()));
        }
        let mut total = 0.0;
        for (policies, p) in &self.support {
            if policies.len() != defenders as usize {
                return Err(ModelError::BadMixture(format!(
                    "atom has {} policies for {} defenders",
                    policies.len(),
                    defenders
                )));
            }
            if !(*p > 0.0 && *p <= 1.0 + tol) {
                return Err(ModelError::BadMixture(format!("probability {p} outside (0, 1]")));
            }
            total += p;
        }
        if (total - 1.0).abs() > tol.max(1e-9) * 10.0 {
            return Err(ModelError::BadMixture(format!("probabilities sum to {total}")));
        }
        Ok(())
    }
}

/// λ-blend of the defended and undefended outcomes of one attacker strategy:
/// λ·u_with + (1−λ)·u_greedy.
pub fn lambda_utility(u_with_defender: f64, u_greedy: f64, lambda: f64) -> Result<f64, ModelError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ModelError::LambdaRange(lambda));
    }
    Ok(lambda * u_with_defender + (1.0 - lambda) * u_greedy)
}
