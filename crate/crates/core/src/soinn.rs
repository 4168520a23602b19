//! Self-organizing incremental neural network.
//!
//! The network is a graph of prototype nodes. Each node carries a weight
//! vector, a win count, and a tally of class-label votes; edges carry ages.
//! A training input either spawns a new node — when it is farther from both
//! nearest nodes than their similarity thresholds allow — or connects the two
//! winners and pulls them toward the input. Edges age out past `age_max`, and
//! every `lambda` steps a denoise pass drops isolated nodes and insignificant
//! low-degree ones. Classification is nearest-node by Euclidean distance,
//! answering with the winner's majority label.
//!
//! The first layer uses per-node adaptive thresholds; [`train_layer2`] runs
//! the same procedure with a caller-supplied constant threshold and is used
//! for cluster-count estimation over the first layer's prototypes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold rule for a node with no neighbors: the range is taken over all
/// other nodes, keeping either the farthest (the default) or the nearest one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsolatedThreshold {
    #[default]
    FarthestOther,
    NearestOther,
}

/// Training parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    /// Denoise period, in training steps.
    pub lambda: u64,
    /// Maximum edge age before pruning.
    pub age_max: u32,
    /// Constant similarity threshold for the optional second layer.
    pub layer2_threshold: Option<f64>,
    pub rng_seed: u64,
    /// A degree-1/2 node is denoised when its win count falls below this
    /// fraction of the mean win count.
    pub denoise_ratio: f64,
    pub isolated_threshold: IsolatedThreshold,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            lambda: 100,
            age_max: 50,
            layer2_threshold: None,
            rng_seed: 0,
            denoise_ratio: 0.5,
            isolated_threshold: IsolatedThreshold::default(),
        }
    }
}

impl TrainParams {
    fn validate(&self) -> Result<()> {
        if self.lambda < 1 {
            return Err(Error::InvalidParam("lambda must be >= 1".into()));
        }
        if self.age_max < 1 {
            return Err(Error::InvalidParam("age_max must be >= 1".into()));
        }
        if !self.denoise_ratio.is_finite() || self.denoise_ratio < 0.0 {
            return Err(Error::InvalidParam(
                "denoise_ratio must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// A prototype node.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    id: u64,
    weight: Vec<f64>,
    win_count: u64,
    label_votes: BTreeMap<String, u64>,
}

impl Node {
    pub fn new(
        id: u64,
        weight: Vec<f64>,
        win_count: u64,
        label_votes: BTreeMap<String, u64>,
    ) -> Self {
        Node {
            id,
            weight,
            win_count,
            label_votes,
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn win_count(&self) -> u64 {
        self.win_count
    }

    pub fn label_votes(&self) -> &BTreeMap<String, u64> {
        &self.label_votes
    }

    /// Label with the most votes; ties go to the lexicographically smallest.
    pub fn majority_label(&self) -> Option<&str> {
        let mut best: Option<(&str, u64)> = None;
        for (label, &count) in &self.label_votes {
            match best {
                Some((_, c)) if count <= c => {}
                _ => best = Some((label, count)),
            }
        }
        best.map(|(label, _)| label)
    }
}

/// Nearest and second-nearest nodes to an input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winners {
    pub winner: u64,
    pub second: u64,
    pub winner_dist: f64,
    pub second_dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepAction {
    Inserted { id: u64 },
    Connected,
}

/// What one training step did, with the quantities that decided it.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub action: StepAction,
    pub winner: u64,
    pub second: u64,
    pub winner_dist: f64,
    pub second_dist: f64,
    pub winner_threshold: f64,
    pub second_threshold: f64,
    /// Nodes dropped by the periodic denoise pass within this step.
    pub removed: Vec<u64>,
}

/// Classification result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub label: String,
    pub winner_id: u64,
    pub distance: f64,
    pub votes: BTreeMap<String, u64>,
}

#[derive(Clone, Copy)]
enum ThresholdRule {
    Adaptive,
    Constant(f64),
}

/// The network: nodes, aged edges, and training state.
#[derive(Debug, Clone, PartialEq)]
pub struct SoinnNetwork {
    dimension: usize,
    nodes: BTreeMap<u64, Node>,
    edges: BTreeMap<(u64, u64), u32>,
    adjacency: BTreeMap<u64, BTreeSet<u64>>,
    params: TrainParams,
    steps_seen: u64,
    next_id: u64,
}

impl SoinnNetwork {
    /// Start a network from two distinct seed vectors. No edges yet; the seed
    /// nodes carry no label votes until they win a training input.
    ///
    /// ```
    /// use binsight::soinn::{SoinnNetwork, TrainParams};
    ///
    /// let mut net =
    ///     SoinnNetwork::init(&[0.0, 0.0], &[1.0, 1.0], TrainParams::default()).unwrap();
    /// net.train_step(&[0.1, 0.0], "benign").unwrap();
    /// net.train_step(&[0.9, 1.0], "malicious").unwrap();
    /// assert_eq!(net.classify(&[0.05, 0.05]).unwrap().label, "benign");
    /// ```
    pub fn init(first: &[f64], second: &[f64], params: TrainParams) -> Result<Self> {
        params.validate()?;
        if first.len() != second.len() {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                got: second.len(),
            });
        }
        if first.is_empty() {
            return Err(Error::InvalidParam("vectors must be non-empty".into()));
        }
        for v in first.iter().chain(second) {
            if !v.is_finite() {
                return Err(Error::InvalidParam("weights must be finite".into()));
            }
        }
        if first == second {
            return Err(Error::DegenerateInit);
        }
        let mut nodes = BTreeMap::new();
        nodes.insert(0, Node::new(0, first.to_vec(), 1, BTreeMap::new()));
        nodes.insert(1, Node::new(1, second.to_vec(), 1, BTreeMap::new()));
        Ok(SoinnNetwork {
            dimension: first.len(),
            nodes,
            edges: BTreeMap::new(),
            adjacency: BTreeMap::new(),
            params,
            steps_seen: 0,
            next_id: 2,
        })
    }

    /// Reassemble a network from stored parts, validating every structural
    /// invariant (used by the model store and by tests). `next_id` carries
    /// the id counter across a save/load cycle; `None` resumes after the
    /// highest live id.
    pub fn from_parts(
        dimension: usize,
        nodes: Vec<Node>,
        edges: Vec<((u64, u64), u32)>,
        params: TrainParams,
        steps_seen: u64,
        next_id: Option<u64>,
    ) -> Result<Self> {
        params.validate()?;
        if dimension == 0 {
            return Err(Error::ModelIntegrity("dimension must be >= 1".into()));
        }
        let mut node_map = BTreeMap::new();
        let mut min_next_id = 0;
        for node in nodes {
            if node.weight.len() != dimension {
                return Err(Error::ModelIntegrity(format!(
                    "node {} has dimension {}, expected {dimension}",
                    node.id,
                    node.weight.len()
                )));
            }
            if node.weight.iter().any(|v| !v.is_finite()) {
                return Err(Error::ModelIntegrity(format!(
                    "node {} has a non-finite weight",
                    node.id
                )));
            }
            if node.win_count < 1 {
                return Err(Error::ModelIntegrity(format!(
                    "node {} has win_count 0",
                    node.id
                )));
            }
            min_next_id = min_next_id.max(node.id + 1);
            if node_map.insert(node.id, node).is_some() {
                return Err(Error::ModelIntegrity("duplicate node id".into()));
            }
        }
        let next_id = match next_id {
            None => min_next_id,
            Some(v) if v >= min_next_id => v,
            Some(v) => {
                return Err(Error::ModelIntegrity(format!(
                    "next_id {v} collides with live node ids (needs >= {min_next_id})"
                )))
            }
        };
        let mut edge_map = BTreeMap::new();
        let mut adjacency: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
        for ((a, b), age) in edges {
            if a == b {
                return Err(Error::ModelIntegrity(format!("self-edge on node {a}")));
            }
            if !node_map.contains_key(&a) || !node_map.contains_key(&b) {
                return Err(Error::ModelIntegrity(format!(
                    "edge ({a}, {b}) references a missing node"
                )));
            }
            if age > params.age_max {
                return Err(Error::ModelIntegrity(format!(
                    "edge ({a}, {b}) age {age} exceeds age_max {}",
                    params.age_max
                )));
            }
            let key = ordered_pair(a, b);
            if edge_map.insert(key, age).is_some() {
                return Err(Error::ModelIntegrity(format!("duplicate edge ({a}, {b})")));
            }
            adjacency.entry(a).or_default().insert(b);
            adjacency.entry(b).or_default().insert(a);
        }
        Ok(SoinnNetwork {
            dimension,
            nodes: node_map,
            edges: edge_map,
            adjacency,
            params,
            steps_seen,
            next_id,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn params(&self) -> &TrainParams {
        &self.params
    }

    pub fn steps_seen(&self) -> u64 {
        self.steps_seen
    }

    /// Id the next inserted node will receive. Ids are never reused.
    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node(&self, id: u64) -> Option<&Node> {
        self.nodes.get(&id)
    }

    /// Edges as `((low id, high id), age)`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = ((u64, u64), u32)> + '_ {
        self.edges.iter().map(|(&pair, &age)| (pair, age))
    }

    pub fn neighbors(&self, id: u64) -> impl Iterator<Item = u64> + '_ {
        self.adjacency.get(&id).into_iter().flatten().copied()
    }

    pub fn degree(&self, id: u64) -> usize {
        self.adjacency.get(&id).map_or(0, BTreeSet::len)
    }

    /// Winner and second winner by Euclidean distance; ties break to the
    /// smallest node id.
    pub fn winners(&self, input: &[f64]) -> Result<Winners> {
        self.check_input(input)?;
        if self.nodes.len() < 2 {
            return Err(Error::NotEnoughNodes {
                required: 2,
                actual: self.nodes.len(),
            });
        }
        let mut best: Option<(u64, f64)> = None;
        let mut runner: Option<(u64, f64)> = None;
        for (&id, node) in &self.nodes {
            let d = euclidean(input, &node.weight);
            match best {
                None => best = Some((id, d)),
                Some((_, bd)) if d < bd => {
                    runner = best;
                    best = Some((id, d));
                }
                _ => match runner {
                    None => runner = Some((id, d)),
                    Some((_, rd)) if d < rd => runner = Some((id, d)),
                    _ => {}
                },
            }
        }
        let (winner, winner_dist) = best.expect("at least two nodes");
        let (second, second_dist) = runner.expect("at least two nodes");
        Ok(Winners {
            winner,
            second,
            winner_dist,
            second_dist,
        })
    }

    /// Similarity threshold of a node: the largest distance to a neighbor,
    /// or — for a node with no neighbors — its distance to the farthest
    /// (default) or nearest other node, per `params.isolated_threshold`.
    pub fn similarity_threshold(&self, id: u64) -> Result<f64> {
        let node = self.nodes.get(&id).ok_or(Error::UnknownNode { id })?;
        if self.nodes.len() < 2 {
            return Err(Error::NotEnoughNodes {
                required: 2,
                actual: self.nodes.len(),
            });
        }
        if let Some(neighbors) = self.adjacency.get(&id).filter(|s| !s.is_empty()) {
            let mut threshold = 0.0f64;
            for &j in neighbors {
                threshold = threshold.max(euclidean(&node.weight, &self.nodes[&j].weight));
            }
            Ok(threshold)
        } else {
            let mut threshold: Option<f64> = None;
            for (&j, other) in &self.nodes {
                if j == id {
                    continue;
                }
                let d = euclidean(&node.weight, &other.weight);
                threshold = Some(match (threshold, self.params.isolated_threshold) {
                    (None, _) => d,
                    (Some(t), IsolatedThreshold::FarthestOther) => t.max(d),
                    (Some(t), IsolatedThreshold::NearestOther) => t.min(d),
                });
            }
            Ok(threshold.expect("at least two nodes"))
        }
    }

    /// One online training step with the adaptive first-layer threshold.
    pub fn train_step(&mut self, input: &[f64], label: &str) -> Result<StepReport> {
        self.step_with_rule(input, label, ThresholdRule::Adaptive)
    }

    fn step_with_rule(
        &mut self,
        input: &[f64],
        label: &str,
        rule: ThresholdRule,
    ) -> Result<StepReport> {
        let w = self.winners(input)?;
        let (winner_threshold, second_threshold) = match rule {
            ThresholdRule::Adaptive => (
                self.similarity_threshold(w.winner)?,
                self.similarity_threshold(w.second)?,
            ),
            ThresholdRule::Constant(t) => (t, t),
        };

        let action = if w.winner_dist > winner_threshold || w.second_dist > second_threshold {
            let id = self.next_id;
            self.next_id += 1;
            let mut votes = BTreeMap::new();
            votes.insert(label.to_string(), 1);
            self.nodes
                .insert(id, Node::new(id, input.to_vec(), 1, votes));
            StepAction::Inserted { id }
        } else {
            self.connect_and_adapt(input, label, w.winner, w.second);
            StepAction::Connected
        };

        self.steps_seen += 1;
        let removed = if self.steps_seen.is_multiple_of(self.params.lambda) {
            self.denoise()
        } else {
            Vec::new()
        };

        Ok(StepReport {
            action,
            winner: w.winner,
            second: w.second,
            winner_dist: w.winner_dist,
            second_dist: w.second_dist,
            winner_threshold,
            second_threshold,
            removed,
        })
    }

    fn connect_and_adapt(&mut self, input: &[f64], label: &str, winner: u64, second: u64) {
        // Add or reset the winner pair's edge, then age the winner's other
        // edges and prune the ones past age_max.
        self.add_edge(winner, second);
        let neighbors: Vec<u64> = self.neighbors(winner).collect();
        for &j in &neighbors {
            if j == second {
                continue;
            }
            let key = ordered_pair(winner, j);
            let age = self
                .edges
                .get_mut(&key)
                .expect("adjacency and edges stay in sync");
            *age += 1;
            if *age > self.params.age_max {
                self.remove_edge(winner, j);
            }
        }

        let node = self.nodes.get_mut(&winner).expect("winner exists");
        node.win_count += 1;
        *node.label_votes.entry(label.to_string()).or_insert(0) += 1;
        let m = node.win_count as f64;
        let winner_rate = 1.0 / m;
        for (wi, &ui) in node.weight.iter_mut().zip(input) {
            *wi += winner_rate * (ui - *wi);
        }
        let neighbor_rate = 1.0 / (100.0 * m);
        let survivors: Vec<u64> = self.neighbors(winner).collect();
        for j in survivors {
            let other = self.nodes.get_mut(&j).expect("neighbor exists");
            for (wi, &ui) in other.weight.iter_mut().zip(input) {
                *wi += neighbor_rate * (ui - *wi);
            }
        }
    }

    /// Drop every node with no neighbors, and every node with one or two
    /// neighbors whose win count is below `denoise_ratio` times the mean.
    /// Candidates are judged against a snapshot of the current graph and
    /// removed in ascending id order; the last two nodes are never removed.
    pub fn denoise(&mut self) -> Vec<u64> {
        if self.nodes.len() <= 2 {
            return Vec::new();
        }
        let mean_wins =
            self.nodes.values().map(|n| n.win_count as f64).sum::<f64>() / self.nodes.len() as f64;
        let cutoff = self.params.denoise_ratio * mean_wins;

        let mut doomed = Vec::new();
        for (&id, node) in &self.nodes {
            let remove = match self.degree(id) {
                0 => true,
                1 | 2 => (node.win_count as f64) < cutoff,
                _ => false,
            };
            if remove {
                doomed.push(id);
            }
        }
        doomed.truncate(self.nodes.len() - 2);
        for &id in &doomed {
            self.remove_node(id);
        }
        doomed
    }

    /// Nearest-node classification: the winner's majority label.
    pub fn classify(&self, input: &[f64]) -> Result<Verdict> {
        let w = self.winners(input)?;
        let node = &self.nodes[&w.winner];
        let label = node
            .majority_label()
            .ok_or(Error::UnlabeledNode { id: w.winner })?
            .to_string();
        Ok(Verdict {
            label,
            winner_id: w.winner,
            distance: w.winner_dist,
            votes: node.label_votes.clone(),
        })
    }

    /// Prototype weights with their majority labels, for a second layer.
    /// Nodes that never won a labeled input are skipped.
    pub fn labeled_prototypes(&self) -> Vec<(Vec<f64>, String)> {
        self.nodes
            .values()
            .filter_map(|n| {
                n.majority_label()
                    .map(|l| (n.weight.clone(), l.to_string()))
            })
            .collect()
    }

    /// Connected components (ascending ids within and across components);
    /// the second layer's component count estimates the number of clusters.
    pub fn connected_components(&self) -> Vec<Vec<u64>> {
        let mut seen = BTreeSet::new();
        let mut components = Vec::new();
        for &start in self.nodes.keys() {
            if !seen.insert(start) {
                continue;
            }
            let mut component = vec![start];
            let mut queue = vec![start];
            while let Some(id) = queue.pop() {
                for j in self.neighbors(id) {
                    if seen.insert(j) {
                        component.push(j);
                        queue.push(j);
                    }
                }
            }
            component.sort_unstable();
            components.push(component);
        }
        components
    }

    /// Drop nodes that never accumulated a label vote (the two seed nodes
    /// can end up this way if they never win). Keeps at least two nodes.
    pub fn drop_unlabeled_nodes(&mut self) -> Vec<u64> {
        let mut doomed: Vec<u64> = self
            .nodes
            .iter()
            .filter(|(_, n)| n.label_votes.is_empty())
            .map(|(&id, _)| id)
            .collect();
        doomed.truncate(self.nodes.len().saturating_sub(2));
        for &id in &doomed {
            self.remove_node(id);
        }
        doomed
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: input.len(),
            });
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam(
                "input contains a non-finite value".into(),
            ));
        }
        Ok(())
    }

    fn add_edge(&mut self, a: u64, b: u64) {
        self.edges.insert(ordered_pair(a, b), 0);
        self.adjacency.entry(a).or_default().insert(b);
        self.adjacency.entry(b).or_default().insert(a);
    }

    fn remove_edge(&mut self, a: u64, b: u64) {
        self.edges.remove(&ordered_pair(a, b));
        if let Some(set) = self.adjacency.get_mut(&a) {
            set.remove(&b);
            if set.is_empty() {
                self.adjacency.remove(&a);
            }
        }
        if let Some(set) = self.adjacency.get_mut(&b) {
            set.remove(&a);
            if set.is_empty() {
                self.adjacency.remove(&b);
            }
        }
    }

    fn remove_node(&mut self, id: u64) {
        let neighbors: Vec<u64> = self.neighbors(id).collect();
        for j in neighbors {
            self.remove_edge(id, j);
        }
        self.nodes.remove(&id);
    }
}

/// Train a second-layer network with a constant similarity threshold.
///
/// The network is seeded from the first two distinct inputs, which are
/// consumed; every remaining input runs through the usual step procedure
/// with `T = constant_threshold` for both winners.
pub fn train_layer2(
    inputs: &[(Vec<f64>, String)],
    constant_threshold: f64,
    params: TrainParams,
) -> Result<SoinnNetwork> {
    if constant_threshold.is_nan() || constant_threshold < 0.0 {
        return Err(Error::InvalidParam("layer-2 threshold must be >= 0".into()));
    }
    let first = inputs
        .first()
        .ok_or_else(|| Error::InvalidParam("layer 2 needs at least two distinct inputs".into()))?;
    let second_idx = inputs
        .iter()
        .position(|(w, _)| *w != first.0)
        .ok_or(Error::DegenerateInit)?;

    let mut net = SoinnNetwork::init(&first.0, &inputs[second_idx].0, params)?;
    for (i, (weight, label)) in inputs.iter().enumerate() {
        if i == 0 || i == second_idx {
            continue;
        }
        net.step_with_rule(weight, label, ThresholdRule::Constant(constant_threshold))?;
    }
    Ok(net)
}

fn ordered_pair(a: u64, b: u64) -> (u64, u64) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: u64, age_max: u32) -> TrainParams {
        TrainParams {
            lambda,
            age_max,
            ..TrainParams::default()
        }
    }

    fn votes(label: &str, count: u64) -> BTreeMap<String, u64> {
        let mut v = BTreeMap::new();
        v.insert(label.to_string(), count);
        v
    }

    #[test]
    fn init_creates_two_unconnected_nodes() {
        let net = SoinnNetwork::init(&[0.0, 0.0], &[1.0, 0.0], TrainParams::default()).unwrap();
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.edge_count(), 0);
        assert_eq!(net.steps_seen(), 0);
        assert_eq!(net.node(0).unwrap().weight(), &[0.0, 0.0]);
        assert_eq!(net.node(1).unwrap().weight(), &[1.0, 0.0]);
    }

    #[test]
    fn init_rejects_bad_seeds() {
        assert!(matches!(
            SoinnNetwork::init(&[0.0], &[1.0, 2.0], TrainParams::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            SoinnNetwork::init(&[1.0, 2.0], &[1.0, 2.0], TrainParams::default()),
            Err(Error::DegenerateInit)
        ));
        assert!(matches!(
            SoinnNetwork::init(&[0.0], &[1.0], params(0, 5)),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn winners_hand_computed_distances() {
        // From u = (0,1): node 0 is 1 away, node 1 a 3-4-5 hypotenuse away.
        let net = SoinnNetwork::init(&[0.0, 0.0], &[3.0, 5.0], TrainParams::default()).unwrap();
        let w = net.winners(&[0.0, 1.0]).unwrap();
        assert_eq!(w.winner, 0);
        assert_eq!(w.second, 1);
        assert_eq!(w.winner_dist, 1.0);
        assert_eq!(w.second_dist, 5.0);
    }

    #[test]
    fn winner_at_zero_distance() {
        let net = SoinnNetwork::init(&[0.0, 0.0], &[3.0, 4.0], TrainParams::default()).unwrap();
        let w = net.winners(&[3.0, 4.0]).unwrap();
        assert_eq!(w.winner, 1);
        assert_eq!(w.winner_dist, 0.0);
    }

    #[test]
    fn winners_tie_breaks_to_smallest_id() {
        let net = SoinnNetwork::init(&[-1.0], &[1.0], TrainParams::default()).unwrap();
        let w = net.winners(&[0.0]).unwrap();
        assert_eq!(w.winner, 0);
        assert_eq!(w.second, 1);
    }

    #[test]
    fn winners_requires_two_nodes() {
        let net = SoinnNetwork::from_parts(
            1,
            vec![Node::new(0, vec![0.0], 1, BTreeMap::new())],
            vec![],
            TrainParams::default(),
            0,
            None,
        )
        .unwrap();
        assert!(matches!(
            net.winners(&[0.0]),
            Err(Error::NotEnoughNodes {
                required: 2,
                actual: 1
            })
        ));
    }

    #[test]
    fn threshold_uses_neighbors_when_present() {
        let net = SoinnNetwork::from_parts(
            1,
            vec![
                Node::new(0, vec![0.0], 1, BTreeMap::new()),
                Node::new(1, vec![2.0], 1, BTreeMap::new()),
                Node::new(2, vec![5.0], 1, BTreeMap::new()),
            ],
            vec![((0, 1), 0)],
            TrainParams::default(),
            0,
            None,
        )
        .unwrap();
        // Node 0 has one neighbor at distance 2; node 2 is ignored.
        assert_eq!(net.similarity_threshold(0).unwrap(), 2.0);
    }

    #[test]
    fn threshold_of_isolated_node_spans_all_others() {
        let mut p = TrainParams::default();
        let nodes = || {
            vec![
                Node::new(0, vec![0.0], 1, BTreeMap::new()),
                Node::new(1, vec![1.0], 1, BTreeMap::new()),
                Node::new(2, vec![5.0], 1, BTreeMap::new()),
            ]
        };
        let net = SoinnNetwork::from_parts(1, nodes(), vec![], p.clone(), 0, None).unwrap();
        assert_eq!(net.similarity_threshold(0).unwrap(), 5.0);

        p.isolated_threshold = IsolatedThreshold::NearestOther;
        let net = SoinnNetwork::from_parts(1, nodes(), vec![], p, 0, None).unwrap();
        assert_eq!(net.similarity_threshold(0).unwrap(), 1.0);
    }

    #[test]
    fn distant_input_inserts_a_node() {
        let mut net = SoinnNetwork::init(&[0.0, 0.0], &[1.0, 0.0], TrainParams::default()).unwrap();
        // Both thresholds are ~1 (distance between the two seeds); an input
        // far beyond that must be inserted.
        let report = net.train_step(&[50.0, 50.0], "malicious").unwrap();
        assert!(matches!(report.action, StepAction::Inserted { id: 2 }));
        assert!(report.winner_dist > report.winner_threshold);
        assert_eq!(net.node_count(), 3);
        assert_eq!(
            net.node(2).unwrap().label_votes().get("malicious"),
            Some(&1)
        );
        assert_eq!(net.node(2).unwrap().win_count(), 1);
    }

    #[test]
    fn near_input_connects_the_winners() {
        let mut net = SoinnNetwork::init(&[0.0, 0.0], &[1.0, 0.0], TrainParams::default()).unwrap();
        let report = net.train_step(&[0.5, 0.0], "benign").unwrap();
        assert_eq!(report.action, StepAction::Connected);
        assert_eq!(net.edges().collect::<Vec<_>>(), vec![((0, 1), 0)]);
        assert_eq!(net.node(0).unwrap().win_count(), 2);
        assert_eq!(net.node(0).unwrap().label_votes().get("benign"), Some(&1));
    }

    #[test]
    fn winner_weight_moves_by_inverse_win_count() {
        let mut net = SoinnNetwork::init(&[0.0, 0.0], &[10.0, 0.0], params(100, 50)).unwrap();
        net.train_step(&[0.4, 0.0], "benign").unwrap();
        // Winner: M goes 1 -> 2, so the move is half the gap, exactly.
        assert_eq!(net.node(0).unwrap().weight(), &[0.2, 0.0]);
        // Neighbor rate is 1/(100 * 2) of its gap; same operations as the
        // implementation so the comparison is exact.
        let expected = 10.0 + 1.0 / (100.0 * 2.0) * (0.4 - 10.0);
        assert_eq!(net.node(1).unwrap().weight(), &[expected, 0.0]);
    }

    #[test]
    fn scripted_sequence_ages_out_an_edge() {
        // Three nodes; node 0 is connected to both 1 and 2. age_max = 1, so
        // two consecutive wins by node 0 that refresh (0,1) must age (0,2)
        // to 2 and prune it.
        let mut net = SoinnNetwork::from_parts(
            2,
            vec![
                Node::new(0, vec![0.0, 0.0], 1, votes("benign", 1)),
                Node::new(1, vec![1.0, 0.0], 1, votes("benign", 1)),
                Node::new(2, vec![10.0, 10.0], 1, votes("malicious", 1)),
            ],
            vec![((0, 1), 0), ((0, 2), 0)],
            params(100, 1),
            0,
            None,
        )
        .unwrap();

        let r1 = net.train_step(&[0.4, 0.0], "benign").unwrap();
        assert_eq!(r1.action, StepAction::Connected);
        assert_eq!((r1.winner, r1.second), (0, 1));
        assert_eq!(
            net.edges().collect::<Vec<_>>(),
            vec![((0, 1), 0), ((0, 2), 1)]
        );
        assert_eq!(net.node(0).unwrap().weight(), &[0.2, 0.0]);

        let r2 = net.train_step(&[0.4, 0.0], "benign").unwrap();
        assert_eq!(r2.action, StepAction::Connected);
        assert_eq!((r2.winner, r2.second), (0, 1));
        // (0,2) hit age 2 > age_max and is gone; no dangling adjacency.
        assert_eq!(net.edges().collect::<Vec<_>>(), vec![((0, 1), 0)]);
        assert_eq!(net.degree(2), 0);
        assert_eq!(net.node_count(), 3);

        // Four more steps alternating near each cluster: edge set stays
        // consistent and ages never exceed the cap.
        for i in 0..4 {
            let input = if i % 2 == 0 { [0.3, 0.0] } else { [9.5, 9.5] };
            let label = if i % 2 == 0 { "benign" } else { "malicious" };
            net.train_step(&input, label).unwrap();
            assert!(net.edges().all(|(_, age)| age <= 1));
            for (pair, _) in net.edges() {
                assert!(net.node(pair.0).is_some() && net.node(pair.1).is_some());
            }
        }
    }

    #[test]
    fn denoise_rules() {
        // Two connected pairs with solid win counts, one isolated node, and
        // one weak degree-1 node.
        let mut net = SoinnNetwork::from_parts(
            1,
            vec![
                Node::new(0, vec![0.0], 10, votes("benign", 10)),
                Node::new(1, vec![1.0], 10, votes("benign", 10)),
                Node::new(2, vec![5.0], 10, votes("malicious", 10)),
                Node::new(3, vec![6.0], 10, votes("malicious", 10)),
                Node::new(4, vec![20.0], 10, votes("malicious", 10)),
                Node::new(5, vec![2.0], 1, votes("benign", 1)),
            ],
            vec![((0, 1), 0), ((2, 3), 0), ((1, 5), 0)],
            TrainParams::default(),
            0,
            None,
        )
        .unwrap();
        // mean win count = 51/6 = 8.5, cutoff = 4.25. Node 4 is isolated;
        // node 5 has degree 1 and win count 1 < 4.25. Nodes 0..=3 have
        // degree 1 but solid win counts.
        let removed = net.denoise();
        assert_eq!(removed, vec![4, 5]);
        assert_eq!(net.node_count(), 4);
        assert!(net.edges().all(|(pair, _)| pair != (1, 5)));
    }

    #[test]
    fn denoise_keeps_well_connected_weak_nodes() {
        let mut net = SoinnNetwork::from_parts(
            1,
            vec![
                Node::new(0, vec![0.0], 1, votes("benign", 1)),
                Node::new(1, vec![1.0], 100, votes("benign", 100)),
                Node::new(2, vec![2.0], 100, votes("benign", 100)),
                Node::new(3, vec![3.0], 100, votes("benign", 100)),
            ],
            vec![
                ((0, 1), 0),
                ((0, 2), 0),
                ((0, 3), 0),
                ((1, 2), 0),
                ((1, 3), 0),
                ((2, 3), 0),
            ],
            TrainParams::default(),
            0,
            None,
        )
        .unwrap();
        // Node 0 is weak but has three neighbors: kept.
        assert!(net.denoise().is_empty());
        assert_eq!(net.node_count(), 4);
    }

    #[test]
    fn denoise_never_removes_the_last_two_nodes() {
        let mut net = SoinnNetwork::init(&[0.0], &[1.0], TrainParams::default()).unwrap();
        assert!(net.denoise().is_empty());
        assert_eq!(net.node_count(), 2);

        let mut net = SoinnNetwork::from_parts(
            1,
            vec![
                Node::new(0, vec![0.0], 1, BTreeMap::new()),
                Node::new(1, vec![1.0], 1, BTreeMap::new()),
                Node::new(2, vec![2.0], 1, BTreeMap::new()),
            ],
            vec![],
            TrainParams::default(),
            0,
            None,
        )
        .unwrap();
        // All three are isolated candidates; only one may go.
        assert_eq!(net.denoise(), vec![0]);
        assert_eq!(net.node_count(), 2);
    }

    #[test]
    fn denoise_of_clustered_net_removes_exactly_the_noise() {
        // Two dense 4-node cliques with high win counts plus 5 isolated
        // noise nodes.
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for cluster in 0..2u64 {
            let base = cluster * 4;
            let center = cluster as f64 * 100.0;
            for i in 0..4u64 {
                nodes.push(Node::new(
                    base + i,
                    vec![center + i as f64],
                    20,
                    votes("benign", 20),
                ));
            }
            for i in 0..4u64 {
                for j in (i + 1)..4u64 {
                    edges.push(((base + i, base + j), 0));
                }
            }
        }
        for k in 0..5u64 {
            nodes.push(Node::new(
                100 + k,
                vec![500.0 + k as f64 * 50.0],
                1,
                votes("malicious", 1),
            ));
        }
        let mut net =
            SoinnNetwork::from_parts(1, nodes, edges, TrainParams::default(), 0, None).unwrap();
        let removed = net.denoise();
        assert_eq!(removed, vec![100, 101, 102, 103, 104]);
        assert_eq!(net.node_count(), 8);
    }

    #[test]
    fn lambda_periodic_denoise_runs_inside_train_step() {
        let mut net = SoinnNetwork::init(&[0.0, 0.0], &[1.0, 0.0], params(3, 50)).unwrap();
        // Insert a far node, then feed near inputs; at step 3 the far node
        // (still isolated, win count 1 vs a rising mean) gets denoised.
        let r1 = net.train_step(&[100.0, 100.0], "malicious").unwrap();
        assert!(matches!(r1.action, StepAction::Inserted { .. }));
        assert!(r1.removed.is_empty());
        let r2 = net.train_step(&[0.5, 0.0], "benign").unwrap();
        assert!(r2.removed.is_empty());
        let r3 = net.train_step(&[0.5, 0.0], "benign").unwrap();
        assert_eq!(net.steps_seen(), 3);
        assert_eq!(r3.removed, vec![2]);
        assert_eq!(net.node_count(), 2);
    }

    #[test]
    fn classify_hand_cases() {
        let net = SoinnNetwork::from_parts(
            2,
            vec![
                Node::new(0, vec![0.0, 0.0], 3, votes("benign", 3)),
                Node::new(1, vec![4.0, 0.0], 2, votes("malicious", 2)),
            ],
            vec![],
            TrainParams::default(),
            0,
            None,
        )
        .unwrap();
        let v = net.classify(&[0.0, 0.0]).unwrap();
        assert_eq!(v.label, "benign");
        assert_eq!(v.winner_id, 0);
        assert_eq!(v.distance, 0.0);
        assert_eq!(v.votes.get("benign"), Some(&3));

        // Equidistant from both nodes: the smaller id wins.
        let v = net.classify(&[2.0, 0.0]).unwrap();
        assert_eq!(v.winner_id, 0);
        assert_eq!(v.label, "benign");
    }

    #[test]
    fn classify_majority_and_tie_rules() {
        let mut tally = BTreeMap::new();
        tally.insert("benign".to_string(), 2);
        tally.insert("malicious".to_string(), 5);
        let node = Node::new(0, vec![0.0], 7, tally);
        assert_eq!(node.majority_label(), Some("malicious"));

        let mut tied = BTreeMap::new();
        tied.insert("malicious".to_string(), 3);
        tied.insert("benign".to_string(), 3);
        let node = Node::new(0, vec![0.0], 6, tied);
        assert_eq!(node.majority_label(), Some("benign"));
    }

    #[test]
    fn classify_rejects_unlabeled_winner() {
        let net = SoinnNetwork::init(&[0.0], &[1.0], TrainParams::default()).unwrap();
        assert!(matches!(
            net.classify(&[0.1]),
            Err(Error::UnlabeledNode { id: 0 })
        ));
    }

    #[test]
    fn layer2_infinite_threshold_never_inserts() {
        let inputs: Vec<(Vec<f64>, String)> = (0..10)
            .map(|i| (vec![i as f64], "benign".to_string()))
            .collect();
        let net = train_layer2(&inputs, f64::INFINITY, TrainParams::default()).unwrap();
        assert_eq!(net.node_count(), 2);
    }

    #[test]
    fn layer2_zero_threshold_inserts_every_distinct_input() {
        let inputs: Vec<(Vec<f64>, String)> = (0..10)
            .map(|i| (vec![i as f64], "benign".to_string()))
            .collect();
        let net = train_layer2(&inputs, 0.0, TrainParams::default()).unwrap();
        assert_eq!(net.node_count(), 10);
    }

    #[test]
    fn layer2_separates_two_blobs_into_two_components() {
        // Two tight 1-D blobs around 0 and 10; a threshold between the
        // intra (<= 0.4) and inter (~10) scales yields two components.
        let mut inputs = Vec::new();
        for i in 0..20 {
            let offset = (i % 5) as f64 * 0.1;
            if i % 2 == 0 {
                inputs.push((vec![offset], "benign".to_string()));
            } else {
                inputs.push((vec![10.0 + offset], "malicious".to_string()));
            }
        }
        let net = train_layer2(&inputs, 1.0, TrainParams::default()).unwrap();
        let components = net.connected_components();
        assert_eq!(components.len(), 2);
    }

    #[test]
    fn from_parts_rejects_structural_violations() {
        let good_nodes = || {
            vec![
                Node::new(0, vec![0.0], 1, BTreeMap::new()),
                Node::new(1, vec![1.0], 1, BTreeMap::new()),
            ]
        };
        assert!(matches!(
            SoinnNetwork::from_parts(
                1,
                good_nodes(),
                vec![((0, 7), 0)],
                TrainParams::default(),
                0,
                None
            ),
            Err(Error::ModelIntegrity(_))
        ));
        assert!(matches!(
            SoinnNetwork::from_parts(
                1,
                good_nodes(),
                vec![((0, 0), 0)],
                TrainParams::default(),
                0,
                None
            ),
            Err(Error::ModelIntegrity(_))
        ));
        assert!(matches!(
            SoinnNetwork::from_parts(
                1,
                good_nodes(),
                vec![((0, 1), 99)],
                TrainParams::default(),
                0,
                None
            ),
            Err(Error::ModelIntegrity(_))
        ));
        assert!(matches!(
            SoinnNetwork::from_parts(
                1,
                vec![
                    Node::new(0, vec![0.0], 1, BTreeMap::new()),
                    Node::new(0, vec![1.0], 1, BTreeMap::new())
                ],
                vec![],
                TrainParams::default(),
                0,
                None
            ),
            Err(Error::ModelIntegrity(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut net = SoinnNetwork::init(&[0.0, 0.0], &[1.0, 0.0], TrainParams::default()).unwrap();
        assert!(matches!(
            net.train_step(&[1.0], "benign"),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            net.classify(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn drop_unlabeled_removes_voteless_nodes_but_keeps_two() {
        let mut net = SoinnNetwork::from_parts(
            1,
            vec![
                Node::new(0, vec![0.0], 1, BTreeMap::new()),
                Node::new(1, vec![1.0], 3, votes("benign", 3)),
                Node::new(2, vec![2.0], 2, votes("malicious", 2)),
            ],
            vec![((0, 1), 0)],
            TrainParams::default(),
            0,
            None,
        )
        .unwrap();
        assert_eq!(net.drop_unlabeled_nodes(), vec![0]);
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.edge_count(), 0);

        // All unlabeled: at most one may go, two nodes always survive.
        let mut net = SoinnNetwork::init(&[0.0], &[1.0], TrainParams::default()).unwrap();
        assert!(net.drop_unlabeled_nodes().is_empty());
        assert_eq!(net.node_count(), 2);
    }
}
