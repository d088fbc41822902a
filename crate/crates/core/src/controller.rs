//! Stochastic finite-state controllers with sparse parameter storage.
//!
//! Transition parameters are stored in joint form
//! `w(a, z, n') = ψ(a) · P(n' | n, a, z)`, the quantity the node-improvement
//! LP optimizes over. The conditional is `w / ψ(a)` whenever `ψ(a) > 0`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::pomdp::Pomdp;

/// Parameters below this are dropped when a node is updated.
pub const DROP_TOL: f64 = 1e-12;

/// Allowed violation of the node invariants before renormalization.
pub const PARAM_TOL: f64 = 1e-6;

pub type ActionProbs = BTreeMap<usize, f64>;
/// Keyed by `(action, observation, successor node)`.
pub type JointTransitions = BTreeMap<(usize, usize, usize), f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    action_probs: ActionProbs,
    joint: JointTransitions,
}

impl Node {
    /// A node that always takes `action` and moves to `successors[z]`.
    pub fn deterministic(action: usize, successors: &[usize]) -> Node {
        Node {
            action_probs: BTreeMap::from([(action, 1.0)]),
            joint: successors
                .iter()
                .enumerate()
                .map(|(z, &n)| ((action, z, n), 1.0))
                .collect(),
        }
    }

    pub fn action_probs(&self) -> &ActionProbs {
        &self.action_probs
    }

    pub fn joint_transitions(&self) -> &JointTransitions {
        &self.joint
    }

    pub fn action_prob(&self, a: usize) -> f64 {
        self.action_probs.get(&a).copied().unwrap_or(0.0)
    }

    /// Stored `(a, z, n')` entries for one `(a, z)` pair.
    pub fn successors(&self, a: usize, z: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.joint
            .range((a, z, 0)..=(a, z, usize::MAX))
            .map(|(&(_, _, n), &p)| (n, p))
    }

    pub fn nonzero_count(&self) -> usize {
        self.action_probs.len() + self.joint.len()
    }

    /// `(action, successor per observation)` if the node is deterministic.
    pub fn deterministic_signature(&self, num_observations: usize) -> Option<(usize, Vec<usize>)> {
        if self.action_probs.len() != 1 || self.joint.len() != num_observations {
            return None;
        }
        let (&a, _) = self.action_probs.iter().next()?;
        let succ: Vec<usize> = self.joint.keys().map(|&(_, _, n)| n).collect();
        let covers = self
            .joint
            .keys()
            .enumerate()
            .all(|(i, &(ka, z, _))| ka == a && z == i);
        covers.then_some((a, succ))
    }
}

/// Non-zero parameter counts across nodes. The average is rounded up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityStats {
    pub total_params_per_node: usize,
    pub min_nonzero: usize,
    pub avg_nonzero: usize,
    pub max_nonzero: usize,
}

/// `|A| + |A||Z||N|`: one `ψ` per action plus one `w` per `(a, z, n')`.
pub fn total_params_per_node(num_actions: usize, num_observations: usize, num_nodes: usize) -> usize {
    num_actions + num_actions * num_observations * num_nodes
}

#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    num_actions: usize,
    num_observations: usize,
    nodes: Vec<Node>,
}

impl Controller {
    /// One deterministic self-looping node per action.
    pub fn initial(pomdp: &Pomdp) -> Controller {
        let (na, nz) = (pomdp.num_actions(), pomdp.num_observations());
        Controller {
            num_actions: na,
            num_observations: nz,
            nodes: (0..na).map(|a| Node::deterministic(a, &vec![a; nz])).collect(),
        }
    }

    /// Builds a controller from explicit nodes, validating every invariant.
    pub fn from_nodes(num_actions: usize, num_observations: usize, nodes: Vec<Node>) -> Result<Controller> {
        if nodes.is_empty() {
            return Err(Error::InvalidParams("controller needs at least one node".into()));
        }
        let len = nodes.len();
        let mut c = Controller {
            num_actions,
            num_observations,
            nodes: vec![Node::deterministic(0, &vec![0; num_observations]); len],
        };
        for (i, node) in nodes.into_iter().enumerate() {
            c.replace_node_params(i, node.action_probs, node.joint)?;
        }
        Ok(c)
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, n: usize) -> &Node {
        &self.nodes[n]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Appends a deterministic node. `successors` may name the new node's own
    /// index (the current length). Duplicates are not detected here.
    pub fn add_deterministic_node(&mut self, action: usize, successors: &[usize]) -> Result<usize> {
        check_index("action", action, self.num_actions)?;
        if successors.len() != self.num_observations {
            return Err(Error::InvalidParams(format!(
                "expected {} successors, got {}",
                self.num_observations,
                successors.len()
            )));
        }
        let new_index = self.nodes.len();
        for &n in successors {
            check_index("successor node", n, new_index + 1)?;
        }
        self.nodes.push(Node::deterministic(action, successors));
        Ok(new_index)
    }

    /// Replaces node `n`'s parameters. Entries below [`DROP_TOL`] are dropped
    /// and the remaining mass renormalized; violations larger than
    /// [`PARAM_TOL`] are rejected.
    pub fn replace_node_params(
        &mut self,
        n: usize,
        action_probs: ActionProbs,
        joint: JointTransitions,
    ) -> Result<()> {
        check_index("node", n, self.nodes.len())?;
        let node = normalize_node(
            self.num_actions,
            self.num_observations,
            self.nodes.len(),
            action_probs,
            joint,
        )?;
        self.nodes[n] = node;
        Ok(())
    }

    pub fn sparsity_stats(&self) -> SparsityStats {
        let counts: Vec<usize> = self.nodes.iter().map(Node::nonzero_count).collect();
        let sum: usize = counts.iter().sum();
        SparsityStats {
            total_params_per_node: total_params_per_node(
                self.num_actions,
                self.num_observations,
                self.nodes.len(),
            ),
            min_nonzero: counts.iter().copied().min().unwrap_or(0),
            avg_nonzero: sum.div_ceil(counts.len().max(1)),
            max_nonzero: counts.iter().copied().max().unwrap_or(0),
        }
    }

    pub fn to_policy_json(&self) -> String {
        let doc = PolicyDocument {
            version: POLICY_VERSION,
            nodes: self
                .nodes
                .iter()
                .map(|node| PolicyNode {
                    action_probs: node
                        .action_probs
                        .iter()
                        .map(|(a, p)| (a.to_string(), *p))
                        .collect(),
                    transitions: {
                        let mut t: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
                        for (&(a, z, n), &p) in &node.joint {
                            t.entry(format!("{a},{z}")).or_default().insert(n.to_string(), p);
                        }
                        t
                    },
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("policy serializes")
    }

    /// Reads a policy document for a model with the given dimensions.
    pub fn from_policy_json(text: &str, num_actions: usize, num_observations: usize) -> Result<Controller> {
        let doc: PolicyDocument =
            serde_json::from_str(text).map_err(|e| Error::PolicyFormat(e.to_string()))?;
        if doc.version != POLICY_VERSION {
            return Err(Error::PolicyFormat(format!(
                "unsupported version {} (expected {POLICY_VERSION})",
                doc.version
            )));
        }
        let parse = |s: &str| -> Result<usize> {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::PolicyFormat(format!("bad index '{s}'")))
        };
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for pn in doc.nodes {
            let mut action_probs = BTreeMap::new();
            for (a, p) in &pn.action_probs {
                action_probs.insert(parse(a)?, *p);
            }
            let mut joint = BTreeMap::new();
            for (key, succ) in &pn.transitions {
                let (a, z) = key
                    .split_once(',')
                    .ok_or_else(|| Error::PolicyFormat(format!("bad transition key '{key}'")))?;
                let (a, z) = (parse(a)?, parse(z)?);
                for (n, p) in succ {
                    joint.insert((a, z, parse(n)?), *p);
                }
            }
            nodes.push(Node {
                action_probs,
                joint,
            });
        }
        Controller::from_nodes(num_actions, num_observations, nodes)
    }
}

const POLICY_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct PolicyDocument {
    version: u32,
    nodes: Vec<PolicyNode>,
}

#[derive(Serialize, Deserialize)]
struct PolicyNode {
    action_probs: BTreeMap<String, f64>,
    transitions: BTreeMap<String, BTreeMap<String, f64>>,
}

fn normalize_node(
    num_actions: usize,
    num_observations: usize,
    num_nodes: usize,
    action_probs: ActionProbs,
    joint: JointTransitions,
) -> Result<Node> {
    let bad = |msg: String| Err(Error::InvalidParams(msg));
    for (&a, &p) in &action_probs {
        check_index("action", a, num_actions)?;
        if !p.is_finite() {
            return bad(format!("non-finite probability for action {a}"));
        }
    }
    for (&(a, z, n), &p) in &joint {
        check_index("action", a, num_actions)?;
        check_index("observation", z, num_observations)?;
        check_index("successor node", n, num_nodes)?;
        if !p.is_finite() {
            return bad(format!("non-finite transition ({a},{z},{n})"));
        }
    }
    if let Some((a, p)) = action_probs.iter().find(|(_, p)| **p < -PARAM_TOL) {
        return bad(format!("negative probability {p} for action {a}"));
    }
    if let Some((k, p)) = joint.iter().find(|(_, p)| **p < -PARAM_TOL) {
        return bad(format!("negative transition {p} at {k:?}"));
    }
    let psi_sum: f64 = action_probs.values().filter(|p| **p > 0.0).sum();
    if (psi_sum - 1.0).abs() > PARAM_TOL {
        return bad(format!("action probabilities sum to {psi_sum}"));
    }
    for a in 0..num_actions {
        let psi = action_probs.get(&a).copied().unwrap_or(0.0).max(0.0);
        for z in 0..num_observations {
            let s: f64 = joint
                .range((a, z, 0)..=(a, z, usize::MAX))
                .map(|(_, p)| p.max(0.0))
                .sum();
            if (s - psi).abs() > PARAM_TOL {
                return bad(format!(
                    "transitions for (a={a}, z={z}) sum to {s}, action probability is {psi}"
                ));
            }
        }
    }

    // Drop residue, then drop actions left without an outlet for some z.
    let mut psi: ActionProbs = action_probs.into_iter().filter(|&(_, p)| p >= DROP_TOL).collect();
    let mut w: JointTransitions = joint
        .into_iter()
        .filter(|&((a, _, _), p)| p >= DROP_TOL && psi.contains_key(&a))
        .collect();
    psi.retain(|&a, _| {
        (0..num_observations).all(|z| w.range((a, z, 0)..=(a, z, usize::MAX)).next().is_some())
    });
    w.retain(|&(a, _, _), _| psi.contains_key(&a));
    let total: f64 = psi.values().sum();
    if psi.is_empty() || (total - 1.0).abs() > PARAM_TOL {
        return bad("action probabilities vanish after dropping residue".into());
    }
    for p in psi.values_mut() {
        *p /= total;
    }
    for (&a, &pa) in &psi {
        for z in 0..num_observations {
            let range = (a, z, 0)..=(a, z, usize::MAX);
            let s: f64 = w.range(range.clone()).map(|(_, p)| *p).sum();
            for (_, p) in w.range_mut(range) {
                *p *= pa / s;
            }
        }
    }
    Ok(Node {
        action_probs: psi,
        joint: w,
    })
}
