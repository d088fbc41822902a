//! Escaping local optima by adding deterministic nodes at improvable
//! beliefs one step past the tangent beliefs.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::controller::Controller;
use crate::error::Result;
use crate::lookahead::{BackupResult, Lookahead};
use crate::pomdp::{BeliefState, ZERO_PROB};

/// A reachable belief counts as improvable when its backup beats the
/// controller's value by more than this, relative to `1 + |backup|` (or by a
/// larger caller-given margin). Matches the sparse loop's stopping rule, so
/// gaps it already treats as closed do not trigger node growth.
pub const ESCAPE_GAP_TOL: f64 = 1e-8;

/// A reachable belief whose backup improves on the controller.
#[derive(Debug, Clone)]
pub struct EscapeCandidate {
    pub belief: BeliefState,
    pub backup: BackupResult,
    pub gap: f64,
}

/// Every belief reachable in one step from `tangents` whose gap exceeds
/// `max(min_gap, ESCAPE_GAP_TOL · (1 + |backup|))`, sorted by gap, largest first (ties keep
/// generation order).
pub fn escape_candidates(la: &Lookahead<'_>, tangents: &[BeliefState], min_gap: f64) -> Vec<EscapeCandidate> {
    let p = la.pomdp();
    let (na, nz) = (p.num_actions(), p.num_observations());
    let mut candidates: Vec<EscapeCandidate> = tangents
        .par_iter()
        .flat_map_iter(|b| {
            let mut found = Vec::new();
            for a in 0..na {
                for z in 0..nz {
                    if la.obs_prob(b, a, z) <= ZERO_PROB {
                        continue;
                    }
                    let Ok(next) = p.belief_update(b, a, z) else {
                        continue;
                    };
                    let backup = la.backup(&next);
                    let gap = backup.value - la.values().belief_value(&next).0;
                    if gap > min_gap.max(ESCAPE_GAP_TOL * (1.0 + backup.value.abs())) {
                        found.push(EscapeCandidate {
                            belief: next,
                            backup,
                            gap,
                        });
                    }
                }
            }
            found
        })
        .collect();
    candidates.sort_by(|x, y| y.gap.total_cmp(&x.gap));
    candidates
}

/// Adds up to `k` deterministic nodes from the best escape candidates,
/// skipping any whose `(action, successors)` duplicates an existing node.
/// Impossible observations loop back to the new node. Returns how many
/// nodes were added; zero means no reachable belief is improvable.
pub fn add_nodes(
    c: &mut Controller,
    la: &Lookahead<'_>,
    tangents: &[BeliefState],
    k: usize,
    min_gap: f64,
) -> Result<usize> {
    let nz = c.num_observations();
    let mut seen: HashSet<(usize, Vec<usize>)> = c
        .nodes()
        .iter()
        .filter_map(|node| node.deterministic_signature(nz))
        .collect();
    let mut added = 0;
    for cand in escape_candidates(la, tangents, min_gap) {
        if added >= k {
            break;
        }
        let action = cand.backup.best_action;
        let successors = cand.backup.completed_successors(c.len());
        if !seen.insert((action, successors.clone())) {
            continue;
        }
        c.add_deterministic_node(action, &successors)?;
        added += 1;
    }
    Ok(added)
}
