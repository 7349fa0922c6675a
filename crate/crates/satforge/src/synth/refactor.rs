//! Cone refactoring: re-express a node's exclusive cone as a factored
//! two-level cover and keep the result only when it is strictly smaller.

use std::collections::HashSet;

use crate::aig::{Aig, Edge};
use crate::synth::factor::build_sop;
use crate::synth::work::WorkAig;
use crate::truth::isop;

const MAX_LEAVES: usize = 10;

/// Boundary of the cone: every non-cone, non-constant node feeding a cone
/// member, sorted by id.
fn cone_leaves(w: &WorkAig, cone: &[u32]) -> Vec<u32> {
    let in_cone: HashSet<u32> = cone.iter().copied().collect();
    let mut leaves: Vec<u32> = Vec::new();
    for &n in cone {
        let (a, b) = w.fanins(n).unwrap();
        for f in [a.node(), b.node()] {
            if f != 0 && !in_cone.contains(&f) && !leaves.contains(&f) {
                leaves.push(f);
            }
        }
    }
    leaves.sort_unstable();
    leaves
}

/// One refactoring sweep in topological order. Each node's maximum
/// fanout-free cone (when it has at least two nodes and at most ten leaves)
/// is rebuilt from a factored irredundant cover; strictly smaller results
/// are committed. Node count never increases and functions are preserved.
pub fn refactor(g: &Aig) -> Aig {
    let mut w = WorkAig::from_aig(g);
    let order = w.topo_live();

    for root in order {
        if !w.is_live(root) || !w.is_and(root) {
            continue;
        }
        let mffc = w.mffc(root);
        if mffc.len() < 2 {
            continue;
        }
        let leaves = cone_leaves(&w, &mffc);
        if leaves.len() > MAX_LEAVES {
            continue;
        }
        let t = w.cone_truth(Edge::new(root, false), &leaves);
        let cubes = isop(&t);
        let inputs: Vec<Edge> = leaves.iter().map(|&l| Edge::new(l, false)).collect();

        let pre = w.num_slots() as u32;
        let out = build_sop(&mut w, &cubes, &inputs);
        let post = w.num_slots() as u32;
        let created = (post - pre) as usize;

        // nodes of the old cone that the rebuilt structure still reaches
        // stay alive after the replacement, so they reduce the savings
        let mffc_set: HashSet<u32> = mffc.iter().copied().collect();
        let mut kept = 0usize;
        let mut seen: HashSet<u32> = HashSet::new();
        let mut stack = vec![out.node()];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            let in_old = mffc_set.contains(&n);
            if in_old {
                kept += 1;
            }
            if (in_old || (pre..post).contains(&n)) && w.is_and(n) {
                let (a, b) = w.fanins(n).unwrap();
                stack.push(a.node());
                stack.push(b.node());
            }
        }

        let improves = out.node() != root && created + kept < mffc.len();
        if improves {
            w.replace(root, out);
            w.drain_dirty();
        } else {
            for n in (pre..post).rev() {
                w.sweep_if_dead(n);
            }
        }
    }

    let result = w.to_aig();
    // acceptance is strictly decreasing per step; guard the contract anyway
    if result.num_ands() > g.num_ands() {
        return g.clone();
    }
    result
}
