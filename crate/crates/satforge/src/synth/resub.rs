//! Resubstitution: re-express a node through existing divisors inside a
//! reconvergence window, validated by exhaustive window truth tables.
//!
//! Zero-resubstitution replaces a node by an equal (or complemented)
//! divisor; one-resubstitution builds a single new AND/OR over two
//! divisors. Candidates are only accepted when they shrink the graph.

use std::collections::{HashMap, HashSet};

use crate::aig::{Aig, Edge};
use crate::synth::work::WorkAig;
use crate::truth::TruthTable;

const MAX_LEAVES: usize = 12;
const MAX_WINDOW: usize = 120;
const MAX_DIVISORS: usize = 24;

/// Leaf set of the window: grown downward from the root's fanins, always
/// expanding the leaf that keeps the frontier smallest, until nothing fits
/// within `MAX_LEAVES` anymore.
fn window_leaves(w: &WorkAig, root: u32) -> Vec<u32> {
    let (a, b) = w.fanins(root).unwrap();
    let mut leaves: Vec<u32> = vec![a.node()];
    if b.node() != a.node() {
        leaves.push(b.node());
    }
    loop {
        let mut best: Option<(usize, u32)> = None;
        for &l in &leaves {
            if !w.is_and(l) {
                continue;
            }
            let (la, lb) = w.fanins(l).unwrap();
            let mut new_size = leaves.len() - 1;
            for f in [la.node(), lb.node()] {
                if !leaves.contains(&f) {
                    new_size += 1;
                }
            }
            if new_size <= MAX_LEAVES && best.is_none_or(|(s, id)| (new_size, l) < (s, id)) {
                best = Some((new_size, l));
            }
        }
        let Some((_, l)) = best else { break };
        leaves.retain(|&x| x != l);
        let (la, lb) = w.fanins(l).unwrap();
        for f in [la.node(), lb.node()] {
            if !leaves.contains(&f) {
                leaves.push(f);
            }
        }
    }
    leaves.sort_unstable();
    leaves
}

/// Window membership: the cone between root and leaves, plus the closure of
/// side nodes fully supported by the window. Nodes reading the root itself
/// are excluded so no divisor can depend on it.
fn window_nodes(w: &WorkAig, root: u32, leaves: &[u32]) -> Vec<u32> {
    let mut in_w: HashSet<u32> = leaves.iter().copied().collect();
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if !in_w.insert(n) {
            continue;
        }
        let (a, b) = w.fanins(n).unwrap();
        stack.push(a.node());
        stack.push(b.node());
    }
    loop {
        let mut grew = false;
        let members: Vec<u32> = in_w.iter().copied().collect();
        for n in members {
            if in_w.len() >= MAX_WINDOW {
                break;
            }
            for &fo in w.fanouts(n) {
                if in_w.contains(&fo) || !w.is_and(fo) {
                    continue;
                }
                let (a, b) = w.fanins(fo).unwrap();
                let supported = in_w.contains(&a.node())
                    && in_w.contains(&b.node())
                    && a.node() != root
                    && b.node() != root;
                if supported && in_w.len() < MAX_WINDOW {
                    in_w.insert(fo);
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let mut nodes: Vec<u32> = in_w.into_iter().collect();
    nodes.sort_unstable();
    nodes
}

/// Exhaustive truth tables of every window node over the leaf variables.
fn window_tables(
    w: &WorkAig,
    nodes: &[u32],
    leaves: &[u32],
) -> HashMap<u32, TruthTable> {
    let n = leaves.len();
    let mut memo: HashMap<u32, TruthTable> = HashMap::new();
    memo.insert(0, TruthTable::constant(n, false));
    for (i, &l) in leaves.iter().enumerate() {
        memo.insert(l, TruthTable::projection(n, i));
    }
    for &start in nodes {
        let mut stack = vec![start];
        while let Some(&id) = stack.last() {
            if memo.contains_key(&id) {
                stack.pop();
                continue;
            }
            let (a, b) = w.fanins(id).expect("window node escapes its leaves");
            let (ta, tb) = (memo.get(&a.node()), memo.get(&b.node()));
            match (ta, tb) {
                (Some(ta), Some(tb)) => {
                    let t = ta.and_with_compl(a.is_compl(), tb, b.is_compl());
                    memo.insert(id, t);
                    stack.pop();
                }
                (ta, tb) => {
                    if ta.is_none() {
                        stack.push(a.node());
                    }
                    if tb.is_none() {
                        stack.push(b.node());
                    }
                }
            }
        }
    }
    memo
}

/// One resubstitution sweep in topological order. Functions are preserved
/// (window tables are exhaustive proofs) and node count never increases.
pub fn resub(g: &Aig) -> Aig {
    let mut w = WorkAig::from_aig(g);
    let order = w.topo_live();

    for root in order {
        if !w.is_live(root) || !w.is_and(root) {
            continue;
        }
        let leaves = window_leaves(&w, root);
        let nodes = window_nodes(&w, root, &leaves);
        let tables = window_tables(&w, &nodes, &leaves);
        let target = &tables[&root];

        let mffc: HashSet<u32> = w.mffc(root).into_iter().collect();
        let divisors: Vec<u32> = nodes
            .iter()
            .copied()
            .filter(|&d| d != root)
            .take(MAX_DIVISORS)
            .collect();

        // equal or complemented divisor: always a net win
        let mut done = false;
        for &d in &divisors {
            let t = &tables[&d];
            if t == target {
                w.replace(root, Edge::new(d, false));
                done = true;
            } else if t.not() == *target {
                w.replace(root, Edge::new(d, true));
                done = true;
            }
            if done {
                break;
            }
        }
        if done {
            w.drain_dirty();
            continue;
        }

        // one new AND over two divisors outside the dying cone pays off
        // only when at least two nodes are freed
        if mffc.len() < 2 {
            continue;
        }
        'outer: for (i, &d1) in divisors.iter().enumerate() {
            if mffc.contains(&d1) {
                continue;
            }
            for &d2 in &divisors[i + 1..] {
                if mffc.contains(&d2) {
                    continue;
                }
                for pols in 0..4u8 {
                    let (p1, p2) = (pols & 1 != 0, pols & 2 != 0);
                    let cand = tables[&d1].and_with_compl(p1, &tables[&d2], p2);
                    let flip = if cand == *target {
                        false
                    } else if cand.not() == *target {
                        true
                    } else {
                        continue;
                    };
                    let e = w.add_and(Edge::new(d1, p1), Edge::new(d2, p2));
                    if e.node() == root {
                        continue; // the candidate is the root itself
                    }
                    w.replace(root, e.with_compl(e.is_compl() ^ flip));
                    w.drain_dirty();
                    break 'outer;
                }
            }
        }
    }

    let result = w.to_aig();
    // every acceptance strictly shrinks; keep the contract regardless
    if result.num_ands() > g.num_ands() {
        return g.clone();
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::aiger::emit_aiger;
    use crate::testutil::{assert_equiv, random_aig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn absorbed_disjunct_collapses() {
        // x & (x | y) == x
        let mut g = Aig::new(2);
        let (x, y) = (g.pi_edge(0), g.pi_edge(1));
        let or = g.add_or(x, y);
        let top = g.add_and(x, or);
        g.add_po(top);
        let r = resub(&g);
        assert_eq!(r.num_ands(), 0);
        assert_equiv(&g, &r);
    }

    #[test]
    fn equivalent_implementations_merge() {
        // two structurally different xor implementations share one window
        let mut g = Aig::new(2);
        let (a, b) = (g.pi_edge(0), g.pi_edge(1));
        let x1 = g.add_xor(a, b);
        let d1 = g.add_or(a, b);
        let d2 = g.add_and(a, b);
        let x2 = g.add_and(d1, d2.compl());
        g.add_po(x1);
        g.add_po(x2);
        assert_eq!(g.num_ands(), 6);
        let r = resub(&g);
        assert!(r.num_ands() <= 3, "duplicate xor should merge");
        assert_equiv(&g, &r);
    }

    #[test]
    fn shared_product_enables_single_and() {
        // (a&b)&(a&c) == (a&b)&c when a&b is shared elsewhere
        let mut g = Aig::new(3);
        let (a, b, c) = (g.pi_edge(0), g.pi_edge(1), g.pi_edge(2));
        let ab = g.add_and(a, b);
        let ac = g.add_and(a, c);
        let top = g.add_and(ab, ac);
        g.add_po(top);
        g.add_po(ab);
        let r = resub(&g);
        assert_eq!(r.num_ands(), 2);
        assert_equiv(&g, &r);
    }

    #[test]
    fn random_graphs_never_grow_and_stay_equivalent() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..120 {
            let num_pis = rng.gen_range(2..=8);
            let num_ands = rng.gen_range(1..=70);
            let num_pos = rng.gen_range(1..=4);
            let g = random_aig(&mut rng, num_pis, num_ands, num_pos);
            let r = resub(&g);
            assert!(r.num_ands() <= g.num_ands(), "node count grew");
            assert_equiv(&g, &r);
        }
    }

    #[test]
    fn result_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let g = random_aig(&mut rng, 6, 50, 3);
        let r1 = resub(&g);
        let r2 = resub(&g);
        assert_eq!(emit_aiger(&r1), emit_aiger(&r2));
    }
}
