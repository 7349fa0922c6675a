//! Depth reduction by restructuring maximal AND trees.
//!
//! Every maximal conjunction tree (grown through non-inverted, single-fanout
//! AND edges) is collected into its leaf set and rebuilt shallowest-first,
//! so the deepest leaf dominates the new tree depth as little as possible.
//! Node functions and the output interface are preserved exactly.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::aig::{Aig, Edge};

/// Fanout count per node: fanin references plus output references.
fn fanout_counts(g: &Aig) -> Vec<u32> {
    let mut refs = vec![0u32; g.num_nodes()];
    for (_, a, b) in g.iter_ands() {
        refs[a.node() as usize] += 1;
        refs[b.node() as usize] += 1;
    }
    for po in g.pos() {
        refs[po.node() as usize] += 1;
    }
    refs
}

/// Leaf edges of the maximal AND tree rooted at `root`: expansion follows
/// plain edges into single-fanout AND children only.
fn collect_leaves(g: &Aig, refs: &[u32], root: u32) -> Vec<Edge> {
    let mut leaves = Vec::new();
    let (a, b) = g.fanins(root).unwrap();
    let mut stack = vec![a, b];
    while let Some(e) = stack.pop() {
        if !e.is_compl() && g.is_and(e.node()) && refs[e.node() as usize] == 1 {
            let (a, b) = g.fanins(e.node()).unwrap();
            stack.push(a);
            stack.push(b);
        } else {
            leaves.push(e);
        }
    }
    leaves
}

/// Rebuild the graph with every maximal AND tree rebalanced. Depth never
/// increases; functions are unchanged.
pub fn balance(g: &Aig) -> Aig {
    let refs = fanout_counts(g);
    // a node needs its own rebuilt edge if anything stops expansion at it
    let mut is_root = vec![false; g.num_nodes()];
    for (_, a, b) in g.iter_ands() {
        for e in [a, b] {
            if g.is_and(e.node()) && (e.is_compl() || refs[e.node() as usize] != 1) {
                is_root[e.node() as usize] = true;
            }
        }
    }
    for po in g.pos() {
        is_root[po.node() as usize] = true;
    }

    let mut out = Aig::new(g.num_pis());
    let mut lvl: Vec<u32> = vec![0; out.num_nodes()];
    let mut memo: Vec<Option<Edge>> = vec![None; g.num_nodes()];
    memo[0] = Some(Edge::FALSE);
    for i in 0..g.num_pis() {
        memo[i + 1] = Some(out.pi_edge(i));
    }

    for id in 0..g.num_nodes() as u32 {
        if !g.is_and(id) || !is_root[id as usize] {
            continue;
        }
        let mut mapped: Vec<Edge> = collect_leaves(g, &refs, id)
            .into_iter()
            .map(|e| {
                let m = memo[e.node() as usize].expect("leaves precede their tree");
                m.with_compl(m.is_compl() ^ e.is_compl())
            })
            .collect();
        mapped.sort_unstable_by_key(|e| e.raw());
        mapped.dedup();
        let falsified = mapped.contains(&Edge::FALSE)
            || mapped.windows(2).any(|w| w[0] == w[1].compl());
        if falsified {
            memo[id as usize] = Some(Edge::FALSE);
            continue;
        }
        mapped.retain(|&e| e != Edge::TRUE);
        if mapped.is_empty() {
            memo[id as usize] = Some(Edge::TRUE);
            continue;
        }
        // combine the two shallowest operands first
        let mut heap: BinaryHeap<Reverse<(u32, u32)>> = mapped
            .into_iter()
            .map(|e| Reverse((lvl[e.node() as usize], e.raw())))
            .collect();
        while heap.len() > 1 {
            let Reverse((la, a)) = heap.pop().unwrap();
            let Reverse((lb, b)) = heap.pop().unwrap();
            let e = out.add_and(Edge::from_raw(a), Edge::from_raw(b));
            if out.num_nodes() > lvl.len() {
                lvl.push(la.max(lb) + 1);
            }
            heap.push(Reverse((lvl[e.node() as usize], e.raw())));
        }
        let Reverse((_, top)) = heap.pop().unwrap();
        memo[id as usize] = Some(Edge::from_raw(top));
    }

    for po in g.pos() {
        let m = memo[po.node() as usize].expect("outputs are roots");
        out.add_po(m.with_compl(m.is_compl() ^ po.is_compl()));
    }
    let out = out.compact();
    // restructuring only lowers trees, but stay safe against regressions
    if out.depth() > g.depth() {
        return g.clone();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_equiv, random_aig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chain_of_eight_becomes_logarithmic() {
        let mut g = Aig::new(8);
        let mut acc = g.pi_edge(0);
        for i in 1..8 {
            let pi = g.pi_edge(i);
            acc = g.add_and(acc, pi);
        }
        g.add_po(acc);
        assert_eq!(g.depth(), 7);
        let b = balance(&g);
        assert_eq!(b.depth(), 3);
        assert_equiv(&g, &b);
    }

    #[test]
    fn inverted_edges_stop_expansion() {
        // xor keeps its three nodes: inner conjunctions are read inverted
        let mut g = Aig::new(2);
        let x = g.add_xor(g.pi_edge(0), g.pi_edge(1));
        g.add_po(x);
        let b = balance(&g);
        assert_eq!(b.num_ands(), 3);
        assert_equiv(&g, &b);
    }

    #[test]
    fn duplicate_leaves_collapse() {
        // (a & b) & a == a & b
        let mut g = Aig::new(2);
        let a = g.pi_edge(0);
        let ab = g.add_and(a, g.pi_edge(1));
        let top = g.add_and(ab, a);
        g.add_po(top);
        let b = balance(&g);
        assert_eq!(b.num_ands(), 1);
        assert_equiv(&g, &b);
    }

    #[test]
    fn complementary_leaves_collapse_to_false() {
        // (a & b) & !a == 0
        let mut g = Aig::new(2);
        let a = g.pi_edge(0);
        let ab = g.add_and(a, g.pi_edge(1));
        let top = g.add_and(ab, a.compl());
        g.add_po(top);
        let b = balance(&g);
        assert_eq!(b.num_ands(), 0);
        assert_eq!(b.pos()[0], Edge::FALSE);
    }

    #[test]
    fn random_graphs_keep_functions_and_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..150 {
            let num_pis = rng.gen_range(1..=8);
            let num_ands = rng.gen_range(0..=60);
            let num_pos = rng.gen_range(1..=4);
            let g = random_aig(&mut rng, num_pis, num_ands, num_pos);
            let b = balance(&g);
            assert_equiv(&g, &b);
            assert!(b.depth() <= g.depth(), "depth grew");
            assert!(b.num_ands() <= g.num_ands(), "node count grew");
        }
    }

    #[test]
    fn unbalanced_wide_tree_reaches_optimal_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        // random-shaped conjunction over 13 distinct inputs
        let mut g = Aig::new(13);
        let mut frontier: Vec<Edge> = (0..13).map(|i| g.pi_edge(i)).collect();
        while frontier.len() > 1 {
            let i = rng.gen_range(0..frontier.len());
            let a = frontier.swap_remove(i);
            let j = rng.gen_range(0..frontier.len());
            let b = frontier.swap_remove(j);
            frontier.push(g.add_and(a, b));
        }
        g.add_po(frontier[0]);
        let b = balance(&g);
        assert_eq!(b.depth(), 4, "ceil(log2(13))");
        assert_equiv(&g, &b);
    }
}
