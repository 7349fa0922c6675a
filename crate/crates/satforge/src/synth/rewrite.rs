//! Cut rewriting: replace a node's 4-input cone with the precomputed
//! minimal structure for its function's NPN class whenever that frees more
//! nodes than it adds.
//!
//! Gain is measured exactly before committing: a simulated dereference of
//! the node's exclusive cone is combined with a walk of the candidate
//! structure against the live structural hash, so sharing with untouched
//! logic and resurrection of cone nodes are both accounted for.

use std::collections::HashMap;

use crate::aig::{Aig, Edge};
use crate::synth::cuts::CutCache;
use crate::synth::npn::Transform;
use crate::synth::npn_db::{DbStructure, RewriteDb};
use crate::synth::work::WorkAig;

/// Truth table of `id` over its (at most four) cut leaves, tiled up to
/// exactly four variables so vacuous positions repeat the pattern.
fn cone_table4(w: &WorkAig, id: u32, leaves: &[u32]) -> u16 {
    let t = w.cone_truth(Edge::new(id, false), leaves);
    let raw = t.as_u64();
    let mask = (1usize << t.num_vars()) - 1;
    let mut out = 0u16;
    for i in 0..16 {
        if raw >> (i & mask) & 1 != 0 {
            out |= 1 << i;
        }
    }
    out
}

/// Reference-count view used during trial evaluation: overrides on top of
/// the live counts, so nothing is mutated.
struct SimRefs<'a> {
    w: &'a WorkAig,
    over: HashMap<u32, i64>,
}

impl SimRefs<'_> {
    fn get(&self, id: u32) -> i64 {
        self.over
            .get(&id)
            .copied()
            .unwrap_or_else(|| self.w.nrefs(id) as i64)
    }

    fn set(&mut self, id: u32, v: i64) {
        self.over.insert(id, v);
    }
}

/// Mark `start` as referenced by the candidate structure, resurrecting it
/// (and transitively its fanins) when the dereference pass had freed it.
fn use_node(refs: &mut SimRefs, leaves: &[u32], freed: &mut i64, start: u32, num_slots: u32) {
    if start >= num_slots {
        return; // node the candidate itself would create
    }
    let mut stack = vec![start];
    while let Some(n) = stack.pop() {
        if !refs.w.is_and(n) || leaves.contains(&n) {
            continue;
        }
        let r = refs.get(n);
        refs.set(n, r + 1);
        if r == 0 {
            *freed -= 1;
            let (a, b) = refs.w.fanins(n).unwrap();
            stack.push(a.node());
            stack.push(b.node());
        }
    }
}

/// Resolve a structure operand code against real leaves under `tr`.
/// Formal input j reads leaf `tr.perm[j]`, complemented per `tr.flips`.
fn code_edge(code: u8, resolved: &[Edge], leaves: &[u32], tr: &Transform) -> Edge {
    let r = (code >> 1) as usize;
    let base = match r {
        0 => Edge::FALSE,
        1..=4 => {
            let j = r - 1;
            Edge::new(leaves[tr.perm[j] as usize], tr.flips >> j & 1 != 0)
        }
        _ => resolved[r - 5],
    };
    if code & 1 != 0 {
        base.compl()
    } else {
        base
    }
}

/// Nodes freed minus nodes added if `id`'s cone over `leaves` were replaced
/// by `s` (wired per `tr`). None when the structure would reuse the root.
fn trial_gain(
    w: &WorkAig,
    id: u32,
    leaves: &[u32],
    s: &DbStructure,
    tr: &Transform,
) -> Option<i64> {
    let num_slots = w.num_slots() as u32;
    let mut refs = SimRefs {
        w,
        over: HashMap::new(),
    };
    // dereference the exclusive cone of id
    let mut freed: i64 = 1;
    let mut stack = vec![id];
    while let Some(n) = stack.pop() {
        let (a, b) = w.fanins(n).unwrap();
        for f in [a.node(), b.node()] {
            if !w.is_and(f) || leaves.contains(&f) {
                continue;
            }
            let r = refs.get(f) - 1;
            refs.set(f, r);
            if r == 0 {
                freed += 1;
                stack.push(f);
            }
        }
    }
    // walk the candidate structure against the structural hash
    let mut added: i64 = 0;
    let mut virtuals: u32 = 0;
    let mut resolved: Vec<Edge> = Vec::with_capacity(s.nodes.len());
    for &(ca, cb) in &s.nodes {
        let ea = code_edge(ca, &resolved, leaves, tr);
        let eb = code_edge(cb, &resolved, leaves, tr);
        let (ea, eb) = if ea.raw() <= eb.raw() { (ea, eb) } else { (eb, ea) };
        let e = if ea == Edge::FALSE || ea == eb.compl() {
            Edge::FALSE
        } else if ea == Edge::TRUE {
            eb
        } else if ea == eb {
            ea
        } else {
            let hit = if ea.node() < num_slots && eb.node() < num_slots {
                w.find_and(ea, eb)
            } else {
                None
            };
            match hit {
                Some(h) if h == id => return None, // structure rebuilds the root
                Some(h) => {
                    use_node(&mut refs, leaves, &mut freed, h, num_slots);
                    Edge::new(h, false)
                }
                None => {
                    added += 1;
                    use_node(&mut refs, leaves, &mut freed, ea.node(), num_slots);
                    use_node(&mut refs, leaves, &mut freed, eb.node(), num_slots);
                    virtuals += 1;
                    Edge::new(num_slots + virtuals - 1, false)
                }
            }
        };
        resolved.push(e);
    }
    Some(freed - added)
}

/// One rewriting sweep. Every AND node is visited once in topological
/// order; the best strictly improving candidate over its enumerated cuts is
/// committed. With `zero_gain`, size-neutral replacements are applied too.
/// The result never has more nodes than the input.
pub fn rewrite(g: &Aig, zero_gain: bool) -> Aig {
    let db = RewriteDb::get();
    let mut w = WorkAig::from_aig(g);
    let mut cache = CutCache::new(4, 8);
    let order = w.topo_live();

    for id in order {
        if !w.is_live(id) || !w.is_and(id) {
            continue;
        }
        let cuts = cache.cuts(&w, id).to_vec();
        let mut best: Option<(i64, Vec<u32>, &DbStructure, Transform)> = None;
        for cut in &cuts {
            if cut.leaves.len() < 2 || cut.leaves.len() > 4 {
                continue;
            }
            debug_assert!(cut.leaves.iter().all(|&l| w.is_live(l)));
            let t = cone_table4(&w, id, &cut.leaves);
            let (rep, tr) = db.canon(t);
            let s = db.structure(rep);
            let Some(gain) = trial_gain(&w, id, &cut.leaves, s, &tr) else {
                continue;
            };
            if best.as_ref().is_none_or(|(bg, ..)| gain > *bg) {
                best = Some((gain, cut.leaves.clone(), s, tr));
            }
        }
        let Some((gain, leaves, s, tr)) = best else {
            continue;
        };
        if gain < 0 || (gain == 0 && !zero_gain) {
            continue;
        }

        // materialize the winning structure
        let pre = w.num_slots() as u32;
        let mut resolved: Vec<Edge> = Vec::with_capacity(s.nodes.len());
        let mut root_hit = false;
        for &(ca, cb) in &s.nodes {
            let ea = code_edge(ca, &resolved, &leaves, &tr);
            let eb = code_edge(cb, &resolved, &leaves, &tr);
            let e = w.add_and(ea, eb);
            if e.node() == id {
                root_hit = true;
                break;
            }
            resolved.push(e);
        }
        let out = if root_hit {
            None
        } else {
            let out = code_edge(s.out, &resolved, &leaves, &tr);
            let out = if tr.out_flip { out.compl() } else { out };
            (out.node() != id).then_some(out)
        };
        match out {
            Some(out) => {
                w.replace(id, out);
                let dirty = w.drain_dirty();
                cache.invalidate(&w, &dirty);
            }
            None => {
                // release whatever the aborted build created
                for n in (pre..w.num_slots() as u32).rev() {
                    w.sweep_if_dead(n);
                }
            }
        }
    }

    let result = w.to_aig();
    // the gain ledger forbids growth; fall back to the input if it ever lies
    if result.num_ands() > g.num_ands() {
        return g.clone();
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_equiv, random_aig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn redundant_mux_collapses_to_buffer() {
        // mux(a; b, b) == b
        let mut g = Aig::new(2);
        let (a, b) = (g.pi_edge(0), g.pi_edge(1));
        let m = g.add_mux(a, b, b);
        g.add_po(m);
        assert!(g.num_ands() > 0);
        let r = rewrite(&g, false);
        assert_eq!(r.num_ands(), 0);
        assert_equiv(&g, &r);
    }

    #[test]
    fn repeated_literal_chain_shrinks() {
        // ((a & b) & c) & a has a redundant literal
        let mut g = Aig::new(3);
        let ab = g.add_and(g.pi_edge(0), g.pi_edge(1));
        let abc = g.add_and(ab, g.pi_edge(2));
        let top = g.add_and(abc, g.pi_edge(0));
        g.add_po(top);
        assert_eq!(g.num_ands(), 3);
        let r = rewrite(&g, false);
        assert_eq!(r.num_ands(), 2);
        assert_equiv(&g, &r);
    }

    #[test]
    fn constant_cone_is_removed() {
        // (a & b) & (a & !b) == 0, but spread across nodes
        let mut g = Aig::new(2);
        let (a, b) = (g.pi_edge(0), g.pi_edge(1));
        let x = g.add_and(a, b);
        let y = g.add_and(a, b.compl());
        let top = g.add_and(x, y);
        g.add_po(top);
        let r = rewrite(&g, false);
        assert_eq!(r.num_ands(), 0);
        assert_eq!(r.pos()[0], Edge::FALSE);
    }

    #[test]
    fn random_graphs_never_grow_and_stay_equivalent() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..120 {
            let num_pis = rng.gen_range(2..=8);
            let num_ands = rng.gen_range(1..=70);
            let num_pos = rng.gen_range(1..=4);
            let g = random_aig(&mut rng, num_pis, num_ands, num_pos);
            let r = rewrite(&g, false);
            assert!(r.num_ands() <= g.num_ands(), "node count grew");
            assert_equiv(&g, &r);
        }
    }

    #[test]
    fn zero_gain_mode_stays_equivalent() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..60 {
            let num_pis = rng.gen_range(2..=8);
            let num_ands = rng.gen_range(1..=50);
            let g = random_aig(&mut rng, num_pis, num_ands, 2);
            let r = rewrite(&g, true);
            assert!(r.num_ands() <= g.num_ands());
            assert_equiv(&g, &r);
        }
    }

    #[test]
    fn shared_logic_is_not_double_freed() {
        // the cone under the root shares a node with a second output; gain
        // accounting must keep the shared node alive and correct
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..40 {
            let g = random_aig(&mut rng, 6, 40, 6);
            let r = rewrite(&g, false);
            assert_equiv(&g, &r);
        }
    }
}
