//! Mutable AIG used inside synthesis passes: reference counts, fanout lists,
//! and in-place node replacement with cascading structural-hash merges.
//!
//! Node ids here are not kept in topological order (new nodes append at the
//! end); acyclicity is preserved by construction and passes must use
//! `topo_live` for ordered traversal. Conversion back to `Aig` renumbers.

use std::collections::{HashMap, VecDeque};

use crate::aig::{Aig, Edge};
use crate::truth::TruthTable;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WKind {
    Const0,
    Pi(u32),
    And(Edge, Edge),
    Dead,
}

#[derive(Clone, Debug)]
pub struct WorkAig {
    kinds: Vec<WKind>,
    num_pis: usize,
    pos: Vec<Edge>,
    /// Fanin references from AND nodes plus PO references.
    nrefs: Vec<u32>,
    /// AND nodes reading each node, in creation order.
    fanouts: Vec<Vec<u32>>,
    strash: HashMap<(u32, u32), u32>,
    live_ands: usize,
    /// Nodes whose fanins were edited since the last drain; passes use this
    /// to invalidate derived caches (cut sets).
    dirty: Vec<u32>,
}

impl WorkAig {
    pub fn from_aig(g: &Aig) -> WorkAig {
        let mut w = WorkAig {
            kinds: vec![WKind::Const0],
            num_pis: g.num_pis(),
            pos: Vec::new(),
            nrefs: vec![0],
            fanouts: vec![Vec::new()],
            strash: HashMap::new(),
            live_ands: 0,
            dirty: Vec::new(),
        };
        for i in 0..g.num_pis() {
            w.kinds.push(WKind::Pi(i as u32));
            w.nrefs.push(0);
            w.fanouts.push(Vec::new());
        }
        let mut map: Vec<Edge> = (0..g.num_nodes() as u32)
            .map(|id| Edge::new(id, false))
            .collect();
        for (id, a, b) in g.iter_ands() {
            let ma = map[a.node() as usize];
            let mb = map[b.node() as usize];
            map[id as usize] = w.add_and(
                ma.with_compl(ma.is_compl() ^ a.is_compl()),
                mb.with_compl(mb.is_compl() ^ b.is_compl()),
            );
        }
        for &po in g.pos() {
            let m = map[po.node() as usize];
            w.add_po(m.with_compl(m.is_compl() ^ po.is_compl()));
        }
        w
    }

    pub fn num_pis(&self) -> usize {
        self.num_pis
    }

    pub fn live_ands(&self) -> usize {
        self.live_ands
    }

    pub fn num_slots(&self) -> usize {
        self.kinds.len()
    }

    pub fn kind(&self, id: u32) -> WKind {
        self.kinds[id as usize]
    }

    pub fn is_live(&self, id: u32) -> bool {
        !matches!(self.kinds[id as usize], WKind::Dead)
    }

    pub fn is_and(&self, id: u32) -> bool {
        matches!(self.kinds[id as usize], WKind::And(..))
    }

    pub fn fanins(&self, id: u32) -> Option<(Edge, Edge)> {
        match self.kinds[id as usize] {
            WKind::And(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn fanouts(&self, id: u32) -> &[u32] {
        &self.fanouts[id as usize]
    }

    pub fn nrefs(&self, id: u32) -> u32 {
        self.nrefs[id as usize]
    }

    pub fn pos(&self) -> &[Edge] {
        &self.pos
    }

    pub fn pi_edge(&self, index: usize) -> Edge {
        assert!(index < self.num_pis);
        Edge::new(index as u32 + 1, false)
    }

    pub fn add_po(&mut self, e: Edge) {
        self.nrefs[e.node() as usize] += 1;
        self.pos.push(e);
    }

    pub fn drain_dirty(&mut self) -> Vec<u32> {
        std::mem::take(&mut self.dirty)
    }

    /// Existing AND with exactly these fanins (order-insensitive), if any.
    pub fn find_and(&self, a: Edge, b: Edge) -> Option<u32> {
        let (a, b) = if a.raw() <= b.raw() { (a, b) } else { (b, a) };
        self.strash.get(&(a.raw(), b.raw())).copied()
    }

    /// AND with folding and structural hashing; a fresh node starts with
    /// zero references of its own.
    pub fn add_and(&mut self, a: Edge, b: Edge) -> Edge {
        debug_assert!(self.is_live(a.node()) && self.is_live(b.node()));
        let (a, b) = if a.raw() <= b.raw() { (a, b) } else { (b, a) };
        if a == Edge::FALSE || a == b.compl() {
            return Edge::FALSE;
        }
        if a == Edge::TRUE {
            return b;
        }
        if a == b {
            return a;
        }
        if let Some(&id) = self.strash.get(&(a.raw(), b.raw())) {
            return Edge::new(id, false);
        }
        let id = self.kinds.len() as u32;
        self.kinds.push(WKind::And(a, b));
        self.nrefs.push(0);
        self.fanouts.push(Vec::new());
        self.nrefs[a.node() as usize] += 1;
        self.nrefs[b.node() as usize] += 1;
        self.fanouts[a.node() as usize].push(id);
        self.fanouts[b.node() as usize].push(id);
        self.strash.insert((a.raw(), b.raw()), id);
        self.live_ands += 1;
        Edge::new(id, false)
    }

    fn kill(&mut self, id: u32) {
        debug_assert!(self.nrefs[id as usize] == 0);
        let (a, b) = match self.kinds[id as usize] {
            WKind::And(a, b) => (a, b),
            _ => return, // constants and PIs never die
        };
        self.strash.remove(&(a.raw(), b.raw()));
        self.kinds[id as usize] = WKind::Dead;
        self.live_ands -= 1;
        for f in [a.node(), b.node()] {
            self.nrefs[f as usize] -= 1;
            let list = &mut self.fanouts[f as usize];
            if let Some(pos) = list.iter().position(|&x| x == id) {
                list.remove(pos);
            }
            if self.nrefs[f as usize] == 0 {
                self.kill(f);
            }
        }
    }

    /// Release a construction root that ended up unused.
    pub fn sweep_if_dead(&mut self, id: u32) {
        if self.is_and(id) && self.nrefs[id as usize] == 0 {
            self.kill(id);
        }
    }

    /// Redirect every reader of `old` onto `new` (inversion composed),
    /// cascading structural-hash merges and constant folds, then free the
    /// dead cone. `new` must not depend on `old`.
    pub fn replace(&mut self, old: u32, new: Edge) {
        assert_ne!(old, new.node(), "self-replacement");
        assert!(self.is_live(old) && self.is_live(new.node()));
        debug_assert!(self.nrefs[old as usize] > 0, "replacing a dangling node");
        let mut queue: VecDeque<(u32, Edge)> = VecDeque::new();
        let mut retired: Vec<u32> = Vec::new();
        // protect replacement targets from transient zero-ref states
        let mut protected: Vec<u32> = Vec::new();
        queue.push_back((old, new));
        self.nrefs[new.node() as usize] += 1;
        protected.push(new.node());

        while let Some((o, n)) = queue.pop_front() {
            if !self.is_live(o) {
                continue;
            }
            retired.push(o);
            // primary outputs
            for i in 0..self.pos.len() {
                if self.pos[i].node() == o {
                    let inv = self.pos[i].is_compl() ^ n.is_compl();
                    self.pos[i] = n.with_compl(inv);
                    self.nrefs[o as usize] -= 1;
                    self.nrefs[n.node() as usize] += 1;
                }
            }
            // AND readers
            let readers: Vec<u32> = self.fanouts[o as usize].clone();
            for fo in readers {
                if !self.is_live(fo) {
                    continue;
                }
                let (a, b) = self.fanins(fo).expect("reader is an AND");
                if a.node() != o && b.node() != o {
                    continue; // already rewritten by an earlier cascade step
                }
                let sub = |e: Edge| -> Edge {
                    if e.node() == o {
                        n.with_compl(n.is_compl() ^ e.is_compl())
                    } else {
                        e
                    }
                };
                let (na, nb) = (sub(a), sub(b));
                let (na, nb) = if na.raw() <= nb.raw() { (na, nb) } else { (nb, na) };
                // a fold or hash hit turns the reader itself into a
                // replacement; it stays intact until its own readers move
                let folded = if na == Edge::FALSE || na == nb.compl() {
                    Some(Edge::FALSE)
                } else if na == Edge::TRUE {
                    Some(nb)
                } else if na == nb {
                    Some(na)
                } else {
                    match self.strash.get(&(na.raw(), nb.raw())) {
                        Some(&h) if h != fo => Some(Edge::new(h, false)),
                        _ => None,
                    }
                };
                match folded {
                    Some(target) => {
                        self.nrefs[target.node() as usize] += 1;
                        protected.push(target.node());
                        queue.push_back((fo, target));
                    }
                    None => {
                        let (oa, ob) = self.fanins(fo).unwrap();
                        self.strash.remove(&(oa.raw(), ob.raw()));
                        self.kinds[fo as usize] = WKind::And(na, nb);
                        self.strash.insert((na.raw(), nb.raw()), fo);
                        self.nrefs[o as usize] -= 1;
                        let list = &mut self.fanouts[o as usize];
                        if let Some(pos) = list.iter().position(|&x| x == fo) {
                            list.remove(pos);
                        }
                        self.nrefs[n.node() as usize] += 1;
                        self.fanouts[n.node() as usize].push(fo);
                        self.dirty.push(fo);
                    }
                }
            }
        }
        for &p in &protected {
            self.nrefs[p as usize] -= 1;
        }
        for &o in &retired {
            if self.is_live(o) && self.nrefs[o as usize] == 0 {
                self.kill(o);
            }
        }
        for &p in &protected {
            if self.is_live(p) && self.nrefs[p as usize] == 0 {
                self.kill(p);
            }
        }
    }

    /// Topological order (fanins first) of live AND nodes reachable from the
    /// outputs.
    pub fn topo_live(&self) -> Vec<u32> {
        let mut order = Vec::new();
        let mut state = vec![0u8; self.kinds.len()]; // 0 unseen, 1 open, 2 done
        let mut stack: Vec<(u32, bool)> = Vec::new();
        for po in &self.pos {
            stack.push((po.node(), false));
        }
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                state[id as usize] = 2;
                order.push(id);
                continue;
            }
            if state[id as usize] != 0 {
                continue;
            }
            match self.kinds[id as usize] {
                WKind::And(a, b) => {
                    state[id as usize] = 1;
                    stack.push((id, true));
                    stack.push((b.node(), false));
                    stack.push((a.node(), false));
                }
                WKind::Dead => panic!("dead node reachable from outputs"),
                _ => {
                    state[id as usize] = 2;
                }
            }
        }
        order.retain(|&id| self.is_and(id));
        order
    }

    /// Nodes that die if `root` is disconnected: the maximum fanout-free
    /// cone, root first.
    pub fn mffc(&self, root: u32) -> Vec<u32> {
        debug_assert!(self.is_and(root));
        let mut refs: HashMap<u32, u32> = HashMap::new();
        let mut freed = vec![root];
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            let (a, b) = self.fanins(id).unwrap();
            for f in [a.node(), b.node()] {
                if !self.is_and(f) {
                    continue;
                }
                let r = refs.entry(f).or_insert(self.nrefs[f as usize]);
                *r -= 1;
                if *r == 0 {
                    freed.push(f);
                    stack.push(f);
                }
            }
        }
        freed
    }

    /// Truth table of `root` over the given leaf nodes; every path from
    /// `root` must reach a leaf, a PI in `leaves`, or a constant.
    pub fn cone_truth(&self, root: Edge, leaves: &[u32]) -> TruthTable {
        let n = leaves.len();
        let mut memo: HashMap<u32, TruthTable> = HashMap::new();
        memo.insert(0, TruthTable::constant(n, false));
        for (i, &l) in leaves.iter().enumerate() {
            memo.insert(l, TruthTable::projection(n, i));
        }
        let mut stack = vec![root.node()];
        while let Some(&id) = stack.last() {
            if memo.contains_key(&id) {
                stack.pop();
                continue;
            }
            let (a, b) = self
                .fanins(id)
                .expect("cone escapes its leaves");
            let ta = memo.get(&a.node()).cloned();
            let tb = memo.get(&b.node()).cloned();
            match (ta, tb) {
                (Some(ta), Some(tb)) => {
                    memo.insert(id, ta.and_with_compl(a.is_compl(), &tb, b.is_compl()));
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
        memo[&root.node()].xor_const(root.is_compl())
    }

    /// Compact immutable snapshot; node ids are renumbered topologically.
    pub fn to_aig(&self) -> Aig {
        let mut g = Aig::new(self.num_pis);
        let mut map: HashMap<u32, Edge> = HashMap::new();
        map.insert(0, Edge::FALSE);
        for i in 0..self.num_pis {
            map.insert(i as u32 + 1, g.pi_edge(i));
        }
        for id in self.topo_live() {
            let (a, b) = self.fanins(id).unwrap();
            let ma = map[&a.node()];
            let mb = map[&b.node()];
            let e = g.add_and(
                ma.with_compl(ma.is_compl() ^ a.is_compl()),
                mb.with_compl(mb.is_compl() ^ b.is_compl()),
            );
            map.insert(id, e);
        }
        for po in &self.pos {
            let m = map[&po.node()];
            g.add_po(m.with_compl(m.is_compl() ^ po.is_compl()));
        }
        g
    }

    /// Exhaustive internal consistency check for tests: reference counts,
    /// fanout lists, hash table, and acyclicity.
    #[cfg(test)]
    pub fn check(&self) {
        let mut refs = vec![0u32; self.kinds.len()];
        let mut fos: Vec<Vec<u32>> = vec![Vec::new(); self.kinds.len()];
        let mut live = 0usize;
        for (id, kind) in self.kinds.iter().enumerate() {
            if let WKind::And(a, b) = kind {
                assert!(self.is_live(a.node()) && self.is_live(b.node()));
                assert!(a.raw() <= b.raw(), "fanins out of canonical order");
                refs[a.node() as usize] += 1;
                refs[b.node() as usize] += 1;
                fos[a.node() as usize].push(id as u32);
                fos[b.node() as usize].push(id as u32);
                assert_eq!(self.strash.get(&(a.raw(), b.raw())), Some(&(id as u32)));
                live += 1;
            }
        }
        for po in &self.pos {
            assert!(self.is_live(po.node()));
            refs[po.node() as usize] += 1;
        }
        assert_eq!(live, self.live_ands);
        assert_eq!(self.strash.len(), live);
        for id in 0..self.kinds.len() {
            assert_eq!(refs[id], self.nrefs[id], "refcount of node {id}");
            let mut a = fos[id].clone();
            let mut b = self.fanouts[id].clone();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b, "fanouts of node {id}");
        }
        // acyclicity
        let mut state = vec![0u8; self.kinds.len()];
        fn dfs(w: &WorkAig, id: u32, state: &mut [u8]) {
            if state[id as usize] == 2 {
                return;
            }
            assert_ne!(state[id as usize], 1, "cycle through node {id}");
            state[id as usize] = 1;
            if let Some((a, b)) = w.fanins(id) {
                dfs(w, a.node(), state);
                dfs(w, b.node(), state);
            }
            state[id as usize] = 2;
        }
        for po in &self.pos {
            dfs(self, po.node(), &mut state);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::Aig;

    fn sample() -> Aig {
        let mut g = Aig::new(4);
        let (a, b, c, d) = (g.pi_edge(0), g.pi_edge(1), g.pi_edge(2), g.pi_edge(3));
        let ab = g.add_and(a, b);
        let cd = g.add_and(c, d);
        let x = g.add_xor(ab, cd);
        g.add_po(x);
        g.add_po(ab.compl());
        g
    }

    #[test]
    fn roundtrip_preserves_function() {
        let g = sample();
        let w = WorkAig::from_aig(&g);
        w.check();
        let back = w.to_aig();
        assert_eq!(back.po_tables().unwrap(), g.po_tables().unwrap());
        assert_eq!(back.num_ands(), g.num_ands());
    }

    #[test]
    fn replace_redirects_and_frees() {
        let mut g = Aig::new(3);
        let (a, b, c) = (g.pi_edge(0), g.pi_edge(1), g.pi_edge(2));
        let ab = g.add_and(a, b);
        let abc = g.add_and(ab, c);
        g.add_po(abc);
        let mut w = WorkAig::from_aig(&g);
        let before = w.to_aig().po_tables().unwrap();
        let _ = before;
        // replace AND(a,b) with just a: PO becomes AND(a, c)
        let ab_id = w.topo_live()[0];
        let a_edge = w.pi_edge(0);
        let live_before = w.live_ands();
        w.replace(ab_id, a_edge);
        w.check();
        assert_eq!(w.live_ands(), live_before - 1);
        let t = w.to_aig().po_tables().unwrap();
        for idx in 0..8usize {
            let expect = (idx & 1 == 1) && (idx >> 2 & 1 == 1);
            assert_eq!(t[0].bit(idx), expect);
        }
    }

    #[test]
    fn replace_cascades_merge() {
        // two cones that become structurally identical after a replacement
        let mut g = Aig::new(3);
        let (a, b, c) = (g.pi_edge(0), g.pi_edge(1), g.pi_edge(2));
        let ab = g.add_and(a, b);
        let ac = g.add_and(a, c);
        let top1 = g.add_and(ab, c.compl());
        let top2 = g.add_and(ac, c.compl());
        g.add_po(top1);
        g.add_po(top2);
        let mut w = WorkAig::from_aig(&g);
        // replace AND(a,b) with AND(a,c): top1 merges into top2
        let find = |w: &WorkAig, f0: Edge, f1: Edge| -> u32 {
            w.topo_live()
                .into_iter()
                .find(|&id| w.fanins(id) == Some((f0, f1)))
                .expect("node present")
        };
        let ab_id = find(&w, w.pi_edge(0), w.pi_edge(1));
        let ac_id = find(&w, w.pi_edge(0), w.pi_edge(2));
        w.replace(ab_id, Edge::new(ac_id, false));
        w.check();
        assert_eq!(w.pos()[0], w.pos()[1]);
        assert_eq!(w.live_ands(), 2);
    }

    #[test]
    fn replace_with_constant_propagates() {
        let mut g = Aig::new(2);
        let (a, b) = (g.pi_edge(0), g.pi_edge(1));
        let ab = g.add_and(a, b);
        let top = g.add_and(ab, b);
        g.add_po(top);
        let mut w = WorkAig::from_aig(&g);
        let order = w.topo_live();
        w.replace(order[0], Edge::FALSE);
        w.check();
        assert_eq!(w.pos()[0], Edge::FALSE);
        assert_eq!(w.live_ands(), 0);
    }

    #[test]
    fn mffc_counts_exclusive_cone() {
        let mut g = Aig::new(4);
        let (a, b, c, d) = (g.pi_edge(0), g.pi_edge(1), g.pi_edge(2), g.pi_edge(3));
        let ab = g.add_and(a, b);
        let cd = g.add_and(c, d);
        let top = g.add_and(ab, cd);
        let side = g.add_and(ab, d); // shares ab
        g.add_po(top);
        g.add_po(side);
        let w = WorkAig::from_aig(&g);
        let order = w.topo_live();
        let top_id = order
            .iter()
            .copied()
            .find(|&id| {
                let (x, y) = w.fanins(id).unwrap();
                w.is_and(x.node()) && w.is_and(y.node())
            })
            .unwrap();
        let mffc = w.mffc(top_id);
        // top + cd die; ab survives via side
        assert_eq!(mffc.len(), 2);
    }

    #[test]
    fn cone_truth_matches_simulation() {
        let g = sample();
        let w = WorkAig::from_aig(&g);
        let leaves: Vec<u32> = (1..=4).collect();
        let t = w.cone_truth(w.pos()[0], &leaves);
        assert_eq!(t, g.po_tables().unwrap()[0]);
    }

    #[test]
    fn dirty_log_records_edits() {
        let mut g = Aig::new(3);
        let (a, b, c) = (g.pi_edge(0), g.pi_edge(1), g.pi_edge(2));
        let ab = g.add_and(a, b);
        let top = g.add_and(ab, c);
        g.add_po(top);
        let mut w = WorkAig::from_aig(&g);
        assert!(w.drain_dirty().is_empty());
        let order = w.topo_live();
        w.replace(order[0], w.pi_edge(1));
        let dirty = w.drain_dirty();
        assert!(!dirty.is_empty());
    }
}
