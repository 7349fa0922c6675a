//! And-inverter graphs with edge-level complementation.
//!
//! Node 0 is the constant-false node; nodes `1..=num_pis` are primary
//! inputs; every further node is a two-input AND. Fanin ids are always
//! smaller than the node id, so node order is a topological order.

use std::collections::HashMap;

use crate::truth::{TruthTable, MAX_VARS};

/// A directed edge: packed as `2 * node + complement`, so ordering edges by
/// raw value orders them by (node id, inversion).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(u32);

impl Edge {
    pub const FALSE: Edge = Edge(0);
    pub const TRUE: Edge = Edge(1);

    pub fn new(node: u32, compl: bool) -> Edge {
        Edge(node << 1 | compl as u32)
    }

    pub fn node(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_compl(self) -> bool {
        self.0 & 1 == 1
    }

    /// Same node, inversion toggled.
    pub fn compl(self) -> Edge {
        Edge(self.0 ^ 1)
    }

    pub fn with_compl(self, compl: bool) -> Edge {
        Edge(self.0 & !1 | compl as u32)
    }

    pub fn raw(self) -> u32 {
        self.0
    }

    pub fn from_raw(raw: u32) -> Edge {
        Edge(raw)
    }
}

impl std::fmt::Debug for Edge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_compl() {
            write!(f, "!{}", self.node())
        } else {
            write!(f, "{}", self.node())
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeKind {
    Const0,
    Pi(u32),
    And(Edge, Edge),
}

/// Simulation needs one table row per input assignment; past this the
/// exhaustive oracle is refused rather than silently sampled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityError {
    pub num_pis: usize,
}

impl std::fmt::Display for CapacityError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "exhaustive simulation supports at most {MAX_VARS} inputs, graph has {}",
            self.num_pis
        )
    }
}

impl std::error::Error for CapacityError {}

#[derive(Clone, Debug)]
pub struct Aig {
    nodes: Vec<NodeKind>,
    num_pis: usize,
    pos: Vec<Edge>,
    strash: HashMap<(u32, u32), u32>,
}

/// Size and structure counters used for features and reporting. `nots`
/// counts complemented edges (fanins and outputs); `wires` counts fanin
/// edges only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AigStats {
    pub pis: usize,
    pub pos: usize,
    pub ands: usize,
    pub nots: usize,
    pub wires: usize,
    pub levels: u32,
}

impl Aig {
    pub fn new(num_pis: usize) -> Aig {
        let mut nodes = Vec::with_capacity(num_pis + 1);
        nodes.push(NodeKind::Const0);
        for i in 0..num_pis {
            nodes.push(NodeKind::Pi(i as u32));
        }
        Aig {
            nodes,
            num_pis,
            pos: Vec::new(),
            strash: HashMap::new(),
        }
    }

    pub fn num_pis(&self) -> usize {
        self.num_pis
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_ands(&self) -> usize {
        self.nodes.len() - 1 - self.num_pis
    }

    pub fn pi_edge(&self, index: usize) -> Edge {
        assert!(index < self.num_pis);
        Edge::new(index as u32 + 1, false)
    }

    pub fn node(&self, id: u32) -> NodeKind {
        self.nodes[id as usize]
    }

    pub fn fanins(&self, id: u32) -> Option<(Edge, Edge)> {
        match self.nodes[id as usize] {
            NodeKind::And(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn is_and(&self, id: u32) -> bool {
        matches!(self.nodes[id as usize], NodeKind::And(..))
    }

    /// Iterate AND nodes as `(id, fanin0, fanin1)` in topological order.
    pub fn iter_ands(&self) -> impl Iterator<Item = (u32, Edge, Edge)> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            NodeKind::And(a, b) => Some((i as u32, *a, *b)),
            _ => None,
        })
    }

    /// AND with constant folding and structural hashing. Fanins are stored
    /// in canonical (raw edge value) order.
    pub fn add_and(&mut self, a: Edge, b: Edge) -> Edge {
        debug_assert!((a.node() as usize) < self.nodes.len());
        debug_assert!((b.node() as usize) < self.nodes.len());
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
        let id = self.nodes.len() as u32;
        self.nodes.push(NodeKind::And(a, b));
        self.strash.insert((a.raw(), b.raw()), id);
        Edge::new(id, false)
    }

    pub fn add_or(&mut self, a: Edge, b: Edge) -> Edge {
        self.add_and(a.compl(), b.compl()).compl()
    }

    pub fn add_xor(&mut self, a: Edge, b: Edge) -> Edge {
        let t0 = self.add_and(a, b.compl());
        let t1 = self.add_and(a.compl(), b);
        self.add_or(t0, t1)
    }

    /// `if s then t else e`.
    pub fn add_mux(&mut self, s: Edge, t: Edge, e: Edge) -> Edge {
        let hi = self.add_and(s, t);
        let lo = self.add_and(s.compl(), e);
        self.add_or(hi, lo)
    }

    pub fn add_po(&mut self, e: Edge) {
        self.pos.push(e);
    }

    /// Remap an edge of `src` through a node translation table.
    fn translate(e: Edge, map: &[Edge]) -> Edge {
        map[e.node() as usize].with_compl(map[e.node() as usize].is_compl() ^ e.is_compl())
    }

    pub fn pos(&self) -> &[Edge] {
        &self.pos
    }

    pub fn set_po(&mut self, index: usize, e: Edge) {
        self.pos[index] = e;
    }

    pub fn num_pos(&self) -> usize {
        self.pos.len()
    }

    /// Flip the complement bit on one fanin edge of an AND node, changing
    /// the graph's function but not its shape. Drops the hash-sharing map:
    /// the mutated node may now duplicate another.
    pub fn invert_fanin(&mut self, id: u32, slot: usize) {
        let NodeKind::And(a, b) = self.nodes[id as usize] else {
            panic!("node {id} is not an AND node");
        };
        self.nodes[id as usize] = match slot {
            0 => NodeKind::And(a.compl(), b),
            1 => NodeKind::And(a, b.compl()),
            _ => panic!("fanin slot must be 0 or 1"),
        };
        self.strash.clear();
    }

    /// Output values under one input assignment.
    pub fn eval(&self, inputs: &[bool]) -> Vec<bool> {
        assert_eq!(inputs.len(), self.num_pis);
        let mut vals = vec![false; self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            vals[id] = match *node {
                NodeKind::Const0 => false,
                NodeKind::Pi(i) => inputs[i as usize],
                NodeKind::And(a, b) => {
                    (vals[a.node() as usize] ^ a.is_compl())
                        && (vals[b.node() as usize] ^ b.is_compl())
                }
            };
        }
        self.pos
            .iter()
            .map(|e| vals[e.node() as usize] ^ e.is_compl())
            .collect()
    }

    /// Per-node truth tables over the primary inputs.
    pub fn simulate(&self) -> Result<Vec<TruthTable>, CapacityError> {
        if self.num_pis > MAX_VARS {
            return Err(CapacityError { num_pis: self.num_pis });
        }
        let n = self.num_pis;
        let mut tables = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let t = match *node {
                NodeKind::Const0 => TruthTable::constant(n, false),
                NodeKind::Pi(i) => TruthTable::projection(n, i as usize),
                NodeKind::And(a, b) => {
                    let ta: &TruthTable = &tables[a.node() as usize];
                    let tb: &TruthTable = &tables[b.node() as usize];
                    ta.and_with_compl(a.is_compl(), tb, b.is_compl())
                }
            };
            tables.push(t);
        }
        Ok(tables)
    }

    /// Truth tables of the primary outputs.
    pub fn po_tables(&self) -> Result<Vec<TruthTable>, CapacityError> {
        let tables = self.simulate()?;
        Ok(self
            .pos
            .iter()
            .map(|e| tables[e.node() as usize].xor_const(e.is_compl()))
            .collect())
    }

    /// Logic level of every node; constants and inputs are level 0.
    pub fn levels(&self) -> Vec<u32> {
        let mut lv = vec![0u32; self.nodes.len()];
        for (id, a, b) in self.iter_ands() {
            lv[id as usize] = 1 + lv[a.node() as usize].max(lv[b.node() as usize]);
        }
        lv
    }

    /// Depth seen from the primary outputs.
    pub fn depth(&self) -> u32 {
        let lv = self.levels();
        self.pos
            .iter()
            .map(|e| lv[e.node() as usize])
            .max()
            .unwrap_or(0)
    }

    pub fn stats(&self) -> AigStats {
        let mut nots = 0usize;
        let mut wires = 0usize;
        for (_, a, b) in self.iter_ands() {
            wires += 2;
            nots += a.is_compl() as usize + b.is_compl() as usize;
        }
        for e in &self.pos {
            nots += e.is_compl() as usize;
        }
        AigStats {
            pis: self.num_pis,
            pos: self.pos.len(),
            ands: self.num_ands(),
            nots,
            wires,
            levels: self.depth(),
        }
    }

    /// Copy of the graph keeping only logic reachable from the outputs,
    /// with nodes renumbered into a dense topological order. The PI
    /// interface is preserved even for unused inputs.
    pub fn compact(&self) -> Aig {
        let mut keep = vec![false; self.nodes.len()];
        keep[..=self.num_pis].fill(true);
        let mut stack: Vec<u32> = self.pos.iter().map(|e| e.node()).collect();
        while let Some(id) = stack.pop() {
            if keep[id as usize] {
                continue;
            }
            keep[id as usize] = true;
            if let Some((a, b)) = self.fanins(id) {
                stack.push(a.node());
                stack.push(b.node());
            }
        }
        let mut out = Aig::new(self.num_pis);
        let mut map: Vec<Edge> = vec![Edge::FALSE; self.nodes.len()];
        for (i, m) in map.iter_mut().enumerate().take(self.num_pis + 1).skip(1) {
            *m = Edge::new(i as u32, false);
        }
        for (id, a, b) in self.iter_ands() {
            if !keep[id as usize] {
                continue;
            }
            let na = Aig::translate(a, &map);
            let nb = Aig::translate(b, &map);
            map[id as usize] = out.add_and(na, nb);
        }
        for &e in &self.pos {
            out.add_po(Aig::translate(e, &map));
        }
        out
    }

    /// Copy `other`'s logic into `self`, substituting `pi_map[i]` for its
    /// i-th input. Returns `other`'s output edges re-expressed in `self`.
    pub fn import(&mut self, other: &Aig, pi_map: &[Edge]) -> Vec<Edge> {
        assert_eq!(pi_map.len(), other.num_pis());
        let mut map: Vec<Edge> = vec![Edge::FALSE; other.num_nodes()];
        for (i, &e) in pi_map.iter().enumerate() {
            map[i + 1] = e;
        }
        for (id, a, b) in other.iter_ands() {
            let na = Aig::translate(a, &map);
            let nb = Aig::translate(b, &map);
            map[id as usize] = self.add_and(na, nb);
        }
        other.pos.iter().map(|&e| Aig::translate(e, &map)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_input() -> (Aig, Edge, Edge) {
        let g = Aig::new(2);
        let a = g.pi_edge(0);
        let b = g.pi_edge(1);
        (g, a, b)
    }

    #[test]
    fn and_truth() {
        let (mut g, a, b) = two_input();
        let e = g.add_and(a, b);
        g.add_po(e);
        let t = g.po_tables().unwrap();
        assert_eq!(t[0].as_u64(), 0b1000);
    }

    #[test]
    fn xor_truth() {
        let (mut g, a, b) = two_input();
        let e = g.add_xor(a, b);
        g.add_po(e);
        let t = g.po_tables().unwrap();
        assert_eq!(t[0].as_u64(), 0b0110);
        assert_eq!(g.num_ands(), 3);
    }

    #[test]
    fn folding_rules() {
        let (mut g, a, b) = two_input();
        assert_eq!(g.add_and(Edge::FALSE, a), Edge::FALSE);
        assert_eq!(g.add_and(Edge::TRUE, a), a);
        assert_eq!(g.add_and(a, a), a);
        assert_eq!(g.add_and(a, a.compl()), Edge::FALSE);
        let e1 = g.add_and(a, b);
        let e2 = g.add_and(b, a);
        assert_eq!(e1, e2);
        assert_eq!(g.num_ands(), 1);
    }

    #[test]
    fn stats_chain() {
        let mut g = Aig::new(3);
        let ab = g.add_and(g.pi_edge(0), g.pi_edge(1));
        let abc = g.add_and(ab, g.pi_edge(2));
        g.add_po(abc);
        let s = g.stats();
        assert_eq!(s.ands, 2);
        assert_eq!(s.wires, 4);
        assert_eq!(s.nots, 0);
        assert_eq!(s.levels, 2);
    }

    #[test]
    fn stats_xor_inversions() {
        let (mut g, a, b) = two_input();
        let e = g.add_xor(a, b);
        g.add_po(e);
        let s = g.stats();
        assert_eq!(s.ands, 3);
        assert_eq!(s.wires, 6);
        // two single-inverted level-1 ANDs, doubly-inverted top AND, inverted PO
        assert_eq!(s.nots, 5);
        assert_eq!(s.levels, 2);
    }

    #[test]
    fn capacity_refused() {
        let g = Aig::new(17);
        assert!(g.simulate().is_err());
    }

    #[test]
    fn compact_drops_dangling() {
        let (mut g, a, b) = two_input();
        let _dead = g.add_xor(a, b);
        let live = g.add_and(a, b);
        g.add_po(live.compl());
        let c = g.compact();
        assert_eq!(c.num_ands(), 1);
        assert_eq!(
            c.po_tables().unwrap()[0],
            g.po_tables().unwrap()[0]
        );
    }

    #[test]
    fn import_composes_inversions() {
        let (mut inner, a, b) = two_input();
        let e = inner.add_xor(a, b);
        inner.add_po(e.compl()); // xnor

        let mut outer = Aig::new(3);
        let x = outer.pi_edge(0);
        let y = outer.pi_edge(2);
        let mapped = outer.import(&inner, &[x.compl(), y]);
        outer.add_po(mapped[0]);
        let t = outer.po_tables().unwrap();
        // xnor(!x, y) == xor(x, y), vacuous in var 1
        for idx in 0..8usize {
            let expect = (idx & 1) ^ ((idx >> 2) & 1) == 1;
            assert_eq!(t[0].bit(idx), expect);
        }
    }

    #[test]
    fn mux_truth() {
        let mut g = Aig::new(3);
        let s = g.pi_edge(0);
        let t = g.pi_edge(1);
        let e = g.pi_edge(2);
        let m = g.add_mux(s, t, e);
        g.add_po(m);
        let tt = g.po_tables().unwrap();
        for idx in 0..8usize {
            let (sv, tv, ev) = (idx & 1 == 1, idx >> 1 & 1 == 1, idx >> 2 & 1 == 1);
            assert_eq!(tt[0].bit(idx), if sv { tv } else { ev });
        }
    }
}
