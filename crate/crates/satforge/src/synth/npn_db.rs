//! Precomputed AND-graph structures for the 222 NPN classes of 4-variable
//! functions, used by the rewriting pass.
//!
//! Structures are discovered by a Dijkstra-style search over classes:
//! settled classes are pairwise combined through a single AND (with all
//! orbit alignments and operand polarities), and a candidate's cost is the
//! node count of the merged structure. Classes not reachable within the
//! 7-node cap fall back to a factored two-level cover. The finished table
//! is cached on disk and memoized per process.

use std::collections::{BinaryHeap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use crate::aig::{Aig, Edge};
use crate::synth::factor::build_sop;
use crate::synth::npn::{canonize, invert, orbit, Transform};
use crate::truth::{isop, TruthTable};

const PROJ: [u16; 4] = [0xAAAA, 0xCCCC, 0xF0F0, 0xFF00];
const COST_CAP: u32 = 7;
const CACHE_HEADER: &str = "satforge-npn4 v1";

/// AND-graph fragment over four formal inputs. Operand codes pack
/// `(reference << 1) | complemented` where reference 0 is constant false,
/// 1..=4 are the formal inputs, and 5+i is fragment node i. Nodes are
/// topologically ordered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DbStructure {
    pub nodes: Vec<(u8, u8)>,
    pub out: u8,
}

impl DbStructure {
    pub fn cost(&self) -> u32 {
        self.nodes.len() as u32
    }

    /// Truth table of the fragment over its formal inputs.
    pub fn eval(&self) -> u16 {
        let mut tables = Vec::with_capacity(self.nodes.len());
        let resolve = |code: u8, tables: &[u16]| -> u16 {
            let r = (code >> 1) as usize;
            let t = match r {
                0 => 0u16,
                1..=4 => PROJ[r - 1],
                _ => tables[r - 5],
            };
            if code & 1 != 0 {
                !t
            } else {
                t
            }
        };
        for &(a, b) in &self.nodes {
            let t = resolve(a, &tables) & resolve(b, &tables);
            tables.push(t);
        }
        resolve(self.out, &tables)
    }
}

pub struct RewriteDb {
    canon_rep: Vec<u16>,
    canon_tr: Vec<Transform>,
    entries: HashMap<u16, DbStructure>,
}

/// Canonical representative and rebuild transform for every 16-bit table:
/// `apply_transform(rep[t], tr[t]) == t`.
fn canon_tables() -> (Vec<u16>, Vec<Transform>) {
    let mut rep = vec![0u16; 1 << 16];
    let mut tr = vec![Transform::IDENTITY; 1 << 16];
    let mut done = vec![false; 1 << 16];
    for t in 0..=u16::MAX {
        if done[t as usize] {
            continue;
        }
        let (r, to_t) = canonize(t);
        for (member, from_t) in orbit(t) {
            // member = apply(from_t, t), t = apply(to_t, r)
            // => member = apply(compose(to_t, from_t), r)
            rep[member as usize] = r;
            tr[member as usize] = compose(&to_t, &from_t);
            done[member as usize] = true;
        }
    }
    (rep, tr)
}

/// Transform equivalent to applying `first` then `second`.
fn compose(first: &Transform, second: &Transform) -> Transform {
    let mut perm = [0u8; 4];
    let mut flips = 0u8;
    for (k, slot) in perm.iter_mut().enumerate() {
        let p1 = first.perm[k] as usize;
        *slot = second.perm[p1];
        let f = (first.flips >> k & 1) ^ (second.flips >> p1 & 1);
        flips |= f << k;
    }
    Transform {
        perm,
        flips,
        out_flip: first.out_flip ^ second.out_flip,
    }
}

/// Fragment nodes reachable from `out` in `g`, renumbered into a
/// `DbStructure`. `g` must have exactly four inputs.
fn extract(g: &Aig, out: Edge) -> DbStructure {
    assert_eq!(g.num_pis(), 4);
    let mut in_cone = vec![false; g.num_nodes()];
    let mut stack = vec![out.node()];
    while let Some(id) = stack.pop() {
        if in_cone[id as usize] || !g.is_and(id) {
            continue;
        }
        in_cone[id as usize] = true;
        let (a, b) = g.fanins(id).unwrap();
        stack.push(a.node());
        stack.push(b.node());
    }
    let mut index = vec![0u8; g.num_nodes()];
    let mut nodes = Vec::new();
    let code = |e: Edge, index: &[u8]| -> u8 {
        let r = if e.node() == 0 {
            0
        } else if (e.node() as usize) <= 4 {
            e.node() as u8
        } else {
            index[e.node() as usize]
        };
        r << 1 | e.is_compl() as u8
    };
    for id in 0..g.num_nodes() as u32 {
        if !in_cone[id as usize] {
            continue;
        }
        let (a, b) = g.fanins(id).unwrap();
        let (ca, cb) = (code(a, &index), code(b, &index));
        index[id as usize] = (5 + nodes.len()) as u8;
        nodes.push((ca, cb));
    }
    DbStructure {
        nodes,
        out: code(out, &index),
    }
}

/// Build `s` into `g` with formal input `j` wired to `g`'s input
/// `tr.perm[j]` complemented per `tr.flips`; the result edge carries
/// `tr.out_flip`. Used to instantiate orbit variants of a structure.
fn instantiate(g: &mut Aig, s: &DbStructure, tr: &Transform) -> Edge {
    let mut built = Vec::with_capacity(s.nodes.len());
    let resolve = |code: u8, built: &[Edge], g: &Aig| -> Edge {
        let r = (code >> 1) as usize;
        let base = match r {
            0 => Edge::FALSE,
            1..=4 => {
                let j = r - 1;
                g.pi_edge(tr.perm[j] as usize)
                    .with_compl(tr.flips >> j & 1 != 0)
            }
            _ => built[r - 5],
        };
        base.with_compl(base.is_compl() ^ (code & 1 != 0))
    };
    for &(a, b) in &s.nodes {
        let ea = resolve(a, &built, g);
        let eb = resolve(b, &built, g);
        let e = g.add_and(ea, eb);
        built.push(e);
    }
    let out = resolve(s.out, &built, g);
    out.with_compl(out.is_compl() ^ tr.out_flip)
}

/// Node count of the cone of `out`, the exact cost of the structure that
/// `extract` would produce.
fn cone_size(g: &Aig, out: Edge) -> u32 {
    let mut seen = vec![false; g.num_nodes()];
    let mut stack = vec![out.node()];
    let mut count = 0;
    while let Some(id) = stack.pop() {
        if seen[id as usize] || !g.is_and(id) {
            continue;
        }
        seen[id as usize] = true;
        count += 1;
        let (a, b) = g.fanins(id).unwrap();
        stack.push(a.node());
        stack.push(b.node());
    }
    count
}

impl RewriteDb {
    /// Canonical representative of `t` plus the transform that rebuilds `t`
    /// from it. Table lookup; no search.
    pub fn canon(&self, t: u16) -> (u16, Transform) {
        (self.canon_rep[t as usize], self.canon_tr[t as usize])
    }

    /// Stored structure for a class representative.
    pub fn structure(&self, rep: u16) -> &DbStructure {
        &self.entries[&rep]
    }

    pub fn num_classes(&self) -> usize {
        self.entries.len()
    }

    /// Process-wide instance, built once and cached on disk. The cache path
    /// comes from `SATFORGE_NPN_DB` or defaults to the system temp dir.
    pub fn get() -> &'static RewriteDb {
        static DB: OnceLock<RewriteDb> = OnceLock::new();
        DB.get_or_init(|| {
            let path = std::env::var_os("SATFORGE_NPN_DB")
                .map(PathBuf::from)
                .unwrap_or_else(|| std::env::temp_dir().join("satforge-npn4.db"));
            if let Some(db) = RewriteDb::load(&path) {
                return db;
            }
            let db = RewriteDb::build();
            let _ = db.save(&path);
            db
        })
    }

    pub fn build() -> RewriteDb {
        let (canon_rep, canon_tr) = canon_tables();
        let mut entries: HashMap<u16, DbStructure> = HashMap::new();
        let mut best_cost = vec![u32::MAX; 1 << 16];
        let mut settled: Vec<u16> = Vec::new();
        let mut is_settled = vec![false; 1 << 16];
        let mut orbits: HashMap<u16, Vec<(u16, Transform)>> = HashMap::new();
        let mut heap: BinaryHeap<std::cmp::Reverse<(u32, u16)>> = BinaryHeap::new();

        // seed: the constant class and the projection class cost nothing
        let const_rep = canon_rep[0];
        entries.insert(
            const_rep,
            DbStructure {
                nodes: Vec::new(),
                out: (const_rep == 0xFFFF) as u8,
            },
        );
        best_cost[const_rep as usize] = 0;
        heap.push(std::cmp::Reverse((0, const_rep)));
        let proj_rep = canon_rep[PROJ[0] as usize];
        let proj_out = (1..=4u8)
            .flat_map(|r| [r << 1, r << 1 | 1])
            .find(|&code| {
                let t = PROJ[(code >> 1) as usize - 1];
                (if code & 1 != 0 { !t } else { t }) == proj_rep
            })
            .expect("projection class has a one-literal structure");
        entries.insert(
            proj_rep,
            DbStructure {
                nodes: Vec::new(),
                out: proj_out,
            },
        );
        best_cost[proj_rep as usize] = 0;
        heap.push(std::cmp::Reverse((0, proj_rep)));

        while let Some(std::cmp::Reverse((cost, rep))) = heap.pop() {
            if is_settled[rep as usize] {
                continue;
            }
            is_settled[rep as usize] = true;
            settled.push(rep);
            orbits.insert(rep, orbit(rep));
            let struct_a = entries[&rep].clone();

            for &prev in &settled {
                let cost_b = best_cost[prev as usize];
                let bound = cost.max(cost_b);
                let struct_b = entries[&prev].clone();
                for &(w, ref tr_b) in &orbits[&prev] {
                    for a_pol in [false, true] {
                        let ta = if a_pol { !rep } else { rep };
                        let h = ta & w;
                        let c = canon_rep[h as usize];
                        if is_settled[c as usize] || bound + 1 >= best_cost[c as usize] {
                            continue;
                        }
                        // exact union cost via a scratch graph
                        let mut scratch = Aig::new(4);
                        let out_a = instantiate(&mut scratch, &struct_a, &Transform::IDENTITY);
                        let out_a = if a_pol { out_a.compl() } else { out_a };
                        let out_b = instantiate(&mut scratch, &struct_b, tr_b);
                        let top = scratch.add_and(out_a, out_b);
                        let exact = cone_size(&scratch, top);
                        if exact > COST_CAP || exact >= best_cost[c as usize] {
                            continue;
                        }
                        let s = extract(&scratch, top);
                        debug_assert_eq!(s.eval(), h);
                        // store the structure keyed by the class rep,
                        // rewired from h's frame to the rep's frame
                        let tr_h = canon_tr[h as usize];
                        let mut norm = Aig::new(4);
                        let out = instantiate(&mut norm, &s, &invert(&tr_h));
                        let s_rep = extract(&norm, out);
                        debug_assert_eq!(s_rep.eval(), c);
                        debug_assert_eq!(s_rep.cost(), exact);
                        entries.insert(c, s_rep);
                        best_cost[c as usize] = exact;
                        heap.push(std::cmp::Reverse((exact, c)));
                    }
                }
            }
        }

        // classes beyond the cap: factored two-level cover
        let mut reps: Vec<u16> = Vec::new();
        let mut seen = vec![false; 1 << 16];
        for t in 0..=u16::MAX {
            let r = canon_rep[t as usize];
            if !seen[r as usize] {
                seen[r as usize] = true;
                reps.push(r);
            }
        }
        reps.sort_unstable();
        for &r in &reps {
            if entries.contains_key(&r) {
                continue;
            }
            let table = TruthTable::from_u64(4, r as u64);
            let cubes = isop(&table);
            let mut scratch = Aig::new(4);
            let inputs: Vec<Edge> = (0..4).map(|i| scratch.pi_edge(i)).collect();
            let out = build_sop(&mut scratch, &cubes, &inputs);
            let s = extract(&scratch, out);
            debug_assert_eq!(s.eval(), r);
            entries.insert(r, s);
        }

        RewriteDb {
            canon_rep,
            canon_tr,
            entries,
        }
    }

    /// Parse and validate a cached table. Any malformed or stale content
    /// rejects the whole file so the caller rebuilds.
    pub fn load(path: &Path) -> Option<RewriteDb> {
        let text = std::fs::read_to_string(path).ok()?;
        let mut lines = text.lines();
        if lines.next()? != CACHE_HEADER {
            return None;
        }
        let (canon_rep, canon_tr) = canon_tables();
        let mut entries = HashMap::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let rep = u16::from_str_radix(toks.next()?, 16).ok()?;
            let out: u8 = toks.next()?.parse().ok()?;
            let n: usize = toks.next()?.parse().ok()?;
            let mut nodes = Vec::with_capacity(n);
            for _ in 0..n {
                let a: u8 = toks.next()?.parse().ok()?;
                let b: u8 = toks.next()?.parse().ok()?;
                nodes.push((a, b));
            }
            if toks.next().is_some() {
                return None;
            }
            let s = DbStructure { nodes, out };
            if canon_rep[rep as usize] != rep || s.eval() != rep {
                return None;
            }
            entries.insert(rep, s);
        }
        let num_classes = {
            let mut seen = vec![false; 1 << 16];
            let mut count = 0;
            for t in 0..=u16::MAX {
                let r = canon_rep[t as usize];
                if !seen[r as usize] {
                    seen[r as usize] = true;
                    count += 1;
                }
            }
            count
        };
        if entries.len() != num_classes {
            return None;
        }
        Some(RewriteDb {
            canon_rep,
            canon_tr,
            entries,
        })
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut reps: Vec<u16> = self.entries.keys().copied().collect();
        reps.sort_unstable();
        let mut out = String::new();
        out.push_str(CACHE_HEADER);
        out.push('\n');
        for rep in reps {
            let s = &self.entries[&rep];
            out.push_str(&format!("{:04x} {} {}", rep, s.out, s.nodes.len()));
            for &(a, b) in &s.nodes {
                out.push_str(&format!(" {a} {b}"));
            }
            out.push('\n');
        }
        std::fs::write(path, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::npn::apply_transform;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn build_once() -> &'static RewriteDb {
        static BUILT: OnceLock<RewriteDb> = OnceLock::new();
        BUILT.get_or_init(RewriteDb::build)
    }

    #[test]
    fn every_class_has_a_correct_structure() {
        let db = build_once();
        assert_eq!(db.num_classes(), 222);
        for (&rep, s) in &db.entries {
            assert_eq!(s.eval(), rep, "structure mismatch for {rep:#06x}");
            assert_eq!(db.canon_rep[rep as usize], rep);
        }
    }

    #[test]
    fn canon_lookup_matches_search() {
        let db = build_once();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let t: u16 = rng.gen();
            let (rep, tr) = db.canon(t);
            assert_eq!(rep, canonize(t).0);
            assert_eq!(apply_transform(rep, &tr), t);
        }
    }

    #[test]
    fn known_structure_costs() {
        let db = build_once();
        let and2 = db.canon(0x8888).0;
        assert_eq!(db.structure(and2).cost(), 1);
        let xor2 = db.canon(0x6666).0;
        assert_eq!(db.structure(xor2).cost(), 3);
        let maj3 = db.canon(0xE8E8).0;
        assert_eq!(db.structure(maj3).cost(), 4);
        let mux = db.canon(0xD8D8).0;
        assert_eq!(db.structure(mux).cost(), 3);
        // 4-input parity needs 9 nodes, beyond the cap: fallback territory
        let par4 = db.canon(0x6996).0;
        assert!(db.structure(par4).cost() > COST_CAP);
    }

    #[test]
    fn cache_roundtrip() {
        let db = build_once();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("npn4.db");
        db.save(&path).unwrap();
        let loaded = RewriteDb::load(&path).expect("valid cache loads");
        assert_eq!(loaded.entries, db.entries);
    }

    #[test]
    fn corrupt_cache_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("npn4.db");
        std::fs::write(&path, "satforge-npn4 v1\n0000 2 0\n").unwrap();
        assert!(RewriteDb::load(&path).is_none());
        std::fs::write(&path, "other header\n").unwrap();
        assert!(RewriteDb::load(&path).is_none());
    }

    #[test]
    fn instantiate_respects_transform() {
        let db = build_once();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let t: u16 = rng.gen();
            let (rep, tr) = db.canon(t);
            let mut g = Aig::new(4);
            let out = instantiate(&mut g, db.structure(rep), &tr);
            g.add_po(out);
            let got = g.po_tables().unwrap()[0].as_u64() as u16;
            assert_eq!(got, t, "instantiation of {rep:#06x} missed {t:#06x}");
        }
    }
}
