//! Algebraic factoring of two-level covers into AND-graph structures.
//!
//! `build_sop` turns a cube cover into gates through recursive division by
//! the most frequent literal: F = l*Q + R. The builder trait lets the same
//! routine target both immutable-construction and in-place graphs.

use crate::aig::{Aig, Edge};
use crate::synth::work::WorkAig;
use crate::truth::Cube;

/// Graph sink for factored structures. `add_and` must fold constants and
/// hash structurally, as the graph types here do.
pub trait AndBuilder {
    fn add_and(&mut self, a: Edge, b: Edge) -> Edge;

    fn add_or(&mut self, a: Edge, b: Edge) -> Edge {
        self.add_and(a.compl(), b.compl()).compl()
    }
}

impl AndBuilder for Aig {
    fn add_and(&mut self, a: Edge, b: Edge) -> Edge {
        Aig::add_and(self, a, b)
    }
}

impl AndBuilder for WorkAig {
    fn add_and(&mut self, a: Edge, b: Edge) -> Edge {
        WorkAig::add_and(self, a, b)
    }
}

/// Balanced conjunction of `edges`. Empty input is the constant true.
pub(crate) fn and_tree(b: &mut impl AndBuilder, edges: &[Edge]) -> Edge {
    match edges.len() {
        0 => Edge::TRUE,
        1 => edges[0],
        n => {
            let (lo, hi) = edges.split_at(n / 2);
            let l = and_tree(b, lo);
            let r = and_tree(b, hi);
            b.add_and(l, r)
        }
    }
}

/// Balanced disjunction of `edges`. Empty input is the constant false.
pub(crate) fn or_tree(b: &mut impl AndBuilder, edges: &[Edge]) -> Edge {
    match edges.len() {
        0 => Edge::FALSE,
        1 => edges[0],
        n => {
            let (lo, hi) = edges.split_at(n / 2);
            let l = or_tree(b, lo);
            let r = or_tree(b, hi);
            b.add_or(l, r)
        }
    }
}

fn cube_edges(cube: &Cube, inputs: &[Edge]) -> Vec<Edge> {
    let mut edges = Vec::new();
    for (v, &input) in inputs.iter().enumerate() {
        if cube.pos >> v & 1 != 0 {
            edges.push(input);
        } else if cube.neg >> v & 1 != 0 {
            edges.push(input.compl());
        }
    }
    edges
}

/// Most frequent literal over the cover, as (var, negated). Ties prefer the
/// lowest variable, positive polarity. None when every literal is unique.
fn best_literal(cubes: &[Cube], num_vars: usize) -> Option<(usize, bool)> {
    let mut counts = vec![[0u32; 2]; num_vars];
    for cube in cubes {
        for (v, cnt) in counts.iter_mut().enumerate() {
            if cube.pos >> v & 1 != 0 {
                cnt[0] += 1;
            } else if cube.neg >> v & 1 != 0 {
                cnt[1] += 1;
            }
        }
    }
    let mut best = None;
    let mut best_count = 1;
    for (v, cnt) in counts.iter().enumerate() {
        for (pol, &c) in cnt.iter().enumerate() {
            if c > best_count {
                best_count = c;
                best = Some((v, pol == 1));
            }
        }
    }
    best
}

fn factor_rec(b: &mut impl AndBuilder, cubes: &[Cube], inputs: &[Edge]) -> Edge {
    if cubes.is_empty() {
        return Edge::FALSE;
    }
    if cubes.iter().any(|c| c.num_literals() == 0) {
        return Edge::TRUE;
    }
    if cubes.len() == 1 {
        return and_tree(b, &cube_edges(&cubes[0], inputs));
    }
    match best_literal(cubes, inputs.len()) {
        None => {
            // no sharable literal: plain disjunction of the cube conjunctions
            let terms: Vec<Edge> = cubes
                .iter()
                .map(|c| {
                    let edges = cube_edges(c, inputs);
                    and_tree(b, &edges)
                })
                .collect();
            or_tree(b, &terms)
        }
        Some((v, neg)) => {
            let bit = 1u32 << v;
            let mut quotient = Vec::new();
            let mut remainder = Vec::new();
            for c in cubes {
                let has = if neg { c.neg & bit != 0 } else { c.pos & bit != 0 };
                if has {
                    quotient.push(Cube {
                        pos: c.pos & !bit,
                        neg: c.neg & !bit,
                    });
                } else {
                    remainder.push(*c);
                }
            }
            let lit = if neg { inputs[v].compl() } else { inputs[v] };
            let q = factor_rec(b, &quotient, inputs);
            let lq = b.add_and(lit, q);
            if remainder.is_empty() {
                lq
            } else {
                let r = factor_rec(b, &remainder, inputs);
                b.add_or(lq, r)
            }
        }
    }
}

/// Build the function of the cube cover over `inputs` into `b`, returning
/// its output edge. The cover is interpreted as a sum of products.
pub fn build_sop(b: &mut impl AndBuilder, cubes: &[Cube], inputs: &[Edge]) -> Edge {
    assert!(
        inputs.len() <= 32,
        "cube masks support at most 32 variables"
    );
    factor_rec(b, cubes, inputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truth::{cover_to_table, isop, TruthTable};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_cover(cubes: &[Cube], num_vars: usize) {
        let mut g = Aig::new(num_vars);
        let inputs: Vec<Edge> = (0..num_vars).map(|i| g.pi_edge(i)).collect();
        let out = build_sop(&mut g, cubes, &inputs);
        g.add_po(out);
        let want = cover_to_table(cubes, num_vars);
        assert_eq!(g.po_tables().unwrap()[0], want);
    }

    #[test]
    fn empty_cover_is_false() {
        let mut g = Aig::new(2);
        let inputs = [g.pi_edge(0), g.pi_edge(1)];
        let out = build_sop(&mut g, &[], &inputs);
        assert_eq!(out, Edge::FALSE);
    }

    #[test]
    fn tautology_cube_is_true() {
        let mut g = Aig::new(2);
        let inputs = [g.pi_edge(0), g.pi_edge(1)];
        let out = build_sop(&mut g, &[Cube::TAUTOLOGY], &inputs);
        assert_eq!(out, Edge::TRUE);
    }

    #[test]
    fn shared_literal_is_factored_out() {
        // ab + ac = a(b + c): two AND nodes instead of three
        let cubes = [
            Cube { pos: 0b011, neg: 0 },
            Cube { pos: 0b101, neg: 0 },
        ];
        let mut g = Aig::new(3usize);
        let inputs: Vec<Edge> = (0..3usize).map(|i| g.pi_edge(i)).collect();
        let out = build_sop(&mut g, &cubes, &inputs);
        g.add_po(out);
        assert_eq!(g.num_ands(), 2);
        check_cover(&cubes, 3);
    }

    #[test]
    fn single_cube_builds_conjunction() {
        let cubes = [Cube {
            pos: 0b1010,
            neg: 0b0101,
        }];
        check_cover(&cubes, 4);
    }

    #[test]
    fn random_covers_match_their_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let num_vars = rng.gen_range(1..=8usize);
            let num_cubes = rng.gen_range(0..=6usize);
            let mut cubes = Vec::new();
            for _ in 0..num_cubes {
                let mut pos = 0u32;
                let mut neg = 0u32;
                for v in 0..num_vars {
                    match rng.gen_range(0..3) {
                        0 => pos |= 1 << v,
                        1 => neg |= 1 << v,
                        _ => {}
                    }
                }
                cubes.push(Cube { pos, neg });
            }
            check_cover(&cubes, num_vars);
        }
    }

    #[test]
    fn isop_roundtrip_through_factoring() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let num_vars = rng.gen_range(1..=6usize);
            let mut t = TruthTable::constant(num_vars, false);
            for idx in 0..(1usize << num_vars) {
                if rng.gen_bool(0.5) {
                    t.set_bit(idx, true);
                }
            }
            let cubes = isop(&t);
            let mut g = Aig::new(num_vars);
            let inputs: Vec<Edge> = (0..num_vars).map(|i| g.pi_edge(i)).collect();
            let out = build_sop(&mut g, &cubes, &inputs);
            g.add_po(out);
            assert_eq!(g.po_tables().unwrap()[0], t);
        }
    }
}
