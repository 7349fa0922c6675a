//! Recovery of gate structure from a CNF formula.
//!
//! Many formulas are flattened circuit descriptions: each internal signal
//! shows up as a variable whose clauses pin it to a function of other
//! signals. This module scans for two such clause groups, rebuilds the
//! matched variables as AIG nodes, and conjoins the leftover clauses into
//! the single output. The result is equisatisfiable with the input: models
//! of the formula correspond one-to-one with input assignments driving the
//! output true, because every defined variable is forced to its gate value.
//!
//! Recognized groups, for literals x and y over variables distinct from v:
//!
//! * conjunction, with l being v or its negation:
//!   (!l | x), (!l | y), (l | !x | !y)  defines  l = x & y
//! * parity, four ternary clauses over three variables whose negation
//!   counts are all odd (v = x ^ y) or all even (v = !(x ^ y))

use std::collections::HashMap;

use crate::aig::{Aig, Edge};
use crate::cnf::{Cnf, Lit};
use crate::synth::balance::balance;
use crate::synth::factor::{and_tree, or_tree};
use crate::synth::rewrite::rewrite;

/// A recovered circuit together with its input correspondence.
#[derive(Debug, Clone)]
pub struct Recovered {
    pub aig: Aig,
    /// Maps each input position to the formula variable it stands for.
    pub pi_vars: Vec<u32>,
}

/// One gate definition extracted from the clause set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Def {
    /// v = (x & y) ^ flip
    And { x: Lit, y: Lit, flip: bool },
    /// v = x ^ y ^ flip
    Xor { x: u32, y: u32, flip: bool },
}

impl Def {
    fn input_vars(&self) -> (u32, u32) {
        match *self {
            Def::And { x, y, .. } => (x.var(), y.var()),
            Def::Xor { x, y, .. } => (x, y),
        }
    }
}

/// A definition candidate plus the clauses it would consume.
struct Candidate {
    var: u32,
    def: Def,
    clauses: [usize; 4],
    num_clauses: usize,
}

/// Negation parities whose four ternary clauses pin the triple to even
/// (sum = 0) respectively odd (sum = 1) parity. Pattern bit i is set when
/// the literal of the i-th triple variable is negated.
const ODD_PATTERNS: [usize; 4] = [0b001, 0b010, 0b100, 0b111];
const EVEN_PATTERNS: [usize; 4] = [0b000, 0b011, 0b101, 0b110];

fn binary_key(a: Lit, b: Lit) -> (i32, i32) {
    let (a, b) = (a.to_dimacs(), b.to_dimacs());
    if a <= b { (a, b) } else { (b, a) }
}

/// Collect every definition the clause set supports, parity gates first,
/// each group ordered by defined variable.
fn harvest(cnf: &Cnf) -> Vec<Candidate> {
    let mut binaries: HashMap<(i32, i32), usize> = HashMap::new();
    let mut triples: HashMap<[u32; 3], [usize; 8]> = HashMap::new();
    for (idx, clause) in cnf.clauses().iter().enumerate() {
        if cnf.is_tautological(idx) {
            continue;
        }
        match clause.len() {
            2 => {
                binaries.entry(binary_key(clause[0], clause[1])).or_insert(idx);
            }
            3 => {
                let mut vars = [clause[0].var(), clause[1].var(), clause[2].var()];
                vars.sort_unstable();
                let mut pattern = 0usize;
                for lit in clause {
                    let pos = vars.iter().position(|&v| v == lit.var()).unwrap();
                    if lit.is_negated() {
                        pattern |= 1 << pos;
                    }
                }
                let slots = triples.entry(vars).or_insert([usize::MAX; 8]);
                if slots[pattern] == usize::MAX {
                    slots[pattern] = idx;
                }
            }
            _ => {}
        }
    }

    let mut xors = Vec::new();
    let mut sorted_triples: Vec<_> = triples.iter().collect();
    sorted_triples.sort_unstable_by_key(|(vars, _)| **vars);
    for (&vars, slots) in sorted_triples {
        for (patterns, flip) in [(ODD_PATTERNS, false), (EVEN_PATTERNS, true)] {
            if patterns.iter().any(|&p| slots[p] == usize::MAX) {
                continue;
            }
            let consumed = [
                slots[patterns[0]],
                slots[patterns[1]],
                slots[patterns[2]],
                slots[patterns[3]],
            ];
            for out in 0..3 {
                let (x, y) = match out {
                    0 => (vars[1], vars[2]),
                    1 => (vars[0], vars[2]),
                    _ => (vars[0], vars[1]),
                };
                xors.push(Candidate {
                    var: vars[out],
                    def: Def::Xor { x, y, flip },
                    clauses: consumed,
                    num_clauses: 4,
                });
            }
        }
    }
    xors.sort_by_key(|c| (c.var, c.def.input_vars()));

    let mut ands = Vec::new();
    for (idx, clause) in cnf.clauses().iter().enumerate() {
        if cnf.is_tautological(idx) || clause.len() != 3 {
            continue;
        }
        for pos in 0..3 {
            let l = clause[pos];
            let x = !clause[(pos + 1) % 3];
            let y = !clause[(pos + 2) % 3];
            if x.var() == l.var() || y.var() == l.var() {
                continue;
            }
            let b1 = binaries.get(&binary_key(!l, x));
            let b2 = binaries.get(&binary_key(!l, y));
            if let (Some(&b1), Some(&b2)) = (b1, b2) {
                let (x, y) = if x.to_dimacs().abs() <= y.to_dimacs().abs() {
                    (x, y)
                } else {
                    (y, x)
                };
                ands.push(Candidate {
                    var: l.var(),
                    def: Def::And { x, y, flip: l.is_negated() },
                    clauses: [idx, b1, b2, usize::MAX],
                    num_clauses: 3,
                });
            }
        }
    }
    ands.sort_by_key(|c| {
        let (x, y, flip) = match c.def {
            Def::And { x, y, flip } => (x.to_dimacs(), y.to_dimacs(), flip),
            Def::Xor { .. } => unreachable!(),
        };
        (c.var, x, y, flip)
    });

    xors.extend(ands);
    xors
}

/// True when `target` is reachable from `from` along chosen definitions.
fn reaches(defs: &[Option<Def>], from: u32, target: u32) -> bool {
    let mut stack = vec![from];
    let mut seen = vec![false; defs.len()];
    while let Some(v) = stack.pop() {
        if v == target {
            return true;
        }
        if seen[v as usize] {
            continue;
        }
        seen[v as usize] = true;
        if let Some(def) = defs[v as usize] {
            let (a, b) = def.input_vars();
            stack.push(a);
            stack.push(b);
        }
    }
    false
}

/// Build the edge for a defined variable, resolving its inputs first.
/// Iterative so definition chains cannot overflow the stack.
fn resolve(aig: &mut Aig, edges: &mut [Option<Edge>], defs: &[Option<Def>], var: u32) -> Edge {
    let mut stack = vec![var];
    while let Some(&v) = stack.last() {
        if edges[v as usize].is_some() {
            stack.pop();
            continue;
        }
        let def = defs[v as usize].expect("unresolved variable without a definition");
        let (a, b) = def.input_vars();
        let need_a = edges[a as usize].is_none();
        let need_b = edges[b as usize].is_none();
        if need_a {
            stack.push(a);
        }
        if need_b {
            stack.push(b);
        }
        if need_a || need_b {
            continue;
        }
        let ea = edges[a as usize].unwrap();
        let eb = edges[b as usize].unwrap();
        let e = match def {
            Def::And { x, y, flip } => {
                let ex = ea.with_compl(ea.is_compl() ^ x.is_negated());
                let ey = eb.with_compl(eb.is_compl() ^ y.is_negated());
                let g = aig.add_and(ex, ey);
                g.with_compl(g.is_compl() ^ flip)
            }
            Def::Xor { flip, .. } => {
                let g = aig.add_xor(ea, eb);
                g.with_compl(g.is_compl() ^ flip)
            }
        };
        edges[v as usize] = Some(e);
        stack.pop();
    }
    edges[var as usize].unwrap()
}

/// Rebuild a formula as a single-output AIG.
///
/// Inputs are the variables that received no definition, in ascending
/// order. Clauses not consumed by a definition are conjoined as balanced
/// disjunctions; a formula with no remaining clauses yields the constant
/// true output and an empty clause yields the constant false output.
pub fn recover(cnf: &Cnf) -> Recovered {
    let num_vars = cnf.num_vars() as usize;
    let mut defs: Vec<Option<Def>> = vec![None; num_vars + 1];
    let mut consumed = vec![false; cnf.num_clauses()];

    for cand in harvest(cnf) {
        if defs[cand.var as usize].is_some() {
            continue;
        }
        let (a, b) = cand.def.input_vars();
        if a == cand.var || b == cand.var {
            continue;
        }
        if reaches(&defs, a, cand.var) || reaches(&defs, b, cand.var) {
            continue;
        }
        defs[cand.var as usize] = Some(cand.def);
        for &idx in &cand.clauses[..cand.num_clauses] {
            consumed[idx] = true;
        }
    }

    let pi_vars: Vec<u32> = (1..=num_vars as u32)
        .filter(|&v| defs[v as usize].is_none())
        .collect();
    let mut aig = Aig::new(pi_vars.len());
    let mut edges: Vec<Option<Edge>> = vec![None; num_vars + 1];
    for (i, &v) in pi_vars.iter().enumerate() {
        edges[v as usize] = Some(aig.pi_edge(i));
    }

    let mut terms = Vec::new();
    for (idx, clause) in cnf.clauses().iter().enumerate() {
        if consumed[idx] || cnf.is_tautological(idx) {
            continue;
        }
        let mut lits = Vec::with_capacity(clause.len());
        for lit in clause {
            let e = resolve(&mut aig, &mut edges, &defs, lit.var());
            lits.push(e.with_compl(e.is_compl() ^ lit.is_negated()));
        }
        terms.push(or_tree(&mut aig, &lits));
    }
    let po = and_tree(&mut aig, &terms);
    aig.add_po(po);

    Recovered { aig, pi_vars }
}

/// Light cleanup applied right after recovery: restructure for depth,
/// strip local redundancy, restructure again.
pub fn normalize(g: &Aig) -> Aig {
    let g = balance(g);
    let g = rewrite(&g, false);
    balance(&g)
}
