//! CNF generation for AIGs and LUT netlists.
//!
//! Both encoders introduce one variable per input and one per gate or
//! cell, assert every primary output true, and return the variable
//! correspondence so models can be projected back onto the source
//! circuit. Satisfiability therefore means "some input assignment drives
//! all outputs to 1".

use crate::aig::{Aig, Edge, NodeKind};
use crate::cnf::{Cnf, Lit};
use crate::lut::LutNetlist;
use crate::truth::prime_cover;

/// Variable correspondence for an encoded circuit.
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    /// Input position -> CNF variable.
    pub pi_vars: Vec<u32>,
    /// Gate position (AND nodes or cells in id order) -> CNF variable.
    pub cell_vars: Vec<u32>,
    /// Unit literals asserting the outputs; constant outputs excluded.
    pub po_assertions: Vec<Lit>,
}

/// Tseitin encoding of an AIG.
///
/// Per AND node c = a & b the clauses are (!a | !b | c), (a | !c),
/// (b | !c), with literal polarities following the edge inversions; each
/// primary output contributes one unit clause.
pub fn aig_to_cnf(g: &Aig) -> (Cnf, VarMap) {
    let mut map = VarMap::default();
    let mut var_of = vec![0u32; g.num_nodes()];
    let mut next = 0u32;
    for i in 0..g.num_pis() {
        next += 1;
        var_of[g.pi_edge(i).node() as usize] = next;
        map.pi_vars.push(next);
    }
    for (id, _, _) in g.iter_ands() {
        next += 1;
        var_of[id as usize] = next;
        map.cell_vars.push(next);
    }

    let mut cnf = Cnf::new(next);
    let lit_of = |e: Edge| Lit::new(var_of[e.node() as usize], e.is_compl());
    for (id, a, b) in g.iter_ands() {
        let c = Lit::new(var_of[id as usize], false);
        let (la, lb) = (lit_of(a), lit_of(b));
        cnf.add_clause(vec![!la, !lb, c]);
        cnf.add_clause(vec![la, !c]);
        cnf.add_clause(vec![lb, !c]);
    }
    for &po in g.pos() {
        match g.node(po.node()) {
            NodeKind::Const0 if po.is_compl() => {}
            NodeKind::Const0 => cnf.add_clause(Vec::new()),
            _ => {
                let unit = lit_of(po);
                map.po_assertions.push(unit);
                cnf.add_clause(vec![unit]);
            }
        }
    }
    (cnf, map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LutEncoding {
    /// Clauses from irredundant prime covers of each cell's on and off
    /// sets; never more clauses than the per-row form.
    PrimeCover,
    /// Reference encoding: one clause per truth table row.
    PerRow,
}

/// Clause generation for a mapped netlist.
pub fn lut_to_cnf(n: &LutNetlist, encoding: LutEncoding) -> (Cnf, VarMap) {
    let mut map = VarMap::default();
    // Ids are contiguous: inputs first, then cells.
    for i in 0..n.num_ids() {
        let var = i as u32 + 1;
        if i < n.num_pis() {
            map.pi_vars.push(var);
        } else {
            map.cell_vars.push(var);
        }
    }
    let mut cnf = Cnf::new(n.num_ids() as u32);

    for (i, cell) in n.cells().iter().enumerate() {
        let y = Lit::new(map.cell_vars[i], false);
        let in_lit = |v: usize, positive: bool| Lit::new(v as u32 + 1, !positive);
        match encoding {
            LutEncoding::PrimeCover => {
                for (cover, out) in [
                    (prime_cover(&cell.table), y),
                    (prime_cover(&cell.table.not()), !y),
                ] {
                    for cube in cover {
                        let mut clause = Vec::new();
                        for (j, &inp) in cell.inputs.iter().enumerate() {
                            if cube.pos >> j & 1 == 1 {
                                clause.push(!in_lit(inp, true));
                            } else if cube.neg >> j & 1 == 1 {
                                clause.push(!in_lit(inp, false));
                            }
                        }
                        clause.push(out);
                        cnf.add_clause(clause);
                    }
                }
            }
            LutEncoding::PerRow => {
                for row in 0..cell.table.num_bits() {
                    let mut clause: Vec<Lit> = cell
                        .inputs
                        .iter()
                        .enumerate()
                        .map(|(j, &inp)| !in_lit(inp, row >> j & 1 == 1))
                        .collect();
                    clause.push(if cell.table.bit(row) { y } else { !y });
                    cnf.add_clause(clause);
                }
            }
        }
    }
    for &po in n.pos() {
        let unit = Lit::new(po as u32 + 1, false);
        map.po_assertions.push(unit);
        cnf.add_clause(vec![unit]);
    }
    (cnf, map)
}
