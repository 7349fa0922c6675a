//! ASCII AIGER ("aag") reading and writing. Combinational only: a nonzero
//! latch count is rejected as unsupported rather than misread.
//!
//! AIGER literals are `2*var (+1 when inverted)` with literal 0 = constant
//! false, matching this crate's edge encoding except that AIGER variable
//! numbering is file-specific; the parser remaps to dense ids.

use std::collections::HashMap;
use std::fmt;

use crate::aig::{Aig, Edge};

#[derive(Debug, PartialEq, Eq)]
pub enum AigerError {
    BadHeader { line: usize },
    UnsupportedLatches { count: usize },
    BadLiteral { line: usize, token: String },
    DanglingLiteral { lit: u32 },
    DuplicateDefinition { var: u32 },
    Truncated,
}

impl fmt::Display for AigerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AigerError::BadHeader { line } => write!(f, "line {line}: malformed aag header"),
            AigerError::UnsupportedLatches { count } => {
                write!(f, "{count} latches present; only combinational aag is supported")
            }
            AigerError::BadLiteral { line, token } => {
                write!(f, "line {line}: bad literal '{token}'")
            }
            AigerError::DanglingLiteral { lit } => {
                write!(f, "literal {lit} references an undefined variable")
            }
            AigerError::DuplicateDefinition { var } => {
                write!(f, "variable {var} defined more than once")
            }
            AigerError::Truncated => write!(f, "file ends before all declared sections"),
        }
    }
}

impl std::error::Error for AigerError {}

pub fn parse_aiger(text: &str) -> Result<Aig, AigerError> {
    let mut lines = text.lines().enumerate();
    let (hline, header) = loop {
        match lines.next() {
            Some((n, l)) if !l.trim().is_empty() => break (n + 1, l.trim().to_string()),
            Some(_) => continue,
            None => return Err(AigerError::BadHeader { line: 1 }),
        }
    };
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 6 || toks[0] != "aag" {
        return Err(AigerError::BadHeader { line: hline });
    }
    let parse_count = |t: &str| -> Result<usize, AigerError> {
        t.parse().map_err(|_| AigerError::BadHeader { line: hline })
    };
    let max_var = parse_count(toks[1])?;
    let num_in = parse_count(toks[2])?;
    let num_latch = parse_count(toks[3])?;
    let num_out = parse_count(toks[4])?;
    let num_and = parse_count(toks[5])?;
    if num_latch > 0 {
        return Err(AigerError::UnsupportedLatches { count: num_latch });
    }

    let mut next_data = || -> Result<(usize, String), AigerError> {
        for (n, l) in lines.by_ref() {
            let t = l.trim();
            if !t.is_empty() {
                return Ok((n + 1, t.to_string()));
            }
        }
        Err(AigerError::Truncated)
    };
    let lit_of = |line: usize, tok: &str| -> Result<u32, AigerError> {
        let v: u32 = tok.parse().map_err(|_| AigerError::BadLiteral {
            line,
            token: tok.to_string(),
        })?;
        if (v >> 1) as usize > max_var {
            return Err(AigerError::BadLiteral {
                line,
                token: tok.to_string(),
            });
        }
        Ok(v)
    };

    let mut input_vars: Vec<u32> = Vec::with_capacity(num_in);
    for _ in 0..num_in {
        let (n, l) = next_data()?;
        let lit = lit_of(n, &l)?;
        if lit & 1 == 1 || lit == 0 {
            return Err(AigerError::BadLiteral { line: n, token: l });
        }
        let var = lit >> 1;
        if input_vars.contains(&var) {
            return Err(AigerError::DuplicateDefinition { var });
        }
        input_vars.push(var);
    }
    let mut output_lits: Vec<u32> = Vec::with_capacity(num_out);
    for _ in 0..num_out {
        let (n, l) = next_data()?;
        output_lits.push(lit_of(n, &l)?);
    }
    let mut and_defs: HashMap<u32, (u32, u32)> = HashMap::new();
    let mut and_order: Vec<u32> = Vec::with_capacity(num_and);
    for _ in 0..num_and {
        let (n, l) = next_data()?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(AigerError::BadLiteral { line: n, token: l });
        }
        let lhs = lit_of(n, toks[0])?;
        let rhs0 = lit_of(n, toks[1])?;
        let rhs1 = lit_of(n, toks[2])?;
        if lhs & 1 == 1 || lhs == 0 {
            return Err(AigerError::BadLiteral {
                line: n,
                token: toks[0].to_string(),
            });
        }
        let var = lhs >> 1;
        if input_vars.contains(&var) || and_defs.insert(var, (rhs0, rhs1)).is_some() {
            return Err(AigerError::DuplicateDefinition { var });
        }
        and_order.push(var);
    }
    // remaining lines are the optional symbol table / comment section

    let mut g = Aig::new(num_in);
    let mut edge_of: HashMap<u32, Edge> = HashMap::new();
    edge_of.insert(0, Edge::FALSE);
    for (i, &v) in input_vars.iter().enumerate() {
        edge_of.insert(v, g.pi_edge(i));
    }
    // definitions may reference each other in any order; resolve iteratively
    let resolve = |g: &mut Aig,
                       edge_of: &mut HashMap<u32, Edge>,
                       root: u32|
     -> Result<Edge, AigerError> {
        let mut stack = vec![root];
        while let Some(&var) = stack.last() {
            if edge_of.contains_key(&var) {
                stack.pop();
                continue;
            }
            let (r0, r1) = *and_defs
                .get(&var)
                .ok_or(AigerError::DanglingLiteral { lit: var << 1 })?;
            let d0 = edge_of.get(&(r0 >> 1)).copied();
            let d1 = edge_of.get(&(r1 >> 1)).copied();
            match (d0, d1) {
                (Some(e0), Some(e1)) => {
                    let a = e0.with_compl(e0.is_compl() ^ (r0 & 1 == 1));
                    let b = e1.with_compl(e1.is_compl() ^ (r1 & 1 == 1));
                    let e = g.add_and(a, b);
                    edge_of.insert(var, e);
                    stack.pop();
                }
                _ => {
                    if d0.is_none() {
                        if stack.contains(&(r0 >> 1)) && !edge_of.contains_key(&(r0 >> 1)) {
                            // cyclic definition presents as dangling
                            return Err(AigerError::DanglingLiteral { lit: r0 });
                        }
                        stack.push(r0 >> 1);
                    }
                    if d1.is_none() {
                        if stack.contains(&(r1 >> 1)) && !edge_of.contains_key(&(r1 >> 1)) {
                            return Err(AigerError::DanglingLiteral { lit: r1 });
                        }
                        stack.push(r1 >> 1);
                    }
                }
            }
        }
        Ok(edge_of[&root])
    };
    for &var in &and_order {
        resolve(&mut g, &mut edge_of, var)?;
    }
    for lit in output_lits {
        let var = lit >> 1;
        let e = *edge_of
            .get(&var)
            .ok_or(AigerError::DanglingLiteral { lit })?;
        g.add_po(e.with_compl(e.is_compl() ^ (lit & 1 == 1)));
    }
    Ok(g)
}

pub fn emit_aiger(g: &Aig) -> String {
    let max_var = g.num_nodes() - 1;
    let mut out = format!(
        "aag {} {} 0 {} {}\n",
        max_var,
        g.num_pis(),
        g.num_pos(),
        g.num_ands()
    );
    for i in 0..g.num_pis() {
        out.push_str(&format!("{}\n", g.pi_edge(i).raw()));
    }
    for po in g.pos() {
        out.push_str(&format!("{}\n", po.raw()));
    }
    for (id, a, b) in g.iter_ands() {
        out.push_str(&format!("{} {} {}\n", id << 1, a.raw(), b.raw()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::Aig;

    #[test]
    fn parses_single_and() {
        let g = parse_aiger("aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n").unwrap();
        assert_eq!(g.num_pis(), 2);
        assert_eq!(g.num_ands(), 1);
        assert_eq!(g.po_tables().unwrap()[0].as_u64(), 0b1000);
    }

    #[test]
    fn odd_output_literal_inverts() {
        let g = parse_aiger("aag 3 2 0 1 1\n2\n4\n7\n6 2 4\n").unwrap();
        assert_eq!(g.po_tables().unwrap()[0].as_u64(), 0b0111);
    }

    #[test]
    fn latches_rejected() {
        let err = parse_aiger("aag 1 0 1 0 0\n2 3\n").unwrap_err();
        assert_eq!(err, AigerError::UnsupportedLatches { count: 1 });
    }

    #[test]
    fn dangling_literal_rejected() {
        // and def references var 5 which is neither input nor defined
        let err = parse_aiger("aag 5 1 0 1 1\n2\n4\n4 2 10\n").unwrap_err();
        assert!(matches!(err, AigerError::DanglingLiteral { .. }));
    }

    #[test]
    fn out_of_order_definitions() {
        // node 3 defined after node 2 uses it is still resolvable
        let text = "aag 4 2 0 1 2\n2\n4\n8\n8 6 2\n6 2 4\n";
        let g = parse_aiger(text).unwrap();
        // po = (a & b) & a = a & b
        assert_eq!(g.po_tables().unwrap()[0].as_u64(), 0b1000);
    }

    #[test]
    fn constant_outputs() {
        let g = parse_aiger("aag 0 0 0 2 0\n0\n1\n").unwrap();
        let t = g.po_tables().unwrap();
        assert!(t[0].is_constant(false));
        assert!(t[1].is_constant(true));
    }

    #[test]
    fn roundtrip_semantic() {
        let mut g = Aig::new(3);
        let x = g.add_xor(g.pi_edge(0), g.pi_edge(1));
        let m = g.add_mux(x, g.pi_edge(2), g.pi_edge(0).compl());
        g.add_po(m.compl());
        g.add_po(x);
        let text = emit_aiger(&g);
        let back = parse_aiger(&text).unwrap();
        assert_eq!(back.po_tables().unwrap(), g.po_tables().unwrap());
        // second round is byte-stable
        assert_eq!(emit_aiger(&back), text);
    }

    #[test]
    fn symbol_table_ignored() {
        let text = "aag 3 2 0 1 1\n2\n4\n6\n6 2 4\ni0 alpha\no0 out\nc\nnote\n";
        let g = parse_aiger(text).unwrap();
        assert_eq!(g.num_ands(), 1);
    }
}
