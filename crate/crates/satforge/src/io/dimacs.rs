//! DIMACS CNF reading and writing.
//!
//! Emission writes one clause per line in original variable numbering.
//! Comment lines of the form `c pi <pi-index> <cnf-var>` and
//! `c po <cnf-var>` carry the circuit variable map so external solvers'
//! models can be projected back onto circuit inputs.

use std::fmt;

use crate::cnf::{Cnf, Lit};

/// PI/PO variable-map sidecar carried in DIMACS comments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sidecar {
    /// `(aig pi index, cnf variable)` pairs.
    pub pi_vars: Vec<(usize, u32)>,
    /// CNF variables asserted as primary outputs.
    pub po_vars: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct DimacsDoc {
    pub cnf: Cnf,
    pub sidecar: Sidecar,
    /// Header/body disagreements; the body wins.
    pub warnings: Vec<String>,
}

#[derive(Debug, PartialEq, Eq)]
pub enum DimacsError {
    MissingHeader,
    BadHeader { line: usize },
    BadToken { line: usize, token: String },
    LitOutOfRange { line: usize, lit: i64 },
}

impl fmt::Display for DimacsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DimacsError::MissingHeader => write!(f, "missing 'p cnf' header"),
            DimacsError::BadHeader { line } => write!(f, "line {line}: malformed header"),
            DimacsError::BadToken { line, token } => {
                write!(f, "line {line}: bad token '{token}'")
            }
            DimacsError::LitOutOfRange { line, lit } => {
                write!(f, "line {line}: literal {lit} outside declared variable range")
            }
        }
    }
}

impl std::error::Error for DimacsError {}

pub fn parse_dimacs(text: &str) -> Result<DimacsDoc, DimacsError> {
    let mut header: Option<(u32, usize)> = None;
    let mut sidecar = Sidecar::default();
    let mut warnings = Vec::new();
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut current: Vec<Lit> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('c') {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            match toks.as_slice() {
                ["pi", idx, var] => {
                    if let (Ok(i), Ok(v)) = (idx.parse::<usize>(), var.parse::<u32>()) {
                        sidecar.pi_vars.push((i, v));
                    }
                }
                ["po", var] => {
                    if let Ok(v) = var.parse::<u32>() {
                        sidecar.po_vars.push(v);
                    }
                }
                _ => {}
            }
            continue;
        }
        if trimmed.starts_with('p') {
            let toks: Vec<&str> = trimmed.split_whitespace().collect();
            if toks.len() != 4 || toks[1] != "cnf" {
                return Err(DimacsError::BadHeader { line });
            }
            let nv: u32 = toks[2]
                .parse()
                .map_err(|_| DimacsError::BadHeader { line })?;
            let nc: usize = toks[3]
                .parse()
                .map_err(|_| DimacsError::BadHeader { line })?;
            header = Some((nv, nc));
            continue;
        }
        let (num_vars, _) = header.ok_or(DimacsError::MissingHeader)?;
        for tok in trimmed.split_whitespace() {
            let value: i64 = tok.parse().map_err(|_| DimacsError::BadToken {
                line,
                token: tok.to_string(),
            })?;
            if value == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                if value.unsigned_abs() > num_vars as u64 {
                    return Err(DimacsError::LitOutOfRange { line, lit: value });
                }
                current.push(Lit::from_dimacs(value as i32).unwrap());
            }
        }
    }
    let (num_vars, declared) = header.ok_or(DimacsError::MissingHeader)?;
    if !current.is_empty() {
        warnings.push("final clause not 0-terminated".to_string());
        clauses.push(current);
    }
    if clauses.len() != declared {
        warnings.push(format!(
            "header declares {declared} clauses, body has {}",
            clauses.len()
        ));
    }
    let mut cnf = Cnf::new(num_vars);
    for c in clauses {
        cnf.add_clause(c);
    }
    Ok(DimacsDoc {
        cnf,
        sidecar,
        warnings,
    })
}

pub fn emit_dimacs(cnf: &Cnf, sidecar: Option<&Sidecar>) -> String {
    let mut out = String::new();
    out.push_str(&format!("p cnf {} {}\n", cnf.num_vars(), cnf.num_clauses()));
    if let Some(sc) = sidecar {
        for &(i, v) in &sc.pi_vars {
            out.push_str(&format!("c pi {i} {v}\n"));
        }
        for &v in &sc.po_vars {
            out.push_str(&format!("c po {v}\n"));
        }
    }
    for clause in cnf.clauses() {
        for lit in clause {
            out.push_str(&format!("{} ", lit.to_dimacs()));
        }
        out.push_str("0\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_basic_file() {
        let doc = parse_dimacs("p cnf 3 2\n1 -2 0\n2 3 0\n").unwrap();
        assert_eq!(doc.cnf.num_vars(), 3);
        assert_eq!(
            doc.cnf.clauses(),
            &[
                vec![Lit::positive(1), Lit::negative(2)],
                vec![Lit::positive(2), Lit::positive(3)],
            ]
        );
        assert!(doc.warnings.is_empty());
    }

    #[test]
    fn empty_clause_marker() {
        let doc = parse_dimacs("p cnf 1 1\n0\n").unwrap();
        assert_eq!(doc.cnf.num_clauses(), 1);
        assert!(doc.cnf.clauses()[0].is_empty());
        assert_eq!(doc.cnf.brute_force(), None);
    }

    #[test]
    fn body_wins_on_clause_count() {
        let doc = parse_dimacs("p cnf 2 5\n1 0\n-2 0\n").unwrap();
        assert_eq!(doc.cnf.num_clauses(), 2);
        assert_eq!(doc.warnings.len(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(parse_dimacs("1 0\n"), Err(DimacsError::MissingHeader)));
        match parse_dimacs("p cnf 2 1\n1 x 0\n") {
            Err(DimacsError::BadToken { line: 2, token }) => assert_eq!(token, "x"),
            other => panic!("unexpected {other:?}"),
        }
        match parse_dimacs("p cnf 2 1\n1 -9 0\n") {
            Err(DimacsError::LitOutOfRange { line: 2, lit: -9 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sidecar_roundtrip() {
        let mut cnf = Cnf::new(4);
        cnf.add_clause(vec![Lit::positive(1), Lit::negative(4)]);
        let sc = Sidecar {
            pi_vars: vec![(0, 1), (1, 2)],
            po_vars: vec![4],
        };
        let text = emit_dimacs(&cnf, Some(&sc));
        let doc = parse_dimacs(&text).unwrap();
        assert_eq!(doc.sidecar, sc);
        assert_eq!(doc.cnf.clauses(), cnf.clauses());
    }

    #[test]
    fn random_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let nv = rng.gen_range(1..=15u32);
            let nc = rng.gen_range(0..=25usize);
            let mut cnf = Cnf::new(nv);
            for _ in 0..nc {
                let len = rng.gen_range(0..=4usize);
                cnf.add_clause(
                    (0..len)
                        .map(|_| Lit::new(rng.gen_range(1..=nv), rng.gen()))
                        .collect(),
                );
            }
            let text = emit_dimacs(&cnf, None);
            let back = parse_dimacs(&text).unwrap();
            assert!(back.warnings.is_empty());
            assert_eq!(back.cnf.num_vars(), cnf.num_vars());
            assert_eq!(back.cnf.clauses(), cnf.clauses());
            // emit is a fixpoint after one round
            assert_eq!(emit_dimacs(&back.cnf, None), text);
        }
    }
}
