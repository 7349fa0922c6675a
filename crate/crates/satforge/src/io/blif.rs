//! BLIF subset for LUT netlists: `.model/.inputs/.outputs/.names/.end`.
//!
//! Each cell is one `.names` block listing on-set cube rows; emission uses
//! the cell function's prime cover, so row sets may differ textually from an
//! input file while the truth tables round-trip exactly.

use std::collections::HashMap;
use std::fmt;

use crate::lut::LutNetlist;
use crate::truth::{prime_cover, Cube, TruthTable};

#[derive(Debug, PartialEq, Eq)]
pub enum BlifError {
    BadDirective { line: usize, directive: String },
    MalformedRow { line: usize },
    ArityExceedsLimit { line: usize, arity: usize, k: usize },
    UndefinedSignal { line: usize, name: String },
    DuplicateSignal { line: usize, name: String },
    MissingEnd,
}

impl fmt::Display for BlifError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlifError::BadDirective { line, directive } => {
                write!(f, "line {line}: unsupported directive '{directive}'")
            }
            BlifError::MalformedRow { line } => write!(f, "line {line}: malformed cube row"),
            BlifError::ArityExceedsLimit { line, arity, k } => {
                write!(f, "line {line}: cell arity {arity} exceeds k={k}")
            }
            BlifError::UndefinedSignal { line, name } => {
                write!(f, "line {line}: undefined signal '{name}'")
            }
            BlifError::DuplicateSignal { line, name } => {
                write!(f, "line {line}: signal '{name}' defined twice")
            }
            BlifError::MissingEnd => write!(f, "missing .end"),
        }
    }
}

impl std::error::Error for BlifError {}

fn signal_name(num_pis: usize, id: usize) -> String {
    if id < num_pis {
        format!("pi{id}")
    } else {
        format!("n{id}")
    }
}

pub fn emit_blif(n: &LutNetlist, model: &str) -> String {
    let mut out = format!(".model {model}\n.inputs");
    for i in 0..n.num_pis() {
        out.push_str(&format!(" pi{i}"));
    }
    out.push_str("\n.outputs");
    for &po in n.pos() {
        out.push(' ');
        out.push_str(&signal_name(n.num_pis(), po));
    }
    out.push('\n');
    for (i, cell) in n.cells().iter().enumerate() {
        let id = n.num_pis() + i;
        out.push_str(".names");
        for &inp in &cell.inputs {
            out.push(' ');
            out.push_str(&signal_name(n.num_pis(), inp));
        }
        out.push(' ');
        out.push_str(&signal_name(n.num_pis(), id));
        out.push('\n');
        let arity = cell.inputs.len();
        for cube in prime_cover(&cell.table) {
            if arity == 0 {
                out.push_str("1\n");
                continue;
            }
            let mut row = String::with_capacity(arity + 2);
            for v in 0..arity {
                row.push(if cube.pos >> v & 1 == 1 {
                    '1'
                } else if cube.neg >> v & 1 == 1 {
                    '0'
                } else {
                    '-'
                });
            }
            row.push_str(" 1\n");
            out.push_str(&row);
        }
    }
    out.push_str(".end\n");
    out
}

pub fn parse_blif(text: &str, k: usize) -> Result<LutNetlist, BlifError> {
    struct Block {
        line: usize,
        signals: Vec<String>,
        cubes: Vec<Cube>,
    }
    let mut inputs: Vec<String> = Vec::new();
    let mut outputs: Vec<(usize, String)> = Vec::new();
    let mut blocks: Vec<Block> = Vec::new();
    let mut saw_end = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if let Some(directive) = toks[0].strip_prefix('.') {
            match directive {
                "model" => {}
                "inputs" => inputs.extend(toks[1..].iter().map(|s| s.to_string())),
                "outputs" => outputs.extend(toks[1..].iter().map(|s| (line, s.to_string()))),
                "names" => {
                    if toks.len() < 2 {
                        return Err(BlifError::MalformedRow { line });
                    }
                    let arity = toks.len() - 2;
                    if arity > k {
                        return Err(BlifError::ArityExceedsLimit { line, arity, k });
                    }
                    blocks.push(Block {
                        line,
                        signals: toks[1..].iter().map(|s| s.to_string()).collect(),
                        cubes: Vec::new(),
                    });
                }
                "end" => {
                    saw_end = true;
                    break;
                }
                other => {
                    return Err(BlifError::BadDirective {
                        line,
                        directive: format!(".{other}"),
                    })
                }
            }
            continue;
        }
        // cube row of the open .names block
        let block = blocks.last_mut().ok_or(BlifError::MalformedRow { line })?;
        let arity = block.signals.len() - 1;
        let (cube_str, value) = if arity == 0 {
            if toks.len() != 1 {
                return Err(BlifError::MalformedRow { line });
            }
            ("", toks[0])
        } else {
            if toks.len() != 2 {
                return Err(BlifError::MalformedRow { line });
            }
            (toks[0], toks[1])
        };
        if value != "1" || cube_str.len() != arity {
            return Err(BlifError::MalformedRow { line });
        }
        let mut cube = Cube::TAUTOLOGY;
        for (v, ch) in cube_str.chars().enumerate() {
            match ch {
                '1' => cube.pos |= 1 << v,
                '0' => cube.neg |= 1 << v,
                '-' => {}
                _ => return Err(BlifError::MalformedRow { line }),
            }
        }
        block.cubes.push(cube);
    }
    if !saw_end {
        return Err(BlifError::MissingEnd);
    }

    let mut nl = LutNetlist::new(inputs.len());
    let mut id_of: HashMap<String, usize> = HashMap::new();
    for (i, name) in inputs.iter().enumerate() {
        if id_of.insert(name.clone(), i).is_some() {
            return Err(BlifError::DuplicateSignal {
                line: 1,
                name: name.clone(),
            });
        }
    }
    for block in &blocks {
        let arity = block.signals.len() - 1;
        let mut fanins = Vec::with_capacity(arity);
        for name in &block.signals[..arity] {
            let &id = id_of.get(name).ok_or_else(|| BlifError::UndefinedSignal {
                line: block.line,
                name: name.clone(),
            })?;
            fanins.push(id);
        }
        let mut table = TruthTable::constant(arity, false);
        for idx in 0..1usize << arity {
            if block.cubes.iter().any(|c| c.contains(idx)) {
                table.set_bit(idx, true);
            }
        }
        let out_name = &block.signals[arity];
        let id = nl.add_cell(fanins, table);
        if id_of.insert(out_name.clone(), id).is_some() {
            return Err(BlifError::DuplicateSignal {
                line: block.line,
                name: out_name.clone(),
            });
        }
    }
    for (line, name) in &outputs {
        let &id = id_of.get(name).ok_or_else(|| BlifError::UndefinedSignal {
            line: *line,
            name: name.clone(),
        })?;
        nl.add_po(id);
    }
    Ok(nl)
}
