//! Mapped k-LUT netlists.
//!
//! Ids share one space: `0..num_pis` are the primary inputs, id
//! `num_pis + i` is cell `i`. Cell inputs always point at lower ids, so cell
//! order is a topological order. Outputs are plain id references; polarity
//! is folded into cell truth tables during mapping.

use crate::truth::{TruthTable, MAX_VARS};

#[derive(Clone, Debug)]
pub struct LutCell {
    pub inputs: Vec<usize>,
    pub table: TruthTable,
}

#[derive(Clone, Debug, Default)]
pub struct LutNetlist {
    num_pis: usize,
    cells: Vec<LutCell>,
    pos: Vec<usize>,
}

impl LutNetlist {
    pub fn new(num_pis: usize) -> LutNetlist {
        LutNetlist {
            num_pis,
            cells: Vec::new(),
            pos: Vec::new(),
        }
    }

    pub fn num_pis(&self) -> usize {
        self.num_pis
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_ids(&self) -> usize {
        self.num_pis + self.cells.len()
    }

    pub fn cells(&self) -> &[LutCell] {
        &self.cells
    }

    pub fn cell(&self, index: usize) -> &LutCell {
        &self.cells[index]
    }

    /// Add a cell; returns its id.
    pub fn add_cell(&mut self, inputs: Vec<usize>, table: TruthTable) -> usize {
        let id = self.num_ids();
        assert_eq!(table.num_vars(), inputs.len(), "table arity mismatch");
        assert!(inputs.iter().all(|&i| i < id), "inputs must precede cell");
        self.cells.push(LutCell { inputs, table });
        id
    }

    pub fn add_po(&mut self, id: usize) {
        assert!(id < self.num_ids());
        self.pos.push(id);
    }

    pub fn pos(&self) -> &[usize] {
        &self.pos
    }

    /// Logic level per id; inputs are level 0.
    pub fn levels(&self) -> Vec<u32> {
        let mut lv = vec![0u32; self.num_ids()];
        for (i, cell) in self.cells.iter().enumerate() {
            let id = self.num_pis + i;
            lv[id] = cell
                .inputs
                .iter()
                .map(|&j| lv[j] + 1)
                .max()
                .unwrap_or(0);
        }
        lv
    }

    pub fn depth(&self) -> u32 {
        let lv = self.levels();
        self.pos.iter().map(|&p| lv[p]).max().unwrap_or(0)
    }

    /// Total fanin edge count.
    pub fn num_edges(&self) -> usize {
        self.cells.iter().map(|c| c.inputs.len()).sum()
    }

    /// Per-id truth tables over the primary inputs.
    pub fn simulate(&self) -> Result<Vec<TruthTable>, crate::aig::CapacityError> {
        if self.num_pis > MAX_VARS {
            return Err(crate::aig::CapacityError { num_pis: self.num_pis });
        }
        let n = self.num_pis;
        let rows = 1usize << n;
        let mut tables: Vec<TruthTable> = Vec::with_capacity(self.num_ids());
        for v in 0..n {
            tables.push(TruthTable::projection(n, v));
        }
        for cell in &self.cells {
            let mut t = TruthTable::constant(n, false);
            for idx in 0..rows {
                let mut sel = 0usize;
                for (k, &inp) in cell.inputs.iter().enumerate() {
                    if tables[inp].bit(idx) {
                        sel |= 1 << k;
                    }
                }
                if cell.table.bit(sel) {
                    t.set_bit(idx, true);
                }
            }
            tables.push(t);
        }
        Ok(tables)
    }

    pub fn po_tables(&self) -> Result<Vec<TruthTable>, crate::aig::CapacityError> {
        let tables = self.simulate()?;
        Ok(self.pos.iter().map(|&p| tables[p].clone()).collect())
    }

    /// Evaluate all ids under one input assignment.
    pub fn eval(&self, inputs: &[bool]) -> Vec<bool> {
        assert_eq!(inputs.len(), self.num_pis);
        let mut vals = Vec::with_capacity(self.num_ids());
        vals.extend_from_slice(inputs);
        for cell in &self.cells {
            let mut sel = 0usize;
            for (k, &inp) in cell.inputs.iter().enumerate() {
                if vals[inp] {
                    sel |= 1 << k;
                }
            }
            vals.push(cell.table.bit(sel));
        }
        vals
    }
}
