//! Clause-level formula representation and a brute-force SAT oracle.
//!
//! Variables are 1-based as in DIMACS; `Lit` wraps the signed DIMACS
//! encoding. The brute-force check enumerates assignments semantically with
//! word-parallel bitsets, which keeps exhaustive verification of ~20-variable
//! formulas cheap enough for tests.

use std::ops::Not;

/// A literal: positive or negated occurrence of a 1-based variable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(i32);

impl Lit {
    pub fn new(var: u32, negated: bool) -> Lit {
        assert!(var > 0, "variables are 1-based");
        Lit(if negated { -(var as i32) } else { var as i32 })
    }

    pub fn positive(var: u32) -> Lit {
        Lit::new(var, false)
    }

    pub fn negative(var: u32) -> Lit {
        Lit::new(var, true)
    }

    pub fn var(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn is_negated(self) -> bool {
        self.0 < 0
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    pub fn from_dimacs(value: i32) -> Option<Lit> {
        if value == 0 {
            None
        } else {
            Some(Lit(value))
        }
    }

    /// True under the given variable value.
    pub fn satisfied_by(self, value: bool) -> bool {
        value != self.is_negated()
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl std::fmt::Debug for Lit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::fmt::Display for Lit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
    tautological: Vec<bool>,
}

impl Cnf {
    pub fn new(num_vars: u32) -> Cnf {
        Cnf {
            num_vars,
            clauses: Vec::new(),
            tautological: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    /// Append a clause. Duplicate literals are dropped (first occurrence
    /// wins); a clause holding both polarities of a variable is kept but
    /// flagged tautological.
    pub fn add_clause(&mut self, clause: Vec<Lit>) {
        debug_assert!(clause.iter().all(|l| l.var() <= self.num_vars));
        let mut lits: Vec<Lit> = Vec::with_capacity(clause.len());
        for l in clause {
            if !lits.contains(&l) {
                lits.push(l);
            }
        }
        let taut = lits.iter().any(|&l| lits.contains(&!l));
        self.tautological.push(taut);
        self.clauses.push(lits);
    }

    pub fn is_tautological(&self, idx: usize) -> bool {
        self.tautological[idx]
    }

    /// Allocate a new variable index.
    pub fn fresh_var(&mut self) -> u32 {
        self.num_vars += 1;
        self.num_vars
    }

    /// Raise the variable count to at least `n`.
    pub fn ensure_vars(&mut self, n: u32) {
        self.num_vars = self.num_vars.max(n);
    }

    /// Model check; `model[v - 1]` is the value of variable `v`.
    pub fn eval(&self, model: &[bool]) -> bool {
        assert!(model.len() >= self.num_vars as usize);
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.satisfied_by(model[l.var() as usize - 1])))
    }

    /// Exhaustive satisfiability check. Returns the lowest-index satisfying
    /// assignment, if any. Assignment index bit `v-1` is the value of
    /// variable `v`.
    pub fn brute_force(&self) -> Option<Vec<bool>> {
        let n = self.num_vars as usize;
        assert!(n <= 26, "brute force limited to small formulas");
        let bits = 1usize << n;
        let words = bits.div_ceil(64);
        let tail_mask = if n < 6 { (1u64 << bits) - 1 } else { u64::MAX };

        // per-word projection of variable v (0-based): value of bit i is
        // (i >> v) & 1
        let low_pattern = |v: usize| -> u64 {
            let mut pat = 0u64;
            let block = 1u64 << v;
            let mut i = block;
            while i < 64 {
                pat |= ((1u64 << block) - 1).wrapping_shl(i as u32);
                i += 2 * block;
            }
            pat
        };
        let mut low: [u64; 6] = [0; 6];
        for (v, slot) in low.iter_mut().enumerate() {
            *slot = low_pattern(v);
        }

        let mut acc = vec![u64::MAX; words];
        acc[words - 1] = tail_mask;
        for clause in &self.clauses {
            let mut any = false;
            for (w, a) in acc.iter_mut().enumerate() {
                if *a == 0 {
                    continue;
                }
                let mut cw = 0u64;
                for &lit in clause {
                    let v = lit.var() as usize - 1;
                    let base = if v < 6 {
                        low[v]
                    } else if (w >> (v - 6)) & 1 == 1 {
                        u64::MAX
                    } else {
                        0
                    };
                    cw |= if lit.is_negated() { !base } else { base };
                    if cw == u64::MAX {
                        break;
                    }
                }
                *a &= cw;
                any |= *a != 0;
            }
            if !any {
                return None;
            }
        }
        for (w, &a) in acc.iter().enumerate() {
            if a != 0 {
                let idx = w * 64 + a.trailing_zeros() as usize;
                return Some((0..n).map(|v| (idx >> v) & 1 == 1).collect());
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn literal_roundtrip() {
        let l = Lit::new(5, true);
        assert_eq!(l.var(), 5);
        assert!(l.is_negated());
        assert_eq!(l.to_dimacs(), -5);
        assert_eq!(!l, Lit::positive(5));
        assert_eq!(Lit::from_dimacs(0), None);
        assert_eq!(Lit::from_dimacs(-3), Some(Lit::negative(3)));
    }

    #[test]
    fn contradiction_unsat() {
        let mut f = Cnf::new(1);
        f.add_clause(vec![Lit::positive(1)]);
        f.add_clause(vec![Lit::negative(1)]);
        assert_eq!(f.brute_force(), None);
    }

    #[test]
    fn empty_clause_unsat() {
        let mut f = Cnf::new(3);
        f.add_clause(vec![]);
        assert_eq!(f.brute_force(), None);
    }

    #[test]
    fn no_clauses_sat() {
        let f = Cnf::new(0);
        assert_eq!(f.brute_force(), Some(vec![]));
    }

    #[test]
    fn model_is_valid() {
        let mut f = Cnf::new(4);
        f.add_clause(vec![Lit::positive(1), Lit::negative(2)]);
        f.add_clause(vec![Lit::positive(2), Lit::positive(3)]);
        f.add_clause(vec![Lit::negative(1), Lit::negative(4)]);
        let m = f.brute_force().expect("satisfiable");
        assert!(f.eval(&m));
    }

    #[test]
    fn pigeonhole_two_in_one() {
        // two pigeons, one hole: p1 in h, p2 in h, not both
        let mut f = Cnf::new(2);
        f.add_clause(vec![Lit::positive(1)]);
        f.add_clause(vec![Lit::positive(2)]);
        f.add_clause(vec![Lit::negative(1), Lit::negative(2)]);
        assert_eq!(f.brute_force(), None);
    }

    #[test]
    fn bitset_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let n = rng.gen_range(1..=10u32);
            let m = rng.gen_range(0..=30usize);
            let mut f = Cnf::new(n);
            for _ in 0..m {
                let len = rng.gen_range(1..=3usize);
                let clause: Vec<Lit> = (0..len)
                    .map(|_| Lit::new(rng.gen_range(1..=n), rng.gen()))
                    .collect();
                f.add_clause(clause);
            }
            let naive = (0..1usize << n).find(|&idx| {
                let model: Vec<bool> = (0..n as usize).map(|v| idx >> v & 1 == 1).collect();
                f.eval(&model)
            });
            let fast = f.brute_force();
            assert_eq!(fast.is_some(), naive.is_some());
            if let (Some(model), Some(idx)) = (&fast, naive) {
                // lowest-index model is returned
                let expect: Vec<bool> = (0..n as usize).map(|v| idx >> v & 1 == 1).collect();
                assert_eq!(*model, expect);
            }
        }
    }

    #[test]
    fn clause_construction_invariants() {
        let mut f = Cnf::new(3);
        f.add_clause(vec![Lit::positive(1), Lit::positive(1), Lit::negative(2)]);
        f.add_clause(vec![Lit::positive(3), Lit::negative(3)]);
        assert_eq!(f.clauses()[0], vec![Lit::positive(1), Lit::negative(2)]);
        assert!(!f.is_tautological(0));
        assert!(f.is_tautological(1));
        // tautological clause never blocks satisfiability
        assert!(f.brute_force().is_some());
    }

    #[test]
    fn large_support_words() {
        // force multi-word bitsets (> 6 vars) with a unique model
        let mut f = Cnf::new(9);
        for v in 1..=9 {
            f.add_clause(vec![Lit::new(v, v % 2 == 0)]);
        }
        let m = f.brute_force().expect("unique model");
        for v in 1..=9usize {
            assert_eq!(m[v - 1], v % 2 == 1);
        }
    }
}
