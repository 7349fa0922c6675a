//! Truth tables over up to 16 support variables.
//!
//! Assignment index `i` encodes variable `v` as bit `(i >> v) & 1`; bit `i`
//! of the table is the function value under that assignment. This is the
//! ordering used everywhere in the crate: simulation, cut functions, LUT
//! truth tables and cube covers all agree on it.

use std::fmt;

/// Hard cap on exhaustive-simulation support size.
pub const MAX_VARS: usize = 16;

/// Packed truth table with `2^num_vars` significant bits.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    num_vars: usize,
    words: Vec<u64>,
}

fn word_count(num_vars: usize) -> usize {
    if num_vars <= 6 {
        1
    } else {
        1 << (num_vars - 6)
    }
}

fn last_word_mask(num_vars: usize) -> u64 {
    if num_vars >= 6 {
        u64::MAX
    } else {
        (1u64 << (1 << num_vars)) - 1
    }
}

impl TruthTable {
    /// All-zero or all-one table.
    pub fn constant(num_vars: usize, value: bool) -> Self {
        assert!(num_vars <= MAX_VARS, "truth table limited to {MAX_VARS} vars");
        let fill = if value { last_word_mask(num_vars) } else { 0 };
        let mut words = vec![fill; word_count(num_vars)];
        if value && num_vars > 6 {
            words.fill(u64::MAX);
        }
        TruthTable { num_vars, words }
    }

    /// Table of the projection function `f(x) = x_var`.
    pub fn projection(num_vars: usize, var: usize) -> Self {
        assert!(var < num_vars && num_vars <= MAX_VARS);
        let mut t = TruthTable::constant(num_vars, false);
        if var < 6 {
            // pattern repeats within a word: 0b10, 0b1100, ...
            let mut pat = 0u64;
            let block = 1u64 << var;
            let mut i = block;
            while i < 64 {
                pat |= ((1u64 << block) - 1).wrapping_shl(i as u32);
                i += 2 * block;
            }
            let mask = last_word_mask(num_vars);
            for w in t.words.iter_mut() {
                *w = pat & mask;
            }
        } else {
            let block = 1usize << (var - 6);
            for (i, w) in t.words.iter_mut().enumerate() {
                if (i / block) % 2 == 1 {
                    *w = u64::MAX;
                }
            }
        }
        t
    }

    /// Build from the low `2^num_vars` bits of `bits` (num_vars <= 6).
    pub fn from_u64(num_vars: usize, bits: u64) -> Self {
        assert!(num_vars <= 6);
        TruthTable {
            num_vars,
            words: vec![bits & last_word_mask(num_vars)],
        }
    }

    /// The table as a single word (num_vars <= 6 only).
    pub fn as_u64(&self) -> u64 {
        assert!(self.num_vars <= 6);
        self.words[0]
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_bits(&self) -> usize {
        1 << self.num_vars
    }

    pub fn bit(&self, idx: usize) -> bool {
        debug_assert!(idx < self.num_bits());
        (self.words[idx >> 6] >> (idx & 63)) & 1 == 1
    }

    pub fn set_bit(&mut self, idx: usize, value: bool) {
        debug_assert!(idx < self.num_bits());
        if value {
            self.words[idx >> 6] |= 1u64 << (idx & 63);
        } else {
            self.words[idx >> 6] &= !(1u64 << (idx & 63));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_constant(&self, value: bool) -> bool {
        *self == TruthTable::constant(self.num_vars, value)
    }

    /// `(self ^ ca) & (rhs ^ cb)` — the AND-node simulation step, with
    /// per-operand complement flags.
    pub fn and_with_compl(&self, ca: bool, rhs: &Self, cb: bool) -> Self {
        assert_eq!(self.num_vars, rhs.num_vars);
        let mask = last_word_mask(self.num_vars);
        let fa = if ca { mask } else { 0 };
        let fb = if cb { mask } else { 0 };
        let words = self
            .words
            .iter()
            .zip(&rhs.words)
            .map(|(a, b)| (a ^ fa) & (b ^ fb))
            .collect();
        TruthTable {
            num_vars: self.num_vars,
            words,
        }
    }

    pub fn not(&self) -> Self {
        let mask = last_word_mask(self.num_vars);
        TruthTable {
            num_vars: self.num_vars,
            words: self.words.iter().map(|w| !w & mask).collect(),
        }
    }

    /// Complement conditionally; identity when `c` is false.
    pub fn xor_const(&self, c: bool) -> Self {
        if c {
            self.not()
        } else {
            self.clone()
        }
    }

    /// Value of the function with each variable bound per `assignment` bit mask.
    pub fn eval(&self, assignment: usize) -> bool {
        self.bit(assignment & (self.num_bits() - 1))
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // MSB-first bit string, matching conventional truth-table notation.
        let mut s = String::with_capacity(self.num_bits());
        for i in (0..self.num_bits()).rev() {
            s.push(if self.bit(i) { '1' } else { '0' });
        }
        write!(f, "tt{}[{}]", self.num_vars, s)
    }
}

/// A product term over `n` variables: `pos` marks positive literals, `neg`
/// negative ones. Bits outside both masks are don't-cares within the cube.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Cube {
    pub pos: u32,
    pub neg: u32,
}

impl Cube {
    pub const TAUTOLOGY: Cube = Cube { pos: 0, neg: 0 };

    pub fn literal(var: usize, positive: bool) -> Self {
        if positive {
            Cube { pos: 1 << var, neg: 0 }
        } else {
            Cube { pos: 0, neg: 1 << var }
        }
    }

    pub fn num_literals(&self) -> usize {
        (self.pos.count_ones() + self.neg.count_ones()) as usize
    }

    pub fn contains(&self, assignment: usize) -> bool {
        let a = assignment as u32;
        (a & self.pos) == self.pos && (a & self.neg) == 0
    }

    /// Cube as a truth table over `n` vars.
    pub fn to_table(&self, num_vars: usize) -> TruthTable {
        let mut t = TruthTable::constant(num_vars, true);
        for v in 0..num_vars {
            if self.pos >> v & 1 == 1 {
                t = t.and_with_compl(false, &TruthTable::projection(num_vars, v), false);
            } else if self.neg >> v & 1 == 1 {
                t = t.and_with_compl(false, &TruthTable::projection(num_vars, v), true);
            }
        }
        t
    }
}

/// Union of a cube cover as a truth table.
pub fn cover_to_table(cubes: &[Cube], num_vars: usize) -> TruthTable {
    let mut acc = TruthTable::constant(num_vars, false);
    for c in cubes {
        let t = c.to_table(num_vars);
        // or = not(and(not, not))
        acc = acc.and_with_compl(true, &t, true).not();
    }
    acc
}

/// Minato–Morreale irredundant sum-of-products.
///
/// Returns a cover `F` with `on ⊆ F ⊆ on ∪ dc`-style bounds; here called with
/// lower = upper = the function itself, which yields an irredundant cover of
/// exactly the function.
pub fn isop(table: &TruthTable) -> Vec<Cube> {
    let n = table.num_vars();
    let mut out = Vec::new();
    isop_rec(table.clone(), table.clone(), n, &mut out);
    out
}

/// Recursive ISOP over bounds `lower ⊆ cover ⊆ upper`; returns the cover's
/// table, pushing cubes into `out`.
fn isop_rec(lower: TruthTable, upper: TruthTable, top: usize, out: &mut Vec<Cube>) -> TruthTable {
    let n = lower.num_vars();
    if lower.is_constant(false) {
        return TruthTable::constant(n, false);
    }
    if upper.is_constant(true) {
        out.push(Cube::TAUTOLOGY);
        return TruthTable::constant(n, true);
    }
    // first variable the bounds actually depend on, scanning from top-1 down
    let mut var = None;
    for v in (0..top).rev() {
        if depends_on(&lower, v) || depends_on(&upper, v) {
            var = Some(v);
            break;
        }
    }
    let v = var.expect("non-constant function must depend on some variable");

    let (l0, l1) = cofactors(&lower, v);
    let (u0, u1) = cofactors(&upper, v);

    let start0 = out.len();
    let f0 = isop_rec(l0.and_with_compl(false, &u1, true), u0.clone(), v, out);
    for c in &mut out[start0..] {
        c.neg |= 1 << v;
    }
    let start1 = out.len();
    let f1 = isop_rec(l1.and_with_compl(false, &u0, true), u1.clone(), v, out);
    for c in &mut out[start1..] {
        c.pos |= 1 << v;
    }

    let lnew0 = l0.and_with_compl(false, &f0, true);
    let lnew1 = l1.and_with_compl(false, &f1, true);
    // or of the two residuals
    let lnew = lnew0.and_with_compl(true, &lnew1, true).not();
    let f2 = isop_rec(lnew, u0.and_with_compl(false, &u1, false), v, out);

    // combined cover value: f2 | (!xv & f0) | (xv & f1)
    let proj = TruthTable::projection(n, v);
    let t0 = proj.and_with_compl(true, &f0, false);
    let t1 = proj.and_with_compl(false, &f1, false);
    let or01 = t0.and_with_compl(true, &t1, true).not();
    or01.and_with_compl(true, &f2, true).not()
}

fn depends_on(t: &TruthTable, var: usize) -> bool {
    let (c0, c1) = cofactors(t, var);
    c0 != c1
}

/// Negative and positive cofactors w.r.t. `var`, each expressed over the same
/// variable count (the var becomes vacuous).
pub fn cofactors(t: &TruthTable, var: usize) -> (TruthTable, TruthTable) {
    let mut c0 = t.clone();
    let mut c1 = t.clone();
    for i in 0..t.num_bits() {
        let partner = i ^ (1 << var);
        if i >> var & 1 == 1 {
            c0.set_bit(i, t.bit(partner));
        } else {
            c1.set_bit(i, t.bit(partner));
        }
    }
    (c0, c1)
}

/// Quine–McCluskey prime generation plus an irredundant cover, exact at the
/// scales used here (<= 6 variables).
///
/// Returns an irredundant cover of the on-set by prime implicants: essential
/// primes first, then a greedy completion, then redundancy elimination.
pub fn prime_cover(table: &TruthTable) -> Vec<Cube> {
    let n = table.num_vars();
    assert!(n <= 6, "prime_cover is exact only for small supports");
    let rows = 1usize << n;
    let minterms: Vec<usize> = (0..rows).filter(|&i| table.bit(i)).collect();
    if minterms.is_empty() {
        return Vec::new();
    }
    if minterms.len() == rows {
        return vec![Cube::TAUTOLOGY];
    }

    // implicant = (values, dc-mask); merge pairs differing in one care bit
    let mut level: Vec<(u32, u32)> = minterms.iter().map(|&m| (m as u32, 0u32)).collect();
    let mut primes: Vec<(u32, u32)> = Vec::new();
    let full = (rows - 1) as u32;
    while !level.is_empty() {
        let mut merged_flag = vec![false; level.len()];
        let mut next: Vec<(u32, u32)> = Vec::new();
        for i in 0..level.len() {
            for j in (i + 1)..level.len() {
                let (vi, di) = level[i];
                let (vj, dj) = level[j];
                if di != dj {
                    continue;
                }
                let diff = (vi ^ vj) & full & !di;
                if diff.count_ones() == 1 {
                    merged_flag[i] = true;
                    merged_flag[j] = true;
                    let cand = (vi & !diff, di | diff);
                    if !next.contains(&cand) {
                        next.push(cand);
                    }
                }
            }
        }
        for (i, &(v, d)) in level.iter().enumerate() {
            if !merged_flag[i] && !primes.contains(&(v, d)) {
                primes.push((v, d));
            }
        }
        level = next;
    }

    let cube_of = |&(v, d): &(u32, u32)| Cube {
        pos: v & full & !d,
        neg: !v & full & !d,
    };
    let covers = |p: &(u32, u32), m: usize| -> bool {
        let (v, d) = *p;
        (m as u32 & !d & full) == (v & !d & full)
    };

    // essential primes
    let mut chosen: Vec<usize> = Vec::new();
    let mut covered = vec![false; minterms.len()];
    for (mi, &m) in minterms.iter().enumerate() {
        let covering: Vec<usize> = (0..primes.len()).filter(|&p| covers(&primes[p], m)).collect();
        if covering.len() == 1 && !chosen.contains(&covering[0]) {
            chosen.push(covering[0]);
        }
        let _ = mi;
    }
    for &p in &chosen {
        for (mi, &m) in minterms.iter().enumerate() {
            if covers(&primes[p], m) {
                covered[mi] = true;
            }
        }
    }
    // greedy completion, deterministic: most new minterms, then lowest index
    while covered.iter().any(|c| !c) {
        let mut best = usize::MAX;
        let mut best_gain = 0usize;
        for (p, prime) in primes.iter().enumerate() {
            if chosen.contains(&p) {
                continue;
            }
            let gain = minterms
                .iter()
                .enumerate()
                .filter(|&(mi, &m)| !covered[mi] && covers(prime, m))
                .count();
            if gain > best_gain {
                best_gain = gain;
                best = p;
            }
        }
        assert!(best != usize::MAX, "prime cover must complete");
        chosen.push(best);
        for (mi, &m) in minterms.iter().enumerate() {
            if covers(&primes[best], m) {
                covered[mi] = true;
            }
        }
    }
    // drop redundant picks (possible after greedy)
    let mut irredundant: Vec<usize> = chosen.clone();
    let mut i = 0;
    while i < irredundant.len() {
        let without: Vec<usize> = irredundant
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, &p)| p)
            .collect();
        let all = minterms
            .iter()
            .all(|&m| without.iter().any(|&p| covers(&primes[p], m)));
        if all {
            irredundant.remove(i);
        } else {
            i += 1;
        }
    }
    irredundant.iter().map(|&p| cube_of(&primes[p])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn projection_patterns() {
        let a = TruthTable::projection(2, 0);
        let b = TruthTable::projection(2, 1);
        assert_eq!(a.as_u64(), 0b1010);
        assert_eq!(b.as_u64(), 0b1100);
        let and = a.and_with_compl(false, &b, false);
        assert_eq!(and.as_u64(), 0b1000);
    }

    #[test]
    fn projection_high_vars() {
        let t = TruthTable::projection(8, 7);
        for i in 0..t.num_bits() {
            assert_eq!(t.bit(i), (i >> 7) & 1 == 1);
        }
    }

    #[test]
    fn xor_two_vars() {
        let a = TruthTable::projection(2, 0);
        let b = TruthTable::projection(2, 1);
        // xor = (a & !b) | (!a & b) = !(!(a&!b) & !(!a&b))
        let t0 = a.and_with_compl(false, &b, true);
        let t1 = a.and_with_compl(true, &b, false);
        let xor = t0.and_with_compl(true, &t1, true).not();
        assert_eq!(xor.as_u64(), 0b0110);
    }

    #[test]
    fn isop_covers_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 0..=6usize {
            for _ in 0..50 {
                let bits: u64 = rng.gen();
                let t = TruthTable::from_u64(n, bits);
                let cubes = isop(&t);
                assert_eq!(cover_to_table(&cubes, n), t, "isop mismatch n={n}");
            }
        }
        // a couple of larger supports
        for n in [8usize, 10] {
            let mut t = TruthTable::constant(n, false);
            for _ in 0..100 {
                let idx = rng.gen_range(0..t.num_bits());
                t.set_bit(idx, true);
            }
            let cubes = isop(&t);
            assert_eq!(cover_to_table(&cubes, n), t);
        }
    }

    #[test]
    fn isop_irredundant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let bits: u64 = rng.gen();
            let t = TruthTable::from_u64(4, bits);
            let cubes = isop(&t);
            for skip in 0..cubes.len() {
                let rest: Vec<Cube> = cubes
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, c)| *c)
                    .collect();
                assert_ne!(cover_to_table(&rest, 4), t, "redundant cube in isop");
            }
        }
    }

    #[test]
    fn qm_and_gate() {
        // on-set of AND2 = single cube ab; off-set primes are !a and !b
        let and = TruthTable::from_u64(2, 0b1000);
        let on = prime_cover(&and);
        assert_eq!(on, vec![Cube { pos: 0b11, neg: 0 }]);
        let off = prime_cover(&and.not());
        assert_eq!(off.len(), 2);
        assert_eq!(cover_to_table(&off, 2), and.not());
    }

    #[test]
    fn qm_exactness_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in 0..=6usize {
            for _ in 0..30 {
                let bits: u64 = rng.gen();
                let t = TruthTable::from_u64(n, bits);
                let cubes = prime_cover(&t);
                assert_eq!(cover_to_table(&cubes, n), t, "qm cover mismatch n={n}");
                // irredundance
                for skip in 0..cubes.len() {
                    let rest: Vec<Cube> = cubes
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, c)| *c)
                        .collect();
                    assert_ne!(cover_to_table(&rest, n), t);
                }
            }
        }
    }

    #[test]
    fn cofactor_shannon() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let bits: u64 = rng.gen();
            let t = TruthTable::from_u64(5, bits);
            for v in 0..5 {
                let (c0, c1) = cofactors(&t, v);
                let p = TruthTable::projection(5, v);
                let lo = p.and_with_compl(true, &c0, false);
                let hi = p.and_with_compl(false, &c1, false);
                let rebuilt = lo.and_with_compl(true, &hi, true).not();
                assert_eq!(rebuilt, t);
            }
        }
    }
}
