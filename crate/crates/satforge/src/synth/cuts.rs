//! K-feasible cut enumeration with a lazily filled, invalidation-aware
//! cache, shared by the rewriting pass and the LUT mapper front end.

use std::collections::HashMap;

use crate::synth::work::WorkAig;

/// A cut of a node: a set of leaf nodes (sorted ids) such that every path
/// from the node to the inputs passes through a leaf.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cut {
    pub leaves: Vec<u32>,
}

impl Cut {
    fn trivial(id: u32) -> Cut {
        Cut { leaves: vec![id] }
    }

    /// Union of two sorted leaf sets, or None when it exceeds `k`.
    fn merge(&self, other: &Cut, k: usize) -> Option<Cut> {
        let (a, b) = (&self.leaves, &other.leaves);
        let mut leaves = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = if j == b.len() || (i < a.len() && a[i] <= b[j]) {
                if j < b.len() && a[i] == b[j] {
                    j += 1;
                }
                let v = a[i];
                i += 1;
                v
            } else {
                let v = b[j];
                j += 1;
                v
            };
            leaves.push(next);
            if leaves.len() > k {
                return None;
            }
        }
        Some(Cut { leaves })
    }

    /// True when self's leaves are a subset of other's (self dominates).
    fn dominates(&self, other: &Cut) -> bool {
        if self.leaves.len() > other.leaves.len() {
            return false;
        }
        let mut j = 0;
        for &l in &self.leaves {
            while j < other.leaves.len() && other.leaves[j] < l {
                j += 1;
            }
            if j == other.leaves.len() || other.leaves[j] != l {
                return false;
            }
            j += 1;
        }
        true
    }
}

/// Per-node cut sets, computed on demand. Each set holds at most
/// `max_cuts` non-trivial cuts (smallest first) plus the trivial cut last.
pub struct CutCache {
    k: usize,
    max_cuts: usize,
    sets: HashMap<u32, Vec<Cut>>,
}

impl CutCache {
    pub fn new(k: usize, max_cuts: usize) -> CutCache {
        assert!(k >= 2);
        CutCache {
            k,
            max_cuts,
            sets: HashMap::new(),
        }
    }

    /// Cut set of `id`, computing any missing sets in its cone first.
    pub fn cuts(&mut self, w: &WorkAig, id: u32) -> &[Cut] {
        debug_assert!(w.is_live(id));
        let mut stack = vec![id];
        while let Some(&top) = stack.last() {
            if self.sets.contains_key(&top) {
                stack.pop();
                continue;
            }
            match w.fanins(top) {
                None => {
                    // input or constant: only the trivial cut
                    self.sets.insert(top, vec![Cut::trivial(top)]);
                    stack.pop();
                }
                Some((a, b)) => {
                    let (an, bn) = (a.node(), b.node());
                    let missing_a = !self.sets.contains_key(&an);
                    let missing_b = !self.sets.contains_key(&bn);
                    if missing_a {
                        stack.push(an);
                    }
                    if missing_b {
                        stack.push(bn);
                    }
                    if !missing_a && !missing_b {
                        let set = self.combine(top, &self.sets[&an], &self.sets[&bn]);
                        self.sets.insert(top, set);
                        stack.pop();
                    }
                }
            }
        }
        &self.sets[&id]
    }

    fn combine(&self, id: u32, a: &[Cut], b: &[Cut]) -> Vec<Cut> {
        let mut merged: Vec<Cut> = Vec::new();
        for ca in a {
            for cb in b {
                let Some(c) = ca.merge(cb, self.k) else {
                    continue;
                };
                if merged.iter().any(|m| m.dominates(&c)) {
                    continue;
                }
                merged.retain(|m| !c.dominates(m));
                merged.push(c);
            }
        }
        merged.sort_by(|x, y| {
            x.leaves
                .len()
                .cmp(&y.leaves.len())
                .then_with(|| x.leaves.cmp(&y.leaves))
        });
        merged.truncate(self.max_cuts);
        merged.push(Cut::trivial(id));
        merged
    }

    /// Drop the sets of `dirty` nodes and everything downstream of them.
    pub fn invalidate(&mut self, w: &WorkAig, dirty: &[u32]) {
        let mut stack: Vec<u32> = dirty.to_vec();
        let mut seen: Vec<u32> = Vec::new();
        while let Some(id) = stack.pop() {
            if seen.contains(&id) {
                continue;
            }
            seen.push(id);
            self.sets.remove(&id);
            for &fo in w.fanouts(id) {
                stack.push(fo);
            }
        }
    }

    #[cfg(test)]
    fn is_cached(&self, id: u32) -> bool {
        self.sets.contains_key(&id)
    }
}
