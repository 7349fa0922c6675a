//! NPN canonicalization of 4-variable functions (16-bit truth tables).
//!
//! The canonical representative of a class is the numerically smallest table
//! reachable by input permutation, input negation, and output negation
//! (768 transforms). `canonize` also returns the transform that rebuilds the
//! original function from the representative.

/// Recipe for expressing a function from a class representative:
/// `f(x) = rep(y) ^ out_flip` where `y_j = x[perm[j]] ^ flip_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transform {
    pub perm: [u8; 4],
    pub flips: u8,
    pub out_flip: bool,
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        perm: [0, 1, 2, 3],
        flips: 0,
        out_flip: false,
    };
}

const PERMS: [[u8; 4]; 24] = [
    [0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3], [0, 2, 3, 1], [0, 3, 1, 2], [0, 3, 2, 1],
    [1, 0, 2, 3], [1, 0, 3, 2], [1, 2, 0, 3], [1, 2, 3, 0], [1, 3, 0, 2], [1, 3, 2, 0],
    [2, 0, 1, 3], [2, 0, 3, 1], [2, 1, 0, 3], [2, 1, 3, 0], [2, 3, 0, 1], [2, 3, 1, 0],
    [3, 0, 1, 2], [3, 0, 2, 1], [3, 1, 0, 2], [3, 1, 2, 0], [3, 2, 0, 1], [3, 2, 1, 0],
];

/// Apply `tr` to `t`: result(x) = t(y) ^ out_flip with y_j = x[perm[j]] ^ flip_j.
pub fn apply_transform(t: u16, tr: &Transform) -> u16 {
    let mut out = 0u16;
    for x in 0..16u16 {
        let mut y = 0u16;
        for (j, &p) in tr.perm.iter().enumerate() {
            let bit = (x >> p) & 1 ^ (tr.flips >> j) as u16 & 1;
            y |= bit << j;
        }
        let bit = (t >> y) & 1 ^ tr.out_flip as u16;
        out |= bit << x;
    }
    out
}

/// Inverse under `apply_transform`: applying `tr` then `invert(tr)` (or the
/// other way round) is the identity.
pub fn invert(tr: &Transform) -> Transform {
    let mut perm = [0u8; 4];
    let mut flips = 0u8;
    for j in 0..4 {
        perm[tr.perm[j] as usize] = j as u8;
    }
    for (i, &p) in perm.iter().enumerate() {
        flips |= (tr.flips >> p & 1) << i;
    }
    Transform {
        perm,
        flips,
        out_flip: tr.out_flip,
    }
}

/// Smallest NPN-equivalent table, plus the transform rebuilding `t` from it:
/// `apply_transform(rep, tr) == t`.
pub fn canonize(t: u16) -> (u16, Transform) {
    let mut best = t;
    let mut best_tr = Transform::IDENTITY;
    for perm in &PERMS {
        for flips in 0..16u8 {
            let tr = Transform {
                perm: *perm,
                flips,
                out_flip: false,
            };
            let base = apply_transform(t, &tr);
            for out_flip in [false, true] {
                let cand = base ^ if out_flip { 0xFFFF } else { 0 };
                if cand < best {
                    best = cand;
                    best_tr = Transform {
                        perm: *perm,
                        flips,
                        out_flip,
                    };
                }
            }
        }
    }
    // best = apply(best_tr, t)  =>  t = apply(best_tr^-1, best)
    (best, invert(&best_tr))
}

/// Every distinct table in `t`'s NPN orbit, paired with a transform such
/// that `apply_transform(t, tr) == member`.
pub fn orbit(t: u16) -> Vec<(u16, Transform)> {
    let mut seen = vec![false; 1 << 16];
    let mut out = Vec::new();
    for perm in &PERMS {
        for flips in 0..16u8 {
            for out_flip in [false, true] {
                let tr = Transform {
                    perm: *perm,
                    flips,
                    out_flip,
                };
                let member = apply_transform(t, &tr);
                if !seen[member as usize] {
                    seen[member as usize] = true;
                    out.push((member, tr));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_transform_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let t: u16 = rng.gen();
            assert_eq!(apply_transform(t, &Transform::IDENTITY), t);
        }
    }

    #[test]
    fn canonize_rebuild_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let t: u16 = rng.gen();
            let (rep, tr) = canonize(t);
            assert_eq!(apply_transform(rep, &tr), t, "rebuild failed for {t:#06x}");
            assert!(rep <= t);
        }
    }

    #[test]
    fn canonize_is_class_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let t: u16 = rng.gen();
            let (rep, _) = canonize(t);
            for &(member, _) in orbit(t).iter().step_by(17) {
                assert_eq!(canonize(member).0, rep);
            }
        }
    }

    #[test]
    fn orbit_transforms_verified() {
        let t: u16 = 0xCA53;
        for (member, tr) in orbit(t) {
            assert_eq!(apply_transform(t, &tr), member);
        }
    }

    #[test]
    fn class_count_is_222() {
        let mut reps = std::collections::HashSet::new();
        let mut canon_of = vec![None::<u16>; 1 << 16];
        for t in 0..=u16::MAX {
            if canon_of[t as usize].is_some() {
                continue;
            }
            let (rep, _) = canonize(t);
            // mark the whole orbit to avoid recanonizing members
            for (member, _) in orbit(t) {
                canon_of[member as usize] = Some(rep);
            }
            reps.insert(rep);
        }
        assert_eq!(reps.len(), 222);
    }

    #[test]
    fn known_class_examples() {
        // and2 (vacuous in v2, v3) and xor2 are in different classes
        let and2: u16 = 0x8888;
        let or2: u16 = 0xEEEE;
        let xor2: u16 = 0x6666;
        let xnor2: u16 = 0x9999;
        assert_eq!(canonize(and2).0, canonize(or2).0);
        assert_eq!(canonize(xor2).0, canonize(xnor2).0);
        assert_ne!(canonize(and2).0, canonize(xor2).0);
    }
}
