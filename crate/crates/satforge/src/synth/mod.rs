//! Function-preserving synthesis passes, the action alphabet for recipe
//! search, and the structural feature extractor.

pub mod balance;
pub mod cuts;
pub mod factor;
pub mod npn;
pub mod npn_db;
pub mod refactor;
pub mod resub;
pub mod rewrite;
pub mod work;

use crate::aig::Aig;

/// The recipe alphabet: four transformations plus an explicit stop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SynthAction {
    Rewrite,
    Refactor,
    Balance,
    Resub,
    End,
}

impl SynthAction {
    pub const ALL: [SynthAction; 5] = [
        SynthAction::Rewrite,
        SynthAction::Refactor,
        SynthAction::Balance,
        SynthAction::Resub,
        SynthAction::End,
    ];

    pub fn index(self) -> usize {
        match self {
            SynthAction::Rewrite => 0,
            SynthAction::Refactor => 1,
            SynthAction::Balance => 2,
            SynthAction::Resub => 3,
            SynthAction::End => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<SynthAction> {
        SynthAction::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SynthAction::Rewrite => "rewrite",
            SynthAction::Refactor => "refactor",
            SynthAction::Balance => "balance",
            SynthAction::Resub => "resub",
            SynthAction::End => "end",
        }
    }

    pub fn from_name(name: &str) -> Option<SynthAction> {
        SynthAction::ALL.iter().copied().find(|a| a.name() == name)
    }
}

impl std::fmt::Display for SynthAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Apply one action. Every arm preserves functions; `End` is the identity.
pub fn apply_action(g: &Aig, action: SynthAction) -> Aig {
    match action {
        SynthAction::Rewrite => rewrite::rewrite(g, false),
        SynthAction::Refactor => refactor::refactor(g),
        SynthAction::Balance => balance::balance(g),
        SynthAction::Resub => resub::resub(g),
        SynthAction::End => g.clone(),
    }
}

/// Structural summary of a graph relative to the untouched starting graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector {
    pub area_ratio: f64,
    pub depth_ratio: f64,
    pub wire_ratio: f64,
    pub and_frac: f64,
    pub not_frac: f64,
    pub balance_ratio: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.area_ratio,
            self.depth_ratio,
            self.wire_ratio,
            self.and_frac,
            self.not_frac,
            self.balance_ratio,
        ]
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            num
        }
    } else {
        num / den
    }
}

/// Mean fanin-depth imbalance over the AND nodes: for each node, the
/// absolute difference of its two fanin levels divided by their maximum
/// (taken as 0 when both are 0). An AND-free graph scores 0.
pub fn balance_ratio(g: &Aig) -> f64 {
    let levels = g.levels();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (_, a, b) in g.iter_ands() {
        let la = levels[a.node() as usize] as f64;
        let lb = levels[b.node() as usize] as f64;
        let hi = la.max(lb);
        if hi > 0.0 {
            sum += (la - lb).abs() / hi;
        }
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Features of `g` (the current graph) against `g0` (the starting graph).
pub fn extract_features(g: &Aig, g0: &Aig) -> FeatureVector {
    let s = g.stats();
    let s0 = g0.stats();
    let wires = s.wires as f64;
    FeatureVector {
        area_ratio: ratio(s.ands as f64, s0.ands as f64),
        depth_ratio: ratio(s.levels as f64, s0.levels as f64),
        wire_ratio: ratio(s.wires as f64, s0.wires as f64),
        and_frac: if s.ands + s.pis == 0 {
            0.0
        } else {
            s.ands as f64 / (s.ands + s.pis) as f64
        },
        not_frac: if wires == 0.0 {
            0.0
        } else {
            s.nots as f64 / wires
        },
        balance_ratio: balance_ratio(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_equiv, random_aig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn balance_ratio_of_chain() {
        // terms over the chain are 0, 1, 1
        let mut g = Aig::new(4);
        let mut acc = g.pi_edge(0);
        for i in 1..4 {
            let pi = g.pi_edge(i);
            acc = g.add_and(acc, pi);
        }
        g.add_po(acc);
        assert!((balance_ratio(&g) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn balance_ratio_of_balanced_tree_is_zero() {
        let mut g = Aig::new(4);
        let ab = g.add_and(g.pi_edge(0), g.pi_edge(1));
        let cd = g.add_and(g.pi_edge(2), g.pi_edge(3));
        let top = g.add_and(ab, cd);
        g.add_po(top);
        assert_eq!(balance_ratio(&g), 0.0);
    }

    #[test]
    fn features_of_unchanged_graph_are_unit_ratios() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let g = random_aig(&mut rng, 5, 30, 2);
        let f = extract_features(&g, &g);
        assert_eq!(f.area_ratio, 1.0);
        assert_eq!(f.depth_ratio, 1.0);
        assert_eq!(f.wire_ratio, 1.0);
        assert!(f.and_frac > 0.0 && f.and_frac < 1.0);
        assert!(f.not_frac >= 0.0 && f.not_frac <= 1.0);
        assert!(f.balance_ratio >= 0.0 && f.balance_ratio <= 1.0);
    }

    #[test]
    fn action_roundtrip_indices_and_names() {
        for (i, a) in SynthAction::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(SynthAction::from_index(i), Some(*a));
            assert_eq!(SynthAction::from_name(a.name()), Some(*a));
        }
        assert_eq!(SynthAction::from_index(5), None);
        assert_eq!(SynthAction::from_name("unknown"), None);
    }

    #[test]
    fn every_action_preserves_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        for _ in 0..10 {
            let g = random_aig(&mut rng, 6, 50, 3);
            for a in SynthAction::ALL {
                let h = apply_action(&g, a);
                assert_equiv(&g, &h);
                assert!(h.num_ands() <= g.num_ands());
            }
        }
    }

    #[test]
    fn end_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let g = random_aig(&mut rng, 4, 20, 2);
        let h = apply_action(&g, SynthAction::End);
        assert_eq!(h.num_nodes(), g.num_nodes());
        assert_equiv(&g, &h);
    }
}
