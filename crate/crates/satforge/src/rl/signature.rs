//! Fixed-length descriptor of an episode's starting graph.
//!
//! Half of the components probe behavior: primary-output response
//! fractions under 1,024 seeded input patterns, stratified by input
//! weight so sparse and dense stimuli land in separate buckets. The other
//! half summarize structure: a level-occupancy histogram and a fanout
//! histogram. Every component lies in [0, 1].

use crate::aig::{Aig, NodeKind};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const NUM_PATTERNS: usize = 1024;
const WORDS: usize = NUM_PATTERNS / 64;

/// Deterministic d-dimensional descriptor of `g`. `d` must be even and
/// at least 4; the same (graph, d, seed) always yields the same vector.
pub fn signature(g: &Aig, d: usize, seed: u64) -> Vec<f64> {
    assert!(d >= 4 && d.is_multiple_of(2), "signature dimension must be even, got {d}");
    let sim_bins = d / 2;
    let level_bins = (d - sim_bins) / 2;
    let fanout_bins = d - sim_bins - level_bins;

    let mut out = response_fractions(g, sim_bins, seed);
    out.extend(level_histogram(g, level_bins));
    out.extend(fanout_histogram(g, fanout_bins));
    debug_assert_eq!(out.len(), d);
    debug_assert!(out.iter().all(|&x| (0.0..=1.0).contains(&x)));
    out
}

/// Input pattern p is assigned to bucket p % bins and carries a target
/// weight swept linearly across buckets, so bucket b measures the mean
/// PO response to inputs with about b/(bins-1) of their bits set.
fn response_fractions(g: &Aig, bins: usize, seed: u64) -> Vec<f64> {
    let n = g.num_pis();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pi_words = vec![[0u64; WORDS]; n];
    let mut positions: Vec<usize> = (0..n).collect();
    for p in 0..NUM_PATTERNS {
        let bucket = p % bins;
        let frac = if bins == 1 { 0.5 } else { bucket as f64 / (bins - 1) as f64 };
        let weight = (frac * n as f64).round() as usize;
        positions.shuffle(&mut rng);
        for &pi in &positions[..weight] {
            pi_words[pi][p / 64] |= 1u64 << (p % 64);
        }
    }

    let mut values = vec![[0u64; WORDS]; g.num_nodes()];
    for (i, w) in pi_words.into_iter().enumerate() {
        values[i + 1] = w;
    }
    for (id, a, b) in g.iter_ands() {
        let mut w = [0u64; WORDS];
        for k in 0..WORDS {
            let av = values[a.node() as usize][k] ^ if a.is_compl() { u64::MAX } else { 0 };
            let bv = values[b.node() as usize][k] ^ if b.is_compl() { u64::MAX } else { 0 };
            w[k] = av & bv;
        }
        values[id as usize] = w;
    }

    let mut ones = vec![0u64; bins];
    let mut count = vec![0u64; bins];
    for po in g.pos() {
        let v = &values[po.node() as usize];
        for p in 0..NUM_PATTERNS {
            let bit = (v[p / 64] >> (p % 64)) & 1 == 1;
            let set = bit != po.is_compl();
            let bucket = p % bins;
            ones[bucket] += set as u64;
            count[bucket] += 1;
        }
    }
    (0..bins)
        .map(|b| if count[b] == 0 { 0.0 } else { ones[b] as f64 / count[b] as f64 })
        .collect()
}

/// Fraction of AND nodes per normalized-depth band.
fn level_histogram(g: &Aig, bins: usize) -> Vec<f64> {
    let mut hist = vec![0.0; bins];
    let ands = g.num_ands();
    if ands == 0 {
        return hist;
    }
    let levels = g.levels();
    let max = levels.iter().copied().max().unwrap_or(0) as usize;
    for (id, _, _) in g.iter_ands() {
        let bin = levels[id as usize] as usize * bins / (max + 1);
        hist[bin] += 1.0;
    }
    for h in &mut hist {
        *h /= ands as f64;
    }
    hist
}

/// Fraction of PI and AND nodes per fanout count, last bin saturating.
fn fanout_histogram(g: &Aig, bins: usize) -> Vec<f64> {
    let mut fanout = vec![0usize; g.num_nodes()];
    for (_, a, b) in g.iter_ands() {
        fanout[a.node() as usize] += 1;
        fanout[b.node() as usize] += 1;
    }
    for po in g.pos() {
        fanout[po.node() as usize] += 1;
    }
    let mut hist = vec![0.0; bins];
    let mut total = 0usize;
    for id in 0..g.num_nodes() as u32 {
        if matches!(g.node(id), NodeKind::Const0) {
            continue;
        }
        total += 1;
        hist[fanout[id as usize].min(bins - 1)] += 1.0;
    }
    if total > 0 {
        for h in &mut hist {
            *h /= total as f64;
        }
    }
    hist
}
