//! Generated equivalence-checking benchmarks: miters of a random circuit
//! against a resynthesized copy, optionally with an injected fault, labeled
//! SAT or UNSAT by construction and verified during generation.

use std::ops::RangeInclusive;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::aig::{Aig, Edge};
use crate::encode::aig_to_cnf;
use crate::solver::{solve, Budget, SolveStatus};
use crate::synth::{apply_action, SynthAction};

/// Exhaustive checks run up to this many inputs; larger miters are
/// labeled with the internal solver.
pub const BRUTE_FORCE_PIS: usize = 14;

/// Random AIG with the given shape. Edges pick uniformly among constants
/// (rarely), inputs, and earlier nodes, with random inversions, so folding
/// and sharing paths get exercised too.
pub fn random_aig(rng: &mut impl Rng, num_pis: usize, num_ands: usize, num_pos: usize) -> Aig {
    let mut g = Aig::new(num_pis);
    let mut pool: Vec<Edge> = (0..num_pis).map(|i| g.pi_edge(i)).collect();
    for _ in 0..num_ands {
        let pick = |rng: &mut dyn rand::RngCore, pool: &[Edge]| -> Edge {
            let e = if rng.gen_range(0..50) == 0 {
                Edge::FALSE
            } else {
                pool[rng.gen_range(0..pool.len())]
            };
            if rng.gen_bool(0.5) {
                e.compl()
            } else {
                e
            }
        };
        let a = pick(rng, &pool);
        let b = pick(rng, &pool);
        let e = g.add_and(a, b);
        pool.push(e);
    }
    for _ in 0..num_pos {
        let e = pool[rng.gen_range(0..pool.len())];
        let e = if rng.gen_bool(0.5) { e.compl() } else { e };
        g.add_po(e);
    }
    g
}

/// XOR-heavy random AIG: a balanced XOR backbone over all inputs with a
/// few random AND gates mixed in. Branching-aware mapping has the most
/// room on this shape.
pub fn random_xor_aig(rng: &mut impl Rng, num_pis: usize, extra_ands: usize) -> Aig {
    let mut g = Aig::new(num_pis);
    let mut layer: Vec<Edge> = (0..num_pis).map(|i| g.pi_edge(i)).collect();
    while layer.len() > 1 {
        let mut next = Vec::with_capacity(layer.len() / 2 + 1);
        for pair in layer.chunks(2) {
            if pair.len() == 2 {
                next.push(g.add_xor(pair[0], pair[1]));
            } else {
                next.push(pair[0]);
            }
        }
        layer = next;
    }
    let backbone = layer[0];
    let mut pool: Vec<Edge> = (0..num_pis).map(|i| g.pi_edge(i)).collect();
    pool.push(backbone);
    for _ in 0..extra_ands {
        let a = pool[rng.gen_range(0..pool.len())];
        let b = pool[rng.gen_range(0..pool.len())];
        let e = g.add_and(a, if rng.gen_bool(0.5) { b.compl() } else { b });
        pool.push(e);
    }
    let tail = *pool.last().unwrap();
    let po = g.add_xor(backbone, tail);
    g.add_po(po);
    g
}

/// One generated instance with its label and provenance.
#[derive(Clone, Debug)]
pub struct BenchInstance {
    pub name: String,
    pub miter: Aig,
    pub label: SolveStatus,
    pub fault_injected: bool,
    /// Input assignment driving the miter to 1; present iff SAT.
    pub witness: Option<Vec<bool>>,
}

/// Aggregate corpus shape, one row per summary table.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchStats {
    pub instances: usize,
    pub sat: usize,
    pub unsat: usize,
    pub mean_pis: f64,
    pub mean_ands: f64,
    pub mean_levels: f64,
}

pub fn corpus_stats(corpus: &[BenchInstance]) -> BenchStats {
    let n = corpus.len().max(1) as f64;
    BenchStats {
        instances: corpus.len(),
        sat: corpus.iter().filter(|b| b.label == SolveStatus::Sat).count(),
        unsat: corpus.iter().filter(|b| b.label == SolveStatus::Unsat).count(),
        mean_pis: corpus.iter().map(|b| b.miter.num_pis() as f64).sum::<f64>() / n,
        mean_ands: corpus.iter().map(|b| b.miter.num_ands() as f64).sum::<f64>() / n,
        mean_levels: corpus.iter().map(|b| b.miter.depth() as f64).sum::<f64>() / n,
    }
}

impl BenchStats {
    pub fn markdown(&self) -> String {
        format!(
            "| instances | SAT | UNSAT | mean PIs | mean ANDs | mean depth |\n\
             |---|---|---|---|---|---|\n\
             | {} | {} | {} | {:.1} | {:.1} | {:.1} |\n",
            self.instances, self.sat, self.unsat, self.mean_pis, self.mean_ands, self.mean_levels,
        )
    }
}

/// SAT status of a single-output graph, decided exhaustively when small
/// enough and with the internal solver otherwise. Returns a satisfying
/// input assignment when one exists.
pub fn miter_status(g: &Aig) -> (SolveStatus, Option<Vec<bool>>) {
    assert_eq!(g.num_pos(), 1, "miters have a single output");
    if g.num_pis() <= BRUTE_FORCE_PIS {
        let table = &g.po_tables().expect("within capacity")[0];
        for idx in 0..table.num_bits() {
            if table.bit(idx) {
                let witness = (0..g.num_pis()).map(|i| idx >> i & 1 == 1).collect();
                return (SolveStatus::Sat, Some(witness));
            }
        }
        return (SolveStatus::Unsat, None);
    }
    let (cnf, varmap) = aig_to_cnf(g);
    let res = solve(&cnf, Budget::default(), 0);
    assert!(
        res.status != SolveStatus::Timeout,
        "generated miter exceeded the labeling budget"
    );
    let witness = res.model.map(|m| {
        varmap
            .pi_vars
            .iter()
            .map(|&v| m[v as usize - 1])
            .collect()
    });
    (res.status, witness)
}

/// The resynthesis spins applied to derive the second copy.
const RESYNTH: [SynthAction; 4] = [
    SynthAction::Rewrite,
    SynthAction::Refactor,
    SynthAction::Balance,
    SynthAction::Resub,
];

/// Generate `n` labeled miter instances. Each pairs a random circuit with
/// a resynthesized copy; half the pairs (in expectation) also get one
/// inverted fanin edge, and the label records whether that fault is
/// observable. Deterministic for a fixed seed.
pub fn gen_bench(n: usize, ands: RangeInclusive<usize>, seed: u64) -> Vec<BenchInstance> {
    assert!(n > 0, "corpus size must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let num_pis = rng.gen_range(8..=24);
        let num_ands = rng.gen_range(ands.clone());
        let c = random_aig(&mut rng, num_pis, num_ands, 1);

        let mut c2 = c.clone();
        for _ in 0..rng.gen_range(3..=10) {
            c2 = apply_action(&c2, RESYNTH[rng.gen_range(0..RESYNTH.len())]);
        }

        let mut fault_injected = false;
        if c2.num_ands() > 0 && rng.gen_bool(0.5) {
            let first = c2.num_pis() as u32 + 1;
            let id = rng.gen_range(first..c2.num_nodes() as u32);
            c2.invert_fanin(id, rng.gen_range(0..2));
            fault_injected = true;
        }

        let mut miter = Aig::new(num_pis);
        let pis: Vec<Edge> = (0..num_pis).map(|p| miter.pi_edge(p)).collect();
        let a = miter.import(&c, &pis);
        let b = miter.import(&c2, &pis);
        let x = miter.add_xor(a[0], b[0]);
        miter.add_po(x);

        let (label, witness) = miter_status(&miter);
        // resynthesis is function-preserving, so only a fault can make
        // the miter satisfiable
        assert!(fault_injected || label == SolveStatus::Unsat);
        if let Some(w) = &witness {
            assert_eq!(miter.eval(w), vec![true], "witness must drive the miter");
        }
        out.push(BenchInstance {
            name: format!("miter{i:04}"),
            miter,
            label,
            fault_injected,
            witness,
        });
    }
    out
}
