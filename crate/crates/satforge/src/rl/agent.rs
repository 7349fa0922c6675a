//! Policy, replay buffer, episode rollouts, and the training loop.
//!
//! An episode starts from a normalized graph, applies up to T agent
//! actions, and scores the result by mapping and re-encoding both the
//! initial and final graphs through the identical pipeline and comparing
//! solver decision counts. The whole loop is deterministic per seed.

use std::io;
use std::path::Path;

use super::net::td_update;
use super::{
    make_state, signature, terminal_reward, AgentConfig, QNetwork, StateVector, Transition,
    NUM_ACTIONS,
};
use crate::aig::Aig;
use crate::cnf2aig::normalize;
use crate::encode::{lut_to_cnf, LutEncoding};
use crate::lutmap::MapCost;
use crate::solver::{solve, SolveStatus};
use crate::synth::{apply_action, SynthAction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pick an action: with probability `eps` uniformly at random, otherwise
/// the Q-value argmax with ties broken toward the lowest action index.
/// The greedy path never consumes randomness.
pub fn select_action(
    q: &QNetwork,
    s: &StateVector,
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> SynthAction {
    assert!((0.0..=1.0).contains(&eps));
    if eps > 0.0 && rng.gen::<f64>() < eps {
        return SynthAction::ALL[rng.gen_range(0..NUM_ACTIONS)];
    }
    let qs = q.forward(&s.to_vec());
    let mut best = 0;
    for (i, &v) in qs.iter().enumerate().skip(1) {
        if v > qs[best] {
            best = i;
        }
    }
    SynthAction::from_index(best).unwrap()
}

/// Bounded uniform replay memory; past capacity the oldest entry is
/// overwritten first.
pub struct Replay {
    buf: Vec<Transition>,
    cap: usize,
    next: usize,
}

impl Replay {
    pub fn new(cap: usize) -> Replay {
        assert!(cap > 0);
        Replay { buf: Vec::new(), cap, next: 0 }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.buf.len() < self.cap {
            self.buf.push(t);
        } else {
            self.buf[self.next] = t;
            self.next = (self.next + 1) % self.cap;
        }
    }

    /// Uniform sample without replacement; `n` must not exceed len().
    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Transition> {
        assert!(n <= self.buf.len());
        let mut idx: Vec<usize> = (0..self.buf.len()).collect();
        for i in 0..n {
            let j = rng.gen_range(i..idx.len());
            idx.swap(i, j);
        }
        idx[..n].iter().map(|&i| self.buf[i].clone()).collect()
    }
}

/// Play one episode from `g0` (signature `sig`) under the given policy.
/// Returns the transitions (terminal reward still zero; the caller fills
/// it in once measured), the final graph, and the action list.
pub fn rollout(
    g0: &Aig,
    sig: &[f64],
    net: &QNetwork,
    eps: f64,
    max_steps: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<Transition>, Aig, Vec<SynthAction>) {
    assert!(max_steps > 0);
    let mut g = g0.clone();
    let mut transitions = Vec::new();
    let mut recipe = Vec::new();
    for t in 0..max_steps {
        let s = make_state(&g, g0, sig);
        let a = select_action(net, &s, eps, rng);
        recipe.push(a);
        let g_next = apply_action(&g, a);
        let s_next = make_state(&g_next, g0, sig);
        let terminal = a == SynthAction::End || t + 1 == max_steps;
        transitions.push(Transition {
            state: s.to_vec(),
            action: a.index(),
            reward: 0.0,
            next_state: s_next.to_vec(),
            terminal,
        });
        g = g_next;
        if a == SynthAction::End {
            break;
        }
    }
    (transitions, g, recipe)
}

/// Decision count of `g` after LUT mapping under the branching cost and
/// re-encoding. The flag reports that the solve hit its budget, in which
/// case the count is the value accumulated at the cap.
pub fn measure_decisions(g: &Aig, cfg: &AgentConfig) -> (u64, bool) {
    let netlist = crate::lutmap::map(g, cfg.lut_k, MapCost::Branching);
    let (cnf, _) = lut_to_cnf(&netlist, LutEncoding::PrimeCover);
    let r = solve(&cnf, cfg.budget, cfg.seed);
    (r.decisions.unwrap_or(0), r.status == SolveStatus::Timeout)
}

/// Greedy recipe extraction: deterministic ε=0 rollout of at most
/// `cfg.max_steps` actions, stopping at END.
pub fn run_recipe(g0: &Aig, net: &QNetwork, cfg: &AgentConfig) -> (Aig, Vec<SynthAction>) {
    let sig = signature(g0, cfg.signature_dim, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (_, g, recipe) = rollout(g0, &sig, net, 0.0, cfg.max_steps, &mut rng);
    (g, recipe)
}

/// Normalized-pipeline reward of the greedy policy on one raw instance.
pub fn evaluate(g: &Aig, net: &QNetwork, cfg: &AgentConfig) -> f64 {
    let g0 = normalize(g);
    let (b_init, _) = measure_decisions(&g0, cfg);
    let (g_final, recipe) = run_recipe(&g0, net, cfg);
    let (b_final, _) = if recipe == [SynthAction::End] {
        (b_init, false)
    } else {
        measure_decisions(&g_final, cfg)
    };
    terminal_reward(b_init, b_final, cfg.reward_mode)
}

/// Mean reward of uniformly random recipes on one raw instance, the
/// baseline a trained policy has to beat.
pub fn random_policy_reward(
    g: &Aig,
    rollouts: usize,
    cfg: &AgentConfig,
    rng: &mut ChaCha8Rng,
) -> f64 {
    assert!(rollouts > 0);
    let g0 = normalize(g);
    let sig = signature(&g0, cfg.signature_dim, cfg.seed);
    let (b_init, _) = measure_decisions(&g0, cfg);
    let zero = QNetwork::zeros(cfg.state_dim());
    let mut total = 0.0;
    for _ in 0..rollouts {
        let (_, g_final, recipe) = rollout(&g0, &sig, &zero, 1.0, cfg.max_steps, rng);
        let (b_final, _) = if recipe == [SynthAction::End] {
            (b_init, false)
        } else {
            measure_decisions(&g_final, cfg)
        };
        total += terminal_reward(b_init, b_final, cfg.reward_mode);
    }
    total / rollouts as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub instance: usize,
    /// Space-joined action names in play order.
    pub recipe: String,
    pub b_init: u64,
    pub b_final: u64,
    pub reward: f64,
    /// Mean TD loss over this episode's updates, 0 before learning starts.
    pub loss: f64,
    pub epsilon: f64,
    /// A reward measurement hit the solver budget.
    pub timeout: bool,
}

pub struct TrainResult {
    pub net: QNetwork,
    pub log: Vec<EpisodeLog>,
}

struct Prepared {
    g0: Aig,
    sig: Vec<f64>,
    b_init: u64,
    timeout: bool,
}

/// Train a fresh network with DQN over the instance corpus. Instances are
/// taken as recovered (raw) graphs; each episode starts from the
/// normalized form, and both reward endpoints go through the identical
/// map-encode-solve pipeline so the difference isolates the recipe.
pub fn train(instances: &[Aig], cfg: &AgentConfig) -> TrainResult {
    assert!(!instances.is_empty());
    let mut net = QNetwork::new(cfg.state_dim(), cfg.seed);
    let mut target = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let mut replay = Replay::new(cfg.replay_capacity);
    let mut log = Vec::with_capacity(cfg.episodes);
    let mut prepared: Vec<Option<Prepared>> = (0..instances.len()).map(|_| None).collect();
    let mut env_steps = 0usize;

    for episode in 0..cfg.episodes {
        let idx = rng.gen_range(0..instances.len());
        if prepared[idx].is_none() {
            let g0 = normalize(&instances[idx]);
            let sig = signature(&g0, cfg.signature_dim, cfg.seed);
            let (b_init, timeout) = measure_decisions(&g0, cfg);
            prepared[idx] = Some(Prepared { g0, sig, b_init, timeout });
        }
        let prep = prepared[idx].as_ref().unwrap();
        let eps = cfg.epsilon_at(episode);
        let (mut transitions, g_final, recipe) =
            rollout(&prep.g0, &prep.sig, &net, eps, cfg.max_steps, &mut rng);

        let (b_final, final_timeout) = if recipe == [SynthAction::End] {
            (prep.b_init, prep.timeout)
        } else {
            measure_decisions(&g_final, cfg)
        };
        let reward = terminal_reward(prep.b_init, b_final, cfg.reward_mode);
        let b_init = prep.b_init;
        let timeout = prep.timeout || final_timeout;
        transitions.last_mut().unwrap().reward = reward;
        // the Eq.-3 shape: reward only at the end, episodes never overrun
        assert!(transitions.len() <= cfg.max_steps);
        assert!(transitions.last().unwrap().terminal);
        for t in &transitions[..transitions.len() - 1] {
            assert_eq!(t.reward, 0.0);
            assert!(!t.terminal);
        }

        let mut loss_sum = 0.0;
        let mut updates = 0usize;
        for t in transitions {
            replay.push(t);
            env_steps += 1;
            if replay.len() >= cfg.batch_size {
                let batch = replay.sample(cfg.batch_size, &mut rng);
                loss_sum += td_update(&mut net, &target, &batch, cfg.gamma, cfg.lr);
                updates += 1;
            }
            if env_steps.is_multiple_of(cfg.target_sync) {
                target = net.clone();
            }
        }

        log.push(EpisodeLog {
            episode,
            instance: idx,
            recipe: recipe.iter().map(|a| a.name()).collect::<Vec<_>>().join(" "),
            b_init,
            b_final,
            reward,
            loss: if updates == 0 { 0.0 } else { loss_sum / updates as f64 },
            epsilon: eps,
            timeout,
        });
    }
    TrainResult { net, log }
}

/// Serialize a training log as CSV.
pub fn write_training_csv(path: &Path, log: &[EpisodeLog]) -> io::Result<()> {
    let mut text = String::from("episode,instance,recipe,b_init,b_final,reward,loss,epsilon,timeout\n");
    for row in log {
        text.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6},{}\n",
            row.episode,
            row.instance,
            row.recipe,
            row.b_init,
            row.b_final,
            row.reward,
            row.loss,
            row.epsilon,
            row.timeout as u8,
        ));
    }
    std::fs::write(path, text)
}
