//! Deep Q-learning over synthesis recipes: state assembly, the Q-network,
//! the terminal reward, and the training and rollout loops.
//!
//! States concatenate six structural features of the current graph
//! (relative to the episode's starting graph) with a fixed-length
//! signature of the starting graph, so one agent generalizes across
//! instances of different sizes.

pub mod agent;
pub mod net;
pub mod signature;

pub use agent::{
    evaluate, measure_decisions, random_policy_reward, rollout, run_recipe, select_action, train,
    write_training_csv, EpisodeLog, Replay, TrainResult,
};
pub use net::{load_checkpoint, save_checkpoint, td_update, CheckpointError, QNetwork};
pub use signature::signature;

use crate::aig::Aig;
use crate::solver::Budget;
use crate::synth::{extract_features, SynthAction};

pub const NUM_ACTIONS: usize = SynthAction::ALL.len();

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewardMode {
    /// -(b_final - b_init): decision count saved, in absolute decisions.
    Raw,
    /// (b_init - b_final) / b_init: fraction of decisions saved.
    Normalized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentConfig {
    /// Maximum actions per episode.
    pub max_steps: usize,
    pub gamma: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub episodes: usize,
    /// Target-network sync period, in environment steps.
    pub target_sync: usize,
    pub replay_capacity: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of episodes over which epsilon anneals linearly.
    pub eps_fraction: f64,
    pub seed: u64,
    pub signature_dim: usize,
    pub reward_mode: RewardMode,
    /// LUT size used when mapping for the reward measurement.
    pub lut_k: usize,
    /// Solver budget for reward measurements.
    pub budget: Budget,
}

impl Default for AgentConfig {
    fn default() -> AgentConfig {
        AgentConfig {
            max_steps: 10,
            gamma: 0.98,
            batch_size: 32,
            lr: 1e-5,
            episodes: 10_000,
            target_sync: 100,
            replay_capacity: 10_000,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_fraction: 0.2,
            seed: 0,
            signature_dim: 64,
            reward_mode: RewardMode::Normalized,
            lut_k: 4,
            budget: Budget::default(),
        }
    }
}

impl AgentConfig {
    pub fn state_dim(&self) -> usize {
        6 + self.signature_dim
    }

    /// Exploration rate for a 0-based episode index: linear from
    /// `eps_start` to `eps_end` over the first `eps_fraction` of episodes,
    /// constant afterwards.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        let horizon = (self.episodes as f64 * self.eps_fraction).max(1.0);
        let t = (episode as f64 / horizon).min(1.0);
        // lerp form that is exact at both endpoints
        (1.0 - t) * self.eps_start + t * self.eps_end
    }
}

/// Agent observation: features of the current graph plus the episode
/// signature of the starting graph.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub features: [f64; 6],
    pub signature: Vec<f64>,
}

impl StateVector {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.features);
        v.extend_from_slice(&self.signature);
        v
    }

    pub fn len(&self) -> usize {
        6 + self.signature.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Assemble the state for graph `g_t` of an episode that started at `g_0`.
/// `sig` is `signature(g_0, ..)`, computed once per episode.
pub fn make_state(g_t: &Aig, g_0: &Aig, sig: &[f64]) -> StateVector {
    StateVector {
        features: extract_features(g_t, g_0).to_array(),
        signature: sig.to_vec(),
    }
}

/// One replayed step. The reward is zero on every non-terminal step; the
/// whole return signal arrives with the terminal transition.
#[derive(Clone, Debug)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Episode return from the measured decision counts. Raw mode is the
/// signed count of decisions saved; normalized mode divides by the
/// starting count (zero starting count yields zero: nothing to improve).
pub fn terminal_reward(b_init: u64, b_final: u64, mode: RewardMode) -> f64 {
    let delta = b_init as f64 - b_final as f64;
    match mode {
        RewardMode::Raw => delta,
        RewardMode::Normalized => {
            if b_init == 0 {
                0.0
            } else {
                delta / b_init as f64
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::apply_action;
    use crate::testutil::random_aig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reward_sign_conventions() {
        assert_eq!(terminal_reward(100, 60, RewardMode::Raw), 40.0);
        assert_eq!(terminal_reward(100, 60, RewardMode::Normalized), 0.4);
        assert_eq!(terminal_reward(80, 80, RewardMode::Raw), 0.0);
        assert_eq!(terminal_reward(80, 80, RewardMode::Normalized), 0.0);
        assert_eq!(terminal_reward(0, 5, RewardMode::Normalized), 0.0);
        assert_eq!(terminal_reward(60, 100, RewardMode::Raw), -40.0);
    }

    #[test]
    fn epsilon_schedule_is_linear_then_flat() {
        let cfg = AgentConfig { episodes: 1000, ..AgentConfig::default() };
        assert_eq!(cfg.epsilon_at(0), 1.0);
        let mid = cfg.epsilon_at(100);
        assert!((mid - 0.525).abs() < 1e-12, "halfway point: {mid}");
        assert_eq!(cfg.epsilon_at(200), 0.05);
        assert_eq!(cfg.epsilon_at(500), 0.05);
        assert_eq!(cfg.epsilon_at(999), 0.05);
        // schedule never leaves [eps_end, eps_start]
        for e in 0..1000 {
            let eps = cfg.epsilon_at(e);
            assert!((0.05..=1.0).contains(&eps));
        }
    }

    #[test]
    fn state_has_identity_ratios_at_episode_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g0 = random_aig(&mut rng, 6, 20, 1);
        let sig = signature(&g0, 64, 7);
        let s = make_state(&g0, &g0, &sig);
        assert_eq!(s.len(), 70);
        assert_eq!(s.features[0], 1.0);
        assert_eq!(s.features[1], 1.0);
        assert_eq!(s.features[2], 1.0);
        assert_eq!(s.to_vec().len(), 70);
    }

    #[test]
    fn signature_part_is_constant_across_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g0 = random_aig(&mut rng, 6, 24, 1);
        let sig = signature(&g0, 64, 7);
        let mut g = g0.clone();
        let mut states = Vec::new();
        for action in [SynthAction::Balance, SynthAction::Rewrite, SynthAction::Resub] {
            g = apply_action(&g, action);
            states.push(make_state(&g, &g0, &sig));
        }
        for s in &states {
            assert_eq!(s.signature, sig);
        }
    }
}
