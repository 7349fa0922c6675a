//! The action-value network: a small fully connected net with rectifier
//! hidden layers and a linear output head, trained by plain SGD on the
//! squared TD error with global gradient-norm clipping.
//!
//! Everything is f64 and hand-rolled so the arithmetic is bit-for-bit
//! reproducible; the gradient path is validated against central finite
//! differences in the tests.

use std::fmt;
use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use super::{AgentConfig, RewardMode, Transition, NUM_ACTIONS};
use crate::solver::Budget;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HIDDEN: usize = 128;
const MAX_GRAD_NORM: f64 = 1.0;

const CKPT_MAGIC: [u8; 4] = *b"SFQN";
const CKPT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork {
    sizes: Vec<usize>,
    /// weights[l] is row-major sizes[l+1] x sizes[l].
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Per-parameter loss gradients, same layout as the network.
pub struct Gradients {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros(net: &QNetwork) -> Gradients {
        Gradients {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn norm(&self) -> f64 {
        let ss: f64 = self
            .weights
            .iter()
            .chain(self.biases.iter())
            .flat_map(|v| v.iter())
            .map(|g| g * g)
            .sum();
        ss.sqrt()
    }

    fn scale(&mut self, s: f64) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            for g in v.iter_mut() {
                *g *= s;
            }
        }
    }

    /// Flat accessor mirroring QNetwork::param, for gradient checking.
    pub fn param(&self, mut i: usize) -> f64 {
        for l in 0..self.weights.len() {
            if i < self.weights[l].len() {
                return self.weights[l][i];
            }
            i -= self.weights[l].len();
            if i < self.biases[l].len() {
                return self.biases[l][i];
            }
            i -= self.biases[l].len();
        }
        panic!("parameter index out of range");
    }
}

impl QNetwork {
    /// Standard shape: [input_dim, 128, 128, 5], Xavier-uniform weights.
    pub fn new(input_dim: usize, seed: u64) -> QNetwork {
        QNetwork::with_sizes(&[input_dim, HIDDEN, HIDDEN, NUM_ACTIONS], seed)
    }

    pub fn with_sizes(sizes: &[usize], seed: u64) -> QNetwork {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push((0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)).collect());
            biases.push(vec![0.0; fan_out]);
        }
        QNetwork { sizes: sizes.to_vec(), weights, biases }
    }

    /// All-zero parameters; useful as the documented tie-break baseline.
    pub fn zeros(input_dim: usize) -> QNetwork {
        let sizes = [input_dim, HIDDEN, HIDDEN, NUM_ACTIONS];
        QNetwork {
            sizes: sizes.to_vec(),
            weights: sizes.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect(),
            biases: sizes.windows(2).map(|w| vec![0.0; w[1]]).collect(),
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn num_actions(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Q values for a state.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.trace(x).pop().unwrap()
    }

    /// Post-activation values of every layer, input included.
    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(x.len(), self.sizes[0], "state width mismatch");
        let last = self.weights.len() - 1;
        let mut acts = vec![x.to_vec()];
        for l in 0..self.weights.len() {
            let n_in = self.sizes[l];
            let prev = &acts[l];
            let mut z = self.biases[l].clone();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                *zo += row.iter().zip(prev).map(|(w, a)| w * a).sum::<f64>();
            }
            if l < last {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            acts.push(z);
        }
        acts
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Flat parameter view: per layer, weights then biases.
    pub fn param(&self, mut i: usize) -> f64 {
        for l in 0..self.weights.len() {
            if i < self.weights[l].len() {
                return self.weights[l][i];
            }
            i -= self.weights[l].len();
            if i < self.biases[l].len() {
                return self.biases[l][i];
            }
            i -= self.biases[l].len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut i: usize, value: f64) {
        for l in 0..self.weights.len() {
            if i < self.weights[l].len() {
                self.weights[l][i] = value;
                return;
            }
            i -= self.weights[l].len();
            if i < self.biases[l].len() {
                self.biases[l][i] = value;
                return;
            }
            i -= self.biases[l].len();
        }
        panic!("parameter index out of range");
    }

    fn td_target(&self, target: &QNetwork, t: &Transition, gamma: f64) -> f64 {
        if t.terminal {
            t.reward
        } else {
            let next = target.forward(&t.next_state);
            let best = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            t.reward + gamma * best
        }
    }

    /// Mean squared TD error of the batch, no parameter update.
    pub fn td_loss(&self, target: &QNetwork, batch: &[Transition], gamma: f64) -> f64 {
        assert!(!batch.is_empty());
        let mut loss = 0.0;
        for t in batch {
            let q = self.forward(&t.state)[t.action];
            let err = q - self.td_target(target, t, gamma);
            loss += err * err;
        }
        loss / batch.len() as f64
    }

    /// Loss plus its gradient with respect to every parameter.
    pub fn td_gradients(&self, target: &QNetwork, batch: &[Transition], gamma: f64) -> (f64, Gradients) {
        assert!(!batch.is_empty());
        let mut grads = Gradients::zeros(self);
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        let last = self.weights.len() - 1;
        for t in batch {
            let acts = self.trace(&t.state);
            let q = acts[last + 1][t.action];
            let err = q - self.td_target(target, t, gamma);
            loss += err * err * scale;

            let mut delta = vec![0.0; self.sizes[last + 1]];
            delta[t.action] = 2.0 * err * scale;
            for l in (0..=last).rev() {
                let n_in = self.sizes[l];
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    grads.biases[l][o] += d;
                    let row = &mut grads.weights[l][o * n_in..(o + 1) * n_in];
                    for (g, a) in row.iter_mut().zip(&acts[l]) {
                        *g += d * a;
                    }
                }
                if l == 0 {
                    break;
                }
                let mut prev = vec![0.0; n_in];
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                // rectifier derivative: pass only where the unit fired
                for (p, a) in prev.iter_mut().zip(&acts[l]) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        (loss, grads)
    }

    fn apply(&mut self, grads: &Gradients, lr: f64) {
        for l in 0..self.weights.len() {
            for (w, g) in self.weights[l].iter_mut().zip(&grads.weights[l]) {
                *w -= lr * g;
            }
            for (b, g) in self.biases[l].iter_mut().zip(&grads.biases[l]) {
                *b -= lr * g;
            }
        }
    }
}

/// One SGD step on the mean squared TD error, bootstrapping non-terminal
/// transitions through the target network. The global gradient norm is
/// clipped to 1.0. Returns the pre-step loss.
pub fn td_update(
    q: &mut QNetwork,
    target: &QNetwork,
    batch: &[Transition],
    gamma: f64,
    lr: f64,
) -> f64 {
    let (loss, mut grads) = q.td_gradients(target, batch, gamma);
    let norm = grads.norm();
    if norm > MAX_GRAD_NORM {
        grads.scale(MAX_GRAD_NORM / norm);
    }
    q.apply(&grads, lr);
    loss
}

#[derive(Debug)]
pub enum CheckpointError {
    Io(io::Error),
    Format(String),
}

impl fmt::Display for CheckpointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckpointError::Io(e) => write!(f, "checkpoint io: {e}"),
            CheckpointError::Format(m) => write!(f, "bad checkpoint: {m}"),
        }
    }
}

impl std::error::Error for CheckpointError {}

impl From<io::Error> for CheckpointError {
    fn from(e: io::Error) -> CheckpointError {
        CheckpointError::Io(e)
    }
}

/// Write the network and the configuration that produced it as a
/// versioned flat binary: magic, version, layer sizes, then per layer the
/// row-major weights and biases, then the config echo. Little-endian.
pub fn save_checkpoint(path: &Path, q: &QNetwork, cfg: &AgentConfig) -> io::Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(&CKPT_MAGIC);
    buf.extend_from_slice(&CKPT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(q.sizes.len() as u32).to_le_bytes());
    for &s in &q.sizes {
        buf.extend_from_slice(&(s as u32).to_le_bytes());
    }
    for l in 0..q.weights.len() {
        for w in &q.weights[l] {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        for b in &q.biases[l] {
            buf.extend_from_slice(&b.to_le_bytes());
        }
    }
    for v in [
        cfg.max_steps as u64,
        cfg.batch_size as u64,
        cfg.episodes as u64,
        cfg.target_sync as u64,
        cfg.replay_capacity as u64,
        cfg.seed,
        cfg.signature_dim as u64,
        cfg.lut_k as u64,
        cfg.budget.conflict_limit,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in [cfg.gamma, cfg.lr, cfg.eps_start, cfg.eps_end, cfg.eps_fraction] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.push(match cfg.reward_mode {
        RewardMode::Raw => 0,
        RewardMode::Normalized => 1,
    });
    buf.push(cfg.budget.time_limit.is_some() as u8);
    buf.extend_from_slice(&cfg.budget.time_limit.unwrap_or(0.0).to_le_bytes());
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)
}

struct Cursor<'a> {
    data: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.at + n > self.data.len() {
            return Err(CheckpointError::Format("truncated".into()));
        }
        let s = &self.data[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn load_checkpoint(path: &Path) -> Result<(QNetwork, AgentConfig), CheckpointError> {
    let data = fs::read(path)?;
    let mut c = Cursor { data: &data, at: 0 };
    if c.take(4)? != CKPT_MAGIC {
        return Err(CheckpointError::Format("wrong magic".into()));
    }
    let version = c.u32()?;
    if version != CKPT_VERSION {
        return Err(CheckpointError::Format(format!("unsupported version {version}")));
    }
    let n_sizes = c.u32()? as usize;
    if !(2..=16).contains(&n_sizes) {
        return Err(CheckpointError::Format("implausible layer count".into()));
    }
    let mut sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        let s = c.u32()? as usize;
        if s == 0 {
            return Err(CheckpointError::Format("zero-width layer".into()));
        }
        sizes.push(s);
    }
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for w in sizes.windows(2) {
        let mut layer = Vec::with_capacity(w[0] * w[1]);
        for _ in 0..w[0] * w[1] {
            layer.push(c.f64()?);
        }
        weights.push(layer);
        let mut bias = Vec::with_capacity(w[1]);
        for _ in 0..w[1] {
            bias.push(c.f64()?);
        }
        biases.push(bias);
    }
    let max_steps = c.u64()? as usize;
    let batch_size = c.u64()? as usize;
    let episodes = c.u64()? as usize;
    let target_sync = c.u64()? as usize;
    let replay_capacity = c.u64()? as usize;
    let seed = c.u64()?;
    let signature_dim = c.u64()? as usize;
    let lut_k = c.u64()? as usize;
    let conflict_limit = c.u64()?;
    let gamma = c.f64()?;
    let lr = c.f64()?;
    let eps_start = c.f64()?;
    let eps_end = c.f64()?;
    let eps_fraction = c.f64()?;
    let reward_mode = match c.u8()? {
        0 => RewardMode::Raw,
        1 => RewardMode::Normalized,
        m => return Err(CheckpointError::Format(format!("unknown reward mode {m}"))),
    };
    let has_time = c.u8()? != 0;
    let time_raw = c.f64()?;
    if c.at != data.len() {
        return Err(CheckpointError::Format("trailing bytes".into()));
    }
    let cfg = AgentConfig {
        max_steps,
        gamma,
        batch_size,
        lr,
        episodes,
        target_sync,
        replay_capacity,
        eps_start,
        eps_end,
        eps_fraction,
        seed,
        signature_dim,
        reward_mode,
        lut_k,
        budget: Budget {
            conflict_limit,
            time_limit: has_time.then_some(time_raw),
        },
    };
    Ok((QNetwork { sizes, weights, biases }, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_batch(dim: usize, seed: u64) -> Vec<Transition> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..6)
            .map(|i| Transition {
                state: (0..dim).map(|_| rng.gen::<f64>()).collect(),
                action: rng.gen_range(0..NUM_ACTIONS),
                reward: if i % 2 == 0 { rng.gen_range(-0.5..0.5) } else { 0.0 },
                next_state: (0..dim).map(|_| rng.gen::<f64>()).collect(),
                terminal: i % 2 == 0,
            })
            .collect()
    }

    #[test]
    fn forward_has_action_width_and_is_deterministic() {
        let net = QNetwork::new(70, 3);
        assert_eq!(net.sizes(), &[70, 128, 128, 5]);
        let x: Vec<f64> = (0..70).map(|i| i as f64 / 70.0).collect();
        let a = net.forward(&x);
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|v| v.is_finite()));
        assert_eq!(a, net.forward(&x));
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = QNetwork::zeros(70);
        let x = vec![0.3; 70];
        assert_eq!(net.forward(&x), vec![0.0; 5]);
    }

    #[test]
    fn distinct_seeds_give_distinct_parameters() {
        let a = QNetwork::new(70, 1);
        let b = QNetwork::new(70, 2);
        assert_ne!(a, b);
        assert_eq!(a, QNetwork::new(70, 1));
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let dim = 70;
        let net = QNetwork::new(dim, 11);
        let target = QNetwork::new(dim, 12);
        let batch = toy_batch(dim, 13);
        let gamma = 0.98;
        let (_, grads) = net.td_gradients(&target, &batch, gamma);

        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let pc = net.param_count();
        let h = 1e-5;
        let mut checked = 0;
        // sampled coordinates plus the output biases (always reachable)
        let mut coords: Vec<usize> = (0..200).map(|_| rng.gen_range(0..pc)).collect();
        coords.extend(pc - NUM_ACTIONS..pc);
        for i in coords {
            let mut probe = net.clone();
            let v = net.param(i);
            probe.set_param(i, v + h);
            let up = probe.td_loss(&target, &batch, gamma);
            probe.set_param(i, v - h);
            let down = probe.td_loss(&target, &batch, gamma);
            let fd = (up - down) / (2.0 * h);
            let bp = grads.param(i);
            let denom = fd.abs().max(bp.abs()).max(1e-6);
            assert!(
                ((fd - bp) / denom).abs() < 1e-4,
                "param {i}: finite diff {fd} vs backprop {bp}"
            );
            checked += 1;
        }
        assert!(checked > 200);
    }

    #[test]
    fn loss_shrinks_on_a_fixed_batch() {
        let dim = 70;
        let mut net = QNetwork::new(dim, 21);
        let target = net.clone();
        let batch = toy_batch(dim, 22);
        // larger-than-default lr keeps the unit test fast; the default
        // rate shows the same trend over more steps
        let lr = 1e-3;
        let losses: Vec<f64> = (0..500)
            .map(|_| td_update(&mut net, &target, &batch, 0.98, lr))
            .collect();
        let head: f64 = losses[..50].iter().sum::<f64>() / 50.0;
        let tail: f64 = losses[450..].iter().sum::<f64>() / 50.0;
        assert!(tail < head, "head {head} tail {tail}");
        assert!(losses[499] < losses[0]);
    }

    #[test]
    fn loss_examples_from_the_reward_shape() {
        // gamma 0, reward 1, zero net: squared error is exactly 1
        let net = QNetwork::zeros(8);
        let small = |terminal, reward| Transition {
            state: vec![0.1; 8],
            action: 2,
            reward,
            next_state: vec![0.2; 8],
            terminal,
        };
        let l = net.td_loss(&net, &[small(false, 1.0)], 0.0);
        assert!((l - 1.0).abs() < 1e-12);
        // terminal with reward equal to the prediction contributes zero
        let l = net.td_loss(&net, &[small(true, 0.0)], 0.98);
        assert_eq!(l, 0.0);
    }

    #[test]
    fn terminal_transitions_drop_the_bootstrap() {
        let q = QNetwork::zeros(8);
        let mut target = QNetwork::zeros(8);
        // zero weights, so the output biases are the target's Q values
        let pc = target.param_count();
        target.set_param(pc - NUM_ACTIONS, 5.0);
        let t = |terminal| Transition {
            state: vec![0.5; 8],
            action: 0,
            reward: 1.0,
            next_state: vec![0.5; 8],
            terminal,
        };
        let live = q.td_loss(&target, &[t(false)], 0.5);
        let done = q.td_loss(&target, &[t(true)], 0.5);
        // live target: 1 + 0.5 * 5 = 3.5; terminal target: 1
        assert!((live - 12.25).abs() < 1e-12);
        assert!((done - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_norm_is_clipped() {
        let dim = 12;
        let mut net = QNetwork::new(dim, 5);
        let before = net.clone();
        let target = net.clone();
        let batch = vec![Transition {
            state: vec![1.0; dim],
            action: 1,
            reward: 1e9,
            next_state: vec![1.0; dim],
            terminal: true,
        }];
        let lr = 0.5;
        td_update(&mut net, &target, &batch, 0.98, lr);
        let step: f64 = (0..net.param_count())
            .map(|i| (net.param(i) - before.param(i)).powi(2))
            .sum();
        assert!(step.sqrt() <= lr * MAX_GRAD_NORM + 1e-9, "step {}", step.sqrt());
        assert!(step > 0.0);
    }

    #[test]
    fn checkpoint_roundtrips_parameters_and_config() {
        let net = QNetwork::new(70, 33);
        let cfg = AgentConfig {
            episodes: 123,
            seed: 9,
            reward_mode: RewardMode::Raw,
            budget: Budget { conflict_limit: 5000, time_limit: Some(1.5) },
            ..AgentConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.qnet");
        save_checkpoint(&path, &net, &cfg).unwrap();
        let (back, cfg_back) = load_checkpoint(&path).unwrap();
        assert_eq!(back, net);
        assert_eq!(cfg_back, cfg);
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.qnet");
        fs::write(&path, b"not a checkpoint").unwrap();
        assert!(matches!(load_checkpoint(&path), Err(CheckpointError::Format(_))));

        let net = QNetwork::new(8, 1);
        let good = dir.path().join("good.qnet");
        save_checkpoint(&good, &net, &AgentConfig::default()).unwrap();
        let mut bytes = fs::read(&good).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(CheckpointError::Format(_))));
    }
}
