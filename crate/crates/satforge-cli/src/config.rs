//! Option resolution: command-line flags override the TOML config file,
//! which overrides built-in defaults. The `SATFORGE_SOLVER` environment
//! variable outranks both for the solver choice, matching the adapter.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use serde::Deserialize;

use satforge::encode::LutEncoding;
use satforge::io::aiger::parse_aiger;
use satforge::io::dimacs::parse_dimacs;
use satforge::lutmap::MapCost;
use satforge::pipeline::{PipelineConfig, PipelineInput, RecipeSource, SolverChoice};
use satforge::rl::{load_checkpoint, AgentConfig, RewardMode};
use satforge::solver::{Budget, SOLVER_ENV};
use satforge::synth::SynthAction;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CostArg {
    Area,
    Branching,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EncodingArg {
    Prime,
    PerRow,
}

/// Options shared by every pipeline-driving subcommand.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct CommonOpts {
    /// LUT input arity, 2 to 6.
    #[arg(long)]
    pub k: Option<usize>,
    /// Mapper cost metric.
    #[arg(long, value_enum)]
    pub cost: Option<CostArg>,
    /// LUT-to-CNF clause generation.
    #[arg(long, value_enum)]
    pub encoding: Option<EncodingArg>,
    /// RNG seed for every derived stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Conflict budget per solver call.
    #[arg(long)]
    pub conflict_limit: Option<u64>,
    /// Wall-clock budget per solver call, seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// "internal" or an external command template with {file};
    /// the SATFORGE_SOLVER environment variable outranks this.
    #[arg(long)]
    pub solver: Option<String>,
    /// Signature width of agent states.
    #[arg(long)]
    pub signature_dim: Option<usize>,
    /// Maximum recipe length.
    #[arg(long)]
    pub max_steps: Option<usize>,
}

/// The TOML side of the same options, plus a training section.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub k: Option<usize>,
    pub cost: Option<String>,
    pub encoding: Option<String>,
    pub seed: Option<u64>,
    pub conflict_limit: Option<u64>,
    pub time_limit: Option<f64>,
    pub solver: Option<String>,
    pub signature_dim: Option<usize>,
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub train: TrainFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub episodes: Option<usize>,
    pub gamma: Option<f64>,
    pub lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub target_sync: Option<usize>,
    pub replay_capacity: Option<usize>,
    pub eps_start: Option<f64>,
    pub eps_end: Option<f64>,
    pub eps_fraction: Option<f64>,
    pub reward_mode: Option<String>,
}

pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Fully resolved pipeline options.
#[derive(Clone, Debug)]
pub struct Settings {
    pub k: usize,
    pub cost: MapCost,
    pub encoding: LutEncoding,
    pub seed: u64,
    pub budget: Budget,
    pub solver: SolverChoice,
    pub signature_dim: usize,
    pub max_steps: usize,
}

impl Settings {
    pub fn resolve(opts: &CommonOpts, file: &FileConfig) -> Result<Settings> {
        let cost = match opts.cost {
            Some(CostArg::Area) => MapCost::Area,
            Some(CostArg::Branching) => MapCost::Branching,
            None => match file.cost.as_deref() {
                Some("area") => MapCost::Area,
                Some("branching") | None => MapCost::Branching,
                Some(other) => bail!("unknown cost mode '{other}'"),
            },
        };
        let encoding = match opts.encoding {
            Some(EncodingArg::Prime) => LutEncoding::PrimeCover,
            Some(EncodingArg::PerRow) => LutEncoding::PerRow,
            None => match file.encoding.as_deref() {
                Some("prime") | None => LutEncoding::PrimeCover,
                Some("per-row") => LutEncoding::PerRow,
                Some(other) => bail!("unknown encoding '{other}'"),
            },
        };
        let defaults = Budget::default();
        let budget = Budget {
            conflict_limit: opts
                .conflict_limit
                .or(file.conflict_limit)
                .unwrap_or(defaults.conflict_limit),
            time_limit: opts.time_limit.or(file.time_limit).or(defaults.time_limit),
        };
        let solver = resolve_solver(opts.solver.as_deref().or(file.solver.as_deref()))?;
        Ok(Settings {
            k: opts.k.or(file.k).unwrap_or(4),
            cost,
            encoding,
            seed: opts.seed.or(file.seed).unwrap_or(0),
            budget,
            solver,
            signature_dim: opts.signature_dim.or(file.signature_dim).unwrap_or(64),
            max_steps: opts.max_steps.or(file.max_steps).unwrap_or(10),
        })
    }

    /// Settings as a pipeline config with the given recipe source.
    pub fn pipeline(&self, recipe: RecipeSource) -> PipelineConfig {
        PipelineConfig {
            recipe,
            max_steps: self.max_steps,
            k: self.k,
            cost: self.cost,
            encoding: self.encoding,
            solver: self.solver.clone(),
            budget: self.budget,
            seed: self.seed,
            signature_dim: self.signature_dim,
        }
    }

    /// Settings as an agent config, with the training section applied.
    pub fn agent(&self, train: &TrainFile) -> Result<AgentConfig> {
        let d = AgentConfig::default();
        let reward_mode = match train.reward_mode.as_deref() {
            Some("raw") => RewardMode::Raw,
            Some("normalized") | None => RewardMode::Normalized,
            Some(other) => bail!("unknown reward mode '{other}'"),
        };
        Ok(AgentConfig {
            max_steps: self.max_steps,
            gamma: train.gamma.unwrap_or(d.gamma),
            batch_size: train.batch_size.unwrap_or(d.batch_size),
            lr: train.lr.unwrap_or(d.lr),
            episodes: train.episodes.unwrap_or(d.episodes),
            target_sync: train.target_sync.unwrap_or(d.target_sync),
            replay_capacity: train.replay_capacity.unwrap_or(d.replay_capacity),
            eps_start: train.eps_start.unwrap_or(d.eps_start),
            eps_end: train.eps_end.unwrap_or(d.eps_end),
            eps_fraction: train.eps_fraction.unwrap_or(d.eps_fraction),
            seed: self.seed,
            signature_dim: self.signature_dim,
            reward_mode,
            lut_k: self.k,
            budget: self.budget,
        })
    }
}

fn resolve_solver(configured: Option<&str>) -> Result<SolverChoice> {
    if let Ok(env) = std::env::var(SOLVER_ENV) {
        if !env.trim().is_empty() {
            return Ok(SolverChoice::External(env));
        }
    }
    Ok(match configured {
        None | Some("internal") => SolverChoice::Internal,
        Some(cmd) => SolverChoice::External(cmd.to_string()),
    })
}

/// Parse one recipe spec: `none`, `fixed:balance,rewrite`, `random:6`,
/// or `agent:checkpoint.bin`. Returns the spec's display name too.
pub fn parse_recipe(spec: &str) -> Result<(String, RecipeSource)> {
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k, Some(r)),
        None => (spec, None),
    };
    let source = match (kind, rest) {
        ("none", None) => RecipeSource::None,
        ("fixed", Some(names)) => {
            let actions = names
                .split(',')
                .map(|n| {
                    SynthAction::from_name(n.trim())
                        .ok_or_else(|| anyhow!("unknown action '{n}'"))
                })
                .collect::<Result<Vec<_>>>()?;
            RecipeSource::Fixed(actions)
        }
        ("random", Some(steps)) => RecipeSource::Random {
            steps: steps.parse().context("steps in random:<steps>")?,
        },
        ("agent", Some(path)) => {
            let (net, _) = load_checkpoint(Path::new(path))
                .map_err(|e| anyhow!("loading checkpoint {path}: {e}"))?;
            RecipeSource::Agent(Box::new(net))
        }
        _ => bail!("bad recipe spec '{spec}' (none | fixed:a,b | random:N | agent:PATH)"),
    };
    Ok((spec.to_string(), source))
}

/// Signature width recorded in an `agent:` recipe's checkpoint, so the
/// pipeline can match it.
pub fn checkpoint_signature_dim(spec: &str) -> Result<Option<usize>> {
    let Some(path) = spec.strip_prefix("agent:") else {
        return Ok(None);
    };
    let (_, cfg) = load_checkpoint(Path::new(path))
        .map_err(|e| anyhow!("loading checkpoint {path}: {e}"))?;
    Ok(Some(cfg.signature_dim))
}

/// Read an instance file, deciding the format by extension and, failing
/// that, by the first word of content.
pub fn load_input(path: &Path) -> Result<PipelineInput> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let looks_aiger = matches!(ext, "aag") || text.trim_start().starts_with("aag ");
    if looks_aiger {
        let g = parse_aiger(&text)
            .map_err(|e| anyhow!("parse: {}: {e}", path.display()))?;
        Ok(PipelineInput::Aig(g))
    } else {
        let doc = parse_dimacs(&text)
            .map_err(|e| anyhow!("parse: {}: {e}", path.display()))?;
        for w in &doc.warnings {
            eprintln!("warning: {}: {w}", path.display());
        }
        Ok(PipelineInput::Cnf(doc.cnf))
    }
}

/// Load every `.cnf`/`.aag` file in a directory, sorted by name.
pub fn load_corpus(dir: &Path) -> Result<Vec<(String, PipelineInput)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading corpus dir {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("cnf") | Some("aag") | Some("dimacs")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .cnf/.aag instances in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("instance")
                .to_string();
            Ok((name, load_input(p)?))
        })
        .collect()
}
