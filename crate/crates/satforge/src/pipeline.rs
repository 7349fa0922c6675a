//! End-to-end preprocessing: input CNF or circuit to AIG, a synthesis
//! recipe, cost-aware LUT mapping, and re-encoding to CNF, with a timed
//! report row per instance.

use std::fmt;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::aig::Aig;
use crate::cnf::Cnf;
use crate::cnf2aig::{normalize, recover};
use crate::encode::{aig_to_cnf, lut_to_cnf, LutEncoding};
use crate::io::blif::emit_blif;
use crate::io::dimacs::{emit_dimacs, Sidecar};
use crate::lutmap::{map, MapCost};
use crate::rl::{make_state, signature, QNetwork};
use crate::solver::{solve, solve_external, Budget, SolveResult, SolveStatus};
use crate::synth::{apply_action, SynthAction};

/// Where the synthesis recipe comes from.
#[derive(Clone, Debug)]
pub enum RecipeSource {
    /// No synthesis steps; the normalized graph is mapped directly.
    None,
    /// A fixed action list, applied in order; an `end` entry stops early.
    Fixed(Vec<SynthAction>),
    /// Uniformly random actions, stopping early on `end`.
    Random { steps: usize },
    /// Greedy rollout of a trained Q-network.
    Agent(Box<QNetwork>),
}

/// Which solver measures the decision counts in the report row.
#[derive(Clone, Debug, PartialEq)]
pub enum SolverChoice {
    Internal,
    /// Command template for an external solver (see the solver module).
    External(String),
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub recipe: RecipeSource,
    /// Maximum recipe length for random and agent sources.
    pub max_steps: usize,
    pub k: usize,
    pub cost: MapCost,
    pub encoding: LutEncoding,
    pub solver: SolverChoice,
    pub budget: Budget,
    pub seed: u64,
    /// Signature width for agent states; must match the checkpoint.
    pub signature_dim: usize,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            recipe: RecipeSource::None,
            max_steps: 10,
            k: 4,
            cost: MapCost::Branching,
            encoding: LutEncoding::PrimeCover,
            solver: SolverChoice::Internal,
            budget: Budget::default(),
            seed: 0,
            signature_dim: 64,
        }
    }
}

/// Pipeline input: a formula or a circuit.
#[derive(Clone, Debug)]
pub enum PipelineInput {
    Cnf(Cnf),
    Aig(Aig),
}

/// A stage-tagged failure.
#[derive(Debug)]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for PipelineError {}

/// One report row; times in seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub instance: String,
    pub vars_in: u32,
    pub clauses_in: usize,
    pub vars_out: u32,
    pub clauses_out: usize,
    pub t_agent: f64,
    pub t_trans: f64,
    pub t_solve: f64,
    /// Always the sum of the three components above.
    pub t_all: f64,
    pub decisions_in: u64,
    pub decisions_out: u64,
    pub reduction_pct: f64,
    pub status_in: SolveStatus,
    pub status_out: SolveStatus,
    pub recipe: String,
}

/// Everything `preprocess` produces for one instance.
#[derive(Clone, Debug)]
pub struct Preprocessed {
    pub cnf: Cnf,
    pub sidecar: Sidecar,
    pub dimacs: String,
    pub blif: String,
    /// The synthesized graph the netlist was mapped from.
    pub aig: Aig,
    pub recipe: Vec<SynthAction>,
    pub row: ReportRow,
}

/// Percentage drop from `before` to `after`; zero when there is no baseline.
pub fn reduction_pct(before: u64, after: u64) -> f64 {
    if before == 0 {
        0.0
    } else {
        (before as f64 - after as f64) / before as f64 * 100.0
    }
}

fn run_solver(cnf: &Cnf, cfg: &PipelineConfig) -> Result<SolveResult, PipelineError> {
    match &cfg.solver {
        SolverChoice::Internal => Ok(solve(cnf, cfg.budget, cfg.seed)),
        SolverChoice::External(cmd) => {
            solve_external(cnf, cmd, cfg.budget.time_limit, None).map_err(|e| PipelineError {
                stage: "solve",
                message: e.to_string(),
            })
        }
    }
}

/// Solve time under the reporting convention: timed-out runs are recorded
/// at the limit value.
fn reported_time(r: &SolveResult, budget: Budget) -> f64 {
    match (r.status, budget.time_limit) {
        (SolveStatus::Timeout, Some(limit)) => limit,
        _ => r.wall_time,
    }
}

/// Roll the configured recipe out on `g0`, timing decision-making and
/// graph transformation separately.
fn run_recipe_timed(
    g0: &Aig,
    cfg: &PipelineConfig,
) -> (Aig, Vec<SynthAction>, f64, f64) {
    let mut g = g0.clone();
    let mut recipe = Vec::new();
    let mut t_agent = 0.0;
    let mut t_trans = 0.0;
    match &cfg.recipe {
        RecipeSource::None => {}
        RecipeSource::Fixed(actions) => {
            for &a in actions {
                recipe.push(a);
                if a == SynthAction::End {
                    break;
                }
                let t = Instant::now();
                g = apply_action(&g, a);
                t_trans += t.elapsed().as_secs_f64();
            }
        }
        RecipeSource::Random { steps } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            for _ in 0..(*steps).min(cfg.max_steps) {
                let t = Instant::now();
                let a = SynthAction::ALL[rng.gen_range(0..SynthAction::ALL.len())];
                t_agent += t.elapsed().as_secs_f64();
                recipe.push(a);
                if a == SynthAction::End {
                    break;
                }
                let t = Instant::now();
                g = apply_action(&g, a);
                t_trans += t.elapsed().as_secs_f64();
            }
        }
        RecipeSource::Agent(net) => {
            let t = Instant::now();
            let sig = signature(g0, cfg.signature_dim, cfg.seed);
            t_agent += t.elapsed().as_secs_f64();
            for _ in 0..cfg.max_steps {
                let t = Instant::now();
                let state = make_state(&g, g0, &sig);
                let q = net.forward(&state.to_vec());
                let mut best = 0;
                for (i, &v) in q.iter().enumerate() {
                    if v > q[best] {
                        best = i;
                    }
                }
                let a = SynthAction::ALL[best];
                t_agent += t.elapsed().as_secs_f64();
                recipe.push(a);
                if a == SynthAction::End {
                    break;
                }
                let t = Instant::now();
                g = apply_action(&g, a);
                t_trans += t.elapsed().as_secs_f64();
            }
        }
    }
    (g, recipe, t_agent, t_trans)
}

/// Full preprocessing run on one instance: recover or copy the circuit,
/// normalize, roll the recipe, map to LUTs, re-encode, and measure both
/// the input and the output with the configured solver.
pub fn preprocess(
    name: &str,
    input: &PipelineInput,
    cfg: &PipelineConfig,
) -> Result<Preprocessed, PipelineError> {
    // Baseline formula: the input itself, or a direct Tseitin encoding.
    let t = Instant::now();
    let (cnf_in, g0) = match input {
        PipelineInput::Cnf(cnf) => {
            let rec = recover(cnf);
            (cnf.clone(), rec.aig)
        }
        PipelineInput::Aig(g) => {
            let (cnf, _) = aig_to_cnf(g);
            (cnf, g.clone())
        }
    };
    let g0 = normalize(&g0);
    let mut t_trans = t.elapsed().as_secs_f64();

    let (g, recipe, t_agent, t_recipe) = run_recipe_timed(&g0, cfg);
    t_trans += t_recipe;

    let t = Instant::now();
    let netlist = map(&g, cfg.k, cfg.cost);
    let (cnf_out, varmap) = lut_to_cnf(&netlist, cfg.encoding);
    let sidecar = Sidecar {
        pi_vars: varmap.pi_vars.iter().enumerate().map(|(i, &v)| (i, v)).collect(),
        po_vars: varmap.po_assertions.iter().map(|l| l.var()).collect(),
    };
    let dimacs = emit_dimacs(&cnf_out, Some(&sidecar));
    let blif = emit_blif(&netlist, name);
    t_trans += t.elapsed().as_secs_f64();

    let res_in = run_solver(&cnf_in, cfg)?;
    let res_out = run_solver(&cnf_out, cfg)?;
    let decisions_in = res_in.decisions.unwrap_or(0);
    let decisions_out = res_out.decisions.unwrap_or(0);

    let t_solve = reported_time(&res_out, cfg.budget);
    let row = ReportRow {
        instance: name.to_string(),
        vars_in: cnf_in.num_vars(),
        clauses_in: cnf_in.num_clauses(),
        vars_out: cnf_out.num_vars(),
        clauses_out: cnf_out.num_clauses(),
        t_agent,
        t_trans,
        t_solve,
        t_all: t_agent + t_trans + t_solve,
        decisions_in,
        decisions_out,
        reduction_pct: reduction_pct(decisions_in, decisions_out),
        status_in: res_in.status,
        status_out: res_out.status,
        recipe: recipe_names(&recipe),
    };
    Ok(Preprocessed {
        cnf: cnf_out,
        sidecar,
        dimacs,
        blif,
        aig: g,
        recipe,
        row,
    })
}

fn recipe_names(recipe: &[SynthAction]) -> String {
    recipe.iter().map(|a| a.name()).collect::<Vec<_>>().join(" ")
}

/// A per-instance failure kept in the report so a corpus run can continue.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub instance: String,
    pub message: String,
}

/// Accumulated rows plus any per-instance failures.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
    pub failures: Vec<Failure>,
}

impl RunReport {
    pub fn csv(&self) -> String {
        let mut out = String::from(
            "instance,vars_in,clauses_in,vars_out,clauses_out,\
             t_agent,t_trans,t_solve,t_all,decisions_in,decisions_out,\
             reduction_pct,status_in,status_out,recipe\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{},{:.2},{},{},{}\n",
                r.instance,
                r.vars_in,
                r.clauses_in,
                r.vars_out,
                r.clauses_out,
                r.t_agent,
                r.t_trans,
                r.t_solve,
                r.t_all,
                r.decisions_in,
                r.decisions_out,
                r.reduction_pct,
                status_name(r.status_in),
                status_name(r.status_out),
                r.recipe,
            ));
        }
        out
    }

    pub fn markdown(&self) -> String {
        let mut out = String::from(
            "| instance | vars in | clauses in | vars out | clauses out \
             | t_agent | t_trans | t_solve | t_all | decisions in | decisions out | reduction |\n\
             |---|---|---|---|---|---|---|---|---|---|---|---|\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {:.3} | {:.3} | {:.3} | {:.3} | {} | {} | {:.1}% |\n",
                r.instance,
                r.vars_in,
                r.clauses_in,
                r.vars_out,
                r.clauses_out,
                r.t_agent,
                r.t_trans,
                r.t_solve,
                r.t_all,
                r.decisions_in,
                r.decisions_out,
                r.reduction_pct,
            ));
        }
        if !self.failures.is_empty() {
            out.push_str("\nFailures:\n");
            for f in &self.failures {
                out.push_str(&format!("- {}: {}\n", f.instance, f.message));
            }
        }
        out
    }
}

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Sat => "sat",
        SolveStatus::Unsat => "unsat",
        SolveStatus::Timeout => "timeout",
    }
}

pub fn cost_name(c: MapCost) -> &'static str {
    match c {
        MapCost::Area => "area",
        MapCost::Branching => "branching",
    }
}

/// The ablation axes: named recipe sources crossed with mapper cost modes.
#[derive(Clone, Debug)]
pub struct AblationGrid {
    pub recipes: Vec<(String, RecipeSource)>,
    pub costs: Vec<MapCost>,
}

/// One grid cell's tag plus its per-instance report.
#[derive(Clone, Debug)]
pub struct AblationCell {
    pub recipe_name: String,
    pub cost_name: &'static str,
    pub report: RunReport,
}

#[derive(Clone, Debug, Default)]
pub struct Ablation {
    pub cells: Vec<AblationCell>,
}

/// Run every grid cell over the corpus. A panicking or failing instance
/// is recorded in that cell's failure list and the run continues.
/// Instances run in parallel; rows keep corpus order.
pub fn ablate(
    corpus: &[(String, PipelineInput)],
    grid: &AblationGrid,
    base: &PipelineConfig,
) -> Ablation {
    let mut cells = Vec::new();
    for (recipe_name, recipe) in &grid.recipes {
        for &cost in &grid.costs {
            let cfg = PipelineConfig {
                recipe: recipe.clone(),
                cost,
                ..base.clone()
            };
            let results = run_corpus(corpus, &cfg);
            let mut report = RunReport::default();
            for (name, outcome) in corpus.iter().map(|(n, _)| n).zip(results) {
                match outcome {
                    Ok(row) => report.rows.push(row),
                    Err(message) => report.failures.push(Failure {
                        instance: name.clone(),
                        message,
                    }),
                }
            }
            cells.push(AblationCell {
                recipe_name: recipe_name.clone(),
                cost_name: cost_name(cost),
                report,
            });
        }
    }
    Ablation { cells }
}

/// Preprocess every instance under one config, in corpus order, spreading
/// instances over the available cores.
fn run_corpus(
    corpus: &[(String, PipelineInput)],
    cfg: &PipelineConfig,
) -> Vec<Result<ReportRow, String>> {
    use std::panic::{catch_unwind, AssertUnwindSafe};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::mpsc;

    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(corpus.len().max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= corpus.len() {
                    break;
                }
                let (name, input) = &corpus[i];
                let outcome = catch_unwind(AssertUnwindSafe(|| {
                    preprocess(name, input, cfg).map(|p| p.row)
                }));
                let flat = match outcome {
                    Ok(Ok(row)) => Ok(row),
                    Ok(Err(e)) => Err(e.to_string()),
                    Err(panic) => Err(panic_text(panic.as_ref())),
                };
                tx.send((i, flat)).expect("collector outlives workers");
            });
        }
    });
    drop(tx);
    let mut results: Vec<Option<Result<ReportRow, String>>> = vec![None; corpus.len()];
    for (i, outcome) in rx {
        results[i] = Some(outcome);
    }
    results
        .into_iter()
        .map(|r| r.expect("every instance reports"))
        .collect()
}

fn panic_text(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_string()
    }
}

impl Ablation {
    /// All rows of all cells, tagged with the cell coordinates.
    pub fn csv(&self) -> String {
        let mut out = String::from("recipe_source,cost_mode,");
        let inner = RunReport::default().csv();
        out.push_str(inner.lines().next().unwrap());
        out.push('\n');
        for cell in &self.cells {
            for line in cell.report.csv().lines().skip(1) {
                out.push_str(&format!("{},{},{}\n", cell.recipe_name, cell.cost_name, line));
            }
        }
        out
    }

    /// Per-cell summary table: decision counts and the three timing
    /// components, with the reduction medians against each row's own
    /// recorded baseline.
    pub fn markdown(&self) -> String {
        let mut out = String::from(
            "| recipe | cost | instances | failed | median decisions in \
             | median decisions out | median reduction | mean t_agent | mean t_trans \
             | mean t_solve | mean t_all |\n\
             |---|---|---|---|---|---|---|---|---|---|---|\n",
        );
        for cell in &self.cells {
            let rows = &cell.report.rows;
            let n = rows.len().max(1) as f64;
            let mean = |f: fn(&ReportRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
            out.push_str(&format!(
                "| {} | {} | {} | {} | {:.0} | {:.0} | {:.1}% | {:.3} | {:.3} | {:.3} | {:.3} |\n",
                cell.recipe_name,
                cell.cost_name,
                rows.len(),
                cell.report.failures.len(),
                median(rows.iter().map(|r| r.decisions_in as f64)),
                median(rows.iter().map(|r| r.decisions_out as f64)),
                median(rows.iter().map(|r| r.reduction_pct)),
                mean(|r| r.t_agent),
                mean(|r| r.t_trans),
                mean(|r| r.t_solve),
                mean(|r| r.t_all),
            ));
        }
        let failed: usize = self.cells.iter().map(|c| c.report.failures.len()).sum();
        if failed > 0 {
            out.push_str("\nFailures:\n");
            for cell in &self.cells {
                for f in &cell.report.failures {
                    out.push_str(&format!(
                        "- [{} / {}] {}: {}\n",
                        cell.recipe_name, cell.cost_name, f.instance, f.message
                    ));
                }
            }
        }
        out
    }
}

/// Median of a sequence; 0 when empty, mean of the middle pair when even.
pub fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in medians"));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}
