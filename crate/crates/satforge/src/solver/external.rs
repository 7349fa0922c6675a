//! Adapter for external DIMACS solvers run as subprocesses.
//!
//! The formula is written to a temporary DIMACS file and substituted for
//! the `{file}` placeholder in the command template. Exit status follows
//! the SAT-competition convention: 10 means satisfiable, 20 means
//! unsatisfiable, anything else (including a killed process) is reported
//! as Timeout. Failures to launch or to interpret the solver at all are
//! adapter errors, never Timeout.

use std::fmt;
use std::io::{self, Read, Write as _};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use super::{SolveResult, SolveStatus};
use crate::cnf::Cnf;
use crate::io::dimacs::emit_dimacs;

/// Environment variable that overrides the configured solver command.
pub const SOLVER_ENV: &str = "SATFORGE_SOLVER";

/// Statistic line marker used when the caller does not supply one.
pub const DEFAULT_STATS_PATTERN: &str = "decisions";

#[derive(Debug)]
pub enum ExternalError {
    EmptyCommand,
    Spawn(String, io::Error),
    Io(io::Error),
    /// The solver claimed satisfiability but printed a falsifying model.
    BadModel,
}

impl fmt::Display for ExternalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExternalError::EmptyCommand => write!(f, "empty solver command"),
            ExternalError::Spawn(cmd, e) => write!(f, "failed to launch '{cmd}': {e}"),
            ExternalError::Io(e) => write!(f, "solver io error: {e}"),
            ExternalError::BadModel => write!(f, "external solver returned a falsifying model"),
        }
    }
}

impl std::error::Error for ExternalError {}

impl From<io::Error> for ExternalError {
    fn from(e: io::Error) -> ExternalError {
        ExternalError::Io(e)
    }
}

/// Extract the first unsigned integer that follows `pattern` in `text`.
fn scan_statistic(text: &str, pattern: &str) -> Option<u64> {
    for line in text.lines() {
        let Some(at) = line.find(pattern) else { continue };
        let rest = &line[at + pattern.len()..];
        let digits: String = rest
            .chars()
            .skip_while(|c| !c.is_ascii_digit())
            .take_while(|c| c.is_ascii_digit())
            .collect();
        if !digits.is_empty() {
            return digits.parse().ok();
        }
    }
    None
}

/// Parse DIMACS `v` lines into a model over `num_vars` variables.
fn parse_model(text: &str, num_vars: u32) -> Option<Vec<bool>> {
    let mut model = vec![false; num_vars as usize];
    let mut saw_any = false;
    for line in text.lines() {
        let Some(values) = line.strip_prefix("v ").or_else(|| line.strip_prefix("v\t")) else {
            continue;
        };
        for tok in values.split_whitespace() {
            let Ok(value) = tok.parse::<i64>() else { continue };
            if value == 0 {
                continue;
            }
            saw_any = true;
            let var = value.unsigned_abs();
            if var as u32 <= num_vars && var >= 1 {
                model[var as usize - 1] = value > 0;
            }
        }
    }
    saw_any.then_some(model)
}

/// Run an external solver on `cnf`.
///
/// `solver_cmd` is a whitespace-separated command template; every `{file}`
/// token is replaced with the temporary DIMACS path (appended as a final
/// argument when the template never mentions it). The `SATFORGE_SOLVER`
/// environment variable, when set and non-empty, overrides the template.
/// `stats_pattern` names the statistics line marker used to recover the
/// decision count; a missing statistic leaves `decisions` unset.
pub fn solve_external(
    cnf: &Cnf,
    solver_cmd: &str,
    time_limit: Option<f64>,
    stats_pattern: Option<&str>,
) -> Result<SolveResult, ExternalError> {
    let start = Instant::now();
    let template = match std::env::var(SOLVER_ENV) {
        Ok(v) if !v.trim().is_empty() => v,
        _ => solver_cmd.to_string(),
    };

    let mut file = tempfile::Builder::new()
        .prefix("satforge-")
        .suffix(".cnf")
        .tempfile()?;
    file.write_all(emit_dimacs(cnf, None).as_bytes())?;
    file.flush()?;
    run_solver(cnf, &template, file.path(), time_limit, stats_pattern, start)
}

/// Terminate the solver and anything it spawned. The child runs in its own
/// process group precisely so the whole tree can be killed; a surviving
/// grandchild would otherwise hold the stdout pipe open indefinitely.
fn kill_solver(child: &mut Child) {
    #[cfg(unix)]
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
    let _ = child.kill();
    let _ = child.wait();
}

fn run_solver(
    cnf: &Cnf,
    template: &str,
    path: &std::path::Path,
    time_limit: Option<f64>,
    stats_pattern: Option<&str>,
    start: Instant,
) -> Result<SolveResult, ExternalError> {
    let file = path.to_string_lossy().into_owned();
    let mut argv: Vec<String> = template
        .split_whitespace()
        .map(|tok| tok.replace("{file}", &file))
        .collect();
    if argv.is_empty() {
        return Err(ExternalError::EmptyCommand);
    }
    if !template.contains("{file}") {
        argv.push(file);
    }

    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = cmd.spawn().map_err(|e| ExternalError::Spawn(argv[0].clone(), e))?;

    let mut pipe = child.stdout.take().expect("stdout was piped");
    let reader = std::thread::spawn(move || {
        let mut text = String::new();
        let _ = pipe.read_to_string(&mut text);
        text
    });

    let deadline = time_limit.map(|t| start + Duration::from_secs_f64(t.max(0.0)));
    let exit = loop {
        if let Some(status) = child.try_wait()? {
            break Some(status);
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            kill_solver(&mut child);
            break None;
        }
        std::thread::sleep(Duration::from_millis(2));
    };
    let stdout = reader.join().unwrap_or_default();

    let pattern = stats_pattern.unwrap_or(DEFAULT_STATS_PATTERN);
    let decisions = scan_statistic(&stdout, pattern);
    let status = match exit.and_then(|s| s.code()) {
        Some(10) => SolveStatus::Sat,
        Some(20) => SolveStatus::Unsat,
        _ => SolveStatus::Timeout,
    };
    let model = if status == SolveStatus::Sat {
        match parse_model(&stdout, cnf.num_vars()) {
            Some(m) if !cnf.eval(&m) => return Err(ExternalError::BadModel),
            m => m,
        }
    } else {
        None
    };

    Ok(SolveResult {
        status,
        model,
        decisions,
        conflicts: 0,
        propagations: 0,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Lit;
    use std::fs;
    use std::path::PathBuf;
    use std::sync::{Mutex, MutexGuard, PoisonError};

    // solve_external consults SATFORGE_SOLVER, so tests that touch the
    // process environment or rely on it being unset share one lock
    static ENV_LOCK: Mutex<()> = Mutex::new(());

    fn env_lock() -> MutexGuard<'static, ()> {
        ENV_LOCK.lock().unwrap_or_else(PoisonError::into_inner)
    }

    fn script(name: &str, body: &str) -> PathBuf {
        let path = std::env::temp_dir().join(format!(
            "satforge-test-{}-{}.sh",
            std::process::id(),
            name
        ));
        fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
        }
        path
    }

    fn two_var_cnf() -> Cnf {
        let mut f = Cnf::new(2);
        f.add_clause(vec![Lit::positive(1)]);
        f.add_clause(vec![Lit::negative(2)]);
        f
    }

    #[test]
    fn sat_exit_code_with_model_and_stats() {
        let _guard = env_lock();
        let s = script(
            "sat",
            "echo 'c decisions: 42'\necho 's SATISFIABLE'\necho 'v 1 -2 0'\nexit 10",
        );
        let cmd = format!("{} {{file}}", s.display());
        let r = solve_external(&two_var_cnf(), &cmd, None, None).unwrap();
        assert_eq!(r.status, SolveStatus::Sat);
        assert_eq!(r.model, Some(vec![true, false]));
        assert_eq!(r.decisions, Some(42));
        let _ = fs::remove_file(s);
    }

    #[test]
    fn unsat_exit_code_and_missing_statistic() {
        let _guard = env_lock();
        let s = script("unsat", "echo 's UNSATISFIABLE'\nexit 20");
        let cmd = format!("{} {{file}}", s.display());
        let r = solve_external(&two_var_cnf(), &cmd, None, None).unwrap();
        assert_eq!(r.status, SolveStatus::Unsat);
        assert_eq!(r.decisions, None);
        assert!(r.model.is_none());
    }

    #[test]
    fn unknown_exit_code_is_timeout() {
        let _guard = env_lock();
        let s = script("odd", "exit 3");
        let cmd = format!("{} {{file}}", s.display());
        let r = solve_external(&two_var_cnf(), &cmd, None, None).unwrap();
        assert_eq!(r.status, SolveStatus::Timeout);
    }

    #[test]
    fn deadline_kills_the_child() {
        let _guard = env_lock();
        let s = script("slow", "sleep 30\nexit 10");
        let cmd = format!("{} {{file}}", s.display());
        let t = Instant::now();
        let r = solve_external(&two_var_cnf(), &cmd, Some(0.05), None).unwrap();
        assert_eq!(r.status, SolveStatus::Timeout);
        assert!(t.elapsed().as_secs_f64() < 5.0);
    }

    #[test]
    fn missing_binary_is_an_error_not_timeout() {
        let _guard = env_lock();
        let err = solve_external(&two_var_cnf(), "/no/such/solver {file}", None, None);
        assert!(matches!(err, Err(ExternalError::Spawn(..))));
    }

    #[test]
    fn dimacs_file_reaches_the_solver() {
        let _guard = env_lock();
        // exits SAT only if the argument is a readable DIMACS file
        let s = script("check", "grep -q '^p cnf 2 2$' \"$1\" || exit 3\nexit 20");
        let cmd = format!("{} {{file}}", s.display());
        let r = solve_external(&two_var_cnf(), &cmd, None, None).unwrap();
        assert_eq!(r.status, SolveStatus::Unsat);
    }

    #[test]
    fn template_without_placeholder_gets_path_appended() {
        let _guard = env_lock();
        let s = script("append", "test -f \"$1\" || exit 3\nexit 20");
        let r = solve_external(&two_var_cnf(), &s.display().to_string(), None, None).unwrap();
        assert_eq!(r.status, SolveStatus::Unsat);
    }

    #[test]
    fn env_var_overrides_command() {
        let _guard = env_lock();
        let s = script("envsat", "echo 'c decisions 7'\nexit 10");
        std::env::set_var(SOLVER_ENV, format!("{} {{file}}", s.display()));
        let r = solve_external(&two_var_cnf(), "/no/such/solver", None, None);
        std::env::remove_var(SOLVER_ENV);
        let r = r.unwrap();
        assert_eq!(r.status, SolveStatus::Sat);
        assert_eq!(r.decisions, Some(7));
    }

    #[test]
    fn lying_model_is_rejected() {
        let _guard = env_lock();
        let s = script("liar", "echo 'v -1 2 0'\nexit 10");
        let cmd = format!("{} {{file}}", s.display());
        let err = solve_external(&two_var_cnf(), &cmd, None, None);
        assert!(matches!(err, Err(ExternalError::BadModel)));
    }

    #[test]
    fn custom_stats_pattern() {
        let _guard = env_lock();
        let s = script("custom", "echo 'c branches ...... 99 per sec'\nexit 20");
        let cmd = format!("{} {{file}}", s.display());
        let r = solve_external(&two_var_cnf(), &cmd, None, Some("branches")).unwrap();
        assert_eq!(r.decisions, Some(99));
    }

    #[test]
    fn statistic_scanner_picks_first_integer() {
        assert_eq!(scan_statistic("c decisions: 123 (0.2/sec)", "decisions"), Some(123));
        assert_eq!(scan_statistic("c decisions   77", "decisions"), Some(77));
        assert_eq!(scan_statistic("c nothing here", "decisions"), None);
        assert_eq!(scan_statistic("", "decisions"), None);
    }
}
