//! Adapter for external solver executables speaking the competition
//! output format (`s`, `v` and `o` lines).

use std::io::Read;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::dimacs::{emit_dimacs, DimacsKind};
use super::{Assignment, Budget, Instance, SatError, SolveResult};

/// Runs `command` with the DIMACS file path appended as last argument.
///
/// The exit code is ignored; only stdout is interpreted. Any returned model
/// is checked against the hard clauses. An optimum reported by the solver is
/// taken at its word (flagged as externally claimed) but the number of
/// satisfied soft clauses is recounted here.
pub fn run_external(
    instance: &Instance,
    command: &[String],
    kind: DimacsKind,
    budget: Budget,
) -> Result<SolveResult, SatError> {
    let (program, args) =
        command.split_first().ok_or_else(|| SatError::SolverCrashed("empty solver command".into()))?;
    let suffix = match kind {
        DimacsKind::Cnf => ".cnf",
        DimacsKind::Wcnf => ".wcnf",
    };
    let file = tempfile::Builder::new()
        .prefix("testmig-")
        .suffix(suffix)
        .tempfile()
        .map_err(|e| SatError::Io(e.to_string()))?;
    std::fs::write(file.path(), emit_dimacs(instance, kind)).map_err(|e| SatError::Io(e.to_string()))?;

    let mut child = Command::new(program)
        .args(args)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SatError::SolverCrashed(format!("cannot start {program}: {e}")))?;

    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        stdout.read_to_string(&mut buf).map(|_| buf)
    });
    let deadline = budget.deadline();
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) => {
                if deadline.is_some_and(|d| Instant::now() >= d) {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Ok(SolveResult::Timeout);
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(SatError::SolverCrashed(e.to_string())),
        }
    }
    let output = reader
        .join()
        .map_err(|_| SatError::SolverCrashed("output reader panicked".into()))?
        .map_err(|e| SatError::Io(e.to_string()))?;
    interpret_output(instance, &output)
}

pub(crate) fn interpret_output(instance: &Instance, output: &str) -> Result<SolveResult, SatError> {
    let mut status: Option<&str> = None;
    let mut model = Assignment::all_false(instance.num_vars);
    let mut saw_values = false;
    for line in output.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            status = Some(rest.trim());
        } else if let Some(rest) = line.strip_prefix("v ") {
            saw_values = true;
            for tok in rest.split_whitespace() {
                let x: i64 = tok.parse().map_err(|_| SatError::UnparsableOutput(format!("bad value token {tok:?}")))?;
                if x == 0 {
                    continue;
                }
                let var = x.unsigned_abs();
                if var > instance.num_vars as u64 {
                    return Err(SatError::UnparsableOutput(format!("variable {var} out of range")));
                }
                model.set(var as u32, x > 0);
            }
        }
    }
    let status = status.ok_or_else(|| {
        if output.trim().is_empty() {
            SatError::SolverCrashed("no output".into())
        } else {
            SatError::UnparsableOutput("missing status line".into())
        }
    })?;
    let checked = |model: Assignment| -> Result<Assignment, SatError> {
        if !saw_values {
            return Err(SatError::UnparsableOutput("status without model".into()));
        }
        match instance.first_violated(&model) {
            Some(clause) => Err(SatError::AssignmentInvalid { clause }),
            None => Ok(model),
        }
    };
    match status {
        "UNSATISFIABLE" => Ok(SolveResult::Unsat),
        "SATISFIABLE" => {
            let assignment = checked(model)?;
            if instance.soft.is_empty() {
                Ok(SolveResult::Sat(assignment))
            } else {
                // MaxSAT solvers say SATISFIABLE when stopped before proving optimality.
                Ok(SolveResult::Timeout)
            }
        }
        "OPTIMUM FOUND" => {
            let assignment = checked(model)?;
            let satisfied = instance.soft_satisfied(&assignment);
            Ok(SolveResult::Optimal { assignment, satisfied, externally_claimed: true })
        }
        "UNKNOWN" => Ok(SolveResult::Timeout),
        other => Err(SatError::UnparsableOutput(format!("unknown status {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::{Clause, Lit};

    fn clauses(cs: &[&[i32]]) -> Vec<Clause> {
        cs.iter().map(|c| c.iter().map(|&x| Lit::from_dimacs(x).unwrap()).collect()).collect()
    }

    fn script(body: &str) -> (tempfile::TempDir, Vec<String>) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("solver.sh");
        std::fs::write(&path, body).unwrap();
        (dir, vec!["sh".into(), path.display().to_string()])
    }

    #[test]
    fn unsat_status() {
        let inst = Instance::with_hard(1, clauses(&[&[1], &[-1]]));
        let (_dir, cmd) = script("echo 's UNSATISFIABLE'\n");
        assert_eq!(run_external(&inst, &cmd, DimacsKind::Cnf, Budget::seconds(10)).unwrap(), SolveResult::Unsat);
    }

    #[test]
    fn invalid_model_rejected() {
        let inst = Instance::with_hard(2, clauses(&[&[1, 2]]));
        let (_dir, cmd) = script("echo 's SATISFIABLE'\necho 'v -1 -2 0'\n");
        assert_eq!(
            run_external(&inst, &cmd, DimacsKind::Cnf, Budget::seconds(10)),
            Err(SatError::AssignmentInvalid { clause: 0 })
        );
    }

    #[test]
    fn optimum_is_recounted() {
        let inst = Instance { num_vars: 2, hard: clauses(&[&[-1, -2]]), soft: clauses(&[&[1], &[2], &[-1]]) };
        // The script also checks that it received the WCNF file.
        let (_dir, cmd) =
            script("grep -q '^p wcnf 2 4 4' \"$1\" || exit 1\necho 'o 1'\necho 's OPTIMUM FOUND'\necho 'v -1 2 0'\n");
        let r = run_external(&inst, &cmd, DimacsKind::Wcnf, Budget::seconds(10)).unwrap();
        match r {
            SolveResult::Optimal { satisfied, externally_claimed, assignment } => {
                assert_eq!(satisfied, 2);
                assert!(externally_claimed);
                assert!(assignment.value(2) && !assignment.value(1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn crash_and_garbage() {
        let inst = Instance::with_hard(1, clauses(&[&[1]]));
        let (_dir, cmd) = script("exit 3\n");
        assert!(matches!(
            run_external(&inst, &cmd, DimacsKind::Cnf, Budget::seconds(10)),
            Err(SatError::SolverCrashed(_))
        ));
        let (_dir, cmd) = script("echo hello\n");
        assert!(matches!(
            run_external(&inst, &cmd, DimacsKind::Cnf, Budget::seconds(10)),
            Err(SatError::UnparsableOutput(_))
        ));
        let missing = vec!["/nonexistent/solver".to_string()];
        assert!(matches!(
            run_external(&inst, &missing, DimacsKind::Cnf, Budget::seconds(10)),
            Err(SatError::SolverCrashed(_))
        ));
    }

    #[test]
    fn timeout_kills_solver() {
        let inst = Instance::with_hard(1, clauses(&[&[1]]));
        let (_dir, cmd) = script("sleep 5\n");
        let budget = Budget { timeout: Some(Duration::from_millis(100)) };
        assert_eq!(run_external(&inst, &cmd, DimacsKind::Cnf, budget).unwrap(), SolveResult::Timeout);
    }
}
