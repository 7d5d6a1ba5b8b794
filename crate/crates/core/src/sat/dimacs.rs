//! DIMACS CNF and WCNF serialization.
//!
//! WCNF output uses `top = soft + 1` as the hard weight and weight 1 for
//! every soft clause; hard clauses come first.

use std::fmt::Write;

use super::{Clause, Instance, Lit, SatError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimacsKind {
    Cnf,
    Wcnf,
}

pub fn emit_dimacs(instance: &Instance, kind: DimacsKind) -> String {
    let mut out = String::new();
    let line = |out: &mut String, weight: Option<usize>, c: &Clause| {
        if let Some(w) = weight {
            write!(out, "{w} ").unwrap();
        }
        for l in c {
            write!(out, "{l} ").unwrap();
        }
        out.push_str("0\n");
    };
    match kind {
        DimacsKind::Cnf => {
            writeln!(out, "p cnf {} {}", instance.num_vars, instance.hard.len()).unwrap();
            for c in &instance.hard {
                line(&mut out, None, c);
            }
        }
        DimacsKind::Wcnf => {
            let top = instance.soft.len() + 1;
            let total = instance.hard.len() + instance.soft.len();
            writeln!(out, "p wcnf {} {} {}", instance.num_vars, total, top).unwrap();
            for c in &instance.hard {
                line(&mut out, Some(top), c);
            }
            for c in &instance.soft {
                line(&mut out, Some(1), c);
            }
        }
    }
    out
}

/// Parses CNF or WCNF text. In WCNF, clauses weighted `top` are hard and
/// clauses of weight 1 are soft; other weights are rejected.
pub fn parse_dimacs(text: &str) -> Result<(Instance, DimacsKind), SatError> {
    let err = |line: usize, message: &str| SatError::Dimacs { line, message: message.to_owned() };
    let mut header: Option<(DimacsKind, u32, usize, u64)> = None;
    let mut inst = Instance::default();
    let mut pending: Vec<i64> = Vec::new();
    let mut pending_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(err(lineno, "duplicate header"));
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let num = |k: usize| -> Result<u64, SatError> {
                f.get(k).and_then(|s| s.parse().ok()).ok_or_else(|| err(lineno, "bad header"))
            };
            header = Some(match f.get(1).copied() {
                Some("cnf") if f.len() == 4 => (DimacsKind::Cnf, num(2)? as u32, num(3)? as usize, 0),
                Some("wcnf") if f.len() == 5 => (DimacsKind::Wcnf, num(2)? as u32, num(3)? as usize, num(4)?),
                _ => return Err(err(lineno, "bad header")),
            });
            continue;
        }
        let Some((kind, num_vars, _, top)) = header else {
            return Err(err(lineno, "clause before header"));
        };
        if pending.is_empty() {
            pending_line = lineno;
        }
        for tok in line.split_whitespace() {
            let x: i64 = tok.parse().map_err(|_| err(lineno, "bad literal"))?;
            let weighted = kind == DimacsKind::Wcnf;
            if x == 0 && !(weighted && pending.is_empty()) {
                let (weight, lits) = if weighted { (Some(pending[0]), &pending[1..]) } else { (None, &pending[..]) };
                let clause = lits
                    .iter()
                    .map(|&v| {
                        if v.unsigned_abs() > num_vars as u64 {
                            return Err(err(pending_line, "variable exceeds header"));
                        }
                        Ok(Lit::from_dimacs(v as i32).unwrap())
                    })
                    .collect::<Result<Clause, _>>()?;
                match weight {
                    None => inst.hard.push(clause),
                    Some(w) if w as u64 == top => inst.hard.push(clause),
                    Some(1) => inst.soft.push(clause),
                    Some(_) => return Err(err(pending_line, "unsupported soft weight")),
                }
                pending.clear();
                pending_line = lineno;
            } else {
                pending.push(x);
            }
        }
    }
    let Some((kind, num_vars, count, _)) = header else {
        return Err(err(0, "missing header"));
    };
    if !pending.is_empty() {
        return Err(err(pending_line, "unterminated clause"));
    }
    if inst.hard.len() + inst.soft.len() != count {
        return Err(err(0, "clause count does not match header"));
    }
    inst.num_vars = num_vars;
    Ok((inst, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn clauses(cs: &[&[i32]]) -> Vec<Clause> {
        cs.iter().map(|c| c.iter().map(|&x| Lit::from_dimacs(x).unwrap()).collect()).collect()
    }

    #[test]
    fn cnf_examples() {
        let inst = Instance::with_hard(2, clauses(&[&[1, -2]]));
        assert_eq!(emit_dimacs(&inst, DimacsKind::Cnf), "p cnf 2 1\n1 -2 0\n");
        assert_eq!(emit_dimacs(&Instance::default(), DimacsKind::Cnf), "p cnf 0 0\n");
    }

    #[test]
    fn wcnf_top_weight() {
        let inst = Instance { num_vars: 1, hard: clauses(&[&[1]]), soft: clauses(&[&[-1]]) };
        assert_eq!(emit_dimacs(&inst, DimacsKind::Wcnf), "p wcnf 1 2 2\n2 1 0\n1 -1 0\n");
    }

    #[test]
    fn parse_errors() {
        assert!(parse_dimacs("1 2 0\n").is_err());
        assert!(parse_dimacs("p cnf 1 1\n2 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 1\n1 2\n").is_err());
        assert!(parse_dimacs("p wcnf 1 1 5\n3 1 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 2\n1 0\n").is_err());
    }

    #[test]
    fn parse_comments_and_multiline_clauses() {
        let (inst, kind) = parse_dimacs("c hello\np cnf 3 2\n1 2\n3 0 -1\n0\n").unwrap();
        assert_eq!(kind, DimacsKind::Cnf);
        assert_eq!(inst.hard, clauses(&[&[1, 2, 3], &[-1]]));
    }

    fn instance_strategy() -> impl Strategy<Value = Instance> {
        (1u32..12).prop_flat_map(|n| {
            let lit =
                (1..=n as i32, any::<bool>()).prop_map(|(v, s)| Lit::from_dimacs(if s { v } else { -v }).unwrap());
            let clause = prop::collection::vec(lit, 0..5);
            (Just(n), prop::collection::vec(clause.clone(), 0..10), prop::collection::vec(clause, 0..6))
                .prop_map(|(num_vars, hard, soft)| Instance { num_vars, hard, soft })
        })
    }

    proptest! {
        #[test]
        fn round_trip(inst in instance_strategy()) {
            let (back, kind) = parse_dimacs(&emit_dimacs(&inst, DimacsKind::Wcnf)).unwrap();
            prop_assert_eq!(kind, DimacsKind::Wcnf);
            prop_assert_eq!(&back, &inst);
            let hard_only = Instance { soft: vec![], ..inst };
            let (back, _) = parse_dimacs(&emit_dimacs(&hard_only, DimacsKind::Cnf)).unwrap();
            prop_assert_eq!(back, hard_only);
        }
    }
}
