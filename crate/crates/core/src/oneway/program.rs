use nalgebra::DMatrix;

use crate::circuit::parse::{named_element, parse_element};
use crate::circuit::{check_psd, projector, Qubit};
use crate::error::{Error, Result};
use crate::tensor::C64;

/// A two-outcome single-qubit measurement {P⁰, P¹} with P⁰ + P¹ = I.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub qubit: Qubit,
    pub pair: [DMatrix<C64>; 2],
}

impl Measurement {
    pub fn new(qubit: Qubit, p0: DMatrix<C64>, p1: DMatrix<C64>) -> Result<Self> {
        check_psd(&p0)?;
        check_psd(&p1)?;
        let gap = (&p0 + &p1 - DMatrix::<C64>::identity(2, 2)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if gap > 1e-9 {
            return Err(Error::Measurement(format!(
                "elements on qubit {qubit} do not sum to the identity (off by {gap:.3e})"
            )));
        }
        Ok(Self {
            qubit,
            pair: [p0, p1],
        })
    }

    /// {|0⟩⟨0|, |1⟩⟨1|}.
    pub fn z(qubit: Qubit) -> Self {
        Self {
            qubit,
            pair: [projector(0), projector(1)],
        }
    }

    /// {|+⟩⟨+|, |−⟩⟨−|}; outcome 0 is the +1 eigenvalue of σ_x.
    pub fn x(qubit: Qubit) -> Self {
        Self {
            qubit,
            pair: [named_element("x+").unwrap(), named_element("x-").unwrap()],
        }
    }

    /// The same measurement seen through the unitary U: P ↦ U†PU.
    pub fn conjugated(&self, u: &DMatrix<C64>) -> Self {
        let f = |p: &DMatrix<C64>| u.adjoint() * p * u;
        Self {
            qubit: self.qubit,
            pair: [f(&self.pair[0]), f(&self.pair[1])],
        }
    }
}

/// An adaptive measurement sequence. `next` sees the (qubit, outcome) pairs
/// measured so far and returns the next measurement, or `None` to halt.
pub trait OneWayProgram: Sync {
    fn next(&self, history: &[(Qubit, u8)]) -> Result<Option<Measurement>>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProgramStep {
    pub measurement: Measurement,
    /// (k, b): the k-th measurement performed (1-based) gave b.
    pub guards: Vec<(usize, u8)>,
}

/// A program file: lines run top to bottom, and a line whose guards do not
/// all hold is skipped.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProgramFile {
    pub steps: Vec<ProgramStep>,
}

impl ProgramFile {
    pub fn new(steps: Vec<ProgramStep>) -> Self {
        Self { steps }
    }

    /// Unconditional measurements, in order.
    pub fn fixed(measurements: Vec<Measurement>) -> Self {
        Self::new(
            measurements
                .into_iter()
                .map(|measurement| ProgramStep {
                    measurement,
                    guards: Vec::new(),
                })
                .collect(),
        )
    }
}

impl OneWayProgram for ProgramFile {
    fn next(&self, history: &[(Qubit, u8)]) -> Result<Option<Measurement>> {
        let mut done = 0;
        for step in &self.steps {
            let holds = step
                .guards
                .iter()
                .all(|&(k, b)| k <= done && history[k - 1].1 == b);
            if !holds {
                continue;
            }
            if done == history.len() {
                return Ok(Some(step.measurement.clone()));
            }
            if history[done].0 != step.measurement.qubit {
                return Err(Error::Measurement(format!(
                    "history step {} measured qubit {} but the program expects qubit {}",
                    done + 1,
                    history[done].0,
                    step.measurement.qubit
                )));
            }
            done += 1;
        }
        Ok(None)
    }
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Splits on whitespace, keeping `[...]` groups whole.
fn tokens(line: usize, s: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0;
    for ch in s.chars() {
        match ch {
            '[' => {
                depth += 1;
                cur.push(ch);
            }
            ']' => {
                if depth == 0 {
                    return Err(perr(line, "unbalanced ']'"));
                }
                depth -= 1;
                cur.push(ch);
            }
            c if c.is_whitespace() && depth == 0 => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if depth != 0 {
        return Err(perr(line, "unterminated '['"));
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

/// `measure <qubit> <P0> <P1> [if <k>=<b> ...]`, elements by name or as
/// `[a b c d]`; `#` starts a comment. Guards may only name earlier lines'
/// positions, so k must be smaller than the line's own step count.
pub fn parse_program(text: &str) -> Result<ProgramFile> {
    let mut steps = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let toks = tokens(line, content)?;
        if toks.len() < 4 || toks[0] != "measure" {
            return Err(perr(line, "expected 'measure <qubit> <P0> <P1> [if k=b ...]'"));
        }
        let qubit: Qubit = toks[1]
            .parse()
            .map_err(|_| perr(line, format!("bad qubit index {:?}", toks[1])))?;
        let p0 = parse_element(line, &toks[2])?;
        let p1 = parse_element(line, &toks[3])?;
        let measurement = Measurement::new(qubit, p0, p1).map_err(|e| perr(line, e.to_string()))?;
        let mut guards = Vec::new();
        let mut rest = toks[4..].iter();
        while let Some(t) = rest.next() {
            let g = if t == "if" {
                rest.next().ok_or_else(|| perr(line, "'if' without a condition"))?
            } else {
                t
            };
            let (k, b) = g
                .split_once('=')
                .ok_or_else(|| perr(line, format!("guard {g:?} is not k=b")))?;
            let k: usize = k.parse().map_err(|_| perr(line, format!("bad step {k:?}")))?;
            let b: u8 = match b {
                "0" => 0,
                "1" => 1,
                _ => return Err(perr(line, format!("guard outcome must be 0 or 1, got {b:?}"))),
            };
            if k == 0 || k > steps.len() {
                return Err(perr(line, format!("guard step {k} does not precede this line")));
            }
            guards.push((k, b));
        }
        steps.push(ProgramStep { measurement, guards });
    }
    Ok(ProgramFile { steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_branch() {
        let p = parse_program(
            "# adaptive\nmeasure 0 z0 z1\nmeasure 1 x+ x- if 1=0\nmeasure 1 z0 z1 if 1=1\nmeasure 2 [1 0 0 0] [0 0 0 1]\n",
        )
        .unwrap();
        assert_eq!(p.steps.len(), 4);
        assert_eq!(p.next(&[]).unwrap().unwrap().qubit, 0);
        assert_eq!(p.next(&[(0, 0)]).unwrap().unwrap(), Measurement::x(1));
        assert_eq!(p.next(&[(0, 1)]).unwrap().unwrap(), Measurement::z(1));
        assert_eq!(p.next(&[(0, 1), (1, 0)]).unwrap().unwrap().qubit, 2);
        assert_eq!(p.next(&[(0, 1), (1, 0), (2, 1)]).unwrap(), None);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(parse_program("measure 0 z0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_program("measure 0 z0 z0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_program("measure 0 z0 z1\nmeasure 1 z0 z1 if 2=0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_program("measure 0 [1 0 0 0 z1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn conjugation_by_z_swaps_x_outcomes() {
        let z = crate::circuit::NamedGate::Z.matrix();
        let m = Measurement::x(0).conjugated(&z);
        let d = (&m.pair[0] - &Measurement::x(0).pair[1]).norm();
        assert!(d < 1e-12);
    }
}
