//! Line-oriented text formats for circuits and measurement scenarios.
//!
//! ```text
//! qubits 2
//! h 0
//! cnot 0 1
//! u 1 [0 1 1 0]
//! superop 1 0 1 [1 0 0 1]
//! traceout 0
//! ```
//! Complex literals look like `0.5`, `-2i`, `0.5+0.5i` or `i`. `#` starts a
//! comment.

use nalgebra::DMatrix;

use super::{check_psd, Circuit, Gate, GateKind, MeasurementScenario, NamedGate, Qubit};
use crate::error::{Error, Result};
use crate::tensor::C64;

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses one complex literal.
pub fn parse_complex(tok: &str) -> Option<C64> {
    let tok = tok.trim();
    let Some(body) = tok.strip_suffix('i') else {
        return tok.parse::<f64>().ok().map(|re| C64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |s: &str| match s {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        s => s.parse::<f64>().ok(),
    };
    match split {
        Some(k) => Some(C64::new(body[..k].parse().ok()?, imag(&body[k..])?)),
        None => Some(C64::new(0.0, imag(body)?)),
    }
}

fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

/// Splits `tokens` into leading words and a bracketed (or trailing) list of
/// complex numbers.
fn split_matrix(line: usize, rest: &str) -> Result<(Vec<&str>, Option<Vec<C64>>)> {
    let Some(open) = rest.find('[') else {
        return Ok((rest.split_whitespace().collect(), None));
    };
    let close = rest
        .rfind(']')
        .filter(|&c| c > open)
        .ok_or_else(|| err(line, "unterminated '['"))?;
    if !rest[close + 1..].trim().is_empty() {
        return Err(err(line, "text after ']'"));
    }
    let values = rest[open + 1..close]
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| parse_complex(s).ok_or_else(|| err(line, format!("malformed complex number {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((rest[..open].split_whitespace().collect(), Some(values)))
}

fn parse_usize(line: usize, tok: &str, what: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| err(line, format!("expected {what}, found {tok:?}")))
}

fn strip_comment(raw: &str) -> &str {
    raw.split('#').next().unwrap_or("").trim()
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut circuit: Option<Circuit> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw);
        if content.is_empty() {
            continue;
        }
        let (head, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
        let head = head.to_ascii_lowercase();
        if head == "qubits" {
            if circuit.is_some() {
                return Err(err(line, "repeated 'qubits' line"));
            }
            circuit = Some(Circuit::new(parse_usize(line, rest.trim(), "qubit count")?));
            continue;
        }
        let c = circuit
            .as_mut()
            .ok_or_else(|| err(line, "gate before 'qubits' line"))?;
        let (words, values) = split_matrix(line, rest)?;
        let nums = |ws: &[&str]| -> Result<Vec<Qubit>> {
            ws.iter().map(|w| parse_usize(line, w, "qubit index")).collect()
        };
        let gate = match head.as_str() {
            "u" => {
                let qubits = nums(&words)?;
                let v = values.ok_or_else(|| err(line, "unitary needs a [..] entry list"))?;
                let dim = 1usize << qubits.len().min(16);
                if v.len() != dim * dim {
                    return Err(err(line, format!("{} qubits need {} entries, got {}", qubits.len(), dim * dim, v.len())));
                }
                Gate {
                    kind: GateKind::Unitary(DMatrix::from_row_slice(dim, dim, &v)),
                    qubits,
                }
            }
            "superop" => {
                if words.len() < 2 {
                    return Err(err(line, "superop needs <inputs> <outputs> <qubits...>"));
                }
                let inputs = parse_usize(line, words[0], "input count")?;
                let outputs = parse_usize(line, words[1], "output count")?;
                let qubits = nums(&words[2..])?;
                let entries = values.ok_or_else(|| err(line, "superop needs a [..] entry list"))?;
                Gate {
                    kind: GateKind::Superop {
                        inputs,
                        outputs,
                        entries,
                    },
                    qubits,
                }
            }
            "traceout" => Gate {
                kind: GateKind::TraceOut,
                qubits: nums(&words)?,
            },
            name => {
                let g = NamedGate::from_name(name)
                    .ok_or_else(|| err(line, format!("unknown gate {name:?}")))?;
                if values.is_some() {
                    return Err(err(line, format!("gate {name} takes no matrix")));
                }
                Gate::named(g, &nums(&words)?)
            }
        };
        c.push(gate).map_err(|e| err(line, e.to_string()))?;
    }
    circuit.ok_or_else(|| err(0, "missing 'qubits' line"))
}

pub fn serialize_circuit(c: &Circuit) -> String {
    let mut out = format!("qubits {}\n", c.n());
    let list = |v: &mut dyn Iterator<Item = C64>| {
        v.map(format_complex).collect::<Vec<_>>().join(" ")
    };
    for g in c.gates() {
        let qs: Vec<String> = g.qubits.iter().map(|q| q.to_string()).collect();
        let qs = qs.join(" ");
        let line = match &g.kind {
            GateKind::Named(ng) => format!("{} {qs}", ng.name()),
            GateKind::Unitary(u) => {
                let rows = (0..u.nrows()).flat_map(|r| (0..u.ncols()).map(move |c| (r, c)));
                format!("u {qs} [{}]", list(&mut rows.map(|(r, c)| u[(r, c)])))
            }
            GateKind::Superop {
                inputs,
                outputs,
                entries,
            } => format!(
                "superop {inputs} {outputs} {qs} [{}]",
                list(&mut entries.iter().copied())
            ),
            GateKind::TraceOut => format!("traceout {qs}"),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Named single-qubit projectors: z0 z1 x+ x- y+ y- and I.
pub fn named_element(name: &str) -> Option<DMatrix<C64>> {
    let r = |x: f64| C64::new(x, 0.0);
    let h = |x: f64| C64::new(0.0, x);
    let v = match name {
        "z0" => [r(1.), r(0.), r(0.), r(0.)],
        "z1" => [r(0.), r(0.), r(0.), r(1.)],
        "x+" => [r(0.5), r(0.5), r(0.5), r(0.5)],
        "x-" => [r(0.5), r(-0.5), r(-0.5), r(0.5)],
        "y+" => [r(0.5), h(-0.5), h(0.5), r(0.5)],
        "y-" => [r(0.5), h(0.5), h(-0.5), r(0.5)],
        "I" | "i" | "id" => [r(1.), r(0.), r(0.), r(1.)],
        _ => return None,
    };
    Some(DMatrix::from_row_slice(2, 2, &v))
}

/// Parses a 2×2 element given by name, `[a b c d]`, or four bare entries.
pub(crate) fn parse_element(line: usize, rest: &str) -> Result<DMatrix<C64>> {
    let (words, values) = split_matrix(line, rest)?;
    let values = match (values, words.as_slice()) {
        (Some(v), []) => v,
        (None, [name]) => {
            return named_element(name).ok_or_else(|| err(line, format!("unknown element {name:?}")))
        }
        (None, ws) if ws.len() == 4 => ws
            .iter()
            .map(|s| parse_complex(s).ok_or_else(|| err(line, format!("malformed complex number {s:?}"))))
            .collect::<Result<Vec<_>>>()?,
        _ => return Err(err(line, "expected a 2x2 element")),
    };
    if values.len() != 4 {
        return Err(err(line, format!("2x2 element needs 4 entries, got {}", values.len())));
    }
    Ok(DMatrix::from_row_slice(2, 2, &values))
}

/// `m <qubit> <element>` lines; unlisted qubits stay unmeasured.
pub fn parse_scenario(text: &str) -> Result<MeasurementScenario> {
    let mut s = MeasurementScenario::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw);
        if content.is_empty() {
            continue;
        }
        let mut parts = content.splitn(3, char::is_whitespace);
        if parts.next() != Some("m") {
            return Err(err(line, "expected 'm <qubit> <element>'"));
        }
        let q = parse_usize(line, parts.next().unwrap_or(""), "qubit index")?;
        let m = parse_element(line, parts.next().unwrap_or(""))?;
        check_psd(&m).map_err(|e| err(line, e.to_string()))?;
        if s.elements.contains_key(&q) {
            return Err(err(line, format!("qubit {q} listed twice")));
        }
        s.elements.insert(q, m);
    }
    Ok(s)
}

pub fn serialize_scenario(s: &MeasurementScenario) -> String {
    s.elements()
        .iter()
        .map(|(q, m)| {
            let v: Vec<String> = [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
                .into_iter()
                .map(format_complex)
                .collect();
            format!("m {q} [{}]\n", v.join(" "))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let z = |re, im| Some(C64::new(re, im));
        assert_eq!(parse_complex("0.5"), z(0.5, 0.0));
        assert_eq!(parse_complex("-0.5i"), z(0.0, -0.5));
        assert_eq!(parse_complex("0.5+0.5i"), z(0.5, 0.5));
        assert_eq!(parse_complex("1e-3-2i"), z(0.001, -2.0));
        assert_eq!(parse_complex("i"), z(0.0, 1.0));
        assert_eq!(parse_complex("-i"), z(0.0, -1.0));
        assert_eq!(parse_complex("2-i"), z(2.0, -1.0));
        assert_eq!(parse_complex("abc"), None);
    }

    #[test]
    fn parse_examples() {
        let id = parse_circuit("qubits 1\n").unwrap();
        assert_eq!((id.n(), id.m(), id.gates().len()), (1, 1, 0));
        let bell = parse_circuit("qubits 2\nh 0\ncnot 0 1\n").unwrap();
        assert_eq!(bell.gates().len(), 2);
        match parse_circuit("qubits 2\nh 0\nx 7\n") {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_circuit("qubits 1\nfoo 0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_circuit("qubits 1\nu 0 [1 0 0]\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn round_trip() {
        let text = "qubits 3\n# comment\nh 0\ncx 0 1\nu 2 [0 1+0.25i 1 0.5-2i]\nsuperop 2 1 1 2 [".to_string()
            + &vec!["0.125"; 64].join(" ")
            + "]\ntraceout 0\n";
        let c = parse_circuit(&text).unwrap();
        let again = parse_circuit(&serialize_circuit(&c)).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.output_qubits(), vec![1]);
    }

    #[test]
    fn scenarios() {
        let s = parse_scenario("m 0 z0\nm 1 [0.5 0.5 0.5 0.5]\nm 2 0 0 0 1\n").unwrap();
        assert_eq!(s.get(2), named_element("z1").unwrap());
        assert_eq!(s.get(5), DMatrix::identity(2, 2));
        assert_eq!(parse_scenario(&serialize_scenario(&s)).unwrap(), s);
        assert!(matches!(parse_scenario("m 0 [1 0 0 -1]\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_scenario("m 0 z0\nm 0 z1\n"), Err(Error::Parse { line: 2, .. })));
    }
}
