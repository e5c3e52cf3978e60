//! Plain-text model files.
//!
//! ```text
//! # comments start with '#'
//! [model]
//! state_dim = 1
//! noise_dim = 1
//!
//! [terms]
//! b 0 : xpow=[1] ypow=[0] coeff=2.0
//! b 0 : xpow=[0] ypow=[3] coeff=3.0
//! sigma 0 0 : xpow=[0] ypow=[2] coeff=4.0
//! G 0 : ypow=[2] coeff=0.1
//!
//! [constants]
//! K = 9
//! q = 2
//! L = 2
//! L0 = 2
//!
//! [dissipativity]
//! p = 2
//! q = 4
//! a1 = 0
//! a2 = 2
//! a3 = 1
//! a4 = 3
//! a5 = 1
//! ```
//!
//! `b i` is drift component `i`, `sigma i j` is diffusion entry `(i, j)` and
//! `G i` is neutral component `i` (which depends on the delayed state only,
//! so it takes no `xpow`). Every key is required except `[dissipativity]`,
//! which is optional as a whole; `[constants]` keys default to 1.
//! Unknown sections and keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{CoefficientModel, Dissipativity, GrowthConstants, Monomial, PolynomialMap};
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Model,
    Terms,
    Constants,
    Dissipativity,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

struct RawTerm {
    line: usize,
    map: char,
    index: Vec<usize>,
    xpow: Option<Vec<u32>>,
    ypow: Vec<u32>,
    coeff: f64,
}

pub fn parse_model(text: &str) -> Result<CoefficientModel> {
    let mut section = Section::None;
    let mut model_keys: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut constant_keys: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut diss_keys: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut saw_dissipativity = false;
    let mut terms = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = match name.trim() {
                "model" => Section::Model,
                "terms" => Section::Terms,
                "constants" => Section::Constants,
                "dissipativity" => {
                    saw_dissipativity = true;
                    Section::Dissipativity
                }
                other => return Err(err(line_no, format!("unknown section [{other}]"))),
            };
            continue;
        }
        match section {
            Section::None => return Err(err(line_no, "content before the first section")),
            Section::Terms => terms.push(parse_term(line_no, line)?),
            Section::Model => {
                insert_key(&mut model_keys, line_no, line, &["state_dim", "noise_dim"])?
            }
            Section::Constants => {
                insert_key(&mut constant_keys, line_no, line, &["K", "q", "L", "L0"])?
            }
            Section::Dissipativity => insert_key(
                &mut diss_keys,
                line_no,
                line,
                &["p", "q", "a1", "a2", "a3", "a4", "a5"],
            )?,
        }
    }

    let n: usize = required(&model_keys, "state_dim")?;
    let m: usize = required(&model_keys, "noise_dim")?;
    if n == 0 || m == 0 {
        return Err(err(0, "state_dim and noise_dim must be positive"));
    }

    let mut drift = PolynomialMap::zero(n, n, n);
    let mut diffusion = PolynomialMap::zero(n * m, n, n);
    let mut neutral = PolynomialMap::zero(n, 0, n);
    for t in terms {
        let line = t.line;
        let wrap = |e: Error| err(line, e.to_string());
        match t.map {
            'b' | 's' => {
                let xpow = t.xpow.ok_or_else(|| err(line, "missing xpow"))?;
                let (target, output) = if t.map == 'b' {
                    (&mut drift, t.index[0])
                } else {
                    if t.index[1] >= m {
                        return Err(err(
                            line,
                            format!("sigma column {} >= noise_dim", t.index[1]),
                        ));
                    }
                    (&mut diffusion, t.index[0] * m + t.index[1])
                };
                if t.index[0] >= n {
                    return Err(err(line, format!("row {} >= state_dim", t.index[0])));
                }
                target
                    .push(Monomial::new(output, xpow, t.ypow, t.coeff))
                    .map_err(wrap)?;
            }
            _ => {
                if t.xpow.is_some() {
                    return Err(err(line, "G depends on the delayed state only; drop xpow"));
                }
                neutral
                    .push(Monomial::new(t.index[0], vec![], t.ypow, t.coeff))
                    .map_err(wrap)?;
            }
        }
    }

    let constants = GrowthConstants {
        growth_k: optional(&constant_keys, "K", 1.0)?,
        growth_q: optional(&constant_keys, "q", 1.0)?,
        lipschitz_l: optional(&constant_keys, "L", 1.0)?,
        lipschitz_l0: optional(&constant_keys, "L0", 1.0)?,
    };
    let dissipativity = if saw_dissipativity {
        Some(Dissipativity {
            p: required(&diss_keys, "p")?,
            q: required(&diss_keys, "q")?,
            a1: required(&diss_keys, "a1")?,
            a2: required(&diss_keys, "a2")?,
            a3: required(&diss_keys, "a3")?,
            a4: required(&diss_keys, "a4")?,
            a5: required(&diss_keys, "a5")?,
        })
    } else {
        None
    };

    CoefficientModel::new(drift, diffusion, neutral)?
        .with_constants(constants)?
        .with_dissipativity(dissipativity)
}

fn insert_key(
    keys: &mut BTreeMap<String, (usize, String)>,
    line_no: usize,
    line: &str,
    allowed: &[&str],
) -> Result<()> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| err(line_no, "expected `key = value`"))?;
    let k = k.trim();
    if !allowed.contains(&k) {
        return Err(err(line_no, format!("unknown key `{k}`")));
    }
    if keys
        .insert(k.to_string(), (line_no, v.trim().to_string()))
        .is_some()
    {
        return Err(err(line_no, format!("duplicate key `{k}`")));
    }
    Ok(())
}

fn required<T: std::str::FromStr>(keys: &BTreeMap<String, (usize, String)>, k: &str) -> Result<T> {
    match keys.get(k) {
        Some((line, v)) => v
            .parse()
            .map_err(|_| err(*line, format!("cannot parse value of `{k}`: `{v}`"))),
        None => Err(err(0, format!("missing required key `{k}`"))),
    }
}

fn optional(keys: &BTreeMap<String, (usize, String)>, k: &str, default: f64) -> Result<f64> {
    if keys.contains_key(k) {
        required(keys, k)
    } else {
        Ok(default)
    }
}

fn parse_term(line_no: usize, line: &str) -> Result<RawTerm> {
    let (head, body) = line
        .split_once(':')
        .ok_or_else(|| err(line_no, "expected `<map> <index..> : key=value ...`"))?;
    let mut head = head.split_whitespace();
    let (map, arity) = match head.next() {
        Some("b") => ('b', 1),
        Some("sigma") => ('s', 2),
        Some("G") => ('G', 1),
        other => {
            return Err(err(
                line_no,
                format!(
                    "unknown map `{}` (expected b, sigma or G)",
                    other.unwrap_or("")
                ),
            ))
        }
    };
    let index: Vec<usize> = head
        .map(|s| {
            s.parse()
                .map_err(|_| err(line_no, format!("bad index `{s}`")))
        })
        .collect::<Result<_>>()?;
    if index.len() != arity {
        return Err(err(line_no, format!("expected {arity} index value(s)")));
    }

    let mut xpow = None;
    let mut ypow = None;
    let mut coeff = None;
    for kv in body.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected key=value, got `{kv}`")))?;
        let slot_taken = match k {
            "xpow" => xpow.replace(parse_powers(line_no, v)?).is_some(),
            "ypow" => ypow.replace(parse_powers(line_no, v)?).is_some(),
            "coeff" => coeff
                .replace(
                    v.parse::<f64>()
                        .map_err(|_| err(line_no, format!("bad coefficient `{v}`")))?,
                )
                .is_some(),
            other => return Err(err(line_no, format!("unknown key `{other}`"))),
        };
        if slot_taken {
            return Err(err(line_no, format!("duplicate key `{k}`")));
        }
    }
    Ok(RawTerm {
        line: line_no,
        map,
        index,
        xpow,
        ypow: ypow.ok_or_else(|| err(line_no, "missing ypow"))?,
        coeff: coeff.ok_or_else(|| err(line_no, "missing coeff"))?,
    })
}

fn parse_powers(line_no: usize, v: &str) -> Result<Vec<u32>> {
    let inner = v
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| {
            err(
                line_no,
                format!("exponents must look like [1,0], got `{v}`"),
            )
        })?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| err(line_no, format!("bad exponent `{s}`")))
        })
        .collect()
}

fn join_powers(p: &[u32]) -> String {
    let parts: Vec<String> = p.iter().map(u32::to_string).collect();
    format!("[{}]", parts.join(","))
}

/// Canonical text form; `parse_model(&write_model(m))` reproduces `m`.
pub fn write_model(model: &CoefficientModel) -> String {
    let n = model.state_dim();
    let m = model.noise_dim();
    let mut s = String::new();
    let _ = writeln!(s, "[model]\nstate_dim = {n}\nnoise_dim = {m}\n\n[terms]");
    for t in model.drift().terms() {
        let _ = writeln!(
            s,
            "b {} : xpow={} ypow={} coeff={:?}",
            t.output,
            join_powers(&t.xpow),
            join_powers(&t.ypow),
            t.coeff
        );
    }
    for t in model.diffusion().terms() {
        let _ = writeln!(
            s,
            "sigma {} {} : xpow={} ypow={} coeff={:?}",
            t.output / m,
            t.output % m,
            join_powers(&t.xpow),
            join_powers(&t.ypow),
            t.coeff
        );
    }
    for t in model.neutral().terms() {
        let _ = writeln!(
            s,
            "G {} : ypow={} coeff={:?}",
            t.output,
            join_powers(&t.ypow),
            t.coeff
        );
    }
    let c = model.constants();
    let _ = writeln!(
        s,
        "\n[constants]\nK = {:?}\nq = {:?}\nL = {:?}\nL0 = {:?}",
        c.growth_k, c.growth_q, c.lipschitz_l, c.lipschitz_l0
    );
    if let Some(d) = model.dissipativity() {
        let _ = writeln!(
            s,
            "\n[dissipativity]\np = {:?}\nq = {:?}\na1 = {:?}\na2 = {:?}\na3 = {:?}\na4 = {:?}\na5 = {:?}",
            d.p, d.q, d.a1, d.a2, d.a3, d.a4, d.a5
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin;

    const SEC1: &str = "\
# b(x,y) = 2x + 3y^3, sigma = 4y^2
[model]
state_dim = 1
noise_dim = 1

[terms]
b 0 : xpow=[1] ypow=[0] coeff=2.0
b 0 : xpow=[0] ypow=[3] coeff=3.0
sigma 0 0 : xpow=[0] ypow=[2] coeff=4.0

[constants]
K = 9
q = 2
L = 2
L0 = 2
";

    #[test]
    fn parses_documented_example() {
        let m = parse_model(SEC1).unwrap();
        assert_eq!(m, builtin::paper_sec1());
    }

    #[test]
    fn canonical_text_round_trips() {
        for name in builtin::NAMES {
            let m = builtin::by_name(name).unwrap();
            assert_eq!(parse_model(&write_model(&m)).unwrap(), m, "{name}");
        }
    }

    #[test]
    fn neutral_and_multi_noise() {
        let text = "[model]\nstate_dim = 1\nnoise_dim = 2\n[terms]\n\
                    sigma 0 1 : xpow=[0] ypow=[0] coeff=1.5\nG 0 : ypow=[2] coeff=0.1\n";
        let m = parse_model(text).unwrap();
        assert_eq!(m.noise_dim(), 2);
        let e = m.evaluate(&[0.0], &[1.0]).unwrap();
        assert_eq!(e.diffusion, vec![0.0, 1.5]);
        assert!((e.neutral[0] - 0.1).abs() < 1e-16);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let bad_key = SEC1.replace("L0 = 2", "L1 = 2");
        assert!(matches!(
            parse_model(&bad_key),
            Err(Error::Parse { line: 15, .. })
        ));
        let bad_sec = format!("{SEC1}\n[extras]\n");
        assert!(parse_model(&bad_sec).is_err());
        let bad_term = SEC1.replace("coeff=4.0", "coeff=4.0 weight=1");
        assert!(parse_model(&bad_term).is_err());
        let g_with_x = format!("{SEC1}\n[terms]\nG 0 : xpow=[1] ypow=[0] coeff=1\n");
        assert!(parse_model(&g_with_x).is_err());
    }

    #[test]
    fn rejects_structural_errors() {
        assert!(parse_model("[terms]\nb 0 : xpow=[1] ypow=[0] coeff=1\n").is_err());
        let wrong_len = SEC1.replace("xpow=[1] ypow=[0]", "xpow=[1,0] ypow=[0]");
        assert!(parse_model(&wrong_len).is_err());
        let out_of_range = SEC1.replace("sigma 0 0", "sigma 0 1");
        assert!(parse_model(&out_of_range).is_err());
        let dup = SEC1.replace("q = 2", "q = 2\nq = 3");
        assert!(parse_model(&dup).is_err());
        let partial_diss = format!("{SEC1}\n[dissipativity]\np = 2\n");
        assert!(parse_model(&partial_diss).is_err());
    }
}
