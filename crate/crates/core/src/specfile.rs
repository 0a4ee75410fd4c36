//! TOML channel-spec files.
//!
//! ```toml
//! # single: transition[x][s] = pmf over y
//! kind = "single"
//! alphabets = { X = 2, S = 2, Y = 2 }
//! state_pmf = [0.5, 0.5]
//! transition = [[[1, 0], [0, 1]], [[0, 1], [1, 0]]]
//! ```
//!
//! Index order of `transition` by kind (the innermost array is always the
//! output pmf):
//!
//! | kind   | alphabets                                   | nesting                  | output row            |
//! |--------|---------------------------------------------|--------------------------|-----------------------|
//! | single | `X, S, Y`                                   | `[x][s]`                 | `y`                   |
//! | mac    | `X1, X2, S1, S2` and `Y` or `Y1, Y2`        | `[x1][x2][s1][s2]`       | `y`, or `(y1, y2)` y1 major |
//! | bc     | `X, S, Y1, Y2`                              | `[x][s]`                 | `(y1, y2)`, y1 major  |
//! | relay  | `X, Xr, Y, Yr` and `S` or `S1, S2`          | `[x][xr][s]` / `[x][xr][s1][s2]` | `(y, yr)`, y major |
//!
//! `state_pmf` is flat, row-major over the state coordinates. Rows must sum
//! to 1 within [`ROW_TOL`]; accepted rows are renormalized.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::channels::{names, BcStateChannel, MacOutput, MacStateChannel, RelayStateChannel, StateChannel};
use crate::error::{Error, Result};
use crate::prob::{CondPmf, Coord, JointPmf, Pmf};

pub const ROW_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum ChannelSpec {
    Single(StateChannel),
    Mac(MacStateChannel),
    Bc(BcStateChannel),
    Relay(RelayStateChannel),
}

impl ChannelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ChannelSpec::Single(_) => "single",
            ChannelSpec::Mac(_) => "mac",
            ChannelSpec::Bc(_) => "bc",
            ChannelSpec::Relay(_) => "relay",
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: String,
    alphabets: BTreeMap<String, usize>,
    state_pmf: Vec<f64>,
    transition: toml::Value,
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<ChannelSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Spec(format!("{}: {e}", path.display())))?;
    parse_spec(&text)
}

pub fn parse_spec(text: &str) -> Result<ChannelSpec> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
    let al = Alphabets(&raw.alphabets);
    match raw.kind.as_str() {
        "single" => {
            al.only(&["X", "S", "Y"])?;
            let (x, s, y) = (al.get("X")?, al.get("S")?, al.get("Y")?);
            let state = state_pmf(&raw.state_pmf, s)?;
            let rows = flatten(&raw.transition, &[x, s], y, &["x", "s"])?;
            Ok(ChannelSpec::Single(StateChannel::new(state, x, rows)?))
        }
        "mac" => {
            let product = al.has("Y1") || al.has("Y2");
            if product {
                al.only(&["X1", "X2", "S1", "S2", "Y1", "Y2"])?;
            } else {
                al.only(&["X1", "X2", "S1", "S2", "Y"])?;
            }
            let (x1, x2, s1, s2) = (al.get("X1")?, al.get("X2")?, al.get("S1")?, al.get("S2")?);
            let output = if product {
                MacOutput::Product(al.get("Y1")?, al.get("Y2")?)
            } else {
                MacOutput::Scalar(al.get("Y")?)
            };
            let state = state_joint(&raw.state_pmf, s1, s2)?;
            let rows = flatten(&raw.transition, &[x1, x2, s1, s2], output.size(), &["x1", "x2", "s1", "s2"])?;
            Ok(ChannelSpec::Mac(MacStateChannel::new(state, x1, x2, output, rows)?))
        }
        "bc" => {
            al.only(&["X", "S", "Y1", "Y2"])?;
            let (x, s, y1, y2) = (al.get("X")?, al.get("S")?, al.get("Y1")?, al.get("Y2")?);
            let state = state_pmf(&raw.state_pmf, s)?;
            let rows = flatten(&raw.transition, &[x, s], y1 * y2, &["x", "s"])?;
            Ok(ChannelSpec::Bc(BcStateChannel::new(state, x, y1, y2, rows)?))
        }
        "relay" => {
            let pair = al.has("S1") || al.has("S2");
            if pair {
                al.only(&["X", "Xr", "S1", "S2", "Y", "Yr"])?;
            } else {
                al.only(&["X", "Xr", "S", "Y", "Yr"])?;
            }
            let (x, xr, y, yr) = (al.get("X")?, al.get("Xr")?, al.get("Y")?, al.get("Yr")?);
            let (s1, s2) = if pair { (al.get("S1")?, al.get("S2")?) } else { (al.get("S")?, 1) };
            let state = state_joint(&raw.state_pmf, s1, s2)?;
            let rows = if pair {
                flatten(&raw.transition, &[x, xr, s1, s2], y * yr, &["x", "xr", "s1", "s2"])?
            } else {
                flatten(&raw.transition, &[x, xr, s1], y * yr, &["x", "xr", "s"])?
            };
            Ok(ChannelSpec::Relay(RelayStateChannel::new(state, x, xr, y, yr, rows)?))
        }
        other => Err(Error::Spec(format!(
            "unknown kind `{other}` (expected single, mac, bc or relay)"
        ))),
    }
}

struct Alphabets<'a>(&'a BTreeMap<String, usize>);

impl Alphabets<'_> {
    fn has(&self, k: &str) -> bool {
        self.0.contains_key(k)
    }

    fn get(&self, k: &str) -> Result<usize> {
        self.0
            .get(k)
            .copied()
            .ok_or_else(|| Error::Spec(format!("missing alphabet `{k}`")))
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        for k in self.0.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Spec(format!(
                    "unexpected alphabet `{k}` (expected {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }
}

fn normalized(row: &[f64], what: &str) -> Result<Vec<f64>> {
    for (i, &v) in row.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Spec(format!("{what}: entry {i} is {v}")));
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        return Err(Error::Spec(format!("{what} sums to {sum}, not 1")));
    }
    Ok(row.iter().map(|v| v / sum).collect())
}

fn state_pmf(values: &[f64], s: usize) -> Result<Pmf> {
    if values.len() != s {
        return Err(Error::Spec(format!("state_pmf has {} entries, expected {s}", values.len())));
    }
    Pmf::new(normalized(values, "state_pmf")?)
}

fn state_joint(values: &[f64], s1: usize, s2: usize) -> Result<JointPmf> {
    if values.len() != s1 * s2 {
        return Err(Error::Spec(format!(
            "state_pmf has {} entries, expected {}",
            values.len(),
            s1 * s2
        )));
    }
    JointPmf::new(
        vec![Coord::new(names::S1, s1), Coord::new(names::S2, s2)],
        normalized(values, "state_pmf")?,
    )
}

fn number(v: &toml::Value, at: &str) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::Spec(format!("transition{at}: expected a number, found {}", other.type_str()))),
    }
}

/// Flattens nested arrays of shape `dims × [out]` into validated rows.
fn flatten(value: &toml::Value, dims: &[usize], out: usize, labels: &[&str]) -> Result<CondPmf> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut path: Vec<usize> = Vec::new();
    walk(value, dims, out, labels, &mut path, &mut rows)?;
    CondPmf::from_rows(rows)
}

fn walk(
    value: &toml::Value,
    dims: &[usize],
    out: usize,
    labels: &[&str],
    path: &mut Vec<usize>,
    rows: &mut Vec<Vec<f64>>,
) -> Result<()> {
    let at: String = path.iter().map(|i| format!("[{i}]")).collect();
    let arr = value
        .as_array()
        .ok_or_else(|| Error::Spec(format!("transition{at}: expected an array")))?;
    let depth = path.len();
    if depth == dims.len() {
        if arr.len() != out {
            return Err(Error::Spec(format!(
                "transition{at}: output row has {} entries, expected {out}",
                arr.len()
            )));
        }
        let row: Vec<f64> = arr.iter().map(|v| number(v, &at)).collect::<Result<_>>()?;
        let coords: Vec<String> = labels.iter().zip(path.iter()).map(|(l, i)| format!("{l}={i}")).collect();
        let what = format!("transition row {} ({})", rows.len(), coords.join(", "));
        rows.push(normalized(&row, &what)?);
        return Ok(());
    }
    if arr.len() != dims[depth] {
        return Err(Error::Spec(format!(
            "transition{at}: index `{}` has {} entries, expected {}",
            labels[depth],
            arr.len(),
            dims[depth]
        )));
    }
    for (i, v) in arr.iter().enumerate() {
        path.push(i);
        walk(v, dims, out, labels, path, rows)?;
        path.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const XOR: &str = r#"
kind = "single"
alphabets = { X = 2, S = 2, Y = 2 }
state_pmf = [0.5, 0.5]
transition = [[[1, 0], [0, 1]], [[0, 1], [1, 0]]]
"#;

    #[test]
    fn loads_xor() {
        let ChannelSpec::Single(ch) = parse_spec(XOR).unwrap() else { panic!() };
        let f = ch.is_deterministic().unwrap();
        assert_eq!(f.apply(1, 0), 1);
        assert_eq!(f.apply(1, 1), 0);
    }

    #[test]
    fn bad_row_is_named() {
        let text = XOR.replace("[[0, 1], [1, 0]]]", "[[0, 0.9], [1, 0]]]");
        let err = parse_spec(&text).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        assert!(err.contains("x=1, s=0"), "{err}");
    }

    #[test]
    fn small_deviation_is_renormalized() {
        let text = XOR.replace("[[0, 1], [1, 0]]]", "[[0, 1.0000004], [1, 0]]]");
        let ChannelSpec::Single(ch) = parse_spec(&text).unwrap() else { panic!() };
        assert_eq!(ch.row(1, 0), &[0.0, 1.0]);
    }

    #[test]
    fn shape_errors() {
        let text = XOR.replace("state_pmf = [0.5, 0.5]", "state_pmf = [1.0]");
        assert!(parse_spec(&text).is_err());
        let text = XOR.replace("kind = \"single\"", "kind = \"triple\"");
        assert!(parse_spec(&text).is_err());
        let text = XOR.replace("Y = 2", "Y = 2, Z = 3");
        assert!(parse_spec(&text).is_err());
    }

    #[test]
    fn loads_product_mac() {
        let mut rows = Vec::new();
        for x1 in 0..2 {
            let mut a = Vec::new();
            for x2 in 0..2 {
                let mut b = Vec::new();
                for s1 in 0..2 {
                    let mut c = Vec::new();
                    for s2 in 0..2 {
                        let mut r = vec![0; 4];
                        r[(x1 ^ s1) * 2 + (x2 ^ s2)] = 1;
                        c.push(format!("{r:?}"));
                    }
                    b.push(format!("[{}]", c.join(",")));
                }
                a.push(format!("[{}]", b.join(",")));
            }
            rows.push(format!("[{}]", a.join(",")));
        }
        let text = format!(
            "kind = \"mac\"\nalphabets = {{ X1 = 2, X2 = 2, S1 = 2, S2 = 2, Y1 = 2, Y2 = 2 }}\nstate_pmf = [0.4, 0.1, 0.1, 0.4]\ntransition = [{}]\n",
            rows.join(",")
        );
        let ChannelSpec::Mac(mac) = parse_spec(&text).unwrap() else { panic!() };
        assert!(mac.is_orthogonal().unwrap().is_some());
        assert!(!mac.states_independent());
    }
}
