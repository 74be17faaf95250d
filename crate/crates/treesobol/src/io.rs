//! File formats: ensemble and posterior JSON, data and report CSV.
//!
//! An ensemble file looks like
//!
//! ```json
//! {"domain": {"lo": [0, 0], "hi": [1, 1]},
//!  "trees": [{"split": {"dim": 1, "cut": 0.5}, "left": {"leaf": 1}, "right": {"leaf": 2}}]}
//! ```
//!
//! Split dimensions are 1-based on disk. A posterior file is a JSON array of
//! ensemble objects, each carrying an extra `sigma` field.

use std::io::{Read, Write};
use std::path::Path;

use serde_json::{json, Map, Value};
use treesobol_core::{Domain, Ensemble, Node, PosteriorReport, SobolReport, Tree};

use crate::error::{Error, Result};
use crate::sampler::{Dataset, PosteriorDraw};

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(msg.into())
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| malformed(format!("{path}: missing `{key}`")))
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| malformed(format!("{path}: expected a number")))
}

fn numbers(v: &Value, path: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| malformed(format!("{path}: expected an array")))?
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{path}[{i}]")))
        .collect()
}

fn node_from_json(v: &Value, p: usize, path: &str) -> Result<Node> {
    let obj = v
        .as_object()
        .ok_or_else(|| malformed(format!("{path}: expected an object")))?;
    if let Some(leaf) = obj.get("leaf") {
        if obj.contains_key("split") {
            return Err(malformed(format!("{path}: node is both leaf and split")));
        }
        return Ok(Node::leaf(number(leaf, path)?));
    }
    let split = field(obj, "split", path)?
        .as_object()
        .ok_or_else(|| malformed(format!("{path}.split: expected an object")))?;
    let dim = field(split, "dim", path)?
        .as_u64()
        .ok_or_else(|| malformed(format!("{path}.split.dim: expected a positive integer")))?
        as usize;
    if dim == 0 || dim > p {
        return Err(Error::DimensionMismatch(format!(
            "{path}: split dimension {dim} outside 1..={p}"
        )));
    }
    let cut = number(field(split, "cut", path)?, &format!("{path}.split.cut"))?;
    let (left, right) = match (obj.get("left"), obj.get("right")) {
        (Some(l), Some(r)) => (l, r),
        _ => return Err(Error::UnaryNode { path: path.into() }),
    };
    Ok(Node::split(
        dim - 1,
        cut,
        node_from_json(left, p, &format!("{path}.left"))?,
        node_from_json(right, p, &format!("{path}.right"))?,
    ))
}

fn node_to_json(node: &Node) -> Value {
    match node {
        Node::Leaf(mu) => json!({ "leaf": mu }),
        Node::Split { rule, left, right } => json!({
            "split": { "dim": rule.dim + 1, "cut": rule.cut },
            "left": node_to_json(left),
            "right": node_to_json(right),
        }),
    }
}

pub fn ensemble_from_json(v: &Value) -> Result<Ensemble> {
    let obj = v
        .as_object()
        .ok_or_else(|| malformed("ensemble: expected an object"))?;
    let dom = field(obj, "domain", "ensemble")?
        .as_object()
        .ok_or_else(|| malformed("domain: expected an object"))?;
    let lo = numbers(field(dom, "lo", "domain")?, "domain.lo")?;
    let hi = numbers(field(dom, "hi", "domain")?, "domain.hi")?;
    if lo.len() != hi.len() {
        return Err(Error::DimensionMismatch(format!(
            "domain.lo has {} entries but domain.hi has {}",
            lo.len(),
            hi.len()
        )));
    }
    let domain = Domain::new(lo, hi)?;
    let p = domain.dim();
    let trees = field(obj, "trees", "ensemble")?
        .as_array()
        .ok_or_else(|| malformed("trees: expected an array"))?
        .iter()
        .enumerate()
        .map(|(t, v)| node_from_json(v, p, &format!("trees[{t}]")).map(Tree::new))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble::new(domain, trees)?)
}

pub fn ensemble_to_json(ens: &Ensemble) -> Value {
    json!({
        "domain": { "lo": ens.domain().lo(), "hi": ens.domain().hi() },
        "trees": ens.trees().iter().map(|t| node_to_json(t.root())).collect::<Vec<_>>(),
    })
}

pub fn parse_ensemble(text: &str) -> Result<Ensemble> {
    ensemble_from_json(&serde_json::from_str(text)?)
}

pub fn read_ensemble(path: &Path) -> Result<Ensemble> {
    parse_ensemble(&std::fs::read_to_string(path)?)
}

pub fn parse_posterior(text: &str) -> Result<Vec<PosteriorDraw>> {
    let v: Value = serde_json::from_str(text)?;
    let draws = v
        .as_array()
        .ok_or_else(|| malformed("posterior: expected an array of ensembles"))?;
    draws
        .iter()
        .enumerate()
        .map(|(d, v)| {
            let obj = v
                .as_object()
                .ok_or_else(|| malformed(format!("draw {d}: expected an object")))?;
            let sigma = number(field(obj, "sigma", &format!("draw {d}"))?, "sigma")?;
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(malformed(format!("draw {d}: sigma must be positive")));
            }
            Ok(PosteriorDraw {
                ensemble: ensemble_from_json(v)?,
                sigma,
            })
        })
        .collect()
}

pub fn read_posterior(path: &Path) -> Result<Vec<PosteriorDraw>> {
    parse_posterior(&std::fs::read_to_string(path)?)
}

/// Posterior file contents, one ensemble object per draw.
pub fn posterior_to_json(draws: &[PosteriorDraw]) -> Value {
    Value::Array(
        draws
            .iter()
            .map(|d| {
                let mut v = ensemble_to_json(&d.ensemble);
                v["sigma"] = json!(d.sigma);
                v
            })
            .collect(),
    )
}

/// Writes draws as a JSON array one at a time, so a long chain never has to
/// sit in memory.
pub struct PosteriorWriter<W: Write> {
    out: W,
    first: bool,
}

impl<W: Write> PosteriorWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        out.write_all(b"[")?;
        Ok(PosteriorWriter { out, first: true })
    }

    pub fn push(&mut self, ens: &Ensemble, sigma: f64) -> Result<()> {
        if !self.first {
            self.out.write_all(b",")?;
        }
        self.first = false;
        self.out.write_all(b"\n")?;
        let mut v = ensemble_to_json(ens);
        v["sigma"] = json!(sigma);
        serde_json::to_writer(&mut self.out, &v)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.write_all(b"\n]\n")?;
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Data CSV: a header row, the input columns, then the response in the last
/// column.
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let cols = rdr.headers()?.len();
    if cols < 2 {
        return Err(Error::Data(
            "need at least one input column and a response".into(),
        ));
    }
    let p = cols - 1;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (c, s) in rec.iter().enumerate() {
            let v: f64 = s.parse().map_err(|_| {
                Error::Data(format!(
                    "row {}, column {}: `{s}` is not a number",
                    r + 1,
                    c + 1
                ))
            })?;
            if c < p {
                x.push(v);
            } else {
                y.push(v);
            }
        }
    }
    Dataset::from_flat(x, p, y)
}

pub fn write_dataset<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=data.p()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut row: Vec<String> = data.row(i).iter().map(f64::to_string).collect();
        row.push(data.y()[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows `(draw, set, V, S, T)` for one report. Total effects appear on the
/// singleton rows only; other rows leave `T` empty.
pub fn report_rows(draw: &str, r: &SobolReport) -> Vec<[String; 5]> {
    let p = r.p;
    let mut rows = vec![[
        draw.to_string(),
        "total".into(),
        r.total_variance.to_string(),
        String::new(),
        String::new(),
    ]];
    for i in 0..p {
        rows.push([
            draw.to_string(),
            (i + 1).to_string(),
            r.first_order_v[i].to_string(),
            r.first_order[i].to_string(),
            r.total_effects[i].to_string(),
        ]);
    }
    for (&(i, j), &v) in &r.second_order_v {
        rows.push([
            draw.to_string(),
            format!("{}-{}", i + 1, j + 1),
            v.to_string(),
            r.second_order[&(i, j)].to_string(),
            String::new(),
        ]);
    }
    for (set, &(v, s)) in &r.higher_order {
        rows.push([
            draw.to_string(),
            set.to_string(),
            v.to_string(),
            s.to_string(),
            String::new(),
        ]);
    }
    rows
}

pub fn write_report_csv<W: Write>(rep: &PosteriorReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["draw", "set", "V", "S", "T"])?;
    for (d, r) in rep.draws.iter().enumerate() {
        for row in report_rows(&d.to_string(), r) {
            w.write_record(&row)?;
        }
    }
    for row in report_rows("mean", &rep.mean) {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Structured form of a report for JSON output.
pub fn report_to_json(r: &SobolReport) -> Value {
    let second: Vec<Value> = r
        .second_order
        .iter()
        .map(|(&(i, j), &s)| json!({ "set": [i + 1, j + 1], "V": r.second_order_v[&(i, j)], "S": s }))
        .collect();
    json!({
        "p": r.p,
        "total_variance": r.total_variance,
        "degenerate": r.degenerate,
        "first_order_V": r.first_order_v,
        "first_order": r.first_order,
        "total_effects_V": r.total_effects_v,
        "total_effects": r.total_effects,
        "second_order": second,
    })
}

pub fn posterior_report_to_json(rep: &PosteriorReport) -> Value {
    json!({
        "mean": report_to_json(&rep.mean),
        "n_degenerate": rep.n_degenerate,
        "draws": rep.draws.iter().map(report_to_json).collect::<Vec<_>>(),
    })
}
