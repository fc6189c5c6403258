//! JSON file formats: `cmat-v1` matrices, `chan-v1` channels, `result-v1`
//! single results and `report-v1` bound reports, plus the `n,value` CSV.
//!
//! Every float written is rounded to 12 significant digits so that output
//! is stable across runs.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::channels::Channel;
use crate::chmono::BoundReport;
use crate::linalg::{Complex64, ComplexMatrix};
use crate::sdp::Certificate;
use crate::states::DensityOperator;
use crate::{Error, Result};

pub const CMAT_FORMAT: &str = "cmat-v1";
pub const CHAN_FORMAT: &str = "chan-v1";
pub const RESULT_FORMAT: &str = "result-v1";
pub const REPORT_FORMAT: &str = "report-v1";

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// `x` rounded to 12 significant digits; `-0` becomes `0`.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Rounds every float in `v` in place.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig12(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON with rounded floats and a trailing newline.
pub fn to_canonical_string(v: &Value) -> String {
    let mut v = v.clone();
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("serialisable value");
    s.push('\n');
    s
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| format_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| format_err(format!("{}: invalid JSON: {e}", path.display())))
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str, ctx: &str) -> Result<&'a Value> {
    obj.get(name).ok_or_else(|| format_err(format!("{ctx}: missing field `{name}`")))
}

fn as_count(v: &Value, name: &str, ctx: &str) -> Result<usize> {
    v.as_u64()
        .filter(|&n| n > 0)
        .map(|n| n as usize)
        .ok_or_else(|| format_err(format!("{ctx}: field `{name}` must be a positive integer")))
}

fn check_format(obj: &Map<String, Value>, expected: &str, ctx: &str) -> Result<()> {
    match field(obj, "format", ctx)?.as_str() {
        Some(f) if f == expected => Ok(()),
        Some(f) => Err(format_err(format!("{ctx}: field `format` is \"{f}\", expected \"{expected}\""))),
        None => Err(format_err(format!("{ctx}: field `format` must be a string"))),
    }
}

fn parse_rows(v: &Value, name: &str, rows: usize, cols: usize, ctx: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| format_err(format!("{ctx}: field `{name}` must be an array of rows")))?;
    if arr.len() != rows {
        return Err(format_err(format!("{ctx}: field `{name}` has {} rows, expected {rows}", arr.len())));
    }
    let mut out = Vec::with_capacity(rows * cols);
    for (r, row) in arr.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| format_err(format!("{ctx}: field `{name}` row {r} must be an array")))?;
        if row.len() != cols {
            return Err(format_err(format!("{ctx}: field `{name}` row {r} has {} entries, expected {cols}", row.len())));
        }
        for (c, x) in row.iter().enumerate() {
            let x = x
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format_err(format!("{ctx}: field `{name}` entry ({r}, {c}) is not a finite number")))?;
            out.push(x);
        }
    }
    Ok(out)
}

/// A parsed `cmat-v1` object: the matrix and its optional bipartite dims.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub matrix: ComplexMatrix,
    pub dims: Option<(usize, usize)>,
}

/// `{"format": "cmat-v1", "rows", "cols", "dims"?: [dA, dB], "re": [[..]], "im"?: [[..]]}`.
pub fn parse_cmat(v: &Value, ctx: &str) -> Result<CMat> {
    let obj = v.as_object().ok_or_else(|| format_err(format!("{ctx}: expected a {CMAT_FORMAT} object")))?;
    check_format(obj, CMAT_FORMAT, ctx)?;
    let rows = as_count(field(obj, "rows", ctx)?, "rows", ctx)?;
    let cols = as_count(field(obj, "cols", ctx)?, "cols", ctx)?;
    let re = parse_rows(field(obj, "re", ctx)?, "re", rows, cols, ctx)?;
    let im = match obj.get("im") {
        Some(v) => parse_rows(v, "im", rows, cols, ctx)?,
        None => vec![0.0; rows * cols],
    };
    let dims = match obj.get("dims") {
        None => None,
        Some(d) => {
            let arr = d.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                format_err(format!("{ctx}: field `dims` must be a pair [dA, dB]"))
            })?;
            let da = as_count(&arr[0], "dims", ctx)?;
            let db = as_count(&arr[1], "dims", ctx)?;
            if da * db != rows || rows != cols {
                return Err(format_err(format!("{ctx}: field `dims` [{da}, {db}] does not match a {rows}x{cols} matrix")));
            }
            Some((da, db))
        }
    };
    let data = re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect();
    let matrix = ComplexMatrix::from_row_major(rows, cols, data)?;
    Ok(CMat { matrix, dims })
}

pub fn cmat_to_json(m: &ComplexMatrix, dims: Option<(usize, usize)>) -> Value {
    let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..m.rows()).map(|r| (0..m.cols()).map(|c| f(&m[(r, c)])).collect()).collect()
    };
    let mut obj = Map::new();
    obj.insert("format".into(), json!(CMAT_FORMAT));
    obj.insert("rows".into(), json!(m.rows()));
    obj.insert("cols".into(), json!(m.cols()));
    if let Some((a, b)) = dims {
        obj.insert("dims".into(), json!([a, b]));
    }
    obj.insert("re".into(), json!(rows(|z| z.re)));
    if !m.is_real() {
        obj.insert("im".into(), json!(rows(|z| z.im)));
    }
    Value::Object(obj)
}

/// A state needs `dims`; a bare square matrix of size `d²` is read as `d ⊗ d`.
pub fn parse_state(v: &Value, ctx: &str) -> Result<DensityOperator> {
    let cm = parse_cmat(v, ctx)?;
    let (da, db) = match cm.dims {
        Some(d) => d,
        None => {
            let n = cm.matrix.rows();
            let d = (n as f64).sqrt().round() as usize;
            if d * d != n || cm.matrix.cols() != n {
                return Err(format_err(format!("{ctx}: missing field `dims` and {n} is not a square dimension")));
            }
            (d, d)
        }
    };
    DensityOperator::from_matrix(da, db, cm.matrix).map_err(|e| format_err(format!("{ctx}: {e}")))
}

pub fn read_state(path: &Path) -> Result<DensityOperator> {
    parse_state(&read_json(path)?, &path.display().to_string())
}

pub fn state_to_json(rho: &DensityOperator) -> Value {
    cmat_to_json(rho.matrix(), Some(rho.dims()))
}

/// `{"format": "chan-v1", "din", "dout", "kind": "choi" | "kraus", "data": cmat | [cmat]}`.
pub fn parse_channel(v: &Value, ctx: &str) -> Result<Channel> {
    let obj = v.as_object().ok_or_else(|| format_err(format!("{ctx}: expected a {CHAN_FORMAT} object")))?;
    check_format(obj, CHAN_FORMAT, ctx)?;
    let din = as_count(field(obj, "din", ctx)?, "din", ctx)?;
    let dout = as_count(field(obj, "dout", ctx)?, "dout", ctx)?;
    let data = field(obj, "data", ctx)?;
    let chan = match field(obj, "kind", ctx)?.as_str() {
        Some("choi") => {
            let m = parse_cmat(data, &format!("{ctx}: field `data`"))?;
            Channel::from_choi(din, dout, m.matrix)
        }
        Some("kraus") => {
            let arr = data
                .as_array()
                .ok_or_else(|| format_err(format!("{ctx}: field `data` must be a list of Kraus operators")))?;
            let ks = arr
                .iter()
                .enumerate()
                .map(|(i, k)| parse_cmat(k, &format!("{ctx}: field `data[{i}]`")).map(|c| c.matrix))
                .collect::<Result<Vec<_>>>()?;
            Channel::from_kraus(din, dout, ks)
        }
        Some(other) => return Err(format_err(format!("{ctx}: field `kind` is \"{other}\", expected \"choi\" or \"kraus\""))),
        None => return Err(format_err(format!("{ctx}: field `kind` must be a string"))),
    };
    chan.map_err(|e| format_err(format!("{ctx}: {e}")))
}

pub fn read_channel(path: &Path) -> Result<Channel> {
    parse_channel(&read_json(path)?, &path.display().to_string())
}

pub fn channel_to_json(c: &Channel, kind: &str) -> Value {
    let data = if kind == "kraus" {
        Value::Array(c.kraus().iter().map(|k| cmat_to_json(k, None)).collect())
    } else {
        cmat_to_json(c.choi().matrix(), Some((c.din(), c.dout())))
    };
    json!({ "format": CHAN_FORMAT, "din": c.din(), "dout": c.dout(), "kind": if kind == "kraus" { "kraus" } else { "choi" }, "data": data })
}

/// `{"format": "result-v1", "measure", "value", "certificate", "witness"?, ...extra}`.
pub fn result_json(measure: &str, value: f64, certificate: Option<&Certificate>, witness: Option<Value>, extra: Map<String, Value>) -> Value {
    let mut obj = Map::new();
    obj.insert("format".into(), json!(RESULT_FORMAT));
    obj.insert("measure".into(), json!(measure));
    obj.insert("value".into(), if value.is_finite() { json!(value) } else { json!(format!("{value}")) });
    obj.insert(
        "certificate".into(),
        certificate.map(|c| serde_json::to_value(c).expect("serialisable")).unwrap_or(Value::Null),
    );
    if let Some(w) = witness {
        obj.insert("witness".into(), w);
    }
    for (k, v) in extra {
        obj.insert(k, v);
    }
    Value::Object(obj)
}

/// `{"format": "report-v1", "channel", "bounds", "certificates", "flags"}`.
pub fn report_json(r: &BoundReport) -> Value {
    let per_copy: Vec<Value> = r
        .per_copy
        .iter()
        .map(|b| json!({ "n": b.copies, "temperedNegativity": b.tempered_negativity, "bitsPerUse": b.bits_per_use }))
        .collect();
    json!({
        "format": REPORT_FORMAT,
        "channel": r.channel,
        "bounds": {
            "ecLowerBound": r.ec_lower_bound,
            "ecLabel": "finite-n lower bound",
            "qUpperBound": r.q_upper_bound,
            "qProbeLowerBound": r.q_probe_lower_bound,
            "gap": r.gap(),
            "perCopyTemperedNeg": per_copy,
        },
        "certificates": serde_json::to_value(&r.certificates).expect("serialisable"),
        "flags": {
            "irreversibilityWitnessed": r.irreversibility_witnessed,
            "allCertified": r.all_certified(),
        },
    })
}

/// `n,value` rows with a header line.
pub fn series_csv(series: &[(usize, f64)]) -> String {
    let mut s = String::from("n,value\n");
    for (n, v) in series {
        s.push_str(&format!("{n},{}\n", round_sig12(*v)));
    }
    s
}
