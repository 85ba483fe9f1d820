//! File formats: `x,y` CSV input, JSON model files, classification and curve tables.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fit::FitOutput;
use crate::kernel::KernelSpec;
use crate::params::{ModelKind, ModelParams};
use crate::posterior::{flag_outliers, lambda_at_labels, map_classify, OUTLIER_THRESHOLD};
use crate::selection::Criteria;

/// Current model-file layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Shortest representation that parses back to the same `f64`, switching to
/// exponent form for very large or small magnitudes.
pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(e)),
        _ => Error::Input(e.to_string()),
    }
}

/// Parse a CSV with a header naming columns `x` and `y`. Other columns are
/// ignored and reported in the returned warnings.
pub fn read_xy<R: Read>(input: R) -> Result<(Dataset, Vec<String>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let find = |name: &str| header.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(ix), Some(iy)) = (find("x"), find("y")) else {
        return Err(Error::Input(format!("line 1: header must name columns x and y, found {:?}", header.iter().collect::<Vec<_>>())));
    };
    let mut warnings = Vec::new();
    let extra: Vec<&str> = header.iter().enumerate().filter(|(i, _)| *i != ix && *i != iy).map(|(_, h)| h).collect();
    if !extra.is_empty() {
        warnings.push(format!("ignoring extra columns: {}", extra.join(", ")));
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize, name: &str| -> Result<f64> {
            let s = rec.get(i).ok_or_else(|| Error::Input(format!("line {line}: missing {name} value")))?;
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Input(format!("line {line}: {name} value '{s}' is not a finite number"))),
            }
        };
        x.push(num(ix, "x")?);
        y.push(num(iy, "y")?);
    }
    if x.is_empty() {
        return Err(Error::Input("no data rows".into()));
    }
    Ok((Dataset::new(x, y)?, warnings))
}

pub fn read_xy_file(path: &Path) -> Result<(Dataset, Vec<String>)> {
    let f = fs::File::open(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    read_xy(std::io::BufReader::new(f))
}

pub fn write_xy<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y"]).map_err(csv_err)?;
    for (x, y) in data.x().iter().zip(data.y()) {
        w.write_record([fmt_num(*x), fmt_num(*y)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Write `bytes` to a sibling temporary file, then rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Input(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let res = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

/// Serialized fit: everything needed to evaluate the curves again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub model: ModelKind,
    pub k: usize,
    pub kernel: Option<KernelSpec>,
    pub x_range: (f64, f64),
    pub params: ModelParams,
    pub loglik: f64,
    pub complete_loglik: f64,
    pub df: f64,
    pub criteria: Criteria,
    pub iterations: usize,
    pub converged: bool,
}

impl ModelFile {
    pub fn from_fit(out: &FitOutput, data: &Dataset, kernel: Option<KernelSpec>) -> Self {
        ModelFile {
            schema_version: SCHEMA_VERSION,
            model: out.report.model,
            k: out.report.k,
            kernel,
            x_range: data.x_range(),
            params: out.params.clone(),
            loglik: out.report.loglik,
            complete_loglik: out.report.complete_loglik,
            df: out.report.df,
            criteria: out.report.criteria,
            iterations: out.report.iterations,
            converged: out.report.converged,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ModelFile = serde_json::from_str(s).map_err(|e| Error::Input(format!("model file: {e}")))?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::Input(format!("unsupported schema_version {}", m.schema_version)));
        }
        m.params.validate().map_err(|e| Error::Input(format!("model file: {e}")))?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }
}

/// Columns `x,y,label,gamma_1..gamma_K,lambda_at_label,outlier_flag`.
pub fn write_classification<W: Write>(data: &Dataset, out: &FitOutput, dst: W) -> Result<()> {
    let post = &out.posterior;
    let labels = map_classify(post);
    let lam = lambda_at_labels(post, &labels);
    let flags = flag_outliers(post, &labels, OUTLIER_THRESHOLD);
    let mut w = csv::Writer::from_writer(dst);
    let mut header = vec!["x".to_string(), "y".into(), "label".into()];
    header.extend((1..=post.k()).map(|k| format!("gamma_{k}")));
    header.extend(["lambda_at_label".to_string(), "outlier_flag".into()]);
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..data.len() {
        let mut row = vec![fmt_num(data.x()[i]), fmt_num(data.y()[i]), labels[i].to_string()];
        row.extend(post.gamma_row(i).iter().map(|&g| fmt_num(g)));
        row.push(fmt_num(lam[i]));
        row.push(flags[i].to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One long-format curve value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub component: usize,
    pub quantity: &'static str,
    pub value: f64,
}

/// Evaluate fitted curves at `points` equispaced locations over `x_range`, merged
/// with the grid nodes. Regression curves are always emitted; mixing proportions
/// and variances only when they vary with `x`.
pub fn curve_points(model: &ModelFile, points: usize) -> Result<Vec<CurvePoint>> {
    if points < 2 {
        return Err(Error::Input("need at least 2 evaluation points".into()));
    }
    let (lo, hi) = model.x_range;
    let mut xs: Vec<f64> = (0..points).map(|j| lo + (hi - lo) * j as f64 / (points - 1) as f64).collect();
    if let Some(g) = model.params.grid() {
        xs.extend_from_slice(g.points());
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let p = &model.params;
    let mut rows = Vec::new();
    for &x in &xs {
        let pi = p.pi_is_curve().then(|| p.pi_at(x));
        for k in 0..p.k() {
            rows.push(CurvePoint { x, component: k + 1, quantity: "mean", value: p.mean_at(k, x) });
            if let Some(pi) = &pi {
                rows.push(CurvePoint { x, component: k + 1, quantity: "pi", value: pi[k] });
            }
            if p.var_is_curve() {
                rows.push(CurvePoint { x, component: k + 1, quantity: "var", value: p.var_at(k, x) });
            }
        }
    }
    Ok(rows)
}

pub fn write_curves<W: Write>(rows: &[CurvePoint], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(["x", "component", "quantity", "value"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([fmt_num(r.x), r.component.to_string(), r.quantity.to_string(), fmt_num(r.value)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_with_extra_columns() {
        let (d, w) = read_xy("id,x,y\n1,0.5,2\n2,1.5,-3e-1\n".as_bytes()).unwrap();
        assert_eq!(d.x(), &[0.5, 1.5]);
        assert_eq!(d.y(), &[2.0, -0.3]);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn malformed_row_reports_line() {
        let e = read_xy("x,y\n1,2\n3,abc\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert_eq!(e.exit_code(), 2);
        assert!(read_xy("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_xy("x,y\n".as_bytes()).is_err());
        assert!(read_xy("x,y\n1,NaN\n".as_bytes()).is_err());
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let d = Dataset::new(vec![0.1, 1.0 / 3.0, -2e-300], vec![std::f64::consts::PI, 1e300, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_xy(&d, &mut buf).unwrap();
        assert_eq!(read_xy(buf.as_slice()).unwrap().0, d);
    }
}
