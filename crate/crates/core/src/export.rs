//! File formats: `sigop-matrix/1` JSON, spectrum CSV, JSON-lines reports and
//! CSV summaries. Floats are written with 17 significant digits.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{QuadratureSpec, C64};
use crate::sigop::{self, Frame, OperatorMatrix};
use crate::solutions::Basis;
use crate::verify::CheckReport;

pub const MATRIX_SCHEMA: &str = "sigop-matrix/1";
pub const SPECTRUM_SCHEMA: &str = "sigop-spectrum/1";

/// JSON formatter printing every float as `{:.16e}`.
#[derive(Debug, Default, Clone, Copy)]
pub struct SigFigs;

impl serde_json::ser::Formatter for SigFigs {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Compact JSON with 17-significant-digit floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigs);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Formats a float the same way as the JSON writer.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ComplexMatrix {
    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        let rows = |f: fn(&C64) -> f64| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect();
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        let n = self.re.len();
        let m = self.re.first().map_or(0, Vec::len);
        let shape_ok = self.im.len() == n && self.re.iter().chain(&self.im).all(|r| r.len() == m);
        if !shape_ok {
            return Err(Error::Config("ragged or mismatched re/im arrays".into()));
        }
        Ok(DMatrix::from_fn(n, m, |i, j| C64::new(self.re[i][j], self.im[i][j])))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub schema: String,
    pub model: String,
    pub mass: f64,
    pub lifetime: f64,
    pub truncation: usize,
    /// `signature`, or the symmetry / Hamiltonian name.
    pub operator: String,
    pub basis_labels: Vec<String>,
    pub gram: ComplexMatrix,
    pub matrix: ComplexMatrix,
    pub quad: QuadratureSpec,
    pub content_hash: String,
}

impl MatrixFile {
    pub fn new(basis: &Basis, operator: &str, op: &OperatorMatrix, content_hash: String) -> Self {
        let model = basis.model();
        Self {
            schema: MATRIX_SCHEMA.into(),
            model: model.kind().to_string(),
            mass: model.mass(),
            lifetime: model.lifetime(),
            truncation: basis.truncation(),
            operator: operator.into(),
            basis_labels: basis.labels(),
            gram: ComplexMatrix::from_matrix(basis.gram()),
            matrix: ComplexMatrix::from_matrix(op.matrix()),
            quad: *basis.quad(),
            content_hash,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = to_json(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses and validates schema and dimensions.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let schema = value.get("schema").and_then(|s| s.as_str()).unwrap_or("<missing>");
        if schema != MATRIX_SCHEMA {
            return Err(Error::Config(format!("schema `{schema}`, expected `{MATRIX_SCHEMA}`")));
        }
        let file: MatrixFile = serde_json::from_value(value)?;
        let n = file.basis_labels.len();
        for (what, m) in [("gram", &file.gram), ("matrix", &file.matrix)] {
            let mat = m.to_matrix()?;
            if mat.nrows() != n || mat.ncols() != n {
                return Err(Error::Config(format!("{what} is {}×{}, basis has {n} labels", mat.nrows(), mat.ncols())));
            }
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Rebuilds the operator with its Gram-aware frame.
    pub fn operator(&self) -> Result<OperatorMatrix> {
        let frame = Arc::new(Frame::new(self.gram.to_matrix()?, format!("file:{}", self.content_hash))?);
        Ok(OperatorMatrix::new(self.matrix.to_matrix()?, frame))
    }
}

/// Ascending eigenvalues with a metadata header; each row names the basis
/// mode carrying the largest share of the eigenvector's norm.
pub fn spectrum_csv(file: &MatrixFile) -> Result<String> {
    let op = file.operator()?;
    let dec = sigop::spectral_decompose(&op)?;
    let g = op.frame().gram().clone();
    let mut out = String::new();
    out.push_str(&format!("# schema={SPECTRUM_SCHEMA}\n"));
    out.push_str(&format!(
        "# model={} mass={} lifetime={} truncation={} operator={} dim={} content_hash={}\n",
        file.model,
        fmt_f64(file.mass),
        fmt_f64(file.lifetime),
        file.truncation,
        file.operator,
        file.basis_labels.len(),
        file.content_hash
    ));
    out.push_str("index,eigenvalue,dominant_mode\n");
    for (i, &lambda) in dec.eigenvalues().iter().enumerate() {
        let v = dec.eigenvectors().column(i);
        let gv = &g * v;
        let dominant = (0..v.len())
            .max_by(|&a, &b| (v[a].conj() * gv[a]).re.total_cmp(&(v[b].conj() * gv[b]).re))
            .map_or("", |j| file.basis_labels[j].as_str());
        out.push_str(&format!("{i},{},{dominant}\n", fmt_f64(lambda)));
    }
    Ok(out)
}

/// One JSON object per line.
pub fn reports_jsonl(reports: &[CheckReport]) -> Result<String> {
    let mut out = String::new();
    for r in reports {
        out.push_str(&to_json(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_reports_jsonl(text: &str) -> Result<Vec<CheckReport>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

pub fn reports_csv(reports: &[CheckReport], config_hash: &str) -> String {
    let mut out = format!("# config_hash={config_hash}\nname,value,tol,pass\n");
    for r in reports {
        out.push_str(&format!("{},{},{},{}\n", r.name, fmt_f64(r.value), fmt_f64(r.tol), r.pass));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{QuadratureSpec, SpacetimeModel};

    #[test]
    fn floats_keep_seventeen_digits() {
        let s = to_json(&vec![0.1f64, -1.0 / 3.0, 1e-300]).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,-3.3333333333333331e-1,1.0000000000000000e-300]");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, -1.0 / 3.0, 1e-300]);
        assert_eq!(to_json(&f64::NAN).unwrap(), "null");
    }

    #[test]
    fn matrix_file_validates() {
        let basis = Basis::drum(1, &QuadratureSpec::for_truncation(1)).unwrap();
        let s = sigop::assemble_signature(&basis, basis.quad()).unwrap();
        let file = MatrixFile::new(&basis, "signature", &s, "abc".into());
        let text = file.to_json().unwrap();
        let back = MatrixFile::from_json(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.operator().unwrap().matrix(), s.matrix());

        let wrong = text.replace(MATRIX_SCHEMA, "sigop-matrix/0");
        assert_eq!(MatrixFile::from_json(&wrong).unwrap_err().exit_code(), 1);
        let mut short = file.clone();
        short.basis_labels.pop();
        assert!(MatrixFile::from_json(&short.to_json().unwrap()).is_err());
        let _ = SpacetimeModel::drum();
    }

    #[test]
    fn reports_survive_nan_tolerances() {
        let reports = vec![
            CheckReport::at_most("a", "x", 1e-12, 1e-6),
            CheckReport::report_only("b", "y", 3.5),
        ];
        let back = parse_reports_jsonl(&reports_jsonl(&reports).unwrap()).unwrap();
        assert_eq!((&back[0].name, back[0].value, back[0].tol, back[0].pass), (&reports[0].name, 1e-12, 1e-6, true));
        assert_eq!(back[0].context, reports[0].context);
        assert!(back[1].tol.is_nan() && back[1].pass && back[1].value == 3.5);
    }

    #[test]
    fn spectrum_of_zero_operator() {
        let basis = Basis::drum(1, &QuadratureSpec::for_truncation(1)).unwrap();
        let zero = OperatorMatrix::zero(basis.frame());
        let csv = spectrum_csv(&MatrixFile::new(&basis, "zero", &zero, "z".into())).unwrap();
        let values: Vec<f64> = csv
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("index"))
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(values, vec![0.0; 4]);
    }
}
