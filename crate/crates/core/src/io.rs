//! Dataset directories and decimal formatting.
//!
//! A dataset directory holds `meta.json`, `X.csv` (n rows of p columns) and
//! `Y.csv` (n rows). Support indices in `meta.json` are 1-based.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MixedDataset, NoiseProfile, SparseSignal};

/// `printf("%.17g")`: shortest fixed or scientific form with 17 significant
/// digits, trailing zeros removed. Round-trips every finite double.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), sign, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0');
    t.trim_end_matches('.').to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub p: usize,
    pub s: usize,
    pub n1: usize,
    pub n2: usize,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub seed: u64,
    /// 1-based, ascending.
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `meta.json`, `X.csv` and `Y.csv` into `dir`, creating it if needed.
pub fn write_dataset(dataset: &MixedDataset, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (support, values) = match &dataset.signal_truth {
        Some(sig) => (sig.support().iter().map(|j| j + 1).collect(), sig.values().to_vec()),
        None => (Vec::new(), Vec::new()),
    };
    let meta = DatasetMeta {
        p: dataset.p(),
        s: support.len(),
        n1: dataset.noise.n1,
        n2: dataset.noise.n2,
        sigma1_sq: dataset.noise.sigma1_sq,
        sigma2_sq: dataset.noise.sigma2_sq,
        seed: dataset.seed,
        support,
        values,
    };
    let meta_path = dir.join("meta.json");
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Data(e.to_string()))?;
    write_file(&meta_path, &(json + "\n"))?;

    let mut x_csv = String::new();
    for i in 0..dataset.n() {
        let row: Vec<String> = dataset.x.row(i).iter().map(|&v| format_g17(v)).collect();
        x_csv.push_str(&row.join(","));
        x_csv.push('\n');
    }
    let x_path = dir.join("X.csv");
    write_file(&x_path, &x_csv)?;

    let y_csv: String = dataset.y.iter().map(|&v| format_g17(v) + "\n").collect();
    let y_path = dir.join("Y.csv");
    write_file(&y_path, &y_csv)?;
    Ok(vec![meta_path, x_path, y_path])
}

fn parse_csv(path: &Path) -> Result<(usize, Vec<Vec<f64>>)> {
    let text = read_file(path)?;
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map_err(|_| {
                    Error::data(format!("{}:{}: cannot parse {field:?}", path.display(), line_no + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let width = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != width) {
        return Err(Error::data(format!(
            "{}: row {} has {} columns, expected {width}",
            path.display(),
            bad + 1,
            rows[bad].len()
        )));
    }
    Ok((width, rows))
}

/// Reads a dataset directory written by [`write_dataset`].
pub fn read_dataset(dir: &Path) -> Result<MixedDataset> {
    let meta_path = dir.join("meta.json");
    let meta: DatasetMeta = serde_json::from_str(&read_file(&meta_path)?)
        .map_err(|e| Error::data(format!("{}: {e}", meta_path.display())))?;

    let (p, x_rows) = parse_csv(&dir.join("X.csv"))?;
    let (y_width, y_rows) = parse_csv(&dir.join("Y.csv"))?;
    let n = meta.n1 + meta.n2;
    if x_rows.len() != n || y_rows.len() != n || p != meta.p || (n > 0 && y_width != 1) {
        return Err(Error::data(format!(
            "{}: expected X {n} x {} and Y {n} x 1, found X {} x {p} and Y {} x {y_width}",
            dir.display(),
            meta.p,
            x_rows.len(),
            y_rows.len()
        )));
    }
    if meta.support.len() != meta.values.len() || meta.support.len() != meta.s {
        return Err(Error::data("meta.json support, values and s disagree"));
    }
    if meta.support.contains(&0) {
        return Err(Error::data("meta.json support indices are 1-based"));
    }

    let x = DMatrix::from_row_iterator(n, p, x_rows.into_iter().flatten());
    let y = DVector::from_iterator(n, y_rows.into_iter().flatten());
    let noise = NoiseProfile::new(meta.n1, meta.n2, meta.sigma1_sq, meta.sigma2_sq)?;
    let signal = if meta.support.is_empty() {
        None
    } else {
        Some(SparseSignal::new(
            p,
            meta.support.iter().map(|j| j - 1).zip(meta.values.iter().copied()),
        )?)
    };
    MixedDataset::from_parts(x, y, noise, signal, meta.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_dataset;

    #[test]
    fn g17_matches_printf() {
        assert_eq!(format_g17(0.0), "0");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(218.0), "218");
        assert_eq!(format_g17(0.5), "0.5");
        assert_eq!(format_g17(0.7), "0.69999999999999996");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(-2.5e-7), "-2.4999999999999999e-07");
        assert_eq!(format_g17(f64::NAN), "nan");
    }

    #[test]
    fn g17_round_trips() {
        let mut state = 99u64;
        for _ in 0..10_000 {
            state = crate::rng::mix64(state.wrapping_add(crate::rng::GOLDEN_GAMMA));
            let v = f64::from_bits(state);
            if v.is_finite() {
                assert_eq!(format_g17(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
            }
        }
    }

    #[test]
    fn dataset_round_trip() {
        let sig = SparseSignal::new(7, [(1, 1.5), (4, -0.25)]).unwrap();
        let noise = NoiseProfile::new(3, 5, 0.2, 1.1).unwrap();
        let ds = generate_dataset(&sig, &noise, 77).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_dataset(&ds, dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        let meta = fs::read_to_string(dir.path().join("meta.json")).unwrap();
        assert!(meta.contains("\"support\": [\n    2,\n    5\n  ]"), "{meta}");
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.y, ds.y);
        assert_eq!(back.noise, ds.noise);
        assert_eq!(back.signal_truth, ds.signal_truth);
        assert_eq!(back.seed, 77);
    }

    #[test]
    fn malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Io { .. })));
        let sig = SparseSignal::binary(3, &[0]).unwrap();
        let ds = generate_dataset(&sig, &NoiseProfile::new(2, 2, 0.1, 0.1).unwrap(), 1).unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        fs::write(dir.path().join("Y.csv"), "1\n2\nx\n4\n").unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Data(_))));
        fs::write(dir.path().join("Y.csv"), "1\n2\n3\n").unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Data(_))));
    }
}
