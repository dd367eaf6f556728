//! CSV payloads and summary files.

use std::fs;
use std::path::{Path, PathBuf};

use spinamp_core::fano::FanoFit;
use spinamp_core::response::linspace;
use spinamp_core::{AxisKind, Complex64, ResponseCurve};

use crate::config::{from_hz, to_hz};
use crate::error::CliError;

/// Fixed-width scientific text with 17 significant digits; round-trips f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table assembled in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|x| num(*x)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

/// Files written by one command; removed again unless committed.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io {
            path: path.clone(),
            message: e.to_string(),
        })?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn column(header: &[String], name: &str, path: &Path) -> Result<usize, CliError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("missing column '{name}'"),
        })
}

/// Reads a frequency response written by `sweep-freq` back into a curve.
pub fn read_frequency_curve(path: &Path) -> Result<ResponseCurve, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let (cf, cr, ci) = (
        column(&header, "freq_hz", path)?,
        column(&header, "readout_re", path)?,
        column(&header, "readout_im", path)?,
    );
    let mut axis = Vec::new();
    let mut values = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        let field = |c: usize| -> Result<f64, CliError> {
            rec.get(c)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("column {} is not a finite number", header[c]),
                })
        };
        axis.push(from_hz(field(cf)?));
        values.push(Complex64::new(field(cr)?, field(ci)?));
    }
    Ok(ResponseCurve::from_readout(
        AxisKind::Frequency,
        axis,
        values,
    )?)
}

/// Power samples and, with a fit, the fitted profile: one table on the curve
/// axis and, for a fit, a second on a 10× denser grid that also contains the
/// fitted peak and trough when they fall inside the axis range.
pub fn plot_tables(
    curve: &ResponseCurve,
    fit: Option<&FanoFit>,
) -> Result<(Table, Option<Table>), CliError> {
    if curve.is_empty() {
        return Err(CliError::Config(
            "cannot emit plot data for an empty curve".into(),
        ));
    }
    let powers = curve.powers();
    let Some(fit) = fit else {
        let mut t = Table::new(&["freq_hz", "power"]);
        for (x, p) in curve.axis.iter().zip(&powers) {
            t.push_nums(&[to_hz(*x), *p]);
        }
        return Ok((t, None));
    };
    let prof = fit.profile;
    let mut t = Table::new(&["freq_hz", "power", "fit_power", "residual"]);
    for (x, p) in curve.axis.iter().zip(&powers) {
        let f = prof.eval(*x);
        t.push_nums(&[to_hz(*x), *p, f, p - f]);
    }
    let (lo, hi) = curve
        .axis
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
            (a.min(*x), b.max(*x))
        });
    let mut dense = linspace(lo, hi, 10 * curve.len());
    for x in [Some(prof.trough()), prof.peak()].into_iter().flatten() {
        if x > lo && x < hi {
            dense.push(x);
        }
    }
    dense.sort_by(f64::total_cmp);
    dense.dedup();
    let mut d = Table::new(&["freq_hz", "fit_power"]);
    for x in dense {
        d.push_nums(&[to_hz(x), prof.eval(x)]);
    }
    Ok((t, Some(d)))
}

/// Writes plot data for `curve` (and `fit`) as `<stem>.csv` and
/// `<stem>_dense.csv`.
pub fn emit_plotdata(
    outputs: &mut Outputs,
    stem: &str,
    curve: &ResponseCurve,
    fit: Option<&FanoFit>,
) -> Result<Vec<PathBuf>, CliError> {
    let (main, dense) = plot_tables(curve, fit)?;
    let mut paths = vec![outputs.write(&format!("{stem}.csv"), &main.to_csv())?];
    if let Some(d) = dense {
        paths.push(outputs.write(&format!("{stem}_dense.csv"), &d.to_csv())?);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, f64::MAX, -0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn empty_curve_rejected() {
        let c = ResponseCurve::from_readout(AxisKind::Frequency, vec![], vec![]).unwrap();
        assert!(plot_tables(&c, None).is_err());
    }

    #[test]
    fn outputs_removed_unless_committed() {
        let dir = tempfile::tempdir().unwrap();
        let path = {
            let mut o = Outputs::new(dir.path()).unwrap();
            o.write("x.csv", "a\n").unwrap()
        };
        assert!(!path.exists());
        let mut o = Outputs::new(dir.path()).unwrap();
        let p = o.write("y.csv", "a\n").unwrap();
        o.commit();
        assert!(p.exists());
    }
}
