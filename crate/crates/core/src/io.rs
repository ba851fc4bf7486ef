//! File formats shared with other tools.
//!
//! * Signal: CSV `t,re,im`, one row per sample.
//! * Time-frequency array: CSV `x,omega,re,im,abs`, row-major in `x`.
//! * Mask: headerless CSV of `0`/`1`, `n` rows of `n` values, row `k` at `x_k`.
//!
//! Each file carries a sidecar JSON `{"n": .., "dx": ..}` at the same path
//! with the extension replaced by `.json`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::signal::Signal;
use crate::tfarray::TfArray;

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_sidecar(path: &Path, grid: &TimeGrid) -> Result<()> {
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(grid)?;
    fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
}

pub fn read_sidecar(path: &Path) -> Result<TimeGrid> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: side,
        line: e.line(),
        msg: e.to_string(),
    })
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("{other:?}"),
        },
    }
}

fn parse_f64(path: &Path, line: usize, field: Option<&str>, name: &str) -> Result<f64> {
    let raw = field.ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("missing column `{name}`"),
    })?;
    raw.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("column `{name}`: cannot parse {raw:?} as a number"),
    })
}

pub fn write_signal(path: &Path, f: &Signal) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["t", "re", "im"]).map_err(|e| csv_err(path, e))?;
    let grid = f.grid();
    for (k, v) in f.samples().iter().enumerate() {
        w.write_record([grid.t(k).to_string(), v.re.to_string(), v.im.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    write_sidecar(path, grid)
}

pub fn read_signal(path: &Path) -> Result<Signal> {
    let grid = read_sidecar(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names != ["t", "re", "im"] {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected header t,re,im, found {}", names.join(",")),
        });
    }
    let mut samples = Vec::with_capacity(grid.n());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let t = parse_f64(path, line, rec.get(0), "t")?;
        let re = parse_f64(path, line, rec.get(1), "re")?;
        let im = parse_f64(path, line, rec.get(2), "im")?;
        let k = samples.len();
        if k < grid.n() {
            let expect = grid.t(k);
            if (t - expect).abs() > 1e-9 * (1.0 + expect.abs()) {
                return Err(Error::Schema(format!(
                    "{}:{line}: time {t} does not match grid point {expect}",
                    path.display()
                )));
            }
        }
        samples.push(Complex64::new(re, im));
    }
    if samples.len() != grid.n() {
        return Err(Error::Schema(format!(
            "{}: sidecar declares n = {} but the file has {} samples",
            path.display(),
            grid.n(),
            samples.len()
        )));
    }
    Signal::new(grid, samples)
}

pub fn write_tfarray(path: &Path, arr: &TfArray) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["x", "omega", "re", "im", "abs"])
        .map_err(|e| csv_err(path, e))?;
    let grid = arr.grid();
    let n = grid.n();
    for k in 0..n {
        let x = grid.t(k).to_string();
        for l in 0..n {
            let v = arr.get(k, l);
            w.write_record([
                x.clone(),
                grid.omega(l).to_string(),
                v.re.to_string(),
                v.im.to_string(),
                v.norm().to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    write_sidecar(path, grid)
}

pub fn read_tfarray(path: &Path) -> Result<TfArray> {
    let grid = read_sidecar(path)?;
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut values = Vec::with_capacity(grid.n() * grid.n());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let re = parse_f64(path, line, rec.get(2), "re")?;
        let im = parse_f64(path, line, rec.get(3), "im")?;
        values.push(Complex64::new(re, im));
    }
    if values.len() != grid.n() * grid.n() {
        return Err(Error::Schema(format!(
            "{}: expected {} cells, found {}",
            path.display(),
            grid.n() * grid.n(),
            values.len()
        )));
    }
    TfArray::new(grid, values)
}

pub fn write_mask(path: &Path, grid: &TimeGrid, cells: &[bool]) -> Result<()> {
    let n = grid.n();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    for k in 0..n {
        w.write_record(cells[k * n..(k + 1) * n].iter().map(|&b| if b { "1" } else { "0" }))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    write_sidecar(path, grid)
}

pub fn read_mask(path: &Path) -> Result<(TimeGrid, Vec<bool>)> {
    let grid = read_sidecar(path)?;
    let n = grid.n();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut cells = Vec::with_capacity(n * n);
    let mut rows = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != n {
            return Err(Error::Schema(format!(
                "{}:{line}: expected {n} values per row, found {}",
                path.display(),
                rec.len()
            )));
        }
        for field in rec.iter() {
            cells.push(match field.trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        msg: format!("mask entries must be 0 or 1, found {other:?}"),
                    })
                }
            });
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Schema(format!(
            "{}: expected {n} rows, found {rows}",
            path.display()
        )));
    }
    Ok((grid, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{seeded_rng, white_noise};

    #[test]
    fn signal_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sig.csv");
        let g = TimeGrid::new(32, 0.3).unwrap();
        let f = white_noise(g, &mut seeded_rng(4));
        write_signal(&p, &f).unwrap();
        assert!(dir.path().join("sig.json").exists());
        assert_eq!(read_signal(&p).unwrap(), f);
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        write_sidecar(&p, &TimeGrid::new(2, 1.0).unwrap()).unwrap();
        fs::write(&p, "t,re,im\n-1,0.5,0\n0,abc,0\n").unwrap();
        match read_signal(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sidecar_length_mismatch_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("short.csv");
        write_sidecar(&p, &TimeGrid::new(4, 1.0).unwrap()).unwrap();
        fs::write(&p, "t,re,im\n-2,1,0\n-1,1,0\n").unwrap();
        assert!(matches!(read_signal(&p), Err(Error::Schema(_))));
    }

    #[test]
    fn mask_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mask.csv");
        let g = TimeGrid::new(4, 0.5).unwrap();
        let cells: Vec<bool> = (0..16).map(|i| i % 3 == 0).collect();
        write_mask(&p, &g, &cells).unwrap();
        let (g2, c2) = read_mask(&p).unwrap();
        assert!(g2.matches(&g));
        assert_eq!(c2, cells);
    }
}
