//! CSV and JSON file formats.
//!
//! Numbers are written with the shortest representation that parses back to
//! the same `f64`, always with a `.` decimal separator.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;

use crate::datagen::CensoredObs;
use crate::error::{Error, Result};
use crate::estimators::Sample2D;
use crate::geom::Point2;
use crate::grid::GridSpec;

fn parse_field(record: &csv::StringRecord, idx: usize, name: &str, row: u64) -> Result<f64> {
    let raw = record
        .get(idx)
        .ok_or_else(|| Error::Parse { row, message: format!("missing column '{name}'") })?;
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::Parse { row, message: format!("'{raw}' in column '{name}' is not a number") })?;
    if !v.is_finite() {
        return Err(Error::Parse { row, message: format!("non-finite value in column '{name}'") });
    }
    Ok(v)
}

/// Reads the named columns of a headed CSV. Rows are numbered as file lines.
fn read_columns<R: Read, const K: usize>(input: R, names: [&str; K]) -> Result<Vec<[f64; K]>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::NoData);
    }
    let mut idx = [0usize; K];
    for (slot, name) in idx.iter_mut().zip(names) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Parse { row: 1, message: format!("header lacks column '{name}'") })?;
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line());
            Error::Parse { row, message: e.to_string() }
        })?;
        let row = record.position().map_or(0, |p| p.line());
        let mut vals = [0.0; K];
        for k in 0..K {
            vals[k] = parse_field(&record, idx[k], names[k], row)?;
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::NoData);
    }
    Ok(rows)
}

/// Reads an `x1,x2` CSV of observations.
pub fn read_sample_from<R: Read>(input: R) -> Result<Sample2D> {
    let rows = read_columns(input, ["x1", "x2"])?;
    Sample2D::new(rows.into_iter().map(|[a, b]| Point2::new(a, b)).collect())
}

pub fn read_sample(path: &Path) -> Result<Sample2D> {
    read_sample_from(File::open(path)?)
}

/// Reads a `t1,t2,delta` CSV of censored observations.
pub fn read_censored_from<R: Read>(input: R) -> Result<Vec<CensoredObs>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr.headers()?.clone();
    let pos = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Parse { row: 1, message: format!("header lacks column '{name}'") })
    };
    let (i1, i2, id) = (pos("t1")?, pos("t2")?, pos("delta")?);
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line());
            Error::Parse { row, message: e.to_string() }
        })?;
        let row = record.position().map_or(0, |p| p.line());
        let t = Point2::new(parse_field(&record, i1, "t1", row)?, parse_field(&record, i2, "t2", row)?);
        let raw = record.get(id).unwrap_or("").trim();
        let delta: u8 = raw
            .parse()
            .map_err(|_| Error::Parse { row, message: format!("delta '{raw}' is not in 1..=4") })?;
        let obs = CensoredObs::new(t, delta).map_err(|e| Error::Parse { row, message: e.to_string() })?;
        out.push(obs);
    }
    if out.is_empty() {
        return Err(Error::NoData);
    }
    Ok(out)
}

pub fn read_censored(path: &Path) -> Result<Vec<CensoredObs>> {
    read_censored_from(File::open(path)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes `x1,x2` rows, with `y1,y2` appended when `truth` is given.
pub fn write_points_to<W: Write>(out: W, observed: &[Point2], truth: Option<&[Point2]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match truth {
        Some(ys) => {
            if ys.len() != observed.len() {
                return Err(Error::InvalidArgument("truth and observations differ in length".into()));
            }
            w.write_record(["x1", "x2", "y1", "y2"])?;
            for (x, y) in observed.iter().zip(ys) {
                w.write_record([x.x1, x.x2, y.x1, y.x2].map(|v| v.to_string()))?;
            }
        }
        None => {
            w.write_record(["x1", "x2"])?;
            for x in observed {
                w.write_record([x.x1, x.x2].map(|v| v.to_string()))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_points(path: &Path, observed: &[Point2], truth: Option<&[Point2]>) -> Result<()> {
    write_points_to(create(path)?, observed, truth)
}

/// Long-format `x1,x2,value` over all grid nodes, `x1` varying slowest.
pub fn write_grid_to<W: Write>(out: W, grid: &GridSpec, values: &Array2<f64>, clip_negative: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x1", "x2", "value"])?;
    for ((a, b), &v) in values.indexed_iter() {
        let v = if clip_negative { v.max(0.0) } else { v };
        w.write_record([grid.node(a), grid.node(b), v].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_grid(path: &Path, grid: &GridSpec, values: &Array2<f64>, clip_negative: bool) -> Result<()> {
    write_grid_to(create(path)?, grid, values, clip_negative)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_round_trip_exactly() {
        let pts = vec![
            Point2::new(0.1 + 0.2, 1.0 / 3.0),
            Point2::new(std::f64::consts::E, 1e-300),
            Point2::new(-0.0, 123_456_789.123_456_79),
        ];
        let mut buf = Vec::new();
        write_points_to(&mut buf, &pts, None).unwrap();
        let back = read_sample_from(buf.as_slice()).unwrap();
        assert_eq!(back.points(), pts.as_slice());
    }

    #[test]
    fn truth_columns() {
        let xs = vec![Point2::new(1.5, 1.25)];
        let ys = vec![Point2::new(1.0, 0.75)];
        let mut buf = Vec::new();
        write_points_to(&mut buf, &xs, Some(&ys)).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x1,x2,y1,y2\n1.5,1.25,1,0.75\n");
    }

    #[test]
    fn empty_input_is_no_data() {
        assert!(matches!(read_sample_from("".as_bytes()), Err(Error::NoData)));
        assert!(matches!(read_sample_from("x1,x2\n".as_bytes()), Err(Error::NoData)));
    }

    #[test]
    fn parse_errors_name_the_row() {
        let err = read_sample_from("x1,x2\n1,2\n3,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
        assert!(err.to_string().starts_with("row 3:"));
        let err = read_sample_from("a,b\n1,2\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("x1"));
    }

    #[test]
    fn columns_found_by_name() {
        let s = read_sample_from("x2,x1,y1\n2,1,9\n".as_bytes()).unwrap();
        assert_eq!(s.points()[0], Point2::new(1.0, 2.0));
    }

    #[test]
    fn censored_rows() {
        let rows = read_censored_from("t1,t2,delta\n0.3,0.4,1\n0.3,0.4,3\n".as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].delta, 3);
        let err = read_censored_from("t1,t2,delta\n0.3,0.4,1\n0.3,0.4,5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
    }

    #[test]
    fn grid_long_format() {
        let g = GridSpec::new(0.0, 1.0, 2).unwrap();
        let mut vals = Array2::zeros((3, 3));
        vals[[0, 1]] = -0.25;
        vals[[2, 2]] = 1.5;
        let mut buf = Vec::new();
        write_grid_to(&mut buf, &g, &vals, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[2], "0,0.5,-0.25");
        assert_eq!(lines[9], "1,1,1.5");
        let mut buf = Vec::new();
        write_grid_to(&mut buf, &g, &vals, true).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("0,0.5,0\n"));
    }
}
