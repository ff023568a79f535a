//! File loaders and result writers.
//!
//! Inputs are UTF-8 text; blank lines and lines starting with `#` are
//! skipped. Outputs use LF line endings.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iir::{Detection, IirRecord, Side};
use crate::monte_carlo::CurvePoint;
use crate::oscillator::{ClusterPartition, PointSet};
use crate::Sample;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// Commas, semicolons, tabs and spaces all separate values.
    #[default]
    Auto,
    Csv,
    Whitespace,
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn tokens(line: &str, format: InputFormat) -> Vec<&str> {
    match format {
        InputFormat::Csv => line.split(',').map(str::trim).collect(),
        InputFormat::Whitespace => line.split_whitespace().collect(),
        InputFormat::Auto => line
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect(),
    }
}

fn number(tok: &str, path: &Path, line: usize) -> Result<f64> {
    let value: f64 = tok.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("cannot parse `{tok}` as a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("non-finite value `{tok}`"),
        });
    }
    Ok(value)
}

pub fn parse_univariate(text: &str, path: &Path, format: InputFormat) -> Result<Sample> {
    let mut values = Vec::new();
    for (line, content) in data_lines(text) {
        for tok in tokens(content, format) {
            values.push(number(tok, path, line)?);
        }
    }
    if values.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Sample::new(values, path.display().to_string())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads one or more numbers per line into a sorted sample labelled by path.
pub fn load_univariate(path: impl AsRef<Path>, format: InputFormat) -> Result<Sample> {
    let path = path.as_ref();
    parse_univariate(&read(path)?, path, format)
}

/// Two numeric columns per row, comma or whitespace delimited.
pub fn parse_points(text: &str, path: &Path) -> Result<PointSet> {
    let mut points = Vec::new();
    for (line, content) in data_lines(text) {
        let toks = tokens(content, InputFormat::Auto);
        if toks.len() != 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected 2 columns, found {}", toks.len()),
            });
        }
        points.push(vec![number(toks[0], path, line)?, number(toks[1], path, line)?]);
    }
    if points.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    PointSet::new(points)
}

pub fn load_points2d(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    parse_points(&read(path)?, path)
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

#[derive(Serialize)]
struct OutlierRow<'a> {
    method: &'a str,
    index: usize,
    value: f64,
}

/// One row per flagged value.
pub fn write_detection_csv<W: Write>(det: &Detection, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    if det.outlier_indices.is_empty() {
        w.write_record(["method", "index", "value"])?;
    }
    for (&index, &value) in det.outlier_indices.iter().zip(&det.outlier_values) {
        w.serialize(OutlierRow {
            method: det.method.name(),
            index,
            value,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TraceRow {
    index: usize,
    side: Side,
    candidate: f64,
    gap: f64,
    max_prev: f64,
    er: f64,
    ihr: Option<f64>,
    iir: f64,
    accepted: bool,
}

pub fn write_trace_csv<W: Write>(trace: &[IirRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    if trace.is_empty() {
        w.write_record([
            "index", "side", "candidate", "gap", "max_prev", "er", "ihr", "iir", "accepted",
        ])?;
    }
    for r in trace {
        w.serialize(TraceRow {
            index: r.index,
            side: r.side,
            candidate: r.candidate,
            gap: r.gap,
            max_prev: r.max_prev,
            er: r.er,
            ihr: r.ihr,
            iir: r.iir,
            accepted: r.accepted,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: x, method, detected_pct, stderr, recall_pct.
pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["x", "method", "detected_pct", "stderr", "recall_pct"])?;
    for p in curve {
        w.write_record([
            p.x.to_string(),
            p.method.to_string(),
            format!("{:.6}", p.detected_pct),
            format!("{:.6}", p.stderr),
            p.recall_pct.map(|r| format!("{r:.6}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per point: id, cluster (empty when unassigned), silent.
pub fn write_partition_csv<W: Write>(part: &ClusterPartition, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["id", "cluster", "silent"])?;
    for (i, label) in part.labels.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            label.map(|c| c.to_string()).unwrap_or_default(),
            part.runs[i].silent.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iir::{detect_two_sided, Sensitivity};

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn univariate_parsing() {
        let s = parse_univariate("1\n2\n3\n", p(), InputFormat::Auto).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        let s = parse_univariate("# header\n3, 1\n\n2 5\n", p(), InputFormat::Auto).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0, 5.0]);
        let s = parse_univariate("3\t1 2\n", p(), InputFormat::Whitespace).unwrap();
        assert_eq!(s.len(), 3);
        match parse_univariate("1\n2\nabc\n", p(), InputFormat::Auto) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_univariate("1\ninf\n", p(), InputFormat::Auto),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_univariate("# nothing\n\n", p(), InputFormat::Auto),
            Err(Error::EmptyFile { .. })
        ));
        assert!(parse_univariate("1 2\n", p(), InputFormat::Csv).is_err());
    }

    #[test]
    fn points_parsing() {
        let ps = parse_points("0,0\n3,4\n", p()).unwrap();
        assert_eq!(ps.len(), 2);
        assert!(matches!(
            parse_points("0,0\n1,2,3\n", p()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_points("1 2\n3 4\n", p()).is_ok());
    }

    #[test]
    fn detection_csv_rows() {
        let s = Sample::new(vec![0., 0.8, 1., 1.2, 1.3, 1.3, 1.4, 1.8, 2.4, 4.6], "c").unwrap();
        let det = detect_two_sided(&s, Sensitivity::default());
        let mut buf = Vec::new();
        write_detection_csv(&det, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "method,index,value\niir,9,4.6\n");

        let mut buf = Vec::new();
        write_trace_csv(&det.trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,side,candidate,gap,max_prev,er,ihr,iir,accepted\n"));
        assert_eq!(text.lines().count(), det.trace.len() + 1);
    }
}
