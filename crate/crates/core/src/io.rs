//! Text formats for matrices, vectors, configurations and stress traces.
//!
//! Numbers are written with 17 significant digits so files round-trip
//! exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dissim::{self, DissimilarityMatrix, FeatureVectors};
use crate::linalg::Matrix;
use crate::mds::EmbeddingConfiguration;
use crate::{Error, Result};

/// Round-trippable decimal rendering.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_rows<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(col, f)| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse { line, msg: format!("column {}: cannot parse {f:?} as a number", col + 1) })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    let cols = rows.first().map_or(0, |r| r.len());
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Parse {
            line: i + 1,
            msg: format!("expected {cols} fields, found {}", rows[i].len()),
        });
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn read_matrix_csv<R: Read>(reader: R) -> Result<Matrix> {
    rows_to_matrix(&parse_rows(reader)?)
}

pub fn read_dissimilarity_csv<R: Read>(reader: R) -> Result<DissimilarityMatrix> {
    dissim::validate(read_matrix_csv(reader)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    entries: Vec<Vec<f64>>,
}

pub fn read_dissimilarity_json<R: Read>(reader: R) -> Result<DissimilarityMatrix> {
    let doc: MatrixJson = serde_json::from_reader(reader)?;
    if doc.entries.len() != doc.n {
        return Err(Error::ShapeMismatch(format!("declared n = {} but {} rows", doc.n, doc.entries.len())));
    }
    if let Some(row) = doc.entries.iter().position(|r| r.len() != doc.n) {
        return Err(Error::RaggedRows { row });
    }
    dissim::validate(rows_to_matrix(&doc.entries)?)
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Read a dissimilarity matrix from `.json` or CSV by extension.
pub fn read_dissimilarity(path: &Path) -> Result<DissimilarityMatrix> {
    let f = BufReader::new(File::open(path)?);
    if is_json(path) {
        read_dissimilarity_json(f)
    } else {
        read_dissimilarity_csv(f)
    }
}

/// A single vector, given as one CSV row, one CSV column, or a JSON array.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let f = BufReader::new(File::open(path)?);
    if is_json(path) {
        return Ok(serde_json::from_reader(f)?);
    }
    let rows = parse_rows(f)?;
    if rows.len() == 1 {
        return Ok(rows.into_iter().next().expect("one row"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != 1) {
        return Err(Error::Parse { line: i + 1, msg: "expected a single row or a single column".into() });
    }
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

pub fn read_feature_vectors_csv<R: Read>(reader: R) -> Result<FeatureVectors> {
    FeatureVectors::new(parse_rows(reader)?)
}

pub fn write_matrix_csv<W: Write>(mut w: W, m: &Matrix) -> Result<()> {
    for i in 0..m.nrows() {
        let line: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_rows_csv<W: Write>(mut w: W, rows: &[Vec<f64>]) -> Result<()> {
    for r in rows {
        let line: Vec<String> = r.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_dissimilarity_csv<W: Write>(w: W, d: &DissimilarityMatrix) -> Result<()> {
    write_matrix_csv(w, d.entries())
}

pub fn write_dissimilarity_json<W: Write>(w: W, d: &DissimilarityMatrix) -> Result<()> {
    let e = d.entries();
    let doc = MatrixJson { n: d.n(), entries: (0..d.n()).map(|i| e.row(i).iter().copied().collect()).collect() };
    serde_json::to_writer(w, &doc)?;
    Ok(())
}

pub fn write_configuration_csv<W: Write>(w: W, c: &EmbeddingConfiguration) -> Result<()> {
    write_matrix_csv(w, c.coords())
}

pub fn read_configuration_csv<R: Read>(reader: R) -> Result<EmbeddingConfiguration> {
    EmbeddingConfiguration::new(read_matrix_csv(reader)?)
}

/// One JSON object per line: `{"iter": k, "stress": value}`.
pub fn write_trace_jsonl<W: Write>(mut w: W, trace: &[f64]) -> Result<()> {
    for (iter, s) in trace.iter().enumerate() {
        writeln!(w, "{{\"iter\":{iter},\"stress\":{}}}", fmt_f64(*s))?;
    }
    Ok(())
}

pub fn read_trace_jsonl<R: Read>(reader: R) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    struct Entry {
        stress: f64,
    }
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: Entry = serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        out.push(e.stress);
    }
    Ok(out)
}

/// Create `path` (and its parent directories) for buffered writing.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let m = Matrix::from_row_slice(3, 3, &[0.0, 0.1, 1.0 / 3.0, 0.1, 0.0, 2.5e-17, 1.0 / 3.0, 2.5e-17, 0.0]);
        let d = dissim::validate(m).unwrap();
        let mut buf = Vec::new();
        write_dissimilarity_csv(&mut buf, &d).unwrap();
        let back = read_dissimilarity_csv(&buf[..]).unwrap();
        assert_eq!(back, d);
        let mut j = Vec::new();
        write_dissimilarity_json(&mut j, &d).unwrap();
        assert_eq!(read_dissimilarity_json(&j[..]).unwrap(), d);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let text = "0,1,2\n1,0,3\n2,x,0\n";
        match read_dissimilarity_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match read_matrix_csv("0,1\n1,0,4\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trace_round_trip() {
        let t = vec![3.0, 1.5, 1.0 / 7.0];
        let mut buf = Vec::new();
        write_trace_jsonl(&mut buf, &t).unwrap();
        assert_eq!(read_trace_jsonl(&buf[..]).unwrap(), t);
    }
}
