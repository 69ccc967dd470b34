//! Point sets and their CSV form (one point per row, optional header).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major points in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    coords: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("points need dimension at least 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, coords: Vec::new() }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or_else(|| Error::EmptyData("no rows".into()))?;
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            coords.extend_from_slice(r);
        }
        Self::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The first `m` points.
    pub fn prefix(&self, m: usize) -> Points {
        Points { dim: self.dim, coords: self.coords[..m.min(self.len()) * self.dim].to_vec() }
    }

    /// Points at the given indices, in that order.
    pub fn select(&self, idx: &[usize]) -> Points {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            coords.extend_from_slice(self.point(i));
        }
        Points { dim: self.dim, coords }
    }

    pub fn extend(&mut self, other: &Points) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        self.coords.extend_from_slice(&other.coords);
        Ok(())
    }

    /// Coordinate-wise mean.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        let mut m = vec![0.0; self.dim];
        for p in self.iter() {
            for (a, b) in m.iter_mut().zip(p) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// Points sorted lexicographically by coordinates (total order on f64).
    pub fn canonical(&self) -> Points {
        let mut rows: Vec<&[f64]> = self.iter().collect();
        rows.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Points { dim: self.dim, coords: rows.concat() }
    }
}

/// Reads points from CSV. A first row that does not parse as numbers is
/// taken as a header.
pub fn read_points<R: Read>(reader: R) -> Result<Points> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut dim = None;
    let mut coords = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(r) => r,
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(Error::invalid(format!("row {}: {e}", line + 1)));
            }
        };
        if let Some(x) = row.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("row {}: non-finite value {x}", line + 1)));
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::DimensionMismatch { expected: d, got: row.len() });
            }
            _ => {}
        }
        coords.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::EmptyData("CSV contains no points".into()))?;
    Points::new(dim, coords)
}

pub fn read_points_file(path: &Path) -> Result<Points> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    read_points(std::io::BufReader::new(f))
}

/// Writes points with a header `x1,…,xd`.
pub fn write_points<W: Write>(points: &Points, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> = (1..=points.dim()).map(|i| format!("x{i}")).collect();
    w.write_record(&header)?;
    for p in points.iter() {
        w.write_record(p.iter().map(|x| format!("{x:?}")))?;
    }
    w.flush()?;
    Ok(())
}
