//! Lattice JSON and radii / angle CSV files.
//!
//! A lattice document is
//!
//! ```json
//! { "kind": "zc", "c": 1.5, "size": 2,
//!   "values": [[[0, 0], [0, 1], ...], ...] }
//! ```
//!
//! with `values[n][m]` either `[re, im]` or the string `"inf"`. Floats are
//! written in shortest round-trip form, so a parse of a written document
//! reproduces every value bit for bit.

use std::fmt;
use std::io::{Read, Write};

use dcmap_core::painleve::{dpii_residual, PainleveSolution};
use dcmap_core::radii::{Radius, RadiusField, SublatticeLabel};
use dcmap_core::{ConformalLattice, ExtendedComplex, LatticeKind};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum FormatError {
    Io(std::io::Error),
    Json(serde_json::Error),
    Csv(csv::Error),
    Schema(String),
    Lattice(dcmap_core::Error),
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::Io(e) => write!(f, "io error: {e}"),
            FormatError::Json(e) => write!(f, "malformed lattice JSON: {e}"),
            FormatError::Csv(e) => write!(f, "malformed CSV: {e}"),
            FormatError::Schema(what) => write!(f, "invalid document: {what}"),
            FormatError::Lattice(e) => write!(f, "invalid lattice: {e}"),
        }
    }
}

impl std::error::Error for FormatError {}

impl From<std::io::Error> for FormatError {
    fn from(e: std::io::Error) -> Self {
        FormatError::Io(e)
    }
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json(e)
    }
}

impl From<csv::Error> for FormatError {
    fn from(e: csv::Error) -> Self {
        FormatError::Csv(e)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
enum Point {
    Finite([f64; 2]),
    Infinite(Infinite),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
enum Infinite {
    #[serde(rename = "inf")]
    Inf,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeDoc {
    kind: String,
    c: f64,
    size: usize,
    values: Vec<Vec<Point>>,
}

pub fn lattice_to_json(lat: &ConformalLattice) -> String {
    let size = lat.size();
    let values = (0..=size)
        .map(|n| {
            (0..=size)
                .map(|m| match lat.get(n, m) {
                    ExtendedComplex::Finite(z) => Point::Finite([z.re, z.im]),
                    ExtendedComplex::Infinity => Point::Infinite(Infinite::Inf),
                })
                .collect()
        })
        .collect();
    let doc = LatticeDoc {
        kind: lat.kind().as_str().to_string(),
        c: lat.c(),
        size,
        values,
    };
    serde_json::to_string(&doc).expect("lattice documents always serialize")
}

pub fn lattice_from_json(text: &str) -> Result<ConformalLattice, FormatError> {
    let doc: LatticeDoc = serde_json::from_str(text)?;
    let kind = LatticeKind::parse(&doc.kind)
        .ok_or_else(|| FormatError::Schema(format!("unknown kind {:?}", doc.kind)))?;
    if doc.values.len() != doc.size + 1 {
        return Err(FormatError::Schema(format!(
            "expected {} rows, found {}",
            doc.size + 1,
            doc.values.len()
        )));
    }
    let mut values = Vec::with_capacity((doc.size + 1) * (doc.size + 1));
    for (n, row) in doc.values.iter().enumerate() {
        if row.len() != doc.size + 1 {
            return Err(FormatError::Schema(format!(
                "row {n} has {} values, expected {}",
                row.len(),
                doc.size + 1
            )));
        }
        values.extend(row.iter().map(|p| match *p {
            Point::Finite([re, im]) => ExtendedComplex::new(re, im),
            Point::Infinite(_) => ExtendedComplex::Infinity,
        }));
    }
    ConformalLattice::from_values(kind, doc.c, doc.size, values).map_err(FormatError::Lattice)
}

pub fn read_lattice(mut r: impl Read) -> Result<ConformalLattice, FormatError> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    lattice_from_json(&text)
}

#[derive(Debug, Serialize, Deserialize)]
struct RadiusRow {
    #[serde(rename = "N")]
    n: i64,
    #[serde(rename = "M")]
    m: i64,
    #[serde(rename = "R")]
    r: String,
}

/// Writes `N,M,R` rows; the line circle is written as `inf`.
pub fn write_radii_csv(field: &RadiusField, w: impl Write) -> Result<(), FormatError> {
    let mut out = csv::Writer::from_writer(w);
    for (z, r) in field.iter() {
        let r = match r {
            Radius::Finite(r) => r.to_string(),
            Radius::Line => "inf".to_string(),
        };
        out.serialize(RadiusRow {
            n: z.re,
            m: z.im,
            r,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `N,M,R` rows into a field with exponent `c`.
pub fn read_radii_csv(r: impl Read, c: f64) -> Result<RadiusField, FormatError> {
    let mut field = RadiusField::new(c);
    for row in csv::Reader::from_reader(r).deserialize() {
        let row: RadiusRow = row?;
        let radius = match row.r.trim() {
            "inf" => Radius::Line,
            s => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| FormatError::Schema(format!("bad radius {s:?}")))?;
                if !(v >= 0.0) || v.is_infinite() {
                    return Err(FormatError::Schema(format!("bad radius {s:?}")));
                }
                Radius::Finite(v)
            }
        };
        field.insert(SublatticeLabel::new(row.n, row.m), radius);
    }
    Ok(field)
}

/// `n,alpha,residual`; the residual column is empty for the last angle,
/// where the equation needs `α_{n+1}`.
pub fn write_painleve_csv(sol: &PainleveSolution, w: impl Write) -> Result<(), FormatError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "alpha", "residual"])?;
    for (n, alpha) in sol.alphas().iter().enumerate() {
        let residual = dpii_residual(sol, n)
            .map(|r| r.to_string())
            .unwrap_or_default();
        out.write_record([n.to_string(), alpha.to_string(), residual])?;
    }
    out.flush()?;
    Ok(())
}
