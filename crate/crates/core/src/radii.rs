//! Circle radii on the sublattice `V = { N + iM : M >= |N| }`.
//!
//! The circle labelled `z = N + iM` is centered at `f(n, m)` with
//! `n = N + M`, `m = M - N`; its radius is the common length of the four
//! edges at that vertex.

use alloc::collections::BTreeMap;
use core::fmt;

use crate::error::{Error, Result};
use crate::lattice::{ConformalLattice, LatticeIndex};
use crate::numerics::{ExtendedComplex, ToleranceConfig};

/// Complex label `re + i·im` of a circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SublatticeLabel {
    pub re: i64,
    pub im: i64,
}

impl SublatticeLabel {
    pub const fn new(re: i64, im: i64) -> Self {
        SublatticeLabel { re, im }
    }

    pub fn in_v(&self) -> bool {
        self.im >= self.re.abs()
    }

    /// Strictly inside `V` (off both border rays).
    pub fn is_interior(&self) -> bool {
        self.im > self.re.abs()
    }

    pub fn shifted(&self, dre: i64, dim: i64) -> Self {
        SublatticeLabel::new(self.re + dre, self.im + dim)
    }

    pub fn to_index(&self) -> Option<LatticeIndex> {
        if !self.in_v() {
            return None;
        }
        Some(LatticeIndex::new(
            (self.im + self.re) as usize,
            (self.im - self.re) as usize,
        ))
    }

    /// Label of an even lattice vertex.
    pub fn from_index(idx: LatticeIndex) -> Option<Self> {
        let (n, m) = (idx.n as i64, idx.m as i64);
        if (n + m) % 2 != 0 {
            return None;
        }
        Some(SublatticeLabel::new((n - m) / 2, (n + m) / 2))
    }
}

impl fmt::Display for SublatticeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.re, self.im)
    }
}

/// A circle radius; `Line` is the infinite radius of a straight line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radius {
    Finite(f64),
    Line,
}

impl Radius {
    pub fn finite(self) -> Option<f64> {
        match self {
            Radius::Finite(r) => Some(r),
            Radius::Line => None,
        }
    }

    pub fn recip(self) -> Radius {
        match self {
            Radius::Finite(0.0) => Radius::Line,
            Radius::Finite(r) => Radius::Finite(1.0 / r),
            Radius::Line => Radius::Finite(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusField {
    c: f64,
    radii: BTreeMap<SublatticeLabel, Radius>,
}

impl RadiusField {
    pub fn new(c: f64) -> Self {
        RadiusField {
            c,
            radii: BTreeMap::new(),
        }
    }

    pub fn from_radii(c: f64, radii: impl IntoIterator<Item = (SublatticeLabel, Radius)>) -> Self {
        RadiusField {
            c,
            radii: radii.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, label: SublatticeLabel, r: Radius) {
        self.radii.insert(label, r);
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn get(&self, z: SublatticeLabel) -> Option<Radius> {
        self.radii.get(&z).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SublatticeLabel, Radius)> + '_ {
        self.radii.iter().map(|(&z, &r)| (z, r))
    }

    /// Finite radius at `z`, or `MissingNeighbor` / `LineCircle`.
    pub fn finite(&self, z: SublatticeLabel) -> Result<f64> {
        match self.get(z) {
            Some(Radius::Finite(r)) => Ok(r),
            Some(Radius::Line) => Err(Error::LineCircle(z)),
            None => Err(Error::MissingNeighbor(z)),
        }
    }

    /// Labels at which every radius equation can be evaluated.
    pub fn interior_labels(&self) -> impl Iterator<Item = SublatticeLabel> + '_ {
        self.radii.keys().copied().filter(move |z| {
            z.is_interior()
                && [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (0, 0)]
                    .iter()
                    .all(|&(a, b)| matches!(self.get(z.shifted(a, b)), Some(Radius::Finite(_))))
        })
    }

    /// `R(n0 + iM)` for `M = |n0|, |n0|+1, ...` while present.
    pub fn column(&self, n0: i64) -> impl Iterator<Item = (i64, Radius)> + '_ {
        (n0.abs()..)
            .map(move |m| (m, self.get(SublatticeLabel::new(n0, m))))
            .take_while(|(_, r)| r.is_some())
            .map(|(m, r)| (m, r.expect("checked")))
    }
}

/// Radii of the circle pattern of a lattice, one per even vertex, checking
/// that the edges at every center share one length.
pub fn extract_radii(lat: &ConformalLattice, tol: &ToleranceConfig) -> Result<RadiusField> {
    let size = lat.size();
    let mut field = RadiusField::new(lat.kind().exponent(lat.c()));
    for n in 0..=size {
        for m in 0..=size {
            if (n + m) % 2 != 0 {
                continue;
            }
            let label = SublatticeLabel::from_index(LatticeIndex::new(n, m)).expect("even vertex");
            let center = match lat.get(n, m) {
                ExtendedComplex::Finite(z) => z,
                ExtendedComplex::Infinity => {
                    field.insert(label, Radius::Line);
                    continue;
                }
            };
            let mut lengths = [0.0; 4];
            let mut count = 0;
            for (dn, dm) in [(1isize, 0isize), (0, 1), (-1, 0), (0, -1)] {
                let (Some(i), Some(j)) = (n.checked_add_signed(dn), m.checked_add_signed(dm))
                else {
                    continue;
                };
                let idx = LatticeIndex::new(i, j);
                if !lat.contains(idx) {
                    continue;
                }
                lengths[count] = (lat.finite_at(idx)? - center).norm();
                count += 1;
            }
            let lengths = &lengths[..count];
            let Some(&r) = lengths.first() else {
                continue;
            };
            let largest = lengths.iter().fold(0.0, |a: f64, &b| a.max(b));
            let spread = lengths.iter().map(|&l| (l - r).abs()).fold(0.0, f64::max);
            if largest > 0.0 && spread > tol.rel_tol * largest {
                return Err(Error::EquiViolation {
                    label,
                    spread: spread / largest,
                });
            }
            field.insert(label, Radius::Finite(r));
        }
    }
    Ok(field)
}

fn normalized(defect: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        defect.abs()
    } else {
        defect.abs() / scale
    }
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Normalized defects of the five radius equations at one label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusResiduals {
    /// Star equation relating a radius to its four neighbors.
    pub ln_r: f64,
    /// Equation on the sublattice square `z, z+1, z+1+i, z+i`.
    pub square: f64,
    pub right: f64,
    pub left: f64,
    pub up: f64,
}

impl RadiusResiduals {
    pub fn max(&self) -> f64 {
        max_abs(&[self.ln_r, self.square, self.right, self.left, self.up])
    }
}

/// Each defect is divided by the largest monomial of its equation after
/// expanding the products.
pub fn radius_residuals(field: &RadiusField, z: SublatticeLabel) -> Result<RadiusResiduals> {
    let r = field.finite(z)?;
    let e = field.finite(z.shifted(1, 0))?;
    let n = field.finite(z.shifted(0, 1))?;
    let w = field.finite(z.shifted(-1, 0))?;
    let s = field.finite(z.shifted(0, -1))?;
    let ne = field.finite(z.shifted(1, 1))?;
    let c = field.c();
    let (big_n, big_m) = (z.re as f64, z.im as f64);
    let r2 = r * r;

    let star_lhs = r2 * (e + n + w + s);
    let star_rhs = n * w * s + e * w * s + e * n * s + e * n * w;
    let ln_r = normalized(star_lhs - star_rhs, star_lhs.max(star_rhs));

    let sq = [
        r * e * (-2.0 * big_m - c),
        e * ne * (2.0 * (big_n + 1.0) - c),
        ne * n * (2.0 * (big_m + 1.0) - c),
        n * r * (-2.0 * big_n - c),
    ];
    let square = normalized(sq.iter().sum(), max_abs(&sq));

    // (k1 (R^2 - a b) u + k2 (R^2 - d g) v) with its four monomials
    let pair = |k1: f64, a: f64, b: f64, u: f64, k2: f64, d: f64, g: f64, v: f64| {
        let defect = k1 * (r2 - a * b) * u + k2 * (r2 - d * g) * v;
        let scale = max_abs(&[k1 * r2 * u, k1 * a * b * u, k2 * r2 * v, k2 * d * g * v]);
        normalized(defect, scale)
    };
    let right = pair(big_n + big_m, e, s, n + e, big_m - big_n, n, e, e + s);
    let left = pair(big_n + big_m, n, w, w + s, big_m - big_n, w, s, n + w);
    let up = pair(big_n + big_m, n, w, e + n, big_n - big_m, e, n, n + w);

    Ok(RadiusResiduals {
        ln_r,
        square,
        right,
        left,
        up,
    })
}

/// `(c - 1)(R(z)^2 - R(z-i) R(z+1)) >= 0` up to `abs_tol` (relative to `R(z)^2`).
pub fn sign_condition(
    field: &RadiusField,
    z: SublatticeLabel,
    tol: &ToleranceConfig,
) -> Result<bool> {
    let r = field.finite(z)?;
    let below = field.finite(z.shifted(0, -1))?;
    let right = field.finite(z.shifted(1, 0))?;
    let value = (field.c() - 1.0) * (r * r - below * right);
    Ok(value >= -tol.abs_tol * (r * r).max(1.0))
}

/// The same pattern with reciprocal radii, which is the pattern of the
/// exponent `2 - c`.
pub fn dual_radii(field: &RadiusField) -> RadiusField {
    RadiusField {
        c: 2.0 - field.c,
        radii: field.radii.iter().map(|(&z, &r)| (z, r.recip())).collect(),
    }
}

/// `X` and `Y` of an edge from the two radii: `(1+t)/(1-t) = a/b`.
fn edge_ratio(a: Radius, b: Radius) -> Option<f64> {
    match (a, b) {
        (Radius::Line, Radius::Line) => None,
        (Radius::Line, _) => Some(1.0),
        (_, Radius::Line) => Some(-1.0),
        (Radius::Finite(a), Radius::Finite(b)) if a + b > 0.0 => Some((a - b) / (a + b)),
        _ => None,
    }
}

/// Ratio `(1 + t) / (1 - t)` recovered from an edge variable.
pub fn ratio_from_edge(t: f64) -> f64 {
    (1.0 + t) / (1.0 - t)
}

/// Edge variables on the sublattice:
/// `(1+X)/(1-X) = R(N+1+iM)/R(N+iM)` and `(1+Y)/(1-Y) = R(N+iM)/R(N+i(M-1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRatioField {
    c: f64,
    x: BTreeMap<SublatticeLabel, f64>,
    y: BTreeMap<SublatticeLabel, f64>,
}

impl EdgeRatioField {
    pub fn from_values(
        c: f64,
        x: impl IntoIterator<Item = (SublatticeLabel, f64)>,
        y: impl IntoIterator<Item = (SublatticeLabel, f64)>,
    ) -> Self {
        EdgeRatioField {
            c,
            x: x.into_iter().collect(),
            y: y.into_iter().collect(),
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn x(&self, z: SublatticeLabel) -> Option<f64> {
        self.x.get(&z).copied()
    }

    pub fn y(&self, z: SublatticeLabel) -> Option<f64> {
        self.y.get(&z).copied()
    }

    pub fn x_labels(&self) -> impl Iterator<Item = SublatticeLabel> + '_ {
        self.x.keys().copied()
    }

    pub fn set_x(&mut self, z: SublatticeLabel, v: f64) {
        self.x.insert(z, v);
    }

    pub fn set_y(&mut self, z: SublatticeLabel, v: f64) {
        self.y.insert(z, v);
    }

    fn need_x(&self, z: SublatticeLabel) -> Result<f64> {
        self.x(z).ok_or(Error::MissingNeighbor(z))
    }

    fn need_y(&self, z: SublatticeLabel) -> Result<f64> {
        self.y(z).ok_or(Error::MissingNeighbor(z))
    }
}

pub fn xy_from_radii(field: &RadiusField) -> EdgeRatioField {
    let mut out = EdgeRatioField {
        c: field.c(),
        x: BTreeMap::new(),
        y: BTreeMap::new(),
    };
    for (z, r) in field.iter() {
        if let Some(t) = field.get(z.shifted(1, 0)).and_then(|e| edge_ratio(e, r)) {
            out.x.insert(z, t);
        }
        if let Some(t) = field.get(z.shifted(0, -1)).and_then(|s| edge_ratio(r, s)) {
            out.y.insert(z, t);
        }
    }
    out
}

/// Normalized defects of the four edge-variable equations at one label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyResiduals {
    pub right: f64,
    pub square: f64,
    pub inner: f64,
    pub outer: f64,
}

impl XyResiduals {
    pub fn max(&self) -> f64 {
        max_abs(&[self.right, self.square, self.inner, self.outer])
    }
}

pub fn xy_residuals(xy: &EdgeRatioField, z: SublatticeLabel) -> Result<XyResiduals> {
    let (big_n, big_m) = (z.re as f64, z.im as f64);
    let x = xy.need_x(z)?;
    let x_up = xy.need_x(z.shifted(0, 1))?;
    let x_left = xy.need_x(z.shifted(-1, 0))?;
    let y = xy.need_y(z)?;
    let y_up = xy.need_y(z.shifted(0, 1))?;
    let y_diag = xy.need_y(z.shifted(1, 1))?;
    let c1 = xy.c() - 1.0;

    let t1 = (big_m - big_n) * (x + y_up) / (1.0 - x * y_up);
    let t2 = (big_m + big_n) * (x - y) / (1.0 + x * y);
    let right = normalized(
        t1 + t2,
        max_abs(&[
            (big_m - big_n) * x,
            (big_m - big_n) * y_up,
            (big_m + big_n) * x,
            (big_m + big_n) * y,
        ]),
    );

    let s1 = (big_m - big_n) * (y_up - x) / (1.0 - x * y_up);
    let s2 = (big_m + big_n + 1.0) * (x_up + y_up) / (1.0 + x_up * y_up);
    let square = normalized(
        s1 + s2 - c1,
        max_abs(&[
            (big_m - big_n) * y_up,
            (big_m - big_n) * x,
            (big_m + big_n + 1.0) * x_up,
            (big_m + big_n + 1.0) * y_up,
            c1,
        ]),
    );

    let a = (x + y_up) / (1.0 - x * y_up);
    let b = (x_left + y) / (1.0 - x_left * y);
    let inner = normalized(a - b, max_abs(&[x, y_up, x_left, y]));

    let a = (x + y_diag) / (1.0 + x * y_diag);
    let b = (x_up + y_up) / (1.0 + x_up * y_up);
    let outer = normalized(a - b, max_abs(&[x, y_diag, x_up, y_up]));

    Ok(XyResiduals {
        right,
        square,
        inner,
        outer,
    })
}
