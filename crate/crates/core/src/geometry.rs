//! Circle patterns of a lattice and planar predicates on its quadrilaterals.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::lattice::{ConformalLattice, LatticeIndex, LatticeKind};
use crate::numerics::{Complex, ExtendedComplex, ToleranceConfig};
use crate::radii::{extract_radii, Radius, SublatticeLabel};

/// A circle of the pattern, or the straight line replacing the circle
/// whose center is the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Circle {
    Round {
        center: Complex,
        radius: f64,
    },
    /// The line through `point` with unit `direction`.
    Line {
        point: Complex,
        direction: Complex,
    },
}

impl Circle {
    pub fn center(&self) -> ExtendedComplex {
        match *self {
            Circle::Round { center, .. } => ExtendedComplex::Finite(center),
            Circle::Line { .. } => ExtendedComplex::Infinity,
        }
    }

    pub fn radius(&self) -> Radius {
        match *self {
            Circle::Round { radius, .. } => Radius::Finite(radius),
            Circle::Line { .. } => Radius::Line,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirclePattern {
    circles: BTreeMap<SublatticeLabel, Circle>,
    neighbors: Vec<(SublatticeLabel, SublatticeLabel)>,
    half_neighbors: Vec<(SublatticeLabel, SublatticeLabel)>,
}

impl CirclePattern {
    /// Builds the adjacency from the labels present.
    pub fn from_circles(circles: impl IntoIterator<Item = (SublatticeLabel, Circle)>) -> Self {
        let circles: BTreeMap<_, _> = circles.into_iter().collect();
        let mut neighbors = Vec::new();
        let mut half_neighbors = Vec::new();
        for &z in circles.keys() {
            for (dre, dim) in [(1, 0), (0, 1)] {
                let w = z.shifted(dre, dim);
                if circles.contains_key(&w) {
                    neighbors.push((z, w));
                }
            }
            for (dre, dim) in [(1, 1), (-1, 1)] {
                let w = z.shifted(dre, dim);
                if circles.contains_key(&w) {
                    half_neighbors.push((z, w));
                }
            }
        }
        CirclePattern {
            circles,
            neighbors,
            half_neighbors,
        }
    }

    pub fn len(&self) -> usize {
        self.circles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circles.is_empty()
    }

    pub fn get(&self, z: SublatticeLabel) -> Option<Circle> {
        self.circles.get(&z).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SublatticeLabel, Circle)> + '_ {
        self.circles.iter().map(|(&z, &c)| (z, c))
    }

    /// Pairs `(z, z+1)` and `(z, z+i)`: circles meeting orthogonally.
    pub fn neighbors(&self) -> &[(SublatticeLabel, SublatticeLabel)] {
        &self.neighbors
    }

    /// Pairs `(z, z+1+i)` and `(z, z-1+i)`: tangent circles.
    pub fn half_neighbors(&self) -> &[(SublatticeLabel, SublatticeLabel)] {
        &self.half_neighbors
    }

    /// Replaces the circle at an existing label.
    pub fn replace(&mut self, z: SublatticeLabel, circle: Circle) -> Option<Circle> {
        self.circles
            .get_mut(&z)
            .map(|c| core::mem::replace(c, circle))
    }
}

/// One circle per even vertex, radius the common edge length there.
pub fn circles(lat: &ConformalLattice, tol: &ToleranceConfig) -> Result<CirclePattern> {
    let field = extract_radii(lat, tol)?;
    let mut out = Vec::with_capacity(field.len());
    for (z, r) in field.iter() {
        let idx = z.to_index().expect("labels of a field lie in V");
        let circle = match r {
            Radius::Finite(radius) => Circle::Round {
                center: lat.finite_at(idx)?,
                radius,
            },
            Radius::Line => {
                // the line through the two lattice neighbors of the
                // infinite center that exist
                let mut pts = [(1isize, 0isize), (0, 1), (-1, 0), (0, -1)]
                    .iter()
                    .filter_map(|&(dn, dm)| {
                        let n = idx.n.checked_add_signed(dn)?;
                        let m = idx.m.checked_add_signed(dm)?;
                        lat.at(LatticeIndex::new(n, m)).ok()?.finite()
                    });
                let (Some(a), Some(b)) = (pts.next(), pts.next()) else {
                    continue;
                };
                Circle::Line {
                    point: a,
                    direction: (b - a) / (b - a).norm(),
                }
            }
        };
        out.push((z, circle));
    }
    Ok(CirclePattern::from_circles(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Incidence {
    Orthogonal,
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidenceViolation {
    pub a: SublatticeLabel,
    pub b: SublatticeLabel,
    pub kind: Incidence,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IncidenceReport {
    pub neighbor_pairs: usize,
    pub half_neighbor_pairs: usize,
    pub max_defect: f64,
    pub violations: Vec<IncidenceViolation>,
}

impl IncidenceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn distance_to_line(p: Complex, point: Complex, direction: Complex) -> f64 {
    let d = p - point;
    (d.re * direction.im - d.im * direction.re).abs()
}

/// Relative defect of orthogonality or tangency between two circles.
fn incidence_defect(kind: Incidence, a: Circle, b: Circle) -> Option<f64> {
    use Circle::*;
    match (kind, a, b) {
        (
            Incidence::Orthogonal,
            Round {
                center: o1,
                radius: r1,
            },
            Round {
                center: o2,
                radius: r2,
            },
        ) => {
            let s = r1 * r1 + r2 * r2;
            Some(((o1 - o2).norm_sqr() - s).abs() / s)
        }
        (
            Incidence::Tangent,
            Round {
                center: o1,
                radius: r1,
            },
            Round {
                center: o2,
                radius: r2,
            },
        ) => {
            let s = r1 + r2;
            Some(((o1 - o2).norm() - s).abs() / s)
        }
        // a line is orthogonal to a circle through its center
        (Incidence::Orthogonal, Line { point, direction }, Round { center, radius })
        | (Incidence::Orthogonal, Round { center, radius }, Line { point, direction }) => {
            Some(distance_to_line(center, point, direction) / radius)
        }
        (Incidence::Tangent, Line { point, direction }, Round { center, radius })
        | (Incidence::Tangent, Round { center, radius }, Line { point, direction }) => {
            Some((distance_to_line(center, point, direction) - radius).abs() / radius)
        }
        (_, Line { .. }, Line { .. }) => None,
    }
}

/// Checks that neighboring circles are orthogonal and half-neighboring
/// circles tangent, both to relative tolerance `rel_tol`.
pub fn incidence_check(pat: &CirclePattern, rel_tol: f64) -> IncidenceReport {
    let mut report = IncidenceReport::default();
    let pairs = pat
        .neighbors
        .iter()
        .map(|&p| (Incidence::Orthogonal, p))
        .chain(pat.half_neighbors.iter().map(|&p| (Incidence::Tangent, p)));
    for (kind, (a, b)) in pairs {
        let (ca, cb) = (pat.circles[&a], pat.circles[&b]);
        let Some(defect) = incidence_defect(kind, ca, cb) else {
            continue;
        };
        match kind {
            Incidence::Orthogonal => report.neighbor_pairs += 1,
            Incidence::Tangent => report.half_neighbor_pairs += 1,
        }
        // NaN counts as a violation
        if !(defect <= rel_tol) {
            report
                .violations
                .push(IncidenceViolation { a, b, kind, defect });
        }
        if defect > report.max_defect || defect.is_nan() {
            report.max_defect = defect;
        }
    }
    report
}

/// An elementary quadrilateral `f(n,m), f(n+1,m), f(n+1,m+1), f(n,m+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCell {
    pub index: LatticeIndex,
    pub vertices: [ExtendedComplex; 4],
}

pub fn quads(lat: &ConformalLattice) -> Vec<QuadCell> {
    let size = lat.size();
    let mut out = Vec::with_capacity(size * size);
    for n in 0..size {
        for m in 0..size {
            let index = LatticeIndex::new(n, m);
            let vertices = lat.quad(index).expect("inside the lattice");
            out.push(QuadCell { index, vertices });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    /// The open interiors of two quadrilaterals intersect.
    Overlap,
    /// A quadrilateral whose boundary crosses itself.
    SelfIntersecting,
    /// A quadrilateral of (numerically) zero area or with coincident vertices.
    Degenerate,
}

/// A pair of quadrilaterals (equal indices for single-cell defects).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct QuadViolation {
    pub first: LatticeIndex,
    pub second: LatticeIndex,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OverlapReport {
    /// Quads entering the pairwise tests.
    pub tested_quads: usize,
    /// Pairs passed to the exact test.
    pub tested_pairs: usize,
    /// Quads with a vertex at infinity, left out of all tests.
    pub excluded: Vec<LatticeIndex>,
    /// Degenerate quads forced by the initial data, left out of all tests.
    pub exempt: Vec<LatticeIndex>,
    pub violations: Vec<QuadViolation>,
}

impl OverlapReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Lexicographically smallest violation.
    pub fn first_violation(&self) -> Option<QuadViolation> {
        self.violations.iter().min().copied()
    }
}

/// How candidate pairs are enumerated by [`is_embedded_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairSearch {
    /// Uniform grid over bounding boxes.
    #[default]
    Grid,
    /// Every pair; quadratic.
    BruteForce,
}

#[derive(Debug, Clone, Copy)]
struct Poly {
    index: LatticeIndex,
    v: [Complex; 4],
    lo: Complex,
    hi: Complex,
}

impl Poly {
    fn new(index: LatticeIndex, v: [Complex; 4]) -> Self {
        let mut lo = v[0];
        let mut hi = v[0];
        for p in &v[1..] {
            lo = Complex::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Complex::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        Poly { index, v, lo, hi }
    }

    fn extent(&self) -> f64 {
        (self.hi.re - self.lo.re).max(self.hi.im - self.lo.im)
    }

    fn edge(&self, k: usize) -> (Complex, Complex) {
        (self.v[k], self.v[(k + 1) % 4])
    }

    fn area(&self) -> f64 {
        let mut s = 0.0;
        for k in 0..4 {
            let (a, b) = self.edge(k);
            s += a.re * b.im - a.im * b.re;
        }
        s / 2.0
    }

    fn boxes_overlap(&self, o: &Poly, eps: f64) -> bool {
        self.lo.re < o.hi.re - eps
            && o.lo.re < self.hi.re - eps
            && self.lo.im < o.hi.im - eps
            && o.lo.im < self.hi.im - eps
    }

    /// A point in the open interior: the midpoint of an interior diagonal.
    fn interior_point(&self, eps: f64) -> Complex {
        let d = (self.v[0] + self.v[2]) / 2.0;
        if strictly_inside(d, self, eps) {
            d
        } else {
            (self.v[1] + self.v[3]) / 2.0
        }
    }
}

fn orient(a: Complex, b: Complex, c: Complex) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

/// Segments cross at a single point interior to both.
fn proper_crossing(a: Complex, b: Complex, c: Complex, d: Complex, eps: f64) -> bool {
    // orientations compared against eps times the segment lengths
    let ab = (b - a).norm();
    let cd = (d - c).norm();
    let o1 = orient(a, b, c) / ab;
    let o2 = orient(a, b, d) / ab;
    let o3 = orient(c, d, a) / cd;
    let o4 = orient(c, d, b) / cd;
    ((o1 > eps && o2 < -eps) || (o1 < -eps && o2 > eps))
        && ((o3 > eps && o4 < -eps) || (o3 < -eps && o4 > eps))
}

fn distance_to_segment(p: Complex, a: Complex, b: Complex) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a).re * ab.re + (p - a).im * ab.im) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// `p` lies in the interior of `poly` at distance more than `eps` from its
/// boundary.
fn strictly_inside(p: Complex, poly: &Poly, eps: f64) -> bool {
    let mut inside = false;
    for k in 0..4 {
        let (a, b) = poly.edge(k);
        if distance_to_segment(p, a, b) <= eps {
            return false;
        }
        if (a.im > p.im) != (b.im > p.im) {
            let x = a.re + (p.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if p.re < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn interiors_overlap(p: &Poly, q: &Poly, eps: f64) -> bool {
    if !p.boxes_overlap(q, eps) {
        return false;
    }
    for i in 0..4 {
        let (a, b) = p.edge(i);
        for j in 0..4 {
            let (c, d) = q.edge(j);
            if proper_crossing(a, b, c, d, eps) {
                return true;
            }
        }
    }
    let probes = |x: &Poly, y: &Poly| {
        (0..4).any(|k| {
            let (a, b) = x.edge(k);
            strictly_inside(a, y, eps) || strictly_inside((a + b) / 2.0, y, eps)
        }) || strictly_inside(x.interior_point(eps), y, eps)
    };
    probes(p, q) || probes(q, p)
}

/// Sorts the cells into polygons to test, exclusions and single-cell
/// violations.
fn prepare(lat: &ConformalLattice, tol: &ToleranceConfig) -> (Vec<Poly>, OverlapReport, f64) {
    let mut report = OverlapReport::default();
    let mut polys = Vec::new();
    for cell in quads(lat) {
        let mut v = [Complex::new(0.0, 0.0); 4];
        let mut infinite = false;
        for (k, x) in cell.vertices.iter().enumerate() {
            match x {
                ExtendedComplex::Finite(z) => v[k] = *z,
                ExtendedComplex::Infinity => infinite = true,
            }
        }
        if infinite {
            report.excluded.push(cell.index);
            continue;
        }
        let poly = Poly::new(cell.index, v);
        let scale = poly.extent();
        let coincident = (0..4).any(|i| {
            (i + 1..4).any(|j| (v[i] - v[j]).norm() <= tol.degenerate_tol * scale.max(1.0))
        });
        let eps = tol.rel_tol * scale;
        if !coincident
            && (proper_crossing(v[0], v[1], v[2], v[3], eps)
                || proper_crossing(v[1], v[2], v[3], v[0], eps))
        {
            report.violations.push(QuadViolation {
                first: cell.index,
                second: cell.index,
                kind: ViolationKind::SelfIntersecting,
            });
            continue;
        }
        if coincident || poly.area().abs() <= tol.degenerate_tol * scale * scale {
            // the Z² initial data put three vertices of the corner cell at 0
            if lat.kind() == LatticeKind::Z2 && cell.index == LatticeIndex::new(0, 0) {
                report.exempt.push(cell.index);
            } else {
                report.violations.push(QuadViolation {
                    first: cell.index,
                    second: cell.index,
                    kind: ViolationKind::Degenerate,
                });
            }
            continue;
        }
        polys.push(poly);
    }
    report.tested_quads = polys.len();
    (polys, report, tol.rel_tol)
}

fn test_pair(p: &Poly, q: &Poly, rel: f64, report: &mut OverlapReport) {
    report.tested_pairs += 1;
    let eps = rel * p.extent().max(q.extent());
    if interiors_overlap(p, q, eps) {
        let (first, second) = if p.index <= q.index {
            (p.index, q.index)
        } else {
            (q.index, p.index)
        };
        report.violations.push(QuadViolation {
            first,
            second,
            kind: ViolationKind::Overlap,
        });
    }
}

/// Adjacent quadrilaterals (sharing an edge or a vertex) have disjoint
/// open interiors.
pub fn is_immersed(lat: &ConformalLattice, tol: &ToleranceConfig) -> OverlapReport {
    let (polys, mut report, rel) = prepare(lat, tol);
    let by_index: BTreeMap<LatticeIndex, usize> = polys
        .iter()
        .enumerate()
        .map(|(k, p)| (p.index, k))
        .collect();
    for p in &polys {
        let (n, m) = (p.index.n, p.index.m);
        // each unordered adjacent pair once
        for (dn, dm) in [(1isize, 0isize), (0, 1), (1, 1), (1, -1)] {
            let (Some(n2), Some(m2)) = (n.checked_add_signed(dn), m.checked_add_signed(dm)) else {
                continue;
            };
            if let Some(&k) = by_index.get(&LatticeIndex::new(n2, m2)) {
                test_pair(p, &polys[k], rel, &mut report);
            }
        }
    }
    report.violations.sort();
    report
}

/// No two quadrilaterals have intersecting open interiors.
pub fn is_embedded(lat: &ConformalLattice, tol: &ToleranceConfig) -> OverlapReport {
    is_embedded_with(lat, tol, PairSearch::Grid)
}

pub fn is_embedded_with(
    lat: &ConformalLattice,
    tol: &ToleranceConfig,
    search: PairSearch,
) -> OverlapReport {
    let (polys, mut report, rel) = prepare(lat, tol);
    match search {
        PairSearch::BruteForce => {
            for i in 0..polys.len() {
                for j in i + 1..polys.len() {
                    test_pair(&polys[i], &polys[j], rel, &mut report);
                }
            }
        }
        PairSearch::Grid => grid_pairs(&polys, rel, &mut report),
    }
    report.violations.sort();
    report
}

fn grid_pairs(polys: &[Poly], rel: f64, report: &mut OverlapReport) {
    if polys.len() < 2 {
        return;
    }
    let mut lo = polys[0].lo;
    let mut hi = polys[0].hi;
    let mut total = 0.0;
    for p in polys {
        lo = Complex::new(lo.re.min(p.lo.re), lo.im.min(p.lo.im));
        hi = Complex::new(hi.re.max(p.hi.re), hi.im.max(p.hi.im));
        total += p.extent();
    }
    let width = (hi.re - lo.re).max(hi.im - lo.im).max(f64::MIN_POSITIVE);
    let mean = total / polys.len() as f64;
    // about one quad per cell, at most 512 cells per side
    let cells = libm::ceil(width / mean.max(width / 512.0)) as usize;
    let cells = cells.clamp(1, 512);
    let h = width / cells as f64;
    let cell_of = |x: f64, origin: f64| {
        (libm::floor((x - origin) / h) as isize).clamp(0, cells as isize - 1) as usize
    };
    let span = |p: &Poly| {
        (
            cell_of(p.lo.re, lo.re),
            cell_of(p.hi.re, lo.re),
            cell_of(p.lo.im, lo.im),
            cell_of(p.hi.im, lo.im),
        )
    };
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
    let spans: Vec<_> = polys.iter().map(span).collect();
    for (k, &(x0, x1, y0, y1)) in spans.iter().enumerate() {
        for x in x0..=x1 {
            for y in y0..=y1 {
                grid[x * cells + y].push(k);
            }
        }
    }
    for x in 0..cells {
        for y in 0..cells {
            let bucket = &grid[x * cells + y];
            for (a, &i) in bucket.iter().enumerate() {
                for &j in &bucket[a + 1..] {
                    // test each pair only in the first cell both boxes share
                    let (si, sj) = (spans[i], spans[j]);
                    if x != si.0.max(sj.0) || y != si.2.max(sj.2) {
                        continue;
                    }
                    test_pair(&polys[i], &polys[j], rel, report);
                }
            }
        }
    }
}
