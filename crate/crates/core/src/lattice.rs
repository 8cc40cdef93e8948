//! Discrete conformal maps on the quadrant `n, m >= 0`.
//!
//! Every elementary quadrilateral `f(n,m), f(n+1,m), f(n+1,m+1), f(n,m+1)`
//! has cross-ratio -1, and the maps `Z^c`, `Z^2` and `Log` are singled out
//! by the nonautonomous constraint
//!
//! ```text
//! c f(n,m) = 2n (f(n+1,m)-f(n,m)) (f(n,m)-f(n-1,m)) / (f(n+1,m)-f(n-1,m))
//!          + 2m (f(n,m+1)-f(n,m)) (f(n,m)-f(n,m-1)) / (f(n,m+1)-f(n,m-1))
//! ```
//!
//! (with `1` on the left and `n`, `m` instead of `2n`, `2m` for `Log`).
//! On the axes the constraint is linear in the next value; the interior is
//! then fixed by the cross-ratio equation alone.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Axis, Error, Result};
use crate::mp::{precision_for, MpComplex, MpContext, Scalar};
use crate::numerics::{cross_ratio, Complex, ExtendedComplex, ToleranceConfig};

/// Bits of precision lost per anti-diagonal of the interior fill
/// (`log2(3 + 2√2) / 2 ≈ 1.27`, rounded up).
const FILL_GROWTH_BITS: f64 = 1.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeIndex {
    pub n: usize,
    pub m: usize,
}

impl LatticeIndex {
    pub const fn new(n: usize, m: usize) -> Self {
        LatticeIndex { n, m }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    /// Discrete `z^c`, `0 < c < 2`.
    Zc,
    /// Discrete `z^2`.
    Z2,
    /// Discrete `log z`.
    Log,
}

impl LatticeKind {
    /// Kind of the dual map.
    pub fn dual(self) -> Self {
        match self {
            LatticeKind::Zc => LatticeKind::Zc,
            LatticeKind::Z2 => LatticeKind::Log,
            LatticeKind::Log => LatticeKind::Z2,
        }
    }

    /// The exponent this kind stores (`Log` is the `c = 0` case of the
    /// radius equations).
    pub fn exponent(self, c: f64) -> f64 {
        match self {
            LatticeKind::Zc => c,
            LatticeKind::Z2 => 2.0,
            LatticeKind::Log => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LatticeKind::Zc => "zc",
            LatticeKind::Z2 => "z2",
            LatticeKind::Log => "log",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zc" => Some(LatticeKind::Zc),
            "z2" => Some(LatticeKind::Z2),
            "log" => Some(LatticeKind::Log),
            _ => None,
        }
    }
}

/// Values `f(n, m)` for `0 <= n, m <= size`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalLattice {
    kind: LatticeKind,
    c: f64,
    size: usize,
    values: Vec<ExtendedComplex>,
}

impl ConformalLattice {
    /// Wraps precomputed values stored row by row (`values[n * (size + 1) + m]`).
    pub fn from_values(
        kind: LatticeKind,
        c: f64,
        size: usize,
        values: Vec<ExtendedComplex>,
    ) -> Result<Self> {
        if values.len() != (size + 1) * (size + 1) {
            return Err(Error::InvalidParameter("value count does not match size"));
        }
        if !c.is_finite() {
            return Err(Error::InvalidParameter("exponent must be finite"));
        }
        if values.iter().any(|v| !v.is_valid()) {
            return Err(Error::InvalidParameter("lattice values must not be NaN"));
        }
        if values.iter().filter(|v| v.is_infinite()).count() > 1 {
            return Err(Error::MultipleInfinities);
        }
        Ok(ConformalLattice {
            kind,
            c,
            size,
            values,
        })
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[ExtendedComplex] {
        &self.values
    }

    pub fn contains(&self, idx: LatticeIndex) -> bool {
        idx.n <= self.size && idx.m <= self.size
    }

    /// `f(n, m)`; panics outside the lattice.
    pub fn get(&self, n: usize, m: usize) -> ExtendedComplex {
        assert!(
            n <= self.size && m <= self.size,
            "({n}, {m}) outside lattice"
        );
        self.values[n * (self.size + 1) + m]
    }

    pub fn at(&self, idx: LatticeIndex) -> Result<ExtendedComplex> {
        if !self.contains(idx) {
            return Err(Error::OutOfRange(idx));
        }
        Ok(self.get(idx.n, idx.m))
    }

    pub fn finite_at(&self, idx: LatticeIndex) -> Result<Complex> {
        self.at(idx)?.finite().ok_or(Error::InfiniteVertex(idx))
    }

    /// Vertices of the quadrilateral with lower-left corner `idx`, in the
    /// order `f(n,m), f(n+1,m), f(n+1,m+1), f(n,m+1)`.
    pub fn quad(&self, idx: LatticeIndex) -> Result<[ExtendedComplex; 4]> {
        if idx.n >= self.size || idx.m >= self.size {
            return Err(Error::OutOfRange(idx));
        }
        let (n, m) = (idx.n, idx.m);
        Ok([
            self.get(n, m),
            self.get(n + 1, m),
            self.get(n + 1, m + 1),
            self.get(n, m + 1),
        ])
    }

    /// `|q + 1|` for the quadrilateral at `idx`.
    pub fn cross_ratio_defect(&self, idx: LatticeIndex, tol: &ToleranceConfig) -> Result<f64> {
        let [a, b, c, d] = self.quad(idx)?;
        let q = cross_ratio(a, b, c, d, tol).map_err(|e| match e {
            Error::DegenerateQuad { .. } => Error::DegenerateQuad { index: Some(idx) },
            other => other,
        })?;
        Ok(q.finite().map_or(f64::INFINITY, |q| (q + 1.0).norm()))
    }

    /// The lattice with every value replaced by `g(f)`.
    pub fn map_values(&self, g: impl Fn(Complex) -> Complex) -> ConformalLattice {
        let values = self
            .values
            .iter()
            .map(|v| match *v {
                ExtendedComplex::Finite(z) => ExtendedComplex::Finite(g(z)),
                ExtendedComplex::Infinity => ExtendedComplex::Infinity,
            })
            .collect();
        ConformalLattice {
            values,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillOrder {
    /// Sweeps `n + m = const`, ascending.
    #[default]
    AntiDiagonal,
    /// Rows `n = 1, 2, ...`, each with ascending `m`.
    RowMajor,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GenerateOptions {
    pub fill_order: FillOrder,
    /// Working precision of the propagation; chosen from the lattice size
    /// when `None`.
    pub precision_bits: Option<usize>,
    pub tol: ToleranceConfig,
}

/// Next axis value from the constraint restricted to `m = 0` (or `n = 0`).
///
/// Returns `None` when the coefficient of the unknown vanishes.
fn axis_step<S: Scalar>(
    kind: LatticeKind,
    c: f64,
    n: usize,
    prev: &S,
    cur: &S,
    tol: f64,
) -> Option<S> {
    let delta = cur.sub(prev);
    let (num, den) = match kind {
        LatticeKind::Zc | LatticeKind::Z2 => {
            // c f_n (x - f_{n-1}) = 2n (x - f_n) delta
            let c = kind.exponent(c);
            let two_n_delta = delta.scale(2.0 * n as f64);
            let num = cur.mul(&prev.scale(c).sub(&two_n_delta));
            let den = cur.scale(c).sub(&two_n_delta);
            let scale = cur.norm() * c + two_n_delta.norm();
            if den.norm() <= tol * scale {
                return None;
            }
            (num, den)
        }
        LatticeKind::Log => {
            // x - g_{n-1} = n (x - g_n) delta
            let n_delta = delta.scale(n as f64);
            let num = prev.sub(&n_delta.mul(cur));
            let den = cur.real_like(1.0).sub(&n_delta);
            if den.norm() <= tol * (1.0 + n_delta.norm()) {
                return None;
            }
            (num, den)
        }
    };
    Some(num.div(&den))
}

/// `d` with `q(a, b, c, d) = -1` for finite, pairwise distinct points.
fn fourth_vertex<S: Scalar>(a: &S, b: &S, c: &S, tol: f64) -> Option<S> {
    let p = a.sub(b);
    let r = b.sub(c);
    let den = r.sub(&p);
    if den.norm() <= tol * (p.norm() + r.norm()) {
        return None;
    }
    Some(r.mul(a).sub(&p.mul(c)).div(&den))
}

/// Next value on a boundary axis.
///
/// `axis_values` holds `f(0), ..., f(n)` along the axis (`n >= 1`); the
/// result is `f(n + 1)`. For `Log` a leading infinite value is allowed and
/// handled by the limit `g(n+1) = g(n) + 1/n`.
pub fn boundary_extend(
    kind: LatticeKind,
    c: f64,
    axis: Axis,
    axis_values: &[ExtendedComplex],
    tol: &ToleranceConfig,
) -> Result<ExtendedComplex> {
    if axis_values.len() < 2 {
        return Err(Error::InvalidParameter("need at least two axis values"));
    }
    let n = axis_values.len() - 1;
    let singular = Error::SingularStep { axis, n };
    let cur = axis_values[n]
        .finite()
        .ok_or(Error::InvalidParameter("current axis value must be finite"))?;
    match axis_values[n - 1] {
        ExtendedComplex::Finite(prev) => axis_step(kind, c, n, &prev, &cur, tol.degenerate_tol)
            .map(ExtendedComplex::Finite)
            .ok_or(singular),
        ExtendedComplex::Infinity if kind == LatticeKind::Log => {
            Ok(ExtendedComplex::Finite(cur + 1.0 / n as f64))
        }
        ExtendedComplex::Infinity => Err(Error::InvalidParameter(
            "infinite axis value is only admissible for Log",
        )),
    }
}

fn validate(kind: LatticeKind, c: f64, size: usize) -> Result<f64> {
    if size < 2 {
        return Err(Error::InvalidParameter("size must be at least 2"));
    }
    match kind {
        LatticeKind::Zc if !(c > 0.0 && c < 2.0) => {
            Err(Error::InvalidParameter("Z^c requires 0 < c < 2"))
        }
        _ => Ok(kind.exponent(c)),
    }
}

struct Grid {
    size: usize,
    cells: Vec<Option<MpComplex>>,
}

impl Grid {
    fn new(size: usize) -> Self {
        Grid {
            size,
            cells: vec![None; (size + 1) * (size + 1)],
        }
    }

    fn idx(&self, n: usize, m: usize) -> usize {
        n * (self.size + 1) + m
    }

    fn set(&mut self, n: usize, m: usize, v: MpComplex) {
        let i = self.idx(n, m);
        self.cells[i] = Some(v);
    }

    fn get(&self, n: usize, m: usize) -> &MpComplex {
        self.cells[self.idx(n, m)]
            .as_ref()
            .expect("propagation order visits dependencies first")
    }

    fn is_set(&self, n: usize, m: usize) -> bool {
        self.cells[self.idx(n, m)].is_some()
    }
}

fn extend_axes(
    grid: &mut Grid,
    kind: LatticeKind,
    c: f64,
    from: usize,
    tol: &ToleranceConfig,
) -> Result<()> {
    let size = grid.size;
    for n in from..size {
        let next = axis_step(
            kind,
            c,
            n,
            grid.get(n - 1, 0),
            grid.get(n, 0),
            tol.degenerate_tol,
        )
        .ok_or(Error::SingularStep { axis: Axis::N, n })?;
        grid.set(n + 1, 0, next);
        let next = axis_step(
            kind,
            c,
            n,
            grid.get(0, n - 1),
            grid.get(0, n),
            tol.degenerate_tol,
        )
        .ok_or(Error::SingularStep { axis: Axis::M, n })?;
        grid.set(0, n + 1, next);
    }
    Ok(())
}

fn fill_interior(grid: &mut Grid, order: FillOrder, tol: &ToleranceConfig) -> Result<()> {
    let size = grid.size;
    let visit = |grid: &mut Grid, n: usize, m: usize| -> Result<()> {
        if grid.is_set(n, m) {
            return Ok(());
        }
        let v = fourth_vertex(
            grid.get(n - 1, m),
            grid.get(n - 1, m - 1),
            grid.get(n, m - 1),
            tol.degenerate_tol,
        )
        .ok_or(Error::DegenerateQuad {
            index: Some(LatticeIndex::new(n - 1, m - 1)),
        })?;
        grid.set(n, m, v);
        Ok(())
    };
    match order {
        FillOrder::AntiDiagonal => {
            for s in 2..=2 * size {
                let lo = s.saturating_sub(size).max(1);
                let hi = (s - 1).min(size);
                for n in lo..=hi {
                    visit(grid, n, s - n)?;
                }
            }
        }
        FillOrder::RowMajor => {
            for n in 1..=size {
                for m in 1..=size {
                    visit(grid, n, m)?;
                }
            }
        }
    }
    Ok(())
}

fn finish(
    kind: LatticeKind,
    c: f64,
    grid: Grid,
    infinite: Option<(usize, usize)>,
) -> ConformalLattice {
    let size = grid.size;
    let values = grid
        .cells
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if infinite == Some((i / (size + 1), i % (size + 1))) {
                ExtendedComplex::Infinity
            } else {
                ExtendedComplex::Finite(v.as_ref().expect("all cells filled").to_complex())
            }
        })
        .collect();
    ConformalLattice {
        kind,
        c,
        size,
        values,
    }
}

/// Generates `Z^c`, `Z^2` or `Log` on `0 <= n, m <= size`.
///
/// `c` is only read for [`LatticeKind::Zc`].
pub fn generate(kind: LatticeKind, c: f64, size: usize) -> Result<ConformalLattice> {
    generate_with(kind, c, size, &GenerateOptions::default())
}

pub fn generate_with(
    kind: LatticeKind,
    c: f64,
    size: usize,
    opts: &GenerateOptions,
) -> Result<ConformalLattice> {
    let c = validate(kind, c, size)?;
    let prec = opts
        .precision_bits
        .unwrap_or_else(|| precision_for(2 * size, FILL_GROWTH_BITS));
    let mut ctx = MpContext::new(prec);
    let mut grid = Grid::new(size);
    let tol = &opts.tol;
    let mut infinite = None;
    match kind {
        LatticeKind::Zc => {
            grid.set(0, 0, ctx.real(0.0));
            grid.set(1, 0, ctx.real(1.0));
            grid.set(0, 1, ctx.exp_i_pi(c / 2.0));
            extend_axes(&mut grid, kind, c, 1, tol)?;
        }
        LatticeKind::Z2 => {
            let zero = ctx.real(0.0);
            grid.set(0, 0, zero.clone());
            grid.set(1, 0, zero.clone());
            grid.set(0, 1, zero);
            grid.set(2, 0, ctx.real(1.0));
            grid.set(0, 2, ctx.real(-1.0));
            let pi = ctx.pi();
            let two = MpComplex::from_f64(2.0, 0.0, prec);
            let two_over_pi = MpComplex::from_parts(
                astro_float::BigFloat::from_f64(0.0, prec),
                two.re().div(&pi, prec, astro_float::RoundingMode::ToEven),
                prec,
            );
            grid.set(1, 1, two_over_pi);
            extend_axes(&mut grid, kind, c, 2, tol)?;
        }
        LatticeKind::Log => {
            // Placeholder for the vertex at infinity; never read by the kernels.
            grid.set(0, 0, ctx.real(0.0));
            infinite = Some((0, 0));
            let pi = ctx.pi();
            let zero = astro_float::BigFloat::from_f64(0.0, prec);
            let one = astro_float::BigFloat::from_f64(1.0, prec);
            let half = astro_float::BigFloat::from_f64(0.5, prec);
            let rm = astro_float::RoundingMode::ToEven;
            grid.set(1, 0, ctx.real(0.0));
            grid.set(0, 1, MpComplex::from_parts(zero.clone(), pi.clone(), prec));
            grid.set(2, 0, ctx.real(1.0));
            grid.set(0, 2, MpComplex::from_parts(one, pi.clone(), prec));
            grid.set(
                1,
                1,
                MpComplex::from_parts(zero, pi.mul(&half, prec, rm), prec),
            );
            extend_axes(&mut grid, kind, c, 2, tol)?;
        }
    }
    fill_interior(&mut grid, opts.fill_order, tol)?;
    Ok(finish(kind, c, grid, infinite))
}

/// Equidistant axes `f(n,0) = n`, `f(0,m) = m e^{icπ/2}` completed by the
/// cross-ratio equation alone, ignoring the constraint. For `c != 1` the
/// result is in general not an immersion.
pub fn generate_naive(c: f64, size: usize) -> Result<ConformalLattice> {
    let c = validate(LatticeKind::Zc, c, size)?;
    let prec = precision_for(2 * size, FILL_GROWTH_BITS);
    let mut ctx = MpContext::new(prec);
    let mut grid = Grid::new(size);
    let w = ctx.exp_i_pi(c / 2.0);
    for k in 0..=size {
        grid.set(k, 0, ctx.real(k as f64));
        if k > 0 {
            grid.set(0, k, w.scale(k as f64));
        }
    }
    fill_interior(
        &mut grid,
        FillOrder::AntiDiagonal,
        &GenerateOptions::default().tol,
    )?;
    Ok(finish(LatticeKind::Zc, c, grid, None))
}

/// Fixes the additive constant of a dual map: `f*(index) = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualAnchor {
    pub index: LatticeIndex,
    pub value: Complex,
}

/// The dual discrete conformal map
///
/// ```text
/// f*(n+1,m) - f*(n,m) = -1 / (f(n+1,m) - f(n,m))
/// f*(n,m+1) - f*(n,m) =  1 / (f(n,m+1) - f(n,m))
/// ```
///
/// Edges meeting the infinite vertex of the source have zero dual length.
/// A vertex whose incident edges all have zero length becomes the infinite
/// vertex of the dual; any other zero edge is an error.
pub fn dual_map(
    lat: &ConformalLattice,
    anchor: DualAnchor,
    tol: &ToleranceConfig,
) -> Result<ConformalLattice> {
    let size = lat.size();
    let stride = size + 1;
    let id = |n: usize, m: usize| n * stride + m;

    // dual edge increment along (from -> to), None for zero source edges
    let increment = |from: LatticeIndex, to: LatticeIndex| -> Option<Complex> {
        let (a, b) = (lat.get(from.n, from.m), lat.get(to.n, to.m));
        let horizontal = to.n != from.n;
        match (a, b) {
            (ExtendedComplex::Finite(a), ExtendedComplex::Finite(b)) => {
                let e = b - a;
                if e.norm() < tol.degenerate_tol {
                    None
                } else if horizontal {
                    Some(-1.0 / e)
                } else {
                    Some(1.0 / e)
                }
            }
            _ => Some(Complex::new(0.0, 0.0)),
        }
    };

    let neighbors = |idx: LatticeIndex| {
        let mut out: Vec<LatticeIndex> = Vec::with_capacity(4);
        if idx.n > 0 {
            out.push(LatticeIndex::new(idx.n - 1, idx.m));
        }
        if idx.n < size {
            out.push(LatticeIndex::new(idx.n + 1, idx.m));
        }
        if idx.m > 0 {
            out.push(LatticeIndex::new(idx.n, idx.m - 1));
        }
        if idx.m < size {
            out.push(LatticeIndex::new(idx.n, idx.m + 1));
        }
        out
    };

    // signed increment from `a` to its neighbor `b`
    let step = |a: LatticeIndex, b: LatticeIndex| -> Option<Complex> {
        if b.n > a.n || b.m > a.m {
            increment(a, b)
        } else {
            increment(b, a).map(|e| -e)
        }
    };

    let mut dual_infinite: Option<LatticeIndex> = None;
    for n in 0..=size {
        for m in 0..=size {
            let idx = LatticeIndex::new(n, m);
            let nb = neighbors(idx);
            if nb.iter().all(|&b| step(idx, b).is_none()) {
                if dual_infinite.is_some() {
                    return Err(Error::ZeroEdge {
                        from: idx,
                        to: nb[0],
                    });
                }
                dual_infinite = Some(idx);
            }
        }
    }
    if dual_infinite == Some(anchor.index) || !lat.contains(anchor.index) {
        return Err(Error::InvalidParameter(
            "dual anchor must be a finite dual vertex",
        ));
    }

    let mut values: Vec<Option<Complex>> = vec![None; stride * stride];
    values[id(anchor.index.n, anchor.index.m)] = Some(anchor.value);
    let mut queue = VecDeque::new();
    queue.push_back(anchor.index);
    while let Some(a) = queue.pop_front() {
        let fa = values[id(a.n, a.m)].expect("queued vertices are set");
        for b in neighbors(a) {
            if Some(b) == dual_infinite {
                continue;
            }
            let e = step(a, b).ok_or(Error::ZeroEdge { from: a, to: b })?;
            let slot = &mut values[id(b.n, b.m)];
            match slot {
                None => {
                    *slot = Some(fa + e);
                    queue.push_back(b);
                }
                Some(fb) => {
                    let defect = (*fb - fa - e).norm();
                    let scale = fa.norm() + fb.norm() + e.norm();
                    if defect > tol.rel_tol * scale.max(1.0) {
                        return Err(Error::InconsistentDual { index: b, defect });
                    }
                }
            }
        }
    }

    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| match v {
            Some(z) => Ok(ExtendedComplex::Finite(z)),
            None if dual_infinite == Some(LatticeIndex::new(i / stride, i % stride)) => {
                Ok(ExtendedComplex::Infinity)
            }
            None => Err(Error::InvalidParameter("dual lattice is disconnected")),
        })
        .collect::<Result<Vec<_>>>()?;
    let kind = lat.kind().dual();
    let c = match lat.kind() {
        LatticeKind::Zc => 2.0 - lat.c(),
        other => other.dual().exponent(0.0),
    };
    ConformalLattice::from_values(kind, c, size, values)
}

/// Normalized defect of the (regularized) constraint at an interior index.
///
/// The constraint is multiplied by both denominators and the absolute
/// defect is divided by the largest of its three terms, so the value is
/// scale free.
pub fn constraint_residual(lat: &ConformalLattice, at: LatticeIndex) -> Result<f64> {
    let (n, m) = (at.n, at.m);
    if n == 0 || m == 0 || n >= lat.size() || m >= lat.size() {
        return Err(Error::OutOfRange(at));
    }
    let f = |i: usize, j: usize| lat.finite_at(LatticeIndex::new(i, j));
    let center = f(n, m)?;
    let (east, west) = (f(n + 1, m)?, f(n - 1, m)?);
    let (north, south) = (f(n, m + 1)?, f(n, m - 1)?);
    let span_n = east - west;
    let span_m = north - south;
    let along_n = (east - center) * (center - west);
    let along_m = (north - center) * (center - south);
    let (lhs, t_n, t_m) = match lat.kind() {
        LatticeKind::Log => (
            span_n * span_m,
            along_n * span_m * n as f64,
            along_m * span_n * m as f64,
        ),
        kind => {
            let c = kind.exponent(lat.c());
            (
                center * span_n * span_m * c,
                along_n * span_m * (2 * n) as f64,
                along_m * span_n * (2 * m) as f64,
            )
        }
    };
    let scale = lhs.norm().max(t_n.norm()).max(t_m.norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - t_n - t_m).norm() / scale)
}
