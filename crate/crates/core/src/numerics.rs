//! Points of the extended complex plane, the cross-ratio, and the
//! fourth-vertex solve that drives lattice propagation.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// A point of the Riemann sphere: either a finite complex number or the
/// single point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedComplex {
    Finite(Complex),
    Infinity,
}

impl ExtendedComplex {
    pub const ZERO: Self = ExtendedComplex::Finite(Complex::new(0.0, 0.0));

    pub fn new(re: f64, im: f64) -> Self {
        ExtendedComplex::Finite(Complex::new(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedComplex::Infinity)
    }

    pub fn finite(&self) -> Option<Complex> {
        match *self {
            ExtendedComplex::Finite(z) => Some(z),
            ExtendedComplex::Infinity => None,
        }
    }

    /// True for finite points with NaN-free coordinates, and for infinity.
    pub fn is_valid(&self) -> bool {
        match self {
            ExtendedComplex::Finite(z) => z.re.is_finite() && z.im.is_finite(),
            ExtendedComplex::Infinity => true,
        }
    }
}

impl From<Complex> for ExtendedComplex {
    fn from(z: Complex) -> Self {
        ExtendedComplex::Finite(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Edge lengths below this count as coincident vertices.
    pub degenerate_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            degenerate_tol: 1e-12,
        }
    }
}

impl ToleranceConfig {
    pub fn new(rel_tol: f64, abs_tol: f64, degenerate_tol: f64) -> Result<Self> {
        let ok = |t: f64| t.is_finite() && t > 0.0;
        if !(ok(rel_tol) && ok(abs_tol) && ok(degenerate_tol)) {
            return Err(Error::InvalidParameter("tolerances must be positive"));
        }
        Ok(ToleranceConfig {
            rel_tol,
            abs_tol,
            degenerate_tol,
        })
    }
}

fn count_infinite(points: &[ExtendedComplex]) -> usize {
    points.iter().filter(|p| p.is_infinite()).count()
}

fn checked_div(num: Complex, den: Complex, tol: &ToleranceConfig) -> Result<Complex> {
    if den.norm() < tol.degenerate_tol {
        return Err(Error::DegenerateQuad { index: None });
    }
    Ok(num / den)
}

/// Cross-ratio `(a-b)(c-d) / ((b-c)(d-a))` of a quadrilateral `a, b, c, d`.
///
/// One vertex may be at infinity; the two factors containing it cancel.
pub fn cross_ratio(
    a: ExtendedComplex,
    b: ExtendedComplex,
    c: ExtendedComplex,
    d: ExtendedComplex,
    tol: &ToleranceConfig,
) -> Result<ExtendedComplex> {
    use ExtendedComplex::*;
    if count_infinite(&[a, b, c, d]) > 1 {
        return Err(Error::MultipleInfinities);
    }
    let q = match (a, b, c, d) {
        (Finite(a), Finite(b), Finite(c), Finite(d)) => {
            let (bc, da) = (b - c, d - a);
            if bc.norm() < tol.degenerate_tol || da.norm() < tol.degenerate_tol {
                return Err(Error::DegenerateQuad { index: None });
            }
            (a - b) * (c - d) / (bc * da)
        }
        (Infinity, Finite(b), Finite(c), Finite(d)) => checked_div(d - c, b - c, tol)?,
        (Finite(a), Infinity, Finite(c), Finite(d)) => checked_div(c - d, a - d, tol)?,
        (Finite(a), Finite(b), Infinity, Finite(d)) => checked_div(a - b, a - d, tol)?,
        (Finite(a), Finite(b), Finite(c), Infinity) => checked_div(a - b, c - b, tol)?,
        _ => unreachable!(),
    };
    Ok(Finite(q))
}

/// The vertex `d` completing `a, b, c` to a quadrilateral with cross-ratio -1.
pub fn solve_fourth(
    a: ExtendedComplex,
    b: ExtendedComplex,
    c: ExtendedComplex,
    tol: &ToleranceConfig,
) -> Result<ExtendedComplex> {
    use ExtendedComplex::*;
    if count_infinite(&[a, b, c]) > 1 {
        return Err(Error::MultipleInfinities);
    }
    let degenerate = Error::DegenerateQuad { index: None };
    let d = match (a, b, c) {
        (Finite(a), Finite(b), Finite(c)) => {
            if (a - b).norm() < tol.degenerate_tol
                || (b - c).norm() < tol.degenerate_tol
                || (a - c).norm() < tol.degenerate_tol
            {
                return Err(degenerate);
            }
            solve_fourth_finite(&a, &b, &c).ok_or(degenerate)?
        }
        (Infinity, Finite(b), Finite(c)) => c + c - b,
        (Finite(a), Infinity, Finite(c)) => (a + c) * 0.5,
        (Finite(a), Finite(b), Infinity) => a + a - b,
        _ => unreachable!(),
    };
    Ok(Finite(d))
}

fn solve_fourth_finite(a: &Complex, b: &Complex, c: &Complex) -> Option<Complex> {
    let p = a - b;
    let r = b - c;
    let den = r - p;
    // The pivot vanishes when b is the midpoint of a and c; the Möbius
    // solution is then the point at infinity.
    if den.norm() <= f64::EPSILON * (p.norm() + r.norm()) {
        return None;
    }
    Some((r * a - p * c) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pt(re: f64, im: f64) -> ExtendedComplex {
        ExtendedComplex::new(re, im)
    }

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn unwrap(z: ExtendedComplex) -> Complex {
        z.finite().expect("finite")
    }

    #[test]
    fn unit_square_is_conformal() {
        let q = cross_ratio(pt(0., 0.), pt(1., 0.), pt(1., 1.), pt(0., 1.), &tol()).unwrap();
        assert_abs_diff_eq!(unwrap(q).re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(unwrap(q).im, 0.0, epsilon = 1e-15);
        let q = cross_ratio(pt(0., 0.), pt(2., 0.), pt(2., 2.), pt(0., 2.), &tol()).unwrap();
        assert_abs_diff_eq!(unwrap(q).re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn infinite_vertex_is_the_limit() {
        let (b, c, d) = (pt(0.3, -1.0), pt(2.0, 0.5), pt(-0.7, 1.4));
        let q = unwrap(cross_ratio(ExtendedComplex::Infinity, b, c, d, &tol()).unwrap());
        let (bf, cf, df) = (unwrap(b), unwrap(c), unwrap(d));
        assert!((q - (df - cf) / (bf - cf)).norm() < 1e-15);
        // Compare against a far away finite vertex.
        let far = ExtendedComplex::Finite(Complex::from_polar(1e9, 0.7));
        let qf = unwrap(cross_ratio(far, b, c, d, &tol()).unwrap());
        assert!((q - qf).norm() < 1e-8);

        for slot in 1..4 {
            let mut pts = [pt(0.1, 0.2), b, c, d];
            let mut far_pts = pts;
            pts[slot] = ExtendedComplex::Infinity;
            far_pts[slot] = far;
            let q = unwrap(cross_ratio(pts[0], pts[1], pts[2], pts[3], &tol()).unwrap());
            let qf = unwrap(
                cross_ratio(far_pts[0], far_pts[1], far_pts[2], far_pts[3], &tol()).unwrap(),
            );
            assert!((q - qf).norm() < 1e-8, "slot {slot}: {q} vs {qf}");
        }
    }

    #[test]
    fn two_infinities_are_rejected() {
        let inf = ExtendedComplex::Infinity;
        assert_eq!(
            cross_ratio(inf, inf, pt(0., 0.), pt(1., 0.), &tol()),
            Err(Error::MultipleInfinities)
        );
        assert_eq!(
            solve_fourth(inf, pt(0., 0.), inf, &tol()),
            Err(Error::MultipleInfinities)
        );
    }

    #[test]
    fn repeated_vertex_is_degenerate() {
        let r = cross_ratio(pt(0., 0.), pt(1., 0.), pt(1., 0.), pt(0., 1.), &tol());
        assert_eq!(r, Err(Error::DegenerateQuad { index: None }));
    }

    #[test]
    fn completes_unit_square() {
        let d = unwrap(solve_fourth(pt(0., 0.), pt(1., 0.), pt(1., 1.), &tol()).unwrap());
        assert!((d - Complex::i()).norm() < 1e-15);
    }

    #[test]
    fn corner_quad_of_zc() {
        // f(1,1) from f(0,1), f(0,0), f(1,0): the unknown sits last after
        // cyclically rotating the quad, which maps q to 1/q = -1.
        for &c in &[0.3, 1.0, 1.5, 1.9] {
            let w = Complex::from_polar(1.0, c * core::f64::consts::FRAC_PI_2);
            let f11 = unwrap(solve_fourth(w.into(), pt(0., 0.), pt(1., 0.), &tol()).unwrap());
            let expected = 2.0 * w / (1.0 + w);
            assert!((f11 - expected).norm() < 1e-15);
        }
        let w = Complex::i();
        let f11 = unwrap(solve_fourth(w.into(), pt(0., 0.), pt(1., 0.), &tol()).unwrap());
        assert!((f11 - Complex::new(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn collinear_midpoint_is_singular() {
        assert_eq!(
            solve_fourth(pt(0., 0.), pt(1., 0.), pt(2., 0.), &tol()),
            Err(Error::DegenerateQuad { index: None })
        );
    }

    #[test]
    fn solve_with_infinite_vertex() {
        let inf = ExtendedComplex::Infinity;
        let (x, y) = (pt(0.5, 1.0), pt(-1.0, 2.0));
        for (a, b, c) in [(inf, x, y), (x, inf, y), (x, y, inf)] {
            let d = solve_fourth(a, b, c, &tol()).unwrap();
            let q = unwrap(cross_ratio(a, b, c, d, &tol()).unwrap());
            assert!((q + 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn tolerance_validation() {
        assert!(ToleranceConfig::new(1e-9, 1e-12, 1e-12).is_ok());
        assert!(ToleranceConfig::new(0.0, 1e-12, 1e-12).is_err());
        assert!(ToleranceConfig::new(1e-9, -1.0, 1e-12).is_err());
        assert!(ToleranceConfig::new(1e-9, 1e-12, f64::NAN).is_err());
    }

    fn coord() -> impl Strategy<Value = f64> {
        -10.0..10.0f64
    }

    fn point() -> impl Strategy<Value = Complex> {
        (coord(), coord()).prop_map(|(re, im)| Complex::new(re, im))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn solved_vertex_has_cross_ratio_minus_one(a in point(), b in point(), c in point()) {
            prop_assume!((a - b).norm() > 1e-2 && (b - c).norm() > 1e-2 && (a - c).norm() > 1e-2);
            let den = (b - c) - (a - b);
            prop_assume!(den.norm() > 1e-2);
            let d = solve_fourth(a.into(), b.into(), c.into(), &tol()).unwrap();
            let df = unwrap(d);
            prop_assume!((df - a).norm() > 1e-3 && (df - c).norm() > 1e-3);
            let q = unwrap(cross_ratio(a.into(), b.into(), c.into(), d, &tol()).unwrap());
            prop_assert!((q + 1.0).norm() < 1e-9 * (1.0 + df.norm()), "q = {}", q);
        }

        #[test]
        fn cross_ratio_is_mobius_invariant(
            a in point(), b in point(), c in point(), d in point(),
            alpha in point(), beta in point(), gamma in point(), delta in point(),
        ) {
            prop_assume!((alpha * delta - beta * gamma).norm() > 1e-1);
            let pts = [a, b, c, d];
            for i in 0..4 {
                for j in (i + 1)..4 {
                    prop_assume!((pts[i] - pts[j]).norm() > 1e-1);
                }
            }
            let mobius = |w: Complex| {
                let den = gamma * w + delta;
                (alpha * w + beta) / den
            };
            let images: Vec<Complex> = pts.iter().map(|&w| mobius(w)).collect();
            for w in &pts {
                prop_assume!((gamma * w + delta).norm() > 1e-1);
            }
            let q = unwrap(cross_ratio(a.into(), b.into(), c.into(), d.into(), &tol()).unwrap());
            let qm = unwrap(cross_ratio(
                images[0].into(), images[1].into(), images[2].into(), images[3].into(), &tol(),
            ).unwrap());
            prop_assert!((q - qm).norm() <= 1e-7 * (1.0 + q.norm()), "{} vs {}", q, qm);
        }
    }
}
