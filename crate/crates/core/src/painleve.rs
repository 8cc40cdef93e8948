//! The unitary solution `u_n = e^{iα_n}` of discrete Painlevé II
//!
//! ```text
//! (n+1)(u_n² - 1)(u_{n+1} - i u_n)/(i + u_n u_{n+1})
//!     - n(u_n² + 1)(u_{n-1} + i u_n)/(i + u_{n-1} u_n) = c u_n
//! ```
//!
//! with `u_0 = e^{icπ/4}`. The angles are the diagonal edge angles of
//! `Z^c`: `f(n,n+1) - f(n,n) = e^{2iα_n} (f(n+1,n) - f(n,n))`.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::lattice::{ConformalLattice, LatticeIndex};
use crate::mp::{big_to_f64, precision_for, MpComplex, MpContext, Scalar};
use crate::numerics::{Complex, ToleranceConfig};

/// Bits of accuracy lost per step of the forward recurrence.
const STEP_GROWTH_BITS: f64 = 2.6;

/// Largest tolerated deviation of `|u_{n+1}|` from one before renormalizing.
pub const MAX_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PainleveSolution {
    c: f64,
    alphas: Vec<f64>,
    drift: Vec<f64>,
}

impl PainleveSolution {
    /// A solution from raw angles, e.g. to validate externally produced data.
    pub fn from_alphas(c: f64, alphas: Vec<f64>) -> Self {
        let drift = alloc::vec![0.0; alphas.len()];
        PainleveSolution { c, alphas, drift }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `α_0, ..., α_steps`.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alphas_mut(&mut self) -> &mut [f64] {
        &mut self.alphas
    }

    /// `| |u_n| - 1 |` before renormalization (zero for `n = 0`).
    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn max_drift(&self) -> f64 {
        self.drift.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn steps(&self) -> usize {
        self.alphas.len().saturating_sub(1)
    }

    pub fn u(&self, n: usize) -> Option<Complex> {
        self.alphas.get(n).map(|&a| Complex::from_polar(1.0, a))
    }
}

/// `u_{n+1}` from `u_n` and `u_{n-1}` (`prev` is ignored for `n = 0`).
fn step<S: Scalar>(c: f64, n: usize, prev: &S, cur: &S, i: &S) -> S {
    let one = cur.real_like(1.0);
    let u2 = cur.mul(cur);
    let mut a = cur.scale(c);
    if n > 0 {
        let iu = i.mul(cur);
        let t = u2
            .add(&one)
            .mul(&prev.add(&iu))
            .div(&i.add(&prev.mul(cur)))
            .scale(n as f64);
        a = a.add(&t);
    }
    let b = u2.sub(&one).scale((n + 1) as f64);
    i.mul(&a.add(&b.mul(cur))).div(&b.sub(&a.mul(cur)))
}

/// Runs the recurrence for `steps` steps on the unitary branch.
pub fn dpii_solve(c: f64, steps: usize) -> Result<PainleveSolution> {
    if !(c > 0.0 && c < 2.0) {
        return Err(Error::InvalidParameter("c must lie in (0, 2)"));
    }
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1"));
    }
    let mut ctx = MpContext::new(precision_for(steps, STEP_GROWTH_BITS));
    let i = ctx.complex(0.0, 1.0);
    let mut prev: MpComplex = ctx.real(0.0);
    let mut cur = ctx.exp_i_pi(c / 4.0);
    let mut alphas = Vec::with_capacity(steps + 1);
    let mut drift = Vec::with_capacity(steps + 1);
    alphas.push(c * core::f64::consts::FRAC_PI_4);
    drift.push(0.0);
    for n in 0..steps {
        let next = step(c, n, &prev, &cur, &i);
        let (unit, modulus) = next.normalize();
        let d = (big_to_f64(&modulus) - 1.0).abs();
        let z = unit.to_complex();
        let alpha = libm::atan2(z.im, z.re);
        if !(alpha > 0.0 && alpha < FRAC_PI_2) || !(d <= MAX_DRIFT) {
            return Err(Error::BranchLoss {
                n: n + 1,
                alpha,
                drift: d,
            });
        }
        alphas.push(alpha);
        drift.push(d);
        prev = cur;
        cur = unit;
    }
    Ok(PainleveSolution { c, alphas, drift })
}

/// Defect of the equation at `n` (`0 <= n < steps`), divided by the
/// largest of its three terms.
pub fn dpii_residual(sol: &PainleveSolution, n: usize) -> Result<f64> {
    let (Some(u), Some(w)) = (sol.u(n), sol.u(n + 1)) else {
        return Err(Error::InsufficientData {
            needed: n + 2,
            available: sol.alphas.len(),
        });
    };
    let i = Complex::i();
    let u2 = u * u;
    let t1 = (n + 1) as f64 * (u2 - 1.0) * (w - i * u) / (i + u * w);
    let t2 = match n {
        0 => Complex::new(0.0, 0.0),
        _ => {
            let v = sol.u(n - 1).expect("n - 1 < n");
            n as f64 * (u2 + 1.0) * (v + i * u) / (i + v * u)
        }
    };
    let rhs = sol.c * u;
    let scale = t1.norm().max(t2.norm()).max(rhs.norm());
    let defect = (t1 - t2 - rhs).norm();
    Ok(if scale > 0.0 { defect / scale } else { defect })
}

/// Half the argument of `(f(n,n+1) - f(n,n)) / (f(n+1,n) - f(n,n))`.
pub fn alpha_from_lattice(lat: &ConformalLattice, n: usize, tol: &ToleranceConfig) -> Result<f64> {
    let center = LatticeIndex::new(n, n);
    let up = LatticeIndex::new(n, n + 1);
    let right = LatticeIndex::new(n + 1, n);
    let o = lat.finite_at(center)?;
    let a = lat.finite_at(up)? - o;
    let b = lat.finite_at(right)? - o;
    let scale = o.norm().max(1.0);
    for (edge, to) in [(a, up), (b, right)] {
        if edge.norm() <= tol.degenerate_tol * scale {
            return Err(Error::ZeroEdge { from: center, to });
        }
    }
    Ok((a / b).arg() / 2.0)
}
