//! Scalars used by the propagation kernels.
//!
//! Forward propagation of the lattice and of discrete Painlevé II amplifies
//! rounding error geometrically (by `3 + 2√2` per diagonal step), so the
//! kernels run on a multiprecision complex type and only the final values
//! are rounded to binary64.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use crate::numerics::Complex;

const RM: RoundingMode = RoundingMode::ToEven;

/// Field operations needed by the propagation kernels.
pub(crate) trait Scalar: Clone {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    /// Multiplication by a real that is exactly representable in binary64.
    fn scale(&self, k: f64) -> Self;
    /// The value rounded to binary64.
    fn to_complex(&self) -> Complex;
    /// A real constant at the precision of `self`.
    fn real_like(&self, x: f64) -> Self;

    fn norm(&self) -> f64 {
        self.to_complex().norm()
    }
}

impl Scalar for Complex {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn scale(&self, k: f64) -> Self {
        self * k
    }
    fn to_complex(&self) -> Complex {
        *self
    }
    fn real_like(&self, x: f64) -> Self {
        Complex::new(x, 0.0)
    }
}

/// Working precision in bits needed to keep `steps` amplifications by
/// `growth_bits` bits each well above binary64 accuracy.
pub(crate) fn precision_for(steps: usize, growth_bits: f64) -> usize {
    let bits = 128.0 + growth_bits * steps as f64;
    let bits = libm::ceil(bits) as usize;
    // whole 64-bit words
    bits.div_ceil(64) * 64
}

/// Rounds a multiprecision real to the nearest binary64 (within one ulp).
pub(crate) fn big_to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    match x.as_raw_parts() {
        Some((words, _, sign, exponent, _)) => {
            let Some(&top) = words.last() else {
                return 0.0;
            };
            if top == 0 {
                return 0.0;
            }
            // value = 0.mantissa * 2^exponent with the top word holding the
            // most significant bits.
            let v = libm::ldexp(top as f64, exponent - 64);
            match sign {
                Sign::Pos => v,
                Sign::Neg => -v,
            }
        }
        None => 0.0,
    }
}

#[derive(Clone, Debug)]
pub(crate) struct MpComplex {
    re: BigFloat,
    im: BigFloat,
    prec: usize,
}

impl MpComplex {
    pub fn from_f64(re: f64, im: f64, prec: usize) -> Self {
        MpComplex {
            re: BigFloat::from_f64(re, prec),
            im: BigFloat::from_f64(im, prec),
            prec,
        }
    }

    pub fn from_parts(re: BigFloat, im: BigFloat, prec: usize) -> Self {
        MpComplex { re, im, prec }
    }

    pub fn re(&self) -> &BigFloat {
        &self.re
    }

    pub fn norm_sqr_big(&self) -> BigFloat {
        let p = self.prec;
        self.re
            .mul(&self.re, p, RM)
            .add(&self.im.mul(&self.im, p, RM), p, RM)
    }

    /// `self / |self|`.
    pub fn normalize(&self) -> (Self, BigFloat) {
        let p = self.prec;
        let modulus = self.norm_sqr_big().sqrt(p, RM);
        let unit = MpComplex {
            re: self.re.div(&modulus, p, RM),
            im: self.im.div(&modulus, p, RM),
            prec: p,
        };
        (unit, modulus)
    }
}

impl Scalar for MpComplex {
    fn add(&self, o: &Self) -> Self {
        let p = self.prec;
        MpComplex {
            re: self.re.add(&o.re, p, RM),
            im: self.im.add(&o.im, p, RM),
            prec: p,
        }
    }

    fn sub(&self, o: &Self) -> Self {
        let p = self.prec;
        MpComplex {
            re: self.re.sub(&o.re, p, RM),
            im: self.im.sub(&o.im, p, RM),
            prec: p,
        }
    }

    fn mul(&self, o: &Self) -> Self {
        let p = self.prec;
        let ac = self.re.mul(&o.re, p, RM);
        let bd = self.im.mul(&o.im, p, RM);
        let ad = self.re.mul(&o.im, p, RM);
        let bc = self.im.mul(&o.re, p, RM);
        MpComplex {
            re: ac.sub(&bd, p, RM),
            im: ad.add(&bc, p, RM),
            prec: p,
        }
    }

    fn div(&self, o: &Self) -> Self {
        let p = self.prec;
        let den = o.norm_sqr_big();
        let ac = self.re.mul(&o.re, p, RM);
        let bd = self.im.mul(&o.im, p, RM);
        let bc = self.im.mul(&o.re, p, RM);
        let ad = self.re.mul(&o.im, p, RM);
        MpComplex {
            re: ac.add(&bd, p, RM).div(&den, p, RM),
            im: bc.sub(&ad, p, RM).div(&den, p, RM),
            prec: p,
        }
    }

    fn scale(&self, k: f64) -> Self {
        let p = self.prec;
        let k = BigFloat::from_f64(k, p);
        MpComplex {
            re: self.re.mul(&k, p, RM),
            im: self.im.mul(&k, p, RM),
            prec: p,
        }
    }

    fn to_complex(&self) -> Complex {
        Complex::new(big_to_f64(&self.re), big_to_f64(&self.im))
    }

    fn real_like(&self, x: f64) -> Self {
        MpComplex::from_f64(x, 0.0, self.prec)
    }
}

/// Constants and transcendental seeds at a fixed working precision.
pub(crate) struct MpContext {
    prec: usize,
    consts: Consts,
}

impl MpContext {
    pub fn new(prec: usize) -> Self {
        MpContext {
            prec,
            consts: Consts::new().expect("astro-float constant cache"),
        }
    }

    pub fn real(&self, x: f64) -> MpComplex {
        MpComplex::from_f64(x, 0.0, self.prec)
    }

    pub fn complex(&self, re: f64, im: f64) -> MpComplex {
        MpComplex::from_f64(re, im, self.prec)
    }

    pub fn pi(&mut self) -> BigFloat {
        self.consts.pi(self.prec, RM)
    }

    /// `exp(i * pi * t)` for a binary64 `t`, correct to the working precision.
    pub fn exp_i_pi(&mut self, t: f64) -> MpComplex {
        let p = self.prec;
        let angle = self.pi().mul(&BigFloat::from_f64(t, p), p, RM);
        MpComplex {
            re: angle.cos(p, RM, &mut self.consts),
            im: angle.sin(p, RM, &mut self.consts),
            prec: p,
        }
    }
}
