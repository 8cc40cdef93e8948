//! Behavior of the radii, edge variables, diagonal and Painlevé angles at
//! infinity.
//!
//! Every check pairs a threshold on the final deviation with a monotone
//! decrease requirement, so a wrong limit cannot pass by accident.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::lattice::{ConformalLattice, LatticeKind};
use crate::painleve::PainleveSolution;
use crate::radii::{EdgeRatioField, Radius, RadiusField, SublatticeLabel};

/// Smallest `M_max` (or `n`) accepted by the fits.
pub const MIN_SAMPLES: usize = 50;

/// Slack allowed in monotone-decrease comparisons (rounding noise on
/// deviations that are already at the binary64 floor).
const MONOTONE_SLACK: f64 = 1e-12;

fn non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK)
}

/// The linear system `x' = 5x - 2y + (c-1)/n`, `y' = -2x + y` governing
/// the edge variables along a column for large `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedModel {
    pub c: f64,
}

impl LinearizedModel {
    pub const MATRIX: [[f64; 2]; 2] = [[5.0, -2.0], [-2.0, 1.0]];

    pub fn new(c: f64) -> Self {
        LinearizedModel { c }
    }

    pub fn trace() -> f64 {
        Self::MATRIX[0][0] + Self::MATRIX[1][1]
    }

    pub fn determinant() -> f64 {
        let m = Self::MATRIX;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Roots `λ1 < 1 < λ2` of the characteristic polynomial.
    pub fn eigenvalues() -> (f64, f64) {
        let (t, d) = (Self::trace(), Self::determinant());
        let disc = libm::sqrt(t * t / 4.0 - d);
        (t / 2.0 - disc, t / 2.0 + disc)
    }

    /// Eigenvectors for `λ1` and `λ2`: `(1, 1 + √2)` and `(1, 1 - √2)`.
    pub fn eigenvectors() -> [[f64; 2]; 2] {
        [[1.0, 1.0 + SQRT_2], [1.0, 1.0 - SQRT_2]]
    }

    /// Inhomogeneous term of the `x` equation.
    pub fn forcing(&self, n: f64) -> f64 {
        (self.c - 1.0) / n
    }

    /// The forcing in eigen-coordinates: `(2 - √2, 2 + √2)(c - 1)/(4n)`.
    pub fn diagonal_forcing(&self, n: f64) -> (f64, f64) {
        let k = (self.c - 1.0) / (4.0 * n);
        ((2.0 - SQRT_2) * k, (2.0 + SQRT_2) * k)
    }

    /// Leading `1/n` terms of the decaying solution in eigen-coordinates.
    pub fn leading_eigen(&self, n: f64) -> (f64, f64) {
        let (l1, l2) = Self::eigenvalues();
        let (s1, s2) = self.diagonal_forcing(n);
        (s1 / (1.0 - l1), -s2 / (l2 - 1.0))
    }

    /// Leading `(x_n, y_n)` mapped back from eigen-coordinates.
    pub fn leading_xy(&self, n: f64) -> (f64, f64) {
        let (a, b) = self.leading_eigen(n);
        let [v1, v2] = Self::eigenvectors();
        (v1[0] * a + v2[0] * b, v1[1] * a + v2[1] * b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEntry {
    pub label: SublatticeLabel,
    pub x: f64,
    /// `Y` at the label above.
    pub y_up: f64,
    /// `(c - 1)/(M - N)`
    pub epsilon: f64,
    /// `(c - 1)/(M + N + 1)`
    pub delta: f64,
    /// Slacks of the four inequalities; negative means violated.
    pub x_lower_slack: f64,
    pub x_upper_slack: f64,
    pub y_lower_slack: f64,
    pub y_upper_slack: f64,
}

impl BoundEntry {
    pub fn min_slack(&self) -> f64 {
        self.x_lower_slack
            .min(self.x_upper_slack)
            .min(self.y_lower_slack)
            .min(self.y_upper_slack)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub c: f64,
    pub entries: Vec<BoundEntry>,
    pub violations: Vec<SublatticeLabel>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For `c > 1`, at every interior label where `X` and `Y` one step up are
/// known:
///
/// ```text
/// -(c-1)/(M-N) <= X(N,M) <= (c-1)/(M+N)
/// 0 <= Y(N,M+1) <= (c-1)/(M+N) + 2(c-1)/(M-N)
/// ```
///
/// each up to `abs_tol`.
pub fn check_lemma_bounds(xy: &EdgeRatioField, abs_tol: f64) -> Result<BoundReport> {
    let c = xy.c();
    if !(c > 1.0) {
        return Err(Error::InvalidParameter("bounds are stated for c > 1"));
    }
    let mut entries = Vec::new();
    let mut violations = Vec::new();
    for z in xy.x_labels() {
        if !z.is_interior() {
            continue;
        }
        let (Some(x), Some(y_up)) = (xy.x(z), xy.y(z.shifted(0, 1))) else {
            continue;
        };
        let (big_n, big_m) = (z.re as f64, z.im as f64);
        let epsilon = (c - 1.0) / (big_m - big_n);
        let upper = (c - 1.0) / (big_m + big_n);
        let entry = BoundEntry {
            label: z,
            x,
            y_up,
            epsilon,
            delta: (c - 1.0) / (big_m + big_n + 1.0),
            x_lower_slack: x + epsilon,
            x_upper_slack: upper - x,
            y_lower_slack: y_up,
            y_upper_slack: upper + 2.0 * epsilon - y_up,
        };
        if !(entry.min_slack() >= -abs_tol) {
            violations.push(z);
        }
        entries.push(entry);
    }
    Ok(BoundReport {
        c,
        entries,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFit {
    pub c: f64,
    pub n0: i64,
    /// `(M, K_M)` with `K_M = R(N0 + iM) M^(1-c)`.
    pub samples: Vec<(i64, f64)>,
    /// `K_M` at `M_max`.
    pub k_estimate: f64,
    /// One Richardson step eliminating the `1/M` term between `M_max` and
    /// `M_max / 2`.
    pub k_extrapolated: f64,
    /// Largest relative defect of
    /// `R(N0 + i(M0+n)) = R(N0 + iM0) prod_{k<=n} (2k + c - 1)/(2k - c + 1)`,
    /// `M0 = |N0|`; `None` when the base radius is zero or a line.
    pub product_defect: Option<f64>,
}

impl AsymptoticFit {
    pub fn k_at(&self, m: i64) -> Option<f64> {
        self.samples.iter().find(|s| s.0 == m).map(|s| s.1)
    }

    /// `|K_b - K_a| / K_b`.
    pub fn relative_change(&self, a: i64, b: i64) -> Option<f64> {
        let (ka, kb) = (self.k_at(a)?, self.k_at(b)?);
        Some((kb - ka).abs() / kb)
    }
}

/// Growth constant of the column `N0` from `M = |N0| + 1` up to `m_max`.
pub fn fit_radius_growth(field: &RadiusField, n0: i64, m_max: usize) -> Result<AsymptoticFit> {
    let c = field.c();
    let column: Vec<(i64, Radius)> = field.column(n0).collect();
    let available = column.last().map_or(0, |&(m, _)| m.max(0) as usize);
    if m_max < MIN_SAMPLES || available < m_max {
        return Err(Error::InsufficientData {
            needed: m_max.max(MIN_SAMPLES),
            available,
        });
    }
    let m_max = m_max as i64;
    let samples: Vec<(i64, f64)> = column
        .iter()
        .filter(|&&(m, _)| m >= 1 && m > n0.abs() && m <= m_max)
        .filter_map(|&(m, r)| Some((m, r.finite()? * libm::pow(m as f64, 1.0 - c))))
        .collect();
    let k_of = |m: i64| samples.iter().find(|s| s.0 == m).map(|s| s.1);
    let (Some(k_estimate), Some(k_half)) = (k_of(m_max), k_of(m_max / 2)) else {
        return Err(Error::InsufficientData {
            needed: m_max as usize,
            available: samples.len(),
        });
    };
    let (m1, m2) = (m_max as f64, (m_max / 2) as f64);
    let k_extrapolated = (m1 * k_estimate - m2 * k_half) / (m1 - m2);

    let m0 = n0.abs();
    let product_defect = match column.first() {
        Some(&(_, Radius::Finite(base))) if base > 0.0 => {
            let mut model = base;
            let mut worst: f64 = 0.0;
            for &(m, r) in column.iter().skip(1).take_while(|&&(m, _)| m <= m_max) {
                let k = (m - m0) as f64;
                model *= (2.0 * k + c - 1.0) / (2.0 * k - c + 1.0);
                if let Some(r) = r.finite() {
                    worst = worst.max((model / r - 1.0).abs());
                }
            }
            Some(worst)
        }
        _ => None,
    };
    Ok(AsymptoticFit {
        c,
        n0,
        samples,
        k_estimate,
        k_extrapolated,
        product_defect,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XySample {
    pub n: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct XyDecayReport {
    pub c: f64,
    pub n0: i64,
    /// `(x_n, y_n) = (X, Y)` at `N0 + i(N0 + n)`.
    pub samples: Vec<XySample>,
    /// `(c - 1)/2`
    pub target: f64,
    /// `(n, |n y_n - (c-1)/2|)` every 50 samples, ending at the last one.
    pub checkpoints: Vec<(usize, f64)>,
    pub threshold: f64,
    /// `max |n² x_n|` over the lower and upper halves of `[50, n_max]`.
    pub n2x_lower: f64,
    pub n2x_upper: f64,
    pub within_threshold: bool,
    pub decreasing: bool,
    pub bounded: bool,
}

impl XyDecayReport {
    pub fn passed(&self) -> bool {
        self.within_threshold && self.decreasing && self.bounded
    }

    pub fn final_deviation(&self) -> f64 {
        self.checkpoints.last().map_or(f64::NAN, |c| c.1)
    }
}

/// `n y_n -> (c-1)/2` and `n² x_n` bounded along the column `N0`.
///
/// `n² x_n` counts as bounded when its maximum over the upper half of the
/// sampled range is at most 1.5 times the maximum over the lower half; a
/// `1/n` decay of `x_n` would double it.
pub fn check_xy_decay(xy: &EdgeRatioField, n0: i64) -> Result<XyDecayReport> {
    let c = xy.c();
    let m0 = n0.abs();
    let mut samples = Vec::new();
    for n in 1usize.. {
        let z = SublatticeLabel::new(n0, m0 + n as i64);
        let (Some(x), Some(y)) = (xy.x(z), xy.y(z)) else {
            break;
        };
        samples.push(XySample { n, x, y });
    }
    let n_max = samples.len();
    if n_max < 2 * MIN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: 2 * MIN_SAMPLES,
            available: n_max,
        });
    }
    let target = (c - 1.0) / 2.0;
    let deviation = |s: &XySample| (s.n as f64 * s.y - target).abs();
    let mut checkpoints: Vec<(usize, f64)> = (MIN_SAMPLES..n_max)
        .step_by(MIN_SAMPLES)
        .map(|n| (n, deviation(&samples[n - 1])))
        .collect();
    checkpoints.push((n_max, deviation(&samples[n_max - 1])));
    let mid = (MIN_SAMPLES + n_max) / 2;
    let n2x = |s: &XySample| (s.n as f64 * s.n as f64 * s.x).abs();
    let n2x_lower = samples[MIN_SAMPLES - 1..mid]
        .iter()
        .map(n2x)
        .fold(0.0, f64::max);
    let n2x_upper = samples[mid..].iter().map(n2x).fold(0.0, f64::max);
    let threshold = 0.05 * (c - 1.0).abs();
    let devs: Vec<f64> = checkpoints.iter().map(|c| c.1).collect();
    Ok(XyDecayReport {
        c,
        n0,
        samples,
        target,
        within_threshold: devs[devs.len() - 1] <= threshold,
        decreasing: non_increasing(&devs),
        bounded: n2x_upper <= 1.5 * n2x_lower + MONOTONE_SLACK,
        checkpoints,
        threshold,
        n2x_lower,
        n2x_upper,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalReport {
    pub c: f64,
    pub offset: (usize, usize),
    /// `(n, arg f, |f| n^(-c))` along `f(n0 + n, m0 + n)`, `n >= 1`.
    pub samples: Vec<(usize, f64, f64)>,
    /// `(n, |arg f - cπ/4|)` at quarters of the sampled range.
    pub checkpoints: Vec<(usize, f64)>,
    pub arg_threshold: f64,
    /// `|f| n^(-c)` at the last sample.
    pub modulus_constant: f64,
    /// Relative change of `|f| n^(-c)` between the middle and the end.
    pub modulus_drift: f64,
    /// `K √2 / c` for the supplied `K`, and the relative distance to it.
    pub expected_modulus: Option<f64>,
    pub modulus_mismatch: Option<f64>,
    pub within_threshold: bool,
    pub decreasing: bool,
}

impl DiagonalReport {
    pub fn passed(&self, band: f64) -> bool {
        self.within_threshold
            && self.decreasing
            && self.modulus_mismatch.map_or(true, |m| m <= band)
    }

    pub fn final_deviation(&self) -> f64 {
        self.checkpoints.last().map_or(f64::NAN, |c| c.1)
    }
}

/// `f(n0 + n, m0 + n) ≈ e^{icπ/4} K n^c √2 / c`, the constant `K` being
/// that of the radius growth when supplied.
pub fn check_diagonal_growth(
    lat: &ConformalLattice,
    n0: usize,
    m0: usize,
    k: Option<f64>,
) -> Result<DiagonalReport> {
    if lat.kind() == LatticeKind::Log {
        return Err(Error::InvalidParameter(
            "diagonal growth applies to Z^c and Z^2",
        ));
    }
    let c = lat.kind().exponent(lat.c());
    let n_max = lat.size().saturating_sub(n0.max(m0));
    if n_max < MIN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_SAMPLES,
            available: n_max,
        });
    }
    let mut samples = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let f = lat.finite_at(crate::lattice::LatticeIndex::new(n0 + n, m0 + n))?;
        samples.push((n, f.arg(), f.norm() / libm::pow(n as f64, c)));
    }
    let target = c * PI / 4.0;
    let checkpoints: Vec<(usize, f64)> = (1..=4)
        .map(|q| {
            let n = n_max * q / 4;
            (n, (samples[n - 1].1 - target).abs())
        })
        .collect();
    let devs: Vec<f64> = checkpoints.iter().map(|c| c.1).collect();
    let modulus_constant = samples[n_max - 1].2;
    let mid = samples[n_max / 2 - 1].2;
    let expected_modulus = k.map(|k| k * SQRT_2 / c);
    let arg_threshold = 0.02;
    Ok(DiagonalReport {
        c,
        offset: (n0, m0),
        within_threshold: devs[3] < arg_threshold,
        decreasing: non_increasing(&devs),
        modulus_drift: (modulus_constant - mid).abs() / modulus_constant,
        modulus_mismatch: expected_modulus.map(|e| (modulus_constant - e).abs() / e),
        expected_modulus,
        modulus_constant,
        samples,
        checkpoints,
        arg_threshold,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PainleveAsymptoteReport {
    pub c: f64,
    /// `|tan α_n (1 + 1/n)^(1-c) - 1|` for `n >= 1`.
    pub deviations: Vec<f64>,
    pub threshold: f64,
    pub within_threshold: bool,
    /// Non-increasing over the last ten samples.
    pub decreasing: bool,
}

impl PainleveAsymptoteReport {
    pub fn passed(&self) -> bool {
        self.within_threshold && self.decreasing
    }

    pub fn deviation_at(&self, n: usize) -> Option<f64> {
        n.checked_sub(1)
            .and_then(|k| self.deviations.get(k))
            .copied()
    }

    pub fn final_deviation(&self) -> f64 {
        self.deviations.last().copied().unwrap_or(f64::NAN)
    }
}

/// `tan α_n ≈ (1 + 1/n)^(c-1)`.
pub fn check_painleve_asymptote(sol: &PainleveSolution) -> Result<PainleveAsymptoteReport> {
    let steps = sol.steps();
    if steps < 2 * MIN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: 2 * MIN_SAMPLES,
            available: steps,
        });
    }
    let c = sol.c();
    let deviations: Vec<f64> = (1..=steps)
        .map(|n| {
            let n_f = n as f64;
            (libm::tan(sol.alphas()[n]) * libm::pow(1.0 + 1.0 / n_f, 1.0 - c) - 1.0).abs()
        })
        .collect();
    let threshold = 0.02;
    Ok(PainleveAsymptoteReport {
        c,
        within_threshold: deviations[steps - 1] < threshold,
        decreasing: non_increasing(&deviations[steps - 10..]),
        deviations,
        threshold,
    })
}
