//! Geometric saturation detection on RD curves.
//!
//! With `U` the input, `Z` a denoised version of it and `X` any decoded
//! version of `U`, the squared distances satisfy
//!
//! ```text
//! | |X - Z|^2 - |U - Z|^2 |  <=  |X - U|^2 + 2 |X - U| |U - Z|
//! ```
//!
//! As the rate grows and `X` approaches `U`, the distance to `Z` stops
//! improving and settles near `|U - Z|^2`. The detector marks the start of
//! that plateau on the `Z`-reference curve as the largest lambda whose whole
//! low-lambda prefix stays inside the band `|U - Z|^2 +- d_best`, where
//! `d_best` is the smallest reachable `|X - U|^2`. The rate at that point
//! caps the rate of the ordinary `U`-reference encoder, which gives the
//! smallest lambda (and QP) worth encoding with.

use alloc::vec::Vec;

use crate::rdo::{QvPoint, RdCurve, Reference};
use crate::{Error, Result};

/// Scale of the QP -> lambda map `0.852 * 2^((QP - 12) / 3)`.
pub const LAMBDA_QP_SCALE: f64 = 0.852;
pub const QP_MAX: u8 = 51;

pub fn qp_to_lambda(qp: i64) -> Result<f64> {
    if !(0..=i64::from(QP_MAX)).contains(&qp) {
        return Err(Error::QpOutOfRange(qp));
    }
    Ok(LAMBDA_QP_SCALE * libm::exp2((qp - 12) as f64 / 3.0))
}

/// Nearest QP for `lambda`, clamped to `0..=51`.
pub fn lambda_to_qp(lambda: f64) -> Result<u8> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::BadLambda(lambda));
    }
    let qp = libm::round(12.0 + 3.0 * libm::log2(lambda / LAMBDA_QP_SCALE));
    Ok(qp.clamp(0.0, f64::from(QP_MAX)) as u8)
}

/// The 52-point grid `lambda(QP)` for `QP = 0..=51`, ascending.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=i64::from(QP_MAX))
        .map(|qp| qp_to_lambda(qp).expect("in range"))
        .collect()
}

/// Whether the squared distances of a triple `(X, U, Z)` obey the
/// triangle-type bound above. A relative slack of `1e-12` absorbs rounding
/// in the square roots.
pub fn geometric_bound(x_minus_z_sq: f64, u_minus_z_sq: f64, x_minus_u_sq: f64) -> Result<bool> {
    let all = [x_minus_z_sq, u_minus_z_sq, x_minus_u_sq];
    if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NegativeDistortion);
    }
    let lhs = libm::fabs(x_minus_z_sq - u_minus_z_sq);
    let rhs = x_minus_u_sq + 2.0 * libm::sqrt(x_minus_u_sq) * libm::sqrt(u_minus_z_sq);
    let slack = 1e-12 * (x_minus_z_sq + u_minus_z_sq + x_minus_u_sq);
    Ok(lhs <= rhs + slack)
}

/// Where `d_best` is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundSource {
    /// `|X - U|^2` of the `U`-reference solution at the smallest lambda.
    /// Near zero when `U` came out of the same codec, which empties the band.
    USweep,
    /// `|X - U|^2` of the `Z`-reference solution at the smallest lambda.
    #[default]
    ZSweep,
}

impl core::fmt::Display for BoundSource {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            BoundSource::USweep => "u-sweep",
            BoundSource::ZSweep => "z-sweep",
        })
    }
}

/// Band used by the detector, all values as SSE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationBounds {
    /// `|U - Z|^2`
    pub d_uz: u64,
    /// Smallest reachable `|X - U|^2`, at `lambda_min`.
    pub d_best: u64,
    /// Outer radius squared, `d_uz + d_best`.
    pub delta_sq: u64,
    /// Inner radius squared, `d_uz - d_best`; negative when the inner
    /// circle does not exist.
    pub small_delta_sq: i64,
    /// Smallest lambda of the grid the bound was taken from.
    pub lambda_min: f64,
    pub source: BoundSource,
}

impl SaturationBounds {
    pub fn new(d_uz: u64, d_best: u64, lambda_min: f64, source: BoundSource) -> Self {
        Self {
            d_uz,
            d_best,
            delta_sq: d_uz + d_best,
            small_delta_sq: d_uz as i64 - d_best as i64,
            lambda_min,
            source,
        }
    }

    /// Takes `d_best` from the first point of the curve named by `source`.
    pub fn from_curves(curve_u: &RdCurve, curve_z: &RdCurve, d_uz: u64, source: BoundSource) -> Result<Self> {
        check_pair(curve_u, curve_z)?;
        let first = match source {
            BoundSource::USweep => &curve_u.points[0],
            BoundSource::ZSweep => &curve_z.points[0],
        };
        Ok(Self::new(d_uz, first.sse_vs_u, first.lambda, source))
    }

    /// Whether a distance-to-`Z` lies in the band `d_uz +- d_best`.
    #[inline]
    pub fn contains(&self, sse_vs_z: u64) -> bool {
        sse_vs_z.abs_diff(self.d_uz) <= self.d_best
    }
}

fn check_pair(curve_u: &RdCurve, curve_z: &RdCurve) -> Result<()> {
    if curve_u.is_empty() || curve_z.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    if curve_u.reference != Reference::U || curve_z.reference != Reference::Z {
        return Err(Error::BadTable("curves passed with swapped references"));
    }
    if !curve_u.same_grid(curve_z) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Grid index whose `|X - U|^2` is nearest `4 |U - Z|^2`, the approximate
/// switch from quadratic to linear decay. Ties go to the smaller lambda.
pub fn transition_estimate(curve_u: &RdCurve, d_uz: u64) -> Result<usize> {
    if curve_u.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let target = 4 * d_uz;
    let mut best = 0;
    let mut best_gap = u64::MAX;
    for (i, p) in curve_u.points.iter().enumerate() {
        let gap = p.sse_vs_u.abs_diff(target);
        if gap < best_gap {
            best = i;
            best_gap = gap;
        }
    }
    Ok(best)
}

/// Index of `lambda*_Z`: the last grid point of the longest prefix (from
/// `lambda_min`) whose distances to `Z` all stay in the band. `None` when
/// the very first point is already outside.
pub fn detect_lambda_z(curve_z: &RdCurve, bounds: &SaturationBounds) -> Result<Option<usize>> {
    let first = curve_z.points.first().ok_or(Error::TooFewPoints { needed: 1, got: 0 })?;
    if first.lambda != bounds.lambda_min {
        return Err(Error::GridMismatch);
    }
    let inside = curve_z
        .points
        .iter()
        .take_while(|p| bounds.contains(p.sse_vs_z))
        .count();
    Ok(inside.checked_sub(1))
}

/// Index of `lambda*_U`: the smallest lambda from which every larger grid
/// lambda codes at no more than `saturation_rate_bits`.
pub fn detect_lambda_u(curve_u: &RdCurve, saturation_rate_bits: u64) -> Result<usize> {
    let last = curve_u.points.last().ok_or(Error::TooFewPoints { needed: 1, got: 0 })?;
    if last.total_rate_bits > saturation_rate_bits {
        return Err(Error::RateBelowCurve {
            threshold: saturation_rate_bits,
            min_rate: last.total_rate_bits,
        });
    }
    let mut start = curve_u.points.len() - 1;
    while start > 0 && curve_u.points[start - 1].total_rate_bits <= saturation_rate_bits {
        start -= 1;
    }
    Ok(start)
}

/// Fixed-quality variant: index of the smallest quality value `QV*` such
/// that every `QV >= QV*` keeps `| |X - Z|^2 - |U - Z|^2 |` within the
/// `|X - U|^2` reached at the largest quality. `None` if even the largest
/// quality falls outside.
pub fn detect_qv_star(points: &[QvPoint], d_uz: u64) -> Result<Option<usize>> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    if points.windows(2).any(|w| w[0].qv >= w[1].qv) {
        return Err(Error::BadQualityList);
    }
    let bound = points[points.len() - 1].sse_vs_u;
    let inside = points
        .iter()
        .rev()
        .take_while(|p| p.sse_vs_z.abs_diff(d_uz) <= bound)
        .count();
    Ok(if inside == 0 { None } else { Some(points.len() - inside) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Detected,
    NoSaturationInRange,
    /// `Z` equals `U`, so the band collapses and the result carries no
    /// information about saturation.
    DegenerateReference,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Detected => "detected",
            Verdict::NoSaturationInRange => "no-saturation-in-range",
            Verdict::DegenerateReference => "degenerate-reference",
        }
    }
}

impl core::fmt::Display for Verdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaturationResult {
    pub verdict: Verdict,
    pub lambda_star_z: Option<f64>,
    pub lambda_star_z_index: Option<usize>,
    /// Total rate of the `Z`-reference solution at `lambda*_Z`.
    pub saturation_rate_bits: Option<u64>,
    pub lambda_star_u: Option<f64>,
    pub lambda_star_u_index: Option<usize>,
    pub qp_star: Option<u8>,
    pub bounds: SaturationBounds,
    /// Diagnostic: grid index of the estimated quadratic/linear transition.
    pub transition_index: usize,
}

/// Runs both detectors on a pair of curves swept on the same grid.
///
/// Outcomes that carry no usable saturation point are reported through the
/// verdict rather than as errors.
pub fn analyze(curve_u: &RdCurve, curve_z: &RdCurve, d_uz: u64, source: BoundSource) -> Result<SaturationResult> {
    let bounds = SaturationBounds::from_curves(curve_u, curve_z, d_uz, source)?;
    let transition_index = transition_estimate(curve_u, d_uz)?;
    let z_index = detect_lambda_z(curve_z, &bounds)?;
    let saturation_rate_bits = z_index.map(|i| curve_z.points[i].total_rate_bits);
    let u_index = match saturation_rate_bits {
        Some(rate) => match detect_lambda_u(curve_u, rate) {
            Ok(i) => Some(i),
            Err(Error::RateBelowCurve { .. }) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    let lambda_star_u = u_index.map(|i| curve_u.points[i].lambda);
    let qp_star = lambda_star_u.map(lambda_to_qp).transpose()?;
    let verdict = if d_uz == 0 {
        Verdict::DegenerateReference
    } else if u_index.is_some() {
        Verdict::Detected
    } else {
        Verdict::NoSaturationInRange
    };
    Ok(SaturationResult {
        verdict,
        lambda_star_z: z_index.map(|i| curve_z.points[i].lambda),
        lambda_star_z_index: z_index,
        saturation_rate_bits,
        lambda_star_u,
        lambda_star_u_index: u_index,
        qp_star,
        bounds,
        transition_index,
    })
}
