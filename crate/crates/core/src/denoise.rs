//! Built-in denoisers producing the reference `Z` from the input `U`.
//!
//! Externally denoised frames are loaded by the IO layer; this module only
//! validates them against the input.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::frame::BLOCK;
use crate::{Error, Frame, FrameSet, Result};

/// How the denoised reference is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum DenoiserSpec {
    /// Smooths pixel pairs straddling 8-aligned block edges whose
    /// difference is below `strength`.
    Deblock { strength: f64 },
    /// Separable Gaussian blur with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Frames produced by an outside tool, one path per frame.
    External { paths: Vec<String> },
}

impl DenoiserSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DenoiserSpec::Deblock { strength: s } | DenoiserSpec::Gaussian { sigma: s } => {
                if !s.is_finite() || *s < 0.0 {
                    return Err(Error::BadDenoiser(format!("strength must be finite and >= 0, got {s}")));
                }
            }
            DenoiserSpec::External { paths } => {
                if paths.is_empty() {
                    return Err(Error::BadDenoiser("external denoiser needs at least one frame".into()));
                }
            }
        }
        Ok(())
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self, DenoiserSpec::External { .. })
    }
}

impl core::fmt::Display for DenoiserSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DenoiserSpec::Deblock { strength } => write!(f, "deblock:{strength}"),
            DenoiserSpec::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            DenoiserSpec::External { paths } => write!(f, "external:{} frames", paths.len()),
        }
    }
}

/// Applies a built-in denoiser to one frame.
pub fn denoise_frame(frame: &Frame, spec: &DenoiserSpec) -> Result<Frame> {
    spec.validate()?;
    match spec {
        DenoiserSpec::Deblock { strength } => Ok(deblock(frame, *strength)),
        DenoiserSpec::Gaussian { sigma } => Ok(gaussian_blur(frame, *sigma)),
        DenoiserSpec::External { .. } => Err(Error::BadDenoiser(
            "external frames must be loaded by the caller".into(),
        )),
    }
}

/// Applies a built-in denoiser frame by frame, keeping source indices.
pub fn denoise(frames: &FrameSet, spec: &DenoiserSpec) -> Result<FrameSet> {
    let out = frames
        .frames()
        .iter()
        .map(|f| denoise_frame(f, spec))
        .collect::<Result<Vec<_>>>()?;
    FrameSet::with_indices(out, frames.source_indices().to_vec())
}

/// Checks that externally supplied reference frames line up with `u`.
pub fn check_reference(u: &FrameSet, z: &FrameSet) -> Result<()> {
    if u.len() != z.len() {
        return Err(Error::ReferenceMismatch(format!("{} input frames but {} reference frames", u.len(), z.len())));
    }
    if u.width() != z.width() || u.height() != z.height() {
        return Err(Error::ReferenceMismatch(format!(
            "input is {}x{} but reference is {}x{}",
            u.width(),
            u.height(),
            z.width(),
            z.height()
        )));
    }
    Ok(())
}

#[inline]
fn smooth_pair(a: u8, b: u8, strength: f64) -> Option<(u8, u8)> {
    let (a, b) = (u32::from(a), u32::from(b));
    if (f64::from(a) - f64::from(b)).abs() >= strength {
        return None;
    }
    // (3a + b) / 4 rounded half up
    Some((((3 * a + b + 2) / 4) as u8, ((a + 3 * b + 2) / 4) as u8))
}

/// One pass across vertical block edges, then across horizontal ones.
pub fn deblock(frame: &Frame, strength: f64) -> Frame {
    let (w, h) = (frame.width(), frame.height());
    let mut px = frame.samples().to_vec();
    for y in 0..h {
        for x in (BLOCK..w).step_by(BLOCK) {
            let (i, j) = (y * w + x - 1, y * w + x);
            if let Some((a, b)) = smooth_pair(px[i], px[j], strength) {
                px[i] = a;
                px[j] = b;
            }
        }
    }
    for y in (BLOCK..h).step_by(BLOCK) {
        for x in 0..w {
            let (i, j) = ((y - 1) * w + x, y * w + x);
            if let Some((a, b)) = smooth_pair(px[i], px[j], strength) {
                px[i] = a;
                px[j] = b;
            }
        }
    }
    Frame::new(w, h, px).expect("dimensions unchanged")
}

/// Half-sample symmetric index reflection: `.. c b a | a b c ..`.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0];
    }
    let radius = libm::ceil(3.0 * sigma) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|d| libm::exp(-((d * d) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur, radius `ceil(3 sigma)`, reflected edges,
/// rounded half up to 8 bits once at the end.
pub fn gaussian_blur(frame: &Frame, sigma: f64) -> Frame {
    let kernel = gaussian_kernel(sigma);
    if kernel.len() == 1 {
        return frame.clone();
    }
    let radius = (kernel.len() / 2) as isize;
    let (w, h) = (frame.width(), frame.height());
    let src = frame.samples();
    let mut rows = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &kv) in kernel.iter().enumerate() {
                let sx = reflect(x as isize + t as isize - radius, w);
                acc += kv * f64::from(src[y * w + sx]);
            }
            rows[y * w + x] = acc;
        }
    }
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &kv) in kernel.iter().enumerate() {
                let sy = reflect(y as isize + t as isize - radius, h);
                acc += kv * rows[sy * w + x];
            }
            out[y * w + x] = libm::floor(acc + 0.5).clamp(0.0, 255.0) as u8;
        }
    }
    Frame::new(w, h, out).expect("dimensions unchanged")
}
