//! Synthetic user-generated content: optional sensor-like noise followed by
//! a lossy pass through the patch codec.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::codec::{PatchCodec, PatchDims, QualityValue};
use crate::{Error, Frame, FrameSet, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    /// Quality of the lossy pass; low values leave heavy artifacts.
    pub severity: QualityValue,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(severity: QualityValue, noise_sigma: f64, seed: u64) -> Result<Self> {
        if !noise_sigma.is_finite() || noise_sigma < 0.0 {
            return Err(Error::BadNoiseSigma(noise_sigma));
        }
        Ok(Self {
            severity,
            noise_sigma,
            seed,
        })
    }
}

/// Uniform in `(0, 1]`.
fn unit_open(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn add_noise(samples: &mut [u8], sigma: f64, seed: u64, stream: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut spare: Option<f64> = None;
    for s in samples.iter_mut() {
        let g = match spare.take() {
            Some(g) => g,
            None => {
                // Box-Muller, two normals per draw
                let r = libm::sqrt(-2.0 * libm::log(unit_open(&mut rng)));
                let theta = 2.0 * core::f64::consts::PI * unit_open(&mut rng);
                spare = Some(r * libm::sin(theta));
                r * libm::cos(theta)
            }
        };
        let v = f64::from(*s) + sigma * g;
        *s = libm::round(v).clamp(0.0, 255.0) as u8;
    }
}

/// Degrades one frame. `stream` selects the noise substream so frames can
/// be processed in any order.
pub fn synthesize_frame(codec: &PatchCodec, frame: &Frame, spec: &SynthSpec, stream: u64) -> Result<Frame> {
    let mut samples = frame.samples().to_vec();
    if spec.noise_sigma > 0.0 {
        add_noise(&mut samples, spec.noise_sigma, spec.seed, stream);
    }
    let dims = PatchDims::new(frame.width(), frame.height())?;
    let enc = codec.encode(&samples, dims, spec.severity)?;
    Frame::new(frame.width(), frame.height(), enc.recon)
}

/// Degrades every frame; frame `i` uses noise substream `source_indices[i]`.
pub fn synthesize_ugc(pristine: &FrameSet, spec: &SynthSpec) -> Result<FrameSet> {
    let codec = PatchCodec::new();
    let frames = pristine
        .frames()
        .iter()
        .zip(pristine.source_indices())
        .map(|(f, &idx)| synthesize_frame(&codec, f, spec, idx as u64))
        .collect::<Result<Vec<_>>>()?;
    FrameSet::with_indices(frames, pristine.source_indices().to_vec())
}

/// Deterministic natural-looking test content: a lit gradient background,
/// soft blobs, windowed oriented texture and faint grain. Frame `t` pans
/// the scene by a few pixels so frames differ.
pub fn procedural_frames(width: usize, height: usize, count: usize, seed: u64) -> Result<FrameSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = move |lo: f64, hi: f64| lo + (hi - lo) * unit_open(&mut rng);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..12)
        .map(|_| (uniform(0.0, 1.0), uniform(0.0, 1.0), uniform(0.04, 0.18), uniform(-70.0, 70.0)))
        .collect();
    let waves: Vec<(f64, f64, f64, f64)> = (0..5)
        .map(|_| (uniform(0.05, 0.6), uniform(0.0, core::f64::consts::PI), uniform(1.0, 3.0), uniform(0.0, 6.0)))
        .collect();
    let grain_seed = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let (w, h) = (width as f64, height as f64);
    let frames = (0..count)
        .map(|t| {
            let shift = 3.0 * t as f64;
            Frame::from_fn(width, height, |px, py| {
                let x = px as f64 + shift;
                let y = py as f64 + 0.5 * shift;
                let (u, v) = (x / w, y / h);
                let mut val = 90.0 + 70.0 * u + 40.0 * libm::sin(3.0 * v + 1.0);
                for &(cx, cy, r, amp) in &blobs {
                    let d2 = ((u - cx) * (u - cx) + (v - cy) * (v - cy) * (h / w) * (h / w)) / (r * r);
                    val += amp * libm::exp(-1.5 * d2);
                }
                for &(freq, angle, amp, phase) in &waves {
                    let along = x * libm::cos(angle) + y * libm::sin(angle);
                    // texture confined to a soft window so regions differ
                    let window = 0.5 + 0.5 * libm::sin(u * 5.0 + phase) * libm::cos(v * 4.0 - phase);
                    val += amp * window * libm::sin(freq * along + phase);
                }
                let mut hsh = (px as u64 + 7919 * (py as u64) + 104_729 * t as u64) ^ grain_seed;
                hsh = hsh.wrapping_mul(0xbf58_476d_1ce4_e5b9);
                hsh ^= hsh >> 31;
                hsh = hsh.wrapping_mul(0x94d0_49bb_1331_11eb);
                hsh ^= hsh >> 29;
                val += (hsh % 1000) as f64 / 1000.0 - 0.5;
                libm::round(val).clamp(0.0, 255.0) as u8
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSet::new(frames)
}
