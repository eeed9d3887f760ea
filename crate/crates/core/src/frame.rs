//! Luma frames, sampled frame sets and the patch grid laid over them.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Transform block edge; frame and patch sizes are multiples of it.
pub const BLOCK: usize = 8;

/// A single-plane 8-bit luma image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        let expected = width * height;
        if samples.len() != expected {
            return Err(Error::SampleCount {
                width,
                height,
                expected,
                actual: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a frame by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        check_dims(width, height)?;
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, samples)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.samples.len()
    }

    pub fn same_dims(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Copies the `w`x`h` rectangle whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = y * self.width;
            out.extend_from_slice(&self.samples[row + x0..row + x0 + w]);
        }
        out
    }
}

/// Rejects dimensions that are not positive multiples of the 8x8 block.
pub fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < BLOCK || height < BLOCK || width % BLOCK != 0 || height % BLOCK != 0 {
        return Err(Error::BadFrameDims { width, height });
    }
    Ok(())
}

/// An ordered, non-empty list of equally sized frames together with the
/// frame numbers they were taken from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSet {
    frames: Vec<Frame>,
    source_indices: Vec<usize>,
}

impl FrameSet {
    /// Wraps consecutive frames, numbering them `0..len`.
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let indices = (0..frames.len()).collect();
        Self::with_indices(frames, indices)
    }

    pub fn with_indices(frames: Vec<Frame>, source_indices: Vec<usize>) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptyFrameSet)?;
        for (index, f) in frames.iter().enumerate() {
            if !f.same_dims(first) {
                return Err(Error::MixedFrameDims {
                    index,
                    width: f.width,
                    height: f.height,
                    expected_width: first.width,
                    expected_height: first.height,
                });
            }
        }
        if source_indices.len() != frames.len() || source_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadSourceIndices);
        }
        Ok(Self {
            frames,
            source_indices,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn source_indices(&self) -> &[usize] {
        &self.source_indices
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn total_pixels(&self) -> usize {
        self.width() * self.height() * self.len()
    }

    pub fn same_shape(&self, other: &FrameSet) -> bool {
        self.len() == other.len() && self.frames[0].same_dims(&other.frames[0])
    }

    /// Picks `count` frames at positions `floor(i * total / count)`.
    pub fn sample(&self, count: usize) -> Result<FrameSet> {
        let total = self.len();
        if count == 0 || count > total {
            return Err(Error::BadSampleCount { count, total });
        }
        let mut frames = Vec::with_capacity(count);
        let mut indices = Vec::with_capacity(count);
        for pos in sample_positions(total, count) {
            frames.push(self.frames[pos].clone());
            indices.push(self.source_indices[pos]);
        }
        FrameSet::with_indices(frames, indices)
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }
}

/// Uniform sampling positions `floor(i * total / count)` for `i < count`.
pub fn sample_positions(total: usize, count: usize) -> impl Iterator<Item = usize> {
    (0..count).map(move |i| i * total / count)
}

/// Location of one patch inside a frame set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchLoc {
    pub frame: usize,
    pub row: usize,
    pub col: usize,
}

/// Partition of a frame set into equally sized, independently coded patches.
///
/// Patches are numbered in raster order: frame-major, then patch row, then
/// patch column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGrid {
    pub patch_width: usize,
    pub patch_height: usize,
    pub cols: usize,
    pub rows: usize,
    pub frames: usize,
}

impl PatchGrid {
    pub fn new(frames: &FrameSet, patch_width: usize, patch_height: usize) -> Result<Self> {
        let (width, height) = (frames.width(), frames.height());
        let bad = patch_width == 0
            || patch_height == 0
            || patch_width % BLOCK != 0
            || patch_height % BLOCK != 0
            || width % patch_width != 0
            || height % patch_height != 0;
        if bad {
            return Err(Error::BadPatchDims {
                patch_width,
                patch_height,
                width,
                height,
            });
        }
        Ok(Self {
            patch_width,
            patch_height,
            cols: width / patch_width,
            rows: height / patch_height,
            frames: frames.len(),
        })
    }

    pub fn patches_per_frame(&self) -> usize {
        self.cols * self.rows
    }

    /// Total number of patches `N` across all frames.
    pub fn total_patches(&self) -> usize {
        self.patches_per_frame() * self.frames
    }

    pub fn patch_pixels(&self) -> usize {
        self.patch_width * self.patch_height
    }

    pub fn locate(&self, k: usize) -> PatchLoc {
        let per_frame = self.patches_per_frame();
        let within = k % per_frame;
        PatchLoc {
            frame: k / per_frame,
            row: within / self.cols,
            col: within % self.cols,
        }
    }

    /// Copies patch `k` out of `set` in row-major order.
    pub fn extract(&self, set: &FrameSet, k: usize) -> Vec<u8> {
        let loc = self.locate(k);
        set.frames()[loc.frame].crop(
            loc.col * self.patch_width,
            loc.row * self.patch_height,
            self.patch_width,
            self.patch_height,
        )
    }

    /// Reassembles frames of `width`x`height` from patches in raster order.
    pub fn assemble(&self, patches: &[Vec<u8>]) -> Result<FrameSet> {
        if patches.len() != self.total_patches() || patches.iter().any(|p| p.len() != self.patch_pixels()) {
            return Err(Error::BadTable("patch count or size does not match the grid"));
        }
        let width = self.cols * self.patch_width;
        let height = self.rows * self.patch_height;
        let mut frames = Vec::with_capacity(self.frames);
        for f in 0..self.frames {
            let mut samples = vec![0u8; width * height];
            for r in 0..self.rows {
                for c in 0..self.cols {
                    let patch = &patches[(f * self.rows + r) * self.cols + c];
                    for y in 0..self.patch_height {
                        let dst = (r * self.patch_height + y) * width + c * self.patch_width;
                        let src = y * self.patch_width;
                        samples[dst..dst + self.patch_width].copy_from_slice(&patch[src..src + self.patch_width]);
                    }
                }
            }
            frames.push(Frame::new(width, height, samples)?);
        }
        FrameSet::new(frames)
    }
}
