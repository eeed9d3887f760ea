//! Rayon versions of the per-patch and per-frame passes. Results are
//! identical to the sequential ones in `satrdo_core`, whatever the pool size.

use rayon::prelude::*;

use satrdo_core::codec::{PatchCodec, PatchDims, QualityValue};
use satrdo_core::denoise::{denoise_frame, DenoiserSpec};
use satrdo_core::rdo::{check_inputs, rd_row, PatchRdTable};
use satrdo_core::synth::{synthesize_frame, SynthSpec};
use satrdo_core::{FrameSet, PatchGrid, Result};

pub fn build_rd_table(u: &FrameSet, z: &FrameSet, grid: &PatchGrid, qvs: &[QualityValue]) -> Result<PatchRdTable> {
    check_inputs(u, z, grid)?;
    let codec = PatchCodec::new();
    let dims = PatchDims::new(grid.patch_width, grid.patch_height)?;
    let rows = (0..grid.total_patches())
        .into_par_iter()
        .map(|k| rd_row(&codec, &grid.extract(u, k), &grid.extract(z, k), dims, qvs))
        .collect::<Result<Vec<_>>>()?;
    PatchRdTable::from_rows(qvs.to_vec(), rows, u.total_pixels() as u64)
}

pub fn denoise(frames: &FrameSet, spec: &DenoiserSpec) -> Result<FrameSet> {
    let out = frames
        .frames()
        .par_iter()
        .map(|f| denoise_frame(f, spec))
        .collect::<Result<Vec<_>>>()?;
    FrameSet::with_indices(out, frames.source_indices().to_vec())
}

pub fn synthesize_ugc(pristine: &FrameSet, spec: &SynthSpec) -> Result<FrameSet> {
    let codec = PatchCodec::new();
    let out = pristine
        .frames()
        .par_iter()
        .zip(pristine.source_indices())
        .map(|(f, &idx)| synthesize_frame(&codec, f, spec, idx as u64))
        .collect::<Result<Vec<_>>>()?;
    FrameSet::with_indices(out, pristine.source_indices().to_vec())
}

/// Runs `f` on a pool of `jobs` threads (`None` = rayon's default).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n.max(1));
    }
    match b.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
