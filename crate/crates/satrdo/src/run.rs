//! Detection over frames on disk: sampling, reference loading, parallel
//! table build.

use std::path::PathBuf;

use satrdo_core::denoise::{check_reference, DenoiserSpec};
use satrdo_core::metrics::frame_set_sse;
use satrdo_core::pipeline::{detect_from_table, Detection, DetectionConfig};
use satrdo_core::rdo::check_grid;
use satrdo_core::{FrameSet, PatchGrid};

use crate::frame_io::{expand_inputs, load_frames, IoError};
use crate::parallel;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Core(#[from] satrdo_core::Error),
    #[error("external reference has {got} frames; expected {total} (one per input frame) or {sampled} (one per sampled frame)")]
    ExternalCount { got: usize, total: usize, sampled: usize },
    #[error("bad denoiser `{0}`; expected deblock[:strength], gaussian[:sigma] or external:<dir>")]
    BadDenoiserArg(String),
}

/// Parses `deblock:20`, `gaussian:1.5` or `external:<dir>`. The built-in
/// names alone use strength 20 and sigma 1.5.
pub fn parse_denoiser(arg: &str) -> Result<DenoiserSpec, RunError> {
    let bad = || RunError::BadDenoiserArg(arg.to_string());
    let (kind, value) = match arg.split_once(':') {
        Some((k, v)) => (k, Some(v)),
        None => (arg, None),
    };
    let number = |default: f64| -> Result<f64, RunError> {
        match value {
            None => Ok(default),
            Some(v) => v.trim().parse().map_err(|_| bad()),
        }
    };
    let spec = match kind {
        "deblock" => DenoiserSpec::Deblock { strength: number(20.0)? },
        "gaussian" => DenoiserSpec::Gaussian { sigma: number(1.5)? },
        "external" => {
            let dir = value.filter(|v| !v.is_empty()).ok_or_else(bad)?;
            let paths = expand_inputs(&[PathBuf::from(dir)])?;
            DenoiserSpec::External {
                paths: paths.iter().map(|p| p.to_string_lossy().into_owned()).collect(),
            }
        }
        _ => return Err(bad()),
    };
    spec.validate()?;
    Ok(spec)
}

/// Picks `count` frames (at most all of them) with the uniform rule.
pub fn sample_input(u: &FrameSet, count: usize) -> Result<FrameSet, RunError> {
    Ok(u.sample(count.min(u.len()))?)
}

/// Produces the reference for the sampled frames. External frames are
/// matched by source index when there is one per input frame, or taken in
/// order when there is one per sampled frame.
pub fn reference_for(
    sampled: &FrameSet,
    total_frames: usize,
    denoiser: &DenoiserSpec,
    dims: Option<(usize, usize)>,
) -> Result<FrameSet, RunError> {
    let z = match denoiser {
        DenoiserSpec::External { paths } => {
            let picked: Vec<PathBuf> = if paths.len() == total_frames {
                sampled.source_indices().iter().map(|&i| PathBuf::from(&paths[i])).collect()
            } else if paths.len() == sampled.len() {
                paths.iter().map(PathBuf::from).collect()
            } else {
                return Err(RunError::ExternalCount {
                    got: paths.len(),
                    total: total_frames,
                    sampled: sampled.len(),
                });
            };
            let z = load_frames(&picked, dims)?;
            FrameSet::with_indices(z.into_frames(), sampled.source_indices().to_vec())?
        }
        builtin => parallel::denoise(sampled, builtin)?,
    };
    check_reference(sampled, &z)?;
    Ok(z)
}

/// One detection against one reference.
#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub denoiser: DenoiserSpec,
    pub detection: Detection,
    pub pixels: u64,
    pub source_indices: Vec<usize>,
}

/// Runs detection on `u` once per denoiser. The input is sampled once and
/// shared by all references.
pub fn detect(
    u: &FrameSet,
    denoisers: &[DenoiserSpec],
    config: &DetectionConfig,
    dims: Option<(usize, usize)>,
) -> Result<Vec<ReferenceRun>, RunError> {
    check_grid(&config.lambda_grid)?;
    let sampled = sample_input(u, config.sample_count)?;
    let grid = PatchGrid::new(&sampled, config.patch_width, config.patch_height)?;
    denoisers
        .iter()
        .map(|d| {
            let z = reference_for(&sampled, u.len(), d, dims)?;
            let table = parallel::build_rd_table(&sampled, &z, &grid, &config.qualities)?;
            let detection = detect_from_table(&table, frame_set_sse(&sampled, &z), config)?;
            Ok(ReferenceRun {
                denoiser: d.clone(),
                detection,
                pixels: table.pixels(),
                source_indices: sampled.source_indices().to_vec(),
            })
        })
        .collect()
}
