//! End-to-end detection: sample, denoise, tabulate, sweep, detect.

use alloc::vec::Vec;

use crate::codec::{default_quality_ladder, QualityValue};
use crate::denoise::{denoise, DenoiserSpec};
use crate::metrics::frame_set_sse;
use crate::rdo::{build_rd_table, qv_curve, sweep, PatchRdTable, QvPoint, RdCurve, Reference};
use crate::saturation::{analyze, default_lambda_grid, detect_qv_star, BoundSource, SaturationResult};
use crate::{FrameSet, PatchGrid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    pub sample_count: usize,
    pub patch_width: usize,
    pub patch_height: usize,
    pub qualities: Vec<QualityValue>,
    pub lambda_grid: Vec<f64>,
    pub bound_source: BoundSource,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            sample_count: 5,
            patch_width: 48,
            patch_height: 40,
            qualities: default_quality_ladder(),
            lambda_grid: default_lambda_grid(),
            bound_source: BoundSource::ZSweep,
        }
    }
}

/// Everything a detection run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub result: SaturationResult,
    pub curve_u: RdCurve,
    pub curve_z: RdCurve,
    /// Fixed-quality curve of the same table and its saturation index.
    pub qv_curve: Vec<QvPoint>,
    pub qv_star_index: Option<usize>,
    pub d_uz: u64,
}

impl Detection {
    pub fn qv_star(&self) -> Option<QualityValue> {
        self.qv_star_index.map(|i| self.qv_curve[i].qv)
    }
}

/// Sweeps a finished table against both references and runs the detectors.
pub fn detect_from_table(table: &PatchRdTable, d_uz: u64, config: &DetectionConfig) -> Result<Detection> {
    let curve_u = sweep(table, &config.lambda_grid, Reference::U)?;
    let curve_z = sweep(table, &config.lambda_grid, Reference::Z)?;
    let result = analyze(&curve_u, &curve_z, d_uz, config.bound_source)?;
    let qv_curve = qv_curve(table);
    let qv_star_index = if qv_curve.len() >= 2 {
        detect_qv_star(&qv_curve, d_uz)?
    } else {
        None
    };
    Ok(Detection {
        result,
        curve_u,
        curve_z,
        qv_curve,
        qv_star_index,
        d_uz,
    })
}

/// Runs detection on already sampled input `u` and reference `z`.
pub fn detect_with_reference(u: &FrameSet, z: &FrameSet, config: &DetectionConfig) -> Result<Detection> {
    crate::rdo::check_grid(&config.lambda_grid)?;
    let grid = PatchGrid::new(u, config.patch_width, config.patch_height)?;
    let table = build_rd_table(u, z, &grid, &config.qualities)?;
    detect_from_table(&table, frame_set_sse(u, z), config)
}

/// Samples `config.sample_count` frames of `u`, denoises them with a
/// built-in denoiser and runs detection.
pub fn run_detection(u: &FrameSet, denoiser: &DenoiserSpec, config: &DetectionConfig) -> Result<Detection> {
    let sampled = u.sample(config.sample_count.min(u.len()))?;
    let z = denoise(&sampled, denoiser)?;
    detect_with_reference(&sampled, &z, config)
}
