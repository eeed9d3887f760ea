//! Machine-readable outputs: RD curves as CSV, detection results and run
//! manifests as JSON. Curves can be read back to redo a detection offline.
//!
//! Curve CSV columns: `lambda,rate_bits,rate_bpp,mse_vs_U,mse_vs_Z`, with
//! `rate_bpp = rate_bits / pixels` and MSE over all sampled pixels. The
//! fixed-quality curve uses `qv` in place of `lambda`. Floats are written
//! as shortest round-trip decimals, so SSE values are recovered exactly as
//! `round(mse * pixels)`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use satrdo_core::codec::QualityValue;
use satrdo_core::pipeline::Detection;
use satrdo_core::rdo::{QvPoint, RdCurve, RdPoint, Reference};
use satrdo_core::saturation::SaturationResult;

pub const CURVE_U_CSV: &str = "rd_curve_u.csv";
pub const CURVE_Z_CSV: &str = "rd_curve_z.csv";
pub const QV_CURVE_CSV: &str = "qv_curve.csv";
pub const SATURATION_JSON: &str = "saturation.json";
pub const REFERENCE_JSON: &str = "reference.json";
pub const MANIFEST_JSON: &str = "manifest.json";

const CURVE_HEADER: [&str; 5] = ["lambda", "rate_bits", "rate_bpp", "mse_vs_U", "mse_vs_Z"];
const QV_HEADER: [&str; 5] = ["qv", "rate_bits", "rate_bpp", "mse_vs_U", "mse_vs_Z"];

fn per_pixel(v: u64, pixels: u64) -> f64 {
    v as f64 / pixels as f64
}

fn to_sse(mse: f64, pixels: u64) -> Result<u64> {
    if !(mse.is_finite() && mse >= 0.0) {
        bail!("invalid MSE {mse}");
    }
    Ok((mse * pixels as f64).round() as u64)
}

fn write_rows(path: &Path, header: [&str; 5], rows: impl Iterator<Item = [String; 5]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_rows(path: &Path, header: [&str; 5]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    if r.headers()?.iter().ne(header) {
        bail!("{}: unexpected columns {:?}", path.display(), r.headers()?);
    }
    r.records()
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("reading {}", path.display()))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .with_context(|| format!("{}: bad value in column {} of {:?}", path.display(), i + 1, rec))
}

pub fn write_curve_csv(path: &Path, curve: &RdCurve, pixels: u64) -> Result<()> {
    write_rows(
        path,
        CURVE_HEADER,
        curve.points.iter().map(|p| {
            [
                p.lambda.to_string(),
                p.total_rate_bits.to_string(),
                per_pixel(p.total_rate_bits, pixels).to_string(),
                per_pixel(p.sse_vs_u, pixels).to_string(),
                per_pixel(p.sse_vs_z, pixels).to_string(),
            ]
        }),
    )
}

/// Reads a curve written by [`write_curve_csv`]. Per-patch choices are not
/// stored and come back empty.
pub fn read_curve_csv(path: &Path, reference: Reference, pixels: u64) -> Result<RdCurve> {
    let points = read_rows(path, CURVE_HEADER)?
        .iter()
        .map(|rec| {
            Ok(RdPoint {
                lambda: field(rec, 0, path)?,
                total_rate_bits: field(rec, 1, path)?,
                sse_vs_u: to_sse(field(rec, 3, path)?, pixels)?,
                sse_vs_z: to_sse(field(rec, 4, path)?, pixels)?,
                choices: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RdCurve { reference, points })
}

pub fn write_qv_csv(path: &Path, points: &[QvPoint], pixels: u64) -> Result<()> {
    write_rows(
        path,
        QV_HEADER,
        points.iter().map(|p| {
            [
                p.qv.get().to_string(),
                p.rate_bits.to_string(),
                per_pixel(p.rate_bits, pixels).to_string(),
                per_pixel(p.sse_vs_u, pixels).to_string(),
                per_pixel(p.sse_vs_z, pixels).to_string(),
            ]
        }),
    )
}

pub fn read_qv_csv(path: &Path, pixels: u64) -> Result<Vec<QvPoint>> {
    read_rows(path, QV_HEADER)?
        .iter()
        .map(|rec| {
            Ok(QvPoint {
                qv: QualityValue::new(field(rec, 0, path)?)?,
                rate_bits: field(rec, 1, path)?,
                sse_vs_u: to_sse(field(rec, 3, path)?, pixels)?,
                sse_vs_z: to_sse(field(rec, 4, path)?, pixels)?,
            })
        })
        .collect()
}

/// What a curve directory needs besides the CSVs to redo detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceInfo {
    pub denoiser: String,
    pub pixels: u64,
    pub d_uz_sse: u64,
    pub source_indices: Vec<usize>,
}

/// Raw band values in SSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SseBand {
    pub d_uz: u64,
    pub d_best: u64,
    pub delta_sq: u64,
    pub small_delta_sq: i64,
}

/// `saturation.json`. Distances are per-pixel (MSE units) unless inside
/// `sse`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub verdict: String,
    pub lambda_star_z: Option<f64>,
    pub lambda_star_u: Option<f64>,
    pub qp_star: Option<u8>,
    pub saturation_rate_bpp: Option<f64>,
    pub d_uz_mse: f64,
    pub d_best_mse: f64,
    pub delta_sq: f64,
    pub small_delta_sq: f64,
    pub grid: Vec<f64>,
    pub denoiser: String,
    pub bound_source: String,
    pub lambda_star_z_index: Option<usize>,
    pub lambda_star_u_index: Option<usize>,
    pub saturation_rate_bits: Option<u64>,
    pub transition_lambda: f64,
    pub qv_star: Option<u8>,
    pub pixels: u64,
    pub sse: SseBand,
}

impl SaturationReport {
    pub fn new(
        result: &SaturationResult,
        grid: &[f64],
        qv_star: Option<QualityValue>,
        denoiser: &str,
        pixels: u64,
    ) -> Self {
        let b = &result.bounds;
        let px = pixels as f64;
        Self {
            verdict: result.verdict.as_str().to_string(),
            lambda_star_z: result.lambda_star_z,
            lambda_star_u: result.lambda_star_u,
            qp_star: result.qp_star,
            saturation_rate_bpp: result.saturation_rate_bits.map(|r| per_pixel(r, pixels)),
            d_uz_mse: per_pixel(b.d_uz, pixels),
            d_best_mse: per_pixel(b.d_best, pixels),
            delta_sq: per_pixel(b.delta_sq, pixels),
            small_delta_sq: b.small_delta_sq as f64 / px,
            grid: grid.to_vec(),
            denoiser: denoiser.to_string(),
            bound_source: b.source.to_string(),
            lambda_star_z_index: result.lambda_star_z_index,
            lambda_star_u_index: result.lambda_star_u_index,
            saturation_rate_bits: result.saturation_rate_bits,
            transition_lambda: grid[result.transition_index],
            qv_star: qv_star.map(QualityValue::get),
            pixels,
            sse: SseBand {
                d_uz: b.d_uz,
                d_best: b.d_best,
                delta_sq: b.delta_sq,
                small_delta_sq: b.small_delta_sq,
            },
        }
    }

    pub fn from_detection(d: &Detection, denoiser: &str, pixels: u64) -> Self {
        Self::new(&d.result, &d.curve_u.lambda_grid(), d.qv_star(), denoiser, pixels)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Everything needed to repeat a run: the exact arguments plus the
/// resolved configuration for reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Working directory the arguments are relative to.
    pub cwd: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, args: Vec<String>, config: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            cwd: std::env::current_dir()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            args,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }
}
