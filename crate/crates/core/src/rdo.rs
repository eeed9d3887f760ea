//! Per-patch Lagrangian rate-distortion optimization over a quality ladder.
//!
//! Every patch of `U` is coded once at every quality value; the resulting
//! rate and the squared error against both `U` and `Z` form an immutable
//! [`PatchRdTable`]. Since the total cost `sum D_k + lambda sum R_k`
//! separates over patches, the optimum for a given lambda is the per-patch
//! argmin, so sweeping lambda never touches the codec again.

use alloc::vec::Vec;

use crate::codec::{PatchCodec, PatchDims, QualityValue};
use crate::metrics::sse;
use crate::{Error, FrameSet, PatchGrid, Result};

/// Which signal distortions are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reference {
    /// The (degraded) input itself.
    U,
    /// The denoised reference.
    Z,
}

impl core::fmt::Display for Reference {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Reference::U => "U",
            Reference::Z => "Z",
        })
    }
}

/// Rate and distortions of one patch coded at one quality value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RdEntry {
    pub rate_bits: u64,
    pub sse_u: u64,
    pub sse_z: u64,
}

impl RdEntry {
    #[inline]
    pub fn sse(&self, reference: Reference) -> u64 {
        match reference {
            Reference::U => self.sse_u,
            Reference::Z => self.sse_z,
        }
    }
}

/// Codes one patch of `U` at every quality value and measures the
/// reconstruction against the co-located patches of `U` and `Z`.
pub fn rd_row(
    codec: &PatchCodec,
    u_patch: &[u8],
    z_patch: &[u8],
    dims: PatchDims,
    qvs: &[QualityValue],
) -> Result<Vec<RdEntry>> {
    qvs.iter()
        .map(|&qv| {
            let enc = codec.encode(u_patch, dims, qv)?;
            Ok(RdEntry {
                rate_bits: enc.rate_bits,
                sse_u: sse(&enc.recon, u_patch),
                sse_z: sse(&enc.recon, z_patch),
            })
        })
        .collect()
}

/// `patches x qualities` table of coded rates and distortions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchRdTable {
    qvs: Vec<QualityValue>,
    patches: usize,
    pixels: u64,
    entries: Vec<RdEntry>,
}

impl PatchRdTable {
    /// Assembles a table from per-patch rows (each row indexed like `qvs`).
    /// `pixels` is the number of pixels covered by all patches together.
    pub fn from_rows(qvs: Vec<QualityValue>, rows: Vec<Vec<RdEntry>>, pixels: u64) -> Result<Self> {
        check_qualities(&qvs)?;
        if rows.is_empty() {
            return Err(Error::BadTable("no patches"));
        }
        if rows.iter().any(|r| r.len() != qvs.len()) {
            return Err(Error::BadTable("row length differs from the quality list"));
        }
        let patches = rows.len();
        Ok(Self {
            qvs,
            patches,
            pixels,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn qualities(&self) -> &[QualityValue] {
        &self.qvs
    }

    pub fn patches(&self) -> usize {
        self.patches
    }

    /// Pixels covered by the table, used to normalize SSE and rate.
    pub fn pixels(&self) -> u64 {
        self.pixels
    }

    #[inline]
    pub fn entry(&self, patch: usize, qv_index: usize) -> &RdEntry {
        &self.entries[patch * self.qvs.len() + qv_index]
    }

    pub fn row(&self, patch: usize) -> &[RdEntry] {
        let n = self.qvs.len();
        &self.entries[patch * n..(patch + 1) * n]
    }

    /// Sum over patches of the lowest rate any quality value achieves.
    pub fn min_total_rate(&self) -> u64 {
        (0..self.patches)
            .map(|k| self.row(k).iter().map(|e| e.rate_bits).min().unwrap_or(0))
            .sum()
    }

    /// Totals for an explicit per-patch choice vector.
    pub fn totals(&self, choices: &[usize]) -> RdEntry {
        let mut t = RdEntry::default();
        for (k, &n) in choices.iter().enumerate() {
            let e = self.entry(k, n);
            t.rate_bits += e.rate_bits;
            t.sse_u += e.sse_u;
            t.sse_z += e.sse_z;
        }
        t
    }
}

fn check_qualities(qvs: &[QualityValue]) -> Result<()> {
    if qvs.is_empty() || qvs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadQualityList);
    }
    Ok(())
}

/// Checks that `u` and `z` can be compared patch by patch under `grid`.
pub fn check_inputs(u: &FrameSet, z: &FrameSet, grid: &PatchGrid) -> Result<()> {
    crate::denoise::check_reference(u, z)?;
    if *grid != PatchGrid::new(u, grid.patch_width, grid.patch_height)? {
        return Err(Error::BadTable("patch grid was built for a different frame set"));
    }
    Ok(())
}

/// Builds the full table sequentially. The `satrdo` crate offers a
/// parallel variant over the same [`rd_row`] primitive.
pub fn build_rd_table(u: &FrameSet, z: &FrameSet, grid: &PatchGrid, qvs: &[QualityValue]) -> Result<PatchRdTable> {
    check_qualities(qvs)?;
    check_inputs(u, z, grid)?;
    let codec = PatchCodec::new();
    let dims = PatchDims::new(grid.patch_width, grid.patch_height)?;
    let rows = (0..grid.total_patches())
        .map(|k| rd_row(&codec, &grid.extract(u, k), &grid.extract(z, k), dims, qvs))
        .collect::<Result<Vec<_>>>()?;
    PatchRdTable::from_rows(qvs.to_vec(), rows, u.total_pixels() as u64)
}

/// Solution of the patch-separable RDO problem at one lambda.
#[derive(Debug, Clone, PartialEq)]
pub struct RdPoint {
    pub lambda: f64,
    pub total_rate_bits: u64,
    pub sse_vs_u: u64,
    pub sse_vs_z: u64,
    /// Chosen quality index per patch.
    pub choices: Vec<usize>,
}

impl RdPoint {
    pub fn sse(&self, reference: Reference) -> u64 {
        match reference {
            Reference::U => self.sse_vs_u,
            Reference::Z => self.sse_vs_z,
        }
    }

    /// `D + lambda R` with distortion measured against `reference`.
    pub fn cost(&self, reference: Reference, lambda: f64) -> f64 {
        self.sse(reference) as f64 + lambda * self.total_rate_bits as f64
    }
}

/// Index of the Lagrangian-optimal entry in one patch row.
///
/// Ties go to the smaller rate, then to the larger quality index.
pub fn best_in_row(row: &[RdEntry], lambda: f64, reference: Reference) -> usize {
    let mut best = 0;
    let mut best_cost = f64::INFINITY;
    let mut best_rate = u64::MAX;
    for (n, e) in row.iter().enumerate() {
        let cost = e.sse(reference) as f64 + lambda * e.rate_bits as f64;
        if cost < best_cost || (cost == best_cost && e.rate_bits <= best_rate) {
            best = n;
            best_cost = cost;
            best_rate = e.rate_bits;
        }
    }
    best
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::BadLambda(lambda));
    }
    Ok(())
}

pub fn solve_rdo(table: &PatchRdTable, lambda: f64, reference: Reference) -> Result<RdPoint> {
    check_lambda(lambda)?;
    let choices: Vec<usize> = (0..table.patches())
        .map(|k| best_in_row(table.row(k), lambda, reference))
        .collect();
    let t = table.totals(&choices);
    Ok(RdPoint {
        lambda,
        total_rate_bits: t.rate_bits,
        sse_vs_u: t.sse_u,
        sse_vs_z: t.sse_z,
        choices,
    })
}

/// RD curve of one reference over an ascending lambda grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RdCurve {
    pub reference: Reference,
    pub points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn lambda_grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn same_grid(&self, other: &RdCurve) -> bool {
        self.len() == other.len() && self.points.iter().zip(&other.points).all(|(a, b)| a.lambda == b.lambda)
    }
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|&l| !(l.is_finite() && l > 0.0)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadLambdaGrid);
    }
    Ok(())
}

pub fn sweep(table: &PatchRdTable, lambda_grid: &[f64], reference: Reference) -> Result<RdCurve> {
    check_grid(lambda_grid)?;
    let points = lambda_grid
        .iter()
        .map(|&l| solve_rdo(table, l, reference))
        .collect::<Result<Vec<_>>>()?;
    Ok(RdCurve { reference, points })
}

/// Whole-set operating point with one quality value for every patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QvPoint {
    pub qv: QualityValue,
    pub rate_bits: u64,
    pub sse_vs_u: u64,
    pub sse_vs_z: u64,
}

/// Fixed-quality (non-RDO) curve read off the table, ascending quality.
pub fn qv_curve(table: &PatchRdTable) -> Vec<QvPoint> {
    table
        .qualities()
        .iter()
        .enumerate()
        .map(|(n, &qv)| {
            let t = table.totals(&alloc::vec![n; table.patches()]);
            QvPoint {
                qv,
                rate_bits: t.rate_bits,
                sse_vs_u: t.sse_u,
                sse_vs_z: t.sse_z,
            }
        })
        .collect()
}
