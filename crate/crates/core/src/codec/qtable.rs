//! Quality values and the quality-scaled luminance quantization table.

use crate::{Error, Result};

/// Baseline luminance quantization table, row-major (natural) order.
pub const BASE_LUMA_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// JPEG-style quality value in `1..=100`; larger means finer quantization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QualityValue(u8);

impl QualityValue {
    pub const MIN: QualityValue = QualityValue(1);
    pub const MAX: QualityValue = QualityValue(100);

    pub fn new(qv: i64) -> Result<Self> {
        if (1..=100).contains(&qv) {
            Ok(Self(qv as u8))
        } else {
            Err(Error::QualityOutOfRange(qv))
        }
    }

    #[inline]
    pub fn get(self) -> u8 {
        self.0
    }

    /// Scale factor (percent) applied to the base table.
    pub fn scale(self) -> u32 {
        let q = u32::from(self.0);
        if q < 50 {
            5000 / q
        } else {
            200 - 2 * q
        }
    }
}

impl core::fmt::Display for QualityValue {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `count` quality values evenly spaced from `first` with step `step`.
pub fn quality_ladder(first: i64, step: i64, count: usize) -> Result<alloc::vec::Vec<QualityValue>> {
    (0..count as i64).map(|i| QualityValue::new(first + i * step)).collect()
}

/// The 20-point default ladder 19, 23, ..., 95.
pub fn default_quality_ladder() -> alloc::vec::Vec<QualityValue> {
    quality_ladder(19, 4, 20).expect("static ladder is in range")
}

/// 64 quantizer step sizes in row-major order, each in `1..=255`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantTable([u16; 64]);

impl QuantTable {
    pub fn for_quality(qv: QualityValue) -> Self {
        let scale = qv.scale();
        let mut entries = [0u16; 64];
        for (dst, &base) in entries.iter_mut().zip(BASE_LUMA_TABLE.iter()) {
            let v = (u32::from(base) * scale + 50) / 100;
            *dst = v.clamp(1, 255) as u16;
        }
        Self(entries)
    }

    pub fn entries(&self) -> &[u16; 64] {
        &self.0
    }
}

pub fn quality_to_qtable(qv: QualityValue) -> QuantTable {
    QuantTable::for_quality(qv)
}
