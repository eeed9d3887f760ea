//! JPEG-style intra patch codec.
//!
//! Each patch is coded on its own: 8x8 blocks in raster order, level shift,
//! orthonormal DCT, uniform quantization with the quality-scaled luminance
//! table (round half away from zero), then baseline DC-differential and
//! run/size AC Huffman coding with the fixed luminance tables. DC prediction
//! starts from zero at the first block of every patch. The stream carries no
//! headers or markers; `rate_bits` is the exact payload length and the final
//! byte is padded with 1-bits.

pub mod dct;
pub mod huffman;
mod qtable;

use alloc::vec;
use alloc::vec::Vec;

use crate::frame::BLOCK;
use crate::{Error, Result};

pub use dct::{dct8x8_forward, dct8x8_inverse, Dct8};
pub use huffman::HuffmanTable;
pub use qtable::{
    default_quality_ladder, quality_ladder, quality_to_qtable, QualityValue, QuantTable, BASE_LUMA_TABLE,
};

use huffman::{amplitude_bits, category, extend, BitReader, BitWriter, EOB, ZRL};

/// Zig-zag scan position -> row-major coefficient index.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21,
    28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61,
    54, 47, 55, 62, 63,
];

const MAX_AC: i32 = 1023;
const MAX_DC: i32 = 1024;

/// Quantized coefficients of one 8x8 block, row-major.
pub type QuantBlock = [i32; 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchDims {
    pub width: usize,
    pub height: usize,
}

impl PatchDims {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || width % BLOCK != 0 || height % BLOCK != 0 {
            return Err(Error::BadPatchDims {
                patch_width: width,
                patch_height: height,
                width,
                height,
            });
        }
        Ok(Self { width, height })
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn blocks(&self) -> usize {
        self.pixels() / (BLOCK * BLOCK)
    }
}

/// Result of coding one patch at one quality value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPatch {
    pub qv: QualityValue,
    pub dims: PatchDims,
    /// Exact payload length in bits, excluding the final padding.
    pub rate_bits: u64,
    /// Decoded samples, row-major.
    pub recon: Vec<u8>,
    pub bitstream: Vec<u8>,
}

/// Reusable coder state: transform basis and Huffman tables.
#[derive(Debug, Clone)]
pub struct PatchCodec {
    dct: Dct8,
    dc: HuffmanTable,
    ac: HuffmanTable,
}

impl Default for PatchCodec {
    fn default() -> Self {
        Self::new()
    }
}

impl PatchCodec {
    pub fn new() -> Self {
        Self {
            dct: Dct8::new(),
            dc: HuffmanTable::dc_luma(),
            ac: HuffmanTable::ac_luma(),
        }
    }

    /// Transforms and quantizes every block of the patch, in raster order.
    pub fn quantize(&self, samples: &[u8], dims: PatchDims, qv: QualityValue) -> Result<Vec<QuantBlock>> {
        check_len(samples, dims)?;
        let table = QuantTable::for_quality(qv);
        let mut out = Vec::with_capacity(dims.blocks());
        for (bx, by) in block_origins(dims) {
            let mut block = [0.0; 64];
            for y in 0..BLOCK {
                for x in 0..BLOCK {
                    block[y * BLOCK + x] = f64::from(samples[(by + y) * dims.width + bx + x]) - 128.0;
                }
            }
            let coeffs = self.dct.forward(&block);
            let mut q = [0i32; 64];
            for i in 0..64 {
                let v = libm::round(coeffs[i] / f64::from(table.entries()[i])) as i32;
                q[i] = if i == 0 { v.clamp(-MAX_DC, MAX_DC) } else { v.clamp(-MAX_AC, MAX_AC) };
            }
            out.push(q);
        }
        Ok(out)
    }

    /// Dequantizes and inverse-transforms blocks back into patch samples.
    pub fn reconstruct(&self, blocks: &[QuantBlock], dims: PatchDims, qv: QualityValue) -> Vec<u8> {
        let table = QuantTable::for_quality(qv);
        let mut out = vec![0u8; dims.pixels()];
        for ((bx, by), q) in block_origins(dims).zip(blocks) {
            let mut coeffs = [0.0; 64];
            for i in 0..64 {
                coeffs[i] = f64::from(q[i]) * f64::from(table.entries()[i]);
            }
            let pixels = self.dct.inverse(&coeffs);
            for y in 0..BLOCK {
                for x in 0..BLOCK {
                    let v = libm::round(pixels[y * BLOCK + x] + 128.0).clamp(0.0, 255.0);
                    out[(by + y) * dims.width + bx + x] = v as u8;
                }
            }
        }
        out
    }

    pub fn encode(&self, samples: &[u8], dims: PatchDims, qv: QualityValue) -> Result<EncodedPatch> {
        let blocks = self.quantize(samples, dims, qv)?;
        let mut w = BitWriter::new();
        let mut pred = 0;
        for q in &blocks {
            self.write_block(&mut w, q, &mut pred);
        }
        let rate_bits = w.bits_written();
        Ok(EncodedPatch {
            qv,
            dims,
            rate_bits,
            recon: self.reconstruct(&blocks, dims, qv),
            bitstream: w.finish(),
        })
    }

    fn write_block(&self, w: &mut BitWriter, q: &QuantBlock, pred: &mut i32) {
        let diff = q[0] - *pred;
        *pred = q[0];
        let size = category(diff);
        let (code, len) = self.dc.code(size);
        w.put(u32::from(code), len);
        w.put(amplitude_bits(diff, size), size);

        let mut run = 0u8;
        for &idx in &ZIGZAG[1..] {
            let v = q[idx];
            if v == 0 {
                run += 1;
                continue;
            }
            while run >= 16 {
                let (code, len) = self.ac.code(ZRL);
                w.put(u32::from(code), len);
                run -= 16;
            }
            let size = category(v);
            let (code, len) = self.ac.code((run << 4) | size);
            w.put(u32::from(code), len);
            w.put(amplitude_bits(v, size), size);
            run = 0;
        }
        if run > 0 {
            let (code, len) = self.ac.code(EOB);
            w.put(u32::from(code), len);
        }
    }

    /// Parses a stream produced by [`PatchCodec::encode`] with the same
    /// quality value and dimensions. Returns the reconstructed samples.
    pub fn decode(&self, bitstream: &[u8], dims: PatchDims, qv: QualityValue) -> Result<Vec<u8>> {
        let blocks = self.parse(bitstream, dims)?;
        Ok(self.reconstruct(&blocks, dims, qv))
    }

    /// Entropy-decodes the quantized blocks of a stream.
    pub fn parse(&self, bitstream: &[u8], dims: PatchDims) -> Result<Vec<QuantBlock>> {
        let mut r = BitReader::new(bitstream);
        let mut pred = 0;
        let mut blocks = Vec::with_capacity(dims.blocks());
        for _ in 0..dims.blocks() {
            let mut q = [0i32; 64];
            let size = self.dc.decode(&mut r)?;
            if size > 11 {
                return Err(Error::MalformedStream("DC category out of range"));
            }
            pred += extend(r.bits(size)?, size);
            q[0] = pred;
            let mut k = 1;
            while k < 64 {
                let rs = self.ac.decode(&mut r)?;
                let (run, size) = (usize::from(rs >> 4), rs & 0x0f);
                if size == 0 {
                    match run {
                        0 => break,
                        15 => {
                            k += 16;
                            continue;
                        }
                        _ => return Err(Error::MalformedStream("invalid AC symbol")),
                    }
                }
                k += run;
                if k > 63 {
                    return Err(Error::MalformedStream("AC run past end of block"));
                }
                q[ZIGZAG[k]] = extend(r.bits(size)?, size);
                k += 1;
            }
            if k > 64 {
                return Err(Error::MalformedStream("AC run past end of block"));
            }
            blocks.push(q);
        }
        if !r.only_padding_left() {
            return Err(Error::MalformedStream("unexpected trailing data"));
        }
        Ok(blocks)
    }
}

fn check_len(samples: &[u8], dims: PatchDims) -> Result<()> {
    if samples.len() != dims.pixels() {
        return Err(Error::SampleCount {
            width: dims.width,
            height: dims.height,
            expected: dims.pixels(),
            actual: samples.len(),
        });
    }
    Ok(())
}

fn block_origins(dims: PatchDims) -> impl Iterator<Item = (usize, usize)> {
    (0..dims.height / BLOCK).flat_map(move |by| (0..dims.width / BLOCK).map(move |bx| (bx * BLOCK, by * BLOCK)))
}

pub fn encode_patch(samples: &[u8], width: usize, height: usize, qv: QualityValue) -> Result<EncodedPatch> {
    PatchCodec::new().encode(samples, PatchDims::new(width, height)?, qv)
}

pub fn decode_patch(bitstream: &[u8], qv: QualityValue, width: usize, height: usize) -> Result<Vec<u8>> {
    PatchCodec::new().decode(bitstream, PatchDims::new(width, height)?, qv)
}
