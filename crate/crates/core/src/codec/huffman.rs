//! Fixed baseline Huffman tables and MSB-first bit IO.

use alloc::vec::Vec;

use crate::{Error, Result};

pub const DC_LUMA_BITS: [u8; 16] = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
pub const DC_LUMA_VALS: [u8; 12] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

pub const AC_LUMA_BITS: [u8; 16] = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d];
pub const AC_LUMA_VALS: [u8; 162] = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xa1, 0x08, 0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52, 0xd1, 0xf0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7,
    0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5,
    0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2,
    0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8,
    0xf9, 0xfa,
];

pub const EOB: u8 = 0x00;
pub const ZRL: u8 = 0xf0;

/// Canonical Huffman table built from a (bits, values) specification.
#[derive(Debug, Clone)]
pub struct HuffmanTable {
    /// `(code, length)` per symbol; length 0 means the symbol is absent.
    codes: [(u16, u8); 256],
    // decoding: per code length 1..=16
    min_code: [i32; 17],
    max_code: [i32; 17],
    val_ptr: [usize; 17],
    values: Vec<u8>,
}

impl HuffmanTable {
    pub fn new(bits: &[u8; 16], values: &[u8]) -> Self {
        let mut codes = [(0u16, 0u8); 256];
        let mut min_code = [0i32; 17];
        let mut max_code = [-1i32; 17];
        let mut val_ptr = [0usize; 17];
        let mut code = 0i32;
        let mut k = 0usize;
        for len in 1..=16usize {
            let n = usize::from(bits[len - 1]);
            val_ptr[len] = k;
            min_code[len] = code;
            for _ in 0..n {
                codes[usize::from(values[k])] = (code as u16, len as u8);
                code += 1;
                k += 1;
            }
            max_code[len] = if n == 0 { -1 } else { code - 1 };
            code <<= 1;
        }
        Self {
            codes,
            min_code,
            max_code,
            val_ptr,
            values: values.to_vec(),
        }
    }

    pub fn dc_luma() -> Self {
        Self::new(&DC_LUMA_BITS, &DC_LUMA_VALS)
    }

    pub fn ac_luma() -> Self {
        Self::new(&AC_LUMA_BITS, &AC_LUMA_VALS)
    }

    /// Codeword and its length for `symbol`.
    #[inline]
    pub fn code(&self, symbol: u8) -> (u16, u8) {
        self.codes[usize::from(symbol)]
    }

    #[inline]
    pub fn code_len(&self, symbol: u8) -> u8 {
        self.codes[usize::from(symbol)].1
    }

    pub fn decode(&self, reader: &mut BitReader<'_>) -> Result<u8> {
        let mut code = 0i32;
        for len in 1..=16 {
            code = (code << 1) | reader.bit()? as i32;
            if code <= self.max_code[len] {
                let idx = self.val_ptr[len] + (code - self.min_code[len]) as usize;
                return Ok(self.values[idx]);
            }
        }
        Err(Error::MalformedStream("invalid Huffman code"))
    }
}

/// Magnitude category: number of bits needed for `|v|`.
#[inline]
pub fn category(v: i32) -> u8 {
    (32 - v.unsigned_abs().leading_zeros()) as u8
}

/// Low `size` bits carrying the amplitude of `v` (one's complement for negatives).
#[inline]
pub fn amplitude_bits(v: i32, size: u8) -> u32 {
    if v >= 0 {
        v as u32
    } else {
        (v + (1 << size) - 1) as u32
    }
}

/// Inverse of [`amplitude_bits`].
#[inline]
pub fn extend(bits: u32, size: u8) -> i32 {
    if size == 0 {
        return 0;
    }
    let v = bits as i32;
    if v < (1 << (size - 1)) {
        v - (1 << size) + 1
    } else {
        v
    }
}

#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u32,
    pending: u8,
    written: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `len` bits of `value`, most significant first.
    pub fn put(&mut self, value: u32, len: u8) {
        for i in (0..len).rev() {
            self.acc = (self.acc << 1) | ((value >> i) & 1);
            self.pending += 1;
            if self.pending == 8 {
                self.bytes.push(self.acc as u8);
                self.acc = 0;
                self.pending = 0;
            }
        }
        self.written += u64::from(len);
    }

    pub fn bits_written(&self) -> u64 {
        self.written
    }

    /// Pads the last partial byte with 1-bits and returns the buffer.
    pub fn finish(mut self) -> Vec<u8> {
        if self.pending > 0 {
            let fill = 8 - self.pending;
            self.bytes.push(((self.acc << fill) | ((1 << fill) - 1)) as u8);
        }
        self.bytes
    }
}

#[derive(Debug)]
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    #[inline]
    pub fn bit(&mut self) -> Result<u32> {
        let byte = self
            .data
            .get((self.pos / 8) as usize)
            .ok_or(Error::MalformedStream("stream truncated"))?;
        let b = (byte >> (7 - (self.pos % 8))) & 1;
        self.pos += 1;
        Ok(u32::from(b))
    }

    pub fn bits(&mut self, len: u8) -> Result<u32> {
        let mut v = 0;
        for _ in 0..len {
            v = (v << 1) | self.bit()?;
        }
        Ok(v)
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn total_bits(&self) -> u64 {
        self.data.len() as u64 * 8
    }

    /// Whether everything after the cursor is 1-bit padding shorter than a byte.
    pub fn only_padding_left(&self) -> bool {
        let remaining = self.total_bits() - self.pos;
        if remaining >= 8 {
            return false;
        }
        let mut probe = BitReader {
            data: self.data,
            pos: self.pos,
        };
        (0..remaining).all(|_| probe.bit() == Ok(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_codes() {
        let dc = HuffmanTable::dc_luma();
        assert_eq!(dc.code(0), (0b00, 2));
        assert_eq!(dc.code(1), (0b010, 3));
        assert_eq!(dc.code(11), (0b1_1111_1110, 9));
        let ac = HuffmanTable::ac_luma();
        assert_eq!(ac.code(EOB), (0b1010, 4));
        assert_eq!(ac.code(0x01), (0b00, 2));
        assert_eq!(ac.code(ZRL), (0b111_1111_1001, 11));
        assert_eq!(ac.code_len(0xfa), 16);
    }

    #[test]
    fn every_symbol_decodes() {
        for table in [HuffmanTable::dc_luma(), HuffmanTable::ac_luma()] {
            for &sym in table.values.clone().iter() {
                let (code, len) = table.code(sym);
                let mut w = BitWriter::new();
                w.put(u32::from(code), len);
                let bytes = w.finish();
                let mut r = BitReader::new(&bytes);
                assert_eq!(table.decode(&mut r).unwrap(), sym);
                assert_eq!(r.position(), u64::from(len));
            }
        }
    }

    #[test]
    fn amplitude_round_trip() {
        for v in -2047..=2047 {
            let s = category(v);
            assert_eq!(extend(amplitude_bits(v, s), s), v);
        }
        assert_eq!(category(0), 0);
        assert_eq!(category(-1), 1);
        assert_eq!(category(1023), 10);
        assert_eq!(category(-2047), 11);
    }

    #[test]
    fn writer_pads_with_ones() {
        let mut w = BitWriter::new();
        w.put(0b101, 3);
        assert_eq!(w.bits_written(), 3);
        assert_eq!(w.finish(), [0b1011_1111]);
        let mut r = BitReader::new(&[0u8]);
        r.bits(8).unwrap();
        assert_eq!(r.bit(), Err(Error::MalformedStream("stream truncated")));
    }
}
