//! Orthonormal 8x8 type-II DCT in `f64`.

use core::f64::consts::PI;

pub type Block = [f64; 64];

/// Precomputed 1-D basis; `basis[k][n] = c(k) cos((2n + 1) k pi / 16)`.
#[derive(Debug, Clone)]
pub struct Dct8 {
    basis: [[f64; 8]; 8],
}

impl Default for Dct8 {
    fn default() -> Self {
        Self::new()
    }
}

impl Dct8 {
    pub fn new() -> Self {
        let mut basis = [[0.0; 8]; 8];
        for (k, row) in basis.iter_mut().enumerate() {
            let c = if k == 0 { libm::sqrt(0.125) } else { 0.5 };
            for (n, v) in row.iter_mut().enumerate() {
                *v = c * libm::cos((2 * n + 1) as f64 * k as f64 * PI / 16.0);
            }
        }
        Self { basis }
    }

    pub fn forward(&self, input: &Block) -> Block {
        // rows, then columns
        let mut tmp = [0.0; 64];
        for y in 0..8 {
            for k in 0..8 {
                let mut acc = 0.0;
                for n in 0..8 {
                    acc += self.basis[k][n] * input[y * 8 + n];
                }
                tmp[y * 8 + k] = acc;
            }
        }
        let mut out = [0.0; 64];
        for x in 0..8 {
            for k in 0..8 {
                let mut acc = 0.0;
                for n in 0..8 {
                    acc += self.basis[k][n] * tmp[n * 8 + x];
                }
                out[k * 8 + x] = acc;
            }
        }
        out
    }

    pub fn inverse(&self, coeffs: &Block) -> Block {
        let mut tmp = [0.0; 64];
        for x in 0..8 {
            for n in 0..8 {
                let mut acc = 0.0;
                for k in 0..8 {
                    acc += self.basis[k][n] * coeffs[k * 8 + x];
                }
                tmp[n * 8 + x] = acc;
            }
        }
        let mut out = [0.0; 64];
        for y in 0..8 {
            for n in 0..8 {
                let mut acc = 0.0;
                for k in 0..8 {
                    acc += self.basis[k][n] * tmp[y * 8 + k];
                }
                out[y * 8 + n] = acc;
            }
        }
        out
    }
}

pub fn dct8x8_forward(block: &Block) -> Block {
    Dct8::new().forward(block)
}

pub fn dct8x8_inverse(coeffs: &Block) -> Block {
    Dct8::new().inverse(coeffs)
}
