//! Squared-error distortion between 8-bit sample buffers.

use crate::FrameSet;

/// Sum of squared differences. Exact for any realistic buffer length.
pub fn sse(a: &[u8], b: &[u8]) -> u64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = i32::from(x) - i32::from(y);
            (d * d) as u64
        })
        .sum()
}

pub fn mse(a: &[u8], b: &[u8]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    sse(a, b) as f64 / a.len() as f64
}

/// SSE summed over corresponding frames of two equally shaped sets.
pub fn frame_set_sse(a: &FrameSet, b: &FrameSet) -> u64 {
    a.frames()
        .iter()
        .zip(b.frames())
        .map(|(x, y)| sse(x.samples(), y.samples()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic() {
        assert_eq!(sse(&[0, 10, 255], &[0, 13, 0]), 9 + 255 * 255);
        assert_eq!(mse(&[1, 3], &[3, 1]), 4.0);
        assert_eq!(mse(&[], &[]), 0.0);
    }
}
