use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// In-place forward DFT `X[k] = Σ x[n]·e^{−2πikn/M}` for power-of-two `M`
/// (iterative radix-2, decimation in time).
pub fn fft_in_place(buf: &mut [Complex64]) -> Result<()> {
    let n = buf.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(invalid(alloc::format!("FFT length {n} is not a power of two")));
    }
    let bits = n.trailing_zeros();
    if bits == 0 {
        return Ok(());
    }
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let angle = -2.0 * PI / len as f64;
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                // direct twiddles avoid drift from repeated multiplication
                let (s, c) = libm::sincos(angle * k as f64);
                let w = Complex64::new(c, s);
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
    Ok(())
}
