//! Radix-2 FFT and the spectral helpers used by the dynamics module:
//! Hann windows, periodic spectral derivatives/antiderivatives on a uniform
//! grid, and sub-bin peak location by quadratic interpolation.
//!
//! Conventions match the usual DFT: forward transform unnormalized,
//! `X_k = Σ_j x_j e^{−2πi jk/n}`, inverse scaled by `1/n`.

use alloc::vec;
use alloc::vec::Vec;

use crate::cmat::{cr, C};
use crate::error::{Error, Result};
use crate::fp;

/// In-place radix-2 FFT. `n` must be a power of two.
pub fn fft_inplace(buf: &mut [C], inverse: bool) -> Result<()> {
    let n = buf.len();
    if n == 0 {
        return Ok(());
    }
    if !n.is_power_of_two() {
        return Err(Error::invalid(alloc::format!(
            "FFT length {n} is not a power of two"
        )));
    }
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2usize;
    while len <= n {
        let ang = sign * fp::TAU / len as f64;
        let wlen = C::new(fp::cos(ang), fp::sin(ang));
        let mut i = 0;
        while i < n {
            let mut w = cr(1.0);
            for k in 0..len / 2 {
                let u = buf[i + k];
                let v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wlen;
            }
            i += len;
        }
        len <<= 1;
    }
    if inverse {
        let inv_n = 1.0 / n as f64;
        for x in buf.iter_mut() {
            *x *= inv_n;
        }
    }
    Ok(())
}

/// Forward FFT of a real signal; returns the full complex spectrum.
pub fn fft_real(signal: &[f64]) -> Result<Vec<C>> {
    let mut buf: Vec<C> = signal.iter().map(|&x| cr(x)).collect();
    fft_inplace(&mut buf, false)?;
    Ok(buf)
}

/// Symmetric Hann window, `w_k = (1 − cos(2πk/(n−1)))/2`.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|k| 0.5 * (1.0 - fp::cos(fp::TAU * k as f64 / (n - 1) as f64)))
        .collect()
}

/// Signal frequencies (angular, rad per unit time) for an `n`-point FFT with
/// sample spacing `dt`, in standard FFT order (nonnegative then negative).
pub fn fft_omega(n: usize, dt: f64) -> Vec<f64> {
    let d = fp::TAU / (n as f64 * dt);
    (0..n)
        .map(|k| {
            if k <= n / 2 {
                k as f64 * d
            } else {
                (k as f64 - n as f64) * d
            }
        })
        .collect()
}

/// Spectral derivative of a periodic sequence sampled on a uniform grid with
/// span `L = n·dt` (the period). Exponentially accurate for smooth periodic
/// data.
pub fn spectral_derivative(samples: &[f64], span: f64) -> Result<Vec<f64>> {
    let n = samples.len();
    let mut buf = fft_real(samples)?;
    let omega = fft_omega(n, span / n as f64);
    for (k, x) in buf.iter_mut().enumerate() {
        // Multiply by iω; zero the unmatched Nyquist mode for real output.
        if n % 2 == 0 && k == n / 2 {
            *x = cr(0.0);
        } else {
            *x *= C::new(0.0, omega[k]);
        }
    }
    fft_inplace(&mut buf, true)?;
    Ok(buf.iter().map(|x| x.re).collect())
}

/// Spectral antiderivative `F(t) = ∫_{t₀}^{t} f ds` of a uniformly sampled
/// sequence over span `L`, exact for the trigonometric interpolant: the mean
/// integrates to a linear ramp, every other mode is divided by `iω`, and the
/// constant is fixed so `F(t₀) = 0`.
pub fn spectral_antiderivative(samples: &[f64], span: f64) -> Result<Vec<f64>> {
    let n = samples.len();
    let mut buf = fft_real(samples)?;
    let mean = buf[0].re / n as f64;
    let omega = fft_omega(n, span / n as f64);
    buf[0] = cr(0.0);
    for (k, x) in buf.iter_mut().enumerate().skip(1) {
        if n % 2 == 0 && k == n / 2 {
            *x = cr(0.0);
        } else {
            *x /= C::new(0.0, omega[k]);
        }
    }
    fft_inplace(&mut buf, true)?;
    let dt = span / n as f64;
    let f0 = buf[0].re;
    Ok(buf
        .iter()
        .enumerate()
        .map(|(j, x)| x.re - f0 + mean * (j as f64 * dt))
        .collect())
}

/// Parabolic (three-bin) interpolation around a local maximum at `i`.
/// Returns the sub-bin offset `δ ∈ (−1/2, 1/2)` and interpolated height.
pub fn quadratic_peak(y_prev: f64, y_mid: f64, y_next: f64) -> (f64, f64) {
    let denom = y_prev - 2.0 * y_mid + y_next;
    if denom == 0.0 {
        return (0.0, y_mid);
    }
    let delta = 0.5 * (y_prev - y_next) / denom;
    let height = y_mid - 0.25 * (y_prev - y_next) * delta;
    (delta, height)
}

/// Local maxima of `magnitude` over `lo..hi` (index bounds), each refined by
/// quadratic interpolation; returns `(fractional index, height)` pairs sorted
/// by descending height.
pub fn interpolated_peaks(
    magnitude: &[f64],
    lo: usize,
    hi: usize,
    max_peaks: usize,
) -> Vec<(f64, f64)> {
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    let hi = hi.min(magnitude.len());
    for i in lo.max(1)..hi.saturating_sub(1) {
        if magnitude[i] >= magnitude[i - 1] && magnitude[i] > magnitude[i + 1] {
            let (delta, height) = quadratic_peak(magnitude[i - 1], magnitude[i], magnitude[i + 1]);
            peaks.push((i as f64 + delta, height));
        }
    }
    peaks.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal));
    peaks.truncate(max_peaks);
    peaks
}
