//! Real 2D FFT between `M × M` samples and the half-spectrum layout.

use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Plans for one grid size. All plans are `Sync`; scratch space is
/// allocated per call, so a single instance can serve concurrent callers.
pub(crate) struct SpectralTransform {
    m: usize,
    row_forward: Arc<dyn RealToComplex<f64>>,
    row_inverse: Arc<dyn ComplexToReal<f64>>,
    column_forward: Arc<dyn Fft<f64>>,
    column_inverse: Arc<dyn Fft<f64>>,
}

impl SpectralTransform {
    pub(crate) fn new(m: usize) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut complex = FftPlanner::<f64>::new();
        SpectralTransform {
            m,
            row_forward: real.plan_fft_forward(m),
            row_inverse: real.plan_fft_inverse(m),
            column_forward: complex.plan_fft_forward(m),
            column_inverse: complex.plan_fft_inverse(m),
        }
    }

    /// Samples (row-major, `x₁` slow) to coefficients normalized as the mean
    /// of `v·e^{-ik·x}`.
    pub(crate) fn forward(&self, samples: &[f64]) -> Vec<Complex64> {
        let m = self.m;
        let h = m / 2 + 1;
        debug_assert_eq!(samples.len(), m * m);

        let mut row_in = vec![0.0; m];
        let mut rows = vec![Complex64::new(0.0, 0.0); m * h];
        let mut scratch = self.row_forward.make_scratch_vec();
        for i1 in 0..m {
            row_in.copy_from_slice(&samples[i1 * m..(i1 + 1) * m]);
            self.row_forward
                .process_with_scratch(&mut row_in, &mut rows[i1 * h..(i1 + 1) * h], &mut scratch)
                .expect("row transform length");
        }

        // columns become contiguous: out[b * m + i1]
        let mut out = vec![Complex64::new(0.0, 0.0); m * h];
        for i1 in 0..m {
            for b in 0..h {
                out[b * m + i1] = rows[i1 * h + b];
            }
        }
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.column_forward.get_inplace_scratch_len()];
        self.column_forward.process_with_scratch(&mut out, &mut scratch);

        let scale = 1.0 / (m * m) as f64;
        for c in &mut out {
            *c *= scale;
        }
        out
    }

    /// Coefficients back to samples: `v(x) = Σ v̂_k e^{ik·x}`.
    pub(crate) fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let m = self.m;
        let h = m / 2 + 1;
        debug_assert_eq!(coeffs.len(), m * h);

        let mut cols = coeffs.to_vec();
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.column_inverse.get_inplace_scratch_len()];
        self.column_inverse.process_with_scratch(&mut cols, &mut scratch);

        let mut row = vec![Complex64::new(0.0, 0.0); h];
        let mut out = vec![0.0; m * m];
        let mut scratch = self.row_inverse.make_scratch_vec();
        for i1 in 0..m {
            for b in 0..h {
                row[b] = cols[b * m + i1];
            }
            // self-conjugate entries are real for Hermitian input
            row[0].im = 0.0;
            row[h - 1].im = 0.0;
            self.row_inverse
                .process_with_scratch(&mut row, &mut out[i1 * m..(i1 + 1) * m], &mut scratch)
                .expect("row transform length");
        }
        out
    }
}
