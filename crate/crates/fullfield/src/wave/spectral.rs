//! 2-D FFT engine used by the k-space solver: row/column transforms with a
//! reusable plan, real multiplier application and spectral gradients.
//!
//! Row batches may run on the rayon pool; every row is an independent
//! transform and reductions never happen here, so results do not depend on
//! the thread count.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::exec::{self, ExecMode};

pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-9 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

pub(crate) struct Spectral {
    n: usize,
    mode: ExecMode,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    freq: Vec<Complex64>,
    swap: Vec<Complex64>,
}

impl Spectral {
    pub fn new(n: usize, mode: ExecMode) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let zero = Complex64::new(0.0, 0.0);
        Spectral { n, mode, fwd, inv, freq: vec![zero; n * n], swap: vec![zero; n * n] }
    }

    fn rows_fft(&mut self, inverse: bool) {
        let plan = if inverse { self.inv.clone() } else { self.fwd.clone() };
        let scratch_len = plan.get_inplace_scratch_len();
        exec::for_each_row_init(
            self.mode,
            &mut self.freq,
            self.n,
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, _, row| plan.process_with_scratch(row, scratch),
        );
    }

    fn transpose(&mut self) {
        transpose::transpose(&self.freq, &mut self.swap, self.n, self.n);
        std::mem::swap(&mut self.freq, &mut self.swap);
    }

    /// Loads `real` and computes its 2-D DFT into the internal buffer.
    pub fn forward(&mut self, real: &[f64]) {
        debug_assert_eq!(real.len(), self.n * self.n);
        let n = self.n;
        exec::fill_rows(self.mode, &mut self.freq, n, |i, row| {
            for (c, &v) in row.iter_mut().zip(&real[i * n..(i + 1) * n]) {
                *c = Complex64::new(v, 0.0);
            }
        });
        self.rows_fft(false);
        self.transpose();
        self.rows_fft(false);
        self.transpose();
    }

    /// Inverse-transforms the internal buffer and writes the real part.
    pub fn inverse_into(&mut self, out: &mut [f64]) {
        self.rows_fft(true);
        self.transpose();
        self.rows_fft(true);
        self.transpose();
        let n = self.n;
        let scale = 1.0 / (n * n) as f64;
        let freq = &self.freq;
        exec::fill_rows(self.mode, out, n, |i, row| {
            for (v, c) in row.iter_mut().zip(&freq[i * n..(i + 1) * n]) {
                *v = c.re * scale;
            }
        });
    }

    /// `out = IFFT( mult .* FFT(real_in) )`, with a real symbol `mult` laid
    /// out like the fields (index `i1*n + i2`).
    pub fn apply_real_multiplier(&mut self, real_in: &[f64], mult: &[f64], out: &mut [f64]) {
        self.forward(real_in);
        let n = self.n;
        exec::for_each_row(self.mode, &mut self.freq, n, |i, row| {
            for (c, &m) in row.iter_mut().zip(&mult[i * n..(i + 1) * n]) {
                *c *= m;
            }
        });
        self.inverse_into(out);
    }

    /// Spectral gradient of `real_in`. `k` are the per-axis frequencies in
    /// FFT order; the Nyquist mode is dropped so the derivative stays real.
    pub fn gradient_into(&mut self, real_in: &[f64], k: &[f64], g1: &mut [f64], g2: &mut [f64]) {
        self.forward(real_in);
        let saved = self.freq.clone();
        let n = self.n;
        let nyq = n / 2;
        exec::for_each_row(self.mode, &mut self.freq, n, |_, row| {
            for (i2, c) in row.iter_mut().enumerate() {
                let kk = if i2 == nyq { 0.0 } else { k[i2] };
                *c = Complex64::new(-c.im * kk, c.re * kk);
            }
        });
        self.inverse_into(g2);
        self.freq.copy_from_slice(&saved);
        exec::for_each_row(self.mode, &mut self.freq, n, |i1, row| {
            let kk = if i1 == nyq { 0.0 } else { k[i1] };
            for c in row.iter_mut() {
                *c = Complex64::new(-c.im * kk, c.re * kk);
            }
        });
        self.inverse_into(g1);
    }
}
