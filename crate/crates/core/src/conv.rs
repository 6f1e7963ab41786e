//! Linear convolution against a fixed kernel.

use std::collections::HashMap;
use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{RealFftPlanner, RealToComplex, ComplexToReal};

/// Inputs whose length is at most this use direct summation.
const DIRECT_LIMIT: usize = 48;

struct Plan {
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    kernel_spectrum: Vec<Complex<f64>>,
}

/// Convolves many inputs with the same kernel, caching FFT plans per size.
pub struct Convolver {
    kernel: Vec<f64>,
    planner: RealFftPlanner<f64>,
    plans: HashMap<usize, Plan>,
    buf: Vec<f64>,
    spec: Vec<Complex<f64>>,
}

impl Convolver {
    pub fn new(kernel: &[f64]) -> Self {
        assert!(!kernel.is_empty());
        Convolver {
            kernel: kernel.to_vec(),
            planner: RealFftPlanner::new(),
            plans: HashMap::new(),
            buf: Vec::new(),
            spec: Vec::new(),
        }
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// `out` ← x ⋆ kernel, of length `x.len() + kernel.len() − 1`.
    pub fn convolve(&mut self, x: &[f64], out: &mut Vec<f64>) {
        let len = x.len() + self.kernel.len() - 1;
        out.clear();
        out.resize(len, 0.0);
        if x.is_empty() {
            out.clear();
            return;
        }
        if x.len().min(self.kernel.len()) <= DIRECT_LIMIT {
            direct(x, &self.kernel, out);
        } else {
            self.via_fft(x, out);
        }
    }

    fn via_fft(&mut self, x: &[f64], out: &mut [f64]) {
        let size = out.len().next_power_of_two();
        let kernel = &self.kernel;
        let planner = &mut self.planner;
        let plan = self.plans.entry(size).or_insert_with(|| {
            let forward = planner.plan_fft_forward(size);
            let inverse = planner.plan_fft_inverse(size);
            let mut input = forward.make_input_vec();
            input[..kernel.len()].copy_from_slice(kernel);
            let mut kernel_spectrum = forward.make_output_vec();
            forward
                .process(&mut input, &mut kernel_spectrum)
                .expect("buffer sizes come from the planner");
            Plan {
                forward,
                inverse,
                kernel_spectrum,
            }
        });
        self.buf.clear();
        self.buf.resize(size, 0.0);
        self.buf[..x.len()].copy_from_slice(x);
        self.spec.clear();
        self.spec.resize(size / 2 + 1, Complex::new(0.0, 0.0));
        plan.forward
            .process(&mut self.buf, &mut self.spec)
            .expect("buffer sizes come from the planner");
        for (s, k) in self.spec.iter_mut().zip(&plan.kernel_spectrum) {
            *s *= k;
        }
        // the inverse transform requires real DC and Nyquist bins
        self.spec[0].im = 0.0;
        if let Some(last) = self.spec.last_mut() {
            last.im = 0.0;
        }
        plan.inverse
            .process(&mut self.spec, &mut self.buf)
            .expect("buffer sizes come from the planner");
        let scale = 1.0 / size as f64;
        for (o, v) in out.iter_mut().zip(&self.buf) {
            *o = (v * scale).max(0.0);
        }
    }
}

/// Direct full convolution; `out` must be zeroed with the full length.
pub fn direct(x: &[f64], k: &[f64], out: &mut [f64]) {
    if k.len() <= x.len() {
        for (j, &kj) in k.iter().enumerate() {
            for (o, &xi) in out[j..j + x.len()].iter_mut().zip(x) {
                *o += xi * kj;
            }
        }
    } else {
        for (i, &xi) in x.iter().enumerate() {
            for (o, &kj) in out[i..i + k.len()].iter_mut().zip(k) {
                *o += xi * kj;
            }
        }
    }
}
