//! Horizontal Fourier machinery for the box.
//!
//! A periodic grid is transformed as is. A reflecting grid is first mirrored
//! across each face into a periodic grid of twice the width; even symbols
//! then act as cosine-series multipliers on the original box.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Lateral, SlabGrid};

pub struct Horizontal {
    dim: usize,
    nx: usize,
    ext: usize,
    lateral: Lateral,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Horizontal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Horizontal")
            .field("dim", &self.dim)
            .field("nx", &self.nx)
            .field("ext", &self.ext)
            .field("lateral", &self.lateral)
            .finish()
    }
}

impl Horizontal {
    pub fn new(grid: &SlabGrid) -> Self {
        let nx = grid.nx();
        let ext = match grid.lateral() {
            Lateral::Periodic => nx,
            Lateral::Reflecting => 2 * nx,
        };
        let width = ext as f64 * grid.spacing();
        let wavenumbers = (0..ext)
            .map(|m| {
                let signed = if m <= ext / 2 {
                    m as f64
                } else {
                    m as f64 - ext as f64
                };
                2.0 * PI * signed / width
            })
            .collect();
        let mut planner = FftPlanner::new();
        Self {
            dim: grid.dim(),
            nx,
            ext,
            lateral: grid.lateral(),
            wavenumbers,
            forward: planner.plan_fft_forward(ext),
            inverse: planner.plan_fft_inverse(ext),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Side length of the periodic (possibly mirrored) transform grid.
    pub fn ext(&self) -> usize {
        self.ext
    }

    pub fn mode_count(&self) -> usize {
        self.ext.pow(self.dim as u32)
    }

    /// Axis wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Wave vector of mode `idx` in FFT order.
    pub fn wave_vector(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.wavenumbers[idx], 0.0],
            _ => [
                self.wavenumbers[idx / self.ext],
                self.wavenumbers[idx % self.ext],
            ],
        }
    }

    /// `|xi|` for every mode.
    pub fn xi_abs(&self) -> Vec<f64> {
        (0..self.mode_count())
            .map(|i| {
                let [a, b] = self.wave_vector(i);
                a.hypot(b)
            })
            .collect()
    }

    /// Distinct `|xi|` values and the class index of every mode. Modes
    /// related by sign flips or axis swaps share a class.
    pub fn radial_classes(&self) -> (Vec<f64>, Vec<usize>) {
        let half = self.ext / 2;
        let fold = |m: usize| if m <= half { m } else { self.ext - m };
        match self.dim {
            1 => {
                let xi = (0..=half).map(|p| self.wavenumbers[p].abs()).collect();
                (xi, (0..self.ext).map(fold).collect())
            }
            _ => {
                let mut slot = vec![usize::MAX; (half + 1) * (half + 1)];
                let mut xi = Vec::new();
                for p in 0..=half {
                    for q in p..=half {
                        slot[p * (half + 1) + q] = xi.len();
                        slot[q * (half + 1) + p] = xi.len();
                        xi.push(self.wavenumbers[p].abs().hypot(self.wavenumbers[q].abs()));
                    }
                }
                let mut class = Vec::with_capacity(self.mode_count());
                for m1 in 0..self.ext {
                    for m2 in 0..self.ext {
                        class.push(slot[fold(m1) * (half + 1) + fold(m2)]);
                    }
                }
                (xi, class)
            }
        }
    }

    /// Builds a per-mode table by evaluating `f(|xi|)` once per radial class.
    pub fn radial_table(&self, f: impl FnMut(f64) -> f64) -> Vec<f64> {
        let (xi, class) = self.radial_classes();
        let values: Vec<f64> = xi.into_iter().map(f).collect();
        class.into_iter().map(|c| values[c]).collect()
    }

    /// Fallible variant of [`Self::radial_table`].
    pub fn try_radial_table<E>(
        &self,
        mut f: impl FnMut(f64) -> std::result::Result<f64, E>,
    ) -> std::result::Result<Vec<f64>, E> {
        let (xi, class) = self.radial_classes();
        let mut values = Vec::with_capacity(xi.len());
        for x in xi {
            values.push(f(x)?);
        }
        Ok(class.into_iter().map(|c| values[c]).collect())
    }

    fn is_nyquist(&self, m: usize) -> bool {
        m == self.ext / 2
    }

    /// `u` on the box mapped to the transform grid (mirror for reflecting).
    pub fn extend(&self, u: &[f64]) -> Vec<Complex64> {
        let (n, e) = (self.nx, self.ext);
        let src = |i: usize| if i < n { i } else { 2 * n - 1 - i };
        match (self.dim, self.lateral) {
            (_, Lateral::Periodic) => u.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            (1, Lateral::Reflecting) => (0..e).map(|i| Complex64::new(u[src(i)], 0.0)).collect(),
            (_, Lateral::Reflecting) => {
                let mut out = Vec::with_capacity(e * e);
                for i in 0..e {
                    let row = src(i) * n;
                    for j in 0..e {
                        out.push(Complex64::new(u[row + src(j)], 0.0));
                    }
                }
                out
            }
        }
    }

    /// Adjoint of [`Self::extend`]: sums the mirrored copies back onto the box.
    pub fn fold(&self, w: &[Complex64]) -> Vec<f64> {
        let (n, e) = (self.nx, self.ext);
        let src = |i: usize| if i < n { i } else { 2 * n - 1 - i };
        match (self.dim, self.lateral) {
            (_, Lateral::Periodic) => w.iter().map(|c| c.re).collect(),
            (1, Lateral::Reflecting) => {
                let mut out = vec![0.0; n];
                for (i, c) in w.iter().enumerate() {
                    out[src(i)] += c.re;
                }
                out
            }
            (_, Lateral::Reflecting) => {
                let mut out = vec![0.0; n * n];
                for i in 0..e {
                    for j in 0..e {
                        out[src(i) * n + src(j)] += w[i * e + j].re;
                    }
                }
                out
            }
        }
    }

    /// Restriction of a transform-grid field to the box.
    pub fn restrict(&self, w: &[Complex64]) -> Vec<f64> {
        let (n, e) = (self.nx, self.ext);
        match (self.dim, self.lateral) {
            (_, Lateral::Periodic) => w.iter().map(|c| c.re).collect(),
            (1, Lateral::Reflecting) => w[..n].iter().map(|c| c.re).collect(),
            (_, Lateral::Reflecting) => {
                let mut out = Vec::with_capacity(n * n);
                for i in 0..n {
                    out.extend(w[i * e..i * e + n].iter().map(|c| c.re));
                }
                out
            }
        }
    }

    /// Adjoint of [`Self::restrict`]: zero padding.
    pub fn pad(&self, u: &[f64]) -> Vec<Complex64> {
        let (n, e) = (self.nx, self.ext);
        match (self.dim, self.lateral) {
            (_, Lateral::Periodic) => u.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            (1, Lateral::Reflecting) => {
                let mut out = vec![Complex64::new(0.0, 0.0); e];
                for (o, &v) in out.iter_mut().zip(u) {
                    o.re = v;
                }
                out
            }
            (_, Lateral::Reflecting) => {
                let mut out = vec![Complex64::new(0.0, 0.0); e * e];
                for i in 0..n {
                    for j in 0..n {
                        out[i * e + j].re = u[i * n + j];
                    }
                }
                out
            }
        }
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        match self.dim {
            1 => fft.process(data),
            _ => {
                let e = self.ext;
                fft.process(data);
                transpose_square(data, e);
                fft.process(data);
                transpose_square(data, e);
            }
        }
    }

    /// Unnormalized forward FFT in place.
    pub fn fft(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse FFT in place, normalized.
    pub fn ifft(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.mode_count() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    /// Fourier coefficients of the extended field.
    pub fn modes(&self, u: &[f64]) -> Vec<Complex64> {
        let mut w = self.extend(u);
        self.fft(&mut w);
        w
    }

    /// Box values of the inverse transform of `modes`.
    pub fn synthesize(&self, mut modes: Vec<Complex64>) -> Vec<f64> {
        self.ifft(&mut modes);
        self.restrict(&modes)
    }

    /// Applies the real even multiplier `table` (one entry per mode).
    pub fn apply_table(&self, u: &[f64], table: &[f64]) -> Vec<f64> {
        let mut w = self.modes(u);
        for (c, m) in w.iter_mut().zip(table) {
            *c *= *m;
        }
        self.synthesize(w)
    }

    /// Spectral partial derivative along `axis` (Nyquist component dropped).
    pub fn derivative(&self, u: &[f64], axis: usize) -> Vec<f64> {
        let mut w = self.modes(u);
        self.multiply_derivative(&mut w, axis, 1.0);
        self.synthesize(w)
    }

    /// Adjoint of [`Self::derivative`] with respect to the plain dot product.
    pub fn derivative_adjoint(&self, g: &[f64], axis: usize) -> Vec<f64> {
        let mut w = self.pad(g);
        self.fft(&mut w);
        self.multiply_derivative(&mut w, axis, -1.0);
        self.ifft(&mut w);
        self.fold(&w)
    }

    fn multiply_derivative(&self, w: &mut [Complex64], axis: usize, sign: f64) {
        let e = self.ext;
        for (idx, c) in w.iter_mut().enumerate() {
            let m = match (self.dim, axis) {
                (1, _) => idx,
                (_, 0) => idx / e,
                _ => idx % e,
            };
            if self.is_nyquist(m) {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, sign * self.wavenumbers[m]);
            }
        }
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SlabGrid;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn derivative_of_cosine() {
        let g = SlabGrid::new(1, 2.0 * PI, 32, 3, 1.0).unwrap();
        let h = Horizontal::new(&g);
        let u: Vec<f64> = g.axis_coords().iter().map(|x| (3.0 * x).cos()).collect();
        let du = h.derivative(&u, 0);
        for (x, d) in g.axis_coords().iter().zip(&du) {
            assert!((d + 3.0 * (3.0 * x).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoints_hold_for_both_closures() {
        for lateral in [Lateral::Periodic, Lateral::Reflecting] {
            for dim in [1, 2] {
                let g = SlabGrid::new(dim, 3.0, 8, 3, 1.0)
                    .unwrap()
                    .with_lateral(lateral);
                let h = Horizontal::new(&g);
                let n = g.trace_len();
                let u = pseudo_random(n, 1);
                let w = pseudo_random(n, 2);
                for axis in 0..dim {
                    let lhs = dot(&h.derivative(&u, axis), &w);
                    let rhs = dot(&u, &h.derivative_adjoint(&w, axis));
                    assert!((lhs - rhs).abs() < 1e-12, "{lateral:?} {dim} {axis}");
                }
                let table = h.radial_table(|k| k * k + 1.0);
                let lhs = dot(&h.apply_table(&u, &table), &w);
                let rhs = dot(&u, &h.apply_table(&w, &table));
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reflecting_preserves_neumann_cosines() {
        let g = SlabGrid::new(1, 4.0, 16, 3, 1.0)
            .unwrap()
            .with_lateral(Lateral::Reflecting);
        let h = Horizontal::new(&g);
        // cos(pi (x + L/2) / L) has zero slope at both faces.
        let u: Vec<f64> = g
            .axis_coords()
            .iter()
            .map(|x| (PI * (x + 2.0) / 4.0).cos())
            .collect();
        let table = h.radial_table(|k| k * k);
        let lu = h.apply_table(&u, &table);
        let k2 = (PI / 4.0).powi(2);
        for (a, b) in lu.iter().zip(&u) {
            assert!((a - k2 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_table_matches_direct_evaluation() {
        let g = SlabGrid::new(2, 5.0, 8, 3, 1.0)
            .unwrap()
            .with_lateral(Lateral::Reflecting);
        let h = Horizontal::new(&g);
        let direct: Vec<f64> = h.xi_abs().iter().map(|k| k.sqrt()).collect();
        let table = h.radial_table(f64::sqrt);
        for (a, b) in direct.iter().zip(&table) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
