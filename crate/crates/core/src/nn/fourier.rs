use core::f64::consts::PI;

use rand::Rng;

use super::{axpy, dot, Matrix, Scalar};
use crate::rng::normal;
use crate::{Error, Result};

/// Random Fourier-feature map `v = [cos(2π B x), sin(2π B x)]` with a
/// fixed `k × d` kernel whose entries are drawn from `N(0, σ²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierKernel<F> {
    b: Matrix<F>,
    sigma: f64,
}

impl<F: Scalar> FourierKernel<F> {
    pub fn new<R: Rng + ?Sized>(k: usize, d: usize, sigma: f64, rng: &mut R) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::invalid("fourier_dim", "kernel needs k >= 1 and d >= 1"));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("fourier_var", "must be finite and >= 0"));
        }
        let data = (0..k * d).map(|_| F::of(sigma * normal(rng))).collect();
        Ok(Self {
            b: Matrix::from_vec(k, d, data)?,
            sigma,
        })
    }

    pub fn from_matrix(b: Matrix<F>, sigma: f64) -> Self {
        Self { b, sigma }
    }

    pub fn matrix(&self) -> &Matrix<F> {
        &self.b
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of frequencies `k`.
    pub fn num_frequencies(&self) -> usize {
        self.b.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    /// Feature dimension `2k`.
    pub fn output_dim(&self) -> usize {
        2 * self.b.rows()
    }

    /// Maps every row of `x` (`batch × d`) to `batch × 2k` features.
    pub fn features(&self, x: &Matrix<F>) -> Result<Matrix<F>> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "fourier input",
                expected: self.input_dim(),
                got: x.cols(),
            });
        }
        let k = self.num_frequencies();
        let two_pi = F::of(2.0 * PI);
        let mut out = Matrix::zeros(x.rows(), 2 * k);
        for r in 0..x.rows() {
            let xr = x.row(r);
            let o = out.row_mut(r);
            for j in 0..k {
                let z = two_pi * dot(self.b.row(j), xr);
                o[j] = z.cos_();
                o[k + j] = z.sin_();
            }
        }
        Ok(out)
    }

    /// Pulls a feature-space gradient back to the input, using the
    /// feature values returned by [`features`](Self::features).
    pub fn backward(&self, features: &Matrix<F>, grad: &Matrix<F>) -> Result<Matrix<F>> {
        let k = self.num_frequencies();
        if features.cols() != 2 * k || grad.cols() != 2 * k || features.rows() != grad.rows() {
            return Err(Error::StaleCache);
        }
        let two_pi = F::of(2.0 * PI);
        let mut dx = Matrix::zeros(grad.rows(), self.input_dim());
        for r in 0..grad.rows() {
            let (v, g) = (features.row(r), grad.row(r));
            let out = dx.row_mut(r);
            for j in 0..k {
                // d cos z = −sin z dz, d sin z = cos z dz.
                let dz = two_pi * (g[k + j] * v[j] - g[j] * v[k + j]);
                if dz != F::zero() {
                    axpy(out, dz, self.b.row(j));
                }
            }
        }
        Ok(dx)
    }

    pub fn into_parts(self) -> (Matrix<F>, f64) {
        (self.b, self.sigma)
    }
}
