use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::bounds::{BiLipschitzConstants, Certificate};
use crate::error::{domain, Error, Result};
use crate::scalar::{lit, Real};

use super::Flow;

/// `z = U diag(s) Vᵀ x + b`, kept in factored form so that the Lipschitz
/// constants and the Jacobian determinant are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFlowD<T> {
    dim: usize,
    /// Row-major `d × d`.
    u: Vec<T>,
    singular_values: Vec<T>,
    /// Row-major `d × d`.
    vt: Vec<T>,
    offset: Vec<T>,
}

fn is_orthogonal<T: Real>(m: &[T], d: usize) -> bool {
    let tol: T = T::epsilon().sqrt() * lit(16.0);
    for i in 0..d {
        for j in 0..d {
            let dot = (0..d).fold(T::zero(), |acc, k| acc + m[k * d + i] * m[k * d + j]);
            let want = if i == j { T::one() } else { T::zero() };
            if !((dot - want).abs() <= tol) {
                return false;
            }
        }
    }
    true
}

fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

fn mat_vec<T: Real>(m: &[T], x: &[T], d: usize) -> Vec<T> {
    (0..d)
        .map(|i| (0..d).fold(T::zero(), |acc, k| acc + m[i * d + k] * x[k]))
        .collect()
}

fn mat_t_vec<T: Real>(m: &[T], x: &[T], d: usize) -> Vec<T> {
    (0..d)
        .map(|i| (0..d).fold(T::zero(), |acc, k| acc + m[k * d + i] * x[k]))
        .collect()
}

impl<T: Real> AffineFlowD<T> {
    pub fn from_svd(u: Vec<T>, singular_values: Vec<T>, vt: Vec<T>, offset: Vec<T>) -> Result<Self> {
        let dim = singular_values.len();
        if dim == 0 {
            return domain("affine flow needs dimension >= 1");
        }
        for (got, want) in [(u.len(), dim * dim), (vt.len(), dim * dim), (offset.len(), dim)] {
            if got != want {
                return Err(Error::DimensionMismatch { expected: want, got });
            }
        }
        if singular_values.iter().any(|s| !(s.is_finite() && *s > T::zero())) {
            return domain("singular values must be finite and > 0 (matrix must be invertible)");
        }
        if offset.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("affine offset".into()));
        }
        if !is_orthogonal(&u, dim) || !is_orthogonal(&vt, dim) {
            return domain("U and Vᵀ must be orthogonal");
        }
        Ok(Self {
            dim,
            u,
            singular_values,
            vt,
            offset,
        })
    }

    /// Factorizes a row-major `d × d` matrix.
    pub fn from_matrix(matrix: &[T], offset: Vec<T>) -> Result<Self> {
        let d = offset.len();
        if matrix.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: matrix.len(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("affine matrix".into()));
        }
        let m = DMatrix::from_row_iterator(d, d, matrix.iter().map(|&v| to_f64(v)));
        let svd = m.svd(true, true);
        let (u, vt) = match (svd.u, svd.v_t) {
            (Some(u), Some(vt)) => (u, vt),
            _ => return domain("SVD did not converge"),
        };
        let row_major = |a: &DMatrix<f64>| -> Vec<T> {
            (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| lit(a[(i, j)])).collect()
        };
        let s: Vec<T> = svd.singular_values.iter().map(|&v| lit(v)).collect();
        Self::from_svd(row_major(&u), s, row_major(&vt), offset)
    }

    /// `z = a·x + b` in every coordinate.
    pub fn scaled_identity(dim: usize, a: T, offset: Vec<T>) -> Result<Self> {
        let mut eye = vec![T::zero(); dim * dim];
        for i in 0..dim {
            eye[i * dim + i] = T::one();
        }
        Self::from_svd(eye.clone(), vec![a; dim], eye, offset)
    }

    /// Random rotations with singular values log-uniform in `[s_min, s_max]`.
    pub fn random(dim: usize, s_min: T, s_max: T, seed: u64) -> Result<Self> {
        if !(s_min > T::zero() && s_max >= s_min && s_max.is_finite()) {
            return domain(format!("need 0 < s_min <= s_max < inf, got [{s_min}, {s_max}]"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let orthogonal = |rng: &mut ChaCha8Rng| -> Vec<T> {
            let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
            let qr = g.qr();
            let (mut q, r) = (qr.q(), qr.r());
            // Sign fix so Q is Haar distributed.
            for j in 0..dim {
                if r[(j, j)] < 0.0 {
                    q.column_mut(j).neg_mut();
                }
            }
            (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| lit(q[(i, j)])).collect()
        };
        let u = orthogonal(&mut rng);
        let vt = orthogonal(&mut rng);
        let (lo, hi) = (to_f64(s_min).ln(), to_f64(s_max).ln());
        let s: Vec<T> = if lo == hi {
            vec![s_min; dim]
        } else {
            let dist = Uniform::new_inclusive(lo, hi);
            (0..dim).map(|_| lit(dist.sample(&mut rng).exp())).collect()
        };
        let offset = (0..dim).map(|_| lit(StandardNormal.sample(&mut rng))).collect();
        Self::from_svd(u, s, vt, offset)
    }

    pub fn singular_values(&self) -> &[T] {
        &self.singular_values
    }

    pub fn offset(&self) -> &[T] {
        &self.offset
    }

    /// Dense row-major matrix `U diag(s) Vᵀ`.
    pub fn matrix(&self) -> Vec<T> {
        let d = self.dim;
        let mut m = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = (0..d).fold(T::zero(), |acc, k| {
                    acc + self.u[i * d + k] * self.singular_values[k] * self.vt[k * d + j]
                });
            }
        }
        m
    }
}

impl<T: Real> Flow<T> for AffineFlowD<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn forward(&self, x: &[T]) -> Vec<T> {
        let d = self.dim;
        let mut y = mat_vec(&self.vt, x, d);
        for (v, s) in y.iter_mut().zip(&self.singular_values) {
            *v = *v * *s;
        }
        let mut z = mat_vec(&self.u, &y, d);
        for (v, b) in z.iter_mut().zip(&self.offset) {
            *v = *v + *b;
        }
        z
    }

    fn inverse(&self, z: &[T]) -> Vec<T> {
        let d = self.dim;
        let shifted: Vec<T> = z.iter().zip(&self.offset).map(|(&a, &b)| a - b).collect();
        let mut y = mat_t_vec(&self.u, &shifted, d);
        for (v, s) in y.iter_mut().zip(&self.singular_values) {
            *v = *v / *s;
        }
        mat_t_vec(&self.vt, &y, d)
    }

    fn abs_det_jacobian(&self, _x: &[T]) -> T {
        self.singular_values.iter().fold(T::one(), |acc, &s| acc * s)
    }

    fn certify(&self) -> BiLipschitzConstants<T> {
        let max = self.singular_values.iter().copied().fold(T::zero(), T::max);
        let min = self.singular_values.iter().copied().fold(T::infinity(), T::min);
        BiLipschitzConstants::with_certificate(max, T::one() / min, Certificate::SingularValues)
            .expect("singular values are finite and positive")
    }
}
