use rand::Rng;

use crate::Scalar;

/// Trainable linear map `P: R^D -> R^d` (no bias, so `m` is scale invariant).
///
/// Weights are row-major `d x D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection<F> {
    out_dim: usize,
    in_dim: usize,
    weights: Vec<F>,
}

impl<F: Scalar> Projection<F> {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            out_dim,
            in_dim,
            weights: vec![F::zero(); out_dim * in_dim],
        }
    }

    /// `P[i][i] = 1` for `i < min(d, D)`.
    pub fn identity_block(out_dim: usize, in_dim: usize) -> Self {
        let mut p = Self::zeros(out_dim, in_dim);
        for i in 0..out_dim.min(in_dim) {
            p.weights[i * in_dim + i] = F::one();
        }
        p
    }

    /// Uniform in `+-1/sqrt(D)`.
    pub fn init_uniform<R: Rng + ?Sized>(out_dim: usize, in_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (in_dim.max(1) as f64).sqrt();
        let weights = (0..out_dim * in_dim)
            .map(|_| F::of(rng.random_range(-bound..bound)))
            .collect();
        Self {
            out_dim,
            in_dim,
            weights,
        }
    }

    pub fn from_weights(out_dim: usize, in_dim: usize, weights: Vec<F>) -> Option<Self> {
        (weights.len() == out_dim * in_dim).then_some(Self {
            out_dim,
            in_dim,
            weights,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn params(&self) -> &[F] {
        &self.weights
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.weights
    }

    /// `u = P h`.
    pub fn project(&self, pooled: &[F]) -> Vec<F> {
        assert_eq!(pooled.len(), self.in_dim, "pooled dimension");
        self.weights
            .chunks(self.in_dim.max(1))
            .take(self.out_dim)
            .map(|row| row.iter().zip(pooled).map(|(&w, &h)| w * h).sum())
            .collect()
    }

    /// `m = u / ||u||`; zero when `u` is zero.
    pub fn embed(&self, pooled: &[F]) -> Vec<F> {
        let u = self.project(pooled);
        let norm = u.iter().map(|&v| v * v).sum::<F>().sqrt();
        if norm > F::zero() {
            u.into_iter().map(|v| v / norm).collect()
        } else {
            u
        }
    }

    /// Accumulates `d(m . upstream)/dP` into `grad` (same layout as the weights).
    pub fn backward_into(&self, pooled: &[F], upstream: &[F], grad: &mut [F]) {
        assert_eq!(upstream.len(), self.out_dim);
        assert_eq!(grad.len(), self.weights.len());
        let u = self.project(pooled);
        let norm = u.iter().map(|&v| v * v).sum::<F>().sqrt();
        if norm <= F::zero() {
            return;
        }
        // dm/du = (I - m m^T) / ||u||
        let m: Vec<F> = u.iter().map(|&v| v / norm).collect();
        let m_dot_up: F = m.iter().zip(upstream).map(|(&a, &b)| a * b).sum();
        for (i, row) in grad.chunks_mut(self.in_dim).enumerate() {
            let du = (upstream[i] - m[i] * m_dot_up) / norm;
            if du == F::zero() {
                continue;
            }
            for (g, &h) in row.iter_mut().zip(pooled) {
                *g = *g + du * h;
            }
        }
    }
}
