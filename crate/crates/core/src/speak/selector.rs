use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embed::{EmbedError, TextEncoder};

/// Candidates of one agent with the selector's distribution and draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementSet {
    pub agent: usize,
    pub candidates: [String; 3],
    pub selected: usize,
    pub probs: [f64; 3],
}

impl StatementSet {
    pub fn selected_text(&self) -> &str {
        &self.candidates[self.selected]
    }
}

/// Scaled dot-product scorer: a learned query against key-projected
/// candidate encodings, softmax at `temperature`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorParams {
    pub key_dim: usize,
    pub input_dim: usize,
    pub query: Vec<f64>,
    /// Row-major `key_dim x input_dim`.
    pub keys: Vec<f64>,
    pub temperature: f64,
}

impl SelectorParams {
    pub fn init<R: Rng + ?Sized>(key_dim: usize, input_dim: usize, rng: &mut R) -> Self {
        let kb = 1.0 / (input_dim.max(1) as f64).sqrt();
        Self {
            key_dim,
            input_dim,
            query: (0..key_dim).map(|_| StandardNormal.sample(rng)).collect(),
            keys: (0..key_dim * input_dim).map(|_| rng.random_range(-kb..kb)).collect(),
            temperature: 1.0,
        }
    }

    fn key(&self, e: &[f64]) -> Vec<f64> {
        self.keys
            .chunks(self.input_dim)
            .map(|row| row.iter().zip(e).map(|(w, x)| w * x).sum())
            .collect()
    }

    /// `q . K e_j / sqrt(d_k)` for each encoded candidate.
    pub fn scores(&self, encoded: &[Vec<f64>]) -> Vec<f64> {
        let scale = (self.key_dim as f64).sqrt();
        encoded
            .iter()
            .map(|e| self.key(e).iter().zip(&self.query).map(|(k, q)| k * q).sum::<f64>() / scale)
            .collect()
    }

    pub fn probabilities(&self, encoded: &[Vec<f64>]) -> Vec<f64> {
        let z: Vec<f64> = self.scores(encoded).iter().map(|s| s / self.temperature).collect();
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ex: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let total: f64 = ex.iter().sum();
        ex.iter().map(|v| v / total).collect()
    }

    /// Encodes the candidates, forms the distribution and samples one index.
    pub fn select<R: Rng + ?Sized>(
        &self,
        agent: usize,
        candidates: [String; 3],
        encoder: &dyn TextEncoder,
        rng: &mut R,
    ) -> Result<StatementSet, EmbedError> {
        let encoded = candidates
            .iter()
            .map(|c| encoder.encode(c))
            .collect::<Result<Vec<_>, _>>()?;
        let p = self.probabilities(&encoded);
        let probs = [p[0], p[1], p[2]];
        Ok(StatementSet {
            agent,
            candidates,
            selected: sample_index(&probs, rng),
            probs,
        })
    }

    /// One REINFORCE ascent step on `log p(chosen)` scaled by `advantage`.
    pub fn reinforce(&mut self, encoded: &[Vec<f64>], chosen: usize, advantage: f64, lr: f64) {
        let p = self.probabilities(encoded);
        let scale = (self.key_dim as f64).sqrt() * self.temperature;
        let keys: Vec<Vec<f64>> = encoded.iter().map(|e| self.key(e)).collect();
        let mut dq = vec![0.0; self.key_dim];
        let mut dk = vec![0.0; self.keys.len()];
        for (j, e) in encoded.iter().enumerate() {
            let ds = (f64::from(u8::from(j == chosen)) - p[j]) / scale;
            for r in 0..self.key_dim {
                dq[r] += ds * keys[j][r];
                let row = &mut dk[r * self.input_dim..(r + 1) * self.input_dim];
                for (g, x) in row.iter_mut().zip(e) {
                    *g += ds * self.query[r] * x;
                }
            }
        }
        let step = lr * advantage;
        self.query.iter_mut().zip(&dq).for_each(|(q, g)| *q += step * g);
        self.keys.iter_mut().zip(&dk).for_each(|(k, g)| *k += step * g);
    }
}

/// Inverse-CDF draw with one uniform variate.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}
