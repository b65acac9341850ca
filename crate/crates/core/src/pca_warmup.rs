//! One-component PCA warm-up.
//!
//! The first principal direction `w` of the standardized data gives every row
//! a surrogate utility score `t_i = x_i . w`. Rows that the rank-1
//! reconstruction explains well (small residual) are sampled more often, and
//! each sampled pair is labeled by comparing scores. The number of pairs
//! shrinks as the residual variance grows.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seeding;
use crate::tabular_prep::PreparedDataset;

pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERATIONS: usize = 10_000;
pub const CENTERING_TOLERANCE: f64 = 1e-6;
pub const K_RANGE: (f64, f64) = (1.0, 100.0);
pub const ALPHA_RANGE: (f64, f64) = (1e-7, 1e-4);
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    PowerIteration { iterations: usize },
    /// Power iteration hit the cap; the dense symmetric solver was used.
    DenseFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    /// Unit-norm first principal direction, largest-magnitude entry positive.
    pub w: Vec<f64>,
    pub scores: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Mean squared residual.
    pub sigma_r2: f64,
    /// Largest eigenvalue of `S = X^T X / n`.
    pub eigenvalue: f64,
    /// `trace(S)`, the total variance.
    pub total_variance: f64,
    pub method: EigenMethod,
}

fn covariance(x: &[f64], n: usize, p: usize) -> Vec<f64> {
    let mut s = vec![0.0; p * p];
    for row in x.chunks_exact(p) {
        for a in 0..p {
            let ra = row[a];
            for b in a..p {
                s[a * p + b] += ra * row[b];
            }
        }
    }
    let inv = 1.0 / n as f64;
    for a in 0..p {
        for b in a..p {
            let v = s[a * p + b] * inv;
            s[a * p + b] = v;
            s[b * p + a] = v;
        }
    }
    s
}

fn mat_vec(s: &[f64], v: &[f64], out: &mut [f64]) {
    let p = v.len();
    for (a, o) in out.iter_mut().enumerate() {
        *o = s[a * p..(a + 1) * p].iter().zip(v).map(|(x, y)| x * y).sum();
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Returns the converged unit vector and iteration count, or `None` if the
/// iteration cap was reached.
fn power_iteration(s: &[f64], p: usize) -> Option<(Vec<f64>, usize)> {
    let mut v = vec![1.0; p];
    v[0] += 0.5;
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut next = vec![0.0; p];
    for it in 1..=POWER_MAX_ITERATIONS {
        mat_vec(s, &v, &mut next);
        let nn = norm(&next);
        if nn == 0.0 {
            return None;
        }
        next.iter_mut().for_each(|x| *x /= nn);
        let delta = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        std::mem::swap(&mut v, &mut next);
        if delta < POWER_TOLERANCE {
            return Some((v, it));
        }
    }
    None
}

fn dense_top_eigenvector(s: &[f64], p: usize) -> Vec<f64> {
    let m = DMatrix::from_row_slice(p, p, s);
    let eig = SymmetricEigen::new(m);
    let mut best = 0;
    for i in 1..p {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let col = eig.eigenvectors.column(best);
    let nv = col.norm();
    col.iter().map(|x| x / nv).collect()
}

/// Flips `w` so that its largest-magnitude entry (lowest index on ties) is
/// positive.
pub fn canonicalize_sign(w: &mut [f64]) {
    let mut idx = 0;
    for (j, v) in w.iter().enumerate() {
        if v.abs() > w[idx].abs() {
            idx = j;
        }
    }
    if w[idx] < 0.0 {
        w.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Fits the first principal component of a column-centered `n x p`
/// row-major matrix.
pub fn fit_first_component(x: &[f64], n: usize, p: usize) -> Result<PcaModel> {
    if n < 3 {
        return Err(Error::DatasetTooSmall(n));
    }
    if p == 0 || x.len() != n * p {
        return Err(Error::Malformed(format!(
            "matrix has {} entries, expected {n} x {p}",
            x.len()
        )));
    }
    for j in 0..p {
        let mean = (0..n).map(|i| x[i * p + j]).sum::<f64>() / n as f64;
        if mean.abs() > CENTERING_TOLERANCE {
            return Err(Error::invalid(
                "x",
                format!("column {j} is not centered (mean {mean:e})"),
            ));
        }
    }
    let s = covariance(x, n, p);
    let total_variance: f64 = (0..p).map(|a| s[a * p + a]).sum();
    if total_variance <= 0.0 {
        return Err(Error::DegenerateData("all-zero feature matrix".into()));
    }

    let (mut w, method) = match power_iteration(&s, p) {
        Some((w, iterations)) => (w, EigenMethod::PowerIteration { iterations }),
        None => (dense_top_eigenvector(&s, p), EigenMethod::DenseFallback),
    };
    canonicalize_sign(&mut w);

    let mut sw = vec![0.0; p];
    mat_vec(&s, &w, &mut sw);
    let eigenvalue: f64 = w.iter().zip(&sw).map(|(a, b)| a * b).sum();
    if eigenvalue <= 0.0 {
        return Err(Error::DegenerateData("top eigenvalue is zero".into()));
    }

    let mut scores = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for row in x.chunks_exact(p) {
        let t: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
        let r2: f64 = row
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - t * b).powi(2))
            .sum();
        scores.push(t);
        residuals.push(r2.sqrt());
    }
    let sigma_r2 = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;
    Ok(PcaModel {
        w,
        scores,
        residuals,
        sigma_r2,
        eigenvalue,
        total_variance,
        method,
    })
}

pub fn fit_dataset(ds: &PreparedDataset) -> Result<PcaModel> {
    fit_first_component(ds.x(), ds.n(), ds.p())
}

impl PcaModel {
    /// Plain-text diagnostic: the `top` heaviest loadings, `sigma_r2` and the
    /// planned number of pre-training pairs.
    pub fn report(&self, feature_names: &[String], top: usize, plan: Option<&WarmupPlan>) -> String {
        let mut order: Vec<usize> = (0..self.w.len()).collect();
        order.sort_by(|&a, &b| self.w[b].abs().total_cmp(&self.w[a].abs()).then(a.cmp(&b)));
        let mut out = String::new();
        let _ = writeln!(out, "first component (eigenvalue {:.6}):", self.eigenvalue);
        for &j in order.iter().take(top) {
            let name = feature_names.get(j).map(String::as_str).unwrap_or("?");
            let _ = writeln!(out, "  {name}: {:+.6}", self.w[j]);
        }
        let _ = writeln!(out, "sigma_r2: {:.6}", self.sigma_r2);
        if let Some(plan) = plan {
            let _ = writeln!(out, "n_pre: {}", plan.n_pre);
        }
        out
    }
}

/// Unclamped pre-training size `floor(n k / (1 + alpha sigma_r2))`.
pub fn pretraining_size(n: usize, k: f64, alpha: f64, sigma_r2: f64) -> u64 {
    (n as f64 * k / (1.0 + alpha * sigma_r2)).floor() as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarmupPlan {
    pub k: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub n_pre: u64,
    pub selection_probs: Vec<f64>,
}

pub fn plan_warmup(model: &PcaModel, n: usize, k: f64, alpha: f64, epsilon: f64) -> Result<WarmupPlan> {
    if !(K_RANGE.0..=K_RANGE.1).contains(&k) {
        return Err(Error::invalid("k", format!("must lie in [1, 100], got {k}")));
    }
    if !(ALPHA_RANGE.0..=ALPHA_RANGE.1).contains(&alpha) {
        return Err(Error::invalid(
            "alpha",
            format!("must lie in [1e-7, 1e-4], got {alpha}"),
        ));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", format!("must be positive, got {epsilon}")));
    }
    if model.residuals.len() != n {
        return Err(Error::Malformed(format!(
            "model has {} residuals, expected {n}",
            model.residuals.len()
        )));
    }
    let ordered_pairs = n as u64 * (n as u64).saturating_sub(1);
    let n_pre = pretraining_size(n, k, alpha, model.sigma_r2).min(ordered_pairs);
    let inv: Vec<f64> = model.residuals.iter().map(|r| 1.0 / (r + epsilon)).collect();
    let total: f64 = inv.iter().sum();
    let selection_probs = inv.into_iter().map(|v| v / total).collect();
    Ok(WarmupPlan {
        k,
        alpha,
        epsilon,
        n_pre,
        selection_probs,
    })
}

/// Draws rows according to the residual-based selection probabilities.
#[derive(Debug, Clone)]
pub struct ResidualSampler {
    dist: WeightedIndex<f64>,
}

impl ResidualSampler {
    pub fn new(plan: &WarmupPlan) -> Result<Self> {
        let dist = WeightedIndex::new(&plan.selection_probs)
            .map_err(|e| Error::invalid("selection_probs", e.to_string()))?;
        Ok(Self { dist })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }

    /// Draws `u`, then `v` from the same weights conditioned on `v != u`.
    pub fn draw_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let u = self.draw(rng);
        loop {
            let v = self.draw(rng);
            if v != u {
                return (u, v);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PseudoLabeledPair {
    pub u: usize,
    pub v: usize,
    pub label: u8,
}

/// Label 1 iff `t_u > t_v`; ties go to 0.
pub fn pca_label(t_u: f64, t_v: f64) -> u8 {
    u8::from(t_u > t_v)
}

pub fn sample_pseudo_pairs(plan: &WarmupPlan, model: &PcaModel, rng_seed: u64) -> Result<Vec<PseudoLabeledPair>> {
    if plan.n_pre == 0 {
        return Ok(Vec::new());
    }
    if model.scores.len() < 2 {
        return Err(Error::DatasetTooSmall(model.scores.len()));
    }
    let sampler = ResidualSampler::new(plan)?;
    let mut rng = seeding::seeded(rng_seed);
    Ok((0..plan.n_pre)
        .map(|_| {
            let (u, v) = sampler.draw_pair(&mut rng);
            PseudoLabeledPair {
                u,
                v,
                label: pca_label(model.scores[u], model.scores[v]),
            }
        })
        .collect())
}
