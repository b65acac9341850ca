//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random `n x p` matrix with centered columns and uneven column scales.
pub fn centered_matrix<R: Rng>(rng: &mut R, n: usize, p: usize) -> Vec<f64> {
    let scales: Vec<f64> = (0..p).map(|_| rng.random_range(0.2..3.0)).collect();
    let mut x: Vec<f64> = (0..n * p)
        .map(|i| scales[i % p] * (rng.random::<f64>() * 2.0 - 1.0))
        .collect();
    // A shared direction so the top eigenvalue is separated.
    let dir: Vec<f64> = (0..p).map(|_| rng.random::<f64>() - 0.5).collect();
    for row in x.chunks_exact_mut(p) {
        let f: f64 = rng.random::<f64>() * 4.0 - 2.0;
        for (v, d) in row.iter_mut().zip(&dir) {
            *v += f * d;
        }
    }
    for j in 0..p {
        let mean = (0..n).map(|i| x[i * p + j]).sum::<f64>() / n as f64;
        for i in 0..n {
            x[i * p + j] -= mean;
        }
    }
    x
}

/// `X^T X / n`, accumulated in the textbook order.
pub fn covariance(x: &[f64], n: usize, p: usize) -> Vec<f64> {
    let mut s = vec![0.0; p * p];
    for a in 0..p {
        for b in 0..p {
            let mut acc = 0.0;
            for i in 0..n {
                acc += x[i * p + a] * x[i * p + b];
            }
            s[a * p + b] = acc / n as f64;
        }
    }
    s
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues and eigenvectors (as columns, row-major `p x p`).
pub fn jacobi_eigen(s: &[f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = s.to_vec();
    let mut v = vec![0.0; p * p];
    for i in 0..p {
        v[i * p + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * p + j] * a[i * p + j])
            .sum();
        let norm: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * norm.max(1e-300) {
            break;
        }
        for k in 0..p {
            for l in k + 1..p {
                let akl = a[k * p + l];
                if akl.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[l * p + l] - a[k * p + k]) / (2.0 * akl);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for r in 0..p {
                    let ark = a[r * p + k];
                    let arl = a[r * p + l];
                    a[r * p + k] = c * ark - sn * arl;
                    a[r * p + l] = sn * ark + c * arl;
                }
                for r in 0..p {
                    let akr = a[k * p + r];
                    let alr = a[l * p + r];
                    a[k * p + r] = c * akr - sn * alr;
                    a[l * p + r] = sn * akr + c * alr;
                }
                for r in 0..p {
                    let vrk = v[r * p + k];
                    let vrl = v[r * p + l];
                    v[r * p + k] = c * vrk - sn * vrl;
                    v[r * p + l] = sn * vrk + c * vrl;
                }
            }
        }
    }
    ((0..p).map(|i| a[i * p + i]).collect(), v)
}

/// Leading eigenpair by Jacobi.
pub fn top_eigenpair(s: &[f64], p: usize) -> (f64, Vec<f64>) {
    let (vals, vecs) = jacobi_eigen(s, p);
    let k = (0..p)
        .max_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .expect("p > 0");
    (vals[k], (0..p).map(|r| vecs[r * p + k]).collect())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Binary F1 computed from a confusion table built with explicit loops.
pub fn brute_f1(pred: &[u8], truth: &[u8]) -> f64 {
    let mut table = [[0usize; 2]; 2];
    for i in 0..pred.len() {
        table[pred[i] as usize][truth[i] as usize] += 1;
    }
    let tp = table[1][1] as f64;
    let fp = table[1][0] as f64;
    let fn_ = table[0][1] as f64;
    if 2.0 * tp + fp + fn_ == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}
