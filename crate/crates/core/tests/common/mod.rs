//! Finite-difference oracle shared by the integration tests.

use isac_core::model::{SystemConfig, TargetSet};
use isac_core::{CMat, CVec};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

fn mu(xi: &DVector<f64>, x: &CMat<f64>, cfg: &SystemConfig<f64>) -> CVec<f64> {
    let t = TargetSet::from_params(xi).unwrap();
    let g = t.response_matrix(&cfg.tx(), &cfg.rx()).unwrap();
    let y = g * x;
    CVec::from_iterator(y.len(), y.iter().copied())
}

/// Finite-difference FIM of the noiseless echo mean for a fixed block `X`.
pub fn fd_fim(xi: &DVector<f64>, x: &CMat<f64>, cfg: &SystemConfig<f64>, h: f64) -> DMatrix<f64> {
    let n = xi.len();
    let grads: Vec<CVec<f64>> = (0..n)
        .map(|i| {
            let mut p = xi.clone();
            let mut m = xi.clone();
            p[i] += h;
            m[i] -= h;
            (mu(&p, x, cfg) - mu(&m, x, cfg)) / Complex64::new(2.0 * h, 0.0)
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| 2.0 / cfg.noise_radar * grads[i].dotc(&grads[j]).re)
}

