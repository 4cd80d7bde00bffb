use isac_core::metrics::{fisher_information, TransmitCovariance};
use isac_core::model::{circular_normal_mat, RandomSource, SystemConfig, TargetSet};
use isac_core::CMat;
use num_complex::Complex64;
use rand::Rng;

mod common;

#[test]
fn closed_form_fim_matches_finite_differences() {
    for trial in 0..10u64 {
        let mut rng = RandomSource::new(100 + trial).rng();
        let m = 1 + (trial as usize % 2);
        let l = 16;
        let cfg = SystemConfig::new(5, 4, 0, m, 10.0, 1.0, 0.7, l, 0.0).unwrap();
        let angles: Vec<f64> = (0..m).map(|_| rng.random_range(-1.2..1.2)).collect();
        let coeffs: Vec<Complex64> = (0..m)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let targets = TargetSet::new(angles, coeffs).unwrap();
        let x: CMat<f64> = circular_normal_mat(5, l, &mut rng);
        let s = &x * x.adjoint() / Complex64::new(l as f64, 0.0);
        let cov = TransmitCovariance::new(s).unwrap();
        let fim = fisher_information(&cov, &targets, &cfg.tx(), &cfg.rx(), &cfg).unwrap();
        let fd = common::fd_fim(&targets.params(), &x, &cfg, 1e-5);
        let err = (&fim.matrix - &fd).norm() / fd.norm();
        assert!(err <= 1e-4, "trial {trial}: relative error {err:e}");
    }
}
