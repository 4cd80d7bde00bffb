//! Rate and Cramér-Rao bound evaluation for a given transmit covariance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_inverse, hermitian_part, quad_form, singularity_floor, symmetric_inverse,
    trace_re, HermitianEig, SymmetricEig,
};
use crate::model::{ArrayManifold, ChannelSet, SystemConfig, TargetSet};
use crate::scalar::{CMat, Real};

/// Hermitian PSD transmit covariance `S_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitCovariance<T: Real> {
    matrix: CMat<T>,
}

impl<T: Real> TransmitCovariance<T> {
    /// Symmetrizes `m` and rejects it when the smallest eigenvalue falls below
    /// the PSD tolerance.
    pub fn new(m: CMat<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!("covariance is {}x{}", m.nrows(), m.ncols())));
        }
        let matrix = hermitian_part(&m);
        if matrix.nrows() > 0 {
            let min = HermitianEig::new(&matrix).min();
            let scale = T::one().max(trace_re(&matrix).abs());
            let tol = T::lit(1e-9).max(T::eps() * T::lit(100.0)) * scale;
            if min < -tol {
                return Err(Error::NotPsd(min.as_f64()));
            }
        }
        Ok(Self { matrix })
    }

    /// Projects onto the PSD cone instead of rejecting.
    pub fn projected(m: &CMat<T>) -> Self {
        Self {
            matrix: crate::linalg::psd_project(m),
        }
    }

    /// `(P / N) I`.
    pub fn isotropic(n: usize, power: T) -> Self {
        let s = power / T::from_usize_lossy(n);
        Self {
            matrix: CMat::<T>::identity(n, n) * Complex::from(s),
        }
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat<T> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> T {
        trace_re(&self.matrix)
    }

    pub fn is_power_feasible(&self, power: T) -> bool {
        self.trace() <= power + T::lit(1e-6)
    }

    pub fn eig(&self) -> HermitianEig<T> {
        HermitianEig::new(&self.matrix)
    }

    /// Number of eigenvalues above `rel` times the largest.
    pub fn rank(&self, rel: T) -> usize {
        self.eig().rank(rel)
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            matrix: &self.matrix * Complex::from(c),
        }
    }
}

/// Per-user SNRs and the worst-user rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport<T: Real> {
    pub rate: T,
    pub snr: Vec<T>,
    /// Lowest index among users attaining the minimum SNR.
    pub worst_user: usize,
}

/// `h_k^H S h_k / σ²`.
pub fn user_snr<T: Real>(cov: &TransmitCovariance<T>, channels: &ChannelSet<T>, noise: T) -> Vec<T> {
    channels
        .vectors
        .iter()
        .map(|h| quad_form(cov.matrix(), h) / noise)
        .collect()
}

pub fn multicast_rate<T: Real>(
    cov: &TransmitCovariance<T>,
    channels: &ChannelSet<T>,
    cfg: &SystemConfig<T>,
) -> Result<RateReport<T>> {
    if channels.is_empty() {
        return Err(Error::UndefinedRate);
    }
    for h in &channels.vectors {
        if h.len() != cov.dim() {
            return Err(Error::Shape(format!(
                "channel length {} vs covariance dimension {}",
                h.len(),
                cov.dim()
            )));
        }
    }
    let snr = user_snr(cov, channels, cfg.noise_comm);
    let mut worst = 0;
    for (k, &s) in snr.iter().enumerate() {
        if s < snr[worst] {
            worst = k;
        }
    }
    let rate = (T::one() + snr[worst]).log2();
    Ok(RateReport {
        rate,
        snr,
        worst_user: worst,
    })
}

/// `(N_r σ_r² / L) tr(S_x⁻¹)`, infinite when `S_x` is singular.
pub fn crb_scenario1<T: Real>(cov: &TransmitCovariance<T>, cfg: &SystemConfig<T>) -> T {
    match hermitian_inverse(cov.matrix()) {
        Some(inv) => {
            T::from_usize_lossy(cfg.n_rx) * cfg.noise_radar / T::from_usize_lossy(cfg.block_len)
                * trace_re(&inv)
        }
        None => infinity(),
    }
}

pub(crate) fn infinity<T: Real>() -> T {
    T::lit(f64::INFINITY)
}

/// Real `3M × 3M` Fisher information for `ξ = [θ; β_R; β_I]` together with the
/// complex blocks it is assembled from.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherInformation<T: Real> {
    pub matrix: DMatrix<T>,
    pub f11: CMat<T>,
    pub f12: CMat<T>,
    pub f22: CMat<T>,
}

impl<T: Real> FisherInformation<T> {
    pub fn n_targets(&self) -> usize {
        self.f11.nrows()
    }

    /// Assembles the real block layout from the complex blocks, scaled by
    /// `2 / σ_r²`, and symmetrizes.
    pub fn assemble(f11: CMat<T>, f12: CMat<T>, f22: CMat<T>, noise_radar: T) -> Self {
        let m = f11.nrows();
        let mut f = DMatrix::<T>::zeros(3 * m, 3 * m);
        let c = T::lit(2.0) / noise_radar;
        for i in 0..m {
            for j in 0..m {
                f[(i, j)] = f11[(i, j)].re;
                f[(i, m + j)] = f12[(i, j)].re;
                f[(i, 2 * m + j)] = -f12[(i, j)].im;
                f[(m + i, j)] = f12[(j, i)].re;
                f[(m + i, m + j)] = f22[(i, j)].re;
                f[(m + i, 2 * m + j)] = -f22[(i, j)].im;
                f[(2 * m + i, j)] = -f12[(j, i)].im;
                f[(2 * m + i, m + j)] = -f22[(j, i)].im;
                f[(2 * m + i, 2 * m + j)] = f22[(i, j)].re;
            }
        }
        f *= c;
        let matrix = (&f + f.transpose()) * T::lit(0.5);
        Self { matrix, f11, f12, f22 }
    }

    /// Diagonal of `F⁻¹`, `None` when singular.
    pub fn per_parameter_crb(&self) -> Option<DVector<T>> {
        symmetric_inverse(&self.matrix).map(|inv| inv.diagonal())
    }

    pub fn min_eigenvalue(&self) -> T {
        SymmetricEig::new(&self.matrix).min()
    }
}

/// Precomputed steering data so the FIM can be evaluated for many covariances
/// (it is linear in `S_x`).
#[derive(Debug, Clone)]
pub struct FimOperator<T: Real> {
    at: CMat<T>,
    dat: CMat<T>,
    /// `(Ȧ_r^H Ȧ_r)^T`, `(A_r^H Ȧ_r)^T`, `(Ȧ_r^H A_r)^T`, `(A_r^H A_r)^T`
    r_dd: CMat<T>,
    r_da: CMat<T>,
    r_ad: CMat<T>,
    r_aa: CMat<T>,
    beta: Vec<Complex<T>>,
    block_len: T,
    noise_radar: T,
}

impl<T: Real> FimOperator<T> {
    pub fn new(
        targets: &TargetSet<T>,
        tx: &ArrayManifold,
        rx: &ArrayManifold,
        cfg: &SystemConfig<T>,
    ) -> Result<Self> {
        let at = tx.steering_matrix(&targets.angles)?;
        let dat = tx.derivative_matrix(&targets.angles)?;
        let ar = rx.steering_matrix(&targets.angles)?;
        let dar = rx.derivative_matrix(&targets.angles)?;
        Ok(Self {
            r_dd: (dar.adjoint() * &dar).transpose(),
            r_da: (ar.adjoint() * &dar).transpose(),
            r_ad: (dar.adjoint() * &ar).transpose(),
            r_aa: (ar.adjoint() * &ar).transpose(),
            at,
            dat,
            beta: targets.coeffs.clone(),
            block_len: T::from_usize_lossy(cfg.block_len),
            noise_radar: cfg.noise_radar,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.at.nrows()
    }

    pub fn n_targets(&self) -> usize {
        self.at.ncols()
    }

    /// Evaluates the FIM for any Hermitian `s` (no PSD requirement).
    pub fn apply(&self, s: &CMat<T>) -> Result<FisherInformation<T>> {
        if s.nrows() != self.n_tx() || s.ncols() != self.n_tx() {
            return Err(Error::Shape(format!(
                "covariance {}x{} vs {} transmit antennas",
                s.nrows(),
                s.ncols(),
                self.n_tx()
            )));
        }
        let m = self.n_targets();
        let l = Complex::from(self.block_len);
        // A^T S^T B^c = (B^H S A)^T
        let t_aa = (self.at.adjoint() * s * &self.at).transpose();
        let t_ad = (self.dat.adjoint() * s * &self.at).transpose();
        let t_da = (self.at.adjoint() * s * &self.dat).transpose();
        let t_dd = (self.dat.adjoint() * s * &self.dat).transpose();
        let bc = |x: &CMat<T>, right: bool| -> CMat<T> {
            CMat::from_fn(m, m, |i, j| {
                let v = self.beta[i].conj() * x[(i, j)];
                if right {
                    v * self.beta[j]
                } else {
                    v
                }
            })
        };
        let had = |a: &CMat<T>, b: &CMat<T>| a.component_mul(b);
        let f11 = (had(&self.r_dd, &bc(&t_aa, true))
            + had(&self.r_da, &bc(&t_ad, true))
            + had(&self.r_ad, &bc(&t_da, true))
            + had(&self.r_aa, &bc(&t_dd, true)))
            * l;
        let f12 = (had(&self.r_da, &bc(&t_aa, false)) + had(&self.r_aa, &bc(&t_da, false))) * l;
        let f22 = had(&self.r_aa, &t_aa) * l;
        Ok(FisherInformation::assemble(f11, f12, f22, self.noise_radar))
    }
}

pub fn fisher_information<T: Real>(
    cov: &TransmitCovariance<T>,
    targets: &TargetSet<T>,
    tx: &ArrayManifold,
    rx: &ArrayManifold,
    cfg: &SystemConfig<T>,
) -> Result<FisherInformation<T>> {
    FimOperator::new(targets, tx, rx, cfg)?.apply(cov.matrix())
}

/// `tr(F_ξ⁻¹)`, infinite when `F_ξ` is singular.
pub fn crb_scenario2<T: Real>(fim: &FisherInformation<T>) -> T {
    crb_from_fim_matrix(&fim.matrix)
}

pub fn crb_from_fim_matrix<T: Real>(f: &DMatrix<T>) -> T {
    match symmetric_inverse(f) {
        Some(inv) => inv.trace(),
        None => infinity(),
    }
}

/// Convenience: Scenario-II CRB straight from a covariance.
pub fn crb_scenario2_of<T: Real>(
    cov: &TransmitCovariance<T>,
    targets: &TargetSet<T>,
    cfg: &SystemConfig<T>,
) -> Result<T> {
    Ok(crb_scenario2(&fisher_information(cov, targets, &cfg.tx(), &cfg.rx(), cfg)?))
}

/// Whether the smallest eigenvalue of `m` clears the floor shared with the CRB.
pub fn is_nonsingular<T: Real>(m: &CMat<T>) -> bool {
    let eig = HermitianEig::new(m);
    eig.min() > singularity_floor(trace_re(m), m.nrows()) && eig.min() > T::zero()
}

/// Which CRB a design is scored by.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario<T: Real> {
    /// Extended target: CRB of the response matrix `G`.
    One,
    /// Point targets: CRB of `ξ = [θ; β_R; β_I]`.
    Two(TargetSet<T>),
}

impl<T: Real> Scenario<T> {
    pub fn id(&self) -> u8 {
        match self {
            Scenario::One => 1,
            Scenario::Two(_) => 2,
        }
    }

    pub fn crb(&self, cov: &TransmitCovariance<T>, cfg: &SystemConfig<T>) -> Result<T> {
        match self {
            Scenario::One => Ok(crb_scenario1(cov, cfg)),
            Scenario::Two(t) => crb_scenario2_of(cov, t, cfg),
        }
    }
}
