//! Physical configuration, array manifold, targets and user channels.

use nalgebra::DVector;
use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cis, CMat, CVec, Real};

/// Scalar parameters of the ISAC link. Powers are linear, noise-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig<T: Real> {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_users: usize,
    pub n_targets: usize,
    pub power: T,
    pub noise_comm: T,
    pub noise_radar: T,
    pub block_len: usize,
    /// bits/s/Hz
    pub rate_threshold: T,
}

impl<T: Real> SystemConfig<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_tx: usize,
        n_rx: usize,
        n_users: usize,
        n_targets: usize,
        power: T,
        noise_comm: T,
        noise_radar: T,
        block_len: usize,
        rate_threshold: T,
    ) -> Result<Self> {
        let cfg = Self {
            n_tx,
            n_rx,
            n_users,
            n_targets,
            power,
            noise_comm,
            noise_radar,
            block_len,
            rate_threshold,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 || self.n_targets == 0 || self.block_len == 0 {
            return Err(Error::Config(
                "antenna counts, target count and block length must be positive".into(),
            ));
        }
        let zero = T::zero();
        if !(self.power > zero && self.noise_comm > zero && self.noise_radar > zero) {
            return Err(Error::Config("power and noise levels must be positive".into()));
        }
        if !(self.rate_threshold >= zero) {
            return Err(Error::Config("rate threshold must be nonnegative".into()));
        }
        Ok(())
    }

    /// SNR-domain threshold `σ² (2^R̄ − 1)`.
    pub fn gamma(&self) -> T {
        self.noise_comm * (T::lit(2.0).powf(self.rate_threshold) - T::one())
    }

    pub fn with_rate(&self, rate_threshold: T) -> Self {
        Self {
            rate_threshold,
            ..self.clone()
        }
    }

    pub fn with_power(&self, power: T) -> Self {
        Self {
            power,
            ..self.clone()
        }
    }

    pub fn with_block_len(&self, block_len: usize) -> Self {
        Self {
            block_len,
            ..self.clone()
        }
    }

    pub fn tx(&self) -> ArrayManifold {
        ArrayManifold::new(self.n_tx)
    }

    pub fn rx(&self) -> ArrayManifold {
        ArrayManifold::new(self.n_rx)
    }
}

/// Half-wavelength uniform linear array with phase reference at element 0:
/// `a(θ)[n] = exp(iπ n sin θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayManifold {
    pub n_elements: usize,
}

impl ArrayManifold {
    pub fn new(n_elements: usize) -> Self {
        Self { n_elements }
    }

    fn check<T: Real>(theta: T) -> Result<()> {
        if !(theta.abs() < T::frac_pi_2()) {
            return Err(Error::AngleDomain(theta.as_f64()));
        }
        Ok(())
    }

    pub fn steering<T: Real>(&self, theta: T) -> Result<CVec<T>> {
        Self::check(theta)?;
        Ok(self.steering_unchecked(theta))
    }

    /// Steering vector without the domain check; used on grids that include ±π/2.
    pub fn steering_unchecked<T: Real>(&self, theta: T) -> CVec<T> {
        let s = theta.sin();
        CVec::from_iterator(
            self.n_elements,
            (0..self.n_elements).map(|n| cis(T::pi() * T::from_usize_lossy(n) * s)),
        )
    }

    /// `∂a/∂θ`, entry `n` is `iπ n cos θ · exp(iπ n sin θ)`.
    pub fn steering_derivative<T: Real>(&self, theta: T) -> Result<CVec<T>> {
        Self::check(theta)?;
        let (s, c) = (theta.sin(), theta.cos());
        Ok(CVec::from_iterator(
            self.n_elements,
            (0..self.n_elements).map(|n| {
                let k = T::pi() * T::from_usize_lossy(n);
                cis(k * s) * Complex::new(T::zero(), k * c)
            }),
        ))
    }

    /// Columns `a(θ_m)`.
    pub fn steering_matrix<T: Real>(&self, angles: &[T]) -> Result<CMat<T>> {
        let mut m = CMat::<T>::zeros(self.n_elements, angles.len());
        for (j, &th) in angles.iter().enumerate() {
            m.set_column(j, &self.steering(th)?);
        }
        Ok(m)
    }

    pub fn derivative_matrix<T: Real>(&self, angles: &[T]) -> Result<CMat<T>> {
        let mut m = CMat::<T>::zeros(self.n_elements, angles.len());
        for (j, &th) in angles.iter().enumerate() {
            m.set_column(j, &self.steering_derivative(th)?);
        }
        Ok(m)
    }
}

/// Target angles (radians) and complex reflection coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet<T: Real> {
    pub angles: Vec<T>,
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> TargetSet<T> {
    pub fn new(angles: Vec<T>, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if angles.is_empty() || angles.len() != coeffs.len() {
            return Err(Error::Config(format!(
                "need matching, non-empty angle and coefficient lists (got {} and {})",
                angles.len(),
                coeffs.len()
            )));
        }
        for &a in &angles {
            ArrayManifold::check(a)?;
        }
        Ok(Self { angles, coeffs })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn beta_re(&self) -> Vec<T> {
        self.coeffs.iter().map(|b| b.re).collect()
    }

    pub fn beta_im(&self) -> Vec<T> {
        self.coeffs.iter().map(|b| b.im).collect()
    }

    /// `ξ = [θ; β_R; β_I]`.
    pub fn params(&self) -> DVector<T> {
        let m = self.len();
        let mut xi = DVector::<T>::zeros(3 * m);
        for i in 0..m {
            xi[i] = self.angles[i];
            xi[m + i] = self.coeffs[i].re;
            xi[2 * m + i] = self.coeffs[i].im;
        }
        xi
    }

    pub fn from_params(xi: &DVector<T>) -> Result<Self> {
        if xi.len() % 3 != 0 || xi.is_empty() {
            return Err(Error::Shape(format!("parameter vector length {}", xi.len())));
        }
        let m = xi.len() / 3;
        Self::new(
            (0..m).map(|i| xi[i]).collect(),
            (0..m).map(|i| Complex::new(xi[m + i], xi[2 * m + i])).collect(),
        )
    }

    /// `G = A_r^c diag(β) A_t^H`, shape `n_rx × n_tx`.
    pub fn response_matrix(&self, tx: &ArrayManifold, rx: &ArrayManifold) -> Result<CMat<T>> {
        let at = tx.steering_matrix(&self.angles)?;
        let ar = rx.steering_matrix(&self.angles)?;
        let mut arc_b = ar.map(|z| z.conj());
        for (j, b) in self.coeffs.iter().enumerate() {
            let mut col = arc_b.column_mut(j);
            col *= *b;
        }
        Ok(arc_b * at.adjoint())
    }
}

/// How user angles of departure are drawn for the line-of-sight component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AodSpec {
    /// One angle per user, degrees.
    Explicit(Vec<f64>),
    /// User `k` sits at `centers[k % len] ± U(jitter)`, degrees.
    Clustered { centers: Vec<f64>, jitter: f64 },
    /// Uniform over `[lo, hi]` degrees.
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel<T: Real> {
    Rayleigh,
    /// `aod` in radians, one per user.
    Rician { k_factor_db: T, aod: Vec<T> },
}

impl<T: Real> ChannelModel<T> {
    /// LoS / NLoS amplitude weights `(√(K/(K+1)), √(1/(K+1)))`.
    pub fn rician_weights(k_factor_db: T) -> (T, T) {
        let k = T::lit(10.0).powf(k_factor_db / T::lit(10.0));
        ((k / (k + T::one())).sqrt(), (T::one() / (k + T::one())).sqrt())
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ChannelModel::Rayleigh => "rayleigh",
            ChannelModel::Rician { .. } => "rician",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet<T: Real> {
    pub vectors: Vec<CVec<T>>,
    pub model: ChannelModel<T>,
}

impl<T: Real> ChannelSet<T> {
    pub fn from_vectors(vectors: Vec<CVec<T>>) -> Self {
        Self {
            vectors,
            model: ChannelModel::Rayleigh,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `[h_1, …, h_K]` as columns.
    pub fn matrix(&self, n_tx: usize) -> CMat<T> {
        let mut m = CMat::<T>::zeros(n_tx, self.vectors.len());
        for (j, h) in self.vectors.iter().enumerate() {
            m.set_column(j, h);
        }
        m
    }
}

/// Seed plus stream id; equal pairs reproduce identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    /// Derived source for worker or trial `id`.
    pub fn split(&self, id: u64) -> Self {
        Self {
            seed: self.seed,
            stream: self
                .stream
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(id)
                .wrapping_add(1),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// One `CN(0, 1)` draw.
pub fn circular_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex::new(T::lit(a * s), T::lit(b * s))
}

pub fn circular_normal_vec<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec<T> {
    CVec::from_iterator(n, (0..n).map(|_| circular_normal(rng)))
}

pub fn circular_normal_mat<T: Real, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> CMat<T> {
    // column-major fill keeps the draw order independent of the matrix type
    CMat::from_iterator(rows, cols, (0..rows * cols).map(|_| circular_normal(rng)))
}

/// Draws AoDs (radians) for `n_users` according to `spec`.
pub fn sample_aods<T: Real>(spec: &AodSpec, n_users: usize, rng: &mut ChaCha8Rng) -> Result<Vec<T>> {
    let deg = |d: f64| T::lit(d.to_radians());
    let out: Vec<T> = match spec {
        AodSpec::Explicit(v) => {
            if v.len() != n_users {
                return Err(Error::Config(format!(
                    "{} explicit AoDs for {} users",
                    v.len(),
                    n_users
                )));
            }
            v.iter().map(|&d| deg(d)).collect()
        }
        AodSpec::Clustered { centers, jitter } => {
            if centers.is_empty() {
                return Err(Error::Config("clustered AoD spec without centers".into()));
            }
            (0..n_users)
                .map(|k| {
                    let j = if *jitter > 0.0 {
                        rng.random_range(-*jitter..=*jitter)
                    } else {
                        0.0
                    };
                    deg(centers[k % centers.len()] + j)
                })
                .collect()
        }
        AodSpec::Uniform { lo, hi } => {
            if !(lo < hi) {
                return Err(Error::Config("uniform AoD range must satisfy lo < hi".into()));
            }
            (0..n_users).map(|_| deg(rng.random_range(*lo..*hi))).collect()
        }
    };
    for &a in &out {
        ArrayManifold::check(a)?;
    }
    Ok(out)
}

/// Draws `K` user channels. Rayleigh entries are i.i.d. `CN(0, 1)`; Rician
/// channels mix `a_t(θ_K[k])` with a Rayleigh component.
pub fn generate_channels<T: Real>(
    cfg: &SystemConfig<T>,
    model: &ChannelModel<T>,
    source: &RandomSource,
) -> Result<ChannelSet<T>> {
    let mut rng = source.rng();
    let tx = cfg.tx();
    let vectors = match model {
        ChannelModel::Rayleigh => (0..cfg.n_users)
            .map(|_| circular_normal_vec(cfg.n_tx, &mut rng))
            .collect(),
        ChannelModel::Rician { k_factor_db, aod } => {
            if aod.len() != cfg.n_users {
                return Err(Error::Config(format!(
                    "{} AoDs supplied for {} users",
                    aod.len(),
                    cfg.n_users
                )));
            }
            let (w_los, w_nlos) = ChannelModel::<T>::rician_weights(*k_factor_db);
            let mut out = Vec::with_capacity(cfg.n_users);
            for &theta in aod {
                let los = tx.steering(theta)?;
                let nlos: CVec<T> = circular_normal_vec(cfg.n_tx, &mut rng);
                out.push(los * Complex::from(w_los) + nlos * Complex::from(w_nlos));
            }
            out
        }
    };
    Ok(ChannelSet {
        vectors,
        model: model.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

    #[test]
    fn broadside_steering_is_all_ones() {
        let a = ArrayManifold::new(4).steering(0.0f64).unwrap();
        for z in a.iter() {
            assert_relative_eq!(z.re, 1.0);
            assert_relative_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn near_endfire_second_entry_tends_to_minus_one() {
        let a = ArrayManifold::new(2).steering(FRAC_PI_2 - 1e-6).unwrap();
        assert_relative_eq!(a[1].re, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn thirty_degrees_gives_quarter_turn() {
        let a = ArrayManifold::new(2).steering(FRAC_PI_6).unwrap();
        assert_relative_eq!(a[1].re, 0.0, epsilon = 1e-12);
        assert_relative_eq!(a[1].im, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn steering_rejects_out_of_domain_angles() {
        let m = ArrayManifold::new(3);
        assert!(matches!(m.steering(FRAC_PI_2), Err(Error::AngleDomain(_))));
        assert!(m.steering_derivative(-2.0f64).is_err());
    }

    #[test]
    fn derivative_at_broadside() {
        let d = ArrayManifold::new(2).steering_derivative(0.0f64).unwrap();
        assert_relative_eq!(d[0].norm(), 0.0);
        assert_relative_eq!(d[1].re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(d[1].im, PI, epsilon = 1e-12);
    }

    #[test]
    fn steering_works_in_f32() {
        let a = ArrayManifold::new(5).steering(0.3f32).unwrap();
        assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-6));
    }

    #[test]
    fn rician_weights_at_four_db() {
        let (los, nlos) = ChannelModel::<f64>::rician_weights(4.0);
        let k = 10f64.powf(0.4);
        assert_relative_eq!(k, 2.511_886, epsilon = 1e-6);
        assert_relative_eq!(los, (k / (k + 1.0)).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(nlos, (1.0 / (k + 1.0)).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(los, (2.5119f64 / 3.5119).sqrt(), epsilon = 1e-4);
    }

    #[test]
    fn huge_rician_factor_gives_pure_los() {
        let cfg = SystemConfig::new(6, 6, 2, 1, 1.0, 1.0, 1.0, 8, 0.0).unwrap();
        let aod = vec![0.2, -0.4];
        let ch = generate_channels(
            &cfg,
            &ChannelModel::Rician {
                k_factor_db: 200.0,
                aod: aod.clone(),
            },
            &RandomSource::new(3),
        )
        .unwrap();
        for (h, th) in ch.vectors.iter().zip(aod) {
            let a = cfg.tx().steering(th).unwrap();
            assert!((h - a).norm() < 1e-8);
        }
    }

    #[test]
    fn rician_requires_one_aod_per_user() {
        let cfg = SystemConfig::new(4, 4, 3, 1, 1.0, 1.0, 1.0, 8, 0.0).unwrap();
        let model = ChannelModel::Rician {
            k_factor_db: 4.0,
            aod: vec![0.1],
        };
        assert!(matches!(
            generate_channels(&cfg, &model, &RandomSource::new(1)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rayleigh_sample_covariance_is_identity() {
        let n = 4;
        let draws = 10_000;
        let cfg = SystemConfig::new(n, n, draws, 1, 1.0, 1.0, 1.0, 8, 0.0).unwrap();
        let ch = generate_channels(&cfg, &ChannelModel::Rayleigh, &RandomSource::new(11)).unwrap();
        let mut cov = CMat::<f64>::zeros(n, n);
        for h in &ch.vectors {
            cov += h * h.adjoint();
        }
        cov /= Complex::from(draws as f64);
        let err = crate::linalg::fro(&(cov - CMat::<f64>::identity(n, n)));
        assert!(err / (n as f64).sqrt() < 0.05, "relative error {err}");
    }

    #[test]
    fn equal_seeds_reproduce_channels() {
        let cfg = SystemConfig::new(5, 5, 3, 1, 1.0, 1.0, 1.0, 8, 0.0).unwrap();
        let a = generate_channels(&cfg, &ChannelModel::Rayleigh, &RandomSource::new(9)).unwrap();
        let b = generate_channels(&cfg, &ChannelModel::Rayleigh, &RandomSource::new(9)).unwrap();
        let c = generate_channels(&cfg, &ChannelModel::Rayleigh, &RandomSource::new(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn response_matrix_shape_and_params() {
        let t = TargetSet::new(vec![0.1, -0.5], vec![Complex::new(1.0, 0.5), Complex::new(-0.3, 0.2)])
            .unwrap();
        let g = t.response_matrix(&ArrayManifold::new(4), &ArrayManifold::new(3)).unwrap();
        assert_eq!(g.shape(), (3, 4));
        let xi = t.params();
        assert_eq!(xi.len(), 6);
        assert_eq!(TargetSet::from_params(&xi).unwrap(), t);
    }

    #[test]
    fn gamma_substitution() {
        let cfg = SystemConfig::new(2, 2, 1, 1, 1.0, 2.0, 1.0, 1, 1.0).unwrap();
        assert_relative_eq!(cfg.gamma(), 2.0);
        assert!(SystemConfig::new(0, 2, 1, 1, 1.0, 1.0, 1.0, 1, 0.0).is_err());
        assert!(SystemConfig::new(2, 2, 0, 1, 1.0, 1.0, 1.0, 1, -1.0).is_err());
    }

    #[test]
    fn clustered_aods_stay_in_band() {
        let mut rng = RandomSource::new(5).rng();
        let spec = AodSpec::Clustered {
            centers: vec![-30.0, 30.0],
            jitter: 2.0,
        };
        let aods: Vec<f64> = sample_aods(&spec, 10, &mut rng).unwrap();
        for (k, a) in aods.iter().enumerate() {
            let c = if k % 2 == 0 { -30.0 } else { 30.0 };
            assert!((a.to_degrees() - c).abs() <= 2.0 + 1e-12);
        }
    }
}
