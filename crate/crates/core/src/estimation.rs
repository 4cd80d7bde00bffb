//! Finite-block signal synthesis, echo simulation, LS and CAML estimators and
//! the Monte Carlo driver comparing their errors with the CRB.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::beamforming::BeamformingDesign;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_inverse, hermitian_part, trace_re, HermitianEig};
use crate::metrics::{fisher_information, Scenario, TransmitCovariance};
use crate::model::{circular_normal_mat, ArrayManifold, RandomSource, SystemConfig, TargetSet};
use crate::scalar::{CMat, CVec, Real};

/// Transmit block `X` (`N_t × L`), its echo `Y` (`N_r × L`) once simulated,
/// and the sample covariance `X X^H / L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBlock<T: Real> {
    pub x: CMat<T>,
    pub y: Option<CMat<T>>,
    pub sample_cov: CMat<T>,
}

impl<T: Real> SignalBlock<T> {
    pub fn from_x(x: CMat<T>) -> Self {
        let l = T::from_usize_lossy(x.ncols().max(1));
        let sample_cov = hermitian_part(&(&x * x.adjoint())) * Complex::from(T::one() / l);
        Self { x, y: None, sample_cov }
    }

    pub fn block_len(&self) -> usize {
        self.x.ncols()
    }
}

/// Eigen square root with roundoff-level eigenvalues dropped, so a
/// rank-deficient covariance synthesizes columns inside its range.
fn range_sqrt<T: Real>(m: &CMat<T>) -> CMat<T> {
    let eig = HermitianEig::new(m);
    let n = m.nrows();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let floor = eig.max().abs() * T::eps() * T::from_usize_lossy(16 * n);
    let mut v = eig.vectors.clone();
    for j in 0..n {
        let l = eig.values[j];
        let s = if l > floor { l.sqrt() } else { T::zero() };
        v.column_mut(j).scale_mut(s);
    }
    v
}

/// Columns `x(n) = V u(n)` with `V V^H = S_x` from the eigen square root and
/// `u(n) ~ CN(0, I)`.
pub fn synthesize_block<T: Real, R: Rng + ?Sized>(
    cov: &TransmitCovariance<T>,
    block_len: usize,
    rng: &mut R,
) -> SignalBlock<T> {
    let v = range_sqrt(cov.matrix());
    let u = circular_normal_mat(v.ncols(), block_len, rng);
    SignalBlock::from_x(v * u)
}

/// Same distribution for a beamforming design: `x(n) = w s(n) + V_sen u(n)`.
pub fn synthesize_design<R: Rng + ?Sized>(
    design: &BeamformingDesign,
    block_len: usize,
    rng: &mut R,
) -> SignalBlock<f64> {
    let n = design.info_beam.len();
    let s: CMat<f64> = circular_normal_mat(1, block_len, rng);
    let v = range_sqrt(&design.sensing_cov);
    let u = circular_normal_mat(n, block_len, rng);
    SignalBlock::from_x(&design.info_beam * s + v * u)
}

/// `Y = G X + Z`, `Z` i.i.d. `CN(0, σ_r²)`.
pub fn simulate_echo<T: Real, R: Rng + ?Sized>(
    x: &CMat<T>,
    response: &CMat<T>,
    noise_radar: T,
    rng: &mut R,
) -> Result<CMat<T>> {
    if response.ncols() != x.nrows() {
        return Err(Error::Shape(format!(
            "response is {}x{}, block has {} rows",
            response.nrows(),
            response.ncols(),
            x.nrows()
        )));
    }
    let mut y = response * x;
    if noise_radar > T::zero() {
        let z: CMat<T> = circular_normal_mat(y.nrows(), y.ncols(), rng);
        y += z * Complex::from(noise_radar.sqrt());
    }
    Ok(y)
}

/// Echo from point targets on the configured arrays.
pub fn simulate_target_echo<T: Real, R: Rng + ?Sized>(
    block: &mut SignalBlock<T>,
    targets: &TargetSet<T>,
    cfg: &SystemConfig<T>,
    rng: &mut R,
) -> Result<()> {
    let g = targets.response_matrix(&cfg.tx(), &cfg.rx())?;
    block.y = Some(simulate_echo(&block.x, &g, cfg.noise_radar, rng)?);
    Ok(())
}

/// `G_est = Y X^H (X X^H)⁻¹`.
pub fn ls_estimate<T: Real>(y: &CMat<T>, x: &CMat<T>) -> Result<CMat<T>> {
    if y.ncols() != x.ncols() {
        return Err(Error::Shape(format!("Y has {} columns, X has {}", y.ncols(), x.ncols())));
    }
    let gram = x * x.adjoint();
    let inv = hermitian_inverse(&gram).ok_or_else(|| {
        Error::Rank(format!("X X^H is singular ({} antennas, L = {})", x.nrows(), x.ncols()))
    })?;
    Ok(y * x.adjoint() * inv)
}

/// Angle grid over `[-π/2, π/2]`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid<T: Real> {
    pub points: Vec<T>,
}

impl<T: Real> AngleGrid<T> {
    pub fn uniform(n: usize) -> Self {
        let n = n.max(2);
        let lo = -T::frac_pi_2();
        let step = T::pi() / T::from_usize_lossy(n - 1);
        Self {
            points: (0..n).map(|i| lo + step * T::from_usize_lossy(i)).collect(),
        }
    }

    pub fn step(&self) -> T {
        if self.points.len() < 2 {
            return T::zero();
        }
        self.points[1] - self.points[0]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CamlEstimate<T: Real> {
    pub targets: TargetSet<T>,
    /// `‖Y − Σ β̂_m a_r^c a_t^H X‖²_F`.
    pub residual: T,
    /// Coarse winners sit in adjacent grid cells.
    pub adjacent: bool,
}

/// Concentrated least-squares fit of the target model at fixed angles.
struct CamlFit<'a, T: Real> {
    tx: ArrayManifold,
    rx: ArrayManifold,
    q: CMat<T>,
    r: &'a CMat<T>,
    y: &'a CMat<T>,
    x: &'a CMat<T>,
}

impl<T: Real> CamlFit<'_, T> {
    /// `a_r^T Q a_t`, the correlation of `Y` with one target's regressor.
    fn corr(&self, at: &CVec<T>, ar: &CVec<T>) -> Complex<T> {
        ar.dot(&(&self.q * at))
    }

    /// Gram entry `<Φ_i, Φ_j>`.
    fn gram(&self, at_i: &CVec<T>, ar_i: &CVec<T>, at_j: &CVec<T>, ar_j: &CVec<T>) -> Complex<T> {
        ar_j.dotc(ar_i) * at_j.dotc(&(self.r * at_i))
    }

    /// Amplitudes for a full angle tuple.
    fn amplitudes(&self, angles: &[T]) -> Option<Vec<Complex<T>>> {
        let m = angles.len();
        let at: Vec<_> = angles.iter().map(|&a| self.tx.steering_unchecked(a)).collect();
        let ar: Vec<_> = angles.iter().map(|&a| self.rx.steering_unchecked(a)).collect();
        let c = CVec::from_iterator(m, (0..m).map(|i| self.corr(&at[i], &ar[i])));
        let g = CMat::from_fn(m, m, |i, j| self.gram(&at[i], &ar[i], &at[j], &ar[j]));
        Some(g.cholesky()?.solve(&c).iter().copied().collect())
    }

    /// `‖Y − Σ β̂_m Φ_m‖²` formed explicitly; the concentrated form
    /// `‖Y‖² − c^H G⁻¹ c` loses all digits near an exact fit.
    fn residual(&self, angles: &[T]) -> T {
        let Some(beta) = self.amplitudes(angles) else {
            return T::lit(f64::INFINITY);
        };
        let mut g = CMat::<T>::zeros(self.rx.n_elements, self.tx.n_elements);
        for (&a, b) in angles.iter().zip(&beta) {
            let ar = self.rx.steering_unchecked(a).map(|z| z.conj() * *b);
            g += ar * self.tx.steering_unchecked(a).adjoint();
        }
        let e = self.y - g * self.x;
        e.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }
}

/// Golden-section minimization of `f` on `[lo, hi]`.
fn golden_section<T: Real>(mut lo: T, mut hi: T, tol: T, f: impl Fn(T) -> T) -> T {
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let mut a = hi - (hi - lo) * inv_phi;
    let mut b = lo + (hi - lo) * inv_phi;
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - (hi - lo) * inv_phi;
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + (hi - lo) * inv_phi;
            fb = f(b);
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// CAML estimate of `M ∈ {1, 2}` targets: exhaustive search of the angle grid
/// (ordered pairs at least one cell apart for `M = 2`) scored by the
/// concentrated residual, then golden-section refinement of each angle
/// within one cell of its coarse winner.
pub fn caml_estimate<T: Real>(
    y: &CMat<T>,
    x: &CMat<T>,
    cfg: &SystemConfig<T>,
    grid: &AngleGrid<T>,
    m: usize,
) -> Result<CamlEstimate<T>> {
    if !(1..=2).contains(&m) {
        return Err(Error::Config(format!("CAML grid search supports 1 or 2 targets, got {m}")));
    }
    if y.ncols() != x.ncols() || y.nrows() != cfg.n_rx || x.nrows() != cfg.n_tx {
        return Err(Error::Shape("echo and transmit blocks do not match the arrays".into()));
    }
    if grid.len() < m + 1 {
        return Err(Error::Config("angle grid too small".into()));
    }
    let r = x * x.adjoint();
    let fit = CamlFit {
        tx: cfg.tx(),
        rx: cfg.rx(),
        q: y * x.adjoint(),
        r: &r,
        y,
        x,
    };
    let g = grid.len();
    let at: Vec<_> = grid.points.iter().map(|&a| fit.tx.steering_unchecked(a)).collect();
    let ar: Vec<_> = grid.points.iter().map(|&a| fit.rx.steering_unchecked(a)).collect();
    let rat: Vec<_> = at.iter().map(|a| &r * a).collect();
    let c: Vec<_> = (0..g).map(|i| fit.corr(&at[i], &ar[i])).collect();
    let d: Vec<_> = (0..g).map(|i| at[i].dotc(&rat[i]).re * ar[i].norm_squared()).collect();

    // The two grid endpoints alias to the same steering vector.
    let last = if (grid.points[g - 1] - grid.points[0] - T::pi()).abs() < T::lit(1e-12) {
        g - 1
    } else {
        g
    };
    let mut best = (T::lit(f64::NEG_INFINITY), 0usize, 0usize);
    if m == 1 {
        for i in 0..last {
            if d[i] > T::zero() {
                let s = c[i].norm_sqr() / d[i];
                if s > best.0 {
                    best = (s, i, i);
                }
            }
        }
    } else {
        for i in 0..last {
            for j in i + 1..last {
                let gij = ar[j].dotc(&ar[i]) * at[j].dotc(&rat[i]);
                let det = d[i] * d[j] - gij.norm_sqr();
                if !(det > T::eps() * d[i] * d[j] * T::lit(16.0)) {
                    continue;
                }
                let cross = (c[i].conj() * gij * c[j]).re;
                let s = (d[j] * c[i].norm_sqr() + d[i] * c[j].norm_sqr() - cross - cross) / det;
                if s > best.0 {
                    best = (s, i, j);
                }
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Rank("no angle candidate has a nonsingular fit".into()));
    }
    let adjacent = m == 2 && best.2 == best.1 + 1;
    let coarse: Vec<T> = if m == 1 {
        vec![grid.points[best.1]]
    } else {
        vec![grid.points[best.1], grid.points[best.2]]
    };

    // Coordinate-wise refinement, kept only if it lowers the residual.
    let step = grid.step();
    let edge = T::frac_pi_2() - T::lit(1e-9);
    let mut angles = coarse.clone();
    for _ in 0..2 {
        for k in 0..m {
            let lo = (coarse[k] - step).max(-edge);
            let hi = (coarse[k] + step).min(edge);
            let mut trial = angles.clone();
            let arg = golden_section(lo, hi, T::lit(1e-12), |a| {
                let mut t = trial.clone();
                t[k] = a;
                fit.residual(&t)
            });
            trial[k] = arg;
            if fit.residual(&trial) <= fit.residual(&angles) {
                angles = trial;
            }
        }
    }
    let mut clamped: Vec<T> = angles.iter().map(|a| a.max(-edge).min(edge)).collect();
    if fit.residual(&clamped) > fit.residual(&coarse) && coarse.iter().all(|a| a.abs() < edge) {
        clamped = coarse;
    }
    let beta = fit
        .amplitudes(&clamped)
        .ok_or_else(|| Error::Rank("singular amplitude fit at the refined angles".into()))?;
    let residual = fit.residual(&clamped);
    Ok(CamlEstimate {
        targets: TargetSet::new(clamped, beta)?,
        residual,
        adjacent,
    })
}

/// Reorders `est` so that each estimate faces its nearest true angle.
/// Assignment is by minimum total absolute angle error over permutations.
pub fn match_targets<T: Real>(est: &TargetSet<T>, truth: &TargetSet<T>) -> Result<TargetSet<T>> {
    let m = truth.len();
    if est.len() != m {
        return Err(Error::Shape(format!("{} estimates for {} targets", est.len(), m)));
    }
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = perm.clone();
    let mut best_cost = T::lit(f64::INFINITY);
    loop {
        let cost = (0..m).fold(T::zero(), |acc, i| {
            acc + (est.angles[perm[i]] - truth.angles[i]).abs()
        });
        if cost < best_cost {
            best_cost = cost;
            best = perm.clone();
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    TargetSet::new(
        best.iter().map(|&i| est.angles[i]).collect(),
        best.iter().map(|&i| est.coeffs[i]).collect(),
    )
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Where the transmit block comes from.
#[derive(Debug, Clone)]
pub enum DesignSource {
    Covariance(TransmitCovariance<f64>),
    Beamforming(BeamformingDesign),
}

impl DesignSource {
    pub fn covariance(&self) -> TransmitCovariance<f64> {
        match self {
            DesignSource::Covariance(c) => c.clone(),
            DesignSource::Beamforming(d) => TransmitCovariance::projected(&d.total_covariance()),
        }
    }

    pub fn synthesize<R: Rng + ?Sized>(&self, block_len: usize, rng: &mut R) -> SignalBlock<f64> {
        match self {
            DesignSource::Covariance(c) => synthesize_block(c, block_len, rng),
            DesignSource::Beamforming(d) => synthesize_design(d, block_len, rng),
        }
    }
}

/// Root-mean-square errors or root CRBs per parameter group; a group is
/// `None` when the scenario does not estimate it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GroupValues {
    /// Entries of `G` (Scenario I).
    pub response: Option<f64>,
    pub angle: Option<f64>,
    /// Real and imaginary parts of the reflection coefficients.
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    /// Sum of squared errors per group.
    pub sq_err: GroupValues,
    /// Group-summed CRB from the sample covariance.
    pub crb_actual: GroupValues,
    /// `ξ̂` for point targets, `vec(Ĝ)` as re/im pairs for Scenario I.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub estimate: Vec<f64>,
    pub caml_adjacent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimationRun {
    pub scenario: u8,
    pub trials: usize,
    pub failed: usize,
    pub block_len: usize,
    pub seed: u64,
    pub rmse: GroupValues,
    pub root_crb_theoretical: GroupValues,
    /// Root of the per-trial sample-covariance CRB, averaged over trials.
    pub root_crb_actual: GroupValues,
    /// Relative gap `tr CRB(XX^H/L) / tr CRB(S_x) − 1`, averaged over trials.
    pub crb_gap: f64,
    pub caml_warnings: usize,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone)]
pub struct MonteCarloOptions {
    pub trials: usize,
    pub grid_points: usize,
    pub keep_records: bool,
    /// Abort when more than this fraction of trials fails.
    pub max_failure_rate: f64,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            trials: 1000,
            grid_points: 2001,
            keep_records: false,
            max_failure_rate: 0.01,
        }
    }
}

/// Scenario-I response matrix used by the Monte Carlo driver: i.i.d.
/// `CN(0, 1)` entries, fixed per source.
pub fn extended_target_response(cfg: &SystemConfig<f64>, source: &RandomSource) -> CMat<f64> {
    let mut rng = source.split(u64::MAX).rng();
    circular_normal_mat(cfg.n_rx, cfg.n_tx, &mut rng)
}

/// Per-parameter CRB diagonal grouped as (response, angle, amplitude) sums.
fn crb_groups(cov: &TransmitCovariance<f64>, scenario: &Scenario<f64>, cfg: &SystemConfig<f64>) -> Result<GroupValues> {
    match scenario {
        Scenario::One => {
            let total = match hermitian_inverse(cov.matrix()) {
                Some(inv) => cfg.n_rx as f64 * cfg.noise_radar / cfg.block_len as f64 * trace_re(&inv),
                None => f64::INFINITY,
            };
            Ok(GroupValues {
                response: Some(total),
                ..Default::default()
            })
        }
        Scenario::Two(targets) => {
            let fim = fisher_information(cov, targets, &cfg.tx(), &cfg.rx(), cfg)?;
            let m = targets.len();
            let diag = fim
                .per_parameter_crb()
                .unwrap_or_else(|| nalgebra::DVector::from_element(3 * m, f64::INFINITY));
            Ok(GroupValues {
                response: None,
                angle: Some(diag.rows(0, m).sum()),
                amplitude: Some(diag.rows(m, 2 * m).sum()),
            })
        }
    }
}

fn total(g: &GroupValues) -> f64 {
    g.response.unwrap_or(0.0) + g.angle.unwrap_or(0.0) + g.amplitude.unwrap_or(0.0)
}

enum TrialOutcome {
    Ok(TrialRecord),
    Failed,
}

fn run_trial(
    index: usize,
    design: &DesignSource,
    scenario: &Scenario<f64>,
    cfg: &SystemConfig<f64>,
    response: &CMat<f64>,
    grid: &AngleGrid<f64>,
    source: &RandomSource,
    keep: bool,
) -> Result<TrialOutcome> {
    let mut rng = source.split(index as u64).rng();
    let block = design.synthesize(cfg.block_len, &mut rng);
    let y = simulate_echo(&block.x, response, cfg.noise_radar, &mut rng)?;
    let sample = TransmitCovariance::projected(&block.sample_cov);
    match scenario {
        Scenario::One => {
            let g_est = match ls_estimate(&y, &block.x) {
                Ok(g) => g,
                Err(Error::Rank(_)) => return Ok(TrialOutcome::Failed),
                Err(e) => return Err(e),
            };
            let err = (&g_est - response).iter().map(|z| z.norm_sqr()).sum::<f64>();
            let crb_actual = crb_groups(&sample, scenario, cfg)?;
            let estimate = if keep {
                g_est.iter().flat_map(|z| [z.re, z.im]).collect()
            } else {
                Vec::new()
            };
            Ok(TrialOutcome::Ok(TrialRecord {
                index,
                sq_err: GroupValues {
                    response: Some(err),
                    ..Default::default()
                },
                crb_actual,
                estimate,
                caml_adjacent: false,
            }))
        }
        Scenario::Two(truth) => {
            let est = match caml_estimate(&y, &block.x, cfg, grid, truth.len()) {
                Ok(e) => e,
                Err(Error::Rank(_)) => return Ok(TrialOutcome::Failed),
                Err(e) => return Err(e),
            };
            let matched = match_targets(&est.targets, truth)?;
            let angle = (0..truth.len())
                .map(|i| (matched.angles[i] - truth.angles[i]).powi(2))
                .sum::<f64>();
            let amplitude = (0..truth.len())
                .map(|i| (matched.coeffs[i] - truth.coeffs[i]).norm_sqr())
                .sum::<f64>();
            let crb_actual = crb_groups(&sample, scenario, cfg)?;
            Ok(TrialOutcome::Ok(TrialRecord {
                index,
                sq_err: GroupValues {
                    response: None,
                    angle: Some(angle),
                    amplitude: Some(amplitude),
                },
                crb_actual,
                estimate: if keep { matched.params().iter().copied().collect() } else { Vec::new() },
                caml_adjacent: est.adjacent,
            }))
        }
    }
}

/// Runs `opts.trials` independent trials in parallel and reduces them in
/// trial order. Scenario I uses LS on a fixed random response matrix,
/// Scenario II uses CAML on the scenario's targets.
pub fn monte_carlo(
    design: &DesignSource,
    scenario: &Scenario<f64>,
    cfg: &SystemConfig<f64>,
    source: &RandomSource,
    opts: &MonteCarloOptions,
) -> Result<EstimationRun> {
    if opts.trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let response = match scenario {
        Scenario::One => extended_target_response(cfg, source),
        Scenario::Two(t) => t.response_matrix(&cfg.tx(), &cfg.rx())?,
    };
    let grid = AngleGrid::uniform(opts.grid_points);
    let outcomes: Vec<Result<TrialOutcome>> = (0..opts.trials)
        .into_par_iter()
        .map(|i| run_trial(i, design, scenario, cfg, &response, &grid, source, opts.keep_records))
        .collect();

    let mut records = Vec::with_capacity(opts.trials);
    let mut failed = 0;
    for o in outcomes {
        match o? {
            TrialOutcome::Ok(r) => records.push(r),
            TrialOutcome::Failed => failed += 1,
        }
    }
    if failed as f64 > opts.max_failure_rate * opts.trials as f64 || records.is_empty() {
        return Err(Error::TrialFailures {
            failed,
            trials: opts.trials,
        });
    }

    let cov = design.covariance();
    let theory = crb_groups(&cov, scenario, cfg)?;
    let counts = match scenario {
        Scenario::One => GroupValues {
            response: Some((cfg.n_rx * cfg.n_tx) as f64),
            ..Default::default()
        },
        Scenario::Two(t) => GroupValues {
            response: None,
            angle: Some(t.len() as f64),
            amplitude: Some(2.0 * t.len() as f64),
        },
    };
    let n = records.len() as f64;
    let mean_root = |pick: &dyn Fn(&GroupValues) -> Option<f64>, per_trial: &dyn Fn(&TrialRecord) -> Option<f64>| {
        pick(&counts).map(|c| {
            let s = records.iter().map(|r| per_trial(r).unwrap_or(0.0)).sum::<f64>();
            (s / n / c).sqrt()
        })
    };
    let rmse = GroupValues {
        response: mean_root(&|g| g.response, &|r| r.sq_err.response),
        angle: mean_root(&|g| g.angle, &|r| r.sq_err.angle),
        amplitude: mean_root(&|g| g.amplitude, &|r| r.sq_err.amplitude),
    };
    let root_crb_actual = GroupValues {
        response: mean_root(&|g| g.response, &|r| r.crb_actual.response),
        angle: mean_root(&|g| g.angle, &|r| r.crb_actual.angle),
        amplitude: mean_root(&|g| g.amplitude, &|r| r.crb_actual.amplitude),
    };
    let root = |v: Option<f64>, c: Option<f64>| v.zip(c).map(|(v, c)| (v / c).sqrt());
    let root_crb_theoretical = GroupValues {
        response: root(theory.response, counts.response),
        angle: root(theory.angle, counts.angle),
        amplitude: root(theory.amplitude, counts.amplitude),
    };
    let theory_total = total(&theory);
    let crb_gap = records.iter().map(|r| total(&r.crb_actual) / theory_total - 1.0).sum::<f64>() / n;
    let caml_warnings = records.iter().filter(|r| r.caml_adjacent).count();
    Ok(EstimationRun {
        scenario: scenario.id(),
        trials: opts.trials,
        failed,
        block_len: cfg.block_len,
        seed: source.seed,
        rmse,
        root_crb_theoretical,
        root_crb_actual,
        crb_gap,
        caml_warnings,
        records,
    })
}

/// Relative gap between the CRB of one sampled block's `XX^H/L` and the CRB
/// of `S_x`.
pub fn sample_crb_gap<R: Rng + ?Sized>(
    design: &DesignSource,
    scenario: &Scenario<f64>,
    cfg: &SystemConfig<f64>,
    rng: &mut R,
) -> Result<f64> {
    let theory = total(&crb_groups(&design.covariance(), scenario, cfg)?);
    let block = design.synthesize(cfg.block_len, rng);
    let actual = total(&crb_groups(&TransmitCovariance::projected(&block.sample_cov), scenario, cfg)?);
    Ok(actual / theory - 1.0)
}

/// Median over `draws` of [`sample_crb_gap`].
pub fn median_crb_gap(
    design: &DesignSource,
    scenario: &Scenario<f64>,
    cfg: &SystemConfig<f64>,
    source: &RandomSource,
    draws: usize,
) -> Result<f64> {
    let mut gaps = (0..draws)
        .map(|i| sample_crb_gap(design, scenario, cfg, &mut source.split(i as u64).rng()))
        .collect::<Result<Vec<_>>>()?;
    gaps.sort_by(|a, b| a.total_cmp(b));
    Ok(match draws {
        0 => f64::NAN,
        d if d % 2 == 1 => gaps[d / 2],
        d => 0.5 * (gaps[d / 2 - 1] + gaps[d / 2]),
    })
}

/// `‖X X^H / L − S_x‖_F / ‖S_x‖_F`.
pub fn sample_cov_error<T: Real>(block: &SignalBlock<T>, cov: &TransmitCovariance<T>) -> T {
    let diff = &block.sample_cov - cov.matrix();
    crate::linalg::fro(&diff) / crate::linalg::fro(cov.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fro;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn cfg(n: usize, m: usize, p: f64, noise: f64, l: usize) -> SystemConfig<f64> {
        SystemConfig::new(n, n, 0, m, p, 1.0, noise, l, 0.0).unwrap()
    }

    #[test]
    fn zero_covariance_gives_zero_block() {
        let cov = TransmitCovariance::new(CMat::<f64>::zeros(4, 4)).unwrap();
        let b = synthesize_block(&cov, 16, &mut RandomSource::new(1).rng());
        assert!(b.x.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn identity_sample_covariance_converges() {
        let cov = TransmitCovariance::isotropic(4, 4.0);
        let b = synthesize_block(&cov, 10_000, &mut RandomSource::new(2).rng());
        assert!(sample_cov_error(&b, &cov) < 0.05);
    }

    #[test]
    fn rank_one_columns_stay_in_range() {
        let v = CVec::from_vec(vec![Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.2), Complex64::new(0.0, 1.0)]);
        let cov = TransmitCovariance::new(&v * v.adjoint()).unwrap();
        let b = synthesize_block(&cov, 20, &mut RandomSource::new(3).rng());
        let u = &v / Complex64::from(v.norm());
        for col in b.x.column_iter() {
            let proj = &u * u.dotc(&col);
            assert!((col - proj).norm() < 1e-10);
        }
    }

    #[test]
    fn noiseless_echo_is_exact() {
        let mut rng = RandomSource::new(4).rng();
        let x: CMat<f64> = circular_normal_mat(4, 16, &mut rng);
        let g: CMat<f64> = circular_normal_mat(4, 4, &mut rng);
        let y = simulate_echo(&x, &g, 0.0, &mut rng).unwrap();
        assert!(fro(&(y - &g * &x)) < 1e-12);
    }

    #[test]
    fn pure_noise_variance() {
        let mut rng = RandomSource::new(5).rng();
        let x = CMat::<f64>::zeros(4, 25_000);
        let y = simulate_echo(&x, &CMat::zeros(4, 4), 0.7, &mut rng).unwrap();
        let var = y.iter().map(|z| z.norm_sqr()).sum::<f64>() / y.len() as f64;
        assert!((var - 0.7).abs() < 0.05 * 0.7);
    }

    #[test]
    fn single_target_echo_is_rank_one() {
        let c = cfg(6, 1, 6.0, 1.0, 32);
        let t = TargetSet::new(vec![0.0], vec![Complex64::new(1.0, 0.0)]).unwrap();
        let mut rng = RandomSource::new(6).rng();
        let mut b = synthesize_block(&TransmitCovariance::isotropic(6, 6.0), 32, &mut rng);
        let mut quiet = c.clone();
        quiet.noise_radar = 1e-300;
        simulate_target_echo(&mut b, &t, &quiet, &mut rng).unwrap();
        let y = b.y.unwrap();
        let sv = y.singular_values();
        assert!(sv[1] < 1e-9 * sv[0]);
    }

    #[test]
    fn ls_noiseless_recovery() {
        let mut rng = RandomSource::new(7).rng();
        let x: CMat<f64> = circular_normal_mat(5, 40, &mut rng);
        let g: CMat<f64> = circular_normal_mat(3, 5, &mut rng);
        let est = ls_estimate(&(&g * &x), &x).unwrap();
        assert!(fro(&(est - g)) < 1e-10);
    }

    #[test]
    fn ls_rejects_short_blocks() {
        let mut rng = RandomSource::new(8).rng();
        let x: CMat<f64> = circular_normal_mat(5, 3, &mut rng);
        let y: CMat<f64> = circular_normal_mat(2, 3, &mut rng);
        assert!(matches!(ls_estimate(&y, &x), Err(Error::Rank(_))));
    }

    #[test]
    fn caml_noiseless_on_grid_is_exact() {
        let c = cfg(8, 2, 8.0, 1.0, 32);
        let grid = AngleGrid::<f64>::uniform(401);
        let truth = TargetSet::new(
            vec![grid.points[130], grid.points[270]],
            vec![Complex64::new(0.8, -0.3), Complex64::new(-0.2, 0.6)],
        )
        .unwrap();
        let mut rng = RandomSource::new(9).rng();
        let x = synthesize_block(&TransmitCovariance::isotropic(8, 8.0), 32, &mut rng).x;
        let y = &truth.response_matrix(&c.tx(), &c.rx()).unwrap() * &x;
        let est = caml_estimate(&y, &x, &c, &grid, 2).unwrap();
        let est = match_targets(&est.targets, &truth).unwrap();
        for i in 0..2 {
            assert!((est.angles[i] - truth.angles[i]).abs() < 1e-9);
            assert!((est.coeffs[i] - truth.coeffs[i]).norm() < 1e-8);
        }
    }

    #[test]
    fn matching_is_permutation_invariant() {
        let truth = TargetSet::new(vec![-0.4, 0.5], vec![Complex64::new(1.0, 0.0); 2]).unwrap();
        let a = TargetSet::new(vec![-0.39, 0.52], vec![Complex64::new(1.1, 0.0), Complex64::new(0.9, 0.0)]).unwrap();
        let b = TargetSet::new(vec![0.52, -0.39], vec![Complex64::new(0.9, 0.0), Complex64::new(1.1, 0.0)]).unwrap();
        assert_eq!(match_targets(&a, &truth).unwrap(), match_targets(&b, &truth).unwrap());
    }

    #[test]
    fn single_noiseless_trial_has_zero_error() {
        let c = SystemConfig::new(4, 4, 0, 1, 4.0, 1.0, 1e-300, 16, 0.0).unwrap();
        let design = DesignSource::Covariance(TransmitCovariance::isotropic(4, 4.0));
        let opts = MonteCarloOptions {
            trials: 1,
            ..Default::default()
        };
        let run = monte_carlo(&design, &Scenario::One, &c, &RandomSource::new(1), &opts).unwrap();
        assert!(run.rmse.response.unwrap() < 1e-12);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = golden_section(-1.0, 2.0, 1e-10, |t: f64| (t - 0.3).powi(2));
        assert_relative_eq!(x, 0.3, epsilon = 1e-8);
    }
}
