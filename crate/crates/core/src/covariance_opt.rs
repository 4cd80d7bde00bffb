//! Rate-constrained CRB minimization over the transmit covariance.
//!
//! Scenario I is solved through its Lagrange dual: an ellipsoid search over
//! `(μ, λ)` followed by a Newton refinement of the active stationarity
//! conditions, with the primal recovered in closed form as
//! `S = A(λ, μ)^{-1/2}`. Scenario II, the rate-maximizing corner and the
//! beampattern baseline are semidefinite programs.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_inverse, psd_project, quad_form, trace_re, HermitianEig};
use crate::metrics::{
    crb_scenario1, multicast_rate, FimOperator, Scenario, TransmitCovariance,
};
use crate::model::{ChannelSet, SystemConfig, TargetSet};
use crate::scalar::{CMat, CVec};
use crate::solver::{
    ellipsoid_minimize, AffineHerm, EllipsoidOptions, EllipsoidState, LinExpr, Lmi, Model,
    SdpOptions, SolveReport, SolveStatus,
};

/// Eigenvalue threshold, relative to the largest, for rank decisions.
pub const RANK_REL: f64 = 1e-7;

/// Relative SNR backoff from `t*` used when the rate threshold sits on the
/// capacity boundary.
pub const CORNER_MARGIN: f64 = 1e-4;

/// Dual variables `λ` (power) and `μ_k` (per-user SNR).
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub lambda: f64,
    pub mu: Vec<f64>,
}

impl DualPoint {
    pub fn new(lambda: f64, mu: Vec<f64>) -> Self {
        Self { lambda, mu }
    }

    /// `[μ_1, …, μ_K, λ]`.
    pub fn to_vec(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.mu.len() + 1);
        for (k, m) in self.mu.iter().enumerate() {
            v[k] = *m;
        }
        v[self.mu.len()] = self.lambda;
        v
    }

    pub fn from_vec(v: &DVector<f64>) -> Self {
        let k = v.len() - 1;
        Self {
            lambda: v[k],
            mu: (0..k).map(|i| v[i]).collect(),
        }
    }

    /// `A(λ, μ) = λI − Σ μ_k h_k h_k^H`.
    pub fn a_matrix(&self, channels: &ChannelSet<f64>, n_tx: usize) -> CMat<f64> {
        let mut a = CMat::<f64>::identity(n_tx, n_tx) * Complex64::from(self.lambda);
        for (h, m) in channels.vectors.iter().zip(&self.mu) {
            a -= h * h.adjoint() * Complex64::from(*m);
        }
        crate::linalg::hermitian_part(&a)
    }
}

/// Minimizer of `tr(S⁻¹) + tr(A S)` over `S ≻ 0`.
#[derive(Debug, Clone)]
pub struct InnerMinimizer {
    /// `U diag(α_i^{-1/2}) U^H` restricted to the range of `A`.
    pub covariance: CMat<f64>,
    /// Eigenvalues `α_i` of `A`, ascending.
    pub alphas: DVector<f64>,
    pub vectors: CMat<f64>,
    /// Null directions of `A`, along which the minimizer is unbounded.
    pub unbounded: Vec<CVec<f64>>,
}

impl InnerMinimizer {
    pub fn is_bounded(&self) -> bool {
        self.unbounded.is_empty()
    }

    /// `min_S tr(S⁻¹) + tr(A S) = 2 Σ √α_i`.
    pub fn value(&self) -> f64 {
        2.0 * self.alphas.iter().map(|a| a.max(0.0).sqrt()).sum::<f64>()
    }
}

pub fn inner_minimizer(point: &DualPoint, channels: &ChannelSet<f64>, n_tx: usize) -> Result<InnerMinimizer> {
    let a = point.a_matrix(channels, n_tx);
    let eig = HermitianEig::new(&a);
    let top = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = RANK_REL * top.max(f64::MIN_POSITIVE);
    if eig.min() < -1e-9 * top.max(1.0) {
        return Err(Error::DualInfeasible(eig.min()));
    }
    let mut cov = CMat::<f64>::zeros(n_tx, n_tx);
    let mut unbounded = Vec::new();
    for i in 0..n_tx {
        let u = eig.vectors.column(i).into_owned();
        if eig.values[i] > floor {
            cov += &u * u.adjoint() * Complex64::from(eig.values[i].powf(-0.5));
        } else {
            unbounded.push(u);
        }
    }
    Ok(InnerMinimizer {
        covariance: cov,
        alphas: eig.values,
        vectors: eig.vectors,
        unbounded,
    })
}

/// Dual function `g(λ, μ) = 2 Σ √α_i + Γ Σ μ_k − λ P`, `-inf` off the domain.
pub fn dual_value(point: &DualPoint, cfg: &SystemConfig<f64>, channels: &ChannelSet<f64>) -> f64 {
    match inner_minimizer(point, channels, cfg.n_tx) {
        Ok(inner) => {
            inner.value() + cfg.gamma() * point.mu.iter().sum::<f64>() - point.lambda * cfg.power
        }
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Cutting-plane vectors at a dual point, all in `[μ_1, …, μ_K, λ]` order.
#[derive(Debug, Clone)]
pub struct DualCuts {
    /// Subgradient of the convex function `−g`.
    pub objective: DVector<f64>,
    /// Subgradient of `−λ_min(A)`, from the minimum eigenvector `v`.
    pub psd: DVector<f64>,
    /// Subgradients of `−μ_k ≤ 0` and `−λ ≤ 0`.
    pub signs: Vec<DVector<f64>>,
}

pub fn dual_subgradients(
    point: &DualPoint,
    primal: &CMat<f64>,
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
) -> DualCuts {
    let k = point.mu.len();
    let gamma = cfg.gamma();
    let mut objective = DVector::zeros(k + 1);
    for (i, h) in channels.vectors.iter().enumerate() {
        objective[i] = quad_form(primal, h) - gamma;
    }
    objective[k] = cfg.power - trace_re(primal);
    let a = point.a_matrix(channels, cfg.n_tx);
    let eig = HermitianEig::new(&a);
    let v = eig.vectors.column(0).into_owned();
    let mut psd = DVector::zeros(k + 1);
    for (i, h) in channels.vectors.iter().enumerate() {
        psd[i] = v.dotc(h).norm_sqr();
    }
    psd[k] = -1.0;
    let signs = (0..=k)
        .map(|i| {
            let mut e = DVector::zeros(k + 1);
            e[i] = -1.0;
            e
        })
        .collect();
    DualCuts {
        objective,
        psd,
        signs,
    }
}

/// One point of the CRB-rate region.
#[derive(Debug, Clone)]
pub struct TradeoffPoint {
    pub scenario: u8,
    pub method: String,
    pub rate_threshold: f64,
    /// `+inf` without users.
    pub achieved_rate: f64,
    pub crb: f64,
    pub covariance: Option<TransmitCovariance<f64>>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub wall_ms: f64,
}

impl TradeoffPoint {
    pub fn infeasible(scenario: u8, method: &str, rate_threshold: f64, started: Instant) -> Self {
        Self {
            scenario,
            method: method.to_string(),
            rate_threshold,
            achieved_rate: f64::NAN,
            crb: f64::INFINITY,
            covariance: None,
            status: SolveStatus::Infeasible,
            iterations: 0,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        }
    }

    /// Scores `cov` and fills in rate and CRB.
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(
        scenario: &Scenario<f64>,
        method: &str,
        cfg: &SystemConfig<f64>,
        channels: &ChannelSet<f64>,
        cov: TransmitCovariance<f64>,
        status: SolveStatus,
        iterations: usize,
        started: Instant,
    ) -> Result<Self> {
        let achieved_rate = if channels.is_empty() {
            f64::INFINITY
        } else {
            multicast_rate(&cov, channels, cfg)?.rate
        };
        let crb = scenario.crb(&cov, cfg)?;
        Ok(Self {
            scenario: scenario.id(),
            method: method.to_string(),
            rate_threshold: cfg.rate_threshold,
            achieved_rate,
            crb,
            covariance: Some(cov),
            status,
            iterations,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }
}

/// Orthonormal basis of the range of `[A_t, Ȧ_t, h_1, …, h_K]`.
#[derive(Debug, Clone)]
pub struct SubspaceReduction {
    pub basis: CMat<f64>,
}

impl SubspaceReduction {
    pub fn new(cfg: &SystemConfig<f64>, targets: &TargetSet<f64>, channels: &ChannelSet<f64>) -> Result<Self> {
        let tx = cfg.tx();
        let at = tx.steering_matrix(&targets.angles)?;
        let dat = tx.derivative_matrix(&targets.angles)?;
        let m = targets.len();
        let k = channels.len();
        let mut stack = CMat::<f64>::zeros(cfg.n_tx, 2 * m + k);
        stack.view_mut((0, 0), (cfg.n_tx, m)).copy_from(&at);
        stack.view_mut((0, m), (cfg.n_tx, m)).copy_from(&dat);
        for (j, h) in channels.vectors.iter().enumerate() {
            stack.set_column(2 * m + j, h);
        }
        let svd = stack.svd(true, false);
        let u = svd.u.ok_or_else(|| Error::Solver("SVD failed".into()))?;
        let sv = svd.singular_values;
        let top = sv.iter().fold(0.0f64, |a, v| a.max(*v));
        let mut cols: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > 1e-10 * top).collect();
        cols.sort_by(|a, b| sv[*b].partial_cmp(&sv[*a]).unwrap_or(std::cmp::Ordering::Equal));
        let mut basis = CMat::<f64>::zeros(cfg.n_tx, cols.len());
        for (j, &c) in cols.iter().enumerate() {
            basis.set_column(j, &u.column(c));
        }
        Ok(Self { basis })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            basis: CMat::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn lift(&self, s: &CMat<f64>) -> CMat<f64> {
        &self.basis * s * self.basis.adjoint()
    }
}

/// Solver settings shared by the covariance problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovOptions {
    pub sdp: SdpOptions,
    /// Ellipsoid stopping width, relative to `1 + N_t² / P`.
    pub ellipsoid_tol: f64,
    /// Slack for declaring the rate threshold infeasible against `R_max`.
    pub feas_tol: f64,
    pub newton_polish: bool,
}

impl Default for CovOptions {
    fn default() -> Self {
        Self {
            sdp: SdpOptions::default(),
            ellipsoid_tol: 1e-9,
            feas_tol: 1e-7,
            newton_polish: true,
        }
    }
}

/// Rate-maximizing corner covariance.
#[derive(Debug, Clone)]
pub struct CapacitySolution {
    pub covariance: TransmitCovariance<f64>,
    /// Max-min `h_k^H S h_k`.
    pub t_star: f64,
    pub r_max: f64,
    pub rank: usize,
    pub report: SolveReport,
}

pub fn solve_capacity(cfg: &SystemConfig<f64>, channels: &ChannelSet<f64>) -> Result<CapacitySolution> {
    solve_capacity_with(cfg, channels, &CovOptions::default())
}

pub fn solve_capacity_with(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    opts: &CovOptions,
) -> Result<CapacitySolution> {
    if channels.is_empty() {
        return Err(Error::Config("capacity needs at least one user".into()));
    }
    let n = cfg.n_tx;
    let mut m = Model::new();
    let s = m.herm(n);
    let t = m.scalar();
    m.psd(&s);
    m.le(s.trace().add_const(-cfg.power));
    for h in &channels.vectors {
        m.ge(s.linear(&(h * h.adjoint())).plus(&LinExpr::var(t).scale(-1.0)));
    }
    m.minimize(LinExpr::var(t).scale(-1.0));
    let mut sdp = opts.sdp;
    sdp.gap_tol = sdp.gap_tol.min(1e-9);
    sdp.feas_tol = sdp.feas_tol.min(1e-9);
    let sol = m.solve(&sdp);
    if !sol.report.is_usable(&sdp, 1e3) {
        return Err(Error::Solver(format!("capacity SDP ended with {}", sol.report.status)));
    }
    let raw = psd_project(&s.value(&sol.x));
    // drop the interior-point residue on the null space
    let eig = HermitianEig::new(&raw);
    let top = eig.max().max(0.0);
    let cleaned = eig.map(|v| if v > RANK_REL * top { v } else { 0.0 });
    let rank = eig.rank(RANK_REL);
    let cov = TransmitCovariance::new(cleaned)?;
    let t_star = channels
        .vectors
        .iter()
        .map(|h| quad_form(cov.matrix(), h))
        .fold(f64::INFINITY, f64::min);
    Ok(CapacitySolution {
        r_max: (1.0 + t_star / cfg.noise_comm).log2(),
        covariance: cov,
        t_star,
        rank,
        report: sol.report,
    })
}

/// Diagnostics of the Scenario-I dual solve.
#[derive(Debug, Clone)]
pub struct P1Solution {
    pub point: TradeoffPoint,
    pub dual: DualPoint,
    /// `tr(S⁻¹)` before and after the feasibility repair.
    pub raw_objective: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `μ_k (h_k^H S h_k − Γ)` then `λ (P − tr S)`.
    pub slackness: Vec<f64>,
    pub ellipsoid_iterations: usize,
    pub polished: bool,
    /// Largest constraint violation of the returned covariance.
    pub max_violation: f64,
}

pub fn solve_p1(cfg: &SystemConfig<f64>, channels: &ChannelSet<f64>) -> Result<P1Solution> {
    solve_p1_with(cfg, channels, &CovOptions::default())
}

pub fn solve_p1_with(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    opts: &CovOptions,
) -> Result<P1Solution> {
    let started = Instant::now();
    let n = cfg.n_tx;
    let k = channels.len();
    let p = cfg.power;
    let gamma = cfg.gamma();

    // Slater point and the dual box it certifies.
    let (s0, capacity) = if k == 0 {
        (CMat::<f64>::identity(n, n) * Complex64::from(0.5 * p / n as f64), None)
    } else {
        let cap = solve_capacity_with(cfg, channels, opts)?;
        if gamma > cap.t_star * (1.0 + opts.feas_tol) {
            return Ok(P1Solution {
                point: TradeoffPoint::infeasible(1, "optimal_cov", cfg.rate_threshold, started),
                dual: DualPoint::new(0.0, vec![0.0; k]),
                raw_objective: f64::INFINITY,
                primal_objective: f64::INFINITY,
                dual_objective: f64::INFINITY,
                slackness: vec![],
                ellipsoid_iterations: 0,
                polished: false,
                max_violation: f64::INFINITY,
            });
        }
        let frac = (1.0 - gamma / cap.t_star).clamp(0.0, 1.0);
        let theta = frac / 4.0;
        let rho = 1.0 - frac / 4.0;
        let mix = cap.covariance.matrix() * Complex64::from(1.0 - theta)
            + CMat::<f64>::identity(n, n) * Complex64::from(theta * p / n as f64);
        (mix * Complex64::from(rho), Some(cap))
    };
    let s0_inv_tr = hermitian_inverse(&s0).map(|m| trace_re(&m));
    let margin0 = p - trace_re(&s0);
    let mut hi = DVector::from_element(k + 1, 1e4);
    if let Some(tr) = s0_inv_tr {
        for (i, h) in channels.vectors.iter().enumerate() {
            let m = quad_form(&s0, h) - gamma;
            if m > 0.0 {
                hi[i] = tr / m;
            }
        }
        if margin0 > 0.0 {
            hi[k] = tr / margin0;
        }
    }
    let lo = DVector::zeros(k + 1);
    let init = EllipsoidState::enclosing_box(&lo, &hi);
    let scale = 1.0 + (n * n) as f64 / p;
    let tol = opts.ellipsoid_tol * scale;
    let radius = hi.amax() * ((k + 1) as f64).sqrt();
    let eopts = EllipsoidOptions::for_problem(k + 1, radius, tol);

    // A ⪰ δI keeps the inner minimizer bounded; the optimum has α_i ≥ 1/P².
    let delta = 0.5 / (p * p);
    let mut objective = |y: &DVector<f64>| {
        let pt = DualPoint::from_vec(y);
        match inner_minimizer(&pt, channels, n) {
            Ok(inner) => {
                let g = inner.value() + gamma * pt.mu.iter().sum::<f64>() - pt.lambda * p;
                let cuts = dual_subgradients(&pt, &inner.covariance, cfg, channels);
                (-g, cuts.objective)
            }
            Err(_) => (f64::INFINITY, DVector::zeros(y.len())),
        }
    };
    let mut psd_cut = |y: &DVector<f64>| {
        let pt = DualPoint::from_vec(y);
        let a = pt.a_matrix(channels, n);
        let eig = HermitianEig::new(&a);
        let v = eig.vectors.column(0).into_owned();
        let mut g = DVector::zeros(y.len());
        for (i, h) in channels.vectors.iter().enumerate() {
            g[i] = v.dotc(h).norm_sqr();
        }
        g[k] = -1.0;
        (delta - eig.min(), g)
    };
    let mut sign_cuts: Vec<Box<dyn FnMut(&DVector<f64>) -> (f64, DVector<f64>)>> = (0..k)
        .map(|i| {
            Box::new(move |y: &DVector<f64>| {
                let mut g = DVector::zeros(y.len());
                g[i] = -1.0;
                (-y[i], g)
            }) as Box<dyn FnMut(&DVector<f64>) -> (f64, DVector<f64>)>
        })
        .collect();
    let mut cuts: Vec<&mut dyn FnMut(&DVector<f64>) -> (f64, DVector<f64>)> = Vec::new();
    cuts.push(&mut psd_cut);
    for c in sign_cuts.iter_mut() {
        cuts.push(c.as_mut());
    }
    let result = ellipsoid_minimize(&mut objective, &mut cuts, init, &eopts);
    drop(cuts);
    if result.report.status == SolveStatus::Infeasible {
        return Err(Error::Solver("dual ellipsoid found no feasible center".into()));
    }
    let mut dual = DualPoint::from_vec(&result.x);
    let mut polished = false;
    if opts.newton_polish {
        if let Some(refined) = polish_dual(&dual, cfg, channels) {
            if dual_value(&refined, cfg, channels) >= -result.value - 1e-9 * scale {
                dual = refined;
                polished = true;
            }
        }
    }
    let inner = inner_minimizer(&dual, channels, n)?;
    if !inner.is_bounded() {
        return Err(Error::Solver("dual optimum has unbounded primal directions".into()));
    }
    let raw = inner.covariance.clone();
    let raw_objective = hermitian_inverse(&raw).map_or(f64::INFINITY, |m| trace_re(&m));
    let repaired = repair(&raw, cfg, channels, capacity.as_ref().map(|c| c.covariance.matrix()));
    let cov = TransmitCovariance::new(repaired)?;
    let primal_objective = hermitian_inverse(cov.matrix()).map_or(f64::INFINITY, |m| trace_re(&m));
    let dual_objective = dual_value(&dual, cfg, channels);
    let mut slackness: Vec<f64> = channels
        .vectors
        .iter()
        .zip(&dual.mu)
        .map(|(h, m)| m * (quad_form(cov.matrix(), h) - gamma))
        .collect();
    slackness.push(dual.lambda * (p - cov.trace()));
    let mut max_violation = (cov.trace() - p).max(0.0);
    for h in &channels.vectors {
        max_violation = max_violation.max(gamma - quad_form(cov.matrix(), h));
    }
    let status = if result.report.status == SolveStatus::Optimal || polished {
        SolveStatus::Optimal
    } else {
        result.report.status
    };
    let iterations = result.report.iterations;
    let point = TradeoffPoint::evaluate(
        &Scenario::One,
        "optimal_cov",
        cfg,
        channels,
        cov,
        status,
        iterations,
        started,
    )?;
    Ok(P1Solution {
        point,
        dual,
        raw_objective,
        primal_objective,
        dual_objective,
        slackness,
        ellipsoid_iterations: iterations,
        polished,
        max_violation,
    })
}

/// Smallest rescaling, then mixing toward the capacity covariance, that
/// restores `tr S ≤ P` and `h_k^H S h_k ≥ Γ`.
fn repair(
    s: &CMat<f64>,
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    capacity: Option<&CMat<f64>>,
) -> CMat<f64> {
    let gamma = cfg.gamma();
    let p = cfg.power;
    let min_snr = |m: &CMat<f64>| {
        channels
            .vectors
            .iter()
            .map(|h| quad_form(m, h))
            .fold(f64::INFINITY, f64::min)
    };
    let tr = trace_re(s);
    let mut out = s.clone();
    if tr > p {
        out *= Complex64::from(p / tr);
    }
    if channels.is_empty() || min_snr(&out) >= gamma {
        return out;
    }
    let up = gamma / min_snr(&out);
    if trace_re(&out) * up <= p {
        return out * Complex64::from(up);
    }
    if let Some(c) = capacity {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let mixed = &out * Complex64::from(1.0 - mid) + c * Complex64::from(mid);
            if min_snr(&mixed) >= gamma {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return &out * Complex64::from(1.0 - hi) + c * Complex64::from(hi);
    }
    out
}

/// `S(y) = A(y)^{-1/2}` and its directional derivatives along `dA`.
struct InvSqrt {
    vectors: CMat<f64>,
    alphas: DVector<f64>,
    s: CMat<f64>,
}

impl InvSqrt {
    fn new(a: &CMat<f64>) -> Option<Self> {
        let eig = HermitianEig::new(a);
        if eig.min() <= 0.0 {
            return None;
        }
        let s = eig.map(|v| v.powf(-0.5));
        Some(Self {
            vectors: eig.vectors,
            alphas: eig.values,
            s,
        })
    }

    /// Derivative of `A ↦ A^{-1/2}` applied to `dA`, in the eigenbasis.
    fn derivative_eigbasis(&self, da_eig: &CMat<f64>) -> CMat<f64> {
        let n = self.alphas.len();
        let f = |a: f64| a.powf(-0.5);
        let df = |a: f64| -0.5 * a.powf(-1.5);
        CMat::from_fn(n, n, |i, j| {
            let (ai, aj) = (self.alphas[i], self.alphas[j]);
            let d = if (ai - aj).abs() <= 1e-12 * ai.max(aj) {
                df(0.5 * (ai + aj))
            } else {
                (f(ai) - f(aj)) / (ai - aj)
            };
            da_eig[(i, j)] * Complex64::from(d)
        })
    }
}

/// Newton refinement of `tr S = P` and `h_k^H S h_k = Γ` over the active set,
/// with the active set corrected until signs and inactive constraints agree.
fn polish_dual(start: &DualPoint, cfg: &SystemConfig<f64>, channels: &ChannelSet<f64>) -> Option<DualPoint> {
    let k = channels.len();
    let n = cfg.n_tx;
    let gamma = cfg.gamma();
    let inner = inner_minimizer(start, channels, n).ok()?;
    let mu_scale = start.mu.iter().fold(start.lambda, |a, m| a.max(*m));
    let mut active: Vec<bool> = (0..k)
        .map(|i| {
            let slack = quad_form(&inner.covariance, &channels.vectors[i]) - gamma;
            start.mu[i] > 1e-6 * mu_scale || slack.abs() <= 1e-4 * (1.0 + gamma)
        })
        .collect();
    for _round in 0..(2 * k + 3) {
        let Some(pt) = newton_active(start, &active, cfg, channels) else {
            // shrink the active set when the system has no solution
            if let Some(i) = (0..k).rev().find(|&i| active[i]) {
                active[i] = false;
                continue;
            }
            return None;
        };
        let s = inner_minimizer(&pt, channels, n).ok()?.covariance;
        let neg = (0..k).filter(|&i| active[i]).min_by(|&a, &b| {
            pt.mu[a].partial_cmp(&pt.mu[b]).unwrap_or(std::cmp::Ordering::Equal)
        });
        if let Some(i) = neg {
            if pt.mu[i] < 0.0 {
                active[i] = false;
                continue;
            }
        }
        let viol = (0..k)
            .filter(|&i| !active[i])
            .map(|i| (i, gamma - quad_form(&s, &channels.vectors[i])))
            .filter(|(_, v)| *v > 1e-10 * (1.0 + gamma))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        if let Some((i, _)) = viol {
            active[i] = true;
            continue;
        }
        if pt.lambda <= 0.0 {
            return None;
        }
        return Some(pt);
    }
    None
}

fn newton_active(
    start: &DualPoint,
    active: &[bool],
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
) -> Option<DualPoint> {
    let n = cfg.n_tx;
    let gamma = cfg.gamma();
    let idx: Vec<usize> = (0..active.len()).filter(|&i| active[i]).collect();
    let dim = idx.len() + 1;
    let mut pt = DualPoint::new(
        start.lambda,
        start
            .mu
            .iter()
            .enumerate()
            .map(|(i, m)| if active[i] { m.max(0.0) } else { 0.0 })
            .collect(),
    );
    let residual = |pt: &DualPoint| -> Option<(DVector<f64>, InvSqrt)> {
        let f = InvSqrt::new(&pt.a_matrix(channels, n))?;
        let mut r = DVector::zeros(dim);
        for (row, &i) in idx.iter().enumerate() {
            r[row] = quad_form(&f.s, &channels.vectors[i]) - gamma;
        }
        r[dim - 1] = trace_re(&f.s) - cfg.power;
        Some((r, f))
    };
    let scale = cfg.power.max(gamma).max(1.0);
    let (mut r, mut f) = residual(&pt)?;
    for _ in 0..100 {
        if r.amax() <= 1e-13 * scale {
            return Some(pt);
        }
        // Jacobian columns: d/dμ_j (dA = −h_j h_j^H), d/dλ (dA = I).
        let proj: Vec<CVec<f64>> = channels
            .vectors
            .iter()
            .map(|h| f.vectors.adjoint() * h)
            .collect();
        let mut jac = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let da_eig = if col + 1 == dim {
                CMat::<f64>::identity(n, n)
            } else {
                let v = &proj[idx[col]];
                -(v * v.adjoint())
            };
            let ds = f.derivative_eigbasis(&da_eig);
            for (row, &i) in idx.iter().enumerate() {
                jac[(row, col)] = quad_form(&ds, &proj[i]);
            }
            jac[(dim - 1, col)] = trace_re(&ds);
        }
        let step = jac.lu().solve(&(-&r))?;
        let mut t = 1.0;
        let base = r.norm();
        let mut accepted = false;
        for _ in 0..40 {
            let mut cand = pt.clone();
            for (row, &i) in idx.iter().enumerate() {
                cand.mu[i] += t * step[row];
            }
            cand.lambda += t * step[dim - 1];
            if let Some((rc, fc)) = residual(&cand) {
                if rc.norm() < (1.0 - 1e-4 * t) * base || rc.amax() <= 1e-13 * scale {
                    pt = cand;
                    r = rc;
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    (r.amax() <= 1e-9 * scale).then_some(pt)
}

/// Schur-lift SDP for Scenario I: `min tr T` with `[[T, I], [I, S]] ⪰ 0`.
/// Used as an independent oracle for the dual method.
pub fn solve_p1_sdp(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    opts: &CovOptions,
) -> Result<(TransmitCovariance<f64>, f64, SolveReport)> {
    let n = cfg.n_tx;
    let mut m = Model::new();
    let t = m.herm(n);
    let s = m.herm(n);
    let mut l = Lmi::new(2 * n);
    l.herm(&t, 0);
    l.herm(&s, n);
    l.constant_offdiag(0, n, &CMat::identity(n, n));
    m.lmi(l);
    m.le(s.trace().add_const(-cfg.power));
    let gamma = cfg.gamma();
    for h in &channels.vectors {
        m.ge(s.linear(&(h * h.adjoint())).add_const(-gamma));
    }
    m.minimize(t.trace());
    let sol = m.solve(&opts.sdp);
    match sol.report.status {
        SolveStatus::Infeasible => return Err(Error::Infeasible("Schur-lift SDP".into())),
        _ if !sol.report.is_usable(&opts.sdp, 1e3) => {
            return Err(Error::Solver(format!("Schur-lift SDP ended with {}", sol.report.status)))
        }
        _ => {}
    }
    let cov = TransmitCovariance::new(psd_project(&s.value(&sol.x)))?;
    Ok((cov, sol.report.objective, sol.report))
}

/// Scenario-II solution with the SDP objective kept alongside the exact CRB.
#[derive(Debug, Clone)]
pub struct P2Solution {
    pub point: TradeoffPoint,
    /// CRB bound reported by the SDP objective.
    pub sdp_objective: f64,
    pub reduced_dim: usize,
    pub report: SolveReport,
}

pub fn solve_p2(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    targets: &TargetSet<f64>,
    use_reduction: bool,
) -> Result<P2Solution> {
    solve_p2_with(cfg, channels, targets, use_reduction, &CovOptions::default())
}

/// Sets the objective to the Scenario-II CRB of the affine covariance `cov`,
/// through one Schur-complement LMI per parameter. The FIM is rescaled by
/// `D = diag(F_iso)^{-1/2}` on both sides, which keeps the angle and
/// amplitude blocks at comparable magnitude. Returns `c` with
/// `CRB = c · objective`.
pub(crate) fn set_crb2_objective(
    m: &mut Model,
    fim: &FimOperator<f64>,
    cov: &AffineHerm,
    power: f64,
) -> Result<f64> {
    let n = cov.dim();
    let iso = fim.apply(&(CMat::<f64>::identity(n, n) * Complex64::from(power / n as f64)))?;
    let dim = iso.matrix.nrows();
    let d: Vec<f64> = (0..dim)
        .map(|i| {
            let v = iso.matrix[(i, i)];
            if v > 0.0 {
                v.sqrt().recip()
            } else {
                1.0
            }
        })
        .collect();
    let scaled = |e: &CMat<f64>| -> Result<CMat<f64>> {
        let f = fim.apply(e)?.matrix;
        Ok(CMat::from_fn(dim, dim, |r, k| Complex64::new(f[(r, k)] * d[r] * d[k], 0.0)))
    };
    let mut terms: Vec<(usize, CMat<f64>)> = Vec::with_capacity(cov.terms.len());
    for (i, b) in &cov.terms {
        terms.push((*i, scaled(b)?));
    }
    let constant = scaled(&cov.constant)?;
    // [D F D]^{-1}_ii = [F^{-1}]_ii / d_i²
    let weights: Vec<f64> = d.iter().map(|v| v * v).collect();
    let total: f64 = weights.iter().sum();
    let mut objective = LinExpr::constant(0.0);
    for p in 0..dim {
        let t = m.scalar();
        objective = objective.plus(&LinExpr::var(t).scale(weights[p] / total));
        let mut l = Lmi::new(dim + 1);
        l.constant_diag(0, &constant);
        for (i, f) in &terms {
            l.term_diag(*i, 0, f);
        }
        let mut e = CMat::<f64>::zeros(dim, 1);
        e[(p, 0)] = Complex64::new(1.0, 0.0);
        l.constant_offdiag(0, dim, &e);
        l.scalar(t, dim, dim, 1.0);
        m.lmi(l);
    }
    m.minimize(objective);
    Ok(total)
}

pub fn solve_p2_with(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    targets: &TargetSet<f64>,
    use_reduction: bool,
    opts: &CovOptions,
) -> Result<P2Solution> {
    let started = Instant::now();
    let scenario = Scenario::Two(targets.clone());
    let mut gamma = cfg.gamma();
    if !channels.is_empty() && gamma > 0.0 {
        let cap = solve_capacity_with(cfg, channels, opts)?;
        if gamma > cap.t_star * (1.0 + opts.feas_tol) {
            return Ok(P2Solution {
                point: TradeoffPoint::infeasible(2, "optimal_cov", cfg.rate_threshold, started),
                sdp_objective: f64::INFINITY,
                reduced_dim: 0,
                report: cap.report,
            });
        }
        // At the capacity corner the feasible set has no interior.
        gamma = gamma.min(cap.t_star * (1.0 - CORNER_MARGIN));
    }
    let red = if use_reduction {
        SubspaceReduction::new(cfg, targets, channels)?
    } else {
        SubspaceReduction::identity(cfg.n_tx)
    };
    let j = red.dim();
    let u = &red.basis;
    let fim = FimOperator::new(targets, &cfg.tx(), &cfg.rx(), cfg)?;
    let mut m = Model::new();
    let x = m.herm(j);
    m.psd(&x);
    m.le(x.trace().add_const(-cfg.power));
    if gamma > 0.0 {
        for h in &channels.vectors {
            let hr = u.adjoint() * h;
            m.ge(x.linear(&(&hr * hr.adjoint())).add_const(-gamma));
        }
    }
    let scale = set_crb2_objective(&mut m, &fim, &AffineHerm::mapped(&x, u), cfg.power)?;
    let sol = m.solve(&opts.sdp);
    if sol.report.status == SolveStatus::Infeasible {
        return Ok(P2Solution {
            point: TradeoffPoint::infeasible(2, "optimal_cov", cfg.rate_threshold, started),
            sdp_objective: f64::INFINITY,
            reduced_dim: j,
            report: sol.report,
        });
    }
    if !sol.report.is_usable(&opts.sdp, 1e3) {
        return Err(Error::Solver(format!("Scenario-II SDP ended with {}", sol.report.status)));
    }
    let s = psd_project(&red.lift(&x.value(&sol.x)));
    let cov = TransmitCovariance::new(s)?;
    let point = TradeoffPoint::evaluate(
        &scenario,
        "optimal_cov",
        cfg,
        channels,
        cov,
        sol.report.status,
        sol.report.iterations,
        started,
    )?;
    Ok(P2Solution {
        point,
        sdp_objective: sol.report.objective * scale,
        reduced_dim: j,
        report: sol.report,
    })
}

/// CRB-minimizing corner: isotropic for Scenario I, the
/// rate-free SDP for Scenario II.
pub fn solve_sensing_only(cfg: &SystemConfig<f64>, scenario: &Scenario<f64>) -> Result<TradeoffPoint> {
    let started = Instant::now();
    let none = ChannelSet::from_vectors(vec![]);
    let cfg0 = cfg.with_rate(0.0);
    match scenario {
        Scenario::One => TradeoffPoint::evaluate(
            scenario,
            "sensing_only",
            &cfg0,
            &none,
            TransmitCovariance::isotropic(cfg.n_tx, cfg.power),
            SolveStatus::Optimal,
            0,
            started,
        ),
        Scenario::Two(t) => {
            let mut sol = solve_p2(&cfg0, &none, t, false)?;
            sol.point.method = "sensing_only".into();
            Ok(sol.point)
        }
    }
}

/// Grid and desired pattern for beampattern matching.
#[derive(Debug, Clone, PartialEq)]
pub struct BeampatternSpec {
    /// Radians.
    pub grid: Vec<f64>,
    pub pattern: Vec<f64>,
}

impl BeampatternSpec {
    /// Uniform grid over `[−π/2, π/2]` with `step` radians.
    pub fn grid(step: f64) -> Vec<f64> {
        let half = std::f64::consts::FRAC_PI_2;
        let count = (std::f64::consts::PI / step).round() as usize;
        (0..=count).map(|i| -half + i as f64 * step).collect()
    }

    pub fn flat(step: f64) -> Self {
        let grid = Self::grid(step);
        let pattern = vec![1.0; grid.len()];
        Self { grid, pattern }
    }

    /// Unit response within `±width` of every target angle, zero elsewhere.
    pub fn targets(step: f64, angles: &[f64], width: f64) -> Self {
        let grid = Self::grid(step);
        let pattern = grid
            .iter()
            .map(|g| {
                if angles.iter().any(|a| (g - a).abs() <= width + 1e-12) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Self { grid, pattern }
    }

    /// `a^H(θ) S a(θ)` on the grid.
    pub fn evaluate(&self, s: &CMat<f64>) -> Vec<f64> {
        let tx = crate::model::ArrayManifold::new(s.nrows());
        self.grid
            .iter()
            .map(|&th| quad_form(s, &tx.steering_unchecked(th)))
            .collect()
    }

    /// `Σ |η q_i − a_i^H S a_i|²`.
    pub fn mismatch(&self, s: &CMat<f64>, eta: f64) -> f64 {
        self.evaluate(s)
            .iter()
            .zip(&self.pattern)
            .map(|(v, q)| (eta * q - v).powi(2))
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct BeampatternSolution {
    pub covariance: TransmitCovariance<f64>,
    pub eta: f64,
    pub mismatch: f64,
    pub report: SolveReport,
}

/// Least-squares beampattern matching under the rate and power constraints.
pub fn solve_beampattern(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    spec: &BeampatternSpec,
) -> Result<BeampatternSolution> {
    solve_beampattern_with(cfg, channels, spec, &CovOptions::default())
}

pub fn solve_beampattern_with(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    spec: &BeampatternSpec,
    opts: &CovOptions,
) -> Result<BeampatternSolution> {
    if spec.grid.len() != spec.pattern.len() || spec.grid.is_empty() {
        return Err(Error::Config("beampattern grid and pattern lengths differ".into()));
    }
    let n = cfg.n_tx;
    let gamma = cfg.gamma();
    if !channels.is_empty() && gamma > 0.0 {
        let cap = solve_capacity_with(cfg, channels, opts)?;
        if gamma > cap.t_star * (1.0 + opts.feas_tol) {
            return Err(Error::Infeasible(format!(
                "rate {} exceeds the capacity {}",
                cfg.rate_threshold, cap.r_max
            )));
        }
    }
    // The mismatch is homogeneous of degree two in (S, η), so with an active
    // rate constraint the optimum sits at the smallest scaling the users
    // allow; a pattern matched exactly leaves a whole face of optima and the
    // interior-point solution lands inside it. Without a rate constraint the
    // budget is spent in full instead of collapsing to S = 0.
    let rate_active = !channels.is_empty() && gamma > 0.0;
    let tx = cfg.tx();
    let build = || {
        let mut m = Model::new();
        let s = m.herm(n);
        let eta = m.scalar();
        let nv = m.n_vars();
        // residual r_i = η q_i − a_i^H S a_i = c_iᵀ z over z = (S coords, η)
        let mut q = DMatrix::<f64>::zeros(nv, nv);
        for (th, qi) in spec.grid.iter().zip(&spec.pattern) {
            let a = tx.steering_unchecked(*th);
            let mut c = DVector::<f64>::zeros(nv);
            for (i, v) in s.linear(&(&a * a.adjoint())).terms {
                c[i] -= v;
            }
            c[eta] += qi;
            q.ger(1.0, &c, &c, 1.0);
        }
        let eig = crate::linalg::SymmetricEig::new(&q);
        let top = eig.values.max().max(f64::MIN_POSITIVE);
        let rows: Vec<usize> = (0..nv).filter(|&i| eig.values[i] > 1e-12 * top).collect();
        let r = rows.len();
        let u = m.scalar();
        let mut l = Lmi::new(r + 1);
        l.scalar(u, 0, 0, 1.0);
        l.constant_diag(1, &CMat::identity(r, r));
        for (row, &e) in rows.iter().enumerate() {
            let w = eig.values[e].sqrt();
            for i in 0..nv {
                let coef = w * eig.vectors[(i, e)];
                if coef.abs() > 1e-14 * w {
                    l.scalar(i, 0, row + 1, coef);
                }
            }
        }
        m.lmi(l);
        m.psd(&s);
        if rate_active {
            m.le(s.trace().add_const(-cfg.power));
            for h in &channels.vectors {
                m.ge(s.linear(&(h * h.adjoint())).add_const(-gamma));
            }
        } else {
            m.eq(s.trace().add_const(-cfg.power));
        }
        m.minimize(LinExpr::var(u));
        (m, s, eta)
    };
    let run = || -> Result<(CMat<f64>, f64, SolveReport)> {
        let (m, s, eta) = build();
        let sol = m.solve(&opts.sdp);
        if sol.report.status == SolveStatus::Infeasible {
            return Err(Error::Infeasible("beampattern SDP".into()));
        }
        if !sol.report.is_usable(&opts.sdp, 1e3) {
            return Err(Error::Solver(format!("beampattern SDP ended with {}", sol.report.status)));
        }
        Ok((psd_project(&s.value(&sol.x)), sol.x[eta], sol.report))
    };
    let (sm, eta_v, report) = run()?;
    let cov = TransmitCovariance::new(sm)?;
    Ok(BeampatternSolution {
        mismatch: spec.mismatch(cov.matrix(), eta_v),
        covariance: cov,
        eta: eta_v,
        report,
    })
}

/// Evaluates the isotropic design as a tradeoff point.
pub fn isotropic_point(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    scenario: &Scenario<f64>,
) -> Result<TradeoffPoint> {
    let started = Instant::now();
    TradeoffPoint::evaluate(
        scenario,
        "isotropic",
        cfg,
        channels,
        TransmitCovariance::isotropic(cfg.n_tx, cfg.power),
        SolveStatus::Optimal,
        0,
        started,
    )
}

/// Scenario-I CRB of a covariance; re-exported for callers that only hold
/// the matrix.
pub fn crb1_of(cov: &TransmitCovariance<f64>, cfg: &SystemConfig<f64>) -> f64 {
    crb_scenario1(cov, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_channels, ChannelModel, RandomSource};
    use approx::assert_relative_eq;

    fn cfg(n: usize, k: usize, p: f64, rate: f64) -> SystemConfig<f64> {
        SystemConfig::new(n, n, k, 1, p, 1.0, 1.0, 64, rate).unwrap()
    }

    #[test]
    fn inner_minimizer_of_scaled_identity() {
        let none = ChannelSet::from_vectors(vec![]);
        let inner = inner_minimizer(&DualPoint::new(4.0, vec![]), &none, 2).unwrap();
        assert!((inner.covariance - CMat::<f64>::identity(2, 2) * Complex64::from(0.5)).norm() < 1e-12);
    }

    #[test]
    fn inner_minimizer_flags_null_direction() {
        // A = diag(4, 0) via λ = 4, μ = 4, h = e₂
        let mut h = CVec::<f64>::zeros(2);
        h[1] = Complex64::new(1.0, 0.0);
        let ch = ChannelSet::from_vectors(vec![h]);
        let inner = inner_minimizer(&DualPoint::new(4.0, vec![4.0]), &ch, 2).unwrap();
        assert_eq!(inner.unbounded.len(), 1);
        assert_relative_eq!(inner.covariance[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert!(inner.unbounded[0][1].norm() > 0.999);
    }

    #[test]
    fn indefinite_dual_point_rejected() {
        let mut h = CVec::<f64>::zeros(2);
        h[0] = Complex64::new(1.0, 0.0);
        let ch = ChannelSet::from_vectors(vec![h]);
        assert!(matches!(
            inner_minimizer(&DualPoint::new(1.0, vec![3.0]), &ch, 2),
            Err(Error::DualInfeasible(_))
        ));
    }

    #[test]
    fn sensing_only_dual_is_isotropic() {
        let c = cfg(10, 0, 10.0, 0.0);
        let sol = solve_p1(&c, &ChannelSet::from_vectors(vec![])).unwrap();
        assert_relative_eq!(sol.dual.lambda, 1.0, max_relative = 1e-6);
        assert_relative_eq!(sol.point.crb, 1.5625, max_relative = 1e-6);
    }

    #[test]
    fn subgradient_without_users() {
        let c = cfg(3, 0, 3.0, 0.0);
        let pt = DualPoint::new(1.0, vec![]);
        let none = ChannelSet::from_vectors(vec![]);
        let s = inner_minimizer(&pt, &none, 3).unwrap().covariance;
        let cuts = dual_subgradients(&pt, &s, &c, &none);
        assert_eq!(cuts.objective.len(), 1);
        assert_relative_eq!(cuts.objective[0], 3.0 - 3.0, epsilon = 1e-12);
    }

    #[test]
    fn single_user_mrt_capacity() {
        let c = cfg(4, 1, 2.0, 0.0);
        let ch = generate_channels(&c, &ChannelModel::Rayleigh, &RandomSource::new(4)).unwrap();
        let cap = solve_capacity(&c, &ch).unwrap();
        let h = &ch.vectors[0];
        assert_relative_eq!(cap.t_star, 2.0 * h.norm_squared(), max_relative = 1e-6);
        assert_eq!(cap.rank, 1);
    }

    #[test]
    fn dual_matches_schur_lift() {
        let c = cfg(4, 2, 10.0, 2.0);
        let ch = generate_channels(&c, &ChannelModel::Rayleigh, &RandomSource::new(21)).unwrap();
        let sol = solve_p1(&c, &ch).unwrap();
        let (_, obj, _) = solve_p1_sdp(&c, &ch, &CovOptions::default()).unwrap();
        assert!(
            (sol.primal_objective - obj).abs() <= 1e-3 * obj,
            "{} vs {}",
            sol.primal_objective,
            obj
        );
    }

    #[test]
    fn flat_beampattern_is_isotropic() {
        let c = cfg(6, 0, 10.0, 0.0);
        let spec = BeampatternSpec::flat(std::f64::consts::PI / 200.0);
        let sol = solve_beampattern(&c, &ChannelSet::from_vectors(vec![]), &spec).unwrap();
        let iso = CMat::<f64>::identity(6, 6) * Complex64::from(10.0 / 6.0);
        assert!((sol.covariance.matrix() - iso).norm() < 1e-3, "{}", sol.covariance.matrix());
    }

    #[test]
    fn flat_beampattern_with_users_matches_exactly() {
        let c = cfg(6, 3, 10.0, 1.0);
        let ch = generate_channels(&c, &ChannelModel::Rayleigh, &RandomSource::new(4)).unwrap();
        let spec = BeampatternSpec::flat(std::f64::consts::PI / 200.0);
        let sol = solve_beampattern(&c, &ch, &spec).unwrap();
        let tr = sol.covariance.trace();
        assert!(tr <= c.power * (1.0 + 1e-6));
        let pattern = spec.evaluate(sol.covariance.matrix());
        assert!(pattern.iter().all(|v| (v - tr).abs() < 1e-3 * tr));
        let snr = crate::metrics::user_snr(&sol.covariance, &ch, c.noise_comm);
        assert!(snr.iter().all(|&g| g >= c.gamma() * (1.0 - 1e-5)));
    }

    #[test]
    fn target_beampattern_peaks_in_bands() {
        let c = cfg(10, 2, 10.0, 0.5);
        let ch = generate_channels(&c, &ChannelModel::Rayleigh, &RandomSource::new(8)).unwrap();
        let (a, w) = (30f64.to_radians(), 5f64.to_radians());
        let spec = BeampatternSpec::targets(std::f64::consts::PI / 200.0, &[-a, a], w);
        let sol = solve_beampattern(&c, &ch, &spec).unwrap();
        let pattern = spec.evaluate(sol.covariance.matrix());
        let (imax, _) = pattern.iter().enumerate().fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert!((spec.grid[imax].abs() - a).abs() <= w + 1e-9, "peak at {}", spec.grid[imax].to_degrees());
        assert!(sol.covariance.trace() <= c.power * (1.0 + 1e-6));
        let snr = crate::metrics::user_snr(&sol.covariance, &ch, c.noise_comm);
        assert!(snr.iter().all(|&g| g >= c.gamma() * (1.0 - 1e-5)));
    }
}
