//! Joint information and sensing beamforming by successive convex
//! approximation, with SDR initialization.
//!
//! The transmit covariance is `S_x = S_sen + w w^H`. Each SCA step replaces
//! `|h_k^H w|²` by its tangent at the current `w`, which is a global lower
//! bound, so every iterate stays feasible and the objective never increases.

use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use crate::covariance_opt::{set_crb2_objective, solve_capacity_with, CovOptions, TradeoffPoint};
use crate::error::{Error, Result};
use crate::linalg::{psd_project, psd_sqrt, HermitianEig};
use crate::metrics::{Scenario, TransmitCovariance};
use crate::model::{circular_normal_vec, ChannelSet, SystemConfig};
use crate::scalar::{CMat, CVec};
use crate::solver::builder::HermCoord;
use crate::solver::{AffineHerm, CVecVar, HermVar, LinExpr, Lmi, Model, SdpOptions, SolveStatus};

/// Whether users can subtract the known sensing waveform before decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interference {
    Cancelled,
    Uncancelled,
}

impl Interference {
    pub fn method_tag(self) -> &'static str {
        match self {
            Interference::Cancelled => "joint_bf_cancel",
            Interference::Uncancelled => "joint_bf_nocancel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingDesign {
    pub info_beam: CVec<f64>,
    pub sensing_cov: CMat<f64>,
}

impl BeamformingDesign {
    pub fn total_covariance(&self) -> CMat<f64> {
        &self.sensing_cov + &self.info_beam * self.info_beam.adjoint()
    }

    pub fn power(&self) -> f64 {
        crate::linalg::trace_re(&self.sensing_cov) + self.info_beam.norm_squared()
    }

    pub fn sensing_rank(&self) -> usize {
        HermitianEig::new(&self.sensing_cov).rank(1e-7)
    }

    /// SNR of each user, with or without the sensing interference.
    pub fn user_sinr(&self, channels: &ChannelSet<f64>, noise: f64, mode: Interference) -> Vec<f64> {
        channels
            .vectors
            .iter()
            .map(|h| {
                let sig = h.dotc(&self.info_beam).norm_sqr();
                match mode {
                    Interference::Cancelled => sig / noise,
                    Interference::Uncancelled => {
                        sig / (crate::linalg::quad_form(&self.sensing_cov, h) + noise)
                    }
                }
            })
            .collect()
    }

    pub fn rate(&self, channels: &ChannelSet<f64>, noise: f64, mode: Interference) -> f64 {
        if channels.is_empty() {
            return f64::INFINITY;
        }
        let worst = self
            .user_sinr(channels, noise, mode)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        (1.0 + worst).log2()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScaTrace {
    /// Accepted objective values, starting with the first subproblem.
    pub objective: Vec<f64>,
    /// Largest constraint violation of each accepted iterate.
    pub residual: Vec<f64>,
    pub status: Vec<SolveStatus>,
}

impl ScaTrace {
    pub fn iterations(&self) -> usize {
        self.objective.len()
    }

    pub fn final_objective(&self) -> f64 {
        self.objective.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn is_monotone(&self, slack: f64) -> bool {
        self.objective
            .windows(2)
            .all(|w| w[1] <= w[0] + slack * (1.0 + w[0].abs()))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "objective", "max_residual"])?;
        for (i, (f, r)) in self.objective.iter().zip(&self.residual).enumerate() {
            w.write_record([i.to_string(), f.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaOptions {
    /// Relative objective change that ends the loop.
    pub tol: f64,
    pub max_iter: usize,
    /// Gaussian randomization candidates for the SDR start.
    pub n_rand: usize,
    pub sdp: SdpOptions,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 50,
            n_rand: 1000,
            sdp: SdpOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdrInit {
    pub beam: CVec<f64>,
    /// Worst-user `|h_k^H w|²` of the full-power candidate.
    pub min_gain: f64,
    /// Upper bound from the relaxation.
    pub sdp_bound: f64,
    pub feasible: bool,
}

/// Max-min SNR relaxation followed by Gaussian randomization. The returned
/// beam is the best candidate scaled to full power.
pub fn init_sdr_multicast<R: Rng + ?Sized>(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    rng: &mut R,
    n_rand: usize,
) -> Result<SdrInit> {
    let cap = solve_capacity_with(cfg, channels, &CovOptions::default())?;
    let min_gain = |w: &CVec<f64>| {
        channels
            .vectors
            .iter()
            .map(|h| h.dotc(w).norm_sqr())
            .fold(f64::INFINITY, f64::min)
    };
    let to_power = |w: CVec<f64>| {
        let n = w.norm();
        if n > 0.0 {
            w * Complex64::from(cfg.power.sqrt() / n)
        } else {
            w
        }
    };
    let eig = cap.covariance.eig();
    let n = cfg.n_tx;
    let principal = to_power(eig.vectors.column(n - 1).into_owned());
    let mut best = (min_gain(&principal), principal);
    if cap.rank > 1 {
        let root = psd_sqrt(cap.covariance.matrix());
        for _ in 0..n_rand {
            let u: CVec<f64> = circular_normal_vec(n, rng);
            let cand = to_power(&root * u);
            let g = min_gain(&cand);
            if g > best.0 {
                best = (g, cand);
            }
        }
    }
    Ok(SdrInit {
        feasible: best.0 >= cfg.gamma(),
        beam: best.1,
        min_gain: best.0,
        sdp_bound: cap.t_star,
    })
}

/// Feasibility phase: maximizes the worst linearized `|h_k^H w|²` under
/// `‖w‖² ≤ P` until it exceeds `target`. Returns `None` when it stalls short.
pub fn rate_repair(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    start: &CVec<f64>,
    target: f64,
    opts: &ScaOptions,
) -> Option<CVec<f64>> {
    let n = cfg.n_tx;
    let mut w0 = start.clone();
    let mut last = f64::NEG_INFINITY;
    for _ in 0..opts.max_iter {
        let mut m = Model::new();
        let w = m.cvec(n);
        let t = m.scalar();
        // ‖w‖² ≤ P as [[P I... ]]: [[1, w^H], [w, P I]] ⪰ 0
        let mut l = Lmi::new(n + 1);
        l.constant_diag(0, &(CMat::identity(n, n) * Complex64::from(cfg.power)));
        l.constant_diag(n, &CMat::identity(1, 1));
        l.cvec_column(&w, 0, n);
        m.lmi(l);
        for h in &channels.vectors {
            m.ge(tangent(&w, h, &w0).plus(&LinExpr::var(t).scale(-1.0)));
        }
        m.minimize(LinExpr::var(t).scale(-1.0));
        let sol = m.solve(&opts.sdp);
        if !sol.report.is_usable(&opts.sdp, 1e3) {
            return None;
        }
        w0 = w.value(&sol.x);
        let g = channels
            .vectors
            .iter()
            .map(|h| h.dotc(&w0).norm_sqr())
            .fold(f64::INFINITY, f64::min);
        if g >= target {
            return Some(w0);
        }
        if g <= last * (1.0 + opts.tol) {
            return None;
        }
        last = g;
    }
    None
}

/// `2 Re(w^H h h^H w0) − |h^H w0|²`, the tangent of `|h^H w|²` at `w0`.
fn tangent(w: &CVecVar, h: &CVec<f64>, w0: &CVec<f64>) -> LinExpr {
    let hw0 = h.dotc(w0);
    let a = h * hw0;
    w.re_inner(&a).scale(2.0).add_const(-hw0.norm_sqr())
}

/// One SCA subproblem around `w0`; returns `(S_x, w)`.
///
/// With cancellation the variables are `(S_x, w)` tied by
/// `[[S_x, w], [w^H, 1]] ⪰ 0`. Without it they are `(S_sen, w)`, the
/// constraint `|h^H w|² ≥ γ (h^H S_sen h + σ²)` gets the tangent on its left
/// side, and the objective sees `S_sen` plus the tangent of `w w^H`, which
/// lies below `w w^H` and so only overestimates the CRB.
fn sca_step(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    scenario: &Scenario<f64>,
    mode: Interference,
    w0: &CVec<f64>,
    opts: &ScaOptions,
) -> Result<Option<(CMat<f64>, CVec<f64>, SolveStatus)>> {
    let n = cfg.n_tx;
    let mut m = Model::new();
    let s: HermVar = m.herm(n);
    let w = m.cvec(n);
    let gamma = cfg.gamma();
    let mut cov = AffineHerm::of(&s);
    match mode {
        Interference::Cancelled => {
            let mut l = Lmi::new(n + 1);
            l.herm(&s, 0);
            l.constant_diag(n, &CMat::identity(1, 1));
            l.cvec_column(&w, 0, n);
            m.lmi(l);
            m.le(s.trace().add_const(-cfg.power));
            if gamma > 0.0 {
                for h in &channels.vectors {
                    m.ge(tangent(&w, h, w0).add_const(-gamma));
                }
            }
        }
        Interference::Uncancelled => {
            m.psd(&s);
            // [[P − tr S_sen, w^H], [w, I]] ⪰ 0  ⇔  tr S_sen + ‖w‖² ≤ P
            let mut l = Lmi::new(n + 1);
            l.constant_diag(0, &CMat::identity(n, n));
            l.constant[(n, n)] = Complex64::from(cfg.power);
            for (i, c) in s.coords() {
                if let HermCoord::Diag(_) = c {
                    l.scalar(i, n, n, -1.0);
                }
            }
            l.cvec_column(&w, 0, n);
            m.lmi(l);
            let snr = gamma / cfg.noise_comm;
            if gamma > 0.0 {
                for h in &channels.vectors {
                    let rhs = s.linear(&(h * h.adjoint())).add_const(cfg.noise_comm).scale(-snr);
                    m.ge(tangent(&w, h, w0).plus(&rhs));
                }
            }
            cov.add_outer_tangent(&w, w0);
        }
    }
    add_objective(&mut m, &cov, cfg, scenario)?;
    let sol = m.solve(&opts.sdp);
    match sol.report.status {
        SolveStatus::Infeasible => return Ok(None),
        _ if !sol.report.is_primal_usable(&opts.sdp) => {
            return Err(Error::Solver(format!("SCA subproblem ended with {}", sol.report.status)))
        }
        _ => {}
    }
    let wv = w.value(&sol.x);
    let sx = match mode {
        Interference::Cancelled => s.value(&sol.x),
        Interference::Uncancelled => psd_project(&s.value(&sol.x)) + &wv * wv.adjoint(),
    };
    Ok(Some((sx, wv, SolveStatus::Optimal)))
}

/// Adds the Schur-lifted sensing objective of the affine covariance `cov`.
fn add_objective(m: &mut Model, cov: &AffineHerm, cfg: &SystemConfig<f64>, scenario: &Scenario<f64>) -> Result<()> {
    let n = cfg.n_tx;
    match scenario {
        Scenario::One => {
            let t = m.herm(n);
            let mut l = Lmi::new(2 * n);
            l.herm(&t, 0);
            l.affine(cov, n);
            l.constant_offdiag(0, n, &CMat::identity(n, n));
            m.lmi(l);
            m.minimize(t.trace());
            Ok(())
        }
        Scenario::Two(targets) => {
            let fim = crate::metrics::FimOperator::new(targets, &cfg.tx(), &cfg.rx(), cfg)?;
            set_crb2_objective(m, &fim, cov, cfg.power)?;
            Ok(())
        }
    }
}

/// Splits `S_x` into `(w, S_sen)` and nudges the pair back onto the exact
/// (non-linearized) constraints when solver tolerance left it just outside.
fn finalize(
    s: &CMat<f64>,
    w: &CVec<f64>,
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    mode: Interference,
) -> BeamformingDesign {
    let mut sen = psd_project(&(s - w * w.adjoint()));
    let mut beam = w.clone();
    let gamma = cfg.gamma();
    if gamma > 0.0 && !channels.is_empty() {
        let design = BeamformingDesign {
            info_beam: beam.clone(),
            sensing_cov: sen.clone(),
        };
        let worst = design
            .user_sinr(channels, cfg.noise_comm, mode)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let need = gamma / cfg.noise_comm;
        if worst < need && worst > 0.0 {
            beam *= Complex64::from((need / worst).sqrt());
        }
    }
    let over = crate::linalg::trace_re(&sen) + beam.norm_squared() - cfg.power;
    if over > 0.0 {
        let ts = crate::linalg::trace_re(&sen);
        if ts > 0.0 {
            sen *= Complex64::from(((ts - over) / ts).max(0.0));
        }
    }
    BeamformingDesign {
        info_beam: beam,
        sensing_cov: sen,
    }
}

fn max_violation(d: &BeamformingDesign, cfg: &SystemConfig<f64>, channels: &ChannelSet<f64>, mode: Interference) -> f64 {
    let need = cfg.gamma() / cfg.noise_comm;
    let mut v = (d.power() - cfg.power).max(0.0);
    if need > 0.0 {
        for s in d.user_sinr(channels, cfg.noise_comm, mode) {
            v = v.max(need - s);
        }
    }
    v.max(-HermitianEig::new(&d.sensing_cov).min())
}

/// SCA loop shared by every variant.
pub fn sca_run(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    scenario: &Scenario<f64>,
    mode: Interference,
    init: &CVec<f64>,
    opts: &ScaOptions,
) -> Result<(BeamformingDesign, ScaTrace)> {
    if init.len() != cfg.n_tx {
        return Err(Error::Shape(format!("initial beam of length {} for {} antennas", init.len(), cfg.n_tx)));
    }
    let mut trace = ScaTrace::default();
    let mut w0 = init.clone();
    let mut best: Option<BeamformingDesign> = None;
    for _ in 0..opts.max_iter {
        let Some((s, w, status)) = sca_step(cfg, channels, scenario, mode, &w0, opts)? else {
            if best.is_none() {
                trace.status.push(SolveStatus::Infeasible);
                return Err(Error::Infeasible("SCA subproblem at the initial point".into()));
            }
            break;
        };
        let design = finalize(&s, &w, cfg, channels, mode);
        let cov = TransmitCovariance::projected(&design.total_covariance());
        let f = scenario.crb(&cov, cfg)?;
        let prev = trace.final_objective();
        if !trace.objective.is_empty() && f > prev {
            // solver noise at the fixed point; keep the previous iterate
            if f > prev * (1.0 + 1e-6) {
                trace.status.push(SolveStatus::NumericalFailure);
            }
            break;
        }
        trace.residual.push(max_violation(&design, cfg, channels, mode));
        trace.objective.push(f);
        trace.status.push(status);
        best = Some(design);
        w0 = w;
        if prev.is_finite() && (prev - f) <= opts.tol * prev.abs() {
            break;
        }
    }
    let design = best.ok_or_else(|| Error::Solver("SCA produced no iterate".into()))?;
    Ok((design, trace))
}

pub fn sca_p3(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    init: &CVec<f64>,
    opts: &ScaOptions,
) -> Result<(BeamformingDesign, ScaTrace)> {
    sca_run(cfg, channels, &Scenario::One, Interference::Cancelled, init, opts)
}

pub fn sca_p4(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    targets: &crate::model::TargetSet<f64>,
    init: &CVec<f64>,
    opts: &ScaOptions,
) -> Result<(BeamformingDesign, ScaTrace)> {
    sca_run(cfg, channels, &Scenario::Two(targets.clone()), Interference::Cancelled, init, opts)
}

pub fn sca_no_cancellation(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    scenario: &Scenario<f64>,
    init: &CVec<f64>,
    opts: &ScaOptions,
) -> Result<(BeamformingDesign, ScaTrace)> {
    sca_run(cfg, channels, scenario, Interference::Uncancelled, init, opts)
}

/// Starting beam with slack in every rate constraint, so that the first
/// subproblem has a full-rank feasible covariance.
fn starting_beams<R: Rng + ?Sized>(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    mode: Interference,
    rng: &mut R,
    opts: &ScaOptions,
) -> Result<Option<Vec<CVec<f64>>>> {
    let n = cfg.n_tx;
    let gamma = cfg.gamma();
    if channels.is_empty() || gamma == 0.0 {
        return Ok(Some(vec![CVec::zeros(n)]));
    }
    let init = init_sdr_multicast(cfg, channels, rng, opts.n_rand)?;
    if init.sdp_bound < gamma {
        return Ok(None);
    }
    let beam = if init.feasible && init.min_gain > gamma {
        init.beam
    } else {
        match rate_repair(cfg, channels, &init.beam, gamma * (1.0 + 1e-3), opts) {
            Some(w) => w,
            None => return Ok(None),
        }
    };
    Ok(Some(scaled_starts(cfg, channels, mode, &beam)))
}

/// Rescales a feasible beam direction so the spare power is split between
/// the beam and the sensing part.
fn scaled_starts(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    mode: Interference,
    beam: &CVec<f64>,
) -> Vec<CVec<f64>> {
    let n = cfg.n_tx;
    let gamma = cfg.gamma();
    let gain = channels
        .vectors
        .iter()
        .map(|h| h.dotc(beam).norm_sqr())
        .fold(f64::INFINITY, f64::min);
    let full = cfg.power / beam.norm_squared();
    let needed = gamma / gain;
    // Uncancelled users see the leftover power unless it fits in the null
    // space of the channels.
    let spans = channels.matrix(n).rank(1e-9) >= n;
    let needed = match mode {
        Interference::Uncancelled if spans => {
            let hmax = channels.vectors.iter().map(|h| h.norm_squared()).fold(0.0, f64::max);
            let iso = 0.5 * cfg.power / n as f64;
            needed * (1.0 + iso * hmax / cfg.noise_comm)
        }
        _ => needed,
    };
    // The uncancelled SCA crawls from tight starts, so it gets a second one.
    let splits: &[f64] = match mode {
        Interference::Cancelled => &[0.5],
        Interference::Uncancelled => &[0.5, 0.9],
    };
    splits
        .iter()
        .map(|f| {
            let c = if needed < full { needed + f * (full - needed) } else { full };
            beam * Complex64::from(c.sqrt())
        })
        .collect()
}

/// Outcome of a full joint-beamforming design.
#[derive(Debug, Clone)]
pub struct BfOutcome {
    pub design: BeamformingDesign,
    pub trace: ScaTrace,
    pub point: TradeoffPoint,
}

/// SDR start, optional rate repair, then SCA. The run is also restarted
/// from the beam of `warm` and the best result is kept. With cancellation
/// the warm beam is used as is (a no-cancellation design is feasible there);
/// without it the warm beam only supplies a direction.
pub fn design_joint_bf<R: Rng + ?Sized>(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    scenario: &Scenario<f64>,
    mode: Interference,
    warm: Option<&BeamformingDesign>,
    rng: &mut R,
    opts: &ScaOptions,
) -> Result<BfOutcome> {
    let started = Instant::now();
    let tag = mode.method_tag();
    let Some(starts) = starting_beams(cfg, channels, mode, rng, opts)? else {
        return Ok(BfOutcome {
            design: BeamformingDesign {
                info_beam: CVec::zeros(cfg.n_tx),
                sensing_cov: CMat::zeros(cfg.n_tx, cfg.n_tx),
            },
            trace: ScaTrace {
                status: vec![SolveStatus::Infeasible],
                ..Default::default()
            },
            point: TradeoffPoint::infeasible(scenario.id(), tag, cfg.rate_threshold, started),
        });
    };
    let mut runs: Vec<_> = starts
        .iter()
        .map(|w| sca_run(cfg, channels, scenario, mode, w, opts))
        .collect();
    if let Some(wd) = warm {
        let beams = match mode {
            Interference::Cancelled => vec![wd.info_beam.clone()],
            Interference::Uncancelled if wd.info_beam.norm() > 0.0 => {
                scaled_starts(cfg, channels, mode, &wd.info_beam)
            }
            Interference::Uncancelled => Vec::new(),
        };
        runs.extend(beams.iter().map(|w| sca_run(cfg, channels, scenario, mode, w, opts)));
    }
    // ties go to the earliest start
    let best = runs.into_iter().filter_map(|r| r.ok()).fold(None, |acc: Option<(BeamformingDesign, ScaTrace)>, r| match acc {
        Some(a) if a.1.final_objective() <= r.1.final_objective() => Some(a),
        _ => Some(r),
    });
    let Some((design, trace)) = best else {
        let mut point = TradeoffPoint::infeasible(scenario.id(), tag, cfg.rate_threshold, started);
        point.status = SolveStatus::NumericalFailure;
        return Ok(BfOutcome {
            design: BeamformingDesign {
                info_beam: CVec::zeros(cfg.n_tx),
                sensing_cov: CMat::zeros(cfg.n_tx, cfg.n_tx),
            },
            trace: ScaTrace {
                status: vec![SolveStatus::NumericalFailure],
                ..Default::default()
            },
            point,
        });
    };
    let cov = TransmitCovariance::projected(&design.total_covariance());
    let crb = scenario.crb(&cov, cfg)?;
    let status = if trace.status.contains(&SolveStatus::NumericalFailure) {
        SolveStatus::NumericalFailure
    } else if trace.iterations() >= opts.max_iter {
        SolveStatus::MaxIter
    } else {
        SolveStatus::Optimal
    };
    let point = TradeoffPoint {
        scenario: scenario.id(),
        method: tag.to_string(),
        rate_threshold: cfg.rate_threshold,
        achieved_rate: design.rate(channels, cfg.noise_comm, mode),
        crb,
        covariance: Some(cov),
        status,
        iterations: trace.iterations(),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok(BfOutcome { design, trace, point })
}

/// Convenience: linearization lower bound `2Re(w^H h h^H w0) − |h^H w0|²`
/// evaluated at a concrete `w`.
pub fn tangent_value(h: &CVec<f64>, w: &CVec<f64>, w0: &CVec<f64>) -> f64 {
    let hw0 = h.dotc(w0);
    2.0 * (w.dotc(&(h * hw0))).re - hw0.norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance_opt::solve_p1;
    use crate::model::{generate_channels, ChannelModel, RandomSource};
    use approx::assert_relative_eq;

    fn cfg(n: usize, k: usize, p: f64, rate: f64) -> SystemConfig<f64> {
        SystemConfig::new(n, n, k, 1, p, 1.0, 1.0, 64, rate).unwrap()
    }

    #[test]
    fn tangent_is_a_lower_bound() {
        let mut rng = RandomSource::new(3).rng();
        for _ in 0..50 {
            let h: CVec<f64> = circular_normal_vec(4, &mut rng);
            let w: CVec<f64> = circular_normal_vec(4, &mut rng);
            let w0: CVec<f64> = circular_normal_vec(4, &mut rng);
            assert!(tangent_value(&h, &w, &w0) <= h.dotc(&w).norm_sqr() + 1e-12);
            assert_relative_eq!(tangent_value(&h, &w0, &w0), h.dotc(&w0).norm_sqr(), max_relative = 1e-12);
        }
    }

    #[test]
    fn single_user_sdr_is_mrt() {
        let c = cfg(4, 1, 2.0, 1.0);
        let ch = generate_channels(&c, &ChannelModel::Rayleigh, &RandomSource::new(9)).unwrap();
        let mut rng = RandomSource::new(1).rng();
        let init = init_sdr_multicast(&c, &ch, &mut rng, 10).unwrap();
        let h = &ch.vectors[0];
        let mrt = h * Complex64::from(2.0f64.sqrt() / h.norm());
        let phase = mrt.dotc(&init.beam) / mrt.dotc(&init.beam).norm();
        assert!((&init.beam - mrt * phase).norm() < 1e-4);
    }

    #[test]
    fn single_user_p3_close_to_covariance_optimum() {
        let c = cfg(4, 1, 10.0, 3.0);
        let ch = generate_channels(&c, &ChannelModel::Rayleigh, &RandomSource::new(5)).unwrap();
        let opt = solve_p1(&c, &ch).unwrap().point.crb;
        let mut rng = RandomSource::new(2).rng();
        let out = design_joint_bf(&c, &ch, &Scenario::One, Interference::Cancelled, None, &mut rng, &ScaOptions::default())
            .unwrap();
        assert!(out.trace.is_monotone(1e-9));
        assert!(out.point.crb >= opt * (1.0 - 1e-6));
        assert!(out.point.crb <= opt * 1.02, "{} vs {}", out.point.crb, opt);
        assert!(out.point.achieved_rate >= 3.0 - 1e-6);
    }

    #[test]
    fn rate_beyond_full_power_mrt_is_infeasible() {
        let c = cfg(4, 1, 1.0, 1.0);
        let ch = generate_channels(&c, &ChannelModel::Rayleigh, &RandomSource::new(5)).unwrap();
        let r = (1.0 + 1.0 * ch.vectors[0].norm_squared()).log2() + 0.5;
        let c = c.with_rate(r);
        let mut rng = RandomSource::new(2).rng();
        let out = design_joint_bf(&c, &ch, &Scenario::One, Interference::Cancelled, None, &mut rng, &ScaOptions::default())
            .unwrap();
        assert_eq!(out.point.status, SolveStatus::Infeasible);
    }
}
