//! Sweep drivers behind the command-line verbs: CRB-rate tradeoffs, CRB
//! versus power, and estimation RMSE versus power or block length.
//!
//! Every sweep point draws its randomness from a stream derived from the
//! experiment seed and the point's grid index, and rows come back in grid
//! order, so output depends only on the spec.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::beamforming::{design_joint_bf, BfOutcome, Interference, ScaOptions};
use crate::config::{dbm_to_linear, linear_to_db, ExperimentConfig};
use crate::covariance_opt::{
    isotropic_point, solve_beampattern, solve_capacity, solve_p1, solve_p2, solve_sensing_only,
    TradeoffPoint,
};
use crate::error::{Error, Result};
use crate::estimation::{monte_carlo, DesignSource, EstimationRun, GroupValues, MonteCarloOptions};
use crate::metrics::{Scenario, TransmitCovariance};
use crate::model::{generate_channels, ChannelSet, RandomSource, SystemConfig};
use crate::solver::SolveStatus;

pub const SCHEMA_VERSION: u32 = 1;

/// Slack of the dominance chain.
pub const DOMINANCE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    OptimalCov,
    JointBfCancel,
    JointBfNocancel,
    Isotropic,
    Beampattern,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::OptimalCov,
        Method::JointBfCancel,
        Method::JointBfNocancel,
        Method::Isotropic,
        Method::Beampattern,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::OptimalCov => "optimal_cov",
            Method::JointBfCancel => "joint_bf_cancel",
            Method::JointBfNocancel => "joint_bf_nocancel",
            Method::Isotropic => "isotropic",
            Method::Beampattern => "beampattern",
        }
    }

    /// Comma-separated tags, or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        if s.trim() == "all" {
            return Ok(Self::ALL.to_vec());
        }
        let mut out: Vec<Method> = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse())
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// `start:step:stop`, inclusive of `stop` up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub values: Vec<f64>,
}

impl Grid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep grid must be finite and strictly increasing".into()));
        }
        Ok(Self { values })
    }

    pub fn range(start: f64, step: f64, stop: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop >= start) {
            return Err(Error::Config(format!("bad grid {start}:{step}:{stop}")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Self::new((0..n).map(|i| start + i as f64 * step).collect())
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `start:step:stop` or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number `{t}` in grid `{s}`")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            3 => Self::range(num(parts[0])?, num(parts[1])?, num(parts[2])?),
            1 => Self::new(s.split(',').map(num).collect::<Result<_>>()?),
            _ => Err(Error::Config(format!("grid `{s}` is not start:step:stop"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Tradeoff,
    PowerSweep,
    RmseVsPower,
    RmseVsLength,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub scenario: u8,
    pub methods: Vec<Method>,
    pub grid: Grid,
    pub config: ExperimentConfig,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        Grid::new(self.grid.values.clone())?;
        self.config.validate()?;
        self.config.scenario(self.scenario)?;
        if self.kind == ExperimentKind::RmseVsLength
            && self.grid.values.iter().any(|l| *l < 1.0 || l.fract() != 0.0)
        {
            return Err(Error::Config("block lengths must be positive integers".into()));
        }
        Ok(())
    }

    fn source(&self) -> RandomSource {
        RandomSource::new(self.seed)
    }

    /// The channel draw shared by every point of the experiment.
    pub fn channels(&self, cfg: &SystemConfig<f64>) -> Result<ChannelSet<f64>> {
        let source = self.source();
        let model = self.config.channel_model(&source.split(0))?;
        generate_channels(cfg, &model, &source.split(1))
    }

    /// Stream for grid point `idx`.
    fn point_source(&self, idx: usize) -> RandomSource {
        self.source().split(1000 + idx as u64)
    }
}

/// One CSV row of a tradeoff or power sweep.
#[derive(Debug, Clone, Serialize)]
pub struct TradeoffRow {
    pub scenario: u8,
    pub method: String,
    pub rate_threshold: f64,
    pub achieved_rate: f64,
    pub crb: f64,
    pub solver_status: String,
    pub iterations: usize,
    pub wall_ms: f64,
    pub power_dbm: f64,
    pub crb_db: f64,
}

impl TradeoffRow {
    pub fn from_point(p: &TradeoffPoint, power_dbm: f64) -> Self {
        Self {
            scenario: p.scenario,
            method: p.method.clone(),
            rate_threshold: p.rate_threshold,
            achieved_rate: p.achieved_rate,
            crb: p.crb,
            solver_status: p.status.as_str().to_string(),
            iterations: p.iterations,
            wall_ms: p.wall_ms,
            power_dbm,
            crb_db: linear_to_db(p.crb),
        }
    }

    pub fn is_infeasible(&self) -> bool {
        self.solver_status == SolveStatus::Infeasible.as_str()
    }
}

pub const TRADEOFF_COLUMNS: [&str; 10] = [
    "scenario",
    "method",
    "rate_threshold",
    "achieved_rate",
    "crb",
    "solver_status",
    "iterations",
    "wall_ms",
    "power_dbm",
    "crb_db",
];

#[derive(Debug, Clone, Serialize)]
pub struct TradeoffTable {
    pub schema: u32,
    pub kind: ExperimentKind,
    pub scenario: u8,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub rows: Vec<TradeoffRow>,
    /// Power sweeps only: points where the dominance chain fails.
    pub dominance_violations: Vec<String>,
}

impl TradeoffTable {
    pub fn any_infeasible(&self) -> bool {
        self.rows.iter().any(|r| r.is_infeasible())
    }
}

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.10e}")
    }
}

/// CSV with a fixed column order. Wall-clock times are written only when
/// `timing` is set, so that default output is byte-reproducible.
pub fn write_tradeoff_csv<W: Write>(rows: &[TradeoffRow], timing: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRADEOFF_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.scenario.to_string(),
            r.method.clone(),
            fmt_f64(r.rate_threshold),
            fmt_f64(r.achieved_rate),
            fmt_f64(r.crb),
            r.solver_status.clone(),
            r.iterations.to_string(),
            if timing { format!("{:.3}", r.wall_ms) } else { String::new() },
            fmt_f64(r.power_dbm),
            fmt_f64(r.crb_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Corner of the region where the other metric is optimized alone.
fn corner_points(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    scenario: &Scenario<f64>,
) -> Result<Vec<TradeoffPoint>> {
    let mut out = Vec::new();
    if !channels.is_empty() {
        let started = Instant::now();
        let cap = solve_capacity(cfg, channels)?;
        let mut p = TradeoffPoint::evaluate(
            scenario,
            "corner_capacity",
            &cfg.with_rate(cap.r_max),
            channels,
            cap.covariance.clone(),
            cap.report.status,
            cap.report.iterations,
            started,
        )?;
        p.rate_threshold = cap.r_max;
        out.push(p);
    }
    let started = Instant::now();
    let sensing = solve_sensing_only(cfg, scenario)?;
    if let Some(cov) = sensing.covariance.clone() {
        let p = TradeoffPoint::evaluate(
            scenario,
            "corner_sensing",
            &cfg.with_rate(0.0),
            channels,
            cov,
            sensing.status,
            sensing.iterations,
            started,
        )?;
        out.push(p);
    } else {
        let mut p = sensing;
        p.method = "corner_sensing".into();
        out.push(p);
    }
    Ok(out)
}

/// The CRB-optimal covariance at `cfg`.
pub fn optimal_point(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    scenario: &Scenario<f64>,
) -> Result<TradeoffPoint> {
    match scenario {
        Scenario::One => Ok(solve_p1(cfg, channels)?.point),
        Scenario::Two(t) => Ok(solve_p2(cfg, channels, t, true)?.point),
    }
}

pub fn beampattern_point(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    scenario: &Scenario<f64>,
    config: &ExperimentConfig,
) -> Result<TradeoffPoint> {
    let started = Instant::now();
    match solve_beampattern(cfg, channels, &config.beampattern_spec(scenario)) {
        Ok(sol) => TradeoffPoint::evaluate(
            scenario,
            "beampattern",
            cfg,
            channels,
            sol.covariance,
            sol.report.status,
            sol.report.iterations,
            started,
        ),
        Err(Error::Infeasible(_)) => Ok(TradeoffPoint::infeasible(
            scenario.id(),
            "beampattern",
            cfg.rate_threshold,
            started,
        )),
        Err(e) => Err(e),
    }
}

/// Both joint-beamforming variants. The no-cancellation run also starts from
/// the cancellation beam, and the cancellation run is repeated from the
/// no-cancellation design whenever that one comes out better, since it is
/// feasible for the cancellation problem.
pub fn joint_bf_pair(
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    scenario: &Scenario<f64>,
    source: &RandomSource,
    opts: &ScaOptions,
) -> Result<(BfOutcome, BfOutcome)> {
    let mut rng = source.rng();
    let first = design_joint_bf(cfg, channels, scenario, Interference::Cancelled, None, &mut rng, opts)?;
    let usable = |o: &BfOutcome| o.point.covariance.is_some();
    let warm = usable(&first).then_some(&first.design);
    let nocancel = design_joint_bf(cfg, channels, scenario, Interference::Uncancelled, warm, &mut rng, opts)?;
    let cancel = if usable(&nocancel) && nocancel.point.crb < first.point.crb {
        let rerun = design_joint_bf(
            cfg,
            channels,
            scenario,
            Interference::Cancelled,
            Some(&nocancel.design),
            &mut rng,
            opts,
        )?;
        if rerun.point.crb <= first.point.crb { rerun } else { first }
    } else {
        first
    };
    Ok((cancel, nocancel))
}

/// All requested methods at one configuration, in the order of `methods`.
fn points_at(
    spec: &ExperimentSpec,
    cfg: &SystemConfig<f64>,
    channels: &ChannelSet<f64>,
    scenario: &Scenario<f64>,
    source: &RandomSource,
) -> Result<Vec<TradeoffPoint>> {
    let wants = |m| spec.methods.contains(&m);
    let mut out = Vec::new();
    if wants(Method::OptimalCov) {
        out.push(optimal_point(cfg, channels, scenario)?);
    }
    if wants(Method::JointBfCancel) || wants(Method::JointBfNocancel) {
        let (c, n) = joint_bf_pair(cfg, channels, scenario, source, &spec.config.sca_options())?;
        if wants(Method::JointBfCancel) {
            out.push(c.point);
        }
        if wants(Method::JointBfNocancel) {
            out.push(n.point);
        }
    }
    if wants(Method::Beampattern) {
        out.push(beampattern_point(cfg, channels, scenario, &spec.config)?);
    }
    Ok(out)
}

/// Sweep over the rate threshold. Isotropic transmission contributes one
/// point (its own rate), and both corners of the region are appended.
pub fn run_tradeoff(spec: &ExperimentSpec) -> Result<TradeoffTable> {
    spec.validate()?;
    let base = spec.config.system()?;
    let scenario = spec.config.scenario(spec.scenario)?;
    let channels = spec.channels(&base)?;
    let grid_rows: Vec<Result<Vec<TradeoffPoint>>> = spec
        .grid
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &rate)| points_at(spec, &base.with_rate(rate), &channels, &scenario, &spec.point_source(i)))
        .collect();
    let mut points = Vec::new();
    for r in grid_rows {
        points.extend(r?);
    }
    if spec.methods.contains(&Method::Isotropic) {
        let mut p = isotropic_point(&base, &channels, &scenario)?;
        p.rate_threshold = p.achieved_rate;
        points.push(p);
    }
    points.extend(corner_points(&base, &channels, &scenario)?);
    Ok(TradeoffTable {
        schema: SCHEMA_VERSION,
        kind: ExperimentKind::Tradeoff,
        scenario: spec.scenario,
        seed: spec.seed,
        config: spec.config.clone(),
        rows: points.iter().map(|p| TradeoffRow::from_point(p, spec.config.power_dbm)).collect(),
        dominance_violations: Vec::new(),
    })
}

/// Points where `optimal ≤ cancel ≤ nocancel` fails beyond the slack.
pub fn dominance_violations(rows: &[TradeoffRow]) -> Vec<String> {
    let mut out = Vec::new();
    let mut keys: Vec<(u64, u64)> = rows
        .iter()
        .map(|r| (r.power_dbm.to_bits(), r.rate_threshold.to_bits()))
        .collect();
    keys.dedup();
    for (p, r) in keys {
        let crb = |m: &str| {
            rows.iter()
                .find(|x| x.method == m && x.power_dbm.to_bits() == p && x.rate_threshold.to_bits() == r)
                .filter(|x| !x.is_infeasible() && x.crb.is_finite())
                .map(|x| x.crb)
        };
        let chain = [crb("optimal_cov"), crb("joint_bf_cancel"), crb("joint_bf_nocancel")];
        for w in chain.windows(2) {
            if let (Some(a), Some(b)) = (w[0], w[1]) {
                if a > b * (1.0 + DOMINANCE_SLACK) + DOMINANCE_SLACK * f64::MIN_POSITIVE {
                    out.push(format!(
                        "P = {} dBm, rate {}: {a:e} > {b:e}",
                        f64::from_bits(p),
                        f64::from_bits(r)
                    ));
                }
            }
        }
    }
    out
}

/// CRB of each method versus power (dBm) at the configured rate.
pub fn run_power_sweep(spec: &ExperimentSpec) -> Result<TradeoffTable> {
    spec.validate()?;
    let base = spec.config.system()?;
    let scenario = spec.config.scenario(spec.scenario)?;
    let channels = spec.channels(&base)?;
    let per_point: Vec<Result<Vec<TradeoffRow>>> = spec
        .grid
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &dbm)| {
            let cfg = base.with_power(dbm_to_linear(dbm));
            let mut pts = points_at(spec, &cfg, &channels, &scenario, &spec.point_source(i))?;
            if spec.methods.contains(&Method::Isotropic) {
                let mut p = isotropic_point(&cfg, &channels, &scenario)?;
                if !channels.is_empty() && p.achieved_rate < cfg.rate_threshold - 1e-9 {
                    p.status = SolveStatus::Infeasible;
                }
                pts.push(p);
            }
            Ok(pts.iter().map(|p| TradeoffRow::from_point(p, dbm)).collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    let dominance_violations = dominance_violations(&rows);
    Ok(TradeoffTable {
        schema: SCHEMA_VERSION,
        kind: ExperimentKind::PowerSweep,
        scenario: spec.scenario,
        seed: spec.seed,
        config: spec.config.clone(),
        rows,
        dominance_violations,
    })
}

/// One estimation result of an RMSE study.
#[derive(Debug, Clone, Serialize)]
pub struct RmsePoint {
    pub sweep_var: f64,
    pub method: String,
    pub solver_status: String,
    pub run: Option<EstimationRun>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RmseStudy {
    pub schema: u32,
    pub kind: ExperimentKind,
    pub scenario: u8,
    pub seed: u64,
    pub trials: usize,
    pub config: ExperimentConfig,
    pub points: Vec<RmsePoint>,
}

impl RmseStudy {
    pub fn any_infeasible(&self) -> bool {
        self.points.iter().any(|p| p.run.is_none())
    }

    pub fn find(&self, sweep_var: f64, method: &str) -> Option<&EstimationRun> {
        self.points
            .iter()
            .find(|p| p.sweep_var == sweep_var && p.method == method)
            .and_then(|p| p.run.as_ref())
    }
}

pub const RMSE_COLUMNS: [&str; 12] = [
    "sweep_var",
    "rmse_db",
    "root_crb_theoretical_db",
    "root_crb_actual_db",
    "method",
    "group",
    "rmse",
    "root_crb_theoretical",
    "root_crb_actual",
    "trials",
    "failed",
    "solver_status",
];

fn db20(x: f64) -> f64 {
    20.0 * x.log10()
}

pub fn write_rmse_csv<W: Write>(study: &RmseStudy, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RMSE_COLUMNS)?;
    for p in &study.points {
        let Some(run) = &p.run else {
            w.write_record([
                fmt_f64(p.sweep_var),
                "nan".into(),
                "nan".into(),
                "nan".into(),
                p.method.clone(),
                String::new(),
                "nan".into(),
                "nan".into(),
                "nan".into(),
                "0".into(),
                "0".into(),
                p.solver_status.clone(),
            ])?;
            continue;
        };
        let groups: [(&str, fn(&GroupValues) -> Option<f64>); 3] = [
            ("response", |g| g.response),
            ("angle", |g| g.angle),
            ("amplitude", |g| g.amplitude),
        ];
        for (name, pick) in groups {
            let (Some(rmse), Some(th), Some(ac)) =
                (pick(&run.rmse), pick(&run.root_crb_theoretical), pick(&run.root_crb_actual))
            else {
                continue;
            };
            w.write_record([
                fmt_f64(p.sweep_var),
                fmt_f64(db20(rmse)),
                fmt_f64(db20(th)),
                fmt_f64(db20(ac)),
                p.method.clone(),
                name.to_string(),
                fmt_f64(rmse),
                fmt_f64(th),
                fmt_f64(ac),
                run.trials.to_string(),
                run.failed.to_string(),
                p.solver_status.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Estimation RMSE of the CRB-optimal and beampattern designs over power
/// (dBm) or block length. LS serves Scenario I, CAML Scenario II.
pub fn run_rmse_study(spec: &ExperimentSpec, trials: Option<usize>) -> Result<RmseStudy> {
    spec.validate()?;
    let base = spec.config.system()?;
    let scenario = spec.config.scenario(spec.scenario)?;
    let channels = spec.channels(&base)?;
    let trials = trials.unwrap_or(spec.config.trials);
    let opts = MonteCarloOptions {
        trials,
        grid_points: spec.config.caml_grid,
        ..MonteCarloOptions::default()
    };
    let methods: Vec<Method> = [Method::OptimalCov, Method::Beampattern]
        .into_iter()
        .filter(|m| spec.methods.contains(m))
        .collect();
    if methods.is_empty() {
        return Err(Error::Config("RMSE studies compare optimal_cov and beampattern".into()));
    }
    let mut points = Vec::new();
    for (i, &v) in spec.grid.values.iter().enumerate() {
        let cfg = match spec.kind {
            ExperimentKind::RmseVsLength => base.with_block_len(v as usize),
            _ => base.with_power(dbm_to_linear(v)),
        };
        for (j, &m) in methods.iter().enumerate() {
            let p = match m {
                Method::OptimalCov => optimal_point(&cfg, &channels, &scenario)?,
                _ => beampattern_point(&cfg, &channels, &scenario, &spec.config)?,
            };
            let run = match &p.covariance {
                Some(cov) => {
                    let source = spec.point_source(i).split(j as u64);
                    let mut r = monte_carlo(&DesignSource::Covariance(cov.clone()), &scenario, &cfg, &source, &opts)?;
                    r.records.clear();
                    Some(r)
                }
                None => None,
            };
            points.push(RmsePoint {
                sweep_var: v,
                method: m.tag().to_string(),
                solver_status: p.status.as_str().to_string(),
                run,
            });
        }
    }
    Ok(RmseStudy {
        schema: SCHEMA_VERSION,
        kind: spec.kind,
        scenario: spec.scenario,
        seed: spec.seed,
        trials,
        config: spec.config.clone(),
        points,
    })
}

/// Isotropic-design convenience used by the estimation checks.
pub fn isotropic_design(cfg: &SystemConfig<f64>) -> DesignSource {
    DesignSource::Covariance(TransmitCovariance::isotropic(cfg.n_tx, cfg.power))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parses_ranges_and_lists() {
        let g: Grid = "0:0.5:2".parse().unwrap();
        assert_eq!(g.values, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let g: Grid = "16,32,64".parse().unwrap();
        assert_eq!(g.values, vec![16.0, 32.0, 64.0]);
        assert!("3,2".parse::<Grid>().is_err());
        assert!("0:-1:2".parse::<Grid>().is_err());
    }

    #[test]
    fn method_lists_round_trip() {
        let m = Method::parse_list("isotropic,optimal_cov").unwrap();
        assert_eq!(m, vec![Method::OptimalCov, Method::Isotropic]);
        assert_eq!(Method::parse_list("all").unwrap().len(), 5);
        assert!(Method::parse_list("nope").is_err());
    }

    fn small_spec(kind: ExperimentKind, grid: &str, methods: &str) -> ExperimentSpec {
        let config = ExperimentConfig {
            n_tx: 4,
            n_rx: 4,
            n_users: 2,
            ..ExperimentConfig::default()
        };
        ExperimentSpec {
            kind,
            scenario: 1,
            methods: Method::parse_list(methods).unwrap(),
            grid: grid.parse().unwrap(),
            config,
            seed: 11,
        }
    }

    #[test]
    fn tradeoff_rows_are_reproducible() {
        let spec = small_spec(ExperimentKind::Tradeoff, "0.5:1:2.5", "optimal_cov,isotropic");
        let a = run_tradeoff(&spec).unwrap();
        let b = run_tradeoff(&spec).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_tradeoff_csv(&a.rows, false, &mut x).unwrap();
        write_tradeoff_csv(&b.rows, false, &mut y).unwrap();
        assert_eq!(x, y);
        assert!(a.rows.iter().any(|r| r.method == "corner_capacity"));
        assert!(a.rows.iter().any(|r| r.method == "corner_sensing"));
        assert_eq!(a.rows.iter().filter(|r| r.method == "isotropic").count(), 1);
    }

    #[test]
    fn rates_beyond_capacity_are_kept_as_infeasible() {
        let spec = small_spec(ExperimentKind::Tradeoff, "1,40", "optimal_cov");
        let t = run_tradeoff(&spec).unwrap();
        let row = t.rows.iter().find(|r| r.rate_threshold == 40.0).unwrap();
        assert!(row.is_infeasible());
        assert!(t.any_infeasible());
    }
}
