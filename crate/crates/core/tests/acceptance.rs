//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! before asserting.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use isac_core::config::ExperimentConfig;
use isac_core::covariance_opt::{
    solve_capacity, solve_p1, solve_p1_sdp, solve_sensing_only, CovOptions, P1Solution,
    RANK_REL,
};
use isac_core::estimation::{
    caml_estimate, ls_estimate, match_targets, median_crb_gap, monte_carlo, simulate_echo,
    synthesize_block, AngleGrid, DesignSource, MonteCarloOptions,
};
use isac_core::experiments::{
    joint_bf_pair, optimal_point, run_rmse_study, run_tradeoff, ExperimentKind, ExperimentSpec, Method,
    DOMINANCE_SLACK,
};
use isac_core::linalg::HermitianEig;
use isac_core::metrics::{fisher_information, Scenario, TransmitCovariance};
use isac_core::model::{
    circular_normal_mat, generate_channels, ChannelModel, ChannelSet, RandomSource, SystemConfig, TargetSet,
};
use isac_core::CMat;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

mod common;

/// Written straight to stderr so the line shows without `--nocapture`.
fn report(id: u32, pass: bool, detail: impl AsRef<str>) {
    let line = format!(
        "criterion {id:>2}: {} {}\n",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} failed: {}", detail.as_ref());
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn c01_sensing_only_is_isotropic() {
    let started = Instant::now();
    let cfg = SystemConfig::new(10, 10, 0, 1, 10.0, 1.0, 1.0, 64, 0.0).unwrap();
    let sol = solve_p1(&cfg, &ChannelSet::from_vectors(vec![])).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let cov = sol.point.covariance.unwrap();
    let iso = CMat::<f64>::identity(10, 10);
    let cov_err = (cov.matrix() - &iso).norm() / iso.norm();
    let crb_err = rel(sol.point.crb, 1.5625);
    report(
        1,
        crb_err <= 1e-6 && cov_err <= 1e-6 && elapsed < 1.0,
        format!("CRB {:.9} (rel err {crb_err:.1e}), cov err {cov_err:.1e}, {elapsed:.3} s", sol.point.crb),
    );
}

struct P1Instance {
    cfg: SystemConfig<f64>,
    channels: ChannelSet<f64>,
    sol: P1Solution,
    sdp_objective: f64,
}

/// The twenty seeded Scenario-I instances shared by criteria 2 to 4.
fn p1_instances() -> &'static (Vec<P1Instance>, f64) {
    static CELL: OnceLock<(Vec<P1Instance>, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let started = Instant::now();
        let out = (0..20u64)
            .map(|i| {
                let n = [4, 6, 8][i as usize % 3];
                let k = 1 + (i as usize % 4);
                let base = SystemConfig::new(n, n, k, 1, 10.0, 1.0, 1.0, 64, 0.0).unwrap();
                let channels =
                    generate_channels(&base, &ChannelModel::Rayleigh, &RandomSource::new(200 + i)).unwrap();
                let r_max = solve_capacity(&base, &channels).unwrap().r_max;
                let frac = 0.1 + 0.85 * (i as f64 / 19.0);
                let cfg = base.with_rate(frac * r_max);
                let sol = solve_p1(&cfg, &channels).unwrap();
                let (_, sdp_objective, _) = solve_p1_sdp(&cfg, &channels, &CovOptions::default()).unwrap();
                P1Instance {
                    cfg,
                    channels,
                    sol,
                    sdp_objective,
                }
            })
            .collect();
        (out, started.elapsed().as_secs_f64())
    })
}

#[test]
fn c02_dual_method_matches_schur_lift() {
    let (inst, secs) = p1_instances();
    let worst_obj = inst
        .iter()
        .map(|p| rel(p.sol.primal_objective, p.sdp_objective))
        .fold(0.0, f64::max);
    let worst_viol = inst.iter().map(|p| p.sol.max_violation).fold(0.0, f64::max);
    report(
        2,
        worst_obj <= 1e-3 && worst_viol <= 1e-6 && *secs < 60.0,
        format!("worst objective mismatch {worst_obj:.1e}, worst violation {worst_viol:.1e}, {secs:.1} s"),
    );
}

#[test]
fn c03_strong_duality_and_slackness() {
    let (inst, _) = p1_instances();
    let mut worst_gap = 0.0f64;
    let mut worst_cs = 0.0f64;
    for p in inst {
        let primal = p.sol.primal_objective;
        worst_gap = worst_gap.max((primal - p.sol.dual_objective).abs() / (1.0 + primal.abs()));
        worst_cs = worst_cs.max(p.sol.slackness.iter().fold(0.0, |a, s| a.max(s.abs())));
    }
    report(
        3,
        worst_gap <= 1e-4 && worst_cs <= 1e-5,
        format!("worst scaled duality gap {worst_gap:.1e}, worst slackness {worst_cs:.1e}"),
    );
}

fn numeric_rank(m: &CMat<f64>, rel_tol: f64) -> usize {
    let eig = HermitianEig::new(m);
    let top = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    eig.values.iter().filter(|v| **v > rel_tol * top).count()
}

#[test]
fn c04_minimum_eigenvalue_multiplicity() {
    let (inst, _) = p1_instances();
    let mut ok = true;
    let mut detail = Vec::new();
    for p in inst {
        let cov = p.sol.point.covariance.as_ref().unwrap();
        let eig = cov.eig();
        let top = eig.values.iter().fold(0.0f64, |a, v| a.max(*v));
        let min = eig.values.iter().fold(f64::INFINITY, |a, v| a.min(*v));
        let mult = eig.values.iter().filter(|v| **v - min <= RANK_REL * top).count();
        let mu_top = p.sol.dual.mu.iter().fold(p.sol.dual.lambda, |a, m| a.max(*m));
        let active: Vec<_> = p
            .channels
            .vectors
            .iter()
            .zip(&p.sol.dual.mu)
            .filter(|(_, m)| **m > RANK_REL * mu_top)
            .map(|(h, _)| h.clone())
            .collect();
        let n = p.cfg.n_tx;
        let rank = if active.is_empty() {
            0
        } else {
            {
            let h = ChannelSet::from_vectors(active).matrix(n);
            numeric_rank(&(h.adjoint() * &h), RANK_REL)
        }
        };
        ok &= mult + rank >= n;
        detail.push(format!("{mult}>={}", n - rank));
    }
    report(4, ok, format!("multiplicity vs bound per instance: {}", detail.join(" ")));
}

#[test]
fn c05_fim_matches_finite_differences() {
    let mut worst = 0.0f64;
    for trial in 0..10u64 {
        let mut rng = RandomSource::new(500 + trial).rng();
        let m = 1 + (trial as usize % 2);
        let l = 16;
        let cfg = SystemConfig::new(6, 5, 0, m, 10.0, 1.0, 0.8, l, 0.0).unwrap();
        let angles: Vec<f64> = (0..m).map(|_| rng.random_range(-1.2..1.2)).collect();
        let coeffs: Vec<Complex64> = (0..m)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let targets = TargetSet::new(angles, coeffs).unwrap();
        let x: CMat<f64> = circular_normal_mat(6, l, &mut rng);
        let cov = TransmitCovariance::new(&x * x.adjoint() / Complex64::new(l as f64, 0.0)).unwrap();
        let fim = fisher_information(&cov, &targets, &cfg.tx(), &cfg.rx(), &cfg).unwrap();
        let fd: DMatrix<f64> = common::fd_fim(&targets.params(), &x, &cfg, 1e-5);
        worst = worst.max((&fim.matrix - &fd).norm() / fd.norm());
    }
    let cfg = SystemConfig::new(10, 10, 0, 1, 10.0, 1.0, 1.0, 64, 0.0).unwrap();
    let t = TargetSet::new(vec![0.0], vec![Complex64::new(1.0, 0.0)]).unwrap();
    let fim = fisher_information(&TransmitCovariance::isotropic(10, 10.0), &t, &cfg.tx(), &cfg.rx(), &cfg).unwrap();
    let f22_err = rel(fim.f22[(0, 0)].re, 64.0 * 10.0 * 10.0).max(fim.f22[(0, 0)].im.abs());
    report(
        5,
        worst <= 1e-4 && f22_err <= 1e-9,
        format!("worst FD relative error {worst:.1e}, broadside F22 error {f22_err:.1e}"),
    );
}

fn tradeoff_spec(scenario: u8, grid: Vec<f64>, methods: Vec<Method>) -> ExperimentSpec {
    ExperimentSpec {
        kind: ExperimentKind::Tradeoff,
        scenario,
        methods,
        grid: isac_core::experiments::Grid::new(grid).unwrap(),
        config: ExperimentConfig::default(),
        seed: 7,
    }
}

#[test]
fn c06_tradeoff_geometry() {
    let cfg = ExperimentConfig::default().system().unwrap();
    let probe = tradeoff_spec(1, vec![0.0], vec![Method::OptimalCov]);
    let channels = probe.channels(&cfg).unwrap();
    let cap = solve_capacity(&cfg, &channels).unwrap();
    let grid: Vec<f64> = (0..=10).map(|i| cap.r_max * i as f64 / 10.0).collect();
    let mut ok = true;
    let mut notes = Vec::new();
    for scenario in [1u8, 2] {
        let spec = tradeoff_spec(scenario, grid.clone(), vec![Method::OptimalCov]);
        let table = run_tradeoff(&spec).expect("tradeoff sweep");
        let curve: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r.method == "optimal_cov" && !r.is_infeasible())
            .map(|r| r.crb)
            .collect();
        let monotone = curve.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-6));
        let sc = spec.config.scenario(scenario).unwrap();
        let sensing = solve_sensing_only(&cfg, &sc).unwrap().crb;
        let at_zero = optimal_point(&cfg.with_rate(0.0), &channels, &sc).unwrap();
        let at_max = optimal_point(&cfg.with_rate(cap.r_max), &channels, &sc).unwrap();
        let sensing_err = rel(at_zero.crb, sensing);
        let rate_err = rel(at_max.achieved_rate, cap.r_max);
        ok &= monotone && sensing_err <= 1e-4 && rate_err <= 1e-4 && curve.len() == grid.len();
        notes.push(format!(
            "S{scenario}: {} feasible points monotone={monotone}, sensing corner err {sensing_err:.1e}, capacity corner rate err {rate_err:.1e}",
            curve.len()
        ));
    }
    let corner = run_tradeoff(&tradeoff_spec(1, vec![0.5], vec![Method::OptimalCov])).unwrap();
    let cap_row = corner.rows.iter().find(|r| r.method == "corner_capacity").unwrap();
    let deficient = cap.rank < cfg.n_tx && cap_row.crb.is_infinite();
    ok &= deficient;
    notes.push(format!("capacity rank {} of {}, CRB1 {}", cap.rank, cfg.n_tx, cap_row.crb));
    report(6, ok, notes.join("; "));
}

#[test]
fn c07_method_dominance_and_sca_convergence() {
    let config = ExperimentConfig::default();
    let cfg = config.system().unwrap();
    let probe = tradeoff_spec(1, vec![0.0], vec![Method::OptimalCov]);
    let channels = probe.channels(&cfg).unwrap();
    let r_max = solve_capacity(&cfg, &channels).unwrap().r_max;
    let opts = config.sca_options();
    let mut ok = true;
    let mut notes = Vec::new();
    for scenario in [1u8, 2] {
        let sc = config.scenario(scenario).unwrap();
        for (i, frac) in [0.2, 0.5, 0.8, 0.95].into_iter().enumerate() {
            let c = cfg.with_rate(frac * r_max);
            let opt = optimal_point(&c, &channels, &sc).unwrap();
            let (cancel, nocancel) =
                joint_bf_pair(&c, &channels, &sc, &RandomSource::new(70 + i as u64), &opts).unwrap();
            let le = |a: f64, b: f64| a <= b * (1.0 + DOMINANCE_SLACK);
            let dominance = le(opt.crb, cancel.point.crb) && le(cancel.point.crb, nocancel.point.crb);
            let converged = |t: &isac_core::beamforming::ScaTrace| {
                let obj = &t.objective;
                let last_step = match obj.len() {
                    0 | 1 => 0.0,
                    n => (obj[n - 2] - obj[n - 1]).abs() / obj[n - 1].abs().max(f64::MIN_POSITIVE),
                };
                t.is_monotone(1e-9) && t.iterations() <= 50 && last_step <= 1e-4
            };
            let sca_ok = converged(&cancel.trace) && converged(&nocancel.trace);
            ok &= dominance && sca_ok;
            notes.push(format!(
                "S{scenario} R={:.3}: {:.4e} <= {:.4e} <= {:.4e} ({} / {} SCA iterations){}",
                c.rate_threshold,
                opt.crb,
                cancel.point.crb,
                nocancel.point.crb,
                cancel.trace.iterations(),
                nocancel.trace.iterations(),
                if dominance && sca_ok { "" } else { " !" }
            ));
        }
    }
    report(7, ok, notes.join("; "));
}

#[test]
fn c08_ls_attains_sample_crb() {
    let started = Instant::now();
    let cfg = SystemConfig::new(10, 10, 0, 1, 10.0, 1.0, 1.0, 64, 0.0).unwrap();
    let design = DesignSource::Covariance(TransmitCovariance::isotropic(10, 10.0));
    let opts = MonteCarloOptions {
        trials: 1000,
        ..Default::default()
    };
    let run = monte_carlo(&design, &Scenario::One, &cfg, &RandomSource::new(1), &opts).unwrap();
    let ratio = (run.rmse.response.unwrap() / run.root_crb_actual.response.unwrap()).powi(2);

    let mut rng = RandomSource::new(2).rng();
    let g: CMat<f64> = circular_normal_mat(10, 10, &mut rng);
    let x = synthesize_block(&TransmitCovariance::isotropic(10, 10.0), 64, &mut rng).x;
    let y = simulate_echo(&x, &g, 0.0, &mut rng).unwrap();
    let noiseless = (ls_estimate(&y, &x).unwrap() - &g).norm() / g.norm();
    let secs = started.elapsed().as_secs_f64();
    report(
        8,
        (ratio - 1.0).abs() <= 0.05 && noiseless <= 1e-10 && secs < 120.0,
        format!("MSE / sample CRB = {ratio:.4}, noiseless error {noiseless:.1e}, {secs:.1} s"),
    );
}

#[test]
fn c09_sample_covariance_crb_gap() {
    let config = ExperimentConfig {
        power_dbm: 15.0,
        n_users: 10,
        ..ExperimentConfig::default()
    };
    let cfg = config.system().unwrap();
    let spec = ExperimentSpec {
        kind: ExperimentKind::RmseVsLength,
        scenario: 1,
        methods: vec![Method::OptimalCov],
        grid: isac_core::experiments::Grid::new(vec![64.0]).unwrap(),
        config,
        seed: 9,
    };
    let channels = spec.channels(&cfg).unwrap();
    let cov = solve_p1(&cfg, &channels).unwrap().point.covariance.unwrap();
    let design = DesignSource::Covariance(cov);
    let gaps: Vec<f64> = [16, 32, 64, 128]
        .into_iter()
        .map(|l| median_crb_gap(&design, &Scenario::One, &cfg.with_block_len(l), &RandomSource::new(5), 401).unwrap())
        .collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    report(
        9,
        decreasing && gaps[2] <= 0.03,
        format!(
            "median gaps L=16/32/64/128: {:.4} / {:.4} / {:.4} / {:.4}, decreasing={decreasing}",
            gaps[0], gaps[1], gaps[2], gaps[3]
        ),
    );
}

fn rmse_spec(scenario: u8, grid: Vec<f64>, trials: usize) -> ExperimentSpec {
    ExperimentSpec {
        kind: ExperimentKind::RmseVsPower,
        scenario,
        methods: vec![Method::OptimalCov, Method::Beampattern],
        grid: isac_core::experiments::Grid::new(grid).unwrap(),
        config: ExperimentConfig {
            n_users: 10,
            trials,
            ..ExperimentConfig::default()
        },
        seed: 3,
    }
}

#[test]
fn c10_crb_design_beats_beampattern() {
    let powers: Vec<f64> = (0..=6).map(|i| 5.0 * i as f64).collect();
    let s1 = run_rmse_study(&rmse_spec(1, powers.clone(), 400), None).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for p in &powers {
        let o = s1.find(*p, "optimal_cov").and_then(|r| r.rmse.response);
        let b = s1.find(*p, "beampattern").and_then(|r| r.rmse.response);
        let better = matches!((o, b), (Some(o), Some(b)) if o < b);
        ok &= better;
        notes.push(format!("{p} dBm {:.4}/{:.4}", o.unwrap_or(f64::NAN), b.unwrap_or(f64::NAN)));
    }
    let s2 = run_rmse_study(&rmse_spec(2, vec![15.0], 400), None).unwrap();
    let db = |m: &str| 20.0 * s2.find(15.0, m).and_then(|r| r.rmse.amplitude).unwrap_or(f64::NAN).log10();
    let margin = db("beampattern") - db("optimal_cov");
    ok &= margin >= 2.0;
    report(
        10,
        ok,
        format!(
            "S1 RMSE opt/beampattern: {}; S2 amplitude RMSE {:.1} dB vs {:.1} dB (margin {margin:.1} dB)",
            notes.join(", "),
            db("optimal_cov"),
            db("beampattern")
        ),
    );
}

#[test]
fn c11_caml_sanity() {
    let cfg = SystemConfig::new(10, 10, 0, 2, 10.0, 1.0, 1.0, 64, 0.0).unwrap();
    let grid = AngleGrid::<f64>::uniform(2001);
    let truth = TargetSet::new(
        vec![grid.points[667], grid.points[1333]],
        vec![Complex64::new(1.0, 0.0), Complex64::new(-0.4, 0.7)],
    )
    .unwrap();
    let mut rng = RandomSource::new(11).rng();
    let x = synthesize_block(&TransmitCovariance::isotropic(10, 10.0), 64, &mut rng).x;
    let y = &truth.response_matrix(&cfg.tx(), &cfg.rx()).unwrap() * &x;
    let est = match_targets(&caml_estimate(&y, &x, &cfg, &grid, 2).unwrap().targets, &truth).unwrap();
    let angle_err = (0..2).map(|i| (est.angles[i] - truth.angles[i]).abs()).fold(0.0, f64::max);
    let amp_err = (0..2).map(|i| (est.coeffs[i] - truth.coeffs[i]).norm()).fold(0.0, f64::max);
    let exact = angle_err < 1e-9 && amp_err < 1e-8;

    let p = 10f64.powf(1.5);
    let c1 = SystemConfig::new(10, 10, 0, 1, p, 1.0, 1.0, 64, 0.0).unwrap();
    let t1 = TargetSet::new(vec![20f64.to_radians()], vec![Complex64::new(1.0, 0.0)]).unwrap();
    let run = monte_carlo(
        &DesignSource::Covariance(TransmitCovariance::isotropic(10, p)),
        &Scenario::Two(t1),
        &c1,
        &RandomSource::new(6),
        &MonteCarloOptions {
            trials: 400,
            ..Default::default()
        },
    )
    .unwrap();
    let ratio = run.rmse.angle.unwrap() / run.root_crb_theoretical.angle.unwrap();
    report(
        11,
        exact && (ratio - 1.0).abs() <= 0.25,
        format!("noiseless errors {angle_err:.1e} rad / {amp_err:.1e}; M=1 angle RMSE / root CRB = {ratio:.4}"),
    );
}
