//! Central-cut ellipsoid method for small convex programs given by subgradient
//! oracles.

use nalgebra::{DMatrix, DVector};

use super::sdp::{SolveReport, SolveStatus};

/// `{x : (x − c)ᵀ P⁻¹ (x − c) ≤ 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidState {
    pub center: DVector<f64>,
    pub shape: DMatrix<f64>,
    pub iteration: usize,
}

impl EllipsoidState {
    pub fn ball(center: DVector<f64>, radius: f64) -> Self {
        let d = center.len();
        Self {
            center,
            shape: DMatrix::identity(d, d) * (radius * radius),
            iteration: 0,
        }
    }

    /// Axis-aligned ellipsoid through the corners of the box `[lo, hi]`.
    pub fn enclosing_box(lo: &DVector<f64>, hi: &DVector<f64>) -> Self {
        let d = lo.len() as f64;
        let center = (lo + hi) * 0.5;
        let diag = (hi - lo).map(|w| d * (0.5 * w) * (0.5 * w));
        Self {
            center,
            shape: DMatrix::from_diagonal(&diag),
            iteration: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `ln det P`, `-inf` once the shape degenerates.
    pub fn log_volume(&self) -> f64 {
        match self.shape.clone().cholesky() {
            Some(c) => 2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>(),
            None => f64::NEG_INFINITY,
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        let dx = x - &self.center;
        match self.shape.clone().cholesky() {
            Some(c) => dx.dot(&c.solve(&dx)) <= 1.0 + 1e-12,
            None => false,
        }
    }

    /// Applies the central cut `gᵀ(x − c) ≤ 0`; returns `√(gᵀPg)`.
    pub fn cut(&mut self, g: &DVector<f64>) -> f64 {
        let d = self.dim();
        let pg = &self.shape * g;
        let gpg = g.dot(&pg);
        if !(gpg > 0.0) {
            return 0.0;
        }
        let root = gpg.sqrt();
        let b = pg / root;
        if d == 1 {
            self.center -= &b * 0.5;
            self.shape *= 0.25;
        } else {
            let df = d as f64;
            self.center -= &b / (df + 1.0);
            let update = &b * b.transpose() * (2.0 / (df + 1.0));
            self.shape = (&self.shape - update) * (df * df / (df * df - 1.0));
            self.shape = (&self.shape + self.shape.transpose()) * 0.5;
        }
        self.iteration += 1;
        root
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidOptions {
    /// Stop once `√(gᵀPg)` at a feasible objective cut falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// A constraint counts as satisfied when its value is at most this.
    pub feas_tol: f64,
}

impl EllipsoidOptions {
    /// Iteration budget large enough to shrink an ellipsoid of initial
    /// radius `radius` to resolution `tol` in dimension `d`.
    pub fn for_problem(d: usize, radius: f64, tol: f64) -> Self {
        let df = d as f64;
        let ratio = (radius.max(tol) / tol).ln().max(1.0);
        let needed = if d == 1 {
            (ratio / std::f64::consts::LN_2 * 1.5).ceil() as usize + 10
        } else {
            (3.0 * df * (df + 1.0) * ratio).ceil() as usize
        };
        Self {
            tol,
            max_iter: needed.max(20 * d * d),
            feas_tol: 0.0,
        }
    }
}

impl Default for EllipsoidOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 20,
            feas_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EllipsoidResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub report: SolveReport,
    pub state: EllipsoidState,
}

/// Objective oracle: value and a subgradient.
pub type Oracle<'a> = dyn FnMut(&DVector<f64>) -> (f64, DVector<f64>) + 'a;

/// Minimizes a convex objective subject to `c_j(x) ≤ 0`, each given by a
/// value/subgradient oracle. Violated constraints produce feasibility cuts,
/// feasible centers produce objective cuts.
pub fn ellipsoid_minimize(
    objective: &mut Oracle<'_>,
    constraints: &mut [&mut Oracle<'_>],
    init: EllipsoidState,
    opts: &EllipsoidOptions,
) -> EllipsoidResult {
    let mut state = init;
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut last_width = f64::INFINITY;
    let mut infeasible = false;
    let mut iters = 0;
    let mut converged = false;
    while iters < opts.max_iter {
        iters += 1;
        let x = state.center.clone();
        let mut worst: Option<(f64, DVector<f64>)> = None;
        for c in constraints.iter_mut() {
            let (v, g) = c(&x);
            if v > opts.feas_tol && worst.as_ref().is_none_or(|w| v > w.0) {
                worst = Some((v, g));
            }
        }
        if let Some((v, g)) = worst {
            let width = state.cut(&g);
            // the whole ellipsoid violates this constraint
            if v - width > opts.feas_tol {
                infeasible = best.is_none();
                break;
            }
            if width == 0.0 {
                break;
            }
            continue;
        }
        let (f, g) = objective(&x);
        if best.as_ref().is_none_or(|b| f < b.1) {
            best = Some((x.clone(), f));
        }
        let width = state.cut(&g);
        last_width = width;
        if width <= opts.tol {
            converged = true;
            break;
        }
    }
    let status = match (&best, converged, infeasible) {
        (None, _, _) => SolveStatus::Infeasible,
        (Some(_), true, _) => SolveStatus::Optimal,
        (Some(_), false, _) => SolveStatus::MaxIter,
    };
    let (x, value) = best.unwrap_or_else(|| (state.center.clone(), f64::INFINITY));
    let viol = constraints
        .iter_mut()
        .map(|c| c(&x).0)
        .fold(0.0f64, f64::max);
    EllipsoidResult {
        report: SolveReport {
            status,
            objective: value,
            primal_residual: viol,
            dual_residual: 0.0,
            gap: last_width,
            iterations: iters,
        },
        x,
        value,
        state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_dimensional_quadratic() {
        let mut obj = |x: &DVector<f64>| (x[0] * x[0], DVector::from_element(1, 2.0 * x[0]));
        let mut lo = |x: &DVector<f64>| (-1.0 - x[0], DVector::from_element(1, -1.0));
        let mut hi = |x: &DVector<f64>| (x[0] - 1.0, DVector::from_element(1, 1.0));
        let init = EllipsoidState::ball(DVector::from_element(1, 0.7), 2.0);
        // objective accuracy 1e-12 pins |x| below 1e-6
        let opts = EllipsoidOptions::for_problem(1, 2.0, 1e-12);
        let r = ellipsoid_minimize(&mut obj, &mut [&mut lo, &mut hi], init, &opts);
        assert_eq!(r.report.status, SolveStatus::Optimal);
        assert!(r.x[0].abs() <= 1e-6);
    }

    #[test]
    fn infeasible_constraints_detected() {
        let mut obj = |x: &DVector<f64>| (x[0], DVector::from_element(1, 1.0));
        let mut a = |x: &DVector<f64>| (x[0] - 1.0, DVector::from_element(1, 1.0));
        let mut b = |x: &DVector<f64>| (2.0 - x[0], DVector::from_element(1, -1.0));
        let init = EllipsoidState::ball(DVector::zeros(1), 10.0);
        let r = ellipsoid_minimize(
            &mut obj,
            &mut [&mut a, &mut b],
            init,
            &EllipsoidOptions::for_problem(1, 10.0, 1e-8),
        );
        assert_eq!(r.report.status, SolveStatus::Infeasible);
    }

    #[test]
    fn volume_decreases_every_cut() {
        let mut e = EllipsoidState::ball(DVector::zeros(3), 1.0);
        let mut prev = e.log_volume();
        for k in 0..50 {
            let g = DVector::from_vec(vec![(k as f64).sin(), 1.0, (k as f64 * 0.3).cos()]);
            e.cut(&g);
            let v = e.log_volume();
            // det P shrinks by at least exp(-1/(d+1)), volume by its square root
            assert!(v < prev - 1.0 / 4.0 + 1e-9, "iteration {k}");
            prev = v;
        }
    }

    #[test]
    fn quadratic_in_two_dimensions() {
        let mut obj = |x: &DVector<f64>| {
            let f = (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2);
            (f, DVector::from_vec(vec![2.0 * (x[0] - 1.0), 4.0 * (x[1] + 0.5)]))
        };
        let init = EllipsoidState::ball(DVector::zeros(2), 5.0);
        let opts = EllipsoidOptions::for_problem(2, 5.0, 1e-9);
        let r = ellipsoid_minimize(&mut obj, &mut [], init, &opts);
        assert_eq!(r.report.status, SolveStatus::Optimal);
        assert_relative_eq!(r.x[0], 1.0, epsilon = 1e-4);
        assert_relative_eq!(r.x[1], -0.5, epsilon = 1e-4);
    }
}
