//! Primal-dual interior-point solver for real linear/semidefinite cone programs.
//!
//! Problem form:
//!
//! ```text
//! minimize    cᵀx
//! subject to  A x = b
//!             G_lp x ≤ h_lp
//!             F0_j + Σ_i x_i F_ij ⪰ 0     for every block j
//! ```
//!
//! The iteration runs on the homogeneous self-dual embedding with
//! Nesterov-Todd scaling and a Mehrotra predictor-corrector step, so primal or
//! dual infeasibility shows up as a certificate instead of a stall.

use std::fmt;

use nalgebra::{DMatrix, DVector};

/// Symmetric sparse matrix stored by its upper triangle (`r <= c`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymSparse {
    pub dim: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Adds `v` at `(r, c)` and, implicitly, at `(c, r)`.
    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            let (a, b) = if r <= c { (r, c) } else { (c, r) };
            self.entries.push((a, b, v));
        }
    }

    pub fn from_dense(m: &DMatrix<f64>, drop_tol: f64) -> Self {
        let mut s = Self::new(m.nrows());
        for c in 0..m.ncols() {
            for r in 0..=c {
                let v = 0.5 * (m[(r, c)] + m[(c, r)]);
                if v.abs() > drop_tol {
                    s.push(r, c, v);
                }
            }
        }
        s
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
            if r != c {
                m[(c, r)] += v;
            }
        }
        m
    }

    /// Trace inner product `<F, M>` for a symmetric `M`.
    pub fn dot(&self, m: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| if r == c { v * m[(r, r)] } else { v * (m[(r, c)] + m[(c, r)]) })
            .sum()
    }

    /// `out += scale * F`.
    pub fn add_to(&self, out: &mut DMatrix<f64>, scale: f64) {
        for &(r, c, v) in &self.entries {
            out[(r, c)] += scale * v;
            if r != c {
                out[(c, r)] += scale * v;
            }
        }
    }

    /// `Q F Qᵀ`.
    fn congruence(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        let k = q.nrows();
        let mut out = DMatrix::zeros(k, k);
        for &(r, c, v) in &self.entries {
            let qr = q.column(r);
            let qc = q.column(c);
            if r == c {
                out.ger(v, &qr, &qr, 1.0);
            } else {
                out.ger(v, &qr, &qc, 1.0);
                out.ger(v, &qc, &qr, 1.0);
            }
        }
        out
    }
}

/// One linear matrix inequality `F0 + Σ x_i F_i ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpBlock {
    pub dim: usize,
    pub constant: DMatrix<f64>,
    pub terms: Vec<(usize, SymSparse)>,
}

impl SdpBlock {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            constant: DMatrix::zeros(dim, dim),
            terms: Vec::new(),
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (i, f) in &self.terms {
            f.add_to(&mut m, x[*i]);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub n: usize,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub g_lp: DMatrix<f64>,
    pub h_lp: DVector<f64>,
    pub blocks: Vec<SdpBlock>,
}

impl ConicProblem {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            c: DVector::zeros(n),
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            g_lp: DMatrix::zeros(0, n),
            h_lp: DVector::zeros(0),
            blocks: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.n;
        if self.c.len() != n || self.a.ncols() != n || self.g_lp.ncols() != n {
            return Err("column count differs from variable count".into());
        }
        if self.a.nrows() != self.b.len() || self.g_lp.nrows() != self.h_lp.len() {
            return Err("row count differs from right-hand side length".into());
        }
        for (j, blk) in self.blocks.iter().enumerate() {
            if blk.constant.nrows() != blk.dim || blk.constant.ncols() != blk.dim {
                return Err(format!("block {j}: constant is not {0}x{0}", blk.dim));
            }
            for (i, f) in &blk.terms {
                if *i >= n || f.dim != blk.dim || f.entries.iter().any(|e| e.1 >= blk.dim) {
                    return Err(format!("block {j}: malformed term for variable {i}"));
                }
            }
        }
        Ok(())
    }

    fn degree(&self) -> usize {
        self.h_lp.len() + self.blocks.iter().map(|b| b.dim).sum::<usize>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `sᵀz / max(1, |cᵀx|)`.
    pub gap: f64,
    pub iterations: usize,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Optimal, or stalled with residuals and gap within `factor` times the tolerances.
    /// Primal feasible with a small gap but possibly a loose dual residual,
    /// which is what badly scaled problems reach before roundoff takes over.
    /// Enough for a step that is checked against the exact objective.
    pub fn is_primal_usable(&self, opts: &SdpOptions) -> bool {
        self.is_usable(opts, 1e3)
            || (matches!(self.status, SolveStatus::NumericalFailure | SolveStatus::MaxIter)
                && self.primal_residual <= 1e3 * opts.feas_tol
                && self.gap <= 1e3 * opts.gap_tol
                && self.dual_residual <= 1e-2)
    }

    pub fn is_usable(&self, opts: &SdpOptions, factor: f64) -> bool {
        self.is_optimal()
            || (matches!(self.status, SolveStatus::NumericalFailure | SolveStatus::MaxIter)
                && self.primal_residual <= factor * opts.feas_tol
                && self.dual_residual <= factor * opts.feas_tol
                && self.gap <= factor * opts.gap_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Per-iteration log lines on stderr.
    pub trace: bool,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            gap_tol: 1e-7,
            max_iter: 100,
            trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z_lp: DVector<f64>,
    pub z_blocks: Vec<DMatrix<f64>>,
    pub report: SolveReport,
}

/// Element of the product cone.
#[derive(Debug, Clone)]
struct ConeVec {
    lp: DVector<f64>,
    sd: Vec<DMatrix<f64>>,
}

impl ConeVec {
    fn zeros(p: &ConicProblem) -> Self {
        Self {
            lp: DVector::zeros(p.h_lp.len()),
            sd: p.blocks.iter().map(|b| DMatrix::zeros(b.dim, b.dim)).collect(),
        }
    }

    fn identity(p: &ConicProblem) -> Self {
        Self {
            lp: DVector::from_element(p.h_lp.len(), 1.0),
            sd: p.blocks.iter().map(|b| DMatrix::identity(b.dim, b.dim)).collect(),
        }
    }

    fn dot(&self, o: &Self) -> f64 {
        self.lp.dot(&o.lp) + self.sd.iter().zip(&o.sd).map(|(a, b)| a.dot(b)).sum::<f64>()
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, a: f64, o: &Self) {
        self.lp.axpy(a, &o.lp, 1.0);
        for (s, t) in self.sd.iter_mut().zip(&o.sd) {
            *s += t * a;
        }
    }

    fn scaled(&self, a: f64) -> Self {
        Self {
            lp: &self.lp * a,
            sd: self.sd.iter().map(|m| m * a).collect(),
        }
    }

    fn sub(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.axpy(-1.0, o);
        r
    }

    fn is_finite(&self) -> bool {
        self.lp.iter().all(|v| v.is_finite()) && self.sd.iter().all(|m| m.iter().all(|v| v.is_finite()))
    }

    /// Largest `t` with `-t` below every eigenvalue, i.e. `-min eig`.
    fn neg_min_eig(&self) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for v in self.lp.iter() {
            m = m.max(-v);
        }
        for b in &self.sd {
            if b.nrows() > 0 {
                let e = sym(b).symmetric_eigenvalues();
                m = m.max(-e.min());
            }
        }
        m
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

struct BlockScaling {
    r: DMatrix<f64>,
    rinv: DMatrix<f64>,
    lambda: DVector<f64>,
}

struct Scaling {
    d: DVector<f64>,
    lam_lp: DVector<f64>,
    sd: Vec<BlockScaling>,
}

impl Scaling {
    fn new(s: &ConeVec, z: &ConeVec) -> Option<Self> {
        let d = s.lp.zip_map(&z.lp, |a, b| (a / b).sqrt());
        let lam_lp = s.lp.zip_map(&z.lp, |a, b| (a * b).sqrt());
        if d.iter().chain(lam_lp.iter()).any(|v| !v.is_finite() || *v <= 0.0) {
            return None;
        }
        let mut sd = Vec::with_capacity(s.sd.len());
        for (sm, zm) in s.sd.iter().zip(&z.sd) {
            let ls = sym(sm).cholesky()?.unpack();
            let lz = sym(zm).cholesky()?.unpack();
            let svd = (lz.transpose() * &ls).svd(true, true);
            let u = svd.u?;
            let vt = svd.v_t?;
            let lambda = svd.singular_values;
            if lambda.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return None;
            }
            let k = lambda.len();
            let mut r = &ls * vt.transpose();
            let mut rinv = u.transpose() * lz.transpose();
            for i in 0..k {
                let sq = lambda[i].sqrt();
                r.column_mut(i).scale_mut(1.0 / sq);
                rinv.row_mut(i).scale_mut(1.0 / sq);
            }
            sd.push(BlockScaling { r, rinv, lambda });
        }
        Some(Self { d, lam_lp, sd })
    }

    /// `W z`.
    fn apply(&self, z: &ConeVec) -> ConeVec {
        ConeVec {
            lp: self.d.component_mul(&z.lp),
            sd: self
                .sd
                .iter()
                .zip(&z.sd)
                .map(|(b, m)| b.r.transpose() * m * &b.r)
                .collect(),
        }
    }

    /// `Wᵀ u`.
    fn apply_t(&self, u: &ConeVec) -> ConeVec {
        ConeVec {
            lp: self.d.component_mul(&u.lp),
            sd: self
                .sd
                .iter()
                .zip(&u.sd)
                .map(|(b, m)| &b.r * m * b.r.transpose())
                .collect(),
        }
    }

    /// `(WᵀW)⁻¹ v`.
    fn wtw_inv(&self, v: &ConeVec) -> ConeVec {
        ConeVec {
            lp: v.lp.zip_map(&self.d, |a, d| a / (d * d)),
            sd: self
                .sd
                .iter()
                .zip(&v.sd)
                .map(|(b, m)| {
                    let inner = &b.rinv * m * b.rinv.transpose();
                    b.rinv.transpose() * inner * &b.rinv
                })
                .collect(),
        }
    }

    fn lambda(&self) -> ConeVec {
        ConeVec {
            lp: self.lam_lp.clone(),
            sd: self
                .sd
                .iter()
                .map(|b| DMatrix::from_diagonal(&b.lambda))
                .collect(),
        }
    }

    /// `λ ⋄ v`: solves `λ ∘ x = v`.
    fn lambda_div(&self, v: &ConeVec) -> ConeVec {
        ConeVec {
            lp: v.lp.component_div(&self.lam_lp),
            sd: self
                .sd
                .iter()
                .zip(&v.sd)
                .map(|(b, m)| {
                    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
                        2.0 * m[(i, j)] / (b.lambda[i] + b.lambda[j])
                    })
                })
                .collect(),
        }
    }

    /// Largest step `α` keeping `λ + α u` in the cone (infinite when unbounded).
    fn max_step(&self, u: &ConeVec) -> f64 {
        let mut alpha = f64::INFINITY;
        for (l, v) in self.lam_lp.iter().zip(u.lp.iter()) {
            if *v < 0.0 {
                alpha = alpha.min(-l / v);
            }
        }
        for (b, m) in self.sd.iter().zip(&u.sd) {
            let k = b.lambda.len();
            if k == 0 {
                continue;
            }
            let inv_sqrt = b.lambda.map(|v| 1.0 / v.sqrt());
            let scaled = DMatrix::from_fn(k, k, |i, j| {
                0.5 * (m[(i, j)] + m[(j, i)]) * inv_sqrt[i] * inv_sqrt[j]
            });
            let lo = scaled.symmetric_eigenvalues().min();
            if lo < 0.0 {
                alpha = alpha.min(-1.0 / lo);
            }
        }
        alpha
    }
}

fn jordan(u: &ConeVec, v: &ConeVec) -> ConeVec {
    ConeVec {
        lp: u.lp.component_mul(&v.lp),
        sd: u
            .sd
            .iter()
            .zip(&v.sd)
            .map(|(a, b)| {
                let ab = a * b;
                (&ab + ab.transpose()) * 0.5
            })
            .collect(),
    }
}

struct Operators<'a> {
    p: &'a ConicProblem,
}

impl Operators<'_> {
    /// `G x` where `G x + s = h`.
    fn g(&self, x: &DVector<f64>) -> ConeVec {
        ConeVec {
            lp: &self.p.g_lp * x,
            sd: self
                .p
                .blocks
                .iter()
                .map(|b| {
                    let mut m = DMatrix::zeros(b.dim, b.dim);
                    for (i, f) in &b.terms {
                        f.add_to(&mut m, -x[*i]);
                    }
                    m
                })
                .collect(),
        }
    }

    fn gt(&self, z: &ConeVec) -> DVector<f64> {
        let mut out = self.p.g_lp.transpose() * &z.lp;
        for (b, zm) in self.p.blocks.iter().zip(&z.sd) {
            for (i, f) in &b.terms {
                out[*i] -= f.dot(zm);
            }
        }
        out
    }

    fn h(&self) -> ConeVec {
        ConeVec {
            lp: self.p.h_lp.clone(),
            sd: self.p.blocks.iter().map(|b| sym(&b.constant)).collect(),
        }
    }
}

/// Factored reduced KKT system for one scaling.
struct Kkt<'a> {
    ops: &'a Operators<'a>,
    scaling: &'a Scaling,
    reduced: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl<'a> Kkt<'a> {
    fn new(ops: &'a Operators<'a>, scaling: &'a Scaling) -> Option<Self> {
        let p = ops.p;
        let n = p.n;
        let m_eq = p.a.nrows();
        let mut hmat = DMatrix::<f64>::zeros(n, n);
        if p.g_lp.nrows() > 0 {
            let mut gs = p.g_lp.clone();
            for (r, d) in scaling.d.iter().enumerate() {
                gs.row_mut(r).scale_mut(1.0 / d);
            }
            hmat += gs.transpose() * &gs;
        }
        for (blk, sc) in p.blocks.iter().zip(&scaling.sd) {
            if blk.terms.is_empty() {
                continue;
            }
            let k = blk.dim;
            let mut vars: Vec<usize> = blk.terms.iter().map(|t| t.0).collect();
            vars.sort_unstable();
            vars.dedup();
            let mut q = DMatrix::<f64>::zeros(k * k, vars.len());
            for (i, f) in &blk.terms {
                let col = vars.binary_search(i).ok()?;
                let pm = f.congruence(&sc.rinv);
                let mut c = q.column_mut(col);
                c += DVector::from_column_slice(pm.as_slice());
            }
            let qtq = q.transpose() * &q;
            for (a, &ia) in vars.iter().enumerate() {
                for (b, &ib) in vars.iter().enumerate() {
                    hmat[(ia, ib)] += qtq[(a, b)];
                }
            }
        }
        let dim = n + m_eq;
        let mut reduced = DMatrix::<f64>::zeros(dim, dim);
        reduced.view_mut((0, 0), (n, n)).copy_from(&hmat);
        reduced.view_mut((0, n), (n, m_eq)).copy_from(&p.a.transpose());
        reduced.view_mut((n, 0), (m_eq, n)).copy_from(&p.a);
        let scale = hmat.diagonal().iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let delta = 1e-13 * scale;
        let mut reg = reduced.clone();
        for i in 0..n {
            reg[(i, i)] += delta;
        }
        for i in n..dim {
            reg[(i, i)] -= delta;
        }
        let lu = reg.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Self {
            ops,
            scaling,
            reduced,
            lu,
        })
    }

    /// Solves `[[0, Aᵀ, Gᵀ], [A, 0, 0], [G, 0, −WᵀW]] (dx, dy, dz) = (r1, r2, r3)`,
    /// refining against the full (unreduced) system.
    fn solve(
        &self,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        r3: &ConeVec,
    ) -> Option<(DVector<f64>, DVector<f64>, ConeVec)> {
        let (mut dx, mut dy, mut dz) = self.solve_reduced(r1, r2, r3)?;
        let a = &self.ops.p.a;
        let base = r1.norm() + r2.norm() + r3.norm();
        for _ in 0..3 {
            let e1 = r1 - a.transpose() * &dy - self.ops.gt(&dz);
            let e2 = r2 - a * &dx;
            let mut e3 = r3.sub(&self.ops.g(&dx));
            e3.axpy(1.0, &self.scaling.apply_t(&self.scaling.apply(&dz)));
            let err = e1.norm() + e2.norm() + e3.norm();
            if !(err > 1e-15 * base) {
                break;
            }
            let (cx, cy, cz) = self.solve_reduced(&e1, &e2, &e3)?;
            dx += cx;
            dy += cy;
            dz.axpy(1.0, &cz);
        }
        if !dx.iter().all(|v| v.is_finite()) || !dz.is_finite() {
            return None;
        }
        Some((dx, dy, dz))
    }

    fn solve_reduced(
        &self,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        r3: &ConeVec,
    ) -> Option<(DVector<f64>, DVector<f64>, ConeVec)> {
        let n = self.ops.p.n;
        let m_eq = r2.len();
        let top = r1 + self.ops.gt(&self.scaling.wtw_inv(r3));
        let mut rhs = DVector::<f64>::zeros(n + m_eq);
        rhs.rows_mut(0, n).copy_from(&top);
        rhs.rows_mut(n, m_eq).copy_from(r2);
        let mut sol = self.lu.solve(&rhs)?;
        let res = &rhs - &self.reduced * &sol;
        sol += self.lu.solve(&res)?;
        let dx = sol.rows(0, n).into_owned();
        let dy = sol.rows(n, m_eq).into_owned();
        let dz = self.scaling.wtw_inv(&self.ops.g(&dx).sub(r3));
        Some((dx, dy, dz))
    }
}

#[derive(Clone)]
struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    z: ConeVec,
    s: ConeVec,
    tau: f64,
    kappa: f64,
}

#[derive(Clone)]
struct Residuals {
    rx: DVector<f64>,
    ry: DVector<f64>,
    rz: ConeVec,
    rt: f64,
    pres: f64,
    dres: f64,
    pcost: f64,
    relgap: f64,
}

pub fn solve_conic(p: &ConicProblem, opts: &SdpOptions) -> ConicSolution {
    let n = p.n;
    let fail = |status: SolveStatus| ConicSolution {
        x: DVector::zeros(n),
        y: DVector::zeros(p.b.len()),
        z_lp: DVector::zeros(p.h_lp.len()),
        z_blocks: p.blocks.iter().map(|b| DMatrix::zeros(b.dim, b.dim)).collect(),
        report: SolveReport {
            status,
            objective: f64::NAN,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            gap: f64::INFINITY,
            iterations: 0,
        },
    };
    if p.validate().is_err() {
        return fail(SolveStatus::NumericalFailure);
    }
    let ops = Operators { p };
    let h = ops.h();
    let deg = p.degree() as f64;
    let resx0 = p.c.norm().max(1.0);
    let resy0 = p.b.norm().max(1.0);
    let resz0 = h.norm().max(1.0);

    // Starting point from the identity scaling.
    let unit = Scaling {
        d: DVector::from_element(p.h_lp.len(), 1.0),
        lam_lp: DVector::from_element(p.h_lp.len(), 1.0),
        sd: p
            .blocks
            .iter()
            .map(|b| BlockScaling {
                r: DMatrix::identity(b.dim, b.dim),
                rinv: DMatrix::identity(b.dim, b.dim),
                lambda: DVector::from_element(b.dim, 1.0),
            })
            .collect(),
    };
    let Some(kkt0) = Kkt::new(&ops, &unit) else {
        return fail(SolveStatus::NumericalFailure);
    };
    let Some((x0, _, zp)) = kkt0.solve(&DVector::zeros(n), &p.b, &h) else {
        return fail(SolveStatus::NumericalFailure);
    };
    let Some((_, y0, z0)) = kkt0.solve(&(-&p.c), &DVector::zeros(p.b.len()), &ConeVec::zeros(p))
    else {
        return fail(SolveStatus::NumericalFailure);
    };
    let e = ConeVec::identity(p);
    let mut s = zp.scaled(-1.0);
    let ts = s.neg_min_eig();
    if ts >= -1e-8 * s.norm().max(1.0) {
        s.axpy(1.0 + ts.max(0.0), &e);
    }
    let mut z = z0;
    let tz = z.neg_min_eig();
    if tz >= -1e-8 * z.norm().max(1.0) {
        z.axpy(1.0 + tz.max(0.0), &e);
    }
    let mut it = Iterate {
        x: x0,
        y: y0,
        z,
        s,
        tau: 1.0,
        kappa: 1.0,
    };

    let residuals = |it: &Iterate| -> Residuals {
        let gx = ops.g(&it.x);
        let rx = p.a.transpose() * &it.y + ops.gt(&it.z) + &p.c * it.tau;
        let ry = &p.b * it.tau - &p.a * &it.x;
        let mut rz = h.scaled(it.tau);
        rz.axpy(-1.0, &gx);
        rz.axpy(-1.0, &it.s);
        let rt = -p.c.dot(&it.x) - p.b.dot(&it.y) - h.dot(&it.z) - it.kappa;
        let t = it.tau;
        let pres = ((&p.a * &it.x / t - &p.b).norm() / resy0).max({
            let mut v = gx.scaled(1.0 / t);
            v.axpy(1.0 / t, &it.s);
            v.axpy(-1.0, &h);
            v.norm() / resz0
        });
        let dres = ((p.a.transpose() * &it.y + ops.gt(&it.z)) / t + &p.c).norm() / resx0;
        let pcost = p.c.dot(&it.x) / t;
        let gap = it.s.dot(&it.z) / (t * t);
        Residuals {
            rx,
            ry,
            rz,
            rt,
            pres,
            dres,
            pcost,
            relgap: gap / pcost.abs().max(1.0),
        }
    };

    let finish = |it: &Iterate, res: &Residuals, status: SolveStatus, iters: usize| {
        let (x, y, z) = match status {
            SolveStatus::Infeasible | SolveStatus::Unbounded => {
                (it.x.clone(), it.y.clone(), it.z.clone())
            }
            _ => (
                &it.x / it.tau,
                &it.y / it.tau,
                it.z.scaled(1.0 / it.tau),
            ),
        };
        ConicSolution {
            x,
            y,
            z_lp: z.lp,
            z_blocks: z.sd.iter().map(sym).collect(),
            report: SolveReport {
                status,
                objective: res.pcost,
                primal_residual: res.pres,
                dual_residual: res.dres,
                gap: res.relgap,
                iterations: iters,
            },
        }
    };

    // best iterate so far, by the worst tolerance-relative residual
    let mut best: Option<(Iterate, Residuals, f64)> = None;
    for iter in 0..=opts.max_iter {
        let res = residuals(&it);
        let merit = (res.pres / opts.feas_tol)
            .max(res.dres / opts.feas_tol)
            .max(res.relgap / opts.gap_tol);
        if opts.trace {
            eprintln!(
                "sdp {iter:3} pcost {:+.8e} pres {:.2e} dres {:.2e} gap {:.2e} tau {:.2e} kappa {:.2e}",
                res.pcost, res.pres, res.dres, res.relgap, it.tau, it.kappa
            );
        }
        if res.pres <= opts.feas_tol && res.dres <= opts.feas_tol && res.relgap <= opts.gap_tol {
            return finish(&it, &res, SolveStatus::Optimal, iter);
        }
        let hz_by = h.dot(&it.z) + p.b.dot(&it.y);
        if hz_by < 0.0 {
            let pinf = (p.a.transpose() * &it.y + ops.gt(&it.z)).norm() / resx0 / (-hz_by);
            if pinf <= opts.feas_tol {
                return finish(&it, &res, SolveStatus::Infeasible, iter);
            }
        }
        let cx = p.c.dot(&it.x);
        if cx < 0.0 {
            let mut v = ops.g(&it.x);
            v.axpy(1.0, &it.s);
            let dinf = ((&p.a * &it.x).norm() / resy0).max(v.norm() / resz0) / (-cx);
            if dinf <= opts.feas_tol {
                return finish(&it, &res, SolveStatus::Unbounded, iter);
            }
        }
        if best.as_ref().is_none_or(|b| merit < b.2) {
            best = Some((it.clone(), res.clone(), merit));
        }
        let (bit, bres, bmerit) = best.as_ref().expect("set above");
        // residuals drifting away from a near-solution: stop at the best point
        if *bmerit <= 1e3 && merit > 1e2 * bmerit {
            return finish(bit, bres, SolveStatus::NumericalFailure, iter);
        }
        if iter == opts.max_iter {
            return finish(bit, bres, SolveStatus::MaxIter, iter);
        }

        let step = newton_step(p, &ops, &h, &it, &res, deg);
        let Some((dx, dy, dz, ds, dtau, dkappa, alpha)) = step else {
            return finish(bit, bres, SolveStatus::NumericalFailure, iter);
        };
        let mut next = Iterate {
            x: &it.x + &dx * alpha,
            y: &it.y + &dy * alpha,
            z: it.z.clone(),
            s: it.s.clone(),
            tau: it.tau + alpha * dtau,
            kappa: it.kappa + alpha * dkappa,
        };
        next.z.axpy(alpha, &dz);
        next.s.axpy(alpha, &ds);
        for m in next.z.sd.iter_mut().chain(next.s.sd.iter_mut()) {
            *m = sym(m);
        }
        // Homogeneous scaling keeps τ + κ of order one.
        let norm = next.tau + next.kappa;
        if norm > 1e8 || norm < 1e-8 {
            let f = 1.0 / norm;
            next.x *= f;
            next.y *= f;
            next.z = next.z.scaled(f);
            next.s = next.s.scaled(f);
            next.tau *= f;
            next.kappa *= f;
        }
        it = next;
    }
    unreachable!("loop returns on the final iteration")
}

type Step = (
    DVector<f64>,
    DVector<f64>,
    ConeVec,
    ConeVec,
    f64,
    f64,
    f64,
);

fn newton_step(
    p: &ConicProblem,
    ops: &Operators<'_>,
    h: &ConeVec,
    it: &Iterate,
    res: &Residuals,
    deg: f64,
) -> Option<Step> {
    let scaling = Scaling::new(&it.s, &it.z)?;
    let lambda = scaling.lambda();
    let lam_sq = jordan(&lambda, &lambda);
    let e = ConeVec::identity(p);
    let mu = (it.s.dot(&it.z) + it.tau * it.kappa) / (deg + 1.0);
    let kkt = Kkt::new(ops, &scaling)?;
    let (dx2, dy2, dz2) = kkt.solve(&(-&p.c), &p.b, h)?;
    let wdz2 = scaling.apply(&dz2).dot(&scaling.apply(&dz2));

    let mut sigma = 0.0;
    let mut corr = ConeVec::zeros(p);
    let mut corr_t = 0.0;
    let mut out = None;
    for pass in 0..2 {
        let eta = 1.0 - sigma;
        let mut target = e.scaled(sigma * mu);
        target.axpy(-1.0, &lam_sq);
        target.axpy(-1.0, &corr);
        let q = scaling.lambda_div(&target);
        let t_rhs = sigma * mu - it.tau * it.kappa - corr_t;
        let mut r3 = res.rz.scaled(eta);
        r3.axpy(-1.0, &scaling.apply_t(&q));
        let (dx1, dy1, dz1) = kkt.solve(&(&res.rx * -eta), &(&res.ry * eta), &r3)?;
        let cd1 = p.c.dot(&dx1) + p.b.dot(&dy1) + h.dot(&dz1);
        let dtau = (-eta * res.rt + t_rhs / it.tau + cd1) / (it.kappa / it.tau + wdz2);
        let dx = &dx1 + &dx2 * dtau;
        let dy = &dy1 + &dy2 * dtau;
        let mut dz = dz1;
        dz.axpy(dtau, &dz2);
        let dz_s = scaling.apply(&dz);
        let ds_s = q.sub(&dz_s);
        let dkappa = (t_rhs - it.kappa * dtau) / it.tau;
        let mut amax = scaling.max_step(&ds_s).min(scaling.max_step(&dz_s));
        if dtau < 0.0 {
            amax = amax.min(-it.tau / dtau);
        }
        if dkappa < 0.0 {
            amax = amax.min(-it.kappa / dkappa);
        }
        if !amax.is_finite() && amax != f64::INFINITY {
            return None;
        }
        if pass == 0 {
            let a_aff = amax.min(1.0);
            sigma = (1.0 - a_aff).clamp(0.0, 1.0).powi(3);
            corr = jordan(&ds_s, &dz_s);
            corr_t = dtau * dkappa;
        } else {
            let alpha = (0.99 * amax).min(1.0);
            let ds = scaling.apply_t(&ds_s);
            out = Some((dx, dy, dz, ds, dtau, dkappa, alpha));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lp(c: &[f64], g: &[&[f64]], h: &[f64]) -> ConicProblem {
        let n = c.len();
        let mut p = ConicProblem::new(n);
        p.c = DVector::from_column_slice(c);
        p.g_lp = DMatrix::from_fn(g.len(), n, |i, j| g[i][j]);
        p.h_lp = DVector::from_column_slice(h);
        p
    }

    #[test]
    fn small_lp() {
        // min -x - y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0 -> (1.6, 1.2)
        let p = lp(
            &[-1.0, -1.0],
            &[&[1.0, 2.0], &[3.0, 1.0], &[-1.0, 0.0], &[0.0, -1.0]],
            &[4.0, 6.0, 0.0, 0.0],
        );
        let sol = solve_conic(&p, &SdpOptions::default());
        assert!(sol.report.is_optimal(), "{:?}", sol.report);
        assert_relative_eq!(sol.x[0], 1.6, epsilon = 1e-6);
        assert_relative_eq!(sol.x[1], 1.2, epsilon = 1e-6);
    }

    #[test]
    fn infeasible_lp_detected() {
        // x <= -1 and x >= 1
        let p = lp(&[1.0], &[&[1.0], &[-1.0]], &[-1.0, -1.0]);
        let sol = solve_conic(&p, &SdpOptions::default());
        assert_eq!(sol.report.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_lp_detected() {
        let p = lp(&[-1.0], &[&[-1.0]], &[0.0]);
        let sol = solve_conic(&p, &SdpOptions::default());
        assert_eq!(sol.report.status, SolveStatus::Unbounded);
    }

    #[test]
    fn min_eigenvalue_sdp() {
        // max t s.t. M - t I ⪰ 0 has t* = λ_min(M).
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let mut p = ConicProblem::new(1);
        p.c[0] = -1.0;
        let mut blk = SdpBlock::new(3);
        blk.constant = m.clone();
        let mut f = SymSparse::new(3);
        for i in 0..3 {
            f.push(i, i, -1.0);
        }
        blk.terms.push((0, f));
        p.blocks.push(blk);
        let sol = solve_conic(&p, &SdpOptions::default());
        assert!(sol.report.is_optimal());
        assert_relative_eq!(sol.x[0], 2.0 - 2f64.sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn equality_constrained_sdp() {
        // min <C, X> s.t. tr X = 1, X ⪰ 0 over 2x2 symmetric X = [[a, b], [b, d]].
        let mut p = ConicProblem::new(3);
        p.c = DVector::from_vec(vec![1.0, 2.0 * 0.5, 3.0]);
        p.a = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0]);
        p.b = DVector::from_vec(vec![1.0]);
        let mut blk = SdpBlock::new(2);
        let mut fa = SymSparse::new(2);
        fa.push(0, 0, 1.0);
        let mut fb = SymSparse::new(2);
        fb.push(0, 1, 1.0);
        let mut fd = SymSparse::new(2);
        fd.push(1, 1, 1.0);
        blk.terms = vec![(0, fa), (1, fb), (2, fd)];
        p.blocks.push(blk);
        let sol = solve_conic(&p, &SdpOptions::default());
        assert!(sol.report.is_optimal(), "{:?}", sol.report);
        let cmat = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 3.0]);
        assert_relative_eq!(
            sol.report.objective,
            cmat.symmetric_eigenvalues().min(),
            epsilon = 1e-6
        );
    }
}
