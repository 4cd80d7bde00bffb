//! Modeling layer: Hermitian matrix and complex vector variables mapped to
//! real coordinates, complex LMIs lowered through the real embedding
//! `[[Re, −Im], [Im, Re]]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::sdp::{solve_conic, ConicProblem, SdpBlock, SdpOptions, SolveReport, SymSparse};
use crate::scalar::CMat;

/// Affine real expression `Σ a_i x_i + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Self {
        Self {
            terms: vec![(i, 1.0)],
            constant: 0.0,
        }
    }

    pub fn plus(mut self, o: &LinExpr) -> Self {
        self.terms.extend_from_slice(&o.terms);
        self.constant += o.constant;
        self
    }

    pub fn scale(mut self, a: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= a;
        }
        self.constant *= a;
        self
    }

    pub fn add_const(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.terms.iter().map(|(i, a)| a * x[*i]).sum::<f64>() + self.constant
    }
}

/// Kind of a real coordinate of a Hermitian variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HermCoord {
    Diag(usize),
    Re(usize, usize),
    Im(usize, usize),
}

impl HermCoord {
    /// The basis matrix `E` this coordinate multiplies.
    pub fn basis(&self, n: usize) -> CMat<f64> {
        let mut e = CMat::<f64>::zeros(n, n);
        match *self {
            HermCoord::Diag(j) => e[(j, j)] = Complex64::new(1.0, 0.0),
            HermCoord::Re(j, k) => {
                e[(j, k)] = Complex64::new(1.0, 0.0);
                e[(k, j)] = Complex64::new(1.0, 0.0);
            }
            HermCoord::Im(j, k) => {
                e[(j, k)] = Complex64::new(0.0, 1.0);
                e[(k, j)] = Complex64::new(0.0, -1.0);
            }
        }
        e
    }

    /// `Re tr(A E)`.
    pub fn trace_with(&self, a: &CMat<f64>) -> f64 {
        match *self {
            HermCoord::Diag(j) => a[(j, j)].re,
            HermCoord::Re(j, k) => (a[(k, j)] + a[(j, k)]).re,
            HermCoord::Im(j, k) => (Complex64::i() * (a[(k, j)] - a[(j, k)])).re,
        }
    }
}

/// `n × n` Hermitian variable occupying `n²` consecutive real coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermVar {
    pub offset: usize,
    pub n: usize,
}

impl HermVar {
    pub fn coords(&self) -> Vec<(usize, HermCoord)> {
        let mut out = Vec::with_capacity(self.n * self.n);
        let mut idx = self.offset;
        for j in 0..self.n {
            out.push((idx, HermCoord::Diag(j)));
            idx += 1;
        }
        for j in 0..self.n {
            for k in (j + 1)..self.n {
                out.push((idx, HermCoord::Re(j, k)));
                out.push((idx + 1, HermCoord::Im(j, k)));
                idx += 2;
            }
        }
        out
    }

    /// `Re tr(A X)`.
    pub fn linear(&self, a: &CMat<f64>) -> LinExpr {
        LinExpr {
            terms: self
                .coords()
                .into_iter()
                .map(|(i, c)| (i, c.trace_with(a)))
                .filter(|t| t.1 != 0.0)
                .collect(),
            constant: 0.0,
        }
    }

    pub fn trace(&self) -> LinExpr {
        LinExpr {
            terms: (0..self.n).map(|j| (self.offset + j, 1.0)).collect(),
            constant: 0.0,
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> CMat<f64> {
        let mut m = CMat::<f64>::zeros(self.n, self.n);
        for (i, c) in self.coords() {
            let v = x[i];
            match c {
                HermCoord::Diag(j) => m[(j, j)].re += v,
                HermCoord::Re(j, k) => {
                    m[(j, k)].re += v;
                    m[(k, j)].re += v;
                }
                HermCoord::Im(j, k) => {
                    m[(j, k)].im += v;
                    m[(k, j)].im -= v;
                }
            }
        }
        m
    }

    /// Coordinates of a Hermitian matrix, the inverse of [`HermVar::value`].
    pub fn coords_of(&self, m: &CMat<f64>) -> Vec<f64> {
        self.coords()
            .into_iter()
            .map(|(_, c)| match c {
                HermCoord::Diag(j) => m[(j, j)].re,
                HermCoord::Re(j, k) => 0.5 * (m[(j, k)].re + m[(k, j)].re),
                HermCoord::Im(j, k) => 0.5 * (m[(j, k)].im - m[(k, j)].im),
            })
            .collect()
    }
}

/// Complex `n`-vector variable: real parts then imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CVecVar {
    pub offset: usize,
    pub n: usize,
}

impl CVecVar {
    pub fn re(&self, j: usize) -> usize {
        self.offset + j
    }

    pub fn im(&self, j: usize) -> usize {
        self.offset + self.n + j
    }

    /// `Re(a^H w)`.
    pub fn re_inner(&self, a: &nalgebra::DVector<Complex64>) -> LinExpr {
        // a^H w = Σ conj(a_j)(w_re + i w_im); real part = a_re w_re + a_im w_im
        let mut terms = Vec::with_capacity(2 * self.n);
        for j in 0..self.n {
            terms.push((self.re(j), a[j].re));
            terms.push((self.im(j), a[j].im));
        }
        LinExpr {
            terms,
            constant: 0.0,
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> nalgebra::DVector<Complex64> {
        nalgebra::DVector::from_fn(self.n, |j, _| Complex64::new(x[self.re(j)], x[self.im(j)]))
    }
}

/// Hermitian matrix `C + Σ x_i B_i`, affine in the model variables.
#[derive(Debug, Clone)]
pub struct AffineHerm {
    pub terms: Vec<(usize, CMat<f64>)>,
    pub constant: CMat<f64>,
}

impl AffineHerm {
    pub fn of(x: &HermVar) -> Self {
        Self {
            terms: x.coords().into_iter().map(|(i, c)| (i, c.basis(x.n))).collect(),
            constant: CMat::zeros(x.n, x.n),
        }
    }

    /// `U X U^H`.
    pub fn mapped(x: &HermVar, u: &CMat<f64>) -> Self {
        Self {
            terms: x
                .coords()
                .into_iter()
                .map(|(i, c)| (i, u * c.basis(x.n) * u.adjoint()))
                .collect(),
            constant: CMat::zeros(u.nrows(), u.nrows()),
        }
    }

    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    /// Adds `w0 w^H + w w0^H − w0 w0^H`, the tangent of `w w^H` at `w0` and
    /// a lower bound on it in the PSD order.
    pub fn add_outer_tangent(&mut self, w: &CVecVar, w0: &nalgebra::DVector<Complex64>) {
        let n = w.n;
        let i = Complex64::new(0.0, 1.0);
        for j in 0..n {
            let mut e = nalgebra::DVector::<Complex64>::zeros(n);
            e[j] = Complex64::new(1.0, 0.0);
            let re = w0 * e.adjoint() + &e * w0.adjoint();
            let ie = &e * i;
            let im = w0 * ie.adjoint() + &ie * w0.adjoint();
            self.terms.push((w.re(j), re));
            self.terms.push((w.im(j), im));
        }
        self.constant -= w0 * w0.adjoint();
    }

    pub fn value(&self, x: &DVector<f64>) -> CMat<f64> {
        let mut m = self.constant.clone();
        for (i, b) in &self.terms {
            m += b * Complex64::new(x[*i], 0.0);
        }
        m
    }
}

/// Hermitian affine matrix expression `C0 + Σ x_i C_i ⪰ 0`.
#[derive(Debug, Clone)]
pub struct Lmi {
    pub dim: usize,
    pub constant: CMat<f64>,
    pub terms: Vec<(usize, Vec<(usize, usize, Complex64)>)>,
}

impl Lmi {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            constant: CMat::zeros(dim, dim),
            terms: Vec::new(),
        }
    }

    /// Places Hermitian `m` on the diagonal block starting at `r0`.
    pub fn constant_diag(&mut self, r0: usize, m: &CMat<f64>) {
        let mut v = self.constant.view_mut((r0, r0), (m.nrows(), m.ncols()));
        v += m;
    }

    /// Places `m` at `(r0, c0)` and `m^H` at `(c0, r0)`.
    pub fn constant_offdiag(&mut self, r0: usize, c0: usize, m: &CMat<f64>) {
        {
            let mut v = self.constant.view_mut((r0, c0), (m.nrows(), m.ncols()));
            v += m;
        }
        let mut v = self.constant.view_mut((c0, r0), (m.ncols(), m.nrows()));
        v += m.adjoint();
    }

    /// Adds `x_i · m` on the diagonal block at `r0` (`m` Hermitian).
    pub fn term_diag(&mut self, i: usize, r0: usize, m: &CMat<f64>) {
        let mut e = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                if m[(r, c)] != Complex64::new(0.0, 0.0) {
                    e.push((r0 + r, r0 + c, m[(r, c)]));
                }
            }
        }
        self.terms.push((i, e));
    }

    /// Adds `x_i · m` at `(r0, c0)` and its adjoint at `(c0, r0)`.
    pub fn term_offdiag(&mut self, i: usize, r0: usize, c0: usize, m: &CMat<f64>) {
        let mut e = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v != Complex64::new(0.0, 0.0) {
                    e.push((r0 + r, c0 + c, v));
                    e.push((c0 + c, r0 + r, v.conj()));
                }
            }
        }
        self.terms.push((i, e));
    }

    /// Places the Hermitian variable `x` on the diagonal block at `r0`.
    pub fn herm(&mut self, x: &HermVar, r0: usize) {
        for (i, c) in x.coords() {
            self.term_diag(i, r0, &c.basis(x.n));
        }
    }

    /// Places an affine Hermitian expression on the diagonal block at `r0`.
    pub fn affine(&mut self, a: &AffineHerm, r0: usize) {
        self.constant_diag(r0, &a.constant);
        for (i, b) in &a.terms {
            self.term_diag(*i, r0, b);
        }
    }

    /// Places `U X U^H` on the diagonal block at `r0`.
    pub fn herm_mapped(&mut self, x: &HermVar, r0: usize, u: &CMat<f64>) {
        for (i, c) in x.coords() {
            self.term_diag(i, r0, &(u * c.basis(x.n) * u.adjoint()));
        }
    }

    /// Places the column `w` at rows `r0..`, column `col` (and `w^H` mirrored).
    pub fn cvec_column(&mut self, w: &CVecVar, r0: usize, col: usize) {
        for j in 0..w.n {
            self.terms.push((
                w.re(j),
                vec![(r0 + j, col, Complex64::new(1.0, 0.0)), (col, r0 + j, Complex64::new(1.0, 0.0))],
            ));
            self.terms.push((
                w.im(j),
                vec![(r0 + j, col, Complex64::new(0.0, 1.0)), (col, r0 + j, Complex64::new(0.0, -1.0))],
            ));
        }
    }

    /// Adds `x_i · a` at `(r, c)` (and `(c, r)` when off the diagonal), real `a`.
    pub fn scalar(&mut self, i: usize, r: usize, c: usize, a: f64) {
        let v = Complex64::new(a, 0.0);
        if r == c {
            self.terms.push((i, vec![(r, r, v)]));
        } else {
            self.terms.push((i, vec![(r, c, v), (c, r, v)]));
        }
    }

    fn is_real(&self) -> bool {
        self.constant.iter().all(|z| z.im == 0.0)
            && self.terms.iter().all(|(_, e)| e.iter().all(|t| t.2.im == 0.0))
    }

    fn lower(&self) -> SdpBlock {
        let k = self.dim;
        let real = self.is_real();
        let dim = if real { k } else { 2 * k };
        let embed = |entries: &mut dyn Iterator<Item = (usize, usize, Complex64)>| {
            let mut m = DMatrix::<f64>::zeros(dim, dim);
            for (r, c, v) in entries {
                m[(r, c)] += v.re;
                if !real {
                    m[(r + k, c + k)] += v.re;
                    m[(r + k, c)] += v.im;
                    m[(r, c + k)] -= v.im;
                }
            }
            m
        };
        let mut blk = SdpBlock::new(dim);
        let mut it = (0..k).flat_map(|c| (0..k).map(move |r| (r, c))).map(|(r, c)| (r, c, self.constant[(r, c)]));
        let c0 = embed(&mut it);
        blk.constant = (&c0 + c0.transpose()) * 0.5;
        // merge repeated variables so every coordinate appears once per block
        let mut merged: std::collections::BTreeMap<usize, DMatrix<f64>> = Default::default();
        for (i, e) in &self.terms {
            let m = embed(&mut e.iter().copied());
            merged
                .entry(*i)
                .and_modify(|acc| *acc += &m)
                .or_insert(m);
        }
        for (i, m) in merged {
            let s = SymSparse::from_dense(&m, 0.0);
            if !s.entries.is_empty() {
                blk.terms.push((i, s));
            }
        }
        blk
    }
}

/// Container of variables, objective and constraints.
#[derive(Debug, Clone, Default)]
pub struct Model {
    n: usize,
    objective: LinExpr,
    eqs: Vec<LinExpr>,
    les: Vec<LinExpr>,
    lmis: Vec<Lmi>,
}

#[derive(Debug, Clone)]
pub struct ModelSolution {
    pub x: DVector<f64>,
    pub report: SolveReport,
    /// Dual multipliers of the `≤ 0` constraints in insertion order.
    pub le_duals: Vec<f64>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn scalar(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    pub fn herm(&mut self, n: usize) -> HermVar {
        let v = HermVar {
            offset: self.n,
            n,
        };
        self.n += n * n;
        v
    }

    pub fn cvec(&mut self, n: usize) -> CVecVar {
        let v = CVecVar {
            offset: self.n,
            n,
        };
        self.n += 2 * n;
        v
    }

    pub fn minimize(&mut self, e: LinExpr) {
        self.objective = e;
    }

    /// `e == 0`.
    pub fn eq(&mut self, e: LinExpr) {
        self.eqs.push(e);
    }

    /// `e ≤ 0`.
    pub fn le(&mut self, e: LinExpr) {
        self.les.push(e);
    }

    /// `e ≥ 0`.
    pub fn ge(&mut self, e: LinExpr) {
        self.les.push(e.scale(-1.0));
    }

    pub fn lmi(&mut self, l: Lmi) {
        self.lmis.push(l);
    }

    /// `X ⪰ 0`.
    pub fn psd(&mut self, x: &HermVar) {
        let mut l = Lmi::new(x.n);
        l.herm(x, 0);
        self.lmis.push(l);
    }

    pub fn objective_value(&self, x: &DVector<f64>) -> f64 {
        self.objective.eval(x)
    }

    pub fn to_conic(&self) -> ConicProblem {
        let n = self.n;
        let mut p = ConicProblem::new(n);
        for (i, a) in &self.objective.terms {
            p.c[*i] += a;
        }
        p.a = DMatrix::zeros(self.eqs.len(), n);
        p.b = DVector::zeros(self.eqs.len());
        for (r, e) in self.eqs.iter().enumerate() {
            for (i, a) in &e.terms {
                p.a[(r, *i)] += a;
            }
            p.b[r] = -e.constant;
        }
        p.g_lp = DMatrix::zeros(self.les.len(), n);
        p.h_lp = DVector::zeros(self.les.len());
        for (r, e) in self.les.iter().enumerate() {
            for (i, a) in &e.terms {
                p.g_lp[(r, *i)] += a;
            }
            p.h_lp[r] = -e.constant;
        }
        p.blocks = self.lmis.iter().map(Lmi::lower).collect();
        p
    }

    pub fn solve(&self, opts: &SdpOptions) -> ModelSolution {
        let p = self.to_conic();
        let sol = solve_conic(&p, opts);
        let mut report = sol.report;
        report.objective += self.objective.constant;
        ModelSolution {
            x: sol.x,
            report,
            le_duals: sol.z_lp.iter().copied().collect(),
        }
    }

    /// Largest violation of any constraint at `x` (LMIs by negative minimum
    /// eigenvalue of the real lowering).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let p = self.to_conic();
        let mut v = 0.0f64;
        if p.a.nrows() > 0 {
            v = v.max((&p.a * x - &p.b).amax());
        }
        if p.g_lp.nrows() > 0 {
            v = v.max((&p.g_lp * x - &p.h_lp).max());
        }
        for b in &p.blocks {
            let m = b.eval(x);
            let m = (&m + m.transpose()) * 0.5;
            v = v.max(-m.symmetric_eigenvalues().min());
        }
        v
    }
}
