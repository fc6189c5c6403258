//! Modelling layer: affine Hermitian expressions in real decision variables,
//! linear matrix inequalities over them, compiled to the solver's standard
//! form as its dual.
//!
//! A model with variables `y` and constraints `F_k(y) = F_k0 + Σ_i y_i F_ki ⪰ 0`
//! becomes the standard-form problem with `C = F_0`, `A_i = −F_i` and `b`
//! the objective coefficients, so the model is the dual `max bᵀy`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::problem::{BlockSpec, ConeKind, SdpProblem, Sense, SparseSym};
use super::solver::{solve_with, BlockValue, SdpSolution, SolverOptions, Status};
use super::verify::{verify, Certificate, VerifyReport};
use super::{embed::unembed, SdpError};
use crate::linalg::ComplexMatrix;

type Entries = Vec<(usize, usize, Complex64)>;

fn normalize(mut e: Entries) -> Entries {
    e.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut out: Entries = Vec::with_capacity(e.len());
    for (r, c, v) in e {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out.retain(|x| x.2 != Complex64::new(0.0, 0.0));
    out
}

fn dense_entries(m: &ComplexMatrix) -> Entries {
    let mut e = Vec::new();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let v = m[(r, c)];
            if v != Complex64::new(0.0, 0.0) {
                e.push((r, c, v));
            }
        }
    }
    e
}

/// Real affine expression `constant + Σ coeff·y_var`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    fn var(i: usize) -> Self {
        Self { constant: 0.0, terms: vec![(i, 1.0)] }
    }

    fn merged(mut terms: Vec<(usize, f64)>, constant: f64) -> Self {
        terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, v) in terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => out.push((i, v)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        Self { constant, terms: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        let terms = self.terms.iter().chain(&other.terms).copied().collect();
        Self::merged(terms, self.constant + other.constant)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { constant: self.constant * s, terms: self.terms.iter().map(|&(i, v)| (i, v * s)).collect() }
    }

    pub fn add_constant(&self, c: f64) -> Self {
        Self { constant: self.constant + c, terms: self.terms.clone() }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, v)| v * y[i]).sum::<f64>()
    }
}

/// Hermitian-valued affine expression `F_0 + Σ y_i F_i` of side `n`,
/// stored as sparse triplets (both triangles).
#[derive(Debug, Clone, PartialEq)]
pub struct HermExpr {
    n: usize,
    constant: Entries,
    terms: BTreeMap<usize, Entries>,
}

impl HermExpr {
    pub fn zeros(n: usize) -> Self {
        Self { n, constant: Vec::new(), terms: BTreeMap::new() }
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        assert!(m.is_square(), "expression constants must be square");
        Self { n: m.rows(), constant: dense_entries(m), terms: BTreeMap::new() }
    }

    /// `lin · 𝟙_n`.
    pub fn identity_times(lin: &LinExpr, n: usize) -> Self {
        let diag = |s: f64| -> Entries { (0..n).map(|k| (k, k, Complex64::new(s, 0.0))).collect() };
        let constant = if lin.constant != 0.0 { diag(lin.constant) } else { Vec::new() };
        let terms = lin.terms.iter().map(|&(i, v)| (i, diag(v))).collect();
        Self { n, constant, terms }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn map_all(&self, n: usize, f: impl Fn(&Entries) -> Entries) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(&i, e)| (i, normalize(f(e))))
            .filter(|(_, e)| !e.is_empty())
            .collect();
        Self { n, constant: normalize(f(&self.constant)), terms }
    }

    fn remap(&self, n: usize, f: impl Fn(usize, usize) -> Option<(usize, usize)>) -> Self {
        self.map_all(n, |e| e.iter().filter_map(|&(r, c, v)| f(r, c).map(|(a, b)| (a, b, v))).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "expression sizes differ");
        let mut terms = self.terms.clone();
        for (i, e) in &other.terms {
            let slot = terms.entry(*i).or_default();
            slot.extend_from_slice(e);
            *slot = normalize(std::mem::take(slot));
        }
        terms.retain(|_, e| !e.is_empty());
        let constant = normalize(self.constant.iter().chain(&other.constant).copied().collect());
        Self { n: self.n, constant, terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_all(self.n, |e| e.iter().map(|&(r, c, v)| (r, c, v * s)).collect())
    }

    pub fn add_matrix(&self, m: &ComplexMatrix) -> Self {
        self.add(&Self::from_matrix(m))
    }

    /// Partial transpose on the second factor of `dim_a ⊗ dim_b`.
    pub fn partial_transpose(&self, dim_a: usize, dim_b: usize) -> Self {
        assert_eq!(dim_a * dim_b, self.n, "bipartite dimensions do not match expression size");
        self.remap(self.n, |r, c| {
            let (i, j) = (r / dim_b, r % dim_b);
            let (k, l) = (c / dim_b, c % dim_b);
            Some((i * dim_b + l, k * dim_b + j))
        })
    }

    /// Trace over the second factor, leaving an expression of side `dim_a`.
    pub fn partial_trace_b(&self, dim_a: usize, dim_b: usize) -> Self {
        assert_eq!(dim_a * dim_b, self.n, "bipartite dimensions do not match expression size");
        self.remap(dim_a, |r, c| (r % dim_b == c % dim_b).then(|| (r / dim_b, c / dim_b)))
    }

    /// Trace over the first factor, leaving an expression of side `dim_b`.
    pub fn partial_trace_a(&self, dim_a: usize, dim_b: usize) -> Self {
        assert_eq!(dim_a * dim_b, self.n, "bipartite dimensions do not match expression size");
        self.remap(dim_b, |r, c| (r / dim_b == c / dim_b).then(|| (r % dim_b, c % dim_b)))
    }

    /// `self ⊗ 𝟙_d`.
    pub fn kron_identity(&self, d: usize) -> Self {
        self.map_all(self.n * d, |e| {
            e.iter().flat_map(|&(r, c, v)| (0..d).map(move |k| (r * d + k, c * d + k, v))).collect()
        })
    }

    /// `V·self·V†` for an `n'×n` matrix `V`. Sparse columns of `V` keep the result sparse.
    pub fn conjugate(&self, v: &ComplexMatrix) -> Self {
        assert_eq!(v.cols(), self.n, "conjugating matrix has the wrong number of columns");
        let support: Vec<Vec<(usize, Complex64)>> = (0..v.cols())
            .map(|a| (0..v.rows()).filter_map(|i| (v[(i, a)].norm() > 0.0).then(|| (i, v[(i, a)]))).collect())
            .collect();
        self.map_all(v.rows(), |e| {
            let mut out = Vec::new();
            for &(a, b, val) in e {
                for &(i, via) in &support[a] {
                    for &(j, vjb) in &support[b] {
                        out.push((i, j, val * via * vjb.conj()));
                    }
                }
            }
            out
        })
    }

    /// `Re Tr(self · m)` as a linear expression.
    pub fn trace_with(&self, m: &ComplexMatrix) -> LinExpr {
        assert_eq!(m.rows(), self.n, "matrix size does not match expression");
        let f = |e: &Entries| -> f64 { e.iter().map(|&(r, c, v)| (v * m[(c, r)]).re).sum() };
        LinExpr::merged(self.terms.iter().map(|(&i, e)| (i, f(e))).collect(), f(&self.constant))
    }

    pub fn trace(&self) -> LinExpr {
        let f = |e: &Entries| -> f64 { e.iter().filter(|x| x.0 == x.1).map(|x| x.2.re).sum() };
        LinExpr::merged(self.terms.iter().map(|(&i, e)| (i, f(e))).collect(), f(&self.constant))
    }

    /// The matrix at the point `y`.
    pub fn eval(&self, y: &[f64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.n, self.n);
        for &(r, c, v) in &self.constant {
            m[(r, c)] += v;
        }
        for (&i, e) in &self.terms {
            for &(r, c, v) in e {
                m[(r, c)] += v * y[i];
            }
        }
        m
    }

    fn has_imaginary(&self, tol: f64) -> bool {
        std::iter::once(&self.constant)
            .chain(self.terms.values())
            .any(|e| e.iter().any(|x| x.2.im.abs() > tol))
    }
}

fn to_sparse(e: &Entries, n: usize, real: bool) -> SparseSym {
    let mut s = SparseSym::new();
    for &(r, c, v) in e.iter().filter(|x| x.0 <= x.1) {
        if v.re != 0.0 {
            s.entries.push((r, c, v.re));
            if !real {
                s.entries.push((r + n, c + n, v.re));
            }
        }
        if !real && r != c && v.im != 0.0 {
            s.entries.push((r, c + n, -v.im));
            s.entries.push((c, r + n, v.im));
        }
    }
    s.compress();
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Goal {
    Maximize,
    Minimize,
}

/// Collection of variables, matrix inequalities and an objective.
///
/// In a real model every variable matrix is real symmetric and all data must
/// be real; in a complex model Hermitian blocks are embedded at twice the size.
#[derive(Debug, Clone)]
pub struct Model {
    real: bool,
    nvars: usize,
    psd: Vec<HermExpr>,
    nonneg: Vec<LinExpr>,
    objective: LinExpr,
    goal: Goal,
}

/// A solved model with its verification report.
#[derive(Debug, Clone)]
pub struct ModelSolution {
    /// Objective at the returned feasible point.
    pub value: f64,
    /// Objective bound from the other side of the duality gap.
    pub bound: f64,
    pub y: Vec<f64>,
    pub sdp: SdpSolution,
    pub report: VerifyReport,
    real: bool,
}

impl ModelSolution {
    pub fn eval(&self, e: &HermExpr) -> ComplexMatrix {
        e.eval(&self.y)
    }

    pub fn eval_lin(&self, e: &LinExpr) -> f64 {
        e.eval(&self.y)
    }

    pub fn certificate(&self) -> Certificate {
        Certificate::from(&self.report)
    }

    /// Dual multiplier of the `k`-th matrix inequality.
    pub fn multiplier(&self, k: usize) -> ComplexMatrix {
        match &self.sdp.x[k] {
            BlockValue::Dense(m) if self.real => ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
                Complex64::new(m[(r, c)], 0.0)
            }),
            BlockValue::Dense(m) => unembed(m).scale(2.0),
            BlockValue::Diagonal(d) => ComplexMatrix::from_diag(d),
        }
    }
}

impl Model {
    pub fn new(real: bool) -> Self {
        Self {
            real,
            nvars: 0,
            psd: Vec::new(),
            nonneg: Vec::new(),
            objective: LinExpr::default(),
            goal: Goal::Maximize,
        }
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn num_vars(&self) -> usize {
        self.nvars
    }

    fn fresh(&mut self) -> usize {
        self.nvars += 1;
        self.nvars - 1
    }

    /// A free real scalar.
    pub fn scalar(&mut self) -> LinExpr {
        LinExpr::var(self.fresh())
    }

    /// A free Hermitian (real symmetric in a real model) matrix variable.
    pub fn herm(&mut self, n: usize) -> HermExpr {
        self.herm_impl(n, None)
    }

    /// A Hermitian variable constrained to have trace `t`, by eliminating
    /// its last diagonal entry.
    pub fn herm_with_trace(&mut self, n: usize, t: f64) -> HermExpr {
        assert!(n >= 1);
        self.herm_impl(n, Some(t))
    }

    fn herm_impl(&mut self, n: usize, trace: Option<f64>) -> HermExpr {
        let one = Complex64::new(1.0, 0.0);
        let mut e = HermExpr::zeros(n);
        for r in 0..n {
            for c in r..n {
                if r == c {
                    match trace {
                        Some(t) if r == n - 1 => e.constant.push((r, r, Complex64::new(t, 0.0))),
                        Some(_) => {
                            let i = self.fresh();
                            e.terms.insert(i, vec![(r, r, one), (n - 1, n - 1, -one)]);
                        }
                        None => {
                            let i = self.fresh();
                            e.terms.insert(i, vec![(r, r, one)]);
                        }
                    }
                    continue;
                }
                let i = self.fresh();
                e.terms.insert(i, vec![(r, c, one), (c, r, one)]);
                if !self.real {
                    let j = self.fresh();
                    let im = Complex64::new(0.0, 1.0);
                    e.terms.insert(j, vec![(r, c, im), (c, r, -im)]);
                }
            }
        }
        e
    }

    /// Requires `e ⪰ 0`.
    pub fn psd(&mut self, e: HermExpr) {
        self.psd.push(e);
    }

    /// Requires `e ≥ 0`.
    pub fn nonneg(&mut self, e: LinExpr) {
        self.nonneg.push(e);
    }

    pub fn maximize(&mut self, obj: LinExpr) {
        self.objective = obj;
        self.goal = Goal::Maximize;
    }

    pub fn minimize(&mut self, obj: LinExpr) {
        self.objective = obj;
        self.goal = Goal::Minimize;
    }

    pub fn compile(&self) -> Result<SdpProblem, SdpError> {
        let mut blocks = Vec::new();
        for (k, e) in self.psd.iter().enumerate() {
            if self.real && e.has_imaginary(1e-12) {
                return Err(SdpError::IllPosed(format!("matrix inequality {k} has complex data in a real model")));
            }
            let size = if self.real { e.n } else { 2 * e.n };
            blocks.push(BlockSpec { size, kind: if size == 1 { ConeKind::Nonneg } else { ConeKind::Psd } });
        }
        if !self.nonneg.is_empty() {
            blocks.push(BlockSpec { size: self.nonneg.len(), kind: ConeKind::Nonneg });
        }
        let mut p = SdpProblem::new(blocks, Sense::Min);
        let mut a: Vec<Vec<(usize, SparseSym)>> = vec![Vec::new(); self.nvars];
        for (k, e) in self.psd.iter().enumerate() {
            p.objective[k] = to_sparse(&e.constant, e.n, self.real);
            for (&i, entries) in &e.terms {
                let s = to_sparse(entries, e.n, self.real).entries;
                let s = SparseSym { entries: s.into_iter().map(|(r, c, v)| (r, c, -v)).collect() };
                if !s.is_empty() {
                    a[i].push((k, s));
                }
            }
        }
        if !self.nonneg.is_empty() {
            let blk = self.psd.len();
            let mut c = SparseSym::new();
            let mut per_var: BTreeMap<usize, SparseSym> = BTreeMap::new();
            for (r, e) in self.nonneg.iter().enumerate() {
                if e.constant != 0.0 {
                    c.entries.push((r, r, e.constant));
                }
                for &(i, v) in &e.terms {
                    per_var.entry(i).or_default().entries.push((r, r, -v));
                }
            }
            p.objective[blk] = c;
            for (i, s) in per_var {
                a[i].push((blk, s));
            }
        }
        let sign = if self.goal == Goal::Maximize { 1.0 } else { -1.0 };
        let mut b = vec![0.0; self.nvars];
        for &(i, v) in &self.objective.terms {
            b[i] += sign * v;
        }
        for (i, (ai, bi)) in a.into_iter().zip(b).enumerate() {
            if ai.is_empty() {
                return Err(SdpError::IllPosed(format!("variable {i} appears in no constraint")));
            }
            p.add_constraint(ai, bi);
        }
        Ok(p)
    }

    /// Compiles, solves and verifies. Fails unless the solver reports an
    /// optimal point that also passes verification at `opts.tol`.
    pub fn solve(&self, opts: &SolverOptions) -> Result<ModelSolution, SdpError> {
        let p = self.compile()?;
        let s = solve_with(&p, opts)?;
        if s.status != Status::Optimal {
            return Err(SdpError::SolverFailure {
                status: s.status,
                gap: s.gap,
                primal_residual: s.primal_residual,
                dual_residual: s.dual_residual,
                iterations: s.iterations,
            });
        }
        let report = verify(&p, &s, opts.tol);
        if !report.passed() {
            return Err(SdpError::Verification(report.failures().join(", ")));
        }
        let (value, bound) = match self.goal {
            Goal::Maximize => (s.dual_value + self.objective.constant, s.primal_value + self.objective.constant),
            Goal::Minimize => (self.objective.constant - s.dual_value, self.objective.constant - s.primal_value),
        };
        Ok(ModelSolution { value, bound, y: s.y.clone(), sdp: s, report, real: self.real })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::with_tol(1e-9)
    }

    #[test]
    fn partial_maps_match_dense_versions() {
        let mut m = Model::new(false);
        let x = m.herm(6);
        let y: Vec<f64> = (0..m.num_vars()).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let dense = crate::linalg::BipartiteOperator::new(2, 3, x.eval(&y)).unwrap();
        let pt = x.partial_transpose(2, 3).eval(&y);
        assert!((&pt - dense.partial_transpose().unwrap().matrix()).max_abs() < 1e-14);
        let trb = x.partial_trace_b(2, 3).eval(&y);
        assert!((&trb - &dense.partial_trace(crate::linalg::Subsystem::A).unwrap()).max_abs() < 1e-14);
        let tra = x.partial_trace_a(2, 3).eval(&y);
        assert!((&tra - &dense.partial_trace(crate::linalg::Subsystem::B).unwrap()).max_abs() < 1e-14);
        let k = x.kron_identity(2).eval(&y);
        let oracle = crate::linalg::tensor(dense.matrix(), &ComplexMatrix::identity(2));
        assert!((&k - &oracle).max_abs() < 1e-14);
    }

    #[test]
    fn fixed_trace_variable() {
        let mut m = Model::new(true);
        let x = m.herm_with_trace(3, 1.0);
        let y = vec![0.3; m.num_vars()];
        assert!((x.eval(&y).trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn minimal_trace_above_identity() {
        let mut m = Model::new(true);
        let x = m.herm(2);
        m.psd(x.sub(&HermExpr::from_matrix(&ComplexMatrix::identity(2))));
        m.minimize(x.trace());
        let s = m.solve(&opts()).unwrap();
        assert!((s.value - 2.0).abs() < 1e-7);
        assert!((&s.eval(&x) - &ComplexMatrix::identity(2)).max_abs() < 1e-6);
    }

    #[test]
    fn complex_model_top_eigenvalue() {
        // max Re Tr(Hρ) over unit-trace ρ ⪰ 0 is λ_max(H)
        let i = Complex64::new(0.0, 1.0);
        let h = ComplexMatrix::from_row_major(
            2,
            2,
            vec![Complex64::new(1.0, 0.0), i, -i, Complex64::new(-1.0, 0.0)],
        )
        .unwrap();
        let mut m = Model::new(false);
        let rho = m.herm_with_trace(2, 1.0);
        m.psd(rho.clone());
        m.maximize(rho.trace_with(&h));
        let s = m.solve(&opts()).unwrap();
        assert!((s.value - 2f64.sqrt()).abs() < 1e-7, "{}", s.value);
    }

    #[test]
    fn real_model_rejects_complex_data() {
        let mut m = Model::new(true);
        let x = m.herm(2);
        let i = Complex64::new(0.0, 1.0);
        let z = Complex64::new(0.0, 0.0);
        let c = ComplexMatrix::from_row_major(2, 2, vec![z, i, -i, z]).unwrap();
        m.psd(x.add_matrix(&c));
        m.minimize(x.trace());
        assert!(matches!(m.compile(), Err(SdpError::IllPosed(_))));
    }
}
