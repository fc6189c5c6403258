//! Primal–dual interior-point method with HKM search direction and
//! Mehrotra predictor–corrector, started from an infeasible point.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chol::{cholesky_in_place, cholesky_solve};
use super::problem::{ConeKind, SdpProblem, Sense};
use super::SdpError;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e10;
/// Iterative refinement passes on each Schur solve.
const REFINE_STEPS: usize = 2;
/// Fraction of the gap tolerance below which `μ·ν` is not driven.
const MU_FLOOR: f64 = 0.05;
/// Environment variable overriding [`DEFAULT_TOL`].
pub const TOL_ENV: &str = "TB_SDP_TOL";

/// Solver tolerance: `TB_SDP_TOL` if set to a positive number, else [`DEFAULT_TOL`].
pub fn default_tol() -> f64 {
    std::env::var(TOL_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|t| t.is_finite() && *t > 0.0)
        .unwrap_or(DEFAULT_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Iterates larger than this are taken as evidence of infeasibility.
    pub divergence_bound: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: default_tol(), max_iter: DEFAULT_MAX_ITER, divergence_bound: DEFAULT_DIVERGENCE_BOUND }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    /// Primal infeasibility suspected (dual iterates diverged).
    Infeasible,
    /// Primal unboundedness suspected (primal iterates diverged).
    Unbounded,
    /// Iteration cap or numerical breakdown; residuals are attached.
    MaxIter,
}

/// A block of a primal or dual point.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockValue {
    Dense(DMatrix<f64>),
    Diagonal(Vec<f64>),
}

impl BlockValue {
    fn scaled_identity(kind: ConeKind, n: usize, s: f64) -> Self {
        match kind {
            ConeKind::Psd => BlockValue::Dense(DMatrix::identity(n, n) * s),
            ConeKind::Nonneg => BlockValue::Diagonal(vec![s; n]),
        }
    }

    fn zeros(kind: ConeKind, n: usize) -> Self {
        Self::scaled_identity(kind, n, 0.0)
    }

    pub fn inner(&self, other: &Self) -> f64 {
        match (self, other) {
            (BlockValue::Dense(a), BlockValue::Dense(b)) => a.dot(b),
            (BlockValue::Diagonal(a), BlockValue::Diagonal(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            _ => panic!("block kind mismatch"),
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            BlockValue::Dense(a) => a.amax(),
            BlockValue::Diagonal(a) => a.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    fn axpy(&mut self, alpha: f64, other: &Self) {
        match (self, other) {
            (BlockValue::Dense(a), BlockValue::Dense(b)) => *a += b * alpha,
            (BlockValue::Diagonal(a), BlockValue::Diagonal(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += alpha * y;
                }
            }
            _ => panic!("block kind mismatch"),
        }
    }

    fn negated(&self) -> Self {
        match self {
            BlockValue::Dense(a) => BlockValue::Dense(-a),
            BlockValue::Diagonal(a) => BlockValue::Diagonal(a.iter().map(|x| -x).collect()),
        }
    }

    /// Smallest eigenvalue (smallest entry for diagonal blocks).
    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            BlockValue::Dense(a) => {
                let sym = (a + a.transpose()) * 0.5;
                SymmetricEigen::new(sym).eigenvalues.min()
            }
            BlockValue::Diagonal(a) => a.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// Result of [`solve`].
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: Status,
    /// Primal objective `⟨C, X⟩` in the problem's own sense.
    pub primal_value: f64,
    /// Dual objective `bᵀy`.
    pub dual_value: f64,
    /// Relative duality gap `|p − d| / (1 + |p| + |d|)`.
    pub gap: f64,
    pub x: Vec<BlockValue>,
    pub y: Vec<f64>,
    pub z: Vec<BlockValue>,
    pub iterations: usize,
    /// max_i |⟨A_i, X⟩ − b_i| / max(1, |b_i|).
    pub primal_residual: f64,
    /// ‖C − Z − Σ y_i A_i‖_F / (1 + ‖C‖_F), sign-adjusted for the sense.
    pub dual_residual: f64,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Midpoint of primal and dual values.
    pub fn value(&self) -> f64 {
        0.5 * (self.primal_value + self.dual_value)
    }
}

pub(crate) fn relative_gap(p: f64, d: f64) -> f64 {
    (p - d).abs() / (1.0 + p.abs() + d.abs())
}

/// Constraint data reorganised per block, entries sorted by constraint index.
struct BlockOps {
    size: usize,
    kind: ConeKind,
    con: Vec<usize>,
    row: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
    /// `starts[i]..starts[i+1]` are the entries of constraint `i`.
    starts: Vec<usize>,
    c: BlockValue,
}

impl BlockOps {
    fn entries_of(&self, i: usize) -> std::ops::Range<usize> {
        self.starts[i]..self.starts[i + 1]
    }

    /// Adds ⟨A_i, Y⟩ into `out[i]` for every constraint.
    fn apply(&self, y: &BlockValue, out: &mut [f64]) {
        match y {
            BlockValue::Dense(m) => {
                let n = self.size;
                let s = m.as_slice();
                for e in 0..self.con.len() {
                    let (r, c) = (self.row[e], self.col[e]);
                    let v = if r == c { s[r + r * n] } else { s[r + c * n] + s[c + r * n] };
                    out[self.con[e]] += self.val[e] * v;
                }
            }
            BlockValue::Diagonal(d) => {
                for e in 0..self.con.len() {
                    out[self.con[e]] += self.val[e] * d[self.row[e]];
                }
            }
        }
    }

    /// Σ_i w_i A_i for this block.
    fn adjoint(&self, w: &[f64]) -> BlockValue {
        let mut out = BlockValue::zeros(self.kind, self.size);
        match &mut out {
            BlockValue::Dense(m) => {
                for e in 0..self.con.len() {
                    let v = self.val[e] * w[self.con[e]];
                    let (r, c) = (self.row[e], self.col[e]);
                    m[(r, c)] += v;
                    if r != c {
                        m[(c, r)] += v;
                    }
                }
            }
            BlockValue::Diagonal(d) => {
                for e in 0..self.con.len() {
                    d[self.row[e]] += self.val[e] * w[self.con[e]];
                }
            }
        }
        out
    }

    /// Adds `⟨A_i, X A_j Z⁻¹⟩` for all `i <= j` into `out[i]`.
    fn schur_column(&self, j: usize, x: &BlockValue, zinv: &BlockValue, out: &mut [f64], work: &mut Vec<usize>) {
        let own = self.entries_of(j);
        if own.is_empty() {
            return;
        }
        let upto = self.starts[j + 1];
        let n = self.size;
        match (x, zinv) {
            (BlockValue::Diagonal(xd), BlockValue::Diagonal(zd)) => {
                // A_j is diagonal, so X A_j Z⁻¹ is too
                let mut w: Vec<(usize, f64)> = Vec::with_capacity(own.len());
                for e in own {
                    let k = self.row[e];
                    w.push((k, self.val[e] * xd[k] * zd[k]));
                }
                for e in 0..upto {
                    let k = self.row[e];
                    for &(kk, wv) in &w {
                        if kk == k {
                            out[self.con[e]] += self.val[e] * wv;
                        }
                    }
                }
            }
            (BlockValue::Dense(xm), BlockValue::Dense(zm)) => {
                let xs = xm.as_slice();
                let zs = zm.as_slice();
                // T = A_j Z⁻¹ has nonzero rows only where A_j does
                work.clear();
                work.resize(n, usize::MAX);
                let mut rows: Vec<usize> = Vec::new();
                let mut t: Vec<f64> = Vec::new();
                let mut add_row = |r: usize, src: usize, v: f64, work: &mut Vec<usize>| {
                    let slot = if work[r] == usize::MAX {
                        work[r] = rows.len();
                        rows.push(r);
                        t.extend(std::iter::repeat_n(0.0, n));
                        rows.len() - 1
                    } else {
                        work[r]
                    };
                    let trow = &mut t[slot * n..(slot + 1) * n];
                    let zrow = &zs[src * n..(src + 1) * n];
                    for (a, b) in trow.iter_mut().zip(zrow) {
                        *a += v * b;
                    }
                };
                for e in own {
                    let (r, c, v) = (self.row[e], self.col[e], self.val[e]);
                    add_row(r, c, v, work);
                    if r != c {
                        add_row(c, r, v, work);
                    }
                }
                let nr = rows.len();
                let cost_direct = upto * 2 * nr;
                let cost_dense = n * n * nr + upto;
                if cost_direct <= cost_dense {
                    for e in 0..upto {
                        let (p, q) = (self.row[e], self.col[e]);
                        let mut fpq = 0.0;
                        let mut fqp = 0.0;
                        for (s, &r) in rows.iter().enumerate() {
                            let trow = &t[s * n..(s + 1) * n];
                            fpq += xs[p + r * n] * trow[q];
                            if p != q {
                                fqp += xs[q + r * n] * trow[p];
                            }
                        }
                        out[self.con[e]] += self.val[e] * (fpq + fqp);
                    }
                } else {
                    // F = X[:, rows] · T, column-major n×n
                    let mut f = vec![0.0; n * n];
                    for (s, &r) in rows.iter().enumerate() {
                        let xcol = &xs[r * n..(r + 1) * n];
                        let trow = &t[s * n..(s + 1) * n];
                        for (qq, &tq) in trow.iter().enumerate() {
                            if tq == 0.0 {
                                continue;
                            }
                            let fcol = &mut f[qq * n..(qq + 1) * n];
                            for (fv, xv) in fcol.iter_mut().zip(xcol) {
                                *fv += xv * tq;
                            }
                        }
                    }
                    for e in 0..upto {
                        let (p, q) = (self.row[e], self.col[e]);
                        let v = if p == q { f[p + p * n] } else { f[p + q * n] + f[q + p * n] };
                        out[self.con[e]] += self.val[e] * v;
                    }
                }
            }
            _ => panic!("block kind mismatch"),
        }
    }
}

struct Model {
    blocks: Vec<BlockOps>,
    b: Vec<f64>,
    m: usize,
    nu: usize,
    c_norm: f64,
}

impl Model {
    fn new(p: &SdpProblem) -> Self {
        let m = p.constraints.len();
        let flip = if p.sense == Sense::Max { -1.0 } else { 1.0 };
        let mut blocks: Vec<BlockOps> = p
            .blocks
            .iter()
            .zip(&p.objective)
            .map(|(spec, cobj)| {
                let c = match spec.kind {
                    ConeKind::Psd => BlockValue::Dense(cobj.to_dense(spec.size) * flip),
                    ConeKind::Nonneg => {
                        let mut d = vec![0.0; spec.size];
                        for &(r, _, v) in &cobj.entries {
                            d[r] += flip * v;
                        }
                        BlockValue::Diagonal(d)
                    }
                };
                BlockOps {
                    size: spec.size,
                    kind: spec.kind,
                    con: Vec::new(),
                    row: Vec::new(),
                    col: Vec::new(),
                    val: Vec::new(),
                    starts: vec![0; m + 1],
                    c,
                }
            })
            .collect();
        for (i, con) in p.constraints.iter().enumerate() {
            for (blk, a) in &con.a {
                let mut a = a.clone();
                a.compress();
                let ops = &mut blocks[*blk];
                for &(r, c, v) in &a.entries {
                    ops.con.push(i);
                    ops.row.push(r);
                    ops.col.push(c);
                    ops.val.push(v);
                }
            }
            for ops in blocks.iter_mut() {
                ops.starts[i + 1] = ops.con.len();
            }
        }
        let c_norm = blocks.iter().map(|b| b.c.frobenius_sq()).sum::<f64>().sqrt();
        let nu = p.cone_dimension();
        Self { blocks, b: p.constraints.iter().map(|c| c.b).collect(), m, nu, c_norm }
    }

    fn apply(&self, x: &[BlockValue]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (ops, xb) in self.blocks.iter().zip(x) {
            ops.apply(xb, &mut out);
        }
        out
    }

    fn adjoint(&self, w: &[f64]) -> Vec<BlockValue> {
        self.blocks.iter().map(|ops| ops.adjoint(w)).collect()
    }

    fn schur(&self, x: &[BlockValue], zinv: &[BlockValue]) -> DMatrix<f64> {
        let m = self.m;
        let cols: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map_init(Vec::new, |work, j| {
                let mut col = vec![0.0; j + 1];
                for (b, ops) in self.blocks.iter().enumerate() {
                    ops.schur_column(j, &x[b], &zinv[b], &mut col, work);
                }
                col
            })
            .collect();
        let mut mat = DMatrix::zeros(m, m);
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                mat[(i, j)] = v;
                mat[(j, i)] = v;
            }
        }
        mat
    }

    fn objective(&self, x: &[BlockValue]) -> f64 {
        self.blocks.iter().zip(x).map(|(ops, xb)| ops.c.inner(xb)).sum()
    }
}

fn inner_all(a: &[BlockValue], b: &[BlockValue]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u.inner(v)).sum()
}

fn cholesky_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    sym.cholesky().map(|c| c.l())
}

/// Inverse of a positive definite block.
fn inverse_pd(v: &BlockValue) -> Option<BlockValue> {
    match v {
        BlockValue::Dense(m) => {
            let sym = (m + m.transpose()) * 0.5;
            let inv = sym.cholesky()?.inverse();
            Some(BlockValue::Dense((&inv + inv.transpose()) * 0.5))
        }
        BlockValue::Diagonal(d) => {
            if d.iter().any(|&x| x <= 0.0) {
                None
            } else {
                Some(BlockValue::Diagonal(d.iter().map(|x| 1.0 / x).collect()))
            }
        }
    }
}

/// Largest α with `v + α·dv` in the cone (∞ if unrestricted).
fn max_step(v: &BlockValue, dv: &BlockValue) -> Option<f64> {
    match (v, dv) {
        (BlockValue::Dense(m), BlockValue::Dense(d)) => {
            let l = cholesky_lower(m)?;
            let w1 = l.solve_lower_triangular(d)?;
            let w = l.solve_lower_triangular(&w1.transpose())?;
            let w = (&w + w.transpose()) * 0.5;
            let lmin = SymmetricEigen::new(w).eigenvalues.min();
            Some(if lmin >= 0.0 { f64::INFINITY } else { -1.0 / lmin })
        }
        (BlockValue::Diagonal(x), BlockValue::Diagonal(d)) => Some(
            x.iter()
                .zip(d)
                .filter(|(_, &dd)| dd < 0.0)
                .map(|(&xx, &dd)| -xx / dd)
                .fold(f64::INFINITY, f64::min),
        ),
        _ => None,
    }
}

fn max_step_all(v: &[BlockValue], dv: &[BlockValue]) -> Option<f64> {
    let mut a = f64::INFINITY;
    for (x, d) in v.iter().zip(dv) {
        a = a.min(max_step(x, d)?);
    }
    Some(a)
}

/// `sym(P·Q·R)` for dense blocks, `P∘Q∘R` for diagonal ones.
fn sym_triple(p: &BlockValue, q: &BlockValue, r: &BlockValue) -> BlockValue {
    match (p, q, r) {
        (BlockValue::Dense(a), BlockValue::Dense(b), BlockValue::Dense(c)) => {
            let t = a * b * c;
            BlockValue::Dense((&t + t.transpose()) * 0.5)
        }
        (BlockValue::Diagonal(a), BlockValue::Diagonal(b), BlockValue::Diagonal(c)) => {
            BlockValue::Diagonal(a.iter().zip(b).zip(c).map(|((x, y), z)| x * y * z).collect())
        }
        _ => panic!("block kind mismatch"),
    }
}

fn triple_plain(p: &BlockValue, q: &BlockValue, r: &BlockValue) -> BlockValue {
    match (p, q, r) {
        (BlockValue::Dense(a), BlockValue::Dense(b), BlockValue::Dense(c)) => BlockValue::Dense(a * b * c),
        _ => sym_triple(p, q, r),
    }
}

struct Residuals {
    rp: Vec<f64>,
    rd: Vec<BlockValue>,
    pinf: f64,
    dinf: f64,
    pobj: f64,
    dobj: f64,
    gap: f64,
}

fn residuals(model: &Model, x: &[BlockValue], y: &[f64], z: &[BlockValue]) -> Residuals {
    let ax = model.apply(x);
    let rp: Vec<f64> = model.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let pinf = rp
        .iter()
        .zip(&model.b)
        .map(|(r, b)| r.abs() / b.abs().max(1.0))
        .fold(0.0, f64::max);
    let aty = model.adjoint(y);
    let rd: Vec<BlockValue> = model
        .blocks
        .iter()
        .zip(z.iter().zip(&aty))
        .map(|(ops, (zb, ab))| {
            let mut r = ops.c.clone();
            r.axpy(-1.0, zb);
            r.axpy(-1.0, ab);
            r
        })
        .collect();
    let dinf = rd.iter().map(|r| r.frobenius_sq()).sum::<f64>().sqrt() / (1.0 + model.c_norm);
    let pobj = model.objective(x);
    let dobj: f64 = model.b.iter().zip(y).map(|(b, v)| b * v).sum();
    Residuals { rp, rd, pinf, dinf, pobj, dobj, gap: relative_gap(pobj, dobj) }
}

struct Direction {
    dx: Vec<BlockValue>,
    dy: Vec<f64>,
    dz: Vec<BlockValue>,
}

fn direction(
    model: &Model,
    schur: &DMatrix<f64>,
    chol_m: &DMatrix<f64>,
    x: &[BlockValue],
    zinv: &[BlockValue],
    res: &Residuals,
    rc: &[BlockValue],
) -> Direction {
    // M dy = rp − A(Rc) + A(X Rd Z⁻¹)
    let a_rc = model.apply(rc);
    let xrz: Vec<BlockValue> = x
        .iter()
        .zip(&res.rd)
        .zip(zinv)
        .map(|((xb, rb), zb)| triple_plain(xb, rb, zb))
        .collect();
    let a_xrz = model.apply(&xrz);
    let rhs: Vec<f64> = (0..model.m).map(|i| res.rp[i] - a_rc[i] + a_xrz[i]).collect();
    let mut dy = rhs.clone();
    cholesky_solve(chol_m, &mut dy);
    // the factor may be regularised; refine against the exact Schur matrix
    for _ in 0..REFINE_STEPS {
        let mdy = schur * DVector::from_column_slice(&dy);
        let mut r: Vec<f64> = rhs.iter().zip(mdy.iter()).map(|(a, b)| a - b).collect();
        cholesky_solve(chol_m, &mut r);
        dy.iter_mut().zip(&r).for_each(|(d, c)| *d += c);
    }
    let aty = model.adjoint(&dy);
    let dz: Vec<BlockValue> = res
        .rd
        .iter()
        .zip(&aty)
        .map(|(r, a)| {
            let mut d = r.clone();
            d.axpy(-1.0, a);
            d
        })
        .collect();
    let dx: Vec<BlockValue> = rc
        .iter()
        .zip(x.iter().zip(dz.iter().zip(zinv)))
        .map(|(rcb, (xb, (dzb, zb)))| {
            let mut d = rcb.clone();
            d.axpy(-1.0, &sym_triple(xb, dzb, zb));
            d
        })
        .collect();
    Direction { dx, dy, dz }
}

fn initial_point(model: &Model) -> (Vec<BlockValue>, Vec<BlockValue>) {
    let mut x = Vec::with_capacity(model.blocks.len());
    let mut z = Vec::with_capacity(model.blocks.len());
    for ops in &model.blocks {
        let n = ops.size as f64;
        let mut a_norms = vec![0.0f64; model.m];
        for e in 0..ops.con.len() {
            let v = ops.val[e];
            a_norms[ops.con[e]] += if ops.row[e] == ops.col[e] { v * v } else { 2.0 * v * v };
        }
        let mut xi: f64 = 10f64.max(n.sqrt());
        let mut eta: f64 = 10f64.max(n.sqrt()).max(ops.c.frobenius_sq().sqrt());
        for (i, &sq) in a_norms.iter().enumerate() {
            if sq > 0.0 {
                let na = sq.sqrt();
                xi = xi.max(n.sqrt() * (1.0 + model.b[i].abs()) / (1.0 + na));
                eta = eta.max(na);
            }
        }
        x.push(BlockValue::scaled_identity(ops.kind, ops.size, xi));
        z.push(BlockValue::scaled_identity(ops.kind, ops.size, eta));
    }
    (x, z)
}

/// Solves `p` to relative tolerance `tol`.
///
/// Reports `Optimal` only when every constraint residual, the dual residual
/// and the relative gap are all within `tol`.
pub fn solve(p: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution, SdpError> {
    solve_with(p, &SolverOptions { tol, max_iter, ..SolverOptions::default() })
}

pub fn solve_with(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution, SdpError> {
    if !(opts.tol > 0.0) {
        return Err(SdpError::IllPosed(format!("tolerance must be positive, got {}", opts.tol)));
    }
    p.validate()?;
    if let Some(i) = p.constraints.iter().position(|c| c.a.iter().all(|(_, s)| s.entries.iter().all(|e| e.2 == 0.0))) {
        return Err(SdpError::IllPosed(format!("constraint {i} has a zero coefficient matrix")));
    }
    let model = Model::new(p);
    let nu = model.nu as f64;
    let (mut x, mut z) = initial_point(&model);
    let mut y = vec![0.0; model.m];
    let mut gamma: f64 = 0.9;
    let mut status = Status::MaxIter;
    let mut iterations = 0;
    let mut stall = 0;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let res = residuals(&model, &x, &y, &z);
        log::trace!(
            "iter {iter:3} pobj {:+.10e} dobj {:+.10e} gap {:.2e} pinf {:.2e} dinf {:.2e}",
            res.pobj,
            res.dobj,
            res.gap,
            res.pinf,
            res.dinf
        );
        if res.gap <= opts.tol && res.pinf <= opts.tol && res.dinf <= opts.tol {
            status = Status::Optimal;
            break;
        }
        let ymax = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.max_abs()));
        if ymax > opts.divergence_bound || res.dobj > opts.divergence_bound {
            status = Status::Infeasible;
            break;
        }
        if xmax > opts.divergence_bound || res.pobj < -opts.divergence_bound {
            status = Status::Unbounded;
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        let Some(zinv) = z.iter().map(inverse_pd).collect::<Option<Vec<_>>>() else {
            log::debug!("dual iterate lost definiteness at iteration {iter}");
            break;
        };
        let exact = model.schur(&x, &zinv);
        let diag_max = (0..model.m).map(|i| exact[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let mut schur = exact.clone();
        let mut factored = None;
        for attempt in 0..4 {
            let mut l = schur.clone();
            match cholesky_in_place(&mut l) {
                Ok(()) => {
                    factored = Some(l);
                    break;
                }
                Err(pivot) => {
                    let reg = diag_max * 1e-14 * 100f64.powi(attempt);
                    log::debug!("Schur complement not positive definite at pivot {pivot}; regularising by {reg:.1e}");
                    for i in 0..model.m {
                        schur[(i, i)] += reg;
                    }
                }
            }
        }
        let Some(chol_m) = factored else {
            log::debug!("Schur complement factorisation failed at iteration {iter}");
            break;
        };

        let mu = inner_all(&x, &z) / nu;

        // predictor
        let rc_pred: Vec<BlockValue> = x.iter().map(|b| b.negated()).collect();
        let pred = direction(&model, &exact, &chol_m, &x, &zinv, &res, &rc_pred);
        let (Some(ap), Some(ad)) = (max_step_all(&x, &pred.dx), max_step_all(&z, &pred.dz)) else {
            log::debug!("step length undefined at iteration {iter}");
            break;
        };
        let ap = ap.min(1.0);
        let ad = ad.min(1.0);
        let mut xt = x.clone();
        let mut zt = z.clone();
        for (a, d) in xt.iter_mut().zip(&pred.dx) {
            a.axpy(ap, d);
        }
        for (a, d) in zt.iter_mut().zip(&pred.dz) {
            a.axpy(ad, d);
        }
        let mu_pred = inner_all(&xt, &zt) / nu;
        let ratio = (mu_pred / mu).clamp(0.0, 1.0);
        let expon = if mu > 1e-6 { 2.0 } else { 3.0 };
        // pushing μ far below what the gap test needs only wrecks the
        // conditioning of the Schur complement
        let mu_floor = MU_FLOOR * opts.tol * (1.0 + res.pobj.abs() + res.dobj.abs()) / nu;
        let sigma = ratio.powf(expon).max(mu_floor / mu).min(1.0);

        // corrector
        let rc: Vec<BlockValue> = x
            .iter()
            .zip(zinv.iter().zip(pred.dx.iter().zip(&pred.dz)))
            .map(|(xb, (zb, (dxb, dzb)))| {
                let mut r = zb.clone();
                match &mut r {
                    BlockValue::Dense(m) => *m *= sigma * mu,
                    BlockValue::Diagonal(d) => d.iter_mut().for_each(|v| *v *= sigma * mu),
                }
                r.axpy(-1.0, xb);
                r.axpy(-1.0, &sym_triple(dxb, dzb, zb));
                r
            })
            .collect();
        let dir = direction(&model, &exact, &chol_m, &x, &zinv, &res, &rc);
        let (Some(ap), Some(ad)) = (max_step_all(&x, &dir.dx), max_step_all(&z, &dir.dz)) else {
            log::debug!("step length undefined at iteration {iter}");
            break;
        };
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stall += 1;
            if stall >= 3 {
                log::debug!("step lengths collapsed at iteration {iter}");
                break;
            }
        } else {
            stall = 0;
        }
        for (a, d) in x.iter_mut().zip(&dir.dx) {
            a.axpy(ap, d);
        }
        for (a, d) in z.iter_mut().zip(&dir.dz) {
            a.axpy(ad, d);
        }
        for (a, d) in y.iter_mut().zip(&dir.dy) {
            *a += ad * d;
        }
        gamma = 0.9 + 0.09 * ap.min(ad);
    }

    let res = residuals(&model, &x, &y, &z);
    let (primal_value, dual_value, y, z) = match p.sense {
        Sense::Min => (res.pobj, res.dobj, y, z),
        Sense::Max => (-res.pobj, -res.dobj, y.iter().map(|v| -v).collect(), z),
    };
    Ok(SdpSolution {
        status,
        primal_value,
        dual_value,
        gap: res.gap,
        x,
        y,
        z,
        iterations,
        primal_residual: res.pinf,
        dual_residual: res.dinf,
    })
}
