//! Independent re-check of a claimed solution against the original problem.

use nalgebra::DMatrix;
use serde::Serialize;

use super::problem::{ConeKind, SdpProblem, Sense};
use super::solver::{relative_gap, BlockValue, SdpSolution, Status};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// The measured quantity (residual, eigenvalue or gap).
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub max_primal_residual: f64,
    pub min_primal_eigenvalue: f64,
    pub min_dual_eigenvalue: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

fn block_inner_sparse(kind: ConeKind, s: &super::problem::SparseSym, x: &BlockValue) -> f64 {
    match (kind, x) {
        (ConeKind::Psd, BlockValue::Dense(m)) => s
            .entries
            .iter()
            .map(|&(r, c, v)| if r == c { v * m[(r, r)] } else { v * (m[(r, c)] + m[(c, r)]) })
            .sum(),
        (ConeKind::Nonneg, BlockValue::Diagonal(d)) => s.entries.iter().map(|&(r, _, v)| v * d[r]).sum(),
        _ => f64::NAN,
    }
}

/// Recomputes feasibility and optimality of `s` from its stored points.
///
/// Checks, each against `tol`:
/// `status` (claimed optimal), `primal-equality` (per-constraint residual
/// relative to `max(1, |b_i|)`), `primal-cone` (smallest eigenvalue of X),
/// `dual-cone` (smallest eigenvalue of the dual slack rebuilt from y, relative
/// to `1 + ‖C‖_F`) and `gap` (relative primal–dual gap).
pub fn verify(p: &SdpProblem, s: &SdpSolution, tol: f64) -> VerifyReport {
    let mut checks = Vec::new();
    checks.push(Check {
        name: "status",
        passed: s.status == Status::Optimal,
        value: if s.status == Status::Optimal { 0.0 } else { 1.0 },
        threshold: 0.0,
    });

    let shape_ok = s.x.len() == p.blocks.len() && s.y.len() == p.constraints.len();
    if !shape_ok {
        checks.push(Check { name: "shape", passed: false, value: f64::NAN, threshold: 0.0 });
        return VerifyReport {
            checks,
            primal_value: f64::NAN,
            dual_value: f64::NAN,
            gap: f64::NAN,
            max_primal_residual: f64::NAN,
            min_primal_eigenvalue: f64::NAN,
            min_dual_eigenvalue: f64::NAN,
        };
    }

    let mut max_res: f64 = 0.0;
    for con in &p.constraints {
        let ax: f64 = con.a.iter().map(|(blk, a)| block_inner_sparse(p.blocks[*blk].kind, a, &s.x[*blk])).sum();
        let r = (ax - con.b).abs() / con.b.abs().max(1.0);
        max_res = if r.is_nan() { f64::NAN } else { max_res.max(r) };
    }
    checks.push(Check { name: "primal-equality", passed: max_res <= tol, value: max_res, threshold: tol });

    let min_x = s.x.iter().map(|b| b.min_eigenvalue()).fold(f64::INFINITY, f64::min);
    checks.push(Check { name: "primal-cone", passed: min_x >= -tol, value: min_x, threshold: -tol });

    // dual slack: C − Σ y_i A_i for min, Σ y_i A_i − C for max
    let sign = if p.sense == Sense::Max { -1.0 } else { 1.0 };
    let mut c_norm_sq = 0.0;
    let mut min_z = f64::INFINITY;
    for (b, spec) in p.blocks.iter().enumerate() {
        let c = p.objective[b].to_dense(spec.size);
        c_norm_sq += c.norm_squared();
        let mut z: DMatrix<f64> = c * sign;
        for (i, con) in p.constraints.iter().enumerate() {
            for (blk, a) in &con.a {
                if *blk != b {
                    continue;
                }
                for &(r, cc, v) in &a.entries {
                    let w = sign * s.y[i] * v;
                    z[(r, cc)] -= w;
                    if r != cc {
                        z[(cc, r)] -= w;
                    }
                }
            }
        }
        let zmin = match spec.kind {
            ConeKind::Psd => BlockValue::Dense(z).min_eigenvalue(),
            ConeKind::Nonneg => (0..spec.size).map(|k| z[(k, k)]).fold(f64::INFINITY, f64::min),
        };
        min_z = min_z.min(zmin);
    }
    let dual_thr = -tol * (1.0 + c_norm_sq.sqrt());
    checks.push(Check { name: "dual-cone", passed: min_z >= dual_thr, value: min_z, threshold: dual_thr });

    let primal_value: f64 = p
        .blocks
        .iter()
        .enumerate()
        .map(|(b, spec)| block_inner_sparse(spec.kind, &p.objective[b], &s.x[b]))
        .sum();
    let dual_value: f64 = p.constraints.iter().zip(&s.y).map(|(c, y)| c.b * y).sum();
    let gap = relative_gap(primal_value, dual_value);
    checks.push(Check { name: "gap", passed: gap <= tol, value: gap, threshold: tol });

    VerifyReport {
        checks,
        primal_value,
        dual_value,
        gap,
        max_primal_residual: max_res,
        min_primal_eigenvalue: min_x,
        min_dual_eigenvalue: min_z,
    }
}

/// Compact summary of a [`VerifyReport`] attached to every reported value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Certificate {
    pub gap: f64,
    pub primal_residual: f64,
    pub min_primal_eigenvalue: f64,
    pub min_dual_eigenvalue: f64,
    pub passed: bool,
}

impl From<&VerifyReport> for Certificate {
    fn from(r: &VerifyReport) -> Self {
        Self {
            gap: r.gap,
            primal_residual: r.max_primal_residual,
            min_primal_eigenvalue: r.min_primal_eigenvalue,
            min_dual_eigenvalue: r.min_dual_eigenvalue,
            passed: r.passed(),
        }
    }
}
