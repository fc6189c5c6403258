use serde::{Deserialize, Serialize};

use super::SdpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeKind {
    /// Real symmetric positive semidefinite matrices.
    Psd,
    /// Nonnegative orthant; the block is a diagonal matrix.
    Nonneg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub size: usize,
    pub kind: ConeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

/// Symmetric sparse matrix stored as upper-triangle triplets `(row, col, value)`
/// with `row <= col`; an off-diagonal triplet stands for both mirror entries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseSym {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `v` at `(r, c)` and its mirror.
    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        self.entries.push((r, c, v));
    }

    pub fn identity(n: usize) -> Self {
        Self { entries: (0..n).map(|i| (i, i, 1.0)).collect() }
    }

    pub fn from_dense(m: &nalgebra::DMatrix<f64>) -> Self {
        let mut s = Self::new();
        for c in 0..m.ncols() {
            for r in 0..=c {
                let v = 0.5 * (m[(r, c)] + m[(c, r)]);
                if v != 0.0 {
                    s.entries.push((r, c, v));
                }
            }
        }
        s
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Sorts by position and merges duplicates, dropping exact zeros.
    pub fn compress(&mut self) {
        self.entries.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(self.entries.len());
        for &(r, c, v) in &self.entries {
            match out.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => out.push((r, c, v)),
            }
        }
        out.retain(|e| e.2 != 0.0);
        self.entries = out;
    }

    pub fn to_dense(&self, n: usize) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
            if r != c {
                m[(c, r)] += v;
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| if r == c { v * v } else { 2.0 * v * v })
            .sum::<f64>()
            .sqrt()
    }
}

/// One equality constraint `⟨A, X⟩ = b` with `A` given block by block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    /// `(block index, block of A)`; blocks not listed are zero.
    pub a: Vec<(usize, SparseSym)>,
    pub b: f64,
}

/// Block-diagonal conic program in equality standard form.
///
/// Primal: optimise `⟨C, X⟩` subject to `⟨A_i, X⟩ = b_i`, `X` in the product cone.
/// For `Sense::Min` the dual is `max bᵀy` s.t. `C − Σ y_i A_i ⪰ 0`; for
/// `Sense::Max` it is `min bᵀy` s.t. `Σ y_i A_i − C ⪰ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub blocks: Vec<BlockSpec>,
    pub objective: Vec<SparseSym>,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
}

impl SdpProblem {
    pub fn new(blocks: Vec<BlockSpec>, sense: Sense) -> Self {
        let objective = vec![SparseSym::new(); blocks.len()];
        Self { blocks, objective, constraints: Vec::new(), sense }
    }

    pub fn add_constraint(&mut self, a: Vec<(usize, SparseSym)>, b: f64) {
        self.constraints.push(Constraint { a, b });
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Sum of block sizes; the barrier parameter of the cone.
    pub fn cone_dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        if self.blocks.is_empty() {
            return Err(SdpError::IllPosed("no blocks".into()));
        }
        if self.objective.len() != self.blocks.len() {
            return Err(SdpError::IllPosed(format!(
                "objective has {} blocks, problem has {}",
                self.objective.len(),
                self.blocks.len()
            )));
        }
        if let Some(b) = self.blocks.iter().position(|b| b.size == 0) {
            return Err(SdpError::IllPosed(format!("block {b} has size 0")));
        }
        let check = |blk: usize, s: &SparseSym, what: &str| -> Result<(), SdpError> {
            let spec = self
                .blocks
                .get(blk)
                .ok_or_else(|| SdpError::IllPosed(format!("{what}: block index {blk} out of range")))?;
            for &(r, c, v) in &s.entries {
                if r > c || c >= spec.size {
                    return Err(SdpError::IllPosed(format!("{what}: entry ({r},{c}) outside block {blk}")));
                }
                if spec.kind == ConeKind::Nonneg && r != c {
                    return Err(SdpError::IllPosed(format!("{what}: off-diagonal entry in nonneg block {blk}")));
                }
                if !v.is_finite() {
                    return Err(SdpError::IllPosed(format!("{what}: non-finite value")));
                }
            }
            Ok(())
        };
        for (blk, s) in self.objective.iter().enumerate() {
            check(blk, s, "objective")?;
        }
        for (i, con) in self.constraints.iter().enumerate() {
            if !con.b.is_finite() {
                return Err(SdpError::IllPosed(format!("constraint {i}: non-finite b")));
            }
            for (blk, s) in &con.a {
                check(*blk, s, &format!("constraint {i}"))?;
            }
        }
        if self.constraints.is_empty() && self.objective.iter().any(|s| !s.is_empty()) {
            log::debug!("problem has no constraints; boundedness depends on the objective alone");
        }
        Ok(())
    }

    /// JSON dump for external cross-checking (`sdp-v1`).
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format": "sdp-v1",
            "sense": self.sense,
            "blocks": self.blocks,
            "C": self.objective,
            "A": self.constraints.iter().map(|c| &c.a).collect::<Vec<_>>(),
            "b": self.constraints.iter().map(|c| c.b).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, SdpError> {
        #[derive(Deserialize)]
        struct Dump {
            format: String,
            sense: Sense,
            blocks: Vec<BlockSpec>,
            #[serde(rename = "C")]
            c: Vec<SparseSym>,
            #[serde(rename = "A")]
            a: Vec<Vec<(usize, SparseSym)>>,
            b: Vec<f64>,
        }
        let dump: Dump = serde_json::from_value(value.clone()).map_err(|e| SdpError::IllPosed(e.to_string()))?;
        if dump.format != "sdp-v1" {
            return Err(SdpError::IllPosed(format!("unknown format {:?}", dump.format)));
        }
        if dump.a.len() != dump.b.len() {
            return Err(SdpError::IllPosed("A and b lengths differ".into()));
        }
        let constraints = dump.a.into_iter().zip(dump.b).map(|(a, b)| Constraint { a, b }).collect();
        let p = SdpProblem { blocks: dump.blocks, objective: dump.c, constraints, sense: dump.sense };
        p.validate()?;
        Ok(p)
    }
}
