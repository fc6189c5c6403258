//! Quantum channels in Kraus and Choi form, the channel zoo, truncation and
//! the diamond distance.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{
    eigh, min_eigenvalue, trace_norm, BipartiteOperator, Complex64, ComplexMatrix, Subsystem,
};
use crate::sdp::{Certificate, Model, SolverOptions};
use crate::states::{max_entangled, sigma_pm, DensityOperator};
use crate::{Error, Result};

/// Tolerance for complete positivity and trace preservation.
pub const CHANNEL_TOL: f64 = 1e-9;
/// Choi eigenvalues below this are dropped when extracting Kraus operators.
const KRAUS_CUTOFF: f64 = 1e-12;

/// Completely positive trace-preserving map from `C^{d_in}` to `C^{d_out}`.
///
/// Both representations are kept: Kraus operators (`d_out × d_in`) and the
/// unit-trace Choi state `[id ⊗ Λ](Φ_{d_in})` on input ⊗ output.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    din: usize,
    dout: usize,
    kraus: Vec<ComplexMatrix>,
    choi: BipartiteOperator,
}

fn choi_from_kraus(din: usize, dout: usize, kraus: &[ComplexMatrix]) -> BipartiteOperator {
    let n = din * dout;
    let mut j = ComplexMatrix::zeros(n, n);
    for k in kraus {
        // column of (𝟙 ⊗ K)|Φ̃⟩: entry (i, b) is K[b][i]
        let v: Vec<Complex64> = (0..n).map(|idx| k[(idx % dout, idx / dout)]).collect();
        j += &ComplexMatrix::outer(&v);
    }
    BipartiteOperator::new(din, dout, j.scale(1.0 / din as f64)).expect("square by construction")
}

fn check_choi(din: usize, dout: usize, j: &ComplexMatrix) -> Result<ComplexMatrix> {
    if j.rows() != din * dout || j.cols() != din * dout {
        return Err(Error::InvalidChannel(format!(
            "Choi matrix is {}x{}, expected {}",
            j.rows(),
            j.cols(),
            din * dout
        )));
    }
    if !j.is_hermitian(CHANNEL_TOL) {
        return Err(Error::InvalidChannel(format!("Choi matrix not Hermitian (deviation {:.3e})", j.hermitian_deviation())));
    }
    Ok(j.hermitian_part())
}

impl Channel {
    pub fn from_kraus(din: usize, dout: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if din == 0 || dout == 0 || kraus.is_empty() {
            return Err(Error::InvalidChannel("empty channel".into()));
        }
        let mut sum = ComplexMatrix::zeros(din, din);
        for (i, k) in kraus.iter().enumerate() {
            if k.rows() != dout || k.cols() != din {
                return Err(Error::InvalidChannel(format!(
                    "Kraus operator {i} is {}x{}, expected {dout}x{din}",
                    k.rows(),
                    k.cols()
                )));
            }
            if !k.is_finite() {
                return Err(Error::InvalidChannel(format!("Kraus operator {i} has non-finite entries")));
            }
            sum += &k.adjoint().matmul(k);
        }
        let dev = (&sum - &ComplexMatrix::identity(din)).max_abs();
        if dev > CHANNEL_TOL {
            return Err(Error::InvalidChannel(format!("Kraus operators not trace preserving (deviation {dev:.3e})")));
        }
        let choi = choi_from_kraus(din, dout, &kraus);
        Ok(Self { din, dout, kraus, choi })
    }

    pub fn from_choi(din: usize, dout: usize, j: ComplexMatrix) -> Result<Self> {
        let j = check_choi(din, dout, &j)?;
        let op = BipartiteOperator::new(din, dout, j)?;
        let marginal = op.partial_trace(Subsystem::A)?;
        let dev = (&marginal - &ComplexMatrix::identity(din).scale(1.0 / din as f64)).max_abs();
        if dev > CHANNEL_TOL {
            return Err(Error::InvalidChannel(format!("Choi input marginal is not 𝟙/d (deviation {dev:.3e})")));
        }
        let e = eigh(op.matrix())?;
        if e.values[0] < -CHANNEL_TOL {
            return Err(Error::InvalidChannel(format!("not completely positive (Choi eigenvalue {:.3e})", e.values[0])));
        }
        let mut kraus = Vec::new();
        for (k, &lambda) in e.values.iter().enumerate() {
            if lambda < KRAUS_CUTOFF {
                continue;
            }
            let scale = (din as f64 * lambda).sqrt();
            let v = e.vector(k);
            kraus.push(ComplexMatrix::from_fn(dout, din, |b, i| v[i * dout + b] * scale));
        }
        Ok(Self { din, dout, kraus, choi: op })
    }

    /// Conjugation by a unitary.
    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        Self::from_kraus(u.cols(), u.rows(), vec![u.clone()])
    }

    pub fn din(&self) -> usize {
        self.din
    }

    pub fn dout(&self) -> usize {
        self.dout
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Unit-trace Choi state on input ⊗ output.
    pub fn choi(&self) -> &BipartiteOperator {
        &self.choi
    }

    /// `Λ(X)` through the Kraus operators.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.din || x.cols() != self.din {
            return Err(Error::InvalidArgument(format!("input is {}x{}, channel input is {}", x.rows(), x.cols(), self.din)));
        }
        let mut out = ComplexMatrix::zeros(self.dout, self.dout);
        for k in &self.kraus {
            out += &k.matmul(x).matmul(&k.adjoint());
        }
        Ok(out)
    }

    /// `Λ(X) = d·Tr_A[(Xᵀ ⊗ 𝟙) J]`.
    pub fn apply_via_choi(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.din || x.cols() != self.din {
            return Err(Error::InvalidArgument("input dimension mismatch".into()));
        }
        let lifted = x.transpose().kron(&ComplexMatrix::identity(self.dout)).matmul(self.choi.matrix());
        let op = BipartiteOperator::new(self.din, self.dout, lifted)?;
        Ok(op.partial_trace(Subsystem::B)?.scale(self.din as f64))
    }

    /// `[id_e ⊗ Λ](ρ)` for `ρ` on `C^e ⊗ C^{d_in}`.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let (e, din) = rho.dims();
        if din != self.din {
            return Err(Error::InvalidArgument(format!("state acts on {din}-dim input, channel expects {}", self.din)));
        }
        let id = ComplexMatrix::identity(e);
        let mut out = ComplexMatrix::zeros(e * self.dout, e * self.dout);
        for k in &self.kraus {
            let lifted = id.kron(k);
            out += &lifted.matmul(rho.matrix()).matmul(&lifted.adjoint());
        }
        DensityOperator::from_matrix(e, self.dout, out.hermitian_part())
    }

    /// `[id_e ⊗ Λ†](Y)` for `Y` on `C^e ⊗ C^{d_out}`.
    pub fn apply_adjoint_extended(&self, y: &ComplexMatrix, e: usize) -> Result<ComplexMatrix> {
        if y.rows() != e * self.dout {
            return Err(Error::InvalidArgument("operator dimension mismatch".into()));
        }
        let id = ComplexMatrix::identity(e);
        let mut out = ComplexMatrix::zeros(e * self.din, e * self.din);
        for k in &self.kraus {
            let lifted = id.kron(k);
            out += &lifted.adjoint().matmul(y).matmul(&lifted);
        }
        Ok(out)
    }

    /// `choi(c)^Γ ⪰ −tol`.
    pub fn is_ppt_binding(&self, tol: f64) -> Result<bool> {
        Ok(min_eigenvalue(self.choi.partial_transpose()?.matrix())? >= -tol)
    }

    /// Restricts the Choi state to a validated state object.
    pub fn choi_state(&self) -> Result<DensityOperator> {
        DensityOperator::new(self.choi.clone())
    }
}

/// Hermiticity-preserving linear map given by a (not necessarily positive) Choi matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianPreservingMap {
    pub din: usize,
    pub dout: usize,
    pub choi: BipartiteOperator,
}

impl HermitianPreservingMap {
    pub fn new(din: usize, dout: usize, choi: ComplexMatrix) -> Result<Self> {
        let j = check_choi(din, dout, &choi)?;
        Ok(Self { din, dout, choi: BipartiteOperator::new(din, dout, j)? })
    }

    pub fn from_channel(c: &Channel) -> Self {
        Self { din: c.din, dout: c.dout, choi: c.choi.clone() }
    }

    /// `Σ w_k Λ_k`.
    pub fn combination(terms: &[(f64, &Channel)]) -> Result<Self> {
        let (first_w, first) = terms.first().ok_or_else(|| Error::InvalidArgument("empty combination".into()))?;
        let mut j = first.choi.matrix().scale(*first_w);
        for (w, c) in &terms[1..] {
            if (c.din, c.dout) != (first.din, first.dout) {
                return Err(Error::InvalidArgument("combined channels have different dimensions".into()));
            }
            j += &c.choi.matrix().scale(*w);
        }
        Self::new(first.din, first.dout, j)
    }

    /// Validates complete positivity and trace preservation.
    pub fn to_channel(&self) -> Result<Channel> {
        Channel::from_choi(self.din, self.dout, self.choi.matrix().clone())
    }
}

fn basis_projector(d: usize, i: usize) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(d, d);
    p[(i, i)] = Complex64::new(1.0, 0.0);
    p
}

pub fn identity(d: usize) -> Result<Channel> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("dimension must be at least 2, got {d}")));
    }
    Channel::from_kraus(d, d, vec![ComplexMatrix::identity(d)])
}

/// Complete dephasing `Δ(X) = Σ_i ⟨i|X|i⟩ |i⟩⟨i|`.
pub fn dephasing(d: usize) -> Result<Channel> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("dimension must be at least 2, got {d}")));
    }
    Channel::from_kraus(d, d, (0..d).map(|i| basis_projector(d, i)).collect())
}

/// The qutrit channel `(3/2)Δ₃ − (1/2)id₃`, whose Choi state is `½(P₃ − Φ₃)`.
pub fn omega3_channel() -> Channel {
    let delta = dephasing(3).expect("d = 3");
    let id = identity(3).expect("d = 3");
    HermitianPreservingMap::combination(&[(1.5, &delta), (-0.5, &id)])
        .and_then(|m| m.to_channel())
        .expect("(3/2)Δ − (1/2)id is a channel")
}

/// Entanglement-breaking channels with Choi states `σ₊` and `σ₋`.
pub fn gamma_pm(d: usize) -> Result<(Channel, Channel)> {
    let (p, m) = sigma_pm(d)?;
    Ok((
        Channel::from_choi(d, d, p.matrix().clone())?,
        Channel::from_choi(d, d, m.matrix().clone())?,
    ))
}

/// Pauli-Z conjugation on a qubit.
pub fn pauli_z() -> Channel {
    Channel::unitary(&ComplexMatrix::from_diag(&[1.0, -1.0])).expect("unitary")
}

/// Random channel with `rank` Kraus operators from a Gaussian Stinespring isometry.
/// Needs `rank·dout ≥ din` so the isometry exists.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, din: usize, dout: usize, rank: usize) -> Result<Channel> {
    let rows = dout * rank;
    if din == 0 || rows < din {
        return Err(Error::InvalidArgument(format!(
            "no isometry from dimension {din} into {dout}x{rank}; need rank*dout >= din >= 1"
        )));
    }
    let g = ComplexMatrix::from_fn(rows, din, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let gram = eigh(&g.adjoint().matmul(&g))?;
    if gram.values[0] <= 1e-12 {
        return Err(Error::InvalidArgument("degenerate random isometry".into()));
    }
    let inv_sqrt = gram.reconstruct_with(|l| 1.0 / l.sqrt());
    let v = g.matmul(&inv_sqrt);
    let kraus = (0..rank)
        .map(|k| ComplexMatrix::from_fn(dout, din, |r, c| v[(k * dout + r, c)]))
        .collect();
    Channel::from_kraus(din, dout, kraus)
}

/// `Λ_a ⊗ Λ_b` with inputs and outputs ordered `(a, b)`.
pub fn tensor_channels(a: &Channel, b: &Channel) -> Result<Channel> {
    let kraus = a.kraus.iter().flat_map(|ka| b.kraus.iter().map(move |kb| ka.kron(kb))).collect();
    Channel::from_kraus(a.din * b.din, a.dout * b.dout, kraus)
}

fn check_anchor(anchor: &ComplexMatrix, dout: usize, k: usize) -> Result<Vec<(f64, Vec<Complex64>)>> {
    if anchor.rows() != dout || anchor.cols() != dout {
        return Err(Error::InvalidArgument(format!("anchor must be {dout}x{dout}")));
    }
    let e = eigh(anchor)?;
    if e.values[0] < -CHANNEL_TOL || (anchor.trace().re - 1.0).abs() > CHANNEL_TOL {
        return Err(Error::InvalidArgument("anchor is not a density matrix".into()));
    }
    for r in 0..dout {
        for c in 0..dout {
            if (r >= k || c >= k) && anchor[(r, c)].norm() > 1e-12 {
                return Err(Error::InvalidArgument(format!("anchor is not supported on the leading {k} basis vectors")));
            }
        }
    }
    Ok((0..dout)
        .filter(|&i| e.values[i] > KRAUS_CUTOFF)
        .map(|i| (e.values[i], e.vector(i)))
        .collect())
}

/// `|0⟩⟨0|` on `C^d`, the default truncation anchor.
pub fn ground_state(d: usize) -> ComplexMatrix {
    basis_projector(d, 0)
}

/// Kraus operators of `X ↦ Π′ K X K† Π′ + Tr[(𝟙 − Π′) K X K†] ω` for each `K`.
fn compress_kraus(kraus: &[ComplexMatrix], dout: usize, k: usize, anchor: &[(f64, Vec<Complex64>)]) -> Vec<ComplexMatrix> {
    let mut out = Vec::new();
    for kr in kraus {
        let cols = kr.cols();
        out.push(ComplexMatrix::from_fn(dout, cols, |r, c| if r < k { kr[(r, c)] } else { Complex64::new(0.0, 0.0) }));
        for f in k..dout {
            for (lambda, v) in anchor {
                let s = lambda.sqrt();
                out.push(ComplexMatrix::from_fn(dout, cols, |r, c| v[r] * kr[(f, c)] * s));
            }
        }
    }
    out
}

/// `Λ_k = Φ ∘ Λ ∘ ι_k` where `ι_k` embeds the leading `k` input basis vectors
/// and `Φ(X) = Π′XΠ′ + Tr[(𝟙 − Π′)X]ω` with `Π′` the leading-`k` output projector.
///
/// The result has input dimension `min(k, d_in)`; for `k ≥ max(d_in, d_out)` it equals `c`.
pub fn truncate(c: &Channel, k: usize, anchor: &ComplexMatrix) -> Result<Channel> {
    if k == 0 {
        return Err(Error::InvalidArgument("truncation level must be positive".into()));
    }
    let kin = k.min(c.din);
    let kout = k.min(c.dout);
    let anchor = check_anchor(anchor, c.dout, kout)?;
    let restricted: Vec<ComplexMatrix> = c
        .kraus
        .iter()
        .map(|kr| ComplexMatrix::from_fn(c.dout, kin, |r, col| kr[(r, col)]))
        .collect();
    Channel::from_kraus(kin, c.dout, compress_kraus(&restricted, c.dout, kout, &anchor))
}

/// `Φ ∘ Λ` with `Φ` the projection-plus-prepare map of [`truncate`], inputs untouched.
pub fn compress_output(c: &Channel, k: usize, anchor: &ComplexMatrix) -> Result<Channel> {
    if k == 0 {
        return Err(Error::InvalidArgument("truncation level must be positive".into()));
    }
    let kout = k.min(c.dout);
    let anchor = check_anchor(anchor, c.dout, kout)?;
    Channel::from_kraus(c.din, c.dout, compress_kraus(&c.kraus, c.dout, kout, &anchor))
}

/// `‖Λ_k(Π_k X Π_k) − Λ(X)‖₁`, the truncation error on input `X`.
pub fn truncation_error(c: &Channel, k: usize, anchor: &ComplexMatrix, x: &ComplexMatrix) -> Result<f64> {
    let t = truncate(c, k, anchor)?;
    let xk = x.leading_block(t.din);
    let diff = &t.apply_matrix(&xk)? - &c.apply_matrix(x)?;
    Ok(trace_norm(&diff.hermitian_part())?)
}

#[derive(Debug, Clone)]
pub struct DiamondResult {
    pub value: f64,
    /// `‖J_a − J_b‖₁`, the output distance on the maximally entangled probe.
    pub probe_lower_bound: f64,
    pub certificate: Certificate,
}

/// `‖a − b‖_◇` in `[0, 2]`, from
/// `max 2d·Tr[(J_a − J_b) W]` s.t. `0 ⪯ W ⪯ ρ ⊗ 𝟙`, `Tr ρ = 1`.
pub fn diamond_distance(a: &Channel, b: &Channel) -> Result<DiamondResult> {
    diamond_distance_with(a, b, &SolverOptions::default())
}

pub fn diamond_distance_with(a: &Channel, b: &Channel, opts: &SolverOptions) -> Result<DiamondResult> {
    if (a.din, a.dout) != (b.din, b.dout) {
        return Err(Error::InvalidArgument("channels have different dimensions".into()));
    }
    let (din, dout) = (a.din, a.dout);
    let diff = (a.choi.matrix() - b.choi.matrix()).hermitian_part();
    let probe = trace_norm(&diff)?;
    let mut model = Model::new(diff.is_real());
    let w = model.herm(din * dout);
    let rho = model.herm_with_trace(din, 1.0);
    model.psd(w.clone());
    model.psd(rho.kron_identity(dout).sub(&w));
    model.maximize(w.trace_with(&diff).scale(2.0 * din as f64));
    let sol = model.solve(opts)?;
    let value = sol.value;
    if value < probe - 1e-7 {
        return Err(Error::Consistency(format!(
            "diamond value {value:.9} below the maximally entangled probe {probe:.9}"
        )));
    }
    Ok(DiamondResult { value, probe_lower_bound: probe, certificate: sol.certificate() })
}

/// Output of `[id ⊗ Λ]` on `Φ_{d_in}`, i.e. the Choi state.
pub fn choi_output(c: &Channel) -> Result<DensityOperator> {
    c.apply(&max_entangled(c.din)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{doubled_basis_projector, omega3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn choi_of_zoo() {
        let id = identity(3).unwrap();
        assert!((id.choi().matrix() - max_entangled(3).unwrap().matrix()).max_abs() < 1e-15);
        let d = dephasing(3).unwrap();
        let p3 = doubled_basis_projector(3).scale(1.0 / 3.0);
        assert!((d.choi().matrix() - &p3).max_abs() < 1e-15);
        let w = omega3_channel();
        assert!((w.choi().matrix() - omega3().matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn dephasing_kills_coherences() {
        let d = dephasing(2).unwrap();
        let mut x = ComplexMatrix::zeros(2, 2);
        x[(0, 1)] = Complex64::new(1.0, 0.0);
        assert_eq!(d.apply_matrix(&x).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn kraus_choi_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_channel(&mut rng, 3, 2, 3).unwrap();
        let back = Channel::from_choi(3, 2, c.choi().matrix().clone()).unwrap();
        assert!((back.choi().matrix() - c.choi().matrix()).max_abs() < 1e-9);
        let x = ComplexMatrix::from_fn(3, 3, |r, cc| Complex64::new((r + cc) as f64, r as f64 - cc as f64));
        let a = c.apply_matrix(&x).unwrap();
        let b = c.apply_via_choi(&x).unwrap();
        assert!((&a - &b).max_abs() < 1e-9);
        assert!((&back.apply_matrix(&x).unwrap() - &a).max_abs() < 1e-9);
    }

    #[test]
    fn gamma_channels_have_sigma_chois() {
        let (p, m) = gamma_pm(3).unwrap();
        let (sp, sm) = sigma_pm(3).unwrap();
        assert!((p.choi().matrix() - sp.matrix()).max_abs() < 1e-9);
        assert!((m.choi().matrix() - sm.matrix()).max_abs() < 1e-9);
        assert!(p.is_ppt_binding(1e-9).unwrap() && m.is_ppt_binding(1e-9).unwrap());
    }

    #[test]
    fn ppt_binding_examples() {
        assert!(dephasing(3).unwrap().is_ppt_binding(1e-9).unwrap());
        assert!(!identity(2).unwrap().is_ppt_binding(1e-9).unwrap());
        assert!(!omega3_channel().is_ppt_binding(1e-9).unwrap());
    }

    #[test]
    fn invalid_channels_rejected() {
        assert!(Channel::from_kraus(2, 2, vec![ComplexMatrix::identity(2).scale(2.0)]).is_err());
        // (3/2)Δ + (1/2)id is trace-scaling, not trace preserving
        let bad = HermitianPreservingMap::combination(&[(1.5, &dephasing(3).unwrap()), (0.5, &identity(3).unwrap())])
            .unwrap();
        assert!(bad.to_channel().is_err());
        // 2·id − Δ is trace preserving but not CP
        let ncp = HermitianPreservingMap::combination(&[(2.0, &identity(3).unwrap()), (-1.0, &dephasing(3).unwrap())])
            .unwrap();
        assert!(ncp.to_channel().is_err());
    }

    #[test]
    fn truncation_at_full_dimension_is_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_channel(&mut rng, 3, 3, 2).unwrap();
        let t = truncate(&c, 3, &ground_state(3)).unwrap();
        assert!((t.choi().matrix() - c.choi().matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn truncation_rejects_unsupported_anchor() {
        let c = identity(3).unwrap();
        let anchor = basis_projector(3, 2);
        assert!(truncate(&c, 2, &anchor).is_err());
        assert!(truncate(&c, 3, &anchor).is_ok());
    }
}
