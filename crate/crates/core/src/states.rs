//! Bipartite states and their PPT-cone monotones: negativity, tempered
//! negativity, standard and tempered robustness.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{
    eigh, min_eigenvalue, op_norm, trace_norm, BipartiteOperator, Complex64, ComplexMatrix, Eigh,
};
use crate::sdp::{Certificate, HermExpr, LinExpr, Model, SolverOptions};
use crate::{Error, Result};

const STATE_TOL: f64 = 1e-10;
/// Anchor eigenvalues below this fraction of the largest count as kernel.
const KERNEL_REL_TOL: f64 = 1e-10;
/// Allowed disagreement between the two robustness routes.
pub const ROBUSTNESS_AGREEMENT_TOL: f64 = 1e-6;

/// Unit-trace positive semidefinite operator on `H_A ⊗ H_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: BipartiteOperator,
}

impl DensityOperator {
    /// Validates positivity and normalisation within `1e-10`.
    pub fn new(op: BipartiteOperator) -> Result<Self> {
        let m = op.matrix().to_hermitian()?;
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let lmin = min_eigenvalue(&m)?;
        if lmin < -STATE_TOL {
            return Err(Error::InvalidState(format!("smallest eigenvalue {lmin:.3e} is negative")));
        }
        Ok(Self { op: op.with_matrix(m)? })
    }

    pub fn from_matrix(dim_a: usize, dim_b: usize, m: ComplexMatrix) -> Result<Self> {
        Self::new(BipartiteOperator::new(dim_a, dim_b, m)?)
    }

    /// `|ψ⟩⟨ψ|` for a vector normalised here.
    pub fn pure(dim_a: usize, dim_b: usize, psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        Self::from_matrix(dim_a, dim_b, ComplexMatrix::outer(&v))
    }

    /// `ρ_A ⊗ ρ_B` from single-system density matrices.
    pub fn product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Self> {
        Self::new(BipartiteOperator::product(a, b)?)
    }

    pub fn maximally_mixed(dim_a: usize, dim_b: usize) -> Self {
        let n = dim_a * dim_b;
        let m = ComplexMatrix::identity(n).scale(1.0 / n as f64);
        Self { op: BipartiteOperator::new(dim_a, dim_b, m).expect("square by construction") }
    }

    pub fn op(&self) -> &BipartiteOperator {
        &self.op
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.op.matrix()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.op.dims()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn is_real(&self) -> bool {
        self.matrix().is_real()
    }

    pub fn partial_transpose(&self) -> BipartiteOperator {
        self.op.partial_transpose().expect("dimensions validated at construction")
    }

    pub fn is_ppt(&self, tol: f64) -> Result<bool> {
        Ok(min_eigenvalue(self.partial_transpose().matrix())? >= -tol)
    }

    /// `(1 − p)·self + p·other`.
    pub fn mix(&self, p: f64, other: &Self) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::InvalidArgument("mixed states have different dimensions".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("mixing weight {p} outside [0, 1]")));
        }
        let m = &self.matrix().scale(1.0 - p) + &other.matrix().scale(p);
        Self::new(self.op.with_matrix(m)?)
    }

    /// `self ⊗ other` regrouped as `(A A') ⊗ (B B')`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self { op: self.op.tensor_regrouped(&other.op) }
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("local dimension must be at least 2, got {d}")));
    }
    Ok(())
}

/// `|Φ_d⟩⟨Φ_d|` with `|Φ_d⟩ = d^{-1/2} Σ_i |ii⟩`.
pub fn max_entangled(d: usize) -> Result<DensityOperator> {
    check_dim(d)?;
    let m = ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        if r % (d + 1) == 0 && c % (d + 1) == 0 {
            Complex64::new(1.0 / d as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    DensityOperator::from_matrix(d, d, m)
}

/// Projector `Σ_j |jj⟩⟨jj|` onto the doubled basis.
pub(crate) fn doubled_basis_projector(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        if r == c && r % (d + 1) == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// The two-qutrit state `½(P₃ − Φ₃)`.
pub fn omega3() -> DensityOperator {
    let p = doubled_basis_projector(3);
    let phi = max_entangled(3).expect("d = 3");
    let m = (&p - phi.matrix()).scale(0.5);
    DensityOperator::from_matrix(3, 3, m).expect("valid state")
}

/// The separable pair `σ₊ = (𝟙 + dΦ_d)/(d(d+1))` and `σ₋ = (𝟙 − Φ_d)/(d² − 1)`.
pub fn sigma_pm(d: usize) -> Result<(DensityOperator, DensityOperator)> {
    check_dim(d)?;
    let phi = max_entangled(d)?;
    let id = ComplexMatrix::identity(d * d);
    let df = d as f64;
    let plus = (&id + &phi.matrix().scale(df)).scale(1.0 / (df * (df + 1.0)));
    let minus = (&id - phi.matrix()).scale(1.0 / (df * df - 1.0));
    Ok((DensityOperator::from_matrix(d, d, plus)?, DensityOperator::from_matrix(d, d, minus)?))
}

/// `‖ρ^Γ‖₁`.
pub fn negativity(rho: &DensityOperator) -> Result<f64> {
    Ok(trace_norm(rho.partial_transpose().matrix())?)
}

pub fn log_negativity(rho: &DensityOperator) -> Result<f64> {
    Ok(negativity(rho)?.log2())
}

/// Which cone defines the free states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Ppt,
    Separable,
}

fn require_ppt(cone: Cone) -> Result<()> {
    match cone {
        Cone::Ppt => Ok(()),
        Cone::Separable => Err(Error::NotSdpRepresentable("the separable cone")),
    }
}

/// Optimal operator of a tempered program.
#[derive(Debug, Clone)]
pub struct TemperedWitness {
    pub x: BipartiteOperator,
    /// `Tr Xω`, which equals `‖X‖_∞`.
    pub anchor_value: f64,
}

#[derive(Debug, Clone)]
pub struct TemperedResult {
    pub value: f64,
    pub witness: TemperedWitness,
    pub certificate: Certificate,
}

#[derive(Debug, Clone)]
pub struct RobustnessResult {
    /// Primal value `min Tr δ`.
    pub value: f64,
    /// Value of the dual route `(sup Tr Xρ − 1)/2`.
    pub dual_value: f64,
    pub delta: BipartiteOperator,
    pub primal_certificate: Certificate,
    pub dual_certificate: Certificate,
}

fn check_pair(rho: &DensityOperator, omega: &DensityOperator) -> Result<()> {
    if rho.dims() != omega.dims() {
        return Err(Error::InvalidArgument(format!(
            "state dims {:?} and anchor dims {:?} differ",
            rho.dims(),
            omega.dims()
        )));
    }
    Ok(())
}

/// Orthonormal basis of the kernel of the anchor, as columns.
fn anchor_kernel(omega: &DensityOperator) -> Result<ComplexMatrix> {
    let e: Eigh = eigh(omega.matrix())?;
    let top = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let cols: Vec<usize> = (0..e.values.len()).filter(|&k| e.values[k] <= KERNEL_REL_TOL * top).collect();
    let n = omega.dim();
    Ok(ComplexMatrix::from_fn(n, cols.len(), |r, c| e.vectors[(r, cols[c])]))
}

/// Operators `X` with `‖X‖_∞ = Tr Xω` are exactly `s𝟙 − V M V†` with `V`
/// spanning ker ω and `0 ⪯ M ⪯ 2s𝟙`; this keeps the program strictly feasible.
struct TemperedVariable {
    x: HermExpr,
    s: LinExpr,
    m: Option<HermExpr>,
    kernel: ComplexMatrix,
}

fn tempered_variable(model: &mut Model, omega: &DensityOperator) -> Result<TemperedVariable> {
    let n = omega.dim();
    let kernel = anchor_kernel(omega)?;
    let s = model.scalar();
    let mut x = HermExpr::identity_times(&s, n);
    let m = if kernel.cols() > 0 {
        let m = model.herm(kernel.cols());
        model.psd(m.clone());
        model.psd(HermExpr::identity_times(&s.scale(2.0), kernel.cols()).sub(&m));
        x = x.sub(&m.conjugate(&kernel));
        Some(m)
    } else {
        model.nonneg(s.clone());
        None
    };
    Ok(TemperedVariable { x, s, m, kernel })
}

impl TemperedVariable {
    /// Rebuilds `X` from the solved `s` and `M` with the eigenvalues of `M`
    /// clipped to `[0, 2s]`, so the tempering equality holds exactly.
    fn repaired(&self, sol: &crate::sdp::ModelSolution) -> Result<ComplexMatrix> {
        let s = sol.eval_lin(&self.s).max(0.0);
        let n = self.kernel.rows();
        let mut x = ComplexMatrix::identity(n).scale(s);
        if let Some(m) = &self.m {
            let mv = eigh(&sol.eval(m))?.reconstruct_with(|l| l.clamp(0.0, 2.0 * s));
            x -= &self.kernel.matmul(&mv).matmul(&self.kernel.adjoint());
        }
        Ok(x.hermitian_part())
    }
}

fn model_for(rho: &DensityOperator, omega: &DensityOperator) -> Model {
    Model::new(rho.is_real() && omega.is_real())
}

/// `N_τ(ρ|ω) = sup { Tr Xρ : ‖X^Γ‖_∞ ≤ 1, ‖X‖_∞ = Tr Xω }`.
pub fn tempered_negativity(rho: &DensityOperator, omega: &DensityOperator) -> Result<TemperedResult> {
    tempered_negativity_with(rho, omega, &SolverOptions::default())
}

pub fn tempered_negativity_with(
    rho: &DensityOperator,
    omega: &DensityOperator,
    opts: &SolverOptions,
) -> Result<TemperedResult> {
    check_pair(rho, omega)?;
    let (da, db) = rho.dims();
    let n = rho.dim();
    let mut model = model_for(rho, omega);
    let var = tempered_variable(&mut model, omega)?;
    let xg = var.x.partial_transpose(da, db);
    let id = HermExpr::from_matrix(&ComplexMatrix::identity(n));
    model.psd(id.sub(&xg));
    model.psd(id.add(&xg));
    model.maximize(var.x.trace_with(rho.matrix()));
    let sol = model.solve(opts)?;
    log::debug!("tempered negativity: sdp value {:.12} (bound {:.12})", sol.value, sol.bound);

    let x = var.repaired(&sol)?;
    let xg_norm = op_norm(BipartiteOperator::new(da, db, x.clone())?.partial_transpose()?.matrix())?;
    let x = x.scale(1.0 / xg_norm.max(1.0));
    let witness = BipartiteOperator::new(da, db, x)?;
    let value = witness.matrix().inner_real(rho.matrix());
    let anchor_value = witness.matrix().inner_real(omega.matrix());
    Ok(TemperedResult { value, witness: TemperedWitness { x: witness, anchor_value }, certificate: sol.certificate() })
}

/// `N_τ(ρ) = N_τ(ρ|ρ)`.
pub fn self_tempered_negativity(rho: &DensityOperator) -> Result<TemperedResult> {
    tempered_negativity(rho, rho)
}

/// `log₂ N_τ(ρ)`.
pub fn tempered_log_negativity(rho: &DensityOperator) -> Result<f64> {
    Ok(self_tempered_negativity(rho)?.value.log2())
}

/// Adds `X ∈ [−𝟙, 𝟙]_{PPT*}`: `𝟙 ∓ X = P± + Q±^Γ` with `P±, Q± ⪰ 0`.
/// Returns the two `Q` variables.
fn ppt_dual_interval(model: &mut Model, x: &HermExpr, da: usize, db: usize) -> (HermExpr, HermExpr) {
    let n = da * db;
    let id = HermExpr::from_matrix(&ComplexMatrix::identity(n));
    let q1 = model.herm(n);
    let q2 = model.herm(n);
    model.psd(q1.clone());
    model.psd(q2.clone());
    model.psd(id.sub(x).sub(&q1.partial_transpose(da, db)));
    model.psd(id.add(x).sub(&q2.partial_transpose(da, db)));
    (q1, q2)
}

/// Shrinks `X` until the interval decomposition with the solved `Q±` (clipped
/// to PSD) holds exactly.
fn repair_interval(
    x: &ComplexMatrix,
    q: [&ComplexMatrix; 2],
    da: usize,
    db: usize,
) -> Result<ComplexMatrix> {
    let n = da * db;
    let mut worst: f64 = 0.0;
    for (sign, qk) in [(-1.0, q[0]), (1.0, q[1])] {
        let qp = eigh(qk)?.reconstruct_with(|l| l.max(0.0));
        let qg = BipartiteOperator::new(da, db, qp)?.partial_transpose()?.into_matrix();
        let p = &(&ComplexMatrix::identity(n) + &x.scale(sign)) - &qg;
        worst = worst.max(-min_eigenvalue(&p.hermitian_part())?);
    }
    Ok(x.scale(1.0 / (1.0 + worst.max(0.0))))
}

/// `1 + 2R^τ(ρ|ω) = sup { Tr Xρ : X ∈ [−𝟙, 𝟙]_{PPT*}, ‖X‖_∞ = Tr Xω }`.
pub fn tempered_robustness_ppt(rho: &DensityOperator, omega: &DensityOperator) -> Result<TemperedResult> {
    tempered_robustness_with(rho, omega, &SolverOptions::default())
}

pub fn tempered_robustness_with(
    rho: &DensityOperator,
    omega: &DensityOperator,
    opts: &SolverOptions,
) -> Result<TemperedResult> {
    check_pair(rho, omega)?;
    let (da, db) = rho.dims();
    let mut model = model_for(rho, omega);
    let var = tempered_variable(&mut model, omega)?;
    let (q1, q2) = ppt_dual_interval(&mut model, &var.x, da, db);
    model.maximize(var.x.trace_with(rho.matrix()));
    let sol = model.solve(opts)?;

    let x = var.repaired(&sol)?;
    let x = repair_interval(&x, [&sol.eval(&q1), &sol.eval(&q2)], da, db)?;
    let witness = BipartiteOperator::new(da, db, x)?;
    let sup = witness.matrix().inner_real(rho.matrix());
    let anchor_value = witness.matrix().inner_real(omega.matrix());
    Ok(TemperedResult {
        value: (sup - 1.0) / 2.0,
        witness: TemperedWitness { x: witness, anchor_value },
        certificate: sol.certificate(),
    })
}

pub fn tempered_robustness(rho: &DensityOperator, omega: &DensityOperator, cone: Cone) -> Result<TemperedResult> {
    require_ppt(cone)?;
    tempered_robustness_ppt(rho, omega)
}

/// `R^s(ρ) = min { Tr δ : δ ⪰ 0, δ^Γ ⪰ 0, (ρ + δ)^Γ ⪰ 0 }`, cross-checked
/// against `(sup { Tr Xρ : X ∈ [−𝟙, 𝟙]_{PPT*} } − 1)/2`.
pub fn std_robustness_ppt(rho: &DensityOperator) -> Result<RobustnessResult> {
    std_robustness_with(rho, &SolverOptions::default())
}

pub fn std_robustness_with(rho: &DensityOperator, opts: &SolverOptions) -> Result<RobustnessResult> {
    let (da, db) = rho.dims();
    let n = rho.dim();

    let mut primal = Model::new(rho.is_real());
    let delta = primal.herm(n);
    let dg = delta.partial_transpose(da, db);
    primal.psd(delta.clone());
    primal.psd(dg.clone());
    primal.psd(dg.add_matrix(rho.partial_transpose().matrix()));
    primal.minimize(delta.trace());
    let ps = primal.solve(opts)?;

    let mut dual = Model::new(rho.is_real());
    let x = dual.herm(n);
    ppt_dual_interval(&mut dual, &x, da, db);
    dual.maximize(x.trace_with(rho.matrix()));
    let ds = dual.solve(opts)?;

    let value = ps.value;
    let dual_value = (ds.value - 1.0) / 2.0;
    let diff = (value - dual_value).abs();
    if diff > ROBUSTNESS_AGREEMENT_TOL {
        return Err(Error::PrimalDualMismatch { primal: value, dual: dual_value, diff });
    }
    Ok(RobustnessResult {
        value,
        dual_value,
        delta: BipartiteOperator::new(da, db, ps.eval(&delta).hermitian_part())?,
        primal_certificate: ps.certificate(),
        dual_certificate: ds.certificate(),
    })
}

pub fn std_robustness(rho: &DensityOperator, cone: Cone) -> Result<RobustnessResult> {
    require_ppt(cone)?;
    std_robustness_ppt(rho)
}

/// Haar-random pure state on `C^{d_A} ⊗ C^{d_B}` mixed with white noise at weight `noise`.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim_a: usize, dim_b: usize, noise: f64) -> Result<DensityOperator> {
    let n = dim_a * dim_b;
    let psi: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let pure = DensityOperator::pure(dim_a, dim_b, &psi)?;
    pure.mix(noise, &DensityOperator::maximally_mixed(dim_a, dim_b))
}

/// Noise levels cycled through by [`random_corpus`].
pub const CORPUS_NOISE: [f64; 3] = [0.0, 0.3, 0.7];

/// `count` seeded random states alternating two-qubit and two-qutrit, cycling
/// noise levels through [`CORPUS_NOISE`].
pub fn random_corpus(seed: u64, count: usize) -> Vec<DensityOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let d = if i % 2 == 0 { 2 } else { 3 };
            let noise = CORPUS_NOISE[(i / 2) % CORPUS_NOISE.len()];
            random_state(&mut rng, d, d, noise).expect("mixture of valid states")
        })
        .collect()
}
