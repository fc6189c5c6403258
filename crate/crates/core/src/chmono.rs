//! Channel monotones: PPT-binding robustness, seesaw lower bounds on the
//! channel tempered negativity, entanglement-cost and capacity bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{tensor_channels, Channel};
use crate::linalg::{eigh, BipartiteOperator, Complex64, ComplexMatrix};
use crate::sdp::{Certificate, HermExpr, Model, SolverOptions};
use crate::states::{max_entangled, std_robustness_with, tempered_negativity_with, DensityOperator};
use crate::{Error, Result};

/// Default seesaw seed.
pub const DEFAULT_SEED: u64 = 0x7E3B_E5ED;
/// A lower bound exceeding an upper bound by more than this flags irreversibility.
pub const IRREVERSIBILITY_MARGIN: f64 = 1e-4;
/// Largest `(d_in·d_out)²` accepted for two-copy evaluations.
const MAX_TWO_COPY_DIM: usize = 81;
/// Support cutoff for the relative max-divergence.
const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub max_rounds: usize,
    pub inner_tol: f64,
    pub seed: u64,
    /// Pure bipartite inputs on reference ⊗ input tried first; `Φ_{d_in}` if empty.
    pub initial_inputs: Vec<DensityOperator>,
    pub solver: SolverOptions,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_rounds: 20,
            inner_tol: 1e-8,
            seed: DEFAULT_SEED,
            initial_inputs: Vec::new(),
            solver: SolverOptions::default(),
        }
    }
}

impl SeesawConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_rounds == 0 {
            return Err(Error::InvalidArgument("seesaw needs at least one restart and one round".into()));
        }
        if !(self.inner_tol >= 0.0) {
            return Err(Error::InvalidArgument("inner tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ChannelRobustness {
    pub value: f64,
    /// Optimal dominating Choi operator.
    pub j_theta: BipartiteOperator,
    pub certificate: Certificate,
}

/// `R^s(Λ) = min d_in·t − 1` over `J_Θ` with `Tr_B J_Θ ⪯ t𝟙`,
/// `J_Θ − J_Λ ⪰ 0`, `(J_Θ − J_Λ)^Γ ⪰ 0`, `J_Θ ⪰ 0`, `J_Θ^Γ ⪰ 0`.
pub fn channel_robustness_ke(c: &Channel) -> Result<ChannelRobustness> {
    channel_robustness_ke_with(c, &SolverOptions::default())
}

pub fn channel_robustness_ke_with(c: &Channel, opts: &SolverOptions) -> Result<ChannelRobustness> {
    let (din, dout) = (c.din(), c.dout());
    let jl = c.choi().matrix();
    let mut model = Model::new(jl.is_real());
    let j = model.herm(din * dout);
    let t = model.scalar();
    let excess = j.sub(&HermExpr::from_matrix(jl));
    model.psd(HermExpr::identity_times(&t, din).sub(&j.partial_trace_b(din, dout)));
    model.psd(excess.clone());
    model.psd(excess.partial_transpose(din, dout));
    model.psd(j.clone());
    model.psd(j.partial_transpose(din, dout));
    model.minimize(t.scale(din as f64));
    let sol = model.solve(opts)?;
    Ok(ChannelRobustness {
        value: sol.value - 1.0,
        j_theta: BipartiteOperator::new(din, dout, sol.eval(&j).hermitian_part())?,
        certificate: sol.certificate(),
    })
}

#[derive(Debug, Clone)]
pub struct SeesawResult {
    pub lower_bound: f64,
    pub best_input: DensityOperator,
    pub certificate: Certificate,
    /// Restart that produced the bound.
    pub restart: usize,
    /// Per-restart best values, `None` where the restart failed.
    pub restart_values: Vec<Option<f64>>,
}

struct Evaluation {
    value: f64,
    psi: Vec<Complex64>,
    witness: ComplexMatrix,
    certificate: Certificate,
}

fn normalise(v: &[Complex64]) -> Vec<Complex64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|z| z / n).collect()
}

fn top_vector(rho: &DensityOperator) -> Result<Vec<Complex64>> {
    let e = eigh(rho.matrix())?;
    Ok(e.vector(e.values.len() - 1))
}

fn evaluate(c: &Channel, psi: &[Complex64], opts: &SolverOptions) -> Result<Evaluation> {
    let d = c.din();
    let input = DensityOperator::pure(d, d, psi)?;
    let out = c.apply(&input)?;
    let r = tempered_negativity_with(&out, &out, opts)?;
    Ok(Evaluation {
        value: r.value,
        psi: normalise(psi),
        witness: r.witness.x.into_matrix(),
        certificate: r.certificate,
    })
}

/// One restart: alternate the anchored witness SDP with a top-eigenvector
/// update of the input, keeping the best value seen.
fn seesaw_restart(c: &Channel, start: Vec<Complex64>, cfg: &SeesawConfig) -> Result<Evaluation> {
    let d = c.din();
    let mut best = evaluate(c, &start, &cfg.solver)?;
    for _ in 0..cfg.max_rounds {
        let lifted = c.apply_adjoint_extended(&best.witness, d)?.hermitian_part();
        let e = eigh(&lifted)?;
        let mut cand = e.vector(e.values.len() - 1);
        // align the phase so damped mixtures interpolate
        let overlap: Complex64 = best.psi.iter().zip(&cand).map(|(a, b)| a.conj() * b).sum();
        if overlap.norm() > 0.0 {
            let phase = overlap.conj() / overlap.norm();
            cand.iter_mut().for_each(|z| *z *= phase);
        }
        let mut improved = false;
        for step in [1.0, 0.5, 0.25] {
            let trial: Vec<Complex64> = if step == 1.0 {
                cand.clone()
            } else {
                best.psi.iter().zip(&cand).map(|(a, b)| a * (1.0 - step) + b * step).collect()
            };
            if trial.iter().all(|z| z.norm() == 0.0) {
                continue;
            }
            let ev = evaluate(c, &trial, &cfg.solver)?;
            if ev.value > best.value + cfg.inner_tol {
                best = ev;
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(best)
}

fn haar_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    normalise(&v)
}

/// Seesaw lower bound on `sup_ψ N_τ([id ⊗ Λ](ψ))` over pure inputs on reference ⊗ input.
///
/// Restarts run in parallel; the best value wins, ties going to the lowest restart index.
pub fn channel_tempered_negativity(c: &Channel, cfg: &SeesawConfig) -> Result<SeesawResult> {
    cfg.validate()?;
    let d = c.din();
    if d < 2 {
        return Err(Error::InvalidArgument("channel input dimension must be at least 2".into()));
    }
    let mut starts = Vec::new();
    if cfg.initial_inputs.is_empty() {
        starts.push(top_vector(&max_entangled(d)?)?);
    }
    for rho in &cfg.initial_inputs {
        if rho.dims() != (d, d) {
            return Err(Error::InvalidArgument(format!("initial input dims {:?}, expected ({d}, {d})", rho.dims())));
        }
        starts.push(top_vector(rho)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while starts.len() < cfg.restarts {
        starts.push(haar_vector(&mut rng, d * d));
    }

    let results: Vec<Result<Evaluation>> = starts.into_par_iter().map(|s| seesaw_restart(c, s, cfg)).collect();
    let restart_values = results.iter().map(|r| r.as_ref().ok().map(|e| e.value)).collect();
    let mut best: Option<(usize, Evaluation)> = None;
    let mut first_err = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(ev) => {
                if best.as_ref().is_none_or(|(_, b)| ev.value > b.value) {
                    best = Some((i, ev));
                }
            }
            Err(e) => {
                log::warn!("seesaw restart {i} failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    let (restart, ev) = match best {
        Some(b) => b,
        None => return Err(first_err.expect("at least one restart")),
    };
    Ok(SeesawResult {
        lower_bound: ev.value,
        best_input: DensityOperator::pure(d, d, &ev.psi)?,
        certificate: ev.certificate,
        restart,
        restart_values,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CostBound {
    pub copies: usize,
    pub tempered_negativity: f64,
    /// `(1/n) log₂ N_τ`, bits per channel use.
    pub bits_per_use: f64,
    pub certificate: Certificate,
}

/// Finite-`n` lower bound on the entanglement cost in bits per use.
///
/// `n = 1` uses the seesaw; `n = 2` evaluates `Λ^{⊗2}` at the input `Φ ⊗ Φ`.
pub fn ec_lower_bound(c: &Channel, n: usize, cfg: &SeesawConfig) -> Result<CostBound> {
    match n {
        1 => {
            let r = channel_tempered_negativity(c, cfg)?;
            Ok(CostBound {
                copies: 1,
                tempered_negativity: r.lower_bound,
                bits_per_use: r.lower_bound.log2(),
                certificate: r.certificate,
            })
        }
        2 => {
            let dim = c.din() * c.dout();
            if dim * dim > MAX_TWO_COPY_DIM {
                return Err(Error::InvalidArgument(format!(
                    "two-copy evaluation needs a {}-dimensional SDP; at most {MAX_TWO_COPY_DIM} is supported",
                    dim * dim
                )));
            }
            let cc = tensor_channels(c, c)?;
            let out = cc.choi_state()?;
            let r = tempered_negativity_with(&out, &out, &cfg.solver)?;
            Ok(CostBound {
                copies: 2,
                tempered_negativity: r.value,
                bits_per_use: r.value.log2() / 2.0,
                certificate: r.certificate,
            })
        }
        _ => Err(Error::InvalidArgument(format!("copies must be 1 or 2, got {n}"))),
    }
}

#[derive(Debug, Clone)]
pub struct CapacityBound {
    /// `log₂(d_in·t)` in bits.
    pub value: f64,
    /// `log₂ max(1, d·⟨Φ|J_Λ|Φ⟩)`, a lower bound on `value` for equal dimensions.
    pub probe_lower_bound: f64,
    pub certificate: Certificate,
}

/// Upper bound on the quantum capacity by the max-divergence to PPT-binding channels:
/// `min log₂(d_in·t)` over `G ⪰ J_Λ`, `G ⪰ 0`, `G^Γ ⪰ 0`, `Tr_B G ⪯ t𝟙`.
///
/// `G` stands for `t′·J_Γ`; the marginal equality of `J_Γ` is relaxed to `⪯`,
/// which only enlarges the PPT-binding set by non-trace-preserving maps and
/// leaves the optimum unchanged.
pub fn qcap_upper_bound(c: &Channel) -> Result<CapacityBound> {
    qcap_upper_bound_with(c, &SolverOptions::default())
}

pub fn qcap_upper_bound_with(c: &Channel, opts: &SolverOptions) -> Result<CapacityBound> {
    let (din, dout) = (c.din(), c.dout());
    let jl = c.choi().matrix();
    let mut model = Model::new(jl.is_real());
    let g = model.herm(din * dout);
    let t = model.scalar();
    model.psd(g.sub(&HermExpr::from_matrix(jl)));
    model.psd(g.clone());
    model.psd(g.partial_transpose(din, dout));
    model.psd(HermExpr::identity_times(&t, din).sub(&g.partial_trace_b(din, dout)));
    model.minimize(t.scale(din as f64));
    let sol = model.solve(opts)?;
    let probe = if din == dout && din >= 2 {
        let phi = max_entangled(din)?;
        (din as f64 * jl.inner_real(phi.matrix())).max(1.0).log2()
    } else {
        0.0
    };
    let value = sol.value.max(f64::MIN_POSITIVE).log2();
    if value < probe - 1e-6 {
        return Err(Error::Consistency(format!("capacity bound {value:.9} below the probe bound {probe:.9}")));
    }
    Ok(CapacityBound { value, probe_lower_bound: probe, certificate: sol.certificate() })
}

/// `D_max(a‖b) = log₂ λ_max(J_b^{-1/2} J_a J_b^{-1/2})`, `+∞` when
/// `supp J_a ⊄ supp J_b`.
pub fn dmax_relative(a: &Channel, b: &Channel) -> Result<f64> {
    if (a.din(), a.dout()) != (b.din(), b.dout()) {
        return Err(Error::InvalidArgument("channels have different dimensions".into()));
    }
    let ja = a.choi().matrix();
    let eb = eigh(b.choi().matrix())?;
    let top = eb.values.last().copied().unwrap_or(0.0);
    let cut = SUPPORT_TOL * top.max(1.0);
    let outside = eb.reconstruct_with(|l| if l > cut { 0.0 } else { 1.0 });
    if outside.matmul(ja).matmul(&outside).max_abs() > 1e-9 {
        return Ok(f64::INFINITY);
    }
    let inv_sqrt = eb.reconstruct_with(|l| if l > cut { 1.0 / l.sqrt() } else { 0.0 });
    let m = inv_sqrt.matmul(ja).matmul(&inv_sqrt).hermitian_part();
    let e = eigh(&m)?;
    Ok(e.values.last().copied().unwrap_or(0.0).log2())
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NamedCertificate {
    pub solve: String,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundReport {
    pub channel: String,
    pub ec_lower_bound: f64,
    pub q_upper_bound: f64,
    pub q_probe_lower_bound: f64,
    pub per_copy: Vec<CostBound>,
    pub certificates: Vec<NamedCertificate>,
    pub irreversibility_witnessed: bool,
}

impl BoundReport {
    pub fn gap(&self) -> f64 {
        self.ec_lower_bound - self.q_upper_bound
    }

    pub fn all_certified(&self) -> bool {
        self.certificates.iter().all(|c| c.certificate.passed)
    }
}

/// Cost lower bound for each of `1..=copies` copies against the capacity upper bound.
pub fn irreversibility_report(c: &Channel, name: &str, cfg: &SeesawConfig, copies: usize) -> Result<BoundReport> {
    if copies == 0 || copies > 2 {
        return Err(Error::InvalidArgument(format!("copies must be 1 or 2, got {copies}")));
    }
    let mut per_copy = Vec::new();
    for n in 1..=copies {
        per_copy.push(ec_lower_bound(c, n, cfg)?);
    }
    let q = qcap_upper_bound_with(c, &cfg.solver)?;
    let ec = per_copy.iter().map(|b| b.bits_per_use).fold(f64::NEG_INFINITY, f64::max);
    let mut certificates: Vec<NamedCertificate> = per_copy
        .iter()
        .map(|b| NamedCertificate { solve: format!("tempered-negativity-n{}", b.copies), certificate: b.certificate })
        .collect();
    certificates.push(NamedCertificate { solve: "capacity-upper-bound".into(), certificate: q.certificate });
    Ok(BoundReport {
        channel: name.to_string(),
        ec_lower_bound: ec,
        q_upper_bound: q.value,
        q_probe_lower_bound: q.probe_lower_bound,
        per_copy,
        certificates,
        irreversibility_witnessed: ec - q.value > IRREVERSIBILITY_MARGIN,
    })
}

/// `R^s` of `[id ⊗ Λ](ρ)`, the right-hand side of the channel–state robustness inequality.
pub fn output_robustness(c: &Channel, rho: &DensityOperator, opts: &SolverOptions) -> Result<f64> {
    Ok(std_robustness_with(&c.apply(rho)?, opts)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{dephasing, identity, omega3_channel};

    #[test]
    fn dmax_of_omega3_against_dephasing() {
        let v = dmax_relative(&omega3_channel(), &dephasing(3).unwrap()).unwrap();
        assert!((v - 1.5f64.log2()).abs() < 1e-10);
        // Φ₃ ⪯ P₃ = 3·J_Δ, while P₃ leaves the support of Φ₃
        assert!((dmax_relative(&identity(3).unwrap(), &dephasing(3).unwrap()).unwrap() - 3f64.log2()).abs() < 1e-10);
        assert_eq!(dmax_relative(&dephasing(3).unwrap(), &identity(3).unwrap()).unwrap(), f64::INFINITY);
        assert!(dmax_relative(&identity(2).unwrap(), &identity(2).unwrap()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let cfg = SeesawConfig { restarts: 0, ..Default::default() };
        assert!(channel_tempered_negativity(&identity(2).unwrap(), &cfg).is_err());
        assert!(ec_lower_bound(&identity(2).unwrap(), 3, &SeesawConfig::default()).is_err());
    }

    #[test]
    fn two_copy_dimension_cap() {
        let c = identity(4).unwrap();
        assert!(ec_lower_bound(&c, 2, &SeesawConfig::default()).is_err());
    }
}
