//! Seeded property suite over random states and the channel zoo.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{
    dephasing, diamond_distance_with, ground_state, identity, omega3_channel, pauli_z, random_channel,
    truncation_error, Channel,
};
use crate::chmono::channel_robustness_ke_with;
use crate::linalg::{BipartiteOperator, Complex64, ComplexMatrix};
use crate::sdp::SolverOptions;
use crate::states::{
    negativity, omega3, random_corpus, random_state, std_robustness_with, tempered_negativity_with,
    tempered_robustness_with, DensityOperator,
};
use crate::{Error, Result};

pub const CORPUS_FORMAT: &str = "corpus-v1";
/// Slack allowed in every inequality of the suite.
pub const PROPERTY_TOL: f64 = 1e-6;
const STATE_COUNT: usize = 50;
const PROBE_COUNT: usize = 10;
const OMEGA3_TEMPERED_NEGATIVITY: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct CorpusOptions {
    pub seed: u64,
    /// Replaces a fixture value by a wrong one, to show that failures surface.
    pub sabotage: bool,
    pub solver: SolverOptions,
}

impl CorpusOptions {
    pub fn new(seed: u64) -> Self {
        Self { seed, sabotage: false, solver: SolverOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    /// Smallest slack seen; negative means violated.
    pub worst_slack: f64,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusReport {
    pub format: &'static str,
    pub seed: u64,
    pub sabotage: bool,
    pub passed: bool,
    pub properties: Vec<PropertyOutcome>,
}

impl CorpusReport {
    pub fn property(&self, name: &str) -> Option<&PropertyOutcome> {
        self.properties.iter().find(|p| p.name == name)
    }
}

struct Tally {
    name: &'static str,
    checks: usize,
    worst: f64,
    failures: Vec<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self { name, checks: 0, worst: f64::INFINITY, failures: Vec::new() }
    }

    /// Records `slack ≥ 0` as a pass.
    fn check(&mut self, slack: f64, label: impl FnOnce() -> String) {
        self.checks += 1;
        self.worst = self.worst.min(slack);
        if !(slack >= 0.0) {
            self.failures.push(format!("{} (slack {slack:.3e})", label()));
        }
    }

    fn error(&mut self, label: String, e: &Error) {
        self.checks += 1;
        self.worst = f64::NEG_INFINITY;
        self.failures.push(format!("{label}: {e}"));
    }

    fn finish(self) -> PropertyOutcome {
        PropertyOutcome {
            name: self.name,
            passed: self.failures.is_empty() && self.checks > 0,
            checks: self.checks,
            worst_slack: if self.checks == 0 { f64::NAN } else { self.worst },
            failures: self.failures,
        }
    }
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k))
}

fn pt_involution(seed: u64) -> PropertyOutcome {
    let mut t = Tally::new("partial-transpose-involution");
    let mut rng = stream(seed, 1);
    for (da, db) in [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2)] {
        for _ in 0..4 {
            let n = da * db;
            let m = ComplexMatrix::from_fn(n, n, |_, _| {
                Complex64::new(rand::Rng::random_range(&mut rng, -1.0..1.0), rand::Rng::random_range(&mut rng, -1.0..1.0))
            });
            let op = BipartiteOperator::new(da, db, m.clone()).expect("square");
            let back = op.partial_transpose().and_then(|g| g.partial_transpose()).expect("dims valid");
            let dev = (back.matrix() - &m).max_abs();
            t.check(1e-12 - dev, || format!("{da}x{db}: deviation {dev:.3e}"));
        }
    }
    t.finish()
}

struct StateRow {
    index: usize,
    negativity: Result<f64>,
    tempered_negativity: Result<f64>,
    tempered_robustness: Result<f64>,
    robustness: Result<(f64, f64)>,
}

fn evaluate_state(index: usize, rho: &DensityOperator, opts: &SolverOptions) -> StateRow {
    StateRow {
        index,
        negativity: negativity(rho),
        tempered_negativity: tempered_negativity_with(rho, rho, opts).map(|r| r.value),
        tempered_robustness: tempered_robustness_with(rho, rho, opts).map(|r| r.value),
        robustness: std_robustness_with(rho, opts).map(|r| (r.value, r.dual_value)),
    }
}

fn state_properties(seed: u64, opts: &SolverOptions, agreement: &mut Tally) -> Vec<PropertyOutcome> {
    let corpus = random_corpus(seed, STATE_COUNT);
    let rows: Vec<StateRow> = corpus.par_iter().enumerate().map(|(i, rho)| evaluate_state(i, rho, opts)).collect();
    let mut below_n = Tally::new("tempered-negativity-below-negativity");
    let mut below_rs = Tally::new("tempered-robustness-below-standard");
    let mut above_nt = Tally::new("tempered-robustness-above-half-tempered-negativity");
    for row in rows {
        let i = row.index;
        match &row.robustness {
            Ok((p, d)) => agreement.check(PROPERTY_TOL - (p - d).abs(), || format!("state {i}: primal {p} dual {d}")),
            Err(e) => agreement.error(format!("state {i}"), e),
        }
        match (&row.tempered_negativity, &row.negativity) {
            (Ok(nt), Ok(n)) => below_n.check(n + PROPERTY_TOL - nt, || format!("state {i}: N_τ {nt} > N {n}")),
            (Err(e), _) | (_, Err(e)) => below_n.error(format!("state {i}"), e),
        }
        match (&row.tempered_robustness, &row.robustness) {
            (Ok(rt), Ok((rs, _))) => below_rs.check(rs + PROPERTY_TOL - rt, || format!("state {i}: R^τ {rt} > R^s {rs}")),
            (Err(e), _) | (_, Err(e)) => below_rs.error(format!("state {i}"), e),
        }
        match (&row.tempered_robustness, &row.tempered_negativity) {
            (Ok(rt), Ok(nt)) => {
                above_nt.check(rt - 0.5 * (nt - 1.0) + PROPERTY_TOL, || format!("state {i}: R^τ {rt} < (N_τ {nt} − 1)/2"))
            }
            (Err(e), _) | (_, Err(e)) => above_nt.error(format!("state {i}"), e),
        }
    }
    vec![below_n.finish(), below_rs.finish(), above_nt.finish()]
}

fn perturbation_bound(opts: &SolverOptions) -> PropertyOutcome {
    let mut t = Tally::new("perturbation-bound");
    let w = omega3();
    let base = match tempered_robustness_with(&w, &w, opts) {
        Ok(r) => r.value,
        Err(e) => {
            t.error("R^τ(ω₃)".into(), &e);
            return t.finish();
        }
    };
    let white = DensityOperator::maximally_mixed(3, 3);
    for eps in [0.01, 0.05] {
        // depolarising at weight 9ε/7 moves ω₃ by exactly ε in trace distance
        let p = 9.0 * eps / 7.0;
        let perturbed = w.mix(p, &white).expect("valid mixture");
        match tempered_robustness_with(&perturbed, &w, opts) {
            Ok(r) => {
                let lhs = 1.0 + 2.0 * r.value;
                let rhs = (1.0 - 2.0 * eps) * (1.0 + 2.0 * base);
                t.check(lhs - rhs + PROPERTY_TOL, || format!("ε = {eps}: {lhs} < {rhs}"));
            }
            Err(e) => t.error(format!("ε = {eps}"), &e),
        }
    }
    t.finish()
}

fn zoo() -> Vec<(&'static str, Channel)> {
    vec![
        ("id3", identity(3).expect("d = 3")),
        ("dephasing3", dephasing(3).expect("d = 3")),
        ("omega3", omega3_channel()),
    ]
}

fn diamond_properties(opts: &SolverOptions) -> Vec<PropertyOutcome> {
    let mut selfd = Tally::new("diamond-self-distance");
    for (name, c) in zoo() {
        match diamond_distance_with(&c, &c, opts) {
            Ok(r) => selfd.check(PROPERTY_TOL - r.value.abs(), || format!("{name}: {}", r.value)),
            Err(e) => selfd.error(name.into(), &e),
        }
    }
    let mut z = Tally::new("diamond-identity-vs-pauli-z");
    match diamond_distance_with(&identity(2).expect("d = 2"), &pauli_z(), opts) {
        Ok(r) => z.check(1e-4 - (r.value - 2.0).abs(), || format!("value {}", r.value)),
        Err(e) => z.error("id2 vs Z".into(), &e),
    }
    vec![selfd.finish(), z.finish()]
}

fn robustness_dominates_outputs(seed: u64, opts: &SolverOptions, agreement: &mut Tally) -> PropertyOutcome {
    let mut t = Tally::new("channel-robustness-dominates-outputs");
    let mut rng = stream(seed, 2);
    let probes: Vec<DensityOperator> = (0..PROBE_COUNT)
        .map(|i| random_state(&mut rng, 3, 3, if i % 2 == 0 { 0.0 } else { 0.3 }).expect("valid state"))
        .collect();
    for (name, c) in zoo() {
        let rob = match channel_robustness_ke_with(&c, opts) {
            Ok(r) => r.value,
            Err(e) => {
                t.error(name.into(), &e);
                continue;
            }
        };
        let outs: Vec<Result<(f64, f64)>> = probes
            .par_iter()
            .map(|rho| {
                let out = c.apply(rho)?;
                std_robustness_with(&out, opts).map(|r| (r.value, r.dual_value))
            })
            .collect();
        for (i, out) in outs.into_iter().enumerate() {
            match out {
                Ok((v, d)) => {
                    t.check(rob - v + PROPERTY_TOL, || format!("{name}, probe {i}: {rob} < {v}"));
                    agreement.check(PROPERTY_TOL - (v - d).abs(), || format!("{name}, probe {i}: primal {v} dual {d}"));
                }
                Err(e) => {
                    if matches!(e, Error::PrimalDualMismatch { .. }) {
                        agreement.error(format!("{name}, probe {i}"), &e);
                    }
                    t.error(format!("{name}, probe {i}"), &e);
                }
            }
        }
    }
    t.finish()
}

fn truncation_monotone(seed: u64) -> PropertyOutcome {
    let mut t = Tally::new("truncation-error-non-increasing");
    let mut rng = stream(seed, 3);
    let c = match random_channel(&mut rng, 6, 6, 3) {
        Ok(c) => c,
        Err(e) => {
            t.error("random channel".into(), &e);
            return t.finish();
        }
    };
    let x = ComplexMatrix::identity(6).scale(1.0 / 6.0);
    let anchor = ground_state(6);
    let errs: Vec<Result<f64>> = (1..=6).map(|k| truncation_error(&c, k, &anchor, &x)).collect();
    let mut prev: Option<f64> = None;
    for (k, e) in errs.into_iter().enumerate() {
        match e {
            Ok(v) => {
                if let Some(p) = prev {
                    t.check(p - v + 1e-12, || format!("k = {}: error {v} > {p} at k = {}", k + 1, k));
                }
                prev = Some(v);
            }
            Err(e) => t.error(format!("k = {}", k + 1), &e),
        }
    }
    if let Some(last) = prev {
        t.check(1e-12 - last, || format!("error {last} at full dimension"));
    }
    t.finish()
}

fn omega3_fixture(opts: &SolverOptions, sabotage: bool) -> PropertyOutcome {
    let mut t = Tally::new("fixture-omega3-tempered-negativity");
    let expected = if sabotage { OMEGA3_TEMPERED_NEGATIVITY + 0.5 } else { OMEGA3_TEMPERED_NEGATIVITY };
    let w = omega3();
    match tempered_negativity_with(&w, &w, opts) {
        Ok(r) => t.check(1e-5 - (r.value - expected).abs(), || format!("N_τ(ω₃) = {} vs fixture {expected}", r.value)),
        Err(e) => t.error("N_τ(ω₃)".into(), &e),
    }
    t.finish()
}

/// Runs every property at `opts.seed`; solver failures count as property failures.
pub fn run_corpus(opts: &CorpusOptions) -> CorpusReport {
    let solver = &opts.solver;
    let mut agreement = Tally::new("robustness-primal-dual-agreement");
    let mut properties = vec![pt_involution(opts.seed)];
    properties.extend(state_properties(opts.seed, solver, &mut agreement));
    properties.push(perturbation_bound(solver));
    properties.extend(diamond_properties(solver));
    properties.push(robustness_dominates_outputs(opts.seed, solver, &mut agreement));
    properties.push(truncation_monotone(opts.seed));
    properties.push(omega3_fixture(solver, opts.sabotage));
    properties.insert(1, agreement.finish());
    let passed = properties.iter().all(|p| p.passed);
    CorpusReport { format: CORPUS_FORMAT, seed: opts.seed, sabotage: opts.sabotage, passed, properties }
}
