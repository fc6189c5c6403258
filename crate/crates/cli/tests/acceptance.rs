//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails or overruns its time budget.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use serde_json::Value;

use tempered_core::channels::{identity, omega3_channel};
use tempered_core::chmono::{channel_robustness_ke, ec_lower_bound, qcap_upper_bound, SeesawConfig};
use tempered_core::corpus::{run_corpus, CorpusOptions};
use tempered_core::states::{max_entangled, omega3, std_robustness_ppt, tempered_negativity};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn omega3_tempered_negativity() -> Check {
    let w = omega3();
    let r = tempered_negativity(&w, &w).map_err(|e| e.to_string())?;
    let e = r.value.log2();
    ensure(
        (r.value - 2.0).abs() <= 1e-5 && (e - 1.0).abs() <= 1e-5 && r.certificate.passed,
        format!("N_tau = {:.12}, log2 = {e:.12}", r.value),
    )
}

fn phi_robustness(d: usize) -> Check {
    let r = std_robustness_ppt(&max_entangled(d).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let expected = (d - 1) as f64;
    ensure((r.value - expected).abs() <= 1e-5, format!("d = {d}: R = {:.12} (dual {:.12})", r.value, r.dual_value))
}

fn identity_channel_robustness(d: usize) -> Check {
    let r = channel_robustness_ke(&identity(d).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let expected = (d - 1) as f64;
    ensure(
        (r.value - expected).abs() <= 1e-4 && r.certificate.passed,
        format!("d = {d}: R = {:.12}", r.value),
    )
}

fn capacity_bound() -> Check {
    let r = qcap_upper_bound(&omega3_channel()).map_err(|e| e.to_string())?;
    ensure(
        r.value <= 1.5f64.log2() + 1e-5 && r.value >= r.probe_lower_bound - 1e-6 && r.certificate.passed,
        format!("Q <= {:.12}, probe {:.12}", r.value, r.probe_lower_bound),
    )
}

fn irreversibility_gap() -> Check {
    let cfg = SeesawConfig::default();
    let ec = ec_lower_bound(&omega3_channel(), 1, &cfg).map_err(|e| e.to_string())?;
    let q = qcap_upper_bound(&omega3_channel()).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_tempered"))
        .arg("repro")
        .env_remove("TB_SDP_TOL")
        .output()
        .map_err(|e| e.to_string())?;
    let report: Value = serde_json::from_slice(&out.stdout).map_err(|e| format!("repro output: {e}"))?;
    let flag = report["flags"]["irreversibilityWitnessed"] == Value::Bool(true);
    ensure(
        ec.bits_per_use >= 1.0 - 1e-4 && 1.0 - 1e-4 > q.value && out.status.success() && flag,
        format!(
            "E_C >= {:.12}, Q <= {:.12}, repro exit {:?}, gap {}",
            ec.bits_per_use,
            q.value,
            out.status.code(),
            report["bounds"]["gap"]
        ),
    )
}

fn two_copy_supermultiplicativity() -> Check {
    let b = ec_lower_bound(&omega3_channel(), 2, &SeesawConfig::default()).map_err(|e| e.to_string())?;
    ensure(
        b.tempered_negativity >= 4.0 * (1.0 - 1e-3) && b.certificate.passed,
        format!("N_tau(omega3 x omega3) = {:.12}", b.tempered_negativity),
    )
}

fn property_suites() -> Check {
    let mut failed = Vec::new();
    let mut checks = 0;
    for seed in 0..3 {
        let report = run_corpus(&CorpusOptions::new(seed));
        for p in &report.properties {
            checks += p.checks;
            if !p.passed {
                failed.push(format!("seed {seed} {} (worst slack {:.3e})", p.name, p.worst_slack));
            }
        }
    }
    if failed.is_empty() {
        Ok(format!("{checks} checks over seeds 0, 1, 2"))
    } else {
        Err(format!("{checks} checks; failing: {}", failed.join("; ")))
    }
}

fn timed(label: &str, budget: Duration, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = f();
    let took = start.elapsed();
    let (ok, detail) = match outcome {
        Ok(d) if took <= budget => (true, d),
        Ok(d) => (false, format!("{d}; over budget {budget:?}")),
        Err(d) => (false, d),
    };
    println!("{} {label}: {detail} [{:.1}s]", if ok { "PASS" } else { "FAIL" }, took.as_secs_f64());
    ok
}

fn main() -> ExitCode {
    let s = Duration::from_secs;
    let results = [
        timed("1 tempered negativity of omega3", s(10), omega3_tempered_negativity),
        timed("2 PPT robustness of Phi_d", s(20), || phi_robustness(2).and_then(|a| Ok(format!("{a}; {}", phi_robustness(3)?)))),
        timed("3 channel robustness of id_d", s(60), || {
            identity_channel_robustness(2).and_then(|a| Ok(format!("{a}; {}", identity_channel_robustness(3)?)))
        }),
        timed("4 capacity bound of Omega3", s(30), capacity_bound),
        timed("5 irreversibility gap", s(120), irreversibility_gap),
        timed("6 two-copy supermultiplicativity", s(30 * 60), two_copy_supermultiplicativity),
        timed("7 property suites", s(20 * 60), property_suites),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
