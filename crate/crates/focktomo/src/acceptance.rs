//! Self-check suite: end-to-end criteria with pinned seeds and tolerances.
//!
//! Each criterion returns a [`CriterionOutcome`] with a one-line summary; the
//! CLI `selftest` command prints them and the `acceptance` integration test
//! asserts them. Everything here is deterministic: fixed seeds, fixed block
//! decomposition, fixed-order reductions.

use crate::analysis::{bootstrap_with, wigner_point, Statistic};
use crate::error::Result;
use crate::exec::Exec;
use crate::fock::{fidelity, DensityMatrix, FockCutoff};
use crate::herald::{conditional_signal_state, herald_probability, HeraldScenario};
use crate::homodyne::{quadrature_csv_string, sample_quadratures, PhasePolicy, QuadratureRecord};
use crate::pipeline::{
    calibrate_shot_noise, classify_event, extract_quadratures, slot_variance_profile, synth,
    veto_two_photon_events, HeraldFilter, ThresholdConfig,
};
use crate::tomography::{mle_reconstruct, MleConfig, MleResult, MONOTONICITY_TOL};

/// Published photon-number distribution of the heralded single-photon state.
pub const SINGLE_PHOTON_ROW: [f64; 5] = [0.372, 0.620, 0.000, 0.008, 0.000];
/// Published photon-number distribution of the heralded two-photon state.
pub const TWO_PHOTON_ROW: [f64; 5] = [0.119, 0.382, 0.408, 0.079, 0.013];

const SEED_CLOSED_LOOP: [u64; 3] = [138, 118, 103];
const SEED_VETO: u64 = 606;
const SEED_VACUUM: u64 = 707;
const SEED_SLOT_PROFILE: u64 = 708;
const SEED_BOOTSTRAP: u64 = 808;

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: usize,
    pub label: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    fn new(id: usize, label: &'static str, passed: bool, detail: String) -> Self {
        CriterionOutcome { id, label, passed, detail }
    }

    /// The one pass/fail line printed per criterion.
    pub fn line(&self) -> String {
        format!(
            "criterion {} ({}): {} - {}",
            self.id,
            self.label,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

/// Run all criteria in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    vec![
        criterion_1_tmsv_normalization(),
        criterion_2_single_photon_wigner(),
        criterion_3_two_photon_wigner(),
        criterion_4_closed_loop_tomography(),
        criterion_5_mle_monotonicity(),
        criterion_6_veto_property(),
        criterion_7_pipeline_normalization(),
        criterion_8_bootstrap_calibration(),
        criterion_9_determinism(),
    ]
}

/// Σ_n p(n) = 1 within 1e-12 at r = 0.5, n_max = 40.
pub fn criterion_1_tmsv_normalization() -> CriterionOutcome {
    let cutoff = FockCutoff::new(40);
    let total: f64 = (0..=40)
        .map(|n| {
            let s = HeraldScenario::new(0.5, 1.0, 1.0, n, cutoff)
                .expect("r = 0.5 fits well inside n_max = 40");
            herald_probability(&s)
        })
        .sum();
    let defect = (total - 1.0).abs();
    CriterionOutcome::new(
        1,
        "herald-probability normalization",
        defect < 1e-12,
        format!("|Σ p(n) - 1| = {defect:.3e} (< 1e-12 required)"),
    )
}

/// W(0,0) of the published single-photon distribution: -0.0815 ± 0.0005.
pub fn criterion_2_single_photon_wigner() -> CriterionOutcome {
    let rho = DensityMatrix::from_diag_probs(&SINGLE_PHOTON_ROW, FockCutoff::new(4))
        .expect("published row is a valid distribution");
    let w = wigner_point(&rho, 0.0, 0.0);
    CriterionOutcome::new(
        2,
        "single-photon Wigner negativity",
        (w + 0.0815).abs() <= 0.0005,
        format!("W(0,0) = {w:.5} (required -0.0815 ± 0.0005)"),
    )
}

/// W(0, 0.65) of the published two-photon distribution: -0.0082 ± 0.0010,
/// with W(0,0) positive (the negativity sits off-origin).
pub fn criterion_3_two_photon_wigner() -> CriterionOutcome {
    let rho = DensityMatrix::from_diag_probs(&TWO_PHOTON_ROW, FockCutoff::new(4))
        .expect("published row is accepted after renormalization");
    let w_ring = wigner_point(&rho, 0.0, 0.65);
    let w_origin = wigner_point(&rho, 0.0, 0.0);
    let passed = (w_ring + 0.0082).abs() <= 0.0010 && w_origin > 0.0;
    CriterionOutcome::new(
        3,
        "two-photon Wigner negativity",
        passed,
        format!(
            "W(0,0.65) = {w_ring:.5} (required -0.0082 ± 0.0010), W(0,0) = {w_origin:.4} (> 0 required)"
        ),
    )
}

struct ClosedLoopRun {
    name: &'static str,
    truth: DensityMatrix,
    records: Vec<QuadratureRecord>,
    result: MleResult,
}

fn closed_loop_runs() -> Result<Vec<ClosedLoopRun>> {
    let cutoff = FockCutoff::new(10);
    let scenarios = [
        ("r=0.3 lossless n=1", HeraldScenario::new(0.3, 1.0, 1.0, 1, cutoff)?),
        ("r=0.3 eta_s=0.62 n=1", HeraldScenario::new(0.3, 1.0, 0.62, 1, cutoff)?),
        ("r=0.5 eta=0.85 n=2", HeraldScenario::new(0.5, 0.85, 0.85, 2, cutoff)?),
    ];
    scenarios
        .into_iter()
        .zip(SEED_CLOSED_LOOP)
        .map(|((name, scenario), seed)| {
            let (truth, _) = conditional_signal_state(&scenario)?;
            let records = sample_quadratures(
                &truth,
                10_000,
                PhasePolicy::UniformRandom,
                scenario.herald_n() as u32,
                seed,
            );
            let result = mle_reconstruct(&records, &MleConfig::new(cutoff))?;
            Ok(ClosedLoopRun { name, truth, records, result })
        })
        .collect()
}

/// Simulate 10k quadratures per scenario, reconstruct, and require
/// fidelity ≥ 0.99 plus every P(n) within 3 binomial standard errors.
pub fn criterion_4_closed_loop_tomography() -> CriterionOutcome {
    let runs = match closed_loop_runs() {
        Ok(r) => r,
        Err(e) => {
            return CriterionOutcome::new(4, "closed-loop tomography", false, format!("error: {e}"))
        }
    };
    let mut passed = true;
    let mut details = Vec::new();
    for run in &runs {
        let f = match fidelity(&run.truth, &run.result.rho) {
            Ok(f) => f,
            Err(e) => {
                return CriterionOutcome::new(
                    4,
                    "closed-loop tomography",
                    false,
                    format!("fidelity error: {e}"),
                )
            }
        };
        let n = run.records.len() as f64;
        let mut worst: f64 = 0.0;
        let mut p_ok = true;
        for (t, r) in run.truth.diagonal().iter().zip(run.result.rho.diagonal()) {
            // Binomial SE with the larger-variance plug-in of truth and
            // estimate. Components with truth exactly 0 or 1 would otherwise
            // get a zero bound that no finite-sample estimate can meet.
            let var = (t * (1.0 - t)).max(r * (1.0 - r));
            let bound = 3.0 * (var / n).sqrt();
            let diff = (t - r).abs();
            if diff > bound {
                p_ok = false;
            }
            if bound > 0.0 && diff > 0.0 {
                worst = worst.max(diff / bound);
            }
        }
        let run_ok = f >= 0.99 && p_ok && run.result.converged;
        passed &= run_ok;
        details.push(format!("[{}] fidelity {f:.5}, worst |ΔP|/3SE {worst:.2}", run.name));
    }
    CriterionOutcome::new(4, "closed-loop tomography", passed, details.join("; "))
}

/// Per-iteration log-likelihood must never decrease (1e-12 per sample);
/// asserted inside the iteration as well; this re-scans the recorded traces.
pub fn criterion_5_mle_monotonicity() -> CriterionOutcome {
    let runs = match closed_loop_runs() {
        Ok(r) => r,
        Err(e) => {
            return CriterionOutcome::new(5, "likelihood monotonicity", false, format!("error: {e}"))
        }
    };
    let mut worst_drop = 0.0f64;
    let mut iterations = 0usize;
    let mut check = |trace: &[f64], n: f64| {
        for pair in trace.windows(2) {
            worst_drop = worst_drop.max((pair[0] - pair[1]) / n);
            iterations += 1;
        }
    };
    for run in &runs {
        check(&run.result.log_likelihood_trace, run.records.len() as f64);
    }
    // The bootstrap corpus reconstruction exercises the diagonal path at a
    // different cutoff.
    let (records, cfg) = bootstrap_corpus();
    match mle_reconstruct(&records, &cfg) {
        Ok(result) => check(&result.log_likelihood_trace, records.len() as f64),
        Err(e) => {
            return CriterionOutcome::new(5, "likelihood monotonicity", false, format!("error: {e}"))
        }
    }
    CriterionOutcome::new(
        5,
        "likelihood monotonicity",
        worst_drop <= MONOTONICITY_TOL,
        format!(
            "worst per-sample decrease {worst_drop:.3e} over {iterations} iteration steps (tolerance 1e-12)"
        ),
    )
}

fn veto_corpus_spec() -> synth::CorpusSpec {
    synth::CorpusSpec {
        triggers: 10_000,
        slots_per_trigger: 6,
        herald_slot: 3,
        herald_class: 2,
        // Tuned so the expected veto fraction is 4.98%: 1 - sqrt(1 - 0.0498).
        contamination: 0.025217973083212823,
        signal: DensityMatrix::fock(2, FockCutoff::new(4)).expect("|2> fits n_max = 4"),
        thresholds: ThresholdConfig::new(0.2, 0.5).expect("valid thresholds"),
        mean_v: 0.002,
        sigma_v: 0.15,
    }
}

/// Veto on a 10,000-trigger corpus with planted contamination: removals match
/// the plant exactly and sit within Poisson 3σ of the expectation; no kept
/// herald has a detection in its lookback window (exhaustive re-scan).
pub fn criterion_6_veto_property() -> CriterionOutcome {
    let spec = veto_corpus_spec();
    let (events, truth) = match synth::generate(&spec, SEED_VETO, Exec::default()) {
        Ok(x) => x,
        Err(e) => return CriterionOutcome::new(6, "afterpulse veto", false, format!("error: {e}")),
    };
    let cal = match calibrate_shot_noise(
        &events.iter().flat_map(|e| e.slots.iter().map(|s| s.hd_value)).collect::<Vec<_>>(),
    ) {
        Ok(c) => c,
        Err(e) => return CriterionOutcome::new(6, "afterpulse veto", false, format!("error: {e}")),
    };
    let filter = HeraldFilter { herald_n: 2, veto_window: 2 };
    let extraction = extract_quadratures(&events, &cal, &spec.thresholds, &filter);

    let planted = truth.contaminated_within(spec.herald_slot, 2);
    let expectation = synth::expected_vetoes(&spec, 2);
    let sigma = expectation.sqrt();
    let within_poisson = (extraction.vetoed as f64 - expectation).abs() <= 3.0 * sigma;

    // Exhaustive re-scan of every kept herald.
    let mut kept = 0usize;
    let mut dirty = 0usize;
    for event in &events {
        let classes = classify_event(event, &spec.thresholds);
        let veto = veto_two_photon_events(&classes, 2);
        for &pos in &veto.kept {
            kept += 1;
            if classes[pos.saturating_sub(2)..pos].iter().any(|&c| c != 0) {
                dirty += 1;
            }
        }
    }
    let passed = extraction.vetoed == planted
        && within_poisson
        && dirty == 0
        && kept == extraction.records.len();
    CriterionOutcome::new(
        6,
        "afterpulse veto",
        passed,
        format!(
            "vetoed {} (planted {planted}, expectation {expectation:.0} ± {:.0}), kept {kept}, dirty {dirty}",
            extraction.vetoed,
            3.0 * sigma
        ),
    )
}

/// Vacuum normalization closure and the slot-variance signature of a planted
/// two-photon slot.
pub fn criterion_7_pipeline_normalization() -> CriterionOutcome {
    // Part 1: vacuum corpus as its own calibration.
    let vacuum_spec = synth::CorpusSpec {
        triggers: 10_000,
        slots_per_trigger: 4,
        herald_slot: 0,
        herald_class: 0,
        contamination: 0.0,
        signal: DensityMatrix::vacuum(FockCutoff::new(4)),
        thresholds: ThresholdConfig::new(0.2, 0.5).expect("valid thresholds"),
        mean_v: -0.001,
        sigma_v: 0.12,
    };
    let (events, _) = match synth::generate(&vacuum_spec, SEED_VACUUM, Exec::default()) {
        Ok(x) => x,
        Err(e) => {
            return CriterionOutcome::new(7, "pipeline normalization", false, format!("error: {e}"))
        }
    };
    let volts: Vec<f64> =
        events.iter().flat_map(|e| e.slots.iter().map(|s| s.hd_value)).collect();
    let cal = match calibrate_shot_noise(&volts) {
        Ok(c) => c,
        Err(e) => {
            return CriterionOutcome::new(7, "pipeline normalization", false, format!("error: {e}"))
        }
    };
    let filter = HeraldFilter { herald_n: 0, veto_window: 2 };
    let extraction = extract_quadratures(&events, &cal, &vacuum_spec.thresholds, &filter);
    let xs: Vec<f64> = extraction.records.iter().map(|r| r.x).collect();
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    let se = 0.5 * (2.0 / (m - 1.0)).sqrt();
    let closure_ok = (var - 0.5).abs() <= 2.0 * se;

    // Part 2: |2⟩ planted in slot 3 shows up as variance 2.5 there, 0.5 elsewhere.
    let planted_spec = synth::CorpusSpec {
        triggers: 10_000,
        slots_per_trigger: 6,
        herald_slot: 3,
        herald_class: 2,
        contamination: 0.0,
        signal: DensityMatrix::fock(2, FockCutoff::new(4)).expect("|2> fits n_max = 4"),
        ..vacuum_spec.clone()
    };
    let (events, _) = match synth::generate(&planted_spec, SEED_SLOT_PROFILE, Exec::default()) {
        Ok(x) => x,
        Err(e) => {
            return CriterionOutcome::new(7, "pipeline normalization", false, format!("error: {e}"))
        }
    };
    // Calibrate from the undetected (vacuum) slots.
    let vac_volts: Vec<f64> = events
        .iter()
        .flat_map(|e| {
            e.slots
                .iter()
                .filter(|s| crate::pipeline::classify_pnr(s.snspd_peak, &planted_spec.thresholds) == 0)
                .map(|s| s.hd_value)
        })
        .collect();
    let cal2 = match calibrate_shot_noise(&vac_volts) {
        Ok(c) => c,
        Err(e) => {
            return CriterionOutcome::new(7, "pipeline normalization", false, format!("error: {e}"))
        }
    };
    let profile = match slot_variance_profile(&events, &cal2) {
        Ok(p) => p,
        Err(e) => {
            return CriterionOutcome::new(7, "pipeline normalization", false, format!("error: {e}"))
        }
    };
    let mut profile_ok = true;
    let mut planted_var = f64::NAN;
    for &(slot, var) in &profile {
        if slot == 3 {
            planted_var = var;
            profile_ok &= (var - 2.5).abs() <= 0.1;
        } else {
            profile_ok &= (var - 0.5).abs() <= 0.05;
        }
    }
    CriterionOutcome::new(
        7,
        "pipeline normalization",
        closure_ok && profile_ok,
        format!(
            "vacuum closure variance {var:.4} (0.5 ± {:.4}); planted slot variance {planted_var:.3} (2.5 ± 0.1), others within 0.5 ± 0.05: {profile_ok}",
            2.0 * se
        ),
    )
}

fn bootstrap_corpus() -> (Vec<QuadratureRecord>, MleConfig) {
    let truth = DensityMatrix::from_diag_probs(&[0.38, 0.62], FockCutoff::new(1))
        .expect("two-outcome distribution");
    let records = sample_quadratures(&truth, 10_000, PhasePolicy::UniformRandom, 1, SEED_BOOTSTRAP);
    (records, MleConfig::new(FockCutoff::new(1)))
}

/// Bootstrap sd of P(1) on the diag(0.38, 0.62) corpus, 100 replicates,
/// required window [0.0034, 0.0063] (± 30% of the binomial scale 0.00485).
///
/// Note: quadrature records carry no photon-number labels, and the overlap of
/// ψ_0² and ψ_1² bounds the achievable precision from below; the Cramér-Rao
/// limit for this mixture is ≈ 0.0086, above the required window, so this
/// criterion measures that information gap rather than an implementation
/// property. The suite reports the measured value either way.
pub fn criterion_8_bootstrap_calibration() -> CriterionOutcome {
    let (records, cfg) = bootstrap_corpus();
    let report = match bootstrap_with(
        &records,
        Statistic::PhotonProb(1),
        &cfg,
        100,
        SEED_BOOTSTRAP,
        Exec::default(),
    ) {
        Ok(r) => r,
        Err(e) => {
            return CriterionOutcome::new(8, "bootstrap calibration", false, format!("error: {e}"))
        }
    };
    let passed = (0.0034..=0.0063).contains(&report.std_dev);
    CriterionOutcome::new(
        8,
        "bootstrap calibration",
        passed,
        format!(
            "bootstrap sd of P(1) = {:.5} (required [0.0034, 0.0063]; binomial scale 0.00485, \
             Cramér-Rao bound for unlabeled quadrature data ≈ 0.0086)",
            report.std_dev
        ),
    )
}

/// Every artifact of criteria 4-8, as (name, bytes), for the determinism check.
pub fn criteria_artifacts() -> Result<Vec<(String, Vec<u8>)>> {
    let mut artifacts = Vec::new();

    for run in closed_loop_runs()? {
        let tag = run.name.replace(' ', "_");
        artifacts.push((format!("{tag}/quadratures.csv"), quadrature_csv_string(&run.records).into_bytes()));
        artifacts.push((format!("{tag}/truth.json"), run.truth.to_json_string().into_bytes()));
        artifacts.push((format!("{tag}/rho.json"), run.result.rho.to_json_string().into_bytes()));
        let report = crate::jsonfmt::to_string(&serde_json::json!({
            "iterations": run.result.iterations_used,
            "log_likelihood": run.result.final_log_likelihood,
            "converged": run.result.converged,
        }))?;
        artifacts.push((format!("{tag}/tomo_report.json"), report.into_bytes()));
    }

    let spec = veto_corpus_spec();
    let (events, _) = synth::generate(&spec, SEED_VETO, Exec::default())?;
    let mut jsonl = Vec::new();
    crate::pipeline::write_events_jsonl(&mut jsonl, &events)?;
    artifacts.push(("veto/events.jsonl".into(), jsonl));
    let volts: Vec<f64> =
        events.iter().flat_map(|e| e.slots.iter().map(|s| s.hd_value)).collect();
    let cal = calibrate_shot_noise(&volts)?;
    let filter = HeraldFilter { herald_n: 2, veto_window: 2 };
    let extraction = extract_quadratures(&events, &cal, &spec.thresholds, &filter);
    let report = crate::jsonfmt::to_string(&serde_json::json!({
        "events_in": events.len(),
        "kept": extraction.records.len(),
        "vetoed": extraction.vetoed,
    }))?;
    artifacts.push(("veto/report.json".into(), report.into_bytes()));
    artifacts.push(("veto/quadratures.csv".into(), quadrature_csv_string(&extraction.records).into_bytes()));

    let (records, cfg) = bootstrap_corpus();
    let boot = bootstrap_with(&records, Statistic::PhotonProb(1), &cfg, 100, SEED_BOOTSTRAP, Exec::default())?;
    artifacts.push(("bootstrap/report.json".into(), boot.to_json_string().into_bytes()));

    Ok(artifacts)
}

/// Re-running criteria 4-8 with the same seeds yields byte-identical artifacts.
pub fn criterion_9_determinism() -> CriterionOutcome {
    let (first, second) = match (criteria_artifacts(), criteria_artifacts()) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            return CriterionOutcome::new(9, "determinism", false, format!("error: {e}"))
        }
    };
    if first.len() != second.len() {
        return CriterionOutcome::new(9, "determinism", false, "artifact counts differ".into());
    }
    let mut bytes = 0usize;
    for ((name_a, a), (name_b, b)) in first.iter().zip(&second) {
        if name_a != name_b || a != b {
            return CriterionOutcome::new(
                9,
                "determinism",
                false,
                format!("artifact '{name_a}' differs between runs"),
            );
        }
        bytes += a.len();
    }
    CriterionOutcome::new(
        9,
        "determinism",
        true,
        format!("{} artifacts byte-identical across two runs ({bytes} bytes)", first.len()),
    )
}
