//! Property tests for the algebraic invariants.

use proptest::prelude::*;

use focktomo::fock::{fidelity, DensityMatrix, FockCutoff, HERMITICITY_TOL, TRACE_TOL};
use focktomo::herald::{apply_loss, pnr_povm, tmsv_coefficients};
use focktomo::homodyne::quad_pdf;
use focktomo::pipeline::{classify_pnr, veto_two_photon_events, ThresholdConfig};

fn diag_probs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 1..8).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    })
}

fn diag_state() -> impl Strategy<Value = DensityMatrix> {
    diag_probs().prop_map(|p| {
        let cutoff = FockCutoff::new(p.len().max(2) - 1);
        DensityMatrix::from_diag_probs(&p, cutoff).expect("normalized input")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diag_construction_upholds_invariants(probs in diag_probs()) {
        let cutoff = FockCutoff::new(probs.len() + 2);
        let dm = DensityMatrix::from_diag_probs(&probs, cutoff).unwrap();
        let m = dm.matrix();
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(herm <= HERMITICITY_TOL);
        prop_assert!((m.trace().re - 1.0).abs() <= TRACE_TOL);
        prop_assert!(dm.eigenvalues_clamped().iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn fidelity_is_symmetric_and_detects_equality(a in diag_probs(), b in diag_probs()) {
        let dim = a.len().max(b.len());
        let cutoff = FockCutoff::new(dim - 1);
        let da = DensityMatrix::from_diag_probs(&a, cutoff).unwrap();
        let db = DensityMatrix::from_diag_probs(&b, cutoff).unwrap();
        let fab = fidelity(&da, &db).unwrap();
        let fba = fidelity(&db, &da).unwrap();
        prop_assert!((fab - fba).abs() < 1e-10);
        prop_assert!((0.0..=1.0).contains(&fab));
        prop_assert!((fidelity(&da, &da).unwrap() - 1.0).abs() < 1e-9);
        // Oracle for commuting diagonals: (Σ sqrt(p q))².
        let overlap: f64 = da.diagonal().iter().zip(db.diagonal()).map(|(p, q)| (p * q).sqrt()).sum();
        prop_assert!((fab - overlap * overlap).abs() < 1e-9);
        // Equality detection: fidelity 1 implies the states agree.
        if fab > 1.0 - 1e-9 {
            let gap = da.diagonal().iter().zip(db.diagonal()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            prop_assert!(gap < 1e-3);
        }
    }

    #[test]
    fn loss_composes_and_scales_mean_photon(
        rho in diag_state(),
        eta1 in 0.0f64..=1.0,
        eta2 in 0.0f64..=1.0,
    ) {
        let once = apply_loss(&rho, eta1 * eta2).unwrap();
        let twice = apply_loss(&apply_loss(&rho, eta1).unwrap(), eta2).unwrap();
        let diff = (once.matrix() - twice.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-10);
        prop_assert!((apply_loss(&rho, eta1).unwrap().mean_photon() - eta1 * rho.mean_photon()).abs() < 1e-10);
    }

    #[test]
    fn povm_completeness_for_any_efficiency(eta in 0.0f64..=1.0) {
        let cutoff = FockCutoff::new(9);
        for m in 0..cutoff.dim() {
            let total: f64 = (0..cutoff.dim()).map(|n| pnr_povm(n, eta, cutoff).weights()[m]).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tmsv_weights_are_normalized_up_to_the_tail(r in 0.0f64..0.9) {
        let cutoff = FockCutoff::new(24);
        let total: f64 = tmsv_coefficients(r, cutoff).iter().map(|c| c * c).sum();
        let tail = r.tanh().powi(50);
        prop_assert!((total + tail - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classification_is_monotone(
        v1 in 0.01f64..1.0,
        gap in 0.01f64..1.0,
        peaks in prop::collection::vec(-0.5f64..3.0, 2..40),
    ) {
        let cfg = ThresholdConfig::new(v1, v1 + gap).unwrap();
        let mut sorted = peaks.clone();
        sorted.sort_by(f64::total_cmp);
        let mut last = 0u8;
        for p in sorted {
            let class = classify_pnr(p, &cfg);
            prop_assert!(class >= last);
            last = class;
        }
    }

    #[test]
    fn veto_never_keeps_contaminated_heralds(
        classes in prop::collection::vec(0u8..=2, 1..60),
        window in 1usize..4,
    ) {
        let outcome = veto_two_photon_events(&classes, window);
        for &pos in &outcome.kept {
            prop_assert_eq!(classes[pos], 2);
            let lo = pos.saturating_sub(window);
            prop_assert!(classes[lo..pos].iter().all(|&c| c == 0));
        }
        let total_heralds = classes.iter().filter(|&&c| c == 2).count();
        prop_assert_eq!(outcome.kept.len() + outcome.removed, total_heralds);
    }

    #[test]
    fn quadrature_density_is_nonnegative_and_phase_insensitive(
        rho in diag_state(),
        theta in 0.0f64..std::f64::consts::TAU,
        x in -6.0f64..6.0,
    ) {
        let p = quad_pdf(&rho, theta, x);
        prop_assert!(p >= 0.0);
        prop_assert_eq!(p, quad_pdf(&rho, 0.0, x));
    }

    #[test]
    fn wigner_is_radially_symmetric_for_diagonal_states(
        rho in diag_state(),
        s in 0.0f64..3.5,
        angle in 0.0f64..std::f64::consts::TAU,
    ) {
        use focktomo::analysis::wigner_point;
        let base = wigner_point(&rho, s, 0.0);
        let rotated = wigner_point(&rho, s * angle.cos(), s * angle.sin());
        prop_assert!((base - rotated).abs() < 1e-10);
    }
}
