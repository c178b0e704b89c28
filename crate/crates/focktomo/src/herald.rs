//! Heralded state generation: two-mode squeezed vacuum, loss channels, and
//! photon-number-resolving detection.
//!
//! The two-mode squeezed state is Schmidt-diagonal, Σ_n c_n |n⟩|n⟩ with
//! c_n = tanh^n(r)/cosh(r), so it is carried as a coefficient vector rather
//! than a dense two-mode matrix. Losses on either arm are collapsed into one
//! effective transmission each (`eta_i`, `eta_s`); detection with a lossy
//! photon-number-resolving detector is the diagonal POVM with binomial
//! weights. Dark counts are not modeled.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockCutoff};

/// Herald outcomes with probability below this floor are unheraldable.
pub const HERALDABLE_FLOOR: f64 = 1e-15;
/// Maximum two-mode squeezed weight allowed beyond the cutoff.
pub const TRUNCATION_RESIDUAL_TOL: f64 = 1e-6;

/// Simulation configuration for one heralded-generation condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioJson", into = "ScenarioJson")]
pub struct HeraldScenario {
    r: f64,
    eta_i: f64,
    eta_s: f64,
    herald_n: usize,
    cutoff: FockCutoff,
    label: Option<String>,
}

/// On-disk form: `{"r", "eta_i", "eta_s", "herald_n", "n_max"}` plus an
/// optional free-text `label` for recording the experimental condition.
#[derive(Serialize, Deserialize)]
struct ScenarioJson {
    r: f64,
    eta_i: f64,
    eta_s: f64,
    herald_n: usize,
    n_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl TryFrom<ScenarioJson> for HeraldScenario {
    type Error = Error;

    fn try_from(j: ScenarioJson) -> Result<Self> {
        let mut s =
            HeraldScenario::new(j.r, j.eta_i, j.eta_s, j.herald_n, FockCutoff::new(j.n_max))?;
        s.label = j.label;
        Ok(s)
    }
}

impl From<HeraldScenario> for ScenarioJson {
    fn from(s: HeraldScenario) -> Self {
        ScenarioJson {
            r: s.r,
            eta_i: s.eta_i,
            eta_s: s.eta_s,
            herald_n: s.herald_n,
            n_max: s.cutoff.n_max(),
            label: s.label,
        }
    }
}

impl HeraldScenario {
    pub fn new(
        r: f64,
        eta_i: f64,
        eta_s: f64,
        herald_n: usize,
        cutoff: FockCutoff,
    ) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::domain(format!("squeezing parameter r = {r} must be >= 0")));
        }
        for (name, eta) in [("eta_i", eta_i), ("eta_s", eta_s)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::domain(format!("{name} = {eta} outside [0, 1]")));
            }
        }
        if herald_n > cutoff.n_max() {
            return Err(Error::domain(format!(
                "herald_n = {herald_n} exceeds cutoff n_max = {}",
                cutoff.n_max()
            )));
        }
        let residual = truncation_residual(r, cutoff);
        if residual >= TRUNCATION_RESIDUAL_TOL {
            return Err(Error::domain(format!(
                "two-mode squeezed weight {residual:.3e} beyond n_max = {} exceeds {TRUNCATION_RESIDUAL_TOL:e}; raise the cutoff",
                cutoff.n_max()
            )));
        }
        Ok(HeraldScenario { r, eta_i, eta_s, herald_n, cutoff, label: None })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn eta_i(&self) -> f64 {
        self.eta_i
    }

    pub fn eta_s(&self) -> f64 {
        self.eta_s
    }

    pub fn herald_n(&self) -> usize {
        self.herald_n
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }
}

/// Two-mode squeezed weight left beyond the cutoff, 1 - Σ_{n<=n_max} c_n².
///
/// The geometric tail sums to tanh^{2(n_max+1)}(r) exactly.
pub fn truncation_residual(r: f64, cutoff: FockCutoff) -> f64 {
    r.tanh().powi(2 * (cutoff.n_max() as i32 + 1))
}

/// Schmidt coefficients of the two-mode squeezed vacuum,
/// c_n = tanh^n(r)/cosh(r) for n = 0..n_max.
pub fn tmsv_coefficients(r: f64, cutoff: FockCutoff) -> Vec<f64> {
    assert!(r >= 0.0, "squeezing parameter must be nonnegative");
    let t = r.tanh();
    let scale = 1.0 / r.cosh();
    let mut coeffs = Vec::with_capacity(cutoff.dim());
    let mut c = scale;
    for _ in 0..cutoff.dim() {
        coeffs.push(c);
        c *= t;
    }
    coeffs
}

/// Diagonal POVM element of a lossy photon-number-resolving detector.
///
/// `weights[m]` is the probability that m incident photons are read out as
/// `herald_n`: C(m, herald_n) η^herald_n (1-η)^(m-herald_n), zero for
/// m < herald_n. Summed over all herald outcomes the weights are complete.
#[derive(Debug, Clone, PartialEq)]
pub struct PnrPovmElement {
    herald_n: usize,
    weights: Vec<f64>,
}

impl PnrPovmElement {
    pub fn herald_n(&self) -> usize {
        self.herald_n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn binomial(m: usize, k: usize) -> f64 {
    if k > m {
        return 0.0;
    }
    let k = k.min(m - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (m - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// POVM element for reading out `herald_n` photons with detector efficiency
/// `eta_i`.
pub fn pnr_povm(herald_n: usize, eta_i: f64, cutoff: FockCutoff) -> PnrPovmElement {
    assert!(herald_n <= cutoff.n_max(), "herald_n exceeds the cutoff");
    assert!((0.0..=1.0).contains(&eta_i), "eta_i outside [0, 1]");
    let weights = (0..cutoff.dim())
        .map(|m| {
            if m < herald_n {
                0.0
            } else {
                binomial(m, herald_n)
                    * eta_i.powi(herald_n as i32)
                    * (1.0 - eta_i).powi((m - herald_n) as i32)
            }
        })
        .collect();
    PnrPovmElement { herald_n, weights }
}

/// Probability of reading out `herald_n` on the idler arm.
///
/// For a perfect detector this is tanh^{2n}(r)/cosh²(r); with loss the idler
/// marginal diag(c_m²) is traced against the POVM element.
pub fn herald_probability(scenario: &HeraldScenario) -> f64 {
    let coeffs = tmsv_coefficients(scenario.r, scenario.cutoff);
    let povm = pnr_povm(scenario.herald_n, scenario.eta_i, scenario.cutoff);
    coeffs.iter().zip(povm.weights()).map(|(c, w)| c * c * w).sum()
}

/// Pure loss (beamsplitter to vacuum) with transmission `eta`.
///
/// ρ'_{jk} = Σ_l sqrt(C(j+l,l) C(k+l,l)) η^{(j+k)/2} (1-η)^l ρ_{j+l,k+l}.
/// Photon number only decreases, so the truncated space maps into itself with
/// no truncation error. On diagonal states this is binomial redistribution.
pub fn apply_loss(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain(format!("loss transmission eta = {eta} outside [0, 1]")));
    }
    let d = rho.dim();
    let sqrt_eta = eta.sqrt();
    let mut sqrt_eta_pow = vec![1.0; d];
    for j in 1..d {
        sqrt_eta_pow[j] = sqrt_eta_pow[j - 1] * sqrt_eta;
    }
    let mut out = nalgebra::DMatrix::<Complex64>::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            let mut acc = Complex64::ZERO;
            let mut lost_pow = 1.0;
            for l in 0..=(d - 1 - j.max(k)) {
                let amp = (binomial(j + l, l) * binomial(k + l, l)).sqrt()
                    * sqrt_eta_pow[j]
                    * sqrt_eta_pow[k]
                    * lost_pow;
                acc += rho.element(j + l, k + l) * amp;
                lost_pow *= 1.0 - eta;
            }
            out[(j, k)] = acc;
        }
    }
    DensityMatrix::new(out)
}

/// Signal state conditioned on the herald outcome, with its probability.
///
/// The chain is (i) two-mode squeezed generation, (ii) idler POVM
/// conditioning with `eta_i`, (iii) signal loss `eta_s`. The Schmidt-diagonal
/// source makes the conditioned state diagonal: p_m ∝ c_m² w_m.
pub fn conditional_signal_state(scenario: &HeraldScenario) -> Result<(DensityMatrix, f64)> {
    let coeffs = tmsv_coefficients(scenario.r, scenario.cutoff);
    let povm = pnr_povm(scenario.herald_n, scenario.eta_i, scenario.cutoff);
    let joint: Vec<f64> =
        coeffs.iter().zip(povm.weights()).map(|(c, w)| c * c * w).collect();
    let prob: f64 = joint.iter().sum();
    if prob < HERALDABLE_FLOOR {
        return Err(Error::Unheraldable(prob));
    }
    let probs: Vec<f64> = joint.iter().map(|p| p / prob).collect();
    let heralded = DensityMatrix::from_diag_probs(&probs, scenario.cutoff)?;
    let signal = apply_loss(&heralded, scenario.eta_s)?;
    Ok((signal, prob))
}
