//! Iterative maximum-likelihood density-matrix reconstruction from
//! quadrature records.
//!
//! The fixed point of ρ ← N[R(ρ) ρ R(ρ)], with
//! R(ρ) = (1/N) Σ_j Π_j / tr(ρ Π_j), maximizes the likelihood of the observed
//! quadratures under the projector POVM Π_j = |x_j, θ_j⟩⟨x_j, θ_j|. The
//! default mode is phase-insensitive: Fock states carry no phase information,
//! so Π_j is reduced to its diagonal ψ_n(x_j)² and the iterate stays exactly
//! diagonal. Full-phase mode keeps the complex rank-1 projectors for
//! phase-diverse datasets.
//!
//! Per-iteration likelihood accumulation is a block reduction combined in
//! fixed order with compensated sums, so results are bit-identical across
//! worker counts and engines; the log-likelihood is asserted non-decreasing
//! every iteration.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{CompensatedSum, Exec};
use crate::fock::{DensityMatrix, FockCutoff};
use crate::homodyne::{grid_half_width, psi_row, QuadratureRecord};

/// Minimum number of records accepted for a reconstruction.
pub const MIN_RECORDS: usize = 100;
/// Records per reduction block. Larger than the crate default: one likelihood
/// pass is cheap per record, so small blocks would be all scheduling overhead.
pub const LIKELIHOOD_BLOCK_LEN: usize = 2048;
/// Identity fraction mixed in after each normalization; keeps every
/// tr(ρ Π_j) bounded away from zero, far below statistical noise.
pub const MIXING_EPSILON: f64 = 1e-12;
/// Allowed per-sample log-likelihood decrease before an iteration is
/// considered buggy (round-off allowance only).
pub const MONOTONICITY_TOL: f64 = 1e-12;
/// Floor applied to projector expectations before dividing.
const EXPECTATION_FLOOR: f64 = 1e-300;

/// Reconstruction settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleConfig {
    pub cutoff: FockCutoff,
    pub max_iterations: usize,
    /// Stop when the per-sample log-likelihood gain falls below this.
    pub log_likelihood_tolerance: f64,
    /// Reduce projectors to their diagonal and keep the iterate diagonal.
    pub phase_insensitive: bool,
    /// Optional quadrature bin width; records are pooled onto bin centers.
    /// `None` gives every sample its own projector.
    pub x_binning: Option<f64>,
}

impl MleConfig {
    pub fn new(cutoff: FockCutoff) -> Self {
        MleConfig {
            cutoff,
            max_iterations: 2000,
            log_likelihood_tolerance: 1e-9,
            phase_insensitive: true,
            x_binning: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::domain("max_iterations must be at least 1"));
        }
        if !(self.log_likelihood_tolerance > 0.0) {
            return Err(Error::domain("log-likelihood tolerance must be positive"));
        }
        if let Some(w) = self.x_binning {
            if !(w > 0.0) {
                return Err(Error::domain(format!("bin width {w} must be positive")));
            }
            if !self.phase_insensitive {
                return Err(Error::domain(
                    "x binning is only supported in phase-insensitive mode",
                ));
            }
        }
        Ok(())
    }
}

/// Reconstruction output.
#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: DensityMatrix,
    /// Number of ρ updates applied.
    pub iterations_used: usize,
    /// Total log-likelihood of the returned state.
    pub final_log_likelihood: f64,
    pub converged: bool,
    /// Total log-likelihood of each iterate, the returned state last.
    pub log_likelihood_trace: Vec<f64>,
}

/// Rank-1 quadrature projector |x, θ⟩⟨x, θ| truncated to the cutoff:
/// the outer product of v_n = ψ_n(x) e^{inθ}.
pub fn projector_weights(x: f64, theta: f64, cutoff: FockCutoff) -> DMatrix<Complex64> {
    let v = projector_vector(x, theta, cutoff);
    DMatrix::from_fn(cutoff.dim(), cutoff.dim(), |m, n| v[m] * v[n].conj())
}

fn projector_vector(x: f64, theta: f64, cutoff: FockCutoff) -> Vec<Complex64> {
    psi_row(x, cutoff.n_max())
        .into_iter()
        .enumerate()
        .map(|(n, psi)| Complex64::from_polar(psi, n as f64 * theta))
        .collect()
}

/// Diagonal of the projector, ψ_n(x)², the phase-insensitive reduction.
pub fn projector_diagonal(x: f64, cutoff: FockCutoff) -> Vec<f64> {
    psi_row(x, cutoff.n_max()).into_iter().map(|p| p * p).collect()
}

/// Reconstruct with the default engine and the maximally mixed start.
pub fn mle_reconstruct(records: &[QuadratureRecord], cfg: &MleConfig) -> Result<MleResult> {
    mle_reconstruct_with(records, cfg, Exec::default())
}

/// Reconstruct with an explicit engine and the maximally mixed start.
pub fn mle_reconstruct_with(
    records: &[QuadratureRecord],
    cfg: &MleConfig,
    exec: Exec,
) -> Result<MleResult> {
    mle_reconstruct_from(records, cfg, None, exec)
}

/// Reconstruct starting from `initial` (maximally mixed when `None`).
///
/// The maximally mixed start is unbiased and keeps every projector
/// expectation away from zero on the first pass.
pub fn mle_reconstruct_from(
    records: &[QuadratureRecord],
    cfg: &MleConfig,
    initial: Option<&DensityMatrix>,
    exec: Exec,
) -> Result<MleResult> {
    cfg.validate()?;
    if records.len() < MIN_RECORDS {
        return Err(Error::domain(format!(
            "{} records are too few for reconstruction, need at least {MIN_RECORDS}",
            records.len()
        )));
    }
    let half = grid_half_width(cfg.cutoff.n_max());
    if let Some((j, r)) = records.iter().enumerate().find(|(_, r)| r.x.abs() > half) {
        return Err(Error::domain(format!(
            "record {j} has |x| = {:.3} beyond the sampler grid half-width {half:.3} for n_max = {}",
            r.x.abs(),
            cfg.cutoff.n_max()
        )));
    }
    if let Some(init) = initial {
        if init.dim() != cfg.cutoff.dim() {
            return Err(Error::domain(format!(
                "initial state dimension {} does not match cutoff dimension {}",
                init.dim(),
                cfg.cutoff.dim()
            )));
        }
    }

    if cfg.phase_insensitive {
        reconstruct_diagonal(records, cfg, initial, exec)
    } else {
        reconstruct_full(records, cfg, initial, exec)
    }
}

/// Rows of the diagonal-mode weight table: one per sample, or one per
/// occupied bin with a multiplicity.
struct DiagonalRows {
    /// Row-major ψ_n(x_j)², `rows × dim`.
    weights: Vec<f64>,
    multiplicity: Vec<f64>,
    rows: usize,
}

fn diagonal_rows(records: &[QuadratureRecord], cfg: &MleConfig) -> DiagonalRows {
    let dim = cfg.cutoff.dim();
    let xs: Vec<(f64, f64)> = match cfg.x_binning {
        None => records.iter().map(|r| (r.x, 1.0)).collect(),
        Some(width) => {
            let mut counts: std::collections::BTreeMap<i64, usize> = Default::default();
            for r in records {
                *counts.entry((r.x / width).floor() as i64).or_default() += 1;
            }
            counts
                .into_iter()
                .map(|(k, c)| ((k as f64 + 0.5) * width, c as f64))
                .collect()
        }
    };
    let mut weights = Vec::with_capacity(xs.len() * dim);
    let mut multiplicity = Vec::with_capacity(xs.len());
    for (x, m) in &xs {
        weights.extend(projector_diagonal(*x, cfg.cutoff));
        multiplicity.push(*m);
    }
    DiagonalRows { weights, multiplicity, rows: xs.len() }
}

fn reconstruct_diagonal(
    records: &[QuadratureRecord],
    cfg: &MleConfig,
    initial: Option<&DensityMatrix>,
    exec: Exec,
) -> Result<MleResult> {
    let dim = cfg.cutoff.dim();
    let n_total = records.len() as f64;
    let table = diagonal_rows(records, cfg);

    let mut probs = match initial {
        Some(init) => init.diagonal().iter().map(|p| p.max(0.0)).collect::<Vec<_>>(),
        None => vec![1.0 / dim as f64; dim],
    };
    normalize_and_mix(&mut probs);

    let accumulate = |p: &[f64]| -> (Vec<f64>, f64) {
        let parts = exec.map_blocks(table.rows, LIKELIHOOD_BLOCK_LEN, |_b, range| {
            let mut r = vec![0.0; dim];
            let mut ll = CompensatedSum::default();
            for j in range {
                let row = &table.weights[j * dim..(j + 1) * dim];
                let m = table.multiplicity[j];
                let q: f64 = row.iter().zip(p).map(|(f, p)| f * p).sum::<f64>();
                let q = q.max(EXPECTATION_FLOOR);
                ll.add(m * q.ln());
                let inv = m / q;
                for (acc, f) in r.iter_mut().zip(row) {
                    *acc += f * inv;
                }
            }
            (r, ll.value())
        });
        let mut r_total = vec![0.0; dim];
        let mut ll = CompensatedSum::default();
        for (r, l) in parts {
            for (acc, v) in r_total.iter_mut().zip(&r) {
                *acc += v;
            }
            ll.add(l);
        }
        for v in r_total.iter_mut() {
            *v /= n_total;
        }
        (r_total, ll.value())
    };

    let mut trace = Vec::new();
    let mut ll_prev: Option<f64> = None;
    let mut updates = 0;
    loop {
        let (r, ll) = accumulate(&probs);
        trace.push(ll);
        if let Some(prev) = ll_prev {
            assert!(
                ll >= prev - MONOTONICITY_TOL * n_total,
                "log-likelihood decreased by {:.3e} per sample at iteration {updates}; this is a bug",
                (prev - ll) / n_total
            );
            if ll - prev < cfg.log_likelihood_tolerance * n_total {
                return finish_diagonal(probs, cfg, updates, ll, true, trace);
            }
        }
        if updates >= cfg.max_iterations {
            return finish_diagonal(probs, cfg, updates, ll, false, trace);
        }
        // Diagonal R ρ R: p_n ← p_n R_n².
        for (p, rn) in probs.iter_mut().zip(&r) {
            *p *= rn * rn;
        }
        normalize_and_mix(&mut probs);
        updates += 1;
        ll_prev = Some(ll);
    }
}

fn normalize_and_mix(probs: &mut [f64]) {
    let total: f64 = probs.iter().sum();
    let dim = probs.len() as f64;
    for p in probs.iter_mut() {
        *p = (*p / total + MIXING_EPSILON) / (1.0 + MIXING_EPSILON * dim);
    }
}

fn finish_diagonal(
    probs: Vec<f64>,
    cfg: &MleConfig,
    iterations_used: usize,
    final_log_likelihood: f64,
    converged: bool,
    trace: Vec<f64>,
) -> Result<MleResult> {
    let rho = DensityMatrix::from_diag_probs(&probs, cfg.cutoff)?;
    Ok(MleResult {
        rho,
        iterations_used,
        final_log_likelihood,
        converged,
        log_likelihood_trace: trace,
    })
}

fn reconstruct_full(
    records: &[QuadratureRecord],
    cfg: &MleConfig,
    initial: Option<&DensityMatrix>,
    exec: Exec,
) -> Result<MleResult> {
    let dim = cfg.cutoff.dim();
    let n_total = records.len() as f64;
    let vectors: Vec<Complex64> = records
        .iter()
        .flat_map(|r| projector_vector(r.x, r.theta, cfg.cutoff))
        .collect();

    let mut rho = match initial {
        Some(init) => init.matrix().clone(),
        None => DMatrix::from_diagonal_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0)),
    };
    hermitize_normalize_mix(&mut rho);

    let accumulate = |rho: &DMatrix<Complex64>| -> (DMatrix<Complex64>, f64) {
        let parts = exec.map_blocks(records.len(), LIKELIHOOD_BLOCK_LEN, |_b, range| {
            let mut r = DMatrix::<Complex64>::zeros(dim, dim);
            let mut ll = CompensatedSum::default();
            for j in range {
                let v = &vectors[j * dim..(j + 1) * dim];
                // q = v† ρ v, real for Hermitian ρ.
                let mut q = 0.0;
                for m in 0..dim {
                    let mut row = Complex64::ZERO;
                    for n in 0..dim {
                        row += rho[(m, n)] * v[n];
                    }
                    q += (v[m].conj() * row).re;
                }
                let q = q.max(EXPECTATION_FLOOR);
                ll.add(q.ln());
                let inv = 1.0 / q;
                for m in 0..dim {
                    let vm = v[m] * inv;
                    for n in 0..dim {
                        r[(m, n)] += vm * v[n].conj();
                    }
                }
            }
            (r, ll.value())
        });
        let mut r_total = DMatrix::<Complex64>::zeros(dim, dim);
        let mut ll = CompensatedSum::default();
        for (r, l) in parts {
            r_total += r;
            ll.add(l);
        }
        r_total.scale_mut(1.0 / n_total);
        (r_total, ll.value())
    };

    let mut trace = Vec::new();
    let mut ll_prev: Option<f64> = None;
    let mut updates = 0;
    loop {
        let (r, ll) = accumulate(&rho);
        trace.push(ll);
        if let Some(prev) = ll_prev {
            assert!(
                ll >= prev - MONOTONICITY_TOL * n_total,
                "log-likelihood decreased by {:.3e} per sample at iteration {updates}; this is a bug",
                (prev - ll) / n_total
            );
            if ll - prev < cfg.log_likelihood_tolerance * n_total {
                return finish_full(rho, updates, ll, true, trace);
            }
        }
        if updates >= cfg.max_iterations {
            return finish_full(rho, updates, ll, false, trace);
        }
        rho = &r * rho * &r;
        hermitize_normalize_mix(&mut rho);
        updates += 1;
        ll_prev = Some(ll);
    }
}

fn hermitize_normalize_mix(rho: &mut DMatrix<Complex64>) {
    let dim = rho.nrows();
    let herm = (rho.clone() + rho.adjoint()).scale(0.5);
    *rho = herm;
    let tr = rho.trace().re;
    rho.scale_mut(1.0 / tr);
    let mix = 1.0 / (1.0 + MIXING_EPSILON * dim as f64);
    rho.scale_mut(mix);
    for k in 0..dim {
        rho[(k, k)] += Complex64::new(MIXING_EPSILON * mix, 0.0);
    }
}

fn finish_full(
    rho: DMatrix<Complex64>,
    iterations_used: usize,
    final_log_likelihood: f64,
    converged: bool,
    trace: Vec<f64>,
) -> Result<MleResult> {
    Ok(MleResult {
        rho: DensityMatrix::new(rho)?,
        iterations_used,
        final_log_likelihood,
        converged,
        log_likelihood_trace: trace,
    })
}
