//! Wigner functions, photon-number distributions and bootstrap confidence
//! intervals.
//!
//! Wigner values use the associated-Laguerre kernel in the vacuum-variance-1/2
//! convention: for the basis operator |m⟩⟨n| with k = n - m ≥ 0,
//!
//! W(x, p) = (1/π) (-1)^m sqrt(m!/n!) (√2 (x + ip))^k e^(-s²) L_m^k(2 s²),
//!
//! s² = x² + p², conjugated for n < m. Diagonal states reduce to the plain
//! Laguerre series (1/π) e^(-s²) Σ p_n (-1)^n L_n(2 s²), which depends on the
//! radius only.

use std::io::Write as IoWrite;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::fock::DensityMatrix;
use crate::homodyne::QuadratureRecord;
use crate::tomography::{mle_reconstruct_from, MleConfig};

/// Associated Laguerre values L_0^k(z) .. L_n_max^k(z) by the three-term
/// recurrence (stable for the n ≲ 40 used here).
fn laguerre_row(alpha: usize, z: f64, n_max: usize) -> Vec<f64> {
    let a = alpha as f64;
    let mut row = Vec::with_capacity(n_max + 1);
    row.push(1.0);
    if n_max == 0 {
        return row;
    }
    row.push(1.0 + a - z);
    for n in 1..n_max {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + a - z) * row[n] - (nf + a) * row[n - 1]) / (nf + 1.0);
        row.push(next);
    }
    row
}

/// Wigner function of `rho` at one phase-space point.
pub fn wigner_point(rho: &DensityMatrix, x: f64, p: f64) -> f64 {
    let d = rho.dim();
    let s2 = x * x + p * p;
    let z = 2.0 * s2;

    // Diagonal part: Σ ρ_nn (-1)^n L_n(2s²).
    let mut acc = 0.0;
    let mut sign = 1.0;
    for (n, lag) in laguerre_row(0, z, d - 1).into_iter().enumerate() {
        acc += sign * rho.element(n, n).re * lag;
        sign = -sign;
    }

    // Off-diagonal bands: pairs (m, m+k) and their conjugates.
    let zeta = num_complex::Complex64::new(2.0f64.sqrt() * x, 2.0f64.sqrt() * p);
    let mut zeta_pow = num_complex::Complex64::ONE;
    for k in 1..d {
        zeta_pow *= zeta;
        // sqrt(m!/(m+k)!) built incrementally as 1/sqrt((m+1)...(m+k)).
        let mut inv_ratio = 1.0;
        for i in 1..=k {
            inv_ratio /= i as f64;
        }
        let mut sign = 1.0;
        for (m, lag) in laguerre_row(k, z, d - 1 - k).into_iter().enumerate() {
            if m > 0 {
                // m!/(m+k)! = (m-1)!/(m-1+k)! · m/(m+k).
                inv_ratio *= m as f64 / (m + k) as f64;
            }
            let kernel = zeta_pow * (sign * inv_ratio.sqrt() * lag);
            acc += 2.0 * (rho.element(m, m + k) * kernel).re;
            sign = -sign;
        }
    }
    acc * (-s2).exp() / std::f64::consts::PI
}

/// Sampled Wigner function over a rectangular grid, with its minimum.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[ip][ix] = W(x_axis[ix], p_axis[ip])`.
    pub values: Vec<Vec<f64>>,
    pub min_value: f64,
    pub min_x: f64,
    pub min_p: f64,
}

/// Default grid half-range and resolution used by the reports.
pub const DEFAULT_GRID_HALF_RANGE: f64 = 5.0;
pub const DEFAULT_GRID_RESOLUTION: usize = 201;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

/// Evaluate the Wigner function over `resolution × resolution` points.
///
/// Rows are computed in parallel blocks; the minimum scan is a fixed-order
/// pass, first strict minimum wins.
pub fn wigner_grid_with(
    rho: &DensityMatrix,
    x_range: (f64, f64),
    p_range: (f64, f64),
    resolution: usize,
    exec: Exec,
) -> Result<WignerGrid> {
    if resolution < 16 {
        return Err(Error::domain(format!("grid resolution {resolution} below the minimum of 16")));
    }
    if !(x_range.0 < x_range.1) || !(p_range.0 < p_range.1) {
        return Err(Error::domain("grid ranges must be increasing intervals"));
    }
    let x_axis = linspace(x_range.0, x_range.1, resolution);
    let p_axis = linspace(p_range.0, p_range.1, resolution);
    let x_ref = &x_axis;
    let p_ref = &p_axis;
    let values = exec.flat_map_blocks(resolution, 8, |_b, rows| {
        rows.map(|ip| x_ref.iter().map(|&x| wigner_point(rho, x, p_ref[ip])).collect::<Vec<_>>())
            .collect()
    });
    let mut min_value = f64::INFINITY;
    let (mut min_x, mut min_p) = (x_axis[0], p_axis[0]);
    for (ip, row) in values.iter().enumerate() {
        for (ix, &w) in row.iter().enumerate() {
            if w < min_value {
                min_value = w;
                min_x = x_axis[ix];
                min_p = p_axis[ip];
            }
        }
    }
    Ok(WignerGrid { x_axis, p_axis, values, min_value, min_x, min_p })
}

pub fn wigner_grid(
    rho: &DensityMatrix,
    x_range: (f64, f64),
    p_range: (f64, f64),
    resolution: usize,
) -> Result<WignerGrid> {
    wigner_grid_with(rho, x_range, p_range, resolution, Exec::default())
}

impl WignerGrid {
    /// Trapezoid integral over the grid (diagnostic; ≈ 1 for states well
    /// inside the range).
    pub fn integral(&self) -> f64 {
        let hx = self.x_axis[1] - self.x_axis[0];
        let hp = self.p_axis[1] - self.p_axis[0];
        let nx = self.x_axis.len();
        let np = self.p_axis.len();
        let mut acc = 0.0;
        for (ip, row) in self.values.iter().enumerate() {
            let wp = if ip == 0 || ip == np - 1 { 0.5 } else { 1.0 };
            for (ix, &v) in row.iter().enumerate() {
                let wx = if ix == 0 || ix == nx - 1 { 0.5 } else { 1.0 };
                acc += wp * wx * v;
            }
        }
        acc * hx * hp
    }

    /// CSV matrix: header row carries the x axis, first column the p axis.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("p\\x");
        for x in &self.x_axis {
            out.push_str(&format!(",{x:.9e}"));
        }
        out.push('\n');
        for (ip, row) in self.values.iter().enumerate() {
            out.push_str(&format!("{:.9e}", self.p_axis[ip]));
            for v in row {
                out.push_str(&format!(",{v:.9e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Sidecar JSON `{"min_value", "min_x", "min_p"}`.
    pub fn sidecar_json(&self) -> String {
        crate::jsonfmt::to_file_string(&serde_json::json!({
            "min_value": self.min_value,
            "min_x": self.min_x,
            "min_p": self.min_p,
        }))
        .expect("sidecar serialization cannot fail")
    }

    pub fn write_csv<W: IoWrite>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }
}

/// Golden-section refinement of the radial Wigner minimum of a diagonal
/// (radially symmetric) state within `[s_lo, s_hi]`.
pub fn refine_radial_minimum(rho: &DensityMatrix, s_lo: f64, s_hi: f64) -> (f64, f64) {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let f = |s: f64| wigner_point(rho, s, 0.0);
    let (mut a, mut b) = (s_lo.max(0.0), s_hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let s = 0.5 * (a + b);
    (s, f(s))
}

/// Photon-number distribution: the diagonal of ρ.
pub fn photon_distribution(rho: &DensityMatrix) -> Vec<(usize, f64)> {
    rho.diagonal().into_iter().enumerate().collect()
}

/// Statistic evaluated on a reconstructed state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    /// P(n): photon-number probability.
    PhotonProb(usize),
    /// W(x, p) at a phase-space point.
    WignerAt { x: f64, p: f64 },
}

impl Statistic {
    pub fn evaluate(&self, rho: &DensityMatrix) -> f64 {
        match *self {
            Statistic::PhotonProb(n) => rho.diagonal().get(n).copied().unwrap_or(0.0),
            Statistic::WignerAt { x, p } => wigner_point(rho, x, p),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Statistic::PhotonProb(n) => format!("P({n})"),
            Statistic::WignerAt { x, p } => format!("W({x},{p})"),
        }
    }
}

/// Bootstrap summary for one statistic.
#[derive(Debug, Clone, Serialize)]
pub struct BootstrapReport {
    pub statistic: String,
    /// Replicates requested.
    pub replicate_count: usize,
    /// Replicates dropped because their reconstruction did not converge.
    pub excluded_count: usize,
    /// Statistic on the full-data reconstruction.
    pub point_estimate: f64,
    /// Sample standard deviation over replicates.
    pub std_dev: f64,
    pub percentile_low: f64,
    pub percentile_high: f64,
    /// Set when the point estimate falls outside the percentile interval.
    pub skewed: bool,
    /// Set when fewer than 10 replicates survive; intervals are then crude.
    pub low_replicate_warning: bool,
    pub seed: u64,
}

impl BootstrapReport {
    pub fn to_json_string(&self) -> String {
        crate::jsonfmt::to_file_string(self).expect("report serialization cannot fail")
    }
}

/// Percentile by linear interpolation on the sorted replicate values.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// Bootstrap several statistics over one set of replicate reconstructions.
///
/// Each replicate resamples the records with replacement (same N), reruns the
/// reconstruction, and evaluates every statistic; replicate r draws from RNG
/// stream (seed, r), so reports are deterministic for any worker count.
/// Non-converged replicates are excluded and counted.
pub fn bootstrap_multi(
    records: &[QuadratureRecord],
    statistics: &[Statistic],
    cfg: &MleConfig,
    replicates: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<BootstrapReport>> {
    if records.is_empty() {
        return Err(Error::domain("bootstrap needs a nonempty record set"));
    }
    if replicates < 2 {
        return Err(Error::domain(format!("{replicates} bootstrap replicates; need at least 2")));
    }
    if statistics.is_empty() {
        return Err(Error::domain("bootstrap needs at least one statistic"));
    }

    let point = mle_reconstruct_from(records, cfg, None, exec)?;

    // One replicate per block; the inner reconstruction stays sequential.
    let replicate_values: Vec<Option<Vec<f64>>> = exec.map_blocks(replicates, 1, |rep, _| {
        let mut rng = exec::stream_rng(seed, exec::STREAM_BOOTSTRAP_BASE + rep as u64);
        let resampled: Vec<QuadratureRecord> = (0..records.len())
            .map(|_| records[rng.random_range(0..records.len())].clone())
            .collect();
        let result = mle_reconstruct_from(&resampled, cfg, None, Exec::Sequential)
            .expect("resampled records satisfy the same preconditions");
        if !result.converged {
            return None;
        }
        Some(statistics.iter().map(|s| s.evaluate(&result.rho)).collect())
    });

    let kept: Vec<&Vec<f64>> = replicate_values.iter().flatten().collect();
    let excluded = replicates - kept.len();
    if kept.len() < 2 {
        return Err(Error::domain(format!(
            "only {} of {replicates} bootstrap replicates converged",
            kept.len()
        )));
    }

    Ok(statistics
        .iter()
        .enumerate()
        .map(|(si, stat)| {
            let mut values: Vec<f64> = kept.iter().map(|v| v[si]).collect();
            values.sort_by(f64::total_cmp);
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            let point_estimate = stat.evaluate(&point.rho);
            let lo = percentile(&values, 0.025);
            let hi = percentile(&values, 0.975);
            BootstrapReport {
                statistic: stat.name(),
                replicate_count: replicates,
                excluded_count: excluded,
                point_estimate,
                std_dev: var.sqrt(),
                percentile_low: lo,
                percentile_high: hi,
                skewed: !(lo <= point_estimate && point_estimate <= hi),
                low_replicate_warning: values.len() < 10,
                seed,
            }
        })
        .collect())
}

/// Bootstrap a single statistic; see [`bootstrap_multi`].
pub fn bootstrap_with(
    records: &[QuadratureRecord],
    statistic: Statistic,
    cfg: &MleConfig,
    replicates: usize,
    seed: u64,
    exec: Exec,
) -> Result<BootstrapReport> {
    Ok(bootstrap_multi(records, &[statistic], cfg, replicates, seed, exec)?
        .pop()
        .expect("one statistic in, one report out"))
}

pub fn bootstrap(
    records: &[QuadratureRecord],
    statistic: Statistic,
    cfg: &MleConfig,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapReport> {
    bootstrap_with(records, statistic, cfg, replicates, seed, Exec::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockCutoff;
    use crate::homodyne::{sample_quadratures, PhasePolicy};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn cutoff(n: usize) -> FockCutoff {
        FockCutoff::new(n)
    }

    fn published_single_photon() -> DensityMatrix {
        DensityMatrix::from_diag_probs(&[0.372, 0.620, 0.000, 0.008, 0.000], cutoff(4)).unwrap()
    }

    fn published_two_photon() -> DensityMatrix {
        DensityMatrix::from_diag_probs(&[0.119, 0.382, 0.408, 0.079, 0.013], cutoff(4)).unwrap()
    }

    #[test]
    fn vacuum_and_single_photon_at_origin() {
        let vac = DensityMatrix::vacuum(cutoff(3));
        assert_abs_diff_eq!(wigner_point(&vac, 0.0, 0.0), 1.0 / PI, epsilon = 1e-14);
        let one = DensityMatrix::fock(1, cutoff(3)).unwrap();
        assert_abs_diff_eq!(wigner_point(&one, 0.0, 0.0), -1.0 / PI, epsilon = 1e-14);
    }

    #[test]
    fn origin_value_matches_parity_closed_form() {
        // Independent oracle: W(0,0) = (1/π) Σ (-1)^n ρ_nn.
        for rho in [published_single_photon(), published_two_photon()] {
            let parity: f64 = rho
                .diagonal()
                .iter()
                .enumerate()
                .map(|(n, p)| if n % 2 == 0 { *p } else { -*p })
                .sum();
            assert_abs_diff_eq!(wigner_point(&rho, 0.0, 0.0), parity / PI, epsilon = 1e-12);
        }
    }

    #[test]
    fn published_single_photon_negativity() {
        // Frozen from the high-precision Laguerre series.
        assert_abs_diff_eq!(
            wigner_point(&published_single_photon(), 0.0, 0.0),
            -0.0814873308631,
            epsilon = 1e-10
        );
    }

    #[test]
    fn published_two_photon_negativity_off_origin() {
        // Frozen from an independent evaluation with hand-expanded Laguerre
        // polynomials L_0..L_4 at z = 0.845 (distribution renormalized from
        // its published 1.001 total).
        let rho = published_two_photon();
        assert_abs_diff_eq!(wigner_point(&rho, 0.0, 0.65), -0.0082360263286, epsilon = 1e-10);
        let w0 = wigner_point(&rho, 0.0, 0.0);
        assert!(w0 > 0.0, "two-photon state must be positive at the origin, got {w0}");
        assert_abs_diff_eq!(w0, 0.0251213596489, epsilon = 1e-10);
    }

    #[test]
    fn diagonal_states_are_radially_symmetric() {
        let rho = published_two_photon();
        for s in [0.3, 0.65, 1.1, 2.0] {
            let base = wigner_point(&rho, s, 0.0);
            for angle in [0.3, 1.0, 2.2, 4.4] {
                let (x, p) = (s * f64::cos(angle), s * f64::sin(angle));
                assert_abs_diff_eq!(wigner_point(&rho, x, p), base, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn grid_normalization_and_minimum() {
        let vac = DensityMatrix::vacuum(cutoff(3));
        let grid = wigner_grid(&vac, (-5.0, 5.0), (-5.0, 5.0), 201).unwrap();
        assert!(grid.min_value > 0.0);
        assert_abs_diff_eq!(grid.integral(), 1.0, epsilon = 1e-3);

        let one = DensityMatrix::fock(1, cutoff(4)).unwrap();
        let grid = wigner_grid(&one, (-5.0, 5.0), (-5.0, 5.0), 201).unwrap();
        assert_abs_diff_eq!(grid.min_value, -1.0 / PI, epsilon = 1e-9);
        assert_abs_diff_eq!(grid.min_x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(grid.min_p, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(grid.integral(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn two_photon_minimum_sits_on_a_ring() {
        let grid = wigner_grid(&published_two_photon(), (-5.0, 5.0), (-5.0, 5.0), 201).unwrap();
        assert!(grid.min_value < 0.0);
        let radius = (grid.min_x * grid.min_x + grid.min_p * grid.min_p).sqrt();
        assert_abs_diff_eq!(radius, 0.65, epsilon = 0.05);
        // Golden-section refinement around the grid radius.
        let (s, w) = refine_radial_minimum(&published_two_photon(), radius - 0.1, radius + 0.1);
        assert!(w <= grid.min_value + 1e-12);
        assert_abs_diff_eq!(s, 0.654, epsilon = 0.01);
    }

    #[test]
    fn grid_rejects_tiny_resolution() {
        let vac = DensityMatrix::vacuum(cutoff(1));
        assert!(wigner_grid(&vac, (-5.0, 5.0), (-5.0, 5.0), 8).is_err());
    }

    #[test]
    fn grid_csv_shape() {
        let vac = DensityMatrix::vacuum(cutoff(1));
        let grid = wigner_grid(&vac, (-1.0, 1.0), (-1.0, 1.0), 16).unwrap();
        let csv = grid.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 17);
        assert!(lines[0].starts_with("p\\x,"));
        assert_eq!(lines[1].split(',').count(), 17);
        assert!(grid.sidecar_json().contains("min_value"));
    }

    #[test]
    fn photon_distribution_reads_the_diagonal() {
        let one = DensityMatrix::fock(1, cutoff(3)).unwrap();
        let dist = photon_distribution(&one);
        assert_eq!(dist.len(), 4);
        assert_abs_diff_eq!(dist[1].1, 1.0);
        let heralded = crate::herald::conditional_signal_state(
            &crate::herald::HeraldScenario::new(0.4, 1.0, 0.62, 1, cutoff(10)).unwrap(),
        )
        .unwrap()
        .0;
        let dist = photon_distribution(&heralded);
        assert_abs_diff_eq!(dist[0].1, 0.38, epsilon = 1e-12);
        assert_abs_diff_eq!(dist[1].1, 0.62, epsilon = 1e-12);
    }

    #[test]
    fn bootstrap_sd_matches_the_true_sampling_spread() {
        // Oracle: the spread of the estimator across independent datasets.
        // The bootstrap sd from one dataset must reproduce it. Note the true
        // spread sits well above the binomial sqrt(p q / N): quadrature data
        // carry no photon-number labels, and the ψ_n² overlap costs Fisher
        // information (Cramér-Rao for this mixture is ~1.8x binomial).
        let truth = DensityMatrix::from_diag_probs(&[0.38, 0.62], cutoff(1)).unwrap();
        let n = 3_000;
        let cfg = MleConfig::new(cutoff(1));
        let direct: Vec<f64> = (0..40)
            .map(|k| {
                let records =
                    sample_quadratures(&truth, n, PhasePolicy::UniformRandom, 1, 9000 + k);
                crate::tomography::mle_reconstruct(&records, &cfg).unwrap().rho.diagonal()[1]
            })
            .collect();
        let mean = direct.iter().sum::<f64>() / direct.len() as f64;
        let sampling_sd = (direct.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (direct.len() - 1) as f64)
            .sqrt();

        let records = sample_quadratures(&truth, n, PhasePolicy::UniformRandom, 1, 81);
        let report = bootstrap(&records, Statistic::PhotonProb(1), &cfg, 40, 4242).unwrap();
        let ratio = report.std_dev / sampling_sd;
        assert!(
            (0.6..=1.6).contains(&ratio),
            "bootstrap sd {} vs sampling sd {sampling_sd} (ratio {ratio:.2})",
            report.std_dev
        );
        let binomial = (0.62f64 * 0.38 / n as f64).sqrt();
        assert!(
            sampling_sd > binomial && sampling_sd < 3.0 * binomial,
            "sampling sd {sampling_sd} should sit between 1x and 3x binomial {binomial}"
        );
        assert!(!report.skewed);
        assert_eq!(report.excluded_count, 0);
    }

    #[test]
    fn bootstrap_minimum_replicates_and_warning() {
        let truth = DensityMatrix::from_diag_probs(&[0.5, 0.5], cutoff(3)).unwrap();
        let records = sample_quadratures(&truth, 300, PhasePolicy::UniformRandom, 0, 82);
        let cfg = MleConfig::new(cutoff(3));
        assert!(bootstrap(&records, Statistic::PhotonProb(0), &cfg, 1, 1).is_err());
        let report = bootstrap(&records, Statistic::PhotonProb(0), &cfg, 2, 1).unwrap();
        assert!(report.low_replicate_warning);
        assert_eq!(report.replicate_count, 2);
    }

    #[test]
    fn bootstrap_rejects_fully_nonconverged_replicates() {
        let truth = DensityMatrix::from_diag_probs(&[0.5, 0.5], cutoff(3)).unwrap();
        let records = sample_quadratures(&truth, 300, PhasePolicy::UniformRandom, 0, 86);
        // One update can never reach the 1e-9 gain tolerance here, so every
        // replicate is flagged non-converged and excluded.
        let cfg = MleConfig { max_iterations: 1, ..MleConfig::new(cutoff(3)) };
        let err = bootstrap(&records, Statistic::PhotonProb(0), &cfg, 4, 1).unwrap_err();
        assert!(err.to_string().contains("converged"), "{err}");
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let truth = DensityMatrix::from_diag_probs(&[0.38, 0.62], cutoff(3)).unwrap();
        let records = sample_quadratures(&truth, 500, PhasePolicy::UniformRandom, 1, 83);
        let cfg = MleConfig::new(cutoff(3));
        let a = bootstrap(&records, Statistic::PhotonProb(1), &cfg, 12, 7).unwrap();
        let b = bootstrap(&records, Statistic::PhotonProb(1), &cfg, 12, 7).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn bootstrap_engines_agree() {
        let truth = DensityMatrix::from_diag_probs(&[0.38, 0.62], cutoff(3)).unwrap();
        let records = sample_quadratures(&truth, 500, PhasePolicy::UniformRandom, 1, 84);
        let cfg = MleConfig::new(cutoff(3));
        let seq = bootstrap_with(&records, Statistic::PhotonProb(1), &cfg, 10, 7, Exec::Sequential)
            .unwrap();
        let par = bootstrap_with(&records, Statistic::PhotonProb(1), &cfg, 10, 7, Exec::Parallel)
            .unwrap();
        assert_eq!(seq.to_json_string(), par.to_json_string());
    }

    #[test]
    fn wigner_statistic_bootstrap_runs() {
        let truth = published_single_photon();
        let records = sample_quadratures(&truth, 2_000, PhasePolicy::UniformRandom, 1, 85);
        let cfg = MleConfig::new(cutoff(4));
        let report = bootstrap(
            &records,
            Statistic::WignerAt { x: 0.0, p: 0.0 },
            &cfg,
            30,
            9,
        )
        .unwrap();
        assert!(report.point_estimate < 0.0, "W(0,0) should be negative for this state");
        assert!(report.std_dev > 0.0);
        assert_eq!(report.statistic, "W(0,0)");
    }
}
