//! Quadrature probability densities and Monte-Carlo homodyne sampling.
//!
//! Convention: x = (a + a†)/√2, so the vacuum quadrature variance is 1/2 and
//! the number-basis wavefunctions are ψ_n(x) = H_n(x) exp(-x²/2)/sqrt(2^n n! √π).
//! Every quadrature in the crate, simulated or extracted from trace data,
//! is expressed in these units.

use std::f64::consts::{PI, TAU};
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::fock::DensityMatrix;

/// Vacuum quadrature variance under the crate convention.
pub const VACUUM_VARIANCE: f64 = 0.5;
/// Number of grid points in the tabulated inverse-CDF sampler.
pub const SAMPLER_GRID_POINTS: usize = 4096;

/// Half-width of the sampler grid, L = 5 + sqrt(2 n_max); covers the
/// classical turning radius of |n_max⟩ plus five vacuum widths.
pub fn grid_half_width(n_max: usize) -> f64 {
    5.0 + (2.0 * n_max as f64).sqrt()
}

/// Harmonic-oscillator wavefunctions ψ_0(x)..ψ_n_max(x).
///
/// Three-term recurrence directly on the normalized ψ_n, which stays bounded
/// where the bare Hermite polynomials would overflow.
pub fn psi_row(x: f64, n_max: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(n_max + 1);
    let psi0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    row.push(psi0);
    if n_max == 0 {
        return row;
    }
    row.push(2.0f64.sqrt() * x * psi0);
    for n in 1..n_max {
        let next = (2.0 / (n as f64 + 1.0)).sqrt() * x * row[n]
            - (n as f64 / (n as f64 + 1.0)).sqrt() * row[n - 1];
        row.push(next);
    }
    row
}

/// Quadrature probability density p(x | θ) = Σ_{m,n} ρ_{mn} e^{i(n-m)θ} ψ_m ψ_n.
///
/// Phase-insensitive (diagonal) states give a θ-independent density.
pub fn quad_pdf(rho: &DensityMatrix, theta: f64, x: f64) -> f64 {
    let d = rho.dim();
    let psi = psi_row(x, d - 1);
    // p = u† ρ u with u_n = ψ_n(x) e^{inθ}.
    let mut re_acc = 0.0;
    for m in 0..d {
        re_acc += rho.element(m, m).re * psi[m] * psi[m];
        for n in (m + 1)..d {
            let phase = (n - m) as f64 * theta;
            let z = rho.element(m, n);
            re_acc += 2.0 * psi[m] * psi[n] * (z.re * phase.cos() - z.im * phase.sin());
        }
    }
    re_acc.max(0.0)
}

/// Local-oscillator phase assignment for sampled records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhasePolicy {
    /// Every record at the same phase (reduced into [0, 2π)).
    Fixed(f64),
    /// Phase drawn uniformly from [0, 2π) per record.
    UniformRandom,
}

/// One homodyne outcome: quadrature value in shot-noise units, LO phase,
/// herald tag, and slot index.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRecord {
    pub x: f64,
    pub theta: f64,
    pub herald_n: u32,
    pub slot: u64,
}

impl QuadratureRecord {
    pub fn new(x: f64, theta: f64, herald_n: u32, slot: u64) -> Result<Self> {
        if !x.is_finite() || !theta.is_finite() {
            return Err(Error::domain(format!("non-finite quadrature record ({x}, {theta})")));
        }
        Ok(QuadratureRecord { x, theta: theta.rem_euclid(TAU), herald_n, slot })
    }
}

/// Tabulated inverse-CDF sampler for p(x | θ) of one state at one phase.
///
/// The density is tabulated on a uniform grid over [-L, L], cumulated by the
/// trapezoid rule and inverted with linear interpolation. This stays robust
/// for the multimodal Fock-state densities where rejection sampling would
/// need state-specific envelopes.
#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    step: f64,
}

impl QuadratureSampler {
    pub fn new(rho: &DensityMatrix, theta: f64) -> Self {
        let n_max = rho.dim() - 1;
        let half = grid_half_width(n_max);
        let g = SAMPLER_GRID_POINTS;
        let step = 2.0 * half / (g as f64 - 1.0);
        let xs: Vec<f64> = (0..g).map(|i| -half + i as f64 * step).collect();
        let pdf: Vec<f64> = xs.iter().map(|&x| quad_pdf(rho, theta, x)).collect();
        let mut cdf = Vec::with_capacity(g);
        cdf.push(0.0);
        for i in 1..g {
            let prev = cdf[i - 1];
            cdf.push(prev + 0.5 * (pdf[i - 1] + pdf[i]) * step);
        }
        let total = *cdf.last().expect("non-empty grid");
        debug_assert!(total > 0.0, "density integrates to zero on the sampler grid");
        for c in cdf.iter_mut() {
            *c /= total;
        }
        QuadratureSampler { xs, cdf, step }
    }

    /// Map a uniform u ∈ [0, 1) through the inverse CDF.
    pub fn sample(&self, u: f64) -> f64 {
        let idx = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let lo = self.cdf[idx - 1];
        let hi = self.cdf[idx];
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.0 };
        self.xs[idx - 1] + frac * self.step
    }

    pub fn grid_half_width(&self) -> f64 {
        *self.xs.last().expect("non-empty grid")
    }
}

/// Seeded i.i.d. homodyne samples from a state.
///
/// Draws are organized in fixed blocks, one RNG stream per block
/// ((seed, block) derivation), so the output is identical for any worker
/// count and for both execution engines. `herald_tag` is stamped on every
/// record; slots number the records sequentially.
pub fn sample_quadratures_with(
    rho: &DensityMatrix,
    count: usize,
    policy: PhasePolicy,
    herald_tag: u32,
    seed: u64,
    exec: Exec,
) -> Vec<QuadratureRecord> {
    // A diagonal state has a θ-independent density: one table serves every
    // record. Otherwise the fixed-phase table is shared, and uniform-random
    // phases fall back to a per-record table.
    let shared = match policy {
        PhasePolicy::Fixed(theta) => Some(QuadratureSampler::new(rho, theta.rem_euclid(TAU))),
        PhasePolicy::UniformRandom if rho.is_diagonal(1e-14) => {
            Some(QuadratureSampler::new(rho, 0.0))
        }
        PhasePolicy::UniformRandom => None,
    };

    exec.flat_map_blocks(count, exec::BLOCK_LEN, |b, range| {
        let mut rng = exec::stream_rng(seed, exec::STREAM_SAMPLER_BASE + b as u64);
        range
            .map(|i| {
                let theta = match policy {
                    PhasePolicy::Fixed(t) => t.rem_euclid(TAU),
                    PhasePolicy::UniformRandom => rng.random::<f64>() * TAU,
                };
                let u = rng.random::<f64>();
                let x = match &shared {
                    Some(s) => s.sample(u),
                    None => QuadratureSampler::new(rho, theta).sample(u),
                };
                QuadratureRecord { x, theta, herald_n: herald_tag, slot: i as u64 }
            })
            .collect()
    })
}

/// [`sample_quadratures_with`] under the default execution engine.
pub fn sample_quadratures(
    rho: &DensityMatrix,
    count: usize,
    policy: PhasePolicy,
    herald_tag: u32,
    seed: u64,
) -> Vec<QuadratureRecord> {
    sample_quadratures_with(rho, count, policy, herald_tag, seed, Exec::default())
}

pub const QUADRATURE_CSV_HEADER: &str = "x,theta,herald_n,slot";

/// Write the shared quadrature CSV (`x,theta,herald_n,slot`); floats carry 17
/// significant digits (exact round-trip).
pub fn write_quadrature_csv<W: Write>(mut w: W, records: &[QuadratureRecord]) -> Result<()> {
    writeln!(w, "{QUADRATURE_CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{:.16e},{:.16e},{},{}", r.x, r.theta, r.herald_n, r.slot)?;
    }
    Ok(())
}

pub fn quadrature_csv_string(records: &[QuadratureRecord]) -> String {
    let mut buf = Vec::new();
    write_quadrature_csv(&mut buf, records).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

pub fn read_quadrature_csv<R: BufRead>(r: R) -> Result<Vec<QuadratureRecord>> {
    let mut records = Vec::new();
    let mut lines = r.lines().enumerate();
    match lines.next() {
        Some((_, Ok(header))) if header.trim_end() == QUADRATURE_CSV_HEADER => {}
        Some((_, Ok(header))) => {
            return Err(Error::parse(
                Some(1),
                format!("expected header '{QUADRATURE_CSV_HEADER}', got '{header}'"),
            ));
        }
        Some((_, Err(e))) => return Err(e.into()),
        None => return Err(Error::parse(Some(1), "empty quadrature CSV")),
    }
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(Some(lineno), format!("expected 4 fields, got {}", fields.len())));
        }
        let x: f64 = fields[0]
            .parse()
            .map_err(|e| Error::parse(Some(lineno), format!("bad x '{}': {e}", fields[0])))?;
        let theta: f64 = fields[1]
            .parse()
            .map_err(|e| Error::parse(Some(lineno), format!("bad theta '{}': {e}", fields[1])))?;
        let herald_n: u32 = fields[2]
            .parse()
            .map_err(|e| Error::parse(Some(lineno), format!("bad herald_n '{}': {e}", fields[2])))?;
        let slot: u64 = fields[3]
            .parse()
            .map_err(|e| Error::parse(Some(lineno), format!("bad slot '{}': {e}", fields[3])))?;
        records.push(
            QuadratureRecord::new(x, theta, herald_n, slot)
                .map_err(|e| Error::parse(Some(lineno), e.to_string()))?,
        );
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockCutoff;
    use approx::assert_abs_diff_eq;

    fn fock(n: usize, n_max: usize) -> DensityMatrix {
        DensityMatrix::fock(n, FockCutoff::new(n_max)).unwrap()
    }

    fn sample_variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn vacuum_density_peak() {
        let rho = fock(0, 3);
        assert_abs_diff_eq!(quad_pdf(&rho, 0.0, 0.0), PI.powf(-0.5), epsilon = 1e-12);
    }

    #[test]
    fn single_photon_node_at_origin() {
        let rho = fock(1, 3);
        assert!(quad_pdf(&rho, 0.3, 0.0) < 1e-30);
    }

    #[test]
    fn diagonal_density_is_phase_insensitive() {
        let rho = DensityMatrix::from_diag_probs(&[0.5, 0.5], FockCutoff::new(1)).unwrap();
        for x in [-1.3, -0.2, 0.9, 2.4] {
            assert_eq!(quad_pdf(&rho, 0.0, x), quad_pdf(&rho, 1.234, x));
        }
    }

    #[test]
    fn psi_row_matches_low_order_closed_forms() {
        for x in [-2.0, -0.5, 0.0, 0.7, 3.1] {
            let row = psi_row(x, 2);
            let psi0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
            assert_abs_diff_eq!(row[0], psi0, epsilon = 1e-14);
            assert_abs_diff_eq!(row[1], 2.0f64.sqrt() * x * psi0, epsilon = 1e-14);
            assert_abs_diff_eq!(
                row[2],
                (2.0 * x * x - 1.0) / 2.0f64.sqrt() * psi0,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn psi_row_normalized_on_sampler_grid() {
        // Trapezoid over the sampler grid; the integrand decays like a
        // Gaussian so the rule is effectively spectrally accurate.
        let n_max = 10;
        let half = grid_half_width(n_max);
        let g = SAMPLER_GRID_POINTS;
        let step = 2.0 * half / (g as f64 - 1.0);
        let mut norms = vec![0.0; n_max + 1];
        for i in 0..g {
            let x = -half + i as f64 * step;
            let row = psi_row(x, n_max);
            let w = if i == 0 || i == g - 1 { 0.5 } else { 1.0 };
            for (n, v) in row.iter().enumerate() {
                norms[n] += w * v * v * step;
            }
        }
        for (n, norm) in norms.iter().enumerate() {
            assert!((norm - 1.0).abs() < 1e-8, "norm defect {:.2e} at n = {n}", norm - 1.0);
        }
    }

    #[test]
    fn vacuum_sample_variance() {
        let rho = fock(0, 3);
        let recs = sample_quadratures(&rho, 100_000, PhasePolicy::UniformRandom, 0, 11);
        let xs: Vec<f64> = recs.iter().map(|r| r.x).collect();
        assert_abs_diff_eq!(sample_variance(&xs), 0.5, epsilon = 0.005);
    }

    #[test]
    fn single_photon_sample_variance() {
        let rho = fock(1, 4);
        let recs = sample_quadratures(&rho, 100_000, PhasePolicy::Fixed(0.0), 1, 12);
        let xs: Vec<f64> = recs.iter().map(|r| r.x).collect();
        assert_abs_diff_eq!(sample_variance(&xs), 1.5, epsilon = 0.02);
    }

    #[test]
    fn two_photon_sample_variance() {
        let rho = fock(2, 5);
        let recs = sample_quadratures(&rho, 100_000, PhasePolicy::UniformRandom, 2, 13);
        let xs: Vec<f64> = recs.iter().map(|r| r.x).collect();
        assert_abs_diff_eq!(sample_variance(&xs), 2.5, epsilon = 0.03);
    }

    #[test]
    fn sampling_is_deterministic() {
        let rho = DensityMatrix::from_diag_probs(&[0.38, 0.62], FockCutoff::new(3)).unwrap();
        let a = sample_quadratures(&rho, 3000, PhasePolicy::UniformRandom, 1, 99);
        let b = sample_quadratures(&rho, 3000, PhasePolicy::UniformRandom, 1, 99);
        assert_eq!(a, b);
        let c = sample_quadratures(&rho, 3000, PhasePolicy::UniformRandom, 1, 100);
        assert_ne!(a, c);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn engines_agree_bitwise() {
        let rho = DensityMatrix::from_diag_probs(&[0.2, 0.5, 0.3], FockCutoff::new(4)).unwrap();
        let seq =
            sample_quadratures_with(&rho, 5000, PhasePolicy::UniformRandom, 1, 5, Exec::Sequential);
        let par =
            sample_quadratures_with(&rho, 5000, PhasePolicy::UniformRandom, 1, 5, Exec::Parallel);
        assert_eq!(seq, par);
    }

    #[test]
    fn nondiagonal_state_samples_phase_dependently() {
        // (|0> + |1>)/sqrt(2): at θ = 0 the density is shifted to positive x.
        use num_complex::Complex64;
        let amp = Complex64::new(0.5f64.sqrt(), 0.0);
        let psi = crate::fock::PureState::new(vec![amp, amp]).unwrap();
        let rho = psi.density_matrix();
        let recs = sample_quadratures(&rho, 4000, PhasePolicy::Fixed(0.0), 0, 21);
        let mean = recs.iter().map(|r| r.x).sum::<f64>() / recs.len() as f64;
        // <x> = 1/sqrt(2) ≈ 0.707; SE ≈ 0.011.
        assert_abs_diff_eq!(mean, 0.5f64.sqrt(), epsilon = 0.05);
        // At θ = π/2 the mean quadrature is zero.
        let recs = sample_quadratures(&rho, 4000, PhasePolicy::Fixed(PI / 2.0), 0, 21);
        let mean = recs.iter().map(|r| r.x).sum::<f64>() / recs.len() as f64;
        assert_abs_diff_eq!(mean, 0.0, epsilon = 0.05);
    }

    #[test]
    fn csv_round_trip() {
        let rho = fock(1, 2);
        let recs = sample_quadratures(&rho, 50, PhasePolicy::UniformRandom, 1, 3);
        let text = quadrature_csv_string(&recs);
        let back = read_quadrature_csv(text.as_bytes()).unwrap();
        assert_eq!(recs, back);
    }

    #[test]
    fn csv_reports_bad_line_number() {
        let text = "x,theta,herald_n,slot\n0.1,0.0,1,0\nnot-a-number,0.0,1,1\n";
        match read_quadrature_csv(text.as_bytes()) {
            Err(Error::Parse { line: Some(3), .. }) => {}
            other => panic!("expected parse error at line 3, got {other:?}"),
        }
    }
}
