//! Linear algebra on a truncated Fock basis {|0⟩, ..., |n_max⟩}.
//!
//! Everything downstream (herald models, homodyne densities, tomography,
//! Wigner functions) consumes the types defined here. The truncation cutoff is
//! explicit in every constructor; nothing re-truncates silently.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hermiticity acceptance threshold at construction.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Trace acceptance threshold at construction (trace is renormalized exactly).
pub const TRACE_TOL: f64 = 1e-9;
/// Eigenvalues in `[EIGENVALUE_FLOOR, 0)` are treated as round-off and clamped
/// to zero whenever a decomposition is required.
pub const EIGENVALUE_FLOOR: f64 = -1e-9;
/// Diagonal inputs are renormalized exactly; sums farther than this from 1 are
/// rejected. Wide enough to accept published distributions rounded to 0.1%.
pub const DIAG_SUM_TOL: f64 = 1e-2;

/// Highest retained Fock index; the matrix dimension is `n_max + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FockCutoff {
    n_max: usize,
}

impl FockCutoff {
    pub fn new(n_max: usize) -> Self {
        FockCutoff { n_max }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

/// Annihilation operator on the truncated basis: entry `[m, m+1] = sqrt(m+1)`.
///
/// The truncated commutator `[a, a†]` equals the identity except for the
/// `(n_max, n_max)` corner, which is `-n_max`.
pub fn annihilation_matrix(cutoff: FockCutoff) -> DMatrix<Complex64> {
    let dim = cutoff.dim();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..dim - 1 {
        m[(k, k + 1)] = Complex64::new(((k + 1) as f64).sqrt(), 0.0);
    }
    m
}

/// Normalized pure state on the truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: DVector<Complex64>,
}

impl PureState {
    /// Build from amplitudes; the squared norm must be 1 within 1e-12.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::domain("pure state needs at least one amplitude"));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "pure state squared norm {norm_sq} differs from 1 by more than 1e-12"
            )));
        }
        Ok(PureState { amps: DVector::from_vec(amplitudes) })
    }

    /// The Fock ket |n⟩.
    pub fn fock(n: usize, cutoff: FockCutoff) -> Result<Self> {
        if n > cutoff.n_max() {
            return Err(Error::domain(format!(
                "Fock index {n} exceeds cutoff n_max = {}",
                cutoff.n_max()
            )));
        }
        let mut amps = vec![Complex64::ZERO; cutoff.dim()];
        amps[n] = Complex64::ONE;
        PureState::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    /// The projector |ψ⟩⟨ψ| as a density matrix.
    pub fn density_matrix(&self) -> DensityMatrix {
        let m = &self.amps * self.amps.adjoint();
        DensityMatrix::new(m).expect("projector of a normalized state is a valid density matrix")
    }
}

/// Hermitian, positive-semidefinite, unit-trace matrix on the truncated basis.
///
/// Constructors hermitize and renormalize the trace exactly, then reject
/// inputs outside the stated tolerances, so a stored matrix always satisfies
/// the invariants bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::domain(format!(
                "density matrix must be square and non-empty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let herm_err = (&mat - mat.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > 2.0 * HERMITICITY_TOL {
            return Err(Error::domain(format!(
                "matrix is not Hermitian: max |ρ - ρ†| = {herm_err:.3e}"
            )));
        }
        let mut m = (&mat + mat.adjoint()).scale(0.5);
        let trace = m.trace().re;
        if !trace.is_finite() || (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::domain(format!(
                "trace {trace} differs from 1 by more than {TRACE_TOL:e}"
            )));
        }
        m.scale_mut(1.0 / trace);
        let dm = DensityMatrix { mat: m };
        let min_eig = dm.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < EIGENVALUE_FLOOR {
            return Err(Error::domain(format!(
                "matrix is not positive semidefinite: min eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(dm)
    }

    /// Diagonal (phase-insensitive) state from a photon-number distribution.
    ///
    /// `probs` may be shorter than the cutoff dimension; missing entries are
    /// zero. Entries must be nonnegative and sum to 1 within [`DIAG_SUM_TOL`];
    /// the sum is renormalized exactly.
    pub fn from_diag_probs(probs: &[f64], cutoff: FockCutoff) -> Result<Self> {
        let dim = cutoff.dim();
        if probs.len() > dim {
            return Err(Error::domain(format!(
                "{} probabilities exceed cutoff dimension {dim}",
                probs.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::domain(format!("negative or non-finite probability {bad}")));
        }
        let sum: f64 = probs.iter().sum();
        if sum <= 0.0 {
            return Err(Error::domain("probabilities sum to zero"));
        }
        if (sum - 1.0).abs() > DIAG_SUM_TOL {
            return Err(Error::domain(format!(
                "probabilities sum to {sum}, more than {DIAG_SUM_TOL} away from 1"
            )));
        }
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (n, p) in probs.iter().enumerate() {
            m[(n, n)] = Complex64::new(p / sum, 0.0);
        }
        Ok(DensityMatrix { mat: m })
    }

    /// The Fock state |n⟩⟨n|.
    pub fn fock(n: usize, cutoff: FockCutoff) -> Result<Self> {
        Ok(PureState::fock(n, cutoff)?.density_matrix())
    }

    /// Vacuum |0⟩⟨0|.
    pub fn vacuum(cutoff: FockCutoff) -> Self {
        Self::fock(0, cutoff).expect("vacuum fits any cutoff")
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn cutoff(&self) -> FockCutoff {
        FockCutoff::new(self.dim() - 1)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn element(&self, m: usize, n: usize) -> Complex64 {
        self.mat[(m, n)]
    }

    /// Photon-number probabilities (the real diagonal).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.mat[(n, n)].re).collect()
    }

    /// True when every off-diagonal magnitude is below `tol`.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        let d = self.dim();
        for m in 0..d {
            for n in 0..d {
                if m != n && self.mat[(m, n)].norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Mean photon number, trace(ρ n̂).
    pub fn mean_photon(&self) -> f64 {
        self.diagonal().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Eigenvalues with round-off negatives in `[EIGENVALUE_FLOOR, 0)` clamped
    /// to zero. Values below the floor never occur in a constructed matrix.
    pub fn eigenvalues_clamped(&self) -> Vec<f64> {
        self.eigenvalues().into_iter().map(|l| l.max(0.0)).collect()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }
}

fn hermitian_eigen(mat: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = nalgebra::linalg::SymmetricEigen::new(mat.clone());
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn hermitian_eigenvalues(mat: &DMatrix<Complex64>) -> Vec<f64> {
    hermitian_eigen(mat).0
}

/// Hermitian square root via eigendecomposition, clamping round-off negatives.
fn hermitian_sqrt(mat: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (vals, vecs) = hermitian_eigen(mat);
    let scaled = DMatrix::from_fn(mat.nrows(), mat.ncols(), |r, c| {
        vecs[(r, c)] * Complex64::new(vals[c].max(0.0).sqrt(), 0.0)
    });
    &scaled * vecs.adjoint()
}

/// Uhlmann fidelity F(a, b) = (tr sqrt(sqrt(a) b sqrt(a)))², clamped to [0, 1].
///
/// For commuting diagonal states this reduces to (Σ_n sqrt(p_n q_n))².
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::domain(format!(
            "fidelity dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let sqrt_a = hermitian_sqrt(a.matrix());
    let inner = &sqrt_a * b.matrix() * &sqrt_a;
    let vals = hermitian_eigenvalues(&inner);
    let root_sum: f64 = vals.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// JSON form: `{"dim": d, "re": [...], "im": [...]}` with row-major arrays.
#[derive(Serialize, Deserialize)]
struct DmJson {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl DensityMatrix {
    pub fn to_json_value(&self) -> serde_json::Value {
        let d = self.dim();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                re.push(self.mat[(r, c)].re);
                im.push(self.mat[(r, c)].im);
            }
        }
        serde_json::json!({ "dim": d, "re": re, "im": im })
    }

    /// Full-precision JSON string (at least 15 significant digits per value).
    pub fn to_json_string(&self) -> String {
        crate::jsonfmt::to_string(&self.to_json_value())
            .expect("density matrix serialization cannot fail")
    }

    /// Parse the `{"dim", "re", "im"}` object; extra fields are ignored.
    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let dm: DmJson = serde_json::from_value(value.clone())
            .map_err(|e| Error::parse(None, format!("bad density matrix JSON: {e}")))?;
        let want = dm.dim * dm.dim;
        if dm.re.len() != want || dm.im.len() != want {
            return Err(Error::parse(
                None,
                format!("density matrix arrays must have dim² = {want} entries"),
            ));
        }
        let mat = DMatrix::from_fn(dm.dim, dm.dim, |r, c| {
            Complex64::new(dm.re[r * dm.dim + c], dm.im[r * dm.dim + c])
        });
        DensityMatrix::new(mat)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::parse(None, format!("bad JSON: {e}")))?;
        Self::from_json_value(&value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn published_single_photon_dist() -> Vec<f64> {
        vec![0.372, 0.620, 0.000, 0.008, 0.000]
    }

    #[test]
    fn annihilation_entries_match_ladder_action() {
        let a = annihilation_matrix(FockCutoff::new(2));
        assert_abs_diff_eq!(a[(0, 1)].re, 1.0);
        assert_abs_diff_eq!(a[(1, 2)].re, 2.0f64.sqrt());
        for r in 0..3 {
            for c in 0..3 {
                if c != r + 1 {
                    assert_eq!(a[(r, c)], Complex64::ZERO);
                }
            }
        }
    }

    #[test]
    fn annihilation_on_vacuum_cutoff_is_zero() {
        let a = annihilation_matrix(FockCutoff::new(0));
        assert_eq!(a.nrows(), 1);
        assert_eq!(a[(0, 0)], Complex64::ZERO);
    }

    #[test]
    fn number_operator_diagonal() {
        let cutoff = FockCutoff::new(5);
        let a = annihilation_matrix(cutoff);
        let n = a.adjoint() * &a;
        for k in 0..cutoff.dim() {
            assert_abs_diff_eq!(n[(k, k)].re, k as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn truncated_commutator_has_corner_defect() {
        let cutoff = FockCutoff::new(4);
        let a = annihilation_matrix(cutoff);
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        for k in 0..cutoff.dim() - 1 {
            assert_abs_diff_eq!(comm[(k, k)].re, 1.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(comm[(4, 4)].re, -4.0, epsilon = 1e-14);
    }

    #[test]
    fn diag_vacuum_is_projector() {
        let dm = DensityMatrix::from_diag_probs(&[1.0], FockCutoff::new(3)).unwrap();
        assert_abs_diff_eq!(dm.element(0, 0).re, 1.0);
        assert_abs_diff_eq!(dm.matrix().trace().re, 1.0);
    }

    #[test]
    fn diag_published_row_is_valid() {
        let dm = DensityMatrix::from_diag_probs(&published_single_photon_dist(), FockCutoff::new(4)).unwrap();
        assert_abs_diff_eq!(dm.matrix().trace().re, 1.0, epsilon = 1e-15);
        assert!(dm.is_diagonal(0.0));
    }

    #[test]
    fn diag_half_half_eigenvalues() {
        let dm = DensityMatrix::from_diag_probs(&[0.5, 0.5], FockCutoff::new(1)).unwrap();
        let mut eig = dm.eigenvalues_clamped();
        eig.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(eig[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(eig[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn diag_rejects_negative_entry() {
        assert!(DensityMatrix::from_diag_probs(&[1.1, -0.1], FockCutoff::new(1)).is_err());
    }

    #[test]
    fn diag_rejects_zero_sum() {
        assert!(DensityMatrix::from_diag_probs(&[0.0, 0.0], FockCutoff::new(1)).is_err());
    }

    #[test]
    fn diag_accepts_published_rounding_but_not_worse() {
        // Published two-photon distribution sums to 1.001.
        let two = vec![0.119, 0.382, 0.408, 0.079, 0.013];
        let dm = DensityMatrix::from_diag_probs(&two, FockCutoff::new(4)).unwrap();
        assert_abs_diff_eq!(dm.matrix().trace().re, 1.0, epsilon = 1e-15);
        assert!(DensityMatrix::from_diag_probs(&[0.5, 0.4], FockCutoff::new(1)).is_err());
    }

    #[test]
    fn fidelity_of_equal_fock_states_is_one() {
        let cutoff = FockCutoff::new(3);
        let one = DensityMatrix::fock(1, cutoff).unwrap();
        assert_abs_diff_eq!(fidelity(&one, &one).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_of_orthogonal_states_is_zero() {
        let cutoff = FockCutoff::new(3);
        let zero = DensityMatrix::fock(0, cutoff).unwrap();
        let one = DensityMatrix::fock(1, cutoff).unwrap();
        assert_abs_diff_eq!(fidelity(&zero, &one).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_matches_diagonal_closed_form() {
        // Oracle for commuting diagonal states: (Σ sqrt(p q))².
        let cutoff = FockCutoff::new(1);
        let a = DensityMatrix::from_diag_probs(&[1.0, 0.0], cutoff).unwrap();
        let b = DensityMatrix::from_diag_probs(&[0.5, 0.5], cutoff).unwrap();
        assert_abs_diff_eq!(fidelity(&a, &b).unwrap(), 0.5, epsilon = 1e-12);
        let c = DensityMatrix::from_diag_probs(&[0.5, 0.5], cutoff).unwrap();
        assert_abs_diff_eq!(fidelity(&b, &c).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_rejects_dimension_mismatch() {
        let a = DensityMatrix::vacuum(FockCutoff::new(1));
        let b = DensityMatrix::vacuum(FockCutoff::new(2));
        assert!(fidelity(&a, &b).is_err());
    }

    #[test]
    fn mean_photon_values() {
        let cutoff = FockCutoff::new(4);
        assert_abs_diff_eq!(DensityMatrix::fock(2, cutoff).unwrap().mean_photon(), 2.0);
        assert_abs_diff_eq!(DensityMatrix::vacuum(cutoff).mean_photon(), 0.0);
        let row = DensityMatrix::from_diag_probs(&published_single_photon_dist(), cutoff).unwrap();
        assert_abs_diff_eq!(row.mean_photon(), 0.620 + 3.0 * 0.008, epsilon = 1e-12);
    }

    #[test]
    fn mean_photon_matches_weighted_sum_exactly() {
        let probs = vec![0.1, 0.2, 0.3, 0.25, 0.15];
        let dm = DensityMatrix::from_diag_probs(&probs, FockCutoff::new(4)).unwrap();
        let oracle: f64 = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        assert_abs_diff_eq!(dm.mean_photon(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let dm = DensityMatrix::from_diag_probs(&[0.372, 0.620, 0.0, 0.008, 0.0], FockCutoff::new(4))
            .unwrap();
        let s = dm.to_json_string();
        let back = DensityMatrix::from_json_str(&s).unwrap();
        assert_eq!(dm.matrix(), back.matrix());
        assert!(s.contains("\"dim\""));
    }

    #[test]
    fn new_rejects_non_hermitian_and_non_psd() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = Complex64::new(0.5, 0.0);
        m[(1, 1)] = Complex64::new(0.5, 0.0);
        m[(0, 1)] = Complex64::new(0.3, 0.0);
        m[(1, 0)] = Complex64::new(-0.3, 0.0);
        assert!(DensityMatrix::new(m).is_err());

        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        m[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn pure_state_requires_unit_norm() {
        assert!(PureState::new(vec![Complex64::new(0.5, 0.0)]).is_err());
        let s = PureState::new(vec![
            Complex64::new(0.5f64.sqrt(), 0.0),
            Complex64::new(0.0, 0.5f64.sqrt()),
        ])
        .unwrap();
        let dm = s.density_matrix();
        assert_abs_diff_eq!(dm.element(0, 0).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(dm.element(0, 1).im, -0.5, epsilon = 1e-12);
    }
}
