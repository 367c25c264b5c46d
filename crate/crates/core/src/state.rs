//! Finite-dimensional quantum state algebra: density matrices and pure
//! states over tensor-product Hilbert spaces, entropies, distances and
//! partial traces.
//!
//! Conventions used throughout:
//! - all entropic quantities are in bits (base-2 logarithms);
//! - the trace distance carries no 1/2 prefactor, so it ranges over [0, 2]
//!   and orthogonal pure states sit at distance 2.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hermiticity / trace tolerance for state validation.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues in [-EIG_CLAMP, 0] are clamped to zero before logarithms;
/// anything more negative is rejected as an invalid state.
pub const EIG_CLAMP: f64 = 1e-10;
/// Kraus completeness tolerance, Σ K†K = I ± KRAUS_TOL.
pub const KRAUS_TOL: f64 = 1e-9;

/// Largest total dimension accepted; enough for system ⊗ environment ⊗
/// reference constructions on qubits.
pub const MAX_DIM: usize = 64;

/// A positive, unit-trace Hermitian matrix over a tensor product of
/// finite-dimensional subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (eigenvalues above
    /// -1e-10) before accepting the matrix.
    pub fn new(dims: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidState("empty subsystem list".into()));
        }
        if dim > MAX_DIM {
            return Err(Error::InvalidState(format!(
                "total dimension {dim} exceeds supported maximum {MAX_DIM}"
            )));
        }
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: matrix.nrows(),
            });
        }
        let herm_defect = (&matrix - matrix.adjoint()).norm();
        if herm_defect > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian: ‖ρ − ρ†‖ = {herm_defect:.3e}"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > STATE_TOL || trace.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "trace = {trace}, expected 1"
            )));
        }
        let state = Self { dims, matrix };
        let min_eig = state
            .eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -EIG_CLAMP {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(state)
    }

    /// Constructor for matrices that are valid by construction (Kraus
    /// applications, partial traces, tensor products of valid states).
    pub(crate) fn from_trusted(dims: Vec<usize>, matrix: DMatrix<Complex64>) -> Self {
        debug_assert!((matrix.trace().re - 1.0).abs() < 1e-8);
        debug_assert!((&matrix - matrix.adjoint()).norm() < 1e-8);
        Self { dims, matrix }
    }

    /// Basis state |k⟩⟨k| of a single subsystem.
    pub fn basis_state(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::OutOfRange(format!("basis index {k} ≥ dim {dim}")));
        }
        let mut m = DMatrix::zeros(dim, dim);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Ok(Self::from_trusted(vec![dim], m))
    }

    /// Ground state |0⟩⟨0|.
    pub fn ground(dim: usize) -> Self {
        Self::basis_state(dim, 0).expect("dim ≥ 1")
    }

    /// Maximally mixed state I/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        let m = DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0);
        Self::from_trusted(vec![dim], m)
    }

    /// Qubit state from a Bloch vector with |r| ≤ 1.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if norm > 1.0 + 1e-12 {
            return Err(Error::InvalidState(format!(
                "Bloch vector norm {norm} exceeds 1"
            )));
        }
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5 * (1.0 + r[2]), 0.0),
                Complex64::new(0.5 * r[0], -0.5 * r[1]),
                Complex64::new(0.5 * r[0], 0.5 * r[1]),
                Complex64::new(0.5 * (1.0 - r[2]), 0.0),
            ],
        );
        Ok(Self::from_trusted(vec![2], m))
    }

    /// Bloch vector of a qubit state.
    pub fn bloch_vector(&self) -> Result<[f64; 3]> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: self.dim(),
            });
        }
        let m = &self.matrix;
        Ok([
            2.0 * m[(0, 1)].re,
            -2.0 * m[(0, 1)].im,
            (m[(0, 0)] - m[(1, 1)]).re,
        ])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Eigenvalues of the (Hermitian) matrix, unsorted.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .collect()
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Von Neumann entropy S(ρ) = −Σ λᵢ log₂ λᵢ in bits.
    ///
    /// Eigenvalues in [-1e-10, 0] (diagonalization jitter) are clamped to
    /// zero; more negative values cannot occur for a validated state —
    /// they are rejected with an invalid-state error at construction.
    pub fn von_neumann_entropy(&self) -> f64 {
        let mut s = 0.0;
        for lambda in self.eigenvalues() {
            if lambda > 1e-15 {
                s -= lambda * lambda.log2();
            }
        }
        s.max(0.0)
    }

    /// Partial trace keeping the listed subsystems (ascending order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let parts = self.dims.len();
        if keep.is_empty() || keep.len() >= parts {
            return Err(Error::InvalidPartition {
                cut: keep.len(),
                parts,
            });
        }
        if keep.iter().any(|&k| k >= parts) || keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPartition {
                cut: *keep.iter().max().unwrap_or(&0),
                parts,
            });
        }
        let traced: Vec<usize> = (0..parts).filter(|i| !keep.contains(i)).collect();

        let keep_dims: Vec<usize> = keep.iter().map(|&i| self.dims[i]).collect();
        let keep_dim: usize = keep_dims.iter().product();
        let traced_dim: usize = traced.iter().map(|&i| self.dims[i]).product();

        // strides of each subsystem index in the full row-major index
        let mut strides = vec![1usize; parts];
        for i in (0..parts.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }

        let full_index = |kept: usize, tr: usize| -> usize {
            let mut idx = 0;
            let mut rem_k = kept;
            for (pos, &sub) in keep.iter().enumerate().rev() {
                let d = self.dims[sub];
                idx += (rem_k % d) * strides[sub];
                rem_k /= d;
                let _ = pos;
            }
            let mut rem_t = tr;
            for &sub in traced.iter().rev() {
                let d = self.dims[sub];
                idx += (rem_t % d) * strides[sub];
                rem_t /= d;
            }
            idx
        };

        let mut out = DMatrix::zeros(keep_dim, keep_dim);
        for row in 0..keep_dim {
            for col in 0..keep_dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for tr in 0..traced_dim {
                    acc += self.matrix[(full_index(row, tr), full_index(col, tr))];
                }
                out[(row, col)] = acc;
            }
        }
        Ok(Self::from_trusted(keep_dims, out))
    }

    /// Quantum mutual information I_Q = S(A) + S(B) − S(AB) in bits, where
    /// the bipartition puts subsystems [0, cut) on side A.
    pub fn mutual_information(&self, cut: usize) -> Result<f64> {
        let parts = self.dims.len();
        if cut == 0 || cut >= parts {
            return Err(Error::InvalidPartition { cut, parts });
        }
        let side_a: Vec<usize> = (0..cut).collect();
        let side_b: Vec<usize> = (cut..parts).collect();
        let sa = self.partial_trace(&side_a)?.von_neumann_entropy();
        let sb = self.partial_trace(&side_b)?.von_neumann_entropy();
        Ok(sa + sb - self.von_neumann_entropy())
    }

    /// Tensor product, concatenating subsystem lists.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::from_trusted(dims, self.matrix.kronecker(&other.matrix))
    }

    /// Reinterprets the same matrix with a different subsystem split
    /// (product of dims must be unchanged).
    pub fn with_dims(&self, dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if d != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: d,
            });
        }
        Ok(Self {
            dims,
            matrix: self.matrix.clone(),
        })
    }
}

/// A normalized state vector over a tensor product of subsystems.
#[derive(Debug, Clone)]
pub struct PureState {
    dims: Vec<usize>,
    amplitudes: DVector<Complex64>,
}

impl PureState {
    pub fn new(dims: Vec<usize>, amplitudes: DVector<Complex64>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("norm = {norm}, expected 1")));
        }
        Ok(Self { dims, amplitudes })
    }

    /// |Ψ⁺⟩ = d^{-1/2} Σᵢ |ii⟩ on two copies of a d-dimensional space.
    pub fn maximally_entangled(d: usize) -> Self {
        let mut v = DVector::zeros(d * d);
        let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        for i in 0..d {
            v[i * d + i] = amp;
        }
        Self {
            dims: vec![d, d],
            amplitudes: v,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// Rank-1 projector |ψ⟩⟨ψ| as a density matrix.
    pub fn projector(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix::from_trusted(self.dims.clone(), m)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            dims,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }
}

/// Unnormalized trace distance tr √((ρ−σ)(ρ−σ)†) = Σ |eigenvalues of ρ−σ|.
///
/// No 1/2 prefactor: the range is [0, 2] and the diameter of the two-qubit
/// separable set equals 2 under this convention.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let diff = rho.matrix() - sigma.matrix();
    let eigs = diff.symmetric_eigen().eigenvalues;
    Ok(eigs.iter().map(|l| l.abs()).sum())
}

/// Quantum relative entropy D(ρ‖σ) = tr ρ (log₂ ρ − log₂ σ) in bits.
///
/// Returns +∞ when the support of ρ is not contained in the support of σ;
/// this is a flag, not an error.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let er = rho.matrix().clone().symmetric_eigen();
    let es = sigma.matrix().clone().symmetric_eigen();
    const SUPPORT_EIG: f64 = 1e-12;
    const SUPPORT_OVERLAP: f64 = 1e-10;

    let mut value = 0.0;
    for (i, &p) in er.eigenvalues.iter().enumerate() {
        if p <= SUPPORT_EIG {
            continue;
        }
        value += p * p.log2();
        let u = er.eigenvectors.column(i);
        for (j, &q) in es.eigenvalues.iter().enumerate() {
            let overlap = u.dotc(&es.eigenvectors.column(j)).norm_sqr();
            if overlap <= SUPPORT_OVERLAP {
                continue;
            }
            if q <= SUPPORT_EIG {
                return Ok(f64::INFINITY);
            }
            value -= p * overlap * q.log2();
        }
    }
    Ok(value.max(0.0))
}

/// Applies a map given by Kraus operators after checking the completeness
/// relation Σ K†K = I to tolerance 1e-9.
pub fn apply_kraus(rho: &DensityMatrix, kraus: &[DMatrix<Complex64>]) -> Result<DensityMatrix> {
    let d = rho.dim();
    check_kraus_completeness(kraus, d)?;
    Ok(apply_kraus_unchecked(rho, kraus))
}

/// Σ K†K = I ± KRAUS_TOL.
pub fn check_kraus_completeness(kraus: &[DMatrix<Complex64>], dim: usize) -> Result<()> {
    if kraus.is_empty() {
        return Err(Error::InvalidChannel("no Kraus operators".into()));
    }
    let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
    for k in kraus {
        if k.nrows() != dim || k.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: k.nrows(),
            });
        }
        sum += k.adjoint() * k;
    }
    let defect = (&sum - DMatrix::<Complex64>::identity(dim, dim)).norm();
    if defect > KRAUS_TOL {
        return Err(Error::InvalidChannel(format!(
            "Kraus completeness violated: ‖ΣK†K − I‖ = {defect:.3e}"
        )));
    }
    Ok(())
}

pub(crate) fn apply_kraus_unchecked(
    rho: &DensityMatrix,
    kraus: &[DMatrix<Complex64>],
) -> DensityMatrix {
    let d = rho.dim();
    let mut out = DMatrix::<Complex64>::zeros(d, d);
    for k in kraus {
        out += k * rho.matrix() * k.adjoint();
    }
    DensityMatrix::from_trusted(rho.dims().to_vec(), out)
}
