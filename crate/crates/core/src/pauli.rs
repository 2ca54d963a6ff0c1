//! Hermitian matrix bases built from Pauli strings.
//!
//! A register of q qubits carries the 4^q - 1 non-identity tensor products
//! of {I, sigma_1, sigma_2, sigma_3}, ordered lexicographically by label so
//! that variable indices are stable across runs. Each basis element is
//! traceless, Hermitian, and Hilbert-Schmidt orthogonal with
//! Tr(X_j X_k) = d delta_{jk}, d = 2^q.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::CoreError;
use crate::tol;
use crate::Result;

/// Default cap on the register size; 4^q - 1 variables grow fast.
pub const MAX_QUBITS: usize = 3;

/// A concrete Hermitian matrix representation of the initial system
/// variables.
#[derive(Debug, Clone)]
pub struct MatrixBasis {
    /// Hilbert-space dimension d.
    pub dim: usize,
    /// The n = 4^q - 1 basis matrices, each d×d Hermitian.
    pub matrices: Vec<DMatrix<Complex64>>,
    /// Pauli-string labels, e.g. "XY" for sigma_1 (x) sigma_2.
    pub labels: Vec<String>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The 2×2 single-qubit letters in label order I, X, Y, Z.
fn pauli_letters() -> [DMatrix<Complex64>; 4] {
    [
        DMatrix::identity(2, 2),
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
        DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
    ]
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// All non-identity q-fold Pauli strings, ordered lexicographically by
/// label (alphabet I < X < Y < Z). For q = 1 this is sigma_1, sigma_2,
/// sigma_3.
pub fn pauli_basis(qubits: usize) -> Result<MatrixBasis> {
    pauli_basis_capped(qubits, MAX_QUBITS)
}

/// As [`pauli_basis`] with an explicit register-size cap.
pub fn pauli_basis_capped(qubits: usize, cap: usize) -> Result<MatrixBasis> {
    if qubits < 1 {
        return Err(CoreError::InvalidArgument("qubit count must be at least 1".into()));
    }
    if qubits > cap {
        return Err(CoreError::Capacity(format!(
            "{qubits} qubits exceed the cap of {cap} (4^q - 1 variables)"
        )));
    }
    let letters = pauli_letters();
    let names = ['I', 'X', 'Y', 'Z'];
    let dim = 1usize << qubits;
    let count = 4usize.pow(qubits as u32);

    let mut matrices = Vec::with_capacity(count - 1);
    let mut labels = Vec::with_capacity(count - 1);
    // Enumerating base-4 words in increasing numeric order coincides with
    // lexicographic label order because the alphabet is sorted.
    for word in 1..count {
        let mut digits = Vec::with_capacity(qubits);
        let mut w = word;
        for _ in 0..qubits {
            digits.push(w % 4);
            w /= 4;
        }
        digits.reverse();
        let mut label = String::with_capacity(qubits);
        let mut matrix = DMatrix::identity(1, 1);
        for &digit in &digits {
            label.push(names[digit]);
            matrix = kron(&matrix, &letters[digit]);
        }
        debug_assert_eq!(matrix.nrows(), dim);
        matrices.push(matrix);
        labels.push(label);
    }
    let basis = MatrixBasis { dim, matrices, labels };
    basis.validate()?;
    Ok(basis)
}

impl MatrixBasis {
    /// Number of basis elements n.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Checks Hermiticity, tracelessness and Hilbert-Schmidt orthogonality
    /// Tr(X_j X_k) = d delta_{jk}.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim as f64;
        for (j, x) in self.matrices.iter().enumerate() {
            if x.nrows() != self.dim || x.ncols() != self.dim {
                return Err(CoreError::DimensionMismatch(format!(
                    "basis element {j} is not {0}x{0}",
                    self.dim
                )));
            }
            let herm_defect = (x - x.adjoint()).camax();
            if herm_defect > tol::STRUCTURAL {
                return Err(CoreError::InvalidArgument(format!(
                    "basis element {j} not Hermitian: defect {herm_defect:.3e}"
                )));
            }
            if x.trace().norm() > tol::STRUCTURAL {
                return Err(CoreError::InvalidArgument(format!("basis element {j} not traceless")));
            }
        }
        for j in 0..self.len() {
            for k in j..self.len() {
                let product = &self.matrices[j] * &self.matrices[k];
                let expected = if j == k { d } else { 0.0 };
                if (product.trace() - c(expected, 0.0)).norm() > tol::STRUCTURAL * d {
                    return Err(CoreError::InvalidArgument(format!(
                        "basis elements {j}, {k} violate Hilbert-Schmidt orthogonality"
                    )));
                }
            }
        }
        Ok(())
    }
}
