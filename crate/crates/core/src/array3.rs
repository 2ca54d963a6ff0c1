//! Dense third-order arrays and the three contraction products used by the
//! drift and deviation formulas.
//!
//! An array `v` of shape (p, q, s) is sliced two ways and the two
//! conventions are NOT interchangeable in general:
//! - `section(l)`: the p×q matrix (v_{jkl})_{j,k}, slicing the third index.
//!   The commutator sections Theta_l live here.
//! - `first_slice(l)`: the q×s matrix (v_{ljk})_{j,k}, slicing the first
//!   index. The drift assembly contracts these.
//!
//! For totally antisymmetric arrays (the single-qubit Levi-Civita case) the
//! two coincide up to sign, which hides convention bugs; multiqubit runs do
//! not, so both accessors are exposed and tested separately.
//!
//! Products, for an array with sections V_1..V_s:
//! - dot:  `v.dot(x) = sum_l x_l V_l` (x has length s);
//! - diam: `v.diam(u) = [V_1 u ... V_s u]` (column l is V_l u);
//! - star: `v.star(u) = (<u, V_l>)_l`, Frobenius pairing each section.
//!
//! They satisfy `(v.dot(u)) w = (v.diam(w)) u` for numeric vectors and the
//! duality `<u, v.dot(w)> = v.star(u)^T w`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::CoreError;
use crate::tol;
use crate::Result;

/// Dense real third-order array with explicit (j, k, l) indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct RealArray3 {
    p: usize,
    q: usize,
    s: usize,
    data: Vec<f64>,
}

impl RealArray3 {
    /// Zero array of shape (p, q, s). All dims must be positive.
    pub fn zeros(p: usize, q: usize, s: usize) -> Self {
        assert!(p > 0 && q > 0 && s > 0, "array dims must be positive");
        Self { p, q, s, data: vec![0.0; p * q * s] }
    }

    /// Builds the array from its sections (each p×q, slicing the third index).
    pub fn from_sections(sections: &[DMatrix<f64>]) -> Result<Self> {
        let s = sections.len();
        if s == 0 {
            return Err(CoreError::InvalidArgument("no sections supplied".into()));
        }
        let (p, q) = (sections[0].nrows(), sections[0].ncols());
        let mut arr = Self::zeros(p, q, s);
        for (l, sec) in sections.iter().enumerate() {
            if sec.nrows() != p || sec.ncols() != q {
                return Err(CoreError::DimensionMismatch(format!(
                    "section {l} has shape {}x{}, expected {p}x{q}",
                    sec.nrows(),
                    sec.ncols()
                )));
            }
            for k in 0..q {
                for j in 0..p {
                    arr.set(j, k, l, sec[(j, k)]);
                }
            }
        }
        Ok(arr)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.p, self.q, self.s)
    }

    #[inline]
    fn idx(&self, j: usize, k: usize, l: usize) -> usize {
        debug_assert!(j < self.p && k < self.q && l < self.s);
        j + self.p * (k + self.q * l)
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.idx(j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, l: usize, value: f64) {
        let i = self.idx(j, k, l);
        self.data[i] = value;
    }

    /// Section along the third index: the p×q matrix (v_{jkl})_{j,k}.
    pub fn section(&self, l: usize) -> DMatrix<f64> {
        let base = self.p * self.q * l;
        DMatrix::from_column_slice(self.p, self.q, &self.data[base..base + self.p * self.q])
    }

    /// Slice along the first index: the q×s matrix (v_{ljk})_{j,k}.
    pub fn first_slice(&self, l: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.q, self.s, |j, k| self.get(l, j, k))
    }

    /// Weighted sum of sections, `sum_l x_l V_l`. `x` has length s.
    pub fn dot(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if x.len() != self.s {
            return Err(CoreError::DimensionMismatch(format!(
                "dot: weight vector has length {}, array has {} sections",
                x.len(),
                self.s
            )));
        }
        let mut out = DMatrix::zeros(self.p, self.q);
        for l in 0..self.s {
            let w = x[l];
            if w == 0.0 {
                continue;
            }
            let base = self.p * self.q * l;
            for (o, v) in out.iter_mut().zip(&self.data[base..base + self.p * self.q]) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    /// Stacks the section images of `u` as columns: `[V_1 u ... V_s u]`.
    /// `u` has length q; the result is p×s.
    pub fn diam(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        if u.len() != self.q {
            return Err(CoreError::DimensionMismatch(format!(
                "diam: vector has length {}, sections have {} columns",
                u.len(),
                self.q
            )));
        }
        let mut out = DMatrix::zeros(self.p, self.s);
        for l in 0..self.s {
            for k in 0..self.q {
                let w = u[k];
                if w == 0.0 {
                    continue;
                }
                for j in 0..self.p {
                    out[(j, l)] += self.get(j, k, l) * w;
                }
            }
        }
        Ok(out)
    }

    /// Frobenius pairing of `u` with each section: `(<u, V_l>)_l`.
    pub fn star(&self, u: &DMatrix<f64>) -> Result<DVector<f64>> {
        if u.nrows() != self.p || u.ncols() != self.q {
            return Err(CoreError::DimensionMismatch(format!(
                "star: matrix is {}x{}, sections are {}x{}",
                u.nrows(),
                u.ncols(),
                self.p,
                self.q
            )));
        }
        let mut out = DVector::zeros(self.s);
        for l in 0..self.s {
            let base = self.p * self.q * l;
            out[l] = u
                .iter()
                .zip(&self.data[base..base + self.p * self.q])
                .map(|(a, b)| a * b)
                .sum();
        }
        Ok(out)
    }

    /// Block-row contraction `[V_1 ... V_s] col(Y) = sum_l V_l (Y e_l)`,
    /// with `col` the column-major vectorization. `Y` must be q×s.
    pub fn block_row_vec(&self, y: &DMatrix<f64>) -> Result<DVector<f64>> {
        if y.nrows() != self.q || y.ncols() != self.s {
            return Err(CoreError::DimensionMismatch(format!(
                "block_row_vec: matrix is {}x{}, expected {}x{}",
                y.nrows(),
                y.ncols(),
                self.q,
                self.s
            )));
        }
        let mut out = DVector::zeros(self.p);
        for l in 0..self.s {
            for k in 0..self.q {
                let w = y[(k, l)];
                if w == 0.0 {
                    continue;
                }
                for j in 0..self.p {
                    out[j] += self.get(j, k, l) * w;
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Dense complex third-order array; houses the product structure constants,
/// whose sections are Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexArray3 {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexArray3 {
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "array dim must be positive");
        Self { n, data: vec![Complex64::new(0.0, 0.0); n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, j: usize, k: usize, l: usize) -> usize {
        debug_assert!(j < self.n && k < self.n && l < self.n);
        j + self.n * (k + self.n * l)
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize, l: usize) -> Complex64 {
        self.data[self.idx(j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, l: usize, value: Complex64) {
        let i = self.idx(j, k, l);
        self.data[i] = value;
    }

    /// Section along the third index: the n×n matrix (v_{jkl})_{j,k}.
    pub fn section(&self, l: usize) -> DMatrix<Complex64> {
        let base = self.n * self.n * l;
        DMatrix::from_column_slice(self.n, self.n, &self.data[base..base + self.n * self.n])
    }

    /// Weighted sum of sections with real weights, `sum_l x_l V_l`.
    pub fn dot_real(&self, x: &DVector<f64>) -> Result<DMatrix<Complex64>> {
        if x.len() != self.n {
            return Err(CoreError::DimensionMismatch(format!(
                "dot_real: weight vector has length {}, array has {} sections",
                x.len(),
                self.n
            )));
        }
        let mut out = DMatrix::zeros(self.n, self.n);
        for l in 0..self.n {
            let w = x[l];
            if w == 0.0 {
                continue;
            }
            let base = self.n * self.n * l;
            for (o, v) in out.iter_mut().zip(&self.data[base..base + self.n * self.n]) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    /// Imaginary part as a real array (the commutator sections).
    pub fn imag(&self) -> RealArray3 {
        let mut out = RealArray3::zeros(self.n, self.n, self.n);
        for l in 0..self.n {
            for k in 0..self.n {
                for j in 0..self.n {
                    out.set(j, k, l, self.get(j, k, l).im);
                }
            }
        }
        out
    }

    /// Real part as a real array (the anticommutator sections).
    pub fn real(&self) -> RealArray3 {
        let mut out = RealArray3::zeros(self.n, self.n, self.n);
        for l in 0..self.n {
            for k in 0..self.n {
                for j in 0..self.n {
                    out.set(j, k, l, self.get(j, k, l).re);
                }
            }
        }
        out
    }

    /// Largest deviation of any section from Hermitian symmetry.
    pub fn max_hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for l in 0..self.n {
            for k in 0..self.n {
                for j in 0..self.n {
                    let defect = (self.get(j, k, l) - self.get(k, j, l).conj()).norm();
                    worst = worst.max(defect);
                }
            }
        }
        worst
    }

    /// Validates that every section is Hermitian within the structural
    /// tolerance.
    pub fn validate_hermitian_sections(&self) -> Result<()> {
        let defect = self.max_hermiticity_defect();
        if defect > tol::STRUCTURAL {
            return Err(CoreError::InvalidArgument(format!(
                "array sections are not Hermitian: defect {defect:.3e}"
            )));
        }
        Ok(())
    }
}

/// Levi-Civita array Theta with theta_{jkl} = eps_{jkl}; the single-qubit
/// commutator structure. Mostly a test fixture.
pub fn levi_civita() -> RealArray3 {
    let mut arr = RealArray3::zeros(3, 3, 3);
    let perms: [(usize, usize, usize, f64); 6] = [
        (0, 1, 2, 1.0),
        (1, 2, 0, 1.0),
        (2, 0, 1, 1.0),
        (1, 0, 2, -1.0),
        (0, 2, 1, -1.0),
        (2, 1, 0, -1.0),
    ];
    for (j, k, l, v) in perms {
        arr.set(j, k, l, v);
    }
    arr
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn dot_with_identity_and_zero_sections() {
        let arr = RealArray3::from_sections(&[
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
        ])
        .unwrap();
        let x = DVector::from_vec(vec![1.0, 5.0]);
        let out = arr.dot(&x).unwrap();
        assert_eq!(out, DMatrix::identity(2, 2));

        let zero = arr.dot(&DVector::zeros(2)).unwrap();
        assert_eq!(zero, DMatrix::zeros(2, 2));
    }

    #[test]
    fn dot_levi_civita_selects_third_section() {
        let theta = levi_civita();
        let x = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let out = theta.dot(&x).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(out, expected);
    }

    #[test]
    fn diam_levi_civita_basis_vector() {
        let theta = levi_civita();
        let u = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        // Columns are Theta_l e_3: (0,1,0), (-1,0,0), (0,0,0).
        let out = theta.diam(&u).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(out, expected);

        let zero = theta.diam(&DVector::zeros(3)).unwrap();
        assert_eq!(zero, DMatrix::zeros(3, 3));
    }

    #[test]
    fn star_traces_sections() {
        let sx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let arr = RealArray3::from_sections(&[DMatrix::identity(2, 2), sx]).unwrap();
        let u = DMatrix::identity(2, 2);
        let out = arr.star(&u).unwrap();
        assert_abs_diff_eq!(out[0], 2.0);
        assert_abs_diff_eq!(out[1], 0.0);

        let zero = arr.star(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(zero, DVector::zeros(2));
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let theta = levi_civita();
        assert!(theta.dot(&DVector::zeros(2)).is_err());
        assert!(theta.diam(&DVector::zeros(4)).is_err());
        assert!(theta.star(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn first_slice_differs_from_section_in_general() {
        let mut arr = RealArray3::zeros(2, 2, 2);
        arr.set(0, 1, 0, 3.0); // v_{010}
        arr.set(1, 0, 1, 7.0); // v_{101}
        // section(0)[(0,1)] = v_{010} = 3; first_slice(0)[(1,0)] picks v_{010}
        // through the (l=0, j=1, k=0) reading, i.e. v_{010} sits elsewhere.
        assert_eq!(arr.section(0)[(0, 1)], 3.0);
        assert_eq!(arr.first_slice(0)[(1, 0)], 3.0);
        assert_eq!(arr.section(1)[(1, 0)], 7.0);
        assert_eq!(arr.first_slice(1)[(0, 1)], 7.0);
        assert_ne!(arr.section(0), arr.first_slice(0));
    }

    fn arb_array3(n: usize) -> impl Strategy<Value = RealArray3> {
        prop::collection::vec(-1.0f64..1.0, n * n * n).prop_map(move |data| {
            let mut arr = RealArray3::zeros(n, n, n);
            let mut it = data.into_iter();
            for l in 0..n {
                for k in 0..n {
                    for j in 0..n {
                        arr.set(j, k, l, it.next().unwrap());
                    }
                }
            }
            arr
        })
    }

    fn arb_vec(n: usize) -> impl Strategy<Value = DVector<f64>> {
        prop::collection::vec(-1.0f64..1.0, n).prop_map(DVector::from_vec)
    }

    proptest! {
        // (Theta . u) v = (Theta <> v) u = [Theta_1 .. Theta_n](u (x) v)
        #[test]
        fn dot_diam_identity(arr in arb_array3(4), u in arb_vec(4), v in arb_vec(4)) {
            let lhs = arr.dot(&u).unwrap() * &v;
            let rhs = arr.diam(&v).unwrap() * &u;
            // u (x) v is the column-major vectorization of v u^T.
            let kron = arr.block_row_vec(&(&v * u.transpose())).unwrap();
            for j in 0..4 {
                prop_assert!((lhs[j] - rhs[j]).abs() <= tol::STRUCTURAL);
                prop_assert!((lhs[j] - kron[j]).abs() <= tol::STRUCTURAL);
            }
        }

        // <u, arr . w> = (u * arr)^T w
        #[test]
        fn star_dot_duality(arr in arb_array3(3), w in arb_vec(3),
                            udata in prop::collection::vec(-1.0f64..1.0, 9)) {
            let u = DMatrix::from_column_slice(3, 3, &udata);
            let lhs = (u.transpose() * arr.dot(&w).unwrap()).trace();
            let rhs = arr.star(&u).unwrap().dot(&w);
            prop_assert!((lhs - rhs).abs() <= tol::STRUCTURAL);
        }
    }
}
