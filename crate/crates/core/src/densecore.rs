//! Dense complex matrices for small composite Hilbert spaces.
//!
//! Storage is row-major. Dimensions stay below ~64, so every routine is a
//! straightforward loop nest with no blocking or sparsity.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Off-diagonal Frobenius norm at which the Jacobi sweep stops.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
/// Hermiticity tolerance accepted by the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Layout(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Layout("ragged rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.concat() })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Column vector with the given amplitudes.
    pub fn ket(amps: &[C64]) -> Self {
        Self { rows: amps.len(), cols: 1, data: amps.to_vec() }
    }

    /// Computational basis column vector `|index⟩` in dimension `dim`.
    pub fn basis_ket(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim, 1);
        v.data[index] = ONE;
        v
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.cols.max(1)).map(<[C64]>::to_vec).collect()
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(C64::conj).collect() }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * z).collect() }
    }

    pub fn scale_real(&self, x: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * x).collect() }
    }

    /// `self += z * other`
    pub fn axpy(&mut self, z: C64, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "axpy shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += z * b;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * m];
        for i in 0..n {
            let row = &self.data[i * k..(i + 1) * k];
            let dst = &mut out[i * m..(i + 1) * m];
            for (p, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let src = &other.data[p * m..(p + 1) * m];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Self { rows: n, cols: m, data: out }
    }

    /// `self · other†` without forming the adjoint.
    pub fn matmul_dagger(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "matmul_dagger shape mismatch");
        let (n, k, m) = (self.rows, self.cols, other.rows);
        let mut out = vec![ZERO; n * m];
        for i in 0..n {
            let a = &self.data[i * k..(i + 1) * k];
            for j in 0..m {
                let b = &other.data[j * k..(j + 1) * k];
                out[i * m + j] = a.iter().zip(b).map(|(&x, &y)| x * y.conj()).sum();
            }
        }
        Self { rows: n, cols: m, data: out }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// `Tr(self · other)` in O(n²).
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!((self.rows, self.cols), (other.cols, other.rows), "trace_product shape mismatch");
        let mut acc = ZERO;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self.data[i * self.cols + j] * other.data[j * other.cols + i];
            }
        }
        acc
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
    }

    /// Largest absolute entry of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.data[r * n + c] - self.data[c * n + r].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// `(self + self†)/2`
    pub fn hermitian_part(&self) -> Self {
        let mut out = self.clone();
        let n = self.rows;
        for r in 0..n {
            for c in 0..n {
                out.data[r * n + c] = 0.5 * (self.data[r * n + c] + self.data[c * n + r].conj());
            }
        }
        out
    }

    /// `|self⟩⟨other|` for column vectors.
    pub fn outer(&self, other: &Self) -> Self {
        assert!(self.cols == 1 && other.cols == 1, "outer expects column vectors");
        self.matmul_dagger(other)
    }

    /// Projector `|self⟩⟨self|`.
    pub fn projector(&self) -> Self {
        self.outer(self)
    }

    /// `⟨self|other⟩` for column vectors.
    pub fn inner(&self, other: &Self) -> C64 {
        assert!(self.cols == 1 && other.cols == 1, "inner expects column vectors");
        assert_eq!(self.rows, other.rows, "inner dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.frobenius()
    }

    pub fn normalized(&self) -> Self {
        self.scale_real(1.0 / self.norm())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &self.matmul(other) + &other.matmul(self)
    }

    /// Checks Hermiticity (1e-12), unit trace (1e-10) and, when
    /// `check_positive` is set, minimum eigenvalue ≥ −1e-10.
    pub fn validate_density(&self, check_positive: bool) -> Result<()> {
        if !self.is_square() {
            return Err(Error::Contract(format!("density matrix is {}x{}", self.rows, self.cols)));
        }
        let herm = self.hermiticity_error();
        if herm > 1e-12 {
            return Err(Error::Contract(format!("density matrix not Hermitian (error {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::Contract(format!("density matrix trace {tr}")));
        }
        if check_positive {
            let min = herm_eigvals(self)?[0];
            if min < -1e-10 {
                return Err(Error::Contract(format!("density matrix eigenvalue {min:.3e}")));
            }
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: C64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: f64) -> ComplexMatrix {
        self.scale_real(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// Tensor-factor dimensions of a composite space, outermost factor first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimLayout {
    dims: Vec<usize>,
}

impl DimLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Layout(format!("invalid subsystem dims {dims:?}")));
        }
        Ok(Self { dims })
    }

    pub fn qubits(n: usize) -> Self {
        Self { dims: vec![2; n] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn check(&self, m: &ComplexMatrix) -> Result<()> {
        let n = self.total();
        if m.rows() != n || m.cols() != n {
            return Err(Error::Layout(format!(
                "layout {:?} (dim {n}) does not match {}x{} matrix",
                self.dims,
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }

    fn digits(&self, mut index: usize, out: &mut [usize]) {
        for k in (0..self.dims.len()).rev() {
            out[k] = index % self.dims[k];
            index /= self.dims[k];
        }
    }

    fn compose(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&d, &n)| acc * n + d)
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows, a.cols, b.rows, b.cols);
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    let oc = ac * bc;
    for i in 0..ar {
        for j in 0..ac {
            let x = a.data[i * ac + j];
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out.data[(i * br + k) * oc + j * bc + l] = x * b.data[k * bc + l];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut iter = factors.iter();
    let first = (*iter.next().expect("kron_all needs at least one factor")).clone();
    iter.fold(first, |acc, f| kron(&acc, f))
}

/// Embeds a single-factor operator at position `site` of `layout`.
pub fn embed(op: &ComplexMatrix, site: usize, layout: &DimLayout) -> Result<ComplexMatrix> {
    if site >= layout.len() || op.rows() != layout.dims[site] || !op.is_square() {
        return Err(Error::Layout(format!("cannot embed {}x{} operator at site {site} of {:?}", op.rows(), op.cols(), layout.dims)));
    }
    let left: usize = layout.dims[..site].iter().product();
    let right: usize = layout.dims[site + 1..].iter().product();
    Ok(kron(&kron(&ComplexMatrix::identity(left), op), &ComplexMatrix::identity(right)))
}

pub fn partial_trace(m: &ComplexMatrix, layout: &DimLayout, keep: &[usize]) -> Result<ComplexMatrix> {
    layout.check(m)?;
    let n_sub = layout.len();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.is_empty() || kept.iter().any(|&k| k >= n_sub) {
        return Err(Error::Layout(format!("invalid keep set {keep:?} for {n_sub} subsystems")));
    }
    let traced: Vec<usize> = (0..n_sub).filter(|k| !kept.contains(k)).collect();
    let kept_layout = DimLayout { dims: kept.iter().map(|&k| layout.dims[k]).collect() };
    let traced_layout = DimLayout { dims: traced.iter().map(|&k| layout.dims[k]).collect() };
    let dk = kept_layout.total();
    let dt: usize = traced_layout.dims.iter().product();

    let mut out = ComplexMatrix::zeros(dk, dk);
    let mut kd_r = vec![0; kept.len()];
    let mut kd_c = vec![0; kept.len()];
    let mut td = vec![0; traced.len()];
    let mut full = vec![0; n_sub];
    for r in 0..dk {
        kept_layout.digits(r, &mut kd_r);
        for c in 0..dk {
            kept_layout.digits(c, &mut kd_c);
            let mut acc = ZERO;
            for t in 0..dt {
                if !traced.is_empty() {
                    traced_layout.digits(t, &mut td);
                }
                for (slot, &k) in kept.iter().enumerate() {
                    full[k] = kd_r[slot];
                }
                for (slot, &k) in traced.iter().enumerate() {
                    full[k] = td[slot];
                }
                let fr = layout.compose(&full);
                for (slot, &k) in kept.iter().enumerate() {
                    full[k] = kd_c[slot];
                }
                let fc = layout.compose(&full);
                acc += m[(fr, fc)];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

pub fn partial_transpose(m: &ComplexMatrix, layout: &DimLayout, flip: usize) -> Result<ComplexMatrix> {
    layout.check(m)?;
    if flip >= layout.len() {
        return Err(Error::Layout(format!("flip index {flip} out of range for {} subsystems", layout.len())));
    }
    let n = layout.total();
    let mut out = ComplexMatrix::zeros(n, n);
    let mut dr = vec![0; layout.len()];
    let mut dc = vec![0; layout.len()];
    for r in 0..n {
        layout.digits(r, &mut dr);
        for c in 0..n {
            layout.digits(c, &mut dc);
            std::mem::swap(&mut dr[flip], &mut dc[flip]);
            let (sr, sc) = (layout.compose(&dr), layout.compose(&dc));
            std::mem::swap(&mut dr[flip], &mut dc[flip]);
            out[(r, c)] = m[(sr, sc)];
        }
    }
    Ok(out)
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermEigen {
    pub fn vector(&self, k: usize) -> ComplexMatrix {
        let n = self.vectors.rows();
        ComplexMatrix::ket(&(0..n).map(|r| self.vectors[(r, k)]).collect::<Vec<_>>())
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a.data[r * n + c].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
pub fn herm_eigh(m: &ComplexMatrix) -> Result<HermEigen> {
    if !m.is_square() {
        return Err(Error::Contract(format!("eigensolve of {}x{} matrix", m.rows, m.cols)));
    }
    let herm = m.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(Error::Contract(format!("eigensolve of non-Hermitian matrix (error {herm:.3e})")));
    }
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let mut sweeps = 0;
    while off_diagonal_norm(&a) >= JACOBI_TOL {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Contract(format!("Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps")));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.data[p * n + q];
                let mag = apq.norm();
                if mag < 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let app = a.data[p * n + p].re;
                let aqq = a.data[q * n + q].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = diag(1, conj(phase)) · [[c, s], [-s, c]]
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;
                for k in 0..n {
                    let akp = a.data[k * n + p];
                    let akq = a.data[k * n + q];
                    a.data[k * n + p] = akp * g_pp + akq * g_qp;
                    a.data[k * n + q] = akp * g_pq + akq * g_qq;
                    let vkp = v.data[k * n + p];
                    let vkq = v.data[k * n + q];
                    v.data[k * n + p] = vkp * g_pp + vkq * g_qp;
                    v.data[k * n + q] = vkp * g_pq + vkq * g_qq;
                }
                for k in 0..n {
                    let apk = a.data[p * n + k];
                    let aqk = a.data[q * n + k];
                    a.data[p * n + k] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a.data[q * n + k] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a.data[p * n + q] = ZERO;
                a.data[q * n + p] = ZERO;
                a.data[p * n + p].im = 0.0;
                a.data[q * n + q].im = 0.0;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.data[i * n + i].re.total_cmp(&a.data[j * n + j].re));
    let values = order.iter().map(|&i| a.data[i * n + i].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors.data[r * n + new_col] = v.data[r * n + old_col];
        }
    }
    Ok(HermEigen { values, vectors })
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn herm_eigvals(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(herm_eigh(m)?.values)
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eigvals(m)?.iter().map(|x| x.abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    fn raise() -> ComplexMatrix {
        // |e⟩⟨g| with |e⟩ = index 0
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap()
    }

    fn phi_plus() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::ket(&[c(h, 0.0), ZERO, ZERO, c(h, 0.0)])
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
            .prop_map(move |v| ComplexMatrix::from_vec(n, n, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
    }

    fn arb_hermitian(n: usize) -> impl Strategy<Value = ComplexMatrix> {
        arb_matrix(n).prop_map(|m| m.hermitian_part())
    }

    /// Unitary from a product of Householder reflections built from `vs`.
    fn householder_unitary(vs: &[ComplexMatrix]) -> ComplexMatrix {
        let n = vs[0].rows();
        let mut u = ComplexMatrix::identity(n);
        for v in vs {
            let nv = v.normalized();
            let h = &ComplexMatrix::identity(n) - &nv.projector().scale_real(2.0);
            u = u.matmul(&h);
        }
        u
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let zi = kron(&sigma_z(), &i2);
        assert_eq!(zi[(0, 0)], ONE);
        assert_eq!(zi[(3, 3)], -ONE);
    }

    #[test]
    fn kron_raising_pair_maps_gg_to_ee() {
        let op = kron(&raise(), &raise());
        let gg = ComplexMatrix::basis_ket(4, 3);
        let out = op.matmul(&gg);
        // frozen by direct 4x4 multiplication: only entry 0 survives
        assert_eq!(out, ComplexMatrix::basis_ket(4, 0));
    }

    #[test]
    fn partial_trace_product_and_bell() {
        let layout = DimLayout::qubits(2);
        let a = ComplexMatrix::from_real(2, 2, &[0.7, 0.1, 0.1, 0.3]).unwrap();
        let b = ComplexMatrix::from_real(2, 2, &[0.4, 0.0, 0.0, 0.6]).unwrap();
        let ab = kron(&a, &b);
        assert!(partial_trace(&ab, &layout, &[0]).unwrap().max_abs_diff(&a) < 1e-15);
        assert!(partial_trace(&ab, &layout, &[1]).unwrap().max_abs_diff(&b) < 1e-15);
        let bell = phi_plus().projector();
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(partial_trace(&bell, &layout, &[1]).unwrap().max_abs_diff(&half) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_layout() {
        let m = ComplexMatrix::identity(4);
        assert!(matches!(partial_trace(&m, &DimLayout::qubits(3), &[0]), Err(Error::Layout(_))));
        assert!(matches!(partial_trace(&m, &DimLayout::qubits(2), &[]), Err(Error::Layout(_))));
        assert!(matches!(partial_transpose(&m, &DimLayout::qubits(2), 2), Err(Error::Layout(_))));
    }

    #[test]
    fn partial_transpose_of_bell() {
        let layout = DimLayout::qubits(2);
        let pt = partial_transpose(&phi_plus().projector(), &layout, 1).unwrap();
        let ev = herm_eigvals(&pt).unwrap();
        let expected = [-0.5, 0.5, 0.5, 0.5];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
        assert!((trace_norm(&pt).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_product() {
        let layout = DimLayout::qubits(2);
        let a = ComplexMatrix::from_rows(&[vec![c(0.6, 0.0), c(0.1, 0.2)], vec![c(0.1, -0.2), c(0.4, 0.0)]]).unwrap();
        let b = ComplexMatrix::from_rows(&[vec![c(0.3, 0.0), c(0.0, 0.1)], vec![c(0.0, -0.1), c(0.7, 0.0)]]).unwrap();
        let pt = partial_transpose(&kron(&a, &b), &layout, 1).unwrap();
        assert!(pt.max_abs_diff(&kron(&a, &b.transpose())) < 1e-15);
    }

    #[test]
    fn eigvals_trivial() {
        assert_eq!(herm_eigvals(&ComplexMatrix::identity(4)).unwrap(), vec![1.0; 4]);
        let d = ComplexMatrix::from_real(2, 2, &[0.7, 0.0, 0.0, 0.3]).unwrap();
        let ev = herm_eigvals(&d).unwrap();
        assert!((ev[0] - 0.3).abs() < 1e-15 && (ev[1] - 0.7).abs() < 1e-15);
        assert_eq!(trace_norm(&ComplexMatrix::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn eigvals_reject_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(herm_eigvals(&m), Err(Error::Contract(_))));
    }

    #[test]
    fn eigenvectors_diagonalize() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(0.5, 0.5), c(0.0, -0.3)],
            vec![c(0.5, -0.5), c(-1.0, 0.0), c(0.2, 0.0)],
            vec![c(0.0, 0.3), c(0.2, 0.0), c(0.5, 0.0)],
        ])
        .unwrap();
        let eig = herm_eigh(&m).unwrap();
        for k in 0..3 {
            let v = eig.vector(k);
            let mv = m.matmul(&v);
            assert!(mv.max_abs_diff(&v.scale_real(eig.values[k])) < 1e-11);
        }
        let gram = eig.vectors.dagger().matmul(&eig.vectors);
        assert!(gram.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn density_validation() {
        let rho = phi_plus().projector();
        rho.validate_density(true).unwrap();
        let bad = rho.scale_real(2.0);
        assert!(bad.validate_density(false).is_err());
        let neg = ComplexMatrix::from_real(2, 2, &[1.1, 0.0, 0.0, -0.1]).unwrap();
        assert!(neg.validate_density(false).is_ok());
        assert!(neg.validate_density(true).is_err());
    }

    proptest! {
        #[test]
        fn kron_is_associative(a in arb_matrix(2), b in arb_matrix(2), c in arb_matrix(3)) {
            let left = kron(&kron(&a, &b), &c);
            let right = kron(&a, &kron(&b, &c));
            prop_assert!(left.max_abs_diff(&right) < 1e-12);
        }

        #[test]
        fn partial_trace_of_kron(a in arb_matrix(2), b in arb_matrix(3)) {
            let layout = DimLayout::new(vec![2, 3]).unwrap();
            let reduced = partial_trace(&kron(&a, &b), &layout, &[0]).unwrap();
            prop_assert!(reduced.max_abs_diff(&a.scale(b.trace())) < 1e-12);
        }

        #[test]
        fn partial_trace_preserves_trace(h in arb_hermitian(8), keep in 0usize..3) {
            let layout = DimLayout::qubits(3);
            let reduced = partial_trace(&h, &layout, &[keep]).unwrap();
            prop_assert!((reduced.trace() - h.trace()).norm() < 1e-12);
        }

        #[test]
        fn partial_trace_matches_index_contraction(m in arb_matrix(4)) {
            // brute force: (ρ_A)_{ij} = Σ_k ρ_{(i,k),(j,k)}
            let layout = DimLayout::qubits(2);
            let reduced = partial_trace(&m, &layout, &[0]).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let expect = m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)];
                    prop_assert!((reduced[(i, j)] - expect).norm() < 1e-14);
                }
            }
        }

        #[test]
        fn partial_transpose_is_involution(h in arb_hermitian(4), flip in 0usize..2) {
            let layout = DimLayout::qubits(2);
            let once = partial_transpose(&h, &layout, flip).unwrap();
            prop_assert!(once.is_hermitian(1e-14));
            let twice = partial_transpose(&once, &layout, flip).unwrap();
            prop_assert_eq!(twice, h);
        }

        #[test]
        fn eigvals_recover_spectrum(
            diag in prop::collection::vec(-2.0f64..2.0, 4),
            vs in prop::collection::vec(prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4), 3),
        ) {
            let vs: Vec<ComplexMatrix> = vs
                .into_iter()
                .map(|v| ComplexMatrix::ket(&v.into_iter().map(|(a, b)| c(a + 1e-3, b)).collect::<Vec<_>>()))
                .collect();
            let u = householder_unitary(&vs);
            let d = ComplexMatrix::diag(&diag.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
            let m = u.matmul(&d).matmul(&u.dagger()).hermitian_part();
            let ev = herm_eigvals(&m).unwrap();
            let mut sorted = diag.clone();
            sorted.sort_by(f64::total_cmp);
            for (a, b) in ev.iter().zip(&sorted) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            prop_assert!((ev.iter().sum::<f64>() - m.trace().re).abs() < 1e-9);
        }

        #[test]
        fn trace_norm_subadditive(a in arb_hermitian(4), b in arb_hermitian(4)) {
            let sum = &a + &b;
            prop_assert!(trace_norm(&sum).unwrap() <= trace_norm(&a).unwrap() + trace_norm(&b).unwrap() + 1e-10);
        }
    }
}
