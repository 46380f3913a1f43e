//! Superoperators on density matrices.

use crate::densecore::{ComplexMatrix, C64};

/// `D[L]ρ = LρL† − ½{L†L, ρ}`
pub fn dissipator(l: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    let ldl = l.dagger().matmul(l);
    let mut out = l.matmul(rho).matmul_dagger(l);
    out.axpy(C64::new(-0.5, 0.0), &ldl.anticommutator(rho));
    out
}

/// `Σ_k D[L_k]ρ`
pub fn lindbladian(ls: &[ComplexMatrix], rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(rho.rows(), rho.cols());
    for l in ls {
        out += &dissipator(l, rho);
    }
    out
}

/// `J[L]ρ = LρL†`
pub fn jump(l: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    l.matmul(rho).matmul_dagger(l)
}

/// Innovation `M[L]ρ = Lρ + ρL† − Tr[(L + L†)ρ]ρ`
pub fn innovation(l: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    let lr = l.matmul(rho);
    let mut out = &lr + &lr.dagger();
    let x = 2.0 * lr.trace().re;
    out.axpy(C64::new(-x, 0.0), rho);
    out
}

/// Normalized jump `𝓖[L]ρ = LρL† / Tr[L†Lρ]`. `None` when the weight vanishes.
pub fn normalized_jump(l: &ComplexMatrix, rho: &ComplexMatrix) -> Option<ComplexMatrix> {
    let j = jump(l, rho);
    let w = j.trace().re;
    (w > 0.0).then(|| j.scale_real(1.0 / w))
}

/// `G[L]ρ = 𝓖[L]ρ − ρ`
pub fn jump_increment(l: &ComplexMatrix, rho: &ComplexMatrix) -> Option<ComplexMatrix> {
    normalized_jump(l, rho).map(|j| &j - rho)
}

/// `⟨L + L†⟩`
pub fn quadrature(l: &ComplexMatrix, rho: &ComplexMatrix) -> f64 {
    2.0 * l.trace_product(rho).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densecore::ONE;
    use crate::states::{lowering, product_ket};

    #[test]
    fn decay_of_excited_state() {
        let rho = product_ket("e").unwrap().projector();
        let d = dissipator(&lowering(), &rho);
        assert_eq!(d, ComplexMatrix::diag(&[-ONE, ONE]));
        let j = normalized_jump(&lowering(), &rho).unwrap();
        assert_eq!(j, product_ket("g").unwrap().projector());
        assert!(normalized_jump(&lowering(), &j).is_none());
    }

    #[test]
    fn innovation_is_traceless() {
        let v = ComplexMatrix::ket(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let rho = v.projector();
        let m = innovation(&lowering(), &rho);
        assert!(m.trace().norm() < 1e-15);
        assert!(m.hermiticity_error() < 1e-15);
    }
}
