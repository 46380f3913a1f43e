//! State functionals.

use serde::Serialize;

use crate::densecore::{embed, partial_transpose, trace_norm, ComplexMatrix, DimLayout, C64};
use crate::error::{Error, Result};
use crate::states::sigma_z;

const CLIP_TOL: f64 = 1e-12;

/// Metric column names, in output order.
pub const METRIC_LABELS: [&str; 8] = ["F_w1", "F_w2", "F_w3", "F_w4", "LN", "purity", "sz1", "sz2"];

fn clip_unit(x: f64) -> f64 {
    if x < 0.0 && x > -CLIP_TOL {
        0.0
    } else if x > 1.0 && x < 1.0 + CLIP_TOL {
        1.0
    } else {
        x
    }
}

/// `⟨ψ|ρ|ψ⟩` for a normalized pure target.
pub fn fidelity(rho: &ComplexMatrix, psi: &ComplexMatrix) -> Result<f64> {
    if psi.cols() != 1 || psi.rows() != rho.rows() || !rho.is_square() {
        return Err(Error::Layout(format!(
            "fidelity of {}x{} state against {}x{} vector",
            rho.rows(),
            rho.cols(),
            psi.rows(),
            psi.cols()
        )));
    }
    let v = psi.inner(&rho.matmul(psi)).re;
    Ok(clip_unit(v))
}

/// `log₂ ‖ρ^{T_cut}‖₁`, clipped below at zero.
pub fn log_negativity(rho: &ComplexMatrix, layout: &DimLayout, cut: usize) -> Result<f64> {
    let pt = partial_transpose(rho, layout, cut)?;
    let n = trace_norm(&pt)?.log2();
    Ok(if n < CLIP_TOL { 0.0 } else { n })
}

/// Largest single-site log negativity over every site of the layout.
pub fn max_site_log_negativity(rho: &ComplexMatrix, layout: &DimLayout) -> Result<f64> {
    let mut best: f64 = 0.0;
    let sites = if layout.len() == 2 { 1 } else { layout.len() };
    for k in 0..sites {
        best = best.max(log_negativity(rho, layout, k)?);
    }
    Ok(best)
}

/// `½‖ρ − σ‖₁`
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if rho.rows() != sigma.rows() || rho.cols() != sigma.cols() {
        return Err(Error::Layout("trace distance of mismatched matrices".into()));
    }
    Ok(0.5 * trace_norm(&(rho - sigma).hermitian_part())?)
}

pub fn purity(rho: &ComplexMatrix) -> f64 {
    rho.trace_product(rho).re
}

/// `Tr[op ρ]`
pub fn expectation(op: &ComplexMatrix, rho: &ComplexMatrix) -> Result<C64> {
    if op.rows() != rho.rows() || op.cols() != rho.cols() {
        return Err(Error::Layout(format!(
            "expectation of {}x{} operator on {}x{} state",
            op.rows(),
            op.cols(),
            rho.rows(),
            rho.cols()
        )));
    }
    Ok(op.trace_product(rho))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSnapshot {
    pub fidelities: Vec<(String, f64)>,
    pub log_negativity: f64,
    pub purity: f64,
    pub expectations: Vec<(String, C64)>,
}

impl MetricSnapshot {
    /// Values in `METRIC_LABELS` order; absent entries are NaN.
    pub fn row(&self) -> [f64; 8] {
        let mut out = [f64::NAN; 8];
        for (i, label) in METRIC_LABELS.iter().enumerate() {
            out[i] = self.get(label).unwrap_or(f64::NAN);
        }
        out
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        match label {
            "LN" => Some(self.log_negativity),
            "purity" => Some(self.purity),
            _ => self
                .fidelities
                .iter()
                .find(|(l, _)| l == label)
                .map(|(_, v)| *v)
                .or_else(|| self.expectations.iter().find(|(l, _)| l == label).map(|(_, v)| v.re)),
        }
    }
}

/// Fixed targets and observables used to take snapshots of one system.
#[derive(Debug, Clone)]
pub struct MetricContext {
    layout: DimLayout,
    targets: Vec<(String, ComplexMatrix)>,
    observables: Vec<(String, ComplexMatrix)>,
}

impl MetricContext {
    /// `targets` are pure fidelity targets; `sz1`, `sz2` are added for qubit registers.
    pub fn new(layout: DimLayout, targets: Vec<(String, ComplexMatrix)>) -> Result<Self> {
        let mut observables = Vec::new();
        if layout.dims().iter().all(|&d| d == 2) {
            for k in 0..layout.len().min(2) {
                observables.push((format!("sz{}", k + 1), embed(&sigma_z(), k, &layout)?));
            }
        }
        for (l, t) in &targets {
            if t.rows() != layout.total() || t.cols() != 1 {
                return Err(Error::Layout(format!("fidelity target {l} has wrong shape")));
            }
        }
        Ok(Self { layout, targets, observables })
    }

    pub fn layout(&self) -> &DimLayout {
        &self.layout
    }

    pub fn snapshot(&self, rho: &ComplexMatrix) -> Result<MetricSnapshot> {
        let fidelities = self
            .targets
            .iter()
            .map(|(l, t)| Ok((l.clone(), fidelity(rho, t)?)))
            .collect::<Result<Vec<_>>>()?;
        let log_negativity = if self.layout.len() >= 2 { max_site_log_negativity(rho, &self.layout)? } else { 0.0 };
        let expectations = self
            .observables
            .iter()
            .map(|(l, o)| Ok((l.clone(), expectation(o, rho)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricSnapshot { fidelities, log_negativity, purity: purity(rho), expectations })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bathkit::{Sign, TwoQubitBath};
    use crate::densecore::kron;
    use crate::states::{bloch_ket, phi_minus, phi_plus, product_ket, psi_minus, psi_plus};
    use proptest::prelude::*;

    fn two() -> DimLayout {
        DimLayout::qubits(2)
    }

    #[test]
    fn fidelity_examples() {
        assert!((fidelity(&phi_plus().projector(), &phi_plus()).unwrap() - 1.0).abs() < 1e-15);
        let mixed = ComplexMatrix::identity(4).scale_real(0.25);
        assert!((fidelity(&mixed, &psi_minus()).unwrap() - 0.25).abs() < 1e-15);
        assert!(fidelity(&mixed, &product_ket("e").unwrap()).is_err());

        let p = |s, e| TwoQubitBath::near_bell(s, e).unwrap().phi_vector();
        assert!(fidelity(&p(Sign::Plus, 0.0).projector(), &p(Sign::Minus, 0.0)).unwrap() < 1e-15);
        // (1 − 1.1)/2.1 overlap
        let f = fidelity(&p(Sign::Plus, 0.1).projector(), &p(Sign::Minus, 0.1)).unwrap();
        assert!((f - (0.1f64 / 2.1).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn log_negativity_examples() {
        assert!((log_negativity(&phi_plus().projector(), &two(), 1).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(log_negativity(&product_ket("eg").unwrap().projector(), &two(), 1).unwrap(), 0.0);
        let v = TwoQubitBath::near_bell(Sign::Minus, 0.1).unwrap().phi_vector();
        let ln = log_negativity(&v.projector(), &two(), 1).unwrap();
        let expected = (1.0 + 2.0 * 1.1f64.sqrt() / 2.1).log2();
        assert!((ln - expected).abs() < 1e-10);
        assert!((ln - 0.9992).abs() < 1e-4);
    }

    #[test]
    fn trapped_mixture_log_negativity() {
        // partial transpose of (Φ⁺ + eg + ge)/3 has eigenvalues 1/6, 1/6, 1/6, 1/2
        let rho = &(&phi_plus().projector() + &product_ket("eg").unwrap().projector()) + &product_ket("ge").unwrap().projector();
        let rho = rho.scale_real(1.0 / 3.0);
        let ln = log_negativity(&rho, &two(), 1).unwrap();
        assert_eq!(ln, 0.0);
    }

    #[test]
    fn expectation_examples() {
        let ctx = MetricContext::new(two(), vec![]).unwrap();
        let s = ctx.snapshot(&product_ket("eg").unwrap().projector()).unwrap();
        assert_eq!(s.get("sz1"), Some(1.0));
        assert_eq!(s.get("sz2"), Some(-1.0));
        let s = ctx.snapshot(&phi_plus().projector()).unwrap();
        assert!(s.get("sz1").unwrap().abs() < 1e-15);
        let sig = crate::states::lowering();
        let layout = two();
        let op = embed(&sig, 0, &layout).unwrap().matmul(&embed(&sig, 1, &layout).unwrap());
        let v = expectation(&op.dagger(), &phi_plus().projector()).unwrap();
        assert!((v - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(s.row()[0].is_nan());
    }

    #[test]
    fn trace_distance_between_bell_states() {
        let d = trace_distance(&phi_plus().projector(), &phi_minus().projector()).unwrap();
        assert!((d - 1.0).abs() < 1e-10);
        assert!(trace_distance(&psi_plus().projector(), &psi_plus().projector()).unwrap() < 1e-12);
    }

    fn arb_state() -> impl Strategy<Value = ComplexMatrix> {
        prop::collection::vec(-1.0f64..1.0, 8).prop_filter_map("nonzero", |v| {
            let amps: Vec<C64> = v.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
            let k = ComplexMatrix::ket(&amps);
            (k.norm() > 1e-3).then(|| k.normalized().projector())
        })
    }

    fn arb_unitary() -> impl Strategy<Value = ComplexMatrix> {
        (0.0f64..3.2, 0.0f64..6.3, 0.0f64..6.3).prop_map(|(t, a, b)| {
            let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
            ComplexMatrix::from_rows(&[
                vec![C64::from_polar(c, a), C64::from_polar(-s, b)],
                vec![C64::from_polar(s, -b), C64::from_polar(c, -a)],
            ])
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn ln_invariant_under_local_unitaries(rho in arb_state(), u1 in arb_unitary(), u2 in arb_unitary()) {
            let u = kron(&u1, &u2);
            let rotated = u.matmul(&rho).matmul_dagger(&u);
            let a = log_negativity(&rho, &two(), 1).unwrap();
            let b = log_negativity(&rotated, &two(), 1).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn fidelity_is_linear_in_state(a in arb_state(), b in arb_state(), lam in 0.0f64..1.0, t in 0.0f64..3.1, p in 0.0f64..6.2) {
            let psi = kron(&bloch_ket(t, p), &bloch_ket(p / 2.0, t));
            let mix = &a.scale_real(lam) + &b.scale_real(1.0 - lam);
            let lhs = fidelity(&mix, &psi).unwrap();
            let rhs = lam * fidelity(&a, &psi).unwrap() + (1.0 - lam) * fidelity(&b, &psi).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn product_states_have_zero_ln(t1 in 0.0f64..3.1, p1 in 0.0f64..6.2, t2 in 0.0f64..3.1, p2 in 0.0f64..6.2) {
            let v = kron(&bloch_ket(t1, p1), &bloch_ket(t2, p2));
            prop_assert!(log_negativity(&v.projector(), &two(), 0).unwrap() <= 1e-9);
        }
    }
}
