//! Named qubit states. Single-qubit basis order is `|e⟩ = 0`, `|g⟩ = 1`, so
//! the two-qubit computational order is `ee, eg, ge, gg`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::densecore::{kron, ComplexMatrix, C64, ONE};

pub const EXCITED: usize = 0;
pub const GROUND: usize = 1;

/// `σ = |g⟩⟨e|`
pub fn lowering() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    m[(GROUND, EXCITED)] = ONE;
    m
}

/// `σ_z = |e⟩⟨e| − |g⟩⟨g|`
pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::diag(&[ONE, -ONE])
}

/// Product ket from a label over `{e, g}`, e.g. `"eg"`.
pub fn product_ket(label: &str) -> Option<ComplexMatrix> {
    let mut out: Option<ComplexMatrix> = None;
    for ch in label.chars() {
        let idx = match ch {
            'e' => EXCITED,
            'g' => GROUND,
            _ => return None,
        };
        let k = ComplexMatrix::basis_ket(2, idx);
        out = Some(match out {
            None => k,
            Some(acc) => kron(&acc, &k),
        });
    }
    out
}

fn bell(a: &str, b: &str, sign: f64) -> ComplexMatrix {
    let mut v = product_ket(a).unwrap();
    v.axpy(C64::new(sign, 0.0), &product_ket(b).unwrap());
    v.scale_real(FRAC_1_SQRT_2)
}

pub fn phi_plus() -> ComplexMatrix {
    bell("ee", "gg", 1.0)
}

pub fn phi_minus() -> ComplexMatrix {
    bell("ee", "gg", -1.0)
}

pub fn psi_plus() -> ComplexMatrix {
    bell("eg", "ge", 1.0)
}

pub fn psi_minus() -> ComplexMatrix {
    bell("eg", "ge", -1.0)
}

/// `(|e⟩ + e^{iφ}|g⟩)` rotated by polar angle θ: `cos(θ/2)|e⟩ + e^{iφ} sin(θ/2)|g⟩`.
pub fn bloch_ket(theta: f64, phi: f64) -> ComplexMatrix {
    ComplexMatrix::ket(&[C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)])
}

/// Labelled pure states used to name conditional states.
pub fn two_qubit_dictionary() -> Vec<(String, ComplexMatrix)> {
    let mut dict = vec![
        ("Phi+".to_string(), phi_plus()),
        ("Phi-".to_string(), phi_minus()),
        ("Psi+".to_string(), psi_plus()),
        ("Psi-".to_string(), psi_minus()),
    ];
    for label in ["ee", "eg", "ge", "gg"] {
        dict.push((label.to_string(), product_ket(label).unwrap()));
    }
    dict
}

/// Resolves a pure-state name for an `n`-qubit register.
pub fn named_ket(name: &str, n_qubits: usize) -> Option<ComplexMatrix> {
    if n_qubits == 2 {
        if let Some((_, v)) = two_qubit_dictionary().into_iter().find(|(k, _)| k == name) {
            return Some(v);
        }
    }
    if name.len() == n_qubits {
        return product_ket(name);
    }
    None
}

/// Named density matrix: any pure name, or `maximally-mixed`.
pub fn named_density(name: &str, n_qubits: usize) -> Option<ComplexMatrix> {
    if name == "maximally-mixed" {
        let d = 1usize << n_qubits;
        return Some(ComplexMatrix::identity(d).scale_real(1.0 / d as f64));
    }
    named_ket(name, n_qubits).map(|v| v.projector())
}
