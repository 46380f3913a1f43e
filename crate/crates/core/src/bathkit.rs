//! Bath preparations: block-diagonal two-qubit states and three-qubit GHZ states.
//!
//! A two-qubit bath is a mixture of a pure state in span{|ee⟩, |gg⟩} (the Φ
//! block) and a pure state in span{|eg⟩, |ge⟩} (the Ψ block). Amplitudes
//! are stored unnormalized: `|b_ee|² + |b_gg|²` is the Φ-block weight.
//!
//! Each bath is brought to a canonical global phase at construction. The
//! first nonzero amplitude in the order `b_ee, b_gg, b_eg, b_ge` (or
//! `b_eee, b_ggg`) is made real and non-negative; the removed phase is kept
//! in `phase`.

use serde::{Deserialize, Serialize};

use crate::densecore::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::states::product_ket;

/// Weight below which a block counts as absent.
pub const ABSENT_WEIGHT: f64 = 1e-14;
const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Which blocks of a two-qubit bath carry weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockContent {
    Phi,
    Psi,
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitBath {
    pub b_ee: C64,
    pub b_gg: C64,
    pub b_eg: C64,
    pub b_ge: C64,
    pub p_phi: f64,
    pub p_psi: f64,
    /// Global phase removed at construction: input = stored · e^{i·phase}.
    pub phase: f64,
}

/// Rotates `amps` so the first nonzero entry is real and non-negative.
/// Returns the removed phase.
fn canonicalize(amps: &mut [C64]) -> f64 {
    let Some(lead) = amps.iter().position(|z| z.norm() > 0.0) else {
        return 0.0;
    };
    let phase = amps[lead].arg();
    let rot = C64::from_polar(1.0, -phase);
    for z in amps.iter_mut() {
        *z *= rot;
    }
    amps[lead] = C64::new(amps[lead].norm(), 0.0);
    phase
}

impl TwoQubitBath {
    pub fn new(b_ee: C64, b_gg: C64, b_eg: C64, b_ge: C64) -> Result<Self> {
        let amps = [b_ee, b_gg, b_eg, b_ge];
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input("bath amplitudes must be finite".into()));
        }
        let total: f64 = amps.iter().map(C64::norm_sqr).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::Input(format!("bath amplitudes have squared norm {total}, expected 1")));
        }
        let mut amps = amps.map(|z| z / total.sqrt());
        let mut p_phi = amps[0].norm_sqr() + amps[1].norm_sqr();
        let mut p_psi = amps[2].norm_sqr() + amps[3].norm_sqr();
        if p_phi < ABSENT_WEIGHT {
            amps[0] = ZERO;
            amps[1] = ZERO;
            p_phi = 0.0;
            amps[2] /= p_psi.sqrt();
            amps[3] /= p_psi.sqrt();
            p_psi = 1.0;
        } else if p_psi < ABSENT_WEIGHT {
            amps[2] = ZERO;
            amps[3] = ZERO;
            p_psi = 0.0;
            amps[0] /= p_phi.sqrt();
            amps[1] /= p_phi.sqrt();
            p_phi = 1.0;
        }
        let phase = canonicalize(&mut amps);
        let [b_ee, b_gg, b_eg, b_ge] = amps;
        Ok(Self { b_ee, b_gg, b_eg, b_ge, p_phi, p_psi, phase })
    }

    /// Near-Bell Φ state `(|ee⟩ ± √(1+ε)|gg⟩)/√(2+ε)`.
    pub fn near_bell(sign: Sign, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::Input(format!("near-Bell epsilon must be finite and >= 0, got {epsilon}")));
        }
        let n = (2.0 + epsilon).sqrt();
        Self::new(
            C64::new(1.0 / n, 0.0),
            C64::new(sign.value() * (1.0 + epsilon).sqrt() / n, 0.0),
            ZERO,
            ZERO,
        )
    }

    pub fn content(&self) -> BlockContent {
        match (self.p_phi > 0.0, self.p_psi > 0.0) {
            (true, false) => BlockContent::Phi,
            (false, true) => BlockContent::Psi,
            _ => BlockContent::Mixed,
        }
    }

    pub fn is_pure(&self) -> bool {
        self.content() != BlockContent::Mixed
    }

    /// Unnormalized Φ-block vector `b_ee|ee⟩ + b_gg|gg⟩`.
    pub fn phi_vector(&self) -> ComplexMatrix {
        let mut v = product_ket("ee").unwrap().scale(self.b_ee);
        v.axpy(self.b_gg, &product_ket("gg").unwrap());
        v
    }

    /// Unnormalized Ψ-block vector `b_eg|eg⟩ + b_ge|ge⟩`.
    pub fn psi_vector(&self) -> ComplexMatrix {
        let mut v = product_ket("eg").unwrap().scale(self.b_eg);
        v.axpy(self.b_ge, &product_ket("ge").unwrap());
        v
    }

    /// Normalized Φ-block pure state, `None` when the block is absent.
    pub fn phi_component(&self) -> Option<ComplexMatrix> {
        (self.p_phi > 0.0).then(|| self.phi_vector().scale_real(1.0 / self.p_phi.sqrt()))
    }

    pub fn psi_component(&self) -> Option<ComplexMatrix> {
        (self.p_psi > 0.0).then(|| self.psi_vector().scale_real(1.0 / self.p_psi.sqrt()))
    }

    /// Normalized single-block bath built from the Φ block.
    pub fn phi_bath(&self) -> Option<TwoQubitBath> {
        let s = self.p_phi.sqrt();
        (self.p_phi > 0.0).then(|| TwoQubitBath::new(self.b_ee / s, self.b_gg / s, ZERO, ZERO).unwrap())
    }

    pub fn psi_bath(&self) -> Option<TwoQubitBath> {
        let s = self.p_psi.sqrt();
        (self.p_psi > 0.0).then(|| TwoQubitBath::new(ZERO, ZERO, self.b_eg / s, self.b_ge / s).unwrap())
    }

    /// 4×4 density matrix in the computational order `ee, eg, ge, gg`.
    /// Entries coupling the two blocks are exactly zero.
    pub fn density_matrix(&self) -> ComplexMatrix {
        let phi = self.phi_vector();
        let psi = self.psi_vector();
        &phi.projector() + &psi.projector()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhzBath {
    pub b_eee: C64,
    pub b_ggg: C64,
    pub phase: f64,
}

impl GhzBath {
    pub fn new(b_eee: C64, b_ggg: C64) -> Result<Self> {
        let total = b_eee.norm_sqr() + b_ggg.norm_sqr();
        if !total.is_finite() || (total - 1.0).abs() > NORM_TOL {
            return Err(Error::Input(format!("GHZ amplitudes have squared norm {total}, expected 1")));
        }
        let s = total.sqrt();
        let mut amps = [b_eee / s, b_ggg / s];
        let phase = canonicalize(&mut amps);
        Ok(Self { b_eee: amps[0], b_ggg: amps[1], phase })
    }

    pub fn vector(&self) -> ComplexMatrix {
        let mut v = product_ket("eee").unwrap().scale(self.b_eee);
        v.axpy(self.b_ggg, &product_ket("ggg").unwrap());
        v
    }

    pub fn density_matrix(&self) -> ComplexMatrix {
        self.vector().projector()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BathSpec {
    TwoQubit(TwoQubitBath),
    Ghz(GhzBath),
}

impl BathSpec {
    pub fn n_qubits(&self) -> usize {
        match self {
            BathSpec::TwoQubit(_) => 2,
            BathSpec::Ghz(_) => 3,
        }
    }

    pub fn density_matrix(&self) -> ComplexMatrix {
        match self {
            BathSpec::TwoQubit(b) => b.density_matrix(),
            BathSpec::Ghz(b) => b.density_matrix(),
        }
    }

    /// Pure components with weights, summing to the bath density matrix.
    pub fn pure_components(&self) -> Vec<(f64, ComplexMatrix)> {
        match self {
            BathSpec::TwoQubit(b) => {
                let mut out = Vec::new();
                if let Some(v) = b.phi_component() {
                    out.push((b.p_phi, v));
                }
                if let Some(v) = b.psi_component() {
                    out.push((b.p_psi, v));
                }
                out
            }
            BathSpec::Ghz(b) => vec![(1.0, b.vector())],
        }
    }
}
