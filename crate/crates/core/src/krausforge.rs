//! Weak-measurement Kraus operators, Lindblad operators and the effective
//! Hamiltonian.
//!
//! Every Kraus operator is stored as three Taylor coefficients,
//! `K = k₀·I + √g·K½ + g·K₁` with `g = γΔt`. Conditional maps and
//! probabilities are the sandwich `KρK†` truncated at order `g`:
//!
//! ```text
//! E(ρ) = |k₀|²ρ + √g(k₀* K½ρ + k₀ ρK½†) + g(K½ρK½† + k₀* K₁ρ + k₀ ρK₁†)
//! ```
//!
//! Probabilities `Tr E(ρ)` therefore sum to one exactly, and the outcome sum
//! of the maps is `ρ + g·𝓛ρ`.
//!
//! Lindblad operators are returned in units of `√γ`; time is measured in
//! `1/γ` throughout.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::bathkit::{BathSpec, BlockContent, GhzBath, TwoQubitBath};
use crate::densecore::{embed, kron, ComplexMatrix, DimLayout, C64, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::states::{lowering, phi_minus, phi_plus, product_ket, psi_minus, psi_plus};

/// Largest accepted `γΔt`.
pub const MAX_GAMMA_DT: f64 = 0.1;
/// `γΔt` above which a warning is emitted.
pub const WARN_GAMMA_DT: f64 = 0.02;
/// Outcomes with probability below `SUPPRESSION_FACTOR·(γΔt)²` are never sampled.
pub const SUPPRESSION_FACTOR: f64 = 10.0;

const ZERO_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    #[serde(rename = "local-zz")]
    LocalZz,
    #[serde(rename = "bell")]
    Bell,
    #[serde(rename = "local-xz")]
    LocalXz,
    #[serde(rename = "local-zzz")]
    LocalZzz,
}

impl Basis {
    pub fn descriptor(self) -> &'static str {
        match self {
            Basis::LocalZz => "local-zz",
            Basis::Bell => "bell",
            Basis::LocalXz => "local-xz",
            Basis::LocalZzz => "local-zzz",
        }
    }

    pub fn from_descriptor(s: &str) -> Option<Self> {
        [Basis::LocalZz, Basis::Bell, Basis::LocalXz, Basis::LocalZzz].into_iter().find(|b| b.descriptor() == s)
    }

    pub fn n_qubits(self) -> usize {
        if self == Basis::LocalZzz {
            3
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KrausKind {
    Jump,
    NoJump,
    Diffusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SystemKind {
    Atoms,
    Custom,
}

/// System operators coupled to the bath qubits, plus the step size `γΔt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    layout: DimLayout,
    lowering: Vec<ComplexMatrix>,
    gamma_dt: f64,
    kind: SystemKind,
}

impl SystemSpec {
    /// `gamma_dt = 0` is accepted and switches the interaction off.
    pub fn new(layout: DimLayout, lowering_ops: Vec<ComplexMatrix>, gamma_dt: f64) -> Result<Self> {
        let d = layout.total();
        if lowering_ops.is_empty() {
            return Err(Error::Input("at least one lowering operator is required".into()));
        }
        for (k, c) in lowering_ops.iter().enumerate() {
            if c.rows() != d || c.cols() != d {
                return Err(Error::Input(format!(
                    "lowering operator {k} is {}x{}, system dimension is {d}",
                    c.rows(),
                    c.cols()
                )));
            }
        }
        check_gamma_dt(gamma_dt)?;
        Ok(Self { layout, lowering: lowering_ops, gamma_dt, kind: SystemKind::Custom })
    }

    /// `n` two-level atoms, atom `ℓ` coupled to bath qubit `ℓ` through `σ_ℓ`.
    pub fn atoms(n: usize, gamma_dt: f64) -> Result<Self> {
        let layout = DimLayout::qubits(n);
        let ops = (0..n).map(|k| embed(&lowering(), k, &layout)).collect::<Result<Vec<_>>>()?;
        let mut sys = Self::new(layout, ops, gamma_dt)?;
        sys.kind = SystemKind::Atoms;
        Ok(sys)
    }

    pub fn two_atoms(gamma_dt: f64) -> Result<Self> {
        Self::atoms(2, gamma_dt)
    }

    pub fn three_atoms(gamma_dt: f64) -> Result<Self> {
        Self::atoms(3, gamma_dt)
    }

    pub fn with_gamma_dt(&self, gamma_dt: f64) -> Result<Self> {
        check_gamma_dt(gamma_dt)?;
        Ok(Self { gamma_dt, ..self.clone() })
    }

    pub fn layout(&self) -> &DimLayout {
        &self.layout
    }

    pub fn lowering_ops(&self) -> &[ComplexMatrix] {
        &self.lowering
    }

    pub fn n_ops(&self) -> usize {
        self.lowering.len()
    }

    pub fn dim(&self) -> usize {
        self.layout.total()
    }

    pub fn gamma_dt(&self) -> f64 {
        self.gamma_dt
    }

    /// True for two atoms with the standard atomic lowering operators.
    pub fn is_two_atoms(&self) -> bool {
        self.kind == SystemKind::Atoms && self.lowering.len() == 2
    }

    pub fn warning(&self) -> Option<String> {
        (self.gamma_dt > WARN_GAMMA_DT)
            .then(|| format!("gamma_dt = {} exceeds {WARN_GAMMA_DT}; weak-coupling truncation error grows as gamma_dt^2", self.gamma_dt))
    }

    fn op(&self, k: usize) -> &ComplexMatrix {
        &self.lowering[k]
    }

    fn require_ops(&self, n: usize) -> Result<()> {
        if self.lowering.len() != n {
            return Err(Error::Input(format!("expected {n} lowering operators, system has {}", self.lowering.len())));
        }
        Ok(())
    }
}

fn check_gamma_dt(g: f64) -> Result<()> {
    if !(0.0..=MAX_GAMMA_DT).contains(&g) {
        return Err(Error::Input(format!("gamma_dt = {g} outside [0, {MAX_GAMMA_DT}]")));
    }
    Ok(())
}

/// `(ab + ba)/2`
fn sym(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.anticommutator(b).scale_real(0.5)
}

fn dag(a: &ComplexMatrix) -> ComplexMatrix {
    a.dagger()
}

/// One labelled weak-measurement Kraus operator.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausOperator {
    pub label: String,
    pub kind: KrausKind,
    /// Both the identity and √g coefficients vanish, so the truncated map is zero.
    pub suppressed: bool,
    pub identity_coeff: C64,
    pub half_order: ComplexMatrix,
    pub first_order: ComplexMatrix,
    gamma_dt: f64,
    drift: ComplexMatrix,
    jump_weight: ComplexMatrix,
}

impl KrausOperator {
    pub fn new(
        label: impl Into<String>,
        kind: KrausKind,
        identity_coeff: C64,
        half_order: ComplexMatrix,
        first_order: ComplexMatrix,
        gamma_dt: f64,
    ) -> Self {
        let sg = gamma_dt.sqrt();
        let k0c = identity_coeff.conj();
        let mut drift = half_order.scale(k0c * sg);
        drift.axpy(k0c * gamma_dt, &first_order);
        let jump_weight = half_order.dagger().matmul(&half_order).scale_real(gamma_dt);
        let suppressed = identity_coeff.norm() <= ZERO_TOL && half_order.max_abs() <= ZERO_TOL;
        Self { label: label.into(), kind, suppressed, identity_coeff, half_order, first_order, gamma_dt, drift, jump_weight }
    }

    /// Linear combination `Σ zᵢ Kᵢ` of operators sharing one `γΔt`.
    pub fn combine(label: impl Into<String>, kind: KrausKind, terms: &[(C64, &KrausOperator)]) -> Self {
        let (_, first) = terms[0];
        let d = first.dim();
        let mut k0 = ZERO;
        let mut half = ComplexMatrix::zeros(d, d);
        let mut one = ComplexMatrix::zeros(d, d);
        for &(z, op) in terms {
            k0 += z * op.identity_coeff;
            half.axpy(z, &op.half_order);
            one.axpy(z, &op.first_order);
        }
        Self::new(label, kind, k0, half, one, first.gamma_dt)
    }

    pub fn dim(&self) -> usize {
        self.half_order.rows()
    }

    pub fn gamma_dt(&self) -> f64 {
        self.gamma_dt
    }

    /// Full operator `k₀I + √g K½ + g K₁`.
    pub fn matrix(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut m = ComplexMatrix::identity(d).scale(self.identity_coeff);
        m.axpy(C64::new(self.gamma_dt.sqrt(), 0.0), &self.half_order);
        m.axpy(C64::new(self.gamma_dt, 0.0), &self.first_order);
        m
    }

    /// Unnormalized conditional state, truncated at order `γΔt`.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = rho.scale_real(self.identity_coeff.norm_sqr());
        if self.drift.max_abs() > 0.0 {
            let dr = self.drift.matmul(rho);
            out += &dr;
            out += &dr.dagger();
        }
        if self.jump_weight.max_abs() > 0.0 {
            let hr = self.half_order.matmul(rho);
            out.axpy(C64::new(self.gamma_dt, 0.0), &hr.matmul_dagger(&self.half_order));
        }
        out
    }

    /// Outcome probability `Tr E(ρ)` at order `γΔt`.
    pub fn probability(&self, rho: &ComplexMatrix) -> f64 {
        self.identity_coeff.norm_sqr() * rho.trace().re
            + 2.0 * self.drift.trace_product(rho).re
            + self.jump_weight.trace_product(rho).re
    }

    /// Order-zero part of the probability, `|k₀|² Tr ρ`.
    pub fn leading_probability(&self, rho: &ComplexMatrix) -> f64 {
        self.identity_coeff.norm_sqr() * rho.trace().re
    }

    /// Completely positive update used for trajectories: the full sandwich
    /// `KρK†` when `k₀ ≠ 0`, otherwise the leading jump term `γΔt·K½ρK½†`.
    /// Both agree with [`apply`](Self::apply) at order `γΔt`.
    pub fn apply_positive(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        if self.identity_coeff.norm() <= ZERO_TOL {
            let hr = self.half_order.matmul(rho);
            return hr.matmul_dagger(&self.half_order).scale_real(self.gamma_dt);
        }
        self.apply_exact(rho)
    }

    /// Full sandwich `KρK†` without truncation.
    pub fn apply_exact(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let k = self.matrix();
        k.matmul(rho).matmul_dagger(&k)
    }
}

/// A weighted pure-bath Kraus set inside a mixed-bath ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSet {
    pub weight: f64,
    pub set: KrausSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub basis: Basis,
    pub gamma_dt: f64,
    pub dim: usize,
    /// Empty for mixed baths; see `sub_ensembles`.
    pub operators: Vec<KrausOperator>,
    pub sub_ensembles: Vec<WeightedSet>,
}

impl KrausSet {
    fn pure(basis: Basis, gamma_dt: f64, operators: Vec<KrausOperator>) -> Self {
        let dim = operators[0].dim();
        Self { basis, gamma_dt, dim, operators, sub_ensembles: Vec::new() }
    }

    pub fn is_mixed(&self) -> bool {
        !self.sub_ensembles.is_empty()
    }

    /// `(weight, operator list)` pairs; a pure set is its own single branch.
    pub fn branches(&self) -> Vec<(f64, &[KrausOperator])> {
        if self.is_mixed() {
            self.sub_ensembles.iter().map(|w| (w.weight, w.set.operators.as_slice())).collect()
        } else {
            vec![(1.0, self.operators.as_slice())]
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.branches()[0].1.iter().map(|k| k.label.clone()).collect()
    }

    pub fn n_outcomes(&self) -> usize {
        self.branches()[0].1.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels().iter().position(|l| l == label)
    }

    pub fn operator(&self, label: &str) -> Option<&KrausOperator> {
        self.operators.iter().find(|k| k.label == label)
    }

    /// Truncated outcome probabilities, weighted over branches.
    pub fn probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        let mut out = vec![0.0; self.n_outcomes()];
        for (w, ops) in self.branches() {
            for (p, op) in out.iter_mut().zip(ops) {
                *p += w * op.probability(rho);
            }
        }
        out
    }

    pub fn leading_probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        let mut out = vec![0.0; self.n_outcomes()];
        for (w, ops) in self.branches() {
            for (p, op) in out.iter_mut().zip(ops) {
                *p += w * op.leading_probability(rho);
            }
        }
        out
    }

    /// Unnormalized conditional state for outcome `index`.
    pub fn apply(&self, index: usize, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (w, ops) in self.branches() {
            out.axpy(C64::new(w, 0.0), &ops[index].apply(rho));
        }
        out
    }

    /// Completely positive conditional update for outcome `index`, unnormalized.
    pub fn apply_positive(&self, index: usize, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (w, ops) in self.branches() {
            out.axpy(C64::new(w, 0.0), &ops[index].apply_positive(rho));
        }
        out
    }

    /// Outcome-summed map, equal to one step of the unconditional dynamics.
    pub fn average_map(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for i in 0..self.n_outcomes() {
            out += &self.apply(i, rho);
        }
        out
    }

    /// Outcome-summed full sandwich without truncation.
    pub fn average_map_exact(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (w, ops) in self.branches() {
            for op in ops {
                out.axpy(C64::new(w, 0.0), &op.apply_exact(rho));
            }
        }
        out
    }

    /// `max |Σ w K†K − I|` over entries.
    pub fn completeness_residual(&self) -> f64 {
        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
        for (w, ops) in self.branches() {
            for op in ops {
                let k = op.matrix();
                acc.axpy(C64::new(w, 0.0), &k.dagger().matmul(&k));
            }
        }
        acc.max_abs_diff(&ComplexMatrix::identity(self.dim))
    }

    /// Probability below which an outcome is masked from sampling.
    pub fn suppression_floor(&self) -> f64 {
        SUPPRESSION_FACTOR * self.gamma_dt * self.gamma_dt
    }
}

/// Orthonormal bath basis with outcome labels.
#[derive(Debug, Clone)]
pub struct MeasurementBasis {
    pub basis: Basis,
    pub outcomes: Vec<(String, ComplexMatrix)>,
}

impl MeasurementBasis {
    pub fn new(basis: Basis) -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let combo = |a: &str, b: &str, s: f64| {
            let mut v = product_ket(a).unwrap().scale(h);
            v.axpy(h * s, &product_ket(b).unwrap());
            v
        };
        let outcomes = match basis {
            Basis::LocalZz => ["ee", "gg", "eg", "ge"].iter().map(|l| (l.to_string(), product_ket(l).unwrap())).collect(),
            Basis::Bell => vec![
                ("Phi+".into(), phi_plus()),
                ("Phi-".into(), phi_minus()),
                ("Psi+".into(), psi_plus()),
                ("Psi-".into(), psi_minus()),
            ],
            // first bath qubit measured in X, second in Z
            Basis::LocalXz => vec![
                ("+e".into(), combo("ee", "ge", 1.0)),
                ("-e".into(), combo("ee", "ge", -1.0)),
                ("+g".into(), combo("eg", "gg", 1.0)),
                ("-g".into(), combo("eg", "gg", -1.0)),
            ],
            Basis::LocalZzz => ["eee", "ggg", "eeg", "gge", "ege", "geg", "egg", "gee"]
                .iter()
                .map(|l| (l.to_string(), product_ket(l).unwrap()))
                .collect(),
        };
        Self { basis, outcomes }
    }

    fn check_orthonormal(&self, dim: usize) -> Result<()> {
        if self.outcomes.len() != dim {
            return Err(Error::Input(format!("basis has {} vectors, bath dimension is {dim}", self.outcomes.len())));
        }
        for (i, (_, a)) in self.outcomes.iter().enumerate() {
            if a.rows() != dim || a.cols() != 1 {
                return Err(Error::Input(format!("basis vector {i} has wrong shape")));
            }
            for (j, (_, b)) in self.outcomes.iter().enumerate() {
                let expect = if i == j { ONE } else { ZERO };
                if (a.inner(b) - expect).norm() > 1e-10 {
                    return Err(Error::Input(format!("basis vectors {i} and {j} are not orthonormal")));
                }
            }
        }
        Ok(())
    }
}

/// `(I ⊗ ⟨m|) O (I ⊗ |ψ⟩)` for `O` on system ⊗ bath.
fn contract(o: &ComplexMatrix, d_sys: usize, m: &ComplexMatrix, psi: &ComplexMatrix) -> ComplexMatrix {
    let d_bath = m.rows();
    let mut out = ComplexMatrix::zeros(d_sys, d_sys);
    for i in 0..d_sys {
        for j in 0..d_sys {
            let mut acc = ZERO;
            for a in 0..d_bath {
                let ma = m[(a, 0)].conj();
                if ma == ZERO {
                    continue;
                }
                for b in 0..d_bath {
                    let pb = psi[(b, 0)];
                    if pb == ZERO {
                        continue;
                    }
                    acc += ma * o[(i * d_bath + a, j * d_bath + b)] * pb;
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Dimensionless interaction `Σ_ℓ (c_ℓ† ⊗ σ_ℓ + c_ℓ ⊗ σ_ℓ†)` on system ⊗ bath.
pub fn interaction(sys: &SystemSpec) -> Result<ComplexMatrix> {
    let n = sys.n_ops();
    let bath_layout = DimLayout::qubits(n);
    let d = sys.dim() * (1 << n);
    let mut h = ComplexMatrix::zeros(d, d);
    for (k, c) in sys.lowering_ops().iter().enumerate() {
        let s = embed(&lowering(), k, &bath_layout)?;
        h += &kron(&c.dagger(), &s);
        h += &kron(c, &s.dagger());
    }
    Ok(h)
}

/// Brute-force Kraus operators from the three-term expansion of the
/// collision unitary, contracted against bath vectors.
pub fn oracle_kraus(sys: &SystemSpec, bath_vector: &ComplexMatrix, basis: &MeasurementBasis) -> Result<KrausSet> {
    let n = sys.n_ops();
    let d_bath = 1usize << n;
    if bath_vector.rows() != d_bath || bath_vector.cols() != 1 {
        return Err(Error::Input(format!("bath vector must be {d_bath}x1 for {n} bath qubits")));
    }
    if (bath_vector.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Input("bath vector is not normalized".into()));
    }
    basis.check_orthonormal(d_bath)?;
    let d = sys.dim();
    let h = interaction(sys)?;
    let h2 = h.matmul(&h);
    let mut ops = Vec::with_capacity(d_bath);
    for (label, m) in &basis.outcomes {
        let k0 = m.inner(bath_vector);
        let half = contract(&h, d, m, bath_vector).scale(-I);
        let one = contract(&h2, d, m, bath_vector).scale_real(-0.5);
        let kind = match (k0.norm() > ZERO_TOL, half.max_abs() > 1e-14) {
            (true, true) => KrausKind::Diffusive,
            (false, true) => KrausKind::Jump,
            _ => KrausKind::NoJump,
        };
        ops.push(KrausOperator::new(label.clone(), kind, k0, half, one, sys.gamma_dt()));
    }
    Ok(KrausSet::pure(basis.basis, sys.gamma_dt(), ops))
}

fn require_block(bath: &TwoQubitBath, want: BlockContent) -> Result<()> {
    if bath.content() != want {
        return Err(Error::Input(format!(
            "bath block content {:?} where {want:?} is required (p_phi = {}, p_psi = {}); use assemble_mixed_kraus for mixtures",
            bath.content(),
            bath.p_phi,
            bath.p_psi
        )));
    }
    Ok(())
}

/// Local energy-basis set `ee, gg, eg, ge` for a pure Φ-block bath.
pub fn local_energy_kraus_phi(sys: &SystemSpec, bath: &TwoQubitBath) -> Result<KrausSet> {
    sys.require_ops(2)?;
    require_block(bath, BlockContent::Phi)?;
    let (c1, c2) = (sys.op(0), sys.op(1));
    let (bee, bgg) = (bath.b_ee, bath.b_gg);
    let d = sys.dim();
    let g = sys.gamma_dt();
    let zero = ComplexMatrix::zeros(d, d);
    let (c1d, c2d) = (dag(c1), dag(c2));

    let mut k1_ee = (&c1.matmul(&c1d) + &c2.matmul(&c2d)).scale(-0.5 * bee);
    k1_ee.axpy(-bgg, &sym(c1, c2));
    let mut k1_gg = (&c1d.matmul(c1) + &c2d.matmul(c2)).scale(-0.5 * bgg);
    k1_gg.axpy(-bee, &sym(&c1d, &c2d));
    let [l1, l2, _, _] = two_qubit_lindblads(c1, c2, bath);

    let ops = vec![
        KrausOperator::new("ee", KrausKind::NoJump, bee, zero.clone(), k1_ee, g),
        KrausOperator::new("gg", KrausKind::NoJump, bgg, zero.clone(), k1_gg, g),
        KrausOperator::new("eg", KrausKind::Jump, ZERO, l1.scale(-I), zero.clone(), g),
        KrausOperator::new("ge", KrausKind::Jump, ZERO, l2.scale(-I), zero, g),
    ];
    Ok(KrausSet::pure(Basis::LocalZz, g, ops))
}

/// Local energy-basis set `ee, gg, eg, ge` for a pure Ψ-block bath.
pub fn local_energy_kraus_psi(sys: &SystemSpec, bath: &TwoQubitBath) -> Result<KrausSet> {
    sys.require_ops(2)?;
    require_block(bath, BlockContent::Psi)?;
    let (c1, c2) = (sys.op(0), sys.op(1));
    let (beg, bge) = (bath.b_eg, bath.b_ge);
    let d = sys.dim();
    let g = sys.gamma_dt();
    let zero = ComplexMatrix::zeros(d, d);
    let (c1d, c2d) = (dag(c1), dag(c2));

    let mut k1_eg = (&c1.matmul(&c1d) + &c2d.matmul(c2)).scale(-0.5 * beg);
    k1_eg.axpy(-bge, &sym(c1, &c2d));
    let mut k1_ge = (&c1d.matmul(c1) + &c2.matmul(&c2d)).scale(-0.5 * bge);
    k1_ge.axpy(-beg, &sym(&c1d, c2));
    let [_, _, l3, l4] = two_qubit_lindblads(c1, c2, bath);

    let ops = vec![
        KrausOperator::new("ee", KrausKind::Jump, ZERO, l3.scale(-I), zero.clone(), g),
        KrausOperator::new("gg", KrausKind::Jump, ZERO, l4.scale(-I), zero.clone(), g),
        KrausOperator::new("eg", KrausKind::NoJump, beg, zero.clone(), k1_eg, g),
        KrausOperator::new("ge", KrausKind::NoJump, bge, zero, k1_ge, g),
    ];
    Ok(KrausSet::pure(Basis::LocalZz, g, ops))
}

fn local_energy_kraus_pure(sys: &SystemSpec, bath: &TwoQubitBath) -> Result<KrausSet> {
    match bath.content() {
        BlockContent::Phi => local_energy_kraus_phi(sys, bath),
        BlockContent::Psi => local_energy_kraus_psi(sys, bath),
        BlockContent::Mixed => Err(Error::Input("mixed bath: use assemble_mixed_kraus".into())),
    }
}

fn pair(label_a: &str, label_b: &str, kind: KrausKind, a: &KrausOperator, b: &KrausOperator) -> [KrausOperator; 2] {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    [
        KrausOperator::combine(label_a, kind, &[(h, a), (h, b)]),
        KrausOperator::combine(label_b, kind, &[(h, a), (-h, b)]),
    ]
}

/// Bell-basis set `Φ+, Φ−, Ψ+, Ψ−` for a pure bath of either block.
pub fn bell_basis_kraus(sys: &SystemSpec, bath: &TwoQubitBath) -> Result<KrausSet> {
    let local = local_energy_kraus_pure(sys, bath)?;
    let [ee, gg, eg, ge] = [0, 1, 2, 3].map(|i| &local.operators[i]);
    let [phi_p, phi_m] = pair("Phi+", "Phi-", ee.kind, ee, gg);
    let [psi_p, psi_m] = pair("Psi+", "Psi-", eg.kind, eg, ge);
    Ok(KrausSet::pure(Basis::Bell, sys.gamma_dt(), vec![phi_p, phi_m, psi_p, psi_m]))
}

/// XZ-basis set `+e, −e, +g, −g` for a pure Φ-block bath.
pub fn xz_basis_kraus(sys: &SystemSpec, bath: &TwoQubitBath) -> Result<KrausSet> {
    require_block(bath, BlockContent::Phi)?;
    let local = local_energy_kraus_phi(sys, bath)?;
    let [ee, gg, eg, ge] = [0, 1, 2, 3].map(|i| &local.operators[i]);
    let [pe, me] = pair("+e", "-e", KrausKind::Diffusive, ee, ge);
    let [pg, mg] = pair("+g", "-g", KrausKind::Diffusive, eg, gg);
    Ok(KrausSet::pure(Basis::LocalXz, sys.gamma_dt(), vec![pe, me, pg, mg]))
}

/// Local energy-basis set `q₁…q₈` for a three-qubit GHZ bath.
pub fn ghz_local_kraus(sys: &SystemSpec, bath: &GhzBath) -> Result<KrausSet> {
    sys.require_ops(3)?;
    let c = [sys.op(0), sys.op(1), sys.op(2)];
    let cd = c.map(dag);
    let (a, b) = (bath.b_eee, bath.b_ggg);
    let d = sys.dim();
    let g = sys.gamma_dt();
    let zero = ComplexMatrix::zeros(d, d);

    let mut sum_ccd = ComplexMatrix::zeros(d, d);
    let mut sum_cdc = ComplexMatrix::zeros(d, d);
    for k in 0..3 {
        sum_ccd += &c[k].matmul(&cd[k]);
        sum_cdc += &cd[k].matmul(c[k]);
    }
    let jump = |label: &str, half_coeff: C64, half: &ComplexMatrix, tail_coeff: C64, x: &ComplexMatrix, y: &ComplexMatrix| {
        KrausOperator::new(label, KrausKind::Jump, ZERO, half.scale(-I * half_coeff), sym(x, y).scale(-tail_coeff), g)
    };
    let ops = vec![
        KrausOperator::new("eee", KrausKind::NoJump, a, zero.clone(), sum_ccd.scale(-0.5 * a), g),
        KrausOperator::new("ggg", KrausKind::NoJump, b, zero, sum_cdc.scale(-0.5 * b), g),
        jump("eeg", a, &cd[2], b, c[0], c[1]),
        jump("gge", b, c[2], a, &cd[0], &cd[1]),
        jump("ege", a, &cd[1], b, c[0], c[2]),
        jump("geg", b, c[1], a, &cd[0], &cd[2]),
        jump("egg", b, c[0], a, &cd[1], &cd[2]),
        jump("gee", a, &cd[0], b, c[1], c[2]),
    ];
    Ok(KrausSet::pure(Basis::LocalZzz, g, ops))
}

/// Kraus set for a two-qubit bath of any block content. Mixed baths yield
/// one weighted sub-ensemble per block and no top-level operators.
pub fn assemble_mixed_kraus(sys: &SystemSpec, bath: &TwoQubitBath, basis: Basis) -> Result<KrausSet> {
    let build = |b: &TwoQubitBath| match basis {
        Basis::LocalZz => local_energy_kraus_pure(sys, b),
        Basis::Bell => bell_basis_kraus(sys, b),
        Basis::LocalXz => xz_basis_kraus(sys, b),
        Basis::LocalZzz => Err(Error::Input("local-zzz basis needs a GHZ bath".into())),
    };
    if bath.is_pure() {
        return build(bath);
    }
    if basis == Basis::LocalXz {
        return Err(Error::Input("local-xz basis requires a pure Φ-block bath".into()));
    }
    let phi = build(&bath.phi_bath().expect("mixed bath has Φ block"))?;
    let psi = build(&bath.psi_bath().expect("mixed bath has Ψ block"))?;
    Ok(KrausSet {
        basis,
        gamma_dt: sys.gamma_dt(),
        dim: sys.dim(),
        operators: Vec::new(),
        sub_ensembles: vec![WeightedSet { weight: bath.p_phi, set: phi }, WeightedSet { weight: bath.p_psi, set: psi }],
    })
}

/// Kraus set for any supported (bath, basis) pair.
pub fn kraus_set(sys: &SystemSpec, bath: &BathSpec, basis: Basis) -> Result<KrausSet> {
    match (bath, basis) {
        (BathSpec::Ghz(b), Basis::LocalZzz) => ghz_local_kraus(sys, b),
        (BathSpec::Ghz(_), other) => Err(Error::Input(format!("basis {} is not available for GHZ baths", other.descriptor()))),
        (BathSpec::TwoQubit(_), Basis::LocalZzz) => Err(Error::Input("local-zzz basis needs a GHZ bath".into())),
        (BathSpec::TwoQubit(b), basis) => assemble_mixed_kraus(sys, b, basis),
    }
}

fn two_qubit_lindblads(c1: &ComplexMatrix, c2: &ComplexMatrix, bath: &TwoQubitBath) -> [ComplexMatrix; 4] {
    let (c1d, c2d) = (dag(c1), dag(c2));
    let lin = |a: C64, x: &ComplexMatrix, b: C64, y: &ComplexMatrix| {
        let mut m = x.scale(a);
        m.axpy(b, y);
        m
    };
    [
        lin(bath.b_gg, c1, bath.b_ee, &c2d),
        lin(bath.b_ee, &c1d, bath.b_gg, c2),
        lin(bath.b_ge, c1, bath.b_eg, c2),
        lin(bath.b_eg, &c1d, bath.b_ge, &c2d),
    ]
}

/// The four Lindblad operators of a two-qubit bath, in units of `√γ`.
/// Unnormalized amplitudes carry the block weights, so an absent block
/// yields zero operators.
pub fn lindblad_ops(bath: &TwoQubitBath, sys: &SystemSpec) -> Result<[ComplexMatrix; 4]> {
    sys.require_ops(2)?;
    Ok(two_qubit_lindblads(sys.op(0), sys.op(1), bath))
}

/// Lindblad operators `b_eee c_ℓ†` and `b_ggg c_ℓ` of a GHZ bath.
pub fn ghz_lindblad_ops(bath: &GhzBath, sys: &SystemSpec) -> Result<Vec<ComplexMatrix>> {
    sys.require_ops(3)?;
    let mut out = Vec::with_capacity(6);
    for c in sys.lowering_ops() {
        out.push(c.dagger().scale(bath.b_eee));
        out.push(c.scale(bath.b_ggg));
    }
    Ok(out)
}

pub fn bath_lindblad_ops(bath: &BathSpec, sys: &SystemSpec) -> Result<Vec<ComplexMatrix>> {
    match bath {
        BathSpec::TwoQubit(b) => Ok(lindblad_ops(b, sys)?.to_vec()),
        BathSpec::Ghz(b) => ghz_lindblad_ops(b, sys),
    }
}

/// `−(i/2) Σ L†L`
pub fn effective_hamiltonian(lindblads: &[ComplexMatrix]) -> ComplexMatrix {
    let d = lindblads[0].rows();
    let mut acc = ComplexMatrix::zeros(d, d);
    for l in lindblads {
        acc += &l.dagger().matmul(l);
    }
    acc.scale(C64::new(0.0, -0.5))
}

/// Basis used for an eigenspace whose block weight vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegenerateCompletion {
    /// `{|ee⟩, |gg⟩}` and `{|eg⟩, |ge⟩}`
    #[default]
    Product,
    /// `{|Φ+⟩, |Φ−⟩}` and `{|Ψ+⟩, |Ψ−⟩}`
    Bell,
}

/// Effective Hamiltonian with its closed-form two-atom eigensystem.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub matrix: ComplexMatrix,
    /// Eigenvalues in units of γ, ordered `w₁…w₄`.
    pub spectrum: [C64; 4],
    pub eigenvectors: [ComplexMatrix; 4],
}

impl EffectiveHamiltonian {
    pub fn two_atom(sys: &SystemSpec, bath: &TwoQubitBath, completion: DegenerateCompletion) -> Result<Self> {
        if !sys.is_two_atoms() {
            return Err(Error::Input("closed-form eigensystem needs the two-atom system".into()));
        }
        let matrix = effective_hamiltonian(&lindblad_ops(bath, sys)?);
        let (pp, pq) = (bath.p_phi, bath.p_psi);
        let half = C64::new(0.0, -0.5);
        let spectrum = [half * pq, half * (pq + 2.0 * pp), half * pp, half * (pp + 2.0 * pq)];
        let ket = |a: C64, la: &str, b: C64, lb: &str, norm: f64| {
            let mut v = product_ket(la).unwrap().scale(a);
            v.axpy(b, &product_ket(lb).unwrap());
            v.scale_real(1.0 / norm)
        };
        let [w1, w2] = if pp > 0.0 {
            let n = pp.sqrt();
            [ket(bath.b_ee, "ee", -bath.b_gg, "gg", n), ket(bath.b_gg.conj(), "ee", bath.b_ee.conj(), "gg", n)]
        } else {
            match completion {
                DegenerateCompletion::Product => [product_ket("ee").unwrap(), product_ket("gg").unwrap()],
                DegenerateCompletion::Bell => [phi_plus(), phi_minus()],
            }
        };
        let [w3, w4] = if pq > 0.0 {
            let n = pq.sqrt();
            [ket(bath.b_eg, "eg", -bath.b_ge, "ge", n), ket(bath.b_ge.conj(), "eg", bath.b_eg.conj(), "ge", n)]
        } else {
            match completion {
                DegenerateCompletion::Product => [product_ket("eg").unwrap(), product_ket("ge").unwrap()],
                DegenerateCompletion::Bell => [psi_plus(), psi_minus()],
            }
        };
        Ok(Self { matrix, spectrum, eigenvectors: [w1, w2, w3, w4] })
    }
}
