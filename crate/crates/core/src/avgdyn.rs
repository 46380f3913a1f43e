//! Unconditional dynamics and coarse-grained stochastic master equations.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;

use crate::bathkit::{BathSpec, BlockContent, TwoQubitBath};
use crate::densecore::{herm_eigvals, kron, partial_trace, ComplexMatrix, DimLayout, C64, I};
use crate::error::{Error, Result};
use crate::krausforge::{bath_lindblad_ops, effective_hamiltonian, interaction, lindblad_ops, SystemSpec};
use crate::superop::{innovation, jump, lindbladian, normalized_jump, quadrature};
use crate::trajsim::{ConditionalState, StepOutcome, TrajRng, Unraveling};

/// Most negative eigenvalue tolerated by the integrator.
pub const POSITIVITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LindbladModel {
    pub lindblads: Vec<ComplexMatrix>,
    pub h_eff: ComplexMatrix,
    pub gamma_dt: f64,
}

impl LindbladModel {
    pub fn new(lindblads: Vec<ComplexMatrix>, gamma_dt: f64) -> Result<Self> {
        let Some(first) = lindblads.first() else {
            return Err(Error::Input("a Lindblad model needs at least one operator".into()));
        };
        let d = first.rows();
        if lindblads.iter().any(|l| l.rows() != d || l.cols() != d) {
            return Err(Error::Layout("Lindblad operators have mismatched shapes".into()));
        }
        let h_eff = effective_hamiltonian(&lindblads);
        Ok(Self { lindblads, h_eff, gamma_dt })
    }

    pub fn from_bath(bath: &BathSpec, sys: &SystemSpec) -> Result<Self> {
        Self::new(bath_lindblad_ops(bath, sys)?, sys.gamma_dt())
    }

    pub fn dim(&self) -> usize {
        self.h_eff.rows()
    }
}

/// `Σ D[L]ρ`
pub fn lindblad_rhs(rho: &ComplexMatrix, model: &LindbladModel) -> ComplexMatrix {
    lindbladian(&model.lindblads, rho)
}

/// `−i(H_eff ρ − ρ H_eff†) + Σ J[L]ρ`
pub fn lindblad_rhs_split(rho: &ComplexMatrix, model: &LindbladModel) -> ComplexMatrix {
    let hr = model.h_eff.matmul(rho);
    let mut out = (&hr - &rho.matmul_dagger(&model.h_eff)).scale(-I);
    for l in &model.lindblads {
        out += &jump(l, rho);
    }
    out
}

/// One collision with the bath: `Tr_B[U(ρ ⊗ ρ_B)U†]` for the three-term
/// unitary, kept to order `γΔt` and renormalized.
pub fn collision_map(rho: &ComplexMatrix, bath: &BathSpec, sys: &SystemSpec) -> Result<ComplexMatrix> {
    let d = sys.dim();
    if rho.rows() != d || rho.cols() != d {
        return Err(Error::Layout(format!("state is {}x{}, system dimension is {d}", rho.rows(), rho.cols())));
    }
    if bath.n_qubits() != sys.n_ops() {
        return Err(Error::Layout(format!("bath has {} qubits, system couples to {}", bath.n_qubits(), sys.n_ops())));
    }
    let g = sys.gamma_dt();
    let h = interaction(sys)?;
    let x = kron(rho, &bath.density_matrix());
    let mut out = x.clone();
    out.axpy(-I * g.sqrt(), &h.commutator(&x));
    out.axpy(C64::new(g, 0.0), &h.matmul(&x).matmul(&h));
    out.axpy(C64::new(-0.5 * g, 0.0), &h.matmul(&h).anticommutator(&x));
    let mut dims = sys.layout().dims().to_vec();
    let n_sys = dims.len();
    dims.extend(std::iter::repeat_n(2, bath.n_qubits()));
    let layout = DimLayout::new(dims)?;
    let keep: Vec<usize> = (0..n_sys).collect();
    let reduced = partial_trace(&out, &layout, &keep)?;
    let t = reduced.trace().re;
    Ok(reduced.hermitian_part().scale_real(1.0 / t))
}

fn rk4(rho: &ComplexMatrix, model: &LindbladModel, h: f64) -> ComplexMatrix {
    let f = |r: &ComplexMatrix| lindblad_rhs(r, model);
    let k1 = f(rho);
    let mut y = rho.clone();
    y.axpy(C64::new(h / 2.0, 0.0), &k1);
    let k2 = f(&y);
    let mut y = rho.clone();
    y.axpy(C64::new(h / 2.0, 0.0), &k2);
    let k3 = f(&y);
    let mut y = rho.clone();
    y.axpy(C64::new(h, 0.0), &k3);
    let k4 = f(&y);
    let mut out = rho.clone();
    out.axpy(C64::new(h / 6.0, 0.0), &k1);
    out.axpy(C64::new(h / 3.0, 0.0), &k2);
    out.axpy(C64::new(h / 3.0, 0.0), &k3);
    out.axpy(C64::new(h / 6.0, 0.0), &k4);
    let out = out.hermitian_part();
    let t = out.trace().re;
    out.scale_real(1.0 / t)
}

fn check_positive(rho: &ComplexMatrix, step: usize) -> Result<()> {
    let min = herm_eigvals(rho)?[0];
    if min < -POSITIVITY_TOL {
        return Err(Error::Integration(format!("eigenvalue {min:.3e} at step {step}; reduce the integration step")));
    }
    Ok(())
}

/// RK4 integration on the `γΔt` grid with `substeps` RK4 steps per grid
/// interval. Returns `n_steps + 1` states including `rho0`.
pub fn integrate_me(rho0: &ComplexMatrix, model: &LindbladModel, n_steps: usize, substeps: usize) -> Result<Vec<ComplexMatrix>> {
    if substeps == 0 {
        return Err(Error::Input("substeps must be at least 1".into()));
    }
    if rho0.rows() != model.dim() {
        return Err(Error::Layout("initial state does not match the model dimension".into()));
    }
    let h = model.gamma_dt / substeps as f64;
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut rho = rho0.clone();
    out.push(rho.clone());
    for k in 1..=n_steps {
        for _ in 0..substeps {
            rho = rk4(&rho, model, h);
        }
        check_positive(&rho, k)?;
        out.push(rho.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyStateOptions {
    /// RK4 step in units of `1/γ`.
    pub dt: f64,
    pub max_steps: usize,
    /// Convergence threshold on `max |𝓛ρ|`.
    pub tol: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self { dt: 0.05, max_steps: 2_000_000, tol: 1e-12 }
    }
}

/// Long-time limit of the master equation from `rho0`.
pub fn steady_state(model: &LindbladModel, rho0: &ComplexMatrix, opts: SteadyStateOptions) -> Result<ComplexMatrix> {
    let mut rho = rho0.clone();
    for k in 0..opts.max_steps {
        if lindblad_rhs(&rho, model).max_abs() < opts.tol {
            check_positive(&rho, k)?;
            return Ok(rho);
        }
        rho = rk4(&rho, model, opts.dt);
        if k % 1000 == 0 {
            check_positive(&rho, k)?;
        }
    }
    Err(Error::Integration(format!("no steady state within {} steps of {}", opts.max_steps, opts.dt)))
}

/// Three-outcome jump unraveling: no jump (`"0"`) or a jump by one of two operators.
#[derive(Debug, Clone)]
pub struct JumpSme {
    pub jumps: [ComplexMatrix; 2],
    pub gamma_dt: f64,
    no_jump_generator: ComplexMatrix,
    no_jump_kraus: ComplexMatrix,
}

impl JumpSme {
    pub fn new(jumps: [ComplexMatrix; 2], gamma_dt: f64) -> Self {
        let no_jump_generator = &jumps[0].dagger().matmul(&jumps[0]) + &jumps[1].dagger().matmul(&jumps[1]);
        let d = no_jump_generator.rows();
        let no_jump_kraus = &ComplexMatrix::identity(d) - &no_jump_generator.scale_real(0.5 * gamma_dt);
        Self { jumps, gamma_dt, no_jump_generator, no_jump_kraus }
    }

    fn phi_ops(bath: &TwoQubitBath, sys: &SystemSpec) -> Result<[ComplexMatrix; 4]> {
        if bath.content() != BlockContent::Phi {
            return Err(Error::Input("the jump SME needs a pure Φ-block bath".into()));
        }
        lindblad_ops(bath, sys)
    }

    /// Jumps by `L₁` and `L₂`.
    pub fn local(bath: &TwoQubitBath, sys: &SystemSpec) -> Result<Self> {
        let [l1, l2, _, _] = Self::phi_ops(bath, sys)?;
        Ok(Self::new([l1, l2], sys.gamma_dt()))
    }

    /// Jumps by `L± = (L₁ ± L₂)/√2`.
    pub fn bell(bath: &TwoQubitBath, sys: &SystemSpec) -> Result<Self> {
        let [l1, l2, _, _] = Self::phi_ops(bath, sys)?;
        let plus = (&l1 + &l2).scale_real(FRAC_1_SQRT_2);
        let minus = (&l1 - &l2).scale_real(FRAC_1_SQRT_2);
        Ok(Self::new([plus, minus], sys.gamma_dt()))
    }

    /// `[℘₀, ℘₁, ℘₂]`
    pub fn probabilities(&self, rho: &ComplexMatrix) -> [f64; 3] {
        let g = self.gamma_dt;
        let p1 = g * self.jumps[0].dagger().matmul(&self.jumps[0]).trace_product(rho).re;
        let p2 = g * self.jumps[1].dagger().matmul(&self.jumps[1]).trace_product(rho).re;
        [1.0 - p1 - p2, p1, p2]
    }

    /// Unnormalized no-jump map `ρ − (γΔt/2){ΣL†L, ρ}`.
    pub fn no_jump_map(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = rho.clone();
        out.axpy(C64::new(-0.5 * self.gamma_dt, 0.0), &self.no_jump_generator.anticommutator(rho));
        out
    }

    /// `K₀ = I − (γΔt/2)ΣL†L`
    pub fn no_jump_operator(&self) -> &ComplexMatrix {
        &self.no_jump_kraus
    }
}

impl Unraveling for JumpSme {
    fn alphabet(&self) -> Vec<String> {
        ["0", "1", "2"].map(String::from).to_vec()
    }

    fn dim(&self) -> usize {
        self.no_jump_generator.rows()
    }

    fn advance(&self, rho: &ComplexMatrix, rng: &mut TrajRng) -> Result<StepOutcome> {
        let p = self.probabilities(rho);
        if p[1] + p[2] >= 1.0 {
            return Err(Error::Regime(format!("jump probability {} is not below 1; gamma_dt too large", p[1] + p[2])));
        }
        let outcome = crate::trajsim::sample_index(&p, rng.random::<f64>());
        let next = match outcome {
            0 => {
                let k0 = &self.no_jump_kraus;
                let m = k0.matmul(rho).matmul_dagger(k0);
                let t = m.trace().re;
                m.hermitian_part().scale_real(1.0 / t)
            }
            j => normalized_jump(&self.jumps[j - 1], rho)
                .ok_or_else(|| Error::Contract("sampled a jump with zero weight".into()))?
                .hermitian_part(),
        };
        Ok(StepOutcome { rho: next, outcome, probability: p[outcome], total_probability: p.iter().sum() })
    }
}

pub fn jump_sme_step(state: &ConditionalState, sme: &JumpSme, rng: &mut TrajRng) -> Result<ConditionalState> {
    crate::trajsim::step(state, sme, rng)
}

/// Single-channel diffusive unraveling from averaging the second bath
/// qubit's result in the XZ basis. Outcomes are `"+"` and `"-"`.
#[derive(Debug, Clone)]
pub struct DiffusiveSme {
    pub lindblads: Vec<ComplexMatrix>,
    /// `−i(b_gg* L₁ + b_ee* L₂)`
    pub l_diff: ComplexMatrix,
    pub gamma_dt: f64,
}

/// One diffusive increment.
#[derive(Debug, Clone)]
pub struct DiffusiveDraw {
    pub plus: bool,
    pub p_plus: f64,
    /// `ΔW = ±√Δt − Δt⟨L + L†⟩`
    pub dw: f64,
    pub rho: ComplexMatrix,
}

impl DiffusiveSme {
    pub fn new(bath: &TwoQubitBath, sys: &SystemSpec) -> Result<Self> {
        if bath.content() != BlockContent::Phi {
            return Err(Error::Input("the diffusive SME needs a pure Φ-block bath".into()));
        }
        let [l1, l2, _, _] = lindblad_ops(bath, sys)?;
        let mut l_diff = l1.scale(bath.b_gg.conj());
        l_diff.axpy(bath.b_ee.conj(), &l2);
        let l_diff = l_diff.scale(-I);
        Ok(Self { lindblads: vec![l1, l2], l_diff, gamma_dt: sys.gamma_dt() })
    }

    /// `℘₊ = ½(1 + √Δt⟨L + L†⟩)`
    pub fn p_plus(&self, rho: &ComplexMatrix) -> Result<f64> {
        let s = self.gamma_dt.sqrt() * quadrature(&self.l_diff, rho);
        if s.abs() >= 1.0 {
            return Err(Error::Regime(format!("|√Δt⟨L + L†⟩| = {} is not below 1", s.abs())));
        }
        Ok(0.5 * (1.0 + s))
    }

    /// Update for a given sign: `Δρ = Δt ΣD[L]ρ + ΔW·M[L_diff]ρ`, renormalized.
    pub fn update(&self, rho: &ComplexMatrix, plus: bool) -> (f64, ComplexMatrix) {
        let g = self.gamma_dt;
        let x = quadrature(&self.l_diff, rho);
        let dw = if plus { g.sqrt() } else { -g.sqrt() } - g * x;
        let mut next = rho.clone();
        next.axpy(C64::new(g, 0.0), &lindbladian(&self.lindblads, rho));
        next.axpy(C64::new(dw, 0.0), &innovation(&self.l_diff, rho));
        let next = next.hermitian_part();
        let t = next.trace().re;
        (dw, next.scale_real(1.0 / t))
    }

    pub fn draw(&self, rho: &ComplexMatrix, rng: &mut TrajRng) -> Result<DiffusiveDraw> {
        let p_plus = self.p_plus(rho)?;
        let plus = rng.random::<f64>() < p_plus;
        let (dw, rho) = self.update(rho, plus);
        Ok(DiffusiveDraw { plus, p_plus, dw, rho })
    }
}

impl Unraveling for DiffusiveSme {
    fn alphabet(&self) -> Vec<String> {
        vec!["+".into(), "-".into()]
    }

    fn dim(&self) -> usize {
        self.l_diff.rows()
    }

    fn advance(&self, rho: &ComplexMatrix, rng: &mut TrajRng) -> Result<StepOutcome> {
        let d = self.draw(rho, rng)?;
        let (outcome, probability) = if d.plus { (0, d.p_plus) } else { (1, 1.0 - d.p_plus) };
        Ok(StepOutcome { rho: d.rho, outcome, probability, total_probability: 1.0 })
    }
}

pub fn diffusive_sme_step(state: &ConditionalState, sme: &DiffusiveSme, rng: &mut TrajRng) -> Result<ConditionalState> {
    crate::trajsim::step(state, sme, rng)
}
