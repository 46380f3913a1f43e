//! Conditional evolution: outcome sampling, state updates and trajectory
//! records.
//!
//! Every engine implements [`Unraveling`]. Trajectory `i` of an ensemble with
//! seed `s` draws from `ChaCha8Rng::seed_from_u64(s ^ i)`, so results do not
//! depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bathkit::TwoQubitBath;
use crate::densecore::{herm_eigvals, ComplexMatrix};
use crate::error::{Error, Result};
use crate::krausforge::{KrausKind, KrausSet};
use crate::quantmetrics::{MetricContext, MetricSnapshot, METRIC_LABELS};
use crate::states::product_ket;
use crate::superop::{innovation, jump_increment};

pub type TrajRng = ChaCha8Rng;

/// Allowed deviation of the outcome probabilities from a unit sum.
pub const PROBABILITY_SUM_TOL: f64 = 1e-6;

pub fn trajectory_rng(seed: u64, index: u64) -> TrajRng {
    ChaCha8Rng::seed_from_u64(seed ^ index)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalState {
    pub rho: ComplexMatrix,
    pub step_index: usize,
    pub last_outcome: String,
    pub last_probability: f64,
}

impl ConditionalState {
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        rho.validate_density(false)?;
        Ok(Self { rho, step_index: 0, last_outcome: "init".into(), last_probability: 1.0 })
    }
}

/// Result of one stochastic update.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub rho: ComplexMatrix,
    pub outcome: usize,
    pub probability: f64,
    /// Sum of all outcome probabilities before masking.
    pub total_probability: f64,
}

/// A stochastic one-step update rule over a fixed outcome alphabet.
pub trait Unraveling: Sync {
    fn alphabet(&self) -> Vec<String>;
    fn dim(&self) -> usize;
    fn advance(&self, rho: &ComplexMatrix, rng: &mut TrajRng) -> Result<StepOutcome>;
}

/// Inverse-CDF draw over `weights` with a single uniform. Zero-weight
/// entries are never selected.
pub fn sample_index(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

fn check_total(total: f64) -> Result<()> {
    if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
        return Err(Error::Contract(format!("outcome probabilities sum to {total}")));
    }
    Ok(())
}

fn normalize(m: ComplexMatrix) -> Result<ComplexMatrix> {
    let t = m.trace().re;
    if !(t > 0.0) {
        return Err(Error::Contract(format!("conditional state has trace {t}")));
    }
    Ok(m.hermitian_part().scale_real(1.0 / t))
}

impl Unraveling for KrausSet {
    fn alphabet(&self) -> Vec<String> {
        self.labels()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn advance(&self, rho: &ComplexMatrix, rng: &mut TrajRng) -> Result<StepOutcome> {
        let probs = self.probabilities(rho);
        let total: f64 = probs.iter().sum();
        check_total(total)?;
        let floor = self.suppression_floor();
        let masked: Vec<f64> = probs.iter().map(|&p| if p >= floor { p } else { 0.0 }).collect();
        if masked.iter().all(|&p| p == 0.0) {
            return Err(Error::Contract("every outcome is below the suppression floor".into()));
        }
        let outcome = sample_index(&masked, rng.random::<f64>());
        if probs[outcome] < floor {
            return Err(Error::Contract(format!("sampled suppressed outcome {}", self.labels()[outcome])));
        }
        let rho = normalize(self.apply_positive(outcome, rho))?;
        Ok(StepOutcome { rho, outcome, probability: probs[outcome], total_probability: total })
    }
}

/// Samples one outcome of `engine` and returns the renormalized successor.
pub fn step<U: Unraveling + ?Sized>(state: &ConditionalState, engine: &U, rng: &mut TrajRng) -> Result<ConditionalState> {
    let out = engine.advance(&state.rho, rng)?;
    Ok(ConditionalState {
        rho: out.rho,
        step_index: state.step_index + 1,
        last_outcome: engine.alphabet()[out.outcome].clone(),
        last_probability: out.probability,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RecordedStep {
    pub step: usize,
    pub outcome: String,
    pub probability: f64,
    pub metrics: MetricSnapshot,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<ComplexMatrix>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub index: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub steps: Vec<RecordedStep>,
    /// Smallest eigenvalue seen at any recorded step.
    pub min_eigenvalue: f64,
    /// Largest `|Σ℘ − 1|` over all steps.
    pub max_probability_defect: f64,
    /// Outcome label of every step, recorded or not.
    pub outcomes: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectoryOptions {
    pub n_steps: usize,
    pub record_every: usize,
    pub keep_states: bool,
}

impl TrajectoryOptions {
    pub fn new(n_steps: usize, record_every: usize) -> Self {
        Self { n_steps, record_every, keep_states: true }
    }

    fn check(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::Input("n_steps must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Input("record_every must be at least 1".into()));
        }
        Ok(())
    }

    fn records(&self, k: usize) -> bool {
        k.is_multiple_of(self.record_every) || k == self.n_steps
    }
}

/// Runs trajectory `index` of an ensemble seeded with `seed`.
pub fn run_trajectory<U: Unraveling + ?Sized>(
    initial: &ComplexMatrix,
    engine: &U,
    opts: TrajectoryOptions,
    seed: u64,
    index: u64,
    ctx: &MetricContext,
) -> Result<TrajectoryRecord> {
    opts.check()?;
    if initial.rows() != engine.dim() {
        return Err(Error::Layout(format!("initial state is {}x{}, engine acts on dimension {}", initial.rows(), initial.cols(), engine.dim())));
    }
    let wrap = |step: usize, e: Error| Error::Trajectory { trajectory: index, step, source: Box::new(e) };
    let alphabet = engine.alphabet();
    let mut rng = trajectory_rng(seed, index);
    let mut rho = initial.clone();
    let mut steps = Vec::with_capacity(opts.n_steps / opts.record_every + 2);
    let mut min_eigenvalue = f64::INFINITY;
    let mut max_defect: f64 = 0.0;
    let mut outcomes = Vec::with_capacity(opts.n_steps);
    let mut record = |k: usize, outcome: &str, p: f64, rho: &ComplexMatrix, min_eig: &mut f64| -> Result<()> {
        let ev = herm_eigvals(rho)?;
        *min_eig = min_eig.min(ev[0]);
        steps.push(RecordedStep {
            step: k,
            outcome: outcome.to_string(),
            probability: p,
            metrics: ctx.snapshot(rho)?,
            rho: opts.keep_states.then(|| rho.clone()),
        });
        Ok(())
    };
    record(0, "init", 1.0, &rho, &mut min_eigenvalue).map_err(|e| wrap(0, e))?;
    for k in 1..=opts.n_steps {
        let out = engine.advance(&rho, &mut rng).map_err(|e| wrap(k, e))?;
        max_defect = max_defect.max((out.total_probability - 1.0).abs());
        rho = out.rho;
        outcomes.push(out.outcome as u8);
        if opts.records(k) {
            record(k, &alphabet[out.outcome], out.probability, &rho, &mut min_eigenvalue).map_err(|e| wrap(k, e))?;
        }
    }
    Ok(TrajectoryRecord { index, seed, config_hash: None, steps, min_eigenvalue, max_probability_defect: max_defect, outcomes })
}

/// Runs `n_traj` trajectories in parallel; records are returned in index order.
pub fn run_ensemble<U: Unraveling + ?Sized>(
    initial: &ComplexMatrix,
    engine: &U,
    opts: TrajectoryOptions,
    seed: u64,
    n_traj: usize,
    ctx: &MetricContext,
) -> Result<Vec<TrajectoryRecord>> {
    if n_traj == 0 {
        return Err(Error::Input("n_traj must be at least 1".into()));
    }
    (0..n_traj as u64).into_par_iter().map(|i| run_trajectory(initial, engine, opts, seed, i, ctx)).collect()
}

/// Sum of `f(lo..hi)` by recursive halving in index order.
fn pairwise<T>(lo: usize, hi: usize, f: &impl Fn(usize) -> T, add: &impl Fn(T, T) -> T) -> T {
    if hi - lo == 1 {
        return f(lo);
    }
    let mid = lo + (hi - lo) / 2;
    add(pairwise(lo, mid, f, add), pairwise(mid, hi, f, add))
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub n_traj: usize,
    pub steps: Vec<usize>,
    /// Ensemble-mean state at each recorded step; empty without stored states.
    pub mean_rho: Vec<ComplexMatrix>,
    pub metric_mean: Vec<[f64; 8]>,
    pub metric_se: Vec<[f64; 8]>,
}

impl EnsembleSummary {
    pub fn labels() -> [&'static str; 8] {
        METRIC_LABELS
    }
}

/// Ensemble run that keeps only per-trajectory metrics; states are reduced
/// block by block in index order, then the block sums pairwise.
pub fn run_ensemble_reduced<U: Unraveling + ?Sized>(
    initial: &ComplexMatrix,
    engine: &U,
    opts: TrajectoryOptions,
    seed: u64,
    n_traj: usize,
    ctx: &MetricContext,
    block: usize,
) -> Result<(Vec<TrajectoryRecord>, EnsembleSummary)> {
    if n_traj == 0 {
        return Err(Error::Input("n_traj must be at least 1".into()));
    }
    let block = block.max(1);
    let opts = TrajectoryOptions { keep_states: true, ..opts };
    let mut records = Vec::with_capacity(n_traj);
    let mut block_sums: Vec<Vec<ComplexMatrix>> = Vec::new();
    let mut start = 0usize;
    while start < n_traj {
        let end = (start + block).min(n_traj);
        let mut chunk: Vec<TrajectoryRecord> = (start as u64..end as u64)
            .into_par_iter()
            .map(|i| run_trajectory(initial, engine, opts, seed, i, ctx))
            .collect::<Result<_>>()?;
        let n_rec = chunk[0].steps.len();
        let m = chunk.len();
        let sums = (0..n_rec)
            .map(|k| {
                pairwise(0, m, &|i| chunk[i].steps[k].rho.clone().unwrap(), &|mut a: ComplexMatrix, b| {
                    a += &b;
                    a
                })
            })
            .collect();
        block_sums.push(sums);
        for r in &mut chunk {
            for s in &mut r.steps {
                s.rho = None;
            }
        }
        records.extend(chunk);
        start = end;
    }
    let mut summary = summarize(&records)?;
    let n_rec = summary.steps.len();
    let nf = n_traj as f64;
    summary.mean_rho = (0..n_rec)
        .map(|k| {
            pairwise(0, block_sums.len(), &|b| block_sums[b][k].clone(), &|mut a: ComplexMatrix, b| {
                a += &b;
                a
            })
            .scale_real(1.0 / nf)
        })
        .collect();
    Ok((records, summary))
}

/// Mean and standard error per recorded step, summed pairwise over trajectory index.
pub fn summarize(records: &[TrajectoryRecord]) -> Result<EnsembleSummary> {
    let n = records.len();
    if n == 0 {
        return Err(Error::Input("no trajectories to summarize".into()));
    }
    let steps: Vec<usize> = records[0].steps.iter().map(|s| s.step).collect();
    if records.iter().any(|r| r.steps.len() != steps.len()) {
        return Err(Error::Contract("trajectories have different record grids".into()));
    }
    let nf = n as f64;
    let keep = records.iter().all(|r| r.steps.iter().all(|s| s.rho.is_some()));
    let mut mean_rho = Vec::new();
    let mut metric_mean = Vec::with_capacity(steps.len());
    let mut metric_se = Vec::with_capacity(steps.len());
    for k in 0..steps.len() {
        if keep {
            let sum = pairwise(0, n, &|i| records[i].steps[k].rho.clone().unwrap(), &|mut a: ComplexMatrix, b| {
                a += &b;
                a
            });
            mean_rho.push(sum.scale_real(1.0 / nf));
        }
        let add = |a: [f64; 16], b: [f64; 16]| {
            let mut out = a;
            for (o, x) in out.iter_mut().zip(b) {
                *o += x;
            }
            out
        };
        let moments = pairwise(
            0,
            n,
            &|i| {
                let row = records[i].steps[k].metrics.row();
                let mut m = [0.0; 16];
                for j in 0..8 {
                    m[j] = row[j];
                    m[8 + j] = row[j] * row[j];
                }
                m
            },
            &add,
        );
        let mut mean = [0.0; 8];
        let mut se = [0.0; 8];
        for j in 0..8 {
            mean[j] = moments[j] / nf;
            se[j] = if n > 1 {
                let var = ((moments[8 + j] - nf * mean[j] * mean[j]) / (nf - 1.0)).max(0.0);
                (var / nf).sqrt()
            } else {
                0.0
            };
        }
        metric_mean.push(mean);
        metric_se.push(se);
    }
    Ok(EnsembleSummary { n_traj: n, steps, mean_rho, metric_mean, metric_se })
}

/// Increment `Δρ` for `outcome` from the conditional difference equations.
///
/// Jump outcomes give `𝓖[K½]ρ`. A no-jump outcome `K = aI + γΔt·B` gives
/// `γΔt·𝓜[B/a]ρ` and needs `|a|² > γΔt`.
pub fn diff_step(rho: &ComplexMatrix, kraus: &KrausSet, outcome: usize) -> Result<ComplexMatrix> {
    if kraus.is_mixed() {
        return Err(Error::Input("difference equations need a pure-bath Kraus set".into()));
    }
    let op = kraus
        .operators
        .get(outcome)
        .ok_or_else(|| Error::Input(format!("outcome {outcome} out of range")))?;
    let g = kraus.gamma_dt;
    match op.kind {
        KrausKind::Jump => {
            if op.suppressed {
                return Err(Error::Regime(format!("outcome {} has no jump operator", op.label)));
            }
            jump_increment(&op.half_order, rho)
                .ok_or_else(|| Error::Regime(format!("outcome {} has zero weight on this state", op.label)))
        }
        KrausKind::NoJump => {
            let a = op.identity_coeff;
            if a.norm_sqr() <= g {
                return Err(Error::Regime(format!(
                    "outcome {}: identity amplitude |a|^2 = {:.3e} is not above gamma_dt = {g}",
                    op.label,
                    a.norm_sqr()
                )));
            }
            Ok(innovation(&op.first_order.scale(1.0 / a), rho).scale_real(g))
        }
        KrausKind::Diffusive => Err(Error::Input(format!("outcome {} is diffusive; no difference equation is provided", op.label))),
    }
}

/// Normalized Kraus update minus the input state, for comparison with [`diff_step`].
pub fn kraus_increment(rho: &ComplexMatrix, kraus: &KrausSet, outcome: usize) -> Result<ComplexMatrix> {
    let next = normalize(kraus.apply_positive(outcome, rho))?;
    Ok(&next - rho)
}

/// Unnormalized `𝓙[L₁]ρ` (`which = 1`) or `𝓙[L₂]ρ` (`which = 2`) in units of γ,
/// assembled from matrix-element coefficients.
pub fn apply_jump_superoperator(rho: &ComplexMatrix, which: u8, bath: &TwoQubitBath) -> Result<ComplexMatrix> {
    if rho.rows() != 4 || rho.cols() != 4 {
        return Err(Error::Input(format!("two-atom state expected, got {}x{}", rho.rows(), rho.cols())));
    }
    if bath.p_psi > 0.0 {
        return Err(Error::Input("jump coefficients need a pure Φ-block bath".into()));
    }
    let (ee, eg, ge, gg) = (0, 1, 2, 3);
    let r = |a: usize, b: usize| rho[(a, b)];
    let (bee, bgg) = (bath.b_ee, bath.b_gg);
    let w2 = bee.conj() * (bgg * r(ee, gg) + bee * r(gg, gg)) + bgg.conj() * (bee * r(ee, gg).conj() + bgg * r(ee, ee));
    let (w1, w3, other) = match which {
        1 => (r(eg, eg), bee.conj() * r(eg, gg) + bgg.conj() * r(ee, eg).conj(), "ge"),
        2 => (r(ge, ge), bee.conj() * r(ge, gg) + bgg.conj() * r(ee, ge).conj(), "eg"),
        _ => return Err(Error::Input(format!("jump index must be 1 or 2, got {which}"))),
    };
    let psi_b = bath.phi_vector();
    let o = product_ket(other).unwrap();
    let cross = psi_b.outer(&o).scale(w3);
    let mut out = psi_b.projector().scale(w1);
    out.axpy(w2, &o.projector());
    out += &cross;
    out += &cross.dagger();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bathkit::{GhzBath, Sign};
    use crate::densecore::{kron, DimLayout, C64, ZERO};
    use crate::krausforge::{bell_basis_kraus, ghz_local_kraus, lindblad_ops, local_energy_kraus_phi, SystemSpec};
    use crate::quantmetrics::fidelity;
    use crate::states::{bloch_ket, phi_minus, phi_plus};
    use crate::superop::jump;

    fn bell() -> TwoQubitBath {
        TwoQubitBath::near_bell(Sign::Plus, 0.0).unwrap()
    }

    fn ctx2() -> MetricContext {
        MetricContext::new(DimLayout::qubits(2), vec![]).unwrap()
    }

    fn random_state(seed: u64, d: usize) -> ComplexMatrix {
        let mut rng = trajectory_rng(seed, 0);
        let mut a = ComplexMatrix::zeros(d, d);
        for z in a.as_mut_slice() {
            *z = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        let m = a.matmul_dagger(&a);
        let t = m.trace().re;
        m.scale_real(1.0 / t)
    }

    #[test]
    fn probabilities_for_ground_state() {
        let sys = SystemSpec::two_atoms(0.01).unwrap();
        let set = local_energy_kraus_phi(&sys, &bell()).unwrap();
        let p = set.probabilities(&product_ket("gg").unwrap().projector());
        for (a, b) in p.iter().zip([0.49, 0.50, 0.005, 0.005]) {
            assert!((a - b).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn dark_state_is_unchanged() {
        let sys = SystemSpec::two_atoms(0.01).unwrap();
        let set = local_energy_kraus_phi(&sys, &bell()).unwrap();
        let start = ConditionalState::new(phi_minus().projector()).unwrap();
        let mut rng = trajectory_rng(3, 0);
        let mut s = start.clone();
        for _ in 0..20 {
            s = step(&s, &set, &mut rng).unwrap();
            assert!(["ee", "gg"].contains(&s.last_outcome.as_str()));
            assert!((s.last_probability - 0.5).abs() < 1e-12);
            assert!(s.rho.max_abs_diff(&start.rho) < 1e-12);
        }
        assert_eq!(s.step_index, 20);
    }

    #[test]
    fn jump_from_eg_lands_in_phi_plus() {
        let sys = SystemSpec::two_atoms(0.01).unwrap();
        let set = local_energy_kraus_phi(&sys, &bell()).unwrap();
        let rho = product_ket("eg").unwrap().projector();
        let p = set.probabilities(&rho);
        assert!((p[2] - 0.01).abs() < 1e-15);
        let next = normalize(set.apply(2, &rho)).unwrap();
        assert!((fidelity(&next, &phi_plus()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampler_skips_masked_entries() {
        assert_eq!(sample_index(&[0.0, 0.5, 0.0, 0.5], 0.0), 1);
        assert_eq!(sample_index(&[0.0, 0.5, 0.0, 0.5], 0.75), 3);
        assert_eq!(sample_index(&[0.2, 0.3, 0.0], 0.999_999_999), 1);
    }

    #[test]
    fn run_is_deterministic_and_rejects_zero_steps() {
        let sys = SystemSpec::two_atoms(0.01).unwrap();
        let set = local_energy_kraus_phi(&sys, &bell()).unwrap();
        let rho = ComplexMatrix::identity(4).scale_real(0.25);
        let opts = TrajectoryOptions::new(200, 7);
        let a = run_trajectory(&rho, &set, opts, 11, 4, &ctx2()).unwrap();
        let b = run_trajectory(&rho, &set, opts, 11, 4, &ctx2()).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        for (x, y) in a.steps.iter().zip(&b.steps) {
            assert_eq!(x.rho, y.rho);
        }
        assert_eq!(a.steps.last().unwrap().step, 200);
        assert_eq!(a.steps[0].outcome, "init");
        assert!(a.max_probability_defect < 1e-9);
        let zero = TrajectoryOptions::new(0, 1);
        assert!(matches!(run_trajectory(&rho, &set, zero, 1, 0, &ctx2()), Err(Error::Input(_))));
    }

    #[test]
    fn summary_is_independent_of_thread_count() {
        let sys = SystemSpec::two_atoms(0.01).unwrap();
        let set = local_energy_kraus_phi(&sys, &TwoQubitBath::near_bell(Sign::Plus, 0.1).unwrap()).unwrap();
        let rho = ComplexMatrix::identity(4).scale_real(0.25);
        let opts = TrajectoryOptions::new(50, 10);
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| summarize(&run_ensemble(&rho, &set, opts, 5, 17, &ctx2()).unwrap()).unwrap())
        };
        let (a, b) = (run(1), run(4));
        for (x, y) in a.mean_rho.iter().zip(&b.mean_rho) {
            assert!(x.max_abs_diff(y) <= 1e-13);
        }
        assert_eq!(a.metric_mean[3][4].to_bits(), b.metric_mean[3][4].to_bits());
        let (_, c) = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| run_ensemble_reduced(&rho, &set, opts, 5, 17, &ctx2(), 4).unwrap());
        for (x, y) in a.mean_rho.iter().zip(&c.mean_rho) {
            assert!(x.max_abs_diff(y) <= 1e-13);
        }
    }

    #[test]
    fn diff_step_jump_is_exact() {
        let sys = SystemSpec::two_atoms(0.01).unwrap();
        let set = local_energy_kraus_phi(&sys, &bell()).unwrap();
        let rho = random_state(9, 4);
        let d = diff_step(&rho, &set, 2).unwrap();
        let k = kraus_increment(&rho, &set, 2).unwrap();
        assert!(d.max_abs_diff(&k) < 1e-12);
    }

    #[test]
    fn diff_step_no_jump_within_truncation() {
        let g = 0.01;
        let sys = SystemSpec::two_atoms(g).unwrap();
        let set = local_energy_kraus_phi(&sys, &bell()).unwrap();
        let rho = random_state(10, 4);
        let d = diff_step(&rho, &set, 0).unwrap();
        let k = kraus_increment(&rho, &set, 0).unwrap();
        assert!(d.max_abs_diff(&k) <= 10.0 * g * g);
    }

    #[test]
    fn diff_step_regime_errors() {
        let g = 0.01;
        let sys = SystemSpec::two_atoms(g).unwrap();
        let small = TwoQubitBath::new(C64::new(0.05, 0.0), C64::new((1.0f64 - 0.0025).sqrt(), 0.0), ZERO, ZERO).unwrap();
        let set = local_energy_kraus_phi(&sys, &small).unwrap();
        let rho = random_state(1, 4);
        assert!(matches!(diff_step(&rho, &set, 0), Err(Error::Regime(_))));
        assert!(diff_step(&rho, &set, 1).is_ok());
        let bells = bell_basis_kraus(&sys, &bell()).unwrap();
        assert!(matches!(diff_step(&rho, &bells, 1), Err(Error::Regime(_))));
    }

    #[test]
    fn ghz_jump_has_no_bath_amplitudes() {
        let sys = SystemSpec::three_atoms(0.01).unwrap();
        let set = ghz_local_kraus(&sys, &GhzBath::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap()).unwrap();
        let v = kron(&kron(&bloch_ket(1.0, 0.3), &bloch_ket(2.0, 1.0)), &bloch_ket(0.5, 2.0));
        let rho = v.projector();
        let d = diff_step(&rho, &set, 2).unwrap();
        let c3d = sys.lowering_ops()[2].dagger();
        let direct = jump_increment(&c3d, &rho).unwrap();
        assert!(d.max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn jump_superoperator_matches_sandwich() {
        let sys = SystemSpec::two_atoms(0.01).unwrap();
        let n = 0.87f64.sqrt();
        let bath = TwoQubitBath::new(C64::new(0.3, 0.2) / n, C64::new(-0.5, 0.7) / n, ZERO, ZERO).unwrap();
        let [l1, l2, _, _] = lindblad_ops(&bath, &sys).unwrap();
        for seed in 0..5 {
            let rho = random_state(seed, 4);
            assert!(apply_jump_superoperator(&rho, 1, &bath).unwrap().max_abs_diff(&jump(&l1, &rho)) < 1e-12);
            assert!(apply_jump_superoperator(&rho, 2, &bath).unwrap().max_abs_diff(&jump(&l2, &rho)) < 1e-12);
        }
        let ge = product_ket("ge").unwrap().projector();
        assert_eq!(apply_jump_superoperator(&ge, 1, &bath).unwrap().max_abs(), 0.0);
        let eg = product_ket("eg").unwrap().projector();
        let out = apply_jump_superoperator(&eg, 1, &bath).unwrap();
        assert!(out.max_abs_diff(&bath.phi_vector().projector()) < 1e-15);
        assert!(apply_jump_superoperator(&eg, 3, &bath).is_err());
    }
}
