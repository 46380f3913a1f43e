//! Scenario configs, experiment runs and their artifacts.
//!
//! Configs are strict JSON; unknown keys are rejected with the path of the
//! offending field. The config hash is the SHA-256 of the canonical JSON
//! with `outputs` removed.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::avgdyn::{integrate_me, DiffusiveSme, JumpSme, LindbladModel};
use crate::bathkit::{BathSpec, GhzBath, Sign, TwoQubitBath};
use crate::densecore::{ComplexMatrix, DimLayout, C64};
use crate::error::{Error, Result};
use crate::krausforge::{kraus_set, Basis, DegenerateCompletion, EffectiveHamiltonian, KrausSet, SystemSpec};
use crate::quantmetrics::{fidelity, MetricContext, METRIC_LABELS};
use crate::states::{named_density, product_ket, two_qubit_dictionary};
use crate::trajsim::{run_ensemble_reduced, EnsembleSummary, TrajectoryOptions, TrajectoryRecord, Unraveling};

/// Fidelity needed to attach a dictionary name to a conditional state.
pub const NAMING_FIDELITY: f64 = 1.0 - 1e-9;
/// Trajectories simulated per reduction block.
const BLOCK: usize = 64;

/// Complex amplitude written as a number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Pair([f64; 2]),
}

impl Amplitude {
    pub fn value(self) -> C64 {
        match self {
            Amplitude::Real(x) => C64::new(x, 0.0),
            Amplitude::Pair([re, im]) => C64::new(re, im),
        }
    }
}

impl Serialize for Amplitude {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let z = self.value();
        [z.re, z.im].serialize(s)
    }
}

fn zero_amp() -> Amplitude {
    Amplitude::Pair([0.0, 0.0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    TwoAtoms {},
    ThreeAtoms {},
    CustomOps { dims: Vec<usize>, lowering_ops: Vec<Vec<Vec<Amplitude>>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignConfig {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BathConfig {
    TwoQubit {
        #[serde(default = "zero_amp")]
        b_ee: Amplitude,
        #[serde(default = "zero_amp")]
        b_gg: Amplitude,
        #[serde(default = "zero_amp")]
        b_eg: Amplitude,
        #[serde(default = "zero_amp")]
        b_ge: Amplitude,
    },
    NearBell { sign: SignConfig, epsilon: f64 },
    Ghz { b_eee: Amplitude, b_ggg: Amplitude },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Kraus,
    JumpSme,
    DiffusiveSme,
    Me,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Kraus => "kraus",
            Engine::JumpSme => "jump-sme",
            Engine::DiffusiveSme => "diffusive-sme",
            Engine::Me => "me",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Named(String),
    Matrix {
        matrix: Vec<Vec<Amplitude>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "yes")]
    pub trajectory_csv: bool,
    #[serde(default)]
    pub trajectory_json: bool,
    #[serde(default = "yes")]
    pub summary_csv: bool,
}

fn default_out_dir() -> String {
    "out".into()
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out_dir(), trajectory_csv: true, trajectory_json: false, summary_csv: true }
    }
}

fn default_basis() -> Basis {
    Basis::LocalZz
}
fn default_engine() -> Engine {
    Engine::Kraus
}
fn default_gamma_dt() -> f64 {
    0.01
}
fn default_n_steps() -> usize {
    5000
}
fn default_n_traj() -> usize {
    200
}
fn default_one() -> usize {
    1
}
fn default_initial() -> InitialState {
    InitialState::Named("maximally-mixed".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: SystemConfig,
    pub bath: BathConfig,
    #[serde(default = "default_basis")]
    pub basis: Basis,
    #[serde(default = "default_engine")]
    pub engine: Engine,
    #[serde(default = "default_gamma_dt")]
    pub gamma_dt: f64,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_initial")]
    pub initial_state: InitialState,
    #[serde(default = "default_one")]
    pub record_every: usize,
    #[serde(default = "default_one")]
    pub me_substeps: usize,
    #[serde(default)]
    pub completion: DegenerateCompletion,
    #[serde(default)]
    pub outputs: OutputConfig,
}

/// Parses and validates a config.
pub fn parse_config(text: &[u8]) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_slice(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(format!("{path}: {}", e.into_inner()))
    })?;
    cfg.build()?;
    Ok(cfg)
}

fn matrix_from(rows: &[Vec<Amplitude>], what: &str) -> Result<ComplexMatrix> {
    let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|a| a.value()).collect()).collect();
    ComplexMatrix::from_rows(&rows).map_err(|e| Error::Config(format!("{what}: {e}")))
}

fn cfg_err(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Config(format!("{path}: {other}")),
    }
}

/// Everything a run needs, resolved from a config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub system: SystemSpec,
    pub bath: BathSpec,
    pub initial: ComplexMatrix,
    pub metrics: MetricContext,
    pub dictionary: Vec<(String, ComplexMatrix)>,
    pub warnings: Vec<String>,
}

impl ScenarioConfig {
    fn system_spec(&self) -> Result<SystemSpec> {
        let g = self.gamma_dt;
        match &self.system {
            SystemConfig::TwoAtoms {} => SystemSpec::two_atoms(g),
            SystemConfig::ThreeAtoms {} => SystemSpec::three_atoms(g),
            SystemConfig::CustomOps { dims, lowering_ops } => {
                let layout = DimLayout::new(dims.clone())?;
                let ops = lowering_ops
                    .iter()
                    .enumerate()
                    .map(|(k, m)| matrix_from(m, &format!("system.lowering_ops[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                SystemSpec::new(layout, ops, g)
            }
        }
        .map_err(cfg_err("gamma_dt/system"))
    }

    fn bath_spec(&self) -> Result<BathSpec> {
        match &self.bath {
            BathConfig::TwoQubit { b_ee, b_gg, b_eg, b_ge } => {
                TwoQubitBath::new(b_ee.value(), b_gg.value(), b_eg.value(), b_ge.value()).map(BathSpec::TwoQubit)
            }
            BathConfig::NearBell { sign, epsilon } => {
                let s = if *sign == SignConfig::Plus { Sign::Plus } else { Sign::Minus };
                TwoQubitBath::near_bell(s, *epsilon).map(BathSpec::TwoQubit)
            }
            BathConfig::Ghz { b_eee, b_ggg } => GhzBath::new(b_eee.value(), b_ggg.value()).map(BathSpec::Ghz),
        }
        .map_err(cfg_err("bath"))
    }

    fn dictionary(&self, sys: &SystemSpec) -> Vec<(String, ComplexMatrix)> {
        let n = sys.layout().len();
        let qubits = sys.layout().dims().iter().all(|&d| d == 2);
        let mut dict = Vec::new();
        if qubits && n == 2 {
            dict = two_qubit_dictionary();
            if let BathConfig::NearBell { epsilon, .. } = self.bath {
                if epsilon > 0.0 {
                    for (sign, tag) in [(Sign::Plus, "+"), (Sign::Minus, "-")] {
                        let v = TwoQubitBath::near_bell(sign, epsilon).unwrap().phi_vector();
                        dict.push((format!("Phi{tag}({epsilon})"), v));
                    }
                }
            }
        } else if qubits {
            for idx in 0..(1usize << n) {
                let label: String = (0..n).map(|b| if idx >> (n - 1 - b) & 1 == 0 { 'e' } else { 'g' }).collect();
                dict.push((label.clone(), product_ket(&label).unwrap()));
            }
        }
        dict
    }

    fn initial_state(&self, sys: &SystemSpec, dict: &[(String, ComplexMatrix)]) -> Result<ComplexMatrix> {
        let d = sys.dim();
        let rho = match &self.initial_state {
            InitialState::Named(name) => {
                let qubits = sys.layout().dims().iter().all(|&x| x == 2);
                let from_dict = dict.iter().find(|(l, _)| l == name).map(|(_, v)| v.projector());
                match from_dict.or_else(|| qubits.then(|| named_density(name, sys.layout().len())).flatten()) {
                    Some(r) => r,
                    None if name == "maximally-mixed" => ComplexMatrix::identity(d).scale_real(1.0 / d as f64),
                    None => return Err(Error::Config(format!("initial_state: unknown state name {name:?}"))),
                }
            }
            InitialState::Matrix { matrix } => matrix_from(matrix, "initial_state.matrix")?,
        };
        if rho.rows() != d || rho.cols() != d {
            return Err(Error::Config(format!("initial_state: {}x{} matrix for system dimension {d}", rho.rows(), rho.cols())));
        }
        rho.validate_density(true).map_err(cfg_err("initial_state"))?;
        Ok(rho)
    }

    /// Resolves and cross-checks every field.
    pub fn build(&self) -> Result<Scenario> {
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps: must be at least 1".into()));
        }
        if self.n_traj == 0 {
            return Err(Error::Config("n_traj: must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every: must be at least 1".into()));
        }
        if self.me_substeps == 0 {
            return Err(Error::Config("me_substeps: must be at least 1".into()));
        }
        if self.gamma_dt <= 0.0 {
            return Err(Error::Config(format!("gamma_dt: {} must be positive", self.gamma_dt)));
        }
        let system = self.system_spec()?;
        let bath = self.bath_spec()?;
        if bath.n_qubits() != system.n_ops() {
            return Err(Error::Config(format!(
                "bath: {}-qubit bath for a system with {} lowering operators",
                bath.n_qubits(),
                system.n_ops()
            )));
        }
        match (&bath, self.basis, self.engine) {
            (_, _, Engine::Me) => {}
            (BathSpec::Ghz(_), b, _) if b != Basis::LocalZzz => {
                return Err(Error::Config(format!("basis: {} is not supported with a GHZ bath", b.descriptor())))
            }
            (BathSpec::Ghz(_), _, e) if e != Engine::Kraus => {
                return Err(Error::Config(format!("engine: {} needs a two-qubit bath", e.name())))
            }
            (BathSpec::TwoQubit(_), Basis::LocalZzz, _) => {
                return Err(Error::Config("basis: local-zzz needs a GHZ bath".into()))
            }
            (BathSpec::TwoQubit(b), basis, Engine::JumpSme | Engine::DiffusiveSme) => {
                if !b.is_pure() || b.p_phi == 0.0 {
                    return Err(Error::Config(format!("engine: {} needs a pure Φ-block bath", self.engine.name())));
                }
                if !system.is_two_atoms() {
                    return Err(Error::Config(format!("engine: {} needs the two-atom system", self.engine.name())));
                }
                let ok = match self.engine {
                    Engine::JumpSme => matches!(basis, Basis::LocalZz | Basis::Bell),
                    _ => basis == Basis::LocalXz,
                };
                if !ok {
                    return Err(Error::Config(format!("basis: {} is not available for engine {}", basis.descriptor(), self.engine.name())));
                }
            }
            (BathSpec::TwoQubit(b), Basis::LocalXz, Engine::Kraus) if !(b.is_pure() && b.p_phi > 0.0) => {
                return Err(Error::Config("basis: local-xz needs a pure Φ-block bath".into()))
            }
            _ => {}
        }
        let dictionary = self.dictionary(&system);
        let initial = self.initial_state(&system, &dictionary)?;
        let targets = match &bath {
            BathSpec::TwoQubit(b) if system.is_two_atoms() => {
                let h = EffectiveHamiltonian::two_atom(&system, b, self.completion)?;
                h.eigenvectors.iter().enumerate().map(|(k, v)| (format!("F_w{}", k + 1), v.clone())).collect()
            }
            _ => Vec::new(),
        };
        let metrics = MetricContext::new(system.layout().clone(), targets)?;
        let warnings = system.warning().into_iter().collect();
        Ok(Scenario { config: self.clone(), system, bath, initial, metrics, dictionary, warnings })
    }

    /// Canonical JSON: every field present, amplitudes as `[re, im]`.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 over the canonical JSON without the `outputs` block.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v.as_object_mut().unwrap().remove("outputs");
        let bytes = serde_json::to_vec(&v).unwrap();
        let digest = Sha256::digest(&bytes);
        let mut out = String::with_capacity(64);
        for b in digest.iter() {
            let _ = write!(out, "{b:02x}");
        }
        out
    }
}

/// A conditional engine ready to unravel.
pub enum EngineImpl {
    Kraus(KrausSet),
    Jump(JumpSme),
    Diffusive(DiffusiveSme),
}

impl EngineImpl {
    pub fn as_unraveling(&self) -> &dyn Unraveling {
        match self {
            EngineImpl::Kraus(k) => k,
            EngineImpl::Jump(j) => j,
            EngineImpl::Diffusive(d) => d,
        }
    }
}

impl Scenario {
    pub fn engine(&self) -> Result<Option<EngineImpl>> {
        let cfg = &self.config;
        let two = |b: &BathSpec| match b {
            BathSpec::TwoQubit(t) => Ok(t.clone()),
            BathSpec::Ghz(_) => Err(Error::Config("engine: needs a two-qubit bath".into())),
        };
        Ok(Some(match cfg.engine {
            Engine::Me => return Ok(None),
            Engine::Kraus => EngineImpl::Kraus(kraus_set(&self.system, &self.bath, cfg.basis)?),
            Engine::JumpSme => {
                let b = two(&self.bath)?;
                EngineImpl::Jump(if cfg.basis == Basis::Bell { JumpSme::bell(&b, &self.system)? } else { JumpSme::local(&b, &self.system)? })
            }
            Engine::DiffusiveSme => EngineImpl::Diffusive(DiffusiveSme::new(&two(&self.bath)?, &self.system)?),
        }))
    }

    pub fn model(&self) -> Result<LindbladModel> {
        LindbladModel::from_bath(&self.bath, &self.system)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub step: usize,
    pub mean: [f64; 8],
    pub se: [f64; 8],
    /// Max-entry deviation of the ensemble-mean state from the master equation.
    pub me_max_dev: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config_hash: String,
    pub engine: String,
    pub n_traj: usize,
    pub summary: Vec<SummaryRow>,
    #[serde(skip)]
    pub trajectories: Vec<TrajectoryRecord>,
    pub min_eigenvalue: f64,
    pub max_probability_defect: f64,
    pub max_me_deviation: f64,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
}

/// Runs a validated scenario in memory.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    let sc = cfg.build()?;
    let hash = cfg.hash();
    let model = sc.model()?;
    let me = integrate_me(&sc.initial, &model, cfg.n_steps, cfg.me_substeps)?;
    let (trajectories, summary, n_traj) = match sc.engine()? {
        None => {
            let mut rows = Vec::new();
            for (k, rho) in me.iter().enumerate() {
                if k % cfg.record_every == 0 || k == cfg.n_steps {
                    let m = sc.metrics.snapshot(rho)?;
                    rows.push(SummaryRow { step: k, mean: m.row(), se: [0.0; 8], me_max_dev: 0.0 });
                }
            }
            (Vec::new(), rows, 1)
        }
        Some(engine) => {
            let opts = TrajectoryOptions { n_steps: cfg.n_steps, record_every: cfg.record_every, keep_states: false };
            let (mut records, s): (Vec<TrajectoryRecord>, EnsembleSummary) =
                run_ensemble_reduced(&sc.initial, engine.as_unraveling(), opts, cfg.seed, cfg.n_traj, &sc.metrics, BLOCK)?;
            for r in &mut records {
                r.config_hash = Some(hash.clone());
            }
            let rows = s
                .steps
                .iter()
                .enumerate()
                .map(|(k, &step)| SummaryRow {
                    step,
                    mean: s.metric_mean[k],
                    se: s.metric_se[k],
                    me_max_dev: s.mean_rho[k].max_abs_diff(&me[step]),
                })
                .collect();
            (records, rows, cfg.n_traj)
        }
    };
    let min_eigenvalue = trajectories.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min);
    let max_probability_defect = trajectories.iter().map(|r| r.max_probability_defect).fold(0.0, f64::max);
    let max_me_deviation = summary.iter().map(|r| r.me_max_dev).fold(0.0, f64::max);
    Ok(RunReport {
        config_hash: hash,
        engine: cfg.engine.name().into(),
        n_traj,
        summary,
        trajectories,
        min_eigenvalue,
        max_probability_defect,
        max_me_deviation,
        warnings: sc.warnings.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.12e}")
    }
}

/// Per-trajectory CSV: `step,outcome,probability,F_w1..F_w4,LN,purity,sz1,sz2`.
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::from("step,outcome,probability");
    for l in METRIC_LABELS {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for s in &record.steps {
        let _ = write!(out, "{},{},{}", s.step, s.outcome, fmt_num(s.probability));
        for v in s.metrics.row() {
            out.push(',');
            out.push_str(&fmt_num(v));
        }
        out.push('\n');
    }
    out
}

/// Ensemble CSV: `step`, then `mean_X,se_X` per metric, then `me_max_dev`.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("step");
    for l in METRIC_LABELS {
        let _ = write!(out, ",mean_{l},se_{l}");
    }
    out.push_str(",me_max_dev\n");
    for r in rows {
        let _ = write!(out, "{}", r.step);
        for j in 0..8 {
            let _ = write!(out, ",{},{}", fmt_num(r.mean[j]), fmt_num(r.se[j]));
        }
        let _ = writeln!(out, ",{}", fmt_num(r.me_max_dev));
    }
    out
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents)?;
    Ok(())
}

/// Writes CSVs and `manifest.json` into `dir`; returns the written paths.
pub fn write_outputs(cfg: &ScenarioConfig, report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    if cfg.outputs.trajectory_csv || cfg.outputs.trajectory_json {
        for r in &report.trajectories {
            if cfg.outputs.trajectory_csv {
                let p = dir.join(format!("traj_{:05}.csv", r.index));
                write_file(&p, trajectory_csv(r).as_bytes())?;
                files.push(p);
            }
            if cfg.outputs.trajectory_json {
                let p = dir.join(format!("traj_{:05}.json", r.index));
                write_file(&p, &serde_json::to_vec(r).map_err(|e| Error::Contract(e.to_string()))?)?;
                files.push(p);
            }
        }
    }
    if cfg.outputs.summary_csv {
        let p = dir.join("summary.csv");
        write_file(&p, summary_csv(&report.summary).as_bytes())?;
        files.push(p);
    }
    let names: Vec<String> = files.iter().filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect();
    let manifest = serde_json::json!({
        "config_hash": report.config_hash,
        "config": serde_json::to_value(cfg).unwrap(),
        "versions": {
            "bathtraj": env!("CARGO_PKG_VERSION"),
            "rng": "ChaCha8 seeded per trajectory with seed ^ index",
        },
        "engine": report.engine,
        "n_traj": report.n_traj,
        "wall_time_s": report.wall_time_s,
        "min_eigenvalue": report.min_eigenvalue,
        "max_probability_defect": report.max_probability_defect,
        "max_me_deviation": report.max_me_deviation,
        "warnings": report.warnings,
        "files": names,
    });
    let p = dir.join("manifest.json");
    write_file(&p, serde_json::to_string_pretty(&manifest).unwrap().as_bytes())?;
    files.push(p);
    Ok(files)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProbabilityClass {
    #[serde(rename = "O(1)")]
    Leading,
    #[serde(rename = "O(gamma_dt)")]
    FirstOrder,
    #[serde(rename = "0")]
    Zero,
}

impl ProbabilityClass {
    pub fn symbol(self) -> &'static str {
        match self {
            ProbabilityClass::Leading => "O(1)",
            ProbabilityClass::FirstOrder => "O(gamma_dt)",
            ProbabilityClass::Zero => "0",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerationRow {
    pub outcomes: Vec<String>,
    pub probability: f64,
    pub class: ProbabilityClass,
    /// Dictionary name of the post-state, `"unnamed"`, or `"---"` for zero probability.
    pub state: String,
    pub fidelity: f64,
}

/// Closest dictionary entry to `rho` and its fidelity.
pub fn identify_state(rho: &ComplexMatrix, dict: &[(String, ComplexMatrix)]) -> (String, f64) {
    let mut best = ("unnamed".to_string(), 0.0);
    for (name, v) in dict {
        let f = fidelity(rho, v).unwrap_or(0.0);
        if f > best.1 {
            best = (name.clone(), f);
        }
    }
    if best.1 < NAMING_FIDELITY {
        best.0 = "unnamed".into();
    }
    best
}

/// Every outcome sequence of length `n_steps` (1 or 2) from `initial`, with
/// truncated probabilities and named post-states.
pub fn enumerate_outcomes(cfg: &ScenarioConfig, initial: &str) -> Result<Vec<EnumerationRow>> {
    if cfg.n_steps > 2 {
        return Err(Error::Config(format!("n_steps: enumeration covers at most 2 steps, got {}", cfg.n_steps)));
    }
    if cfg.engine != Engine::Kraus {
        return Err(Error::Config("engine: enumeration needs the kraus engine".into()));
    }
    let mut with_state = cfg.clone();
    with_state.initial_state = InitialState::Named(initial.to_string());
    let sc = with_state.build()?;
    let set = kraus_set(&sc.system, &sc.bath, cfg.basis)?;
    let labels = set.labels();
    let floor = set.suppression_floor();
    let mut rows = Vec::new();
    let mut frontier = vec![(Vec::<String>::new(), Some(sc.initial.clone()), 1.0f64, 1.0f64)];
    for _ in 0..cfg.n_steps {
        let mut next = Vec::new();
        for (seq, rho, p, lead) in frontier {
            let (probs, leads) = match &rho {
                Some(r) => (set.probabilities(r), set.leading_probabilities(r)),
                None => (vec![0.0; labels.len()], vec![0.0; labels.len()]),
            };
            for (i, label) in labels.iter().enumerate() {
                let mut s = seq.clone();
                s.push(label.clone());
                let out = match &rho {
                    Some(r) if probs[i] > 0.0 => Some(set.apply(i, r).scale_real(1.0 / probs[i])),
                    _ => None,
                };
                next.push((s, out, p * probs[i], lead * leads[i]));
            }
        }
        frontier = next;
    }
    for (s, rho, p, l) in frontier {
        let Some(rho) = rho else {
            rows.push(EnumerationRow { outcomes: s, probability: 0.0, class: ProbabilityClass::Zero, state: "---".into(), fidelity: 0.0 });
            continue;
        };
        let class = if l > 0.0 {
            ProbabilityClass::Leading
        } else if p >= floor {
            ProbabilityClass::FirstOrder
        } else {
            ProbabilityClass::Zero
        };
        let (state, f) = if class == ProbabilityClass::Zero { ("---".to_string(), 0.0) } else { identify_state(&rho, &sc.dictionary) };
        rows.push(EnumerationRow { outcomes: s, probability: p, class, state, fidelity: f });
    }
    let order = |row: &EnumerationRow| row.outcomes.iter().map(|o| labels.iter().position(|l| l == o).unwrap()).collect::<Vec<_>>();
    rows.sort_by_key(order);
    Ok(rows)
}

pub fn enumeration_csv(rows: &[EnumerationRow]) -> String {
    let mut out = String::from("outcomes,probability,class,state,fidelity\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.outcomes.join(" "), fmt_num(r.probability), r.class.symbol(), r.state, fmt_num(r.fidelity));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"system": {"type": "two-atoms"}, "bath": {"type": "near-bell", "sign": "+", "epsilon": 0.1}}"#;

    fn with(extra: &str) -> String {
        format!(r#"{{"system": {{"type": "two-atoms"}}, "bath": {{"type": "near-bell", "sign": "+", "epsilon": 0.0}}, {extra}}}"#)
    }

    #[test]
    fn canonical_round_trip() {
        let cfg = parse_config(MINIMAL.as_bytes()).unwrap();
        let canon = cfg.canonical_json();
        let again = parse_config(canon.as_bytes()).unwrap();
        assert_eq!(again.canonical_json(), canon);
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejections() {
        let e = parse_config(with(r#""gamma_dt": 0.5"#).as_bytes()).unwrap_err();
        assert!(e.to_string().contains("gamma_dt"), "{e}");
        let e = parse_config(with(r#""bogus": 1"#).as_bytes()).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = parse_config(r#"{"system": {"type": "two-atoms", "x": 1}, "bath": {"type": "ghz", "b_eee": 1, "b_ggg": 0}}"#.as_bytes()).unwrap_err();
        assert!(e.to_string().starts_with("config error: system"), "{e}");
        let ghz = r#"{"system": {"type": "three-atoms"}, "bath": {"type": "ghz", "b_eee": 0.6, "b_ggg": [0, 0.8]}, "basis": "bell"}"#;
        assert!(matches!(parse_config(ghz.as_bytes()), Err(Error::Config(_))));
        let ok = ghz.replace("\"bell\"", "\"local-zzz\"");
        assert!(parse_config(ok.as_bytes()).is_ok());
        assert!(parse_config(with(r#""initial_state": "nope""#).as_bytes()).is_err());
        assert!(parse_config(with(r#""engine": "diffusive-sme""#).as_bytes()).is_err());
        assert!(parse_config(with(r#""engine": "diffusive-sme", "basis": "local-xz""#).as_bytes()).is_ok());
    }

    #[test]
    fn hash_tracks_semantic_fields_only() {
        let a = parse_config(MINIMAL.as_bytes()).unwrap();
        let mut b = a.clone();
        b.outputs.dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.bath = BathConfig::NearBell { sign: SignConfig::Plus, epsilon: 0.1 + 1e-12 };
        assert_ne!(a.hash(), c.hash());
        let re = parse_config(br#"{"system": {"type": "two-atoms"}, "bath": {"type": "two-qubit", "b_ee": 0.6, "b_gg": [0.8, 0]}}"#).unwrap();
        let pair = parse_config(br#"{"system": {"type": "two-atoms"}, "bath": {"type": "two-qubit", "b_ee": [0.6, 0], "b_gg": 0.8}}"#).unwrap();
        assert_eq!(re.hash(), pair.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn table_rows() {
        let cfg = parse_config(with(r#""n_steps": 1"#).as_bytes()).unwrap();
        let rows = enumerate_outcomes(&cfg, "Phi-").unwrap();
        let names: Vec<&str> = rows.iter().map(|r| r.state.as_str()).collect();
        assert_eq!(names, vec!["Phi-", "Phi-", "---", "---"]);
        for (r, p) in rows.iter().zip([0.5, 0.5, 0.0, 0.0]) {
            assert!((r.probability - p).abs() < 1e-14);
        }
        let rows = enumerate_outcomes(&cfg, "ge").unwrap();
        assert_eq!(rows[3].state, "Phi+");
        assert!((rows[3].probability - 0.01).abs() < 1e-15);
        assert_eq!(rows[3].class, ProbabilityClass::FirstOrder);
        assert_eq!(rows[2].state, "---");
        let rows = enumerate_outcomes(&cfg, "gg").unwrap();
        let p: Vec<f64> = rows.iter().map(|r| r.probability).collect();
        for (a, b) in p.iter().zip([0.49, 0.50, 0.005, 0.005]) {
            assert!((a - b).abs() < 1e-12);
        }
        let two = parse_config(with(r#""n_steps": 2"#).as_bytes()).unwrap();
        let rows = enumerate_outcomes(&two, "eg").unwrap();
        assert_eq!(rows.len(), 16);
        let total: f64 = rows.iter().map(|r| r.probability).sum();
        assert!((total - 1.0).abs() < 1e-3);
        let three = parse_config(with(r#""n_steps": 3"#).as_bytes()).unwrap();
        assert!(enumerate_outcomes(&three, "eg").is_err());
    }

    #[test]
    fn me_engine_is_deterministic() {
        let cfg = parse_config(with(r#""engine": "me", "n_steps": 100, "record_every": 10, "initial_state": "gg""#).as_bytes()).unwrap();
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert_eq!(a.summary.len(), 11);
        for (x, y) in a.summary.iter().zip(&b.summary) {
            assert_eq!(x.mean.map(f64::to_bits), y.mean.map(f64::to_bits));
        }
    }

    #[test]
    fn small_kraus_run_tracks_master_equation() {
        let cfg = parse_config(with(r#""n_steps": 200, "n_traj": 64, "record_every": 20, "seed": 3"#).as_bytes()).unwrap();
        let r = run_scenario(&cfg).unwrap();
        assert_eq!(r.trajectories.len(), 64);
        assert!(r.max_me_deviation < 5.0 / 8.0);
        assert!(r.max_probability_defect < 1e-9);
        let csv = trajectory_csv(&r.trajectories[0]);
        assert!(csv.starts_with("step,outcome,probability,F_w1,F_w2,F_w3,F_w4,LN,purity,sz1,sz2\n0,init,"));
        let s = summary_csv(&r.summary);
        assert_eq!(s.lines().count(), 12);
    }
}
