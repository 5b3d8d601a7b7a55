//! Seeded jump-trajectory simulation with feedback.
//!
//! Each trajectory owns a ChaCha stream selected by `(seed, index)`, so an
//! ensemble gives bit-identical results no matter how the work is spread
//! over threads. Per-trajectory results are reduced in index order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{kraus_set, ErrorChannel, KrausSet};
use crate::code::{build_code, Generator, StabilizerCode};
use crate::control::{control_plan, ControlPlan, Correction};
use crate::error::{Error, Result};
use crate::linalg::{inner, real, CMatrix, CVector, C64};

/// Tolerance below which a negative no-jump probability is rounding noise.
const NEGATIVE_PROBABILITY_TOL: f64 = 1e-9;

/// Trajectories processed per parallel batch before the ordered reduce.
const BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum LogicalState {
    /// Index into the codespace basis.
    Index(usize),
    /// Coefficients over the codespace basis (normalized on use).
    Coefficients(Vec<C64>),
}

impl Default for LogicalState {
    fn default() -> Self {
        LogicalState::Index(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub channels: Vec<ErrorChannel>,
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub feedback: bool,
    pub driving: bool,
    pub trajectories: usize,
    pub initial_state: LogicalState,
    /// Number of evenly spaced times (after t = 0) at which ensemble
    /// density matrices are recorded.
    pub samples: usize,
    /// Replaces the synthesized code when set.
    pub code: Option<Vec<Generator>>,
}

impl SimConfig {
    pub fn new(n: usize, channels: Vec<ErrorChannel>, dt: f64, duration: f64) -> Self {
        Self {
            n,
            channels,
            dt,
            duration,
            seed: 0,
            feedback: true,
            driving: true,
            trajectories: 1,
            initial_state: LogicalState::default(),
            samples: 10,
            code: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if !self.duration.is_finite() || self.duration < self.dt {
            return Err(Error::InvalidConfig(format!(
                "duration must be >= dt, got {}",
                self.duration
            )));
        }
        if self.trajectories == 0 {
            return Err(Error::InvalidConfig("trajectories must be >= 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidConfig("samples must be >= 1".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be >= 1".into()));
        }
        crate::channel::check_channels(&self.channels, self.n)
    }

    /// Number of time steps, `round(duration / dt)`.
    pub fn steps(&self) -> usize {
        ((self.duration / self.dt).round() as usize).max(1)
    }

    /// Step indices at which density matrices are sampled.
    pub fn sample_steps(&self) -> Vec<usize> {
        let steps = self.steps();
        let samples = self.samples.min(steps);
        (1..=samples)
            .map(|s| ((s * steps) as f64 / samples as f64).round() as usize)
            .collect()
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.sample_steps()
            .iter()
            .map(|&k| k as f64 * self.dt)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpRecord {
    pub time: f64,
    pub channel: usize,
}

#[derive(Debug, Clone)]
pub struct TrajectoryState {
    pub state: CVector,
    pub time: f64,
    pub jump_log: Vec<JumpRecord>,
    /// Steps where a slightly negative no-jump probability was clamped.
    pub clamped_steps: usize,
}

impl TrajectoryState {
    pub fn new(state: CVector) -> Self {
        Self {
            state,
            time: 0.0,
            jump_log: Vec::new(),
            clamped_steps: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    NoJump,
    Jump { channel: usize },
}

/// `|<a|b>|^2`, clamped into `[0, 1]`.
pub fn fidelity(a: &CVector, b: &CVector) -> f64 {
    inner(a, b).norm_sqr().clamp(0.0, 1.0)
}

fn normalize(v: CVector) -> CVector {
    let norm = v.norm();
    v.unscale(norm)
}

/// Advances one step: at most one jump, sampled with probability
/// `||Omega_j psi||^2`, followed by the channel's correction when
/// `corrections` is given.
pub fn step<R: Rng + ?Sized>(
    ts: &mut TrajectoryState,
    ks: &KrausSet,
    corrections: Option<&[Correction]>,
    rng: &mut R,
) -> Result<StepEvent> {
    let images: Vec<CVector> = ks.jumps.iter().map(|j| j.apply(ks.n, &ts.state)).collect();
    let probabilities: Vec<f64> = images.iter().map(|v| v.norm_squared()).collect();
    let total: f64 = probabilities.iter().sum();
    let no_jump = 1.0 - total;
    if no_jump < -NEGATIVE_PROBABILITY_TOL {
        return Err(Error::NegativeProbability {
            probability: no_jump,
        });
    }
    if no_jump < 0.0 {
        ts.clamped_steps += 1;
        log::warn!("clamped no-jump probability {no_jump:e} at t = {}", ts.time);
    }

    let r: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut event = StepEvent::NoJump;
    for (i, p) in probabilities.iter().enumerate() {
        cumulative += p;
        if r < cumulative {
            event = StepEvent::Jump {
                channel: ks.jumps[i].channel,
            };
            break;
        }
    }

    let next = match event {
        StepEvent::Jump { channel } => {
            let idx = ks
                .jumps
                .iter()
                .position(|j| j.channel == channel)
                .expect("sampled");
            let jumped = images.into_iter().nth(idx).expect("one image per jump");
            let corrected = match corrections {
                Some(cs) => &cs[channel].unitary * jumped,
                None => jumped,
            };
            ts.jump_log.push(JumpRecord {
                time: ts.time,
                channel,
            });
            corrected
        }
        StepEvent::NoJump => &ks.no_jump * &ts.state,
    };
    ts.state = normalize(next);
    ts.time += ks.dt;
    Ok(event)
}

/// Per-step fidelities and jump counts of one or more trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityRecord {
    pub times: Vec<f64>,
    pub mean_fidelity: Vec<f64>,
    pub std_fidelity: Vec<f64>,
    /// Cumulative number of jumps, summed over trajectories.
    pub jump_counts: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRun {
    pub record: FidelityRecord,
    pub jump_log: Vec<JumpRecord>,
    /// States at [`SimConfig::sample_steps`].
    pub sampled_states: Vec<CVector>,
    pub clamped_steps: usize,
}

/// Synthesized code, controls and Kraus set for a configuration, shared
/// read-only by all trajectories.
#[derive(Debug, Clone)]
pub struct Protocol {
    pub config: SimConfig,
    pub code: StabilizerCode,
    pub plan: ControlPlan,
    pub kraus: KrausSet,
    pub initial: CVector,
}

impl Protocol {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let code = match &config.code {
            Some(gens) => StabilizerCode::from_generators(config.n, gens.clone())?,
            None => build_code(&config.channels, config.n)?,
        };
        let plan = control_plan(&config.channels, &code)?;
        let dim = code.dim();
        let h = if config.driving {
            plan.driving.clone()
        } else {
            CMatrix::zeros(dim, dim)
        };
        let kraus = kraus_set(&config.channels, &h, config.n, config.dt)?;
        let initial = initial_state(&code, &config.initial_state)?;
        Ok(Self {
            config: config.clone(),
            code,
            plan,
            kraus,
            initial,
        })
    }

    pub fn rng(&self, trajectory_index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(trajectory_index as u64);
        rng
    }

    pub fn run_trajectory(&self, trajectory_index: usize) -> Result<TrajectoryRun> {
        let mut rng = self.rng(trajectory_index);
        self.run_with_rng(&mut rng)
    }

    pub fn run_with_rng<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrajectoryRun> {
        let cfg = &self.config;
        let steps = cfg.steps();
        let sample_steps = cfg.sample_steps();
        let corrections = cfg.feedback.then_some(self.plan.corrections.as_slice());

        let mut ts = TrajectoryState::new(self.initial.clone());
        let mut times = Vec::with_capacity(steps + 1);
        let mut fid = Vec::with_capacity(steps + 1);
        let mut jumps = Vec::with_capacity(steps + 1);
        let mut sampled = Vec::with_capacity(sample_steps.len());
        let mut next_sample = sample_steps.iter().peekable();
        let mut count = 0u64;

        times.push(0.0);
        fid.push(fidelity(&self.initial, &ts.state));
        jumps.push(0);
        for k in 1..=steps {
            if let StepEvent::Jump { .. } = step(&mut ts, &self.kraus, corrections, rng)? {
                count += 1;
            }
            times.push(k as f64 * cfg.dt);
            fid.push(fidelity(&self.initial, &ts.state));
            jumps.push(count);
            if next_sample.peek() == Some(&&k) {
                sampled.push(ts.state.clone());
                next_sample.next();
            }
        }

        Ok(TrajectoryRun {
            record: FidelityRecord {
                times,
                std_fidelity: vec![0.0; fid.len()],
                mean_fidelity: fid,
                jump_counts: jumps,
            },
            jump_log: ts.jump_log,
            sampled_states: sampled,
            clamped_steps: ts.clamped_steps,
        })
    }

    pub fn run_ensemble(&self) -> Result<EnsembleResult> {
        let cfg = &self.config;
        let len = cfg.steps() + 1;
        let sample_steps = cfg.sample_steps();
        let dim = self.code.dim();

        let mut sum = vec![0.0; len];
        let mut sum_sq = vec![0.0; len];
        let mut jump_counts = vec![0u64; len];
        let mut density = vec![CMatrix::zeros(dim, dim); sample_steps.len()];
        let mut weight = vec![0.0; sample_steps.len()];
        let mut times = Vec::new();

        let indices: Vec<usize> = (0..cfg.trajectories).collect();
        for batch in indices.chunks(BATCH) {
            let runs: Vec<TrajectoryRun> = batch
                .par_iter()
                .map(|&i| self.run_trajectory(i))
                .collect::<Result<_>>()?;
            for run in runs {
                for (k, f) in run.record.mean_fidelity.iter().enumerate() {
                    sum[k] += f;
                    sum_sq[k] += f * f;
                    jump_counts[k] += run.record.jump_counts[k];
                }
                for (s, psi) in run.sampled_states.iter().enumerate() {
                    density[s] += psi * psi.adjoint();
                    weight[s] += self.codespace_weight(psi);
                }
                if times.is_empty() {
                    times = run.record.times;
                }
            }
        }

        let count = cfg.trajectories as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
        let std = sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| (sq / count - m * m).max(0.0).sqrt())
            .collect();
        Ok(EnsembleResult {
            record: FidelityRecord {
                times,
                mean_fidelity: mean,
                std_fidelity: std,
                jump_counts,
            },
            sample_times: cfg.sample_times(),
            mean_density: density.into_iter().map(|m| m / real(count)).collect(),
            codespace_weight: weight.into_iter().map(|w| w / count).collect(),
        })
    }

    /// `<psi| P_code |psi>`
    pub fn codespace_weight(&self, psi: &CVector) -> f64 {
        self.code
            .codespace
            .iter()
            .map(|b| inner(b, psi).norm_sqr())
            .sum()
    }
}

fn initial_state(code: &StabilizerCode, state: &LogicalState) -> Result<CVector> {
    match state {
        LogicalState::Index(i) => code.codespace.get(*i).cloned().ok_or_else(|| {
            Error::InvalidConfig(format!(
                "initial_state index {i} out of range for a {}-dimensional codespace",
                code.codespace.len()
            ))
        }),
        LogicalState::Coefficients(c) => code.logical_state(c),
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub record: FidelityRecord,
    pub sample_times: Vec<f64>,
    /// Average of `|psi><psi|` over trajectories at each sample time.
    pub mean_density: Vec<CMatrix>,
    /// Mean codespace-projector weight at each sample time.
    pub codespace_weight: Vec<f64>,
}

/// Runs one trajectory; deterministic in `(cfg.seed, trajectory_index)`.
pub fn run_trajectory(cfg: &SimConfig, trajectory_index: usize) -> Result<TrajectoryRun> {
    Protocol::new(cfg)?.run_trajectory(trajectory_index)
}

pub fn run_ensemble(cfg: &SimConfig) -> Result<EnsembleResult> {
    Protocol::new(cfg)?.run_ensemble()
}

/// Half the trace norm of `a - b` for Hermitian `a`, `b`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = a - b;
    let diff = (&diff + diff.adjoint()) * real(0.5);
    0.5 * diff
        .symmetric_eigenvalues()
        .iter()
        .map(|e| e.abs())
        .sum::<f64>()
}

/// `|psi><psi|`
pub fn projector(psi: &CVector) -> CMatrix {
    psi * psi.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::axis_lowering;
    use crate::linalg::ONE;
    use crate::linalg::{sigma_minus, BlochVector};
    use rand::RngCore;

    fn unit(dim: usize, k: usize) -> CVector {
        let mut v = CVector::zeros(dim);
        v[k] = ONE;
        v
    }

    /// Always returns zero, so the first jump with nonzero weight fires.
    struct ForceJump;

    impl RngCore for ForceJump {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0);
        }
    }

    fn lowering_per_qubit(n: usize) -> Vec<ErrorChannel> {
        (0..n)
            .map(|q| ErrorChannel::new(q, sigma_minus()))
            .collect()
    }

    pub(crate) fn rank3_channels(n: usize) -> Vec<ErrorChannel> {
        let s = real((1.0f64 / 3.0).sqrt());
        (0..n)
            .flat_map(|q| {
                [BlochVector::X, BlochVector::Y, BlochVector::Z]
                    .map(|a| ErrorChannel::new(q, axis_lowering(a) * s))
            })
            .collect()
    }

    #[test]
    fn fidelity_examples() {
        let v = CVector::from_vec(vec![real(0.6), C64::new(0.0, 0.8)]);
        assert!((fidelity(&v, &v) - 1.0).abs() < 1e-15);
        let w = CVector::from_vec(vec![C64::new(0.0, 0.8), real(0.6)]);
        assert!(fidelity(&v, &w).abs() < 1e-15);
        let phased = &v * C64::from_polar(1.0, 0.7);
        assert!((fidelity(&v, &phased) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn step_without_channels_is_identity() {
        let ks = kraus_set(&[], &CMatrix::zeros(2, 2), 1, 0.01).unwrap();
        let psi = CVector::from_vec(vec![real(0.6), real(0.8)]);
        let mut ts = TrajectoryState::new(psi.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            step(&mut ts, &ks, None, &mut rng).unwrap(),
            StepEvent::NoJump
        );
        assert_eq!(ts.state, psi);
        assert!((ts.time - 0.01).abs() < 1e-18);
    }

    #[test]
    fn forced_jump_is_corrected() {
        let cfg = SimConfig::new(3, lowering_per_qubit(3), 0.01, 0.01);
        let protocol = Protocol::new(&cfg).unwrap();
        for v in &protocol.code.codespace {
            let mut ts = TrajectoryState::new(v.clone());
            let event = step(
                &mut ts,
                &protocol.kraus,
                Some(&protocol.plan.corrections),
                &mut ForceJump,
            )
            .unwrap();
            assert!(matches!(event, StepEvent::Jump { channel: 0 }));
            assert!((fidelity(v, &ts.state) - 1.0).abs() <= 1e-9);
            assert_eq!(ts.jump_log.len(), 1);
        }
    }

    #[test]
    fn jump_probability_single_qubit() {
        let ks = kraus_set(
            &[ErrorChannel::new(0, sigma_minus())],
            &CMatrix::zeros(2, 2),
            1,
            0.01,
        )
        .unwrap();
        let excited = unit(2, 1);
        let p = ks.jumps[0].apply(1, &excited).norm_squared();
        assert!((p - 0.01).abs() <= 1e-12);
    }

    #[test]
    fn negative_probability_is_an_error() {
        let big = ErrorChannel::new(0, sigma_minus() * real(20.0));
        let ks = kraus_set(&[big], &CMatrix::zeros(2, 2), 1, 0.01).unwrap();
        let mut ts = TrajectoryState::new(unit(2, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            step(&mut ts, &ks, None, &mut rng),
            Err(Error::NegativeProbability { .. })
        ));
    }

    #[test]
    fn one_step_no_jump_keeps_codespace_state() {
        let channels = rank3_channels(4);
        let mut cfg = SimConfig::new(4, channels, 1e-3, 1e-3);
        cfg.samples = 1;
        let protocol = Protocol::new(&cfg).unwrap();
        let mut ts = TrajectoryState::new(protocol.initial.clone());
        // r just below 1 never selects a jump at these weights
        struct NeverJump;
        impl RngCore for NeverJump {
            fn next_u32(&mut self) -> u32 {
                u32::MAX
            }
            fn next_u64(&mut self) -> u64 {
                u64::MAX
            }
            fn fill_bytes(&mut self, dst: &mut [u8]) {
                dst.fill(0xff);
            }
        }
        let event = step(
            &mut ts,
            &protocol.kraus,
            Some(&protocol.plan.corrections),
            &mut NeverJump,
        )
        .unwrap();
        assert_eq!(event, StepEvent::NoJump);
        assert!((fidelity(&protocol.initial, &ts.state) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn trajectory_is_deterministic() {
        let mut cfg = SimConfig::new(2, lowering_per_qubit(2), 0.01, 1.0);
        cfg.feedback = false;
        cfg.driving = false;
        cfg.seed = 99;
        let a = run_trajectory(&cfg, 3).unwrap();
        let b = run_trajectory(&cfg, 3).unwrap();
        assert_eq!(a.record, b.record);
        assert_eq!(a.jump_log, b.jump_log);
        let c = run_trajectory(&cfg, 4).unwrap();
        assert!(a.record != c.record || a.jump_log != c.jump_log);
    }

    #[test]
    fn ensemble_of_one_matches_trajectory() {
        let mut cfg = SimConfig::new(2, lowering_per_qubit(2), 0.01, 1.0);
        cfg.feedback = false;
        cfg.driving = false;
        cfg.seed = 5;
        let protocol = Protocol::new(&cfg).unwrap();
        let single = protocol.run_trajectory(0).unwrap();
        let ens = protocol.run_ensemble().unwrap();
        assert_eq!(ens.record.mean_fidelity, single.record.mean_fidelity);
        for (rho, psi) in ens.mean_density.iter().zip(&single.sampled_states) {
            assert_eq!(rho, &projector(psi));
        }
    }

    #[test]
    fn ensemble_is_order_independent() {
        let mut cfg = SimConfig::new(2, lowering_per_qubit(2), 0.01, 0.5);
        cfg.trajectories = 150;
        cfg.feedback = false;
        let a = run_ensemble(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| run_ensemble(&cfg).unwrap());
        assert_eq!(a.record, b.record);
        assert_eq!(a.mean_density, b.mean_density);
    }

    #[test]
    fn invalid_initial_index() {
        let mut cfg = SimConfig::new(2, lowering_per_qubit(2), 0.01, 0.1);
        cfg.initial_state = LogicalState::Index(2);
        assert!(matches!(Protocol::new(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn config_validation() {
        let base = SimConfig::new(1, vec![], 0.01, 1.0);
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.dt = 0.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.duration = 0.001;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.trajectories = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn sample_steps_are_even() {
        let cfg = SimConfig::new(1, vec![], 1e-3, 3.0);
        let steps = cfg.sample_steps();
        assert_eq!(steps.len(), 10);
        assert_eq!(steps[0], 300);
        assert_eq!(*steps.last().unwrap(), 3000);
    }

    #[test]
    fn trace_distance_basics() {
        let a = projector(&unit(2, 0));
        let b = projector(&unit(2, 1));
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-14);
        assert!(trace_distance(&a, &a).abs() < 1e-14);
    }
}
