//! Simulation engines: standard RB, coherent RB (sampled and full
//! superposition), interleaved coherent RB and coherent RB with a noisy
//! control register.
//!
//! Every `(m, repetition)` cell draws from its own ChaCha20 stream, keyed by
//! [`stream_id`], so results do not depend on how cells are scheduled.

pub mod dense;
mod engine;
pub mod theory;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gatesets::GateSet;
use crate::noise::{Channel, NoiseModel};
use crate::qlinalg::{ComplexMatrix, Unitary};

use engine::Protocol;

/// Default limit on the joint control ⊗ target dimension `k·D`.
pub const DEFAULT_DIM_CAP: usize = 4096;
/// Default limit on `|G|^m` for full-superposition runs.
pub const DEFAULT_FULL_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Standard,
    Coherent,
    CoherentFull,
    Interleaved,
    CoherentControlNoise,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Standard,
        Mode::Coherent,
        Mode::CoherentFull,
        Mode::Interleaved,
        Mode::CoherentControlNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Coherent => "coherent",
            Mode::CoherentFull => "coherent-full",
            Mode::Interleaved => "interleaved",
            Mode::CoherentControlNoise => "coherent-control-noise",
        }
    }

    /// Stream family; modes sharing a tag draw identical sequences.
    fn stream_tag(self) -> u64 {
        match self {
            Mode::CoherentFull => 0,
            Mode::Coherent | Mode::CoherentControlNoise | Mode::Interleaved => 1,
            Mode::Standard => 2,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown mode `{s}`")))
    }
}

/// Gate interleaved after every sequence position, with its own noise.
#[derive(Clone, Debug)]
pub struct Interleave {
    pub gate: Unitary,
    pub channel: Channel,
}

#[derive(Clone, Debug)]
pub struct RbRunConfig {
    pub set: Arc<GateSet>,
    pub noise: NoiseModel,
    pub lengths: Vec<usize>,
    /// Branches in superposition (coherent modes) or sequences averaged (standard).
    pub k: usize,
    pub repetitions: usize,
    pub seed: u64,
    /// 0 for exact expectations, otherwise binomial samples of this many shots.
    pub shots: u64,
    pub mode: Mode,
    pub interleave: Option<Interleave>,
    pub dim_cap: usize,
    pub full_cap: usize,
    /// Also depolarize the control after the inverse gate.
    pub control_noise_after_inverse: bool,
}

impl RbRunConfig {
    pub fn new(set: impl Into<Arc<GateSet>>, noise: NoiseModel, mode: Mode) -> Self {
        Self {
            set: set.into(),
            noise,
            lengths: vec![1, 2, 4, 8, 16],
            k: 20,
            repetitions: 1,
            seed: 0,
            shots: 0,
            mode,
            interleave: None,
            dim_cap: DEFAULT_DIM_CAP,
            full_cap: DEFAULT_FULL_CAP,
            control_noise_after_inverse: false,
        }
    }

    pub fn with_lengths(mut self, lengths: Vec<usize>) -> Self {
        self.lengths = lengths;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_repetitions(mut self, repetitions: usize) -> Self {
        self.repetitions = repetitions;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_shots(mut self, shots: u64) -> Self {
        self.shots = shots;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if self.repetitions == 0 {
            return Err(invalid("repetitions must be at least 1"));
        }
        if self.repetitions >= 1 << 24 {
            return Err(invalid("at most 2^24 - 1 repetitions"));
        }
        if self.lengths.is_empty() {
            return Err(invalid("no sequence lengths given"));
        }
        if self.lengths[0] == 0 || self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("lengths must be positive and strictly increasing"));
        }
        if *self.lengths.last().unwrap() >= 1 << 32 {
            return Err(invalid("sequence length too large"));
        }
        self.noise.validate()?;
        if self.noise.dims() != self.set.dims() {
            return Err(Error::DimensionMismatch(format!(
                "noise acts on {:?}, gate set on {:?}",
                self.noise.dims(),
                self.set.dims()
            )));
        }
        let d = self.set.dim();
        match self.mode {
            Mode::Coherent | Mode::Interleaved | Mode::CoherentControlNoise => {
                if self.k.saturating_mul(d) > self.dim_cap {
                    return Err(Error::CapExceeded {
                        what: "joint dimension k*D",
                        size: self.k.saturating_mul(d),
                        cap: self.dim_cap,
                    });
                }
            }
            Mode::CoherentFull => {
                for &m in &self.lengths {
                    full_branch_count(self.set.len(), m, self.full_cap)?;
                }
            }
            Mode::Standard => {}
        }
        if let Some(il) = &self.interleave {
            if il.gate.rows() != d || il.channel.dims() != self.set.dims() {
                return Err(Error::DimensionMismatch(
                    "interleaved gate or channel does not match the register".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One protocol estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityRecord {
    pub mode: Mode,
    pub m: usize,
    pub repetition: usize,
    pub fidelity: f64,
    pub k: usize,
    pub seed_stream: u64,
}

/// `(tag << 56) | (m << 24) | repetition`.
pub fn stream_id(mode: Mode, m: usize, repetition: usize) -> u64 {
    (mode.stream_tag() << 56) | ((m as u64) << 24) | repetition as u64
}

/// The generator for one `(m, repetition)` cell.
pub fn cell_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `k` iid uniform sequences of length `m`, branch by branch.
pub fn draw_sequences<R: Rng + ?Sized>(rng: &mut R, k: usize, m: usize, set_size: usize) -> Vec<Vec<usize>> {
    (0..k)
        .map(|_| (0..m).map(|_| rng.random_range(0..set_size)).collect())
        .collect()
}

fn full_branch_count(set_size: usize, m: usize, cap: usize) -> Result<usize> {
    let count = u32::try_from(m)
        .ok()
        .and_then(|e| set_size.checked_pow(e))
        .filter(|&c| c <= cap);
    count.ok_or(Error::CapExceeded {
        what: "full-superposition branches |G|^m",
        size: (set_size as f64).powf(m as f64).min(usize::MAX as f64) as usize,
        cap,
    })
}

/// All `|G|^m` sequences, the first position varying slowest.
pub fn all_sequences(set_size: usize, m: usize, cap: usize) -> Result<Vec<Vec<usize>>> {
    let count = full_branch_count(set_size, m, cap)?;
    Ok((0..count)
        .map(|mut idx| {
            let mut seq = vec![0; m];
            for slot in seq.iter_mut().rev() {
                *slot = idx % set_size;
                idx /= set_size;
            }
            seq
        })
        .collect())
}

fn sample_shots<R: Rng + ?Sized>(p: f64, shots: u64, rng: &mut R) -> Result<f64> {
    if shots == 0 {
        return Ok(p.clamp(0.0, 1.0));
    }
    let dist = Binomial::new(shots, p.clamp(0.0, 1.0)).map_err(|e| invalid(e.to_string()))?;
    Ok(dist.sample(rng) as f64 / shots as f64)
}

fn require_mode(cfg: &RbRunConfig, expected: Mode) -> Result<()> {
    if cfg.mode != expected {
        return Err(invalid(format!(
            "configuration is for mode {}, engine expects {expected}",
            cfg.mode
        )));
    }
    Ok(())
}

/// Coherent estimate from explicit branch sequences (ideal control).
pub fn coherent_fidelity(set: &GateSet, noise: &NoiseModel, seqs: &[Vec<usize>]) -> f64 {
    let proj = Protocol::new(set, noise).coherent_projection(seqs, 1.0, 1.0);
    with_measurement(proj, noise.meas_error, seqs.len() * set.dim())
}

/// Average single-sequence survival over explicit sequences.
pub fn standard_fidelity(set: &GateSet, noise: &NoiseModel, seqs: &[Vec<usize>]) -> f64 {
    let s = Protocol::new(set, noise).survivals(seqs);
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    with_measurement(mean, noise.meas_error, set.dim())
}

/// `v_ij = <0|ξ_f(V_i B_ij V_j†)|0>`: the diagonal holds single-sequence
/// survivals, the off-diagonal the coherences read out by the probe.
pub fn pair_values(set: &GateSet, noise: &NoiseModel, seqs: &[Vec<usize>]) -> ComplexMatrix {
    Protocol::new(set, noise).pair_values(seqs)
}

fn with_measurement(projected: f64, meas_error: f64, dim: usize) -> f64 {
    (1.0 - meas_error) * projected + meas_error / dim as f64
}

/// Runs the engine selected by `cfg.mode`.
pub fn run(cfg: &RbRunConfig) -> Result<Vec<FidelityRecord>> {
    match cfg.mode {
        Mode::Standard => run_standard_rb(cfg),
        Mode::Coherent => run_coherent_rb(cfg),
        Mode::CoherentFull => run_coherent_full(cfg),
        Mode::CoherentControlNoise => run_coherent_with_control_noise(cfg),
        Mode::Interleaved => {
            let il = cfg
                .interleave
                .as_ref()
                .ok_or_else(|| invalid("interleaved mode needs a gate and its channel"))?;
            run_interleaved_coherent(cfg, il.gate.matrix(), &il.channel)
        }
    }
}

pub fn run_coherent_rb(cfg: &RbRunConfig) -> Result<Vec<FidelityRecord>> {
    require_mode(cfg, Mode::Coherent)?;
    cfg.validate()?;
    let protocol = Protocol::new(&cfg.set, &cfg.noise);
    sampled(cfg, |seqs, _| protocol.coherent_projection(seqs, 1.0, 1.0), true)
}

pub fn run_coherent_with_control_noise(cfg: &RbRunConfig) -> Result<Vec<FidelityRecord>> {
    require_mode(cfg, Mode::CoherentControlNoise)?;
    cfg.validate()?;
    let protocol = Protocol::new(&cfg.set, &cfg.noise);
    let q = cfg.noise.control_q;
    let extra = usize::from(cfg.control_noise_after_inverse) as i32;
    sampled(
        cfg,
        |seqs, m| protocol.coherent_projection(seqs, q, q.powi(m as i32 + extra)),
        true,
    )
}

pub fn run_standard_rb(cfg: &RbRunConfig) -> Result<Vec<FidelityRecord>> {
    require_mode(cfg, Mode::Standard)?;
    cfg.validate()?;
    let protocol = Protocol::new(&cfg.set, &cfg.noise);
    sampled(
        cfg,
        |seqs, _| protocol.survivals(seqs).iter().sum::<f64>() / seqs.len() as f64,
        false,
    )
}

/// `gate` is interleaved after every position and followed by `channel`.
pub fn run_interleaved_coherent(
    cfg: &RbRunConfig,
    gate: &ComplexMatrix,
    channel: &Channel,
) -> Result<Vec<FidelityRecord>> {
    let (cfg, protocol) = interleaved_setup(cfg, gate, channel)?;
    sampled(&cfg, |seqs, _| protocol.coherent_projection(seqs, 1.0, 1.0), true)
}

/// Interleaved protocol over all `|G|^m` sequences in superposition.
pub fn run_interleaved_full(
    cfg: &RbRunConfig,
    gate: &ComplexMatrix,
    channel: &Channel,
) -> Result<Vec<FidelityRecord>> {
    let (cfg, protocol) = interleaved_setup(cfg, gate, channel)?;
    for &m in &cfg.lengths {
        full_branch_count(cfg.set.len(), m, cfg.full_cap)?;
    }
    full(&cfg, &protocol)
}

fn interleaved_setup(
    cfg: &RbRunConfig,
    gate: &ComplexMatrix,
    channel: &Channel,
) -> Result<(RbRunConfig, Protocol)> {
    require_mode(cfg, Mode::Interleaved)?;
    let gate = Unitary::new(gate.clone())?;
    let mut cfg = cfg.clone();
    cfg.interleave = Some(Interleave {
        gate: gate.clone(),
        channel: channel.clone(),
    });
    cfg.validate()?;
    let protocol = Protocol::interleaved(&cfg.set, &cfg.noise, &gate, channel);
    Ok((cfg, protocol))
}

pub fn run_coherent_full(cfg: &RbRunConfig) -> Result<Vec<FidelityRecord>> {
    require_mode(cfg, Mode::CoherentFull)?;
    cfg.validate()?;
    full(cfg, &Protocol::new(&cfg.set, &cfg.noise))
}

fn full(cfg: &RbRunConfig, protocol: &Protocol) -> Result<Vec<FidelityRecord>> {
    let mut records = Vec::with_capacity(cfg.lengths.len() * cfg.repetitions);
    for &m in &cfg.lengths {
        let seqs = all_sequences(cfg.set.len(), m, cfg.full_cap)?;
        let k = seqs.len();
        let exact = with_measurement(
            protocol.coherent_projection(&seqs, 1.0, 1.0),
            cfg.noise.meas_error,
            k * protocol.dim(),
        );
        for rep in 0..cfg.repetitions {
            let stream = stream_id(cfg.mode, m, rep);
            let mut rng = cell_rng(cfg.seed, stream);
            records.push(FidelityRecord {
                mode: cfg.mode,
                m,
                repetition: rep,
                fidelity: sample_shots(exact, cfg.shots, &mut rng)?,
                k,
                seed_stream: stream,
            });
        }
    }
    Ok(records)
}

/// Runs every `(m, repetition)` cell with `k` freshly drawn sequences.
fn sampled<F>(cfg: &RbRunConfig, projected: F, coherent: bool) -> Result<Vec<FidelityRecord>>
where
    F: Fn(&[Vec<usize>], usize) -> f64 + Sync,
{
    let cells: Vec<(usize, usize)> = cfg
        .lengths
        .iter()
        .flat_map(|&m| (0..cfg.repetitions).map(move |rep| (m, rep)))
        .collect();
    let meas_dim = if coherent { cfg.k * cfg.set.dim() } else { cfg.set.dim() };
    cells
        .par_iter()
        .map(|&(m, rep)| {
            let stream = stream_id(cfg.mode, m, rep);
            let mut rng = cell_rng(cfg.seed, stream);
            let seqs = draw_sequences(&mut rng, cfg.k, m, cfg.set.len());
            let exact = with_measurement(projected(&seqs, m), cfg.noise.meas_error, meas_dim);
            Ok(FidelityRecord {
                mode: cfg.mode,
                m,
                repetition: rep,
                fidelity: sample_shots(exact, cfg.shots, &mut rng)?,
                k: cfg.k,
                seed_stream: stream,
            })
        })
        .collect()
}
