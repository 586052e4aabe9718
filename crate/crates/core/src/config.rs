//! Serializable run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::io::OutputFormat;
use crate::noise::NoiseModel;
use crate::rbsim::{Interleave, Mode, RbRunConfig};
use crate::specs::{parse_channel_in, parse_gate_in, parse_set_in};

/// Everything needed to reproduce one run; embedded in every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub set: String,
    pub channel: String,
    /// Channel after the inverse gate; defaults to `channel`.
    pub final_channel: Option<String>,
    pub q: f64,
    pub eps_prep: f64,
    pub eps_meas: f64,
    pub mode: Mode,
    pub k: usize,
    pub lengths: Vec<usize>,
    pub repetitions: usize,
    pub shots: u64,
    pub seed: u64,
    /// Interleaved gate (named gate or matrix file).
    pub gate: Option<String>,
    pub gate_channel: Option<String>,
    pub control_noise_after_inverse: bool,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            set: "pauli:d=2,n=1".into(),
            channel: "identity".into(),
            final_channel: None,
            q: 1.0,
            eps_prep: 0.0,
            eps_meas: 0.0,
            mode: Mode::Coherent,
            k: 20,
            lengths: vec![1, 2, 4, 8, 16],
            repetitions: 1,
            shots: 0,
            seed: 0,
            gate: None,
            gate_channel: None,
            control_noise_after_inverse: false,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::Error::Parse(format!("config: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Resolves all spec strings; file paths are relative to `base`.
    pub fn build_in(&self, base: &Path) -> Result<RbRunConfig> {
        let set = Arc::new(parse_set_in(&self.set, base)?);
        let dims = set.dims().to_vec();
        let gate = parse_channel_in(&self.channel, &dims, base)?;
        let final_gate = match &self.final_channel {
            Some(spec) => parse_channel_in(spec, &dims, base)?,
            None => gate.clone(),
        };
        let noise = NoiseModel {
            gate,
            final_gate,
            control_q: self.q,
            prep_error: self.eps_prep,
            meas_error: self.eps_meas,
        };
        if self.q != 1.0 && self.mode != Mode::CoherentControlNoise {
            return Err(invalid("q < 1 needs mode coherent-control-noise"));
        }
        let interleave = match (&self.gate, self.mode) {
            (Some(g), Mode::Interleaved) => {
                let gate = parse_gate_in(g, base)?;
                let channel = match &self.gate_channel {
                    Some(spec) => parse_channel_in(spec, &dims, base)?,
                    None => crate::noise::Channel::identity(&dims),
                };
                Some(Interleave { gate, channel })
            }
            (None, Mode::Interleaved) => return Err(invalid("interleaved mode needs a gate")),
            (Some(_), _) => return Err(invalid("a gate is only used in interleaved mode")),
            (None, _) => None,
        };
        let mut cfg = RbRunConfig::new(set, noise, self.mode)
            .with_lengths(self.lengths.clone())
            .with_k(self.k)
            .with_repetitions(self.repetitions)
            .with_seed(self.seed)
            .with_shots(self.shots);
        cfg.interleave = interleave;
        cfg.control_noise_after_inverse = self.control_noise_after_inverse;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn build(&self) -> Result<RbRunConfig> {
        self.build_in(Path::new("."))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbsim::run;

    #[test]
    fn json_round_trip() {
        let cfg = ExperimentConfig {
            set: "clifford:d=2,n=1".into(),
            channel: "infidelity-dephasing:r=1e-4".into(),
            eps_meas: 0.01,
            mode: Mode::Standard,
            seed: 42,
            format: OutputFormat::Json,
            out: Some("runs/a.json".into()),
            ..Default::default()
        };
        let text = cfg.to_json().unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
        let partial = ExperimentConfig::from_json(r#"{"set": "pauli:d=3,n=1", "k": 5}"#).unwrap();
        assert_eq!(partial.k, 5);
        assert_eq!(partial.channel, "identity");
        assert!(ExperimentConfig::from_json(r#"{"sett": "pauli"}"#).is_err());
    }

    #[test]
    fn build_and_rerun_from_embedded_config() {
        let cfg = ExperimentConfig {
            channel: "dephasing:p=0.02".into(),
            lengths: vec![1, 3],
            k: 4,
            repetitions: 2,
            seed: 9,
            ..Default::default()
        };
        let first = run(&cfg.build().unwrap()).unwrap();
        let again = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(run(&again.build().unwrap()).unwrap(), first);
    }

    #[test]
    fn build_rejects_inconsistent_configs() {
        let bad = [
            ExperimentConfig { q: 0.9, ..Default::default() },
            ExperimentConfig { mode: Mode::Interleaved, ..Default::default() },
            ExperimentConfig { gate: Some("h".into()), ..Default::default() },
            ExperimentConfig { k: 0, ..Default::default() },
            ExperimentConfig { lengths: vec![4, 2], ..Default::default() },
            ExperimentConfig { eps_meas: 1.5, ..Default::default() },
            ExperimentConfig { set: "pauli:d=2,n=2".into(), gate: Some("h".into()), mode: Mode::Interleaved, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.build().is_err(), "{cfg:?}");
        }
        let ok = ExperimentConfig {
            mode: Mode::Interleaved,
            gate: Some("h".into()),
            gate_channel: Some("dephasing:p=0.01".into()),
            ..Default::default()
        };
        assert!(ok.build().unwrap().interleave.is_some());
    }
}
