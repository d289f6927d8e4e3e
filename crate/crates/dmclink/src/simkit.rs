//! Seeded, reproducible experiment harness: random bit generation,
//! end-to-end link simulation, BER measurement and sweeps.
//!
//! Random bits come from the ChaCha8 stream cipher keyed through
//! `rand_core`'s `seed_from_u64` expansion (SplitMix64), one bit per 32-bit
//! output word (least significant bit). The generator is fully specified so
//! any implementation, in any language, reproduces the same streams
//! bit-for-bit from the same seed.

use std::collections::HashMap;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::bits::BitStream;
use crate::channel::{concentration_at, ChannelParams, ConcentrationSample, Emission};
use crate::dp::{decode, dp_encode, sampling_times, DpConfig};
use crate::error::{Error, Result};
use crate::omdm::{omdm_decode, omdm_encode, simulate_frame, MoleculeSpec, OmdmLink};

/// Modulation/processing scheme for one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// BCSK with peak precompensation at the configured history depth.
    #[serde(rename = "BCSK_DP")]
    BcskDp,
    /// Plain BCSK: every "1" emits the full base quantity.
    #[serde(rename = "BCSK_NO_DP")]
    BcskNoDp,
    /// Dual-species multiplexing with precompensation per sub-channel.
    #[serde(rename = "B_OMDM")]
    BOmdm,
}

/// One experiment: a seeded random stream through a configured link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub bit_count: usize,
    pub channel: ChannelParams,
    pub dp: DpConfig,
    pub scheme: Scheme,
    /// Second-species channel for the dual-species scheme; defaults to the
    /// same diffusion coefficient as `channel`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel2: Option<ChannelParams>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bit_count < 1 {
            return Err(Error::InvalidParameter(
                "bit count must be at least 1".to_string(),
            ));
        }
        self.channel.validate()?;
        self.dp.validate()?;
        if let Some(c2) = &self.channel2 {
            c2.validate()?;
            if c2.distance != self.channel.distance {
                return Err(Error::Config(
                    "both sub-channels must share the link distance".to_string(),
                ));
            }
        }
        Ok(())
    }
}

/// Outcome of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub bit_errors: u64,
    pub ber: f64,
    pub molecules_emitted_total: f64,
    /// Molecules the precompensation saved versus emitting the full base
    /// quantity for every "1".
    pub molecules_saved_vs_no_dp: f64,
    pub clamp_events: u64,
    /// Per-sub-channel BER, only for the dual-species scheme.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_subchannel_ber: Option<[f64; 2]>,
    /// Wall-clock seconds for the run. Not serialized: emitted output stays
    /// byte-identical across runs of the same config.
    #[serde(skip, default)]
    pub wall_time_s: f64,
}

/// Deterministic iid uniform bits: ChaCha8 keyed via `seed_from_u64`, one
/// bit per `next_u32` word.
pub fn generate_bits(seed: u64, count: usize) -> BitStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = (0..count).map(|_| (rng.next_u32() & 1) as u8).collect();
    BitStream::new(bits).expect("masked bits are 0 or 1")
}

fn count_errors(sent: &[u8], received: &[u8]) -> u64 {
    sent.iter()
        .zip(received)
        .filter(|(a, b)| a != b)
        .count() as u64
}

/// Run one seeded end-to-end link experiment:
/// bits -> encode -> noiseless channel -> sampled detector -> compare.
pub fn run_link_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let start = Instant::now();
    let bits = generate_bits(cfg.seed, cfg.bit_count);
    let ones_budget = bits.ones() as f64 * cfg.dp.base_quantity;

    let result = match cfg.scheme {
        Scheme::BcskDp | Scheme::BcskNoDp => {
            let dp = if cfg.scheme == Scheme::BcskNoDp {
                DpConfig {
                    history_depth: 0,
                    ..cfg.dp
                }
            } else {
                cfg.dp
            };
            let t_p = crate::channel::peak_time(&cfg.channel);
            let sched = dp_encode(&dp, &bits, t_p)?;

            let mut params_by_species = HashMap::new();
            params_by_species.insert("carrier".to_string(), cfg.channel);
            let history = sched
                .symbols
                .iter()
                .map(|s| Emission::new(s.release_time, s.quantity, "carrier"))
                .collect::<Result<Vec<_>>>()?;
            let samples = sampling_times(&dp, t_p, bits.len())
                .into_iter()
                .map(|t| {
                    Ok(ConcentrationSample {
                        time: t,
                        value: concentration_at(&params_by_species, &history, "carrier", t)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let decoded = decode(&dp, &cfg.channel, &samples)?;

            let bit_errors = count_errors(bits.bits(), decoded.bits());
            let total = sched.total_emitted();
            ExperimentResult {
                bit_errors,
                ber: bit_errors as f64 / bits.len() as f64,
                molecules_emitted_total: total,
                molecules_saved_vs_no_dp: ones_budget - total,
                clamp_events: sched.clamp_events,
                per_subchannel_ber: None,
                wall_time_s: 0.0,
            }
        }
        Scheme::BOmdm => {
            let channel2 = cfg.channel2.unwrap_or(cfg.channel);
            let species1 = MoleculeSpec::new("species-1", cfg.channel.diffusion_coefficient)?;
            let species2 = MoleculeSpec::new("species-2", channel2.diffusion_coefficient)?;
            let link = OmdmLink::new(
                cfg.channel.distance,
                species1,
                species2,
                cfg.dp.spacing_factor,
                cfg.dp.base_quantity,
                cfg.dp.history_depth,
            )?;
            let frame = omdm_encode(&link, &bits)?;
            let (s1, s2) = simulate_frame(&link, &frame)?;
            let decoded = omdm_decode(&link, &s1, &s2)?;
            // Compare on the original (unpadded) length.
            let received = &decoded.bits()[..bits.len()];
            let bit_errors = count_errors(bits.bits(), received);

            let sub_ber = |offset: usize| {
                let sent: Vec<u8> = bits.bits().iter().copied().skip(offset).step_by(2).collect();
                let got: Vec<u8> = received.iter().copied().skip(offset).step_by(2).collect();
                if sent.is_empty() {
                    0.0
                } else {
                    count_errors(&sent, &got) as f64 / sent.len() as f64
                }
            };

            let total = frame.total_emitted();
            ExperimentResult {
                bit_errors,
                ber: bit_errors as f64 / bits.len() as f64,
                molecules_emitted_total: total,
                molecules_saved_vs_no_dp: ones_budget - total,
                clamp_events: frame.sub1.clamp_events + frame.sub2.clamp_events,
                per_subchannel_ber: Some([sub_ber(0), sub_ber(1)]),
                wall_time_s: 0.0,
            }
        }
    };

    Ok(ExperimentResult {
        wall_time_s: start.elapsed().as_secs_f64(),
        ..result
    })
}

/// Run a grid of experiments in order. The first invalid configuration
/// aborts the sweep with its grid index.
pub fn sweep(grid: &[ExperimentConfig]) -> Result<Vec<ExperimentResult>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".to_string()));
    }
    grid.iter()
        .enumerate()
        .map(|(i, cfg)| {
            run_link_experiment(cfg)
                .map_err(|e| Error::Config(format!("grid index {i}: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_config(k: f64, m: usize, scheme: Scheme) -> ExperimentConfig {
        ExperimentConfig {
            seed: 7,
            bit_count: 1000,
            channel: ChannelParams::new(0.43, 1.5).unwrap(),
            dp: DpConfig::new(1000.0, k, m).unwrap(),
            scheme,
            channel2: None,
        }
    }

    #[test]
    fn bits_are_seed_deterministic() {
        assert_eq!(generate_bits(42, 256), generate_bits(42, 256));
        // Different seeds differ somewhere, over many pairs.
        for seed in 0..100u64 {
            assert_ne!(generate_bits(seed, 256), generate_bits(seed + 1000, 256));
        }
    }

    #[test]
    fn bits_are_roughly_balanced() {
        let bits = generate_bits(1, 100_000);
        let ones_fraction = bits.ones() as f64 / bits.len() as f64;
        assert!((ones_fraction - 0.5).abs() < 0.01, "got {ones_fraction}");
    }

    #[test]
    fn zero_ber_with_compensation() {
        for (k, m) in [(4.0, 20), (2.0, 40)] {
            let r = run_link_experiment(&paper_config(k, m, Scheme::BcskDp)).unwrap();
            assert_eq!(r.bit_errors, 0, "k={k} m={m}");
            assert_eq!(r.ber, 0.0);
        }
    }

    #[test]
    fn uncompensated_link_has_errors() {
        let r = run_link_experiment(&paper_config(2.0, 0, Scheme::BcskNoDp)).unwrap();
        assert!(r.ber > 0.0);
        assert_eq!(r.molecules_saved_vs_no_dp, 0.0);
    }

    #[test]
    fn molecule_accounting() {
        let cfg = paper_config(4.0, 20, Scheme::BcskDp);
        let r = run_link_experiment(&cfg).unwrap();
        let ones = generate_bits(cfg.seed, cfg.bit_count).ones() as f64;
        assert!(r.molecules_emitted_total <= ones * 1000.0);
        assert!(r.molecules_saved_vs_no_dp > 0.0);
        assert_eq!(r.clamp_events, 0);
    }

    #[test]
    fn omdm_roundtrip_experiment() {
        let mut cfg = paper_config(4.0, 20, Scheme::BOmdm);
        cfg.bit_count = 200;
        let r = run_link_experiment(&cfg).unwrap();
        assert_eq!(r.ber, 0.0);
        assert_eq!(r.per_subchannel_ber, Some([0.0, 0.0]));
    }

    #[test]
    fn results_are_deterministic() {
        let cfg = paper_config(4.0, 20, Scheme::BcskDp);
        let a = run_link_experiment(&cfg).unwrap();
        let b = run_link_experiment(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn sweep_matches_individual_runs_and_reports_bad_index() {
        let mut cfg = paper_config(4.0, 5, Scheme::BcskDp);
        cfg.bit_count = 100;
        let grid = vec![cfg.clone(), cfg.clone()];
        let swept = sweep(&grid).unwrap();
        let single = run_link_experiment(&cfg).unwrap();
        for r in &swept {
            assert_eq!(
                serde_json::to_string(r).unwrap(),
                serde_json::to_string(&single).unwrap()
            );
        }

        let mut bad = cfg.clone();
        bad.bit_count = 0;
        let err = sweep(&[cfg, bad]).unwrap_err();
        assert!(err.to_string().contains("grid index 1"), "{err}");

        assert!(sweep(&[]).is_err());
    }

    #[test]
    fn ber_non_increasing_in_history_depth() {
        // Reported behavior: deeper compensation never hurts on this link.
        let mut prev = f64::INFINITY;
        for m in [0usize, 5, 10, 20] {
            let mut cfg = paper_config(4.0, m, Scheme::BcskDp);
            cfg.bit_count = 300;
            let r = run_link_experiment(&cfg).unwrap();
            assert!(r.ber <= prev, "m={m}: {} > {prev}", r.ber);
            prev = r.ber;
        }
    }
}
