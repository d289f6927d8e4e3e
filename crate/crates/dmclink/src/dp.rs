//! BCSK modem with peak-precompensation on the transmit side and a
//! threshold sample-based detector on the receive side.
//!
//! The transmitter reduces each "1" emission by the predicted residual tails
//! of up to `m` prior emissions so that the received peaks stay pinned at
//! `C_max`. The residual that an emission of `Q` molecules contributes at the
//! sampling instant `lag` symbols later is `Q * r(lag)` with
//!
//! ```text
//! r(lag) = (1/(lag*k + 1))^(3/2) * exp((3/2) * (1 - 1/(lag*k + 1)))
//! ```
//!
//! which depends on neither the distance nor the diffusion coefficient
//! (everything is measured relative to the peak, where d^2/(4*D*t_p) = 3/2).

use serde::{Deserialize, Serialize};

use crate::bits::BitStream;
use crate::channel::{peak_concentration, ChannelParams, ConcentrationSample};
use crate::error::{Error, Result};

/// Relative slack below C_max applied by the detector threshold, absorbing
/// floating-point rounding. Truncation error is one-sided (it only raises
/// "1" samples), so the slack cannot cause missed ones.
pub const DETECTOR_SLACK_REL: f64 = 1e-9;

/// Transmit-side precompensation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    /// Per-"1" quantity Q0 in molecules, before compensation.
    pub base_quantity: f64,
    /// Symbol spacing factor k; symbol duration t_s = k * t_p. Must exceed 1.
    pub spacing_factor: f64,
    /// Number of prior symbols whose tails are compensated.
    pub history_depth: usize,
}

impl DpConfig {
    pub fn new(base_quantity: f64, spacing_factor: f64, history_depth: usize) -> Result<Self> {
        let cfg = Self {
            base_quantity,
            spacing_factor,
            history_depth,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.spacing_factor <= 1.0 || !self.spacing_factor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "spacing factor k must exceed 1, got {}",
                self.spacing_factor
            )));
        }
        if self.base_quantity <= 0.0 || !self.base_quantity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "base quantity must be strictly positive, got {}",
                self.base_quantity
            )));
        }
        Ok(())
    }
}

/// One transmitted symbol: what was emitted and when.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolRecord {
    pub symbol_index: usize,
    pub bit: u8,
    /// Actual emitted quantity in molecules, after compensation.
    pub quantity: f64,
    pub release_time: f64,
}

/// The full transmit schedule for one bit stream on one sub-channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSchedule {
    pub symbols: Vec<SymbolRecord>,
    /// How many computed quantities went negative and were clamped to 0.
    pub clamp_events: u64,
}

impl SymbolSchedule {
    pub fn total_emitted(&self) -> f64 {
        self.symbols.iter().map(|s| s.quantity).sum()
    }
}

/// Fraction of an emission's peak value still present at the sampling
/// instant `lag` symbols later. Distance- and diffusion-independent.
pub fn residual_ratio(cfg: &DpConfig, lag: usize) -> Result<f64> {
    cfg.validate()?;
    if lag < 1 {
        return Err(Error::InvalidParameter(
            "residual lag must be at least 1".to_string(),
        ));
    }
    let x = 1.0 / (lag as f64 * cfg.spacing_factor + 1.0);
    Ok(x.powf(1.5) * (1.5 * (1.0 - x)).exp())
}

/// Encode a bit stream into a transmit schedule with peak precompensation.
///
/// A "0" emits nothing. A "1" emits Q0 minus the residuals of the actual
/// (post-compensation) quantities of the previous `history_depth` symbols,
/// clamped below at 0. Release times are `i * k * t_p`.
pub fn dp_encode(cfg: &DpConfig, bits: &BitStream, t_p: f64) -> Result<SymbolSchedule> {
    cfg.validate()?;
    if bits.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot encode an empty bit stream".to_string(),
        ));
    }
    if t_p <= 0.0 || !t_p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "peak time must be strictly positive, got {t_p}"
        )));
    }
    let t_s = cfg.spacing_factor * t_p;
    let mut symbols: Vec<SymbolRecord> = Vec::with_capacity(bits.len());
    let mut clamp_events = 0u64;
    for (n, &bit) in bits.iter().enumerate() {
        let quantity = if bit == 0 {
            0.0
        } else {
            let mut q = cfg.base_quantity;
            for lag in 1..=cfg.history_depth.min(n) {
                q -= residual_ratio(cfg, lag)? * symbols[n - lag].quantity;
            }
            if q < 0.0 {
                clamp_events += 1;
                0.0
            } else {
                q
            }
        };
        symbols.push(SymbolRecord {
            symbol_index: n,
            bit,
            quantity,
            release_time: n as f64 * t_s,
        });
    }
    Ok(SymbolSchedule {
        symbols,
        clamp_events,
    })
}

/// Detector sampling instants: `(i*k + 1) * t_p` for each symbol `i`, one
/// peak time after each release.
pub fn sampling_times(cfg: &DpConfig, t_p: f64, symbol_count: usize) -> Vec<f64> {
    (0..symbol_count)
        .map(|i| (i as f64 * cfg.spacing_factor + 1.0) * t_p)
        .collect()
}

/// Threshold-detect a sequence of concentration samples taken at
/// [`sampling_times`]. A sample at or above `C_max(Q0, d)` (less the
/// floating-point slack) decodes as 1.
pub fn decode(
    cfg: &DpConfig,
    params: &ChannelParams,
    samples: &[ConcentrationSample],
) -> Result<BitStream> {
    cfg.validate()?;
    params.validate()?;
    if samples.is_empty() {
        return Err(Error::Framing("no samples to decode".to_string()));
    }
    let t_p = crate::channel::peak_time(params);
    let expected = sampling_times(cfg, t_p, samples.len());
    for (s, &t) in samples.iter().zip(&expected) {
        if (s.time - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::Framing(format!(
                "sample at t={} does not match schedule instant t={}",
                s.time, t
            )));
        }
    }
    let threshold = peak_concentration(params, cfg.base_quantity) * (1.0 - DETECTOR_SLACK_REL);
    let bits = samples
        .iter()
        .map(|s| u8::from(s.value >= threshold))
        .collect();
    BitStream::new(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{concentration_at, impulse_response, peak_time, Emission};
    use std::collections::HashMap;

    const REL: f64 = 1e-12;

    fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
        if b == 0.0 {
            return a.abs() <= tol;
        }
        ((a - b) / b).abs() <= tol
    }

    fn cfg(k: f64, m: usize) -> DpConfig {
        DpConfig::new(1000.0, k, m).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(DpConfig::new(1000.0, 1.0, 0).is_err());
        assert!(DpConfig::new(1000.0, 0.5, 0).is_err());
        assert!(DpConfig::new(0.0, 2.0, 0).is_err());
        assert!(DpConfig::new(1000.0, 4.0, 0).is_ok());
    }

    #[test]
    fn residual_ratio_values() {
        // Frozen from the independent oracle below: U(t_s + t_p) / C_max.
        let c4 = cfg(4.0, 20);
        assert!(rel_eq(
            residual_ratio(&c4, 1).unwrap(),
            0.2969602852994536,
            REL
        ));
        assert!(rel_eq(
            residual_ratio(&c4, 2).unwrap(),
            0.14050621832159915,
            REL
        ));
        let c2 = cfg(2.0, 40);
        assert!(rel_eq(
            residual_ratio(&c2, 1).unwrap(),
            0.5231335817980326,
            REL
        ));
        assert!(residual_ratio(&c4, 0).is_err());
    }

    #[test]
    fn residual_ratio_matches_channel_oracle() {
        // r(lag) * Q must equal the impulse response at lag*t_s + t_p divided
        // by the peak response, for arbitrary distance and diffusion.
        let cases = [(0.43, 1.5), (2.2e-7, 1e-3), (1e-4, 0.05)];
        for (d_coef, d) in cases {
            let params = ChannelParams::new(d_coef, d).unwrap();
            let t_p = peak_time(&params);
            for k in [1.5, 2.0, 4.0, 7.3] {
                let c = cfg(k, 40);
                let t_s = k * t_p;
                for lag in 1..=5usize {
                    let direct = impulse_response(&params, 1.0, lag as f64 * t_s + t_p)
                        / crate::channel::peak_concentration(&params, 1.0);
                    assert!(rel_eq(residual_ratio(&c, lag).unwrap(), direct, REL));
                }
            }
        }
    }

    #[test]
    fn residual_ratio_monotone_decay() {
        let c = cfg(2.0, 40);
        let mut prev = residual_ratio(&c, 1).unwrap();
        for lag in 2..200 {
            let r = residual_ratio(&c, lag).unwrap();
            assert!(r < prev);
            prev = r;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn residual_ratio_lag_collapse() {
        // Depends on lag and k only through their product.
        let a = residual_ratio(&cfg(4.0, 0), 1).unwrap();
        let b = residual_ratio(&cfg(2.0, 0), 2).unwrap();
        assert!(rel_eq(a, b, REL));
    }

    #[test]
    fn encode_single_one() {
        let sched = dp_encode(&cfg(4.0, 20), &"1".parse().unwrap(), 1.0).unwrap();
        assert_eq!(sched.symbols.len(), 1);
        assert_eq!(sched.symbols[0].quantity, 1000.0);
        assert_eq!(sched.symbols[0].release_time, 0.0);
        assert_eq!(sched.clamp_events, 0);
    }

    #[test]
    fn encode_two_ones_compensates_lag_one() {
        let sched = dp_encode(&cfg(4.0, 20), &"11".parse().unwrap(), 1.0).unwrap();
        // 1000 - r(1)*1000, frozen from the residual oracle.
        assert!(rel_eq(sched.symbols[1].quantity, 703.0397147005464, REL));
    }

    #[test]
    fn encode_skips_zero_but_counts_lag() {
        let sched = dp_encode(&cfg(4.0, 2), &"101".parse().unwrap(), 1.0).unwrap();
        assert_eq!(sched.symbols[1].quantity, 0.0);
        // Third symbol sees only the lag-2 residual of the first.
        assert!(rel_eq(sched.symbols[2].quantity, 859.4937816784009, REL));
    }

    #[test]
    fn encode_release_times_are_symbol_grid() {
        let t_p = 0.872093023255814;
        let sched = dp_encode(&cfg(2.0, 5), &"1011".parse().unwrap(), t_p).unwrap();
        for (i, s) in sched.symbols.iter().enumerate() {
            assert_eq!(s.release_time, i as f64 * 2.0 * t_p);
        }
    }

    #[test]
    fn encode_rejects_empty_stream() {
        let empty = BitStream::new(vec![]).unwrap();
        assert!(dp_encode(&cfg(2.0, 5), &empty, 1.0).is_err());
    }

    #[test]
    fn steady_state_all_ones() {
        // Emitted quantities converge to Q0 / (1 + sum of residual ratios).
        let c = cfg(4.0, 20);
        let bits = BitStream::new(vec![1; 300]).unwrap();
        let sched = dp_encode(&c, &bits, 1.0).unwrap();
        let ratio_sum: f64 = (1..=20).map(|l| residual_ratio(&c, l).unwrap()).sum();
        let limit = 1000.0 / (1.0 + ratio_sum);
        let q200 = sched.symbols[200].quantity;
        assert!(rel_eq(q200, limit, 1e-6), "q200={q200} limit={limit}");
        // Quantities decrease while the history window still grows; once
        // truncation kicks in at depth m the error decays towards the limit.
        for w in sched.symbols[..=20].windows(2) {
            assert!(w[1].quantity <= w[0].quantity + 1e-12);
        }
        let band = (limit - sched.symbols[20].quantity).abs();
        for s in &sched.symbols[20..] {
            let err = (s.quantity - limit).abs();
            assert!(err <= band + 1e-9, "error grew at symbol {}", s.symbol_index);
        }
    }

    #[test]
    fn sampling_times_schedule() {
        let c = cfg(4.0, 20);
        assert_eq!(sampling_times(&c, 1.0, 3), vec![1.0, 5.0, 9.0]);
        let c2 = cfg(2.0, 40);
        let t = sampling_times(&c2, 0.872093023255814, 2);
        assert!(rel_eq(t[0], 0.872093023255814, REL));
        assert!(rel_eq(t[1], 2.616279069767442, REL));
        assert_eq!(sampling_times(&c, 0.5, 1), vec![0.5]);
    }

    fn simulate_samples(
        cfg: &DpConfig,
        params: &ChannelParams,
        sched: &SymbolSchedule,
    ) -> Vec<ConcentrationSample> {
        let mut map = HashMap::new();
        map.insert("x".to_string(), *params);
        let history: Vec<Emission> = sched
            .symbols
            .iter()
            .map(|s| Emission::new(s.release_time, s.quantity, "x").unwrap())
            .collect();
        sampling_times(cfg, peak_time(params), sched.symbols.len())
            .into_iter()
            .map(|t| ConcentrationSample {
                time: t,
                value: concentration_at(&map, &history, "x", t).unwrap(),
            })
            .collect()
    }

    #[test]
    fn decode_isolated_one_and_empty_channel() {
        let c = cfg(4.0, 20);
        let params = ChannelParams::new(0.43, 1.5).unwrap();
        let sched = dp_encode(&c, &"1".parse().unwrap(), peak_time(&params)).unwrap();
        let samples = simulate_samples(&c, &params, &sched);
        assert_eq!(decode(&c, &params, &samples).unwrap().to_string(), "1");

        let zeros = dp_encode(&c, &"000".parse().unwrap(), peak_time(&params)).unwrap();
        let samples = simulate_samples(&c, &params, &zeros);
        assert_eq!(decode(&c, &params, &samples).unwrap().to_string(), "000");
    }

    #[test]
    fn decode_rejects_off_schedule_samples() {
        let c = cfg(4.0, 20);
        let params = ChannelParams::new(0.43, 1.5).unwrap();
        let samples = [ConcentrationSample {
            time: 42.0,
            value: 0.0,
        }];
        assert!(matches!(
            decode(&c, &params, &samples),
            Err(Error::Framing(_))
        ));
        assert!(matches!(decode(&c, &params, &[]), Err(Error::Framing(_))));
    }

    #[test]
    fn one_samples_never_fall_below_threshold() {
        // Truncation error is one-sided: every "1" sample sits at or above
        // C_max, so all decode errors are 0 -> 1 flips.
        let params = ChannelParams::new(0.43, 1.5).unwrap();
        let c = cfg(4.0, 3);
        let bits: BitStream = "110111011111101".parse().unwrap();
        let sched = dp_encode(&c, &bits, peak_time(&params)).unwrap();
        let samples = simulate_samples(&c, &params, &sched);
        let c_max = crate::channel::peak_concentration(&params, 1000.0);
        for (s, &b) in samples.iter().zip(bits.bits()) {
            if b == 1 {
                assert!(s.value >= c_max * (1.0 - DETECTOR_SLACK_REL));
            }
        }
    }

    #[test]
    fn peak_discipline_full_history() {
        // With history covering the whole stream, every "1" sample equals
        // C_max to within the detector slack.
        let params = ChannelParams::new(0.43, 1.5).unwrap();
        let c = cfg(2.0, 64);
        let bits = BitStream::new(vec![1; 50]).unwrap();
        let sched = dp_encode(&c, &bits, peak_time(&params)).unwrap();
        let samples = simulate_samples(&c, &params, &sched);
        let c_max = crate::channel::peak_concentration(&params, 1000.0);
        for s in &samples {
            assert!(rel_eq(s.value, c_max, 1e-9), "sample {}", s.value);
        }
    }
}
