//! Closed-form free-diffusion channel physics.
//!
//! A point impulse of `Q` molecules released at distance `d` in an unbounded
//! 3-D medium with diffusion coefficient `D` produces the concentration
//!
//! ```text
//! U(t, d) = Q * (4*pi*D*t)^(-3/2) * exp(-d^2 / (4*D*t))
//! ```
//!
//! at the receiver. The pulse peaks at `t_p = d^2 / (6*D)` with peak value
//! `C_max = (3/(2*pi*e))^(3/2) * Q / d^3`, which is independent of `D`.
//!
//! All quantities are CGS: cm, s, molecules, molecules/cm^3.

use std::collections::HashMap;
use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One physical sub-channel: medium diffusion coefficient and Tx-Rx distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Diffusion coefficient D in cm^2/s.
    pub diffusion_coefficient: f64,
    /// Transmitter-receiver distance d in cm.
    pub distance: f64,
}

impl ChannelParams {
    pub fn new(diffusion_coefficient: f64, distance: f64) -> Result<Self> {
        let p = Self {
            diffusion_coefficient,
            distance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.diffusion_coefficient <= 0.0 || !self.diffusion_coefficient.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "diffusion coefficient must be strictly positive and finite, got {}",
                self.diffusion_coefficient
            )));
        }
        if self.distance <= 0.0 || !self.distance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "distance must be strictly positive and finite, got {}",
                self.distance
            )));
        }
        Ok(())
    }
}

/// A timestamped impulse release of molecules of one species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Emission {
    /// Release time t0 in s.
    pub release_time: f64,
    /// Released quantity Q in molecules (real-valued; precompensation produces
    /// fractional quantities).
    pub quantity: f64,
    /// Species identifier.
    pub species: String,
}

impl Emission {
    pub fn new(release_time: f64, quantity: f64, species: impl Into<String>) -> Result<Self> {
        if release_time < 0.0 || release_time.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "release time must be non-negative, got {release_time}"
            )));
        }
        if quantity < 0.0 || quantity.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "emission quantity must be non-negative, got {quantity}"
            )));
        }
        Ok(Self {
            release_time,
            quantity,
            species: species.into(),
        })
    }
}

/// A concentration observation at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSample {
    /// Sample time t in s.
    pub time: f64,
    /// Concentration in molecules/cm^3.
    pub value: f64,
}

/// Concentration at the receiver `elapsed` seconds after an impulse of
/// `quantity` molecules.
///
/// Returns 0 at `elapsed = 0` (the t -> 0+ limit for d > 0) and for a zero
/// quantity.
pub fn impulse_response(params: &ChannelParams, quantity: f64, elapsed: f64) -> f64 {
    debug_assert!(elapsed >= 0.0);
    debug_assert!(quantity >= 0.0);
    if elapsed <= 0.0 || quantity == 0.0 {
        return 0.0;
    }
    let d = params.distance;
    let four_dt = 4.0 * params.diffusion_coefficient * elapsed;
    quantity * (PI * four_dt).powf(-1.5) * (-d * d / four_dt).exp()
}

/// Time of the pulse maximum, t_p = d^2 / (6*D).
pub fn peak_time(params: &ChannelParams) -> f64 {
    params.distance * params.distance / (6.0 * params.diffusion_coefficient)
}

/// Peak received concentration of a single impulse,
/// C_max = (3/(2*pi*e))^(3/2) * Q / d^3.
///
/// Independent of the diffusion coefficient: D shifts the peak in time but not
/// in amplitude.
pub fn peak_concentration(params: &ChannelParams, quantity: f64) -> f64 {
    debug_assert!(quantity >= 0.0);
    let d = params.distance;
    (3.0 / (2.0 * PI * E)).powf(1.5) * quantity / (d * d * d)
}

/// Superposed concentration of one species at `query_time`, summing the
/// impulse responses of every past emission of that species.
///
/// Emissions of other species contribute nothing (ideal receptor selectivity),
/// and emissions released after `query_time` are ignored.
pub fn concentration_at(
    params_by_species: &HashMap<String, ChannelParams>,
    history: &[Emission],
    species: &str,
    query_time: f64,
) -> Result<f64> {
    let params = params_by_species
        .get(species)
        .ok_or_else(|| Error::UnknownSpecies(species.to_string()))?;
    let mut total = 0.0;
    for e in history {
        if e.species == species && e.release_time <= query_time {
            total += impulse_response(params, e.quantity, query_time - e.release_time);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    const REL: f64 = 1e-12;

    fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
        if b == 0.0 {
            return a == 0.0;
        }
        ((a - b) / b).abs() <= tol
    }

    fn paper_params() -> ChannelParams {
        ChannelParams::new(0.43, 1.5).unwrap()
    }

    #[test]
    fn rejects_non_positive_params() {
        assert!(ChannelParams::new(0.0, 1.0).is_err());
        assert!(ChannelParams::new(-0.1, 1.0).is_err());
        assert!(ChannelParams::new(1.0, 0.0).is_err());
        assert!(ChannelParams::new(f64::NAN, 1.0).is_err());
        assert!(ChannelParams::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn impulse_response_at_peak_time() {
        // Direct evaluation at t_p; frozen from the closed form and
        // cross-checked against peak_concentration below.
        let p = paper_params();
        let c = impulse_response(&p, 1000.0, 0.872093023255814);
        assert!(rel_eq(c, 21.812054769607606, 1e-9), "got {c}");
    }

    #[test]
    fn impulse_response_degenerate_inputs() {
        let p = paper_params();
        assert_eq!(impulse_response(&p, 0.0, 1.0), 0.0);
        assert_eq!(impulse_response(&p, 1000.0, 0.0), 0.0);
    }

    #[test]
    fn peak_time_values() {
        let p = paper_params();
        assert!(rel_eq(peak_time(&p), 0.872093023255814, REL));
        // 10 um link at the averaged hexose diffusion coefficient.
        let q = ChannelParams::new(2.2e-7, 1e-3).unwrap();
        assert!(rel_eq(peak_time(&q), 0.7575757575757575, REL));
    }

    #[test]
    fn peak_time_quadratic_in_distance() {
        let p = paper_params();
        let doubled = ChannelParams::new(0.43, 3.0).unwrap();
        assert!(rel_eq(peak_time(&doubled), 4.0 * peak_time(&p), REL));
    }

    #[test]
    fn peak_concentration_value_and_cubic_decay() {
        let p = paper_params();
        let c = peak_concentration(&p, 1000.0);
        assert!(rel_eq(c, 21.812054769607606, REL), "got {c}");
        let doubled = ChannelParams::new(0.43, 3.0).unwrap();
        assert!(rel_eq(peak_concentration(&doubled, 1000.0), c / 8.0, REL));
    }

    #[test]
    fn peak_concentration_matches_impulse_response_at_peak() {
        // Dual route: the closed-form C_max must equal U(t_p) for any D.
        for exp in -8..=-1 {
            let d_coef = 10f64.powi(exp);
            let p = ChannelParams::new(d_coef, 1.5).unwrap();
            let via_curve = impulse_response(&p, 1000.0, peak_time(&p));
            let closed = peak_concentration(&p, 1000.0);
            assert!(rel_eq(via_curve, closed, REL), "D={d_coef}");
        }
    }

    #[test]
    fn exponent_identity_at_peak() {
        // d^2 / (4*D*t_p) = 3/2 for any valid parameters.
        let cases = [(0.43, 1.5), (2.2e-7, 1e-3), (1e-5, 0.2)];
        for (d_coef, d) in cases {
            let p = ChannelParams::new(d_coef, d).unwrap();
            let x = d * d / (4.0 * d_coef * peak_time(&p));
            assert!(rel_eq(x, 1.5, REL));
        }
    }

    #[test]
    fn concentration_at_superposition_and_selectivity() {
        let mut map = HashMap::new();
        let p = paper_params();
        map.insert("hexose".to_string(), p);
        map.insert("other".to_string(), ChannelParams::new(0.2, 1.5).unwrap());

        assert_eq!(concentration_at(&map, &[], "hexose", 1.0).unwrap(), 0.0);

        let tp = peak_time(&p);
        let single = vec![Emission::new(0.0, 1000.0, "hexose").unwrap()];
        let halves = vec![
            Emission::new(0.0, 500.0, "hexose").unwrap(),
            Emission::new(0.0, 500.0, "hexose").unwrap(),
        ];
        for t in [0.1, tp, 2.0 * tp, 10.0 * tp] {
            let a = concentration_at(&map, &single, "hexose", t).unwrap();
            let b = concentration_at(&map, &halves, "hexose", t).unwrap();
            assert!(rel_eq(a, b, REL));
        }
        let at_peak = concentration_at(&map, &single, "hexose", tp).unwrap();
        assert!(rel_eq(at_peak, peak_concentration(&p, 1000.0), REL));

        // Cross-species traffic is invisible.
        let mixed = vec![
            Emission::new(0.0, 1000.0, "hexose").unwrap(),
            Emission::new(0.0, 9e9, "other").unwrap(),
        ];
        let a = concentration_at(&map, &mixed, "hexose", tp).unwrap();
        assert!(rel_eq(a, at_peak, REL));
    }

    #[test]
    fn concentration_at_ignores_future_emissions() {
        let mut map = HashMap::new();
        map.insert("hexose".to_string(), paper_params());
        let hist = vec![Emission::new(5.0, 1000.0, "hexose").unwrap()];
        assert_eq!(concentration_at(&map, &hist, "hexose", 1.0).unwrap(), 0.0);
    }

    #[test]
    fn concentration_at_unknown_species() {
        let map = HashMap::new();
        let err = concentration_at(&map, &[], "nope", 0.0).unwrap_err();
        assert!(matches!(err, Error::UnknownSpecies(_)));
    }
}
