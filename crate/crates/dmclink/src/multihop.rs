//! Closed-form multi-hop analysis: end-to-end throughput scaling, equal-peak
//! molecule budgets, and reservoir planning.
//!
//! Splitting a distance-d route into N equal hops shortens every hop to d/N,
//! so the symbol duration shrinks by N^2 while the hop count only grows by N:
//! end-to-end throughput is `6*n*D*N / (k*d^2)`. Holding the received peak
//! constant across the split costs `Q/N^3` per hop emission, an N^2 saving on
//! the whole route.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::dp::SymbolSchedule;
use crate::error::{Error, Result};

/// Route description for the throughput and budget laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopPlan {
    /// Source-to-destination distance in cm.
    pub distance: f64,
    /// Number of equal-length hops; each hop spans distance / hops.
    pub hops: u32,
    /// Bandwidth efficiency n in bits per symbol.
    pub bandwidth_efficiency: f64,
    /// Symbol spacing factor k (> 1).
    pub spacing_factor: f64,
    /// Diffusion coefficient D in cm^2/s.
    pub diffusion_coefficient: f64,
}

impl HopPlan {
    pub fn new(
        distance: f64,
        hops: u32,
        bandwidth_efficiency: f64,
        spacing_factor: f64,
        diffusion_coefficient: f64,
    ) -> Result<Self> {
        let plan = Self {
            distance,
            hops,
            bandwidth_efficiency,
            spacing_factor,
            diffusion_coefficient,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        ChannelParams::new(self.diffusion_coefficient, self.distance)?;
        if self.hops < 1 {
            return Err(Error::InvalidParameter("hop count must be at least 1".into()));
        }
        if self.bandwidth_efficiency <= 0.0 || !self.bandwidth_efficiency.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bandwidth efficiency must be strictly positive, got {}",
                self.bandwidth_efficiency
            )));
        }
        if self.spacing_factor <= 1.0 || !self.spacing_factor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "spacing factor k must exceed 1, got {}",
                self.spacing_factor
            )));
        }
        Ok(())
    }

    pub fn with_hops(&self, hops: u32) -> Self {
        Self { hops, ..*self }
    }
}

/// End-to-end throughput in bits/s: `6*n*D*N / (k*d^2)`.
pub fn throughput(plan: &HopPlan) -> f64 {
    // Single-hop rate scaled by N last, so Th(N) = N * Th(1) holds bitwise.
    6.0 * plan.bandwidth_efficiency * plan.diffusion_coefficient
        / (plan.spacing_factor * plan.distance * plan.distance)
        * plan.hops as f64
}

/// Molecule savings of an N-hop split at equal received peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoleculeRatios {
    /// Single-hop emission vs per-hop emission: N^3.
    pub per_emission_ratio: f64,
    /// Single-hop emission vs whole-route total (N hops x Q_multi): N^2.
    pub route_total_ratio: f64,
}

pub fn molecule_ratios(hops: u32) -> MoleculeRatios {
    let n = hops as f64;
    MoleculeRatios {
        per_emission_ratio: n * n * n,
        route_total_ratio: n * n,
    }
}

/// Per-hop quantity that reproduces the single-hop received peak across an
/// N-way split: `q_one_hop / N^3`.
pub fn equal_peak_quantity(distance: f64, hops: u32, q_one_hop: f64) -> Result<f64> {
    if distance <= 0.0 || !distance.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "distance must be strictly positive, got {distance}"
        )));
    }
    if hops < 1 {
        return Err(Error::InvalidParameter("hop count must be at least 1".into()));
    }
    if q_one_hop < 0.0 || q_one_hop.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "quantity must be non-negative, got {q_one_hop}"
        )));
    }
    let n = hops as f64;
    Ok(q_one_hop / (n * n * n))
}

/// Throughput as a function of hop count, for plotting: `(N, Th(N))` for
/// N = 1..=n_max.
pub fn fig3_series(template: &HopPlan, n_max: u32) -> Result<Vec<(u32, f64)>> {
    template.validate()?;
    if n_max < 1 {
        return Err(Error::InvalidParameter("N_max must be at least 1".into()));
    }
    Ok((1..=n_max)
        .map(|n| (n, throughput(&template.with_hops(n))))
        .collect())
}

/// Per-message molecule spend: either the actual post-compensation schedule
/// totals, or the balanced-stream expectation 0.5 * bits * Q.
#[derive(Debug, Clone)]
pub enum MessageSpend<'a> {
    Schedule(&'a SymbolSchedule),
    Balanced { bit_count: usize },
}

/// Reservoir budget for one transmitting node on an N-hop route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    /// Per-hop emission quantity at equal received peak.
    pub q_multi: f64,
    /// The single-hop quantity this replaces.
    pub q_one_hop_equivalent: f64,
    /// Whole-route molecules per emission epoch: N * q_multi.
    pub route_total: f64,
    pub reservoir: f64,
    /// Expected molecules one transmitting node spends per message.
    pub per_message_total: f64,
    /// Messages deliverable from the reservoir; `None` means the message
    /// consumes nothing, so the count is unbounded.
    pub messages_deliverable: Option<u64>,
}

pub fn budget_report(
    q_per_symbol: f64,
    message: MessageSpend<'_>,
    reservoir: f64,
    hops: u32,
    distance: f64,
) -> Result<BudgetReport> {
    if reservoir <= 0.0 || !reservoir.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "reservoir must be strictly positive, got {reservoir}"
        )));
    }
    let q_multi = equal_peak_quantity(distance, hops, q_per_symbol)?;
    let scale = q_multi / q_per_symbol;
    // Per-message spend at the single-hop quantity scale, then rescaled to
    // the per-hop quantity.
    let one_hop_spend = match message {
        MessageSpend::Schedule(sched) => sched.total_emitted(),
        MessageSpend::Balanced { bit_count } => 0.5 * bit_count as f64 * q_per_symbol,
    };
    let per_message_total = one_hop_spend * scale;
    let messages_deliverable = if per_message_total > 0.0 {
        Some((reservoir / per_message_total).floor() as u64)
    } else {
        None
    };
    Ok(BudgetReport {
        q_multi,
        q_one_hop_equivalent: q_per_symbol,
        route_total: hops as f64 * q_multi,
        reservoir,
        per_message_total,
        messages_deliverable,
    })
}
