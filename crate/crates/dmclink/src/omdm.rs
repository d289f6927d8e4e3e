//! Binary orthogonal molecular division multiplexing over two molecule
//! species, plus the hexose-alphabet network planning arithmetic.
//!
//! Two species carry interleaved BCSK substreams on orthogonal sub-channels.
//! The sub-channels share one slot grid: picking `k2 = k1 * D2 / D1` makes
//! both symbol durations equal, `k1 * t_p1 = k2 * t_p2`.

use serde::{Deserialize, Serialize};

use crate::bits::BitStream;
use crate::channel::{concentration_at, ChannelParams, ConcentrationSample, Emission};
use crate::dp::{dp_encode, decode, sampling_times, DpConfig, SymbolSchedule};
use crate::error::{Error, Result};

/// A named molecule species with its diffusion coefficient in cm^2/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeSpec {
    pub name: String,
    pub diffusion_coefficient: f64,
}

impl MoleculeSpec {
    pub fn new(name: impl Into<String>, diffusion_coefficient: f64) -> Result<Self> {
        if diffusion_coefficient <= 0.0 || !diffusion_coefficient.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "diffusion coefficient must be strictly positive, got {diffusion_coefficient}"
            )));
        }
        Ok(Self {
            name: name.into(),
            diffusion_coefficient,
        })
    }
}

/// One entry in the on-disk molecule registry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub name: String,
    /// `null` marks a placeholder whose coefficient the user must supply.
    pub diffusion_coefficient_cm2_per_s: Option<f64>,
    #[serde(default)]
    pub user_supplied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Molecule registry: the species alphabet available for OMDM links.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoleculeRegistry {
    pub entries: Vec<RegistryEntry>,
}

impl MoleculeRegistry {
    /// The registry shipped with the crate: a generic hexose entry plus
    /// glucose/galactose placeholders awaiting user-supplied coefficients.
    pub fn default_registry() -> Self {
        let entries = serde_json::from_str(include_str!("../assets/registry.default.json"))
            .expect("bundled registry is valid JSON");
        Self { entries }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let entries: Vec<RegistryEntry> = serde_json::from_str(json)
            .map_err(|e| Error::Config(format!("registry parse error: {e}")))?;
        let reg = Self { entries };
        reg.validate()?;
        Ok(reg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read registry {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        for (i, a) in self.entries.iter().enumerate() {
            if self.entries[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Config(format!(
                    "duplicate registry entry: {}",
                    a.name
                )));
            }
        }
        Ok(())
    }

    /// Resolve a species by name. Placeholder entries without a coefficient
    /// are an error until the user supplies one.
    pub fn get(&self, name: &str) -> Result<MoleculeSpec> {
        let entry = self
            .entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::UnknownSpecies(name.to_string()))?;
        match entry.diffusion_coefficient_cm2_per_s {
            Some(d) => MoleculeSpec::new(&entry.name, d),
            None => Err(Error::Config(format!(
                "species '{name}' has no diffusion coefficient; supply one in the registry"
            ))),
        }
    }
}

/// Spacing factor of sub-channel 2 that equalizes both symbol durations:
/// `k2 = k1 * D2 / D1`.
pub fn derive_k2(k1: f64, spec1: &MoleculeSpec, spec2: &MoleculeSpec) -> Result<f64> {
    if k1 <= 1.0 || !k1.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "k1 must exceed 1, got {k1}"
        )));
    }
    let k2 = k1 * spec2.diffusion_coefficient / spec1.diffusion_coefficient;
    if k2 <= 1.0 {
        return Err(Error::Config(format!(
            "derived k2 = {k2} violates k > 1; choose species with closer diffusion \
             coefficients or a larger k1"
        )));
    }
    Ok(k2)
}

/// One configured dual-species link: both sub-channels share the distance,
/// the pre-compensation base quantity and the history depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmdmLink {
    pub distance: f64,
    pub species1: MoleculeSpec,
    pub species2: MoleculeSpec,
    pub k1: f64,
    pub k2: f64,
    pub base_quantity: f64,
    pub history_depth: usize,
}

impl OmdmLink {
    pub fn new(
        distance: f64,
        species1: MoleculeSpec,
        species2: MoleculeSpec,
        k1: f64,
        base_quantity: f64,
        history_depth: usize,
    ) -> Result<Self> {
        let k2 = derive_k2(k1, &species1, &species2)?;
        let link = Self {
            distance,
            species1,
            species2,
            k1,
            k2,
            base_quantity,
            history_depth,
        };
        link.channel_params(Sub::One)?.validate()?;
        link.dp_config(Sub::One)?;
        link.dp_config(Sub::Two)?;
        Ok(link)
    }

    pub fn channel_params(&self, sub: Sub) -> Result<ChannelParams> {
        let spec = match sub {
            Sub::One => &self.species1,
            Sub::Two => &self.species2,
        };
        ChannelParams::new(spec.diffusion_coefficient, self.distance)
    }

    pub fn dp_config(&self, sub: Sub) -> Result<DpConfig> {
        let k = match sub {
            Sub::One => self.k1,
            Sub::Two => self.k2,
        };
        DpConfig::new(self.base_quantity, k, self.history_depth)
    }
}

/// Sub-channel selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sub {
    One,
    Two,
}

/// A multiplexed transmit frame: per-sub-channel schedules on a shared slot
/// grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmdmFrame {
    /// Shared slot release times (one per slot).
    pub slot_times: Vec<f64>,
    pub sub1: SymbolSchedule,
    pub sub2: SymbolSchedule,
    /// True when the input stream had odd length and a trailing 0 was added.
    pub padded: bool,
}

impl OmdmFrame {
    pub fn total_emitted(&self) -> f64 {
        self.sub1.total_emitted() + self.sub2.total_emitted()
    }
}

/// Split an interleaved stream: even positions to sub-channel 1, odd to
/// sub-channel 2. Odd-length streams gain a trailing 0 on sub-channel 2.
pub fn deinterleave(bits: &BitStream) -> (BitStream, BitStream, bool) {
    let mut a = Vec::with_capacity(bits.len().div_ceil(2));
    let mut b = Vec::with_capacity(bits.len() / 2);
    for (i, &bit) in bits.iter().enumerate() {
        if i % 2 == 0 {
            a.push(bit);
        } else {
            b.push(bit);
        }
    }
    let padded = a.len() != b.len();
    if padded {
        b.push(0);
    }
    (
        BitStream::new(a).expect("bits already validated"),
        BitStream::new(b).expect("bits already validated"),
        padded,
    )
}

/// Merge two equal-length substreams back into one interleaved stream.
pub fn interleave(sub1: &BitStream, sub2: &BitStream) -> Result<BitStream> {
    if sub1.len() != sub2.len() {
        return Err(Error::Framing(format!(
            "sub-channel lengths differ: {} vs {}",
            sub1.len(),
            sub2.len()
        )));
    }
    let mut out = Vec::with_capacity(sub1.len() * 2);
    for (&a, &b) in sub1.iter().zip(sub2.iter()) {
        out.push(a);
        out.push(b);
    }
    BitStream::new(out)
}

/// Encode an interleaved stream into a dual-species frame, applying peak
/// precompensation independently per sub-channel.
pub fn omdm_encode(link: &OmdmLink, bits: &BitStream) -> Result<OmdmFrame> {
    let (bits1, bits2, padded) = deinterleave(bits);
    let p1 = link.channel_params(Sub::One)?;
    let p2 = link.channel_params(Sub::Two)?;
    let sub1 = dp_encode(&link.dp_config(Sub::One)?, &bits1, crate::channel::peak_time(&p1))?;
    let sub2 = dp_encode(&link.dp_config(Sub::Two)?, &bits2, crate::channel::peak_time(&p2))?;
    let slot_times = sub1.symbols.iter().map(|s| s.release_time).collect();
    Ok(OmdmFrame {
        slot_times,
        sub1,
        sub2,
        padded,
    })
}

/// Simulate the noiseless channel for a frame: each species sampled at its
/// own detector schedule.
pub fn simulate_frame(
    link: &OmdmLink,
    frame: &OmdmFrame,
) -> Result<(Vec<ConcentrationSample>, Vec<ConcentrationSample>)> {
    let mut params_by_species = std::collections::HashMap::new();
    params_by_species.insert(link.species1.name.clone(), link.channel_params(Sub::One)?);
    params_by_species.insert(link.species2.name.clone(), link.channel_params(Sub::Two)?);

    let mut history = Vec::with_capacity(frame.sub1.symbols.len() + frame.sub2.symbols.len());
    for s in &frame.sub1.symbols {
        history.push(Emission::new(s.release_time, s.quantity, &*link.species1.name)?);
    }
    for s in &frame.sub2.symbols {
        history.push(Emission::new(s.release_time, s.quantity, &*link.species2.name)?);
    }

    let mut out = Vec::new();
    for sub in [Sub::One, Sub::Two] {
        let params = link.channel_params(sub)?;
        let cfg = link.dp_config(sub)?;
        let name = match sub {
            Sub::One => &link.species1.name,
            Sub::Two => &link.species2.name,
        };
        let times = sampling_times(&cfg, crate::channel::peak_time(&params), frame.slot_times.len());
        let samples = times
            .into_iter()
            .map(|t| {
                Ok(ConcentrationSample {
                    time: t,
                    value: concentration_at(&params_by_species, &history, name, t)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(samples);
    }
    let s2 = out.pop().expect("two sample sets");
    let s1 = out.pop().expect("two sample sets");
    Ok((s1, s2))
}

/// Threshold-decode per-species samples and re-interleave the substreams.
pub fn omdm_decode(
    link: &OmdmLink,
    samples1: &[ConcentrationSample],
    samples2: &[ConcentrationSample],
) -> Result<BitStream> {
    if samples1.len() != samples2.len() {
        return Err(Error::Framing(format!(
            "per-species sample counts differ: {} vs {}",
            samples1.len(),
            samples2.len()
        )));
    }
    let b1 = decode(&link.dp_config(Sub::One)?, &link.channel_params(Sub::One)?, samples1)?;
    let b2 = decode(&link.dp_config(Sub::Two)?, &link.channel_params(Sub::Two)?, samples2)?;
    interleave(&b1, &b2)
}

/// Molecule consumption and symbol-epoch comparison against binary molecule
/// shift keying, which spends one emission per bit regardless of its value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionReport {
    pub omdm_total: f64,
    pub bmosk_total: f64,
    /// omdm_total / bmosk_total; 0.5 for balanced streams.
    pub ratio: f64,
    pub omdm_epochs: usize,
    pub bmosk_epochs: usize,
}

pub fn consumption_compare(bits: &BitStream, q_per_one: f64) -> ConsumptionReport {
    let omdm_total = bits.ones() as f64 * q_per_one;
    let bmosk_total = bits.len() as f64 * q_per_one;
    ConsumptionReport {
        omdm_total,
        bmosk_total,
        ratio: if bmosk_total > 0.0 {
            omdm_total / bmosk_total
        } else {
            0.0
        },
        omdm_epochs: bits.len().div_ceil(2),
        bmosk_epochs: bits.len(),
    }
}

/// Network access scheme over the hexose isomer alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanScheme {
    /// Species-division access: isomer pairs form independent dual-species
    /// channels of 2 bits per symbol each.
    MdmaBOmdm,
    /// One 32-isomer shift-keying channel of 5 bits per symbol, time-shared.
    Tdma32Imosk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkPlan {
    pub scheme: PlanScheme,
    pub channels: usize,
    pub bits_per_symbol_per_channel: usize,
    pub aggregate_bits_per_symbol: usize,
    /// Expected molecules per delivered bit, in units of the per-emission
    /// quantity Q, assuming balanced bit values.
    pub molecules_per_bit_q: f64,
}

pub fn plan_network(isomer_count: usize, scheme: PlanScheme) -> Result<NetworkPlan> {
    match scheme {
        PlanScheme::MdmaBOmdm => {
            if isomer_count < 2 {
                return Err(Error::Config(format!(
                    "dual-species multiplexing needs at least 2 isomers, got {isomer_count}"
                )));
            }
            let channels = isomer_count / 2;
            Ok(NetworkPlan {
                scheme,
                channels,
                bits_per_symbol_per_channel: 2,
                aggregate_bits_per_symbol: 2 * channels,
                // One emission per 1-bit; balanced bits spend Q/2 per bit.
                molecules_per_bit_q: 0.5,
            })
        }
        PlanScheme::Tdma32Imosk => {
            if isomer_count != 32 {
                return Err(Error::Config(format!(
                    "32-isomer shift keying needs exactly 32 isomers, got {isomer_count}"
                )));
            }
            Ok(NetworkPlan {
                scheme,
                channels: 1,
                bits_per_symbol_per_channel: 5,
                aggregate_bits_per_symbol: 5,
                // One emission conveys 5 bits.
                molecules_per_bit_q: 0.2,
            })
        }
    }
}
