//! Command-line front end: one subcommand per analysis, emitting plot-ready
//! CSV or round-trip JSON.
//!
//! Exit status: 0 on successful computation, 2 on usage/parse errors, 3 on
//! physics/configuration validation errors. A measured BER is data, not a
//! failure.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dmclink::bits::BitStream;
use dmclink::channel::{impulse_response, ChannelParams};
use dmclink::dp::DpConfig;
use dmclink::multihop::{fig3_series, molecule_ratios, HopPlan};
use dmclink::omdm::{
    consumption_compare, omdm_decode, omdm_encode, plan_network, simulate_frame,
    ConsumptionReport, MoleculeRegistry, OmdmLink, PlanScheme,
};
use dmclink::simkit::{generate_bits, run_link_experiment, ExperimentConfig, Scheme};

#[derive(Parser)]
#[command(name = "dmclink", version, about = "Diffusion-based molecular communication link toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format; tabular commands default to csv, reports to json.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write output to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the received impulse response over time.
    Impulse {
        /// Diffusion coefficient D in cm^2/s.
        #[arg(long)]
        diffusion: f64,
        /// Tx-Rx distance, e.g. "1.5", "1.5cm" or "10um".
        #[arg(long)]
        distance: String,
        /// Emitted quantity Q in molecules.
        #[arg(long, default_value_t = 1000.0)]
        quantity: f64,
        /// Last sampled instant in s.
        #[arg(long)]
        t_max: f64,
        /// Number of uniformly spaced rows (at least 2).
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a seeded end-to-end link experiment and report the BER.
    Ber {
        /// Named parameter bundle: "paper-k4" or "paper-k2".
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// JSON file mirroring the experiment config field names.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        diffusion: Option<f64>,
        #[arg(long)]
        distance: Option<String>,
        /// Base quantity Q0 in molecules.
        #[arg(long)]
        quantity: Option<f64>,
        /// Symbol spacing factor k (> 1).
        #[arg(long)]
        k: Option<f64>,
        /// Compensation history depth m.
        #[arg(long)]
        history: Option<usize>,
        /// Number of random bits.
        #[arg(long)]
        bits: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_scheme)]
        scheme: Option<Scheme>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Dual-species multiplexing roundtrip report.
    Omdm {
        /// Literal bit string, e.g. "1001"; alternative to --seed/--count.
        #[arg(long)]
        bits: Option<String>,
        #[arg(long, conflicts_with = "bits")]
        seed: Option<u64>,
        #[arg(long, requires = "seed")]
        count: Option<usize>,
        /// Molecule registry JSON; defaults to the bundled registry.
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long)]
        species1: String,
        #[arg(long)]
        species2: String,
        /// Spacing factor of sub-channel 1; k2 is derived.
        #[arg(long, default_value_t = 4.0)]
        k: f64,
        #[arg(long, default_value_t = 1000.0)]
        quantity: f64,
        #[arg(long, default_value_t = 20)]
        history: usize,
        #[arg(long, default_value = "10um")]
        distance: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Throughput and molecule-ratio table versus hop count.
    Multihop {
        #[arg(long)]
        diffusion: f64,
        #[arg(long)]
        distance: String,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        /// Bandwidth efficiency n in bits per symbol.
        #[arg(long, default_value_t = 1.0)]
        efficiency: f64,
        /// Largest hop count N to tabulate.
        #[arg(long)]
        hops: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Network planning arithmetic over an isomer alphabet.
    Plan {
        #[arg(long)]
        isomers: usize,
        #[arg(long, value_parser = parse_plan_scheme)]
        scheme: PlanScheme,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "BCSK_DP" | "bcsk-dp" => Ok(Scheme::BcskDp),
        "BCSK_NO_DP" | "bcsk-no-dp" => Ok(Scheme::BcskNoDp),
        "B_OMDM" | "b-omdm" => Ok(Scheme::BOmdm),
        other => Err(format!(
            "unknown scheme '{other}' (expected bcsk-dp, bcsk-no-dp or b-omdm)"
        )),
    }
}

fn parse_plan_scheme(s: &str) -> Result<PlanScheme, String> {
    match s {
        "mdma-bomdm" => Ok(PlanScheme::MdmaBOmdm),
        "tdma-imosk" => Ok(PlanScheme::Tdma32Imosk),
        other => Err(format!(
            "unknown scheme '{other}' (expected mdma-bomdm or tdma-imosk)"
        )),
    }
}

/// Parse a distance with an optional unit suffix; bare numbers are cm.
fn parse_distance(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let (num, scale) = if let Some(v) = s.strip_suffix("um") {
        (v, 1e-4)
    } else if let Some(v) = s.strip_suffix("cm") {
        (v, 1.0)
    } else {
        (s, 1.0)
    };
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("--distance: cannot parse '{s}'")))?;
    let cm = value * scale;
    if cm <= 0.0 || !cm.is_finite() {
        return Err(CliError::Validation(format!(
            "--distance must be strictly positive, got {s}"
        )));
    }
    Ok(cm)
}

enum CliError {
    Usage(String),
    Validation(String),
    Io(String),
}

impl From<dmclink::Error> for CliError {
    fn from(e: dmclink::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Impulse {
            diffusion,
            distance,
            quantity,
            t_max,
            samples,
            output,
        } => cmd_impulse(diffusion, &distance, quantity, t_max, samples, &output),
        Command::Ber {
            preset,
            config,
            diffusion,
            distance,
            quantity,
            k,
            history,
            bits,
            seed,
            scheme,
            output,
        } => {
            let cfg = build_experiment_config(
                preset.as_deref(),
                config.as_deref(),
                diffusion,
                distance.as_deref(),
                quantity,
                k,
                history,
                bits,
                seed,
                scheme,
            )?;
            cmd_ber(&cfg, &output)
        }
        Command::Omdm {
            bits,
            seed,
            count,
            registry,
            species1,
            species2,
            k,
            quantity,
            history,
            distance,
            output,
        } => cmd_omdm(
            bits.as_deref(),
            seed,
            count,
            registry.as_deref(),
            &species1,
            &species2,
            k,
            quantity,
            history,
            &distance,
            &output,
        ),
        Command::Multihop {
            diffusion,
            distance,
            k,
            efficiency,
            hops,
            output,
        } => cmd_multihop(diffusion, &distance, k, efficiency, hops, &output),
        Command::Plan {
            isomers,
            scheme,
            output,
        } => cmd_plan(isomers, scheme, &output),
    }
}

fn emit(output: &OutputArgs, default: Format, csv: String, json: String) -> Result<(), CliError> {
    let format = output.format.unwrap_or(default);
    let text = match format {
        Format::Csv => csv,
        Format::Json => json,
    };
    match &output.out {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(text.as_bytes())?;
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// Six significant digits for plot-ready CSV columns.
fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.5e}")
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn cmd_impulse(
    diffusion: f64,
    distance: &str,
    quantity: f64,
    t_max: f64,
    samples: usize,
    output: &OutputArgs,
) -> Result<(), CliError> {
    if samples < 2 {
        return Err(CliError::Validation(format!(
            "--samples must be at least 2, got {samples}"
        )));
    }
    if t_max <= 0.0 || !t_max.is_finite() {
        return Err(CliError::Validation(format!(
            "--t-max must be strictly positive, got {t_max}"
        )));
    }
    if quantity < 0.0 || quantity.is_nan() {
        return Err(CliError::Validation(format!(
            "--quantity must be non-negative, got {quantity}"
        )));
    }
    let params = ChannelParams::new(diffusion, parse_distance(distance)?)
        .map_err(|e| CliError::Validation(format!("--diffusion/--distance: {e}")))?;

    #[derive(Serialize)]
    struct Row {
        t_s: f64,
        concentration_molecules_per_cm3: f64,
    }
    let rows: Vec<Row> = (0..samples)
        .map(|i| {
            let t = t_max * i as f64 / (samples - 1) as f64;
            Row {
                t_s: t,
                concentration_molecules_per_cm3: impulse_response(&params, quantity, t),
            }
        })
        .collect();

    let mut csv = String::from("t_s,concentration_molecules_per_cm3\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{}", sig6(r.t_s), sig6(r.concentration_molecules_per_cm3));
    }
    emit(output, Format::Csv, csv, to_json(&rows))
}

#[allow(clippy::too_many_arguments)]
fn build_experiment_config(
    preset: Option<&str>,
    config: Option<&std::path::Path>,
    diffusion: Option<f64>,
    distance: Option<&str>,
    quantity: Option<f64>,
    k: Option<f64>,
    history: Option<usize>,
    bits: Option<usize>,
    seed: Option<u64>,
    scheme: Option<Scheme>,
) -> Result<ExperimentConfig, CliError> {
    let mut cfg = if let Some(path) = config {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str::<ExperimentConfig>(&text)
            .map_err(|e| CliError::Usage(format!("config parse error: {e}")))?
    } else {
        let (k0, m0) = match preset {
            Some("paper-k4") => (4.0, 20),
            Some("paper-k2") => (2.0, 40),
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "unknown preset '{other}' (expected paper-k4 or paper-k2)"
                )))
            }
            // Bare flags start from the k=4 bundle and override freely.
            None => (4.0, 20),
        };
        ExperimentConfig {
            seed: 1,
            bit_count: 1000,
            channel: ChannelParams {
                diffusion_coefficient: 0.43,
                distance: 1.5,
            },
            dp: DpConfig {
                base_quantity: 1000.0,
                spacing_factor: k0,
                history_depth: m0,
            },
            scheme: Scheme::BcskDp,
            channel2: None,
        }
    };
    if let Some(d) = diffusion {
        cfg.channel.diffusion_coefficient = d;
    }
    if let Some(s) = distance {
        cfg.channel.distance = parse_distance(s)?;
    }
    if let Some(q) = quantity {
        cfg.dp.base_quantity = q;
    }
    if let Some(k) = k {
        cfg.dp.spacing_factor = k;
    }
    if let Some(m) = history {
        cfg.dp.history_depth = m;
    }
    if let Some(n) = bits {
        cfg.bit_count = n;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(s) = scheme {
        cfg.scheme = s;
    }
    Ok(cfg)
}

fn cmd_ber(cfg: &ExperimentConfig, output: &OutputArgs) -> Result<(), CliError> {
    let result = run_link_experiment(cfg)?;
    eprintln!("wall time: {:.6} s", result.wall_time_s);

    let mut csv = String::from(
        "bit_errors,ber,molecules_emitted_total,molecules_saved_vs_no_dp,clamp_events\n",
    );
    let _ = writeln!(
        csv,
        "{},{},{},{},{}",
        result.bit_errors,
        sig6(result.ber),
        sig6(result.molecules_emitted_total),
        sig6(result.molecules_saved_vs_no_dp),
        result.clamp_events
    );
    emit(output, Format::Json, csv, to_json(&result))
}

#[derive(Serialize)]
struct SlotEmission {
    slot: usize,
    release_time_s: f64,
    quantity_species1: f64,
    quantity_species2: f64,
}

#[derive(Serialize)]
struct OmdmReport {
    species1: String,
    species2: String,
    k1: f64,
    k2: f64,
    input_bits: String,
    decoded_bits: String,
    matches: bool,
    padded: bool,
    slots: Vec<SlotEmission>,
    consumption: ConsumptionReport,
}

#[allow(clippy::too_many_arguments)]
fn cmd_omdm(
    bits: Option<&str>,
    seed: Option<u64>,
    count: Option<usize>,
    registry: Option<&std::path::Path>,
    species1: &str,
    species2: &str,
    k: f64,
    quantity: f64,
    history: usize,
    distance: &str,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let stream = match (bits, seed) {
        (Some(s), _) => BitStream::from_str(s)
            .map_err(|e| CliError::Usage(format!("--bits: {e}")))?,
        (None, Some(seed)) => generate_bits(seed, count.unwrap_or(200)),
        (None, None) => {
            return Err(CliError::Usage(
                "provide either --bits or --seed (with optional --count)".to_string(),
            ))
        }
    };
    if stream.is_empty() {
        return Err(CliError::Usage("--bits must be non-empty".to_string()));
    }

    let reg = match registry {
        Some(path) => MoleculeRegistry::load(path)?,
        None => MoleculeRegistry::default_registry(),
    };
    let link = OmdmLink::new(
        parse_distance(distance)?,
        reg.get(species1)?,
        reg.get(species2)?,
        k,
        quantity,
        history,
    )?;

    let frame = omdm_encode(&link, &stream)?;
    let (s1, s2) = simulate_frame(&link, &frame)?;
    let decoded_full = omdm_decode(&link, &s1, &s2)?;
    let decoded = BitStream::new(decoded_full.bits()[..stream.len()].to_vec())
        .expect("decoded bits are binary");
    let matches = decoded == stream;

    let slots: Vec<SlotEmission> = frame
        .slot_times
        .iter()
        .enumerate()
        .map(|(i, &t)| SlotEmission {
            slot: i,
            release_time_s: t,
            quantity_species1: frame.sub1.symbols[i].quantity,
            quantity_species2: frame.sub2.symbols[i].quantity,
        })
        .collect();

    let report = OmdmReport {
        species1: species1.to_string(),
        species2: species2.to_string(),
        k1: k,
        k2: link.k2,
        input_bits: stream.to_string(),
        decoded_bits: decoded.to_string(),
        matches,
        padded: frame.padded,
        slots,
        consumption: consumption_compare(&stream, quantity),
    };

    let mut csv = String::from("k1,k2,matches,padded,omdm_total,bmosk_total,omdm_epochs,bmosk_epochs\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{}",
        sig6(report.k1),
        sig6(report.k2),
        report.matches,
        report.padded,
        sig6(report.consumption.omdm_total),
        sig6(report.consumption.bmosk_total),
        report.consumption.omdm_epochs,
        report.consumption.bmosk_epochs
    );
    emit(output, Format::Json, csv, to_json(&report))
}

fn cmd_multihop(
    diffusion: f64,
    distance: &str,
    k: f64,
    efficiency: f64,
    hops: u32,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let plan = HopPlan::new(parse_distance(distance)?, 1, efficiency, k, diffusion)?;
    let series = fig3_series(&plan, hops)?;

    #[derive(Serialize)]
    struct Row {
        hops: u32,
        /// Assumed bandwidth efficiency; recorded so the n=1 reproduction
        /// assumption travels with the data.
        n_bits_per_symbol: f64,
        throughput_bits_per_s: f64,
        per_emission_ratio: f64,
        route_total_ratio: f64,
    }
    let rows: Vec<Row> = series
        .into_iter()
        .map(|(n, th)| {
            let r = molecule_ratios(n);
            Row {
                hops: n,
                n_bits_per_symbol: efficiency,
                throughput_bits_per_s: th,
                per_emission_ratio: r.per_emission_ratio,
                route_total_ratio: r.route_total_ratio,
            }
        })
        .collect();

    let mut csv = String::from(
        "hops,n_bits_per_symbol,throughput_bits_per_s,per_emission_ratio,route_total_ratio\n",
    );
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.hops,
            sig6(r.n_bits_per_symbol),
            sig6(r.throughput_bits_per_s),
            sig6(r.per_emission_ratio),
            sig6(r.route_total_ratio)
        );
    }
    emit(output, Format::Csv, csv, to_json(&rows))
}

fn cmd_plan(isomers: usize, scheme: PlanScheme, output: &OutputArgs) -> Result<(), CliError> {
    let plan = plan_network(isomers, scheme)?;
    let mut csv = String::from(
        "channels,bits_per_symbol_per_channel,aggregate_bits_per_symbol,molecules_per_bit_q\n",
    );
    let _ = writeln!(
        csv,
        "{},{},{},{}",
        plan.channels,
        plan.bits_per_symbol_per_channel,
        plan.aggregate_bits_per_symbol,
        sig6(plan.molecules_per_bit_q)
    );
    emit(output, Format::Json, csv, to_json(&plan))
}
