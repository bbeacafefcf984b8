//! `blindrx` — synthesize impaired records, classify them blindly, and
//! demodulate AM / 2-PSK without a training sequence.
//!
//! Every run that writes files also writes a `manifest.json` holding the
//! fully resolved parameters; re-running with `--config manifest.json`
//! reproduces the outputs byte for byte.

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blindrx::classifier::{classify, ClassifierThresholds};
use blindrx::cyclo::scan_diagnostics;
use blindrx::harness::{confusion, PulseSpec, TrialConfig};
use blindrx::io;
use blindrx::iq::{normalize, ChannelParams};
use blindrx::modulation::ModClass;
use blindrx::rx::{receive, DemodOutput, FrameFormat, ReceiverConfig};
use blindrx::synth::{shape_symbols, synth_am, synth_linear, AmMessage};
use blindrx::rx::bits_to_symbols;

#[derive(Parser)]
#[command(name = "blindrx", version, about)]
struct Cli {
    /// JSON config (or a previous run's manifest); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for Monte Carlo runs (default: all cores). Outputs
    /// do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one impaired record to <out>.iq + <out>.json.
    Simulate(SimulateArgs),
    /// Classify a record; prints the decision as JSON.
    Classify {
        /// Base path of the .iq/.json pair.
        input: PathBuf,
    },
    /// Monte Carlo confusion matrix at one or more SNRs.
    Confusion(ConfusionArgs),
    /// Alias for `confusion` with an SNR list (kept for symmetry).
    Sweep(ConfusionArgs),
    /// Blind receive: AM audio or a 2-PSK packet.
    Receive {
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Dump per-candidate cyclic-mean magnitude and test statistic as CSV.
    TestCycles {
        input: PathBuf,
        /// CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    symbols: Option<usize>,
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    fo_t: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    c0_re: Option<f64>,
    #[arg(long)]
    c0_im: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// AM modulation index.
    #[arg(long)]
    ka: Option<f64>,
    /// 2-PSK packet payload as hex; wraps it in the frame format.
    #[arg(long)]
    payload_hex: Option<String>,
    #[arg(long, default_value = "record")]
    out: PathBuf,
}

#[derive(clap::Args, Debug)]
struct ConfusionArgs {
    /// SNR points in dB (comma-separated).
    #[arg(long, value_delimiter = ',')]
    snr: Vec<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    symbols: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

/// Resolved simulate parameters; this is what the manifest stores.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SimulateParams {
    class: ModClass,
    symbols: usize,
    channel: ChannelParams,
    seed: u64,
    ka: f64,
    payload_hex: Option<String>,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            class: ModClass::Psk2,
            symbols: 1000,
            channel: ChannelParams::identity().with_snr(10.0),
            seed: 1,
            ka: 0.5,
            payload_hex: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest<T> {
    command: String,
    params: T,
}

fn load_config_params<T: serde::de::DeserializeOwned>(
    path: &Option<PathBuf>,
    command: &str,
) -> anyhow::Result<Option<T>> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    // Accept either a bare params object or a manifest wrapper.
    let params = match value.get("command") {
        Some(cmd) => {
            if cmd.as_str() != Some(command) {
                bail!(
                    "config is a manifest for '{}', not '{command}'",
                    cmd.as_str().unwrap_or("?")
                );
            }
            value
                .get("params")
                .cloned()
                .context("manifest missing params")?
        }
        None => value,
    };
    Ok(Some(serde_json::from_value(params)?))
}

fn write_manifest<T: Serialize>(dir: &Path, command: &str, params: &T) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let manifest = Manifest {
        command: command.to_string(),
        params,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Simulate(args) => simulate(&cli.config, args),
        Command::Classify { input } => classify_file(&input),
        Command::Confusion(args) | Command::Sweep(args) => confusion_cmd(&cli.config, args),
        Command::Receive { input, out_dir } => receive_file(&input, &out_dir),
        Command::TestCycles { input, out } => test_cycles(&input, out.as_deref()),
    }
}

fn simulate(config: &Option<PathBuf>, args: SimulateArgs) -> anyhow::Result<ExitCode> {
    let mut p: SimulateParams =
        load_config_params(config, "simulate")?.unwrap_or_default();
    if let Some(c) = &args.class {
        p.class = c.parse::<ModClass>().map_err(|e| anyhow::anyhow!("{e}"))?;
    }
    if let Some(v) = args.symbols {
        p.symbols = v;
    }
    if let Some(v) = args.snr {
        p.channel.snr_db = v;
    }
    if let Some(v) = args.fo_t {
        p.channel.fo_t = v;
    }
    if let Some(v) = args.epsilon {
        p.channel.epsilon = v;
    }
    if let Some(v) = args.theta {
        p.channel.theta = v;
    }
    if let Some(v) = args.c0_re {
        p.channel.c0_re = v;
    }
    if let Some(v) = args.c0_im {
        p.channel.c0_im = v;
    }
    if let Some(v) = args.seed {
        p.seed = v;
    }
    if let Some(v) = args.ka {
        p.ka = v;
    }
    if args.payload_hex.is_some() {
        p.payload_hex = args.payload_hex.clone();
    }

    let spec = PulseSpec::default();
    let x = match (&p.payload_hex, p.class) {
        (Some(hex), ModClass::Psk2) => {
            let payload = decode_hex(hex)?;
            let fmt = FrameFormat::default();
            let mut bits = fmt.packet_bits(&payload);
            for i in 0..8 {
                bits.push(if i % 2 == 0 { 1 } else { 0 });
            }
            shape_symbols(&bits_to_symbols(&bits), &spec.tx_pulse()?)
        }
        (Some(_), _) => bail!("--payload-hex requires --class psk2"),
        (None, ModClass::Am) => {
            let msg = AmMessage {
                ka: p.ka,
                ..Default::default()
            };
            synth_am(&msg, p.symbols * spec.oversampling)?
        }
        (None, class) => synth_linear(class, p.symbols, &spec.tx_pulse()?, p.seed)?,
    };
    let mut channel = p.channel.clone();
    let y = blindrx::channel::apply_channel(&x, &mut channel, p.seed ^ 0x9E3779B97F4A7C15)?;
    p.channel = channel.clone();

    io::save_stream(&args.out, &y, Some(p.class), Some(channel), Some(p.seed))?;
    if let Some(dir) = args.out.parent() {
        let dir = if dir.as_os_str().is_empty() {
            Path::new(".")
        } else {
            dir
        };
        write_manifest(dir, "simulate", &p)?;
    }
    eprintln!(
        "wrote {}.iq ({} samples) and sidecar",
        args.out.display(),
        y.samples.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn decode_hex(s: &str) -> anyhow::Result<Vec<u8>> {
    let s = s.trim();
    if s.len() % 2 != 0 {
        bail!("hex payload must have an even number of digits");
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).context("bad hex digit"))
        .collect()
}

fn encode_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn classify_file(input: &Path) -> anyhow::Result<ExitCode> {
    let (y, sidecar) = io::load_stream(input)?;
    let (yn, scale) = normalize(&y)?;
    let sigma2 = sidecar
        .channel
        .as_ref()
        .map(|c| c.noise_var / (scale * scale))
        .unwrap_or(0.0);
    let rx_pulse = PulseSpec::default().rx_pulse()?;
    match classify(&yn, sigma2, &rx_pulse, &ClassifierThresholds::default()) {
        Ok(decision) => {
            println!("{}", serde_json::to_string_pretty(&decision)?);
            Ok(ExitCode::SUCCESS)
        }
        Err(e) if e.is_no_decision() => {
            println!("{}", serde_json::json!({ "no_decision": e.to_string() }));
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.into()),
    }
}

fn confusion_cmd(config: &Option<PathBuf>, args: ConfusionArgs) -> anyhow::Result<ExitCode> {
    let mut cfg: TrialConfig = load_config_params(config, "confusion")?.unwrap_or_default();
    if !args.snr.is_empty() {
        cfg.snr_db = args.snr.clone();
    }
    if let Some(v) = args.trials {
        cfg.n_trials = v;
    }
    if let Some(v) = args.symbols {
        cfg.n_symbols = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }

    std::fs::create_dir_all(&args.out_dir)?;
    write_manifest(&args.out_dir, "confusion", &cfg)?;
    let t0 = std::time::Instant::now();
    let mut results = Vec::new();
    for &snr in &cfg.snr_db {
        let m = confusion(&cfg, snr)?;
        let csv_path = args.out_dir.join(format!("confusion_{snr}dB.csv"));
        std::fs::write(&csv_path, m.to_csv())?;
        eprintln!("snr {snr} dB -> {}", csv_path.display());
        results.push(m);
    }
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "config": cfg,
        "matrices": results,
    }))?;
    std::fs::write(args.out_dir.join("results.json"), json)?;
    eprintln!("done in {:?}", t0.elapsed());
    Ok(ExitCode::SUCCESS)
}

fn receive_file(input: &Path, out_dir: &Path) -> anyhow::Result<ExitCode> {
    let (y, _sidecar) = io::load_stream(input)?;
    let cfg = ReceiverConfig::default();
    let fmt = FrameFormat::default();
    std::fs::create_dir_all(out_dir)?;
    match receive(&y, &cfg, &fmt)? {
        DemodOutput::AmAudio { samples } => {
            let audio_path = out_dir.join("am_audio.f64");
            io::write_f64(&audio_path, &samples)?;
            let metrics = serde_json::json!({
                "kind": "am_audio",
                "n_samples": samples.len(),
                "audio_file": audio_path.file_name().unwrap().to_str(),
            });
            let text = serde_json::to_string_pretty(&metrics)?;
            std::fs::write(out_dir.join("receive.json"), &text)?;
            println!("{text}");
        }
        DemodOutput::BpskPacket {
            bits,
            sfd_found,
            header_ok,
            payload_len,
            timing_converged,
        } => {
            let bytes: Vec<u8> = bits
                .chunks(8)
                .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b))
                .collect();
            let metrics = serde_json::json!({
                "kind": "bpsk_packet",
                "sfd_found": sfd_found,
                "header_ok": header_ok,
                "payload_len": payload_len,
                "timing_converged": timing_converged,
                "payload_hex": encode_hex(&bytes),
            });
            let text = serde_json::to_string_pretty(&metrics)?;
            std::fs::write(out_dir.join("receive.json"), &text)?;
            println!("{text}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn test_cycles(input: &Path, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    let (y, _) = io::load_stream(input)?;
    let (yn, _) = normalize(&y)?;
    let th = ClassifierThresholds::default();
    let diag = scan_diagnostics(&yn, th.gamma, th.l_s)?;
    let mut csv = String::from("alpha,magnitude,j_k,is_cycle\n");
    for (alpha, mag, res) in &diag {
        match res {
            Some(r) => csv.push_str(&format!(
                "{alpha:.6},{mag:.6e},{:.4},{}\n",
                r.j_k, r.is_cycle as u8
            )),
            None => csv.push_str(&format!("{alpha:.6},{mag:.6e},,\n")),
        }
    }
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    let (count, detected) = blindrx::cyclo::count_cycle_frequencies(
        &yn,
        th.pre_threshold,
        th.gamma,
        th.l_s,
    )?;
    let summary = serde_json::json!({
        "cycle_count": count,
        "detected": detected
            .iter()
            .map(|d| serde_json::json!({ "alpha": d.alpha, "j_k": d.j_k, "magnitude": d.magnitude }))
            .collect::<Vec<_>>(),
    });
    eprintln!("{}", serde_json::to_string(&summary)?);
    Ok(ExitCode::SUCCESS)
}
