// Scratch probe for pipeline calibration (removed before release).
use blindrx::harness::{confusion, TrialConfig};

fn main() {
    let trials: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(300);
    for snr in [10.0, 5.0] {
        let cfg = TrialConfig {
            n_trials: trials,
            snr_db: vec![snr],
            seed: 20260809,
            ..Default::default()
        };
        let t0 = std::time::Instant::now();
        let m = confusion(&cfg, snr).unwrap();
        println!("=== SNR {snr} dB ({trials} trials/class, {:?}) ===", t0.elapsed());
        print!("{}", m.to_csv());
    }
}
