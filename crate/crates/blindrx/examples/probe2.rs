// Scratch probe for receiver calibration (removed before release).
use blindrx::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    timing_rmse();
    am_correlation();
    packet_loopback();
}

fn timing_rmse() {
    let tx = PulseShape::rrc(0.5, 8, 8).unwrap();
    let rx = PulseShape::rrc(0.5, 4, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sum_sq = 0.0;
    let n = 500;
    for t in 0..n {
        let eps: f64 = rng.gen_range(-0.5..=0.5);
        let x = synth_linear(ModClass::Psk2, 1000, &tx, 1000 + t).unwrap();
        let mut ch = ChannelParams::identity().with_snr(10.0);
        ch.epsilon = eps;
        let y = apply_channel(&x, &mut ch, 2000 + t).unwrap();
        let (yn, _) = normalize(&y).unwrap();
        let r = matched_filter(&yn, &rx);
        let est = estimate_timing(&r, 8, 1000).unwrap();
        let mut err = est.epsilon_hat - eps;
        err -= err.round(); // wraparound distance
        sum_sq += err * err;
    }
    println!("timing RMSE over {n} trials: {:.5}", (sum_sq / n as f64).sqrt());
}

fn am_correlation() {
    let msg = AmMessage::default();
    let x = synth_am(&msg, 8000).unwrap();
    let mut worst: f64 = 1.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let mut ch = ChannelParams::identity().with_snr(20.0);
        ch.theta = rng.gen_range(-3.14..3.14);
        ch.fo_t = rng.gen_range(-0.2..0.2);
        ch.epsilon = rng.gen_range(-0.5..0.5);
        let y = apply_channel(&x, &mut ch, 300 + seed).unwrap();
        let out = receive(&y, &ReceiverConfig::default(), &FrameFormat::default()).unwrap();
        let DemodOutput::AmAudio { samples } = out else {
            println!("seed {seed}: misclassified AM!");
            continue;
        };
        let m = msg.message_samples(8000);
        let c = best_corr(&samples, &m, 8);
        worst = worst.min(c);
    }
    println!("AM worst-case correlation over 20 draws @20dB: {worst:.5}");
}

fn best_corr(a: &[f64], b: &[f64], max_lag: isize) -> f64 {
    let mut best = -1.0f64;
    for lag in -max_lag..=max_lag {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 400..a.len() as isize - 400 {
            let j = i + lag;
            if j >= 0 && j < b.len() as isize {
                xs.push(a[i as usize]);
                ys.push(b[j as usize]);
            }
        }
        best = best.max(pearson(&xs, &ys));
    }
    best
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn packet_loopback() {
    let fmt = FrameFormat::default();
    let tx = PulseShape::rrc(0.5, 8, 8).unwrap();
    let cfg = ReceiverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut ok = 0;
    let mut sfd_miss = 0;
    let mut hdr_bad = 0;
    let mut bit_err = 0;
    let n = 100;
    for t in 0..n {
        let len = rng.gen_range(32..=256);
        let payload: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let mut bits = fmt.packet_bits(&payload);
        // trailing pad so the tail survives filter edges
        for i in 0..8 {
            bits.push(if i % 2 == 0 { 1 } else { 0 });
        }
        let x = blindrx::synth::shape_symbols(&blindrx::rx::bits_to_symbols(&bits), &tx);
        let mut ch = ChannelParams::identity().with_snr(10.0);
        ch.epsilon = rng.gen_range(-0.5..=0.5);
        ch.theta = rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI);
        ch.fo_t = rng.gen_range(-0.01..=0.01);
        let y = apply_channel(&x, &mut ch, 5000 + t as u64).unwrap();
        match receive(&y, &cfg, &fmt).unwrap() {
            DemodOutput::BpskPacket {
                bits: got,
                sfd_found,
                header_ok,
                ..
            } => {
                let expect: Vec<u8> = payload
                    .iter()
                    .flat_map(|&b| (0..8).rev().map(move |k| (b >> k) & 1))
                    .collect();
                if !sfd_found {
                    sfd_miss += 1;
                } else if !header_ok {
                    hdr_bad += 1;
                } else if got == expect {
                    ok += 1;
                } else {
                    bit_err += 1;
                }
            }
            _ => println!("trial {t}: classified as AM!"),
        }
    }
    println!("packets: {ok}/{n} exact, {sfd_miss} sfd-miss, {hdr_bad} hdr-bad, {bit_err} bit-err");
}
