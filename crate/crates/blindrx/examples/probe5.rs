// temp: loopback margin across seed batches + lower SNR stress
use blindrx::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run_batch(master: u64, snr: f64) -> usize {
    let fmt = FrameFormat::default();
    let tx = PulseShape::rrc(0.5, 8, 8).unwrap();
    let cfg = ReceiverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    let mut ok = 0;
    for t in 0..100u64 {
        let len = rng.gen_range(32..=256);
        let payload: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let mut bits = fmt.packet_bits(&payload);
        for i in 0..8 { bits.push(if i % 2 == 0 { 1 } else { 0 }); }
        let x = blindrx::synth::shape_symbols(&blindrx::rx::bits_to_symbols(&bits), &tx);
        let mut ch = ChannelParams::identity().with_snr(snr);
        ch.epsilon = rng.gen_range(-0.5..=0.5);
        ch.theta = rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI);
        ch.fo_t = rng.gen_range(-0.01..=0.01);
        let y = apply_channel(&x, &mut ch, master * 1000 + t).unwrap();
        if let DemodOutput::BpskPacket { bits: got, sfd_found: true, header_ok: true, .. } =
            receive(&y, &cfg, &fmt).unwrap()
        {
            let expect: Vec<u8> = payload.iter().flat_map(|&b| (0..8).rev().map(move |k| (b >> k) & 1)).collect();
            if got == expect { ok += 1; }
        }
    }
    ok
}

fn main() {
    for snr in [10.0, 7.0, 5.0] {
        let counts: Vec<usize> = (0..5).map(|s| run_batch(42 + s, snr)).collect();
        println!("snr {snr}: {counts:?} /100 per batch");
    }
}
