// temp diagnostic
use blindrx::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let fmt = FrameFormat::default();
    let tx = PulseShape::rrc(0.5, 8, 8).unwrap();
    let cfg = ReceiverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 100;
    for t in 0..n {
        let len = rng.gen_range(32..=256);
        let payload: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let mut bits = fmt.packet_bits(&payload);
        for i in 0..8 { bits.push(if i % 2 == 0 { 1 } else { 0 }); }
        let x = blindrx::synth::shape_symbols(&blindrx::rx::bits_to_symbols(&bits), &tx);
        let mut ch = ChannelParams::identity().with_snr(10.0);
        ch.epsilon = rng.gen_range(-0.5..=0.5);
        ch.theta = rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI);
        ch.fo_t = rng.gen_range(-0.01..=0.01);
        let y = apply_channel(&x, &mut ch, 5000 + t as u64).unwrap();
        match receive(&y, &cfg, &fmt).unwrap() {
            DemodOutput::BpskPacket { bits: got, sfd_found, header_ok, timing_converged, .. } => {
                let expect: Vec<u8> = payload.iter().flat_map(|&b| (0..8).rev().map(move |k| (b >> k) & 1)).collect();
                if !(sfd_found && header_ok && got == expect) {
                    let nerr = got.iter().zip(&expect).filter(|(a,b)| a != b).count();
                    let first_err = got.iter().zip(&expect).position(|(a,b)| a != b);
                    println!("trial {t}: len={len} eps={:.3} theta={:.3} fo={:.4} sfd={sfd_found} hdr={header_ok} conv={timing_converged} got_len={} errs={nerr} first_err={first_err:?}", ch.epsilon, ch.theta, ch.fo_t, got.len());
                }
            }
            _ => println!("trial {t}: AM"),
        }
    }
}
