// temp: measure Gardner TED S-curve slope (kd) for RC(0.5) at P=8
use blindrx::prelude::*;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let tx = PulseShape::rrc(0.5, 8, 8).unwrap();
    let rxp = PulseShape::rrc(0.5, 4, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // random BPSK, no channel; evaluate mean TED value at forced offset tau
    let bits: Vec<u8> = (0..4000).map(|_| rng.gen_range(0..2u8)).collect();
    let x = blindrx::synth::shape_symbols(&blindrx::rx::bits_to_symbols(&bits), &tx);
    let r = matched_filter(&x, &rxp);
    let xs = &r.samples;
    let p = 8.0f64;
    let interp = |t: f64| -> Complex64 {
        let n = t.round() as isize;
        let mu = t - n as f64;
        let at = |i: isize| if i >= 0 && (i as usize) < xs.len() { xs[i as usize] } else { Complex64::new(0.0,0.0) };
        let (xm, x0, xp_) = (at(n-1), at(n), at(n+1));
        x0 + (xp_ - xm) * (0.5*mu) + (xp_ - x0*2.0 + xm) * (0.5*mu*mu)
    };
    let power = xs.iter().map(|s| s.norm_sqr()).sum::<f64>() / xs.len() as f64 * 2.0; // strobe power approx = 2x avg for rc? measure directly below
    let strobe_power: f64 = (8..3990).map(|k| xs[k*8].norm_sqr()).sum::<f64>() / 3982.0;
    println!("avg power {power:.3}, strobe power {strobe_power:.3}");
    for tau in [-0.2f64, -0.1, -0.05, -0.02, 0.0, 0.02, 0.05, 0.1, 0.2] {
        let mut acc = 0.0;
        let mut cnt = 0;
        for k in 8..3990 {
            let pos = k as f64 * 8.0 + tau * 8.0;
            let cur = interp(pos);
            let prev = interp(pos - p);
            let mid = interp(pos - p/2.0);
            acc += ((cur - prev) * mid.conj()).re / strobe_power;
            cnt += 1;
        }
        println!("tau={tau:+.2}  E[e]={:+.4}", acc / cnt as f64);
    }
}
