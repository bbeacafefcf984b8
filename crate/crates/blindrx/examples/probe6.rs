// temp: criterion-3 scale calibration
use blindrx::iq::IqStream;
use blindrx::cyclo::{dg_statistic, scan_diagnostics};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

fn noise(k: usize, seed: u64) -> IqStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = (0..k).map(|_| {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(a * (0.5f64).sqrt(), b * (0.5f64).sqrt())
    }).collect();
    IqStream::new(s, 1.0, None)
}

fn main() {
    let t0 = std::time::Instant::now();
    // 125 streams x 800 bins = 1e5 candidates
    let js: Vec<f64> = (0..125u64).into_par_iter().flat_map_iter(|seed| {
        let y = noise(8000, 10_000 + seed);
        let diag = scan_diagnostics(&y, 15.202, 61).unwrap();
        diag.into_iter().enumerate()
            .filter(|(i, _)| i % 10 == 0)
            .map(|(_, (_a, _m, r))| r.map(|t| t.j_k).unwrap_or(f64::NAN))
            .collect::<Vec<_>>()
    }).collect();
    let total = js.len();
    let hits = js.iter().filter(|&&j| j > 15.202).count();
    println!("candidates {total}, FA rate {:.3e} (target [2.5e-4, 1e-3])", hits as f64 / total as f64);

    // KS over 1e4
    let mut sub: Vec<f64> = js.iter().cloned().take(10_000).collect();
    sub.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sub.len() as f64;
    let mut ks: f64 = 0.0;
    for (i, &x) in sub.iter().enumerate() {
        let cdf = 1.0 - (-x / 2.0_f64).exp();
        let e_hi = (i as f64 + 1.0) / n;
        let e_lo = i as f64 / n;
        ks = ks.max((cdf - e_lo).abs()).max((cdf - e_hi).abs());
    }
    println!("KS distance to chi2(2): {ks:.4} (target < 0.02)");
    println!("elapsed {:?}", t0.elapsed());

    // also single off-grid dg_statistic FA sanity
    let mut hits2 = 0;
    for seed in 0..2000u64 {
        let y = noise(4000, 50_000 + seed);
        let r = dg_statistic(&y, 0.1234, 61, 15.202).unwrap();
        if r.is_cycle { hits2 += 1; }
    }
    println!("off-grid dg FA over 2000: {hits2}");
}
