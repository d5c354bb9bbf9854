use tracelab::bits::BitString;
use tracelab::channel::{ChannelParams, ShiftSpec};
use tracelab::pool::{make_sample_pool, Adversary};
use tracelab::recon::{mean_based_bit, BitOutcome, ReconConfig, ReconMode};
use tracelab::seed::stream_rng;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(60);
    let pool_n: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(900);
    let q: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.05);
    let total_len: usize = n + 120;
    let channel = ChannelParams::new(q, q).unwrap();
    let shift = ShiftSpec::point_mass(0);
    let mut correct = 0; let mut wrong = 0; let mut incon = 0;
    for t in 0..40u64 {
        let mut rng = stream_rng(1000 + t, "y", 0);
        let y = BitString::random(total_len, &mut rng);
        let pool = make_sample_pool(&y, &shift, &channel, 0.0, &Adversary::UniformSameLength, pool_n, 2000 + t).unwrap();
        let prefix = y.slice(0, n - 1);
        let mut cfg = ReconConfig::new(n, 3, ReconMode::Mean);
        cfg.horizon = n + 100;
        cfg.search.rho = 0.985;
        cfg.search.theta_grid = 1024;
        match mean_based_bit(&pool, &prefix, &cfg, &channel, &shift).unwrap() {
            BitOutcome::Decided(b) => { if b == y.get(n-1) { correct += 1 } else { wrong += 1 } }
            BitOutcome::Inconclusive => incon += 1,
        }
    }
    println!("n={n} pool={pool_n} q={q}: correct={correct} wrong={wrong} incon={incon}");
}
