use tracelab::align::{self};
use tracelab::bits::BitString;
use tracelab::channel::{apply_channel, ChannelParams};
use tracelab::pool::SamplePool;
use tracelab::recon::{calibrate_shift, mean_based_bit, AverageCaseConfig, BitOutcome, ReconConfig, ReconMode};
use tracelab::seed::stream_rng;

// per-bit recovery with correct history: error/inconclusive rates
fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_total = 256usize;
    let pool_n: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(10000);
    let q: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.05);
    let rho: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.99);
    let trials: u64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(60);
    let channel = ChannelParams::new(q, q).unwrap();
    let pack = align::practical_params(n_total.max(64), 5.0);
    let prefix_len = pack.coarse.ell + pack.window;
    let (mut ok, mut wrong, mut incon) = (0, 0, 0);
    for t in 0..trials {
        let mut rng = stream_rng(3000 + t, "truth", 0);
        let truth = BitString::random(n_total + 200, &mut rng);
        let vp = BitString::random(prefix_len, &mut stream_rng(4000 + t, "vp", u64::MAX));
        // correct history through bit_idx
        let bit_idx = t as usize % 100; // vary position
        let mut hypothesis = vp.clone();
        for i in 0..bit_idx { hypothesis.push(truth.get(i)); }
        let k = prefix_len + bit_idx;
        let acfg = AverageCaseConfig { seed: 5000 + t, ..Default::default() };
        let a2 = match align::select_a2(&hypothesis, k, &pack, &channel, acfg.a2_trials, acfg.seed ^ k as u64) {
            Ok(a) => a, Err(_) => { incon += 1; continue }
        };
        let mut pool_bits = Vec::new();
        for i in 0..pool_n {
            let mut r = stream_rng(6000 + t, "trace", i as u64);
            let rec = apply_channel(&truth, &channel, &mut r);
            let mut rp = stream_rng(4000 + t, "vp", i as u64);
            let prec = apply_channel(&vp, &channel, &mut rp);
            let padded = prec.bits.concat(&rec.bits);
            if let Ok(m) = align::align_trace(&hypothesis, &padded, k, a2, &pack, &channel, None) {
                if let Some(t2) = m.tau2 { pool_bits.push((t2, padded.suffix(t2 + pack.fine.ell + 2))); }
            }
        }
        let cal = calibrate_shift(&hypothesis, k, a2, &pack, &channel, &acfg, pack.fine.lambda);
        let (frame, shift) = (cal.frame, cal.shift.clone());
        let n_prime = k - frame + 1;
        let samples: Vec<_> = pool_bits
            .into_iter()
            .filter(|&(t2, _)| t2 >= cal.tau2_lo && t2 <= cal.tau2_hi)
            .map(|(_, s)| (s, false))
            .collect();
        let pool = SamplePool { samples, epsilon: 0.0, seed: 0, params: channel };
        let fp = hypothesis.suffix(frame);
        let mut rcfg = ReconConfig::new(n_prime, 3, ReconMode::Mean);
        rcfg.horizon = n_prime + 2 * pack.window;
        rcfg.search.rho = rho;
        rcfg.search.theta_grid = acfg.mean_grid;
        match mean_based_bit(&pool, &fp, &rcfg, &channel, &shift) {
            Ok(BitOutcome::Decided(b)) => {
                if b == truth.get(bit_idx) { ok += 1 } else {
                    wrong += 1;
                    println!("WRONG t={t} bit_idx={bit_idx} k={k} a2={a2} frame={frame} n'={n_prime} pool={} support={:?}",
                        pool.len(), shift.support());
                }
            }
            _ => incon += 1,
        }
    }
    println!("pool={pool_n} q={q} rho={rho}: ok={ok} wrong={wrong} incon={incon}");
}
