use tracelab::align::{self};
use tracelab::bits::BitString;
use tracelab::channel::{apply_channel, ChannelParams};
use tracelab::recon::{mean_based_bit, BitOutcome, ReconConfig, ReconMode};
use tracelab::pool::SamplePool;
use tracelab::channel::ShiftSpec;
use tracelab::seed::stream_rng;

fn main() {
    let n = 256usize; let pool_n = 10000usize; let q = 0.05; let trial = 1u64;
    let channel = ChannelParams::new(q, q).unwrap();
    let mut rng = stream_rng(500 + trial, "truth", 0);
    let truth = BitString::random(n + 400, &mut rng);
    let pack = align::practical_params(n.max(64), 5.0);
    let prefix_len = pack.coarse.ell + pack.window;
    println!("pack: ell_c={} lam_c={} ell_f={} lam_f={} window={} prefix={}",
        pack.coarse.ell, pack.coarse.lambda, pack.fine.ell, pack.fine.lambda, pack.window, prefix_len);
    let vp = BitString::random(prefix_len, &mut stream_rng(700 + trial, "virtual-prefix", u64::MAX));
    let mut hypothesis = vp.clone();
    for i in 0..2 { hypothesis.push(truth.get(i)); }
    let k = prefix_len + 2;
    let a2 = align::select_a2(&hypothesis, k, &pack, &channel, 120, (700 + trial) ^ k as u64);
    println!("k={k} a2={a2:?} k-a2={:?}", a2.as_ref().map(|a| k - a));
    let a2 = a2.unwrap();
    let mut tau2s = 0usize; let mut pool_bits = Vec::new();
    let mut g_hist = std::collections::BTreeMap::new();
    for i in 0..pool_n {
        let mut r = stream_rng(600 + trial, "trace", i as u64);
        let rec = apply_channel(&truth, &channel, &mut r);
        let mut rp = stream_rng(700 + trial, "virtual-prefix", i as u64);
        let prec = apply_channel(&vp, &channel, &mut rp);
        let padded = prec.bits.concat(&rec.bits);
        let m = align::align_trace(&hypothesis, &padded, k, a2, &pack, &channel, None).unwrap();
        if let Some(t2) = m.tau2 {
            tau2s += 1;
            let g = if t2 < prec.bits.len() { prec.g_map[t2] as i64 } else { (prefix_len + rec.g_map[t2 - prec.bits.len()]) as i64 };
            *g_hist.entry(g - a2 as i64).or_insert(0usize) += 1;
            pool_bits.push((padded.suffix(t2), false));
        }
    }
    println!("tau2 finite: {tau2s}/{pool_n}");
    let top: Vec<_> = g_hist.iter().filter(|(_, &c)| c > tau2s / 50).collect();
    println!("main landings (g-a2: count): {:?}", top);
    // now run the mean decision as the loop would
    let frame_output = g_hist.iter().max_by_key(|(_, &c)| c).unwrap();
    println!("modal landing offset {} count {}", frame_output.0, frame_output.1);
    let lambda_f = pack.fine.lambda;
    let frame = a2 - 3*lambda_f.max(1);
    let n_prime = k - frame + 1;
    println!("fallback frame {} n'={}", frame, n_prime);
    // calibrated decision replicating loop internals:
    let pool = SamplePool { samples: pool_bits, epsilon: 0.0, seed: 0, params: channel };
    let frame_prefix = hypothesis.suffix(a2 - 2); // placeholder; real loop calibrates
    let _ = (frame_prefix, pool, n_prime);
    // try mean_based_bit with the TRUE calibration: use g_hist as sigma
    let gmin = *g_hist.keys().next().unwrap() + a2 as i64;
    let support: Vec<(usize, f64)> = g_hist.iter().map(|(&d, &c)| (((d + a2 as i64) - gmin) as usize, c as f64 / tau2s as f64)).collect();
    let spec = ShiftSpec::new(support).unwrap();
    let frame = gmin as usize;
    let n_p = k - frame + 1;
    let mut rcfg = ReconConfig::new(n_p, 3, ReconMode::Mean);
    rcfg.horizon = n_p + 2 * pack.window;
    rcfg.search.rho = 0.985;
    rcfg.search.theta_grid = 512;
    let pool2: Vec<_> = (0..pool_n).filter_map(|i| {
        let mut r = stream_rng(600 + trial, "trace", i as u64);
        let rec = apply_channel(&truth, &channel, &mut r);
        let mut rp = stream_rng(700 + trial, "virtual-prefix", i as u64);
        let prec = apply_channel(&vp, &channel, &mut rp);
        let padded = prec.bits.concat(&rec.bits);
        let m = align::align_trace(&hypothesis, &padded, k, a2, &pack, &channel, None).unwrap();
        m.tau2.map(|t2| (padded.suffix(t2), false))
    }).collect();
    let pool2 = SamplePool { samples: pool2, epsilon: 0.0, seed: 0, params: channel };
    let fp = hypothesis.suffix(frame);
    match mean_based_bit(&pool2, &fp, &rcfg, &channel, &spec) {
        Ok(BitOutcome::Decided(b)) => println!("decided {b} truth {}", truth.get(2)),
        Ok(BitOutcome::Inconclusive) => println!("INCONCLUSIVE (truth {})", truth.get(2)),
        Err(e) => println!("err {e}"),
    }
}
