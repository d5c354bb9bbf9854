use std::time::Instant;
use tracelab::bits::BitString;
use tracelab::channel::{apply_channel, ChannelParams};
use tracelab::recon::{average_case_reconstruct, AverageCaseConfig};
use tracelab::seed::stream_rng;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(64);
    let pool: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(2000);
    let q: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.05);
    let trials: u64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(2);
    let channel = ChannelParams::new(q, q).unwrap();
    let mut total_acc = 0.0;
    for trial in 0..trials {
        let t0 = Instant::now();
        let mut rng = stream_rng(500 + trial, "truth", 0);
        let truth = BitString::random(n + 400, &mut rng);
        let traces: Vec<BitString> = (0..pool)
            .map(|i| {
                let mut r = stream_rng(600 + trial, "trace", i as u64);
                apply_channel(&truth, &channel, &mut r).bits
            })
            .collect();
        let cfg = AverageCaseConfig { seed: 700 + trial, ..Default::default() };
        let report = average_case_reconstruct(&traces, n, &cfg, &channel).unwrap();
        let correct = (0..n).filter(|&i| report.recovered.get(i) == truth.get(i)).count();
        let acc = correct as f64 / n as f64;
        total_acc += acc;
        println!(
            "trial {trial}: acc={acc:.4} incon={} first_wrong={:?} elapsed={:.1}s",
            report.inconclusive_count,
            (0..n).find(|&i| report.recovered.get(i) != truth.get(i)),
            t0.elapsed().as_secs_f64()
        );
        if std::env::var_os("SHOW_BITS").is_some() {
            for i in 0..n {
                let log = &report.per_bit[i];
                let ok = report.recovered.get(i) == truth.get(i);
                if !ok || log.coin_flip {
                    println!("  bit {i}: truth={} got={} aligned={} out={:?}",
                        truth.get(i), report.recovered.get(i), log.aligned, log.outcome);
                }
            }
        }
    }
    println!("mean accuracy: {:.4}", total_acc / trials as f64);
}
