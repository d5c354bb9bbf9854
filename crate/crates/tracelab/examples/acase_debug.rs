use tracelab::bits::BitString;
use tracelab::channel::ChannelParams;
use tracelab::recon::{average_case_reconstruct, AverageCaseConfig};
use tracelab::seed::stream_rng;

fn main() {
    let n = 48usize;
    let mut rng = stream_rng(96, "acase", 0);
    let truth = BitString::random(n + 200, &mut rng);
    let channel = ChannelParams::noiseless();
    let traces: Vec<BitString> = (0..40).map(|_| truth.clone()).collect();
    let mut cfg = AverageCaseConfig { seed: 5, ..Default::default() };
    cfg.a2_trials = 40;
    cfg.calibration_traces = 60;
    let report = average_case_reconstruct(&traces, n, &cfg, &channel).unwrap();
    let mut wrong = 0;
    for i in 0..n {
        if report.recovered.get(i) != truth.get(i) { wrong += 1;
            let log = &report.per_bit[i];
            println!("bit {i}: truth={} got={} aligned={} outcome={:?} flip={}",
                truth.get(i), report.recovered.get(i), log.aligned, log.outcome, log.coin_flip);
        }
    }
    println!("wrong: {wrong}/{n}, inconclusive: {}", report.inconclusive_count);
}
