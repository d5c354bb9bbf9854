//! Sample pools: mixtures of shifted traces and adversarial false samples,
//! plus the on-disk pool format.
//!
//! File format: a header line
//! `#tracelab-pool v1 q=<f> qp=<f> eps=<f> seed=<u64> n=<int>`
//! followed by one sample per line as ASCII 0/1, false samples prefixed `!`.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::channel::{apply_shifted_channel, ChannelParams, ShiftSpec};
use crate::error::{Error, Result};
use crate::seed::stream_rng;

/// Generator for false samples. The channel's expected output length for a
/// source of length `n` is `n * p / p'`; the default adversary draws uniform
/// strings of that length.
pub enum Adversary {
    UniformSameLength,
    Custom(Box<dyn Fn(&mut ChaCha8Rng) -> BitString + Sync>),
}

impl Adversary {
    fn generate(&self, source_len: usize, params: &ChannelParams, rng: &mut ChaCha8Rng) -> BitString {
        match self {
            Adversary::UniformSameLength => {
                let len = (source_len as f64 * params.p() / params.p_prime()).round() as usize;
                BitString::random(len, rng)
            }
            Adversary::Custom(f) => f(rng),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SamplePool {
    pub samples: Vec<(BitString, bool)>,
    pub epsilon: f64,
    pub seed: u64,
    pub params: ChannelParams,
}

impl SamplePool {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn false_sample_count(&self) -> usize {
        self.samples.iter().filter(|(_, f)| *f).count()
    }

    pub fn bits(&self) -> impl Iterator<Item = &BitString> {
        self.samples.iter().map(|(b, _)| b)
    }
}

/// Each sample is independently a false sample with probability `epsilon`
/// (drawn from the adversary) or a trace of the shifted channel. Sample `i`
/// uses the RNG stream `(seed, "pool", i)`.
pub fn make_sample_pool(
    x: &BitString,
    shift: &ShiftSpec,
    params: &ChannelParams,
    epsilon: f64,
    adversary: &Adversary,
    n_samples: usize,
    seed: u64,
) -> Result<SamplePool> {
    if !(0.0..1.0).contains(&epsilon) && epsilon != 1.0 {
        return Err(Error::InvalidParam {
            field: "epsilon",
            message: format!("false-sample rate {epsilon} not in [0,1]"),
        });
    }
    if shift.max_shift() >= x.len() {
        return Err(Error::ShiftExceedsString { max_shift: shift.max_shift(), len: x.len() });
    }
    let mut samples = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let mut rng = stream_rng(seed, "pool", i as u64);
        let is_false = rng.gen::<f64>() < epsilon;
        let bits = if is_false {
            adversary.generate(x.len(), params, &mut rng)
        } else {
            apply_shifted_channel(x, shift, params, &mut rng)?.bits
        };
        samples.push((bits, is_false));
    }
    Ok(SamplePool { samples, epsilon, seed, params: *params })
}

pub fn write_pool<W: Write>(pool: &SamplePool, mut w: W) -> Result<()> {
    writeln!(
        w,
        "#tracelab-pool v1 q={} qp={} eps={} seed={} n={}",
        pool.params.q,
        pool.params.q_prime,
        pool.epsilon,
        pool.seed,
        pool.samples.len()
    )?;
    for (bits, is_false) in &pool.samples {
        if *is_false {
            writeln!(w, "!{}", bits)?;
        } else {
            writeln!(w, "{}", bits)?;
        }
    }
    Ok(())
}

pub fn read_pool<R: BufRead>(r: R) -> Result<SamplePool> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::PoolFormat("empty file".into()))??;
    if !header.starts_with("#tracelab-pool v1 ") {
        return Err(Error::PoolFormat(format!("bad header: {header}")));
    }
    let mut q = None;
    let mut qp = None;
    let mut eps = None;
    let mut seed = None;
    let mut n = None;
    for field in header.trim_start_matches("#tracelab-pool v1 ").split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::PoolFormat(format!("bad field: {field}")))?;
        macro_rules! parse {
            ($t:ty) => {
                value
                    .parse::<$t>()
                    .map_err(|_| Error::PoolFormat(format!("bad value in field: {field}")))?
            };
        }
        match key {
            "q" => q = Some(parse!(f64)),
            "qp" => qp = Some(parse!(f64)),
            "eps" => eps = Some(parse!(f64)),
            "seed" => seed = Some(parse!(u64)),
            "n" => n = Some(parse!(usize)),
            _ => return Err(Error::PoolFormat(format!("unknown field: {key}"))),
        }
    }
    let (q, qp, eps, seed, n) = match (q, qp, eps, seed, n) {
        (Some(q), Some(qp), Some(e), Some(s), Some(n)) => (q, qp, e, s, n),
        _ => return Err(Error::PoolFormat("missing header field".into())),
    };
    let mut samples = Vec::with_capacity(n);
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (is_false, body) = match line.strip_prefix('!') {
            Some(rest) => (true, rest),
            None => (false, line.as_str()),
        };
        let bits = BitString::parse(body)
            .ok_or_else(|| Error::PoolFormat(format!("non-binary sample line: {line}")))?;
        samples.push((bits, is_false));
    }
    if samples.len() != n {
        return Err(Error::PoolFormat(format!(
            "header says n={n} but found {} samples",
            samples.len()
        )));
    }
    Ok(SamplePool { samples, epsilon: eps, seed, params: ChannelParams::new(q, qp)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_extremes() {
        let x = BitString::random(20, &mut stream_rng(1, "x", 0));
        let params = ChannelParams::new(0.1, 0.1).unwrap();
        let shift = ShiftSpec::point_mass(0);
        let all_true =
            make_sample_pool(&x, &shift, &params, 0.0, &Adversary::UniformSameLength, 200, 11).unwrap();
        assert_eq!(all_true.false_sample_count(), 0);
        let all_false =
            make_sample_pool(&x, &shift, &params, 1.0, &Adversary::UniformSameLength, 200, 11).unwrap();
        assert_eq!(all_false.false_sample_count(), 200);
    }

    #[test]
    fn false_sample_count_is_binomial() {
        // binomial oracle: count within 3*sqrt(N*eps*(1-eps)) of N*eps
        let x = BitString::random(20, &mut stream_rng(2, "x", 0));
        let params = ChannelParams::new(0.1, 0.1).unwrap();
        let n = 10_000usize;
        let eps = 0.1;
        let pool = make_sample_pool(
            &x,
            &ShiftSpec::point_mass(0),
            &params,
            eps,
            &Adversary::UniformSameLength,
            n,
            17,
        )
        .unwrap();
        let expected = n as f64 * eps;
        let sd = (n as f64 * eps * (1.0 - eps)).sqrt();
        let count = pool.false_sample_count() as f64;
        assert!(
            (count - expected).abs() <= 3.0 * sd,
            "false-sample count {count} outside 3 sigma of {expected}"
        );
    }

    #[test]
    fn pool_file_round_trip() {
        let x = BitString::random(15, &mut stream_rng(3, "x", 0));
        let params = ChannelParams::new(0.2, 0.1).unwrap();
        let pool = make_sample_pool(
            &x,
            &ShiftSpec::uniform(0, 2),
            &params,
            0.3,
            &Adversary::UniformSameLength,
            50,
            23,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_pool(&pool, &mut buf).unwrap();
        let back = read_pool(buf.as_slice()).unwrap();
        assert_eq!(back.samples.len(), pool.samples.len());
        for (a, b) in back.samples.iter().zip(&pool.samples) {
            assert_eq!(a.0, b.0);
            assert_eq!(a.1, b.1);
        }
        assert_eq!(back.epsilon, pool.epsilon);
    }
}
