//! Insertion-deletion channel with optional random shift.
//!
//! Per source bit, a Geometric(q') number of uniform bits is inserted before
//! it, then every bit of the lengthened string is deleted independently with
//! probability q. A shifted trace first erases the first `s` bits of the
//! source, `s` drawn from the shift pmf. No bits are inserted after the last
//! source bit.

use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    pub q: f64,
    pub q_prime: f64,
}

impl ChannelParams {
    pub fn new(q: f64, q_prime: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) || !q.is_finite() {
            return Err(Error::InvalidParam {
                field: "q",
                message: format!("deletion probability {q} not in [0,1)"),
            });
        }
        if !(0.0..1.0).contains(&q_prime) || !q_prime.is_finite() {
            return Err(Error::InvalidParam {
                field: "q_prime",
                message: format!("insertion probability {q_prime} not in [0,1)"),
            });
        }
        Ok(ChannelParams { q, q_prime })
    }

    pub fn noiseless() -> Self {
        ChannelParams { q: 0.0, q_prime: 0.0 }
    }

    pub fn p(&self) -> f64 {
        1.0 - self.q
    }

    pub fn p_prime(&self) -> f64 {
        1.0 - self.q_prime
    }
}

/// Shift pmf with support in `[offset, offset + width]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftSpec {
    /// (shift, probability), sorted by shift, probabilities summing to 1.
    support: Vec<(usize, f64)>,
}

impl ShiftSpec {
    pub fn new(mut support: Vec<(usize, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidParam {
                field: "shift",
                message: "empty support".into(),
            });
        }
        support.sort_by_key(|&(s, _)| s);
        let total: f64 = support.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParam {
                field: "shift",
                message: format!("probabilities sum to {total}, not 1"),
            });
        }
        if support.iter().any(|&(_, p)| p < 0.0) {
            return Err(Error::InvalidParam {
                field: "shift",
                message: "negative probability".into(),
            });
        }
        Ok(ShiftSpec { support })
    }

    pub fn point_mass(s: usize) -> Self {
        ShiftSpec { support: vec![(s, 1.0)] }
    }

    pub fn uniform(lo: usize, hi: usize) -> Self {
        let n = hi - lo + 1;
        ShiftSpec {
            support: (lo..=hi).map(|s| (s, 1.0 / n as f64)).collect(),
        }
    }

    pub fn support(&self) -> &[(usize, f64)] {
        &self.support
    }

    /// Smallest shift in the support (the paper's `a`).
    pub fn offset(&self) -> usize {
        self.support[0].0
    }

    pub fn max_shift(&self) -> usize {
        self.support.last().unwrap().0
    }

    /// Support width (the paper's eta).
    pub fn width(&self) -> usize {
        self.max_shift() - self.offset()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(s, p) in &self.support {
            acc += p;
            if u < acc {
                return s;
            }
        }
        self.max_shift()
    }
}

/// Origin of one output bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Inserted,
    /// 0-based index into the original (unshifted) source string.
    Source(usize),
}

/// One trace plus the ground truth of how the channel produced it.
///
/// `f_map[j]` is the trace index to which source bit `j` was sent, or, if bit
/// `j` was deleted (or erased by the shift), the trace index of the next
/// surviving source bit; a source bit past the last surviving one maps to
/// `trace_len` (one past the end). `g_map[r]` is the source index from which
/// trace bit `r` originated, or for inserted bits the source index of the
/// next non-inserted trace bit; trailing inserted bits map to `source_len`.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub bits: BitString,
    pub provenance: Vec<Provenance>,
    pub shift_used: usize,
    pub f_map: Vec<usize>,
    pub g_map: Vec<usize>,
    source_len: usize,
}

impl TraceRecord {
    pub fn trace_len(&self) -> usize {
        self.bits.len()
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    /// The paper's misalignment d(k, k') = max(|f(k) - k'|, |g(k') - k|),
    /// with `k` a 0-based source index and `k_prime` a 0-based trace index.
    pub fn misalignment(&self, k: usize, k_prime: usize) -> Result<u64> {
        if k >= self.f_map.len() {
            return Err(Error::IndexOutOfRange { index: k, len: self.f_map.len() });
        }
        if k_prime >= self.g_map.len() {
            return Err(Error::IndexOutOfRange { index: k_prime, len: self.g_map.len() });
        }
        let df = (self.f_map[k] as i64 - k_prime as i64).unsigned_abs();
        let dg = (self.g_map[k_prime] as i64 - k as i64).unsigned_abs();
        Ok(df.max(dg))
    }
}

/// Geometric(q') insertion count via inverse CDF on one 64-bit uniform.
/// Pr[G = v] = q'^v (1 - q').
fn geometric<R: Rng>(q_prime: f64, rng: &mut R) -> usize {
    if q_prime == 0.0 {
        // burn one draw so the consumed randomness does not depend on q'
        let _ = rng.gen::<u64>();
        return 0;
    }
    let u = (rng.gen::<u64>() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    // G = floor(ln(1-u)/ln(q'))
    ((1.0 - u).ln() / q_prime.ln()).floor() as usize
}

pub fn apply_channel<R: Rng>(x: &BitString, params: &ChannelParams, rng: &mut R) -> TraceRecord {
    apply_shifted_channel_unchecked(x, 0, params, rng)
}

/// Applies the channel to `x(s:)`, recording provenance in original
/// coordinates. Callers validate `s` against `|x|`.
fn apply_shifted_channel_unchecked<R: Rng>(
    x: &BitString,
    s: usize,
    params: &ChannelParams,
    rng: &mut R,
) -> TraceRecord {
    let n = x.len();
    let mut bits = BitString::new(Vec::new());
    let mut provenance = Vec::new();
    for j in s..n {
        let ins = geometric(params.q_prime, rng);
        for _ in 0..ins {
            let b = rng.gen_range(0..=1u8);
            if rng.gen::<f64>() >= params.q {
                bits.push(b);
                provenance.push(Provenance::Inserted);
            }
        }
        if rng.gen::<f64>() >= params.q {
            bits.push(x.get(j));
            provenance.push(Provenance::Source(j));
        }
    }

    let m = bits.len();
    let mut f_map = vec![m; n];
    let mut next_out = m;
    let mut source_out = vec![None; n];
    for (r, pv) in provenance.iter().enumerate() {
        if let Provenance::Source(j) = pv {
            source_out[*j] = Some(r);
        }
    }
    for j in (0..n).rev() {
        if let Some(r) = source_out[j] {
            next_out = r;
        }
        f_map[j] = next_out;
    }

    let mut g_map = vec![n; m];
    let mut next_src = n;
    for r in (0..m).rev() {
        if let Provenance::Source(j) = provenance[r] {
            next_src = j;
        }
        g_map[r] = next_src;
    }

    TraceRecord { bits, provenance, shift_used: s, f_map, g_map, source_len: n }
}

pub fn apply_shifted_channel<R: Rng>(
    x: &BitString,
    shift: &ShiftSpec,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<TraceRecord> {
    if shift.max_shift() >= x.len() {
        return Err(Error::ShiftExceedsString { max_shift: shift.max_shift(), len: x.len() });
    }
    let s = shift.sample(rng);
    Ok(apply_shifted_channel_unchecked(x, s, params, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;

    fn noiseless_trace(x: &BitString) -> TraceRecord {
        let mut rng = stream_rng(1, "test", 0);
        apply_channel(x, &ChannelParams::noiseless(), &mut rng)
    }

    #[test]
    fn noiseless_channel_is_identity() {
        let x = BitString::parse("10110").unwrap();
        let rec = noiseless_trace(&x);
        assert_eq!(rec.bits, x);
        for (r, pv) in rec.provenance.iter().enumerate() {
            assert_eq!(*pv, Provenance::Source(r));
        }
        assert_eq!(rec.f_map, vec![0, 1, 2, 3, 4]);
        assert_eq!(rec.g_map, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn noiseless_misalignment() {
        let x = BitString::random(64, &mut stream_rng(2, "x", 0));
        let rec = noiseless_trace(&x);
        for k in 0..16 {
            assert_eq!(rec.misalignment(k, k).unwrap(), 0);
            assert_eq!(rec.misalignment(k, k + 3).unwrap(), 3);
        }
        assert!(rec.misalignment(64, 0).is_err());
    }

    #[test]
    fn point_shift_truncates() {
        let x = BitString::parse("0000011111").unwrap();
        let mut rng = stream_rng(3, "test", 0);
        let rec =
            apply_shifted_channel(&x, &ShiftSpec::point_mass(5), &ChannelParams::noiseless(), &mut rng)
                .unwrap();
        assert_eq!(rec.bits.to_string(), "11111");
        assert_eq!(rec.shift_used, 5);
        // provenance refers to original coordinates
        assert_eq!(rec.provenance[0], Provenance::Source(5));
        // bits erased by the shift behave like deletions in f_map
        assert_eq!(rec.f_map[0], 0);
        assert_eq!(rec.f_map[4], 0);
        assert_eq!(rec.f_map[5], 0);
        assert_eq!(rec.f_map[9], 4);
    }

    #[test]
    fn shift_support_must_fit() {
        let x = BitString::parse("01").unwrap();
        let mut rng = stream_rng(4, "test", 0);
        let err =
            apply_shifted_channel(&x, &ShiftSpec::point_mass(2), &ChannelParams::noiseless(), &mut rng);
        assert!(err.is_err());
    }

    /// Concatenating the source bits named by the provenance reproduces the
    /// subsequence of theta^s(x) that survived deletion.
    #[test]
    fn provenance_consistency() {
        let params = ChannelParams::new(0.2, 0.2).unwrap();
        let shift = ShiftSpec::uniform(0, 3);
        for i in 0..200 {
            let mut rng = stream_rng(5, "prov", i);
            let x = BitString::random(40, &mut rng);
            let rec = apply_shifted_channel(&x, &shift, &params, &mut rng).unwrap();
            let mut last = None;
            for (r, pv) in rec.provenance.iter().enumerate() {
                if let Provenance::Source(j) = pv {
                    assert!(*j >= rec.shift_used);
                    if let Some(prev) = last {
                        assert!(*j > prev, "source indices must increase");
                    }
                    last = Some(*j);
                    assert_eq!(rec.bits.get(r), x.get(*j));
                    assert_eq!(rec.g_map[r], *j);
                    assert_eq!(rec.f_map[*j], r);
                }
            }
        }
    }

    /// f/g duality under the next-surviving / next-non-inserted conventions.
    #[test]
    fn f_g_duality() {
        let params = ChannelParams::new(0.3, 0.3).unwrap();
        for i in 0..200 {
            let mut rng = stream_rng(6, "dual", i);
            let x = BitString::random(30, &mut rng);
            let rec = apply_channel(&x, &params, &mut rng);
            let m = rec.trace_len();
            let n = x.len();
            for j in 0..n {
                assert!(rec.f_map[j] <= m);
                if rec.f_map[j] < m {
                    // f(j) points at the next surviving bit >= j
                    assert!(rec.g_map[rec.f_map[j]] >= j);
                }
            }
            // monotone non-decreasing maps
            for j in 1..n {
                assert!(rec.f_map[j] >= rec.f_map[j - 1]);
            }
            for r in 1..m {
                assert!(rec.g_map[r] >= rec.g_map[r - 1]);
            }
            // duality: for surviving j, g(f(j)) <= j; for non-inserted r, f(g(r)) >= r
            for (r, pv) in rec.provenance.iter().enumerate() {
                if let Provenance::Source(j) = pv {
                    assert_eq!(rec.g_map[rec.f_map[*j]], *j);
                    assert_eq!(rec.f_map[rec.g_map[r]], r);
                }
            }
        }
    }

    #[test]
    fn misalignment_matches_brute_force_recomputation() {
        let params = ChannelParams::new(0.1, 0.1).unwrap();
        for i in 0..50 {
            let mut rng = stream_rng(7, "brute", i);
            let x = BitString::random(25, &mut rng);
            let rec = apply_channel(&x, &params, &mut rng);
            // independent recomputation of f and g from raw provenance
            let n = x.len();
            let m = rec.trace_len();
            for k in 0..n {
                let f_k = (0..m)
                    .find(|&r| matches!(rec.provenance[r], Provenance::Source(j) if j >= k))
                    .unwrap_or(m);
                for kp in 0..m {
                    let g_kp = (kp..m)
                        .find_map(|r| match rec.provenance[r] {
                            Provenance::Source(j) => Some(j),
                            Provenance::Inserted => None,
                        })
                        .unwrap_or(n);
                    let expect =
                        ((f_k as i64 - kp as i64).unsigned_abs()).max((g_kp as i64 - k as i64).unsigned_abs());
                    assert_eq!(rec.misalignment(k, kp).unwrap(), expect);
                }
            }
        }
    }

    #[test]
    fn identical_seed_identical_record() {
        let params = ChannelParams::new(0.25, 0.15).unwrap();
        let x = BitString::random(50, &mut stream_rng(8, "x", 0));
        let a = apply_channel(&x, &params, &mut stream_rng(8, "t", 7));
        let b = apply_channel(&x, &params, &mut stream_rng(8, "t", 7));
        assert_eq!(a.bits, b.bits);
        assert_eq!(a.provenance, b.provenance);
        assert_eq!(a.f_map, b.f_map);
    }
}
