//! The Boolean block test T, robust-bias and mismatch definitions, spurious
//! match estimation, and the two-stage coarse/fine alignment.
//!
//! The test splits both strings into blocks of length lambda and counts the
//! blocks whose signed sums agree in sign; it passes when at least a `c`
//! fraction agree. Coarse alignment scans a trace for the first block of
//! x anchored at a1 = k - ell_c - window; fine alignment rescans a window
//! around the coarse hit with a shorter, denser test anchored at a2, an
//! index chosen (by `select_a2`) so that its segment is bias-robust and has
//! a low measured spurious-match rate.



use crate::bits::BitString;
use crate::channel::{apply_channel, ChannelParams, TraceRecord};
use crate::error::{Error, Result};
use crate::seed::stream_rng;

/// Block-test parameters: total length ell, block length lambda (lambda
/// divides ell by construction), pass fraction c, and robust-block
/// fraction theta.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentParams {
    pub ell: usize,
    pub lambda: usize,
    pub c: f64,
    pub theta: f64,
}

impl AlignmentParams {
    /// Rounds lambda to an odd integer (odd blocks cannot tie at zero) and
    /// ell to the nearest positive multiple of lambda.
    pub fn rounded(ell_raw: f64, lambda_raw: f64, c: f64, theta: f64) -> Self {
        let mut lambda = lambda_raw.round().max(1.0) as usize;
        if lambda % 2 == 0 {
            lambda += 1;
        }
        let blocks = (ell_raw / lambda as f64).round().max(1.0) as usize;
        AlignmentParams { ell: blocks * lambda, lambda, c, theta }
    }

    pub fn blocks(&self) -> usize {
        self.ell / self.lambda
    }

    /// Number of agreeing blocks required to pass.
    pub fn pass_threshold(&self) -> usize {
        (self.c * self.blocks() as f64).ceil() as usize
    }
}

/// Derived coarse/fine parameters at the desk scale. The paper's forms are
/// ell_c = C log^2 n / h(C log n), lambda_c = sqrt(C) log n / h(C log n),
/// ell_f = C^{2/3} h(C log n), lambda_f = C^{1/12}, window = C log n, with
/// h the log-sample-complexity budget; h is clamped into
/// [max(4, log m), sqrt(m)] as the reduction assumes, logs are base 2, and
/// lambda_f is floored at 3 so the fine tolerance survives rounding.
#[derive(Clone, Debug)]
pub struct ParamPack {
    pub coarse: AlignmentParams,
    pub fine: AlignmentParams,
    /// The C log n alignment window.
    pub window: usize,
    pub c_big: f64,
    /// Spurious-rate ceiling accepted by select_a2.
    pub spurious_threshold: f64,
}

pub fn h_budget(m: f64) -> f64 {
    let raw = m.powf(0.2) * m.ln().max(1.0).powi(7);
    raw.clamp(m.log2().max(4.0), m.sqrt().max(4.0))
}

/// Default robust-block fraction. Random blocks at small lambda have a
/// clear robust bias with probability only ~0.27..0.51 (the windowed sum
/// degenerates to a single absolute block sum), so the fraction sits below
/// that with margin; 1/2 would put the threshold at the mean and random
/// strings would fail the scale test about half the time.
pub const DEFAULT_THETA: f64 = 0.25;

pub fn practical_params(n: usize, c_big: f64) -> ParamPack {
    let lg = (n.max(4) as f64).log2();
    let m = c_big * lg;
    let h = h_budget(m);
    let coarse =
        AlignmentParams::rounded(c_big * lg * lg / h, c_big.sqrt() * lg / h, 0.9, DEFAULT_THETA);
    // odd lambda keeps block sums off zero; the fine pass fraction trades
    // alignment yield against spurious hits across the rescanned offsets
    let fine =
        AlignmentParams::rounded(c_big.powf(2.0 / 3.0) * h, c_big.powf(1.0 / 12.0), 0.85, DEFAULT_THETA);
    ParamPack { coarse, fine, window: m.ceil() as usize, c_big, spurious_threshold: 0.5 }
}

impl ParamPack {
    /// Number of suffix positions consumed by the fine test itself; pooled
    /// suffixes drop this conditioned head before recovery.
    pub fn head_cut(&self) -> usize {
        self.fine.ell + 2
    }
}

/// Prefix sums of the signed bits 2b-1, for O(1) block sums at any offset.
pub struct SignedPrefix {
    pre: Vec<i64>,
}

impl SignedPrefix {
    pub fn new(s: &BitString) -> Self {
        let mut pre = Vec::with_capacity(s.len() + 1);
        pre.push(0);
        let mut acc = 0i64;
        for i in 0..s.len() {
            acc += s.signed(i);
            pre.push(acc);
        }
        SignedPrefix { pre }
    }

    pub fn len(&self) -> usize {
        self.pre.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of signed bits over [start, start+len).
    pub fn block_sum(&self, start: usize, len: usize) -> i64 {
        self.pre[start + len] - self.pre[start]
    }
}

/// Signed block-agreement count between w[w_off..] and v[v_off..] over the
/// first ell bits; sign(0) blocks never count as agreement.
fn agreement_count(
    w: &SignedPrefix,
    w_off: usize,
    v: &SignedPrefix,
    v_off: usize,
    params: &AlignmentParams,
) -> usize {
    let mut agree = 0;
    for i in 0..params.blocks() {
        let a = w.block_sum(w_off + i * params.lambda, params.lambda);
        let b = v.block_sum(v_off + i * params.lambda, params.lambda);
        if a * b > 0 {
            agree += 1;
        }
    }
    agree
}

pub(crate) fn test_at(
    w: &SignedPrefix,
    w_off: usize,
    v: &SignedPrefix,
    v_off: usize,
    params: &AlignmentParams,
) -> bool {
    agreement_count(w, w_off, v, v_off, params) >= params.pass_threshold()
}

/// The Boolean test T on the first ell bits of both strings.
pub fn boolean_test(w: &BitString, w_tilde: &BitString, params: &AlignmentParams) -> Result<bool> {
    if w.len() < params.ell {
        return Err(Error::TooShort { len: w.len(), required: params.ell });
    }
    if w_tilde.len() < params.ell {
        return Err(Error::TooShort { len: w_tilde.len(), required: params.ell });
    }
    let pw = SignedPrefix::new(w);
    let pv = SignedPrefix::new(w_tilde);
    Ok(test_at(&pw, 0, &pv, 0, params))
}

/// Robust bias of the segment between indices u1 and u2 = u1 + lambda:
/// lambda^{-1/2} sum over window starts |t1-u1| < lambda/100,
/// |t2-u2| < lambda/100 of |sum_{j=t1}^{t2} (2 x_j - 1)| (inclusive).
/// For lambda < 100 the only admissible pair is (u1, u2) itself.
pub fn robust_bias(x: &BitString, u1: usize, u2: usize) -> Result<f64> {
    if u2 <= u1 {
        return Err(Error::InvalidParam { field: "u2", message: "need u2 > u1".into() });
    }
    let lambda = u2 - u1;
    let jitter = ((lambda as f64) / 100.0).ceil() as usize;
    let lo1 = u1.saturating_sub(jitter - 1);
    let hi1 = u1 + jitter - 1;
    let lo2 = u2.saturating_sub(jitter - 1);
    let hi2 = u2 + jitter - 1;
    if hi2 >= x.len() {
        return Err(Error::IndexOutOfRange { index: hi2, len: x.len() });
    }
    let pre = SignedPrefix::new(x);
    let mut total = 0.0;
    for t1 in lo1..=hi1 {
        for t2 in lo2..=hi2 {
            if t2 >= t1 {
                total += pre.block_sum(t1, t2 - t1 + 1).abs() as f64;
            }
        }
    }
    Ok(total / (lambda as f64).sqrt())
}

/// A segment has a clear robust bias when its value is >= 1; a string of
/// length >= ell has clear robust bias at scale lambda when at least a
/// theta fraction of its ell/lambda blocks do. The trailing block's right
/// window is clamped to the last index.
pub fn has_clear_robust_bias_at_scale(w: &BitString, params: &AlignmentParams) -> Result<bool> {
    if w.len() < params.ell {
        return Err(Error::TooShort { len: w.len(), required: params.ell });
    }
    let blocks = params.blocks();
    let mut robust = 0;
    for i in 0..blocks {
        let u1 = i * params.lambda;
        let u2 = ((i + 1) * params.lambda).min(w.len() - 1);
        if robust_bias(w, u1, u2)? >= 1.0 {
            robust += 1;
        }
    }
    Ok(robust as f64 >= params.theta * blocks as f64)
}

/// s-mismatch of x(a..a+ell) vs trace(b..b+ell): every offset i in 0..=ell
/// has misalignment d(a+i, b+i) >= s. The whole range is validated before
/// any comparison.
pub fn is_s_mismatched(rec: &TraceRecord, a: usize, b: usize, ell: usize, s: u64) -> Result<bool> {
    if a + ell >= rec.source_len() {
        return Err(Error::IndexOutOfRange { index: a + ell, len: rec.source_len() });
    }
    if b + ell >= rec.trace_len() {
        return Err(Error::IndexOutOfRange { index: b + ell, len: rec.trace_len() });
    }
    for i in 0..=ell {
        if rec.misalignment(a + i, b + i)? < s {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Monte Carlo estimate of the (I, J)-spurious-match probability: the
/// fraction of traces of x(J) containing a length-ell substring that passes
/// T against x(I) while being lambda-mismatched. Returns the estimate and a
/// one-sided 95% upper bound (rule of three when no events were seen).
pub fn estimate_spurious_rate(
    x: &BitString,
    interval_i: (usize, usize),
    interval_j: (usize, usize),
    params: &AlignmentParams,
    channel: &ChannelParams,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidParam { field: "trials", message: "need at least one trial".into() });
    }
    let (a, a_end) = interval_i;
    if a_end - a != params.ell {
        return Err(Error::InvalidParam {
            field: "interval_i",
            message: "interval I must have length ell".into(),
        });
    }
    if a_end > x.len() || interval_j.1 > x.len() || interval_j.0 > interval_j.1 {
        return Err(Error::IndexOutOfRange { index: interval_j.1.max(a_end), len: x.len() });
    }
    let anchor = SignedPrefix::new(&x.slice(a, a_end));
    let xj = x.slice(interval_j.0, interval_j.1);
    let mut events = 0usize;
    for t in 0..trials {
        let mut rng = stream_rng(seed, "spurious", t as u64);
        let rec = apply_channel(&xj, channel, &mut rng);
        if rec.bits.len() < params.ell {
            continue;
        }
        let tr = SignedPrefix::new(&rec.bits);
        // anchor start relative to the J-local provenance coordinates
        let a_rel = a as i64 - interval_j.0 as i64;
        for b in 0..=rec.bits.len() - params.ell {
            if !test_at(&anchor, 0, &tr, b, params) {
                continue;
            }
            // an anchor not fully inside J counts as mismatched outright
            let inside = a_rel >= 0
                && (a_rel as usize) + params.ell < rec.source_len()
                && b + params.ell < rec.trace_len();
            let mismatched = if inside {
                is_s_mismatched(&rec, a_rel as usize, b, params.ell, params.lambda as u64)?
            } else {
                true
            };
            if mismatched {
                events += 1;
                break;
            }
        }
    }
    let rate = events as f64 / trials as f64;
    let bound = if events == 0 {
        3.0 / trials as f64
    } else {
        rate + 3.0 * (rate * (1.0 - rate) / trials as f64).sqrt()
    };
    Ok((rate, bound))
}

/// Hint for the bounded coarse scan: the last finite coarse alignment and
/// the message index it was computed for.
#[derive(Clone, Copy, Debug)]
pub struct CoarseHint {
    pub k: usize,
    pub tau1: usize,
}

/// Coarse alignment: the first trace index b whose window passes T against
/// x(a1..a1+ell_c), a1 = k - ell_c - window. With a hint the scan starts
/// near the drift-adjusted previous hit and is bounded; without one it
/// scans the whole trace. Returns None for "infinity".
pub fn coarse_align(
    x: &BitString,
    trace: &BitString,
    k: usize,
    pack: &ParamPack,
    channel: &ChannelParams,
    hint: Option<CoarseHint>,
) -> Result<Option<usize>> {
    let params = &pack.coarse;
    let a1 = k.checked_sub(params.ell + pack.window).ok_or(Error::InvalidParam {
        field: "k",
        message: format!("k={k} below ell_c + window"),
    })?;
    if a1 + params.ell > x.len() {
        return Err(Error::TooShort { len: x.len(), required: a1 + params.ell });
    }
    if trace.len() < params.ell {
        return Ok(None);
    }
    let anchor = SignedPrefix::new(&x.slice(a1, a1 + params.ell));
    let tr = SignedPrefix::new(trace);
    let last = trace.len() - params.ell;
    let (start, end) = match hint {
        Some(h) => {
            let drift = (k.saturating_sub(h.k)) as f64 * channel.p() / channel.p_prime();
            let center = h.tau1 as f64 + drift;
            let slack = (4 * params.ell + pack.window) as f64;
            ((center - slack).max(0.0) as usize, ((center + slack) as usize).min(last))
        }
        None => (0, last),
    };
    for b in start..=end.min(last) {
        if test_at(&anchor, 0, &tr, b, params) {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

/// Fine alignment: the first b in [tau1 - ell_c, tau1 + 2 ell_c + window]
/// passing the fine test for x(a2..a2+ell_f). None propagates "infinity".
pub fn fine_align(
    x: &BitString,
    trace: &BitString,
    tau1: Option<usize>,
    a2: usize,
    pack: &ParamPack,
) -> Result<Option<usize>> {
    let tau1 = match tau1 {
        Some(t) => t,
        None => return Ok(None),
    };
    let params = &pack.fine;
    if a2 + params.ell > x.len() {
        return Err(Error::TooShort { len: x.len(), required: a2 + params.ell });
    }
    if trace.len() < params.ell {
        return Ok(None);
    }
    let anchor = SignedPrefix::new(&x.slice(a2, a2 + params.ell));
    let tr = SignedPrefix::new(trace);
    let lo = tau1.saturating_sub(pack.coarse.ell);
    let hi = (tau1 + 2 * pack.coarse.ell + pack.window).min(trace.len() - params.ell);
    for b in lo..=hi {
        if test_at(&anchor, 0, &tr, b, params) {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

/// Picks the fine anchor a2 in the middle third of [k - window, k]: among
/// the candidates whose segment has clear robust bias at the fine scale,
/// the one with the lowest measured (I, J)-spurious rate, requiring the
/// rate below the pack threshold. Errors when no candidate qualifies (the
/// string is not finely well-behaved at this k).
pub fn select_a2(
    x: &BitString,
    k: usize,
    pack: &ParamPack,
    channel: &ChannelParams,
    trials: usize,
    seed: u64,
) -> Result<usize> {
    let params = &pack.fine;
    let w = pack.window;
    if k < w || k > x.len() {
        return Err(Error::InvalidParam { field: "k", message: format!("k={k} outside [window, |x|]") });
    }
    // the fine rescan bracket reaches about 2 ell_c + window positions
    // before k, so the spurious check must cover that whole region: a
    // content repeat below k - window would otherwise capture the scan
    // unnoticed
    let j_lo = k.saturating_sub(2 * (pack.coarse.ell + w));
    // the anchor must sit far enough before k that the conditioned head of
    // an aligned suffix (head_cut positions) ends well before the target
    let gap = pack.head_cut() + 10;
    let lo = k - (2 * w / 3).max(gap + 14);
    let hi = (k - w / 3).min(k.saturating_sub(gap));
    let mut best: Option<(f64, usize)> = None;
    for a2 in lo..=hi.max(lo) {
        if a2 + params.ell >= x.len() || a2 + params.ell > k {
            break;
        }
        let segment = x.slice(a2, a2 + params.ell + 1);
        if !has_clear_robust_bias_at_scale(&segment, params)? {
            continue;
        }
        let (rate, _) =
            estimate_spurious_rate(x, (a2, a2 + params.ell), (j_lo, k), params, channel, trials, seed)?;
        if rate <= pack.spurious_threshold && best.map(|(r, _)| rate < r).unwrap_or(true) {
            best = Some((rate, a2));
        }
    }
    best.map(|(_, a2)| a2).ok_or(Error::NotFinelyWellBehaved { k })
}

/// One trace's alignment outcome for a message index k.
#[derive(Clone, Copy, Debug)]
pub struct MatchResult {
    pub a1: usize,
    pub a2: usize,
    pub tau1: Option<usize>,
    pub tau2: Option<usize>,
}

/// Runs the full two-stage alignment of a trace at message index k.
pub fn align_trace(
    x: &BitString,
    trace: &BitString,
    k: usize,
    a2: usize,
    pack: &ParamPack,
    channel: &ChannelParams,
    hint: Option<CoarseHint>,
) -> Result<MatchResult> {
    let a1 = k - pack.coarse.ell - pack.window;
    let tau1 = coarse_align(x, trace, k, pack, channel, hint)?;
    let tau2 = fine_align(x, trace, tau1, a2, pack)?;
    Ok(MatchResult { a1, a2, tau1, tau2 })
}
