//! Desk-scale reconstruction pipelines: the bit-recovery test comparing a
//! pooled estimate against exact candidate predictions, enumeration over
//! continuations (with sparse-signature deduplication when q < 1/2), a
//! mean-based baseline, and the end-to-end average-case loop built on the
//! alignment stage.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::align::{self, CoarseHint, ParamPack};
use crate::bits::BitString;
use crate::channel::{apply_channel, ChannelParams, ShiftSpec};
use crate::error::{Error, Result};
use crate::genfun::{
    BoolFn, EstimationPlan, EvalPoint, MobiusMaps, ShiftPolynomial, TruncationLimits,
};
use crate::interp::GridSpec;
use crate::littlewood::{
    find_separation_point, select_template_w, sparse_signature, SeparationMode, SeparationSearch,
};
use crate::pool::SamplePool;
use crate::seed::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReconMode {
    Sparse,
    Dense,
    Mean,
}

/// Per-bit recovery configuration. `n` is the 1-based position of the bit
/// under recovery, `horizon` the total number of positions the candidates
/// enumerate (default 4n), `l` the template arity.
#[derive(Clone, Debug)]
pub struct ReconConfig {
    pub n: usize,
    pub l: usize,
    pub mode: ReconMode,
    pub horizon: usize,
    pub search: SeparationSearch,
    /// Half-width of the derivative grid around z_rest.
    pub grid_c: f64,
    /// Stderr multiplier for the inconclusive gate.
    pub inconclusive_k: f64,
    /// Continuation window enumerated by the mean-based separator.
    pub mean_enum: usize,
    pub trunc: TruncationLimits,
}

impl ReconConfig {
    pub fn new(n: usize, l: usize, mode: ReconMode) -> Self {
        let mut search = SeparationSearch::defaults_for(n);
        search.theta_grid = 257;
        search.z_grid = 9;
        search.max_refinements = 1;
        ReconConfig {
            n,
            l,
            mode,
            horizon: 4 * n,
            search,
            grid_c: 0.2,
            inconclusive_k: 2.5,
            mean_enum: 10,
            trunc: TruncationLimits::none(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitOutcome {
    Decided(u8),
    Inconclusive,
}

impl BitOutcome {
    pub fn bit(self) -> Option<u8> {
        match self {
            BitOutcome::Decided(b) => Some(b),
            BitOutcome::Inconclusive => None,
        }
    }
}

fn interpolation_grid(cfg: &ReconConfig, z_rest: f64) -> Result<GridSpec> {
    // 2 n_deg must cover the per-coordinate degree of candidate polynomials
    let n_deg = cfg.horizon.div_ceil(2).max(1);
    let headroom = 0.98 - z_rest.abs();
    let c = cfg.grid_c.min(headroom / 2.0).max(1e-3);
    GridSpec::new(c, n_deg)
}

/// The paper's test tau for one candidate pair: estimate g at a separation
/// point of (y0, y1) from the pool and return the side whose exact
/// predicted estimator value is closest. Ties break toward 0; an estimator
/// standard error above half the predicted separation is Inconclusive.
pub fn bit_recovery_test(
    pool: &SamplePool,
    x_prefix: &BitString,
    y0: &BitString,
    y1: &BitString,
    cfg: &ReconConfig,
    channel: &ChannelParams,
    shift: &ShiftSpec,
) -> Result<BitOutcome> {
    let n = cfg.n;
    if y0.len() != y1.len() || y0.get(n - 1) == y1.get(n - 1) {
        return Err(Error::InvalidParam {
            field: "y0/y1",
            message: "candidates must have equal length and differ at position n".into(),
        });
    }
    let w = select_template_w(x_prefix, n, cfg.l)?;
    let mode = match cfg.mode {
        ReconMode::Sparse => SeparationMode::Sparse,
        _ => SeparationMode::Dense,
    };
    let (point, _) = find_separation_point(y0, y1, &w, mode, &cfg.search)?;
    decide_with_point(pool, &w, &point, y0, y1, cfg, channel, shift)
}

#[allow(clippy::too_many_arguments)]
fn decide_with_point(
    pool: &SamplePool,
    w: &BitString,
    point: &EvalPoint,
    y0: &BitString,
    y1: &BitString,
    cfg: &ReconConfig,
    channel: &ChannelParams,
    shift: &ShiftSpec,
) -> Result<BitOutcome> {
    let z_rest = match point {
        EvalPoint::Equal { z_rest, .. } => z_rest.re,
        EvalPoint::Free { .. } => 0.0,
    };
    let grid = interpolation_grid(cfg, z_rest)?;
    let f = BoolFn::indicator(w);
    let plan = EstimationPlan::build(&f, point, channel, shift, &grid)?;
    let est = plan.apply_pool(pool, cfg.trunc);
    let p0 = plan.apply_exact(y0, channel, shift)?;
    let p1 = plan.apply_exact(y1, channel, shift)?;
    let separation = (p0 - p1).norm();
    if cfg.inconclusive_k * est.stderr > separation / 2.0 {
        return Ok(BitOutcome::Inconclusive);
    }
    let d0 = (est.value - p0).norm();
    let d1 = (est.value - p1).norm();
    Ok(BitOutcome::Decided(if d0 <= d1 { 0 } else { 1 }))
}

/// Diagnostics from a tournament run.
#[derive(Clone, Debug, Default)]
pub struct TournamentStats {
    pub candidates_side0: usize,
    pub candidates_side1: usize,
    pub raw_candidates_per_side: usize,
    pub pairs_run: usize,
    pub inconclusive_pairs: usize,
}

fn enumerate_side(prefix: &BitString, bit: u8, tail_len: usize) -> Vec<BitString> {
    let mut base = prefix.clone();
    base.push(bit);
    (0..(1usize << tail_len))
        .map(|mask| {
            let mut y = base.clone();
            for i in 0..tail_len {
                y.push(((mask >> i) & 1) as u8);
            }
            y
        })
        .collect()
}

/// Deduplicates candidates by the data that determines their polynomial at
/// a sparse evaluation point: the signed occurrence list of w.
fn dedup_by_signature(cands: Vec<BitString>, w: &BitString) -> Vec<BitString> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for y in cands {
        let sig = sparse_signature(&y, w);
        if seen.insert(sig) {
            out.push(y);
        }
    }
    out
}

/// Recovers bit n by enumerating continuation pairs: some candidate on the
/// winning side must beat every opposing candidate; if neither side has a
/// perfect winner the majority of decided pairs is used, and an exact tie
/// is Inconclusive. SPARSE mode (q < 1/2) first collapses candidates with
/// identical sparse signatures, which provably cannot be distinguished at
/// z_rest = 0.
pub fn shifted_reconstruct_bit(
    pool: &SamplePool,
    x_prefix: &BitString,
    cfg: &ReconConfig,
    channel: &ChannelParams,
    shift: &ShiftSpec,
) -> Result<(BitOutcome, TournamentStats)> {
    if cfg.mode == ReconMode::Mean {
        let out = mean_based_bit(pool, x_prefix, cfg, channel, shift)?;
        return Ok((out, TournamentStats::default()));
    }
    let n = cfg.n;
    let tail_len = cfg.horizon - n;
    let w = select_template_w(x_prefix, n, cfg.l)?;
    let raw0 = enumerate_side(x_prefix, 0, tail_len);
    let raw1 = enumerate_side(x_prefix, 1, tail_len);
    let raw_count = raw0.len();
    let (side0, side1) = match cfg.mode {
        ReconMode::Sparse => (dedup_by_signature(raw0, &w), dedup_by_signature(raw1, &w)),
        _ => (raw0, raw1),
    };
    let mut stats = TournamentStats {
        candidates_side0: side0.len(),
        candidates_side1: side1.len(),
        raw_candidates_per_side: raw_count,
        ..Default::default()
    };

    // duel results are cached so the perfect-winner scans and the majority
    // fallback share one evaluation per pair
    let mut cache: Vec<Vec<Option<Option<u8>>>> = vec![vec![None; side1.len()]; side0.len()];
    let duel = |i: usize,
                    j: usize,
                    cache: &mut Vec<Vec<Option<Option<u8>>>>,
                    stats: &mut TournamentStats|
     -> Result<Option<u8>> {
        if let Some(r) = cache[i][j] {
            return Ok(r);
        }
        stats.pairs_run += 1;
        let r = match bit_recovery_test(pool, x_prefix, &side0[i], &side1[j], cfg, channel, shift) {
            Ok(BitOutcome::Decided(bit)) => Some(bit),
            Ok(BitOutcome::Inconclusive) => {
                stats.inconclusive_pairs += 1;
                None
            }
            // indistinguishable candidates cannot eliminate each other
            Err(Error::NoSeparation { .. }) => {
                stats.inconclusive_pairs += 1;
                None
            }
            Err(e) => return Err(e),
        };
        cache[i][j] = Some(r);
        Ok(r)
    };

    // a side-0 candidate winning every duel decides the bit (rows abort on
    // the first non-win), symmetrically for side 1
    for i in 0..side0.len() {
        let mut all = !side1.is_empty();
        for j in 0..side1.len() {
            if duel(i, j, &mut cache, &mut stats)? != Some(0) {
                all = false;
                break;
            }
        }
        if all {
            return Ok((BitOutcome::Decided(0), stats));
        }
    }
    for j in 0..side1.len() {
        let mut all = !side0.is_empty();
        for i in 0..side0.len() {
            if duel(i, j, &mut cache, &mut stats)? != Some(1) {
                all = false;
                break;
            }
        }
        if all {
            return Ok((BitOutcome::Decided(1), stats));
        }
    }
    // majority over the full matrix
    let mut votes0 = 0usize;
    let mut votes1 = 0usize;
    for i in 0..side0.len() {
        for j in 0..side1.len() {
            match duel(i, j, &mut cache, &mut stats)? {
                Some(0) => votes0 += 1,
                Some(_) => votes1 += 1,
                None => {}
            }
        }
    }
    let outcome = match votes0.cmp(&votes1) {
        std::cmp::Ordering::Greater => BitOutcome::Decided(0),
        std::cmp::Ordering::Less => BitOutcome::Decided(1),
        std::cmp::Ordering::Equal => BitOutcome::Inconclusive,
    };
    Ok((outcome, stats))
}

/// Exact expectation of the mean statistic sum_j a~_j w^j (0-indexed trace
/// positions) for a known source with optionally soft (probabilistic) bit
/// values: source bit k contributes value_k phibar(w) sum_{s<=k} sigma(s)
/// phi(w)^{k-s}, insertions contribute mean 1/2 at every inserted slot.
pub fn mean_statistic_exact(
    values: &[f64],
    w: Complex64,
    channel: &ChannelParams,
    shift: &ShiftSpec,
) -> Complex64 {
    let maps = MobiusMaps::new(channel);
    let sp = ShiftPolynomial::from_spec(shift);
    let phi = maps.phi(w);
    let phibar = maps.phibar(w);
    let n = values.len();

    // per-source-bit position weights with the shift boundary handled
    let mut source_weighted = Complex64::new(0.0, 0.0);
    let mut source_total = Complex64::new(0.0, 0.0);
    for &(s, sigma) in sp.support() {
        if s >= n {
            continue;
        }
        // sum over k >= s of v_k phi^{k-s}: Horner over k descending
        let mut acc_w = Complex64::new(0.0, 0.0);
        let mut acc_t = Complex64::new(0.0, 0.0);
        for k in (s..n).rev() {
            acc_w = acc_w * phi + values[k];
            acc_t = acc_t * phi + 1.0;
        }
        source_weighted += sigma * acc_w;
        source_total += sigma * acc_t;
    }
    source_weighted *= phibar;
    source_total *= phibar;

    // E[w^len] = sum_s sigma(s) phi^{n-s}
    let mut len_gf = Complex64::new(0.0, 0.0);
    for &(s, sigma) in sp.support() {
        if s >= n {
            len_gf += sigma;
        } else {
            len_gf += sigma * phi.powu((n - s) as u32);
        }
    }
    let all_slots = (1.0 - len_gf) / (1.0 - w);
    source_weighted + 0.5 * (all_slots - source_total)
}


/// Pool mean of the statistic sum_j a~_j w^j.
pub fn mean_statistic_pool(pool: &SamplePool, w: Complex64) -> (Complex64, f64) {
    let values: Vec<Complex64> = pool
        .samples
        .par_iter()
        .map(|(bits, _)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in (0..bits.len()).rev() {
                acc = acc * w + bits.get(i) as f64;
            }
            acc
        })
        .collect();
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<Complex64>() / n;
    let var = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / n;
    (mean, (var / n).sqrt())
}

/// Mean-based baseline: enumerates candidate continuations over a short
/// window past the target bit, computes each candidate's exact expected
/// statistic on a uniform full-circle grid of evaluation points
/// w = rho e^{2 pi i g / G}, and picks the candidate closest to the pooled
/// statistic. Positions beyond the enumeration window carry the soft value
/// 1/2 in every candidate, so they shift all distances identically; their
/// interference with the decision is suppressed because the channel's
/// position responses decorrelate beyond the window length.
///
/// The conclusive gate reruns the decisive pair (the best candidates on
/// each side) as a per-trace matched filter and requires the score to
/// clear its empirical standard error.
pub fn mean_based_bit(
    pool: &SamplePool,
    x_prefix: &BitString,
    cfg: &ReconConfig,
    channel: &ChannelParams,
    shift: &ShiftSpec,
) -> Result<BitOutcome> {
    let values: Vec<f64> = (0..x_prefix.len()).map(|i| x_prefix.get(i) as f64).collect();
    mean_based_values(pool, &values, cfg, channel, shift)
}

/// As [`mean_based_bit`], but the known prefix is a vector of bit values
/// that may be soft: a position reconstructed by coin flip can carry 1/2
/// instead of a hard guess, so its error adds variance instead of bias.
pub fn mean_based_values(
    pool: &SamplePool,
    prefix_values: &[f64],
    cfg: &ReconConfig,
    channel: &ChannelParams,
    shift: &ShiftSpec,
) -> Result<BitOutcome> {
    mean_based_decision(pool, prefix_values, cfg, channel, shift).map(|(o, _)| o)
}

/// Full decision output: the gated outcome plus the ungated lean (the sign
/// of the matched-filter score), which beats a coin flip whenever any
/// evidence exists.
pub fn mean_based_decision(
    pool: &SamplePool,
    prefix_values: &[f64],
    cfg: &ReconConfig,
    channel: &ChannelParams,
    shift: &ShiftSpec,
) -> Result<(BitOutcome, u8)> {
    let n = cfg.n;
    if prefix_values.len() < n - 1 {
        return Err(Error::TooShort { len: prefix_values.len(), required: n - 1 });
    }
    let horizon = cfg.horizon.max(n + 1);
    let window = cfg.mean_enum.min(horizon - n).min(16);

    let g_points = cfg.search.theta_grid.clamp(8, 8192).next_power_of_two();
    let rho = cfg.search.rho;
    let points: Vec<Complex64> = (0..g_points)
        .map(|i| Complex64::from_polar(rho, 2.0 * std::f64::consts::PI * i as f64 / g_points as f64))
        .collect();

    // pooled statistic via positional frequencies: mean_t stat_t(w) =
    // sum_j w^j f_j with f_j the average bit value at position j
    let max_len = pool.bits().map(|b| b.len()).max().unwrap_or(0);
    let mut freq = vec![0.0f64; max_len];
    for (bits, _) in &pool.samples {
        for i in 0..bits.len() {
            if bits.get(i) == 1 {
                freq[i] += 1.0;
            }
        }
    }
    let t_count = pool.len().max(1) as f64;
    for f in &mut freq {
        *f /= t_count;
    }
    let m_hat: Vec<Complex64> = points
        .par_iter()
        .map(|&w| freq.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &f| acc * w + f))
        .collect();

    // base candidate: known prefix, zeros across the enumeration window,
    // soft 1/2 beyond it
    let mut base: Vec<f64> = prefix_values[..n - 1].to_vec();
    for _ in 0..=window {
        base.push(0.0);
    }
    for _ in base.len()..horizon {
        base.push(0.5);
    }
    let base_vec: Vec<Complex64> = points
        .par_iter()
        .map(|&w| mean_statistic_exact(&base, w, channel, shift))
        .collect();
    // per-position response columns for the enumerated window
    let cols: Vec<Vec<Complex64>> = (0..=window)
        .map(|delta| {
            let pos = n - 1 + delta;
            points
                .par_iter()
                .map(|&w| {
                    let maps = MobiusMaps::new(channel);
                    let sp = ShiftPolynomial::from_spec(shift);
                    let phi = maps.phi(w);
                    let phibar = maps.phibar(w);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(s, sigma) in sp.support() {
                        if s <= pos {
                            acc += sigma * phi.powu((pos - s) as u32);
                        }
                    }
                    phibar * acc
                })
                .collect()
        })
        .collect();

    // scan all 2^{window+1} assignments of (bit n, window bits) with a
    // Gray-code walk updating the residual vector one column per step
    let mut best: [Option<(f64, u64)>; 2] = [None, None];
    let dim = window + 1;
    let mut residual: Vec<Complex64> = m_hat
        .iter()
        .zip(&base_vec)
        .map(|(&mh, &bv)| mh - bv)
        .collect();
    let mut state = 0u64;
    let total = 1u64 << dim;
    for step in 0..total {
        let gray = step ^ (step >> 1);
        if gray != state {
            let flipped = (gray ^ state).trailing_zeros() as usize;
            let adding = (gray >> flipped) & 1 == 1;
            let col = &cols[flipped];
            for (r, &c) in residual.iter_mut().zip(col) {
                if adding {
                    *r -= c;
                } else {
                    *r += c;
                }
            }
            state = gray;
        }
        let dist: f64 = residual.iter().map(|r| r.norm_sqr()).sum();
        let side = (state & 1) as usize;
        if best[side].map(|(d, _)| dist < d).unwrap_or(true) {
            best[side] = Some((dist, state));
        }
    }
    let (d0, mask0) = best[0].ok_or(Error::NoSeparation { max: 0.0, floor: 0.0 })?;
    let (d1, mask1) = best[1].ok_or(Error::NoSeparation { max: 0.0, floor: 0.0 })?;

    // decisive pair: per-trace matched filter between the two best
    // candidates, gated by its empirical standard error
    let assign = |mask: u64| -> Vec<f64> {
        let mut v = base.clone();
        for delta in 0..dim {
            v[n - 1 + delta] = ((mask >> delta) & 1) as f64;
        }
        v
    };
    let (v0, v1) = (assign(mask0), assign(mask1));
    let mut filters = Vec::with_capacity(points.len());
    let mut offset = 0.0f64;
    let mut sep = 0.0f64;
    for &w in &points {
        let m0 = mean_statistic_exact(&v0, w, channel, shift);
        let m1 = mean_statistic_exact(&v1, w, channel, shift);
        let delta = (m0 - m1).conj();
        sep += delta.norm_sqr();
        offset += (0.5 * (m0 + m1) * delta).re;
        filters.push(delta);
    }
    if sep < 1e-26 {
        return Err(Error::NoSeparation { max: sep.sqrt(), floor: 1e-13 });
    }
    let mut kernel = vec![0.0f64; max_len];
    for (w, f) in points.iter().zip(&filters) {
        let mut pw = Complex64::new(1.0, 0.0);
        for slot in kernel.iter_mut() {
            *slot += (pw * f).re;
            pw *= w;
        }
    }
    let scores: Vec<f64> = pool
        .samples
        .par_iter()
        .map(|(bits, _)| {
            let mut s = -offset;
            for i in 0..bits.len() {
                if bits.get(i) == 1 {
                    s += kernel[i];
                }
            }
            s
        })
        .collect();
    let t = scores.len().max(1) as f64;
    let mean = scores.iter().sum::<f64>() / t;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / t;
    let se = (var / t).sqrt();
    // positive score favors the mask0 side (its bit at n is 0)
    let lean = if mean >= 0.0 { 0 } else { 1 };
    let _ = (d0, d1);
    if mean.abs() < cfg.inconclusive_k * se {
        return Ok((BitOutcome::Inconclusive, lean));
    }
    Ok((BitOutcome::Decided(lean), lean))
}

/// Per-bit record of the average-case loop.
#[derive(Clone, Debug)]
pub struct BitLog {
    pub k: usize,
    pub aligned: usize,
    pub outcome: BitOutcome,
    pub coin_flip: bool,
}

#[derive(Clone, Debug)]
pub struct ReconReport {
    pub recovered: BitString,
    pub inconclusive_count: usize,
    pub per_bit: Vec<BitLog>,
}

/// Average-case reconstruction config.
#[derive(Clone, Debug)]
pub struct AverageCaseConfig {
    pub c_big: f64,
    pub mode: ReconMode,
    /// Spurious-rate Monte Carlo trials inside select_a2.
    pub a2_trials: usize,
    /// Arc radius for the mean-mode matched filter.
    pub mean_rho: f64,
    pub mean_grid: usize,
    /// Shift-calibration simulations per bit (0 disables; uniform fallback).
    pub calibration_traces: usize,
    pub seed: u64,
}

impl Default for AverageCaseConfig {
    fn default() -> Self {
        AverageCaseConfig {
            c_big: 5.0,
            mode: ReconMode::Mean,
            a2_trials: 120,
            mean_rho: 0.99,
            mean_grid: 512,
            calibration_traces: 800,
            seed: 0,
        }
    }
}

/// Reconstructs `n` bits from raw traces with no ground-truth provenance:
/// prepends a virtual known prefix (and traces of it to every sample),
/// aligns each trace per bit (coarse from the previous hit, then fine),
/// and recovers the bit from the suffix pool. Bits whose recovery is
/// inconclusive are coin-flipped and flagged.
///
/// The virtual prefix is a seed-derived random string rather than zeros: a
/// constant prefix admits no fine anchor (every candidate segment matches
/// everywhere, so its measured spurious rate is ~1) and the first window
/// of bits would all be coin flips.
pub fn average_case_reconstruct(
    traces: &[BitString],
    n: usize,
    cfg: &AverageCaseConfig,
    channel: &ChannelParams,
) -> Result<ReconReport> {
    let pack = align::practical_params(n.max(64), cfg.c_big);
    let prefix_len = pack.coarse.ell + pack.window;
    let lambda_f = pack.fine.lambda;

    // hypothesis starts as the virtual prefix, known by construction
    let virtual_prefix =
        BitString::random(prefix_len, &mut stream_rng(cfg.seed, "virtual-prefix", u64::MAX));
    let mut hypothesis = virtual_prefix.clone();
    // each trace gets a prefix trace glued in front
    let padded: Vec<BitString> = traces
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut rng = stream_rng(cfg.seed, "virtual-prefix", i as u64);
            let rec = apply_channel(&virtual_prefix, channel, &mut rng);
            rec.bits.concat(t)
        })
        .collect();
    let mut hints: Vec<Option<CoarseHint>> = vec![None; padded.len()];
    // value view of the hypothesis: coin-flipped positions carry soft 1/2
    // so a wrong flip cannot bias later candidate predictions
    let mut soft_values: Vec<f64> = (0..prefix_len).map(|i| hypothesis.get(i) as f64).collect();

    let mut per_bit = Vec::with_capacity(n);
    let mut inconclusive_count = 0usize;

    for k_out in 0..n {
        let k = prefix_len + k_out;
        let a2 = match align::select_a2(&hypothesis, k, &pack, channel, cfg.a2_trials, cfg.seed ^ k as u64)
        {
            Ok(a2) => a2,
            Err(Error::NotFinelyWellBehaved { .. }) => {
                // no usable anchor: coin-flip and move on
                let mut rng = stream_rng(cfg.seed, "coin", k as u64);
                let bit = rng.gen_range(0..=1u8);
                hypothesis.push(bit);
                per_bit.push(BitLog { k, aligned: 0, outcome: BitOutcome::Inconclusive, coin_flip: true });
                inconclusive_count += 1;
                continue;
            }
            Err(e) => return Err(e),
        };

        // frame: the pool strings are (approximately) traces of
        // hypothesis(frame..) under a small calibrated shift; off-cluster
        // captures are gated out by their observable tau2. The first
        // ell_f bits of each suffix took part in the fine test, so they
        // are biased by that conditioning; the pool drops them and the
        // calibration measures landings after the same cut.
        let head_cut = pack.fine.ell + 2;
        let cal = calibrate_shift(&hypothesis, k, a2, &pack, channel, cfg, lambda_f);
        let (frame, shift) = (cal.frame, cal.shift.clone());
        let n_prime = k - frame + 1; // 1-based target position in the frame

        // align every trace and build the suffix pool
        let results: Vec<(Option<CoarseHint>, Option<BitString>)> = padded
            .par_iter()
            .zip(hints.par_iter())
            .map(|(trace, hint)| {
                let m = align::align_trace(&hypothesis, trace, k, a2, &pack, channel, *hint)
                    .unwrap_or(align::MatchResult { a1: 0, a2, tau1: None, tau2: None });
                let new_hint = m.tau1.map(|t| CoarseHint { k, tau1: t });
                let suffix = m
                    .tau2
                    .filter(|&t2| t2 >= cal.tau2_lo && t2 <= cal.tau2_hi)
                    .map(|t2| trace.suffix(t2 + head_cut));
                (new_hint.or(*hint), suffix)
            })
            .collect();
        let mut pool_bits = Vec::new();
        for (i, (hint, suffix)) in results.into_iter().enumerate() {
            hints[i] = hint;
            if let Some(s) = suffix {
                if !s.is_empty() {
                    pool_bits.push((s, false));
                }
            }
        }
        let aligned = pool_bits.len();

        let outcome = if aligned < 16 {
            (BitOutcome::Inconclusive, None)
        } else {
            let pool = SamplePool {
                samples: pool_bits,
                epsilon: 0.0,
                seed: cfg.seed,
                params: *channel,
            };
            let mut rcfg = ReconConfig::new(n_prime, 3, cfg.mode);
            rcfg.horizon = n_prime + 2 * pack.window;
            rcfg.search.rho = cfg.mean_rho;
            rcfg.search.theta_grid = cfg.mean_grid;
            match cfg.mode {
                ReconMode::Mean => {
                    mean_based_decision(&pool, &soft_values[frame..], &rcfg, channel, &shift)
                        .map(|(o, lean)| (o, Some(lean)))
                        .unwrap_or((BitOutcome::Inconclusive, None))
                }
                _ => {
                    let frame_prefix = hypothesis.suffix(frame);
                    shifted_reconstruct_bit(&pool, &frame_prefix, &rcfg, channel, &shift)
                        .map(|(o, _)| (o, o.bit()))
                        .unwrap_or((BitOutcome::Inconclusive, None))
                }
            }
        };
        let (outcome, lean) = outcome;

        // an inconclusive bit keeps the weak lean as its hard value when
        // one exists (better than a coin for later anchors) but stays soft
        // in the prediction values; a pure coin only fires with no
        // statistic at all
        let (bit, value, coin_flip) = match (outcome, lean) {
            (BitOutcome::Decided(b), _) => (b, b as f64, false),
            (BitOutcome::Inconclusive, Some(b)) => {
                inconclusive_count += 1;
                (b, 0.5, false)
            }
            (BitOutcome::Inconclusive, None) => {
                inconclusive_count += 1;
                let mut rng = stream_rng(cfg.seed, "coin", k as u64);
                (rng.gen_range(0..=1u8), 0.5, true)
            }
        };
        if std::env::var_os("TRACELAB_DEBUG").is_some() {
            eprintln!(
                "k={k} a2={a2} frame={frame} n'={n_prime} aligned={aligned} support={} outcome={outcome:?}",
                shift.support().len()
            );
        }
        hypothesis.push(bit);
        soft_values.push(value);
        per_bit.push(BitLog { k, aligned, outcome, coin_flip });
    }

    Ok(ReconReport {
        recovered: hypothesis.suffix(prefix_len),
        inconclusive_count,
        per_bit,
    })
}

/// Estimates the frame start and the fine-alignment shift distribution by
/// simulating traces of the known prefix, aligning them with the same
/// machinery, and reading the true offsets g(tau2) from the provenance:
/// the frame is the smallest observed landing index, the pmf its empirical
/// histogram. Falls back to the frame a2 - lambda_f with a uniform pmf on
/// [0, 2 lambda_f] when calibration is disabled or starved.
pub struct CalibratedFrame {
    pub frame: usize,
    pub shift: ShiftSpec,
    /// Observable tau2 acceptance range for pool gating.
    pub tau2_lo: usize,
    pub tau2_hi: usize,
}

pub fn calibrate_shift(
    hypothesis: &BitString,
    k: usize,
    a2: usize,
    pack: &ParamPack,
    channel: &ChannelParams,
    cfg: &AverageCaseConfig,
    lambda_f: usize,
) -> CalibratedFrame {
    let head_cut = pack.fine.ell + 2;
    let fallback = CalibratedFrame {
        frame: (a2 + head_cut).saturating_sub(lambda_f),
        shift: ShiftSpec::uniform(0, 2 * lambda_f),
        tau2_lo: 0,
        tau2_hi: usize::MAX,
    };
    if cfg.calibration_traces == 0 {
        return fallback;
    }
    // landings before the target are all legitimate (an early hit hands
    // the recovery a valid suffix trace from an earlier frame), but only
    // the modal cluster is modeled; its observable tau2 spread then gates
    // the real pool so off-cluster captures are dropped instead of
    // contaminating the statistic
    let mut histogram = std::collections::BTreeMap::new();
    let mut landings: Vec<(usize, usize)> = Vec::new(); // (g, tau2)
    for t in 0..cfg.calibration_traces {
        let mut rng = stream_rng(cfg.seed, "calib", ((k as u64) << 20) | t as u64);
        let rec = apply_channel(hypothesis, channel, &mut rng);
        let m = match align::align_trace(hypothesis, &rec.bits, k, a2, pack, channel, None) {
            Ok(m) => m,
            Err(_) => continue,
        };
        if let Some(tau2) = m.tau2 {
            let probe = tau2 + head_cut;
            if probe < rec.g_map.len() {
                let g = rec.g_map[probe];
                if g < k {
                    *histogram.entry(g).or_insert(0usize) += 1;
                    landings.push((g, tau2));
                }
            }
        }
    }
    if landings.len() < 30 {
        return fallback;
    }
    let (&mode, _) = histogram.iter().max_by_key(|&(_, c)| *c).unwrap();
    let radius = (4 * lambda_f).max(6);
    let in_cluster = |g: usize| g + radius >= mode && g <= mode + radius;
    let kept: Vec<(usize, usize)> =
        histogram.iter().map(|(&g, &c)| (g, c)).filter(|&(g, _)| in_cluster(g)).collect();
    let kept_total: usize = kept.iter().map(|&(_, c)| c).sum();
    if kept_total < 30 {
        return fallback;
    }
    let frame = kept[0].0;
    let support: Vec<(usize, f64)> = kept
        .iter()
        .map(|&(g, c)| (g - frame, c as f64 / kept_total as f64))
        .collect();
    let tau2s: Vec<usize> =
        landings.iter().filter(|&&(g, _)| in_cluster(g)).map(|&(_, t)| t).collect();
    let slack = (2 * radius).max(8);
    let tau2_lo = tau2s.iter().min().unwrap().saturating_sub(slack);
    let tau2_hi = tau2s.iter().max().unwrap() + slack;
    match ShiftSpec::new(support) {
        Ok(shift) => CalibratedFrame { frame, shift, tau2_lo, tau2_hi },
        Err(_) => fallback,
    }
}
