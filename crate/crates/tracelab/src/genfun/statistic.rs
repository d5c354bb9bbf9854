//! The ordered-tuple sums at the heart of the identity: the trace-side
//! statistic, its exact expectation for a known source string, and the
//! message polynomial g. All three run as left-to-right dynamic programs
//! carrying one running geometric weight per coordinate, replacing the
//! binomial-size tuple enumerations.

use num_complex::Complex64;

use crate::bits::BitString;
use crate::channel::{ChannelParams, ShiftSpec};
use crate::error::Result;
use crate::genfun::fourier::BoolFn;
use crate::genfun::mobius::{MobiusMaps, ShiftPolynomial};
use crate::genfun::EvalPoint;

/// Degree caps for the trace statistic: `max_first` bounds the exponent of
/// the first coordinate (r0 - 1) and `max_gap` bounds each gap exponent.
#[derive(Clone, Copy, Debug)]
pub struct TruncationLimits {
    pub max_first: usize,
    pub max_gap: usize,
}

impl TruncationLimits {
    pub fn none() -> Self {
        TruncationLimits { max_first: usize::MAX, max_gap: usize::MAX }
    }

    /// Defaults from the truncation lemmas: first-coordinate degree at most
    /// n ceil(log n), gap degrees at most n.
    pub fn for_scale(n: usize) -> Self {
        let nf = n.max(2) as f64;
        TruncationLimits {
            max_first: (nf * nf.ln().ceil()) as usize,
            max_gap: n,
        }
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn powu(base: Complex64, exp: usize) -> Complex64 {
    if exp >= u32::MAX as usize {
        // |base| < 1 in every call path; the power underflows to 0 anyway
        return ZERO;
    }
    base.powu(exp as u32)
}

/// Core DP shared by the three sums.
///
/// Computes sum over idx_0 < ... < idx_l of
///   layer0(idx_0) * prod_{i>=1} sign_i(idx_i) * w_i^{idx_i - idx_{i-1} - 1}
/// where `layer0` gives the fully weighted first-slot value and `sign_i`
/// the per-slot multiplier of level i (a value in {-1, +1} here).
fn ordered_tuple_sum(
    layer0: &[Complex64],
    signs: &[f64],
    ws: &[Complex64],
    max_gap: usize,
) -> Complex64 {
    let n = layer0.len();
    let l = ws.len();
    if n == 0 {
        return ZERO;
    }
    let mut prev: Vec<Complex64> = layer0.to_vec();
    for &w in ws.iter() {
        let ring = max_gap < n;
        let w_ring = if ring { powu(w, max_gap) } else { ZERO };
        let mut cur = vec![ZERO; n];
        let mut acc = ZERO;
        for idx in 0..n {
            cur[idx] = signs[idx] * acc;
            let drop = if ring && idx > max_gap {
                prev[idx - 1 - max_gap] * w_ring
            } else {
                ZERO
            };
            acc = prev[idx] + w * (acc - drop);
        }
        prev = cur;
    }
    let _ = l;
    prev.iter().sum()
}

/// Trace statistic: sum over positions r0 < ... < rl (1-indexed) of
/// (-1)^{a_{r0}} Psi(z0)^{r0-1} prod_i (-1)^{a_{ri}} Psi(zi)^{ri-r_{i-1}-1},
/// restricted by the truncation limits. O(|trace| * l) arithmetic.
pub fn trace_statistic(
    trace: &BitString,
    point: &EvalPoint,
    params: &ChannelParams,
    trunc: TruncationLimits,
) -> Result<Complex64> {
    let maps = MobiusMaps::new(params);
    let w0 = maps.psi(point.z0())?;
    let ws: Vec<Complex64> = point
        .rest()
        .iter()
        .map(|&z| maps.psi(z))
        .collect::<Result<_>>()?;
    Ok(trace_statistic_psi(trace, w0, &ws, trunc))
}

/// Same statistic with precomputed Psi values (hot path for node batches).
pub fn trace_statistic_psi(
    trace: &BitString,
    w0: Complex64,
    ws: &[Complex64],
    trunc: TruncationLimits,
) -> Complex64 {
    let n = trace.len();
    if n == 0 {
        return ZERO;
    }
    let signs: Vec<f64> = (0..n).map(|i| trace.sign_flip(i)).collect();
    let mut layer0 = vec![ZERO; n];
    let mut pow = Complex64::new(1.0, 0.0);
    for idx in 0..n {
        if idx <= trunc.max_first {
            layer0[idx] = signs[idx] * pow;
        }
        pow *= w0;
    }
    ordered_tuple_sum(&layer0, &signs, ws, trunc.max_gap)
}

/// Exact expectation of the trace statistic when the channel (with shift)
/// is applied to the known string `y`. This is the right-hand side of the
/// identity: prod_i phibar(Psi(zi)) times the g-type sum in which the bit at
/// index idx0 carries the boundary-corrected shift weight
/// sum_{s <= idx0} sigma(s) z0^{-s} (which equals P(1/z0) once idx0 reaches
/// the maximal shift).
pub fn expected_trace_statistic(
    y: &BitString,
    point: &EvalPoint,
    params: &ChannelParams,
    shift: &ShiftSpec,
) -> Result<Complex64> {
    let maps = MobiusMaps::new(params);
    let sp = ShiftPolynomial::from_spec(shift);
    let n = y.len();
    let z0 = point.z0();
    let rest = point.rest();

    let mut norm = maps.phibar(maps.psi(z0)?);
    for &z in &rest {
        norm *= maps.phibar(maps.psi(z)?);
    }

    if n == 0 {
        return Ok(ZERO);
    }
    let signs: Vec<f64> = (0..n).map(|i| y.sign_flip(i)).collect();
    let weights = sp.weight_table(n, z0);
    let mut layer0 = vec![ZERO; n];
    let mut pow = Complex64::new(1.0, 0.0);
    for idx in 0..n {
        layer0[idx] = signs[idx] * weights[idx] * pow;
        pow *= z0;
    }
    Ok(norm * ordered_tuple_sum(&layer0, &signs, &rest, usize::MAX))
}

/// Message polynomial g_x^f truncated to total degree <= `max_total_degree`:
/// sum over positions k0 < ... < kl of
/// (-1)^{x_{k0}} f(x_{k1}, ..., x_{kl}) z0^{k0-1} prod zi^{ki-k_{i-1}-1}.
///
/// The total degree of a tuple's monomial is (kl - 1 - l), so the cap is a
/// cap on the last position used. The DP carries the partial f-argument bit
/// vector, so arbitrary f costs O(|x| * 2^l).
pub fn message_g(
    x: &BitString,
    f: &BoolFn,
    point: &EvalPoint,
    max_total_degree: usize,
) -> Complex64 {
    let l = f.arity();
    debug_assert_eq!(l, point.arity(), "f arity must match evaluation point");
    let z0 = point.z0();
    let zs = point.rest();
    let n_eff = x
        .len()
        .min(max_total_degree.saturating_add(l).saturating_add(1));

    if l == 0 {
        let mut total = ZERO;
        let mut pow = Complex64::new(1.0, 0.0);
        for idx in 0..n_eff {
            total += x.sign_flip(idx) * pow;
            pow *= z0;
        }
        return f.value(0) * total;
    }

    // acc[i-1][u]: running sum A_i(idx, u) over placements of slots 0..i-1
    // whose f-argument bits so far are u, weighted by z_i^{gap}.
    let mut acc: Vec<Vec<Complex64>> = (1..=l).map(|i| vec![ZERO; 1 << (i - 1)]).collect();
    let mut res: Vec<Complex64> = vec![ZERO; 1 << l];
    let mut f_levels: Vec<Vec<Complex64>> = (1..=l).map(|i| vec![ZERO; 1 << i]).collect();
    let mut z0pow = Complex64::new(1.0, 0.0);

    for idx in 0..n_eff {
        let b = x.get(idx) as usize;
        let f0 = x.sign_flip(idx) * z0pow;
        // Slot values at this index, from the pre-update accumulators.
        for i in 1..=l {
            let (lo, hi) = f_levels.split_at_mut(i - 1);
            let _ = lo;
            let fi = &mut hi[0];
            for slot in fi.iter_mut() {
                *slot = ZERO;
            }
            for u in 0..(1usize << (i - 1)) {
                let v = u | (b << (i - 1));
                fi[v] = acc[i - 1][u];
            }
            if i == l {
                for (v, slot) in fi.iter().enumerate() {
                    res[v] += slot;
                }
            }
        }
        // Advance accumulators to idx+1.
        for i in 1..=l {
            let zi = zs[i - 1];
            for u in 0..(1usize << (i - 1)) {
                let add = if i == 1 { f0 } else { f_levels[i - 2][u] };
                acc[i - 1][u] = acc[i - 1][u] * zi + add;
            }
        }
        z0pow *= z0;
    }

    (0..(1usize << l)).map(|v| f.value(v) * res[v]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Brute-force tuple enumeration oracle for the trace statistic.
    fn brute_stat(trace: &BitString, w0: Complex64, ws: &[Complex64], trunc: TruncationLimits) -> Complex64 {
        let n = trace.len();
        let l = ws.len();
        let mut total = ZERO;
        let mut idxs = vec![0usize; l + 1];
        fn rec(
            trace: &BitString,
            w0: Complex64,
            ws: &[Complex64],
            trunc: &TruncationLimits,
            idxs: &mut Vec<usize>,
            slot: usize,
            start: usize,
            n: usize,
            total: &mut Complex64,
        ) {
            if slot == idxs.len() {
                let mut term = trace.sign_flip(idxs[0]) * powu(w0, idxs[0]);
                if idxs[0] > trunc.max_first {
                    return;
                }
                for i in 1..idxs.len() {
                    let gap = idxs[i] - idxs[i - 1] - 1;
                    if gap > trunc.max_gap {
                        return;
                    }
                    term *= trace.sign_flip(idxs[i]) * powu(ws[i - 1], gap);
                }
                *total += term;
                return;
            }
            for idx in start..n {
                idxs[slot] = idx;
                rec(trace, w0, ws, trunc, idxs, slot + 1, idx + 1, n, total);
            }
        }
        rec(trace, w0, ws, &trunc, &mut idxs, 0, 0, n, &mut total);
        let _ = l;
        total
    }

    #[test]
    fn empty_trace_is_zero() {
        let t = BitString::new(vec![]);
        let v = trace_statistic_psi(&t, c(0.5, 0.2), &[], TruncationLimits::none());
        assert_eq!(v, ZERO);
    }

    #[test]
    fn single_one_bit_l0() {
        // trace "1", l = 0: (-1)^1 * w0^0 = -1
        let t = BitString::parse("1").unwrap();
        let v = trace_statistic_psi(&t, c(0.37, 0.11), &[], TruncationLimits::none());
        assert!((v - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dp_matches_brute_force() {
        let mut rng = stream_rng(21, "stat", 0);
        for len in [1usize, 3, 7, 12] {
            for l in 0..=2usize {
                for rep in 0..4 {
                    let t = BitString::random(len, &mut rng);
                    let w0 = Complex64::from_polar(0.8, 0.3 + rep as f64);
                    let ws: Vec<Complex64> = (0..l)
                        .map(|i| Complex64::from_polar(0.5 + 0.1 * i as f64, -0.2 * (i + 1) as f64))
                        .collect();
                    for trunc in [
                        TruncationLimits::none(),
                        TruncationLimits { max_first: 4, max_gap: 2 },
                        TruncationLimits { max_first: 2, max_gap: 0 },
                    ] {
                        let dp = trace_statistic_psi(&t, w0, &ws, trunc);
                        let bf = brute_stat(&t, w0, &ws, trunc);
                        assert!(
                            (dp - bf).norm() < 1e-10,
                            "len={len} l={l} trunc=({},{}) dp={dp} bf={bf}",
                            trunc.max_first,
                            trunc.max_gap
                        );
                    }
                }
            }
        }
    }

    /// Brute-force oracle for message_g.
    fn brute_g(x: &BitString, f: &BoolFn, z0: Complex64, zs: &[Complex64], cap: usize) -> Complex64 {
        let n = x.len();
        let l = zs.len();
        let mut total = ZERO;
        let mut idxs: Vec<usize> = Vec::new();
        fn rec(
            x: &BitString,
            f: &BoolFn,
            z0: Complex64,
            zs: &[Complex64],
            cap: usize,
            idxs: &mut Vec<usize>,
            start: usize,
            n: usize,
            l: usize,
            total: &mut Complex64,
        ) {
            if idxs.len() == l + 1 {
                let last = *idxs.last().unwrap();
                if last > cap.saturating_add(l) {
                    return;
                }
                let mut term = x.sign_flip(idxs[0]) * powu(z0, idxs[0]);
                let mut fv = 0usize;
                for i in 1..idxs.len() {
                    term *= powu(zs[i - 1], idxs[i] - idxs[i - 1] - 1);
                    fv |= (x.get(idxs[i]) as usize) << (i - 1);
                }
                *total += f.value(fv) * term;
                return;
            }
            for idx in start..n {
                idxs.push(idx);
                rec(x, f, z0, zs, cap, idxs, idx + 1, n, l, total);
                idxs.pop();
            }
        }
        rec(x, f, z0, zs, cap, &mut idxs, 0, n, l, &mut total);
        total
    }

    #[test]
    fn message_g_zero_function() {
        let x = BitString::random(10, &mut stream_rng(22, "g", 0));
        let f = BoolFn::constant(2, 0.0);
        let pt = EvalPoint::equal(c(0.7, 0.1), c(0.5, 0.0), 2);
        assert_eq!(message_g(&x, &f, &pt, usize::MAX), ZERO);
    }

    #[test]
    fn message_g_geometric_series() {
        // l = 0, all-zero x: sum_{k=1}^n z0^{k-1} = (1 - z0^n)/(1 - z0)
        let n = 9;
        let x = BitString::zeros(n);
        let f = BoolFn::constant(0, 1.0);
        let z0 = c(0.6, 0.25);
        let got = message_g(&x, &f, &EvalPoint::scalar(z0), usize::MAX);
        let expect = (1.0 - z0.powu(n as u32)) / (1.0 - z0);
        assert!((got - expect).norm() < 1e-12);
    }

    #[test]
    fn message_g_matches_brute_force() {
        let mut rng = stream_rng(23, "g", 1);
        for len in [2usize, 5, 12] {
            for l in 0..=2usize {
                let x = BitString::random(len, &mut rng);
                let f = BoolFn::random(l, &mut rng);
                let z0 = Complex64::from_polar(0.75, 0.4);
                let zs: Vec<Complex64> = (0..l).map(|i| c(0.3 + 0.2 * i as f64, 0.1)).collect();
                let pt = EvalPoint::Free { z0, zs: zs.clone() };
                for cap in [usize::MAX, 6, 3] {
                    let dp = message_g(&x, &f, &pt, cap);
                    let bf = brute_g(&x, &f, z0, &zs, cap);
                    assert!((dp - bf).norm() < 1e-10, "len={len} l={l} cap={cap}");
                }
            }
        }
    }

    #[test]
    fn message_g_is_linear_in_f() {
        let mut rng = stream_rng(24, "g", 2);
        let x = BitString::random(11, &mut rng);
        let fa = BoolFn::random(2, &mut rng);
        let fb = BoolFn::random(2, &mut rng);
        let (alpha, beta) = (0.7, -1.3);
        let combo = BoolFn::linear_combination(alpha, &fa, beta, &fb);
        let pt = EvalPoint::equal(c(0.8, 0.05), c(0.4, 0.0), 2);
        let lhs = message_g(&x, &combo, &pt, usize::MAX);
        let rhs = alpha * message_g(&x, &fa, &pt, usize::MAX) + beta * message_g(&x, &fb, &pt, usize::MAX);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    /// The exact expectation oracle against plain Monte Carlo, including a
    /// nontrivial shift: the shifted identity holds with the boundary
    /// correction.
    #[test]
    fn expected_statistic_matches_monte_carlo() {
        use crate::channel::apply_shifted_channel;
        let params = ChannelParams::new(0.3, 0.2).unwrap();
        let shift = ShiftSpec::uniform(0, 2);
        let x = BitString::parse("10110").unwrap();
        let pt = EvalPoint::Free {
            z0: Complex64::from_polar(0.7, 0.3),
            zs: vec![c(0.5, 0.1)],
        };
        let exact = expected_trace_statistic(&x, &pt, &params, &shift).unwrap();
        let n_mc = 200_000;
        let mut sum = ZERO;
        let mut sumsq = 0.0;
        for i in 0..n_mc {
            let mut rng = stream_rng(25, "mc", i);
            let rec = apply_shifted_channel(&x, &shift, &params, &mut rng).unwrap();
            let v = trace_statistic(&rec.bits, &pt, &params, TruncationLimits::none()).unwrap();
            sum += v;
            sumsq += v.norm_sqr();
        }
        let mean = sum / n_mc as f64;
        let var = (sumsq / n_mc as f64 - mean.norm_sqr()).max(0.0);
        let se = (var / n_mc as f64).sqrt();
        assert!(
            (mean - exact).norm() < 5.0 * se.max(1e-6),
            "mc mean {mean} vs exact {exact} (se {se})"
        );
    }
}
