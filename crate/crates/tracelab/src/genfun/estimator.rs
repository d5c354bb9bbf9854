//! Estimators of the message polynomial from trace pools.
//!
//! `estimate_g_simple` averages the trace statistic and divides by the
//! normalization prod_i phibar(Psi(z_i)) * P(1/z0). `estimate_g_general`
//! runs the full pipeline for an arbitrary l-bit function: Fourier
//! decomposition, character reduction, and Lagrange extraction of the
//! required derivatives on a real grid around z_rest. The whole pipeline is
//! one linear functional of per-trace statistics, so one pool pass yields
//! both the estimate and its empirical standard error, and the identical
//! functional applied to exact expectations gives the prediction for any
//! candidate source string.

use num_complex::Complex64;
use rayon::join;

use crate::bits::BitString;
use crate::channel::{ChannelParams, ShiftSpec};
use crate::error::{Error, Result};
use crate::genfun::fourier::{character_reduction, fourier_f2l, BoolFn, CharacterMask};
use crate::genfun::mobius::{MobiusMaps, ShiftPolynomial};
use crate::genfun::statistic::{expected_trace_statistic, trace_statistic_psi, TruncationLimits};
use crate::genfun::EvalPoint;
use crate::interp::{lagrange_weights, GridSpec};
use crate::pool::SamplePool;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const MIN_NORMALIZER: f64 = 1e-300;

/// A Monte Carlo estimate with its empirical standard error.
#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub value: Complex64,
    pub stderr: f64,
    pub n_samples: usize,
}

/// Deterministic pairwise tree reduction, independent of worker count.
fn tree_sum(values: &[Complex64]) -> Complex64 {
    const LEAF: usize = 1024;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    let (a, b) = join(|| tree_sum(&values[..mid]), || tree_sum(&values[mid..]));
    a + b
}

fn tree_sum_sq(values: &[Complex64], center: Complex64) -> f64 {
    const LEAF: usize = 1024;
    if values.len() <= LEAF {
        return values.iter().map(|v| (v - center).norm_sqr()).sum();
    }
    let mid = values.len() / 2;
    let (a, b) = join(|| tree_sum_sq(&values[..mid], center), || tree_sum_sq(&values[mid..], center));
    a + b
}

/// Two-pass mean and standard error with a fixed reduction topology.
fn summarize(values: Vec<Complex64>) -> Estimate {
    let n = values.len();
    let mean = tree_sum(&values) / n as f64;
    let var = tree_sum_sq(&values, mean) / n as f64;
    Estimate { value: mean, stderr: (var / n as f64).sqrt(), n_samples: n }
}

/// Normalization (prod_i phibar(Psi(z_i)))^{-1} P(1/z0)^{-1} of the identity.
fn normalizer(point_coords: &[Complex64], maps: &MobiusMaps, sp: &ShiftPolynomial) -> Result<Complex64> {
    let mut factor = sp.eval_inverse(point_coords[0]);
    for &z in point_coords {
        factor *= maps.phibar(maps.psi(z)?);
    }
    if factor.norm() < MIN_NORMALIZER {
        return Err(Error::NormalizationUnderflow { value: factor.norm() });
    }
    Ok(1.0 / factor)
}

/// Sample mean of the trace statistic over the pool scaled by the
/// normalization; estimates g_x for the simple character prod_i (-1)^{x_i}.
/// Exact (zero-variance) at q = q' = 0 with a zero shift.
pub fn estimate_g_simple(
    pool: &SamplePool,
    point: &EvalPoint,
    params: &ChannelParams,
    shift: &ShiftSpec,
    trunc: TruncationLimits,
) -> Result<Estimate> {
    let maps = MobiusMaps::new(params);
    let sp = ShiftPolynomial::from_spec(shift);
    let coords = point.coords();
    let norm = normalizer(&coords, &maps, &sp)?;
    let w0 = maps.psi(coords[0])?;
    let ws: Vec<Complex64> = coords[1..].iter().map(|&z| maps.psi(z)).collect::<Result<_>>()?;

    let values: Vec<Complex64> = parallel_map_pool(pool, |bits| {
        trace_statistic_psi(bits, w0, &ws, trunc) * norm
    });
    Ok(summarize(values))
}

fn parallel_map_pool<F>(pool: &SamplePool, f: F) -> Vec<Complex64>
where
    F: Fn(&BitString) -> Complex64 + Sync,
{
    use rayon::prelude::*;
    pool.samples.par_iter().map(|(bits, _)| f(bits)).collect()
}

/// One evaluation node of an estimation plan: a FREE point of reduced arity
/// with its combination weight (Fourier coefficient x tail factor x Lagrange
/// weights) and normalization folded in.
#[derive(Clone, Debug)]
struct PlanNode {
    /// Psi-images for the pool path.
    psi0: Complex64,
    psis: Vec<Complex64>,
    /// Raw coordinates for the exact-expectation path.
    point: EvalPoint,
    /// weight * normalizer; multiplies the raw statistic mean.
    coefficient: Complex64,
}

/// The linear functional implementing the general estimator at one
/// EQUAL-mode point. Built once, applied to a pool (Monte Carlo) or to a
/// candidate string (exact expectation).
#[derive(Clone, Debug)]
pub struct EstimationPlan {
    nodes: Vec<PlanNode>,
    /// Sum of |coefficient| over nodes; multiplies a per-node noise level
    /// into a worst-case propagated bound.
    pub abs_coefficient_sum: f64,
    /// Appendix-B amplification bound, maximized over contributing
    /// characters, for reporting.
    pub interp_amplification: f64,
    pub target: EvalPoint,
}

impl EstimationPlan {
    /// Builds the plan for estimating g^f at an EQUAL-mode point.
    ///
    /// Admissible z_rest values are real (the derivative grid is real);
    /// every grid offset must keep the coordinate strictly inside the unit
    /// disk.
    pub fn build(
        f: &BoolFn,
        point: &EvalPoint,
        params: &ChannelParams,
        shift: &ShiftSpec,
        grid: &GridSpec,
    ) -> Result<EstimationPlan> {
        let (z0, z_rest, l) = match *point {
            EvalPoint::Equal { z0, z_rest, l } => (z0, z_rest, l),
            EvalPoint::Free { z0, ref zs } if zs.is_empty() => (z0, ZERO, 0),
            _ => {
                return Err(Error::InvalidParam {
                    field: "point",
                    message: "general estimation requires an EQUAL-mode point".into(),
                })
            }
        };
        if f.arity() != l {
            return Err(Error::InvalidParam {
                field: "f",
                message: format!("arity {} does not match point arity {l}", f.arity()),
            });
        }
        if z_rest.im.abs() > 1e-12 {
            return Err(Error::InvalidParam {
                field: "point",
                message: "z_rest must be real for the derivative grid".into(),
            });
        }
        if z0.norm() >= 1.0 {
            return Err(Error::InvalidParam {
                field: "point",
                message: format!("|z0| = {} must be < 1", z0.norm()),
            });
        }
        if z_rest.re.abs() + grid.c >= 1.0 {
            return Err(Error::InvalidParam {
                field: "grid",
                message: format!("grid around z_rest = {} leaves the unit disk", z_rest.re),
            });
        }

        let maps = MobiusMaps::new(params);
        let sp = ShiftPolynomial::from_spec(shift);
        let hat = fourier_f2l(f)?;
        let nodes_1d = grid.nodes();

        let mut nodes: Vec<PlanNode> = Vec::new();
        let mut amplification = 0.0f64;
        for (mask, &fhat) in hat.iter().enumerate() {
            if fhat.abs() < 1e-15 {
                continue;
            }
            let cm = CharacterMask::from_mask(l, mask);
            let plan = character_reduction(&cm);
            let tail = if plan.tail_exponent > 0 {
                (1.0 / (1.0 - z_rest)).powu(plan.tail_exponent as u32)
            } else {
                Complex64::new(1.0, 0.0)
            };
            let lp = plan.reduced_arity;
            let orders = &plan.derivative_orders;
            let active: Vec<usize> = (0..lp).filter(|&i| orders[i] > 0).collect();
            let weight_rows: Vec<Vec<f64>> = active
                .iter()
                .map(|&i| lagrange_weights(grid, orders[i]))
                .collect::<Result<_>>()?;
            let j_tot: usize = orders.iter().sum();
            if !active.is_empty() {
                amplification = amplification.max(grid.error_amplification(j_tot, active.len()));
            }

            // iterate the product grid over active coordinates
            let mut counters = vec![0usize; active.len()];
            loop {
                let mut coords = vec![z_rest; lp];
                let mut lam = 1.0f64;
                for (a, &coord_idx) in active.iter().enumerate() {
                    let node_idx = counters[a];
                    coords[coord_idx] += nodes_1d[node_idx];
                    lam *= weight_rows[a][node_idx];
                }
                if lam != 0.0 {
                    let free = EvalPoint::Free { z0, zs: coords.clone() };
                    let all = free.coords();
                    let norm = normalizer(&all, &maps, &sp)?;
                    let psi0 = maps.psi(z0)?;
                    let psis: Vec<Complex64> =
                        coords.iter().map(|&z| maps.psi(z)).collect::<Result<_>>()?;
                    nodes.push(PlanNode {
                        psi0,
                        psis,
                        point: free,
                        coefficient: fhat * tail * lam * norm,
                    });
                }
                // advance counters
                let mut carry = 0;
                while carry < counters.len() {
                    counters[carry] += 1;
                    if counters[carry] < nodes_1d.len() {
                        break;
                    }
                    counters[carry] = 0;
                    carry += 1;
                }
                if carry == counters.len() {
                    break;
                }
                if counters.is_empty() {
                    break;
                }
            }
        }

        // merge nodes with identical evaluation points
        let mut merged: Vec<PlanNode> = Vec::new();
        'outer: for node in nodes {
            for m in &mut merged {
                if m.point == node.point {
                    m.coefficient += node.coefficient;
                    continue 'outer;
                }
            }
            merged.push(node);
        }
        let abs_sum = merged.iter().map(|n| n.coefficient.norm()).sum();
        Ok(EstimationPlan {
            nodes: merged,
            abs_coefficient_sum: abs_sum,
            interp_amplification: amplification,
            target: point.clone(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Applies the plan to a pool: one pass, per-trace combined values,
    /// empirical standard error of the combination.
    pub fn apply_pool(&self, pool: &SamplePool, trunc: TruncationLimits) -> Estimate {
        let values: Vec<Complex64> = parallel_map_pool(pool, |bits| {
            self.nodes
                .iter()
                .map(|n| n.coefficient * trace_statistic_psi(bits, n.psi0, &n.psis, trunc))
                .sum()
        });
        summarize(values)
    }

    /// The exact expectation of the pooled estimate if the pool were drawn
    /// from `y` through the same channel and shift. With a zero shift this
    /// is exactly g_y^f at the target point.
    pub fn apply_exact(&self, y: &BitString, params: &ChannelParams, shift: &ShiftSpec) -> Result<Complex64> {
        let mut total = ZERO;
        for n in &self.nodes {
            total += n.coefficient * expected_trace_statistic(y, &n.point, params, shift)?;
        }
        Ok(total)
    }
}

/// Result of the general estimator: the Monte Carlo estimate plus the
/// Appendix-B style propagated bound diagnostics.
#[derive(Clone, Debug)]
pub struct GeneralEstimate {
    pub estimate: Estimate,
    /// Worst-case amplification of a per-node error through the extraction.
    pub interp_amplification: f64,
    pub nodes: usize,
}

/// Full pipeline: Fourier-decompose f, reduce each character to derivatives
/// of a lower-arity simple character, extract those derivatives on a real
/// grid around z_rest, and combine linearly.
pub fn estimate_g_general(
    pool: &SamplePool,
    f: &BoolFn,
    point: &EvalPoint,
    params: &ChannelParams,
    shift: &ShiftSpec,
    grid: &GridSpec,
    trunc: TruncationLimits,
) -> Result<GeneralEstimate> {
    let plan = EstimationPlan::build(f, point, params, shift, grid)?;
    let estimate = plan.apply_pool(pool, trunc);
    Ok(GeneralEstimate {
        estimate,
        interp_amplification: plan.interp_amplification,
        nodes: plan.node_count(),
    })
}
