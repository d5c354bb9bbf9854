//! Lagrange coefficient extraction on the equispaced grid x_i = i c / n,
//! i = -n..n: recover monomial coefficients of a degree <= 2n polynomial
//! from (possibly noisy) point evaluations, with the explicit error
//! amplification bound (2n)^{2 j_tot + 2 l} c^{-j_tot} delta.
//!
//! The lambda weights grow combinatorially, so they are expanded in
//! double-double arithmetic throughout; an exact oracle can keep the full
//! benefit by returning [`Dd`] values, while f64 oracles are limited by
//! their own rounding noise times the conditioning of the weights.

use std::ops::Add;

use crate::error::{Error, Result};

/// Unevaluated double-double value (hi + lo with |lo| <= ulp(hi)/2).
#[derive(Clone, Copy, Debug, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        // exactly rounded fused multiply-add gives the exact low part
        let err = a.mul_add(b, -p);
        Dd { hi: p, lo: err }
    }

    pub fn add(self, other: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, other.hi);
        let lo = s.lo + self.lo + other.lo;
        Dd::two_sum(s.hi, lo)
    }

    pub fn add_f64(self, x: f64) -> Dd {
        self.add(Dd::from_f64(x))
    }

    pub fn mul_f64(self, x: f64) -> Dd {
        let p = Dd::two_prod(self.hi, x);
        let lo = self.lo.mul_add(x, p.lo);
        Dd::two_sum(p.hi, lo)
    }

    pub fn mul(self, other: Dd) -> Dd {
        let p = Dd::two_prod(self.hi, other.hi);
        let lo = p.lo + self.hi * other.lo + self.lo * other.hi;
        Dd::two_sum(p.hi, lo)
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    /// Division refined by one Newton correction step.
    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.add(other.mul_f64(q1).neg());
        let q2 = r.to_f64() / other.to_f64();
        Dd::two_sum(q1, q2)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, other: Dd) -> Dd {
        Dd::add(self, other)
    }
}

/// Equispaced symmetric grid on [-c, c] with 2 n_deg + 1 nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub c: f64,
    pub n_deg: usize,
}

impl GridSpec {
    pub fn new(c: f64, n_deg: usize) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParam { field: "c", message: format!("half-width {c} must be positive") });
        }
        if n_deg == 0 {
            return Err(Error::InvalidParam { field: "n_deg", message: "degree bound must be >= 1".into() });
        }
        Ok(GridSpec { c, n_deg })
    }

    pub fn node_count(&self) -> usize {
        2 * self.n_deg + 1
    }

    /// Nodes x_i = i c / n for i = -n..n, in ascending order.
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.n_deg as i64;
        (-n..=n).map(|i| i as f64 * self.c / n as f64).collect()
    }

    /// The bound (2n)^{2 j_tot + 2 l} c^{-j_tot} on the noise amplification
    /// of an l-variable extraction of total degree j_tot.
    pub fn error_amplification(&self, j_tot: usize, l: usize) -> f64 {
        (2.0 * self.n_deg as f64).powi((2 * j_tot + 2 * l) as i32) * self.c.powi(-(j_tot as i32))
    }
}

/// All rows of lambda weights at once: `rows[j][i]` is the coefficient of
/// x^j in the Lagrange basis polynomial L_i.
fn lagrange_weight_table(grid: &GridSpec) -> Vec<Vec<Dd>> {
    let nodes = grid.nodes();
    let m = nodes.len();
    let mut rows = vec![vec![Dd::default(); m]; m];
    for i in 0..m {
        // expand prod_{i' != i} (x - x_{i'}) in ascending coefficients
        let mut coef = vec![Dd::default(); m];
        coef[0] = Dd::from_f64(1.0);
        let mut deg = 0usize;
        let mut denom = Dd::from_f64(1.0);
        for (ip, &xip) in nodes.iter().enumerate() {
            if ip == i {
                continue;
            }
            // error-free node difference keeps the denominator at full width
            denom = denom.mul(Dd::two_sum(nodes[i], -xip));
            for k in (0..=deg).rev() {
                let shifted = coef[k + 1].add(coef[k]);
                coef[k + 1] = shifted;
                coef[k] = coef[k].mul_f64(-xip);
            }
            deg += 1;
        }
        for (j, row) in rows.iter_mut().enumerate() {
            row[i] = coef[j].div(denom);
        }
    }
    rows
}

/// Coefficients lambda_{i,j} of x^j in the Lagrange basis polynomial L_i for
/// every node i, so that sum_i lambda_{i,j} g(x_i) recovers the x^j
/// coefficient of any polynomial g of degree <= 2 n_deg.
pub fn lagrange_weights(grid: &GridSpec, j: usize) -> Result<Vec<f64>> {
    Ok(lagrange_weights_dd(grid, j)?.into_iter().map(Dd::to_f64).collect())
}

/// Full-precision weights for exact-arithmetic extraction paths.
pub fn lagrange_weights_dd(grid: &GridSpec, j: usize) -> Result<Vec<Dd>> {
    if j > 2 * grid.n_deg {
        return Err(Error::DegreeOutOfRange { degree: j, nodes: grid.node_count() });
    }
    Ok(lagrange_weight_table(grid).swap_remove(j))
}

/// Values that can be combined with real Lagrange weights.
pub trait Extractable: Copy + Default + Add<Output = Self> {
    fn scale(self, w: &Dd) -> Self;
}

impl Extractable for f64 {
    fn scale(self, w: &Dd) -> Self {
        self * w.to_f64()
    }
}

impl Extractable for num_complex::Complex64 {
    fn scale(self, w: &Dd) -> Self {
        self * w.to_f64()
    }
}

impl Extractable for Dd {
    fn scale(self, w: &Dd) -> Self {
        self.mul(*w)
    }
}

/// Extracts the coefficient of the monomial z_1^{j_1} ... z_l^{j_l} from an
/// oracle evaluating a multivariate polynomial (degree <= 2 n_deg in each
/// variable) with additive noise at most `delta` per call.
///
/// The recursion peels the last variable: the x^{j_l} coefficient of
/// p(z_1, .., z_{l-1}, .) is itself a polynomial in the remaining variables,
/// interrogated lazily at grid nodes. Oracle calls: (2 n_deg + 1)^l.
/// Returns the value together with the amplification bound
/// (2n)^{2 j_tot + 2 l} c^{-j_tot} delta.
pub fn extract_coefficient<T, F>(
    oracle: &mut F,
    grid: &GridSpec,
    multi_index: &[usize],
    delta: f64,
) -> Result<(T, f64)>
where
    T: Extractable,
    F: FnMut(&[f64]) -> Result<T>,
{
    for &j in multi_index {
        if j > 2 * grid.n_deg {
            return Err(Error::DegreeOutOfRange { degree: j, nodes: grid.node_count() });
        }
    }
    let l = multi_index.len();
    let mut point = vec![0.0f64; l];
    let value = extract_rec(oracle, grid, multi_index, &mut point, l)?;
    let j_tot: usize = multi_index.iter().sum();
    let bound = grid.error_amplification(j_tot, l) * delta;
    Ok((value, bound))
}

fn extract_rec<T, F>(
    oracle: &mut F,
    grid: &GridSpec,
    multi_index: &[usize],
    point: &mut [f64],
    level: usize,
) -> Result<T>
where
    T: Extractable,
    F: FnMut(&[f64]) -> Result<T>,
{
    if level == 0 {
        return oracle(point);
    }
    let j = multi_index[level - 1];
    let weights = lagrange_weights_dd(grid, j)?;
    let nodes = grid.nodes();
    let mut acc = T::default();
    for (i, &x) in nodes.iter().enumerate() {
        if weights[i].to_f64() == 0.0 {
            continue;
        }
        point[level - 1] = x;
        let inner = extract_rec(oracle, grid, multi_index, point, level - 1)?;
        acc = acc + inner.scale(&weights[i]);
    }
    point[level - 1] = 0.0;
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;
    use rand::Rng;

    fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn eval_poly_dd(coeffs: &[f64], x: f64) -> Dd {
        coeffs
            .iter()
            .rev()
            .fold(Dd::default(), |acc, &c| acc.mul_f64(x).add_f64(c))
    }

    #[test]
    fn dd_arithmetic_is_exacter_than_f64() {
        let a = Dd::from_f64(1.0).add_f64(1e-20);
        assert_eq!(a.to_f64(), 1.0);
        assert_eq!(a.lo, 1e-20);
        let b = a.mul_f64(3.0);
        assert!((b.lo - 3e-20).abs() < 1e-30);
    }

    #[test]
    fn constant_term_of_x_squared_is_zero() {
        let grid = GridSpec::new(0.5, 1).unwrap(); // nodes {-c, 0, c}
        let w = lagrange_weights(&grid, 0).unwrap();
        let nodes = grid.nodes();
        let recovered: f64 = nodes.iter().zip(&w).map(|(&x, &wi)| wi * x * x).sum();
        assert!(recovered.abs() < 1e-12);
    }

    #[test]
    fn linear_coefficient_recovered() {
        for n_deg in [1usize, 3, 8] {
            let grid = GridSpec::new(0.7, n_deg).unwrap();
            let w = lagrange_weights(&grid, 1).unwrap();
            let recovered: f64 = grid.nodes().iter().zip(&w).map(|(&x, &wi)| wi * x).sum();
            assert!((recovered - 1.0).abs() < 1e-10, "n_deg={n_deg}: {recovered}");
        }
    }

    /// The acceptance-level recovery check: with an exact (double-double)
    /// oracle, every coefficient of a random degree-2n polynomial comes back
    /// to 1e-8 at n_deg = 10, c = 0.5. An f64 oracle cannot support this at
    /// high degree: the weights reach ~5e13 in magnitude, so its own
    /// rounding noise is amplified past the tolerance.
    #[test]
    fn random_polynomial_coefficients_recovered() {
        let mut rng = stream_rng(41, "interp", 0);
        let grid = GridSpec::new(0.5, 10).unwrap();
        for _ in 0..20 {
            let coeffs: Vec<f64> = (0..=20).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for j in 0..=20 {
                let mut oracle = |p: &[f64]| -> crate::error::Result<Dd> { Ok(eval_poly_dd(&coeffs, p[0])) };
                let (got, _) = extract_coefficient(&mut oracle, &grid, &[j], 0.0).unwrap();
                assert!(
                    (got.to_f64() - coeffs[j]).abs() < 1e-8,
                    "degree {j}: got {}, want {}",
                    got.to_f64(),
                    coeffs[j]
                );
            }
        }
    }

    #[test]
    fn interpolation_identity_at_random_points() {
        // sum_i g(x_i) L_i(x) reproduces g at arbitrary points
        let mut rng = stream_rng(41, "interp", 1);
        let grid = GridSpec::new(0.6, 6).unwrap();
        let nodes = grid.nodes();
        // basis coefficients row by row: L_i = sum_j lambda_{i,j} x^j
        let rows: Vec<Vec<f64>> = (0..=12).map(|j| lagrange_weights(&grid, j).unwrap()).collect();
        for _ in 0..100 {
            let coeffs: Vec<f64> = (0..=12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for _ in 0..50 {
                let x: f64 = rng.gen_range(-grid.c..grid.c);
                let direct = eval_poly(&coeffs, x);
                let mut via_basis = 0.0;
                for (i, &xi) in nodes.iter().enumerate() {
                    let li: f64 = rows
                        .iter()
                        .enumerate()
                        .map(|(j, row)| row[i] * x.powi(j as i32))
                        .sum();
                    via_basis += eval_poly(&coeffs, xi) * li;
                }
                assert!((direct - via_basis).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn weight_bound_holds() {
        // |lambda_{i,j}| <= (2n)^{2j+1} c^{-j} for n_deg <= 12
        for n_deg in 1..=12usize {
            let grid = GridSpec::new(0.5, n_deg).unwrap();
            for j in 0..=2 * n_deg {
                let bound = (2.0 * n_deg as f64).powi(2 * j as i32 + 1) * grid.c.powi(-(j as i32));
                for (i, &w) in lagrange_weights(&grid, j).unwrap().iter().enumerate() {
                    assert!(
                        w.abs() <= bound * (1.0 + 1e-9),
                        "n_deg={n_deg} j={j} i={i}: |{w}| > {bound}"
                    );
                }
            }
        }
    }

    #[test]
    fn multivariate_extraction_exact() {
        let grid = GridSpec::new(0.5, 3).unwrap();
        // p(z1, z2) = z1 z2: coefficient of (1,1) is 1
        let mut oracle = |p: &[f64]| -> crate::error::Result<f64> { Ok(p[0] * p[1]) };
        let (v, _) = extract_coefficient(&mut oracle, &grid, &[1, 1], 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-9);

        // constant polynomial in 3 variables
        let mut oracle7 = |_: &[f64]| -> crate::error::Result<f64> { Ok(7.0) };
        let (v, _) = extract_coefficient(&mut oracle7, &grid, &[0, 0, 0], 0.0).unwrap();
        assert!((v - 7.0).abs() < 1e-9);
    }

    #[test]
    fn noise_never_exceeds_bound() {
        // exact polynomial oracle plus uniform noise of magnitude delta
        let delta = 1e-9;
        let grid = GridSpec::new(0.5, 8).unwrap();
        let mut failures = 0;
        for trial in 0..1000 {
            let mut rng = stream_rng(42, "noise", trial);
            let c1: f64 = rng.gen_range(-1.0..1.0);
            // p(z1, z2) = c1 z1^2 z2 + a linear term
            let c0: f64 = rng.gen_range(-1.0..1.0);
            let mut noisy = |p: &[f64]| -> crate::error::Result<f64> {
                let exact = c1 * p[0] * p[0] * p[1] + c0 * p[0];
                Ok(exact + rng.gen_range(-delta..delta))
            };
            let (v, bound) = extract_coefficient(&mut noisy, &grid, &[2, 1], delta).unwrap();
            if (v - c1).abs() > bound {
                failures += 1;
            }
        }
        assert_eq!(failures, 0);
    }
}
