//! Functions on l bits, their Fourier expansion over F_2^l, and the
//! reduction of a general character to derivatives of a lower-arity simple
//! character.

use rand::Rng;

use crate::error::{Error, Result};

/// A real-valued function on {0,1}^l stored as a table of 2^l values.
/// Bit i-1 of the index is the argument x_i.
#[derive(Clone, Debug)]
pub struct BoolFn {
    l: usize,
    table: Vec<f64>,
}

impl BoolFn {
    pub fn from_table(l: usize, table: Vec<f64>) -> Self {
        assert_eq!(table.len(), 1usize << l);
        BoolFn { l, table }
    }

    pub fn constant(l: usize, value: f64) -> Self {
        BoolFn { l, table: vec![value; 1 << l] }
    }

    /// The simple character prod_i (-1)^{x_i}.
    pub fn simple_character(l: usize) -> Self {
        let table = (0..1usize << l)
            .map(|v| if (v.count_ones() & 1) == 1 { -1.0 } else { 1.0 })
            .collect();
        BoolFn { l, table }
    }

    /// chi_omega(x) = prod_i omega_i^{x_i} for the given mask
    /// (mask bit i-1 set means omega_i = -1).
    pub fn character(l: usize, omega_mask: usize) -> Self {
        let table = (0..1usize << l)
            .map(|v| if ((v & omega_mask).count_ones() & 1) == 1 { -1.0 } else { 1.0 })
            .collect();
        BoolFn { l, table }
    }

    /// The indicator prod_i 1_{x_i = w_i} of the template word.
    pub fn indicator(w: &crate::bits::BitString) -> Self {
        let l = w.len();
        let packed: usize = (0..l).map(|i| (w.get(i) as usize) << i).sum();
        let mut table = vec![0.0; 1 << l];
        table[packed] = 1.0;
        BoolFn { l, table }
    }

    pub fn random<R: Rng>(l: usize, rng: &mut R) -> Self {
        BoolFn { l, table: (0..1usize << l).map(|_| rng.gen_range(-1.0..1.0)).collect() }
    }

    pub fn linear_combination(alpha: f64, a: &BoolFn, beta: f64, b: &BoolFn) -> Self {
        assert_eq!(a.l, b.l);
        BoolFn {
            l: a.l,
            table: a
                .table
                .iter()
                .zip(&b.table)
                .map(|(x, y)| alpha * x + beta * y)
                .collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.l
    }

    pub fn value(&self, packed_args: usize) -> f64 {
        self.table[packed_args]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }
}

/// Fourier coefficients over F_2^l: returns f_hat indexed by the omega mask
/// (bit i-1 set means omega_i = -1), with
/// f(x) = sum_omega f_hat(omega) prod_i omega_i^{x_i} and Parseval
/// sum f_hat^2 = 2^{-l} sum f(x)^2.
pub fn fourier_f2l(f: &BoolFn) -> Result<Vec<f64>> {
    let l = f.arity();
    if l > 20 {
        return Err(Error::InvalidParam {
            field: "l",
            message: format!("table-based transform limited to l <= 20, got {l}"),
        });
    }
    let n = 1usize << l;
    let mut data = f.table.to_vec();
    // in-place Walsh-Hadamard butterfly
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (data[i], data[i + h]);
                data[i] = a + b;
                data[i + h] = a - b;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / n as f64;
    for v in &mut data {
        *v *= scale;
    }
    Ok(data)
}

/// A character omega in {+1,-1}^l, stored as the set of -1 positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacterMask {
    l: usize,
    /// 1-based indices j_1 < ... < j_{l'} with omega_j = -1.
    minus_positions: Vec<usize>,
}

impl CharacterMask {
    pub fn from_mask(l: usize, omega_mask: usize) -> Self {
        let minus_positions = (1..=l).filter(|j| omega_mask >> (j - 1) & 1 == 1).collect();
        CharacterMask { l, minus_positions }
    }

    pub fn arity(&self) -> usize {
        self.l
    }

    pub fn minus_positions(&self) -> &[usize] {
        &self.minus_positions
    }

    /// l~ = j_{l'}, the last -1 position (0 when omega is all +1).
    pub fn l_tilde(&self) -> usize {
        self.minus_positions.last().copied().unwrap_or(0)
    }
}

/// The execution plan equating g^{chi_omega} at an EQUAL-mode point with
/// derivatives of a smaller simple character:
///
/// g^{chi_omega}(z0, z, ..., z) = (1/(1-z))^{l - l~} times the mixed partial
/// derivative of order `derivative_orders[i]` in coordinate i (divided by
/// order!) of g^{simple}_{l'}(z0, zeta_1, ..., zeta_{l'}) at zeta = z.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionPlan {
    pub l: usize,
    pub reduced_arity: usize,
    /// Derivative order per kept coordinate: j_i - j_{i-1} - 1 (j_0 = 0).
    pub derivative_orders: Vec<usize>,
    /// (order)! per kept coordinate; the normalized-derivative convention
    /// already divides by these, they are recorded for oracle-side checks.
    pub factorials: Vec<f64>,
    /// Exponent l - l~ of the geometric tail factor 1/(1-z).
    pub tail_exponent: usize,
}

pub fn character_reduction(omega: &CharacterMask) -> ReductionPlan {
    let js = omega.minus_positions();
    let mut orders = Vec::with_capacity(js.len());
    let mut prev = 0usize;
    for &j in js {
        orders.push(j - prev - 1);
        prev = j;
    }
    let factorials = orders
        .iter()
        .map(|&d| (1..=d).map(|k| k as f64).product::<f64>().max(1.0))
        .collect();
    ReductionPlan {
        l: omega.arity(),
        reduced_arity: js.len(),
        derivative_orders: orders,
        factorials,
        tail_exponent: omega.arity() - omega.l_tilde(),
    }
}
