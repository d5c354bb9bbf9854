//! Mobius maps of the insertion-deletion channel and the shift polynomial.
//!
//! phi1(w) = p w + q,  phi2(w) = p' w / (1 - q' w),  phi = phi2 . phi1,
//! Psi = phi^{-1} (closed form),  phibar(w) = p p' / (1 - q' phi1(w)).

use num_complex::Complex64;

use crate::channel::{ChannelParams, ShiftSpec};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct MobiusMaps {
    p: f64,
    q: f64,
    pp: f64,
    qp: f64,
}

impl MobiusMaps {
    pub fn new(params: &ChannelParams) -> Self {
        MobiusMaps { p: params.p(), q: params.q, pp: params.p_prime(), qp: params.q_prime }
    }

    pub fn phi1(&self, w: Complex64) -> Complex64 {
        self.p * w + self.q
    }

    pub fn phi2(&self, w: Complex64) -> Complex64 {
        self.pp * w / (1.0 - self.qp * w)
    }

    pub fn phi(&self, w: Complex64) -> Complex64 {
        self.phi2(self.phi1(w))
    }

    /// Closed-form inverse of phi:
    /// Psi(z) = (z (1 - q'q) - p'q) / (p (p' + q' z)).
    ///
    /// Note Psi(0) = -q/p; its absolute value is the q/p of the paper.
    pub fn psi(&self, z: Complex64) -> Result<Complex64> {
        let den = self.p * (Complex64::from(self.pp) + self.qp * z);
        if den.norm() < 1e-300 {
            return Err(Error::MobiusPole);
        }
        Ok((z * (1.0 - self.qp * self.q) - self.pp * self.q) / den)
    }

    pub fn phibar(&self, w: Complex64) -> Complex64 {
        self.p * self.pp / (1.0 - self.qp * self.phi1(w))
    }

    /// phibar(Psi(z)) in one step.
    pub fn phibar_at_psi(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.phibar(self.psi(z)?))
    }
}

/// Convenience wrapper matching the operation-level contract.
pub fn psi(z: Complex64, params: &ChannelParams) -> Result<Complex64> {
    MobiusMaps::new(params).psi(z)
}

/// P(z) = sum_s sigma(s) z^s over the shift support, in factored form
/// z^a * Ptilde(z) with deg Ptilde <= eta.
#[derive(Clone, Debug)]
pub struct ShiftPolynomial {
    support: Vec<(usize, f64)>,
}

impl ShiftPolynomial {
    pub fn from_spec(spec: &ShiftSpec) -> Self {
        ShiftPolynomial { support: spec.support().to_vec() }
    }

    pub fn support(&self) -> &[(usize, f64)] {
        &self.support
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.support
            .iter()
            .map(|&(s, sigma)| sigma * z.powu(s as u32))
            .sum()
    }

    /// P(1/z0).
    pub fn eval_inverse(&self, z0: Complex64) -> Complex64 {
        self.eval(1.0 / z0)
    }

    /// The boundary-corrected shift weight sum_{s <= idx} sigma(s) z0^{-s}
    /// for a message bit stored at 0-based index `idx` (position idx+1).
    /// For idx >= max shift this equals P(1/z0); smaller indices drop the
    /// shifts that would have erased the bit.
    pub fn truncated_weight(&self, idx: usize, z0: Complex64) -> Complex64 {
        self.support
            .iter()
            .take_while(|&&(s, _)| s <= idx)
            .map(|&(s, sigma)| sigma * (1.0 / z0).powu(s as u32))
            .sum()
    }

    /// Prefix table of truncated weights for indices 0..n-1.
    pub fn weight_table(&self, n: usize, z0: Complex64) -> Vec<Complex64> {
        let zinv = 1.0 / z0;
        let mut table = vec![Complex64::new(0.0, 0.0); n];
        let mut acc = Complex64::new(0.0, 0.0);
        let mut iter = self.support.iter().peekable();
        for (idx, slot) in table.iter_mut().enumerate() {
            while let Some(&&(s, sigma)) = iter.peek() {
                if s <= idx {
                    acc += sigma * zinv.powu(s as u32);
                    iter.next();
                } else {
                    break;
                }
            }
            *slot = acc;
        }
        table
    }

    pub fn max_shift(&self) -> usize {
        self.support.last().map(|&(s, _)| s).unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn psi_fixes_one() {
        for (q, qp) in [(0.0, 0.0), (0.1, 0.0), (0.0, 0.3), (0.25, 0.4), (0.7, 0.2)] {
            let m = MobiusMaps::new(&ChannelParams::new(q, qp).unwrap());
            let one = c(1.0, 0.0);
            assert!((m.psi(one).unwrap() - one).norm() < 1e-12, "q={q} qp={qp}");
            assert!((m.phi(one) - one).norm() < 1e-12);
            // phibar(Psi(1)) = p p' / (1 - q') = p
            assert!((m.phibar_at_psi(one).unwrap() - c(1.0 - q, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn psi_closed_form_examples() {
        // q = 0.2, q' = 0: Psi(0.6) = (0.6 - 0.2) / 0.8 = 0.5
        let m = MobiusMaps::new(&ChannelParams::new(0.2, 0.0).unwrap());
        let w = m.psi(c(0.6, 0.0)).unwrap();
        assert!((w - c(0.5, 0.0)).norm() < 1e-12);
        assert!((m.phi(c(0.5, 0.0)) - c(0.6, 0.0)).norm() < 1e-12);

        // q = 0.25, q' = 0: |Psi(0)| = q/p = 1/3 (closed form gives -q/p)
        let m = MobiusMaps::new(&ChannelParams::new(0.25, 0.0).unwrap());
        let w0 = m.psi(c(0.0, 0.0)).unwrap();
        assert!((w0.norm() - 1.0 / 3.0).abs() < 1e-12);
        assert!((w0 - c(-1.0 / 3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn round_trip_on_random_grid() {
        // phi(Psi(z)) = z to 1e-12 for 1000 random z in the admissible region
        let mut rng = stream_rng(11, "mobius", 0);
        for (q, qp) in [(0.0, 0.0), (0.1, 0.1), (0.3, 0.3), (0.3, 0.0), (0.0, 0.3)] {
            let m = MobiusMaps::new(&ChannelParams::new(q, qp).unwrap());
            for _ in 0..1000 {
                let r: f64 = rng.gen_range(0.0..0.995);
                let th: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                let z = Complex64::from_polar(r, th);
                let w = m.psi(z).unwrap();
                assert!((m.phi(w) - z).norm() < 1e-12);
            }
        }
    }

    /// Lemma-direction check: z = (1 - 1/L^2) e^{i theta} with |theta| <= c1/L
    /// stays strictly inside the unit disk after Psi, for some scanned c1.
    #[test]
    fn mobius_contraction_scan() {
        for (q, qp) in [(0.0, 0.0), (0.1, 0.1), (0.3, 0.3)] {
            let m = MobiusMaps::new(&ChannelParams::new(q, qp).unwrap());
            for lcap in [10.0f64, 30.0] {
                let rho = 1.0 - 1.0 / (lcap * lcap);
                let mut c1 = 1.0;
                loop {
                    let ok = (0..=100).all(|i| {
                        let th = (i as f64 / 100.0 * 2.0 - 1.0) * c1 / lcap;
                        let z = Complex64::from_polar(rho, th);
                        m.psi(z).map(|w| w.norm() < 1.0).unwrap_or(false)
                    });
                    if ok {
                        break;
                    }
                    c1 *= 0.5;
                    assert!(c1 > 1e-6, "no contraction constant found for q={q} qp={qp} L={lcap}");
                }
            }
        }
    }

    #[test]
    fn shift_polynomial_normalized() {
        let spec = ShiftSpec::uniform(2, 4);
        let sp = ShiftPolynomial::from_spec(&spec);
        assert!((sp.eval(c(1.0, 0.0)) - c(1.0, 0.0)).norm() < 1e-12);
        let z0 = c(0.8, 0.1);
        // truncated weights agree with the full P(1/z0) past the support
        assert!((sp.truncated_weight(10, z0) - sp.eval_inverse(z0)).norm() < 1e-12);
        assert_eq!(sp.truncated_weight(1, z0), c(0.0, 0.0));
        let table = sp.weight_table(12, z0);
        for idx in 0..12 {
            assert!((table[idx] - sp.truncated_weight(idx, z0)).norm() < 1e-12);
        }
    }
}
