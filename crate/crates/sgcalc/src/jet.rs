//! Truncated Taylor jets in one variable, used to take exact derivatives of
//! the exp(-1/t) smooth step at a point.

/// Taylor coefficients `c[k] = f^(k)(t0)/k!` up to a fixed truncation order.
#[derive(Clone, Debug)]
pub struct Jet {
    pub coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, len: usize) -> Self {
        let mut coeffs = vec![0.0; len];
        coeffs[0] = v;
        Jet { coeffs }
    }

    /// The identity function t at base point t0.
    pub fn variable(t0: f64, len: usize) -> Self {
        let mut coeffs = vec![0.0; len];
        coeffs[0] = t0;
        if len > 1 {
            coeffs[1] = 1.0;
        }
        Jet { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Jet { coeffs }
    }

    pub fn neg(&self) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let n = self.len();
        let mut coeffs = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                coeffs[i + j] += self.coeffs[i] * other.coeffs[j];
            }
        }
        Jet { coeffs }
    }

    /// Reciprocal; requires a nonzero constant term.
    pub fn recip(&self) -> Jet {
        let n = self.len();
        let a0 = self.coeffs[0];
        let mut coeffs = vec![0.0; n];
        coeffs[0] = 1.0 / a0;
        for k in 1..n {
            let mut s = 0.0;
            for j in 1..=k {
                s += self.coeffs[j] * coeffs[k - j];
            }
            coeffs[k] = -s / a0;
        }
        Jet { coeffs }
    }

    /// exp of the jet via the standard recurrence e' = e * f'.
    pub fn exp(&self) -> Jet {
        let n = self.len();
        let mut coeffs = vec![0.0; n];
        coeffs[0] = self.coeffs[0].exp();
        for k in 1..n {
            let mut s = 0.0;
            for j in 1..=k {
                s += (j as f64) * self.coeffs[j] * coeffs[k - j];
            }
            coeffs[k] = s / k as f64;
        }
        Jet { coeffs }
    }

    /// k-th derivative value: k! * c[k].
    pub fn deriv(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        fact * self.coeffs[k]
    }
}

/// Derivatives of the smooth step s(t) = h(t)/(h(t)+h(1-t)), h(t)=exp(-1/t).
///
/// Returns s^(order)(t). Exactly 0 (for any order > 0) and 0/1 (order 0)
/// outside the open interval (0, 1).
pub fn smooth_step_deriv(t: f64, order: usize) -> f64 {
    if t <= 0.0 {
        return if order == 0 { 0.0 } else { 0.0 };
    }
    if t >= 1.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let len = order + 1;
    let tv = Jet::variable(t, len);
    // h(t) = exp(-1/t)
    let h = tv.recip().neg().exp();
    // h(1-t)
    let one_minus = Jet::constant(1.0, len).add(&tv.neg());
    let hc = one_minus.recip().neg().exp();
    let s = h.mul(&h.add(&hc).recip());
    s.deriv(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_values_and_support() {
        assert_eq!(smooth_step_deriv(-0.5, 0), 0.0);
        assert_eq!(smooth_step_deriv(0.0, 0), 0.0);
        assert_eq!(smooth_step_deriv(1.0, 0), 1.0);
        assert_eq!(smooth_step_deriv(2.0, 3), 0.0);
        let mid = smooth_step_deriv(0.5, 0);
        assert!((mid - 0.5).abs() < 1e-14);
        assert!(smooth_step_deriv(0.3, 0) > 0.0 && smooth_step_deriv(0.3, 0) < 1.0);
    }

    #[test]
    fn step_derivative_matches_finite_difference() {
        let h = 1e-5;
        for &t in &[0.2, 0.37, 0.5, 0.81] {
            for order in 1..=3usize {
                let fd = (smooth_step_deriv(t + h, order - 1)
                    - smooth_step_deriv(t - h, order - 1))
                    / (2.0 * h);
                let exact = smooth_step_deriv(t, order);
                assert!(
                    (fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()),
                    "order {order} at t={t}: fd {fd} vs {exact}"
                );
            }
        }
    }
}
