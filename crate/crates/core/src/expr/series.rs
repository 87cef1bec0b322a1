//! Truncated Taylor series in one variable.
//!
//! Coefficient `k` is `f^(k)(t0) / k!`. Binary operations truncate to the
//! shorter operand, so a series never claims more accuracy than its inputs.

use super::eval::Number;

#[derive(Debug, Clone, PartialEq)]
pub struct Series(Vec<f64>);

impl Series {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least one coefficient");
        Series(coeffs)
    }

    pub fn constant(c: f64, len: usize) -> Self {
        let mut v = vec![0.0; len.max(1)];
        v[0] = c;
        Series(v)
    }

    /// Builds a series from derivative values `f, f', f'', ...`.
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        let mut fact = 1.0;
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(k, d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d / fact
            })
            .collect();
        Series::new(coeffs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// `k`-th time derivative at the expansion point, or 0 past the
    /// truncation order.
    pub fn derivative(&self, k: usize) -> f64 {
        match self.0.get(k) {
            Some(c) => c * (1..=k).map(|i| i as f64).product::<f64>(),
            None => 0.0,
        }
    }

    /// Series of the time derivative; one coefficient shorter.
    pub fn deriv(&self) -> Series {
        if self.0.len() == 1 {
            return Series(vec![0.0]);
        }
        Series(
            self.0[1..]
                .iter()
                .enumerate()
                .map(|(k, c)| (k + 1) as f64 * c)
                .collect(),
        )
    }

    pub fn truncate(&self, len: usize) -> Series {
        Series(self.0[..len.clamp(1, self.0.len())].to_vec())
    }

    /// Evaluates the truncated polynomial at offset `h` from the
    /// expansion point.
    pub fn eval_at(&self, h: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * h + c)
    }

    fn zip<F: Fn(f64, f64) -> f64>(&self, o: &Series, f: F) -> Series {
        Series(self.0.iter().zip(&o.0).map(|(a, b)| f(*a, *b)).collect())
    }

    fn sin_cos(&self) -> (Series, Series) {
        let a = &self.0;
        let n = a.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..n {
            let (mut ss, mut cc) = (0.0, 0.0);
            for j in 1..=k {
                ss += j as f64 * a[j] * c[k - j];
                cc += j as f64 * a[j] * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = -cc / k as f64;
        }
        (Series(s), Series(c))
    }
}

impl Number for Series {
    fn lift(c: f64, like: &Self) -> Self {
        Series::constant(c, like.len())
    }

    fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    fn mul(&self, o: &Self) -> Self {
        let n = self.len().min(o.len());
        let (a, b) = (&self.0, &o.0);
        Series(
            (0..n)
                .map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum())
                .collect(),
        )
    }

    fn div(&self, o: &Self) -> Self {
        let n = self.len().min(o.len());
        let (a, b) = (&self.0, &o.0);
        let mut q = vec![0.0; n];
        for k in 0..n {
            let mut acc = a[k];
            for j in 0..k {
                acc -= q[j] * b[k - j];
            }
            q[k] = acc / b[0];
        }
        Series(q)
    }

    fn neg(&self) -> Self {
        Series(self.0.iter().map(|c| -c).collect())
    }

    fn sin(&self) -> Self {
        self.sin_cos().0
    }

    fn cos(&self) -> Self {
        self.sin_cos().1
    }

    fn tan(&self) -> Self {
        let (s, c) = self.sin_cos();
        s.div(&c)
    }

    fn exp(&self) -> Self {
        let a = &self.0;
        let n = a.len();
        let mut e = vec![0.0; n];
        e[0] = a[0].exp();
        for k in 1..n {
            let acc: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = acc / k as f64;
        }
        Series(e)
    }

    fn ln(&self) -> Self {
        let a = &self.0;
        let n = a.len();
        let mut l = vec![0.0; n];
        l[0] = a[0].ln();
        for k in 1..n {
            let acc: f64 = (1..k).map(|j| j as f64 * l[j] * a[k - j]).sum();
            l[k] = (a[k] - acc / k as f64) / a[0];
        }
        Series(l)
    }

    fn powi(&self, n: i32) -> Self {
        if n < 0 {
            return Series::constant(1.0, self.len()).div(&self.powi(-n));
        }
        let mut result = Series::constant(1.0, self.len());
        let mut base = self.clone();
        let mut k = n as u32;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    fn finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t_plus(c: f64, len: usize) -> Series {
        let mut s = Series::constant(c, len);
        if len > 1 {
            s.coeffs_mut()[1] = 1.0;
        }
        s
    }

    #[test]
    fn exp_series_coefficients() {
        let e = t_plus(0.0, 6).exp();
        let mut fact = 1.0;
        for k in 0..6 {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((e.coeffs()[k] - 1.0 / fact).abs() < 1e-15);
        }
    }

    #[test]
    fn ln_inverts_exp() {
        let x = Series::new(vec![0.3, -0.2, 0.5, 0.1, 0.0, 0.7]);
        let back = x.exp().ln();
        for (a, b) in back.coeffs().iter().zip(x.coeffs()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn sin_cos_pythagoras_and_tan() {
        let x = Series::new(vec![0.4, 1.0, -0.3, 0.2, 0.05]);
        let s = x.sin();
        let c = x.cos();
        let one = s.mul(&s).add(&c.mul(&c));
        assert!((one.coeffs()[0] - 1.0).abs() < 1e-15);
        for k in 1..5 {
            assert!(one.coeffs()[k].abs() < 1e-14);
        }
        let t = x.tan().mul(&c).sub(&s);
        assert!(t.coeffs().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn derivative_values_round_trip() {
        let s = Series::from_derivatives(&[8.0, 12.0, 12.0, 6.0]);
        assert_eq!(
            (0..4).map(|k| s.derivative(k)).collect::<Vec<_>>(),
            vec![8.0, 12.0, 12.0, 6.0]
        );
        assert_eq!(s.deriv().derivative(0), 12.0);
    }

    #[test]
    fn negative_power_and_division_agree() {
        let x = Series::new(vec![1.5, 0.2, -0.1, 0.3]);
        let a = x.powi(-3);
        let b = Series::constant(1.0, 4).div(&x.mul(&x).mul(&x));
        for (p, q) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((p - q).abs() < 1e-14);
        }
    }
}
