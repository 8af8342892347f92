use crate::error::{Error, Result};

const BERNOULLI_2J: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Riemann zeta function for real `s > 1`: direct sum to `N = 20` plus the
/// Euler–Maclaurin tail through `B_20`.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("zeta needs s > 1, got {s}")));
    }
    const N: usize = 20;
    let n = N as f64;
    let mut acc = crate::sum::CompensatedSum::new();
    for k in (1..N).rev() {
        acc.add((k as f64).powf(-s));
    }
    acc.add(n.powf(1.0 - s) / (s - 1.0));
    acc.add(0.5 * n.powf(-s));
    // B_{2j}/(2j)! * s(s+1)...(s+2j-2) * N^{-s-2j+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut npow = n.powf(-s - 1.0);
    for (j, b) in BERNOULLI_2J.iter().enumerate() {
        let j = j + 1;
        acc.add(b / fact * rising * npow);
        let a = (2 * j - 1) as f64;
        rising *= (s + a) * (s + a + 1.0);
        fact *= ((2 * j + 1) * (2 * j + 2)) as f64;
        npow /= n * n;
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_forms() {
        assert!((zeta(2.0).unwrap() - PI * PI / 6.0).abs() < 1e-14);
        assert!((zeta(4.0).unwrap() - PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta(6.0).unwrap() - PI.powi(6) / 945.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_pole() {
        assert!(zeta(1.0).is_err());
        assert!(zeta(0.5).is_err());
    }
}
