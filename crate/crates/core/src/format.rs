//! Number formatting shared by every text export.

/// Scientific notation with 17 significant digits.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    #[test]
    fn round_trips() {
        for v in [0.1, -1.0 / 3.0, 6.02214076e23, 1e-300, 0.0] {
            let s = super::sci(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
