//! Number formatting shared by the CSV writers.

/// Shortest round-trip text for `v`, in exponent form outside `[1e-4, 1e15)`.
pub fn real(v: f64) -> String {
    let m = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&m) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::real;

    #[test]
    fn round_trips() {
        for v in [0.0, 1.5, -2.5e-17, 3.0e20, 0.1, 1e-4, f64::MIN_POSITIVE] {
            assert_eq!(real(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(real(2.5e-17), "2.5e-17");
        assert_eq!(real(f64::NAN), "NaN");
    }
}
