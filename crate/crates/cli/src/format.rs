//! Stable numeric formatting for CSV output.

/// Significant digits printed for every numeric field.
pub const SIG_DIGITS: usize = 10;

/// Formats `x` with [`SIG_DIGITS`] significant digits: fixed notation for
/// moderate magnitudes, scientific otherwise.
pub fn sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.prec$e}", prec = SIG_DIGITS - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(sig(14.142135623730951), "14.14213562");
        assert_eq!(sig(0.0), "0");
        assert_eq!(sig(-2.5), "-2.500000000");
        assert_eq!(sig(1234567.0), "1234567.000");
        assert_eq!(sig(1.5e-7), "1.500000000e-7");
        assert_eq!(sig(f64::NAN), "NaN");
    }
}
