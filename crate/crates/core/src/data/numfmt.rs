/// Formats `v` with 9 significant digits, `.` as the decimal separator and no
/// trailing zeros. Magnitudes outside `[1e-5, 1e9)` switch to exponent form.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    // Round first so the exponent reflects carries such as 9.999999999 -> 10.
    let sci = format!("{v:.8e}");
    let (_, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let (mantissa, _) = sci.split_once('e').expect("exponent form");
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats_common_values() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(-2.5), "-2.5");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(123.456789012), "123.456789");
        assert_eq!(format_sig9(9.9999999999), "10");
        assert_eq!(format_sig9(1e-7), "1e-7");
        assert_eq!(format_sig9(12345678901.0), "1.23456789e10");
    }

    proptest! {
        #[test]
        fn reformatting_is_stable(v in -1e6f64..1e6) {
            let once = format_sig9(v);
            let parsed: f64 = once.parse().unwrap();
            prop_assert_eq!(format_sig9(parsed), once);
        }
    }
}
