//! Text formatting of floating-point values for the file formats.

/// Formats `x` like C's `%.17g`: 17 significant digits, trailing zeros
/// removed, exponent form outside `1e-4 <= |x| < 1e17`. Every finite `f64`
/// round-trips through this representation.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        trim_fraction(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_g17() {
        assert_eq!(sig17(0.2), "0.20000000000000001");
        assert_eq!(sig17(1.0), "1");
        assert_eq!(sig17(-2.5), "-2.5");
        assert_eq!(sig17(1e-5), "1.0000000000000001e-05");
        assert_eq!(sig17(1e20), "1e+20");
        assert_eq!(sig17(123456.0), "123456");
        assert_eq!(sig17(0.0), "0");
        assert_eq!(sig17(f64::INFINITY), "inf");
    }

    #[test]
    fn round_trips() {
        for &x in &[1.0 / 3.0, 0.1, 2.0 / 3.0, 1e-300, 6.02214076e23, -7.25e-4, 5e-324] {
            let back: f64 = sig17(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
    }
}
