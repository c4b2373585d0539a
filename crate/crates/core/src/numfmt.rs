//! Number formatting shared by the CSV writers.

/// C-style `%.{sig}g`: `sig` significant digits, trailing zeros removed,
/// scientific notation when the exponent is below -4 or at least `sig`.
pub fn fmt_g(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

/// Twelve significant digits, the precision used in every CSV output.
pub fn fmt12(x: f64) -> String {
    fmt_g(x, 12)
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

    #[test]
    fn matches_printf_g() {
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(1.0), "1");
        assert_eq!(fmt12(-2.5), "-2.5");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(123456.789), "123456.789");
        assert_eq!(fmt12(1e-5), "1e-05");
        assert_eq!(fmt12(1.5e-7), "1.5e-07");
        assert_eq!(fmt12(1e12), "1e+12");
        assert_eq!(fmt12(999999999999.5), "1e+12");
        assert_eq!(fmt12(0.0001), "0.0001");
        assert_eq!(fmt_g(1.23456, 3), "1.23");
    }
}
