//! Fixed-precision decimal rendering shared by the JSON and CSV writers.

/// Renders `x` with exactly `digits` significant digits.
///
/// Magnitudes in `[1e-5, 1e15)` are written in positional notation, others
/// in scientific notation. Zero is written as `0`.
///
/// ```
/// use avclab::format::significant;
/// assert_eq!(significant(0.5 * 2.5f64.ln(), 9), "0.458145366");
/// assert_eq!(significant(1234.5, 3), "1.23e3");
/// assert_eq!(significant(-1.5e-7, 4), "-1.500e-7");
/// assert_eq!(significant(0.0, 9), "0");
/// ```
pub fn significant(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let body: String = mantissa.chars().filter(|c| *c != '.').collect();
    if !(-5..15).contains(&exp) || exp >= digits as i32 {
        return format!("{sign}{mantissa}e{exp}");
    }
    if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("{sign}0.{zeros}{body}")
    } else {
        let (int, frac) = body.split_at(exp as usize + 1);
        if frac.is_empty() {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{frac}")
        }
    }
}
