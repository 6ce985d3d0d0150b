//! Number formatting shared by every CSV writer.

/// Formats a real with at most six significant digits, trailing zeros removed.
///
/// Plain decimal notation is used for magnitudes in `[1e-5, 1e15)`,
/// scientific notation outside that range.
pub fn real(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    // Round to six significant digits first so the exponent accounts for carries (99.99995 -> 100).
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..15).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let rounded: f64 = sci.parse().expect("valid float");
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, rounded)).to_string()
}

/// Formats an optional real; absent values become an empty cell.
pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
