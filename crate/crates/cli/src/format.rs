//! Number formatting shared by every CSV and data file.

use dhtbound::ExtReal;

const DIGITS: usize = 12;

/// `v` with 12 significant digits, `%g` style: fixed notation for decimal
/// exponents in `[-5, 12)`, scientific otherwise, trailing zeros removed.
pub fn sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // the exponent after rounding to DIGITS places decides the notation
    let sci = format!("{:.*e}", DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS as i32).contains(&exp) {
        let decimals = (DIGITS as i32 - 1 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}{:02}", trim(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn sig_ext(v: ExtReal) -> String {
    sig(v.to_f64())
}
