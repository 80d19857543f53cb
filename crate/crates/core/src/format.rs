//! Text formatting shared by the CSV and JSON writers.

/// Formats `x` with 17 significant digits, which round-trips every `f64`.
///
/// Moderate magnitudes are written in positional notation (`0.76159415595576488`),
/// very small or very large ones in scientific notation.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..17).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, x)
    } else {
        sci
    }
}

/// Writes `# key: value` comment lines, the metadata block that prefixes every CSV artifact.
pub fn csv_metadata(meta: &[(String, String)]) -> String {
    meta.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(1f64.tanh()), "0.76159415595576485");
        assert_eq!(fmt17(2.0), "2.0000000000000000");
        assert_eq!(fmt17(0.0), "0");
        assert_eq!(fmt17(1e-300), "1.0000000000000000e-300");
    }

    #[test]
    fn round_trips() {
        for x in [1f64.tanh(), 1.0 / 3.0, 123456.789, 1e-7, 6.02e23, -2.5e-3, f64::MIN_POSITIVE] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }
}
