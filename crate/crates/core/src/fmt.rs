/// Fixed six-decimal rendering used by every CSV writer; values that round
/// to zero print without a sign.
pub(crate) fn fixed6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::fixed6;

    #[test]
    fn negative_zero_is_unsigned() {
        assert_eq!(fixed6(-1e-9), "0.000000");
        assert_eq!(fixed6(-0.5), "-0.500000");
        assert_eq!(fixed6(1.0383058), "1.038306");
    }
}
