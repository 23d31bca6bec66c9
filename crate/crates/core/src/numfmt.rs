//! Decimal formatting with 17 significant digits (round-trips every `f64`).

/// Format `x` as a plain decimal with 17 significant digits.
///
/// Infinite values print as `inf` / `-inf`, NaN as `nan`.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // scientific form fixes the decimal exponent after rounding
    let sci = format!("{:.16e}", x);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if !(-30..=30).contains(&exp) {
        return sci;
    }
    let decimals = (16 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(fmt17(0.5), "0.50000000000000000");
        assert_eq!(fmt17(1.0), "1.0000000000000000");
        assert_eq!(fmt17(0.0), "0");
        assert_eq!(fmt17(f64::INFINITY), "inf");
        assert_eq!(fmt17(123.25), "123.25000000000000");
    }

    proptest! {
        #[test]
        fn round_trips(x in -1e6f64..1e6) {
            prop_assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }

        #[test]
        fn round_trips_unit(x in 0f64..1.0) {
            prop_assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }
}
