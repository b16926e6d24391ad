//! Parsing of SI-prefixed quantities such as `5ns` or `17.8uS`.

use spikecim::{Error, SimTime};

fn prefix_scale(c: char) -> Option<f64> {
    Some(match c {
        'f' => 1e-15,
        'p' => 1e-12,
        'n' => 1e-9,
        'u' | 'µ' => 1e-6,
        'm' => 1e-3,
        'k' => 1e3,
        'M' => 1e6,
        _ => return None,
    })
}

/// Parses a number with an optional SI prefix and optional `unit` suffix.
/// A bare number is taken in base units.
pub fn parse_quantity(text: &str, unit: &str) -> Result<f64, Error> {
    let bad = || Error::InvalidArgument(format!("cannot parse {text:?} as a quantity in {unit}"));
    let s = text.trim();
    if let Ok(v) = s.parse::<f64>() {
        return if v.is_finite() { Ok(v) } else { Err(bad()) };
    }
    let s = s.strip_suffix(unit).unwrap_or(s).trim_end();
    if let Ok(v) = s.parse::<f64>() {
        return if v.is_finite() { Ok(v) } else { Err(bad()) };
    }
    let mut chars = s.chars();
    let last = chars.next_back().ok_or_else(bad)?;
    let scale = prefix_scale(last).ok_or_else(bad)?;
    let v: f64 = chars.as_str().trim().parse().map_err(|_| bad())?;
    if !v.is_finite() {
        return Err(bad());
    }
    Ok(v * scale)
}

/// Comma-separated list of positive durations.
pub fn parse_durations(text: &str) -> Result<Vec<SimTime>, Error> {
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::InvalidArgument("empty list of times".into()));
    }
    items
        .into_iter()
        .map(|item| {
            let secs = parse_quantity(item, "s")?;
            let t = SimTime::from_secs_f64(secs);
            if t == SimTime::ZERO {
                Err(Error::InvalidArgument(format!("time {item:?} must be positive")))
            } else {
                Ok(t)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantities() {
        assert_eq!(parse_quantity("17.8e-6", "S").unwrap(), 17.8e-6);
        assert!((parse_quantity("17.8uS", "S").unwrap() - 17.8e-6).abs() < 1e-18);
        assert!((parse_quantity("17.8µ", "S").unwrap() - 17.8e-6).abs() < 1e-18);
        assert_eq!(parse_quantity("0", "S").unwrap(), 0.0);
        assert!(parse_quantity("abc", "S").is_err());
        assert!(parse_quantity("5xs", "s").is_err());
    }

    #[test]
    fn durations() {
        assert_eq!(
            parse_durations("5ns, 10ns,500ps").unwrap(),
            vec![SimTime::from_ns(5), SimTime::from_ns(10), SimTime::from_ps(500)]
        );
        assert_eq!(parse_durations("1s").unwrap(), vec![SimTime::from_ns(1_000_000_000)]);
        assert_eq!(parse_durations("5e-9").unwrap(), vec![SimTime::from_ns(5)]);
        assert!(parse_durations("").is_err());
        assert!(parse_durations("0ns").is_err());
    }
}
