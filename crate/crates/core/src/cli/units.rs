//! Numbers with unit suffixes, converted to SI.

use crate::constants::ATOMIC_MASS_UNIT;

fn split(input: &str) -> (&str, &str) {
    let s = input.trim();
    let cut = s
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_alphabetic())
        .last()
        .map_or(s.len(), |(i, _)| i);
    (s[..cut].trim(), &s[cut..])
}

/// Decimal submultiples divide so that `20um` rounds exactly like `2e-5`.
#[derive(Clone, Copy)]
enum Scale {
    Mul(f64),
    Div(f64),
}

fn parse(input: &str, kind: &str, units: &[(&str, Scale)]) -> Result<f64, String> {
    let (number, suffix) = split(input);
    let scale = if suffix.is_empty() {
        Scale::Mul(1.0)
    } else {
        units
            .iter()
            .find(|(name, _)| *name == suffix)
            .map(|(_, f)| *f)
            .ok_or_else(|| {
                let known: Vec<&str> = units.iter().map(|(n, _)| *n).collect();
                format!("unknown {kind} unit '{suffix}' in '{input}' (expected one of {})", known.join(", "))
            })?
    };
    let value: f64 = number
        .parse()
        .map_err(|_| format!("cannot read a number from '{input}'"))?;
    let si = match scale {
        Scale::Mul(f) => value * f,
        Scale::Div(f) => value / f,
    };
    if si.is_finite() {
        Ok(si)
    } else {
        Err(format!("'{input}' is not finite"))
    }
}

use Scale::{Div, Mul};

const LENGTH: &[(&str, Scale)] = &[
    ("m", Mul(1.0)),
    ("cm", Div(1e2)),
    ("mm", Div(1e3)),
    ("um", Div(1e6)),
    ("μm", Div(1e6)),
    ("nm", Div(1e9)),
];
const TIME: &[(&str, Scale)] = &[("s", Mul(1.0)), ("ms", Div(1e3)), ("us", Div(1e6)), ("μs", Div(1e6))];
const MASS: &[(&str, Scale)] = &[("kg", Mul(1.0)), ("amu", Mul(ATOMIC_MASS_UNIT)), ("u", Mul(ATOMIC_MASS_UNIT))];
const TEMPERATURE: &[(&str, Scale)] = &[
    ("K", Mul(1.0)),
    ("mK", Div(1e3)),
    ("uK", Div(1e6)),
    ("μK", Div(1e6)),
    ("nK", Div(1e9)),
];

/// Length in metres; a bare number is already metres.
pub fn parse_length(s: &str) -> Result<f64, String> {
    parse(s, "length", LENGTH)
}

/// Like [`parse_length`] but the suffix is mandatory.
pub fn parse_length_strict(s: &str) -> Result<f64, String> {
    if split(s).1.is_empty() {
        return Err(format!("length '{s}' needs a unit suffix (m, cm, mm, um, nm)"));
    }
    parse_length(s)
}

/// Time in seconds; a bare number is seconds.
pub fn parse_time(s: &str) -> Result<f64, String> {
    parse(s, "time", TIME)
}

/// Mass in kg; a bare number is kg.
pub fn parse_mass(s: &str) -> Result<f64, String> {
    parse(s, "mass", MASS)
}

/// Temperature in kelvin; a bare number is kelvin.
pub fn parse_temperature(s: &str) -> Result<f64, String> {
    parse(s, "temperature", TEMPERATURE)
}

/// A sweep mass: `2x` multiplies `reference`, otherwise an absolute mass.
pub fn parse_mass_or_factor(s: &str, reference: f64) -> Result<f64, String> {
    match s.trim().strip_suffix('x') {
        Some(factor) => {
            let f: f64 = factor
                .trim()
                .parse()
                .map_err(|_| format!("cannot read a mass factor from '{s}'"))?;
            Ok(f * reference)
        }
        None => parse_mass(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths() {
        assert_eq!(parse_length("1um").unwrap(), 1e-6);
        assert_eq!(parse_length("-1cm").unwrap(), -1e-2);
        assert_eq!(parse_length("50 um").unwrap(), 50e-6);
        assert_eq!(parse_length("2.5mm").unwrap(), 2.5e-3);
        assert_eq!(parse_length("3nm").unwrap(), 3e-9);
        assert_eq!(parse_length("1e-6m").unwrap(), 1e-6);
        assert_eq!(parse_length("0.01").unwrap(), 0.01);
        assert!(parse_length("1km").is_err());
        assert!(parse_length("um").is_err());
        assert!(parse_length("1em").is_err());
        assert!(parse_length_strict("0.01").is_err());
        assert_eq!(parse_length_strict("-1cm").unwrap(), -0.01);
    }

    #[test]
    fn times_masses_temperatures() {
        assert_eq!(parse_time("45ms").unwrap(), 45e-3);
        assert_eq!(parse_time("3us").unwrap(), 3e-6);
        assert!(parse_time("3min").is_err());
        assert_eq!(parse_mass("22.98977amu").unwrap(), 22.98977 * ATOMIC_MASS_UNIT);
        assert_eq!(parse_mass("3.8e-26kg").unwrap(), 3.8e-26);
        assert_eq!(parse_temperature("1uK").unwrap(), 1e-6);
        assert_eq!(parse_mass_or_factor("2x", 3.0).unwrap(), 6.0);
        assert_eq!(parse_mass_or_factor("1kg", 3.0).unwrap(), 1.0);
        assert!(parse_mass_or_factor("yx", 3.0).is_err());
    }
}
