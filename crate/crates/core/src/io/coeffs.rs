//! Line-oriented coefficient dump.
//!
//! ```text
//! # slf-coefficients points=2 channels=3 order=2 scale_theta=4 scale_gamma=3
//! 0 0 a_0 a_1 .. a_{N-1}
//! 0 1 ..
//! ```
//!
//! One record per point and channel: point index, channel, `N` reals.
//! Records may appear in any order; every pair must appear exactly once.

use std::fmt::Write as _;
use std::path::Path;

use crate::basis::BasisSpec;
use crate::error::{Result, SlfError};
use crate::fitting::SlfCoefficients;

const TAG: &str = "slf-coefficients";

pub fn coefficients_to_string(coeffs: &SlfCoefficients, spec: &BasisSpec) -> Result<String> {
    if spec.count() != coeffs.count() {
        return Err(SlfError::invalid(format!(
            "spec has {} members, coefficients have {}",
            spec.count(),
            coeffs.count()
        )));
    }
    let mut s = format!(
        "# {TAG} points={} channels={} order={} scale_theta={} scale_gamma={}\n",
        coeffs.points(),
        coeffs.channels(),
        spec.order,
        spec.scale_theta,
        spec.scale_gamma
    );
    for p in 0..coeffs.points() {
        for ch in 0..coeffs.channels() {
            write!(s, "{p} {ch}").unwrap();
            for v in coeffs.get(p, ch) {
                write!(s, " {v:?}").unwrap();
            }
            s.push('\n');
        }
    }
    Ok(s)
}

fn header_field(fields: &[(&str, &str)], key: &str) -> Result<usize> {
    let (_, v) = fields
        .iter()
        .find(|(k, _)| *k == key)
        .ok_or_else(|| SlfError::Format(format!("coefficient header lacks `{key}`")))?;
    v.parse()
        .map_err(|_| SlfError::Format(format!("coefficient header: bad `{key}` value `{v}`")))
}

pub fn parse_coefficients(text: &str) -> Result<(BasisSpec, SlfCoefficients)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| SlfError::Format("empty coefficient file".into()))?;
    let mut words = header.trim().strip_prefix('#').unwrap_or("").split_whitespace();
    if words.next() != Some(TAG) {
        return Err(SlfError::Format(format!("missing `# {TAG}` header")));
    }
    let fields: Vec<(&str, &str)> = words.filter_map(|w| w.split_once('=')).collect();
    let points = header_field(&fields, "points")?;
    let channels = header_field(&fields, "channels")?;
    let spec = BasisSpec::with_scales(
        header_field(&fields, "order")? as u32,
        header_field(&fields, "scale_theta")? as u32,
        header_field(&fields, "scale_gamma")? as u32,
    )?;
    let n = spec.count();
    if channels == 0 {
        return Err(SlfError::Format("coefficient header: zero channels".into()));
    }

    let mut coeffs = SlfCoefficients::zeros(points, channels, n);
    let mut seen = vec![false; points * channels];
    for (lineno, line) in lines {
        if line.trim_start().starts_with('#') {
            continue;
        }
        let at = |msg: String| SlfError::Format(format!("coefficient line {}: {msg}", lineno + 1));
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != n + 2 {
            return Err(at(format!("expected {} fields, found {}", n + 2, tokens.len())));
        }
        let p: usize = tokens[0].parse().map_err(|_| at(format!("bad point `{}`", tokens[0])))?;
        let ch: usize = tokens[1].parse().map_err(|_| at(format!("bad channel `{}`", tokens[1])))?;
        if p >= points || ch >= channels {
            return Err(at(format!("record ({p}, {ch}) outside {points} x {channels}")));
        }
        if std::mem::replace(&mut seen[p * channels + ch], true) {
            return Err(at(format!("duplicate record ({p}, {ch})")));
        }
        for (slot, t) in coeffs.get_mut(p, ch).iter_mut().zip(&tokens[2..]) {
            *slot = t
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| at(format!("bad number `{t}`")))?;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(SlfError::Format(format!(
            "no record for point {} channel {}",
            missing / channels,
            missing % channels
        )));
    }
    Ok((spec, coeffs))
}

pub fn load_coefficients(path: &Path) -> Result<(BasisSpec, SlfCoefficients)> {
    let text = std::fs::read_to_string(path).map_err(|e| SlfError::from(e).context(path.display()))?;
    parse_coefficients(&text).map_err(|e| e.context(path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (BasisSpec, SlfCoefficients) {
        let spec = BasisSpec::with_scales(1, 1, 1).unwrap();
        let data = (0..2 * 3 * 4).map(|i| (i as f64 - 7.0) / 3.0).collect();
        (spec, SlfCoefficients::from_vec(2, 3, 4, data).unwrap())
    }

    #[test]
    fn round_trip_is_exact() {
        let (spec, c) = sample();
        let text = coefficients_to_string(&c, &spec).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 3);
        assert_eq!(parse_coefficients(&text).unwrap(), (spec, c));
    }

    #[test]
    fn any_record_order() {
        let (spec, c) = sample();
        let text = coefficients_to_string(&c, &spec).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1..].reverse();
        assert_eq!(parse_coefficients(&lines.join("\n")).unwrap().1, c);
    }

    #[test]
    fn rejects_missing_and_duplicate_records() {
        let (spec, c) = sample();
        let text = coefficients_to_string(&c, &spec).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(parse_coefficients(&lines[..6].join("\n")).is_err());
        let dup = format!("{text}{}\n", lines[1]);
        assert!(parse_coefficients(&dup).is_err());
        assert!(parse_coefficients("0 0 1 2 3 4").is_err());
        assert!(coefficients_to_string(&c, &BasisSpec::default()).is_err());
    }
}
