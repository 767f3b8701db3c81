//! Parsers for numeric flag values.

use std::f64::consts::PI;

use latticespread::model::Polarization;

/// Parses `0.3pi`, `0.3*pi`, `pi`, `-pi/2` style values or plain numbers.
pub fn angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    let (body, div) = match t.split_once('/') {
        Some((b, d)) => (b.to_string(), d.parse::<f64>().map_err(|_| format!("bad divisor in `{s}`"))?),
        None => (t.clone(), 1.0),
    };
    let v = if let Some(c) = body.strip_suffix("pi") {
        let c = c.strip_suffix('*').unwrap_or(c);
        match c {
            "" | "+" => PI,
            "-" => -PI,
            _ => c.parse::<f64>().map_err(|_| format!("cannot parse `{s}`"))? * PI,
        }
    } else {
        body.parse::<f64>().map_err(|_| format!("cannot parse `{s}`"))?
    };
    let v = v / div;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// `x`, `y`, `z`, `THETA,PHI` (spherical angles) or `X,Y,Z` (real components).
pub fn polarization(s: &str) -> Result<Polarization, String> {
    match s.trim() {
        "x" => return Ok(Polarization::x()),
        "y" => return Ok(Polarization::y()),
        "z" => return Ok(Polarization::z()),
        _ => {}
    }
    let parts = s.split(',').map(angle).collect::<Result<Vec<_>, _>>()?;
    match parts[..] {
        [theta, phi] => Ok(Polarization::spherical(theta, phi)),
        [x, y, z] => Polarization::real(x, y, z).map_err(|e| e.to_string()),
        _ => Err(format!("polarization `{s}` must be x, y, z, THETA,PHI or X,Y,Z")),
    }
}
