//! Mode sets as text, one mode per line:
//! `s=+1 kx=0 ky=0 kz=1 omega=1`. `omega` is optional on input and must
//! match `c |kappa|` when present.

use std::fmt::Write;

use polyfreq_core::{Constants, Helicity, Mode, ModeSet};

use crate::config::ConfigError;

pub fn format_modes(ms: &ModeSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} modes, volume = {}", ms.len(), ms.volume());
    for m in ms.modes() {
        let s = match m.helicity {
            Helicity::Plus => "+1",
            Helicity::Minus => "-1",
        };
        let [x, y, z] = m.kappa;
        let _ = writeln!(out, "s={s} kx={x} ky={y} kz={z} omega={}", m.omega);
    }
    out
}

fn bad(line: usize, reason: impl Into<String>) -> ConfigError {
    ConfigError::Syntax { line, reason: reason.into() }
}

pub fn parse_modes(text: &str, volume: f64, constants: Constants) -> Result<ModeSet, ConfigError> {
    let mut modes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (mut s, mut k, mut omega) = (None, [None; 3], None);
        for field in content.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| bad(line, format!("'{field}' is not key=value")))?;
            let num = || value.parse::<f64>().map_err(|e| bad(line, format!("{key}: {e}")));
            match key {
                "s" => {
                    s = Some(match value {
                        "+1" | "1" | "+" => Helicity::Plus,
                        "-1" | "-" => Helicity::Minus,
                        _ => return Err(bad(line, format!("helicity '{value}' is not +1 or -1"))),
                    })
                }
                "kx" => k[0] = Some(num()?),
                "ky" => k[1] = Some(num()?),
                "kz" => k[2] = Some(num()?),
                "omega" => omega = Some(num()?),
                _ => return Err(bad(line, format!("unknown key '{key}'"))),
            }
        }
        let s = s.ok_or_else(|| bad(line, "missing s"))?;
        let kappa = [
            k[0].ok_or_else(|| bad(line, "missing kx"))?,
            k[1].ok_or_else(|| bad(line, "missing ky"))?,
            k[2].ok_or_else(|| bad(line, "missing kz"))?,
        ];
        let mode = Mode::new(s, kappa, constants.c_light).map_err(|e| bad(line, e.to_string()))?;
        if let Some(w) = omega {
            if (w - mode.omega).abs() > 1e-12 * mode.omega.max(1.0) {
                return Err(bad(line, format!("omega = {w} but c |kappa| = {}", mode.omega)));
            }
        }
        modes.push(mode);
    }
    ModeSet::new(modes, volume, constants).map_err(|e| ConfigError::Invalid { field: "modes".into(), reason: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let ms = ModeSet::cubic(2.0 * std::f64::consts::PI, 1, 3.0, Constants::default()).unwrap();
        let back = parse_modes(&format_modes(&ms), 3.0, Constants::default()).unwrap();
        assert_eq!(back.modes(), ms.modes());
    }

    #[test]
    fn inconsistent_omega_rejected() {
        let err = parse_modes("s=+1 kx=0 ky=0 kz=1 omega=2\n", 1.0, Constants::default()).unwrap_err();
        assert!(err.to_string().contains("line 1"));
        assert!(parse_modes("s=+1 kx=0 ky=0 kz=0\n", 1.0, Constants::default()).is_err());
        assert!(parse_modes("s=+1 kx=0 ky=0 kz=1\ns=+1 kx=0 ky=0 kz=1\n", 1.0, Constants::default()).is_err());
    }
}
