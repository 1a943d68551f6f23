//! Run configuration: flat `key = value` lines grouped under `[section]`
//! headers, `#` starts a comment. Every key must be consumed by the typed
//! parser, so misspelled keys are reported instead of ignored.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use polyfreq_core::C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("missing required field {field}")]
    Missing { field: String },
    #[error("invalid value for {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown field {field} (line {line})")]
    Unknown { field: String, line: usize },
    #[error("unknown experiment '{0}' (see `polyfreq list`)")]
    UnknownExperiment(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn invalid(field: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), reason: reason.to_string() }
}

struct Entry {
    value: String,
    line: usize,
    used: Cell<bool>,
}

/// Key-value pairs keyed by `section.key`; top-level keys have no prefix.
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax { line, reason: "unterminated section header".into() })?
                    .trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    return Err(ConfigError::Syntax { line, reason: format!("bad section name '{name}'") });
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line, reason: "expected key = value".into() })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line, reason: "empty key".into() });
            }
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            let entry = Entry { value: value.trim().to_string(), line, used: Cell::new(false) };
            if entries.insert(full.clone(), entry).is_some() {
                return Err(ConfigError::Syntax { line, reason: format!("{full} given twice") });
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| {
            e.used.set(true);
            e.value.as_str()
        })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key).map(|v| v.parse::<T>().map_err(|e| invalid(key, e))).transpose()
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or_else(|| ConfigError::Missing { field: key.to_string() })
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|v| v.split(',').map(|s| s.trim().parse::<T>().map_err(|e| invalid(key, e))).collect())
            .transpose()
    }

    /// Keys starting with `prefix`, in key order.
    pub fn with_prefix(&self, prefix: &str) -> Vec<(String, String)> {
        self.entries
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .map(|(k, e)| {
                e.used.set(true);
                (k.clone(), e.value.clone())
            })
            .collect()
    }

    pub fn check_all_used(&self) -> Result<(), ConfigError> {
        match self.entries.iter().find(|(_, e)| !e.used.get()) {
            Some((k, e)) => Err(ConfigError::Unknown { field: k.clone(), line: e.line }),
            None => Ok(()),
        }
    }
}

/// `a`, `a+bi`, `a-bi`, `bi`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|e| format!("'{s}': {e}"));
    };
    // split at the last sign that is not an exponent sign or the leading sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let parse = |t: &str| -> Result<f64, String> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|e| format!("'{s}': {e}")),
        }
    };
    match split {
        Some(i) => Ok(C64::new(parse(&body[..i])?, parse(&body[i..])?)),
        None => Ok(C64::new(0.0, parse(body)?)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    AlgebraCheck,
    FieldsCheck,
    Emission,
    TwoPhoton,
    Blackbody,
}

impl Experiment {
    pub const ALL: [Experiment; 5] =
        [Experiment::AlgebraCheck, Experiment::FieldsCheck, Experiment::Emission, Experiment::TwoPhoton, Experiment::Blackbody];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::AlgebraCheck => "algebra-check",
            Experiment::FieldsCheck => "fields-check",
            Experiment::Emission => "emission",
            Experiment::TwoPhoton => "two-photon",
            Experiment::Blackbody => "blackbody",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::AlgebraCheck => "projector-weighted ladder algebra, Heisenberg evolution, multi-oscillator extension",
            Experiment::FieldsCheck => "field operators, energy and momentum identities, [E, B], coherent-state averages",
            Experiment::Emission => "first-order emission, rate ratio for a vacuum profile, multi-oscillator rate factor",
            Experiment::TwoPhoton => "second-order two-quanta amplitudes against the Fock-space oracle, probability factor",
            Experiment::Blackbody => "modified Planck law with a chemical potential, convergence and peak shift",
        }
    }

    pub fn topics(self) -> &'static str {
        match self {
            Experiment::AlgebraCheck => "frequency operator; noncanonical commutators; direct-sum sectors",
            Experiment::FieldsCheck => "mode expansion in a box; coherent states; field commutator",
            Experiment::Emission => "rotating-wave two-level atom; golden rule; vacuum subspace",
            Experiment::TwoPhoton => "second-order perturbation theory; two- and three-oscillator sectors",
            Experiment::Blackbody => "two-index Boltzmann-Gibbs statistics; Lambert series",
        }
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| ConfigError::UnknownExperiment(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModeSpec {
    Cubic { box_length: f64, max_index: u32, count: Option<usize> },
    Shell { box_length: f64, omega_min: f64, omega_max: f64 },
    /// Lines of the mode-set text format, given inline or in a file.
    Listed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeConfig {
    pub spec: ModeSpec,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightsConfig {
    Canonical,
    Ones,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhiConfig {
    /// `sqrt(F(w))`, normalized over the modes in use.
    Profile,
    Explicit(Vec<C64>),
    /// Seeded random amplitudes.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VacuumConfig {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
    pub phi: PhiConfig,
    pub p: Vec<f64>,
    /// Modes nearest the transition used in the multi-oscillator emission.
    pub modes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    ThreeLevel,
    FourLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomConfig {
    pub omega0: f64,
    pub dipole: f64,
    pub orientation: [C64; 3],
    pub fixture: Fixture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalConfig {
    pub beta: f64,
    /// In units of `k_B T`, largest first.
    pub mu: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub visibility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub eta: f64,
    pub t: f64,
    pub min_lobe_frequencies: usize,
    pub rate_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldsConfig {
    pub points: usize,
    pub alpha: f64,
    pub coherent_n_max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub modes: ModeConfig,
    pub n_max: usize,
    pub max_sector: usize,
    pub weights: WeightsConfig,
    pub vacuum: VacuumConfig,
    pub atom: AtomConfig,
    pub thermal: ThermalConfig,
    pub tolerances: Tolerances,
    pub fields: FieldsConfig,
}

const TWO_PHOTON_MODES: &str = "s=+1 kx=0 ky=0 kz=0.9\ns=-1 kx=0.5 ky=0 kz=0.6\ns=+1 kx=0 ky=1.2 kz=0.1\n";

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, "must be positive and finite"))
    }
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig, base_dir: &Path) -> Result<Self, ConfigError> {
        let experiment: Experiment = raw.require::<String>("experiment")?.parse()?;
        let seed = raw.or("seed", 0u64)?;
        let output = raw.get::<String>("output")?.map(|p| base_dir.join(p));

        let modes = Self::modes(raw, experiment, base_dir)?;
        let needs_truncation = matches!(experiment, Experiment::AlgebraCheck | Experiment::FieldsCheck);
        let n_max = if needs_truncation { raw.require("truncation.n_max")? } else { raw.or("truncation.n_max", 2)? };
        if n_max == 0 {
            return Err(invalid("truncation.n_max", "must be at least 1"));
        }
        let max_sector = raw.or("truncation.max_sector", 3usize)?;
        if max_sector == 0 {
            return Err(invalid("truncation.max_sector", "must be at least 1"));
        }

        let weights = match raw.or("weights.kind", String::from("canonical"))?.as_str() {
            "canonical" => WeightsConfig::Canonical,
            "ones" => WeightsConfig::Ones,
            "explicit" => {
                let values: Vec<f64> = raw.list("weights.values")?.ok_or_else(|| ConfigError::Missing { field: "weights.values".into() })?;
                if values.len() < max_sector {
                    return Err(invalid("weights.values", format!("needs {max_sector} entries, one per sector")));
                }
                WeightsConfig::Explicit(values)
            }
            other => return Err(invalid("weights.kind", format!("'{other}' is not canonical, ones or explicit"))),
        };

        let phi = match raw.raw("vacuum.phi") {
            None | Some("profile") => PhiConfig::Profile,
            Some("random") => PhiConfig::Random,
            Some(list) => PhiConfig::Explicit(
                list.split(',').map(|s| parse_complex(s.trim()).map_err(|e| invalid("vacuum.phi", e))).collect::<Result<_, _>>()?,
            ),
        };
        let vacuum = VacuumConfig {
            center: raw.or("vacuum.center", 1.0)?,
            width: positive("vacuum.width", raw.or("vacuum.width", 0.1)?)?,
            amplitude: positive("vacuum.amplitude", raw.or("vacuum.amplitude", 0.25)?)?,
            phi,
            p: raw.list("vacuum.p")?.unwrap_or_else(|| vec![0.2, 0.5, 0.3]),
            modes: raw.or("vacuum.modes", 3usize)?,
        };
        if vacuum.p.len() > max_sector {
            return Err(invalid("vacuum.p", format!("has {} sectors but truncation.max_sector = {max_sector}", vacuum.p.len())));
        }

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let orientation = match raw.raw("atom.orientation") {
            None => [C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)],
            Some(list) => {
                let v: Vec<C64> =
                    list.split(',').map(|c| parse_complex(c.trim()).map_err(|e| invalid("atom.orientation", e))).collect::<Result<_, _>>()?;
                <[C64; 3]>::try_from(v).map_err(|_| invalid("atom.orientation", "needs three components"))?
            }
        };
        let fixture = match raw.or("atom.fixture", String::from("three-level"))?.as_str() {
            "three-level" => Fixture::ThreeLevel,
            "four-level" => Fixture::FourLevel,
            other => return Err(invalid("atom.fixture", format!("'{other}' is not three-level or four-level"))),
        };
        let atom = AtomConfig {
            omega0: positive("atom.omega0", raw.or("atom.omega0", 1.0)?)?,
            dipole: positive("atom.dipole", raw.or("atom.dipole", 0.05)?)?,
            orientation,
            fixture,
        };

        let thermal = ThermalConfig {
            beta: positive("thermal.beta", raw.or("thermal.beta", 1.0)?)?,
            mu: raw.list("thermal.mu")?.unwrap_or_else(|| vec![0.0, -0.8, -3.0, -10.0]),
            x_min: positive("thermal.x_min", raw.or("thermal.x_min", 0.01)?)?,
            x_max: positive("thermal.x_max", raw.or("thermal.x_max", 10.0)?)?,
            points: raw.or("thermal.points", 200usize)?,
            visibility: positive("thermal.visibility", raw.or("thermal.visibility", 0.01)?)?,
        };
        if thermal.mu.iter().any(|&m| m > 0.0 || !m.is_finite()) {
            return Err(invalid("thermal.mu", "chemical potentials must be finite and not positive"));
        }
        if thermal.mu.windows(2).any(|w| w[1] > w[0]) {
            return Err(invalid("thermal.mu", "list must run from largest to smallest"));
        }
        if thermal.x_max <= thermal.x_min || thermal.points < 2 {
            return Err(invalid("thermal", "grid needs x_min < x_max and at least two points"));
        }

        let default_t = match experiment {
            Experiment::Emission => 400.0,
            _ => 30.0,
        };
        let tolerances = Tolerances {
            rel_tol: raw.or("tolerances.rel_tol", 1e-12)?,
            eta: positive("tolerances.eta", raw.or("tolerances.eta", 1e-6)?)?,
            t: positive("tolerances.t", raw.or("tolerances.t", default_t)?)?,
            min_lobe_frequencies: raw.or("tolerances.min_lobe_frequencies", 8usize)?,
            rate_ratio: positive("tolerances.rate_ratio", raw.or("tolerances.rate_ratio", 0.02)?)?,
        };
        if !(tolerances.rel_tol > 0.0 && tolerances.rel_tol <= 1e-6) {
            return Err(invalid("tolerances.rel_tol", "must lie in (0, 1e-6]"));
        }

        let fields = FieldsConfig {
            points: raw.or("fields.points", 3usize)?,
            alpha: raw.or("fields.alpha", 0.8)?,
            coherent_n_max: raw.or("fields.coherent_n_max", 20usize)?,
        };
        if fields.points < 3 {
            return Err(invalid("fields.points", "at least three spacetime points are needed"));
        }
        if !(fields.alpha > 0.0 && fields.alpha <= 1.0) {
            return Err(invalid("fields.alpha", "must lie in (0, 1]"));
        }

        raw.check_all_used()?;
        Ok(RunConfig { experiment, seed, output, modes, n_max, max_sector, weights, vacuum, atom, thermal, tolerances, fields })
    }

    fn modes(raw: &RawConfig, experiment: Experiment, base_dir: &Path) -> Result<ModeConfig, ConfigError> {
        let default_kind = match experiment {
            Experiment::Emission => "shell",
            Experiment::TwoPhoton => "list",
            _ => "cubic",
        };
        let two_pi = 2.0 * std::f64::consts::PI;
        let spec = match raw.or("modes.kind", String::from(default_kind))?.as_str() {
            "cubic" => ModeSpec::Cubic {
                box_length: positive("modes.box_length", raw.or("modes.box_length", two_pi)?)?,
                max_index: raw.or("modes.max_index", 1u32)?,
                count: match raw.get::<usize>("modes.count")? {
                    Some(c) => Some(c),
                    None if experiment == Experiment::FieldsCheck => Some(3),
                    None => Some(2),
                },
            },
            "shell" => ModeSpec::Shell {
                box_length: positive("modes.box_length", raw.or("modes.box_length", two_pi * 20.0)?)?,
                omega_min: raw.or("modes.omega_min", 0.8)?,
                omega_max: raw.or("modes.omega_max", 1.2)?,
            },
            "list" => {
                let mut lines = raw.with_prefix("modes.mode");
                let order = |k: &str| k["modes.mode".len()..].parse::<usize>().map_err(|_| invalid(k, "mode keys are mode1, mode2, ..."));
                for (k, _) in &lines {
                    order(k)?;
                }
                lines.sort_by_key(|(k, _)| order(k).unwrap_or(0));
                if !lines.is_empty() {
                    ModeSpec::Listed(lines.into_iter().map(|(_, v)| v + "\n").collect())
                } else if let Some(file) = raw.get::<String>("modes.file")? {
                    let path = base_dir.join(file);
                    let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io { path, source })?;
                    ModeSpec::Listed(text)
                } else if experiment == Experiment::TwoPhoton {
                    ModeSpec::Listed(TWO_PHOTON_MODES.to_string())
                } else {
                    return Err(ConfigError::Missing { field: "modes.mode1 or modes.file".into() });
                }
            }
            other => return Err(invalid("modes.kind", format!("'{other}' is not cubic, shell or list"))),
        };
        let default_volume = if experiment == Experiment::TwoPhoton { 4.0 } else { 1.0 };
        let volume = positive("modes.volume", raw.or("modes.volume", default_volume)?)?;
        Ok(ModeConfig { spec, volume })
    }
}
