//! Run configuration for the command-line tool.
//!
//! Settings come from three places, highest precedence first: command-line
//! flags, an optional `key=value` file, and (for the seed only) the
//! `UIDFORGE_SEED` environment variable. Keys use the flag spelling without
//! the leading dashes, e.g. `prior-shape=2`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::card_ledger::IssuancePolicy;
use crate::demography::AgeAxis;
use crate::error::{Error, Result};

pub const SEED_ENV: &str = "UIDFORGE_SEED";

pub const DEFAULT_YEAR: i32 = 2011;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_PROPOSAL_SCALE: f64 = 0.7;

pub type Settings = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Project,
    Demand,
    Coverage,
    Estimate,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommandKind::Project => "project",
            CommandKind::Demand => "demand",
            CommandKind::Coverage => "coverage",
            CommandKind::Estimate => "estimate",
        })
    }
}

/// Parses `key=value` lines. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse_settings(text: &str, origin: &Path) -> Result<Settings> {
    let mut out = Settings::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: origin.to_path_buf(),
            line: i as u64 + 1,
            message: format!("expected key=value, found {line:?}"),
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn load_settings(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_settings(&text, path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub horizon: usize,
    pub seed: u64,
    pub issuance_policy: IssuancePolicy,
    pub year: i32,
    pub axis: AgeAxis,
    pub population: Option<PathBuf>,
    pub survival: Option<PathBuf>,
    pub fertility: Option<PathBuf>,
    pub flows: Option<PathBuf>,
    pub unknown_age: Option<PathBuf>,
    pub houseless_profile: Option<PathBuf>,
    pub observations: Option<PathBuf>,
    pub output: PathBuf,
    pub omission_per_1000: f64,
    pub houseless_rural: f64,
    pub houseless_urban: f64,
    pub prior_shape: f64,
    pub prior_rate: f64,
    pub samples: usize,
    pub proposal_scale: f64,
}

struct Merged<'a> {
    flags: &'a Settings,
    file: &'a Settings,
}

impl Merged<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.flags
            .get(key)
            .or_else(|| self.file.get(key))
            .map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("invalid value {v:?} for {key}"))),
        }
    }

    fn required<T: FromStr>(&self, key: &str, command: CommandKind) -> Result<T> {
        self.parsed(key)?
            .ok_or_else(|| Error::Config(format!("{command} requires --{key}")))
    }

    fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        match self.raw(key) {
            None => Ok(None),
            Some("") => Err(Error::Config(format!("--{key} must not be empty"))),
            Some(v) => Ok(Some(PathBuf::from(v))),
        }
    }

    fn required_path(&self, key: &str, command: CommandKind) -> Result<PathBuf> {
        self.path(key)?
            .ok_or_else(|| Error::Config(format!("{command} requires --{key}")))
    }
}

impl RunConfig {
    /// Merges flag and file settings for `command` and checks that every
    /// input the command needs is present.
    pub fn resolve(
        command: CommandKind,
        flags: &Settings,
        file: &Settings,
        env_seed: Option<&str>,
    ) -> Result<Self> {
        let m = Merged { flags, file };
        let seed = match m.parsed::<u64>("seed")? {
            Some(s) => s,
            None => match env_seed {
                Some(v) => v.trim().parse().map_err(|_| {
                    Error::Config(format!("invalid {SEED_ENV} value {v:?}"))
                })?,
                None => DEFAULT_SEED,
            },
        };
        let max_age = m.parsed::<usize>("max-age")?.unwrap_or(AgeAxis::DEFAULT_MAX_AGE);
        let axis = AgeAxis::new(max_age).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = RunConfig {
            command,
            horizon: 0,
            seed,
            issuance_policy: m
                .raw("policy")
                .map(|p| p.parse().map_err(|e: Error| Error::Config(e.to_string())))
                .transpose()?
                .unwrap_or_default(),
            year: m.parsed("year")?.unwrap_or(DEFAULT_YEAR),
            axis,
            population: m.path("population")?,
            survival: m.path("survival")?,
            fertility: m.path("fertility")?,
            flows: m.path("flows")?,
            unknown_age: m.path("unknown-age")?,
            houseless_profile: m.path("houseless-profile")?,
            observations: m.path("observations")?,
            output: m.required_path("out", command)?,
            omission_per_1000: m.parsed("omission")?.unwrap_or(0.0),
            houseless_rural: m.parsed("houseless-rural")?.unwrap_or(0.0),
            houseless_urban: m.parsed("houseless-urban")?.unwrap_or(0.0),
            prior_shape: 0.0,
            prior_rate: 0.0,
            samples: 0,
            proposal_scale: m.parsed("proposal-scale")?.unwrap_or(DEFAULT_PROPOSAL_SCALE),
        };
        match command {
            CommandKind::Project | CommandKind::Demand => {
                cfg.horizon = m.required("horizon", command)?;
                m.required_path("population", command)?;
                m.required_path("survival", command)?;
                m.required_path("fertility", command)?;
                if command == CommandKind::Demand {
                    m.required_path("flows", command)?;
                    if cfg.horizon < 1 {
                        return Err(Error::Config("demand requires --horizon >= 1".into()));
                    }
                }
            }
            CommandKind::Coverage => {
                m.required_path("population", command)?;
                if cfg.houseless_rural + cfg.houseless_urban > 0.0 && cfg.houseless_profile.is_none()
                {
                    return Err(Error::Config(
                        "houseless counts require --houseless-profile".into(),
                    ));
                }
            }
            CommandKind::Estimate => {
                m.required_path("observations", command)?;
                cfg.prior_shape = m.required("prior-shape", command)?;
                cfg.prior_rate = m.required("prior-rate", command)?;
                cfg.samples = m.required("samples", command)?;
            }
        }
        Ok(cfg)
    }

    /// An input path the command was validated to have.
    pub fn input(&self, path: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
        path.clone()
            .ok_or_else(|| Error::Config(format!("{} requires --{key}", self.command)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(pairs: &[(&str, &str)]) -> Settings {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn parses_key_value_text() {
        let s = parse_settings("# comment\nhorizon = 5\n\nout=dir\n", Path::new("x.conf")).unwrap();
        assert_eq!(s["horizon"], "5");
        assert_eq!(s["out"], "dir");
        let err = parse_settings("horizon 5\n", Path::new("x.conf")).unwrap_err();
        assert!(err.to_string().contains("x.conf:1"));
    }

    #[test]
    fn flags_override_file() {
        let file = settings(&[
            ("observations", "obs.csv"),
            ("prior-shape", "1"),
            ("prior-rate", "1"),
            ("samples", "10"),
            ("seed", "5"),
            ("out", "a"),
        ]);
        let flags = settings(&[("samples", "20"), ("out", "b")]);
        let cfg = RunConfig::resolve(CommandKind::Estimate, &flags, &file, Some("9")).unwrap();
        assert_eq!(cfg.samples, 20);
        assert_eq!(cfg.output, PathBuf::from("b"));
        assert_eq!(cfg.seed, 5);
    }

    #[test]
    fn env_seed_is_fallback() {
        let flags = settings(&[
            ("observations", "obs.csv"),
            ("prior-shape", "1"),
            ("prior-rate", "1"),
            ("samples", "10"),
            ("out", "o"),
        ]);
        let cfg =
            RunConfig::resolve(CommandKind::Estimate, &flags, &Settings::new(), Some("42")).unwrap();
        assert_eq!(cfg.seed, 42);
        let cfg = RunConfig::resolve(CommandKind::Estimate, &flags, &Settings::new(), None).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert!(RunConfig::resolve(CommandKind::Estimate, &flags, &Settings::new(), Some("x")).is_err());
    }

    #[test]
    fn missing_inputs_are_reported() {
        let flags = settings(&[("population", "p.csv"), ("out", "o"), ("horizon", "3")]);
        let err = RunConfig::resolve(CommandKind::Project, &flags, &Settings::new(), None).unwrap_err();
        assert!(err.to_string().contains("--survival"), "{err}");
        let flags = settings(&[("population", ""), ("out", "o")]);
        assert!(RunConfig::resolve(CommandKind::Coverage, &flags, &Settings::new(), None).is_err());
    }

    #[test]
    fn policy_parsed() {
        let flags = settings(&[
            ("population", "p"),
            ("survival", "s"),
            ("fertility", "f"),
            ("flows", "fl"),
            ("horizon", "2"),
            ("out", "o"),
            ("policy", "at-age-one"),
        ]);
        let cfg = RunConfig::resolve(CommandKind::Demand, &flags, &Settings::new(), None).unwrap();
        assert_eq!(cfg.issuance_policy, IssuancePolicy::AtAgeOne);
    }
}
