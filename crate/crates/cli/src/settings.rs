//! Flat `key = value` run configuration. Command-line flags override values
//! from the file; every resolved value is echoed back next to the outputs.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use geodist::{Error, Result};

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(Error::Format(format!("config line {}: empty key", n + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Format(format!("config line {}: duplicate key {key:?}", n + 1)));
        }
    }
    Ok(map)
}

/// Resolves one subcommand's settings and records them for the echo.
pub struct Settings {
    command: &'static str,
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
    notes: Vec<String>,
}

impl Settings {
    pub fn new(command: &'static str, config: Option<&Path>) -> Result<Self> {
        let mut file = match config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        if let Some(c) = file.remove("command") {
            if c != command {
                return Err(Error::InvalidArgument(format!(
                    "config was written for `{c}`, not `{command}`"
                )));
            }
        }
        Ok(Settings {
            command,
            file,
            resolved: BTreeMap::new(),
            notes: Vec::new(),
        })
    }

    fn lookup<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let from_file = self.file.remove(key);
        let value = match flag {
            Some(v) => Some(v),
            None => match from_file {
                Some(raw) => Some(
                    raw.parse::<T>()
                        .map_err(|e| Error::InvalidArgument(format!("config key {key}: {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.lookup(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.resolved.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn require<T>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.lookup(key, flag)?
            .ok_or_else(|| Error::InvalidArgument(format!("missing required setting `{key}`")))
    }

    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.lookup(key, flag)
    }

    /// Fails on config keys this command does not understand.
    pub fn finish(&self) -> Result<()> {
        match self.file.keys().next() {
            Some(k) => Err(Error::InvalidArgument(format!(
                "unknown config key `{k}` for `{}`",
                self.command
            ))),
            None => Ok(()),
        }
    }

    pub fn echo(&self) -> String {
        let mut s = format!("# geodist {} resolved config\ncommand = {}\n", geodist::VERSION, self.command);
        for (k, v) in &self.resolved {
            s.push_str(&format!("{k} = {v}\n"));
        }
        for n in &self.notes {
            s.push_str(n);
            s.push('\n');
        }
        s
    }

    /// Records a value derived from the resolved settings as a comment.
    pub fn note(&mut self, key: &str, value: impl Display) {
        self.notes.push(format!("# {key} = {value}"));
    }

    pub fn write_echo(&self, path: &Path) -> Result<()> {
        fs::write(path, self.echo())?;
        log::info!("config written to {}", path.display());
        Ok(())
    }
}

/// A comma-separated list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct List(pub Vec<String>);

impl FromStr for List {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let items: Vec<String> = s.split(',').map(|x| x.trim().to_string()).collect();
        if items.iter().any(|x| x.is_empty()) {
            return Err(format!("empty item in list {s:?}"));
        }
        Ok(List(items))
    }
}

impl Display for List {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0.join(","))
    }
}

/// Exactly two distinct regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair(pub String, pub String);

impl FromStr for Pair {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.split(',').map(str::trim).collect::<Vec<_>>()[..] {
            [a, b] if !a.is_empty() && !b.is_empty() && a != b => Ok(Pair(a.into(), b.into())),
            _ => Err(format!("expected two different regions like US,UK, got {s:?}")),
        }
    }
}

impl Display for Pair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.0, self.1)
    }
}

/// Path that displays and parses losslessly for the echo.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilePath(pub PathBuf);

impl FromStr for FilePath {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.is_empty() {
            return Err("empty path".into());
        }
        Ok(FilePath(PathBuf::from(s)))
    }
}

impl Display for FilePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0.display())
    }
}
