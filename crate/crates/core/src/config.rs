//! Plain-text run configuration: `key = value` lines grouped under optional
//! `[section]` headers, plus parsers for the small value grammars used on
//! the command line (mesh lists, numbers with fractions).

use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line number, 0 when the input is not line oriented.
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(message: impl Into<String>) -> Self {
        ParseError {
            line: 0,
            message: message.into(),
        }
    }

    fn at(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            f.write_str(&self.message)
        }
    }
}

impl std::error::Error for ParseError {}

/// Parsed configuration file. Keys outside any section live in section `""`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut cfg = ConfigFile::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ParseError::at(line_no, "unterminated section header"))?
                    .trim();
                if !valid_name(name) {
                    return Err(ParseError::at(line_no, format!("bad section name '{name}'")));
                }
                section = name.to_string();
                cfg.sections.entry(section.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ParseError::at(line_no, "expected key = value"))?;
            let key = key.trim();
            if !valid_name(key) {
                return Err(ParseError::at(line_no, format!("bad key '{key}'")));
            }
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            let entries = cfg.sections.entry(section.clone()).or_default();
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ParseError::at(line_no, format!("duplicate key '{key}'")));
            }
        }
        Ok(cfg)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn sections(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(String::as_str)
    }

    pub fn entries(&self, section: &str) -> impl Iterator<Item = (&str, &str)> {
        self.sections
            .get(section)
            .into_iter()
            .flat_map(|m| m.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    pub fn is_empty(&self) -> bool {
        self.sections.values().all(BTreeMap::is_empty)
    }
}

/// Parses a number given either as a decimal (`0.01`, `1e-3`) or as a
/// fraction `p/q`.
pub fn parse_number(s: &str) -> Result<f64, ParseError> {
    let s = s.trim();
    let v = if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| ParseError::new(format!("bad numerator in '{s}'")))?;
        let q: f64 = q
            .trim()
            .parse()
            .map_err(|_| ParseError::new(format!("bad denominator in '{s}'")))?;
        if q == 0.0 {
            return Err(ParseError::new(format!("zero denominator in '{s}'")));
        }
        p / q
    } else {
        s.parse()
            .map_err(|_| ParseError::new(format!("bad number '{s}'")))?
    };
    if !v.is_finite() {
        return Err(ParseError::new(format!("non-finite number '{s}'")));
    }
    Ok(v)
}

/// Parses a positive number.
pub fn parse_positive(s: &str) -> Result<f64, ParseError> {
    let v = parse_number(s)?;
    if v <= 0.0 {
        return Err(ParseError::new(format!("expected a positive value, got '{s}'")));
    }
    Ok(v)
}

/// Parses a comma-separated list of mesh sizes into inverse spacings
/// `1/h`. Entries may be given as the inverse directly (`100`), as a unit
/// fraction (`1/100`) or as a decimal spacing (`0.01`).
pub fn parse_mesh_list(s: &str) -> Result<Vec<usize>, ParseError> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(ParseError::new("empty entry in mesh list"));
        }
        let inv = if let Ok(k) = item.parse::<u64>() {
            k as f64
        } else {
            1.0 / parse_positive(item)?
        };
        let k = inv.round();
        if (inv - k).abs() > 1e-9 * k.max(1.0) || !(1.0..=(1u64 << 24) as f64).contains(&k) {
            return Err(ParseError::new(format!(
                "mesh size '{item}' is not 1/k for a whole k in range"
            )));
        }
        out.push(k as usize);
    }
    Ok(out)
}
