//! Ordered predicate signatures.
//!
//! The position of a unary predicate is the label component it occupies in
//! an encoded graph; the position of a binary predicate is its edge colour.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Returns true if `name` can be used as a predicate or constant name.
pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ','))
}

pub(crate) fn check_name(name: &str) -> Result<()> {
    if is_valid_name(name) {
        Ok(())
    } else {
        Err(Error::InvalidName(name.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSignature", into = "RawSignature")]
pub struct Signature {
    unary: Vec<String>,
    binary: Vec<String>,
    unary_index: HashMap<String, usize>,
    binary_index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct RawSignature {
    unary: Vec<String>,
    binary: Vec<String>,
}

impl TryFrom<RawSignature> for Signature {
    type Error = Error;

    fn try_from(raw: RawSignature) -> Result<Self> {
        Signature::new(raw.unary, raw.binary)
    }
}

impl From<Signature> for RawSignature {
    fn from(sig: Signature) -> Self {
        RawSignature {
            unary: sig.unary,
            binary: sig.binary,
        }
    }
}

impl Signature {
    pub fn new<U, B>(unary: U, binary: B) -> Result<Self>
    where
        U: IntoIterator,
        U::Item: Into<String>,
        B: IntoIterator,
        B::Item: Into<String>,
    {
        let unary: Vec<String> = unary.into_iter().map(Into::into).collect();
        let binary: Vec<String> = binary.into_iter().map(Into::into).collect();
        if unary.is_empty() {
            return Err(Error::InvalidSignature(
                "at least one unary predicate is required".into(),
            ));
        }
        let mut unary_index = HashMap::new();
        let mut binary_index = HashMap::new();
        for (i, name) in unary.iter().enumerate() {
            check_name(name)?;
            if unary_index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidSignature(format!("duplicate predicate `{name}`")));
            }
        }
        for (i, name) in binary.iter().enumerate() {
            check_name(name)?;
            if unary_index.contains_key(name) || binary_index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidSignature(format!("duplicate predicate `{name}`")));
            }
        }
        Ok(Signature {
            unary,
            binary,
            unary_index,
            binary_index,
        })
    }

    /// Number of unary predicates, i.e. the label dimension.
    pub fn delta(&self) -> usize {
        self.unary.len()
    }

    /// Number of binary predicates, i.e. edge colours.
    pub fn colours(&self) -> usize {
        self.binary.len()
    }

    pub fn unary(&self) -> &[String] {
        &self.unary
    }

    pub fn binary(&self) -> &[String] {
        &self.binary
    }

    pub fn unary_index(&self, name: &str) -> Option<usize> {
        self.unary_index.get(name).copied()
    }

    pub fn binary_index(&self, name: &str) -> Option<usize> {
        self.binary_index.get(name).copied()
    }

    /// Parses the signature file format: a `unary:` section followed by a
    /// `binary:` section, one name per line, `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Unary,
            Binary,
        }
        let mut section = Section::None;
        let mut unary = Vec::new();
        let mut binary = Vec::new();
        let mut seen_binary = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let line_no = i + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "unary:" => {
                    if section != Section::None {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "`unary:` must be the first section".into(),
                        });
                    }
                    section = Section::Unary;
                }
                "binary:" => {
                    if section != Section::Unary || seen_binary {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "`binary:` must follow the `unary:` section".into(),
                        });
                    }
                    seen_binary = true;
                    section = Section::Binary;
                }
                name => {
                    if !is_valid_name(name) {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("invalid predicate name `{name}`"),
                        });
                    }
                    match section {
                        Section::None => {
                            return Err(Error::Parse {
                                line: line_no,
                                message: "predicate listed before any section header".into(),
                            })
                        }
                        Section::Unary => unary.push(name.to_string()),
                        Section::Binary => binary.push(name.to_string()),
                    }
                }
            }
        }
        if section == Section::None {
            return Err(Error::Parse {
                line: 0,
                message: "missing `unary:` section".into(),
            });
        }
        Signature::new(unary, binary)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "unary:")?;
        for name in &self.unary {
            writeln!(f, "{name}")?;
        }
        writeln!(f, "binary:")?;
        for name in &self.binary {
            writeln!(f, "{name}")?;
        }
        Ok(())
    }
}
