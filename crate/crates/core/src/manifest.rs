//! Flat `key = value` documents with `[section]` headers, used for benchmark
//! configs and for the run manifests written next to every output.
//!
//! Lines starting with `#` are comments. Values run to the end of the line.
//! There is no nesting and no quoting.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const TOOL_NAME: &str = "cellcode";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Section {
    pub name: String,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push(Entry {
            key: key.into(),
            value: value.to_string(),
            line: 0,
        });
        self
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KvDocument {
    pub sections: Vec<Section>,
}

impl KvDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = KvDocument::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                    line,
                    message: format!("unterminated section header `{trimmed}`"),
                })?;
                let name = name.trim();
                if doc.section(name).is_some() {
                    return Err(Error::Config {
                        line,
                        message: format!("section [{name}] appears twice"),
                    });
                }
                doc.sections.push(Section::new(name));
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, found `{trimmed}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config {
                    line,
                    message: "empty key".into(),
                });
            }
            if doc.sections.is_empty() {
                doc.sections.push(Section::new(""));
            }
            let section = doc.sections.last_mut().unwrap();
            if section.get(key).is_some() {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key `{key}` in [{}]", section.name),
                });
            }
            section.entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line,
            });
        }
        Ok(doc)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, section) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            if !section.name.is_empty() {
                let _ = writeln!(out, "[{}]", section.name);
            }
            for e in &section.entries {
                let _ = writeln!(out, "{} = {}", e.key, e.value);
            }
        }
        out
    }
}

/// Everything needed to reproduce one invocation: the subcommand, every
/// resolved parameter (defaults included), inputs, outputs and seeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: Section,
    pub inputs: Section,
    pub outputs: Section,
    pub seeds: Vec<u64>,
}

impl RunManifest {
    pub fn new(subcommand: impl Into<String>) -> Self {
        Self {
            subcommand: subcommand.into(),
            params: Section::new("params"),
            inputs: Section::new("inputs"),
            outputs: Section::new("outputs"),
            seeds: Vec::new(),
        }
    }

    pub fn run_section(&self) -> Section {
        let mut run = Section::new("run");
        run.push("subcommand", &self.subcommand)
            .push("tool", TOOL_NAME)
            .push("version", TOOL_VERSION)
            .push("seeds", join(&self.seeds));
        run
    }

    pub fn to_document(&self) -> KvDocument {
        KvDocument {
            sections: vec![
                self.run_section(),
                self.params.clone(),
                self.inputs.clone(),
                self.outputs.clone(),
            ],
        }
    }

    pub fn render(&self) -> String {
        format!("# {TOOL_NAME} run manifest\n{}", self.to_document().render())
    }
}

pub(crate) fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}
