//! Fixture-replay chat backend: a pure function from [`FixtureKey`] to text.
//!
//! Fixture files hold one object:
//!
//! ```json
//! {"entries": {"12-0:0:think": "I should head for the stairs.",
//!              "12-0:0:act": "Action: 1"}}
//! ```
//!
//! A key the file does not define is a fatal [`BackendError::FixtureMiss`]:
//! fixtures must be total for the run they drive, otherwise the run is not
//! the one the author reviewed.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{BackendError, BackendReply, BackendResult, ChatBackend, ChatMessage, FixtureKey};

#[derive(Debug, Clone, Deserialize)]
struct FixtureFile {
    entries: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default)]
pub struct ScriptedChat {
    entries: BTreeMap<String, String>,
}

impl ScriptedChat {
    pub fn new(entries: BTreeMap<String, String>) -> Self {
        ScriptedChat { entries }
    }

    /// Convenience for building fixtures in tests.
    pub fn from_pairs<K: Into<String>, V: Into<String>>(
        pairs: impl IntoIterator<Item = (K, V)>,
    ) -> Self {
        ScriptedChat {
            entries: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            BackendError::failure(format!(
                "cannot read fixture file `{}`: {e}",
                path.as_ref().display()
            ))
        })?;
        let file: FixtureFile = serde_json::from_str(&text).map_err(|e| {
            BackendError::failure(format!(
                "cannot parse fixture file `{}`: {e}",
                path.as_ref().display()
            ))
        })?;
        Ok(ScriptedChat {
            entries: file.entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ChatBackend for ScriptedChat {
    fn chat(
        &self,
        key: &FixtureKey,
        _messages: &[ChatMessage],
        _temperature: f64,
    ) -> BackendResult {
        match self.entries.get(&key.to_string()) {
            Some(text) => Ok(BackendReply::once(text.clone())),
            None => Err(BackendError::FixtureMiss {
                key: key.to_string(),
            }),
        }
    }
}
