//! Shared prompt-structure parsing for the model-free backends.
//!
//! The agent's prompt layout is fixed (`== Section ==` headers, `N: id | ...`
//! menu lines), which lets the oracle, random and heuristic backends read
//! the state they need straight out of the messages they receive.

use super::ChatMessage;

/// Extract the body of a `== name ==` section from prompt text. The body
/// runs until the next section header or the end of the text.
pub(super) fn section<'a>(text: &'a str, name: &str) -> Option<&'a str> {
    let header = format!("== {name} ==\n");
    let start = text.find(&header)? + header.len();
    let rest = &text[start..];
    let end = rest.find("\n== ").unwrap_or(rest.len());
    Some(rest[..end].trim_end())
}

/// Find a section across all messages, later messages winning.
pub(super) fn section_in_messages<'a>(messages: &'a [ChatMessage], name: &str) -> Option<&'a str> {
    messages
        .iter()
        .rev()
        .find_map(|m| section(&m.content, name))
}

/// The `Viewpoint: <id>` line of the observation block.
pub(super) fn current_viewpoint(messages: &[ChatMessage]) -> Option<String> {
    let obs = section_in_messages(messages, "Observation")?;
    obs.lines()
        .find_map(|l| l.strip_prefix("Viewpoint: "))
        .map(|s| s.trim().to_string())
}

/// One parsed candidate menu entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) struct MenuEntry {
    pub index: usize,
    pub viewpoint: String,
    /// The entry's full text: its menu line plus any attached Q/A lines.
    pub text: String,
}

/// Parse the numbered move options out of the candidates section. The
/// `0: stop here` line is not an entry; Q/A continuation lines attach to
/// the entry above them.
pub(super) fn menu_entries(messages: &[ChatMessage]) -> Vec<MenuEntry> {
    let Some(body) = section_in_messages(messages, "Candidates") else {
        return Vec::new();
    };
    let mut entries: Vec<MenuEntry> = Vec::new();
    for line in body.lines() {
        if let Some((head, rest)) = line.split_once(": ") {
            if let Ok(index) = head.trim().parse::<usize>() {
                if index >= 1 {
                    let viewpoint = rest.split(" | ").next().unwrap_or("").trim().to_string();
                    entries.push(MenuEntry {
                        index,
                        viewpoint,
                        text: line.to_string(),
                    });
                    continue;
                }
                if index == 0 {
                    continue;
                }
            }
        }
        if let Some(last) = entries.last_mut() {
            last.text.push('\n');
            last.text.push_str(line);
        }
    }
    entries
}
