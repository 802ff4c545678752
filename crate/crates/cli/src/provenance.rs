//! Version and provenance lines stamped into every output file, so results
//! stay interpretable and re-runnable from their own headers.

use serde::Serialize;

pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Comment header for CSV outputs.
pub fn csv_header(config_hash: &str) -> String {
    format!(
        "# shadowflow {}\n# config_hash = {}\n# convention: {}\n",
        version(),
        config_hash,
        shadowflow::SIGN_CONVENTION
    )
}

/// Wrapper for JSON outputs: tool identity, frozen conventions, the
/// resolved config text (re-runnable), and the payload.
#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub convention: &'static str,
    pub config: String,
    pub report: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, config_hash: String, config_text: String, report: T) -> Self {
        Self {
            tool: "shadowflow",
            version: version(),
            command: command.to_string(),
            config_hash,
            convention: shadowflow::SIGN_CONVENTION,
            config: config_text,
            report,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }
}
