//! Ordered transcript of one resolution.

use std::io::{BufRead, Write};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::resource::Resource;
use crate::trust::TrustDecision;
use crate::uri::TrustyUri;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Action {
    Search,
    ResultSet,
    Request,
    Response,
    Check,
    Validate,
}

/// Peer name used for checks the client performs itself.
pub const LOCAL_PEER: &str = "local";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub action: Action,
    pub peer: String,
    pub subject: String,
    /// Whether bytes matched the digest (responses and checks) or whether a
    /// validator agreed (validate). Absent when there was nothing to judge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verified: Option<bool>,
}

impl TraceStep {
    pub fn new(action: Action, peer: &str, subject: impl Into<String>) -> Self {
        Self {
            action,
            peer: peer.to_string(),
            subject: subject.into(),
            verified: None,
        }
    }

    pub fn verified(mut self, ok: bool) -> Self {
        self.verified = Some(ok);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolutionTrace {
    pub steps: Vec<TraceStep>,
    pub final_decision: TrustDecision,
    /// Where `content` was obtained. Set only together with `content`.
    pub uri: Option<TrustyUri>,
    /// Present only when the bytes matched the digest.
    pub content: Option<Resource>,
}

#[derive(Debug, Error)]
pub enum TraceFormatError {
    #[error("trace I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {0}: {1}")]
    Invalid(usize, String),
    #[error("trace has no final line")]
    MissingFinal,
}

#[derive(Serialize, Deserialize)]
struct FinalLine {
    #[serde(rename = "final")]
    decision: TrustDecision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    uri: Option<TrustyUri>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    media_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    content: Option<String>,
}

impl ResolutionTrace {
    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action).collect()
    }

    pub fn is_trusted(&self) -> bool {
        self.final_decision.is_trusted()
    }

    /// One JSON object per step, then a final line with the decision and
    /// the base64 content.
    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for step in &self.steps {
            serde_json::to_writer(&mut out, step)?;
            out.write_all(b"\n")?;
        }
        let last = FinalLine {
            decision: self.final_decision,
            uri: self.uri.clone(),
            media_type: self.content.as_ref().map(|c| c.media_type().to_string()),
            content: self.content.as_ref().map(|c| BASE64.encode(c.content())),
        };
        serde_json::to_writer(&mut out, &last)?;
        out.write_all(b"\n")
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = Vec::new();
        self.write_jsonl(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("JSON is UTF-8")
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self, TraceFormatError> {
        let mut steps = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value =
                serde_json::from_str(&line).map_err(|source| TraceFormatError::Json { line: i + 1, source })?;
            if value.get("final").is_none() {
                steps.push(
                    serde_json::from_value(value)
                        .map_err(|source| TraceFormatError::Json { line: i + 1, source })?,
                );
                continue;
            }
            let last: FinalLine = serde_json::from_value(value)
                .map_err(|source| TraceFormatError::Json { line: i + 1, source })?;
            let content = match (last.content, last.media_type) {
                (Some(b64), media_type) => {
                    let bytes = BASE64
                        .decode(b64)
                        .map_err(|e| TraceFormatError::Invalid(i + 1, e.to_string()))?;
                    let media_type = media_type.unwrap_or_else(|| crate::resource::OCTET_STREAM.into());
                    Some(
                        Resource::new(bytes, &media_type)
                            .map_err(|e| TraceFormatError::Invalid(i + 1, e.to_string()))?,
                    )
                }
                (None, _) => None,
            };
            return Ok(Self {
                steps,
                final_decision: last.decision,
                uri: last.uri,
                content,
            });
        }
        Err(TraceFormatError::MissingFinal)
    }
}
