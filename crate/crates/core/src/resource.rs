//! Web resources, their outbound links, and publication metadata.

use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use encoding_rs::Encoding;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;
use url::Url;

use crate::uri::{classify_url, ClassifiedUri, PlainUri, TrustyUri};

pub const TEXT_HTML_UTF8: &str = "text/html; charset=utf-8";
pub const TEXT_PLAIN_UTF8: &str = "text/plain; charset=utf-8";
pub const OCTET_STREAM: &str = "application/octet-stream";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResourceError {
    #[error("invalid media type `{0}`")]
    InvalidMediaType(String),
    #[error("unknown charset `{0}`")]
    UnknownCharset(String),
    #[error("content is not valid {0}")]
    Undecodable(&'static str),
    #[error("invalid base URI `{0}`")]
    InvalidBase(String),
}

/// Byte content plus its media type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resource {
    content: Vec<u8>,
    media_type: String,
}

impl Resource {
    pub fn new(content: impl Into<Vec<u8>>, media_type: &str) -> Result<Self, ResourceError> {
        let media_type = media_type.trim();
        if !is_valid_media_type(media_type) {
            return Err(ResourceError::InvalidMediaType(media_type.to_string()));
        }
        Ok(Self {
            content: content.into(),
            media_type: media_type.to_string(),
        })
    }

    pub fn html(content: impl Into<Vec<u8>>) -> Self {
        Self {
            content: content.into(),
            media_type: TEXT_HTML_UTF8.to_string(),
        }
    }

    pub fn plain_text(content: impl Into<Vec<u8>>) -> Self {
        Self {
            content: content.into(),
            media_type: TEXT_PLAIN_UTF8.to_string(),
        }
    }

    pub fn content(&self) -> &[u8] {
        &self.content
    }

    pub fn into_content(self) -> Vec<u8> {
        self.content
    }

    pub fn media_type(&self) -> &str {
        &self.media_type
    }

    pub fn size(&self) -> u64 {
        self.content.len() as u64
    }

    /// `type/subtype`, lowercased, without parameters.
    pub fn essence(&self) -> String {
        essence(&self.media_type)
    }

    pub fn is_html(&self) -> bool {
        matches!(self.essence().as_str(), "text/html" | "application/xhtml+xml")
    }

    pub fn is_text(&self) -> bool {
        self.essence().starts_with("text/")
    }

    fn charset(&self) -> Option<String> {
        self.media_type.split(';').skip(1).find_map(|param| {
            let (name, value) = param.split_once('=')?;
            name.trim()
                .eq_ignore_ascii_case("charset")
                .then(|| value.trim().trim_matches('"').to_string())
        })
    }

    /// Content decoded per the declared charset (UTF-8 when absent).
    pub fn decode_text(&self) -> Result<String, ResourceError> {
        let label = self.charset().unwrap_or_else(|| "utf-8".to_string());
        let encoding = Encoding::for_label(label.as_bytes())
            .ok_or_else(|| ResourceError::UnknownCharset(label.clone()))?;
        encoding
            .decode_without_bom_handling_and_without_replacement(&self.content)
            .map(|text| text.into_owned())
            .ok_or(ResourceError::Undecodable(encoding.name()))
    }

    /// Human-readable text: markup removed for HTML, the whole body for other
    /// text types, nothing for binary content.
    pub fn visible_text(&self) -> Result<String, ResourceError> {
        if self.is_html() {
            Ok(html::visible_text(&self.decode_text()?))
        } else if self.is_text() {
            self.decode_text()
        } else {
            Ok(String::new())
        }
    }
}

fn essence(media_type: &str) -> String {
    media_type
        .split(';')
        .next()
        .unwrap_or_default()
        .trim()
        .to_ascii_lowercase()
}

fn is_token(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b"!#$%&'*+-.^_`|~".contains(&b))
}

fn is_valid_media_type(media_type: &str) -> bool {
    let mut parts = media_type.split(';');
    let Some((kind, sub)) = parts.next().and_then(|e| e.trim().split_once('/')) else {
        return false;
    };
    is_token(kind)
        && is_token(sub)
        && parts.all(|param| match param.split_once('=') {
            Some((name, value)) => is_token(name.trim()) && !value.trim().is_empty(),
            None => false,
        })
}

/// Outbound anchor links of a resource, split by kind, in document order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSet {
    pub trusty_links: Vec<TrustyUri>,
    pub plain_links: Vec<PlainUri>,
}

impl LinkSet {
    pub fn is_empty(&self) -> bool {
        self.trusty_links.is_empty() && self.plain_links.is_empty()
    }

    pub fn len(&self) -> usize {
        self.trusty_links.len() + self.plain_links.len()
    }
}

/// Extracts every anchor `href`, resolving relative references against
/// `base`. Non-HTML resources have no links. Markup errors are tolerated.
pub fn extract_links(resource: &Resource, base: &str) -> Result<LinkSet, ResourceError> {
    let mut links = LinkSet::default();
    if !resource.is_html() {
        return Ok(links);
    }
    let base = Url::parse(base).map_err(|_| ResourceError::InvalidBase(base.to_string()))?;
    let text = resource.decode_text()?;
    for href in html::anchor_hrefs(&text) {
        let Ok(url) = base.join(href.trim()) else {
            continue;
        };
        match classify_url(&url) {
            ClassifiedUri::Trusty(uri) => links.trusty_links.push(uri),
            ClassifiedUri::Plain(uri) => links.plain_links.push(uri),
        }
    }
    Ok(links)
}

/// Where a publication chain is anchored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Parent {
    /// The publisher's main page, named by its (mutable) base URI.
    Root(String),
    Resource(TrustyUri),
}

impl Parent {
    pub fn as_resource(&self) -> Option<&TrustyUri> {
        match self {
            Parent::Resource(uri) => Some(uri),
            Parent::Root(_) => None,
        }
    }

    pub fn is_root(&self) -> bool {
        matches!(self, Parent::Root(_))
    }
}

impl fmt::Display for Parent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parent::Root(base) => f.write_str(base),
            Parent::Resource(uri) => uri.fmt(f),
        }
    }
}

impl Serialize for Parent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Parent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Ok(match TrustyUri::parse(&text) {
            Ok(uri) => Parent::Resource(uri),
            Err(_) => Parent::Root(text),
        })
    }
}

/// Metadata stored next to every published resource.
///
/// `parent` is [`Parent::Root`] only for an author's first publication; later
/// publications point at an earlier trusty resource, forming a chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationMeta {
    #[serde(with = "rfc3339")]
    pub published_at: DateTime<Utc>,
    pub parent: Parent,
    pub author_id: String,
}

pub fn build_chain_entry(parent: Parent, author: &str, now: DateTime<Utc>) -> PublicationMeta {
    PublicationMeta {
        published_at: now,
        parent,
        author_id: author.to_string(),
    }
}

/// RFC 3339 in UTC with a `Z` suffix; fractional seconds only when non-zero.
pub fn format_timestamp(at: &DateTime<Utc>) -> String {
    at.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn parse_timestamp(text: &str) -> Result<DateTime<Utc>, chrono::ParseError> {
    DateTime::parse_from_rfc3339(text).map(|t| t.with_timezone(&Utc))
}

pub mod rfc3339 {
    use chrono::{DateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(at: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(at))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_timestamp(&text).map_err(serde::de::Error::custom)
    }

    pub mod option {
        use chrono::{DateTime, Utc};
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(at: &Option<DateTime<Utc>>, s: S) -> Result<S::Ok, S::Error> {
            match at {
                Some(at) => s.serialize_str(&super::super::format_timestamp(at)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Option<DateTime<Utc>>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|text| super::super::parse_timestamp(&text).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}

/// Best-effort HTML scanning: anchors and visible text. Not a conforming
/// HTML5 parser; it never fails.
mod html {
    pub(super) fn anchor_hrefs(doc: &str) -> Vec<String> {
        let mut hrefs = Vec::new();
        walk(doc, |event| {
            if let Event::Open { name, attrs } = event {
                if name.eq_ignore_ascii_case("a") {
                    if let Some((_, value)) =
                        attrs.iter().find(|(k, _)| k.eq_ignore_ascii_case("href"))
                    {
                        hrefs.push(decode_entities(value));
                    }
                }
            }
        });
        hrefs
    }

    pub(super) fn visible_text(doc: &str) -> String {
        let mut out = String::new();
        walk(doc, |event| match event {
            Event::Text(text) => out.push_str(&decode_entities(text)),
            Event::Open { .. } | Event::Close => out.push(' '),
        });
        out
    }

    enum Event<'a> {
        Open {
            name: &'a str,
            attrs: Vec<(&'a str, &'a str)>,
        },
        Close,
        Text(&'a str),
    }

    /// Walks `doc`, reporting tags and text runs. Comments, doctype and the
    /// bodies of `script`/`style` are skipped.
    fn walk<'a>(doc: &'a str, mut on_event: impl FnMut(Event<'a>)) {
        let bytes = doc.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let Some(rel) = doc[i..].find('<') else {
                on_event(Event::Text(&doc[i..]));
                break;
            };
            if rel > 0 {
                on_event(Event::Text(&doc[i..i + rel]));
            }
            i += rel;
            let rest = &doc[i..];
            if rest.starts_with("<!--") {
                i += rest.find("-->").map_or(rest.len(), |end| end + 3);
                continue;
            }
            if rest.starts_with("<!") || rest.starts_with("<?") {
                i += rest.find('>').map_or(rest.len(), |end| end + 1);
                continue;
            }
            let closing = rest.starts_with("</");
            let name_start = if closing { 2 } else { 1 };
            let name_len = rest[name_start..]
                .bytes()
                .take_while(|b| b.is_ascii_alphanumeric() || *b == b'-')
                .count();
            if name_len == 0 {
                // A stray `<` is text.
                on_event(Event::Text(&rest[..1]));
                i += 1;
                continue;
            }
            let name = &rest[name_start..name_start + name_len];
            let (attrs, consumed) = parse_attributes(&rest[name_start + name_len..]);
            i += name_start + name_len + consumed;
            if closing {
                on_event(Event::Close);
                continue;
            }
            let raw_text = name.eq_ignore_ascii_case("script") || name.eq_ignore_ascii_case("style");
            on_event(Event::Open { name, attrs });
            if raw_text {
                let end_marker = format!("</{}", name.to_ascii_lowercase());
                let lower = doc[i..].to_ascii_lowercase();
                i += lower.find(&end_marker).unwrap_or(lower.len());
            }
        }
    }

    /// Parses attributes up to and including the closing `>`. Returns the
    /// attributes and the number of bytes consumed.
    fn parse_attributes(s: &str) -> (Vec<(&str, &str)>, usize) {
        let bytes = s.as_bytes();
        let mut attrs = Vec::new();
        let mut i = 0;
        loop {
            while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'/') {
                i += 1;
            }
            if i >= bytes.len() {
                return (attrs, i);
            }
            if bytes[i] == b'>' {
                return (attrs, i + 1);
            }
            let name_start = i;
            while i < bytes.len()
                && !bytes[i].is_ascii_whitespace()
                && !matches!(bytes[i], b'=' | b'>' | b'/')
            {
                i += 1;
            }
            let name = &s[name_start..i];
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'=' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                let value = if i < bytes.len() && (bytes[i] == b'"' || bytes[i] == b'\'') {
                    let quote = bytes[i];
                    let start = i + 1;
                    let end = s[start..]
                        .bytes()
                        .position(|b| b == quote)
                        .map_or(s.len(), |p| start + p);
                    i = (end + 1).min(s.len());
                    &s[start..end]
                } else {
                    let start = i;
                    while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' {
                        i += 1;
                    }
                    &s[start..i]
                };
                attrs.push((name, value));
            } else if !name.is_empty() {
                attrs.push((name, ""));
            } else {
                i += 1;
            }
        }
    }

    fn decode_entities(text: &str) -> String {
        if !text.contains('&') {
            return text.to_string();
        }
        let mut out = String::with_capacity(text.len());
        let mut rest = text;
        while let Some(amp) = rest.find('&') {
            out.push_str(&rest[..amp]);
            rest = &rest[amp..];
            let decoded = rest.find(';').filter(|&end| end <= 10).and_then(|end| {
                let entity = &rest[1..end];
                let ch = match entity {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    "nbsp" => Some('\u{a0}'),
                    _ => entity.strip_prefix('#').and_then(|num| {
                        let code = match num.strip_prefix(['x', 'X']) {
                            Some(hex) => u32::from_str_radix(hex, 16).ok(),
                            None => num.parse().ok(),
                        };
                        code.and_then(char::from_u32)
                    }),
                };
                ch.map(|c| (c, end + 1))
            });
            match decoded {
                Some((c, len)) => {
                    out.push(c);
                    rest = &rest[len..];
                }
                None => {
                    out.push('&');
                    rest = &rest[1..];
                }
            }
        }
        out.push_str(rest);
        out
    }

}
