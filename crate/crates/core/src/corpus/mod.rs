//! Quran text corpus: ingest, hashing benchmarks, and publication.
//!
//! Input is one `surah|ayah|text` line per Ayah. Lines starting with `#` and
//! blank lines are ignored. A Surah's text is its Ayahs joined by a single
//! space; the full text is the Surahs joined by a newline.

pub mod bench;
pub mod publish;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::search::tokenize;

pub use bench::{bench_hash, chunk_overhead, render_table, BenchConfig, BenchError, BenchMode, BenchResult, OverheadResult};
pub use publish::{publish_corpus, PublishSummary, Publisher};

pub const SURAH_COUNT: usize = 114;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UnitKind {
    Ayah,
    Surah,
    FullText,
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnitKind::Ayah => "Ayah",
            UnitKind::Surah => "Surah",
            UnitKind::FullText => "FullText",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusUnit {
    pub kind: UnitKind,
    /// Absent only for the full text.
    pub surah_no: Option<u16>,
    /// Present exactly for Ayahs.
    pub ayah_no: Option<u32>,
    pub text: String,
}

impl CorpusUnit {
    /// `2:255`, `2`, or `full`.
    pub fn label(&self) -> String {
        match (self.surah_no, self.ayah_no) {
            (Some(s), Some(a)) => format!("{s}:{a}"),
            (Some(s), None) => s.to_string(),
            _ => "full".to_string(),
        }
    }

    /// Bytes published for this unit: a citation line, then the text.
    /// Several Ayahs share identical wording; the citation keeps their
    /// publications distinct.
    pub fn published_text(&self) -> String {
        match self.kind {
            UnitKind::FullText => format!("Quran\n{}", self.text),
            _ => format!("Quran {}\n{}", self.label(), self.text),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub surah_count: usize,
    pub ayah_count: usize,
    pub total_words: usize,
    pub distinct_words: usize,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("reading corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus is not valid UTF-8")]
    NotUtf8,
    #[error("line {line}: expected `surah|ayah|text`, found {fields} field(s)")]
    MalformedLine { line: usize, fields: usize },
    #[error("line {line}: `{value}` is not a valid {field} number")]
    BadNumber {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: surah {surah} ayah {ayah} does not follow surah {prev_surah} ayah {prev_ayah}")]
    NonMonotoneOrdering {
        line: usize,
        surah: u16,
        ayah: u32,
        prev_surah: u16,
        prev_ayah: u32,
    },
    #[error("corpus has no ayahs")]
    Empty,
}

/// Ayahs, then Surahs, then the full text, each in corpus order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub units: Vec<CorpusUnit>,
    pub stats: CorpusStats,
}

impl Corpus {
    pub fn of_kind(&self, kind: UnitKind) -> impl Iterator<Item = &CorpusUnit> {
        self.units.iter().filter(move |u| u.kind == kind)
    }

    pub fn full_text(&self) -> &CorpusUnit {
        self.units.last().expect("a parsed corpus always has a full text unit")
    }

    /// Length in octets of the longest unit of `kind`.
    pub fn longest(&self, kind: UnitKind) -> usize {
        self.of_kind(kind).map(|u| u.text.len()).max().unwrap_or(0)
    }
}

pub fn ingest(path: &Path) -> Result<Corpus, CorpusError> {
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8(bytes).map_err(|_| CorpusError::NotUtf8)?;
    parse(&text)
}

pub fn parse(input: &str) -> Result<Corpus, CorpusError> {
    let mut ayahs: Vec<CorpusUnit> = Vec::new();
    let mut prev: Option<(u16, u32)> = None;
    for (i, raw) in input.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.splitn(3, '|').collect();
        if fields.len() != 3 {
            return Err(CorpusError::MalformedLine {
                line,
                fields: fields.len(),
            });
        }
        let surah: u16 = number(fields[0], line, "surah")?;
        let ayah: u32 = number(fields[1], line, "ayah")?;
        if surah == 0 || usize::from(surah) > SURAH_COUNT {
            return Err(CorpusError::BadNumber {
                line,
                field: "surah",
                value: fields[0].to_string(),
            });
        }
        if ayah == 0 {
            return Err(CorpusError::BadNumber {
                line,
                field: "ayah",
                value: fields[1].to_string(),
            });
        }
        if let Some((ps, pa)) = prev {
            let ordered = surah > ps || (surah == ps && ayah > pa);
            if !ordered {
                return Err(CorpusError::NonMonotoneOrdering {
                    line,
                    surah,
                    ayah,
                    prev_surah: ps,
                    prev_ayah: pa,
                });
            }
        }
        prev = Some((surah, ayah));
        ayahs.push(CorpusUnit {
            kind: UnitKind::Ayah,
            surah_no: Some(surah),
            ayah_no: Some(ayah),
            text: fields[2].trim().to_string(),
        });
    }
    if ayahs.is_empty() {
        return Err(CorpusError::Empty);
    }

    let mut surahs: Vec<CorpusUnit> = Vec::new();
    for ayah in &ayahs {
        match surahs.last_mut() {
            Some(s) if s.surah_no == ayah.surah_no => {
                s.text.push(' ');
                s.text.push_str(&ayah.text);
            }
            _ => surahs.push(CorpusUnit {
                kind: UnitKind::Surah,
                surah_no: ayah.surah_no,
                ayah_no: None,
                text: ayah.text.clone(),
            }),
        }
    }
    let full = CorpusUnit {
        kind: UnitKind::FullText,
        surah_no: None,
        ayah_no: None,
        text: surahs.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join("\n"),
    };

    let mut total_words = 0;
    let mut distinct = HashSet::new();
    for ayah in &ayahs {
        for token in tokenize(&ayah.text) {
            total_words += 1;
            distinct.insert(token);
        }
    }
    let stats = CorpusStats {
        surah_count: surahs.len(),
        ayah_count: ayahs.len(),
        total_words,
        distinct_words: distinct.len(),
    };
    let mut units = ayahs;
    units.extend(surahs);
    units.push(full);
    Ok(Corpus { units, stats })
}

fn number<T: std::str::FromStr>(text: &str, line: usize, field: &'static str) -> Result<T, CorpusError> {
    text.trim().parse().map_err(|_| CorpusError::BadNumber {
        line,
        field,
        value: text.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "1|1|A B\n1|2|B C\n";

    #[test]
    fn toy_counts() {
        let c = parse(TOY).unwrap();
        assert_eq!(
            c.stats,
            CorpusStats {
                surah_count: 1,
                ayah_count: 2,
                total_words: 4,
                distinct_words: 3
            }
        );
        assert_eq!(c.units.len(), 4);
        let surah = c.of_kind(UnitKind::Surah).next().unwrap();
        assert_eq!(surah.text, "A B B C");
        assert_eq!(c.full_text().text, "A B B C");
        assert_eq!(c.full_text().surah_no, None);
    }

    #[test]
    fn surahs_join_with_newline_in_full_text() {
        let c = parse("1|1|a\n2|1|b\n2|2|c\n").unwrap();
        assert_eq!(c.full_text().text, "a\nb c");
        assert_eq!(c.stats.surah_count, 2);
    }

    #[test]
    fn ayah_number_present_only_for_ayahs() {
        let c = parse(TOY).unwrap();
        for u in &c.units {
            assert_eq!(u.ayah_no.is_some(), u.kind == UnitKind::Ayah);
        }
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let c = parse("# header\n\n1|1|x\n\n# trailer\n").unwrap();
        assert_eq!(c.stats.ayah_count, 1);
    }

    #[test]
    fn malformed_line() {
        assert!(matches!(
            parse("1|1|x\n1|2\n"),
            Err(CorpusError::MalformedLine { line: 2, fields: 2 })
        ));
    }

    #[test]
    fn non_monotone() {
        assert!(matches!(
            parse("1|2|x\n1|1|y\n"),
            Err(CorpusError::NonMonotoneOrdering { line: 2, .. })
        ));
        assert!(matches!(
            parse("2|1|x\n1|1|y\n"),
            Err(CorpusError::NonMonotoneOrdering { .. })
        ));
    }

    #[test]
    fn bad_numbers() {
        assert!(matches!(parse("x|1|t"), Err(CorpusError::BadNumber { field: "surah", .. })));
        assert!(matches!(parse("115|1|t"), Err(CorpusError::BadNumber { .. })));
        assert!(matches!(parse("1|0|t"), Err(CorpusError::BadNumber { field: "ayah", .. })));
        assert!(matches!(parse("# only\n"), Err(CorpusError::Empty)));
    }

    #[test]
    fn published_text_distinguishes_repeated_wording() {
        let c = parse("55|13|same\n55|16|same\n").unwrap();
        let mut ayahs = c.of_kind(UnitKind::Ayah);
        let (a, b) = (ayahs.next().unwrap(), ayahs.next().unwrap());
        assert_eq!(a.text, b.text);
        assert_ne!(a.published_text(), b.published_text());
        assert_eq!(a.published_text(), "Quran 55:13\nsame");
    }

    #[test]
    fn deterministic() {
        assert_eq!(parse(TOY).unwrap(), parse(TOY).unwrap());
    }

    proptest::proptest! {
        #[test]
        fn ingest_is_deterministic_and_counts_agree(
            lengths in proptest::collection::vec(1usize..5, 1..6),
            words in proptest::collection::vec("[a-c]{1,3}", 1..5),
        ) {
            let mut text = String::new();
            for (s, n) in lengths.iter().enumerate() {
                for a in 1..=*n {
                    text.push_str(&format!("{}|{}|{}\n", s + 1, a, words.join(" ")));
                }
            }
            let c = parse(&text).unwrap();
            proptest::prop_assert_eq!(&c, &parse(&text).unwrap());
            proptest::prop_assert_eq!(c.stats.surah_count, lengths.len());
            proptest::prop_assert_eq!(c.stats.ayah_count, lengths.iter().sum::<usize>());
            proptest::prop_assert!(c.stats.distinct_words <= c.stats.total_words);
            for unit in &c.units {
                proptest::prop_assert_eq!(unit.ayah_no.is_some(), unit.kind == UnitKind::Ayah);
            }
        }
    }
}
