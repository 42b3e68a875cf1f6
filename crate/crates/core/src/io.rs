//! Post (JSON Lines) and price (CSV) ingestion.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Polarity, Post, TokenizerMode};
use crate::error::{Error, Result};
use crate::market::PriceSeries;

/// On-disk shape of one post. Either `tokens` or `text` must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostRecord {
    pub id: String,
    pub stock: String,
    pub date: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default)]
    pub label: Option<Polarity>,
}

impl PostRecord {
    pub fn into_post(self, mode: TokenizerMode) -> Result<Post> {
        let tokens = match (self.tokens, self.text) {
            (Some(tokens), _) => tokens,
            (None, Some(text)) => tokenize(&text, mode),
            (None, None) => {
                return Err(Error::Domain(format!("post {} has neither tokens nor text", self.id)))
            }
        };
        Post::new(self.id, self.stock, self.date, tokens, self.label)
    }
}

impl From<&Post> for PostRecord {
    fn from(p: &Post) -> Self {
        Self {
            id: p.id.clone(),
            stock: p.stock_id.clone(),
            date: p.date,
            tokens: Some(p.tokens.clone()),
            text: None,
            label: p.label,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedPosts {
    pub posts: Vec<Post>,
    pub errors: Vec<LineError>,
}

/// Parses every line it can; malformed lines are reported with their
/// 1-based line number. Blank lines are skipped.
pub fn load_posts(path: &Path, mode: TokenizerMode) -> Result<LoadedPosts> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut posts = Vec::new();
    let mut errors = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<PostRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.into_post(mode).map_err(|e| e.to_string()));
        match parsed {
            Ok(post) => posts.push(post),
            Err(message) => errors.push(LineError { line: n + 1, message }),
        }
    }
    if posts.is_empty() {
        return Err(Error::NoValidPosts(path.to_path_buf()));
    }
    Ok(LoadedPosts { posts, errors })
}

pub fn write_posts(posts: &[Post], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for p in posts {
        let line = serde_json::to_string(&PostRecord::from(p)).map_err(|e| Error::parse(path, e))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Deserialize)]
struct PriceRecord {
    date: NaiveDate,
    close: String,
}

/// Reads a `date,close` CSV into a date-sorted price series.
pub fn load_prices(path: &Path) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path, format!("{other:?}")),
        })?;
    let mut points = Vec::new();
    for (n, record) in reader.deserialize::<PriceRecord>().enumerate() {
        let record = record.map_err(|e| Error::parse(path, format!("row {}: {e}", n + 2)))?;
        let close: f64 = record
            .close
            .parse()
            .map_err(|e| Error::parse(path, format!("row {}: close {:?}: {e}", n + 2, record.close)))?;
        if !(close > 0.0 && close.is_finite()) {
            return Err(Error::NonPositivePrice(close));
        }
        points.push((record.date, close));
    }
    PriceSeries::new(points)
}

/// Writes `date,close` with closes at four decimals.
pub fn write_prices(prices: &PriceSeries, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "date,close")?;
        for (d, p) in prices.points() {
            writeln!(out, "{d},{p:.4}")?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    const POSTS: &str = r#"{"id":"1","stock":"000573","date":"2016-01-04","tokens":["buy","now"],"label":"pos"}
{"id":"2","stock":"000573","date":"2016-01-04","tokens":["sell"],"label":"neg"}
{"id":"3","stock":"000573","date":"2016-01-05","text":"hold, maybe!","label":null}
"#;

    #[test]
    fn loads_valid_posts() {
        let dir = tempfile::tempdir().unwrap();
        let loaded = load_posts(&write(&dir, "p.jsonl", POSTS), TokenizerMode::Whitespace).unwrap();
        assert_eq!(loaded.posts.len(), 3);
        assert!(loaded.errors.is_empty());
        assert_eq!(loaded.posts[2].tokens, vec!["hold", "maybe"]);
        assert_eq!(loaded.posts[0].label, Some(Polarity::Positive));
        assert_eq!(loaded.posts[2].label, None);
    }

    #[test]
    fn malformed_lines_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{}{{\"id\": 4, broken\n", POSTS);
        let loaded = load_posts(&write(&dir, "p.jsonl", &body), TokenizerMode::Whitespace).unwrap();
        assert_eq!(loaded.posts.len(), 3);
        assert_eq!(loaded.errors.len(), 1);
        assert_eq!(loaded.errors[0].line, 4);
    }

    #[test]
    fn empty_tokens_and_bad_dates_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"{"id":"1","stock":"s","date":"2016-02-30","tokens":["a"]}
{"id":"2","stock":"s","date":"2016-02-03","tokens":[]}
{"id":"3","stock":"s","date":"2016-02-03","text":"..."}
{"id":"4","stock":"s","date":"2016-02-03","tokens":["ok"]}
"#;
        let loaded = load_posts(&write(&dir, "p.jsonl", body), TokenizerMode::Whitespace).unwrap();
        assert_eq!(loaded.posts.len(), 1);
        let lines: Vec<_> = loaded.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![1, 2, 3]);
    }

    #[test]
    fn empty_file_has_no_valid_posts() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_posts(&write(&dir, "p.jsonl", ""), TokenizerMode::Whitespace);
        assert!(matches!(err, Err(Error::NoValidPosts(_))));
        assert!(matches!(
            load_posts(&dir.path().join("missing.jsonl"), TokenizerMode::Whitespace),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn prices_parse_and_sort() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "p.csv", "date,close\n2016-01-05,10.5\n2016-01-04,10.00\n");
        let s = load_prices(&path).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.points()[0].1, 10.0);
    }

    #[test]
    fn prices_reject_duplicates_and_zero() {
        let dir = tempfile::tempdir().unwrap();
        let dup = write(&dir, "d.csv", "date,close\n2016-01-04,1\n2016-01-04,2\n");
        let err = load_prices(&dup).unwrap_err();
        assert!(matches!(err, Error::DuplicateDate(_)));
        assert!(err.to_string().contains("2016-01-04"));
        let zero = write(&dir, "z.csv", "date,close\n2016-01-04,0.00\n");
        assert!(matches!(load_prices(&zero), Err(Error::NonPositivePrice(_))));
        let junk = write(&dir, "j.csv", "date,close\n2016-01-04,abc\n");
        assert!(matches!(load_prices(&junk), Err(Error::Parse { .. })));
    }
}
