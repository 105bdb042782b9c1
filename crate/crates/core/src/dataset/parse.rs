//! Readers for the raw interaction files.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub weight: f64,
}

/// Raw `(user, item, weight)` triples as read from disk.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionLog {
    pub source: String,
    pub triples: Vec<Interaction>,
}

impl InteractionLog {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            triples: Vec::new(),
        }
    }

    pub fn push(&mut self, user: impl Into<String>, item: impl Into<String>, weight: f64) {
        self.triples.push(Interaction {
            user: user.into(),
            item: item.into(),
            weight,
        });
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Keeps the first occurrence of every `(user, item)` pair.
    pub fn dedup(&mut self) {
        let mut seen = std::collections::HashSet::with_capacity(self.triples.len());
        self.triples
            .retain(|t| seen.insert((t.user.clone(), t.item.clone())));
    }
}

/// The on-disk layouts understood by the ingester.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    /// `UserID::MovieID::Rating::Timestamp`
    #[value(name = "ml1m")]
    #[serde(rename = "ml1m")]
    MovieLens1M,
    /// Tab separated with a header, `userID movieID rating ...`
    Hetrec,
    /// Tab separated with a header, `userID artistID weight`
    Lastfm,
}

impl DatasetFormat {
    pub fn parse(self, path: &Path) -> Result<InteractionLog> {
        match self {
            DatasetFormat::MovieLens1M => parse_movielens_1m(path),
            DatasetFormat::Hetrec => parse_hetrec(path),
            DatasetFormat::Lastfm => parse_lastfm(path),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            DatasetFormat::MovieLens1M => "ml1m",
            DatasetFormat::Hetrec => "hetrec",
            DatasetFormat::Lastfm => "lastfm",
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))
}

pub fn parse_movielens_1m(path: &Path) -> Result<InteractionLog> {
    read_movielens_1m(open(path)?, path)
}

pub fn parse_hetrec(path: &Path) -> Result<InteractionLog> {
    read_tab_separated(open(path)?, path, "hetrec")
}

pub fn parse_lastfm(path: &Path) -> Result<InteractionLog> {
    read_tab_separated(open(path)?, path, "lastfm")
}

pub fn read_movielens_1m<R: Read>(reader: R, path: &Path) -> Result<InteractionLog> {
    let mut log = InteractionLog::new("ml1m");
    for_each_line(reader, path, |lineno, line| {
        let fields: Vec<&str> = line.split("::").collect();
        if fields.len() != 4 {
            return Err(parse_error(path, lineno, format!("expected 4 '::'-separated fields, found {}", fields.len())));
        }
        let weight = parse_weight(fields[2], path, lineno)?;
        check_id(fields[0], path, lineno)?;
        check_id(fields[1], path, lineno)?;
        log.push(fields[0], fields[1], weight);
        Ok(())
    })?;
    Ok(log)
}

/// Tab separated `user item weight [...]` with one header line.
pub fn read_tab_separated<R: Read>(reader: R, path: &Path, source: &str) -> Result<InteractionLog> {
    let mut log = InteractionLog::new(source);
    for_each_line(reader, path, |lineno, line| {
        if lineno == 1 {
            return Ok(());
        }
        let mut fields = line.split('\t');
        let (Some(user), Some(item), Some(weight)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_error(path, lineno, "expected at least 3 tab-separated fields"));
        };
        check_id(user, path, lineno)?;
        check_id(item, path, lineno)?;
        let weight = parse_weight(weight, path, lineno)?;
        log.push(user, item, weight);
        Ok(())
    })?;
    Ok(log)
}

fn for_each_line<R, F>(reader: R, path: &Path, mut f: F) -> Result<()>
where
    R: Read,
    F: FnMut(usize, &str) -> Result<()>,
{
    let reader = BufReader::new(reader);
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(format!("reading {} line {lineno}", path.display()), e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            continue;
        }
        f(lineno, line)?;
    }
    Ok(())
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: PathBuf::from(path),
        line,
        msg: msg.into(),
    }
}

fn check_id(id: &str, path: &Path, line: usize) -> Result<()> {
    if id.trim().is_empty() {
        Err(parse_error(path, line, "empty id"))
    } else {
        Ok(())
    }
}

fn parse_weight(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|w| w.is_finite())
        .ok_or_else(|| parse_error(path, line, format!("weight {s:?} is not a number")))
}
