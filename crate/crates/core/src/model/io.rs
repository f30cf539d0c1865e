//! Readers and writers for testset.jsonl, ratings.csv, logprobs.jsonl,
//! mean_ratings.csv and scores.csv.
//!
//! Readers validate every record and report the 1-based line number and the
//! offending field. Writers go through [`write_atomic`].

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::tokenize::{detokenize, tokenize};
use super::{
    is_scale_point, Direction, ExperimentType, Origin, RatingRecord, TestSentence, TokenLogProb,
    TokenLogProbRecord,
};
use crate::error::{Error, Result};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Write `bytes` to a temporary file next to `path`, then rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Pretty-printed JSON followed by a newline, written atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable report");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn jsonl_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, Result<String>)> {
    reader.lines().enumerate().map(|(i, l)| {
        (
            i + 1,
            l.map_err(|e| Error::invalid_at(i + 1, None, format!("unreadable line: {e}"))),
        )
    })
}

fn parse_object(line_no: usize, line: &str) -> Result<Map<String, Value>> {
    match serde_json::from_str::<Value>(line) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(Error::invalid_at(line_no, None, "expected a JSON object")),
        Err(e) => Err(Error::invalid_at(line_no, None, format!("invalid JSON: {e}"))),
    }
}

fn field<T: DeserializeOwned>(obj: &Map<String, Value>, name: &str, line: usize) -> Result<T> {
    let v = obj
        .get(name)
        .ok_or_else(|| Error::invalid_at(line, Some(name), "missing field"))?;
    serde_json::from_value(v.clone()).map_err(|e| Error::invalid_at(line, Some(name), e.to_string()))
}

fn reject_unknown(obj: &Map<String, Value>, known: &[&str], line: usize) -> Result<()> {
    match obj.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(Error::invalid_at(line, Some(k), "unknown field")),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct TestSentenceWire<'a> {
    id: &'a str,
    target: String,
    real_context: Vec<String>,
    random_context: Option<Vec<String>>,
    origin: Origin,
    degradation_level: u32,
}

const TESTSET_FIELDS: [&str; 6] = [
    "id",
    "target",
    "real_context",
    "random_context",
    "origin",
    "degradation_level",
];

pub fn parse_testset<R: BufRead>(reader: R) -> Result<Vec<TestSentence>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in jsonl_lines(reader) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let obj = parse_object(line_no, &line)?;
        reject_unknown(&obj, &TESTSET_FIELDS, line_no)?;
        let id: String = field(&obj, "id", line_no)?;
        let target: String = field(&obj, "target", line_no)?;
        let real: Vec<String> = field(&obj, "real_context", line_no)?;
        let random: Option<Vec<String>> = match obj.get("random_context") {
            None => None,
            Some(_) => field(&obj, "random_context", line_no)?,
        };
        let sentence = TestSentence {
            id,
            target: tokenize(&target),
            real_context: real.iter().map(|s| tokenize(s)).collect(),
            random_context: random.map(|r| r.iter().map(|s| tokenize(s)).collect()),
            origin: field(&obj, "origin", line_no)?,
            degradation_level: field(&obj, "degradation_level", line_no)?,
        };
        sentence.validate().map_err(|e| e.at_line(line_no))?;
        if !seen.insert(sentence.id.clone()) {
            return Err(Error::invalid_at(
                line_no,
                Some("id"),
                format!("duplicate id `{}`", sentence.id),
            ));
        }
        out.push(sentence);
    }
    Ok(out)
}

pub fn load_testset(path: &Path) -> Result<Vec<TestSentence>> {
    parse_testset(open(path)?)
}

fn testset_to_string(sentences: &[TestSentence]) -> String {
    let mut s = String::new();
    for t in sentences {
        let wire = TestSentenceWire {
            id: &t.id,
            target: detokenize(&t.target),
            real_context: t.real_context.iter().map(|c| detokenize(c)).collect(),
            random_context: t
                .random_context
                .as_ref()
                .map(|r| r.iter().map(|c| detokenize(c)).collect()),
            origin: t.origin,
            degradation_level: t.degradation_level,
        };
        s.push_str(&serde_json::to_string(&wire).expect("serializable"));
        s.push('\n');
    }
    s
}

pub fn write_testset(path: &Path, sentences: &[TestSentence]) -> Result<()> {
    write_atomic(path, testset_to_string(sentences).as_bytes())
}

const RATINGS_HEADER: [&str; 4] = ["worker_id", "sentence_id", "experiment", "rating"];

/// Parse raw ratings. Every rating must be one of the four scale points.
pub fn parse_ratings<R: Read>(reader: R) -> Result<Vec<RatingRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::invalid_at(1, None, format!("unreadable header: {e}")))?
        .clone();
    if headers.is_empty() || headers.iter().ne(RATINGS_HEADER) {
        return Err(Error::invalid_at(
            1,
            None,
            format!(
                "expected header `{}`, found `{}`",
                RATINGS_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::invalid_at(line, None, e.to_string()))?;
        let line = rec.position().map_or(line, |p| p.line() as usize);
        let worker_id = rec.get(0).unwrap_or_default();
        let sentence_id = rec.get(1).unwrap_or_default();
        if worker_id.is_empty() {
            return Err(Error::invalid_at(line, Some("worker_id"), "empty worker_id"));
        }
        if sentence_id.is_empty() {
            return Err(Error::invalid_at(line, Some("sentence_id"), "empty sentence_id"));
        }
        let experiment: ExperimentType = rec
            .get(2)
            .unwrap_or_default()
            .parse()
            .map_err(|e: Error| e.at_line(line))?;
        let raw = rec.get(3).unwrap_or_default();
        let rating: f64 = raw.trim().parse().map_err(|_| {
            Error::invalid_at(line, Some("rating"), format!("`{raw}` is not a number"))
        })?;
        if !is_scale_point(rating) {
            return Err(Error::invalid_at(
                line,
                Some("rating"),
                format!("rating {rating} is not one of the scale points 1.0, 2.0, 3.0, 4.0"),
            ));
        }
        out.push(RatingRecord::new(worker_id, sentence_id, experiment, rating));
    }
    Ok(out)
}

pub fn load_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    parse_ratings(open(path)?)
}

pub fn write_ratings(path: &Path, records: &[RatingRecord]) -> Result<()> {
    let mut s = RATINGS_HEADER.join(",");
    s.push('\n');
    for r in records {
        s.push_str(&format!(
            "{},{},{},{:.1}\n",
            r.worker_id, r.sentence_id, r.experiment, r.rating
        ));
    }
    write_atomic(path, s.as_bytes())
}

const LOGPROB_FIELDS: [&str; 6] = [
    "sentence_id",
    "provider",
    "direction",
    "context_variant",
    "tokens",
    "n_target_tokens",
];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenWire {
    t: String,
    lp: f64,
}

pub fn parse_logprobs<R: BufRead>(reader: R) -> Result<Vec<TokenLogProbRecord>> {
    let mut out = Vec::new();
    for (line_no, line) in jsonl_lines(reader) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let obj = parse_object(line_no, &line)?;
        reject_unknown(&obj, &LOGPROB_FIELDS, line_no)?;
        let tokens: Vec<TokenWire> = field(&obj, "tokens", line_no)?;
        let n: i64 = field(&obj, "n_target_tokens", line_no)?;
        if n <= 0 {
            return Err(Error::invalid_at(
                line_no,
                Some("n_target_tokens"),
                "n_target_tokens must be positive",
            ));
        }
        let direction: Direction = field(&obj, "direction", line_no)?;
        let rec = TokenLogProbRecord {
            sentence_id: field(&obj, "sentence_id", line_no)?,
            provider: field(&obj, "provider", line_no)?,
            direction,
            context_variant: field(&obj, "context_variant", line_no)?,
            tokens: tokens
                .into_iter()
                .map(|t| TokenLogProb { t: t.t, lp: t.lp })
                .collect(),
            n_target_tokens: n as usize,
        };
        rec.validate().map_err(|e| e.at_line(line_no))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_logprobs(path: &Path) -> Result<Vec<TokenLogProbRecord>> {
    parse_logprobs(open(path)?)
}

pub fn write_logprobs(path: &Path, records: &[TokenLogProbRecord]) -> Result<()> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("serializable"));
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

/// One row of mean_ratings.csv.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRatingRow {
    pub sentence_id: String,
    pub experiment: ExperimentType,
    pub mean: f64,
    pub n_ratings: usize,
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("serializable row");
    }
    let bytes = w.into_inner().expect("in-memory writer");
    write_atomic(path, &bytes)
}

fn read_csv_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize().enumerate() {
        out.push(row.map_err(|e: csv::Error| Error::invalid_at(i + 2, None, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_mean_ratings(path: &Path, rows: &[MeanRatingRow]) -> Result<()> {
    write_csv_rows(path, rows)
}

pub fn load_mean_ratings(path: &Path) -> Result<Vec<MeanRatingRow>> {
    read_csv_rows(path)
}

/// One row of scores.csv.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub sentence_id: String,
    pub provider: String,
    pub direction: Direction,
    pub context_variant: ExperimentType,
    pub lp: f64,
    pub mean_lp: f64,
    pub pen_lp: f64,
    pub norm_lp: f64,
    pub slor: f64,
    pub n_tokens: usize,
}

impl ScoreRow {
    pub fn values(&self) -> [f64; 5] {
        [self.lp, self.mean_lp, self.pen_lp, self.norm_lp, self.slor]
    }
}

pub fn write_scores(path: &Path, rows: &[ScoreRow]) -> Result<()> {
    write_csv_rows(path, rows)
}

pub fn load_scores(path: &Path) -> Result<Vec<ScoreRow>> {
    read_csv_rows(path)
}

pub fn load_hits(path: &Path) -> Result<Vec<crate::testgen::Hit>> {
    let mut out = Vec::new();
    for (line_no, line) in jsonl_lines(open(path)?) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let obj = parse_object(line_no, &line)?;
        reject_unknown(&obj, &["hit_id", "sentence_ids"], line_no)?;
        out.push(crate::testgen::Hit {
            hit_id: field(&obj, "hit_id", line_no)?,
            sentence_ids: field(&obj, "sentence_ids", line_no)?,
        });
    }
    Ok(out)
}

pub fn write_hits(path: &Path, hits: &[crate::testgen::Hit]) -> Result<()> {
    let mut s = String::new();
    for h in hits {
        s.push_str(&serde_json::to_string(h).expect("serializable"));
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}
