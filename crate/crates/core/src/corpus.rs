//! Plain-text corpora: one sentence per line, documents separated by blank
//! lines. Lines are tokenized with [`crate::model::tokenize`].

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{tokenize, Tokens};

pub type Document = Vec<Tokens>;

pub fn parse_corpus(text: &str) -> Vec<Document> {
    let mut docs = Vec::new();
    let mut cur: Document = Vec::new();
    for line in text.lines() {
        let toks = tokenize(line);
        if toks.is_empty() {
            if !cur.is_empty() {
                docs.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(toks);
        }
    }
    if !cur.is_empty() {
        docs.push(cur);
    }
    docs
}

pub fn load_corpus(path: &Path) -> Result<Vec<Document>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_corpus(&text))
}

pub fn corpus_to_string(docs: &[Document]) -> String {
    let mut s = String::new();
    for (i, d) in docs.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        for sent in d {
            s.push_str(&sent.join(" "));
            s.push('\n');
        }
    }
    s
}

/// All sentences of all documents, in order.
pub fn sentences(docs: &[Document]) -> Vec<Tokens> {
    docs.iter().flatten().cloned().collect()
}

/// Tokens that contain at least one alphanumeric character.
pub fn word_count(tokens: &[String]) -> usize {
    tokens
        .iter()
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .count()
}
