//! CSV formats for topic matrices and corpora.
//!
//! Topic matrix: a header `# K=<k> V=<v> c0=<c0>` followed by K rows of V
//! comma-separated probabilities. Corpus: one document per line, 1-based
//! word indices.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Corpus, Document, TopicMatrix};

/// 17 significant digits in scientific notation; round-trips any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn topics_to_csv(theta: &TopicMatrix<f64>) -> String {
    let mut out = format!("# K={} V={} c0={}\n", theta.k(), theta.v(), fmt_f64(theta.c0()));
    for row in theta.rows() {
        let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn topics_from_csv(text: &str) -> Result<TopicMatrix<f64>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty topic matrix file".into()))?;
    let (mut k, mut v, mut c0) = (None, None, None);
    for field in header.trim_start_matches('#').split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| Error::Parse(format!("bad header field `{field}`")))?;
        match key {
            "K" => k = Some(parse_usize(value)?),
            "V" => v = Some(parse_usize(value)?),
            "c0" => c0 = Some(parse_f64(value)?),
            _ => return Err(Error::Parse(format!("unknown header field `{key}`"))),
        }
    }
    let (k, v, c0) = match (k, v, c0) {
        (Some(k), Some(v), Some(c0)) => (k, v, c0),
        _ => return Err(Error::Parse("header must be `# K=<k> V=<v> c0=<c0>`".into())),
    };
    let mut data = Vec::with_capacity(k * v);
    let mut rows = 0;
    for line in lines {
        let row = line.split(',').map(|s| parse_f64(s.trim())).collect::<Result<Vec<_>>>()?;
        if row.len() != v {
            return Err(Error::Parse(format!("row {} has {} entries, expected V={v}", rows + 1, row.len())));
        }
        data.extend(row);
        rows += 1;
    }
    if rows != k {
        return Err(Error::Parse(format!("found {rows} rows, expected K={k}")));
    }
    TopicMatrix::new(k, v, c0, data)
}

pub fn corpus_to_csv(corpus: &Corpus) -> String {
    let mut out = String::new();
    for d in corpus.documents() {
        let line: Vec<String> = d.words().iter().map(|w| (w + 1).to_string()).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

/// Parses a corpus; `m` is taken from the first line, `v` must be supplied.
pub fn corpus_from_csv(text: &str, v: usize) -> Result<Corpus> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().map(str::trim).filter(|l| !l.is_empty()).enumerate() {
        let words = line
            .split(',')
            .map(|s| match parse_usize(s.trim())? {
                0 => Err(Error::Parse(format!("line {}: word indices are 1-based", i + 1))),
                w => Ok(w - 1),
            })
            .collect::<Result<Vec<_>>>()?;
        docs.push(Document::new(words));
    }
    let m = docs.first().map_or(0, Document::len);
    Corpus::new(v, m, docs)
}

pub fn read_topics(path: &Path) -> Result<TopicMatrix<f64>> {
    topics_from_csv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn read_corpus(path: &Path, v: usize) -> Result<Corpus> {
    corpus_from_csv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?, v)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse(format!("expected a nonnegative integer, got `{s}`")))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("expected a number, got `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topic_round_trip() {
        let t = TopicMatrix::new(2, 3, 0.01, vec![0.1, 0.2, 0.7, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        let text = topics_to_csv(&t);
        assert!(text.starts_with("# K=2 V=3 c0="));
        let back = topics_from_csv(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(topics_to_csv(&back), text);
    }

    #[test]
    fn corpus_round_trip() {
        let c = Corpus::new(4, 2, vec![Document::new(vec![0, 3]), Document::new(vec![2, 2])]).unwrap();
        let text = corpus_to_csv(&c);
        assert_eq!(text, "1,4\n3,3\n");
        assert_eq!(corpus_from_csv(&text, 4).unwrap(), c);
        assert!(corpus_from_csv("0,1\n", 4).is_err());
        assert!(corpus_from_csv("1,5\n", 4).is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e-7] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }
}
