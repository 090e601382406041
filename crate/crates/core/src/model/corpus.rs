use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A document of `m` word indices, 0-based internally.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Document {
    words: Vec<usize>,
}

impl Document {
    pub fn new(words: Vec<usize>) -> Self {
        Document { words }
    }

    /// Decodes position `index` of the lexicographic enumeration of `[V]^m`,
    /// first word most significant.
    pub fn from_index(mut index: usize, v: usize, m: usize) -> Self {
        let mut words = vec![0; m];
        for slot in words.iter_mut().rev() {
            *slot = index % v;
            index /= v;
        }
        Document { words }
    }

    pub fn words(&self) -> &[usize] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Inverse of [`Document::from_index`].
    pub fn index(&self, v: usize) -> usize {
        self.words.iter().fold(0, |acc, &w| acc * v + w)
    }

    pub fn validate(&self, v: usize) -> Result<()> {
        match self.words.iter().find(|&&w| w >= v) {
            Some(w) => Err(Error::InvalidDocument(format!("word index {} outside 1..={v}", w + 1))),
            None => Ok(()),
        }
    }
}

/// `n >= 1` documents of common length `m` over a vocabulary of size `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    v: usize,
    m: usize,
    docs: Vec<Document>,
}

impl Corpus {
    pub fn new(v: usize, m: usize, docs: Vec<Document>) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::InvalidDocument("corpus is empty".into()));
        }
        if m == 0 {
            return Err(Error::InvalidDocument("documents must have at least one word".into()));
        }
        for (i, d) in docs.iter().enumerate() {
            if d.len() != m {
                return Err(Error::InvalidDocument(format!("document {i} has {} words, expected {m}", d.len())));
            }
            d.validate(v)?;
        }
        Ok(Corpus { v, m, docs })
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.docs.len()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    /// Distinct documents with multiplicities, in lexicographic order.
    pub fn histogram(&self) -> Vec<(Document, usize)> {
        let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for d in &self.docs {
            *counts.entry(d.words.clone()).or_default() += 1;
        }
        counts.into_iter().map(|(w, c)| (Document::new(w), c)).collect()
    }

    /// Concatenation with another corpus of the same shape.
    pub fn concat(&self, other: &Corpus) -> Result<Corpus> {
        if self.v != other.v || self.m != other.m {
            return Err(Error::DimensionMismatch("corpora differ in V or m".into()));
        }
        Corpus::new(self.v, self.m, [self.docs.clone(), other.docs.clone()].concat())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_round_trip() {
        for idx in 0..27 {
            let d = Document::from_index(idx, 3, 3);
            assert_eq!(d.index(3), idx);
        }
        assert_eq!(Document::from_index(5, 3, 2).words(), &[1, 2]);
    }

    #[test]
    fn corpus_validation() {
        let ok = Corpus::new(3, 2, vec![Document::new(vec![0, 2])]);
        assert!(ok.is_ok());
        assert!(Corpus::new(3, 2, vec![Document::new(vec![0, 3])]).is_err());
        assert!(Corpus::new(3, 2, vec![Document::new(vec![0])]).is_err());
        assert!(Corpus::new(3, 2, vec![]).is_err());
    }

    #[test]
    fn histogram_counts() {
        let c =
            Corpus::new(2, 2, vec![Document::new(vec![1, 0]), Document::new(vec![0, 1]), Document::new(vec![1, 0])])
                .unwrap();
        let h = c.histogram();
        assert_eq!(h, vec![(Document::new(vec![0, 1]), 1), (Document::new(vec![1, 0]), 2)]);
    }
}
