use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One homework problem as precompiled by the instructor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub problem_index: String,
    pub statement: String,
    pub reference_solution: String,
    pub method_notes: String,
    pub topic_tags: Vec<String>,
    pub chapter: String,
}

impl ProblemRecord {
    pub fn new(problem_index: impl Into<String>, statement: impl Into<String>) -> Self {
        let problem_index = problem_index.into();
        let chapter = default_chapter(&problem_index);
        Self {
            problem_index,
            statement: statement.into(),
            reference_solution: String::new(),
            method_notes: String::new(),
            topic_tags: Vec::new(),
            chapter,
        }
    }

    pub fn with_reference_solution(mut self, text: impl Into<String>) -> Self {
        self.reference_solution = text.into();
        self
    }

    pub fn with_method_notes(mut self, text: impl Into<String>) -> Self {
        self.method_notes = text.into();
        self
    }

    pub fn with_tags<I, S>(mut self, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.topic_tags = tags.into_iter().map(Into::into).collect();
        self
    }

    pub fn has_reference_solution(&self) -> bool {
        !self.reference_solution.trim().is_empty()
    }
}

/// Chapter implied by a textbook-style index: `"2.5-1"` belongs to chapter `"2"`.
pub fn default_chapter(problem_index: &str) -> String {
    problem_index
        .split(['.', '-'])
        .next()
        .unwrap_or_default()
        .to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocSource {
    ProblemNotes,
    LectureNotes,
    ConceptExplainer,
}

impl DocSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ProblemNotes => "problem_notes",
            Self::LectureNotes => "lecture_notes",
            Self::ConceptExplainer => "concept_explainer",
        }
    }
}

impl fmt::Display for DocSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "problem_notes" | "ProblemNotes" => Ok(Self::ProblemNotes),
            "lecture_notes" | "LectureNotes" => Ok(Self::LectureNotes),
            "concept_explainer" | "ConceptExplainer" => Ok(Self::ConceptExplainer),
            other => Err(format!("unknown document source `{other}`")),
        }
    }
}

/// A supporting document: per-problem notes, lecture notes or a concept explainer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextDocument {
    pub doc_id: String,
    pub body: String,
    pub source: DocSource,
    pub linked_problem: Option<String>,
}

impl ContextDocument {
    pub fn new(doc_id: impl Into<String>, source: DocSource, body: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            body: body.into(),
            source,
            linked_problem: None,
        }
    }

    pub fn linked_to(mut self, problem_index: impl Into<String>) -> Self {
        self.linked_problem = Some(problem_index.into());
        self
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus parse error at line {line}{}: {message}", record.as_ref().map(|r| format!(" (record `{r}`)")).unwrap_or_default())]
    Parse {
        line: usize,
        record: Option<String>,
        message: String,
    },
    #[error("duplicate problem index `{0}`")]
    DuplicateIndex(String),
    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),
    #[error("invalid record `{key}`: {message}")]
    Invalid { key: String, message: String },
}

/// The structured database: problem records keyed by index plus the
/// supporting documents that feed the vector index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    problems: Vec<ProblemRecord>,
    documents: Vec<ContextDocument>,
    problem_pos: HashMap<String, usize>,
    doc_pos: HashMap<String, usize>,
}

fn is_header_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_problem(&mut self, record: ProblemRecord) -> Result<(), CorpusError> {
        let invalid = |message: &str| CorpusError::Invalid {
            key: record.problem_index.clone(),
            message: message.to_string(),
        };
        if !is_header_token(&record.problem_index) {
            return Err(invalid("problem index must be a non-empty token without whitespace"));
        }
        if record.statement.trim().is_empty() {
            return Err(invalid("statement is empty"));
        }
        if record
            .topic_tags
            .iter()
            .any(|t| t.trim().is_empty() || t.contains([',', '\n']))
        {
            return Err(invalid("tags must be non-empty and contain no comma or newline"));
        }
        if record.chapter.contains('\n') {
            return Err(invalid("chapter must be a single line"));
        }
        if self.problem_pos.contains_key(&record.problem_index) {
            return Err(CorpusError::DuplicateIndex(record.problem_index));
        }
        self.problem_pos
            .insert(record.problem_index.clone(), self.problems.len());
        self.problems.push(record);
        Ok(())
    }

    pub fn insert_document(&mut self, doc: ContextDocument) -> Result<(), CorpusError> {
        if !is_header_token(&doc.doc_id) {
            return Err(CorpusError::Invalid {
                key: doc.doc_id,
                message: "doc id must be a non-empty token without whitespace".into(),
            });
        }
        if doc.body.trim().is_empty() {
            return Err(CorpusError::Invalid {
                key: doc.doc_id,
                message: "body is empty".into(),
            });
        }
        if doc.linked_problem.as_deref().is_some_and(|p| !is_header_token(p)) {
            return Err(CorpusError::Invalid {
                key: doc.doc_id,
                message: "linked problem must be a token without whitespace".into(),
            });
        }
        if self.doc_pos.contains_key(&doc.doc_id) {
            return Err(CorpusError::DuplicateDocId(doc.doc_id));
        }
        self.doc_pos.insert(doc.doc_id.clone(), self.documents.len());
        self.documents.push(doc);
        Ok(())
    }

    /// Exact-match retrieval by problem index.
    pub fn lookup_exact(&self, problem_index: &str) -> Option<&ProblemRecord> {
        self.problem_pos
            .get(problem_index)
            .map(|&i| &self.problems[i])
    }

    pub fn document(&self, doc_id: &str) -> Option<&ContextDocument> {
        self.doc_pos.get(doc_id).map(|&i| &self.documents[i])
    }

    /// Documents explicitly linked to a problem, in file order.
    pub fn documents_for<'a>(&'a self, problem_index: &'a str) -> impl Iterator<Item = &'a ContextDocument> + 'a {
        self.documents
            .iter()
            .filter(move |d| d.linked_problem.as_deref() == Some(problem_index))
    }

    pub fn problems(&self) -> &[ProblemRecord] {
        &self.problems
    }

    pub fn documents(&self) -> &[ContextDocument] {
        &self.documents
    }

    pub fn problem_indices(&self) -> Vec<String> {
        self.problems.iter().map(|p| p.problem_index.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty() && self.documents.is_empty()
    }
}

/// Reads and parses a corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    super::format::parse_corpus(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_hits_and_misses() {
        let mut corpus = Corpus::new();
        corpus
            .insert_problem(ProblemRecord::new("2.5-1", "Find i."))
            .unwrap();
        assert_eq!(corpus.lookup_exact("2.5-1").unwrap().chapter, "2");
        assert!(corpus.lookup_exact("9.9-9").is_none());
    }

    #[test]
    fn duplicate_index_rejected() {
        let mut corpus = Corpus::new();
        corpus
            .insert_problem(ProblemRecord::new("2.5-1", "a"))
            .unwrap();
        let err = corpus
            .insert_problem(ProblemRecord::new("2.5-1", "b"))
            .unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateIndex(ref i) if i == "2.5-1"));
        assert_eq!(corpus.len(), 1);
    }

    #[test]
    fn invalid_records_rejected() {
        let mut corpus = Corpus::new();
        assert!(corpus.insert_problem(ProblemRecord::new("", "x")).is_err());
        assert!(corpus.insert_problem(ProblemRecord::new("1 2", "x")).is_err());
        assert!(corpus.insert_problem(ProblemRecord::new("1.1-1", "  ")).is_err());
        assert!(corpus
            .insert_document(ContextDocument::new("d1", DocSource::LectureNotes, ""))
            .is_err());
    }

    #[test]
    fn linked_documents() {
        let mut corpus = Corpus::new();
        corpus
            .insert_document(ContextDocument::new("a", DocSource::ProblemNotes, "x").linked_to("2.5-1"))
            .unwrap();
        corpus
            .insert_document(ContextDocument::new("b", DocSource::LectureNotes, "y"))
            .unwrap();
        let ids: Vec<_> = corpus.documents_for("2.5-1").map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["a"]);
    }

    #[test]
    fn chapter_from_index() {
        assert_eq!(default_chapter("3.4-4"), "3");
        assert_eq!(default_chapter("P1"), "P1");
    }
}
