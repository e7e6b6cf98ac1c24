//! The human-editable corpus file format.
//!
//! ```text
//! @problem 2.5-1
//! #statement
//! Find the current i in the circuit ...
//! #reference_solution
//! ...
//! #method_notes
//! ...
//! #tags
//! kcl, current division
//! @end
//!
//! @doc kcl-notes lecture_notes 2.5-1
//! #body
//! Kirchhoff's current law states ...
//! @end
//! ```
//!
//! A `@doc` header may carry an optional third token naming the linked
//! problem. `@problem` records also accept an optional `#chapter` block;
//! without it the chapter is the index prefix before the first `.` or `-`.
//! Block values are trimmed of surrounding whitespace. A content line that
//! would start with `#`, `@` or `\` is written with a leading `\`, which the
//! parser removes.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::corpus::{default_chapter, ContextDocument, Corpus, CorpusError, DocSource, ProblemRecord};

enum Header {
    Problem(String),
    Doc {
        id: String,
        source: DocSource,
        linked: Option<String>,
    },
}

impl Header {
    fn key(&self) -> &str {
        match self {
            Header::Problem(i) => i,
            Header::Doc { id, .. } => id,
        }
    }

    fn allowed(&self, field: &str) -> bool {
        match self {
            Header::Problem(_) => matches!(
                field,
                "statement" | "reference_solution" | "method_notes" | "tags" | "chapter"
            ),
            Header::Doc { .. } => field == "body",
        }
    }
}

struct Open {
    header: Header,
    header_line: usize,
    fields: HashMap<String, Vec<String>>,
    current: Option<String>,
}

fn parse_error(line: usize, record: Option<&str>, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        line,
        record: record.map(str::to_string),
        message: message.into(),
    }
}

fn parse_header(line_no: usize, line: &str) -> Result<Header, CorpusError> {
    let mut parts = line.split_whitespace();
    let kind = parts.next().unwrap_or_default();
    let args: Vec<&str> = parts.collect();
    match (kind, args.as_slice()) {
        ("@problem", [index]) => Ok(Header::Problem(index.to_string())),
        ("@problem", _) => Err(parse_error(line_no, None, "expected `@problem <index>`")),
        ("@doc", [id, source, rest @ ..]) if rest.len() <= 1 => {
            let source = source
                .parse()
                .map_err(|m: String| parse_error(line_no, Some(id), m))?;
            Ok(Header::Doc {
                id: id.to_string(),
                source,
                linked: rest.first().map(|s| s.to_string()),
            })
        }
        ("@doc", _) => Err(parse_error(
            line_no,
            None,
            "expected `@doc <doc_id> <source> [problem_index]`",
        )),
        _ => Err(parse_error(line_no, None, format!("unexpected line `{line}`"))),
    }
}

fn block_value(lines: Option<Vec<String>>) -> String {
    lines
        .map(|l| l.join("\n").trim().to_string())
        .unwrap_or_default()
}

fn finish(mut open: Open, line_no: usize, corpus: &mut Corpus) -> Result<(), CorpusError> {
    let key = open.header.key().to_string();
    let mut take = |name: &str| block_value(open.fields.remove(name));
    match &open.header {
        Header::Problem(index) => {
            let statement = take("statement");
            if statement.is_empty() {
                return Err(parse_error(open.header_line, Some(&key), "missing #statement"));
            }
            let chapter = match take("chapter") {
                c if c.is_empty() => default_chapter(index),
                c => c,
            };
            let tags = take("tags")
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect();
            let record = ProblemRecord {
                problem_index: index.clone(),
                statement,
                reference_solution: take("reference_solution"),
                method_notes: take("method_notes"),
                topic_tags: tags,
                chapter,
            };
            corpus.insert_problem(record).map_err(|e| locate(e, line_no, &key))
        }
        Header::Doc { id, source, linked } => {
            let body = take("body");
            if body.is_empty() {
                return Err(parse_error(open.header_line, Some(&key), "missing #body"));
            }
            let doc = ContextDocument {
                doc_id: id.clone(),
                body,
                source: *source,
                linked_problem: linked.clone(),
            };
            corpus.insert_document(doc).map_err(|e| locate(e, line_no, &key))
        }
    }
}

fn locate(err: CorpusError, line: usize, key: &str) -> CorpusError {
    match err {
        CorpusError::Invalid { message, .. } => parse_error(line, Some(key), message),
        other => other,
    }
}

/// Parses corpus text. Line numbers in errors are 1-based.
pub fn parse_corpus(text: &str) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::new();
    let mut open: Option<Open> = None;
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.strip_suffix('\r').unwrap_or(raw);

        let Some(rec) = open.as_mut() else {
            if line.trim().is_empty() {
                continue;
            }
            open = Some(Open {
                header: parse_header(line_no, line.trim())?,
                header_line: line_no,
                fields: HashMap::new(),
                current: None,
            });
            continue;
        };

        if line.trim_end() == "@end" {
            let rec = open.take().expect("record open");
            finish(rec, line_no, &mut corpus)?;
        } else if line.starts_with('@') {
            return Err(parse_error(
                line_no,
                Some(rec.header.key()),
                "record not terminated by @end",
            ));
        } else if let Some(name) = line.strip_prefix('#') {
            let name = name.trim();
            if !rec.header.allowed(name) {
                return Err(parse_error(
                    line_no,
                    Some(rec.header.key()),
                    format!("unknown field block `#{name}`"),
                ));
            }
            if rec.fields.contains_key(name) {
                return Err(parse_error(
                    line_no,
                    Some(rec.header.key()),
                    format!("duplicate field block `#{name}`"),
                ));
            }
            rec.fields.insert(name.to_string(), Vec::new());
            rec.current = Some(name.to_string());
        } else {
            let content = line.strip_prefix('\\').unwrap_or(line);
            match &rec.current {
                Some(field) => rec
                    .fields
                    .get_mut(field)
                    .expect("current field registered")
                    .push(content.to_string()),
                None if line.trim().is_empty() => {}
                None => {
                    return Err(parse_error(
                        line_no,
                        Some(rec.header.key()),
                        "content outside a field block",
                    ))
                }
            }
        }
    }

    if let Some(rec) = open {
        return Err(parse_error(
            last_line,
            Some(rec.header.key()),
            "unexpected end of file, missing @end",
        ));
    }
    Ok(corpus)
}

fn write_block(out: &mut String, name: &str, value: &str) {
    if value.is_empty() {
        return;
    }
    let _ = writeln!(out, "#{name}");
    for line in value.lines() {
        if line.starts_with(['#', '@', '\\']) {
            out.push('\\');
        }
        out.push_str(line);
        out.push('\n');
    }
}

/// Serializes a corpus to the file format; `parse_corpus` reads it back to an
/// equal corpus.
pub fn write_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for p in corpus.problems() {
        let _ = writeln!(out, "@problem {}", p.problem_index);
        write_block(&mut out, "statement", &p.statement);
        write_block(&mut out, "reference_solution", &p.reference_solution);
        write_block(&mut out, "method_notes", &p.method_notes);
        write_block(&mut out, "tags", &p.topic_tags.join(", "));
        if p.chapter != default_chapter(&p.problem_index) {
            write_block(&mut out, "chapter", &p.chapter);
        }
        out.push_str("@end\n\n");
    }
    for d in corpus.documents() {
        let _ = write!(out, "@doc {} {}", d.doc_id, d.source);
        if let Some(p) = &d.linked_problem {
            let _ = write!(out, " {p}");
        }
        out.push('\n');
        write_block(&mut out, "body", &d.body);
        out.push_str("@end\n\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "\
@problem 2.5-1
#statement
Find the current i.

It flows through R2.
#reference_solution
i = 2 A
#tags
kcl, current division
@end

@doc kcl lecture_notes 2.5-1
#body
\\#1 rule: the sum of currents leaving a node is zero.
@end
";

    #[test]
    fn parses_sample() {
        let corpus = parse_corpus(SAMPLE).unwrap();
        let p = corpus.lookup_exact("2.5-1").unwrap();
        assert_eq!(p.statement, "Find the current i.\n\nIt flows through R2.");
        assert_eq!(p.reference_solution, "i = 2 A");
        assert_eq!(p.topic_tags, ["kcl", "current division"]);
        assert!(p.method_notes.is_empty());
        let d = corpus.document("kcl").unwrap();
        assert_eq!(d.source, DocSource::LectureNotes);
        assert_eq!(d.linked_problem.as_deref(), Some("2.5-1"));
        assert!(d.body.starts_with("#1 rule"));
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        assert!(parse_corpus("").unwrap().is_empty());
        assert!(parse_corpus("\n\n  \n").unwrap().is_empty());
    }

    #[test]
    fn duplicate_index_names_the_index() {
        let text = "@problem 2.5-1\n#statement\na\n@end\n@problem 2.5-1\n#statement\nb\n@end\n";
        let err = parse_corpus(text).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateIndex(ref i) if i == "2.5-1"), "{err}");
        assert!(err.to_string().contains("2.5-1"));
    }

    #[test]
    fn unknown_block_is_an_error() {
        let text = "@problem 1.1-1\n#statement\na\n#answer\nb\n@end\n";
        match parse_corpus(text).unwrap_err() {
            CorpusError::Parse { line, record, message } => {
                assert_eq!(line, 4);
                assert_eq!(record.as_deref(), Some("1.1-1"));
                assert!(message.contains("#answer"));
            }
            other => panic!("unexpected {other:?}"),
        }
        // body belongs to documents only
        assert!(parse_corpus("@problem 1\n#statement\na\n#body\nb\n@end\n").is_err());
    }

    #[test]
    fn malformed_records() {
        for text in [
            "@problem\n#statement\na\n@end\n",
            "@problem 1.1-1\n#statement\na\n",
            "@problem 1.1-1\n#statement\na\n@problem 1.1-2\n",
            "@problem 1.1-1\nstray\n#statement\na\n@end\n",
            "@problem 1.1-1\n#method_notes\na\n@end\n",
            "@doc d1 textbook\n#body\nx\n@end\n",
            "@doc d1 lecture_notes\n@end\n",
            "hello\n",
            "@problem 1.1-1\n#statement\na\n#statement\nb\n@end\n",
        ] {
            assert!(
                matches!(parse_corpus(text), Err(CorpusError::Parse { .. })),
                "accepted: {text:?}"
            );
        }
    }

    #[test]
    fn crlf_and_chapter_override() {
        let text = "@problem A1\r\n#statement\r\nx\r\n#chapter\r\n7\r\n@end\r\n";
        let corpus = parse_corpus(text).unwrap();
        assert_eq!(corpus.lookup_exact("A1").unwrap().chapter, "7");
        assert_eq!(corpus.lookup_exact("A1").unwrap().statement, "x");
    }

    fn block() -> impl Strategy<Value = String> {
        prop::collection::vec("[#@\\\\]?[a-zA-Z0-9 =/.,()^_{}$+*-]{0,30}", 1..5).prop_map(|lines| {
            lines.join("\n").trim().to_string()
        })
    }

    fn record() -> impl Strategy<Value = ProblemRecord> {
        (
            "[0-9]\\.[0-9]-[0-9]{1,2}",
            block().prop_filter("non-empty", |s| !s.is_empty()),
            block(),
            block(),
            prop::collection::vec("[a-z][a-z ]{0,10}[a-z]", 0..4),
        )
            .prop_map(|(index, statement, solution, notes, tags)| {
                ProblemRecord::new(index, statement)
                    .with_reference_solution(solution)
                    .with_method_notes(notes)
                    .with_tags(tags)
            })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_round_trips(records in prop::collection::vec(record(), 0..8)) {
            let mut corpus = Corpus::new();
            for r in records {
                let _ = corpus.insert_problem(r);
            }
            let text = write_corpus(&corpus);
            let back = parse_corpus(&text).unwrap();
            prop_assert_eq!(back.problems(), corpus.problems());
        }
    }
}
