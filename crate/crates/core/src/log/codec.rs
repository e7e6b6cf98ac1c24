//! One event per line:
//!
//! ```text
//! v1 <TAB> event_id <TAB> unix_ms <TAB> student_id <TAB> problem_index <TAB> phase <TAB> kind <TAB> <len>:<payload>
//! ```
//!
//! String fields escape `\`, tab, CR and LF with backslash sequences. The
//! payload is prefixed with the byte length of its unescaped form, which the
//! reader checks.

use chrono::{TimeZone, Utc};

use super::event::InteractionEvent;

const VERSION: &str = "v1";

fn escape_into(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(format!("bad escape sequence `\\{}`", other.unwrap_or(' '))),
        }
    }
    Ok(out)
}

pub(crate) fn encode(event: &InteractionEvent) -> String {
    let mut line = String::with_capacity(96 + event.payload.len());
    line.push_str(VERSION);
    for field in [&event.event_id, &event.occurred_at.timestamp_millis().to_string()] {
        line.push('\t');
        escape_into(&mut line, field);
    }
    line.push('\t');
    escape_into(&mut line, &event.student_id);
    line.push('\t');
    escape_into(&mut line, &event.problem_index);
    line.push('\t');
    line.push_str(event.phase.as_str());
    line.push('\t');
    line.push_str(event.kind.as_str());
    line.push('\t');
    line.push_str(&event.payload.len().to_string());
    line.push(':');
    escape_into(&mut line, &event.payload);
    line.push('\n');
    line
}

pub(crate) fn decode(line: &str) -> Result<InteractionEvent, String> {
    let fields: Vec<&str> = line.splitn(8, '\t').collect();
    let [version, id, ms, student, problem, phase, kind, payload] = fields[..] else {
        return Err(format!("expected 8 fields, found {}", fields.len()));
    };
    if version != VERSION {
        return Err(format!("unsupported record version `{version}`"));
    }
    let ms: i64 = ms.parse().map_err(|_| format!("bad timestamp `{ms}`"))?;
    let occurred_at = Utc
        .timestamp_millis_opt(ms)
        .single()
        .ok_or_else(|| format!("timestamp out of range: {ms}"))?;
    let (len, escaped) = payload
        .split_once(':')
        .ok_or("payload is missing its length prefix")?;
    let len: usize = len.parse().map_err(|_| format!("bad payload length `{len}`"))?;
    let payload = unescape(escaped)?;
    if payload.len() != len {
        return Err(format!(
            "payload length {} does not match prefix {len}",
            payload.len()
        ));
    }
    Ok(InteractionEvent {
        event_id: unescape(id)?,
        occurred_at,
        student_id: unescape(student)?,
        problem_index: unescape(problem)?,
        phase: phase.parse()?,
        kind: kind.parse()?,
        payload,
    })
}
