//! Ontology term index: loading from TSV tables and extracting labels from
//! N-Triples.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::normalize::normalize;

pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const SKOS_PREF_LABEL: &str = "http://www.w3.org/2004/02/skos/core#prefLabel";

const TSV_HEADER: &str = "iri\tlabel\tontology_id";

#[derive(Debug, thiserror::Error)]
pub enum OntologyError {
    #[error("term table line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("N-Triples line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no usable ontology terms")]
    EmptyIndex,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyTerm {
    pub iri: String,
    pub label: String,
    pub normalized_label: String,
    pub ontology_id: String,
}

/// Ontology terms in insertion order, with the index ranges each ontology
/// occupies. A term with several labels appears once per distinct
/// normalized label.
#[derive(Debug, Clone, PartialEq)]
pub struct TermIndex {
    terms: Vec<OntologyTerm>,
    by_ontology: BTreeMap<String, Vec<Range<usize>>>,
}

impl TermIndex {
    /// Builds an index from `(iri, label, ontology_id)` rows. Labels that
    /// normalize to nothing are dropped with a warning, as are repeated
    /// `(iri, ontology_id, normalized label)` combinations.
    pub fn from_rows<I, A, B, C>(rows: I) -> Result<Self, OntologyError>
    where
        I: IntoIterator<Item = (A, B, C)>,
        A: Into<String>,
        B: Into<String>,
        C: Into<String>,
    {
        let mut seen = HashSet::new();
        let mut terms = Vec::new();
        for (iri, label, ontology_id) in rows {
            let (iri, label, ontology_id) = (iri.into(), label.into(), ontology_id.into());
            let Some(normalized_label) = normalize(&label) else {
                log::warn!("dropping label {label:?} of {iri}: too short after normalization");
                continue;
            };
            if seen.insert((iri.clone(), ontology_id.clone(), normalized_label.clone())) {
                terms.push(OntologyTerm {
                    iri,
                    label,
                    normalized_label,
                    ontology_id,
                });
            }
        }
        if terms.is_empty() {
            return Err(OntologyError::EmptyIndex);
        }
        Ok(Self::from_terms(terms))
    }

    fn from_terms(terms: Vec<OntologyTerm>) -> Self {
        let mut by_ontology: BTreeMap<String, Vec<Range<usize>>> = BTreeMap::new();
        let mut start = 0;
        for i in 1..=terms.len() {
            if i == terms.len() || terms[i].ontology_id != terms[start].ontology_id {
                by_ontology
                    .entry(terms[start].ontology_id.clone())
                    .or_default()
                    .push(start..i);
                start = i;
            }
        }
        TermIndex { terms, by_ontology }
    }

    pub fn terms(&self) -> &[OntologyTerm] {
        &self.terms
    }

    pub fn get(&self, term_ref: usize) -> Option<&OntologyTerm> {
        self.terms.get(term_ref)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Ontology ids in lexicographic order.
    pub fn ontology_ids(&self) -> impl Iterator<Item = &str> {
        self.by_ontology.keys().map(String::as_str)
    }

    pub fn ranges(&self, ontology_id: &str) -> &[Range<usize>] {
        self.by_ontology.get(ontology_id).map_or(&[], Vec::as_slice)
    }

    pub fn normalized_labels(&self) -> Vec<&str> {
        self.terms.iter().map(|t| t.normalized_label.as_str()).collect()
    }

    /// Concatenates indexes; the usual dedupe applies across them.
    pub fn merge(indexes: impl IntoIterator<Item = TermIndex>) -> Result<Self, OntologyError> {
        let rows: Vec<_> = indexes
            .into_iter()
            .flat_map(|ix| ix.terms)
            .map(|t| (t.iri, t.label, t.ontology_id))
            .collect();
        Self::from_rows(rows)
    }

    /// Writes the `iri\tlabel\tontology_id` table. Backslash, tab, newline
    /// and carriage return inside values are written as `\\`, `\t`, `\n`,
    /// `\r`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TSV_HEADER}")?;
        for t in &self.terms {
            writeln!(
                w,
                "{}\t{}\t{}",
                escape_tsv(&t.iri),
                escape_tsv(&t.label),
                escape_tsv(&t.ontology_id)
            )?;
        }
        w.flush()
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        self.write_tsv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self, OntologyError> {
        let mut rows = Vec::new();
        let mut lines = reader.lines();
        let Some(header) = lines.next() else {
            return Err(OntologyError::EmptyIndex);
        };
        if header?.trim_end_matches('\r') != TSV_HEADER {
            return Err(OntologyError::Format {
                line: 1,
                message: format!("expected header {TSV_HEADER:?}"),
            });
        }
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let format_err = |message: String| OntologyError::Format { line: line_no, message };
            if cols.len() != 3 {
                return Err(format_err(format!("expected 3 columns, found {}", cols.len())));
            }
            let mut vals = Vec::with_capacity(3);
            for c in cols {
                vals.push(unescape_tsv(c).map_err(format_err)?);
            }
            let ontology_id = vals.pop().unwrap();
            let label = vals.pop().unwrap();
            let iri = vals.pop().unwrap();
            if iri.is_empty() || ontology_id.is_empty() {
                return Err(format_err("iri and ontology_id must be non-empty".into()));
            }
            rows.push((iri, label, ontology_id));
        }
        Self::from_rows(rows)
    }

    pub fn load(path: &Path) -> Result<Self, OntologyError> {
        Self::from_tsv(BufReader::new(std::fs::File::open(path)?))
    }
}

pub fn load_term_table(path: &Path) -> Result<TermIndex, OntologyError> {
    TermIndex::load(path)
}

pub(crate) fn escape_tsv(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_tsv(s: &str) -> Result<String, String> {
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
            other => return Err(format!("bad escape \\{}", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// N-Triples

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal {
        value: String,
        language: Option<String>,
        datatype: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub subject: Term,
    pub predicate: String,
    pub object: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    /// Abort on the first malformed line.
    Strict,
    /// Skip malformed lines and count them.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NtriplesStats {
    pub lines: usize,
    pub triples: usize,
    pub label_triples: usize,
    pub skipped_lines: usize,
    pub blank_subjects: usize,
    /// `(line, message)` for each skipped line.
    pub errors: Vec<(usize, String)>,
}

#[derive(Debug, Clone)]
pub struct NtriplesExtraction {
    pub index: TermIndex,
    pub stats: NtriplesStats,
}

/// Parses one N-Triples line. Blank and comment-only lines give `None`.
pub fn parse_ntriples_line(line: &str) -> Result<Option<Triple>, String> {
    let mut p = Cursor { s: line, pos: 0 };
    p.skip_ws();
    if p.at_end() || p.peek() == Some('#') {
        return Ok(None);
    }
    let subject = match p.peek() {
        Some('<') => Term::Iri(p.iri()?),
        Some('_') => Term::Blank(p.blank()?),
        _ => return Err(p.err("expected IRI or blank node subject")),
    };
    p.skip_ws();
    if p.peek() != Some('<') {
        return Err(p.err("expected IRI predicate"));
    }
    let predicate = p.iri()?;
    p.skip_ws();
    let object = match p.peek() {
        Some('<') => Term::Iri(p.iri()?),
        Some('_') => Term::Blank(p.blank()?),
        Some('"') => p.literal()?,
        _ => return Err(p.err("expected object")),
    };
    p.skip_ws();
    if p.peek() != Some('.') {
        return Err(p.err("missing terminating '.'"));
    }
    p.bump();
    p.skip_ws();
    if !p.at_end() && p.peek() != Some('#') {
        return Err(p.err("trailing content after '.'"));
    }
    Ok(Some(Triple {
        subject,
        predicate,
        object,
    }))
}

/// Decodes the N-Triples string escapes `\t \b \n \r \f \" \' \\`,
/// `\uXXXX` and `\UXXXXXXXX`.
pub fn decode_escapes(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        let e = chars.next().ok_or("dangling backslash")?;
        out.push(match e {
            't' => '\t',
            'b' => '\u{8}',
            'n' => '\n',
            'r' => '\r',
            'f' => '\u{c}',
            '"' => '"',
            '\'' => '\'',
            '\\' => '\\',
            'u' | 'U' => {
                let width = if e == 'u' { 4 } else { 8 };
                let hex: String = chars.by_ref().take(width).collect();
                if hex.len() != width || !hex.chars().all(|h| h.is_ascii_hexdigit()) {
                    return Err(format!("bad \\{e} escape"));
                }
                let code = u32::from_str_radix(&hex, 16).map_err(|e| e.to_string())?;
                char::from_u32(code).ok_or_else(|| format!("invalid code point U+{code:X}"))?
            }
            other => return Err(format!("unknown escape \\{other}")),
        });
    }
    Ok(out)
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.s[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn err(&self, message: &str) -> String {
        format!("{message} at column {}", self.s[..self.pos].chars().count() + 1)
    }

    fn iri(&mut self) -> Result<String, String> {
        self.bump();
        let start = self.pos;
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated IRI")),
                Some('>') => break,
                Some('\\') => match self.peek() {
                    Some('u' | 'U') => {}
                    _ => return Err(self.err("only \\u and \\U escapes are allowed in IRIs")),
                },
                Some(c) if c <= ' ' || "<\"{}|^`".contains(c) => {
                    return Err(self.err(&format!("character {c:?} not allowed in IRI")))
                }
                Some(_) => {}
            }
        }
        let iri = decode_escapes(&self.s[start..self.pos - 1]).map_err(|m| self.err(&m))?;
        if !iri.contains(':') {
            return Err(self.err("relative IRI"));
        }
        Ok(iri)
    }

    fn blank(&mut self) -> Result<String, String> {
        if !self.s[self.pos..].starts_with("_:") {
            return Err(self.err("expected '_:'"));
        }
        self.pos += 2;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.') {
                self.bump();
            } else {
                break;
            }
        }
        // a label may not end with '.'; that dot terminates the triple
        while self.pos > start && self.s[..self.pos].ends_with('.') {
            self.pos -= 1;
        }
        if self.pos == start {
            return Err(self.err("empty blank node label"));
        }
        Ok(self.s[start..self.pos].to_string())
    }

    fn literal(&mut self) -> Result<Term, String> {
        self.bump();
        let start = self.pos;
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated literal")),
                Some('"') => break,
                Some('\\') => {
                    if self.bump().is_none() {
                        return Err(self.err("unterminated literal"));
                    }
                }
                Some(_) => {}
            }
        }
        let value = decode_escapes(&self.s[start..self.pos - 1]).map_err(|m| self.err(&m))?;
        let mut language = None;
        let mut datatype = None;
        if self.peek() == Some('@') {
            self.bump();
            let tag_start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                self.bump();
            }
            let tag = &self.s[tag_start..self.pos];
            let mut parts = tag.split('-');
            let primary_ok = parts.next().is_some_and(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphabetic()));
            if !primary_ok || parts.any(str::is_empty) {
                return Err(self.err("malformed language tag"));
            }
            language = Some(tag.to_string());
        } else if self.s[self.pos..].starts_with("^^") {
            self.pos += 2;
            if self.peek() != Some('<') {
                return Err(self.err("expected datatype IRI"));
            }
            datatype = Some(self.iri()?);
        }
        Ok(Term::Literal {
            value,
            language,
            datatype,
        })
    }
}

/// Extracts `rdfs:label` and `skos:prefLabel` literals from an N-Triples
/// stream. Terms keep the order of first occurrence.
pub fn extract_labels_ntriples_from<R: BufRead>(
    mut reader: R,
    ontology_id: &str,
    mode: ParseMode,
) -> Result<NtriplesExtraction, OntologyError> {
    let mut stats = NtriplesStats::default();
    let mut rows = Vec::new();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        stats.lines += 1;
        let line_no = stats.lines;
        let parsed = std::str::from_utf8(&buf)
            .map_err(|_| "invalid UTF-8".to_string())
            .and_then(|s| parse_ntriples_line(s.trim_end_matches(['\n', '\r'])));
        let triple = match parsed {
            Ok(Some(t)) => t,
            Ok(None) => continue,
            Err(message) => match mode {
                ParseMode::Strict => return Err(OntologyError::Parse { line: line_no, message }),
                ParseMode::Lenient => {
                    log::warn!("skipping N-Triples line {line_no}: {message}");
                    stats.skipped_lines += 1;
                    stats.errors.push((line_no, message));
                    continue;
                }
            },
        };
        stats.triples += 1;
        if triple.predicate != RDFS_LABEL && triple.predicate != SKOS_PREF_LABEL {
            continue;
        }
        let Term::Literal { value, .. } = triple.object else {
            continue;
        };
        match triple.subject {
            Term::Iri(iri) => {
                stats.label_triples += 1;
                rows.push((iri, value, ontology_id.to_string()));
            }
            _ => stats.blank_subjects += 1,
        }
    }
    let index = TermIndex::from_rows(rows)?;
    Ok(NtriplesExtraction { index, stats })
}

pub fn extract_labels_ntriples(
    path: &Path,
    ontology_id: &str,
    mode: ParseMode,
) -> Result<NtriplesExtraction, OntologyError> {
    extract_labels_ntriples_from(BufReader::new(std::fs::File::open(path)?), ontology_id, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn extract(src: &str, mode: ParseMode) -> Result<NtriplesExtraction, OntologyError> {
        extract_labels_ntriples_from(src.as_bytes(), "X", mode)
    }

    fn pairs(ix: &TermIndex) -> Vec<(&str, &str)> {
        ix.terms().iter().map(|t| (t.iri.as_str(), t.label.as_str())).collect()
    }

    #[test]
    fn table_rows_and_dedupe() {
        let tsv = "iri\tlabel\tontology_id\n\
                   http://x/1\ttumor region\tA\n\
                   http://x/2\tab\tA\n\
                   http://x/1\ttumor region\tA\n\
                   http://x/3\tsource organ\tB\n\
                   http://x/4\tcell type\tA\n";
        let ix = TermIndex::from_tsv(tsv.as_bytes()).unwrap();
        assert_eq!(ix.len(), 3);
        assert_eq!(ix.ranges("A"), &[0..1, 2..3]);
        assert_eq!(ix.ranges("B"), &[1..2]);
        assert_eq!(ix.ontology_ids().collect::<Vec<_>>(), ["A", "B"]);
    }

    #[test]
    fn table_errors_carry_line() {
        let bad = "iri\tlabel\tontology_id\nhttp://x/1\tgood label\tA\nhttp://x/2\tmissing\n";
        match TermIndex::from_tsv(bad.as_bytes()) {
            Err(OntologyError::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            TermIndex::from_tsv("iri\tlabel\tontology_id\nhttp://x\tab\tA\n".as_bytes()),
            Err(OntologyError::EmptyIndex)
        ));
        assert!(matches!(TermIndex::from_tsv("a\tb\n".as_bytes()), Err(OntologyError::Format { line: 1, .. })));
    }

    #[test]
    fn tsv_round_trip_with_awkward_labels() {
        let ix = TermIndex::from_rows([
            ("http://x/1", "tab\there", "A"),
            ("http://x/2", "back\\slash\nnewline", "B"),
            ("http://x/3", "plain label", "A"),
        ])
        .unwrap();
        let mut buf = Vec::new();
        ix.write_tsv(&mut buf).unwrap();
        assert_eq!(TermIndex::from_tsv(buf.as_slice()).unwrap(), ix);
    }

    #[test]
    fn spec_lines() {
        let src = "<http://x/T1> <http://www.w3.org/2000/01/rdf-schema#label> \"tumor region\"@en .\n\
                   <http://x/T2> <http://www.w3.org/2004/02/skos/core#prefLabel> \"source organ\" .\n\
                   <http://x/T3> <http://x/otherProp> \"ignored\" .\n\
                   \"bad\n";
        let ex = extract(src, ParseMode::Lenient).unwrap();
        assert_eq!(pairs(&ex.index), [("http://x/T1", "tumor region"), ("http://x/T2", "source organ")]);
        assert_eq!(ex.stats.skipped_lines, 1);
        assert_eq!(ex.stats.errors[0].0, 4);
        assert!(matches!(extract(src, ParseMode::Strict), Err(OntologyError::Parse { line: 4, .. })));
    }

    #[test]
    fn literal_forms() {
        let t = parse_ntriples_line(r#"<http://a> <http://b> "x\"y\u00e9\U0001F600"^^<http://www.w3.org/2001/XMLSchema#string> . # c"#)
            .unwrap()
            .unwrap();
        assert_eq!(
            t.object,
            Term::Literal {
                value: "x\"y\u{e9}\u{1F600}".into(),
                language: None,
                datatype: Some("http://www.w3.org/2001/XMLSchema#string".into()),
            }
        );
        let t = parse_ntriples_line("_:b1 <http://b> \"v\"@en-GB.").unwrap().unwrap();
        assert_eq!(t.subject, Term::Blank("b1".into()));
        assert!(matches!(t.object, Term::Literal { language: Some(ref l), .. } if l == "en-GB"));
        let t = parse_ntriples_line("<http://a> <http://b> _:o.").unwrap().unwrap();
        assert_eq!(t.object, Term::Blank("o".into()));
    }

    #[test]
    fn malformed_lines() {
        for line in [
            "<http://a> <http://b> \"x\"",
            "<http://a <http://b> \"x\" .",
            "<http://a> <http://b> \"x .",
            "<http://a> \"p\" \"x\" .",
            "<http://a> <http://b> \"x\"@ .",
            "<http://a> <http://b> \"\\q\" .",
            "<http://a> <http://b> \"\\u12\" .",
            "<rel> <http://b> \"x\" .",
            "<http://a> <http://b> \"x\" . extra",
            "<http://a b> <http://b> \"x\" .",
        ] {
            assert!(parse_ntriples_line(line).is_err(), "{line}");
        }
        assert_eq!(parse_ntriples_line("   # only a comment").unwrap(), None);
        assert_eq!(parse_ntriples_line("").unwrap(), None);
    }

    #[test]
    fn both_label_properties_kept_blank_subjects_skipped() {
        let src = "<http://x/a> <http://www.w3.org/2000/01/rdf-schema#label> \"heart\" .\n\
                   <http://x/a> <http://www.w3.org/2004/02/skos/core#prefLabel> \"cardiac organ\" .\n\
                   _:n <http://www.w3.org/2000/01/rdf-schema#label> \"anon\" .\n\
                   <http://x/b> <http://www.w3.org/2000/01/rdf-schema#label> <http://x/notliteral> .\n";
        let ex = extract(src, ParseMode::Strict).unwrap();
        assert_eq!(pairs(&ex.index), [("http://x/a", "heart"), ("http://x/a", "cardiac organ")]);
        assert_eq!(ex.stats.blank_subjects, 1);
        assert_eq!(ex.stats.label_triples, 2);
    }

    #[test]
    fn line_order_does_not_change_term_set() {
        let lines = [
            "<http://x/1> <http://www.w3.org/2000/01/rdf-schema#label> \"alpha one\" .",
            "<http://x/2> <http://www.w3.org/2000/01/rdf-schema#label> \"beta two\" .",
            "<http://x/3> <http://www.w3.org/2004/02/skos/core#prefLabel> \"gamma three\" .",
        ];
        let fwd = extract(&lines.join("\n"), ParseMode::Strict).unwrap();
        let rev: Vec<_> = lines.iter().rev().copied().collect();
        let rev = extract(&rev.join("\n"), ParseMode::Strict).unwrap();
        let mut a = pairs(&fwd.index);
        let mut b = pairs(&rev.index);
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    fn encode(s: &str, choices: &[u8]) -> String {
        let mut out = String::new();
        for (c, k) in s.chars().zip(choices.iter().cycle()) {
            match (c, k % 3) {
                ('"', _) => out.push_str("\\\""),
                ('\\', _) => out.push_str("\\\\"),
                ('\n', _) => out.push_str("\\n"),
                ('\r', _) => out.push_str("\\r"),
                ('\t', 0) => out.push_str("\\t"),
                (_, 1) if (c as u32) <= 0xFFFF => out.push_str(&format!("\\u{:04X}", c as u32)),
                (_, 2) => out.push_str(&format!("\\U{:08X}", c as u32)),
                _ => out.push(c),
            }
        }
        out
    }

    proptest! {
        #[test]
        fn escapes_decode_to_original(s in "\\PC{0,24}|[a-z\"\\\\\n\t\r ]{0,24}", choices in prop::collection::vec(any::<u8>(), 1..8)) {
            let encoded = encode(&s, &choices);
            let line = format!("<http://x/t> <{RDFS_LABEL}> \"{encoded}\"@en .");
            let t = parse_ntriples_line(&line).unwrap().unwrap();
            let Term::Literal { value, .. } = t.object else { panic!("not a literal") };
            prop_assert_eq!(value, s);
        }
    }
}
