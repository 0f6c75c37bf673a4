//! Dump-file ingestion: parse question posts, strip markup and code,
//! and restrict the corpus to the most frequent tags.
//!
//! Two input formats are supported: the `Posts.xml` dump layout (one
//! `<row .../>` element per post) and a line-delimited layout for
//! synthetic corpora (`id<TAB>title<TAB>body` plus a tag sidecar file).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("corpus has {found} distinct tags, {requested} requested")]
    NotEnoughTags { found: usize, requested: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Dump layout selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpFormat {
    /// `Posts.xml`: one `<row .../>` element per post.
    PostsXml,
    /// Tab-separated `id<TAB>title<TAB>body` lines plus a tag sidecar.
    LineRecords,
}

/// Lenient parsing collects per-record errors and continues; strict
/// parsing aborts on the first malformed record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Lenient,
    Strict,
}

/// A question as it appears in the dump.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPost {
    pub id: u64,
    pub title: String,
    pub body_html: String,
    pub tags: Vec<String>,
}

/// A question after markup and code removal: plain text plus tags.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanPost {
    pub id: u64,
    pub text: String,
    pub tags: Vec<String>,
}

/// The `k` most frequent tags, most frequent first, ties broken
/// lexicographically ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelCatalog {
    pub labels: Vec<String>,
    pub counts: Vec<usize>,
}

impl LabelCatalog {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.labels.iter().any(|l| l == tag)
    }

    pub fn index_of(&self, tag: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == tag)
    }
}

/// A record that could not be parsed, with its position in the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

/// Result of a dump parse: posts in stream order plus any record-level
/// errors that were skipped (lenient mode only).
#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    pub posts: Vec<RawPost>,
    pub record_errors: Vec<RecordError>,
}

// ---------------------------------------------------------------------
// Posts.xml parsing
// ---------------------------------------------------------------------

/// Parse a `Posts.xml` stream. Keeps only question posts
/// (`PostTypeId="1"`) that carry a `Tags` attribute; post order is
/// preserved. Elements may span lines (attribute values can contain
/// literal newlines).
pub fn parse_posts_xml<R: BufRead>(input: R, mode: ParseMode) -> Result<ParseReport, IngestError> {
    // Cap on a single element carried across lines; beyond this the
    // element is reported malformed instead of buffering forever.
    const CARRY_CAP: usize = 8 << 20;
    let mut report = ParseReport::default();
    let mut carry = String::new();
    let mut carry_line = 0usize;
    let record = |err: RecordError, report: &mut ParseReport| -> Result<(), IngestError> {
        match mode {
            ParseMode::Strict => Err(IngestError::MalformedRecord {
                line: err.line,
                message: err.message,
            }),
            ParseMode::Lenient => {
                report.record_errors.push(err);
                Ok(())
            }
        }
    };
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let (text, start_line) = if carry.is_empty() {
            (line, lineno)
        } else {
            carry.push('\n');
            carry.push_str(&line);
            (std::mem::take(&mut carry), carry_line)
        };
        let mut rest = text.as_str();
        while let Some(start) = rest.find("<row") {
            let after = &rest[start + 4..];
            // Require a real `<row` element, not e.g. `<rowdy>`.
            if !after.starts_with(|c: char| c.is_ascii_whitespace() || c == '/' || c == '>') {
                rest = after;
                continue;
            }
            match split_element(after) {
                Some((attrs_src, remainder)) => {
                    rest = remainder;
                    match parse_row(attrs_src, start_line) {
                        Ok(Some(post)) => report.posts.push(post),
                        Ok(None) => {}
                        Err(err) => record(err, &mut report)?,
                    }
                }
                None => {
                    // Unterminated on this line: carry into the next.
                    if after.len() <= CARRY_CAP {
                        carry = format!("<row{after}");
                        carry_line = start_line;
                    } else {
                        record(
                            RecordError {
                                line: start_line,
                                message: "oversized or unterminated <row> element".into(),
                            },
                            &mut report,
                        )?;
                    }
                    rest = "";
                }
            }
        }
    }
    if !carry.is_empty() {
        record(
            RecordError {
                line: carry_line,
                message: "unterminated <row> element at end of input".into(),
            },
            &mut report,
        )?;
    }
    Ok(report)
}

/// Split an element body at its terminating `>` (quote-aware). Returns
/// `None` when the element is unterminated.
fn split_element(s: &str) -> Option<(&str, &str)> {
    let mut in_quote: Option<char> = None;
    for (i, c) in s.char_indices() {
        match in_quote {
            Some(q) => {
                if c == q {
                    in_quote = None;
                }
            }
            None => match c {
                '"' | '\'' => in_quote = Some(c),
                '>' => return Some((&s[..i], &s[i + 1..])),
                _ => {}
            },
        }
    }
    None
}

fn parse_row(attrs_src: &str, line: usize) -> Result<Option<RawPost>, RecordError> {
    let attrs = parse_attributes(attrs_src).map_err(|message| RecordError { line, message })?;
    let post_type = attrs.get("PostTypeId").map(String::as_str).unwrap_or("");
    if post_type != "1" {
        return Ok(None);
    }
    let Some(tags_attr) = attrs.get("Tags") else {
        return Ok(None);
    };
    let id = attrs
        .get("Id")
        .ok_or_else(|| RecordError {
            line,
            message: "post missing Id".into(),
        })?
        .parse::<u64>()
        .ok()
        .filter(|&id| id > 0)
        .ok_or_else(|| RecordError {
            line,
            message: "Id is not a positive integer".into(),
        })?;
    let tags = parse_tag_list(tags_attr);
    if tags.is_empty() {
        return Ok(None);
    }
    Ok(Some(RawPost {
        id,
        title: attrs.get("Title").cloned().unwrap_or_default(),
        body_html: attrs.get("Body").cloned().unwrap_or_default(),
        tags,
    }))
}

/// Parse `name="value"` attribute pairs, decoding XML entities in values.
fn parse_attributes(src: &str) -> Result<HashMap<String, String>, String> {
    let mut out = HashMap::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        while i < bytes.len() && (bytes[i] as char).is_ascii_whitespace() {
            i += 1;
        }
        if i >= bytes.len() || bytes[i] == b'/' {
            break;
        }
        let name_start = i;
        while i < bytes.len() && bytes[i] != b'=' && !(bytes[i] as char).is_ascii_whitespace() {
            i += 1;
        }
        let name = &src[name_start..i];
        while i < bytes.len() && (bytes[i] as char).is_ascii_whitespace() {
            i += 1;
        }
        if i >= bytes.len() || bytes[i] != b'=' {
            return Err(format!("attribute `{name}` has no value"));
        }
        i += 1;
        while i < bytes.len() && (bytes[i] as char).is_ascii_whitespace() {
            i += 1;
        }
        if i >= bytes.len() || (bytes[i] != b'"' && bytes[i] != b'\'') {
            return Err(format!("attribute `{name}` value is not quoted"));
        }
        let quote = bytes[i];
        i += 1;
        let val_start = i;
        while i < bytes.len() && bytes[i] != quote {
            i += 1;
        }
        if i >= bytes.len() {
            return Err(format!("attribute `{name}` value is unterminated"));
        }
        out.insert(name.to_string(), decode_entities(&src[val_start..i]));
        i += 1;
    }
    Ok(out)
}

/// `<a><b>` → `["a", "b"]`; tags are lowercased.
fn parse_tag_list(s: &str) -> Vec<String> {
    let mut tags = Vec::new();
    let mut seen = HashSet::new();
    let mut rest = s;
    while let Some(open) = rest.find('<') {
        let Some(close) = rest[open..].find('>') else {
            break;
        };
        let tag = rest[open + 1..open + close].trim().to_lowercase();
        rest = &rest[open + close + 1..];
        if !tag.is_empty() && !tag.contains('<') && seen.insert(tag.clone()) {
            tags.push(tag);
        }
    }
    tags
}

// ---------------------------------------------------------------------
// Line-record parsing
// ---------------------------------------------------------------------

/// Parse the line-delimited layout: `id<TAB>title<TAB>body` records and
/// a sidecar of `id<TAB>tag1,tag2,...` lines. Posts without a sidecar
/// entry (or with an empty tag list) are skipped, mirroring the XML
/// path's "questions with tags only" rule.
pub fn parse_posts_lines<R1: BufRead, R2: BufRead>(
    posts: R1,
    tags: R2,
    mode: ParseMode,
) -> Result<ParseReport, IngestError> {
    let mut report = ParseReport::default();
    let mut tag_map: HashMap<u64, Vec<String>> = HashMap::new();
    for (lineno, line) in tags.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_tag_line(&line) {
            Some((id, tags)) => {
                tag_map.insert(id, tags);
            }
            None => {
                let err = RecordError {
                    line: lineno + 1,
                    message: "malformed tag sidecar line".into(),
                };
                if mode == ParseMode::Strict {
                    return Err(IngestError::MalformedRecord {
                        line: err.line,
                        message: err.message,
                    });
                }
                report.record_errors.push(err);
            }
        }
    }
    for (lineno, line) in posts.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let id = fields.next().and_then(|f| f.parse::<u64>().ok());
        let title = fields.next();
        let body = fields.next();
        match (id, title, body) {
            (Some(id), Some(title), Some(body)) if id > 0 => {
                if let Some(tags) = tag_map.get(&id).filter(|t| !t.is_empty()) {
                    report.posts.push(RawPost {
                        id,
                        title: title.to_string(),
                        body_html: body.to_string(),
                        tags: tags.clone(),
                    });
                }
            }
            _ => {
                let err = RecordError {
                    line: lineno,
                    message: "expected `id<TAB>title<TAB>body` with positive id".into(),
                };
                if mode == ParseMode::Strict {
                    return Err(IngestError::MalformedRecord {
                        line: err.line,
                        message: err.message,
                    });
                }
                report.record_errors.push(err);
            }
        }
    }
    Ok(report)
}

fn parse_tag_line(line: &str) -> Option<(u64, Vec<String>)> {
    let (id, tags) = line.split_once('\t')?;
    let id = id.parse::<u64>().ok().filter(|&id| id > 0)?;
    let mut seen = HashSet::new();
    let tags = tags
        .split(',')
        .map(|t| t.trim().to_lowercase())
        .filter(|t| !t.is_empty() && !t.contains('<') && !t.contains('>'))
        .filter(|t| seen.insert(t.clone()))
        .collect();
    Some((id, tags))
}

// ---------------------------------------------------------------------
// Markup and code removal
// ---------------------------------------------------------------------

/// Strip markup from a post: content of `<code>`/`<pre>` elements is
/// dropped entirely, remaining tags are removed keeping their text,
/// entities are decoded, and whitespace runs collapse to single spaces.
/// The result is the title and cleaned body joined by one space.
pub fn strip_html_code(post: &RawPost) -> CleanPost {
    let title = clean_fragment(&post.title);
    let body = clean_fragment(&post.body_html);
    let text = match (title.is_empty(), body.is_empty()) {
        (true, _) => body,
        (_, true) => title,
        _ => format!("{title} {body}"),
    };
    CleanPost {
        id: post.id,
        text,
        tags: post.tags.clone(),
    }
}

/// Apply `strip_html_code` across a corpus; output order equals input
/// order regardless of the parallel schedule.
pub fn strip_all(posts: &[RawPost]) -> Vec<CleanPost> {
    posts.par_iter().map(strip_html_code).collect()
}

fn clean_fragment(html: &str) -> String {
    let mut text = strip_tags(html);
    text = decode_entities(&text);
    // Decoding can surface literal tag text (`&lt;div&gt;`); strip again
    // until no tag-like run remains. Each pass shortens the string.
    while has_tag_like(&text) {
        text = strip_tags(&text);
    }
    collapse_whitespace(&text)
}

fn has_tag_like(s: &str) -> bool {
    let b = s.as_bytes();
    b.windows(2).any(|w| {
        w[0] == b'<' && (w[1].is_ascii_alphabetic() || w[1] == b'/' || w[1] == b'!' || w[1] == b'?')
    })
}

/// One forgiving scan: removes tag tokens (replacing each with a space)
/// and drops all content inside `<code>`/`<pre>` elements. Unterminated
/// tags run to end of input; unclosed code elements drop the remainder.
fn strip_tags(html: &str) -> String {
    let mut out = String::with_capacity(html.len());
    let bytes = html.as_bytes();
    let mut skip_depth = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'<'
            && i + 1 < bytes.len()
            && (bytes[i + 1].is_ascii_alphabetic()
                || bytes[i + 1] == b'/'
                || bytes[i + 1] == b'!'
                || bytes[i + 1] == b'?')
        {
            let (tag, next) = read_tag(html, i);
            match tag {
                Tag::Open(name) if name == "code" || name == "pre" => skip_depth += 1,
                Tag::Close(name) if name == "code" || name == "pre" => {
                    skip_depth = skip_depth.saturating_sub(1)
                }
                _ => {}
            }
            if skip_depth == 0 {
                out.push(' ');
            }
            i = next;
        } else {
            if skip_depth == 0 {
                let c = html[i..].chars().next().unwrap();
                out.push(c);
                i += c.len_utf8();
                continue;
            }
            i += 1;
        }
    }
    out
}

enum Tag {
    Open(String),
    Close(String),
    Other,
}

/// Read the tag token starting at byte `start` (which is `<`). Returns
/// the classified tag and the byte offset just past its `>` (or end of
/// input when unterminated).
fn read_tag(html: &str, start: usize) -> (Tag, usize) {
    let bytes = html.as_bytes();
    let mut i = start + 1;
    let closing = bytes[i] == b'/';
    if closing {
        i += 1;
    }
    let name_start = i;
    while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
        i += 1;
    }
    let name = html[name_start..i].to_ascii_lowercase();
    // Scan to the terminating `>`, honoring quoted attribute values.
    let mut in_quote: Option<u8> = None;
    let mut last = b' ';
    while i < bytes.len() {
        let c = bytes[i];
        match in_quote {
            Some(q) => {
                if c == q {
                    in_quote = None;
                }
            }
            None => match c {
                b'"' | b'\'' => in_quote = Some(c),
                b'>' => {
                    let tag = if name.is_empty() {
                        Tag::Other
                    } else if closing {
                        Tag::Close(name)
                    } else if last == b'/' {
                        Tag::Other // self-closing: no content to skip
                    } else {
                        Tag::Open(name)
                    };
                    return (tag, i + 1);
                }
                _ => {}
            },
        }
        last = c;
        i += 1;
    }
    // Unterminated tag: treat as closing at end of input.
    (Tag::Other, bytes.len())
}

/// Decode the common named entities plus numeric character references.
/// Unknown entities are kept literally.
fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        // entity names are short; give up past 32 bytes
        let Some(semi) = rest.bytes().take(32).position(|b| b == b';') else {
            out.push('&');
            rest = &rest[1..];
            continue;
        };
        let entity = &rest[1..semi];
        let decoded = match entity {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            "nbsp" => Some('\u{a0}'),
            _ => decode_numeric_entity(entity),
        };
        match decoded {
            Some(c) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_numeric_entity(entity: &str) -> Option<char> {
    let code = entity.strip_prefix('#')?;
    let value = if let Some(hex) = code.strip_prefix('x').or_else(|| code.strip_prefix('X')) {
        u32::from_str_radix(hex, 16).ok()?
    } else {
        code.parse::<u32>().ok()?
    };
    char::from_u32(value)
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for c in s.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

// ---------------------------------------------------------------------
// Label selection
// ---------------------------------------------------------------------

/// Keep the `k` most frequent tags (ties lexicographic ascending).
/// Returns the catalog plus the posts restricted to it: tags outside
/// the catalog are dropped, posts left tagless are removed, order is
/// preserved.
pub fn select_labels(
    posts: &[CleanPost],
    k: usize,
) -> Result<(LabelCatalog, Vec<CleanPost>), IngestError> {
    assert!(k >= 1, "k must be at least 1");
    if posts.is_empty() {
        return Err(IngestError::EmptyCorpus);
    }
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for post in posts {
        for tag in &post.tags {
            *freq.entry(tag).or_insert(0) += 1;
        }
    }
    if freq.len() < k {
        return Err(IngestError::NotEnoughTags {
            found: freq.len(),
            requested: k,
        });
    }
    // BTreeMap iteration is lexicographic, so a stable sort by count
    // descending leaves ties in ascending tag order.
    let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
    ranked.sort_by_key(|&(_, count)| std::cmp::Reverse(count));
    ranked.truncate(k);
    let catalog = LabelCatalog {
        labels: ranked.iter().map(|(t, _)| t.to_string()).collect(),
        counts: ranked.iter().map(|&(_, c)| c).collect(),
    };
    let kept: HashSet<&str> = catalog.labels.iter().map(String::as_str).collect();
    let filtered = posts
        .iter()
        .filter_map(|post| {
            let tags: Vec<String> = post
                .tags
                .iter()
                .filter(|t| kept.contains(t.as_str()))
                .cloned()
                .collect();
            if tags.is_empty() {
                None
            } else {
                Some(CleanPost {
                    id: post.id,
                    text: post.text.clone(),
                    tags,
                })
            }
        })
        .collect();
    Ok((catalog, filtered))
}
