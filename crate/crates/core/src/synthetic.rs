//! Seeded synthetic corpus generator.
//!
//! Every post carries the planted keywords of its tags (several
//! occurrences each) plus common-English noise words, wrapped in
//! markup with a code snippet so the full ingestion path is exercised.
//! Generation is a pure function of the options, so corpora are
//! reproducible byte for byte.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ingest::RawPost;

#[derive(Debug, Clone)]
pub struct SyntheticOptions {
    pub n_posts: usize,
    pub n_tags: usize,
    pub seed: u64,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        SyntheticOptions {
            n_posts: 500,
            n_tags: 10,
            seed: 20240 + 1,
        }
    }
}

const TAG_NAMES: [&str; 10] = [
    "java",
    "python",
    "android",
    "javascript",
    "sql",
    "arrays",
    "regex",
    "linux",
    "git",
    "docker",
];

const NOISE: [&str; 48] = [
    "the", "a", "is", "to", "and", "how", "can", "when", "this", "that", "with", "have", "from",
    "work", "works", "problem", "question", "help", "code", "error", "trying", "tried", "using",
    "run", "running", "build", "version", "file", "files", "project", "application", "fails",
    "expected", "output", "input", "value", "values", "function", "method", "test", "wrong",
    "need", "want", "make", "best", "way", "does", "not",
];

/// Three distinct planted keywords per tag. Nonsense stems keep them
/// disjoint from the noise vocabulary and from each other after
/// stemming.
pub fn planted_keywords(tag_index: usize) -> [String; 3] {
    [
        format!("zorv{}ak", tag_index),
        format!("quil{}em", tag_index),
        format!("vust{}or", tag_index),
    ]
}

/// Tag name for index `i` (wraps past the builtin list).
pub fn tag_name(i: usize) -> String {
    if i < TAG_NAMES.len() {
        TAG_NAMES[i].to_string()
    } else {
        format!("tag{i}")
    }
}

/// Generate the corpus. Every tag is guaranteed at least one post.
pub fn generate(options: &SyntheticOptions) -> Vec<RawPost> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let n_tags = options.n_tags;
    let mut posts = Vec::with_capacity(options.n_posts);
    for i in 0..options.n_posts {
        // each tag leads one post in turn so none can end up empty
        let first_tag = if i < n_tags {
            i
        } else {
            rng.random_range(0..n_tags)
        };
        let mut tags = vec![first_tag];
        let extra = match rng.random_range(0..10) {
            0..=5 => 0,
            6..=8 => 1,
            _ => 2,
        };
        for _ in 0..extra {
            let t = rng.random_range(0..n_tags);
            if !tags.contains(&t) {
                tags.push(t);
            }
        }

        let mut words: Vec<String> = Vec::new();
        for &t in &tags {
            let keywords = planted_keywords(t);
            for kw in &keywords {
                for _ in 0..rng.random_range(2..=4) {
                    words.push(kw.clone());
                }
            }
        }
        for _ in 0..rng.random_range(8..=15) {
            words.push(NOISE.choose(&mut rng).unwrap().to_string());
        }
        // deterministic shuffle of the body words
        for idx in (1..words.len()).rev() {
            let j = rng.random_range(0..=idx);
            words.swap(idx, j);
        }

        let title_kw = &planted_keywords(tags[0])[0];
        let title = format!(
            "{} {} {}",
            NOISE.choose(&mut rng).unwrap(),
            title_kw,
            NOISE.choose(&mut rng).unwrap()
        );
        let body_html = format!(
            "<p>{}</p><pre><code>int main() {{ return {}; }}</code></pre><p>{}</p>",
            words[..words.len() / 2].join(" "),
            i,
            words[words.len() / 2..].join(" "),
        );
        posts.push(RawPost {
            id: i as u64 + 1,
            title,
            body_html,
            tags: tags.iter().map(|&t| tag_name(t)).collect(),
        });
    }
    posts
}

/// Render the corpus in the line-record layout: the posts file and the
/// tag sidecar.
pub fn to_line_format(posts: &[RawPost]) -> (String, String) {
    let mut post_lines = String::new();
    let mut tag_lines = String::new();
    for post in posts {
        let flat_body = post.body_html.replace(['\t', '\n'], " ");
        let flat_title = post.title.replace(['\t', '\n'], " ");
        post_lines.push_str(&format!("{}\t{}\t{}\n", post.id, flat_title, flat_body));
        tag_lines.push_str(&format!("{}\t{}\n", post.id, post.tags.join(",")));
    }
    (post_lines, tag_lines)
}

/// Render the corpus as a `Posts.xml` dump.
pub fn to_posts_xml(posts: &[RawPost]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<posts>\n");
    for post in posts {
        let tags: String = post
            .tags
            .iter()
            .map(|t| format!("&lt;{t}&gt;"))
            .collect();
        out.push_str(&format!(
            "  <row Id=\"{}\" PostTypeId=\"1\" Title=\"{}\" Body=\"{}\" Tags=\"{}\" />\n",
            post.id,
            escape_attr(&post.title),
            escape_attr(&post.body_html),
            tags
        ));
    }
    out.push_str("</posts>\n");
    out
}

fn escape_attr(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
