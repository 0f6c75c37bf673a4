//! Rule-based lemmatizer: irregular-form table lookup first, then a
//! short ordered list of suffix rules. Deliberately conservative — a
//! rule only fires when the residue still looks like a word.

use std::collections::HashMap;

const MIN_RESULT: usize = 3;

/// Map a token to its lemma. Returns the token unchanged when no
/// exception entry and no suffix rule applies.
pub fn lemmatize(token: &str, exceptions: &HashMap<String, String>) -> String {
    if let Some(lemma) = exceptions.get(token) {
        return lemma.clone();
    }
    if !token.bytes().all(|b| b.is_ascii_lowercase()) {
        return token.to_string();
    }
    let n = token.len();

    // babies -> baby
    if n >= 5 {
        if let Some(stem) = token.strip_suffix("ies") {
            return format!("{stem}y");
        }
    }
    // boxes -> box, watches -> watch; otherwise wages -> wage
    if n >= 4 {
        if let Some(stem) = token.strip_suffix("es") {
            if ends_sibilant(stem) && stem.len() >= MIN_RESULT {
                return stem.to_string();
            }
            let keep_e = &token[..n - 1];
            if keep_e.len() >= MIN_RESULT {
                return keep_e.to_string();
            }
        }
    }
    // cats -> cat, guarded against -ss / -us / -is
    if n >= 4
        && token.ends_with('s')
        && !token.ends_with("ss")
        && !token.ends_with("us")
        && !token.ends_with("is")
    {
        let stem = &token[..n - 1];
        if stem.len() >= MIN_RESULT {
            return stem.to_string();
        }
    }
    // hopped -> hop, baked -> bake, walked -> walk
    if n >= 4 {
        if let Some(stem) = token.strip_suffix("ed") {
            if has_vowel(stem) && stem.len() >= MIN_RESULT {
                return undouble_or_restore_e(stem);
            }
        }
    }
    // eating -> eat, running -> run, baking -> bake
    if n >= 5 {
        if let Some(stem) = token.strip_suffix("ing") {
            if has_vowel(stem) && stem.len() >= MIN_RESULT {
                return undouble_or_restore_e(stem);
            }
        }
    }
    token.to_string()
}

fn has_vowel(s: &str) -> bool {
    s.bytes().any(|b| matches!(b, b'a' | b'e' | b'i' | b'o' | b'u' | b'y'))
}

fn ends_sibilant(s: &str) -> bool {
    s.ends_with('s')
        || s.ends_with('x')
        || s.ends_with('z')
        || s.ends_with("ch")
        || s.ends_with("sh")
}

fn is_consonant(b: u8) -> bool {
    b.is_ascii_lowercase() && !matches!(b, b'a' | b'e' | b'i' | b'o' | b'u')
}

/// After dropping -ed/-ing: collapse a doubled final consonant
/// (hopp -> hop), or restore a dropped -e on short
/// consonant-vowel-consonant stems (bak -> bake).
fn undouble_or_restore_e(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && is_consonant(b[n - 1]) {
        if !matches!(b[n - 1], b'l' | b's' | b'z') {
            return stem[..n - 1].to_string();
        }
        return stem.to_string();
    }
    if (3..=4).contains(&n)
        && is_consonant(b[n - 1])
        && !matches!(b[n - 1], b'w' | b'x' | b'y')
        && !is_consonant(b[n - 2])
        && is_consonant(b[n - 3])
    {
        return format!("{stem}e");
    }
    stem.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textpipe::default_lemma_exceptions;

    #[test]
    fn irregular_forms_use_the_table() {
        let table = default_lemma_exceptions();
        assert_eq!(lemmatize("ate", &table), "eat");
        assert_eq!(lemmatize("better", &table), "good");
        assert_eq!(lemmatize("mice", &table), "mouse");
    }

    #[test]
    fn suffix_rules() {
        let table = HashMap::new();
        assert_eq!(lemmatize("eating", &table), "eat");
        assert_eq!(lemmatize("eat", &table), "eat");
        assert_eq!(lemmatize("babies", &table), "baby");
        assert_eq!(lemmatize("boxes", &table), "box");
        assert_eq!(lemmatize("watches", &table), "watch");
        assert_eq!(lemmatize("wages", &table), "wage");
        assert_eq!(lemmatize("cats", &table), "cat");
        assert_eq!(lemmatize("class", &table), "class");
        assert_eq!(lemmatize("hopped", &table), "hop");
        assert_eq!(lemmatize("baked", &table), "bake");
        assert_eq!(lemmatize("walked", &table), "walk");
        assert_eq!(lemmatize("running", &table), "run");
        assert_eq!(lemmatize("falling", &table), "fall");
    }

    #[test]
    fn guards_keep_short_or_vowelless_stems() {
        let table = HashMap::new();
        assert_eq!(lemmatize("thing", &table), "thing");
        assert_eq!(lemmatize("ring", &table), "ring");
        assert_eq!(lemmatize("basis", &table), "basis");
        assert_eq!(lemmatize("virus", &table), "virus");
    }
}
