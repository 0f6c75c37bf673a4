//! Porter stemming: five reduction phases applied sequentially.
//!
//! This follows the classic reference implementation, including its
//! three documented departures from the original published rules:
//! step-2 `bli -> ble` (instead of `abli -> able`), the added step-2
//! `logi -> log` rule, and words of length <= 2 returned unchanged.

// The step functions keep the reference implementation's rule-table
// layout even where a match guard would be denser.
#![allow(clippy::collapsible_match, clippy::if_same_then_else)]

/// Stem a lowercase alphabetic token. Tokens containing anything other
/// than ASCII lowercase letters pass through unchanged.
pub fn porter_stem(token: &str) -> String {
    if token.len() <= 2 || !token.bytes().all(|b| b.is_ascii_lowercase()) {
        return token.to_string();
    }
    let mut s = Stemmer {
        b: token.as_bytes().to_vec(),
        k: token.len() as isize - 1,
        j: 0,
    };
    s.step1ab();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5();
    s.b.truncate(s.k as usize + 1);
    String::from_utf8(s.b).expect("ascii")
}

struct Stemmer {
    b: Vec<u8>,
    /// Index of the last significant byte of the working word.
    k: isize,
    /// End of the candidate stem set by the last successful `ends`.
    j: isize,
}

impl Stemmer {
    fn at(&self, i: isize) -> u8 {
        self.b[i as usize]
    }

    /// Is position `i` a consonant? `y` counts as a consonant at the
    /// word start or after a vowel.
    fn cons(&self, i: isize) -> bool {
        match self.at(i) {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => {
                if i == 0 {
                    true
                } else {
                    !self.cons(i - 1)
                }
            }
            _ => true,
        }
    }

    /// The measure: number of vowel-consonant sequences in `b[0..=j]`.
    fn m(&self) -> usize {
        let mut n = 0;
        let mut i = 0;
        loop {
            if i > self.j {
                return n;
            }
            if !self.cons(i) {
                break;
            }
            i += 1;
        }
        i += 1;
        loop {
            loop {
                if i > self.j {
                    return n;
                }
                if self.cons(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
            n += 1;
            loop {
                if i > self.j {
                    return n;
                }
                if !self.cons(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
        }
    }

    fn vowel_in_stem(&self) -> bool {
        (0..=self.j).any(|i| !self.cons(i))
    }

    fn doublec(&self, j: isize) -> bool {
        j >= 1 && self.at(j) == self.at(j - 1) && self.cons(j)
    }

    /// consonant-vowel-consonant ending at `i`, final consonant not
    /// `w`, `x` or `y` (the `*o` condition).
    fn cvc(&self, i: isize) -> bool {
        if i < 2 || !self.cons(i) || self.cons(i - 1) || !self.cons(i - 2) {
            return false;
        }
        !matches!(self.at(i), b'w' | b'x' | b'y')
    }

    /// Does `b[0..=k]` end with `s`? Sets `j` on success.
    fn ends(&mut self, s: &[u8]) -> bool {
        let len = s.len() as isize;
        if len > self.k + 1 {
            return false;
        }
        let start = (self.k + 1 - len) as usize;
        if &self.b[start..=self.k as usize] != s {
            return false;
        }
        self.j = self.k - len;
        true
    }

    /// Replace the ending after `j` with `s`.
    fn set_to(&mut self, s: &[u8]) {
        self.b.truncate(self.j as usize + 1);
        self.b.extend_from_slice(s);
        self.k = self.b.len() as isize - 1;
    }

    fn replace_if_m(&mut self, s: &[u8]) {
        if self.m() > 0 {
            self.set_to(s);
        }
    }

    /// Plurals and -ed / -ing.
    fn step1ab(&mut self) {
        if self.at(self.k) == b's' {
            if self.ends(b"sses") {
                self.k -= 2;
            } else if self.ends(b"ies") {
                self.set_to(b"i");
            } else if self.at(self.k - 1) != b's' {
                self.k -= 1;
            }
        }
        if self.ends(b"eed") {
            if self.m() > 0 {
                self.k -= 1;
            }
        } else if (self.ends(b"ed") || self.ends(b"ing")) && self.vowel_in_stem() {
            self.k = self.j;
            self.b.truncate(self.k as usize + 1);
            if self.ends(b"at") {
                self.set_to(b"ate");
            } else if self.ends(b"bl") {
                self.set_to(b"ble");
            } else if self.ends(b"iz") {
                self.set_to(b"ize");
            } else if self.doublec(self.k) {
                self.k -= 1;
                if matches!(self.at(self.k), b'l' | b's' | b'z') {
                    self.k += 1;
                }
            } else if self.m() == 1 {
                let k = self.k;
                if self.cvc(k) {
                    self.set_to(b"e");
                }
            }
        }
    }

    /// Terminal y -> i when the stem contains a vowel.
    fn step1c(&mut self) {
        if self.ends(b"y") && self.vowel_in_stem() {
            self.b[self.k as usize] = b'i';
        }
    }

    /// Double to single suffixes, keyed on the penultimate letter.
    fn step2(&mut self) {
        if self.k < 1 {
            return;
        }
        match self.at(self.k - 1) {
            b'a' => {
                if self.ends(b"ational") {
                    self.replace_if_m(b"ate");
                } else if self.ends(b"tional") {
                    self.replace_if_m(b"tion");
                }
            }
            b'c' => {
                if self.ends(b"enci") {
                    self.replace_if_m(b"ence");
                } else if self.ends(b"anci") {
                    self.replace_if_m(b"ance");
                }
            }
            b'e' => {
                if self.ends(b"izer") {
                    self.replace_if_m(b"ize");
                }
            }
            b'l' => {
                if self.ends(b"bli") {
                    self.replace_if_m(b"ble");
                } else if self.ends(b"alli") {
                    self.replace_if_m(b"al");
                } else if self.ends(b"entli") {
                    self.replace_if_m(b"ent");
                } else if self.ends(b"eli") {
                    self.replace_if_m(b"e");
                } else if self.ends(b"ousli") {
                    self.replace_if_m(b"ous");
                }
            }
            b'o' => {
                if self.ends(b"ization") {
                    self.replace_if_m(b"ize");
                } else if self.ends(b"ation") {
                    self.replace_if_m(b"ate");
                } else if self.ends(b"ator") {
                    self.replace_if_m(b"ate");
                }
            }
            b's' => {
                if self.ends(b"alism") {
                    self.replace_if_m(b"al");
                } else if self.ends(b"iveness") {
                    self.replace_if_m(b"ive");
                } else if self.ends(b"fulness") {
                    self.replace_if_m(b"ful");
                } else if self.ends(b"ousness") {
                    self.replace_if_m(b"ous");
                }
            }
            b't' => {
                if self.ends(b"aliti") {
                    self.replace_if_m(b"al");
                } else if self.ends(b"iviti") {
                    self.replace_if_m(b"ive");
                } else if self.ends(b"biliti") {
                    self.replace_if_m(b"ble");
                }
            }
            b'g' => {
                if self.ends(b"logi") {
                    self.replace_if_m(b"log");
                }
            }
            _ => {}
        }
    }

    /// -ic-, -full, -ness and similar.
    fn step3(&mut self) {
        match self.at(self.k) {
            b'e' => {
                if self.ends(b"icate") {
                    self.replace_if_m(b"ic");
                } else if self.ends(b"ative") {
                    self.replace_if_m(b"");
                } else if self.ends(b"alize") {
                    self.replace_if_m(b"al");
                }
            }
            b'i' => {
                if self.ends(b"iciti") {
                    self.replace_if_m(b"ic");
                }
            }
            b'l' => {
                if self.ends(b"ical") {
                    self.replace_if_m(b"ic");
                } else if self.ends(b"ful") {
                    self.replace_if_m(b"");
                }
            }
            b's' => {
                if self.ends(b"ness") {
                    self.replace_if_m(b"");
                }
            }
            _ => {}
        }
    }

    /// Drop -ant, -ence and similar when the measure exceeds 1.
    fn step4(&mut self) {
        if self.k < 1 {
            return;
        }
        let matched = match self.at(self.k - 1) {
            b'a' => self.ends(b"al"),
            b'c' => self.ends(b"ance") || self.ends(b"ence"),
            b'e' => self.ends(b"er"),
            b'i' => self.ends(b"ic"),
            b'l' => self.ends(b"able") || self.ends(b"ible"),
            b'n' => {
                self.ends(b"ant")
                    || self.ends(b"ement")
                    || self.ends(b"ment")
                    || self.ends(b"ent")
            }
            b'o' => {
                (self.ends(b"ion") && self.j >= 0 && matches!(self.at(self.j), b's' | b't'))
                    || self.ends(b"ou")
            }
            b's' => self.ends(b"ism"),
            b't' => self.ends(b"ate") || self.ends(b"iti"),
            b'u' => self.ends(b"ous"),
            b'v' => self.ends(b"ive"),
            b'z' => self.ends(b"ize"),
            _ => false,
        };
        if matched && self.m() > 1 {
            self.k = self.j;
        }
    }

    /// Remove a final -e and reduce a final -ll when the measure allows.
    fn step5(&mut self) {
        self.j = self.k;
        if self.at(self.k) == b'e' {
            let a = self.m();
            if a > 1 || (a == 1 && !self.cvc(self.k - 1)) {
                self.k -= 1;
            }
        }
        if self.at(self.k) == b'l' && self.doublec(self.k) && self.m() > 1 {
            self.k -= 1;
        }
    }
}
