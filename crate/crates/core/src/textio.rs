//! Helpers for the structured-text model formats.
//!
//! Every serialized real is printed with 17 significant digits so that
//! parsing it back reproduces the identical `f64`.

use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextIoError {
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("expected `{expected}`, found `{found}`")]
    BadTag { expected: String, found: String },
}

/// Format an `f64` with 17 significant digits (round-trip exact).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn parse_field<T: FromStr>(field: Option<&str>, name: &str) -> Result<T, TextIoError> {
    let s = field.ok_or_else(|| TextIoError::Malformed(format!("missing field {name}")))?;
    s.parse()
        .map_err(|_| TextIoError::Malformed(format!("bad {name}: `{s}`")))
}

/// Line cursor over a serialized model, with tagged-line helpers.
pub struct Lines<'a> {
    inner: std::str::Lines<'a>,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines(),
        }
    }

    pub fn next_line(&mut self) -> Result<&'a str, TextIoError> {
        self.inner.next().ok_or(TextIoError::UnexpectedEof)
    }

    /// Consume a line that must equal `tag` exactly.
    pub fn expect_exact(&mut self, tag: &str) -> Result<(), TextIoError> {
        let line = self.next_line()?;
        if line == tag {
            Ok(())
        } else {
            Err(TextIoError::BadTag {
                expected: tag.to_string(),
                found: line.to_string(),
            })
        }
    }

    /// Consume a line of the form `tag rest...` and return `rest`.
    pub fn expect_tagged(&mut self, tag: &str) -> Result<&'a str, TextIoError> {
        let line = self.next_line()?;
        match line.strip_prefix(tag).and_then(|r| r.strip_prefix(' ')) {
            Some(rest) => Ok(rest),
            None => Err(TextIoError::BadTag {
                expected: tag.to_string(),
                found: line.to_string(),
            }),
        }
    }

    /// Like `expect_tagged`, then parse the remainder as one value.
    pub fn tagged_value<T: FromStr>(&mut self, tag: &str) -> Result<T, TextIoError> {
        let rest = self.expect_tagged(tag)?;
        rest.trim()
            .parse()
            .map_err(|_| TextIoError::Malformed(format!("bad {tag}: `{rest}`")))
    }

    /// Parse the remainder of a tagged line as whitespace-separated values.
    pub fn tagged_vec<T: FromStr>(&mut self, tag: &str) -> Result<Vec<T>, TextIoError> {
        let rest = self.expect_tagged(tag)?;
        rest.split_ascii_whitespace()
            .map(|s| {
                s.parse()
                    .map_err(|_| TextIoError::Malformed(format!("bad {tag} entry: `{s}`")))
            })
            .collect()
    }
}

/// Join values with single spaces using the 17-digit float format.
pub fn join_f64(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| fmt_f64(*v))
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip_is_exact() {
        for &x in &[
            0.0,
            -0.0,
            1.0,
            std::f64::consts::PI,
            1e-300,
            -3.337e300,
            0.1 + 0.2,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f64(x);
            let y: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{s}");
        }
    }

    #[test]
    fn tagged_lines() {
        let mut lines = Lines::new("header v1\nvalue 42\nvec 1 2 3\n");
        lines.expect_exact("header v1").unwrap();
        let v: u32 = lines.tagged_value("value").unwrap();
        assert_eq!(v, 42);
        let xs: Vec<i32> = lines.tagged_vec("vec").unwrap();
        assert_eq!(xs, vec![1, 2, 3]);
        assert!(lines.next_line().is_err());
    }
}
