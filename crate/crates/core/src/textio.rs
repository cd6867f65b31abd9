//! Helpers shared by the line-oriented text formats.

use crate::error::{Error, Result};

/// Shortest decimal representation that parses back to the same `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

pub fn fmt_row(row: &[f64]) -> String {
    row.iter().map(|v| fmt_real(*v)).collect::<Vec<_>>().join(" ")
}

pub(crate) fn parse_err(line: usize, detail: impl Into<String>) -> Error {
    Error::Parse {
        location: format!("line {line}"),
        detail: detail.into(),
    }
}

/// Numbered non-empty lines of a text document.
pub(crate) struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty()),
        );
        Self {
            inner: it.peekable(),
        }
    }

    pub fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.inner.next().ok_or_else(|| Error::Parse {
            location: "end of input".into(),
            detail: format!("expected {what}"),
        })
    }

    pub fn peek(&mut self) -> Option<&(usize, &'a str)> {
        self.inner.peek()
    }

    /// A header line `keyword n1 n2 ...` with exactly `count` integers.
    pub fn header(&mut self, keyword: &str, count: usize) -> Result<(usize, Vec<usize>)> {
        let (no, line) = self.next_line(keyword)?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(keyword) {
            return Err(parse_err(no, format!("expected `{keyword}` header")));
        }
        let nums = parts
            .map(|t| t.parse::<usize>().map_err(|_| parse_err(no, format!("bad integer `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        if nums.len() != count {
            return Err(parse_err(no, format!("`{keyword}` expects {count} integers")));
        }
        Ok((no, nums))
    }

    /// A line of exactly `len` reals.
    pub fn reals(&mut self, len: usize, what: &str) -> Result<Vec<f64>> {
        let (no, line) = self.next_line(what)?;
        let vals = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(no, format!("bad number `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != len {
            return Err(parse_err(no, format!("{what}: expected {len} values, found {}", vals.len())));
        }
        Ok(vals)
    }

    pub fn finish(mut self) -> Result<()> {
        match self.inner.next() {
            Some((no, _)) => Err(parse_err(no, "unexpected trailing content")),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn real_formatting_round_trips(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back: f64 = fmt_real(v).parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn header_and_rows() {
        let mut l = Lines::new("linear 2 1\n\n0.5\n-1e-7\n");
        assert_eq!(l.header("linear", 2).unwrap().1, vec![2, 1]);
        assert_eq!(l.reals(1, "row").unwrap(), vec![0.5]);
        assert_eq!(l.reals(1, "row").unwrap(), vec![-1e-7]);
        l.finish().unwrap();
        let mut bad = Lines::new("mlp 1\n");
        assert!(bad.header("linear", 2).is_err());
    }
}
