use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sequence of obstacle indices in `{1, 2}` with no immediate repeats.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Story(Vec<u8>);

impl Story {
    pub fn new(indices: Vec<u8>) -> Result<Self> {
        if indices.iter().any(|&j| j != 1 && j != 2) {
            return Err(Error::InvalidInput(format!("story {indices:?} uses an index outside {{1, 2}}")));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!("story {indices:?} repeats an obstacle")));
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// The alternating story of length `len` whose first reflection is on `first`.
    pub fn alternating(first: u8, len: usize) -> Self {
        let other = 3 - first;
        Self((0..len).map(|i| if i % 2 == 0 { first } else { other }).collect())
    }

    /// All stories up to `max_len`, in (length, pattern) order.
    pub fn all_up_to(max_len: usize) -> Vec<Self> {
        std::iter::once(Self::empty())
            .chain((1..=max_len).flat_map(|n| [Self::alternating(1, n), Self::alternating(2, n)]))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[u8] {
        &self.0
    }

    pub fn first(&self) -> Option<u8> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<u8> {
        self.0.last().copied()
    }

    /// `J'`: the story with its last reflection removed.
    pub fn without_last(&self) -> Self {
        let mut v = self.0.clone();
        v.pop();
        Self(v)
    }

    pub fn push(&mut self, j: u8) -> Result<()> {
        if self.last() == Some(j) || (j != 1 && j != 2) {
            return Err(Error::InvalidInput(format!("cannot append {j} to {self}")));
        }
        self.0.push(j);
        Ok(())
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self::new(v)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() || text == "-" {
            return Ok(Self::empty());
        }
        let v = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u8>()
                    .map_err(|_| Error::InvalidInput(format!("bad story entry '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(v)
    }
}

impl Ord for Story {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Story {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Story {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        let parts: Vec<String> = self.0.iter().map(u8::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_repeats() {
        assert!(Story::new(vec![1, 1]).is_err());
        assert!(Story::new(vec![1, 3]).is_err());
        assert!(Story::new(vec![2, 1, 2]).is_ok());
    }

    #[test]
    fn ordering_is_length_then_pattern() {
        let all = Story::all_up_to(3);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        assert_eq!(all.len(), 7);
        assert_eq!(all[3], Story::new(vec![1, 2]).unwrap());
    }

    #[test]
    fn parse_roundtrip() {
        let s = Story::parse("2,1,2").unwrap();
        assert_eq!(s.to_string(), "2,1,2");
        assert_eq!(Story::parse("-").unwrap(), Story::empty());
        assert_eq!(s.without_last(), Story::new(vec![2, 1]).unwrap());
    }
}
