//! Whitespace tokenizer over a line-indexed vocabulary file.

use std::collections::HashMap;
use std::path::Path;

use crate::encoders::TokenSequence;
use crate::error::{Error, Result};

pub const PAD_ID: usize = 0;
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocabulary {
    /// One token per line; the line index is the id and line 0 is padding.
    pub fn parse(text: &str) -> Result<Self> {
        let tokens: Vec<String> = text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect();
        if tokens.is_empty() {
            return Err(Error::Parse("vocabulary is empty".into()));
        }
        let mut ids = HashMap::new();
        for (i, t) in tokens.iter().enumerate().skip(1) {
            ids.entry(t.clone()).or_insert(i);
        }
        Ok(Self { tokens, ids })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Small built-in vocabulary for fixtures and demos.
    pub fn fixture() -> Self {
        Self::parse(FIXTURE_VOCAB).expect("fixture vocabulary parses")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = self.tokens.join("\n");
        s.push('\n');
        s
    }

    /// Lowercases, splits on whitespace, maps to ids, then pads or
    /// truncates to `len`. Unknown words map to `<unk>` when the vocabulary
    /// has it and are rejected otherwise.
    pub fn tokenize(&self, text: &str, len: usize) -> Result<TokenSequence> {
        let unk = self.ids.get(UNK_TOKEN).copied();
        let mut ids = Vec::with_capacity(len);
        for word in text.split_whitespace().take(len) {
            let w = word.to_lowercase();
            let id = match self.ids.get(&w) {
                Some(&id) => id,
                None => unk.ok_or_else(|| Error::InvalidInput(format!("token '{w}' not in vocabulary")))?,
            };
            ids.push(id);
        }
        let real = ids.len();
        ids.resize(len, PAD_ID);
        let padding_mask = (0..len).map(|i| i >= real).collect();
        Ok(TokenSequence { ids, padding_mask })
    }
}

const FIXTURE_VOCAB: &str = "<pad>
<unk>
the
a
an
of
on
in
at
to
left
right
front
behind
near
far
small
large
big
white
black
red
blue
green
yellow
boat
boats
ship
vessel
buoy
pier
bridge
person
people
kayak
sailboat
ferry
water
river
bank
moving
moored
anchored
closest
farthest
two
three
and
is
that
";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_and_pads() {
        let v = Vocabulary::fixture();
        let t = v.tokenize("The WHITE boat  on the left", 10).unwrap();
        assert_eq!(t.ids.len(), 10);
        assert_eq!(&t.ids[..6], &[2, 19, 25, 6, 2, 10]);
        assert!(t.ids[6..].iter().all(|&i| i == PAD_ID));
        assert_eq!(t.padding_mask.iter().filter(|&&m| m).count(), 4);
    }

    #[test]
    fn unknown_word() {
        let v = Vocabulary::fixture();
        assert_eq!(v.tokenize("zebra", 3).unwrap().ids[0], 1);
        let strict = Vocabulary::parse("<pad>\nboat\n").unwrap();
        assert!(strict.tokenize("zebra", 3).is_err());
    }

    #[test]
    fn truncates() {
        let v = Vocabulary::fixture();
        let t = v.tokenize("boat boat boat boat", 2).unwrap();
        assert_eq!(t.ids, vec![25, 25]);
    }
}
