//! Digit words over the alphabet `{m, p}`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// One address digit: `m` acts as -1, `p` as +1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    M,
    P,
}

impl Symbol {
    pub fn value(self) -> f64 {
        match self {
            Symbol::M => -1.0,
            Symbol::P => 1.0,
        }
    }

    pub fn flip(self) -> Symbol {
        match self {
            Symbol::M => Symbol::P,
            Symbol::P => Symbol::M,
        }
    }

    pub fn from_sign(s: f64) -> Symbol {
        if s < 0.0 {
            Symbol::M
        } else {
            Symbol::P
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Symbol::M => 'm',
            Symbol::P => 'p',
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn repeat(s: Symbol, n: usize) -> Self {
        Word(vec![s; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = Symbol> + ExactSizeIterator + '_ {
        self.0.iter().copied()
    }

    pub fn push(&mut self, s: Symbol) {
        self.0.push(s);
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn pushed(&self, s: Symbol) -> Word {
        let mut v = self.0.clone();
        v.push(s);
        Word(v)
    }

    pub fn slice(&self, from: usize, to: usize) -> Word {
        Word(self.0[from..to].to_vec())
    }

    pub fn suffix(&self, from: usize) -> Word {
        Word(self.0[from..].to_vec())
    }

    /// Exchanges `m` and `p` at every position.
    pub fn flipped(&self) -> Word {
        Word(self.0.iter().map(|s| s.flip()).collect())
    }

    /// Flips every odd position.
    pub fn alternating_flip(&self) -> Word {
        Word(
            self.0
                .iter()
                .enumerate()
                .map(|(i, s)| if i % 2 == 1 { s.flip() } else { *s })
                .collect(),
        )
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|s| s.value())
    }

    pub fn first(&self) -> Option<Symbol> {
        self.0.first().copied()
    }

    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.0.starts_with(&prefix.0)
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl FromIterator<Symbol> for Word {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Self {
        Word(iter.into_iter().collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                'm' | 'M' | '-' => Ok(Symbol::M),
                'p' | 'P' | '+' => Ok(Symbol::P),
                other => Err(Error::Parse(format!("unexpected digit {other:?} in word"))),
            })
            .collect()
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An eventually periodic infinite address `preperiod · period^∞`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventualAddress {
    pub preperiod: Word,
    pub period: Word,
}

impl EventualAddress {
    pub fn new(preperiod: Word, period: Word) -> Result<Self, Error> {
        if period.is_empty() {
            return Err(Error::InvalidParameter("period must be nonempty".into()));
        }
        Ok(EventualAddress { preperiod, period })
    }

    pub fn periodic(period: Word) -> Result<Self, Error> {
        Self::new(Word::empty(), period)
    }

    /// `prefix · s^∞`
    pub fn with_tail(prefix: Word, s: Symbol) -> Self {
        EventualAddress {
            preperiod: prefix,
            period: Word::repeat(s, 1),
        }
    }

    /// The digit at position `i`.
    pub fn digit(&self, i: usize) -> Symbol {
        let pre = self.preperiod.len();
        if i < pre {
            self.preperiod.symbols()[i]
        } else {
            self.period.symbols()[(i - pre) % self.period.len()]
        }
    }

    /// First `n` digits as a finite word.
    pub fn truncate(&self, n: usize) -> Word {
        (0..n).map(|i| self.digit(i)).collect()
    }

    pub fn flipped(&self) -> EventualAddress {
        EventualAddress {
            preperiod: self.preperiod.flipped(),
            period: self.period.flipped(),
        }
    }
}

impl fmt::Display for EventualAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})^inf", self.preperiod, self.period)
    }
}
