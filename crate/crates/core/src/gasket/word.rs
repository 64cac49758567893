use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// One letter `i^l`: cell `i` (1-based) of the level-`l` subdivision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub cell: u32,
    pub level: u32,
}

impl Letter {
    pub fn new(cell: u32, level: u32) -> Self {
        Letter { cell, level }
    }

    /// 0-based cell index into the subdivision tables.
    pub fn cell_index(&self) -> usize {
        self.cell as usize - 1
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.cell, self.level)
    }
}

impl FromStr for Letter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let (i, l) = s
            .split_once('^')
            .ok_or_else(|| Error::Parse(format!("letter `{s}` is not of the form i^l")))?;
        let cell: u32 = i
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad cell index in `{s}`")))?;
        let level: u32 = l
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad level in `{s}`")))?;
        if cell == 0 {
            return Err(Error::Parse(format!("cell indices start at 1 (`{s}`)")));
        }
        Ok(Letter { cell, level })
    }
}

/// Finite word over the letters; the empty word is the root cell.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn root() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn child(&self, letter: Letter) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(letter);
        Word(v)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len].to_vec())
    }

    pub fn starts_with(&self, other: &Word) -> bool {
        self.0.starts_with(&other.0)
    }

    pub fn encode(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, letter) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(".")?;
            }
            write!(f, "{letter}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Word::root());
        }
        s.split('.').map(str::parse).collect::<Result<Vec<_>, _>>().map(Word)
    }
}
