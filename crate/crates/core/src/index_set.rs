use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// A subset of the example indices `0..universe`, stored as a bitset.
///
/// Indices are zero-based in the Rust API. Every external representation
/// (JSON, CLI output, HTTP) uses one-based indices through
/// [`IndexSet::to_one_based`] and [`IndexSet::from_one_based`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    universe: usize,
    words: Vec<u64>,
}

impl IndexSet {
    pub fn empty(universe: usize) -> Self {
        IndexSet {
            universe,
            words: vec![0; universe.div_ceil(WORD)],
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut set = Self::empty(universe);
        for (w, word) in set.words.iter_mut().enumerate() {
            let remaining = universe - w * WORD;
            *word = if remaining >= WORD {
                u64::MAX
            } else {
                (1u64 << remaining) - 1
            };
        }
        set
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(universe: usize, indices: I) -> Result<Self> {
        let mut set = Self::empty(universe);
        for index in indices {
            if index >= universe {
                return Err(Error::IndexOutOfRange { index, n: universe });
            }
            set.insert(index);
        }
        Ok(set)
    }

    pub fn from_one_based(universe: usize, indices: &[usize]) -> Result<Self> {
        let mut set = Self::empty(universe);
        for &index in indices {
            if index == 0 || index > universe {
                return Err(Error::IndexOutOfRange { index, n: universe });
            }
            set.insert(index - 1);
        }
        Ok(set)
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.iter().map(|j| j + 1).collect()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn contains(&self, index: usize) -> bool {
        index < self.universe && self.words[index / WORD] & (1 << (index % WORD)) != 0
    }

    /// Panics if `index` is outside the universe.
    pub fn insert(&mut self, index: usize) {
        assert!(index < self.universe, "index {index} outside universe {}", self.universe);
        self.words[index / WORD] |= 1 << (index % WORD);
    }

    pub fn remove(&mut self, index: usize) {
        if index < self.universe {
            self.words[index / WORD] &= !(1 << (index % WORD));
        }
    }

    /// Copy of `self` with `index` removed.
    pub fn without(&self, index: usize) -> Self {
        let mut out = self.clone();
        out.remove(index);
        out
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.words
            .iter()
            .zip(other.words.iter().chain(std::iter::repeat(&0)))
            .all(|(a, b)| a & !b == 0)
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        let words = self
            .words
            .iter()
            .zip(other.words.iter().chain(std::iter::repeat(&0)))
            .map(|(a, b)| a & !b)
            .collect();
        IndexSet {
            universe: self.universe,
            words,
        }
    }

    /// Ascending iteration over members.
    pub fn iter(&self) -> Iter<'_> {
        Iter {
            words: &self.words,
            word_index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    /// Lexicographic order of the ascending member sequences.
    pub fn lex_cmp(&self, other: &IndexSet) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, j) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", j + 1)?;
        }
        write!(f, "}}")
    }
}

pub struct Iter<'a> {
    words: &'a [u64],
    word_index: usize,
    current: u64,
}

impl Iterator for Iter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word_index * WORD + bit);
            }
            self.word_index += 1;
            self.current = *self.words.get(self.word_index)?;
        }
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = usize;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}
