//! Combinatorics of the free semigroup on `n` generators: the words that
//! index every Fock basis vector and Fourier coefficient in the crate.
//!
//! The canonical enumeration is graded lexicographic (by length, then
//! lexicographically by letters), so level blocks are contiguous and the
//! empty word has index 0.

use crate::cmatrix::Complex64;
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;

/// A word over the alphabet `1..=n`; the empty word is the semigroup unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<u8>,
    alphabet: usize,
}

impl Word {
    pub fn new(letters: Vec<u8>, alphabet: usize) -> Result<Self> {
        if alphabet == 0 || alphabet > 255 {
            return Err(Error::InvalidParameter(format!(
                "alphabet size {alphabet} not in 1..=255"
            )));
        }
        if let Some(&bad) = letters.iter().find(|&&l| l == 0 || l as usize > alphabet) {
            return Err(Error::InvalidParameter(format!(
                "letter {bad} outside alphabet 1..={alphabet}"
            )));
        }
        Ok(Word { letters, alphabet })
    }

    pub fn empty(alphabet: usize) -> Self {
        Word { letters: Vec::new(), alphabet }
    }

    /// Single-letter word.
    pub fn letter(i: u8, alphabet: usize) -> Result<Self> {
        Word::new(vec![i], alphabet)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    /// Letters in reverse order; an involution.
    pub fn reverse(&self) -> Self {
        let mut letters = self.letters.clone();
        letters.reverse();
        Word { letters, alphabet: self.alphabet }
    }

    /// Semigroup product `uv`; the empty word is a two-sided unit.
    pub fn concat(&self, other: &Word) -> Result<Self> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch(self.alphabet, other.alphabet));
        }
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(Word { letters, alphabet: self.alphabet })
    }

    /// Lexicographic rank among all words of the same length.
    pub fn lex_rank(&self) -> usize {
        let n = self.alphabet;
        self.letters
            .iter()
            .fold(0usize, |acc, &l| acc * n + (l as usize - 1))
    }

    /// Inverse of `lex_rank` at a given length.
    pub fn from_lex_rank(mut rank: usize, len: usize, alphabet: usize) -> Self {
        let n = alphabet;
        let mut letters = vec![0u8; len];
        for slot in (0..len).rev() {
            letters[slot] = (rank % n) as u8 + 1;
            rank /= n;
        }
        Word { letters, alphabet }
    }
}

impl fmt::Display for Word {
    /// Empty word prints as "e"; digits for alphabets up to 9, otherwise
    /// dash-separated letters.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        if self.alphabet <= 9 {
            for l in &self.letters {
                write!(f, "{l}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
            write!(f, "{}", parts.join("-"))
        }
    }
}

impl Word {
    /// Parse the display form back into a word.
    pub fn parse(s: &str, alphabet: usize) -> Result<Self> {
        if s == "e" {
            return Ok(Word::empty(alphabet));
        }
        let letters: Result<Vec<u8>> = if alphabet <= 9 {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as u8)
                        .ok_or_else(|| Error::InvalidParameter(format!("bad word char '{c}'")))
                })
                .collect()
        } else {
            s.split('-')
                .map(|p| {
                    p.parse::<u8>()
                        .map_err(|_| Error::InvalidParameter(format!("bad word part '{p}'")))
                })
                .collect()
        };
        Word::new(letters?, alphabet)
    }
}

/// Number of words of length `<= max_len`: the dimension of the truncated
/// Fock space.
pub fn fock_dim(n: usize, max_len: usize) -> usize {
    assert!(n >= 1);
    if n == 1 {
        max_len + 1
    } else {
        // (n^{N+1} - 1) / (n - 1) summed without overflow surprises at desk scale
        let mut total = 0usize;
        let mut pow = 1usize;
        for _ in 0..=max_len {
            total += pow;
            pow *= n;
        }
        total
    }
}

/// All words of length `<= max_len` in graded lexicographic order.
pub fn enumerate_words(n: usize, max_len: usize) -> Vec<Word> {
    assert!(n >= 1, "alphabet size must be at least 1");
    let mut out = Vec::with_capacity(fock_dim(n, max_len));
    for len in 0..=max_len {
        let count = n.pow(len as u32);
        for rank in 0..count {
            out.push(Word::from_lex_rank(rank, len, n));
        }
    }
    out
}

/// Index of `w` in the graded-lex enumeration truncated at `max_len`.
pub fn index_of(w: &Word, max_len: usize) -> Result<usize> {
    if w.len() > max_len {
        return Err(Error::WordTooLong { len: w.len(), max: max_len });
    }
    Ok(fock_dim_below(w.alphabet(), w.len()) + w.lex_rank())
}

/// Word at position `index` of the enumeration.
pub fn word_at(index: usize, n: usize, max_len: usize) -> Result<Word> {
    let dim = fock_dim(n, max_len);
    if index >= dim {
        return Err(Error::IndexOutOfRange { index, dim });
    }
    let mut rest = index;
    let mut len = 0usize;
    loop {
        let level = n.pow(len as u32);
        if rest < level {
            return Ok(Word::from_lex_rank(rest, len, n));
        }
        rest -= level;
        len += 1;
    }
}

/// Number of words strictly shorter than `len` (= offset of the level block).
pub fn fock_dim_below(n: usize, len: usize) -> usize {
    if len == 0 {
        0
    } else {
        fock_dim(n, len - 1)
    }
}

/// A finitely supported word-coefficient map: a noncommutative polynomial
/// in the generators.
#[derive(Debug, Clone, PartialEq)]
pub struct WordPolynomial {
    alphabet: usize,
    terms: BTreeMap<Word, Complex64>,
}

impl WordPolynomial {
    pub fn new(alphabet: usize) -> Self {
        WordPolynomial { alphabet, terms: BTreeMap::new() }
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn set(&mut self, w: Word, coeff: Complex64) -> Result<()> {
        if w.alphabet() != self.alphabet {
            return Err(Error::AlphabetMismatch(w.alphabet(), self.alphabet));
        }
        if coeff == Complex64::new(0.0, 0.0) {
            self.terms.remove(&w);
        } else {
            self.terms.insert(w, coeff);
        }
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Complex64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    /// The commutator L_i L_j - L_j L_i.
    pub fn commutator(i: u8, j: u8, alphabet: usize) -> Result<Self> {
        let mut p = WordPolynomial::new(alphabet);
        p.set(Word::new(vec![i, j], alphabet)?, Complex64::new(1.0, 0.0))?;
        p.set(Word::new(vec![j, i], alphabet)?, Complex64::new(-1.0, 0.0))?;
        Ok(p)
    }

    /// Parse from a {word string: [re, im]} JSON map.
    pub fn from_json(value: &serde_json::Value, alphabet: usize) -> Result<Self> {
        let map = value
            .as_object()
            .ok_or_else(|| Error::InvalidParameter("polynomial JSON must be an object".into()))?;
        let mut p = WordPolynomial::new(alphabet);
        for (k, v) in map {
            let w = Word::parse(k, alphabet)?;
            let pair = v
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::InvalidParameter(format!("coefficient for '{k}' must be [re, im]")))?;
            let re = pair[0].as_f64().unwrap_or(0.0);
            let im = pair[1].as_f64().unwrap_or(0.0);
            p.set(w, Complex64::new(re, im))?;
        }
        Ok(p)
    }
}
