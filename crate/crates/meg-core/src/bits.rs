use std::fmt;

const WORD_BITS: usize = 64;

/// Fixed-width bitset used for claim-unit coverage vectors and set cover
/// universes. Unused high bits of the last word are kept zero so that
/// derived equality and hashing are set equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitset {
    width: usize,
    words: Vec<u64>,
}

impl Bitset {
    pub fn new(width: usize) -> Self {
        let n = width.div_ceil(WORD_BITS).max(1);
        Bitset {
            width,
            words: vec![0; n],
        }
    }

    pub fn from_indices(width: usize, indices: &[usize]) -> Option<Self> {
        let mut bits = Bitset::new(width);
        for &i in indices {
            if i >= width {
                return None;
            }
            bits.set(i);
        }
        Some(bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn set(&mut self, index: usize) {
        assert!(index < self.width, "bit index {index} out of range");
        self.words[index / WORD_BITS] |= 1 << (index % WORD_BITS);
    }

    pub fn get(&self, index: usize) -> bool {
        if index >= self.width {
            return false;
        }
        self.words[index / WORD_BITS] & (1 << (index % WORD_BITS)) != 0
    }

    pub fn or_assign(&mut self, other: &Bitset) {
        assert_eq!(self.width, other.width, "bitset width mismatch");
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }

    pub fn union(&self, other: &Bitset) -> Bitset {
        let mut out = self.clone();
        out.or_assign(other);
        out
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty_set(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// True when every one of the `width` positions is set.
    pub fn is_full(&self) -> bool {
        self.count_ones() == self.width
    }

    pub fn is_subset_of(&self, other: &Bitset) -> bool {
        assert_eq!(self.width, other.width, "bitset width mismatch");
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.width).filter(|&i| self.get(i)).collect()
    }
}

impl fmt::Debug for Bitset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}
