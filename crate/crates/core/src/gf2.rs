//! Bit-packed matrices over GF(2).

/// Number of 64-bit words needed for `bits` columns.
#[inline]
pub fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

#[inline]
pub fn get_bit(words: &[u64], i: usize) -> bool {
    (words[i / 64] >> (i % 64)) & 1 == 1
}

#[inline]
pub fn set_bit(words: &mut [u64], i: usize, v: bool) {
    let mask = 1u64 << (i % 64);
    if v {
        words[i / 64] |= mask;
    } else {
        words[i / 64] &= !mask;
    }
}

#[inline]
pub fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

/// Dense row-major bit matrix, 64 columns per word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = words_for(cols);
        BitMatrix { rows, cols, words, data: vec![0; rows * words] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.words..(r + 1) * self.words]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        get_bit(self.row(r), c)
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let w = self.words;
        set_bit(&mut self.data[r * w..(r + 1) * w], c, v);
    }

    fn xor_rows(&mut self, dst: usize, src: usize) {
        debug_assert_ne!(dst, src);
        let w = self.words;
        let (a, b) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * w);
            (&mut lo[dst * w..(dst + 1) * w], &hi[..w])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * w);
            (&mut hi[..w], &lo[src * w..(src + 1) * w])
        };
        xor_into(a, b);
    }

    /// Rank by forward elimination. Consumes a copy, word-parallel row ops.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.row_reduce()
    }

    /// In-place forward elimination; returns the rank. Pivot rows end up
    /// in the first `rank` positions.
    pub fn row_reduce(&mut self) -> usize {
        let mut rank = 0;
        for c in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let Some(p) = (rank..self.rows).find(|&r| self.get(r, c)) else {
                continue;
            };
            if p != rank {
                let w = self.words;
                for k in 0..w {
                    self.data.swap(p * w + k, rank * w + k);
                }
            }
            for r in rank + 1..self.rows {
                if self.get(r, c) {
                    self.xor_rows(r, rank);
                }
            }
            rank += 1;
        }
        rank
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_rank(rows: &[u32], cols: usize) -> usize {
        // span size by enumeration: rank = log2 |span|
        let mut span = std::collections::HashSet::new();
        span.insert(0u32);
        for &r in rows {
            let cur: Vec<u32> = span.iter().copied().collect();
            for v in cur {
                span.insert(v ^ (r & ((1u32 << cols) - 1)));
            }
        }
        span.len().trailing_zeros() as usize
    }

    proptest! {
        #[test]
        fn rank_matches_span_enumeration(rows in proptest::collection::vec(any::<u32>(), 1..8), cols in 1usize..12) {
            let mut m = BitMatrix::zeros(rows.len(), cols);
            for (i, &r) in rows.iter().enumerate() {
                for c in 0..cols {
                    m.set(i, c, (r >> c) & 1 == 1);
                }
            }
            prop_assert_eq!(m.rank(), brute_rank(&rows, cols));
        }
    }

    #[test]
    fn identity_has_full_rank_across_words() {
        let n = 130;
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
            m.set(i, (i + 1) % n, true);
        }
        // cycle graph incidence: rank n - 1 over GF(2)
        assert_eq!(m.rank(), n - 1);
    }
}
