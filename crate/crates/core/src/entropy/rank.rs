//! Incremental row echelon forms over `GF(q)`, `q` prime.

use crate::error::{Error, Result};

pub fn is_prime(q: u8) -> bool {
    q >= 2 && (2..q).take_while(|d| d * d <= q).all(|d| !q.is_multiple_of(d))
}

/// Rank of a growing set of rows over `GF(q)`.
///
/// Rows are reduced against the current basis as they are pushed, so the
/// rank after any prefix of rows is available at no extra cost.
#[derive(Debug, Clone)]
pub struct RankAccumulator {
    cols: usize,
    inner: Inner,
    rank: usize,
}

#[derive(Debug, Clone)]
enum Inner {
    Binary { words: usize, pivots: Vec<Option<Vec<u64>>> },
    Prime { q: u32, inv: Vec<u32>, pivots: Vec<Option<Vec<u8>>> },
}

impl RankAccumulator {
    pub fn new(q: u8, cols: usize) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::NonPrimeAlphabet(q));
        }
        let inner = if q == 2 {
            Inner::Binary { words: cols.div_ceil(64), pivots: vec![None; cols] }
        } else {
            let q32 = q as u32;
            let inv = (0..q32).map(|a| (1..q32).find(|b| a * b % q32 == 1).unwrap_or(0)).collect();
            Inner::Prime { q: q32, inv, pivots: vec![None; cols] }
        };
        Ok(RankAccumulator { cols, inner, rank: 0 })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Adds a row given as `(column, coefficient)` pairs; repeated columns are
    /// summed. Returns whether the rank grew.
    pub fn push_sparse(&mut self, entries: &[(usize, u8)]) -> bool {
        let grew = match &mut self.inner {
            Inner::Binary { words, pivots } => {
                let mut row = vec![0u64; *words];
                for &(c, v) in entries {
                    assert!(c < self.cols, "column out of range");
                    if v & 1 == 1 {
                        row[c >> 6] ^= 1 << (c & 63);
                    }
                }
                reduce_binary(row, pivots)
            }
            Inner::Prime { q, inv, pivots } => {
                let mut row = vec![0u8; self.cols];
                for &(c, v) in entries {
                    assert!(c < self.cols, "column out of range");
                    row[c] = ((row[c] as u32 + v as u32) % *q) as u8;
                }
                reduce_prime(row, *q, inv, pivots)
            }
        };
        self.rank += grew as usize;
        grew
    }

    /// Adds a dense row.
    pub fn push_dense(&mut self, row: &[u8]) -> bool {
        assert_eq!(row.len(), self.cols, "row length mismatch");
        let entries: Vec<(usize, u8)> = row.iter().enumerate().filter(|(_, &v)| v != 0).map(|(c, &v)| (c, v)).collect();
        self.push_sparse(&entries)
    }
}

fn reduce_binary(mut row: Vec<u64>, pivots: &mut [Option<Vec<u64>>]) -> bool {
    let mut w = 0;
    while w < row.len() {
        if row[w] == 0 {
            w += 1;
            continue;
        }
        let c = w * 64 + row[w].trailing_zeros() as usize;
        match &pivots[c] {
            Some(basis) => {
                for (x, b) in row[w..].iter_mut().zip(&basis[w..]) {
                    *x ^= b;
                }
            }
            None => {
                pivots[c] = Some(row);
                return true;
            }
        }
    }
    false
}

fn reduce_prime(mut row: Vec<u8>, q: u32, inv: &[u32], pivots: &mut [Option<Vec<u8>>]) -> bool {
    let mut c = 0;
    while c < row.len() {
        if row[c] == 0 {
            c += 1;
            continue;
        }
        match &pivots[c] {
            Some(basis) => {
                let f = q - row[c] as u32;
                for (x, &b) in row[c..].iter_mut().zip(&basis[c..]) {
                    *x = ((*x as u32 + f * b as u32) % q) as u8;
                }
            }
            None => {
                let s = inv[row[c] as usize];
                for x in row[c..].iter_mut() {
                    *x = (*x as u32 * s % q) as u8;
                }
                pivots[c] = Some(row);
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn primes() {
        let p: Vec<u8> = (0..=36).filter(|&q| is_prime(q)).collect();
        assert_eq!(p, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31]);
        assert!(RankAccumulator::new(4, 3).is_err());
    }

    #[test]
    fn small_binary() {
        let mut r = RankAccumulator::new(2, 3).unwrap();
        assert!(r.push_dense(&[1, 1, 0]));
        assert!(r.push_dense(&[0, 1, 1]));
        assert!(!r.push_dense(&[1, 0, 1]));
        assert!(!r.push_dense(&[0, 0, 0]));
        assert!(r.push_dense(&[0, 0, 1]));
        assert_eq!(r.rank(), 3);
    }

    #[test]
    fn small_ternary() {
        let mut r = RankAccumulator::new(3, 2).unwrap();
        assert!(r.push_dense(&[1, 2]));
        assert!(!r.push_dense(&[2, 1]));
        assert!(r.push_dense(&[1, 1]));
        assert_eq!(r.rank(), 2);
    }

    /// Rank by full Gaussian elimination on a copy, no incremental tricks.
    fn naive_rank(rows: &[Vec<u8>], q: u32) -> usize {
        let mut m: Vec<Vec<u32>> = rows.iter().map(|r| r.iter().map(|&v| v as u32 % q).collect()).collect();
        let cols = m.first().map_or(0, |r| r.len());
        let mut rank = 0;
        for c in 0..cols {
            let Some(p) = (rank..m.len()).find(|&r| m[r][c] != 0) else { continue };
            m.swap(rank, p);
            let inv = (1..q).find(|b| m[rank][c] * b % q == 1).unwrap();
            let pivot: Vec<u32> = m[rank].iter().map(|v| v * inv % q).collect();
            for (r, row) in m.iter_mut().enumerate() {
                if r != rank && row[c] != 0 {
                    let f = row[c];
                    for (v, pv) in row.iter_mut().zip(&pivot) {
                        *v = (*v + q * q - f * pv % q) % q;
                    }
                }
            }
            m[rank] = pivot;
            rank += 1;
        }
        rank
    }

    proptest! {
        #[test]
        fn matches_naive(q in prop::sample::select(vec![2u8, 3, 5, 7]),
                         rows in prop::collection::vec(prop::collection::vec(0u8..7, 70), 0..20)) {
            let mut acc = RankAccumulator::new(q, 70).unwrap();
            for r in &rows {
                let r: Vec<u8> = r.iter().map(|v| v % q).collect();
                acc.push_dense(&r);
            }
            prop_assert_eq!(acc.rank(), naive_rank(&rows, q as u32));
        }
    }
}
