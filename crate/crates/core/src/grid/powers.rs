//! Iterated linear rules as sparse convolution kernels.
//!
//! For a linear rule, `F^k(x)(z) = sum_w K_k[w] * x(z + w) mod q`. The support
//! of `K_k` is the exact dependence set of the k-th iterate: coefficients are
//! reduced mod q, so cancelled offsets are absent.

use super::rule::{RuleKind, RuleSpec};
use super::Coord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kernel {
    alphabet: u8,
    /// Sorted by offset, unique, nonzero coefficients.
    terms: Vec<(Coord, u8)>,
}

impl Kernel {
    pub fn identity(alphabet: u8) -> Self {
        Kernel { alphabet, terms: vec![(Coord::ORIGIN, 1)] }
    }

    pub fn of_rule(rule: &RuleSpec) -> Result<Self> {
        match rule.kind() {
            RuleKind::Linear(terms) => Ok(Kernel {
                alphabet: rule.alphabet(),
                terms: terms
                    .iter()
                    .map(|t| (Coord::new(t.offset.di as i64, t.offset.dj as i64), t.coeff))
                    .collect::<std::collections::BTreeMap<_, _>>()
                    .into_iter()
                    .collect(),
            }),
            RuleKind::Table(_) => Err(Error::NonLinearRule),
        }
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn terms(&self) -> &[(Coord, u8)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = Coord> + '_ {
        self.terms.iter().map(|t| t.0)
    }

    pub fn coeff(&self, w: Coord) -> u8 {
        self.terms.binary_search_by(|t| t.0.cmp(&w)).map(|k| self.terms[k].1).unwrap_or(0)
    }

    /// Kernel of `F o G` where `self` is F's and `other` is G's.
    pub fn compose(&self, other: &Kernel) -> Kernel {
        assert_eq!(self.alphabet, other.alphabet, "alphabet mismatch");
        let q = self.alphabet as u32;
        let mut prod: Vec<(Coord, u32)> = Vec::with_capacity(self.len() * other.len());
        for &(a, ca) in &self.terms {
            for &(b, cb) in &other.terms {
                prod.push((a + b, ca as u32 * cb as u32 % q));
            }
        }
        prod.sort_unstable_by_key(|x| x.0);
        let mut terms: Vec<(Coord, u8)> = Vec::with_capacity(prod.len());
        let mut iter = prod.into_iter().peekable();
        while let Some((w, mut c)) = iter.next() {
            while let Some(&(w2, c2)) = iter.peek() {
                if w2 != w {
                    break;
                }
                c = (c + c2) % q;
                iter.next();
            }
            if c != 0 {
                terms.push((w, c as u8));
            }
        }
        Kernel { alphabet: self.alphabet, terms }
    }

    /// Applies the kernel at `z`, reading `x` through `read`.
    pub fn apply_at(&self, z: Coord, mut read: impl FnMut(Coord) -> u8) -> u8 {
        let q = self.alphabet as u32;
        self.terms.iter().fold(0u32, |acc, &(w, c)| (acc + c as u32 * read(z + w) as u32) % q) as u8
    }
}

/// `K_1, K_2, ...` for a linear rule.
#[derive(Debug, Clone)]
pub struct KernelPowers {
    base: Kernel,
    current: Kernel,
}

impl KernelPowers {
    pub fn new(rule: &RuleSpec) -> Result<Self> {
        let base = Kernel::of_rule(rule)?;
        Ok(KernelPowers { current: Kernel::identity(rule.alphabet()), base })
    }

    /// `[K_0, K_1, .., K_n]`.
    pub fn up_to(rule: &RuleSpec, n: usize) -> Result<Vec<Kernel>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(Kernel::identity(rule.alphabet()));
        out.extend(KernelPowers::new(rule)?.take(n));
        Ok(out)
    }
}

impl Iterator for KernelPowers {
    type Item = Kernel;

    fn next(&mut self) -> Option<Kernel> {
        self.current = self.base.compose(&self.current);
        Some(self.current.clone())
    }
}
