//! Polar transform `u = x·G_N` over arithmetic modulo a prime radix.
//!
//! `G_N` is the `n`-fold Kronecker power of `[[1, 0], [1, 1]]` in natural
//! order (no bit-reversal). With row vectors the length-2 case maps
//! `(x1, x2)` to `(x1 + x2, x2)`.

use crate::error::{Error, Result};

/// A length-`2^n_exp` sequence of symbols in `0..radix`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolBlock {
    radix: u8,
    n_exp: u32,
    symbols: Vec<u8>,
}

impl SymbolBlock {
    pub fn new(radix: u8, symbols: Vec<u8>) -> Result<Self> {
        if radix < 2 {
            return Err(Error::param("radix must be at least 2"));
        }
        if !symbols.len().is_power_of_two() {
            return Err(Error::param(format!(
                "block length {} is not a power of two",
                symbols.len()
            )));
        }
        if let Some(s) = symbols.iter().find(|&&s| s >= radix) {
            return Err(Error::param(format!("symbol {s} outside radix {radix}")));
        }
        let n_exp = symbols.len().trailing_zeros();
        Ok(Self {
            radix,
            n_exp,
            symbols,
        })
    }

    pub(crate) fn from_parts(radix: u8, n_exp: u32, symbols: Vec<u8>) -> Self {
        debug_assert_eq!(symbols.len(), 1 << n_exp);
        debug_assert!(symbols.iter().all(|&s| s < radix));
        Self {
            radix,
            n_exp,
            symbols,
        }
    }

    pub fn radix(&self) -> u8 {
        self.radix
    }

    pub fn n_exp(&self) -> u32 {
        self.n_exp
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn into_symbols(self) -> Vec<u8> {
        self.symbols
    }
}

/// In-place forward butterfly.
pub fn forward_in_place(symbols: &mut [u8], radix: u8) {
    let n = symbols.len();
    let r = radix as u16;
    let mut half = 1;
    while half < n {
        for block in symbols.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, &b) in lo.iter_mut().zip(hi.iter()) {
                *a = ((*a as u16 + b as u16) % r) as u8;
            }
        }
        half *= 2;
    }
}

/// In-place inverse butterfly, per-stage kernel `[[1, 0], [r-1, 1]]`.
pub fn inverse_in_place(symbols: &mut [u8], radix: u8) {
    let n = symbols.len();
    let r = radix as u16;
    let mut half = 1;
    while half < n {
        for block in symbols.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, &b) in lo.iter_mut().zip(hi.iter()) {
                *a = ((*a as u16 + r - b as u16) % r) as u8;
            }
        }
        half *= 2;
    }
}

pub fn forward(x: &SymbolBlock) -> SymbolBlock {
    let mut s = x.symbols.clone();
    forward_in_place(&mut s, x.radix);
    SymbolBlock::from_parts(x.radix, x.n_exp, s)
}

pub fn inverse(u: &SymbolBlock) -> SymbolBlock {
    let mut s = u.symbols.clone();
    inverse_in_place(&mut s, u.radix);
    SymbolBlock::from_parts(u.radix, u.n_exp, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Explicit Kronecker power of the 2x2 kernel.
    fn kron_matrix(n_exp: u32) -> Vec<Vec<u8>> {
        let mut g = vec![vec![1u8]];
        for _ in 0..n_exp {
            let m = g.len();
            let mut next = vec![vec![0u8; 2 * m]; 2 * m];
            for i in 0..m {
                for j in 0..m {
                    next[i][j] = g[i][j];
                    next[m + i][j] = g[i][j];
                    next[m + i][m + j] = g[i][j];
                }
            }
            g = next;
        }
        g
    }

    fn matmul(x: &[u8], g: &[Vec<u8>], r: u8) -> Vec<u8> {
        let n = x.len();
        (0..n)
            .map(|j| {
                let s: u32 = (0..n).map(|i| x[i] as u32 * g[i][j] as u32).sum();
                (s % r as u32) as u8
            })
            .collect()
    }

    fn blk(r: u8, s: &[u8]) -> SymbolBlock {
        SymbolBlock::new(r, s.to_vec()).unwrap()
    }

    #[test]
    fn base_cases() {
        assert_eq!(forward(&blk(2, &[1, 1])).symbols(), &[0, 1]);
        assert_eq!(forward(&blk(3, &[1, 2])).symbols(), &[0, 2]);
        assert_eq!(inverse(&blk(3, &[0, 2])).symbols(), &[1, 2]);
    }

    #[test]
    fn n4_binary_matches_matrix() {
        let g = kron_matrix(2);
        assert_eq!(matmul(&[1, 0, 1, 1], &g, 2), vec![1, 1, 0, 1]);
        assert_eq!(forward(&blk(2, &[1, 0, 1, 1])).symbols(), &[1, 1, 0, 1]);
    }

    #[test]
    fn exhaustive_against_matrix_up_to_8() {
        for r in [2u8, 3] {
            for n_exp in 0..=3u32 {
                let n = 1usize << n_exp;
                let g = kron_matrix(n_exp);
                let total = (r as usize).pow(n as u32);
                for code in 0..total {
                    let mut c = code;
                    let x: Vec<u8> = (0..n)
                        .map(|_| {
                            let d = (c % r as usize) as u8;
                            c /= r as usize;
                            d
                        })
                        .collect();
                    assert_eq!(forward(&blk(r, &x)).symbols(), matmul(&x, &g, r).as_slice());
                }
            }
        }
    }

    #[test]
    fn rejects_bad_blocks() {
        assert!(SymbolBlock::new(2, vec![0, 1, 0]).is_err());
        assert!(SymbolBlock::new(2, vec![0, 2]).is_err());
    }

    proptest! {
        #[test]
        fn sampled_n16_against_matrix(x in proptest::collection::vec(0u8..5, 16)) {
            let g = kron_matrix(4);
            prop_assert_eq!(forward(&blk(5, &x)).into_symbols(), matmul(&x, &g, 5));
        }

        #[test]
        fn roundtrip(r in prop_oneof![Just(2u8), Just(3u8), Just(5u8), Just(7u8)],
                     n_exp in 0u32..9, seed: u64) {
            let n = 1usize << n_exp;
            let x: Vec<u8> = (0..n)
                .map(|i| (crate::source::trial_seed(seed, 0, i as u64) % r as u64) as u8)
                .collect();
            let b = blk(r, &x);
            prop_assert_eq!(&inverse(&forward(&b)), &b);
            prop_assert_eq!(&forward(&inverse(&b)), &b);
            if r == 2 {
                prop_assert_eq!(&forward(&forward(&b)), &b);
            }
        }
    }
}
