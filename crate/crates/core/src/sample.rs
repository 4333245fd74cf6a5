//! Seeded random automorphisms built from elementary Nielsen moves.
//!
//! A sample is a composition of elementary Nielsen automorphisms —
//! inversions, swaps, and left/right transvections — drawn uniformly from
//! a seeded ChaCha stream. Each batch entry uses its index as the stream
//! number, so a batch is reproducible and can be generated or classified
//! in any order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::words::{Automorphism, Letter, ReducedWord};

/// An elementary Nielsen automorphism of the standard basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NielsenMove {
    /// `x_i -> x_i^-1`.
    Invert(u16),
    /// `x_i <-> x_j`.
    Swap(u16, u16),
    /// `x_i -> x_j x_i`.
    LeftMultiply(u16, u16),
    /// `x_i -> x_i x_j`.
    RightMultiply(u16, u16),
}

impl NielsenMove {
    /// The automorphism of the rank-`rank` free group realizing this move.
    pub fn automorphism(self, rank: u16) -> Automorphism {
        let gen = |g: u16| ReducedWord::letter(Letter::positive(g));
        let mut images: Vec<ReducedWord> = (0..rank).map(gen).collect();
        match self {
            NielsenMove::Invert(i) => {
                images[i as usize] = ReducedWord::letter(Letter::negative(i));
            }
            NielsenMove::Swap(i, j) => {
                images[i as usize] = gen(j);
                images[j as usize] = gen(i);
            }
            NielsenMove::LeftMultiply(i, j) => {
                images[i as usize] =
                    ReducedWord::from_letters([Letter::positive(j), Letter::positive(i)]);
            }
            NielsenMove::RightMultiply(i, j) => {
                images[i as usize] =
                    ReducedWord::from_letters([Letter::positive(i), Letter::positive(j)]);
            }
        }
        Automorphism::new(rank, images).expect("elementary moves are automorphisms")
    }
}

/// A move drawn uniformly among the distinct elementary moves of the rank.
fn random_move(rng: &mut ChaCha8Rng, rank: u16) -> NielsenMove {
    let n = rank as usize;
    if n < 2 {
        return NielsenMove::Invert(0);
    }
    let pairs = n * (n - 1);
    // n inversions, n(n-1)/2 swaps, n(n-1) of each transvection kind.
    let total = n + pairs / 2 + 2 * pairs;
    let mut k = rng.gen_range(0..total);
    if k < n {
        return NielsenMove::Invert(k as u16);
    }
    k -= n;
    if k < pairs / 2 {
        // Unordered pairs i < j in lexicographic order.
        let mut i = 0;
        let mut block = n - 1;
        while k >= block {
            k -= block;
            i += 1;
            block -= 1;
        }
        return NielsenMove::Swap(i as u16, (i + 1 + k) as u16);
    }
    k -= pairs / 2;
    let (which, k) = (k / pairs, k % pairs);
    let i = k / (n - 1);
    let j = (i + 1 + k % (n - 1)) % n;
    if which == 0 {
        NielsenMove::LeftMultiply(i as u16, j as u16)
    } else {
        NielsenMove::RightMultiply(i as u16, j as u16)
    }
}

/// A random composition of `length` elementary Nielsen moves.
pub fn random_automorphism(rng: &mut ChaCha8Rng, rank: u16, length: usize) -> Automorphism {
    let mut phi = Automorphism::identity(rank);
    for _ in 0..length {
        phi = random_move(rng, rank).automorphism(rank).compose(&phi);
    }
    phi
}

/// The deterministic batch: entry `i` comes from stream `i` of a ChaCha
/// generator seeded with `seed`.
pub fn sample_batch(rank: u16, length: usize, count: usize, seed: u64) -> Vec<Automorphism> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            random_automorphism(&mut rng, rank, length)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_are_deterministic() {
        let a = sample_batch(3, 20, 10, 42);
        let b = sample_batch(3, 20, 10, 42);
        assert_eq!(a, b);
        let c = sample_batch(3, 20, 10, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn samples_are_automorphisms() {
        for phi in sample_batch(3, 20, 25, 7) {
            let (inv, _) = phi.invert().expect("sample must be invertible");
            assert!(inv.compose(&phi).is_identity());
        }
    }

    #[test]
    fn moves_act_as_described() {
        let w = |s: &str| {
            ReducedWord::from_letters(s.chars().map(|c| {
                if c.is_ascii_uppercase() {
                    Letter::negative(c.to_ascii_lowercase() as u16 - 'a' as u16)
                } else {
                    Letter::positive(c as u16 - 'a' as u16)
                }
            }))
        };
        let m = NielsenMove::LeftMultiply(0, 2).automorphism(3);
        assert_eq!(m.images(), &[w("ca"), w("b"), w("c")]);
        let m = NielsenMove::RightMultiply(1, 0).automorphism(3);
        assert_eq!(m.images(), &[w("a"), w("ba"), w("c")]);
        let m = NielsenMove::Swap(0, 1).automorphism(2);
        assert_eq!(m.images(), &[w("b"), w("a")]);
        let m = NielsenMove::Invert(1).automorphism(2);
        assert_eq!(m.images(), &[w("a"), w("B")]);
    }

    #[test]
    fn rank_one_samples_stay_in_rank_one() {
        for phi in sample_batch(1, 5, 5, 3) {
            assert_eq!(phi.rank(), 1);
            assert!(phi.invert().is_ok());
        }
    }

    #[test]
    fn move_enumeration_covers_every_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = [false; 4];
        for _ in 0..500 {
            match random_move(&mut rng, 3) {
                NielsenMove::Invert(_) => seen[0] = true,
                NielsenMove::Swap(i, j) => {
                    assert!(i < j);
                    seen[1] = true;
                }
                NielsenMove::LeftMultiply(i, j) => {
                    assert_ne!(i, j);
                    seen[2] = true;
                }
                NielsenMove::RightMultiply(i, j) => {
                    assert_ne!(i, j);
                    seen[3] = true;
                }
            }
        }
        assert_eq!(seen, [true; 4]);
    }
}
