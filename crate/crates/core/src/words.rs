//! Free group words and automorphisms.
//!
//! A word in F_N is a sequence of letters over the symmetrised basis
//! `{a_0, a_0^{-1}, ..., a_{N-1}, a_{N-1}^{-1}}`; [`ReducedWord`] maintains
//! freeness (no adjacent cancelling pair) as an invariant. [`Automorphism`]
//! stores an endomorphism as basis images; it is *certified* as an
//! automorphism by [`Automorphism::invert`], which searches for a Nielsen
//! factorisation and returns the inverse together with the witnessing
//! sequence of elementary automorphisms.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;

use num::traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Matrix;
use crate::Int;

/// A basis letter or its inverse.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Letter {
    gen: u16,
    inverse: bool,
}

impl Letter {
    pub fn positive(gen: u16) -> Letter {
        Letter { gen, inverse: false }
    }

    pub fn negative(gen: u16) -> Letter {
        Letter { gen, inverse: true }
    }

    pub fn gen(self) -> u16 {
        self.gen
    }

    pub fn is_inverse(self) -> bool {
        self.inverse
    }

    pub fn inverse(self) -> Letter {
        Letter {
            gen: self.gen,
            inverse: !self.inverse,
        }
    }

    /// Dense index in `0..2*rank`: positive letters at even slots.
    pub fn index(self) -> usize {
        2 * self.gen as usize + self.inverse as usize
    }

    pub fn from_index(i: usize) -> Letter {
        Letter {
            gen: (i / 2) as u16,
            inverse: i % 2 == 1,
        }
    }

    /// Default printable name: `a..z` for the first generators (uppercase for
    /// inverses), `x7` / `x7'` beyond that.
    pub fn name(self) -> String {
        if self.gen < 26 {
            let c = (b'a' + self.gen as u8) as char;
            if self.inverse {
                c.to_ascii_uppercase().to_string()
            } else {
                c.to_string()
            }
        } else if self.inverse {
            format!("x{}'", self.gen)
        } else {
            format!("x{}", self.gen)
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// A freely reduced word. The empty word is the identity.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
pub struct ReducedWord {
    letters: Vec<Letter>,
}

impl ReducedWord {
    pub fn empty() -> ReducedWord {
        ReducedWord::default()
    }

    pub fn letter(l: Letter) -> ReducedWord {
        ReducedWord { letters: vec![l] }
    }

    /// Reduce an arbitrary letter sequence.
    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> ReducedWord {
        let mut w = ReducedWord::empty();
        for l in letters {
            w.push(l);
        }
        w
    }

    /// Append one letter, cancelling against the current last letter.
    pub fn push(&mut self, l: Letter) {
        if self.letters.last() == Some(&l.inverse()) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    /// Append a reduced word (with cancellation at the seam).
    pub fn push_word(&mut self, other: &ReducedWord) {
        for &l in &other.letters {
            self.push(l);
        }
    }

    pub fn concat(&self, other: &ReducedWord) -> ReducedWord {
        let mut w = self.clone();
        w.push_word(other);
        w
    }

    pub fn inverse(&self) -> ReducedWord {
        ReducedWord {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    pub fn conjugate_by(&self, u: &ReducedWord) -> ReducedWord {
        u.concat(self).concat(&u.inverse())
    }

    pub fn pow(&self, k: i64) -> ReducedWord {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = ReducedWord::empty();
        for _ in 0..k.unsigned_abs() {
            out.push_word(&base);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn first(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }

    pub fn prefix(&self, n: usize) -> ReducedWord {
        ReducedWord {
            letters: self.letters[..n.min(self.letters.len())].to_vec(),
        }
    }

    pub fn starts_with(&self, other: &ReducedWord) -> bool {
        self.letters.len() >= other.letters.len()
            && self.letters[..other.letters.len()] == other.letters[..]
    }

    pub fn common_prefix_len(&self, other: &ReducedWord) -> usize {
        self.letters
            .iter()
            .zip(&other.letters)
            .take_while(|(a, b)| a == b)
            .count()
    }

    /// Shortlex order: by length, then lexicographically.
    pub fn shortlex_cmp(&self, other: &ReducedWord) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.first(), self.last()) {
            (Some(f), Some(l)) => f != l.inverse(),
            _ => true,
        }
    }

    /// Write `self = u * core * u^{-1}` with `core` cyclically reduced;
    /// returns `(u, core)`.
    pub fn cyclic_reduction(&self) -> (ReducedWord, ReducedWord) {
        let mut lo = 0;
        let mut hi = self.letters.len();
        while hi - lo >= 2 && self.letters[lo] == self.letters[hi - 1].inverse() {
            lo += 1;
            hi -= 1;
        }
        (
            ReducedWord {
                letters: self.letters[..lo].to_vec(),
            },
            ReducedWord {
                letters: self.letters[lo..hi].to_vec(),
            },
        )
    }

    /// The primitive root: the unique `r` with `self = r^k`, `k` maximal.
    /// Returns `(r, k)`; the empty word yields `(empty, 0)`.
    pub fn primitive_root(&self) -> (ReducedWord, usize) {
        if self.is_empty() {
            return (ReducedWord::empty(), 0);
        }
        let (u, core) = self.cyclic_reduction();
        let n = core.len();
        // Smallest period of the core via the KMP failure function. For a
        // cyclically reduced word, core = r0^k exactly when the smallest
        // period divides n.
        let ls = core.letters();
        let mut fail = vec![0usize; n];
        for i in 1..n {
            let mut j = fail[i - 1];
            while j > 0 && ls[i] != ls[j] {
                j = fail[j - 1];
            }
            if ls[i] == ls[j] {
                j += 1;
            }
            fail[i] = j;
        }
        let period = n - fail[n - 1];
        let (root_core, k) = if n % period == 0 {
            (core.prefix(period), n / period)
        } else {
            (core.clone(), 1)
        };
        (root_core.conjugate_by(&u), k)
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "1");
        }
        for l in &self.letters {
            write!(f, "{}", l)?;
        }
        Ok(())
    }
}

/// Some conjugator `u` with `w2 = u * w1 * u^{-1}`, if the words are
/// conjugate. Exact and complete (rotation check on cyclic reductions).
pub fn conjugating_element(w1: &ReducedWord, w2: &ReducedWord) -> Option<ReducedWord> {
    let (c1, k1) = w1.cyclic_reduction();
    let (c2, k2) = w2.cyclic_reduction();
    if k1.len() != k2.len() {
        return None;
    }
    if k1.is_empty() {
        return Some(ReducedWord::empty());
    }
    for r in 0..k1.len() {
        let rotated = ReducedWord::from_letters(
            k1.letters()[r..]
                .iter()
                .chain(&k1.letters()[..r])
                .copied(),
        );
        if rotated == k2 {
            // With p the length-r prefix of k1: k2 = p^{-1} k1 p, so
            // u = c2 p^{-1} c1^{-1} conjugates w1 to w2.
            let p = k1.prefix(r);
            return Some(c2.concat(&p.inverse()).concat(&c1.inverse()));
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Automorphisms
// ---------------------------------------------------------------------------

/// An endomorphism of F_N given by basis images. Use [`Automorphism::invert`]
/// to certify that it is actually invertible.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Automorphism {
    rank: u16,
    images: Vec<ReducedWord>,
}

impl Automorphism {
    pub fn new(rank: u16, images: Vec<ReducedWord>) -> Result<Automorphism> {
        if images.len() != rank as usize {
            return Err(Error::Parse(format!(
                "expected {} images, got {}",
                rank,
                images.len()
            )));
        }
        for w in &images {
            if let Some(bad) = w.letters().iter().find(|l| l.gen() >= rank) {
                return Err(Error::Parse(format!(
                    "letter {} out of range for rank {}",
                    bad, rank
                )));
            }
        }
        Ok(Automorphism { rank, images })
    }

    pub fn identity(rank: u16) -> Automorphism {
        Automorphism {
            rank,
            images: (0..rank)
                .map(|g| ReducedWord::letter(Letter::positive(g)))
                .collect(),
        }
    }

    pub fn rank(&self) -> u16 {
        self.rank
    }

    pub fn images(&self) -> &[ReducedWord] {
        &self.images
    }

    pub fn image(&self, gen: u16) -> &ReducedWord {
        &self.images[gen as usize]
    }

    /// Image of a single letter (inverse letters map to inverse images).
    pub fn image_of_letter(&self, l: Letter) -> ReducedWord {
        if l.is_inverse() {
            self.images[l.gen() as usize].inverse()
        } else {
            self.images[l.gen() as usize].clone()
        }
    }

    pub fn apply(&self, w: &ReducedWord) -> ReducedWord {
        let mut out = ReducedWord::empty();
        for &l in w.letters() {
            let img = &self.images[l.gen() as usize];
            if l.is_inverse() {
                for &m in img.letters().iter().rev() {
                    out.push(m.inverse());
                }
            } else {
                for &m in img.letters() {
                    out.push(m);
                }
            }
        }
        out
    }

    /// `(self ∘ other)(x) = self(other(x))`.
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        assert_eq!(self.rank, other.rank, "rank mismatch in composition");
        Automorphism {
            rank: self.rank,
            images: other.images.iter().map(|w| self.apply(w)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Automorphism {
        let mut out = Automorphism::identity(self.rank);
        for _ in 0..k {
            out = self.compose(&out);
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.images
            .iter()
            .enumerate()
            .all(|(g, w)| w.letters() == [Letter::positive(g as u16)])
    }

    /// True when every image is a single letter and the letters hit every
    /// generator exactly once (a signed permutation of the basis).
    pub fn is_letter_permutation(&self) -> bool {
        let mut seen = vec![false; self.rank as usize];
        for w in &self.images {
            match w.letters() {
                [l] => {
                    if seen[l.gen() as usize] {
                        return false;
                    }
                    seen[l.gen() as usize] = true;
                }
                _ => return false,
            }
        }
        true
    }

    pub fn max_image_len(&self) -> usize {
        self.images.iter().map(|w| w.len()).max().unwrap_or(0)
    }

    pub fn total_image_len(&self) -> usize {
        self.images.iter().map(|w| w.len()).sum()
    }

    /// Abelianised matrix: column j holds the exponent sums of the image of
    /// generator j.
    pub fn abelianized(&self) -> Matrix<Int> {
        let n = self.rank as usize;
        let mut m: Matrix<Int> = Matrix::zero(n, n);
        for (j, w) in self.images.iter().enumerate() {
            for l in w.letters() {
                let e: &mut Int = &mut m[(l.gen() as usize, j)];
                if l.is_inverse() {
                    *e = e.clone() - Int::one();
                } else {
                    *e = e.clone() + Int::one();
                }
            }
        }
        m
    }

    /// The twisted map `i_u ∘ self : x ↦ u · self(x) · u^{-1}`.
    pub fn inner_twist(&self, u: &ReducedWord) -> Automorphism {
        Automorphism {
            rank: self.rank,
            images: self.images.iter().map(|w| w.conjugate_by(u)).collect(),
        }
    }

    /// Cooper-style global cancellation bound for this map: the number of
    /// folds needed to carry a wedge of circles over the basis to the image
    /// wedge; each fold cancels at most one position in any concatenation.
    /// Zero exactly on letter permutations.
    pub fn bounded_cancellation(&self) -> usize {
        self.total_image_len().saturating_sub(self.rank as usize)
    }
}

// ---------------------------------------------------------------------------
// Nielsen inversion
// ---------------------------------------------------------------------------

/// Elementary Nielsen automorphisms of F_N.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ElementaryAut {
    /// `a_i ↦ a_i · a_j^{±1}` (other generators fixed).
    RightMult { i: u16, j: u16, inv: bool },
    /// `a_i ↦ a_j^{±1} · a_i`.
    LeftMult { i: u16, j: u16, inv: bool },
    /// `a_i ↦ a_i^{-1}`.
    Invert { i: u16 },
    /// Exchange `a_i ↔ a_j`.
    Swap { i: u16, j: u16 },
}

impl ElementaryAut {
    pub fn automorphism(self, rank: u16) -> Automorphism {
        let mut images: Vec<ReducedWord> = (0..rank)
            .map(|g| ReducedWord::letter(Letter::positive(g)))
            .collect();
        match self {
            ElementaryAut::RightMult { i, j, inv } => {
                let mut w = ReducedWord::letter(Letter::positive(i));
                w.push(if inv {
                    Letter::negative(j)
                } else {
                    Letter::positive(j)
                });
                images[i as usize] = w;
            }
            ElementaryAut::LeftMult { i, j, inv } => {
                let mut w = ReducedWord::letter(if inv {
                    Letter::negative(j)
                } else {
                    Letter::positive(j)
                });
                w.push(Letter::positive(i));
                images[i as usize] = w;
            }
            ElementaryAut::Invert { i } => {
                images[i as usize] = ReducedWord::letter(Letter::negative(i));
            }
            ElementaryAut::Swap { i, j } => {
                images.swap(i as usize, j as usize);
            }
        }
        Automorphism {
            rank,
            images,
        }
    }
}

/// A certified Nielsen factorisation: composing the recorded moves after the
/// original map yields the identity, so their product *is* the inverse.
#[derive(Clone, Debug)]
pub struct NielsenWitness {
    pub rank: u16,
    pub moves: Vec<ElementaryAut>,
}

impl NielsenWitness {
    /// The product `ρ_1 ∘ ρ_2 ∘ … ∘ ρ_m` of the recorded moves.
    pub fn automorphism(&self) -> Automorphism {
        let mut acc = Automorphism::identity(self.rank);
        for &m in &self.moves {
            acc = acc.compose(&m.automorphism(self.rank));
        }
        acc
    }
}

/// Apply a tuple move corresponding to precomposition by `m`.
fn apply_move(tuple: &mut [ReducedWord], m: ElementaryAut) {
    match m {
        ElementaryAut::RightMult { i, j, inv } => {
            let w = if inv {
                tuple[j as usize].inverse()
            } else {
                tuple[j as usize].clone()
            };
            tuple[i as usize] = tuple[i as usize].concat(&w);
        }
        ElementaryAut::LeftMult { i, j, inv } => {
            let w = if inv {
                tuple[j as usize].inverse()
            } else {
                tuple[j as usize].clone()
            };
            tuple[i as usize] = w.concat(&tuple[i as usize]);
        }
        ElementaryAut::Invert { i } => {
            tuple[i as usize] = tuple[i as usize].inverse();
        }
        ElementaryAut::Swap { i, j } => {
            tuple.swap(i as usize, j as usize);
        }
    }
}

fn multiplication_moves(rank: u16) -> Vec<ElementaryAut> {
    let mut moves = Vec::new();
    for i in 0..rank {
        for j in 0..rank {
            if i == j {
                continue;
            }
            for inv in [false, true] {
                moves.push(ElementaryAut::RightMult { i, j, inv });
                moves.push(ElementaryAut::LeftMult { i, j, inv });
            }
        }
    }
    moves
}

fn tuple_len(tuple: &[ReducedWord]) -> usize {
    tuple.iter().map(|w| w.len()).sum()
}

/// Is the tuple the standard basis up to letter inversions and order? If so,
/// return the finishing moves that carry it to the identity tuple.
fn finishing_moves(tuple: &[ReducedWord]) -> Option<Vec<ElementaryAut>> {
    let rank = tuple.len();
    let mut position_of_gen = vec![None; rank];
    let mut inverted = vec![false; rank];
    for (slot, w) in tuple.iter().enumerate() {
        match w.letters() {
            [l] => {
                if position_of_gen[l.gen() as usize].is_some() {
                    return None;
                }
                position_of_gen[l.gen() as usize] = Some(slot);
                inverted[slot] = l.is_inverse();
            }
            _ => return None,
        }
    }
    let mut moves = Vec::new();
    for slot in 0..rank {
        if inverted[slot] {
            moves.push(ElementaryAut::Invert { i: slot as u16 });
        }
    }
    // Sort by generator with transpositions, tracking positions.
    let mut pos: Vec<usize> = (0..rank)
        .map(|g| position_of_gen[g].expect("bijective by the check above"))
        .collect();
    // pos[g] = current slot of generator g.
    let mut slot_gen: Vec<u16> = vec![0; rank];
    for g in 0..rank {
        slot_gen[pos[g]] = g as u16;
    }
    for g in 0..rank {
        let s = pos[g];
        if s != g {
            moves.push(ElementaryAut::Swap {
                i: g as u16,
                j: s as u16,
            });
            let other = slot_gen[g];
            slot_gen.swap(g, s);
            pos[other as usize] = s;
            pos[g] = g;
        }
    }
    Some(moves)
}

#[derive(PartialEq, Eq)]
struct SearchState {
    cost: usize,
    tuple: Vec<ReducedWord>,
    path: Vec<ElementaryAut>,
}

impl Ord for SearchState {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost (BinaryHeap is a max-heap).
        other
            .cost
            .cmp(&self.cost)
            .then_with(|| other.path.len().cmp(&self.path.len()))
    }
}

impl PartialOrd for SearchState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Automorphism {
    /// Invert by Nielsen reduction of the image tuple. On success returns the
    /// inverse together with the witnessing factorisation (the composition of
    /// the witness moves after `self` is the identity — this is re-verified
    /// before returning). Fails with [`Error::NotAutomorphism`] when the map
    /// is certifiably non-invertible (abelianisation determinant ≠ ±1, or the
    /// reduced tuple is not a basis) or when the search budget runs out.
    pub fn invert(&self) -> Result<(Automorphism, NielsenWitness)> {
        if self.images.iter().any(|w| w.is_empty()) {
            return Err(Error::NotAutomorphism(
                "a generator maps to the identity".into(),
            ));
        }
        let det = self.abelianized().det();
        if !(det.clone().abs()).is_one() {
            return Err(Error::NotAutomorphism(format!(
                "abelianisation determinant is {}, not ±1",
                det
            )));
        }

        let mut tuple = self.images.clone();
        let mut moves: Vec<ElementaryAut> = Vec::new();
        let mult_moves = multiplication_moves(self.rank);

        // Phase 1: greedy strict length descent.
        loop {
            let current = tuple_len(&tuple);
            let mut best: Option<(usize, ElementaryAut)> = None;
            for &m in &mult_moves {
                let mut t = tuple.clone();
                apply_move(&mut t, m);
                let l = tuple_len(&t);
                if l < current && best.as_ref().map_or(true, |(bl, _)| l < *bl) {
                    best = Some((l, m));
                }
            }
            match best {
                Some((_, m)) => {
                    apply_move(&mut tuple, m);
                    moves.push(m);
                }
                None => break,
            }
        }

        if let Some(fin) = finishing_moves(&tuple) {
            return self.certify_inverse(moves, fin);
        }

        // Phase 2: the greedy walk stalled above total length N. Run a small
        // best-first search allowing equal-length plateaus and short peaks.
        const NODE_CAP: usize = 60_000;
        let slack = 2 * self.rank as usize;
        let start_cost = tuple_len(&tuple);
        let mut heap = BinaryHeap::new();
        let mut seen: HashSet<Vec<ReducedWord>> = HashSet::new();
        heap.push(SearchState {
            cost: start_cost,
            tuple: tuple.clone(),
            path: Vec::new(),
        });
        seen.insert(tuple.clone());
        let mut expanded = 0;
        while let Some(SearchState { cost, tuple: t, path }) = heap.pop() {
            if let Some(fin) = finishing_moves(&t) {
                moves.extend(path.iter().copied());
                return self.certify_inverse(moves, fin);
            }
            expanded += 1;
            if expanded > NODE_CAP {
                break;
            }
            for &m in &mult_moves {
                let mut nt = t.clone();
                apply_move(&mut nt, m);
                let l = tuple_len(&nt);
                if l > start_cost + slack || l > cost + slack {
                    continue;
                }
                if seen.insert(nt.clone()) {
                    let mut np = path.clone();
                    np.push(m);
                    heap.push(SearchState {
                        cost: l,
                        tuple: nt,
                        path: np,
                    });
                }
            }
        }

        Err(Error::NotAutomorphism(format!(
            "Nielsen reduction stalled at image tuple [{}] (total length {}); \
             the map is not an automorphism or exceeds the inversion search budget",
            tuple.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(", "),
            tuple_len(&tuple),
        )))
    }

    fn certify_inverse(
        &self,
        mut moves: Vec<ElementaryAut>,
        finishing: Vec<ElementaryAut>,
    ) -> Result<(Automorphism, NielsenWitness)> {
        moves.extend(finishing);
        let witness = NielsenWitness {
            rank: self.rank,
            moves,
        };
        let inverse = witness.automorphism();
        if !self.compose(&inverse).is_identity() {
            return Err(Error::Internal(
                "Nielsen witness failed verification".into(),
            ));
        }
        Ok((inverse, witness))
    }
}

// ---------------------------------------------------------------------------
// Outer equality
// ---------------------------------------------------------------------------

/// Verdict of [`equal_in_out`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OuterEquality {
    /// `psi = i_u ∘ phi` for the returned `u`.
    Equal { conjugator: ReducedWord },
    /// Certified distinct in Out(F_N), with the obstruction used.
    Distinct { reason: String },
    /// No conjugator with length ≤ bound exists among the candidates tried;
    /// equality is undecided.
    Unknown { bound: usize },
}

/// Decide whether two automorphisms agree in Out(F_N), i.e. whether
/// `psi = i_u ∘ phi` for some word `u`.
///
/// The conjugator, if it exists, is unique (inner automorphisms act freely on
/// a nonabelian free group), and must conjugate `phi(a_0)` to `psi(a_0)`, so
/// it lies in the coset `u_0 · ⟨root⟩` determined by that single conjugacy
/// equation. Candidates in the coset are enumerated up to the length bound
/// and verified against every generator. Distinctness is certified either by
/// an abelianisation mismatch or by non-conjugacy of corresponding images.
pub fn equal_in_out(phi: &Automorphism, psi: &Automorphism, bound: usize) -> OuterEquality {
    if phi.rank() != psi.rank() {
        return OuterEquality::Distinct {
            reason: "different ranks".into(),
        };
    }
    if phi == psi {
        return OuterEquality::Equal {
            conjugator: ReducedWord::empty(),
        };
    }
    if phi.abelianized() != psi.abelianized() {
        return OuterEquality::Distinct {
            reason: "abelianisations differ".into(),
        };
    }
    // Pivot on the generator with the longest phi-image: its centralizer
    // coset is the thinnest candidate set.
    let pivot = (0..phi.rank())
        .max_by_key(|&g| phi.image(g).len())
        .expect("rank is positive");
    let w1 = phi.image(pivot);
    let w2 = psi.image(pivot);
    let Some(u0) = conjugating_element(w1, w2) else {
        return OuterEquality::Distinct {
            reason: format!(
                "images of generator {} are not conjugate",
                Letter::positive(pivot)
            ),
        };
    };
    let (root, _) = w1.primitive_root();
    let verify = |u: &ReducedWord| {
        (0..phi.rank()).all(|g| &phi.image(g).conjugate_by(u) == psi.image(g))
    };
    // Enumerate u0 * root^k outward in both directions until the candidate
    // length exceeds the bound on both sides.
    let mut k_pos = u0.clone();
    let mut k_neg = u0.concat(&root.inverse());
    let mut steps = 0usize;
    loop {
        let mut progressed = false;
        if k_pos.len() <= bound {
            if verify(&k_pos) {
                return OuterEquality::Equal { conjugator: k_pos };
            }
            k_pos = k_pos.concat(&root);
            progressed = true;
        }
        if k_neg.len() <= bound {
            if verify(&k_neg) {
                return OuterEquality::Equal { conjugator: k_neg };
            }
            k_neg = k_neg.concat(&root.inverse());
            progressed = true;
        }
        steps += 1;
        if !progressed || steps > 4 * bound + 8 {
            break;
        }
    }
    if root.is_empty() {
        // Centralizer is trivial only for w1 = 1, which new() excludes for
        // automorphisms; treat defensively as undecided.
        return OuterEquality::Unknown { bound };
    }
    OuterEquality::Unknown { bound }
}

// ---------------------------------------------------------------------------
// Boundary rays
// ---------------------------------------------------------------------------

/// A finite prefix of an infinite reduced boundary ray, tagged with the
/// number of iterations used to generate it.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct BoundaryRayPrefix {
    pub prefix: ReducedWord,
    pub depth: usize,
}

impl BoundaryRayPrefix {
    pub fn new(prefix: ReducedWord, depth: usize) -> Self {
        BoundaryRayPrefix { prefix, depth }
    }
}

// ---------------------------------------------------------------------------

/// Exponent-sum vector of a word (class in H_1).
pub fn abelianization_vector(w: &ReducedWord, rank: u16) -> Vec<i64> {
    let mut v = vec![0i64; rank as usize];
    for l in w.letters() {
        v[l.gen() as usize] += if l.is_inverse() { -1 } else { 1 };
    }
    v
}

/// Tally of generator occurrences ignoring sign, used by transition matrices.
pub fn occurrence_counts(w: &ReducedWord, rank: u16) -> Vec<u64> {
    let mut v = vec![0u64; rank as usize];
    for l in w.letters() {
        v[l.gen() as usize] += 1;
    }
    v
}

/// Convenience: deduplicate words, preserving first-seen order.
pub fn dedup_words(words: Vec<ReducedWord>) -> Vec<ReducedWord> {
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for w in words {
        if seen.insert(w.clone(), ()).is_none() {
            out.push(w);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> ReducedWord {
        // Test helper: lowercase = positive, uppercase = inverse.
        ReducedWord::from_letters(s.chars().map(|c| {
            if c.is_ascii_uppercase() {
                Letter::negative(c.to_ascii_lowercase() as u16 - 'a' as u16)
            } else {
                Letter::positive(c as u16 - 'a' as u16)
            }
        }))
    }

    fn aut(rank: u16, images: &[&str]) -> Automorphism {
        Automorphism::new(rank, images.iter().map(|s| w(s)).collect()).unwrap()
    }

    /// Independent reduction oracle: repeatedly delete the first cancelling
    /// adjacent pair until none remains.
    fn naive_reduce(letters: &[Letter]) -> Vec<Letter> {
        let mut v = letters.to_vec();
        loop {
            let mut cancelled = false;
            for i in 0..v.len().saturating_sub(1) {
                if v[i] == v[i + 1].inverse() {
                    v.drain(i..=i + 1);
                    cancelled = true;
                    break;
                }
            }
            if !cancelled {
                return v;
            }
        }
    }

    #[test]
    fn reduction_matches_naive_oracle() {
        // Deterministic pseudo-random letter soup over rank 3.
        let mut state: u64 = 42;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 33) as usize
        };
        for _ in 0..200 {
            let n = next() % 24;
            let letters: Vec<Letter> = (0..n).map(|_| Letter::from_index(next() % 6)).collect();
            let fast = ReducedWord::from_letters(letters.clone());
            assert_eq!(fast.letters(), naive_reduce(&letters).as_slice());
        }
    }

    #[test]
    fn reduced_word_has_no_cancelling_pair() {
        let word = w("abBAc");
        assert_eq!(word.to_string(), "c");
        assert_eq!(w("aA").to_string(), "1");
    }

    #[test]
    fn inverse_and_concat() {
        let u = w("abC");
        assert_eq!(u.inverse().to_string(), "cBA");
        assert_eq!(u.concat(&u.inverse()).to_string(), "1");
        assert_eq!(w("ab").concat(&w("Bc")).to_string(), "ac");
    }

    #[test]
    fn cyclic_reduction_splits_conjugator() {
        let word = w("abcBA");
        let (u, core) = word.cyclic_reduction();
        assert_eq!(u.to_string(), "ab");
        assert_eq!(core.to_string(), "c");
        assert_eq!(u.concat(&core).concat(&u.inverse()), word);
    }

    #[test]
    fn primitive_roots() {
        let cube = w("ab").pow(3);
        let (r, k) = cube.primitive_root();
        assert_eq!((r.to_string().as_str(), k), ("ab", 3));
        let (r, k) = w("aba").primitive_root();
        assert_eq!((r.to_string().as_str(), k), ("aba", 1));
        // Conjugated power: c (ab)^2 c^{-1}.
        let word = w("ab").pow(2).conjugate_by(&w("c"));
        let (r, k) = word.primitive_root();
        assert_eq!(k, 2);
        assert_eq!(r.pow(2), word);
    }

    #[test]
    fn conjugacy_solver_round_trips() {
        let base = w("abC");
        let u = w("cBa");
        let moved = base.conjugate_by(&u);
        let found = conjugating_element(&base, &moved).expect("conjugate");
        assert_eq!(base.conjugate_by(&found), moved);
        assert!(conjugating_element(&w("ab"), &w("aab")).is_none());
        assert!(conjugating_element(&w("ab"), &w("AB")).is_none());
    }

    #[test]
    fn apply_is_a_homomorphism() {
        let phi = aut(3, &["b", "ac", "a"]);
        let u = w("aBc");
        let v = w("Cba");
        assert_eq!(
            phi.apply(&u.concat(&v)),
            phi.apply(&u).concat(&phi.apply(&v))
        );
        assert_eq!(phi.apply(&u.inverse()), phi.apply(&u).inverse());
    }

    #[test]
    fn compose_against_hand_example() {
        let phi = aut(3, &["b", "ac", "a"]);
        let phi2 = phi.compose(&phi);
        assert_eq!(phi2.image(0).to_string(), "ac");
        assert_eq!(phi2.image(1).to_string(), "ba");
        assert_eq!(phi2.image(2).to_string(), "b");
        let phi3 = phi.compose(&phi2);
        assert_eq!(phi3.image(0).to_string(), "ba");
    }

    #[test]
    fn invert_running_example() {
        let phi = aut(3, &["b", "ac", "a"]);
        let (inv, witness) = phi.invert().expect("invertible");
        assert_eq!(inv.image(0).to_string(), "c");
        assert_eq!(inv.image(1).to_string(), "a");
        assert_eq!(inv.image(2).to_string(), "Cb");
        assert!(phi.compose(&inv).is_identity());
        assert!(inv.compose(&phi).is_identity());
        assert_eq!(witness.automorphism(), inv);
    }

    #[test]
    fn invert_identity_and_permutations() {
        let id = Automorphism::identity(4);
        let (inv, _) = id.invert().unwrap();
        assert!(inv.is_identity());
        let perm = aut(3, &["C", "a", "B"]);
        let (inv, _) = perm.invert().unwrap();
        assert!(perm.compose(&inv).is_identity());
    }

    #[test]
    fn invert_rejects_non_automorphisms() {
        // a -> a, b -> a is not injective on H_1.
        let endo = aut(2, &["a", "a"]);
        assert!(matches!(
            endo.invert(),
            Err(Error::NotAutomorphism(_))
        ));
        // a -> aa has determinant 2.
        let endo = aut(1, &["aa"]);
        assert!(matches!(
            endo.invert(),
            Err(Error::NotAutomorphism(_))
        ));
    }

    #[test]
    fn invert_random_elementary_compositions() {
        // Deterministic sampling over the elementary moves; every sample is
        // an automorphism by construction, so inversion must succeed and
        // certify.
        let rank = 3u16;
        let moves = multiplication_moves(rank);
        let mut state: u64 = 7;
        let mut next = move || {
            state = state.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
            (state >> 33) as usize
        };
        for trial in 0..25 {
            let mut phi = Automorphism::identity(rank);
            for _ in 0..(4 + trial % 6) {
                let m = moves[next() % moves.len()];
                phi = phi.compose(&m.automorphism(rank));
            }
            let (inv, _) = phi.invert().unwrap_or_else(|e| {
                panic!("failed to invert {:?}: {}", phi, e);
            });
            assert!(phi.compose(&inv).is_identity());
            assert!(inv.compose(&phi).is_identity());
        }
    }

    #[test]
    fn bounded_cancellation_values() {
        assert_eq!(Automorphism::identity(5).bounded_cancellation(), 0);
        assert_eq!(aut(3, &["C", "a", "B"]).bounded_cancellation(), 0);
        assert_eq!(aut(2, &["a", "aaab"]).bounded_cancellation(), 3);
        assert_eq!(aut(3, &["b", "ac", "a"]).bounded_cancellation(), 1);
    }

    #[test]
    fn outer_equality_cases() {
        let phi = aut(3, &["b", "ac", "a"]);
        let u = w("Bca");
        let twisted = phi.inner_twist(&u);
        match equal_in_out(&phi, &twisted, 32) {
            OuterEquality::Equal { conjugator } => {
                assert_eq!(phi.inner_twist(&conjugator), twisted);
                assert_eq!(conjugator, u);
            }
            other => panic!("expected Equal, got {:?}", other),
        }
        // Identity vs the basis swap: certified distinct.
        let id = Automorphism::identity(2);
        let swap = aut(2, &["b", "a"]);
        assert!(matches!(
            equal_in_out(&id, &swap, 16),
            OuterEquality::Distinct { .. }
        ));
        // phi vs phi^2 with equal abelianisation rarely happens; use a
        // conjugacy obstruction instead: images of the pivot not conjugate.
        let psi = aut(3, &["b", "ca", "a"]);
        // Same abelianisation as phi but ac and ca are conjugate, so this
        // needs the full verification loop - they are genuinely equal in Out
        // iff some u conjugates all three images simultaneously.
        let verdict = equal_in_out(&phi, &psi, 32);
        // a -> b, b -> ca = a^{-1}(ac)a, c -> a: the candidate conjugators
        // u0 root^k from the pivot must fail the other generators.
        assert!(matches!(
            verdict,
            OuterEquality::Distinct { .. } | OuterEquality::Unknown { .. }
        ));
    }

    #[test]
    fn abelianization_matrix_of_running_example() {
        let phi = aut(3, &["b", "ac", "a"]);
        let m = phi.abelianized();
        let rows: Vec<Vec<i64>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| {
                        use num::ToPrimitive;
                        m[(i, j)].to_i64().unwrap()
                    })
                    .collect()
            })
            .collect();
        assert_eq!(rows, vec![vec![0, 1, 1], vec![1, 0, 0], vec![0, 1, 0]]);
    }

    #[test]
    fn finishing_moves_normalise_signed_permutations() {
        let tuple = vec![w("B"), w("c"), w("a")];
        let fin = finishing_moves(&tuple).expect("signed permutation");
        let mut t = tuple;
        for m in fin {
            apply_move(&mut t, m);
        }
        assert_eq!(
            t.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            vec!["a", "b", "c"]
        );
    }
}
