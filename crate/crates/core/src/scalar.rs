//! Dense polynomials and matrices, generic over the coefficient scalar.
//!
//! The generic core is deliberately small: ring arithmetic for any scalar,
//! field arithmetic (division, row reduction) where the scalar supports it.
//! Integer- and rational-specific utilities (content, primitive part,
//! denominator clearing, the Faddeev–LeVerrier characteristic polynomial)
//! live here too, working on the concrete aliases.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::bigint::Sign;
use num::traits::{One, Signed, Zero};
use num::Integer;

use crate::{Int, Rat};

/// Minimal scalar bound for ring-level polynomial and matrix arithmetic.
pub trait Scalar:
    Clone
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
{
}

impl<T> Scalar for T where
    T: Clone
        + PartialEq
        + Zero
        + One
        + Neg<Output = Self>
        + Add<Output = Self>
        + Sub<Output = Self>
        + Mul<Output = Self>
{
}

/// Scalars with exact division, enough for Euclidean polynomial arithmetic
/// and Gaussian elimination.
pub trait FieldScalar: Scalar + Div<Output = Self> {}

impl<T> FieldScalar for T where T: Scalar + Div<Output = Self> {}

/// A dense univariate polynomial; `coeffs[i]` is the coefficient of `x^i`.
/// Invariant: no trailing zero coefficients (the zero polynomial is empty).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial::constant(T::one())
    }

    pub fn constant(c: T) -> Self {
        Polynomial::new(vec![c])
    }

    /// The monomial `c * x^deg`.
    pub fn monomial(c: T, deg: usize) -> Self {
        let mut coeffs = vec![T::zero(); deg];
        coeffs.push(c);
        Polynomial::new(coeffs)
    }

    pub fn x() -> Self {
        Polynomial::monomial(T::one(), 1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of `x^i` (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> T {
        self.coeffs.get(i).cloned().unwrap_or_else(T::zero)
    }

    pub fn leading(&self) -> Option<&T> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &T) -> T {
        let mut acc = T::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() - 1);
        let mut k = T::one();
        for c in &self.coeffs[1..] {
            out.push(c.clone() * k.clone());
            k = k + T::one();
        }
        Polynomial::new(out)
    }

    pub fn scale(&self, s: &T) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    /// Multiply by `x^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Polynomial::zero();
        }
        let mut coeffs = vec![T::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        Polynomial { coeffs }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Polynomial<U> {
        Polynomial::new(self.coeffs.iter().map(f).collect())
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i) + rhs.coeff(i));
        }
        Polynomial::new(out)
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i) - rhs.coeff(i));
        }
        Polynomial::new(out)
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        Polynomial::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Polynomial::new(out)
    }
}

impl<T: FieldScalar> Polynomial<T> {
    /// Euclidean division: returns `(q, r)` with `self = q * d + r` and
    /// `deg r < deg d`. Panics on a zero divisor.
    pub fn divmod(&self, d: &Polynomial<T>) -> (Polynomial<T>, Polynomial<T>) {
        let dd = d.degree().expect("division by zero polynomial");
        let lead = d.leading().unwrap().clone();
        let mut rem = self.clone();
        let mut q = vec![T::zero(); self.coeffs.len().saturating_sub(dd)];
        while let Some(rd) = rem.degree() {
            if rd < dd {
                break;
            }
            let factor = rem.leading().unwrap().clone() / lead.clone();
            let shift = rd - dd;
            q[shift] = factor.clone();
            rem = &rem - &d.scale(&factor).shift(shift);
            // Guard against scalars with inexact division: the leading term
            // must actually cancel.
            if rem.degree() == Some(rd) {
                panic!("leading term failed to cancel in polynomial division");
            }
        }
        (Polynomial::new(q), rem)
    }

    /// Make the polynomial monic (no-op on zero).
    pub fn monic(&self) -> Polynomial<T> {
        match self.leading() {
            None => Polynomial::zero(),
            Some(l) => self.scale(&(T::one() / l.clone())),
        }
    }

    /// Monic gcd by the Euclidean algorithm.
    pub fn gcd(&self, other: &Polynomial<T>) -> Polynomial<T> {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divmod(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Extended Euclid: returns `(g, s, t)` monic with `g = s*self + t*other`.
    pub fn extended_gcd(
        &self,
        other: &Polynomial<T>,
    ) -> (Polynomial<T>, Polynomial<T>, Polynomial<T>) {
        let mut r0 = self.clone();
        let mut r1 = other.clone();
        let mut s0 = Polynomial::one();
        let mut s1 = Polynomial::zero();
        let mut t0 = Polynomial::zero();
        let mut t1 = Polynomial::one();
        while !r1.is_zero() {
            let (q, r) = r0.divmod(&r1);
            let s = &s0 - &(&q * &s1);
            let t = &t0 - &(&q * &t1);
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
            t0 = t1;
            t1 = t;
        }
        match r0.leading() {
            None => (r0, s0, t0),
            Some(l) => {
                let inv = T::one() / l.clone();
                (r0.scale(&inv), s0.scale(&inv), t0.scale(&inv))
            }
        }
    }
}

/// Render with `^` powers, omitting zero terms: `x^3 - x - 1`.
pub fn poly_to_string<T>(p: &Polynomial<T>, var: &str) -> String
where
    T: Scalar + Signed + fmt::Display,
{
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, c) in p.coeffs().iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let neg = c.is_negative();
        let mag = c.abs();
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let show_coeff = !mag.is_one() || i == 0;
        if show_coeff {
            out.push_str(&mag.to_string());
        }
        if i > 0 {
            if show_coeff {
                out.push('*');
            }
            out.push_str(var);
            if i > 1 {
                out.push_str(&format!("^{}", i));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Integer / rational specific polynomial helpers
// ---------------------------------------------------------------------------

impl Polynomial<Int> {
    /// Gcd of the coefficients (non-negative; 0 for the zero polynomial).
    pub fn content(&self) -> Int {
        self.coeffs
            .iter()
            .fold(Int::zero(), |acc, c| acc.gcd(c))
    }

    /// Divide out the content and normalise the leading coefficient to be
    /// positive.
    pub fn primitive(&self) -> Polynomial<Int> {
        let mut c = self.content();
        if c.is_zero() {
            return Polynomial::zero();
        }
        if self.leading().unwrap().sign() == Sign::Minus {
            c = -c;
        }
        Polynomial::new(self.coeffs.iter().map(|a| a / &c).collect())
    }

    pub fn to_rat(&self) -> Polynomial<Rat> {
        self.map(|c| Rat::from_integer(c.clone()))
    }

    /// Largest absolute coefficient value.
    pub fn height(&self) -> Int {
        self.coeffs
            .iter()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Int::zero)
    }
}

/// Clear denominators and strip content: the unique primitive integer
/// polynomial with positive leading coefficient that is a rational multiple
/// of `p`.
pub fn rat_poly_to_primitive_int(p: &Polynomial<Rat>) -> Polynomial<Int> {
    if p.is_zero() {
        return Polynomial::zero();
    }
    let mut lcm = Int::one();
    for c in p.coeffs() {
        lcm = lcm.lcm(c.denom());
    }
    Polynomial::new(
        p.coeffs()
            .iter()
            .map(|c| c.numer() * (&lcm / c.denom()))
            .collect(),
    )
    .primitive()
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zero(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix<T> {
        let mut out = Matrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out: Matrix<T> = Matrix::zero(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)].clone();
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)].clone() + a.clone() * rhs[(k, j)].clone();
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn trace(&self) -> T {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).fold(T::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: FieldScalar> Matrix<T> {
    /// Basis of the right kernel `{v : Mv = 0}` via Gauss-Jordan elimination.
    pub fn kernel_basis(&self) -> Vec<Vec<T>> {
        let mut m = self.clone();
        let (rows, cols) = (m.rows, m.cols);
        let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
        let mut r = 0;
        for c in 0..cols {
            // Find a pivot in column c at or below row r.
            let Some(p) = (r..rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            for j in 0..cols {
                let tmp = m[(p, j)].clone();
                m[(p, j)] = m[(r, j)].clone();
                m[(r, j)] = tmp;
            }
            let inv = T::one() / m[(r, c)].clone();
            for j in 0..cols {
                m[(r, j)] = m[(r, j)].clone() * inv.clone();
            }
            for i in 0..rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in 0..cols {
                        m[(i, j)] = m[(i, j)].clone() - f.clone() * m[(r, j)].clone();
                    }
                }
            }
            pivot_of_col[c] = Some(r);
            r += 1;
            if r == rows {
                break;
            }
        }
        let mut basis = Vec::new();
        for free in 0..cols {
            if pivot_of_col[free].is_some() {
                continue;
            }
            let mut v = vec![T::zero(); cols];
            v[free] = T::one();
            for c in 0..cols {
                if let Some(pr) = pivot_of_col[c] {
                    v[c] = -m[(pr, free)].clone();
                }
            }
            basis.push(v);
        }
        basis
    }
}

impl Matrix<Int> {
    /// Characteristic polynomial `det(xI - M)` by Faddeev–LeVerrier.
    /// All intermediate divisions are exact over the integers.
    pub fn charpoly(&self) -> Polynomial<Int> {
        let n = self.rows;
        assert_eq!(n, self.cols, "characteristic polynomial of a non-square matrix");
        let mut coeffs = vec![Int::zero(); n + 1];
        coeffs[n] = Int::one();
        let mut ak = self.clone();
        let mut ck = Int::one();
        for k in 1..=n {
            if k > 1 {
                let mut shifted = ak;
                for i in 0..n {
                    shifted[(i, i)] = shifted[(i, i)].clone() + ck.clone();
                }
                ak = self.mul(&shifted);
            }
            let tr = ak.trace();
            let kk = Int::from(k as u32);
            debug_assert!((&tr % &kk).is_zero(), "Faddeev-LeVerrier division not exact");
            ck = -(tr / kk);
            coeffs[n - k] = ck.clone();
        }
        Polynomial::new(coeffs)
    }

    /// Determinant via the characteristic polynomial constant term.
    pub fn det(&self) -> Int {
        let n = self.rows;
        let c0 = self.charpoly().coeff(0);
        if n % 2 == 0 {
            c0
        } else {
            -c0
        }
    }

    pub fn row_sums(&self) -> Vec<Int> {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(Int::zero(), |a, b| a + b))
            .collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|c| !c.is_negative())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(n: i64) -> Int {
        Int::from(n)
    }

    fn ipoly(cs: &[i64]) -> Polynomial<Int> {
        Polynomial::new(cs.iter().map(|&c| int(c)).collect())
    }

    /// Independent characteristic polynomial: cofactor expansion of
    /// det(xI - M) over Polynomial<Int>.
    fn charpoly_by_cofactors(m: &Matrix<Int>) -> Polynomial<Int> {
        let n = m.rows();
        let entries: Vec<Vec<Polynomial<Int>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut p = -&Polynomial::constant(m[(i, j)].clone());
                        if i == j {
                            p = &p + &Polynomial::x();
                        }
                        p
                    })
                    .collect()
            })
            .collect();
        fn det(rows: &[Vec<Polynomial<Int>>]) -> Polynomial<Int> {
            let n = rows.len();
            if n == 1 {
                return rows[0][0].clone();
            }
            let mut acc = Polynomial::zero();
            for j in 0..n {
                let minor: Vec<Vec<Polynomial<Int>>> = rows[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|(k, _)| *k != j)
                            .map(|(_, p)| p.clone())
                            .collect()
                    })
                    .collect();
                let term = &rows[0][j] * &det(&minor);
                acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
        det(&entries)
    }

    #[test]
    fn charpoly_matches_cofactor_expansion() {
        // Small deterministic pseudo-random matrices.
        let mut seed: i64 = 12345;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 33) % 7 - 3
        };
        for n in 1..=4 {
            for _ in 0..8 {
                let m = Matrix::from_rows(
                    (0..n).map(|_| (0..n).map(|_| int(next())).collect()).collect(),
                );
                assert_eq!(m.charpoly(), charpoly_by_cofactors(&m));
            }
        }
    }

    #[test]
    fn charpoly_of_known_matrices() {
        // Transition matrix of a->b, b->ac, c->a on the rose.
        let m = Matrix::from_rows(vec![
            vec![int(0), int(1), int(1)],
            vec![int(1), int(0), int(0)],
            vec![int(0), int(1), int(0)],
        ]);
        // x^3 - x - 1
        assert_eq!(m.charpoly(), ipoly(&[-1, -1, 0, 1]));
        // And the inverse direction a->c, b->a, c->c^{-1}b has |entries|
        // matrix with charpoly x^3 - x^2 - 1.
        let mi = Matrix::from_rows(vec![
            vec![int(0), int(1), int(0)],
            vec![int(0), int(0), int(1)],
            vec![int(1), int(0), int(1)],
        ]);
        assert_eq!(mi.charpoly(), ipoly(&[-1, 0, -1, 1]));
    }

    #[test]
    fn determinant_signs() {
        let m = Matrix::from_rows(vec![vec![int(2), int(1)], vec![int(7), int(4)]]);
        assert_eq!(m.det(), int(1));
        let m = Matrix::from_rows(vec![
            vec![int(0), int(1), int(0)],
            vec![int(1), int(0), int(0)],
            vec![int(0), int(0), int(1)],
        ]);
        assert_eq!(m.det(), int(-1));
    }

    #[test]
    fn divmod_reconstructs() {
        let a = ipoly(&[3, 0, -2, 0, 1]).to_rat();
        let b = ipoly(&[-1, 1, 1]).to_rat();
        let (q, r) = a.divmod(&b);
        assert_eq!(&(&q * &b) + &r, a);
        assert!(r.degree() < b.degree());
    }

    #[test]
    fn gcd_and_extended_gcd() {
        let p = ipoly(&[-1, 0, 1]).to_rat(); // x^2 - 1
        let q = ipoly(&[1, 1]).to_rat(); // x + 1
        assert_eq!(p.gcd(&q), q.monic());
        let (g, s, t) = p.extended_gcd(&q);
        assert_eq!(&(&s * &p) + &(&t * &q), g);
    }

    #[test]
    fn kernel_of_singular_matrix() {
        let m = Matrix::from_rows(vec![
            vec![Rat::from_integer(int(1)), Rat::from_integer(int(2))],
            vec![Rat::from_integer(int(2)), Rat::from_integer(int(4))],
        ]);
        let k = m.kernel_basis();
        assert_eq!(k.len(), 1);
        let v = &k[0];
        let img = m.mul_vec(v);
        assert!(img.iter().all(|x| x.is_zero()));
    }

    #[test]
    fn primitive_and_content() {
        let p = ipoly(&[-6, 0, 9]);
        assert_eq!(p.content(), int(3));
        assert_eq!(p.primitive(), ipoly(&[-2, 0, 3]));
        let q = ipoly(&[6, 0, -9]);
        assert_eq!(q.primitive(), ipoly(&[-2, 0, 3]));
    }

    #[test]
    fn poly_rendering() {
        assert_eq!(poly_to_string(&ipoly(&[-1, -1, 0, 1]), "x"), "x^3 - x - 1");
        assert_eq!(poly_to_string(&ipoly(&[-1, 0, -1, 1]), "x"), "x^3 - x^2 - 1");
        assert_eq!(poly_to_string(&ipoly(&[2]), "x"), "2");
        assert_eq!(poly_to_string(&ipoly(&[0, -3]), "x"), "-3*x");
    }
}
