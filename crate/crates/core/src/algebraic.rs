//! Exact real algebraic numbers and number-field arithmetic.
//!
//! Expansion factors are Perron–Frobenius eigenvalues of integer matrices,
//! hence real algebraic integers. They are represented exactly: a
//! [`RealAlgebraic`] is an irreducible primitive integer polynomial plus an
//! isolating rational interval, and a [`NumberField`] is Q adjoin one such
//! root, with [`NfElem`] coordinates reduced modulo the minimal polynomial.
//! Every comparison is exact — interval refinement is only ever used to
//! decide signs of provably nonzero quantities, so no tolerance enters.
//!
//! Factorisation of integer polynomials is complete: Yun's squarefree
//! decomposition, Berlekamp factorisation modulo a small prime, quadratic
//! Hensel lifting past twice the factor-coefficient bound, and subset
//! recombination.

use std::cmp::Ordering;
use std::fmt;
use std::sync::{Arc, Mutex};

use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{poly_to_string, rat_poly_to_primitive_int, Polynomial};
use crate::{Int, IntPoly, Rat, RatPoly};

// ---------------------------------------------------------------------------
// Squarefree part, Sturm sequences, root isolation
// ---------------------------------------------------------------------------

/// Gcd of integer polynomials, computed monically over Q and returned as a
/// primitive integer polynomial with positive leading coefficient.
pub fn int_poly_gcd(a: &IntPoly, b: &IntPoly) -> IntPoly {
    rat_poly_to_primitive_int(&a.to_rat().gcd(&b.to_rat()))
}

/// The product of the distinct irreducible factors of `p` (primitive,
/// positive leading coefficient).
pub fn squarefree_part(p: &IntPoly) -> IntPoly {
    if p.degree().unwrap_or(0) == 0 {
        return Polynomial::one();
    }
    let g = int_poly_gcd(p, &p.derivative());
    if g.degree() == Some(0) {
        return p.primitive();
    }
    let (q, r) = p.to_rat().divmod(&g.to_rat());
    debug_assert!(r.is_zero());
    rat_poly_to_primitive_int(&q)
}

/// Sturm sequence of a squarefree rational polynomial.
pub fn sturm_sequence(p: &RatPoly) -> Vec<RatPoly> {
    let mut seq = vec![p.clone(), p.derivative()];
    loop {
        let n = seq.len();
        if seq[n - 1].is_zero() {
            seq.pop();
            return seq;
        }
        let (_, r) = seq[n - 2].divmod(&seq[n - 1]);
        if r.is_zero() {
            return seq;
        }
        seq.push(-&r);
    }
}

fn sign_variations(seq: &[RatPoly], x: &Rat) -> usize {
    let mut count = 0;
    let mut last: Option<bool> = None;
    for p in seq {
        let v = p.eval(x);
        if v.is_zero() {
            continue;
        }
        let pos = v.is_positive();
        if let Some(prev) = last {
            if prev != pos {
                count += 1;
            }
        }
        last = Some(pos);
    }
    count
}

/// Number of real roots of the (squarefree) polynomial behind `seq` in the
/// half-open interval `(a, b]`. Requires that neither endpoint is a root of
/// the polynomial itself.
pub fn count_roots_between(seq: &[RatPoly], a: &Rat, b: &Rat) -> usize {
    debug_assert!(a <= b);
    sign_variations(seq, a) - sign_variations(seq, b)
}

/// Strict upper bound on the absolute value of every complex root.
pub fn cauchy_root_bound(p: &IntPoly) -> Rat {
    let lead = p.leading().expect("root bound of zero polynomial").abs();
    let max = p
        .coeffs()
        .iter()
        .rev()
        .skip(1)
        .map(|c| c.abs())
        .max()
        .unwrap_or_else(Int::zero);
    Rat::one() + Rat::new(max, lead)
}

// ---------------------------------------------------------------------------
// Real algebraic numbers
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum RootRep {
    /// A rational value (minimal polynomial of degree one).
    Exact(Rat),
    /// Isolating open interval `(lo, hi)`; the minimal polynomial has exactly
    /// one root inside and no root at either endpoint. `sign_lo` is the sign
    /// of the minimal polynomial at `lo`.
    Isolated { lo: Rat, hi: Rat, sign_lo: i8 },
}

/// An exact real algebraic number: irreducible minimal polynomial (primitive,
/// positive leading coefficient) plus an isolating interval.
#[derive(Clone, Debug)]
pub struct RealAlgebraic {
    minpoly: IntPoly,
    rep: RootRep,
}

fn rat_sign(q: &Rat) -> i8 {
    if q.is_zero() {
        0
    } else if q.is_positive() {
        1
    } else {
        -1
    }
}

impl RealAlgebraic {
    pub fn from_rational(q: Rat) -> RealAlgebraic {
        // Minimal polynomial d*x - n with positive leading coefficient.
        let minpoly = Polynomial::new(vec![-q.numer().clone(), q.denom().clone()]).primitive();
        RealAlgebraic {
            minpoly,
            rep: RootRep::Exact(q),
        }
    }

    /// The largest real root of an *irreducible* primitive polynomial, if it
    /// has any real root.
    fn largest_root_of_irreducible(f: &IntPoly) -> Option<RealAlgebraic> {
        let deg = f.degree()?;
        if deg == 0 {
            return None;
        }
        if deg == 1 {
            let root = -Rat::new(f.coeff(0), f.coeff(1));
            return Some(RealAlgebraic::from_rational(root));
        }
        // Degree >= 2 and irreducible: no rational roots, so rational
        // endpoints are never roots and Sturm counts are clean.
        let frat = f.to_rat();
        let seq = sturm_sequence(&frat);
        let bound = cauchy_root_bound(f);
        let mut lo = -bound.clone();
        let mut hi = bound;
        if count_roots_between(&seq, &lo, &hi) == 0 {
            return None;
        }
        // Invariant: (lo, hi] contains at least one root and nothing above
        // hi does; shrink until exactly one root remains.
        while count_roots_between(&seq, &lo, &hi) > 1 {
            let mid = (&lo + &hi) / Rat::from_integer(Int::from(2));
            if count_roots_between(&seq, &mid, &hi) >= 1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let sign_lo = rat_sign(&frat.eval(&lo));
        debug_assert!(sign_lo != 0);
        Some(RealAlgebraic {
            minpoly: f.clone(),
            rep: RootRep::Isolated { lo, hi, sign_lo },
        })
    }

    /// The largest real root of an arbitrary nonzero integer polynomial,
    /// with its true (irreducible) minimal polynomial.
    pub fn largest_real_root(p: &IntPoly) -> Result<Option<RealAlgebraic>> {
        if p.is_zero() {
            return Err(Error::Internal("largest root of zero polynomial".into()));
        }
        let mut best: Option<RealAlgebraic> = None;
        for (f, _mult) in factor(p)? {
            if f.degree() == Some(0) {
                continue;
            }
            if let Some(r) = RealAlgebraic::largest_root_of_irreducible(&f) {
                best = match best {
                    None => Some(r),
                    Some(b) => Some(if r.cmp(&b) == Ordering::Greater { r } else { b }),
                };
            }
        }
        Ok(best)
    }

    pub fn minpoly(&self) -> &IntPoly {
        &self.minpoly
    }

    pub fn degree(&self) -> usize {
        self.minpoly.degree().unwrap_or(0)
    }

    pub fn exact_rational(&self) -> Option<Rat> {
        match &self.rep {
            RootRep::Exact(q) => Some(q.clone()),
            RootRep::Isolated { .. } => None,
        }
    }

    /// Current isolating interval (degenerate for rational values).
    pub fn interval(&self) -> (Rat, Rat) {
        match &self.rep {
            RootRep::Exact(q) => (q.clone(), q.clone()),
            RootRep::Isolated { lo, hi, .. } => (lo.clone(), hi.clone()),
        }
    }

    fn refine_step(&mut self) {
        if let RootRep::Isolated { lo, hi, sign_lo } = &mut self.rep {
            let mid = (&*lo + &*hi) / Rat::from_integer(Int::from(2));
            let s = rat_sign(&self.minpoly.to_rat().eval(&mid));
            debug_assert!(s != 0, "irreducible polynomial of degree >= 2 has no rational root");
            if s == *sign_lo {
                *lo = mid;
            } else {
                *hi = mid;
            }
        }
    }

    /// Refine (a copy of) the isolating interval to width below `width`.
    pub fn refined(&self, width: &Rat) -> RealAlgebraic {
        let mut out = self.clone();
        while {
            let (lo, hi) = out.interval();
            &hi - &lo >= *width
        } {
            out.refine_step();
        }
        out
    }

    /// A rigorous lower bound for the distance between distinct roots of the
    /// squarefree polynomial `p` (Mahler's bound, coarsened to rationals).
    fn separation_lower_bound(p: &IntPoly) -> Rat {
        let n = p.degree().unwrap_or(1).max(2);
        let norm_sq: Int = p.coeffs().iter().map(|c| c * c).sum();
        // sep > sqrt(3) * n^{-(n+2)/2} * ||p||_2^{-(n-1)}
        //     >= 1 / ( n^{ceil((n+2)/2)} * (norm_sq)^{ceil((n-1)/2)} )
        let e1 = (n + 2).div_ceil(2);
        let e2 = (n - 1).div_ceil(2);
        let mut denom = Int::one();
        for _ in 0..e1 {
            denom *= Int::from(n as u64);
        }
        for _ in 0..e2 {
            denom *= norm_sq.clone().max(Int::one());
        }
        Rat::new(Int::one(), denom)
    }

    pub fn cmp_rat(&self, q: &Rat) -> Ordering {
        match &self.rep {
            RootRep::Exact(v) => v.cmp(q),
            RootRep::Isolated { .. } => {
                // q is rational, the root is irrational: never equal.
                let mut me = self.clone();
                loop {
                    let (lo, hi) = me.interval();
                    if &lo >= q {
                        return Ordering::Greater;
                    }
                    if &hi <= q {
                        return Ordering::Less;
                    }
                    me.refine_step();
                }
            }
        }
    }

    /// Exact comparison of two real algebraic numbers.
    pub fn cmp(&self, other: &RealAlgebraic) -> Ordering {
        if let (Some(a), Some(b)) = (self.exact_rational(), other.exact_rational()) {
            return a.cmp(&b);
        }
        if let Some(q) = other.exact_rational() {
            return self.cmp_rat(&q);
        }
        if let Some(q) = self.exact_rational() {
            return other.cmp_rat(&q).reverse();
        }
        // Both irrational. Distinct iff the refined intervals separate; equal
        // iff same minimal polynomial and intervals stay entangled below the
        // root-separation bound.
        let same_poly = self.minpoly == other.minpoly;
        let sep = if same_poly {
            RealAlgebraic::separation_lower_bound(&self.minpoly)
        } else {
            let prod = &self.minpoly * &other.minpoly;
            // Distinct irreducibles share no root, so the product is
            // squarefree and its separation bound separates our two roots.
            RealAlgebraic::separation_lower_bound(&squarefree_part(&prod))
        };
        let half = sep / Rat::from_integer(Int::from(2));
        let a = self.refined(&half);
        let b = other.refined(&half);
        let (alo, ahi) = a.interval();
        let (blo, bhi) = b.interval();
        if ahi <= blo {
            return Ordering::Less;
        }
        if bhi <= alo {
            return Ordering::Greater;
        }
        // Overlapping intervals narrower than half the separation bound: the
        // roots coincide (impossible for distinct minimal polynomials).
        debug_assert!(same_poly);
        Ordering::Equal
    }

    pub fn equals(&self, other: &RealAlgebraic) -> bool {
        self.minpoly == other.minpoly && self.cmp(other) == Ordering::Equal
    }

    pub fn to_f64(&self) -> f64 {
        match &self.rep {
            RootRep::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            RootRep::Isolated { .. } => {
                let w = Rat::new(Int::one(), Int::from(1u64 << 60));
                let (lo, hi) = self.refined(&w).interval();
                ((lo + hi) / Rat::from_integer(Int::from(2)))
                    .to_f64()
                    .unwrap_or(f64::NAN)
            }
        }
    }

    /// Decimal expansion truncated to `digits` fractional digits, correct to
    /// within one unit in the last place.
    pub fn decimal_string(&self, digits: u32) -> String {
        let scale = Int::from(10u32).pow(digits);
        let width = Rat::new(Int::one(), &scale * Int::from(2));
        let refined = self.refined(&width);
        let (lo, hi) = refined.interval();
        let mid = (lo + hi) / Rat::from_integer(Int::from(2));
        let scaled = (mid * Rat::from_integer(scale.clone())).round();
        let neg = scaled.is_negative();
        let total = scaled.abs().to_integer();
        let int_part = &total / &scale;
        let frac_part = &total % &scale;
        let mut frac = frac_part.to_string();
        while (frac.len() as u32) < digits {
            frac.insert(0, '0');
        }
        if digits == 0 {
            format!("{}{}", if neg { "-" } else { "" }, int_part)
        } else {
            format!("{}{}.{}", if neg { "-" } else { "" }, int_part, frac)
        }
    }

    /// Printable minimal polynomial, e.g. `x^3 - x - 1`.
    pub fn minpoly_string(&self) -> String {
        poly_to_string(&self.minpoly, "x")
    }
}

// ---------------------------------------------------------------------------
// Integer polynomial factorisation (Zassenhaus)
// ---------------------------------------------------------------------------

/// Polynomials over GF(p), p a small odd prime.
#[derive(Clone, PartialEq, Eq, Debug)]
struct GfPoly {
    p: u64,
    c: Vec<u64>,
}

fn pow_mod_u64(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

fn inv_mod_u64(a: u64, p: u64) -> u64 {
    pow_mod_u64(a, p - 2, p)
}

impl GfPoly {
    fn new(p: u64, mut c: Vec<u64>) -> GfPoly {
        for x in &mut c {
            *x %= p;
        }
        while c.last() == Some(&0) {
            c.pop();
        }
        GfPoly { p, c }
    }

    fn zero(p: u64) -> GfPoly {
        GfPoly { p, c: Vec::new() }
    }

    fn constant(p: u64, k: u64) -> GfPoly {
        GfPoly::new(p, vec![k])
    }

    fn from_int_poly(f: &IntPoly, p: u64) -> GfPoly {
        let m = Int::from(p);
        GfPoly::new(
            p,
            f.coeffs()
                .iter()
                .map(|c| {
                    let r = ((c % &m) + &m) % &m;
                    r.to_u64().unwrap()
                })
                .collect(),
        )
    }

    fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    fn coeff(&self, i: usize) -> u64 {
        self.c.get(i).copied().unwrap_or(0)
    }

    fn sub(&self, o: &GfPoly) -> GfPoly {
        let n = self.c.len().max(o.c.len());
        GfPoly::new(
            self.p,
            (0..n)
                .map(|i| (self.coeff(i) + self.p - o.coeff(i)) % self.p)
                .collect(),
        )
    }

    fn mul(&self, o: &GfPoly) -> GfPoly {
        if self.is_zero() || o.is_zero() {
            return GfPoly::zero(self.p);
        }
        let mut out = vec![0u64; self.c.len() + o.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                out[i + j] = (out[i + j] + a * b) % self.p;
            }
        }
        GfPoly::new(self.p, out)
    }

    fn scale(&self, k: u64) -> GfPoly {
        GfPoly::new(self.p, self.c.iter().map(|&a| a * (k % self.p) % self.p).collect())
    }

    fn monic(&self) -> GfPoly {
        match self.c.last() {
            None => self.clone(),
            Some(&l) => self.scale(inv_mod_u64(l, self.p)),
        }
    }

    fn divmod(&self, d: &GfPoly) -> (GfPoly, GfPoly) {
        let dd = d.degree().expect("division by zero");
        let inv_lead = inv_mod_u64(*d.c.last().unwrap(), self.p);
        let mut rem = self.c.clone();
        let n = rem.len();
        if n < dd + 1 {
            return (GfPoly::zero(self.p), self.clone());
        }
        let mut q = vec![0u64; n - dd];
        for i in (dd..n).rev() {
            let f = rem[i] % self.p * inv_lead % self.p;
            if f == 0 {
                continue;
            }
            q[i - dd] = f;
            for j in 0..=dd {
                let sub = f * d.coeff(j) % self.p;
                rem[i - dd + j] = (rem[i - dd + j] + self.p - sub) % self.p;
            }
        }
        (GfPoly::new(self.p, q), GfPoly::new(self.p, rem))
    }

    fn gcd(&self, o: &GfPoly) -> GfPoly {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let (_, r) = a.divmod(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Extended gcd: `(g, s, t)` monic with `g = s*self + t*other`.
    fn extended_gcd(&self, other: &GfPoly) -> (GfPoly, GfPoly, GfPoly) {
        let p = self.p;
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (GfPoly::constant(p, 1), GfPoly::zero(p));
        let (mut t0, mut t1) = (GfPoly::zero(p), GfPoly::constant(p, 1));
        while !r1.is_zero() {
            let (q, r) = r0.divmod(&r1);
            let s = s0.sub(&q.mul(&s1));
            let t = t0.sub(&q.mul(&t1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
            t0 = t1;
            t1 = t;
        }
        match r0.c.last() {
            None => (r0, s0, t0),
            Some(&l) => {
                let inv = inv_mod_u64(l, p);
                (r0.scale(inv), s0.scale(inv), t0.scale(inv))
            }
        }
    }

    fn derivative(&self) -> GfPoly {
        if self.c.len() <= 1 {
            return GfPoly::zero(self.p);
        }
        GfPoly::new(
            self.p,
            self.c[1..]
                .iter()
                .enumerate()
                .map(|(i, &a)| a * ((i as u64 + 1) % self.p) % self.p)
                .collect(),
        )
    }

    /// `self^e mod f` by repeated squaring.
    fn pow_mod(&self, mut e: u64, f: &GfPoly) -> GfPoly {
        let mut base = self.divmod(f).1;
        let mut acc = GfPoly::constant(self.p, 1);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).divmod(f).1;
            }
            base = base.mul(&base).divmod(f).1;
            e >>= 1;
        }
        acc
    }
}

/// Nullspace basis of an n x n matrix over GF(p).
fn gf_nullspace(mut m: Vec<Vec<u64>>, p: u64) -> Vec<Vec<u64>> {
    let n = m.len();
    let mut pivot_of_col = vec![None; n];
    let mut r = 0;
    for c in 0..n {
        let Some(pr) = (r..n).find(|&i| m[i][c] % p != 0) else {
            continue;
        };
        m.swap(r, pr);
        let inv = inv_mod_u64(m[r][c] % p, p);
        for j in 0..n {
            m[r][j] = m[r][j] % p * inv % p;
        }
        for i in 0..n {
            if i != r && m[i][c] % p != 0 {
                let f = m[i][c] % p;
                for j in 0..n {
                    m[i][j] = (m[i][j] + p * p - f * m[r][j] % p * 1 % p) % p;
                }
            }
        }
        pivot_of_col[c] = Some(r);
        r += 1;
    }
    let mut basis = Vec::new();
    for free in 0..n {
        if pivot_of_col[free].is_some() {
            continue;
        }
        let mut v = vec![0u64; n];
        v[free] = 1;
        for c in 0..n {
            if let Some(pr) = pivot_of_col[c] {
                v[c] = (p - m[pr][free] % p) % p;
            }
        }
        basis.push(v);
    }
    basis
}

/// Berlekamp factorisation of a squarefree monic polynomial over GF(p).
fn berlekamp(f: &GfPoly) -> Vec<GfPoly> {
    let p = f.p;
    let n = f.degree().expect("constant polynomial");
    if n == 1 {
        return vec![f.monic()];
    }
    // Frobenius matrix: column i holds the coefficients of x^{p*i} mod f.
    let x = GfPoly::new(p, vec![0, 1]);
    let xp = x.pow_mod(p, f);
    let mut cols: Vec<Vec<u64>> = Vec::with_capacity(n);
    let mut pow = GfPoly::constant(p, 1);
    for _ in 0..n {
        let mut col = vec![0u64; n];
        for (i, &a) in pow.c.iter().enumerate() {
            col[i] = a;
        }
        cols.push(col);
        pow = pow.mul(&xp).divmod(f).1;
    }
    // (B - I) v = 0, with B acting on coefficient vectors.
    let mut m = vec![vec![0u64; n]; n];
    for j in 0..n {
        for i in 0..n {
            m[i][j] = cols[j][i] % p;
        }
        m[j][j] = (m[j][j] + p - 1) % p;
    }
    let basis = gf_nullspace(m, p);
    let r = basis.len();
    if r == 1 {
        return vec![f.monic()];
    }
    let mut factors = vec![f.monic()];
    'outer: for v in &basis {
        let vp = GfPoly::new(p, v.clone());
        if vp.degree().unwrap_or(0) == 0 {
            continue; // the constants never split anything
        }
        for s in 0..p {
            let shifted = vp.sub(&GfPoly::constant(p, s));
            let mut next = Vec::new();
            for h in &factors {
                if h.degree() == Some(1) {
                    next.push(h.clone());
                    continue;
                }
                let g = h.gcd(&shifted);
                match g.degree() {
                    Some(d) if d > 0 && d < h.degree().unwrap() => {
                        let (q, rem) = h.divmod(&g);
                        debug_assert!(rem.is_zero());
                        next.push(g);
                        next.push(q.monic());
                    }
                    _ => next.push(h.clone()),
                }
            }
            factors = next;
            if factors.len() == r {
                break 'outer;
            }
        }
    }
    factors
}

// --- Hensel lifting --------------------------------------------------------

fn pm_reduce(f: &IntPoly, m: &Int) -> IntPoly {
    Polynomial::new(f.coeffs().iter().map(|c| ((c % m) + m) % m).collect())
}

fn pm_mul(a: &IntPoly, b: &IntPoly, m: &Int) -> IntPoly {
    pm_reduce(&(a * b), m)
}

fn pm_add(a: &IntPoly, b: &IntPoly, m: &Int) -> IntPoly {
    pm_reduce(&(a + b), m)
}

fn pm_sub(a: &IntPoly, b: &IntPoly, m: &Int) -> IntPoly {
    pm_reduce(&(a - b), m)
}

/// Division with remainder modulo m by a polynomial whose leading coefficient
/// is invertible... here always monic.
fn pm_divmod_monic(a: &IntPoly, d: &IntPoly, m: &Int) -> (IntPoly, IntPoly) {
    let dd = d.degree().expect("division by zero");
    debug_assert!(d.leading() == Some(&Int::one()), "divisor must be monic");
    let mut rem: Vec<Int> = a.coeffs().to_vec();
    if rem.len() < dd + 1 {
        return (Polynomial::zero(), pm_reduce(a, m));
    }
    let n = rem.len();
    let mut q = vec![Int::zero(); n - dd];
    for i in (dd..n).rev() {
        let f = ((&rem[i] % m) + m) % m;
        if f.is_zero() {
            continue;
        }
        q[i - dd] = f.clone();
        for j in 0..=dd {
            let t = &f * &d.coeff(j);
            rem[i - dd + j] = ((&rem[i - dd + j] - t) % m + m) % m;
        }
    }
    (
        pm_reduce(&Polynomial::new(q), m),
        pm_reduce(&Polynomial::new(rem), m),
    )
}

/// One quadratic Hensel step: given f ≡ g·h (mod m) with s·g + t·h ≡ 1
/// (mod m), g and h monic, produce the same data modulo m².
#[allow(clippy::too_many_arguments)]
fn hensel_step(
    f: &IntPoly,
    g: &IntPoly,
    h: &IntPoly,
    s: &IntPoly,
    t: &IntPoly,
    m: &Int,
) -> (IntPoly, IntPoly, IntPoly, IntPoly) {
    let m2 = m * m;
    let e = pm_sub(f, &(g * h), &m2);
    let (q, r) = pm_divmod_monic(&pm_mul(s, &e, &m2), h, &m2);
    let g1 = pm_add(&pm_add(g, &pm_mul(t, &e, &m2), &m2), &pm_mul(&q, g, &m2), &m2);
    let h1 = pm_add(h, &r, &m2);
    let b = pm_sub(
        &pm_add(&pm_mul(s, &g1, &m2), &pm_mul(t, &h1, &m2), &m2),
        &Polynomial::one(),
        &m2,
    );
    let (c, d) = pm_divmod_monic(&pm_mul(s, &b, &m2), &h1, &m2);
    let s1 = pm_sub(s, &d, &m2);
    let t1 = pm_sub(&pm_sub(t, &pm_mul(t, &b, &m2), &m2), &pm_mul(&c, &g1, &m2), &m2);
    (g1, h1, s1, t1)
}

fn gf_to_int_poly(f: &GfPoly) -> IntPoly {
    Polynomial::new(f.c.iter().map(|&a| Int::from(a)).collect())
}

/// Lift the factorisation `f ≡ ∏ local (mod p)` to modulus `target`
/// (a power of p), recursively splitting the factor list. Everything monic.
fn hensel_lift_tree(f: &IntPoly, local: &[GfPoly], p: u64, target: &Int) -> Vec<IntPoly> {
    if local.len() == 1 {
        return vec![pm_reduce(f, target)];
    }
    let (left, right) = local.split_at(local.len() / 2);
    let pi = Int::from(p);
    let gl: GfPoly = left
        .iter()
        .fold(GfPoly::constant(p, 1), |acc, x| acc.mul(x));
    let hl: GfPoly = right
        .iter()
        .fold(GfPoly::constant(p, 1), |acc, x| acc.mul(x));
    let (one, s0, t0) = gl.extended_gcd(&hl);
    debug_assert_eq!(one.degree(), Some(0));
    let mut g = gf_to_int_poly(&gl);
    let mut h = gf_to_int_poly(&hl);
    let mut s = gf_to_int_poly(&s0);
    let mut t = gf_to_int_poly(&t0);
    let mut m = pi.clone();
    while m < *target {
        let (g1, h1, s1, t1) = hensel_step(f, &g, &h, &s, &t, &m);
        g = g1;
        h = h1;
        s = s1;
        t = t1;
        m = &m * &m;
    }
    let g = pm_reduce(&g, target);
    let h = pm_reduce(&h, target);
    let mut out = hensel_lift_tree(&g, left, p, target);
    out.extend(hensel_lift_tree(&h, right, p, target));
    out
}

fn symmetric_rep(f: &IntPoly, m: &Int) -> IntPoly {
    let half = m / Int::from(2);
    Polynomial::new(
        f.coeffs()
            .iter()
            .map(|c| {
                let r = ((c % m) + m) % m;
                if r > half {
                    r - m
                } else {
                    r
                }
            })
            .collect(),
    )
}

/// Exact division of integer polynomials when the divisor is monic; `None`
/// if the division leaves a remainder.
fn int_div_exact_monic(f: &IntPoly, d: &IntPoly) -> Option<IntPoly> {
    let (q, r) = f.to_rat().divmod(&d.to_rat());
    if !r.is_zero() {
        return None;
    }
    let mut coeffs = Vec::with_capacity(q.coeffs().len());
    for c in q.coeffs() {
        if !c.denom().is_one() {
            return None;
        }
        coeffs.push(c.numer().clone());
    }
    Some(Polynomial::new(coeffs))
}

fn small_primes() -> impl Iterator<Item = u64> {
    const PRIMES: [u64; 44] = [
        3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
        97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181,
        191, 193, 197,
    ];
    PRIMES.into_iter()
}

/// Factor a squarefree primitive *monic* integer polynomial into monic
/// irreducible factors.
fn factor_squarefree_monic(f: &IntPoly) -> Result<Vec<IntPoly>> {
    let n = f.degree().unwrap_or(0);
    if n <= 1 {
        return Ok(vec![f.clone()]);
    }
    // Pick a prime keeping f squarefree.
    let mut chosen = None;
    for p in small_primes() {
        let fp = GfPoly::from_int_poly(f, p);
        if fp.degree() != Some(n) {
            continue; // cannot happen for monic f, but keep the guard
        }
        if fp.gcd(&fp.derivative()).degree() == Some(0) {
            chosen = Some(p);
            break;
        }
    }
    let Some(p) = chosen else {
        return Err(Error::Internal(
            "no usable prime for modular factorisation".into(),
        ));
    };
    let local = berlekamp(&GfPoly::from_int_poly(f, p).monic());
    if local.len() == 1 {
        return Ok(vec![f.clone()]);
    }
    // Coefficient bound for monic divisors of f (generous Mignotte-style).
    let norm_sq: Int = f.coeffs().iter().map(|c| c * c).sum();
    let root = norm_sq.sqrt() + Int::one();
    let bound = (Int::one() << (n + 1)) * root;
    let two_bound = &bound * Int::from(2);
    let mut target = Int::from(p);
    while target <= two_bound {
        target = &target * &target;
    }
    let lifted = hensel_lift_tree(&pm_reduce(f, &target), &local, p, &target);

    // Subset recombination.
    let mut remaining: Vec<IntPoly> = lifted;
    let mut f_rem = f.clone();
    let mut out = Vec::new();
    let mut size = 1usize;
    while 2 * size <= remaining.len() {
        let r = remaining.len();
        let mut found = None;
        'subsets: for mask in 1u32..(1u32 << r) {
            if (mask.count_ones() as usize) != size {
                continue;
            }
            let mut cand = Polynomial::one();
            for (i, g) in remaining.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    cand = pm_mul(&cand, g, &target);
                }
            }
            let cand = symmetric_rep(&cand, &target);
            if let Some(quot) = int_div_exact_monic(&f_rem, &cand) {
                found = Some((mask, cand, quot));
                break 'subsets;
            }
        }
        match found {
            Some((mask, cand, quot)) => {
                out.push(cand);
                f_rem = quot;
                remaining = remaining
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << *i) == 0)
                    .map(|(_, g)| g.clone())
                    .collect();
                // retry the same subset size
            }
            None => size += 1,
        }
    }
    if f_rem.degree().unwrap_or(0) >= 1 {
        out.push(f_rem);
    }
    Ok(out)
}

/// Yun's squarefree decomposition of a primitive polynomial with positive
/// leading coefficient: returns pairwise coprime squarefree `(factor, mult)`.
fn yun_decomposition(p: &IntPoly) -> Vec<(IntPoly, usize)> {
    let mut out = Vec::new();
    let pr = p.to_rat();
    let dp = pr.derivative();
    let mut g = pr.gcd(&dp);
    if g.degree() == Some(0) {
        return vec![(p.primitive(), 1)];
    }
    let (mut w, _) = pr.divmod(&g);
    let (mut y, _) = dp.divmod(&g);
    let mut i = 1;
    loop {
        let z = &y - &w.derivative();
        if z.is_zero() {
            if w.degree().unwrap_or(0) >= 1 {
                out.push((rat_poly_to_primitive_int(&w), i));
            }
            break;
        }
        g = w.gcd(&z);
        if g.degree().unwrap_or(0) >= 1 {
            out.push((rat_poly_to_primitive_int(&g), i));
        }
        let (w1, _) = w.divmod(&g);
        let (y1, _) = z.divmod(&g);
        w = w1;
        y = y1;
        i += 1;
    }
    out
}

/// Complete factorisation over Z: returns irreducible primitive factors with
/// positive leading coefficients and their multiplicities (content dropped).
pub fn factor(p: &IntPoly) -> Result<Vec<(IntPoly, usize)>> {
    if p.is_zero() {
        return Err(Error::Internal("factor of zero polynomial".into()));
    }
    let mut work = p.primitive();
    let mut out: Vec<(IntPoly, usize)> = Vec::new();
    // Pull out the x^k factor.
    let mut xmult = 0usize;
    while work.coeff(0).is_zero() && work.degree().unwrap_or(0) >= 1 {
        let (q, r) = work.to_rat().divmod(&RatPoly::x());
        debug_assert!(r.is_zero());
        work = rat_poly_to_primitive_int(&q);
        xmult += 1;
    }
    if xmult > 0 {
        out.push((Polynomial::x(), xmult));
    }
    if work.degree().unwrap_or(0) == 0 {
        return Ok(out);
    }
    for (sq, mult) in yun_decomposition(&work) {
        let deg = sq.degree().unwrap();
        let lead = sq.leading().unwrap().clone();
        if lead.is_one() {
            for f in factor_squarefree_monic(&sq)? {
                out.push((f, mult));
            }
        } else {
            // Monic reduction: F(x) = lc^{n-1} * f(x/lc) is monic integral;
            // factors of f are recovered as primitive parts of G(lc*x).
            let mut coeffs = Vec::with_capacity(deg + 1);
            // f = sum a_i x^i  =>  F = sum a_i lc^{n-1-i} x^i  (leading term 1)
            for (i, a) in sq.coeffs().iter().enumerate() {
                if i == deg {
                    coeffs.push(Int::one());
                    break;
                }
                let mut c = a.clone();
                for _ in 0..(deg - 1 - i) {
                    c = c * &lead;
                }
                coeffs.push(c);
            }
            let monic_f = Polynomial::new(coeffs);
            debug_assert_eq!(monic_f.leading(), Some(&Int::one()));
            for g in factor_squarefree_monic(&monic_f)? {
                // Substitute back x -> lc * x and take the primitive part.
                let gd = g.degree().unwrap_or(0);
                let mut back = Vec::with_capacity(gd + 1);
                for (i, a) in g.coeffs().iter().enumerate() {
                    let mut c = a.clone();
                    for _ in 0..i {
                        c = c * &lead;
                    }
                    back.push(c);
                }
                out.push((Polynomial::new(back).primitive(), mult));
            }
        }
    }
    Ok(out)
}

/// True when `p` is irreducible over Q (up to content).
pub fn is_irreducible(p: &IntPoly) -> Result<bool> {
    let f = factor(p)?;
    Ok(f.len() == 1 && f[0].1 == 1)
}

// ---------------------------------------------------------------------------
// Number fields
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum FieldRoot {
    Exact(Rat),
    Isolated {
        minpoly_rat: RatPoly,
        state: Mutex<(Rat, Rat, i8)>, // lo, hi, sign at lo
    },
}

#[derive(Debug)]
struct FieldData {
    /// Monic irreducible integer polynomial of the distinguished root.
    minpoly: IntPoly,
    degree: usize,
    root: FieldRoot,
}

/// The real number field Q(θ) for a distinguished real algebraic integer θ.
/// Cloning is cheap; the embedded isolating interval refines on demand and is
/// shared between clones.
#[derive(Clone, Debug)]
pub struct NumberField(Arc<FieldData>);

impl PartialEq for NumberField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.minpoly == other.0.minpoly
                && self.generator_value().equals(&other.generator_value()))
    }
}

impl NumberField {
    /// Build Q(θ) from an exact real algebraic integer (monic minimal
    /// polynomial required).
    pub fn adjoin(theta: &RealAlgebraic) -> Result<NumberField> {
        let minpoly = theta.minpoly().clone();
        if minpoly.leading() != Some(&Int::one()) {
            return Err(Error::Internal(format!(
                "number field generator must be an algebraic integer (minpoly {})",
                poly_to_string(&minpoly, "x")
            )));
        }
        let degree = minpoly.degree().unwrap_or(0);
        let root = match theta.exact_rational() {
            Some(q) => FieldRoot::Exact(q),
            None => {
                let (lo, hi) = theta.interval();
                let minpoly_rat = minpoly.to_rat();
                let sign_lo = rat_sign(&minpoly_rat.eval(&lo));
                FieldRoot::Isolated {
                    minpoly_rat,
                    state: Mutex::new((lo, hi, sign_lo)),
                }
            }
        };
        Ok(NumberField(Arc::new(FieldData {
            minpoly,
            degree,
            root,
        })))
    }

    pub fn degree(&self) -> usize {
        self.0.degree
    }

    pub fn minpoly(&self) -> &IntPoly {
        &self.0.minpoly
    }

    /// The distinguished root as a standalone algebraic number.
    pub fn generator_value(&self) -> RealAlgebraic {
        match &self.0.root {
            FieldRoot::Exact(q) => RealAlgebraic::from_rational(q.clone()),
            FieldRoot::Isolated { state, .. } => {
                let (lo, hi, sign_lo) = state.lock().unwrap().clone();
                RealAlgebraic {
                    minpoly: self.0.minpoly.clone(),
                    rep: RootRep::Isolated { lo, hi, sign_lo },
                }
            }
        }
    }

    fn root_interval(&self) -> (Rat, Rat) {
        match &self.0.root {
            FieldRoot::Exact(q) => (q.clone(), q.clone()),
            FieldRoot::Isolated { state, .. } => {
                let s = state.lock().unwrap();
                (s.0.clone(), s.1.clone())
            }
        }
    }

    fn refine_root(&self) {
        if let FieldRoot::Isolated { minpoly_rat, state } = &self.0.root {
            let mut s = state.lock().unwrap();
            let mid = (&s.0 + &s.1) / Rat::from_integer(Int::from(2));
            let sign = rat_sign(&minpoly_rat.eval(&mid));
            debug_assert!(sign != 0);
            if sign == s.2 {
                s.0 = mid;
            } else {
                s.1 = mid;
            }
        }
    }

    /// The generator θ as a field element.
    pub fn generator(&self) -> NfElem {
        if self.0.degree == 1 {
            let FieldRoot::Exact(q) = &self.0.root else {
                unreachable!("degree-one field with non-exact root")
            };
            return self.constant(q.clone());
        }
        NfElem {
            field: Some(self.clone()),
            coeffs: vec![Rat::zero(), Rat::one()],
        }
    }

    pub fn constant(&self, q: Rat) -> NfElem {
        NfElem {
            field: Some(self.clone()),
            coeffs: if q.is_zero() { vec![] } else { vec![q] },
        }
    }

    /// Element from arbitrary polynomial coordinates in θ.
    pub fn elem(&self, coeffs: Vec<Rat>) -> NfElem {
        let poly = Polynomial::new(coeffs);
        let reduced = if self.0.degree >= 1 && poly.degree().map_or(false, |d| d >= self.0.degree) {
            let (_, r) = poly.divmod(&self.0.minpoly.to_rat());
            r
        } else {
            poly
        };
        NfElem {
            field: Some(self.clone()),
            coeffs: reduced.coeffs().to_vec(),
        }
    }
}

/// An element of a [`NumberField`], reduced modulo the minimal polynomial.
/// Field-less values (`field == None`) are rational constants produced by
/// `Zero::zero` / `One::one`; they unify with any field on first contact.
#[derive(Clone, Debug)]
pub struct NfElem {
    field: Option<NumberField>,
    coeffs: Vec<Rat>,
}

impl NfElem {
    pub fn from_rat(q: Rat) -> NfElem {
        NfElem {
            field: None,
            coeffs: if q.is_zero() { vec![] } else { vec![q] },
        }
    }

    pub fn from_int(n: i64) -> NfElem {
        NfElem::from_rat(Rat::from_integer(Int::from(n)))
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn field(&self) -> Option<&NumberField> {
        self.field.as_ref()
    }

    fn trim(mut self) -> NfElem {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
        self
    }

    pub fn as_rational(&self) -> Option<Rat> {
        match self.coeffs.len() {
            0 => Some(Rat::zero()),
            1 => Some(self.coeffs[0].clone()),
            _ => None,
        }
    }

    fn unified_field<'a>(&'a self, other: &'a NfElem) -> Option<&'a NumberField> {
        match (&self.field, &other.field) {
            (Some(f), Some(g)) => {
                assert!(f == g, "mixing elements of different number fields");
                Some(f)
            }
            (Some(f), None) => Some(f),
            (None, Some(g)) => Some(g),
            (None, None) => None,
        }
    }

    fn binop(&self, other: &NfElem, f: impl Fn(&RatPoly, &RatPoly) -> RatPoly) -> NfElem {
        let field = self.unified_field(other).cloned();
        let a = Polynomial::new(self.coeffs.clone());
        let b = Polynomial::new(other.coeffs.clone());
        let mut res = f(&a, &b);
        if let Some(fd) = &field {
            if fd.degree() >= 1 && res.degree().map_or(false, |d| d >= fd.degree()) {
                let (_, r) = res.divmod(&fd.minpoly().to_rat());
                res = r;
            }
        }
        NfElem {
            field,
            coeffs: res.coeffs().to_vec(),
        }
        .trim()
    }

    pub fn add_ref(&self, other: &NfElem) -> NfElem {
        self.binop(other, |a, b| a + b)
    }

    pub fn sub_ref(&self, other: &NfElem) -> NfElem {
        self.binop(other, |a, b| a - b)
    }

    pub fn mul_ref(&self, other: &NfElem) -> NfElem {
        self.binop(other, |a, b| a * b)
    }

    pub fn neg_ref(&self) -> NfElem {
        NfElem {
            field: self.field.clone(),
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn inverse(&self) -> NfElem {
        assert!(!Zero::is_zero(self), "inverse of zero");
        match &self.field {
            None => NfElem::from_rat(Rat::one() / self.coeffs[0].clone()),
            Some(fd) => {
                if let Some(q) = self.as_rational() {
                    return fd.constant(Rat::one() / q);
                }
                let a = Polynomial::new(self.coeffs.clone());
                let m = fd.minpoly().to_rat();
                let (g, s, _) = a.extended_gcd(&m);
                assert_eq!(g.degree(), Some(0), "minimal polynomial not irreducible?");
                let (_, r) = s.divmod(&m);
                NfElem {
                    field: self.field.clone(),
                    coeffs: r.coeffs().to_vec(),
                }
                .trim()
            }
        }
    }

    pub fn div_ref(&self, other: &NfElem) -> NfElem {
        self.mul_ref(&other.inverse())
    }

    pub fn pow(&self, k: u32) -> NfElem {
        let mut acc = NfElem::from_int(1);
        for _ in 0..k {
            acc = acc.mul_ref(self);
        }
        acc
    }

    /// Exact sign: -1, 0 or +1.
    pub fn sign(&self) -> i8 {
        if self.coeffs.is_empty() {
            return 0;
        }
        if let Some(q) = self.as_rational() {
            return rat_sign(&q);
        }
        let fd = self.field.as_ref().expect("non-constant element without field");
        for _ in 0..100_000 {
            let (lo, hi) = fd.root_interval();
            let (vlo, vhi) = eval_interval(&self.coeffs, &lo, &hi);
            if vlo.is_positive() {
                return 1;
            }
            if vhi.is_negative() {
                return -1;
            }
            fd.refine_root();
        }
        panic!("sign refinement failed to converge for a provably nonzero element");
    }

    pub fn cmp(&self, other: &NfElem) -> Ordering {
        match self.sub_ref(other).sign() {
            1 => Ordering::Greater,
            -1 => Ordering::Less,
            _ => Ordering::Equal,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() > 0
    }

    pub fn to_f64(&self) -> f64 {
        if let Some(q) = self.as_rational() {
            return q.to_f64().unwrap_or(f64::NAN);
        }
        let fd = self.field.as_ref().expect("non-constant element without field");
        loop {
            let (lo, hi) = fd.root_interval();
            let (vlo, vhi) = eval_interval(&self.coeffs, &lo, &hi);
            let flo = vlo.to_f64().unwrap_or(f64::NAN);
            let fhi = vhi.to_f64().unwrap_or(f64::NAN);
            if (fhi - flo).abs() < 1e-12 * (1.0 + fhi.abs()) {
                return (flo + fhi) / 2.0;
            }
            fd.refine_root();
        }
    }
}

/// Interval Horner evaluation over rational interval arithmetic.
fn eval_interval(coeffs: &[Rat], lo: &Rat, hi: &Rat) -> (Rat, Rat) {
    let mut vlo = Rat::zero();
    let mut vhi = Rat::zero();
    for c in coeffs.iter().rev() {
        let products = [&vlo * lo, &vlo * hi, &vhi * lo, &vhi * hi];
        let mut pmin = products[0].clone();
        let mut pmax = products[0].clone();
        for p in &products[1..] {
            if *p < pmin {
                pmin = p.clone();
            }
            if *p > pmax {
                pmax = p.clone();
            }
        }
        vlo = pmin + c;
        vhi = pmax + c;
    }
    (vlo, vhi)
}

impl PartialEq for NfElem {
    fn eq(&self, other: &Self) -> bool {
        let a = self.clone().trim();
        let b = other.clone().trim();
        a.coeffs == b.coeffs
    }
}

impl std::ops::Add for NfElem {
    type Output = NfElem;
    fn add(self, rhs: NfElem) -> NfElem {
        self.add_ref(&rhs)
    }
}

impl std::ops::Sub for NfElem {
    type Output = NfElem;
    fn sub(self, rhs: NfElem) -> NfElem {
        self.sub_ref(&rhs)
    }
}

impl std::ops::Mul for NfElem {
    type Output = NfElem;
    fn mul(self, rhs: NfElem) -> NfElem {
        self.mul_ref(&rhs)
    }
}

impl std::ops::Div for NfElem {
    type Output = NfElem;
    fn div(self, rhs: NfElem) -> NfElem {
        self.div_ref(&rhs)
    }
}

impl std::ops::Neg for NfElem {
    type Output = NfElem;
    fn neg(self) -> NfElem {
        self.neg_ref()
    }
}

impl Zero for NfElem {
    fn zero() -> Self {
        NfElem {
            field: None,
            coeffs: vec![],
        }
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

impl One for NfElem {
    fn one() -> Self {
        NfElem::from_int(1)
    }
}

impl fmt::Display for NfElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if Zero::is_zero(self) {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", c)?,
                1 => write!(f, "({})*t", c)?,
                _ => write!(f, "({})*t^{}", c, i)?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ipoly(cs: &[i64]) -> IntPoly {
        Polynomial::new(cs.iter().map(|&c| Int::from(c)).collect())
    }

    #[test]
    fn squarefree_part_strips_multiplicity() {
        // (x-1)^2 (x+2) = x^3 - 3x + 2
        let p = ipoly(&[2, -3, 0, 1]);
        assert_eq!(squarefree_part(&p), ipoly(&[-2, 1, 1])); // (x-1)(x+2)
    }

    #[test]
    fn sturm_counts_roots() {
        // (x^2-2)(x^2-3): four real roots.
        let p = ipoly(&[6, 0, -5, 0, 1]).to_rat();
        let seq = sturm_sequence(&p);
        let count = count_roots_between(
            &seq,
            &Rat::from_integer(Int::from(-10)),
            &Rat::from_integer(Int::from(10)),
        );
        assert_eq!(count, 4);
        let upper = count_roots_between(
            &seq,
            &Rat::new(Int::from(17), Int::from(10)),
            &Rat::from_integer(Int::from(10)),
        );
        assert_eq!(upper, 1); // only sqrt(3) lies above 1.7
    }

    #[test]
    fn factor_products_of_known_irreducibles() {
        // x^3 - x - 1 and x^3 - x^2 - 1 are irreducible; check their product
        // splits back into exactly these.
        let a = ipoly(&[-1, -1, 0, 1]);
        let b = ipoly(&[-1, 0, -1, 1]);
        let prod = &a * &b;
        let mut fs: Vec<IntPoly> = factor(&prod).unwrap().into_iter().map(|(f, _)| f).collect();
        fs.sort_by_key(|f| f.coeffs().to_vec());
        let mut expected = vec![a.clone(), b.clone()];
        expected.sort_by_key(|f| f.coeffs().to_vec());
        assert_eq!(fs, expected);
        assert!(is_irreducible(&a).unwrap());
        assert!(is_irreducible(&b).unwrap());
    }

    #[test]
    fn factor_with_recombination() {
        // x^4 - 5x^2 + 6 = (x^2-2)(x^2-3): both factors are irreducible over
        // Z but split modulo many primes, forcing subset recombination.
        let p = ipoly(&[6, 0, -5, 0, 1]);
        let fs = factor(&p).unwrap();
        let mut degs: Vec<usize> = fs.iter().map(|(f, _)| f.degree().unwrap()).collect();
        degs.sort();
        assert_eq!(degs, vec![2, 2]);
        let reassembled = fs
            .iter()
            .fold(Polynomial::one(), |acc, (f, m)| {
                let mut a = acc;
                for _ in 0..*m {
                    a = &a * f;
                }
                a
            });
        assert_eq!(reassembled, p);
    }

    #[test]
    fn factor_cyclotomic_and_powers() {
        // x^4 + x^3 + x^2 + x + 1 is irreducible.
        let p = ipoly(&[1, 1, 1, 1, 1]);
        assert!(is_irreducible(&p).unwrap());
        // x^2 (x-1)^3 (x^2+1)
        let q = {
            let x2 = ipoly(&[0, 0, 1]);
            let m = ipoly(&[-1, 1]);
            let c = ipoly(&[1, 0, 1]);
            let mut acc = &x2 * &c;
            for _ in 0..3 {
                acc = &acc * &m;
            }
            acc
        };
        let fs = factor(&q).unwrap();
        let mut tagged: Vec<(Vec<i64>, usize)> = fs
            .iter()
            .map(|(f, m)| {
                (
                    f.coeffs().iter().map(|c| c.to_i64().unwrap()).collect(),
                    *m,
                )
            })
            .collect();
        tagged.sort();
        assert_eq!(
            tagged,
            vec![
                (vec![-1, 1], 3),
                (vec![0, 1], 2),
                (vec![1, 0, 1], 1),
            ]
        );
    }

    #[test]
    fn factor_non_monic() {
        // (2x+3)(x^2+x+7) = 2x^3 + 5x^2 + 17x + 21
        let p = ipoly(&[21, 17, 5, 2]);
        let mut fs: Vec<Vec<i64>> = factor(&p)
            .unwrap()
            .into_iter()
            .map(|(f, _)| f.coeffs().iter().map(|c| c.to_i64().unwrap()).collect())
            .collect();
        fs.sort();
        assert_eq!(fs, vec![vec![3, 2], vec![7, 1, 1]]);
    }

    #[test]
    fn largest_roots_and_comparison() {
        // Largest root of x^3 - x - 1 is ~1.3247; of x^3 - x^2 - 1 is ~1.4656.
        let a = RealAlgebraic::largest_real_root(&ipoly(&[-1, -1, 0, 1]))
            .unwrap()
            .unwrap();
        let b = RealAlgebraic::largest_real_root(&ipoly(&[-1, 0, -1, 1]))
            .unwrap()
            .unwrap();
        assert!((a.to_f64() - 1.3247179572447460).abs() < 1e-12);
        assert!((b.to_f64() - 1.4655712318767680).abs() < 1e-12);
        assert_eq!(a.cmp(&b), Ordering::Less);
        assert_eq!(a.cmp(&a.clone()), Ordering::Equal);
        assert!(a.equals(&a.refined(&Rat::new(Int::one(), Int::from(1_000_000)))));
        assert_eq!(a.cmp_rat(&Rat::one()), Ordering::Greater);
        // Same minimal polynomial, different roots: sqrt(2) vs -sqrt(2).
        let p = ipoly(&[-2, 0, 1]).to_rat();
        let seq = sturm_sequence(&p);
        assert_eq!(
            count_roots_between(&seq, &Rat::from_integer(Int::from(-2)), &Rat::zero()),
            1
        );
        let plus = RealAlgebraic::largest_real_root(&ipoly(&[-2, 0, 1]))
            .unwrap()
            .unwrap();
        assert!((plus.to_f64() - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn decimal_strings() {
        let a = RealAlgebraic::largest_real_root(&ipoly(&[-1, -1, 0, 1]))
            .unwrap()
            .unwrap();
        let s = a.decimal_string(4);
        assert!(s.starts_with("1.324"), "got {}", s);
        let half = RealAlgebraic::from_rational(Rat::new(Int::one(), Int::from(2)));
        assert_eq!(half.decimal_string(3), "0.500");
    }

    #[test]
    fn number_field_arithmetic() {
        // K = Q(t), t^3 = t + 1.
        let theta = RealAlgebraic::largest_real_root(&ipoly(&[-1, -1, 0, 1]))
            .unwrap()
            .unwrap();
        let k = NumberField::adjoin(&theta).unwrap();
        let t = k.generator();
        let t3 = t.pow(3);
        let expect = t.add_ref(&NfElem::one());
        assert_eq!(t3, expect);
        // Inverse: t * t^{-1} = 1; also t^{-1} = t^2 - 1 here.
        let tinv = t.inverse();
        assert_eq!(t.mul_ref(&tinv), NfElem::one());
        assert_eq!(tinv, t.pow(2).sub_ref(&NfElem::one()));
        // Sign checks: t ~ 1.3247 so t^2 - t - 1 < 0 and t^2 - 1 > 0.
        assert_eq!(t.pow(2).sub_ref(&t).sub_ref(&NfElem::one()).sign(), -1);
        assert_eq!(t.pow(2).sub_ref(&NfElem::one()).sign(), 1);
        // cmp through the field order.
        assert_eq!(t.cmp(&NfElem::one()), Ordering::Greater);
        assert!((t.to_f64() - 1.3247179572447460).abs() < 1e-9);
    }

    #[test]
    fn golden_ratio_field() {
        let theta = RealAlgebraic::largest_real_root(&ipoly(&[-1, -1, 1]))
            .unwrap()
            .unwrap();
        assert_eq!(theta.minpoly_string(), "x^2 - x - 1");
        assert!((theta.to_f64() - 1.618033988749895).abs() < 1e-12);
        let k = NumberField::adjoin(&theta).unwrap();
        let t = k.generator();
        // 1/t = t - 1.
        assert_eq!(t.inverse(), t.sub_ref(&NfElem::one()));
    }

    #[test]
    fn rational_field_degenerates_cleanly() {
        let one = RealAlgebraic::from_rational(Rat::one());
        let k = NumberField::adjoin(&one).unwrap();
        assert_eq!(k.degree(), 1);
        let g = k.generator();
        assert_eq!(g, NfElem::one());
        assert_eq!(g.sign(), 1);
    }
}
