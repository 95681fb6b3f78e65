//! Polynomial arithmetic and factorization over F_p and F_{p^m}, plus the
//! count of monic irreducible polynomials of a given degree.

use crate::arith::is_small_prime;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use std::fmt;

/// Errors from the finite-field layer.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus must be monic of degree >= 1")]
    BadModulus,
    #[error("modulus is reducible")]
    ReducibleModulus,
    #[error("the zero polynomial cannot be factored")]
    ZeroPolynomial,
    #[error("equal-degree split exceeded the deterministic search budget")]
    SplitBudget,
}

// ---------------------------------------------------------------------------
// Raw dense polynomials over F_p: Vec<u64>, low to high, always trimmed.
// ---------------------------------------------------------------------------

mod zp {
    pub fn trim(v: &mut Vec<u64>) {
        while v.last() == Some(&0) {
            v.pop();
        }
    }

    pub fn deg(v: &[u64]) -> Option<usize> {
        if v.is_empty() {
            None
        } else {
            Some(v.len() - 1)
        }
    }

    pub fn add(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut out = vec![0; a.len().max(b.len())];
        for (i, slot) in out.iter_mut().enumerate() {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            *slot = (x + y) % p;
        }
        trim(&mut out);
        out
    }

    pub fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut out = vec![0; a.len().max(b.len())];
        for (i, slot) in out.iter_mut().enumerate() {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            *slot = (x + p - y) % p;
        }
        trim(&mut out);
        out
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return vec![];
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % p;
            }
        }
        trim(&mut out);
        out
    }

    /// Division with remainder; the divisor's leading coefficient must be a unit.
    pub fn divrem(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
        let db = deg(b).expect("division by zero polynomial");
        let lead_inv = inv_mod(b[db], p);
        let mut rem: Vec<u64> = a.to_vec();
        if a.len() < b.len() {
            return (vec![], rem);
        }
        let mut quot = vec![0u64; a.len() - b.len() + 1];
        while let Some(dr) = deg(&rem) {
            if dr < db {
                break;
            }
            let c = (rem[dr] * lead_inv) % p;
            let shift = dr - db;
            quot[shift] = c;
            for (j, &bj) in b.iter().enumerate() {
                rem[shift + j] = (rem[shift + j] + p - (c * bj) % p) % p;
            }
            trim(&mut rem);
        }
        trim(&mut quot);
        (quot, rem)
    }

    pub fn rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        divrem(a, b, p).1
    }

    pub fn inv_mod(x: u64, p: u64) -> u64 {
        // Fermat; p prime and x != 0 mod p.
        pow_mod_u(x % p, p - 2, p)
    }

    pub fn pow_mod_u(mut base: u64, mut e: u64, p: u64) -> u64 {
        let mut acc = 1u64;
        base %= p;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

/// The prime field F_p for small p.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if is_small_prime(p) {
            Ok(PrimeField { p })
        } else {
            Err(FieldError::NotPrime(p))
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }
}

/// An element of an [`ExtensionField`]: residue of a polynomial of degree < m,
/// dense coefficients low to high, length exactly m.
pub type FqElem = Vec<u64>;

/// F_{p^m} presented as F_p[x] / (modulus); `m = 1` gives F_p itself and is
/// used uniformly so residue computations take one code path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionField {
    p: u64,
    /// Monic irreducible over F_p, low to high, degree m.
    modulus: Vec<u64>,
}

impl ExtensionField {
    /// F_p itself, presented with modulus x.
    pub fn prime(base: PrimeField) -> Self {
        ExtensionField { p: base.p(), modulus: vec![0, 1] }
    }

    pub fn new(base: PrimeField, modulus: Vec<u64>) -> Result<Self, FieldError> {
        let p = base.p();
        let mut modulus = modulus;
        for c in modulus.iter_mut() {
            *c %= p;
        }
        zp::trim(&mut modulus);
        let deg = zp::deg(&modulus).ok_or(FieldError::BadModulus)?;
        if deg < 1 || modulus[deg] != 1 {
            return Err(FieldError::BadModulus);
        }
        if deg > 1 {
            // Frobenius irreducibility test over F_p.
            let fp = ExtensionField { p, modulus: vec![0, 1] };
            let poly = FieldPoly {
                coeffs: modulus.iter().map(|&c| vec![c]).collect::<Vec<_>>(),
            };
            let poly = poly.trimmed(&fp);
            if !is_irreducible(&fp, &poly) {
                return Err(FieldError::ReducibleModulus);
            }
        }
        Ok(ExtensionField { p, modulus })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Extension degree m.
    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    /// Field size p^m; callers keep sizes within u128.
    pub fn order(&self) -> u128 {
        (self.p as u128).pow(self.degree() as u32)
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    fn pad(&self, mut v: Vec<u64>) -> FqElem {
        v.resize(self.degree(), 0);
        v
    }

    pub fn zero(&self) -> FqElem {
        vec![0; self.degree()]
    }

    pub fn one(&self) -> FqElem {
        self.pad(vec![1])
    }

    pub fn is_zero(&self, a: &FqElem) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub fn add(&self, a: &FqElem, b: &FqElem) -> FqElem {
        self.pad(zp::add(a, b, self.p))
    }

    pub fn sub(&self, a: &FqElem, b: &FqElem) -> FqElem {
        self.pad(zp::sub(a, b, self.p))
    }

    pub fn neg(&self, a: &FqElem) -> FqElem {
        self.sub(&self.zero(), a)
    }

    pub fn mul(&self, a: &FqElem, b: &FqElem) -> FqElem {
        self.pad(zp::rem(&zp::mul(a, b, self.p), &self.modulus, self.p))
    }

    pub fn inv(&self, a: &FqElem) -> FqElem {
        assert!(!self.is_zero(a), "inverse of zero");
        // a^(q-2) via square and multiply; q fits u128 for all supported sizes.
        let q = self.order();
        self.pow(a, q - 2)
    }

    pub fn pow(&self, a: &FqElem, mut e: u128) -> FqElem {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Residue of an integer polynomial modulo (p, modulus).
    pub fn element_from_int_coeffs(&self, coeffs: &[BigInt]) -> FqElem {
        let p = BigInt::from(self.p);
        let reduced: Vec<u64> = coeffs
            .iter()
            .map(|c| {
                let mut r = c.mod_floor(&p);
                if r.is_negative() {
                    r += &p;
                }
                r.to_u64().expect("residue fits u64")
            })
            .collect();
        let mut reduced = reduced;
        zp::trim(&mut reduced);
        self.pad(zp::rem(&reduced, &self.modulus, self.p))
    }

    /// Constant embedding of a scalar reduced mod p.
    pub fn scalar_from_bigint(&self, c: &BigInt) -> FqElem {
        self.element_from_int_coeffs(std::slice::from_ref(c))
    }

    /// Canonical integer encoding sum c_i p^i; used for deterministic ordering.
    pub fn encode(&self, a: &FqElem) -> u128 {
        let mut acc = 0u128;
        for &c in a.iter().rev() {
            acc = acc * self.p as u128 + c as u128;
        }
        acc
    }

    /// Elements in canonical (encoding) order: 0, 1, ..., q-1.
    pub fn elements(&self) -> impl Iterator<Item = FqElem> + '_ {
        let q = self.order();
        (0..q).map(move |mut code| {
            let mut v = Vec::with_capacity(self.degree());
            for _ in 0..self.degree() {
                v.push((code % self.p as u128) as u64);
                code /= self.p as u128;
            }
            v
        })
    }
}

// ---------------------------------------------------------------------------
// Polynomials over an extension field
// ---------------------------------------------------------------------------

/// Dense polynomial over an [`ExtensionField`], coefficients low to high with
/// nonzero leading coefficient (empty = zero polynomial).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldPoly {
    coeffs: Vec<FqElem>,
}

impl FieldPoly {
    pub fn new(field: &ExtensionField, coeffs: Vec<FqElem>) -> Self {
        FieldPoly { coeffs }.trimmed(field)
    }

    pub fn zero() -> Self {
        FieldPoly { coeffs: vec![] }
    }

    pub fn from_int_coeffs(field: &ExtensionField, coeffs: &[BigInt]) -> Self {
        let coeffs = coeffs
            .iter()
            .map(|c| field.scalar_from_bigint(c))
            .collect();
        FieldPoly { coeffs }.trimmed(field)
    }

    /// y + c as a convenience constructor.
    pub fn linear(field: &ExtensionField, c: FqElem) -> Self {
        FieldPoly::new(field, vec![c, field.one()])
    }

    fn trimmed(mut self, field: &ExtensionField) -> Self {
        while self
            .coeffs
            .last()
            .map(|c| field.is_zero(c))
            .unwrap_or(false)
        {
            self.coeffs.pop();
        }
        self
    }

    pub fn coeffs(&self) -> &[FqElem] {
        &self.coeffs
    }

    pub fn coeff(&self, field: &ExtensionField, i: usize) -> FqElem {
        self.coeffs.get(i).cloned().unwrap_or_else(|| field.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn is_monic(&self, field: &ExtensionField) -> bool {
        self.coeffs
            .last()
            .map(|c| *c == field.one())
            .unwrap_or(false)
    }

    pub fn add(&self, field: &ExtensionField, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| field.add(&self.coeff(field, i), &other.coeff(field, i)))
            .collect();
        FieldPoly { coeffs }.trimmed(field)
    }

    pub fn sub(&self, field: &ExtensionField, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| field.sub(&self.coeff(field, i), &other.coeff(field, i)))
            .collect();
        FieldPoly { coeffs }.trimmed(field)
    }

    pub fn mul(&self, field: &ExtensionField, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return FieldPoly::zero();
        }
        let mut coeffs = vec![field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if field.is_zero(a) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let prod = field.mul(a, b);
                coeffs[i + j] = field.add(&coeffs[i + j], &prod);
            }
        }
        FieldPoly { coeffs }.trimmed(field)
    }

    pub fn scale(&self, field: &ExtensionField, c: &FqElem) -> Self {
        let coeffs = self.coeffs.iter().map(|a| field.mul(a, c)).collect();
        FieldPoly { coeffs }.trimmed(field)
    }

    pub fn divrem(&self, field: &ExtensionField, divisor: &Self) -> (Self, Self) {
        let db = divisor.degree().expect("division by zero polynomial");
        let lead_inv = field.inv(&divisor.coeffs[db]);
        let mut rem = self.clone();
        let mut quot = vec![field.zero(); self.coeffs.len().saturating_sub(db)];
        while let Some(dr) = rem.degree() {
            if dr < db {
                break;
            }
            let c = field.mul(&rem.coeffs[dr], &lead_inv);
            let shift = dr - db;
            quot[shift] = c.clone();
            for (j, bj) in divisor.coeffs.iter().enumerate() {
                let t = field.mul(&c, bj);
                rem.coeffs[shift + j] = field.sub(&rem.coeffs[shift + j], &t);
            }
            rem = rem.trimmed(field);
        }
        (FieldPoly { coeffs: quot }.trimmed(field), rem)
    }

    pub fn rem(&self, field: &ExtensionField, divisor: &Self) -> Self {
        self.divrem(field, divisor).1
    }

    pub fn monic(&self, field: &ExtensionField) -> Self {
        match self.coeffs.last() {
            None => FieldPoly::zero(),
            Some(lead) => self.scale(field, &field.inv(lead)),
        }
    }

    pub fn gcd(&self, field: &ExtensionField, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(field, &b);
            a = b;
            b = r;
        }
        a.monic(field)
    }

    /// Formal derivative.
    pub fn derivative(&self, field: &ExtensionField) -> Self {
        if self.coeffs.len() <= 1 {
            return FieldPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| {
                let k = field.scalar_from_bigint(&BigInt::from(i));
                field.mul(c, &k)
            })
            .collect();
        FieldPoly { coeffs }.trimmed(field)
    }

    /// Composition self(g) reduced mod m (Horner).
    pub fn compose_mod(&self, field: &ExtensionField, g: &Self, m: &Self) -> Self {
        let mut acc = FieldPoly::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(field, g).add(
                field,
                &FieldPoly { coeffs: vec![c.clone()] }.trimmed(field),
            );
            acc = acc.rem(field, m);
        }
        acc
    }

    pub fn pow_mod(&self, field: &ExtensionField, mut e: u128, m: &Self) -> Self {
        let mut base = self.rem(field, m);
        let mut acc = FieldPoly::new(field, vec![field.one()]);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(field, &base).rem(field, m);
            }
            base = base.mul(field, &base).rem(field, m);
            e >>= 1;
        }
        acc
    }

    pub fn eval(&self, field: &ExtensionField, at: &FqElem) -> FqElem {
        let mut acc = field.zero();
        for c in self.coeffs.iter().rev() {
            acc = field.mul(&acc, at);
            acc = field.add(&acc, c);
        }
        acc
    }

    /// Deterministic ordering key: degree, then coefficient encodings low to high.
    pub fn order_key(&self, field: &ExtensionField) -> (usize, Vec<u128>) {
        (
            self.coeffs.len(),
            self.coeffs.iter().map(|c| field.encode(c)).collect(),
        )
    }

    pub fn render(&self, field: &ExtensionField, var: &str) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut terms: Vec<String> = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if field.is_zero(c) {
                continue;
            }
            let c_str = if field.degree() == 1 {
                format!("{}", c[0])
            } else {
                let inner: Vec<String> = c
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(j, &v)| match j {
                        0 => format!("{v}"),
                        1 if v == 1 => "t".to_string(),
                        1 => format!("{v}t"),
                        _ if v == 1 => format!("t^{j}"),
                        _ => format!("{v}t^{j}"),
                    })
                    .collect();
                if inner.len() == 1 {
                    inner[0].clone()
                } else {
                    format!("({})", inner.join("+"))
                }
            };
            let term = match i {
                0 => c_str,
                1 if c_str == "1" => var.to_string(),
                1 => format!("{c_str}{var}"),
                _ if c_str == "1" => format!("{var}^{i}"),
                _ => format!("{c_str}{var}^{i}"),
            };
            terms.push(term);
        }
        terms.join(" + ")
    }
}

impl fmt::Display for FieldPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Degree-only fallback; use render() for field-aware output.
        write!(f, "poly(deg {:?})", self.degree())
    }
}

// ---------------------------------------------------------------------------
// Irreducibility and factorization
// ---------------------------------------------------------------------------

/// x^(q^k) mod f for k = 1..=max_k via iterated Frobenius composition.
fn frobenius_powers(field: &ExtensionField, f: &FieldPoly, max_k: usize) -> Vec<FieldPoly> {
    let x = FieldPoly::new(field, vec![field.zero(), field.one()]);
    let first = x.pow_mod(field, field.order(), f);
    let mut out = vec![first.clone()];
    for _ in 1..max_k {
        let prev = out.last().unwrap();
        out.push(prev.compose_mod(field, &first, f));
    }
    out
}

/// True iff the monic polynomial is irreducible over the field.
pub fn is_irreducible(field: &ExtensionField, poly: &FieldPoly) -> bool {
    let n = match poly.degree() {
        None | Some(0) => return false,
        Some(n) => n,
    };
    if n == 1 {
        return true;
    }
    let f = poly.monic(field);
    let x = FieldPoly::new(field, vec![field.zero(), field.one()]);
    let frob = frobenius_powers(field, &f, n);
    // x^(q^n) must equal x mod f.
    if frob[n - 1].sub(field, &x) != FieldPoly::zero() {
        return false;
    }
    // No coincidence at proper divisors n/r.
    let mut r = 2;
    let mut m = n;
    let mut proper: Vec<usize> = Vec::new();
    while r * r <= m {
        if m % r == 0 {
            proper.push(n / r);
            while m % r == 0 {
                m /= r;
            }
        }
        r += 1;
    }
    if m > 1 {
        proper.push(n / m);
    }
    for k in proper {
        let g = frob[k - 1].sub(field, &x).gcd(field, &f);
        if g.degree() != Some(0) {
            return false;
        }
    }
    true
}

/// Squarefree decomposition in characteristic p: list of (factor, multiplicity)
/// with factors pairwise coprime and squarefree.
fn squarefree_decomposition(
    field: &ExtensionField,
    poly: &FieldPoly,
) -> Vec<(FieldPoly, u32)> {
    let p = field.p() as u32;
    let f = poly.monic(field);
    if f.degree() == Some(0) {
        return vec![];
    }
    let deriv = f.derivative(field);
    if deriv.is_zero() {
        // f = g(y^p); take the p-th root coefficientwise.
        let root = pth_root(field, &f);
        return squarefree_decomposition(field, &root)
            .into_iter()
            .map(|(g, m)| (g, m * p))
            .collect();
    }
    let mut out = Vec::new();
    let mut g = f.gcd(field, &deriv);
    let mut w = f.divrem(field, &g).0;
    let mut i = 1u32;
    while w.degree() != Some(0) {
        let y = w.gcd(field, &g);
        let z = w.divrem(field, &y).0;
        if z.degree() != Some(0) {
            out.push((z, i));
        }
        i += 1;
        w = y;
        g = g.divrem(field, &w).0;
    }
    if g.degree() != Some(0) {
        let root = pth_root(field, &g);
        for (h, m) in squarefree_decomposition(field, &root) {
            out.push((h, m * p));
        }
    }
    out
}

/// p-th root of a polynomial whose derivative vanishes (all exponents divisible
/// by p); coefficients mapped through the inverse Frobenius c -> c^(p^(m-1)).
fn pth_root(field: &ExtensionField, f: &FieldPoly) -> FieldPoly {
    let p = field.p() as usize;
    let m = field.degree();
    let coeffs = f.coeffs();
    let mut out = Vec::new();
    for i in (0..coeffs.len()).step_by(p) {
        let mut c = coeffs[i].clone();
        for _ in 0..m.saturating_sub(1) {
            c = field.pow(&c, field.p() as u128);
        }
        out.push(c);
    }
    FieldPoly { coeffs: out }.trimmed(field)
}

/// Budget for exhaustive equal-degree search; larger parts fall back to a
/// deterministic Berlekamp split.
const EXHAUSTIVE_BUDGET: u128 = 2_000_000;

/// Factors a squarefree monic polynomial into distinct monic irreducibles.
fn factor_squarefree(
    field: &ExtensionField,
    poly: &FieldPoly,
) -> Result<Vec<FieldPoly>, FieldError> {
    let n = match poly.degree() {
        None | Some(0) => return Ok(vec![]),
        Some(n) => n,
    };
    let x = FieldPoly::new(field, vec![field.zero(), field.one()]);
    let frob = frobenius_powers(field, poly, n);
    let mut out = Vec::new();
    let mut rest = poly.clone();
    // Distinct-degree pass: gcd with x^(q^d) - x collects factors of degree d.
    for d in 1..=n {
        if rest.degree() == Some(0) {
            break;
        }
        if rest.degree() == Some(d) {
            out.push(rest.clone());
            rest = FieldPoly::new(field, vec![field.one()]);
            break;
        }
        if 2 * d > rest.degree().unwrap_or(0) {
            break;
        }
        let g = frob[d - 1].sub(field, &x).gcd(field, &rest);
        if g.degree() == Some(0) {
            continue;
        }
        out.extend(split_equal_degree(field, &g, d)?);
        rest = rest.divrem(field, &g).0;
    }
    if rest.degree().map(|d| d > 0).unwrap_or(false) {
        out.push(rest);
    }
    Ok(out)
}

/// Splits a product of distinct irreducibles of the same degree d.
fn split_equal_degree(
    field: &ExtensionField,
    part: &FieldPoly,
    d: usize,
) -> Result<Vec<FieldPoly>, FieldError> {
    let total = part.degree().unwrap_or(0);
    if total == d {
        return Ok(vec![part.clone()]);
    }
    if field.order().pow(d as u32) <= EXHAUSTIVE_BUDGET {
        // Exhaustive lexicographic search over monic degree-d candidates.
        let mut out = Vec::new();
        let mut rest = part.clone();
        let mut tail = vec![field.zero(); d];
        loop {
            if rest.degree() == Some(d) {
                out.push(rest);
                return Ok(out);
            }
            if rest.degree() == Some(0) {
                return Ok(out);
            }
            let mut candidate_coeffs = tail.clone();
            candidate_coeffs.push(field.one());
            let candidate = FieldPoly::new(field, candidate_coeffs);
            let (q, r) = rest.divrem(field, &candidate);
            if r.is_zero() {
                out.push(candidate);
                rest = q;
                continue;
            }
            // Advance the candidate (odometer over coefficient encodings).
            let mut pos = 0;
            loop {
                if pos == d {
                    // Search space exhausted; cannot happen for a true product
                    // of degree-d irreducibles.
                    return Err(FieldError::SplitBudget);
                }
                let code = field.encode(&tail[pos]) + 1;
                if code < field.order() {
                    let mut v = Vec::with_capacity(field.degree());
                    let mut c = code;
                    for _ in 0..field.degree() {
                        v.push((c % field.p() as u128) as u64);
                        c /= field.p() as u128;
                    }
                    tail[pos] = v;
                    break;
                }
                tail[pos] = field.zero();
                pos += 1;
            }
        }
    }
    berlekamp_split(field, part)
}

/// Deterministic Berlekamp splitting for squarefree inputs too large for
/// exhaustive search; splits recursively via gcd(v - c, f) over kernel vectors.
fn berlekamp_split(
    field: &ExtensionField,
    f: &FieldPoly,
) -> Result<Vec<FieldPoly>, FieldError> {
    let n = f.degree().unwrap_or(0);
    if n <= 1 {
        return Ok(vec![f.clone()]);
    }
    // Rows of the Frobenius matrix: (x^q)^i mod f.
    let xq = {
        let x = FieldPoly::new(field, vec![field.zero(), field.one()]);
        x.pow_mod(field, field.order(), f)
    };
    let mut rows: Vec<FieldPoly> = Vec::with_capacity(n);
    let mut cur = FieldPoly::new(field, vec![field.one()]);
    for _ in 0..n {
        rows.push(cur.clone());
        cur = cur.mul(field, &xq).rem(field, f);
    }
    // Kernel of (Q - I): v with v(x)^q = v(x) mod f.
    let mut mat: Vec<Vec<FqElem>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut e = rows[i].coeff(field, j);
                    if i == j {
                        e = field.sub(&e, &field.one());
                    }
                    e
                })
                .collect()
        })
        .collect();
    // Gauss over the columns (kernel of the transpose action on coefficient
    // vectors v: sum_i v_i row_i = v).
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut rank_col = 0;
    for col in 0..n {
        let pivot_row = (0..n).find(|&r| {
            !field.is_zero(&mat[r][col]) && pivots.iter().all(|&(pr, _)| pr != r)
        });
        let Some(pr) = pivot_row else { continue };
        let inv = field.inv(&mat[pr][col]);
        for c in 0..n {
            mat[pr][c] = field.mul(&mat[pr][c], &inv);
        }
        for r in 0..n {
            if r != pr && !field.is_zero(&mat[r][col]) {
                let factor = mat[r][col].clone();
                for c in 0..n {
                    let t = field.mul(&factor, &mat[pr][c]);
                    mat[r][c] = field.sub(&mat[r][c], &t);
                }
            }
        }
        pivots.push((pr, col));
        rank_col += 1;
    }
    let _ = rank_col;
    // Extract a kernel basis (free columns).
    let mut kernel: Vec<Vec<FqElem>> = Vec::new();
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    for free in 0..n {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![field.zero(); n];
        v[free] = field.one();
        for &(pr, pc) in &pivots {
            v[pc] = field.neg(&mat[pr][free]);
        }
        kernel.push(v);
    }
    if kernel.len() <= 1 {
        return Ok(vec![f.clone()]);
    }
    // Split with the first non-constant kernel vector; recurse.
    for v in &kernel {
        let vp = FieldPoly { coeffs: v.clone() }.trimmed(field);
        if vp.degree().map(|d| d == 0).unwrap_or(true) {
            continue;
        }
        let mut budget = 0u128;
        for c in field.elements() {
            budget += 1;
            if budget > EXHAUSTIVE_BUDGET {
                return Err(FieldError::SplitBudget);
            }
            let shifted = vp.sub(
                field,
                &FieldPoly { coeffs: vec![c.clone()] }.trimmed(field),
            );
            let g = shifted.gcd(field, f);
            let dg = g.degree().unwrap_or(0);
            if dg > 0 && dg < n {
                let rest = f.divrem(field, &g).0;
                let mut out = berlekamp_split(field, &g)?;
                out.extend(berlekamp_split(field, &rest)?);
                return Ok(out);
            }
        }
    }
    Err(FieldError::SplitBudget)
}

/// Factors a nonzero polynomial into monic irreducibles with multiplicities,
/// sorted by (degree, coefficient encodings). The product of the factors times
/// the input's leading coefficient reproduces the input.
pub fn factor(
    field: &ExtensionField,
    poly: &FieldPoly,
) -> Result<Vec<(FieldPoly, u32)>, FieldError> {
    if poly.is_zero() {
        return Err(FieldError::ZeroPolynomial);
    }
    let mut out: Vec<(FieldPoly, u32)> = Vec::new();
    for (part, mult) in squarefree_decomposition(field, poly) {
        for irr in factor_squarefree(field, &part)? {
            out.push((irr, mult));
        }
    }
    out.sort_by(|(a, _), (b, _)| a.order_key(field).cmp(&b.order_key(field)));
    Ok(out)
}

/// Number of monic irreducible degree-f polynomials over F_p (Moebius count).
pub fn npf(p: u64, f: u32) -> u128 {
    assert!(f >= 1, "degree must be positive");
    let moebius = |mut n: u32| -> i64 {
        let mut mu = 1i64;
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                n /= d;
                if n % d == 0 {
                    return 0;
                }
                mu = -mu;
            }
            d += 1;
        }
        if n > 1 {
            mu = -mu;
        }
        mu
    };
    let mut sum = 0i128;
    for d in 1..=f {
        if f % d == 0 {
            let mu = moebius(d);
            if mu != 0 {
                sum += mu as i128 * (p as i128).pow(f / d);
            }
        }
    }
    debug_assert!(sum > 0 && sum % f as i128 == 0);
    (sum / f as i128) as u128
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(p: u64) -> ExtensionField {
        ExtensionField::prime(PrimeField::new(p).unwrap())
    }

    fn poly(field: &ExtensionField, coeffs: &[i64]) -> FieldPoly {
        let coeffs: Vec<BigInt> = coeffs.iter().map(|&c| BigInt::from(c)).collect();
        FieldPoly::from_int_coeffs(field, &coeffs)
    }

    fn factored_product(field: &ExtensionField, factors: &[(FieldPoly, u32)]) -> FieldPoly {
        let mut acc = FieldPoly::new(field, vec![field.one()]);
        for (f, m) in factors {
            for _ in 0..*m {
                acc = acc.mul(field, f);
            }
        }
        acc
    }

    #[test]
    fn cubic_over_f2() {
        // y^3 + 1 = (y + 1)(y^2 + y + 1) over F_2.
        let f2 = fp(2);
        let f = poly(&f2, &[1, 0, 0, 1]);
        let fac = factor(&f2, &f).unwrap();
        assert_eq!(fac.len(), 2);
        assert_eq!(fac[0].0, poly(&f2, &[1, 1]));
        assert_eq!(fac[1].0, poly(&f2, &[1, 1, 1]));
        assert_eq!(factored_product(&f2, &fac), f);
    }

    #[test]
    fn quartic_over_f3() {
        // y^4 + 1 = (y^2 + y - 1)(y^2 - y - 1) over F_3.
        let f3 = fp(3);
        let f = poly(&f3, &[1, 0, 0, 0, 1]);
        let fac = factor(&f3, &f).unwrap();
        assert_eq!(fac.len(), 2);
        assert!(fac.iter().all(|(_, m)| *m == 1));
        assert!(fac.iter().all(|(g, _)| g.degree() == Some(2)));
        assert_eq!(factored_product(&f3, &fac), f);
        assert!(fac.contains(&(poly(&f3, &[-1, 1, 1]), 1)));
        assert!(fac.contains(&(poly(&f3, &[-1, -1, 1]), 1)));
    }

    #[test]
    fn nonic_irreducible_over_f2() {
        let f2 = fp(2);
        let f = poly(&f2, &[1, 1, 0, 0, 0, 0, 0, 0, 0, 1]);
        assert!(is_irreducible(&f2, &f));
        let fac = factor(&f2, &f).unwrap();
        assert_eq!(fac.len(), 1);
        assert_eq!(fac[0].1, 1);
    }

    #[test]
    fn repeated_factors_recovered() {
        // (y + 1)^2 over F_2 = y^2 + 1.
        let f2 = fp(2);
        let f = poly(&f2, &[1, 0, 1]);
        assert!(!is_irreducible(&f2, &f));
        let fac = factor(&f2, &f).unwrap();
        assert_eq!(fac, vec![(poly(&f2, &[1, 1]), 2)]);

        // (y + 1)^4 over F_2 exercises the derivative-vanishing path.
        let f = poly(&f2, &[1, 0, 0, 0, 1]);
        let fac = factor(&f2, &f).unwrap();
        assert_eq!(fac, vec![(poly(&f2, &[1, 1]), 4)]);

        // y^3 + 1 = (y + 1)^3 over F_3.
        let f3 = fp(3);
        let fac = factor(&f3, &poly(&f3, &[1, 0, 0, 1])).unwrap();
        assert_eq!(fac, vec![(poly(&f3, &[1, 1]), 3)]);
    }

    #[test]
    fn irreducible_over_f3() {
        let f3 = fp(3);
        assert!(is_irreducible(&f3, &poly(&f3, &[1, -1, 1, 1])));
        assert!(is_irreducible(&f3, &poly(&f3, &[1, 1, 1])) == false); // (y-1)(y+1)? y^2+y+1 = (y-1)^2 over F_3
        assert!(is_irreducible(&f3, &poly(&f3, &[1, 0, 1]))); // y^2 + 1
    }

    #[test]
    fn extension_field_arithmetic() {
        // F_4 = F_2[t]/(t^2 + t + 1).
        let base = PrimeField::new(2).unwrap();
        let f4 = ExtensionField::new(base, vec![1, 1, 1]).unwrap();
        assert_eq!(f4.order(), 4);
        let t = vec![0, 1];
        let t2 = f4.mul(&t, &t);
        assert_eq!(t2, vec![1, 1]); // t^2 = t + 1
        let inv_t = f4.inv(&t);
        assert_eq!(f4.mul(&t, &inv_t), f4.one());
        // y^2 + y + t is irreducible over F_4 iff it has no roots.
        let fpoly = FieldPoly::new(&f4, vec![t.clone(), f4.one(), f4.one()]);
        let has_root = f4.elements().any(|e| f4.is_zero(&fpoly.eval(&f4, &e)));
        assert_eq!(is_irreducible(&f4, &fpoly), !has_root);
    }

    #[test]
    fn reducible_modulus_rejected() {
        let base = PrimeField::new(2).unwrap();
        assert_eq!(
            ExtensionField::new(base, vec![1, 0, 1]).unwrap_err(),
            FieldError::ReducibleModulus
        );
    }

    #[test]
    fn npf_examples() {
        assert_eq!(npf(2, 1), 2);
        assert_eq!(npf(3, 1), 3);
        assert_eq!(npf(2, 2), 1);
        assert_eq!(npf(2, 3), 2);
        assert_eq!(npf(3, 2), 3);
        assert_eq!(npf(2, 9), 56);
    }

    #[test]
    fn npf_matches_enumeration() {
        for p in [2u64, 3, 5, 7] {
            let field = fp(p);
            for f in 1..=4u32 {
                if (p as u128).pow(f) > 100_000 {
                    continue;
                }
                let mut count = 0u128;
                // All monic degree-f polynomials, low coefficients enumerated.
                let total = (p as u128).pow(f);
                for code in 0..total {
                    let mut c = code;
                    let mut coeffs: Vec<FqElem> = Vec::new();
                    for _ in 0..f {
                        coeffs.push(field.scalar_from_bigint(&BigInt::from(c % p as u128)));
                        c /= p as u128;
                    }
                    coeffs.push(field.one());
                    let g = FieldPoly::new(&field, coeffs);
                    if is_irreducible(&field, &g) {
                        count += 1;
                    }
                }
                assert_eq!(count, npf(p, f), "p={p} f={f}");
            }
        }
    }

    #[test]
    fn npf_monotone_with_two_small_exceptions() {
        // Strictly increasing in f, except the drop at (p,f) = (2,1) and the
        // tie N_3(2) = N_3(1) = 3.
        for p in [2u64, 3, 5, 7] {
            for f in 1..=5u32 {
                let lo = npf(p, f);
                let hi = npf(p, f + 1);
                match (p, f) {
                    (2, 1) => assert!(hi < lo),
                    (3, 1) => assert_eq!(hi, lo),
                    _ => assert!(hi > lo, "p={p} f={f}"),
                }
            }
        }
    }

    #[test]
    fn frobenius_fixed_points_certify_factors() {
        // For each irreducible g of degree d over F_q: x^(q^d) = x mod g and
        // x^(q^e) != x mod g for proper divisors e of d.
        let f3 = fp(3);
        let nonic = poly(&f3, &[2, 2, 0, 0, 0, 0, 0, 0, 0, 1]);
        for (g, _) in factor(&f3, &nonic).unwrap() {
            let d = g.degree().unwrap();
            let frob = frobenius_powers(&f3, &g, d);
            let x = FieldPoly::new(&f3, vec![f3.zero(), f3.one()]);
            assert!(frob[d - 1].sub(&f3, &x).is_zero());
            for e in 1..d {
                if d % e == 0 {
                    assert!(!frob[e - 1].sub(&f3, &x).is_zero());
                }
            }
        }
    }

    #[test]
    fn berlekamp_split_path() {
        // Two distinct quartic irreducibles over F_101 force the fallback
        // (101^4 > exhaustive budget).
        let f101 = fp(101);
        let g1 = poly(&f101, &[2, 0, 0, 0, 1]); // x^4 + 2
        let g2 = poly(&f101, &[1, 1, 0, 0, 1]); // x^4 + x + 1
        assert!(is_irreducible(&f101, &g1), "x^4+2 over F_101");
        assert!(is_irreducible(&f101, &g2), "x^4+x+1 over F_101");
        let prod = g1.mul(&f101, &g2);
        let fac = factor(&f101, &prod).unwrap();
        assert_eq!(fac.len(), 2);
        assert_eq!(factored_product(&f101, &fac), prod);
    }
}
