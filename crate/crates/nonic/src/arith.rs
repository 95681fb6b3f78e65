//! Exact integer services: p-adic valuations, p-free parts, the trinomial
//! discriminant, valuation normalization, and best-effort irreducibility
//! witnessing.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::fmt;

/// p-adic valuation of an integer; `Infinity` is reserved for the input 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(u64),
    Infinity,
}

impl Valuation {
    /// Finite value, or panics; callers use this only after excluding 0.
    pub fn finite(self) -> u64 {
        match self {
            Valuation::Finite(v) => v,
            Valuation::Infinity => panic!("valuation of zero has no finite value"),
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinity)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinity => write!(f, "inf"),
        }
    }
}

/// Errors from the arithmetic layer.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ArithError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("argument must be nonzero")]
    ZeroArgument,
    #[error("trinomial requires a != 0 and b != 0")]
    DegenerateTrinomial,
}

/// The trinomial x^9 + ax + b with `ab != 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trinomial {
    a: BigInt,
    b: BigInt,
}

impl Trinomial {
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>) -> Result<Self, ArithError> {
        let (a, b) = (a.into(), b.into());
        if a.is_zero() || b.is_zero() {
            return Err(ArithError::DegenerateTrinomial);
        }
        Ok(Trinomial { a, b })
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    /// Dense coefficient vector of x^9 + ax + b, low to high degree.
    pub fn coefficients(&self) -> Vec<BigInt> {
        let mut c = vec![BigInt::zero(); 10];
        c[0] = self.b.clone();
        c[1] = self.a.clone();
        c[9] = BigInt::one();
        c
    }
}

impl fmt::Display for Trinomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x^9 + ({})x + ({})", self.a, self.b)
    }
}

/// Deterministic primality for the small moduli used here (p <= ~10^6).
pub fn is_small_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p % 2 == 0 {
        return p == 2;
    }
    let mut d = 3;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Largest k with p^k | m; `Infinity` exactly when m = 0.
pub fn vp(m: &BigInt, p: u64) -> Result<Valuation, ArithError> {
    if !is_small_prime(p) {
        return Err(ArithError::NotPrime(p));
    }
    if m.is_zero() {
        return Ok(Valuation::Infinity);
    }
    let p = BigInt::from(p);
    let mut k = 0u64;
    let mut rest = m.clone();
    loop {
        let (q, r) = rest.div_rem(&p);
        if !r.is_zero() {
            return Ok(Valuation::Finite(k));
        }
        rest = q;
        k += 1;
    }
}

/// m / p^{vp(m)}; sign preserved, result coprime to p.
pub fn p_free_part(m: &BigInt, p: u64) -> Result<BigInt, ArithError> {
    if !is_small_prime(p) {
        return Err(ArithError::NotPrime(p));
    }
    if m.is_zero() {
        return Err(ArithError::ZeroArgument);
    }
    let p = BigInt::from(p);
    let mut rest = m.clone();
    loop {
        let (q, r) = rest.div_rem(&p);
        if !r.is_zero() {
            return Ok(rest);
        }
        rest = q;
    }
}

/// Discriminant of x^9 + ax + b up to sign: 3^18 b^8 + 2^24 a^9.
pub fn discriminant(t: &Trinomial) -> BigInt {
    let three18 = BigInt::from(3u64).pow(18);
    let two24 = BigInt::from(2u64).pow(24);
    three18 * t.b().pow(8) + two24 * t.a().pow(9)
}

/// Rescales (a, b) -> (a / p^{8q}, b / p^{9q}) with
/// q = min(floor(vp(a)/8), floor(vp(b)/9)) while vp(a) >= 8 and vp(b) >= 9.
///
/// This is the substitution theta -> theta / p^q, which fixes the generated
/// field; afterwards vp(a) < 8 or vp(b) < 9.
pub fn normalize(t: &Trinomial, p: u64) -> Result<Trinomial, ArithError> {
    if !is_small_prime(p) {
        return Err(ArithError::NotPrime(p));
    }
    let mut cur = t.clone();
    loop {
        let va = vp(cur.a(), p)?.finite();
        let vb = vp(cur.b(), p)?.finite();
        if va < 8 || vb < 9 {
            return Ok(cur);
        }
        let q = (va / 8).min(vb / 9);
        let pa = BigInt::from(p).pow((8 * q) as u32);
        let pb = BigInt::from(p).pow((9 * q) as u32);
        cur = Trinomial::new(cur.a() / pa, cur.b() / pb)?;
    }
}

/// How irreducibility over Q was witnessed, if at all.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "status", content = "prime")]
pub enum IrreducibilityWitness {
    /// F mod p is irreducible over F_p.
    Proven(u64),
    /// p | a, p | b, p^2 does not divide b.
    ProvenEisenstein(u64),
    /// The x-adic polygon at p is one side of slope -h/9 with gcd(h, 9) = 1.
    ProvenDumas(u64),
    /// No witness found among primes <= 200; the input may still be irreducible.
    Unverified,
}

impl IrreducibilityWitness {
    pub fn is_proven(self) -> bool {
        !matches!(self, IrreducibilityWitness::Unverified)
    }
}

impl fmt::Display for IrreducibilityWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrreducibilityWitness::Proven(p) => write!(f, "irreducible mod {p}"),
            IrreducibilityWitness::ProvenEisenstein(p) => write!(f, "Eisenstein at {p}"),
            IrreducibilityWitness::ProvenDumas(p) => write!(f, "one-sided polygon at {p}"),
            IrreducibilityWitness::Unverified => write!(f, "unverified"),
        }
    }
}

fn small_primes_up_to(n: u64) -> impl Iterator<Item = u64> {
    (2..=n).filter(|&p| is_small_prime(p))
}

/// Best-effort irreducibility witness; never reports a false proof.
///
/// Tried in order: Eisenstein (largest witnessing prime <= 200), the
/// one-sided-polygon criterion (smallest prime), then irreducibility of
/// F mod p for primes p <= 200.
pub fn irreducibility_witness(t: &Trinomial) -> IrreducibilityWitness {
    let vals = |p: u64| {
        let va = vp(t.a(), p).expect("prime checked");
        let vb = vp(t.b(), p).expect("prime checked");
        match (va, vb) {
            (Valuation::Finite(va), Valuation::Finite(vb)) => (va, vb),
            _ => unreachable!("trinomial coefficients are nonzero"),
        }
    };
    let primes: Vec<u64> = small_primes_up_to(200).collect();
    for &p in primes.iter().rev() {
        let (va, vb) = vals(p);
        if va >= 1 && vb == 1 {
            return IrreducibilityWitness::ProvenEisenstein(p);
        }
    }
    for &p in &primes {
        let (va, vb) = vals(p);
        // Single side from (0, vb) to (9, 0) needs (1, va) on or above it and
        // gcd(vb, 9) = 1.
        if vb >= 1 && vb % 3 != 0 && 9 * va >= 8 * vb {
            return IrreducibilityWitness::ProvenDumas(p);
        }
    }
    for p in small_primes_up_to(200) {
        let fp = crate::finfield::PrimeField::new(p).expect("prime checked");
        let field = crate::finfield::ExtensionField::prime(fp);
        let coeffs: Vec<_> = t
            .coefficients()
            .iter()
            .map(|c| field.scalar_from_bigint(c))
            .collect();
        let poly = crate::finfield::FieldPoly::new(&field, coeffs);
        if crate::finfield::is_irreducible(&field, &poly) {
            return IrreducibilityWitness::Proven(p);
        }
    }
    IrreducibilityWitness::Unverified
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(a: i64, b: i64) -> Trinomial {
        Trinomial::new(a, b).unwrap()
    }

    #[test]
    fn vp_basics() {
        assert_eq!(vp(&BigInt::from(352), 2).unwrap(), Valuation::Finite(5));
        assert_eq!(vp(&BigInt::from(34), 2).unwrap(), Valuation::Finite(1));
        assert_eq!(vp(&BigInt::from(0), 3).unwrap(), Valuation::Infinity);
        assert_eq!(vp(&BigInt::from(-18), 3).unwrap(), Valuation::Finite(2));
        assert_eq!(vp(&BigInt::from(5), 4), Err(ArithError::NotPrime(4)));
    }

    #[test]
    fn p_free_part_basics() {
        assert_eq!(p_free_part(&BigInt::from(352), 2).unwrap(), BigInt::from(11));
        assert_eq!(p_free_part(&BigInt::from(-18), 3).unwrap(), BigInt::from(-2));
        assert_eq!(p_free_part(&BigInt::from(7), 2).unwrap(), BigInt::from(7));
        assert_eq!(p_free_part(&BigInt::zero(), 2), Err(ArithError::ZeroArgument));
    }

    #[test]
    fn vp_product_rule() {
        let samples = [2i64, 3, 12, -98, 135, 1024, -59049];
        for &m in &samples {
            for &n in &samples {
                for p in [2u64, 3, 5, 7] {
                    let vm = vp(&BigInt::from(m), p).unwrap().finite();
                    let vn = vp(&BigInt::from(n), p).unwrap().finite();
                    let vmn = vp(&BigInt::from(m * n), p).unwrap().finite();
                    assert_eq!(vmn, vm + vn);
                }
            }
        }
    }

    #[test]
    fn reconstruction_from_valuation_and_free_part() {
        for m in [352i64, -18, 7, 59049, -1024, 42] {
            for p in [2u64, 3, 5, 7] {
                let m = BigInt::from(m);
                let k = vp(&m, p).unwrap().finite();
                let u = p_free_part(&m, p).unwrap();
                assert_eq!(m, BigInt::from(p).pow(k as u32) * &u);
                assert_ne!(vp(&u, p).unwrap(), Valuation::Infinity);
                assert_eq!(vp(&u, p).unwrap(), Valuation::Finite(0));
            }
        }
    }

    #[test]
    fn discriminant_values() {
        // Degenerate (a, b) pairs are fine for the pure formula, so build the
        // operands directly.
        let d = |a: i64, b: i64| {
            let three18 = BigInt::from(3u64).pow(18);
            let two24 = BigInt::from(2u64).pow(24);
            three18 * BigInt::from(b).pow(8) + two24 * BigInt::from(a).pow(9)
        };
        assert_eq!(d(0, 1), BigInt::from(387420489u64));
        assert_eq!(d(1, 0), BigInt::from(16777216u64));
        assert_eq!(d(1, 1), BigInt::from(404197705u64));
        assert_eq!(discriminant(&tri(1, 1)), BigInt::from(404197705u64));
    }

    #[test]
    fn normalize_rescales_leading_valuations() {
        let t = Trinomial::new(BigInt::from(2i64.pow(8) * 3), BigInt::from(2i64.pow(9))).unwrap();
        let n = normalize(&t, 2).unwrap();
        assert_eq!((n.a(), n.b()), (&BigInt::from(3), &BigInt::from(1)));

        let t = tri(17, 34);
        assert_eq!(normalize(&t, 2).unwrap(), t);

        let t = Trinomial::new(BigInt::from(3i64.pow(8) * 2), BigInt::from(3i64.pow(10))).unwrap();
        let n = normalize(&t, 3).unwrap();
        assert_eq!((n.a(), n.b()), (&BigInt::from(2), &BigInt::from(3)));
    }

    #[test]
    fn normalize_idempotent_and_satisfies_bound() {
        let samples = [
            (2i64.pow(8) * 5, 2i64.pow(9) * 7),
            (2i64.pow(10), 2i64.pow(11)),
            (3, 4),
            (3i64.pow(9), 3i64.pow(9)),
        ];
        for (a, b) in samples {
            for p in [2u64, 3] {
                let t = tri(a, b);
                let n = normalize(&t, p).unwrap();
                assert_eq!(normalize(&n, p).unwrap(), n);
                let va = vp(n.a(), p).unwrap().finite();
                let vb = vp(n.b(), p).unwrap().finite();
                assert!(va < 8 || vb < 9, "({a},{b}) at {p}: va={va} vb={vb}");
            }
        }
    }

    #[test]
    fn witness_examples() {
        assert_eq!(
            irreducibility_witness(&tri(289, 34)),
            IrreducibilityWitness::ProvenEisenstein(17)
        );
        assert_eq!(
            irreducibility_witness(&tri(5, 5)),
            IrreducibilityWitness::ProvenEisenstein(5)
        );
        assert_eq!(
            irreducibility_witness(&tri(28 * 33, 352 * 3)),
            IrreducibilityWitness::ProvenEisenstein(11)
        );
    }

    #[test]
    fn witness_mod_p_route() {
        // a = b = 1: no Eisenstein prime, but x^9 + x + 1 is irreducible mod 2.
        assert_eq!(irreducibility_witness(&tri(1, 1)), IrreducibilityWitness::Proven(2));
    }

    #[test]
    fn witness_one_sided_polygon_route() {
        // x^9 + 4x + 4 at p = 2: single side of slope -2/9, gcd(2, 9) = 1,
        // and not Eisenstein anywhere (4 | b kills p = 2, gcd(a, b) = 4).
        assert_eq!(irreducibility_witness(&tri(4, 4)), IrreducibilityWitness::ProvenDumas(2));
    }
}
