//! phi-adic developments of integer polynomials, principal Newton polygons,
//! residual polynomials, and the lattice-point index count ind_phi.

use crate::arith::{vp, Valuation};
use crate::finfield::{ExtensionField, FieldPoly, FqElem};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Errors from polygon construction.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum PolygonError {
    #[error("phi must be monic of degree >= 1")]
    NonMonicPhi,
    #[error("phi mod {0} does not divide F: no principal part")]
    NoPrincipalPart(u64),
}

// ---------------------------------------------------------------------------
// Integer polynomials
// ---------------------------------------------------------------------------

/// Dense integer polynomial, coefficients low to high, trimmed (empty = zero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: vec![] }
    }

    pub fn constant(c: BigInt) -> Self {
        IntPoly::new(vec![c])
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        IntPoly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// x + c.
    pub fn x_plus(c: BigInt) -> Self {
        IntPoly::new(vec![c, BigInt::one()])
    }

    /// x^k.
    pub fn x_power(k: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); k + 1];
        coeffs[k] = BigInt::one();
        IntPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().map(|c| c.is_one()).unwrap_or(false)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        IntPoly::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        IntPoly::new((0..n).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn neg(&self) -> Self {
        IntPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        IntPoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Division with remainder by a monic divisor; exact over Z.
    pub fn divrem_monic(&self, divisor: &Self) -> (Self, Self) {
        assert!(divisor.is_monic(), "divisor must be monic");
        let db = divisor.degree().unwrap();
        let mut rem = self.clone();
        let mut quot = vec![BigInt::zero(); self.coeffs.len().saturating_sub(db)];
        while let Some(dr) = rem.degree() {
            if dr < db {
                break;
            }
            let c = rem.coeff(dr);
            let shift = dr - db;
            for (j, bj) in divisor.coeffs.iter().enumerate() {
                let t = &c * bj;
                let slot = rem.coeff(shift + j) - t;
                if shift + j < rem.coeffs.len() {
                    rem.coeffs[shift + j] = slot;
                }
            }
            while rem.coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
                rem.coeffs.pop();
            }
            quot[shift] = c;
        }
        (IntPoly::new(quot), rem)
    }

    pub fn eval(&self, at: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * at + c;
        }
        acc
    }

    /// Gauss valuation: min of the coefficient valuations.
    pub fn valuation(&self, p: u64) -> Valuation {
        let mut best = Valuation::Infinity;
        for c in &self.coeffs {
            if c.is_zero() {
                continue;
            }
            let v = vp(c, p).expect("p validated by caller");
            match (v, best) {
                (Valuation::Finite(x), Valuation::Finite(y)) if x < y => best = v,
                (Valuation::Finite(_), Valuation::Infinity) => best = v,
                _ => {}
            }
        }
        best
    }

    /// Exact division of every coefficient by p^k.
    pub fn divide_pow(&self, p: u64, k: u64) -> Self {
        let q = BigInt::from(p).pow(k as u32);
        IntPoly::new(
            self.coeffs
                .iter()
                .map(|c| {
                    let (d, r) = c.div_rem(&q);
                    debug_assert!(r.is_zero(), "coefficient not divisible by p^k");
                    d
                })
                .collect(),
        )
    }

    /// Residue in F_phi = F_p[x]/(phi), reducing coefficients mod p.
    pub fn residue_in(&self, field: &ExtensionField) -> FqElem {
        field.element_from_int_coeffs(&self.coeffs)
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {sign} ")?;
            }
            match i {
                0 => write!(f, "{mag}")?,
                1 if mag.is_one() => write!(f, "x")?,
                1 => write!(f, "{mag}x")?,
                _ if mag.is_one() => write!(f, "x^{i}")?,
                _ => write!(f, "{mag}x^{i}")?,
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// phi-adic development
// ---------------------------------------------------------------------------

/// Exact development F = sum a_i(x) phi(x)^i with deg a_i < deg phi.
#[derive(Clone, Debug)]
pub struct PhiExpansion {
    phi: IntPoly,
    coefficients: Vec<IntPoly>,
}

/// Develops F in powers of a monic phi by repeated Euclidean division.
pub fn phi_expand(f: &IntPoly, phi: &IntPoly) -> Result<PhiExpansion, PolygonError> {
    if !phi.is_monic() || phi.degree() == Some(0) {
        return Err(PolygonError::NonMonicPhi);
    }
    let mut coefficients = Vec::new();
    let mut cur = f.clone();
    loop {
        let (q, r) = cur.divrem_monic(phi);
        coefficients.push(r);
        if q.is_zero() {
            break;
        }
        cur = q;
    }
    Ok(PhiExpansion { phi: phi.clone(), coefficients })
}

impl PhiExpansion {
    pub fn phi(&self) -> &IntPoly {
        &self.phi
    }

    pub fn coefficients(&self) -> &[IntPoly] {
        &self.coefficients
    }

    pub fn coefficient(&self, i: usize) -> IntPoly {
        self.coefficients.get(i).cloned().unwrap_or_else(IntPoly::zero)
    }

    /// Recomputes sum a_i phi^i; equals the developed polynomial exactly.
    pub fn reassemble(&self) -> IntPoly {
        let mut acc = IntPoly::zero();
        for a in self.coefficients.iter().rev() {
            acc = acc.mul(&self.phi).add(a);
        }
        acc
    }

    /// u_i = nu_p(a_i(x)) for every coefficient.
    pub fn valuations(&self, p: u64) -> Vec<Valuation> {
        self.coefficients.iter().map(|a| a.valuation(p)).collect()
    }

    /// Residue field F_phi = F_p[x]/(phi mod p); phi mod p must be irreducible.
    pub fn residue_field(&self, p: u64) -> Result<ExtensionField, crate::finfield::FieldError> {
        let base = crate::finfield::PrimeField::new(p)?;
        let pb = BigInt::from(p);
        let modulus: Vec<u64> = self
            .phi
            .coeffs()
            .iter()
            .map(|c| {
                use num_traits::ToPrimitive;
                c.mod_floor(&pb).to_u64().expect("residue fits u64")
            })
            .collect();
        ExtensionField::new(base, modulus)
    }
}

// ---------------------------------------------------------------------------
// Principal polygon
// ---------------------------------------------------------------------------

/// One side of the principal polygon: negative slope -slope_h/slope_e in
/// lowest terms, horizontal length, height, and degree d = gcd(height, length).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Side {
    pub start: (u64, u64),
    pub end: (u64, u64),
    pub slope_h: u64,
    pub slope_e: u64,
    pub length: u64,
    pub height: u64,
    pub degree: u64,
}

impl Side {
    /// Ramification index e(S) = length / degree.
    pub fn ramification(&self) -> u64 {
        self.slope_e
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{})-({},{}) slope -{}/{} d={}",
            self.start.0, self.start.1, self.end.0, self.end.1, self.slope_h, self.slope_e, self.degree
        )
    }
}

/// The principal (negative-slope) part of the phi-adic Newton polygon.
#[derive(Clone, Debug)]
pub struct NewtonPolygon {
    points: Vec<(u64, u64)>,
    principal_sides: Vec<Side>,
    length: u64,
}

impl NewtonPolygon {
    pub fn points(&self) -> &[(u64, u64)] {
        &self.points
    }

    pub fn principal_sides(&self) -> &[Side] {
        &self.principal_sides
    }

    /// Total horizontal length; equals the multiplicity of phi mod p in F mod p.
    pub fn length(&self) -> u64 {
        self.length
    }

    /// Polygon with no finite points below the axis (used when phi divides
    /// the input exactly and nothing else remains in the branch).
    pub(crate) fn empty() -> Self {
        NewtonPolygon { points: Vec::new(), principal_sides: Vec::new(), length: 0 }
    }
}

fn cross(a: (i128, i128), b: (i128, i128), c: (i128, i128)) -> i128 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Negative-slope sides of the lower convex hull of the given finite points
/// (sorted by abscissa, distinct abscissae).
fn principal_sides_from_points(pts: &[(u64, u64)]) -> Vec<Side> {
    let mut hull: Vec<(i128, i128)> = Vec::new();
    for &(x, y) in pts {
        let p = (x as i128, y as i128);
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let mut sides = Vec::new();
    for w in hull.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if y1 >= y0 {
            continue;
        }
        let length = (x1 - x0) as u64;
        let height = (y0 - y1) as u64;
        let d = length.gcd(&height);
        sides.push(Side {
            start: (x0 as u64, y0 as u64),
            end: (x1 as u64, y1 as u64),
            slope_h: height / d,
            slope_e: length / d,
            length,
            height,
            degree: d,
        });
    }
    sides
}

/// Builds the principal polygon of the development at p. Errors when phi mod p
/// does not divide F mod p (no side of negative slope).
pub fn principal_polygon(exp: &PhiExpansion, p: u64) -> Result<NewtonPolygon, PolygonError> {
    let mut points = Vec::new();
    for (i, v) in exp.valuations(p).into_iter().enumerate() {
        if let Valuation::Finite(u) = v {
            points.push((i as u64, u));
        }
    }
    let principal_sides = principal_sides_from_points(&points);
    if principal_sides.is_empty() {
        return Err(PolygonError::NoPrincipalPart(p));
    }
    let length = principal_sides.iter().map(|s| s.length).sum();
    Ok(NewtonPolygon { points, principal_sides, length })
}

// ---------------------------------------------------------------------------
// Residual polynomials
// ---------------------------------------------------------------------------

/// A side together with its residue coefficients and residual polynomial over
/// the residue field F_phi.
#[derive(Clone, Debug)]
pub struct ResidualAttachment {
    pub side: Side,
    pub residue_coeffs: Vec<FqElem>,
    pub residual: FieldPoly,
}

/// Residue coefficients c_j = a_(s+je)(x) / p^(y_j) mod (p, phi) at the lattice
/// abscissae of the side (zero exactly at points strictly above it), assembled
/// into the residual polynomial of degree d(S).
pub fn residual_poly(
    np: &NewtonPolygon,
    side: &Side,
    exp: &PhiExpansion,
    field: &ExtensionField,
) -> ResidualAttachment {
    debug_assert!(np.principal_sides().contains(side), "side not in polygon");
    let p = field.p();
    let mut residue_coeffs = Vec::with_capacity(side.degree as usize + 1);
    for j in 0..=side.degree {
        let i = side.start.0 + j * side.slope_e;
        let y = side.start.1 - j * side.slope_h;
        let a_i = exp.coefficient(i as usize);
        let c = if a_i.is_zero() {
            field.zero()
        } else {
            a_i.divide_pow(p, y).residue_in(field)
        };
        residue_coeffs.push(c);
    }
    let residual = FieldPoly::new(field, residue_coeffs.clone());
    ResidualAttachment { side: *side, residue_coeffs, residual }
}

// ---------------------------------------------------------------------------
// ind_phi
// ---------------------------------------------------------------------------

/// deg(phi) times the number of integer lattice points with x >= 1 and y >= 1
/// lying on or below the principal polygon.
pub fn ind_phi(np: &NewtonPolygon, deg_phi: u64) -> u64 {
    let mut count = 0u64;
    for side in np.principal_sides() {
        for x in side.start.0..=side.end.0 {
            if x < 1 {
                continue;
            }
            if x == side.start.0 && side != np.principal_sides().first().unwrap() {
                // Column counted with the previous side (shared vertex).
                continue;
            }
            // floor of the side's height at abscissa x.
            let run = x - side.start.0;
            let drop = (run * side.height).div_ceil(side.length);
            let y_floor = side.start.1 - drop;
            count += y_floor;
        }
    }
    deg_phi * count
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trinomial_poly(a: i64, b: i64) -> IntPoly {
        let mut coeffs = vec![0i64; 10];
        coeffs[0] = b;
        coeffs[1] = a;
        coeffs[9] = 1;
        IntPoly::from_i64(&coeffs)
    }

    fn sextic() -> IntPoly {
        IntPoly::from_i64(&[15, 24, 0, 0, 0, 0, 1])
    }

    #[test]
    fn expand_sextic_at_x_minus_1() {
        let exp = phi_expand(&sextic(), &IntPoly::x_plus(BigInt::from(-1))).unwrap();
        let constants: Vec<BigInt> = exp
            .coefficients()
            .iter()
            .map(|a| a.coeff(0))
            .collect();
        let expected: Vec<BigInt> = [40, 30, 15, 20, 15, 6, 1]
            .iter()
            .map(|&c| BigInt::from(c))
            .collect();
        assert_eq!(constants, expected);
        assert_eq!(exp.reassemble(), sextic());
    }

    #[test]
    fn expand_sextic_at_quadratic() {
        // x^6 + 24x + 15 = phi^3 - 3x phi^2 + (2x-2) phi + 24x + 16 for
        // phi = x^2 + x + 1.
        let phi = IntPoly::from_i64(&[1, 1, 1]);
        let exp = phi_expand(&sextic(), &phi).unwrap();
        assert_eq!(exp.coefficients().len(), 4);
        assert_eq!(exp.coefficient(0), IntPoly::from_i64(&[16, 24]));
        assert_eq!(exp.coefficient(1), IntPoly::from_i64(&[-2, 2]));
        assert_eq!(exp.coefficient(2), IntPoly::from_i64(&[0, -3]));
        assert_eq!(exp.coefficient(3), IntPoly::from_i64(&[1]));
        assert_eq!(exp.reassemble(), sextic());
    }

    #[test]
    fn expand_trinomial_at_x() {
        let f = trinomial_poly(7, -5);
        let exp = phi_expand(&f, &IntPoly::x_power(1)).unwrap();
        assert_eq!(exp.coefficient(0), IntPoly::from_i64(&[-5]));
        assert_eq!(exp.coefficient(1), IntPoly::from_i64(&[7]));
        for i in 2..9 {
            assert!(exp.coefficient(i).is_zero());
        }
        assert_eq!(exp.coefficient(9), IntPoly::from_i64(&[1]));
    }

    #[test]
    fn expand_trinomial_at_x_minus_1() {
        let (a, b) = (6i64, 12i64);
        let f = trinomial_poly(a, b);
        let exp = phi_expand(&f, &IntPoly::x_plus(BigInt::from(-1))).unwrap();
        assert_eq!(exp.coefficient(0), IntPoly::from_i64(&[1 + a + b]));
        assert_eq!(exp.coefficient(1), IntPoly::from_i64(&[9 + a]));
        let binom = [36, 84, 126, 126, 84, 36, 9];
        for (k, &c) in binom.iter().enumerate() {
            assert_eq!(exp.coefficient(k + 2), IntPoly::from_i64(&[c]));
        }
        assert_eq!(exp.reassemble(), f);
    }

    #[test]
    fn non_monic_phi_rejected() {
        let f = trinomial_poly(1, 1);
        let phi = IntPoly::from_i64(&[1, 2]);
        assert_eq!(phi_expand(&f, &phi).unwrap_err(), PolygonError::NonMonicPhi);
    }

    #[test]
    fn sextic_principal_polygon_at_x_minus_1() {
        let exp = phi_expand(&sextic(), &IntPoly::x_plus(BigInt::from(-1))).unwrap();
        let np = principal_polygon(&exp, 2).unwrap();
        let sides = np.principal_sides();
        assert_eq!(sides.len(), 2);
        assert_eq!((sides[0].start, sides[0].end), ((0, 3), (1, 1)));
        assert_eq!((sides[1].start, sides[1].end), ((1, 1), (2, 0)));
        assert_eq!(sides[0].degree, 1);
        assert_eq!(sides[1].degree, 1);
        assert_eq!(np.length(), 2);
        assert_eq!(ind_phi(&np, 1), 1);

        // Both residuals are 1 + y.
        let field = exp.residue_field(2).unwrap();
        for side in sides {
            let att = residual_poly(&np, side, &exp, &field);
            assert_eq!(
                att.residual,
                FieldPoly::new(&field, vec![field.one(), field.one()])
            );
        }
    }

    #[test]
    fn sextic_principal_polygon_at_quadratic() {
        let phi = IntPoly::from_i64(&[1, 1, 1]);
        let exp = phi_expand(&sextic(), &phi).unwrap();
        let np = principal_polygon(&exp, 2).unwrap();
        let sides = np.principal_sides();
        assert_eq!(sides.len(), 2);
        assert_eq!((sides[0].start, sides[0].end), ((0, 3), (1, 1)));
        assert_eq!((sides[1].start, sides[1].end), ((1, 1), (2, 0)));
        assert_eq!(np.length(), 2);
        // One lattice point (1,1) on the polygon; deg phi = 2.
        assert_eq!(ind_phi(&np, 2), 2);

        // Residuals over F_4 = F_2[x]/(x^2+x+1): t + (t+1)y and (t+1) + ty.
        let field = exp.residue_field(2).unwrap();
        assert_eq!(field.order(), 4);
        let t = vec![0, 1];
        let t1 = vec![1, 1];
        let att0 = residual_poly(&np, &sides[0], &exp, &field);
        assert_eq!(att0.residual, FieldPoly::new(&field, vec![t.clone(), t1.clone()]));
        let att1 = residual_poly(&np, &sides[1], &exp, &field);
        assert_eq!(att1.residual, FieldPoly::new(&field, vec![t1, t]));
    }

    #[test]
    fn trinomial_two_side_polygon_at_x() {
        // nu_2(a) = 2, nu_2(b) = 3: hull of (0,3), (1,2), (9,0).
        let f = trinomial_poly(12, 8);
        let exp = phi_expand(&f, &IntPoly::x_power(1)).unwrap();
        let np = principal_polygon(&exp, 2).unwrap();
        let sides = np.principal_sides();
        assert_eq!(sides.len(), 2);
        assert_eq!((sides[0].start, sides[0].end), ((0, 3), (1, 2)));
        assert_eq!((sides[1].start, sides[1].end), ((1, 2), (9, 0)));
        assert_eq!(sides[1].degree, 2);
        assert_eq!(sides[1].ramification(), 4);
        assert_eq!(np.length(), 9);
        assert_eq!(ind_phi(&np, 1), 6);

        // Residual on the long side: y^2 + 1 (lattice point at x=5 is above).
        let field = exp.residue_field(2).unwrap();
        let att = residual_poly(&np, &sides[1], &exp, &field);
        assert_eq!(att.residue_coeffs[1], field.zero());
        assert_eq!(
            att.residual,
            FieldPoly::new(&field, vec![field.one(), field.zero(), field.one()])
        );
    }

    #[test]
    fn trinomial_single_side_polygon() {
        // nu_2(b) = 1 and 9 nu_2(a) > 8 nu_2(b): single side (0,1)-(9,0).
        let f = trinomial_poly(16, 2);
        let exp = phi_expand(&f, &IntPoly::x_power(1)).unwrap();
        let np = principal_polygon(&exp, 2).unwrap();
        let sides = np.principal_sides();
        assert_eq!(sides.len(), 1);
        assert_eq!((sides[0].start, sides[0].end), ((0, 1), (9, 0)));
        assert_eq!(sides[0].degree, 1);
        assert_eq!(ind_phi(&np, 1), 0);
    }

    #[test]
    fn degree_two_side_with_unit_residual() {
        // a = 3, b = 8 and phi = x + 1: one side (0,2)-(8,0) of degree 2 with
        // residual y^2 + y + 1.
        let f = trinomial_poly(3, 8);
        let exp = phi_expand(&f, &IntPoly::x_plus(BigInt::one())).unwrap();
        let np = principal_polygon(&exp, 2).unwrap();
        let sides = np.principal_sides();
        assert_eq!(sides.len(), 1);
        assert_eq!((sides[0].start, sides[0].end), ((0, 2), (8, 0)));
        assert_eq!(sides[0].degree, 2);
        assert_eq!(sides[0].ramification(), 4);
        assert_eq!(np.length(), 8);
        let field = exp.residue_field(2).unwrap();
        let att = residual_poly(&np, &sides[0], &exp, &field);
        let one = field.one();
        assert_eq!(
            att.residual,
            FieldPoly::new(&field, vec![one.clone(), one.clone(), one])
        );
        assert!(crate::finfield::is_irreducible(&field, &att.residual));
    }

    #[test]
    fn no_principal_part_when_phi_coprime_to_f() {
        // a = 1, b = 1: F mod 2 has no root at 0, so phi = x gives u_0 = 0.
        let f = trinomial_poly(1, 1);
        let exp = phi_expand(&f, &IntPoly::x_power(1)).unwrap();
        assert_eq!(
            principal_polygon(&exp, 2).unwrap_err(),
            PolygonError::NoPrincipalPart(2)
        );
    }

    #[test]
    fn length_matches_factor_multiplicity() {
        // Multiplicity of (x+1) in x^9 + ax + b mod 2 for odd a, even b is 8.
        let f = trinomial_poly(3, 8);
        let exp = phi_expand(&f, &IntPoly::x_plus(BigInt::one())).unwrap();
        let np = principal_polygon(&exp, 2).unwrap();
        let field = exp.residue_field(2).unwrap();
        let fbar = FieldPoly::from_int_coeffs(&field, f.coeffs());
        // Divide out (x+1) repeatedly over F_2.
        let phibar = FieldPoly::new(&field, vec![field.one(), field.one()]);
        let mut mult = 0;
        let mut cur = fbar;
        loop {
            let (q, r) = cur.divrem(&field, &phibar);
            if !r.is_zero() {
                break;
            }
            mult += 1;
            cur = q;
        }
        assert_eq!(np.length(), mult);
    }

    #[test]
    fn ind_with_no_interior_points_is_zero() {
        let sides = principal_sides_from_points(&[(0, 1), (9, 0)]);
        let np = NewtonPolygon { points: vec![(0, 1), (9, 0)], principal_sides: sides, length: 9 };
        assert_eq!(ind_phi(&np, 1), 0);
    }

    /// O(n^3) hull oracle: a pair of points is a maximal negative side iff all
    /// points lie on or above its line and the pair is extreme among the
    /// points exactly on the line.
    fn brute_principal_sides(pts: &[(u64, u64)]) -> Vec<((u64, u64), (u64, u64))> {
        let mut out = Vec::new();
        for &p in pts {
            for &q in pts {
                if p.0 >= q.0 || q.1 >= p.1 {
                    continue;
                }
                let line = |r: (u64, u64)| -> i128 {
                    // >0 above, 0 on, <0 below the line through p, q.
                    let (px, py) = (p.0 as i128, p.1 as i128);
                    let (qx, qy) = (q.0 as i128, q.1 as i128);
                    let (rx, ry) = (r.0 as i128, r.1 as i128);
                    (qx - px) * (ry - py) - (qy - py) * (rx - px)
                };
                if pts.iter().any(|&r| line(r) < 0) {
                    continue;
                }
                let on: Vec<(u64, u64)> = pts.iter().copied().filter(|&r| line(r) == 0).collect();
                let leftmost = on.iter().min_by_key(|r| r.0).unwrap();
                let rightmost = on.iter().max_by_key(|r| r.0).unwrap();
                if *leftmost == p && *rightmost == q {
                    out.push((p, q));
                }
            }
        }
        out.sort();
        out
    }

    /// Lattice count oracle: test every candidate point against the side
    /// segments with integer cross products (no floor arithmetic).
    fn brute_lattice_count(sides: &[Side]) -> u64 {
        let mut count = 0;
        let max_y = sides.iter().map(|s| s.start.1).max().unwrap_or(0);
        for side in sides {
            let x_lo = side.start.0.max(1);
            for x in x_lo..=side.end.0 {
                if x == side.start.0 && side != &sides[0] {
                    continue;
                }
                for y in 1..=max_y {
                    let c = cross(
                        (side.start.0 as i128, side.start.1 as i128),
                        (side.end.0 as i128, side.end.1 as i128),
                        (x as i128, y as i128),
                    );
                    // On or below the segment's line.
                    if c <= 0 {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn hull_matches_brute_force(
            profile in proptest::collection::btree_map(0u64..12, 0u64..12, 2..10)
        ) {
            let pts: Vec<(u64, u64)> = profile.into_iter().collect();
            let sides = principal_sides_from_points(&pts);
            let got: Vec<_> = sides.iter().map(|s| (s.start, s.end)).collect();
            let want = brute_principal_sides(&pts);
            prop_assert_eq!(got, want);
            // Slopes strictly increase along the principal part.
            for w in sides.windows(2) {
                let s0 = -(w[0].slope_h as f64) / w[0].slope_e as f64;
                let s1 = -(w[1].slope_h as f64) / w[1].slope_e as f64;
                prop_assert!(s0 < s1);
            }
            if !sides.is_empty() {
                let np = NewtonPolygon {
                    points: pts.clone(),
                    principal_sides: sides.clone(),
                    length: sides.iter().map(|s| s.length).sum(),
                };
                prop_assert_eq!(ind_phi(&np, 1), brute_lattice_count(&sides));
            }
        }

        #[test]
        fn expansion_reassembles_exactly(
            coeffs in proptest::collection::vec(-100i64..100, 2..12),
            phi_c in -20i64..20,
            monic_tail in 1usize..3,
        ) {
            let mut f = IntPoly::from_i64(&coeffs);
            if f.is_zero() {
                f = IntPoly::from_i64(&[1, 1]);
            }
            let phi = if monic_tail == 1 {
                IntPoly::x_plus(BigInt::from(phi_c))
            } else {
                IntPoly::new(vec![BigInt::from(phi_c), BigInt::from(phi_c % 5), BigInt::from(1)])
            };
            let exp = phi_expand(&f, &phi).unwrap();
            prop_assert_eq!(exp.reassemble(), f);
            for a in exp.coefficients() {
                prop_assert!(a.degree().unwrap_or(0) < phi.degree().unwrap());
            }
        }
    }
}
