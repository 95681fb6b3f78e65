//! Second-order machinery for the wild branches the first-order analysis
//! leaves open.
//!
//! A branch arrives as an [`Order2Seed`]: a first-order lift phi whose
//! polygon produced a side of slope -h/e carrying a repeated residual root.
//! The resolver tracks the branch with an inductive valuation chain:
//! committed levels (phi_k, gamma_k) defining a rational-valued valuation,
//! plus a working key polynomial. Each stage develops F in the key, builds
//! the polygon of coefficient values, reads twisted residual polynomials over
//! the accumulated residue field, and either certifies primes (separable
//! residual factors), sharpens the key in place (repeated linear factor whose
//! slope stays in the value group), or commits a new level and grows the key
//! (slope leaves the group, or the repeated factor is a higher-degree
//! irreducible, which also extends the residue field).

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use thiserror::Error;

use crate::arith::{vp, Valuation};
use crate::finfield::{factor, ExtensionField, FieldError, FieldPoly, FqElem, PrimeField};
use crate::ore::{AmbiguousBlock, Analysis, FactorTask, Order2Seed, TaskStatus};
use crate::polygon::{
    phi_expand, principal_polygon, residual_poly, IntPoly, PhiExpansion, PolygonError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Order2Error {
    #[error("unresolved case: {0}")]
    UnresolvedCase(String),
    #[error("no beta with nu_{p}(beta) = {h} and nu_{p}(beta^{power} + a) >= {target}")]
    NoBeta { p: u64, h: u64, power: u32, target: u64 },
    #[error("invalid second-order type: {0}")]
    InvalidType(String),
    #[error("zero polynomial has no valuation")]
    ZeroPolynomial,
    #[error(transparent)]
    Polygon(#[from] PolygonError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

// ---------------------------------------------------------------------------
// Exact rational slopes
// ---------------------------------------------------------------------------

/// Rational number with reduced positive denominator; total order via i128
/// cross multiplication (magnitudes stay far below overflow here).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frac {
    num: i64,
    den: i64,
}

impl Frac {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let (mut n, mut d) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = gcd_u64(n.unsigned_abs(), d.unsigned_abs()) as i64;
        if g > 1 {
            n /= g;
            d /= g;
        }
        Frac { num: n, den: d }
    }

    pub fn int(n: i64) -> Self {
        Frac { num: n, den: 1 }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn add(self, other: Frac) -> Frac {
        Frac::new(self.num * other.den + other.num * self.den, self.den * other.den)
    }

    pub fn sub(self, other: Frac) -> Frac {
        Frac::new(self.num * other.den - other.num * self.den, self.den * other.den)
    }

    pub fn mul_int(self, k: i64) -> Frac {
        Frac::new(self.num * k, self.den)
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    /// Largest integer <= self.
    pub fn floor(&self) -> i64 {
        self.num.div_euclid(self.den)
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let lhs = self.num as i128 * other.den as i128;
        let rhs = other.num as i128 * self.den as i128;
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(w, "{}", self.num)
        } else {
            write!(w, "{}/{}", self.num, self.den)
        }
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd_u64(b, a % b)
    }
}

// ---------------------------------------------------------------------------
// Inductive valuation chains
// ---------------------------------------------------------------------------

/// One committed level: key polynomial phi with value gamma, the residual
/// root that selected this branch, and the exponent vector over
/// (p, phi_1, .., phi_k) of the value-0 monomial phi_k^estep / canonical
/// whose residue equals `root`.
#[derive(Debug, Clone)]
struct Level {
    phi: IntPoly,
    gamma: Frac,
    /// Index of gamma over the previous value group.
    estep: u64,
    root: FqElem,
    relation: Vec<i64>,
}

/// Committed chain: the residue field accumulated so far and the running
/// ramification and residue-degree totals.
#[derive(Debug, Clone)]
struct Chain {
    p: u64,
    field: ExtensionField,
    levels: Vec<Level>,
    /// Product of level indices: denominator of the value group.
    ram: u64,
    /// Product of residue-degree jumps.
    res_deg: u64,
    /// Level (1-based) whose root generates the field extension, if the
    /// extension came from a level rather than from phi_1 itself.
    gen_level: Option<usize>,
}

impl Chain {
    /// Denominator of the value group generated by levels 1..=upto.
    fn group_den(&self, upto: usize) -> i64 {
        self.levels[..upto].iter().map(|l| l.estep as i64).product()
    }

    /// Valuation of `poly` under the chain truncated to `upto` levels;
    /// None encodes the zero polynomial.
    fn val(&self, poly: &IntPoly, upto: usize) -> Result<Option<Frac>, Order2Error> {
        if poly.is_zero() {
            return Ok(None);
        }
        if upto == 0 {
            return Ok(match poly.valuation(self.p) {
                Valuation::Finite(v) => Some(Frac::int(v as i64)),
                Valuation::Infinity => None,
            });
        }
        let lv = &self.levels[upto - 1];
        let exp = phi_expand(poly, &lv.phi)?;
        let mut best: Option<Frac> = None;
        for (i, a) in exp.coefficients().iter().enumerate() {
            if let Some(v) = self.val(a, upto - 1)? {
                let t = v.add(lv.gamma.mul_int(i as i64));
                best = Some(match best {
                    Some(b) if b <= t => b,
                    _ => t,
                });
            }
        }
        Ok(best)
    }

    /// Exponents (t, s_1..s_upto) with 0 <= s_k < estep_k representing v as
    /// t + Sigma s_k gamma_k; t may be negative. None when v lies outside
    /// the value group.
    fn canonical(&self, v: Frac, upto: usize) -> Option<Vec<i64>> {
        let mut s = vec![0i64; upto + 1];
        let mut rest = v;
        for k in (1..=upto).rev() {
            let lv = &self.levels[k - 1];
            let e = lv.estep as i64;
            let full = self.group_den(k);
            let scaled = rest.mul_int(full);
            if !scaled.is_integer() {
                return None;
            }
            let mut sk = 0i64;
            if e > 1 {
                let g = lv.gamma.mul_int(full).num();
                let inv = mod_inverse(g.rem_euclid(e), e)?;
                sk = (scaled.num().rem_euclid(e) * inv).rem_euclid(e);
            }
            s[k] = sk;
            rest = rest.sub(lv.gamma.mul_int(sk));
        }
        if !rest.is_integer() {
            return None;
        }
        s[0] = rest.num();
        Some(s)
    }

    /// Residue of the value-0 monomial p^e0 phi_1^e1 .. phi_m^em, rewritten
    /// through the level relations as a product of powers of level roots.
    fn monomial_residue(&self, expo: &[i64]) -> Result<FqElem, Order2Error> {
        let m = self.levels.len();
        let mut e = vec![0i64; m + 1];
        e[..expo.len()].copy_from_slice(expo);
        let mut acc = self.field.one();
        for k in (1..=m).rev() {
            let lv = &self.levels[k - 1];
            let step = lv.estep as i64;
            if e[k] % step != 0 {
                return Err(Order2Error::UnresolvedCase(format!(
                    "monomial exponent {} not divisible by the level-{k} index {step}",
                    e[k]
                )));
            }
            let n = e[k] / step;
            if n != 0 {
                let base = if n > 0 { lv.root.clone() } else { self.field.inv(&lv.root) };
                acc = self.field.mul(&acc, &self.field.pow(&base, n.unsigned_abs() as u128));
                for (j, r) in lv.relation.iter().enumerate() {
                    e[j] -= n * r;
                }
            }
        }
        if e.iter().any(|&x| x != 0) {
            return Err(Order2Error::UnresolvedCase(
                "monomial does not decompose over the level relations".to_string(),
            ));
        }
        Ok(acc)
    }

    /// Normalized residue of a nonzero polynomial of degree below the next
    /// key: the image of poly divided by the canonical monomial of its value.
    fn residue(&self, poly: &IntPoly, upto: usize) -> Result<FqElem, Order2Error> {
        let v = self.val(poly, upto)?.ok_or(Order2Error::ZeroPolynomial)?;
        if upto == 0 {
            let unit = poly.divide_pow(self.p, v.num() as u64);
            return Ok(unit.residue_in(&self.field));
        }
        let lv = &self.levels[upto - 1];
        let exp = phi_expand(poly, &lv.phi)?;
        let canon_v = self.canonical(v, upto).ok_or_else(|| {
            Order2Error::UnresolvedCase(format!("value {v} outside the level-{upto} group"))
        })?;
        let mut acc = self.field.zero();
        for (i, a) in exp.coefficients().iter().enumerate() {
            let vi = match self.val(a, upto - 1)? {
                Some(x) => x,
                None => continue,
            };
            if vi.add(lv.gamma.mul_int(i as i64)) != v {
                continue;
            }
            let u = self.residue(a, upto - 1)?;
            let canon_i = self.canonical(vi, upto - 1).ok_or_else(|| {
                Order2Error::UnresolvedCase(format!("value {vi} outside the group"))
            })?;
            // Exponents of a_i phi^i relative to the canonical monomial of v.
            let mut diff = vec![0i64; upto + 1];
            diff[..canon_i.len()].copy_from_slice(&canon_i);
            diff[upto] += i as i64;
            for (d, c) in diff.iter_mut().zip(canon_v.iter()) {
                *d -= c;
            }
            let tw = self.monomial_residue(&diff)?;
            acc = self.field.add(&acc, &self.field.mul(&u, &tw));
        }
        Ok(acc)
    }

    /// Integer polynomial p^e0 phi_1^e1 .. phi_m^em; None on any negative
    /// exponent (no polynomial representative).
    fn monomial_lift(&self, expo: &[i64]) -> Option<IntPoly> {
        if expo.iter().any(|&x| x < 0) {
            return None;
        }
        let mut out = IntPoly::constant(BigInt::from(self.p).pow(expo[0] as u32));
        for (k, &s) in expo.iter().enumerate().skip(1) {
            for _ in 0..s {
                out = out.mul(&self.levels[k - 1].phi);
            }
        }
        Some(out)
    }

    /// Integer polynomial of value v whose normalized residue is rho.
    fn residue_lift(&self, rho: &FqElem, v: Frac, upto: usize) -> Option<IntPoly> {
        let canon = self.canonical(v, upto)?;
        match self.gen_level {
            None => {
                // Residue field is the prime field or F_p[x]/(phi_1): rho is
                // a polynomial of degree < deg phi_1 in the class of x.
                let base = IntPoly::new(rho.iter().map(|&c| BigInt::from(c)).collect());
                let mono = self.monomial_lift(&canon)?;
                Some(base.mul(&mono))
            }
            Some(g) => {
                // rho = Sigma rho_c gen^c with gen the root of level g; lift
                // term by term through the level-g relation.
                let rel = self.levels[g - 1].relation.clone();
                let mut acc = IntPoly::zero();
                for (c, &coef) in rho.iter().enumerate() {
                    if coef == 0 {
                        continue;
                    }
                    let mut expo = vec![0i64; self.levels.len() + 1];
                    expo[..canon.len()].copy_from_slice(&canon);
                    for (j, &r) in rel.iter().enumerate() {
                        expo[j] += c as i64 * r;
                    }
                    let mono = self.monomial_lift(&expo)?;
                    acc = acc.add(&mono.scale(&BigInt::from(coef)));
                }
                Some(acc)
            }
        }
    }
}

fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    let (mut t, mut newt) = (0i64, 1i64);
    let (mut r, mut newr) = (m, a.rem_euclid(m));
    while newr != 0 {
        let q = r / newr;
        (t, newt) = (newt, t - q * newt);
        (r, newr) = (newr, r - q * newr);
    }
    if r != 1 {
        None
    } else {
        Some(t.rem_euclid(m))
    }
}

// ---------------------------------------------------------------------------
// Stage polygons
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct HullSide {
    left: (u64, Frac),
    right: (u64, Frac),
    /// Magnitude of the falling slope.
    slope: Frac,
    length: u64,
}

/// Lower convex hull of points with ascending distinct abscissae; returns
/// the strictly falling sides, steepest first.
fn falling_sides(points: &[(u64, Frac)]) -> Vec<HullSide> {
    let mut den: i64 = 1;
    for (_, v) in points {
        den = den / gcd_u64(den.unsigned_abs(), v.den().unsigned_abs()) as i64 * v.den();
    }
    let pts: Vec<(i128, i128)> = points
        .iter()
        .map(|&(x, v)| (x as i128, v.num() as i128 * (den / v.den()) as i128))
        .collect();
    let mut hull: Vec<(i128, i128)> = Vec::new();
    for &q in &pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Pop b unless a -> b -> q turns strictly left.
            if (b.0 - a.0) * (q.1 - a.1) - (b.1 - a.1) * (q.0 - a.0) <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(q);
    }
    let mut out = Vec::new();
    for w in hull.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if y1 >= y0 {
            continue;
        }
        out.push(HullSide {
            left: (x0 as u64, Frac::new(y0 as i64, den)),
            right: (x1 as u64, Frac::new(y1 as i64, den)),
            slope: Frac::new((y0 - y1) as i64, ((x1 - x0) as i64) * den),
            length: (x1 - x0) as u64,
        });
    }
    out
}

/// Minimal n >= 1 with n * sigma in (1/group_den) Z.
fn side_estep(sigma: Frac, group_den: i64) -> u64 {
    let t = sigma.den();
    let g = gcd_u64(t.unsigned_abs(), group_den.unsigned_abs()) as i64;
    (t / g) as u64
}

// ---------------------------------------------------------------------------
// Branch resolution
// ---------------------------------------------------------------------------

/// Tuning knobs for [`resolve_seed`].
#[derive(Debug, Clone)]
pub struct ResolveOptions {
    /// Stop at the documented ambiguity of the deepest dyadic family and
    /// report its three-way block instead of refining further.
    pub block_policy: bool,
    /// Total stage budget across refinements and growths.
    pub max_stages: u32,
}

impl Default for ResolveOptions {
    fn default() -> Self {
        ResolveOptions { block_policy: false, max_stages: 240 }
    }
}

/// Outcome of resolving one seed.
#[derive(Debug, Clone)]
pub struct Resolution {
    pub parts: Vec<(u64, u64)>,
    pub blocks: Vec<AmbiguousBlock>,
    /// Lattice count of the stage polygons (second-order index terms).
    pub ind: u64,
    /// False when the block policy kept a residual unexamined, leaving ind
    /// a lower bound.
    pub ind_exact: bool,
    pub trace: Vec<String>,
}

struct StageTask {
    key: IntPoly,
    /// Value of the key under the committed chain; the branch lives strictly
    /// above it.
    floor: Frac,
    /// Abscissa mass the branch occupies in this stage's polygon.
    budget: u64,
    chain: Chain,
}

/// Resolves one wild branch to its (e, f) parts. The seed's side data commit
/// level 1; the initial key is phi^e - root * p^h, refined and grown as the
/// residuals dictate.
pub fn resolve_seed(
    f: &IntPoly,
    p: u64,
    seed: &Order2Seed,
    opts: &ResolveOptions,
) -> Result<Resolution, Order2Error> {
    let base = PrimeField::new(p)?;
    let deg_phi = seed.phi.degree().unwrap_or(0) as u64;
    let field = if deg_phi == 1 {
        ExtensionField::prime(base)
    } else {
        let modulus: Vec<u64> = seed
            .phi
            .coeffs()
            .iter()
            .map(|c| u64::try_from(c.mod_floor(&BigInt::from(p))).unwrap())
            .collect();
        ExtensionField::new(base, modulus)?
    };
    let gamma1 = Frac::new(seed.slope_h as i64, seed.slope_e as i64);
    let level1 = Level {
        phi: seed.phi.clone(),
        gamma: gamma1,
        estep: seed.slope_e,
        root: seed.root.clone(),
        // phi^e / p^h has residue `root` on this branch.
        relation: vec![-(seed.slope_h as i64), seed.slope_e as i64],
    };
    let chain = Chain {
        p,
        field,
        levels: vec![level1],
        ram: seed.slope_e,
        res_deg: deg_phi,
        gen_level: None,
    };

    let root_lift = IntPoly::new(seed.root.iter().map(|&c| BigInt::from(c)).collect());
    let mut key = IntPoly::x_power(0);
    for _ in 0..seed.slope_e {
        key = key.mul(&seed.phi);
    }
    let key = key.sub(&root_lift.scale(&BigInt::from(p).pow(seed.slope_h as u32)));

    let mut res = Resolution {
        parts: Vec::new(),
        blocks: Vec::new(),
        ind: 0,
        ind_exact: true,
        trace: Vec::new(),
    };
    let mut queue = vec![StageTask {
        key,
        floor: Frac::int(seed.slope_h as i64),
        budget: seed.multiplicity as u64,
        chain,
    }];
    let mut stages = 0u32;
    while let Some(stage) = queue.pop() {
        stages += 1;
        if stages > opts.max_stages {
            return Err(Order2Error::UnresolvedCase(format!(
                "stage budget exhausted after {} polygons",
                opts.max_stages
            )));
        }
        run_stage(stage, opts, &mut res, &mut queue, f)?;
    }

    let settled: u64 = res.parts.iter().map(|&(e, f)| e * f).sum::<u64>()
        + res.blocks.iter().map(|b| b.degree).sum::<u64>();
    if settled != seed.degree_share {
        return Err(Order2Error::UnresolvedCase(format!(
            "resolved degree {settled} disagrees with the branch share {}",
            seed.degree_share
        )));
    }
    Ok(res)
}

fn run_stage(
    stage: StageTask,
    opts: &ResolveOptions,
    res: &mut Resolution,
    queue: &mut Vec<StageTask>,
    f: &IntPoly,
) -> Result<(), Order2Error> {
    let StageTask { key, floor, budget, chain } = stage;
    let m = chain.levels.len();
    let exp = phi_expand(f, &key)?;
    let mut points: Vec<(u64, Frac)> = Vec::new();
    for (i, a) in exp.coefficients().iter().enumerate() {
        if let Some(v) = chain.val(a, m)? {
            points.push((i as u64, v));
        }
    }
    let sides = falling_sides(&points);
    let steep: Vec<HullSide> = sides.into_iter().filter(|s| s.slope > floor).collect();
    let steep_len: u64 = steep.iter().map(|s| s.length).sum();
    // Exactly the branch's roots push the key's value above its chain value,
    // so the steep mass must equal the budget.
    if steep_len != budget {
        return Err(Order2Error::UnresolvedCase(format!(
            "sides steeper than {floor} carry {steep_len} of the expected {budget} at key {key}"
        )));
    }
    res.ind += chain.res_deg * stage_index(&steep, chain.group_den(m), floor);
    res.trace.push(format!(
        "key {key}: steep sides {}",
        steep
            .iter()
            .map(|s| format!("[-{} x{}]", s.slope, s.length))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    for side in &steep {
        process_side(&exp, &key, side, &chain, opts, res, queue)?;
    }
    Ok(())
}

/// Builds the twisted residual polynomial of one side and factors it.
fn side_residual(
    exp: &PhiExpansion,
    side: &HullSide,
    chain: &Chain,
) -> Result<(FieldPoly, Vec<(FieldPoly, u32)>), Order2Error> {
    let m = chain.levels.len();
    let sigma = side.slope;
    let estep = side_estep(sigma, chain.group_den(m));
    if side.length % estep != 0 {
        return Err(Order2Error::UnresolvedCase(format!(
            "side length {} not a multiple of the slope index {estep}",
            side.length
        )));
    }
    let d = side.length / estep;
    let (i0, v0) = side.left;
    let canon_left = chain.canonical(v0, m).ok_or_else(|| {
        Order2Error::UnresolvedCase(format!("side endpoint value {v0} outside the group"))
    })?;
    let canon_step = chain
        .canonical(sigma.mul_int(estep as i64), m)
        .ok_or_else(|| Order2Error::UnresolvedCase(format!("slope {sigma} outside the group")))?;
    let mut coeffs = Vec::with_capacity(d as usize + 1);
    for j in 0..=d {
        let i = i0 + j * estep;
        let on_line = v0.sub(sigma.mul_int((j * estep) as i64));
        let a = exp.coefficient(i as usize);
        let c = match chain.val(&a, m)? {
            Some(v) if v == on_line => {
                let u = chain.residue(&a, m)?;
                let canon_i = chain.canonical(v, m).ok_or_else(|| {
                    Order2Error::UnresolvedCase(format!("value {v} outside the group"))
                })?;
                // Twist: canonical exponents of a_i relative to the left
                // endpoint, advanced j lattice steps along the side.
                let mut diff = vec![0i64; m + 1];
                for (k, x) in canon_i.iter().enumerate() {
                    diff[k] += x;
                }
                for (k, x) in canon_left.iter().enumerate() {
                    diff[k] -= x;
                }
                for (k, x) in canon_step.iter().enumerate() {
                    diff[k] += (j as i64) * x;
                }
                let tw = chain.monomial_residue(&diff)?;
                chain.field.mul(&u, &tw)
            }
            _ => chain.field.zero(),
        };
        coeffs.push(c);
    }
    let psi = FieldPoly::new(&chain.field, coeffs);
    let facs = factor(&chain.field, &psi)?;
    Ok((psi, facs))
}

/// Handles one steep side: certify separable factors, refine or grow on
/// repeated ones, or stop at the documented block when the policy says so.
fn process_side(
    exp: &PhiExpansion,
    key: &IntPoly,
    side: &HullSide,
    chain: &Chain,
    opts: &ResolveOptions,
    res: &mut Resolution,
    queue: &mut Vec<StageTask>,
) -> Result<(), Order2Error> {
    let m = chain.levels.len();
    let sigma = side.slope;
    let estep = side_estep(sigma, chain.group_den(m));
    let (psi, facs) = side_residual(exp, side, chain)?;
    res.trace.push(format!(
        "  side -{sigma} x{}: residual {}",
        side.length,
        psi.render(&chain.field, "y")
    ));
    for (irr, mult) in &facs {
        let dpsi = irr.degree().unwrap_or(0) as u64;
        if *mult == 1 {
            let e = chain.ram * estep;
            let fdeg = chain.res_deg * dpsi;
            res.parts.push((e, fdeg));
            res.trace.push(format!(
                "    {} simple: prime (e = {e}, f = {fdeg})",
                irr.render(&chain.field, "y")
            ));
            continue;
        }
        if opts.block_policy
            && m == 1
            && chain.ram == 2
            && chain.res_deg == 1
            && dpsi == 1
            && estep == 1
            && *mult == 2
            && !sigma.is_integer()
        {
            // Deepest documented dyadic subcase: report the candidate set.
            let degree = 2 * chain.ram;
            res.blocks.push(AmbiguousBlock {
                degree,
                options: block_options(degree, chain.ram, chain.res_deg),
            });
            res.ind_exact = false;
            res.trace.push(format!(
                "    {} repeated: ambiguous block of degree {degree}",
                irr.render(&chain.field, "y")
            ));
            continue;
        }
        push_better_key(key, side, irr, *mult as u64, chain, res, queue)?;
    }
    Ok(())
}

/// Key improvement for a repeated residual factor. Linear factor with slope
/// in the value group: sharpen the key in place. Otherwise commit the key as
/// a new level (extending the residue field on a higher-degree factor) and
/// lift the factor to the next key.
fn push_better_key(
    key: &IntPoly,
    side: &HullSide,
    irr: &FieldPoly,
    mult: u64,
    chain: &Chain,
    res: &mut Resolution,
    queue: &mut Vec<StageTask>,
) -> Result<(), Order2Error> {
    let m = chain.levels.len();
    let sigma = side.slope;
    let estep = side_estep(sigma, chain.group_den(m));
    let dpsi = irr.degree().unwrap_or(0) as u64;

    if dpsi == 1 && estep == 1 {
        // Refinement: key <- key - lift(root at value sigma).
        let rho = chain.field.neg(&irr.coeff(&chain.field, 0));
        let g = chain.residue_lift(&rho, sigma, m).ok_or_else(|| {
            Order2Error::UnresolvedCase(format!(
                "no polynomial lift of the residual root at value {sigma}"
            ))
        })?;
        let next = key.sub(&g);
        res.trace.push(format!("    refine: key <- {next}"));
        queue.push(StageTask { key: next, floor: sigma, budget: mult, chain: chain.clone() });
        return Ok(());
    }

    // Growth: commit (key, sigma) as a new level.
    let mut grown = chain.clone();
    if dpsi > 1 {
        if chain.field.degree() > 1 {
            return Err(Order2Error::UnresolvedCase(
                "residue field extension past the first is unsupported".to_string(),
            ));
        }
        let modulus: Vec<u64> =
            irr.coeffs().iter().map(|c| c.first().copied().unwrap_or(0)).collect();
        let new_field = ExtensionField::new(PrimeField::new(chain.p)?, modulus)?;
        // Re-embed the committed roots into the larger field.
        for lv in &mut grown.levels {
            let c = lv.root.first().copied().unwrap_or(0);
            lv.root = new_field.element_from_int_coeffs(&[BigInt::from(c)]);
        }
        grown.field = new_field;
        grown.gen_level = Some(m + 1);
    }
    let root = if dpsi == 1 {
        chain.field.neg(&irr.coeff(&chain.field, 0))
    } else {
        grown.field.element_from_int_coeffs(&[BigInt::from(0), BigInt::from(1)])
    };
    let canon_step = chain
        .canonical(sigma.mul_int(estep as i64), m)
        .ok_or_else(|| Order2Error::UnresolvedCase(format!("slope {sigma} outside the group")))?;
    let mut relation = vec![0i64; m + 2];
    for (k, x) in canon_step.iter().enumerate() {
        relation[k] = -x;
    }
    relation[m + 1] = estep as i64;
    grown.levels.push(Level { phi: key.clone(), gamma: sigma, estep, root, relation });
    grown.ram *= estep;
    grown.res_deg *= dpsi;

    // Next key: Sigma_c lift(psi_c at value (dpsi - c) estep sigma) K^(c estep),
    // a monic representative whose side data reproduce (sigma, psi).
    let mut next = IntPoly::zero();
    for (c, coef) in irr.coeffs().iter().enumerate() {
        if chain.field.is_zero(coef) {
            continue;
        }
        let v = sigma.mul_int((dpsi as i64 - c as i64) * estep as i64);
        let tail = chain.residue_lift(coef, v, m).ok_or_else(|| {
            Order2Error::UnresolvedCase("no polynomial lift for the grown key".to_string())
        })?;
        let mut term = tail;
        for _ in 0..(c as u64 * estep) {
            term = term.mul(key);
        }
        next = next.add(&term);
    }
    res.trace.push(format!(
        "    grow ({estep}fold ramification jump, residue degree {dpsi}): key <- {next}"
    ));
    queue.push(StageTask {
        key: next,
        floor: sigma.mul_int((dpsi * estep) as i64),
        budget: mult,
        chain: grown,
    });
    Ok(())
}

/// Candidate (e, f) multisets for a block of the given degree: every e a
/// multiple of the certified ramification, every f of the certified residue
/// degree, summing to the block degree.
fn block_options(degree: u64, e_unit: u64, f_unit: u64) -> Vec<Vec<(u64, u64)>> {
    fn rec(
        rest: u64,
        min_ef: u64,
        current: &mut Vec<(u64, u64)>,
        out: &mut Vec<Vec<(u64, u64)>>,
    ) {
        if rest == 0 {
            out.push(current.clone());
            return;
        }
        for ef in min_ef..=rest {
            for e in 1..=ef {
                if ef % e == 0 {
                    current.push((e, ef / e));
                    rec(rest - ef, ef, current, out);
                    current.pop();
                }
            }
        }
    }
    let share = degree / (e_unit * f_unit);
    let mut raw = Vec::new();
    rec(share, 1, &mut Vec::new(), &mut raw);
    let mut out: Vec<Vec<(u64, u64)>> = raw
        .into_iter()
        .map(|opt| {
            let mut scaled: Vec<(u64, u64)> =
                opt.iter().map(|&(e, f)| (e * e_unit, f * f_unit)).collect();
            scaled.sort_by_key(|&(e, f)| (f, e));
            scaled
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Second-order index term of one stage: integer lattice points strictly
/// right of the vertical axis, on or below the steep part, and strictly
/// above the horizontal through its right endpoint, counted after shearing
/// ordinates to u = E (v + x * floor) so the relevant lattice is integral.
fn stage_index(steep: &[HullSide], group_den: i64, floor: Frac) -> u64 {
    let Some(last) = steep.last() else { return 0 };
    let (xr, vr) = last.right;
    let u_end = vr.add(floor.mul_int(xr as i64)).mul_int(group_den).floor();
    let mut count = 0u64;
    for (si, side) in steep.iter().enumerate() {
        let (x0, v0) = side.left;
        let x1 = side.right.0;
        for x in x0.max(1)..=x1 {
            if x == x0 && si > 0 {
                continue;
            }
            let v = v0.sub(side.slope.mul_int((x - x0) as i64));
            let u = v.add(floor.mul_int(x as i64)).mul_int(group_den).floor();
            if u > u_end {
                count += (u - u_end) as u64;
            }
        }
    }
    count
}

// ---------------------------------------------------------------------------
// Published second-order interface
// ---------------------------------------------------------------------------

/// Second-order type (phi, lambda, psi; phi2): a first-order lift, a slope,
/// the repeated residual factor it carries, and a key polynomial of degree
/// e * deg(psi) * deg(phi) whose first-order data reproduce (lambda, psi).
#[derive(Debug, Clone)]
pub struct Order2Type {
    pub phi: IntPoly,
    /// Slope magnitude h/e in lowest terms.
    pub lambda: (u64, u64),
    pub psi: FieldPoly,
    pub phi2: IntPoly,
    pub beta: Option<BigInt>,
}

impl Order2Type {
    /// Checks the two structural invariants: the phi-polygon of phi2 is one
    /// side of slope -lambda, and its residual there is psi up to scaling.
    pub fn new(
        p: u64,
        phi: IntPoly,
        lambda: (u64, u64),
        psi: FieldPoly,
        phi2: IntPoly,
        beta: Option<BigInt>,
    ) -> Result<Self, Order2Error> {
        let exp = phi_expand(&phi2, &phi)?;
        let np = principal_polygon(&exp, p)?;
        let sides = np.principal_sides();
        if sides.len() != 1 {
            return Err(Order2Error::InvalidType(format!(
                "phi-polygon of {phi2} has {} sides, expected 1",
                sides.len()
            )));
        }
        let side = &sides[0];
        if (side.slope_h, side.slope_e) != lambda {
            return Err(Order2Error::InvalidType(format!(
                "phi-polygon side of {phi2} has slope -{}/{}, expected -{}/{}",
                side.slope_h, side.slope_e, lambda.0, lambda.1
            )));
        }
        let field = exp.residue_field(p)?;
        let att = residual_poly(&np, side, &exp, &field);
        let got = att.residual.monic(&field);
        let want = psi.monic(&field);
        if got.coeffs() != want.coeffs() {
            return Err(Order2Error::InvalidType(format!(
                "residual {} of {phi2} does not match psi {}",
                att.residual.render(&field, "y"),
                psi.render(&field, "y")
            )));
        }
        Ok(Order2Type { phi, lambda, psi, phi2, beta })
    }
}

/// e * min over the phi-adic development of (nu_p(a_i) + i h / e): the
/// augmented valuation attached to (phi, lambda = h/e), normalized to
/// integer values. Errors on the zero polynomial.
pub fn augmented_valuation(
    poly: &IntPoly,
    phi: &IntPoly,
    lambda: (u64, u64),
    p: u64,
) -> Result<u64, Order2Error> {
    if poly.is_zero() {
        return Err(Order2Error::ZeroPolynomial);
    }
    let (h, e) = lambda;
    let exp = phi_expand(poly, phi)?;
    let mut best: Option<Frac> = None;
    for (i, a) in exp.coefficients().iter().enumerate() {
        let v = match a.valuation(p) {
            Valuation::Finite(v) => v,
            Valuation::Infinity => continue,
        };
        let t = Frac::new(v as i64 * e as i64 + i as i64 * h as i64, e as i64);
        best = Some(match best {
            Some(b) if b <= t => b,
            _ => t,
        });
    }
    let best = best.ok_or(Order2Error::ZeroPolynomial)?;
    let scaled = best.mul_int(e as i64);
    debug_assert!(scaled.is_integer());
    Ok(scaled.num() as u64)
}

/// Smallest beta with nu_p(beta) = h_val and nu_p(beta^power + a) >= target,
/// searched exhaustively over residues modulo p^(target + 2). NoBeta marks a
/// misapplied case precondition, not a search that gave up early.
pub fn find_beta(
    p: u64,
    a: &BigInt,
    h_val: u64,
    power: u32,
    target: u64,
) -> Result<BigInt, Order2Error> {
    let bound = BigInt::from(p).pow((target + 2) as u32);
    let step = BigInt::from(p).pow(h_val as u32);
    let mut u = BigInt::from(1u32);
    loop {
        let beta: BigInt = &u * &step;
        if beta >= bound {
            return Err(Order2Error::NoBeta { p, h: h_val, power, target });
        }
        if !(&u % BigInt::from(p)).is_zero() {
            let probe: BigInt = beta.pow(power) + a;
            let ok = match vp(&probe, p) {
                Ok(Valuation::Finite(k)) => k >= target,
                _ => true,
            };
            if ok {
                return Ok(beta);
            }
        }
        u += 1;
    }
}

/// Resolves a pending second-order task by running the inductive-valuation
/// stages on each seed, stopping at the documented dyadic block.
pub fn order2_resolve(task: &FactorTask, f: &IntPoly, p: u64) -> FactorTask {
    resolve_task_with(task, f, p, &ResolveOptions { block_policy: true, ..Default::default() })
}

/// As [`order2_resolve`] but with explicit options; the default options
/// disable the block policy and resolve every branch to certified parts.
pub fn resolve_task_with(
    task: &FactorTask,
    f: &IntPoly,
    p: u64,
    opts: &ResolveOptions,
) -> FactorTask {
    let seeds = match &task.status {
        TaskStatus::NeedsOrder2(seeds) => seeds.clone(),
        _ => return task.clone(),
    };
    let mut out = task.clone();
    for seed in &seeds {
        match resolve_seed(f, p, seed, opts) {
            Ok(r) => {
                out.contributions.extend(r.parts.iter().copied());
                out.blocks.extend(r.blocks.iter().cloned());
                out.ind += r.ind;
                out.trace.notes.extend(r.trace.iter().cloned());
            }
            Err(e) => {
                out.status = TaskStatus::Unresolved(e.to_string());
                return out;
            }
        }
    }
    out.status = TaskStatus::Resolved;
    out
}

/// Runs the second-order resolver over every pending task of a first-order
/// analysis, in place, and refreshes the index sum.
pub fn complete_analysis(f: &IntPoly, analysis: &mut Analysis, opts: &ResolveOptions) {
    let p = analysis.p;
    for task in &mut analysis.tasks {
        if matches!(task.status, TaskStatus::NeedsOrder2(_)) {
            *task = resolve_task_with(task, f, p, opts);
        }
    }
    analysis.index_lower_bound = analysis.tasks.iter().map(|t| t.ind).sum();
}
