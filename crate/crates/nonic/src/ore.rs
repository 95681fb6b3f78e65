//! First-order splitting engine.
//!
//! Factors F mod p, then resolves each factor phi of F mod p by Newton
//! polygon and residual analysis: separable residuals certify (e, f) parts
//! directly (one prime per irreducible residual factor); an inseparable
//! residual triggers lift retries through a fixed ladder, then slope-filtered
//! refinement for tame repeated factors, or a second-order handoff for wild
//! ones (ramified side, repeated degree-1 residual).

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use thiserror::Error;

use crate::finfield::{factor, ExtensionField, FieldError, FieldPoly, FqElem, PrimeField};
use crate::polygon::{
    ind_phi, phi_expand, principal_polygon, residual_poly, IntPoly, NewtonPolygon, PhiExpansion,
    PolygonError, Side,
};

/// Refinement recursion cap; distinct p-adic roots separate long before this.
const REFINE_DEPTH_CAP: u32 = 512;
/// Upper bound on the generic lift sweep per task (p^deg(phi) candidates).
const GENERIC_SWEEP_CAP: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OreError {
    #[error("engine requires a monic polynomial of degree >= 1")]
    NotMonic,
    #[error("unresolved case: {0}")]
    UnresolvedCase(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Polygon(#[from] PolygonError),
}

// ---------------------------------------------------------------------------
// Splitting shapes
// ---------------------------------------------------------------------------

/// Multiset of (e, f) parts of p Z_K, canonically ordered by (f, e).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SplittingShape {
    parts: Vec<(u64, u64)>,
}

impl SplittingShape {
    pub fn new(mut parts: Vec<(u64, u64)>) -> Self {
        parts.sort_by_key(|&(e, f)| (f, e));
        Self { parts }
    }

    /// (e, f) pairs sorted by (f, e).
    pub fn parts(&self) -> &[(u64, u64)] {
        &self.parts
    }

    /// Sigma e*f; equals deg F on every successful analysis.
    pub fn degree(&self) -> u64 {
        self.parts.iter().map(|&(e, f)| e * f).sum()
    }

    /// L_p(f): number of primes with residue degree f.
    pub fn primes_of_residue_degree(&self, f: u64) -> u64 {
        self.parts.iter().filter(|&&(_, g)| g == f).count() as u64
    }

    pub fn max_residue_degree(&self) -> u64 {
        self.parts.iter().map(|&(_, f)| f).max().unwrap_or(0)
    }
}

impl fmt::Display for SplittingShape {
    /// Renders as "[1,1^2,1^6]": each part f^e with the exponent 1 omitted.
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner: Vec<String> = self
            .parts
            .iter()
            .map(|&(e, f)| {
                if e == 1 {
                    format!("{f}")
                } else {
                    format!("{f}^{e}")
                }
            })
            .collect();
        write!(w, "[{}]", inner.join(","))
    }
}

/// Degree block whose exact splitting is reported as a set of alternatives
/// rather than a single certified outcome. Every option satisfies
/// Sigma e*f = degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmbiguousBlock {
    pub degree: u64,
    /// Candidate (e, f) multisets, each sorted by (f, e).
    pub options: Vec<Vec<(u64, u64)>>,
}

impl fmt::Display for AmbiguousBlock {
    fn fmt(&self, w: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opts: Vec<String> = self
            .options
            .iter()
            .map(|o| SplittingShape::new(o.clone()).to_string())
            .collect();
        write!(w, "block deg {}: {}", self.degree, opts.join(" | "))
    }
}

// ---------------------------------------------------------------------------
// Tasks and traces
// ---------------------------------------------------------------------------

/// Wild repeated residual factor (ramified side) awaiting second-order work.
#[derive(Debug, Clone)]
pub struct Order2Seed {
    /// First-order lift whose polygon produced the side.
    pub phi: IntPoly,
    /// Side slope -h/e in lowest terms, e >= 2.
    pub slope_h: u64,
    pub slope_e: u64,
    /// Root of the repeated degree-1 residual factor, in F_phi.
    pub root: FqElem,
    pub multiplicity: u32,
    /// e * multiplicity * deg(phi): the Sigma e*f share this seed owes.
    pub degree_share: u64,
}

#[derive(Debug, Clone)]
pub enum TaskStatus {
    Resolved,
    NeedsOrder2(Vec<Order2Seed>),
    Unresolved(String),
}

/// One irreducible factor of F mod p and the outcome of resolving it.
#[derive(Debug, Clone)]
pub struct FactorTask {
    /// Canonical monic lift of the factor (root lift x - c for degree 1,
    /// coefficients in {0..p-1} otherwise).
    pub phi_bar: IntPoly,
    pub multiplicity: u32,
    /// Certified (e, f) parts from this factor.
    pub contributions: Vec<(u64, u64)>,
    /// Degree blocks left as candidate sets (second-order ambiguity policy).
    pub blocks: Vec<AmbiguousBlock>,
    pub status: TaskStatus,
    /// ind_phi of the adjudicating polygon (exact index share when its
    /// residuals are separable, a lower bound otherwise).
    pub ind: u64,
    pub trace: TaskTrace,
}

/// Human-readable record of one polygon level.
#[derive(Debug, Clone, Default)]
pub struct TaskTrace {
    pub phi: String,
    /// Sides must be strictly steeper than this slope to belong to the branch.
    pub floor: u64,
    pub points: Vec<(u64, u64)>,
    pub sides: Vec<SideTrace>,
    pub notes: Vec<String>,
    pub children: Vec<TaskTrace>,
}

#[derive(Debug, Clone)]
pub struct SideTrace {
    pub side: String,
    pub residual: String,
    pub factorization: Vec<(String, u32)>,
    /// False for sides at or below the branch floor (other branches' data).
    pub counted: bool,
    pub outcome: String,
}

// ---------------------------------------------------------------------------
// Analysis driver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisStatus {
    Resolved,
    NeedsOrder2,
    Unresolved,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub p: u64,
    pub tasks: Vec<FactorTask>,
    /// Sigma ind_phi over tasks; equals nu_p of the index when p-regular.
    pub index_lower_bound: u64,
}

impl Analysis {
    pub fn status(&self) -> AnalysisStatus {
        let mut out = AnalysisStatus::Resolved;
        for t in &self.tasks {
            match t.status {
                TaskStatus::Unresolved(_) => return AnalysisStatus::Unresolved,
                TaskStatus::NeedsOrder2(_) => out = AnalysisStatus::NeedsOrder2,
                TaskStatus::Resolved => {}
            }
        }
        out
    }

    pub fn seeds(&self) -> Vec<(usize, &Order2Seed)> {
        let mut out = Vec::new();
        for (i, t) in self.tasks.iter().enumerate() {
            if let TaskStatus::NeedsOrder2(seeds) = &t.status {
                out.extend(seeds.iter().map(|s| (i, s)));
            }
        }
        out
    }

    pub fn shape(&self) -> Result<SplittingShape, OreError> {
        assemble_shape(&self.tasks)
    }

    /// Every shape compatible with the resolved parts and the ambiguous
    /// blocks (cartesian product over block options), sorted and deduped.
    pub fn shape_candidates(&self) -> Result<Vec<SplittingShape>, OreError> {
        shape_candidates(&self.tasks)
    }
}

/// Union of the contributions of fully resolved tasks; errors if any task is
/// still pending second-order work, unresolved, or ambiguous.
pub fn assemble_shape(tasks: &[FactorTask]) -> Result<SplittingShape, OreError> {
    let mut parts = Vec::new();
    for t in tasks {
        match &t.status {
            TaskStatus::Resolved => parts.extend_from_slice(&t.contributions),
            TaskStatus::NeedsOrder2(_) => {
                return Err(OreError::UnresolvedCase(format!(
                    "factor {} requires second-order analysis",
                    t.phi_bar
                )))
            }
            TaskStatus::Unresolved(msg) => return Err(OreError::UnresolvedCase(msg.clone())),
        }
        if !t.blocks.is_empty() {
            return Err(OreError::UnresolvedCase(format!(
                "factor {} resolved only up to an ambiguous block",
                t.phi_bar
            )));
        }
    }
    Ok(SplittingShape::new(parts))
}

/// Expands resolved tasks and their ambiguous blocks into the full list of
/// candidate shapes. A task without blocks contributes exactly one outcome.
pub fn shape_candidates(tasks: &[FactorTask]) -> Result<Vec<SplittingShape>, OreError> {
    let mut parts = Vec::new();
    let mut blocks: Vec<&AmbiguousBlock> = Vec::new();
    for t in tasks {
        match &t.status {
            TaskStatus::Resolved => parts.extend_from_slice(&t.contributions),
            TaskStatus::NeedsOrder2(_) => {
                return Err(OreError::UnresolvedCase(format!(
                    "factor {} requires second-order analysis",
                    t.phi_bar
                )))
            }
            TaskStatus::Unresolved(msg) => return Err(OreError::UnresolvedCase(msg.clone())),
        }
        blocks.extend(t.blocks.iter());
    }
    let mut shapes = vec![parts];
    for b in blocks {
        let mut next = Vec::new();
        for base in &shapes {
            for opt in &b.options {
                let mut s = base.clone();
                s.extend_from_slice(opt);
                next.push(s);
            }
        }
        shapes = next;
    }
    let mut out: Vec<SplittingShape> = shapes.into_iter().map(SplittingShape::new).collect();
    out.sort_by_key(|s| s.parts().iter().map(|&(e, f)| (f, e)).collect::<Vec<_>>());
    out.dedup();
    Ok(out)
}

/// Sigma ind_phi over the tasks (Ore's lower bound for nu_p of the index).
pub fn ore_index_lower_bound(tasks: &[FactorTask]) -> u64 {
    tasks.iter().map(|t| t.ind).sum()
}

/// Full first-order analysis of the monic polynomial f at p. `ladder` lists
/// preferred refinement roots c (lifts x - c) tried before the generic sweep
/// when a residual is inseparable.
pub fn analyze(f: &IntPoly, p: u64, ladder: &[BigInt]) -> Result<Analysis, OreError> {
    let deg_f = match f.degree() {
        Some(d) if d >= 1 && f.is_monic() => d as u64,
        _ => return Err(OreError::NotMonic),
    };
    let base = PrimeField::new(p)?;
    let fp = ExtensionField::prime(base);
    let fbar = FieldPoly::from_int_coeffs(&fp, f.coeffs());
    let factors = factor(&fp, &fbar)?;

    let mut tasks = Vec::new();
    for (irr, mult) in &factors {
        let phi_bar = lift_factor(&fp, irr, p);
        tasks.push(resolve_task(f, p, phi_bar, *mult, ladder)?);
    }

    // Degree accounting: certified parts plus pending second-order shares
    // must add up to deg F exactly.
    let mut total: u64 = tasks.iter().flat_map(|t| &t.contributions).map(|&(e, f)| e * f).sum();
    for t in &tasks {
        if let TaskStatus::NeedsOrder2(seeds) = &t.status {
            total += seeds.iter().map(|s| s.degree_share).sum::<u64>();
        }
    }
    let any_unresolved = tasks.iter().any(|t| matches!(t.status, TaskStatus::Unresolved(_)));
    if !any_unresolved && total != deg_f {
        return Err(OreError::UnresolvedCase(format!(
            "degree accounting mismatch: parts sum to {total}, expected {deg_f}"
        )));
    }

    let index_lower_bound = tasks.iter().map(|t| t.ind).sum();
    Ok(Analysis { p, tasks, index_lower_bound })
}

/// Canonical monic lift: root lift x - c (c in {0..p-1}) for degree 1,
/// coefficient lift in {0..p-1} for higher degree.
fn lift_factor(fp: &ExtensionField, irr: &FieldPoly, p: u64) -> IntPoly {
    let d = irr.degree().unwrap_or(0);
    if d == 1 {
        let c0 = irr.coeff(fp, 0);
        let c0 = if c0.is_empty() { 0 } else { c0[0] };
        let root = (p - c0) % p;
        return IntPoly::new(vec![-BigInt::from(root), BigInt::from(1)]);
    }
    let coeffs: Vec<BigInt> = (0..=d)
        .map(|i| {
            let c = irr.coeff(fp, i);
            BigInt::from(if c.is_empty() { 0 } else { c[0] })
        })
        .collect();
    IntPoly::new(coeffs)
}

// ---------------------------------------------------------------------------
// Task resolution
// ---------------------------------------------------------------------------

/// Polygon data for one lift of one factor.
struct Level {
    lift: IntPoly,
    dev: PhiExpansion,
    np: NewtonPolygon,
    field: ExtensionField,
    /// Number of leading dev coefficients that vanish identically (the lift
    /// divides f exactly that many times over Z).
    zero_prefix: u64,
}

fn build_level(f: &IntPoly, p: u64, lift: &IntPoly) -> Result<Level, OreError> {
    let dev = phi_expand(f, lift)?;
    let zero_prefix = dev.coefficients().iter().take_while(|c| c.is_zero()).count() as u64;
    let np = match principal_polygon(&dev, p) {
        Ok(np) => np,
        // an exact division can leave nothing below the axis
        Err(PolygonError::NoPrincipalPart(_)) if zero_prefix >= 1 => NewtonPolygon::empty(),
        Err(e) => return Err(e.into()),
    };
    let field = dev.residue_field(p)?;
    Ok(Level { lift: lift.clone(), dev, np, field, zero_prefix })
}

/// Outcome of analysing the sides of one level above a slope floor.
#[derive(Default)]
struct LevelOutcome {
    contributions: Vec<(u64, u64)>,
    seeds: Vec<Order2Seed>,
    unresolved: Option<String>,
    trace: TaskTrace,
}

/// Resolves one factor of F mod p: multiplicity 1 is immediate; otherwise the
/// initial lift's polygon adjudicates, with ladder retries when a residual is
/// inseparable and refinement / second-order seeding when the retries fail.
pub fn resolve_task(
    f: &IntPoly,
    p: u64,
    phi_bar: IntPoly,
    mult: u32,
    ladder: &[BigInt],
) -> Result<FactorTask, OreError> {
    let deg_phi = phi_bar.degree().unwrap_or(0) as u64;
    if mult == 1 {
        let trace = TaskTrace {
            phi: phi_bar.to_string(),
            notes: vec!["multiplicity 1: one unramified prime".to_string()],
            ..TaskTrace::default()
        };
        return Ok(FactorTask {
            phi_bar,
            multiplicity: 1,
            contributions: vec![(1, deg_phi)],
            blocks: Vec::new(),
            status: TaskStatus::Resolved,
            ind: 0,
            trace,
        });
    }

    let attempts = candidate_lifts(&phi_bar, p, ladder);
    let mut initial: Option<Level> = None;
    let mut retry_notes: Vec<String> = Vec::new();
    for lift in &attempts {
        let level = build_level(f, p, lift)?;
        if level.zero_prefix + level.np.length() != mult as u64 {
            return Err(OreError::UnresolvedCase(format!(
                "polygon length {} + exact divisions {} disagree with multiplicity {} at lift {}",
                level.np.length(),
                level.zero_prefix,
                mult,
                lift
            )));
        }
        let mut separable = true;
        let mut atts = Vec::new();
        for side in level.np.principal_sides() {
            let att = residual_poly(&level.np, side, &level.dev, &level.field);
            let facs = factor(&level.field, &att.residual)?;
            if facs.iter().any(|(_, m)| *m > 1) {
                separable = false;
            }
            atts.push((att, facs));
        }
        if separable && level.zero_prefix == 0 {
            // This lift is regular for the factor: Ore certifies one prime
            // (e(S), deg(phi) * deg(psi)) per irreducible residual factor.
            let ind = ind_phi(&level.np, deg_phi);
            let mut contributions = Vec::new();
            let mut trace = trace_header(&level, 0);
            trace.notes.append(&mut retry_notes);
            for (att, facs) in &atts {
                let mut outcomes = Vec::new();
                for (psi, _) in facs {
                    let e = att.side.ramification();
                    let fdeg = deg_phi * psi.degree().unwrap_or(0) as u64;
                    contributions.push((e, fdeg));
                    outcomes.push(format!("prime (e={e}, f={fdeg})"));
                }
                trace.sides.push(side_trace(&level, att, facs, true, outcomes.join("; ")));
            }
            return Ok(FactorTask {
                phi_bar,
                multiplicity: mult,
                contributions,
                blocks: Vec::new(),
                status: TaskStatus::Resolved,
                ind,
                trace,
            });
        }
        if initial.is_none() {
            initial = Some(level);
        } else {
            retry_notes.push(format!("lift {lift}: residual still inseparable"));
        }
    }

    // No lift in the ladder is regular; adjudicate from the initial lift and
    // refine tame repeated factors branch by branch.
    let level = initial.expect("attempts nonempty");
    let ind = ind_phi(&level.np, deg_phi);
    let mut outcome = process_level(f, p, level, 0, mult as u64, ladder, REFINE_DEPTH_CAP)?;
    outcome.trace.notes.append(&mut retry_notes);
    let status = match (outcome.unresolved, outcome.seeds.is_empty()) {
        (Some(msg), _) => TaskStatus::Unresolved(msg),
        (None, false) => TaskStatus::NeedsOrder2(outcome.seeds),
        (None, true) => TaskStatus::Resolved,
    };
    Ok(FactorTask {
        phi_bar,
        multiplicity: mult,
        contributions: outcome.contributions,
        blocks: Vec::new(),
        status,
        ind,
        trace: outcome.trace,
    })
}

/// Lifts to try, in order: the canonical lift, ladder roots congruent to it
/// (degree 1 only), then the generic sweep phi + p*c(x) over all c with
/// coefficients in {0..p-1}.
fn candidate_lifts(phi_bar: &IntPoly, p: u64, ladder: &[BigInt]) -> Vec<IntPoly> {
    let d = phi_bar.degree().unwrap_or(0);
    let mut out: Vec<IntPoly> = vec![phi_bar.clone()];
    let pb = BigInt::from(p);
    if d == 1 {
        let root = -phi_bar.coeff(0);
        for c in ladder {
            if (c - &root).mod_floor(&pb).is_zero() {
                out.push(IntPoly::new(vec![-c, BigInt::from(1)]));
            }
        }
    }
    if (p as u128).pow(d as u32) <= GENERIC_SWEEP_CAP as u128 {
        let mut digits = vec![0u64; d];
        loop {
            // advance odometer over c(x) = sum digits[i] x^i
            let mut i = 0;
            while i < d {
                digits[i] += 1;
                if digits[i] < p {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == d {
                break;
            }
            let c = IntPoly::new(digits.iter().map(|&v| BigInt::from(v)).collect());
            out.push(phi_bar.add(&c.scale(&pb)));
        }
    }
    let mut seen: Vec<Vec<BigInt>> = Vec::new();
    out.retain(|poly| {
        let key = poly.coeffs().to_vec();
        if seen.contains(&key) {
            false
        } else {
            seen.push(key);
            true
        }
    });
    out
}

fn trace_header(level: &Level, floor: u64) -> TaskTrace {
    TaskTrace {
        phi: level.lift.to_string(),
        floor,
        points: level.np.points().to_vec(),
        ..TaskTrace::default()
    }
}

fn side_trace(
    level: &Level,
    att: &crate::polygon::ResidualAttachment,
    facs: &[(FieldPoly, u32)],
    counted: bool,
    outcome: String,
) -> SideTrace {
    SideTrace {
        side: att.side.to_string(),
        residual: att.residual.render(&level.field, "y"),
        factorization: facs
            .iter()
            .map(|(g, m)| (g.render(&level.field, "y"), *m))
            .collect(),
        counted,
        outcome,
    }
}

/// Analyses the sides of `level` strictly steeper than `floor`, certifying
/// separable residual factors, refining tame repeated ones, and seeding
/// second-order work for wild ones. `budget` is the number of roots the
/// branch owns: the counted side lengths (plus exact divisions) must match.
fn process_level(
    f: &IntPoly,
    p: u64,
    level: Level,
    floor: u64,
    budget: u64,
    ladder: &[BigInt],
    depth: u32,
) -> Result<LevelOutcome, OreError> {
    let deg_phi = level.lift.degree().unwrap_or(0) as u64;
    let mut out = LevelOutcome { trace: trace_header(&level, floor), ..LevelOutcome::default() };

    if depth == 0 {
        out.unresolved = Some("refinement depth cap exceeded".to_string());
        return Ok(out);
    }
    if level.zero_prefix >= 2 {
        out.unresolved = Some(format!(
            "{} divides the input more than once: input not squarefree",
            level.lift
        ));
        return Ok(out);
    }
    if level.zero_prefix == 1 {
        // The lift divides f exactly: one unramified prime for this branch.
        out.contributions.push((1, deg_phi));
        out.trace.notes.push(format!("{} divides the input exactly", level.lift));
    }

    let steep: Vec<Side> = level
        .np
        .principal_sides()
        .iter()
        .copied()
        .filter(|s| s.slope_h > floor * s.slope_e)
        .collect();
    let counted_len: u64 = steep.iter().map(|s| s.length).sum();
    if counted_len + level.zero_prefix != budget {
        out.unresolved = Some(format!(
            "branch accounting mismatch at {}: sides steeper than {} have total length {}, expected {}",
            level.lift,
            floor,
            counted_len + level.zero_prefix,
            budget
        ));
        return Ok(out);
    }

    for side in level.np.principal_sides() {
        let counted = side.slope_h > floor * side.slope_e;
        let att = residual_poly(&level.np, side, &level.dev, &level.field);
        let facs = factor(&level.field, &att.residual)?;
        if !counted {
            out.trace.sides.push(side_trace(&level, &att, &facs, false, "other branch".into()));
            continue;
        }
        let mut outcomes = Vec::new();
        for (psi, m) in &facs {
            let psi_deg = psi.degree().unwrap_or(0) as u64;
            if *m == 1 {
                let e = side.ramification();
                let fdeg = deg_phi * psi_deg;
                out.contributions.push((e, fdeg));
                outcomes.push(format!("prime (e={e}, f={fdeg})"));
            } else if psi_deg == 1 && side.ramification() == 1 {
                // Tame repeated root: absorb the digit and look one level
                // deeper; the child's sides steeper than h describe exactly
                // this branch's roots.
                let root = level.field.neg(&psi.coeff(&level.field, 0));
                debug_assert!(!level.field.is_zero(&root), "residual root cannot be 0");
                let h = side.slope_h;
                let next = refined_lift(&level.lift, p, h, &root, ladder);
                outcomes.push(format!("repeated root: refine to {next}"));
                let child_level = build_level(f, p, &next)?;
                let child =
                    process_level(f, p, child_level, h, *m as u64, ladder, depth - 1)?;
                out.contributions.extend(child.contributions);
                out.seeds.extend(child.seeds);
                if let Some(msg) = child.unresolved {
                    out.unresolved = Some(msg);
                }
                out.trace.children.push(child.trace);
            } else if psi_deg == 1 {
                let e = side.ramification();
                out.seeds.push(Order2Seed {
                    phi: level.lift.clone(),
                    slope_h: side.slope_h,
                    slope_e: side.slope_e,
                    root: level.field.neg(&psi.coeff(&level.field, 0)),
                    multiplicity: *m,
                    degree_share: e * *m as u64 * deg_phi,
                });
                outcomes.push(format!(
                    "repeated root on ramified side (e={e}): second order"
                ));
            } else {
                out.unresolved = Some(format!(
                    "repeated residual factor of degree {psi_deg} at {}",
                    level.lift
                ));
                outcomes.push("unresolved".into());
            }
        }
        out.trace.sides.push(side_trace(&level, &att, &facs, true, outcomes.join("; ")));
    }
    Ok(out)
}

/// phi - p^h * root (residual roots are the next digit of the branch roots),
/// with the constant snapped to a ladder root in the same branch (congruent
/// mod p^(h+1)) when one exists, else centered mod p^(h+1). Any representative
/// of the branch gives the same steeper-than-h sides.
fn refined_lift(phi: &IntPoly, p: u64, h: u64, root: &FqElem, ladder: &[BigInt]) -> IntPoly {
    let ph = BigInt::from(p).pow(h as u32);
    let shift = IntPoly::new(root.iter().map(|&v| BigInt::from(v)).collect()).scale(&ph);
    let next = phi.sub(&shift);
    if phi.degree() != Some(1) {
        return next;
    }
    let modulus = BigInt::from(p).pow(h as u32 + 1);
    let c = -next.coeff(0);
    for cand in ladder {
        if (cand - &c).mod_floor(&modulus).is_zero() {
            return IntPoly::new(vec![-cand, BigInt::from(1)]);
        }
    }
    // centered representative keeps the integers small
    let mut r = c.mod_floor(&modulus);
    if &r * 2u32 > modulus {
        r -= &modulus;
    }
    IntPoly::new(vec![-r, BigInt::from(1)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trinomial(a: i64, b: i64) -> IntPoly {
        let mut coeffs = vec![BigInt::from(0); 10];
        coeffs[0] = BigInt::from(b);
        coeffs[1] = BigInt::from(a);
        coeffs[9] = BigInt::from(1);
        IntPoly::new(coeffs)
    }

    fn ladder_roots(a: i64, b: i64, p: u64) -> Vec<BigInt> {
        let mut ap = a;
        while ap % p as i64 == 0 {
            ap /= p as i64;
        }
        vec![
            BigInt::from(1),
            BigInt::from(-b),
            BigInt::from(b),
            BigInt::from(-ap),
            BigInt::from(ap),
        ]
    }

    fn shape_str(a: i64, b: i64, p: u64) -> String {
        let analysis = analyze(&trinomial(a, b), p, &ladder_roots(a, b, p)).unwrap();
        analysis.shape().unwrap().to_string()
    }

    #[test]
    fn unramified_factor_degrees_become_residue_degrees() {
        // x^9 + 2x + 1 mod 2 splits into degrees 1, 2, 6, all simple.
        let analysis = analyze(&trinomial(2, 1), 2, &[]).unwrap();
        let degs: Vec<(usize, u32)> = analysis
            .tasks
            .iter()
            .map(|t| (t.phi_bar.degree().unwrap(), t.multiplicity))
            .collect();
        assert_eq!(degs, vec![(1, 1), (2, 1), (6, 1)]);
        assert_eq!(analysis.shape().unwrap().to_string(), "[1,2,6]");
        assert_eq!(analysis.index_lower_bound, 0);
    }

    #[test]
    fn irreducible_reduction_gives_single_inert_prime() {
        let analysis = analyze(&trinomial(1, 1), 2, &[]).unwrap();
        assert_eq!(analysis.shape().unwrap().to_string(), "[9]");
    }

    #[test]
    fn degree_one_factors_use_root_lifts() {
        // x^9 + x + 2 mod 2 = x (x - 1)^8; the repeated factor lifts as x - 1.
        let analysis = analyze(&trinomial(1, 2), 2, &ladder_roots(1, 2, 2)).unwrap();
        let task = &analysis.tasks[1];
        assert_eq!(task.phi_bar.to_string(), "x - 1");
        assert_eq!(task.multiplicity, 8);
    }

    #[test]
    fn two_sides_of_degree_one_resolve_a_totally_ramified_tail() {
        // nu_2(1 + a + b) = 2: polygon (0,2)-(1,1)-(8,0) certifies
        // one unramified prime and one of ramification 7.
        let analysis = analyze(&trinomial(1, 2), 2, &ladder_roots(1, 2, 2)).unwrap();
        let task = &analysis.tasks[1];
        assert!(matches!(task.status, TaskStatus::Resolved));
        assert_eq!(task.contributions, vec![(1, 1), (7, 1)]);
        assert_eq!(analysis.shape().unwrap().to_string(), "[1,1,1^7]");
        assert_eq!(analysis.index_lower_bound, 1);
    }

    #[test]
    fn nonic_splitting_with_three_unramified_primes() {
        assert_eq!(shape_str(1, 1, 3), "[1,4,4]");
    }

    #[test]
    fn six_simple_factors_mod_three() {
        let analysis = analyze(&trinomial(-1, 3), 3, &[]).unwrap();
        assert_eq!(analysis.tasks.len(), 6);
        assert_eq!(analysis.shape().unwrap().to_string(), "[1,1,1,2,2,2]");
    }

    #[test]
    fn generic_mode_resolves_the_index_three_sextic() {
        // x^6 + 24x + 15 at p = 2: [1,1,2,2] with index bound 1 + 2 = 3.
        let mut coeffs = vec![BigInt::from(0); 7];
        coeffs[0] = BigInt::from(15);
        coeffs[1] = BigInt::from(24);
        coeffs[6] = BigInt::from(1);
        let f = IntPoly::new(coeffs);
        let analysis = analyze(&f, 2, &[]).unwrap();
        assert_eq!(analysis.shape().unwrap().to_string(), "[1,1,2,2]");
        assert_eq!(analysis.index_lower_bound, 3);
        // both sides of the x - 1 polygon carry residual y + 1
        let linear_task = &analysis.tasks[0];
        assert_eq!(linear_task.trace.sides.len(), 2);
        for side in &linear_task.trace.sides {
            assert_eq!(side.residual, "y + 1");
        }
    }

    #[test]
    fn wild_repeated_residual_defers_to_second_order() {
        // nu_2(a) = 2, nu_2(b) = 3: slope -1/4 side with residual (y+1)^2
        // survives every lift; the engine must hand over a seed.
        let analysis = analyze(&trinomial(12, 8), 2, &ladder_roots(12, 8, 2)).unwrap();
        assert_eq!(analysis.status(), AnalysisStatus::NeedsOrder2);
        let task = &analysis.tasks[0];
        assert_eq!(task.contributions, vec![(1, 1)]);
        match &task.status {
            TaskStatus::NeedsOrder2(seeds) => {
                assert_eq!(seeds.len(), 1);
                let seed = &seeds[0];
                assert_eq!(seed.phi.to_string(), "x");
                assert_eq!((seed.slope_h, seed.slope_e), (1, 4));
                assert_eq!(seed.multiplicity, 2);
                assert_eq!(seed.degree_share, 8);
            }
            other => panic!("expected a second-order seed, got {other:?}"),
        }
        assert!(analysis.shape().is_err());
    }

    #[test]
    fn ladder_relift_resolves_inseparable_cubic_residual() {
        // (45, 116) at p = 3: x - 1 gives (y-1)(y+1)^2; a deeper lift in the
        // ladder separates the pair into a ramified part.
        assert_eq!(shape_str(45, 116, 3), "[1,1^2,1^6]");
        assert_eq!(shape_str(126, 35, 3), "[1,1,1,1^6]");
        assert_eq!(shape_str(18, 224, 3), "[1,1,1,1^6]");
        assert_eq!(shape_str(99, 143, 3), "[1,1^2,1^6]");
        assert_eq!(shape_str(207, 197, 3), "[1,1^6,2]");
    }

    #[test]
    fn refinement_separates_roots_congruent_beyond_one_digit() {
        // (x - 28)(x - 109)(x^2 + 1): both deep roots are 1 mod 27, so no
        // one-digit lift separates them; the slope floor recursion must.
        let f = IntPoly::new(vec![BigInt::from(-28), BigInt::from(1)])
            .mul(&IntPoly::new(vec![BigInt::from(-109), BigInt::from(1)]))
            .mul(&IntPoly::new(vec![BigInt::from(1), BigInt::from(0), BigInt::from(1)]));
        let analysis = analyze(&f, 3, &[]).unwrap();
        assert_eq!(analysis.shape().unwrap().to_string(), "[1,1,2]");
        let task = &analysis.tasks[0];
        assert!(!task.trace.children.is_empty());
        let child = &task.trace.children[0];
        assert_eq!(child.floor, 3);
        assert_eq!(child.phi, "x - 28");
    }

    #[test]
    fn fundamental_equality_on_random_inputs() {
        use num_traits::Signed;
        use proptest::prelude::*;
        proptest!(|(a in -300i64..300, b in -300i64..300, pi in 0usize..4)| {
            prop_assume!(a != 0 && b != 0);
            let p = [2u64, 3, 5, 7][pi];
            let analysis = analyze(&trinomial(a, b), p, &ladder_roots(a, b, p)).unwrap();
            if analysis.status() == AnalysisStatus::Resolved {
                let shape = analysis.shape().unwrap();
                prop_assert_eq!(shape.degree(), 9);
            }
            // Ore's bound: 2 * Sigma ind_phi <= nu_p(disc)
            let disc = BigInt::from(3).pow(18) * BigInt::from(b).pow(8)
                + BigInt::from(2).pow(24) * BigInt::from(a).pow(9);
            if !disc.is_zero() {
                let mut nu = 0u64;
                let mut d = disc.abs();
                let pb = BigInt::from(p);
                while (&d % &pb).is_zero() {
                    d /= &pb;
                    nu += 1;
                }
                prop_assert!(2 * analysis.index_lower_bound <= nu);
            }
        });
    }

    #[test]
    fn lift_choice_does_not_change_the_shape_of_regular_inputs() {
        // shifting the ladder (hence the adjudicating lift) must not change
        // the shape when every residual is separable
        for (a, b, p) in [(1i64, 2i64, 2u64), (10, 3, 3), (45, 116, 3)] {
            let base = shape_str(a, b, p);
            let shifted = analyze(
                &trinomial(a, b),
                p,
                &[BigInt::from(1 + p as i64), BigInt::from(1 - 2 * p as i64)],
            )
            .unwrap();
            if shifted.status() == AnalysisStatus::Resolved {
                assert_eq!(shifted.shape().unwrap().to_string(), base);
            }
        }
    }
}
