//! Zone survey: measure engine shapes across congruence cells of wild zones.
//!
//! For each surveyed cell (a fixed congruence constraint on (a, b)), prints
//! the set of shapes the engine produces over several lifts, with a "div"
//! marker on shapes satisfying L_p(f) > N_p(f) for some f. Output is the raw
//! evidence used to pin down exact split conditions for the table classifier.

use std::collections::BTreeMap;

use nonic::polygon::IntPoly;
use nonic::{analyze, complete_analysis, AnalysisStatus, ResolveOptions};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

fn trinomial(a: &BigInt, b: &BigInt) -> IntPoly {
    let mut coeffs = vec![BigInt::from(0); 10];
    coeffs[0] = b.clone();
    coeffs[1] = a.clone();
    coeffs[9] = BigInt::from(1);
    IntPoly::new(coeffs)
}

fn ladder(a: &BigInt, b: &BigInt, p: u64) -> Vec<BigInt> {
    let p = BigInt::from(p);
    let mut ap = a.clone();
    loop {
        let (q, r) = ap.div_rem(&p);
        if !r.is_zero() {
            break;
        }
        ap = q;
    }
    vec![BigInt::from(1), -b, b.clone(), -&ap, ap]
}

fn shape(a: &BigInt, b: &BigInt, p: u64) -> String {
    let f = trinomial(a, b);
    let mut an = match analyze(&f, p, &ladder(a, b, p)) {
        Ok(an) => an,
        Err(e) => return format!("ERR:{e}"),
    };
    if matches!(an.status(), AnalysisStatus::NeedsOrder2) {
        complete_analysis(&f, &mut an, &ResolveOptions::default());
    }
    match an.status() {
        AnalysisStatus::Resolved => {
            let s = an.shape().unwrap();
            let mut tag = s.to_string();
            if divides(s.parts(), p) {
                tag.push_str(" div");
            }
            tag
        }
        _ => "UNRESOLVED".into(),
    }
}

/// Number of monic irreducible degree-f polynomials over F_p (f <= 9 here).
fn npf(p: u64, f: u64) -> u64 {
    let moebius = |n: u64| -> i64 {
        let (mut n, mut m, mut k) = (n, 1i64, 2u64);
        while k * k <= n {
            if n % k == 0 {
                n /= k;
                if n % k == 0 {
                    return 0;
                }
                m = -m;
            }
            k += 1;
        }
        if n > 1 {
            m = -m;
        }
        m
    };
    let mut total = 0i64;
    for d in 1..=f {
        if f % d == 0 {
            total += moebius(d) * (p as i64).pow((f / d) as u32);
        }
    }
    (total / f as i64) as u64
}

fn divides(parts: &[(u64, u64)], p: u64) -> bool {
    let mut count: BTreeMap<u64, u64> = BTreeMap::new();
    for &(_e, f) in parts {
        *count.entry(f).or_default() += 1;
    }
    count.iter().any(|(&f, &l)| l > npf(p, f))
}

fn vp(m: &BigInt, p: u64) -> u64 {
    let p = BigInt::from(p);
    let mut k = 0;
    let mut rest = m.clone();
    loop {
        let (q, r) = rest.div_rem(&p);
        if !r.is_zero() {
            return k;
        }
        rest = q;
        k += 1;
    }
}

struct Survey {
    cells: BTreeMap<String, BTreeMap<String, u64>>,
}

impl Survey {
    fn new() -> Self {
        Survey { cells: BTreeMap::new() }
    }

    fn record(&mut self, cell: String, shape: String) {
        *self.cells.entry(cell).or_default().entry(shape).or_default() += 1;
    }

    fn dump(&self, title: &str) {
        println!("== {title} ==");
        for (cell, shapes) in &self.cells {
            let body: Vec<String> =
                shapes.iter().map(|(s, n)| format!("{s} x{n}")).collect();
            println!("  {cell} | {}", body.join(" ; "));
        }
        println!();
    }
}

/// p=2 even-a zones: a = 2^va * alpha, b = 2^vb * beta, alpha/beta odd.
fn dyadic_zone(va: u32, alpha_mod: i64, beta_mod: i64, vb_range: std::ops::RangeInclusive<u32>) {
    let mut sv = Survey::new();
    for vb in vb_range {
        for ar in (1..alpha_mod).step_by(2) {
            for br in (1..beta_mod).step_by(2) {
                for da in [0i64, 1, -2] {
                    for db in [0i64, 1] {
                        let alpha = ar + da * alpha_mod;
                        let beta = br + db * beta_mod;
                        let a = BigInt::from(alpha) << va;
                        let b = BigInt::from(beta) << vb;
                        let s = shape(&a, &b, 2);
                        sv.record(
                            format!("vb={vb:<2} al%{alpha_mod}={ar:<2} be%{beta_mod}={br}"),
                            s,
                        );
                    }
                }
            }
        }
    }
    sv.dump(&format!("p=2 va={va} zone"));
}

/// p=3 even-style wild zones: a = 3^va * alpha, b = 3^vb * beta, 3 coprime.
fn triadic_zone(va: u32, alpha_mod: i64, beta_mod: i64, vb_range: std::ops::RangeInclusive<u32>) {
    let mut sv = Survey::new();
    let pow3 = |k: u32| BigInt::from(3u64).pow(k);
    for vb in vb_range {
        for ar in 1..alpha_mod {
            if ar % 3 == 0 {
                continue;
            }
            for br in 1..beta_mod {
                if br % 3 == 0 {
                    continue;
                }
                for da in [0i64, 1, -2] {
                    for db in [0i64, 1] {
                        let alpha = ar + da * alpha_mod;
                        let beta = br + db * beta_mod;
                        let a = BigInt::from(alpha) * pow3(va);
                        let b = BigInt::from(beta) * pow3(vb);
                        let s = shape(&a, &b, 3);
                        sv.record(
                            format!("vb={vb:<2} al%{alpha_mod}={ar:<2} be%{beta_mod}={br}"),
                            s,
                        );
                    }
                }
            }
        }
    }
    sv.dump(&format!("p=3 va={va} zone"));
}

/// nu-family classes mod 3^k: record (nu, mu) alongside the shape.
fn nu_family(title: &str, classes: &[(i64, i64)], modulus: i64, span: std::ops::RangeInclusive<i64>) {
    let mut sv = Survey::new();
    for &(a0, b0) in classes {
        for s in span.clone() {
            for t in span.clone() {
                let a = BigInt::from(a0 + s * modulus);
                let b = BigInt::from(b0 + t * modulus);
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                let nu = vp(&(BigInt::from(1) + &a + &b), 3);
                let om = vp(&(&b - &a - BigInt::from(1)), 3);
                let mu = vp(&(BigInt::from(9) + &a), 3);
                let sh = shape(&a, &b, 3);
                let which = if nu > om { format!("nu={nu}") } else { format!("om={om}") };
                sv.record(format!("({a0},{b0}) mu={mu} {which}"), sh);
            }
        }
    }
    sv.dump(title);
}

/// Deep refinement families: also key by valuations of F and F' at a center.
fn refined_family(
    title: &str,
    classes: &[(i64, i64)],
    modulus: i64,
    center: i64,
    span: std::ops::RangeInclusive<i64>,
) {
    let mut sv = Survey::new();
    for &(a0, b0) in classes {
        for s in span.clone() {
            for t in span.clone() {
                let a = BigInt::from(a0 + s * modulus);
                let b = BigInt::from(b0 + t * modulus);
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                let c = BigInt::from(center);
                let fc = c.pow(9) + &a * &c + &b;
                let dfc = BigInt::from(9) * c.pow(8) + &a;
                let (nv, mv) = (vp(&fc, 3), vp(&dfc, 3));
                let tri = match (2 * mv).cmp(&(nv + 2)) {
                    std::cmp::Ordering::Greater => "2m>n+2",
                    std::cmp::Ordering::Equal => "2m=n+2",
                    std::cmp::Ordering::Less => "2m<n+2",
                };
                let s0 = {
                    let unit: BigInt = &fc / BigInt::from(3u64).pow(nv as u32);
                    let r: BigInt = unit.mod_floor(&BigInt::from(3));
                    if r == BigInt::from(1) { "+" } else { "-" }
                };
                let sh = shape(&a, &b, 3);
                sv.record(
                    format!("({a0},{b0}) nF={nv:<2} mF={mv:<2} {tri} s0={s0}"),
                    sh,
                );
            }
        }
    }
    sv.dump(title);
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let want = |name: &str| args.is_empty() || args.iter().any(|a| a == name);

    if want("dyadic") {
        dyadic_zone(2, 8, 8, 3..=10);
        dyadic_zone(6, 32, 8, 7..=14);
        dyadic_zone(4, 32, 8, 5..=13);
    }
    if want("triadic") {
        triadic_zone(2, 9, 9, 3..=8);
        triadic_zone(6, 9, 9, 7..=10);
        triadic_zone(4, 9, 9, 5..=9);
        triadic_zone(1, 3, 9, 2..=8);
        triadic_zone(3, 9, 9, 4..=8);
        triadic_zone(5, 9, 9, 6..=9);
        triadic_zone(7, 9, 9, 8..=10);
    }
    if want("b-dominant") {
        // 9 va > 8 vb zones (C12/C13 and dyadic A11/A12).
        let mut sv = Survey::new();
        for p in [2u64, 3] {
            for vb in 1..=8u32 {
                let va_min = (8 * vb) / 9 + 1;
                for va in va_min..=(va_min + 2) {
                    for ar in 1..3i64 {
                        for br in 1..3i64 {
                            for (da, db) in [(0i64, 0i64), (1, 1), (2, 1), (1, 2)] {
                                let alpha = if p == 2 { 2 * (ar + da) - 1 } else { ar + 3 * da };
                                let beta = if p == 2 { 2 * (br + db) - 1 } else { br + 3 * db };
                                if alpha % p as i64 == 0 || beta % p as i64 == 0 {
                                    continue;
                                }
                                let a = BigInt::from(alpha) * BigInt::from(p).pow(va);
                                let b = BigInt::from(beta) * BigInt::from(p).pow(vb);
                                let s = shape(&a, &b, p);
                                sv.record(format!("p={p} vb={vb} va={va}"), s);
                            }
                        }
                    }
                }
            }
        }
        sv.dump("b-dominant zones (9va > 8vb)");
    }
    if want("nu-shallow") {
        nu_family(
            "nu shallow mod 9/27/81 (C14-C18, C35-C39)",
            &[
                (0, 2), (3, -1), (3, 2), (3, 5), (6, 2),
                (0, 8), (0, 17), (9, -1), (0, -1), (9, 17), (18, -1), (18, 8),
                (0, 4), (3, 1), (3, 4), (6, 7),
                (0, 10), (0, 19), (9, 1), (0, 1), (9, 10), (18, 10),
            ],
            81,
            0..=8,
        );
    }
    if want("mu3") {
        nu_family(
            "mu=3 nu=4 cubic-residual classes (C19-C22 and omega mirrors)",
            &[
                (18, 62), (99, 224), (180, 143),
                (45, 35), (126, 197), (207, 116),
                (18, 143), (99, 62), (180, 224),
                (45, 116), (126, 35), (207, 197),
                (18, 181), (99, 19), (180, 100),
                (45, 208), (126, 46), (207, 127),
                (18, 100), (99, 181), (180, 19),
                (45, 127), (126, 208), (207, 46),
            ],
            243,
            0..=5,
        );
        refined_family(
            "mu=3 s1=+1 family at center 4 (C24/C25 zone)",
            &[(18, 224), (99, 143), (180, 62)],
            243,
            4,
            -7..=12,
        );
        refined_family(
            "mu=3 s1=+1 omega mirror at center -4 (C51/C54 zone)",
            &[(18, 19), (99, 100), (180, 181)],
            243,
            -4,
            -7..=12,
        );
        refined_family(
            "mu=3 nu=4 nonregular at center -2 (C22 zone)",
            &[(45, 116), (126, 35), (207, 197)],
            243,
            -2,
            -7..=12,
        );
        refined_family(
            "mu=3 om=4 nonregular at center 2 (C50 zone)",
            &[(45, 127), (126, 208), (207, 46)],
            243,
            2,
            -7..=12,
        );
    }
    if want("mu4") {
        nu_family(
            "mu>=4 nu=4 / om=4 shallow (C26/C27 and mirrors)",
            &[
                (72, 8), (234, 89), (153, 170),
                (153, 8), (72, 89), (234, 170),
                (72, 154), (72, 235), (153, 73), (153, 235), (234, 73), (234, 154),
            ],
            243,
            0..=5,
        );
        refined_family(
            "deep nu family at center 1 (C28-C34)",
            &[(72, 170), (153, 89), (234, 8)],
            243,
            1,
            -10..=16,
        );
        refined_family(
            "deep omega family at center -1 (C42-C49)",
            &[(72, 73), (153, 154), (234, 235)],
            243,
            -1,
            -10..=16,
        );
    }
    if want("tame") {
        let mut sv = Survey::new();
        for p in [2u64, 3] {
            for a in -12i64..=12 {
                for b in -12i64..=12 {
                    if a == 0 || b == 0 {
                        continue;
                    }
                    let (ba, bb) = (BigInt::from(a), BigInt::from(b));
                    if p == 3 && a.rem_euclid(3) == 0 {
                        continue;
                    }
                    if p == 2 && (a.rem_euclid(2), b.rem_euclid(2)) == (0, 0) {
                        continue;
                    }
                    let s = shape(&ba, &bb, p);
                    sv.record(
                        format!("p={p} a%{p2}={ar} b%{p2}={br}",
                            p2 = if p == 2 { 4 } else { 3 },
                            ar = a.rem_euclid(if p == 2 { 4 } else { 3 }),
                            br = b.rem_euclid(if p == 2 { 4 } else { 3 })),
                        s,
                    );
                }
            }
        }
        sv.dump("tame / odd-a p=2 and 3-coprime-a p=3 (A1-A10, C1-C6)");
    }
    if want("probe") {
        // Exact pair listing for small odd-a p=2 inputs; spots any engine
        // failure or shape outside the expected odd-a repertoire.
        for a in (-25i64..=25).step_by(2) {
            for b in [-12i64, -8, -4, 4, 8, 12, 16, -16, 24, 32, -32, 48, 64] {
                let (ba, bb) = (BigInt::from(a), BigInt::from(b));
                let s = shape(&ba, &bb, 2);
                if s.contains("UNRESOLVED") || s.contains("2^2") || s.contains("ERR") {
                    println!("probe a={a} b={b}: {s}");
                }
            }
        }
    }
}
