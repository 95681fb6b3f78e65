//! Compare engine shapes against a JSON map of independently computed shapes.
//!
//! Usage: crosscheck <shapes.json>
//! Keys are "a,b,p"; values are shape strings like "[1,1^2,1^6]".

use std::collections::BTreeMap;

use nonic::polygon::IntPoly;
use nonic::{analyze, complete_analysis, AnalysisStatus, ResolveOptions};
use num_bigint::BigInt;

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

fn normalize(shape: &str) -> String {
    // Parse "[1,1^2,2]" into parts, re-sort by (f, e), re-render.
    let inner = shape.trim().trim_start_matches('[').trim_end_matches(']');
    let mut parts: Vec<(u64, u64)> = inner
        .split(',')
        .map(|t| {
            let t = t.trim();
            match t.split_once('^') {
                Some((f, e)) => (f.parse().unwrap(), e.parse().unwrap()),
                None => (t.parse().unwrap(), 1),
            }
        })
        .collect();
    parts.sort();
    let body: Vec<String> = parts
        .iter()
        .map(|&(f, e)| if e == 1 { f.to_string() } else { format!("{f}^{e}") })
        .collect();
    format!("[{}]", body.join(","))
}

fn main() {
    let path = std::env::args().nth(1).expect("usage: crosscheck <shapes.json>");
    let text = std::fs::read_to_string(&path).expect("read shapes file");
    let table: BTreeMap<String, String> = serde_json::from_str(&text).expect("parse json");

    let (mut agree, mut mismatch, mut order2, mut unresolved, mut errors) = (0, 0, 0, 0, 0);
    for (key, expected) in &table {
        let mut it = key.split(',');
        let a: i64 = it.next().unwrap().parse().unwrap();
        let b: i64 = it.next().unwrap().parse().unwrap();
        let p: u64 = it.next().unwrap().parse().unwrap();
        let f = trinomial(a, b);
        let mut analysis = match analyze(&f, p, &ladder_roots(a, b, p)) {
            Ok(an) => an,
            Err(e) => {
                errors += 1;
                println!("ERROR     a={a} b={b} p={p}: {e}");
                continue;
            }
        };
        if matches!(analysis.status(), AnalysisStatus::NeedsOrder2) {
            order2 += 1;
            complete_analysis(&f, &mut analysis, &ResolveOptions::default());
        }
        match analysis.status() {
            AnalysisStatus::Resolved => {
                let got = analysis.shape().unwrap().to_string();
                if got == normalize(expected) {
                    agree += 1;
                } else {
                    mismatch += 1;
                    println!("MISMATCH  a={a} b={b} p={p}: engine {got}, table {expected}");
                }
            }
            AnalysisStatus::NeedsOrder2 => unreachable!("deep mode leaves no pending tasks"),
            AnalysisStatus::Unresolved => {
                unresolved += 1;
                let msg = analysis
                    .tasks
                    .iter()
                    .find_map(|t| match &t.status {
                        nonic::ore::TaskStatus::Unresolved(m) => Some(m.as_str()),
                        _ => None,
                    })
                    .unwrap_or("");
                println!("UNRESOLVED a={a} b={b} p={p}: {msg}");
            }
        }
    }
    println!(
        "total {}: agree {agree}, mismatch {mismatch}, via-order2 {order2}, unresolved {unresolved}, errors {errors}",
        table.len()
    );
}
