//! Helpers shared by the integration test targets.

#![allow(dead_code)]

pub const REFERENCE: &str = include_str!("../oracle/reference_values.txt");

pub struct WelchCase {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

fn numbers(s: &str) -> Vec<f64> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().unwrap_or_else(|_| panic!("bad number `{v}`")))
        .collect()
}

/// The randomized `(a, b, t, df, p)` pairs of the frozen statistics oracle.
pub fn welch_cases() -> Vec<WelchCase> {
    REFERENCE
        .lines()
        .filter_map(|l| l.trim().strip_prefix("(["))
        .map(|l| {
            let l = l.trim_end_matches(',').trim_end_matches(')');
            let (a, rest) = l.split_once("], [").unwrap();
            let (b, stats) = rest.split_once("], ").unwrap();
            let s = numbers(stats);
            WelchCase {
                a: numbers(a),
                b: numbers(b),
                t: s[0],
                df: s[1],
                p: s[2],
            }
        })
        .collect()
}

/// `t df p` for a = [1..5], b = [2..6].
pub fn welch_simple() -> (f64, f64, f64) {
    let line = REFERENCE.lines().find(|l| l.starts_with("welch [1..5]")).unwrap();
    let v: Vec<f64> = line.split(':').nth(1).unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
    (v[0], v[1], v[2])
}
