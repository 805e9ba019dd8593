#![allow(dead_code)]

use std::fmt::Write;
use std::path::{Path, PathBuf};

pub const N_ITEMS: usize = 16;

pub fn header() -> String {
    let items: Vec<String> = (1..=N_ITEMS).map(|k| format!("item_{k}")).collect();
    format!("participant_id,condition,instrument,{}\n", items.join(","))
}

pub fn row(out: &mut String, id: &str, condition: &str, ratings: &[u8; N_ITEMS]) {
    let items: Vec<String> = ratings.iter().map(u8::to_string).collect();
    writeln!(out, "{id},{condition},SSQ,{}", items.join(",")).unwrap();
}

/// Participant-specific SSQ ratings that leave items 5, 6, 14 and 15 (the
/// nausea-only symptoms, zero-based) at a known level.
fn base(i: usize) -> [u8; N_ITEMS] {
    let mut r = [0u8; N_ITEMS];
    for (k, v) in r.iter_mut().enumerate() {
        *v = ((i * 7 + k * 3) % 5).min(4) as u8;
    }
    r[5] = 2;
    r[6] = 2;
    r[14] = 1;
    r[15] = 1 + (i % 3) as u8;
    r
}

/// n participants; CP nausea (raw) is Normal nausea minus 5 for everyone.
/// With `skewed`, the last three participants drop a further item to zero
/// so the differences are lopsided rather than constant.
pub fn planted_nausea(n: usize, skewed: bool) -> String {
    let mut s = header();
    for i in 0..n {
        let id = format!("P{:02}", i + 1);
        let mut normal = base(i);
        if skewed && i + 3 >= n {
            normal[15] = 4;
        }
        let mut cp = normal;
        cp[5] = 0;
        cp[6] = 0;
        cp[14] = 0;
        if skewed && i + 3 >= n {
            cp[15] = 0;
        }
        row(&mut s, &id, "CP", &cp);
        row(&mut s, &id, "Normal", &normal);
    }
    s
}

/// Every CP questionnaire is all zeros; Normal ratings vary.
pub fn zero_cp(n: usize) -> String {
    let mut s = header();
    for i in 0..n {
        let id = format!("P{:02}", i + 1);
        row(&mut s, &id, "CP", &[0; N_ITEMS]);
        row(&mut s, &id, "Normal", &base(i));
    }
    s
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

pub fn run(args: &[&str]) -> anyhow::Result<String> {
    vrcockpit::execute(std::iter::once("vrcockpit").chain(args.iter().copied()))
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
