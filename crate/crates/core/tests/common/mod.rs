#![allow(dead_code)]

use std::path::PathBuf;

use sskr_forge_core::sskr::{load, Sskr};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn model(name: &str) -> Sskr {
    load(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub const MODELS: &[&str] = &[
    "bucky.sskr.json",
    "bucky_vj.sskr.json",
    "bucky_extended.sskr.json",
    "beta_contact.sskr.json",
    "sir.sskr.json",
    "hospital.sskr.json",
];

/// Compact rendering of an MRM row: `0`, `null`, `1`, or comma-joined ids.
pub fn grid(s: &Sskr) -> Vec<Vec<String>> {
    use sskr_forge_core::sskr::Cell;
    s.mrm
        .cells
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| match c {
                    Cell::Zero => "0".to_string(),
                    Cell::Forbidden => "null".to_string(),
                    Cell::Present(ids) if ids.is_empty() => "1".to_string(),
                    Cell::Present(ids) => ids.join(","),
                })
                .collect()
        })
        .collect()
}

pub fn rows(text: &[&str]) -> Vec<Vec<String>> {
    text.iter().map(|r| r.split_whitespace().map(String::from).collect()).collect()
}
