//! Shared helpers for the CLI integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use baffle_cli::fixtures::write_phantom_case;
use baffle_cli::pipeline::HemoSpec;
use baffle_core::phantom::VentricleParams;

pub const PATIENT_1: HemoSpec = HemoSpec {
    cardiac_output: 3.89,
    map: 64.0,
};

/// Coarser phantom that plans in a few seconds.
pub fn small_params() -> VentricleParams {
    VentricleParams {
        segments: 64,
        lv_rings: 10,
        rv_rings: 80,
        ao_rings: 10,
        ..VentricleParams::default()
    }
}

pub fn small_case(dir: &Path, a_target: f64) -> PathBuf {
    write_phantom_case(dir, small_params(), a_target, &PATIENT_1).expect("write phantom case")
}

pub fn baffle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_baffle"))
        .args(args)
        .env("BAFFLE_LOG", "error")
        .output()
        .expect("run baffle")
}

pub fn plan(config: &Path, out: &Path) -> Output {
    baffle(&["plan", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Columns of a CSV with a header row, by name.
pub fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}
