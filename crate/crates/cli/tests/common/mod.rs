//! Helpers for running the `inctele` binary against the fixtures in `tests/data`.

#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

pub fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", name].iter().collect();
    path.to_string_lossy().into_owned()
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}):\n{}", self.stdout))
    }

    pub fn derived(&self) -> Value {
        self.json()["derived"].clone()
    }

    pub fn failed_checks(&self) -> Vec<String> {
        self.json()["checks"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|c| c["passed"] == false)
            .map(|c| c["name"].as_str().unwrap().to_owned())
            .collect()
    }
}

fn finish(out: Output) -> Run {
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn command(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_inctele"));
    cmd.args(args.iter().map(|a| a.strip_prefix('@').map_or_else(|| a.to_string(), fixture)));
    cmd
}

/// Runs the binary; arguments starting with `@` name fixtures.
pub fn run(args: &[&str]) -> Run {
    finish(command(args).output().expect("binary runs"))
}

/// Invocations covering every subcommand, used for determinism checks.
pub const SUITE: &[&[&str]] = &[
    &["inclusion-info", "@scalars_m2.json"],
    &["inclusion-info", "@scalars_in_direct_sum.json"],
    &["basis", "@scalars_m3.json", "--family", "weyl", "--verify"],
    &["basis", "@diagonal_m2.json", "--family", "characters", "--verify"],
    &["basis", "@blocks_m4.json", "--family", "homogeneous"],
    &["teleport", "standard", "@scalars_m2.json"],
    &["teleport", "direct-sum", "@scalars_in_direct_sum.json"],
    &["teleport", "unbiased", "@diagonal_m2.json"],
    &["teleport", "werner", "@diagonal_m2.json", "--family", "shifts", "--unitary", "shift", "--density", "@density_diag.json", "--extract"],
    &["graph", "colour-factor", "@scalars_m2.json"],
    &["graph", "colour-basis", "@diagonal_m3.json"],
    &["graph", "bounds", "@ampliation_m4.json"],
];

/// Runs the whole suite concurrently, returning stdout of each invocation in order.
pub fn run_suite(extra: &[&str]) -> Vec<(i32, String)> {
    let children: Vec<_> = SUITE
        .iter()
        .map(|args| {
            let mut all: Vec<&str> = extra.to_vec();
            all.extend_from_slice(args);
            command(&all)
                .stdout(std::process::Stdio::piped())
                .stderr(std::process::Stdio::null())
                .spawn()
                .expect("binary starts")
        })
        .collect();
    children
        .into_iter()
        .map(|c| {
            let run = finish(c.wait_with_output().unwrap());
            (run.code, run.stdout)
        })
        .collect()
}
