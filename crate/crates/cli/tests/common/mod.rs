#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn manifest_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

/// Runs the binary from the crate directory, so fixture paths are relative.
pub fn sdconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdconv"))
        .args(args)
        .current_dir(manifest_dir())
        .env_remove("SDCONV_SEED")
        .output()
        .expect("spawn sdconv")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 stdout")
}

/// Golden file name and the arguments producing it.
pub const GOLDEN: &[(&str, &[&str])] = &[
    ("verify_tiny.txt", &["verify", "tests/data/tiny.net", "--seed", "7"]),
    ("verify_artgan.txt", &["verify", "fixtures/artgan.net", "--seed", "3"]),
    ("verify_grid.txt", &["verify", "--grid", "--seed", "1"]),
    ("analyze_tiny.csv", &["analyze", "tests/data/tiny.net"]),
    ("analyze_tiny.md", &["analyze", "tests/data/tiny.net", "--format", "markdown"]),
    ("analyze_dcgan.csv", &["analyze", "fixtures/dcgan.net"]),
    ("analyze_dcgan.md", &["analyze", "fixtures/dcgan.net", "--format", "markdown"]),
    ("simulate_tiny.csv", &["simulate", "tests/data/tiny.net"]),
    ("simulate_tiny_grid2d.csv", &["simulate", "tests/data/tiny.net", "--arch", "grid2d", "--modes", "dense,awsparse"]),
    ("simulate_dcgan.md", &["simulate", "fixtures/dcgan.net", "--format", "markdown"]),
    ("simulate_dcgan_line_skip.csv", &["simulate", "fixtures/dcgan.net", "--line-skip"]),
    ("simulate_dcgan_line_skip.md", &["simulate", "fixtures/dcgan.net", "--line-skip", "--format", "markdown"]),
];

pub fn golden_path(name: &str) -> PathBuf {
    manifest_dir().join("tests/golden").join(name)
}

/// Compares one golden case; with `SDCONV_BLESS=1` rewrites the file instead.
pub fn check_golden(name: &str, args: &[&str]) -> Result<(), String> {
    let out = sdconv(args);
    if !out.status.success() {
        return Err(format!("{name}: exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    let got = stdout(&out);
    let path = golden_path(name);
    if std::env::var_os("SDCONV_BLESS").is_some() {
        std::fs::write(&path, &got).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let want = std::fs::read_to_string(&path).map_err(|e| format!("{name}: {e}"))?;
    if got != want {
        let line = got.lines().zip(want.lines()).position(|(a, b)| a != b).map_or(0, |i| i + 1);
        return Err(format!("{name}: output differs from golden file (first at line {line})"));
    }
    Ok(())
}
