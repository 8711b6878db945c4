#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_quorate");

pub const MAJORITY: &str = r#"
horizon = 3

[game]
rule = "majority"

[simulation]
samples = 4000
seed = 11

[[sensors]]
id = 1
q = 0.3
initial_state = 0
pre = [[0.5, 0.5], [0.5, 0.5]]
post = [[0.1, 0.9], [0.1, 0.9]]

[[sensors]]
id = 2
q = 0.25
initial_state = 0
window_future = 1
pre = [[0.6, 0.4], [0.6, 0.4]]
post = [[0.2, 0.8], [0.2, 0.8]]

[[sensors]]
id = 3
q = 0.35
initial_state = 0
window_past = 1
pre = [[0.5, 0.5], [0.5, 0.5]]
post = [[0.15, 0.85], [0.15, 0.85]]
"#;

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn quorate(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}
