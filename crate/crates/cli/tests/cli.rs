use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ccrs_core::corpus;
use tempfile::TempDir;

fn ccrs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccrs")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn put(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const AND: &str = "module g(input a, input b, output y); assign y = a & b; endmodule\n";
const OR: &str = "module g(input a, input b, output y); assign y = a | b; endmodule\n";

#[test]
fn convert_then_validate_emit_and_render() {
    let dir = TempDir::new().unwrap();
    let src = put(&dir, "adder.v", corpus::get("full_adder").unwrap().source);
    let doc = dir.path().join("adder.ccrs.json");
    let out = ccrs(&["convert", s(&src), "-o", s(&doc)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&ccrs(&["validate", s(&doc)])), 0);

    let v = dir.path().join("back.v");
    assert_eq!(code(&ccrs(&["emit", s(&doc), "-o", s(&v), "--self-check"])), 0);
    assert!(std::fs::read_to_string(&v).unwrap().contains("module full_adder"));

    let svg1 = dir.path().join("a.svg");
    let svg2 = dir.path().join("b.svg");
    assert_eq!(code(&ccrs(&["render", s(&doc), "-o", s(&svg1), "--clock-regions", "--net-names"])), 0);
    assert_eq!(code(&ccrs(&["render", s(&doc), "-o", s(&svg2), "--clock-regions", "--net-names"])), 0);
    assert_eq!(std::fs::read(&svg1).unwrap(), std::fs::read(&svg2).unwrap());
}

#[test]
fn syntax_error_exits_one_with_a_diagnostic() {
    let dir = TempDir::new().unwrap();
    let bad = put(&dir, "bad.v", "module m(input a, output y); assign y = ; endmodule");
    let out = ccrs(&["convert", s(&bad)]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.lines().any(|l| l.contains("error[E-")), "{err}");
}

#[test]
fn lowering_error_exits_two() {
    let dir = TempDir::new().unwrap();
    let src = put(&dir, "m.v", AND);
    assert_eq!(code(&ccrs(&["convert", s(&src), "--top", "missing"])), 2);
}

#[test]
fn unreadable_input_exits_ten() {
    assert_eq!(code(&ccrs(&["convert", "/nonexistent/x.v"])), 10);
    assert_eq!(code(&ccrs(&["emit", "/nonexistent/x.ccrs.json"])), 10);
}

#[test]
fn invalid_document_exits_two() {
    let dir = TempDir::new().unwrap();
    let src = put(&dir, "m.v", AND);
    let out = ccrs(&["convert", s(&src)]);
    let mut doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    doc["lwcs"].as_array_mut().unwrap().pop();
    let broken = put(&dir, "broken.ccrs.json", &doc.to_string());
    assert_eq!(code(&ccrs(&["validate", s(&broken)])), 2);
    assert_eq!(code(&ccrs(&["emit", s(&broken)])), 2);
    assert_eq!(code(&ccrs(&["render", s(&broken)])), 2);
    let garbage = put(&dir, "garbage.ccrs.json", "{\"not\": \"a document\"}");
    assert_eq!(code(&ccrs(&["validate", s(&garbage)])), 2);
}

#[test]
fn bad_flags_exit_eleven() {
    let dir = TempDir::new().unwrap();
    let src = put(&dir, "m.v", AND);
    let doc = dir.path().join("m.ccrs.json");
    assert_eq!(code(&ccrs(&["convert", s(&src), "-o", s(&doc)])), 0);
    assert_eq!(code(&ccrs(&["render", s(&doc), "--scale", "0"])), 11);
    assert_eq!(code(&ccrs(&["render", s(&doc), "--scale", "-1"])), 11);
    assert_eq!(code(&ccrs(&["frobnicate"])), 11);
    assert_eq!(code(&ccrs(&["--help"])), 0);
}

#[test]
fn check_exit_codes() {
    let dir = TempDir::new().unwrap();
    let and = put(&dir, "and.v", AND);
    let or = put(&dir, "or.v", OR);
    let doc = dir.path().join("and.ccrs.json");
    assert_eq!(code(&ccrs(&["convert", s(&and), "-o", s(&doc)])), 0);
    assert_eq!(code(&ccrs(&["check", s(&and), s(&doc)])), 0);

    let out = ccrs(&["check", s(&and), s(&or)]);
    assert_eq!(code(&out), 3);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("mismatch at cycle 0 on y"), "{table}");

    // 24 input bits over 4 cycles cannot be enumerated within a budget of 16.
    let wide = "module w(input clk, input [22:0] d, output reg [22:0] q); always @(posedge clk) q <= d; endmodule\n";
    let w = put(&dir, "w.v", wide);
    assert_eq!(code(&ccrs(&["check", s(&w), s(&w), "--budget", "16", "--vectors", "20"])), 4);
}

#[test]
fn check_reports_interface_mismatch_as_invalid() {
    let dir = TempDir::new().unwrap();
    let and = put(&dir, "and.v", AND);
    let other = put(&dir, "n.v", "module g(input a, output y); assign y = ~a; endmodule\n");
    assert_eq!(code(&ccrs(&["check", s(&and), s(&other)])), 2);
}

#[test]
fn commands_are_idempotent() {
    let dir = TempDir::new().unwrap();
    let src = put(&dir, "c.v", corpus::get("traffic_light").unwrap().source);
    let first = ccrs(&["convert", s(&src)]);
    let second = ccrs(&["convert", s(&src)]);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stderr, second.stderr);
}

#[test]
fn serve_reports_bind_failure() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    assert_eq!(code(&ccrs(&["serve", "--port", &port])), 12);
}
