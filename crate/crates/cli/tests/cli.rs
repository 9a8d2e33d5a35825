use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use micropvs_server::jsonrpc;
use serde_json::json;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn copy_fixtures() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("proofs")).unwrap();
    for e in std::fs::read_dir(fixtures()).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|e| e == "pvs") {
            std::fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
        }
    }
    for e in std::fs::read_dir(fixtures().join("proofs")).unwrap() {
        let p = e.unwrap().path();
        std::fs::copy(&p, dir.path().join("proofs").join(p.file_name().unwrap())).unwrap();
    }
    dir
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["micropvs"];
    argv.extend_from_slice(args);
    let code = micropvs::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn check_clean_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "h.pvs", "h: THEORY\nBEGIN\n  half(d: int): real = 1 / d\nEND h\n");
    let (code, out, _) = run(&["check", &f]);
    assert_eq!(code, 0);
    assert!(out.contains("0 errors, 1 TCC\n"), "{out}");
    assert!(out.contains("h.half_TCC1 (nonzero-divisor)"), "{out}");
}

#[test]
fn check_type_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "e.pvs", "e: THEORY\nBEGIN\n  c: int = TRUE\nEND e\n");
    let (code, out, _) = run(&["check", &f]);
    assert_eq!(code, 1);
    let first = out.lines().next().unwrap();
    assert!(first.starts_with(&format!("{f}:3:12: error: ")), "{first}");
    assert!(out.contains("1 error, 0 TCCs"), "{out}");
}

#[test]
fn check_missing_file_is_usage_failure() {
    let (code, _, err) = run(&["check", "/nonexistent/x.pvs"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error: "));
}

#[test]
fn bad_flag_is_usage_failure() {
    let (code, _, err) = run(&["check", "--frobnicate"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"), "{err}");
    assert_eq!(run(&["serve", "--stdio", "--port", "1"]).0, 2);
}

#[test]
fn check_matches_published_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let text = "e: THEORY\nBEGIN\n  c: int = TRUE\n  d: bool = 1 + 2\n  f(x: int): int = y\nEND e\n";
    let f = write(dir.path(), "e.pvs", text);
    let (_, out, _) = run(&["check", &f]);
    let batch: Vec<String> = out.lines().filter(|l| l.starts_with(&format!("{f}:")) && !l.starts_with(&format!("{f}: "))).map(str::to_owned).collect();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let published = rt.block_on(async {
        let cfg = micropvs_server::Config { debounce: Duration::from_millis(5), materialize_prelude: false, ..Default::default() };
        let (mut c, _s) = micropvs_server::client::Client::in_memory(cfg);
        c.initialize(json!({})).await.unwrap();
        c.open("file:///x/e.pvs", 1, text).await;
        c.notification("textDocument/publishDiagnostics").await
    });
    let interactive: Vec<String> = published["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| {
            let sev = ["", "error", "warning", "information"][d["severity"].as_u64().unwrap() as usize];
            format!(
                "{f}:{}:{}: {sev}: {}",
                d["range"]["start"]["line"].as_u64().unwrap() + 1,
                d["range"]["start"]["character"].as_u64().unwrap() + 1,
                d["message"].as_str().unwrap()
            )
        })
        .collect();
    assert_eq!(batch.len(), 3, "{batch:?}");
    assert_eq!(batch, interactive);
}

#[test]
fn prove_fixtures_and_idempotence() {
    let dir = copy_fixtures();
    for name in ["arith.pvs", "logic.pvs", "geometry.pvs"] {
        let f = dir.path().join(name).display().to_string();
        let (code, out, _) = run(&["prove", &f]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains(" 0 unfinished"), "{out}");
        let (code2, out2, _) = run(&["prove", &f]);
        assert_eq!((code, &out), (code2, &out2));
    }
    let sidecar = std::fs::read_to_string(dir.path().join(".pvsstatus.json")).unwrap();
    assert!(sidecar.contains("\"arith.ratio_TCC1\": \"proved\""), "{sidecar}");
}

#[test]
fn prove_with_failing_script() {
    let dir = copy_fixtures();
    std::fs::write(
        dir.path().join("proofs/logic.distrib.proof.json"),
        "{\"theory\": \"logic\", \"formula\": \"distrib\", \"commands\": [\"flatten\", \"inst 1 \\\"x\\\"\"]}\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("proofs/logic.de_morgan.proof.json"), "not json").unwrap();
    let f = dir.path().join("logic.pvs").display().to_string();
    let (code, out, _) = run(&["prove", &f]);
    assert_eq!(code, 1);
    assert!(out.contains("logic.distrib: unfinished (step 1 (flatten)"), "{out}");
    assert!(out.contains("logic.de_morgan: unfinished (bad script"), "{out}");
    assert!(out.contains("logic.excluded_middle: proved"), "{out}");
    assert!(out.ends_with("3 proved, 2 unfinished\n"), "{out}");
}

#[test]
fn prove_without_scripts() {
    let dir = copy_fixtures();
    let f = dir.path().join("logic.pvs").display().to_string();
    let (code, out, _) = run(&["prove", &f, "--scripts", &dir.path().join("none").display().to_string()]);
    assert_eq!(code, 1);
    assert!(out.ends_with("0 proved, 5 unfinished\n"), "{out}");
}

#[test]
fn eval_cases() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "v.pvs",
        "v: THEORY\nBEGIN\n  spin(n: nat): RECURSIVE nat = spin(n + 1) MEASURE n\n  sq(n: int): int = n * n\nEND v\n",
    );
    assert_eq!(run(&["eval", &f, "-e", "1+2*3"]).1, "7\n");
    assert_eq!(run(&["eval", &f, "-e", "sq(12)"]).1, "144\n");
    let (code, out, _) = run(&["eval", &f, "-e", "spin(0)", "--fuel", "10000"]);
    assert_eq!(code, 1);
    assert!(out.contains("fuel exhausted"), "{out}");
    let (code, out, _) = run(&["eval", &f, "-e", "1 + TRUE"]);
    assert_eq!(code, 1);
    assert!(out.starts_with("error: type error"), "{out}");
}

#[test]
fn index_dump() {
    let dir = copy_fixtures();
    let (code, out, _) = run(&["index", &dir.path().display().to_string()]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    for n in ["ratio", "clamp_TCC1", "manhattan", "abs", "de_morgan"] {
        assert!(names.contains(&n), "{n}");
    }
}

fn frame(v: serde_json::Value) -> Vec<u8> {
    jsonrpc::encode_value(&v)
}

fn read_frame(r: &mut impl Read) -> serde_json::Value {
    let mut header = Vec::new();
    let mut b = [0u8];
    while !header.ends_with(b"\r\n\r\n") {
        r.read_exact(&mut b).unwrap();
        header.push(b[0]);
    }
    let h = String::from_utf8(header).unwrap();
    let n: usize = h.trim().strip_prefix("Content-Length: ").unwrap().parse().unwrap();
    let mut body = vec![0; n];
    r.read_exact(&mut body).unwrap();
    serde_json::from_slice(&body).unwrap()
}

#[test]
fn serve_stdio_handshake() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_micropvs"))
        .args(["serve", "--stdio"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut stdout = child.stdout.take().unwrap();
    stdin.write_all(&frame(json!({"jsonrpc": "2.0", "id": 1, "method": "initialize", "params": {"capabilities": {}}}))).unwrap();
    let r = read_frame(&mut stdout);
    assert_eq!(r["id"], 1);
    assert_eq!(r["result"]["capabilities"]["renameProvider"], true);
    stdin.write_all(&frame(json!({"jsonrpc": "2.0", "id": 2, "method": "shutdown"}))).unwrap();
    assert_eq!(read_frame(&mut stdout)["id"], 2);
    stdin.write_all(&frame(json!({"jsonrpc": "2.0", "method": "exit"}))).unwrap();
    assert_eq!(child.wait().unwrap().code(), Some(0));
}

#[test]
fn serve_port_in_use() {
    let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = l.local_addr().unwrap().port().to_string();
    let out = Command::new(env!("CARGO_BIN_EXE_micropvs")).args(["serve", "--port", &port]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn serve_over_tcp() {
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let mut child = Command::new(env!("CARGO_BIN_EXE_micropvs")).args(["serve", "--port", &port.to_string()]).spawn().unwrap();
    let mut stream = None;
    for _ in 0..100 {
        if let Ok(s) = std::net::TcpStream::connect(("127.0.0.1", port)) {
            stream = Some(s);
            break;
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    let mut s = stream.expect("server listening");
    s.write_all(&frame(json!({"jsonrpc": "2.0", "id": 1, "method": "initialize", "params": {}}))).unwrap();
    assert!(read_frame(&mut s)["result"]["capabilities"].is_object());
    s.write_all(&frame(json!({"jsonrpc": "2.0", "id": 2, "method": "shutdown"}))).unwrap();
    read_frame(&mut s);
    s.write_all(&frame(json!({"jsonrpc": "2.0", "method": "exit"}))).unwrap();
    assert_eq!(child.wait().unwrap().code(), Some(0));
}

#[cfg(unix)]
#[test]
fn serve_exits_cleanly_on_sigint() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_micropvs"))
        .args(["serve", "--stdio"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut stdout = child.stdout.take().unwrap();
    stdin.write_all(&frame(json!({"jsonrpc": "2.0", "id": 1, "method": "initialize", "params": {}}))).unwrap();
    read_frame(&mut stdout);
    let status = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(status.success());
    assert_eq!(child.wait().unwrap().code(), Some(0));
}
