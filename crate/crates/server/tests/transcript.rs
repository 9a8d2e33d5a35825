use std::time::Duration;

use micropvs_server::client::Client;
use micropvs_server::jsonrpc::{self, Id};
use micropvs_server::Config;
use serde_json::{json, Value};

const URI: &str = "file:///mem/a.pvs";

const CLEAN: &str = "a: THEORY
BEGIN
  double(n: int): int = n * 2
  point: TYPE = [# x: int, y: int #]
  norm1(p: point): real = abs(p`x) + abs(p`y)
  half(d: int): real = IF d = 0 THEN 0 ELSE 10 / d ENDIF
  t1: THEOREM FORALL (n: int): double(n) = n * 2
  l1: LEMMA (TRUE AND TRUE) IMPLIES TRUE
END a
";

fn config() -> Config {
    Config { debounce: Duration::from_millis(20), materialize_prelude: false, ..Config::default() }
}

async fn started() -> Client {
    let (mut c, _server) = Client::in_memory(config());
    c.initialize(json!({"processId": null, "rootUri": null, "capabilities": {}})).await.unwrap();
    c
}

async fn opened(text: &str) -> Client {
    let mut c = started().await;
    c.open(URI, 1, text).await;
    let p = c.notification("textDocument/publishDiagnostics").await;
    assert_eq!(p["version"], 1);
    c
}

#[tokio::test]
async fn lifecycle() {
    let (mut c, server) = Client::in_memory(config());
    let e = c.request("textDocument/hover", json!({})).await.unwrap_err();
    assert_eq!(e.code, jsonrpc::SERVER_NOT_INITIALIZED);
    let caps = c.initialize(json!({"capabilities": {}})).await.unwrap();
    assert_eq!(caps["capabilities"]["hoverProvider"], true);
    let e = c.request("initialize", json!({"capabilities": {}})).await.unwrap_err();
    assert_eq!(e.code, jsonrpc::INVALID_REQUEST);
    let e = c.request("no/such", json!({})).await.unwrap_err();
    assert_eq!(e.code, jsonrpc::METHOD_NOT_FOUND);
    c.shutdown().await.unwrap();
    assert_eq!(server.await.unwrap().unwrap(), micropvs_server::Exit::Clean);
}

#[tokio::test]
async fn exit_without_shutdown_is_abrupt() {
    let (mut c, server) = Client::in_memory(config());
    c.initialize(json!({})).await.unwrap();
    c.notify("exit", Value::Null).await;
    assert_eq!(server.await.unwrap().unwrap(), micropvs_server::Exit::Abrupt);
}

#[tokio::test]
async fn malformed_json_gets_parse_error() {
    let mut c = started().await;
    c.send_raw(&jsonrpc::encode_frame(b"{not json")).await.unwrap();
    let m = c.next_message().await.unwrap();
    assert_eq!(m["error"]["code"], jsonrpc::PARSE_ERROR);
    assert_eq!(m["id"], Value::Null);
}

#[tokio::test]
async fn every_request_gets_one_response() {
    let mut c = opened(CLEAN).await;
    let mut ids = Vec::new();
    for i in 0..20 {
        let (m, p) = match i % 4 {
            0 => ("textDocument/hover", json!({"textDocument": {"uri": URI}, "position": {"line": 4, "character": 26}})),
            1 => ("textDocument/codeLens", json!({"textDocument": {"uri": URI}})),
            2 => ("pvs/evaluate", json!({"uri": URI, "expr": "double(21)"})),
            _ => ("bogus/method", json!({})),
        };
        ids.push(c.send_request(m, p).await);
    }
    c.notify("textDocument/didSave", json!({})).await;
    let mut seen = Vec::new();
    while seen.len() < ids.len() {
        let m = c.next_message().await.unwrap();
        if m.get("method").is_none() {
            seen.push(serde_json::from_value::<Id>(m["id"].clone()).unwrap());
        }
    }
    seen.sort_by_key(|i| i.to_string());
    let mut want = ids.clone();
    want.sort_by_key(|i| i.to_string());
    assert_eq!(seen, want);
    tokio::time::sleep(Duration::from_millis(50)).await;
    assert!(c.drain().iter().all(|m| m.get("id").is_none()));
}

#[tokio::test]
async fn diagnostics_follow_edits() {
    let mut c = opened(CLEAN).await;
    let broken = CLEAN.replace("END a", "  x : END a");
    c.change(URI, 2, &broken).await;
    let p = c.notification("textDocument/publishDiagnostics").await;
    assert_eq!(p["version"], 2);
    let d = p["diagnostics"].as_array().unwrap();
    assert_eq!(d.len(), 1, "{d:?}");
    assert_eq!(d[0]["source"], "parser");
    assert_eq!(d[0]["severity"], 1);
    c.change(URI, 3, CLEAN).await;
    let p = c.notification("textDocument/publishDiagnostics").await;
    assert_eq!(p["version"], 3);
    assert_eq!(p["diagnostics"], json!([]));
}

#[tokio::test]
async fn stale_change_is_ignored() {
    let mut c = opened(CLEAN).await;
    c.change(URI, 5, CLEAN).await;
    c.change(URI, 4, "garbage").await;
    let p = c.notification("textDocument/publishDiagnostics").await;
    assert_eq!(p["version"], 5);
    assert_eq!(p["diagnostics"], json!([]));
}

#[tokio::test]
async fn incremental_changes_apply() {
    let mut c = opened(CLEAN).await;
    let p = json!({"textDocument": {"uri": URI, "version": 2},
        "contentChanges": [{"range": {"start": {"line": 2, "character": 2}, "end": {"line": 2, "character": 8}}, "text": "twice"}]});
    c.notify("textDocument/didChange", p).await;
    let p = c.notification("textDocument/publishDiagnostics").await;
    let msgs: Vec<&str> = p["diagnostics"].as_array().unwrap().iter().map(|d| d["message"].as_str().unwrap()).collect();
    assert!(msgs.iter().any(|m| m.contains("double")), "{msgs:?}");
}

#[tokio::test]
async fn hover_definition_completion_lens() {
    let mut c = opened(CLEAN).await;
    let h = c
        .request("textDocument/hover", json!({"textDocument": {"uri": URI}, "position": {"line": 4, "character": 26}}))
        .await
        .unwrap();
    let v = h["contents"]["value"].as_str().unwrap();
    assert!(v.starts_with("**function (prelude)**"), "{v}");
    assert!(v.contains("```pvs\nabs(x: real): real"), "{v}");
    let h = c
        .request("textDocument/hover", json!({"textDocument": {"uri": URI}, "position": {"line": 1, "character": 1}}))
        .await
        .unwrap();
    assert_eq!(h, Value::Null);
    let d = c
        .request("textDocument/definition", json!({"textDocument": {"uri": URI}, "position": {"line": 6, "character": 31}}))
        .await
        .unwrap();
    assert_eq!(d["uri"], URI);
    assert_eq!(d["range"]["start"], json!({"line": 2, "character": 2}));
    let items = c
        .request("textDocument/completion", json!({"textDocument": {"uri": URI}, "position": {"line": 4, "character": 32}}))
        .await
        .unwrap();
    let labels: Vec<&str> = items.as_array().unwrap().iter().map(|i| i["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["x", "y"]);
    let lenses = c.request("textDocument/codeLens", json!({"textDocument": {"uri": URI}})).await.unwrap();
    let names: Vec<&str> = lenses.as_array().unwrap().iter().map(|l| l["command"]["arguments"][0]["formula"].as_str().unwrap()).collect();
    assert_eq!(names, ["t1", "l1"]);
    assert!(lenses.as_array().unwrap().iter().all(|l| l["command"]["title"] == "prove"));
}

#[tokio::test]
async fn rename_over_the_wire() {
    let mut c = opened(CLEAN).await;
    let e = c
        .request("textDocument/rename", json!({"textDocument": {"uri": URI}, "position": {"line": 2, "character": 3}, "newName": "twice"}))
        .await
        .unwrap();
    let edits = e["changes"][URI].as_array().unwrap();
    assert_eq!(edits.len(), 2);
    assert!(edits.iter().all(|e| e["newText"] == "twice"));
    let err = c
        .request("textDocument/rename", json!({"textDocument": {"uri": URI}, "position": {"line": 4, "character": 26}, "newName": "abs2"}))
        .await
        .unwrap_err();
    assert_eq!(err.code, jsonrpc::READ_ONLY_SYMBOL);
    let err = c
        .request("textDocument/rename", json!({"textDocument": {"uri": URI}, "position": {"line": 2, "character": 3}, "newName": "half"}))
        .await
        .unwrap_err();
    assert_eq!(err.code, jsonrpc::RENAME_CAPTURE);
    let err = c
        .request("textDocument/rename", json!({"textDocument": {"uri": URI}, "position": {"line": 2, "character": 3}, "newName": "THEN"}))
        .await
        .unwrap_err();
    assert_eq!(err.code, jsonrpc::INVALID_IDENTIFIER);
}

#[tokio::test]
async fn typecheck_lists_tccs() {
    let mut c = opened(CLEAN).await;
    let r = c.request("pvs/typecheck", json!({"uri": URI})).await.unwrap();
    assert_eq!(r["diagnostics"], json!([]));
    let tccs = r["tccs"].as_array().unwrap();
    assert_eq!(tccs.len(), 1, "{tccs:?}");
    assert_eq!(tccs[0]["decl"], "half");
    let e = c.request("pvs/typecheck", json!({"uri": "file:///nowhere.pvs"})).await.unwrap_err();
    assert_eq!(e.code, jsonrpc::UNKNOWN_DOCUMENT);
}

#[tokio::test]
async fn evaluate_over_the_wire() {
    let mut c = opened(CLEAN).await;
    let r = c.request("pvs/evaluate", json!({"uri": URI, "theory": "a", "expr": "1+2*3"})).await.unwrap();
    assert_eq!(r["value"], "7");
    let r = c.request("pvs/evaluate", json!({"uri": URI, "expr": "half(4)"})).await.unwrap();
    assert_eq!(r["value"], "5/2");
    let e = c.request("pvs/evaluate", json!({"uri": URI, "expr": "1 + TRUE"})).await.unwrap_err();
    assert_eq!(e.code, jsonrpc::EVAL_ERROR);
    assert_eq!(e.data.unwrap()["kind"], "type-error");
}

#[tokio::test]
async fn proof_session_over_the_wire() {
    let mut c = opened(CLEAN).await;
    let r = c.request("pvs/prove-formula", json!({"uri": URI, "theory": "a", "formula": "l1"})).await.unwrap();
    let sid = r["sessionId"].as_str().unwrap().to_owned();
    assert_eq!(r["sequent"], "|-------\n[1] TRUE AND TRUE IMPLIES TRUE\n");
    let e = c.request("pvs/prove-formula", json!({"uri": URI, "theory": "a", "formula": "l1"})).await.unwrap_err();
    assert_eq!(e.code, jsonrpc::DUPLICATE_SESSION);
    let e = c.request("pvs/proof-command", json!({"sessionId": sid, "cmd": "bogus"})).await.unwrap_err();
    assert_eq!(e.code, jsonrpc::PROVER_ERROR);
    assert_eq!(e.data.unwrap()["kind"], "unknown-command");
    let mut view = serde_json::from_value::<micropvs_core::prover::TreeView>(r["tree"].clone()).unwrap();
    let r = c.request("pvs/proof-command", json!({"sessionId": sid, "cmd": "grind"})).await.unwrap();
    assert_eq!(r["proved"], true);
    assert_eq!(r["state"], "done");
    assert_eq!(r["sequent"], Value::Null);
    view.apply(&serde_json::from_value(r["delta"].clone()).unwrap());
    assert!(view.proved);
    let st = c.notification("pvs/statusChanged").await;
    assert_eq!(st, json!({"theory": "a", "formula": "l1", "status": "proved"}));
    let e = c.request("pvs/proof-command", json!({"sessionId": sid, "cmd": "grind"})).await.unwrap_err();
    assert_eq!(e.code, jsonrpc::SESSION_DONE);
    let r = c.request("pvs/quit-proof", json!({"sessionId": sid, "persist": false})).await.unwrap();
    assert_eq!(r["scriptPath"], Value::Null);
    let e = c.request("pvs/quit-proof", json!({"sessionId": sid})).await.unwrap_err();
    assert_eq!(e.code, jsonrpc::UNKNOWN_SESSION);
}

#[tokio::test]
async fn prove_on_broken_theory_carries_diagnostics() {
    let mut c = opened("b: THEORY\nBEGIN\n  c: int = TRUE\n  t: THEOREM TRUE\nEND b\n").await;
    let e = c.request("pvs/prove-formula", json!({"uri": URI, "theory": "b", "formula": "t"})).await.unwrap_err();
    assert_eq!(e.code, jsonrpc::NOT_TYPECHECKED);
    assert_eq!(e.data.unwrap()["diagnostics"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn persisted_proof_writes_script() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.pvs"), CLEAN).unwrap();
    let uri = micropvs_core::workspace::path_to_uri(&dir.path().join("a.pvs"));
    let (mut c, _s) = Client::in_memory(config());
    c.initialize(json!({"rootUri": micropvs_core::workspace::path_to_uri(dir.path())})).await.unwrap();
    let tree = c.request("pvs/theories", json!({})).await.unwrap();
    assert_eq!(tree["theories"][0]["name"], "a");
    let r = c.request("pvs/prove-formula", json!({"uri": uri, "theory": "a", "formula": "t1"})).await.unwrap();
    let sid = r["sessionId"].as_str().unwrap().to_owned();
    c.request("pvs/proof-command", json!({"sessionId": sid, "cmd": "skolem"})).await.unwrap();
    let r = c.request("pvs/quit-proof", json!({"sessionId": sid, "persist": true})).await.unwrap();
    let path = r["scriptPath"].as_str().unwrap();
    assert!(path.ends_with("a.t1.proof.json"), "{path}");
    let script = micropvs_core::prover::ProofScript::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(script.commands, ["skolem"]);
    let tree = c.request("pvs/theories", json!({})).await.unwrap();
    let t1 = tree["theories"][0]["formulas"].as_array().unwrap().iter().find(|f| f["name"] == "t1").unwrap().clone();
    assert_eq!(t1["status"], "unfinished");
}

#[tokio::test]
async fn cancelled_request_gets_cancel_error() {
    let mut c = opened("d: THEORY\nBEGIN\n  loop(n: nat): RECURSIVE nat = loop(n + 1) MEASURE n\nEND d\n").await;
    let id = c.send_request("pvs/evaluate", json!({"uri": URI, "expr": "loop(0)", "fuel": 1_000_000_000u64})).await;
    tokio::time::sleep(Duration::from_millis(20)).await;
    c.notify("$/cancelRequest", json!({"id": id})).await;
    let e = c.wait_response(&id).await.unwrap_err();
    assert_eq!(e.code, jsonrpc::REQUEST_CANCELLED);
}
