//! JSON-RPC 2.0 over stdio with LSP `Content-Length` framing, exposing the
//! retrieval pipeline as text-returning methods.
//!
//! Requests take `{"manifestPath": string, "holeId"?: integer}`; without a
//! `holeId` the sketch's `??` hole is used. Every result is `{"text": string}`.

use std::io::{self, BufRead, Write};
use std::path::Path;

use serde_json::{json, Value};

use crate::contextualizer::{retrieve, NUM_HEADERS};
use crate::manifest::load_manifest;
use crate::prompt::{serialize_headers, serialize_types};
use crate::statics::check_repo;
use crate::syntax::{parse_repo, print_type};

use super::{ai_tutorial, error_report};

pub const PARSE_ERROR: i64 = -32700;
pub const INVALID_REQUEST: i64 = -32600;
pub const METHOD_NOT_FOUND: i64 = -32601;
pub const INVALID_PARAMS: i64 = -32602;
pub const DOMAIN_ERROR: i64 = -32000;

pub const METHODS: [&str; 5] = [
    "chatlsp/aiTutorial",
    "chatlsp/expectedType",
    "chatlsp/retrieveRelevantTypes",
    "chatlsp/retrieveRelevantHeaders",
    "chatlsp/errorReport",
];

struct RpcError {
    code: i64,
    message: String,
}

fn rpc_err(code: i64, message: impl Into<String>) -> RpcError {
    RpcError {
        code,
        message: message.into(),
    }
}

fn error_response(id: Value, e: RpcError) -> Value {
    json!({"jsonrpc": "2.0", "id": id, "error": {"code": e.code, "message": e.message}})
}

struct Params {
    manifest_path: String,
    hole_id: Option<usize>,
}

fn parse_params(params: Option<&Value>) -> Result<Params, RpcError> {
    let obj = params
        .and_then(Value::as_object)
        .ok_or_else(|| rpc_err(INVALID_PARAMS, "params must be an object"))?;
    let manifest_path = obj
        .get("manifestPath")
        .and_then(Value::as_str)
        .ok_or_else(|| rpc_err(INVALID_PARAMS, "manifestPath must be a string"))?
        .to_string();
    let hole_id = match obj.get("holeId") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_u64()
                .and_then(|n| usize::try_from(n).ok())
                .ok_or_else(|| rpc_err(INVALID_PARAMS, "holeId must be a non-negative integer"))?,
        ),
    };
    Ok(Params {
        manifest_path,
        hole_id,
    })
}

fn call(method: &str, params: Option<&Value>) -> Result<String, RpcError> {
    if !METHODS.contains(&method) {
        return Err(rpc_err(METHOD_NOT_FOUND, format!("method not found: {method}")));
    }
    if method == "chatlsp/aiTutorial" {
        return Ok(ai_tutorial().to_string());
    }
    let p = parse_params(params)?;
    let domain = |e: &dyn std::fmt::Display| rpc_err(DOMAIN_ERROR, e.to_string());
    let manifest = load_manifest(Path::new(&p.manifest_path)).map_err(|e| domain(&e))?;
    let parsed = parse_repo(&manifest.sources);
    if method == "chatlsp/errorReport" {
        if let (Ok(repo), Some(id)) = (&parsed, p.hole_id) {
            if repo.hole(id).is_none() {
                return Err(rpc_err(DOMAIN_ERROR, format!("hole {id} not found")));
            }
        }
        return Ok(error_report(&manifest.sources));
    }
    let repo = parsed.map_err(|e| domain(&e))?;
    let typed = check_repo(&repo);
    let hole_id = match p.hole_id {
        Some(id) => id,
        None => typed
            .generative_hole()
            .map(|h| h.id)
            .ok_or_else(|| rpc_err(DOMAIN_ERROR, "the sketch has no `??` hole"))?,
    };
    let r = retrieve(&typed, hole_id, NUM_HEADERS).map_err(|e| domain(&e))?;
    Ok(match method {
        "chatlsp/expectedType" => print_type(&r.expected),
        "chatlsp/retrieveRelevantTypes" => serialize_types(&r.types),
        _ => serialize_headers(&r.headers),
    })
}

/// Handles one JSON-RPC message body. Returns `None` for notifications.
pub fn handle_message(body: &[u8]) -> Option<Value> {
    let msg: Value = match serde_json::from_slice(body) {
        Ok(v) => v,
        Err(e) => return Some(error_response(Value::Null, rpc_err(PARSE_ERROR, format!("parse error: {e}")))),
    };
    let Some(obj) = msg.as_object() else {
        return Some(error_response(Value::Null, rpc_err(INVALID_REQUEST, "request must be an object")));
    };
    let id = obj.get("id").cloned();
    let valid_id = matches!(&id, None | Some(Value::Null | Value::Number(_) | Value::String(_)));
    let method = obj.get("method").and_then(Value::as_str);
    let (Some(method), true, Some("2.0")) = (method, valid_id, obj.get("jsonrpc").and_then(Value::as_str)) else {
        return Some(error_response(
            if valid_id { id.unwrap_or(Value::Null) } else { Value::Null },
            rpc_err(INVALID_REQUEST, "invalid request"),
        ));
    };
    let result = call(method, obj.get("params"));
    let id = id?;
    Some(match result {
        Ok(text) => json!({"jsonrpc": "2.0", "id": id, "result": {"text": text}}),
        Err(e) => error_response(id, e),
    })
}

const MAX_BODY: usize = 64 * 1024 * 1024;

pub enum Frame {
    Body(Vec<u8>),
    /// A header block without a usable Content-Length.
    BadHeader(String),
    Eof,
}

/// Reads one `Content-Length`-framed message.
pub fn read_frame(r: &mut impl BufRead) -> io::Result<Frame> {
    let mut length = None;
    let mut bad = None;
    let mut saw_header = false;
    loop {
        let mut raw = Vec::new();
        if r.read_until(b'\n', &mut raw)? == 0 {
            return Ok(if saw_header {
                Frame::BadHeader("unexpected end of input in headers".into())
            } else {
                Frame::Eof
            });
        }
        let line = String::from_utf8_lossy(&raw);
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            if !saw_header {
                continue;
            }
            break;
        }
        saw_header = true;
        match line.split_once(':') {
            Some((k, v)) if k.eq_ignore_ascii_case("content-length") => match v.trim().parse::<usize>() {
                Ok(n) if n <= MAX_BODY => length = Some(n),
                _ => bad = Some(format!("bad Content-Length: {}", v.trim())),
            },
            Some(_) => {}
            None => bad = Some(format!("malformed header line: {line}")),
        }
    }
    if let Some(b) = bad {
        return Ok(Frame::BadHeader(b));
    }
    let Some(n) = length else {
        return Ok(Frame::BadHeader("missing Content-Length".into()));
    };
    let mut body = vec![0; n];
    r.read_exact(&mut body)?;
    Ok(Frame::Body(body))
}

pub fn write_frame(w: &mut impl Write, v: &Value) -> io::Result<()> {
    let body = serde_json::to_vec(v).expect("response serializes");
    write!(w, "Content-Length: {}\r\n\r\n", body.len())?;
    w.write_all(&body)?;
    w.flush()
}

/// Serves requests sequentially until the input closes or an `exit`
/// notification arrives.
pub fn serve(mut input: impl BufRead, mut output: impl Write) -> io::Result<()> {
    loop {
        let resp = match read_frame(&mut input) {
            Ok(Frame::Eof) => return Ok(()),
            Ok(Frame::BadHeader(msg)) => Some(error_response(Value::Null, rpc_err(PARSE_ERROR, msg))),
            Ok(Frame::Body(body)) => {
                if serde_json::from_slice::<Value>(&body).is_ok_and(|v| v["method"] == "exit") {
                    return Ok(());
                }
                handle_message(&body)
            }
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(()),
            Err(e) => return Err(e),
        };
        if let Some(r) = resp {
            write_frame(&mut output, &r)?;
        }
    }
}

/// Splits a byte stream of framed responses into JSON values.
pub fn read_all_frames(bytes: &[u8]) -> Vec<Value> {
    let mut r = io::Cursor::new(bytes);
    let mut out = Vec::new();
    while let Ok(Frame::Body(b)) = read_frame(&mut r) {
        if let Ok(v) = serde_json::from_slice(&b) {
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(v: &Value) -> Vec<u8> {
        let mut out = Vec::new();
        write_frame(&mut out, v).unwrap();
        out
    }

    fn project() -> tempfile::TempDir {
        let d = tempfile::tempdir().unwrap();
        std::fs::write(d.path().join("types.sl"), "type Model = [Int] in type Action = Push(Int) + Pop in").unwrap();
        std::fs::write(
            d.path().join("helpers.sl"),
            "let push: (Model, Int) -> Model = fun (m, x) -> x :: m end in",
        )
        .unwrap();
        std::fs::write(d.path().join("sketch.sl"), "let update: (Model, Action) -> Model = ?? in").unwrap();
        std::fs::write(
            d.path().join("manifest.json"),
            r#"{"files": ["types.sl", "helpers.sl", "sketch.sl"]}"#,
        )
        .unwrap();
        d
    }

    fn request(method: &str, params: Value) -> Value {
        json!({"jsonrpc": "2.0", "id": 7, "method": method, "params": params})
    }

    #[test]
    fn all_methods_answer() {
        let d = project();
        let path = d.path().join("manifest.json").to_string_lossy().into_owned();
        let mut input = Vec::new();
        for m in METHODS {
            input.extend(frame(&request(m, json!({"manifestPath": path}))));
        }
        let mut out = Vec::new();
        serve(io::Cursor::new(input), &mut out).unwrap();
        let resps = read_all_frames(&out);
        assert_eq!(resps.len(), 5);
        let text = |i: usize| resps[i]["result"]["text"].as_str().unwrap().to_string();
        assert!(text(0).contains("No 'rec' keyword"));
        assert_eq!(text(1), "(Model, Action) -> Model");
        assert_eq!(text(2), "type Model = [Int] in\ntype Action = Push(Int) + Pop in\n");
        assert!(text(3).ends_with("let push: ((Model, Int) -> Model) =  in\n"));
        assert_eq!(text(4), "");
    }

    #[test]
    fn protocol_errors() {
        let d = project();
        let path = d.path().join("manifest.json").to_string_lossy().into_owned();
        let code = |v: Option<Value>| v.unwrap()["error"]["code"].as_i64().unwrap();
        let h = |v: Value| handle_message(&serde_json::to_vec(&v).unwrap());
        assert_eq!(code(h(request("chatlsp/nope", json!({})))), METHOD_NOT_FOUND);
        assert_eq!(code(h(request("chatlsp/expectedType", json!({"holeId": 1})))), INVALID_PARAMS);
        assert_eq!(
            code(h(request("chatlsp/expectedType", json!({"manifestPath": path, "holeId": "1"})))),
            INVALID_PARAMS
        );
        let missing = h(request("chatlsp/expectedType", json!({"manifestPath": path, "holeId": 9})));
        assert_eq!(missing.as_ref().unwrap()["error"]["code"], DOMAIN_ERROR);
        assert!(missing.unwrap()["error"]["message"].as_str().unwrap().contains("hole 9"));
        assert_eq!(code(handle_message(b"{not json")), PARSE_ERROR);
        assert_eq!(code(handle_message(b"[1, 2]")), INVALID_REQUEST);
        assert!(h(json!({"jsonrpc": "2.0", "method": "chatlsp/aiTutorial"})).is_none());
    }

    #[test]
    fn bad_frames_recover() {
        let mut input = b"Content-Length: abc\r\n\r\n".to_vec();
        input.extend(frame(&request("chatlsp/aiTutorial", Value::Null)));
        let mut out = Vec::new();
        serve(io::Cursor::new(input), &mut out).unwrap();
        let resps = read_all_frames(&out);
        assert_eq!(resps[0]["error"]["code"], PARSE_ERROR);
        assert!(resps[1]["result"]["text"].is_string());
    }

    #[test]
    fn exit_stops_serving() {
        let mut input = frame(&json!({"jsonrpc": "2.0", "method": "exit"}));
        input.extend(frame(&request("chatlsp/aiTutorial", Value::Null)));
        let mut out = Vec::new();
        serve(io::Cursor::new(input), &mut out).unwrap();
        assert!(out.is_empty());
    }
}
