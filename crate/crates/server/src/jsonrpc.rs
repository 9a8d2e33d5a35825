//! JSON-RPC 2.0 messages and LSP base-protocol framing.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::io::{AsyncBufRead, AsyncBufReadExt, AsyncReadExt, AsyncWrite, AsyncWriteExt};

pub const PARSE_ERROR: i64 = -32700;
pub const INVALID_REQUEST: i64 = -32600;
pub const METHOD_NOT_FOUND: i64 = -32601;
pub const INVALID_PARAMS: i64 = -32602;
pub const INTERNAL_ERROR: i64 = -32603;
pub const SERVER_NOT_INITIALIZED: i64 = -32002;
pub const REQUEST_CANCELLED: i64 = -32800;

pub const NOT_TYPECHECKED: i64 = 1001;
pub const UNKNOWN_DOCUMENT: i64 = 1002;
pub const UNKNOWN_FORMULA: i64 = 1003;
pub const DUPLICATE_SESSION: i64 = 1004;
pub const UNKNOWN_SESSION: i64 = 1005;
pub const SESSION_DONE: i64 = 1006;
pub const PROVER_ERROR: i64 = 1007;
pub const EVAL_ERROR: i64 = 1008;
pub const RENAME_CAPTURE: i64 = 1009;
pub const READ_ONLY_SYMBOL: i64 = 1010;
pub const INVALID_IDENTIFIER: i64 = 1011;
pub const NOT_A_SYMBOL: i64 = 1012;
pub const IO_ERROR: i64 = 1013;
pub const UNKNOWN_THEORY: i64 = 1014;

/// Request or response id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Id {
    Num(i64),
    Str(String),
}

impl std::fmt::Display for Id {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Id::Num(n) => write!(f, "{n}"),
            Id::Str(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{message} ({code})")]
pub struct RpcError {
    pub code: i64,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

impl RpcError {
    pub fn new(code: i64, message: impl Into<String>) -> Self {
        RpcError { code, message: message.into(), data: None }
    }

    pub fn with_data(mut self, data: Value) -> Self {
        self.data = Some(data);
        self
    }

    pub fn invalid_params(message: impl Into<String>) -> Self {
        RpcError::new(INVALID_PARAMS, message)
    }

    pub fn cancelled() -> Self {
        RpcError::new(REQUEST_CANCELLED, "request cancelled")
    }
}

/// A decoded incoming message.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Request { id: Id, method: String, params: Value },
    Notification { method: String, params: Value },
    Response { id: Id, result: Result<Value, RpcError> },
}

impl Message {
    /// Classifies a JSON value. Invalid requests that still carry an id come back as
    /// `Err((Some(id), error))` so the caller can answer them.
    pub fn from_value(v: Value) -> Result<Message, (Option<Id>, RpcError)> {
        let Value::Object(mut obj) = v else {
            return Err((None, RpcError::new(INVALID_REQUEST, "message is not an object")));
        };
        let id = match obj.remove("id") {
            None | Some(Value::Null) => None,
            Some(v) => match serde_json::from_value::<Id>(v) {
                Ok(id) => Some(id),
                Err(_) => return Err((None, RpcError::new(INVALID_REQUEST, "invalid id"))),
            },
        };
        if obj.get("jsonrpc").and_then(Value::as_str) != Some("2.0") {
            return Err((id, RpcError::new(INVALID_REQUEST, "missing jsonrpc \"2.0\"")));
        }
        match obj.remove("method") {
            Some(Value::String(method)) => {
                let params = obj.remove("params").unwrap_or(Value::Null);
                Ok(match id {
                    Some(id) => Message::Request { id, method, params },
                    None => Message::Notification { method, params },
                })
            }
            Some(_) => Err((id, RpcError::new(INVALID_REQUEST, "method must be a string"))),
            None => {
                let Some(id) = id else {
                    return Err((None, RpcError::new(INVALID_REQUEST, "response without id")));
                };
                let result = match obj.remove("error") {
                    Some(e) => Err(serde_json::from_value(e)
                        .unwrap_or_else(|_| RpcError::new(INTERNAL_ERROR, "malformed error object"))),
                    None => Ok(obj.remove("result").unwrap_or(Value::Null)),
                };
                Ok(Message::Response { id, result })
            }
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            Message::Request { id, method, params } => request(id, method, params.clone()),
            Message::Notification { method, params } => notification(method, params.clone()),
            Message::Response { id, result } => response(Some(id), result.clone()),
        }
    }
}

pub fn request(id: &Id, method: &str, params: Value) -> Value {
    json!({"jsonrpc": "2.0", "id": id, "method": method, "params": params})
}

pub fn notification(method: &str, params: Value) -> Value {
    json!({"jsonrpc": "2.0", "method": method, "params": params})
}

pub fn response(id: Option<&Id>, result: Result<Value, RpcError>) -> Value {
    match result {
        Ok(v) => json!({"jsonrpc": "2.0", "id": id, "result": v}),
        Err(e) => json!({"jsonrpc": "2.0", "id": id, "error": e}),
    }
}

/// `Content-Length: N\r\n\r\n` followed by the body.
pub fn encode_frame(body: &[u8]) -> Vec<u8> {
    let mut out = format!("Content-Length: {}\r\n\r\n", body.len()).into_bytes();
    out.extend_from_slice(body);
    out
}

pub fn encode_value(v: &Value) -> Vec<u8> {
    encode_frame(v.to_string().as_bytes())
}

/// Reads one frame body. `Ok(None)` on a clean end of stream before any header.
pub async fn read_frame<R: AsyncBufRead + Unpin>(r: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut length: Option<usize> = None;
    let mut seen_header = false;
    loop {
        let mut line = String::new();
        let n = r.read_line(&mut line).await?;
        if n == 0 {
            return if seen_header {
                Err(io::Error::new(io::ErrorKind::UnexpectedEof, "end of stream inside header"))
            } else {
                Ok(None)
            };
        }
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            if !seen_header {
                continue;
            }
            break;
        }
        seen_header = true;
        let Some((name, value)) = line.split_once(':') else {
            return Err(io::Error::new(io::ErrorKind::InvalidData, format!("malformed header '{line}'")));
        };
        if name.trim().eq_ignore_ascii_case("content-length") {
            let n = value
                .trim()
                .parse()
                .map_err(|_| io::Error::new(io::ErrorKind::InvalidData, "invalid Content-Length"))?;
            length = Some(n);
        }
    }
    let Some(len) = length else {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "missing Content-Length"));
    };
    let mut body = vec![0; len];
    r.read_exact(&mut body).await?;
    Ok(Some(body))
}

pub async fn write_frame<W: AsyncWrite + Unpin>(w: &mut W, body: &[u8]) -> io::Result<()> {
    w.write_all(&encode_frame(body)).await?;
    w.flush().await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test]
    async fn frames_round_trip() {
        let mut bytes = encode_frame(br#"{"a":1}"#);
        bytes.extend(encode_frame("{\"k\":\"\u{22a2}\"}".as_bytes()));
        let mut r = tokio::io::BufReader::new(&bytes[..]);
        assert_eq!(read_frame(&mut r).await.unwrap().unwrap(), br#"{"a":1}"#);
        let second = read_frame(&mut r).await.unwrap().unwrap();
        assert_eq!(std::str::from_utf8(&second).unwrap(), "{\"k\":\"\u{22a2}\"}");
        assert!(read_frame(&mut r).await.unwrap().is_none());
    }

    #[test]
    fn header_counts_bytes() {
        let f = encode_frame("\u{22a2}".as_bytes());
        assert_eq!(&f[..20], b"Content-Length: 3\r\n\r");
    }

    #[tokio::test]
    async fn content_type_is_ignored_and_length_required() {
        let raw = b"Content-Type: application/vscode-jsonrpc; charset=utf-8\r\nContent-Length: 2\r\n\r\n{}";
        let mut r = tokio::io::BufReader::new(&raw[..]);
        assert_eq!(read_frame(&mut r).await.unwrap().unwrap(), b"{}");
        let raw = b"Content-Type: x\r\n\r\n{}";
        let mut r = tokio::io::BufReader::new(&raw[..]);
        assert!(read_frame(&mut r).await.is_err());
    }

    #[test]
    fn classifies_messages() {
        let m = Message::from_value(json!({"jsonrpc":"2.0","id":1,"method":"m","params":[1]})).unwrap();
        assert_eq!(m, Message::Request { id: Id::Num(1), method: "m".into(), params: json!([1]) });
        let m = Message::from_value(json!({"jsonrpc":"2.0","method":"n"})).unwrap();
        assert_eq!(m, Message::Notification { method: "n".into(), params: Value::Null });
        let m = Message::from_value(json!({"jsonrpc":"2.0","id":"a","result":3})).unwrap();
        assert_eq!(m, Message::Response { id: Id::Str("a".into()), result: Ok(json!(3)) });
        let (id, e) = Message::from_value(json!({"id":4,"method":"m"})).unwrap_err();
        assert_eq!((id, e.code), (Some(Id::Num(4)), INVALID_REQUEST));
        assert!(Message::from_value(json!([1])).is_err());
    }

    #[test]
    fn error_responses_carry_data() {
        let v = response(Some(&Id::Num(2)), Err(RpcError::new(NOT_TYPECHECKED, "no").with_data(json!({"x":1}))));
        assert_eq!(v["error"]["code"], 1001);
        assert_eq!(v["error"]["data"]["x"], 1);
        assert_eq!(v["id"], 2);
    }
}
