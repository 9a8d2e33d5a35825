//! Minimal protocol client, used for scripted transcripts against a server.

use std::collections::VecDeque;
use std::io;

use serde_json::Value;
use tokio::io::{AsyncRead, AsyncWrite, AsyncWriteExt, BufReader};
use tokio::sync::mpsc;
use tokio::task::JoinHandle;

use crate::jsonrpc::{self, Id, Message, RpcError};
use crate::server::{serve, Config, Exit};

pub struct Client {
    writer: Box<dyn AsyncWrite + Unpin + Send>,
    incoming: mpsc::UnboundedReceiver<Value>,
    backlog: VecDeque<Value>,
    next_id: i64,
}

impl Client {
    pub fn new<R, W>(reader: R, writer: W) -> Self
    where
        R: AsyncRead + Unpin + Send + 'static,
        W: AsyncWrite + Unpin + Send + 'static,
    {
        let (tx, incoming) = mpsc::unbounded_channel();
        tokio::spawn(async move {
            let mut r = BufReader::new(reader);
            while let Ok(Some(body)) = jsonrpc::read_frame(&mut r).await {
                let Ok(v) = serde_json::from_slice::<Value>(&body) else { break };
                if tx.send(v).is_err() {
                    break;
                }
            }
        });
        Client { writer: Box::new(writer), incoming, backlog: VecDeque::new(), next_id: 0 }
    }

    /// A server running on an in-memory pipe, with its client end.
    pub fn in_memory(config: Config) -> (Client, JoinHandle<io::Result<Exit>>) {
        let (client_io, server_io) = tokio::io::duplex(1 << 20);
        let (sr, sw) = tokio::io::split(server_io);
        let server = tokio::spawn(serve(sr, sw, config));
        let (cr, cw) = tokio::io::split(client_io);
        (Client::new(cr, cw), server)
    }

    pub async fn send(&mut self, v: &Value) -> io::Result<()> {
        self.writer.write_all(&jsonrpc::encode_value(v)).await?;
        self.writer.flush().await
    }

    pub async fn send_raw(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.writer.write_all(bytes).await?;
        self.writer.flush().await
    }

    pub async fn send_request(&mut self, method: &str, params: Value) -> Id {
        self.next_id += 1;
        let id = Id::Num(self.next_id);
        self.send(&jsonrpc::request(&id, method, params)).await.expect("server pipe closed");
        id
    }

    pub async fn notify(&mut self, method: &str, params: Value) {
        self.send(&jsonrpc::notification(method, params)).await.expect("server pipe closed");
    }

    /// Next message from the backlog or the wire; `None` once the server has closed.
    pub async fn next_message(&mut self) -> Option<Value> {
        if let Some(v) = self.backlog.pop_front() {
            return Some(v);
        }
        self.incoming.recv().await
    }

    pub async fn wait_response(&mut self, id: &Id) -> Result<Value, RpcError> {
        let idv = serde_json::to_value(id).expect("id serializes");
        if let Some(i) = self.backlog.iter().position(|m| m.get("id") == Some(&idv) && m.get("method").is_none()) {
            let m = self.backlog.remove(i).expect("index in range");
            return response_result(m);
        }
        loop {
            let m = self.incoming.recv().await.expect("server closed before responding");
            if m.get("id") == Some(&idv) && m.get("method").is_none() {
                return response_result(m);
            }
            self.backlog.push_back(m);
        }
    }

    pub async fn request(&mut self, method: &str, params: Value) -> Result<Value, RpcError> {
        let id = self.send_request(method, params).await;
        self.wait_response(&id).await
    }

    /// Waits for the next notification with `method`, keeping other messages queued.
    pub async fn notification(&mut self, method: &str) -> Value {
        if let Some(i) = self.backlog.iter().position(|m| m.get("method").and_then(Value::as_str) == Some(method)) {
            return self.backlog.remove(i).expect("index in range")["params"].take();
        }
        loop {
            let mut m = self.incoming.recv().await.expect("server closed");
            if m.get("method").and_then(Value::as_str) == Some(method) && m.get("id").is_none() {
                return m["params"].take();
            }
            self.backlog.push_back(m);
        }
    }

    /// Messages already received, without waiting.
    pub fn drain(&mut self) -> Vec<Value> {
        while let Ok(m) = self.incoming.try_recv() {
            self.backlog.push_back(m);
        }
        self.backlog.drain(..).collect()
    }

    pub async fn initialize(&mut self, params: Value) -> Result<Value, RpcError> {
        let r = self.request("initialize", params).await?;
        self.notify("initialized", serde_json::json!({})).await;
        Ok(r)
    }

    pub async fn open(&mut self, uri: &str, version: i64, text: &str) {
        let p = serde_json::json!({"textDocument": {"uri": uri, "languageId": "pvs", "version": version, "text": text}});
        self.notify("textDocument/didOpen", p).await;
    }

    pub async fn change(&mut self, uri: &str, version: i64, text: &str) {
        let p = serde_json::json!({"textDocument": {"uri": uri, "version": version}, "contentChanges": [{"text": text}]});
        self.notify("textDocument/didChange", p).await;
    }

    /// Shutdown then exit.
    pub async fn shutdown(&mut self) -> Result<(), RpcError> {
        self.request("shutdown", Value::Null).await?;
        self.notify("exit", Value::Null).await;
        Ok(())
    }
}

fn response_result(m: Value) -> Result<Value, RpcError> {
    match Message::from_value(m) {
        Ok(Message::Response { result, .. }) => result,
        _ => Err(RpcError::new(jsonrpc::INTERNAL_ERROR, "malformed response")),
    }
}
