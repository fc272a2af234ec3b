//! A scripted works API over a plain TCP listener.

#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

use serde_json::{json, Value};

/// Decoded query parameters of one request.
pub type Query = HashMap<String, String>;

pub struct MockApi {
    pub endpoint: String,
    /// Every request's path and query, in arrival order.
    pub log: Arc<Mutex<Vec<String>>>,
}

impl MockApi {
    /// Serves `respond(query, attempt)` where `attempt` counts earlier
    /// requests with the same path and query.
    pub fn start(respond: impl Fn(&Query, usize) -> (u16, String) + Send + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
        let endpoint = format!("http://{}/works", listener.local_addr().unwrap());
        let log = Arc::new(Mutex::new(Vec::new()));
        let seen = log.clone();
        thread::spawn(move || {
            let mut attempts: HashMap<String, usize> = HashMap::new();
            for stream in listener.incoming().flatten() {
                let Some(target) = read_request(&stream) else { continue };
                let n = attempts.entry(target.clone()).or_default();
                let (status, body) = respond(&parse_query(&target), *n);
                *n += 1;
                seen.lock().unwrap().push(target);
                write_response(stream, status, &body);
            }
        });
        Self { endpoint, log }
    }

    pub fn requests(&self) -> usize {
        self.log.lock().unwrap().len()
    }
}

fn read_request(stream: &TcpStream) -> Option<String> {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let target = line.split_whitespace().nth(1)?.to_string();
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header).ok()? == 0 || header == "\r\n" {
            break;
        }
    }
    Some(target)
}

fn write_response(mut stream: TcpStream, status: u16, body: &str) {
    let reason = match status {
        200 => "OK",
        429 => "Too Many Requests",
        _ => "Error",
    };
    let _ = write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.flush();
}

fn decode(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'+' => out.push(b' '),
            b'%' if i + 2 < bytes.len() => {
                let hex = std::str::from_utf8(&bytes[i + 1..i + 3]).unwrap_or("");
                match u8::from_str_radix(hex, 16) {
                    Ok(b) => {
                        out.push(b);
                        i += 2;
                    }
                    Err(_) => out.push(b'%'),
                }
            }
            b => out.push(b),
        }
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

pub fn parse_query(target: &str) -> Query {
    let query = target.split_once('?').map_or("", |(_, q)| q);
    query
        .split('&')
        .filter(|kv| !kv.is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').unwrap_or((kv, ""));
            (decode(k), decode(v))
        })
        .collect()
}

/// The concept id inside an OpenAlex `filter` parameter.
pub fn concept_of(q: &Query) -> String {
    q.get("filter")
        .and_then(|f| f.split(',').find_map(|part| part.strip_prefix("concepts.id:")))
        .unwrap_or_default()
        .to_string()
}

/// A work in the API's JSON shape with the abstract as an inverted index.
pub fn work_json(id: &str, concept: &str, date: &str, abstract_text: &str, refs: &[&str]) -> Value {
    let mut index: HashMap<&str, Vec<usize>> = HashMap::new();
    for (pos, w) in abstract_text.split(' ').enumerate() {
        index.entry(w).or_default().push(pos);
    }
    json!({
        "id": format!("https://openalex.org/{id}"),
        "title": format!("title of {id}"),
        "abstract_inverted_index": index,
        "publication_date": date,
        "authorships": [{"author": {"id": "https://openalex.org/A1"}}],
        "referenced_works": refs.iter().map(|r| format!("https://openalex.org/{r}")).collect::<Vec<_>>(),
        "concepts": [{"id": format!("https://openalex.org/{concept}"), "score": 0.8}],
    })
}

pub fn page(results: Vec<Value>, next_cursor: Option<&str>) -> String {
    json!({ "meta": { "next_cursor": next_cursor }, "results": results }).to_string()
}
