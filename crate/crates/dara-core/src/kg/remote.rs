//! Optional remote mode: compiled queries POSTed to an external SPARQL
//! endpoint, answers read from standard SPARQL JSON results.

use super::sparql::NS_PREFIX;
use serde::Deserialize;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("endpoint error: {0}")]
    Transport(String),
    #[error("unexpected response shape: {0}")]
    Response(String),
}

#[derive(Deserialize)]
struct SparqlResults {
    head: Head,
    results: Results,
}

#[derive(Deserialize)]
struct Head {
    vars: Vec<String>,
}

#[derive(Deserialize)]
struct Results {
    bindings: Vec<std::collections::BTreeMap<String, BindingValue>>,
}

#[derive(Deserialize)]
struct BindingValue {
    value: String,
}

/// POST a compiled query and flatten the first projected variable's values
/// into an answer set. Freebase ids come back with the `ns:` namespace
/// expanded; it is stripped again here.
pub fn execute_remote(query: &str, endpoint: &str) -> Result<BTreeSet<String>, RemoteError> {
    let client = reqwest::blocking::Client::new();
    let response = client
        .post(endpoint)
        .header("Content-Type", "application/sparql-query")
        .header("Accept", "application/sparql-results+json")
        .body(query.to_string())
        .send()
        .map_err(|e| RemoteError::Transport(e.to_string()))?
        .error_for_status()
        .map_err(|e| RemoteError::Transport(e.to_string()))?;
    let body: SparqlResults =
        response.json().map_err(|e| RemoteError::Response(e.to_string()))?;
    let var = body
        .head
        .vars
        .first()
        .ok_or_else(|| RemoteError::Response("no projected variables".into()))?;
    let mut answers = BTreeSet::new();
    for row in body.results.bindings {
        if let Some(binding) = row.get(var) {
            let value = binding
                .value
                .strip_prefix(NS_PREFIX)
                .unwrap_or(&binding.value)
                .to_string();
            answers.insert(value);
        }
    }
    Ok(answers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    // A one-shot HTTP server returning canned SPARQL JSON results.
    fn serve_once(body: &'static str) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            if let Ok((mut stream, _)) = listener.accept() {
                let mut buf = [0u8; 4096];
                let _ = stream.read(&mut buf);
                let response = format!(
                    "HTTP/1.1 200 OK\r\nContent-Type: application/sparql-results+json\r\n\
                     Content-Length: {}\r\nConnection: close\r\n\r\n{}",
                    body.len(),
                    body
                );
                let _ = stream.write_all(response.as_bytes());
            }
        });
        format!("http://{addr}")
    }

    #[test]
    fn parses_standard_results_bindings() {
        let endpoint = serve_once(
            r#"{"head":{"vars":["x0"]},"results":{"bindings":[
                {"x0":{"type":"uri","value":"http://rdf.freebase.com/ns/m.04dwjbg"}},
                {"x0":{"type":"literal","value":"980.0"}}
            ]}}"#,
        );
        let answers = execute_remote("SELECT DISTINCT ?x0 WHERE { }", &endpoint).unwrap();
        assert_eq!(
            answers,
            BTreeSet::from(["m.04dwjbg".to_string(), "980.0".to_string()])
        );
    }

    #[test]
    fn unreachable_endpoint_is_a_transport_error() {
        let err = execute_remote("SELECT", "http://127.0.0.1:1/sparql").unwrap_err();
        assert!(matches!(err, RemoteError::Transport(_)));
    }
}
