//! Driving an LLM kernel through a custom transport. The transport here
//! answers every chat request from a canned table, which is also how the
//! kernel can be tested offline.
//!
//! ```bash
//! cargo run --example llm_mock
//! ```

use std::sync::Arc;
use std::time::Duration;

use chainlab::kernels::{DecodingConfig, LlmKernel, PromptTemplate};
use chainlab::llm_client::{EndpointConfig, HttpResponse, LlmClient, Transport, TransportError};
use chainlab::runner::{chain_rng, recurrence_stats, run_chain, ChainSetup};
use chainlab::textunit::Sentence;
use serde_json::{json, Value};

#[derive(Debug)]
struct Canned;

impl Transport for Canned {
    fn post_json(&self, _url: &str, _bearer: &str, body: &[u8], _timeout: Duration) -> Result<HttpResponse, TransportError> {
        let req: Value = serde_json::from_slice(body).map_err(|e| TransportError(e.to_string()))?;
        let prompt = req["messages"][0]["content"].as_str().unwrap_or_default();
        let reply = if prompt.contains("We begin") {
            "We start with a prologue."
        } else {
            "We begin with a prologue. Then more follows."
        };
        let body = json!({
            "choices": [{ "message": { "content": reply } }],
            "usage": { "prompt_tokens": 20, "completion_tokens": 8 },
        });
        Ok(HttpResponse {
            status: 200,
            body: serde_json::to_vec(&body).unwrap(),
        })
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut endpoint = EndpointConfig::new("canned", "http://localhost:0/v1", "demo-model");
    endpoint.auth_env_var = "CHAINLAB_DEMO_TOKEN".into();
    std::env::set_var(&endpoint.auth_env_var, "demo");

    let client = Arc::new(LlmClient::new(Arc::new(Canned)));
    let kernel = LlmKernel::new(client, endpoint, PromptTemplate::builtin("rephrase_p1")?);
    let traj = run_chain(
        &kernel,
        &Sentence::new("We begin with a prologue.")?,
        &ChainSetup::new(4, DecodingConfig::greedy()),
        &mut chain_rng(0, 0),
    )?;
    for (t, step) in traj.steps.iter().enumerate() {
        println!("{}  {}  truncated={}", t + 1, step.output, step.truncated);
    }
    let r = recurrence_stats(&traj)?;
    println!("tau = {}  U = {}", r.tau, r.distinct_count);
    Ok(())
}
