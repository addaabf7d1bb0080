//! Completions-endpoint request and response bodies.

use serde::{Deserialize, Serialize};

use super::{ClientError, CompletionResult, FinishReason};
use crate::promptgen::{BackendKind, GenerationParams};

/// Request body. Absent optional fields are omitted, never sent as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequestBody {
    pub model: String,
    pub prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stop: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub presence_penalty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_penalty: Option<f64>,
    pub n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
}

/// Map parameters onto the wire: top_k only for fine-tuned backends,
/// penalties only for few-shot backends.
pub fn request_body(model: &str, prompt: &str, params: &GenerationParams, kind: BackendKind) -> CompletionRequestBody {
    let penalties = kind.supports_penalties();
    CompletionRequestBody {
        model: model.to_owned(),
        prompt: prompt.to_owned(),
        max_tokens: params.max_tokens,
        temperature: params.temperature,
        top_p: params.top_p,
        stop: params.stop.clone(),
        presence_penalty: penalties.then_some(params.presence_penalty),
        frequency_penalty: penalties.then_some(params.frequency_penalty),
        n: params.samples_per_request,
        top_k: if kind.supports_top_k() { params.top_k } else { None },
    }
}

#[derive(Debug, Deserialize)]
pub(crate) struct ResponseBody {
    pub choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct Choice {
    pub text: String,
    #[serde(default)]
    pub index: Option<u32>,
    #[serde(default)]
    pub finish_reason: Option<String>,
}

/// Cut `text` at the earliest occurrence of any stop sequence.
pub fn truncate_at_stop<'a>(text: &'a str, stop: &[String]) -> Option<&'a str> {
    stop.iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| text.find(s.as_str()))
        .min()
        .map(|cut| &text[..cut])
}

/// Strip an echoed prompt and apply stop sequences the server ignored.
pub fn postprocess(
    prompt: &str,
    raw: &str,
    finish_reason: Option<&str>,
    stop: &[String],
    latency_ms: u64,
) -> CompletionResult {
    let (mut text, prompt_echo_removed) = match raw.strip_prefix(prompt) {
        Some(rest) if !prompt.is_empty() => (rest, true),
        _ => (raw, false),
    };
    let mut reason = match finish_reason {
        Some("length") => FinishReason::Length,
        Some("stop") | None => FinishReason::Stop,
        Some(_) => FinishReason::Error,
    };
    if let Some(cut) = truncate_at_stop(text, stop) {
        text = cut;
        reason = FinishReason::Stop;
    }
    CompletionResult {
        text: text.to_owned(),
        finish_reason: reason,
        prompt_echo_removed,
        latency_ms,
    }
}

pub(crate) fn parse_response(
    body: &str,
    prompt: &str,
    params: &GenerationParams,
    latency_ms: u64,
) -> Result<Vec<CompletionResult>, ClientError> {
    let mut parsed: ResponseBody =
        serde_json::from_str(body).map_err(|e| ClientError::MalformedResponse(e.to_string()))?;
    if parsed.choices.len() != params.samples_per_request as usize {
        return Err(ClientError::MalformedResponse(format!(
            "expected {} choices, got {}",
            params.samples_per_request,
            parsed.choices.len()
        )));
    }
    parsed.choices.sort_by_key(|c| c.index.unwrap_or(0));
    Ok(parsed
        .choices
        .iter()
        .map(|c| postprocess(prompt, &c.text, c.finish_reason.as_deref(), &params.stop, latency_ms))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TaskKind;
    use crate::promptgen::default_params;

    #[test]
    fn fine_tuned_body() {
        let p = default_params(TaskKind::DomainSynthesis, BackendKind::FineTuned);
        let body = serde_json::to_value(request_body("m", "KEYWORD: toy\nTITLE:", &p, BackendKind::FineTuned)).unwrap();
        let obj = body.as_object().unwrap();
        assert_eq!(obj["top_k"], 50);
        assert_eq!(obj["temperature"], 0.9);
        assert!(!obj.contains_key("presence_penalty"));
        assert!(!obj.contains_key("frequency_penalty"));
        assert_eq!(obj["stop"], serde_json::json!(["\n", "<|endoftext|>"]));
        assert_eq!(obj["n"], 1);
        assert!(obj.values().all(|v| !v.is_null()));
    }

    #[test]
    fn few_shot_body() {
        let mut p = default_params(TaskKind::AnalogyDriven, BackendKind::FewShot);
        p.top_k = Some(10);
        let body = serde_json::to_value(request_body("m", "x", &p, BackendKind::FewShot)).unwrap();
        let obj = body.as_object().unwrap();
        assert!(!obj.contains_key("top_k"));
        assert_eq!(obj["top_p"], 1.0);
        assert_eq!(obj["presence_penalty"], 0.0);
        assert_eq!(obj["frequency_penalty"], 0.0);
    }

    #[test]
    fn echo_and_stop() {
        let stop = vec!["\n".to_owned(), "<|endoftext|>".to_owned()];
        let r = postprocess("KEYWORD: toy\nTITLE:", "KEYWORD: toy\nTITLE: Rolling toy pistol\nKEYWORD:", None, &stop, 3);
        assert_eq!(r.text, " Rolling toy pistol");
        assert!(r.prompt_echo_removed);
        assert_eq!(r.finish_reason, FinishReason::Stop);

        let r = postprocess("p", "abc<|endoftext|>def", Some("length"), &stop, 0);
        assert_eq!(r.text, "abc");
        assert_eq!(r.finish_reason, FinishReason::Stop);

        let r = postprocess("p", "abc", Some("length"), &stop, 0);
        assert_eq!((r.text.as_str(), r.finish_reason, r.prompt_echo_removed), ("abc", FinishReason::Length, false));
    }

    #[test]
    fn response_parsing() {
        let p = GenerationParams {
            samples_per_request: 2,
            ..default_params(TaskKind::DomainSynthesis, BackendKind::FineTuned)
        };
        let body = r#"{"choices":[{"text":" b","index":1,"finish_reason":"stop"},{"text":" a","index":0}]}"#;
        let got = parse_response(body, "x", &p, 0).unwrap();
        assert_eq!(got[0].text, " a");
        assert_eq!(got[1].text, " b");
        assert!(matches!(parse_response("{}", "x", &p, 0), Err(ClientError::MalformedResponse(_))));
        assert!(matches!(
            parse_response(r#"{"choices":[]}"#, "x", &p, 0),
            Err(ClientError::MalformedResponse(_))
        ));
    }
}
