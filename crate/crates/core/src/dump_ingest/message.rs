//! HTTP/1.x message parsing for dump files.
//!
//! Dumps are complete files, not streams: when a Content-Length header
//! disagrees with the actual number of body bytes, the actual bytes win.
//! Chunked transfer encoding is decoded so downstream consumers always see
//! message-complete bodies.

use std::collections::BTreeMap;

use super::{HttpRequestRecord, HttpResponseRecord, IngestError};

const MAX_HEADERS: usize = 128;

/// Parse one HTTP/1.x request message.
pub fn parse_request(text: &[u8]) -> Result<HttpRequestRecord, IngestError> {
    let mut header_buf = [httparse::EMPTY_HEADER; MAX_HEADERS];
    let mut parsed = httparse::Request::new(&mut header_buf);
    let head_len = match parsed.parse(text) {
        Ok(httparse::Status::Complete(len)) => len,
        Ok(httparse::Status::Partial) => {
            return Err(IngestError::MalformedRequest(
                "incomplete message head (no blank line)".into(),
            ))
        }
        Err(err) => return Err(IngestError::MalformedRequest(err.to_string())),
    };
    let method = parsed
        .method
        .ok_or_else(|| IngestError::MalformedRequest("missing method".into()))?
        .to_ascii_uppercase();
    let target = parsed
        .path
        .ok_or_else(|| IngestError::MalformedRequest("missing request target".into()))?;

    let headers = collect_headers(parsed.headers)?;
    let (raw_path, query_parameters) = split_target(target)?;
    let body = decode_body(&headers, &text[head_len..])
        .map_err(IngestError::MalformedRequest)?;
    let structured_body = parse_body(&body, content_type_of(&headers).as_deref());

    Ok(HttpRequestRecord {
        method,
        raw_path,
        query_parameters,
        headers,
        body,
        structured_body,
    })
}

/// Parse one HTTP/1.x response message.
pub fn parse_response(text: &[u8]) -> Result<HttpResponseRecord, IngestError> {
    let mut header_buf = [httparse::EMPTY_HEADER; MAX_HEADERS];
    let mut parsed = httparse::Response::new(&mut header_buf);
    let head_len = match parsed.parse(text) {
        Ok(httparse::Status::Complete(len)) => len,
        Ok(httparse::Status::Partial) => {
            return Err(IngestError::MalformedResponse(
                "incomplete message head (no blank line)".into(),
            ))
        }
        Err(err) => return Err(IngestError::MalformedResponse(err.to_string())),
    };
    let status_code = parsed
        .code
        .ok_or_else(|| IngestError::MalformedResponse("missing status code".into()))?;
    if !(100..=599).contains(&status_code) {
        return Err(IngestError::MalformedResponse(format!(
            "status code {status_code} outside 100..599"
        )));
    }

    let headers = collect_headers(parsed.headers)?;
    let body = decode_body(&headers, &text[head_len..])
        .map_err(IngestError::MalformedResponse)?;
    let structured_body = parse_body(&body, content_type_of(&headers).as_deref());

    Ok(HttpResponseRecord {
        status_code,
        headers,
        body,
        structured_body,
    })
}

/// Attempt a structured parse of a message body. Only JSON is supported;
/// any other (or missing) declared type yields `None`, as does a failed
/// parse. Raw bytes are always retained by the caller regardless.
pub fn parse_body(body: &[u8], declared_content_type: Option<&str>) -> Option<serde_json::Value> {
    let content_type = declared_content_type?;
    if !is_json_media_type(content_type) || body.is_empty() {
        return None;
    }
    serde_json::from_slice(body).ok()
}

/// True for `application/json` and `+json` suffixed media types. The input
/// must already be normalized (lowercase, no parameters).
pub fn is_json_media_type(media_type: &str) -> bool {
    match media_type.split_once('/') {
        Some((_, subtype)) => subtype == "json" || subtype.ends_with("+json"),
        None => false,
    }
}

fn collect_headers(parsed: &[httparse::Header<'_>]) -> Result<Vec<(String, String)>, IngestError> {
    parsed
        .iter()
        .map(|h| {
            let value = std::str::from_utf8(h.value)
                .map_err(|_| {
                    IngestError::MalformedRequest(format!(
                        "header {:?} has non-UTF-8 value",
                        h.name
                    ))
                })?
                .trim()
                .to_string();
            Ok((h.name.to_string(), value))
        })
        .collect()
}

fn content_type_of(headers: &[(String, String)]) -> Option<String> {
    headers
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case("content-type"))
        .map(|(_, v)| crate::spec_model::normalize_media_type(v))
}

/// Split a request target into the bare path and the decoded query
/// multimap. Absolute-form targets are reduced to their path component.
fn split_target(target: &str) -> Result<(String, BTreeMap<String, Vec<String>>), IngestError> {
    let target = target.split('#').next().unwrap_or(target);
    let (path_part, query_part) = match target.split_once('?') {
        Some((p, q)) => (p, Some(q)),
        None => (target, None),
    };

    let raw_path = if let Some(scheme_rest) = path_part.split_once("://") {
        let after_authority = scheme_rest.1.find('/').map(|i| &scheme_rest.1[i..]);
        after_authority.unwrap_or("/").to_string()
    } else {
        path_part.to_string()
    };
    if !raw_path.starts_with('/') {
        return Err(IngestError::MalformedRequest(format!(
            "request target {target:?} has no absolute path"
        )));
    }

    let mut query_parameters: BTreeMap<String, Vec<String>> = BTreeMap::new();
    if let Some(query) = query_part {
        for (name, value) in form_urlencoded::parse(query.as_bytes()) {
            query_parameters
                .entry(name.into_owned())
                .or_default()
                .push(value.into_owned());
        }
    }
    Ok((raw_path, query_parameters))
}

/// Body bytes of a message given its headers and the raw bytes that follow
/// the blank line.
fn decode_body(headers: &[(String, String)], rest: &[u8]) -> Result<Vec<u8>, String> {
    let chunked = headers
        .iter()
        .filter(|(n, _)| n.eq_ignore_ascii_case("transfer-encoding"))
        .any(|(_, v)| v.to_ascii_lowercase().contains("chunked"));
    if chunked {
        decode_chunked(rest)
    } else {
        Ok(rest.to_vec())
    }
}

fn decode_chunked(mut rest: &[u8]) -> Result<Vec<u8>, String> {
    let mut body = Vec::new();
    loop {
        let line_end = find_crlf(rest).ok_or("chunked body missing size line")?;
        let size_line = std::str::from_utf8(&rest[..line_end])
            .map_err(|_| "chunk size line is not UTF-8".to_string())?;
        let size_text = size_line.split(';').next().unwrap_or("").trim();
        let size = usize::from_str_radix(size_text, 16)
            .map_err(|_| format!("invalid chunk size {size_text:?}"))?;
        rest = &rest[line_end + 2..];
        if size == 0 {
            // Trailers, if any, are dropped.
            return Ok(body);
        }
        if rest.len() < size {
            return Err("chunk data truncated".into());
        }
        body.extend_from_slice(&rest[..size]);
        rest = &rest[size..];
        if rest.starts_with(b"\r\n") {
            rest = &rest[2..];
        } else if rest.starts_with(b"\n") {
            rest = &rest[1..];
        } else {
            return Err("chunk data not terminated by CRLF".into());
        }
    }
}

fn find_crlf(bytes: &[u8]) -> Option<usize> {
    bytes.windows(2).position(|w| w == b"\r\n")
}
