#![allow(dead_code)]

use chrono::Duration;
use netsensor::ingest::{default_epoch, Message};
use netsensor::text::extract_hashtags;

/// Message at `offset_h` from the default epoch, hashtags taken from the text.
pub fn msg(id: &str, user: &str, offset_h: f64, text: &str) -> Message {
    let epoch = default_epoch();
    let secs = (offset_h * 3600.0).round() as i64;
    let ts = epoch + Duration::seconds(secs);
    Message {
        message_id: id.to_string(),
        user_id: user.to_string(),
        timestamp: ts,
        offset_h: secs as f64 / 3600.0,
        text: text.to_string(),
        hashtags: extract_hashtags(text),
        geo: None,
        is_retweet: false,
        precomputed_sentiment: None,
    }
}

/// ASCII-only word split used as an independent tokenizer oracle.
pub fn ascii_words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric() && c != '\'')
        .map(|w| w.trim_matches('\''))
        .filter(|w| !w.is_empty())
        .map(|w| w.to_ascii_lowercase())
        .collect()
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}
