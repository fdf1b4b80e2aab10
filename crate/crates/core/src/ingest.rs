//! Message stream ingestion: line-delimited JSON parsing, deduplication,
//! relevance filtering and keyword histograms.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::text::{extract_hashtags, normalize_hashtag, tokenize};

/// 2012-10-30 00:00 UTC.
pub fn default_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2012, 10, 30, 0, 0, 0).unwrap()
}

/// Hours from `epoch` to `ts`, at one-second resolution.
pub fn offset_hours(ts: DateTime<Utc>, epoch: DateTime<Utc>) -> f64 {
    (ts - epoch).num_seconds() as f64 / 3600.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub message_id: String,
    pub user_id: String,
    pub timestamp: DateTime<Utc>,
    pub offset_h: f64,
    pub text: String,
    /// Lowercase, without '#'.
    pub hashtags: Vec<String>,
    pub geo: Option<GeoPoint>,
    pub is_retweet: bool,
    pub precomputed_sentiment: Option<f64>,
}

impl Message {
    /// Replace the timestamp, keeping `offset_h` consistent with `epoch`.
    pub fn set_timestamp(&mut self, ts: DateTime<Utc>, epoch: DateTime<Utc>) {
        self.timestamp = ts;
        self.offset_h = offset_hours(ts, epoch);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub self_location: Option<String>,
    /// Out-degree: accounts this user follows.
    pub friends_count: u64,
    /// In-degree.
    pub followers_count: u64,
    pub geopoint: Option<GeoPoint>,
}

/// Record field names for each logical message/profile attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schema {
    pub id: String,
    pub user: String,
    pub ts: String,
    pub text: String,
    pub hashtags: String,
    pub lat: String,
    pub lon: String,
    pub retweet: String,
    pub sentiment: String,
    pub location: String,
    pub friends: String,
    pub followers: String,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            id: "id".into(),
            user: "user".into(),
            ts: "ts".into(),
            text: "text".into(),
            hashtags: "hashtags".into(),
            lat: "lat".into(),
            lon: "lon".into(),
            retweet: "retweet".into(),
            sentiment: "sentiment".into(),
            location: "location".into(),
            friends: "friends".into(),
            followers: "followers".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub lines: usize,
    pub parsed: usize,
    pub malformed: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedStream {
    /// Sorted by `(timestamp, message_id)`.
    pub messages: Vec<Message>,
    /// Sorted by `user_id`.
    pub profiles: Vec<UserProfile>,
    pub report: ParseReport,
}

#[derive(Debug, Default)]
struct ProfilePatch {
    location: Option<String>,
    friends: Option<u64>,
    followers: Option<u64>,
    geopoint: Option<GeoPoint>,
}

enum LineOutcome {
    Skip,
    Record(Box<Message>, ProfilePatch),
    Malformed(String),
}

const MALFORMED_SAMPLE: usize = 5;

fn lines_of(buf: &[u8]) -> Vec<&[u8]> {
    buf.split(|&b| b == b'\n')
        .map(|l| l.strip_suffix(b"\r").unwrap_or(l))
        .collect()
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn sample_line(line: &[u8]) -> String {
    let s = String::from_utf8_lossy(line);
    s.chars().take(200).collect()
}

/// Parse a line-delimited JSON message stream.
///
/// Malformed lines are skipped and counted; more than half malformed is
/// reported as [`Error::SuspiciousInput`]. Duplicate ids keep the first
/// occurrence in input order. Lines are parsed in parallel and merged in
/// `(timestamp, message_id)` order, so the result does not depend on sharding.
pub fn parse_stream<R: Read>(mut reader: R, schema: &Schema, epoch: DateTime<Utc>) -> Result<ParsedStream> {
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf)?;
    parse_bytes(&buf, schema, epoch)
}

pub fn parse_bytes(buf: &[u8], schema: &Schema, epoch: DateTime<Utc>) -> Result<ParsedStream> {
    let outcomes: Vec<LineOutcome> = lines_of(buf)
        .into_par_iter()
        .map(|raw| match std::str::from_utf8(raw) {
            Err(_) => LineOutcome::Malformed(sample_line(raw)),
            Ok(line) if is_skippable(line) => LineOutcome::Skip,
            Ok(line) => match parse_message_line(line, schema, epoch) {
                Ok((m, p)) => LineOutcome::Record(Box::new(m), p),
                Err(_) => LineOutcome::Malformed(sample_line(raw)),
            },
        })
        .collect();

    let mut report = ParseReport::default();
    let mut sample = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut messages = Vec::new();
    let mut profiles: HashMap<String, UserProfile> = HashMap::new();
    for outcome in outcomes {
        match outcome {
            LineOutcome::Skip => {}
            LineOutcome::Malformed(s) => {
                report.lines += 1;
                report.malformed += 1;
                if sample.len() < MALFORMED_SAMPLE {
                    sample.push(s);
                }
            }
            LineOutcome::Record(m, patch) => {
                report.lines += 1;
                report.parsed += 1;
                let profile = profiles.entry(m.user_id.clone()).or_insert_with(|| UserProfile {
                    user_id: m.user_id.clone(),
                    ..Default::default()
                });
                apply_patch(profile, patch);
                if seen.insert(m.message_id.clone()) {
                    messages.push(*m);
                } else {
                    report.duplicates += 1;
                }
            }
        }
    }
    check_suspicious(&report, sample)?;
    messages.par_sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.message_id.cmp(&b.message_id))
    });
    let mut profiles: Vec<UserProfile> = profiles.into_values().collect();
    profiles.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    Ok(ParsedStream {
        messages,
        profiles,
        report,
    })
}

fn check_suspicious(report: &ParseReport, sample: Vec<String>) -> Result<()> {
    if report.lines > 0 && 2 * report.malformed > report.lines {
        return Err(Error::SuspiciousInput {
            lines: report.lines,
            malformed: report.malformed,
            sample,
        });
    }
    Ok(())
}

fn apply_patch(p: &mut UserProfile, patch: ProfilePatch) {
    if let Some(l) = patch.location {
        p.self_location = Some(l);
    }
    if let Some(f) = patch.friends {
        p.friends_count = f;
    }
    if let Some(f) = patch.followers {
        p.followers_count = f;
    }
    if let Some(g) = patch.geopoint {
        p.geopoint = Some(g);
    }
}

fn get<'a>(obj: &'a serde_json::Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.get(key).filter(|v| !v.is_null())
}

fn as_id(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        Value::Number(n) if n.is_u64() || n.is_i64() => Some(n.to_string()),
        _ => None,
    }
}

fn as_count(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// ISO-8601 text or epoch seconds (number or numeric string), truncated to
/// whole seconds.
pub fn parse_timestamp(v: &Value) -> Option<DateTime<Utc>> {
    let from_secs = |secs: f64| -> Option<DateTime<Utc>> {
        if !secs.is_finite() {
            return None;
        }
        Utc.timestamp_opt(secs.floor() as i64, 0).single()
    };
    match v {
        Value::Number(n) => n
            .as_i64()
            .and_then(|s| Utc.timestamp_opt(s, 0).single())
            .or_else(|| from_secs(n.as_f64()?)),
        Value::String(s) => {
            let s = s.trim();
            if let Ok(secs) = s.parse::<f64>() {
                return from_secs(secs);
            }
            if let Ok(t) = DateTime::parse_from_rfc3339(s) {
                return Utc.timestamp_opt(t.timestamp(), 0).single();
            }
            for fmt in [
                "%Y-%m-%dT%H:%M:%S",
                "%Y-%m-%d %H:%M:%S",
                "%Y-%m-%dT%H:%M",
                "%Y-%m-%d %H:%M",
            ] {
                if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
                    return Utc.timestamp_opt(t.and_utc().timestamp(), 0).single();
                }
            }
            None
        }
        _ => None,
    }
}

fn parse_message_line(
    line: &str,
    schema: &Schema,
    epoch: DateTime<Utc>,
) -> std::result::Result<(Message, ProfilePatch), &'static str> {
    let value: Value = serde_json::from_str(line).map_err(|_| "json")?;
    let obj = value.as_object().ok_or("not an object")?;
    let message_id = get(obj, &schema.id).and_then(as_id).ok_or("id")?;
    let user_id = get(obj, &schema.user).and_then(as_id).ok_or("user")?;
    let timestamp = get(obj, &schema.ts).and_then(parse_timestamp).ok_or("ts")?;
    let text = match get(obj, &schema.text) {
        Some(Value::String(s)) => s.clone(),
        _ => return Err("text"),
    };
    let hashtags = match get(obj, &schema.hashtags) {
        None => extract_hashtags(&text),
        Some(Value::Array(items)) => items
            .iter()
            .map(|t| t.as_str().map(normalize_hashtag).ok_or("hashtag"))
            .collect::<std::result::Result<Vec<_>, _>>()?,
        Some(_) => return Err("hashtags"),
    };
    let geo = match (get(obj, &schema.lat), get(obj, &schema.lon)) {
        (None, None) => None,
        (Some(lat), Some(lon)) => {
            let lat = as_f64(lat).ok_or("lat")?;
            let lon = as_f64(lon).ok_or("lon")?;
            Some(GeoPoint::new(lat, lon, crate::geo::Precision::Exact).map_err(|_| "coords")?)
        }
        _ => return Err("lat/lon"),
    };
    let is_retweet = match get(obj, &schema.retweet) {
        None => false,
        Some(Value::Bool(b)) => *b,
        Some(Value::Number(n)) => n.as_u64().map(|x| x != 0).ok_or("retweet")?,
        Some(_) => return Err("retweet"),
    };
    let precomputed_sentiment = match get(obj, &schema.sentiment) {
        None => None,
        Some(v) => Some(as_f64(v).ok_or("sentiment")?),
    };
    let patch = ProfilePatch {
        location: get(obj, &schema.location).and_then(|v| v.as_str().map(str::to_string)),
        friends: get(obj, &schema.friends).and_then(as_count),
        followers: get(obj, &schema.followers).and_then(as_count),
        geopoint: None,
    };
    Ok((
        Message {
            message_id,
            user_id,
            timestamp,
            offset_h: offset_hours(timestamp, epoch),
            text,
            hashtags,
            geo,
            is_retweet,
            precomputed_sentiment,
        },
        patch,
    ))
}

#[derive(Serialize)]
struct WireMessage<'a> {
    id: &'a str,
    user: &'a str,
    ts: String,
    text: &'a str,
    hashtags: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    lat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lon: Option<f64>,
    retweet: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    sentiment: Option<f64>,
}

pub fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Write messages as line-delimited JSON with the default field names.
pub fn write_messages<W: Write>(mut w: W, messages: &[Message]) -> std::io::Result<()> {
    for m in messages {
        let wire = WireMessage {
            id: &m.message_id,
            user: &m.user_id,
            ts: format_timestamp(m.timestamp),
            text: &m.text,
            hashtags: &m.hashtags,
            lat: m.geo.map(|g| g.lat),
            lon: m.geo.map(|g| g.lon),
            retweet: m.is_retweet,
            sentiment: m.precomputed_sentiment,
        };
        serde_json::to_writer(&mut w, &wire)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct WireProfile<'a> {
    user: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    location: Option<&'a str>,
    friends: u64,
    followers: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lon: Option<f64>,
}

pub fn write_profiles<W: Write>(mut w: W, profiles: &[UserProfile]) -> std::io::Result<()> {
    for p in profiles {
        let wire = WireProfile {
            user: &p.user_id,
            location: p.self_location.as_deref(),
            friends: p.friends_count,
            followers: p.followers_count,
            lat: p.geopoint.map(|g| g.lat),
            lon: p.geopoint.map(|g| g.lon),
        };
        serde_json::to_writer(&mut w, &wire)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse a line-delimited profile file `{user, location, friends, followers, lat, lon}`.
/// Later records for the same user overwrite earlier ones.
pub fn parse_profiles<R: Read>(mut reader: R, schema: &Schema) -> Result<(Vec<UserProfile>, ParseReport)> {
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf)?;
    let mut report = ParseReport::default();
    let mut sample = Vec::new();
    let mut profiles: HashMap<String, UserProfile> = HashMap::new();
    for raw in lines_of(&buf) {
        let Ok(line) = std::str::from_utf8(raw) else {
            report.lines += 1;
            report.malformed += 1;
            if sample.len() < MALFORMED_SAMPLE {
                sample.push(sample_line(raw));
            }
            continue;
        };
        if is_skippable(line) {
            continue;
        }
        report.lines += 1;
        let parsed = serde_json::from_str::<Value>(line).ok().and_then(|v| {
            let obj = v.as_object()?;
            let user = get(obj, &schema.user).and_then(as_id)?;
            let patch = ProfilePatch {
                location: get(obj, &schema.location).and_then(|v| v.as_str().map(str::to_string)),
                friends: get(obj, &schema.friends).and_then(as_count),
                followers: get(obj, &schema.followers).and_then(as_count),
                geopoint: match (get(obj, &schema.lat), get(obj, &schema.lon)) {
                    (None, None) => None,
                    (Some(lat), Some(lon)) => {
                        Some(GeoPoint::new(as_f64(lat)?, as_f64(lon)?, crate::geo::Precision::Exact).ok()?)
                    }
                    _ => return None,
                },
            };
            Some((user, patch))
        });
        match parsed {
            Some((user, patch)) => {
                report.parsed += 1;
                let p = profiles.entry(user.clone()).or_insert_with(|| UserProfile {
                    user_id: user,
                    ..Default::default()
                });
                apply_patch(p, patch);
            }
            None => {
                report.malformed += 1;
                if sample.len() < MALFORMED_SAMPLE {
                    sample.push(sample_line(raw));
                }
            }
        }
    }
    check_suspicious(&report, sample)?;
    let mut profiles: Vec<UserProfile> = profiles.into_values().collect();
    profiles.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    Ok((profiles, report))
}

// ---------------------------------------------------------------------------
// Relevance filtering

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterLevel {
    None,
    Moderate,
    Strict,
}

const STRICT_KEYWORDS: &[&str] = &["sandy"];
const MODERATE_KEYWORDS: &[&str] = &["sandy", "storm", "hurricane", "huracán", "superstorm", "frankenstorm"];

impl FilterLevel {
    pub fn keywords(self) -> &'static [&'static str] {
        match self {
            FilterLevel::None => &[],
            FilterLevel::Moderate => MODERATE_KEYWORDS,
            FilterLevel::Strict => STRICT_KEYWORDS,
        }
    }
}

impl std::str::FromStr for FilterLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(FilterLevel::None),
            "moderate" => Ok(FilterLevel::Moderate),
            "strict" => Ok(FilterLevel::Strict),
            _ => Err(Error::arg(format!("unknown filter level {s:?}"))),
        }
    }
}

/// Whether the message carries one of `keywords` as a whole word token or a
/// hashtag.
pub fn mentions_any(m: &Message, keywords: &[&str]) -> bool {
    if m.hashtags.iter().any(|h| keywords.contains(&h.as_str())) {
        return true;
    }
    m.text.unicode_words().any(|w| {
        // Cheap reject before lowercasing: keyword lengths are bounded.
        w.len() <= 16 && keywords.contains(&w.to_lowercase().as_str())
    })
}

pub fn is_relevant(m: &Message, level: FilterLevel) -> bool {
    level == FilterLevel::None || mentions_any(m, level.keywords())
}

/// Messages matching `level`, in input order.
pub fn filter_relevance(messages: &[Message], level: FilterLevel) -> Vec<Message> {
    if level == FilterLevel::None {
        return messages.to_vec();
    }
    messages.par_iter().filter(|m| is_relevant(m, level)).cloned().collect()
}

/// Per-bin counts of keyword occurrences, and of those that also mention
/// "sandy". Bins start at multiples of `bin_h`, so offset zero is a boundary;
/// the range spans every input message.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordHistogram {
    pub keyword: String,
    pub bin_h: f64,
    pub first_bin: i64,
    pub total: Vec<u64>,
    pub with_sandy: Vec<u64>,
}

impl KeywordHistogram {
    pub fn bin_start(&self, i: usize) -> f64 {
        (self.first_bin + i as i64) as f64 * self.bin_h
    }

    /// Non-zero bins keyed by start offset.
    pub fn nonzero(&self) -> Vec<(f64, u64)> {
        self.total
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (self.bin_start(i), c))
            .collect()
    }
}

pub fn bin_index(offset_h: f64, bin_h: f64) -> i64 {
    (offset_h / bin_h).floor() as i64
}

/// Whether `tokens` contains `phrase` as a contiguous run.
fn contains_phrase(tokens: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && tokens.windows(phrase.len()).any(|w| w == phrase)
}

pub fn keyword_histogram(messages: &[Message], keyword: &str, bin_h: f64) -> Result<KeywordHistogram> {
    if !(bin_h > 0.0) {
        return Err(Error::arg("bin width must be positive"));
    }
    let phrase = tokenize(keyword);
    let tag = normalize_hashtag(keyword);
    let sandy = ["sandy"];
    let (lo, hi) = messages.iter().fold((i64::MAX, i64::MIN), |(lo, hi), m| {
        let b = bin_index(m.offset_h, bin_h);
        (lo.min(b), hi.max(b))
    });
    let n_bins = if messages.is_empty() { 0 } else { (hi - lo + 1) as usize };
    let mut hist = KeywordHistogram {
        keyword: keyword.to_string(),
        bin_h,
        first_bin: if messages.is_empty() { 0 } else { lo },
        total: vec![0; n_bins],
        with_sandy: vec![0; n_bins],
    };
    let hits: Vec<(usize, bool)> = messages
        .par_iter()
        .filter_map(|m| {
            let tokens = tokenize(&m.text);
            let hit = m.hashtags.contains(&tag) || contains_phrase(&tokens, &phrase);
            hit.then(|| {
                let idx = (bin_index(m.offset_h, bin_h) - lo) as usize;
                (idx, mentions_any(m, &sandy))
            })
        })
        .collect();
    for (idx, with_sandy) in hits {
        hist.total[idx] += 1;
        if with_sandy {
            hist.with_sandy[idx] += 1;
        }
    }
    Ok(hist)
}
