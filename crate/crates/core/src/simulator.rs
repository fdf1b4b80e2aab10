//! Synthetic follower graphs, geography and awareness dynamics that emit a
//! message stream in the ingest formats.
//!
//! Simulation time runs from 0 to `horizon_h`. Emitted offsets are relative
//! to landfall, so `offset_h = t - landfall_h` and landfall maps onto the
//! reference epoch.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use chrono::{DateTime, Duration, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{
    build_affected_area, is_affected, AffectedArea, AreaOptions, GeoPoint, StormTrackPoint, WindThreshold,
};
use crate::ingest::{Message, UserProfile};
use crate::network::{NodeId, SocialGraph};
use crate::sampling::Region;

/// Per-message sentiment generator: `Normal(mu(t, region), sd)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentModel {
    pub baseline_mean: f64,
    pub sd: f64,
    /// Amplitude of a 24 h sinusoid added to the baseline.
    pub diurnal_amplitude: f64,
    /// Simulation-time window `[start, end)` of the disturbance; no
    /// disturbance without a start, open-ended without an end.
    pub disturbance_start_h: Option<f64>,
    pub disturbance_end_h: Option<f64>,
    pub disturbed_mean_in: f64,
    pub disturbed_mean_out: f64,
}

impl Default for SentimentModel {
    fn default() -> Self {
        SentimentModel {
            baseline_mean: 0.2,
            sd: 0.15,
            diurnal_amplitude: 0.05,
            disturbance_start_h: None,
            disturbance_end_h: None,
            disturbed_mean_in: -0.4,
            disturbed_mean_out: -0.05,
        }
    }
}

impl SentimentModel {
    pub fn mean(&self, t: f64, region: Region) -> f64 {
        let disturbed = self
            .disturbance_start_h
            .is_some_and(|s| t >= s && self.disturbance_end_h.is_none_or(|e| t < e));
        if disturbed {
            return match region {
                Region::Inside => self.disturbed_mean_in,
                Region::Outside => self.disturbed_mean_out,
            };
        }
        self.baseline_mean + self.diurnal_amplitude * (2.0 * std::f64::consts::PI * t / 24.0).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_nodes: usize,
    pub attach_m: usize,
    pub reciprocity: f64,
    pub affected_fraction: f64,
    /// Endogenous rate per aware followee, per hour.
    pub beta: f64,
    /// Endogenous rate for users outside the affected area; `beta` if unset.
    pub beta_outside: Option<f64>,
    pub lambda_in: f64,
    pub lambda_out: f64,
    /// Posts per hour per unit of `(1 + out_degree)^gamma`.
    pub post_rate_coeff: f64,
    pub gamma: f64,
    pub horizon_h: f64,
    pub landfall_h: f64,
    /// When set, the inside exogenous rate ramps linearly from zero at
    /// `landfall_h - ramp_lead_h` to `lambda_in` at landfall.
    pub ramp_lead_h: Option<f64>,
    /// First post follows awareness by `Uniform(0, jitter_h)`.
    pub jitter_h: f64,
    pub sentiment: SentimentModel,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_nodes: 10_000,
            attach_m: 5,
            reciprocity: 0.5,
            affected_fraction: 0.3,
            beta: 0.05,
            beta_outside: None,
            lambda_in: 0.01,
            lambda_out: 0.01,
            post_rate_coeff: 0.02,
            gamma: 0.5,
            horizon_h: 240.0,
            landfall_h: 120.0,
            ramp_lead_h: None,
            jitter_h: 0.25,
            sentiment: SentimentModel::default(),
            seed: 1,
        }
    }
}

impl SimConfig {
    /// Awareness travels mostly over follow edges from a few exogenous seeds.
    pub fn endogenous_dominant(n_nodes: usize, seed: u64) -> Self {
        SimConfig {
            n_nodes,
            beta: 0.02,
            lambda_in: 0.0005,
            lambda_out: 0.0005,
            seed,
            ..Default::default()
        }
    }

    /// Uniform broadcast awareness; edges barely matter.
    pub fn exogenous_dominant(n_nodes: usize, seed: u64) -> Self {
        SimConfig {
            n_nodes,
            beta: 0.0005,
            lambda_in: 0.02,
            lambda_out: 0.02,
            seed,
            ..Default::default()
        }
    }

    /// Inside rate ramps up over four days before landfall and insiders pass
    /// news on far more readily than outsiders; sentiment drops for a day
    /// after landfall, sharply inside the affected area.
    pub fn sandy_like(n_nodes: usize, seed: u64) -> Self {
        let landfall_h = 120.0;
        SimConfig {
            n_nodes,
            beta: 0.008,
            beta_outside: Some(0.0005),
            lambda_in: 0.02,
            lambda_out: 0.01,
            landfall_h,
            ramp_lead_h: Some(96.0),
            sentiment: SentimentModel {
                disturbance_start_h: Some(landfall_h),
                disturbance_end_h: Some(landfall_h + 24.0),
                ..Default::default()
            },
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.attach_m < 1 {
            return Err(Error::arg("attach_m must be at least 1"));
        }
        if self.n_nodes <= self.attach_m {
            return Err(Error::arg("n_nodes must exceed attach_m"));
        }
        if !prob(self.reciprocity) || !prob(self.affected_fraction) {
            return Err(Error::arg("probabilities must lie in [0, 1]"));
        }
        for (name, v) in [
            ("beta", self.beta),
            ("beta_outside", self.beta_outside.unwrap_or(0.0)),
            ("lambda_in", self.lambda_in),
            ("lambda_out", self.lambda_out),
            ("post_rate_coeff", self.post_rate_coeff),
            ("gamma", self.gamma),
            ("jitter_h", self.jitter_h),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::arg(format!("{name} must be a finite nonnegative number")));
            }
        }
        if !(self.horizon_h > 0.0 && self.horizon_h.is_finite()) {
            return Err(Error::arg("horizon must be positive"));
        }
        if let Some(l) = self.ramp_lead_h {
            if !(l > 0.0) {
                return Err(Error::arg("ramp lead must be positive"));
            }
        }
        if !(self.sentiment.sd >= 0.0) {
            return Err(Error::arg("sentiment sd must be nonnegative"));
        }
        if u32::try_from(self.n_nodes).is_err() {
            return Err(Error::arg("too many nodes"));
        }
        Ok(())
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn node_name(i: usize) -> String {
    format!("u{i}")
}

/// Whether each node lies inside the affected area.
pub fn assign_inside(cfg: &SimConfig) -> Vec<bool> {
    let mut r = rng(cfg.seed, 4);
    (0..cfg.n_nodes).map(|_| r.random_bool(cfg.affected_fraction)).collect()
}

/// Preferential attachment: each new node follows `attach_m` distinct
/// existing nodes chosen proportionally to degree; each follow is mirrored
/// with probability `reciprocity`.
pub fn generate_network(cfg: &SimConfig) -> Result<SocialGraph> {
    cfg.validate()?;
    let m = cfg.attach_m;
    let mut r = rng(cfg.seed, 0);
    let mut endpoints: Vec<u32> = Vec::with_capacity(2 * m * cfg.n_nodes);
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(2 * m * cfg.n_nodes);
    let mut targets: Vec<u32> = Vec::with_capacity(m);
    for v in m..cfg.n_nodes {
        targets.clear();
        if endpoints.is_empty() {
            targets.extend(0..m as u32);
        } else {
            while targets.len() < m {
                let w = endpoints[r.random_range(0..endpoints.len())];
                if !targets.contains(&w) {
                    targets.push(w);
                }
            }
        }
        for &w in &targets {
            edges.push((v as u32, w));
            if r.random_bool(cfg.reciprocity) {
                edges.push((w, v as u32));
            }
            endpoints.push(v as u32);
            endpoints.push(w);
        }
    }
    let names = (0..cfg.n_nodes).map(node_name).collect();
    Ok(SocialGraph::from_indexed(names, &edges))
}

/// Exogenous awareness clock: inverse of the cumulative hazard.
#[derive(Debug, Clone, Copy)]
struct Exogenous {
    rate: f64,
    ramp: Option<(f64, f64)>,
}

impl Exogenous {
    /// Cumulative hazard from minus infinity to `t`.
    fn cumulative(&self, t: f64) -> f64 {
        match self.ramp {
            None => self.rate * t,
            Some((t0, t1)) => {
                let len = t1 - t0;
                if t <= t0 {
                    0.0
                } else if t <= t1 {
                    self.rate * (t - t0).powi(2) / (2.0 * len)
                } else {
                    self.rate * (len / 2.0 + (t - t1))
                }
            }
        }
    }

    /// First event after time 0 given a unit-exponential draw `e`.
    fn first_event(&self, e: f64) -> f64 {
        if self.rate <= 0.0 {
            return f64::INFINITY;
        }
        let target = e + self.cumulative(0.0);
        match self.ramp {
            None => e / self.rate,
            Some((t0, t1)) => {
                let len = t1 - t0;
                let ramp_mass = self.rate * len / 2.0;
                if target <= ramp_mass {
                    t0 + (2.0 * len * target / self.rate).sqrt()
                } else {
                    t1 + (target - ramp_mass) / self.rate
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    node: u32,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on time, ties broken by node id.
        other.time.total_cmp(&self.time).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Awareness times (simulation hours) by first passage: each node's clock
/// is the earliest of its exogenous clock and, for every followee `v`,
/// `aware(v) + Exp(beta)`. Nodes not aware by the horizon get `None`.
pub fn awareness_times(cfg: &SimConfig, g: &SocialGraph, inside: &[bool]) -> Vec<Option<f64>> {
    let n = g.node_count();
    let mut r = rng(cfg.seed, 2);
    let unit = Exp::new(1.0).unwrap();
    let ramp = cfg.ramp_lead_h.map(|l| (cfg.landfall_h - l, cfg.landfall_h));
    let clock_in = Exogenous {
        rate: cfg.lambda_in,
        ramp,
    };
    let clock_out = Exogenous {
        rate: cfg.lambda_out,
        ramp: None,
    };
    let mut best = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::with_capacity(n);
    for v in 0..n {
        let e: f64 = unit.sample(&mut r);
        let t = if inside[v] { clock_in } else { clock_out }.first_event(e);
        best[v] = t;
        if t <= cfg.horizon_h {
            heap.push(Event {
                time: t,
                node: v as u32,
            });
        }
    }
    let beta_out = cfg.beta_outside.unwrap_or(cfg.beta);
    let mut done = vec![false; n];
    let mut aware = vec![None; n];
    while let Some(Event { time, node }) = heap.pop() {
        let v = node as usize;
        if done[v] {
            continue;
        }
        done[v] = true;
        aware[v] = Some(time);
        for &u in g.followers(NodeId(node)) {
            let beta = if inside[u.index()] { cfg.beta } else { beta_out };
            if done[u.index()] || beta <= 0.0 {
                continue;
            }
            let t = time + unit.sample(&mut r) / beta;
            if t < best[u.index()] && t <= cfg.horizon_h {
                best[u.index()] = t;
                heap.push(Event { time: t, node: u.0 });
            }
        }
    }
    aware
}

/// A synthetic storm moving north along the US east coast, recurving inland
/// near New Jersey.
pub fn synthetic_track(epoch: DateTime<Utc>) -> Vec<StormTrackPoint> {
    let fixes: [(f64, f64, f64, f64); 6] = [
        (-72.0, 27.0, -76.0, 300.0),
        (-48.0, 30.5, -75.5, 330.0),
        (-24.0, 34.0, -72.5, 380.0),
        (0.0, 39.4, -74.4, 420.0),
        (12.0, 40.0, -76.5, 300.0),
        (24.0, 40.5, -78.5, 200.0),
    ];
    fixes
        .iter()
        .map(|&(dh, lat, lon, r34)| StormTrackPoint {
            time: epoch + Duration::seconds((dh * 3600.0) as i64),
            center: GeoPoint::exact(lat, lon),
            radii_nm: [[r34, r34 * 0.8, r34 * 0.6, r34 * 0.7], [r34 * 0.5; 4], [r34 * 0.25; 4]],
        })
        .collect()
}

/// Latitude/longitude box the synthetic users live in.
pub const US_BBOX: (f64, f64, f64, f64) = (25.0, 49.0, -124.0, -67.0);

const CITIES: [(f64, f64); 12] = [
    (40.71, -74.01),
    (39.95, -75.17),
    (42.36, -71.06),
    (38.91, -77.04),
    (41.88, -87.63),
    (34.05, -118.24),
    (29.76, -95.37),
    (33.75, -84.39),
    (47.61, -122.33),
    (39.74, -104.99),
    (25.76, -80.19),
    (37.77, -122.42),
];

/// Rough share of users placed near a city rather than uniformly.
const CITY_SHARE: f64 = 0.6;

fn area_bbox(area: &AffectedArea) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for r in &area.rings {
        for &(lat, lon) in &r.vertices {
            b = (b.0.min(lat), b.1.max(lat), b.2.min(lon), b.3.max(lon));
        }
    }
    b
}

fn place_user(r: &mut ChaCha8Rng, want_inside: bool, area: &AffectedArea, area_box: (f64, f64, f64, f64)) -> GeoPoint {
    let spread = Normal::new(0.0, 0.3).unwrap();
    loop {
        let (lat, lon) = if r.random_bool(CITY_SHARE) {
            let c = CITIES[r.random_range(0..CITIES.len())];
            (c.0 + spread.sample(r), c.1 + spread.sample(r))
        } else if want_inside {
            (
                r.random_range(area_box.0..area_box.1),
                r.random_range(area_box.2..area_box.3),
            )
        } else {
            (
                r.random_range(US_BBOX.0..US_BBOX.1),
                r.random_range(US_BBOX.2..US_BBOX.3),
            )
        };
        let lat = (lat * 1e4).round() / 1e4;
        let lon = (lon * 1e4).round() / 1e4;
        if !(US_BBOX.0..=US_BBOX.1).contains(&lat) || !(US_BBOX.2..=US_BBOX.3).contains(&lon) {
            continue;
        }
        let p = GeoPoint::exact(lat, lon);
        if is_affected(&p, area) == want_inside {
            return p;
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub graph: SocialGraph,
    pub profiles: Vec<UserProfile>,
    /// Sorted by timestamp, then id.
    pub messages: Vec<Message>,
    /// Awareness offset (hours from landfall) per node, if aware.
    pub truth: Vec<Option<f64>>,
    pub region: Vec<Region>,
    pub track: Vec<StormTrackPoint>,
    pub area: AffectedArea,
    pub epoch: DateTime<Utc>,
}

impl SimOutput {
    pub fn write_truth<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "user,awareness_h")?;
        for v in self.graph.nodes() {
            if let Some(t) = self.truth[v.index()] {
                writeln!(w, "{},{}", self.graph.name(v), t)?;
            }
        }
        Ok(())
    }
}

fn mood_word(score: f64) -> &'static str {
    if score > 0.05 {
        "safe"
    } else if score < -0.05 {
        "scared"
    } else {
        "update"
    }
}

/// Run awareness dynamics and posting on `g`. Event ordering is sequential,
/// so output depends only on the config.
pub fn simulate_spread(cfg: &SimConfig, g: &SocialGraph, epoch: DateTime<Utc>) -> Result<SimOutput> {
    cfg.validate()?;
    let track = synthetic_track(epoch);
    let area = build_affected_area(&track, WindThreshold::Kt34, AreaOptions::default())?;
    let area_box = area_bbox(&area);

    if g.node_count() != cfg.n_nodes {
        return Err(Error::arg("graph size differs from n_nodes"));
    }
    let inside = assign_inside(cfg);
    let mut geo_rng = rng(cfg.seed, 1);
    let home: Vec<GeoPoint> = inside
        .iter()
        .map(|&i| place_user(&mut geo_rng, i, &area, area_box))
        .collect();
    let region: Vec<Region> = inside
        .iter()
        .map(|&i| if i { Region::Inside } else { Region::Outside })
        .collect();
    let aware = awareness_times(cfg, g, &inside);

    let mut post_rng = rng(cfg.seed, 3);
    let unit = Exp::new(1.0).unwrap();
    let noise = Normal::new(0.0, cfg.sentiment.sd).map_err(|e| Error::arg(e.to_string()))?;
    let mut messages = Vec::new();
    for v in g.nodes() {
        let Some(a) = aware[v.index()] else { continue };
        let rate = cfg.post_rate_coeff * (1.0 + g.out_degree(v) as f64).powf(cfg.gamma);
        let mut t = a + if cfg.jitter_h > 0.0 {
            post_rng.random_range(0.0..cfg.jitter_h)
        } else {
            0.0
        };
        let mut k = 0;
        while t <= cfg.horizon_h {
            let score = cfg.sentiment.mean(t, region[v.index()]) + noise.sample(&mut post_rng);
            // Whole seconds, rounded up so no post precedes awareness.
            let secs = ((t - cfg.landfall_h) * 3600.0).ceil() as i64;
            let p = home[v.index()];
            messages.push(Message {
                message_id: format!("{}-{k}", g.name(v)),
                user_id: g.name(v).to_string(),
                timestamp: epoch + Duration::seconds(secs),
                offset_h: secs as f64 / 3600.0,
                text: format!("sandy {} #sandy", mood_word(score)),
                hashtags: vec!["sandy".into()],
                geo: Some(p),
                is_retweet: false,
                precomputed_sentiment: Some((score * 1e6).round() / 1e6),
            });
            k += 1;
            if rate <= 0.0 {
                break;
            }
            t += unit.sample(&mut post_rng) / rate;
        }
    }
    messages.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.message_id.cmp(&b.message_id))
    });

    let profiles = g
        .nodes()
        .map(|v| UserProfile {
            user_id: g.name(v).to_string(),
            self_location: None,
            friends_count: g.out_degree(v) as u64,
            followers_count: g.in_degree(v) as u64,
            geopoint: Some(home[v.index()]),
        })
        .collect();
    Ok(SimOutput {
        graph: g.clone(),
        profiles,
        messages,
        truth: aware.iter().map(|a| a.map(|t| t - cfg.landfall_h)).collect(),
        region,
        track,
        area,
        epoch,
    })
}

/// Network plus dynamics in one call.
pub fn simulate(cfg: &SimConfig, epoch: DateTime<Utc>) -> Result<SimOutput> {
    let g = generate_network(cfg)?;
    simulate_spread(cfg, &g, epoch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::default_epoch;
    use crate::network::{paradox_stats, DegreeKind};

    fn small(seed: u64) -> SimConfig {
        SimConfig {
            n_nodes: 2000,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn degenerate_growth() {
        let cfg = SimConfig {
            n_nodes: 4,
            attach_m: 3,
            reciprocity: 0.0,
            ..Default::default()
        };
        let g = generate_network(&cfg).unwrap();
        let mut e: Vec<_> = g.edges().map(|(a, b)| (a.0, b.0)).collect();
        e.sort();
        assert_eq!(e, vec![(3, 0), (3, 1), (3, 2)]);
    }

    #[test]
    fn network_is_deterministic() {
        let a = generate_network(&small(9)).unwrap();
        let b = generate_network(&small(9)).unwrap();
        assert!(a.edges().eq(b.edges()));
        let c = generate_network(&small(10)).unwrap();
        assert!(!a.edges().eq(c.edges()));
    }

    #[test]
    fn follows_point_to_older_nodes_unless_mirrored() {
        let cfg = SimConfig {
            reciprocity: 0.0,
            ..small(3)
        };
        let g = generate_network(&cfg).unwrap();
        assert!(g.edges().all(|(a, b)| a.0 > b.0));
        assert_eq!(g.edge_count(), cfg.attach_m * (cfg.n_nodes - cfg.attach_m));
    }

    #[test]
    fn heavy_tail_paradox() {
        let g = generate_network(&small(4)).unwrap().bidirected();
        assert!(paradox_stats(&g, DegreeKind::Out).unwrap().ratio > 1.5);
    }

    #[test]
    fn invalid_config() {
        assert!(generate_network(&SimConfig {
            n_nodes: 5,
            attach_m: 5,
            ..Default::default()
        })
        .is_err());
        assert!(generate_network(&SimConfig {
            reciprocity: 1.5,
            ..Default::default()
        })
        .is_err());
        assert!(generate_network(&SimConfig {
            attach_m: 0,
            ..Default::default()
        })
        .is_err());
        assert!(SimConfig {
            beta: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn ramp_inverse_matches_hazard() {
        let c = Exogenous {
            rate: 0.1,
            ramp: Some((-20.0, 76.0)),
        };
        for e in [0.01, 0.5, 2.0, 5.0, 20.0] {
            let t = c.first_event(e);
            assert!(t > 0.0);
            assert!((c.cumulative(t) - c.cumulative(0.0) - e).abs() < 1e-9);
        }
        let flat = Exogenous { rate: 0.5, ramp: None };
        assert_eq!(flat.first_event(1.0), 2.0);
        assert_eq!(Exogenous { rate: 0.0, ramp: None }.first_event(1.0), f64::INFINITY);
    }

    #[test]
    fn causality_and_silence() {
        let cfg = SimConfig {
            lambda_out: 0.0,
            beta: 0.0,
            lambda_in: 0.05,
            ..small(5)
        };
        let out = simulate(&cfg, default_epoch()).unwrap();
        assert!(!out.messages.is_empty());
        for m in &out.messages {
            let v = out.graph.id(&m.user_id).unwrap();
            assert_eq!(out.region[v.index()], Region::Inside);
            assert!(m.offset_h >= out.truth[v.index()].unwrap());
        }
    }

    #[test]
    fn zero_rates_give_empty_output() {
        let cfg = SimConfig {
            lambda_in: 0.0,
            lambda_out: 0.0,
            ..small(6)
        };
        let out = simulate(&cfg, default_epoch()).unwrap();
        assert!(out.messages.is_empty());
        assert!(out.truth.iter().all(Option::is_none));
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = small(7);
        let a = simulate(&cfg, default_epoch()).unwrap();
        let b = simulate(&cfg, default_epoch()).unwrap();
        assert_eq!(a.messages, b.messages);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn geography_matches_region() {
        let out = simulate(&small(8), default_epoch()).unwrap();
        for (p, r) in out.profiles.iter().zip(&out.region) {
            let inside = is_affected(&p.geopoint.unwrap(), &out.area);
            assert_eq!(inside, *r == Region::Inside);
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        for cfg in [
            SimConfig::default(),
            SimConfig::endogenous_dominant(500, 1),
            SimConfig::sandy_like(500, 2),
        ] {
            let text = serde_json::to_string(&cfg).unwrap();
            assert_eq!(serde_json::from_str::<SimConfig>(&text).unwrap(), cfg);
        }
    }
}
