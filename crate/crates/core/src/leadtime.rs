//! Entry times, lead-time statistics, the shuffled-timestamp null model and
//! entry-time distributions.
//!
//! A user's entry time is the offset (hours) of their first relevant message.
//! The lead time of a sensor group over its control group is
//! `dt = mean(t_sensor) - mean(t_control)`; negative values mean the sensors
//! posted earlier.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Message;
use crate::network::{NodeId, SocialGraph};
use crate::sampling::{draw_pair, GeoCombo, Region, SampleGroup, SamplingPool};

/// First relevant-message offset per user.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntryTimeTable {
    pub times: HashMap<String, f64>,
}

impl EntryTimeTable {
    pub fn get(&self, user: &str) -> Option<f64> {
        self.times.get(user).copied()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Per-user minimum `offset_h` over relevance-filtered messages.
pub fn entry_times(messages: &[Message]) -> EntryTimeTable {
    let mut times: HashMap<String, f64> = HashMap::new();
    for m in messages {
        times
            .entry(m.user_id.clone())
            .and_modify(|t| *t = t.min(m.offset_h))
            .or_insert(m.offset_h);
    }
    EntryTimeTable { times }
}

/// Messages per user, optionally restricted to `[start, end)` offsets.
pub fn activity_counts(messages: &[Message], window: Option<(f64, f64)>) -> HashMap<String, u64> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for m in messages {
        if let Some((lo, hi)) = window {
            if m.offset_h < lo || m.offset_h >= hi {
                continue;
            }
        }
        *counts.entry(m.user_id.clone()).or_default() += 1;
    }
    counts
}

/// Graph-aligned view of everything the lead-time statistics need.
#[derive(Debug, Clone)]
pub struct Population {
    graph: Arc<SocialGraph>,
    entry: Vec<Option<f64>>,
    activity: Vec<u64>,
    region: Vec<Option<Region>>,
    pool: SamplingPool,
}

impl Population {
    /// Users outside the graph are ignored. `regions` holds geocoded users
    /// only; users without an entry time are not sampled.
    pub fn new(
        graph: Arc<SocialGraph>,
        entries: &EntryTimeTable,
        activity: &HashMap<String, u64>,
        regions: &HashMap<String, Region>,
    ) -> Self {
        let n = graph.node_count();
        let mut entry = vec![None; n];
        let mut act = vec![0; n];
        let mut region = vec![None; n];
        for v in graph.nodes() {
            let name = graph.name(v);
            entry[v.index()] = entries.get(name);
            act[v.index()] = activity.get(name).copied().unwrap_or(0);
            region[v.index()] = regions.get(name).copied();
        }
        Self::from_parts(graph, entry, act, region)
    }

    pub fn from_parts(
        graph: Arc<SocialGraph>,
        entry: Vec<Option<f64>>,
        activity: Vec<u64>,
        region: Vec<Option<Region>>,
    ) -> Self {
        let n = graph.node_count();
        assert!(entry.len() == n && activity.len() == n && region.len() == n);
        let pool = SamplingPool::new(entry.iter().map(Option::is_some).collect(), region.clone());
        Population {
            graph,
            entry,
            activity,
            region,
            pool,
        }
    }

    /// Same graph, activity and geography with different entry times.
    pub fn with_entries(&self, entries: &EntryTimeTable) -> Self {
        let entry = self.graph.nodes().map(|v| entries.get(self.graph.name(v))).collect();
        Self::from_parts(self.graph.clone(), entry, self.activity.clone(), self.region.clone())
    }

    pub fn graph(&self) -> &SocialGraph {
        &self.graph
    }

    pub fn pool(&self) -> &SamplingPool {
        &self.pool
    }

    pub fn entry(&self, v: NodeId) -> Option<f64> {
        self.entry[v.index()]
    }

    pub fn activity(&self, v: NodeId) -> u64 {
        self.activity[v.index()]
    }

    pub fn region(&self, v: NodeId) -> Option<Region> {
        self.region[v.index()]
    }

    fn group_entries(&self, group: &SampleGroup) -> Result<Vec<f64>> {
        group
            .members
            .iter()
            .map(|&v| {
                self.entry(v)
                    .ok_or_else(|| Error::Integrity(format!("group member {} has no entry time", self.graph.name(v))))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadTimeResult {
    pub sample_size: usize,
    pub combo: GeoCombo,
    pub trials: usize,
    /// Hours; negative means sensors enter first.
    pub dt: f64,
    pub dt_sigma: f64,
    pub mean_tc: f64,
    pub mean_ts: f64,
    /// Mean messages per control user.
    pub n_c: f64,
    /// Mean messages per sensor user.
    pub n_s: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Single-trial lead time for a formed pair of groups.
pub fn lead_time(control: &SampleGroup, sensor: &SampleGroup, pop: &Population) -> Result<LeadTimeResult> {
    if control.members.is_empty() || sensor.members.is_empty() {
        return Err(Error::arg("groups must be nonempty"));
    }
    let tc = pop.group_entries(control)?;
    let ts = pop.group_entries(sensor)?;
    let activity =
        |g: &SampleGroup| g.members.iter().map(|&v| pop.activity(v) as f64).sum::<f64>() / g.members.len() as f64;
    let mean_tc = mean(&tc);
    let mean_ts = mean(&ts);
    Ok(LeadTimeResult {
        sample_size: control.members.len(),
        combo: control.combo,
        trials: 1,
        dt: mean_ts - mean_tc,
        dt_sigma: 0.0,
        mean_tc,
        mean_ts,
        n_c: activity(control),
        n_s: activity(sensor),
    })
}

/// Per-trial results for one size; trial `i` uses seed `base_seed + i`.
pub fn lead_time_trials(
    pop: &Population,
    size: usize,
    trials: usize,
    combo: GeoCombo,
    base_seed: u64,
) -> Result<Vec<LeadTimeResult>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let pair = draw_pair(pop.graph(), pop.pool(), size, combo, base_seed.wrapping_add(i))
                .map_err(|e| annotate(e, size, combo))?;
            lead_time(&pair.control, &pair.sensor, pop)
        })
        .collect()
}

fn annotate(e: Error, size: usize, combo: GeoCombo) -> Error {
    match e {
        Error::Capacity(msg) => Error::Capacity(format!("size {size}, combo {combo}: {msg}")),
        other => other,
    }
}

/// Average single-trial results; `dt_sigma` is the sample standard deviation
/// of `dt` across trials.
pub fn aggregate(results: &[LeadTimeResult]) -> Result<LeadTimeResult> {
    let first = results.first().ok_or_else(|| Error::arg("no trials to aggregate"))?;
    let col = |f: fn(&LeadTimeResult) -> f64| results.iter().map(f).collect::<Vec<f64>>();
    let dts = col(|r| r.dt);
    let mean_tc = mean(&col(|r| r.mean_tc));
    let mean_ts = mean(&col(|r| r.mean_ts));
    Ok(LeadTimeResult {
        sample_size: first.sample_size,
        combo: first.combo,
        trials: results.len(),
        dt: mean_ts - mean_tc,
        dt_sigma: sample_std(&dts),
        mean_tc,
        mean_ts,
        n_c: mean(&col(|r| r.n_c)),
        n_s: mean(&col(|r| r.n_s)),
    })
}

/// One aggregated row per size, deterministic for a fixed `base_seed`.
pub fn lead_time_sweep(
    pop: &Population,
    sizes: &[usize],
    trials: usize,
    combo: GeoCombo,
    base_seed: u64,
) -> Result<Vec<LeadTimeResult>> {
    if trials < 2 {
        return Err(Error::arg("a sweep needs at least 2 trials to estimate sigma"));
    }
    sizes
        .iter()
        .map(|&size| aggregate(&lead_time_trials(pop, size, trials, combo, base_seed)?))
        .collect()
}

pub const SWEEP_HEADER: &str = "size,combo,trials,dt,dt_sigma,mean_tc,mean_ts,n_c,n_s";

pub fn write_sweep<W: Write>(mut w: W, rows: &[LeadTimeResult]) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            r.sample_size, r.combo, r.trials, r.dt, r.dt_sigma, r.mean_tc, r.mean_ts, r.n_c, r.n_s
        )?;
    }
    Ok(())
}

/// Randomly permute timestamps across all messages. Every other field stays
/// with its message, so per-user message counts are preserved.
pub fn null_model_shuffle(messages: &[Message], seed: u64) -> Vec<Message> {
    let mut out = messages.to_vec();
    if out.len() < 2 {
        return out;
    }
    let mut stamps: Vec<_> = out.iter().map(|m| (m.timestamp, m.offset_h)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    stamps.shuffle(&mut rng);
    for (m, (ts, off)) in out.iter_mut().zip(stamps) {
        m.timestamp = ts;
        m.offset_h = off;
    }
    out
}

// ---------------------------------------------------------------------------
// Entry-time distributions

#[derive(Debug, Clone, PartialEq)]
pub struct CdfCurve {
    /// Ascending offsets, hours.
    pub grid: Vec<f64>,
    /// Cumulative fraction at each grid point.
    pub value: Vec<f64>,
}

impl CdfCurve {
    /// Linear interpolation; 0 before the grid and 1 after it.
    pub fn value_at(&self, x: f64) -> f64 {
        let (first, last) = match (self.grid.first(), self.grid.last()) {
            (Some(&f), Some(&l)) => (f, l),
            _ => return f64::NAN,
        };
        if x <= first {
            return if x < first { 0.0 } else { self.value[0] };
        }
        if x >= last {
            return 1.0;
        }
        let i = self.grid.partition_point(|&g| g <= x) - 1;
        let t = (x - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.value[i] + t * (self.value[i + 1] - self.value[i])
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Grid padding on each side, in bandwidths.
pub const CDF_PAD_BANDWIDTHS: f64 = 4.0;

/// Gaussian-kernel estimate of the distribution of `samples`, integrated to a
/// cumulative curve on a regular grid padded by four bandwidths. The curve is
/// normalized by the kernel mass inside the grid, so it starts at 0 and ends
/// at exactly 1.
pub fn kde_cdf(samples: &[f64], bandwidth_h: f64, grid_step_h: f64) -> Result<CdfCurve> {
    if !(bandwidth_h > 0.0) {
        return Err(Error::arg("bandwidth must be positive"));
    }
    if !(grid_step_h > 0.0) {
        return Err(Error::arg("grid step must be positive"));
    }
    if samples.is_empty() {
        return Err(Error::arg("no samples"));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = lo - CDF_PAD_BANDWIDTHS * bandwidth_h;
    let end = hi + CDF_PAD_BANDWIDTHS * bandwidth_h;
    let steps = ((end - start) / grid_step_h - 1e-9).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| start + i as f64 * grid_step_h).collect();
    let n = samples.len() as f64;
    let raw: Vec<f64> = grid
        .par_iter()
        .map(|&x| samples.iter().map(|&t| normal_cdf((x - t) / bandwidth_h)).sum::<f64>() / n)
        .collect();
    let base = raw[0];
    let span = raw[raw.len() - 1] - base;
    let mut value: Vec<f64> = raw.iter().map(|&v| ((v - base) / span).clamp(0.0, 1.0)).collect();
    // Enforce monotonicity against summation rounding.
    for i in 1..value.len() {
        if value[i] < value[i - 1] {
            value[i] = value[i - 1];
        }
    }
    *value.last_mut().unwrap() = 1.0;
    Ok(CdfCurve { grid, value })
}

/// Entry-time CDF of a sample group.
pub fn entry_cdf(group: &SampleGroup, pop: &Population, bandwidth_h: f64, grid_step_h: f64) -> Result<CdfCurve> {
    if group.members.is_empty() {
        return Err(Error::arg("group is empty"));
    }
    kde_cdf(&pop.group_entries(group)?, bandwidth_h, grid_step_h)
}

pub fn write_cdf<W: Write>(mut w: W, curves: &[(&str, &CdfCurve)]) -> std::io::Result<()> {
    writeln!(w, "group,offset_h,cdf")?;
    for (label, c) in curves {
        for (x, v) in c.grid.iter().zip(&c.value) {
            writeln!(w, "{label},{x:.4},{v:.6}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryBin {
    pub bin_start: f64,
    pub count: usize,
    pub mean_activity: Option<f64>,
    pub mean_in_degree: Option<f64>,
    pub mean_out_degree: Option<f64>,
}

/// Mean activity and degrees of `users` binned by entry time. Users without
/// an entry time are skipped; empty bins inside the range are kept with
/// missing means.
pub fn activity_vs_entry(users: &[NodeId], pop: &Population, bin_h: f64) -> Result<Vec<EntryBin>> {
    if !(bin_h > 0.0) {
        return Err(Error::arg("bin width must be positive"));
    }
    let rows: Vec<(i64, NodeId)> = users
        .iter()
        .filter_map(|&v| pop.entry(v).map(|t| ((t / bin_h).floor() as i64, v)))
        .collect();
    let Some(lo) = rows.iter().map(|r| r.0).min() else {
        return Ok(Vec::new());
    };
    let hi = rows.iter().map(|r| r.0).max().unwrap();
    let mut sums = vec![(0usize, 0.0, 0.0, 0.0); (hi - lo + 1) as usize];
    for (b, v) in rows {
        let s = &mut sums[(b - lo) as usize];
        s.0 += 1;
        s.1 += pop.activity(v) as f64;
        s.2 += pop.graph().in_degree(v) as f64;
        s.3 += pop.graph().out_degree(v) as f64;
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(i, (count, a, din, dout))| {
            let avg = |s: f64| (count > 0).then(|| s / count as f64);
            EntryBin {
                bin_start: (lo + i as i64) as f64 * bin_h,
                count,
                mean_activity: avg(a),
                mean_in_degree: avg(din),
                mean_out_degree: avg(dout),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{default_epoch, offset_hours};
    use crate::sampling::GroupKind;

    fn msg(user: &str, id: &str, offset_h: f64) -> Message {
        let epoch = default_epoch();
        let ts = epoch + chrono::Duration::seconds((offset_h * 3600.0) as i64);
        Message {
            message_id: id.into(),
            user_id: user.into(),
            timestamp: ts,
            offset_h: offset_hours(ts, epoch),
            text: "sandy".into(),
            hashtags: vec![],
            geo: None,
            is_retweet: false,
            precomputed_sentiment: None,
        }
    }

    fn line_population(entries: &[f64]) -> Population {
        let n = entries.len();
        let names = (0..n).map(|i| format!("u{i}")).collect();
        let graph = Arc::new(SocialGraph::from_indexed(names, &[]));
        Population::from_parts(
            graph,
            entries.iter().map(|&t| Some(t)).collect(),
            (0..n as u64).collect(),
            vec![Some(Region::Outside); n],
        )
    }

    fn group(kind: GroupKind, ids: &[u32]) -> SampleGroup {
        SampleGroup {
            kind,
            members: ids.iter().map(|&i| NodeId(i)).collect(),
            seed: 0,
            combo: GeoCombo::Any,
        }
    }

    #[test]
    fn entry_is_minimum_offset() {
        let e = entry_times(&[msg("a", "1", 5.0), msg("a", "2", -3.0), msg("b", "3", 1.0)]);
        assert_eq!(e.get("a"), Some(-3.0));
        assert_eq!(e.get("b"), Some(1.0));
        assert!(entry_times(&[]).is_empty());
    }

    #[test]
    fn worked_lead_time() {
        let pop = line_population(&[2.0, 6.0, 1.0, 3.0]);
        let r = lead_time(
            &group(GroupKind::Control, &[0, 1]),
            &group(GroupKind::Sensor, &[2, 3]),
            &pop,
        )
        .unwrap();
        assert_eq!((r.mean_tc, r.mean_ts, r.dt), (4.0, 2.0, -2.0));
        assert_eq!((r.n_c, r.n_s), (0.5, 2.5));
    }

    #[test]
    fn identical_groups_have_zero_lead() {
        let pop = line_population(&[2.0, 6.0]);
        let g = group(GroupKind::Control, &[0, 1]);
        assert_eq!(lead_time(&g, &g, &pop).unwrap().dt, 0.0);
    }

    #[test]
    fn missing_entry_is_integrity_error() {
        let graph = Arc::new(SocialGraph::from_indexed(vec!["a".into(), "b".into()], &[]));
        let pop = Population::from_parts(graph, vec![Some(0.0), None], vec![0, 0], vec![None, None]);
        let err = lead_time(&group(GroupKind::Control, &[0]), &group(GroupKind::Sensor, &[1]), &pop).unwrap_err();
        assert!(matches!(err, Error::Integrity(_)));
    }

    #[test]
    fn aggregate_uses_sample_std() {
        let base = LeadTimeResult {
            sample_size: 10,
            combo: GeoCombo::Any,
            trials: 1,
            dt: 0.0,
            dt_sigma: 0.0,
            mean_tc: 0.0,
            mean_ts: 0.0,
            n_c: 1.0,
            n_s: 2.0,
        };
        let rows = [
            LeadTimeResult {
                dt: -1.0,
                mean_ts: -1.0,
                ..base
            },
            LeadTimeResult {
                dt: -3.0,
                mean_ts: -3.0,
                ..base
            },
        ];
        let agg = aggregate(&rows).unwrap();
        assert_eq!(agg.dt, -2.0);
        assert!((agg.dt_sigma - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(agg.trials, 2);
    }

    #[test]
    fn shuffle_preserves_multiset_and_counts() {
        let ms = vec![msg("a", "1", 1.0), msg("a", "2", 2.0), msg("b", "3", 3.0)];
        let shuffled = null_model_shuffle(&ms, 7);
        let mut before: Vec<_> = ms.iter().map(|m| m.timestamp).collect();
        let mut after: Vec<_> = shuffled.iter().map(|m| m.timestamp).collect();
        before.sort();
        after.sort();
        assert_eq!(before, after);
        for (a, b) in ms.iter().zip(&shuffled) {
            assert_eq!(
                (&a.message_id, &a.user_id, &a.text),
                (&b.message_id, &b.user_id, &b.text)
            );
        }
        assert_eq!(null_model_shuffle(&ms[..1], 1), ms[..1].to_vec());
    }

    #[test]
    fn single_kernel_cdf_is_half_at_centre() {
        let c = kde_cdf(&[0.0], 8.0, 1.0).unwrap();
        let i = c.grid.iter().position(|&x| x == 0.0).unwrap();
        assert!((c.value[i] - 0.5).abs() < 1e-12);
        assert_eq!(*c.value.last().unwrap(), 1.0);
        assert_eq!(c.value[0], 0.0);
        assert!(kde_cdf(&[0.0], 0.0, 1.0).is_err());
        assert!(kde_cdf(&[0.0], -1.0, 1.0).is_err());
    }

    #[test]
    fn cdf_translates_with_its_samples() {
        let control = [3.0, 10.0, 11.5, 40.0, 41.0];
        let sensor: Vec<f64> = control.iter().map(|t| t - 5.0).collect();
        let a = kde_cdf(&control, 8.0, 1.0).unwrap();
        let b = kde_cdf(&sensor, 8.0, 1.0).unwrap();
        assert_eq!(a.grid.len(), b.grid.len());
        for i in 0..a.grid.len() {
            assert!((a.grid[i] - 5.0 - b.grid[i]).abs() < 1e-9);
            assert!((a.value[i] - b.value[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn activity_bins() {
        let pop = line_population(&[0.5, 1.5, 3.5]);
        let bins = activity_vs_entry(&[NodeId(0), NodeId(1), NodeId(2)], &pop, 1.0).unwrap();
        assert_eq!(bins.len(), 4);
        assert_eq!(bins[0].mean_activity, Some(0.0));
        assert_eq!(bins[1].mean_activity, Some(1.0));
        assert_eq!(bins[2].count, 0);
        assert_eq!(bins[2].mean_activity, None);
        let one = activity_vs_entry(&[NodeId(0), NodeId(1)], &pop, 10.0).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].mean_activity, Some(0.5));
    }
}
