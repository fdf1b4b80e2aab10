//! Hourly grid aggregation of geolocated sentiment and a robust per-cell
//! detector for negative-sentiment anomalies.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geo::{assign_cell, Cell, GeoPoint, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingPoint {
    pub offset_h: f64,
    pub point: GeoPoint,
    pub relative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    pub count: u64,
    /// Present iff `count > 0`.
    pub mean_sentiment: Option<f64>,
    pub positive: u64,
    pub negative: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSnapshot {
    /// Index of the hour bin; `hour_start = hour * hour_h`.
    pub hour: i64,
    pub hour_start: f64,
    pub cells: BTreeMap<Cell, CellStat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAggregate {
    pub hour_h: f64,
    /// Ascending by hour; only hours with in-grid messages appear.
    pub snapshots: Vec<GridSnapshot>,
    pub dropped: usize,
}

#[derive(Default, Clone, Copy)]
struct Acc {
    count: u64,
    sum: f64,
    positive: u64,
    negative: u64,
}

pub fn grid_aggregate(points: &[SensingPoint], grid: &GridSpec, hour_h: f64) -> Result<GridAggregate> {
    grid.validate()?;
    if !(hour_h > 0.0) {
        return Err(Error::arg("hour length must be positive"));
    }
    let assigned: Vec<Option<(i64, Cell)>> = points
        .par_iter()
        .map(|p| assign_cell(&p.point, grid).map(|c| ((p.offset_h / hour_h).floor() as i64, c)))
        .collect();
    let mut by_hour: BTreeMap<i64, BTreeMap<Cell, Acc>> = BTreeMap::new();
    let mut dropped = 0;
    for (p, a) in points.iter().zip(assigned) {
        let Some((hour, cell)) = a else {
            dropped += 1;
            continue;
        };
        let acc = by_hour.entry(hour).or_default().entry(cell).or_default();
        acc.count += 1;
        acc.sum += p.relative;
        if p.relative > 0.0 {
            acc.positive += 1;
        } else if p.relative < 0.0 {
            acc.negative += 1;
        }
    }
    let snapshots = by_hour
        .into_iter()
        .map(|(hour, cells)| GridSnapshot {
            hour,
            hour_start: hour as f64 * hour_h,
            cells: cells
                .into_iter()
                .map(|(c, a)| {
                    (
                        c,
                        CellStat {
                            count: a.count,
                            mean_sentiment: Some(a.sum / a.count as f64),
                            positive: a.positive,
                            negative: a.negative,
                        },
                    )
                })
                .collect(),
        })
        .collect();
    Ok(GridAggregate {
        hour_h,
        snapshots,
        dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub min_count: u64,
    pub k_mad: f64,
    pub persistence_hours: u32,
    /// Trailing baseline length in hours; at least one diurnal cycle.
    pub baseline_window_h: u32,
    /// Fewest non-empty baseline hours needed to evaluate an hour.
    pub min_baseline_samples: usize,
    /// Lower bound on the MAD so a perfectly flat baseline cannot make every
    /// small wobble significant.
    pub mad_floor: f64,
    /// Also require negatives to outnumber positives in the hour.
    pub confirm_composition: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            min_count: 20,
            k_mad: 3.0,
            persistence_hours: 2,
            baseline_window_h: 72,
            min_baseline_samples: 24,
            mad_floor: 0.02,
            confirm_composition: true,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.baseline_window_h < 24 {
            return Err(Error::arg("baseline window must be at least 24 h"));
        }
        if !(self.k_mad > 0.0) {
            return Err(Error::arg("k_mad must be positive"));
        }
        if self.persistence_hours == 0 {
            return Err(Error::arg("persistence must be at least 1 h"));
        }
        if !(self.mad_floor > 0.0) {
            return Err(Error::arg("MAD floor must be positive"));
        }
        if self.min_baseline_samples == 0 {
            return Err(Error::arg("baseline needs at least one sample"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub cell: Cell,
    pub start_h: f64,
    pub end_h: f64,
    /// Largest depth below the baseline median, in MAD units.
    pub severity: f64,
    /// Messages in the cell across the window.
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub alerts: Vec<Alert>,
    /// Cells that never accumulated enough baseline history.
    pub skipped: Vec<Cell>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median and raw median absolute deviation.
pub fn median_mad(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = median(&v);
    let mut dev: Vec<f64> = v.iter().map(|x| (x - m).abs()).collect();
    dev.sort_by(f64::total_cmp);
    (m, median(&dev))
}

/// Depth in MAD units if hour `i` of `series` is anomalous, else `None`.
/// `Err(())` means the baseline is too short to judge.
fn evaluate(series: &[(i64, CellStat)], i: usize, window: i64, cfg: &DetectorConfig) -> Result<Option<f64>, ()> {
    let (hour, stat) = series[i];
    let baseline: Vec<f64> = series[..i]
        .iter()
        .rev()
        .take_while(|(h, _)| *h >= hour - window)
        .filter_map(|(_, s)| s.mean_sentiment)
        .collect();
    if baseline.len() < cfg.min_baseline_samples {
        return Err(());
    }
    let Some(mean) = stat.mean_sentiment else {
        return Ok(None);
    };
    let (med, mad) = median_mad(&baseline);
    let scale = mad.max(cfg.mad_floor);
    let hit = stat.count >= cfg.min_count
        && mean <= med - cfg.k_mad * scale
        && (!cfg.confirm_composition || stat.negative > stat.positive);
    Ok(hit.then(|| (med - mean) / scale))
}

/// Flag cells whose hourly mean sentiment sits far below their own trailing
/// baseline for at least `persistence_hours` consecutive hours. The baseline
/// for an hour is that cell's non-empty hours in the preceding
/// `baseline_window_h`, never including the hour under test.
pub fn detect(agg: &GridAggregate, cfg: &DetectorConfig) -> Result<Detection> {
    cfg.validate()?;
    let window = (cfg.baseline_window_h as f64 / agg.hour_h).ceil() as i64;
    let mut per_cell: BTreeMap<Cell, Vec<(i64, CellStat)>> = BTreeMap::new();
    for s in &agg.snapshots {
        for (&c, &stat) in &s.cells {
            per_cell.entry(c).or_default().push((s.hour, stat));
        }
    }
    let results: Vec<(Cell, Vec<Alert>, bool)> = per_cell
        .into_par_iter()
        .map(|(cell, series)| {
            let mut judged = false;
            let mut hits: Vec<(i64, f64, u64)> = Vec::new();
            for i in 0..series.len() {
                match evaluate(&series, i, window, cfg) {
                    Ok(Some(depth)) => {
                        judged = true;
                        hits.push((series[i].0, depth, series[i].1.count));
                    }
                    Ok(None) => judged = true,
                    Err(()) => {}
                }
            }
            (cell, merge_runs(cell, &hits, agg.hour_h, cfg.persistence_hours), judged)
        })
        .collect();
    let mut alerts = Vec::new();
    let mut skipped = Vec::new();
    for (cell, a, judged) in results {
        alerts.extend(a);
        if !judged {
            skipped.push(cell);
        }
    }
    alerts.sort_by(|a, b| a.start_h.total_cmp(&b.start_h).then(a.cell.cmp(&b.cell)));
    Ok(Detection { alerts, skipped })
}

fn merge_runs(cell: Cell, hits: &[(i64, f64, u64)], hour_h: f64, persistence: u32) -> Vec<Alert> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < hits.len() {
        let mut j = i + 1;
        while j < hits.len() && hits[j].0 == hits[j - 1].0 + 1 {
            j += 1;
        }
        let run = &hits[i..j];
        if run.len() >= persistence as usize {
            out.push(Alert {
                cell,
                start_h: run[0].0 as f64 * hour_h,
                end_h: (run[run.len() - 1].0 + 1) as f64 * hour_h,
                severity: run.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max),
                count: run.iter().map(|r| r.2).sum(),
            });
        }
        i = j;
    }
    out
}

/// Set of `(cell, hour)` pairs covered by alerts.
pub fn alert_cell_hours(alerts: &[Alert], hour_h: f64) -> BTreeSet<(Cell, i64)> {
    let mut out = BTreeSet::new();
    for a in alerts {
        let lo = (a.start_h / hour_h).round() as i64;
        let hi = (a.end_h / hour_h).round() as i64;
        for h in lo..hi {
            out.insert((a.cell, h));
        }
    }
    out
}

fn cell_polygon(grid: &GridSpec, cell: Cell) -> Value {
    let (lat_lo, lat_hi, lon_lo, lon_hi) = grid.cell_bounds(cell);
    json!({
        "type": "Polygon",
        "coordinates": [[
            [lon_lo, lat_lo], [lon_hi, lat_lo], [lon_hi, lat_hi], [lon_lo, lat_hi], [lon_lo, lat_lo]
        ]]
    })
}

/// One feature per occupied cell, carrying count and mean sentiment.
pub fn snapshot_geojson(snap: &GridSnapshot, grid: &GridSpec) -> Value {
    let features: Vec<Value> = snap
        .cells
        .iter()
        .map(|(&(row, col), s)| {
            json!({
                "type": "Feature",
                "geometry": cell_polygon(grid, (row, col)),
                "properties": {
                    "hour_start": snap.hour_start,
                    "row": row,
                    "col": col,
                    "count": s.count,
                    "mean_sentiment": s.mean_sentiment,
                }
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "hour_start": snap.hour_start, "features": features })
}

pub const ALERT_HEADER: &str = "row,col,start_h,end_h,severity,count,lat_min,lat_max,lon_min,lon_max";

pub fn write_alerts<W: Write>(mut w: W, alerts: &[Alert], grid: &GridSpec) -> std::io::Result<()> {
    writeln!(w, "{ALERT_HEADER}")?;
    for a in alerts {
        let (la, lb, oa, ob) = grid.cell_bounds(a.cell);
        writeln!(
            w,
            "{},{},{},{},{:.4},{},{},{},{},{}",
            a.cell.0, a.cell.1, a.start_h, a.end_h, a.severity, a.count, la, lb, oa, ob
        )?;
    }
    Ok(())
}
