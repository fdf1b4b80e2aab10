use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use netsensor::geo::{
    build_affected_area, read_track, write_track, AffectedArea, AreaOptions, Gazetteer, GeoPoint, GridSpec,
    WindThreshold,
};
use netsensor::ingest::{
    filter_relevance, keyword_histogram, parse_profiles, parse_stream, write_messages, write_profiles, FilterLevel,
    Message, Schema,
};
use netsensor::leadtime::{
    activity_vs_entry, aggregate, entry_cdf, lead_time_sweep, lead_time_trials, write_cdf, write_sweep, EntryBin,
    LeadTimeResult, Population,
};
use netsensor::pipeline::{
    null_population, prepare_with_regions, read_locations, user_locations, user_regions, write_locations, Prepared,
    UserLocation,
};
use netsensor::sampling::{draw_pair, GeoCombo, Region, SampleGroup};
use netsensor::sensing::{detect, grid_aggregate, snapshot_geojson, write_alerts, DetectorConfig, SensingPoint};
use netsensor::sentiment::{
    composition, discretize, score_message_with, smooth3, trend, write_composition, write_trend, Lexicon,
    SentimentScore,
};
use netsensor::simulator::{simulate, SimConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::artifacts::{at, Artifacts, Failure, Result};
use crate::config::*;

struct Ctx {
    data: PathBuf,
    epoch: DateTime<Utc>,
    seed: u64,
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| Failure::Usage(format!("bad path {}: {e}", p.display())))
}

/// Run one configuration. Inputs resolve against `data_dir`; outputs go to
/// `out_dir`, else the data directory (`report/` under it for `report`).
pub fn execute(cfg: &RunConfig, data_dir: &Path, out_dir: Option<&Path>) -> Result<String> {
    let name = cfg.command.name();
    let data = absolute(data_dir)?;
    let out = match (out_dir, &cfg.command) {
        (Some(o), _) => absolute(o)?,
        (None, Command::Report(_)) => data.join("report"),
        (None, _) => data.clone(),
    };
    let mut art = Artifacts::new(out, name, cfg.hash(), cfg.common.seed)?;
    let ctx = Ctx {
        data,
        epoch: cfg.common.epoch,
        seed: cfg.common.seed,
    };
    let run_json = cfg.to_json();
    art.raw(&format!("{name}.run.json"), |w| writeln!(w, "{run_json}"))?;
    let art = &mut art;
    match &cfg.command {
        Command::Ingest(a) => ingest(a, &ctx, art),
        Command::Geocode(a) => geocode(a, &ctx, art),
        Command::Area(a) => area(a, &ctx, art),
        Command::Sample(a) => sample(a, &ctx, art),
        Command::Leadtime(a) => leadtime(a, &ctx, art),
        Command::Sweep(a) => sweep(a, &ctx, art),
        Command::Null(a) => null(a, &ctx, art),
        Command::Sentiment(a) => sentiment(a, &ctx, art),
        Command::Trend(a) => trend_cmd(a, &ctx, art),
        Command::Sense(a) => sense(a, &ctx, art),
        Command::Simulate(a) => simulate_cmd(a, &ctx, art),
        Command::Report(a) => report(a, &ctx, art),
    }
}

fn filter_name(f: FilterLevel) -> &'static str {
    match f {
        FilterLevel::None => "none",
        FilterLevel::Moderate => "moderate",
        FilterLevel::Strict => "strict",
    }
}

fn read_messages(path: &Path, ctx: &Ctx, art: &mut Artifacts) -> Result<Vec<Message>> {
    let (p, r) = art.open(&ctx.data, path)?;
    Ok(parse_stream(r, &Schema::default(), ctx.epoch)
        .map_err(|e| at(&p, e))?
        .messages)
}

fn ingest(a: &IngestArgs, ctx: &Ctx, art: &mut Artifacts) -> Result<String> {
    let (path, r) = art.open(&ctx.data, &a.messages)?;
    let parsed = parse_stream(r, &Schema::default(), ctx.epoch).map_err(|e| at(&path, e))?;
    let relevant = filter_relevance(&parsed.messages, a.filter);
    art.text("relevant.jsonl", |w| write_messages(w, &relevant))?;
    let rep = parsed.report;
    art.json(
        "ingest_report.json",
        json!({
            "input": a.messages,
            "lines": rep.lines,
            "parsed": rep.parsed,
            "malformed": rep.malformed,
            "duplicates": rep.duplicates,
            "users": parsed.profiles.len(),
            "filter": a.filter,
            "relevant": relevant.len(),
        }),
    )?;
    let mut summary = format!(
        "ingest: {} of {} messages relevant ({} filter), {} malformed lines, {} duplicates",
        relevant.len(),
        parsed.messages.len(),
        filter_name(a.filter),
        rep.malformed,
        rep.duplicates
    );
    if let Some(k) = &a.keyword {
        let h = keyword_histogram(&parsed.messages, k, a.bin_hours)?;
        art.text("histogram.csv", |w| {
            writeln!(w, "bin_start_h,count,with_sandy")?;
            for i in 0..h.total.len() {
                writeln!(w, "{},{},{}", h.bin_start(i), h.total[i], h.with_sandy[i])?;
            }
            Ok(())
        })?;
        summary += &format!("; {k:?} in {} messages", h.total.iter().sum::<u64>());
    }
    Ok(summary)
}

fn load_area(track: &Path, o: &AreaOpts, ctx: &Ctx, art: &mut Artifacts) -> Result<AffectedArea> {
    let (p, r) = art.open(&ctx.data, track)?;
    let points = read_track(r).map_err(|e| at(&p, e))?;
    let threshold = WindThreshold::from_knots(o.threshold)?;
    let opts = AreaOptions {
        arc_segments: o.arc_segments,
        quadrant_mode: o.quadrant,
    };
    build_affected_area(&points, threshold, opts).map_err(|e| at(&p, e))
}

fn geocode(a: &GeocodeArgs, ctx: &Ctx, art: &mut Artifacts) -> Result<String> {
    let (pp, r) = art.open(&ctx.data, &a.profiles)?;
    let (profiles, _) = parse_profiles(r, &Schema::default()).map_err(|e| at(&pp, e))?;
    let messages = read_messages(&a.messages, ctx, art)?;
    let gaz = match &a.gazetteer {
        Some(g) => {
            let (gp, r) = art.open(&ctx.data, g)?;
            Gazetteer::read(r).map_err(|e| at(&gp, e))?
        }
        None => Gazetteer::default(),
    };
    let area = a.track.as_ref().map(|t| load_area(t, &a.area, ctx, art)).transpose()?;
    let located = user_locations(&profiles, &messages, &gaz);
    let regions = user_regions(&located, area.as_ref());
    art.text("locations.csv", |w| write_locations(w, &located, &regions))?;
    let inside = regions.values().filter(|&&r| r == Region::Inside).count();
    let place = match &area {
        Some(ar) => format!("{inside} inside the {} kt area", ar.threshold_kt),
        None => "no track, so all outside".to_string(),
    };
    Ok(format!(
        "geocode: {} users located in the US or Canada ({} profiles), {place}",
        located.len(),
        profiles.len()
    ))
}

fn area(a: &AreaArgs, ctx: &Ctx, art: &mut Artifacts) -> Result<String> {
    let ar = load_area(&a.track, &a.area, ctx, art)?;
    let vertices: usize = ar.rings.iter().map(|r| r.vertices.len()).sum();
    art.json(
        "area.geojson",
        json!({ "type": "FeatureCollection", "features": [ar.to_geojson()] }),
    )?;
    Ok(format!(
        "area: {} kt area from {} rings ({} vertices)",
        ar.threshold_kt,
        ar.rings.len(),
        vertices
    ))
}

fn population(p: &PopulationArgs, ctx: &Ctx, art: &mut Artifacts) -> Result<Prepared> {
    let (ep, r) = art.open(&ctx.data, &p.edges)?;
    let (graph, _) = netsensor::network::SocialGraph::read_edges(r).map_err(|e| at(&ep, e))?;
    let messages = read_messages(&p.relevant, ctx, art)?;
    let (lp, r) = art.open(&ctx.data, &p.locations)?;
    let regions: HashMap<String, Region> = read_locations(r)
        .map_err(|e| at(&lp, e))?
        .into_iter()
        .map(|(u, l)| (u, l.region))
        .collect();
    Ok(prepare_with_regions(
        &messages,
        Arc::new(graph),
        regions,
        FilterLevel::None,
    ))
}

fn mean_friends(g: &SampleGroup, pop: &Population) -> f64 {
    let total: usize = g.members.iter().map(|&v| pop.graph().out_degree(v)).sum();
    total as f64 / g.members.len().max(1) as f64
}

fn sample(a: &SampleArgs, ctx: &Ctx, art: &mut Artifacts) -> Result<String> {
    let prep = population(&a.population, ctx, art)?;
    let pop = &prep.population;
    let pair = draw_pair(pop.graph(), pop.pool(), a.size, a.combo, ctx.seed)?;
    art.text("groups.csv", |w| {
        netsensor::sampling::write_groups(w, pop.graph(), &[&pair.control, &pair.sensor])
    })?;
    Ok(format!(
        "sample: {} control and {} sensor users ({}), mean friends {:.1} vs {:.1}",
        pair.control.members.len(),
        pair.sensor.members.len(),
        a.combo,
        mean_friends(&pair.control, pop),
        mean_friends(&pair.sensor, pop)
    ))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

fn write_entry_bins(w: &mut dyn Write, groups: &[(&str, &[EntryBin])]) -> io::Result<()> {
    writeln!(
        w,
        "group,bin_start_h,count,mean_activity,mean_in_degree,mean_out_degree"
    )?;
    for (label, bins) in groups {
        for b in *bins {
            writeln!(
                w,
                "{label},{},{},{},{},{}",
                b.bin_start,
                b.count,
                opt(b.mean_activity),
                opt(b.mean_in_degree),
                opt(b.mean_out_degree)
            )?;
        }
    }
    Ok(())
}

fn leadtime(a: &LeadtimeArgs, ctx: &Ctx, art: &mut Artifacts) -> Result<String> {
    let prep = population(&a.population, ctx, art)?;
    let pop = &prep.population;
    let trials = lead_time_trials(pop, a.size, a.trials, a.combo, ctx.seed)?;
    let agg = aggregate(&trials)?;
    art.text("leadtime_trials.csv", |w| {
        writeln!(w, "trial,seed,size,combo,dt,mean_tc,mean_ts,n_c,n_s")?;
        for (i, r) in trials.iter().enumerate() {
            writeln!(
                w,
                "{i},{},{},{},{:.6},{:.6},{:.6},{:.4},{:.4}",
                ctx.seed.wrapping_add(i as u64),
                r.sample_size,
                r.combo,
                r.dt,
                r.mean_tc,
                r.mean_ts,
                r.n_c,
                r.n_s
            )?;
        }
        Ok(())
    })?;
    // The first trial's groups, redrawn for the distribution views.
    let pair = draw_pair(pop.graph(), pop.pool(), a.size, a.combo, ctx.seed)?;
    let cc = entry_cdf(&pair.control, pop, a.bandwidth_hours, a.grid_step_hours)?;
    let sc = entry_cdf(&pair.sensor, pop, a.bandwidth_hours, a.grid_step_hours)?;
    art.text("entry_cdf.csv", |w| write_cdf(w, &[("control", &cc), ("sensor", &sc)]))?;
    let ca = activity_vs_entry(&pair.control.members, pop, a.bin_hours)?;
    let sa = activity_vs_entry(&pair.sensor.members, pop, a.bin_hours)?;
    art.text("activity_entry.csv", |w| {
        write_entry_bins(w, &[("control", &ca), ("sensor", &sa)])
    })?;
    Ok(format!(
        "leadtime: size {}, {}: dt {:+.2} h (sigma {:.2} h over {} trials)",
        a.size, a.combo, agg.dt, agg.dt_sigma, agg.trials
    ))
}

fn sweep_rows(pop: &Population, a: &SweepArgs, seed: u64) -> Result<Vec<LeadTimeResult>> {
    let mut rows = Vec::new();
    for &combo in &a.combo.0 {
        rows.extend(lead_time_sweep(pop, &a.sizes, a.trials, combo, seed)?);
    }
    Ok(rows)
}

fn sweep_summary(label: &str, rows: &[LeadTimeResult], a: &SweepArgs) -> String {
    let head = rows
        .first()
        .map(|r| {
            format!(
                "; {} at {}: dt {:+.2} h (sigma {:.2})",
                r.combo, r.sample_size, r.dt, r.dt_sigma
            )
        })
        .unwrap_or_default();
    format!(
        "{label}: {} rows ({} sizes x {} combos, {} trials each){head}",
        rows.len(),
        a.sizes.len(),
        a.combo.0.len(),
        a.trials
    )
}

fn sweep(a: &SweepArgs, ctx: &Ctx, art: &mut Artifacts) -> Result<String> {
    let prep = population(&a.population, ctx, art)?;
    let rows = sweep_rows(&prep.population, a, ctx.seed)?;
    art.text("sweep.csv", |w| write_sweep(w, &rows))?;
    Ok(sweep_summary("sweep", &rows, a))
}

fn null(a: &NullArgs, ctx: &Ctx, art: &mut Artifacts) -> Result<String> {
    let prep = population(&a.sweep.population, ctx, art)?;
    let shuffled = null_population(&prep, a.null_seed.unwrap_or(ctx.seed));
    let rows = sweep_rows(&shuffled, &a.sweep, ctx.seed)?;
    art.text("null_sweep.csv", |w| write_sweep(w, &rows))?;
    Ok(sweep_summary("null", &rows, &a.sweep))
}

/// One row of `scores.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub message_id: String,
    pub user_id: String,
    pub offset_h: f64,
    pub relative: f64,
    pub absolute: f64,
    pub discrete: i8,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
}

fn sentiment(a: &SentimentArgs, ctx: &Ctx, art: &mut Artifacts) -> Result<String> {
    let messages = read_messages(&a.relevant, ctx, art)?;
    let lexicon = match &a.lexicon {
        Some(l) => {
            let (lp, r) = art.open(&ctx.data, l)?;
            Some(Lexicon::read(&l.display().to_string(), r).map_err(|e| at(&lp, e))?)
        }
        None => None,
    };
    let locations: HashMap<String, UserLocation> = match &a.locations {
        Some(l) => {
            let (lp, r) = art.open(&ctx.data, l)?;
            read_locations(r).map_err(|e| at(&lp, e))?
        }
        None => HashMap::new(),
    };
    let mut rows = Vec::with_capacity(messages.len());
    for m in &messages {
        let s = match &lexicon {
            Some(lex) => score_message_with(&m.text, lex, a.normalization.into()),
            None => {
                let x = m.precomputed_sentiment.ok_or_else(|| {
                    Failure::Data(format!(
                        "message {} has no precomputed sentiment; pass --lexicon",
                        m.message_id
                    ))
                })?;
                SentimentScore {
                    relative: x,
                    absolute: x.abs(),
                    discrete: discretize(x),
                }
            }
        };
        let point = m.geo.or_else(|| locations.get(&m.user_id).map(|l| l.located.point));
        rows.push(ScoreRow {
            message_id: m.message_id.clone(),
            user_id: m.user_id.clone(),
            offset_h: m.offset_h,
            relative: s.relative,
            absolute: s.absolute,
            discrete: s.discrete,
            lat: point.map(|p| p.lat),
            lon: point.map(|p| p.lon),
        });
    }
    art.text("scores.csv", |w| {
        let mut cw = csv::Writer::from_writer(w);
        for r in &rows {
            cw.serialize(r)?;
        }
        cw.flush()
    })?;
    let n = rows.len().max(1) as f64;
    let mean = rows.iter().map(|r| r.relative).sum::<f64>() / n;
    let negative = rows.iter().filter(|r| r.discrete < 0).count() as f64 / n;
    let located = rows.iter().filter(|r| r.lat.is_some()).count();
    let source = match &lexicon {
        Some(l) => format!("lexicon {} ({} entries)", l.name, l.len()),
        None => "precomputed scores".to_string(),
    };
    Ok(format!(
        "sentiment: {} messages from {source}; mean {mean:.4}, {:.1}% negative, {located} located",
        rows.len(),
        100.0 * negative
    ))
}

fn read_scores(path: &Path, ctx: &Ctx, art: &mut Artifacts) -> Result<Vec<ScoreRow>> {
    let (p, r) = art.open(&ctx.data, path)?;
    read_score_rows(r).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))
}

fn read_score_rows(r: impl BufRead) -> csv::Result<Vec<ScoreRow>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(r)
        .deserialize()
        .collect()
}

fn trend_cmd(a: &TrendArgs, ctx: &Ctx, art: &mut Artifacts) -> Result<String> {
    let rows = read_scores(&a.scores, ctx, art)?;
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.offset_h, r.relative)).collect();
    let mut series = trend(&points, a.bin_hours)?;
    if a.smooth {
        series = smooth3(&series);
    }
    let classes: Vec<(f64, i8)> = rows.iter().map(|r| (r.offset_h, r.discrete)).collect();
    let comp = composition(&classes, a.bin_hours)?;
    art.text("trend.csv", |w| write_trend(w, &series))?;
    art.text("composition.csv", |w| write_composition(w, &comp))?;
    let lowest = (0..series.len())
        .filter_map(|i| series.value[i].map(|v| (v, series.bin_start[i])))
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(v, t)| format!("; lowest mean {v:.4} in the bin at {t} h"))
        .unwrap_or_default();
    Ok(format!("trend: {} bins of {} h{lowest}", series.len(), a.bin_hours))
}

fn cell_feature(grid: &GridSpec, cell: (u32, u32), properties: Value) -> Value {
    let (la, lb, oa, ob) = grid.cell_bounds(cell);
    json!({
        "type": "Feature",
        "geometry": {
            "type": "Polygon",
            "coordinates": [[[oa, la], [ob, la], [ob, lb], [oa, lb], [oa, la]]],
        },
        "properties": properties,
    })
}

fn sense(a: &SenseArgs, ctx: &Ctx, art: &mut Artifacts) -> Result<String> {
    let rows = read_scores(&a.scores, ctx, art)?;
    let points: Vec<SensingPoint> = rows
        .iter()
        .filter_map(|r| {
            Some(SensingPoint {
                offset_h: r.offset_h,
                point: GeoPoint::exact(r.lat?, r.lon?),
                relative: r.relative,
            })
        })
        .collect();
    let d = &a.detector;
    let [lat_min, lat_max, lon_min, lon_max] = d.bbox.0;
    let grid = GridSpec::new(lat_min, lat_max, lon_min, lon_max, d.grid_cell_deg)?;
    let agg = grid_aggregate(&points, &grid, 1.0)?;
    let cfg = DetectorConfig {
        min_count: d.min_count,
        k_mad: d.k_mad,
        persistence_hours: d.persistence_hours,
        baseline_window_h: d.baseline_window_hours,
        ..DetectorConfig::default()
    };
    let det = detect(&agg, &cfg)?;
    art.text("alerts.csv", |w| write_alerts(w, &det.alerts, &grid))?;
    let every = i64::from(d.map_every_hours.max(1));
    let mut features: Vec<Value> = agg
        .snapshots
        .iter()
        .filter(|s| s.hour.rem_euclid(every) == 0)
        .flat_map(|s| {
            snapshot_geojson(s, &grid)["features"]
                .as_array()
                .cloned()
                .unwrap_or_default()
        })
        .collect();
    features.extend(det.alerts.iter().map(|al| {
        cell_feature(
            &grid,
            al.cell,
            json!({ "alert": true, "start_h": al.start_h, "end_h": al.end_h, "severity": al.severity, "count": al.count }),
        )
    }));
    art.json(
        "grid.geojson",
        json!({ "type": "FeatureCollection", "features": features }),
    )?;
    let mut cells: Vec<_> = det.alerts.iter().map(|al| al.cell).collect();
    cells.sort_unstable();
    cells.dedup();
    Ok(format!(
        "sense: {} located points on a {}x{} grid ({} off-grid, {} unlocated), {} alerts in {} cells",
        points.len(),
        grid.rows(),
        grid.cols(),
        agg.dropped,
        rows.len() - points.len(),
        det.alerts.len(),
        cells.len()
    ))
}

/// Recursively overlay `patch` onto `base`.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

fn simulate_cmd(a: &SimulateArgs, ctx: &Ctx, art: &mut Artifacts) -> Result<String> {
    let mut cfg = match a.preset {
        Preset::Endo => SimConfig::endogenous_dominant(a.nodes, ctx.seed),
        Preset::Exo => SimConfig::exogenous_dominant(a.nodes, ctx.seed),
        Preset::Sandy => SimConfig::sandy_like(a.nodes, ctx.seed),
    };
    if let Some(p) = &a.sim_config {
        let (path, r) = art.open(&ctx.data, p)?;
        let patch: Value = serde_json::from_reader(r).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        let mut v = serde_json::to_value(&cfg).expect("config serializes");
        merge(&mut v, patch);
        cfg = serde_json::from_value(v)
            .map_err(|e| Failure::Data(format!("{}: not a simulator setting: {e}", path.display())))?;
        cfg.seed = ctx.seed;
    }
    let out = simulate(&cfg, ctx.epoch)?;
    art.text("messages.jsonl", |w| write_messages(w, &out.messages))?;
    art.text("profiles.jsonl", |w| write_profiles(w, &out.profiles))?;
    art.text("edges.txt", |w| out.graph.write_edges(w))?;
    art.text("track.csv", |w| write_track(w, &out.track))?;
    art.text("truth.csv", |w| out.write_truth(w))?;
    art.json(
        "sim_config.json",
        serde_json::to_value(&cfg).expect("config serializes"),
    )?;
    let aware = out.truth.iter().flatten().count();
    Ok(format!(
        "simulate: {} users, {} edges, {} aware, {} messages",
        out.graph.node_count(),
        out.graph.edge_count(),
        aware,
        out.messages.len()
    ))
}

fn report(a: &ReportArgs, ctx: &Ctx, art: &mut Artifacts) -> Result<String> {
    let out = art.dir().to_path_buf();
    let mut lines = Vec::new();
    lines.push(ingest(
        &IngestArgs {
            messages: a.messages.clone(),
            filter: a.filter,
            keyword: None,
            bin_hours: 1.0,
        },
        ctx,
        art,
    )?);
    if let Some(t) = &a.track {
        lines.push(area(
            &AreaArgs {
                track: t.clone(),
                area: a.area.clone(),
            },
            ctx,
            art,
        )?);
    }
    lines.push(geocode(
        &GeocodeArgs {
            profiles: a.profiles.clone(),
            messages: a.messages.clone(),
            gazetteer: a.gazetteer.clone(),
            track: a.track.clone(),
            area: a.area.clone(),
        },
        ctx,
        art,
    )?);
    let pop = PopulationArgs {
        edges: a.edges.clone(),
        relevant: out.join("relevant.jsonl"),
        locations: out.join("locations.csv"),
    };
    let sweep_args = SweepArgs {
        population: pop.clone(),
        sizes: a.sizes.clone(),
        trials: a.trials,
        combo: a.combo.clone(),
    };
    lines.push(sweep(&sweep_args, ctx, art)?);
    lines.push(null(
        &NullArgs {
            sweep: sweep_args,
            null_seed: None,
        },
        ctx,
        art,
    )?);
    if let Some(&size) = a.sizes.first() {
        lines.push(leadtime(
            &LeadtimeArgs {
                population: pop,
                size,
                trials: a.trials,
                combo: GeoCombo::Any,
                bandwidth_hours: a.bandwidth_hours,
                grid_step_hours: 1.0,
                bin_hours: a.bin_hours,
            },
            ctx,
            art,
        )?);
    }
    lines.push(sentiment(
        &SentimentArgs {
            relevant: out.join("relevant.jsonl"),
            lexicon: a.lexicon.clone(),
            normalization: NormArg::Total,
            locations: Some(out.join("locations.csv")),
        },
        ctx,
        art,
    )?);
    let scores = out.join("scores.csv");
    lines.push(trend_cmd(
        &TrendArgs {
            scores: scores.clone(),
            bin_hours: a.bin_hours,
            smooth: false,
        },
        ctx,
        art,
    )?);
    lines.push(sense(
        &SenseArgs {
            scores,
            detector: a.detector.clone(),
        },
        ctx,
        art,
    )?);
    art.text("summary.txt", |w| lines.iter().try_for_each(|l| writeln!(w, "{l}")))?;
    let n = art.manifest()?;
    Ok(format!(
        "report: {} stages, {n} artifacts in {}",
        lines.len(),
        out.display()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_overlays_nested_fields() {
        let mut base = json!({ "a": 1, "s": { "x": 1, "y": 2 } });
        merge(&mut base, json!({ "s": { "y": 5 }, "b": true }));
        assert_eq!(base, json!({ "a": 1, "b": true, "s": { "x": 1, "y": 5 } }));
    }

    #[test]
    fn score_rows_round_trip_through_csv() {
        let rows = vec![
            ScoreRow {
                message_id: "m,1".into(),
                user_id: "u".into(),
                offset_h: -1.5,
                relative: -0.125,
                absolute: 0.125,
                discrete: -1,
                lat: Some(40.7),
                lon: Some(-74.0),
            },
            ScoreRow {
                message_id: "m2".into(),
                user_id: "v".into(),
                offset_h: 3.0,
                relative: 0.0,
                absolute: 0.0,
                discrete: 0,
                lat: None,
                lon: None,
            },
        ];
        let mut buf = b"# netsensor sentiment config=00 seed=1\n".to_vec();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            for r in &rows {
                w.serialize(r).unwrap();
            }
        }
        assert_eq!(read_score_rows(&buf[..]).unwrap(), rows);
    }
}
