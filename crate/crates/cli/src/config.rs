//! Command-line arguments double as the run configuration: every subcommand's
//! parameters serialize to JSON, and the SHA-256 of that JSON tags each
//! artifact the run writes.

use std::path::PathBuf;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use netsensor::ingest::FilterLevel;
use netsensor::sampling::GeoCombo;
use netsensor::sentiment::Normalization;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Parser)]
#[command(
    name = "netsensor",
    version,
    about = "Friendship-paradox sensor groups, lead times and sentiment sensing",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Directory that relative input paths resolve against.
    #[arg(long, env = "NETSENSOR_DATA_DIR", default_value = ".", global = true)]
    pub data_dir: PathBuf,

    /// Output directory; defaults to the data directory (`report` uses
    /// `<data-dir>/report`).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// Replay a saved `<command>.run.json` instead of a subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Common {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Reference instant for hour offsets (RFC 3339).
    #[arg(long, global = true, default_value = "2012-10-30T00:00:00Z", value_parser = parse_epoch)]
    pub epoch: DateTime<Utc>,
}

fn parse_epoch(s: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("expected an RFC 3339 instant such as 2012-10-30T00:00:00Z: {e}"))
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Parse a message stream, filter for relevance, optionally histogram a keyword.
    Ingest(IngestArgs),
    /// Locate users and place them inside or outside the affected area.
    Geocode(GeocodeArgs),
    /// Build the storm's affected area as GeoJSON.
    Area(AreaArgs),
    /// Draw one control group and its sensor group.
    Sample(SampleArgs),
    /// Lead time over repeated trials at one size, with entry-time CDFs.
    Leadtime(LeadtimeArgs),
    /// Lead time across sample sizes and geographic combinations.
    Sweep(SweepArgs),
    /// Sweep on the timestamp-shuffled null model.
    Null(NullArgs),
    /// Score relevant messages.
    Sentiment(SentimentArgs),
    /// Binned sentiment trend and composition.
    Trend(TrendArgs),
    /// Hourly grid aggregation and negative-shift alerts.
    Sense(SenseArgs),
    /// Generate a synthetic network, message stream and storm track.
    Simulate(SimulateArgs),
    /// Run the whole pipeline and bundle every table with a manifest.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Geocode(_) => "geocode",
            Command::Area(_) => "area",
            Command::Sample(_) => "sample",
            Command::Leadtime(_) => "leadtime",
            Command::Sweep(_) => "sweep",
            Command::Null(_) => "null",
            Command::Sentiment(_) => "sentiment",
            Command::Trend(_) => "trend",
            Command::Sense(_) => "sense",
            Command::Simulate(_) => "simulate",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct IngestArgs {
    #[arg(long, default_value = "messages.jsonl")]
    pub messages: PathBuf,
    /// Relevance filter: none, moderate or strict.
    #[arg(long, default_value = "strict")]
    pub filter: FilterLevel,
    /// Also write a histogram of this keyword over all parsed messages.
    #[arg(long)]
    pub keyword: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub bin_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AreaOpts {
    /// Wind threshold in knots: 34, 50 or 64.
    #[arg(long, default_value_t = 34)]
    pub threshold: u32,
    #[arg(long, default_value_t = 64)]
    pub arc_segments: usize,
    /// Use per-quadrant radii instead of the largest one.
    #[arg(long)]
    pub quadrant: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GeocodeArgs {
    #[arg(long, default_value = "profiles.jsonl")]
    pub profiles: PathBuf,
    /// Messages used as a fallback for users without profile coordinates.
    #[arg(long, default_value = "messages.jsonl")]
    pub messages: PathBuf,
    /// Tab-delimited gazetteer; without one only coordinates are used.
    #[arg(long)]
    pub gazetteer: Option<PathBuf>,
    /// Storm track; without one every located user is outside.
    #[arg(long)]
    pub track: Option<PathBuf>,
    #[command(flatten)]
    pub area: AreaOpts,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AreaArgs {
    #[arg(long, default_value = "track.csv")]
    pub track: PathBuf,
    #[command(flatten)]
    pub area: AreaOpts,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PopulationArgs {
    /// Follower edges, one `follower followee` pair per line.
    #[arg(long, default_value = "edges.txt")]
    pub edges: PathBuf,
    #[arg(long, default_value = "relevant.jsonl")]
    pub relevant: PathBuf,
    #[arg(long, default_value = "locations.csv")]
    pub locations: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub population: PopulationArgs,
    #[arg(long, default_value_t = 500)]
    pub size: usize,
    /// any, in-in, in-out, out-in or out-out.
    #[arg(long, default_value = "any")]
    pub combo: GeoCombo,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LeadtimeArgs {
    #[command(flatten)]
    pub population: PopulationArgs,
    #[arg(long, default_value_t = 500)]
    pub size: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value = "any")]
    pub combo: GeoCombo,
    /// Kernel bandwidth of the entry-time CDFs.
    #[arg(long, default_value_t = 8.0)]
    pub bandwidth_hours: f64,
    #[arg(long, default_value_t = 1.0)]
    pub grid_step_hours: f64,
    /// Bin width of the activity-versus-entry table.
    #[arg(long, default_value_t = 6.0)]
    pub bin_hours: f64,
}

/// Comma-separated combos, or `all`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComboList(pub Vec<GeoCombo>);

impl FromStr for ComboList {
    type Err = netsensor::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(ComboList(GeoCombo::ALL.to_vec()));
        }
        s.split(',')
            .map(|c| c.trim().parse())
            .collect::<Result<_, _>>()
            .map(ComboList)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub population: PopulationArgs,
    #[arg(long, value_delimiter = ',', default_value = "500,1000,2500,5000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Comma-separated combos or `all`.
    #[arg(long, default_value = "all")]
    pub combo: ComboList,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct NullArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Shuffle seed; defaults to `--seed`.
    #[arg(long)]
    pub null_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    /// Divide summed weights by all tokens.
    Total,
    /// Divide by lexicon-matched tokens only.
    Matched,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Total => Normalization::TotalTokens,
            NormArg::Matched => Normalization::MatchedTokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SentimentArgs {
    #[arg(long, default_value = "relevant.jsonl")]
    pub relevant: PathBuf,
    /// `token weight` lexicon; without one, precomputed scores are used.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = NormArg::Total)]
    pub normalization: NormArg,
    /// Fallback coordinates for messages without a geotag.
    #[arg(long)]
    pub locations: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrendArgs {
    #[arg(long, default_value = "scores.csv")]
    pub scores: PathBuf,
    #[arg(long, default_value_t = 6.0)]
    pub bin_hours: f64,
    /// Apply a three-bin running mean to the trend.
    #[arg(long)]
    pub smooth: bool,
}

/// `lat_min,lat_max,lon_min,lon_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bbox(pub [f64; 4]);

impl FromStr for Bbox {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: Vec<f64> = s
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number {x:?}")))
            .collect::<Result<_, _>>()?;
        <[f64; 4]>::try_from(v)
            .map(Bbox)
            .map_err(|_| "expected lat_min,lat_max,lon_min,lon_max".to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DetectorArgs {
    #[arg(long, default_value = "25,49,-124,-67", allow_hyphen_values = true)]
    pub bbox: Bbox,
    #[arg(long, default_value_t = 1.0)]
    pub grid_cell_deg: f64,
    #[arg(long, default_value_t = 20)]
    pub min_count: u64,
    #[arg(long, default_value_t = 3.0)]
    pub k_mad: f64,
    #[arg(long, default_value_t = 2)]
    pub persistence_hours: u32,
    #[arg(long, default_value_t = 72)]
    pub baseline_window_hours: u32,
    /// Hours between grid snapshots written to the GeoJSON map.
    #[arg(long, default_value_t = 24)]
    pub map_every_hours: u32,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SenseArgs {
    #[arg(long, default_value = "scores.csv")]
    pub scores: PathBuf,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Awareness spreads mostly along follow edges.
    Endo,
    /// Awareness arrives mostly from outside the network.
    Exo,
    /// Mixed regime with a ramp before landfall and a sentiment drop after.
    Sandy,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Preset::Sandy)]
    pub preset: Preset,
    #[arg(long, default_value_t = 20_000)]
    pub nodes: usize,
    /// JSON object whose fields override the preset's simulator settings.
    #[arg(long)]
    pub sim_config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    #[arg(long, default_value = "messages.jsonl")]
    pub messages: PathBuf,
    #[arg(long, default_value = "profiles.jsonl")]
    pub profiles: PathBuf,
    #[arg(long, default_value = "edges.txt")]
    pub edges: PathBuf,
    #[arg(long)]
    pub track: Option<PathBuf>,
    #[arg(long)]
    pub gazetteer: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, default_value = "strict")]
    pub filter: FilterLevel,
    #[command(flatten)]
    pub area: AreaOpts,
    #[arg(long, value_delimiter = ',', default_value = "500,1000,2500,5000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value = "all")]
    pub combo: ComboList,
    #[arg(long, default_value_t = 8.0)]
    pub bandwidth_hours: f64,
    /// Bin width of trend, composition and activity tables.
    #[arg(long, default_value_t = 6.0)]
    pub bin_hours: f64,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

/// Everything needed to reproduce one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub common: Common,
    pub command: Command,
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run config serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("run config serializes");
        format!("{:x}", Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        let cli = Cli::try_parse_from(std::iter::once("netsensor").chain(args.iter().copied())).unwrap();
        RunConfig {
            common: cli.common,
            command: cli.command.unwrap(),
        }
    }

    #[test]
    fn every_subcommand_round_trips() {
        let cases: &[&[&str]] = &[
            &["ingest", "--filter", "moderate", "--keyword", "power outage"],
            &["geocode", "--track", "track.csv", "--threshold", "50"],
            &["area", "--quadrant"],
            &["sample", "--combo", "in-out", "--size", "7"],
            &["leadtime", "--bandwidth-hours", "4.5"],
            &["sweep", "--sizes", "10,20", "--combo", "any,out-in", "--seed", "9"],
            &["null", "--null-seed", "3", "--trials", "5"],
            &["sentiment", "--normalization", "matched"],
            &["trend", "--bin-hours", "3", "--smooth"],
            &["sense", "--bbox", "-10,10,-20,20", "--k-mad", "2.5", "--min-count", "5"],
            &[
                "simulate",
                "--preset",
                "endo",
                "--nodes",
                "100",
                "--epoch",
                "2012-10-29T12:00:00Z",
            ],
            &["report", "--track", "track.csv", "--persistence-hours", "3"],
        ];
        for args in cases {
            let cfg = parse(args);
            assert_eq!(cfg.command.name(), args[0]);
            let back = RunConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.hash(), cfg.hash());
        }
    }

    #[test]
    fn hash_tracks_parameters() {
        let a = parse(&["sweep", "--sizes", "10,20"]);
        let b = parse(&["sweep", "--sizes", "10,30"]);
        let c = parse(&["--seed", "2", "sweep", "--sizes", "10,20"]);
        assert_eq!(a.hash().len(), 64);
        assert_ne!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash(), parse(&["sweep", "--sizes", "10,20"]).hash());
    }

    #[test]
    fn combo_lists() {
        assert_eq!("all".parse::<ComboList>().unwrap().0.len(), 5);
        assert_eq!(
            "in-in,out_out".parse::<ComboList>().unwrap().0,
            vec![GeoCombo::InIn, GeoCombo::OutOut]
        );
        assert!("sideways".parse::<ComboList>().is_err());
    }
}
