//! Geocoding, storm affected-area construction, membership and grid cells.
//!
//! Distances use a local equirectangular projection: one nautical mile is
//! 1/60 degree of latitude, and longitude is scaled by the cosine of the
//! reference latitude. That is accurate enough at storm scale and keeps the
//! geometry dependency-free.

use std::collections::HashMap;
use std::io::BufRead;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ingest::UserProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// Device coordinates.
    Exact,
    /// Centre of a matched administrative unit.
    Centroid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
    pub precision: Precision,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64, precision: Precision) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::arg(format!("coordinates out of range: ({lat}, {lon})")));
        }
        Ok(GeoPoint { lat, lon, precision })
    }

    pub fn exact(lat: f64, lon: f64) -> Self {
        GeoPoint {
            lat,
            lon,
            precision: Precision::Exact,
        }
    }
}

// ---------------------------------------------------------------------------
// Gazetteer

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdminLevel {
    Country,
    StateProvince,
    City,
}

impl AdminLevel {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "country" => Some(AdminLevel::Country),
            "state" | "province" | "state_province" => Some(AdminLevel::StateProvince),
            "city" | "town" => Some(AdminLevel::City),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GazetteerEntry {
    pub normalized_name: String,
    pub alt_names: Vec<String>,
    pub admin_level: AdminLevel,
    pub country_code: String,
    pub centroid: GeoPoint,
    pub population: u64,
}

/// Lowercase, replace punctuation with spaces, collapse whitespace.
pub fn normalize_place(s: &str) -> String {
    let cleaned: String = s
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() {
                c
            } else {
                ' '
            }
        })
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    by_name: HashMap<String, Vec<usize>>,
}

impl Gazetteer {
    pub fn new(entries: Vec<GazetteerEntry>) -> Self {
        let mut by_name: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            by_name.entry(e.normalized_name.clone()).or_default().push(i);
            for alt in &e.alt_names {
                let list = by_name.entry(alt.clone()).or_default();
                if !list.contains(&i) {
                    list.push(i);
                }
            }
        }
        Gazetteer { entries, by_name }
    }

    /// Read a tab-delimited gazetteer:
    /// `name, alt_names ('|'-separated), admin_level, country, lat, lon, population`.
    /// A first line starting with `name` is treated as a header.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if lineno == 0 && fields[0].trim().eq_ignore_ascii_case("name") {
                continue;
            }
            let loc = format!("gazetteer line {}", lineno + 1);
            if fields.len() != 7 {
                return Err(Error::parse(loc, format!("expected 7 fields, got {}", fields.len())));
            }
            let admin_level = AdminLevel::parse(fields[2])
                .ok_or_else(|| Error::parse(&loc, format!("bad admin level {:?}", fields[2])))?;
            let num = |s: &str, what: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(&loc, format!("bad {what} {s:?}")))
            };
            let centroid = GeoPoint::new(num(fields[4], "lat")?, num(fields[5], "lon")?, Precision::Centroid)?;
            let population = fields[6]
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::parse(&loc, "bad population"))?;
            entries.push(GazetteerEntry {
                normalized_name: normalize_place(fields[0]),
                alt_names: fields[1]
                    .split('|')
                    .map(normalize_place)
                    .filter(|s| !s.is_empty())
                    .collect(),
                admin_level,
                country_code: fields[3].trim().to_ascii_uppercase(),
                centroid,
                population,
            });
        }
        Ok(Gazetteer::new(entries))
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Best entry for an already-normalized name: most specific admin level,
    /// then larger population, then lexicographic name.
    fn best(&self, key: &str) -> Option<&GazetteerEntry> {
        self.by_name.get(key)?.iter().map(|&i| &self.entries[i]).min_by(|a, b| {
            b.admin_level
                .cmp(&a.admin_level)
                .then(b.population.cmp(&a.population))
                .then(a.normalized_name.cmp(&b.normalized_name))
        })
    }

    /// Match a free-text location: the whole string first, then its
    /// comma-separated components from most to least specific.
    pub fn lookup(&self, location: &str) -> Option<&GazetteerEntry> {
        let full = normalize_place(location);
        if full.is_empty() {
            return None;
        }
        if let Some(e) = self.best(&full) {
            return Some(e);
        }
        location
            .split([',', ';', '/', '|'])
            .map(normalize_place)
            .filter(|c| !c.is_empty())
            .find_map(|c| self.best(&c))
    }

    /// Country of the nearest entry, by equirectangular distance.
    pub fn nearest_country(&self, p: &GeoPoint) -> Option<&str> {
        self.entries
            .iter()
            .min_by(|a, b| {
                let da = approx_dist_nm(p, &a.centroid);
                let db = approx_dist_nm(p, &b.centroid);
                da.total_cmp(&db)
            })
            .map(|e| e.country_code.as_str())
    }
}

/// Result of locating a user, with the country used for regional filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct Located {
    pub point: GeoPoint,
    pub country_code: Option<String>,
}

/// Device coordinates when the profile has them, else the centroid of the
/// best gazetteer match on the self-reported location.
pub fn geocode(profile: &UserProfile, gaz: &Gazetteer) -> Option<GeoPoint> {
    locate(profile, gaz).map(|l| l.point)
}

pub fn locate(profile: &UserProfile, gaz: &Gazetteer) -> Option<Located> {
    if let Some(p) = profile.geopoint {
        let country_code = if gaz.is_empty() {
            north_america_box(&p).then(|| "US".to_string())
        } else {
            gaz.nearest_country(&p).map(str::to_string)
        };
        return Some(Located {
            point: GeoPoint {
                precision: Precision::Exact,
                ..p
            },
            country_code,
        });
    }
    let entry = gaz.lookup(profile.self_location.as_deref()?)?;
    Some(Located {
        point: entry.centroid,
        country_code: Some(entry.country_code.clone()),
    })
}

/// Whether a located user passes the United States / Canada filter.
pub fn in_us_or_canada(l: &Located) -> bool {
    matches!(l.country_code.as_deref(), Some("US") | Some("CA"))
}

fn north_america_box(p: &GeoPoint) -> bool {
    (18.0..=84.0).contains(&p.lat) && (-180.0..=-52.0).contains(&p.lon)
}

fn approx_dist_nm(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let lat0 = (0.5 * (a.lat + b.lat)).to_radians();
    let dx = (a.lon - b.lon) * lat0.cos() * 60.0;
    let dy = (a.lat - b.lat) * 60.0;
    dx.hypot(dy)
}

// ---------------------------------------------------------------------------
// Storm track and affected area

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WindThreshold {
    Kt34,
    Kt50,
    Kt64,
}

impl WindThreshold {
    pub const ALL: [WindThreshold; 3] = [WindThreshold::Kt34, WindThreshold::Kt50, WindThreshold::Kt64];

    pub fn knots(self) -> u32 {
        match self {
            WindThreshold::Kt34 => 34,
            WindThreshold::Kt50 => 50,
            WindThreshold::Kt64 => 64,
        }
    }

    pub fn from_knots(kt: u32) -> Result<Self> {
        match kt {
            34 => Ok(WindThreshold::Kt34),
            50 => Ok(WindThreshold::Kt50),
            64 => Ok(WindThreshold::Kt64),
            _ => Err(Error::arg(format!("wind threshold must be 34, 50 or 64 kt, got {kt}"))),
        }
    }
}

/// Quadrant radii in nautical miles, ordered NE, SE, SW, NW.
pub type QuadrantRadii = [f64; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct StormTrackPoint {
    pub time: DateTime<Utc>,
    pub center: GeoPoint,
    /// Indexed by threshold: 34, 50, 64 kt.
    pub radii_nm: [QuadrantRadii; 3],
}

impl StormTrackPoint {
    pub fn radii(&self, t: WindThreshold) -> QuadrantRadii {
        self.radii_nm[t as usize]
    }

    /// Quadrant radii at `t`, widened by any stronger threshold's radii so
    /// that weaker-wind footprints always contain stronger ones.
    fn effective_radii(&self, t: WindThreshold) -> QuadrantRadii {
        let mut r: QuadrantRadii = [0.0; 4];
        for level in WindThreshold::ALL.iter().filter(|&&l| l >= t) {
            for (q, v) in self.radii(*level).iter().enumerate() {
                r[q] = r[q].max(*v);
            }
        }
        r
    }
}

const TRACK_COLUMNS: usize = 15;

/// Read a comma-delimited best-track table:
/// `timestamp, lat, lon, r34_ne, r34_se, r34_sw, r34_nw, r50_…, r64_…`.
/// Timestamps are ISO-8601 (`2012-10-29T18:00:00Z` or `2012-10-29 18:00`).
pub fn read_track<R: BufRead>(reader: R) -> Result<Vec<StormTrackPoint>> {
    let mut points = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields[0].eq_ignore_ascii_case("timestamp") {
            continue;
        }
        let loc = format!("track line {}", lineno + 1);
        if fields.len() != TRACK_COLUMNS {
            return Err(Error::parse(
                loc,
                format!("expected {TRACK_COLUMNS} fields, got {}", fields.len()),
            ));
        }
        let time = parse_time(fields[0]).ok_or_else(|| Error::parse(&loc, "bad timestamp"))?;
        let nums: Vec<f64> = fields[1..]
            .iter()
            .map(|s| {
                if s.is_empty() {
                    Ok(0.0)
                } else {
                    s.parse::<f64>()
                        .map_err(|_| Error::parse(&loc, format!("bad number {s:?}")))
                }
            })
            .collect::<Result<_>>()?;
        let center = GeoPoint::new(nums[0], nums[1], Precision::Exact)?;
        let mut radii_nm = [[0.0; 4]; 3];
        for (k, level) in radii_nm.iter_mut().enumerate() {
            for (q, r) in level.iter_mut().enumerate() {
                let v = nums[2 + 4 * k + q];
                if v < 0.0 {
                    return Err(Error::parse(&loc, "negative radius"));
                }
                *r = v;
            }
        }
        points.push(StormTrackPoint { time, center, radii_nm });
    }
    if points.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::arg("track points must be time-ordered"));
    }
    Ok(points)
}

pub fn write_track<W: std::io::Write>(mut w: W, track: &[StormTrackPoint]) -> std::io::Result<()> {
    write!(w, "timestamp,lat,lon")?;
    for kt in [34, 50, 64] {
        for q in ["ne", "se", "sw", "nw"] {
            write!(w, ",r{kt}_{q}")?;
        }
    }
    writeln!(w)?;
    for p in track {
        write!(
            w,
            "{},{},{}",
            p.time.format("%Y-%m-%dT%H:%M:%SZ"),
            p.center.lat,
            p.center.lon
        )?;
        for level in &p.radii_nm {
            for r in level {
                write!(w, ",{r}")?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

fn parse_time(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaOptions {
    /// Vertices per full circle; at least 8.
    pub arc_segments: usize,
    /// Use per-quadrant radii instead of the largest quadrant radius.
    pub quadrant_mode: bool,
}

impl Default for AreaOptions {
    fn default() -> Self {
        AreaOptions {
            arc_segments: 64,
            quadrant_mode: false,
        }
    }
}

/// Closed ring of (lat, lon) vertices; first vertex repeated at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    pub vertices: Vec<(f64, f64)>,
    bbox: (f64, f64, f64, f64),
}

impl Ring {
    /// Build from an open or closed vertex list.
    pub fn new(mut vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.first() != vertices.last() {
            let first = vertices[0];
            vertices.push(first);
        }
        if vertices.len() < 4 {
            return Err(Error::arg("a ring needs at least 3 distinct vertices"));
        }
        let mut bbox = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(lat, lon) in &vertices {
            bbox.0 = bbox.0.min(lat);
            bbox.1 = bbox.1.max(lat);
            bbox.2 = bbox.2.min(lon);
            bbox.3 = bbox.3.max(lon);
        }
        Ok(Ring { vertices, bbox })
    }

    /// Even-odd ray casting; points on an edge count as inside.
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        let (lat_min, lat_max, lon_min, lon_max) = self.bbox;
        if lat < lat_min || lat > lat_max || lon < lon_min || lon > lon_max {
            return false;
        }
        let mut inside = false;
        for w in self.vertices.windows(2) {
            let (y1, x1) = w[0];
            let (y2, x2) = w[1];
            if on_segment(lat, lon, y1, x1, y2, x2) {
                return true;
            }
            if (y1 > lat) != (y2 > lat) {
                let x_cross = x1 + (lat - y1) * (x2 - x1) / (y2 - y1);
                if lon < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// The same ring started from a different vertex.
    pub fn rotated(&self, k: usize) -> Ring {
        let open = &self.vertices[..self.vertices.len() - 1];
        let k = k % open.len();
        let v: Vec<_> = open[k..].iter().chain(&open[..k]).copied().collect();
        Ring::new(v).expect("rotation preserves validity")
    }
}

fn on_segment(py: f64, px: f64, y1: f64, x1: f64, y2: f64, x2: f64) -> bool {
    const EPS: f64 = 1e-12;
    let cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1);
    let scale = (x2 - x1).abs().max((y2 - y1).abs()).max(1.0);
    if cross.abs() > EPS * scale {
        return false;
    }
    px >= x1.min(x2) - EPS && px <= x1.max(x2) + EPS && py >= y1.min(y2) - EPS && py <= y1.max(y2) + EPS
}

/// Union of convex or star-shaped rings. A point is affected when any ring
/// contains it.
#[derive(Debug, Clone, PartialEq)]
pub struct AffectedArea {
    pub threshold_kt: u32,
    pub rings: Vec<Ring>,
}

/// Local tangent-plane coordinates in nautical miles around a reference point.
#[derive(Debug, Clone, Copy)]
struct LocalPlane {
    lat0: f64,
    lon0: f64,
    coslat: f64,
}

impl LocalPlane {
    fn at(lat0: f64, lon0: f64) -> Self {
        LocalPlane {
            lat0,
            lon0,
            coslat: lat0.to_radians().cos(),
        }
    }

    fn project(&self, lat: f64, lon: f64) -> (f64, f64) {
        ((lon - self.lon0) * self.coslat * 60.0, (lat - self.lat0) * 60.0)
    }

    fn unproject(&self, x: f64, y: f64) -> (f64, f64) {
        (self.lat0 + y / 60.0, self.lon0 + x / (60.0 * self.coslat))
    }
}

/// Mean Earth radius in nautical miles.
const EARTH_RADIUS_NM: f64 = 3440.065;

/// Point at great-circle distance `r_nm` from `(lat, lon)` along `bearing`
/// (radians clockwise from north).
fn destination(lat: f64, lon: f64, bearing: f64, r_nm: f64) -> (f64, f64) {
    let (phi1, lam1) = (lat.to_radians(), lon.to_radians());
    let delta = r_nm / EARTH_RADIUS_NM;
    let phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * bearing.cos()).asin();
    let lam2 = lam1 + (bearing.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * phi2.sin());
    (phi2.to_degrees(), lam2.to_degrees())
}

/// Footprint vertices as `(lat, lon)`, each at the geodesic radius of its
/// bearing from `center`.
fn footprint(center: &GeoPoint, radii: QuadrantRadii, opts: &AreaOptions) -> Vec<(f64, f64)> {
    let n = opts.arc_segments;
    let at = |bearing: f64, r: f64| destination(center.lat, center.lon, bearing, r);
    if !opts.quadrant_mode {
        let r = radii.iter().copied().fold(0.0, f64::max);
        return (0..n)
            .map(|k| at(std::f64::consts::TAU * k as f64 / n as f64, r))
            .collect();
    }
    let per_quadrant = n.div_ceil(4).max(2);
    let mut pts = Vec::with_capacity(4 * (per_quadrant + 1));
    for (q, &r) in radii.iter().enumerate() {
        let start = std::f64::consts::FRAC_PI_2 * q as f64;
        for k in 0..=per_quadrant {
            let b = start + std::f64::consts::FRAC_PI_2 * k as f64 / per_quadrant as f64;
            pts.push(at(b, r));
        }
    }
    pts
}

fn convex_hull(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn ring_from_plane(plane: &LocalPlane, pts: &[(f64, f64)]) -> Result<Ring> {
    Ring::new(pts.iter().map(|&(x, y)| plane.unproject(x, y)).collect())
}

/// Sweep wind-radius footprints along the track.
///
/// Every track point with a nonzero radius contributes its footprint; each
/// consecutive pair of such points contributes the convex hull of both
/// footprints, which covers the corridor between them.
pub fn build_affected_area(
    track: &[StormTrackPoint],
    threshold: WindThreshold,
    opts: AreaOptions,
) -> Result<AffectedArea> {
    if opts.arc_segments < 8 {
        return Err(Error::arg("arc_segments must be at least 8"));
    }
    if track.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::arg("track points must be time-ordered"));
    }
    let radii: Vec<QuadrantRadii> = track.iter().map(|p| p.effective_radii(threshold)).collect();
    let active: Vec<bool> = radii.iter().map(|r| r.iter().any(|&v| v > 0.0)).collect();
    if !active.iter().any(|&a| a) {
        return Err(Error::EmptyArea {
            threshold_kt: threshold.knots(),
        });
    }

    let mut rings = Vec::new();
    for i in 0..track.len() {
        if !active[i] {
            continue;
        }
        let c = &track[i].center;
        let joined_prev = i > 0 && active[i - 1];
        let joined_next = i + 1 < track.len() && active[i + 1];
        if !joined_prev && !joined_next {
            let fp = footprint(c, radii[i], &opts);
            let fp = if opts.quadrant_mode { dedup_ring(fp) } else { fp };
            rings.push(Ring::new(fp)?);
        }
        if joined_next {
            let d = &track[i + 1].center;
            let plane = LocalPlane::at(0.5 * (c.lat + d.lat), 0.5 * (c.lon + d.lon));
            let pts: Vec<(f64, f64)> = footprint(c, radii[i], &opts)
                .into_iter()
                .chain(footprint(d, radii[i + 1], &opts))
                .map(|(lat, lon)| plane.project(lat, lon))
                .collect();
            rings.push(ring_from_plane(&plane, &convex_hull(pts))?);
        }
    }
    Ok(AffectedArea {
        threshold_kt: threshold.knots(),
        rings,
    })
}

fn dedup_ring(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    pts
}

pub fn is_affected(p: &GeoPoint, area: &AffectedArea) -> bool {
    area.rings.iter().any(|r| r.contains(p.lat, p.lon))
}

impl AffectedArea {
    /// GeoJSON `MultiPolygon` feature, coordinates as `[lon, lat]`.
    pub fn to_geojson(&self) -> Value {
        let polys: Vec<Value> = self
            .rings
            .iter()
            .map(|r| {
                json!([r
                    .vertices
                    .iter()
                    .map(|&(lat, lon)| json!([lon, lat]))
                    .collect::<Vec<_>>()])
            })
            .collect();
        json!({
            "type": "Feature",
            "properties": { "threshold_kt": self.threshold_kt },
            "geometry": { "type": "MultiPolygon", "coordinates": polys },
        })
    }
}

// ---------------------------------------------------------------------------
// Regular grid

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
    pub cell_deg: f64,
}

/// `(row, col)` index of a grid cell; row 0 is the southern edge.
pub type Cell = (u32, u32);

impl GridSpec {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64, cell_deg: f64) -> Result<Self> {
        let g = GridSpec {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
            cell_deg,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lat_min < self.lat_max && self.lon_min < self.lon_max) {
            return Err(Error::arg("grid bbox must have min < max"));
        }
        if !(self.cell_deg > 0.0) {
            return Err(Error::arg("grid cell size must be positive"));
        }
        Ok(())
    }

    pub fn rows(&self) -> u32 {
        ((self.lat_max - self.lat_min) / self.cell_deg).ceil().max(1.0) as u32
    }

    pub fn cols(&self) -> u32 {
        ((self.lon_max - self.lon_min) / self.cell_deg).ceil().max(1.0) as u32
    }

    /// `(lat_lo, lat_hi, lon_lo, lon_hi)`, clipped to the bbox.
    pub fn cell_bounds(&self, (row, col): Cell) -> (f64, f64, f64, f64) {
        let lat_lo = self.lat_min + row as f64 * self.cell_deg;
        let lon_lo = self.lon_min + col as f64 * self.cell_deg;
        (
            lat_lo,
            (lat_lo + self.cell_deg).min(self.lat_max),
            lon_lo,
            (lon_lo + self.cell_deg).min(self.lon_max),
        )
    }
}

fn axis_index(v: f64, lo: f64, cell: f64, n: u32) -> u32 {
    let mut i = ((v - lo) / cell).floor().max(0.0) as u32;
    i = i.min(n - 1);
    // Guard against rounding at cell edges.
    if i > 0 && v < lo + i as f64 * cell {
        i -= 1;
    }
    if i + 1 < n && v >= lo + (i + 1) as f64 * cell {
        i += 1;
    }
    i
}

/// Floor-indexed cell of `p`, or `None` outside the bbox. Points on an
/// interior edge go to the higher-index cell; the outer max edges belong to
/// the last row/column.
pub fn assign_cell(p: &GeoPoint, g: &GridSpec) -> Option<Cell> {
    if p.lat < g.lat_min || p.lat > g.lat_max || p.lon < g.lon_min || p.lon > g.lon_max {
        return None;
    }
    Some((
        axis_index(p.lat, g.lat_min, g.cell_deg, g.rows()),
        axis_index(p.lon, g.lon_min, g.cell_deg, g.cols()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn gaz() -> Gazetteer {
        let tsv = "name\talt_names\tadmin_level\tcountry\tlat\tlon\tpopulation\n\
                   New York City\tnew york|nyc\tcity\tUS\t40.7128\t-74.0060\t8336817\n\
                   New York\tny\tstate\tUS\t42.9\t-75.5\t19453561\n\
                   United States\tusa|us\tcountry\tUS\t39.8\t-98.6\t328000000\n\
                   Toronto\t\tcity\tCA\t43.65\t-79.38\t2731571\n\
                   London\t\tcity\tGB\t51.5\t-0.12\t8900000\n";
        Gazetteer::read(tsv.as_bytes()).unwrap()
    }

    fn profile(loc: &str) -> UserProfile {
        UserProfile {
            user_id: "u".into(),
            self_location: Some(loc.into()),
            ..Default::default()
        }
    }

    #[test]
    fn city_beats_state_on_shared_name() {
        let g = gaz();
        let p = geocode(&profile("New York, NY"), &g).unwrap();
        assert_eq!(p.precision, Precision::Centroid);
        assert!((p.lat - 40.7128).abs() < 1e-12 && (p.lon + 74.006).abs() < 1e-12);
    }

    #[test]
    fn unknown_place_is_absent() {
        assert!(geocode(&profile("the moon"), &gaz()).is_none());
        assert!(geocode(&profile("   "), &gaz()).is_none());
    }

    #[test]
    fn device_coordinates_win() {
        let mut p = profile("London");
        p.geopoint = Some(GeoPoint::exact(40.0, -74.0));
        let l = locate(&p, &gaz()).unwrap();
        assert_eq!(l.point.precision, Precision::Exact);
        assert_eq!(l.country_code.as_deref(), Some("US"));
    }

    #[test]
    fn regional_filter() {
        let g = gaz();
        assert!(in_us_or_canada(&locate(&profile("Toronto"), &g).unwrap()));
        assert!(!in_us_or_canada(&locate(&profile("London, UK"), &g).unwrap()));
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_place("  St. John's,  NL "), "st john s nl");
    }

    fn point(lat: f64, lon: f64, r34: f64, r50: f64, r64: f64, hour: u32) -> StormTrackPoint {
        StormTrackPoint {
            time: Utc.with_ymd_and_hms(2012, 10, 29, hour, 0, 0).unwrap(),
            center: GeoPoint::exact(lat, lon),
            radii_nm: [[r34; 4], [r50; 4], [r64; 4]],
        }
    }

    #[test]
    fn single_point_is_regular_polygon() {
        let t = [point(35.0, -70.0, 60.0, 0.0, 0.0, 0)];
        let area = build_affected_area(
            &t,
            WindThreshold::Kt34,
            AreaOptions {
                arc_segments: 32,
                quadrant_mode: false,
            },
        )
        .unwrap();
        assert_eq!(area.rings.len(), 1);
        let ring = &area.rings[0];
        assert_eq!(ring.vertices.len(), 33);
        assert_eq!(ring.vertices.first(), ring.vertices.last());
        let c = GeoPoint::exact(35.0, -70.0);
        for &(lat, lon) in &ring.vertices {
            let (p1, p2) = (35f64.to_radians(), lat.to_radians());
            let dl = (lon + 70.0).to_radians();
            let d = (p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos())
                .clamp(-1.0, 1.0)
                .acos()
                * EARTH_RADIUS_NM;
            assert!((d - 60.0).abs() < 1e-6, "vertex at {d} nm");
        }
        assert!(is_affected(&c, &area));
        assert!(!is_affected(&GeoPoint::exact(35.0 + 10.0, -70.0), &area));
    }

    #[test]
    fn empty_threshold_is_an_error() {
        let t = [point(35.0, -70.0, 60.0, 0.0, 0.0, 0)];
        assert!(matches!(
            build_affected_area(&t, WindThreshold::Kt64, AreaOptions::default()),
            Err(Error::EmptyArea { threshold_kt: 64 })
        ));
        assert!(build_affected_area(
            &t,
            WindThreshold::Kt34,
            AreaOptions {
                arc_segments: 6,
                quadrant_mode: false
            }
        )
        .is_err());
    }

    #[test]
    fn unordered_track_rejected() {
        let t = [
            point(35.0, -70.0, 60.0, 0.0, 0.0, 5),
            point(36.0, -70.0, 60.0, 0.0, 0.0, 1),
        ];
        assert!(build_affected_area(&t, WindThreshold::Kt34, AreaOptions::default()).is_err());
    }

    #[test]
    fn quadrant_mode_shrinks_footprint() {
        let mut p = point(30.0, -75.0, 0.0, 0.0, 0.0, 0);
        p.radii_nm[0] = [100.0, 20.0, 20.0, 20.0];
        let full = build_affected_area(&[p.clone()], WindThreshold::Kt34, AreaOptions::default()).unwrap();
        let quad = build_affected_area(
            &[p],
            WindThreshold::Kt34,
            AreaOptions {
                arc_segments: 64,
                quadrant_mode: true,
            },
        )
        .unwrap();
        use std::f64::consts::FRAC_1_SQRT_2;
        // 50 nm to the SW: inside the max-radius disk, outside the 20 nm SW quadrant.
        let sw = GeoPoint::exact(
            30.0 - 50.0 / 60.0 * FRAC_1_SQRT_2,
            -75.0 - 50.0 / 60.0 * FRAC_1_SQRT_2 / 30f64.to_radians().cos(),
        );
        assert!(is_affected(&sw, &full));
        assert!(!is_affected(&sw, &quad));
        let ne = GeoPoint::exact(
            30.0 + 60.0 / 60.0 * FRAC_1_SQRT_2,
            -75.0 + 60.0 / 60.0 * FRAC_1_SQRT_2 / 30f64.to_radians().cos(),
        );
        assert!(is_affected(&ne, &quad));
    }

    #[test]
    fn boundary_vertex_is_inside() {
        let ring = Ring::new(vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]).unwrap();
        assert!(ring.contains(0.0, 0.5));
        assert!(ring.contains(1.0, 1.0));
        assert!(ring.contains(0.5, 0.5));
        assert!(!ring.contains(1.5, 0.5));
    }

    #[test]
    fn track_file_round_trip() {
        let t = vec![
            point(35.0, -70.0, 60.0, 30.0, 0.0, 0),
            point(36.0, -71.0, 80.0, 40.0, 20.0, 6),
        ];
        let mut buf = Vec::new();
        write_track(&mut buf, &t).unwrap();
        assert_eq!(read_track(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn grid_examples() {
        let g = GridSpec::new(0.0, 10.0, 0.0, 10.0, 1.0).unwrap();
        assert_eq!(assign_cell(&GeoPoint::exact(0.5, 0.5), &g), Some((0, 0)));
        assert_eq!(assign_cell(&GeoPoint::exact(10.5, 5.0), &g), None);
        assert_eq!(assign_cell(&GeoPoint::exact(3.0, 4.0), &g), Some((3, 4)));
        assert_eq!(assign_cell(&GeoPoint::exact(10.0, 10.0), &g), Some((9, 9)));
        assert!(GridSpec::new(1.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1.0, 0.0).is_err());
    }
}
