//! Glue from parsed messages, profiles and a follower graph to a sampling
//! population.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geo::{in_us_or_canada, is_affected, locate, AffectedArea, Gazetteer, GeoPoint, Located, Precision};
use crate::ingest::{filter_relevance, FilterLevel, Message, UserProfile};
use crate::leadtime::{activity_counts, entry_times, EntryTimeTable, Population};
use crate::network::SocialGraph;
use crate::sampling::Region;

/// Locate users from their profiles, falling back to the first geotagged
/// message when the profile has neither coordinates nor a resolvable place.
/// Only users placed in the United States or Canada are kept.
pub fn user_locations(profiles: &[UserProfile], messages: &[Message], gaz: &Gazetteer) -> HashMap<String, Located> {
    let mut out = HashMap::new();
    for p in profiles {
        if let Some(l) = locate(p, gaz) {
            out.insert(p.user_id.clone(), l);
        }
    }
    for m in messages {
        if out.contains_key(&m.user_id) {
            continue;
        }
        if let Some(g) = m.geo {
            let probe = UserProfile {
                user_id: m.user_id.clone(),
                geopoint: Some(g),
                ..Default::default()
            };
            if let Some(l) = locate(&probe, gaz) {
                out.insert(m.user_id.clone(), l);
            }
        }
    }
    out.retain(|_, l| in_us_or_canada(l));
    out
}

/// Inside/outside per located user. Without an area every located user is
/// outside, which still supports unconstrained sampling.
pub fn user_regions(located: &HashMap<String, Located>, area: Option<&AffectedArea>) -> HashMap<String, Region> {
    located
        .iter()
        .map(|(u, l)| {
            let inside = area.is_some_and(|a| is_affected(&l.point, a));
            (u.clone(), if inside { Region::Inside } else { Region::Outside })
        })
        .collect()
}

/// A located user with the region used for sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct UserLocation {
    pub located: Located,
    pub region: Region,
}

pub const LOCATION_HEADER: &str = "user,lat,lon,precision,country,region";

/// Locations as a table sorted by user id.
pub fn write_locations<W: Write>(
    mut w: W,
    located: &HashMap<String, Located>,
    regions: &HashMap<String, Region>,
) -> std::io::Result<()> {
    writeln!(w, "{LOCATION_HEADER}")?;
    let sorted: BTreeMap<&String, &Located> = located.iter().collect();
    for (user, l) in sorted {
        let Some(region) = regions.get(user) else { continue };
        let precision = match l.point.precision {
            Precision::Exact => "exact",
            Precision::Centroid => "centroid",
        };
        let region = match region {
            Region::Inside => "inside",
            Region::Outside => "outside",
        };
        writeln!(
            w,
            "{user},{},{},{precision},{},{region}",
            l.point.lat,
            l.point.lon,
            l.country_code.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}

pub fn read_locations<R: BufRead>(reader: R) -> Result<HashMap<String, UserLocation>> {
    let mut out = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') || line.starts_with("user,") {
            continue;
        }
        let loc = format!("locations line {}", lineno + 1);
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::parse(loc, "expected 6 fields"));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(&loc, format!("bad coordinate {s:?}")))
        };
        let precision = match f[3] {
            "exact" => Precision::Exact,
            "centroid" => Precision::Centroid,
            other => return Err(Error::parse(&loc, format!("bad precision {other:?}"))),
        };
        let region = match f[5] {
            "inside" => Region::Inside,
            "outside" => Region::Outside,
            other => return Err(Error::parse(&loc, format!("bad region {other:?}"))),
        };
        let located = Located {
            point: GeoPoint::new(num(f[1])?, num(f[2])?, precision)?,
            country_code: (!f[4].is_empty()).then(|| f[4].to_string()),
        };
        out.insert(f[0].to_string(), UserLocation { located, region });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub relevant: Vec<Message>,
    pub entries: EntryTimeTable,
    pub regions: HashMap<String, Region>,
    pub population: Population,
}

/// Filter, derive entry times and activity, locate users and align
/// everything to the graph.
pub fn prepare(
    messages: &[Message],
    profiles: &[UserProfile],
    graph: Arc<SocialGraph>,
    gaz: &Gazetteer,
    area: Option<&AffectedArea>,
    level: FilterLevel,
) -> Prepared {
    let regions = user_regions(&user_locations(profiles, messages, gaz), area);
    prepare_with_regions(messages, graph, regions, level)
}

/// Like [`prepare`], with user regions already resolved.
pub fn prepare_with_regions(
    messages: &[Message],
    graph: Arc<SocialGraph>,
    regions: HashMap<String, Region>,
    level: FilterLevel,
) -> Prepared {
    let relevant = filter_relevance(messages, level);
    let entries = entry_times(&relevant);
    let activity = activity_counts(&relevant, None);
    let population = Population::new(graph, &entries, &activity, &regions);
    Prepared {
        relevant,
        entries,
        regions,
        population,
    }
}

/// Population for the timestamp-shuffled null model of `prepared`.
pub fn null_population(prepared: &Prepared, seed: u64) -> Population {
    let shuffled = crate::leadtime::null_model_shuffle(&prepared.relevant, seed);
    prepared.population.with_entries(&entry_times(&shuffled))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locations_round_trip() {
        let mut located = HashMap::new();
        let mut regions = HashMap::new();
        located.insert(
            "b".to_string(),
            Located {
                point: GeoPoint::exact(40.7, -74.0),
                country_code: Some("US".into()),
            },
        );
        located.insert(
            "a".to_string(),
            Located {
                point: GeoPoint::new(43.65, -79.38, Precision::Centroid).unwrap(),
                country_code: None,
            },
        );
        regions.insert("a".to_string(), Region::Outside);
        regions.insert("b".to_string(), Region::Inside);
        let mut buf = Vec::new();
        write_locations(&mut buf, &located, &regions).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("a,"));
        let back = read_locations(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back["b"].region, Region::Inside);
        assert_eq!(back["a"].located, located["a"]);
    }
}
