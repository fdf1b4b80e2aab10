//! Control and sensor group formation.
//!
//! A control group is a uniform sample of eligible users. Its sensor group
//! takes one random friend (followee) per control member, so sensors are
//! reached by following edges and inherit the friendship-paradox bias toward
//! well-connected accounts.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{NodeId, SocialGraph};

/// Position of a geocoded user relative to the affected area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Inside,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeoConstraint {
    Any,
    In,
    Out,
}

impl GeoConstraint {
    fn admits(self, region: Option<Region>) -> bool {
        match self {
            GeoConstraint::Any => true,
            GeoConstraint::In => region == Some(Region::Inside),
            GeoConstraint::Out => region == Some(Region::Outside),
        }
    }
}

/// Geographic restriction on (control, sensor) membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GeoCombo {
    #[serde(rename = "any")]
    Any,
    #[serde(rename = "in-in")]
    InIn,
    #[serde(rename = "in-out")]
    InOut,
    #[serde(rename = "out-in")]
    OutIn,
    #[serde(rename = "out-out")]
    OutOut,
}

impl GeoCombo {
    pub const ALL: [GeoCombo; 5] = [
        GeoCombo::Any,
        GeoCombo::InIn,
        GeoCombo::InOut,
        GeoCombo::OutIn,
        GeoCombo::OutOut,
    ];

    pub fn control(self) -> GeoConstraint {
        match self {
            GeoCombo::Any => GeoConstraint::Any,
            GeoCombo::InIn | GeoCombo::InOut => GeoConstraint::In,
            GeoCombo::OutIn | GeoCombo::OutOut => GeoConstraint::Out,
        }
    }

    pub fn sensor(self) -> GeoConstraint {
        match self {
            GeoCombo::Any => GeoConstraint::Any,
            GeoCombo::InIn | GeoCombo::OutIn => GeoConstraint::In,
            GeoCombo::InOut | GeoCombo::OutOut => GeoConstraint::Out,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GeoCombo::Any => "any",
            GeoCombo::InIn => "in-in",
            GeoCombo::InOut => "in-out",
            GeoCombo::OutIn => "out-in",
            GeoCombo::OutOut => "out-out",
        }
    }
}

impl fmt::Display for GeoCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeoCombo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeoCombo::ALL
            .into_iter()
            .find(|c| c.as_str() == s || c.as_str().replace('-', "_") == s)
            .ok_or_else(|| {
                Error::arg(format!(
                    "unknown combo {s:?}; expected any, in-in, in-out, out-in or out-out"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Control,
    Sensor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleGroup {
    pub kind: GroupKind,
    pub members: Vec<NodeId>,
    pub seed: u64,
    pub combo: GeoCombo,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPair {
    pub control: SampleGroup,
    pub sensor: SampleGroup,
}

/// Who may be sampled. Control members must be geocoded and active (have an
/// entry time); sensors must be active, and geocoded only when a geographic
/// constraint applies.
#[derive(Debug, Clone)]
pub struct SamplingPool {
    active: Vec<bool>,
    region: Vec<Option<Region>>,
    control_any: Vec<NodeId>,
    control_in: Vec<NodeId>,
    control_out: Vec<NodeId>,
}

impl SamplingPool {
    /// `active[i]` and `region[i]` describe node `i` of the graph.
    pub fn new(active: Vec<bool>, region: Vec<Option<Region>>) -> Self {
        assert_eq!(active.len(), region.len());
        let mut control_any = Vec::new();
        let mut control_in = Vec::new();
        let mut control_out = Vec::new();
        for (i, (&a, &r)) in active.iter().zip(&region).enumerate() {
            if !a {
                continue;
            }
            let id = NodeId(i as u32);
            match r {
                Some(Region::Inside) => {
                    control_any.push(id);
                    control_in.push(id);
                }
                Some(Region::Outside) => {
                    control_any.push(id);
                    control_out.push(id);
                }
                None => {}
            }
        }
        SamplingPool {
            active,
            region,
            control_any,
            control_in,
            control_out,
        }
    }

    pub fn node_count(&self) -> usize {
        self.active.len()
    }

    pub fn region(&self, v: NodeId) -> Option<Region> {
        self.region[v.index()]
    }

    /// Eligible control members under `constraint`, in node order.
    pub fn control_candidates(&self, constraint: GeoConstraint) -> &[NodeId] {
        match constraint {
            GeoConstraint::Any => &self.control_any,
            GeoConstraint::In => &self.control_in,
            GeoConstraint::Out => &self.control_out,
        }
    }

    #[inline]
    pub fn sensor_admissible(&self, v: NodeId, constraint: GeoConstraint) -> bool {
        self.active[v.index()] && constraint.admits(self.region[v.index()])
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const CONTROL_STREAM: u64 = 0;
const SENSOR_STREAM: u64 = 1;

/// Uniform sample of `n` control members without replacement.
pub fn sample_control(pool: &SamplingPool, n: usize, combo: GeoCombo, seed: u64) -> Result<SampleGroup> {
    if n == 0 {
        return Err(Error::arg("sample size must be positive"));
    }
    let candidates = pool.control_candidates(combo.control());
    if candidates.len() < n {
        return Err(Error::Capacity(format!(
            "control pool has {} users, {} requested (short by {})",
            candidates.len(),
            n,
            n - candidates.len()
        )));
    }
    let mut rng = rng_for(seed, CONTROL_STREAM);
    let members = index::sample(&mut rng, candidates.len(), n)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    Ok(SampleGroup {
        kind: GroupKind::Control,
        members,
        seed,
        combo,
    })
}

/// Pick one unused admissible friend per control member.
///
/// A control member with no admissible unused friend is replaced by a fresh
/// draw from the control pool and the search continues, so both groups end
/// up with `|control|` members and no user appears twice across them.
pub fn derive_sensor(control: &SampleGroup, graph: &SocialGraph, pool: &SamplingPool, seed: u64) -> Result<GroupPair> {
    if control.members.is_empty() {
        return Err(Error::arg("control group is empty"));
    }
    if graph.node_count() != pool.node_count() {
        return Err(Error::Integrity(
            "graph and sampling pool disagree on node count".into(),
        ));
    }
    let combo = control.combo;
    let wanted = combo.sensor();
    let n_nodes = graph.node_count();
    let mut in_control = vec![false; n_nodes];
    let mut in_sensor = vec![false; n_nodes];
    let mut retired = vec![false; n_nodes];
    for &c in &control.members {
        if in_control[c.index()] {
            return Err(Error::Integrity(format!("duplicate control member {}", graph.name(c))));
        }
        in_control[c.index()] = true;
    }

    let mut rng = rng_for(seed, SENSOR_STREAM);
    let mut members = control.members.clone();
    let mut sensors = Vec::with_capacity(members.len());
    let mut reserve: Option<Vec<NodeId>> = None;
    let mut options: Vec<NodeId> = Vec::new();

    for slot in 0..members.len() {
        loop {
            let c = members[slot];
            options.clear();
            options.extend(
                graph
                    .friends(c)
                    .iter()
                    .copied()
                    .filter(|&v| !in_sensor[v.index()] && !in_control[v.index()] && pool.sensor_admissible(v, wanted)),
            );
            if !options.is_empty() {
                let s = options[rng.random_range(0..options.len())];
                in_sensor[s.index()] = true;
                sensors.push(s);
                break;
            }
            in_control[c.index()] = false;
            retired[c.index()] = true;
            let reserve = reserve.get_or_insert_with(|| {
                let mut r: Vec<NodeId> = pool
                    .control_candidates(combo.control())
                    .iter()
                    .copied()
                    .filter(|v| !in_control[v.index()] && !retired[v.index()])
                    .collect();
                r.shuffle(&mut rng);
                r
            });
            let fresh = loop {
                match reserve.pop() {
                    None => {
                        return Err(Error::Capacity(format!(
                            "pool exhausted after forming {} of {} sensor members",
                            sensors.len(),
                            members.len()
                        )))
                    }
                    Some(v) if in_control[v.index()] || in_sensor[v.index()] || retired[v.index()] => continue,
                    Some(v) => break v,
                }
            };
            in_control[fresh.index()] = true;
            members[slot] = fresh;
        }
    }

    Ok(GroupPair {
        control: SampleGroup {
            kind: GroupKind::Control,
            members,
            seed: control.seed,
            combo,
        },
        sensor: SampleGroup {
            kind: GroupKind::Sensor,
            members: sensors,
            seed,
            combo,
        },
    })
}

/// Control sample plus derived sensors, both seeded from `seed`.
pub fn draw_pair(graph: &SocialGraph, pool: &SamplingPool, n: usize, combo: GeoCombo, seed: u64) -> Result<GroupPair> {
    let control = sample_control(pool, n, combo, seed)?;
    derive_sensor(&control, graph, pool, seed)
}

/// Write groups as `kind,user_id,seed,combo` rows with a header.
pub fn write_groups<W: Write>(mut w: W, graph: &SocialGraph, groups: &[&SampleGroup]) -> std::io::Result<()> {
    writeln!(w, "kind,user_id,seed,combo")?;
    for g in groups {
        let kind = match g.kind {
            GroupKind::Control => "control",
            GroupKind::Sensor => "sensor",
        };
        for &m in &g.members {
            writeln!(w, "{kind},{},{},{}", graph.name(m), g.seed, g.combo)?;
        }
    }
    Ok(())
}

/// Read groups written by [`write_groups`]; returns `(control, sensor)`.
pub fn read_groups<R: BufRead>(reader: R, graph: &SocialGraph) -> Result<GroupPair> {
    let mut control: Option<SampleGroup> = None;
    let mut sensor: Option<SampleGroup> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') || line.starts_with("kind,") {
            continue;
        }
        let loc = format!("groups line {}", lineno + 1);
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::parse(loc, "expected 4 fields"));
        }
        let kind = match f[0] {
            "control" => GroupKind::Control,
            "sensor" => GroupKind::Sensor,
            other => return Err(Error::parse(loc, format!("bad kind {other:?}"))),
        };
        let id = graph.id(f[1]).ok_or_else(|| Error::UnknownUser(f[1].to_string()))?;
        let seed: u64 = f[2].parse().map_err(|_| Error::parse(&loc, "bad seed"))?;
        let combo: GeoCombo = f[3].parse()?;
        let slot = match kind {
            GroupKind::Control => &mut control,
            GroupKind::Sensor => &mut sensor,
        };
        slot.get_or_insert_with(|| SampleGroup {
            kind,
            members: Vec::new(),
            seed,
            combo,
        })
        .members
        .push(id);
    }
    match (control, sensor) {
        (Some(control), Some(sensor)) => Ok(GroupPair { control, sensor }),
        _ => Err(Error::parse("groups file", "needs both control and sensor rows")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_active(n: usize) -> SamplingPool {
        SamplingPool::new(vec![true; n], vec![Some(Region::Outside); n])
    }

    fn graph(names: &[&str], edges: &[(u32, u32)]) -> SocialGraph {
        SocialGraph::from_indexed(names.iter().map(|s| s.to_string()).collect(), edges)
    }

    #[test]
    fn exhaustive_draw_returns_whole_pool() {
        let pool = all_active(10);
        let g = sample_control(&pool, 10, GeoCombo::Any, 3).unwrap();
        let mut m = g.members.clone();
        m.sort();
        assert_eq!(m, (0..10).map(NodeId).collect::<Vec<_>>());
    }

    #[test]
    fn oversized_request_is_capacity_error() {
        let err = sample_control(&all_active(4), 5, GeoCombo::Any, 1).unwrap_err();
        assert!(
            matches!(err, Error::Capacity(ref s) if s.contains("short by 1")),
            "{err}"
        );
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let pool = all_active(100);
        let a = sample_control(&pool, 20, GeoCombo::Any, 42).unwrap();
        let b = sample_control(&pool, 20, GeoCombo::Any, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_control(&pool, 20, GeoCombo::Any, 43).unwrap();
        assert_ne!(a.members, c.members);
    }

    #[test]
    fn distinct_hubs_are_forced() {
        // c0 -> h0, c1 -> h1
        let g = graph(&["c0", "c1", "h0", "h1"], &[(0, 2), (1, 3)]);
        let pool = all_active(4);
        let control = SampleGroup {
            kind: GroupKind::Control,
            members: vec![NodeId(0), NodeId(1)],
            seed: 0,
            combo: GeoCombo::Any,
        };
        let pair = derive_sensor(&control, &g, &pool, 9).unwrap();
        assert_eq!(pair.sensor.members, vec![NodeId(2), NodeId(3)]);
        assert_eq!(pair.control.members, control.members);
    }

    #[test]
    fn shared_hub_forces_replacement() {
        // c0, c1 both follow only h; spare x follows y.
        let g = graph(&["c0", "c1", "h", "x", "y"], &[(0, 2), (1, 2), (3, 4)]);
        // h and y are active but not geocoded, so only c0, c1, x can be controls.
        let pool = SamplingPool::new(
            vec![true; 5],
            vec![
                Some(Region::Outside),
                Some(Region::Outside),
                None,
                Some(Region::Outside),
                None,
            ],
        );
        let control = SampleGroup {
            kind: GroupKind::Control,
            members: vec![NodeId(0), NodeId(1)],
            seed: 0,
            combo: GeoCombo::Any,
        };
        let pair = derive_sensor(&control, &g, &pool, 1).unwrap();
        assert_eq!(pair.control.members, vec![NodeId(0), NodeId(3)]);
        assert_eq!(pair.sensor.members, vec![NodeId(2), NodeId(4)]);
    }

    #[test]
    fn exhaustion_is_capacity_error() {
        let g = graph(&["c0", "c1", "h"], &[(0, 2), (1, 2)]);
        let pool = SamplingPool::new(vec![true; 3], vec![Some(Region::Outside), Some(Region::Outside), None]);
        let control = sample_control(&pool, 2, GeoCombo::Any, 0).unwrap();
        assert!(matches!(derive_sensor(&control, &g, &pool, 0), Err(Error::Capacity(_))));
    }

    #[test]
    fn sensor_constraint_is_respected() {
        // c follows a (inside) and b (outside)
        let g = graph(&["c", "a", "b"], &[(0, 1), (0, 2)]);
        let pool = SamplingPool::new(
            vec![true; 3],
            vec![Some(Region::Outside), Some(Region::Inside), Some(Region::Outside)],
        );
        for seed in 0..10 {
            let pair = draw_pair(&g, &pool, 1, GeoCombo::OutIn, seed).unwrap();
            assert_eq!(pair.sensor.members, vec![NodeId(1)]);
        }
    }

    #[test]
    fn combo_parsing() {
        assert_eq!("out-in".parse::<GeoCombo>().unwrap(), GeoCombo::OutIn);
        assert_eq!("in_out".parse::<GeoCombo>().unwrap(), GeoCombo::InOut);
        assert!("sideways".parse::<GeoCombo>().is_err());
    }

    #[test]
    fn groups_file_round_trip() {
        let g = graph(&["c0", "c1", "h0", "h1"], &[(0, 2), (1, 3)]);
        let pool = SamplingPool::new(
            vec![true; 4],
            vec![Some(Region::Outside), Some(Region::Outside), None, None],
        );
        let pair = draw_pair(&g, &pool, 2, GeoCombo::Any, 5).unwrap();
        let mut buf = Vec::new();
        write_groups(&mut buf, &g, &[&pair.control, &pair.sensor]).unwrap();
        assert_eq!(read_groups(buf.as_slice(), &g).unwrap(), pair);
    }
}
