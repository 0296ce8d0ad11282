//! Static description of the power network and the component index shared by
//! the hazard, fragility, and dispatch stages.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Damageable component classes, in candidate-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentClass {
    Bus,
    Generator,
    Load,
    Substation,
}

impl ComponentClass {
    pub const ALL: [ComponentClass; 4] = [
        ComponentClass::Bus,
        ComponentClass::Generator,
        ComponentClass::Load,
        ComponentClass::Substation,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ComponentClass::Bus => "bus",
            ComponentClass::Generator => "gen",
            ComponentClass::Load => "load",
            ComponentClass::Substation => "sub",
        }
    }
}

/// Identifier of a damageable component: class plus the id within its class.
/// Serializes as the compact string form (`bus9`, `gen13`, `load13`, `sub5`)
/// so it can key JSON maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId {
    pub class: ComponentClass,
    pub id: u32,
}

impl Serialize for ComponentId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ComponentId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl ComponentId {
    pub fn new(class: ComponentClass, id: u32) -> Self {
        ComponentId { class, id }
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.class.label(), self.id)
    }
}

impl FromStr for ComponentId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let split = s.find(|c: char| c.is_ascii_digit()).ok_or_else(|| format!("no id in '{s}'"))?;
        let (prefix, digits) = s.split_at(split);
        let class = match prefix {
            "bus" => ComponentClass::Bus,
            "gen" => ComponentClass::Generator,
            "load" => ComponentClass::Load,
            "sub" => ComponentClass::Substation,
            other => return Err(format!("unknown component class '{other}'")),
        };
        let id: u32 = digits.parse().map_err(|e| format!("bad id in '{s}': {e}"))?;
        Ok(ComponentId { class, id })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    pub x_km: f64,
    pub y_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: u32,
    pub from_bus: u32,
    pub to_bus: u32,
    pub reactance_pu: f64,
    pub rate_mw: f64,
    /// Substation hosted on this line, if any.
    pub substation: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: u32,
    pub bus: u32,
    pub pmin_mw: f64,
    pub pmax_mw: f64,
    pub cost_per_mwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub id: u32,
    pub bus: u32,
    pub demand_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substation {
    pub id: u32,
    pub line: u32,
}

/// Validated static grid description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerNetworkModel {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub loads: Vec<Load>,
    pub substations: Vec<Substation>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("duplicate {class} id {id}")]
    DuplicateId { class: &'static str, id: u32 },
    #[error("{class} {id} references missing bus {bus}")]
    MissingBus { class: &'static str, id: u32, bus: u32 },
    #[error("substation {id} references missing line {line}")]
    MissingLine { id: u32, line: u32 },
    #[error("line {line} is claimed by substations {first} and {second}")]
    LineDoubleBooked { line: u32, first: u32, second: u32 },
    #[error("substation {sub} and line {line} disagree on their pairing")]
    SubstationLineMismatch { sub: u32, line: u32 },
    #[error("{class} {id}: {field} must be positive (got {value})")]
    NonPositive { class: &'static str, id: u32, field: &'static str, value: f64 },
    #[error("generator {id}: bounds must satisfy 0 <= pmin <= pmax (got {pmin}..{pmax})")]
    BadGeneratorBounds { id: u32, pmin: f64, pmax: f64 },
    #[error("load {id}: demand_mw must be non-negative (got {value})")]
    NegativeDemand { id: u32, value: f64 },
    #[error("base_mva must be positive (got {0})")]
    BadBase(f64),
    #[error("line {id} connects bus {bus} to itself")]
    SelfLoop { id: u32, bus: u32 },
}

impl PowerNetworkModel {
    /// Check every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.base_mva > 0.0) {
            return Err(ValidationError::BadBase(self.base_mva));
        }
        let bus_ids = unique_ids("bus", self.buses.iter().map(|b| b.id))?;
        unique_ids("line", self.lines.iter().map(|l| l.id))?;
        unique_ids("generator", self.generators.iter().map(|g| g.id))?;
        unique_ids("load", self.loads.iter().map(|l| l.id))?;
        unique_ids("substation", self.substations.iter().map(|s| s.id))?;

        for line in &self.lines {
            for end in [line.from_bus, line.to_bus] {
                if !bus_ids.contains(&end) {
                    return Err(ValidationError::MissingBus {
                        class: "line",
                        id: line.id,
                        bus: end,
                    });
                }
            }
            if line.from_bus == line.to_bus {
                return Err(ValidationError::SelfLoop { id: line.id, bus: line.from_bus });
            }
            if !(line.reactance_pu > 0.0) {
                return Err(ValidationError::NonPositive {
                    class: "line",
                    id: line.id,
                    field: "reactance_pu",
                    value: line.reactance_pu,
                });
            }
            if !(line.rate_mw > 0.0) {
                return Err(ValidationError::NonPositive {
                    class: "line",
                    id: line.id,
                    field: "rate_mw",
                    value: line.rate_mw,
                });
            }
        }
        for gen in &self.generators {
            if !bus_ids.contains(&gen.bus) {
                return Err(ValidationError::MissingBus {
                    class: "generator",
                    id: gen.id,
                    bus: gen.bus,
                });
            }
            if !(0.0 <= gen.pmin_mw && gen.pmin_mw <= gen.pmax_mw) {
                return Err(ValidationError::BadGeneratorBounds {
                    id: gen.id,
                    pmin: gen.pmin_mw,
                    pmax: gen.pmax_mw,
                });
            }
        }
        for load in &self.loads {
            if !bus_ids.contains(&load.bus) {
                return Err(ValidationError::MissingBus {
                    class: "load",
                    id: load.id,
                    bus: load.bus,
                });
            }
            if !(load.demand_mw >= 0.0) {
                return Err(ValidationError::NegativeDemand { id: load.id, value: load.demand_mw });
            }
        }
        // Each substation maps to exactly one line, the pairing is mutual, and
        // no line hosts two substations.
        let mut claimed: BTreeMap<u32, u32> = BTreeMap::new();
        for sub in &self.substations {
            let line = self
                .lines
                .iter()
                .find(|l| l.id == sub.line)
                .ok_or(ValidationError::MissingLine { id: sub.id, line: sub.line })?;
            if line.substation != Some(sub.id) {
                return Err(ValidationError::SubstationLineMismatch { sub: sub.id, line: sub.line });
            }
            if let Some(prev) = claimed.insert(sub.line, sub.id) {
                return Err(ValidationError::LineDoubleBooked {
                    line: sub.line,
                    first: prev,
                    second: sub.id,
                });
            }
        }
        for line in &self.lines {
            if let Some(sub_id) = line.substation {
                if claimed.get(&line.id) != Some(&sub_id) {
                    return Err(ValidationError::SubstationLineMismatch {
                        sub: sub_id,
                        line: line.id,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn total_demand_mw(&self) -> f64 {
        self.loads.iter().map(|l| l.demand_mw).sum()
    }

    pub fn bus(&self, id: u32) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn line(&self, id: u32) -> Option<&Line> {
        self.lines.iter().find(|l| l.id == id)
    }

    /// Flattened index over every damageable component, in candidate order
    /// (buses, generators, loads, substations). Hazard fields, damage vectors,
    /// and retrofit decision vectors all share this ordering.
    pub fn components(&self) -> ComponentSet {
        let mut entries = Vec::new();
        let mut sites = Vec::new();
        for bus in &self.buses {
            entries.push(ComponentId::new(ComponentClass::Bus, bus.id));
            sites.push((bus.x_km, bus.y_km));
        }
        for gen in &self.generators {
            let bus = self.bus(gen.bus).expect("validated network");
            entries.push(ComponentId::new(ComponentClass::Generator, gen.id));
            sites.push((bus.x_km, bus.y_km));
        }
        for load in &self.loads {
            let bus = self.bus(load.bus).expect("validated network");
            entries.push(ComponentId::new(ComponentClass::Load, load.id));
            sites.push((bus.x_km, bus.y_km));
        }
        for sub in &self.substations {
            // A substation sits at the midpoint of its line's endpoints.
            let line = self.line(sub.line).expect("validated network");
            let a = self.bus(line.from_bus).expect("validated network");
            let b = self.bus(line.to_bus).expect("validated network");
            entries.push(ComponentId::new(ComponentClass::Substation, sub.id));
            sites.push(((a.x_km + b.x_km) / 2.0, (a.y_km + b.y_km) / 2.0));
        }
        let index: BTreeMap<ComponentId, usize> =
            entries.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        ComponentSet { entries, sites, index }
    }
}

/// Ordered view over the network's damageable components and their hazard
/// site coordinates.
#[derive(Debug, Clone)]
pub struct ComponentSet {
    entries: Vec<ComponentId>,
    sites: Vec<(f64, f64)>,
    index: BTreeMap<ComponentId, usize>,
}

impl ComponentSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> &[ComponentId] {
        &self.entries
    }

    pub fn sites(&self) -> &[(f64, f64)] {
        &self.sites
    }

    pub fn index_of(&self, id: ComponentId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn id(&self, index: usize) -> ComponentId {
        self.entries[index]
    }
}

fn unique_ids(
    class: &'static str,
    ids: impl Iterator<Item = u32>,
) -> Result<BTreeSet<u32>, ValidationError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ValidationError::DuplicateId { class, id });
        }
    }
    Ok(seen)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bus() -> PowerNetworkModel {
        PowerNetworkModel {
            base_mva: 100.0,
            buses: vec![
                Bus { id: 1, x_km: 0.0, y_km: 0.0 },
                Bus { id: 2, x_km: 10.0, y_km: 0.0 },
            ],
            lines: vec![Line {
                id: 1,
                from_bus: 1,
                to_bus: 2,
                reactance_pu: 0.1,
                rate_mw: 100.0,
                substation: None,
            }],
            generators: vec![Generator {
                id: 1,
                bus: 1,
                pmin_mw: 0.0,
                pmax_mw: 50.0,
                cost_per_mwh: 10.0,
            }],
            loads: vec![Load { id: 2, bus: 2, demand_mw: 40.0 }],
            substations: vec![],
        }
    }

    #[test]
    fn valid_network_passes() {
        assert_eq!(two_bus().validate(), Ok(()));
        assert_eq!(two_bus().total_demand_mw(), 40.0);
    }

    #[test]
    fn missing_bus_is_named() {
        let mut net = two_bus();
        net.lines[0].to_bus = 99;
        let err = net.validate().unwrap_err();
        assert_eq!(err, ValidationError::MissingBus { class: "line", id: 1, bus: 99 });
        assert!(err.to_string().contains("99"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut net = two_bus();
        net.buses.push(Bus { id: 1, x_km: 1.0, y_km: 1.0 });
        assert_eq!(net.validate().unwrap_err(), ValidationError::DuplicateId { class: "bus", id: 1 });
    }

    #[test]
    fn substation_pairing_must_be_mutual() {
        let mut net = two_bus();
        net.substations.push(Substation { id: 1, line: 1 });
        assert!(matches!(
            net.validate().unwrap_err(),
            ValidationError::SubstationLineMismatch { sub: 1, line: 1 }
        ));
        net.lines[0].substation = Some(1);
        assert_eq!(net.validate(), Ok(()));
    }

    #[test]
    fn component_ordering_and_sites() {
        let mut net = two_bus();
        net.lines[0].substation = Some(1);
        net.substations.push(Substation { id: 1, line: 1 });
        let comps = net.components();
        let ids: Vec<String> = comps.ids().iter().map(|c| c.to_string()).collect();
        assert_eq!(ids, vec!["bus1", "bus2", "gen1", "load2", "sub1"]);
        // Substation halfway along line 1-2.
        assert_eq!(comps.sites()[4], (5.0, 0.0));
        assert_eq!(comps.index_of(ComponentId::new(ComponentClass::Load, 2)), Some(3));
    }

    #[test]
    fn component_id_round_trips_via_string() {
        let id = ComponentId::new(ComponentClass::Substation, 5);
        assert_eq!(id.to_string(), "sub5");
        assert_eq!("sub5".parse::<ComponentId>().unwrap(), id);
        assert!("volt5".parse::<ComponentId>().is_err());
    }
}
