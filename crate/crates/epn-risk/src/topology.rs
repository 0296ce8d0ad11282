//! Post-damage network topology: surviving buses and lines, electrical-island
//! detection, island viability, and slack designation.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::fragility::DamageRealization;
use crate::model::{ComponentClass, ComponentId, ComponentSet, PowerNetworkModel};

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("damage realization covers {got} components, network has {expected}")]
    DamageMismatch { got: usize, expected: usize },
    #[error("island has no operational generator")]
    NoOperationalGenerator,
}

/// Surviving buses and lines after applying a damage realization.
#[derive(Debug, Clone)]
pub struct TopologyState {
    /// Sorted ids of buses that remain operational.
    pub surviving_buses: Vec<u32>,
    /// Surviving line ids with their residual capacity ratio (always > 0).
    pub surviving_lines: Vec<(u32, f64)>,
    /// Adjacency over surviving buses, id-keyed; symmetric by construction.
    adjacency: BTreeMap<u32, Vec<u32>>,
}

impl TopologyState {
    pub fn neighbors(&self, bus: u32) -> &[u32] {
        self.adjacency.get(&bus).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn line_alpha(&self, line_id: u32) -> Option<f64> {
        self.surviving_lines.iter().find(|(id, _)| *id == line_id).map(|(_, a)| *a)
    }
}

/// A connected post-damage subnetwork with its attached equipment.
#[derive(Debug, Clone, Serialize)]
pub struct Island {
    /// Sorted bus ids.
    pub buses: Vec<u32>,
    /// Generators on island buses, with residual capacity ratios.
    pub generators: Vec<(u32, f64)>,
    /// Loads on island buses, with residual demand ratios.
    pub loads: Vec<(u32, f64)>,
    /// Surviving lines with both endpoints on the island, with line ratios.
    pub lines: Vec<(u32, f64)>,
    /// Angle-reference bus, set once the island passes viability.
    pub slack_bus: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IslandPartition {
    pub islands: Vec<Island>,
}

/// Apply a damage realization to the grid. A bus survives only at full
/// functionality (the bus mapping is binary); a line survives when both of
/// its terminal buses survive and its own ratio is positive. Lines without a
/// substation keep ratio 1; a substation derates or severs its host line.
pub fn build_topology(
    network: &PowerNetworkModel,
    components: &ComponentSet,
    damage: &DamageRealization,
) -> Result<TopologyState, TopologyError> {
    if damage.len() != components.len() {
        return Err(TopologyError::DamageMismatch {
            got: damage.len(),
            expected: components.len(),
        });
    }
    let alpha_of = |id: ComponentId| -> f64 {
        components.index_of(id).map(|i| damage.alpha[i]).unwrap_or(1.0)
    };
    let mut surviving_buses: Vec<u32> = network
        .buses
        .iter()
        .filter(|b| alpha_of(ComponentId::new(ComponentClass::Bus, b.id)) >= 1.0)
        .map(|b| b.id)
        .collect();
    surviving_buses.sort_unstable();
    let bus_alive = |id: u32| surviving_buses.binary_search(&id).is_ok();

    let mut surviving_lines = Vec::new();
    let mut adjacency: BTreeMap<u32, Vec<u32>> =
        surviving_buses.iter().map(|&b| (b, Vec::new())).collect();
    for line in &network.lines {
        if !bus_alive(line.from_bus) || !bus_alive(line.to_bus) {
            continue;
        }
        let alpha = match line.substation {
            Some(sub) => alpha_of(ComponentId::new(ComponentClass::Substation, sub)),
            None => 1.0,
        };
        if alpha > 0.0 {
            surviving_lines.push((line.id, alpha));
            adjacency.get_mut(&line.from_bus).unwrap().push(line.to_bus);
            adjacency.get_mut(&line.to_bus).unwrap().push(line.from_bus);
        }
    }
    for neighbors in adjacency.values_mut() {
        neighbors.sort_unstable();
        neighbors.dedup();
    }
    Ok(TopologyState { surviving_buses, surviving_lines, adjacency })
}

/// Partition the surviving grid into connected components by breadth-first
/// traversal. Islands are ordered by their smallest bus id; bus lists are
/// sorted, so the partition is deterministic.
pub fn find_islands(
    network: &PowerNetworkModel,
    components: &ComponentSet,
    damage: &DamageRealization,
    topology: &TopologyState,
) -> IslandPartition {
    let mut visited: BTreeMap<u32, bool> =
        topology.surviving_buses.iter().map(|&b| (b, false)).collect();
    let mut islands = Vec::new();
    for &start in &topology.surviving_buses {
        if visited[&start] {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([start]);
        visited.insert(start, true);
        let mut buses = Vec::new();
        while let Some(bus) = queue.pop_front() {
            buses.push(bus);
            for &next in topology.neighbors(bus) {
                if !visited[&next] {
                    visited.insert(next, true);
                    queue.push_back(next);
                }
            }
        }
        buses.sort_unstable();
        islands.push(collect_island(buses, network, components, damage, topology));
    }
    IslandPartition { islands }
}

fn collect_island(
    buses: Vec<u32>,
    network: &PowerNetworkModel,
    components: &ComponentSet,
    damage: &DamageRealization,
    topology: &TopologyState,
) -> Island {
    let on_island = |bus: u32| buses.binary_search(&bus).is_ok();
    let alpha_of = |id: ComponentId| -> f64 {
        components.index_of(id).map(|i| damage.alpha[i]).unwrap_or(1.0)
    };
    let generators = network
        .generators
        .iter()
        .filter(|g| on_island(g.bus))
        .map(|g| (g.id, alpha_of(ComponentId::new(ComponentClass::Generator, g.id))))
        .collect();
    let loads = network
        .loads
        .iter()
        .filter(|l| on_island(l.bus))
        .map(|l| (l.id, alpha_of(ComponentId::new(ComponentClass::Load, l.id))))
        .collect();
    let lines = topology
        .surviving_lines
        .iter()
        .filter(|(id, _)| {
            let line = network.line(*id).expect("validated network");
            on_island(line.from_bus) && on_island(line.to_bus)
        })
        .copied()
        .collect();
    Island { buses, generators, loads, lines, slack_bus: None }
}

/// An island is worth dispatching only if it holds at least one operational
/// generator and at least one load with positive effective demand.
pub fn island_viability(
    island: &Island,
    network: &PowerNetworkModel,
) -> bool {
    let has_generation = island.generators.iter().any(|&(_, alpha)| alpha > 0.0);
    let has_demand = island.loads.iter().any(|&(id, alpha)| {
        let demand = network.loads.iter().find(|l| l.id == id).map(|l| l.demand_mw).unwrap_or(0.0);
        alpha * demand > 0.0
    });
    has_generation && has_demand
}

/// Pick the angle-reference bus: the generator-connected bus with the largest
/// total derated capacity, ties broken by the smallest bus id.
pub fn designate_slack(
    island: &Island,
    network: &PowerNetworkModel,
) -> Result<u32, TopologyError> {
    let mut capacity: BTreeMap<u32, f64> = BTreeMap::new();
    for &(gen_id, alpha) in &island.generators {
        if alpha > 0.0 {
            let gen = network.generators.iter().find(|g| g.id == gen_id).expect("island gen");
            *capacity.entry(gen.bus).or_insert(0.0) += alpha * gen.pmax_mw;
        }
    }
    capacity
        .into_iter()
        // BTreeMap iterates ascending by bus id, so strict improvement keeps
        // the smallest id among ties.
        .fold(None::<(u32, f64)>, |best, (bus, cap)| match best {
            Some((_, best_cap)) if cap <= best_cap => best,
            _ => Some((bus, cap)),
        })
        .map(|(bus, _)| bus)
        .ok_or(TopologyError::NoOperationalGenerator)
}
