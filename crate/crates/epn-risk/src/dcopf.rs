//! Per-island DC optimal power flow.
//!
//! Islands are dispatched independently: angles are eliminated through the
//! reduced susceptance matrix, leaving a linear program over generator
//! outputs with one aggregate balance row and two flow-limit rows per line.
//! Infeasible islands shed their smallest effective load and retry.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::CholeskyFactor;
use crate::lp::{Constraint, LpOutcome, LpProblem, Relation};
use crate::model::PowerNetworkModel;
use crate::topology::Island;

#[derive(Debug, Error)]
pub enum DcopfError {
    #[error("island susceptance system is singular (island of {n_bus} buses not connected?)")]
    SingularSusceptance { n_bus: usize },
    #[error("linear program failed: {0}")]
    Solver(#[from] crate::lp::LpError),
    #[error("island references unknown {kind} {id}")]
    UnknownElement { kind: &'static str, id: u32 },
}

/// Dispatch-ready island data, in per-unit on the system base.
#[derive(Debug, Clone)]
pub struct IslandCase {
    pub base_mva: f64,
    /// Sorted bus ids of the island.
    pub bus_ids: Vec<u32>,
    pub slack_bus: u32,
    pub lines: Vec<CaseLine>,
    pub generators: Vec<CaseGen>,
    pub loads: Vec<CaseLoad>,
}

#[derive(Debug, Clone)]
pub struct CaseLine {
    pub id: u32,
    pub from: usize,
    pub to: usize,
    /// 1 / x_pu.
    pub susceptance: f64,
    /// Derated limit, per-unit.
    pub limit_pu: f64,
}

#[derive(Debug, Clone)]
pub struct CaseGen {
    pub id: u32,
    pub bus: usize,
    pub min_pu: f64,
    pub max_pu: f64,
    pub cost_per_mwh: f64,
}

#[derive(Debug, Clone)]
pub struct CaseLoad {
    pub id: u32,
    pub bus: usize,
    /// Effective (damage-derated) demand, per-unit.
    pub demand_pu: f64,
}

/// Outcome of dispatching one island.
#[derive(Debug, Clone, Serialize)]
pub struct DispatchResult {
    pub converged: bool,
    /// Generator outputs (id, MW).
    pub pg_mw: Vec<(u32, f64)>,
    /// Bus voltage angles (id, rad), slack pinned to zero.
    pub angles_rad: Vec<(u32, f64)>,
    /// Line flows (id, MW), positive from -> to.
    pub flows_mw: Vec<(u32, f64)>,
    /// Served demand per load (id, MW): the effective demand, or zero if shed.
    pub served_mw: Vec<(u32, f64)>,
    /// Loads shed, in shedding order.
    pub shed_load_ids: Vec<u32>,
    /// Generation cost of the dispatch, currency per hour.
    pub objective_cost: f64,
}

impl DispatchResult {
    pub fn total_served_mw(&self) -> f64 {
        self.served_mw.iter().map(|(_, mw)| mw).sum()
    }

    fn failed(case: &IslandCase) -> DispatchResult {
        DispatchResult {
            converged: false,
            pg_mw: case.generators.iter().map(|g| (g.id, 0.0)).collect(),
            angles_rad: Vec::new(),
            flows_mw: Vec::new(),
            served_mw: case.loads.iter().map(|l| (l.id, 0.0)).collect(),
            shed_load_ids: Vec::new(),
            objective_cost: 0.0,
        }
    }
}

/// Build the per-unit dispatch case for a viable island. Damage deratings
/// arrive through the island's per-element alpha ratios.
pub fn assemble_case(
    island: &Island,
    network: &PowerNetworkModel,
) -> Result<IslandCase, DcopfError> {
    let bus_ids = island.buses.clone();
    let bus_index = |id: u32| bus_ids.binary_search(&id).ok();
    let base = network.base_mva;

    let mut lines = Vec::with_capacity(island.lines.len());
    for &(line_id, alpha) in &island.lines {
        let line = network
            .line(line_id)
            .ok_or(DcopfError::UnknownElement { kind: "line", id: line_id })?;
        let from = bus_index(line.from_bus)
            .ok_or(DcopfError::UnknownElement { kind: "bus", id: line.from_bus })?;
        let to = bus_index(line.to_bus)
            .ok_or(DcopfError::UnknownElement { kind: "bus", id: line.to_bus })?;
        lines.push(CaseLine {
            id: line_id,
            from,
            to,
            susceptance: 1.0 / line.reactance_pu,
            limit_pu: alpha * line.rate_mw / base,
        });
    }
    let mut generators = Vec::with_capacity(island.generators.len());
    for &(gen_id, alpha) in &island.generators {
        let gen = network
            .generators
            .iter()
            .find(|g| g.id == gen_id)
            .ok_or(DcopfError::UnknownElement { kind: "generator", id: gen_id })?;
        let bus = bus_index(gen.bus)
            .ok_or(DcopfError::UnknownElement { kind: "bus", id: gen.bus })?;
        generators.push(CaseGen {
            id: gen_id,
            bus,
            min_pu: alpha * gen.pmin_mw / base,
            max_pu: alpha * gen.pmax_mw / base,
            cost_per_mwh: gen.cost_per_mwh,
        });
    }
    let mut loads = Vec::with_capacity(island.loads.len());
    for &(load_id, alpha) in &island.loads {
        let load = network
            .loads
            .iter()
            .find(|l| l.id == load_id)
            .ok_or(DcopfError::UnknownElement { kind: "load", id: load_id })?;
        let bus = bus_index(load.bus)
            .ok_or(DcopfError::UnknownElement { kind: "bus", id: load.bus })?;
        loads.push(CaseLoad { id: load_id, bus, demand_pu: alpha * load.demand_mw / base });
    }
    let slack_bus = island.slack_bus.unwrap_or_else(|| bus_ids[0]);
    Ok(IslandCase { base_mva: base, bus_ids, slack_bus, lines, generators, loads })
}

/// Factored reduced susceptance matrix (slack row/column removed) plus the
/// per-line sensitivity of flows to nodal injections.
struct Reduction {
    /// Non-slack bus positions, in bus order.
    reduced_of_bus: Vec<Option<usize>>,
    factor: Option<CholeskyFactor>,
    /// ptdf[l][r]: flow on line l per unit injection at reduced bus r.
    ptdf: Vec<Vec<f64>>,
}

fn reduce(case: &IslandCase) -> Result<Reduction, DcopfError> {
    let n = case.bus_ids.len();
    let slack = case
        .bus_ids
        .binary_search(&case.slack_bus)
        .map_err(|_| DcopfError::UnknownElement { kind: "slack bus", id: case.slack_bus })?;
    let mut reduced_of_bus = vec![None; n];
    let mut next = 0;
    for b in 0..n {
        if b != slack {
            reduced_of_bus[b] = Some(next);
            next += 1;
        }
    }
    let nr = n - 1;
    if nr == 0 {
        return Ok(Reduction { reduced_of_bus, factor: None, ptdf: vec![vec![]; case.lines.len()] });
    }
    let mut b_red = vec![0.0; nr * nr];
    for line in &case.lines {
        let s = line.susceptance;
        let (fi, ti) = (reduced_of_bus[line.from], reduced_of_bus[line.to]);
        if let Some(f) = fi {
            b_red[f * nr + f] += s;
        }
        if let Some(t) = ti {
            b_red[t * nr + t] += s;
        }
        if let (Some(f), Some(t)) = (fi, ti) {
            b_red[f * nr + t] -= s;
            b_red[t * nr + f] -= s;
        }
    }
    let factor = CholeskyFactor::new(&b_red, nr)
        .map_err(|_| DcopfError::SingularSusceptance { n_bus: n })?;
    let mut ptdf = Vec::with_capacity(case.lines.len());
    for line in &case.lines {
        let mut rhs = vec![0.0; nr];
        if let Some(f) = reduced_of_bus[line.from] {
            rhs[f] += line.susceptance;
        }
        if let Some(t) = reduced_of_bus[line.to] {
            rhs[t] -= line.susceptance;
        }
        // row = b_l (e_from - e_to)^T B_red^-1
        factor.solve_in_place(&mut rhs);
        ptdf.push(rhs);
    }
    Ok(Reduction { reduced_of_bus, factor: Some(factor), ptdf })
}

/// Solve the island dispatch LP. Returns `converged = false` when no feasible
/// dispatch exists for the island as given (the caller may then shed load).
pub fn solve_island(case: &IslandCase) -> Result<DispatchResult, DcopfError> {
    let reduction = reduce(case)?;
    let ng = case.generators.len();
    let total_demand: f64 = case.loads.iter().map(|l| l.demand_pu).sum();

    // Fixed (load) part of the reduced injection vector.
    let nr = case.bus_ids.len() - 1;
    let mut load_inj = vec![0.0; nr];
    for load in &case.loads {
        if let Some(r) = reduction.reduced_of_bus[load.bus] {
            load_inj[r] -= load.demand_pu;
        }
    }

    let mut constraints = Vec::with_capacity(1 + 2 * case.lines.len());
    constraints.push(Constraint {
        coeffs: vec![1.0; ng],
        relation: Relation::Eq,
        rhs: total_demand,
    });
    for (l, line) in case.lines.iter().enumerate() {
        // flow_l = sum_g ptdf[l][bus(g)] pg_g + offset_l, |flow_l| <= limit
        let row = &reduction.ptdf[l];
        let offset: f64 = row.iter().zip(&load_inj).map(|(p, inj)| p * inj).sum();
        let coeffs: Vec<f64> = case
            .generators
            .iter()
            .map(|g| reduction.reduced_of_bus[g.bus].map(|r| row[r]).unwrap_or(0.0))
            .collect();
        constraints.push(Constraint {
            coeffs: coeffs.clone(),
            relation: Relation::Le,
            rhs: line.limit_pu - offset,
        });
        constraints.push(Constraint {
            coeffs: coeffs.iter().map(|c| -c).collect(),
            relation: Relation::Le,
            rhs: line.limit_pu + offset,
        });
    }
    let lp = LpProblem {
        // Cost in currency/h per unit of per-unit power.
        objective: case.generators.iter().map(|g| g.cost_per_mwh * case.base_mva).collect(),
        lower: case.generators.iter().map(|g| g.min_pu).collect(),
        upper: case.generators.iter().map(|g| g.max_pu).collect(),
        constraints,
    };
    let pg_pu = match lp.solve()? {
        LpOutcome::Optimal { x, .. } => x,
        LpOutcome::Infeasible => return Ok(DispatchResult::failed(case)),
    };

    // Recover angles and flows from the dispatched injections.
    let mut inj = load_inj;
    for (g, gen) in case.generators.iter().enumerate() {
        if let Some(r) = reduction.reduced_of_bus[gen.bus] {
            inj[r] += pg_pu[g];
        }
    }
    let mut theta_red = inj;
    if let Some(factor) = &reduction.factor {
        factor.solve_in_place(&mut theta_red);
    }
    let theta_of = |bus: usize| reduction.reduced_of_bus[bus].map(|r| theta_red[r]).unwrap_or(0.0);
    let angles_rad: Vec<(u32, f64)> =
        case.bus_ids.iter().enumerate().map(|(b, &id)| (id, theta_of(b))).collect();
    let flows_mw: Vec<(u32, f64)> = case
        .lines
        .iter()
        .map(|l| (l.id, l.susceptance * (theta_of(l.from) - theta_of(l.to)) * case.base_mva))
        .collect();
    let pg_mw: Vec<(u32, f64)> = case
        .generators
        .iter()
        .zip(&pg_pu)
        .map(|(g, &p)| (g.id, p * case.base_mva))
        .collect();
    let objective_cost: f64 = case
        .generators
        .iter()
        .zip(&pg_pu)
        .map(|(g, &p)| g.cost_per_mwh * p * case.base_mva)
        .sum();
    Ok(DispatchResult {
        converged: true,
        pg_mw,
        angles_rad,
        flows_mw,
        served_mw: case.loads.iter().map(|l| (l.id, l.demand_pu * case.base_mva)).collect(),
        shed_load_ids: Vec::new(),
        objective_cost,
    })
}

/// Dispatch with the emergency shedding loop: while the island is infeasible,
/// drop the load with the smallest positive effective demand (ties to the
/// smallest id) and retry, up to `retry_limit` sheds.
pub fn solve_with_shedding(
    case: &IslandCase,
    retry_limit: usize,
) -> Result<DispatchResult, DcopfError> {
    let mut working = case.clone();
    let mut shed: Vec<u32> = Vec::new();
    loop {
        let mut result = solve_island(&working)?;
        if result.converged {
            // Report every original load: shed ones serve zero.
            let mut served = result.served_mw;
            for &id in &shed {
                served.push((id, 0.0));
            }
            served.sort_by_key(|&(id, _)| id);
            result.served_mw = served;
            result.shed_load_ids = shed;
            return Ok(result);
        }
        if shed.len() >= retry_limit {
            let mut failed = DispatchResult::failed(case);
            failed.shed_load_ids = shed;
            return Ok(failed);
        }
        let candidate = working
            .loads
            .iter()
            .filter(|l| l.demand_pu > 0.0)
            .min_by(|a, b| {
                a.demand_pu.partial_cmp(&b.demand_pu).unwrap().then(a.id.cmp(&b.id))
            })
            .map(|l| l.id);
        let Some(victim) = candidate else {
            let mut failed = DispatchResult::failed(case);
            failed.shed_load_ids = shed;
            return Ok(failed);
        };
        shed.push(victim);
        working.loads.retain(|l| l.id != victim);
    }
}

/// System functionality for one damage scenario: the served load summed over
/// islands (non-viable islands contribute nothing).
pub fn system_functionality(results: &[DispatchResult]) -> f64 {
    results.iter().map(DispatchResult::total_served_mw).sum()
}

/// Check the dispatch invariants of a converged result against its case:
/// nodal balance, flow limits, and generator bounds. Returns the first
/// violation as a message; used by tests and the Monte Carlo self-checks.
pub fn verify_dispatch(case: &IslandCase, result: &DispatchResult) -> Result<(), String> {
    if !result.converged {
        return Ok(());
    }
    let base = case.base_mva;
    let tol_mw = 1e-6 * base;
    let theta: std::collections::BTreeMap<u32, f64> = result.angles_rad.iter().copied().collect();
    let pg: std::collections::BTreeMap<u32, f64> = result.pg_mw.iter().copied().collect();
    let served: std::collections::BTreeMap<u32, f64> = result.served_mw.iter().copied().collect();

    if let Some(&slack_theta) = theta.get(&case.slack_bus) {
        if slack_theta.abs() > 1e-12 {
            return Err(format!("slack angle is {slack_theta}, not zero"));
        }
    }
    for (g, gen) in case.generators.iter().enumerate() {
        let p = pg.get(&gen.id).copied().unwrap_or(0.0);
        let (lo, hi) = (gen.min_pu * base, gen.max_pu * base);
        if p < lo - tol_mw || p > hi + tol_mw {
            return Err(format!("generator {} at {p} MW outside [{lo}, {hi}]", case.generators[g].id));
        }
    }
    for (l, line) in case.lines.iter().enumerate() {
        let flow = result.flows_mw[l].1;
        let cap = line.limit_pu * base;
        if flow.abs() > cap + tol_mw {
            return Err(format!("line {} flow {flow} MW exceeds {cap}", line.id));
        }
    }
    // Nodal balance: injections minus incident flows at every island bus.
    for (b, &bus_id) in case.bus_ids.iter().enumerate() {
        let mut balance = 0.0;
        for gen in &case.generators {
            if gen.bus == b {
                balance += pg.get(&gen.id).copied().unwrap_or(0.0);
            }
        }
        for load in &case.loads {
            if load.bus == b {
                // Shed loads serve zero and no longer enter the balance.
                balance -= served.get(&load.id).copied().unwrap_or(0.0);
            }
        }
        for (l, line) in case.lines.iter().enumerate() {
            let flow = result.flows_mw[l].1;
            if line.from == b {
                balance -= flow;
            }
            if line.to == b {
                balance += flow;
            }
        }
        if balance.abs() > tol_mw {
            return Err(format!("bus {bus_id} balance residual {balance} MW"));
        }
    }
    Ok(())
}
