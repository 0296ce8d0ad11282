//! File ingestion and result emission.
//!
//! Input schemas (JSON):
//! - `network.json`: base_mva, buses (id, x_km, y_km), lines (id, from, to,
//!   x_pu, rate_mw, optional substation), generators, loads. Substations are
//!   declared on their host line.
//! - `hazard.json`: fault endpoints, Gutenberg-Richter a/b, magnitude grid,
//!   vs30, mechanism, correlation cap, optional GMPE coefficient overrides.
//! - `fragility.json`: baseline and retrofitted per-class curve parameters.
//! - `costs.json`: per-class retrofit costs, optional budget and overrides.
//!
//! Outputs are deterministic: identical inputs and seed produce byte-identical
//! files. Every file carries the master seed in its header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fragility::{ClassCurves, FragilityCurveSet, FragilityTable};
use crate::hazard::{FaultMechanism, GmpeCoefficients, HazardConfig, MagnitudeGrid};
use crate::model::{
    Bus, ComponentClass, Generator, Line, Load, PowerNetworkModel, Substation,
};
use crate::retrofit::{CostTable, GaOutcome, SensitivityRecord, TradeoffRow};
use crate::simulation::{MagnitudeStats, RiskResult, ScenarioRecord};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: parse error: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

fn read_to_string(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|source| IoError::Write { path: path.to_path_buf(), source })?;
        }
    }
    fs::write(path, contents).map_err(|source| IoError::Write { path: path.to_path_buf(), source })
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|source| IoError::Parse { path: path.to_path_buf(), source })
}

fn invalid(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Invalid { path: path.to_path_buf(), message: message.into() }
}

// ---------------------------------------------------------------------------
// network.json
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    base_mva: f64,
    buses: Vec<BusDto>,
    lines: Vec<LineDto>,
    generators: Vec<GeneratorDto>,
    loads: Vec<LoadDto>,
}

#[derive(Serialize, Deserialize)]
struct BusDto {
    id: u32,
    x_km: f64,
    y_km: f64,
}

#[derive(Serialize, Deserialize)]
struct LineDto {
    id: u32,
    from: u32,
    to: u32,
    x_pu: f64,
    rate_mw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    substation: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct GeneratorDto {
    id: u32,
    bus: u32,
    pmin_mw: f64,
    pmax_mw: f64,
    cost_per_mwh: f64,
}

#[derive(Serialize, Deserialize)]
struct LoadDto {
    id: u32,
    bus: u32,
    demand_mw: f64,
}

/// Load and validate a network model.
pub fn load_network(path: &Path) -> Result<PowerNetworkModel, IoError> {
    let file: NetworkFile = parse(path, &read_to_string(path)?)?;
    let substations = file
        .lines
        .iter()
        .filter_map(|l| l.substation.map(|id| Substation { id, line: l.id }))
        .collect();
    let network = PowerNetworkModel {
        base_mva: file.base_mva,
        buses: file.buses.into_iter().map(|b| Bus { id: b.id, x_km: b.x_km, y_km: b.y_km }).collect(),
        lines: file
            .lines
            .into_iter()
            .map(|l| Line {
                id: l.id,
                from_bus: l.from,
                to_bus: l.to,
                reactance_pu: l.x_pu,
                rate_mw: l.rate_mw,
                substation: l.substation,
            })
            .collect(),
        generators: file
            .generators
            .into_iter()
            .map(|g| Generator {
                id: g.id,
                bus: g.bus,
                pmin_mw: g.pmin_mw,
                pmax_mw: g.pmax_mw,
                cost_per_mwh: g.cost_per_mwh,
            })
            .collect(),
        loads: file
            .loads
            .into_iter()
            .map(|l| Load { id: l.id, bus: l.bus, demand_mw: l.demand_mw })
            .collect(),
        substations,
    };
    network.validate().map_err(|e| invalid(path, e.to_string()))?;
    Ok(network)
}

pub fn write_network(path: &Path, network: &PowerNetworkModel) -> Result<(), IoError> {
    let file = NetworkFile {
        base_mva: network.base_mva,
        buses: network.buses.iter().map(|b| BusDto { id: b.id, x_km: b.x_km, y_km: b.y_km }).collect(),
        lines: network
            .lines
            .iter()
            .map(|l| LineDto {
                id: l.id,
                from: l.from_bus,
                to: l.to_bus,
                x_pu: l.reactance_pu,
                rate_mw: l.rate_mw,
                substation: l.substation,
            })
            .collect(),
        generators: network
            .generators
            .iter()
            .map(|g| GeneratorDto {
                id: g.id,
                bus: g.bus,
                pmin_mw: g.pmin_mw,
                pmax_mw: g.pmax_mw,
                cost_per_mwh: g.cost_per_mwh,
            })
            .collect(),
        loads: network
            .loads
            .iter()
            .map(|l| LoadDto { id: l.id, bus: l.bus, demand_mw: l.demand_mw })
            .collect(),
    };
    write_file(path, &to_pretty_json(&file))
}

// ---------------------------------------------------------------------------
// hazard.json
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct HazardFile {
    fault: FaultDto,
    gutenberg_richter: GrDto,
    magnitudes: GridDto,
    vs30_mps: f64,
    mechanism: FaultMechanism,
    correlation_cap_km: f64,
    #[serde(default)]
    gmpe: GmpeCoefficients,
}

#[derive(Serialize, Deserialize)]
struct FaultDto {
    p1: [f64; 2],
    p2: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct GrDto {
    a: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct GridDto {
    min: f64,
    max: f64,
    step: f64,
}

pub fn load_hazard(path: &Path) -> Result<HazardConfig, IoError> {
    let file: HazardFile = parse(path, &read_to_string(path)?)?;
    let config = HazardConfig {
        fault_p1: (file.fault.p1[0], file.fault.p1[1]),
        fault_p2: (file.fault.p2[0], file.fault.p2[1]),
        gr_a: file.gutenberg_richter.a,
        gr_b: file.gutenberg_richter.b,
        magnitudes: MagnitudeGrid {
            m_min: file.magnitudes.min,
            m_max: file.magnitudes.max,
            step: file.magnitudes.step,
        },
        vs30_mps: file.vs30_mps,
        mechanism: file.mechanism,
        correlation_cap_km: file.correlation_cap_km,
        gmpe: file.gmpe,
    };
    config.validate().map_err(|e| invalid(path, e))?;
    Ok(config)
}

pub fn write_hazard(path: &Path, config: &HazardConfig) -> Result<(), IoError> {
    let file = HazardFile {
        fault: FaultDto {
            p1: [config.fault_p1.0, config.fault_p1.1],
            p2: [config.fault_p2.0, config.fault_p2.1],
        },
        gutenberg_richter: GrDto { a: config.gr_a, b: config.gr_b },
        magnitudes: GridDto {
            min: config.magnitudes.m_min,
            max: config.magnitudes.m_max,
            step: config.magnitudes.step,
        },
        vs30_mps: config.vs30_mps,
        mechanism: config.mechanism,
        correlation_cap_km: config.correlation_cap_km,
        gmpe: config.gmpe.clone(),
    };
    write_file(path, &to_pretty_json(&file))
}

// ---------------------------------------------------------------------------
// fragility.json
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct FragilityFile {
    baseline: ClassCurvesDto,
    retrofitted: ClassCurvesDto,
}

#[derive(Serialize, Deserialize)]
struct ClassCurvesDto {
    bus: CurveSetDto,
    generator: CurveSetDto,
    load: CurveSetDto,
    substation: CurveSetDto,
}

#[derive(Serialize, Deserialize)]
struct CurveSetDto {
    slight: CurveDto,
    moderate: CurveDto,
    extensive: CurveDto,
    complete: CurveDto,
}

#[derive(Serialize, Deserialize)]
struct CurveDto {
    median_g: f64,
    beta: f64,
}

impl CurveSetDto {
    fn to_curves(&self) -> FragilityCurveSet {
        FragilityCurveSet {
            medians_g: [
                self.slight.median_g,
                self.moderate.median_g,
                self.extensive.median_g,
                self.complete.median_g,
            ],
            betas: [self.slight.beta, self.moderate.beta, self.extensive.beta, self.complete.beta],
        }
    }

    fn from_curves(curves: &FragilityCurveSet) -> CurveSetDto {
        let dto = |k: usize| CurveDto { median_g: curves.medians_g[k], beta: curves.betas[k] };
        CurveSetDto { slight: dto(0), moderate: dto(1), extensive: dto(2), complete: dto(3) }
    }
}

impl ClassCurvesDto {
    fn to_curves(&self) -> ClassCurves {
        ClassCurves {
            bus: self.bus.to_curves(),
            generator: self.generator.to_curves(),
            load: self.load.to_curves(),
            substation: self.substation.to_curves(),
        }
    }

    fn from_curves(curves: &ClassCurves) -> ClassCurvesDto {
        ClassCurvesDto {
            bus: CurveSetDto::from_curves(&curves.bus),
            generator: CurveSetDto::from_curves(&curves.generator),
            load: CurveSetDto::from_curves(&curves.load),
            substation: CurveSetDto::from_curves(&curves.substation),
        }
    }
}

pub fn load_fragility(path: &Path) -> Result<FragilityTable, IoError> {
    let file: FragilityFile = parse(path, &read_to_string(path)?)?;
    let table = FragilityTable {
        baseline: file.baseline.to_curves(),
        retrofitted: file.retrofitted.to_curves(),
        overrides: Default::default(),
    };
    table.validate().map_err(|e| invalid(path, e.to_string()))?;
    Ok(table)
}

pub fn write_fragility(path: &Path, table: &FragilityTable) -> Result<(), IoError> {
    let file = FragilityFile {
        baseline: ClassCurvesDto::from_curves(&table.baseline),
        retrofitted: ClassCurvesDto::from_curves(&table.retrofitted),
    };
    write_file(path, &to_pretty_json(&file))
}

// ---------------------------------------------------------------------------
// costs.json
// ---------------------------------------------------------------------------

pub fn load_costs(path: &Path) -> Result<CostTable, IoError> {
    let costs: CostTable = parse(path, &read_to_string(path)?)?;
    costs.validate().map_err(|e| invalid(path, e))?;
    Ok(costs)
}

pub fn write_costs(path: &Path, costs: &CostTable) -> Result<(), IoError> {
    write_file(path, &to_pretty_json(costs))
}

// ---------------------------------------------------------------------------
// result emission
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RiskFile {
    seed: u64,
    eafl: f64,
    baseline_mw: f64,
    per_magnitude: Vec<RiskRow>,
}

#[derive(Serialize)]
struct RiskRow {
    magnitude: f64,
    rate_per_year: f64,
    mean_norm_functionality: f64,
    ci_halfwidth: f64,
    n_samples: usize,
    contribution: f64,
    converged_by: crate::simulation::ConvergedBy,
}

/// Write `risk.json` and `functionality_by_magnitude.csv`. Errors out before
/// writing anything if the statistics are empty or inconsistent.
pub fn write_assess(
    out_dir: &Path,
    seed: u64,
    baseline_mw: f64,
    stats: &[MagnitudeStats],
    risk: &RiskResult,
) -> Result<Vec<PathBuf>, IoError> {
    if stats.is_empty() || risk.magnitudes.is_empty() {
        return Err(invalid(out_dir, "no magnitude statistics to write"));
    }
    if stats.len() != risk.magnitudes.len() {
        return Err(invalid(out_dir, "statistics and risk grid sizes disagree"));
    }
    let rows: Vec<RiskRow> = stats
        .iter()
        .enumerate()
        .map(|(i, s)| RiskRow {
            magnitude: s.magnitude,
            rate_per_year: risk.rates[i],
            mean_norm_functionality: s.mean_norm,
            ci_halfwidth: s.ci_halfwidth,
            n_samples: s.n_samples,
            contribution: risk.contributions[i],
            converged_by: s.converged_by,
        })
        .collect();
    let risk_path = out_dir.join("risk.json");
    write_file(
        &risk_path,
        &to_pretty_json(&RiskFile { seed, eafl: risk.eafl, baseline_mw, per_magnitude: rows }),
    )?;

    let mut csv = format!("# seed={seed}\n");
    csv.push_str("magnitude,mean_norm_func,ci_lo,ci_hi,n_samples\n");
    for s in stats {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f64(s.magnitude),
            fmt_f64(s.mean_norm),
            fmt_f64(s.mean_norm - s.ci_halfwidth),
            fmt_f64(s.mean_norm + s.ci_halfwidth),
            s.n_samples
        );
    }
    let csv_path = out_dir.join("functionality_by_magnitude.csv");
    write_file(&csv_path, &csv)?;
    Ok(vec![risk_path, csv_path])
}

pub fn write_sensitivity(
    out_dir: &Path,
    seed: u64,
    records: &[SensitivityRecord],
) -> Result<PathBuf, IoError> {
    let mut csv = format!("# seed={seed}\n");
    csv.push_str("component,S_i_up,S_i_down\n");
    for r in records {
        let _ = writeln!(csv, "{},{},{}", r.component, fmt_f64(r.s_up), fmt_f64(r.s_down));
    }
    let path = out_dir.join("sensitivity.csv");
    write_file(&path, &csv)?;
    Ok(path)
}

pub fn write_category_sensitivity(
    out_dir: &Path,
    seed: u64,
    baseline_eafl: f64,
    rows: &[(ComponentClass, f64)],
) -> Result<PathBuf, IoError> {
    let mut csv = format!("# seed={seed}\n");
    csv.push_str("category,eafl\n");
    let _ = writeln!(csv, "baseline,{}", fmt_f64(baseline_eafl));
    for (class, eafl) in rows {
        let _ = writeln!(csv, "{},{}", class.label(), fmt_f64(*eafl));
    }
    let path = out_dir.join("category_sensitivity.csv");
    write_file(&path, &csv)?;
    Ok(path)
}

#[derive(Serialize)]
struct PlanFile<'a> {
    seed: u64,
    budget_musd: f64,
    cost_musd: f64,
    eafl: f64,
    generations_run: usize,
    selected: &'a [crate::model::ComponentId],
}

/// Write `plan.json` and `ga_history.csv`.
pub fn write_plan(
    out_dir: &Path,
    seed: u64,
    budget_musd: f64,
    outcome: &GaOutcome,
) -> Result<Vec<PathBuf>, IoError> {
    let plan_path = out_dir.join("plan.json");
    write_file(
        &plan_path,
        &to_pretty_json(&PlanFile {
            seed,
            budget_musd,
            cost_musd: outcome.plan.cost_musd,
            eafl: outcome.plan.eafl.unwrap_or(f64::NAN),
            generations_run: outcome.generations_run,
            selected: &outcome.plan.selected,
        }),
    )?;
    let mut csv = format!("# seed={seed}\n");
    csv.push_str("generation,best_fitness\n");
    for (g, f) in outcome.history.iter().enumerate() {
        let _ = writeln!(csv, "{g},{}", fmt_f64(*f));
    }
    let history_path = out_dir.join("ga_history.csv");
    write_file(&history_path, &csv)?;
    Ok(vec![plan_path, history_path])
}

pub fn write_tradeoff(out_dir: &Path, seed: u64, rows: &[TradeoffRow]) -> Result<PathBuf, IoError> {
    let mut csv = format!("# seed={seed}\n");
    csv.push_str("budget_musd,eafl,plan\n");
    for row in rows {
        let plan: Vec<String> = row.plan.selected.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            csv,
            "{},{},\"{}\"",
            fmt_f64(row.budget_musd),
            fmt_f64(row.eafl),
            plan.join(" ")
        );
    }
    let path = out_dir.join("tradeoff.csv");
    write_file(&path, &csv)?;
    Ok(path)
}

pub fn write_scenario(out_dir: &Path, record: &ScenarioRecord) -> Result<PathBuf, IoError> {
    let path = out_dir.join(format!("scenario_{}.json", record.seed));
    write_file(&path, &to_pretty_json(record))?;
    Ok(path)
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable output types");
    text.push('\n');
    text
}

/// Shortest round-trip decimal formatting (matches serde_json's float form).
fn fmt_f64(v: f64) -> String {
    let mut buf = ryu_like(v);
    if buf.ends_with(".0") {
        buf.truncate(buf.len() - 2);
    }
    buf
}

fn ryu_like(v: f64) -> String {
    // serde_json renders floats via ryu; reuse it through Value for identical
    // text in CSV and JSON outputs.
    serde_json::to_string(&v).expect("finite float")
}
