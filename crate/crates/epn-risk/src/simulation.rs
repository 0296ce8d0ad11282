//! Monte Carlo scenario evaluation and risk integration.
//!
//! A [`ScenarioEngine`] wires hazard sampling, damage realization, islanding,
//! and per-island dispatch into a deterministic pipeline: scenario `k` at
//! magnitude `M` under master seed `s` always reproduces the same served
//! load, regardless of thread count. Per-magnitude sampling stops when both
//! the relative-mean-stability and confidence-interval-width criteria hold,
//! and the magnitude results integrate into the expected annual
//! functionality loss (EAFL).

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dcopf::{assemble_case, solve_with_shedding, system_functionality, DispatchResult};
use crate::fragility::{realize_damage, DamageState, FragilityError, FragilityTable, FunctionalityMapping};
use crate::hazard::{FieldSampler, HazardConfig, HazardError};
use crate::model::{ComponentId, ComponentSet, PowerNetworkModel};
use crate::rng::RngStream;
use crate::topology::{build_topology, designate_slack, find_islands, TopologyError};

const TAG_FIELD: u64 = 0x11;
const TAG_DAMAGE: u64 = 0x22;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Hazard(#[from] HazardError),
    #[error(transparent)]
    Fragility(#[from] FragilityError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Dcopf(#[from] crate::dcopf::DcopfError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("baseline functionality is zero; the intact network serves no load")]
    ZeroBaseline,
    #[error("statistics cover magnitudes {stats:?} but the grid has {grid:?}")]
    GridMismatch { stats: Vec<f64>, grid: Vec<f64> },
}

/// Stopping rule for per-magnitude Monte Carlo sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    /// Relative change threshold for the running mean between checks.
    pub tau: f64,
    /// Maximum 95% confidence-interval width, in normalized units.
    pub delta: f64,
    /// Normal critical value for the interval (1.96 for 95%).
    pub z: f64,
    pub min_samples: usize,
    pub max_samples: usize,
    pub check_interval: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            tau: 0.01,
            delta: 0.05,
            z: 1.96,
            min_samples: 100,
            max_samples: 2000,
            check_interval: 25,
        }
    }
}

impl ConvergenceConfig {
    /// Fixed-size sampling (no early stop), used where common random numbers
    /// matter more than adaptive precision.
    pub fn fixed(n: usize) -> Self {
        ConvergenceConfig {
            tau: f64::INFINITY,
            delta: f64::INFINITY,
            z: 1.96,
            min_samples: n,
            max_samples: n,
            check_interval: n.max(1),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.tau > 0.0) {
            return Err(format!("tau must be positive (got {})", self.tau));
        }
        if !(self.delta > 0.0) {
            return Err(format!("delta must be positive (got {})", self.delta));
        }
        if self.min_samples < 2 {
            return Err("min_samples must be at least 2".to_string());
        }
        if self.max_samples < self.min_samples {
            return Err("max_samples must be >= min_samples".to_string());
        }
        if self.check_interval == 0 {
            return Err("check_interval must be positive".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergedBy {
    /// Both the mean-stability and interval-width criteria held at a check.
    Criteria,
    /// The sample cap was reached first.
    MaxSamples,
}

/// Monte Carlo summary for one magnitude.
#[derive(Debug, Clone, Serialize)]
pub struct MagnitudeStats {
    pub magnitude: f64,
    pub n_samples: usize,
    /// Served load per sample, MW.
    pub samples_mw: Vec<f64>,
    /// Mean normalized functionality (served / baseline).
    pub mean_norm: f64,
    /// Half-width of the 95% confidence interval, normalized units.
    pub ci_halfwidth: f64,
    pub converged_by: ConvergedBy,
}

/// Occurrence-weighted risk metric over the magnitude grid.
#[derive(Debug, Clone, Serialize)]
pub struct RiskResult {
    /// Expected annual functionality loss, dimensionless per year.
    pub eafl: f64,
    pub magnitudes: Vec<f64>,
    /// Annual occurrence rate per magnitude bin.
    pub rates: Vec<f64>,
    pub mean_norm: Vec<f64>,
    /// Per-bin contribution: rate * (1 - mean_norm).
    pub contributions: Vec<f64>,
}

/// Everything a scenario evaluation needs, cheap to clone and share across
/// threads.
#[derive(Clone)]
pub struct SimulationInputs {
    pub network: Arc<PowerNetworkModel>,
    pub components: Arc<ComponentSet>,
    pub hazard: Arc<HazardConfig>,
    pub fragility: Arc<FragilityTable>,
    pub mapping: Arc<FunctionalityMapping>,
}

impl SimulationInputs {
    pub fn new(
        network: PowerNetworkModel,
        hazard: HazardConfig,
        fragility: FragilityTable,
        mapping: FunctionalityMapping,
    ) -> Result<Self, SimError> {
        network.validate().map_err(|e| SimError::Config(e.to_string()))?;
        hazard.validate().map_err(SimError::Config)?;
        fragility.validate().map_err(|e| SimError::Config(e.to_string()))?;
        mapping.validate().map_err(SimError::Config)?;
        let components = network.components();
        Ok(SimulationInputs {
            network: Arc::new(network),
            components: Arc::new(components),
            hazard: Arc::new(hazard),
            fragility: Arc::new(fragility),
            mapping: Arc::new(mapping),
        })
    }

    /// Same inputs with a different fragility table (retrofits, one-at-a-time
    /// perturbations). Hazard-side caches remain valid and shared.
    pub fn with_fragility(&self, fragility: FragilityTable) -> Result<Self, SimError> {
        fragility.validate().map_err(|e| SimError::Config(e.to_string()))?;
        let mut out = self.clone();
        out.fragility = Arc::new(fragility);
        Ok(out)
    }
}

/// Per-component record in a detailed scenario dump.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentRecord {
    pub id: ComponentId,
    pub pga_g: f64,
    pub ds: DamageState,
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IslandRecord {
    pub buses: Vec<u32>,
    pub viable: bool,
    pub slack_bus: Option<u32>,
    pub dispatch: Option<DispatchResult>,
    pub served_mw: f64,
}

/// Full trace of one scenario sample, shaped for `scenario_<seed>.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioRecord {
    pub seed: u64,
    pub magnitude: f64,
    pub sample_index: u64,
    pub baseline_mw: f64,
    pub total_served_mw: f64,
    pub norm_functionality: f64,
    pub components: Vec<ComponentRecord>,
    pub islands: Vec<IslandRecord>,
}

/// Dispatch of the undamaged network, fixed once per engine.
#[derive(Debug, Clone, Serialize)]
pub struct BaselineDispatch {
    pub total_served_mw: f64,
    pub islands: Vec<DispatchResult>,
}

/// Deterministic scenario pipeline with per-magnitude hazard caches.
pub struct ScenarioEngine {
    inputs: SimulationInputs,
    baseline: BaselineDispatch,
    samplers: Arc<Mutex<BTreeMap<u64, Arc<FieldSampler>>>>,
}

impl ScenarioEngine {
    pub fn new(inputs: SimulationInputs) -> Result<Self, SimError> {
        let baseline = dispatch_intact(&inputs)?;
        Ok(ScenarioEngine {
            inputs,
            baseline,
            samplers: Arc::new(Mutex::new(BTreeMap::new())),
        })
    }

    pub fn inputs(&self) -> &SimulationInputs {
        &self.inputs
    }

    pub fn baseline(&self) -> &BaselineDispatch {
        &self.baseline
    }

    pub fn baseline_mw(&self) -> f64 {
        self.baseline.total_served_mw
    }

    /// Swap the fragility table, keeping the shared hazard caches.
    pub fn with_fragility(&self, fragility: FragilityTable) -> Result<ScenarioEngine, SimError> {
        Ok(ScenarioEngine {
            inputs: self.inputs.with_fragility(fragility)?,
            baseline: self.baseline.clone(),
            samplers: Arc::clone(&self.samplers),
        })
    }

    fn sampler_for(&self, magnitude: f64) -> Result<Arc<FieldSampler>, HazardError> {
        let key = magnitude.to_bits();
        if let Some(s) = self.samplers.lock().unwrap().get(&key) {
            return Ok(Arc::clone(s));
        }
        let hazard = &self.inputs.hazard;
        let sampler = FieldSampler::new(
            magnitude,
            hazard.fault_p1,
            hazard.fault_p2,
            self.inputs.components.ids(),
            self.inputs.components.sites(),
            hazard.vs30_mps,
            hazard.mechanism,
            &hazard.gmpe,
            hazard.correlation_cap_km,
        )?;
        let sampler = Arc::new(sampler);
        let mut cache = self.samplers.lock().unwrap();
        Ok(Arc::clone(cache.entry(key).or_insert(sampler)))
    }

    /// Served load (MW) for sample `sample_index` at `magnitude`.
    /// Deterministic in (master_seed, magnitude, sample_index).
    pub fn simulate_scenario(
        &self,
        magnitude: f64,
        sample_index: u64,
        master_seed: u64,
    ) -> Result<f64, SimError> {
        Ok(self.run_pipeline(magnitude, sample_index, master_seed)?.0)
    }

    /// Same pipeline, retaining the full per-component and per-island trace.
    pub fn simulate_scenario_detailed(
        &self,
        magnitude: f64,
        sample_index: u64,
        master_seed: u64,
    ) -> Result<ScenarioRecord, SimError> {
        let (total, components, islands) =
            self.run_pipeline_detailed(magnitude, sample_index, master_seed)?;
        let baseline = self.baseline_mw();
        Ok(ScenarioRecord {
            seed: master_seed,
            magnitude,
            sample_index,
            baseline_mw: baseline,
            total_served_mw: total,
            norm_functionality: if baseline > 0.0 { total / baseline } else { 0.0 },
            components,
            islands,
        })
    }

    fn run_pipeline(
        &self,
        magnitude: f64,
        sample_index: u64,
        master_seed: u64,
    ) -> Result<(f64, Vec<DispatchResult>), SimError> {
        let sampler = self.sampler_for(magnitude)?;
        let root = RngStream::root(master_seed);
        let mut field_rng =
            root.child(TAG_FIELD).child_f64(magnitude).child(sample_index).rng();
        let field = sampler.draw(&mut field_rng);
        let damage_stream = root.child(TAG_DAMAGE).child_f64(magnitude).child(sample_index);
        let damage = realize_damage(
            &field,
            &self.inputs.components,
            &self.inputs.fragility,
            &self.inputs.mapping,
            damage_stream,
        )?;
        let network = &self.inputs.network;
        let topo = build_topology(network, &self.inputs.components, &damage)?;
        let mut partition = find_islands(network, &self.inputs.components, &damage, &topo);
        let mut results = Vec::new();
        for island in &mut partition.islands {
            if !crate::topology::island_viability(island, network) {
                continue;
            }
            island.slack_bus = Some(designate_slack(island, network)?);
            let case = assemble_case(island, network)?;
            let result = solve_with_shedding(&case, case.loads.len())?;
            results.push(result);
        }
        Ok((system_functionality(&results), results))
    }

    fn run_pipeline_detailed(
        &self,
        magnitude: f64,
        sample_index: u64,
        master_seed: u64,
    ) -> Result<(f64, Vec<ComponentRecord>, Vec<IslandRecord>), SimError> {
        // Re-run the pipeline keeping intermediates; mirrors run_pipeline.
        let sampler = self.sampler_for(magnitude)?;
        let root = RngStream::root(master_seed);
        let mut field_rng =
            root.child(TAG_FIELD).child_f64(magnitude).child(sample_index).rng();
        let field = sampler.draw(&mut field_rng);
        let damage_stream = root.child(TAG_DAMAGE).child_f64(magnitude).child(sample_index);
        let damage = realize_damage(
            &field,
            &self.inputs.components,
            &self.inputs.fragility,
            &self.inputs.mapping,
            damage_stream,
        )?;
        let components: Vec<ComponentRecord> = (0..self.inputs.components.len())
            .map(|i| ComponentRecord {
                id: self.inputs.components.id(i),
                pga_g: field.pga_g[i],
                ds: damage.ds[i],
                alpha: damage.alpha[i],
            })
            .collect();
        let network = &self.inputs.network;
        let topo = build_topology(network, &self.inputs.components, &damage)?;
        let mut partition = find_islands(network, &self.inputs.components, &damage, &topo);
        let mut islands = Vec::new();
        let mut results = Vec::new();
        for island in &mut partition.islands {
            let viable = crate::topology::island_viability(island, network);
            if viable {
                island.slack_bus = Some(designate_slack(island, network)?);
                let case = assemble_case(island, network)?;
                let result = solve_with_shedding(&case, case.loads.len())?;
                islands.push(IslandRecord {
                    buses: island.buses.clone(),
                    viable,
                    slack_bus: island.slack_bus,
                    served_mw: result.total_served_mw(),
                    dispatch: Some(result.clone()),
                });
                results.push(result);
            } else {
                islands.push(IslandRecord {
                    buses: island.buses.clone(),
                    viable,
                    slack_bus: None,
                    dispatch: None,
                    served_mw: 0.0,
                });
            }
        }
        Ok((system_functionality(&results), components, islands))
    }

    /// Sample one magnitude until the convergence criteria hold (checked
    /// every `check_interval` samples from `min_samples` on) or the cap is
    /// reached. Samples are index-seeded, so results do not depend on thread
    /// scheduling.
    pub fn run_mc(
        &self,
        magnitude: f64,
        conv: &ConvergenceConfig,
        master_seed: u64,
    ) -> Result<MagnitudeStats, SimError> {
        conv.validate().map_err(SimError::Config)?;
        let baseline = self.baseline_mw();
        if baseline <= 0.0 {
            return Err(SimError::ZeroBaseline);
        }
        let mut samples: Vec<f64> = Vec::with_capacity(conv.min_samples);
        let mut target = conv.min_samples.min(conv.max_samples);
        let converged_by = loop {
            let start = samples.len();
            let fresh: Result<Vec<f64>, SimError> = (start..target)
                .into_par_iter()
                .map(|k| self.simulate_scenario(magnitude, k as u64, master_seed))
                .collect();
            samples.extend(fresh?);
            let n = samples.len();
            let normalized: Vec<f64> = samples.iter().map(|f| f / baseline).collect();
            let mean_now = mean(&normalized);
            let prev_window = n.saturating_sub(conv.check_interval).max(1);
            let mean_prev = mean(&normalized[..prev_window]);
            let rel_change = if mean_prev.abs() > 0.0 {
                (mean_now - mean_prev).abs() / mean_prev.abs()
            } else if mean_now == mean_prev {
                0.0
            } else {
                f64::INFINITY
            };
            let width = 2.0 * conv.z * std_dev(&normalized) / (n as f64).sqrt();
            if rel_change < conv.tau && width < conv.delta {
                break ConvergedBy::Criteria;
            }
            if n >= conv.max_samples {
                break ConvergedBy::MaxSamples;
            }
            target = (n + conv.check_interval).min(conv.max_samples);
        };
        let normalized: Vec<f64> = samples.iter().map(|f| f / baseline).collect();
        let mean_norm = mean(&normalized);
        let ci_halfwidth = conv.z * std_dev(&normalized) / (samples.len() as f64).sqrt();
        Ok(MagnitudeStats {
            magnitude,
            n_samples: samples.len(),
            samples_mw: samples,
            mean_norm,
            ci_halfwidth,
            converged_by,
        })
    }

    /// Monte Carlo over the full magnitude grid followed by risk integration.
    pub fn assess(
        &self,
        conv: &ConvergenceConfig,
        master_seed: u64,
    ) -> Result<(Vec<MagnitudeStats>, RiskResult), SimError> {
        self.assess_on_grid(&self.inputs.hazard.magnitudes.clone(), conv, master_seed)
    }

    pub fn assess_on_grid(
        &self,
        grid: &crate::hazard::MagnitudeGrid,
        conv: &ConvergenceConfig,
        master_seed: u64,
    ) -> Result<(Vec<MagnitudeStats>, RiskResult), SimError> {
        let magnitudes = grid.magnitudes();
        if magnitudes.is_empty() {
            return Err(SimError::Hazard(HazardError::EmptyGrid));
        }
        let stats: Result<Vec<MagnitudeStats>, SimError> =
            magnitudes.iter().map(|&m| self.run_mc(m, conv, master_seed)).collect();
        let stats = stats?;
        let rates = crate::hazard::magnitude_bin_rates(grid, self.inputs.hazard.gr_a, self.inputs.hazard.gr_b)?;
        let risk = compute_eafl(&magnitudes, &stats, &rates)?;
        Ok((stats, risk))
    }
}

/// EAFL = sum over bins of rate * (1 - mean normalized functionality).
pub fn compute_eafl(
    magnitudes: &[f64],
    stats: &[MagnitudeStats],
    rates: &[f64],
) -> Result<RiskResult, SimError> {
    let stat_mags: Vec<f64> = stats.iter().map(|s| s.magnitude).collect();
    if stat_mags != magnitudes || rates.len() != magnitudes.len() {
        return Err(SimError::GridMismatch { stats: stat_mags, grid: magnitudes.to_vec() });
    }
    let mean_norm: Vec<f64> = stats.iter().map(|s| s.mean_norm).collect();
    let contributions: Vec<f64> =
        rates.iter().zip(&mean_norm).map(|(r, f)| r * (1.0 - f)).collect();
    Ok(RiskResult {
        eafl: contributions.iter().sum(),
        magnitudes: magnitudes.to_vec(),
        rates: rates.to_vec(),
        mean_norm,
        contributions,
    })
}

fn dispatch_intact(inputs: &SimulationInputs) -> Result<BaselineDispatch, SimError> {
    let damage = crate::fragility::DamageRealization::intact(inputs.components.len());
    let topo = build_topology(&inputs.network, &inputs.components, &damage)?;
    let mut partition = find_islands(&inputs.network, &inputs.components, &damage, &topo);
    let mut islands = Vec::new();
    for island in &mut partition.islands {
        if !crate::topology::island_viability(island, &inputs.network) {
            continue;
        }
        island.slack_bus = Some(designate_slack(island, &inputs.network)?);
        let case = assemble_case(island, &inputs.network)?;
        islands.push(solve_with_shedding(&case, case.loads.len())?);
    }
    Ok(BaselineDispatch { total_served_mw: system_functionality(&islands), islands })
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn std_dev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
    var.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragility::FragilityCurveSet;
    use crate::hazard::{FaultMechanism, GmpeCoefficients, MagnitudeGrid};
    use crate::model::{Bus, Generator, Line, Load, PowerNetworkModel, Substation};
    use approx::assert_abs_diff_eq;

    fn small_network() -> PowerNetworkModel {
        PowerNetworkModel {
            base_mva: 100.0,
            buses: vec![
                Bus { id: 1, x_km: 5.0, y_km: 52.0 },
                Bus { id: 2, x_km: 15.0, y_km: 48.0 },
                Bus { id: 3, x_km: 10.0, y_km: 30.0 },
                Bus { id: 4, x_km: 20.0, y_km: 20.0 },
            ],
            lines: vec![
                Line { id: 1, from_bus: 1, to_bus: 2, reactance_pu: 0.1, rate_mw: 120.0, substation: None },
                Line { id: 2, from_bus: 2, to_bus: 3, reactance_pu: 0.15, rate_mw: 120.0, substation: Some(1) },
                Line { id: 3, from_bus: 3, to_bus: 4, reactance_pu: 0.1, rate_mw: 120.0, substation: None },
                Line { id: 4, from_bus: 1, to_bus: 3, reactance_pu: 0.2, rate_mw: 90.0, substation: None },
            ],
            generators: vec![
                Generator { id: 1, bus: 1, pmin_mw: 0.0, pmax_mw: 120.0, cost_per_mwh: 8.0 },
                Generator { id: 4, bus: 4, pmin_mw: 0.0, pmax_mw: 90.0, cost_per_mwh: 15.0 },
            ],
            loads: vec![
                Load { id: 2, bus: 2, demand_mw: 60.0 },
                Load { id: 3, bus: 3, demand_mw: 50.0 },
                Load { id: 4, bus: 4, demand_mw: 30.0 },
            ],
            substations: vec![Substation { id: 1, line: 2 }],
        }
    }

    fn hazard_config() -> HazardConfig {
        HazardConfig {
            fault_p1: (0.0, 50.0),
            fault_p2: (40.0, 60.0),
            gr_a: 4.0,
            gr_b: 1.0,
            magnitudes: MagnitudeGrid { m_min: 6.0, m_max: 7.0, step: 0.5 },
            vs30_mps: 760.0,
            mechanism: FaultMechanism::StrikeSlip,
            correlation_cap_km: 40.0,
            gmpe: GmpeCoefficients::default(),
        }
    }

    fn engine() -> ScenarioEngine {
        let inputs = SimulationInputs::new(
            small_network(),
            hazard_config(),
            FragilityTable::default(),
            FunctionalityMapping::default(),
        )
        .unwrap();
        ScenarioEngine::new(inputs).unwrap()
    }

    fn indestructible_table() -> FragilityTable {
        let huge = FragilityCurveSet { medians_g: [1e9, 2e9, 3e9, 4e9], betas: [0.1; 4] };
        let mut table = FragilityTable::default();
        table.baseline.bus = huge;
        table.baseline.generator = huge;
        table.baseline.load = huge;
        table.baseline.substation = huge;
        table.retrofitted = table.baseline.clone();
        table
    }

    fn doomed_table() -> FragilityTable {
        let tiny = FragilityCurveSet { medians_g: [1e-12, 2e-12, 3e-12, 4e-12], betas: [0.1; 4] };
        let mut table = FragilityTable::default();
        table.baseline.bus = tiny;
        table.baseline.generator = tiny;
        table.baseline.load = tiny;
        table.baseline.substation = tiny;
        table.retrofitted = table.baseline.clone();
        table
    }

    #[test]
    fn baseline_serves_full_demand() {
        let engine = engine();
        assert_abs_diff_eq!(engine.baseline_mw(), 140.0, epsilon = 1e-6);
    }

    #[test]
    fn indestructible_fragility_keeps_baseline() {
        let engine = engine().with_fragility(indestructible_table()).unwrap();
        for k in 0..5 {
            let f = engine.simulate_scenario(7.0, k, 7).unwrap();
            assert_abs_diff_eq!(f, 140.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn doomed_fragility_serves_nothing() {
        let engine = engine().with_fragility(doomed_table()).unwrap();
        for k in 0..5 {
            assert_eq!(engine.simulate_scenario(7.0, k, 7).unwrap(), 0.0);
        }
    }

    #[test]
    fn scenario_replay_is_bitwise_identical() {
        let engine = engine();
        let a = engine.simulate_scenario(6.5, 3, 42).unwrap();
        let b = engine.simulate_scenario(6.5, 3, 42).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let c = engine.simulate_scenario(6.5, 4, 42).unwrap();
        // Different sample index gives a different draw almost surely.
        assert_ne!(a.to_bits(), c.to_bits());
    }

    #[test]
    fn detailed_record_is_consistent() {
        let engine = engine();
        let rec = engine.simulate_scenario_detailed(7.0, 0, 11).unwrap();
        assert_eq!(rec.components.len(), engine.inputs().components.len());
        let quick = engine.simulate_scenario(7.0, 0, 11).unwrap();
        assert_eq!(rec.total_served_mw.to_bits(), quick.to_bits());
        let island_sum: f64 = rec.islands.iter().map(|i| i.served_mw).sum();
        assert_abs_diff_eq!(rec.total_served_mw, island_sum, epsilon = 1e-9);
        for c in &rec.components {
            assert!(c.pga_g > 0.0);
        }
    }

    #[test]
    fn zero_variance_converges_at_min_samples() {
        let engine = engine().with_fragility(indestructible_table()).unwrap();
        let conv = ConvergenceConfig::default();
        let stats = engine.run_mc(7.0, &conv, 7).unwrap();
        assert_eq!(stats.n_samples, conv.min_samples);
        assert_eq!(stats.converged_by, ConvergedBy::Criteria);
        assert_abs_diff_eq!(stats.mean_norm, 1.0, epsilon = 1e-12);
        assert_eq!(stats.ci_halfwidth, 0.0);
    }

    #[test]
    fn degenerate_thresholds_stop_at_min_samples() {
        let engine = engine();
        let conv = ConvergenceConfig {
            tau: 1.0,
            delta: 1e9,
            ..ConvergenceConfig::default()
        };
        let stats = engine.run_mc(7.0, &conv, 7).unwrap();
        assert_eq!(stats.n_samples, conv.min_samples);
        assert_eq!(stats.converged_by, ConvergedBy::Criteria);
    }

    #[test]
    fn run_mc_is_thread_independent() {
        let engine = engine();
        let conv = ConvergenceConfig { min_samples: 40, max_samples: 80, ..Default::default() };
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = single.install(|| engine.run_mc(6.5, &conv, 7).unwrap());
        let multi = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let b = multi.install(|| engine.run_mc(6.5, &conv, 7).unwrap());
        assert_eq!(a.samples_mw, b.samples_mw);
        assert_eq!(a.mean_norm.to_bits(), b.mean_norm.to_bits());
    }

    #[test]
    fn eafl_identities() {
        let engine = engine();
        let grid = hazard_config().magnitudes;
        let rates = hazard_config().bin_rates().unwrap();

        // Indestructible: mean functionality 1, EAFL exactly 0.
        let immortal = engine.with_fragility(indestructible_table()).unwrap();
        let (stats, risk) =
            immortal.assess_on_grid(&grid, &ConvergenceConfig::fixed(10), 7).unwrap();
        assert!(stats.iter().all(|s| (s.mean_norm - 1.0).abs() < 1e-12));
        assert_eq!(risk.eafl, 0.0);

        // Doomed: mean functionality 0, EAFL = sum of rates exactly.
        let doomed = engine.with_fragility(doomed_table()).unwrap();
        let (stats, risk) = doomed.assess_on_grid(&grid, &ConvergenceConfig::fixed(10), 7).unwrap();
        assert!(stats.iter().all(|s| s.mean_norm == 0.0));
        let total: f64 = rates.iter().sum();
        assert_abs_diff_eq!(risk.eafl, total, epsilon = 1e-12);
        assert_abs_diff_eq!(
            risk.eafl,
            crate::hazard::gr_exceedance_prob(6.0, 4.0, 1.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn eafl_grid_mismatch_is_an_error() {
        let engine = engine();
        let stats = vec![engine.run_mc(6.0, &ConvergenceConfig::fixed(5), 7).unwrap()];
        let err = compute_eafl(&[6.0, 6.5], &stats, &[0.1, 0.2]).unwrap_err();
        assert!(matches!(err, SimError::GridMismatch { .. }));
    }
}
