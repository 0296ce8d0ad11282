//! Retrofit planning: one-at-a-time sensitivity ranking and a genetic search
//! over budget-constrained retrofit plans.
//!
//! Every EAFL evaluation inside this module runs with common random numbers
//! (the same per-(magnitude, sample) substreams) and a fixed per-magnitude
//! sample count, so differences between plans reflect the plans and fitness
//! is a pure function of the decision vector. That purity backs the
//! bit-vector fitness cache.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fragility::FragilityTable;
use crate::model::{ComponentClass, ComponentId};
use crate::rng::RngStream;
use crate::simulation::{ConvergenceConfig, ScenarioEngine, SimError};

#[derive(Debug, Error)]
pub enum RetrofitError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid parameter: {0}")]
    BadParams(String),
    #[error("no retrofit candidates in the network")]
    NoCandidates,
}

/// Retrofit cost per component class, million USD, with optional
/// per-component overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub bus: f64,
    pub generator: f64,
    pub load: f64,
    pub substation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_musd: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<ComponentId, f64>,
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable {
            bus: 0.5,
            generator: 1.0,
            load: 0.3,
            substation: 0.8,
            budget_musd: None,
            overrides: BTreeMap::new(),
        }
    }
}

impl CostTable {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("bus", self.bus),
            ("generator", self.generator),
            ("load", self.load),
            ("substation", self.substation),
        ] {
            if !(v > 0.0) {
                return Err(format!("{name} retrofit cost must be positive (got {v})"));
            }
        }
        for (id, v) in &self.overrides {
            if !(*v > 0.0) {
                return Err(format!("override cost for {id} must be positive (got {v})"));
            }
        }
        Ok(())
    }

    pub fn cost_of(&self, id: ComponentId) -> f64 {
        if let Some(v) = self.overrides.get(&id) {
            return *v;
        }
        match id.class {
            ComponentClass::Bus => self.bus,
            ComponentClass::Generator => self.generator,
            ComponentClass::Load => self.load,
            ComponentClass::Substation => self.substation,
        }
    }
}

/// A binary retrofit decision over the candidate components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrofitPlan {
    /// Decision bits in candidate order (buses, generators, loads,
    /// substations).
    pub x: Vec<bool>,
    pub selected: Vec<ComponentId>,
    pub cost_musd: f64,
    /// EAFL of the plan, once evaluated.
    pub eafl: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SensitivityRecord {
    pub component: ComponentId,
    /// EAFL change when the component's medians scale by (1 + factor).
    pub s_up: f64,
    /// EAFL change when the component's medians scale by (1 - factor).
    pub s_down: f64,
}

impl SensitivityRecord {
    pub fn influence(&self) -> f64 {
        self.s_up.abs().max(self.s_down.abs())
    }
}

/// Genetic-algorithm configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub population_size: usize,
    pub generations: usize,
    /// Fraction of non-elite children produced by scattered crossover.
    pub crossover_fraction: f64,
    /// Per-gene flip probability for mutation children.
    pub mutation_rate: f64,
    pub elite_count: usize,
    pub tournament_size: usize,
    /// Budget-violation penalty per million USD over budget.
    pub penalty_gamma: f64,
    /// Fraction of the initial population seeded from the sensitivity
    /// ranking.
    pub seeded_fraction: f64,
    /// Stop after this many generations without best-fitness improvement.
    pub stagnation_limit: usize,
    /// Per-magnitude Monte Carlo samples during fitness evaluation.
    pub fitness_samples: usize,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population_size: 40,
            generations: 80,
            crossover_fraction: 0.8,
            mutation_rate: 0.1,
            elite_count: 4,
            tournament_size: 2,
            penalty_gamma: 10.0,
            seeded_fraction: 0.25,
            stagnation_limit: 15,
            fitness_samples: 100,
            seed: 1,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.population_size == 0 {
            return Err("population_size must be positive".into());
        }
        if self.elite_count >= self.population_size {
            return Err("elite_count must be below population_size".into());
        }
        for (name, v) in [
            ("crossover_fraction", self.crossover_fraction),
            ("mutation_rate", self.mutation_rate),
            ("seeded_fraction", self.seeded_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1] (got {v})"));
            }
        }
        if self.tournament_size == 0 {
            return Err("tournament_size must be positive".into());
        }
        if self.fitness_samples == 0 {
            return Err("fitness_samples must be positive".into());
        }
        Ok(())
    }
}

/// GA result: the best feasible plan (EAFL re-evaluated at the supplied
/// final settings) plus the per-generation best-fitness trace.
#[derive(Debug, Clone, Serialize)]
pub struct GaOutcome {
    pub plan: RetrofitPlan,
    pub history: Vec<f64>,
    pub generations_run: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TradeoffRow {
    pub budget_musd: f64,
    pub eafl: f64,
    pub plan: RetrofitPlan,
}

/// Shared evaluation context: the baseline engine, costs, the candidate
/// ordering, and the memoized plan -> EAFL map.
pub struct RetrofitContext<'a> {
    engine: &'a ScenarioEngine,
    costs: &'a CostTable,
    candidates: Vec<ComponentId>,
    master_seed: u64,
    eafl_cache: Mutex<HashMap<Vec<u8>, f64>>,
}

impl<'a> RetrofitContext<'a> {
    pub fn new(
        engine: &'a ScenarioEngine,
        costs: &'a CostTable,
        master_seed: u64,
    ) -> Result<Self, RetrofitError> {
        costs.validate().map_err(RetrofitError::BadParams)?;
        let candidates: Vec<ComponentId> = engine.inputs().components.ids().to_vec();
        if candidates.is_empty() {
            return Err(RetrofitError::NoCandidates);
        }
        Ok(RetrofitContext {
            engine,
            costs,
            candidates,
            master_seed,
            eafl_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn candidates(&self) -> &[ComponentId] {
        &self.candidates
    }

    pub fn plan_from_bits(&self, x: &[bool]) -> RetrofitPlan {
        let selected: Vec<ComponentId> = self
            .candidates
            .iter()
            .zip(x)
            .filter_map(|(&id, &on)| on.then_some(id))
            .collect();
        let cost_musd = selected.iter().map(|&id| self.costs.cost_of(id)).sum();
        RetrofitPlan { x: x.to_vec(), selected, cost_musd, eafl: None }
    }

    /// Retrofit cost of a decision vector, million USD.
    pub fn plan_cost(&self, x: &[bool]) -> f64 {
        self.candidates
            .iter()
            .zip(x)
            .filter_map(|(&id, &on)| on.then(|| self.costs.cost_of(id)))
            .sum()
    }

    fn table_for(&self, x: &[bool]) -> Result<FragilityTable, RetrofitError> {
        let selected: Vec<ComponentId> = self
            .candidates
            .iter()
            .zip(x)
            .filter_map(|(&id, &on)| on.then_some(id))
            .collect();
        Ok(self
            .engine
            .inputs()
            .fragility
            .apply_retrofit(&selected, &self.engine.inputs().components)
            .map_err(SimError::from)?)
    }

    /// EAFL of a fragility-table variant at a fixed per-magnitude sample
    /// count, under common random numbers.
    pub fn eafl_of_table(
        &self,
        table: FragilityTable,
        samples_per_magnitude: usize,
    ) -> Result<f64, RetrofitError> {
        let engine = self.engine.with_fragility(table)?;
        let conv = ConvergenceConfig::fixed(samples_per_magnitude);
        let (_, risk) = engine.assess(&conv, self.master_seed)?;
        Ok(risk.eafl)
    }

    /// Memoized reduced-sampling EAFL for a decision vector.
    pub fn eafl_of_plan(
        &self,
        x: &[bool],
        samples_per_magnitude: usize,
    ) -> Result<f64, RetrofitError> {
        let key = pack_bits(x);
        if let Some(&v) = self.eafl_cache.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let eafl = self.eafl_of_table(self.table_for(x)?, samples_per_magnitude)?;
        self.eafl_cache.lock().unwrap().insert(key, eafl);
        Ok(eafl)
    }

    /// Penalized fitness: EAFL plus gamma times the budget overrun.
    pub fn fitness(
        &self,
        x: &[bool],
        budget_musd: f64,
        gamma: f64,
        samples_per_magnitude: usize,
    ) -> Result<f64, RetrofitError> {
        let eafl = self.eafl_of_plan(x, samples_per_magnitude)?;
        Ok(eafl + gamma * (self.plan_cost(x) - budget_musd).max(0.0))
    }

    /// One-at-a-time sensitivity of EAFL to a component's fragility medians,
    /// scaled jointly by (1 +- factor), against the common-random-number
    /// baseline.
    pub fn oat_sensitivity(
        &self,
        component: ComponentId,
        factor: f64,
        samples_per_magnitude: usize,
    ) -> Result<SensitivityRecord, RetrofitError> {
        if !(0.0..1.0).contains(&factor) {
            return Err(RetrofitError::BadParams(format!(
                "perturbation factor must lie in [0, 1) (got {factor})"
            )));
        }
        let baseline = self.eafl_of_plan(&vec![false; self.candidates.len()], samples_per_magnitude)?;
        let components = &self.engine.inputs().components;
        let fragility = &self.engine.inputs().fragility;
        let up_table = fragility
            .with_scaled_medians(component, 1.0 + factor, components)
            .map_err(SimError::from)?;
        let down_table = fragility
            .with_scaled_medians(component, 1.0 - factor, components)
            .map_err(SimError::from)?;
        let s_up = self.eafl_of_table(up_table, samples_per_magnitude)? - baseline;
        let s_down = self.eafl_of_table(down_table, samples_per_magnitude)? - baseline;
        Ok(SensitivityRecord { component, s_up, s_down })
    }

    /// OAT records for every candidate, in candidate order.
    pub fn all_sensitivities(
        &self,
        factor: f64,
        samples_per_magnitude: usize,
    ) -> Result<Vec<SensitivityRecord>, RetrofitError> {
        self.candidates
            .iter()
            .map(|&c| self.oat_sensitivity(c, factor, samples_per_magnitude))
            .collect()
    }

    /// EAFL with an entire component class moved to its retrofitted
    /// parameters.
    pub fn category_sensitivity(
        &self,
        class: ComponentClass,
        samples_per_magnitude: usize,
    ) -> Result<f64, RetrofitError> {
        let table = self.engine.inputs().fragility.with_class_retrofitted(class);
        self.eafl_of_table(table, samples_per_magnitude)
    }

    /// Candidates ordered by descending OAT influence.
    pub fn sensitivity_ranking(
        &self,
        factor: f64,
        samples_per_magnitude: usize,
    ) -> Result<Vec<ComponentId>, RetrofitError> {
        let records = self.all_sensitivities(factor, samples_per_magnitude)?;
        let mut order: Vec<(f64, ComponentId)> =
            records.iter().map(|r| (r.influence(), r.component)).collect();
        // Stable ordering: influence descending, then candidate order.
        order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        Ok(order.into_iter().map(|(_, c)| c).collect())
    }

    /// Greedy plan: walk the ranking and activate whatever still fits.
    fn greedy_from_ranking(&self, ranking: &[ComponentId], budget_musd: f64) -> Vec<bool> {
        let index: BTreeMap<ComponentId, usize> =
            self.candidates.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut x = vec![false; self.candidates.len()];
        let mut spent = 0.0;
        for &comp in ranking {
            let cost = self.costs.cost_of(comp);
            if spent + cost <= budget_musd + 1e-9 {
                x[index[&comp]] = true;
                spent += cost;
            }
        }
        x
    }
}

/// Run the genetic search for a budget. `warm_starts` are extra individuals
/// injected into the initial population (used by the budget sweep to carry
/// plans across budget levels).
pub fn ga_optimize(
    ctx: &RetrofitContext,
    budget_musd: f64,
    params: &GaParams,
    ranking: &[ComponentId],
    warm_starts: &[Vec<bool>],
    final_conv: &ConvergenceConfig,
) -> Result<GaOutcome, RetrofitError> {
    params.validate().map_err(RetrofitError::BadParams)?;
    if budget_musd < 0.0 {
        return Err(RetrofitError::BadParams(format!("budget must be >= 0 (got {budget_musd})")));
    }
    let n = ctx.candidates().len();
    let pop_size = params.population_size;
    let ga_root = RngStream::root(params.seed).child(0x9a);

    // Initial population: one pure greedy individual, more greedy variants up
    // to the seeded fraction, warm starts, then uniform random fill.
    let n_seeded = ((params.seeded_fraction * pop_size as f64).round() as usize).min(pop_size);
    let mut population: Vec<Vec<bool>> = Vec::with_capacity(pop_size);
    population.push(ctx.greedy_from_ranking(ranking, budget_musd));
    for i in 1..n_seeded {
        let mut rng = ga_root.child(0x5eed).child(i as u64).rng();
        let jittered: Vec<ComponentId> = ranking
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(0.9))
            .collect();
        population.push(ctx.greedy_from_ranking(&jittered, budget_musd));
    }
    for warm in warm_starts {
        if population.len() < pop_size && warm.len() == n {
            population.push(warm.clone());
        }
    }
    let mut slot = population.len() as u64;
    while population.len() < pop_size {
        let mut rng = ga_root.child(0x7a4d).child(slot).rng();
        population.push((0..n).map(|_| rng.gen_bool(0.5)).collect());
        slot += 1;
    }

    let fitness_of = |pop: &[Vec<bool>]| -> Result<Vec<f64>, RetrofitError> {
        pop.iter()
            .map(|x| ctx.fitness(x, budget_musd, params.penalty_gamma, params.fitness_samples))
            .collect()
    };

    let mut fitness = fitness_of(&population)?;
    let mut best: (f64, Vec<bool>) = best_of(&population, &fitness);
    let mut best_feasible: Option<(f64, Vec<bool>)> = best_feasible_of(ctx, &population, &fitness, budget_musd);
    let mut history: Vec<f64> = vec![best.0];
    let mut stagnant = 0;
    let mut generations_run = 0;

    for gen in 0..params.generations {
        if stagnant >= params.stagnation_limit {
            break;
        }
        generations_run = gen + 1;

        // Rank current population (ascending fitness, bit-pattern tiebreak).
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| {
            fitness[a]
                .partial_cmp(&fitness[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| population[a].cmp(&population[b]))
        });

        let gen_stream = ga_root.child(0x6e4).child(gen as u64);
        let mut next: Vec<Vec<bool>> = order[..params.elite_count.min(order.len())]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        let n_children = pop_size - next.len();
        let n_cross = (params.crossover_fraction * n_children as f64).round() as usize;
        for child_slot in 0..n_children {
            let mut rng = gen_stream.child(child_slot as u64).rng();
            let child = if child_slot < n_cross {
                let a = tournament(&order, &fitness, params.tournament_size, &mut rng);
                let b = tournament(&order, &fitness, params.tournament_size, &mut rng);
                (0..n)
                    .map(|g| {
                        if rng.gen_bool(0.5) {
                            population[a][g]
                        } else {
                            population[b][g]
                        }
                    })
                    .collect()
            } else {
                let p = tournament(&order, &fitness, params.tournament_size, &mut rng);
                population[p]
                    .iter()
                    .map(|&bit| if rng.gen_bool(params.mutation_rate) { !bit } else { bit })
                    .collect::<Vec<bool>>()
            };
            next.push(child);
        }
        population = next;
        fitness = fitness_of(&population)?;

        let (gen_best, gen_best_x) = best_of(&population, &fitness);
        if gen_best < best.0 {
            best = (gen_best, gen_best_x);
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        if let Some(candidate) = best_feasible_of(ctx, &population, &fitness, budget_musd) {
            match &best_feasible {
                Some((current, _)) if *current <= candidate.0 => {}
                _ => best_feasible = Some(candidate),
            }
        }
        history.push(best.0);
    }

    let (_, winner_bits) = best_feasible.expect("greedy seed keeps one feasible individual");
    let mut plan = ctx.plan_from_bits(&winner_bits);
    // Re-evaluate the winner at the caller's final convergence settings.
    let engine = ctx.engine.with_fragility(ctx.table_for(&winner_bits)?)?;
    let (_, risk) = engine.assess(final_conv, ctx.master_seed)?;
    plan.eafl = Some(risk.eafl);
    Ok(GaOutcome { plan, history, generations_run })
}

/// Independent GA runs over ascending budgets; each run's initial population
/// additionally carries the previous budget's winner, so the sweep inherits
/// the nested-feasible-set structure.
pub fn budget_sweep(
    ctx: &RetrofitContext,
    budgets: &[f64],
    params: &GaParams,
    ranking: &[ComponentId],
    final_conv: &ConvergenceConfig,
) -> Result<Vec<TradeoffRow>, RetrofitError> {
    if budgets.windows(2).any(|w| w[0] > w[1]) {
        return Err(RetrofitError::BadParams("budgets must be sorted ascending".into()));
    }
    let mut rows = Vec::with_capacity(budgets.len());
    let mut warm: Vec<Vec<bool>> = Vec::new();
    for &budget in budgets {
        let outcome = ga_optimize(ctx, budget, params, ranking, &warm, final_conv)?;
        warm = vec![outcome.plan.x.clone()];
        rows.push(TradeoffRow {
            budget_musd: budget,
            eafl: outcome.plan.eafl.expect("ga re-evaluates the winner"),
            plan: outcome.plan,
        });
    }
    Ok(rows)
}

fn pack_bits(x: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; x.len().div_ceil(8)];
    for (i, &bit) in x.iter().enumerate() {
        if bit {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

fn best_of(population: &[Vec<bool>], fitness: &[f64]) -> (f64, Vec<bool>) {
    let mut best = 0;
    for i in 1..population.len() {
        if fitness[i] < fitness[best]
            || (fitness[i] == fitness[best] && population[i] < population[best])
        {
            best = i;
        }
    }
    (fitness[best], population[best].clone())
}

fn best_feasible_of(
    ctx: &RetrofitContext,
    population: &[Vec<bool>],
    fitness: &[f64],
    budget_musd: f64,
) -> Option<(f64, Vec<bool>)> {
    let mut best: Option<usize> = None;
    for i in 0..population.len() {
        if ctx.plan_cost(&population[i]) <= budget_musd + 1e-9 {
            best = match best {
                Some(j) if fitness[j] <= fitness[i] => Some(j),
                _ => Some(i),
            };
        }
    }
    best.map(|i| (fitness[i], population[i].clone()))
}

/// Tournament selection over the ranked population: draw `size` entrants,
/// keep the best-ranked.
fn tournament(
    order: &[usize],
    fitness: &[f64],
    size: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> usize {
    let mut winner: Option<usize> = None;
    for _ in 0..size {
        let &pick = order.choose(rng).expect("non-empty population");
        winner = match winner {
            Some(w) if fitness[w] <= fitness[pick] => Some(w),
            _ => Some(pick),
        };
    }
    winner.expect("at least one entrant")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragility::FunctionalityMapping;
    use crate::hazard::{FaultMechanism, GmpeCoefficients, HazardConfig, MagnitudeGrid};
    use crate::model::{Bus, Generator, Line, Load, PowerNetworkModel, Substation};
    use crate::simulation::SimulationInputs;
    use approx::assert_abs_diff_eq;

    fn network() -> PowerNetworkModel {
        PowerNetworkModel {
            base_mva: 100.0,
            buses: vec![
                Bus { id: 1, x_km: 5.0, y_km: 52.0 },
                Bus { id: 2, x_km: 15.0, y_km: 48.0 },
                Bus { id: 3, x_km: 10.0, y_km: 30.0 },
            ],
            lines: vec![
                Line { id: 1, from_bus: 1, to_bus: 2, reactance_pu: 0.1, rate_mw: 150.0, substation: None },
                Line { id: 2, from_bus: 2, to_bus: 3, reactance_pu: 0.1, rate_mw: 150.0, substation: Some(1) },
            ],
            generators: vec![Generator {
                id: 1,
                bus: 1,
                pmin_mw: 0.0,
                pmax_mw: 150.0,
                cost_per_mwh: 10.0,
            }],
            loads: vec![
                Load { id: 2, bus: 2, demand_mw: 40.0 },
                Load { id: 3, bus: 3, demand_mw: 60.0 },
            ],
            substations: vec![Substation { id: 1, line: 2 }],
        }
    }

    fn engine() -> ScenarioEngine {
        let hazard = HazardConfig {
            fault_p1: (0.0, 50.0),
            fault_p2: (40.0, 60.0),
            gr_a: 4.0,
            gr_b: 1.0,
            magnitudes: MagnitudeGrid { m_min: 6.5, m_max: 7.5, step: 0.5 },
            vs30_mps: 760.0,
            mechanism: FaultMechanism::StrikeSlip,
            correlation_cap_km: 40.0,
            gmpe: GmpeCoefficients::default(),
        };
        let inputs = SimulationInputs::new(
            network(),
            hazard,
            crate::fragility::FragilityTable::default(),
            FunctionalityMapping::default(),
        )
        .unwrap();
        ScenarioEngine::new(inputs).unwrap()
    }

    fn quick_params() -> GaParams {
        GaParams {
            population_size: 10,
            generations: 6,
            elite_count: 2,
            fitness_samples: 12,
            stagnation_limit: 10,
            seed: 5,
            ..GaParams::default()
        }
    }

    #[test]
    fn cost_table_arithmetic() {
        let costs = CostTable::default();
        assert_abs_diff_eq!(costs.cost_of(ComponentId::new(ComponentClass::Bus, 3)), 0.5);
        // 6 buses + 1 load + 2 substations = 4.9 MUSD.
        let total = 6.0 * costs.bus + costs.load + 2.0 * costs.substation;
        assert_abs_diff_eq!(total, 4.9, epsilon = 1e-12);
        // All 24 buses: 12 MUSD.
        assert_abs_diff_eq!(24.0 * costs.bus, 12.0, epsilon = 1e-12);
    }

    #[test]
    fn plan_cost_uses_overrides() {
        let engine = engine();
        let mut costs = CostTable::default();
        costs
            .overrides
            .insert(ComponentId::new(ComponentClass::Load, 3), 2.5);
        let ctx = RetrofitContext::new(&engine, &costs, 7).unwrap();
        let empty = vec![false; ctx.candidates().len()];
        assert_eq!(ctx.plan_cost(&empty), 0.0);
        let mut x = empty.clone();
        for (i, &c) in ctx.candidates().iter().enumerate() {
            if c == ComponentId::new(ComponentClass::Load, 3) {
                x[i] = true;
            }
        }
        assert_abs_diff_eq!(ctx.plan_cost(&x), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn fitness_penalty_arithmetic() {
        let engine = engine();
        let costs = CostTable::default();
        let ctx = RetrofitContext::new(&engine, &costs, 7).unwrap();
        let all = vec![true; ctx.candidates().len()];
        let cost = ctx.plan_cost(&all);
        let eafl = ctx.eafl_of_plan(&all, 8).unwrap();
        // Feasible branch: fitness equals EAFL.
        let f = ctx.fitness(&all, cost + 1.0, 10.0, 8).unwrap();
        assert_abs_diff_eq!(f, eafl, epsilon = 1e-15);
        // Over budget by 0.4: penalty 10 * 0.4.
        let f = ctx.fitness(&all, cost - 0.4, 10.0, 8).unwrap();
        assert_abs_diff_eq!(f, eafl + 4.0, epsilon = 1e-9);
        // Gamma zero turns the penalty off.
        let f = ctx.fitness(&all, 0.0, 0.0, 8).unwrap();
        assert_abs_diff_eq!(f, eafl, epsilon = 1e-15);
    }

    #[test]
    fn fitness_is_deterministic_and_cached() {
        let engine = engine();
        let costs = CostTable::default();
        let ctx = RetrofitContext::new(&engine, &costs, 7).unwrap();
        let mut x = vec![false; ctx.candidates().len()];
        x[0] = true;
        let a = ctx.fitness(&x, 5.0, 10.0, 10).unwrap();
        let b = ctx.fitness(&x, 5.0, 10.0, 10).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn oat_zero_factor_is_identity() {
        let engine = engine();
        let costs = CostTable::default();
        let ctx = RetrofitContext::new(&engine, &costs, 7).unwrap();
        let r = ctx
            .oat_sensitivity(ComponentId::new(ComponentClass::Bus, 2), 0.0, 10)
            .unwrap();
        assert_eq!(r.s_up, 0.0);
        assert_eq!(r.s_down, 0.0);
    }

    #[test]
    fn oat_direction_makes_sense() {
        let engine = engine();
        let costs = CostTable::default();
        let ctx = RetrofitContext::new(&engine, &costs, 7).unwrap();
        // Strengthening the only generator should not increase EAFL, and
        // weakening it should not decrease EAFL (common random numbers make
        // this exact up to the tiny fragility tail artifacts).
        let r = ctx
            .oat_sensitivity(ComponentId::new(ComponentClass::Generator, 1), 0.5, 30)
            .unwrap();
        assert!(r.s_up <= 1e-9, "s_up = {}", r.s_up);
        assert!(r.s_down >= -1e-9, "s_down = {}", r.s_down);
    }

    #[test]
    fn category_retrofit_reduces_risk() {
        let engine = engine();
        let costs = CostTable::default();
        let ctx = RetrofitContext::new(&engine, &costs, 7).unwrap();
        let baseline = ctx.eafl_of_plan(&vec![false; ctx.candidates().len()], 30).unwrap();
        for class in ComponentClass::ALL {
            let eafl = ctx.category_sensitivity(class, 30).unwrap();
            assert!(
                eafl <= baseline + 1e-6,
                "{class:?} retrofit worsened EAFL: {eafl} vs {baseline}"
            );
        }
    }

    #[test]
    fn oat_of_stranded_component_is_zero() {
        // Bus 4 sits alone with a load and no generator: its island is never
        // viable, so perturbing that load's fragility cannot move the EAFL.
        let mut net = network();
        net.buses.push(crate::model::Bus { id: 4, x_km: 30.0, y_km: 10.0 });
        net.loads.push(crate::model::Load { id: 4, bus: 4, demand_mw: 25.0 });
        let hazard = HazardConfig {
            fault_p1: (0.0, 50.0),
            fault_p2: (40.0, 60.0),
            gr_a: 4.0,
            gr_b: 1.0,
            magnitudes: MagnitudeGrid { m_min: 6.5, m_max: 7.5, step: 0.5 },
            vs30_mps: 760.0,
            mechanism: FaultMechanism::StrikeSlip,
            correlation_cap_km: 40.0,
            gmpe: GmpeCoefficients::default(),
        };
        let inputs = SimulationInputs::new(
            net,
            hazard,
            crate::fragility::FragilityTable::default(),
            FunctionalityMapping::default(),
        )
        .unwrap();
        let engine = ScenarioEngine::new(inputs).unwrap();
        let costs = CostTable::default();
        let ctx = RetrofitContext::new(&engine, &costs, 7).unwrap();
        let r = ctx
            .oat_sensitivity(ComponentId::new(ComponentClass::Load, 4), 0.5, 20)
            .unwrap();
        assert_eq!(r.s_up, 0.0, "stranded load cannot influence EAFL");
        assert_eq!(r.s_down, 0.0);
    }

    #[test]
    fn all_class_retrofit_dominates_single_classes() {
        let engine = engine();
        let costs = CostTable::default();
        let ctx = RetrofitContext::new(&engine, &costs, 7).unwrap();
        let samples = 30;
        let all_table = ComponentClass::ALL
            .iter()
            .fold(engine.inputs().fragility.as_ref().clone(), |t, &c| t.with_class_retrofitted(c));
        let all_eafl = ctx.eafl_of_table(all_table, samples).unwrap();
        for class in ComponentClass::ALL {
            let single = ctx.category_sensitivity(class, samples).unwrap();
            assert!(
                all_eafl <= single + 1e-6,
                "all-class EAFL {all_eafl} vs {class:?}-only {single}"
            );
        }
    }

    #[test]
    fn unconstrained_budget_reaches_the_all_ones_plan() {
        let engine = engine();
        let costs = CostTable::default();
        let ctx = RetrofitContext::new(&engine, &costs, 7).unwrap();
        let params = quick_params();
        let ranking = ctx.sensitivity_ranking(0.5, params.fitness_samples).unwrap();
        let final_conv = ConvergenceConfig::fixed(params.fitness_samples);
        let all = vec![true; ctx.candidates().len()];
        let total_cost = ctx.plan_cost(&all);
        let budget = total_cost + 1.0;
        let outcome = ga_optimize(&ctx, budget, &params, &ranking, &[], &final_conv).unwrap();
        // The greedy seed activates everything affordable, so the all-ones
        // plan is in the initial population and the best fitness can never
        // end above it.
        let all_ones_fitness =
            ctx.fitness(&all, budget, params.penalty_gamma, params.fitness_samples).unwrap();
        let best = *outcome.history.last().unwrap();
        assert!(
            best <= all_ones_fitness + 1e-12,
            "best {best} vs all-ones {all_ones_fitness}"
        );
    }

    #[test]
    fn plan_is_invariant_to_cost_and_budget_scaling() {
        let engine = engine();
        let base_costs = CostTable::default();
        let scaled_costs = CostTable {
            bus: base_costs.bus * 3.0,
            generator: base_costs.generator * 3.0,
            load: base_costs.load * 3.0,
            substation: base_costs.substation * 3.0,
            budget_musd: None,
            overrides: BTreeMap::new(),
        };
        let params = quick_params();
        let final_conv = ConvergenceConfig::fixed(params.fitness_samples);
        let ctx_a = RetrofitContext::new(&engine, &base_costs, 7).unwrap();
        let ranking_a = ctx_a.sensitivity_ranking(0.5, params.fitness_samples).unwrap();
        let plan_a = ga_optimize(&ctx_a, 1.5, &params, &ranking_a, &[], &final_conv).unwrap().plan;
        let ctx_b = RetrofitContext::new(&engine, &scaled_costs, 7).unwrap();
        let ranking_b = ctx_b.sensitivity_ranking(0.5, params.fitness_samples).unwrap();
        let plan_b =
            ga_optimize(&ctx_b, 1.5 * 3.0, &params, &ranking_b, &[], &final_conv).unwrap().plan;
        assert_eq!(plan_a.x, plan_b.x, "scaling costs and budget together must not move the plan");
        assert_abs_diff_eq!(plan_b.cost_musd, plan_a.cost_musd * 3.0, epsilon = 1e-12);
    }

    #[test]
    fn ga_with_zero_budget_returns_empty_plan() {
        let engine = engine();
        let costs = CostTable::default();
        let ctx = RetrofitContext::new(&engine, &costs, 7).unwrap();
        let params = quick_params();
        let ranking = ctx.sensitivity_ranking(0.5, params.fitness_samples).unwrap();
        let final_conv = ConvergenceConfig::fixed(params.fitness_samples);
        let outcome = ga_optimize(&ctx, 0.0, &params, &ranking, &[], &final_conv).unwrap();
        assert!(outcome.plan.selected.is_empty());
        assert_eq!(outcome.plan.cost_musd, 0.0);
        let baseline = ctx.eafl_of_plan(&vec![false; ctx.candidates().len()], params.fitness_samples).unwrap();
        assert_abs_diff_eq!(outcome.plan.eafl.unwrap(), baseline, epsilon = 1e-12);
    }

    #[test]
    fn ga_trace_is_monotone_and_plans_feasible() {
        let engine = engine();
        let costs = CostTable::default();
        let ctx = RetrofitContext::new(&engine, &costs, 7).unwrap();
        let params = quick_params();
        let ranking = ctx.sensitivity_ranking(0.5, params.fitness_samples).unwrap();
        let final_conv = ConvergenceConfig::fixed(params.fitness_samples);
        let budget = 1.5;
        let outcome = ga_optimize(&ctx, budget, &params, &ranking, &[], &final_conv).unwrap();
        for w in outcome.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "best fitness rose: {:?}", w);
        }
        assert!(outcome.plan.cost_musd <= budget + 1e-9);
        assert_abs_diff_eq!(
            outcome.plan.cost_musd,
            outcome.plan.selected.iter().map(|&c| costs.cost_of(c)).sum::<f64>(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn ga_is_reproducible() {
        let engine = engine();
        let costs = CostTable::default();
        let ctx = RetrofitContext::new(&engine, &costs, 7).unwrap();
        let params = quick_params();
        let ranking = ctx.sensitivity_ranking(0.5, params.fitness_samples).unwrap();
        let final_conv = ConvergenceConfig::fixed(params.fitness_samples);
        let a = ga_optimize(&ctx, 1.5, &params, &ranking, &[], &final_conv).unwrap();
        let b = ga_optimize(&ctx, 1.5, &params, &ranking, &[], &final_conv).unwrap();
        assert_eq!(a.plan, b.plan);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn budget_sweep_is_non_increasing() {
        let engine = engine();
        let costs = CostTable::default();
        let ctx = RetrofitContext::new(&engine, &costs, 7).unwrap();
        let params = quick_params();
        let ranking = ctx.sensitivity_ranking(0.5, params.fitness_samples).unwrap();
        let final_conv = ConvergenceConfig::fixed(params.fitness_samples);
        let rows = budget_sweep(&ctx, &[0.0, 1.0, 3.2], &params, &ranking, &final_conv).unwrap();
        assert_eq!(rows.len(), 3);
        for w in rows.windows(2) {
            assert!(
                w[1].eafl <= w[0].eafl + 1e-9,
                "EAFL rose with budget: {} -> {}",
                w[0].eafl,
                w[1].eafl
            );
        }
        for row in &rows {
            assert!(row.plan.cost_musd <= row.budget_musd + 1e-9);
        }
        // Unsorted budgets are rejected.
        assert!(matches!(
            budget_sweep(&ctx, &[2.0, 1.0], &params, &ranking, &final_conv),
            Err(RetrofitError::BadParams(_))
        ));
    }
}
