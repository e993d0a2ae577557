//! Orchestrates the trading loop across MGs and slots: estimation, intents,
//! settlement, utilities, battery dynamics, and online learning, collecting
//! per-slot metrics.
//!
//! One run is sequential over slots (learning is order-dependent), but every
//! agent draws from its own seeded stream, so results do not depend on the
//! order agents are polled within a slot. Independent runs (sweeps,
//! comparisons) execute concurrently with isolated state.

pub mod config;
pub mod metrics;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{RunConfig, SimParams, TraceSource};
pub use metrics::{MetricsTable, RunSummary, SlotRow};

use crate::agents::{
    Agent, AgentContext, AgentRegistry, Feedback, NormRanges, Observation, SlotState,
};
use crate::equilibrium::StochasticModel;
use crate::game::{
    battery_update, make_prices, resolve_trades, utility_clamped, IntentMatrix, MicrogridState,
};
use crate::traces::{
    estimate_at, load_trace, sample_actual, synth_traces, wind_power, TraceKind, TraceSeries,
};
use crate::{Error, Result};

/// Resolved per-run inputs: generation energy (converted from wind), demand,
/// and price series, plus the first simulated day within those traces.
pub struct World {
    pub generation: Vec<TraceSeries>,
    pub demand: Vec<TraceSeries>,
    pub price: TraceSeries,
    pub first_day: usize,
    pub batteries: Vec<f64>,
    pub norm: Vec<NormRanges>,
}

impl World {
    /// Loads or synthesizes all traces for `config` and validates coverage.
    pub fn build(config: &RunConfig) -> Result<Self> {
        let sim = &config.sim;
        let (wind, demand, price, turbine) = match &config.traces {
            TraceSource::Synth {
                seed,
                profile,
                turbine,
            } => {
                let days = sim.days + sim.estimation_window_days;
                let bundle = synth_traces(*seed, days, sim.slots_per_day, sim.n_mgs, profile)?;
                (bundle.wind_speed, bundle.demand, bundle.price, *turbine)
            }
            TraceSource::Csv {
                wind,
                demand,
                price,
                turbine,
            } => {
                let mut wind_series = Vec::with_capacity(wind.len());
                for path in wind {
                    wind_series.push(load_trace(path, TraceKind::WindSpeed, sim.slots_per_day)?);
                }
                let mut demand_series = Vec::with_capacity(demand.len());
                for path in demand {
                    demand_series.push(load_trace(path, TraceKind::Demand, sim.slots_per_day)?);
                }
                let price_series = load_trace(price, TraceKind::Price, sim.slots_per_day)?;
                (wind_series, demand_series, price_series, *turbine)
            }
        };

        let generation: Vec<TraceSeries> = wind
            .iter()
            .map(|series| TraceSeries {
                kind: TraceKind::Generation,
                slots_per_day: series.slots_per_day,
                values: series
                    .values
                    .iter()
                    .map(|&v| wind_power(v, &turbine))
                    .collect(),
                mg_id: series.mg_id,
            })
            .collect();

        let total_days = price.days();
        for (name, series_days) in generation
            .iter()
            .map(|s| ("generation", s.days()))
            .chain(demand.iter().map(|s| ("demand", s.days())))
        {
            if series_days != total_days {
                return Err(Error::Config(format!(
                    "{name} trace spans {series_days} days but the price trace spans {total_days}"
                )));
            }
        }
        if total_days < sim.days + 1 {
            return Err(Error::Config(format!(
                "traces span {total_days} days; need at least {} (days + 1 of history)",
                sim.days + 1
            )));
        }
        if price.values.iter().any(|v| *v <= 0.0) {
            return Err(Error::Config(
                "price trace holds a non-positive value".into(),
            ));
        }

        let norm = (0..sim.n_mgs)
            .map(|mg| NormRanges {
                demand: demand[mg].values.iter().copied().fold(1.0, f64::max),
                generation: turbine.rated_power,
                battery: sim.battery_capacity,
                action: sim.trade_cap,
            })
            .collect();

        Ok(World {
            generation,
            demand,
            price,
            first_day: total_days - sim.days,
            batteries: vec![sim.battery_initial; sim.n_mgs],
            norm,
        })
    }
}

fn derive_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn init_seed(seed: u64, mg: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(mg as u64 + 1)
}

/// Builds the per-MG agents named in the config through the registry.
pub fn build_agents(config: &RunConfig, registry: &AgentRegistry) -> Result<Vec<Box<dyn Agent>>> {
    let world_norm = World::build(config)?.norm;
    build_agents_with_norm(config, registry, &world_norm)
}

fn build_agents_with_norm(
    config: &RunConfig,
    registry: &AgentRegistry,
    norm: &[NormRanges],
) -> Result<Vec<Box<dyn Agent>>> {
    let sim = &config.sim;
    let mut agents = Vec::with_capacity(sim.n_mgs);
    for (mg, kind) in sim.agents.iter().enumerate() {
        let ctx = AgentContext {
            mg,
            n_mgs: sim.n_mgs,
            trade_cap: sim.trade_cap,
            levels: config.levels(),
            beta: sim.beta,
            norm: norm[mg],
            dqn: config.dqn,
            qtable: config.qtable,
            init_seed: init_seed(sim.seed, mg),
        };
        agents.push(registry.build(kind, &ctx)?);
    }
    Ok(agents)
}

/// One in-flight simulation; step it slot by slot or run it to completion.
pub struct Simulation {
    config: RunConfig,
    world: World,
    agents: Vec<Box<dyn Agent>>,
    agent_rngs: Vec<ChaCha8Rng>,
    sample_rngs: Vec<ChaCha8Rng>,
    model: StochasticModel,
    table: MetricsTable,
}

impl Simulation {
    pub fn new(config: RunConfig, agents: Vec<Box<dyn Agent>>) -> Result<Self> {
        config.validate()?;
        let world = World::build(&config)?;
        if agents.len() != config.sim.n_mgs {
            return Err(Error::Config(format!(
                "{} agents for {} MGs",
                agents.len(),
                config.sim.n_mgs
            )));
        }
        let model = StochasticModel::new(config.sim.accuracy, config.sim.delta)?;
        let seed = config.sim.seed;
        let n = config.sim.n_mgs;
        Ok(Simulation {
            agent_rngs: (0..n)
                .map(|mg| derive_rng(seed, 1000 + mg as u64))
                .collect(),
            sample_rngs: (0..n)
                .map(|mg| derive_rng(seed, 2000 + mg as u64))
                .collect(),
            config,
            world,
            agents,
            model,
            table: MetricsTable::default(),
        })
    }

    fn slot_states(&self, day: usize, slot: usize) -> Result<Vec<SlotState>> {
        let window = self.config.sim.estimation_window_days;
        (0..self.config.sim.n_mgs)
            .map(|mg| {
                Ok(SlotState {
                    demand_est: estimate_at(&self.world.demand[mg], day, slot, window)?,
                    generation_est: estimate_at(&self.world.generation[mg], day, slot, window)?,
                    battery: self.world.batteries[mg],
                })
            })
            .collect()
    }

    /// Runs one slot: estimate, act, settle once, realize, score, update
    /// batteries, and feed learning agents.
    pub fn run_slot(&mut self, day_rel: usize, slot: usize) -> Result<()> {
        let sim = &self.config.sim;
        let n = sim.n_mgs;
        let day = self.world.first_day + day_rel;
        let rho = self.world.price.value(day, slot);
        let prices = make_prices(rho, sim.price_ratio)?;
        let states = self.slot_states(day, slot)?;

        // gather all intents before any settlement
        let mut rows = Vec::with_capacity(n);
        for mg in 0..n {
            let obs = Observation {
                mg,
                day: day_rel,
                slot,
                state: states[mg],
                all_states: states.clone(),
                rho,
                price_ratio: sim.price_ratio,
            };
            let mut row = self.agents[mg].act(&obs, &mut self.agent_rngs[mg]);
            if row.len() != n {
                return Err(Error::Config(format!(
                    "agent {mg} returned {} intent components for {n} MGs",
                    row.len()
                )));
            }
            for v in row.iter_mut() {
                let clamped = v.clamp(-sim.trade_cap, sim.trade_cap);
                if clamped != *v {
                    log::debug!("intent {v} of MG {mg} clamped to the trade cap");
                    *v = clamped;
                }
            }
            rows.push(row);
        }
        let intents = IntentMatrix::from_rows(&rows, sim.trade_cap)?;
        let outcomes = resolve_trades(&intents, sim.settlement);

        #[cfg(debug_assertions)]
        {
            let mut net = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        net += outcomes.get(i, j);
                    }
                }
            }
            debug_assert!(net.abs() < 1e-9, "MG-to-MG energy not conserved: {net}");
        }

        let mut utilities = Vec::with_capacity(n);
        let mut new_batteries = Vec::with_capacity(n);
        for mg in 0..n {
            let estimate = states[mg].generation_est;
            let (g_actual, g_clamped) =
                sample_actual(estimate, &self.model, &mut self.sample_rngs[mg]);
            if g_clamped {
                self.table.generation_clamp_events += 1;
            }
            let state = MicrogridState {
                demand_est: states[mg].demand_est,
                generation_est: estimate,
                battery: self.world.batteries[mg],
                demand_actual: self.world.demand[mg].value(day, slot),
                generation_actual: g_actual,
                beta: sim.beta,
            };
            let (u, gain_clamped) = utility_clamped(&state, outcomes.row(mg), mg, &prices);
            if gain_clamped {
                self.table.gain_clamp_events += 1;
                log::debug!("gain argument clamped for MG {mg} at day {day_rel} slot {slot}");
            }
            let transition = battery_update(&state, outcomes.row(mg), sim.battery_capacity);
            utilities.push(u);
            new_batteries.push(transition);

            self.table.rows.push(SlotRow {
                day: day_rel,
                slot,
                mg,
                utility: u,
                plant_trade: outcomes.plant_trade(mg),
                mg_trade_volume: outcomes
                    .row(mg)
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != mg)
                    .map(|(_, v)| v.abs())
                    .sum(),
                curtailed: transition.curtailed,
                shortfall: transition.shortfall,
                price_rho: rho,
            });
        }
        for mg in 0..n {
            self.world.batteries[mg] = new_batteries[mg].level;
        }

        // estimates for the next slot are pure history, so learning can see
        // the successor state immediately
        let (next_day, next_slot) = if slot + 1 == sim.slots_per_day {
            (day + 1, 0)
        } else {
            (day, slot + 1)
        };
        let window = sim.estimation_window_days;
        for mg in 0..n {
            let next_state = SlotState {
                demand_est: estimate_at(&self.world.demand[mg], next_day, next_slot, window)?,
                generation_est: estimate_at(
                    &self.world.generation[mg],
                    next_day,
                    next_slot,
                    window,
                )?,
                battery: self.world.batteries[mg],
            };
            let feedback = Feedback {
                utility: utilities[mg],
                next_state,
            };
            self.agents[mg]
                .learn(&feedback, &mut self.agent_rngs[mg])
                .map_err(|e| {
                    Error::Config(format!(
                        "agent {mg} failed at day {day_rel} slot {slot}: {e}"
                    ))
                })?;
        }
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        for day in 0..self.config.sim.days {
            for slot in 0..self.config.sim.slots_per_day {
                self.run_slot(day, slot)?;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> (MetricsTable, Vec<Box<dyn Agent>>) {
        (self.table, self.agents)
    }
}

/// A completed run: raw rows plus the recomputed summary.
pub struct RunOutcome {
    pub metrics: MetricsTable,
    pub summary: RunSummary,
}

/// Builds agents from the config, runs all days, and summarizes.
pub fn run_experiment(config: &RunConfig) -> Result<RunOutcome> {
    let (outcome, _) = run_returning_agents(config)?;
    Ok(outcome)
}

/// Like [`run_experiment`] but hands back the trained agents (for
/// checkpointing).
pub fn run_returning_agents(config: &RunConfig) -> Result<(RunOutcome, Vec<Box<dyn Agent>>)> {
    config.validate()?;
    let registry = AgentRegistry::default();
    let world_norm = World::build(config)?.norm;
    let agents = build_agents_with_norm(config, &registry, &world_norm)?;
    run_with_agents(config, agents)
}

/// Runs with caller-supplied agents (e.g. loaded from checkpoints).
pub fn run_with_agents(
    config: &RunConfig,
    agents: Vec<Box<dyn Agent>>,
) -> Result<(RunOutcome, Vec<Box<dyn Agent>>)> {
    let mut simulation = Simulation::new(config.clone(), agents)?;
    simulation.run()?;
    let (metrics, agents) = simulation.finish();
    let summary = metrics.summary(config.sim.burn_in_days, config.sim.slots_per_day);
    Ok((RunOutcome { metrics, summary }, agents))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub mean_utility_post: f64,
    pub mean_abs_plant_post: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    pub label: String,
    pub per_seed: Vec<SeedOutcome>,
    pub mean_utility_post: f64,
    pub mean_abs_plant_post: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDelta {
    pub label: String,
    /// Per-seed differences against the first policy, paired by seed.
    pub utility_delta_per_seed: Vec<f64>,
    pub plant_delta_per_seed: Vec<f64>,
    pub mean_utility_delta: f64,
    pub mean_plant_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicyOutcome>,
    /// Pairwise deltas of each policy against the first one.
    pub deltas_vs_first: Vec<PolicyDelta>,
}

/// Paired-seed comparison of two or more agent assignments.
///
/// All configs must be identical except for their agent lists; every config
/// runs once per seed and the deltas pair runs seed by seed.
pub fn compare_agents(configs: &[RunConfig], seeds: &[u64]) -> Result<ComparisonReport> {
    if configs.len() < 2 {
        return Err(Error::Config(
            "need at least two agent assignments to compare".into(),
        ));
    }
    if seeds.is_empty() {
        return Err(Error::Config("need at least one seed".into()));
    }
    let mut reference = configs[0].clone();
    reference.sim.agents = Vec::new();
    reference.sim.seed = 0;
    for (idx, config) in configs.iter().enumerate() {
        config.validate()?;
        let mut normalized = config.clone();
        normalized.sim.agents = Vec::new();
        normalized.sim.seed = 0;
        if normalized != reference {
            return Err(Error::Config(format!(
                "config {idx} differs from the first in more than the agent assignment"
            )));
        }
    }

    let jobs: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(c, _)| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let results: Vec<((usize, u64), SeedOutcome)> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let mut config = configs[c].clone();
            config.sim.seed = seed;
            let outcome = run_experiment(&config)?;
            Ok((
                (c, seed),
                SeedOutcome {
                    seed,
                    mean_utility_post: outcome.summary.mean_utility_post,
                    mean_abs_plant_post: outcome.summary.mean_abs_plant_trade_post,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut policies = Vec::with_capacity(configs.len());
    for (c, config) in configs.iter().enumerate() {
        let mut per_seed: Vec<SeedOutcome> = results
            .iter()
            .filter(|((idx, _), _)| *idx == c)
            .map(|(_, outcome)| outcome.clone())
            .collect();
        per_seed.sort_by_key(|o| {
            seeds
                .iter()
                .position(|s| *s == o.seed)
                .unwrap_or(usize::MAX)
        });
        let mean_utility =
            per_seed.iter().map(|o| o.mean_utility_post).sum::<f64>() / per_seed.len() as f64;
        let mean_plant =
            per_seed.iter().map(|o| o.mean_abs_plant_post).sum::<f64>() / per_seed.len() as f64;
        policies.push(PolicyOutcome {
            label: config.sim.agents.join("+"),
            per_seed,
            mean_utility_post: mean_utility,
            mean_abs_plant_post: mean_plant,
        });
    }

    let deltas_vs_first = policies
        .iter()
        .skip(1)
        .map(|policy| {
            let utility: Vec<f64> = policy
                .per_seed
                .iter()
                .zip(&policies[0].per_seed)
                .map(|(a, b)| a.mean_utility_post - b.mean_utility_post)
                .collect();
            let plant: Vec<f64> = policy
                .per_seed
                .iter()
                .zip(&policies[0].per_seed)
                .map(|(a, b)| a.mean_abs_plant_post - b.mean_abs_plant_post)
                .collect();
            PolicyDelta {
                label: policy.label.clone(),
                mean_utility_delta: utility.iter().sum::<f64>() / utility.len() as f64,
                mean_plant_delta: plant.iter().sum::<f64>() / plant.len() as f64,
                utility_delta_per_seed: utility,
                plant_delta_per_seed: plant,
            }
        })
        .collect();

    Ok(ComparisonReport {
        seeds: seeds.to_vec(),
        policies,
        deltas_vs_first,
    })
}
