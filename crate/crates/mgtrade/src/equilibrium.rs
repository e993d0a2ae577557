//! Closed-form equilibria of the three-MG trading game, the stochastic
//! variant with generation estimation error, and numerical best-response
//! verification.
//!
//! The closed forms are evaluated verbatim; the grid search is the
//! authority whenever the two disagree. Verification always settles trades in
//! [`SettlementMode::Direct`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::game::{
    make_prices, resolve_trades, trade_cash_outflow, IntentMatrix, MicrogridState, PriceVector,
    SettlementMode,
};
use crate::{Error, Result};

/// Number of players the closed forms cover.
pub const GAME_SIZE: usize = 3;

/// A three-MG game instance reduced to what the equilibrium formulas need:
/// per-MG net positions, the gain coefficient, and the price pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    /// `battery + generation - demand` per MG.
    pub nets: [f64; GAME_SIZE],
    pub beta: f64,
    pub rho: f64,
    pub price_ratio: f64,
    /// Per-link intent bound used by verification and by matrix invariants.
    pub trade_cap: f64,
}

impl GameSpec {
    pub fn new(
        nets: [f64; GAME_SIZE],
        beta: f64,
        rho: f64,
        price_ratio: f64,
        trade_cap: f64,
    ) -> Result<Self> {
        make_prices(rho, price_ratio)?;
        if beta <= 0.0 {
            return Err(Error::InvalidParameter("beta must be positive".into()));
        }
        if trade_cap <= 0.0 {
            return Err(Error::InvalidParameter("trade cap must be positive".into()));
        }
        Ok(GameSpec {
            nets,
            beta,
            rho,
            price_ratio,
            trade_cap,
        })
    }

    /// Builds a spec from full microgrid states, taking net positions from
    /// the estimates (`use_estimates`) or the realized values.
    pub fn from_states(
        states: &[MicrogridState; GAME_SIZE],
        beta: f64,
        rho: f64,
        price_ratio: f64,
        trade_cap: f64,
        use_estimates: bool,
    ) -> Result<Self> {
        let nets = [0, 1, 2].map(|i| {
            if use_estimates {
                states[i].net_estimated()
            } else {
                states[i].net_actual()
            }
        });
        GameSpec::new(nets, beta, rho, price_ratio, trade_cap)
    }

    pub fn prices(&self) -> PriceVector {
        make_prices(self.rho, self.price_ratio).expect("validated at construction")
    }

    pub fn net_sum(&self) -> f64 {
        self.nets.iter().sum()
    }
}

/// Generation estimation error model: the realized generation equals the
/// estimate with probability `accuracy`, and misses by `+-delta` with equal
/// probability otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticModel {
    pub accuracy: f64,
    pub delta: f64,
}

impl StochasticModel {
    pub fn new(accuracy: f64, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(Error::InvalidParameter(format!(
                "estimation accuracy must lie in [0, 1], got {accuracy}"
            )));
        }
        if delta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "estimation delta must be non-negative, got {delta}"
            )));
        }
        Ok(StochasticModel { accuracy, delta })
    }

    /// The three (offset, probability mass) outcomes of the error model.
    pub fn outcomes(&self) -> [(f64, f64); 3] {
        let side = (1.0 - self.accuracy) / 2.0;
        [
            (0.0, self.accuracy),
            (-self.delta, side),
            (self.delta, side),
        ]
    }
}

/// Slack of the two existence inequalities; positive slack means satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionMargins {
    /// Upper inequality: supply-side bound minus `beta / rho`.
    pub upper: f64,
    /// Lower inequality: `beta / rho` minus the best peer net position bound.
    pub lower: f64,
}

/// A closed-form equilibrium candidate with its existence check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeResult {
    pub intents: IntentMatrix,
    /// Whether the existence condition holds; when false the intents are
    /// still the formula values, just unverified.
    pub exists: bool,
    pub margins: ConditionMargins,
}

// Shared building blocks of the deterministic closed form, kept in one place
// so the realized-trade amounts reuse the exact same floating-point path.

fn det_mg1_plant(spec: &GameSpec) -> f64 {
    spec.beta * (3.0 - 2.0 * spec.price_ratio) / (spec.rho * (1.0 - spec.price_ratio))
        - 3.0
        - spec.net_sum()
}

fn det_sell_intent(spec: &GameSpec, net: f64) -> f64 {
    spec.beta / spec.rho - 1.0 - net
}

/// Existence condition of the deterministic game, with both slacks.
///
/// Inequalities are strict and evaluated with exact comparison; callers can
/// judge near-boundary cases from the reported margins.
pub fn ne_condition_det(spec: &GameSpec) -> (bool, ConditionMargins) {
    let ratio = spec.beta / spec.rho;
    let left = (1.0 - spec.price_ratio) / (3.0 - 2.0 * spec.price_ratio) * (3.0 + spec.net_sum());
    let right = 1.0 + spec.nets[1].max(spec.nets[2]);
    let margins = ConditionMargins {
        upper: left - ratio,
        lower: ratio - right,
    };
    (left > ratio && ratio > right, margins)
}

/// Closed-form equilibrium of the deterministic three-MG game.
///
/// MG 1 trades with the plant and sells to both peers; MGs 2 and 3 trade
/// only with MG 1. Row layout: entry `[i][i]` is the plant, `[i][j]` the
/// trade with MG `j`.
pub fn ne_deterministic(spec: &GameSpec) -> NeResult {
    let (exists, margins) = ne_condition_det(spec);
    let mut x = IntentMatrix::zeros(GAME_SIZE, spec.trade_cap);
    x.set(0, 0, det_mg1_plant(spec));
    x.set(0, 1, det_sell_intent(spec, spec.nets[0]));
    x.set(0, 2, det_sell_intent(spec, spec.nets[0]));
    x.set(1, 0, det_sell_intent(spec, spec.nets[1]));
    x.set(2, 0, det_sell_intent(spec, spec.nets[2]));
    NeResult {
        intents: x,
        exists,
        margins,
    }
}

/// Realized trades of MG 1 at the deterministic equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mg1Trades {
    /// Trade with the plant (negative = sell).
    pub plant: f64,
    /// Trades with MGs 2 and 3 (negative = sell).
    pub to_peers: [f64; 2],
}

/// MG 1's realized trade amounts at the equilibrium, straight from the
/// closed form. Fails when the existence condition does not hold.
///
/// The arithmetic path is shared with [`ne_deterministic`], so the result is
/// floating-point identical to settling that profile in direct mode.
pub fn mg1_realized_trades(spec: &GameSpec) -> Result<Mg1Trades> {
    let (exists, margins) = ne_condition_det(spec);
    if !exists {
        return Err(Error::ConditionNotSatisfied(format!(
            "margins upper={} lower={}",
            margins.upper, margins.lower
        )));
    }
    Ok(Mg1Trades {
        plant: det_mg1_plant(spec),
        to_peers: [
            -det_sell_intent(spec, spec.nets[1]),
            -det_sell_intent(spec, spec.nets[2]),
        ],
    })
}

/// Expected utility of MG `mg` under the estimation error model.
///
/// Intents are settled once in direct mode (they do not depend on the
/// realization), then the utility is averaged over the MG's own generation
/// outcomes. Returns the value and a flag set when any outcome had a
/// non-positive log argument; such outcomes contribute negative infinity.
pub fn expected_utility(
    spec: &GameSpec,
    model: &StochasticModel,
    x: &IntentMatrix,
    mg: usize,
) -> (f64, bool) {
    let y = resolve_trades(x, SettlementMode::Direct);
    expected_row_utility(spec, model, y.row(mg), mg)
}

fn expected_row_utility(
    spec: &GameSpec,
    model: &StochasticModel,
    y_row: &[f64],
    mg: usize,
) -> (f64, bool) {
    let prices = spec.prices();
    let trade: f64 = y_row.iter().sum();
    let cash = trade_cash_outflow(y_row, mg, &prices);
    let base = 1.0 + spec.nets[mg] + trade;
    let mut value = 0.0;
    let mut infeasible = false;
    for (offset, mass) in model.outcomes() {
        if mass == 0.0 {
            continue;
        }
        let argument = base + offset;
        if argument <= 0.0 {
            infeasible = true;
            value = f64::NEG_INFINITY;
            break;
        }
        value += mass * (spec.beta * argument.ln() - cash);
    }
    (value, infeasible)
}

/// Options for the grid-based best-response search.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Grid step of the full scan over `[-cap, cap]` per component.
    pub step: f64,
    /// Optional finer step for a final pass around the candidate.
    pub refine_step: Option<f64>,
    /// Budget on grid points per axis for the full scan. When the requested
    /// step would exceed it the scan starts coarser and walks back down to
    /// `step` by repeated local refinement, which is reliable here because
    /// the utility is concave in the effective trades.
    pub max_points_per_axis: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            step: 0.5,
            refine_step: None,
            max_points_per_axis: 400,
        }
    }
}

/// Outcome of a best-response search for one MG.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    /// The best deviating intent row found for the MG.
    pub intent: Vec<f64>,
    /// Utility of the best deviation.
    pub utility: f64,
    /// Improvement over the given profile; at most a grid-resolution sliver
    /// when the profile is an equilibrium.
    pub gain: f64,
}

/// The trades MG `mg`'s intent row realizes against the fixed opponents,
/// in direct settlement.
fn resolved_row(x: &IntentMatrix, mg: usize) -> Vec<f64> {
    (0..x.n())
        .map(|j| {
            let intent = x.get(mg, j);
            if j == mg {
                return intent;
            }
            let opposite = x.get(j, mg);
            if intent < 0.0 && opposite > 0.0 {
                intent.max(-opposite)
            } else if intent > 0.0 && opposite < 0.0 {
                intent.min(-opposite)
            } else {
                0.0
            }
        })
        .collect()
}

/// Exhaustive grid search for MG `mg`'s best unilateral deviation.
///
/// All other rows of `x` are held fixed and trades settle in direct mode.
/// Every component of the MG's row ranges over `[-cap, cap]`. With a
/// stochastic `model` the objective is [`expected_utility`]; otherwise the
/// deterministic utility at the game's net positions.
pub fn best_response_search(
    spec: &GameSpec,
    x: &IntentMatrix,
    mg: usize,
    opts: &SearchOptions,
    model: Option<&StochasticModel>,
) -> BestResponse {
    assert_eq!(x.n(), GAME_SIZE, "search is defined for the three-MG game");
    assert!(opts.step > 0.0, "grid step must be positive");
    let cap = spec.trade_cap;

    // Base offsets and masses of the objective's log argument.
    let outcomes: Vec<(f64, f64)> = match model {
        Some(m) => m
            .outcomes()
            .into_iter()
            .filter(|&(_, mass)| mass > 0.0)
            .collect(),
        None => vec![(0.0, 1.0)],
    };

    let baseline = row_objective(spec, &resolved_row(x, mg), mg, &outcomes);

    // Choose the coarsest level that fits the point budget, then refine
    // back down: full scan at `levels[0]`, local scans at each finer level.
    let mut levels = vec![opts.step];
    while axis_points(cap, *levels.last().unwrap()) > opts.max_points_per_axis {
        let s = levels.last().unwrap() * 2.0;
        levels.push(s);
    }
    levels.reverse();

    let mut best_row = x.row(mg).to_vec();
    let mut best_value = f64::NEG_INFINITY;
    let mut first = true;
    for (idx, &step) in levels.iter().enumerate() {
        let (lo, hi) = if first {
            (vec![-cap; GAME_SIZE], vec![cap; GAME_SIZE])
        } else {
            // one-and-a-bit coarse cells around the candidate in each axis
            let prev = levels[idx - 1];
            let lo = best_row
                .iter()
                .map(|v| (v - 1.5 * prev).max(-cap))
                .collect();
            let hi = best_row.iter().map(|v| (v + 1.5 * prev).min(cap)).collect();
            (lo, hi)
        };
        let (row, value) = scan_box(spec, x, mg, &outcomes, &lo, &hi, step);
        if value > best_value {
            best_value = value;
            best_row = row;
        }
        first = false;
    }

    if let Some(refine) = opts.refine_step {
        let last = *levels.last().unwrap();
        let lo: Vec<f64> = best_row.iter().map(|v| (v - last).max(-cap)).collect();
        let hi: Vec<f64> = best_row.iter().map(|v| (v + last).min(cap)).collect();
        let (row, value) = scan_box(spec, x, mg, &outcomes, &lo, &hi, refine);
        if value > best_value {
            best_value = value;
            best_row = row;
        }
    }

    let gain = if baseline.is_finite() {
        best_value - baseline
    } else {
        f64::INFINITY
    };
    BestResponse {
        intent: best_row,
        utility: best_value,
        gain: gain.max(0.0),
    }
}

fn axis_points(cap: f64, step: f64) -> usize {
    ((2.0 * cap) / step).floor() as usize + 1
}

/// Objective for a fixed realized row (direct mode), shared by the scans.
fn row_objective(spec: &GameSpec, y_row: &[f64], mg: usize, outcomes: &[(f64, f64)]) -> f64 {
    let prices = spec.prices();
    let trade: f64 = y_row.iter().sum();
    let cash = trade_cash_outflow(y_row, mg, &prices);
    let base = 1.0 + spec.nets[mg] + trade;
    let mut value = 0.0;
    for &(offset, mass) in outcomes {
        let argument = base + offset;
        if argument <= 0.0 {
            return f64::NEG_INFINITY;
        }
        value += mass * (spec.beta * argument.ln() - cash);
    }
    value
}

/// Scans the axis-aligned box `[lo, hi]` at `step`, returning the best row.
///
/// For each grid value of a component the realized trade and its cash cost
/// are precomputed once, so the inner loop is a log and a handful of adds.
/// Ties prefer the candidate closest to the MG's current row (so an on-grid
/// optimum is returned exactly even along utility-flat components), then
/// break lexicographically; the ordering is total, which keeps the parallel
/// reduction deterministic. The outermost axis is scanned in parallel.
fn scan_box(
    spec: &GameSpec,
    x: &IntentMatrix,
    mg: usize,
    outcomes: &[(f64, f64)],
    lo: &[f64],
    hi: &[f64],
    step: f64,
) -> (Vec<f64>, f64) {
    let prices = spec.prices();
    // Per-axis tables of (intent, effective trade, cash outflow).
    let mut tables: Vec<Vec<(f64, f64, f64)>> = Vec::with_capacity(GAME_SIZE);
    for j in 0..GAME_SIZE {
        let points = ((hi[j] - lo[j]) / step).round() as usize + 1;
        let mut table = Vec::with_capacity(points);
        for k in 0..points {
            let intent = (lo[j] + k as f64 * step).min(hi[j]);
            let effective = if j == mg {
                intent // plant trade settles as announced in direct mode
            } else {
                let opposite = x.get(j, mg);
                if intent < 0.0 && opposite > 0.0 {
                    intent.max(-opposite)
                } else if intent > 0.0 && opposite < 0.0 {
                    intent.min(-opposite)
                } else {
                    0.0
                }
            };
            let price = if j == mg {
                if effective <= 0.0 {
                    prices.plant_sell
                } else {
                    prices.plant_buy
                }
            } else if effective <= 0.0 {
                prices.mg_sell
            } else {
                prices.mg_buy
            };
            table.push((intent, effective, effective * price));
        }
        tables.push(table);
    }

    let base = 1.0 + spec.nets[mg];
    let beta = spec.beta;
    let (t0, t1, t2) = (&tables[0], &tables[1], &tables[2]);
    let current = [x.get(mg, 0), x.get(mg, 1), x.get(mg, 2)];
    let distance =
        |row: &[f64; 3]| -> f64 { row.iter().zip(&current).map(|(a, b)| (a - b).abs()).sum() };
    // total order: higher value, then closer to the current row, then lex
    let better = |b: &(f64, f64, [f64; 3]), a: &(f64, f64, [f64; 3])| -> bool {
        if b.0 != a.0 {
            return b.0 > a.0;
        }
        if b.1 != a.1 {
            return b.1 < a.1;
        }
        for (x, y) in b.2.iter().zip(&a.2) {
            if x != y {
                return x < y;
            }
        }
        false
    };

    let best = t0
        .par_iter()
        .map(|&(i0, e0, c0)| {
            let mut local_best = (f64::NEG_INFINITY, f64::INFINITY, [i0, 0.0, 0.0]);
            for &(i1, e1, c1) in t1 {
                let partial_trade = e0 + e1;
                let partial_cash = c0 + c1;
                for &(i2, e2, c2) in t2 {
                    let cash = partial_cash + c2;
                    let mut value = 0.0;
                    for &(offset, mass) in outcomes {
                        let argument = base + partial_trade + e2 + offset;
                        if argument <= 0.0 {
                            value = f64::NEG_INFINITY;
                            break;
                        }
                        value += mass * (beta * argument.ln() - cash);
                    }
                    let row = [i0, i1, i2];
                    let candidate = (value, distance(&row), row);
                    if better(&candidate, &local_best) {
                        local_best = candidate;
                    }
                }
            }
            local_best
        })
        .reduce(
            || (f64::NEG_INFINITY, f64::INFINITY, [0.0; 3]),
            |a, b| if better(&b, &a) { b } else { a },
        );

    (best.2.to_vec(), best.0)
}

/// Closed-form candidate and numerical verdict for the stochastic game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticNe {
    /// The closed form evaluated verbatim; components can be non-finite for
    /// accuracies where its radicands turn negative.
    pub closed_form: IntentMatrix,
    /// True when every closed-form component is finite.
    pub closed_form_finite: bool,
    /// Existence-condition verdict (false whenever a side is non-finite).
    pub exists: bool,
    pub margins: ConditionMargins,
    /// Best-response fixed point of the expected utility on the grid.
    pub numerical: IntentMatrix,
    /// Whether the iteration reached a fixed point within its budget.
    pub numerical_converged: bool,
    /// Per-MG distance between closed form and numerical rows (max norm).
    pub row_gaps: [f64; GAME_SIZE],
    /// True when the closed form matches the numerical profile within the
    /// comparison tolerance.
    pub agrees: bool,
    /// Set when accuracy = 1 delegated to the deterministic solution.
    pub delegated_deterministic: bool,
}

/// Evaluates the stochastic closed form verbatim and checks it against a
/// numerical best-response fixed point of the expected utility.
///
/// `tolerance` is the per-component agreement threshold; a reasonable choice
/// is a small multiple of the search step.
pub fn ne_stochastic(
    spec: &GameSpec,
    model: &StochasticModel,
    opts: &SearchOptions,
    tolerance: f64,
) -> StochasticNe {
    if model.accuracy == 1.0 {
        let det = ne_deterministic(spec);
        return StochasticNe {
            closed_form: det.intents.clone(),
            closed_form_finite: det
                .intents
                .row(0)
                .iter()
                .chain(det.intents.row(1))
                .chain(det.intents.row(2))
                .all(|v| v.is_finite()),
            exists: det.exists,
            margins: det.margins,
            numerical: det.intents,
            numerical_converged: true,
            row_gaps: [0.0; GAME_SIZE],
            agrees: true,
            delegated_deterministic: true,
        };
    }

    let closed_form = stochastic_closed_form(spec, model);
    let (exists, margins) = stochastic_condition(spec, model);
    let closed_form_finite =
        (0..GAME_SIZE).all(|i| closed_form.row(i).iter().all(|v| v.is_finite()));

    // Numerical reference: iterate best responses of the expected utility,
    // anchored at the deterministic profile. The closed form is what is
    // being judged, so it is never used as the starting point.
    let start = ne_deterministic(spec).intents;
    let (numerical, numerical_converged) =
        iterate_best_responses(spec, Some(model), start, opts, 8, opts.step);

    let mut row_gaps = [f64::INFINITY; GAME_SIZE];
    for i in 0..GAME_SIZE {
        if closed_form.row(i).iter().all(|v| v.is_finite()) {
            row_gaps[i] = closed_form
                .row(i)
                .iter()
                .zip(numerical.row(i))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
        }
    }
    let agrees = closed_form_finite && row_gaps.iter().all(|g| *g <= tolerance);

    StochasticNe {
        closed_form,
        closed_form_finite,
        exists,
        margins,
        numerical,
        numerical_converged,
        row_gaps,
        agrees,
        delegated_deterministic: false,
    }
}

/// Repeatedly replaces each row with its grid best response until no row
/// moves more than `move_tolerance`, up to `max_rounds`.
pub fn iterate_best_responses(
    spec: &GameSpec,
    model: Option<&StochasticModel>,
    start: IntentMatrix,
    opts: &SearchOptions,
    max_rounds: usize,
    move_tolerance: f64,
) -> (IntentMatrix, bool) {
    let mut profile = clamp_to_cap(start, spec.trade_cap);
    for _ in 0..max_rounds {
        let mut moved = 0.0f64;
        for mg in 0..GAME_SIZE {
            let response = best_response_search(spec, &profile, mg, opts, model);
            for (j, v) in response.intent.iter().enumerate() {
                moved = moved.max((profile.get(mg, j) - v).abs());
            }
            profile.set_row(mg, &response.intent);
        }
        if moved <= move_tolerance {
            return (profile, true);
        }
    }
    (profile, false)
}

fn clamp_to_cap(mut x: IntentMatrix, cap: f64) -> IntentMatrix {
    for i in 0..x.n() {
        let row: Vec<f64> = x
            .row(i)
            .iter()
            .map(|v| {
                if v.is_finite() {
                    v.clamp(-cap, cap)
                } else {
                    0.0
                }
            })
            .collect();
        x.set_row(i, &row);
    }
    x
}

// The stochastic closed form, with its differing
// radicands across components. Negative radicands yield NaN on purpose; the
// caller reports them instead of guessing a correction.
fn stochastic_closed_form(spec: &GameSpec, model: &StochasticModel) -> IntentMatrix {
    let p = model.accuracy;
    let beta = spec.beta;
    let rho = spec.rho;
    let eps = spec.price_ratio;
    let pp = p * p - p;

    let mut x = IntentMatrix::zeros(GAME_SIZE, spec.trade_cap);

    let plant = 3.0 * p * (1.0 - eps) / (2.0 * beta * (1.0 - p))
        - (pp + rho * rho * (1.0 - eps) * (1.0 - eps) / (4.0 * beta * beta)).sqrt() / (1.0 - p)
        - 3.0
        - spec.net_sum();
    let to_mg2 = -spec.nets[0] - 1.0
        + ((pp + rho * rho / (4.0 * beta)).sqrt() + rho / (2.0 * beta)) / (1.0 - p);
    let to_mg3 = ((pp + rho * rho / (4.0 * beta)).sqrt() - rho / (2.0 * beta)) / (p - 1.0)
        - 1.0
        - spec.nets[0];
    x.set(0, 0, plant);
    x.set(0, 1, to_mg2);
    x.set(0, 2, to_mg3);

    for i in 1..GAME_SIZE {
        let buy = ((pp + rho * rho / (4.0 * beta * beta)).sqrt() + rho / (2.0 * beta)) / (1.0 - p)
            - 1.0
            - spec.nets[i];
        x.set(i, 0, buy);
    }
    x
}

fn stochastic_condition(spec: &GameSpec, model: &StochasticModel) -> (bool, ConditionMargins) {
    let p = model.accuracy;
    let beta = spec.beta;
    let rho = spec.rho;
    let eps = spec.price_ratio;
    let pp = p * p - p;

    let upper_lhs = 3.0 * p * (1.0 - eps) / (2.0 * beta)
        - (pp + rho * rho * (1.0 - eps) * (1.0 - eps) / (4.0 * beta * beta)).sqrt();
    let upper_rhs = (1.0 - p) * (3.0 + spec.net_sum());
    let lower_lhs = (pp + rho * rho / (4.0 * beta * beta)).sqrt() + rho / (2.0 * beta);
    let lower_rhs = (1.0 - p) * (1.0 + spec.nets[1].max(spec.nets[2]));

    let margins = ConditionMargins {
        upper: upper_rhs - upper_lhs,
        lower: lower_lhs - lower_rhs,
    };
    (upper_lhs <= upper_rhs && lower_lhs > lower_rhs, margins)
}
