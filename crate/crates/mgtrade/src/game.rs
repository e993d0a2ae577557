//! Pure game mechanics: prices, trade negotiation, battery dynamics, and
//! utilities.
//!
//! Sign convention throughout: a positive trade amount means the microgrid
//! buys energy, a negative amount means it sells. Entry `[i][j]` of an intent
//! or outcome matrix is MG `i`'s trade with MG `j`; the diagonal `[i][i]` is
//! MG `i`'s trade with the power plant.
//!
//! All functions here are pure; they can be called concurrently from any
//! number of threads.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The four trading prices of one slot.
///
/// `mg_sell`/`mg_buy` apply to MG-to-MG trades (selling/buying), and
/// `plant_sell`/`plant_buy` to trades with the power plant. The local market
/// favors MG-to-MG trade: `mg_sell > plant_sell` and `mg_buy < plant_buy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceVector {
    pub mg_sell: f64,
    pub mg_buy: f64,
    pub plant_sell: f64,
    pub plant_buy: f64,
}

impl PriceVector {
    pub fn new(mg_sell: f64, mg_buy: f64, plant_sell: f64, plant_buy: f64) -> Result<Self> {
        let v = PriceVector {
            mg_sell,
            mg_buy,
            plant_sell,
            plant_buy,
        };
        if !(v.mg_sell > 0.0 && v.mg_buy > 0.0 && v.plant_sell > 0.0 && v.plant_buy > 0.0) {
            return Err(Error::InvalidParameter(
                "all prices must be positive".into(),
            ));
        }
        if !(v.mg_sell > v.plant_sell && v.mg_buy < v.plant_buy) {
            return Err(Error::InvalidParameter(
                "local market must favor MG-to-MG trade (mg_sell > plant_sell, mg_buy < plant_buy)"
                    .into(),
            ));
        }
        Ok(v)
    }
}

/// Builds the symmetric price vector `[rho, rho, rho(1-eps), rho(1+eps)]`
/// from the base price `rho` and the plant price ratio `eps`.
pub fn make_prices(rho: f64, epsilon: f64) -> Result<PriceVector> {
    if !rho.is_finite() || rho <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "price rho must be positive, got {rho}"
        )));
    }
    if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "price ratio must lie strictly between 0 and 1, got {epsilon}"
        )));
    }
    Ok(PriceVector {
        mg_sell: rho,
        mg_buy: rho,
        plant_sell: rho * (1.0 - epsilon),
        plant_buy: rho * (1.0 + epsilon),
    })
}

/// One microgrid's per-slot view: estimated and actual demand/generation,
/// battery level, and its gain coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicrogridState {
    pub demand_est: f64,
    pub generation_est: f64,
    pub battery: f64,
    pub demand_actual: f64,
    pub generation_actual: f64,
    pub beta: f64,
}

impl MicrogridState {
    /// Checks the state against a battery capacity and a peak demand bound.
    pub fn validate(&self, capacity: f64, peak_demand: f64) -> Result<()> {
        if !(self.battery >= 0.0 && self.battery <= capacity) {
            return Err(Error::Domain(format!(
                "battery {} outside [0, {capacity}]",
                self.battery
            )));
        }
        if !(0.0..=peak_demand).contains(&self.demand_est)
            || !(0.0..=peak_demand).contains(&self.demand_actual)
        {
            return Err(Error::Domain("demand outside [0, peak]".into()));
        }
        if self.generation_est < 0.0 || self.generation_actual < 0.0 {
            return Err(Error::Domain("generation must be non-negative".into()));
        }
        if self.beta <= 0.0 {
            return Err(Error::Domain("beta must be positive".into()));
        }
        Ok(())
    }

    /// Net position from estimates: `battery + generation_est - demand_est`.
    pub fn net_estimated(&self) -> f64 {
        self.battery + self.generation_est - self.demand_est
    }

    /// Net position from realized values.
    pub fn net_actual(&self) -> f64 {
        self.battery + self.generation_actual - self.demand_actual
    }
}

/// Plant settlement rule for the diagonal of the outcome matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettlementMode {
    /// The plant trade is the announced diagonal intent, unchanged.
    Direct,
    /// Unmatched intent is routed to the plant: the plant trade is the row's
    /// total intent minus the realized MG-to-MG trades, clamped to `n * cap`.
    Residual,
}

/// Square matrix of announced trading intents, with a per-link cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentMatrix {
    n: usize,
    cap: f64,
    entries: Vec<f64>,
}

impl IntentMatrix {
    pub fn zeros(n: usize, cap: f64) -> Self {
        IntentMatrix {
            n,
            cap,
            entries: vec![0.0; n * n],
        }
    }

    /// Builds from row vectors, checking `|x[i][j]| <= cap`.
    pub fn from_rows(rows: &[Vec<f64>], cap: f64) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: format!("{n} entries in row {i}"),
                    found: format!("{}", row.len()),
                });
            }
            entries.extend_from_slice(row);
        }
        let m = IntentMatrix { n, cap, entries };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, &v) in self.entries.iter().enumerate() {
            if !v.is_finite() || v.abs() > self.cap {
                return Err(Error::Domain(format!(
                    "intent [{}][{}] = {v} exceeds cap {}",
                    k / self.n,
                    k % self.n,
                    self.cap
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn set_row(&mut self, i: usize, row: &[f64]) {
        self.entries[i * self.n..(i + 1) * self.n].copy_from_slice(row);
    }
}

/// Square matrix of realized trades after negotiation.
///
/// Off-diagonal entries are antisymmetric: `y[i][j] + y[j][i] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl OutcomeMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Plant trade of MG `i` (the diagonal entry).
    pub fn plant_trade(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    /// Total realized trade of row `i`, plant included.
    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }
}

/// Settles a matrix of intents into realized trades.
///
/// For `i != j` a trade happens only when the two intents have opposite
/// signs, and the smaller magnitude wins; otherwise the entry is zero. The
/// diagonal follows the [`SettlementMode`].
pub fn resolve_trades(x: &IntentMatrix, mode: SettlementMode) -> OutcomeMatrix {
    let n = x.n;
    let mut y = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let xij = x.get(i, j);
            let xji = x.get(j, i);
            y[i * n + j] = if xij < 0.0 && xji > 0.0 {
                xij.max(-xji)
            } else if xij > 0.0 && xji < 0.0 {
                xij.min(-xji)
            } else {
                0.0
            };
        }
    }
    for i in 0..n {
        let diag = match mode {
            SettlementMode::Direct => x.get(i, i),
            SettlementMode::Residual => {
                let intended: f64 = x.row(i).iter().sum();
                let matched: f64 = (0..n).filter(|&j| j != i).map(|j| y[i * n + j]).sum();
                let bound = x.cap * n as f64;
                (intended - matched).clamp(-bound, bound)
            }
        };
        y[i * n + i] = diag;
    }
    OutcomeMatrix { n, entries: y }
}

/// Result of applying one slot's flows to a battery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryTransition {
    pub level: f64,
    pub curtailed: f64,
    pub shortfall: f64,
}

/// Advances a battery by one slot: realized generation minus demand plus the
/// row's total trade, clamped to `[0, capacity]`. Energy lost at the top is
/// reported as `curtailed`, unmet energy at the bottom as `shortfall`.
pub fn battery_update(state: &MicrogridState, y_row: &[f64], capacity: f64) -> BatteryTransition {
    let trade: f64 = y_row.iter().sum();
    let raw = state.battery + state.generation_actual - state.demand_actual + trade;
    BatteryTransition {
        level: raw.clamp(0.0, capacity),
        curtailed: (raw - capacity).max(0.0),
        shortfall: (-raw).max(0.0),
    }
}

/// Logarithmic storage gain `beta * ln(1 + b)`.
pub fn energy_gain(b: f64, beta: f64) -> Result<f64> {
    if b < 0.0 {
        return Err(Error::Domain(format!(
            "energy gain undefined for negative level {b}"
        )));
    }
    if beta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    Ok(beta * (1.0 + b).ln())
}

/// One microgrid's utility for a realized trade row.
///
/// The gain term uses the post-trade energy position built from actual
/// generation and demand; the cash terms bill MG trades at the MG prices and
/// the plant trade (entry `plant_idx` of the row) at the plant prices. A zero
/// trade is billed at the selling price, which is value-neutral.
///
/// Fails with [`Error::InfeasibleState`] when the log argument is not
/// positive.
pub fn utility(
    state: &MicrogridState,
    y_row: &[f64],
    plant_idx: usize,
    prices: &PriceVector,
) -> Result<f64> {
    let trade: f64 = y_row.iter().sum();
    let log_argument = 1.0 + state.battery + state.generation_actual - state.demand_actual + trade;
    if log_argument <= 0.0 {
        return Err(Error::InfeasibleState { log_argument });
    }
    Ok(state.beta * log_argument.ln() - trade_cash_outflow(y_row, plant_idx, prices))
}

/// Utility with the gain argument clamped at zero instead of failing.
///
/// Returns the value and whether clamping occurred; a clamped gain
/// contributes nothing. This is the simulator-facing variant.
pub fn utility_clamped(
    state: &MicrogridState,
    y_row: &[f64],
    plant_idx: usize,
    prices: &PriceVector,
) -> (f64, bool) {
    let trade: f64 = y_row.iter().sum();
    let log_argument = 1.0 + state.battery + state.generation_actual - state.demand_actual + trade;
    let cash = trade_cash_outflow(y_row, plant_idx, prices);
    if log_argument <= 0.0 {
        (-cash, true)
    } else {
        (state.beta * log_argument.ln() - cash, false)
    }
}

/// Net cash paid for a trade row (negative when the row earns money).
pub fn trade_cash_outflow(y_row: &[f64], plant_idx: usize, prices: &PriceVector) -> f64 {
    let mut cash = 0.0;
    for (j, &y) in y_row.iter().enumerate() {
        let price = if j == plant_idx {
            if y <= 0.0 {
                prices.plant_sell
            } else {
                prices.plant_buy
            }
        } else if y <= 0.0 {
            prices.mg_sell
        } else {
            prices.mg_buy
        };
        cash += y * price;
    }
    cash
}
