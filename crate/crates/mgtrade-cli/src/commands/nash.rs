//! `mgtrade nash`: closed-form equilibrium of one game state, with
//! grid-search best-response verification.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use mgtrade::equilibrium::{
    best_response_search, mg1_realized_trades, ne_deterministic, ne_stochastic, GameSpec,
    SearchOptions, StochasticModel, GAME_SIZE,
};
use mgtrade::game::MicrogridState;

use crate::manifest::{prepare_out_dir, RunManifest};

#[derive(Debug, Args)]
pub struct NashArgs {
    /// Game-state JSON document.
    #[arg(long)]
    pub config: PathBuf,
    /// Verify the stochastic game instead of the deterministic one.
    #[arg(long)]
    pub stochastic: bool,
    /// Full-scan grid step (kWh).
    #[arg(long, default_value_t = 0.5)]
    pub grid: f64,
    /// Refinement step near the candidate (kWh).
    #[arg(long, default_value_t = 0.05)]
    pub refine: f64,
    /// Relative deviation-gain tolerance (fraction of |utility|).
    #[arg(long, default_value_t = 0.005)]
    pub tol_rel: f64,
    /// Absolute deviation-gain tolerance.
    #[arg(long, default_value_t = 0.1)]
    pub tol_abs: f64,
    /// Optional report directory (writes nash_report.json + manifest.json).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

/// One microgrid's slot values in the game-state document.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct MgEntry {
    battery: f64,
    generation_est: f64,
    demand_est: f64,
    generation_actual: Option<f64>,
    demand_actual: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NashConfig {
    beta: f64,
    rho: f64,
    price_ratio: f64,
    #[serde(default = "default_cap")]
    trade_cap: f64,
    #[serde(default = "default_true")]
    use_estimates: bool,
    mgs: Vec<MgEntry>,
    stochastic: Option<StochasticModel>,
}

fn default_cap() -> f64 {
    1000.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize)]
struct MgVerification {
    mg: usize,
    utility_at_profile: f64,
    best_gain: f64,
    tolerance: f64,
    best_deviation: Vec<f64>,
    passes: bool,
}

#[derive(Debug, Serialize)]
struct NashReport {
    spec: GameSpec,
    exists: bool,
    margin_upper: f64,
    margin_lower: f64,
    intents: Vec<Vec<f64>>,
    realized_mg1: Option<mgtrade::equilibrium::Mg1Trades>,
    verification: Vec<MgVerification>,
    verified: bool,
    stochastic: Option<StochasticSection>,
}

#[derive(Debug, Serialize)]
struct StochasticSection {
    model: StochasticModel,
    closed_form: Vec<Vec<f64>>,
    closed_form_finite: bool,
    exists: bool,
    margin_upper: f64,
    margin_lower: f64,
    numerical: Vec<Vec<f64>>,
    numerical_converged: bool,
    row_gaps: Vec<f64>,
    agrees: bool,
    delegated_deterministic: bool,
}

pub fn run(args: NashArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let config: NashConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.config.display()))?;
    if config.mgs.len() != GAME_SIZE {
        bail!(
            "the closed forms cover {GAME_SIZE} MGs; config describes {}",
            config.mgs.len()
        );
    }
    let states: [MicrogridState; GAME_SIZE] = [0, 1, 2].map(|i| {
        let mg = &config.mgs[i];
        MicrogridState {
            demand_est: mg.demand_est,
            generation_est: mg.generation_est,
            battery: mg.battery,
            demand_actual: mg.demand_actual.unwrap_or(mg.demand_est),
            generation_actual: mg.generation_actual.unwrap_or(mg.generation_est),
            beta: config.beta,
        }
    });
    let spec = GameSpec::from_states(
        &states,
        config.beta,
        config.rho,
        config.price_ratio,
        config.trade_cap,
        config.use_estimates,
    )?;

    let opts = SearchOptions {
        step: args.grid,
        refine_step: Some(args.refine),
        max_points_per_axis: 400,
    };
    let result = ne_deterministic(&spec);
    let mut rows = Vec::new();
    for i in 0..GAME_SIZE {
        rows.push(result.intents.row(i).to_vec());
    }

    println!(
        "nets: {:?}   beta/rho = {}",
        spec.nets,
        spec.beta / spec.rho
    );
    println!(
        "condition: {} (upper margin {:.6}, lower margin {:.6})",
        if result.exists { "holds" } else { "fails" },
        result.margins.upper,
        result.margins.lower
    );
    for (i, row) in rows.iter().enumerate() {
        println!(
            "x{}* = [{}]",
            i + 1,
            row.iter()
                .map(|v| format!("{v:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    let realized = mg1_realized_trades(&spec).ok();
    if let Some(tr) = &realized {
        println!(
            "realized MG1 trades: plant {:.3}, to MG2 {:.3}, to MG3 {:.3}",
            tr.plant, tr.to_peers[0], tr.to_peers[1]
        );
    }

    let mut verification = Vec::new();
    let mut verified = result.exists;
    for mg in 0..GAME_SIZE {
        let response = best_response_search(&spec, &result.intents, mg, &opts, None);
        let baseline = response.utility - response.gain;
        let tolerance = (args.tol_rel * baseline.abs()).max(args.tol_abs);
        let passes = response.gain <= tolerance;
        verified &= passes;
        println!(
            "best-response gap MG{}: {:.6} (tolerance {:.6}) {}",
            mg + 1,
            response.gain,
            tolerance,
            if passes { "ok" } else { "IMPROVABLE" }
        );
        verification.push(MgVerification {
            mg,
            utility_at_profile: baseline,
            best_gain: response.gain,
            tolerance,
            best_deviation: response.intent,
            passes,
        });
    }

    let stochastic = if args.stochastic {
        let model = config
            .stochastic
            .context("--stochastic needs a \"stochastic\" section in the config")?;
        let report = ne_stochastic(&spec, &model, &opts, (2.0 * args.grid).max(1.0));
        println!(
            "stochastic closed form ({}finite), condition {}; numerical {} (row gaps {:?})",
            if report.closed_form_finite {
                ""
            } else {
                "NOT "
            },
            if report.exists { "holds" } else { "fails" },
            if report.agrees { "agrees" } else { "disagrees" },
            report.row_gaps
        );
        verified = report.delegated_deterministic && verified || report.agrees;
        Some(StochasticSection {
            model,
            closed_form: (0..GAME_SIZE)
                .map(|i| report.closed_form.row(i).to_vec())
                .collect(),
            closed_form_finite: report.closed_form_finite,
            exists: report.exists,
            margin_upper: report.margins.upper,
            margin_lower: report.margins.lower,
            numerical: (0..GAME_SIZE)
                .map(|i| report.numerical.row(i).to_vec())
                .collect(),
            numerical_converged: report.numerical_converged,
            row_gaps: report.row_gaps.to_vec(),
            agrees: report.agrees,
            delegated_deterministic: report.delegated_deterministic,
        })
    } else {
        None
    };

    let report = NashReport {
        spec,
        exists: result.exists,
        margin_upper: result.margins.upper,
        margin_lower: result.margins.lower,
        intents: rows,
        realized_mg1: realized,
        verification,
        verified,
        stochastic,
    };
    println!(
        "verdict: {}",
        if verified { "verified" } else { "not verified" }
    );

    if let Some(out) = &args.out {
        prepare_out_dir(out, args.force)?;
        let report_path = out.join("nash_report.json");
        std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
        let mut manifest = RunManifest::new("nash", None, serde_json::from_str(&text)?);
        manifest.add_input(&args.config)?;
        manifest.add_output(&report_path)?;
        manifest.write(out)?;
    }

    Ok(if verified { 0 } else { 2 })
}
