use std::fs;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use super::{Built, Experiment, ExperimentConfig, Method};
use crate::counting::{count, default_budget, CountMode, CountOptions, CountResult, OrbitContext, Quantity, CSV_HEADER};
use crate::error::{Error, Result};
use crate::estimators::{
    box_count, box_report, damping_witness, growth_rate, lap_series, markov_series, mdim_estimate,
    orbit_net, DimensionReport, GrowthSeries, NetRule, RateEntry,
};
use crate::spaces::sample_net;
use crate::systems::{MarkovPartition, PiecewiseAffineMap, System};

/// One line of the count CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub system_id: String,
    pub quantity: String,
    pub n: usize,
    pub epsilon: f64,
    pub mode: String,
    /// Empty when the count is not representable or was not computed.
    pub count: String,
    pub log_count: Option<f64>,
    pub wall_ms: u128,
}

impl CsvRow {
    fn from_result(system_id: &str, r: &CountResult, wall_ms: u128) -> Self {
        Self {
            system_id: system_id.to_string(),
            quantity: r.quantity.to_string(),
            n: r.horizon,
            epsilon: r.epsilon,
            mode: r.mode.to_string(),
            count: r.count.to_string(),
            log_count: Some(r.log_count()),
            wall_ms,
        }
    }

    fn from_log(system_id: &str, quantity: &str, n: usize, epsilon: f64, log_count: f64, wall_ms: u128) -> Self {
        let value = log_count.exp();
        Self {
            system_id: system_id.to_string(),
            quantity: quantity.to_string(),
            n,
            epsilon,
            mode: CountMode::Exact.to_string(),
            count: if value < 9.0e15 { format!("{}", value.round()) } else { String::new() },
            log_count: Some(log_count),
            wall_ms,
        }
    }

    /// The CSV line without the trailing newline.
    pub fn line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.system_id,
            self.quantity,
            self.n,
            self.epsilon,
            self.mode,
            self.count,
            self.log_count.map(|l| l.to_string()).unwrap_or_default(),
            self.wall_ms
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub rows: Vec<CsvRow>,
    pub summary: serde_json::Value,
    pub report: Option<DimensionReport>,
    /// Set when some cells ran out of budget; their rows have mode `budget_exceeded`.
    pub partial: Option<String>,
}

impl RunOutcome {
    pub fn csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for row in &self.rows {
            out.push_str(&row.line());
            out.push('\n');
        }
        out
    }

    pub fn summary_text(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("json")
    }

    pub fn write(&self, config: &ExperimentConfig) -> Result<()> {
        if let Some(path) = &config.output.csv {
            fs::write(path, self.csv())?;
        }
        if let Some(path) = &config.output.summary {
            fs::write(path, self.summary_text() + "\n")?;
        }
        Ok(())
    }
}

/// Growth rates at each scale, with the count rows behind them.
pub(super) struct Rates {
    pub entries: Vec<RateEntry>,
    pub rows: Vec<CsvRow>,
    pub partial: Option<String>,
}

/// Separated-set counts over every `(ε, n)` cell in parallel, returned in
/// schedule order.
pub(super) fn sep_rates(
    system_id: &str,
    system: &System,
    epsilons: &[f64],
    horizons: &[usize],
    mesh_for: impl Fn(f64) -> f64 + Sync,
    opts: &CountOptions,
    burn_in: usize,
) -> Result<Rates> {
    let budget = default_budget();
    let cells: Vec<(f64, usize)> = epsilons
        .iter()
        .flat_map(|&e| horizons.iter().map(move |&n| (e, n)))
        .collect();
    let outcomes: Vec<(Result<CountResult>, u128)> = cells
        .par_iter()
        .map(|&(eps, n)| {
            let start = Instant::now();
            let rule = NetRule {
                mesh: mesh_for(eps),
                max_ratio: 0.25,
            };
            let result = orbit_net(system, n, &rule)
                .and_then(|net| OrbitContext::with_budget(system, n, net, budget))
                .and_then(|ctx| count(&ctx, Quantity::Sep, eps, opts));
            (result, start.elapsed().as_millis())
        })
        .collect();
    let mut rates = Rates {
        entries: Vec::new(),
        rows: Vec::new(),
        partial: None,
    };
    let mut cells = outcomes.into_iter().zip(cells);
    for &eps in epsilons {
        let mut results = Vec::new();
        for ((outcome, wall), (_, n)) in cells.by_ref().take(horizons.len()) {
            match outcome {
                Ok(r) => {
                    rates.rows.push(CsvRow::from_result(system_id, &r, wall));
                    results.push(r);
                }
                Err(Error::BudgetExceeded { budget, needed }) => {
                    rates.partial.get_or_insert_with(|| {
                        format!("budget {budget} exceeded (needed {needed}); raise MDIMLAB_BUDGET")
                    });
                    rates.rows.push(CsvRow {
                        system_id: system_id.to_string(),
                        quantity: Quantity::Sep.to_string(),
                        n,
                        epsilon: eps,
                        mode: "budget_exceeded".into(),
                        count: String::new(),
                        log_count: None,
                        wall_ms: wall,
                    });
                }
                Err(e) => return Err(e),
            }
        }
        if results.len() == horizons.len() {
            let series = GrowthSeries::from_counts(eps, &results)?;
            rates.entries.push(RateEntry::from_series(&series, burn_in)?);
        }
    }
    Ok(rates)
}

/// Itinerary counts through Markov components wider than each `ε`.
pub(super) fn markov_rates(
    system_id: &str,
    map: &PiecewiseAffineMap,
    epsilons: &[f64],
    horizons: &[usize],
    burn_in: usize,
) -> Result<Rates> {
    let partition = MarkovPartition::new(map, 1e-12)?;
    let mut rates = Rates {
        entries: Vec::new(),
        rows: Vec::new(),
        partial: None,
    };
    for &eps in epsilons {
        let start = Instant::now();
        let series = markov_series(&partition, eps, horizons)?;
        let wall = start.elapsed().as_millis();
        for s in series.samples() {
            rates
                .rows
                .push(CsvRow::from_log(system_id, "markov_paths", s.horizon, eps, s.log_count, wall));
        }
        rates.entries.push(RateEntry::from_series(&series, burn_in)?);
    }
    Ok(rates)
}

fn interval_pam(built: &Built) -> Result<PiecewiseAffineMap> {
    match built {
        Built::Map(m) => m.to_pam(),
        _ => Err(Error::InvalidParameter("this method needs an interval or circle map".into())),
    }
}

pub(super) fn rates_for(
    config: &ExperimentConfig,
    system_id: &str,
    built: &Built,
    method: Method,
) -> Result<Rates> {
    let epsilons = config.epsilons()?;
    let horizons = config.horizon_list()?;
    match method {
        Method::Markov => markov_rates(system_id, &interval_pam(built)?, &epsilons, &horizons, config.burn_in),
        Method::Sep => {
            let system = built
                .system()
                .ok_or_else(|| Error::InvalidParameter("separated sets need a system, not a bare space".into()))?;
            let net = config.net;
            sep_rates(
                system_id,
                &system,
                &epsilons,
                &horizons,
                move |e| net.mesh_for(e),
                &config.count_options(),
                config.burn_in,
            )
        }
        Method::Lap => Err(Error::InvalidParameter("lap numbers carry no scale".into())),
    }
}

fn rate_json(entries: &[RateEntry]) -> serde_json::Value {
    entries
        .iter()
        .map(|e| {
            json!({
                "epsilon": e.epsilon,
                "rate": e.rate,
                "kind": e.kind.label(),
                "max_residual": e.fit.map(|f| f.max_residual),
            })
        })
        .collect()
}

/// Runs one experiment. Cells that exceed the distance budget are
/// reported in [`RunOutcome::partial`] rather than as an error.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let construction = config.construction()?;
    let system_id = config.system_id()?;
    let built = construction.build(config.rng_seed)?;
    let mut summary = json!({
        "system_id": system_id,
        "construction": config.system,
        "quantity": config.quantity,
        "rng_seed": config.rng_seed,
    });
    let mut outcome = RunOutcome {
        rows: Vec::new(),
        summary: json!(null),
        report: None,
        partial: None,
    };
    match config.quantity {
        Experiment::Entropy => {
            let method = config.rate_method(&built);
            summary["method"] = json!(method);
            if method == Method::Lap {
                let horizons = config.horizon_list()?;
                let start = Instant::now();
                let series = lap_series(&interval_pam(&built)?, &horizons)?;
                let wall = start.elapsed().as_millis();
                for s in series.samples() {
                    outcome
                        .rows
                        .push(CsvRow::from_log(&system_id, "lap", s.horizon, 0.0, s.log_count, wall));
                }
                let fit = growth_rate(&series, config.burn_in)?;
                summary["rate"] = json!(fit.rate);
                summary["max_residual"] = json!(fit.max_residual);
            } else {
                let rates = rates_for(config, &system_id, &built, method)?;
                let best = rates.entries.iter().map(|e| e.rate).fold(f64::NAN, f64::max);
                summary["rates"] = rate_json(&rates.entries);
                summary["rate"] = json!(best);
                outcome.rows = rates.rows;
                outcome.partial = rates.partial;
            }
        }
        Experiment::Mdim => {
            let method = config.rate_method(&built);
            summary["method"] = json!(method);
            let rates = rates_for(config, &system_id, &built, method)?;
            summary["rates"] = rate_json(&rates.entries);
            outcome.rows = rates.rows;
            outcome.partial = rates.partial;
            if outcome.partial.is_none() {
                let report = mdim_estimate(&rates.entries, config.window)?;
                summary["estimate"] = report.summary_json();
                outcome.report = Some(report);
            }
        }
        Experiment::Boxdim => {
            let space = built.space();
            let epsilons = config.epsilons()?;
            let opts = config.count_options();
            let covers: Vec<(Result<CountResult>, u128)> = epsilons
                .par_iter()
                .map(|&eps| {
                    let start = Instant::now();
                    let r = box_count(&space, |m| sample_net(&space, m), eps, &opts);
                    (r, start.elapsed().as_millis())
                })
                .collect();
            let mut results = Vec::new();
            for (r, wall) in covers {
                let r = r?;
                outcome.rows.push(CsvRow::from_result(&system_id, &r, wall));
                results.push(r);
            }
            let report = box_report(&results, config.window)?;
            summary["estimate"] = report.summary_json();
            outcome.report = Some(report);
        }
        Experiment::Damping => {
            let Built::Sequence(seq) = &built else {
                return Err(Error::InvalidParameter("damping needs a non-autonomous sequence".into()));
            };
            let probes = config.damping.probes.max(2);
            let grid: Vec<f64> = (0..probes).map(|i| i as f64 / (probes - 1) as f64).collect();
            let table = damping_witness(seq, &grid, config.damping.k_max)?;
            let first_below = |t: f64| table.iter().find(|(_, s)| *s < t).map(|(k, _)| *k);
            summary["first_k_below"] = json!({
                "0.1": first_below(0.1),
                "0.01": first_below(0.01),
                "0.001": first_below(0.001),
            });
            summary["sup_table"] = json!(table);
            if config.epsilon_schedule.is_some() && config.horizons.is_some() {
                let rates = rates_for(config, &system_id, &built, Method::Sep)?;
                summary["rates"] = rate_json(&rates.entries);
                outcome.rows = rates.rows;
                outcome.partial = rates.partial;
            }
        }
        Experiment::PerturbationSweep => {
            let base = interval_pam(&built)?;
            let params = config.sweep.as_ref().expect("validated");
            let epsilons = config.epsilons()?;
            let horizons = match config.horizons {
                Some(h) => h.horizons()?,
                None => (1..=20).collect(),
            };
            let (rows, csv) = super::sweep::sweep_with_rows(
                &system_id,
                &base,
                params.splice.as_ref(),
                &params.deltas,
                &epsilons,
                &horizons,
                config.window,
                config.burn_in,
            )?;
            summary["rows"] = json!(rows);
            outcome.rows = csv;
        }
    }
    if let Some(p) = &outcome.partial {
        summary["partial"] = json!(p);
    }
    outcome.summary = summary;
    Ok(outcome)
}
