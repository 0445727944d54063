//! Growth rates, metric mean dimension and box dimension from finite counts.

use serde::{Deserialize, Serialize};

use crate::counting::{count, CountMode, CountOptions, CountResult, OrbitContext, Quantity};
use crate::error::{Error, Result};
use crate::spaces::{sample_net, Point, Space};
use crate::systems::{MapSystem, MarkovPartition, NonAutonomousSystem, PiecewiseAffineMap, System};

/// Default trailing window for liminf/limsup approximations.
pub const DEFAULT_WINDOW: usize = 3;
/// Default number of leading horizons dropped before regression.
pub const DEFAULT_BURN_IN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub horizon: usize,
    pub log_count: f64,
    pub mode: CountMode,
}

/// `log` counts at one scale, indexed by horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSeries {
    pub epsilon: f64,
    samples: Vec<Sample>,
}

impl GrowthSeries {
    /// Requires strictly increasing horizons and nondecreasing log counts.
    pub fn new(epsilon: f64, samples: Vec<Sample>) -> Result<Self> {
        if samples.windows(2).any(|w| w[1].horizon <= w[0].horizon) {
            return Err(Error::NonMonotoneSeries("horizons must increase strictly".into()));
        }
        if let Some(w) = samples
            .windows(2)
            .find(|w| w[1].log_count < w[0].log_count - 1e-12)
        {
            return Err(Error::NonMonotoneSeries(format!(
                "log count drops from {} at n = {} to {} at n = {}",
                w[0].log_count, w[0].horizon, w[1].log_count, w[1].horizon
            )));
        }
        Ok(Self { epsilon, samples })
    }

    /// Replaces each greedy log count by the running maximum so far. A
    /// greedy lower bound at `n` is also a lower bound at every later `n`,
    /// so the envelope remains a valid lower bound.
    pub fn with_envelope(epsilon: f64, mut samples: Vec<Sample>) -> Result<Self> {
        let mut best = f64::NEG_INFINITY;
        for s in &mut samples {
            if s.mode == CountMode::GreedyLower {
                s.log_count = s.log_count.max(best);
            }
            best = best.max(s.log_count);
        }
        Self::new(epsilon, samples)
    }

    pub fn from_counts(epsilon: f64, results: &[CountResult]) -> Result<Self> {
        let samples = results
            .iter()
            .map(|r| Sample {
                horizon: r.horizon,
                log_count: r.log_count(),
                mode: r.mode,
            })
            .collect();
        Self::with_envelope(epsilon, samples)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Whether every sample is an exact count.
    pub fn is_exact(&self) -> bool {
        self.samples.iter().all(|s| s.mode == CountMode::Exact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub rate: f64,
    pub intercept: f64,
    pub max_residual: f64,
    /// Slope through the last two samples, for drift detection.
    pub last_slope: f64,
    pub samples_used: usize,
}

/// Least-squares slope of `log_count` against `n` over samples with
/// `n > burn_in`.
pub fn growth_rate(series: &GrowthSeries, burn_in: usize) -> Result<GrowthFit> {
    let used: Vec<&Sample> = series
        .samples
        .iter()
        .filter(|s| s.horizon > burn_in)
        .collect();
    if used.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: used.len(),
        });
    }
    let m = used.len() as f64;
    let mean_x = used.iter().map(|s| s.horizon as f64).sum::<f64>() / m;
    let mean_y = used.iter().map(|s| s.log_count).sum::<f64>() / m;
    let sxx: f64 = used.iter().map(|s| (s.horizon as f64 - mean_x).powi(2)).sum();
    let sxy: f64 = used
        .iter()
        .map(|s| (s.horizon as f64 - mean_x) * (s.log_count - mean_y))
        .sum();
    let rate = sxy / sxx;
    let intercept = mean_y - rate * mean_x;
    let max_residual = used
        .iter()
        .map(|s| (s.log_count - intercept - rate * s.horizon as f64).abs())
        .fold(0.0, f64::max);
    let (a, b) = (used[used.len() - 2], used[used.len() - 1]);
    let last_slope = (b.log_count - a.log_count) / (b.horizon - a.horizon) as f64;
    Ok(GrowthFit {
        rate,
        intercept,
        max_residual,
        last_slope,
        samples_used: used.len(),
    })
}

/// What a rate certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    Exact,
    LowerBound,
    UpperBound,
}

impl RateKind {
    pub fn label(self) -> &'static str {
        match self {
            RateKind::Exact => "exact",
            RateKind::LowerBound => "lower_bound",
            RateKind::UpperBound => "upper_bound",
        }
    }

    /// Kind of a rate fitted to `series`.
    pub fn of(series: &GrowthSeries) -> Self {
        let modes = series.samples.iter().map(|s| s.mode);
        if modes.clone().any(|m| m == CountMode::GreedyLower) {
            RateKind::LowerBound
        } else if modes.clone().any(|m| m == CountMode::GreedyUpper) {
            RateKind::UpperBound
        } else {
            RateKind::Exact
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub rate: f64,
    /// `rate / |log ε|`.
    pub normalized: f64,
    pub kind: RateKind,
    pub fit: Option<GrowthFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub per_epsilon: Vec<EpsilonRow>,
    pub lower_estimate: f64,
    pub upper_estimate: f64,
    pub window: usize,
    pub schedule: String,
    pub caveats: Vec<String>,
}

impl DimensionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,rate,normalized,mode\n");
        for row in &self.per_epsilon {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.epsilon,
                row.rate,
                row.normalized,
                row.kind.label()
            ));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lower": self.lower_estimate,
            "upper": self.upper_estimate,
            "window": self.window,
            "schedule": self.schedule,
            "caveats": self.caveats,
        })
    }
}

/// A rate measured at scale `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub epsilon: f64,
    pub rate: f64,
    pub kind: RateKind,
    pub fit: Option<GrowthFit>,
}

impl RateEntry {
    pub fn exact(epsilon: f64, rate: f64) -> Self {
        Self {
            epsilon,
            rate,
            kind: RateKind::Exact,
            fit: None,
        }
    }

    pub fn from_series(series: &GrowthSeries, burn_in: usize) -> Result<Self> {
        let fit = growth_rate(series, burn_in)?;
        Ok(Self {
            epsilon: series.epsilon,
            rate: fit.rate,
            kind: RateKind::of(series),
            fit: Some(fit),
        })
    }
}

fn check_schedule(epsilons: &[f64], needed: usize) -> Result<()> {
    if epsilons.len() < needed {
        return Err(Error::ScheduleTooShort {
            needed,
            got: epsilons.len(),
        });
    }
    if epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::NonMonotoneSchedule("every ε must lie in (0, 1)".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::NonMonotoneSchedule("ε must decrease strictly".into()));
    }
    Ok(())
}

fn describe(epsilons: &[f64]) -> String {
    let list: Vec<String> = epsilons.iter().map(|e| format!("{e:.6e}")).collect();
    format!("[{}]", list.join(", "))
}

/// Tail-window min and max of `rate / |log ε|`.
pub fn mdim_estimate(entries: &[RateEntry], window: usize) -> Result<DimensionReport> {
    let epsilons: Vec<f64> = entries.iter().map(|e| e.epsilon).collect();
    check_schedule(&epsilons, 3)?;
    if window == 0 {
        return Err(Error::InvalidParameter("window must be ≥ 1".into()));
    }
    let rows: Vec<EpsilonRow> = entries
        .iter()
        .map(|e| EpsilonRow {
            epsilon: e.epsilon,
            rate: e.rate,
            normalized: e.rate / e.epsilon.ln().abs(),
            kind: e.kind,
            fit: e.fit,
        })
        .collect();
    let tail = &rows[rows.len().saturating_sub(window)..];
    let used = tail.len();
    let lower = tail.iter().map(|r| r.normalized).fold(f64::INFINITY, f64::min);
    let upper = tail.iter().map(|r| r.normalized).fold(f64::NEG_INFINITY, f64::max);
    let mut caveats = vec![format!(
        "liminf and limsup over ε → 0 are approximated by the min and max over the last {used} scales"
    )];
    if tail.iter().any(|r| r.kind == RateKind::LowerBound) {
        caveats.push("some rates come from greedy separated sets and are lower bounds; the upper estimate is not certified".into());
    }
    if tail.iter().any(|r| r.kind == RateKind::UpperBound) {
        caveats.push("some rates come from greedy covers and are upper bounds; the lower estimate is not certified".into());
    }
    Ok(DimensionReport {
        per_epsilon: rows,
        lower_estimate: lower,
        upper_estimate: upper,
        window: used,
        schedule: describe(&epsilons),
        caveats,
    })
}

/// Minimal cover of the net at mesh `ε/4` by sets of diameter `< ε`.
pub fn box_count(
    space: &Space,
    net_for_mesh: impl Fn(f64) -> Result<Vec<Point>>,
    epsilon: f64,
    opts: &CountOptions,
) -> Result<CountResult> {
    let identity: System = MapSystem::Identity {
        space: space.clone(),
    }
    .into();
    let net = net_for_mesh(epsilon / 4.0)?;
    let ctx = OrbitContext::with_budget(&identity, 1, net, u64::MAX)?;
    count(&ctx, Quantity::Cov, epsilon, opts)
}

/// `log N(ε) / |log ε|` over the scales of `covers`.
pub fn box_report(covers: &[CountResult], window: usize) -> Result<DimensionReport> {
    let epsilons: Vec<f64> = covers.iter().map(|c| c.epsilon).collect();
    check_schedule(&epsilons, 4)?;
    let entries: Vec<RateEntry> = covers
        .iter()
        .map(|cover| RateEntry {
            epsilon: cover.epsilon,
            rate: cover.log_count(),
            kind: match cover.mode {
                CountMode::Exact => RateKind::Exact,
                CountMode::GreedyLower => RateKind::LowerBound,
                CountMode::GreedyUpper => RateKind::UpperBound,
            },
            fit: None,
        })
        .collect();
    let mut report = mdim_estimate(&entries, window)?;
    report.caveats[0] = format!(
        "lower and upper box dimension are approximated by the min and max of log N(ε)/|log ε| over the last {} scales",
        report.window
    );
    Ok(report)
}

/// Box dimension of the nets produced by `net_for_mesh`: minimal covers by
/// sets of diameter `< ε` of the net at mesh `ε/4`, normalised by `|log ε|`.
pub fn box_dimension(
    space: &Space,
    net_for_mesh: impl Fn(f64) -> Result<Vec<Point>>,
    schedule: &[f64],
    window: usize,
    opts: &CountOptions,
) -> Result<DimensionReport> {
    check_schedule(schedule, 4)?;
    let covers = schedule
        .iter()
        .map(|&eps| box_count(space, &net_for_mesh, eps, opts))
        .collect::<Result<Vec<_>>>()?;
    box_report(&covers, window)
}

/// `(k, sup_p f_1^{(k)}(p))` for `k = 1..=k_max`.
pub fn damping_witness(
    nas: &NonAutonomousSystem,
    probes: &[f64],
    k_max: usize,
) -> Result<Vec<(usize, f64)>> {
    if *nas.space() != Space::Interval {
        return Err(Error::InvalidParameter("damping needs an interval system".into()));
    }
    let zero = nas.map(1).eval_scalar(0.0);
    if zero != 0.0 {
        return Err(Error::InvalidParameter(format!("f_1(0) = {zero}, expected 0")));
    }
    let mut current = probes.to_vec();
    let mut table = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let f = nas.map(k);
        for x in &mut current {
            *x = f.eval_scalar(*x);
        }
        let sup = current.iter().copied().fold(0.0, f64::max);
        table.push((k, sup));
    }
    Ok(table)
}

/// How to build `d_n`-dense nets for separated-set series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetRule {
    /// Net mesh measured in `d_n`.
    pub mesh: f64,
    /// Largest allowed `mesh / ε`.
    pub max_ratio: f64,
}

impl NetRule {
    pub fn quarter(epsilon: f64) -> Self {
        Self {
            mesh: epsilon / 4.0,
            max_ratio: 0.25,
        }
    }
}

/// Largest Lipschitz constant of `f_1^{(j)}`, `j < horizon`.
fn orbit_lipschitz(system: &System, horizon: usize) -> f64 {
    let mut product = 1.0f64;
    let mut worst = 1.0f64;
    for i in 1..horizon {
        product *= system.step(i).lipschitz();
        worst = worst.max(product);
    }
    worst
}

/// A net that is `rule.mesh`-dense for `d_horizon`: the ambient mesh is
/// shrunk by the Lipschitz constant of the orbit map.
pub fn orbit_net(system: &System, horizon: usize, rule: &NetRule) -> Result<Vec<Point>> {
    let lip = orbit_lipschitz(system, horizon);
    if !lip.is_finite() {
        return Err(Error::InvalidParameter(
            "orbit Lipschitz constant is unbounded; supply an explicit net".into(),
        ));
    }
    sample_net(&system.space(), rule.mesh / lip)
}

/// `sep(n, ε)` for every horizon on `d_n`-dense nets.
pub fn sep_series(
    system: &System,
    epsilon: f64,
    horizons: &[usize],
    rule: &NetRule,
    opts: &CountOptions,
    budget: u64,
) -> Result<(GrowthSeries, Vec<CountResult>)> {
    if rule.mesh > rule.max_ratio * epsilon * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "mesh {} exceeds {} · ε",
            rule.mesh, rule.max_ratio
        )));
    }
    let mut results = Vec::with_capacity(horizons.len());
    for &n in horizons {
        let net = orbit_net(system, n, rule)?;
        let ctx = OrbitContext::with_budget(system, n, net, budget)?;
        results.push(count(&ctx, Quantity::Sep, epsilon, opts)?);
    }
    Ok((GrowthSeries::from_counts(epsilon, &results)?, results))
}

/// Exact `log lap(f^n)` for each horizon, by symbolic iteration. Lap
/// counts carry no scale, so the series records `ε = 0`.
pub fn lap_series(map: &PiecewiseAffineMap, horizons: &[usize]) -> Result<GrowthSeries> {
    let mut samples = Vec::with_capacity(horizons.len());
    for &n in horizons {
        let laps = map.iterate(n as u64)?.lap_count();
        samples.push(Sample {
            horizon: n,
            log_count: (laps as f64).ln(),
            mode: CountMode::Exact,
        });
    }
    GrowthSeries::new(0.0, samples)
}

/// Path counts through the recurrent Markov components wider than `ε`.
pub fn markov_series(
    partition: &MarkovPartition,
    epsilon: f64,
    horizons: &[usize],
) -> Result<GrowthSeries> {
    let n_max = horizons.iter().copied().max().unwrap_or(0);
    let logs = partition.log_path_counts(&partition.visible(epsilon), n_max);
    let samples = horizons
        .iter()
        .map(|&n| Sample {
            horizon: n,
            log_count: if logs[n - 1].is_finite() { logs[n - 1] } else { 0.0 },
            mode: CountMode::Exact,
        })
        .collect();
    GrowthSeries::new(epsilon, samples)
}
