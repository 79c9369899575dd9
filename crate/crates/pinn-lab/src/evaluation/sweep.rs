//! Success-rate sweeps over system settings and the economical-minimum
//! comparison between physics-driven and data-guided training.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Initializer;
use crate::training::sampler::derive_seed;
use crate::training::{train, NetArch, Schedule, TrainConfig};

use super::{classify_outcome, Outcome, OutcomeClass, DEFAULT_THRESHOLD};

/// A sweep: the cartesian product of the listed axes, `seeds` independent
/// runs per cell. Unlisted axes stay at the base configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: TrainConfig,
    /// Horizon values; y0 values in native units (degrees for the
    /// pendulum).
    pub t_values: Vec<f64>,
    pub y0_values: Vec<f64>,
    #[serde(default)]
    pub archs: Option<Vec<NetArch>>,
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    #[serde(default)]
    pub n_collocations: Option<Vec<usize>>,
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default)]
    pub initializers: Option<Vec<Initializer>>,
    pub seeds: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

/// One scored run within a cell.
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub seed_index: usize,
    pub run_seed: u64,
    pub outcome: Outcome,
}

/// One cell: a full setting with its scored runs.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub t: f64,
    pub y0: f64,
    pub arch: NetArch,
    pub alpha: f64,
    pub n_col: usize,
    pub lambda: f64,
    pub init: Initializer,
    pub config: TrainConfig,
    pub outcomes: Vec<SweepOutcome>,
}

impl SweepCell {
    pub fn count(&self, class: OutcomeClass) -> usize {
        self.outcomes
            .iter()
            .filter(|o| o.outcome.class == class)
            .count()
    }

    pub fn success_rate(&self) -> f64 {
        self.count(OutcomeClass::Success) as f64 / self.outcomes.len() as f64
    }

    /// "s/st/un" percentage triplet.
    pub fn triplet(&self) -> String {
        let n = self.outcomes.len() as f64;
        let pct = |c: OutcomeClass| (self.count(c) as f64 * 100.0 / n).round();
        format!(
            "{:.0}/{:.0}/{:.0}",
            pct(OutcomeClass::Success),
            pct(OutcomeClass::StableFp),
            pct(OutcomeClass::UnstableFp)
        )
    }

    pub fn median_min_lf(&self) -> f64 {
        median(self.outcomes.iter().map(|o| o.outcome.min_lf))
    }
}

pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if v.is_empty() {
        return f64::NAN;
    }
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn initializer_label(init: Initializer) -> &'static str {
    match init {
        Initializer::GlorotUniform => "glorot-uniform",
        Initializer::HeUniform => "he-uniform",
    }
}

fn activation_label(a: crate::network::Activation) -> &'static str {
    match a {
        crate::network::Activation::Tanh => "tanh",
        crate::network::Activation::Swish => "swish",
        crate::network::Activation::Sin => "sin",
    }
}

/// Run every cell × seed, in parallel, aggregating in deterministic order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepCell>> {
    if spec.seeds == 0 {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let archs = spec
        .archs
        .clone()
        .unwrap_or_else(|| vec![spec.base.network.clone()]);
    let alphas = spec
        .alphas
        .clone()
        .unwrap_or_else(|| vec![spec.base.learning_rate]);
    let n_cols = spec
        .n_collocations
        .clone()
        .unwrap_or_else(|| vec![spec.base.n_collocation()]);
    let lambdas = spec
        .lambdas
        .clone()
        .unwrap_or_else(|| vec![spec.base.lambda]);
    let inits = spec
        .initializers
        .clone()
        .unwrap_or_else(|| vec![spec.base.network.initializer]);

    let mut cells: Vec<SweepCell> = Vec::new();
    for &t in &spec.t_values {
        for &y0 in &spec.y0_values {
            for arch in &archs {
                for &alpha in &alphas {
                    for &n_col in &n_cols {
                        for &lambda in &lambdas {
                            for &init in &inits {
                                let mut config = spec.base.clone();
                                config.system =
                                    config.system.with_initial(y0)?.with_time_horizon(t);
                                config.network = NetArch {
                                    initializer: init,
                                    ..arch.clone()
                                };
                                config.learning_rate = alpha;
                                config.n_collocation = Some(n_col);
                                config.lambda = lambda;
                                cells.push(SweepCell {
                                    t,
                                    y0,
                                    arch: config.network.clone(),
                                    alpha,
                                    n_col,
                                    lambda,
                                    init,
                                    config,
                                    outcomes: Vec::new(),
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    let threshold = spec.threshold;
    let base_seed = spec.base.seed;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.seeds).map(move |s| (c, s)))
        .collect();
    let scored: Vec<(usize, SweepOutcome)> = jobs
        .par_iter()
        .map(|&(cell_idx, seed_idx)| -> Result<(usize, SweepOutcome)> {
            let mut config = cells[cell_idx].config.clone();
            config.seed = derive_seed(
                derive_seed(base_seed, cell_idx as u64),
                seed_idx as u64,
            );
            let trace = train(&config)?;
            let outcome = classify_outcome(&config, &trace, threshold)?;
            Ok((
                cell_idx,
                SweepOutcome {
                    seed_index: seed_idx,
                    run_seed: config.seed,
                    outcome,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    for (cell_idx, outcome) in scored {
        cells[cell_idx].outcomes.push(outcome);
    }
    for cell in &mut cells {
        cell.outcomes.sort_by_key(|o| o.seed_index);
    }
    Ok(cells)
}

/// Per-run rows: `T,y0,arch,activation,alpha,Nc,lambda,init,seed,L2,class,minLf`.
pub fn sweep_rows_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("T,y0,arch,activation,alpha,Nc,lambda,init,seed,L2,class,minLf\n");
    for cell in cells {
        for o in &cell.outcomes {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                cell.t,
                cell.y0,
                cell.arch.arch_string(),
                activation_label(cell.arch.activation),
                cell.alpha,
                cell.n_col,
                cell.lambda,
                initializer_label(cell.init),
                o.run_seed,
                o.outcome.l2,
                o.outcome.class.label(),
                o.outcome.min_lf
            ));
        }
    }
    out
}

impl NetArch {
    pub fn arch_string(&self) -> String {
        if self.hidden.windows(2).all(|w| w[0] == w[1]) && !self.hidden.is_empty() {
            format!("{}x{}", self.hidden.len(), self.hidden[0])
        } else {
            self.hidden
                .iter()
                .map(|w| w.to_string())
                .collect::<Vec<_>>()
                .join("-")
        }
    }
}

/// Aggregated table in the paper's triplet format: one row per network
/// setting, one column per (T, y0) cell.
pub fn sweep_table_markdown(cells: &[SweepCell], triplets: bool) -> String {
    let mut columns: Vec<(f64, f64)> = Vec::new();
    let mut rows: Vec<String> = Vec::new();
    for c in cells {
        if !columns.contains(&(c.t, c.y0)) {
            columns.push((c.t, c.y0));
        }
        let label = format!(
            "{} {} α={} Nc={} λ={} {}",
            c.arch.arch_string(),
            activation_label(c.arch.activation),
            c.alpha,
            c.n_col,
            c.lambda,
            initializer_label(c.init)
        );
        if !rows.contains(&label) {
            rows.push(label);
        }
    }
    let mut out = String::from("| setting |");
    for (t, y0) in &columns {
        out.push_str(&format!(" T={t} y0={y0} |"));
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in &columns {
        out.push_str("---|");
    }
    out.push('\n');
    for row in &rows {
        out.push_str(&format!("| {row} |"));
        for (t, y0) in &columns {
            let cell = cells.iter().find(|c| {
                (c.t, c.y0) == (*t, *y0)
                    && format!(
                        "{} {} α={} Nc={} λ={} {}",
                        c.arch.arch_string(),
                        activation_label(c.arch.activation),
                        c.alpha,
                        c.n_col,
                        c.lambda,
                        initializer_label(c.init)
                    ) == *row
            });
            match cell {
                Some(c) if triplets => out.push_str(&format!(" {} |", c.triplet())),
                Some(c) => out.push_str(&format!(
                    " {:.0} |",
                    c.success_rate() * 100.0
                )),
                None => out.push_str(" – |"),
            }
        }
        out.push('\n');
    }
    out
}

/// One run of the economical-minimum comparison.
#[derive(Clone, Debug)]
pub struct EconomicalRow {
    pub y0: f64,
    pub approach: &'static str,
    pub seed_index: usize,
    pub min_lf: f64,
    pub l2: f64,
    pub class: OutcomeClass,
}

/// Train physics-driven and data-guided instances per IC and record the
/// minimal physics loss across all epochs of each run.
pub fn economical_minima_report(
    base: &TrainConfig,
    y0_values: &[f64],
    seeds: usize,
) -> Result<Vec<EconomicalRow>> {
    let switch = base.epochs / 2;
    let mut jobs: Vec<(f64, &'static str, usize, TrainConfig)> = Vec::new();
    for (yi, &y0) in y0_values.iter().enumerate() {
        for approach in ["physics-driven", "data-guided"] {
            for s in 0..seeds {
                let mut config = base.clone();
                config.system = config.system.with_initial(y0)?;
                if approach == "data-guided" {
                    config.schedule = Schedule::DataGuided {
                        switch_epoch: switch,
                        n_labels: None,
                    };
                }
                config.seed = derive_seed(
                    derive_seed(base.seed, (yi * 2 + usize::from(approach == "data-guided")) as u64),
                    s as u64,
                );
                jobs.push((y0, approach, s, config));
            }
        }
    }
    jobs.par_iter()
        .map(|(y0, approach, s, config)| -> Result<EconomicalRow> {
            let trace = train(config)?;
            let outcome = classify_outcome(config, &trace, DEFAULT_THRESHOLD)?;
            Ok(EconomicalRow {
                y0: *y0,
                approach,
                seed_index: *s,
                min_lf: trace.min_lf,
                l2: outcome.l2,
                class: outcome.class,
            })
        })
        .collect()
}
