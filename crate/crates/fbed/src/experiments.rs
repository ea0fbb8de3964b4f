//! Desk-scale studies: the multiple-testing simulation over null data and
//! the Markov-blanket recovery sweep over random DAGs.
//!
//! Replicates are independent and parallelize over the ambient pool; each
//! one derives its own seed as `seed + index` and results are aggregated
//! from an index-ordered collection, so reports are byte-identical for any
//! scheduling.

use std::sync::Arc;

use crate::criteria::Criterion;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graphs::{oracle_criterion, random_dag};
use crate::parallel;
use crate::selection::{fbed, fbs, Runs, SelectionResult};

/// Algorithms compared by the multiple-testing study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum MtAlgorithm {
    #[serde(rename = "fbed0")]
    Fbed0,
    #[serde(rename = "fbed1")]
    Fbed1,
    #[serde(rename = "fbedinf")]
    FbedInf,
    #[serde(rename = "fbs")]
    Fbs,
}

impl MtAlgorithm {
    pub const ALL: [MtAlgorithm; 4] = [
        MtAlgorithm::Fbed0,
        MtAlgorithm::Fbed1,
        MtAlgorithm::FbedInf,
        MtAlgorithm::Fbs,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MtAlgorithm::Fbed0 => "fbed0",
            MtAlgorithm::Fbed1 => "fbed1",
            MtAlgorithm::FbedInf => "fbedinf",
            MtAlgorithm::Fbs => "fbs",
        }
    }

    fn run(self, d: &Dataset, c: &Criterion) -> Result<SelectionResult> {
        match self {
            MtAlgorithm::Fbed0 => fbed(d, c, Runs::Finite(0)),
            MtAlgorithm::Fbed1 => fbed(d, c, Runs::Finite(1)),
            MtAlgorithm::FbedInf => fbed(d, c, Runs::Infinite),
            MtAlgorithm::Fbs => fbs(d, c),
        }
    }
}

/// One cell of the multiple-testing report.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MtRow {
    pub algorithm: MtAlgorithm,
    pub p: usize,
    pub alpha: f64,
    pub mean_selected: f64,
    /// `mean_selected / (alpha * p)`: selected variables relative to the
    /// expected number of type I errors.
    pub ratio_to_alpha_p: f64,
    pub mean_evaluations: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MtReport {
    pub n: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub rows: Vec<MtRow>,
}

impl MtReport {
    pub fn row(&self, algorithm: MtAlgorithm, p: usize, alpha: f64) -> Option<&MtRow> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.p == p && r.alpha == alpha)
    }

    /// Line-delimited records: one JSON object per row.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&serde_json::to_string(row).expect("row serializes"));
            out.push('\n');
        }
        out
    }

    /// Human-readable grid: algorithms by (p, alpha), counts block then the
    /// ratio block.
    pub fn to_table(&self) -> String {
        let mut ps: Vec<usize> = self.rows.iter().map(|r| r.p).collect();
        ps.dedup();
        let mut alphas: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.p == ps[0])
            .map(|r| r.alpha)
            .collect();
        alphas.dedup();
        let cells: Vec<(usize, f64)> = ps
            .iter()
            .flat_map(|&p| alphas.iter().map(move |&a| (p, a)))
            .collect();

        let mut out = format!(
            "multiple-testing simulation: n={} reps={} seed={}\n",
            self.n, self.n_reps, self.seed
        );
        let header = |title: &str| {
            let mut line = format!("{title:<24}");
            for &(p, a) in &cells {
                line.push_str(&format!("{:>14}", format!("p={p} a={a}")));
            }
            line.push('\n');
            line
        };
        out.push_str(&header("mean selected"));
        for algo in MtAlgorithm::ALL {
            out.push_str(&format!("{:<24}", algo.label()));
            for &(p, a) in &cells {
                let row = self.row(algo, p, a).expect("cell present");
                out.push_str(&format!("{:>14.2}", row.mean_selected));
            }
            out.push('\n');
        }
        out.push_str(&format!("{:<24}", "alpha*p"));
        for &(p, a) in &cells {
            out.push_str(&format!("{:>14.2}", a * p as f64));
        }
        out.push('\n');
        out.push_str(&header("ratio to alpha*p (%)"));
        for algo in MtAlgorithm::ALL {
            out.push_str(&format!("{:<24}", algo.label()));
            for &(p, a) in &cells {
                let row = self.row(algo, p, a).expect("cell present");
                out.push_str(&format!("{:>14.1}", 100.0 * row.ratio_to_alpha_p));
            }
            out.push('\n');
        }
        out.push_str(&header("mean evaluations"));
        for algo in MtAlgorithm::ALL {
            out.push_str(&format!("{:<24}", algo.label()));
            for &(p, a) in &cells {
                let row = self.row(algo, p, a).expect("cell present");
                out.push_str(&format!("{:>14.1}", row.mean_evaluations));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the null-data multiple-testing study: for every replicate, draw a
/// fresh null dataset per `p`, run all four algorithms with the logistic LR
/// test at every `alpha`, and average selected counts and evaluation counts
/// per (algorithm, p, alpha) cell.
pub fn run_mt_simulation(
    n: usize,
    p_list: &[usize],
    alpha_list: &[f64],
    n_reps: usize,
    seed: u64,
) -> Result<MtReport> {
    if n_reps < 1 {
        return Err(Error::InvalidArgument("n_reps must be at least 1".into()));
    }
    if p_list.is_empty() || alpha_list.is_empty() {
        return Err(Error::InvalidArgument(
            "p_list and alpha_list must be non-empty".into(),
        ));
    }
    for &alpha in alpha_list {
        Criterion::it(alpha)?;
    }

    // One entry per (p, alpha, algorithm), in that nesting order.
    type RepCounts = Vec<(usize, usize)>;
    let per_rep: Vec<Result<RepCounts>> = parallel::map_range(n_reps, |rep| {
        let mut counts = Vec::with_capacity(p_list.len() * alpha_list.len() * 4);
        for &p in p_list {
            let d = Dataset::generate_null(n, p, seed.wrapping_add(rep as u64))?;
            for &alpha in alpha_list {
                let c = Criterion::it(alpha)?;
                for algo in MtAlgorithm::ALL {
                    let r = algo.run(&d, &c)?;
                    counts.push((r.selected.len(), r.n_evaluations));
                }
            }
        }
        Ok(counts)
    });

    let mut sums = vec![(0usize, 0usize); p_list.len() * alpha_list.len() * 4];
    for rep in per_rep {
        let counts = rep?;
        for (sum, c) in sums.iter_mut().zip(&counts) {
            sum.0 += c.0;
            sum.1 += c.1;
        }
    }

    let reps = n_reps as f64;
    let mut rows = Vec::with_capacity(sums.len());
    let mut idx = 0;
    for &p in p_list {
        for &alpha in alpha_list {
            for algo in MtAlgorithm::ALL {
                let (sel, evals) = sums[idx];
                idx += 1;
                let mean_selected = sel as f64 / reps;
                rows.push(MtRow {
                    algorithm: algo,
                    p,
                    alpha,
                    mean_selected,
                    ratio_to_alpha_p: mean_selected / (alpha * p as f64),
                    mean_evaluations: evals as f64 / reps,
                });
            }
        }
    }
    Ok(MtReport {
        n,
        n_reps,
        seed,
        rows,
    })
}

/// One row of the Markov-blanket recovery report.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MbRow {
    /// Run budget as "0", "1", ..., or "inf".
    pub k: String,
    pub n_nodes: usize,
    pub edge_prob: f64,
    pub n_latent: usize,
    pub n_graphs: usize,
    /// Graphs whose minimal blanket was not unique; excluded from the rates.
    pub n_skipped: usize,
    pub exact_recovery_rate: f64,
    pub superset_rate: f64,
    pub mean_evaluations: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MbReport {
    pub seed: u64,
    pub rows: Vec<MbRow>,
}

impl MbReport {
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&serde_json::to_string(row).expect("row serializes"));
            out.push('\n');
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("markov-blanket recovery: seed={}\n", self.seed);
        out.push_str(&format!(
            "{:<6}{:>8}{:>10}{:>8}{:>8}{:>9}{:>8}{:>10}{:>13}\n",
            "k", "nodes", "edge_p", "latent", "graphs", "skipped", "exact", "superset", "mean_evals"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<6}{:>8}{:>10.2}{:>8}{:>8}{:>9}{:>8.3}{:>10.3}{:>13.1}\n",
                r.k,
                r.n_nodes,
                r.edge_prob,
                r.n_latent,
                r.n_graphs,
                r.n_skipped,
                r.exact_recovery_rate,
                r.superset_rate,
                r.mean_evaluations
            ));
        }
        out
    }
}

/// Markov-blanket recovery with the graph oracle over random DAGs. Ground
/// truth is the parent/child/spouse blanket when fully observed and the
/// exhaustive minimal-set search when latents are present; graphs with a
/// non-unique minimal set are skipped and counted.
pub fn run_mb_recovery(
    n_graphs: usize,
    n_nodes: usize,
    edge_prob: f64,
    n_latent: usize,
    k_list: &[Runs],
    seed: u64,
) -> Result<MbReport> {
    if n_graphs < 1 || k_list.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one graph and one K value".into(),
        ));
    }

    struct GraphOutcome {
        skipped: bool,
        // Per K: (exact, superset, evaluations).
        per_k: Vec<(bool, bool, usize)>,
    }

    let per_graph: Vec<Result<GraphOutcome>> = parallel::map_range(n_graphs, |i| {
        let dag = Arc::new(random_dag(n_nodes, edge_prob, n_latent, seed.wrapping_add(i as u64))?);
        let target = 0usize;
        let truth = if n_latent == 0 {
            dag.markov_blanket(target)?
        } else {
            match dag.brute_force_mb(target) {
                Ok(mb) => mb,
                Err(Error::NonUniqueMarkovBlanket(..)) => {
                    return Ok(GraphOutcome {
                        skipped: true,
                        per_k: Vec::new(),
                    })
                }
                Err(e) => return Err(e),
            }
        };
        let criterion = oracle_criterion(Arc::clone(&dag), target)?;
        let var_nodes = dag.observed_non_target(target);
        let d = Dataset::placeholder(var_nodes.len());

        let mut per_k = Vec::with_capacity(k_list.len());
        for &k in k_list {
            let r = fbed(&d, &criterion, k)?;
            let mut selected_nodes: Vec<usize> =
                r.selected.iter().map(|&v| var_nodes[v]).collect();
            selected_nodes.sort_unstable();
            let exact = selected_nodes == truth;
            let superset = truth.iter().all(|t| selected_nodes.contains(t));
            per_k.push((exact, superset, r.n_evaluations));
        }
        Ok(GraphOutcome { skipped: false, per_k })
    });

    let mut skipped = 0usize;
    let mut tallies = vec![(0usize, 0usize, 0usize); k_list.len()];
    for outcome in per_graph {
        let outcome = outcome?;
        if outcome.skipped {
            skipped += 1;
            continue;
        }
        for (tally, &(exact, superset, evals)) in tallies.iter_mut().zip(&outcome.per_k) {
            tally.0 += exact as usize;
            tally.1 += superset as usize;
            tally.2 += evals;
        }
    }

    let counted = n_graphs - skipped;
    let denom = counted.max(1) as f64;
    let rows = k_list
        .iter()
        .zip(&tallies)
        .map(|(&k, &(exact, superset, evals))| MbRow {
            k: k.to_string(),
            n_nodes,
            edge_prob,
            n_latent,
            n_graphs,
            n_skipped: skipped,
            exact_recovery_rate: exact as f64 / denom,
            superset_rate: superset as f64 / denom,
            mean_evaluations: evals as f64 / denom,
        })
        .collect();
    Ok(MbReport { seed, rows })
}
