//! Forward-backward selection and its early-dropping variant.
//!
//! `fbs` is the classic algorithm: every forward iteration re-scores all
//! remaining candidates, admits the best one that passes the criterion, and
//! stops when none passes; a backward phase then prunes the selected set.
//! `fbed` replaces the forward phase with up to `K + 1` runs. Within a run,
//! candidates that fail the criterion are dropped from further sweeps of
//! that run; each new run restarts from every not-yet-selected variable.
//!
//! Candidate evaluations within a sweep execute in parallel against the
//! immutable dataset and criterion, then reduce sequentially, so the winner
//! (and the whole trace) is identical for any thread count.

use crate::criteria::{self, Criterion, Decision};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::parallel;

/// Run budget for `fbed`: the forward phase executes at most `K + 1` runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Runs {
    Finite(usize),
    Infinite,
}

impl Runs {
    fn allows_another(self, executed: usize) -> bool {
        match self {
            Runs::Finite(k) => executed <= k,
            Runs::Infinite => true,
        }
    }
}

impl std::str::FromStr for Runs {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "inf" | "infinity" => Ok(Runs::Infinite),
            _ => s
                .parse::<usize>()
                .map(Runs::Finite)
                .map_err(|_| format!("expected a nonnegative integer or 'inf', got '{s}'")),
        }
    }
}

impl std::fmt::Display for Runs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Runs::Finite(k) => write!(f, "{k}"),
            Runs::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// Variable admitted into the selected set.
    Include,
    /// Candidate discarded for the rest of the current run.
    Drop,
    /// Variable pruned by the backward phase.
    Remove,
}

/// One trace entry. `run_index` counts forward runs from 0; backward-phase
/// events carry `run_index == runs_executed`. `iteration` is the sweep
/// number within the phase.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct TraceEvent {
    pub run_index: usize,
    pub iteration: usize,
    pub kind: EventKind,
    pub variable: usize,
    pub score: f64,
}

/// Selected set plus the full decision trace.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct SelectionResult {
    /// Selected variable indices in inclusion order.
    pub selected: Vec<usize>,
    pub trace: Vec<TraceEvent>,
    /// Total criterion decisions performed (forward and backward).
    pub n_evaluations: usize,
    /// Forward runs executed (always 1 for `fbs`).
    pub runs_executed: usize,
}

/// Forward-backward selection (no early dropping).
pub fn fbs(d: &Dataset, c: &Criterion) -> Result<SelectionResult> {
    let mut engine = Engine::new(d, c, Vec::new())?;
    match engine.fbs_forward().and_then(|()| engine.backward(1)) {
        Ok(()) => Ok(engine.finish(1)),
        Err(source) => Err(engine.abort(source, 1)),
    }
}

/// Forward-backward selection with early dropping and run budget `k`.
/// The first run always executes; later runs require the previous one to
/// have grown the selected set.
pub fn fbed(d: &Dataset, c: &Criterion, k: Runs) -> Result<SelectionResult> {
    let mut engine = Engine::new(d, c, Vec::new())?;
    let mut executed = 0usize;
    let mut changed = true;
    let outcome = loop {
        if !(k.allows_another(executed) && changed) {
            break Ok(());
        }
        match engine.one_run(executed) {
            Ok(grew) => changed = grew,
            Err(e) => break Err(e),
        }
        executed += 1;
    }
    .and_then(|()| engine.backward(executed));
    match outcome {
        Ok(()) => Ok(engine.finish(executed)),
        Err(source) => Err(engine.abort(source, executed)),
    }
}

/// A single early-dropping run grown from `s`; returns the enlarged set.
pub fn one_run(d: &Dataset, c: &Criterion, s: &[usize]) -> Result<Vec<usize>> {
    let mut engine = Engine::new(d, c, s.to_vec())?;
    match engine.one_run(0) {
        Ok(_) => Ok(engine.selected),
        Err(source) => Err(engine.abort(source, 1)),
    }
}

/// Standard backward elimination from `s`; returns the pruned set.
pub fn backward_phase(d: &Dataset, c: &Criterion, s: &[usize]) -> Result<Vec<usize>> {
    let mut engine = Engine::new(d, c, s.to_vec())?;
    match engine.backward(0) {
        Ok(()) => Ok(engine.selected),
        Err(source) => Err(engine.abort(source, 0)),
    }
}

struct Engine<'a> {
    d: &'a Dataset,
    c: &'a Criterion,
    selected: Vec<usize>,
    trace: Vec<TraceEvent>,
    n_evaluations: usize,
}

impl<'a> Engine<'a> {
    fn new(d: &'a Dataset, c: &'a Criterion, seed: Vec<usize>) -> Result<Self> {
        if let Criterion::Oracle(o) = c {
            if o.var_count() != d.p() {
                return Err(Error::VariableCountMismatch {
                    expected: o.var_count(),
                    actual: d.p(),
                });
            }
        }
        for (i, &v) in seed.iter().enumerate() {
            if v >= d.p() {
                return Err(Error::InvalidArgument(format!(
                    "selected index {v} out of range (p = {})",
                    d.p()
                )));
            }
            if seed[..i].contains(&v) {
                return Err(Error::InvalidArgument(format!("duplicate selected index {v}")));
            }
        }
        Ok(Engine {
            d,
            c,
            selected: seed,
            trace: Vec::new(),
            n_evaluations: 0,
        })
    }

    fn finish(self, runs_executed: usize) -> SelectionResult {
        SelectionResult {
            selected: self.selected,
            trace: self.trace,
            n_evaluations: self.n_evaluations,
            runs_executed,
        }
    }

    fn abort(self, source: Error, runs_executed: usize) -> Error {
        Error::SelectionAborted {
            source: Box::new(source),
            partial: Box::new(self.finish(runs_executed)),
        }
    }

    /// Scores every candidate against the current selected set. The null fit
    /// is computed once and shared. Failures surface in candidate order, and
    /// only decisions before the failing one are counted.
    fn evaluate_forward(&mut self, candidates: &[usize]) -> Result<Vec<Decision>> {
        let null = criteria::null_model(self.c, self.d, &self.selected)?;
        let raw = parallel::map_ordered(candidates, |&v| {
            criteria::forward_decision_cached(self.c, self.d, &self.selected, v, &null)
        });
        let mut decisions = Vec::with_capacity(raw.len());
        for r in raw {
            let dec = r?;
            self.n_evaluations += 1;
            decisions.push(dec);
        }
        Ok(decisions)
    }

    /// Position of the best admissible candidate. Candidates arrive in
    /// ascending variable order, so keeping the first strict winner breaks
    /// ties toward the lowest index.
    fn best_admissible(&self, decisions: &[Decision]) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, dec) in decisions.iter().enumerate() {
            if !dec.act {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(b) => {
                    if self.c.admission_improves(dec.score, decisions[b].score) {
                        best = Some(i);
                    }
                }
            }
        }
        best
    }

    /// Classic forward phase: the candidate pool only shrinks by the
    /// variable actually admitted.
    fn fbs_forward(&mut self) -> Result<()> {
        let mut remaining: Vec<usize> =
            (0..self.d.p()).filter(|v| !self.selected.contains(v)).collect();
        let mut iteration = 0;
        while !remaining.is_empty() {
            let decisions = self.evaluate_forward(&remaining)?;
            let Some(best) = self.best_admissible(&decisions) else {
                break;
            };
            let v = remaining.remove(best);
            self.selected.push(v);
            self.trace.push(TraceEvent {
                run_index: 0,
                iteration,
                kind: EventKind::Include,
                variable: v,
                score: decisions[best].score,
            });
            iteration += 1;
        }
        Ok(())
    }

    /// One early-dropping run: after each sweep the pool becomes exactly the
    /// candidates that passed the criterion, minus the one admitted.
    /// Returns whether the selected set grew.
    fn one_run(&mut self, run_index: usize) -> Result<bool> {
        let before = self.selected.len();
        let mut remaining: Vec<usize> =
            (0..self.d.p()).filter(|v| !self.selected.contains(v)).collect();
        let mut iteration = 0;
        while !remaining.is_empty() {
            let decisions = self.evaluate_forward(&remaining)?;
            let best = self.best_admissible(&decisions);
            if let Some(best) = best {
                let v = remaining[best];
                self.selected.push(v);
                self.trace.push(TraceEvent {
                    run_index,
                    iteration,
                    kind: EventKind::Include,
                    variable: v,
                    score: decisions[best].score,
                });
                let mut survivors = Vec::with_capacity(remaining.len());
                for (i, (&u, dec)) in remaining.iter().zip(&decisions).enumerate() {
                    if i == best {
                        continue;
                    }
                    if dec.act {
                        survivors.push(u);
                    } else {
                        self.trace.push(TraceEvent {
                            run_index,
                            iteration,
                            kind: EventKind::Drop,
                            variable: u,
                            score: dec.score,
                        });
                    }
                }
                remaining = survivors;
            } else {
                for (&u, dec) in remaining.iter().zip(&decisions) {
                    self.trace.push(TraceEvent {
                        run_index,
                        iteration,
                        kind: EventKind::Drop,
                        variable: u,
                        score: dec.score,
                    });
                }
                remaining.clear();
            }
            iteration += 1;
        }
        Ok(self.selected.len() > before)
    }

    /// Backward elimination: repeatedly remove the best-scoring removable
    /// variable until none qualifies. Ties break toward the lowest variable
    /// index (the selected list is in inclusion order, not sorted).
    fn backward(&mut self, run_index: usize) -> Result<()> {
        let mut iteration = 0;
        while !self.selected.is_empty() {
            let full = criteria::null_model(self.c, self.d, &self.selected)?;
            let raw = parallel::map_ordered(&self.selected, |&v| {
                criteria::backward_decision_cached(self.c, self.d, &self.selected, v, &full)
            });
            let mut decisions = Vec::with_capacity(raw.len());
            for r in raw {
                let dec = r?;
                self.n_evaluations += 1;
                decisions.push(dec);
            }
            let mut best: Option<usize> = None;
            for (i, dec) in decisions.iter().enumerate() {
                if !dec.act {
                    continue;
                }
                best = Some(match best {
                    None => i,
                    Some(b) => {
                        if self.c.removal_improves(dec.score, decisions[b].score)
                            || (dec.score == decisions[b].score
                                && self.selected[i] < self.selected[b])
                        {
                            i
                        } else {
                            b
                        }
                    }
                });
            }
            let Some(best) = best else { break };
            let v = self.selected.remove(best);
            self.trace.push(TraceEvent {
                run_index,
                iteration,
                kind: EventKind::Remove,
                variable: v,
                score: decisions[best].score,
            });
            iteration += 1;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{oracle_criterion, Dag};
    use std::sync::Arc;

    fn oracle_setup(n_nodes: usize, edges: &[(usize, usize)], latent: &[usize]) -> (Dataset, Criterion) {
        let dag = Arc::new(Dag::new(n_nodes, edges, latent).unwrap());
        let c = oracle_criterion(Arc::clone(&dag), 0).unwrap();
        let p = dag.observed_non_target(0).len();
        (Dataset::placeholder(p), c)
    }

    #[test]
    fn edgeless_oracle_selects_nothing_in_one_sweep() {
        let (d, c) = oracle_setup(6, &[], &[]);
        let r = fbs(&d, &c).unwrap();
        assert!(r.selected.is_empty());
        assert_eq!(r.n_evaluations, 5);

        let r = fbed(&d, &c, Runs::Finite(0)).unwrap();
        assert!(r.selected.is_empty());
        assert_eq!(r.n_evaluations, 5);
        assert_eq!(r.runs_executed, 1);
        assert!(r.trace.iter().all(|e| e.kind == EventKind::Drop && e.iteration == 0));
    }

    #[test]
    fn chain_keeps_only_the_adjacent_variable() {
        // T=0 -> A=1 -> B=2; variables: A->0, B->1.
        let (d, c) = oracle_setup(3, &[(0, 1), (1, 2)], &[]);
        let r = fbs(&d, &c).unwrap();
        assert_eq!(r.selected, vec![0]);
        for k in [Runs::Finite(0), Runs::Infinite] {
            assert_eq!(fbed(&d, &c, k).unwrap().selected, vec![0]);
        }
    }

    #[test]
    fn one_run_collider_drops_then_reconsiders() {
        // T=0 -> C=1 <- X=2; variables: C->0, X->1.
        let (d, c) = oracle_setup(3, &[(0, 1), (2, 1)], &[]);
        let first = one_run(&d, &c, &[]).unwrap();
        assert_eq!(first, vec![0]);
        let second = one_run(&d, &c, &first).unwrap();
        assert_eq!(second, vec![0, 1]);
    }

    #[test]
    fn one_run_trace_shows_single_sweep_drop() {
        let (d, c) = oracle_setup(3, &[(0, 1), (2, 1)], &[]);
        let mut engine = Engine::new(&d, &c, Vec::new()).unwrap();
        engine.one_run(0).unwrap();
        // Sweep 0 selects C (var 0) and drops X (var 1); nothing is left.
        assert_eq!(engine.n_evaluations, 2);
        assert_eq!(engine.trace.len(), 2);
        assert_eq!(engine.trace[0].kind, EventKind::Include);
        assert_eq!(engine.trace[0].variable, 0);
        assert_eq!(engine.trace[1].kind, EventKind::Drop);
        assert_eq!(engine.trace[1].variable, 1);
    }

    #[test]
    fn backward_phase_examples() {
        let (d, c) = oracle_setup(3, &[(0, 1), (1, 2)], &[]);
        // Empty set: nothing to do, zero evaluations.
        let mut engine = Engine::new(&d, &c, Vec::new()).unwrap();
        engine.backward(0).unwrap();
        assert_eq!(engine.n_evaluations, 0);

        // S = {A, B}: B (var 1) goes, A stays.
        assert_eq!(backward_phase(&d, &c, &[0, 1]).unwrap(), vec![0]);
        // The blanket itself survives untouched.
        assert_eq!(backward_phase(&d, &c, &[0]).unwrap(), vec![0]);
    }

    #[test]
    fn backward_keeps_collider_dependence() {
        // T=0 -> C=1 <- X=2: conditioning on C makes X relevant, so neither
        // member of {C, X} is removable.
        let (d, c) = oracle_setup(3, &[(0, 1), (2, 1)], &[]);
        assert_eq!(backward_phase(&d, &c, &[0, 1]).unwrap(), vec![0, 1]);
    }

    #[test]
    fn backward_strips_noise_down_to_blanket() {
        for seed in 0..20 {
            let dag = Arc::new(crate::graphs::random_dag(8, 0.35, 0, 9_000 + seed).unwrap());
            let mb = dag.markov_blanket(0).unwrap();
            let c = oracle_criterion(Arc::clone(&dag), 0).unwrap();
            let vars = dag.observed_non_target(0);
            let d = Dataset::placeholder(vars.len());
            let to_var = |node: usize| vars.iter().position(|&v| v == node).unwrap();
            let mb_vars: Vec<usize> = mb.iter().map(|&n| to_var(n)).collect();

            // Add every non-blanket variable that is separated given the
            // blanket, then confirm backward elimination strips them all.
            let mut s = mb_vars.clone();
            for (var, &node) in vars.iter().enumerate() {
                if !mb.contains(&node) && dag.d_separated(0, node, &mb).unwrap() {
                    s.push(var);
                }
            }
            let mut got = backward_phase(&d, &c, &s).unwrap();
            let mut want = mb_vars;
            got.sort_unstable();
            want.sort_unstable();
            assert_eq!(got, want, "seed {seed}");
        }
    }

    #[test]
    fn latent_collider_path_needs_more_runs() {
        // T=0 -> A=1, L=4 -> A, L -> B=2, P=3 -> B with L latent.
        // Variables map: A->0, B->1, P->2.
        let (d, c) = oracle_setup(5, &[(0, 1), (4, 1), (4, 2), (3, 2)], &[4]);
        assert_eq!(fbed(&d, &c, Runs::Finite(0)).unwrap().selected, vec![0]);
        assert_eq!(fbed(&d, &c, Runs::Finite(1)).unwrap().selected, vec![0, 1]);
        let inf = fbed(&d, &c, Runs::Infinite).unwrap();
        assert_eq!(inf.selected, vec![0, 1, 2]);
        assert_eq!(inf.runs_executed, 4); // three growing runs plus the empty one
    }

    #[test]
    fn results_are_deterministic() {
        let d = Dataset::generate_null(120, 30, 5).unwrap();
        let c = Criterion::it(0.2).unwrap();
        let a = fbed(&d, &c, Runs::Infinite).unwrap();
        let b = fbed(&d, &c, Runs::Infinite).unwrap();
        assert_eq!(a, b);
        let a = fbs(&d, &c).unwrap();
        let b = fbs(&d, &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_reconciles_with_selected() {
        let d = Dataset::generate_null(150, 40, 9).unwrap();
        let c = Criterion::it(0.15).unwrap();
        for r in [fbs(&d, &c).unwrap(), fbed(&d, &c, Runs::Infinite).unwrap()] {
            let mut live: Vec<usize> = Vec::new();
            for e in &r.trace {
                match e.kind {
                    EventKind::Include => live.push(e.variable),
                    EventKind::Remove => live.retain(|&v| v != e.variable),
                    EventKind::Drop => {}
                }
            }
            assert_eq!(live, r.selected);
            let mut dedup = r.selected.clone();
            dedup.sort_unstable();
            dedup.dedup();
            assert_eq!(dedup.len(), r.selected.len());
        }
    }

    #[test]
    fn evaluation_count_matches_trace_free_decisions() {
        // FBS on p candidates with nothing admissible: exactly p decisions.
        let (d, c) = oracle_setup(5, &[], &[]);
        let r = fbs(&d, &c).unwrap();
        assert_eq!(r.n_evaluations, 4);

        // Chain: sweep of 2, sweep of 1 (B inadmissible), backward test of A.
        let (d, c) = oracle_setup(3, &[(0, 1), (1, 2)], &[]);
        let r = fbs(&d, &c).unwrap();
        assert_eq!(r.n_evaluations, 2 + 1 + 1);
    }

    #[test]
    fn oracle_variable_count_must_match() {
        let dag = Arc::new(Dag::new(4, &[(0, 1)], &[]).unwrap());
        let c = oracle_criterion(dag, 0).unwrap();
        let d = Dataset::placeholder(2); // oracle expects 3
        assert!(matches!(
            fbs(&d, &c),
            Err(Error::VariableCountMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn numerical_failure_aborts_with_partial_trace() {
        // Columns of magnitude 1e200 overflow the weighted cross-products,
        // so the logistic solve fails even after the ridge retry.
        let n = 12;
        let good: Vec<f64> = (0..n).map(|i| (i as f64 / 3.0).sin()).collect();
        let huge: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 1e200 } else { -1e200 })
            .collect();
        let target: Vec<f64> = (0..n).map(|i| ((i / 2) % 2) as f64).collect();
        let d = Dataset::new(
            vec!["a".into(), "b".into()],
            vec![good, huge],
            "y",
            target,
        )
        .unwrap();
        let c = Criterion::it(0.05).unwrap();
        match fbs(&d, &c) {
            Err(Error::SelectionAborted { source, partial }) => {
                assert!(matches!(*source, Error::SingularSystem));
                assert!(partial.selected.is_empty());
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn runs_parse_and_display() {
        assert_eq!("3".parse::<Runs>().unwrap(), Runs::Finite(3));
        assert_eq!("inf".parse::<Runs>().unwrap(), Runs::Infinite);
        assert!("x".parse::<Runs>().is_err());
        assert_eq!(Runs::Finite(2).to_string(), "2");
        assert_eq!(Runs::Infinite.to_string(), "inf");
    }
}
