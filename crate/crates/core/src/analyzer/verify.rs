use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{initial_data, DataSet};
use super::{subspace_from_generators, Prediction, Report, ReportRow, ScenarioSpec, Target, Verdict, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::forms::{assemble, build_mesh, form_diagnostics, DiscreteForm, Mesh, Scenario};
use crate::lattice::OrderInterval;
use crate::semigroup::{
    check_domination, check_scalar_domination, decay_rate, observe, reach_sets, symmetry_defect, PropertyDescriptor,
    PropertyKind, PropertyObservation, Stepper, TimeConfig, Trajectory, Witness, VIOLATION_TOL,
};

/// Trajectories are simulated in parallel batches of this size; the witness
/// search stops after the first batch that contains a witness.
const CHUNK: usize = 16;

/// Decay rates below this count as "no exponential decay".
pub const DECAY_THRESHOLD: f64 = 1e-3;

/// Relative threshold for a component to count as reached.
pub const REACH_TOL: f64 = 1e-10;

/// Symmetry defects above this count as a non-symmetric evolution.
pub const SYMMETRY_DEFECT_TOL: f64 = 1e-9;

/// Upper bound on the random pairs used for the symmetry check and the random
/// data used for decay rates.
const SPARSE_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_elements: usize,
    pub time: TimeConfig,
    /// Random initial data per row, on top of the structured ones.
    pub samples: usize,
    pub seed: u64,
    /// Absolute violation tolerance of the trajectory observers.
    pub tolerance: f64,
}

impl SimConfig {
    /// Default time grid for `n_elements`, 200 samples, seed 0.
    pub fn new(n_elements: usize) -> Result<Self> {
        let mesh = build_mesh(n_elements)?;
        Ok(Self {
            n_elements,
            time: TimeConfig::default_for(&mesh),
            samples: 200,
            seed: 0,
            tolerance: VIOLATION_TOL,
        })
    }

    pub fn mesh(&self) -> Result<Mesh> {
        build_mesh(self.n_elements)
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::new(32).expect("32 elements is a valid mesh")
    }
}

struct Context<'a> {
    scenario: &'a Scenario,
    form: DiscreteForm,
    stepper: Stepper,
    cfg: &'a SimConfig,
}

fn row_seed(seed: u64, row: usize) -> u64 {
    seed ^ (row as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn verdict(predicted: Option<bool>, holds: bool) -> Verdict {
    match (predicted, holds) {
        (Some(true), true) => Verdict::Confirmed,
        (Some(true), false) => Verdict::RefutedPrediction,
        (Some(false), false) => Verdict::Confirmed,
        (Some(false), true) => Verdict::NoCounterexampleFound,
        (None, _) => Verdict::Inapplicable,
    }
}

struct Search {
    observation: PropertyObservation,
    tested: usize,
    witness: Option<usize>,
    trajectory: Option<Trajectory>,
}

/// Runs `run` over `data` in parallel batches and merges the observations in
/// index order, so that the reported witness is the first violating datum.
fn search<F>(kind: PropertyKind, tol: f64, data: &[DVector<f64>], stop_on_witness: bool, run: F) -> Result<Search>
where
    F: Fn(&DVector<f64>) -> Result<(PropertyObservation, Trajectory)> + Sync,
{
    let mut out = Search {
        observation: PropertyObservation::new(kind, tol),
        tested: 0,
        witness: None,
        trajectory: None,
    };
    for (c, chunk) in data.chunks(CHUNK).enumerate() {
        let results: Vec<Result<(PropertyObservation, Trajectory)>> = chunk.par_iter().map(&run).collect();
        for (k, r) in results.into_iter().enumerate() {
            let (obs, traj) = r?;
            out.tested += 1;
            out.observation.merge(&obs);
            if !obs.holds && out.witness.is_none() {
                out.witness = Some(c * CHUNK + k);
                out.trajectory = Some(traj);
            } else if out.trajectory.is_none() {
                out.trajectory = Some(traj);
            }
        }
        if stop_on_witness && out.witness.is_some() {
            break;
        }
    }
    Ok(out)
}

fn signed_data(ctx: &Context, seed: u64, random: usize) -> Vec<DVector<f64>> {
    let set = DataSet::Interval(OrderInterval::unit_box(ctx.scenario.m));
    initial_data(&ctx.form.mesh, &set, random, seed)
}

fn companion(ctx: &Context, sc: &Scenario) -> Result<(DiscreteForm, Stepper)> {
    let form = assemble(sc, &ctx.form.mesh)?;
    let stepper = Stepper::new(&form, &ctx.cfg.time)?;
    Ok((form, stepper))
}

/// Projection of `u0` onto the discrete `V_Y`, as a nodal vector.
fn projected(form: &DiscreteForm, u0: &DVector<f64>) -> DVector<f64> {
    form.lift(&form.restrict(u0))
}

fn end_witness(ctx: &Context, component: Option<usize>) -> Witness {
    Witness {
        time: ctx.cfg.time.t_end,
        node: 0,
        x: 0.0,
        component,
    }
}

fn observe_row(ctx: &Context, row: usize, p: &Prediction) -> Result<Search> {
    let cfg = ctx.cfg;
    let seed = row_seed(cfg.seed, row);
    let stop = p.predicted != Some(true);
    let mesh = &ctx.form.mesh;
    let m = ctx.scenario.m;
    match &p.target {
        Target::Positivity | Target::LinfContraction | Target::Interval { .. } => {
            let j = p.target.order_interval(m).expect("interval target").and_then(|j| {
                if j.dim() == m {
                    Ok(j)
                } else {
                    Err(Error::DimensionMismatch {
                        expected: m,
                        found: j.dim(),
                    })
                }
            })?;
            let data = initial_data(mesh, &DataSet::Interval(j.clone()), cfg.samples, seed);
            let desc = PropertyDescriptor::Interval(j);
            search(desc.kind(), cfg.tolerance, &data, stop, |u0| {
                let traj = ctx.stepper.run(&ctx.form, u0);
                Ok((observe(&traj, &desc, cfg.tolerance), traj))
            })
        }
        Target::SubspaceInvariance { generators } => {
            let c = subspace_from_generators(m, generators)?;
            let data = initial_data(mesh, &DataSet::Subspace(c.clone()), cfg.samples, seed);
            let desc = PropertyDescriptor::Subspace(c);
            search(PropertyKind::SubspaceInvariance, cfg.tolerance, &data, stop, |u0| {
                let traj = ctx.stepper.run(&ctx.form, u0);
                Ok((observe(&traj, &desc, cfg.tolerance), traj))
            })
        }
        Target::Domination { dominating } => {
            let other = dominating.to_scenario()?;
            let (form2, stepper2) = companion(ctx, &other)?;
            let data = signed_data(ctx, seed, cfg.samples);
            search(PropertyKind::Domination, cfg.tolerance, &data, stop, |u0| {
                let f = projected(&ctx.form, u0);
                let t1 = ctx.stepper.run(&ctx.form, &f);
                let t2 = stepper2.run(&form2, &f.abs());
                Ok((check_domination(&t1, &t2, cfg.tolerance)?, t1))
            })
        }
        Target::ScalarDomination => {
            let scalar = ctx.scenario.scalar_companion()?;
            let (form2, stepper2) = companion(ctx, &scalar)?;
            let data = signed_data(ctx, seed, cfg.samples);
            search(PropertyKind::ScalarDomination, cfg.tolerance, &data, stop, |u0| {
                let f = projected(&ctx.form, u0);
                let v0 = DVector::from_fn(mesh.n_nodes(), |i, _| ctx.form.nodal(&f, i).norm());
                let t1 = ctx.stepper.run(&ctx.form, &f);
                let t2 = stepper2.run(&form2, &v0);
                Ok((check_scalar_domination(&t1, &t2, cfg.tolerance)?, t1))
            })
        }
        Target::Stability => {
            let data = signed_data(ctx, seed, cfg.samples.min(SPARSE_SAMPLES));
            search(PropertyKind::Stability, 0.0, &data, stop, |u0| {
                let traj = ctx.stepper.run(&ctx.form, u0);
                let rate = match decay_rate(&traj) {
                    Ok(r) => r,
                    // the norm vanished, which is as stable as it gets
                    Err(Error::NormUnderflow) => f64::INFINITY,
                    Err(e) => return Err(e),
                };
                let mut obs = PropertyObservation::new(PropertyKind::Stability, 0.0);
                obs.record(DECAY_THRESHOLD - rate, || end_witness(ctx, None));
                Ok((obs, traj))
            })
        }
        Target::Symmetry => {
            let pairs = cfg.samples.clamp(1, SPARSE_SAMPLES);
            let data = signed_data(ctx, seed, 2 * pairs);
            let random = &data[data.len() - 2 * pairs..];
            let results: Vec<Result<f64>> = random
                .par_chunks(2)
                .map(|fg| {
                    let f = ctx.form.restrict(&fg[0]);
                    let g = ctx.form.restrict(&fg[1]);
                    symmetry_defect(&ctx.form, &cfg.time, &f, &g)
                })
                .collect();
            let mut obs = PropertyObservation::new(PropertyKind::Symmetry, SYMMETRY_DEFECT_TOL);
            let mut witness = None;
            for (k, r) in results.into_iter().enumerate() {
                let d = r?;
                obs.record(d, || end_witness(ctx, None));
                if d > SYMMETRY_DEFECT_TOL && witness.is_none() {
                    witness = Some(k);
                }
            }
            Ok(Search {
                observation: obs,
                tested: pairs,
                witness,
                trajectory: None,
            })
        }
        Target::Irreducibility => {
            let reach = reach_sets(&ctx.form, &cfg.time, REACH_TOL)?;
            let mut obs = PropertyObservation::new(PropertyKind::Irreducibility, 0.0);
            let mut witness = None;
            for (j, hits) in reach.iter().enumerate() {
                for (k, &hit) in hits.iter().enumerate() {
                    obs.record(if hit { 0.0 } else { 1.0 }, || end_witness(ctx, Some(k)));
                    if !hit && witness.is_none() {
                        witness = Some(j);
                    }
                }
            }
            Ok(Search {
                observation: obs,
                tested: m,
                witness,
                trajectory: None,
            })
        }
    }
}

fn verify_row(ctx: &Context, row: usize, p: &Prediction) -> ReportRow {
    match observe_row(ctx, row, p) {
        Ok(s) => ReportRow {
            prediction: p.clone(),
            verdict: verdict(p.predicted, s.observation.holds),
            observation: Some(s.observation),
            data_tested: s.tested,
            witness_datum: s.witness,
            error: None,
            trajectory: s.trajectory,
        },
        Err(e) => ReportRow {
            prediction: p.clone(),
            observation: None,
            // an undecided row whose observer cannot run (e.g. no scalar
            // companion) stays inapplicable rather than failed
            verdict: if p.predicted.is_none() {
                Verdict::Inapplicable
            } else {
                Verdict::Failed
            },
            data_tested: 0,
            witness_datum: None,
            error: Some(e.to_string()),
            trajectory: None,
        },
    }
}

/// Confronts each prediction with simulated trajectories. Rows run
/// concurrently; a failing row is reported as `failed` without aborting the
/// others. Errors that prevent any simulation (invalid scenario, singular
/// step matrix) are returned directly.
pub fn verify(scenario: &Scenario, predictions: &[Prediction], cfg: &SimConfig) -> Result<Report> {
    let mesh = cfg.mesh()?;
    let form = assemble(scenario, &mesh)?;
    let stepper = Stepper::new(&form, &cfg.time)?;
    let diagnostics = form_diagnostics(&form, scenario);
    let ctx = Context {
        scenario,
        form,
        stepper,
        cfg,
    };
    let rows = predictions
        .par_iter()
        .enumerate()
        .map(|(i, p)| verify_row(&ctx, i, p))
        .collect();
    Ok(Report {
        schema_version: SCHEMA_VERSION.to_string(),
        scenario: ScenarioSpec::from_scenario(scenario),
        diagnostics,
        ellipticity_margin: scenario.ellipticity_margin(),
        simulation: *cfg,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{predict, predict_one, preset, Preset};
    use super::*;

    fn quick() -> SimConfig {
        let mut cfg = SimConfig::new(16).unwrap();
        cfg.samples = 24;
        cfg.time.t_end = 0.25;
        cfg
    }

    #[test]
    fn kirchhoff_rows_are_confirmed() {
        let sc = preset(&Preset::Kirchhoff, 3).unwrap();
        let preds = predict(&sc, &super::super::default_targets(&sc));
        let report = verify(&sc, &preds, &quick()).unwrap();
        for row in &report.rows {
            assert_ne!(row.verdict, Verdict::RefutedPrediction, "{:?}", row.prediction.target);
            assert_ne!(row.verdict, Verdict::Failed, "{:?}", row.error);
        }
        let pos = &report.rows[0];
        assert_eq!(pos.verdict, Verdict::Confirmed);
        assert!(pos.observation.as_ref().unwrap().worst_violation <= 1e-9);
    }

    #[test]
    fn anti_kirchhoff_linf_witness() {
        let sc = preset(&Preset::AntiKirchhoff, 3).unwrap();
        let p = predict_one(&sc, &Target::LinfContraction);
        let report = verify(&sc, &[p], &quick()).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.verdict, Verdict::Confirmed);
        assert!(row.witness_datum.is_some());
        assert!(!row.observation.as_ref().unwrap().holds);
    }

    #[test]
    fn dirichlet_dominated_by_neumann_confirmed() {
        let d = preset(&Preset::Dirichlet, 2).unwrap();
        let n = preset(&Preset::Neumann, 2).unwrap();
        let p = predict_one(&d, &Target::dominated_by(&n));
        let report = verify(&d, &[p], &quick()).unwrap();
        assert_eq!(report.rows[0].verdict, Verdict::Confirmed);
    }

    #[test]
    fn forced_wrong_prediction_is_refuted() {
        let sc = preset(&Preset::AntiKirchhoff, 3).unwrap();
        let mut p = predict_one(&sc, &Target::Positivity);
        p.predicted = Some(true);
        let report = verify(&sc, &[p], &quick()).unwrap();
        assert_eq!(report.rows[0].verdict, Verdict::RefutedPrediction);
        assert!(report.any_refuted());
    }

    #[test]
    fn mismatched_dimension_fails_the_row_only() {
        let sc = preset(&Preset::Neumann, 2).unwrap();
        let bad = predict_one(
            &preset(&Preset::Neumann, 3).unwrap(),
            &Target::interval(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]),
        );
        let good = predict_one(&sc, &Target::Positivity);
        let report = verify(&sc, &[bad, good], &quick()).unwrap();
        assert_eq!(report.rows[0].verdict, Verdict::Failed);
        assert_eq!(report.rows[1].verdict, Verdict::Confirmed);
    }

    #[test]
    fn reports_are_reproducible() {
        let sc = preset(&Preset::AntiKirchhoff, 2).unwrap();
        let preds = predict(&sc, &super::super::default_targets(&sc));
        let a = serde_json::to_string(&verify(&sc, &preds, &quick()).unwrap()).unwrap();
        let b = serde_json::to_string(&verify(&sc, &preds, &quick()).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
