use nalgebra::{DMatrix, SymmetricEigen};

use super::{Applicability, CriterionStep, Prediction, ScenarioSpec, Target};
use crate::forms::{is_diagonal, min_eigenvalue, sym, Scenario, PSD_TOL};
use crate::lattice::{
    generator_leaves_interval_invariant, interval_invariant, is_ideal, OrderInterval, Subspace, PATTERN_TOL,
};

/// Absolute tolerance (scaled by `1 + ‖·‖`) for "this matrix vanishes".
const ZERO_TOL: f64 = 1e-10;

/// Random points added to the structured ones in the sampled ideal test.
const IDEAL_SAMPLES: usize = 200;

/// Coordinate subsets are enumerated only up to this `m`.
const MAX_ENUMERATED_DIM: usize = 16;

fn step(name: impl Into<String>, holds: bool) -> CriterionStep {
    CriterionStep {
        name: name.into(),
        holds,
    }
}

fn vanishes(a: &DMatrix<f64>, scale: f64) -> bool {
    a.is_empty() || a.amax() <= ZERO_TOL * (1.0 + scale)
}

fn is_psd(a: &DMatrix<f64>) -> bool {
    a.is_empty() || min_eigenvalue(a) >= -PSD_TOL * (1.0 + a.amax())
}

fn potential_blocks(sc: &Scenario) -> Vec<&DMatrix<f64>> {
    sc.potential.as_ref().map(|c| c.blocks()).unwrap_or_default()
}

fn ends(sc: &Scenario) -> [(&'static str, &Subspace, &DMatrix<f64>); 2] {
    [("left", &sc.y_left, &sc.s_left), ("right", &sc.y_right, &sc.s_right)]
}

/// The targets `analyze` predicts when none are configured.
pub fn default_targets(sc: &Scenario) -> Vec<Target> {
    let full = Subspace::full(sc.m);
    let mut neumann = Scenario::new("neumann", sc.m, full.clone(), full);
    neumann.diffusion = sc.diffusion.clone();
    neumann.potential = sc.potential.clone();
    neumann.gamma = sc.gamma;
    vec![
        Target::Positivity,
        Target::LinfContraction,
        Target::Irreducibility,
        Target::Symmetry,
        Target::Stability,
        Target::dominated_by(&neumann),
        Target::ScalarDomination,
    ]
}

pub fn predict(sc: &Scenario, targets: &[Target]) -> Vec<Prediction> {
    targets.iter().map(|t| predict_one(sc, t)).collect()
}

pub fn predict_one(sc: &Scenario, target: &Target) -> Prediction {
    let (predicted, applicability, criterion_trace) = match target {
        Target::Positivity | Target::LinfContraction | Target::Interval { .. } => match target.order_interval(sc.m) {
            Some(Ok(j)) if j.dim() == sc.m => predict_interval(sc, &j),
            _ => (
                None,
                Applicability::Inapplicable,
                vec![step("order interval well formed", false)],
            ),
        },
        Target::SubspaceInvariance { generators } => match super::subspace_from_generators(sc.m, generators) {
            Ok(c) => {
                let trace = subspace_criteria(sc, &c);
                let ok = trace.iter().all(|s| s.holds);
                (Some(ok), Applicability::Biconditional, trace)
            }
            Err(_) => (
                None,
                Applicability::Inapplicable,
                vec![step("subspace generators well formed", false)],
            ),
        },
        Target::Irreducibility => predict_irreducibility(sc),
        Target::Symmetry => predict_symmetry(sc),
        Target::Stability => predict_stability(sc),
        Target::Domination { dominating } => predict_domination(sc, dominating),
        Target::ScalarDomination => match sc.scalar_companion() {
            Ok(_) => (
                Some(true),
                Applicability::SufficientOnly,
                vec![step("D, S and C are scalar multiples of I and Y = W", true)],
            ),
            Err(_) => (
                None,
                Applicability::Inapplicable,
                vec![step("D, S and C are scalar multiples of I and Y = W", false)],
            ),
        },
    };
    Prediction {
        property: target.property(),
        target: target.clone(),
        predicted,
        applicability,
        criterion_trace,
    }
}

type Outcome = (Option<bool>, Applicability, Vec<CriterionStep>);

/// `[c_lo, c_hi]` such that `J ∩ span{q} = {t·q : t ∈ [c_lo, c_hi]}`.
fn line_section(j: &OrderInterval, q: &[f64]) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (i, &qi) in q.iter().enumerate() {
        if qi.abs() <= 1e-12 {
            continue;
        }
        let (a, b) = (j.lower()[i] / qi, j.upper()[i] / qi);
        let (a, b) = if qi > 0.0 { (a, b) } else { (b, a) };
        lo = lo.max(a);
        hi = hi.min(b);
    }
    (lo, hi)
}

/// Whether `e^{−tS}` restricted to `Y` leaves `J ∩ Y` invariant, assuming
/// `P_Y J ⊆ J` and `0 ∈ J`. Only the compression of `S` to `Y` enters the
/// form, so this is the exact boundary condition. `None` when undecided.
fn boundary_generator(y: &Subspace, s: &DMatrix<f64>, j: &OrderInterval) -> Option<bool> {
    if y.is_zero() {
        return Some(true);
    }
    if let Some(idx) = y.coordinate_indices() {
        let k = idx.len();
        let s_ii = DMatrix::from_fn(k, k, |a, b| -s[(idx[a], idx[b])]);
        let lo = idx.iter().map(|&i| j.lower()[i]).collect();
        let hi = idx.iter().map(|&i| j.upper()[i]).collect();
        let ji = OrderInterval::new(lo, hi).ok()?;
        return Some(generator_leaves_interval_invariant(&s_ii, &ji));
    }
    if y.dim() == 1 {
        let q = y.basis().column(0).into_owned();
        let sigma = q.dot(&(s * &q));
        if sigma >= -ZERO_TOL * (1.0 + s.amax()) {
            return Some(true);
        }
        let (lo, hi) = line_section(j, q.as_slice());
        let cone = (lo == f64::NEG_INFINITY || lo.abs() <= 1e-12) && (hi == f64::INFINITY || hi.abs() <= 1e-12);
        return Some(cone);
    }
    if generator_leaves_interval_invariant(&(-s), j) {
        return Some(true);
    }
    None
}

fn predict_interval(sc: &Scenario, j: &OrderInterval) -> Outcome {
    let mut trace = vec![step("J contains 0", j.contains_zero())];
    if !j.contains_zero() {
        return (None, Applicability::Inapplicable, trace);
    }
    let mut projections_ok = true;
    for (side, y, _) in ends(sc) {
        let ok = interval_invariant(y.projection(), j);
        projections_ok &= ok;
        trace.push(step(format!("P_Y leaves J invariant ({side})"), ok));
    }
    if !sc.is_local() {
        trace.push(step("D local", false));
        let predicted = if projections_ok { None } else { Some(false) };
        return (predicted, Applicability::NecessaryOnly, trace);
    }
    let mut undecided = false;
    let mut all = projections_ok;
    for (side, y, s) in ends(sc) {
        match boundary_generator(y, s, j) {
            Some(ok) => {
                all &= ok;
                trace.push(step(format!("e^(-tS) leaves J ∩ Y invariant ({side})"), ok));
            }
            None => {
                undecided = true;
                trace.push(step(format!("e^(-tS) on J ∩ Y decidable ({side})"), false));
            }
        }
    }
    let potential_ok = potential_blocks(sc)
        .iter()
        .all(|c| generator_leaves_interval_invariant(&(-*c), j));
    all &= potential_ok;
    trace.push(step("e^(-tC) leaves J invariant", potential_ok));
    let predicted = if !all {
        // a decided component failed
        Some(false)
    } else if undecided {
        None
    } else {
        Some(true)
    };
    let applicability = if undecided && all {
        Applicability::Inapplicable
    } else {
        Applicability::Biconditional
    };
    (predicted, applicability, trace)
}

/// The conditions under which the semigroup leaves `C_H` invariant.
fn subspace_criteria(sc: &Scenario, c: &Subspace) -> Vec<CriterionStep> {
    let mut trace = Vec::new();
    for (side, y, _) in ends(sc) {
        trace.push(step(format!("P_Y C ⊆ C ({side})"), y.maps_into(c)));
    }
    let p = c.projection();
    let q = DMatrix::identity(sc.m, sc.m) - p;
    let d_ok = sc.diffusion.blocks().iter().all(|d| vanishes(&(&q * *d * p), d.amax()));
    trace.push(step("D C ⊆ C", d_ok));
    let perp = c.orthogonal_complement();
    for (side, y, s) in ends(sc) {
        let inside = y.intersection(c);
        let outside = y.intersection(&perp);
        let coupling = outside.basis().transpose() * s * inside.basis();
        trace.push(step(
            format!("S does not couple Y ∩ C to Y ∩ C⊥ ({side})"),
            vanishes(&coupling, s.amax()),
        ));
    }
    let c_ok = potential_blocks(sc)
        .iter()
        .all(|cc| vanishes(&(&q * *cc * p), cc.amax()));
    trace.push(step("potential leaves C invariant", c_ok));
    trace
}

fn predict_irreducibility(sc: &Scenario) -> Outcome {
    let m = sc.m;
    if m > MAX_ENUMERATED_DIM {
        return (
            None,
            Applicability::Inapplicable,
            vec![step("m small enough to enumerate ideals", false)],
        );
    }
    let pattern_ok = ends(sc)
        .iter()
        .all(|(_, y, _)| crate::lattice::is_irreducible(y, PATTERN_TOL));
    let invariant_ideal = (1..(1usize << m) - 1).find(|mask| {
        let idx: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let c = Subspace::coordinate(m, &idx);
        subspace_criteria(sc, &c).iter().all(|s| s.holds)
    });
    let none_invariant = invariant_ideal.is_none();
    let mut trace = vec![step("P_Y irreducible at both ends", pattern_ok)];
    trace.push(step("no invariant coordinate ideal", none_invariant));
    (Some(none_invariant), Applicability::Biconditional, trace)
}

fn predict_symmetry(sc: &Scenario) -> Outcome {
    let sym_ok = |d: &DMatrix<f64>| vanishes(&(d - d.transpose()), d.amax());
    let d_ok = sc.diffusion.blocks().into_iter().all(sym_ok);
    let c_ok = potential_blocks(sc).into_iter().all(sym_ok);
    let mut trace = vec![step("D symmetric", d_ok), step("C symmetric", c_ok)];
    let mut all = d_ok && c_ok;
    for (side, y, s) in ends(sc) {
        let p = y.projection();
        let ok = vanishes(&(p * (s - s.transpose()) * p), s.amax());
        all &= ok;
        trace.push(step(format!("P_Y (S − Sᵀ) P_Y = 0 ({side})"), ok));
    }
    (Some(all), Applicability::Biconditional, trace)
}

/// Dimension of the constants in `Y_left ∩ Y_right` on which the boundary
/// and potential terms vanish; these are exactly the nonzero solutions of
/// `a(f, f) = 0` when the terms are accretive.
pub(crate) fn degenerate_constants(sc: &Scenario) -> usize {
    let b = sc.y_left.intersection(&sc.y_right);
    if b.is_zero() {
        return 0;
    }
    let mut q = DMatrix::zeros(sc.m, sc.m);
    for (_, y, s) in ends(sc) {
        let p = y.projection();
        q += p * sym(s) * p;
    }
    for c in potential_blocks(sc) {
        q += sym(c);
    }
    let reduced = b.basis().transpose() * &q * b.basis();
    let scale = 1.0 + q.amax();
    SymmetricEigen::new(sym(&reduced))
        .eigenvalues
        .iter()
        .filter(|&&v| v.abs() <= 1e-9 * scale)
        .count()
}

fn predict_stability(sc: &Scenario) -> Outcome {
    let accretive = ends(sc).iter().all(|(_, y, s)| {
        let p = y.projection();
        is_psd(&(p * sym(s) * p))
    });
    let potential_psd = potential_blocks(sc).iter().all(|c| is_psd(&sym(c)));
    let mut trace = vec![
        step("P_Y sym(S) P_Y positive semidefinite", accretive),
        step("sym(C) positive semidefinite", potential_psd),
    ];
    if !(accretive && potential_psd) {
        return (None, Applicability::Inapplicable, trace);
    }
    let dim = degenerate_constants(sc);
    trace.push(step("no nonzero constant with a(f,f) = 0", dim == 0));
    if predict_symmetry(sc).0 == Some(true) {
        (Some(dim == 0), Applicability::Biconditional, trace)
    } else {
        let predicted = (dim == 0).then_some(true);
        (predicted, Applicability::SufficientOnly, trace)
    }
}

/// `(S1 x | y) ≥ (S2 |x| | |y|)` for all `x, y ∈ Y1` with `x_i y_i ≥ 0`.
/// Exact for coordinate subspaces and lines, sampled otherwise.
fn boundary_domination(y1: &Subspace, s1: &DMatrix<f64>, s2: &DMatrix<f64>) -> (bool, bool) {
    let tol = ZERO_TOL * (1.0 + s1.amax() + s2.amax());
    if y1.is_zero() {
        return (true, true);
    }
    if let Some(idx) = y1.coordinate_indices() {
        let ok = idx.iter().all(|&i| {
            idx.iter().all(|&k| {
                if i == k {
                    s1[(i, i)] - s2[(i, i)] >= -tol
                } else {
                    s2[(k, i)] <= -s1[(k, i)].abs() + tol
                }
            })
        });
        return (ok, true);
    }
    if y1.dim() == 1 {
        let q = y1.basis().column(0).into_owned();
        let qa = q.abs();
        let ok = q.dot(&(s1 * &q)) >= qa.dot(&(s2 * &qa)) - tol;
        return (ok, true);
    }
    // sampled: basis vectors, their sign combinations and random points
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(crate::lattice::DEFAULT_SEED);
    let b = y1.basis();
    let k = b.ncols();
    let mut pts: Vec<nalgebra::DVector<f64>> = b.column_iter().map(|c| c.into_owned()).collect();
    for mask in 1..(1usize << k.min(10)) {
        pts.push(b * nalgebra::DVector::from_fn(k, |i, _| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }));
    }
    for _ in 0..IDEAL_SAMPLES {
        pts.push(b * nalgebra::DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0)));
    }
    for x in &pts {
        for y in &pts {
            if x.iter().zip(y.iter()).any(|(a, b)| a * b < -1e-12) {
                continue;
            }
            if x.dot(&(s1.transpose() * y)) < x.abs().dot(&(s2.transpose() * y.abs())) - tol {
                return (false, false);
            }
        }
    }
    (true, false)
}

fn predict_domination(sc: &Scenario, dominating: &ScenarioSpec) -> Outcome {
    let mut trace = Vec::new();
    let other = match dominating.to_scenario() {
        Ok(o) if o.m == sc.m => o,
        _ => {
            trace.push(step("dominating scenario well formed with the same m", false));
            return (None, Applicability::Inapplicable, trace);
        }
    };
    let positive = predict_one(&other, &Target::Positivity).predicted == Some(true);
    trace.push(step("dominating semigroup positive", positive));
    let same_d = sc.diffusion == other.diffusion;
    let local = sc
        .diffusion
        .blocks()
        .iter()
        .all(|d| is_diagonal(d, ZERO_TOL * (1.0 + d.amax())));
    trace.push(step("same local diffusion", same_d && local));
    let same_c = sc.potential == other.potential;
    trace.push(step("same potential", same_c));
    if !(positive && same_d && local && same_c) {
        return (None, Applicability::Inapplicable, trace);
    }
    let mut all = true;
    let mut exact = true;
    for ((side, y1, s1), (_, y2, s2)) in ends(sc).into_iter().zip(ends(&other)) {
        let ideal = is_ideal(y1, y2, IDEAL_SAMPLES);
        trace.push(step(format!("Y1 ideal of Y2 ({side})"), ideal));
        let (ok, decided) = boundary_domination(y1, s1, s2);
        trace.push(step(format!("S1 ≥ S2 on Y1 ({side})"), ok));
        all &= ideal && ok;
        exact &= decided;
    }
    if all && !exact {
        (None, Applicability::NecessaryOnly, trace)
    } else {
        (Some(all), Applicability::Biconditional, trace)
    }
}
