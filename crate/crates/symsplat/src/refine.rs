//! Mirror parameter refinement: corrects accumulator discretization error
//! by descending a chamfer objective on the splat means.

use serde::{Deserialize, Serialize};

use crate::kdtree::KdTree;
use crate::math::{self, Vec3};
use crate::mirror::{reflect_point, MirrorPlane};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    #[default]
    OneSidedChamfer,
    TrimmedChamfer,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RefineOptions {
    /// Initial per-parameter step.
    pub step_size: f64,
    pub max_iters: usize,
    /// Convergence threshold on cost decrease.
    pub tol: f64,
    pub objective: Objective,
    /// Fraction of best matches kept by the trimmed objective.
    pub trim_fraction: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            step_size: 1e-3,
            max_iters: 200,
            tol: 1e-8,
            objective: Objective::OneSidedChamfer,
            trim_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RefineReport<S: Real> {
    pub initial_cost: S,
    pub final_cost: S,
    pub iterations: usize,
    /// Set when a non-finite cost aborted the descent.
    pub aborted: bool,
}

fn mean_of_best<S: Real>(mut dists: Vec<S>, fraction: S) -> S {
    let keep = ((S::from_usize(dists.len()).unwrap() * fraction)
        .ceil()
        .as_f64() as usize)
        .clamp(1, dists.len());
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    dists.truncate(keep);
    let n = S::from_usize(keep).unwrap();
    dists.into_iter().sum::<S>() / n
}

fn cost_against_tree<S: Real>(
    left: &[Vec3<S>],
    tree: &KdTree<S>,
    m: &MirrorPlane<S>,
    objective: Objective,
    trim_fraction: S,
) -> S {
    let dists: Vec<S> = left
        .iter()
        .map(|&x| tree.nearest(reflect_point(x, m)).map_or(S::zero(), |(_, d2)| d2))
        .collect();
    match objective {
        Objective::OneSidedChamfer => {
            let n = S::from_usize(dists.len()).unwrap();
            dists.into_iter().sum::<S>() / n
        }
        Objective::TrimmedChamfer => mean_of_best(dists, trim_fraction),
    }
}

/// One-sided chamfer cost: mean over left points of the squared distance
/// from their reflection to the nearest right point. The trimmed variant
/// averages only the best matches.
pub fn symmetry_cost<S: Real>(
    left: &[Vec3<S>],
    right: &[Vec3<S>],
    m: &MirrorPlane<S>,
    objective: Objective,
    trim_fraction: S,
) -> S {
    assert!(!left.is_empty() && !right.is_empty());
    let tree = KdTree::build(right);
    cost_against_tree(left, &tree, m, objective, trim_fraction)
}

/// Cost with correspondences frozen: mean squared distance between
/// reflect(x) and its pinned counterpart. Smooth in the parameters, which
/// makes it the finite-difference target.
pub fn correspondence_cost<S: Real>(pairs: &[(Vec3<S>, Vec3<S>)], m: &MirrorPlane<S>) -> S {
    let n = S::from_usize(pairs.len()).unwrap();
    pairs
        .iter()
        .map(|&(x, y)| {
            let d = math::sub(reflect_point(x, m), y);
            math::dot(d, d)
        })
        .sum::<S>()
        / n
}

fn plane_of<S: Real>(p: [S; 3]) -> MirrorPlane<S> {
    canonicalize(p)
}

/// Wraps beta into [0, 2pi) and clamps alpha into [0, pi]; gamma may go
/// negative since the stored orientation keeps n_z >= 0.
pub fn canonicalize<S: Real>(p: [S; 3]) -> MirrorPlane<S> {
    let alpha = p[0].max(S::zero()).min(S::pi());
    let mut beta = p[1] % S::two_pi();
    if beta < S::zero() {
        beta = beta + S::two_pi();
    }
    MirrorPlane {
        alpha,
        beta,
        gamma: p[2],
    }
}

/// Central finite-difference gradient of `f` at `p`.
pub fn fd_gradient_central<S: Real>(f: &dyn Fn([S; 3]) -> S, p: [S; 3], h: S) -> [S; 3] {
    let mut g = [S::zero(); 3];
    for i in 0..3 {
        let mut hi = p;
        let mut lo = p;
        hi[i] = hi[i] + h;
        lo[i] = lo[i] - h;
        g[i] = (f(hi) - f(lo)) / (S::two() * h);
    }
    g
}

/// One-sided (forward) finite-difference gradient of `f` at `p`.
pub fn fd_gradient_forward<S: Real>(f: &dyn Fn([S; 3]) -> S, p: [S; 3], h: S) -> [S; 3] {
    let base = f(p);
    let mut g = [S::zero(); 3];
    for i in 0..3 {
        let mut hi = p;
        hi[i] = hi[i] + h;
        g[i] = (f(hi) - base) / h;
    }
    g
}

const FD_STEP: f64 = 1e-7;

/// Gradient descent on (alpha, beta, gamma) with ICP-style alternation:
/// nearest-neighbor correspondences are frozen for each iteration's
/// finite-difference gradient and re-computed after every accepted step.
/// The step size backtracks on failure and grows on success; the best
/// iterate by true cost is returned, so the result never costs more than
/// the input mirror.
pub fn refine_mirror<S: Real>(
    left: &[Vec3<S>],
    right: &[Vec3<S>],
    m0: &MirrorPlane<S>,
    opts: &RefineOptions,
) -> (MirrorPlane<S>, RefineReport<S>) {
    assert!(!left.is_empty() && !right.is_empty());
    let tree = KdTree::build(right);
    let trim = S::from_f64(opts.trim_fraction);
    let true_cost =
        |m: &MirrorPlane<S>| cost_against_tree(left, &tree, m, opts.objective, trim);

    let mut current = *m0;
    let mut best = *m0;
    let mut best_cost = true_cost(m0);
    let mut report = RefineReport {
        initial_cost: best_cost,
        final_cost: best_cost,
        ..RefineReport::default()
    };
    if !best_cost.is_finite() {
        report.aborted = true;
        return (*m0, report);
    }

    let mut step = S::from_f64(opts.step_size);
    let h = S::from_f64(FD_STEP);
    let tol = S::from_f64(opts.tol);

    for iter in 0..opts.max_iters {
        report.iterations = iter + 1;

        // Freeze correspondences at the current mirror.
        let mut pairs: Vec<(Vec3<S>, Vec3<S>)> = left
            .iter()
            .filter_map(|&x| {
                tree.nearest(reflect_point(x, &current))
                    .map(|(ri, _)| (x, right[ri as usize]))
            })
            .collect();
        if opts.objective == Objective::TrimmedChamfer {
            let mut scored: Vec<((Vec3<S>, Vec3<S>), S)> = pairs
                .iter()
                .map(|&(x, y)| {
                    let d = math::sub(reflect_point(x, &current), y);
                    ((x, y), math::dot(d, d))
                })
                .collect();
            scored.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
            let keep = ((S::from_usize(scored.len()).unwrap() * trim).ceil().as_f64() as usize)
                .clamp(1, scored.len());
            pairs = scored.into_iter().take(keep).map(|(p, _)| p).collect();
        }

        let frozen = |p: [S; 3]| correspondence_cost(&pairs, &plane_of(p));
        let p = [current.alpha, current.beta, current.gamma];
        let grad = fd_gradient_central(&frozen, p, h);
        if grad.iter().any(|g| !g.is_finite()) {
            report.aborted = true;
            return (*m0, report);
        }
        let grad_norm = math::norm(grad);
        if grad_norm == S::zero() {
            break;
        }

        // Backtracking line search on the true (re-matched) cost.
        let mut improved = false;
        for _ in 0..24 {
            let candidate = canonicalize([
                p[0] - step * grad[0],
                p[1] - step * grad[1],
                p[2] - step * grad[2],
            ]);
            let c = true_cost(&candidate);
            if !c.is_finite() {
                report.aborted = true;
                return (best, report);
            }
            if c < best_cost {
                let decrease = best_cost - c;
                current = candidate;
                best = candidate;
                best_cost = c;
                improved = true;
                step = step * S::from_f64(1.8);
                if decrease < tol {
                    report.final_cost = best_cost;
                    return (best, report);
                }
                break;
            }
            step = step * S::half();
        }
        if !improved {
            break;
        }
    }

    report.final_cost = best_cost;
    (best, report)
}
