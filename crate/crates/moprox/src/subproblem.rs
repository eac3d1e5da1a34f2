//! The Riemannian proximal-mapping subproblem and its iterative solver.
//!
//! At a base point `x` the step is the minimizer over the tangent space of
//!
//! ```text
//! p_x(eta) = max_i ( <grad f_i(x), eta> + g_i(R_x(eta)) - g_i(x) ) + (L~/2)|eta|^2
//! ```
//!
//! The solver walks trial tangent vectors `eta_k`, at each step transferring
//! the model to the tangent space of `y_k = R_x(eta_k)`, where the nonsmooth
//! terms are evaluated ambiently (`g_i(y + xi)`) and stay convex. The
//! transferred minimax program is solved by maximizing its concave dual over
//! the weight simplex: exact bisection for a two-element active set, entropic
//! mirror ascent otherwise, with a Douglas-Rachford splitting for the inner
//! minimization (closed-form tangent-restricted quadratic step against the
//! ambient prox of the weighted nonsmooth term). An Armijo search on the
//! exact objective keeps the iteration monotone.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point, RetractionKind, Tangent};
use crate::objectives::{CombinedNonsmooth, CompositeObjective, NonsmoothTerm};

/// Relative tolerance deciding membership of the active index set.
const ACTIVE_TOL_REL: f64 = 1e-8;
/// Step size below which the Armijo search reports a stall.
const ARMIJO_MIN_STEP: f64 = 1e-12;

/// Method for the dual search over the weight simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimplexSolver {
    /// Exact bisection on the scalar dual; applies to active sets of size
    /// two (larger active sets are routed to mirror ascent automatically).
    #[default]
    DualBisection,
    /// Entropic mirror ascent on the simplex; any `m`.
    MirrorDescent,
}

/// Configuration of the proximal-mapping solver.
#[derive(Debug, Clone)]
pub struct InnerSolverConfig {
    /// Target on both the transferred-step norm and the duality gap.
    pub tol_kkt: f64,
    /// Cap on outer (transfer + line search) iterations.
    pub max_outer: usize,
    /// Cap on operator-splitting steps per transferred solve.
    pub max_inner: usize,
    /// Armijo sufficient-decrease parameter in (0, 1).
    pub armijo_sigma: f64,
    pub simplex_solver: SimplexSolver,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        InnerSolverConfig {
            tol_kkt: 1e-8,
            max_outer: 100,
            max_inner: 5000,
            armijo_sigma: 1e-4,
            simplex_solver: SimplexSolver::DualBisection,
        }
    }
}

impl InnerSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_kkt > 0.0) {
            return Err(Error::InvalidConfig("tol_kkt must be positive".into()));
        }
        if !(self.armijo_sigma > 0.0 && self.armijo_sigma < 1.0) {
            return Err(Error::InvalidConfig("armijo_sigma must lie in (0,1)".into()));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::InvalidConfig("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// Solution of the proximal-mapping subproblem at a fixed base point.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    /// The computed step in `T_x M`.
    pub eta: Tangent,
    /// Simplex multipliers over all `m` objectives (zero off the active set).
    pub lambda: DVector<f64>,
    /// Norm of the last transferred correction; the solver's stationarity measure.
    pub kkt_residual: f64,
    /// `p_x(eta)`; never exceeds `p_x(0) = 0`.
    pub p_value: f64,
    /// Number of transfer iterations performed.
    pub inner_iters: usize,
    /// Indices achieving the maximum in `psi` at the returned step.
    pub active_set: Vec<usize>,
    /// Duality gap of the final transferred solve.
    pub gap: f64,
    /// Set when the Armijo search could not make progress.
    pub stalled: bool,
    /// Total operator-splitting steps across all transferred solves.
    pub dr_steps: usize,
    /// Exact objective values per transfer iteration (nonincreasing).
    pub ell_trace: Vec<f64>,
    /// Ambient subgradient of the weighted nonsmooth term produced by the
    /// final prox application; certifies the KKT residual.
    pub subgrad_cert: Option<DVector<f64>>,
}

/// Result of `solve_transferred`: the correction in `T_y M` and its weights.
#[derive(Debug, Clone)]
pub struct TransferredSolution {
    pub xi: Tangent,
    pub lambda: DVector<f64>,
    pub gap: f64,
    pub converged: bool,
    pub dr_steps: usize,
    pub subgrad_cert: DVector<f64>,
}

/// Brute-force grid minimizer of `p_x` over a tangent ball (test oracle).
#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub eta: Tangent,
    pub p_value: f64,
    pub boundary_hit: bool,
}

/// The multiobjective first-order model
/// `psi_x(eta) = max_i ( <grad f_i(x), eta> + g_i(R_x(eta)) - g_i(x) )`.
pub fn psi(obj: &CompositeObjective, x: &Point, eta: &Tangent, kind: RetractionKind) -> f64 {
    let ctx = SubCtx::new(obj, x, kind);
    let phis = ctx.phi_values(eta.vec());
    max_of(&phis)
}

/// Subproblem objective `p_x(eta) = psi_x(eta) + (ltilde/2)|eta|^2`.
pub fn p_eval(
    obj: &CompositeObjective,
    x: &Point,
    eta: &Tangent,
    ltilde: f64,
    kind: RetractionKind,
) -> f64 {
    assert!(ltilde > 0.0, "p_eval: ltilde must be positive");
    psi(obj, x, eta, kind) + 0.5 * ltilde * eta.vec().norm_squared()
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Precomputed quantities for one subproblem: gradients and nonsmooth values
/// at the base point never change during the solve.
struct SubCtx<'a> {
    obj: &'a CompositeObjective,
    man: &'a Manifold,
    kind: RetractionKind,
    x: DVector<f64>,
    grads: Vec<DVector<f64>>,
    g_at_x: Vec<f64>,
}

impl<'a> SubCtx<'a> {
    fn new(obj: &'a CompositeObjective, x: &Point, kind: RetractionKind) -> SubCtx<'a> {
        let man = obj.manifold();
        let m = obj.n_objectives();
        let grads = (0..m)
            .map(|i| obj.riemannian_grad_f(i, x).vec().clone())
            .collect();
        let g_at_x = (0..m)
            .map(|i| obj.nonsmooth(i).eval(x.coords()))
            .collect();
        SubCtx {
            obj,
            man,
            kind,
            x: x.coords().clone(),
            grads,
            g_at_x,
        }
    }

    fn m(&self) -> usize {
        self.grads.len()
    }

    fn retract(&self, eta: &DVector<f64>) -> DVector<f64> {
        self.man.retract_raw(self.kind, &self.x, eta)
    }

    /// `phi_i(eta) = <grad f_i(x), eta> + g_i(R_x(eta)) - g_i(x)` for all i.
    fn phi_values(&self, eta: &DVector<f64>) -> Vec<f64> {
        let y = self.retract(eta);
        (0..self.m())
            .map(|i| self.grads[i].dot(eta) + self.obj.nonsmooth(i).eval(&y) - self.g_at_x[i])
            .collect()
    }

    fn ell(&self, eta: &DVector<f64>, ltilde: f64) -> f64 {
        max_of(&self.phi_values(eta)) + 0.5 * ltilde * eta.norm_squared()
    }

    fn active_set(&self, phis: &[f64]) -> Vec<usize> {
        let top = max_of(phis);
        let tol = ACTIVE_TOL_REL * top.abs().max(1.0);
        (0..phis.len()).filter(|&i| phis[i] >= top - tol).collect()
    }
}

/// Douglas-Rachford state for one transferred solve. Splitting:
/// `f1(xi) = <wbar, xi> + (L~/2)|xi|^2 + indicator(T_y)`,
/// `f2(xi) = G(y + xi)` with `G` the weighted nonsmooth combination.
struct DrState<'a> {
    man: &'a Manifold,
    y: &'a DVector<f64>,
    wbar: DVector<f64>,
    combined: &'a CombinedNonsmooth,
    ltilde: f64,
    tau: f64,
    z: DVector<f64>,
    /// Feasible (tangent) iterate.
    xi: DVector<f64>,
    /// Ambient subgradient certificate from the latest prox application.
    cert: DVector<f64>,
    /// Prox-side iterate `u - y`.
    xi_prox: DVector<f64>,
    steps: usize,
}

impl<'a> DrState<'a> {
    fn new(
        man: &'a Manifold,
        y: &'a DVector<f64>,
        wbar: DVector<f64>,
        combined: &'a CombinedNonsmooth,
        ltilde: f64,
        warm: Option<&DVector<f64>>,
    ) -> DrState<'a> {
        let n = y.len();
        let z = warm.cloned().unwrap_or_else(|| DVector::zeros(n));
        DrState {
            man,
            y,
            wbar,
            combined,
            ltilde,
            tau: 1.0 / ltilde,
            z,
            xi: DVector::zeros(n),
            cert: DVector::zeros(n),
            xi_prox: DVector::zeros(n),
            steps: 0,
        }
    }

    /// Runs splitting steps until the fixed-point residual `|xi_prox - xi|`
    /// drops below the absolute target `fp_abs` or `budget` steps elapse.
    /// Returns whether the residual target was met. The residual is a
    /// subtraction-stable direct measure of the step accuracy, unlike the
    /// duality gap, whose evaluation noise scales with the objective size.
    fn run(&mut self, budget: usize, fp_abs: f64) -> bool {
        if self.combined.is_zero() {
            // Pure quadratic over the tangent space: one closed-form step.
            self.xi = self.man.proj_tan_raw(self.y, &self.wbar) * (-1.0 / self.ltilde);
            self.xi_prox = self.xi.clone();
            self.cert.fill(0.0);
            self.steps += 1;
            return true;
        }
        for _ in 0..budget {
            self.steps += 1;
            // prox of f1: tangent-restricted quadratic, closed form
            let x1 = self
                .man
                .proj_tan_raw(self.y, &(&self.z - &self.wbar * self.tau))
                / (1.0 + self.tau * self.ltilde);
            // prox of f2: ambient prox of the weighted nonsmooth term
            let reflected = &x1 * 2.0 - &self.z;
            let u = self.combined.prox(&(self.y + &reflected), self.tau);
            let x2 = &u - self.y;
            self.cert = (&reflected - &x2) / self.tau;
            let residual = (&x2 - &x1).norm();
            self.z += &x2 - &x1;
            self.xi = x1;
            self.xi_prox = x2;
            if residual <= fp_abs {
                return true;
            }
        }
        false
    }

}

/// Certified lower bound on the inner minimum at fixed weights: for any `u`
/// and subgradient `cert` of the combined term at `u`,
/// `min_xi >= -|P_T(wbar + cert)|^2/(2 L~) + G(u) - G(y) - <cert, u - y>`.
fn dual_lower_bound(
    man: &Manifold,
    y: &DVector<f64>,
    wbar: &DVector<f64>,
    combined: &CombinedNonsmooth,
    ltilde: f64,
    cert: &DVector<f64>,
    u: &DVector<f64>,
) -> f64 {
    if combined.is_zero() {
        let pw = man.proj_tan_raw(y, wbar);
        return -pw.norm_squared() / (2.0 * ltilde);
    }
    let pt = man.proj_tan_raw(y, &(wbar + cert));
    -pt.norm_squared() / (2.0 * ltilde) + combined.eval(u) - combined.eval(y)
        - cert.dot(&(u - y))
}

/// Exact face solve for a pure L1 combined term: freeze the zero pattern and
/// the signs of `u_guess = y + xi_guess`, minimize the remaining smooth
/// quadratic over the face intersected with the tangent space (one Lagrange
/// multiplier on the sphere), and build the matching subgradient certificate.
/// Returns `(xi, cert, u)` when the face assumption is self-consistent.
fn polish_l1_face(
    man: &Manifold,
    y: &DVector<f64>,
    wbar: &DVector<f64>,
    ltilde: f64,
    coeff: f64,
    u_guess: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let n = y.len();
    let support: Vec<bool> = u_guess.iter().map(|&v| v != 0.0).collect();
    let signs: Vec<f64> = u_guess.iter().map(|&v| v.signum()).collect();
    if !support.iter().any(|&s| s) {
        return None;
    }

    let mu = if man.is_sphere() {
        // Tangency <y, xi> = 0 with xi_j = -(wbar_j + c s_j + mu y_j)/L~ on
        // the support and xi_j = -y_j off it.
        let mut num = 0.0;
        let mut den = 0.0;
        let mut off_mass = 0.0;
        for j in 0..n {
            if support[j] {
                num += y[j] * (wbar[j] + coeff * signs[j]);
                den += y[j] * y[j];
            } else {
                off_mass += y[j] * y[j];
            }
        }
        if den <= 1e-300 {
            return None;
        }
        -(num + ltilde * off_mass) / den
    } else {
        0.0
    };

    let mut xi = DVector::zeros(n);
    let mut u = DVector::zeros(n);
    let mut cert = DVector::zeros(n);
    for j in 0..n {
        if support[j] {
            xi[j] = -(wbar[j] + coeff * signs[j] + mu * y[j]) / ltilde;
            u[j] = y[j] + xi[j];
            // face must keep its sign for the certificate to be valid
            if u[j] != 0.0 && u[j].signum() != signs[j] {
                return None;
            }
            cert[j] = coeff * signs[j];
        } else {
            xi[j] = -y[j];
            u[j] = 0.0;
            cert[j] = (-(wbar[j] + ltilde * xi[j] + mu * y[j])).clamp(-coeff, coeff);
        }
    }
    Some((xi, cert, u))
}

/// One dual evaluation: inner solve at fixed weights plus the pieces needed
/// for the dual search and the gap.
struct DualEval {
    xi: DVector<f64>,
    cert: DVector<f64>,
    /// Per-active-component model values `c_i(xi)`.
    c_values: Vec<f64>,
    /// Minimax primal value at `xi`.
    primal: f64,
    /// Certified lower bound on the minimax optimum.
    lower: f64,
    steps: usize,
}

#[allow(clippy::too_many_arguments)]
fn eval_dual(
    man: &Manifold,
    y: &DVector<f64>,
    ws: &[DVector<f64>],
    terms: &[&NonsmoothTerm],
    g_at_y: &[f64],
    offsets: &[f64],
    weights: &[f64],
    ltilde: f64,
    max_inner: usize,
    fp_target: f64,
    gap_target: Option<f64>,
    warm: Option<&DVector<f64>>,
) -> Result<(DualEval, DVector<f64>)> {
    let n = y.len();
    let mut wbar = DVector::zeros(n);
    for (w, wi) in weights.iter().zip(ws) {
        wbar += wi * *w;
    }
    let parts: Vec<(f64, &NonsmoothTerm)> =
        weights.iter().cloned().zip(terms.iter().cloned()).collect();
    let combined = CombinedNonsmooth::combine(&parts);
    let scale = (wbar.norm() / ltilde).max(1.0);
    let offset_weighted: f64 = weights.iter().zip(offsets).map(|(w, o)| w * o).sum();
    let mut dr = DrState::new(man, y, wbar.clone(), &combined, ltilde, warm);

    // Scores a candidate (xi, cert, u): model values per component, the
    // minimax primal, and the certified dual lower bound.
    let assess = |xi: &DVector<f64>, cert: &DVector<f64>, u: &DVector<f64>| -> DualEval {
        let c_values: Vec<f64> = ws
            .iter()
            .zip(terms.iter().zip(g_at_y.iter().zip(offsets)))
            .map(|(wi, (t, (gy, off)))| off + wi.dot(xi) + t.eval(&(y + xi)) - gy)
            .collect();
        let primal = max_of(&c_values) + 0.5 * ltilde * xi.norm_squared();
        let lower =
            dual_lower_bound(man, y, &wbar, &combined, ltilde, cert, u) + offset_weighted;
        DualEval {
            xi: xi.clone(),
            cert: cert.clone(),
            c_values,
            primal,
            lower,
            steps: 0,
        }
    };

    let mut fp_abs = fp_target.max(1e-16 * scale);
    let mut out: Option<DualEval> = None;
    loop {
        let budget = (max_inner.saturating_sub(dr.steps)).min(200);
        let hit = dr.run(budget.max(1), fp_abs);
        let mut eval = assess(&dr.xi, &dr.cert, &(y + &dr.xi_prox));
        // Exact face solve for L1-structured combinations, using the current
        // prox iterate to guess the support.
        if let Some(coeff) = combined.l1_coeff() {
            if let Some((xi, cert, u)) =
                polish_l1_face(man, y, &wbar, ltilde, coeff, &(y + &dr.xi_prox))
            {
                let polished = assess(&xi, &cert, &u);
                if polished.primal - polished.lower < eval.primal - eval.lower {
                    eval = polished;
                }
            }
        }
        let gap = eval.primal - eval.lower;
        if gap < -1e-6 * eval.primal.abs().max(1.0) {
            return Err(Error::NonConvexDetected);
        }
        let noise = 1e-14 * eval.primal.abs().max(1.0);
        let replace = out
            .as_ref()
            .map(|prev| gap < prev.primal - prev.lower)
            .unwrap_or(true);
        if replace {
            out = Some(eval);
        }
        let best_gap = {
            let b = out.as_ref().unwrap();
            b.primal - b.lower
        };
        if combined.is_zero() || dr.steps >= max_inner || best_gap <= noise {
            break;
        }
        match gap_target {
            None => {
                if hit {
                    break;
                }
            }
            Some(gt) => {
                if hit && best_gap <= gt.max(noise) {
                    break;
                }
                if hit {
                    fp_abs *= 0.1;
                    if fp_abs < 1e-16 * scale {
                        break;
                    }
                }
            }
        }
    }
    let mut eval = out.expect("at least one splitting chunk runs");
    eval.steps = dr.steps;
    Ok((eval, dr.z))
}


/// Solves the transferred subproblem at `y = R_x(eta_cur)`:
/// minimize over `T_y M` the active-set minimax model with ambient nonsmooth
/// evaluation, returning the correction and the attained simplex weights.
pub fn solve_transferred(
    obj: &CompositeObjective,
    x: &Point,
    eta_cur: &Tangent,
    ltilde: f64,
    cfg: &InnerSolverConfig,
    kind: RetractionKind,
) -> Result<TransferredSolution> {
    assert!(ltilde > 0.0, "solve_transferred: ltilde must be positive");
    cfg.validate()?;
    let ctx = SubCtx::new(obj, x, kind);
    let phis = ctx.phi_values(eta_cur.vec());
    let actives = ctx.active_set(&phis);
    solve_transferred_ctx(&ctx, eta_cur.vec(), &phis, &actives, ltilde, cfg)
}

fn solve_transferred_ctx(
    ctx: &SubCtx,
    eta: &DVector<f64>,
    phis: &[f64],
    actives: &[usize],
    ltilde: f64,
    cfg: &InnerSolverConfig,
) -> Result<TransferredSolution> {
    let man = ctx.man;
    let y = ctx.retract(eta);
    let m = ctx.m();
    // Per-component constant offsets phi_i(eta) - psi(eta). On an exact
    // active set they vanish; inside the membership tolerance band they
    // de-bias the tie point of the minimax model.
    let psi_val = max_of(phis);
    let offsets: Vec<f64> = actives.iter().map(|&i| phis[i] - psi_val).collect();

    // Transported linear parts: w_i = (DR_x(eta)^*)^{-1}[grad f_i(x) + L~ eta].
    let mut ws = Vec::with_capacity(actives.len());
    for &i in actives {
        let v = &ctx.grads[i] + eta * ltilde;
        ws.push(man.dr_adj_inv_raw(ctx.kind, &ctx.x, eta, &v)?);
    }
    let terms: Vec<&NonsmoothTerm> = actives.iter().map(|&i| ctx.obj.nonsmooth(i)).collect();
    let g_at_y: Vec<f64> = terms.iter().map(|t| t.eval(&y)).collect();

    let k = actives.len();
    let mut dr_steps = 0;

    // Fixed-point accuracy for the splitting loop: ties the step noise to
    // the outer stationarity target. The coarse level is only used while
    // bracketing the dual maximizer.
    let fine_fp = 0.02 * cfg.tol_kkt;
    let coarse_fp = (1e3 * fine_fp).max(1e-6);
    let gap_goal = 0.25 * cfg.tol_kkt;

    let finish = |weights: Vec<f64>, eval: DualEval, dr_steps: usize| {
        let mut lambda = DVector::zeros(m);
        for (j, &i) in actives.iter().enumerate() {
            lambda[i] = weights[j];
        }
        let gap = eval.primal - eval.lower;
        TransferredSolution {
            xi: Tangent::new_unchecked(man.point(y.clone()), eval.xi),
            lambda,
            gap,
            converged: gap <= cfg.tol_kkt,
            dr_steps,
            subgrad_cert: eval.cert,
        }
    };

    if k == 1 {
        let (eval, _) = eval_dual(
            man, &y, &ws, &terms, &g_at_y, &offsets, &[1.0], ltilde, cfg.max_inner,
            fine_fp, Some(gap_goal), None,
        )?;
        dr_steps += eval.steps;
        return Ok(finish(vec![1.0], eval, dr_steps));
    }

    let use_bisection = k == 2 && cfg.simplex_solver == SimplexSolver::DualBisection;
    if use_bisection {
        // phi'(t) = c_0(xi_t) - c_1(xi_t) is nonincreasing in t; bisect its
        // sign, first with cheap coarse solves to bracket the maximizer,
        // then at full accuracy.
        let mut warm: Option<DVector<f64>> = None;
        let mut solve_at = |t: f64,
                            fp: f64,
                            gap: Option<f64>,
                            warm: &mut Option<DVector<f64>>,
                            dr_steps: &mut usize|
         -> Result<DualEval> {
            let (eval, z) = eval_dual(
                man,
                &y,
                &ws,
                &terms,
                &g_at_y,
                &offsets,
                &[t, 1.0 - t],
                ltilde,
                cfg.max_inner,
                fp,
                gap,
                warm.as_ref(),
            )?;
            *warm = Some(z);
            *dr_steps += eval.steps;
            Ok(eval)
        };
        let total_gap = |eval: &DualEval| eval.primal - eval.lower;

        let hi = solve_at(1.0, fine_fp, Some(gap_goal), &mut warm, &mut dr_steps)?;
        if hi.c_values[0] - hi.c_values[1] >= 0.0 {
            return Ok(finish(vec![1.0, 0.0], hi, dr_steps));
        }
        let lo = solve_at(0.0, fine_fp, Some(gap_goal), &mut warm, &mut dr_steps)?;
        if lo.c_values[0] - lo.c_values[1] <= 0.0 {
            return Ok(finish(vec![0.0, 1.0], lo, dr_steps));
        }

        let (mut a, mut b) = (0.0f64, 1.0f64);
        // coarse bracketing
        for _ in 0..30 {
            if b - a < 1e-4 {
                break;
            }
            let mid = 0.5 * (a + b);
            let eval = solve_at(mid, coarse_fp, None, &mut warm, &mut dr_steps)?;
            if eval.c_values[0] - eval.c_values[1] > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        // Accurate finish. The weight error perturbs the step by roughly
        // |t - t*| |w_0 - w_1| / L~, so the gap target must shrink with the
        // step norm for small steps to stay meaningful.
        let mut best: Option<(f64, DualEval)> = None;
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            let eval = solve_at(mid, fine_fp, Some(gap_goal), &mut warm, &mut dr_steps)?;
            let slope = eval.c_values[0] - eval.c_values[1];
            let better = best
                .as_ref()
                .map(|(_, bst)| total_gap(&eval) < total_gap(bst))
                .unwrap_or(true);
            if better {
                best = Some((mid, eval));
            }
            let bst = &best.as_ref().unwrap().1;
            let noise = 1e-14 * bst.primal.abs().max(1.0);
            let target = gap_goal
                .min(1e-2 * ltilde * bst.xi.norm_squared())
                .max(noise);
            if total_gap(bst) <= target || (b - a) < 1e-15 {
                break;
            }
            if slope > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let (best_t, eval) = best.expect("refinement ran at least once");
        return Ok(finish(vec![best_t, 1.0 - best_t], eval, dr_steps));
    }

    // Entropic mirror ascent over the simplex.
    let mut weights = vec![1.0 / k as f64; k];
    let mut warm: Option<DVector<f64>> = None;
    let mut best: Option<(Vec<f64>, DualEval)> = None;
    for it in 0..200 {
        let (eval, z) = eval_dual(
            man,
            &y,
            &ws,
            &terms,
            &g_at_y,
            &offsets,
            &weights,
            ltilde,
            cfg.max_inner,
            fine_fp,
            Some(gap_goal),
            warm.as_ref(),
        )?;
        dr_steps += eval.steps;
        warm = Some(z);
        let gap = eval.primal - eval.lower;
        let c = eval.c_values.clone();
        let replace = best
            .as_ref()
            .map(|(_, b)| gap < b.primal - b.lower)
            .unwrap_or(true);
        if replace {
            best = Some((weights.clone(), eval));
        }
        let (best_gap, best_target) = {
            let (_, b) = best.as_ref().unwrap();
            let noise = 1e-14 * b.primal.abs().max(1.0);
            let target = gap_goal
                .min(1e-2 * ltilde * b.xi.norm_squared())
                .max(noise);
            (b.primal - b.lower, target)
        };
        if best_gap <= best_target {
            break;
        }
        let cmax = max_of(&c);
        let spread = c.iter().fold(1e-12f64, |mx, v| mx.max((v - cmax).abs()));
        let step = 2.0 / ((it as f64 + 2.0).sqrt() * spread);
        let mut z_sum = 0.0;
        for (w, ci) in weights.iter_mut().zip(&c) {
            *w *= (step * (ci - cmax)).exp();
            z_sum += *w;
        }
        for w in weights.iter_mut() {
            *w /= z_sum;
        }
    }
    let (weights, eval) = best.expect("mirror ascent ran at least once");
    Ok(finish(weights, eval, dr_steps))
}

/// Extra information handed to the early-stopping probe of the inexact solver.
pub(crate) struct ProbeInfo<'a> {
    pub eta: &'a DVector<f64>,
    /// Norm of the assembled KKT stationarity vector at the current step.
    pub residual: f64,
    pub p_value: f64,
}

/// Algorithm for the Riemannian proximal mapping: iterate transferred solves
/// with an Armijo search on the exact subproblem objective, starting from
/// `eta = 0`, until the transferred correction norm drops below `tol_kkt`.
pub fn solve_proximal_mapping(
    obj: &CompositeObjective,
    x: &Point,
    ltilde: f64,
    cfg: &InnerSolverConfig,
    kind: RetractionKind,
) -> Result<SubproblemSolution> {
    solve_proximal_mapping_with_stop(obj, x, ltilde, cfg, kind, |_| false)
}

pub(crate) fn solve_proximal_mapping_with_stop(
    obj: &CompositeObjective,
    x: &Point,
    ltilde: f64,
    cfg: &InnerSolverConfig,
    kind: RetractionKind,
    mut stop: impl FnMut(&ProbeInfo) -> bool,
) -> Result<SubproblemSolution> {
    assert!(ltilde > 0.0, "solve_proximal_mapping: ltilde must be positive");
    cfg.validate()?;
    let ctx = SubCtx::new(obj, x, kind);
    let n = ctx.x.len();
    let m = ctx.m();

    // Degenerate shortcut: all gradients vanish and the (uniform) weighted
    // nonsmooth term is prox-stationary at x, so eta = 0 solves the problem.
    let grad_scale = ctx.grads.iter().map(|g| g.norm()).fold(0.0f64, f64::max);
    if grad_scale == 0.0 {
        let parts: Vec<(f64, &NonsmoothTerm)> = (0..m)
            .map(|i| (1.0 / m as f64, obj.nonsmooth(i)))
            .collect();
        let combined = CombinedNonsmooth::combine(&parts);
        let moved = combined.prox(&ctx.x, 1.0 / ltilde);
        if (moved - &ctx.x).norm() <= 1e-14 {
            return Ok(SubproblemSolution {
                eta: Tangent::zero(x.clone()),
                lambda: DVector::from_element(m, 1.0 / m as f64),
                kkt_residual: 0.0,
                p_value: 0.0,
                inner_iters: 0,
                active_set: (0..m).collect(),
                gap: 0.0,
                stalled: false,
                dr_steps: 0,
                ell_trace: vec![0.0],
                subgrad_cert: None,
            });
        }
    }

    let mut eta = DVector::zeros(n);
    let mut ell_cur = 0.0;
    let mut ell_trace = vec![0.0];
    let mut dr_steps = 0;
    let mut stalled = false;
    let mut last: Option<TransferredSolution> = None;
    let mut inner_iters = 0;

    for _ in 0..cfg.max_outer {
        let phis = ctx.phi_values(&eta);
        let actives = ctx.active_set(&phis);
        let tr = solve_transferred_ctx(&ctx, &eta, &phis, &actives, ltilde, cfg)?;
        dr_steps += tr.dr_steps;
        inner_iters += 1;
        let xi_norm = tr.xi.norm();

        let should_stop = {
            let residual =
                assemble_residual_raw(&ctx, &eta, &tr.lambda, Some(&tr.subgrad_cert), ltilde);
            stop(&ProbeInfo {
                eta: &eta,
                residual,
                p_value: ell_cur,
            })
        };
        if xi_norm <= cfg.tol_kkt || should_stop {
            last = Some(tr);
            break;
        }

        // Pull the correction back to T_x and run the Armijo search on the
        // exact objective. Once the correction norm reaches the scale where
        // the model decrease sigma*|xi|^2 is no longer representable in the
        // objective value, accept full steps that do not increase it; the
        // transfer iteration keeps contracting past the line-search floor.
        let pull = ctx.man.dr_inv_raw(ctx.kind, &ctx.x, &eta, tr.xi.vec())?;
        // Below this scale the sufficient-decrease quantity sigma*|xi|^2 is
        // smaller than the rounding noise of the objective and cannot be
        // certified; switch to plain non-increase acceptance there.
        let certifiable_floor =
            (f64::EPSILON * ell_cur.abs().max(1.0) / cfg.armijo_sigma).sqrt();
        let terminal_regime = xi_norm <= 10.0 * certifiable_floor;
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= ARMIJO_MIN_STEP {
            let cand = &eta + &pull * alpha;
            let ell_cand = ctx.ell(&cand, ltilde);
            let sufficient = ell_cand <= ell_cur - cfg.armijo_sigma * alpha * xi_norm * xi_norm;
            let float_floor = terminal_regime
                && ell_cand <= ell_cur + 1e-14 * ell_cur.abs()
                && ell_cand <= 0.0;
            if sufficient || float_floor {
                accepted = Some((cand, ell_cand, alpha));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((cand, ell_cand, alpha)) => {
                let displacement = alpha * pull.norm();
                eta = cand;
                ell_cur = ell_cand;
                ell_trace.push(ell_cur);
                last = Some(tr);
                if displacement <= 1e-15 * (1.0 + eta.norm()) {
                    break;
                }
            }
            None => {
                stalled = true;
                last = Some(tr);
                break;
            }
        }
    }

    let tr = match last {
        Some(tr) => tr,
        None => {
            // max_outer == 0 is rejected by validate(); unreachable in practice.
            return Err(Error::InvalidConfig("no transfer iteration executed".into()));
        }
    };

    let phis = ctx.phi_values(&eta);
    let active_set = ctx.active_set(&phis);
    let p_value = max_of(&phis) + 0.5 * ltilde * eta.norm_squared();
    Ok(SubproblemSolution {
        eta: Tangent::new_unchecked(x.clone(), eta),
        lambda: tr.lambda,
        kkt_residual: tr.xi.norm(),
        p_value,
        inner_iters,
        active_set,
        gap: tr.gap,
        stalled,
        dr_steps,
        ell_trace,
        subgrad_cert: Some(tr.subgrad_cert),
    })
}

/// Assembles the KKT stationarity vector
/// `sum_i lambda_i grad f_i(x) + L~ eta + DR_x(eta)^*[zeta]`
/// and returns its norm. `zeta` is the tangent projection of the stored
/// prox subgradient certificate when the solution carries one, otherwise the
/// weighted fixed subgradient selection of the nonsmooth terms at `R_x(eta)`.
///
/// This is the practical residual used as `v_k` by the inexact method.
pub fn kkt_residual_check(
    obj: &CompositeObjective,
    x: &Point,
    sol: &SubproblemSolution,
    ltilde: f64,
    kind: RetractionKind,
) -> f64 {
    let ctx = SubCtx::new(obj, x, kind);
    assemble_residual_raw(
        &ctx,
        sol.eta.vec(),
        &sol.lambda,
        sol.subgrad_cert.as_ref(),
        ltilde,
    )
}

fn assemble_residual_raw(
    ctx: &SubCtx,
    eta: &DVector<f64>,
    lambda: &DVector<f64>,
    cert: Option<&DVector<f64>>,
    ltilde: f64,
) -> f64 {
    let y = ctx.retract(eta);
    let ambient = match cert {
        Some(c) => c.clone(),
        None => {
            let mut acc = DVector::zeros(y.len());
            for i in 0..ctx.m() {
                if lambda[i] != 0.0 {
                    acc += ctx.obj.nonsmooth(i).subgrad(&y) * lambda[i];
                }
            }
            acc
        }
    };
    let zeta = ctx.man.proj_tan_raw(&y, &ambient);
    let pulled = ctx.man.dr_adj_raw(ctx.kind, &ctx.x, eta, &zeta);
    let mut v = pulled + eta * ltilde;
    for i in 0..ctx.m() {
        if lambda[i] != 0.0 {
            v += &ctx.grads[i] * lambda[i];
        }
    }
    v.norm()
}

/// Exhaustive minimization of `p_x` over a tangent ball, followed by local
/// coordinate-descent refinement. Independent ground truth for solver tests;
/// tangent dimension must not exceed 3.
pub fn brute_force_oracle(
    obj: &CompositeObjective,
    x: &Point,
    ltilde: f64,
    grid_radius: f64,
    grid_step: f64,
    kind: RetractionKind,
) -> Result<BruteForceResult> {
    assert!(ltilde > 0.0 && grid_radius > 0.0 && grid_step > 0.0);
    let man = obj.manifold();
    let dim = man.tangent_dim();
    if dim > 3 {
        return Err(Error::DimensionTooLarge { dim });
    }
    let ctx = SubCtx::new(obj, x, kind);
    let basis = man.tangent_basis(x);
    let n = man.ambient_dim();

    let eval_coeff = |c: &[f64]| {
        let mut eta = DVector::zeros(n);
        for (cj, bj) in c.iter().zip(&basis) {
            eta += bj * *cj;
        }
        (ctx.ell(&eta, ltilde), eta)
    };

    let half = (grid_radius / grid_step).floor() as i64;
    let mut best_c = vec![0.0; dim];
    let mut best_v = 0.0f64;
    let mut idx = vec![-half; dim];
    'grid: loop {
        let c: Vec<f64> = idx.iter().map(|&i| i as f64 * grid_step).collect();
        let r2: f64 = c.iter().map(|a| a * a).sum();
        if r2 <= grid_radius * grid_radius {
            let (v, _) = eval_coeff(&c);
            if v < best_v {
                best_v = v;
                best_c = c;
            }
        }
        // odometer increment
        for d in 0..dim {
            idx[d] += 1;
            if idx[d] <= half {
                continue 'grid;
            }
            idx[d] = -half;
        }
        break;
    }

    let best_r = best_c.iter().map(|a| a * a).sum::<f64>().sqrt();
    let boundary_hit = best_r >= grid_radius - 1.5 * grid_step;

    // Local refinement: full sub-grids around the incumbent at shrinking
    // spacing. Axis-only descent can stall on the kinks of the max and of
    // the nonsmooth terms; a full local grid cannot.
    let mut h = grid_step / 10.0;
    while h > 1e-9 {
        loop {
            let center = best_c.clone();
            let mut improved = false;
            let span = 3i64;
            let mut offs = vec![-span; dim];
            'local: loop {
                let c: Vec<f64> = center
                    .iter()
                    .zip(&offs)
                    .map(|(b, &o)| b + o as f64 * h)
                    .collect();
                let (v, _) = eval_coeff(&c);
                if v < best_v {
                    best_v = v;
                    best_c = c;
                    improved = true;
                }
                for d in 0..dim {
                    offs[d] += 1;
                    if offs[d] <= span {
                        continue 'local;
                    }
                    offs[d] = -span;
                }
                break;
            }
            if !improved {
                break;
            }
        }
        h *= 0.2;
    }

    let (p_value, eta) = eval_coeff(&best_c);
    Ok(BruteForceResult {
        eta: Tangent::new_unchecked(x.clone(), eta),
        p_value,
        boundary_hit,
    })
}
