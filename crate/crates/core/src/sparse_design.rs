//! The three array designs: plain group-sparse, iteratively reweighted, and
//! the fully populated uniform baseline.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array_model::{CandidateGrid, WeightVector};
use crate::conic::{self, ConeBound, ConicProgram, KktResiduals, SocConstraint, SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::pattern_grid::{
    assemble_matrices, build_samples, complex_residual, lift_to_real, lift_weights_only, t_slot,
    unpack_lifted, unpack_weights_only, DesignSpec, SampledPattern, LiftedSystem, SteeringMatrix, LIFTED_BLOCK,
};

/// How the reweighting offset `ε` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "value", rename_all = "lowercase")]
pub enum EpsilonPolicy {
    Fixed(f64),
    /// Fraction of the largest group norm after the first iteration. When
    /// that iterate is identically zero the fraction is used as `ε` itself.
    Relative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupNormConfig {
    pub epsilon: EpsilonPolicy,
    /// Relative pruning threshold `τ`.
    pub prune_threshold: f64,
    /// Stop once this many consecutive iterations report the same count.
    pub stop_patience: usize,
    pub max_reweight_iters: usize,
}

impl Default for GroupNormConfig {
    fn default() -> Self {
        Self {
            epsilon: EpsilonPolicy::Relative(1e-3),
            prune_threshold: 1e-3,
            stop_patience: 3,
            max_reweight_iters: 20,
        }
    }
}

impl GroupNormConfig {
    pub fn validate(&self) -> Result<()> {
        let eps = match self.epsilon {
            EpsilonPolicy::Fixed(v) | EpsilonPolicy::Relative(v) => v,
        };
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("must be positive, got {eps}"),
            });
        }
        check_prune_threshold(self.prune_threshold)?;
        if self.stop_patience == 0 {
            return Err(Error::InvalidParameter {
                name: "stop_patience",
                reason: "must be at least 1".into(),
            });
        }
        if self.max_reweight_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "max_reweight_iters",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

fn check_prune_threshold(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter {
            name: "prune_threshold",
            reason: format!("must lie in (0, 1), got {tau}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweightIteration {
    /// One-based iteration index.
    pub k: usize,
    /// Group weights `δ_m` used in this iteration; all ones for `k = 1`.
    pub delta: Vec<f64>,
    pub active_count: usize,
    pub residual: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReweightTrace {
    pub iterations: Vec<ReweightIteration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    /// Full-grid weights; pruned groups are exactly zero.
    pub weights: WeightVector,
    /// Grid positions (wavelengths) of every location in [`Self::positions`].
    pub positions: Vec<f64>,
    pub active_indices: Vec<usize>,
    pub active_positions: Vec<f64>,
    /// `‖p_r − S·w^H‖₂` of the pruned weights, evaluated in complex form.
    pub residual: f64,
    /// Solver values of the bound slots `t_m`; empty for the uniform design.
    pub group_bounds: Vec<f64>,
    /// Solver objective `Σ δ_m t_m` (`Σ t_m` for the plain design).
    pub objective: f64,
    pub solver_residuals: Option<KktResiduals>,
    pub trace: Option<ReweightTrace>,
}

impl DesignResult {
    pub fn num_active(&self) -> usize {
        self.active_indices.len()
    }
}

/// Keeps group `m` iff `‖w_m‖₂ > τ·max_m ‖w_m‖₂`; all other groups are
/// zeroed. Returns the kept indices and the pruned weights.
pub fn extract_active_tripoles(w: &WeightVector, tau: f64) -> Result<(Vec<usize>, WeightVector)> {
    check_prune_threshold(tau)?;
    let norms = w.group_norms();
    let max = norms.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut pruned = w.clone();
    let mut active = Vec::new();
    if max == 0.0 {
        return Ok((active, pruned));
    }
    for (m, (triple, norm)) in pruned.triples_mut().iter_mut().zip(&norms).enumerate() {
        if *norm > tau * max {
            active.push(m);
        } else {
            *triple = [Complex64::new(0.0, 0.0); 3];
        }
    }
    Ok((active, pruned))
}

/// Upper bound on prune-and-re-solve rounds in [`Problem::finish`].
const MAX_SUPPORT_RESOLVES: usize = 8;

/// Sampled problem data shared by every iteration of a design.
struct Problem {
    samples: SampledPattern,
    p_r: Vec<Complex64>,
    steering: SteeringMatrix,
    lifted: LiftedSystem,
    /// `−Ŝ` restricted to the weight columns.
    neg_weight_block: Mat<f64>,
    weight_cols: Vec<usize>,
    alpha: f64,
    positions: Vec<f64>,
}

impl Problem {
    fn new(spec: &DesignSpec) -> Result<Self> {
        Ok(Self::from_samples(build_samples(spec)?, spec.grid.positions().to_vec(), spec.alpha))
    }

    fn from_samples(samples: SampledPattern, positions: Vec<f64>, alpha: f64) -> Self {
        let (p_r, steering) = assemble_matrices(&samples, &positions);
        let lifted = lift_to_real(&p_r, &steering);
        let m = positions.len();
        let weight_cols: Vec<usize> = (0..m)
            .flat_map(|loc| (1..LIFTED_BLOCK).map(move |j| t_slot(loc) + j))
            .collect();
        let neg_weight_block = Mat::from_fn(lifted.s_hat.nrows(), weight_cols.len(), |i, j| {
            -lifted.s_hat[(i, weight_cols[j])]
        });
        Self {
            samples,
            p_r,
            steering,
            lifted,
            neg_weight_block,
            weight_cols,
            alpha,
            positions,
        }
    }

    /// The same problem over a subset of the locations.
    fn restrict(&self, keep: &[usize]) -> Self {
        let positions = keep.iter().map(|&m| self.positions[m]).collect();
        Self::from_samples(self.samples.clone(), positions, self.alpha)
    }

    fn num_locations(&self) -> usize {
        self.positions.len()
    }

    fn reference_norm(&self) -> f64 {
        self.p_r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `min Σ δ_m t_m  s.t.  ‖p̂ − Ŝŵ‖ ≤ α,  δ_m‖w_m‖ ≤ t_m`.
    fn program(&self, delta: &[f64]) -> Result<ConicProgram> {
        let mut c = vec![0.0; LIFTED_BLOCK * self.num_locations()];
        for (m, d) in delta.iter().enumerate() {
            c[t_slot(m)] = *d;
        }
        let mut prog = ConicProgram::new(c);
        prog.add_soc(SocConstraint::new(
            self.weight_cols.clone(),
            self.neg_weight_block.clone(),
            self.lifted.p_hat.clone(),
            ConeBound::Constant(self.alpha),
        )?)?;
        for (m, d) in delta.iter().enumerate() {
            let a = Mat::from_fn(LIFTED_BLOCK - 1, LIFTED_BLOCK, |i, j| if j == i + 1 { *d } else { 0.0 });
            let mut g = vec![0.0; LIFTED_BLOCK];
            g[0] = 1.0;
            prog.add_soc(SocConstraint::new(
                (t_slot(m)..t_slot(m) + LIFTED_BLOCK).collect(),
                a,
                vec![0.0; LIFTED_BLOCK - 1],
                ConeBound::Affine { g, h: 0.0 },
            )?)?;
        }
        Ok(prog)
    }

    fn solve_weighted(&self, delta: &[f64], settings: &SolverSettings) -> Result<WeightedSolution> {
        let m = self.num_locations();
        if self.reference_norm() <= self.alpha {
            // zero weights are feasible and the objective is non-negative
            return Ok(WeightedSolution {
                weights: WeightVector::zeros(m),
                bounds: vec![0.0; m],
                objective: 0.0,
                kkt: None,
            });
        }
        let prog = self.program(delta)?;
        let sol = conic::solve(&prog, settings)?;
        match sol.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible | SolveStatus::Unbounded => {
                return Err(Error::Infeasible {
                    reason: format!(
                        "no weights reach a sample mismatch of alpha = {} (solver status {:?})",
                        self.alpha, sol.status
                    ),
                    trace: None,
                })
            }
            SolveStatus::MaxIterations => {
                return Err(Error::MaxIterations {
                    iterations: sol.iterations,
                    residuals: sol.kkt_residuals,
                    trace: None,
                })
            }
        }
        let (weights, bounds) = unpack_lifted(&sol.x)?;
        Ok(WeightedSolution {
            weights,
            bounds,
            objective: sol.objective_value,
            kkt: Some(sol.kkt_residuals),
        })
    }

    /// Solves on `keep` (ascending) and embeds the result in the full grid.
    fn solve_on(&self, keep: &[usize], delta: &[f64], settings: &SolverSettings) -> Result<WeightedSolution> {
        let sub = self.restrict(keep);
        let sub_delta: Vec<f64> = keep.iter().map(|&m| delta[m]).collect();
        let sub_sol = sub.solve_weighted(&sub_delta, settings)?;
        let mut weights = WeightVector::zeros(self.num_locations());
        let mut bounds = vec![0.0; self.num_locations()];
        for (i, &m) in keep.iter().enumerate() {
            weights.triples_mut()[m] = sub_sol.weights.triples()[i];
            bounds[m] = sub_sol.bounds[i];
        }
        Ok(WeightedSolution {
            weights,
            bounds,
            objective: sub_sol.objective,
            kkt: sub_sol.kkt,
        })
    }

    /// Re-solves on `active`. If that support cannot reach `α`, the
    /// strongest groups of `support` (known feasible) are added back,
    /// bisecting on how many are needed. `None` if no smaller support works.
    fn shrink_support(
        &self,
        active: &[usize],
        support: &[usize],
        norms: &[f64],
        delta: &[f64],
        settings: &SolverSettings,
    ) -> Result<Option<(Vec<usize>, WeightedSolution)>> {
        match self.solve_on(active, delta, settings) {
            Ok(sol) => return Ok(Some((active.to_vec(), sol))),
            Err(Error::Infeasible { .. }) => {}
            Err(e) => return Err(e),
        }
        let mut ranked = support.to_vec();
        ranked.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
        let top = |k: usize| {
            let mut keep = ranked[..k].to_vec();
            keep.sort_unstable();
            keep
        };
        let (mut lo, mut hi) = (active.len(), support.len());
        let mut found = None;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let keep = top(mid);
            match self.solve_on(&keep, delta, settings) {
                Ok(sol) => {
                    hi = mid;
                    found = Some((keep, sol));
                }
                Err(Error::Infeasible { .. }) => lo = mid,
                Err(e) => return Err(e),
            }
        }
        log::debug!("smallest feasible support has {hi} of {} locations", support.len());
        Ok(found)
    }

    /// Prunes `sol`. While pruning pushes the residual past `α`, the design
    /// is re-solved on a reduced support and pruned again. If no reduced
    /// support reaches `α`, the unpruned weights are returned.
    fn finish(
        &self,
        mut sol: WeightedSolution,
        delta: &[f64],
        tau: f64,
        settings: &SolverSettings,
        trace: Option<ReweightTrace>,
    ) -> Result<DesignResult> {
        let limit = self.alpha + settings.feas_tol;
        let (mut active_indices, mut weights) = extract_active_tripoles(&sol.weights, tau)?;
        let mut residual = complex_residual(&self.p_r, &self.steering, &weights)?;
        let mut support = (0..self.num_locations()).collect::<Vec<_>>();
        for _ in 0..MAX_SUPPORT_RESOLVES {
            if residual <= limit || active_indices.is_empty() || active_indices.len() == support.len() {
                break;
            }
            log::debug!(
                "pruned residual {residual:.9} exceeds alpha; re-solving on {} locations",
                active_indices.len()
            );
            let norms = sol.weights.group_norms();
            let Some((keep, next)) = self.shrink_support(&active_indices, &support, &norms, delta, settings)?
            else {
                break;
            };
            support = keep;
            sol = next;
            (active_indices, weights) = extract_active_tripoles(&sol.weights, tau)?;
            residual = complex_residual(&self.p_r, &self.steering, &weights)?;
        }
        if residual > limit {
            let unpruned = complex_residual(&self.p_r, &self.steering, &sol.weights)?;
            if unpruned < residual {
                log::warn!("pruning cannot keep the residual within alpha; returning unpruned weights");
                let norms = sol.weights.group_norms();
                active_indices = (0..self.num_locations()).filter(|&m| norms[m] > 0.0).collect();
                weights = sol.weights.clone();
                residual = unpruned;
            }
        }
        Ok(DesignResult {
            active_positions: active_indices.iter().map(|&m| self.positions[m]).collect(),
            positions: self.positions.clone(),
            active_indices,
            weights,
            residual,
            group_bounds: sol.bounds,
            objective: sol.objective,
            solver_residuals: sol.kkt,
            trace,
        })
    }
}

struct WeightedSolution {
    weights: WeightVector,
    bounds: Vec<f64>,
    objective: f64,
    kkt: Option<KktResiduals>,
}

/// Minimizes `Σ_m ‖w_m‖₂` subject to `‖p_r − S·w^H‖₂ ≤ α`, then prunes
/// groups below `prune_threshold` times the largest group norm.
///
/// If `‖p_r‖₂ ≤ α` the zero design is returned without calling the solver.
pub fn design_group_sparse(
    spec: &DesignSpec,
    settings: &SolverSettings,
    prune_threshold: f64,
) -> Result<DesignResult> {
    check_prune_threshold(prune_threshold)?;
    let problem = Problem::new(spec)?;
    let delta = vec![1.0; problem.num_locations()];
    let sol = problem.solve_weighted(&delta, settings)?;
    problem.finish(sol, &delta, prune_threshold, settings, None)
}

/// Reweighting factors `δ_m = 1 / (‖w_m‖₂ + ε)`.
pub fn reweight_factors(w: &WeightVector, epsilon: f64) -> Vec<f64> {
    w.group_norms().iter().map(|n| 1.0 / (n + epsilon)).collect()
}

/// Iterates weighted group-sparse designs. The first iteration is the
/// plain design; iteration `k ≥ 2` uses `δ_m = 1/(‖w_m^{k−1}‖₂ + ε)` both
/// as the objective weight of `t_m` and inside `δ_m‖w_m‖₂ ≤ t_m`, so the
/// effective penalty on `‖w_m‖₂` is `δ_m²`.
///
/// Stops once `stop_patience` consecutive iterations report the same
/// active count, or after `max_reweight_iters` iterations.
pub fn design_reweighted(
    spec: &DesignSpec,
    cfg: &GroupNormConfig,
    settings: &SolverSettings,
) -> Result<DesignResult> {
    cfg.validate()?;
    let problem = Problem::new(spec)?;
    let m = problem.num_locations();
    let mut trace = ReweightTrace::default();
    let mut delta = vec![1.0; m];
    let mut epsilon = None;
    let mut run = 0;
    let mut last_count = None;
    let mut k = 1;
    loop {
        let sol = match problem.solve_weighted(&delta, settings) {
            Ok(s) => s,
            Err(Error::Infeasible { reason, .. }) => {
                return Err(Error::Infeasible {
                    reason: format!("reweighting iteration {k}: {reason}"),
                    trace: Some(trace),
                })
            }
            Err(Error::MaxIterations {
                iterations,
                residuals,
                ..
            }) => {
                return Err(Error::MaxIterations {
                    iterations,
                    residuals,
                    trace: Some(trace),
                })
            }
            Err(e) => return Err(e),
        };
        let (active, pruned) = extract_active_tripoles(&sol.weights, cfg.prune_threshold)?;
        let residual = complex_residual(&problem.p_r, &problem.steering, &pruned)?;
        trace.iterations.push(ReweightIteration {
            k,
            delta: delta.clone(),
            active_count: active.len(),
            residual,
            objective: sol.objective,
        });
        log::info!("reweighting iteration {k}: {} active, residual {residual:.6}", active.len());

        run = if last_count == Some(active.len()) { run + 1 } else { 1 };
        last_count = Some(active.len());
        if run >= cfg.stop_patience || k >= cfg.max_reweight_iters {
            return problem.finish(sol, &delta, cfg.prune_threshold, settings, Some(trace));
        }

        let eps = *epsilon.get_or_insert_with(|| match cfg.epsilon {
            EpsilonPolicy::Fixed(v) => v,
            EpsilonPolicy::Relative(f) => {
                let max = sol.weights.group_norms().into_iter().fold(0.0f64, f64::max);
                if max > 0.0 {
                    f * max
                } else {
                    f
                }
            }
        });
        delta = reweight_factors(&sol.weights, eps);
        k += 1;
    }
}

/// Least-squares uniform array: minimizes `‖p̂ − Ŝŵ‖₂` (with the small ridge
/// [`ULA_RIDGE`]) subject to a unit, zero-phase response at the mainlobe
/// sample. Every tripole stays active.
///
/// `spec.grid` is ignored; the grid is `aperture / spacing + 1` locations.
pub fn design_ula_reference(aperture: f64, spacing: f64, spec: &DesignSpec) -> Result<DesignResult> {
    let intervals = aperture / spacing;
    let n_int = intervals.round();
    if !(spacing > 0.0 && aperture > 0.0) || (intervals - n_int).abs() > 1e-9 || n_int < 1.0 {
        return Err(Error::InvalidParameter {
            name: "ula_spacing_wl",
            reason: format!("spacing {spacing} must divide the aperture {aperture} into whole intervals"),
        });
    }
    let grid = CandidateGrid::from_aperture(aperture, n_int as usize + 1)?;
    let mut ula_spec = spec.clone();
    ula_spec.grid = grid.clone();
    let samples = build_samples(&ula_spec)?;
    let (p_r, steering) = assemble_matrices(&samples, grid.positions());
    let (p_hat, s_hat) = lift_weights_only(&p_r, &steering);
    let lifted = equality_constrained_lsq(&p_hat, &s_hat, 0)?;
    let weights = unpack_weights_only(&lifted)?;
    let residual = complex_residual(&p_r, &steering, &weights)?;
    let n = grid.num_locations();
    Ok(DesignResult {
        weights,
        positions: grid.positions().to_vec(),
        active_indices: (0..n).collect(),
        active_positions: grid.positions().to_vec(),
        residual,
        group_bounds: Vec::new(),
        objective: residual,
        solver_residuals: None,
        trace: None,
    })
}

/// Ridge weight of the uniform design, relative to `‖Ŝ‖_F²`.
///
/// The unregularized problem is numerically rank deficient: the singular
/// values of `Ŝ` decay smoothly to round-off, so its "solution" has weights
/// of order 1e5 and a residual set by rounding. This small ridge selects a
/// well-conditioned minimizer whose residual is within a few percent of the
/// unregularized infimum.
pub const ULA_RIDGE: f64 = 1e-8;

/// `argmin ‖p − S·x‖₂² + ρ‖x‖₂²  s.t.  S[row]·x = p[row]` and the same for
/// the matching imaginary row, with `ρ = ULA_RIDGE·‖S‖_F²`, via a
/// null-space parametrization.
fn equality_constrained_lsq(p_hat: &[f64], s_hat: &Mat<f64>, row: usize) -> Result<Vec<f64>> {
    let l = p_hat.len() / 2;
    let n = s_hat.ncols();
    let rows = [row, row + l];
    let c = Mat::from_fn(2, n, |i, j| s_hat[(rows[i], j)]);
    let d = [p_hat[rows[0]], p_hat[rows[1]]];

    // minimum-norm particular solution x0 = Cᵀ(CCᵀ)⁻¹d
    let cct = &c * c.transpose();
    let det = cct[(0, 0)] * cct[(1, 1)] - cct[(0, 1)] * cct[(1, 0)];
    if !(det.abs() > 1e-300) {
        return Err(Error::Numerical("mainlobe constraint rows are dependent".into()));
    }
    let u0 = (cct[(1, 1)] * d[0] - cct[(0, 1)] * d[1]) / det;
    let u1 = (cct[(0, 0)] * d[1] - cct[(1, 0)] * d[0]) / det;
    let x0: Vec<f64> = (0..n).map(|j| c[(0, j)] * u0 + c[(1, j)] * u1).collect();

    // columns 2.. of a full Q from the QR of Cᵀ span the null space of C
    let q = c.transpose().to_owned().qr().compute_Q();
    let z = q.subcols(2, n - 2).to_owned();
    let sz = s_hat * &z;
    let sqrt_rho = (ULA_RIDGE * s_hat.squared_norm_l2()).sqrt();
    // ‖Z·u‖ = ‖u‖, so the ridge on x0 + Z·u stacks as [SZ; √ρ·I] u ≈ [r; −√ρ·Zᵀx0]
    let k = n - 2;
    let stacked = Mat::from_fn(2 * l + k, k, |i, j| {
        if i < 2 * l {
            sz[(i, j)]
        } else if i - 2 * l == j {
            sqrt_rho
        } else {
            0.0
        }
    });
    let zt_x0: Vec<f64> = (0..k).map(|j| (0..n).map(|i| z[(i, j)] * x0[i]).sum()).collect();
    let rhs = Mat::from_fn(2 * l + k, 1, |i, _| {
        if i < 2 * l {
            p_hat[i] - (0..n).map(|j| s_hat[(i, j)] * x0[j]).sum::<f64>()
        } else {
            -sqrt_rho * zt_x0[i - 2 * l]
        }
    });
    let u = stacked
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?
        .pseudoinverse()
        * &rhs;
    let zu = &z * &u;
    Ok((0..n).map(|j| x0[j] + zu[(j, 0)]).collect())
}
