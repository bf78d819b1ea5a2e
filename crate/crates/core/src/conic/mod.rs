//! Second-order cone programs with linear equalities, and a deterministic
//! primal-dual interior-point solver for them.
//!
//! A program is
//!
//! ```text
//! minimize    cᵀx
//! subject to  ‖A_k·x + b_k‖₂ ≤ bound_k(x)     for every cone k
//!             e_jᵀx = v_j                      for every equality j
//! ```
//!
//! where `bound_k` is either a constant or an affine function `gᵀx + h`.
//! Each cone only touches the columns it lists, which keeps block-separable
//! problems cheap to assemble.

mod cone;
mod dump;
mod ipm;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dump::write_program;
pub use ipm::solve;

/// Right-hand side of a cone constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeBound {
    Constant(f64),
    /// `gᵀx + h`, with `g` indexed like the constraint's columns.
    Affine { g: Vec<f64>, h: f64 },
}

/// `‖A·x[cols] + b‖₂ ≤ bound(x[cols])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocConstraint {
    cols: Vec<usize>,
    a: Mat<f64>,
    b: Vec<f64>,
    bound: ConeBound,
}

impl SocConstraint {
    /// `a` has one column per entry of `cols`; `cols` must be strictly
    /// increasing.
    pub fn new(cols: Vec<usize>, a: Mat<f64>, b: Vec<f64>, bound: ConeBound) -> Result<Self> {
        if a.nrows() == 0 {
            return Err(Error::MalformedProgram("cone with zero rows".into()));
        }
        if a.ncols() != cols.len() {
            return Err(Error::MalformedProgram(format!(
                "cone matrix has {} columns for {} variables",
                a.ncols(),
                cols.len()
            )));
        }
        if b.len() != a.nrows() {
            return Err(Error::MalformedProgram(format!(
                "cone offset has length {} for {} rows",
                b.len(),
                a.nrows()
            )));
        }
        if cols.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedProgram(
                "cone columns must be strictly increasing".into(),
            ));
        }
        if let ConeBound::Affine { g, .. } = &bound {
            if g.len() != cols.len() {
                return Err(Error::MalformedProgram(format!(
                    "affine bound has {} coefficients for {} variables",
                    g.len(),
                    cols.len()
                )));
            }
        }
        Ok(Self { cols, a, b, bound })
    }

    /// Constraint over all `a.ncols()` variables.
    pub fn dense(a: Mat<f64>, b: Vec<f64>, bound: ConeBound) -> Result<Self> {
        Self::new((0..a.ncols()).collect(), a, b, bound)
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn a(&self) -> &Mat<f64> {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn bound(&self) -> &ConeBound {
        &self.bound
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    /// `‖A·x + b‖₂` and the bound, both at `x`.
    pub fn evaluate(&self, x: &[f64]) -> (f64, f64) {
        let mut sq = 0.0;
        for i in 0..self.a.nrows() {
            let mut r = self.b[i];
            for (j, &c) in self.cols.iter().enumerate() {
                r += self.a[(i, j)] * x[c];
            }
            sq += r * r;
        }
        let bound = match &self.bound {
            ConeBound::Constant(h) => *h,
            ConeBound::Affine { g, h } => {
                h + g.iter().zip(&self.cols).map(|(gj, &c)| gj * x[c]).sum::<f64>()
            }
        };
        (sq.sqrt(), bound)
    }

    fn bound_parts(&self) -> (Option<&[f64]>, f64) {
        match &self.bound {
            ConeBound::Constant(h) => (None, *h),
            ConeBound::Affine { g, h } => (Some(g), *h),
        }
    }
}

/// `row·x = value`, with `row` dense over all variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Equality {
    pub row: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    num_vars: usize,
    objective: Vec<f64>,
    soc_constraints: Vec<SocConstraint>,
    equalities: Vec<Equality>,
}

impl ConicProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            num_vars: objective.len(),
            objective,
            soc_constraints: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn add_soc(&mut self, soc: SocConstraint) -> Result<()> {
        if let Some(&last) = soc.cols.last() {
            if last >= self.num_vars {
                return Err(Error::MalformedProgram(format!(
                    "cone references variable {last} of {}",
                    self.num_vars
                )));
            }
        }
        self.soc_constraints.push(soc);
        Ok(())
    }

    pub fn add_equality(&mut self, row: Vec<f64>, value: f64) -> Result<()> {
        if row.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                actual: row.len(),
            });
        }
        self.equalities.push(Equality { row, value });
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn soc_constraints(&self) -> &[SocConstraint] {
        &self.soc_constraints
    }

    pub fn equalities(&self) -> &[Equality] {
        &self.equalities
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.objective) {
            return Err(Error::MalformedProgram("non-finite objective".into()));
        }
        for (k, soc) in self.soc_constraints.iter().enumerate() {
            let (g, h) = soc.bound_parts();
            let a_finite = (0..soc.a.ncols()).all(|j| soc.a.col(j).iter().all(|v| v.is_finite()));
            if !(a_finite
                && finite(&soc.b)
                && h.is_finite()
                && g.is_none_or(finite))
            {
                return Err(Error::MalformedProgram(format!("non-finite data in cone {k}")));
            }
        }
        for (j, eq) in self.equalities.iter().enumerate() {
            if !(finite(&eq.row) && eq.value.is_finite()) {
                return Err(Error::MalformedProgram(format!("non-finite data in equality {j}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            gap_tol: 1e-6,
            max_iters: 10_000,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("feas_tol", self.feas_tol), ("gap_tol", self.gap_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iters",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// A Farkas certificate shows the constraints admit no point.
    Infeasible,
    /// A feasible ray decreases the objective without bound.
    Unbounded,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    pub primal_feas: f64,
    pub dual_feas: f64,
    pub duality_gap: f64,
}

impl std::fmt::Display for KktResiduals {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "primal {:.3e}, dual {:.3e}, gap {:.3e}",
            self.primal_feas, self.dual_feas, self.duality_gap
        )
    }
}

impl KktResiduals {
    pub fn within(&self, settings: &SolverSettings) -> bool {
        self.primal_feas <= settings.feas_tol
            && self.dual_feas <= settings.feas_tol
            && self.duality_gap <= settings.gap_tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    /// Multipliers of the equalities, in order.
    pub y: Vec<f64>,
    /// Cone multipliers `(z0, z1)`, one vector of length `rows + 1` per cone.
    pub z: Vec<Vec<f64>>,
    pub objective_value: f64,
    pub status: SolveStatus,
    pub kkt_residuals: KktResiduals,
    pub iterations: usize,
}

/// Recomputes primal/dual feasibility and the relative duality gap of
/// `sol` directly from the program data.
///
/// * primal: worst cone or equality violation over `1 + max|constant data|`
/// * dual: `‖c + Σ y_j e_j − Σ (z0 g + Aᵀz1)‖∞` plus the dual cone
///   violation, over `1 + ‖c‖∞`
/// * gap: `|p − d| / max(1, min(|p|, |d|))`
pub fn check_kkt(prog: &ConicProgram, sol: &ConicSolution) -> KktResiduals {
    let n = prog.num_vars;
    let x = &sol.x;

    let mut scale_p: f64 = 0.0;
    let mut viol: f64 = 0.0;
    for soc in &prog.soc_constraints {
        let (lhs, bound) = soc.evaluate(x);
        viol = viol.max(lhs - bound);
        scale_p = scale_p.max(soc.bound_parts().1.abs());
        scale_p = soc.b.iter().fold(scale_p, |m, v| m.max(v.abs()));
    }
    for eq in &prog.equalities {
        let ex: f64 = eq.row.iter().zip(x).map(|(a, b)| a * b).sum();
        viol = viol.max((ex - eq.value).abs());
        scale_p = scale_p.max(eq.value.abs());
    }
    let primal_feas = viol.max(0.0) / (1.0 + scale_p);

    let mut grad = prog.objective.clone();
    let mut dual_obj = 0.0;
    let mut cone_viol: f64 = 0.0;
    for (eq, &yj) in prog.equalities.iter().zip(&sol.y) {
        for (g, e) in grad.iter_mut().zip(&eq.row) {
            *g += yj * e;
        }
        dual_obj -= yj * eq.value;
    }
    for (soc, z) in prog.soc_constraints.iter().zip(&sol.z) {
        let (g, h) = soc.bound_parts();
        let z0 = z[0];
        let z1 = &z[1..];
        if let Some(g) = g {
            for (gj, &c) in g.iter().zip(&soc.cols) {
                grad[c] -= z0 * gj;
            }
        }
        for (j, &c) in soc.cols.iter().enumerate() {
            let mut acc = 0.0;
            for (i, zi) in z1.iter().enumerate() {
                acc += soc.a[(i, j)] * zi;
            }
            grad[c] -= acc;
        }
        dual_obj -= z0 * h + soc.b.iter().zip(z1).map(|(b, zi)| b * zi).sum::<f64>();
        cone_viol = cone_viol.max(cone::norm(z1) - z0);
    }
    let c_inf = prog.objective.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let grad_inf = grad.iter().take(n).fold(0.0f64, |m, v| m.max(v.abs()));
    let dual_feas = (grad_inf + cone_viol.max(0.0)) / (1.0 + c_inf);

    let primal_obj = prog.objective_value(x);
    let duality_gap =
        (primal_obj - dual_obj).abs() / primal_obj.abs().min(dual_obj.abs()).max(1.0);

    KktResiduals {
        primal_feas,
        dual_feas,
        duality_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min t  s.t.  ‖(x1, x2)‖ ≤ t,  x1 = 3,  x2 = 4.
    pub(crate) fn three_four_five() -> ConicProgram {
        let mut prog = ConicProgram::new(vec![1.0, 0.0, 0.0]);
        prog.add_soc(
            SocConstraint::dense(
                Mat::from_fn(2, 3, |i, j| if j == i + 1 { 1.0 } else { 0.0 }),
                vec![0.0, 0.0],
                ConeBound::Affine {
                    g: vec![1.0, 0.0, 0.0],
                    h: 0.0,
                },
            )
            .unwrap(),
        )
        .unwrap();
        prog.add_equality(vec![0.0, 1.0, 0.0], 3.0).unwrap();
        prog.add_equality(vec![0.0, 0.0, 1.0], 4.0).unwrap();
        prog
    }

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn three_four_five_solves_to_five() {
        let prog = three_four_five();
        let sol = solve(&prog, &settings()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.x[0] - 5.0).abs() < 1e-6, "t = {}", sol.x[0]);
        assert!((sol.objective_value - 5.0).abs() < 1e-6);
        let kkt = check_kkt(&prog, &sol);
        assert!(kkt.primal_feas <= 1e-8, "{kkt:?}");
        assert!(kkt.within(&settings()));
    }

    #[test]
    fn perturbation_is_detected() {
        let prog = three_four_five();
        let mut sol = solve(&prog, &settings()).unwrap();
        for i in 0..3 {
            let mut bumped = sol.clone();
            bumped.x[i] += 0.1;
            let kkt = check_kkt(&prog, &bumped);
            assert!(kkt.primal_feas > 1e-3 || kkt.duality_gap > 1e-3, "{i}: {kkt:?}");
        }
        sol.x[0] -= 0.1;
        assert!(check_kkt(&prog, &sol).primal_feas > 1e-3);
    }

    #[test]
    fn zero_program_has_zero_residuals() {
        let prog = ConicProgram::new(vec![0.0; 4]);
        let sol = ConicSolution {
            x: vec![0.0; 4],
            y: vec![],
            z: vec![],
            objective_value: 0.0,
            status: SolveStatus::Optimal,
            kkt_residuals: KktResiduals::default(),
            iterations: 0,
        };
        assert_eq!(check_kkt(&prog, &sol), KktResiduals::default());
        let solved = solve(&prog, &settings()).unwrap();
        assert_eq!(solved.status, SolveStatus::Optimal);
        assert_eq!(solved.x, vec![0.0; 4]);
    }

    #[test]
    fn nonnegative_bound_gives_zero() {
        // min t  s.t. ‖0‖ ≤ t
        let mut prog = ConicProgram::new(vec![1.0]);
        prog.add_soc(
            SocConstraint::dense(
                Mat::zeros(1, 1),
                vec![0.0],
                ConeBound::Affine { g: vec![1.0], h: 0.0 },
            )
            .unwrap(),
        )
        .unwrap();
        let sol = solve(&prog, &settings()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.objective_value.abs() < 1e-6);
    }

    #[test]
    fn empty_cone_columns_allowed() {
        // ‖(1, 0)‖ ≤ 2 holds trivially
        let soc = SocConstraint::new(vec![], Mat::zeros(2, 0), vec![1.0, 0.0], ConeBound::Constant(2.0))
            .unwrap();
        let mut prog = ConicProgram::new(vec![0.0]);
        prog.add_soc(soc).unwrap();
        let sol = solve(&prog, &settings()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
    }

    #[test]
    fn infeasible_ball_detected() {
        // ‖x − 3‖ ≤ 1 and ‖x + 3‖ ≤ 1
        let mut prog = ConicProgram::new(vec![0.0]);
        for b in [-3.0, 3.0] {
            prog.add_soc(SocConstraint::dense(Mat::from_fn(1, 1, |_, _| 1.0), vec![b], ConeBound::Constant(1.0)).unwrap())
                .unwrap();
        }
        let sol = solve(&prog, &settings()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray_detected() {
        // min −x  s.t. ‖0·x‖ ≤ x
        let mut prog = ConicProgram::new(vec![-1.0]);
        prog.add_soc(
            SocConstraint::dense(Mat::zeros(1, 1), vec![0.0], ConeBound::Affine { g: vec![1.0], h: 0.0 })
                .unwrap(),
        )
        .unwrap();
        let sol = solve(&prog, &settings()).unwrap();
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn malformed_constraints_rejected() {
        assert!(SocConstraint::new(vec![0], Mat::zeros(0, 1), vec![], ConeBound::Constant(1.0)).is_err());
        assert!(SocConstraint::new(vec![1, 0], Mat::zeros(1, 2), vec![0.0], ConeBound::Constant(1.0)).is_err());
        assert!(SocConstraint::new(vec![0], Mat::zeros(1, 1), vec![0.0, 1.0], ConeBound::Constant(1.0)).is_err());
        let mut prog = ConicProgram::new(vec![0.0]);
        assert!(prog
            .add_soc(SocConstraint::new(vec![3], Mat::zeros(1, 1), vec![0.0], ConeBound::Constant(1.0)).unwrap())
            .is_err());
        assert!(prog.add_equality(vec![1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn bad_settings_rejected() {
        let prog = three_four_five();
        let mut s = settings();
        s.feas_tol = 0.0;
        assert!(solve(&prog, &s).is_err());
    }
}
