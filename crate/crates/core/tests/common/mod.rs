//! Reference solver used to cross-check the interior-point results. It
//! shares no code with the library.

#![allow(dead_code)]

use faer::Mat;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tripole::conic::{ConeBound, ConicProgram, SocConstraint};
use tripole::pattern_grid::{assemble_matrices, build_samples};
use tripole::sparse_design::ULA_RIDGE;
use tripole::DesignSpec;

/// `min Σ_m c_m ‖x_m‖₂  s.t.  ‖A·x − b‖₂ ≤ alpha`, where `x_m` are
/// consecutive blocks of `group` entries.
pub struct GroupLasso {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub alpha: f64,
    pub weights: Vec<f64>,
    pub group: usize,
}

pub struct OracleSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl GroupLasso {
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(m, c)| c * x.rows(m * self.group, self.group).norm())
            .sum()
    }

    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        (&self.a * x - &self.b).norm()
    }

    pub fn group_norms(&self, x: &DVector<f64>) -> Vec<f64> {
        (0..self.weights.len())
            .map(|m| x.rows(m * self.group, self.group).norm())
            .collect()
    }

    /// Douglas–Rachford splitting on `f(x) + ι_ball(y)` restricted to the
    /// graph `y = A·x`. The returned point lies on the graph; the ball is
    /// met to within the fixed-point tolerance.
    pub fn solve(&self, step: f64, tol: f64, max_iter: usize) -> OracleSolution {
        let n = self.a.ncols();
        let k = self.a.nrows();
        let at = self.a.transpose();
        let gram = DMatrix::<f64>::identity(n, n) + &at * &self.a;
        let chol = gram.cholesky().expect("I + AᵀA is positive definite");

        let mut zx = DVector::<f64>::zeros(n);
        let mut zy = DVector::<f64>::zeros(k);
        let mut x = zx.clone();
        let mut iterations = 0;
        for it in 1..=max_iter {
            iterations = it;
            let xh = self.group_shrink(&zx, step);
            let yh = self.ball_project(&zy);
            let cx = 2.0 * &xh - &zx;
            let cy = 2.0 * &yh - &zy;
            let xp = chol.solve(&(&cx + &at * &cy));
            let yp = &self.a * &xp;
            let dx = &xp - &xh;
            let dy = &yp - &yh;
            zx += &dx;
            zy += &dy;
            x = xp;
            let scale = 1.0 + xh.norm() + yh.norm();
            if (dx.norm() + dy.norm()) <= tol * scale {
                break;
            }
        }
        OracleSolution {
            objective: self.objective(&x),
            residual: self.residual(&x),
            x,
            iterations,
        }
    }

    fn group_shrink(&self, v: &DVector<f64>, step: f64) -> DVector<f64> {
        let mut out = v.clone();
        for (m, c) in self.weights.iter().enumerate() {
            let mut blk = out.rows_mut(m * self.group, self.group);
            let norm = blk.norm();
            let keep = if norm > 0.0 { (1.0 - step * c / norm).max(0.0) } else { 0.0 };
            blk *= keep;
        }
        out
    }

    fn ball_project(&self, v: &DVector<f64>) -> DVector<f64> {
        let d = v - &self.b;
        let norm = d.norm();
        if norm <= self.alpha {
            v.clone()
        } else {
            &self.b + d * (self.alpha / norm)
        }
    }
}

/// Real form of `min Σ c_m ‖w_m‖ s.t. ‖p − S·w^H‖ ≤ alpha` with
/// `x = [Re w_m, Im w_m]` per location, written out directly from
/// `s·conj(w) = (Re s·Re w + Im s·Im w) + j(Im s·Re w − Re s·Im w)`.
pub fn complex_group_lasso(
    p: &[Complex64],
    s_rows: &[Vec<Complex64>],
    alpha: f64,
    weights: Vec<f64>,
) -> GroupLasso {
    let l = p.len();
    let n = s_rows[0].len();
    let mut a = DMatrix::<f64>::zeros(2 * l, 2 * n);
    for (i, row) in s_rows.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            let (loc, axis) = (j / 3, j % 3);
            let re = 6 * loc + axis;
            let im = 6 * loc + 3 + axis;
            a[(i, re)] = s.re;
            a[(i, im)] = s.im;
            a[(l + i, re)] = s.im;
            a[(l + i, im)] = -s.re;
        }
    }
    let b = DVector::from_iterator(2 * l, p.iter().map(|v| v.re).chain(p.iter().map(|v| v.im)));
    GroupLasso {
        a,
        b,
        alpha,
        weights,
        group: 6,
    }
}

/// Complex weights `w_m = Re + j·Im` from the oracle layout.
pub fn oracle_weights(x: &DVector<f64>) -> Vec<[Complex64; 3]> {
    (0..x.len() / 6)
        .map(|m| std::array::from_fn(|axis| Complex64::new(x[6 * m + axis], x[6 * m + 3 + axis])))
        .collect()
}

pub const GROUP: usize = 6;

pub fn random_instance(rng: &mut ChaCha8Rng) -> GroupLasso {
    let m = rng.random_range(2..=5);
    let k = rng.random_range(4..=2 * GROUP);
    let a = DMatrix::from_fn(k, GROUP * m, |_, _| rng.random_range(-1.0..1.0));
    let b = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
    // k ≤ 6m, so A has full row rank and every alpha > 0 is feasible
    let alpha = rng.random_range(0.2..0.8) * b.norm();
    let weights = if rng.random_bool(0.5) {
        vec![1.0; m]
    } else {
        (0..m).map(|_| rng.random_range(0.5..3.0)).collect()
    };
    GroupLasso {
        a,
        b,
        alpha,
        weights,
        group: GROUP,
    }
}

/// Same problem as a cone program over `[t_m, x_m]` blocks.
pub fn as_program(inst: &GroupLasso) -> ConicProgram {
    let m = inst.weights.len();
    let block = GROUP + 1;
    let mut c = vec![0.0; block * m];
    for (g, w) in inst.weights.iter().enumerate() {
        c[block * g] = *w;
    }
    let mut prog = ConicProgram::new(c);
    let cols: Vec<usize> = (0..m).flat_map(|g| (1..block).map(move |j| block * g + j)).collect();
    let a = Mat::from_fn(inst.a.nrows(), cols.len(), |i, j| -inst.a[(i, j)]);
    prog.add_soc(
        SocConstraint::new(cols, a, inst.b.iter().copied().collect(), ConeBound::Constant(inst.alpha)).unwrap(),
    )
    .unwrap();
    for g in 0..m {
        let a = Mat::from_fn(GROUP, block, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
        let mut gvec = vec![0.0; block];
        gvec[0] = 1.0;
        prog.add_soc(
            SocConstraint::new(
                (block * g..block * (g + 1)).collect(),
                a,
                vec![0.0; GROUP],
                ConeBound::Affine { g: gvec, h: 0.0 },
            )
            .unwrap(),
        )
        .unwrap();
    }
    prog
}

/// Reference tripole layouts (two decimals) with their stated statistics
/// (aperture, mean separation, min separation).
pub const REFERENCE_LAYOUTS: [(&[f64], [f64; 3]); 4] = [
    (
        &[0.0, 0.80, 1.62, 2.42, 3.25, 4.02, 4.72, 5.28, 5.98, 6.75, 7.58, 8.38, 9.20, 10.0],
        [10.0, 0.77, 0.57],
    ),
    (&[2.43, 3.23, 4.03, 4.70, 5.30, 5.97, 6.77, 7.57], [5.13, 0.73, 0.60]),
    (
        &[0.0, 0.68, 1.40, 2.12, 2.85, 3.55, 4.28, 5.0, 5.72, 6.45, 7.15, 7.88, 8.60, 9.32, 10.0],
        [10.0, 0.71, 0.68],
    ),
    (&[2.13, 2.83, 3.57, 4.27, 5.0, 5.73, 6.43, 7.17, 7.87], [5.73, 0.72, 0.70]),
];

/// Weights and residual of the ridge-regularised equality-constrained least
/// squares over every location of `spec.grid`, from the dense KKT system
/// `[2(AᵀA + ρI) Cᵀ; C 0] [x; λ] = [2Aᵀb; d]`. `C` is the mainlobe sample's
/// real and imaginary rows.
pub fn ula_oracle(spec: &DesignSpec) -> (Vec<[Complex64; 3]>, f64) {
    let samples = build_samples(spec).unwrap();
    let (p, s) = assemble_matrices(&samples, spec.grid.positions());
    let rows: Vec<Vec<Complex64>> = (0..s.nrows()).map(|i| s.row(i).to_vec()).collect();
    let ls = complex_group_lasso(&p, &rows, 0.0, vec![1.0; spec.grid.num_locations()]);
    let (a, b) = (&ls.a, &ls.b);
    let l = p.len();
    let n = a.ncols();

    let rho = ULA_RIDGE * a.norm_squared();
    let gram = a.transpose() * a + DMatrix::<f64>::identity(n, n) * rho;
    let mut kkt = DMatrix::<f64>::zeros(n + 2, n + 2);
    kkt.view_mut((0, 0), (n, n)).copy_from(&(2.0 * gram));
    for (k, r) in [0, l].into_iter().enumerate() {
        for j in 0..n {
            kkt[(n + k, j)] = a[(r, j)];
            kkt[(j, n + k)] = a[(r, j)];
        }
    }
    let mut rhs = DVector::<f64>::zeros(n + 2);
    rhs.rows_mut(0, n).copy_from(&(2.0 * a.transpose() * b));
    rhs[n] = b[0];
    rhs[n + 1] = b[l];
    let sol = kkt.lu().solve(&rhs).expect("KKT matrix is nonsingular");
    let x = sol.rows(0, n).into_owned();
    let residual = (a * &x - b).norm();
    (oracle_weights(&x), residual)
}

/// Steering entry written straight from the model: dipole `axis` at
/// position `d` (wavelengths).
pub fn steering_entry(theta: f64, phi: f64, gamma: f64, eta: f64, d: f64, axis: usize) -> Complex64 {
    let e = Complex64::from_polar(1.0, eta);
    let sp = match axis {
        0 => gamma.sin() * theta.cos() * phi.cos() * e - gamma.cos() * phi.sin(),
        1 => gamma.sin() * theta.cos() * phi.sin() * e - gamma.cos() * phi.cos(),
        _ => -gamma.sin() * theta.sin() * e,
    };
    let phase = -2.0 * std::f64::consts::PI * d * theta.sin() * phi.sin();
    sp * Complex64::from_polar(1.0, phase)
}
