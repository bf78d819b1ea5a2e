//! Homogeneous self-dual embedding solved with a Mehrotra
//! predictor-corrector method under Nesterov–Todd scaling.
//!
//! Standard form used internally:
//!
//! ```text
//! minimize cᵀx  s.t.  A·x = b,  G·x + s = h,  s ∈ K
//! ```
//!
//! Each user cone `‖A_k x + b_k‖ ≤ gᵀx + h` becomes
//! `G_k = −[gᵀ; A_k]`, `h_k = [h; b_k]`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt;
use faer::{Mat, MatMut, MatRef, Par};

use super::cone::{self, NtScaling};
use super::{check_kkt, ConicProgram, ConicSolution, KktResiduals, SolveStatus, SolverSettings};
use crate::error::Result;

const STEP_FRACTION: f64 = 0.99;
const MAX_REFINE: usize = 6;
const STALL_LIMIT: usize = 30;
/// Extra iterations taken after the tolerances are first met, kept only
/// while they keep improving the residuals.
const POLISH_ITERS: usize = 3;

struct StdCone {
    cols: Vec<usize>,
    /// `G_k`, column-major, `dim` rows.
    g: Vec<f64>,
    h: Vec<f64>,
    /// `G_kᵀ G_k`, column-major over `cols`.
    gtg: Vec<f64>,
    offset: usize,
    dim: usize,
}

impl StdCone {
    fn gcol(&self, j: usize) -> &[f64] {
        &self.g[j * self.dim..(j + 1) * self.dim]
    }
}

struct Standard {
    n: usize,
    p: usize,
    m: usize,
    c: Vec<f64>,
    /// Equality matrix, `p × n`.
    a: Mat<f64>,
    b: Vec<f64>,
    cones: Vec<StdCone>,
}

impl Standard {
    fn new(prog: &ConicProgram) -> Self {
        let n = prog.num_vars();
        let p = prog.equalities().len();
        let a = Mat::from_fn(p, n, |i, j| prog.equalities()[i].row[j]);
        let b = prog.equalities().iter().map(|e| e.value).collect();
        let mut cones = Vec::with_capacity(prog.soc_constraints().len());
        let mut offset = 0;
        for soc in prog.soc_constraints() {
            let dim = soc.num_rows() + 1;
            let nc = soc.cols().len();
            let (gbound, hbound) = soc.bound_parts();
            let mut g = vec![0.0; dim * nc];
            for j in 0..nc {
                let col = &mut g[j * dim..(j + 1) * dim];
                col[0] = gbound.map_or(0.0, |gb| -gb[j]);
                for i in 1..dim {
                    col[i] = -soc.a()[(i - 1, j)];
                }
            }
            let mut h = Vec::with_capacity(dim);
            h.push(hbound);
            h.extend_from_slice(soc.b());
            let mut gtg = vec![0.0; nc * nc];
            if nc > 0 {
                let gm = MatRef::from_column_major_slice(&g, dim, nc);
                faer::linalg::matmul::matmul(
                    MatMut::from_column_major_slice_mut(&mut gtg, nc, nc),
                    faer::Accum::Replace,
                    gm.transpose(),
                    gm,
                    1.0,
                    Par::Seq,
                );
            }
            cones.push(StdCone {
                cols: soc.cols().to_vec(),
                g,
                h,
                gtg,
                offset,
                dim,
            });
            offset += dim;
        }
        Self {
            n,
            p,
            m: offset,
            c: prog.objective().to_vec(),
            a,
            b,
            cones,
        }
    }

    fn h_vec(&self) -> Vec<f64> {
        let mut h = Vec::with_capacity(self.m);
        for k in &self.cones {
            h.extend_from_slice(&k.h);
        }
        h
    }

    /// `out = G·x`.
    fn g_mul(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for k in &self.cones {
            let seg = &mut out[k.offset..k.offset + k.dim];
            for (j, &c) in k.cols.iter().enumerate() {
                let xj = x[c];
                if xj != 0.0 {
                    for (o, g) in seg.iter_mut().zip(k.gcol(j)) {
                        *o += g * xj;
                    }
                }
            }
        }
    }

    /// `out += Gᵀ·z`.
    fn gt_mul_add(&self, z: &[f64], out: &mut [f64]) {
        for k in &self.cones {
            let seg = &z[k.offset..k.offset + k.dim];
            for (j, &c) in k.cols.iter().enumerate() {
                out[c] += cone::dot(k.gcol(j), seg);
            }
        }
    }

    /// `out = A·x`.
    fn a_mul(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..self.n).map(|j| self.a[(i, j)] * x[j]).sum();
        }
    }

    /// `out += Aᵀ·y`.
    fn at_mul_add(&self, y: &[f64], out: &mut [f64]) {
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += self.a[(i, j)] * yi;
                }
            }
        }
    }

    fn cone_slice<'a>(&self, k: usize, v: &'a [f64]) -> &'a [f64] {
        let c = &self.cones[k];
        &v[c.offset..c.offset + c.dim]
    }
}

/// Applies a per-cone operator to a full-length vector.
fn per_cone(std: &Standard, v: &[f64], mut f: impl FnMut(usize, &[f64], &mut [f64])) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (k, c) in std.cones.iter().enumerate() {
        let r = c.offset..c.offset + c.dim;
        f(k, &v[r.clone()], &mut out[r]);
    }
    out
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn chol_in_place(mut m: MatMut<'_, f64>) -> bool {
    let n = m.nrows();
    let params = Default::default();
    let mut buf = MemBuffer::new(llt::factor::cholesky_in_place_scratch::<f64>(n, Par::Seq, params));
    let stack = MemStack::new(&mut buf);
    llt::factor::cholesky_in_place(m.as_mut(), Default::default(), Par::Seq, stack, params).is_ok()
}

fn chol_solve(l: MatRef<'_, f64>, rhs: MatMut<'_, f64>) {
    let n = l.nrows();
    let mut buf = MemBuffer::new(llt::solve::solve_in_place_scratch::<f64>(n, rhs.ncols(), Par::Seq));
    let stack = MemStack::new(&mut buf);
    llt::solve::solve_in_place(l, rhs, Par::Seq, stack);
}

/// Factorized reduced KKT system for one scaling point.
struct Kkt<'a> {
    std: &'a Standard,
    scal: &'a [NtScaling],
    /// Cholesky factor of `H + AᵀA + δI`, `H = Gᵀ W⁻² G`.
    l: Mat<f64>,
    /// `(chol(A M⁻¹ Aᵀ), M⁻¹ Aᵀ)` with `M` the matrix factored in `l`.
    schur: Option<(Mat<f64>, Mat<f64>)>,
}

struct Direction {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl<'a> Kkt<'a> {
    fn factor(std: &'a Standard, scal: &'a [NtScaling]) -> Option<Self> {
        let n = std.n;
        let mut h = Mat::<f64>::zeros(n, n);
        for (k, w) in std.cones.iter().zip(scal) {
            let nc = k.cols.len();
            if nc == 0 {
                continue;
            }
            let inv_eta2 = 1.0 / (w.eta * w.eta);
            let (r, w0) = w.low_rank_coefficients();
            // a = G_kᵀ e0, b = G_kᵀ (0, w̄1)
            let a: Vec<f64> = (0..nc).map(|j| k.gcol(j)[0]).collect();
            let b: Vec<f64> = (0..nc).map(|j| cone::dot(&k.gcol(j)[1..], &w.w[1..])).collect();
            for j in 0..nc {
                let cj = k.cols[j];
                let gtg = &k.gtg[j * nc..(j + 1) * nc];
                for i in 0..nc {
                    let low = 2.0 * r * a[i] * a[j] - 2.0 * w0 * (a[i] * b[j] + b[i] * a[j])
                        + 2.0 * b[i] * b[j];
                    h[(k.cols[i], cj)] += (gtg[i] + low) * inv_eta2;
                }
            }
        }
        if std.p > 0 {
            faer::linalg::matmul::matmul(
                h.as_mut(),
                faer::Accum::Add,
                std.a.transpose(),
                std.a.as_ref(),
                1.0,
                Par::Seq,
            );
        }
        // regularize each pivot relative to its own size so that badly
        // scaled columns are not swamped by the largest one
        let mut delta = 1e-13;
        let l = loop {
            let mut l = h.clone();
            for i in 0..n {
                l[(i, i)] += delta * (1.0 + h[(i, i)].abs());
            }
            if chol_in_place(l.as_mut()) {
                break l;
            }
            delta *= 100.0;
            if delta > 1e-2 {
                return None;
            }
        };
        let schur = if std.p > 0 {
            let mut minv_at = std.a.transpose().to_owned();
            chol_solve(l.as_ref(), minv_at.as_mut());
            let mut s = Mat::<f64>::zeros(std.p, std.p);
            faer::linalg::matmul::matmul(
                s.as_mut(),
                faer::Accum::Replace,
                std.a.as_ref(),
                minv_at.as_ref(),
                1.0,
                Par::Seq,
            );
            let max_s = (0..std.p).fold(0.0f64, |m, i| m.max(s[(i, i)].abs()));
            let mut delta = 1e-13 * (1.0 + max_s);
            let ls = loop {
                let mut ls = s.clone();
                for i in 0..std.p {
                    ls[(i, i)] += delta;
                }
                if chol_in_place(ls.as_mut()) {
                    break ls;
                }
                delta *= 100.0;
                if delta > 1e-2 * (1.0 + max_s) {
                    return None;
                }
            };
            Some((ls, minv_at))
        } else {
            None
        };
        Some(Self { std, scal, l, schur })
    }

    fn w_inv_sq(&self, v: &[f64]) -> Vec<f64> {
        per_cone(self.std, v, |k, a, out| self.scal[k].apply_inv_sq(a, out))
    }

    fn w_sq(&self, v: &[f64]) -> Vec<f64> {
        per_cone(self.std, v, |k, a, out| self.scal[k].apply_sq(a, out))
    }

    fn reduced(&self, rx: &[f64], ry: &[f64], rz: &[f64]) -> Direction {
        let std = self.std;
        let mut r1 = rx.to_vec();
        std.gt_mul_add(&self.w_inv_sq(rz), &mut r1);
        std.at_mul_add(ry, &mut r1);
        let mut dy = vec![0.0; std.p];
        if let Some((ls, minv_at)) = &self.schur {
            // dy = S⁻¹ (A M⁻¹ r1 − ry)
            for i in 0..std.p {
                dy[i] = (0..std.n).map(|j| minv_at[(j, i)] * r1[j]).sum::<f64>() - ry[i];
            }
            chol_solve(ls.as_ref(), MatMut::from_column_major_slice_mut(&mut dy, std.p, 1));
            let mut aty = vec![0.0; std.n];
            std.at_mul_add(&dy, &mut aty);
            for (r, a) in r1.iter_mut().zip(&aty) {
                *r -= a;
            }
        }
        let mut dx = r1;
        if std.n > 0 {
            chol_solve(self.l.as_ref(), MatMut::from_column_major_slice_mut(&mut dx, std.n, 1));
        }
        let mut gdx = vec![0.0; std.m];
        std.g_mul(&dx, &mut gdx);
        for (g, r) in gdx.iter_mut().zip(rz) {
            *g -= r;
        }
        let dz = self.w_inv_sq(&gdx);
        Direction { x: dx, y: dy, z: dz }
    }

    /// `rhs − K·d` and its infinity norm.
    fn residual(&self, rx: &[f64], ry: &[f64], rz: &[f64], d: &Direction) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
        let std = self.std;
        let mut kx = vec![0.0; std.n];
        std.at_mul_add(&d.y, &mut kx);
        std.gt_mul_add(&d.z, &mut kx);
        let mut ky = vec![0.0; std.p];
        std.a_mul(&d.x, &mut ky);
        let mut kz = vec![0.0; std.m];
        std.g_mul(&d.x, &mut kz);
        let w2dz = self.w_sq(&d.z);
        for (k, w) in kz.iter_mut().zip(&w2dz) {
            *k -= w;
        }
        let ex: Vec<f64> = rx.iter().zip(&kx).map(|(a, b)| a - b).collect();
        let ey: Vec<f64> = ry.iter().zip(&ky).map(|(a, b)| a - b).collect();
        let ez: Vec<f64> = rz.iter().zip(&kz).map(|(a, b)| a - b).collect();
        let err = inf_norm(&ex).max(inf_norm(&ey)).max(inf_norm(&ez));
        (ex, ey, ez, err)
    }

    /// Solves `K·d = (rx, ry, rz)` with
    /// `K = [0 Aᵀ Gᵀ; A 0 0; G 0 −W²]`, refining against the exact `K`.
    fn solve(&self, rx: &[f64], ry: &[f64], rz: &[f64]) -> Direction {
        let scale = 1.0 + inf_norm(rx).max(inf_norm(ry)).max(inf_norm(rz));
        let mut d = self.reduced(rx, ry, rz);
        let (mut ex, mut ey, mut ez, mut err) = self.residual(rx, ry, rz, &d);
        for _ in 0..MAX_REFINE {
            if err <= 1e-14 * scale {
                break;
            }
            let corr = self.reduced(&ex, &ey, &ez);
            let trial = Direction {
                x: d.x.iter().zip(&corr.x).map(|(a, b)| a + b).collect(),
                y: d.y.iter().zip(&corr.y).map(|(a, b)| a + b).collect(),
                z: d.z.iter().zip(&corr.z).map(|(a, b)| a + b).collect(),
            };
            let (tx, ty, tz, terr) = self.residual(rx, ry, rz, &trial);
            if !(terr < err) {
                break;
            }
            d = trial;
            (ex, ey, ez, err) = (tx, ty, tz, terr);
        }
        d
    }
}

/// Moves every cone block of `v` strictly inside the cone by a common
/// multiple of the identity element when any block is outside.
fn shift_into_cone(std: &Standard, v: &mut [f64]) {
    let worst = std
        .cones
        .iter()
        .map(|k| -cone::interior_margin(&v[k.offset..k.offset + k.dim]))
        .fold(f64::NEG_INFINITY, f64::max);
    if worst >= 0.0 {
        for k in &std.cones {
            v[k.offset] += 1.0 + worst;
        }
    }
}

fn split_cones(std: &Standard, z: &[f64]) -> Vec<Vec<f64>> {
    std.cones.iter().map(|k| z[k.offset..k.offset + k.dim].to_vec()).collect()
}

fn candidate(
    std: &Standard,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    tau: f64,
    status: SolveStatus,
    iterations: usize,
    prog: &ConicProgram,
) -> ConicSolution {
    let xs: Vec<f64> = x.iter().map(|v| v / tau).collect();
    let ys: Vec<f64> = y.iter().map(|v| v / tau).collect();
    let zs: Vec<f64> = z.iter().map(|v| v / tau).collect();
    let mut sol = ConicSolution {
        objective_value: prog.objective_value(&xs),
        x: xs,
        y: ys,
        z: split_cones(std, &zs),
        status,
        kkt_residuals: KktResiduals::default(),
        iterations,
    };
    sol.kkt_residuals = check_kkt(prog, &sol);
    sol
}

fn score(r: &KktResiduals, settings: &SolverSettings) -> f64 {
    (r.primal_feas / settings.feas_tol)
        .max(r.dual_feas / settings.feas_tol)
        .max(r.duality_gap / settings.gap_tol)
}

/// Solves `prog`. Identical inputs give bit-identical outputs.
///
/// Non-optimal outcomes are reported through [`ConicSolution::status`];
/// `Err` is returned only for malformed programs or settings.
pub fn solve(prog: &ConicProgram, settings: &SolverSettings) -> Result<ConicSolution> {
    settings.validate()?;
    prog.validate()?;
    let std = Standard::new(prog);
    let (n, p, m) = (std.n, std.p, std.m);
    let h = std.h_vec();
    let nc = std.cones.len();

    // Starting point from two least-squares problems with W = I.
    let ident: Vec<NtScaling> = std.cones.iter().map(|k| NtScaling::identity(k.dim)).collect();
    let Some(kkt0) = Kkt::factor(&std, &ident) else {
        return Err(crate::error::Error::Numerical("initial KKT system is singular".into()));
    };
    let primal = kkt0.solve(&vec![0.0; n], &std.b, &h);
    let mut x = primal.x;
    let mut s: Vec<f64> = primal.z.iter().map(|v| -v).collect();
    shift_into_cone(&std, &mut s);
    let neg_c: Vec<f64> = std.c.iter().map(|v| -v).collect();
    let dual = kkt0.solve(&neg_c, &vec![0.0; p], &vec![0.0; m]);
    let mut y = dual.y;
    let mut z = dual.z;
    shift_into_cone(&std, &mut z);
    if nc == 0 {
        s.clear();
        z.clear();
    }
    drop(kkt0);
    let mut tau = 1.0;
    let mut kap = 1.0;

    let mut best: Option<(f64, ConicSolution)> = None;
    let mut polished: Option<(f64, ConicSolution)> = None;
    let mut polish_left = POLISH_ITERS;
    let mut stalled = 0;
    let mut iter = 0;
    loop {
        // residuals of the embedding
        let mut rx = std.c.iter().map(|v| v * tau).collect::<Vec<_>>();
        std.at_mul_add(&y, &mut rx);
        std.gt_mul_add(&z, &mut rx);
        let mut ax = vec![0.0; p];
        std.a_mul(&x, &mut ax);
        let ry: Vec<f64> = std.b.iter().zip(&ax).map(|(b, a)| b * tau - a).collect();
        let mut gx = vec![0.0; m];
        std.g_mul(&x, &mut gx);
        let rz: Vec<f64> = (0..m).map(|i| s[i] + gx[i] - h[i] * tau).collect();
        let cx = cone::dot(&std.c, &x);
        let by = cone::dot(&std.b, &y);
        let hz = cone::dot(&h, &z);
        let rt = kap + cx + by + hz;

        let cand = candidate(&std, &x, &y, &z, tau, SolveStatus::Optimal, iter, prog);
        let sc = score(&cand.kkt_residuals, settings);
        log::trace!(
            "ipm {iter}: pfeas {:.3e} dfeas {:.3e} gap {:.3e} tau {tau:.3e} kappa {kap:.3e}",
            cand.kkt_residuals.primal_feas,
            cand.kkt_residuals.dual_feas,
            cand.kkt_residuals.duality_gap,
        );
        if cand.kkt_residuals.within(settings) {
            let improved = polished.as_ref().is_none_or(|(b, _)| sc < *b);
            if improved {
                polished = Some((sc, cand.clone()));
            }
            polish_left -= 1;
            if !improved || polish_left == 0 || iter >= settings.max_iters {
                break;
            }
        }
        match &best {
            Some((b, _)) if *b <= sc => stalled += 1,
            _ => {
                best = Some((sc, cand));
                stalled = 0;
            }
        }

        // infeasibility certificates
        if tau < kap {
            let mut aty_gtz = vec![0.0; n];
            std.at_mul_add(&y, &mut aty_gtz);
            std.gt_mul_add(&z, &mut aty_gtz);
            if hz + by < 0.0 && inf_norm(&aty_gtz) <= settings.feas_tol * -(hz + by) {
                let scale = -(hz + by);
                return Ok(ConicSolution {
                    x: vec![f64::NAN; n],
                    y: y.iter().map(|v| v / scale).collect(),
                    z: split_cones(&std, &z.iter().map(|v| v / scale).collect::<Vec<_>>()),
                    objective_value: f64::INFINITY,
                    status: SolveStatus::Infeasible,
                    kkt_residuals: best.map(|b| b.1.kkt_residuals).unwrap_or_default(),
                    iterations: iter,
                });
            }
            let gxs: Vec<f64> = gx.iter().zip(&s).map(|(a, b)| a + b).collect();
            if cx < 0.0
                && inf_norm(&ax) <= settings.feas_tol * -cx
                && inf_norm(&gxs) <= settings.feas_tol * -cx
            {
                return Ok(ConicSolution {
                    x: x.iter().map(|v| v / -cx).collect(),
                    y: vec![f64::NAN; p],
                    z: split_cones(&std, &vec![f64::NAN; m]),
                    objective_value: f64::NEG_INFINITY,
                    status: SolveStatus::Unbounded,
                    kkt_residuals: best.map(|b| b.1.kkt_residuals).unwrap_or_default(),
                    iterations: iter,
                });
            }
        }

        if iter >= settings.max_iters || stalled >= STALL_LIMIT {
            break;
        }
        iter += 1;

        // scaling point
        let mut scal = Vec::with_capacity(nc);
        for k in 0..nc {
            match NtScaling::new(std.cone_slice(k, &s), std.cone_slice(k, &z)) {
                Some(w) => scal.push(w),
                None => break,
            }
        }
        if scal.len() != nc {
            log::debug!("ipm lost interiority at iteration {iter}");
            break;
        }
        let lambda = per_cone(&std, &z, |k, zk, out| scal[k].apply(zk, out));
        let Some(kkt) = Kkt::factor(&std, &scal) else {
            log::debug!("ipm KKT factorization failed at iteration {iter}");
            break;
        };

        let rhs_x: Vec<f64> = std.c.iter().map(|v| -v).collect();
        let v1 = kkt.solve(&rhs_x, &std.b, &h);
        let denom = -kap / tau + cone::dot(&std.c, &v1.x) + cone::dot(&std.b, &v1.y) + cone::dot(&h, &v1.z);

        let lambda_sq = per_cone(&std, &lambda, |_, l, out| cone::jordan_product(l, l, out));
        let direction = |sigma: f64, rs: &[f64], rk: f64| {
            let keep = 1.0 - sigma;
            let tmp = per_cone(&std, rs, |k, r, out| {
                let mut div = vec![0.0; r.len()];
                cone::jordan_div(std.cone_slice(k, &lambda), r, &mut div);
                scal[k].apply(&div, out);
            });
            let bx: Vec<f64> = rx.iter().map(|v| -keep * v).collect();
            let by: Vec<f64> = ry.iter().map(|v| keep * v).collect();
            let bz: Vec<f64> = rz.iter().zip(&tmp).map(|(r, t)| -keep * r + t).collect();
            let v2 = kkt.solve(&bx, &by, &bz);
            let num = -keep * rt + rk / tau
                - (cone::dot(&std.c, &v2.x) + cone::dot(&std.b, &v2.y) + cone::dot(&h, &v2.z));
            let dtau = num / denom;
            let dx: Vec<f64> = v2.x.iter().zip(&v1.x).map(|(a, b)| a + dtau * b).collect();
            let dy: Vec<f64> = v2.y.iter().zip(&v1.y).map(|(a, b)| a + dtau * b).collect();
            let dz: Vec<f64> = v2.z.iter().zip(&v1.z).map(|(a, b)| a + dtau * b).collect();
            let dkap = -(rk + kap * dtau) / tau;
            // ds = −W(λ\r_s + W dz), with W(λ\r_s) already in tmp
            let ds = per_cone(&std, &dz, |k, dzk, out| {
                let off = std.cones[k].offset;
                let mut wdz = vec![0.0; dzk.len()];
                scal[k].apply(dzk, &mut wdz);
                let mut w2dz = vec![0.0; dzk.len()];
                scal[k].apply(&wdz, &mut w2dz);
                for i in 0..dzk.len() {
                    out[i] = -tmp[off + i] - w2dz[i];
                }
            });
            (dx, dy, dz, ds, dtau, dkap)
        };
        let max_step = |dz: &[f64], ds: &[f64], dtau: f64, dkap: f64| {
            let mut alpha = f64::INFINITY;
            for k in 0..nc {
                let lk = std.cone_slice(k, &lambda);
                let mut sd = vec![0.0; lk.len()];
                scal[k].apply_inv(std.cone_slice(k, ds), &mut sd);
                alpha = alpha.min(cone::max_step(lk, &sd));
                let mut zd = vec![0.0; lk.len()];
                scal[k].apply(std.cone_slice(k, dz), &mut zd);
                alpha = alpha.min(cone::max_step(lk, &zd));
            }
            if dtau < 0.0 {
                alpha = alpha.min(-tau / dtau);
            }
            if dkap < 0.0 {
                alpha = alpha.min(-kap / dkap);
            }
            alpha
        };

        // predictor
        let (_, _, dz_a, ds_a, dtau_a, dkap_a) = direction(0.0, &lambda_sq, tau * kap);
        let alpha_aff = max_step(&dz_a, &ds_a, dtau_a, dkap_a).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);
        let mu = (cone::dot(&s, &z) + tau * kap) / (nc as f64 + 1.0);

        // corrector
        let mut rs = lambda_sq.clone();
        for k in 0..nc {
            let c = &std.cones[k];
            let mut a = vec![0.0; c.dim];
            let mut b = vec![0.0; c.dim];
            let mut prod = vec![0.0; c.dim];
            scal[k].apply_inv(std.cone_slice(k, &ds_a), &mut a);
            scal[k].apply(std.cone_slice(k, &dz_a), &mut b);
            cone::jordan_product(&a, &b, &mut prod);
            for i in 0..c.dim {
                rs[c.offset + i] += prod[i];
            }
            rs[c.offset] -= sigma * mu;
        }
        let rk = tau * kap + dtau_a * dkap_a - sigma * mu;
        let (dx, dy, dz, ds, dtau, dkap) = direction(sigma, &rs, rk);
        let alpha = (STEP_FRACTION * max_step(&dz, &ds, dtau, dkap)).min(1.0);
        if !alpha.is_finite() || alpha <= 0.0 {
            log::debug!("ipm step collapsed at iteration {iter}");
            break;
        }

        for (v, d) in x.iter_mut().zip(&dx) {
            *v += alpha * d;
        }
        for (v, d) in y.iter_mut().zip(&dy) {
            *v += alpha * d;
        }
        for (v, d) in z.iter_mut().zip(&dz) {
            *v += alpha * d;
        }
        for (v, d) in s.iter_mut().zip(&ds) {
            *v += alpha * d;
        }
        tau += alpha * dtau;
        kap += alpha * dkap;
        if !(tau.is_finite() && kap.is_finite() && tau > 0.0 && kap > 0.0) {
            log::debug!("ipm lost positivity of tau/kappa at iteration {iter}");
            break;
        }
    }

    if let Some((_, sol)) = polished {
        log::debug!("ipm converged in {} iterations", sol.iterations);
        return Ok(sol);
    }
    let (_, mut sol) = best.expect("at least one iterate is scored");
    sol.status = SolveStatus::MaxIterations;
    sol.iterations = iter;
    Ok(sol)
}
