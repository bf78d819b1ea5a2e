//! Second-order cone algebra: Jordan products, Nesterov–Todd scaling and
//! step-length computation. Vectors are `(u0, u1)` with `u0` the scalar head.

/// `u0² − ‖u1‖²`, evaluated as a product of factors to limit cancellation.
pub(crate) fn jdet(u: &[f64]) -> f64 {
    let n1 = norm(&u[1..]);
    (u[0] - n1) * (u[0] + n1)
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `u0 − ‖u1‖`; positive exactly when `u` is in the cone interior.
pub(crate) fn interior_margin(u: &[f64]) -> f64 {
    u[0] - norm(&u[1..])
}

/// `u ∘ v = (uᵀv, u0·v1 + v0·u1)`.
pub(crate) fn jordan_product(u: &[f64], v: &[f64], out: &mut [f64]) {
    out[0] = dot(u, v);
    for i in 1..u.len() {
        out[i] = u[0] * v[i] + v[0] * u[i];
    }
}

/// Solves `λ ∘ x = r` for `x`.
pub(crate) fn jordan_div(lambda: &[f64], r: &[f64], out: &mut [f64]) {
    let det = jdet(lambda);
    let x0 = (lambda[0] * r[0] - dot(&lambda[1..], &r[1..])) / det;
    out[0] = x0;
    for i in 1..lambda.len() {
        out[i] = (r[i] - x0 * lambda[i]) / lambda[0];
    }
}

/// Largest `α ≥ 0` with `u + α·d` in the cone, for `u` interior.
/// Returns `f64::INFINITY` when the ray never leaves the cone.
pub(crate) fn max_step(u: &[f64], d: &[f64]) -> f64 {
    let a = jdet(d);
    let b = u[0] * d[0] - dot(&u[1..], &d[1..]);
    let c = jdet(u).max(0.0);
    let disc = (b * b - a * c).max(0.0);
    if b < 0.0 {
        c / (-b + disc.sqrt())
    } else if a < 0.0 {
        (b + disc.sqrt()) / -a
    } else {
        f64::INFINITY
    }
}

/// Nesterov–Todd scaling `W = η·W̄` for one cone, with `W·z = W⁻¹·s`.
#[derive(Debug, Clone)]
pub(crate) struct NtScaling {
    pub eta: f64,
    /// `w̄` with `w̄0² − ‖w̄1‖² = 1`.
    pub w: Vec<f64>,
}

impl NtScaling {
    pub fn identity(dim: usize) -> Self {
        let mut w = vec![0.0; dim];
        w[0] = 1.0;
        Self { eta: 1.0, w }
    }

    /// Scaling point of interior `s` and `z`; `None` if either is not interior.
    pub fn new(s: &[f64], z: &[f64]) -> Option<Self> {
        let sres = jdet(s);
        let zres = jdet(z);
        if !(sres > 0.0 && zres > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
            return None;
        }
        let snorm = sres.sqrt();
        let znorm = zres.sqrt();
        let sb: Vec<f64> = s.iter().map(|v| v / snorm).collect();
        let zb: Vec<f64> = z.iter().map(|v| v / znorm).collect();
        let gamma = ((1.0 + dot(&sb, &zb)) / 2.0).sqrt();
        let mut w = vec![0.0; s.len()];
        for i in 1..s.len() {
            w[i] = (sb[i] - zb[i]) / (2.0 * gamma);
        }
        w[0] = (1.0 + dot(&w[1..], &w[1..])).sqrt();
        let eta = (snorm / znorm).sqrt();
        if !(eta.is_finite() && w.iter().all(|v| v.is_finite())) {
            return None;
        }
        Some(Self { eta, w })
    }

    /// `out = W·v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let w0 = self.w[0];
        let w1 = &self.w[1..];
        let d = dot(w1, &v[1..]);
        out[0] = self.eta * (w0 * v[0] + d);
        let coef = v[0] + d / (1.0 + w0);
        for i in 1..v.len() {
            out[i] = self.eta * (v[i] + coef * self.w[i]);
        }
    }

    /// `out = W⁻¹·v`.
    pub fn apply_inv(&self, v: &[f64], out: &mut [f64]) {
        let w0 = self.w[0];
        let w1 = &self.w[1..];
        let d = dot(w1, &v[1..]);
        out[0] = (w0 * v[0] - d) / self.eta;
        let coef = -v[0] + d / (1.0 + w0);
        for i in 1..v.len() {
            out[i] = (v[i] + coef * self.w[i]) / self.eta;
        }
    }

    /// `out = W²·v`.
    pub fn apply_sq(&self, v: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; v.len()];
        self.apply(v, &mut tmp);
        self.apply(&tmp, out);
    }

    /// `out = W⁻²·v`.
    pub fn apply_inv_sq(&self, v: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; v.len()];
        self.apply_inv(v, &mut tmp);
        self.apply_inv(&tmp, out);
    }

    /// `(r, w0)` such that `W̄⁻² = I + V·[[2r, −2w0], [−2w0, 2]]·Vᵀ`
    /// with `V = [e0, (0, w̄1)]` and `r = ‖w̄1‖²`.
    pub fn low_rank_coefficients(&self) -> (f64, f64) {
        (dot(&self.w[1..], &self.w[1..]), self.w[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn interior(head_margin: f64, tail: Vec<f64>) -> Vec<f64> {
        let mut v = vec![norm(&tail) + head_margin];
        v.extend(tail);
        v
    }

    fn cone_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        (0.01f64..3.0, proptest::collection::vec(-2.0f64..2.0, dim - 1))
            .prop_map(|(m, t)| interior(m, t))
    }

    fn pair(dim_range: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        dim_range.prop_flat_map(|d| (cone_vec(d), cone_vec(d)))
    }

    proptest! {
        #[test]
        fn scaling_maps_z_to_inverse_scaled_s((s, z) in pair(1..7)) {
            let w = NtScaling::new(&s, &z).unwrap();
            let mut wz = vec![0.0; s.len()];
            let mut wis = vec![0.0; s.len()];
            w.apply(&z, &mut wz);
            w.apply_inv(&s, &mut wis);
            for (a, b) in wz.iter().zip(&wis) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn inverse_round_trip((s, z) in pair(1..7), v in proptest::collection::vec(-1.0f64..1.0, 7)) {
            let w = NtScaling::new(&s, &z).unwrap();
            let v = &v[..s.len()];
            let mut a = vec![0.0; s.len()];
            let mut b = vec![0.0; s.len()];
            w.apply(v, &mut a);
            w.apply_inv(&a, &mut b);
            for (x, y) in v.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn jordan_div_inverts_product((l, r) in pair(1..7)) {
            let mut x = vec![0.0; l.len()];
            let mut back = vec![0.0; l.len()];
            jordan_div(&l, &r, &mut x);
            jordan_product(&l, &x, &mut back);
            for (a, b) in r.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn max_step_lands_on_boundary(u in cone_vec(4), d in proptest::collection::vec(-3.0f64..3.0, 4)) {
            let a = max_step(&u, &d);
            if a.is_finite() {
                let p: Vec<f64> = u.iter().zip(&d).map(|(x, y)| x + a * y).collect();
                prop_assert!(interior_margin(&p).abs() < 1e-7 * (1.0 + norm(&p)));
                let inside: Vec<f64> = u.iter().zip(&d).map(|(x, y)| x + 0.99 * a * y).collect();
                prop_assert!(interior_margin(&inside) > 0.0);
            } else {
                let far: Vec<f64> = u.iter().zip(&d).map(|(x, y)| x + 1e6 * y).collect();
                prop_assert!(interior_margin(&far) >= -1e-6 * norm(&far));
            }
        }

        #[test]
        fn low_rank_form_matches_direct((s, z) in pair(2..6), v in proptest::collection::vec(-1.0f64..1.0, 6)) {
            let w = NtScaling::new(&s, &z).unwrap();
            let v = &v[..s.len()];
            let mut direct = vec![0.0; s.len()];
            w.apply_inv_sq(v, &mut direct);
            let (r, w0) = w.low_rank_coefficients();
            let a = v[0];
            let b = dot(&w.w[1..], &v[1..]);
            let c0 = 2.0 * r * a - 2.0 * w0 * b;
            let c1 = -2.0 * w0 * a + 2.0 * b;
            let eta2 = w.eta * w.eta;
            let mut low = v.to_vec();
            low[0] += c0;
            for i in 1..s.len() {
                low[i] += c1 * w.w[i];
            }
            for (x, y) in direct.iter().zip(&low) {
                prop_assert!((x - y / eta2).abs() < 1e-8 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn identity_scaling_of_equal_points() {
        let s = vec![2.0, 0.5, -0.3];
        let w = NtScaling::new(&s, &s).unwrap();
        assert!((w.eta - 1.0).abs() < 1e-15);
        assert!((w.w[0] - 1.0).abs() < 1e-15);
        assert!(w.w[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn boundary_points_rejected() {
        assert!(NtScaling::new(&[1.0, 1.0], &[1.0, 0.0]).is_none());
        assert!(NtScaling::new(&[1.0, 0.0], &[-1.0, 0.0]).is_none());
    }

    #[test]
    fn step_along_cone_is_unbounded() {
        assert_eq!(max_step(&[1.0, 0.0], &[1.0, 0.5]), f64::INFINITY);
        assert!((max_step(&[1.0, 0.0], &[-1.0, 0.0]) - 1.0).abs() < 1e-15);
    }
}
