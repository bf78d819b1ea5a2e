//! Sampling of the reference response and its real-valued lifting.
//!
//! The reference is `1` at the single mainlobe sample and `0` at every
//! sidelobe sample. Sidelobe samples live in the `phi = ±90°` plane; the
//! transition band around the mainlobe is left unsampled.
//!
//! Lifted variable layout, seven reals per location `m`:
//!
//! ```text
//! [t_m, Re w_x, Re w_y, Re w_z, −Im w_x, −Im w_y, −Im w_z]
//! ```

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array_model::{full_steering_at, CandidateGrid, Direction, Polarization, WeightVector};
use crate::error::{Error, Result};

/// Reals per location in the lifted design vector.
pub const LIFTED_BLOCK: usize = 7;
/// Reals per location when no bound slot is carried.
pub const WEIGHT_BLOCK: usize = 6;

const DEG_SLACK: f64 = 1e-9;

/// Index of `t_m` in the lifted vector.
pub fn t_slot(m: usize) -> usize {
    LIFTED_BLOCK * m
}

/// Index of `Re w_{axis,m}` in the lifted vector.
pub fn re_slot(m: usize, axis: usize) -> usize {
    LIFTED_BLOCK * m + 1 + axis
}

/// Index of `−Im w_{axis,m}` in the lifted vector.
pub fn neg_im_slot(m: usize, axis: usize) -> usize {
    LIFTED_BLOCK * m + 4 + axis
}

/// Which half of the `phi = ±90°` plane a sample lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `phi = +90°`, reported as non-negative signed theta.
    Positive,
    /// `phi = −90°`, reported as negative signed theta.
    Negative,
}

impl Side {
    pub fn phi_deg(self) -> f64 {
        match self {
            Side::Positive => 90.0,
            Side::Negative => -90.0,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Side::Positive => 1.0,
            Side::Negative => -1.0,
        }
    }
}

/// Closed interval of elevation angles on one side of the array axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidelobeRegion {
    pub side: Side,
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
}

impl SidelobeRegion {
    pub fn new(side: Side, theta_min_deg: f64, theta_max_deg: f64) -> Result<Self> {
        if !(0.0..=90.0).contains(&theta_min_deg)
            || !(0.0..=90.0).contains(&theta_max_deg)
            || theta_min_deg > theta_max_deg
        {
            return Err(Error::InvalidParameter {
                name: "sidelobe_regions",
                reason: format!(
                    "interval [{theta_min_deg}, {theta_max_deg}] must satisfy 0 <= min <= max <= 90"
                ),
            });
        }
        Ok(Self {
            side,
            theta_min_deg,
            theta_max_deg,
        })
    }

    /// The region as a closed interval of signed theta.
    pub fn signed_interval(&self) -> (f64, f64) {
        match self.side {
            Side::Positive => (self.theta_min_deg, self.theta_max_deg),
            Side::Negative => (-self.theta_max_deg, -self.theta_min_deg),
        }
    }

    /// Closed-interval membership, with a small slack for accumulated
    /// floating-point error in sweep angles.
    pub fn contains_signed(&self, signed_theta_deg: f64) -> bool {
        let (lo, hi) = self.signed_interval();
        signed_theta_deg >= lo - DEG_SLACK && signed_theta_deg <= hi + DEG_SLACK
    }
}

/// Sidelobe regions covering every signed angle in `[−90°, 90°]` except the
/// open band `(mainlobe − halfwidth, mainlobe + halfwidth)`.
///
/// A piece of the complement that straddles zero is split into one region
/// per side, so `theta = 0` may appear on both sides.
pub fn sidelobe_regions_around(signed_mainlobe_deg: f64, halfwidth_deg: f64) -> Vec<SidelobeRegion> {
    let mut pieces = Vec::new();
    let lo_end = signed_mainlobe_deg - halfwidth_deg;
    let hi_start = signed_mainlobe_deg + halfwidth_deg;
    if lo_end >= -90.0 {
        pieces.push((-90.0, lo_end.min(90.0)));
    }
    if hi_start <= 90.0 {
        pieces.push((hi_start.max(-90.0), 90.0));
    }

    let mut regions = Vec::new();
    for (a, b) in pieces {
        if a < 0.0 {
            regions.push(SidelobeRegion {
                side: Side::Negative,
                theta_min_deg: (-b).max(0.0),
                theta_max_deg: -a,
            });
        }
        if b >= 0.0 && !(a < 0.0 && b == 0.0) {
            regions.push(SidelobeRegion {
                side: Side::Positive,
                theta_min_deg: a.max(0.0),
                theta_max_deg: b,
            });
        }
    }
    regions
}

/// Everything needed to build one sampled design problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub mainlobe: Direction,
    pub polarization: Polarization,
    pub sidelobe_regions: Vec<SidelobeRegion>,
    /// Half-width of the unsampled band around the mainlobe, in degrees.
    pub transition_halfwidth_deg: f64,
    pub sidelobe_step_deg: f64,
    /// Allowed Euclidean mismatch between designed and reference samples.
    pub alpha: f64,
    pub grid: CandidateGrid,
}

impl DesignSpec {
    /// Builds a spec whose sidelobe regions are the complement of the
    /// transition band around the mainlobe.
    pub fn with_transition(
        mainlobe: Direction,
        polarization: Polarization,
        transition_halfwidth_deg: f64,
        sidelobe_step_deg: f64,
        alpha: f64,
        grid: CandidateGrid,
    ) -> Result<Self> {
        let signed = signed_theta_deg(&mainlobe)?;
        let spec = Self {
            mainlobe,
            polarization,
            sidelobe_regions: sidelobe_regions_around(signed, transition_halfwidth_deg),
            transition_halfwidth_deg,
            sidelobe_step_deg,
            alpha,
            grid,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Signed theta of the mainlobe, in degrees.
    pub fn signed_mainlobe_deg(&self) -> Result<f64> {
        signed_theta_deg(&self.mainlobe)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sidelobe_step_deg.is_finite() && self.sidelobe_step_deg > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sidelobe_step_deg",
                reason: format!("must be positive, got {}", self.sidelobe_step_deg),
            });
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be non-negative, got {}", self.alpha),
            });
        }
        if !(self.transition_halfwidth_deg.is_finite() && self.transition_halfwidth_deg >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "transition_halfwidth_deg",
                reason: format!("must be non-negative, got {}", self.transition_halfwidth_deg),
            });
        }
        if self.sidelobe_regions.is_empty() {
            return Err(Error::InvalidParameter {
                name: "sidelobe_regions",
                reason: "at least one sidelobe region is required".into(),
            });
        }
        let ml = self.signed_mainlobe_deg()?;
        let hw = self.transition_halfwidth_deg;
        for r in &self.sidelobe_regions {
            SidelobeRegion::new(r.side, r.theta_min_deg, r.theta_max_deg)?;
            let (lo, hi) = r.signed_interval();
            let touches_mainlobe = ml >= lo - DEG_SLACK && ml <= hi + DEG_SLACK;
            let enters_transition = hw > 0.0 && lo < ml + hw - DEG_SLACK && hi > ml - hw + DEG_SLACK;
            if touches_mainlobe || enters_transition {
                return Err(Error::InvalidParameter {
                    name: "sidelobe_regions",
                    reason: format!(
                        "signed interval [{lo}, {hi}] overlaps the mainlobe at {ml} deg \
                         or its ±{hw} deg transition band"
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Signed theta in degrees for a direction in the `phi = ±90°` plane.
pub fn signed_theta_deg(dir: &Direction) -> Result<f64> {
    let phi = dir.phi();
    if (phi.abs() - std::f64::consts::FRAC_PI_2).abs() > 1e-9 {
        return Err(Error::InvalidParameter {
            name: "phi",
            reason: format!(
                "mainlobe must lie in the phi = ±90 deg plane, got {} deg",
                phi.to_degrees()
            ),
        });
    }
    Ok(dir.theta().to_degrees() * phi.signum())
}

/// One sampled direction/polarization pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSample {
    pub direction: Direction,
    pub polarization: Polarization,
    pub signed_theta_deg: f64,
}

/// Sample points and the reference response at each of them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPattern {
    pub samples: Vec<PatternSample>,
    pub reference: Vec<Complex64>,
}

impl SampledPattern {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Inclusive arithmetic progression `lo, lo+step, …` up to `hi`.
fn inclusive_steps(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let count = ((hi - lo) / step + DEG_SLACK).floor() as usize + 1;
    (0..count).map(move |i| {
        let v = lo + i as f64 * step;
        if (v - hi).abs() < DEG_SLACK {
            hi
        } else {
            v
        }
    })
}

/// Mainlobe sample first (reference 1), then every sidelobe region in order,
/// each swept upward in theta at `sidelobe_step_deg` (reference 0).
pub fn build_samples(spec: &DesignSpec) -> Result<SampledPattern> {
    spec.validate()?;
    let pol = spec.polarization;
    let mut samples = vec![PatternSample {
        direction: spec.mainlobe,
        polarization: pol,
        signed_theta_deg: spec.signed_mainlobe_deg()?,
    }];
    for region in &spec.sidelobe_regions {
        for theta in inclusive_steps(region.theta_min_deg, region.theta_max_deg, spec.sidelobe_step_deg) {
            samples.push(PatternSample {
                direction: Direction::from_degrees(theta, region.side.phi_deg())?,
                polarization: pol,
                signed_theta_deg: region.side.sign() * theta,
            });
        }
    }
    let mut reference = vec![Complex64::new(0.0, 0.0); samples.len()];
    reference[0] = Complex64::new(1.0, 0.0);
    Ok(SampledPattern { samples, reference })
}

/// Dense row-major complex matrix; row `l` is the full steering vector of
/// sample `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl SteeringMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if !cols.is_multiple_of(3) {
            return Err(Error::InvalidParameter {
                name: "cols",
                reason: format!("steering rows hold whole tripoles, got {cols} columns"),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    /// `S · w^H`, one response per sample.
    pub fn responses(&self, w: &WeightVector) -> Result<Vec<Complex64>> {
        if 3 * w.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: 3 * w.len(),
            });
        }
        let flat = w.flatten();
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(&flat).map(|(s, w)| s * w.conj()).sum())
            .collect())
    }
}

/// Reference vector and steering matrix over the given element positions.
pub fn assemble_matrices(
    pattern: &SampledPattern,
    positions: &[f64],
) -> (Vec<Complex64>, SteeringMatrix) {
    let cols = 3 * positions.len();
    let mut data = Vec::with_capacity(pattern.len() * cols);
    for sample in &pattern.samples {
        data.extend(full_steering_at(&sample.direction, &sample.polarization, positions));
    }
    let s = SteeringMatrix {
        rows: pattern.len(),
        cols,
        data,
    };
    (pattern.reference.clone(), s)
}

/// `‖p_r − S·w^H‖₂` evaluated in the complex domain.
pub fn complex_residual(p_r: &[Complex64], s: &SteeringMatrix, w: &WeightVector) -> Result<f64> {
    let resp = s.responses(w)?;
    if resp.len() != p_r.len() {
        return Err(Error::DimensionMismatch {
            expected: s.nrows(),
            actual: p_r.len(),
        });
    }
    Ok(p_r
        .iter()
        .zip(&resp)
        .map(|(p, r)| (p - r).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Real-valued form of the sampled design problem.
#[derive(Debug, Clone)]
pub struct LiftedSystem {
    /// `[Re p_r; Im p_r]`.
    pub p_hat: Vec<f64>,
    /// `2L × 7M`; every `t_m` column is zero.
    pub s_hat: Mat<f64>,
    /// Selects the `t_m` slots.
    pub c_hat: Vec<f64>,
}

impl LiftedSystem {
    pub fn num_locations(&self) -> usize {
        self.s_hat.ncols() / LIFTED_BLOCK
    }

    pub fn num_samples(&self) -> usize {
        self.p_hat.len() / 2
    }

    /// Packs complex weights and bound slots into the lifted layout.
    pub fn pack(&self, w: &WeightVector, t: &[f64]) -> Result<Vec<f64>> {
        let m = self.num_locations();
        if w.len() != m || t.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: if w.len() != m { w.len() } else { t.len() },
            });
        }
        let mut out = vec![0.0; LIFTED_BLOCK * m];
        for (loc, triple) in w.triples().iter().enumerate() {
            out[t_slot(loc)] = t[loc];
            for axis in 0..3 {
                out[re_slot(loc, axis)] = triple[axis].re;
                out[neg_im_slot(loc, axis)] = -triple[axis].im;
            }
        }
        Ok(out)
    }

    /// Splits a lifted vector back into complex weights and bound slots.
    pub fn unpack(&self, lifted: &[f64]) -> Result<(WeightVector, Vec<f64>)> {
        unpack_lifted(lifted)
    }

    /// `‖p̂ − Ŝ·ŵ‖₂`.
    pub fn residual(&self, lifted: &[f64]) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.s_hat.nrows() {
            let mut r = self.p_hat[i];
            for (j, x) in lifted.iter().enumerate() {
                r -= self.s_hat[(i, j)] * x;
            }
            sum += r * r;
        }
        sum.sqrt()
    }
}

/// Splits a vector in the seven-per-location layout into weights and bounds.
pub fn unpack_lifted(lifted: &[f64]) -> Result<(WeightVector, Vec<f64>)> {
    if !lifted.len().is_multiple_of(LIFTED_BLOCK) {
        return Err(Error::DimensionMismatch {
            expected: LIFTED_BLOCK * (lifted.len() / LIFTED_BLOCK + 1),
            actual: lifted.len(),
        });
    }
    let m = lifted.len() / LIFTED_BLOCK;
    let mut t = Vec::with_capacity(m);
    let mut triples = Vec::with_capacity(m);
    for loc in 0..m {
        t.push(lifted[t_slot(loc)]);
        triples.push(std::array::from_fn(|axis| {
            Complex64::new(lifted[re_slot(loc, axis)], -lifted[neg_im_slot(loc, axis)])
        }));
    }
    Ok((WeightVector::new(triples), t))
}

/// Writes the lifted coefficients of one complex entry `s` multiplying the
/// weight with real slot `re` and negated-imaginary slot `neg_im`.
fn lift_entry(out: &mut Mat<f64>, row: usize, rows: usize, s: Complex64, re: usize, neg_im: usize) {
    // s·conj(w) = (Re s·Re w + Im s·Im w) + j(Im s·Re w − Re s·Im w)
    out[(row, re)] = s.re;
    out[(row, neg_im)] = -s.im;
    out[(row + rows, re)] = s.im;
    out[(row + rows, neg_im)] = s.re;
}

/// Lifts `(p_r, S)` to the real system with bound slots.
pub fn lift_to_real(p_r: &[Complex64], s: &SteeringMatrix) -> LiftedSystem {
    let l = s.nrows();
    let m = s.ncols() / 3;
    let mut s_hat = Mat::<f64>::zeros(2 * l, LIFTED_BLOCK * m);
    for i in 0..l {
        for loc in 0..m {
            for axis in 0..3 {
                let v = s.get(i, 3 * loc + axis);
                lift_entry(&mut s_hat, i, l, v, re_slot(loc, axis), neg_im_slot(loc, axis));
            }
        }
    }
    let mut c_hat = vec![0.0; LIFTED_BLOCK * m];
    for loc in 0..m {
        c_hat[t_slot(loc)] = 1.0;
    }
    LiftedSystem {
        p_hat: lift_vector(p_r),
        s_hat,
        c_hat,
    }
}

/// Lifts `(p_r, S)` without bound slots: six reals per location ordered
/// `[Re w_x, Re w_y, Re w_z, −Im w_x, −Im w_y, −Im w_z]`.
pub fn lift_weights_only(p_r: &[Complex64], s: &SteeringMatrix) -> (Vec<f64>, Mat<f64>) {
    let l = s.nrows();
    let m = s.ncols() / 3;
    let mut s_hat = Mat::<f64>::zeros(2 * l, WEIGHT_BLOCK * m);
    for i in 0..l {
        for loc in 0..m {
            for axis in 0..3 {
                let v = s.get(i, 3 * loc + axis);
                let base = WEIGHT_BLOCK * loc;
                lift_entry(&mut s_hat, i, l, v, base + axis, base + 3 + axis);
            }
        }
    }
    (lift_vector(p_r), s_hat)
}

/// Complex weights from the six-per-location layout.
pub fn unpack_weights_only(lifted: &[f64]) -> Result<WeightVector> {
    if !lifted.len().is_multiple_of(WEIGHT_BLOCK) {
        return Err(Error::DimensionMismatch {
            expected: WEIGHT_BLOCK * (lifted.len() / WEIGHT_BLOCK + 1),
            actual: lifted.len(),
        });
    }
    Ok(WeightVector::new(
        lifted
            .chunks_exact(WEIGHT_BLOCK)
            .map(|b| std::array::from_fn(|axis| Complex64::new(b[axis], -b[3 + axis])))
            .collect(),
    ))
}

fn lift_vector(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}
