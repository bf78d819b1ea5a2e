//! Beam-pattern sweeps and the summary figures reported for a design.

use serde::{Deserialize, Serialize};

use crate::array_model::{array_response, full_steering_at, Direction, Polarization, WeightVector};
use crate::error::{Error, Result};
use crate::pattern_grid::{assemble_matrices, build_samples, complex_residual, DesignSpec, SidelobeRegion};

/// Level assigned to zero magnitude.
pub const DB_FLOOR: f64 = -120.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub signed_theta_deg: f64,
    pub magnitude_db: f64,
}

/// Normalized pattern over signed theta in `[−90°, 90°]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSweep {
    pub points: Vec<SweepPoint>,
    pub resolution_deg: f64,
}

/// Unnormalized response magnitude at a signed elevation.
pub fn response_magnitude(
    w: &WeightVector,
    positions: &[f64],
    pol: &Polarization,
    signed_theta_deg: f64,
) -> Result<f64> {
    let dir = Direction::from_signed_degrees(signed_theta_deg)?;
    Ok(array_response(w, &full_steering_at(&dir, pol, positions))?.norm())
}

/// Sweeps `k·resolution` for every integer `k` with `|k·resolution| ≤ 90`.
/// Non-negative angles use `phi = +90°`, negative ones `phi = −90°`.
pub fn sweep_pattern(
    w: &WeightVector,
    positions: &[f64],
    pol: &Polarization,
    resolution_deg: f64,
) -> Result<PatternSweep> {
    if w.is_empty() {
        return Err(Error::InvalidParameter {
            name: "weights",
            reason: "cannot sweep an empty weight set".into(),
        });
    }
    if w.len() != positions.len() {
        return Err(Error::DimensionMismatch {
            expected: positions.len(),
            actual: w.len(),
        });
    }
    if !(resolution_deg.is_finite() && resolution_deg > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sweep_resolution_deg",
            reason: format!("must be positive, got {resolution_deg}"),
        });
    }
    let half = (90.0 / resolution_deg + 1e-9).floor() as i64;
    let mut thetas = Vec::with_capacity(2 * half as usize + 1);
    let mut mags = Vec::with_capacity(thetas.capacity());
    for k in -half..=half {
        let theta = (k as f64 * resolution_deg).clamp(-90.0, 90.0);
        thetas.push(theta);
        mags.push(response_magnitude(w, positions, pol, theta)?);
    }
    let peak = mags.iter().fold(0.0f64, |m, v| m.max(*v));
    let points = thetas
        .into_iter()
        .zip(mags)
        .map(|(signed_theta_deg, mag)| SweepPoint {
            signed_theta_deg,
            magnitude_db: if peak > 0.0 && mag > 0.0 {
                (20.0 * (mag / peak).log10()).max(DB_FLOOR)
            } else {
                DB_FLOOR
            },
        })
        .collect();
    Ok(PatternSweep {
        points,
        resolution_deg,
    })
}

/// Highest level among sweep points inside any sidelobe region (closed
/// intervals).
pub fn compute_psl(sweep: &PatternSweep, regions: &[SidelobeRegion]) -> Result<f64> {
    if regions.is_empty() {
        return Err(Error::InvalidParameter {
            name: "sidelobe_regions",
            reason: "at least one region is required".into(),
        });
    }
    sweep
        .points
        .iter()
        .filter(|p| regions.iter().any(|r| r.contains_signed(p.signed_theta_deg)))
        .map(|p| p.magnitude_db)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .ok_or_else(|| Error::InvalidParameter {
            name: "sidelobe_regions",
            reason: "no sweep point falls inside the sidelobe regions".into(),
        })
}

/// Index range of the main beam: the global maximum of the sweep plus every
/// point reached from it by walking outward while the level does not rise.
pub fn main_beam_span(sweep: &PatternSweep) -> Option<(usize, usize)> {
    let pts = &sweep.points;
    let peak = mainlobe_location(sweep).ok()?;
    let i = pts.iter().position(|p| p.signed_theta_deg == peak)?;
    let mut lo = i;
    while lo > 0 && pts[lo - 1].magnitude_db <= pts[lo].magnitude_db {
        lo -= 1;
    }
    let mut hi = i;
    while hi + 1 < pts.len() && pts[hi + 1].magnitude_db <= pts[hi].magnitude_db {
        hi += 1;
    }
    Some((lo, hi))
}

/// Highest level inside the sidelobe regions once the main beam (see
/// [`main_beam_span`]) is removed, so that a beam skirt spilling past the
/// transition edge is not reported as a sidelobe. `None` when no region
/// point lies outside the main beam.
pub fn peak_sidelobe_outside_beam(sweep: &PatternSweep, regions: &[SidelobeRegion]) -> Option<f64> {
    let (lo, hi) = main_beam_span(sweep)?;
    sweep
        .points
        .iter()
        .enumerate()
        .filter(|(i, p)| (*i < lo || *i > hi) && regions.iter().any(|r| r.contains_signed(p.signed_theta_deg)))
        .map(|(_, p)| p.magnitude_db)
        .reduce(f64::max)
}

/// Signed theta of the global maximum. Ties go to the smallest `|θ|`, then
/// to the positive side.
pub fn mainlobe_location(sweep: &PatternSweep) -> Result<f64> {
    let better = |a: &SweepPoint, b: &SweepPoint| {
        if a.magnitude_db != b.magnitude_db {
            return a.magnitude_db > b.magnitude_db;
        }
        let (aa, ba) = (a.signed_theta_deg.abs(), b.signed_theta_deg.abs());
        if aa != ba {
            return aa < ba;
        }
        a.signed_theta_deg > b.signed_theta_deg
    };
    let mut iter = sweep.points.iter();
    let first = iter.next().ok_or_else(|| Error::InvalidParameter {
        name: "sweep",
        reason: "empty sweep".into(),
    })?;
    Ok(iter.fold(first, |best, p| if better(p, best) { p } else { best }).signed_theta_deg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separations {
    pub aperture_wl: f64,
    pub mean_sep_wl: f64,
    pub min_sep_wl: f64,
}

/// Aperture and adjacent spacing statistics of sorted positions; `None`
/// with fewer than two positions.
pub fn compute_separations(active_positions: &[f64]) -> Option<Separations> {
    if active_positions.len() < 2 {
        return None;
    }
    let first = active_positions[0];
    let last = active_positions[active_positions.len() - 1];
    let aperture_wl = last - first;
    let min_sep_wl = active_positions
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    Some(Separations {
        aperture_wl,
        mean_sep_wl: aperture_wl / (active_positions.len() - 1) as f64,
        min_sep_wl,
    })
}

/// The figures reported for one design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub num_tripoles: usize,
    pub aperture_wl: Option<f64>,
    pub mean_sep_wl: Option<f64>,
    pub min_sep_wl: Option<f64>,
    pub mainlobe_deg: f64,
    /// Maximum over the sidelobe regions, beam skirt included.
    pub psl_db: f64,
    /// Maximum over the sidelobe regions outside the main beam.
    pub sidelobe_peak_db: Option<f64>,
    /// `‖p_r − S·w^H‖₂` over the spec's sample set.
    pub residual: f64,
}

/// Sweeps `w` and computes every metric. Locations with an exactly zero
/// weight triple count as inactive.
pub fn evaluate(
    w: &WeightVector,
    positions: &[f64],
    spec: &DesignSpec,
    resolution_deg: f64,
) -> Result<(PatternSweep, MetricBundle)> {
    let sweep = sweep_pattern(w, positions, &spec.polarization, resolution_deg)?;
    let active: Vec<f64> = w
        .group_norms()
        .iter()
        .zip(positions)
        .filter(|(n, _)| **n > 0.0)
        .map(|(_, p)| *p)
        .collect();
    let seps = compute_separations(&active);
    let samples = build_samples(spec)?;
    let (p_r, s) = assemble_matrices(&samples, positions);
    let bundle = MetricBundle {
        num_tripoles: active.len(),
        aperture_wl: seps.map(|s| s.aperture_wl),
        mean_sep_wl: seps.map(|s| s.mean_sep_wl),
        min_sep_wl: seps.map(|s| s.min_sep_wl),
        mainlobe_deg: mainlobe_location(&sweep)?,
        psl_db: compute_psl(&sweep, &spec.sidelobe_regions)?,
        sidelobe_peak_db: peak_sidelobe_outside_beam(&sweep, &spec.sidelobe_regions),
        residual: complex_residual(&p_r, &s, w)?,
    };
    Ok((sweep, bundle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern_grid::Side;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn sweep_of(points: &[(f64, f64)]) -> PatternSweep {
        PatternSweep {
            points: points
                .iter()
                .map(|&(t, db)| SweepPoint {
                    signed_theta_deg: t,
                    magnitude_db: db,
                })
                .collect(),
            resolution_deg: 10.0,
        }
    }

    fn pol() -> Polarization {
        Polarization::from_degrees(55.0, 100.0).unwrap()
    }

    #[test]
    fn separations_of_unit_pair() {
        let s = compute_separations(&[0.0, 1.0]).unwrap();
        assert_eq!((s.aperture_wl, s.mean_sep_wl, s.min_sep_wl), (1.0, 1.0, 1.0));
        assert!(compute_separations(&[3.0]).is_none());
        assert!(compute_separations(&[]).is_none());
    }

    #[test]
    fn psl_picks_second_peak() {
        let sweep = sweep_of(&[(-30.0, -20.0), (-20.0, -40.0), (0.0, 0.0), (20.0, -35.0), (30.0, -25.0)]);
        let regions = [
            SidelobeRegion::new(Side::Negative, 20.0, 90.0).unwrap(),
            SidelobeRegion::new(Side::Positive, 20.0, 90.0).unwrap(),
        ];
        assert_eq!(compute_psl(&sweep, &regions).unwrap(), -20.0);
    }

    #[test]
    fn psl_includes_region_boundary() {
        let sweep = sweep_of(&[(0.0, 0.0), (10.0, -12.0), (20.0, -30.0)]);
        let regions = [SidelobeRegion::new(Side::Positive, 10.0, 90.0).unwrap()];
        assert_eq!(compute_psl(&sweep, &regions).unwrap(), -12.0);
        assert!(compute_psl(&sweep, &[]).is_err());
    }

    #[test]
    fn beam_skirt_is_not_a_sidelobe() {
        let sweep = sweep_of(&[
            (-30.0, -24.0),
            (-20.0, -40.0),
            (-10.0, -12.0),
            (0.0, 0.0),
            (10.0, -13.0),
            (20.0, -45.0),
            (30.0, -22.0),
            (40.0, -50.0),
        ]);
        let regions = [
            SidelobeRegion::new(Side::Negative, 10.0, 90.0).unwrap(),
            SidelobeRegion::new(Side::Positive, 10.0, 90.0).unwrap(),
        ];
        assert_eq!(main_beam_span(&sweep), Some((1, 5)));
        assert_eq!(compute_psl(&sweep, &regions).unwrap(), -12.0);
        assert_eq!(peak_sidelobe_outside_beam(&sweep, &regions), Some(-22.0));
        let monotone = sweep_of(&[(0.0, 0.0), (10.0, -12.0), (20.0, -30.0)]);
        assert_eq!(peak_sidelobe_outside_beam(&monotone, &regions), None);
    }

    #[test]
    fn mainlobe_tie_breaks() {
        assert_eq!(mainlobe_location(&sweep_of(&[(-10.0, -3.0), (0.0, 0.0), (10.0, -3.0)])).unwrap(), 0.0);
        assert_eq!(mainlobe_location(&sweep_of(&[(-30.0, 0.0), (0.0, -9.0), (30.0, 0.0)])).unwrap(), 30.0);
        assert_eq!(mainlobe_location(&sweep_of(&[(-30.0, 0.0), (40.0, 0.0)])).unwrap(), -30.0);
    }

    #[test]
    fn zero_weights_sit_on_the_floor() {
        let sweep = sweep_pattern(&WeightVector::zeros(3), &[0.0, 0.5, 1.0], &pol(), 1.0).unwrap();
        assert_eq!(sweep.points.len(), 181);
        assert!(sweep.points.iter().all(|p| p.magnitude_db == DB_FLOOR));
    }

    #[test]
    fn sweep_grid_is_uniform_and_symmetric() {
        let w = WeightVector::new(vec![[Complex64::new(1.0, 0.0); 3]]);
        let sweep = sweep_pattern(&w, &[0.0], &pol(), 0.2).unwrap();
        assert_eq!(sweep.points.len(), 901);
        assert_eq!(sweep.points[0].signed_theta_deg, -90.0);
        assert_eq!(sweep.points[900].signed_theta_deg, 90.0);
        assert_eq!(sweep.points[450].signed_theta_deg, 0.0);
        assert!(sweep.points.windows(2).all(|p| p[0].signed_theta_deg < p[1].signed_theta_deg));
        assert!(sweep_pattern(&WeightVector::zeros(0), &[], &pol(), 1.0).is_err());
        assert!(sweep_pattern(&w, &[0.0], &pol(), 0.0).is_err());
    }

    #[test]
    fn signed_sides_use_distinct_planes() {
        // a two-element design that steers off broadside is asymmetric
        let w = WeightVector::new(vec![
            [Complex64::new(1.0, 0.0); 3],
            [Complex64::from_polar(1.0, 1.0); 3],
        ]);
        let pos = [0.0, 0.7];
        let plus = response_magnitude(&w, &pos, &pol(), 25.0).unwrap();
        let minus = response_magnitude(&w, &pos, &pol(), -25.0).unwrap();
        assert!((plus - minus).abs() > 1e-3, "{plus} vs {minus}");
    }

    proptest! {
        #[test]
        fn separation_identity(mut pos in proptest::collection::vec(0.0f64..20.0, 2..30)) {
            pos.sort_by(f64::total_cmp);
            pos.dedup();
            prop_assume!(pos.len() >= 2);
            let s = compute_separations(&pos).unwrap();
            prop_assert!((s.mean_sep_wl * (pos.len() - 1) as f64 - s.aperture_wl).abs() < 1e-12);
            prop_assert!(s.min_sep_wl <= s.mean_sep_wl + 1e-15);
        }

        #[test]
        fn sweep_peak_is_zero_db(
            re in proptest::collection::vec(-1.0f64..1.0, 6),
            im in proptest::collection::vec(-1.0f64..1.0, 6),
        ) {
            let flat: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
            let w = WeightVector::from_flat(&flat).unwrap();
            let sweep = sweep_pattern(&w, &[0.0, 0.45], &pol(), 1.0).unwrap();
            let max = sweep.points.iter().map(|p| p.magnitude_db).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(max == 0.0 || max == DB_FLOOR);
        }

        #[test]
        fn shrinking_regions_never_raises_psl(lo in 5.0f64..40.0, extra in 0.0f64..30.0) {
            let w = WeightVector::new(vec![
                [Complex64::new(1.0, 0.0); 3],
                [Complex64::new(0.5, 0.2); 3],
                [Complex64::new(-0.3, 0.1); 3],
            ]);
            let sweep = sweep_pattern(&w, &[0.0, 0.6, 1.3], &pol(), 1.0).unwrap();
            let wide = [
                SidelobeRegion::new(Side::Positive, lo, 90.0).unwrap(),
                SidelobeRegion::new(Side::Negative, lo, 90.0).unwrap(),
            ];
            let narrow = [SidelobeRegion::new(Side::Positive, lo + extra, 90.0).unwrap()];
            prop_assert!(compute_psl(&sweep, &narrow).unwrap() <= compute_psl(&sweep, &wide).unwrap());
        }

        #[test]
        fn beam_exclusion_never_raises_psl(
            re in proptest::collection::vec(-1.0f64..1.0, 9),
            lo in 5.0f64..40.0,
        ) {
            let flat: Vec<Complex64> = re.iter().map(|v| Complex64::new(*v, 0.3 * v)).collect();
            let w = WeightVector::from_flat(&flat).unwrap();
            let sweep = sweep_pattern(&w, &[0.0, 0.55, 1.4], &pol(), 0.5).unwrap();
            let regions = [
                SidelobeRegion::new(Side::Positive, lo, 90.0).unwrap(),
                SidelobeRegion::new(Side::Negative, lo, 90.0).unwrap(),
            ];
            if let Some(peak) = peak_sidelobe_outside_beam(&sweep, &regions) {
                prop_assert!(peak <= compute_psl(&sweep, &regions).unwrap());
            }
        }
    }
}
