//! Seeded random problems for benchmarks and regression checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ManufacturingConfig, Ply, Point2, StayOutZone, Tolerance};

/// Shape of the random problems.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub min_plies: usize,
    pub max_plies: usize,
    pub min_zones: usize,
    pub max_zones: usize,
    /// Side length range of the square stay-out zones.
    pub zone_side: (f64, f64),
    /// Fiber angles to draw from, in radians.
    pub angles: Vec<f64>,
    pub config: ManufacturingConfig,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        let mut config = ManufacturingConfig::new(0.2, 0.01, 0.1);
        // One bundle holding every ply.
        config.tolerance = Tolerance::Explicit {
            plies: 3,
            max_overlaps: 1,
        };
        config.base_overlaps = 1;
        Self {
            min_plies: 1,
            max_plies: 3,
            min_zones: 1,
            max_zones: 20,
            zone_side: (0.02, 0.06),
            angles: vec![0.0, 45.0 * deg, 90.0 * deg, 135.0 * deg],
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProblem {
    pub plies: Vec<Ply>,
    pub zones: Vec<StayOutZone>,
    pub config: ManufacturingConfig,
}

/// Convex polygon with `k` vertices near an ellipse of semi-axes `(a, b)`
/// centred at `c` and turned by `tilt`.
pub fn ellipse_polygon(c: Point2, a: f64, b: f64, tilt: f64, k: usize, jitter: &[f64]) -> Vec<Point2> {
    let step = std::f64::consts::TAU / k as f64;
    let (s, co) = tilt.sin_cos();
    (0..k)
        .map(|i| {
            let phi = step * (i as f64 + jitter.get(i).copied().unwrap_or(0.0));
            let (x, y) = (a * phi.cos(), b * phi.sin());
            Point2::new(c.x + co * x - s * y, c.y + s * x + co * y)
        })
        .collect()
}

/// A random problem: convex plies around the unit square's centre and
/// square stay-out zones scattered over it. Same seed, same problem.
pub fn synthetic_problem(seed: u64, params: &SyntheticParams) -> SyntheticProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_plies = rng.gen_range(params.min_plies..=params.max_plies);
    let centre = Point2::new(0.5, 0.5);
    let plies = (0..n_plies)
        .map(|i| {
            let k = rng.gen_range(5..=10);
            let jitter: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.3..0.3)).collect();
            let a = rng.gen_range(0.3..0.5);
            let b = rng.gen_range(0.3..0.5);
            let tilt = rng.gen_range(0.0..std::f64::consts::PI);
            let angle = params.angles[rng.gen_range(0..params.angles.len())];
            let poly = ellipse_polygon(centre, a, b, tilt, k, &jitter);
            Ply::new(format!("ply{i}"), i as u32, poly, angle).expect("ellipse polygons are simple")
        })
        .collect();
    let n_zones = rng.gen_range(params.min_zones..=params.max_zones);
    let zones = (0..n_zones)
        .map(|_| {
            let side = rng.gen_range(params.zone_side.0..=params.zone_side.1);
            let c = Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            StayOutZone::square(c, side).expect("positive side")
        })
        .collect();
    SyntheticProblem {
        plies,
        zones,
        config: params.config,
    }
}
