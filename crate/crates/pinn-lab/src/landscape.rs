//! 2-D physics-loss landscape projection along training-trajectory
//! directions, with horizon restriction and truncation.

use rayon::prelude::*;

use crate::autodiff::Jet;
use crate::error::{Error, Result};
use crate::network::{
    BatchCache, BatchKernel, DerivativeBundle, NetworkSpec, OutputTransform, ParameterVector,
};
use crate::systems::System;
use crate::training::sampler::{rng_for, sample_collocation, stream};

/// Orthonormalized plot directions from three checkpoints.
#[derive(Clone, Debug)]
pub struct Directions {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    /// Norms of the raw displacements θ_mid − θ0 and the d1-orthogonal part
    /// of θ_final − θ0, before normalization.
    pub norm1: f64,
    pub norm2: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Gram-Schmidt on the displacements θ_mid − θ0 and θ_final − θ0.
pub fn build_directions(
    theta0: &ParameterVector,
    theta_mid: &ParameterVector,
    theta_final: &ParameterVector,
) -> Result<Directions> {
    if theta0.len() != theta_mid.len() || theta0.len() != theta_final.len() {
        return Err(Error::Config("checkpoints differ in length".into()));
    }
    let v1: Vec<f64> = theta_mid
        .as_slice()
        .iter()
        .zip(theta0.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let n1 = norm(&v1);
    if n1 == 0.0 {
        return Err(Error::DegenerateDirections(
            "θ_mid equals θ0; no first direction".into(),
        ));
    }
    let d1: Vec<f64> = v1.iter().map(|v| v / n1).collect();

    let v2: Vec<f64> = theta_final
        .as_slice()
        .iter()
        .zip(theta0.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let proj = dot(&v2, &d1);
    let mut r2: Vec<f64> = v2.iter().zip(&d1).map(|(v, d)| v - proj * d).collect();
    let n2 = norm(&r2);
    if n2 <= 1e-12 * norm(&v2).max(1.0) {
        return Err(Error::DegenerateDirections(
            "θ_final − θ0 is collinear with θ_mid − θ0".into(),
        ));
    }
    for v in r2.iter_mut() {
        *v /= n2;
    }
    Ok(Directions {
        d1,
        d2: r2,
        norm1: n1,
        norm2: n2,
    })
}

/// Settings for one grid evaluation.
#[derive(Clone, Debug)]
pub struct GridSettings {
    /// ((s1_min, s1_max), (s2_min, s2_max)); defaults to the bounding box
    /// of the projected checkpoints with a 25% margin.
    pub extents: Option<((f64, f64), (f64, f64))>,
    pub resolution: (usize, usize),
    pub n_collocation: usize,
    pub seed: u64,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            extents: None,
            resolution: (41, 41),
            n_collocation: 1024,
            seed: 0,
        }
    }
}

/// Physics-loss values over a 2-D parameter slice at one horizon T.
#[derive(Clone, Debug)]
pub struct LandscapeGrid {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    /// Row-major `[s1_index][s2_index]`.
    pub values: Vec<f64>,
    /// Untruncated values, kept when a truncation was applied.
    pub raw_values: Option<Vec<f64>>,
    pub truncation: Option<f64>,
    pub t_horizon: f64,
    pub seed: u64,
    pub n_collocation: usize,
    pub direction_norms: (f64, f64),
    /// Projected (s1, s2) of θ_mid and θ_final.
    pub mid_coords: (f64, f64),
    pub final_coords: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellShape {
    StrictLocalMin,
    SaddleOrSlope,
}

impl LandscapeGrid {
    pub fn resolution(&self) -> (usize, usize) {
        (self.s1.len(), self.s2.len())
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.s2.len() + j]
    }

    /// Grid cell whose coordinates are closest to (s1, s2).
    pub fn nearest_cell(&self, s1: f64, s2: f64) -> (usize, usize) {
        let pick = |grid: &[f64], x: f64| {
            grid.iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    (*a - x).abs().partial_cmp(&(*b - x).abs()).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap()
        };
        (pick(&self.s1, s1), pick(&self.s2, s2))
    }

    /// Index of the minimal cell.
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_v = f64::INFINITY;
        for i in 0..self.s1.len() {
            for j in 0..self.s2.len() {
                if self.value(i, j) < best_v {
                    best_v = self.value(i, j);
                    best = (i, j);
                }
            }
        }
        best
    }

    /// Strict local minimum iff the cell undercuts all 8 neighbors;
    /// boundary cells are out of domain.
    pub fn local_min_test(&self, cell: (usize, usize)) -> Result<CellShape> {
        let (i, j) = cell;
        let (n1, n2) = self.resolution();
        if i == 0 || j == 0 || i + 1 >= n1 || j + 1 >= n2 {
            return Err(Error::Domain(format!(
                "cell ({i}, {j}) is on the grid boundary"
            )));
        }
        let v = self.value(i, j);
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let nb = self.value((i as i64 + di) as usize, (j as i64 + dj) as usize);
                if v >= nb {
                    return Ok(CellShape::SaddleOrSlope);
                }
            }
        }
        Ok(CellShape::StrictLocalMin)
    }

    /// Clamp values above `threshold`, keeping the original matrix.
    pub fn truncate(&self, threshold: f64) -> Result<LandscapeGrid> {
        if threshold <= 0.0 {
            return Err(Error::Config("truncation threshold must be positive".into()));
        }
        let raw = self
            .raw_values
            .clone()
            .unwrap_or_else(|| self.values.clone());
        let values = raw.iter().map(|&v| v.min(threshold)).collect();
        Ok(LandscapeGrid {
            values,
            raw_values: Some(raw),
            truncation: Some(threshold),
            ..self.clone()
        })
    }

    /// CSV export: `s1,s2,Lf` per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s1,s2,Lf\n");
        for (i, &a) in self.s1.iter().enumerate() {
            for (j, &b) in self.s2.iter().enumerate() {
                out.push_str(&format!("{a},{b},{}\n", self.value(i, j)));
            }
        }
        out
    }

    pub fn metadata_json(&self, log_scale: bool) -> serde_json::Value {
        serde_json::json!({
            "t_horizon": self.t_horizon,
            "seed": self.seed,
            "n_collocation": self.n_collocation,
            "direction_norms": [self.direction_norms.0, self.direction_norms.1],
            "mid_coords": [self.mid_coords.0, self.mid_coords.1],
            "final_coords": [self.final_coords.0, self.final_coords.1],
            "truncation": self.truncation,
            "resolution": [self.s1.len(), self.s2.len()],
            "extents": [[self.s1[0], *self.s1.last().unwrap()],
                         [self.s2[0], *self.s2.last().unwrap()]],
            "log_scale": log_scale,
        })
    }
}

/// Physics loss of the head values cached in `cache`.
fn physics_value(
    system: &System,
    kernel: &BatchKernel,
    cache: &BatchCache,
    points: &[f64],
    axes: usize,
    order: u8,
) -> f64 {
    let npts = cache.npts();
    let mut acc = 0.0;
    for n in 0..npts {
        let mut jets = Vec::with_capacity(kernel.outputs());
        for o in 0..kernel.outputs() {
            let mut jet = Jet::constant(axes, order, kernel.head_value(cache, o, 0, n));
            if order >= 1 {
                for ax in 0..axes {
                    jet.set_d1(ax, kernel.head_value(cache, o, kernel.d1_channel(ax), n));
                }
            }
            if order >= 2 {
                for i in 0..axes {
                    for j in i..axes {
                        jet.set_d2(i, j, kernel.head_value(cache, o, kernel.d2_channel(i, j), n));
                    }
                }
            }
            jets.push(jet);
        }
        let point = points[n * axes..(n + 1) * axes].to_vec();
        let bundle = DerivativeBundle::new(point, jets);
        match system.residuals(&bundle) {
            Ok(rs) => {
                for r in rs {
                    acc += r * r;
                }
            }
            Err(_) => return f64::INFINITY,
        }
    }
    acc / npts as f64
}

/// Evaluate the physics loss over the slice θ0 + s1·d1 + s2·d2 on one
/// collocation sample drawn from `[0, T] × Ω`; the same sample is used for
/// every cell.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_grid(
    system: &System,
    spec: &NetworkSpec,
    transform: OutputTransform,
    theta0: &ParameterVector,
    dirs: &Directions,
    theta_mid: &ParameterVector,
    theta_final: &ParameterVector,
    t_horizon: f64,
    settings: &GridSettings,
) -> Result<LandscapeGrid> {
    let system_t = system.with_time_horizon(t_horizon);
    system_t.validate()?;
    let project = |theta: &ParameterVector| -> (f64, f64) {
        let diff: Vec<f64> = theta
            .as_slice()
            .iter()
            .zip(theta0.as_slice())
            .map(|(a, b)| a - b)
            .collect();
        (dot(&diff, &dirs.d1), dot(&diff, &dirs.d2))
    };
    let mid = project(theta_mid);
    let fin = project(theta_final);

    let ((a1, b1), (a2, b2)) = settings.extents.unwrap_or_else(|| {
        let lo1 = 0f64.min(mid.0).min(fin.0);
        let hi1 = 0f64.max(mid.0).max(fin.0);
        let lo2 = 0f64.min(mid.1).min(fin.1);
        let hi2 = 0f64.max(mid.1).max(fin.1);
        let m1 = 0.25 * (hi1 - lo1).max(1e-6);
        let m2 = 0.25 * (hi2 - lo2).max(1e-6);
        ((lo1 - m1, hi1 + m1), (lo2 - m2, hi2 + m2))
    });
    for (x, lo, hi) in [
        (mid.0, a1, b1),
        (fin.0, a1, b1),
        (mid.1, a2, b2),
        (fin.1, a2, b2),
    ] {
        if x < lo || x > hi {
            return Err(Error::Config(
                "grid extents do not contain the projected checkpoints".into(),
            ));
        }
    }

    let (n1, n2) = settings.resolution;
    if n1 < 1 || n2 < 1 {
        return Err(Error::Config("grid resolution must be at least 1x1".into()));
    }
    let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        if n == 1 {
            vec![lo]
        } else {
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect()
        }
    };
    let s1 = axis(a1, b1, n1);
    let s2 = axis(a2, b2, n2);

    // one shared collocation sample per horizon
    let mut rng = rng_for(settings.seed, stream::LANDSCAPE);
    let points = sample_collocation(
        &system_t.collocation_bounds(),
        settings.n_collocation,
        &mut rng,
    );
    let axes = system_t.input_axes();
    let order = system_t.derivative_order();
    let kernel = BatchKernel::new(spec, order, transform)?;

    let mut values = vec![0.0f64; n1 * n2];
    let cells: Vec<usize> = (0..n1 * n2).collect();
    let results: Vec<f64> = cells
        .par_iter()
        .map(|&cell| {
            let (i, j) = (cell / n2, cell % n2);
            let mut theta = theta0.as_slice().to_vec();
            for ((t, d1), d2) in theta.iter_mut().zip(&dirs.d1).zip(&dirs.d2) {
                *t += s1[i] * d1 + s2[j] * d2;
            }
            let mut cache = BatchCache::default();
            kernel.forward(&theta, &points, &mut cache);
            let v = physics_value(&system_t, &kernel, &cache, &points, axes, order);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        })
        .collect();
    values.copy_from_slice(&results);

    Ok(LandscapeGrid {
        s1,
        s2,
        values,
        raw_values: None,
        truncation: None,
        t_horizon,
        seed: settings.seed,
        n_collocation: settings.n_collocation,
        direction_norms: (dirs.norm1, dirs.norm2),
        mid_coords: mid,
        final_coords: fin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Activation, Initializer};

    fn params_from(dims: Vec<usize>, f: impl Fn(usize) -> f64) -> ParameterVector {
        let mut p = ParameterVector::zeros(dims);
        for (i, v) in p.as_mut_slice().iter_mut().enumerate() {
            *v = f(i);
        }
        p
    }

    #[test]
    fn axis_aligned_gram_schmidt() {
        let dims = vec![1, 2, 1];
        let theta0 = ParameterVector::zeros(dims.clone());
        let mid = params_from(dims.clone(), |i| if i == 0 { 5.0 } else { 0.0 });
        let fin = params_from(dims.clone(), |i| match i {
            0 => 2.0,
            1 => 2.0,
            _ => 0.0,
        });
        let d = build_directions(&theta0, &mid, &fin).unwrap();
        assert_eq!(d.d1[0], 1.0);
        assert!(d.d1[1..].iter().all(|&v| v == 0.0));
        assert_eq!(d.d2[1], 1.0);
        assert_eq!(d.norm1, 5.0);
        assert_eq!(d.norm2, 2.0);
        assert!(dot(&d.d1, &d.d2).abs() <= 1e-12);
    }

    #[test]
    fn random_checkpoints_span_their_displacements() {
        let dims = vec![1, 8, 1];
        let theta0 = params_from(dims.clone(), |i| (i as f64 * 0.41).sin());
        let mid = params_from(dims.clone(), |i| (i as f64 * 0.73).cos());
        let fin = params_from(dims.clone(), |i| (i as f64 * 1.11).sin() * 0.5 + 0.1);
        let d = build_directions(&theta0, &mid, &fin).unwrap();
        assert!(dot(&d.d1, &d.d2).abs() <= 1e-12);
        assert!((norm(&d.d1) - 1.0).abs() <= 1e-12);
        assert!((norm(&d.d2) - 1.0).abs() <= 1e-12);
        // both displacements reconstruct from their projections
        for target in [&mid, &fin] {
            let diff: Vec<f64> = target
                .as_slice()
                .iter()
                .zip(theta0.as_slice())
                .map(|(a, b)| a - b)
                .collect();
            let c1 = dot(&diff, &d.d1);
            let c2 = dot(&diff, &d.d2);
            let mut res = 0.0;
            for k in 0..diff.len() {
                let r = diff[k] - c1 * d.d1[k] - c2 * d.d2[k];
                res += r * r;
            }
            assert!(res.sqrt() <= 1e-10, "residual {res}");
        }
    }

    #[test]
    fn collinear_checkpoints_are_degenerate() {
        let dims = vec![1, 2, 1];
        let theta0 = ParameterVector::zeros(dims.clone());
        let mid = params_from(dims.clone(), |i| if i == 0 { 5.0 } else { 0.0 });
        let fin = params_from(dims.clone(), |i| if i == 0 { 2.0 } else { 0.0 });
        assert!(matches!(
            build_directions(&theta0, &mid, &fin),
            Err(Error::DegenerateDirections(_))
        ));
        assert!(matches!(
            build_directions(&theta0, &theta0, &fin),
            Err(Error::DegenerateDirections(_))
        ));
    }

    fn toy_grid_fixture() -> (System, NetworkSpec, ParameterVector, ParameterVector, ParameterVector)
    {
        let system = System::toy(0.5, 2.5);
        let spec = NetworkSpec {
            input_width: 1,
            hidden_layers: vec![6, 6],
            output_width: 1,
            activation: Activation::Tanh,
            initializer: Initializer::GlorotUniform,
            seed: 3,
        };
        let theta0 = crate::network::init_params(&spec).unwrap();
        let mut mid = theta0.clone();
        for (i, v) in mid.as_mut_slice().iter_mut().enumerate() {
            *v += 0.01 * ((i * 7 % 5) as f64 - 2.0);
        }
        let mut fin = theta0.clone();
        for (i, v) in fin.as_mut_slice().iter_mut().enumerate() {
            *v += 0.02 * ((i * 3 % 7) as f64 - 3.0);
        }
        (system, spec, theta0, mid, fin)
    }

    #[test]
    fn single_cell_grid_is_loss_at_anchor() {
        let (system, spec, theta0, mid, fin) = toy_grid_fixture();
        let dirs = build_directions(&theta0, &mid, &fin).unwrap();
        let settings = GridSettings {
            extents: Some(((0.0, 0.0), (0.0, 0.0))),
            resolution: (1, 1),
            n_collocation: 64,
            seed: 9,
        };
        // a 1x1 grid at the origin cannot contain the projected
        // checkpoints, so extents validation must reject it unless we drop
        // the checkpoints onto the origin too.
        let err = evaluate_grid(
            &system,
            &spec,
            OutputTransform::Identity,
            &theta0,
            &dirs,
            &mid,
            &fin,
            2.5,
            &settings,
        );
        assert!(err.is_err());

        let grid = evaluate_grid(
            &system,
            &spec,
            OutputTransform::Identity,
            &theta0,
            &dirs,
            &theta0,
            &theta0,
            2.5,
            &GridSettings {
                extents: Some(((0.0, 0.0), (0.0, 0.0))),
                resolution: (1, 1),
                n_collocation: 64,
                seed: 9,
            },
        )
        .unwrap();
        assert_eq!(grid.values.len(), 1);
        assert!(grid.value(0, 0) > 0.0);
    }

    #[test]
    fn grid_is_deterministic_and_truncation_preserves_raw() {
        let (system, spec, theta0, mid, fin) = toy_grid_fixture();
        let dirs = build_directions(&theta0, &mid, &fin).unwrap();
        let settings = GridSettings {
            resolution: (7, 7),
            n_collocation: 32,
            seed: 4,
            extents: None,
        };
        let run = || {
            evaluate_grid(
                &system,
                &spec,
                OutputTransform::Identity,
                &theta0,
                &dirs,
                &mid,
                &fin,
                2.5,
                &settings,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(x.to_bits(), y.to_bits());
        }

        let max = a.values.iter().cloned().fold(0.0f64, f64::max);
        let thr = max / 2.0;
        let t = a.truncate(thr).unwrap();
        assert!(t.values.iter().all(|&v| v <= thr));
        assert_eq!(t.raw_values.as_ref().unwrap(), &a.values);
        assert_eq!(t.truncation, Some(thr));

        let csv = t.to_csv();
        assert!(csv.starts_with("s1,s2,Lf\n"));
        assert_eq!(csv.lines().count(), 1 + 49);
        let meta = t.metadata_json(false);
        assert_eq!(meta["resolution"][0], 7);
    }

    #[test]
    fn synthetic_dip_is_strict_local_min() {
        let mk = |values: Vec<f64>| LandscapeGrid {
            s1: vec![0.0, 1.0, 2.0],
            s2: vec![0.0, 1.0, 2.0],
            values,
            raw_values: None,
            truncation: None,
            t_horizon: 1.0,
            seed: 0,
            n_collocation: 1,
            direction_norms: (1.0, 1.0),
            mid_coords: (0.0, 0.0),
            final_coords: (0.0, 0.0),
        };
        let constant = mk(vec![1.0; 9]);
        assert_eq!(
            constant.local_min_test((1, 1)).unwrap(),
            CellShape::SaddleOrSlope
        );
        let mut dip = vec![1.0; 9];
        dip[4] = 0.1;
        let dipped = mk(dip);
        assert_eq!(
            dipped.local_min_test((1, 1)).unwrap(),
            CellShape::StrictLocalMin
        );
        assert!(matches!(
            dipped.local_min_test((0, 1)),
            Err(Error::Domain(_))
        ));
        assert_eq!(dipped.argmin(), (1, 1));
        assert_eq!(dipped.nearest_cell(0.9, 1.2), (1, 1));
    }

    #[test]
    fn fixed_point_cell_has_zero_loss() {
        // a constant network at a fixed-point value placed at a grid
        // coordinate gives that cell the exact value 0
        let (system, spec, _, _, _) = toy_grid_fixture();
        let zero = ParameterVector::zeros(spec.dims());
        let mut bias_one = zero.clone();
        let br = bias_one.bias_range(2);
        bias_one.as_mut_slice()[br].copy_from_slice(&[1.0]); // y* = 1
        let mut other = zero.clone();
        other.as_mut_slice()[0] = 1.0;
        let dirs = build_directions(&zero, &bias_one, &other).unwrap();
        let grid = evaluate_grid(
            &system,
            &spec,
            OutputTransform::Identity,
            &zero,
            &dirs,
            &bias_one,
            &other,
            2.5,
            &GridSettings {
                resolution: (3, 3),
                n_collocation: 16,
                seed: 1,
                extents: Some(((0.0, 1.0), (0.0, 1.0))),
            },
        )
        .unwrap();
        // cell at (s1 = 1, s2 = 0) is exactly the bias-one network
        let cell = grid.nearest_cell(1.0, 0.0);
        assert_eq!(grid.value(cell.0, cell.1), 0.0);
    }
}
