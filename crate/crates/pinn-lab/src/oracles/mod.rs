//! Ground-truth reference solutions and conserved-quantity checks,
//! independent of the network evaluation path.

mod allen_cahn;
mod rk4;
mod snapshots;

pub use allen_cahn::allen_cahn_reference;
pub use rk4::{rk4_integrate, rk4_step};
pub use snapshots::{load_field_snapshots, save_field_snapshots, FieldRecord};

use num_traits::Float;

use crate::error::{Error, Result};
use crate::systems::{PENDULUM_G, PENDULUM_L};

/// How a reference solution was generated.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorMetadata {
    pub method: String,
    pub dt: f64,
    pub dx: Option<f64>,
}

/// Solution values on a time grid (and an optional space grid).
///
/// For ODE systems `values` holds `dim` state components per time node,
/// row-major. For the Allen-Cahn reference `dim` equals the spatial grid
/// size and `space` carries the node coordinates.
#[derive(Clone, Debug)]
pub struct ReferenceSolution {
    pub times: Vec<f64>,
    pub space: Option<Vec<f64>>,
    pub values: Vec<f64>,
    pub dim: usize,
    pub column_names: Vec<String>,
    pub metadata: GeneratorMetadata,
}

impl ReferenceSolution {
    pub fn validate(&self) -> Result<()> {
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("time grid is not strictly increasing".into()));
        }
        if let Some(space) = &self.space {
            if space.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("space grid is not strictly increasing".into()));
            }
        }
        if self.values.len() != self.times.len() * self.dim {
            return Err(Error::Config(format!(
                "value array has {} entries, expected {} x {}",
                self.values.len(),
                self.times.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// State at time node `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Piecewise-linear sample of component `col` at time `t` (clamped to
    /// the grid ends).
    pub fn sample_linear(&self, t: f64, col: usize) -> f64 {
        let times = &self.times;
        if t <= times[0] {
            return self.row(0)[col];
        }
        if t >= *times.last().unwrap() {
            return self.row(times.len() - 1)[col];
        }
        let hi = times.partition_point(|&x| x < t).max(1);
        let (t0, t1) = (times[hi - 1], times[hi]);
        let w = (t - t0) / (t1 - t0);
        let (a, b) = (self.row(hi - 1)[col], self.row(hi)[col]);
        a + w * (b - a)
    }

    /// Export as CSV: `t[,x],value...`, one row per grid node.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.space {
            None => {
                out.push('t');
                for name in &self.column_names {
                    out.push(',');
                    out.push_str(name);
                }
                out.push('\n');
                for (i, &t) in self.times.iter().enumerate() {
                    out.push_str(&format!("{t}"));
                    for v in self.row(i) {
                        out.push_str(&format!(",{v}"));
                    }
                    out.push('\n');
                }
            }
            Some(space) => {
                out.push_str("t,x");
                for name in &self.column_names {
                    out.push(',');
                    out.push_str(name);
                }
                out.push('\n');
                for (i, &t) in self.times.iter().enumerate() {
                    let row = self.row(i);
                    for (j, &x) in space.iter().enumerate() {
                        out.push_str(&format!("{t},{x},{}\n", row[j]));
                    }
                }
            }
        }
        out
    }
}

/// Closed-form solution of ẏ = y(1 − y²) for |y0| ≤ 1:
/// ±(1 + (1/y0² − 1)e^(−2t))^(−1/2) with the sign of y0, 0 for y0 = 0.
pub fn toy_analytic<T: Float>(y0: T, t: T) -> std::result::Result<T, Error> {
    if y0.abs() > T::one() {
        return Err(Error::Domain(format!(
            "toy analytic solution covers |y0| <= 1, got {}",
            y0.to_f64().unwrap_or(f64::NAN)
        )));
    }
    if y0 == T::zero() {
        return Ok(T::zero());
    }
    let one = T::one();
    let coeff = one / (y0 * y0) - one;
    let mag = (one + coeff * (-(t + t)).exp()).sqrt().recip();
    Ok(mag * y0.signum())
}

/// Pendulum energy E = ẏ²/2 − (g/l)·cos y for the unit rod in standard
/// gravity; conserved along true trajectories, separatrix at E = g/l.
pub fn pendulum_energy<T: Float>(y: T, ydot: T) -> T {
    let g_over_l = T::from(PENDULUM_G / PENDULUM_L).unwrap();
    ydot * ydot / (T::one() + T::one()) - g_over_l * y.cos()
}

/// Right-hand side of the pendulum as a first-order system (y, ẏ).
pub fn pendulum_rhs(_t: f64, state: &[f64], out: &mut [f64]) {
    out[0] = state[1];
    out[1] = -(PENDULUM_G / PENDULUM_L) * state[0].sin();
}

/// RK4 reference trajectory for the pendulum released at rest.
pub fn pendulum_reference(y0_rad: f64, t_max: f64, dt: f64) -> Result<ReferenceSolution> {
    let mut sol = rk4_integrate(pendulum_rhs, &[y0_rad, 0.0], t_max, dt)?;
    sol.column_names = vec!["y".into(), "ydot".into()];
    Ok(sol)
}

/// Analytic toy trajectory sampled on `n` equispaced times.
pub fn toy_reference(y0: f64, t_max: f64, n: usize) -> Result<ReferenceSolution> {
    let times: Vec<f64> = (0..n)
        .map(|i| t_max * i as f64 / (n - 1) as f64)
        .collect();
    let mut values = Vec::with_capacity(n);
    for &t in &times {
        values.push(toy_analytic(y0, t)?);
    }
    Ok(ReferenceSolution {
        times,
        space: None,
        values,
        dim: 1,
        column_names: vec!["y".into()],
        metadata: GeneratorMetadata {
            method: "analytic".into(),
            dt: 0.0,
            dx: None,
        },
    })
}

/// First time at which the pendulum trajectory returns to ẏ = 0 with y > 0,
/// located by linear interpolation between grid nodes. For a release from
/// rest at y0 > 0 this is one full period.
pub fn pendulum_first_return(sol: &ReferenceSolution) -> Option<f64> {
    for i in 1..sol.times.len() {
        let (v0, v1) = (sol.row(i - 1)[1], sol.row(i)[1]);
        if v0 != 0.0 && (v0 > 0.0) != (v1 > 0.0) {
            let w = v0 / (v0 - v1);
            let y_cross = sol.row(i - 1)[0] + w * (sol.row(i)[0] - sol.row(i - 1)[0]);
            if y_cross > 0.0 {
                return Some(sol.times[i - 1] + w * (sol.times[i] - sol.times[i - 1]));
            }
        }
    }
    None
}
