//! The four dynamical systems: residual operators, domains, initial and
//! boundary conditions, and their registered fixed points.

use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::network::{DerivativeBundle, AXIS_T, AXIS_X, AXIS_Y};

/// Asymptotic character of a fixed point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Stable,
    AsymptoticallyStable,
    Unstable,
}

/// The state a fixed point pins the solution to.
#[derive(Clone, Debug, PartialEq)]
pub enum FixedField {
    /// One constant per network output (u* for scalar systems, (u, v, p)
    /// for flow).
    Constant(Vec<f64>),
    /// The piecewise-constant Allen-Cahn field: 0 on [-0.5, 0.5], -1 on the
    /// rest of [-1, 1].
    AcPiecewise,
}

/// A registered root of the differential operator together with its
/// hand-assigned stability label.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub field: FixedField,
    pub stability: Stability,
}

impl FixedPoint {
    fn constant(values: &[f64], stability: Stability) -> Self {
        Self {
            field: FixedField::Constant(values.to_vec()),
            stability,
        }
    }
}

/// Default pendulum parameters: unit rod in standard gravity.
pub const PENDULUM_G: f64 = 9.81;
pub const PENDULUM_L: f64 = 1.0;
/// Allen-Cahn diffusion and reaction coefficients.
pub const AC_GAMMA1: f64 = 1e-4;
pub const AC_GAMMA2: f64 = 5.0;

/// One dynamical system: governing residual(s), domain, IC/BC and fixed
/// points. Angles are radians internally; degrees only exist at the
/// configuration boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum System {
    /// ÿ = −(g/l)·sin y on t ∈ [0, T], y(0) = y0, ẏ(0) = 0.
    Pendulum {
        #[serde(rename = "y0_deg")]
        y0_deg: f64,
        t_max: f64,
        #[serde(default = "default_g")]
        g: f64,
        #[serde(default = "default_l")]
        l: f64,
    },
    /// ẏ = y(1 − y²) on t ∈ [0, T], y(0) = y0.
    Toy { y0: f64, t_max: f64 },
    /// u_t = γ1·u_xx + γ2(u − u³) on [0, T] × [−1, 1], u(0, x) = x²cos(πx),
    /// periodic in x.
    AllenCahn {
        #[serde(default = "default_t1")]
        t_max: f64,
        #[serde(default = "default_gamma1")]
        gamma1: f64,
        #[serde(default = "default_gamma2")]
        gamma2: f64,
    },
    /// Incompressible 2-D momentum residuals at Reynolds number `re` on a
    /// rectangular domain; the network head carries (u, v, p) directly.
    NavierStokes {
        re: f64,
        t_max: f64,
        x_bounds: (f64, f64),
        y_bounds: (f64, f64),
    },
}

fn default_g() -> f64 {
    PENDULUM_G
}
fn default_l() -> f64 {
    PENDULUM_L
}
fn default_t1() -> f64 {
    1.0
}
fn default_gamma1() -> f64 {
    AC_GAMMA1
}
fn default_gamma2() -> f64 {
    AC_GAMMA2
}

impl System {
    pub fn pendulum(y0_deg: f64, t_max: f64) -> Self {
        System::Pendulum {
            y0_deg,
            t_max,
            g: PENDULUM_G,
            l: PENDULUM_L,
        }
    }

    pub fn toy(y0: f64, t_max: f64) -> Self {
        System::Toy { y0, t_max }
    }

    pub fn allen_cahn() -> Self {
        System::AllenCahn {
            t_max: 1.0,
            gamma1: AC_GAMMA1,
            gamma2: AC_GAMMA2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            System::Pendulum { .. } => "pendulum",
            System::Toy { .. } => "toy",
            System::AllenCahn { .. } => "allen-cahn",
            System::NavierStokes { .. } => "navier-stokes",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_horizon() <= 0.0 {
            return Err(Error::Config("time horizon must be positive".into()));
        }
        for &(lo, hi) in self.spatial_bounds() {
            if lo >= hi {
                return Err(Error::Config(format!(
                    "spatial bounds ({lo}, {hi}) are not well-ordered"
                )));
            }
        }
        if let System::NavierStokes { re, .. } = self {
            if *re <= 0.0 {
                return Err(Error::Config("Reynolds number must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn time_horizon(&self) -> f64 {
        match self {
            System::Pendulum { t_max, .. }
            | System::Toy { t_max, .. }
            | System::AllenCahn { t_max, .. }
            | System::NavierStokes { t_max, .. } => *t_max,
        }
    }

    /// A copy of this system with a different initial value, in native
    /// units (degrees for the pendulum).
    pub fn with_initial(&self, y0: f64) -> Result<Self> {
        let mut s = self.clone();
        match &mut s {
            System::Pendulum { y0_deg, .. } => *y0_deg = y0,
            System::Toy { y0: v, .. } => *v = y0,
            _ => {
                return Err(Error::Config(format!(
                    "{} has a fixed initial condition",
                    self.name()
                )))
            }
        }
        Ok(s)
    }

    /// A copy of this system with a different time horizon (landscape
    /// truncation sweeps shrink T).
    pub fn with_time_horizon(&self, t_max: f64) -> Self {
        let mut s = self.clone();
        match &mut s {
            System::Pendulum { t_max: t, .. }
            | System::Toy { t_max: t, .. }
            | System::AllenCahn { t_max: t, .. }
            | System::NavierStokes { t_max: t, .. } => *t = t_max,
        }
        s
    }

    pub fn spatial_bounds(&self) -> &[(f64, f64)] {
        match self {
            System::Pendulum { .. } | System::Toy { .. } => &[],
            System::AllenCahn { .. } => &[(-1.0, 1.0)],
            System::NavierStokes { .. } => {
                // bounds returned via collocation_bounds; slices need stable
                // storage, so expose through that method instead.
                &[]
            }
        }
    }

    /// (t, spatial...) box the collocation sampler draws from.
    pub fn collocation_bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(0.0, self.time_horizon())];
        match self {
            System::Pendulum { .. } | System::Toy { .. } => {}
            System::AllenCahn { .. } => b.push((-1.0, 1.0)),
            System::NavierStokes {
                x_bounds, y_bounds, ..
            } => {
                b.push(*x_bounds);
                b.push(*y_bounds);
            }
        }
        b
    }

    /// Number of network input axes (t plus space).
    pub fn input_axes(&self) -> usize {
        self.collocation_bounds().len()
    }

    /// Number of network output components the training head carries.
    pub fn output_width(&self) -> usize {
        match self {
            System::NavierStokes { .. } => 3,
            _ => 1,
        }
    }

    /// Number of coupled residual equations.
    pub fn residual_arity(&self) -> usize {
        match self {
            System::NavierStokes { .. } => 2,
            _ => 1,
        }
    }

    /// Highest input-derivative order the residual needs.
    pub fn derivative_order(&self) -> u8 {
        match self {
            System::Toy { .. } => 1,
            _ => 2,
        }
    }

    /// Initial state y(0) for the ODE systems, in radians for the pendulum.
    pub fn initial_value(&self) -> Option<f64> {
        match self {
            System::Pendulum { y0_deg, .. } => Some(y0_deg.to_radians()),
            System::Toy { y0, .. } => Some(*y0),
            _ => None,
        }
    }

    /// IC field u0 at a spatial point (PDE systems).
    pub fn ic_value(&self, x: &[f64]) -> f64 {
        match self {
            System::Pendulum { .. } | System::Toy { .. } => self.initial_value().unwrap(),
            System::AllenCahn { .. } => {
                let x = x[0];
                x * x * (std::f64::consts::PI * x).cos()
            }
            System::NavierStokes { .. } => 0.0,
        }
    }

    /// Evaluate the residual equation(s) on one bundle of output values and
    /// input derivatives.
    pub fn residuals<T: Scalar>(&self, bundle: &DerivativeBundle<T>) -> Result<Vec<T>> {
        match self {
            System::Pendulum { g, l, .. } => {
                let y = bundle.value(0);
                let ytt = bundle.d2(0, AXIS_T, AXIS_T)?;
                Ok(vec![ytt + T::from_f64(g / l) * y.sin()])
            }
            System::Toy { .. } => {
                let y = bundle.value(0);
                let yt = bundle.d1(0, AXIS_T)?;
                Ok(vec![yt - y * (T::one() - y * y)])
            }
            System::AllenCahn { gamma1, gamma2, .. } => {
                let u = bundle.value(0);
                let ut = bundle.d1(0, AXIS_T)?;
                let uxx = bundle.d2(0, AXIS_X, AXIS_X)?;
                Ok(vec![
                    ut - T::from_f64(*gamma1) * uxx
                        - T::from_f64(*gamma2) * (u - u * u * u),
                ])
            }
            System::NavierStokes { re, .. } => {
                let inv_re = T::from_f64(1.0 / re);
                let (u, v) = (bundle.value(0), bundle.value(1));
                let p_out = 2;
                let fx = bundle.d1(0, AXIS_T)?
                    + (u * bundle.d1(0, AXIS_X)? + v * bundle.d1(0, AXIS_Y)?)
                    + bundle.d1(p_out, AXIS_X)?
                    - inv_re * (bundle.d2(0, AXIS_X, AXIS_X)? + bundle.d2(0, AXIS_Y, AXIS_Y)?);
                let fy = bundle.d1(1, AXIS_T)?
                    + (u * bundle.d1(1, AXIS_X)? + v * bundle.d1(1, AXIS_Y)?)
                    + bundle.d1(p_out, AXIS_Y)?
                    - inv_re * (bundle.d2(1, AXIS_X, AXIS_X)? + bundle.d2(1, AXIS_Y, AXIS_Y)?);
                Ok(vec![fx, fy])
            }
        }
    }

    /// The hand-registered fixed points of this system.
    pub fn fixed_points(&self) -> Vec<FixedPoint> {
        use Stability::*;
        match self {
            System::Pendulum { .. } => vec![
                FixedPoint::constant(&[0.0], Stable),
                FixedPoint::constant(&[std::f64::consts::PI], Unstable),
            ],
            System::Toy { .. } => vec![
                FixedPoint::constant(&[-1.0], AsymptoticallyStable),
                FixedPoint::constant(&[1.0], AsymptoticallyStable),
                FixedPoint::constant(&[0.0], Unstable),
            ],
            System::AllenCahn { .. } => vec![
                FixedPoint::constant(&[-1.0], AsymptoticallyStable),
                FixedPoint::constant(&[1.0], AsymptoticallyStable),
                FixedPoint::constant(&[0.0], Unstable),
                FixedPoint {
                    field: FixedField::AcPiecewise,
                    stability: Unstable,
                },
            ],
            System::NavierStokes { .. } => vec![
                // quiescent fluid and uniform flow; constant pressure
                FixedPoint::constant(&[0.0, 0.0, 0.0], Stable),
                FixedPoint::constant(&[1.0, 0.0, 0.0], Stable),
            ],
        }
    }
}

/// The piecewise-constant Allen-Cahn fixed field: 0 inside [−0.5, 0.5],
/// −1 on the rest of [−1, 1].
pub fn ac_piecewise_fixed_function(x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [-1, 1]")));
    }
    Ok(if (-0.5..=0.5).contains(&x) { 0.0 } else { -1.0 })
}
