//! In-repo Allen-Cahn reference: method of lines on a periodic grid,
//! second-order central differences in space, RK4 in time.

use crate::error::{Error, Result};
use crate::systems::{AC_GAMMA1, AC_GAMMA2};

use super::{GeneratorMetadata, ReferenceSolution};

/// Solve u_t = γ1·u_xx + γ2(u − u³) on x ∈ [−1, 1) (node x = 1 identified
/// with x = −1) from the IC u(0, x) = x²·cos(πx).
///
/// `nx` grid nodes, explicit RK4 steps of `dt` up to `t_max`. The stability
/// bound dt ≤ 0.5·dx²/γ1 is enforced.
pub fn allen_cahn_reference(nx: usize, dt: f64, t_max: f64) -> Result<ReferenceSolution> {
    if nx < 128 {
        return Err(Error::Config(format!("nx = {nx} below minimum of 128")));
    }
    let dx = 2.0 / nx as f64;
    let bound = 0.5 * dx * dx / AC_GAMMA1;
    if dt > bound {
        return Err(Error::Config(format!(
            "dt = {dt} violates the stability bound {bound:.6} for nx = {nx}"
        )));
    }
    if t_max <= 0.0 || dt <= 0.0 {
        return Err(Error::Config("dt and T must be positive".into()));
    }

    let x: Vec<f64> = (0..nx).map(|i| -1.0 + i as f64 * dx).collect();
    let mut u: Vec<f64> = x
        .iter()
        .map(|&x| x * x * (std::f64::consts::PI * x).cos())
        .collect();

    let inv_dx2 = 1.0 / (dx * dx);
    let rhs = |u: &[f64], out: &mut [f64]| {
        for i in 0..nx {
            let left = u[(i + nx - 1) % nx];
            let right = u[(i + 1) % nx];
            let uxx = (right - 2.0 * u[i] + left) * inv_dx2;
            out[i] = AC_GAMMA1 * uxx + AC_GAMMA2 * (u[i] - u[i] * u[i] * u[i]);
        }
    };

    let n_full = (t_max / dt).floor() as usize;
    let remainder = t_max - n_full as f64 * dt;
    let take_partial = remainder > dt * 1e-12;
    let n_steps = n_full + usize::from(take_partial);

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut values = Vec::with_capacity((n_steps + 1) * nx);
    times.push(0.0);
    values.extend_from_slice(&u);

    let mut k1 = vec![0.0; nx];
    let mut k2 = vec![0.0; nx];
    let mut k3 = vec![0.0; nx];
    let mut k4 = vec![0.0; nx];
    let mut tmp = vec![0.0; nx];

    for step in 0..n_steps {
        let h = if step < n_full { dt } else { remainder };
        rhs(&u, &mut k1);
        for i in 0..nx {
            tmp[i] = u[i] + 0.5 * h * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..nx {
            tmp[i] = u[i] + 0.5 * h * k2[i];
        }
        rhs(&tmp, &mut k3);
        for i in 0..nx {
            tmp[i] = u[i] + h * k3[i];
        }
        rhs(&tmp, &mut k4);
        for i in 0..nx {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step });
        }
        times.push(if step + 1 <= n_full {
            (step + 1) as f64 * dt
        } else {
            t_max
        });
        values.extend_from_slice(&u);
    }
    *times.last_mut().unwrap() = t_max;

    Ok(ReferenceSolution {
        times,
        space: Some(x),
        values,
        dim: nx,
        column_names: vec!["u".into()],
        metadata: GeneratorMetadata {
            method: "method-of-lines central/rk4".into(),
            dt,
            dx: Some(dx),
        },
    })
}
