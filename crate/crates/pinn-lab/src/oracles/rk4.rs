//! Classical fourth-order Runge-Kutta with fixed steps.

use num_traits::Float;

use crate::error::{Error, Result};

use super::{GeneratorMetadata, ReferenceSolution};

/// One RK4 step of size `dt` from (`t`, `state`), writing the next state.
pub fn rk4_step<T: Float>(
    rhs: &mut impl FnMut(T, &[T], &mut [T]),
    t: T,
    state: &[T],
    dt: T,
    next: &mut [T],
) {
    let n = state.len();
    let two = T::one() + T::one();
    let six = two + two + two;
    let half = dt / two;
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];

    rhs(t, state, &mut k1);
    for i in 0..n {
        tmp[i] = state[i] + half * k1[i];
    }
    rhs(t + half, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = state[i] + half * k2[i];
    }
    rhs(t + half, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = state[i] + dt * k3[i];
    }
    rhs(t + dt, &tmp, &mut k4);
    for i in 0..n {
        next[i] = state[i] + dt / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
    }
}

/// Integrate a first-order system from t = 0 to `t_max` with fixed steps of
/// `dt`; the final partial step is shortened to land exactly on `t_max`.
pub fn rk4_integrate(
    mut rhs: impl FnMut(f64, &[f64], &mut [f64]),
    y0: &[f64],
    t_max: f64,
    dt: f64,
) -> Result<ReferenceSolution> {
    if dt <= 0.0 || t_max <= 0.0 {
        return Err(Error::Config(format!(
            "rk4 needs positive dt and horizon, got dt = {dt}, T = {t_max}"
        )));
    }
    let dim = y0.len();
    let n_full = (t_max / dt).floor() as usize;
    let remainder = t_max - n_full as f64 * dt;
    let take_partial = remainder > dt * 1e-12;
    let n_nodes = n_full + 1 + usize::from(take_partial);

    let mut times = Vec::with_capacity(n_nodes);
    let mut values = Vec::with_capacity(n_nodes * dim);
    let mut state = y0.to_vec();
    let mut next = vec![0.0; dim];
    times.push(0.0);
    values.extend_from_slice(&state);

    for step in 0..n_full + usize::from(take_partial) {
        let t = step as f64 * dt;
        let h = if step < n_full { dt } else { remainder };
        rk4_step(&mut rhs, t, &state, h, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step });
        }
        state.copy_from_slice(&next);
        let t_next = if step + 1 <= n_full {
            (step + 1) as f64 * dt
        } else {
            t_max
        };
        times.push(t_next);
        values.extend_from_slice(&state);
    }
    // land exactly on T even when dt divides it
    *times.last_mut().unwrap() = t_max;

    Ok(ReferenceSolution {
        times,
        space: None,
        values,
        dim,
        column_names: (0..dim).map(|i| format!("y{i}")).collect(),
        metadata: GeneratorMetadata {
            method: "rk4".into(),
            dt,
            dx: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rhs_stays_constant() {
        let sol = rk4_integrate(|_, _, out| out[0] = 0.0, &[4.2], 1.0, 0.1).unwrap();
        assert!(sol.values.iter().all(|&v| v == 4.2));
        assert_eq!(sol.last_time(), 1.0);
    }

    #[test]
    fn partial_final_step_lands_on_horizon() {
        let sol = rk4_integrate(|_, y, out| out[0] = y[0], &[1.0], 0.25, 0.1).unwrap();
        assert_eq!(sol.last_time(), 0.25);
        assert_eq!(sol.times.len(), 4); // 0, 0.1, 0.2, 0.25
        let exact = 0.25f64.exp();
        assert!((sol.row(sol.times.len() - 1)[0] - exact).abs() < 1e-6);
    }

    #[test]
    fn exponential_decay_fourth_order_accurate() {
        // ẏ = −y, y(0) = 1 → e^(−t); error at T should scale like dt⁴.
        let err = |dt: f64| {
            let sol = rk4_integrate(|_, y, out| out[0] = -y[0], &[1.0], 1.0, dt).unwrap();
            (sol.row(sol.times.len() - 1)[0] - (-1.0f64).exp()).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        let order = (e1 / e2).log2();
        assert!(order > 3.8, "observed order {order}");
    }

    #[test]
    fn divergence_reports_step_index() {
        let err = rk4_integrate(|_, y, out| out[0] = y[0] * y[0], &[1.0], 10.0, 0.5);
        assert!(matches!(err, Err(Error::Divergence { .. })));
    }
}
