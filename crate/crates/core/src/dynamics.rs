//! Explicit time integration (central differences, classical Runge-Kutta),
//! critical time steps, initial conditions and ground-acceleration forcing.

use crate::assembly::SystemMatrices;
use crate::error::{IgaError, Result};
use crate::linalg::{dot, real_eigenvalues, sym_generalized_eig, MassMatrix, MassSolver, Matrix};
use crate::quadrature::gauss_rule;
use crate::scalar::Scalar;
use crate::scheme::Discretization;
use crate::spline::eval_nurbs;

/// Displacement magnitude treated as divergence.
pub const BLOW_UP: f64 = 1e12;

/// Sampled ground acceleration.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal<T> {
    times: Vec<T>,
    accel: Vec<T>,
}

impl<T: Scalar> Signal<T> {
    /// Requires at least two samples and strictly increasing times.
    pub fn new(times: Vec<T>, accel: Vec<T>) -> Result<Self> {
        if times.len() != accel.len() {
            return Err(IgaError::DimensionMismatch {
                expected: times.len(),
                found: accel.len(),
            });
        }
        if times.len() < 2 {
            return Err(IgaError::input("signal needs at least two samples"));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(IgaError::input(format!(
                "signal times not strictly increasing at row {}",
                i + 1
            )));
        }
        if times.iter().chain(&accel).any(|v| !v.is_finite()) {
            return Err(IgaError::input("signal contains non-finite values"));
        }
        Ok(Self { times, accel })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn accel(&self) -> &[T] {
        &self.accel
    }

    pub fn duration(&self) -> T {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Linear interpolation; zero outside the recorded window.
    pub fn value_at(&self, t: T) -> T {
        let n = self.times.len();
        if t < self.times[0] || t > self.times[n - 1] {
            return T::zero();
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.accel[0];
        }
        if k >= n {
            return self.accel[n - 1];
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = (t - t0) / (t1 - t0);
        self.accel[k - 1] + s * (self.accel[k] - self.accel[k - 1])
    }

    /// Sum of Gaussian-windowed sinusoids sampled every `dt` on `[0, duration]`;
    /// a stand-in for a recorded earthquake.
    pub fn synthetic_burst(duration: T, dt: T) -> Result<Self> {
        // (frequency Hz, amplitude m/s^2, centre s, width s)
        const COMPONENTS: [(f64, f64, f64, f64); 5] = [
            (0.9, 2.1, 9.0, 3.0),
            (1.7, 3.0, 11.0, 2.5),
            (2.9, 1.6, 13.0, 4.0),
            (4.3, 1.0, 10.0, 2.0),
            (6.1, 0.6, 15.0, 3.0),
        ];
        if !(duration > T::zero() && dt > T::zero()) {
            return Err(IgaError::input("duration and dt must be positive"));
        }
        let n = (duration / dt).round().to_f64_lossy() as usize;
        let times: Vec<T> = (0..=n).map(|i| dt * T::of_usize(i)).collect();
        let accel = times
            .iter()
            .map(|&t| {
                let t = t.to_f64_lossy();
                let v: f64 = COMPONENTS
                    .iter()
                    .map(|&(f, a, t0, tau)| {
                        a * (-((t - t0) / tau).powi(2)).exp()
                            * (2.0 * std::f64::consts::PI * f * t).sin()
                    })
                    .sum();
                T::lit(v)
            })
            .collect();
        Self::new(times, accel)
    }
}

/// Which mass builds the ground-acceleration force.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GroundMass {
    /// The scheme's own (transformed, possibly lumped) mass times ones.
    #[default]
    Scheme,
    /// Transformed physical inertia `T (M_full 1)` on the free rows.
    Consistent,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum ForcingSpec<T> {
    #[default]
    None,
    /// `F(t) = m_g * a_g(t)` with `m_g` chosen by [`GroundMass`].
    GroundAccel { signal: Signal<T>, mass: GroundMass },
    /// The assembled static load, constant in time.
    StaticLoadConstant,
}

/// Time-dependent load vector on the free DOFs.
#[derive(Clone, Debug)]
pub struct Forcing<T> {
    constant: Option<Vec<T>>,
    ground: Option<(Vec<T>, Signal<T>)>,
    n: usize,
}

impl<T: Scalar> Forcing<T> {
    pub fn zero(n: usize) -> Self {
        Self {
            constant: None,
            ground: None,
            n,
        }
    }

    pub fn constant(load: Vec<T>) -> Self {
        Self {
            n: load.len(),
            constant: Some(load),
            ground: None,
        }
    }

    /// `F(t) = influence * a_g(t)`.
    pub fn ground(influence: Vec<T>, signal: Signal<T>) -> Self {
        Self {
            n: influence.len(),
            constant: None,
            ground: Some((influence, signal)),
        }
    }

    /// Builds the forcing for a discretization.
    pub fn from_spec(disc: &Discretization<T>, spec: &ForcingSpec<T>) -> Result<Self> {
        let n = disc.n_free();
        Ok(match spec {
            ForcingSpec::None => Self::zero(n),
            ForcingSpec::StaticLoadConstant => Self::constant(disc.system.load.clone()),
            ForcingSpec::GroundAccel { signal, mass } => {
                Self::ground(ground_influence(disc, *mass)?, signal.clone())
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn at(&self, t: T) -> Vec<T> {
        let mut f = self
            .constant
            .clone()
            .unwrap_or_else(|| vec![T::zero(); self.n]);
        if let Some((g, s)) = &self.ground {
            let a = s.value_at(t);
            if a != T::zero() {
                for (fi, &gi) in f.iter_mut().zip(g) {
                    *fi += gi * a;
                }
            }
        }
        f
    }
}

/// Vector multiplying `a_g(t)` in the ground force.
pub fn ground_influence<T: Scalar>(disc: &Discretization<T>, mass: GroundMass) -> Result<Vec<T>> {
    match mass {
        GroundMass::Scheme => disc.system.mass.matvec(&vec![T::one(); disc.n_free()]),
        GroundMass::Consistent => {
            let m1 = disc.full.mass.matvec(&vec![T::one(); disc.full.full_dim])?;
            disc.row_operator().matvec(&m1)
        }
    }
}

/// `F(t) = M a_g(t) 1` with the system's own mass.
pub fn ground_force<T: Scalar>(
    sys: &SystemMatrices<T>,
    signal: &Signal<T>,
    t: T,
) -> Result<Vec<T>> {
    let a = signal.value_at(t);
    Ok(sys
        .mass
        .matvec(&vec![T::one(); sys.n_free()])?
        .into_iter()
        .map(|m| m * a)
        .collect())
}

/// `2 / omega_max` for a symmetric pair.
pub fn critical_time_step_pair<T: Scalar>(k: &Matrix<T>, m: &MassMatrix<T>) -> Result<T> {
    let eig = sym_generalized_eig(k, m)?;
    omega_to_dt(eig.values.last().copied())
}

/// `2 / omega_max` from the real spectrum of `M^-1 K` (nonsymmetric `K`).
pub fn critical_time_step_general<T: Scalar>(k: &Matrix<T>, m: &MassMatrix<T>) -> Result<T> {
    let solver = MassSolver::new(m)?;
    let a = mass_inverse_times(&solver, k)?;
    let ev = real_eigenvalues(&a, T::lit(crate::analysis::SPECTRUM_IMAG_TOL))?;
    omega_to_dt(ev.last().copied())
}

fn omega_to_dt<T: Scalar>(lambda_max: Option<T>) -> Result<T> {
    match lambda_max {
        Some(l) if l > T::zero() => Ok(T::lit(2.0) / l.sqrt()),
        Some(_) => Err(IgaError::NoConvergence("no positive eigenvalue".into())),
        None => Err(IgaError::input("empty system")),
    }
}

/// `M^-1 A` column by column.
pub fn mass_inverse_times<T: Scalar>(solver: &MassSolver<T>, a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.rows();
    let mut out = Matrix::zeros(n, a.cols());
    for j in 0..a.cols() {
        let col = solver.solve(&a.column(j))?;
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    Ok(out)
}

/// Critical step of the system a scheme integrates.
pub fn critical_time_step<T: Scalar>(disc: &Discretization<T>) -> Result<T> {
    if disc.scheme.has_symmetric_equivalent() {
        critical_time_step_pair(&disc.galerkin.stiffness, &disc.symmetric_mass()?)
    } else {
        critical_time_step_general(&disc.system.stiffness, &disc.system.mass)
    }
}

/// Step-size rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtRule<T> {
    Fixed(T),
    /// Largest physical element length over ten.
    HOverTen,
    /// `(p / (2 n_el))^p`.
    AdaptedP,
}

impl<T: Scalar> DtRule<T> {
    /// Nominal step for a discretization.
    pub fn nominal(&self, disc: &Discretization<T>) -> Result<T> {
        let dt = match *self {
            DtRule::Fixed(dt) => dt,
            DtRule::HOverTen => disc.space.h_max()? / T::lit(10.0),
            DtRule::AdaptedP => {
                let p = disc.space.degree();
                let base = T::of_usize(p) / (T::lit(2.0) * T::of_usize(disc.space.num_elements()));
                base.powi(p as i32)
            }
        };
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(IgaError::input("time step must be positive"));
        }
        Ok(dt)
    }

    /// Step count and step size hitting `t_end` exactly, never exceeding the
    /// nominal step.
    pub fn resolve(&self, disc: &Discretization<T>, t_end: T) -> Result<(usize, T)> {
        if !(t_end > T::zero()) {
            return Err(IgaError::input("end time must be positive"));
        }
        let dt0 = self.nominal(disc)?;
        let ratio = (t_end / dt0).to_f64_lossy();
        let n = ((ratio - 1e-9).ceil() as usize).max(1);
        Ok((n, t_end / T::of_usize(n)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    Cdm,
    Rk4,
}

/// `M u'' + K u = F(t)` with a factored mass.
#[derive(Clone, Debug)]
pub struct ExplicitOperator<T> {
    solver: MassSolver<T>,
    stiffness: Matrix<T>,
}

impl<T: Scalar> ExplicitOperator<T> {
    /// Factors the mass once (elementwise for diagonal, LU otherwise).
    pub fn new(sys: &SystemMatrices<T>) -> Result<Self> {
        Ok(Self {
            solver: MassSolver::new(&sys.mass)?,
            stiffness: sys.stiffness.clone(),
        })
    }

    pub fn from_parts(mass: &MassMatrix<T>, stiffness: Matrix<T>) -> Result<Self> {
        if mass.dim() != stiffness.rows() || !stiffness.is_square() {
            return Err(IgaError::DimensionMismatch {
                expected: stiffness.rows(),
                found: mass.dim(),
            });
        }
        Ok(Self {
            solver: MassSolver::new(mass)?,
            stiffness,
        })
    }

    pub fn dim(&self) -> usize {
        self.stiffness.rows()
    }

    /// `M^-1 (F - K u)`.
    pub fn acceleration(&self, u: &[T], f: &[T]) -> Result<Vec<T>> {
        let ku = self.stiffness.matvec(u)?;
        let rhs: Vec<T> = f.iter().zip(&ku).map(|(&a, &b)| a - b).collect();
        self.solver.solve(&rhs)
    }
}

/// Integrator state at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeState<T> {
    pub t: T,
    pub u: Vec<T>,
    pub v: Vec<T>,
    pub a: Vec<T>,
    /// Displacement at `t - dt` (central differences only).
    pub u_prev: Vec<T>,
    pub dt: T,
    pub step: usize,
}

fn check_finite<T: Scalar>(state: &TimeState<T>) -> Result<()> {
    let bound = T::lit(BLOW_UP);
    if state.u.iter().any(|x| !x.is_finite() || x.abs() > bound) {
        return Err(IgaError::Instability {
            step: state.step,
            time: state.t.to_f64_lossy(),
        });
    }
    Ok(())
}

fn check_dims<T: Scalar>(op: &ExplicitOperator<T>, u0: &[T], v0: &[T], f0: &[T]) -> Result<()> {
    for len in [u0.len(), v0.len(), f0.len()] {
        if len != op.dim() {
            return Err(IgaError::DimensionMismatch {
                expected: op.dim(),
                found: len,
            });
        }
    }
    Ok(())
}

/// Central-difference start: `a0 = M^-1 (F0 - K u0)`,
/// `u_prev = u0 - dt v0 + dt^2/2 a0`.
pub fn cdm_init<T: Scalar>(
    op: &ExplicitOperator<T>,
    u0: &[T],
    v0: &[T],
    f0: &[T],
    dt: T,
) -> Result<TimeState<T>> {
    check_dims(op, u0, v0, f0)?;
    if !(dt > T::zero()) {
        return Err(IgaError::input("time step must be positive"));
    }
    let a0 = op.acceleration(u0, f0)?;
    let half = T::lit(0.5) * dt * dt;
    let u_prev = (0..u0.len())
        .map(|i| u0[i] - dt * v0[i] + half * a0[i])
        .collect();
    Ok(TimeState {
        t: T::zero(),
        u: u0.to_vec(),
        v: v0.to_vec(),
        a: a0,
        u_prev,
        dt,
        step: 0,
    })
}

/// One central-difference step. `f_next` is the load at `t + dt`, used to
/// recover the acceleration there; the velocity follows as
/// `(u_{n+1} - u_n)/dt + dt/2 a_{n+1}`, which equals the central difference
/// `(u_{n+2} - u_n)/(2 dt)`.
pub fn cdm_step<T: Scalar>(
    state: &TimeState<T>,
    op: &ExplicitOperator<T>,
    f_next: &[T],
) -> Result<TimeState<T>> {
    let dt = state.dt;
    let dt2 = dt * dt;
    let two = T::lit(2.0);
    let n = state.u.len();
    let u: Vec<T> = (0..n)
        .map(|i| two * state.u[i] - state.u_prev[i] + dt2 * state.a[i])
        .collect();
    let a = op.acceleration(&u, f_next)?;
    let half = T::lit(0.5) * dt;
    let v = (0..n)
        .map(|i| (u[i] - state.u[i]) / dt + half * a[i])
        .collect();
    let next = TimeState {
        t: state.t + dt,
        u_prev: state.u.clone(),
        u,
        v,
        a,
        dt,
        step: state.step + 1,
    };
    check_finite(&next)?;
    Ok(next)
}

/// Runge-Kutta start: stores `a0` only.
pub fn rk4_init<T: Scalar>(
    op: &ExplicitOperator<T>,
    u0: &[T],
    v0: &[T],
    f0: &[T],
    dt: T,
) -> Result<TimeState<T>> {
    check_dims(op, u0, v0, f0)?;
    if !(dt > T::zero()) {
        return Err(IgaError::input("time step must be positive"));
    }
    let a0 = op.acceleration(u0, f0)?;
    Ok(TimeState {
        t: T::zero(),
        u: u0.to_vec(),
        v: v0.to_vec(),
        a: a0,
        u_prev: u0.to_vec(),
        dt,
        step: 0,
    })
}

/// Classical four-stage step on `y = (u, v)`, `y' = (v, M^-1 (F - K u))`.
pub fn rk4_step<T: Scalar>(
    state: &TimeState<T>,
    op: &ExplicitOperator<T>,
    force: &dyn Fn(T) -> Vec<T>,
) -> Result<TimeState<T>> {
    let dt = state.dt;
    let half = T::lit(0.5) * dt;
    let t = state.t;
    let n = state.u.len();
    let axpy = |x: &[T], s: T, y: &[T]| -> Vec<T> { (0..n).map(|i| x[i] + s * y[i]).collect() };
    let f_mid = force(t + half);
    let f_end = force(t + dt);
    let k1u = state.v.clone();
    let k1v = state.a.clone();
    let u2 = axpy(&state.u, half, &k1u);
    let k2u = axpy(&state.v, half, &k1v);
    let k2v = op.acceleration(&u2, &f_mid)?;
    let u3 = axpy(&state.u, half, &k2u);
    let k3u = axpy(&state.v, half, &k2v);
    let k3v = op.acceleration(&u3, &f_mid)?;
    let u4 = axpy(&state.u, dt, &k3u);
    let k4u = axpy(&state.v, dt, &k3v);
    let k4v = op.acceleration(&u4, &f_end)?;
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let u: Vec<T> = (0..n)
        .map(|i| state.u[i] + sixth * (k1u[i] + two * k2u[i] + two * k3u[i] + k4u[i]))
        .collect();
    let v: Vec<T> = (0..n)
        .map(|i| state.v[i] + sixth * (k1v[i] + two * k2v[i] + two * k3v[i] + k4v[i]))
        .collect();
    let a = op.acceleration(&u, &f_end)?;
    let next = TimeState {
        t: t + dt,
        u_prev: state.u.clone(),
        u,
        v,
        a,
        dt,
        step: state.step + 1,
    };
    check_finite(&next)?;
    Ok(next)
}

/// Probe responses sampled during a run.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeHistory<T> {
    pub times: Vec<T>,
    /// Physical probe positions.
    pub probes: Vec<T>,
    /// `u[probe][sample]`.
    pub u: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub a: Vec<Vec<T>>,
    /// Final reduced displacement coefficients.
    pub final_u: Vec<T>,
    pub dt: T,
    pub n_steps: usize,
}

impl<T: Scalar> TimeHistory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Run settings.
#[derive(Clone, Debug)]
pub struct TransientSettings<T> {
    pub integrator: Integrator,
    pub dt_rule: DtRule<T>,
    pub t_end: T,
    /// Physical probe positions.
    pub probes: Vec<T>,
    /// Record every `stride` steps (the last step is always recorded).
    pub stride: usize,
}

/// Initial displacement and velocity on the free DOFs.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialConditions<T> {
    pub u0: Vec<T>,
    pub v0: Vec<T>,
}

impl<T: Scalar> InitialConditions<T> {
    pub fn at_rest(n: usize) -> Self {
        Self {
            u0: vec![T::zero(); n],
            v0: vec![T::zero(); n],
        }
    }
}

/// Consistent L2 projection of a physical field onto the free DOFs
/// (`int R_i R_j` solved against `int R_i f`).
pub fn project_field<T: Scalar>(disc: &Discretization<T>, f: &dyn Fn(T) -> T) -> Result<Vec<T>> {
    let space = &disc.space;
    let n = space.num_basis();
    let rule = gauss_rule::<T>(space.degree() + 3)?;
    let x0 = space.geometry()[0];
    let mut b = vec![T::zero(); n];
    for (_, lo, hi) in space.knot_vector().spans() {
        for (xi, w) in rule.mapped(lo, hi) {
            let e = eval_nurbs(space, xi)?;
            let x = space.map(xi)? - x0;
            let fx = f(x) * w * e.jacobian;
            let first = e.first_index();
            for (k, &r) in e.values.iter().enumerate() {
                b[first + k] += r * fx;
            }
        }
    }
    let free = &disc.galerkin.free;
    let rhs: Vec<T> = free.iter().map(|&i| b[i] * disc.model.mu).collect();
    crate::linalg::lu_solve(&disc.galerkin.mass.to_dense(), &rhs)
}

/// Rows mapping free coefficients to `u(x)` at each probe.
pub fn probe_rows<T: Scalar>(disc: &Discretization<T>, probes: &[T]) -> Result<Vec<Vec<T>>> {
    let space = &disc.space;
    let n = space.num_basis();
    let x0 = space.geometry()[0];
    probes
        .iter()
        .map(|&x| {
            if x < -T::epsilon() * space.length() || x > space.length() * (T::one() + T::epsilon())
            {
                return Err(IgaError::Domain {
                    value: x.to_f64_lossy(),
                    lo: 0.0,
                    hi: space.length().to_f64_lossy(),
                });
            }
            let xi = space.parameter_at(x + x0)?;
            let e = eval_nurbs(space, xi)?;
            let dense = e.dense_values(n);
            Ok(disc.system.free.iter().map(|&i| dense[i]).collect())
        })
        .collect()
}

/// Integrates the scheme's system from `init` to `t_end`.
pub fn run_transient<T: Scalar>(
    disc: &Discretization<T>,
    settings: &TransientSettings<T>,
    init: &InitialConditions<T>,
    forcing: &Forcing<T>,
) -> Result<TimeHistory<T>> {
    let (n_steps, dt) = settings.dt_rule.resolve(disc, settings.t_end)?;
    let op = ExplicitOperator::new(&disc.system)?;
    if forcing.dim() != op.dim() {
        return Err(IgaError::DimensionMismatch {
            expected: op.dim(),
            found: forcing.dim(),
        });
    }
    let rows = probe_rows(disc, &settings.probes)?;
    let stride = settings.stride.max(1);
    let n_probe = rows.len();
    let mut hist = TimeHistory {
        times: Vec::new(),
        probes: settings.probes.clone(),
        u: vec![Vec::new(); n_probe],
        v: vec![Vec::new(); n_probe],
        a: vec![Vec::new(); n_probe],
        final_u: Vec::new(),
        dt,
        n_steps,
    };
    let record = |h: &mut TimeHistory<T>, s: &TimeState<T>| {
        h.times.push(s.t);
        for (k, row) in rows.iter().enumerate() {
            h.u[k].push(dot(row, &s.u));
            h.v[k].push(dot(row, &s.v));
            h.a[k].push(dot(row, &s.a));
        }
    };
    let f0 = forcing.at(T::zero());
    let mut state = match settings.integrator {
        Integrator::Cdm => cdm_init(&op, &init.u0, &init.v0, &f0, dt)?,
        Integrator::Rk4 => rk4_init(&op, &init.u0, &init.v0, &f0, dt)?,
    };
    record(&mut hist, &state);
    let force = |t: T| forcing.at(t);
    for step in 1..=n_steps {
        let t_next = dt * T::of_usize(step);
        let mut next = match settings.integrator {
            Integrator::Cdm => cdm_step(&state, &op, &forcing.at(t_next))?,
            Integrator::Rk4 => rk4_step(&state, &op, &force)?,
        };
        next.t = t_next;
        state = next;
        if step % stride == 0 || step == n_steps {
            record(&mut hist, &state);
        }
    }
    hist.final_u = state.u;
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{BoundaryCondition, TrussModel};
    use crate::linalg::{DiagonalMatrix, Lu};
    use crate::scheme::{discretize, Scheme};
    use crate::spline::uniform_mesh;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use BoundaryCondition::{Fixed, Free};

    fn scalar_op(k: f64, m: f64) -> ExplicitOperator<f64> {
        ExplicitOperator::from_parts(
            &MassMatrix::Diagonal(DiagonalMatrix::new(vec![m])),
            Matrix::from_row_slice(1, 1, &[k]).unwrap(),
        )
        .unwrap()
    }

    fn two_dof() -> (Matrix<f64>, MassMatrix<f64>) {
        let k = Matrix::from_rows(&[vec![2.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        (k, MassMatrix::Diagonal(DiagonalMatrix::new(vec![1.0, 0.5])))
    }

    fn run_scalar(integ: Integrator, dt: f64, t_end: f64) -> f64 {
        let op = scalar_op(1.0, 1.0);
        let n = (t_end / dt).round() as usize;
        let mut s = match integ {
            Integrator::Cdm => cdm_init(&op, &[1.0], &[0.0], &[0.0], dt).unwrap(),
            Integrator::Rk4 => rk4_init(&op, &[1.0], &[0.0], &[0.0], dt).unwrap(),
        };
        for _ in 0..n {
            s = match integ {
                Integrator::Cdm => cdm_step(&s, &op, &[0.0]).unwrap(),
                Integrator::Rk4 => rk4_step(&s, &op, &|_| vec![0.0]).unwrap(),
            };
        }
        s.u[0]
    }

    #[test]
    fn critical_step_scalars() {
        let m = MassMatrix::Diagonal(DiagonalMatrix::new(vec![1.0]));
        assert_relative_eq!(
            critical_time_step_pair(&Matrix::identity(1), &m).unwrap(),
            2.0,
            epsilon = 1e-14
        );
        let k = Matrix::from_row_slice(1, 1, &[1e4]).unwrap();
        assert_relative_eq!(
            critical_time_step_pair(&k, &m).unwrap(),
            0.02,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            critical_time_step_general(&k, &m).unwrap(),
            0.02,
            epsilon = 1e-15
        );
    }

    #[test]
    fn lumped_step_exceeds_consistent() {
        let model = TrussModel::new(1.0, 1.0, 1.0, Fixed, Free).unwrap();
        let s = uniform_mesh::<f64>(3, 20, 1.0).unwrap();
        let c = critical_time_step(&discretize(&model, &s, Scheme::consistent()).unwrap()).unwrap();
        let l =
            critical_time_step(&discretize(&model, &s, Scheme::nurbs_rowsum()).unwrap()).unwrap();
        assert!(l > c);
    }

    #[test]
    fn cdm_init_examples() {
        let op = scalar_op(1.0, 1.0);
        let s = cdm_init(&op, &[1.0], &[0.0], &[0.0], 0.1).unwrap();
        assert_eq!(s.a[0], -1.0);
        assert_relative_eq!(s.u_prev[0], 0.995, epsilon = 1e-16);
        let s = cdm_init(&op, &[0.0], &[0.0], &[0.0], 0.1).unwrap();
        assert_eq!(s.u_prev[0], 0.0);
        let s = cdm_init(&op, &[0.0], &[1.0], &[0.0], 0.1).unwrap();
        assert_eq!(s.u_prev[0], -0.1);
    }

    #[test]
    fn cdm_step_examples() {
        let op = scalar_op(1.0, 1.0);
        let s = cdm_init(&op, &[1.0], &[0.0], &[0.0], 0.1).unwrap();
        let s = cdm_step(&s, &op, &[0.0]).unwrap();
        assert!((s.u[0] - 0.995).abs() < 1e-15);
        let free = scalar_op(0.0, 1.0);
        let mut s = cdm_init(&free, &[0.0], &[3.0], &[0.0], 0.25).unwrap();
        for n in 1..=20 {
            s = cdm_step(&s, &free, &[0.0]).unwrap();
            assert_relative_eq!(s.u[0], n as f64 * 0.25 * 3.0, epsilon = 1e-12);
            assert_relative_eq!(s.v[0], 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cdm_velocity_matches_central_difference() {
        let (k, m) = two_dof();
        let op = ExplicitOperator::from_parts(&m, k).unwrap();
        let mut states = vec![cdm_init(&op, &[1.0, 0.3], &[0.0, -0.5], &[0.0, 0.0], 0.05).unwrap()];
        for _ in 0..5 {
            let next = cdm_step(states.last().unwrap(), &op, &[0.0, 0.0]).unwrap();
            states.push(next);
        }
        for n in 1..4 {
            for i in 0..2 {
                let central = (states[n + 1].u[i] - states[n - 1].u[i]) / 0.1;
                assert_relative_eq!(states[n].v[i], central, epsilon = 1e-12);
                let acc = (states[n + 1].u[i] - 2.0 * states[n].u[i] + states[n - 1].u[i]) / 0.0025;
                assert_relative_eq!(states[n].a[i], acc, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn rk4_examples() {
        let op = scalar_op(1.0, 1.0);
        let s = rk4_init(&op, &[1.0], &[0.0], &[0.0], 0.1).unwrap();
        let s = rk4_step(&s, &op, &|_| vec![0.0]).unwrap();
        let taylor = 1.0 - 0.01 / 2.0 + 1e-4 / 24.0;
        assert!((s.u[0] - taylor).abs() < 1e-12);
        assert!((s.u[0] - 0.9950042).abs() < 1e-7);
        let z = rk4_init(&op, &[0.0], &[0.0], &[0.0], 0.1).unwrap();
        let z = rk4_step(&z, &op, &|_| vec![0.0]).unwrap();
        assert_eq!(z.u[0], 0.0);
        assert_eq!(z.v[0], 0.0);
    }

    #[test]
    fn rk4_energy_drift_small() {
        let op = scalar_op(1.0, 1.0);
        let period = 2.0 * std::f64::consts::PI;
        let dt = period / 100.0;
        let mut s = rk4_init(&op, &[1.0], &[0.0], &[0.0], dt).unwrap();
        for _ in 0..1000 {
            s = rk4_step(&s, &op, &|_| vec![0.0]).unwrap();
        }
        let e = 0.5 * (s.u[0] * s.u[0] + s.v[0] * s.v[0]);
        assert!((e - 0.5).abs() / 0.5 < 1e-5);
    }

    #[test]
    fn observed_orders() {
        let t_end = 2.0;
        let order = |integ: Integrator, dt: f64| {
            let e1 = (run_scalar(integ, dt, t_end) - t_end.cos()).abs();
            let e2 = (run_scalar(integ, dt / 2.0, t_end) - t_end.cos()).abs();
            (e1 / e2).log2()
        };
        let cdm = order(Integrator::Cdm, 0.01);
        assert!((cdm - 2.0).abs() < 0.1, "{cdm}");
        let rk4 = order(Integrator::Rk4, 0.05);
        assert!((rk4 - 4.0).abs() < 0.2, "{rk4}");
    }

    #[test]
    fn cdm_stability_boundary() {
        let (k, m) = two_dof();
        let dtc = critical_time_step_pair(&k, &m).unwrap();
        let op = ExplicitOperator::from_parts(&m, k).unwrap();
        let run = |dt: f64, steps: usize| -> Result<f64> {
            let mut s = cdm_init(&op, &[1.0, 0.5], &[0.0, 0.0], &[0.0, 0.0], dt)?;
            for _ in 0..steps {
                s = cdm_step(&s, &op, &[0.0, 0.0])?;
            }
            Ok(s.u[0].abs().max(s.u[1].abs()))
        };
        assert!(run(0.99 * dtc, 10_000).unwrap() < 10.0);
        assert!(matches!(
            run(1.05 * dtc, 500),
            Err(IgaError::Instability { .. })
        ));
    }

    #[test]
    fn factorization_reuse_matches_per_step_solve() {
        let model = TrussModel::new(1.0, 1.0, 1.0, Fixed, Free).unwrap();
        let s = uniform_mesh::<f64>(2, 6, 1.0).unwrap();
        let d = discretize(&model, &s, Scheme::ad(2)).unwrap();
        let op = ExplicitOperator::new(&d.system).unwrap();
        let n = d.n_free();
        let dt = 1e-3;
        let u0: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut s = cdm_init(&op, &u0, &vec![0.0; n], &vec![0.0; n], dt).unwrap();
        let m = d.system.mass.to_dense();
        let mut u = u0.clone();
        let mut up = s.u_prev.clone();
        for _ in 0..50 {
            s = cdm_step(&s, &op, &vec![0.0; n]).unwrap();
            let ku = d.system.stiffness.matvec(&u).unwrap();
            let rhs: Vec<f64> = ku.iter().map(|x| -x).collect();
            let acc = Lu::factor(&m).unwrap().solve(&rhs).unwrap();
            let un: Vec<f64> = (0..n)
                .map(|i| 2.0 * u[i] - up[i] + dt * dt * acc[i])
                .collect();
            up = u;
            u = un;
        }
        for (a, b) in s.u.iter().zip(&u) {
            assert!((a - b).abs() < 1e-13 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn signal_interpolation() {
        let s = Signal::new(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
        assert_eq!(s.value_at(0.25), 0.5);
        assert_eq!(s.value_at(1.0), 2.0);
        assert_eq!(s.value_at(1.5), 0.0);
        assert_eq!(s.value_at(-0.1), 0.0);
        assert!(Signal::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Signal::new(vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn synthetic_burst_shape() {
        let s = Signal::<f64>::synthetic_burst(50.0, 0.01).unwrap();
        assert_eq!(s.times().len(), 5001);
        let peak = s.accel().iter().fold(0.0f64, |m, a| m.max(a.abs()));
        assert!(peak > 1.0 && peak < 10.0);
        assert!(s.accel()[5000].abs() < 1e-6);
    }

    #[test]
    fn zero_ground_signal_gives_zero_force() {
        let model = TrussModel::new(1.0, 1.0, 1.0, Fixed, Free).unwrap();
        let sp = uniform_mesh::<f64>(2, 4, 1.0).unwrap();
        let d = discretize(&model, &sp, Scheme::consistent()).unwrap();
        let sig = Signal::new(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!(ground_force(&d.system, &sig, 0.5)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn zero_initial_state_stays_zero() {
        let model = TrussModel::new(1.0, 1.0, 1.0, Fixed, Fixed).unwrap();
        let sp = uniform_mesh::<f64>(2, 4, 1.0).unwrap();
        let d = discretize(&model, &sp, Scheme::consistent()).unwrap();
        for integrator in [Integrator::Cdm, Integrator::Rk4] {
            let settings = TransientSettings {
                integrator,
                dt_rule: DtRule::HOverTen,
                t_end: 0.5,
                probes: vec![0.5],
                stride: 1,
            };
            let h = run_transient(
                &d,
                &settings,
                &InitialConditions::at_rest(d.n_free()),
                &Forcing::zero(d.n_free()),
            )
            .unwrap();
            assert!(h.u[0]
                .iter()
                .chain(&h.v[0])
                .chain(&h.a[0])
                .all(|&x| x == 0.0));
            assert_eq!(h.len(), h.n_steps + 1);
        }
    }

    #[test]
    fn constant_ground_accel_single_dof() {
        // p = 1, one element, fixed-free: one DOF with k = EA/L and lumped
        // m = mu L / 2
        let model = TrussModel::new(1.0, 4.0, 1.0, Fixed, Free).unwrap();
        let sp = uniform_mesh::<f64>(1, 1, 1.0).unwrap();
        let d = discretize(&model, &sp, Scheme::nurbs_rowsum()).unwrap();
        let g = 0.8;
        let sig = Signal::new(vec![0.0, 10.0], vec![g, g]).unwrap();
        let forcing = Forcing::from_spec(
            &d,
            &ForcingSpec::GroundAccel {
                signal: sig,
                mass: GroundMass::Scheme,
            },
        )
        .unwrap();
        let settings = TransientSettings {
            integrator: Integrator::Cdm,
            dt_rule: DtRule::Fixed(1e-4),
            t_end: 2.0,
            probes: vec![1.0],
            stride: 100,
        };
        let h = run_transient(&d, &settings, &InitialConditions::at_rest(1), &forcing).unwrap();
        let (k, m) = (4.0f64, 0.5);
        let w = (k / m).sqrt();
        for (t, u) in h.times.iter().zip(&h.u[0]) {
            let exact = g * m / k * (1.0 - (w * t).cos());
            assert!((u - exact).abs() < 1e-6, "t={t}: {u} vs {exact}");
        }
    }

    #[test]
    fn resolve_hits_end_time() {
        let model = TrussModel::new(1.0, 1.0, 1.0, Fixed, Fixed).unwrap();
        let sp = uniform_mesh::<f64>(2, 10, 1.0).unwrap();
        let d = discretize(&model, &sp, Scheme::consistent()).unwrap();
        let (n, dt) = DtRule::HOverTen.resolve(&d, 1.925).unwrap();
        assert_eq!(n, 193);
        assert!(dt <= 0.01 && (dt * n as f64 - 1.925).abs() < 1e-12);
        assert_relative_eq!(
            DtRule::<f64>::AdaptedP.nominal(&d).unwrap(),
            0.01,
            epsilon = 1e-15
        );
    }

    proptest! {
        #[test]
        fn consistent_dual_histories_match(q in 1usize..=3, seed in 0.0f64..1.0) {
            let model = TrussModel::new(1.0, 1.0, 1.0, Fixed, Free).unwrap();
            let sp = uniform_mesh::<f64>(3, 6, 1.0).unwrap();
            let base = discretize(&model, &sp, Scheme::consistent()).unwrap();
            let dual = discretize(&model, &sp, Scheme::ad(q)).unwrap();
            let sig = Signal::<f64>::synthetic_burst(1.0, 0.01).unwrap();
            let spec = ForcingSpec::GroundAccel { signal: sig, mass: GroundMass::Scheme };
            let settings = TransientSettings {
                integrator: Integrator::Cdm,
                dt_rule: DtRule::Fixed(1e-3),
                t_end: 0.3,
                probes: vec![1.0, 0.5 * seed],
                stride: 1,
            };
            let init = InitialConditions { u0: vec![0.0; base.n_free()], v0: vec![seed; base.n_free()] };
            let hb = run_transient(&base, &settings, &init, &Forcing::from_spec(&base, &spec).unwrap()).unwrap();
            let hd = run_transient(&dual, &settings, &init, &Forcing::from_spec(&dual, &spec).unwrap()).unwrap();
            let scale = hb.u[0].iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for k in 0..2 {
                for (a, b) in hb.u[k].iter().zip(&hd.u[k]) {
                    prop_assert!((a - b).abs() <= 1e-8 * scale);
                }
            }
        }
    }
}
