//! Analytic references, error norms, spectra and convergence rates.

use crate::assembly::{field_eval, BoundaryCondition, DistributedLoad, End, Support, TrussModel};
use crate::dynamics::mass_inverse_times;
use crate::error::{IgaError, Result};
use crate::linalg::{inverse_iteration, real_eigenvalues, sym_generalized_eig, MassSolver, Matrix};
use crate::quadrature::gauss_rule;
use crate::scalar::Scalar;
use crate::scheme::Discretization;
use crate::spline::{eval_nurbs, SplineSpace};

/// Relative imaginary part tolerated in spectra of nonsymmetric operators.
pub const SPECTRUM_IMAG_TOL: f64 = 1e-3;

/// Closed-form fixed-fixed response to `q(x) = P0/L sin(pi x / L)`:
/// `(u, F_N)` at physical `x`.
pub fn analytic_static_sine<T: Scalar>(model: &TrussModel<T>, x: T) -> Result<(T, T)> {
    let p0 = match model.load.distributed {
        DistributedLoad::SineHalfWave { p0 } => p0,
        _ => {
            return Err(IgaError::input(
                "analytic static solution needs the sine load",
            ))
        }
    };
    if model.support() != Support::FixedFixed || model.load.point.is_some() {
        return Err(IgaError::input(
            "analytic static solution needs fixed-fixed supports and no point load",
        ));
    }
    let pi = T::PI();
    let l = model.length;
    let u = p0 * l / (pi * pi * model.ea) * (pi * x / l).sin();
    let n = p0 / pi * (pi * x / l).cos();
    Ok((u, n))
}

/// Closed-form static response `(u, F_N)` for combinations of the sine load
/// and an end point load: fixed-fixed with the sine load only, or one fixed
/// end with the point load (if any) on the free end. `None` otherwise.
pub fn analytic_static<T: Scalar>(model: &TrussModel<T>, x: T) -> Option<(T, T)> {
    let p0 = match model.load.distributed {
        DistributedLoad::None => T::zero(),
        DistributedLoad::SineHalfWave { p0 } => p0,
        DistributedLoad::Samples { .. } => return None,
    };
    let pi = T::PI();
    let l = model.length;
    let ea = model.ea;
    let us = p0 * l / (pi * pi * ea) * (pi * x / l).sin();
    let ns = p0 / pi * (pi * x / l).cos();
    let point = |end: End| match model.load.point {
        Some(pl) if pl.end == end => Some(pl.value),
        Some(_) => None,
        None => Some(T::zero()),
    };
    match (model.left, model.right) {
        (BoundaryCondition::Fixed, BoundaryCondition::Fixed) => {
            model.load.point.is_none().then_some((us, ns))
        }
        (BoundaryCondition::Fixed, BoundaryCondition::Free) => {
            let f = point(End::Right)?;
            let c = (f + p0 / pi) / ea;
            Some((us + c * x, ns + ea * c))
        }
        (BoundaryCondition::Free, BoundaryCondition::Fixed) => {
            let f = point(End::Left)?;
            let c = -(f + p0 / pi) / ea;
            Some((us + c * (x - l), ns + ea * c))
        }
        (BoundaryCondition::Free, BoundaryCondition::Free) => None,
    }
}

/// Analytic eigenpair `(omega_n, Phi_n)` for `n >= 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticMode<T> {
    pub omega: T,
    /// Spatial wavenumber.
    pub k: T,
    support: Support,
    left_fixed: bool,
    length: T,
}

impl<T: Scalar> AnalyticMode<T> {
    /// Mode shape at physical `x`, unit amplitude.
    pub fn shape(&self, x: T) -> T {
        match self.support {
            Support::FixedFixed => (self.k * x).sin(),
            _ if self.left_fixed => (self.k * x).sin(),
            _ => (self.k * (self.length - x)).sin(),
        }
    }
}

/// Fixed-free (either end fixed) and fixed-fixed eigenpairs.
pub fn analytic_eigen<T: Scalar>(model: &TrussModel<T>, n: usize) -> Result<AnalyticMode<T>> {
    if n == 0 {
        return Err(IgaError::input("mode index starts at 1"));
    }
    let c = (model.ea / model.mu).sqrt();
    let l = model.length;
    let pi = T::PI();
    let support = model.support();
    let k = match support {
        Support::FixedFree => pi * T::of_usize(2 * n - 1) / (T::lit(2.0) * l),
        Support::FixedFixed => pi * T::of_usize(n) / l,
        Support::FreeFree => {
            return Err(IgaError::input(
                "no analytic spectrum for free-free supports",
            ))
        }
    };
    Ok(AnalyticMode {
        omega: k * c,
        k,
        support,
        left_fixed: model.left == BoundaryCondition::Fixed,
        length: l,
    })
}

/// `sin(2 pi x / L) sin(2 pi t)` for the unit truss.
pub fn analytic_standing_wave<T: Scalar>(length: T, x: T, t: T) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    (two_pi * x / length).sin() * (two_pi * t).sin()
}

/// Velocity of [`analytic_standing_wave`].
pub fn analytic_standing_wave_velocity<T: Scalar>(length: T, x: T, t: T) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    two_pi * (two_pi * x / length).sin() * (two_pi * t).cos()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Displacement,
    NormalForce,
}

/// Quadrature samples `(x, weight, u_h, N_h)` with `p + 2` points per span.
fn field_samples<T: Scalar>(
    space: &SplineSpace<T>,
    coeffs: &[T],
    ea: T,
) -> Result<Vec<(T, T, T, T)>> {
    let rule = gauss_rule::<T>(space.degree() + 2)?;
    let x0 = space.geometry()[0];
    let mut out = Vec::new();
    for (_, a, b) in space.knot_vector().spans() {
        for (xi, w) in rule.mapped(a, b) {
            let e = eval_nurbs(space, xi)?;
            let f = field_eval(space, coeffs, ea, xi)?;
            out.push((
                space.map(xi)? - x0,
                w * e.jacobian.abs(),
                f.u,
                f.normal_force,
            ));
        }
    }
    Ok(out)
}

fn relative<T: Scalar>(num: T, den: T) -> Result<T> {
    if !(den > T::zero()) {
        return Err(IgaError::input("reference norm is zero"));
    }
    Ok((num / den).sqrt())
}

/// Relative L2 error `||f_h - f_ref|| / ||f_ref||` of a field given by
/// full-length coefficients.
pub fn l2_error_field<T: Scalar>(
    space: &SplineSpace<T>,
    coeffs: &[T],
    ea: T,
    reference: &dyn Fn(T) -> T,
    quantity: Quantity,
) -> Result<T> {
    let mut num = T::zero();
    let mut den = T::zero();
    for (x, w, u, n) in field_samples(space, coeffs, ea)? {
        let h = match quantity {
            Quantity::Displacement => u,
            Quantity::NormalForce => n,
        };
        let r = reference(x);
        num += (h - r) * (h - r) * w;
        den += r * r * w;
    }
    relative(num, den)
}

/// Relative L2 error of a mode shape after unit-norm scaling and sign
/// alignment against the reference.
pub fn l2_error_mode<T: Scalar>(
    space: &SplineSpace<T>,
    coeffs: &[T],
    reference: &dyn Fn(T) -> T,
) -> Result<T> {
    let samples = field_samples(space, coeffs, T::one())?;
    let (mut hh, mut rr, mut hr) = (T::zero(), T::zero(), T::zero());
    for &(x, w, u, _) in &samples {
        let r = reference(x);
        hh += u * u * w;
        rr += r * r * w;
        hr += u * r * w;
    }
    if !(hh > T::zero()) {
        return Err(IgaError::input("mode shape is zero"));
    }
    if !(rr > T::zero()) {
        return Err(IgaError::input("reference mode is zero"));
    }
    let sign = if hr < T::zero() { -T::one() } else { T::one() };
    let (sh, sr) = (sign / hh.sqrt(), T::one() / rr.sqrt());
    let mut num = T::zero();
    for &(x, w, u, _) in &samples {
        let d = u * sh - reference(x) * sr;
        num += d * d * w;
    }
    Ok(num.sqrt())
}

/// Discrete relative L2 over time samples.
pub fn l2_error_history<T: Scalar>(samples: &[T], reference: &[T]) -> Result<T> {
    if samples.len() != reference.len() {
        return Err(IgaError::DimensionMismatch {
            expected: reference.len(),
            found: samples.len(),
        });
    }
    let num: T = samples
        .iter()
        .zip(reference)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    let den: T = reference.iter().map(|&b| b * b).sum();
    relative(num, den)
}

/// Static errors `(displacement, normal force)` against the sine solution.
pub fn static_errors<T: Scalar>(disc: &Discretization<T>) -> Result<(T, T)> {
    let u = disc.static_solution()?;
    let model = &disc.model;
    let ru = |x: T| {
        analytic_static_sine(model, x)
            .map(|r| r.0)
            .unwrap_or(T::nan())
    };
    let rn = |x: T| {
        analytic_static_sine(model, x)
            .map(|r| r.1)
            .unwrap_or(T::nan())
    };
    analytic_static_sine(model, T::zero())?;
    Ok((
        l2_error_field(&disc.space, &u, model.ea, &ru, Quantity::Displacement)?,
        l2_error_field(&disc.space, &u, model.ea, &rn, Quantity::NormalForce)?,
    ))
}

/// True for equally spaced breakpoints, straight geometry and unit weights.
pub fn is_uniform_mesh<T: Scalar>(space: &SplineSpace<T>) -> bool {
    let bps = space.knot_vector().breakpoints();
    if bps.len() < 2 || !space.has_unit_weights() || !space.is_linear_geometry() {
        return false;
    }
    let h = (bps[bps.len() - 1] - bps[0]) / T::of_usize(bps.len() - 1);
    let tol = T::lit(1e-10) * h;
    let interior_simple = space
        .knot_vector()
        .interior_breakpoints()
        .iter()
        .all(|&(_, m)| m == 1);
    interior_simple && bps.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= tol)
}

/// Expected outlier count on uniform meshes.
pub fn expected_outliers(p: usize) -> usize {
    if p.is_multiple_of(2) {
        p
    } else {
        p.saturating_sub(1)
    }
}

/// Discrete spectrum paired with analytic frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    pub omega_h: Vec<T>,
    pub omega_ref: Vec<T>,
    pub ratios: Vec<T>,
    pub outlier_flags: Vec<bool>,
    pub n_outliers: usize,
    /// Whether the spectrum came from the symmetric pair.
    pub symmetric: bool,
}

impl<T: Scalar> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.omega_h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_h.is_empty()
    }

    /// Ratios of the non-outlier modes.
    pub fn regular_ratios(&self) -> &[T] {
        &self.ratios[..self.len() - self.n_outliers]
    }

    /// Contiguous run of top modes with ratio above `threshold`.
    pub fn top_modes_above(&self, threshold: T) -> usize {
        self.ratios
            .iter()
            .rev()
            .take_while(|&&r| r > threshold)
            .count()
    }

    /// Fraction of modes with ratio at least `threshold`.
    pub fn fraction_at_least(&self, threshold: T) -> T {
        let k = self.ratios.iter().filter(|&&r| r >= threshold).count();
        T::of_usize(k) / T::of_usize(self.len().max(1))
    }
}

/// Squared frequencies of the scheme, ascending. Symmetric pair
/// `(K, M_scheme)` when the scheme is equivalent to one, otherwise the
/// real spectrum of `M^-1 K` of the integrated system.
pub fn eigenvalues<T: Scalar>(disc: &Discretization<T>) -> Result<(Vec<T>, bool)> {
    if disc.scheme.has_symmetric_equivalent() {
        let eig = sym_generalized_eig(&disc.galerkin.stiffness, &disc.symmetric_mass()?)?;
        Ok((eig.values, true))
    } else {
        let a = system_operator(disc)?;
        Ok((real_eigenvalues(&a, T::lit(SPECTRUM_IMAG_TOL))?, false))
    }
}

/// `M^-1 K` of the integrated system.
pub fn system_operator<T: Scalar>(disc: &Discretization<T>) -> Result<Matrix<T>> {
    let solver = MassSolver::new(&disc.system.mass)?;
    mass_inverse_times(&solver, &disc.system.stiffness)
}

/// Numerical spectrum of a scheme with analytic references and outlier
/// flags (uniform meshes only).
pub fn compute_spectrum<T: Scalar>(disc: &Discretization<T>) -> Result<Spectrum<T>> {
    let (lambda, symmetric) = eigenvalues(disc)?;
    let n = lambda.len();
    let mut omega_h = Vec::with_capacity(n);
    let mut omega_ref = Vec::with_capacity(n);
    let mut ratios = Vec::with_capacity(n);
    for (i, &l) in lambda.iter().enumerate() {
        if l < T::zero() {
            return Err(IgaError::NoConvergence(format!(
                "negative squared frequency {l} at mode {}",
                i + 1
            )));
        }
        let w = l.sqrt();
        let r = analytic_eigen(&disc.model, i + 1)?.omega;
        omega_h.push(w);
        omega_ref.push(r);
        ratios.push(w / r);
    }
    let n_outliers = if is_uniform_mesh(&disc.space) {
        expected_outliers(disc.space.degree()).min(n)
    } else {
        0
    };
    let outlier_flags = (0..n).map(|i| i >= n - n_outliers).collect();
    Ok(Spectrum {
        omega_h,
        omega_ref,
        ratios,
        outlier_flags,
        n_outliers,
        symmetric,
    })
}

/// Full-length coefficients of the `n`-th mode (1-based).
pub fn mode_shape<T: Scalar>(disc: &Discretization<T>, n: usize) -> Result<Vec<T>> {
    let n_free = disc.n_free();
    if n == 0 || n > n_free {
        return Err(IgaError::input(format!("mode {n} outside 1..={n_free}")));
    }
    let reduced = if disc.scheme.has_symmetric_equivalent() {
        let eig = sym_generalized_eig(&disc.galerkin.stiffness, &disc.symmetric_mass()?)?;
        eig.vectors.column(n - 1)
    } else {
        let a = system_operator(disc)?;
        let lambda = real_eigenvalues(&a, T::lit(SPECTRUM_IMAG_TOL))?;
        inverse_iteration(&a, lambda[n - 1])?
    };
    disc.system.expand(&reduced)
}

/// L2 error of the `n`-th mode against the analytic shape.
pub fn mode_error<T: Scalar>(disc: &Discretization<T>, n: usize) -> Result<T> {
    let coeffs = mode_shape(disc, n)?;
    let exact = analytic_eigen(&disc.model, n)?;
    l2_error_mode(&disc.space, &coeffs, &|x| exact.shape(x))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow<T> {
    pub n_el: usize,
    pub h_max: T,
    pub error: T,
}

/// Errors over a refinement sequence.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConvergenceTable<T> {
    pub rows: Vec<ConvergenceRow<T>>,
}

impl<T: Scalar> ConvergenceTable<T> {
    pub fn new() -> Self {
        Self { rows: Vec::new() }
    }

    pub fn push(&mut self, n_el: usize, h_max: T, error: T) {
        self.rows.push(ConvergenceRow { n_el, h_max, error });
    }

    pub fn slope(&self) -> Result<T> {
        convergence_rate(self)
    }
}

/// Least-squares slope of `log(error)` against `log(h)` over the last three
/// rows.
pub fn convergence_rate<T: Scalar>(table: &ConvergenceTable<T>) -> Result<T> {
    let rows = &table.rows;
    if rows.len() < 3 {
        return Err(IgaError::input(
            "convergence rate needs at least three rows",
        ));
    }
    let tail = &rows[rows.len() - 3..];
    if tail
        .iter()
        .any(|r| !(r.error > T::zero()) || !(r.h_max > T::zero()))
    {
        return Err(IgaError::input("errors and element sizes must be positive"));
    }
    let xs: Vec<T> = tail.iter().map(|r| r.h_max.ln()).collect();
    let ys: Vec<T> = tail.iter().map(|r| r.error.ln()).collect();
    let three = T::lit(3.0);
    let mx = xs.iter().copied().sum::<T>() / three;
    let my = ys.iter().copied().sum::<T>() / three;
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    if !(sxx > T::zero()) {
        return Err(IgaError::input("element sizes must differ"));
    }
    Ok(sxy / sxx)
}
