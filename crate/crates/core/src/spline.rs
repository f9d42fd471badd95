//! Knot vectors, B-spline and NURBS basis evaluation, refinement and the
//! standard mesh presets.

use std::str::FromStr;

use crate::error::{IgaError, Result};
use crate::linalg::{Lu, Matrix};
use crate::scalar::Scalar;

/// Highest supported polynomial degree.
pub const MAX_DEGREE: usize = 8;

/// Open, non-decreasing knot vector together with its degree.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector<T> {
    knots: Vec<T>,
    degree: usize,
}

impl<T: Scalar> KnotVector<T> {
    /// Validates and wraps a knot sequence.
    pub fn new(knots: Vec<T>, degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(IgaError::input(format!(
                "degree {degree} exceeds the cap {MAX_DEGREE}"
            )));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(IgaError::input(format!(
                "knot vector of length {} too short for degree {degree}",
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(IgaError::input("knot values must be finite"));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(IgaError::input("knots must be non-decreasing"));
        }
        let first = knots[0];
        let last = knots[knots.len() - 1];
        if !(last > first) {
            return Err(IgaError::input("knot vector spans an empty domain"));
        }
        let lead = knots.iter().take_while(|&&k| k == first).count();
        let trail = knots.iter().rev().take_while(|&&k| k == last).count();
        if lead != degree + 1 || trail != degree + 1 {
            return Err(IgaError::input(format!(
                "knot vector is not open: end multiplicities {lead}/{trail}, expected {}",
                degree + 1
            )));
        }
        let kv = Self { knots, degree };
        for (x, m) in kv.interior_breakpoints() {
            if m > degree {
                return Err(IgaError::input(format!(
                    "interior knot {x} has multiplicity {m} > degree {degree}"
                )));
            }
        }
        Ok(kv)
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions `n = len - p - 1`.
    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn first(&self) -> T {
        self.knots[0]
    }

    pub fn last(&self) -> T {
        self.knots[self.knots.len() - 1]
    }

    /// Distinct knot values in increasing order.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut out: Vec<T> = Vec::new();
        for &k in &self.knots {
            if out.last().is_none_or(|&l| k > l) {
                out.push(k);
            }
        }
        out
    }

    /// Interior breakpoints with their multiplicities.
    pub fn interior_breakpoints(&self) -> Vec<(T, usize)> {
        let mut out: Vec<(T, usize)> = Vec::new();
        let inner = &self.knots[self.degree + 1..self.knots.len() - self.degree - 1];
        for &k in inner {
            match out.last_mut() {
                Some((v, m)) if *v == k => *m += 1,
                _ => out.push((k, 1)),
            }
        }
        out
    }

    /// Nonempty knot spans as `(span index, lower knot, upper knot)`.
    pub fn spans(&self) -> Vec<(usize, T, T)> {
        let n = self.num_basis();
        (self.degree..n)
            .filter(|&i| self.knots[i + 1] > self.knots[i])
            .map(|i| (i, self.knots[i], self.knots[i + 1]))
            .collect()
    }

    pub fn num_elements(&self) -> usize {
        self.spans().len()
    }

    /// Greville abscissae `(xi_{i+1} + ... + xi_{i+p}) / p`.
    pub fn greville(&self) -> Vec<T> {
        let p = self.degree;
        if p == 0 {
            return (0..self.num_basis())
                .map(|i| (self.knots[i] + self.knots[i + 1]) * T::lit(0.5))
                .collect();
        }
        (0..self.num_basis())
            .map(|i| self.knots[i + 1..=i + p].iter().copied().sum::<T>() / T::of_usize(p))
            .collect()
    }
}

/// Builds an open knot vector with simple interior knots.
pub fn make_open_knot_vector<T: Scalar>(breakpoints: &[T], degree: usize) -> Result<KnotVector<T>> {
    if breakpoints.len() < 2 {
        return Err(IgaError::input("at least two breakpoints are required"));
    }
    if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(IgaError::input("breakpoints must be strictly increasing"));
    }
    let mut knots = Vec::with_capacity(breakpoints.len() + 2 * degree);
    knots.extend(std::iter::repeat_n(breakpoints[0], degree + 1));
    knots.extend_from_slice(&breakpoints[1..breakpoints.len() - 1]);
    knots.extend(std::iter::repeat_n(
        breakpoints[breakpoints.len() - 1],
        degree + 1,
    ));
    KnotVector::new(knots, degree)
}

/// Open knot vector with explicit interior multiplicities.
pub fn make_knot_vector_with_multiplicity<T: Scalar>(
    breakpoints: &[T],
    multiplicities: &[usize],
    degree: usize,
) -> Result<KnotVector<T>> {
    if breakpoints.len() < 2 || multiplicities.len() + 2 != breakpoints.len() {
        return Err(IgaError::input(
            "one multiplicity per interior breakpoint is required",
        ));
    }
    if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(IgaError::input("breakpoints must be strictly increasing"));
    }
    let mut knots = vec![breakpoints[0]; degree + 1];
    for (&b, &m) in breakpoints[1..breakpoints.len() - 1]
        .iter()
        .zip(multiplicities)
    {
        knots.extend(std::iter::repeat_n(b, m));
    }
    knots.extend(std::iter::repeat_n(
        breakpoints[breakpoints.len() - 1],
        degree + 1,
    ));
    KnotVector::new(knots, degree)
}

/// Index `i` with `xi_i <= xi < xi_{i+1}`; `xi` at the right end maps to the
/// last nonempty span.
pub fn find_span<T: Scalar>(kv: &KnotVector<T>, xi: T) -> Result<usize> {
    let (a, b) = (kv.first(), kv.last());
    if !(xi >= a && xi <= b) {
        return Err(IgaError::Domain {
            value: xi.to_f64_lossy(),
            lo: a.to_f64_lossy(),
            hi: b.to_f64_lossy(),
        });
    }
    let n = kv.num_basis();
    let k = kv.knots();
    if xi >= k[n] {
        // last nonempty span
        let mut i = n - 1;
        while k[i] == k[i + 1] {
            i -= 1;
        }
        return Ok(i);
    }
    // binary search over [p, n)
    let (mut lo, mut hi) = (kv.degree(), n);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xi < k[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

/// Values and parametric first derivatives of the `p + 1` basis functions
/// that are nonzero on one span.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisEval<T> {
    /// Knot-span index; basis function `k` of this evaluation has global
    /// index `span - p + k`.
    pub span: usize,
    pub values: Vec<T>,
    /// Derivatives with respect to the parameter.
    pub derivs: Vec<T>,
    /// Weighting function `W`.
    pub weight_fn: T,
    /// `dW/dxi`.
    pub weight_fn_deriv: T,
    /// `dx/dxi`; 1 for a bare B-spline evaluation.
    pub jacobian: T,
}

impl<T: Scalar> BasisEval<T> {
    pub fn first_index(&self) -> usize {
        self.span + 1 - self.values.len()
    }

    /// Derivatives with respect to the physical coordinate.
    pub fn physical_derivs(&self) -> Vec<T> {
        self.derivs.iter().map(|&d| d / self.jacobian).collect()
    }

    /// Scatters the local values into a vector of length `n`.
    pub fn dense_values(&self, n: usize) -> Vec<T> {
        let mut out = vec![T::zero(); n];
        let f = self.first_index();
        out[f..f + self.values.len()].copy_from_slice(&self.values);
        out
    }
}

/// B-spline values by the Cox-de Boor recursion and derivatives by the
/// two-term degree-reduction formula.
pub fn eval_bspline<T: Scalar>(kv: &KnotVector<T>, xi: T) -> Result<BasisEval<T>> {
    let s = find_span(kv, xi)?;
    let p = kv.degree();
    let k = kv.knots();
    let mut n = vec![T::zero(); p + 1];
    let mut lower = vec![T::zero(); p.max(1)];
    let mut left = vec![T::zero(); p + 1];
    let mut right = vec![T::zero(); p + 1];
    n[0] = T::one();
    for j in 1..=p {
        if j == p {
            lower[..p].copy_from_slice(&n[..p]);
        }
        left[j] = xi - k[s + 1 - j];
        right[j] = k[s + j] - xi;
        let mut saved = T::zero();
        for r in 0..j {
            let den = right[r + 1] + left[j - r];
            let temp = if den == T::zero() {
                T::zero()
            } else {
                n[r] / den
            };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    let mut d = vec![T::zero(); p + 1];
    if p > 0 {
        let pf = T::of_usize(p);
        for (j, dj) in d.iter_mut().enumerate() {
            let i = s - p + j;
            let mut v = T::zero();
            if j >= 1 {
                let den = k[i + p] - k[i];
                if den > T::zero() {
                    v += pf / den * lower[j - 1];
                }
            }
            if j < p {
                let den = k[i + p + 1] - k[i + 1];
                if den > T::zero() {
                    v -= pf / den * lower[j];
                }
            }
            *dj = v;
        }
    }
    Ok(BasisEval {
        span: s,
        values: n,
        derivs: d,
        weight_fn: T::one(),
        weight_fn_deriv: T::zero(),
        jacobian: T::one(),
    })
}

/// Discretization space: knot vector, weights and physical control values.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineSpace<T> {
    kv: KnotVector<T>,
    weights: Vec<T>,
    geometry: Vec<T>,
}

impl<T: Scalar> SplineSpace<T> {
    pub fn new(kv: KnotVector<T>, weights: Vec<T>, geometry: Vec<T>) -> Result<Self> {
        let n = kv.num_basis();
        if weights.len() != n {
            return Err(IgaError::DimensionMismatch {
                expected: n,
                found: weights.len(),
            });
        }
        if geometry.len() != n {
            return Err(IgaError::DimensionMismatch {
                expected: n,
                found: geometry.len(),
            });
        }
        if weights.iter().any(|&w| !(w > T::zero()) || !w.is_finite()) {
            return Err(IgaError::input("weights must be positive and finite"));
        }
        if geometry.windows(2).any(|w| w[1] < w[0]) || geometry.iter().any(|g| !g.is_finite()) {
            return Err(IgaError::input(
                "geometry control values must be non-decreasing",
            ));
        }
        if !(geometry[n - 1] > geometry[0]) {
            return Err(IgaError::Geometry("geometry has zero length".into()));
        }
        Ok(Self {
            kv,
            weights,
            geometry,
        })
    }

    /// Unit weights and control values at the Greville abscissae mapped
    /// linearly onto `[0, length]`.
    pub fn linear(kv: KnotVector<T>, length: T) -> Result<Self> {
        let (a, b) = (kv.first(), kv.last());
        let geometry = kv
            .greville()
            .into_iter()
            .map(|g| (g - a) / (b - a) * length)
            .collect();
        let n = kv.num_basis();
        Self::new(kv, vec![T::one(); n], geometry)
    }

    pub fn knot_vector(&self) -> &KnotVector<T> {
        &self.kv
    }

    pub fn degree(&self) -> usize {
        self.kv.degree()
    }

    pub fn num_basis(&self) -> usize {
        self.kv.num_basis()
    }

    pub fn num_elements(&self) -> usize {
        self.kv.num_elements()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn geometry(&self) -> &[T] {
        &self.geometry
    }

    pub fn has_unit_weights(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|&w| w == w0)
    }

    /// Physical length `x(end) - x(start)`.
    pub fn length(&self) -> T {
        self.geometry[self.geometry.len() - 1] - self.geometry[0]
    }

    /// Physical coordinate at parameter `xi`.
    pub fn map(&self, xi: T) -> Result<T> {
        let e = eval_nurbs(self, xi)?;
        let f = e.first_index();
        Ok(e.values
            .iter()
            .enumerate()
            .map(|(k, &r)| r * self.geometry[f + k])
            .sum())
    }

    /// Largest physical element length.
    pub fn h_max(&self) -> Result<T> {
        let mut h = T::zero();
        for (_, a, b) in self.kv.spans() {
            h = h.max(self.map(b)? - self.map(a)?);
        }
        Ok(h)
    }

    /// Inverse of the geometry map by bisection (the map is monotone).
    pub fn parameter_at(&self, x: T) -> Result<T> {
        let (x0, x1) = (self.geometry[0], self.geometry[self.geometry.len() - 1]);
        let tol = (x1 - x0).abs() * T::epsilon() * T::lit(4.0);
        if x < x0 - tol || x > x1 + tol {
            return Err(IgaError::Domain {
                value: x.to_f64_lossy(),
                lo: x0.to_f64_lossy(),
                hi: x1.to_f64_lossy(),
            });
        }
        let (mut lo, mut hi) = (self.kv.first(), self.kv.last());
        if x <= x0 {
            return Ok(lo);
        }
        if x >= x1 {
            return Ok(hi);
        }
        if self.has_unit_weights() && self.is_linear_geometry() {
            let t = (x - x0) / (x1 - x0);
            return Ok(lo + t * (hi - lo));
        }
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.map(mid)? < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo + hi) * T::lit(0.5))
    }

    /// True when control values sit at the scaled Greville abscissae.
    pub fn is_linear_geometry(&self) -> bool {
        let g = self.kv.greville();
        let (a, b) = (self.kv.first(), self.kv.last());
        let (x0, len) = (self.geometry[0], self.length());
        let tol = len * T::lit(1e-13).max(T::epsilon() * T::lit(8.0));
        g.iter()
            .zip(&self.geometry)
            .all(|(&gi, &xi)| ((gi - a) / (b - a) * len + x0 - xi).abs() <= tol)
    }
}

/// Rational basis `R_i = N_i w_i / W`, derivatives by the quotient rule and
/// the geometry jacobian `dx/dxi = sum R_i' X_i`.
pub fn eval_nurbs<T: Scalar>(space: &SplineSpace<T>, xi: T) -> Result<BasisEval<T>> {
    let mut e = eval_bspline(&space.kv, xi)?;
    let f = e.first_index();
    let w = &space.weights[f..f + e.values.len()];
    let wf: T = e.values.iter().zip(w).map(|(&n, &wi)| n * wi).sum();
    let dwf: T = e.derivs.iter().zip(w).map(|(&d, &wi)| d * wi).sum();
    assert!(wf > T::zero(), "weighting function must be positive");
    let mut r = Vec::with_capacity(e.values.len());
    let mut dr = Vec::with_capacity(e.values.len());
    for ((&n, &d), &wk) in e.values.iter().zip(&e.derivs).zip(w) {
        r.push(n * wk / wf);
        dr.push((d * wk * wf - n * wk * dwf) / (wf * wf));
    }
    let jac = dr
        .iter()
        .enumerate()
        .map(|(k, &d)| d * space.geometry[f + k])
        .sum();
    e.values = r;
    e.derivs = dr;
    e.weight_fn = wf;
    e.weight_fn_deriv = dwf;
    e.jacobian = jac;
    Ok(e)
}

/// Splits each nonempty span into `m` equal subspans. Existing interior
/// multiplicities are kept, new knots are simple.
pub fn h_refine<T: Scalar>(kv: &KnotVector<T>, m: usize) -> Result<KnotVector<T>> {
    if m == 0 {
        return Err(IgaError::input("refinement factor must be at least 1"));
    }
    let p = kv.degree();
    let interior = kv.interior_breakpoints();
    let bps = kv.breakpoints();
    let mut knots = vec![kv.first(); p + 1];
    for (idx, w) in bps.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        for s in 1..m {
            knots.push(a + (b - a) * T::of_usize(s) / T::of_usize(m));
        }
        if idx + 2 < bps.len() {
            let (_, mult) = interior[idx];
            knots.extend(std::iter::repeat_n(b, mult));
        }
    }
    knots.extend(std::iter::repeat_n(kv.last(), p + 1));
    KnotVector::new(knots, p)
}

/// Elevates a linear knot vector to degree `p` with simple interior knots
/// (order elevation first, knot insertion afterwards).
pub fn k_refine<T: Scalar>(kv_linear: &KnotVector<T>, p: usize) -> Result<KnotVector<T>> {
    if kv_linear.degree() != 1 {
        return Err(IgaError::input(format!(
            "k-refinement expects a degree-1 knot vector, got degree {}",
            kv_linear.degree()
        )));
    }
    if p == 0 {
        return Err(IgaError::input("target degree must be at least 1"));
    }
    make_open_knot_vector(&kv_linear.breakpoints(), p)
}

/// Mesh families used in the numerical studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeshKind {
    /// Five uniform initial spans.
    A,
    /// Five non-uniform spans, two of equal size.
    B,
    /// Five non-uniform spans, all distinct.
    C,
}

impl MeshKind {
    /// Initial breakpoints on `[0, 1]`.
    pub fn breakpoints(self) -> [f64; 6] {
        match self {
            MeshKind::A => [0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            MeshKind::B => [0.0, 0.3, 0.5, 0.7, 0.8, 1.0],
            MeshKind::C => [0.0, 0.25, 0.45, 0.6, 0.7, 1.0],
        }
    }
}

impl FromStr for MeshKind {
    type Err = IgaError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(MeshKind::A),
            "B" | "b" => Ok(MeshKind::B),
            "C" | "c" => Ok(MeshKind::C),
            other => Err(IgaError::input(format!("unknown mesh preset '{other}'"))),
        }
    }
}

/// Linear-geometry space from arbitrary initial breakpoints on `[0, 1]`,
/// k-refined to `p` and h-refined by `m`.
pub fn mesh_from_breakpoints<T: Scalar>(
    breakpoints: &[T],
    p: usize,
    m: usize,
    length: T,
) -> Result<SplineSpace<T>> {
    let lin = make_open_knot_vector(breakpoints, 1)?;
    let kv = h_refine(&k_refine(&lin, p)?, m)?;
    SplineSpace::linear(kv, length)
}

pub fn mesh_preset<T: Scalar>(
    kind: MeshKind,
    p: usize,
    m: usize,
    length: T,
) -> Result<SplineSpace<T>> {
    let bps: Vec<T> = kind.breakpoints().iter().map(|&b| T::lit(b)).collect();
    mesh_from_breakpoints(&bps, p, m, length)
}

/// `n_el` uniform elements on `[0, length]`.
pub fn uniform_mesh<T: Scalar>(p: usize, n_el: usize, length: T) -> Result<SplineSpace<T>> {
    if n_el == 0 {
        return Err(IgaError::input("at least one element is required"));
    }
    let bps: Vec<T> = (0..=n_el)
        .map(|i| T::of_usize(i) / T::of_usize(n_el))
        .collect();
    let kv = make_open_knot_vector(&bps, p)?;
    SplineSpace::linear(kv, length)
}

/// Weights of the non-unit-weight example mesh (degree 2, four spans).
pub const WEIGHTED_BASE_WEIGHTS: [f64; 6] = [1.0, 1.5, 1.05, 1.25, 0.95, 1.0];

/// The degree-2 weighted base mesh with geometry at the Greville abscissae.
pub fn weighted_base<T: Scalar>(length: T) -> Result<SplineSpace<T>> {
    let bps: Vec<T> = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&b| T::lit(b))
        .collect();
    let kv = make_open_knot_vector(&bps, 2)?;
    let geometry = kv.greville().into_iter().map(|g| g * length).collect();
    SplineSpace::new(
        kv,
        WEIGHTED_BASE_WEIGHTS.iter().map(|&w| T::lit(w)).collect(),
        geometry,
    )
}

/// The weighted mesh at degree `p >= 2` refined `m` times per initial span.
/// The original breakpoints keep multiplicity `p - 1` so the weighting
/// function and geometry of the base mesh are represented exactly.
pub fn weighted_preset<T: Scalar>(p: usize, m: usize, length: T) -> Result<SplineSpace<T>> {
    if p < 2 {
        return Err(IgaError::input("the weighted mesh requires degree >= 2"));
    }
    let base = weighted_base(length)?;
    let coarse = base.knot_vector().breakpoints();
    let mut bps = Vec::new();
    let mut mult = Vec::new();
    for (i, w) in coarse.windows(2).enumerate() {
        for s in 0..m {
            if i == 0 && s == 0 {
                bps.push(w[0]);
                continue;
            }
            bps.push(w[0] + (w[1] - w[0]) * T::of_usize(s) / T::of_usize(m));
            mult.push(if s == 0 { p - 1 } else { 1 });
        }
    }
    bps.push(coarse[coarse.len() - 1]);
    let kv = make_knot_vector_with_multiplicity(&bps, &mult, p)?;
    project_space(&base, kv)
}

/// Represents the weighting function `W` and the weighted geometry `W x` of
/// `space` in the finer space `target` by interpolation at the Greville
/// abscissae. Exact whenever `target` contains the source space.
pub fn project_space<T: Scalar>(
    space: &SplineSpace<T>,
    target: KnotVector<T>,
) -> Result<SplineSpace<T>> {
    let n = target.num_basis();
    let g = target.greville();
    let mut a = Matrix::zeros(n, n);
    let mut rhs_w = vec![T::zero(); n];
    let mut rhs_wx = vec![T::zero(); n];
    for (i, &xi) in g.iter().enumerate() {
        let e = eval_bspline(&target, xi)?;
        let f = e.first_index();
        for (k, &v) in e.values.iter().enumerate() {
            a[(i, f + k)] = v;
        }
        let src = eval_bspline(space.knot_vector(), xi)?;
        let sf = src.first_index();
        for (k, &v) in src.values.iter().enumerate() {
            rhs_w[i] += v * space.weights[sf + k];
            rhs_wx[i] += v * space.weights[sf + k] * space.geometry[sf + k];
        }
    }
    let lu = Lu::factor(&a)?;
    let w = lu.solve(&rhs_w)?;
    let wx = lu.solve(&rhs_wx)?;
    let geometry = wx.iter().zip(&w).map(|(&a, &b)| a / b).collect();
    SplineSpace::new(target, w, geometry)
}
