//! Flat discretized domains (circle/torus or reflecting interval/rectangle),
//! finite-difference operators and quadrature.
//!
//! Layout is staggered: [`Grid::gradient`] returns one-sided differences that
//! live on the faces between neighbouring nodes, and [`Grid::divergence`] maps
//! face values back to nodes. The two stencils are exact negative adjoints of
//! each other under the quadrature inner products, so the discrete Laplacian
//! `divergence ∘ gradient` is the compact three-point stencil and discrete
//! integration by parts holds to round-off.
//!
//! Pointwise formulas (Hessian quadratic forms, log-gradients, criterion
//! tensors) use node-centred central differences instead, see
//! [`Grid::nodal_gradient`] and [`Grid::smooth_hessian`].
//!
//! Reflecting axes place nodes on both end points (`h = extent / (n - 1)`),
//! use trapezoid weights and apply the ghost-point mirror rule, which is the
//! zero-flux condition for the staggered operators.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum number of nodes per axis.
pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    /// Index wraparound (circle / flat torus).
    Periodic,
    /// Zero-flux walls with mirrored ghost nodes.
    Reflecting,
}

/// Curvature of the base space. Only the flat case exists: every Ricci term
/// in the formulas evaluates to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlatCurvature;

impl FlatCurvature {
    /// `Ric(v, v)` for a flat metric.
    #[inline]
    pub fn ricci<T: Real>(&self, _v: [T; 2]) -> T {
        T::zero()
    }

    /// Ricci tensor as a matrix (identically zero).
    #[inline]
    pub fn ricci_matrix<T: Real>(&self) -> [[T; 2]; 2] {
        [[T::zero(); 2]; 2]
    }
}

/// Domain descriptor accepted by [`build_grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig<T> {
    pub dim: usize,
    pub topology: Topology,
    pub n: [usize; 2],
    pub extent: [T; 2],
    pub origin: [T; 2],
}

impl<T: Real> GridConfig<T> {
    pub fn line(topology: Topology, extent: T, n: usize) -> Self {
        Self {
            dim: 1,
            topology,
            n: [n, 1],
            extent: [extent, T::one()],
            origin: [T::zero(); 2],
        }
    }

    pub fn plane(topology: Topology, extent: [T; 2], n: [usize; 2]) -> Self {
        Self {
            dim: 2,
            topology,
            n,
            extent,
            origin: [T::zero(); 2],
        }
    }

    pub fn with_origin(mut self, origin: [T; 2]) -> Self {
        self.origin = origin;
        self
    }
}

/// Builds a grid after validating the descriptor.
pub fn build_grid<T: Real>(config: &GridConfig<T>) -> Result<Grid<T>> {
    Grid::new(config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    dim: usize,
    topology: Topology,
    n: [usize; 2],
    extent: [T; 2],
    origin: [T; 2],
    h: [T; 2],
    axis_weights: [Vec<T>; 2],
    curvature: FlatCurvature,
}

impl<T: Real> Grid<T> {
    pub fn new(config: &GridConfig<T>) -> Result<Self> {
        if config.dim != 1 && config.dim != 2 {
            return Err(Error::Input(format!("dim must be 1 or 2, got {}", config.dim)));
        }
        let mut n = [1usize; 2];
        let mut extent = [T::one(); 2];
        let mut h = [T::one(); 2];
        let mut axis_weights: [Vec<T>; 2] = [vec![T::one()], vec![T::one()]];
        for axis in 0..config.dim {
            let na = config.n[axis];
            let ea = config.extent[axis];
            if na < MIN_NODES {
                return Err(Error::Input(format!(
                    "axis {axis}: need at least {MIN_NODES} nodes, got {na}"
                )));
            }
            if !(ea > T::zero()) || !ea.is_finite() {
                return Err(Error::Input(format!("axis {axis}: extent must be positive")));
            }
            let ha = match config.topology {
                Topology::Periodic => ea / T::from_count(na),
                Topology::Reflecting => ea / T::from_count(na - 1),
            };
            let mut w = vec![ha; na];
            if config.topology == Topology::Reflecting {
                w[0] = ha / T::lit(2.0);
                w[na - 1] = ha / T::lit(2.0);
            }
            n[axis] = na;
            extent[axis] = ea;
            h[axis] = ha;
            axis_weights[axis] = w;
        }
        Ok(Self {
            dim: config.dim,
            topology: config.topology,
            n,
            extent,
            origin: config.origin,
            h,
            axis_weights,
            curvature: FlatCurvature,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Nodes per axis; the unused second axis of a 1D grid reports 1.
    pub fn shape(&self) -> [usize; 2] {
        self.n
    }

    pub fn spacing(&self) -> [T; 2] {
        self.h
    }

    pub fn extent(&self) -> [T; 2] {
        self.extent
    }

    pub fn origin(&self) -> [T; 2] {
        self.origin
    }

    pub fn curvature(&self) -> FlatCurvature {
        self.curvature
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn volume(&self) -> T {
        (0..self.dim).fold(T::one(), |acc, a| acc * self.extent[a])
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n[1] + j
    }

    /// Per-axis indices of a flat node index.
    #[inline]
    pub fn indices(&self, idx: usize) -> [usize; 2] {
        [idx / self.n[1], idx % self.n[1]]
    }

    /// Physical coordinates of a node.
    pub fn coords(&self, idx: usize) -> [T; 2] {
        let [i, j] = self.indices(idx);
        let x = self.origin[0] + T::from_count(i) * self.h[0];
        let y = if self.dim == 2 {
            self.origin[1] + T::from_count(j) * self.h[1]
        } else {
            T::zero()
        };
        [x, y]
    }

    /// Quadrature weight of a node (product trapezoid / periodic rectangle rule).
    #[inline]
    pub fn weight(&self, idx: usize) -> T {
        let [i, j] = self.indices(idx);
        self.axis_weights[0][i] * self.axis_weights[1][j]
    }

    pub fn weights(&self) -> ScalarField<T> {
        ScalarField::new((0..self.len()).map(|k| self.weight(k)).collect())
    }

    #[inline]
    fn stride(&self, axis: usize) -> usize {
        if axis == 0 {
            self.n[1]
        } else {
            1
        }
    }

    /// Neighbour `k` steps along `axis` (|k| ≤ 1 beyond the walls), with
    /// wraparound or mirror reflection.
    #[inline]
    pub fn offset(&self, idx: usize, axis: usize, k: isize) -> usize {
        let pos = self.indices(idx)[axis] as isize;
        let n = self.n[axis] as isize;
        let target = pos + k;
        let mapped = match self.topology {
            Topology::Periodic => target.rem_euclid(n),
            Topology::Reflecting => {
                if target < 0 {
                    -target
                } else if target >= n {
                    2 * (n - 1) - target
                } else {
                    target
                }
            }
        };
        (idx as isize + (mapped - pos) * self.stride(axis) as isize) as usize
    }

    /// Whether the face between `idx` and its forward neighbour along `axis`
    /// carries flux (walls of a reflecting grid do not).
    #[inline]
    pub fn face_active(&self, idx: usize, axis: usize) -> bool {
        match self.topology {
            Topology::Periodic => true,
            Topology::Reflecting => self.indices(idx)[axis] + 1 < self.n[axis],
        }
    }

    /// Quadrature weight of the face between `idx` and its forward neighbour.
    #[inline]
    pub fn face_weight(&self, idx: usize, axis: usize) -> T {
        if !self.face_active(idx, axis) {
            return T::zero();
        }
        let [i, j] = self.indices(idx);
        if axis == 0 {
            self.h[0] * self.axis_weights[1][j]
        } else {
            self.axis_weights[0][i] * self.h[1]
        }
    }

    #[inline]
    fn on_wall(&self, idx: usize, axis: usize) -> Option<bool> {
        if self.topology != Topology::Reflecting {
            return None;
        }
        let pos = self.indices(idx)[axis];
        if pos == 0 {
            Some(false)
        } else if pos + 1 == self.n[axis] {
            Some(true)
        } else {
            None
        }
    }

    pub fn check(&self, f: &ScalarField<T>) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                found: f.len(),
            });
        }
        Ok(())
    }

    fn check_vector(&self, v: &VectorField<T>) -> Result<()> {
        if v.comps.len() != self.dim {
            return Err(Error::Input(format!(
                "vector field has {} components, grid dimension is {}",
                v.comps.len(),
                self.dim
            )));
        }
        for c in &v.comps {
            if c.len() != self.len() {
                return Err(Error::ShapeMismatch {
                    expected: self.len(),
                    found: c.len(),
                });
            }
        }
        Ok(())
    }

    pub fn constant(&self, value: T) -> ScalarField<T> {
        ScalarField::new(vec![value; self.len()])
    }

    /// Samples a function of the node coordinates.
    pub fn sample(&self, f: impl Fn([T; 2]) -> T) -> ScalarField<T> {
        ScalarField::new((0..self.len()).map(|k| f(self.coords(k))).collect())
    }

    // ---------------------------------------------------------------------
    // quadrature

    pub fn integrate(&self, f: &ScalarField<T>) -> Result<T> {
        self.check(f)?;
        Ok(f.values.iter().enumerate().map(|(k, &v)| self.weight(k) * v).sum())
    }

    pub fn l2_inner(&self, f: &ScalarField<T>, g: &ScalarField<T>) -> Result<T> {
        self.check(f)?;
        self.check(g)?;
        Ok(f.values
            .iter()
            .zip(&g.values)
            .enumerate()
            .map(|(k, (&a, &b))| self.weight(k) * a * b)
            .sum())
    }

    /// Face-quadrature inner product of two staggered vector fields.
    pub fn face_inner(&self, u: &VectorField<T>, v: &VectorField<T>) -> Result<T> {
        self.check_vector(u)?;
        self.check_vector(v)?;
        if u.location != Location::Faces || v.location != Location::Faces {
            return Err(Error::Input("face_inner expects face-located fields".into()));
        }
        let mut acc = T::zero();
        for a in 0..self.dim {
            for k in 0..self.len() {
                acc += self.face_weight(k, a) * u.comps[a][k] * v.comps[a][k];
            }
        }
        Ok(acc)
    }

    // ---------------------------------------------------------------------
    // staggered operators

    /// Forward differences on faces.
    pub fn gradient(&self, f: &ScalarField<T>) -> Result<VectorField<T>> {
        self.check(f)?;
        let comps = (0..self.dim).map(|a| self.face_diff(&f.values, a)).collect();
        Ok(VectorField {
            comps,
            location: Location::Faces,
        })
    }

    fn face_diff(&self, f: &[T], axis: usize) -> Vec<T> {
        let h = self.h[axis];
        (0..self.len())
            .map(|k| {
                if self.face_active(k, axis) {
                    (f[self.offset(k, axis, 1)] - f[k]) / h
                } else {
                    T::zero()
                }
            })
            .collect()
    }

    /// Conservative divergence of a face field; exact negative adjoint of
    /// [`Grid::gradient`].
    pub fn divergence(&self, v: &VectorField<T>) -> Result<ScalarField<T>> {
        self.check_vector(v)?;
        if v.location != Location::Faces {
            return Err(Error::Input("divergence expects a face-located field".into()));
        }
        let mut out = vec![T::zero(); self.len()];
        for a in 0..self.dim {
            self.accumulate_div(&v.comps[a], a, &mut out);
        }
        Ok(ScalarField::new(out))
    }

    fn accumulate_div(&self, flux: &[T], axis: usize, out: &mut [T]) {
        for (k, o) in out.iter_mut().enumerate() {
            let pos = self.indices(k)[axis];
            let right = if self.face_active(k, axis) { flux[k] } else { T::zero() };
            let left = match self.topology {
                Topology::Periodic => flux[self.offset(k, axis, -1)],
                Topology::Reflecting => {
                    if pos == 0 {
                        T::zero()
                    } else {
                        flux[k - self.stride(axis)]
                    }
                }
            };
            *o += (right - left) / self.axis_weights[axis][pos];
        }
    }

    /// `divergence(gradient(f))`.
    pub fn laplacian(&self, f: &ScalarField<T>) -> Result<ScalarField<T>> {
        self.divergence(&self.gradient(f)?)
    }

    /// Mirror-rule Hessian; diagonal entries are the per-axis compact second
    /// differences (their sum is bit-identical to [`Grid::laplacian`]), the
    /// mixed entry is the central-central stencil.
    pub fn hessian_field(&self, f: &ScalarField<T>) -> Result<SymMatrixField<T>> {
        self.check(f)?;
        let diag: Vec<Vec<T>> = (0..self.dim)
            .map(|a| {
                let mut out = vec![T::zero(); self.len()];
                self.accumulate_div(&self.face_diff(&f.values, a), a, &mut out);
                out
            })
            .collect();
        if self.dim == 1 {
            return Ok(SymMatrixField {
                dim: 1,
                comps: vec![diag[0].clone()],
            });
        }
        let four = T::lit(4.0) * self.h[0] * self.h[1];
        let fv = &f.values;
        let xy = (0..self.len())
            .map(|k| {
                let xp = self.offset(k, 0, 1);
                let xm = self.offset(k, 0, -1);
                (fv[self.offset(xp, 1, 1)] - fv[self.offset(xp, 1, -1)]
                    - fv[self.offset(xm, 1, 1)]
                    + fv[self.offset(xm, 1, -1)])
                    / four
            })
            .collect();
        Ok(SymMatrixField {
            dim: 2,
            comps: vec![diag[0].clone(), xy, diag[1].clone()],
        })
    }

    // ---------------------------------------------------------------------
    // node-centred operators

    /// Central differences at nodes (mirror rule at walls, which makes the
    /// normal component vanish there).
    pub fn nodal_gradient(&self, f: &ScalarField<T>) -> Result<VectorField<T>> {
        self.check(f)?;
        let comps = (0..self.dim)
            .map(|a| {
                let two_h = T::lit(2.0) * self.h[a];
                (0..self.len())
                    .map(|k| (f.values[self.offset(k, a, 1)] - f.values[self.offset(k, a, -1)]) / two_h)
                    .collect()
            })
            .collect();
        Ok(VectorField {
            comps,
            location: Location::Nodes,
        })
    }

    /// Distance in nodes from `idx` to the nearest wall along `axis`
    /// (`usize::MAX` on periodic grids).
    fn wall_distance(&self, idx: usize, axis: usize) -> usize {
        if self.topology != Topology::Reflecting {
            return usize::MAX;
        }
        let pos = self.indices(idx)[axis];
        pos.min(self.n[axis] - 1 - pos)
    }

    fn smooth_d1(&self, f: &[T], axis: usize) -> Vec<T> {
        let h = self.h[axis];
        let two_h = T::lit(2.0) * h;
        let twelve_h = T::lit(12.0) * h;
        let s = self.stride(axis);
        let at = |k: usize, d: isize| f[self.offset(k, axis, d)];
        (0..self.len())
            .map(|k| match self.on_wall(k, axis) {
                Some(false) => (T::lit(-3.0) * f[k] + T::lit(4.0) * f[k + s] - f[k + 2 * s]) / two_h,
                Some(true) => (T::lit(3.0) * f[k] - T::lit(4.0) * f[k - s] + f[k - 2 * s]) / two_h,
                None if self.wall_distance(k, axis) < 2 => (at(k, 1) - at(k, -1)) / two_h,
                None => (T::lit(8.0) * (at(k, 1) - at(k, -1)) - at(k, 2) + at(k, -2)) / twelve_h,
            })
            .collect()
    }

    fn smooth_d2(&self, f: &[T], axis: usize) -> Vec<T> {
        let h2 = self.h[axis] * self.h[axis];
        let s = self.stride(axis);
        let (two, four, five) = (T::lit(2.0), T::lit(4.0), T::lit(5.0));
        let at = |k: usize, d: isize| f[self.offset(k, axis, d)];
        (0..self.len())
            .map(|k| match self.on_wall(k, axis) {
                Some(false) => (two * f[k] - five * f[k + s] + four * f[k + 2 * s] - f[k + 3 * s]) / h2,
                Some(true) => (two * f[k] - five * f[k - s] + four * f[k - 2 * s] - f[k - 3 * s]) / h2,
                None if self.wall_distance(k, axis) < 2 => (at(k, 1) - two * f[k] + at(k, -1)) / h2,
                None => {
                    (T::lit(16.0) * (at(k, 1) + at(k, -1)) - T::lit(30.0) * f[k] - at(k, 2) - at(k, -2))
                        / (T::lit(12.0) * h2)
                }
            })
            .collect()
    }

    /// Fourth-order central differences away from walls, second-order central
    /// next to them and one-sided second-order closures on them. Used for
    /// coefficient fields (functions of ρ, μ) that need not satisfy a zero
    /// normal derivative.
    pub fn smooth_gradient(&self, f: &ScalarField<T>) -> Result<VectorField<T>> {
        self.check(f)?;
        let comps = (0..self.dim).map(|a| self.smooth_d1(&f.values, a)).collect();
        Ok(VectorField {
            comps,
            location: Location::Nodes,
        })
    }

    /// Hessian counterpart of [`Grid::smooth_gradient`].
    pub fn smooth_hessian(&self, f: &ScalarField<T>) -> Result<SymMatrixField<T>> {
        self.check(f)?;
        let xx = self.smooth_d2(&f.values, 0);
        if self.dim == 1 {
            return Ok(SymMatrixField {
                dim: 1,
                comps: vec![xx],
            });
        }
        let yy = self.smooth_d2(&f.values, 1);
        let xy = self.smooth_d1(&self.smooth_d1(&f.values, 0), 1);
        Ok(SymMatrixField {
            dim: 2,
            comps: vec![xx, xy, yy],
        })
    }

    /// Node value of `(∇f, ∇g)` obtained by averaging face products; its
    /// `ρ`-weighted integral equals the face energy with arithmetic-mean
    /// face weights exactly.
    pub fn grad_dot(&self, f: &ScalarField<T>, g: &ScalarField<T>) -> Result<ScalarField<T>> {
        let df = self.gradient(f)?;
        let dg = self.gradient(g)?;
        let half = T::lit(0.5);
        let mut out = vec![T::zero(); self.len()];
        for a in 0..self.dim {
            let prod: Vec<T> = df.comps[a].iter().zip(&dg.comps[a]).map(|(&x, &y)| x * y).collect();
            for (k, o) in out.iter_mut().enumerate() {
                let right = prod[k];
                let left = prod[self.offset(k, a, -1)];
                *o += match self.on_wall(k, a) {
                    Some(false) => right,
                    Some(true) => left,
                    None => half * (left + right),
                };
            }
        }
        Ok(ScalarField::new(out))
    }

    /// Arithmetic mean of a nodal field on each face.
    pub fn face_average(&self, w: &ScalarField<T>) -> Result<VectorField<T>> {
        self.check(w)?;
        let half = T::lit(0.5);
        let comps = (0..self.dim)
            .map(|a| {
                (0..self.len())
                    .map(|k| {
                        if self.face_active(k, a) {
                            half * (w.values[k] + w.values[self.offset(k, a, 1)])
                        } else {
                            T::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(VectorField {
            comps,
            location: Location::Faces,
        })
    }

    /// `∇·(w ∇f)` with face-averaged `w`; no sign restriction on `w`.
    pub fn flux_divergence(&self, w: &ScalarField<T>, f: &ScalarField<T>) -> Result<ScalarField<T>> {
        let wf = self.face_average(w)?;
        let mut g = self.gradient(f)?;
        for a in 0..self.dim {
            for (gk, wk) in g.comps[a].iter_mut().zip(&wf.comps[a]) {
                *gk *= *wk;
            }
        }
        self.divergence(&g)
    }

    /// Diagonal of the linear map `f ↦ −flux_divergence(w, f)`.
    pub fn flux_diagonal(&self, w: &ScalarField<T>) -> Result<Vec<T>> {
        let wf = self.face_average(w)?;
        let mut out = vec![T::zero(); self.len()];
        for a in 0..self.dim {
            let h = self.h[a];
            for (k, o) in out.iter_mut().enumerate() {
                let pos = self.indices(k)[a];
                let right = wf.comps[a][k];
                let left = if self.topology == Topology::Reflecting && pos == 0 {
                    T::zero()
                } else {
                    wf.comps[a][self.offset(k, a, -1)]
                };
                *o += (right + left) / (h * self.axis_weights[a][pos]);
            }
        }
        Ok(out)
    }

    /// `Σ_faces W_f · avg(w)_f · (Df)_f (Dg)_f`, the discrete `∫ w (∇f, ∇g)`.
    pub fn weighted_energy(&self, w: &ScalarField<T>, f: &ScalarField<T>, g: &ScalarField<T>) -> Result<T> {
        let wf = self.face_average(w)?;
        let df = self.gradient(f)?;
        let dg = self.gradient(g)?;
        let mut acc = T::zero();
        for a in 0..self.dim {
            for k in 0..self.len() {
                acc += self.face_weight(k, a) * wf.comps[a][k] * df.comps[a][k] * dg.comps[a][k];
            }
        }
        Ok(acc)
    }
}

/// Where the components of a [`VectorField`] are located.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Component `a` at node `k` sits on the face between `k` and its
    /// forward neighbour along axis `a`.
    Faces,
    Nodes,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarField<T> {
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self::new(self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn div(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a / b)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn powf(&self, p: T) -> Self {
        self.map(|v| v.powf(p))
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T> {
    comps: Vec<Vec<T>>,
    location: Location,
}

impl<T: Real> VectorField<T> {
    pub fn new(comps: Vec<Vec<T>>, location: Location) -> Self {
        Self { comps, location }
    }

    pub fn location(&self) -> Location {
        self.location
    }

    pub fn component(&self, axis: usize) -> &[T] {
        &self.comps[axis]
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    /// Vector at node (or face) `k`, zero-padded to two entries.
    #[inline]
    pub fn at(&self, k: usize) -> [T; 2] {
        let mut v = [T::zero(); 2];
        for (a, c) in self.comps.iter().enumerate() {
            v[a] = c[k];
        }
        v
    }

    /// Pointwise Euclidean inner product with another field at the same location.
    pub fn dot(&self, other: &Self) -> ScalarField<T> {
        let n = self.comps[0].len();
        ScalarField::new(
            (0..n)
                .map(|k| {
                    self.comps
                        .iter()
                        .zip(&other.comps)
                        .map(|(a, b)| a[k] * b[k])
                        .sum()
                })
                .collect(),
        )
    }

    pub fn max_abs(&self) -> T {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

/// Symmetric `dim × dim` matrix per node; components stored as
/// `[xx]` (1D) or `[xx, xy, yy]` (2D).
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrixField<T> {
    dim: usize,
    comps: Vec<Vec<T>>,
}

impl<T: Real> SymMatrixField<T> {
    pub fn zeros(dim: usize, len: usize) -> Self {
        Self {
            dim,
            comps: vec![vec![T::zero(); len]; dim * (dim + 1) / 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Full matrix at node `k` (zero-padded in 1D).
    #[inline]
    pub fn at(&self, k: usize) -> [[T; 2]; 2] {
        let z = T::zero();
        if self.dim == 1 {
            [[self.comps[0][k], z], [z, z]]
        } else {
            let (xx, xy, yy) = (self.comps[0][k], self.comps[1][k], self.comps[2][k]);
            [[xx, xy], [xy, yy]]
        }
    }

    #[inline]
    pub fn set(&mut self, k: usize, m: [[T; 2]; 2]) {
        self.comps[0][k] = m[0][0];
        if self.dim == 2 {
            self.comps[1][k] = m[0][1];
            self.comps[2][k] = m[1][1];
        }
    }

    pub fn trace(&self) -> ScalarField<T> {
        if self.dim == 1 {
            ScalarField::new(self.comps[0].clone())
        } else {
            ScalarField::new(self.comps[0].iter().zip(&self.comps[2]).map(|(&a, &b)| a + b).collect())
        }
    }

    /// Quadratic form `v^T M v` per node.
    pub fn quadratic(&self, v: &VectorField<T>) -> ScalarField<T> {
        let two = T::lit(2.0);
        ScalarField::new(
            (0..self.len())
                .map(|k| {
                    let m = self.at(k);
                    let x = v.at(k);
                    m[0][0] * x[0] * x[0] + two * m[0][1] * x[0] * x[1] + m[1][1] * x[1] * x[1]
                })
                .collect(),
        )
    }

    /// Bilinear form `u^T M v` per node.
    pub fn bilinear(&self, u: &VectorField<T>, v: &VectorField<T>) -> ScalarField<T> {
        ScalarField::new(
            (0..self.len())
                .map(|k| {
                    let m = self.at(k);
                    let (a, b) = (u.at(k), v.at(k));
                    m[0][0] * a[0] * b[0] + m[0][1] * (a[0] * b[1] + a[1] * b[0]) + m[1][1] * a[1] * b[1]
                })
                .collect(),
        )
    }

    /// Squared Frobenius norm per node.
    pub fn frobenius_sq(&self) -> ScalarField<T> {
        let two = T::lit(2.0);
        ScalarField::new(
            (0..self.len())
                .map(|k| {
                    let m = self.at(k);
                    m[0][0] * m[0][0] + two * m[0][1] * m[0][1] + m[1][1] * m[1][1]
                })
                .collect(),
        )
    }

    /// Smallest eigenvalue per node (closed form for 2×2).
    pub fn min_eigenvalue(&self) -> ScalarField<T> {
        ScalarField::new((0..self.len()).map(|k| min_eig(self.dim, self.at(k))).collect())
    }
}

#[inline]
pub(crate) fn min_eig<T: Real>(dim: usize, m: [[T; 2]; 2]) -> T {
    if dim == 1 {
        return m[0][0];
    }
    let half = T::lit(0.5);
    let mean = half * (m[0][0] + m[1][1]);
    let diff = half * (m[0][0] - m[1][1]);
    mean - (diff * diff + m[0][1] * m[0][1]).sqrt()
}
