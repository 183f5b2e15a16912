//! Operators on small tensor-product Hilbert spaces and the Lindblad
//! superoperator.
//!
//! Basis states of every subsystem are ordered by excitation number, so for a
//! two-level system index 0 is the ground state and index 1 the excited
//! state, and the two-level lowering operator coincides with [`destroy`]`(2)`.
//!
//! Density matrices are vectorized by stacking columns: element `(i, j)` of a
//! `d x d` matrix sits at position `i + j * d`. With that convention
//! `vec(A X B) = (B^T ⊗ A) vec(X)`, which fixes the layout of
//! [`liouvillian`].

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, OnceLock};

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::EigenSystem;

pub type C64 = Complex64;

/// Tolerance for the hermiticity test of operators.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Per-entry tolerance of the trace-preservation check `vec(I)^† L = 0`.
pub const TRACE_PRESERVATION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labelled subsystems making up a tensor-product space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceLayout {
    subsystems: Vec<Subsystem>,
}

impl SpaceLayout {
    pub fn new<S: Into<String>>(subsystems: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let subsystems: Vec<Subsystem> = subsystems
            .into_iter()
            .map(|(label, dim)| Subsystem {
                label: label.into(),
                dim,
            })
            .collect();
        if subsystems.is_empty() {
            return Err(Error::InvalidLayout("no subsystems".into()));
        }
        for (k, s) in subsystems.iter().enumerate() {
            if s.dim < 2 {
                return Err(Error::InvalidLayout(format!(
                    "subsystem `{}` has dimension {} (< 2)",
                    s.label, s.dim
                )));
            }
            if subsystems[..k].iter().any(|o| o.label == s.label) {
                return Err(Error::InvalidLayout(format!(
                    "duplicate label `{}`",
                    s.label
                )));
            }
        }
        Ok(Self { subsystems })
    }

    /// Single-subsystem layout.
    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new([(label, dim)])
    }

    /// Layout with one more subsystem appended at the end.
    pub fn with(&self, label: &str, dim: usize) -> Result<Self> {
        let mut subs: Vec<(String, usize)> = self
            .subsystems
            .iter()
            .map(|s| (s.label.clone(), s.dim))
            .collect();
        subs.push((label.to_string(), dim));
        Self::new(subs)
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.subsystems[self.index_of(label)?].dim)
    }
}

impl fmt::Display for SpaceLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .subsystems
            .iter()
            .map(|s| format!("{}({})", s.label, s.dim))
            .collect();
        write!(f, "{}", parts.join(" ⊗ "))
    }
}

/// Dense operator bound to a [`SpaceLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    layout: SpaceLayout,
    matrix: Array2<C64>,
}

impl Operator {
    pub fn new(layout: SpaceLayout, matrix: Array2<C64>) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.nrows() != d {
            return Err(Error::DimMismatch {
                expected: d,
                found: matrix.nrows(),
            });
        }
        Ok(Self { layout, matrix })
    }

    pub fn zeros(layout: &SpaceLayout) -> Self {
        let d = layout.total_dim();
        Self {
            layout: layout.clone(),
            matrix: Array2::zeros((d, d)),
        }
    }

    pub fn identity(layout: &SpaceLayout) -> Self {
        let d = layout.total_dim();
        Self {
            layout: layout.clone(),
            matrix: Array2::eye(d),
        }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: adjoint(&self.matrix),
        }
    }

    /// `max |A - A^†|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let diff = self.matrix[[i, j]] - self.matrix[[j, i]].conj();
                worst = worst.max(diff.norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() < HERMITIAN_TOL
    }

    pub fn dot(&self, rhs: &Operator) -> Operator {
        assert_eq!(self.layout, rhs.layout, "operator layouts differ");
        Operator {
            layout: self.layout.clone(),
            matrix: self.matrix.dot(&rhs.matrix),
        }
    }

    pub fn scaled(&self, factor: impl Into<C64>) -> Operator {
        let factor = factor.into();
        Operator {
            layout: self.layout.clone(),
            matrix: self.matrix.mapv(|z| z * factor),
        }
    }

    /// `[A, B] = AB - BA`
    pub fn commutator(&self, rhs: &Operator) -> Operator {
        &self.dot(rhs) - &rhs.dot(self)
    }

    /// Trace of the matrix.
    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    pub(crate) fn with_layout(layout: SpaceLayout, matrix: Array2<C64>) -> Self {
        debug_assert_eq!(layout.total_dim(), matrix.nrows());
        Self { layout, matrix }
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.layout, rhs.layout, "operator layouts differ");
        Operator {
            layout: self.layout.clone(),
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.layout, rhs.layout, "operator layouts differ");
        Operator {
            layout: self.layout.clone(),
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.dot(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scaled(rhs)
    }
}

pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Kronecker product of two square matrices.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    ndarray::linalg::kron(a, b)
}

/// Annihilation operator truncated to `dim` Fock states.
pub fn destroy(dim: usize) -> Array2<C64> {
    let mut a = Array2::zeros((dim, dim));
    for k in 1..dim {
        a[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// Two-level lowering operator `|g><e|`.
pub fn sigma_lower() -> Array2<C64> {
    destroy(2)
}

/// Number operator truncated to `dim` levels.
pub fn number(dim: usize) -> Array2<C64> {
    Array2::from_shape_fn((dim, dim), |(i, j)| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Lift a local operator acting on subsystem `label` to the whole layout,
/// acting as the identity everywhere else.
pub fn embed(local: &Array2<C64>, layout: &SpaceLayout, label: &str) -> Result<Operator> {
    let target = layout.index_of(label)?;
    let dim = layout.subsystems()[target].dim;
    if local.nrows() != dim || local.ncols() != dim {
        return Err(Error::DimMismatch {
            expected: dim,
            found: local.nrows(),
        });
    }
    let mut full = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
    for (k, s) in layout.subsystems().iter().enumerate() {
        full = if k == target {
            kron(&full, local)
        } else {
            kron(&full, &Array2::eye(s.dim))
        };
    }
    Ok(Operator::with_layout(layout.clone(), full))
}

/// Dissipation channel `rate * D[op]`.
#[derive(Clone, Debug)]
pub struct Collapse {
    pub rate: f64,
    pub op: Operator,
}

/// Hamiltonian plus dissipators of a Lindblad master equation, together with
/// the operator whose emitted field is detected.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    layout: SpaceLayout,
    hamiltonian: Operator,
    collapses: Vec<Collapse>,
    emission: Operator,
}

impl LindbladModel {
    pub fn new(
        hamiltonian: Operator,
        collapses: Vec<Collapse>,
        emission: Operator,
    ) -> Result<Self> {
        let layout = hamiltonian.layout().clone();
        let defect = hamiltonian.hermiticity_defect();
        if defect >= HERMITIAN_TOL {
            return Err(Error::InvalidModel(format!(
                "Hamiltonian is not hermitian (defect {defect:e})"
            )));
        }
        for (k, c) in collapses.iter().enumerate() {
            if !(c.rate >= 0.0) || !c.rate.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "collapse {k} has invalid rate {}",
                    c.rate
                )));
            }
            if c.op.layout() != &layout {
                return Err(Error::LayoutMismatch);
            }
        }
        if emission.layout() != &layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(Self {
            layout,
            hamiltonian,
            collapses,
            emission,
        })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn collapses(&self) -> &[Collapse] {
        &self.collapses
    }

    pub fn emission(&self) -> &Operator {
        &self.emission
    }

    /// Apply the generator to a density matrix directly, without
    /// vectorization.
    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let i = C64::new(0.0, 1.0);
        let h = self.hamiltonian.matrix();
        let mut out = (h.dot(rho) - rho.dot(h)).mapv(|z| -i * z);
        for c in &self.collapses {
            let op = c.op.matrix();
            let op_dag = adjoint(op);
            let nn = op_dag.dot(op);
            let jump = op.dot(rho).dot(&op_dag);
            let anti = nn.dot(rho) + rho.dot(&nn);
            out = out + (jump - anti.mapv(|z| z * 0.5)).mapv(|z| z * c.rate);
        }
        out
    }
}

/// Matrix representation of the Liouvillian acting on column-stacked
/// density matrices.
#[derive(Clone, Debug)]
pub struct Superoperator {
    layout: SpaceLayout,
    matrix: Array2<C64>,
    eigen: OnceLock<Arc<std::result::Result<EigenSystem, f64>>>,
}

impl Superoperator {
    pub fn from_matrix(layout: SpaceLayout, matrix: Array2<C64>) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d * d || matrix.ncols() != d * d {
            return Err(Error::DimMismatch {
                expected: d * d,
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            layout,
            matrix,
            eigen: OnceLock::new(),
        })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    /// Hilbert-space dimension `d`; the superoperator is `d^2 x d^2`.
    pub fn hilbert_dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        self.matrix.dot(v)
    }

    /// Largest entry of `vec(I)^† L`.
    pub fn trace_defect(&self) -> f64 {
        let d = self.hilbert_dim();
        (0..self.dim())
            .map(|col| {
                (0..d)
                    .map(|k| self.matrix[[k + k * d, col]])
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_defect() < TRACE_PRESERVATION_TOL
    }

    /// Memoized eigendecomposition; the error carries a condition estimate.
    pub(crate) fn eigen(&self) -> Arc<std::result::Result<EigenSystem, f64>> {
        self.eigen
            .get_or_init(|| Arc::new(EigenSystem::new(&self.matrix)))
            .clone()
    }
}

/// Column-stacking vectorization.
pub fn vectorize(m: &Array2<C64>) -> Array1<C64> {
    let d = m.nrows();
    Array1::from_shape_fn(d * d, |k| m[[k % d, k / d]])
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &Array1<C64>, d: usize) -> Array2<C64> {
    assert_eq!(v.len(), d * d, "vector length is not d^2");
    Array2::from_shape_fn((d, d), |(i, j)| v[i + j * d])
}

/// `out += coef * (a ⊗ b)`
fn add_kron(out: &mut Array2<C64>, coef: C64, a: &Array2<C64>, b: &Array2<C64>) {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    for ia in 0..ra {
        for ja in 0..ca {
            let s = coef * a[[ia, ja]];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..rb {
                let row = ia * rb + ib;
                for jb in 0..cb {
                    let v = b[[ib, jb]];
                    if v != C64::new(0.0, 0.0) {
                        out[[row, ja * cb + jb]] += s * v;
                    }
                }
            }
        }
    }
}

/// Assemble `L = -i(I⊗H - H^T⊗I) + Σ rate (c̄⊗c - ½ I⊗c^†c - ½ (c^†c)^T⊗I)`.
pub fn liouvillian(model: &LindbladModel) -> Superoperator {
    let d = model.layout().total_dim();
    let eye: Array2<C64> = Array2::eye(d);
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    let mut l = Array2::zeros((d * d, d * d));

    let h = model.hamiltonian().matrix();
    add_kron(&mut l, -i, &eye, h);
    add_kron(&mut l, i, &h.t().to_owned(), &eye);

    for c in model.collapses() {
        if c.rate == 0.0 {
            continue;
        }
        let op = c.op.matrix();
        let nn = adjoint(op).dot(op);
        let rate = one * c.rate;
        add_kron(&mut l, rate, &op.mapv(|z| z.conj()), op);
        add_kron(&mut l, -0.5 * rate, &eye, &nn);
        add_kron(&mut l, -0.5 * rate, &nn.t().to_owned(), &eye);
    }
    Superoperator {
        layout: model.layout().clone(),
        matrix: l,
        eigen: OnceLock::new(),
    }
}
