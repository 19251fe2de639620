//! Labeled finite-dimensional complex Hilbert spaces.
//!
//! A composite space is an ordered list of named factors, each with a named
//! finite level set, e.g. `path:{u,l} ⊗ pol:{H,V} ⊗ pointer:{H,V}`. Basis
//! indices are row-major with the first factor most significant, so the
//! composite basis is lexicographic in the declared level order. All
//! serialization relies on this ordering.
//!
//! Everything here is a plain dense representation: total dimensions in this
//! crate never exceed 16, so there is no sparse machinery.

use std::fmt;

use num_complex::Complex64;

use crate::error::CoreError;
use crate::{EQ_TOL, UNITARITY_TOL};

/// A named factor space with named levels, e.g. `path: [u, l]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Space {
    name: String,
    levels: Vec<String>,
}

impl Space {
    pub fn new(name: &str, levels: &[&str]) -> Self {
        assert!(!levels.is_empty(), "space must have at least one level");
        Space {
            name: name.to_string(),
            levels: levels.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }
}

/// One basis label of a composite space: `(space-name, level-name)` per factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisLabel {
    pub factors: Vec<(String, String)>,
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(s, l)| format!("{s}:{l}"))
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

fn total_dim(spaces: &[Space]) -> usize {
    spaces.iter().map(Space::dim).product()
}

/// Decompose a flat index into per-factor level indices (first factor most
/// significant).
fn unravel(spaces: &[Space], mut index: usize) -> Vec<usize> {
    let mut out = vec![0; spaces.len()];
    for (k, s) in spaces.iter().enumerate().rev() {
        out[k] = index % s.dim();
        index /= s.dim();
    }
    out
}

fn ravel(spaces: &[Space], levels: &[usize]) -> usize {
    let mut index = 0;
    for (s, &l) in spaces.iter().zip(levels) {
        index = index * s.dim() + l;
    }
    index
}

fn check_disjoint(a: &[Space], b: &[Space]) -> Result<(), CoreError> {
    for sa in a {
        if b.iter().any(|sb| sb.name == sa.name) {
            return Err(CoreError::OverlappingSpaces(sa.name.clone()));
        }
    }
    Ok(())
}

fn spaces_equal(a: &[Space], b: &[Space]) -> bool {
    a == b
}

/// A state vector over a labeled composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    spaces: Vec<Space>,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Build from explicit amplitudes in the fixed lexicographic basis order.
    pub fn from_amplitudes(spaces: Vec<Space>, amps: Vec<Complex64>) -> Result<Self, CoreError> {
        let dim = total_dim(&spaces);
        if amps.len() != dim {
            return Err(CoreError::DimensionMismatch {
                expected: dim,
                got: amps.len(),
            });
        }
        if !amps.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
            return Err(CoreError::SpaceMismatch("non-finite amplitude".into()));
        }
        Ok(StateVector { spaces, amps })
    }

    /// The basis state with the given level name per factor.
    pub fn basis(spaces: Vec<Space>, levels: &[&str]) -> Result<Self, CoreError> {
        if levels.len() != spaces.len() {
            return Err(CoreError::DimensionMismatch {
                expected: spaces.len(),
                got: levels.len(),
            });
        }
        let idxs: Vec<usize> = spaces
            .iter()
            .zip(levels)
            .map(|(s, l)| {
                s.level_index(l).ok_or_else(|| {
                    CoreError::SpaceMismatch(format!("no level `{l}` in space `{}`", s.name))
                })
            })
            .collect::<Result<_, _>>()?;
        let dim = total_dim(&spaces);
        let mut amps = vec![Complex64::ZERO; dim];
        amps[ravel(&spaces, &idxs)] = Complex64::ONE;
        Ok(StateVector { spaces, amps })
    }

    pub fn spaces(&self) -> &[Space] {
        &self.spaces
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Amplitude of one labeled basis state; factors may be listed in any order.
    pub fn amplitude(&self, factors: &[(&str, &str)]) -> Result<Complex64, CoreError> {
        let mut levels = vec![None; self.spaces.len()];
        for (name, level) in factors {
            let k = self
                .spaces
                .iter()
                .position(|s| s.name == *name)
                .ok_or_else(|| CoreError::SpaceMismatch(format!("no space `{name}`")))?;
            let l = self.spaces[k].level_index(level).ok_or_else(|| {
                CoreError::SpaceMismatch(format!("no level `{level}` in space `{name}`"))
            })?;
            levels[k] = Some(l);
        }
        let levels: Vec<usize> = levels
            .into_iter()
            .map(|l| l.ok_or_else(|| CoreError::SpaceMismatch("missing factor".into())))
            .collect::<Result<_, _>>()?;
        Ok(self.amps[ravel(&self.spaces, &levels)])
    }

    /// Basis labels in index order.
    pub fn basis_labels(&self) -> Vec<BasisLabel> {
        (0..self.dim())
            .map(|i| {
                let levels = unravel(&self.spaces, i);
                BasisLabel {
                    factors: self
                        .spaces
                        .iter()
                        .zip(levels)
                        .map(|(s, l)| (s.name.clone(), s.levels[l].clone()))
                        .collect(),
                }
            })
            .collect()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= EQ_TOL
    }

    pub fn normalized(&self) -> Result<Self, CoreError> {
        let n = self.norm();
        if n <= EQ_TOL {
            return Err(CoreError::ZeroVector);
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        StateVector {
            spaces: self.spaces.clone(),
            amps: self.amps.iter().map(|a| a * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, CoreError> {
        if !spaces_equal(&self.spaces, &other.spaces) {
            return Err(CoreError::SpaceMismatch("addition needs equal spaces".into()));
        }
        Ok(StateVector {
            spaces: self.spaces.clone(),
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Kronecker product; space-name lists must be disjoint.
    pub fn tensor(&self, other: &Self) -> Result<Self, CoreError> {
        check_disjoint(&self.spaces, &other.spaces)?;
        let mut spaces = self.spaces.clone();
        spaces.extend(other.spaces.iter().cloned());
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { spaces, amps })
    }

    /// `true` when both states live on the same spaces and agree elementwise
    /// within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        spaces_equal(&self.spaces, &other.spaces)
            && self
                .amps
                .iter()
                .zip(&other.amps)
                .all(|(a, b)| (a - b).norm() <= tol)
    }
}

/// Inner product `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<Complex64, CoreError> {
    if !spaces_equal(&a.spaces, &b.spaces) {
        return Err(CoreError::SpaceMismatch(
            "inner product needs equal spaces".into(),
        ));
    }
    Ok(a.amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Structural properties detected when an operator is constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatorFlags {
    pub unitary: bool,
    pub hermitian: bool,
}

/// A dense operator over a labeled composite space.
///
/// Unitarity (`U†U = I` within 1e-10) and hermiticity (`A = A†` within 1e-10)
/// are verified on construction and carried as flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    spaces: Vec<Space>,
    mat: Vec<Complex64>, // row-major, dim x dim
    flags: OperatorFlags,
}

impl Operator {
    pub fn from_matrix(spaces: Vec<Space>, mat: Vec<Complex64>) -> Result<Self, CoreError> {
        let dim = total_dim(&spaces);
        if mat.len() != dim * dim {
            return Err(CoreError::DimensionMismatch {
                expected: dim * dim,
                got: mat.len(),
            });
        }
        let flags = detect_flags(&mat, dim);
        Ok(Operator { spaces, mat, flags })
    }

    pub fn identity(spaces: Vec<Space>) -> Self {
        let dim = total_dim(&spaces);
        let mut mat = vec![Complex64::ZERO; dim * dim];
        for i in 0..dim {
            mat[i * dim + i] = Complex64::ONE;
        }
        Operator {
            spaces,
            mat,
            flags: OperatorFlags {
                unitary: true,
                hermitian: true,
            },
        }
    }

    pub fn zero(spaces: Vec<Space>) -> Self {
        let dim = total_dim(&spaces);
        Operator {
            spaces,
            mat: vec![Complex64::ZERO; dim * dim],
            flags: OperatorFlags {
                unitary: false,
                hermitian: true,
            },
        }
    }

    /// Rank-one projector `|ψ⟩⟨ψ|` onto a normalized state.
    pub fn projector(psi: &StateVector) -> Result<Self, CoreError> {
        if (psi.norm_sq() - 1.0).abs() > UNITARITY_TOL {
            return Err(CoreError::SpaceMismatch(
                "projector requires a normalized state".into(),
            ));
        }
        let dim = psi.dim();
        let mut mat = vec![Complex64::ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                mat[i * dim + j] = psi.amps[i] * psi.amps[j].conj();
            }
        }
        Ok(Operator {
            spaces: psi.spaces.clone(),
            mat,
            flags: OperatorFlags {
                unitary: dim == 1,
                hermitian: true,
            },
        })
    }

    /// Projector onto one named level of a single space.
    pub fn level_projector(space: Space, level: &str) -> Result<Self, CoreError> {
        let psi = StateVector::basis(vec![space], &[level])?;
        Operator::projector(&psi)
    }

    pub fn pauli_x(space: Space) -> Result<Self, CoreError> {
        two_level_op(space, [[0.0, 1.0], [1.0, 0.0]], [[0.0; 2]; 2])
    }

    pub fn pauli_y(space: Space) -> Result<Self, CoreError> {
        two_level_op(space, [[0.0, 0.0], [0.0, 0.0]], [[0.0, -1.0], [1.0, 0.0]])
    }

    pub fn pauli_z(space: Space) -> Result<Self, CoreError> {
        two_level_op(space, [[1.0, 0.0], [0.0, -1.0]], [[0.0; 2]; 2])
    }

    pub fn spaces(&self) -> &[Space] {
        &self.spaces
    }

    pub fn dim(&self) -> usize {
        total_dim(&self.spaces)
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.mat
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.mat[row * self.dim() + col]
    }

    pub fn flags(&self) -> OperatorFlags {
        self.flags
    }

    pub fn adjoint(&self) -> Self {
        let dim = self.dim();
        let mut mat = vec![Complex64::ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                mat[j * dim + i] = self.mat[i * dim + j].conj();
            }
        }
        Operator {
            spaces: self.spaces.clone(),
            mat,
            flags: self.flags,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mat: Vec<Complex64> = self.mat.iter().map(|m| m * c).collect();
        let flags = detect_flags(&mat, self.dim());
        Operator {
            spaces: self.spaces.clone(),
            mat,
            flags,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, CoreError> {
        if !spaces_equal(&self.spaces, &other.spaces) {
            return Err(CoreError::SpaceMismatch("addition needs equal spaces".into()));
        }
        let mat: Vec<Complex64> = self
            .mat
            .iter()
            .zip(&other.mat)
            .map(|(a, b)| a + b)
            .collect();
        let flags = detect_flags(&mat, self.dim());
        Ok(Operator {
            spaces: self.spaces.clone(),
            mat,
            flags,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, CoreError> {
        self.add(&other.scale(-Complex64::ONE))
    }

    /// Matrix product `self · other` on equal spaces.
    pub fn compose(&self, other: &Self) -> Result<Self, CoreError> {
        if !spaces_equal(&self.spaces, &other.spaces) {
            return Err(CoreError::SpaceMismatch(
                "composition needs equal spaces".into(),
            ));
        }
        let dim = self.dim();
        let mut mat = vec![Complex64::ZERO; dim * dim];
        for i in 0..dim {
            for k in 0..dim {
                let aik = self.mat[i * dim + k];
                if aik == Complex64::ZERO {
                    continue;
                }
                for j in 0..dim {
                    mat[i * dim + j] += aik * other.mat[k * dim + j];
                }
            }
        }
        let flags = detect_flags(&mat, dim);
        Ok(Operator {
            spaces: self.spaces.clone(),
            mat,
            flags,
        })
    }

    /// Kronecker product; space-name lists must be disjoint.
    pub fn tensor(&self, other: &Self) -> Result<Self, CoreError> {
        check_disjoint(&self.spaces, &other.spaces)?;
        let mut spaces = self.spaces.clone();
        spaces.extend(other.spaces.iter().cloned());
        let (da, db) = (self.dim(), other.dim());
        let dim = da * db;
        let mut mat = vec![Complex64::ZERO; dim * dim];
        for ia in 0..da {
            for ja in 0..da {
                let a = self.mat[ia * da + ja];
                if a == Complex64::ZERO {
                    continue;
                }
                for ib in 0..db {
                    for jb in 0..db {
                        mat[(ia * db + ib) * dim + (ja * db + jb)] = a * other.mat[ib * db + jb];
                    }
                }
            }
        }
        Ok(Operator {
            spaces,
            mat,
            flags: OperatorFlags {
                unitary: self.flags.unitary && other.flags.unitary,
                hermitian: self.flags.hermitian && other.flags.hermitian,
            },
        })
    }

    /// Embed into a larger composite space, acting as identity on the factors
    /// this operator does not cover. The operator's factors may appear in any
    /// order inside `target`.
    pub fn embed(&self, target: &[Space]) -> Result<Self, CoreError> {
        if spaces_equal(&self.spaces, target) {
            return Ok(self.clone());
        }
        let positions: Vec<usize> = self
            .spaces
            .iter()
            .map(|s| {
                target
                    .iter()
                    .position(|t| t == s)
                    .ok_or_else(|| CoreError::SpaceMismatch(format!("no space `{}`", s.name)))
            })
            .collect::<Result<_, _>>()?;
        let dim = total_dim(target);
        let sub_dim = self.dim();
        let mut mat = vec![Complex64::ZERO; dim * dim];
        for col in 0..dim {
            let col_levels = unravel(target, col);
            let sub_col_levels: Vec<usize> = positions.iter().map(|&p| col_levels[p]).collect();
            let sub_col = ravel(&self.spaces, &sub_col_levels);
            for sub_row in 0..sub_dim {
                let m = self.mat[sub_row * sub_dim + sub_col];
                if m == Complex64::ZERO {
                    continue;
                }
                let mut row_levels = col_levels.clone();
                let sub_row_levels = unravel(&self.spaces, sub_row);
                for (&p, &l) in positions.iter().zip(&sub_row_levels) {
                    row_levels[p] = l;
                }
                let row = ravel(target, &row_levels);
                mat[row * dim + col] = m;
            }
        }
        Operator::from_matrix(target.to_vec(), mat)
    }

    /// Apply to a state. When the operator covers only a subset of the
    /// state's factors it is implicitly padded with identity on the rest.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector, CoreError> {
        let op = if spaces_equal(&self.spaces, &psi.spaces) {
            self.clone()
        } else {
            self.embed(&psi.spaces)?
        };
        let dim = psi.dim();
        let mut amps = vec![Complex64::ZERO; dim];
        for (i, amp) in amps.iter_mut().enumerate() {
            for j in 0..dim {
                *amp += op.mat[i * dim + j] * psi.amps[j];
            }
        }
        Ok(StateVector {
            spaces: psi.spaces.clone(),
            amps,
        })
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        spaces_equal(&self.spaces, &other.spaces)
            && self
                .mat
                .iter()
                .zip(&other.mat)
                .all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Maximum elementwise deviation from another operator after aligning
    /// global phase (phase taken from the largest-magnitude entry pair).
    pub fn deviation_up_to_phase(&self, other: &Self) -> f64 {
        let mut best = 0.0;
        let mut phase = Complex64::ONE;
        for (a, b) in self.mat.iter().zip(&other.mat) {
            let w = a.norm() * b.norm();
            if w > best {
                best = w;
                phase = (a / b) / (a / b).norm();
            }
        }
        self.mat
            .iter()
            .zip(&other.mat)
            .map(|(a, b)| (a - b * phase).norm())
            .fold(0.0, f64::max)
    }
}

fn detect_flags(mat: &[Complex64], dim: usize) -> OperatorFlags {
    let mut hermitian = true;
    for i in 0..dim {
        for j in 0..dim {
            if (mat[i * dim + j] - mat[j * dim + i].conj()).norm() > UNITARITY_TOL {
                hermitian = false;
                break;
            }
        }
        if !hermitian {
            break;
        }
    }
    // U†U = I
    let mut unitary = true;
    'outer: for i in 0..dim {
        for j in 0..dim {
            let mut s = Complex64::ZERO;
            for k in 0..dim {
                s += mat[k * dim + i].conj() * mat[k * dim + j];
            }
            let expect = if i == j { Complex64::ONE } else { Complex64::ZERO };
            if (s - expect).norm() > UNITARITY_TOL {
                unitary = false;
                break 'outer;
            }
        }
    }
    OperatorFlags { unitary, hermitian }
}

fn two_level_op(space: Space, re: [[f64; 2]; 2], im: [[f64; 2]; 2]) -> Result<Operator, CoreError> {
    if space.dim() != 2 {
        return Err(CoreError::DimensionMismatch {
            expected: 2,
            got: space.dim(),
        });
    }
    let mat = vec![
        Complex64::new(re[0][0], im[0][0]),
        Complex64::new(re[0][1], im[0][1]),
        Complex64::new(re[1][0], im[1][0]),
        Complex64::new(re[1][1], im[1][1]),
    ];
    Operator::from_matrix(vec![space], mat)
}

/// Normalized expectation `⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩`; `ψ` need not be normalized.
pub fn expectation(op: &Operator, psi: &StateVector) -> Result<Complex64, CoreError> {
    let n = psi.norm_sq();
    if n <= EQ_TOL * EQ_TOL {
        return Err(CoreError::ZeroVector);
    }
    let opsi = op.apply(psi)?;
    Ok(inner(psi, &opsi)? / n)
}
