//! The pre/post-selected interferometer scenario.
//!
//! A system photon enters a two-path interferometer carrying polarization;
//! on the lower path its polarization component `|a⟩` is weakly coupled to a
//! pointer photon through a controlled rotation of strength `g`. After
//! post-selecting the system on a fixed final state, the pointer carries the
//! weak value of `Π_l ⊗ Π_a`, and decomposing the transition amplitude over
//! complete sets of path observables exhibits the effect: the photon's
//! position weak value and its polarization weak value localize in different
//! arms.

use num_complex::Complex64;

use crate::error::CoreError;
use crate::hilbert::{inner, Operator, StateVector};
use crate::EQ_TOL;

/// Factor spaces in their fixed composite order: path ⊗ pol ⊗ pointer.
pub mod spaces {
    use crate::hilbert::Space;

    /// The interferometer path, levels `u` (upper) and `l` (lower).
    pub fn path() -> Space {
        Space::new("path", &["u", "l"])
    }

    /// System-photon polarization, levels `H` and `V`.
    pub fn pol() -> Space {
        Space::new("pol", &["H", "V"])
    }

    /// Pointer-photon polarization, levels `H` and `V`.
    pub fn pointer() -> Space {
        Space::new("pointer", &["H", "V"])
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Coupling strength of the controlled rotation, set by the waveplate angle
/// `theta_g` through `g = 4·theta_g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingStrength {
    g: f64,
}

impl CouplingStrength {
    /// From the rotation angle `g` in radians; `|g| <= π/2` for physical
    /// waveplate settings.
    pub fn from_g(g: f64) -> Result<Self, CoreError> {
        if !g.is_finite() || g.abs() > std::f64::consts::FRAC_PI_2 + EQ_TOL {
            return Err(CoreError::UnphysicalCoupling(g));
        }
        Ok(CouplingStrength { g })
    }

    /// From the waveplate angle `theta_g` in radians.
    pub fn from_theta_g(theta_g: f64) -> Result<Self, CoreError> {
        Self::from_g(4.0 * theta_g)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn theta_g(&self) -> f64 {
        self.g / 4.0
    }
}

/// Probe polarization analyzed on the lower path, set by the waveplate angle
/// `theta_a`.
///
/// The waveplate at `theta_a` reflects polarization about its axis,
/// `W(θ) = [[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]`, and the probe state is
/// `|a⟩ = W(θ_a)|V⟩ = sin 2θ_a |H⟩ − cos 2θ_a |V⟩`, so `θ_a = 45°` probes
/// `Π_H` and `θ_a = 0°` probes `Π_V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePolarization {
    theta_a: f64,
}

impl ProbePolarization {
    pub fn from_theta_a(theta_a: f64) -> Self {
        ProbePolarization { theta_a }
    }

    /// The `Π_H` probe (`θ_a = 45°`).
    pub fn horizontal() -> Self {
        ProbePolarization {
            theta_a: std::f64::consts::FRAC_PI_4,
        }
    }

    /// The `Π_V` probe (`θ_a = 0°`).
    pub fn vertical() -> Self {
        ProbePolarization { theta_a: 0.0 }
    }

    pub fn theta_a(&self) -> f64 {
        self.theta_a
    }

    /// The unit probe state `|a⟩` in the polarization space.
    pub fn state(&self) -> StateVector {
        let two = 2.0 * self.theta_a;
        StateVector::from_amplitudes(
            vec![spaces::pol()],
            vec![c(two.sin()), c(-two.cos())],
        )
        .expect("2-level amplitudes")
    }

    /// The probe projector `Π_a = |a⟩⟨a|` on the polarization space.
    pub fn projector(&self) -> Operator {
        Operator::projector(&self.state()).expect("unit probe state")
    }
}

/// A weak value together with the observable and boundary states it was
/// computed from.
#[derive(Debug, Clone)]
pub struct WeakValue {
    pub value: Complex64,
    pub observable: Operator,
    pub pre: StateVector,
    pub post: StateVector,
}

impl WeakValue {
    /// Recompute `⟨post|O|pre⟩ / ⟨post|pre⟩` from the stored ingredients.
    pub fn recompute(&self) -> Result<Complex64, CoreError> {
        let denom = inner(&self.post, &self.pre)?;
        if denom.norm() <= EQ_TOL {
            return Err(CoreError::OrthogonalPostselection);
        }
        let numer = inner(&self.post, &self.observable.apply(&self.pre)?)?;
        Ok(numer / denom)
    }
}

/// A complete set of virtual transition paths: observables summing to the
/// identity, with their weak values as normalized transition amplitudes.
#[derive(Debug, Clone)]
pub struct VirtualPathSet {
    pub observables: Vec<Operator>,
    pub amplitudes: Vec<Complex64>,
}

impl VirtualPathSet {
    pub fn amplitude_sum(&self) -> Complex64 {
        self.amplitudes.iter().sum()
    }
}

/// Initial system state `(|u⟩|D⟩ + |l⟩|A⟩)/√2` over path ⊗ pol.
pub fn initial_system() -> StateVector {
    let half = c(0.5);
    StateVector::from_amplitudes(
        vec![spaces::path(), spaces::pol()],
        vec![half, half, half, -half],
    )
    .expect("fixed amplitudes")
}

/// Post-selected system state `(|u⟩ + |l⟩) ⊗ |D⟩ / √2` over path ⊗ pol.
pub fn final_system() -> StateVector {
    let half = c(0.5);
    StateVector::from_amplitudes(
        vec![spaces::path(), spaces::pol()],
        vec![half, half, half, half],
    )
    .expect("fixed amplitudes")
}

/// The pointer rotation `[[cos g, sin g], [sin g, −cos g]]`; a reflection,
/// so both unitary and hermitian. `g = 0` gives `σ_z`, `g = π/2` gives `σ_x`.
pub fn rotation_r(g: f64) -> Operator {
    Operator::from_matrix(
        vec![spaces::pointer()],
        vec![c(g.cos()), c(g.sin()), c(g.sin()), c(-g.cos())],
    )
    .expect("2x2 matrix")
}

/// Measurement interaction on pol ⊗ pointer:
/// `U_M = (I − Π_a) ⊗ I + Π_a ⊗ R(g/2)`.
pub fn measurement_unitary(g: CouplingStrength, probe: ProbePolarization) -> Operator {
    let pol_id = Operator::identity(vec![spaces::pol()]);
    let ptr_id = Operator::identity(vec![spaces::pointer()]);
    let pi_a = probe.projector();
    let rest = pol_id.sub(&pi_a).expect("same space").tensor(&ptr_id).expect("disjoint");
    let coupled = pi_a.tensor(&rotation_r(g.g())).expect("disjoint");
    let u = rest.add(&coupled).expect("same space");
    debug_assert!(u.flags().unitary);
    u
}

/// Total unitary on path ⊗ pol ⊗ pointer:
/// `U_tot = Π_u ⊗ I ⊗ I + Π_l ⊗ U_M`.
pub fn total_unitary(g: CouplingStrength, probe: ProbePolarization) -> Operator {
    let pi_u = Operator::level_projector(spaces::path(), "u").expect("path level");
    let pi_l = Operator::level_projector(spaces::path(), "l").expect("path level");
    let id4 = Operator::identity(vec![spaces::pol(), spaces::pointer()]);
    let upper = pi_u.tensor(&id4).expect("disjoint");
    let lower = pi_l.tensor(&measurement_unitary(g, probe)).expect("disjoint");
    upper.add(&lower).expect("same space")
}

/// The algebraically expanded form of the total unitary:
/// `(I ⊗ I − Π_l ⊗ Π_a) ⊗ I + Π_l ⊗ Π_a ⊗ R(g/2)`.
pub fn total_unitary_expanded(g: CouplingStrength, probe: ProbePolarization) -> Operator {
    let pi_l = Operator::level_projector(spaces::path(), "l").expect("path level");
    let pi_la = pi_l.tensor(&probe.projector()).expect("disjoint");
    let sys_id = Operator::identity(vec![spaces::path(), spaces::pol()]);
    let ptr_id = Operator::identity(vec![spaces::pointer()]);
    let rest = sys_id.sub(&pi_la).expect("same space").tensor(&ptr_id).expect("disjoint");
    let coupled = pi_la.tensor(&rotation_r(g.g())).expect("disjoint");
    rest.add(&coupled).expect("same space")
}

/// Evolve `|Ψ_i⟩ ⊗ pointer_in` under the total unitary and project the
/// system on `|Ψ_f⟩`. Returns the unnormalized conditional pointer state and
/// the post-selection success probability (its squared norm).
pub fn postselected_pointer(
    g: CouplingStrength,
    probe: ProbePolarization,
    pointer_in: &StateVector,
) -> Result<(StateVector, f64), CoreError> {
    let joint = initial_system().tensor(pointer_in)?;
    let evolved = total_unitary(g, probe).apply(&joint)?;
    let pointer_out = project_system(&final_system(), &evolved)?;
    let success = pointer_out.norm_sq();
    if success <= EQ_TOL * EQ_TOL {
        return Err(CoreError::PostselectionFailure);
    }
    Ok((pointer_out, success))
}

/// Contract the system factors of `joint` (path ⊗ pol ⊗ pointer) with
/// `⟨system|`, leaving an unnormalized pointer-space vector.
pub fn project_system(
    system: &StateVector,
    joint: &StateVector,
) -> Result<StateVector, CoreError> {
    let sys_dim = system.dim();
    let ptr_dim = joint.dim() / sys_dim;
    if sys_dim * ptr_dim != joint.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: sys_dim,
            got: joint.dim(),
        });
    }
    let mut amps = vec![Complex64::ZERO; ptr_dim];
    for (s, sys_amp) in system.amplitudes().iter().enumerate() {
        for (p, amp) in amps.iter_mut().enumerate() {
            *amp += sys_amp.conj() * joint.amplitudes()[s * ptr_dim + p];
        }
    }
    StateVector::from_amplitudes(vec![spaces::pointer()], amps)
}

/// The weak value `⟨post|O|pre⟩ / ⟨post|pre⟩`.
pub fn weak_value(
    obs: &Operator,
    pre: &StateVector,
    post: &StateVector,
) -> Result<WeakValue, CoreError> {
    let denom = inner(post, pre)?;
    if denom.norm() <= EQ_TOL {
        return Err(CoreError::OrthogonalPostselection);
    }
    let numer = inner(post, &obs.apply(pre)?)?;
    Ok(WeakValue {
        value: numer / denom,
        observable: obs.clone(),
        pre: pre.clone(),
        post: post.clone(),
    })
}

/// Recombine the `Π_H`- and `Π_V`-probe weak values into the identity and
/// `σ_z` observables: `w_I = w_H + w_V`, `w_Z = w_H − w_V`.
pub fn combine_weak_values(
    w_h: &WeakValue,
    w_v: &WeakValue,
) -> Result<(WeakValue, WeakValue), CoreError> {
    if !w_h.pre.approx_eq(&w_v.pre, EQ_TOL) || !w_h.post.approx_eq(&w_v.post, EQ_TOL) {
        return Err(CoreError::MismatchedStates);
    }
    let w_i = WeakValue {
        value: w_h.value + w_v.value,
        observable: w_h.observable.add(&w_v.observable)?,
        pre: w_h.pre.clone(),
        post: w_h.post.clone(),
    };
    let w_z = WeakValue {
        value: w_h.value - w_v.value,
        observable: w_h.observable.sub(&w_v.observable)?,
        pre: w_h.pre.clone(),
        post: w_h.post.clone(),
    };
    Ok((w_i, w_z))
}

/// Decompose the transition `pre → post` over a complete set of virtual
/// paths. The amplitudes are the weak values of the paths and sum to one.
///
/// A set of observables summing to the identity is complete for every pair
/// of boundary states. The recombined set `{Π_u⊗I/2, Π_l⊗I/2, Π_u⊗σ_z/2,
/// Π_l⊗σ_z/2}` sums to `I ⊗ Π_H` instead, yet still resolves the full
/// transition amplitude here because the V-sector amplitude vanishes; such
/// state-level completeness is accepted too.
pub fn virtual_path_decomposition(
    paths: &[Operator],
    pre: &StateVector,
    post: &StateVector,
) -> Result<VirtualPathSet, CoreError> {
    let amplitudes = paths
        .iter()
        .map(|p| weak_value(p, pre, post).map(|w| w.value))
        .collect::<Result<Vec<_>, _>>()?;
    let mut sum = Operator::zero(paths[0].spaces().to_vec());
    for p in paths {
        sum = sum.add(p)?;
    }
    let id = Operator::identity(paths[0].spaces().to_vec());
    let op_deviation = sum
        .matrix()
        .iter()
        .zip(id.matrix())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if op_deviation > EQ_TOL {
        let amp_scale = amplitudes.iter().map(Complex64::norm).sum::<f64>().max(1.0);
        let amp_sum: Complex64 = amplitudes.iter().sum();
        if (amp_sum - Complex64::ONE).norm() > EQ_TOL * amp_scale {
            return Err(CoreError::IncompletePathSet(op_deviation));
        }
    }
    Ok(VirtualPathSet {
        observables: paths.to_vec(),
        amplitudes,
    })
}

/// Strong-measurement statistics for the same paths: the collapsed
/// transition probabilities `|⟨post|O_k|pre⟩|²`, with no normalization by
/// the total transition amplitude. Unlike the weak-value amplitudes these
/// do not interfere.
pub fn projective_transition_probabilities(
    paths: &[Operator],
    pre: &StateVector,
    post: &StateVector,
) -> Result<Vec<f64>, CoreError> {
    paths
        .iter()
        .map(|p| {
            let amp = inner(post, &p.apply(pre)?)?;
            Ok(amp.norm_sqr())
        })
        .collect()
}

/// The four projector paths `Π_u⊗Π_H, Π_u⊗Π_V, Π_l⊗Π_H, Π_l⊗Π_V`.
pub fn projector_path_set() -> Vec<Operator> {
    let pi_u = Operator::level_projector(spaces::path(), "u").unwrap();
    let pi_l = Operator::level_projector(spaces::path(), "l").unwrap();
    let pi_h = Operator::level_projector(spaces::pol(), "H").unwrap();
    let pi_v = Operator::level_projector(spaces::pol(), "V").unwrap();
    vec![
        pi_u.tensor(&pi_h).unwrap(),
        pi_u.tensor(&pi_v).unwrap(),
        pi_l.tensor(&pi_h).unwrap(),
        pi_l.tensor(&pi_v).unwrap(),
    ]
}

/// The recombined paths `Π_u⊗I/2, Π_l⊗I/2, Π_u⊗σ_z/2, Π_l⊗σ_z/2`.
pub fn cheshire_path_set() -> Vec<Operator> {
    let pi_u = Operator::level_projector(spaces::path(), "u").unwrap();
    let pi_l = Operator::level_projector(spaces::path(), "l").unwrap();
    let id = Operator::identity(vec![spaces::pol()]);
    let sz = Operator::pauli_z(spaces::pol()).unwrap();
    let half = c(0.5);
    vec![
        pi_u.tensor(&id).unwrap().scale(half),
        pi_l.tensor(&id).unwrap().scale(half),
        pi_u.tensor(&sz).unwrap().scale(half),
        pi_l.tensor(&sz).unwrap().scale(half),
    ]
}

/// `Π_l ⊗ Π_a` on path ⊗ pol for the given probe.
pub fn lower_path_probe_observable(probe: ProbePolarization) -> Operator {
    let pi_l = Operator::level_projector(spaces::path(), "l").unwrap();
    pi_l.tensor(&probe.projector()).unwrap()
}
