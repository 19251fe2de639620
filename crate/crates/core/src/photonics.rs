//! Second-quantized two-photon model of the PPBS-based controlled-Z gate.
//!
//! Two photons (system and pointer) interfere at a partial polarizing beam
//! splitter with polarization-dependent transmissions `T_H = 1`, `T_V = 1/3`.
//! Loss-balancing stages attenuate the H amplitude of both arms by `1/√3`,
//! and coincidence post-selection (one photon per output arm) then realizes
//! the controlled-Z gate with success probability 1/9.
//!
//! Partial spectral distinguishability is modeled with a two-dimensional
//! internal space per photon and an overlap `η`; two-photon interference
//! terms scale with `η`, which is the only parameter the coincidence
//! probabilities depend on.
//!
//! Mode layout: 4 arms × 2 polarizations × 2 internal levels = 16 modes.
//! The two-photon state is stored as a symmetric 16×16 amplitude matrix
//! `Ψ`, so a single-photon scattering matrix `S` acts by congruence,
//! `Ψ → S Ψ Sᵀ`, and bosonic symmetry holds by construction.

use num_complex::Complex64;

use crate::error::CoreError;
use crate::hilbert::Operator;
use crate::scenario::{spaces, CouplingStrength, ProbePolarization};
use crate::EQ_TOL;

pub const NUM_ARMS: usize = 4;
pub const NUM_MODES: usize = 16;

/// Spatial arm of an optical mode. Loss arms are populated only by
/// scattering, never by inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    System,
    Pointer,
    LossSystem,
    LossPointer,
}

impl Arm {
    fn index(self) -> usize {
        match self {
            Arm::System => 0,
            Arm::Pointer => 1,
            Arm::LossSystem => 2,
            Arm::LossPointer => 3,
        }
    }

    pub fn is_loss(self) -> bool {
        matches!(self, Arm::LossSystem | Arm::LossPointer)
    }
}

/// Polarization of an optical mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }
}

/// One single-photon mode: arm × polarization × internal (spectral) level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpticalMode {
    pub arm: Arm,
    pub pol: Pol,
    pub internal: usize,
}

impl OpticalMode {
    pub fn new(arm: Arm, pol: Pol, internal: usize) -> Self {
        assert!(internal < 2, "internal basis has size 2");
        OpticalMode { arm, pol, internal }
    }

    pub fn index(self) -> usize {
        (self.arm.index() * 2 + self.pol.index()) * 2 + self.internal
    }
}

fn mode_is_loss(index: usize) -> bool {
    index / 4 >= 2
}

/// Partial polarizing beam splitter between the system and pointer arms.
///
/// Convention: amplitude transmission `√T`, amplitude reflection `i√(1−T)`,
/// identical for both input ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PPBSSpec {
    pub t_h: f64,
    pub t_v: f64,
}

impl PPBSSpec {
    pub fn new(t_h: f64, t_v: f64) -> Result<Self, CoreError> {
        for t in [t_h, t_v] {
            if !(0.0..=1.0).contains(&t) || !t.is_finite() {
                return Err(CoreError::InvalidTransmission(t));
            }
        }
        Ok(PPBSSpec { t_h, t_v })
    }

    /// The gate PPBS of the experiment: `T_H = 1`, `T_V = 1/3`.
    pub fn gate() -> Self {
        PPBSSpec {
            t_h: 1.0,
            t_v: 1.0 / 3.0,
        }
    }

    pub fn transmission(&self, pol: Pol) -> f64 {
        match pol {
            Pol::H => self.t_h,
            Pol::V => self.t_v,
        }
    }
}

/// A single-photon scattering matrix over the 16 modes.
#[derive(Debug, Clone)]
pub struct ModeScattering {
    mat: Vec<Complex64>, // row-major NUM_MODES x NUM_MODES
}

impl ModeScattering {
    pub fn identity() -> Self {
        let mut mat = vec![Complex64::ZERO; NUM_MODES * NUM_MODES];
        for i in 0..NUM_MODES {
            mat[i * NUM_MODES + i] = Complex64::ONE;
        }
        ModeScattering { mat }
    }

    /// Beam-splitter coupling between the same (pol, internal) modes of two
    /// arms: `√T` on the diagonal, `i√(1−T)` off it.
    fn couple_arms(&mut self, a: Arm, b: Arm, pol: Pol, transmission: f64) {
        let t = Complex64::new(transmission.sqrt(), 0.0);
        let r = Complex64::new(0.0, (1.0 - transmission).sqrt());
        for internal in 0..2 {
            let i = OpticalMode::new(a, pol, internal).index();
            let j = OpticalMode::new(b, pol, internal).index();
            self.mat[i * NUM_MODES + i] = t;
            self.mat[j * NUM_MODES + j] = t;
            self.mat[i * NUM_MODES + j] = r;
            self.mat[j * NUM_MODES + i] = r;
        }
    }

    /// The central PPBS between the system and pointer arms.
    pub fn ppbs(spec: PPBSSpec) -> Self {
        let mut s = Self::identity();
        s.couple_arms(Arm::System, Arm::Pointer, Pol::H, spec.t_h);
        s.couple_arms(Arm::System, Arm::Pointer, Pol::V, spec.t_v);
        s
    }

    /// Loss-balancing stage: attenuates the H amplitude of both main arms by
    /// `1/√3`, implemented as auxiliary PPBSs (`T_H = 1/3`, `T_V = 1`)
    /// against the dedicated loss arms.
    pub fn balancing_attenuators() -> Self {
        let mut s = Self::identity();
        s.couple_arms(Arm::System, Arm::LossSystem, Pol::H, 1.0 / 3.0);
        s.couple_arms(Arm::Pointer, Arm::LossPointer, Pol::H, 1.0 / 3.0);
        s
    }

    /// Half-wave plate at `theta` on one arm: reflects polarization about
    /// the plate axis, `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]` per internal
    /// level.
    pub fn hwp(arm: Arm, theta: f64) -> Self {
        let c = Complex64::new((2.0 * theta).cos(), 0.0);
        let s2 = Complex64::new((2.0 * theta).sin(), 0.0);
        let mut s = Self::identity();
        for internal in 0..2 {
            let h = OpticalMode::new(arm, Pol::H, internal).index();
            let v = OpticalMode::new(arm, Pol::V, internal).index();
            s.mat[h * NUM_MODES + h] = c;
            s.mat[h * NUM_MODES + v] = s2;
            s.mat[v * NUM_MODES + h] = s2;
            s.mat[v * NUM_MODES + v] = -c;
        }
        s
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.mat
    }

    /// Max deviation of `S†S` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let n = NUM_MODES;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::ZERO;
                for k in 0..n {
                    s += self.mat[k * n + i].conj() * self.mat[k * n + j];
                }
                let expect = if i == j { Complex64::ONE } else { Complex64::ZERO };
                worst = worst.max((s - expect).norm());
            }
        }
        worst
    }
}

/// Spectral overlap `η = |⟨φ_sys|φ_ptr⟩|` between the two photons' internal
/// states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indistinguishability {
    eta: f64,
}

impl Indistinguishability {
    pub fn new(eta: f64) -> Result<Self, CoreError> {
        if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
            return Err(CoreError::InvalidIndistinguishability(eta));
        }
        Ok(Indistinguishability { eta })
    }

    pub fn perfect() -> Self {
        Indistinguishability { eta: 1.0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// A bosonic two-photon state over the 16 optical modes.
///
/// Stored as the symmetric matrix `Ψ` of `|ψ⟩ = Σ_{ij} Ψ_ij a_i† a_j† |0⟩`;
/// the normalized unordered-pair amplitudes are `2Ψ_ij` for `i < j` and
/// `√2 Ψ_ii` for doubly-occupied modes.
#[derive(Debug, Clone)]
pub struct TwoPhotonFockState {
    psi: Vec<Complex64>, // NUM_MODES x NUM_MODES, symmetric
}

impl TwoPhotonFockState {
    /// One photon in each of two (not necessarily orthogonal) single-photon
    /// states given as mode-amplitude vectors.
    pub fn from_two_photons(u: &[Complex64], v: &[Complex64]) -> Result<Self, CoreError> {
        if u.len() != NUM_MODES || v.len() != NUM_MODES {
            return Err(CoreError::DimensionMismatch {
                expected: NUM_MODES,
                got: u.len().max(v.len()),
            });
        }
        let mut psi = vec![Complex64::ZERO; NUM_MODES * NUM_MODES];
        for i in 0..NUM_MODES {
            for j in 0..NUM_MODES {
                psi[i * NUM_MODES + j] = (u[i] * v[j] + u[j] * v[i]) * 0.5;
            }
        }
        Ok(TwoPhotonFockState { psi })
    }

    /// Experiment input: one photon per main arm with the given polarization
    /// and internal vector (`internal = [c0, c1]`). Errors on loss-arm input.
    pub fn input_pair(
        sys_pol: Pol,
        sys_internal: [Complex64; 2],
        ptr_pol: Pol,
        ptr_internal: [Complex64; 2],
    ) -> Result<Self, CoreError> {
        let mut u = vec![Complex64::ZERO; NUM_MODES];
        let mut v = vec![Complex64::ZERO; NUM_MODES];
        for k in 0..2 {
            u[OpticalMode::new(Arm::System, sys_pol, k).index()] = sys_internal[k];
            v[OpticalMode::new(Arm::Pointer, ptr_pol, k).index()] = ptr_internal[k];
        }
        Self::from_two_photons(&u, &v)
    }

    /// Rebuild a state from unordered-pair amplitudes.
    pub fn from_pair_amplitudes(
        pairs: &[(OpticalMode, OpticalMode, Complex64)],
    ) -> Self {
        let mut psi = vec![Complex64::ZERO; NUM_MODES * NUM_MODES];
        for &(a, b, amp) in pairs {
            let (i, j) = (a.index(), b.index());
            if i == j {
                psi[i * NUM_MODES + i] = amp / std::f64::consts::SQRT_2;
            } else {
                psi[i * NUM_MODES + j] = amp * 0.5;
                psi[j * NUM_MODES + i] = amp * 0.5;
            }
        }
        TwoPhotonFockState { psi }
    }

    /// Amplitude of the normalized unordered-pair basis state on `(a, b)`.
    pub fn pair_amplitude(&self, a: OpticalMode, b: OpticalMode) -> Complex64 {
        let (i, j) = (a.index(), b.index());
        if i == j {
            self.psi[i * NUM_MODES + i] * std::f64::consts::SQRT_2
        } else {
            self.psi[i * NUM_MODES + j] * 2.0
        }
    }

    pub fn norm_sq(&self) -> f64 {
        2.0 * self.psi.iter().map(Complex64::norm_sqr).sum::<f64>()
    }

    /// Probability weight on states with at least one photon in a loss arm.
    pub fn loss_weight(&self) -> f64 {
        let mut w = 0.0;
        for i in 0..NUM_MODES {
            for j in i..NUM_MODES {
                if mode_is_loss(i) || mode_is_loss(j) {
                    w += self
                        .pair_amplitude(mode_from_index(i), mode_from_index(j))
                        .norm_sqr();
                }
            }
        }
        w
    }

    /// Apply a single-photon scattering matrix: `Ψ → S Ψ Sᵀ`.
    pub fn scatter_with(&mut self, s: &ModeScattering) {
        let n = NUM_MODES;
        let mut tmp = vec![Complex64::ZERO; n * n];
        // tmp = S Ψ
        for i in 0..n {
            for k in 0..n {
                let sik = s.mat[i * n + k];
                if sik == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    tmp[i * n + j] += sik * self.psi[k * n + j];
                }
            }
        }
        // Ψ' = tmp Sᵀ
        let mut out = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::ZERO;
                for k in 0..n {
                    acc += tmp[i * n + k] * s.mat[j * n + k];
                }
                out[i * n + j] = acc;
            }
        }
        self.psi = out;
    }

    /// Coincidence amplitude: one photon in the system arm with `(p1, i1)`,
    /// one in the pointer arm with `(p2, i2)`.
    pub fn coincidence_amplitude(&self, p1: Pol, i1: usize, p2: Pol, i2: usize) -> Complex64 {
        self.pair_amplitude(
            OpticalMode::new(Arm::System, p1, i1),
            OpticalMode::new(Arm::Pointer, p2, i2),
        )
    }

    /// Total coincidence probability (one photon per main arm, any
    /// polarization and internal level).
    pub fn coincidence_probability(&self) -> f64 {
        let mut p = 0.0;
        for p1 in [Pol::H, Pol::V] {
            for p2 in [Pol::H, Pol::V] {
                for i1 in 0..2 {
                    for i2 in 0..2 {
                        p += self.coincidence_amplitude(p1, i1, p2, i2).norm_sqr();
                    }
                }
            }
        }
        p
    }
}

fn mode_from_index(index: usize) -> OpticalMode {
    let arm = match index / 4 {
        0 => Arm::System,
        1 => Arm::Pointer,
        2 => Arm::LossSystem,
        _ => Arm::LossPointer,
    };
    let pol = if (index / 2) % 2 == 0 { Pol::H } else { Pol::V };
    OpticalMode::new(arm, pol, index % 2)
}

/// Scatter at the central PPBS. The input must be supported on the two main
/// arms only.
pub fn ppbs_scatter(
    state: &TwoPhotonFockState,
    spec: PPBSSpec,
) -> Result<TwoPhotonFockState, CoreError> {
    if state.loss_weight() > EQ_TOL {
        return Err(CoreError::InputOnLossArm);
    }
    let mut out = state.clone();
    out.scatter_with(&ModeScattering::ppbs(spec));
    Ok(out)
}

/// Hong-Ou-Mandel coincidence probability for one photon per input arm with
/// the same polarization, at intensity transmission `T` and overlap `η`:
/// `P_cc = t⁴ + r⁴ − 2η²t²r²` with `t² = T`, `r² = 1 − T`.
pub fn hom_coincidence(eta: Indistinguishability, transmission: f64) -> Result<f64, CoreError> {
    if !(0.0..=1.0).contains(&transmission) {
        return Err(CoreError::InvalidTransmission(transmission));
    }
    let t2 = transmission;
    let r2 = 1.0 - transmission;
    Ok(t2 * t2 + r2 * r2 - 2.0 * eta.eta() * eta.eta() * t2 * r2)
}

/// One coincidence branch of a post-selected two-photon process, labeled by
/// the internal level detected in each output arm.
#[derive(Debug, Clone)]
pub struct GateBranch {
    pub sys_internal: usize,
    pub ptr_internal: usize,
    /// Amplitude map on the two-qubit (pol ⊗ pointer) space for this branch.
    pub op: Operator,
}

/// The coincidence-post-selected process of a two-photon network, as a set
/// of branch (Kraus) operators on the two-qubit space. Branches with
/// different internal outcomes are distinguishable in principle, so the
/// conditional state is `ρ ∝ Σ_k K_k ρ K_k†`.
#[derive(Debug, Clone)]
pub struct PostselectedProcess {
    pub branches: Vec<GateBranch>,
}

impl PostselectedProcess {
    /// Success probability for a pure two-qubit input state.
    pub fn success_for(&self, amps: &[Complex64; 4]) -> f64 {
        self.branches
            .iter()
            .map(|b| {
                let mut p = 0.0;
                for row in 0..4 {
                    let mut acc = Complex64::ZERO;
                    for col in 0..4 {
                        acc += b.op.entry(row, col) * amps[col];
                    }
                    p += acc.norm_sqr();
                }
                p
            })
            .sum()
    }

    /// Success probability averaged over the maximally mixed input,
    /// `tr(Σ_k K_k† K_k) / 4`.
    pub fn average_success(&self) -> f64 {
        let total: f64 = self
            .branches
            .iter()
            .map(|b| b.op.matrix().iter().map(Complex64::norm_sqr).sum::<f64>())
            .sum();
        total / 4.0
    }

    /// Process fidelity with a target unitary:
    /// `F = Σ_k |tr(U†K_k)|² / (d · Σ_k tr(K_k†K_k))`.
    pub fn process_fidelity(&self, target: &Operator) -> f64 {
        let d = 4.0;
        let mut overlap = 0.0;
        let mut weight = 0.0;
        for b in &self.branches {
            let mut tr = Complex64::ZERO;
            for row in 0..4 {
                for col in 0..4 {
                    tr += target.entry(row, col).conj() * b.op.entry(row, col);
                }
            }
            overlap += tr.norm_sqr();
            weight += b.op.matrix().iter().map(Complex64::norm_sqr).sum::<f64>();
        }
        overlap / (d * weight)
    }

    /// When the process has a single branch, its amplitude map.
    pub fn single_branch(&self) -> Option<&Operator> {
        if self.branches.len() == 1 {
            Some(&self.branches[0].op)
        } else {
            None
        }
    }
}

fn two_qubit_spaces() -> Vec<crate::hilbert::Space> {
    vec![spaces::pol(), spaces::pointer()]
}

const QUBIT_POLS: [Pol; 2] = [Pol::H, Pol::V];

/// Run a network (a list of scattering stages) on every two-qubit basis
/// input and collect the coincidence branches.
fn postselect_network(
    stages: &[ModeScattering],
    eta: Indistinguishability,
) -> PostselectedProcess {
    let e = eta.eta();
    let ptr_internal = [
        Complex64::new(e, 0.0),
        Complex64::new((1.0 - e * e).max(0.0).sqrt(), 0.0),
    ];
    let sys_internal = [Complex64::ONE, Complex64::ZERO];

    // branch matrices indexed by (sys_internal, ptr_internal)
    let mut mats = vec![vec![Complex64::ZERO; 16]; 4];
    for (col, (q1, q2)) in QUBIT_POLS
        .iter()
        .flat_map(|a| QUBIT_POLS.iter().map(move |b| (*a, *b)))
        .enumerate()
    {
        let mut state = TwoPhotonFockState::input_pair(q1, sys_internal, q2, ptr_internal)
            .expect("main-arm input");
        for s in stages {
            state.scatter_with(s);
        }
        for (row, (p1, p2)) in QUBIT_POLS
            .iter()
            .flat_map(|a| QUBIT_POLS.iter().map(move |b| (*a, *b)))
            .enumerate()
        {
            for i1 in 0..2 {
                for i2 in 0..2 {
                    mats[i1 * 2 + i2][row * 4 + col] =
                        state.coincidence_amplitude(p1, i1, p2, i2);
                }
            }
        }
    }

    let branches = mats
        .into_iter()
        .enumerate()
        .filter_map(|(k, mat)| {
            let weight: f64 = mat.iter().map(Complex64::norm_sqr).sum();
            if weight <= 1e-28 {
                return None;
            }
            Some(GateBranch {
                sys_internal: k / 2,
                ptr_internal: k % 2,
                op: Operator::from_matrix(two_qubit_spaces(), mat).expect("4x4 matrix"),
            })
        })
        .collect();
    PostselectedProcess { branches }
}

/// The controlled-Z network: central PPBS (`T_H = 1`, `T_V = 1/3`) plus, by
/// default, the loss-balancing attenuators.
#[derive(Debug, Clone, Copy)]
pub struct CzNetwork {
    pub eta: Indistinguishability,
    pub balanced: bool,
}

impl CzNetwork {
    pub fn new(eta: Indistinguishability) -> Self {
        CzNetwork { eta, balanced: true }
    }

    pub fn unbalanced(eta: Indistinguishability) -> Self {
        CzNetwork {
            eta,
            balanced: false,
        }
    }

    fn stages(&self) -> Vec<ModeScattering> {
        let mut stages = vec![ModeScattering::ppbs(PPBSSpec::gate())];
        if self.balanced {
            stages.push(ModeScattering::balancing_attenuators());
        }
        stages
    }

    /// The coincidence-post-selected process of the network.
    pub fn postselect(&self) -> PostselectedProcess {
        postselect_network(&self.stages(), self.eta)
    }

    /// `true` when the post-selected process is proportional to a unitary
    /// (success probability independent of the input state).
    pub fn is_balanced_process(&self) -> bool {
        let process = self.postselect();
        let basis_inputs: [[Complex64; 4]; 5] = {
            let o = Complex64::ONE;
            let z = Complex64::ZERO;
            let h = Complex64::new(0.5, 0.0);
            [
                [o, z, z, z],
                [z, o, z, z],
                [z, z, o, z],
                [z, z, z, o],
                [h, h, h, h],
            ]
        };
        let p0 = process.success_for(&basis_inputs[0]);
        basis_inputs
            .iter()
            .all(|b| (process.success_for(b) - p0).abs() <= 1e-10)
    }
}

/// The balanced CZ network post-selected on coincidences. Returns the
/// process and its (input-averaged) success probability; at `η = 1` the
/// single branch is the ideal CZ times a global amplitude and the success
/// probability is exactly 1/9 for every input.
pub fn cz_from_ppbs(eta: Indistinguishability) -> (PostselectedProcess, f64) {
    let process = CzNetwork::new(eta).postselect();
    let success = process.average_success();
    (process, success)
}

/// The ideal controlled-Z on pol ⊗ pointer: `diag(1, 1, 1, −1)`.
pub fn ideal_cz() -> Operator {
    let o = Complex64::ONE;
    let z = Complex64::ZERO;
    Operator::from_matrix(
        two_qubit_spaces(),
        vec![
            o, z, z, z, //
            z, o, z, z, //
            z, z, o, z, //
            z, z, z, -o,
        ],
    )
    .expect("4x4 matrix")
}

/// The full gate-level measurement interaction: half-wave plates at `θ_a`
/// (system arm) and `θ_g = g/4` (pointer arm) before and after the balanced
/// CZ network. At `η = 1` the post-selected branch equals
/// `U_M(g, θ_a)` up to a global amplitude.
pub fn gate_level_measurement_unitary(
    g: CouplingStrength,
    probe: ProbePolarization,
    eta: Indistinguishability,
) -> PostselectedProcess {
    let hwp_sys = ModeScattering::hwp(Arm::System, probe.theta_a());
    let hwp_ptr = ModeScattering::hwp(Arm::Pointer, g.theta_g());
    let stages = vec![
        hwp_sys.clone(),
        hwp_ptr.clone(),
        ModeScattering::ppbs(PPBSSpec::gate()),
        ModeScattering::balancing_attenuators(),
        hwp_sys,
        hwp_ptr,
    ];
    postselect_network(&stages, eta)
}

/// Assemble the conditional evolution of the full interferometer when the
/// lower-path interaction is realized by a post-selected photonic gate.
///
/// The gate branches are rescaled by 3 (the inverse amplitude of the
/// balanced gate) so that at `η = 1` the single branch reproduces
/// `U_tot` exactly. On the upper path the photons do not interact, so the
/// branch labeled by internal outcome `(i1, i2)` passes the system photon
/// (internal 0) and the pointer photon's matching internal component:
/// weight `η` for `(0, 0)`, `√(1−η²)` for `(0, 1)`, nothing for `(1, 0)`.
pub fn conditional_total_branches(
    g: CouplingStrength,
    probe: ProbePolarization,
    eta: Indistinguishability,
) -> Result<Vec<Operator>, CoreError> {
    let process = gate_level_measurement_unitary(g, probe, eta);
    let pi_u = Operator::level_projector(spaces::path(), "u")?;
    let pi_l = Operator::level_projector(spaces::path(), "l")?;
    let e = eta.eta();
    let bypass_weight = |b: &GateBranch| -> f64 {
        match (b.sys_internal, b.ptr_internal) {
            (0, 0) => e,
            (0, 1) => (1.0 - e * e).max(0.0).sqrt(),
            _ => 0.0,
        }
    };
    let id4 = Operator::identity(two_qubit_spaces());
    process
        .branches
        .iter()
        .map(|b| {
            let upper = pi_u
                .tensor(&id4.scale(Complex64::new(bypass_weight(b), 0.0)))?;
            let lower = pi_l.tensor(&b.op.scale(Complex64::new(3.0, 0.0)))?;
            upper.add(&lower)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::measurement_unitary;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn eta(v: f64) -> Indistinguishability {
        Indistinguishability::new(v).unwrap()
    }

    fn internal_0() -> [Complex64; 2] {
        [Complex64::ONE, Complex64::ZERO]
    }

    #[test]
    fn scattering_stages_are_unitary() {
        for s in [
            ModeScattering::ppbs(PPBSSpec::gate()),
            ModeScattering::ppbs(PPBSSpec::new(0.5, 0.5).unwrap()),
            ModeScattering::balancing_attenuators(),
            ModeScattering::hwp(Arm::System, 0.4),
            ModeScattering::hwp(Arm::Pointer, -0.7),
        ] {
            assert!(s.unitarity_defect() <= EQ_TOL);
        }
    }

    #[test]
    fn scattering_preserves_total_probability() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let u: Vec<Complex64> = (0..NUM_MODES)
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let v: Vec<Complex64> = (0..NUM_MODES)
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let mut state = TwoPhotonFockState::from_two_photons(&u, &v).unwrap();
            let before = state.norm_sq();
            state.scatter_with(&ModeScattering::hwp(Arm::System, 0.3));
            state.scatter_with(&ModeScattering::ppbs(PPBSSpec::gate()));
            state.scatter_with(&ModeScattering::balancing_attenuators());
            assert!((state.norm_sq() - before).abs() <= EQ_TOL * before.max(1.0));
        }
    }

    #[test]
    fn bosonic_roundtrip_through_ordered_representation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u: Vec<Complex64> = (0..NUM_MODES)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let v: Vec<Complex64> = (0..NUM_MODES)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut state = TwoPhotonFockState::from_two_photons(&u, &v).unwrap();
        state.scatter_with(&ModeScattering::ppbs(PPBSSpec::new(0.7, 0.2).unwrap()));
        let mut pairs = Vec::new();
        for i in 0..NUM_MODES {
            for j in i..NUM_MODES {
                let (a, b) = (mode_from_index(i), mode_from_index(j));
                pairs.push((a, b, state.pair_amplitude(a, b)));
            }
        }
        let rebuilt = TwoPhotonFockState::from_pair_amplitudes(&pairs);
        for (a, b) in state.psi.iter().zip(&rebuilt.psi) {
            assert!((a - b).norm() <= EQ_TOL);
        }
    }

    #[test]
    fn vv_interference_amplitude() {
        // one V photon per arm, η = 1: both-transmitted minus both-reflected
        // coincidence amplitude = 1/3 − 2/3 = −1/3
        let state =
            TwoPhotonFockState::input_pair(Pol::V, internal_0(), Pol::V, internal_0()).unwrap();
        let out = ppbs_scatter(&state, PPBSSpec::gate()).unwrap();
        let amp = out.coincidence_amplitude(Pol::V, 0, Pol::V, 0);
        assert!((amp - c(-1.0 / 3.0, 0.0)).norm() <= EQ_TOL);
    }

    #[test]
    fn hh_passes_untouched() {
        let state =
            TwoPhotonFockState::input_pair(Pol::H, internal_0(), Pol::H, internal_0()).unwrap();
        let out = ppbs_scatter(&state, PPBSSpec::gate()).unwrap();
        let amp = out.coincidence_amplitude(Pol::H, 0, Pol::H, 0);
        assert!((amp - Complex64::ONE).norm() <= EQ_TOL);
        assert!((out.norm_sq() - 1.0).abs() <= EQ_TOL);
    }

    #[test]
    fn distinguishable_photons_do_not_interfere() {
        // η = 0: coincidence probability for V,V = t⁴ + r⁴ = 5/9
        let state = TwoPhotonFockState::input_pair(
            Pol::V,
            internal_0(),
            Pol::V,
            [Complex64::ZERO, Complex64::ONE],
        )
        .unwrap();
        let out = ppbs_scatter(&state, PPBSSpec::gate()).unwrap();
        assert!((out.coincidence_probability() - 5.0 / 9.0).abs() <= EQ_TOL);
    }

    #[test]
    fn ppbs_scatter_rejects_loss_input() {
        let mut u = vec![Complex64::ZERO; NUM_MODES];
        let mut v = vec![Complex64::ZERO; NUM_MODES];
        u[OpticalMode::new(Arm::LossSystem, Pol::H, 0).index()] = Complex64::ONE;
        v[OpticalMode::new(Arm::Pointer, Pol::H, 0).index()] = Complex64::ONE;
        let state = TwoPhotonFockState::from_two_photons(&u, &v).unwrap();
        assert!(matches!(
            ppbs_scatter(&state, PPBSSpec::gate()),
            Err(CoreError::InputOnLossArm)
        ));
    }

    #[test]
    fn hom_dip_and_classical_limits() {
        assert!(hom_coincidence(eta(1.0), 0.5).unwrap().abs() <= EQ_TOL);
        assert!((hom_coincidence(eta(0.0), 0.5).unwrap() - 0.5).abs() <= EQ_TOL);
        assert!((hom_coincidence(eta(1.0), 1.0 / 3.0).unwrap() - 1.0 / 9.0).abs() <= EQ_TOL);
    }

    #[test]
    fn hom_formula_matches_fock_simulation() {
        // dual route: the closed form against the second-quantized model
        for t in [0.2, 1.0 / 3.0, 0.5, 0.8] {
            for e in [0.0, 0.4, 0.9, 1.0] {
                let ptr_internal = [c(e, 0.0), c((1.0f64 - e * e).sqrt(), 0.0)];
                let state =
                    TwoPhotonFockState::input_pair(Pol::V, internal_0(), Pol::V, ptr_internal)
                        .unwrap();
                let out =
                    ppbs_scatter(&state, PPBSSpec::new(1.0, t).unwrap()).unwrap();
                let sim = out.coincidence_probability();
                let formula = hom_coincidence(eta(e), t).unwrap();
                assert!(
                    (sim - formula).abs() <= EQ_TOL,
                    "T={t}, eta={e}: sim {sim} vs formula {formula}"
                );
            }
        }
    }

    #[test]
    fn hom_monotone_decreasing_in_eta() {
        for t in [0.1, 0.25, 0.5, 0.75] {
            let mut last = f64::INFINITY;
            for k in 0..=10 {
                let p = hom_coincidence(eta(k as f64 / 10.0), t).unwrap();
                assert!(p <= last + EQ_TOL);
                last = p;
            }
        }
    }

    #[test]
    fn balanced_gate_is_cz_with_ninth_success() {
        let (process, success) = cz_from_ppbs(eta(1.0));
        assert!((success - 1.0 / 9.0).abs() <= EQ_TOL);
        assert!(process.process_fidelity(&ideal_cz()) >= 1.0 - 1e-10);
        let k = process.single_branch().expect("single branch at eta=1");
        let scaled = k.scale(c(3.0, 0.0));
        assert!(scaled.deviation_up_to_phase(&ideal_cz()) <= 1e-10);
        // success independent of input
        assert!(CzNetwork::new(eta(1.0)).is_balanced_process());
    }

    #[test]
    fn unbalanced_gate_is_not_cz() {
        let process = CzNetwork::unbalanced(eta(1.0)).postselect();
        let k = process.single_branch().expect("single branch at eta=1");
        // amplitudes 1, t, t, t² − r² with t = 1/√3
        let t = (1.0f64 / 3.0).sqrt();
        assert!((k.entry(0, 0) - Complex64::ONE).norm() <= EQ_TOL);
        assert!((k.entry(1, 1) - c(t, 0.0)).norm() <= EQ_TOL);
        assert!((k.entry(2, 2) - c(t, 0.0)).norm() <= EQ_TOL);
        assert!((k.entry(3, 3) - c(-1.0 / 3.0, 0.0)).norm() <= EQ_TOL);
        assert!(!CzNetwork::unbalanced(eta(1.0)).is_balanced_process());
        assert!(k.scale(c(3.0, 0.0)).deviation_up_to_phase(&ideal_cz()) > 0.1);
    }

    #[test]
    fn distinguishable_gate_loses_the_phase() {
        let (process, _) = cz_from_ppbs(eta(0.0));
        // VV coincidence probability consistent with 5/9 (relative to the
        // 1/9 balanced rate on the other basis states)
        let vv = [Complex64::ZERO, Complex64::ZERO, Complex64::ZERO, Complex64::ONE];
        let hh = [Complex64::ONE, Complex64::ZERO, Complex64::ZERO, Complex64::ZERO];
        assert!((process.success_for(&vv) - 5.0 / 9.0).abs() <= EQ_TOL);
        assert!((process.success_for(&hh) - 1.0 / 9.0).abs() <= EQ_TOL);
        assert!(process.process_fidelity(&ideal_cz()) < 0.8);
    }

    #[test]
    fn gate_level_matches_direct_unitary() {
        let g = CouplingStrength::from_g(0.2).unwrap();
        let probe = ProbePolarization::horizontal();
        let process = gate_level_measurement_unitary(g, probe, eta(1.0));
        let k = process.single_branch().expect("single branch at eta=1");
        let u_m = measurement_unitary(g, probe);
        assert!(k.scale(c(3.0, 0.0)).deviation_up_to_phase(&u_m) <= 1e-10);
    }

    #[test]
    fn gate_level_matches_at_zero_coupling() {
        let g = CouplingStrength::from_g(0.0).unwrap();
        let probe = ProbePolarization::from_theta_a(0.35);
        let process = gate_level_measurement_unitary(g, probe, eta(1.0));
        let k = process.single_branch().unwrap();
        let u_m = measurement_unitary(g, probe);
        assert!(k.scale(c(3.0, 0.0)).deviation_up_to_phase(&u_m) <= 1e-10);
    }

    #[test]
    fn conditional_branches_reduce_to_total_unitary() {
        let g = CouplingStrength::from_g(0.3).unwrap();
        let probe = ProbePolarization::horizontal();
        let branches = conditional_total_branches(g, probe, eta(1.0)).unwrap();
        assert_eq!(branches.len(), 1);
        let u_tot = crate::scenario::total_unitary(g, probe);
        assert!(branches[0].approx_eq(&u_tot, 1e-10));
    }

    #[test]
    fn partial_eta_has_multiple_branches() {
        let g = CouplingStrength::from_g(0.2).unwrap();
        let probe = ProbePolarization::horizontal();
        let process = gate_level_measurement_unitary(g, probe, eta(0.9));
        assert!(process.branches.len() > 1);
        let fid = process.process_fidelity(&measurement_unitary(g, probe));
        assert!(fid < 1.0 - 1e-6);
    }
}
