//! Programmable gadget circuits.
//!
//! A gadget on `n` qubits has `n + 1` layers of single-qubit rotations
//! `R = exp(−i(αₓσₓ + α_yσ_y + α_zσ_z))`. Between consecutive layers sits a
//! fan of CNOTs from one control to every other qubit; the first fan is
//! controlled by the last qubit and the control moves up by one qubit per
//! fan. Each gate, or each whole layer, can be switched off.
//!
//! A circuit has a preparation half acting on `|0…0⟩`, then the noisy
//! encoding on every qubit, then a measurement half followed by a
//! computational-basis readout.

use nalgebra::Matrix2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{build_model, kcopy_model, FieldParams, NoiseLevel, StatisticalModel};
use crate::error::{Error, Result};
use crate::fisher::{cfi_matrix, outcome_distribution, scalar_crb, Measurement};
use crate::qcore::{apply_local_left, paulis, unitarity_error, CMat, Ket, C64, MAX_QUBITS, VERIFY_TOL};
use crate::search::local::{gradient_descent, GradientDescentOptions};
use crate::search::{de_minimize, genetic_gradient_minimize, pso_minimize, DeConfig, GaConfig, PsoConfig, SearchSpace};

/// Objective value assigned to circuits whose outcome statistics cannot
/// estimate all three parameters.
pub const PENALTY: f64 = 1e6;

/// `exp(−i(αₓσₓ + α_yσ_y + α_zσ_z))`.
pub fn rotation_gate(ax: f64, ay: f64, az: f64) -> Matrix2<C64> {
    let t = (ax * ax + ay * ay + az * az).sqrt();
    if t == 0.0 {
        return Matrix2::identity();
    }
    let (s, c) = t.sin_cos();
    let [x, y, z] = paulis();
    let gen = x * C64::new(ax / t, 0.0) + y * C64::new(ay / t, 0.0) + z * C64::new(az / t, 0.0);
    Matrix2::identity() * C64::new(c, 0.0) - gen * C64::new(0.0, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Gate {
    Rotation { qubit: usize, angles: [f64; 3] },
    Cnot { control: usize, target: usize },
}

impl Gate {
    fn max_qubit(&self) -> usize {
        match *self {
            Gate::Rotation { qubit, .. } => qubit,
            Gate::Cnot { control, target } => control.max(target),
        }
    }

    /// `self · m` on an `n`-qubit register.
    fn apply(&self, n: usize, m: &CMat) -> CMat {
        match *self {
            Gate::Rotation { qubit, angles: [a, b, c] } => apply_local_left(&rotation_gate(a, b, c), qubit, n, m),
            Gate::Cnot { control, target } => {
                let cb = 1usize << (n - 1 - control);
                let tb = 1usize << (n - 1 - target);
                let mut out = m.clone();
                for r in 0..m.nrows() {
                    if r & cb != 0 {
                        out.set_row(r, &m.row(r ^ tb));
                    }
                }
                out
            }
        }
    }
}

/// `G_last ⋯ G_1` on `n` qubits.
pub fn sequence_unitary(n: usize, gates: &[Gate]) -> CMat {
    let d = 1usize << n;
    gates.iter().fold(CMat::identity(d, d), |u, g| g.apply(n, &u))
}

/// Which switches a gadget carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchEncoding {
    /// One bit per rotation and one per CNOT.
    PerGate,
    /// One bit per rotation layer and one per CNOT fan, `2n + 1` in total.
    PerLayer,
}

/// One gadget with its switches and rotation angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GadgetDoc", into = "GadgetDoc")]
pub struct Gadget {
    n_qubits: usize,
    encoding: SwitchEncoding,
    /// Per gate: rotations (layer-major) then CNOTs (fan-major). Per layer:
    /// rotation layer 0, fan 0, layer 1, …, layer n.
    bits: Vec<u8>,
    /// Indexed by `layer · n + qubit`.
    angles: Vec<[f64; 3]>,
}

/// Serialized form with switch strings of `0` and `1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GadgetDoc {
    n_qubits: usize,
    encoding: SwitchEncoding,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotation_bits: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cnot_bits: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layer_bits: Option<String>,
    angles: Vec<[f64; 3]>,
}

fn bits_to_string(b: &[u8]) -> String {
    b.iter().map(|&v| if v == 0 { '0' } else { '1' }).collect()
}

fn bits_from_string(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::MalformedGenome(format!("switch character {other:?}"))),
        })
        .collect()
}

impl From<Gadget> for GadgetDoc {
    fn from(g: Gadget) -> Self {
        let (rotation_bits, cnot_bits, layer_bits) = match g.encoding {
            SwitchEncoding::PerGate => {
                let split = g.rotation_slots();
                (Some(bits_to_string(&g.bits[..split])), Some(bits_to_string(&g.bits[split..])), None)
            }
            SwitchEncoding::PerLayer => (None, None, Some(bits_to_string(&g.bits))),
        };
        GadgetDoc { n_qubits: g.n_qubits, encoding: g.encoding, rotation_bits, cnot_bits, layer_bits, angles: g.angles }
    }
}

impl TryFrom<GadgetDoc> for Gadget {
    type Error = Error;

    fn try_from(d: GadgetDoc) -> Result<Self> {
        let missing = |what: &str| Error::MalformedGenome(format!("missing {what}"));
        let bits = match d.encoding {
            SwitchEncoding::PerGate => {
                let mut b = bits_from_string(d.rotation_bits.as_deref().ok_or_else(|| missing("rotation_bits"))?)?;
                b.extend(bits_from_string(d.cnot_bits.as_deref().ok_or_else(|| missing("cnot_bits"))?)?);
                b
            }
            SwitchEncoding::PerLayer => {
                bits_from_string(d.layer_bits.as_deref().ok_or_else(|| missing("layer_bits"))?)?
            }
        };
        Gadget::new(d.n_qubits, d.encoding, bits, d.angles)
    }
}

impl Gadget {
    pub fn new(n_qubits: usize, encoding: SwitchEncoding, bits: Vec<u8>, angles: Vec<[f64; 3]>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::MalformedGenome(format!("gadget on {n_qubits} qubits")));
        }
        let g = Self { n_qubits, encoding, bits, angles };
        if g.bits.len() != g.n_bits() {
            return Err(Error::MalformedGenome(format!("{} switch bits, expected {}", g.bits.len(), g.n_bits())));
        }
        if g.bits.iter().any(|&b| b > 1) {
            return Err(Error::MalformedGenome("switch bits must be 0 or 1".into()));
        }
        if g.angles.len() != g.rotation_slots() {
            return Err(Error::MalformedGenome(format!(
                "{} rotations, expected {}",
                g.angles.len(),
                g.rotation_slots()
            )));
        }
        if g.angles.iter().flatten().any(|a| !a.is_finite()) {
            return Err(Error::MalformedGenome("non-finite angle".into()));
        }
        Ok(g)
    }

    /// Every switch off and every angle zero.
    pub fn off(n_qubits: usize, encoding: SwitchEncoding) -> Result<Self> {
        let slots = n_qubits * (n_qubits + 1);
        let bits = match encoding {
            SwitchEncoding::PerGate => slots + n_qubits * n_qubits.saturating_sub(1),
            SwitchEncoding::PerLayer => 2 * n_qubits + 1,
        };
        Self::new(n_qubits, encoding, vec![0; bits], vec![[0.0; 3]; slots])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn encoding(&self) -> SwitchEncoding {
        self.encoding
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn angles(&self) -> &[[f64; 3]] {
        &self.angles
    }

    /// `n(n + 1)`.
    pub fn rotation_slots(&self) -> usize {
        self.n_qubits * (self.n_qubits + 1)
    }

    /// `n(n − 1)`.
    pub fn cnot_slots(&self) -> usize {
        self.n_qubits * (self.n_qubits - 1)
    }

    pub fn n_bits(&self) -> usize {
        match self.encoding {
            SwitchEncoding::PerGate => self.rotation_slots() + self.cnot_slots(),
            SwitchEncoding::PerLayer => 2 * self.n_qubits + 1,
        }
    }

    /// Control qubit of fan `f`.
    pub fn fan_control(&self, f: usize) -> usize {
        self.n_qubits - 1 - f
    }

    fn rotation_on(&self, layer: usize, qubit: usize) -> bool {
        match self.encoding {
            SwitchEncoding::PerGate => self.bits[layer * self.n_qubits + qubit] == 1,
            SwitchEncoding::PerLayer => self.bits[2 * layer] == 1,
        }
    }

    fn cnot_on(&self, fan: usize, slot: usize) -> bool {
        match self.encoding {
            SwitchEncoding::PerGate => self.bits[self.rotation_slots() + fan * (self.n_qubits - 1) + slot] == 1,
            SwitchEncoding::PerLayer => self.bits[2 * fan + 1] == 1,
        }
    }

    /// Gates that are switched on, in application order.
    pub fn gates(&self) -> Vec<Gate> {
        let n = self.n_qubits;
        let mut out = Vec::new();
        for layer in 0..=n {
            for q in 0..n {
                if self.rotation_on(layer, q) {
                    out.push(Gate::Rotation { qubit: q, angles: self.angles[layer * n + q] });
                }
            }
            if layer == n {
                break;
            }
            let control = self.fan_control(layer);
            let targets = (0..n).filter(|&t| t != control);
            for (slot, target) in targets.enumerate() {
                if self.cnot_on(layer, slot) {
                    out.push(Gate::Cnot { control, target });
                }
            }
        }
        out
    }

    pub fn all_switches_on(mut self) -> Self {
        self.bits.iter_mut().for_each(|b| *b = 1);
        self
    }
}

/// Preparation and measurement halves, each a sequence of gadgets of a
/// common width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitGenome {
    prep: Vec<Gadget>,
    meas: Vec<Gadget>,
}

impl CircuitGenome {
    pub fn new(prep: Vec<Gadget>, meas: Vec<Gadget>) -> Result<Self> {
        let g = Self { prep, meas };
        g.validate()?;
        Ok(g)
    }

    /// One all-off gadget in each half.
    pub fn off(prep_qubits: usize, meas_qubits: usize, encoding: SwitchEncoding) -> Result<Self> {
        Self::new(vec![Gadget::off(prep_qubits, encoding)?], vec![Gadget::off(meas_qubits, encoding)?])
    }

    pub fn validate(&self) -> Result<()> {
        for half in [&self.prep, &self.meas] {
            let first = half.first().ok_or_else(|| Error::MalformedGenome("empty circuit half".into()))?;
            if half.iter().any(|g| g.n_qubits != first.n_qubits || g.encoding != first.encoding) {
                return Err(Error::MalformedGenome("gadgets in one half differ in width or encoding".into()));
            }
        }
        if self.meas[0].n_qubits % self.prep[0].n_qubits != 0 {
            return Err(Error::MalformedGenome("measurement width is not a multiple of the preparation width".into()));
        }
        Ok(())
    }

    pub fn prep(&self) -> &[Gadget] {
        &self.prep
    }

    pub fn meas(&self) -> &[Gadget] {
        &self.meas
    }

    pub fn gadget_count(&self) -> usize {
        self.prep.len() + self.meas.len()
    }

    pub fn n_bits(&self) -> usize {
        self.prep.iter().chain(&self.meas).map(Gadget::n_bits).sum()
    }

    /// Number of continuous genes, three per rotation slot.
    pub fn n_angles(&self) -> usize {
        3 * self.prep.iter().chain(&self.meas).map(Gadget::rotation_slots).sum::<usize>()
    }

    /// Switches and angles flattened in gadget order, preparation first.
    pub fn to_flat(&self) -> (Vec<u8>, Vec<f64>) {
        let all = || self.prep.iter().chain(&self.meas);
        let bits = all().flat_map(|g| g.bits.iter().copied()).collect();
        let angles = all().flat_map(|g| g.angles.iter().flatten().copied()).collect();
        (bits, angles)
    }

    /// Same layout as `self` with new switches and angles.
    pub fn with_flat(&self, bits: &[u8], angles: &[f64]) -> Result<Self> {
        if bits.len() != self.n_bits() || angles.len() != self.n_angles() {
            return Err(Error::MalformedGenome(format!(
                "flat genome of {} bits and {} angles, expected {} and {}",
                bits.len(),
                angles.len(),
                self.n_bits(),
                self.n_angles()
            )));
        }
        let (mut bi, mut ai) = (0, 0);
        let mut rebuild = |g: &Gadget| {
            let nb = g.n_bits();
            let na = g.rotation_slots();
            let b = bits[bi..bi + nb].to_vec();
            let a = (0..na).map(|s| std::array::from_fn(|c| angles[ai + 3 * s + c])).collect();
            bi += nb;
            ai += 3 * na;
            Gadget::new(g.n_qubits, g.encoding, b, a)
        };
        let prep = self.prep.iter().map(&mut rebuild).collect::<Result<Vec<_>>>()?;
        let meas = self.meas.iter().map(&mut rebuild).collect::<Result<Vec<_>>>()?;
        Self::new(prep, meas)
    }

    pub fn to_gates(&self) -> GateCircuit {
        GateCircuit {
            prep_qubits: self.prep[0].n_qubits,
            meas_qubits: self.meas[0].n_qubits,
            prep: self.prep.iter().flat_map(Gadget::gates).collect(),
            meas: self.meas.iter().flat_map(Gadget::gates).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::MalformedGenome(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(s).map_err(|e| Error::MalformedGenome(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }
}

/// With probability `p`, appends an all-off gadget to a uniformly chosen
/// half.
pub fn grow<R: Rng + ?Sized>(genome: &CircuitGenome, p: f64, rng: &mut R) -> Result<CircuitGenome> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Unsupported(format!("growth probability {p}")));
    }
    let mut g = genome.clone();
    if rng.random::<f64>() < p {
        let half = if rng.random::<bool>() { &mut g.prep } else { &mut g.meas };
        let template = &half[0];
        half.push(Gadget::off(template.n_qubits, template.encoding)?);
    }
    g.validate()?;
    Ok(g)
}

/// A circuit as explicit gate lists, the form shared by gadget genomes and
/// the fixed presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCircuit {
    pub prep_qubits: usize,
    pub meas_qubits: usize,
    pub prep: Vec<Gate>,
    pub meas: Vec<Gate>,
}

impl GateCircuit {
    pub fn new(prep_qubits: usize, meas_qubits: usize, prep: Vec<Gate>, meas: Vec<Gate>) -> Result<Self> {
        let c = Self { prep_qubits, meas_qubits, prep, meas };
        if prep_qubits == 0 || meas_qubits > MAX_QUBITS || meas_qubits % prep_qubits != 0 {
            return Err(Error::MalformedGenome(format!("widths {prep_qubits} and {meas_qubits}")));
        }
        let bad = |gates: &[Gate], n: usize| {
            gates.iter().any(|g| g.max_qubit() >= n || matches!(g, Gate::Cnot { control, target } if control == target))
        };
        if bad(&c.prep, prep_qubits) || bad(&c.meas, meas_qubits) {
            return Err(Error::MalformedGenome("gate acts outside its register".into()));
        }
        Ok(c)
    }

    pub fn n_angles(&self) -> usize {
        3 * self.prep.iter().chain(&self.meas).filter(|g| matches!(g, Gate::Rotation { .. })).count()
    }

    /// Rotation angles in gate order, preparation first.
    pub fn angles(&self) -> Vec<f64> {
        self.prep
            .iter()
            .chain(&self.meas)
            .filter_map(|g| match g {
                Gate::Rotation { angles, .. } => Some(*angles),
                Gate::Cnot { .. } => None,
            })
            .flatten()
            .collect()
    }

    pub fn with_angles(&self, a: &[f64]) -> Result<Self> {
        if a.len() != self.n_angles() {
            return Err(Error::LengthMismatch { expected: self.n_angles(), found: a.len() });
        }
        let mut c = self.clone();
        let mut i = 0;
        for g in c.prep.iter_mut().chain(c.meas.iter_mut()) {
            if let Gate::Rotation { angles, .. } = g {
                *angles = [a[i], a[i + 1], a[i + 2]];
                i += 3;
            }
        }
        Ok(c)
    }

    pub fn compile(&self) -> Result<CompiledCircuit> {
        let prep_unitary = sequence_unitary(self.prep_qubits, &self.prep);
        let meas_unitary = sequence_unitary(self.meas_qubits, &self.meas);
        let dev = unitarity_error(&prep_unitary).max(unitarity_error(&meas_unitary));
        if dev > VERIFY_TOL {
            return Err(Error::MalformedGenome(format!("compiled circuit is not unitary ({dev:e})")));
        }
        Ok(CompiledCircuit { prep_unitary, meas_unitary, prep_qubits: self.prep_qubits, meas_qubits: self.meas_qubits })
    }

    pub fn cnot_count(&self) -> usize {
        self.prep.iter().chain(&self.meas).filter(|g| matches!(g, Gate::Cnot { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledCircuit {
    pub prep_unitary: CMat,
    pub meas_unitary: CMat,
    pub prep_qubits: usize,
    pub meas_qubits: usize,
}

/// Compiles a gadget genome; switched-off gates become identities.
pub fn compile(genome: &CircuitGenome) -> Result<CompiledCircuit> {
    genome.validate()?;
    genome.to_gates().compile()
}

/// Encoded model and readout for a compiled circuit on `k` copies.
///
/// The preparation either produces one copy that is repeated `k` times
/// (when the measurement spans `k` preparation registers) or a global
/// state over the whole register.
pub fn simulate_at(c: &CompiledCircuit, gamma: f64, k: usize, phi: FieldParams) -> Result<(StatisticalModel, Measurement)> {
    if c.meas_qubits > MAX_QUBITS {
        return Err(Error::DimensionTooLarge { n: c.meas_qubits, max: MAX_QUBITS });
    }
    let noise = NoiseLevel::new(gamma)?;
    let psi = Ket::normalized(c.prep_unitary.column(0).into_owned())?;
    let model = if c.prep_qubits * k == c.meas_qubits {
        kcopy_model(&build_model(&psi, noise, phi)?, k)?
    } else if c.prep_qubits == c.meas_qubits {
        build_model(&psi, noise, phi)?
    } else {
        return Err(Error::DimensionMismatch { expected: c.prep_qubits * k, found: c.meas_qubits });
    };
    let meas = Measurement::projective(c.meas_unitary.adjoint())?;
    Ok((model, meas))
}

pub fn simulate(c: &CompiledCircuit, gamma: f64, k: usize) -> Result<(StatisticalModel, Measurement)> {
    simulate_at(c, gamma, k, FieldParams::zero())
}

/// `k · Tr F⁻¹` of the circuit's outcome statistics, or [`PENALTY`].
pub fn circuit_objective(c: &CompiledCircuit, gamma: f64, k: usize) -> f64 {
    let value = simulate(c, gamma, k).and_then(|(model, meas)| {
        let f = cfi_matrix(&outcome_distribution(&model, &meas)?);
        scalar_crb(&f, k)
    });
    match value {
        Ok(v) if v.is_finite() && v < PENALTY => v,
        _ => PENALTY,
    }
}

/// [`circuit_objective`] for a genome, with malformed genomes penalized.
pub fn genome_objective(g: &CircuitGenome, gamma: f64, k: usize) -> f64 {
    compile(g).map_or(PENALTY, |c| circuit_objective(&c, gamma, k))
}

/// Angle optimization of a fixed gate layout: a swarm over periodic angles
/// followed by finite-difference descent from the best particle.
pub fn optimize_angles(circuit: &GateCircuit, gamma: f64, k: usize, pso: &PsoConfig, seed: u64) -> Result<(GateCircuit, f64)> {
    let n = circuit.n_angles();
    let f = |a: &[f64]| circuit.with_angles(a).and_then(|c| c.compile()).map_or(PENALTY, |c| circuit_objective(&c, gamma, k));
    let space = SearchSpace::angles(n, 0)?;
    let r = pso_minimize(f, &space, pso, seed);
    let gd = GradientDescentOptions { step: 0.1, max_steps: 2000, fd_step: 1e-6, grad_tol: 1e-9 };
    let (x, v, _) = gradient_descent(f, &r.best_x, &gd);
    let (x, v) = if v <= r.best_value { (x, v) } else { (r.best_x, r.best_value) };
    Ok((circuit.with_angles(&x)?, v))
}

/// Differential evolution over the switches and angles of a genome layout.
/// Returns the best genome and its objective.
pub fn de_search(template: &CircuitGenome, gamma: f64, k: usize, cfg: &DeConfig, seed: u64) -> Result<(CircuitGenome, f64)> {
    template.validate()?;
    let f = |bits: &[u8], angles: &[f64]| {
        template.with_flat(bits, angles).map_or(PENALTY, |g| genome_objective(&g, gamma, k))
    };
    let space = SearchSpace::angles(template.n_angles(), template.n_bits())?;
    let r = de_minimize(f, &space, cfg, seed)?;
    Ok((template.with_flat(&r.best_bits, &r.best_x)?, r.best_value))
}

/// Genetic search with gradient refinement of the angles over a genome
/// layout.
pub fn genetic_search(template: &CircuitGenome, gamma: f64, k: usize, cfg: &GaConfig, seed: u64) -> Result<(CircuitGenome, f64)> {
    template.validate()?;
    let f = |bits: &[u8], angles: &[f64]| {
        template.with_flat(bits, angles).map_or(PENALTY, |g| genome_objective(&g, gamma, k))
    };
    let space = SearchSpace::angles(template.n_angles(), template.n_bits())?;
    let r = genetic_gradient_minimize(f, &space, cfg, seed, None)?;
    Ok((template.with_flat(&r.best_bits, &r.best_x)?, r.best_value))
}

/// Gate layouts of the reported optimal circuits, all angles zero.
pub mod presets {
    use super::{Gate, GateCircuit};
    use crate::error::Result;

    fn r(q: usize) -> Gate {
        Gate::Rotation { qubit: q, angles: [0.0; 3] }
    }

    fn cx(control: usize, target: usize) -> Gate {
        Gate::Cnot { control, target }
    }

    /// Per-copy preparation shared by every preset.
    fn prep() -> Vec<Gate> {
        vec![r(0), r(1), cx(0, 1)]
    }

    /// One copy: rotations and an entangling gate before the channel, then
    /// rotations, the reversed CNOT and rotations before readout.
    pub fn one_copy() -> Result<GateCircuit> {
        GateCircuit::new(2, 2, prep(), vec![r(0), r(1), cx(1, 0), r(0), r(1)])
    }

    /// Two copies, medium noise.
    pub fn two_copy_medium() -> Result<GateCircuit> {
        GateCircuit::new(2, 4, prep(), vec![r(0), r(1), r(2), cx(0, 1), cx(2, 3), r(1), cx(1, 2)])
    }

    /// Two copies, high noise.
    pub fn two_copy_high() -> Result<GateCircuit> {
        GateCircuit::new(2, 4, prep(), vec![r(0), r(2), r(3), cx(0, 1), cx(2, 3), r(1), r(3), cx(1, 2)])
    }

    /// Three copies, medium noise.
    pub fn three_copy_medium() -> Result<GateCircuit> {
        GateCircuit::new(
            2,
            6,
            prep(),
            vec![r(0), r(2), r(4), cx(0, 1), cx(4, 5), cx(1, 3), r(1), r(3), cx(2, 4)],
        )
    }

    /// Three copies, high noise; the third copy is measured separately.
    pub fn three_copy_high() -> Result<GateCircuit> {
        GateCircuit::new(
            2,
            6,
            prep(),
            vec![r(0), r(2), r(3), r(4), cx(0, 1), cx(2, 3), cx(4, 5), r(1), r(3), cx(1, 2)],
        )
    }

    /// All presets keyed by their short name.
    pub fn all() -> Result<Vec<(&'static str, GateCircuit)>> {
        Ok(vec![
            ("one_copy", one_copy()?),
            ("two_copy_medium", two_copy_medium()?),
            ("two_copy_high", two_copy_high()?),
            ("three_copy_medium", three_copy_medium()?),
            ("three_copy_high", three_copy_high()?),
        ])
    }
}
