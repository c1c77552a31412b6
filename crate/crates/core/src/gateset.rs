//! Gate and circuit sampling for the unitary circuit ensemble.
//!
//! A gate is either a Haar-random `U(2)` rotation on one qubit (probability
//! `p_g`) or a CNOT on an ordered pair of distinct qubits. Every realization
//! draws from its own ChaCha stream, selected by `(master_seed, index)`, so a
//! circuit depends only on those two numbers and never on scheduling.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Random stream owned by one realization.
pub type GateRng = ChaCha8Rng;

/// 2x2 complex matrix, row-major.
pub type Mat2 = [[C64; 2]; 2];

/// Default probability that a sampled gate is a single-qubit gate.
pub const DEFAULT_P_SINGLE: f64 = 0.5;

/// Stream for realization `index` of the ensemble seeded by `master_seed`.
///
/// ChaCha supports 2^64 independent streams per key; the realization index
/// selects the stream, so streams never overlap.
pub fn realization_rng(master_seed: u64, index: u64) -> GateRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Euler-type angles of a `U(2)` gate.
///
/// `alpha` only contributes a global phase. It is sampled and kept anyway so
/// that serialized circuits reproduce the exact matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateAngles {
    pub alpha: f64,
    pub psi: f64,
    pub chi: f64,
    pub phi: f64,
}

impl GateAngles {
    pub const IDENTITY: GateAngles = GateAngles { alpha: 0.0, psi: 0.0, chi: 0.0, phi: 0.0 };

    /// Builds angles from the uniform variate `xi ∈ [0, 1]`, `phi = asin(√xi)`.
    pub fn from_xi(alpha: f64, psi: f64, chi: f64, xi: f64) -> Self {
        GateAngles { alpha, psi, chi, phi: xi.clamp(0.0, 1.0).sqrt().asin() }
    }

    pub fn is_valid(&self) -> bool {
        let in_circle = |a: f64| (0.0..TAU).contains(&a);
        in_circle(self.alpha) && in_circle(self.psi) && in_circle(self.chi) && (0.0..=FRAC_PI_2).contains(&self.phi)
    }
}

/// Haar-distributed `U(2)` angles.
pub fn sample_u2_angles<R: Rng + ?Sized>(rng: &mut R) -> GateAngles {
    let alpha = rng.random::<f64>() * TAU;
    let psi = rng.random::<f64>() * TAU;
    let chi = rng.random::<f64>() * TAU;
    let xi = rng.random::<f64>();
    GateAngles::from_xi(alpha, psi, chi, xi)
}

/// `e^{iα} [[cosφ e^{iψ}, sinφ e^{iχ}], [−sinφ e^{−iχ}, cosφ e^{−iψ}]]`.
pub fn u2_matrix(angles: &GateAngles) -> Mat2 {
    let (sin_phi, cos_phi) = angles.phi.sin_cos();
    let global = C64::cis(angles.alpha);
    let c = global * C64::cis(angles.psi) * cos_phi;
    let s = global * C64::cis(angles.chi) * sin_phi;
    let minus_s_bar = -global * C64::cis(-angles.chi) * sin_phi;
    let c_bar = global * C64::cis(-angles.psi) * cos_phi;
    [[c, s], [minus_s_bar, c_bar]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    SingleQubit { qubit: usize, angles: GateAngles },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let check = |q: usize| {
            if q < n_qubits {
                Ok(())
            } else {
                Err(Error::QubitOutOfRange { qubit: q, n_qubits })
            }
        };
        match *self {
            Gate::SingleQubit { qubit, .. } => check(qubit),
            Gate::Cnot { control, target } => {
                check(control)?;
                check(target)?;
                if control == target {
                    return Err(Error::SameControlTarget(control));
                }
                Ok(())
            }
        }
    }
}

/// Draws one gate. With a single qubit no CNOT exists, so the draw is always
/// a single-qubit gate.
pub fn sample_gate<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize, p_single: f64) -> Gate {
    debug_assert!(n_qubits >= 1);
    let single = n_qubits == 1 || rng.random::<f64>() < p_single;
    if single {
        let qubit = rng.random_range(0..n_qubits);
        Gate::SingleQubit { qubit, angles: sample_u2_angles(rng) }
    } else {
        let control = rng.random_range(0..n_qubits);
        let mut target = rng.random_range(0..n_qubits - 1);
        if target >= control {
            target += 1;
        }
        Gate::Cnot { control, target }
    }
}

/// Endless gate sequence of one realization. Taking the first `n` items is
/// the same as `sample_circuit(.., n, ..)`.
#[derive(Debug, Clone)]
pub struct GateStream {
    rng: GateRng,
    n_qubits: usize,
    p_single: f64,
}

impl GateStream {
    pub fn new(master_seed: u64, realization_index: u64, n_qubits: usize, p_single: f64) -> Self {
        GateStream { rng: realization_rng(master_seed, realization_index), n_qubits, p_single }
    }
}

impl Iterator for GateStream {
    type Item = Gate;

    fn next(&mut self) -> Option<Gate> {
        Some(sample_gate(&mut self.rng, self.n_qubits, self.p_single))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub master_seed: u64,
    pub realization_index: u64,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::NoQubits);
        }
        for gate in &gates {
            gate.validate(n_qubits)?;
        }
        Ok(Circuit { n_qubits, gates, master_seed: 0, realization_index: 0 })
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Line-oriented text form: a header line followed by one gate per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nq={} seed={} idx={}", self.n_qubits, self.master_seed, self.realization_index);
        for gate in &self.gates {
            let _ = match gate {
                Gate::SingleQubit { qubit, angles } => writeln!(
                    out,
                    "U2 q={} alpha={:.16e} psi={:.16e} chi={:.16e} phi={:.16e}",
                    qubit, angles.alpha, angles.psi, angles.chi, angles.phi
                ),
                Gate::Cnot { control, target } => writeln!(out, "CNOT c={control} t={target}"),
            };
        }
        out
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn parse_fields<'a>(line_no: usize, tokens: impl Iterator<Item = &'a str>, keys: &[&str]) -> Result<Vec<&'a str>> {
    let err = |message: String| Error::Parse { line: line_no, message };
    let tokens: Vec<&str> = tokens.collect();
    if tokens.len() != keys.len() {
        return Err(err(format!("expected {} fields, found {}", keys.len(), tokens.len())));
    }
    tokens
        .iter()
        .zip(keys)
        .map(|(tok, key)| match tok.split_once('=') {
            Some((k, v)) if k == *key => Ok(v),
            _ => Err(err(format!("expected `{key}=<value>`, found `{tok}`"))),
        })
        .collect()
}

fn parse_value<T: FromStr>(line_no: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse { line: line_no, message: format!("invalid value for {key}: `{raw}`") })
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let (line_no, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        let h = parse_fields(line_no, header.split_whitespace(), &["nq", "seed", "idx"])?;
        let n_qubits: usize = parse_value(line_no, "nq", h[0])?;
        let master_seed: u64 = parse_value(line_no, "seed", h[1])?;
        let realization_index: u64 = parse_value(line_no, "idx", h[2])?;

        let mut gates = Vec::new();
        for (line_no, line) in lines {
            let mut tokens = line.split_whitespace();
            let gate = match tokens.next() {
                Some("U2") => {
                    let v = parse_fields(line_no, tokens, &["q", "alpha", "psi", "chi", "phi"])?;
                    Gate::SingleQubit {
                        qubit: parse_value(line_no, "q", v[0])?,
                        angles: GateAngles {
                            alpha: parse_value(line_no, "alpha", v[1])?,
                            psi: parse_value(line_no, "psi", v[2])?,
                            chi: parse_value(line_no, "chi", v[3])?,
                            phi: parse_value(line_no, "phi", v[4])?,
                        },
                    }
                }
                Some("CNOT") => {
                    let v = parse_fields(line_no, tokens, &["c", "t"])?;
                    Gate::Cnot { control: parse_value(line_no, "c", v[0])?, target: parse_value(line_no, "t", v[1])? }
                }
                Some(other) => return Err(Error::Parse { line: line_no, message: format!("unknown gate `{other}`") }),
                None => unreachable!("blank lines are filtered"),
            };
            gate.validate(n_qubits).map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
            gates.push(gate);
        }
        let mut circuit = Circuit::new(n_qubits, gates)?;
        circuit.master_seed = master_seed;
        circuit.realization_index = realization_index;
        Ok(circuit)
    }
}

/// Circuit `realization_index` of the ensemble seeded by `master_seed`.
///
/// Gates are drawn one after another from the realization stream, so a longer
/// circuit always extends a shorter one with the same seed and index.
pub fn sample_circuit(
    master_seed: u64,
    realization_index: u64,
    n_qubits: usize,
    n_gates: usize,
    p_single: f64,
) -> Result<Circuit> {
    if n_qubits == 0 {
        return Err(Error::NoQubits);
    }
    if !(0.0..=1.0).contains(&p_single) {
        return Err(Error::InvalidProbability(p_single));
    }
    let gates = GateStream::new(master_seed, realization_index, n_qubits, p_single).take(n_gates).collect();
    Ok(Circuit { n_qubits, gates, master_seed, realization_index })
}

/// How many realizations to run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sizing {
    Explicit(u64),
    /// `n_r = a · 2^(b − n_q)`, keeping the number of sampled amplitudes fixed.
    Rule {
        a: u64,
        b: u32,
    },
}

impl Default for Sizing {
    fn default() -> Self {
        Sizing::Rule { a: 10, b: 20 }
    }
}

impl Sizing {
    pub fn realizations(&self, n_qubits: usize) -> u64 {
        match *self {
            Sizing::Explicit(n) => n,
            Sizing::Rule { a, b } => {
                let b = b as usize;
                if b >= n_qubits {
                    a.saturating_mul(1u64 << (b - n_qubits).min(63))
                } else {
                    (a >> (n_qubits - b).min(63)).max(1)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_qubits: usize,
    pub p_single: f64,
    pub n_realizations: u64,
    /// Gate counts at which statistics are evaluated, strictly increasing.
    pub checkpoints: Vec<usize>,
    pub master_seed: u64,
    /// Register size guard; states above it are refused.
    pub max_qubits: usize,
}

impl EnsembleConfig {
    pub fn new(n_qubits: usize, sizing: Sizing, checkpoints: Vec<usize>, master_seed: u64) -> Result<Self> {
        let config = EnsembleConfig {
            n_qubits,
            p_single: DEFAULT_P_SINGLE,
            n_realizations: sizing.realizations(n_qubits),
            checkpoints,
            master_seed,
            max_qubits: crate::column::DEFAULT_MAX_QUBITS,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_p_single(mut self, p_single: f64) -> Result<Self> {
        self.p_single = p_single;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::NoQubits);
        }
        if self.n_qubits > self.max_qubits {
            return Err(Error::TooManyQubits { n_qubits: self.n_qubits, max: self.max_qubits });
        }
        if !(0.0..=1.0).contains(&self.p_single) {
            return Err(Error::InvalidProbability(self.p_single));
        }
        if self.n_realizations == 0 {
            return Err(Error::NoRealizations);
        }
        if self.checkpoints.is_empty() || self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::CheckpointsNotIncreasing);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_unitarity_residual(m: &Mat2) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let dot: C64 = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - expected).norm());
            }
        }
        worst
    }

    #[test]
    fn xi_endpoints() {
        assert_eq!(GateAngles::from_xi(0.0, 0.0, 0.0, 0.0).phi, 0.0);
        assert_eq!(GateAngles::from_xi(0.0, 0.0, 0.0, 1.0).phi, FRAC_PI_2);
    }

    #[test]
    fn identity_and_flip_matrices() {
        let id = u2_matrix(&GateAngles::IDENTITY);
        assert_eq!(id, [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]]);

        let flip = u2_matrix(&GateAngles { phi: FRAC_PI_2, ..GateAngles::IDENTITY });
        let expected = [[0.0, 1.0], [-1.0, 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((flip[i][j] - expected[i][j]).norm() < 1e-16);
            }
        }
    }

    #[test]
    fn sampled_gates_are_unitary() {
        let mut rng = realization_rng(7, 0);
        for _ in 0..10_000 {
            let angles = sample_u2_angles(&mut rng);
            assert!(angles.is_valid());
            assert!(max_unitarity_residual(&u2_matrix(&angles)) < 1e-14);
        }
    }

    #[test]
    fn cos2_phi_mean_is_half() {
        let n = 1_000_000;
        let mut rng = realization_rng(11, 3);
        let values: Vec<f64> = (0..n).map(|_| sample_u2_angles(&mut rng).phi.cos().powi(2)).collect();
        let mean = values.iter().sum::<f64>() / n as f64;
        // cos²φ = 1 − ξ is uniform on [0, 1]: variance 1/12.
        let sigma = (1.0 / 12.0 / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn top_left_intensity_is_uniform_ks() {
        let n = 1_000_000;
        let mut rng = realization_rng(5, 1);
        let mut values: Vec<f64> = (0..n).map(|_| u2_matrix(&sample_u2_angles(&mut rng))[0][0].norm_sqr()).collect();
        values.sort_by(f64::total_cmp);
        let d = values
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = i as f64 / n as f64;
                let hi = (i + 1) as f64 / n as f64;
                (x - lo).abs().max((hi - x).abs())
            })
            .fold(0.0, f64::max);
        // Asymptotic 1% critical value of the one-sample KS statistic.
        let critical = 1.628 / (n as f64).sqrt();
        assert!(d < critical, "KS statistic {d} >= {critical}");
    }

    #[test]
    fn degenerate_probabilities() {
        let mut rng = realization_rng(1, 0);
        for _ in 0..1000 {
            assert!(matches!(sample_gate(&mut rng, 3, 1.0), Gate::SingleQubit { .. }));
            assert!(matches!(sample_gate(&mut rng, 1, 0.0), Gate::SingleQubit { qubit: 0, .. }));
        }
    }

    #[test]
    fn cnot_pairs_uniform_on_two_qubits() {
        let n = 100_000;
        let mut rng = realization_rng(2, 0);
        let mut forward = 0usize;
        for _ in 0..n {
            match sample_gate(&mut rng, 2, 0.0) {
                Gate::Cnot { control: 0, target: 1 } => forward += 1,
                Gate::Cnot { control: 1, target: 0 } => {}
                other => panic!("unexpected gate {other:?}"),
            }
        }
        let freq = forward as f64 / n as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn single_qubit_frequency_at_half() {
        let n = 100_000;
        let mut rng = realization_rng(3, 0);
        let singles = (0..n).filter(|_| matches!(sample_gate(&mut rng, 5, 0.5), Gate::SingleQubit { .. })).count();
        let freq = singles as f64 / n as f64;
        assert!((freq - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "freq {freq}");
    }

    #[test]
    fn circuits_are_deterministic_and_distinct() {
        assert!(sample_circuit(1, 0, 3, 0, 0.5).unwrap().is_empty());
        let a = sample_circuit(9, 4, 4, 50, 0.5).unwrap();
        let b = sample_circuit(9, 4, 4, 50, 0.5).unwrap();
        assert_eq!(a, b);
        for seed in 0..100 {
            let r0 = sample_circuit(seed, 0, 4, 20, 0.5).unwrap();
            let r1 = sample_circuit(seed, 1, 4, 20, 0.5).unwrap();
            assert_ne!(r0.gates, r1.gates, "seed {seed}");
        }
    }

    #[test]
    fn text_format_round_trip_is_exact() {
        let circuit = sample_circuit(123, 7, 5, 40, 0.5).unwrap();
        let text = circuit.to_text();
        assert!(text.starts_with("nq=5 seed=123 idx=7\n"));
        let parsed: Circuit = text.parse().unwrap();
        assert_eq!(parsed, circuit);
    }

    #[test]
    fn text_format_rejects_bad_lines() {
        let err = "nq=2 seed=1 idx=0\nCNOT c=1 t=1\n".parse::<Circuit>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = "nq=2 seed=1 idx=0\nU2 q=0 alpha=0\n".parse::<Circuit>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = "nq=2 seed=1 idx=0\nSWAP a=0 b=1\n".parse::<Circuit>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn sizing_rule() {
        let rule = Sizing::Rule { a: 10, b: 20 };
        assert_eq!(rule.realizations(20), 10);
        assert_eq!(rule.realizations(10), 10 * 1024);
        assert_eq!(rule.realizations(24), 1);
        assert_eq!(Sizing::Explicit(77).realizations(3), 77);
    }

    #[test]
    fn ensemble_config_validation() {
        assert!(EnsembleConfig::new(3, Sizing::Explicit(10), vec![1, 2, 5], 0).is_ok());
        assert_eq!(
            EnsembleConfig::new(3, Sizing::Explicit(10), vec![2, 2], 0).unwrap_err(),
            Error::CheckpointsNotIncreasing
        );
        assert_eq!(EnsembleConfig::new(3, Sizing::Explicit(0), vec![1], 0).unwrap_err(), Error::NoRealizations);
        let cfg = EnsembleConfig::new(3, Sizing::Explicit(1), vec![1], 0).unwrap();
        assert_eq!(cfg.with_p_single(1.5).unwrap_err(), Error::InvalidProbability(1.5));
    }
}
