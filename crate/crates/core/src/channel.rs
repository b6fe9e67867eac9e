//! Recursive encoding of `k` qudits into `n = kd + 1` physical qudits,
//! collective noise, and decoding.
//!
//! Slot layout before encoding (qudit 1 leftmost):
//!
//! ```text
//! [u^(d-1), ψ_k] [u^(d-1), ψ_(k-1)] ... [u^(d-1), ψ_1] [v]
//! ```
//!
//! Window `t` (1-indexed) covers slots `(t-1)d + 1 ..= td + 1`, so consecutive
//! windows share one carry slot. Encoding applies `U_E` from the last window
//! (the one holding `v`) to the first; decoding applies `U_E^†` in the
//! opposite order. After decoding, collective noise survives only on the
//! final slot.

use std::fmt;

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::{
    apply_block, apply_collective, derive_seed, fidelity, haar_special_unitary, reduced_density,
    rng_from_seed, sampled_special_linear, ComplexMatrix, DensityMatrix, StateVector, C64,
};
use crate::schur::{EncoderSpec, DEFAULT_MEMORY_CAP};

/// A contiguous run of `d + 1` slots acted on by one `U_E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    /// First slot, 0-indexed.
    pub start: usize,
    pub width: usize,
}

impl Window {
    /// Slots covered, 1-indexed and inclusive.
    pub fn slots(&self) -> (usize, usize) {
        (self.start + 1, self.start + self.width)
    }
}

/// A recursive code protecting `k` qudits of dimension `d`.
#[derive(Debug, Clone)]
pub struct RecursiveCode {
    pub d: usize,
    pub k: usize,
    pub n: usize,
    pub encoder: EncoderSpec,
    pub schedule: Vec<Window>,
    decoder: ComplexMatrix,
}

impl RecursiveCode {
    /// Total Hilbert space dimension `d^n`.
    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    /// 0-indexed slot holding `data[i]` (that is, `ψ_(i+1)`).
    pub fn data_slot(&self, i: usize) -> usize {
        (self.k - i) * self.d - 1
    }

    /// 0-indexed slot holding the ancilla `v`.
    pub fn carry_slot(&self) -> usize {
        self.n - 1
    }

    fn slot_dims(&self) -> Vec<usize> {
        vec![self.d; self.n]
    }
}

/// Builds the overlapping-window code for `k` protected qudits.
pub fn make_code(d: usize, k: usize, enc: EncoderSpec) -> Result<RecursiveCode> {
    make_code_with_cap(d, k, enc, DEFAULT_MEMORY_CAP)
}

/// As [`make_code`], refusing registers with more than `cap` amplitudes.
pub fn make_code_with_cap(
    d: usize,
    k: usize,
    enc: EncoderSpec,
    cap: u128,
) -> Result<RecursiveCode> {
    if k == 0 {
        return Err(Error::Domain("a code needs k >= 1".into()));
    }
    if enc.d != d {
        return Err(Error::Domain(format!(
            "encoder is for d = {}, code asked for d = {d}",
            enc.d
        )));
    }
    let n = k * d + 1;
    let entries = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if entries > cap {
        return Err(Error::Resource {
            what: format!("register of {n} qudits of dimension {d}"),
            entries,
            cap,
        });
    }
    let schedule = (0..k)
        .map(|t| Window {
            start: t * d,
            width: d + 1,
        })
        .collect();
    let decoder = enc.u_e.adjoint();
    Ok(RecursiveCode {
        d,
        k,
        n,
        encoder: enc,
        schedule,
        decoder,
    })
}

fn check_qudit(state: &StateVector, d: usize, what: &str) -> Result<()> {
    if state.dim() != d {
        return Err(Error::Domain(format!(
            "{what} has dimension {}, expected {d}",
            state.dim()
        )));
    }
    Ok(())
}

fn check_register(code: &RecursiveCode, state: &StateVector) -> Result<()> {
    if state.dim() != code.dim() {
        return Err(Error::Domain(format!(
            "state has dimension {}, code needs {}",
            state.dim(),
            code.dim()
        )));
    }
    Ok(())
}

/// The unencoded product state `[u^(d-1) ψ_k] ... [u^(d-1) ψ_1] [last]`.
pub fn product_input(
    code: &RecursiveCode,
    data: &[StateVector],
    last: &StateVector,
) -> Result<StateVector> {
    if data.len() != code.k {
        return Err(Error::Domain(format!(
            "code protects {} qudits, got {} data states",
            code.k,
            data.len()
        )));
    }
    for psi in data {
        check_qudit(psi, code.d, "data state")?;
    }
    check_qudit(last, code.d, "ancilla")?;
    let u = StateVector::basis(code.d, 0);
    let mut factors = Vec::with_capacity(code.n);
    for psi in data.iter().rev() {
        factors.extend(std::iter::repeat_n(u.clone(), code.d - 1));
        factors.push(psi.clone());
    }
    factors.push(last.clone());
    StateVector::product(&factors)
}

/// Encodes `data` (with `data[0] = ψ_1`) and the ancilla into the physical
/// register.
pub fn encode(
    code: &RecursiveCode,
    data: &[StateVector],
    ancilla: &StateVector,
) -> Result<StateVector> {
    let mut buf = product_input(code, data, ancilla)?.into_inner();
    for window in code.schedule.iter().rev() {
        apply_block(
            buf.as_mut_slice(),
            code.d,
            code.n,
            window.start,
            window.width,
            &code.encoder.u_e,
        )?;
    }
    Ok(StateVector::from_raw(buf))
}

/// `W^{⊗n}` applied to `state`, optionally renormalised (needed when `w` is
/// not unitary).
pub fn apply_noise(
    state: &StateVector,
    w: &ComplexMatrix,
    n: usize,
    renormalize: bool,
) -> Result<StateVector> {
    if !w.is_square() {
        return Err(Error::Domain("noise operator must be square".into()));
    }
    let mut buf = state.amplitudes().clone();
    apply_collective(buf.as_mut_slice(), n, w)?;
    if renormalize {
        let norm = buf.norm();
        if norm.is_nan() || norm <= 0.0 {
            return Err(Error::Degenerate("noise annihilated the state".into()));
        }
        buf /= C64::from(norm);
    }
    Ok(StateVector::from_raw(buf))
}

/// Applies `U_E^†` window by window, first window first.
pub fn decode(code: &RecursiveCode, state: &StateVector) -> Result<StateVector> {
    check_register(code, state)?;
    let mut buf = state.amplitudes().clone();
    for window in &code.schedule {
        apply_block(
            buf.as_mut_slice(),
            code.d,
            code.n,
            window.start,
            window.width,
            &code.decoder,
        )?;
    }
    Ok(StateVector::from_raw(buf))
}

/// Reduced states of the data slots; entry `i` corresponds to `data[i]`.
pub fn extract_data(code: &RecursiveCode, decoded: &StateVector) -> Result<Vec<DensityMatrix>> {
    check_register(code, decoded)?;
    let dims = code.slot_dims();
    (0..code.k)
        .map(|i| reduced_density(decoded, &dims, &[code.data_slot(i)]))
        .collect()
}

/// Reduced state of the final (carry) slot.
pub fn extract_carry(code: &RecursiveCode, decoded: &StateVector) -> Result<DensityMatrix> {
    check_register(code, decoded)?;
    reduced_density(decoded, &code.slot_dims(), &[code.carry_slot()])
}

/// The decoded state the recursion predicts: the data untouched and the
/// ancilla replaced by `W v / |W v|`.
pub fn expected_output(
    code: &RecursiveCode,
    data: &[StateVector],
    ancilla: &StateVector,
    w: &ComplexMatrix,
) -> Result<StateVector> {
    let carried = StateVector::normalized(w * ancilla.amplitudes())?;
    product_input(code, data, &carried)
}

/// Size `q = d^(d+1) - d^2` of the zero block padding the input density
/// matrix in the encoder basis.
pub fn padding_size(d: usize) -> usize {
    crate::schur::encoder_dim(d) - d * d
}

/// `(|ψ><ψ| ⊗ |v><v|) ⊕ 0_q`.
pub fn embedded_input_density(psi: &StateVector, v: &StateVector) -> Result<DensityMatrix> {
    let d = psi.dim();
    check_qudit(v, d, "ancilla")?;
    let block = DensityMatrix::pure(&psi.tensor(v));
    let dim = crate::schur::encoder_dim(d);
    let mut m = ComplexMatrix::zeros(dim, dim);
    m.view_mut((0, 0), (d * d, d * d)).copy_from(block.matrix());
    DensityMatrix::new(m)
}

/// Which group the collective error is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseKind {
    #[serde(rename = "haar-su(d)")]
    HaarSu,
    #[serde(rename = "sl(d,C)")]
    Sl,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseKind::HaarSu => f.write_str("haar-su(d)"),
            NoiseKind::Sl => f.write_str("sl(d,C)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseModel {
    pub fn sample<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> Result<ComplexMatrix> {
        match self.kind {
            NoiseKind::HaarSu => Ok(haar_special_unitary(d, rng)?.into_inner()),
            NoiseKind::Sl => sampled_special_linear(d, rng),
        }
    }

    fn renormalizes(&self) -> bool {
        self.kind == NoiseKind::Sl
    }
}

/// Aggregate of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub d: usize,
    pub k: usize,
    pub n: usize,
    pub noise: NoiseKind,
    pub trials: usize,
    pub master_seed: u64,
    /// Worst `1 - F` over trials for each data qudit, indexed like the input.
    pub per_slot_worst_infidelity: Vec<f64>,
    pub mean_infidelity: f64,
    /// Largest `|decoded - expected|` over trials.
    pub max_state_residual: f64,
    /// Largest deviation of the carry slot from `W|v><v|W^† / norm`.
    pub max_carry_residual: f64,
    pub seeds: Vec<u64>,
}

impl SimulationReport {
    pub fn max_infidelity(&self) -> f64 {
        self.per_slot_worst_infidelity
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug)]
struct TrialOutcome {
    infidelities: Vec<f64>,
    state_residual: f64,
    carry_residual: f64,
}

fn run_trial(
    code: &RecursiveCode,
    w: &ComplexMatrix,
    data: &[StateVector],
    ancilla: &StateVector,
    renormalize: bool,
) -> Result<TrialOutcome> {
    let encoded = encode(code, data, ancilla)?;
    let noisy = apply_noise(&encoded, w, code.n, renormalize)?;
    let decoded = decode(code, &noisy)?;

    let infidelities = extract_data(code, &decoded)?
        .iter()
        .zip(data)
        .map(|(rho, psi)| Ok(1.0 - fidelity(rho, psi)?))
        .collect::<Result<Vec<f64>>>()?;

    let expected = expected_output(code, data, ancilla, w)?;
    let state_residual = (decoded.amplitudes() - expected.amplitudes()).norm();

    let carried = StateVector::normalized(w * ancilla.amplitudes())?;
    let carry = extract_carry(code, &decoded)?;
    let carry_residual = (carry.matrix() - DensityMatrix::pure(&carried).matrix()).norm();

    Ok(TrialOutcome {
        infidelities,
        state_residual,
        carry_residual,
    })
}

/// Encode, apply noise, decode and compare, `trials` times. Trial `t` draws
/// `W`, the data states and the ancilla from `derive_seed(noise.seed, t)`.
pub fn simulate(
    code: &RecursiveCode,
    noise: NoiseModel,
    trials: usize,
) -> Result<SimulationReport> {
    simulate_with(code, noise, trials, |rng| noise.sample(code.d, rng))
}

/// As [`simulate`], drawing `W` from `sampler` instead of the noise model.
pub fn simulate_with<F>(
    code: &RecursiveCode,
    noise: NoiseModel,
    trials: usize,
    sampler: F,
) -> Result<SimulationReport>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<ComplexMatrix> + Sync,
{
    if trials == 0 {
        return Err(Error::Domain("simulation needs at least one trial".into()));
    }
    let seeds: Vec<u64> = (0..trials as u64)
        .map(|t| derive_seed(noise.seed, t))
        .collect();
    let outcomes: Vec<TrialOutcome> = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = rng_from_seed(seed);
            let w = sampler(&mut rng)?;
            let data: Vec<StateVector> = (0..code.k)
                .map(|_| StateVector::random(code.d, &mut rng))
                .collect();
            let ancilla = StateVector::random(code.d, &mut rng);
            run_trial(code, &w, &data, &ancilla, noise.renormalizes())
        })
        .collect::<Result<_>>()?;

    let mut worst = vec![0.0f64; code.k];
    let mut total = 0.0;
    let mut max_state_residual = 0.0f64;
    let mut max_carry_residual = 0.0f64;
    for o in &outcomes {
        for (w, &x) in worst.iter_mut().zip(&o.infidelities) {
            *w = w.max(x);
        }
        total += o.infidelities.iter().sum::<f64>();
        max_state_residual = max_state_residual.max(o.state_residual);
        max_carry_residual = max_carry_residual.max(o.carry_residual);
    }
    Ok(SimulationReport {
        d: code.d,
        k: code.k,
        n: code.n,
        noise: noise.kind,
        trials,
        master_seed: noise.seed,
        per_slot_worst_infidelity: worst,
        mean_infidelity: total / (trials * code.k) as f64,
        max_state_residual,
        max_carry_residual,
        seeds,
    })
}

/// `k / (kd + 1)`.
pub fn encoding_rate(d: usize, k: usize) -> Result<Ratio<u64>> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if k == 0 {
        return Err(Error::Domain("encoding rate needs k >= 1".into()));
    }
    let (d, k) = (d as u64, k as u64);
    Ok(Ratio::new(k, k * d + 1))
}

/// One row of a rate table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateRow {
    pub d: usize,
    pub k: usize,
    pub n: usize,
    pub rate: Ratio<u64>,
}

/// Rates for `k = 1..=kmax`.
pub fn rate_table(d: usize, kmax: usize) -> Result<Vec<RateRow>> {
    (1..=kmax)
        .map(|k| {
            Ok(RateRow {
                d,
                k,
                n: k * d + 1,
                rate: encoding_rate(d, k)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixcore::{
        identity, kron, random_special_linear, random_special_unitary, unitarity_residual,
        INVARIANT_TOL,
    };
    use crate::schur::{build_encoder, reference_encoder_d2, Generator};

    fn states(d: usize, count: usize, seed: u64) -> Vec<StateVector> {
        let mut rng = rng_from_seed(seed);
        (0..count)
            .map(|_| StateVector::random(d, &mut rng))
            .collect()
    }

    fn identity_encoder(d: usize) -> EncoderSpec {
        EncoderSpec::new(
            d,
            identity(crate::schur::encoder_dim(d)),
            Generator::Reference,
        )
        .unwrap()
    }

    #[test]
    fn schedules() {
        let code = make_code(2, 2, reference_encoder_d2()).unwrap();
        assert_eq!(code.n, 5);
        let slots: Vec<_> = code.schedule.iter().map(Window::slots).collect();
        assert_eq!(slots, vec![(1, 3), (3, 5)]);

        let single = make_code(2, 1, reference_encoder_d2()).unwrap();
        assert_eq!(single.n, 3);
        assert_eq!(single.schedule.len(), 1);

        let code3 = make_code(3, 2, build_encoder(3, 0).unwrap()).unwrap();
        assert_eq!(code3.n, 7);
        assert_eq!(code3.dim(), 2187);
        let slots: Vec<_> = code3.schedule.iter().map(Window::slots).collect();
        assert_eq!(slots, vec![(1, 4), (4, 7)]);
    }

    #[test]
    fn windows_share_one_carry_slot() {
        let code = make_code(2, 4, reference_encoder_d2()).unwrap();
        for pair in code.schedule.windows(2) {
            let (_, end) = pair[0].slots();
            let (start, _) = pair[1].slots();
            assert_eq!(end, start);
        }
        assert_eq!(code.schedule.last().unwrap().slots().1, code.n);
    }

    #[test]
    fn make_code_errors() {
        assert!(make_code(2, 0, reference_encoder_d2()).is_err());
        assert!(make_code(3, 1, reference_encoder_d2()).is_err());
        let err = make_code_with_cap(2, 10, reference_encoder_d2(), 1 << 20).unwrap_err();
        assert!(matches!(err, Error::Resource { entries, .. } if entries == 1 << 21));
    }

    #[test]
    fn encode_basis_column() {
        let code = make_code(2, 1, reference_encoder_d2()).unwrap();
        let u = StateVector::basis(2, 0);
        let encoded = encode(&code, std::slice::from_ref(&u), &u).unwrap();
        assert_eq!(
            encoded.amplitudes(),
            &code.encoder.u_e.column(0).into_owned()
        );
        let pre = product_input(&code, std::slice::from_ref(&u), &u).unwrap();
        assert_eq!(pre.amplitudes(), StateVector::basis(8, 0).amplitudes());
    }

    #[test]
    fn identity_encoder_leaves_product_state() {
        for d in [2, 3] {
            let code = make_code(d, 1, identity_encoder(d)).unwrap();
            let s = states(d, 2, 1);
            let encoded = encode(&code, &s[..1], &s[1]).unwrap();
            let pre = product_input(&code, &s[..1], &s[1]).unwrap();
            assert!((encoded.amplitudes() - pre.amplitudes()).norm() < 1e-15);
        }
    }

    #[test]
    fn two_window_encoding_matches_dense_circuit() {
        // U_E on qubits (3,4,5), then on (1,2,3), applied to u ψ2 u ψ1 v
        let enc = reference_encoder_d2();
        let code = make_code(2, 2, enc.clone()).unwrap();
        let s = states(2, 3, 7);
        let encoded = encode(&code, &s[..2], &s[2]).unwrap();

        let u = StateVector::basis(2, 0);
        let input = StateVector::product(&[u.clone(), s[1].clone(), u, s[0].clone(), s[2].clone()])
            .unwrap();
        let lower = kron(&identity(4), &enc.u_e);
        let upper = kron(&enc.u_e, &identity(4));
        let expect = upper * (lower * input.amplitudes());
        assert!((encoded.amplitudes() - expect).norm() < 1e-14);
    }

    #[test]
    fn first_rows_support() {
        for d in [2, 3, 4] {
            let s = states(d, 2, d as u64);
            let u = StateVector::basis(d, 0);
            let mut factors = vec![u; d - 1];
            factors.extend(s.iter().cloned());
            let input = StateVector::product(&factors).unwrap();
            assert!(input.iter().skip(d * d).all(|z| *z == C64::from(0.0)));
        }
    }

    #[test]
    fn embedded_density_padding() {
        assert_eq!(padding_size(2), 4);
        assert_eq!(padding_size(3), 72);
        let s = states(2, 2, 3);
        let rho = embedded_input_density(&s[0], &s[1]).unwrap();
        let u = StateVector::basis(2, 0);
        let input = StateVector::product(&[u, s[0].clone(), s[1].clone()]).unwrap();
        assert!((rho.matrix() - DensityMatrix::pure(&input).matrix()).norm() < 1e-15);
    }

    #[test]
    fn noise_examples() {
        let s = StateVector::random(27, &mut rng_from_seed(2));
        let same = apply_noise(&s, &identity(3), 3, false).unwrap();
        assert_eq!(same, s);
        let w = random_special_unitary(3, 3).unwrap();
        let moved = apply_noise(&s, &w, 3, false).unwrap();
        assert!((moved.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_unitary_noise_acts_slotwise() {
        let w = random_special_linear(2, 6).unwrap();
        let f = states(2, 3, 4);
        let product = StateVector::product(&f).unwrap();
        let noisy = apply_noise(&product, &w, 3, false).unwrap();
        let slotwise: Vec<nalgebra::DVector<C64>> = f.iter().map(|x| &w * x.amplitudes()).collect();
        let expect = slotwise[0].kronecker(&slotwise[1]).kronecker(&slotwise[2]);
        assert!((noisy.amplitudes() - expect).norm() < 1e-12);
        let renormed = apply_noise(&product, &w, 3, true).unwrap();
        assert!((renormed.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_without_noise() {
        for d in [2, 3] {
            let enc = build_encoder(d, 4).unwrap();
            for k in [1, 2] {
                let code = make_code(d, k, enc.clone()).unwrap();
                let s = states(d, k + 1, 10 + k as u64);
                let decoded = decode(&code, &encode(&code, &s[..k], &s[k]).unwrap()).unwrap();
                let pre = product_input(&code, &s[..k], &s[k]).unwrap();
                assert!((decoded.amplitudes() - pre.amplitudes()).norm() < 1e-12);
                for (rho, psi) in extract_data(&code, &decoded).unwrap().iter().zip(&s) {
                    assert!((rho.matrix() - DensityMatrix::pure(psi).matrix()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn five_qubit_protection() {
        let code = make_code(2, 2, reference_encoder_d2()).unwrap();
        for seed in 0..20 {
            let w = random_special_unitary(2, seed).unwrap();
            let s = states(2, 3, 100 + seed);
            let noisy = apply_noise(&encode(&code, &s[..2], &s[2]).unwrap(), &w, 5, false).unwrap();
            let decoded = decode(&code, &noisy).unwrap();
            let expect = expected_output(&code, &s[..2], &s[2], &w).unwrap();
            assert!((decoded.amplitudes() - expect.amplitudes()).norm() < 1e-10);
        }
    }

    #[test]
    fn qutrit_protection() {
        let code = make_code(3, 1, build_encoder(3, 0).unwrap()).unwrap();
        for seed in 0..20 {
            let w = random_special_unitary(3, seed).unwrap();
            let s = states(3, 2, 200 + seed);
            let noisy = apply_noise(&encode(&code, &s[..1], &s[1]).unwrap(), &w, 4, false).unwrap();
            let decoded = decode(&code, &noisy).unwrap();
            let expect = expected_output(&code, &s[..1], &s[1], &w).unwrap();
            assert!((decoded.amplitudes() - expect.amplitudes()).norm() < 1e-10);
        }
    }

    #[test]
    fn special_linear_protection() {
        let code = make_code(2, 1, reference_encoder_d2()).unwrap();
        let w = random_special_linear(2, 12).unwrap();
        assert!(unitarity_residual(&w) > 1e-3);
        let s = states(2, 2, 5);
        let noisy = apply_noise(&encode(&code, &s[..1], &s[1]).unwrap(), &w, 3, true).unwrap();
        let decoded = decode(&code, &noisy).unwrap();
        let rho = &extract_data(&code, &decoded).unwrap()[0];
        assert!(1.0 - fidelity(rho, &s[0]).unwrap() < 1e-8);
    }

    #[test]
    fn simulate_haar_and_sl() {
        let enc = reference_encoder_d2();
        let code = make_code(2, 2, enc.clone()).unwrap();
        let report = simulate(
            &code,
            NoiseModel {
                kind: NoiseKind::HaarSu,
                seed: 1,
            },
            100,
        )
        .unwrap();
        assert_eq!(report.seeds.len(), 100);
        assert_eq!(report.per_slot_worst_infidelity.len(), 2);
        assert!(report.max_infidelity() < 1e-10);
        assert!(report.max_state_residual < 1e-10);
        assert!(report.max_carry_residual < 1e-10);

        let single = make_code(2, 1, enc).unwrap();
        let sl = simulate(
            &single,
            NoiseModel {
                kind: NoiseKind::Sl,
                seed: 2,
            },
            100,
        )
        .unwrap();
        assert!(sl.max_infidelity() < 1e-8);
    }

    #[test]
    fn simulate_with_identity_override() {
        let code = make_code(2, 1, reference_encoder_d2()).unwrap();
        let noise = NoiseModel {
            kind: NoiseKind::HaarSu,
            seed: 0,
        };
        let report = simulate_with(&code, noise, 1, |_| Ok(identity(2))).unwrap();
        assert!(report.max_infidelity() < INVARIANT_TOL);
    }

    #[test]
    fn simulation_is_deterministic() {
        let code = make_code(2, 1, reference_encoder_d2()).unwrap();
        let noise = NoiseModel {
            kind: NoiseKind::HaarSu,
            seed: 9,
        };
        assert_eq!(
            simulate(&code, noise, 10).unwrap(),
            simulate(&code, noise, 10).unwrap()
        );
        assert!(simulate(&code, noise, 0).is_err());
    }

    #[test]
    fn dimension_errors() {
        let code = make_code(2, 1, reference_encoder_d2()).unwrap();
        let q = StateVector::basis(3, 0);
        let u = StateVector::basis(2, 0);
        assert!(encode(&code, std::slice::from_ref(&q), &u).is_err());
        assert!(encode(&code, &[u.clone(), u.clone()], &u).is_err());
        assert!(decode(&code, &StateVector::basis(16, 0)).is_err());
        assert!(extract_data(&code, &StateVector::basis(4, 0)).is_err());
    }

    #[test]
    fn rates() {
        assert_eq!(encoding_rate(2, 2).unwrap(), Ratio::new(2, 5));
        let r = encoding_rate(3, 100).unwrap();
        assert_eq!(r, Ratio::new(100, 301));
        let gap = Ratio::new(1, 3) - r;
        assert!(gap > Ratio::new(0, 1) && gap <= Ratio::new(1, 301));
        let far = encoding_rate(2, 1_000_000).unwrap();
        assert!((*far.numer() as f64 / *far.denom() as f64 - 0.5).abs() < 1e-6);
        let table = rate_table(2, 3).unwrap();
        let rows: Vec<_> = table.iter().map(|r| (r.d, r.k, r.n, r.rate)).collect();
        assert_eq!(
            rows,
            vec![
                (2, 1, 3, Ratio::new(1, 3)),
                (2, 2, 5, Ratio::new(2, 5)),
                (2, 3, 7, Ratio::new(3, 7))
            ]
        );
        assert!(table.windows(2).all(|w| w[0].rate < w[1].rate));
        assert!(encoding_rate(1, 1).is_err());
        assert!(encoding_rate(2, 0).is_err());
    }
}
