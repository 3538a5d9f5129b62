//! Metropolis–Hastings sampling of `|psi(x)|^2`.
//!
//! Three proposal kernels are available:
//!
//! * `Local`: flip one uniformly chosen site.
//! * `Exchange`: pick one of the `N` periodic nearest-neighbour bonds uniformly
//!   and swap its two spins. An aligned bond leaves the state unchanged, which is
//!   counted as a rejected proposal. The kernel is symmetric and conserves magnetization.
//! * `Hamiltonian`: move to a uniformly chosen off-diagonal connected state of `H`.
//!   The proposal ratio `|C(x)| / |C(x')|` enters the acceptance test.
//!
//! Chains are independent, run in parallel and are merged chain-major, so a
//! batch depends only on the seed and the configuration.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NqsError, Result};
use crate::hilbert::{random_config, SpinConfiguration, SymmetrySector};
use crate::operators::PauliHamiltonian;
use crate::wavefunction::{LookupTable, Wavefunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Local,
    Exchange,
    Hamiltonian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub kernel: Kernel,
    pub n_samples: usize,
    /// Sweeps discarded before recording; one sweep is `N` proposals.
    pub burn_in_sweeps: usize,
    /// Proposals between recorded samples. `None` means one sweep (`N`).
    pub downsample_interval: Option<usize>,
    pub n_chains: usize,
    /// Sector of the random initial states.
    pub sector: SymmetrySector,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::Local,
            n_samples: 1000,
            burn_in_sweeps: 100,
            downsample_interval: None,
            n_chains: 4,
            sector: SymmetrySector::Unrestricted,
        }
    }
}

impl SamplerConfig {
    pub fn interval(&self, n_sites: usize) -> usize {
        self.downsample_interval.unwrap_or(n_sites)
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        if self.n_chains == 0 {
            return Err(NqsError::Config("n_chains must be positive".into()));
        }
        if self.downsample_interval == Some(0) {
            return Err(NqsError::Config("downsample interval must be positive".into()));
        }
        self.sector
            .validate(n_sites)
            .map_err(|e| NqsError::Config(e.to_string()))?;
        if self.kernel == Kernel::Exchange && self.sector == SymmetrySector::Unrestricted {
            return Err(NqsError::Config(
                "exchange kernel requires a fixed-magnetization or fixed-occupation sector".into(),
            ));
        }
        Ok(())
    }
}

/// A proposed move: sites to flip and `log q(x'->x) - log q(x->x')`.
#[derive(Clone, Debug, PartialEq)]
pub struct Proposal {
    pub flips: Vec<usize>,
    pub log_q_ratio: f64,
}

pub fn propose_local<R: Rng + ?Sized>(x: &[i8], rng: &mut R) -> Proposal {
    Proposal { flips: vec![rng.random_range(0..x.len())], log_q_ratio: 0.0 }
}

/// `None` when the chosen bond is aligned (or `N < 2`).
pub fn propose_exchange<R: Rng + ?Sized>(x: &[i8], rng: &mut R) -> Option<Proposal> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let i = rng.random_range(0..n);
    let j = (i + 1) % n;
    (x[i] != x[j]).then(|| Proposal { flips: vec![i.min(j), i.max(j)], log_q_ratio: 0.0 })
}

fn off_diagonal_moves(h: &PauliHamiltonian, x: &[i8]) -> Vec<Vec<usize>> {
    let mut moves = Vec::new();
    h.for_each_connection(x, |flips, _| {
        if !flips.is_empty() {
            moves.push(flips.to_vec());
        }
    });
    moves
}

/// `None` for a state with no off-diagonal connections.
pub fn propose_hamiltonian<R: Rng + ?Sized>(
    x: &[i8],
    h: &PauliHamiltonian,
    rng: &mut R,
) -> Option<Proposal> {
    let moves = off_diagonal_moves(h, x);
    if moves.is_empty() {
        return None;
    }
    let flips = moves[rng.random_range(0..moves.len())].clone();
    let mut xp = x.to_vec();
    for &i in &flips {
        xp[i] = -xp[i];
    }
    let back = h.off_diagonal_count(&xp);
    let log_q_ratio = (moves.len() as f64).ln() - (back as f64).ln();
    Some(Proposal { flips, log_q_ratio })
}

/// Exact proposal law of `kernel` at `x`: every reachable flip set with its
/// probability. Identity moves (rejections) are omitted.
pub fn proposal_probabilities(
    kernel: Kernel,
    x: &[i8],
    h: &PauliHamiltonian,
) -> Vec<(Vec<usize>, f64)> {
    let n = x.len();
    match kernel {
        Kernel::Local => (0..n).map(|i| (vec![i], 1.0 / n as f64)).collect(),
        Kernel::Exchange => {
            let mut out: Vec<(Vec<usize>, f64)> = Vec::new();
            if n < 2 {
                return out;
            }
            for i in 0..n {
                let j = (i + 1) % n;
                if x[i] != x[j] {
                    let f = vec![i.min(j), i.max(j)];
                    match out.iter_mut().find(|(g, _)| *g == f) {
                        Some((_, p)) => *p += 1.0 / n as f64,
                        None => out.push((f, 1.0 / n as f64)),
                    }
                }
            }
            out
        }
        Kernel::Hamiltonian => {
            let moves = off_diagonal_moves(h, x);
            let p = 1.0 / moves.len().max(1) as f64;
            moves.into_iter().map(|m| (m, p)).collect()
        }
    }
}

/// One Markov chain with its cached lookup table and log-amplitude.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub x: SpinConfiguration,
    pub lut: LookupTable,
    pub log_amp: Complex64,
    pub rng: ChaCha8Rng,
    pub accepted: u64,
    pub proposed: u64,
}

impl ChainState {
    pub fn new<W: Wavefunction>(p: &W, x: SpinConfiguration, rng: ChaCha8Rng) -> Self {
        let lut = p.lookup(x.sites());
        let log_amp = p.log_psi(x.sites());
        Self { x, lut, log_amp, rng, accepted: 0, proposed: 0 }
    }

    /// Recomputes the lookup table and log-amplitude from scratch.
    pub fn resync<W: Wavefunction>(&mut self, p: &W) {
        self.lut = p.lookup(self.x.sites());
        self.log_amp = p.log_psi(self.x.sites());
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Deterministic generator for chain `chain` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// One proposal plus accept/reject. Returns whether the move was accepted.
pub fn mh_step<W: Wavefunction>(
    state: &mut ChainState,
    p: &W,
    kernel: Kernel,
    h: &PauliHamiltonian,
) -> bool {
    state.proposed += 1;
    let proposal = match kernel {
        Kernel::Local => Some(propose_local(state.x.sites(), &mut state.rng)),
        Kernel::Exchange => propose_exchange(state.x.sites(), &mut state.rng),
        Kernel::Hamiltonian => propose_hamiltonian(state.x.sites(), h, &mut state.rng),
    };
    let Some(prop) = proposal else {
        return false;
    };
    let delta = p.log_psi_ratio(state.x.sites(), &prop.flips, &state.lut);
    if !delta.re.is_finite() && delta.re != f64::INFINITY {
        return false;
    }
    let log_acc = 2.0 * delta.re + prop.log_q_ratio;
    let accept = log_acc >= 0.0 || state.rng.random::<f64>() < log_acc.exp();
    if accept {
        p.update_lookup(state.x.sites(), &prop.flips, &mut state.lut);
        state.x.flip_all(&prop.flips);
        state.log_amp += delta;
        state.accepted += 1;
    }
    accept
}

/// Samples with their cached log-amplitudes and normalized weights.
///
/// Monte Carlo batches carry uniform weights `1/n`; exact batches carry Born weights.
#[derive(Clone, Debug, Default)]
pub struct SampleBatch {
    pub configs: Vec<SpinConfiguration>,
    pub log_amps: Vec<Complex64>,
    pub weights: Vec<f64>,
    pub accepted: u64,
    pub proposed: u64,
    /// Wall-clock sampling time in seconds.
    pub t_s: f64,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// Batch over the whole sector with weights `|psi|^2 / sum |psi|^2`.
    pub fn exact<W: Wavefunction>(p: &W, basis: &[SpinConfiguration]) -> Self {
        let log_amps: Vec<Complex64> = basis.iter().map(|x| p.log_psi(x.sites())).collect();
        let max = log_amps.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = log_amps.iter().map(|l| (2.0 * (l.re - max)).exp()).collect();
        let z: f64 = raw.iter().sum();
        Self {
            configs: basis.to_vec(),
            log_amps,
            weights: raw.iter().map(|w| w / z).collect(),
            ..Self::default()
        }
    }

    /// Batch with uniform weights, e.g. a fixed set of configurations.
    pub fn uniform<W: Wavefunction>(p: &W, configs: Vec<SpinConfiguration>) -> Self {
        let n = configs.len();
        let log_amps = configs.iter().map(|x| p.log_psi(x.sites())).collect();
        Self { configs, log_amps, weights: vec![1.0 / n as f64; n], ..Self::default() }
    }

    /// Kish effective sample size `(sum w)^2 / sum w^2`.
    pub fn effective_sample_size(&self) -> f64 {
        let s: f64 = self.weights.iter().sum();
        let s2: f64 = self.weights.iter().map(|w| w * w).sum();
        if s2 > 0.0 {
            s * s / s2
        } else {
            0.0
        }
    }
}

struct ChainOutput {
    configs: Vec<SpinConfiguration>,
    log_amps: Vec<Complex64>,
    accepted: u64,
    proposed: u64,
}

fn run_single<W: Wavefunction>(
    p: &W,
    h: &PauliHamiltonian,
    cfg: &SamplerConfig,
    rng: ChaCha8Rng,
    n_samples: usize,
) -> Result<ChainOutput> {
    let n = p.n_sites();
    let mut rng = rng;
    let x0 = random_config(n, cfg.sector, &mut rng)?;
    let mut state = ChainState::new(p, x0, rng);
    for _ in 0..cfg.burn_in_sweeps * n {
        mh_step(&mut state, p, cfg.kernel, h);
    }
    state.accepted = 0;
    state.proposed = 0;
    let interval = cfg.interval(n);
    let mut configs = Vec::with_capacity(n_samples);
    let mut log_amps = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        for _ in 0..interval {
            mh_step(&mut state, p, cfg.kernel, h);
        }
        state.resync(p);
        configs.push(state.x.clone());
        log_amps.push(state.log_amp);
    }
    Ok(ChainOutput { configs, log_amps, accepted: state.accepted, proposed: state.proposed })
}

/// Runs `cfg.n_chains` independent chains and merges their samples chain-major.
pub fn run_chain<W: Wavefunction>(
    p: &W,
    h: &PauliHamiltonian,
    cfg: &SamplerConfig,
    seed: u64,
) -> Result<SampleBatch> {
    let start = Instant::now();
    let n = p.n_sites();
    cfg.validate(n)?;
    if h.n_sites() != n {
        return Err(NqsError::Domain(format!(
            "Hamiltonian has {} sites, wavefunction {n}",
            h.n_sites()
        )));
    }
    if cfg.n_samples == 0 {
        return Ok(SampleBatch { t_s: start.elapsed().as_secs_f64(), ..SampleBatch::default() });
    }
    let nc = cfg.n_chains;
    let outputs: Vec<ChainOutput> = (0..nc)
        .into_par_iter()
        .map(|c| {
            let share = cfg.n_samples / nc + usize::from(c < cfg.n_samples % nc);
            run_single(p, h, cfg, chain_rng(seed, c as u64), share)
        })
        .collect::<Result<_>>()?;
    let mut batch = SampleBatch::default();
    for o in outputs {
        batch.configs.extend(o.configs);
        batch.log_amps.extend(o.log_amps);
        batch.accepted += o.accepted;
        batch.proposed += o.proposed;
    }
    let m = batch.configs.len();
    batch.weights = vec![1.0 / m as f64; m];
    batch.t_s = start.elapsed().as_secs_f64();
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::enumerate_basis;
    use crate::operators::{build_j1j2, build_tfi, jordan_wigner, FermionTerm, PauliString};
    use crate::wavefunction::{init_params, RbmParameters, RbmShape};
    use nalgebra::DMatrix;

    fn zero_rbm(n: usize) -> RbmParameters {
        RbmParameters::zeros(RbmShape::new(n, 1, false)).unwrap()
    }

    fn random_rbm(n: usize, seed: u64) -> RbmParameters {
        init_params(&mut ChaCha8Rng::seed_from_u64(seed), 0.5, RbmShape::new(n, 2, false)).unwrap()
    }

    /// Exact MH transition matrix built from the kernel's proposal law.
    fn transition_matrix<W: Wavefunction>(
        p: &W,
        kernel: Kernel,
        h: &PauliHamiltonian,
        basis: &[SpinConfiguration],
    ) -> DMatrix<f64> {
        let dim = basis.len();
        let pos = |x: &SpinConfiguration| basis.iter().position(|b| b == x).unwrap();
        let mut t = DMatrix::zeros(dim, dim);
        for (a, x) in basis.iter().enumerate() {
            let mut out = 0.0;
            for (flips, q) in proposal_probabilities(kernel, x.sites(), h) {
                let xp = x.flipped(&flips);
                let back = proposal_probabilities(kernel, xp.sites(), h)
                    .into_iter()
                    .find(|(f, _)| *f == flips)
                    .map(|(_, q)| q)
                    .unwrap();
                let delta = p.log_psi(xp.sites()) - p.log_psi(x.sites());
                let acc = ((2.0 * delta.re).exp() * back / q).min(1.0);
                t[(a, pos(&xp))] += q * acc;
                out += q * acc;
            }
            t[(a, a)] += 1.0 - out;
        }
        t
    }

    fn born(p: &impl Wavefunction, basis: &[SpinConfiguration]) -> Vec<f64> {
        SampleBatch::exact(p, basis).weights
    }

    fn check_balance(kernel: Kernel, h: &PauliHamiltonian, basis: &[SpinConfiguration], seed: u64) {
        let p = random_rbm(h.n_sites(), seed);
        let t = transition_matrix(&p, kernel, h, basis);
        let pi = born(&p, basis);
        for a in 0..basis.len() {
            for b in 0..basis.len() {
                assert!((pi[a] * t[(a, b)] - pi[b] * t[(b, a)]).abs() < 1e-12);
            }
            let row: f64 = t.row(a).iter().sum();
            assert!((row - 1.0).abs() < 1e-12);
        }
        for b in 0..basis.len() {
            let flow: f64 = (0..basis.len()).map(|a| pi[a] * t[(a, b)]).sum();
            assert!((flow - pi[b]).abs() < 1e-12);
        }
    }

    #[test]
    fn detailed_balance_all_kernels() {
        for n in 2..=3 {
            let h = build_tfi(n, 0.8).unwrap();
            let all = enumerate_basis(n, SymmetrySector::Unrestricted).unwrap();
            check_balance(Kernel::Local, &h, &all, 3);
            check_balance(Kernel::Hamiltonian, &h, &all, 4);
            let sector = enumerate_basis(n, SymmetrySector::FixedOccupation { n_up: 1 }).unwrap();
            check_balance(Kernel::Exchange, &h, &sector, 5);
        }
        // irregular connectivity: a field on one site only
        let h = PauliHamiltonian::new(
            3,
            vec![
                PauliString::real([(0, crate::operators::Pauli::X)], 0.7).unwrap(),
                PauliString::real([(1, crate::operators::Pauli::X), (2, crate::operators::Pauli::X)], 0.3)
                    .unwrap(),
                PauliString::real([(0, crate::operators::Pauli::Z)], 1.0).unwrap(),
            ],
        )
        .unwrap();
        let all = enumerate_basis(3, SymmetrySector::Unrestricted).unwrap();
        check_balance(Kernel::Hamiltonian, &h, &all, 6);
    }

    #[test]
    fn log_q_ratio_matches_proposal_law() {
        let h = PauliHamiltonian::new(
            3,
            vec![
                PauliString::real([(0, crate::operators::Pauli::X)], 0.7).unwrap(),
                PauliString::real([(0, crate::operators::Pauli::Z), (1, crate::operators::Pauli::X)], 0.3)
                    .unwrap(),
                PauliString::real([(2, crate::operators::Pauli::Z)], 1.0).unwrap(),
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for x in enumerate_basis(3, SymmetrySector::Unrestricted).unwrap() {
            for _ in 0..10 {
                let prop = propose_hamiltonian(x.sites(), &h, &mut rng).unwrap();
                let fwd = proposal_probabilities(Kernel::Hamiltonian, x.sites(), &h);
                let xp = x.flipped(&prop.flips);
                let bwd = proposal_probabilities(Kernel::Hamiltonian, xp.sites(), &h);
                let q = |v: &[(Vec<usize>, f64)]| v.iter().find(|(f, _)| *f == prop.flips).unwrap().1;
                assert!((prop.log_q_ratio - (q(&bwd) / q(&fwd)).ln()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn local_single_site() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = propose_local(&[1], &mut rng);
        assert_eq!(p, Proposal { flips: vec![0], log_q_ratio: 0.0 });
    }

    #[test]
    fn local_site_distribution_is_uniform() {
        let n = 7;
        let trials = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = vec![0usize; n];
        for _ in 0..trials {
            counts[propose_local(&vec![1; n], &mut rng).flips[0]] += 1;
        }
        let p = 1.0 / n as f64;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - trials as f64 * p).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn exchange_moves() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = propose_exchange(&[1, -1], &mut rng).unwrap();
            assert_eq!(p.flips, vec![0, 1]);
        }
        assert!(propose_exchange(&[1, 1, 1, 1], &mut rng).is_none());
        let x: SpinConfiguration = "+--+-+".parse().unwrap();
        for _ in 0..100 {
            if let Some(p) = propose_exchange(x.sites(), &mut rng) {
                assert_eq!(x.flipped(&p.flips).magnetization(), x.magnetization());
            }
        }
    }

    #[test]
    fn polarized_state_rejects_exchange() {
        let p = zero_rbm(4);
        let h = build_j1j2(4, 0.0).unwrap();
        let x = SpinConfiguration::uniform(4, 1).unwrap();
        let mut st = ChainState::new(&p, x.clone(), ChaCha8Rng::seed_from_u64(0));
        for _ in 0..10 {
            assert!(!mh_step(&mut st, &p, Kernel::Exchange, &h));
        }
        assert_eq!(st.proposed, 10);
        assert_eq!(st.accepted, 0);
        assert_eq!(st.x, x);
    }

    #[test]
    fn constant_psi_accepts_everything() {
        let p = zero_rbm(5);
        let h = build_tfi(5, 1.0).unwrap();
        let mut st = ChainState::new(&p, SpinConfiguration::uniform(5, 1).unwrap(), chain_rng(1, 0));
        for _ in 0..200 {
            assert!(mh_step(&mut st, &p, Kernel::Local, &h));
            assert!(mh_step(&mut st, &p, Kernel::Hamiltonian, &h));
        }
    }

    #[test]
    fn vanishing_target_is_rejected() {
        use crate::wavefunction::LogAmplitudeTable;
        let mut vals = vec![Complex64::new(0.0, 0.0); 4];
        vals[1] = Complex64::new(f64::NEG_INFINITY, 0.0);
        let p = LogAmplitudeTable::new(2, vals).unwrap();
        let h = build_tfi(2, 1.0).unwrap();
        let mut st = ChainState::new(&p, SpinConfiguration::from_index(2, 0), chain_rng(0, 0));
        for _ in 0..200 {
            mh_step(&mut st, &p, Kernel::Local, &h);
            assert_ne!(st.x.index(), 1);
        }
    }

    #[test]
    fn tfi_hamiltonian_kernel_is_symmetric() {
        let h = build_tfi(4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for x in enumerate_basis(4, SymmetrySector::Unrestricted).unwrap() {
            assert_eq!(propose_hamiltonian(x.sites(), &h, &mut rng).unwrap().log_q_ratio, 0.0);
        }
    }

    #[test]
    fn particle_conserving_moves_keep_occupation() {
        let terms = [
            FermionTerm::one_body(0, 2, -0.5),
            FermionTerm::one_body(2, 0, -0.5),
            FermionTerm::one_body(1, 3, -0.3),
            FermionTerm::one_body(3, 1, -0.3),
            FermionTerm::new(vec![0, 1], vec![3, 2], Complex64::new(0.2, 0.0)),
            FermionTerm::new(vec![2, 3], vec![1, 0], Complex64::new(0.2, 0.0)),
        ];
        let h = jordan_wigner(4, &terms).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for x in enumerate_basis(4, SymmetrySector::FixedOccupation { n_up: 2 }).unwrap() {
            for _ in 0..20 {
                if let Some(p) = propose_hamiltonian(x.sites(), &h, &mut rng) {
                    assert_eq!(x.flipped(&p.flips).occupation(), 2);
                }
            }
        }
    }

    #[test]
    fn two_term_toy_reaches_all_connected_states() {
        let h = PauliHamiltonian::new(
            2,
            vec![
                PauliString::real([(0, crate::operators::Pauli::X), (1, crate::operators::Pauli::X)], 0.4)
                    .unwrap(),
                PauliString::real([(0, crate::operators::Pauli::Z)], -1.0).unwrap(),
            ],
        )
        .unwrap();
        // from ++ the only off-diagonal connection is --
        let start = SpinConfiguration::uniform(2, 1).unwrap();
        let p = random_rbm(2, 8);
        let mut st = ChainState::new(&p, start.clone(), chain_rng(8, 0));
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..500 {
            mh_step(&mut st, &p, Kernel::Hamiltonian, &h);
            seen.insert(st.x.index());
        }
        let expected: std::collections::BTreeSet<usize> = [0, 3].into();
        assert_eq!(seen, expected);
    }

    fn chi_square_like(counts: &[usize], probs: &[f64], total: usize) {
        for (c, p) in counts.iter().zip(probs) {
            let mean = total as f64 * p;
            let sigma = (total as f64 * p * (1.0 - p)).sqrt().max(1.0);
            assert!((*c as f64 - mean).abs() < 5.0 * sigma, "count {c} vs mean {mean}");
        }
    }

    #[test]
    fn exchange_chain_is_uniform_in_sector() {
        let p = zero_rbm(4);
        let h = build_j1j2(4, 0.0).unwrap();
        let sector = SymmetrySector::FixedMagnetization { mz: 0 };
        let cfg = SamplerConfig {
            kernel: Kernel::Exchange,
            n_samples: 100_000,
            burn_in_sweeps: 10,
            downsample_interval: Some(4),
            n_chains: 4,
            sector,
        };
        let batch = run_chain(&p, &h, &cfg, 17).unwrap();
        let basis = enumerate_basis(4, sector).unwrap();
        let mut counts = vec![0usize; basis.len()];
        for x in &batch.configs {
            counts[basis.iter().position(|b| b == x).unwrap()] += 1;
        }
        chi_square_like(&counts, &[1.0 / 6.0; 6], batch.len());
    }

    #[test]
    fn stationary_law_matches_born_weights() {
        let p = random_rbm(3, 21);
        let h = build_tfi(3, 1.0).unwrap();
        let basis = enumerate_basis(3, SymmetrySector::Unrestricted).unwrap();
        let pi = born(&p, &basis);
        for kernel in [Kernel::Local, Kernel::Hamiltonian] {
            let cfg = SamplerConfig {
                kernel,
                n_samples: 100_000,
                burn_in_sweeps: 20,
                downsample_interval: Some(6),
                n_chains: 4,
                sector: SymmetrySector::Unrestricted,
            };
            let batch = run_chain(&p, &h, &cfg, 23).unwrap();
            let mut counts = vec![0usize; 8];
            for x in &batch.configs {
                counts[x.index()] += 1;
            }
            chi_square_like(&counts, &pi, batch.len());
        }
    }

    #[test]
    fn batches_are_reproducible_and_consistent() {
        let p = random_rbm(6, 4);
        let h = build_tfi(6, 1.0).unwrap();
        let cfg = SamplerConfig { n_samples: 203, n_chains: 3, ..SamplerConfig::default() };
        let a = run_chain(&p, &h, &cfg, 99).unwrap();
        let b = run_chain(&p, &h, &cfg, 99).unwrap();
        assert_eq!(a.configs, b.configs);
        assert_eq!(a.log_amps, b.log_amps);
        assert_eq!(a.len(), 203);
        assert!(a.accepted <= a.proposed);
        assert!((a.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (x, l) in a.configs.iter().zip(&a.log_amps) {
            assert!((p.log_psi(x.sites()) - l).norm() < 1e-8);
        }
        let c = run_chain(&p, &h, &cfg, 100).unwrap();
        assert_ne!(a.configs, c.configs);
    }

    #[test]
    fn empty_request_gives_empty_batch() {
        let p = zero_rbm(3);
        let h = build_tfi(3, 1.0).unwrap();
        let cfg = SamplerConfig { n_samples: 0, ..SamplerConfig::default() };
        let b = run_chain(&p, &h, &cfg, 0).unwrap();
        assert!(b.is_empty());
        assert!(b.t_s < 0.1);
    }

    #[test]
    fn invalid_configs_rejected() {
        let h = build_tfi(4, 1.0).unwrap();
        let p = zero_rbm(4);
        let bad = SamplerConfig { kernel: Kernel::Exchange, ..SamplerConfig::default() };
        assert!(matches!(run_chain(&p, &h, &bad, 0), Err(NqsError::Config(_))));
        let bad = SamplerConfig { n_chains: 0, ..SamplerConfig::default() };
        assert!(run_chain(&p, &h, &bad, 0).is_err());
        assert!(run_chain(&zero_rbm(3), &h, &SamplerConfig::default(), 0).is_err());
    }

    #[test]
    fn effective_sample_size() {
        let p = zero_rbm(2);
        let basis = enumerate_basis(2, SymmetrySector::Unrestricted).unwrap();
        let b = SampleBatch::exact(&p, &basis);
        assert!((b.effective_sample_size() - 4.0).abs() < 1e-12);
    }
}
