//! Pulsed Monte Carlo click counting with losses, noise, and threshold
//! detectors, plus the matching analytic click model.
//!
//! Photon-pair generation per pulse and Schmidt mode is thermal
//! (Bose-Einstein with mean `mu_m`); Raman noise photons are Poissonian and
//! uncorrelated between arms; losses act as binomial thinning per photon;
//! 50:50 splitters route photons by a fair coin; detectors are non
//! photon-number-resolving with independent dark clicks.
//!
//! Pulses are simulated in fixed-size blocks, each on its own counter-mode
//! RNG stream, and block tallies are merged with commutative integer adds:
//! results are bit-identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CountingError {
    #[error("counter {counter} is zero; estimator undefined")]
    ZeroCount { counter: &'static str },
    #[error("estimator {estimator} is undefined for topology {topology:?}")]
    EstimatorUndefined {
        estimator: &'static str,
        topology: DetectionTopology,
    },
    #[error("invalid counting configuration: {0}")]
    InvalidConfig(String),
}

/// Losses and spurious-count parameters of the detection chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Transmission from source to detector module, signal arm.
    pub eta_signal_path: f64,
    /// Transmission from source to detector module, idler arm.
    pub eta_idler_path: f64,
    /// Detector quantum efficiency (applies after any splitter).
    pub eta_det: f64,
    /// Dark-click probability per detector per pulse.
    pub dark_click: f64,
    /// Mean Raman photons per pulse generated into the signal arm.
    pub raman_signal: f64,
    /// Mean Raman photons per pulse generated into the idler arm.
    pub raman_idler: f64,
}

impl NoiseModel {
    /// Lossless, noiseless reference detection.
    pub fn ideal() -> Self {
        NoiseModel {
            eta_signal_path: 1.0,
            eta_idler_path: 1.0,
            eta_det: 1.0,
            dark_click: 0.0,
            raman_signal: 0.0,
            raman_idler: 0.0,
        }
    }

    fn validate(&self) -> Result<(), CountingError> {
        let probs = [
            ("eta_signal_path", self.eta_signal_path),
            ("eta_idler_path", self.eta_idler_path),
            ("eta_det", self.eta_det),
            ("dark_click", self.dark_click),
        ];
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) {
                return Err(CountingError::InvalidConfig(format!(
                    "{name} = {v} outside [0, 1]"
                )));
            }
        }
        for (name, v) in [("raman_signal", self.raman_signal), ("raman_idler", self.raman_idler)] {
            if !(v >= 0.0) {
                return Err(CountingError::InvalidConfig(format!("{name} = {v} negative")));
            }
        }
        Ok(())
    }
}

/// Multimode squeezed pair source: independent thermal pair statistics per
/// Schmidt mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSource {
    /// Mean pair number per pulse in each mode.
    pub mode_means: Vec<f64>,
}

impl PairSource {
    pub fn single_mode(mu: f64) -> Self {
        PairSource { mode_means: vec![mu] }
    }

    /// Distribute a total mean pair number over Schmidt modes proportionally
    /// to `c_m^2`.
    pub fn from_schmidt_coefficients(mu_total: f64, coefficients: &[f64]) -> Self {
        let s2: f64 = coefficients.iter().map(|c| c * c).sum();
        PairSource {
            mode_means: coefficients
                .iter()
                .map(|c| mu_total * c * c / s2)
                .collect(),
        }
    }

    pub fn mean_pairs(&self) -> f64 {
        self.mode_means.iter().sum()
    }

    fn validate(&self) -> Result<(), CountingError> {
        if self.mode_means.is_empty() || !self.mode_means.iter().all(|&m| m >= 0.0) {
            return Err(CountingError::InvalidConfig(
                "mode_means must be non-empty and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// How the two output arms are wired to detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionTopology {
    /// One detector per arm; measures g2_si and the heralding efficiency.
    Cross,
    /// Signal arm on a 50:50 splitter with two detectors; idler unused.
    SignalAuto,
    /// Idler arm on a 50:50 splitter with two detectors; signal unused.
    IdlerAuto,
    /// Signal arm heralds; idler arm on a 50:50 splitter with two
    /// detectors; measures the heralded autocorrelation.
    HeraldedIdler,
}

/// Raw click tallies. Unused counters for a topology stay zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CountTallies {
    pub pulses: u64,
    /// Signal-arm clicks (cross: the signal detector; heralded-idler: the
    /// herald detector).
    pub signal: u64,
    /// Idler-arm clicks (cross topology).
    pub idler: u64,
    /// Signal-idler coincidences (cross topology).
    pub coincidence: u64,
    /// Splitter-output clicks for the autocorrelation topologies.
    pub split_a: u64,
    pub split_b: u64,
    pub split_ab: u64,
    /// Herald-conditioned splitter clicks (heralded-idler topology).
    pub herald_split_a: u64,
    pub herald_split_b: u64,
    pub herald_split_ab: u64,
}

impl CountTallies {
    fn merge(mut self, other: CountTallies) -> CountTallies {
        self.pulses += other.pulses;
        self.signal += other.signal;
        self.idler += other.idler;
        self.coincidence += other.coincidence;
        self.split_a += other.split_a;
        self.split_b += other.split_b;
        self.split_ab += other.split_ab;
        self.herald_split_a += other.herald_split_a;
        self.herald_split_b += other.herald_split_b;
        self.herald_split_ab += other.herald_split_ab;
        self
    }
}

/// A full Monte Carlo run description.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub topology: DetectionTopology,
    pub source: PairSource,
    pub noise: NoiseModel,
    pub pulses: u64,
    pub seed: u64,
    /// Distinguishes RNG streams between experiments that share a seed
    /// (for commands running several experiments per invocation).
    pub run: u32,
}

/// Pulses per RNG stream. Fixed so that results do not depend on how blocks
/// are distributed over workers.
pub const BLOCK_PULSES: u64 = 65_536;

/// Run the Monte Carlo experiment. Deterministic in `(spec.seed, spec)`;
/// independent of the rayon worker count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<CountTallies, CountingError> {
    spec.noise.validate()?;
    spec.source.validate()?;
    let blocks = spec.pulses.div_ceil(BLOCK_PULSES);
    let tallies = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let pulses = BLOCK_PULSES.min(spec.pulses - b * BLOCK_PULSES);
            simulate_block(spec, b, pulses)
        })
        .reduce(CountTallies::default, CountTallies::merge);
    Ok(tallies)
}

struct PairSampler {
    /// Per mode: (P(n >= 1), 1 / ln(mu/(1+mu))).
    modes: Vec<(f64, f64)>,
}

impl PairSampler {
    fn new(source: &PairSource) -> Self {
        PairSampler {
            modes: source
                .mode_means
                .iter()
                .map(|&mu| {
                    let q = mu / (1.0 + mu);
                    (q, if q > 0.0 { 1.0 / q.ln() } else { 0.0 })
                })
                .collect(),
        }
    }

    /// Total pair number across modes for one pulse.
    #[inline]
    fn sample(&self, rng: &mut ChaCha12Rng) -> u64 {
        let mut pairs = 0;
        for &(q, inv_ln_q) in &self.modes {
            let u: f64 = rng.gen();
            if u < q {
                // Thermal pair number: P(n >= k) = q^k.
                pairs += (u.max(1e-300).ln() * inv_ln_q) as u64;
            }
        }
        pairs
    }
}

#[inline]
fn sample_poisson(rng: &mut ChaCha12Rng, exp_neg_rate: f64) -> u64 {
    // Knuth inversion; rates here are << 1 so this almost always exits
    // after one draw.
    let mut k = 0u64;
    let mut p: f64 = rng.gen();
    while p > exp_neg_rate {
        k += 1;
        p *= rng.gen::<f64>();
    }
    k
}

fn simulate_block(spec: &ExperimentSpec, block: u64, pulses: u64) -> CountTallies {
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    rng.set_stream((spec.run as u64) << 32 | block);
    let sampler = PairSampler::new(&spec.source);
    let noise = &spec.noise;
    let eta_s = noise.eta_signal_path * noise.eta_det;
    let eta_i = noise.eta_idler_path * noise.eta_det;
    // Splitter arms: photon reaches detector A (respectively B) of the
    // split arm with probability path * det / 2.
    let exp_neg_rs = (-noise.raman_signal).exp();
    let exp_neg_ri = (-noise.raman_idler).exp();
    let dark = noise.dark_click;
    let mut t = CountTallies {
        pulses,
        ..CountTallies::default()
    };
    for _ in 0..pulses {
        let pairs = sampler.sample(&mut rng);
        let signal_photons = pairs
            + if noise.raman_signal > 0.0 {
                sample_poisson(&mut rng, exp_neg_rs)
            } else {
                0
            };
        let idler_photons = pairs
            + if noise.raman_idler > 0.0 {
                sample_poisson(&mut rng, exp_neg_ri)
            } else {
                0
            };
        match spec.topology {
            DetectionTopology::Cross => {
                let mut s_click = false;
                for _ in 0..signal_photons {
                    if rng.gen::<f64>() < eta_s {
                        s_click = true;
                        break;
                    }
                }
                let mut i_click = false;
                for _ in 0..idler_photons {
                    if rng.gen::<f64>() < eta_i {
                        i_click = true;
                        break;
                    }
                }
                if dark > 0.0 {
                    s_click = s_click || rng.gen::<f64>() < dark;
                    i_click = i_click || rng.gen::<f64>() < dark;
                }
                t.signal += s_click as u64;
                t.idler += i_click as u64;
                t.coincidence += (s_click && i_click) as u64;
            }
            DetectionTopology::SignalAuto | DetectionTopology::IdlerAuto => {
                let (photons, path) = if spec.topology == DetectionTopology::SignalAuto {
                    (signal_photons, noise.eta_signal_path)
                } else {
                    (idler_photons, noise.eta_idler_path)
                };
                let p_arm = path * noise.eta_det / 2.0;
                let (mut a, mut b) = (false, false);
                for _ in 0..photons {
                    if a && b {
                        break;
                    }
                    let u: f64 = rng.gen();
                    if u < p_arm {
                        a = true;
                    } else if u < 2.0 * p_arm {
                        b = true;
                    }
                }
                if dark > 0.0 {
                    a = a || rng.gen::<f64>() < dark;
                    b = b || rng.gen::<f64>() < dark;
                }
                t.split_a += a as u64;
                t.split_b += b as u64;
                t.split_ab += (a && b) as u64;
            }
            DetectionTopology::HeraldedIdler => {
                let mut herald = false;
                for _ in 0..signal_photons {
                    if rng.gen::<f64>() < eta_s {
                        herald = true;
                        break;
                    }
                }
                let p_arm = noise.eta_idler_path * noise.eta_det / 2.0;
                let (mut a, mut b) = (false, false);
                for _ in 0..idler_photons {
                    if a && b {
                        break;
                    }
                    let u: f64 = rng.gen();
                    if u < p_arm {
                        a = true;
                    } else if u < 2.0 * p_arm {
                        b = true;
                    }
                }
                if dark > 0.0 {
                    herald = herald || rng.gen::<f64>() < dark;
                    a = a || rng.gen::<f64>() < dark;
                    b = b || rng.gen::<f64>() < dark;
                }
                t.signal += herald as u64;
                t.split_a += a as u64;
                t.split_b += b as u64;
                t.split_ab += (a && b) as u64;
                if herald {
                    t.herald_split_a += a as u64;
                    t.herald_split_b += b as u64;
                    t.herald_split_ab += (a && b) as u64;
                }
            }
        }
    }
    t
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

fn ratio_estimate(
    joint: u64,
    norm: u64,
    a: u64,
    b: u64,
    names: [&'static str; 3],
) -> Result<Estimate, CountingError> {
    for (count, name) in [(a, names[1]), (b, names[2]), (joint, names[0])] {
        if count == 0 {
            return Err(CountingError::ZeroCount { counter: name });
        }
    }
    let value = joint as f64 * norm as f64 / (a as f64 * b as f64);
    let rel =
        (1.0 / joint as f64 + 1.0 / a as f64 + 1.0 / b as f64).sqrt();
    Ok(Estimate {
        value,
        std_err: value * rel,
    })
}

/// Normalized cross-correlation `g2_si = N_si N_p / (N_s N_i)`.
pub fn g2_cross(topology: DetectionTopology, t: &CountTallies) -> Result<Estimate, CountingError> {
    if topology != DetectionTopology::Cross {
        return Err(CountingError::EstimatorUndefined {
            estimator: "g2_cross",
            topology,
        });
    }
    ratio_estimate(
        t.coincidence,
        t.pulses,
        t.signal,
        t.idler,
        ["coincidence", "signal", "idler"],
    )
}

/// Unheralded marginal autocorrelation `g2 = N_ab N_p / (N_a N_b)` of the
/// split arm.
pub fn g2_auto(topology: DetectionTopology, t: &CountTallies) -> Result<Estimate, CountingError> {
    if !matches!(
        topology,
        DetectionTopology::SignalAuto | DetectionTopology::IdlerAuto
    ) {
        return Err(CountingError::EstimatorUndefined {
            estimator: "g2_auto",
            topology,
        });
    }
    ratio_estimate(
        t.split_ab,
        t.pulses,
        t.split_a,
        t.split_b,
        ["split_ab", "split_a", "split_b"],
    )
}

/// Heralded autocorrelation `g2_h = N_hab N_h / (N_ha N_hb)`.
pub fn g2_heralded(
    topology: DetectionTopology,
    t: &CountTallies,
) -> Result<Estimate, CountingError> {
    if topology != DetectionTopology::HeraldedIdler {
        return Err(CountingError::EstimatorUndefined {
            estimator: "g2_heralded",
            topology,
        });
    }
    if t.signal == 0 {
        return Err(CountingError::ZeroCount { counter: "signal" });
    }
    let e = ratio_estimate(
        t.herald_split_ab,
        t.signal,
        t.herald_split_a,
        t.herald_split_b,
        ["herald_split_ab", "herald_split_a", "herald_split_b"],
    )?;
    // Include the herald-count fluctuation in the error.
    let rel = (e.std_err / e.value).hypot((t.signal as f64).powf(-0.5));
    Ok(Estimate {
        value: e.value,
        std_err: e.value * rel,
    })
}

/// Heralding efficiency `eta_H = N_si / N_s` (cross topology), with a
/// binomial standard error.
pub fn heralding_efficiency(
    topology: DetectionTopology,
    t: &CountTallies,
) -> Result<Estimate, CountingError> {
    if topology != DetectionTopology::Cross {
        return Err(CountingError::EstimatorUndefined {
            estimator: "heralding_efficiency",
            topology,
        });
    }
    if t.signal == 0 {
        return Err(CountingError::ZeroCount { counter: "signal" });
    }
    let p = t.coincidence as f64 / t.signal as f64;
    Ok(Estimate {
        value: p,
        std_err: (p * (1.0 - p) / t.signal as f64).sqrt(),
    })
}

/// Preparation efficiency `eta_P = eta_H / eta_det`: the heralding
/// efficiency with the detector quantum efficiency divided out.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PreparationEfficiency {
    pub value: f64,
    pub std_err: f64,
    /// True when the estimate exceeds unity (calibration inconsistency).
    pub exceeds_unity: bool,
}

pub fn preparation_efficiency(
    topology: DetectionTopology,
    t: &CountTallies,
    eta_det: f64,
) -> Result<PreparationEfficiency, CountingError> {
    if !(eta_det > 0.0) {
        return Err(CountingError::InvalidConfig(format!(
            "eta_det = {eta_det} must be positive"
        )));
    }
    let h = heralding_efficiency(topology, t)?;
    let value = h.value / eta_det;
    Ok(PreparationEfficiency {
        value,
        std_err: h.std_err / eta_det,
        exceeds_unity: value > 1.0,
    })
}

/// Analytic click probabilities for the same source/noise/topology, via
/// inclusion-exclusion over detector subsets. Used for model columns next
/// to the Monte Carlo estimates.
pub struct ClickModel<'a> {
    /// Per detector: probability that one signal (resp. idler) photon
    /// produces a click there.
    detectors: Vec<(f64, f64)>,
    source: &'a PairSource,
    noise: &'a NoiseModel,
}

impl<'a> ClickModel<'a> {
    pub fn new(
        topology: DetectionTopology,
        source: &'a PairSource,
        noise: &'a NoiseModel,
    ) -> Self {
        let eta_s = noise.eta_signal_path * noise.eta_det;
        let eta_i = noise.eta_idler_path * noise.eta_det;
        let detectors = match topology {
            DetectionTopology::Cross => vec![(eta_s, 0.0), (0.0, eta_i)],
            DetectionTopology::SignalAuto => vec![(eta_s / 2.0, 0.0), (eta_s / 2.0, 0.0)],
            DetectionTopology::IdlerAuto => vec![(0.0, eta_i / 2.0), (0.0, eta_i / 2.0)],
            DetectionTopology::HeraldedIdler => {
                vec![(eta_s, 0.0), (0.0, eta_i / 2.0), (0.0, eta_i / 2.0)]
            }
        };
        ClickModel {
            detectors,
            source,
            noise,
        }
    }

    /// P(none of the detectors in `mask` clicks).
    fn none_click(&self, mask: u32) -> f64 {
        let (mut s_abs, mut i_abs, mut n_det) = (0.0, 0.0, 0u32);
        for (d, &(ps, pi)) in self.detectors.iter().enumerate() {
            if mask & (1 << d) != 0 {
                s_abs += ps;
                i_abs += pi;
                n_det += 1;
            }
        }
        let (a_s, a_i) = (1.0 - s_abs, 1.0 - i_abs);
        let mut p = 1.0;
        for &mu in &self.source.mode_means {
            p /= 1.0 + mu * (1.0 - a_s * a_i);
        }
        p *= (-self.noise.raman_signal * s_abs).exp();
        p *= (-self.noise.raman_idler * i_abs).exp();
        p * (1.0 - self.noise.dark_click).powi(n_det as i32)
    }

    /// P(all detectors in `mask` click), by inclusion-exclusion.
    pub fn all_click(&self, mask: u32) -> f64 {
        let bits: Vec<u32> = (0..self.detectors.len() as u32)
            .filter(|d| mask & (1 << d) != 0)
            .collect();
        let mut total = 0.0;
        for sub in 0..(1u32 << bits.len()) {
            let mut m = 0u32;
            let mut parity = 1.0;
            for (j, &d) in bits.iter().enumerate() {
                if sub & (1 << j) != 0 {
                    m |= 1 << d;
                    parity = -parity;
                }
            }
            total += parity * self.none_click(m);
        }
        total
    }
}

/// Expected values of the estimators under the analytic click model.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnalyticEstimates {
    /// The topology's own g2 estimator (g2_si, g2 auto, or heralded g2).
    pub g2: f64,
    /// Heralding efficiency (cross topology only).
    pub heralding_efficiency: Option<f64>,
    /// Click probability of the first detector (singles rate per pulse).
    pub p_first: f64,
}

pub fn analytic_estimates(
    topology: DetectionTopology,
    source: &PairSource,
    noise: &NoiseModel,
) -> AnalyticEstimates {
    let m = ClickModel::new(topology, source, noise);
    match topology {
        DetectionTopology::Cross => {
            let ps = m.all_click(0b01);
            let pi = m.all_click(0b10);
            let psi = m.all_click(0b11);
            AnalyticEstimates {
                g2: psi / (ps * pi),
                heralding_efficiency: Some(psi / ps),
                p_first: ps,
            }
        }
        DetectionTopology::SignalAuto | DetectionTopology::IdlerAuto => {
            let pa = m.all_click(0b01);
            let pb = m.all_click(0b10);
            let pab = m.all_click(0b11);
            AnalyticEstimates {
                g2: pab / (pa * pb),
                heralding_efficiency: None,
                p_first: pa,
            }
        }
        DetectionTopology::HeraldedIdler => {
            let ph = m.all_click(0b001);
            let pha = m.all_click(0b011);
            let phb = m.all_click(0b101);
            let phab = m.all_click(0b111);
            AnalyticEstimates {
                g2: phab * ph / (pha * phb),
                heralding_efficiency: None,
                p_first: ph,
            }
        }
    }
}
