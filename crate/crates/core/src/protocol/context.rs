//! Concrete rings built from a profile.

use std::sync::Arc;

use super::profile::Profile;
use crate::bootstrap::BootstrapParams;
use crate::error::{Error, Result};
use crate::ring::primes::{ntt_primes_below, ntt_primes_near};
use crate::ring::{NoiseParams, RingParams};

/// Moduli of every ring in a profile, before any NTT table is built.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuliPlan {
    pub q0: u64,
    pub small_special: u64,
    /// Big-ring chain `q_0, arithmetic, SlotsToCoeffs, EvalMod, CoeffsToSlots`.
    pub big_chain: Vec<u64>,
    pub big_special: Vec<u64>,
}

impl ModuliPlan {
    pub fn new(profile: &Profile) -> Self {
        let degree = profile.big_degree.max(profile.small_degree);
        let two_n = 2 * degree as u64;
        let q0 = ntt_primes_near(profile.q0_bits, 1, two_n, &[])[0];
        let small_special = ntt_primes_near(profile.small_special_bits, 1, two_n, &[q0])[0];
        let mut big_chain = vec![q0];
        let mut big_special = Vec::new();
        if profile.has_big_ring() {
            let runs = profile
                .arith
                .iter()
                .chain([&profile.stc, &profile.eval_mod, &profile.cts]);
            for run in runs.filter(|r| r.count > 0) {
                let mut exclude = big_chain.clone();
                exclude.push(small_special);
                big_chain.extend(ntt_primes_near(run.bits, run.count, two_n, &exclude));
            }
            if profile.special.count > 0 {
                big_special = ntt_primes_below(profile.special.bits, profile.special.count, two_n);
            }
        }
        Self {
            q0,
            small_special,
            big_chain,
            big_special,
        }
    }
}

/// Rings, noise and circuit configuration shared by both roles.
#[derive(Debug)]
pub struct Contexts {
    pub profile: Profile,
    pub moduli: ModuliPlan,
    /// Rings of degree `n, 2n, ..., N/2` over `[q_0, P]`; `small[0]` evaluates the functions.
    pub small: Vec<Arc<RingParams>>,
    pub big: Option<Arc<RingParams>>,
}

impl Contexts {
    pub fn new(profile: Profile) -> Result<Self> {
        profile.validate()?;
        if !profile.is_materializable() {
            return Err(Error::Config(format!(
                "profile '{}' is for size accounting only",
                profile.kind
            )));
        }
        let moduli = ModuliPlan::new(&profile);
        let small_moduli = [moduli.q0, moduli.small_special];
        let mut small = Vec::new();
        let mut degree = profile.small_degree;
        loop {
            small.push(Arc::new(RingParams::new(degree, &small_moduli, 1)?));
            degree *= 2;
            if !profile.has_big_ring() || degree >= profile.big_degree {
                break;
            }
        }
        let big = if profile.has_big_ring() {
            let mut all = moduli.big_chain.clone();
            all.extend(&moduli.big_special);
            Some(Arc::new(RingParams::new(
                profile.big_degree,
                &all,
                moduli.big_special.len(),
            )?))
        } else {
            None
        };
        Ok(Self {
            profile,
            moduli,
            small,
            big,
        })
    }

    pub fn pfe_ring(&self) -> &Arc<RingParams> {
        &self.small[0]
    }

    pub fn big_ring(&self) -> Result<&Arc<RingParams>> {
        self.big
            .as_ref()
            .ok_or_else(|| Error::Config(format!("profile '{}' has no bootstrapping ring", self.profile.kind)))
    }

    /// Merge tree rings `n, ..., N`.
    pub fn merge_rings(&self) -> Result<Vec<Arc<RingParams>>> {
        let mut rings = self.small.clone();
        rings.push(self.big_ring()?.clone());
        Ok(rings)
    }

    pub fn small_noise(&self, degree: usize) -> Result<NoiseParams> {
        NoiseParams::new(self.profile.sigma, 2 * degree / 3)
    }

    pub fn big_noise(&self) -> Result<NoiseParams> {
        NoiseParams::new(self.profile.sigma, self.profile.big_hamming)
    }

    /// Half-bootstrapping circuit: messages at scale `Δ` in, slots at scale `Δ` out.
    pub fn bootstrap_params(&self) -> BootstrapParams {
        bootstrap_params(&self.profile)
    }

    /// Ring with the given degree and full moduli list.
    pub fn ring_for(&self, degree: usize, moduli: &[u64]) -> Result<&Arc<RingParams>> {
        self.small
            .iter()
            .chain(self.big.as_ref())
            .find(|r| r.degree() == degree && r.moduli().iter().map(|m| m.value()).eq(moduli.iter().copied()))
            .ok_or_else(|| Error::Serialization(format!("no ring of degree {degree} with the given moduli")))
    }
}

pub fn bootstrap_params(profile: &Profile) -> BootstrapParams {
    let scale = profile.scale();
    BootstrapParams {
        k_bound: profile.k_bound,
        sine_degree: profile.sine_degree,
        double_angle: profile.double_angle,
        cts_depth: profile.cts.count,
        stc_depth: profile.stc.count,
        ..BootstrapParams::toy(profile.big_degree, scale, scale)
    }
}
