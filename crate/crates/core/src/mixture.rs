//! Adaptive Gaussian mixture over the perceptual space.
//!
//! Each component keeps a diagonal conjugate posterior (normal mean with
//! inverse-chi-squared variance per dimension), so the predictive density of
//! a new observation is a product of univariate Student-t densities. The
//! mixture grows online: nearest-component search uses the l-infinity norm
//! and new components are spawned centered on the observation that failed
//! the similarity test.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::state::STATE_DIM;

/// Per-dimension floor on the accumulated scatter, preventing degenerate
/// spikes when a component sees near-identical states.
pub const SCALE_FLOOR: f64 = 1e-8;

const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Stable identifier of a mixture component; doubles as the dense row index
/// into the Q-table (creation order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentId(pub usize);

impl ComponentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for ComponentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "m{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MixtureError {
    #[error("unknown component {0}")]
    UnknownComponent(ComponentId),
    #[error("mixture is empty")]
    Empty,
    #[error("dimension mismatch: mixture is {expected}-dimensional, input is {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Hyperparameters shared by every component of a mixture.
///
/// `scale` is the prior variance scale per dimension; together with `dof`
/// it fixes the prior scatter `dof * scale` a fresh component starts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixturePrior {
    pub mean: Vec<f64>,
    pub kappa: f64,
    pub dof: f64,
    pub scale: Vec<f64>,
}

impl MixturePrior {
    /// Prior matched to l1-normalized 30-dimensional states: mean 1/30,
    /// kappa 1, dof 3, variance scale (1/30)^2 per dimension.
    pub fn state_default() -> Self {
        let m = 1.0 / STATE_DIM as f64;
        Self::isotropic(STATE_DIM, m, 1.0, 3.0, m * m)
    }

    /// Prior with identical hyperparameters in every dimension.
    pub fn isotropic(dim: usize, mean: f64, kappa: f64, dof: f64, scale: f64) -> Self {
        assert!(dim > 0, "prior dimension must be positive");
        assert!(kappa > 0.0 && dof > 0.0 && scale > 0.0, "prior hyperparameters must be positive");
        Self {
            mean: vec![mean; dim],
            kappa,
            dof,
            scale: vec![scale; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn prior_scatter(&self) -> Vec<f64> {
        self.scale
            .iter()
            .map(|s| (self.dof * s).max(SCALE_FLOOR))
            .collect()
    }
}

/// One mixture component: effective observation count, posterior mean and
/// accumulated scatter per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    count: f64,
    mean: Vec<f64>,
    scatter: Vec<f64>,
}

impl Component {
    /// Fresh component centered at `s`: the prior re-centered on the
    /// observation, counted as one effective observation.
    fn spawned_at(s: &[f64], prior: &MixturePrior) -> Self {
        Self {
            count: 1.0,
            mean: s.to_vec(),
            scatter: prior.prior_scatter(),
        }
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scatter(&self) -> &[f64] {
        &self.scatter
    }

    /// Degrees of freedom of the posterior predictive.
    pub fn dof(&self, prior: &MixturePrior) -> f64 {
        prior.dof + self.count
    }

    /// Predictive variance scale per dimension:
    /// `(scatter/dof) * (kappa + 1) / kappa`.
    pub fn predictive_scale(&self, prior: &MixturePrior) -> Vec<f64> {
        let kappa = prior.kappa + self.count;
        let dof = self.dof(prior);
        self.scatter
            .iter()
            .map(|sc| (sc / dof) * (kappa + 1.0) / kappa)
            .collect()
    }

    /// Conjugate update with one (unit-weight) observation.
    fn observe(&mut self, s: &[f64], prior: &MixturePrior) {
        let kappa = prior.kappa + self.count;
        let kappa_next = kappa + 1.0;
        for d in 0..self.mean.len() {
            let delta = s[d] - self.mean[d];
            self.scatter[d] = (self.scatter[d] + (kappa / kappa_next) * delta * delta)
                .max(SCALE_FLOOR);
            self.mean[d] = (kappa * self.mean[d] + s[d]) / kappa_next;
        }
        self.count += 1.0;
    }

    /// Log posterior-predictive density at `s` (product of Student-t's).
    fn log_predictive(&self, s: &[f64], prior: &MixturePrior) -> f64 {
        let dof = self.dof(prior);
        let kappa = prior.kappa + self.count;
        let scale_factor = (kappa + 1.0) / (kappa * dof);
        let ln_norm = ln_gamma((dof + 1.0) * 0.5) - ln_gamma(dof * 0.5) - 0.5 * (dof.ln() + LN_PI);
        let mut total = 0.0;
        for d in 0..self.mean.len() {
            let var = self.scatter[d] * scale_factor;
            let z2 = (s[d] - self.mean[d]).powi(2) / var;
            total += ln_norm - 0.5 * var.ln() - 0.5 * (dof + 1.0) * (z2 / dof).ln_1p();
        }
        total
    }

    /// l-infinity distance from `s` to the component mean.
    fn linf_to_mean(&self, s: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(s.iter())
            .map(|(m, x)| (m - x).abs())
            .fold(0.0, f64::max)
    }
}

/// Ordered collection of components sharing one prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    prior: MixturePrior,
    components: Vec<Component>,
}

impl Mixture {
    pub fn new(prior: MixturePrior) -> Self {
        Self {
            prior,
            components: Vec::new(),
        }
    }

    pub fn prior(&self) -> &MixturePrior {
        &self.prior
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, id: ComponentId) -> Result<&Component, MixtureError> {
        self.components
            .get(id.index())
            .ok_or(MixtureError::UnknownComponent(id))
    }

    pub fn components(&self) -> impl Iterator<Item = (ComponentId, &Component)> {
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| (ComponentId(i), c))
    }

    fn check_dim(&self, s: &[f64]) -> Result<(), MixtureError> {
        if s.len() != self.dim() {
            return Err(MixtureError::DimensionMismatch {
                expected: self.dim(),
                got: s.len(),
            });
        }
        Ok(())
    }

    /// Log posterior-predictive density of `s` under component `m`.
    pub fn predictive_loglik(&self, s: &[f64], m: ComponentId) -> Result<f64, MixtureError> {
        self.check_dim(s)?;
        Ok(self.component(m)?.log_predictive(s, &self.prior))
    }

    /// Log predictive densities of `s` under every component, in id order.
    pub fn logliks(&self, s: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.log_predictive(s, &self.prior))
            .collect()
    }

    /// Component whose mean is closest to `s` in the l-infinity norm,
    /// together with that distance. Ties go to the lowest id.
    pub fn nearest_component(&self, s: &[f64]) -> Result<(ComponentId, f64), MixtureError> {
        self.check_dim(s)?;
        let mut best: Option<(ComponentId, f64)> = None;
        for (id, c) in self.components() {
            let d = c.linf_to_mean(s);
            match best {
                Some((_, bd)) if d >= bd => {}
                _ => best = Some((id, d)),
            }
        }
        best.ok_or(MixtureError::Empty)
    }

    /// Conjugate sufficient-statistic update of component `m` with
    /// observation `s`. The `weight` argument is accepted for interface
    /// compatibility but the statistics update always uses unit weight.
    pub fn update_component(
        &mut self,
        m: ComponentId,
        s: &[f64],
        weight: f64,
    ) -> Result<(), MixtureError> {
        debug_assert!((0.0..=1.0).contains(&weight), "weight out of range");
        let _ = weight;
        self.check_dim(s)?;
        let prior = self.prior.clone();
        let comp = self
            .components
            .get_mut(m.index())
            .ok_or(MixtureError::UnknownComponent(m))?;
        comp.observe(s, &prior);
        Ok(())
    }

    /// Appends a new component centered at `s` and returns its id. The
    /// caller is responsible for extending the Q-table by one zero row.
    pub fn create_component(&mut self, s: &[f64]) -> ComponentId {
        assert_eq!(s.len(), self.dim(), "state dimension mismatch");
        let id = ComponentId(self.components.len());
        self.components.push(Component::spawned_at(s, &self.prior));
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form batch conjugate posterior from a full sample history;
    /// the independent route the online recursion is checked against.
    fn batch_posterior(
        prior: &MixturePrior,
        dim: usize,
        samples: &[Vec<f64>],
    ) -> (f64, Vec<f64>, Vec<f64>) {
        let n = samples.len() as f64;
        let kappa_n = prior.kappa + n;
        let mut mean = vec![0.0; dim];
        let mut scatter = vec![0.0; dim];
        for d in 0..dim {
            let sum: f64 = samples.iter().map(|s| s[d]).sum();
            let xbar = if samples.is_empty() { 0.0 } else { sum / n };
            let ss: f64 = samples.iter().map(|s| (s[d] - xbar).powi(2)).sum();
            mean[d] = (prior.kappa * prior.mean[d] + sum) / kappa_n;
            scatter[d] = prior.dof * prior.scale[d]
                + ss
                + (prior.kappa * n / kappa_n) * (xbar - prior.mean[d]).powi(2);
        }
        (n, mean, scatter)
    }

    fn student_t_logpdf(x: f64, dof: f64, loc: f64, var: f64) -> f64 {
        let z2 = (x - loc).powi(2) / var;
        ln_gamma((dof + 1.0) * 0.5) - ln_gamma(dof * 0.5)
            - 0.5 * (dof.ln() + LN_PI)
            - 0.5 * var.ln()
            - 0.5 * (dof + 1.0) * (z2 / dof).ln_1p()
    }

    /// d=1 closed-form posterior predictive log-density.
    fn closed_form_predictive(prior: &MixturePrior, samples: &[f64], x: f64) -> f64 {
        let samples: Vec<Vec<f64>> = samples.iter().map(|&v| vec![v]).collect();
        let (n, mean, scatter) = batch_posterior(prior, 1, &samples);
        let kappa = prior.kappa + n;
        let dof = prior.dof + n;
        let var = (scatter[0] / dof) * (kappa + 1.0) / kappa;
        student_t_logpdf(x, dof, mean[0], var)
    }

    fn d1_prior() -> MixturePrior {
        MixturePrior::isotropic(1, 0.0, 1.0, 3.0, 1.0)
    }

    /// Mixture whose single component observed the given d=1 samples after
    /// being created at the first one.
    fn d1_mixture_from_samples(prior: &MixturePrior, samples: &[f64]) -> Mixture {
        // Creation re-centers the prior, so to reproduce a plain conjugate
        // update from the shared prior we spawn at the prior mean with the
        // bookkeeping reset, then feed every sample through `observe`.
        let mut mix = Mixture::new(prior.clone());
        let id = mix.create_component(&[prior.mean[0]]);
        // Rewind the creation's implicit observation: fresh component state
        // equivalent to "prior only".
        mix.components[id.index()].count = 0.0;
        for &s in samples {
            mix.update_component(id, &[s], 1.0).unwrap();
        }
        mix
    }

    #[test]
    fn predictive_matches_closed_form_conjugate_oracle() {
        let prior = d1_prior();
        let samples = [0.4, 0.6];
        let mix = d1_mixture_from_samples(&prior, &samples);
        let got = mix.predictive_loglik(&[0.5], ComponentId(0)).unwrap();
        let want = closed_form_predictive(&prior, &samples, 0.5);
        assert!(
            (got - want).abs() < 1e-9,
            "online {got} vs closed form {want}"
        );
    }

    #[test]
    fn predictive_matches_numerical_posterior_integration() {
        // Cross-check of the closed form itself: integrate the normal
        // likelihood over the conjugate posterior on (mean, variance).
        let prior = d1_prior();
        let samples = [0.4, 0.6];
        let x = 0.5;

        let n = samples.len() as f64;
        let sum: f64 = samples.iter().sum();
        let xbar = sum / n;
        let ss: f64 = samples.iter().map(|s| (s - xbar).powi(2)).sum();
        let kappa_n = prior.kappa + n;
        let mu_n = (prior.kappa * prior.mean[0] + sum) / kappa_n;
        let dof_n = prior.dof + n;
        let scatter_n = prior.dof * prior.scale[0]
            + ss
            + (prior.kappa * n / kappa_n) * (xbar - prior.mean[0]).powi(2);

        // Posterior: var ~ scaled-inv-chi2(dof_n, scatter_n/dof_n),
        //            mean | var ~ Normal(mu_n, var/kappa_n).
        // Integrate over var with Simpson on log-var, mean analytically:
        // int N(x; mu, var) N(mu; mu_n, var/kappa_n) dmu
        //   = N(x; mu_n, var * (kappa_n + 1)/kappa_n).
        let log_inv_chi2 = |var: f64| -> f64 {
            let half = dof_n * 0.5;
            half * (scatter_n * 0.5).ln() - ln_gamma(half)
                - (half + 1.0) * var.ln()
                - scatter_n / (2.0 * var)
        };
        let integrand = |log_var: f64| -> f64 {
            let var = log_var.exp();
            let pred_var = var * (kappa_n + 1.0) / kappa_n;
            let normal = (-0.5 * (x - mu_n).powi(2) / pred_var).exp()
                / (2.0 * std::f64::consts::PI * pred_var).sqrt();
            // Jacobian d(var) = var d(log var)
            normal * log_inv_chi2(var).exp() * var
        };
        let (a, b, steps) = (-12.0_f64, 6.0_f64, 20_000usize);
        let h = (b - a) / steps as f64;
        let mut acc = integrand(a) + integrand(b);
        for i in 1..steps {
            let w = if i % 2 == 0 { 2.0 } else { 4.0 };
            acc += w * integrand(a + i as f64 * h);
        }
        let integral = acc * h / 3.0;

        let closed = closed_form_predictive(&prior, &samples, x).exp();
        assert!(
            (integral - closed).abs() < 1e-6,
            "quadrature {integral} vs closed form {closed}"
        );
    }

    #[test]
    fn online_equals_batch_on_random_histories() {
        // d<=3 sample histories: online update then predictive must equal
        // the from-scratch batch computation.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for dim in 1..=3usize {
            for _ in 0..50 {
                let prior = MixturePrior::isotropic(
                    dim,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.2..4.0),
                    rng.gen_range(1.0..8.0),
                    rng.gen_range(0.05..2.0),
                );
                let n = rng.gen_range(1..9);
                let samples: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
                    .collect();
                let mut mix = Mixture::new(prior.clone());
                let id = mix.create_component(&samples[0]);
                mix.components[id.index()].count = 0.0;
                mix.components[id.index()].mean = prior.mean.clone();
                for s in &samples {
                    mix.update_component(id, s, 1.0).unwrap();
                }
                let (count, mean, scatter) = batch_posterior(&prior, dim, &samples);
                let comp = mix.component(id).unwrap();
                assert!((comp.count() - count).abs() < 1e-12);
                for d in 0..dim {
                    assert!((comp.mean()[d] - mean[d]).abs() < 1e-9);
                    assert!((comp.scatter()[d] - scatter[d]).abs() < 1e-9);
                }
                let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let kappa = prior.kappa + count;
                let dof = prior.dof + count;
                let want: f64 = (0..dim)
                    .map(|d| {
                        let var = (scatter[d] / dof) * (kappa + 1.0) / kappa;
                        student_t_logpdf(x[d], dof, mean[d], var)
                    })
                    .sum();
                let got = mix.predictive_loglik(&x, id).unwrap();
                assert!((got - want).abs() < 1e-9, "dim {dim}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn posterior_mean_matches_hand_conjugate_formula() {
        // After N=3 updates in d=1, mean = (kappa0*mu0 + sum x) / (kappa0 + 3).
        let prior = MixturePrior::isotropic(1, 0.5, 2.0, 3.0, 1.0);
        let samples = [0.1, 0.9, 0.2];
        let mix = d1_mixture_from_samples(&prior, &samples);
        let want = (2.0 * 0.5 + 1.2) / (2.0 + 3.0);
        let got = mix.component(ComponentId(0)).unwrap().mean()[0];
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn repeated_identical_updates_pull_mean_monotonically() {
        let prior = MixturePrior::state_default();
        let mut mix = Mixture::new(prior);
        let origin = vec![1.0 / 30.0; 30];
        let mut target = vec![0.0; 30];
        target[0] = 0.6;
        target[7] = 0.4;
        let id = mix.create_component(&origin);
        let mut prev = mix.component(id).unwrap().mean().to_vec();
        for _ in 0..20 {
            mix.update_component(id, &target, 1.0).unwrap();
            let cur = mix.component(id).unwrap().mean().to_vec();
            for d in 0..30 {
                let before = (prev[d] - target[d]).abs();
                let after = (cur[d] - target[d]).abs();
                assert!(after <= before + 1e-15);
            }
            prev = cur;
        }
    }

    #[test]
    fn scale_never_drops_below_floor() {
        let prior = MixturePrior::isotropic(2, 0.0, 1.0, 3.0, 1e-12);
        let mut mix = Mixture::new(prior);
        let s = vec![0.25, 0.25];
        let id = mix.create_component(&s);
        for _ in 0..100 {
            mix.update_component(id, &s, 1.0).unwrap();
        }
        for &sc in mix.component(id).unwrap().scatter() {
            assert!(sc >= SCALE_FLOOR);
        }
    }

    #[test]
    fn density_maximized_at_mean() {
        let prior = MixturePrior::state_default();
        let mut mix = Mixture::new(prior);
        let mut s = vec![0.0; 30];
        s[2] = 0.7;
        s[11] = 0.3;
        let id = mix.create_component(&s);
        let at_mean = mix.predictive_loglik(&s, id).unwrap();
        for d in 0..30 {
            for delta in [-0.05, 0.05] {
                let mut probe = s.clone();
                probe[d] += delta;
                let off = mix.predictive_loglik(&probe, id).unwrap();
                assert!(off < at_mean);
            }
        }
    }

    #[test]
    fn identical_components_give_identical_loglik() {
        let prior = MixturePrior::state_default();
        let mut mix = Mixture::new(prior);
        let s = vec![1.0 / 30.0; 30];
        let a = mix.create_component(&s);
        let b = mix.create_component(&s);
        let probe = {
            let mut p = vec![0.0; 30];
            p[0] = 1.0;
            p
        };
        assert_eq!(
            mix.predictive_loglik(&probe, a).unwrap(),
            mix.predictive_loglik(&probe, b).unwrap()
        );
    }

    #[test]
    fn nearest_component_hand_cases() {
        let prior = MixturePrior::isotropic(30, 0.0, 1.0, 3.0, 1.0);
        let mut mix = Mixture::new(prior);
        let a = mix.create_component(&vec![0.1; 30]);
        let b = mix.create_component(&vec![0.2; 30]);
        let (id, d) = mix.nearest_component(&vec![0.12; 30]).unwrap();
        assert_eq!(id, a);
        assert!((d - 0.02).abs() < 1e-12);

        // Exact distance to self.
        let (id, d) = mix.nearest_component(&vec![0.2; 30]).unwrap();
        assert_eq!(id, b);
        assert_eq!(d, 0.0);

        // Exact tie: lower id wins.
        let (id, _) = mix.nearest_component(&vec![0.15; 30]).unwrap();
        assert_eq!(id, a);
    }

    #[test]
    fn nearest_on_empty_mixture_errors() {
        let mix = Mixture::new(MixturePrior::isotropic(3, 0.0, 1.0, 3.0, 1.0));
        assert_eq!(mix.nearest_component(&[0.0, 0.0, 0.0]), Err(MixtureError::Empty));
    }

    #[test]
    fn nearest_is_stable_under_far_insertions() {
        let prior = MixturePrior::isotropic(5, 0.0, 1.0, 3.0, 1.0);
        let mut mix = Mixture::new(prior);
        let a = mix.create_component(&vec![0.1; 5]);
        let s = vec![0.11; 5];
        let before = mix.nearest_component(&s).unwrap();
        mix.create_component(&vec![5.0; 5]);
        let after = mix.nearest_component(&s).unwrap();
        assert_eq!(before, after);
        assert_eq!(before.0, a);
    }

    #[test]
    fn creation_assigns_dense_ids_in_order() {
        let prior = MixturePrior::isotropic(2, 0.0, 1.0, 3.0, 1.0);
        let mut mix = Mixture::new(prior);
        assert_eq!(mix.create_component(&[0.0, 0.0]), ComponentId(0));
        assert_eq!(mix.len(), 1);
        assert_eq!(mix.create_component(&[1.0, 1.0]), ComponentId(1));
        assert_eq!(mix.len(), 2);
    }

    #[test]
    fn fresh_component_peaks_at_its_center() {
        let prior = MixturePrior::state_default();
        let mut mix = Mixture::new(prior);
        let mut s = vec![0.0; 30];
        s[5] = 1.0;
        let id = mix.create_component(&s);
        let center = mix.predictive_loglik(&s, id).unwrap();
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        for _ in 0..50 {
            let mut probe = vec![0.0; 30];
            let mut total = 0.0;
            for entry in probe.iter_mut() {
                rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
                let u = (rng_state >> 11) as f64 / (1u64 << 53) as f64;
                *entry = u;
                total += u;
            }
            for entry in probe.iter_mut() {
                *entry /= total;
            }
            assert!(mix.predictive_loglik(&probe, id).unwrap() <= center);
        }
    }

    #[test]
    fn predictive_density_integrates_to_one_d1() {
        let prior = MixturePrior::isotropic(1, 0.3, 1.5, 4.0, 0.7);
        let mut mix = Mixture::new(prior);
        let id = mix.create_component(&[0.2]);
        mix.update_component(id, &[0.8], 1.0).unwrap();
        let pdf = |x: f64| mix.predictive_loglik(&[x], id).unwrap().exp();
        let (a, b, steps) = (-80.0_f64, 80.0_f64, 200_000usize);
        let h = (b - a) / steps as f64;
        let mut acc = pdf(a) + pdf(b);
        for i in 1..steps {
            let w = if i % 2 == 0 { 2.0 } else { 4.0 };
            acc += w * pdf(a + i as f64 * h);
        }
        let integral = acc * h / 3.0;
        assert!((integral - 1.0).abs() < 1e-4, "integral {integral}");
    }

    #[test]
    fn predictive_density_integrates_to_one_d2() {
        let prior = MixturePrior::isotropic(2, 0.0, 1.0, 3.0, 0.5);
        let mut mix = Mixture::new(prior);
        let id = mix.create_component(&[0.1, -0.2]);
        mix.update_component(id, &[0.5, 0.1], 1.0).unwrap();
        let pdf = |x: f64, y: f64| mix.predictive_loglik(&[x, y], id).unwrap().exp();
        // Simpson in both axes over a wide box; dof >= 4 makes the
        // truncated tail mass negligible at this tolerance.
        let (lo, hi, n) = (-60.0_f64, 60.0_f64, 1200usize);
        let h = (hi - lo) / n as f64;
        let weight = |i: usize| -> f64 {
            if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let mut acc = 0.0;
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let mut row = 0.0;
            for j in 0..=n {
                row += weight(j) * pdf(x, lo + j as f64 * h);
            }
            acc += weight(i) * row;
        }
        let integral = acc * h * h / 9.0;
        assert!((integral - 1.0).abs() < 1e-4, "integral {integral}");
    }

    #[test]
    fn unknown_component_is_an_error() {
        let mix = Mixture::new(MixturePrior::isotropic(2, 0.0, 1.0, 3.0, 1.0));
        assert_eq!(
            mix.predictive_loglik(&[0.0, 0.0], ComponentId(3)),
            Err(MixtureError::UnknownComponent(ComponentId(3)))
        );
    }
}
