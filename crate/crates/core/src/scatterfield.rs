//! Von Mises-Fisher scatterer fields.
//!
//! The density over (azimuth α, elevation β) is
//! `f(α, β) = k cos β / (4π sinh k) · exp(k [cos β₀ cos β cos(α − α₀) + sin β₀ sin β])`,
//! which integrates to one over `α ∈ (−π, π]`, `β ∈ (−π/2, π/2)`.
//!
//! A field marked `planar` describes the same azimuth statistics with every
//! scatterer pinned to zero elevation.

use crate::error::{Error, Result};
use crate::geometry::{wrap_azimuth, AnglePair, Side, SubModel, SINGULAR_MARGIN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

/// A directional scatterer population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmfField {
    pub mean: AnglePair,
    pub concentration: f64,
    pub count: usize,
    pub region: SubModel,
    pub side: Side,
    pub planar: bool,
}

impl VmfField {
    pub fn new(mean: AnglePair, concentration: f64, count: usize, region: SubModel, side: Side) -> Self {
        Self { mean, concentration, count, region, side, planar: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.concentration >= 0.0 && self.concentration.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "concentration {} must be finite and >= 0",
                self.concentration
            )));
        }
        if self.count == 0 {
            return Err(Error::InvalidParameter("scatterer count must be >= 1".into()));
        }
        AnglePair::new(self.mean.azimuth, self.mean.elevation)?;
        Ok(())
    }
}

/// Discrete scatterers with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererSet {
    pub entries: Vec<(AnglePair, f64)>,
}

impl ScattererSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    /// Weighted mean direction as (azimuth, elevation), computed on the sphere.
    pub fn mean_direction(&self) -> (f64, f64) {
        let mut acc = [0.0; 3];
        for (a, w) in &self.entries {
            let (sa, ca) = a.azimuth.sin_cos();
            let (se, ce) = a.elevation.sin_cos();
            acc[0] += w * ce * ca;
            acc[1] += w * ce * sa;
            acc[2] += w * se;
        }
        let horiz = (acc[0] * acc[0] + acc[1] * acc[1]).sqrt();
        (acc[1].atan2(acc[0]), acc[2].atan2(horiz))
    }
}

/// `k / (2π (1 − e^{−2k}))`, the density scale with `e^{k}` factored out.
fn scale(k: f64) -> f64 {
    k / (2.0 * PI * -(-2.0 * k).exp_m1())
}

/// Density of the field at `at` (per rad²).
pub fn vmf_pdf(field: &VmfField, at: AnglePair) -> f64 {
    let k = field.concentration;
    let cb = at.elevation.cos();
    if k == 0.0 {
        return cb / (4.0 * PI);
    }
    let m = field.mean;
    let dot = m.elevation.cos() * cb * (at.azimuth - m.azimuth).cos()
        + m.elevation.sin() * at.elevation.sin();
    scale(k) * cb * (k * (dot - 1.0)).exp()
}

/// Exponentially scaled modified Bessel function `I₀(x) e^{−x}` for `x ≥ 0`,
/// by the trapezoid rule on its periodic integral representation.
pub fn bessel_i0e(x: f64) -> f64 {
    let n = 32 + 4 * (x.sqrt().ceil() as usize);
    let h = PI / n as f64;
    let mut s = 0.5 * (1.0 + (-2.0 * x).exp());
    for i in 1..n {
        let t = i as f64 * h;
        s += (x * (t.cos() - 1.0)).exp();
    }
    s * h / PI
}

/// Marginal density of the elevation.
pub fn elevation_marginal(field: &VmfField, beta: f64) -> f64 {
    let k = field.concentration;
    let cb = beta.cos();
    if k == 0.0 {
        return 0.5 * cb;
    }
    let b0 = field.mean.elevation;
    let kappa = (k * b0.cos() * cb).max(0.0);
    2.0 * PI * scale(k) * cb * (k * ((beta - b0).cos() - 1.0)).exp() * bessel_i0e(kappa)
}

/// Sorted grid on `[lo, hi]`: a uniform backbone plus dense points around `centre`.
fn refined_grid(lo: f64, hi: f64, centre: f64, width: f64, n_uniform: usize, n_dense: usize) -> Vec<f64> {
    let mut pts = Vec::with_capacity(n_uniform + n_dense + 2);
    for i in 0..=n_uniform {
        pts.push(lo + (hi - lo) * i as f64 / n_uniform as f64);
    }
    let (dlo, dhi) = ((centre - width).max(lo), (centre + width).min(hi));
    if dhi > dlo {
        for i in 0..=n_dense {
            pts.push(dlo + (dhi - dlo) * i as f64 / n_dense as f64);
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    pts
}

/// Cumulative trapezoid integral of `ys` over `xs`.
fn cumulative(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut c = Vec::with_capacity(xs.len());
    c.push(0.0);
    for i in 1..xs.len() {
        let prev = c[i - 1];
        c.push(prev + 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]));
    }
    c
}

/// Position where the cumulative array reaches `target`, by linear interpolation.
fn invert(xs: &[f64], cum: &[f64], target: f64) -> f64 {
    let idx = cum.partition_point(|&c| c < target);
    if idx == 0 {
        return xs[0];
    }
    if idx >= xs.len() {
        return xs[xs.len() - 1];
    }
    let (c0, c1) = (cum[idx - 1], cum[idx]);
    let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
    xs[idx - 1] + t * (xs[idx] - xs[idx - 1])
}

/// Value of a cumulative array at an arbitrary abscissa.
fn eval_cumulative(xs: &[f64], cum: &[f64], x: f64) -> f64 {
    let idx = xs.partition_point(|&v| v < x);
    if idx == 0 {
        return cum[0];
    }
    if idx >= xs.len() {
        return cum[cum.len() - 1];
    }
    let t = (x - xs[idx - 1]) / (xs[idx] - xs[idx - 1]);
    cum[idx - 1] + t * (cum[idx] - cum[idx - 1])
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Split `n` cells over `bands` rows as evenly as possible.
fn cells_per_band(n: usize, bands: usize) -> Vec<usize> {
    let base = n / bands;
    let extra = n % bands;
    (0..bands).map(|j| base + usize::from(j < extra)).collect()
}

/// Equal-mass discretisation into exactly `field.count` scatterers.
///
/// Elevation is cut into `⌈√N⌉` bands at quantiles of its marginal; each band
/// is cut into azimuth cells at quantiles of the band's azimuth marginal. Each
/// entry sits at its cell's probability-weighted centroid with weight `1/N`.
pub fn mev_discretize(field: &VmfField) -> ScattererSet {
    let n = field.count.max(1);
    let mean = field.mean;
    let finish = |a: f64, e: f64| AnglePair {
        azimuth: wrap_azimuth(a),
        elevation: if field.planar { 0.0 } else { e },
    };
    if n == 1 {
        return ScattererSet { entries: vec![(finish(mean.azimuth, mean.elevation), 1.0)] };
    }
    let k = field.concentration;
    let width = 12.0 / (k + 1.0).sqrt();
    let lim = FRAC_PI_2 - 1e-9;

    let betas = refined_grid(-lim, lim, mean.elevation, width, 3000, 3000);
    let dens: Vec<f64> = betas.iter().map(|&b| elevation_marginal(field, b)).collect();
    let cum = cumulative(&betas, &dens);
    let total = *cum.last().unwrap();

    let bands = (n as f64).sqrt().ceil() as usize;
    let counts = cells_per_band(n, bands);
    let mut edges = vec![-lim];
    let mut acc = 0usize;
    for c in &counts[..bands - 1] {
        acc += c;
        edges.push(invert(&betas, &cum, total * acc as f64 / n as f64));
    }
    edges.push(lim);

    let (gx, gw) = gauss_legendre(48);
    let alphas = refined_grid(-PI, PI, 0.0, width, 4096, 3000);
    let (sb0, cb0) = mean.elevation.sin_cos();
    let weight = 1.0 / n as f64;
    let mut entries = Vec::with_capacity(n);

    for (j, &cells) in counts.iter().enumerate() {
        let (lo, hi) = (edges[j], edges[j + 1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        // Per-node factors so the band integral reduces to Σ c_i exp(a_i cos α' + b_i).
        let nodes: Vec<(f64, f64, f64, f64)> = gx
            .iter()
            .zip(&gw)
            .map(|(&x, &w)| {
                let b = mid + half * x;
                let cb = b.cos();
                (k * cb0 * cb, k * (sb0 * b.sin() - 1.0), w * half * cb, b)
            })
            .collect();
        let mut h0 = Vec::with_capacity(alphas.len());
        let mut h1 = Vec::with_capacity(alphas.len());
        let mut hb = Vec::with_capacity(alphas.len());
        for &a in &alphas {
            let ca = a.cos();
            let (mut s0, mut sb) = (0.0, 0.0);
            for &(na, nb, nc, beta) in &nodes {
                let v = nc * (na * ca + nb).exp();
                s0 += v;
                sb += v * beta;
            }
            h0.push(s0);
            h1.push(s0 * a);
            hb.push(sb);
        }
        let c0 = cumulative(&alphas, &h0);
        let c1 = cumulative(&alphas, &h1);
        let cb = cumulative(&alphas, &hb);
        let band_total = *c0.last().unwrap();
        let mut prev = -PI;
        for i in 0..cells {
            let next = if i + 1 == cells {
                PI
            } else {
                invert(&alphas, &c0, band_total * (i + 1) as f64 / cells as f64)
            };
            let m0 = eval_cumulative(&alphas, &c0, next) - eval_cumulative(&alphas, &c0, prev);
            let (az, el) = if m0 > 0.0 {
                (
                    (eval_cumulative(&alphas, &c1, next) - eval_cumulative(&alphas, &c1, prev)) / m0,
                    (eval_cumulative(&alphas, &cb, next) - eval_cumulative(&alphas, &cb, prev)) / m0,
                )
            } else {
                (0.5 * (prev + next), mid)
            };
            entries.push((finish(mean.azimuth + az, el), weight));
            prev = next;
        }
    }
    ScattererSet { entries }
}

/// Draw `n` directions from the field, deterministically for a given seed.
///
/// The cosine of the angle to the mean direction is drawn by inverting its
/// closed-form CDF; the rotation about the mean is uniform.
pub fn vmf_sample(field: &VmfField, seed: u64, n: usize) -> Vec<AnglePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = field.concentration;
    let mu = crate::geometry::unit_vector(field.mean.azimuth, field.mean.elevation);
    // Orthonormal basis completing the mean direction.
    let e1 = {
        let (sa, ca) = field.mean.azimuth.sin_cos();
        let (sb, cb) = field.mean.elevation.sin_cos();
        [-sb * ca, -sb * sa, cb]
    };
    let e2 = [-field.mean.azimuth.sin(), field.mean.azimuth.cos(), 0.0];
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let w = if k == 0.0 {
            2.0 * u - 1.0
        } else {
            (1.0 + (u + (1.0 - u) * (-2.0 * k).exp()).ln() / k).clamp(-1.0, 1.0)
        };
        let psi = 2.0 * PI * rng.gen::<f64>();
        let r = (1.0 - w * w).max(0.0).sqrt();
        let (sp, cp) = psi.sin_cos();
        let v: [f64; 3] = std::array::from_fn(|i| w * mu[i] + r * (cp * e1[i] + sp * e2[i]));
        let elevation = v[2].clamp(-1.0, 1.0).asin();
        if elevation.abs() >= FRAC_PI_2 - SINGULAR_MARGIN {
            continue;
        }
        let azimuth = wrap_azimuth(v[1].atan2(v[0]));
        out.push(AnglePair {
            azimuth,
            elevation: if field.planar { 0.0 } else { elevation },
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn field(k: f64, n: usize, az_deg: f64, el_deg: f64) -> VmfField {
        VmfField::new(
            AnglePair::from_degrees(az_deg, el_deg).unwrap(),
            k,
            n,
            SubModel::TxSphere,
            Side::Left,
        )
    }

    #[test]
    fn isotropic_density() {
        let f = field(0.0, 10, 10.0, 2.0);
        let at = AnglePair::new(1.0, 0.3).unwrap();
        assert_relative_eq!(vmf_pdf(&f, at), 0.3f64.cos() / (4.0 * PI), epsilon = 1e-16);
    }

    #[test]
    fn density_at_mean_k30() {
        let f = field(30.0, 10, 10.0, 0.0);
        assert_relative_eq!(vmf_pdf(&f, f.mean), 60.0 / (4.0 * PI), max_relative = 1e-12);
        assert_relative_eq!(vmf_pdf(&f, f.mean), 4.77465, epsilon = 1e-5);
    }

    #[test]
    fn bessel_matches_series() {
        for &x in &[0.0, 0.5, 3.0, 10.0, 30.0] {
            let mut term: f64 = 1.0;
            let mut sum: f64 = 1.0;
            for j in 1..200 {
                term *= (x / 2.0) * (x / 2.0) / (j as f64 * j as f64);
                sum += term;
            }
            assert_relative_eq!(bessel_i0e(x), sum * (-x).exp(), max_relative = 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_relative_eq!(s, 2.0 / 11.0, epsilon = 1e-14);
    }

    #[test]
    fn mev_single_cell_is_mode() {
        let f = field(30.0, 1, 10.0, 2.0);
        let s = mev_discretize(&f);
        assert_eq!(s.len(), 1);
        assert_eq!(s.entries[0], (f.mean, 1.0));
    }

    #[test]
    fn mev_counts_and_weights() {
        for n in [2, 3, 7, 10, 50, 100] {
            let s = mev_discretize(&field(10.0, n, 10.0, 2.0));
            assert_eq!(s.len(), n);
            assert!((s.total_weight() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mev_centroid_near_mean() {
        let s = mev_discretize(&field(30.0, 100, 10.0, 2.0));
        let (a, e) = s.mean_direction();
        assert!((a.to_degrees() - 10.0).abs() < 0.5, "azimuth {}", a.to_degrees());
        assert!((e.to_degrees() - 2.0).abs() < 0.5, "elevation {}", e.to_degrees());
    }

    #[test]
    fn mev_isotropic_mean_elevation() {
        let s = mev_discretize(&field(0.0, 100, 10.0, 2.0));
        let mean_el: f64 = s.entries.iter().map(|(a, w)| w * a.elevation).sum();
        assert!(mean_el.to_degrees().abs() < 0.5);
    }

    #[test]
    fn planar_field_has_zero_elevation() {
        let mut f = field(10.0, 25, 10.0, 0.0);
        f.planar = true;
        assert!(mev_discretize(&f).entries.iter().all(|(a, _)| a.elevation == 0.0));
        assert!(vmf_sample(&f, 3, 100).iter().all(|a| a.elevation == 0.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = field(30.0, 100, 10.0, 2.0);
        assert_eq!(vmf_sample(&f, 7, 500), vmf_sample(&f, 7, 500));
        assert_ne!(vmf_sample(&f, 7, 500), vmf_sample(&f, 8, 500));
    }
}
