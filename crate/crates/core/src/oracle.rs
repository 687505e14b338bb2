//! Independent verifiers: Monte-Carlo and adaptive-quadrature integration
//! against a scatterer field, deviation records, a closed-form-versus-Cartesian
//! geometry survey and the concentration-limit check.

use crate::cir::{self, DcMethod};
use crate::error::{Error, Result};
use crate::geometry::{
    self, AnglePair, EllipseGeometry, HeadlampLayout, Side, SphereGeometry, SubModel,
};
use crate::scatterfield::{vmf_pdf, vmf_sample, VmfField};
use crate::scenario_io::ScenarioConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

/// Floor applied to the oracle value when forming a relative deviation.
pub const REL_DEV_FLOOR: f64 = 1e-30;

/// One compared quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationRecord {
    pub quantity: String,
    pub paper_value: f64,
    pub oracle_value: f64,
    pub abs_dev: f64,
    pub rel_dev: f64,
    pub fingerprint: String,
}

impl DeviationRecord {
    pub fn new(quantity: impl Into<String>, paper_value: f64, oracle_value: f64, fingerprint: impl Into<String>) -> Self {
        let abs_dev = (paper_value - oracle_value).abs();
        Self {
            quantity: quantity.into(),
            paper_value,
            oracle_value,
            abs_dev,
            rel_dev: abs_dev / oracle_value.abs().max(REL_DEV_FLOOR),
            fingerprint: fingerprint.into(),
        }
    }

    /// One `key=value` line.
    pub fn to_line(&self) -> String {
        format!(
            "quantity={} paper={:.9e} oracle={:.9e} abs_dev={:.9e} rel_dev={:.9e} config={}",
            self.quantity, self.paper_value, self.oracle_value, self.abs_dev, self.rel_dev, self.fingerprint
        )
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Sample mean of `f` over draws from `field`.
pub fn mc_integrate<F: Fn(AnglePair) -> f64>(f: F, field: &VmfField, seed: u64, n: usize) -> Result<McEstimate> {
    if n < 1000 {
        return Err(Error::InvalidParameter(format!(
            "Monte-Carlo integration needs at least 1000 samples (got {n})"
        )));
    }
    let draws = vmf_sample(field, seed, n);
    // Welford accumulation keeps the variance stable for tiny integrands.
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, a) in draws.iter().enumerate() {
        let x = f(*a);
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let var = m2 / (n - 1) as f64;
    Ok(McEstimate { mean, std_error: (var / n as f64).sqrt(), samples: n })
}

/// Quadrature result with its estimated relative error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    pub achieved: f64,
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference from the embedded Gauss rule.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Interval {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Interval {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive 1-D Gauss-Kronrod over the given breakpoints.
/// Returns (value, absolute error estimate).
fn adaptive_1d<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], rel_tol: f64, max_intervals: usize) -> (f64, f64) {
    let mut heap = BinaryHeap::new();
    let (mut value, mut err) = (0.0, 0.0);
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            value += v;
            err += e;
            heap.push(Interval { a: w[0], b: w[1], value: v, err: e });
        }
    }
    while err > rel_tol * value.abs() && heap.len() < max_intervals {
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        value += v1 + v2 - worst.value;
        err += e1 + e2 - worst.err;
        heap.push(Interval { a: worst.a, b: m, value: v1, err: e1 });
        heap.push(Interval { a: m, b: worst.b, value: v2, err: e2 });
    }
    // Re-sum to shed accumulated cancellation error.
    let total: f64 = heap.iter().map(|i| i.value).sum();
    let total_err: f64 = heap.iter().map(|i| i.err).sum();
    (total, total_err)
}

/// Adaptive 2-D quadrature of `f · pdf` over the whole direction domain.
///
/// For a planar field `f` is evaluated at zero elevation while the weight
/// keeps its full elevation dependence, which integrates out to the azimuth
/// marginal.
pub fn quad_integrate<F: Fn(AnglePair) -> f64>(f: F, field: &VmfField, tol: f64) -> Result<QuadEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be > 0")));
    }
    let lim = FRAC_PI_2 - 1e-9;
    let m = field.mean;
    let mut beta_breaks = vec![-lim, lim];
    if m.elevation.abs() < lim {
        beta_breaks.insert(1, m.elevation);
    }
    let inner_tol = tol * 0.05;
    let mut inner_err_total = 0.0;
    let (value, outer_err) = adaptive_1d(
        |beta| {
            let (v, e) = adaptive_1d(
                |da| {
                    let alpha = geometry::wrap_azimuth(m.azimuth + da);
                    let at = AnglePair { azimuth: alpha, elevation: beta };
                    let eval_at = if field.planar { AnglePair { azimuth: alpha, elevation: 0.0 } } else { at };
                    let w = vmf_pdf(field, at);
                    if w == 0.0 {
                        0.0
                    } else {
                        f(eval_at) * w
                    }
                },
                &[-PI, -FRAC_PI_2, 0.0, FRAC_PI_2, PI],
                inner_tol,
                400,
            );
            inner_err_total += e * (PI / 30.0);
            v
        },
        &beta_breaks,
        tol * 0.5,
        400,
    );
    let achieved = if value != 0.0 { (outer_err + inner_err_total.min(outer_err.max(inner_err_total))) / value.abs() } else { 0.0 };
    let achieved = if value == 0.0 && outer_err == 0.0 { 0.0 } else { achieved };
    if achieved > tol {
        return Err(Error::NoConvergence { estimate: value, achieved });
    }
    Ok(QuadEstimate { value, achieved })
}

/// Adaptive 2-D quadrature of a plain function over a rectangle.
pub fn quad_rectangle<F: Fn(f64, f64) -> f64>(f: F, x: (f64, f64), y: (f64, f64), tol: f64) -> f64 {
    adaptive_1d(
        |yy| adaptive_1d(|xx| f(xx, yy), &[x.0, x.1], tol * 0.05, 400).0,
        &[y.0, y.1],
        tol * 0.5,
        400,
    )
    .0
}

/// Per-quantity statistics from a geometry survey.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantitySummary {
    pub quantity: String,
    pub draws: usize,
    pub deviating: usize,
    pub max_abs_dev: f64,
    pub mean_abs_dev: f64,
}

/// Result of comparing both geometry backends on random draws.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySurvey {
    pub sub_model: SubModel,
    pub summaries: Vec<QuantitySummary>,
    /// Individual out-of-tolerance comparisons.
    pub deviations: Vec<(usize, DeviationRecord)>,
    /// Draws where the closed-form expressions could not be evaluated.
    pub paper_failures: Vec<(usize, String)>,
}

impl GeometrySurvey {
    pub fn total_deviating(&self) -> usize {
        self.deviations.len() + self.paper_failures.len()
    }
}

/// Length tolerance (m) and angle tolerance (rad) used by the survey.
pub const GEOMETRY_TOLERANCE: f64 = 1e-9;

/// Draw admissible scatterer directions for a surface.
pub fn survey_draws(kind: SubModel, ell: &EllipseGeometry, sph: &SphereGeometry, seed: u64, n: usize) -> Vec<AnglePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let az = geometry::wrap_azimuth(rng.gen_range(-PI..PI));
        let el = rng.gen_range(-1.5..1.5);
        let a = AnglePair { azimuth: az, elevation: el };
        if geometry::forward_filter(kind, ell, sph, a) {
            out.push(a);
        }
    }
    out
}

/// Compare the closed-form expressions against the Cartesian reconstruction.
pub fn geometry_survey(
    kind: SubModel,
    ell: &EllipseGeometry,
    sph: &SphereGeometry,
    lay: &HeadlampLayout,
    seed: u64,
    n: usize,
) -> GeometrySurvey {
    let draws = survey_draws(kind, ell, sph, seed, n);
    let names = ["tx_leg_left", "tx_leg_right", "rx_leg", "total_left", "coupled_azimuth", "coupled_elevation"];
    let mut abs_sums = vec![0.0; names.len()];
    let mut maxes = vec![0.0f64; names.len()];
    let mut counts = vec![0usize; names.len()];
    let mut evaluated = 0usize;
    let mut deviations = Vec::new();
    let mut paper_failures = Vec::new();
    let fingerprint = format!(
        "a={:.6} b={:.6} rt={} rr={} dl={} dr={}",
        ell.a, ell.b, sph.radius_tx, sph.radius_rx, lay.delta_left, lay.delta_right
    );
    for (i, &a) in draws.iter().enumerate() {
        let oracle_l = geometry::cartesian_oracle_paths(kind, ell, sph, lay, Side::Left, a);
        let oracle_r = geometry::cartesian_oracle_paths(kind, ell, sph, lay, Side::Right, a);
        let oracle_c = geometry::cartesian_coupled_angle(kind, ell, sph, a);
        let paper = (|| -> Result<_> {
            let l = geometry::resolve_path(geometry::GeometryBackend::Paper, kind, ell, sph, lay, Side::Left, a)?;
            let r = geometry::resolve_path(geometry::GeometryBackend::Paper, kind, ell, sph, lay, Side::Right, a)?;
            Ok((l, r))
        })();
        let (Ok(ol), Ok(or), Ok(oc)) = (oracle_l, oracle_r, oracle_c) else {
            continue;
        };
        let (pl, pr) = match paper {
            Ok(v) => v,
            Err(e) => {
                paper_failures.push((i, e.to_string()));
                continue;
            }
        };
        evaluated += 1;
        let coupled_paper = if kind.indexed_by_departure() { pl.arrival } else { pl.departure };
        let pairs = [
            (pl.lengths.d_tx_to_scatterer, ol.d_tx_to_scatterer),
            (pr.lengths.d_tx_to_scatterer, or.d_tx_to_scatterer),
            (pl.lengths.d_scatterer_to_rx, ol.d_scatterer_to_rx),
            (pl.lengths.total, ol.total),
            (coupled_paper.azimuth, oc.azimuth),
            (coupled_paper.elevation, oc.elevation),
        ];
        for (q, (p, o)) in pairs.iter().enumerate() {
            let rec = DeviationRecord::new(format!("{}.{}", kind.label(), names[q]), *p, *o, fingerprint.clone());
            abs_sums[q] += rec.abs_dev;
            maxes[q] = maxes[q].max(rec.abs_dev);
            if !(rec.abs_dev <= GEOMETRY_TOLERANCE) {
                counts[q] += 1;
                deviations.push((i, rec));
            }
        }
    }
    let summaries = names
        .iter()
        .enumerate()
        .map(|(q, name)| QuantitySummary {
            quantity: format!("{}.{}", kind.label(), name),
            draws: evaluated,
            deviating: counts[q],
            max_abs_dev: maxes[q],
            mean_abs_dev: if evaluated > 0 { abs_sums[q] / evaluated as f64 } else { 0.0 },
        })
        .collect();
    GeometrySurvey { sub_model: kind, summaries, deviations, paper_failures }
}

/// Compare the SB DC gain at high concentration with the gain of a single
/// scatterer placed at each population's mean direction.
pub fn concentration_limit_check(
    sub_model: SubModel,
    scn: &ScenarioConfig,
    distance: f64,
    k_large: f64,
) -> Result<DeviationRecord> {
    let mut concentrated = scn.clone();
    for side in Side::BOTH {
        concentrated.vmf_fields.get_mut(sub_model, side).concentration = k_large;
    }
    let link = cir::Link::new(&concentrated)?;
    let dc = link.dc_gain_sb_at_distance(distance, Side::Left, sub_model, DcMethod::MevSum)?.value;
    let mut point = 0.0;
    for side in Side::BOTH {
        let field = concentrated.vmf_fields.get(sub_model, side);
        point += link.sb_integrand_at_distance(distance, Side::Left, sub_model, field.mean)?;
    }
    Ok(DeviationRecord::new(
        format!("concentration_limit.{}.k{}", sub_model.label(), k_large),
        dc,
        point,
        format!("d={distance} k={k_large}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnglePair;
    use approx::assert_relative_eq;

    fn field(k: f64) -> VmfField {
        VmfField::new(AnglePair::from_degrees(10.0, 2.0).unwrap(), k, 100, SubModel::TxSphere, Side::Left)
    }

    #[test]
    fn mc_constant_is_exact() {
        let e = mc_integrate(|_| 1.0, &field(30.0), 1, 10_000).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn mc_rejects_small_n() {
        assert!(mc_integrate(|_| 1.0, &field(3.0), 1, 999).is_err());
    }

    #[test]
    fn mc_cosine_isotropic() {
        let e = mc_integrate(|a| a.elevation.cos(), &field(0.0), 5, 200_000).unwrap();
        assert!((e.mean - PI / 4.0).abs() < 3.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn quadrature_normalisation() {
        for k in [0.0, 3.0, 10.0, 30.0] {
            let q = quad_integrate(|_| 1.0, &field(k), 1e-9).unwrap();
            assert_relative_eq!(q.value, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn quadrature_zero_integrand() {
        let q = quad_integrate(|_| 0.0, &field(30.0), 1e-6).unwrap();
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn deviation_record_floor() {
        let r = DeviationRecord::new("x", 1e-40, 0.0, "");
        assert_relative_eq!(r.rel_dev, 1e-10);
    }
}
