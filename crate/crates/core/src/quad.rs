//! Adaptive Gauss–Kronrod quadrature on finite intervals.
//!
//! Each panel is integrated with the 21-point Kronrod rule and its embedded
//! 10-point Gauss rule; the difference (rescaled as in QUADPACK) is the panel
//! error. The panel with the largest error is bisected until the summed error
//! meets the tolerance or the evaluation budget runs out. All Kronrod nodes
//! are interior, so the endpoints themselves are never evaluated.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::expr::{EvalError, Expr};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_460,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_958_109_831,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

/// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

const EVALS_PER_PANEL: usize = 21;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadError {
    #[error("invalid interval [{lo}, {hi}]: need finite lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("integrand fault at {at}: {source}")]
    Integrand { at: f64, source: EvalError },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    /// Additional tolerance relative to the L1 norm of the integrand; the
    /// effective tolerance is `max(abs_tol, rel_l1_tol * ∫|f|)`.
    pub rel_l1_tol: f64,
    pub max_evals: usize,
    /// Request a rule that never samples `lo` or `hi`. Both settings are
    /// served by the same interior-node rule.
    pub open_endpoints: bool,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_l1_tol: 0.0,
            max_evals: 10_000_000,
            open_endpoints: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Absolute error estimate, always non-negative.
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Estimate of ∫|f| over the interval.
    pub l1_norm: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn gauss_kronrod<F>(f: &mut F, lo: f64, hi: f64) -> Result<Panel, QuadError>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut eval = |x: f64| f(x).map_err(|source| QuadError::Integrand { at: x, source });

    let f_center = eval(center)?;
    let mut kronrod = WGK[10] * f_center;
    let mut gauss = 0.0;
    let mut abs = kronrod.abs();
    let mut f_minus = [0.0; 10];
    let mut f_plus = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        f_minus[j] = f1;
        f_plus[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((f_minus[j] - mean).abs() + (f_plus[j] - mean).abs());
    }

    let value = kronrod * half;
    let abs = abs * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs);
    }
    Ok(Panel {
        lo,
        hi,
        value,
        error,
        abs,
    })
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Sum {
    sum: f64,
    comp: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn get(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Integrate `f` over `[lo, hi]`.
///
/// Budget exhaustion is not an error: the result comes back with
/// `converged == false` and the smallest error estimate seen during the run
/// (together with its value), so a larger budget never reports a larger
/// error.
pub fn integrate<F>(mut f: F, lo: f64, hi: f64, opts: &QuadOptions) -> Result<QuadResult, QuadError>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(QuadError::InvalidInterval { lo, hi });
    }
    if !(opts.abs_tol > 0.0 && opts.abs_tol.is_finite()) {
        return Err(QuadError::InvalidTolerance(opts.abs_tol));
    }
    if !(opts.rel_l1_tol >= 0.0 && opts.rel_l1_tol.is_finite()) {
        return Err(QuadError::InvalidTolerance(opts.rel_l1_tol));
    }

    let first = gauss_kronrod(&mut f, lo, hi)?;
    let mut evaluations = EVALS_PER_PANEL;
    let mut value = Sum::default();
    let mut error = Sum::default();
    let mut l1 = Sum::default();
    value.add(first.value);
    error.add(first.error);
    l1.add(first.abs);

    let mut heap = BinaryHeap::new();
    heap.push(first);

    let mut best = (first.value, first.error);
    loop {
        let total_err = error.get().max(0.0);
        if total_err < best.1 {
            best = (value.get(), total_err);
        }
        let tol = opts.abs_tol.max(opts.rel_l1_tol * l1.get());
        if total_err <= tol {
            return Ok(QuadResult {
                value: value.get(),
                error_estimate: total_err,
                evaluations,
                converged: true,
                l1_norm: l1.get(),
                panels: heap.len(),
            });
        }
        if evaluations + 2 * EVALS_PER_PANEL > opts.max_evals {
            break;
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(worst.lo < mid && mid < worst.hi) {
            // panel cannot be split further in floating point
            heap.push(worst);
            break;
        }
        let left = gauss_kronrod(&mut f, worst.lo, mid)?;
        let right = gauss_kronrod(&mut f, mid, worst.hi)?;
        evaluations += 2 * EVALS_PER_PANEL;
        value.add(left.value);
        value.add(right.value);
        value.add(-worst.value);
        error.add(left.error);
        error.add(right.error);
        error.add(-worst.error);
        l1.add(left.abs);
        l1.add(right.abs);
        l1.add(-worst.abs);
        heap.push(left);
        heap.push(right);
    }
    Ok(QuadResult {
        value: best.0,
        error_estimate: best.1,
        evaluations,
        converged: false,
        l1_norm: l1.get(),
        panels: heap.len(),
    })
}

/// Integrate an expression of `var` over `[lo, hi]` to absolute tolerance.
pub fn integrate_proper(
    f: &Expr,
    var: &str,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    max_evals: usize,
    open_endpoints: bool,
) -> Result<QuadResult, QuadError> {
    let program = f
        .compile(&[var])
        .map_err(|source| QuadError::Integrand { at: lo, source })?;
    let opts = QuadOptions {
        abs_tol,
        rel_l1_tol: 0.0,
        max_evals,
        open_endpoints,
    };
    integrate(|x| program.eval1(x), lo, hi, &opts)
}
