//! Random number transforms.
//!
//! The crate draws raw 64-bit words from `ChaCha8Rng` (seedable, with
//! independent streams for parallel replications) and converts them here:
//! uniforms by bit shifting, standard normals by the Wichura rational
//! approximation of the normal quantile, Poisson counts by the exact
//! log-space product method with a rounded-normal fallback for very large
//! means. Keeping the transforms in one place makes every sampled path a
//! pure function of `(seed, stream)` regardless of platform or library
//! version.

use rand_chacha::rand_core::RngCore;

use crate::constants::POISSON_EXACT_MAX_MEAN;

/// Uniform draw on the open interval (0, 1).
///
/// Uses the top 53 bits of one 64-bit word, shifted to bin midpoints so the
/// endpoints 0 and 1 are unattainable (the normal quantile would map them
/// to infinity).
#[inline]
pub fn uniform01(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw via the inverse CDF.
#[inline]
pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    normal_quantile(uniform01(rng))
}

/// Wichura's AS 241 (PPND16) rational approximation of the standard normal
/// quantile, accurate to about 1e-16 relative error over (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1), got {p}");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        // Central region: rational in r = 0.180625 - q^2.
        let r = 0.180625 - q * q;
        let num = ((((((2.509_080_928_730_122_6e3 * r + 3.343_057_558_358_812_8e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946_1e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((5.226_495_278_852_545_5e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return q * num / den;
    }
    // Tail regions: rational in r = sqrt(-ln(min(p, 1-p))).
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_6;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_758_8)
            * r
            + 1.0;
        num / den
    } else {
        let r = r - 5.0;
        let num = ((((((2.010_334_399_292_288e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_3e-2)
            * r
            + 2.965_605_718_285_048_9e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_445_9e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Standard normal CDF, Abramowitz & Stegun 26.2.17 polynomial
/// approximation (absolute error below 7.5e-8). Plenty for
/// Kolmogorov-Smirnov distances compared at the 1e-2 scale.
pub fn normal_cdf(x: f64) -> f64 {
    let ax = x.abs();
    let t = 1.0 / (1.0 + 0.231_641_9 * ax);
    let poly = t
        * (0.319_381_530
            + t * (-0.356_563_782 + t * (1.781_477_937 + t * (-1.821_255_978 + t * 1.330_274_429))));
    let pdf = (-0.5 * ax * ax).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let upper = pdf * poly;
    if x >= 0.0 {
        1.0 - upper
    } else {
        upper
    }
}

/// Poisson draw with the given mean, returned as a float count.
///
/// Means up to [`POISSON_EXACT_MAX_MEAN`] use the exact log-space variant of
/// Knuth's product method (sum of exponential gaps versus the mean). Larger
/// means switch to a rounded normal approximation, which is accurate to far
/// below the sampling noise at that scale and avoids O(mean) work per draw.
pub fn poisson(rng: &mut impl RngCore, mean: f64) -> f64 {
    debug_assert!(mean >= 0.0 && mean.is_finite(), "poisson mean {mean}");
    if mean == 0.0 {
        return 0.0;
    }
    if mean <= POISSON_EXACT_MAX_MEAN {
        // Count exponential arrivals until their sum exceeds the mean.
        let mut acc = 0.0_f64;
        let mut count = 0.0_f64;
        loop {
            acc -= uniform01(rng).ln();
            if acc >= mean {
                return count;
            }
            count += 1.0;
        }
    }
    let draw = mean + mean.sqrt() * standard_normal(rng);
    draw.round().max(0.0)
}
