//! Pairwise Gaussian kernel sums over a batch of behaviors.
//!
//! `kernel_sums(bcs, h, w)[i] = sum_j phi_h(B_j - B_i) * w_j`, including `j == i`.
//!
//! The double loop visits each unordered pair once and accumulates into both
//! endpoints. Reductions use a fixed 8-lane layout so the result does not
//! depend on the SIMD width the loop is compiled for.

use crate::shaping::BcMatrix;

const LANES: usize = 8;

/// `exp(x)` for `x <= 0`, branch-free so the surrounding loop vectorizes.
///
/// Arguments below -700 are clamped; the result there (< 1e-304) is far below
/// the resolution of any kernel sum, which always contains the self term.
#[inline(always)]
fn exp_nonpositive(x: f64) -> f64 {
    const LOG2E: f64 = std::f64::consts::LOG2_E;
    const LN2_HI: f64 = 6.931_471_803_691_238_164_9e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    const SHIFTER: f64 = 6_755_399_441_055_744.0; // 1.5 * 2^52
    let x = if x < -700.0 { -700.0 } else { x };
    let t = x * LOG2E + SHIFTER;
    let k = t - SHIFTER;
    let ki = (t.to_bits() as i64).wrapping_sub(SHIFTER.to_bits() as i64);
    let r = (x - k * LN2_HI) - k * LN2_LO;
    // Taylor series of exp on |r| <= ln2/2; truncation error < 2e-16.
    let mut p = 1.0 / 479_001_600.0;
    p = p * r + 1.0 / 39_916_800.0;
    p = p * r + 1.0 / 3_628_800.0;
    p = p * r + 1.0 / 362_880.0;
    p = p * r + 1.0 / 40_320.0;
    p = p * r + 1.0 / 5_040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    let scale = f64::from_bits(((ki + 1023) as u64) << 52);
    p * scale
}

/// Kernel sums with per-point weights (`None` means all ones).
pub fn kernel_sums(bcs: &BcMatrix, bandwidth: f64, weights: Option<&[f64]>) -> Vec<f64> {
    let n = bcs.rows();
    let d = bcs.cols();
    let ones;
    let w = match weights {
        Some(w) => {
            assert_eq!(w.len(), n, "one weight per row");
            w
        }
        None => {
            ones = vec![1.0; n];
            &ones[..]
        }
    };
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|c| bcs.iter_rows().map(|r| r[c]).collect())
        .collect();
    let neg_inv_2h2 = -1.0 / (2.0 * bandwidth * bandwidth);
    let norm = (2.0 * std::f64::consts::PI * bandwidth * bandwidth).powf(-(d as f64) / 2.0);

    let mut acc = vec![0.0; n];
    dispatch(&cols, w, neg_inv_2h2, &mut acc);
    acc.iter_mut().for_each(|a| *a *= norm);
    acc
}

/// `p_hat_i = (1/n) sum_j phi_h(B_j - B_i)`.
pub fn densities(bcs: &BcMatrix, bandwidth: f64) -> Vec<f64> {
    let n = bcs.rows() as f64;
    let mut s = kernel_sums(bcs, bandwidth, None);
    s.iter_mut().for_each(|v| *v /= n);
    s
}

/// `-(1/n) sum_i log p_hat_i`.
pub fn entropy_estimate(bcs: &BcMatrix, bandwidth: f64) -> f64 {
    let p = densities(bcs, bandwidth);
    -p.iter().map(|v| v.ln()).sum::<f64>() / p.len() as f64
}

fn dispatch(cols: &[Vec<f64>], w: &[f64], c: f64, acc: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: the required CPU feature was detected at runtime.
            unsafe { pair_loop_avx512(cols, w, c, acc) };
            return;
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: as above.
            unsafe { pair_loop_avx2(cols, w, c, acc) };
            return;
        }
    }
    pair_loop(cols, w, c, acc);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn pair_loop_avx512(cols: &[Vec<f64>], w: &[f64], c: f64, acc: &mut [f64]) {
    pair_loop(cols, w, c, acc)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn pair_loop_avx2(cols: &[Vec<f64>], w: &[f64], c: f64, acc: &mut [f64]) {
    pair_loop(cols, w, c, acc)
}

/// Rows per tile.
const TILE_I: usize = 32;
/// Columns per tile; a multiple of `LANES`.
const TILE_J: usize = 512;

/// Visits pairs `i < j` tile by tile. For a fixed `j`, contributions arrive
/// in increasing `i`; row `i`'s own sum is split over lanes by `j % LANES`
/// and each lane accumulates in increasing `j`. Both orders are independent
/// of the vector width.
#[inline(always)]
fn pair_loop(cols: &[Vec<f64>], w: &[f64], c: f64, acc: &mut [f64]) {
    let n = w.len();
    let mut sq = [0.0f64; TILE_J];
    let mut k = [0.0f64; TILE_J];
    let mut lanes = [[0.0f64; LANES]; TILE_I];
    for ib in (0..n).step_by(TILE_I) {
        let iend = (ib + TILE_I).min(n);
        lanes.iter_mut().for_each(|l| *l = [0.0; LANES]);
        for jb in (ib..n).step_by(TILE_J) {
            let jend = (jb + TILE_J).min(n);
            for i in ib..iend {
                let js = jb.max(i + 1);
                if js >= jend {
                    continue;
                }
                let m = jend - js;
                let sq = &mut sq[..m];
                sq.iter_mut().for_each(|s| *s = 0.0);
                for col in cols {
                    let xi = col[i];
                    for (s, xj) in sq.iter_mut().zip(&col[js..jend]) {
                        let diff = xj - xi;
                        *s += diff * diff;
                    }
                }
                let k = &mut k[..m];
                for (kv, s) in k.iter_mut().zip(sq.iter()) {
                    *kv = exp_nonpositive(*s * c);
                }

                let wi = w[i];
                for (a, kv) in acc[js..jend].iter_mut().zip(k.iter()) {
                    *a += kv * wi;
                }

                let lane = &mut lanes[i - ib];
                let wt = &w[js..jend];
                let head = ((LANES - js % LANES) % LANES).min(m);
                for j in 0..head {
                    lane[(js + j) % LANES] += k[j] * wt[j];
                }
                let body = (m - head) / LANES * LANES;
                for (kc, wc) in k[head..head + body]
                    .chunks_exact(LANES)
                    .zip(wt[head..head + body].chunks_exact(LANES))
                {
                    for l in 0..LANES {
                        lane[l] += kc[l] * wc[l];
                    }
                }
                for j in head + body..m {
                    lane[(js + j) % LANES] += k[j] * wt[j];
                }
            }
        }
        for i in ib..iend {
            let mut row = w[i]; // self term: phi(0) * w_i before normalization
            for l in lanes[i - ib] {
                row += l;
            }
            acc[i] += row;
        }
    }
}
