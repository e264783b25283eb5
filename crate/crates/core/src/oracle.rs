//! Ground truth by exhaustive search: closest lattice point over a box of
//! integer coordinates, Voronoi-reduction checks and the quasi-VR defect.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cholesky_lower, dist2, Mat};
use crate::lattice::Lattice;

/// Squared distances closer than this are treated as ties.
pub const TIE_TOL: f64 = 1e-9;
/// Default cap on the number of candidate coordinate vectors.
pub const DEFAULT_BUDGET: u128 = 100_000_000;
/// Samples used by the margin-robustness self-check.
pub const MARGIN_CHECK_SAMPLES: u64 = 1000;

/// Margin used when none is given: 2 up to n = 6, 1 above.
pub fn default_margin(n: usize) -> i64 {
    if n <= 6 {
        2
    } else {
        1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvpResult {
    pub z: Vec<i64>,
    pub point: Vec<f64>,
    pub dist2: f64,
    pub tie: bool,
}

impl CvpResult {
    pub fn is_corner(&self) -> bool {
        self.z.iter().all(|&x| x == 0 || x == 1)
    }
}

/// Exact closest point over `z ∈ {−margin, …, margin+1}ⁿ`.
///
/// The search walks the box coordinate by coordinate in the Cholesky frame
/// and abandons a branch once its partial distance already exceeds the best
/// complete candidate (plus the tie tolerance), so the result is the same as
/// scanning every candidate. Among candidates within `TIE_TOL` of the
/// minimum the lexicographically smallest `z` wins.
pub struct BruteForce<'a> {
    lattice: &'a Lattice,
    chol: Mat,
    margin: i64,
}

impl<'a> BruteForce<'a> {
    pub fn new(lattice: &'a Lattice, margin: i64) -> Result<Self> {
        Self::with_budget(lattice, margin, DEFAULT_BUDGET)
    }

    pub fn with_budget(lattice: &'a Lattice, margin: i64, budget: u128) -> Result<Self> {
        if margin < 1 {
            return Err(Error::InvalidMargin);
        }
        let width = (2 * margin + 2) as u128;
        let candidates = width.checked_pow(lattice.n() as u32).unwrap_or(u128::MAX);
        if candidates > budget {
            return Err(Error::BudgetExceeded { candidates, budget });
        }
        let chol = cholesky_lower(lattice.gram())?;
        Ok(BruteForce { lattice, chol, margin })
    }

    pub fn margin(&self) -> i64 {
        self.margin
    }

    pub fn closest(&self, y: &[f64]) -> Result<CvpResult> {
        let n = self.lattice.n();
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: y.len() });
        }
        // Coordinates of y in the frame where the basis is `chol`:
        // chol · tᵀ = G · yᵀ.
        let w = self.lattice.generator().mul_vec(y)?;
        let mut t = vec![0.0; n];
        for i in 0..n {
            let s: f64 = (0..i).map(|k| self.chol[(i, k)] * t[k]).sum();
            t[i] = (w[i] - s) / self.chol[(i, i)];
        }

        let mut search = Search {
            chol: &self.chol,
            target: &t,
            lo: -self.margin,
            hi: self.margin + 1,
            z: vec![0; n],
            best: f64::INFINITY,
            near: Vec::new(),
        };
        let acc = vec![0.0; n];
        search.descend(n, &acc, 0.0);

        let dmin = search.near.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let mut tied: Vec<&Vec<i64>> =
            search.near.iter().filter(|c| c.1 <= dmin + TIE_TOL).map(|c| &c.0).collect();
        tied.sort();
        let z = tied[0].clone();
        let point = self.lattice.point(&z);
        Ok(CvpResult { dist2: dist2(y, &point), point, z, tie: tied.len() > 1 })
    }
}

struct Search<'s> {
    chol: &'s Mat,
    target: &'s [f64],
    lo: i64,
    hi: i64,
    z: Vec<i64>,
    best: f64,
    near: Vec<(Vec<i64>, f64)>,
}

impl Search<'_> {
    /// `level` coordinates `z[level..]` are fixed; `acc[c]` holds
    /// `Σ_{i ≥ level} z_i · chol[i][c]` and `partial` the distance already
    /// accumulated on columns `≥ level`.
    fn descend(&mut self, level: usize, acc: &[f64], partial: f64) {
        if level == 0 {
            if partial < self.best {
                self.best = partial;
                let cut = self.best + TIE_TOL;
                self.near.retain(|c| c.1 <= cut);
            }
            self.near.push((self.z.clone(), partial));
            return;
        }
        let k = level - 1;
        let mut next = acc.to_vec();
        for v in self.lo..=self.hi {
            let vf = v as f64;
            let diff = self.target[k] - acc[k] - vf * self.chol[(k, k)];
            let d = partial + diff * diff;
            if d > self.best + TIE_TOL {
                continue;
            }
            for c in 0..k {
                next[c] = acc[c] + vf * self.chol[(k, c)];
            }
            self.z[k] = v;
            self.descend(k, &next, d);
        }
    }
}

/// Closest lattice point to `y` searching `z ∈ {−margin, …, margin+1}ⁿ`.
pub fn cvp_bruteforce(lattice: &Lattice, y: &[f64], margin: i64) -> Result<CvpResult> {
    BruteForce::new(lattice, margin)?.closest(y)
}

/// Number of samples (out of `samples`) whose decoded `z` changes between
/// two margins. Ties are skipped.
pub fn margin_mismatches(
    lattice: &Lattice,
    samples: u64,
    seed: u64,
    margin_a: i64,
    margin_b: i64,
) -> Result<u64> {
    let a = BruteForce::new(lattice, margin_a)?;
    let b = BruteForce::new(lattice, margin_b)?;
    let sampler = lattice.sampler(seed);
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let y = sampler.point(i);
            let (ra, rb) = (a.closest(&y)?, b.closest(&y)?);
            Ok(u64::from(!ra.tie && !rb.tie && ra.z != rb.z))
        })
        .sum()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VrReport {
    pub version: u32,
    pub n: usize,
    pub samples: u64,
    pub violations: u64,
    pub ties: u64,
    pub defect: f64,
    pub ci95: f64,
    pub seed: u64,
    pub margin: i64,
    /// Violating sample where the closest corner loses by the widest margin.
    pub worst_point: Option<Vec<f64>>,
    pub worst_gap: f64,
    pub margin_check_samples: u64,
    pub margin_check_mismatches: u64,
}

/// Wilson score interval at 95%: returns `(estimate, half_width)`.
///
/// `NaN` estimate with zero width when there are no samples.
pub fn wilson95(hits: u64, total: u64) -> (f64, f64) {
    if total == 0 {
        return (f64::NAN, 0.0);
    }
    let z = 1.959_963_984_540_054;
    let n = total as f64;
    let p = hits as f64 / n;
    let denom = 1.0 + z * z / n;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    (p, half)
}

/// Decode `samples` uniform points of `P(B)` and count those whose closest
/// lattice point is not one of the `2ⁿ` corners. Ties are excused.
pub fn verify_vr(lattice: &Lattice, samples: u64, seed: u64) -> Result<VrReport> {
    verify_vr_with_margin(lattice, samples, seed, default_margin(lattice.n()))
}

pub fn verify_vr_with_margin(
    lattice: &Lattice,
    samples: u64,
    seed: u64,
    margin: i64,
) -> Result<VrReport> {
    let oracle = BruteForce::new(lattice, margin)?;
    let corners = lattice.corners()?;
    let sampler = lattice.sampler(seed);

    struct Acc {
        violations: u64,
        ties: u64,
        worst: Option<(f64, u64)>,
    }
    let merge = |a: Acc, b: Acc| Acc {
        violations: a.violations + b.violations,
        ties: a.ties + b.ties,
        worst: match (a.worst, b.worst) {
            (Some(x), Some(y)) => Some(if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x }),
            (x, y) => x.or(y),
        },
    };
    let acc = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<Acc> {
            let y = sampler.point(i);
            let r = oracle.closest(&y)?;
            if r.tie {
                return Ok(Acc { violations: 0, ties: 1, worst: None });
            }
            if r.is_corner() {
                return Ok(Acc { violations: 0, ties: 0, worst: None });
            }
            let corner_best = corners.iter().map(|c| dist2(&y, &c.point)).fold(f64::INFINITY, f64::min);
            Ok(Acc { violations: 1, ties: 0, worst: Some((corner_best - r.dist2, i)) })
        })
        .try_reduce(|| Acc { violations: 0, ties: 0, worst: None }, |a, b| Ok(merge(a, b)))?;

    let check_samples = samples.min(MARGIN_CHECK_SAMPLES);
    let mismatches = margin_mismatches(lattice, check_samples, seed, margin, margin + 1)?;
    let (defect, ci95) = wilson95(acc.violations, samples);
    Ok(VrReport {
        version: crate::REPORT_VERSION,
        n: lattice.n(),
        samples,
        violations: acc.violations,
        ties: acc.ties,
        defect,
        ci95,
        seed,
        margin,
        worst_point: acc.worst.map(|(_, i)| sampler.point(i)),
        worst_gap: acc.worst.map_or(0.0, |w| w.0),
        margin_check_samples: check_samples,
        margin_check_mismatches: mismatches,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectEstimate {
    pub defect: f64,
    pub ci95: f64,
}

/// Monte-Carlo volume fraction of `P(B)` not covered by corner Voronoi cells.
pub fn vr_defect_estimate(lattice: &Lattice, samples: u64, seed: u64) -> Result<DefectEstimate> {
    let r = verify_vr(lattice, samples, seed)?;
    Ok(DefectEstimate { defect: r.defect, ci95: r.ci95 })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain scan of every candidate in the box.
    fn exhaustive(l: &Lattice, y: &[f64], margin: i64) -> (Vec<i64>, f64, bool) {
        let n = l.n();
        let mut z = vec![-margin; n];
        let mut all = Vec::new();
        loop {
            all.push((z.clone(), dist2(y, &l.point(&z))));
            let mut k = 0;
            loop {
                if k == n {
                    let dmin = all.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
                    let mut tied: Vec<_> = all.iter().filter(|c| c.1 <= dmin + TIE_TOL).collect();
                    tied.sort_by(|a, b| a.0.cmp(&b.0));
                    return (tied[0].0.clone(), dmin, tied.len() > 1);
                }
                z[k] += 1;
                if z[k] <= margin + 1 {
                    break;
                }
                z[k] = -margin;
                k += 1;
            }
        }
    }

    #[test]
    fn lattice_point_is_its_own_closest() {
        let l = Lattice::an(3).unwrap();
        let r = cvp_bruteforce(&l, l.basis(0), 2).unwrap();
        assert_eq!(r.z, vec![1, 0, 0]);
        assert!(r.dist2 < 1e-20);
        assert!(!r.tie);
    }

    #[test]
    fn midpoint_is_a_tie() {
        let l = Lattice::an(2).unwrap();
        let y: Vec<f64> = l.basis(0).iter().map(|x| x / 2.0).collect();
        let r = cvp_bruteforce(&l, &y, 2).unwrap();
        assert!(r.tie);
        assert_eq!(r.z, vec![0, 0]);
    }

    #[test]
    fn pruned_search_matches_exhaustive_scan() {
        for n in 2..=4 {
            let l = Lattice::an(n).unwrap();
            let bf = BruteForce::new(&l, 2).unwrap();
            let s = l.sampler(77);
            for i in 0..300 {
                let y: Vec<f64> = s.point(i).iter().map(|x| 1.3 * x - 0.4).collect();
                let r = bf.closest(&y).unwrap();
                let (z, d, tie) = exhaustive(&l, &y, 2);
                assert_eq!(r.z, z);
                assert_eq!(r.tie, tie);
                assert!((r.dist2 - d).abs() < 1e-9);
            }
        }
        let skew = Lattice::from_generator(&Mat::from_rows(&[[1.0, 0.0], [-2.0, 5.0]]).unwrap()).unwrap();
        let bf = BruteForce::new(&skew, 2).unwrap();
        for i in 0..300 {
            let y = skew.sampler(3).point(i);
            assert_eq!(bf.closest(&y).unwrap().z, exhaustive(&skew, &y, 2).0);
        }
    }

    #[test]
    fn margin_robustness() {
        for n in 2..=6 {
            let l = Lattice::an(n).unwrap();
            assert_eq!(margin_mismatches(&l, 1000, 11, 2, 3).unwrap(), 0, "n={n}");
        }
    }

    #[test]
    fn beats_every_corner() {
        let l = Lattice::an(5).unwrap();
        let corners = l.corners().unwrap();
        let bf = BruteForce::new(&l, 2).unwrap();
        for i in 0..200 {
            let y = l.sampler(1).point(i);
            let r = bf.closest(&y).unwrap();
            assert!(corners.iter().all(|c| r.dist2 <= dist2(&y, &c.point) + 1e-12));
        }
    }

    #[test]
    fn translation_covariance() {
        let l = Lattice::an(4).unwrap();
        let bf = BruteForce::new(&l, 2).unwrap();
        let shift = [1i64, -1, 0, 1];
        let v = l.point(&shift);
        for i in 0..200 {
            let y = l.sampler(8).point(i);
            let r = bf.closest(&y).unwrap();
            let moved: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a + b).collect();
            let rm = bf.closest(&moved).unwrap();
            if !r.tie {
                let expect: Vec<i64> = r.z.iter().zip(&shift).map(|(a, b)| a + b).collect();
                assert_eq!(rm.z, expect);
            }
        }
    }

    #[test]
    fn budget_and_margin_errors() {
        let l = Lattice::an(8).unwrap();
        assert!(matches!(BruteForce::with_budget(&l, 2, 1000), Err(Error::BudgetExceeded { .. })));
        assert!(matches!(BruteForce::new(&l, 0), Err(Error::InvalidMargin)));
    }

    #[test]
    fn vr_small() {
        let r = verify_vr(&Lattice::an(3).unwrap(), 20_000, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.margin_check_mismatches, 0);
        let sq = Lattice::from_generator(&Mat::from_rows(&[[2.0, 0.0], [0.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(verify_vr(&sq, 20_000, 1).unwrap().violations, 0);
    }

    #[test]
    fn skewed_basis_has_positive_defect() {
        let skew = Lattice::from_generator(&Mat::from_rows(&[[1.0, 0.0], [-2.0, 5.0]]).unwrap()).unwrap();
        let est = vr_defect_estimate(&skew, 20_000, 2).unwrap();
        assert!(est.defect - est.ci95 > 0.0, "{est:?}");
        let r = verify_vr(&skew, 2000, 2).unwrap();
        assert!(r.worst_point.is_some() && r.worst_gap > 0.0);
    }

    #[test]
    fn zero_samples() {
        let est = vr_defect_estimate(&Lattice::an(2).unwrap(), 0, 0).unwrap();
        assert!(est.defect.is_nan());
        assert_eq!(est.ci95, 0.0);
    }

    #[test]
    fn wilson_zero_hits() {
        let (p, h) = wilson95(0, 100_000);
        assert_eq!(p, 0.0);
        // z²/(2N) / (1 + z²/N) for p = 0
        let z2 = 1.959_963_984_540_054f64.powi(2);
        assert!((h - (z2 / 2e5) / (1.0 + z2 / 1e5)).abs() < 1e-15);
    }
}
