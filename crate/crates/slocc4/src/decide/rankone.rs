//! Rank-one recovery inside a linear family of composite operators.
//!
//! Each stabilizer element reduces the witness hunt to one question: does
//! the commutant family contain a point whose composite operator realigns
//! to rank one? The family is a plain linear span, so instead of sampling
//! it blindly two engines attack the span itself:
//!
//! - [`kernel_rank_one`] relinearizes the 2x2 minors of the realigned span
//!   over the degree-two monomials of the parameters. An empty kernel
//!   proves there is no rank-one point at all, and a one-dimensional
//!   kernel pins the unique candidate ray; both statements are exact.
//!
//! - [`FloatFamily`] runs an alternating projection between the realigned
//!   span and the rank-one rays in floating point, and the limit is rounded
//!   entrywise back to Gaussian rationals. Guesses are unsound by nature;
//!   the caller re-verifies every candidate exactly, so a wrong round-trip
//!   only costs microseconds while a right one becomes a real witness.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exact::{ExactMatrix, Gaussian};

/// What the exact minor relinearization settled about a family.
pub enum KernelOutcome {
    /// Certified: no nonzero point of the span realigns to rank <= 1.
    NoRankOne,
    /// The unique candidate ray, up to scale.
    Point(Vec<Gaussian>),
    /// The relaxation kernel is too big to pin a single ray.
    Ambiguous,
}

/// Flat index of the unordered pair (a, b), a <= b, among all such pairs.
fn sym_index(w: usize, a: usize, b: usize) -> usize {
    a * (2 * w - a + 1) / 2 + (b - a)
}

/// Exact relinearization of every 2x2 minor of sum_a c_a * bases[a] as a
/// linear form on the products c_a * c_b, followed by a kernel analysis.
///
/// `max_rows` caps how many minors enter the system, spread evenly over the
/// grid. Any subset keeps the verdicts sound: an infeasible subset already
/// certifies the full system, and a one-dimensional subset kernel still
/// bounds the full kernel from above.
pub fn kernel_rank_one(bases: &[ExactMatrix], max_rows: usize) -> KernelOutcome {
    let w = bases.len();
    if w == 0 {
        return KernelOutcome::Ambiguous;
    }
    let (rows, cols) = (bases[0].rows, bases[0].cols);
    let s_dim = w * (w + 1) / 2;
    let mut tuples = Vec::new();
    for r1 in 0..rows {
        for r2 in (r1 + 1)..rows {
            for c1 in 0..cols {
                for c2 in (c1 + 1)..cols {
                    tuples.push((r1, r2, c1, c2));
                }
            }
        }
    }
    if tuples.is_empty() && w > 1 {
        return KernelOutcome::Ambiguous;
    }
    let take = tuples.len().min(max_rows);
    let mut sys = ExactMatrix::zeros(take, s_dim);
    for i in 0..take {
        let (r1, r2, c1, c2) = tuples[i * tuples.len() / take];
        let part = |p: &ExactMatrix, q: &ExactMatrix| {
            p.at(r1, c1) * q.at(r2, c2) - p.at(r1, c2) * q.at(r2, c1)
        };
        for a in 0..w {
            *sys.at_mut(i, sym_index(w, a, a)) = part(&bases[a], &bases[a]);
            for b in (a + 1)..w {
                *sys.at_mut(i, sym_index(w, a, b)) =
                    part(&bases[a], &bases[b]) + part(&bases[b], &bases[a]);
            }
        }
    }
    let null = sys.nullspace();
    match null.cols {
        0 => KernelOutcome::NoRankOne,
        1 => {
            // The kernel vector must be a symmetric square c (x) c; read the
            // ray off any nonzero row once rank one is confirmed.
            let mut y = ExactMatrix::zeros(w, w);
            for a in 0..w {
                for b in a..w {
                    let v = null.at(sym_index(w, a, b), 0).clone();
                    *y.at_mut(a, b) = v.clone();
                    *y.at_mut(b, a) = v;
                }
            }
            if y.rank() != 1 {
                return KernelOutcome::NoRankOne;
            }
            let row = (0..w)
                .find(|&r| (0..w).any(|c| !y.at(r, c).is_zero()))
                .expect("a rank-one matrix has a nonzero row");
            KernelOutcome::Point((0..w).map(|c| y.at(row, c).clone()).collect())
        }
        _ => KernelOutcome::Ambiguous,
    }
}

fn to_c64(g: &Gaussian) -> Option<Complex64> {
    let re = g.re.to_f64()?;
    let im = g.im.to_f64()?;
    if !re.is_finite() || !im.is_finite() {
        return None;
    }
    Some(Complex64::new(re, im))
}

/// Dense row-major complex matrix for the floating-point stages.
#[derive(Clone)]
pub(crate) struct FMat {
    pub rows: usize,
    pub cols: usize,
    pub d: Vec<Complex64>,
}

impl FMat {
    pub fn from_exact(m: &ExactMatrix) -> Option<FMat> {
        let mut d = Vec::with_capacity(m.rows * m.cols);
        for r in 0..m.rows {
            for c in 0..m.cols {
                d.push(to_c64(m.at(r, c))?);
            }
        }
        Some(FMat { rows: m.rows, cols: m.cols, d })
    }

    pub fn matmul(&self, o: &FMat) -> FMat {
        assert_eq!(self.cols, o.rows);
        let mut d = vec![Complex64::new(0.0, 0.0); self.rows * o.cols];
        for r in 0..self.rows {
            for k in 0..self.cols {
                let v = self.d[r * self.cols + k];
                if v.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..o.cols {
                    d[r * o.cols + c] += v * o.d[k * o.cols + c];
                }
            }
        }
        FMat { rows: self.rows, cols: o.cols, d }
    }

    pub fn transpose(&self) -> FMat {
        let mut d = vec![Complex64::new(0.0, 0.0); self.rows * self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                d[c * self.rows + r] = self.d[r * self.cols + c];
            }
        }
        FMat { rows: self.cols, cols: self.rows, d }
    }

    /// Same block shuffle as the exact realignment with square factors:
    /// out[i*m + j][c*n + r] = self[i*n + r][j*n + c] for an (mn)x(mn) input.
    pub fn realign_square(&self, m: usize, n: usize) -> FMat {
        assert_eq!(self.rows, m * n);
        assert_eq!(self.cols, m * n);
        let (rr, cc) = (m * m, n * n);
        let mut d = vec![Complex64::new(0.0, 0.0); rr * cc];
        for i in 0..m {
            for j in 0..m {
                for r in 0..n {
                    for c in 0..n {
                        d[(i * m + j) * cc + (c * n + r)] =
                            self.d[(i * n + r) * self.cols + (j * n + c)];
                    }
                }
            }
        }
        FMat { rows: rr, cols: cc, d }
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Effort knobs for the alternating projection.
#[derive(Clone, Copy)]
pub struct ProjectionEffort {
    pub restarts: usize,
    pub iters: usize,
    /// Abandon a run early once the residual clearly stalls; right for bulk
    /// scans over many candidate families, wrong for a last deep attempt.
    pub early_bail: bool,
}

/// Orthonormalized span of realigned family members, ready for projection.
pub(crate) struct FloatFamily {
    rows: usize,
    cols: usize,
    ortho: Vec<Vec<Complex64>>,
}

impl FloatFamily {
    pub fn new(mats: &[FMat]) -> Option<FloatFamily> {
        let (rows, cols) = (mats.first()?.rows, mats.first()?.cols);
        let mut ortho: Vec<Vec<Complex64>> = Vec::new();
        for m in mats {
            assert!(m.rows == rows && m.cols == cols);
            let nrm = norm(&m.d);
            if nrm < 1e-250 {
                continue;
            }
            let mut v: Vec<Complex64> = m.d.iter().map(|x| x / nrm).collect();
            // Twice-through modified Gram-Schmidt keeps the basis orthonormal
            // to working precision even for badly conditioned spans.
            for _ in 0..2 {
                for q in &ortho {
                    let c = inner(q, &v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let rem = norm(&v);
            if rem > 1e-9 {
                for vi in &mut v {
                    *vi /= rem;
                }
                ortho.push(v);
            }
        }
        if ortho.is_empty() {
            return None;
        }
        Some(FloatFamily { rows, cols, ortho })
    }

    fn project(&self, y: &[Complex64], out: &mut Vec<Complex64>) {
        out.clear();
        out.resize(y.len(), Complex64::new(0.0, 0.0));
        for q in &self.ortho {
            let c = inner(q, y);
            for (oi, qi) in out.iter_mut().zip(q) {
                *oi += c * qi;
            }
        }
    }

    /// Hunt for a rank-one ray in the span: alternate between the best
    /// rank-one approximation (power iteration) and the orthogonal
    /// projection back onto the span, renormalizing to dodge the origin.
    /// Returns (u, v) with the limit approximately u * v^T, unit Frobenius.
    pub fn rank_one_ray(
        &self,
        seed: u64,
        effort: ProjectionEffort,
    ) -> Option<(Vec<Complex64>, Vec<Complex64>)> {
        let (rs, cs) = (self.rows, self.cols);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = vec![Complex64::new(0.0, 0.0); rs * cs];
        let mut z = Vec::new();
        for _ in 0..effort.restarts {
            // Random unit start inside the span.
            z.clear();
            z.resize(rs * cs, Complex64::new(0.0, 0.0));
            for q in &self.ortho {
                let g = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                for (zi, qi) in z.iter_mut().zip(q) {
                    *zi += g * qi;
                }
            }
            let nz = norm(&z);
            if nz < 1e-200 {
                continue;
            }
            for zi in &mut z {
                *zi /= nz;
            }
            let mut v: Vec<Complex64> =
                (0..cs).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
            let nv = norm(&v);
            for vi in &mut v {
                *vi /= nv;
            }
            let mut u = vec![Complex64::new(0.0, 0.0); rs];
            for it in 0..effort.iters {
                let sigma = top_pair(&z, rs, cs, &mut u, &mut v, 2);
                if sigma < 1e-200 {
                    break;
                }
                // Best rank-one approximation u * (sigma * conj(v))^T.
                for r in 0..rs {
                    for c in 0..cs {
                        y[r * cs + c] = u[r] * (sigma * v[c].conj());
                    }
                }
                let mut back = Vec::new();
                self.project(&y, &mut back);
                let mut res = 0.0f64;
                for (bi, yi) in back.iter().zip(&y) {
                    res += (bi - yi).norm_sqr();
                }
                let res = res.sqrt() / sigma;
                if res < 5e-10 {
                    // Converged: polish the singular pair on the in-span point.
                    let sigma = top_pair(&back, rs, cs, &mut u, &mut v, 25);
                    if sigma < 1e-200 {
                        break;
                    }
                    let w: Vec<Complex64> = v.iter().map(|x| sigma * x.conj()).collect();
                    return Some((u, w));
                }
                if effort.early_bail
                    && ((it == 40 && res > 0.08) || (it == 96 && res > 4e-3))
                {
                    break;
                }
                let nb = norm(&back);
                if nb < 1e-13 {
                    break;
                }
                for (zi, bi) in z.iter_mut().zip(&back) {
                    *zi = bi / nb;
                }
            }
        }
        None
    }
}

/// A few rounds of power iteration on the matrix stored in `z`; `u`, `v`
/// are warm-started and left holding the top singular pair estimate.
fn top_pair(
    z: &[Complex64],
    rows: usize,
    cols: usize,
    u: &mut [Complex64],
    v: &mut Vec<Complex64>,
    rounds: usize,
) -> f64 {
    let mut sigma = 0.0;
    for _ in 0..rounds {
        // u <- normalize(Z v)
        for (r, ur) in u.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..cols {
                acc += z[r * cols + c] * v[c];
            }
            *ur = acc;
        }
        let nu = norm(u);
        if nu < 1e-250 {
            return 0.0;
        }
        for ur in u.iter_mut() {
            *ur /= nu;
        }
        // v <- normalize(Z^H u), sigma = |Z^H u|
        for (c, vc) in v.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..rows {
                acc += z[r * cols + c].conj() * u[r];
            }
            *vc = acc;
        }
        sigma = norm(v);
        if sigma < 1e-250 {
            return 0.0;
        }
        for vc in v.iter_mut() {
            *vc /= sigma;
        }
    }
    sigma
}

/// Best rational approximation with bounded denominator, by continued
/// fractions. None when the input is not finite or absurdly large.
pub fn best_rational(x: f64, max_den: i64) -> Option<(i64, i64)> {
    if !x.is_finite() || x.abs() > 1e15 {
        return None;
    }
    if x.abs() < 1e-9 {
        return Some((0, 1));
    }
    let neg = x < 0.0;
    let mut t = x.abs();
    let (mut p0, mut q0, mut p1, mut q1): (i128, i128, i128, i128) = (1, 0, t.floor() as i128, 1);
    t -= t.floor();
    for _ in 0..40 {
        if t < 1e-12 {
            break;
        }
        t = 1.0 / t;
        let a = t.floor();
        if a > 9e17 {
            break;
        }
        let ai = a as i128;
        let p2 = ai * p1 + p0;
        let q2 = ai * q1 + q0;
        if q2 > max_den as i128 || p2.abs() > (1 << 62) {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        t -= a;
    }
    let p = i64::try_from(if neg { -p1 } else { p1 }).ok()?;
    let q = i64::try_from(q1).ok()?;
    Some((p, q))
}

fn round_part(x: f64, max_den: i64, tol: f64) -> Option<BigRational> {
    let (p, q) = best_rational(x, max_den)?;
    if (p as f64 / q as f64 - x).abs() > tol {
        return None;
    }
    Some(BigRational::new(BigInt::from(p), BigInt::from(q)))
}

/// Entrywise rational rounding of the rank-one matrix u * v^T after scaling
/// its largest entry to exactly one. None when any entry refuses to sit
/// near a small rational, which is the usual fate of a wrong guess.
pub(crate) fn round_rank_one(
    u: &[Complex64],
    v: &[Complex64],
    max_den: i64,
    tol: f64,
) -> Option<ExactMatrix> {
    let rstar = (0..u.len()).max_by(|&a, &b| u[a].norm_sqr().total_cmp(&u[b].norm_sqr()))?;
    let cstar = (0..v.len()).max_by(|&a, &b| v[a].norm_sqr().total_cmp(&v[b].norm_sqr()))?;
    let pivot = u[rstar] * v[cstar];
    if pivot.norm_sqr() < 1e-24 {
        return None;
    }
    let mut out = ExactMatrix::zeros(u.len(), v.len());
    for r in 0..u.len() {
        for c in 0..v.len() {
            let z = u[r] * v[c] / pivot;
            let re = round_part(z.re, max_den, tol)?;
            let im = round_part(z.im, max_den, tol)?;
            *out.at_mut(r, c) = Gaussian::new(re, im);
        }
    }
    Some(out)
}
