//! Blocked Householder QR with an explicitly formed thin `Q`.
//!
//! Panels of `PANEL` columns are factored with unblocked reflectors; the
//! accumulated block reflector `I - V·T·Vᵀ` is then applied to the trailing
//! columns (and, in reverse order, to form `Q`) with cache-blocked kernels.

use crate::dense::blas::{dot, norm2};
use crate::dense::tiles::{nn_tile_sub, pack_rows, tn_tile, MR};
use crate::dense::{solve_upper_triangular, DenseMatrix};
use crate::error::{LinalgError, Result};
use crate::scalar::Scalar;

const PANEL: usize = 32;
const ROW_BLOCK: usize = 512;

/// Thin QR factors `A = Q·R` of a tall matrix.
///
/// `q` is `m×n` with orthonormal columns and `r` is `n×n` upper triangular
/// with a nonnegative (and, after a successful factorization, positive)
/// diagonal.
#[derive(Debug, Clone)]
pub struct QrFactors<T> {
    pub q: DenseMatrix<T>,
    pub r: DenseMatrix<T>,
}

impl<T: Scalar> QrFactors<T> {
    /// Least squares solution `R⁻¹·Qᵀ·B` for every column of `b`.
    pub fn solve_least_squares(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let qtb = crate::dense::mat_mul(&self.q, b, true)?;
        solve_upper_triangular(&self.r, &qtb, false)
    }

    /// `(AᵀA)⁻¹·C = R⁻¹·R⁻ᵀ·C` via two triangular solves.
    pub fn solve_normal(&self, c: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let y = solve_upper_triangular(&self.r, c, true)?;
        solve_upper_triangular(&self.r, &y, false)
    }
}

/// Default threshold below which `|R_ii|` marks a rank drop:
/// `m·ε·max_j |R_jj|`.
pub fn default_rank_tol<T: Scalar>(rows: usize) -> T {
    T::from_usize_lossy(rows) * T::epsilon()
}

/// Thin QR with the default rank tolerance.
pub fn qr_thin<T: Scalar>(a: &DenseMatrix<T>) -> Result<QrFactors<T>> {
    qr_thin_with_tol(a, default_rank_tol::<T>(a.rows()))
}

/// Thin QR; fails with [`LinalgError::RankDeficient`] when some
/// `|R_ii| <= rank_tol·max_j |R_jj|`.
pub fn qr_thin_with_tol<T: Scalar>(a: &DenseMatrix<T>, rank_tol: T) -> Result<QrFactors<T>> {
    let (m, n) = a.shape();
    if m < n || n == 0 {
        return Err(LinalgError::dims(
            "qr_thin",
            "a tall matrix with m >= n >= 1",
            format!("{m}x{n}"),
        ));
    }
    let mut work = a.clone();
    let mut taus = vec![T::zero(); n];
    let mut t_blocks: Vec<DenseMatrix<T>> = Vec::with_capacity(n.div_ceil(PANEL));

    let mut k0 = 0;
    while k0 < n {
        let kb = PANEL.min(n - k0);
        factor_panel(&mut work, k0, kb, &mut taus);
        let v = panel_reflectors(&work, k0, kb);
        let t = block_t(&v, &taus[k0..k0 + kb]);
        if k0 + kb < n {
            apply_block_reflector(&v, &t, true, &mut work, k0, k0 + kb, n);
        }
        t_blocks.push(t);
        k0 += kb;
    }

    let mut r = DenseMatrix::zeros(n, n);
    for j in 0..n {
        r.col_mut(j)[..=j].copy_from_slice(&work.col(j)[..=j]);
    }
    let max_diag = (0..n).fold(T::zero(), |acc, i| acc.max(r[(i, i)].abs()));
    let tol = rank_tol * max_diag;
    for i in 0..n {
        let d = r[(i, i)].abs();
        if d <= tol || d == T::zero() {
            return Err(LinalgError::RankDeficient {
                index: i,
                diag: d.to_f64().unwrap_or(f64::NAN),
                tol: tol.to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    // Q = H_0 ⋯ H_{n-1} [I_n; 0], accumulated from the last panel backwards.
    let mut q = DenseMatrix::zeros(m, n);
    for i in 0..n {
        q[(i, i)] = T::one();
    }
    for (p, t) in t_blocks.iter().enumerate().rev() {
        let k0 = p * PANEL;
        let kb = t.rows();
        let v = panel_reflectors(&work, k0, kb);
        apply_block_reflector(&v, t, false, &mut q, k0, k0, n);
    }

    for i in 0..n {
        if r[(i, i)] < T::zero() {
            for j in i..n {
                r[(i, j)] = -r[(i, j)];
            }
            for x in q.col_mut(i) {
                *x = -*x;
            }
        }
    }
    Ok(QrFactors { q, r })
}

/// Unblocked Householder factorization of columns `k0..k0+kb`, rows `k0..m`.
/// Reflector `j` is stored below the diagonal of column `j` with an implicit
/// unit leading entry; `R_jj` is stored on the diagonal.
fn factor_panel<T: Scalar>(work: &mut DenseMatrix<T>, k0: usize, kb: usize, taus: &mut [T]) {
    let m = work.rows();
    for j in k0..k0 + kb {
        let (tau, _beta) = make_reflector(&mut work.col_mut(j)[j..]);
        taus[j] = tau;
        if tau == T::zero() {
            continue;
        }
        let (head, tail) = work.as_mut_slice().split_at_mut((j + 1) * m);
        let v = &head[j * m + j..j * m + m];
        for c in 0..(k0 + kb - j - 1) {
            let col = &mut tail[c * m + j..c * m + m];
            let s = col[0] + dot(&v[1..], &col[1..]);
            let ts = tau * s;
            col[0] -= ts;
            for (x, &vi) in col[1..].iter_mut().zip(&v[1..]) {
                *x -= ts * vi;
            }
        }
    }
}

/// Overwrites `x` with `[β, v₁..]` such that `(I - τ·v·vᵀ)x = β·e₁` with
/// `v₀ = 1`. Returns `(τ, β)`; `τ = 0` means the reflector is the identity.
fn make_reflector<T: Scalar>(x: &mut [T]) -> (T, T) {
    let alpha = x[0];
    let xnorm = norm2(&x[1..]);
    if xnorm == T::zero() {
        return (T::zero(), alpha);
    }
    let mut beta = alpha.hypot(xnorm);
    if alpha >= T::zero() {
        beta = -beta;
    }
    let tau = (beta - alpha) / beta;
    let scale = T::one() / (alpha - beta);
    for v in &mut x[1..] {
        *v *= scale;
    }
    x[0] = beta;
    (tau, beta)
}

/// Explicit `(m-k0)×kb` reflector block with unit diagonal and zeros above.
fn panel_reflectors<T: Scalar>(work: &DenseMatrix<T>, k0: usize, kb: usize) -> DenseMatrix<T> {
    let len = work.rows() - k0;
    let mut v = DenseMatrix::zeros(len, kb);
    for i in 0..kb {
        let src = &work.col(k0 + i)[k0 + i + 1..];
        let dst = v.col_mut(i);
        dst[i] = T::one();
        dst[i + 1..].copy_from_slice(src);
    }
    v
}

/// Upper triangular `T` with `H_0 ⋯ H_{kb-1} = I - V·T·Vᵀ`.
fn block_t<T: Scalar>(v: &DenseMatrix<T>, taus: &[T]) -> DenseMatrix<T> {
    let kb = taus.len();
    let mut t = DenseMatrix::zeros(kb, kb);
    let mut tmp = vec![T::zero(); kb];
    for i in 0..kb {
        let tau = taus[i];
        t[(i, i)] = tau;
        if i == 0 {
            continue;
        }
        // v_j is zero above row j, so rows i.. suffice for the inner products.
        for (j, tj) in tmp.iter_mut().enumerate().take(i) {
            *tj = -tau * dot(&v.col(j)[i..], &v.col(i)[i..]);
        }
        for row in 0..i {
            let mut s = T::zero();
            for j in row..i {
                s += t[(row, j)] * tmp[j];
            }
            t[(row, i)] = s;
        }
    }
    t
}

/// `C ← (I - V·Tᵀ·Vᵀ)·C` when `transpose_t`, else `C ← (I - V·T·Vᵀ)·C`, where
/// `C` is rows `k0..m`, columns `c0..c1` of `target`.
fn apply_block_reflector<T: Scalar>(
    v: &DenseMatrix<T>,
    t: &DenseMatrix<T>,
    transpose_t: bool,
    target: &mut DenseMatrix<T>,
    k0: usize,
    c0: usize,
    c1: usize,
) {
    let m = target.rows();
    let len = m - k0;
    let kb = v.cols();
    let nc = c1 - c0;
    debug_assert_eq!(v.rows(), len);
    let data = target.as_mut_slice();

    // W = Vᵀ C, accumulated over row blocks so a slab of V stays in cache.
    let mut w = DenseMatrix::zeros(kb, nc);
    let mut r0 = 0;
    while r0 < len {
        let r1 = (r0 + ROW_BLOCK).min(len);
        let ccol = |c: usize| &data[(c0 + c) * m + k0 + r0..(c0 + c) * m + k0 + r1];
        let vcol = |i: usize| &v.col(i)[r0..r1];
        let mut c = 0;
        while c < nc {
            let step = if c + 4 <= nc { 4 } else { 1 };
            let mut i = 0;
            while i < kb {
                let istep = if i + 4 <= kb { 4 } else { 1 };
                match (istep, step) {
                    (4, 4) => {
                        let d = tn_tile::<T, 4, 4>(
                            [vcol(i), vcol(i + 1), vcol(i + 2), vcol(i + 3)],
                            [ccol(c), ccol(c + 1), ccol(c + 2), ccol(c + 3)],
                        );
                        for (di, row) in d.iter().enumerate() {
                            for (dj, &x) in row.iter().enumerate() {
                                w[(i + di, c + dj)] += x;
                            }
                        }
                    }
                    (4, _) => {
                        let d = tn_tile::<T, 4, 1>(
                            [vcol(i), vcol(i + 1), vcol(i + 2), vcol(i + 3)],
                            [ccol(c)],
                        );
                        for (di, row) in d.iter().enumerate() {
                            w[(i + di, c)] += row[0];
                        }
                    }
                    (_, 4) => {
                        let d = tn_tile::<T, 1, 4>(
                            [vcol(i)],
                            [ccol(c), ccol(c + 1), ccol(c + 2), ccol(c + 3)],
                        );
                        for (dj, &x) in d[0].iter().enumerate() {
                            w[(i, c + dj)] += x;
                        }
                    }
                    _ => {
                        w[(i, c)] += tn_tile::<T, 1, 1>([vcol(i)], [ccol(c)])[0][0];
                    }
                }
                i += istep;
            }
            c += step;
        }
        r0 = r1;
    }

    // W ← op(T)·W, T upper triangular.
    let mut tw = DenseMatrix::zeros(kb, nc);
    for c in 0..nc {
        let wc = w.col(c);
        let out = tw.col_mut(c);
        for (row, o) in out.iter_mut().enumerate() {
            let mut s = T::zero();
            if transpose_t {
                for j in 0..=row {
                    s += t[(j, row)] * wc[j];
                }
            } else {
                for j in row..kb {
                    s += t[(row, j)] * wc[j];
                }
            }
            *o = s;
        }
    }

    // C −= V·W over packed row groups.
    let mut packed = Vec::new();
    let mut r0 = 0;
    while r0 < len {
        let r1 = (r0 + ROW_BLOCK).min(len);
        pack_rows(v.as_slice(), len, kb, r0, r1, &mut packed);
        let groups = (r1 - r0).div_ceil(MR);
        let mut c = 0;
        while c < nc {
            let step = if c + 4 <= nc { 4 } else { 1 };
            let region = &mut data[(c0 + c) * m..(c0 + c + step) * m];
            for g in 0..groups {
                let gr0 = k0 + r0 + g * MR;
                let gr1 = (gr0 + MR).min(k0 + r1);
                let pg = &packed[g * kb * MR..(g + 1) * kb * MR];
                if step == 4 {
                    let (a, rest) = region.split_at_mut(m);
                    let (b, rest) = rest.split_at_mut(m);
                    let (cc, d) = rest.split_at_mut(m);
                    nn_tile_sub::<T, 4>(
                        pg,
                        [tw.col(c), tw.col(c + 1), tw.col(c + 2), tw.col(c + 3)],
                        [
                            &mut a[gr0..gr1],
                            &mut b[gr0..gr1],
                            &mut cc[gr0..gr1],
                            &mut d[gr0..gr1],
                        ],
                    );
                } else {
                    nn_tile_sub::<T, 1>(pg, [tw.col(c)], [&mut region[gr0..gr1]]);
                }
            }
            c += step;
        }
        r0 = r1;
    }
}
