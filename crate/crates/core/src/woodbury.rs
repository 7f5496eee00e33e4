//! Least squares with a low-rank modified matrix `Â = A + U·Vᵀ`, reusing a
//! prepared factorization of `A`.
//!
//! With `X = [V, AᵀU]`, `Yᵀ = [UᵀA + (UᵀU)Vᵀ; Vᵀ]` and `Z = (AᵀA)⁻¹X`,
//!
//! ```text
//! Â†b = (I − M)(A†b + Z₁·Uᵀb),   M = Z·(I₂ᵣ + YᵀZ)⁻¹·Yᵀ,
//! ```
//!
//! where `Z₁` holds the first `r` columns of `Z`. `M` is `n×n` and is never
//! formed: a solve needs `Z`, `Yᵀ` and the factorized `2r×2r` capacitance
//! `I₂ᵣ + YᵀZ`, so the cost per right-hand side is `O((r + k)·m·n)` once `A`
//! has been prepared.
//!
//! The formula alone loses accuracy when the capacitance is poorly
//! conditioned, which happens even for well-conditioned `A` and `Â` (nearly
//! square problems are typical). Solves therefore end with one step of
//! iterative refinement on the explicit residual `b − Âx`, using
//! `(ÂᵀÂ)⁻¹ = (I − M)(AᵀA)⁻¹`; see [`WoodburyOptions::refine_steps`].

use crate::dense::{
    add_outer_product, mat_mul, mat_t_vec, mat_vec, norm2, qr_thin, solve_upper_triangular,
    DenseMatrix, LuFactors, QrFactors,
};
use crate::error::{LinalgError, Result};
use crate::iterative::{normal_cg_solve, IterativeConfig};
use crate::scalar::Scalar;

/// Default relative tolerance for normal-equation residual certificates.
pub const DEFAULT_NE_TOL: f64 = 1e-10;

/// Default relative tolerance for `AᵀA`-solve residuals.
pub const DEFAULT_ATA_TOL: f64 = 1e-10;

/// Default multiplier in the capacitance singularity test
/// `rcond < 2r·ε·cap_guard`.
pub const DEFAULT_CAP_GUARD: f64 = 1e3;

/// Default number of refinement steps after the update formula.
pub const DEFAULT_REFINE_STEPS: usize = 1;

/// Row cap for [`pinv_update_explicit`], which forms `n×m` and `n×n` matrices.
pub const EXPLICIT_ROW_CAP: usize = 500;

/// How solves with `AᵀA` (and `A†b`) are carried out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend<T> {
    /// Thin Householder QR of `A`; `(AᵀA)⁻¹ = R⁻¹R⁻ᵀ`.
    Qr,
    /// Conjugate gradients on the normal operator.
    Cg(IterativeConfig<T>),
}

#[derive(Debug, Clone)]
enum AtaSolver<T> {
    Qr(QrFactors<T>),
    Cg(IterativeConfig<T>),
}

/// Prepared state for the unmodified matrix `A`, immutable once built.
#[derive(Debug, Clone)]
pub struct PreparedBase<T> {
    a: DenseMatrix<T>,
    solver: AtaSolver<T>,
    rhs: Option<Vec<T>>,
    x0: Option<Vec<T>>,
}

/// Factorizes (or configures the iterative solver for) `a` and, if `b` is
/// given, computes `x0 = A†b`.
pub fn prepare<T: Scalar>(
    a: DenseMatrix<T>,
    b: Option<&[T]>,
    backend: Backend<T>,
) -> Result<PreparedBase<T>> {
    let (m, n) = a.shape();
    if m < n {
        return Err(LinalgError::dims(
            "prepare",
            "a tall matrix with m >= n",
            format!("{m}x{n}"),
        ));
    }
    let solver = match backend {
        Backend::Qr => AtaSolver::Qr(qr_thin(&a)?),
        Backend::Cg(cfg) => AtaSolver::Cg(cfg),
    };
    let mut base = PreparedBase {
        a,
        solver,
        rhs: None,
        x0: None,
    };
    if let Some(b) = b {
        let x0 = base.base_solve(b)?;
        base.rhs = Some(b.to_vec());
        base.x0 = Some(x0);
    }
    Ok(base)
}

/// Like [`prepare`] but installs a caller-supplied `x0 = A†b` instead of
/// computing it.
pub fn prepare_with_x0<T: Scalar>(
    a: DenseMatrix<T>,
    b: &[T],
    x0: Vec<T>,
    backend: Backend<T>,
) -> Result<PreparedBase<T>> {
    let mut base = prepare(a, None, backend)?;
    base.check_rhs(b)?;
    if x0.len() != base.n() {
        return Err(LinalgError::dims(
            "prepare_with_x0",
            format!("x0 of length {}", base.n()),
            format!("length {}", x0.len()),
        ));
    }
    base.rhs = Some(b.to_vec());
    base.x0 = Some(x0);
    Ok(base)
}

impl<T: Scalar> PreparedBase<T> {
    pub fn a(&self) -> &DenseMatrix<T> {
        &self.a
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// `A†b` for the right-hand side bound at preparation, if any.
    pub fn x0(&self) -> Option<&[T]> {
        self.x0.as_deref()
    }

    pub fn rhs(&self) -> Option<&[T]> {
        self.rhs.as_deref()
    }

    pub fn qr(&self) -> Option<&QrFactors<T>> {
        match &self.solver {
            AtaSolver::Qr(f) => Some(f),
            AtaSolver::Cg(_) => None,
        }
    }

    pub fn backend(&self) -> Backend<T> {
        match &self.solver {
            AtaSolver::Qr(_) => Backend::Qr,
            AtaSolver::Cg(cfg) => Backend::Cg(*cfg),
        }
    }

    fn check_rhs(&self, b: &[T]) -> Result<()> {
        if b.len() != self.m() {
            return Err(LinalgError::dims(
                "right-hand side",
                format!("length {}", self.m()),
                format!("length {}", b.len()),
            ));
        }
        Ok(())
    }

    /// `Z = (AᵀA)⁻¹·C`.
    pub fn ata_solve(&self, c: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if c.rows() != self.n() {
            return Err(LinalgError::dims(
                "ata_solve",
                format!("{} rows", self.n()),
                format!("{} rows", c.rows()),
            ));
        }
        match &self.solver {
            AtaSolver::Qr(f) => f.solve_normal(c),
            AtaSolver::Cg(cfg) => Ok(normal_cg_solve(&self.a, c, cfg)?.z),
        }
    }

    /// Least squares solution `A†b` of the unmodified problem.
    pub fn base_solve(&self, b: &[T]) -> Result<Vec<T>> {
        self.check_rhs(b)?;
        match &self.solver {
            AtaSolver::Qr(f) => {
                let qtb = DenseMatrix::from_parts(self.n(), 1, mat_t_vec(&f.q, b)?);
                Ok(solve_upper_triangular(&f.r, &qtb, false)?.into_vec())
            }
            AtaSolver::Cg(cfg) => {
                let atb = DenseMatrix::from_parts(self.n(), 1, mat_t_vec(&self.a, b)?);
                Ok(normal_cg_solve(&self.a, &atb, cfg)?.z.into_vec())
            }
        }
    }

    /// `A†b`, reusing the stored `x0` when `b` is the bound right-hand side.
    fn x0_for(&self, b: &[T]) -> Result<Vec<T>> {
        match (&self.rhs, &self.x0) {
            (Some(rhs), Some(x0)) if rhs.as_slice() == b => Ok(x0.clone()),
            _ => self.base_solve(b),
        }
    }
}

/// The low-rank modification `U·Vᵀ` with `U: m×r`, `V: n×r`.
#[derive(Debug, Clone)]
pub struct LowRankUpdate<T> {
    u: DenseMatrix<T>,
    v: DenseMatrix<T>,
}

impl<T: Scalar> LowRankUpdate<T> {
    pub fn new(u: DenseMatrix<T>, v: DenseMatrix<T>) -> Result<Self> {
        if u.cols() != v.cols() || u.cols() == 0 {
            return Err(LinalgError::dims(
                "LowRankUpdate",
                "U and V with the same positive column count",
                format!("U {}x{}, V {}x{}", u.rows(), u.cols(), v.rows(), v.cols()),
            ));
        }
        if v.cols() > v.rows() || v.rows() > u.rows() {
            return Err(LinalgError::dims(
                "LowRankUpdate",
                "r <= n <= m",
                format!("m = {}, n = {}, r = {}", u.rows(), v.rows(), u.cols()),
            ));
        }
        Ok(Self { u, v })
    }

    pub fn u(&self) -> &DenseMatrix<T> {
        &self.u
    }

    pub fn v(&self) -> &DenseMatrix<T> {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }
}

/// Knobs for [`build_workspace_with`].
#[derive(Debug, Clone, Copy)]
pub struct WoodburyOptions<T> {
    /// Capacitance is rejected when `rcond < 2r·ε·cap_guard`.
    pub cap_guard: T,
    /// Corrections `x += (ÂᵀÂ)⁻¹Âᵀ(b − Âx)` applied after the update
    /// formula, each costing two products with `A` per right-hand side. The
    /// bare formula loses accuracy in proportion to the capacitance
    /// condition number; one step restores it.
    pub refine_steps: usize,
}

impl<T: Scalar> Default for WoodburyOptions<T> {
    fn default() -> Self {
        Self {
            cap_guard: T::lit(DEFAULT_CAP_GUARD),
            refine_steps: DEFAULT_REFINE_STEPS,
        }
    }
}

/// Per-update quantities: `X`, `Yᵀ`, `Z = (AᵀA)⁻¹X` and the factorized
/// capacitance `I₂ᵣ + YᵀZ`.
#[derive(Debug, Clone)]
pub struct UpdateWorkspace<T> {
    x: DenseMatrix<T>,
    yt: DenseMatrix<T>,
    z: DenseMatrix<T>,
    cap: LuFactors<T>,
    rank: usize,
    refine_steps: usize,
}

impl<T: Scalar> UpdateWorkspace<T> {
    /// `X = [V, AᵀU]`, `n×2r`.
    pub fn x(&self) -> &DenseMatrix<T> {
        &self.x
    }

    /// `Yᵀ`, `2r×n`.
    pub fn yt(&self) -> &DenseMatrix<T> {
        &self.yt
    }

    /// `Z = (AᵀA)⁻¹X`, `n×2r`; its first `r` columns are `(AᵀA)⁻¹V`.
    pub fn z(&self) -> &DenseMatrix<T> {
        &self.z
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cap_rcond(&self) -> T {
        self.cap.rcond()
    }

    pub fn capacitance(&self) -> &LuFactors<T> {
        &self.cap
    }

    /// Refinement steps each solve with this workspace will take.
    pub fn refine_steps(&self) -> usize {
        self.refine_steps
    }

    /// `W ← W − Z·cap⁻¹·(Yᵀ·W)`
    fn apply_i_minus_m(&self, w: &mut DenseMatrix<T>) -> Result<()> {
        let yt_w = mat_mul(&self.yt, w, false)?;
        let g = self.cap.solve(&yt_w)?;
        let w_hat = mat_mul(&self.z, &g, false)?;
        for (wi, &hi) in w.as_mut_slice().iter_mut().zip(w_hat.as_slice()) {
            *wi -= hi;
        }
        Ok(())
    }
}

fn check_update<T: Scalar>(base: &PreparedBase<T>, upd: &LowRankUpdate<T>) -> Result<()> {
    if upd.u.rows() != base.m() || upd.v.rows() != base.n() {
        return Err(LinalgError::dims(
            "low-rank update",
            format!("U with {} rows and V with {} rows", base.m(), base.n()),
            format!(
                "U {}x{}, V {}x{}",
                upd.u.rows(),
                upd.u.cols(),
                upd.v.rows(),
                upd.v.cols()
            ),
        ));
    }
    Ok(())
}

pub fn build_workspace<T: Scalar>(
    base: &PreparedBase<T>,
    upd: &LowRankUpdate<T>,
) -> Result<UpdateWorkspace<T>> {
    build_workspace_with(base, upd, &WoodburyOptions::default())
}

/// Forms `X`, `Yᵀ`, `Z` and factorizes `I₂ᵣ + YᵀZ`.
///
/// Fails with [`LinalgError::SingularCapacitance`] when the capacitance is
/// (numerically) singular, which happens exactly when `A + UVᵀ` loses rank.
pub fn build_workspace_with<T: Scalar>(
    base: &PreparedBase<T>,
    upd: &LowRankUpdate<T>,
    opts: &WoodburyOptions<T>,
) -> Result<UpdateWorkspace<T>> {
    check_update(base, upd)?;
    let r = upd.rank();
    let n = base.n();

    let atu = mat_mul(&base.a, &upd.u, true)?;
    let x = upd.v.hcat(&atu)?;

    // Yᵀ = [(AᵀU)ᵀ + (UᵀU)Vᵀ; Vᵀ], reusing AᵀU from X.
    let utu = mat_mul(&upd.u, &upd.u, true)?;
    let utu_vt = mat_mul(&utu, &upd.v.transpose(), false)?;
    let mut yt = DenseMatrix::zeros(2 * r, n);
    for j in 0..n {
        let col = yt.col_mut(j);
        for i in 0..r {
            col[i] = atu[(j, i)] + utu_vt[(i, j)];
            col[r + i] = upd.v[(j, i)];
        }
    }

    let z = base.ata_solve(&x)?;

    let mut cap = mat_mul(&yt, &z, false)?;
    for i in 0..2 * r {
        cap[(i, i)] += T::one();
    }
    let cap = LuFactors::new(&cap)?;
    let threshold = T::from_usize_lossy(2 * r) * T::epsilon() * opts.cap_guard;
    if !(cap.rcond() >= threshold) {
        return Err(LinalgError::SingularCapacitance {
            rcond: cap.rcond().to_f64().unwrap_or(0.0),
            threshold: threshold.to_f64().unwrap_or(0.0),
        });
    }
    let refine_steps = opts.refine_steps;
    Ok(UpdateWorkspace {
        x,
        yt,
        z,
        cap,
        rank: r,
        refine_steps,
    })
}

/// Solution of one updated least squares problem.
#[derive(Debug, Clone)]
pub struct SolveOutcome<T> {
    pub x: Vec<T>,
    /// Reciprocal 1-norm condition of the capacitance.
    pub cap_rcond: T,
    /// `‖Âᵀ(Âx − b)‖₂`, filled in by [`SolveOutcome::with_residual`].
    pub ne_residual: Option<T>,
}

impl<T: Scalar> SolveOutcome<T> {
    /// Attaches the normal-equation residual of the modified problem.
    pub fn with_residual(
        mut self,
        base: &PreparedBase<T>,
        upd: &LowRankUpdate<T>,
        b: &[T],
    ) -> Result<Self> {
        self.ne_residual = Some(updated_normal_residual(base.a(), upd, &self.x, b)?);
        Ok(self)
    }
}

/// `‖Âᵀ(Âx − b)‖₂` for `Â = A + UVᵀ`, without forming `Â`.
pub fn updated_normal_residual<T: Scalar>(
    a: &DenseMatrix<T>,
    upd: &LowRankUpdate<T>,
    x: &[T],
    b: &[T],
) -> Result<T> {
    let mut res = mat_vec(a, x)?;
    let vtx = mat_t_vec(&upd.v, x)?;
    let u_vtx = mat_vec(&upd.u, &vtx)?;
    if b.len() != res.len() {
        return Err(LinalgError::dims(
            "updated_normal_residual",
            format!("b of length {}", res.len()),
            format!("length {}", b.len()),
        ));
    }
    for ((ri, &ui), &bi) in res.iter_mut().zip(&u_vtx).zip(b) {
        *ri += ui - bi;
    }
    let mut g = mat_t_vec(a, &res)?;
    let utr = mat_t_vec(&upd.u, &res)?;
    let v_utr = mat_vec(&upd.v, &utr)?;
    for (gi, &vi) in g.iter_mut().zip(&v_utr) {
        *gi += vi;
    }
    Ok(norm2(&g))
}

/// Solves `min ‖b − (A + UVᵀ)x‖₂` with a workspace from [`build_workspace`].
///
/// If `b` differs from the right-hand side bound in `base`, `A†b` is
/// recomputed with one extra base solve.
pub fn solve_updated<T: Scalar>(
    base: &PreparedBase<T>,
    upd: &LowRankUpdate<T>,
    ws: &UpdateWorkspace<T>,
    b: &[T],
) -> Result<SolveOutcome<T>> {
    base.check_rhs(b)?;
    let bs = DenseMatrix::from_parts(b.len(), 1, b.to_vec());
    let x = solve_block(base, upd, ws, &bs)?;
    Ok(SolveOutcome {
        x: x.into_vec(),
        cap_rcond: ws.cap_rcond(),
        ne_residual: None,
    })
}

/// Solves the modified problem for every column of `bs` with one workspace.
///
/// Column `j` of the result is bitwise equal to `solve_updated` on column `j`.
pub fn solve_many<T: Scalar>(
    base: &PreparedBase<T>,
    upd: &LowRankUpdate<T>,
    ws: &UpdateWorkspace<T>,
    bs: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if bs.rows() != base.m() {
        return Err(LinalgError::dims(
            "solve_many",
            format!("{} rows", base.m()),
            format!("{} rows", bs.rows()),
        ));
    }
    solve_block(base, upd, ws, bs)
}

fn solve_block<T: Scalar>(
    base: &PreparedBase<T>,
    upd: &LowRankUpdate<T>,
    ws: &UpdateWorkspace<T>,
    bs: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    check_update(base, upd)?;
    if ws.rank != upd.rank() || ws.z.rows() != base.n() {
        return Err(LinalgError::dims(
            "workspace",
            format!("workspace for rank {} and n = {}", upd.rank(), base.n()),
            format!("rank {} and n = {}", ws.rank, ws.z.rows()),
        ));
    }
    let n = base.n();
    let r = ws.rank;
    let k = bs.cols();

    // W = X0 + Z₁·(UᵀB)
    let mut w = DenseMatrix::zeros(n, k);
    for j in 0..k {
        w.col_mut(j).copy_from_slice(&base.x0_for(bs.col(j))?);
    }
    let utb = mat_mul(&upd.u, bs, true)?;
    let z1 = DenseMatrix::from_parts(n, r, ws.z.as_slice()[..n * r].to_vec());
    let z1_utb = mat_mul(&z1, &utb, false)?;
    for (wi, &zi) in w.as_mut_slice().iter_mut().zip(z1_utb.as_slice()) {
        *wi += zi;
    }

    // X = (I − M)·W
    ws.apply_i_minus_m(&mut w)?;

    // (ÂᵀÂ)⁻¹ = (I − M)(AᵀA)⁻¹ since ÂᵀÂ = AᵀA + X·Yᵀ. The residual is
    // formed explicitly; the normal-equation form cancels too much.
    for _ in 0..ws.refine_steps {
        let mut res = mat_mul(&base.a, &w, false)?;
        let vtw = mat_mul(&upd.v, &w, true)?;
        let u_vtw = mat_mul(&upd.u, &vtw, false)?;
        for ((ri, &ui), &bi) in res
            .as_mut_slice()
            .iter_mut()
            .zip(u_vtw.as_slice())
            .zip(bs.as_slice())
        {
            *ri = bi - (*ri + ui);
        }
        let mut g = mat_mul(&base.a, &res, true)?;
        let utr = mat_mul(&upd.u, &res, true)?;
        let v_utr = mat_mul(&upd.v, &utr, false)?;
        for (gi, &vi) in g.as_mut_slice().iter_mut().zip(v_utr.as_slice()) {
            *gi += vi;
        }
        let mut d = base.ata_solve(&g)?;
        ws.apply_i_minus_m(&mut d)?;
        for (wi, &di) in w.as_mut_slice().iter_mut().zip(d.as_slice()) {
            *wi += di;
        }
    }
    Ok(w)
}

/// Explicit `(A + UVᵀ)† = A† − M·A† + (I − M)(AᵀA)⁻¹·V·Uᵀ`, for validation
/// at small sizes (`m <= EXPLICIT_ROW_CAP`).
pub fn pinv_update_explicit<T: Scalar>(
    a: &DenseMatrix<T>,
    u: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if a.rows() > EXPLICIT_ROW_CAP {
        return Err(LinalgError::SizeCap {
            op: "pinv_update_explicit",
            cap: EXPLICIT_ROW_CAP,
            rows: a.rows(),
        });
    }
    let base = prepare(a.clone(), None, Backend::Qr)?;
    let upd = LowRankUpdate::new(u.clone(), v.clone())?;
    let ws = build_workspace(&base, &upd)?;
    let f = base.qr().expect("QR backend");
    let a_pinv = solve_upper_triangular(&f.r, &f.q.transpose(), false)?;

    let n = base.n();
    let r = ws.rank;
    // I − M with M = Z·cap⁻¹·Yᵀ
    let cap_inv_yt = ws.cap.solve(&ws.yt)?;
    let m_mat = mat_mul(&ws.z, &cap_inv_yt, false)?;
    let i_minus_m = DenseMatrix::identity(n).sub(&m_mat)?;

    let first = mat_mul(&i_minus_m, &a_pinv, false)?;
    let z1 = ws.z.columns(0..r);
    let z1_ut = mat_mul(&z1, &upd.u.transpose(), false)?;
    let second = mat_mul(&i_minus_m, &z1_ut, false)?;
    first.add(&second)
}

/// From-scratch reference: forms `Â = A + UVᵀ`, factorizes it with thin QR
/// and returns `R̂⁻¹·Q̂ᵀ·b`.
pub fn baseline_solve<T: Scalar>(
    a: &DenseMatrix<T>,
    u: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
    b: &[T],
) -> Result<Vec<T>> {
    if b.len() != a.rows() {
        return Err(LinalgError::dims(
            "baseline_solve",
            format!("b of length {}", a.rows()),
            format!("length {}", b.len()),
        ));
    }
    let mut a_hat = a.clone();
    add_outer_product(&mut a_hat, u, v)?;
    let f = qr_thin(&a_hat)?;
    let qtb = DenseMatrix::from_parts(a.cols(), 1, mat_t_vec(&f.q, b)?);
    Ok(solve_upper_triangular(&f.r, &qtb, false)?.into_vec())
}
