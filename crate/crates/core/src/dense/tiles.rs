//! Register-tiled kernels for the two products in a block reflector update:
//! `W = Vᵀ·C` (inner dimension along the rows) and `C −= V·W`.

use crate::scalar::Scalar;

/// Partial sums kept per accumulator in the `Vᵀ·C` tile.
const LANES: usize = 4;
/// Rows per packed group in the `C −= V·W` tile.
pub(crate) const MR: usize = 16;

#[inline(always)]
fn fma<T: Scalar>(a: T, b: T, c: T) -> T {
    if cfg!(target_feature = "fma") {
        a.mul_add(b, c)
    } else {
        a * b + c
    }
}

/// `out[i][j] = v[i] · c[j]` for equally long slices.
#[inline(always)]
pub(crate) fn tn_tile<T: Scalar, const NI: usize, const NC: usize>(
    v: [&[T]; NI],
    c: [&[T]; NC],
) -> [[T; NC]; NI] {
    let len = c[0].len();
    let full = len - len % LANES;
    let mut acc = [[[T::zero(); LANES]; NC]; NI];
    let mut r = 0;
    while r < full {
        let mut vv = [[T::zero(); LANES]; NI];
        for i in 0..NI {
            vv[i].copy_from_slice(&v[i][r..r + LANES]);
        }
        let mut cc = [[T::zero(); LANES]; NC];
        for j in 0..NC {
            cc[j].copy_from_slice(&c[j][r..r + LANES]);
        }
        for i in 0..NI {
            for j in 0..NC {
                for l in 0..LANES {
                    acc[i][j][l] = fma(vv[i][l], cc[j][l], acc[i][j][l]);
                }
            }
        }
        r += LANES;
    }
    let mut out = [[T::zero(); NC]; NI];
    for i in 0..NI {
        for j in 0..NC {
            let a = &acc[i][j];
            let mut s = (a[0] + a[2]) + (a[1] + a[3]);
            for rr in full..len {
                s = fma(v[i][rr], c[j][rr], s);
            }
            out[i][j] = s;
        }
    }
    out
}

/// Packs rows `r0..r1` of the columns of `v` into groups of `MR` rows laid
/// out as `[group][column][row-in-group]`, zero padding the last group.
pub(crate) fn pack_rows<T: Scalar>(
    v: &[T],
    ld: usize,
    kb: usize,
    r0: usize,
    r1: usize,
    out: &mut Vec<T>,
) {
    let groups = (r1 - r0).div_ceil(MR);
    out.clear();
    out.resize(groups * kb * MR, T::zero());
    for g in 0..groups {
        let gr0 = r0 + g * MR;
        let gr1 = (gr0 + MR).min(r1);
        for p in 0..kb {
            let dst = &mut out[(g * kb + p) * MR..(g * kb + p) * MR + (gr1 - gr0)];
            dst.copy_from_slice(&v[p * ld + gr0..p * ld + gr1]);
        }
    }
}

/// `C[rows, cols] −= V[rows, :]·W[:, cols]` for one group of `MR` rows and
/// `NC` columns. `packed` is one group from [`pack_rows`]; `w` holds the
/// `NC` columns of `W`, each of length `kb`.
#[inline(always)]
pub(crate) fn nn_tile_sub<T: Scalar, const NC: usize>(
    packed: &[T],
    w: [&[T]; NC],
    c: [&mut [T]; NC],
) {
    let kb = w[0].len();
    let rows = c[0].len();
    let mut acc = [[T::zero(); MR]; NC];
    for p in 0..kb {
        let vv = &packed[p * MR..(p + 1) * MR];
        for j in 0..NC {
            let wj = w[j][p];
            for l in 0..MR {
                acc[j][l] = fma(vv[l], wj, acc[j][l]);
            }
        }
    }
    for (j, cj) in c.into_iter().enumerate() {
        for l in 0..rows {
            cj[l] -= acc[j][l];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tn_tile_matches_naive() {
        let len = 23;
        let cols: Vec<Vec<f64>> = (0..6)
            .map(|k| {
                (0..len)
                    .map(|r| ((r * 3 + k * 5) as f64 * 0.21).sin())
                    .collect()
            })
            .collect();
        let out = tn_tile::<f64, 2, 3>([&cols[0], &cols[1]], [&cols[2], &cols[3], &cols[4]]);
        for i in 0..2 {
            for j in 0..3 {
                let naive: f64 = (0..len).map(|r| cols[i][r] * cols[2 + j][r]).sum();
                assert!((out[i][j] - naive).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn nn_tile_matches_naive() {
        let ld = 13;
        let kb = 3;
        let v: Vec<f64> = (0..ld * kb).map(|x| (x as f64 * 0.37).cos()).collect();
        let mut packed = Vec::new();
        pack_rows(&v, ld, kb, 8, 13, &mut packed);
        assert_eq!(packed.len(), kb * MR);
        let w0 = [1.0, -2.0, 0.5];
        let w1 = [0.25, 3.0, -1.0];
        let mut c0 = vec![1.0; 5];
        let mut c1 = vec![-1.0; 5];
        nn_tile_sub::<f64, 2>(&packed, [&w0, &w1], [&mut c0, &mut c1]);
        for l in 0..5 {
            let row = 8 + l;
            let e0 = 1.0 - (0..kb).map(|p| v[p * ld + row] * w0[p]).sum::<f64>();
            let e1 = -1.0 - (0..kb).map(|p| v[p * ld + row] * w1[p]).sum::<f64>();
            assert!((c0[l] - e0).abs() < 1e-14 && (c1[l] - e1).abs() < 1e-14);
        }
    }
}
