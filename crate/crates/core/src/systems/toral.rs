use crate::error::{Error, Result};

type Mat = [[i128; 2]; 2];

fn mul(a: &Mat, b: &Mat) -> Result<Mat> {
    let mut out = [[0i128; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = 0i128;
            for k in 0..2 {
                let term = a[i][k]
                    .checked_mul(b[k][j])
                    .ok_or(Error::Overflow("toral matrix power"))?;
                acc = acc
                    .checked_add(term)
                    .ok_or(Error::Overflow("toral matrix power"))?;
            }
            out[i][j] = acc;
        }
    }
    Ok(out)
}

/// `A^n` by repeated squaring.
pub(crate) fn matrix_power(a: [[i64; 2]; 2], n: u32) -> Result<Mat> {
    let mut base: Mat = [
        [a[0][0].into(), a[0][1].into()],
        [a[1][0].into(), a[1][1].into()],
    ];
    let mut result: Mat = [[1, 0], [0, 1]];
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = mul(&result, &base)?;
        }
        e >>= 1;
        if e > 0 {
            base = mul(&base, &base)?;
        }
    }
    Ok(result)
}

/// Number of fixed points of the toral automorphism `A^n`, i.e.
/// `|det(A^n − I)|`, in exact integer arithmetic.
pub fn toral_fix_count(a: [[i64; 2]; 2], n: u32) -> Result<u128> {
    let det = a[0][0] as i128 * a[1][1] as i128 - a[0][1] as i128 * a[1][0] as i128;
    if det.abs() != 1 {
        return Err(Error::NotUnimodular(det as i64));
    }
    let trace = a[0][0] + a[1][1];
    if trace.abs() <= 2 {
        return Err(Error::NotHyperbolic(trace));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("toral power must be ≥ 1".into()));
    }
    let p = matrix_power(a, n)?;
    let d = (p[0][0] - 1)
        .checked_mul(p[1][1] - 1)
        .zip(p[0][1].checked_mul(p[1][0]))
        .and_then(|(x, y)| x.checked_sub(y))
        .ok_or(Error::Overflow("toral determinant"))?;
    Ok(d.unsigned_abs())
}
