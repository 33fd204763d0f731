use nalgebra::DMatrix;

use crate::error::{Error, Result};

// Padé(13) numerator coefficients and the 1-norm bound below which the
// unscaled approximant is accurate to unit roundoff.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `exp(t S)` by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(s: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !s.is_square() {
        return Err(Error::invalid("expm needs a square matrix"));
    }
    if !t.is_finite() || s.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("expm input has non-finite entries"));
    }
    let n = s.nrows();
    let a = s * t;
    let norm1 = one_norm(&a);
    if norm1 == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let squarings = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-squarings);

    let b = &PADE13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];

    let lu = (&v - &u).lu();
    let mut r = lu
        .solve(&(&v + &u))
        .ok_or_else(|| Error::invalid("Padé denominator is singular"))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
