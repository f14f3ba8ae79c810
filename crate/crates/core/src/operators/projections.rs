use crate::error::{Error, Result};

/// Componentwise clamp of `x` onto the box `[lo, hi]`.
pub fn project_box(lo: &[f64], hi: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_box(lo, hi)?;
    if x.len() != lo.len() {
        return Err(Error::param(format!(
            "box has dimension {} but point has dimension {}",
            lo.len(),
            x.len()
        )));
    }
    let mut out = vec![0.0; x.len()];
    clamp_into(lo, hi, x, &mut out);
    Ok(out)
}

pub(crate) fn check_box(lo: &[f64], hi: &[f64]) -> Result<()> {
    if lo.len() != hi.len() {
        return Err(Error::param("box bounds have different lengths"));
    }
    if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
        return Err(Error::param(format!(
            "empty box: lo[{i}] = {} > hi[{i}] = {}",
            lo[i], hi[i]
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn clamp_into(lo: &[f64], hi: &[f64], x: &[f64], out: &mut [f64]) {
    for i in 0..x.len() {
        out[i] = x[i].max(lo[i]).min(hi[i]);
    }
}

/// Pixelwise projection of a pair field `(u, v)` onto `{ (p, q) : p² + q² ≤ 1 }`.
pub fn project_pair_ball(u: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if u.len() != v.len() {
        return Err(Error::param(format!(
            "pair field shape mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let mut pu = u.to_vec();
    let mut pv = v.to_vec();
    pair_ball_in_place(&mut pu, &mut pv);
    Ok((pu, pv))
}

#[inline]
pub(crate) fn pair_ball_in_place(u: &mut [f64], v: &mut [f64]) {
    for (a, b) in u.iter_mut().zip(v.iter_mut()) {
        let n = (*a * *a + *b * *b).sqrt();
        if n > 1.0 {
            *a /= n;
            *b /= n;
        }
    }
}
