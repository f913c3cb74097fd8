//! Word-parallel rows for binary lattices. Bit `b` of word `w` holds column
//! `64 * w + b`; bits at or beyond the row width are always zero.

#[inline]
pub(crate) fn words_for(width: usize) -> usize {
    width.div_ceil(64)
}

#[inline]
pub(crate) fn tail_mask(width: usize) -> u64 {
    match width % 64 {
        0 => u64::MAX,
        rem => (1u64 << rem) - 1,
    }
}

#[inline]
pub(crate) fn get_bit(row: &[u64], col: usize) -> u8 {
    ((row[col >> 6] >> (col & 63)) & 1) as u8
}

#[inline]
pub(crate) fn set_bit(row: &mut [u64], col: usize, v: u8) {
    let mask = 1u64 << (col & 63);
    if v & 1 == 1 {
        row[col >> 6] |= mask;
    } else {
        row[col >> 6] &= !mask;
    }
}

/// `out[c] ^= src[c + d]` for every column `c`, reading zero outside the row.
fn xor_shifted_zero(src: &[u64], d: i64, out: &mut [u64]) {
    let nw = src.len() as i64;
    let get = |w: i64| if w >= 0 && w < nw { src[w as usize] } else { 0 };
    let ws = d.div_euclid(64);
    let bs = d.rem_euclid(64) as u32;
    for (w, o) in out.iter_mut().enumerate() {
        let base = w as i64 + ws;
        let v = if bs == 0 { get(base) } else { (get(base) >> bs) | (get(base + 1) << (64 - bs)) };
        *o ^= v;
    }
}

/// `out[c] ^= src[c + d]` with either zero fill or wrap-around at `width`.
pub(crate) fn xor_shifted(src: &[u64], d: i64, width: usize, periodic: bool, out: &mut [u64]) {
    if periodic {
        let d = d.rem_euclid(width as i64);
        if d == 0 {
            for (o, s) in out.iter_mut().zip(src) {
                *o ^= s;
            }
        } else {
            xor_shifted_zero(src, d, out);
            xor_shifted_zero(src, d - width as i64, out);
        }
    } else {
        xor_shifted_zero(src, d, out);
    }
    if let Some(last) = out.last_mut() {
        *last &= tail_mask(width);
    }
}
