//! Exact Euclidean distance transform (Felzenszwalb and Huttenlocher), used
//! as a cheap lower bound on obstacle distance.

const FAR: f64 = 1e20;

/// Squared distance transform of a 1-D sampled function.
fn transform_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0 and the new parabola dominates the first one
                v[0] = q;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Distance, in cells, from every cell centre of a `side x side` grid to the
/// nearest occupied cell centre. Infinite when nothing is occupied.
pub(super) fn distance_field(side: usize, occupied: impl Fn(usize, usize) -> bool) -> Vec<f32> {
    let mut grid = vec![FAR; side * side];
    let mut any = false;
    for y in 0..side {
        for x in 0..side {
            if occupied(x, y) {
                grid[y * side + x] = 0.0;
                any = true;
            }
        }
    }
    if !any {
        return vec![f32::INFINITY; side * side];
    }
    let mut f = vec![0.0; side];
    let mut out = vec![0.0; side];
    let mut v = vec![0usize; side];
    let mut z = vec![0.0; side + 1];
    for x in 0..side {
        for y in 0..side {
            f[y] = grid[y * side + x];
        }
        transform_1d(&f, &mut out, &mut v, &mut z);
        for y in 0..side {
            grid[y * side + x] = out[y];
        }
    }
    for y in 0..side {
        f.copy_from_slice(&grid[y * side..(y + 1) * side]);
        transform_1d(&f, &mut out, &mut v, &mut z);
        grid[y * side..(y + 1) * side].copy_from_slice(&out);
    }
    grid.iter().map(|d| d.sqrt() as f32).collect()
}
