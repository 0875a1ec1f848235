//! Integer lattice routines: Smith normal form diagonal, saturated kernel bases.

use num_integer::Integer;

pub type IntMatrix = Vec<Vec<i64>>;

pub fn gcd_slice(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

/// Extended gcd: returns (g, s, t) with s*a + t*b = g >= 0.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let e = a.extended_gcd(&b);
    if e.gcd < 0 {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

/// Diagonal of the Smith normal form (nonzero elementary divisors, ascending).
pub fn elementary_divisors(a: &IntMatrix) -> Vec<i64> {
    let mut m: Vec<Vec<i64>> = a.clone();
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut divisors = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // pick smallest nonzero entry in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if m[i][j] != 0 && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        m.swap(t, bi);
        for row in m.iter_mut() {
            row.swap(t, bj);
        }
        let mut clean = true;
        let p = m[t][t];
        for i in t + 1..rows {
            let f = m[i][t] / p;
            if f != 0 {
                for j in t..cols {
                    m[i][j] -= f * m[t][j];
                }
            }
            if m[i][t] != 0 {
                clean = false;
            }
        }
        for j in t + 1..cols {
            let f = m[t][j] / p;
            if f != 0 {
                for row in m.iter_mut().skip(t) {
                    row[j] -= f * row[t];
                }
            }
            if m[t][j] != 0 {
                clean = false;
            }
        }
        if !clean {
            continue;
        }
        // divisibility: fold a non-divisible row into row t
        let mut bad_row = None;
        'outer: for i in t + 1..rows {
            for j in t + 1..cols {
                if m[i][j] % p != 0 {
                    bad_row = Some(i);
                    break 'outer;
                }
            }
        }
        if let Some(i) = bad_row {
            for j in t..cols {
                m[t][j] += m[i][j];
            }
            continue;
        }
        divisors.push(p.abs());
        t += 1;
    }
    divisors
}

/// A ℤ-basis of `{x ∈ ℤ^m : A x = 0}` (as columns), via unimodular column operations.
pub fn integer_kernel_basis(a: &IntMatrix) -> Vec<Vec<i64>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut h: Vec<Vec<i64>> = a.clone();
    let mut v: Vec<Vec<i64>> = (0..cols).map(|i| (0..cols).map(|j| i64::from(i == j)).collect()).collect();
    let mut pivot_col = 0;
    for r in 0..rows {
        if pivot_col == cols {
            break;
        }
        for c in pivot_col + 1..cols {
            let (x, y) = (h[r][pivot_col], h[r][c]);
            if y == 0 {
                continue;
            }
            let (g, s, t) = ext_gcd(x, y);
            let (u, w) = (x / g, y / g);
            // [col_p, col_c] <- [s*col_p + t*col_c, -w*col_p + u*col_c], determinant 1
            for mat in [&mut h, &mut v] {
                for row in mat.iter_mut() {
                    let (cp, cc) = (row[pivot_col], row[c]);
                    row[pivot_col] = s * cp + t * cc;
                    row[c] = -w * cp + u * cc;
                }
            }
        }
        if h[r][pivot_col] != 0 {
            pivot_col += 1;
        }
    }
    (pivot_col..cols).map(|c| (0..cols).map(|i| v[i][c]).collect()).collect()
}

pub fn mat_vec(a: &IntMatrix, x: &[i64]) -> Vec<i64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn det_i64(a: &IntMatrix) -> i64 {
    let m = crate::linalg::QMatrix::from_i64_rows(a);
    crate::rational::to_i64(&m.determinant()).expect("integer matrix has integer determinant")
}
