//! Reference implementations that share no code with the library: a cyclic
//! Jacobi eigensolver on the real embedding of a Hermitian matrix, index-loop
//! partial traces and brute-force lattice edge counting.

#![allow(dead_code)]

use locert::linalg::CMatrix;
use locert::DensityMatrix;

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (head, tail) = a.split_at_mut(q);
                for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (apk, aqk) = (*x, *y);
                    *x = c * apk - s * aqk;
                    *y = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Eigenvalues of a Hermitian matrix via `[[Re, -Im], [Im, Re]]`, whose
/// spectrum is the Hermitian spectrum with every value doubled.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut a = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            a[i][j] = z.re;
            a[i + n][j + n] = z.re;
            a[i][j + n] = -z.im;
            a[i + n][j] = z.im;
        }
    }
    jacobi_eigenvalues(a).into_iter().step_by(2).collect()
}

pub fn entropy(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).into_iter().filter(|&x| x > 1e-12).map(|x| -x * x.ln()).sum()
}

pub fn trace_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).into_iter().map(f64::abs).sum()
}

pub fn distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    trace_norm(&(a.matrix() - b.matrix()))
}

pub fn rank(m: &CMatrix, tol: f64) -> usize {
    hermitian_eigenvalues(m).into_iter().filter(|&x| x > tol).count()
}

/// Keeps the sites at `keep` (positions into `dims`, ascending), summing the rest.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let n = dims.len();
    let total: usize = dims.iter().product();
    let kept: usize = keep.iter().map(|&p| dims[p]).product();
    let digits = |mut idx: usize| {
        let mut d = vec![0; n];
        for s in (0..n).rev() {
            d[s] = idx % dims[s];
            idx /= dims[s];
        }
        d
    };
    let kept_index = |d: &[usize]| keep.iter().fold(0, |acc, &p| acc * dims[p] + d[p]);
    let traced: Vec<usize> = (0..n).filter(|p| !keep.contains(p)).collect();
    let mut out = CMatrix::zeros(kept, kept);
    for i in 0..total {
        let di = digits(i);
        for j in 0..total {
            let dj = digits(j);
            if traced.iter().all(|&t| di[t] == dj[t]) {
                out[(kept_index(&di), kept_index(&dj))] += m[(i, j)];
            }
        }
    }
    out
}

/// Unit edges between `cells` and the rest of a `w`×`h` lattice. On open
/// lattices the outer rim is not an edge.
pub fn boundary_edges(cells: &[bool], w: usize, h: usize, periodic: bool) -> usize {
    let mut count = 0;
    for y in 0..h {
        for x in 0..w {
            // Count each edge once: from a cell to its right and upper neighbour.
            let here = cells[y * w + x];
            let right = if x + 1 < w {
                Some(cells[y * w + x + 1])
            } else if periodic {
                Some(cells[y * w])
            } else {
                None
            };
            let up = if y + 1 < h {
                Some(cells[(y + 1) * w + x])
            } else if periodic {
                Some(cells[x])
            } else {
                None
            };
            count += [right, up].into_iter().flatten().filter(|&n| n != here).count();
        }
    }
    count
}

/// Connected components via union-find. `diagonal` adds corner adjacency.
pub fn components(cells: &[bool], w: usize, h: usize, periodic: bool, diagonal: bool) -> usize {
    let mut parent: Vec<usize> = (0..w * h).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut steps = vec![(1isize, 0isize), (0, 1)];
    if diagonal {
        steps.extend([(1, 1), (1, -1)]);
    }
    for y in 0..h as isize {
        for x in 0..w as isize {
            if !cells[(y as usize) * w + x as usize] {
                continue;
            }
            for &(dx, dy) in &steps {
                let (mut nx, mut ny) = (x + dx, y + dy);
                if periodic {
                    nx = nx.rem_euclid(w as isize);
                    ny = ny.rem_euclid(h as isize);
                } else if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let a = (y as usize) * w + x as usize;
                let b = (ny as usize) * w + nx as usize;
                if cells[b] {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    parent[ra] = rb;
                }
            }
        }
    }
    (0..w * h).filter(|&i| cells[i]).filter(|&i| find(&mut parent, i) == i).count()
}

/// Evaluates `f` on every item; returns (passed, total).
pub fn pass_rate<T>(items: impl IntoIterator<Item = T>, mut f: impl FnMut(T) -> bool) -> (usize, usize) {
    let mut pass = 0;
    let mut total = 0;
    for item in items {
        total += 1;
        if f(item) {
            pass += 1;
        }
    }
    (pass, total)
}
