//! Strided matrix products on flat slices, via `matrixmultiply`.

/// Strided view of a matrix inside a flat slice: `(slice, row_stride, col_stride)`.
pub(crate) type View<'a> = (&'a [f64], usize, usize);

fn span(rows: usize, cols: usize, rs: usize, cs: usize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * rs + (cols - 1) * cs + 1
    }
}

/// `c = beta * c + a * b` on strided operands; `a: m x k`, `b: k x n`, `c: m x n`.
pub(crate) fn gemm(m: usize, k: usize, n: usize, a: View, b: View, beta: f64, c: (&mut [f64], usize, usize)) {
    assert!(span(m, k, a.1, a.2) <= a.0.len());
    assert!(span(k, n, b.1, b.2) <= b.0.len());
    assert!(span(m, n, c.1, c.2) <= c.0.len());
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr(),
            a.1 as isize,
            a.2 as isize,
            b.0.as_ptr(),
            b.1 as isize,
            b.2 as isize,
            beta,
            c.0.as_mut_ptr(),
            c.1 as isize,
            c.2 as isize,
        );
    }
}
