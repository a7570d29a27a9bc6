//! Cotangent Laplacian assembly, boundary/interior block partition, Schur
//! complement, and harmonic interior solves.
//!
//! The Laplacian convention is positive semidefinite: off-diagonals are
//! `-w_ij` with `w_ij = (cot a + cot b) / 2` over the angles opposite edge
//! `(i, j)`, diagonals are the negated row sums, so `L 1 = 0` and
//! `(1/2) <L f, f>` is the Dirichlet energy of the piecewise-linear map.

use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use thiserror::Error;

use crate::mesh::TriMesh;
use crate::util::{cross3, dot3, sub3, P2};

#[derive(Debug, Error)]
pub enum LaplacianError {
    #[error("face {face} is degenerate (area {area:.3e}); cotangent weights are undefined")]
    DegenerateFace { face: usize, area: f64 },
    #[error("interior block factorization failed (estimated 1-norm condition {condition:.3e})")]
    SingularInterior { condition: f64 },
}

/// Sparse symmetric cotangent Laplacian.
#[derive(Debug, Clone)]
pub struct CotanLaplacian {
    dim: usize,
    /// Full symmetric storage, each row sorted by column index.
    rows: Vec<Vec<(usize, f64)>>,
}

/// Builds the cotangent Laplacian of a valid mesh, assembling per-face from
/// each face's three angles. Obtuse triangles (negative weights) are allowed.
pub fn build_laplacian(mesh: &TriMesh) -> Result<CotanLaplacian, LaplacianError> {
    let nv = mesh.vertex_count();
    let vs = mesh.vertices();
    // Keyed map iteration feeds float accumulation below; a sorted map keeps
    // the rounding identical across runs.
    let mut weights: std::collections::BTreeMap<(usize, usize), f64> =
        std::collections::BTreeMap::new();
    for (fi, &[i, j, k]) in mesh.faces().iter().enumerate() {
        let e_ij = sub3(vs[j], vs[i]);
        let e_ik = sub3(vs[k], vs[i]);
        let double_area = crate::util::norm3(cross3(e_ij, e_ik));
        let max_edge = crate::util::norm3(e_ij)
            .max(crate::util::norm3(e_ik))
            .max(crate::util::norm3(sub3(vs[k], vs[j])));
        if !double_area.is_finite() || double_area <= 1e-14 * max_edge * max_edge {
            return Err(LaplacianError::DegenerateFace {
                face: fi,
                area: 0.5 * double_area,
            });
        }
        // cot of the angle at each corner = dot / |cross| of its two edges.
        for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
            let u = sub3(vs[b], vs[a]);
            let v = sub3(vs[c], vs[a]);
            let cot = dot3(u, v) / double_area;
            // Angle at `a` is opposite edge (b, c).
            let key = (b.min(c), b.max(c));
            *weights.entry(key).or_insert(0.0) += 0.5 * cot;
        }
    }

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
    let mut diag = vec![0.0; nv];
    for (&(a, b), &w) in &weights {
        rows[a].push((b, -w));
        rows[b].push((a, -w));
        diag[a] += w;
        diag[b] += w;
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row.push((i, diag[i]));
        row.sort_unstable_by_key(|&(c, _)| c);
    }
    Ok(CotanLaplacian { dim: nv, rows })
}

impl CotanLaplacian {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|p| self.rows[i][p].1)
            .unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|&(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `<L f, f>` summed over both coordinates of the point list.
    pub fn quad_form(&self, points: &[P2]) -> f64 {
        let mut acc = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            let mut lx = 0.0;
            let mut ly = 0.0;
            for &(c, v) in row {
                lx += v * points[c][0];
                ly += v * points[c][1];
            }
            acc += lx * points[i][0] + ly * points[i][1];
        }
        acc
    }

    /// Dumps the matrix in MatrixMarket coordinate format (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let nnz: usize = self.rows.iter().map(|r| r.len()).sum();
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.dim, self.dim, nnz)?;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                writeln!(w, "{} {} {}", i + 1, j + 1, crate::util::fmt_g17(v))?;
            }
        }
        Ok(())
    }
}

/// Whether the Schur complement is formed once as a dense matrix or applied
/// implicitly through an interior solve per product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchurMode {
    /// Solve `L_II H = L_IB` once and keep `S = L_BB - L_BI H` densely.
    #[default]
    Explicit,
    /// Keep only the interior factorization; each `S x` costs one solve.
    Implicit,
}

/// Small dense symmetric matrix with row-major storage.
#[derive(Debug, Clone)]
pub struct DenseMat {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMat {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn mul_points(&self, x: &[P2]) -> Vec<P2> {
        self.data
            .chunks_exact(self.n)
            .map(|row| {
                let mut ax = 0.0;
                let mut ay = 0.0;
                for (v, p) in row.iter().zip(x) {
                    ax += v * p[0];
                    ay += v * p[1];
                }
                [ax, ay]
            })
            .collect()
    }
}

/// The Laplacian partitioned by the boundary index set, with the interior
/// block factored and the Schur complement available in the chosen mode.
///
/// Immutable after construction; safe to share across threads.
pub struct BlockSystem {
    /// Boundary indices in boundary-loop order.
    boundary: Vec<usize>,
    /// Interior indices, ascending.
    interior: Vec<usize>,
    /// Dense `L_BB`.
    l_bb: DenseMat,
    /// Rows of `L_BI` in local indices: per boundary row, (interior local, value).
    l_bi: Vec<Vec<(usize, f64)>>,
    mode: SchurMode,
    schur: Option<DenseMat>,
    interior_llt: Option<faer::sparse::linalg::solvers::Llt<usize, f64>>,
    /// Exact 1-norm of the interior block, kept for condition estimates.
    interior_one_norm: f64,
}

/// Partitions `L` by the boundary loop and factors the interior block.
/// In explicit mode the dense Schur complement is assembled immediately.
pub fn partition_blocks(
    lap: &CotanLaplacian,
    boundary_loop: &[usize],
    mode: SchurMode,
) -> Result<BlockSystem, LaplacianError> {
    // Work-stealing changes summation order between runs; solves must be
    // bit-reproducible.
    faer::set_global_parallelism(faer::Par::Seq);
    let nv = lap.dim();
    let boundary = boundary_loop.to_vec();
    let nb = boundary.len();
    let mut local = vec![usize::MAX; nv];
    let mut is_boundary = vec![false; nv];
    for (i, &v) in boundary.iter().enumerate() {
        local[v] = i;
        is_boundary[v] = true;
    }
    let interior: Vec<usize> = (0..nv).filter(|&v| !is_boundary[v]).collect();
    for (i, &v) in interior.iter().enumerate() {
        local[v] = i;
    }
    let ni = interior.len();

    let mut l_bb = DenseMat::zeros(nb);
    let mut l_bi: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nb];
    for (bi, &v) in boundary.iter().enumerate() {
        for &(c, val) in lap.row(v) {
            if is_boundary[c] {
                l_bb.add(bi, local[c], val);
            } else {
                l_bi[bi].push((local[c], val));
            }
        }
    }

    let (interior_llt, interior_one_norm) = if ni > 0 {
        let mut triplets = Vec::new();
        let mut col_sums = vec![0.0; ni];
        for (ii, &v) in interior.iter().enumerate() {
            for &(c, val) in lap.row(v) {
                if !is_boundary[c] {
                    triplets.push(Triplet::new(ii, local[c], val));
                    col_sums[local[c]] += val.abs();
                }
            }
        }
        let one_norm = col_sums.iter().fold(0.0f64, |a, &b| a.max(b));
        let mat = SparseColMat::try_new_from_triplets(ni, ni, &triplets)
            .expect("interior triplets are in range");
        let llt = mat
            .sp_cholesky(Side::Lower)
            .map_err(|_| LaplacianError::SingularInterior {
                condition: f64::INFINITY,
            })?;
        (Some(llt), one_norm)
    } else {
        (None, 1.0)
    };

    let mut system = BlockSystem {
        boundary,
        interior,
        l_bb,
        l_bi,
        mode,
        schur: None,
        interior_llt,
        interior_one_norm,
    };
    if mode == SchurMode::Explicit {
        system.schur = Some(system.assemble_schur());
    }
    Ok(system)
}

impl BlockSystem {
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn mode(&self) -> SchurMode {
        self.mode
    }

    pub fn l_bb(&self) -> &DenseMat {
        &self.l_bb
    }

    pub fn l_bi_row(&self, i: usize) -> &[(usize, f64)] {
        &self.l_bi[i]
    }

    /// Dense Schur complement, available in explicit mode.
    pub fn schur_dense(&self) -> Option<&DenseMat> {
        self.schur.as_ref()
    }

    fn assemble_schur(&self) -> DenseMat {
        let nb = self.boundary.len();
        let ni = self.interior.len();
        let mut s = self.l_bb.clone();
        if ni > 0 {
            // H = L_II^{-1} L_IB, one multi-RHS solve.
            let mut h = Mat::<f64>::zeros(ni, nb);
            for (bi, row) in self.l_bi.iter().enumerate() {
                for &(ii, v) in row {
                    // L_IB = L_BI^T by symmetry.
                    h[(ii, bi)] = v;
                }
            }
            self.interior_llt
                .as_ref()
                .unwrap()
                .solve_in_place(h.as_mut());
            for (a, row) in self.l_bi.iter().enumerate() {
                for &(ii, w) in row {
                    for j in 0..nb {
                        s.add(a, j, -w * h[(ii, j)]);
                    }
                }
            }
            // Symmetrize away the rounding skew of the triple product.
            for a in 0..nb {
                for j in 0..a {
                    let m = 0.5 * (s.get(a, j) + s.get(j, a));
                    s.data[a * nb + j] = m;
                    s.data[j * nb + a] = m;
                }
            }
        }
        s
    }

    /// `S x` for a boundary point list, honoring the configured mode.
    pub fn schur_apply(&self, x: &[P2]) -> Vec<P2> {
        match (&self.schur, self.mode) {
            (Some(s), _) => s.mul_points(x),
            (None, _) => self.schur_apply_implicit(x),
        }
    }

    fn schur_apply_implicit(&self, x: &[P2]) -> Vec<P2> {
        let ni = self.interior.len();
        let mut out = self.l_bb.mul_points(x);
        if ni == 0 {
            return out;
        }
        // h = L_II^{-1} (L_IB x)
        let mut h = Mat::<f64>::zeros(ni, 2);
        for (bi, row) in self.l_bi.iter().enumerate() {
            for &(ii, v) in row {
                h[(ii, 0)] += v * x[bi][0];
                h[(ii, 1)] += v * x[bi][1];
            }
        }
        self.interior_llt
            .as_ref()
            .unwrap()
            .solve_in_place(h.as_mut());
        for (bi, row) in self.l_bi.iter().enumerate() {
            for &(ii, v) in row {
                out[bi][0] -= v * h[(ii, 0)];
                out[bi][1] -= v * h[(ii, 1)];
            }
        }
        out
    }

    /// `<S x, x>` over both coordinates.
    pub fn schur_quad_form(&self, x: &[P2]) -> f64 {
        let sx = self.schur_apply(x);
        x.iter()
            .zip(&sx)
            .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
            .sum()
    }

    /// Harmonic extension: solves `L_II f_I = -L_IB f_B`.
    pub fn solve_interior(&self, f_b: &[P2]) -> Vec<P2> {
        let ni = self.interior.len();
        if ni == 0 {
            return Vec::new();
        }
        let mut rhs = Mat::<f64>::zeros(ni, 2);
        for (bi, row) in self.l_bi.iter().enumerate() {
            for &(ii, v) in row {
                rhs[(ii, 0)] -= v * f_b[bi][0];
                rhs[(ii, 1)] -= v * f_b[bi][1];
            }
        }
        self.interior_llt
            .as_ref()
            .unwrap()
            .solve_in_place(rhs.as_mut());
        (0..ni).map(|i| [rhs[(i, 0)], rhs[(i, 1)]]).collect()
    }

    /// Assembles the full per-vertex point list from boundary values and the
    /// harmonic interior.
    pub fn extend_harmonic(&self, f_b: &[P2], vertex_count: usize) -> Vec<P2> {
        let f_i = self.solve_interior(f_b);
        let mut out = vec![[0.0, 0.0]; vertex_count];
        for (bi, &v) in self.boundary.iter().enumerate() {
            out[v] = f_b[bi];
        }
        for (ii, &v) in self.interior.iter().enumerate() {
            out[v] = f_i[ii];
        }
        out
    }

    /// Cheap 1-norm condition estimate of the interior block: exact
    /// `||A||_1` times a one-solve lower bound on `||A^{-1}||_1`.
    pub fn interior_condition_estimate(&self) -> f64 {
        let ni = self.interior.len();
        let Some(llt) = &self.interior_llt else {
            return 1.0;
        };
        let mut x = Mat::<f64>::from_fn(ni, 1, |_, _| 1.0 / ni as f64);
        llt.solve_in_place(x.as_mut());
        let norm_inv_lower: f64 = (0..ni).map(|i| x[(i, 0)].abs()).sum();
        self.interior_one_norm * norm_inv_lower
    }

    /// Dumps the dense Schur complement in MatrixMarket coordinate format.
    pub fn write_schur_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let s = match &self.schur {
            Some(s) => s.clone(),
            None => self.assemble_schur(),
        };
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", s.n, s.n, s.n * s.n)?;
        for i in 0..s.n {
            for j in 0..s.n {
                writeln!(
                    w,
                    "{} {} {}",
                    i + 1,
                    j + 1,
                    crate::util::fmt_g17(s.get(i, j))
                )?;
            }
        }
        Ok(())
    }
}
