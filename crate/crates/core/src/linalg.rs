//! Exact rational linear algebra over arbitrary-precision rationals.
//!
//! Everything here is dense: the matrices involved are (species × reactions)
//! sized, so a few dozen rows and columns at most. The sparse structure of a
//! model lives in the state graph, not here.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, always in lowest terms with a positive denominator.
pub type Rat = BigRational;

/// Dense rational column vector.
pub type RatVector = Vec<Rat>;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_vec(values: &[i64]) -> RatVector {
    values.iter().map(|&v| rat(v)).collect()
}

pub fn l1_norm(v: &[Rat]) -> Rat {
    v.iter().fold(Rat::zero(), |acc, x| acc + x.abs())
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

pub fn is_zero_vec(v: &[Rat]) -> bool {
    v.iter().all(Zero::is_zero)
}

pub fn sub_vec(a: &[Rat], b: &[Rat]) -> RatVector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add_vec(a: &[Rat], b: &[Rat]) -> RatVector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale_vec(v: &[Rat], k: &Rat) -> RatVector {
    v.iter().map(|x| x * k).collect()
}

/// Dense row-major rational matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    /// Builds a matrix from rows; every row must have the same length.
    pub fn from_rows(rows: Vec<RatVector>) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        Self {
            rows: n_rows,
            cols: n_cols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| rat_vec(r)).collect())
    }

    /// Builds an `rows × columns.len()` matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[RatVector]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "column {j} has wrong length");
            for (i, x) in c.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        m
    }

    pub fn column_vector(v: &[Rat]) -> Self {
        Self::from_columns(v.len(), &[v.to_vec()])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> RatVector {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn columns(&self) -> Vec<RatVector> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> RatVector {
        assert_eq!(
            self.cols,
            v.len(),
            "dimension mismatch in matrix-vector product"
        );
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| -a).collect(),
        }
    }

    /// `[self | other]`
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hstack needs equal row counts");
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].clone();
            }
            for j in 0..other.cols {
                out[(i, self.cols + j)] = other[(i, j)].clone();
            }
        }
        out
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let columns: Vec<RatVector> = cols.iter().map(|&j| self.column(j)).collect();
        Self::from_columns(self.rows, &columns)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_rows_with_width(
            rows.iter().map(|&i| self.row(i).to_vec()).collect(),
            self.cols,
        )
    }

    fn from_rows_with_width(rows: Vec<RatVector>, cols: usize) -> Self {
        let n = rows.len();
        let data: Vec<Rat> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), n * cols);
        Self {
            rows: n,
            cols,
            data,
        }
    }

    pub fn rank(&self) -> usize {
        rref(self).1.len()
    }
}

impl Index<(usize, usize)> for RatMatrix {
    type Output = Rat;

    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let cells: Vec<String> = self.row(i).iter().map(ToString::to_string).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Reduced row-echelon form and the (strictly increasing) pivot columns.
pub fn rref(a: &RatMatrix) -> (RatMatrix, Vec<usize>) {
    let mut m = a.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..m.cols {
        if row == m.rows {
            break;
        }
        let Some(p) = (row..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
            continue;
        };
        if p != row {
            for j in 0..m.cols {
                m.data.swap(p * m.cols + j, row * m.cols + j);
            }
        }
        let inv = m[(row, col)].recip();
        for j in col..m.cols {
            let v = &m[(row, j)] * &inv;
            m[(row, j)] = v;
        }
        for r in 0..m.rows {
            if r == row || m[(r, col)].is_zero() {
                continue;
            }
            let factor = m[(r, col)].clone();
            for j in col..m.cols {
                if m[(row, j)].is_zero() {
                    continue;
                }
                let v = &factor * &m[(row, j)];
                m[(r, j)] -= v;
            }
        }
        pivots.push(col);
        row += 1;
    }
    (m, pivots)
}

/// Basis of `{ x | A x = 0 }`, one vector per free column of the RREF.
pub fn nullspace(a: &RatMatrix) -> Vec<RatVector> {
    let (r, pivots) = rref(a);
    let free: Vec<usize> = (0..a.cols()).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rat::zero(); a.cols()];
            v[f] = Rat::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -r[(i, f)].clone();
            }
            v
        })
        .collect()
}

/// Inverse of a square matrix, or `None` when singular.
pub fn inverse(a: &RatMatrix) -> Option<RatMatrix> {
    assert_eq!(a.rows(), a.cols(), "inverse of a non-square matrix");
    let n = a.rows();
    let (r, pivots) = rref(&a.hstack(&RatMatrix::identity(n)));
    if pivots.len() < n || pivots[n - 1] >= n {
        return None;
    }
    let mut inv = RatMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv[(i, j)] = r[(i, n + j)].clone();
        }
    }
    Some(inv)
}

/// Full-rank factorization `M = C·F`: `C` holds the pivot columns of `M`,
/// `F` the nonzero rows of its RREF.
pub fn rank_factorization(m: &RatMatrix) -> (RatMatrix, RatMatrix) {
    let (r, pivots) = rref(m);
    let c = m.select_columns(&pivots);
    let f = r.select_rows(&(0..pivots.len()).collect::<Vec<_>>());
    (c, f)
}

/// Moore–Penrose pseudoinverse, `M⁺ = Fᵀ(F Fᵀ)⁻¹(Cᵀ C)⁻¹Cᵀ` from the rank factorization.
pub fn pseudoinverse(m: &RatMatrix) -> RatMatrix {
    let (c, f) = rank_factorization(m);
    if c.cols() == 0 {
        return RatMatrix::zeros(m.cols(), m.rows());
    }
    let ft = f.transpose();
    let ct = c.transpose();
    let ffi = inverse(&f.mul(&ft)).expect("F Fᵀ has full rank");
    let cci = inverse(&ct.mul(&c)).expect("Cᵀ C has full rank");
    ft.mul(&ffi).mul(&cci).mul(&ct)
}

/// Minimum-norm exact solution `A⁺ b` of `A x = b`, or `None` if inconsistent.
pub fn solve_min_norm(a: &RatMatrix, b: &[Rat]) -> Option<RatVector> {
    assert_eq!(a.rows(), b.len(), "right-hand side has wrong length");
    let x = pseudoinverse(a).mul_vec(b);
    (a.mul_vec(&x) == b).then_some(x)
}

/// Orthogonal projection onto the column span of `gen`: `gen (genᵀ gen)⁺ genᵀ`.
pub fn projection_matrix(gen: &RatMatrix) -> RatMatrix {
    if gen.cols() == 0 {
        return RatMatrix::zeros(gen.rows(), gen.rows());
    }
    let gt = gen.transpose();
    gen.mul(&pseudoinverse(&gt.mul(gen))).mul(&gt)
}

/// Residual of a vector against an affine space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Residual {
    /// `v + eps` lies in the space.
    pub eps: RatVector,
    /// L1 norm of `eps`.
    pub dist: Rat,
}

/// Affine space `{ gen·x + offset }` with its orthogonal projection cached.
#[derive(Clone, Debug)]
pub struct AffineSpace {
    gen: RatMatrix,
    offset: RatVector,
    proj: RatMatrix,
    dim: usize,
}

impl AffineSpace {
    /// `gen` holds a (not necessarily independent) generating set as columns.
    pub fn new(gen: RatMatrix, offset: RatVector) -> Self {
        assert_eq!(
            gen.rows(),
            offset.len(),
            "offset length must match ambient dimension"
        );
        let proj = projection_matrix(&gen);
        let dim = gen.rank();
        Self {
            gen,
            offset,
            proj,
            dim,
        }
    }

    pub fn from_generators(ambient: usize, generators: &[RatVector], offset: RatVector) -> Self {
        Self::new(RatMatrix::from_columns(ambient, generators), offset)
    }

    pub fn full(ambient: usize) -> Self {
        Self::new(RatMatrix::identity(ambient), vec![Rat::zero(); ambient])
    }

    pub fn point(v: RatVector) -> Self {
        Self::new(RatMatrix::zeros(v.len(), 0), v)
    }

    pub fn ambient(&self) -> usize {
        self.offset.len()
    }

    /// Dimension of the space (rank of the generating set).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &RatMatrix {
        &self.gen
    }

    pub fn offset(&self) -> &RatVector {
        &self.offset
    }

    pub fn projection(&self) -> &RatMatrix {
        &self.proj
    }

    /// `eps = P(v − b) − (v − b)` and its L1 norm.
    pub fn residual(&self, v: &[Rat]) -> Residual {
        let d = sub_vec(v, &self.offset);
        let eps = sub_vec(&self.proj.mul_vec(&d), &d);
        let dist = l1_norm(&eps);
        Residual { eps, dist }
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.residual(v).dist.is_zero()
    }

    /// Whether `other ⊆ self`.
    pub fn contains_space(&self, other: &AffineSpace) -> bool {
        if !self.contains(&other.offset) {
            return false;
        }
        other.gen.columns().iter().all(|g| {
            let moved = add_vec(&self.offset, g);
            self.contains(&moved)
        })
    }

    /// Mutual containment.
    pub fn equivalent(&self, other: &AffineSpace) -> bool {
        self.contains_space(other) && other.contains_space(self)
    }

    /// Intersection via the stacked system `[Ma | −Mb] x̂ = bb − ba`.
    pub fn intersect(&self, other: &AffineSpace) -> Option<AffineSpace> {
        assert_eq!(
            self.ambient(),
            other.ambient(),
            "spaces live in different ambients"
        );
        let m = self.ambient();
        let p = self.gen.cols();
        let a = self.gen.hstack(&other.gen.neg());
        let rhs = sub_vec(&other.offset, &self.offset);
        let xhat = solve_min_norm(&a, &rhs)?;
        let offset = add_vec(&self.gen.mul_vec(&xhat[..p]), &self.offset);
        let generators: Vec<RatVector> = nullspace(&a)
            .into_iter()
            .map(|z| self.gen.mul_vec(&z[..p]))
            .filter(|g| !is_zero_vec(g))
            .collect();
        Some(AffineSpace::from_generators(m, &generators, offset))
    }

    /// Integer-scaled residual evaluator for lattice points.
    pub fn lattice_residual(&self) -> LatticeResidual {
        LatticeResidual::new(self)
    }
}

/// Residual distances of integer vectors against one affine space, computed
/// with the projection scaled to integers: `L·eps = Q s − c` where
/// `Q = L(P − I)` and `c = L(P − I) b`.
#[derive(Clone, Debug)]
pub struct LatticeResidual {
    space: AffineSpace,
    scale: BigInt,
    q: Option<Vec<i128>>,
    c: Option<Vec<i128>>,
    m: usize,
}

impl LatticeResidual {
    fn new(space: &AffineSpace) -> Self {
        let m = space.ambient();
        let p_minus_i = space.proj.sub(&RatMatrix::identity(m));
        let c_rat = p_minus_i.mul_vec(&space.offset);
        let scale = p_minus_i
            .data
            .iter()
            .chain(&c_rat)
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let to_int = |x: &Rat| {
            (x * Rat::from_integer(scale.clone()))
                .to_integer()
                .to_i128()
        };
        let q: Option<Vec<i128>> = p_minus_i.data.iter().map(to_int).collect();
        let c: Option<Vec<i128>> = c_rat.iter().map(to_int).collect();
        Self {
            space: space.clone(),
            scale,
            q,
            c,
            m,
        }
    }

    pub fn space(&self) -> &AffineSpace {
        &self.space
    }

    /// L1 residual distance of an integer point.
    pub fn dist(&self, s: &[i64]) -> Rat {
        if let Some(num) = self.scaled_dist(s) {
            return Rat::new(BigInt::from(num), self.scale.clone());
        }
        let v: RatVector = s.iter().map(|&x| rat(x)).collect();
        self.space.residual(&v).dist
    }

    pub fn is_zero(&self, s: &[i64]) -> bool {
        match self.scaled_dist(s) {
            Some(num) => num == 0,
            None => self.dist(s).is_zero(),
        }
    }

    fn scaled_dist(&self, s: &[i64]) -> Option<i128> {
        let (q, c) = (self.q.as_ref()?, self.c.as_ref()?);
        debug_assert_eq!(s.len(), self.m);
        let mut total: i128 = 0;
        for i in 0..self.m {
            let mut acc: i128 = 0;
            for (j, &x) in s.iter().enumerate() {
                let qij = q[i * self.m + j];
                if qij != 0 {
                    acc = acc.checked_add(qij.checked_mul(x as i128)?)?;
                }
            }
            acc = acc.checked_sub(c[i])?;
            total = total.checked_add(acc.checked_abs()?)?;
        }
        Some(total)
    }
}

/// Renders a rational as a decimal-ish string for reports (`p/q` when not an integer).
pub fn rat_to_string(x: &Rat) -> String {
    x.to_string()
}

/// Nearest `f64` to a rational, for diagnostics only.
pub fn rat_to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
