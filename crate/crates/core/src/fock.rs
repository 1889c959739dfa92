//! Dense linear algebra on the single-mode Fock space truncated to `dim`
//! photon-number states `|0⟩ … |dim-1⟩`.
//!
//! Vectors and operators are plain nalgebra containers indexed by photon
//! number. Everything here is a pure function of its inputs.

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type FockVector = DVector<Complex64>;
pub type FockMatrix = DMatrix<Complex64>;

/// Relative Frobenius tolerance on `‖M − M†‖ / ‖M‖` for Hermitian inputs.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues below `RANK_TOL · λ_max` are treated as outside the support.
pub const RANK_TOL: f64 = 1e-10;
/// Negative eigenvalues above `-PSD_TOL · λ_max` are round-off and clipped.
pub const PSD_TOL: f64 = 1e-10;
/// Relative magnitude below which matrix entries are flushed to zero before
/// an eigendecomposition.
const FLUSH_REL: f64 = 1e-30;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Truncation dimension that keeps the Poisson tail of every coherent state
/// with `|α|² ≤ max_abs_sq` below 1e-12.
pub fn auto_dim(max_abs_sq: f64) -> usize {
    let n = max_abs_sq.max(0.0);
    (n.ceil() + 10.0 * (n + 1.0).sqrt() + 25.0).ceil() as usize
}

/// Amplitudes `e^{-|α|²/2} α^n / √n!` for `n < dim`.
pub fn coherent_vector(alpha: Complex64, dim: usize) -> Result<FockVector> {
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::NonFinite("coherent amplitude"));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    let mut v = FockVector::zeros(dim);
    let mut amp = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    v[0] = amp;
    for n in 1..dim {
        amp = amp * alpha / (n as f64).sqrt();
        v[n] = amp;
    }
    Ok(v)
}

/// Probability mass of `|α⟩` outside the first `dim` Fock states, summed
/// directly from the Poisson series so tiny tails keep full precision.
pub fn coherent_tail_mass(alpha: Complex64, dim: usize) -> f64 {
    let mean = alpha.norm_sqr();
    if mean == 0.0 {
        return if dim == 0 { 1.0 } else { 0.0 };
    }
    // log of the Poisson weight at n = dim
    let ln_term = |n: usize| -> f64 {
        let n = n as f64;
        -mean + n * mean.ln() - ln_gamma(n + 1.0)
    };
    let mut n = dim;
    let mut term = ln_term(n).exp();
    let mut total = 0.0;
    loop {
        total += term;
        n += 1;
        term *= mean / n as f64;
        if (n as f64) > mean && term < total * 1e-17 {
            break;
        }
        if n > dim + 100_000 {
            break;
        }
    }
    total.min(1.0)
}

// Lanczos approximation (g = 7, n = 9); accurate to ~1e-15 for x ≥ 0.5.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Truncated annihilation operator: `⟨n−1| a |n⟩ = √n`.
pub fn annihilation(dim: usize) -> FockMatrix {
    let mut a = FockMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Diagonal number operator `a†a`.
pub fn number_operator(dim: usize) -> FockMatrix {
    FockMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(i as f64, 0.0)
        } else {
            ZERO
        }
    })
}

/// Relative anti-Hermitian part `‖M − M†‖_F / ‖M‖_F` (0 for the zero matrix).
pub fn hermitian_deviation(m: &FockMatrix) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / scale
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the eigenvalue order.
    pub eigenvectors: FockMatrix,
}

impl EigDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> FockVector {
        self.eigenvectors.column(i).into_owned()
    }

    /// `V f(Λ) V†` for a real spectral function `f`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> FockMatrix {
        self.apply_complex(|x| Complex64::new(f(x), 0.0))
    }

    pub fn apply_complex(&self, f: impl Fn(f64) -> Complex64) -> FockMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let s = f(lam);
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> FockMatrix {
        self.apply(|x| x)
    }
}

pub fn herm_eig(m: &FockMatrix) -> Result<EigDecomposition> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix entry"));
    }
    let deviation = hermitian_deviation(m);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let dim = m.nrows();
    let largest = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if largest == 0.0 {
        return Ok(EigDecomposition {
            eigenvalues: vec![0.0; dim],
            eigenvectors: FockMatrix::identity(dim, dim),
        });
    }
    // Entries of e.g. |α⟩⟨α| at small α span hundreds of decades; their
    // squares underflow inside the Householder reduction and give NaN.
    // Anything below FLUSH_REL of the largest entry is far below ε‖M‖.
    // A power-of-two scale keeps the normalisation itself exact.
    let scale = largest.log2().floor().exp2();
    let sym = (m + m.adjoint()).scale(0.5 / scale).map(|z| {
        if z.norm() < FLUSH_REL {
            Complex64::new(0.0, 0.0)
        } else {
            z
        }
    });
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 1000 * dim)
        .ok_or(Error::EigenNoConvergence { dim })?;
    if eig.eigenvalues.iter().any(|l| !l.is_finite())
        || eig
            .eigenvectors
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::Numerical(format!(
            "eigendecomposition of a {dim}x{dim} matrix produced non-finite values"
        )));
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| scale * eig.eigenvalues[i]).collect();
    let mut eigenvectors = FockMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Square root and pseudo-inverse square root of a PSD matrix, both
/// restricted to the numerical support.
#[derive(Debug, Clone)]
pub struct SpectralRoots {
    pub sqrt: FockMatrix,
    pub pinv_sqrt: FockMatrix,
    /// Orthogonal projector onto the retained eigenvectors.
    pub projector: FockMatrix,
    pub rank: usize,
    pub eig: EigDecomposition,
}

pub fn sqrt_and_pinv_sqrt(m: &FockMatrix, rank_tol: f64) -> Result<SpectralRoots> {
    let eig = herm_eig(m)?;
    let lam_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    if let Some(&lowest) = eig.eigenvalues.last() {
        if lowest < -PSD_TOL * lam_max.max(f64::MIN_POSITIVE) && lowest < 0.0 {
            return Err(Error::NotPositive { eigenvalue: lowest });
        }
    }
    let cutoff = rank_tol * lam_max;
    let keep = |lam: f64| lam_max > 0.0 && lam > cutoff;
    let rank = eig.eigenvalues.iter().filter(|&&l| keep(l)).count();
    let sqrt = eig.apply(|l| if keep(l) { l.sqrt() } else { 0.0 });
    let pinv_sqrt = eig.apply(|l| if keep(l) { 1.0 / l.sqrt() } else { 0.0 });
    let projector = eig.apply(|l| if keep(l) { 1.0 } else { 0.0 });
    Ok(SpectralRoots {
        sqrt,
        pinv_sqrt,
        projector,
        rank,
        eig,
    })
}

/// Entrywise complex conjugate in the Fock basis.
pub fn conj_in_fock_basis(m: &FockMatrix) -> FockMatrix {
    m.map(|z| z.conj())
}

/// Truncated displacement `exp(α a† − ᾱ a)`.
///
/// The generator is anti-Hermitian, so it is exponentiated through the
/// eigendecomposition of the Hermitian matrix `i(α a† − ᾱ a)`.
pub fn displacement(alpha: Complex64, dim: usize) -> Result<FockMatrix> {
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::NonFinite("displacement amplitude"));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    if auto_dim(alpha.norm_sqr()) > dim {
        warn!(
            "displacement by |α|² = {:.3} in dimension {} is affected by truncation",
            alpha.norm_sqr(),
            dim
        );
    }
    let a = annihilation(dim);
    let generator = a.adjoint() * alpha - &a * alpha.conj();
    let hermitian = generator * Complex64::i();
    let eig = herm_eig(&hermitian)?;
    // exp(G) = exp(-i H)
    Ok(eig.apply_complex(|l| Complex64::new(0.0, -l).exp()))
}

pub(crate) fn trace(m: &FockMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `tr(A B)` without forming the product.
pub(crate) fn trace_of_product(a: &FockMatrix, b: &FockMatrix) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}
