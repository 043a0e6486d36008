//! Time-varying affine recursions `x_t = A_t x_{t-1} + b_t`.

mod permutation;
mod trajectory;
mod transition;

pub use permutation::Permutation;
pub use trajectory::StateTrajectory;
pub use trajectory::relative_diff;
pub use transition::{TransitionKind, TransitionMatrix};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::pscan::{self, ScanOperator, ScanOptions};

/// The affine map `x -> A x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineElement {
    pub a: TransitionMatrix,
    pub b: Vec<f64>,
}

impl AffineElement {
    pub fn new(a: TransitionMatrix, b: Vec<f64>) -> Result<Self> {
        check_dim(a.dim(), b.len())?;
        Ok(Self { a, b })
    }

    pub fn identity(dim: usize) -> Self {
        Self { a: TransitionMatrix::Identity(dim), b: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.a.apply(x)?;
        for (yi, bi) in y.iter_mut().zip(&self.b) {
            *yi += bi;
        }
        Ok(y)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.iter().all(|v| v.is_finite())
    }
}

/// The map that applies `earlier` then `later`:
/// `(A_l A_e, A_l b_e + b_l)`.
pub fn compose_affine(earlier: &AffineElement, later: &AffineElement) -> Result<AffineElement> {
    check_dim(later.dim(), earlier.dim())?;
    let a = later.a.matmul(&earlier.a)?;
    let mut b = later.a.apply(&earlier.b)?;
    for (bi, li) in b.iter_mut().zip(&later.b) {
        *bi += li;
    }
    Ok(AffineElement { a, b })
}

/// Scan operator over affine elements of a fixed dimension.
#[derive(Debug, Clone, Copy)]
pub struct AffineCompose {
    pub dim: usize,
}

impl ScanOperator<AffineElement> for AffineCompose {
    fn combine(&self, earlier: &AffineElement, later: &AffineElement) -> AffineElement {
        compose_affine(earlier, later).expect("scan elements share a validated dimension")
    }

    fn identity(&self) -> Option<AffineElement> {
        Some(AffineElement::identity(self.dim))
    }
}

fn validate(x0: &[f64], elems: &[AffineElement]) -> Result<()> {
    if elems.is_empty() {
        return Err(Error::EmptyScan);
    }
    check_finite(x0, "initial state")?;
    for e in elems {
        check_dim(x0.len(), e.dim())?;
        check_dim(x0.len(), e.a.dim())?;
        if !e.is_finite() {
            return Err(Error::NonFinite("affine element"));
        }
    }
    Ok(())
}

pub fn evaluate_lds_sequential(x0: &[f64], elems: &[AffineElement]) -> Result<StateTrajectory> {
    validate(x0, elems)?;
    let d = x0.len();
    let mut states = Vec::with_capacity(elems.len() * d);
    let mut x = x0.to_vec();
    for e in elems {
        x = e.apply(&x)?;
        states.extend_from_slice(&x);
    }
    StateTrajectory::new(x0.to_vec(), states)
}

pub fn evaluate_lds_parallel(x0: &[f64], elems: &[AffineElement]) -> Result<StateTrajectory> {
    evaluate_lds_parallel_with(x0, elems, ScanOptions::default())
}

pub fn evaluate_lds_parallel_with(
    x0: &[f64],
    elems: &[AffineElement],
    options: ScanOptions,
) -> Result<StateTrajectory> {
    validate(x0, elems)?;
    let op = AffineCompose { dim: x0.len() };
    let prefixes = pscan::scan_with(elems, &op, options)?;
    if !prefixes.iter().all(AffineElement::is_finite) {
        return Err(Error::ScanOverflow);
    }
    let mut states = Vec::with_capacity(elems.len() * x0.len());
    for p in &prefixes {
        states.extend(p.apply(x0)?);
    }
    if !states.iter().all(|v| v.is_finite()) {
        return Err(Error::ScanOverflow);
    }
    StateTrajectory::new(x0.to_vec(), states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;

    fn scalar(a: f64, b: f64) -> AffineElement {
        AffineElement::new(TransitionMatrix::ScaledIdentity { dim: 1, scale: a }, vec![b]).unwrap()
    }

    #[test]
    fn compose_examples() {
        let m = AffineElement::new(
            TransitionMatrix::Dense(DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]])),
            vec![0.5, -1.0],
        )
        .unwrap();
        assert_eq!(compose_affine(&AffineElement::identity(2), &m).unwrap(), m);

        let c = compose_affine(&scalar(2.0, 1.0), &scalar(3.0, 0.5)).unwrap();
        assert_eq!(c.a.densify()[(0, 0)], 6.0);
        assert_eq!(c.b, vec![3.5]);

        let zero_later = AffineElement::new(TransitionMatrix::Zero(2), vec![7.0, 8.0]).unwrap();
        assert_eq!(compose_affine(&m, &zero_later).unwrap(), zero_later);

        assert!(compose_affine(&scalar(1.0, 1.0), &m).is_err());
    }

    #[test]
    fn sequential_examples() {
        let doubling: Vec<_> = (0..3).map(|_| scalar(2.0, 0.0)).collect();
        let tr = evaluate_lds_sequential(&[1.0], &doubling).unwrap();
        assert_eq!(tr.states(), &[2.0, 4.0, 8.0]);
        let par = evaluate_lds_parallel(&[1.0], &doubling).unwrap();
        assert_eq!(par.states(), &[2.0, 4.0, 8.0]);

        let ident: Vec<_> = (0..4).map(|_| AffineElement::identity(2)).collect();
        let tr = evaluate_lds_sequential(&[1.0, -2.0], &ident).unwrap();
        assert_eq!(tr.states(), &[1.0, -2.0].repeat(4)[..]);

        let counting = vec![scalar(1.0, 1.0), scalar(1.0, 1.0)];
        assert_eq!(evaluate_lds_sequential(&[0.0], &counting).unwrap().states(), &[1.0, 2.0]);
    }

    #[test]
    fn single_step() {
        let e = scalar(-3.0, 0.25);
        let tr = evaluate_lds_parallel(&[2.0], std::slice::from_ref(&e)).unwrap();
        assert_eq!(tr.states(), &[-5.75]);
    }

    #[test]
    fn errors() {
        assert_eq!(evaluate_lds_parallel(&[0.0], &[]), Err(Error::EmptyScan));
        assert!(matches!(
            evaluate_lds_sequential(&[0.0, 0.0], &[scalar(1.0, 1.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(evaluate_lds_sequential(&[f64::NAN], &[scalar(1.0, 1.0)]).is_err());
        let huge: Vec<_> = (0..64).map(|_| scalar(1e200, 0.0)).collect();
        assert_eq!(evaluate_lds_parallel(&[1.0], &huge), Err(Error::ScanOverflow));
    }
}
