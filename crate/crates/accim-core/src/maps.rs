//! Built-in map catalog.

use crate::scalar::{real, Scalar};
use crate::system::{AffineBranch, DomainBox, OpenSystem};

/// Tent map with slope 3 on `[0, 1]`: `3x` below `1/2`, `3(1-x)` above.
/// The middle third of the domain escapes in one step.
pub fn tent3<F: Scalar>() -> OpenSystem<F> {
    let domain = DomainBox::new(vec![F::zero()], vec![F::one()]).unwrap();
    let left = AffineBranch::new(
        DomainBox::new(vec![F::zero()], vec![real(0.5)]).unwrap(),
        vec![real(3.0)],
        vec![F::zero()],
    )
    .unwrap();
    let right = AffineBranch::new(
        DomainBox::new(vec![real(0.5)], vec![F::one()]).unwrap(),
        vec![real(-3.0)],
        vec![real(3.0)],
    )
    .unwrap();
    OpenSystem::new(domain, vec![left, right]).unwrap()
}

/// Linear saddle `(x, y) -> (2x, 0.8y)` on `[-1, 1]^2`; expansion along x
/// drives escape, contraction along y traps mass near the x-axis.
pub fn saddle<F: Scalar>() -> OpenSystem<F> {
    let domain = DomainBox::new(vec![real(-1.0), real(-1.0)], vec![F::one(), F::one()]).unwrap();
    let branch = AffineBranch::new(
        domain.clone(),
        vec![real(2.0), real(0.8)],
        vec![F::zero(), F::zero()],
    )
    .unwrap();
    OpenSystem::new(domain, vec![branch]).unwrap()
}

/// Looks up a built-in map by name.
pub fn by_name<F: Scalar>(name: &str) -> Option<OpenSystem<F>> {
    match name {
        "tent3" => Some(tent3()),
        "saddle" => Some(saddle()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_lookup() {
        assert!(by_name::<f64>("tent3").is_some());
        assert!(by_name::<f64>("saddle").is_some());
        assert!(by_name::<f64>("anosov").is_none());
    }
}
