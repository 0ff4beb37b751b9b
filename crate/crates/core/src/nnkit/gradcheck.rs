use alloc::vec::Vec;

use super::{Tape, Tensor, Var};
use crate::{Error, Result};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Gradients smaller than this are compared in absolute rather than
/// relative terms, so round-off on near-zero entries does not dominate.
const REL_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub analytic: Vec<Vec<f64>>,
    pub numeric: Vec<Vec<f64>>,
    pub max_rel_error: f64,
    /// `(parameter, element)` where the worst error occurred.
    pub worst: (usize, usize),
    pub tolerance: f64,
    pub passed: bool,
}

/// Compare the tape gradient of a scalar loss against central finite
/// differences, one parameter element at a time.
///
/// `loss_fn` receives a fresh tape with `params` already loaded as leaves (in
/// order) and must return a single-element node.
pub fn grad_check<F>(loss_fn: F, params: &[Tensor], tolerance: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let eval = |ps: &[Tensor]| -> Result<(Tape, Vec<Var>, Var)> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ps.iter().map(|p| tape.leaf(p.clone())).collect();
        let out = loss_fn(&mut tape, &vars)?;
        if tape.value(out).len() != 1 {
            return Err(Error::shape("grad_check", tape.value(out).shape(), &[1]));
        }
        Ok((tape, vars, out))
    };

    let (mut tape, vars, out) = eval(params)?;
    tape.backward(out);
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .zip(params)
        .map(|(v, p)| {
            tape.grad(*v)
                .map(|g| g.to_vec())
                .unwrap_or_else(|| alloc::vec![0.0; p.len()])
        })
        .collect();

    let mut work: Vec<Tensor> = params.to_vec();
    let mut numeric = Vec::with_capacity(params.len());
    let mut max_rel_error = 0.0f64;
    let mut worst = (0, 0);
    for pi in 0..params.len() {
        let mut col = Vec::with_capacity(params[pi].len());
        for ei in 0..params[pi].len() {
            let orig = work[pi].data()[ei];
            work[pi].data_mut()[ei] = orig + FD_STEP;
            let (t, _, o) = eval(&work)?;
            let plus = t.scalar(o);
            work[pi].data_mut()[ei] = orig - FD_STEP;
            let (t, _, o) = eval(&work)?;
            let minus = t.scalar(o);
            work[pi].data_mut()[ei] = orig;

            let n = (plus - minus) / (2.0 * FD_STEP);
            let a = analytic[pi][ei];
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR);
            if !rel.is_finite() {
                return Err(Error::NonFinite(alloc::format!("grad_check parameter {pi}")));
            }
            if rel > max_rel_error {
                max_rel_error = rel;
                worst = (pi, ei);
            }
            col.push(n);
        }
        numeric.push(col);
    }

    Ok(GradCheckReport {
        analytic,
        numeric,
        max_rel_error,
        worst,
        tolerance,
        passed: max_rel_error < tolerance,
    })
}
