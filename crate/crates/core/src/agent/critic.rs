//! Critic and actor gradient plumbing, generic over precision so the same
//! code path can be checked against finite differences in `f64`.

use alloc::vec::Vec;

use crate::nn::{Cache, FourierKernel, Matrix, Mlp, Params, Scalar};
use crate::{Error, Result};

/// Intermediates of a critic forward pass.
#[derive(Debug, Clone)]
pub struct CriticCache<F> {
    state_dim: usize,
    /// Fourier features fed to the MLP, when the kernel is in use.
    features: Option<Matrix<F>>,
    mlp: Cache<F>,
}

fn critic_input<F: Scalar>(
    kernel: Option<&FourierKernel<F>>,
    states: &Matrix<F>,
    actions: &Matrix<F>,
) -> Result<Matrix<F>> {
    let sa = states.hcat(actions)?;
    match kernel {
        Some(k) => k.features(&sa),
        None => Ok(sa),
    }
}

/// `Q(s, a)` for every row; returns a `batch × 1` matrix.
pub fn critic_predict<F: Scalar>(
    net: &Mlp<F>,
    kernel: Option<&FourierKernel<F>>,
    states: &Matrix<F>,
    actions: &Matrix<F>,
) -> Result<Matrix<F>> {
    net.predict(&critic_input(kernel, states, actions)?)
}

pub fn critic_forward<F: Scalar>(
    net: &Mlp<F>,
    kernel: Option<&FourierKernel<F>>,
    states: &Matrix<F>,
    actions: &Matrix<F>,
) -> Result<(Matrix<F>, CriticCache<F>)> {
    let input = critic_input(kernel, states, actions)?;
    let (q, mlp) = net.forward(&input)?;
    Ok((
        q,
        CriticCache {
            state_dim: states.cols(),
            features: kernel.map(|_| input),
            mlp,
        },
    ))
}

/// `∂L/∂a` given `∂L/∂Q`, through the Fourier map when present.
pub fn critic_action_grad<F: Scalar>(
    net: &Mlp<F>,
    kernel: Option<&FourierKernel<F>>,
    cache: &CriticCache<F>,
    grad_q: &Matrix<F>,
) -> Result<Matrix<F>> {
    let g = net.input_grad(&cache.mlp, grad_q)?;
    let g = match (kernel, &cache.features) {
        (Some(k), Some(v)) => k.backward(v, &g)?,
        (None, None) => g,
        _ => return Err(Error::StaleCache),
    };
    Ok(g.split_cols(cache.state_dim).1)
}

/// Mean squared Bellman error `mean (Q(s,a) − y)²` and its parameter
/// gradient.
pub fn critic_loss_grads<F: Scalar>(
    net: &Mlp<F>,
    kernel: Option<&FourierKernel<F>>,
    states: &Matrix<F>,
    actions: &Matrix<F>,
    targets: &[F],
) -> Result<(f64, Params<F>)> {
    let (q, cache) = critic_forward(net, kernel, states, actions)?;
    if targets.len() != q.rows() {
        return Err(Error::DimensionMismatch {
            what: "critic targets",
            expected: q.rows(),
            got: targets.len(),
        });
    }
    let n = F::of(q.rows() as f64);
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(q.rows(), 1);
    for (i, (&qi, &yi)) in q.as_slice().iter().zip(targets).enumerate() {
        let e = qi - yi;
        loss += e.as_f64() * e.as_f64();
        grad.as_mut_slice()[i] = F::of(2.0) * e / n;
    }
    let loss = loss / q.rows() as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite("critic loss"));
    }
    Ok((loss, net.param_grads(&cache.mlp, &grad)?))
}

/// Gradient of `−J` for a deterministic policy, where the caller maps the
/// batch of actions to `(J, ∂J/∂a)`. Returns `(J, grads)`; feeding the
/// gradients to a minimizer ascends `J`.
pub fn actor_grads_with<F: Scalar>(
    actor: &Mlp<F>,
    states: &Matrix<F>,
    objective: impl FnOnce(&Matrix<F>) -> Result<(f64, Matrix<F>)>,
) -> Result<(f64, Params<F>)> {
    actor_grads_penalized(actor, states, 0.0, objective)
}

/// As [`actor_grads_with`], additionally minimizing
/// `penalty · mean_b ‖z_b‖²` over the actor's pre-tanh outputs `z`. The
/// penalty keeps the head out of saturation, where `∂a/∂z` vanishes.
/// The returned `J` excludes the penalty.
pub fn actor_grads_penalized<F: Scalar>(
    actor: &Mlp<F>,
    states: &Matrix<F>,
    penalty: f64,
    objective: impl FnOnce(&Matrix<F>) -> Result<(f64, Matrix<F>)>,
) -> Result<(f64, Params<F>)> {
    let (actions, cache) = actor.forward(states)?;
    let (j, mut dj_da) = objective(&actions)?;
    if !j.is_finite() {
        return Err(Error::NonFinite("actor objective"));
    }
    dj_da.as_mut_slice().iter_mut().for_each(|g| *g = -*g);
    if penalty == 0.0 {
        return Ok((j, actor.param_grads(&cache, &dj_da)?));
    }
    let mut dz = cache.pre_output().clone();
    let c = F::of(2.0 * penalty / states.rows() as f64);
    dz.as_mut_slice().iter_mut().for_each(|z| *z *= c);
    Ok((j, actor.param_grads_with_preact(&cache, &dj_da, &dz)?))
}

/// Which critic attains `min(Q₁, Q₂)` per row; ties go to the first.
pub fn argmin_critic<F: Scalar>(q1: &Matrix<F>, q2: &Matrix<F>) -> Vec<usize> {
    q1.as_slice()
        .iter()
        .zip(q2.as_slice())
        .map(|(a, b)| if a <= b { 0 } else { 1 })
        .collect()
}

/// `J = mean_b min_j Q_j(s_b, π(s_b))` and the gradient of `−J` w.r.t.
/// the actor parameters.
pub fn actor_objective_grads<F: Scalar>(
    actor: &Mlp<F>,
    critics: [&Mlp<F>; 2],
    kernel: Option<&FourierKernel<F>>,
    states: &Matrix<F>,
    penalty: f64,
) -> Result<(f64, Params<F>)> {
    actor_grads_penalized(actor, states, penalty, |actions| {
        let (q1, c1) = critic_forward(critics[0], kernel, states, actions)?;
        let (q2, c2) = critic_forward(critics[1], kernel, states, actions)?;
        let pick = argmin_critic(&q1, &q2);
        let n = states.rows();
        let inv = F::of(1.0 / n as f64);
        let mut g = [Matrix::zeros(n, 1), Matrix::zeros(n, 1)];
        let mut j = 0.0;
        for (b, &p) in pick.iter().enumerate() {
            let q = if p == 0 { &q1 } else { &q2 };
            j += q.as_slice()[b].as_f64();
            g[p].as_mut_slice()[b] = inv;
        }
        let da1 = critic_action_grad(critics[0], kernel, &c1, &g[0])?;
        let da2 = critic_action_grad(critics[1], kernel, &c2, &g[1])?;
        // Each row belongs to exactly one critic; copy rather than add so
        // the result does not depend on critic order.
        let mut da = da1;
        for (b, &p) in pick.iter().enumerate() {
            if p == 1 {
                da.row_mut(b).copy_from_slice(da2.row(b));
            }
        }
        Ok((j / n as f64, da))
    })
}
