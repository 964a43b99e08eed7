//! Analytic gradients against central finite differences, in f64.

use irsrl_core::agent::{actor_objective_grads, critic_forward, critic_loss_grads, critic_action_grad};
use irsrl_core::nn::{FourierKernel, Head, Matrix, Mlp, NetworkSpec, Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-6;
pub const TOL: f64 = 1e-4;

fn random_matrix(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// Relative error with an absolute floor, so near-zero entries do not
/// dominate.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs().max(b.abs()).max(1e-3))
}

/// Perturbs every parameter of `net` and compares `f` differences with
/// `grads`; returns the worst relative error.
fn check_params(net: &Mlp<f64>, grads: &Params<f64>, f: impl Fn(&Mlp<f64>) -> f64) -> f64 {
    let mut worst = 0.0f64;
    let flat: Vec<f64> = grads.tensors().flatten().copied().collect();
    let mut idx = 0;
    let mut probe = net.clone();
    let n_tensors = net.params.tensors().count();
    for t in 0..n_tensors {
        let len = net.params.tensors().nth(t).unwrap().len();
        for i in 0..len {
            let orig = probe.params.tensors().nth(t).unwrap()[i];
            probe.params.tensors_mut().nth(t).unwrap()[i] = orig + H;
            let up = f(&probe);
            probe.params.tensors_mut().nth(t).unwrap()[i] = orig - H;
            let down = f(&probe);
            probe.params.tensors_mut().nth(t).unwrap()[i] = orig;
            let fd = (up - down) / (2.0 * H);
            worst = worst.max(rel_err(fd, flat[idx]));
            idx += 1;
        }
    }
    worst
}

fn critic_case(fourier: bool, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sd, ad, b) = (4, 3, 5);
    let kernel = fourier.then(|| FourierKernel::<f64>::new(6, sd + ad, 0.3, &mut rng).unwrap());
    let input = kernel.as_ref().map_or(sd + ad, |k| k.output_dim());
    let mut net: Mlp<f64> = Mlp::new(NetworkSpec::new(input, &[8, 6], 1, Head::Linear), &mut rng).unwrap();
    // Nonzero biases keep ReLUs away from their kinks more reliably.
    for l in &mut net.params.layers {
        l.bias.iter_mut().for_each(|x| *x = rng.random_range(0.05..0.2));
    }
    let s = random_matrix(b, sd, -1.0, 1.0, &mut rng);
    let a = random_matrix(b, ad, -3.0, 3.0, &mut rng);
    let y: Vec<f64> = (0..b).map(|_| rng.random_range(-1.0..1.0)).collect();
    let k = kernel.as_ref();
    let loss = |n: &Mlp<f64>| critic_loss_grads(n, k, &s, &a, &y).unwrap().0;
    let (_, grads) = critic_loss_grads(&net, k, &s, &a, &y).unwrap();
    let mut worst = check_params(&net, &grads, loss);

    // Action gradient of Σ Q.
    let (_, cache) = critic_forward(&net, k, &s, &a).unwrap();
    let ones = Matrix::from_vec(b, 1, vec![1.0; b]).unwrap();
    let da = critic_action_grad(&net, k, &cache, &ones).unwrap();
    let sum_q = |aa: &Matrix<f64>| {
        critic_forward(&net, k, &s, aa).unwrap().0.as_slice().iter().sum::<f64>()
    };
    for r in 0..b {
        for c in 0..ad {
            let mut up = a.clone();
            up.row_mut(r)[c] += H;
            let mut down = a.clone();
            down.row_mut(r)[c] -= H;
            let fd = (sum_q(&up) - sum_q(&down)) / (2.0 * H);
            worst = worst.max(rel_err(fd, da.row(r)[c]));
        }
    }
    worst
}

#[test]
fn raw_critic_gradients_match_finite_differences() {
    for seed in 0..3 {
        let e = critic_case(false, seed);
        assert!(e < TOL, "seed {seed}: {e}");
    }
}

#[test]
fn fourier_critic_gradients_match_finite_differences() {
    for seed in 0..3 {
        let e = critic_case(true, seed);
        assert!(e < TOL, "seed {seed}: {e}");
    }
}

fn actor_case(fourier: bool, seed: u64) -> f64 {
    actor_case_penalized(fourier, seed, 0.0)
}

fn actor_case_penalized(fourier: bool, seed: u64, penalty: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sd, ad, b) = (4, 2, 6);
    let kernel = fourier.then(|| FourierKernel::<f64>::new(5, sd + ad, 0.3, &mut rng).unwrap());
    let input = kernel.as_ref().map_or(sd + ad, |k| k.output_dim());
    let critic_spec = NetworkSpec::new(input, &[7], 1, Head::Linear);
    let c1: Mlp<f64> = Mlp::new(critic_spec.clone(), &mut rng).unwrap();
    let c2: Mlp<f64> = Mlp::new(critic_spec, &mut rng).unwrap();
    let mut actor: Mlp<f64> = Mlp::new(NetworkSpec::new(sd, &[8], ad, Head::TanhPi), &mut rng).unwrap();
    // Undo the small-output initialization so tanh is exercised.
    let last = actor.params.layers.len() - 1;
    actor.params.layers[last].weight.iter_mut().for_each(|w| *w *= 100.0);
    let s = random_matrix(b, sd, -1.0, 1.0, &mut rng);
    let k = kernel.as_ref();
    let (_, grads) = actor_objective_grads(&actor, [&c1, &c2], k, &s, penalty).unwrap();
    // The returned gradients are of −J plus the pre-activation penalty.
    check_params(&actor, &grads, |a| {
        let (_, cache) = a.forward(&s).unwrap();
        let z2: f64 = cache.pre_output().as_slice().iter().map(|z| z * z).sum();
        -actor_objective_grads(a, [&c1, &c2], k, &s, penalty).unwrap().0 + penalty * z2 / b as f64
    })
}

#[test]
fn actor_gradients_match_finite_differences() {
    for fourier in [false, true] {
        for seed in 0..3 {
            let e = actor_case(fourier, seed);
            assert!(e < TOL, "fourier {fourier} seed {seed}: {e}");
        }
    }
}

#[test]
fn penalized_actor_gradients_match_finite_differences() {
    for fourier in [false, true] {
        for seed in 0..3 {
            let e = actor_case_penalized(fourier, seed, 0.05);
            assert!(e < TOL, "fourier {fourier} seed {seed}: {e}");
        }
    }
}

/// Worst relative error per network kind over the seeds above.
#[allow(dead_code)]
pub fn worst_errors() -> Vec<(&'static str, f64)> {
    let worst = |f: &dyn Fn(u64) -> f64| (0..3).map(f).fold(0.0f64, f64::max);
    vec![
        ("critic-raw", worst(&|s| critic_case(false, s))),
        ("critic-ff", worst(&|s| critic_case(true, s))),
        ("actor", worst(&|s| actor_case(false, s).max(actor_case(true, s)).max(actor_case_penalized(true, s, 0.05)))),
    ]
}
