use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stockevents_core::embeddings::sgns_pair;
use stockevents_core::models::{
    AlignedSample, Classifier, EbcnnConfig, EbcnnParams, ForecastWindow, LstmForecaster, ShortTermConfig,
    ShortTermParams,
};
use stockevents_core::nnkit::{grad_check, Parameters, Tape, Tensor, Var};
use stockevents_core::ntn::{self, NtnParams, NtnVars};
use stockevents_core::NaiveDate;

const TOL: f64 = 1e-4;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random(shape: &[usize], r: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn check<F>(params: &[Tensor], f: F)
where
    F: Fn(&mut Tape, &[Var]) -> stockevents_core::Result<Var>,
{
    let report = grad_check(f, params, TOL).unwrap();
    assert!(
        report.passed,
        "max rel error {} at {:?}",
        report.max_rel_error, report.worst
    );
}

fn weighted_sum(t: &mut Tape, x: Var, seed: u64) -> Var {
    let n = t.value(x).len();
    let mut r = rng(seed);
    let w = t.leaf(Tensor::new(t.value(x).shape(), (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap());
    let p = t.mul(x, w).unwrap();
    t.sum(p)
}

#[test]
fn elementwise_ops() {
    let mut r = rng(1);
    let ps = [random(&[6], &mut r), random(&[6], &mut r)];
    check(&ps, |t, v| {
        let a = t.add(v[0], v[1])?;
        let s = t.sub(a, v[1])?;
        let m = t.mul(s, v[1])?;
        let k = t.scale(m, -1.7);
        let k = t.add_scalar(k, 0.3);
        let sg = t.sigmoid(k);
        let th = t.tanh(v[0]);
        let q = t.mul(sg, th)?;
        Ok(weighted_sum(t, q, 9))
    });
}

#[test]
fn relu_away_from_the_kink() {
    let ps = [Tensor::vector(vec![-1.2, -0.3, 0.4, 2.0])];
    check(&ps, |t, v| {
        let y = t.relu(v[0]);
        Ok(weighted_sum(t, y, 2))
    });
}

#[test]
fn matmul_and_matvec() {
    let mut r = rng(2);
    let ps = [random(&[3, 4], &mut r), random(&[4, 2], &mut r), random(&[4], &mut r)];
    check(&ps, |t, v| {
        let y = t.matmul(v[0], v[1])?;
        let a = weighted_sum(t, y, 3);
        let z = t.matvec(v[0], v[2])?;
        let b = weighted_sum(t, z, 4);
        t.add(a, b)
    });
}

#[test]
fn softmax_concat_pick() {
    let mut r = rng(3);
    let ps = [random(&[3], &mut r), random(&[2], &mut r)];
    check(&ps, |t, v| {
        let c = t.concat(&[v[0], v[1]])?;
        let s = t.softmax(c)?;
        let p = t.pick(s, 1)?;
        let nl = t.neg_log_pick(s, 3)?;
        t.add(p, nl)
    });
}

#[test]
fn dot_sum_squares() {
    let mut r = rng(4);
    let ps = [random(&[5], &mut r), random(&[5], &mut r)];
    check(&ps, |t, v| {
        let d = t.dot(v[0], v[1])?;
        let s = t.sum_squares(v[0]);
        let u = t.sum(v[1]);
        let a = t.add(d, s)?;
        t.add(a, u)
    });
}

#[test]
fn bilinear() {
    let mut r = rng(5);
    let ps = [random(&[3], &mut r), random(&[2, 3, 4], &mut r), random(&[4], &mut r)];
    check(&ps, |t, v| {
        let y = t.bilinear(v[0], v[1], v[2])?;
        Ok(weighted_sum(t, y, 6))
    });
}

#[test]
fn conv_and_masked_pool() {
    let mut r = rng(6);
    let ps = [
        random(&[6, 2], &mut r),
        random(&[3, 2, 4], &mut r),
        random(&[4], &mut r),
    ];
    check(&ps, |t, v| {
        let c = t.conv1d(v[0], v[1], v[2], 5)?;
        let p = t.maxpool_time(c, 3)?;
        Ok(weighted_sum(t, p, 7))
    });
}

fn tuple(r: &mut ChaCha8Rng, d: usize) -> [Tensor; 3] {
    [random(&[d], r), random(&[d], r), random(&[d], r)]
}

#[test]
fn ntn_margin_and_penalty_at_d5() {
    let d = 5;
    let mut r = rng(7);
    let p = NtnParams::new(d, &mut r);
    let mut ps: Vec<Tensor> = p.parameters().into_iter().cloned().collect();
    ps.extend(tuple(&mut r, d));
    ps.extend(tuple(&mut r, d));
    check(&ps, |t, v| {
        let nv = NtnVars::from_slice(v);
        ntn::loss_on_tape(t, &nv, [v[6], v[7], v[8]], [v[9], v[10], v[11]], 1e-4)
    });
}

#[test]
fn ntn_tape_loss_matches_direct_loss() {
    let d = 5;
    let mut r = rng(8);
    let p = NtnParams::new(d, &mut r);
    let date = NaiveDate::from_ymd_opt(2013, 1, 2).unwrap();
    let mk = |r: &mut ChaCha8Rng| {
        let [a, b, c] = tuple(r, d);
        stockevents_core::embeddings::EmbeddedTuple {
            o1: a.into_data(),
            p: b.into_data(),
            o2: c.into_data(),
            date,
        }
    };
    let (e, er) = (mk(&mut r), mk(&mut r));
    let mut tape = Tape::new();
    let vars = p.bind(&mut tape);
    let leaf = |tape: &mut Tape, x: &Vec<f64>| tape.leaf(Tensor::vector(x.clone()));
    let truth = [leaf(&mut tape, &e.o1), leaf(&mut tape, &e.p), leaf(&mut tape, &e.o2)];
    let fake = [leaf(&mut tape, &er.o1), leaf(&mut tape, &er.p), leaf(&mut tape, &er.o2)];
    let l = ntn::loss_on_tape(&mut tape, &NtnVars::from_slice(&vars), truth, fake, 1e-4).unwrap();
    let direct = ntn::ntn_loss(&e, &er, &p, 1e-4).unwrap();
    assert!((tape.scalar(l) - direct).abs() < 1e-12);
}

fn small_sample(r: &mut ChaCha8Rng, d: usize, label: u8) -> AlignedSample {
    let row = |r: &mut ChaCha8Rng| (0..d).map(|_| r.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    let week: Vec<Vec<f64>> = (0..4).map(|_| row(r)).collect();
    let month: Vec<Vec<f64>> = (0..9).map(|_| row(r)).collect();
    AlignedSample::new(
        row(r),
        &week,
        &month,
        label,
        NaiveDate::from_ymd_opt(2013, 5, 1).unwrap(),
        (7, 30),
    )
    .unwrap()
}

fn small_ebcnn(r: &mut ChaCha8Rng) -> EbcnnParams {
    let cfg = EbcnnConfig {
        hidden: 8,
        month_channels: 3,
        week_channels: 2,
        ..EbcnnConfig::new(5)
    };
    let mut p = EbcnnParams::new(cfg, r).unwrap();
    for t in p.parameters_mut() {
        for x in t.data_mut() {
            *x += r.gen_range(-0.3..0.3);
        }
    }
    p
}

#[test]
fn ebcnn_cross_entropy_at_d5() {
    let mut r = rng(9);
    let model = small_ebcnn(&mut r);
    let sample = small_sample(&mut r, 5, 1);
    let ps: Vec<Tensor> = model.parameters().into_iter().cloned().collect();
    check(&ps, |t, v| {
        let y = model.distribution(t, v, &sample)?;
        t.neg_log_pick(y, 1)
    });
}

#[test]
fn short_term_cross_entropy() {
    let mut r = rng(10);
    let cfg = ShortTermConfig {
        hidden: 4,
        ..ShortTermConfig::new(5)
    };
    let model = ShortTermParams::new(cfg, &mut r).unwrap();
    let sample = small_sample(&mut r, 5, 0);
    let ps: Vec<Tensor> = model.parameters().into_iter().cloned().collect();
    check(&ps, |t, v| {
        let y = model.distribution(t, v, &sample)?;
        t.neg_log_pick(y, 0)
    });
}

#[test]
fn lstm_forecaster_mse() {
    let mut r = rng(11);
    let model = LstmForecaster::new(3, 4, &mut r).unwrap();
    let window = ForecastWindow {
        rows: (0..4)
            .map(|_| core::array::from_fn(|_| r.gen_range(0.0..1.0)))
            .collect(),
        targets: vec![0.2, 0.5, 0.9],
        end_date: NaiveDate::from_ymd_opt(2013, 5, 1).unwrap(),
    };
    let ps: Vec<Tensor> = model.parameters().into_iter().cloned().collect();
    check(&ps, |t, v| model.mse_on_tape(t, v, &window));
}

#[test]
fn lstm_step_mse() {
    let mut r = rng(12);
    let cell = stockevents_core::nnkit::LstmCell::new(5, 3, &mut r);
    let mut ps: Vec<Tensor> = cell.parameters().into_iter().cloned().collect();
    ps.push(random(&[5], &mut r));
    ps.push(random(&[3], &mut r));
    ps.push(random(&[3], &mut r));
    let target = Tensor::vector(vec![0.1, -0.4, 0.3]);
    check(&ps, |t, v| {
        let vars = stockevents_core::nnkit::LstmVars::from_slice(v);
        let (h, c) = cell.step(t, &vars, v[12], v[13], v[14])?;
        let y = t.leaf(target.clone());
        let e = t.sub(h, y)?;
        let a = t.sum_squares(e);
        let b = weighted_sum(t, c, 13);
        t.add(a, b)
    });
}

fn fd_loss(center: &[f64], context: &[f64], negs: &[Vec<f64>]) -> f64 {
    let refs: Vec<&[f64]> = negs.iter().map(|n| n.as_slice()).collect();
    sgns_pair(center, context, &refs).loss
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

#[test]
fn skipgram_pair_gradient() {
    let mut r = rng(14);
    let d = 5;
    let v = |r: &mut ChaCha8Rng| (0..d).map(|_| r.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    let center = v(&mut r);
    let context = v(&mut r);
    let negs: Vec<Vec<f64>> = (0..3).map(|_| v(&mut r)).collect();
    let refs: Vec<&[f64]> = negs.iter().map(|n| n.as_slice()).collect();
    let g = sgns_pair(&center, &context, &refs);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for j in 0..d {
        let mut p = center.clone();
        let mut m = center.clone();
        p[j] += h;
        m[j] -= h;
        let num = (fd_loss(&p, &context, &negs) - fd_loss(&m, &context, &negs)) / (2.0 * h);
        worst = worst.max(rel_err(g.center[j], num));

        let mut p = context.clone();
        let mut m = context.clone();
        p[j] += h;
        m[j] -= h;
        let num = (fd_loss(&center, &p, &negs) - fd_loss(&center, &m, &negs)) / (2.0 * h);
        worst = worst.max(rel_err(g.context[j], num));

        for k in 0..negs.len() {
            let mut p = negs.clone();
            let mut m = negs.clone();
            p[k][j] += h;
            m[k][j] -= h;
            let num = (fd_loss(&center, &context, &p) - fd_loss(&center, &context, &m)) / (2.0 * h);
            worst = worst.max(rel_err(g.negatives[k][j], num));
        }
    }
    assert!(worst < TOL, "max rel error {worst}");
}
