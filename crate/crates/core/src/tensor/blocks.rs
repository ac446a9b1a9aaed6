//! Composite blocks built from tape primitives: the LSTM cell and additive
//! attention. Both record onto the tape, so gradients flow through them like
//! any primitive chain.

use crate::error::{Error, Result};

use super::tape::{Tape, Var};

/// Tape handles for one LSTM cell's gate parameters. Weight shapes are
/// `[hidden, input + hidden]`; biases `[hidden]`.
#[derive(Debug, Clone, Copy)]
pub struct LstmVars {
    pub wf: Var,
    pub wi: Var,
    pub wo: Var,
    pub wg: Var,
    pub bf: Var,
    pub bi: Var,
    pub bo: Var,
    pub bg: Var,
}

/// Standard LSTM gate equations with sigmoid gates and tanh candidate.
pub fn lstm_step(tape: &mut Tape, p: &LstmVars, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
    let cat = tape.concat(&[x, h])?;
    let f_lin = tape.matvec(p.wf, cat)?;
    let f_lin = tape.add(f_lin, p.bf)?;
    let f = tape.sigmoid(f_lin);
    let i_lin = tape.matvec(p.wi, cat)?;
    let i_lin = tape.add(i_lin, p.bi)?;
    let i = tape.sigmoid(i_lin);
    let o_lin = tape.matvec(p.wo, cat)?;
    let o_lin = tape.add(o_lin, p.bo)?;
    let o = tape.sigmoid(o_lin);
    let g_lin = tape.matvec(p.wg, cat)?;
    let g_lin = tape.add(g_lin, p.bg)?;
    let g = tape.tanh(g_lin);

    let fc = tape.mul(f, c)?;
    let ig = tape.mul(i, g)?;
    let c_next = tape.add(fc, ig)?;
    let c_tanh = tape.tanh(c_next);
    let h_next = tape.mul(o, c_tanh)?;
    Ok((h_next, c_next))
}

/// Tape handles for additive attention: query projection `[a, q]`, key
/// projection `[a, k]` and the scoring vector as a `[1, a]` matrix.
#[derive(Debug, Clone, Copy)]
pub struct AttentionVars {
    pub wq: Var,
    pub wk: Var,
    pub v: Var,
}

/// Project keys once; reusable across decoding steps of one turn.
pub fn project_keys(tape: &mut Tape, p: &AttentionVars, keys: &[Var]) -> Result<Vec<Var>> {
    keys.iter().map(|k| tape.matvec(p.wk, *k)).collect()
}

/// Additive attention: weights are the softmax of `v . tanh(Wq q + Wk k_j)`;
/// the context is the weight-sum of the values.
///
/// `projected_keys` come from [`project_keys`]; `values` is the stacked
/// `[n, d]` matrix of value vectors, row `j` paired with key `j`.
pub fn attention(
    tape: &mut Tape,
    p: &AttentionVars,
    query: Var,
    projected_keys: &[Var],
    values: Var,
) -> Result<(Var, Var)> {
    if projected_keys.is_empty() {
        return Err(Error::Contract("attention over an empty key set".into()));
    }
    if tape.value(values).shape[0] != projected_keys.len() {
        return Err(Error::dimension(
            "attention",
            format!("{} value rows", projected_keys.len()),
            format!("{:?}", tape.value(values).shape),
        ));
    }
    let q_proj = tape.matvec(p.wq, query)?;
    let mut scores = Vec::with_capacity(projected_keys.len());
    for k_proj in projected_keys {
        let sum = tape.add(q_proj, *k_proj)?;
        let act = tape.tanh(sum);
        let score = tape.matvec(p.v, act)?;
        scores.push(score);
    }
    let score_vec = tape.concat(&scores)?;
    let weights = tape.softmax(score_vec)?;
    let context = tape.weighted_rows(values, weights)?;
    Ok((context, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::params::GradAccum;
    use crate::tensor::tape::Value;
    use rand::Rng;

    fn zero_lstm(tape: &mut Tape, input: usize, hidden: usize) -> LstmVars {
        let w = || Value::zeros(&[hidden, input + hidden]);
        let b = || Value::zeros(&[hidden]);
        LstmVars {
            wf: tape.constant(w()),
            wi: tape.constant(w()),
            wo: tape.constant(w()),
            wg: tape.constant(w()),
            bf: tape.constant(b()),
            bi: tape.constant(b()),
            bo: tape.constant(b()),
            bg: tape.constant(b()),
        }
    }

    #[test]
    fn all_zero_inputs_stay_zero() {
        let mut tape = Tape::new();
        let p = zero_lstm(&mut tape, 2, 3);
        let x = tape.constant_vector(vec![0.0; 2]);
        let h = tape.constant_vector(vec![0.0; 3]);
        let c = tape.constant_vector(vec![0.0; 3]);
        let (h2, c2) = lstm_step(&mut tape, &p, x, h, c).unwrap();
        assert_eq!(tape.data(h2), &[0.0, 0.0, 0.0]);
        assert_eq!(tape.data(c2), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_params_unit_cell() {
        // c' = sigmoid(0)*1 + sigmoid(0)*tanh(0) = 0.5
        // h' = sigmoid(0)*tanh(0.5) ~ 0.2311
        let mut tape = Tape::new();
        let p = zero_lstm(&mut tape, 1, 1);
        let x = tape.constant_vector(vec![0.0]);
        let h = tape.constant_vector(vec![0.0]);
        let c = tape.constant_vector(vec![1.0]);
        let (h2, c2) = lstm_step(&mut tape, &p, x, h, c).unwrap();
        assert!((tape.data(c2)[0] - 0.5).abs() < 1e-12);
        assert!((tape.data(h2)[0] - 0.5 * 0.5_f64.tanh()).abs() < 1e-12);
    }

    /// Independent scalar re-implementation of the gate equations.
    fn scalar_lstm_reference(
        w: &[Vec<f64>; 4],
        b: &[Vec<f64>; 4],
        x: &[f64],
        h: &[f64],
        c: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let hidden = h.len();
        let cat: Vec<f64> = x.iter().chain(h.iter()).copied().collect();
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        let lin = |wm: &Vec<f64>, bias: &Vec<f64>, row: usize| -> f64 {
            let cols = cat.len();
            let mut acc = bias[row];
            for j in 0..cols {
                acc += wm[row * cols + j] * cat[j];
            }
            acc
        };
        let mut h2 = vec![0.0; hidden];
        let mut c2 = vec![0.0; hidden];
        for r in 0..hidden {
            let f = sig(lin(&w[0], &b[0], r));
            let i = sig(lin(&w[1], &b[1], r));
            let o = sig(lin(&w[2], &b[2], r));
            let g = lin(&w[3], &b[3], r).tanh();
            c2[r] = f * c[r] + i * g;
            h2[r] = o * c2[r].tanh();
        }
        (h2, c2)
    }

    #[test]
    fn randomized_step_matches_scalar_reference() {
        let mut rng = crate::seeding::stream_rng(99, "lstm-ref", 0);
        for _ in 0..10 {
            let (input, hidden) = (3, 4);
            let rand_vec = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| {
                (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>()
            };
            let w: [Vec<f64>; 4] = std::array::from_fn(|_| rand_vec(&mut rng, hidden * (input + hidden)));
            let b: [Vec<f64>; 4] = std::array::from_fn(|_| rand_vec(&mut rng, hidden));
            let x = rand_vec(&mut rng, input);
            let h = rand_vec(&mut rng, hidden);
            let c = rand_vec(&mut rng, hidden);

            let mut tape = Tape::new();
            let vars = LstmVars {
                wf: tape.constant(Value::matrix(hidden, input + hidden, w[0].clone())),
                wi: tape.constant(Value::matrix(hidden, input + hidden, w[1].clone())),
                wo: tape.constant(Value::matrix(hidden, input + hidden, w[2].clone())),
                wg: tape.constant(Value::matrix(hidden, input + hidden, w[3].clone())),
                bf: tape.constant(Value::vector(b[0].clone())),
                bi: tape.constant(Value::vector(b[1].clone())),
                bo: tape.constant(Value::vector(b[2].clone())),
                bg: tape.constant(Value::vector(b[3].clone())),
            };
            let xv = tape.constant_vector(x.clone());
            let hv = tape.constant_vector(h.clone());
            let cv = tape.constant_vector(c.clone());
            let (h2, c2) = lstm_step(&mut tape, &vars, xv, hv, cv).unwrap();
            let (h_ref, c_ref) = scalar_lstm_reference(&w, &b, &x, &h, &c);
            for (a, b) in tape.data(h2).iter().zip(h_ref.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in tape.data(c2).iter().zip(c_ref.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    fn attn_fixture(tape: &mut Tape, a: usize, q: usize, k: usize) -> AttentionVars {
        let mut rng = crate::seeding::stream_rng(7, "attn", 0);
        let mut rv = |n: usize| (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect::<Vec<f64>>();
        AttentionVars {
            wq: tape.constant(Value::matrix(a, q, rv(a * q))),
            wk: tape.constant(Value::matrix(a, k, rv(a * k))),
            v: tape.constant(Value::matrix(1, a, rv(a))),
        }
    }

    #[test]
    fn single_key_gets_full_weight() {
        let mut tape = Tape::new();
        let p = attn_fixture(&mut tape, 3, 2, 2);
        let q = tape.constant_vector(vec![0.4, -0.2]);
        let key = tape.constant_vector(vec![1.0, 2.0]);
        let value = tape.constant_vector(vec![5.0, 6.0]);
        let pk = project_keys(&mut tape, &p, &[key]).unwrap();
        let values = tape.stack(&[value]).unwrap();
        let (ctx, w) = attention(&mut tape, &p, q, &pk, values).unwrap();
        assert_eq!(tape.data(w), &[1.0]);
        assert_eq!(tape.data(ctx), &[5.0, 6.0]);
    }

    #[test]
    fn identical_keys_split_weight() {
        let mut tape = Tape::new();
        let p = attn_fixture(&mut tape, 3, 2, 2);
        let q = tape.constant_vector(vec![0.4, -0.2]);
        let key = tape.constant_vector(vec![1.0, 2.0]);
        let v1 = tape.constant_vector(vec![2.0, 0.0]);
        let v2 = tape.constant_vector(vec![0.0, 2.0]);
        let pk = project_keys(&mut tape, &p, &[key, key]).unwrap();
        let values = tape.stack(&[v1, v2]).unwrap();
        let (ctx, w) = attention(&mut tape, &p, q, &pk, values).unwrap();
        assert!((tape.data(w)[0] - 0.5).abs() < 1e-12);
        assert!((tape.data(w)[1] - 0.5).abs() < 1e-12);
        assert!((tape.data(ctx)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_one_on_random_inputs() {
        let mut rng = crate::seeding::stream_rng(13, "attn-sum", 0);
        for _ in 0..20 {
            let mut tape = Tape::new();
            let p = attn_fixture(&mut tape, 4, 3, 3);
            let n = rng.gen_range(1..8);
            let q_data: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let q = tape.constant_vector(q_data);
            let keys: Vec<Var> = (0..n)
                .map(|_| {
                    let d: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
                    tape.constant_vector(d)
                })
                .collect();
            let pk = project_keys(&mut tape, &p, &keys).unwrap();
            let values = tape.stack(&keys).unwrap();
            let (_, w) = attention(&mut tape, &p, q, &pk, values).unwrap();
            let sum: f64 = tape.data(w).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_key_set_rejected() {
        let mut tape = Tape::new();
        let p = attn_fixture(&mut tape, 3, 2, 2);
        let q = tape.constant_vector(vec![0.0, 0.0]);
        let dummy = tape.constant_vector(vec![0.0]);
        let values = tape.stack(&[dummy]).unwrap();
        assert!(matches!(
            attention(&mut tape, &p, q, &[], values),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn gradients_flow_through_composites() {
        // finite-difference check on a scalar function of lstm+attention
        let mut rng = crate::seeding::stream_rng(5, "fd", 0);
        let hidden = 3;
        let input = 2;
        let w_data: Vec<f64> = (0..hidden * (input + hidden)).map(|_| rng.gen_range(-0.5..0.5)).collect();

        let eval = |w_data: &[f64], acced: Option<&mut GradAccum>| -> f64 {
            let mut tape = Tape::new();
            let wf = tape.param(0, Value::matrix(hidden, input + hidden, w_data.to_vec()), true);
            let zeros_w = tape.constant(Value::zeros(&[hidden, input + hidden]));
            let b = tape.constant(Value::zeros(&[hidden]));
            let p = LstmVars {
                wf,
                wi: zeros_w,
                wo: zeros_w,
                wg: wf,
                bf: b,
                bi: b,
                bo: b,
                bg: b,
            };
            let x = tape.constant_vector(vec![0.7, -0.3]);
            let h = tape.constant_vector(vec![0.1, 0.2, -0.4]);
            let c = tape.constant_vector(vec![0.5, -0.5, 0.25]);
            let (h2, _) = lstm_step(&mut tape, &p, x, h, c).unwrap();
            let logits = tape.scale(h2, 3.0);
            let loss = tape.cross_entropy(logits, 1).unwrap();
            if let Some(acc) = acced {
                tape.backward(loss, acc).unwrap();
            }
            tape.scalar(loss)
        };

        let mut acc = GradAccum::new(1);
        eval(&w_data, Some(&mut acc));
        let grad = acc.get(0).to_vec();
        let h_step = 1e-5;
        for i in [0, 3, 7, 11] {
            let mut plus = w_data.clone();
            plus[i] += h_step;
            let mut minus = w_data.clone();
            minus[i] -= h_step;
            let fd = (eval(&plus, None) - eval(&minus, None)) / (2.0 * h_step);
            let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-6);
            assert!(rel < 1e-4, "coord {i}: grad {} vs fd {fd}", grad[i]);
        }
    }
}
