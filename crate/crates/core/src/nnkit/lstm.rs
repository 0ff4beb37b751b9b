//! Standard LSTM cell: input, forget and output gates with a tanh candidate.
//!
//! ```text
//! i = σ(W_i x + U_i h + b_i)      f = σ(W_f x + U_f h + b_f)
//! o = σ(W_o x + U_o h + b_o)      g = tanh(W_c x + U_c h + b_c)
//! c' = f ⊙ c + i ⊙ g              h' = o ⊙ tanh(c')
//! ```

use alloc::vec::Vec;
use rand::Rng;

use super::{Parameters, Tape, Tensor, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Candidate = 3,
}

/// One gate's input weights `[hidden, input]`, recurrent weights
/// `[hidden, hidden]` and bias `[hidden]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub input: Tensor,
    pub recurrent: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    input_size: usize,
    hidden_size: usize,
    /// Input, forget, output, candidate.
    pub gates: [GateParams; 4],
}

/// Tape handles for an [`LstmCell`]'s parameters.
#[derive(Debug, Clone, Copy)]
pub struct LstmVars {
    gates: [[Var; 3]; 4],
}

impl LstmVars {
    /// Takes the first 12 handles of a [`Parameters::bind`] result.
    pub fn from_slice(vars: &[Var]) -> Self {
        let g = |k: usize| [vars[3 * k], vars[3 * k + 1], vars[3 * k + 2]];
        LstmVars {
            gates: [g(0), g(1), g(2), g(3)],
        }
    }
}

impl LstmCell {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        let gate = || GateParams {
            input: Tensor::zeros(&[hidden_size, input_size]),
            recurrent: Tensor::zeros(&[hidden_size, hidden_size]),
            bias: Tensor::zeros(&[hidden_size]),
        };
        LstmCell {
            input_size,
            hidden_size,
            gates: [gate(), gate(), gate(), gate()],
        }
    }

    pub fn new<R: Rng + ?Sized>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let mut cell = LstmCell::zeros(input_size, hidden_size);
        for g in &mut cell.gates {
            g.input = Tensor::glorot(&[hidden_size, input_size], input_size, hidden_size, rng);
            g.recurrent = Tensor::glorot(&[hidden_size, hidden_size], hidden_size, hidden_size, rng);
        }
        cell
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    fn gate(&self, tape: &mut Tape, vars: &LstmVars, gate: Gate, x: Var, h: Var) -> Result<Var> {
        let [w, u, b] = vars.gates[gate as usize];
        let wx = tape.matvec(w, x)?;
        let uh = tape.matvec(u, h)?;
        let s = tape.add(wx, uh)?;
        let s = tape.add(s, b)?;
        Ok(match gate {
            Gate::Candidate => tape.tanh(s),
            _ => tape.sigmoid(s),
        })
    }

    /// One recurrence step on a tape; returns `(h, c)`.
    pub fn step(&self, tape: &mut Tape, vars: &LstmVars, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let (nx, nh, nc) = (tape.value(x).len(), tape.value(h).len(), tape.value(c).len());
        if nx != self.input_size || nh != self.hidden_size || nc != self.hidden_size {
            return Err(Error::shape(
                "lstm_step",
                &[self.input_size, self.hidden_size],
                &[nx, nh, nc],
            ));
        }
        let i = self.gate(tape, vars, Gate::Input, x, h)?;
        let f = self.gate(tape, vars, Gate::Forget, x, h)?;
        let o = self.gate(tape, vars, Gate::Output, x, h)?;
        let g = self.gate(tape, vars, Gate::Candidate, x, h)?;
        let keep = tape.mul(f, c)?;
        let write = tape.mul(i, g)?;
        let c_next = tape.add(keep, write)?;
        let squashed = tape.tanh(c_next);
        let h_next = tape.mul(o, squashed)?;
        Ok((h_next, c_next))
    }

    /// Eager single step.
    pub fn lstm_step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut tape = Tape::new();
        let vars = LstmVars::from_slice(&self.bind(&mut tape));
        let x = tape.leaf(Tensor::new(&[x.len().max(1)], x.to_vec()).map_err(|_| Error::Empty("lstm_step"))?);
        let h = tape.leaf(Tensor::vector(h_prev.to_vec()));
        let c = tape.leaf(Tensor::vector(c_prev.to_vec()));
        let (h, c) = self.step(&mut tape, &vars, x, h, c)?;
        Ok((tape.value(h).data().to_vec(), tape.value(c).data().to_vec()))
    }
}

impl Parameters for LstmCell {
    fn parameters(&self) -> Vec<&Tensor> {
        self.gates
            .iter()
            .flat_map(|g| [&g.input, &g.recurrent, &g.bias])
            .collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        self.gates
            .iter_mut()
            .flat_map(|g| [&mut g.input, &mut g.recurrent, &mut g.bias])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnkit::sigmoid;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_zero_state() {
        let cell = LstmCell::zeros(3, 2);
        let (h, c) = cell.lstm_step(&[0.4, -1.0, 2.0], &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(h, vec![0.0, 0.0]);
        assert_eq!(c, vec![0.0, 0.0]);
    }

    #[test]
    fn saturated_forget_gate_keeps_cell() {
        let mut cell = LstmCell::zeros(2, 2);
        cell.gates[Gate::Forget as usize].bias = Tensor::vector(vec![100.0, 100.0]);
        cell.gates[Gate::Input as usize].bias = Tensor::vector(vec![-100.0, -100.0]);
        let c_prev = [0.7, -0.3];
        let (_, c) = cell.lstm_step(&[1.0, 2.0], &[0.1, 0.2], &c_prev).unwrap();
        for (a, b) in c.iter().zip(c_prev) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let cell = LstmCell::zeros(3, 2);
        assert!(cell.lstm_step(&[1.0, 2.0], &[0.0, 0.0], &[0.0, 0.0]).is_err());
        assert!(cell.lstm_step(&[1.0, 2.0, 3.0], &[0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn matches_gate_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut cell = LstmCell::new(3, 2, &mut rng);
        for g in &mut cell.gates {
            for b in g.bias.data_mut() {
                *b = rand::Rng::gen_range(&mut rng, -0.5..0.5);
            }
        }
        let x = [0.3, -0.8, 0.5];
        let h0 = [0.1, -0.2];
        let c0 = [0.4, 0.05];

        let affine = |gp: &GateParams, r: usize| {
            let w = gp.input.data();
            let u = gp.recurrent.data();
            let mut s = gp.bias.data()[r];
            for j in 0..3 {
                s += w[r * 3 + j] * x[j];
            }
            for j in 0..2 {
                s += u[r * 2 + j] * h0[j];
            }
            s
        };
        let (h, c) = cell.lstm_step(&x, &h0, &c0).unwrap();
        for r in 0..2 {
            let i = sigmoid(affine(&cell.gates[0], r));
            let f = sigmoid(affine(&cell.gates[1], r));
            let o = sigmoid(affine(&cell.gates[2], r));
            let g = affine(&cell.gates[3], r).tanh();
            let c_exp = f * c0[r] + i * g;
            let h_exp = o * c_exp.tanh();
            assert!((c[r] - c_exp).abs() < 1e-10);
            assert!((h[r] - h_exp).abs() < 1e-10);
            assert!(h[r].abs() < 1.0);
        }
    }
}
