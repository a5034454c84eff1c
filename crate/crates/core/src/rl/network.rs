use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Width of the hidden layer used by both agents.
pub const HIDDEN_UNITS: usize = 100;

const CHECKPOINT_VERSION: u32 = 1;

/// Single-hidden-layer ReLU network scoring one (state, action) input.
///
/// Parameters live in one flat vector: `w1` (hidden x input, row-major),
/// `b1` (hidden), `w2` (hidden), `b2` (1). A frozen target copy is kept
/// alongside and only changes through [`QNetwork::sync_target`].
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork<T> {
    input_dim: usize,
    hidden: usize,
    online: Vec<T>,
    target: Vec<T>,
}

/// Gradient of a squared-TD batch loss with respect to the online parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGrad<T> {
    pub loss: T,
    pub grad: Vec<T>,
}

impl<T: Scalar> QNetwork<T> {
    pub fn n_params(input_dim: usize, hidden: usize) -> usize {
        hidden * input_dim + 2 * hidden + 1
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        let p = vec![T::zero(); Self::n_params(input_dim, hidden)];
        Self { input_dim, hidden, online: p.clone(), target: p }
    }

    /// Xavier-uniform weights, zero biases; the target starts as a copy.
    pub fn xavier<R: Rng>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let mut net = Self::zeros(input_dim, hidden);
        let a1 = (6.0 / (input_dim + hidden) as f64).sqrt();
        let a2 = (6.0 / (hidden + 1) as f64).sqrt();
        let (w1, rest) = net.online.split_at_mut(hidden * input_dim);
        for w in w1 {
            *w = T::lit(rng.gen_range(-a1..a1));
        }
        for w in &mut rest[hidden..2 * hidden] {
            *w = T::lit(rng.gen_range(-a2..a2));
        }
        net.target = net.online.clone();
        net
    }

    /// Builds a network from explicit online parameters (target = copy).
    pub fn from_params(input_dim: usize, hidden: usize, params: Vec<T>) -> Result<Self> {
        if params.len() != Self::n_params(input_dim, hidden) {
            return Err(Error::arg(format!(
                "expected {} parameters, got {}",
                Self::n_params(input_dim, hidden),
                params.len()
            )));
        }
        Ok(Self { input_dim, hidden, target: params.clone(), online: params })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[T] {
        &self.online
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.online
    }

    pub fn target_params(&self) -> &[T] {
        &self.target
    }

    pub fn sync_target(&mut self) {
        self.target.clone_from(&self.online);
    }

    fn check_dims(&self, state: &[T], action: &[T]) -> Result<()> {
        if state.len() + action.len() != self.input_dim {
            return Err(Error::arg(format!(
                "input of {} + {} entries for a network of input {}",
                state.len(),
                action.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Pre-activations contributed by the bias and the state part of the input.
    fn state_preact(&self, params: &[T], state: &[T]) -> Vec<T> {
        let (i, h) = (self.input_dim, self.hidden);
        let b1 = &params[h * i..h * i + h];
        (0..h)
            .map(|u| {
                let row = &params[u * i..u * i + state.len()];
                b1[u] + row.iter().zip(state).map(|(&w, &x)| w * x).sum::<T>()
            })
            .collect()
    }

    fn head(&self, params: &[T], state_pre: &[T], state_len: usize, action: &[T]) -> T {
        let (i, h) = (self.input_dim, self.hidden);
        let w2 = &params[h * i + h..h * i + 2 * h];
        let mut q = params[h * i + 2 * h];
        for u in 0..h {
            let row = &params[u * i + state_len..(u + 1) * i];
            let pre = state_pre[u] + row.iter().zip(action).map(|(&w, &x)| w * x).sum::<T>();
            if pre > T::zero() {
                q += w2[u] * pre;
            }
        }
        q
    }

    fn eval(&self, params: &[T], state: &[T], actions: &[Vec<T>]) -> Result<Vec<T>> {
        for a in actions {
            self.check_dims(state, a)?;
        }
        let pre = self.state_preact(params, state);
        Ok(actions.iter().map(|a| self.head(params, &pre, state.len(), a)).collect())
    }

    /// Online Q value of one `state ++ action` input.
    pub fn q_value(&self, state: &[T], action: &[T]) -> Result<T> {
        self.check_dims(state, action)?;
        let pre = self.state_preact(&self.online, state);
        Ok(self.head(&self.online, &pre, state.len(), action))
    }

    /// Online Q values of several actions sharing one state.
    pub fn q_values(&self, state: &[T], actions: &[Vec<T>]) -> Result<Vec<T>> {
        self.eval(&self.online, state, actions)
    }

    pub fn target_q_values(&self, state: &[T], actions: &[Vec<T>]) -> Result<Vec<T>> {
        self.eval(&self.target, state, actions)
    }

    /// Mean squared error `(1/B) sum (y_b - Q(s_b, a_b))^2` against fixed
    /// targets, with its gradient over the online parameters.
    pub fn squared_error_grad(&self, inputs: &[(&[T], &[T])], targets: &[T]) -> Result<BatchGrad<T>> {
        if inputs.len() != targets.len() || inputs.is_empty() {
            return Err(Error::arg("batch inputs and targets must be non-empty and equal in length"));
        }
        let (i, h) = (self.input_dim, self.hidden);
        let p = &self.online;
        let mut grad = vec![T::zero(); p.len()];
        let mut loss = T::zero();
        let scale = T::lit(2.0) / T::from_count(inputs.len());
        let mut pre = vec![T::zero(); h];
        let mut x = vec![T::zero(); i];
        for (&(s, a), &y) in inputs.iter().zip(targets) {
            self.check_dims(s, a)?;
            x[..s.len()].copy_from_slice(s);
            x[s.len()..].copy_from_slice(a);
            let mut q = p[h * i + 2 * h];
            for u in 0..h {
                let row = &p[u * i..(u + 1) * i];
                pre[u] = p[h * i + u] + row.iter().zip(&x).map(|(&w, &v)| w * v).sum::<T>();
                if pre[u] > T::zero() {
                    q += p[h * i + h + u] * pre[u];
                }
            }
            let err = q - y;
            loss += err * err;
            let d = scale * err;
            grad[h * i + 2 * h] += d;
            for u in 0..h {
                if pre[u] > T::zero() {
                    grad[h * i + h + u] += d * pre[u];
                    let dh = d * p[h * i + h + u];
                    grad[h * i + u] += dh;
                    for (g, &v) in grad[u * i..(u + 1) * i].iter_mut().zip(&x) {
                        *g += dh * v;
                    }
                }
            }
        }
        Ok(BatchGrad { loss: loss / T::from_count(inputs.len()), grad })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let (i, h) = (self.input_dim, self.hidden);
        let mut arrays = Vec::new();
        for (prefix, p) in [("online", &self.online), ("target", &self.target)] {
            let parts = [
                ("w1", vec![h, i], &p[..h * i]),
                ("b1", vec![h], &p[h * i..h * i + h]),
                ("w2", vec![h], &p[h * i + h..h * i + 2 * h]),
                ("b2", vec![1], &p[h * i + 2 * h..]),
            ];
            for (name, shape, data) in parts {
                arrays.push(NamedArray::encode(format!("{prefix}.{name}"), shape, data));
            }
        }
        Checkpoint { version: CHECKPOINT_VERSION, input_dim: i, hidden: h, arrays }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::arg(format!("unsupported checkpoint version {}", ck.version)));
        }
        let mut net = Self::zeros(ck.input_dim, ck.hidden);
        for prefix in ["online", "target"] {
            let mut flat = Vec::with_capacity(net.online.len());
            for name in ["w1", "b1", "w2", "b2"] {
                let full = format!("{prefix}.{name}");
                let arr = ck
                    .arrays
                    .iter()
                    .find(|a| a.name == full)
                    .ok_or_else(|| Error::arg(format!("checkpoint lacks array '{full}'")))?;
                flat.extend(arr.decode::<T>()?);
            }
            if flat.len() != net.online.len() {
                return Err(Error::arg("checkpoint arrays do not match the declared shape"));
            }
            match prefix {
                "online" => net.online = flat,
                _ => net.target = flat,
            }
        }
        Ok(net)
    }
}

/// Versioned parameter dump: named arrays of little-endian `f64`, base64 encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub input_dim: usize,
    pub hidden: usize,
    pub arrays: Vec<NamedArray>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: String,
}

impl NamedArray {
    fn encode<T: Scalar>(name: String, shape: Vec<usize>, values: &[T]) -> Self {
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.as_f64().to_le_bytes()).collect();
        Self { name, shape, data: B64.encode(bytes) }
    }

    fn decode<T: Scalar>(&self) -> Result<Vec<T>> {
        let bytes = B64
            .decode(&self.data)
            .map_err(|e| Error::arg(format!("array '{}': {e}", self.name)))?;
        if bytes.len() % 8 != 0 || bytes.len() / 8 != self.shape.iter().product::<usize>() {
            return Err(Error::arg(format!("array '{}' has the wrong byte length", self.name)));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// 2-input, 2-hidden, 1-output network with hand-picked weights.
    fn micro() -> QNetwork<f64> {
        // w1 = [[1, -2], [0.5, 1]], b1 = [0.1, -0.2], w2 = [3, -1], b2 = 0.5
        QNetwork::from_params(2, 2, vec![1.0, -2.0, 0.5, 1.0, 0.1, -0.2, 3.0, -1.0, 0.5]).unwrap()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = QNetwork::<f64>::zeros(72, HIDDEN_UNITS);
        assert_eq!(net.q_value(&[1.0; 64], &[2.0; 8]).unwrap(), 0.0);
    }

    #[test]
    fn micro_network_by_hand() {
        let net = micro();
        // x = (1, 0.25): h_pre = (1 - 0.5 + 0.1, 0.5 + 0.25 - 0.2) = (0.6, 0.55)
        // q = 3 * 0.6 - 0.55 + 0.5 = 1.75
        let q = net.q_value(&[1.0], &[0.25]).unwrap();
        assert!((q - 1.75).abs() < 1e-15);
        // x = (0, 1): h_pre = (-1.9, 0.8) -> relu -> (0, 0.8); q = -0.8 + 0.5
        assert!((net.q_value(&[0.0], &[1.0]).unwrap() + 0.3).abs() < 1e-15);
        assert_eq!(net.q_value(&[1.0], &[0.25]).unwrap(), q);

        // Doubling w1 doubles the pre-activations: q = 3 * 1.1 - 1.3 + 0.5 (biases unscaled).
        let mut doubled = net.clone();
        doubled.params_mut()[..4].iter_mut().for_each(|w| *w *= 2.0);
        let q2 = doubled.q_value(&[1.0], &[0.25]).unwrap();
        assert!((q2 - (3.0 * 1.1 - 1.3 + 0.5)).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(micro().q_value(&[1.0, 2.0], &[0.5]).is_err());
    }

    #[test]
    fn sync_semantics() {
        let mut net = QNetwork::<f64>::xavier(5, 7, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(net.params(), net.target_params());
        net.params_mut()[3] += 1.0;
        assert_ne!(net.params(), net.target_params());
        net.sync_target();
        let s = [0.1, 0.2, 0.3];
        let a = vec![vec![1.0, -1.0]];
        assert_eq!(net.q_values(&s, &a).unwrap(), net.target_q_values(&s, &a).unwrap());
        let frozen = net.target_params().to_vec();
        net.params_mut()[0] -= 3.0;
        assert_eq!(net.target_params(), &frozen[..]);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let mut net = QNetwork::<f64>::xavier(6, 4, &mut ChaCha8Rng::seed_from_u64(2));
        net.params_mut()[0] = 0.123456789;
        let ck = net.to_checkpoint();
        let json = serde_json::to_string(&ck).unwrap();
        let back = QNetwork::<f64>::from_checkpoint(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, net);
        let mut bad = ck.clone();
        bad.version = 9;
        assert!(QNetwork::<f64>::from_checkpoint(&bad).is_err());
    }
}
