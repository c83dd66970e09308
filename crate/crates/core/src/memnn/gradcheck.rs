//! Central finite-difference checks for the hand-written backward passes.

use super::model::{Example, MemN2N};

/// Models whose parameters can be perturbed element by element.
pub trait ParamBlocks: Clone {
    /// Named flat views of every parameter block.
    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_block: String,
    /// Analytic and numeric values at the worst element.
    pub worst_pair: (f64, f64),
    pub checked: usize,
    /// Euclidean norm of the analytic gradient.
    pub grad_norm: f64,
}

/// Denominator floor for relative error: differences between gradients
/// both smaller than this are compared in absolute terms.
pub const REL_ERR_FLOOR: f64 = 1e-5;

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(REL_ERR_FLOOR)
}

/// `(f(x + eps) - f(x - eps)) / 2 eps` for one element of one block.
pub fn numeric_gradient<M: ParamBlocks>(
    model: &M,
    loss: &dyn Fn(&M) -> f64,
    block: usize,
    index: usize,
    eps: f64,
) -> f64 {
    let mut m = model.clone();
    let orig = m.blocks_mut()[block].1[index];
    m.blocks_mut()[block].1[index] = orig + eps;
    let up = loss(&m);
    m.blocks_mut()[block].1[index] = orig - eps;
    let down = loss(&m);
    (up - down) / (2.0 * eps)
}

/// Compares `analytic` (dense, same block order as `blocks_mut`) against
/// central differences on every element.
pub fn check_blocks<M: ParamBlocks>(
    model: &M,
    loss: &dyn Fn(&M) -> f64,
    analytic: &[Vec<f64>],
    eps: f64,
) -> GradCheckReport {
    let mut probe = model.clone();
    let names: Vec<(&'static str, usize)> = probe
        .blocks_mut()
        .into_iter()
        .map(|(n, b)| (n, b.len()))
        .collect();
    assert_eq!(names.len(), analytic.len(), "block count mismatch");
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_block: String::new(),
        worst_pair: (0.0, 0.0),
        checked: 0,
        grad_norm: analytic.iter().flatten().map(|x| x * x).sum::<f64>().sqrt(),
    };
    for (bi, (name, len)) in names.into_iter().enumerate() {
        assert_eq!(len, analytic[bi].len(), "block {name} size mismatch");
        for i in 0..len {
            let n = numeric_gradient(model, loss, bi, i, eps);
            let e = rel_err(analytic[bi][i], n);
            report.checked += 1;
            if e > report.max_rel_err {
                report.max_rel_err = e;
                report.worst_block = name.to_string();
                report.worst_pair = (analytic[bi][i], n);
            }
        }
    }
    report
}

impl ParamBlocks for MemN2N {
    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("A", &mut self.a.data[..]),
            ("B", &mut self.b.data[..]),
            ("H", &mut self.h.data[..]),
            ("U", &mut self.u.data[..]),
            ("gamma", std::slice::from_mut(&mut self.gamma)),
            ("time_A", &mut self.time_a.data[..]),
            ("time_B", &mut self.time_b.data[..]),
        ]
    }
}

impl MemN2N {
    /// Dense analytic gradient in `blocks_mut` order.
    pub fn dense_gradient(&self, ex: &Example) -> Vec<Vec<f64>> {
        let (_, g) = self.backward(ex);
        let p = self.p();
        vec![
            g.a.to_dense(self.a.rows, p).data,
            g.b.to_dense(self.b.rows, p).data,
            if g.h.is_empty() { vec![0.0; p * p] } else { g.h },
            g.u.to_dense(self.u.rows, p).data,
            vec![g.gamma],
            g.time_a.to_dense(self.time_a.rows, p).data,
            g.time_b.to_dense(self.time_b.rows, p).data,
        ]
    }

    /// Smallest |pre-activation| among rectified units; finite differences
    /// are only meaningful when this exceeds the step size.
    pub fn kink_distance(&self, ex: &Example) -> f64 {
        if !self.shape.relu_half {
            return f64::INFINITY;
        }
        let fw = self.forward(&ex.memory, &ex.query);
        let half = self.p() / 2;
        fw.pre
            .iter()
            .flat_map(|u| u[half..].iter().map(|x| x.abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Gradient check of a memory network on one example.
pub fn grad_check(model: &MemN2N, ex: &Example, eps: f64) -> GradCheckReport {
    let analytic = model.dense_gradient(ex);
    check_blocks(model, &|m: &MemN2N| m.loss(ex), &analytic, eps)
}
