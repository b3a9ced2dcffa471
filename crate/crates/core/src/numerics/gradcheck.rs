use super::tape::{Params, Tape, Var};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Compares tape gradients with central finite differences.
///
/// `stride` > 1 checks every `stride`-th entry of each parameter, which keeps
/// large models affordable.
pub fn grad_check<F>(params: &Params, h: f64, stride: usize, loss: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &Params) -> Result<Var>,
{
    let mut tape = Tape::new();
    let l = loss(&mut tape, params)?;
    let grads = tape.backward(l, params)?;
    let eval = |p: &Params| -> Result<f64> {
        let mut t = Tape::new();
        let v = loss(&mut t, p)?;
        Ok(t.scalar(v))
    };
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    let mut work = params.clone();
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    for name in names {
        let n = params.get(&name).expect("listed").len();
        for k in (0..n).step_by(stride.max(1)) {
            let orig = params.get(&name).expect("listed").data()[k];
            work.get_mut(&name).expect("listed").data_mut()[k] = orig + h;
            let up = eval(&work)?;
            work.get_mut(&name).expect("listed").data_mut()[k] = orig - h;
            let down = eval(&work)?;
            work.get_mut(&name).expect("listed").data_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.get(&name).expect("same names").data()[k];
            let e = rel_error(numeric, analytic);
            report.checked += 1;
            if e > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(e);
                report.worst = Some((name.clone(), k));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;
    use crate::seed::rng;

    #[test]
    fn quadratic_matches_analytic_gradient() {
        let mut p = Params::new();
        p.init_glorot("w", 3, 4, &mut rng(1));
        let x = Tensor::from_rows(&[vec![0.5], vec![-1.0], vec![2.0], vec![0.25]]).unwrap();
        let loss = |t: &mut Tape, p: &Params| {
            let w = t.param(p, "w")?;
            let xv = t.constant(x.clone());
            let y = t.matmul(w, xv)?;
            let sq = t.mul(y, y)?;
            let s = t.sum(sq)?;
            t.scale(s, 0.5)
        };
        let rep = grad_check(&p, 1e-5, 1, loss).unwrap();
        assert!(rep.max_rel_error < 1e-8, "{rep:?}");

        // independent oracle: d/dW ½‖Wx‖² = (Wx) xᵀ
        let mut t = Tape::new();
        let l = loss(&mut t, &p).unwrap();
        let g = t.backward(l, &p).unwrap();
        let w = p.get("w").unwrap();
        let wx = w.matmul(&x).unwrap();
        let oracle = wx.matmul_t(&x).unwrap();
        assert!(g.get("w").unwrap().max_abs_diff(&oracle) < 1e-14);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let mut p = Params::new();
        p.init_glorot("w", 2, 2, &mut rng(2));
        let rep = grad_check(&p, 1e-5, 1, |t, _| Ok(t.constant(Tensor::scalar(3.0)))).unwrap();
        assert!(rep.max_rel_error < 1e-10);
        let mut t = Tape::new();
        let _ = t.param(&p, "w").unwrap();
        let c = t.constant(Tensor::scalar(3.0));
        assert_eq!(t.backward(c, &p).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn every_op_passes() {
        let mut r = rng(4);
        let mut p = Params::new();
        p.init_normal("a", 4, 3, 0.7, &mut r);
        p.init_normal("b", 1, 3, 0.7, &mut r);
        p.init_normal("c", 3, 3, 0.7, &mut r);
        let s = std::sync::Arc::new(
            crate::numerics::SparseMatrix::from_triplets(2, 4, vec![(0, 0, 0.5), (0, 3, 0.5), (1, 2, 1.0)]).unwrap(),
        );
        let loss = |t: &mut Tape, p: &Params| {
            let a = t.param(p, "a")?;
            let b = t.param(p, "b")?;
            let c = t.param(p, "c")?;
            let h = t.add_row(a, b)?;
            let h = t.tanh(h)?;
            let g = t.gather_rows(h, &[0, 2, 2])?;
            let m = t.matmul(g, c)?;
            let e = t.exp(m)?;
            let sg = t.sigmoid(m)?;
            let mixed = t.sub(e, sg)?;
            let sp = t.spmm(&s, a)?;
            let cat = t.concat_rows(&[mixed, sp])?;
            let mr = t.mean_rows(cat)?;
            let cc = t.concat_cols(&[mr, b])?;
            let rs = t.reshape(cc, 2, 3)?;
            let ce = t.softmax_cross_entropy(rs, &[2, 0])?;
            let pr = t.sigmoid(rs)?;
            let bce = t.bce(pr, &Tensor::from_rows(&[vec![1.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]]).unwrap())?;
            let kl = t.gaussian_kl(b, mr)?;
            let l = t.add(ce, bce)?;
            t.add(l, kl)
        };
        let rep = grad_check(&p, 1e-5, 1, loss).unwrap();
        assert!(rep.max_rel_error < 1e-7, "{rep:?}");
    }
}
