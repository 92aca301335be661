//! Autoregressive score matching on conditional hazards.
//!
//! Per event the temporal score is `ψ_T = ∂_t log λ_T − λ_T` in the window
//! `(t_{n-1}, t_max)`; the weighted implicit objective is
//!
//! ```text
//! Σ_n ( ½ψ_T² + ∂_t ψ_T ) h_T(t_n) + ψ_T ∂_t h_T(t_n)
//! ```
//!
//! plus, for spatio-temporal families, the same construction on the
//! conditional location score over the spatial window. The unweighted form
//! (`h_T ≡ 1`) is the broken baseline. Marks never enter these terms; they
//! are handled by the classification loss.

use super::{tag_seq, ObjectiveReport};
use crate::domain::{SpatialWeight, TemporalWeight};
use crate::error::Result;
use crate::io::Dataset;
use crate::models::ProcessModel;

/// Accumulate the weighted temporal score terms of one sequence.
fn temporal_part(
    model: &ProcessModel,
    data: &Dataset,
    seq_index: usize,
    w_t: &TemporalWeight,
    value: &mut f64,
    grad: &mut [f64],
) -> Result<()> {
    let seq = &data.sequences[seq_index];
    for n in 0..seq.len() {
        let t = seq.times[n];
        let te = model
            .temporal_eval(&data.domain, seq, n, t)
            .map_err(|e| tag_seq(e, seq_index))?;
        let (h, dh) = w_t.eval(seq.t_prev(n), t, data.domain.t_max);
        *value += (0.5 * te.psi * te.psi + te.dpsi_dt) * h + te.psi * dh;
        for i in 0..grad.len() {
            grad[i] += (te.psi * te.d_psi[i] + te.d_dpsi_dt[i]) * h + te.d_psi[i] * dh;
        }
    }
    Ok(())
}

/// Accumulate the weighted spatial score terms of one sequence.
fn spatial_part(
    model: &ProcessModel,
    data: &Dataset,
    seq_index: usize,
    w_s: &SpatialWeight,
    value: &mut f64,
    grad: &mut [f64],
) -> Result<()> {
    let seq = &data.sequences[seq_index];
    let rect = data.domain.require_space()?;
    for n in 0..seq.len() {
        let se = model
            .spatial_eval(&data.domain, seq, n)
            .map_err(|e| tag_seq(e, seq_index))?;
        let (h, dh) = w_s.eval(rect, seq.loc(n)?);
        let sq = se.psi[0] * se.psi[0] + se.psi[1] * se.psi[1];
        *value += (0.5 * sq + se.div) * h + se.psi[0] * dh[0] + se.psi[1] * dh[1];
        for i in 0..grad.len() {
            let dot = se.psi[0] * se.d_psi[i][0] + se.psi[1] * se.d_psi[i][1];
            *(&mut grad[i]) +=
                (dot + se.d_div[i]) * h + se.d_psi[i][0] * dh[0] + se.d_psi[i][1] * dh[1];
        }
    }
    Ok(())
}

/// Unweighted autoregressive score matching (`h_T ≡ 1`), the deliberately
/// broken baseline. `marks` adds the type cross-entropy so marked parameters
/// stay identifiable; the score terms themselves never see marks.
pub fn j_asm_implicit(
    model: &ProcessModel,
    data: &Dataset,
    marks: bool,
) -> Result<ObjectiveReport> {
    let mut rep = j_awsm_implicit(model, data, &TemporalWeight::constant_one(), None)?;
    if marks && data.domain.n_marks > 1 {
        let ce = super::mark_ce(model, data)?;
        rep.value += ce.value;
        for (g, c) in rep.grad.iter_mut().zip(&ce.grad) {
            *g += c;
        }
        if let (Some(ps), Some(cs)) = (rep.per_seq.as_mut(), ce.per_seq.as_ref()) {
            for (p, c) in ps.iter_mut().zip(cs) {
                *p += c;
            }
        }
    }
    Ok(rep)
}

/// Weighted autoregressive score matching: temporal term always, spatial
/// term when a spatial weight is supplied (spatio-temporal families).
pub fn j_awsm_implicit(
    model: &ProcessModel,
    data: &Dataset,
    w_t: &TemporalWeight,
    w_s: Option<&SpatialWeight>,
) -> Result<ObjectiveReport> {
    let dim = model.params().len();
    let mut parts = Vec::with_capacity(data.sequences.len());
    for i in 0..data.sequences.len() {
        let mut value = 0.0;
        let mut grad = vec![0.0; dim];
        temporal_part(model, data, i, w_t, &mut value, &mut grad)?;
        if let Some(ws) = w_s {
            spatial_part(model, data, i, ws, &mut value, &mut grad)?;
        }
        parts.push((value, grad));
    }
    Ok(ObjectiveReport::reduce(parts, dim))
}

/// Explicit autoregressive discrepancy against the true model:
/// `½ mean Σ_n (ψ_T,θ − ψ_T,*)² h_T (+ spatial analog)`. Companion of
/// [`j_awsm_implicit`] for the equivalence and non-identifiability tests.
pub fn l_awsm_explicit(
    model: &ProcessModel,
    data: &Dataset,
    w_t: &TemporalWeight,
    w_s: Option<&SpatialWeight>,
    oracle: &ProcessModel,
) -> Result<ObjectiveReport> {
    let dim = model.params().len();
    let mut parts = Vec::with_capacity(data.sequences.len());
    for (idx, seq) in data.sequences.iter().enumerate() {
        let mut value = 0.0;
        let mut grad = vec![0.0; dim];
        for n in 0..seq.len() {
            let t = seq.times[n];
            let te = model
                .temporal_eval(&data.domain, seq, n, t)
                .map_err(|e| tag_seq(e, idx))?;
            let truth = oracle
                .temporal_eval(&data.domain, seq, n, t)
                .map_err(|e| tag_seq(e, idx))?;
            let (h, _) = w_t.eval(seq.t_prev(n), t, data.domain.t_max);
            let diff = te.psi - truth.psi;
            value += 0.5 * h * diff * diff;
            for i in 0..dim {
                grad[i] += h * diff * te.d_psi[i];
            }
        }
        if let Some(ws) = w_s {
            let rect = data.domain.require_space()?;
            for n in 0..seq.len() {
                let se = model
                    .spatial_eval(&data.domain, seq, n)
                    .map_err(|e| tag_seq(e, idx))?;
                let truth = oracle
                    .spatial_eval(&data.domain, seq, n)
                    .map_err(|e| tag_seq(e, idx))?;
                let (h, _) = ws.eval(rect, seq.loc(n)?);
                let dx = se.psi[0] - truth.psi[0];
                let dy = se.psi[1] - truth.psi[1];
                value += 0.5 * h * (dx * dx + dy * dy);
                for i in 0..dim {
                    grad[i] += h * (dx * se.d_psi[i][0] + dy * se.d_psi[i][1]);
                }
            }
        }
        parts.push((value, grad));
    }
    Ok(ObjectiveReport::reduce(parts, dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ObservationDomain;
    use crate::models::{
        GaussianStHawkes, LogisticIntensity, MultivariateExpHawkes, TiltedConstant,
    };
    use crate::optimize::grad_check;
    use crate::simulate::{simulate_dataset, SimConfig};
    use approx::assert_relative_eq;

    fn hawkes(mu: Vec<f64>, alpha: Vec<f64>) -> ProcessModel {
        ProcessModel::MultivariateExpHawkes(
            MultivariateExpHawkes::new(mu, alpha, 5.0).unwrap(),
        )
    }

    fn table_model() -> ProcessModel {
        hawkes(vec![1.0, 1.0], vec![1.6, 0.2, 1.0, 1.0])
    }

    fn hawkes_data(n: usize, seed: u64) -> Dataset {
        let domain = ObservationDomain::new(10.0, None, 2).unwrap();
        simulate_dataset(&table_model(), &domain, &SimConfig::new(n, seed)).unwrap()
    }

    #[test]
    fn awsm_gradient_matches_finite_differences_on_hawkes() {
        let data = hawkes_data(6, 31);
        let w = TemporalWeight::distance();
        let f = |theta: &[f64]| {
            let m = table_model().with_params(theta)?;
            let rep = j_awsm_implicit(&m, &data, &w, None)?;
            Ok((rep.value, rep.grad))
        };
        let theta = [0.9, 1.2, 1.4, 0.3, 0.8, 1.1];
        assert!(grad_check(f, &theta).unwrap() < 1e-6);
    }

    #[test]
    fn awsm_gradient_matches_finite_differences_on_st() {
        let domain = ObservationDomain::new(
            1.5,
            Some(crate::domain::Rect::new([-2.0, 2.0], [-2.0, 2.0]).unwrap()),
            1,
        )
        .unwrap();
        let truth =
            ProcessModel::GaussianStHawkes(GaussianStHawkes::new(0.5, 1.0, 2.0).unwrap());
        let data = simulate_dataset(&truth, &domain, &SimConfig::new(8, 9)).unwrap();
        let w_t = TemporalWeight::product();
        let w_s = SpatialWeight::product();
        let f = |theta: &[f64]| {
            let m = truth.with_params(theta)?;
            let rep = j_awsm_implicit(&m, &data, &w_t, Some(&w_s))?;
            Ok((rep.value, rep.grad))
        };
        assert!(grad_check(f, &[0.7, 0.8, 1.6]).unwrap() < 2e-5);
    }

    #[test]
    fn asm_is_awsm_with_unit_weight() {
        let data = hawkes_data(4, 17);
        let m = table_model();
        let asm = j_asm_implicit(&m, &data, false).unwrap();
        let awsm = j_awsm_implicit(&m, &data, &TemporalWeight::constant_one(), None).unwrap();
        assert_eq!(asm.value, awsm.value);
        assert_eq!(asm.grad, awsm.grad);
    }

    #[test]
    fn asm_on_homogeneous_poisson_has_closed_form() {
        // constant hazard λ = c: ψ = −c, ∂ψ = 0 ⇒ per sequence N·c²/2,
        // per event ½ψ² = ½c², so d/dc contributes c; the ∂ψ term is θ-free
        let domain = ObservationDomain::temporal(20.0).unwrap();
        let truth = ProcessModel::TiltedConstant(TiltedConstant::new(1.5, 0.0).unwrap());
        let data = simulate_dataset(&truth, &domain, &SimConfig::new(20, 4)).unwrap();
        let events: f64 = data.n_events() as f64 / data.len() as f64;
        let rep = j_asm_implicit(&truth, &data, false).unwrap();
        assert_relative_eq!(rep.value, 0.5 * 1.5 * 1.5 * events, max_relative = 1e-12);
        assert_relative_eq!(rep.grad[0], 1.5 * events, max_relative = 1e-12);
    }

    #[test]
    fn awsm_logistic_has_no_shape_gradient() {
        // ψ_T ≡ −c for the gap-logistic family: the weighted autoregressive
        // objective carries no information about the shape parameter at all.
        let domain = ObservationDomain::temporal(50.0).unwrap();
        let truth =
            ProcessModel::LogisticIntensity(LogisticIntensity::new(2.0, 0.02).unwrap());
        let data = simulate_dataset(&truth, &domain, &SimConfig::new(10, 6)).unwrap();
        for beta in [0.005, 0.02, 0.3] {
            let m = ProcessModel::LogisticIntensity(
                LogisticIntensity::new(2.0, beta).unwrap(),
            );
            let rep = j_awsm_implicit(&m, &data, &TemporalWeight::distance(), None).unwrap();
            assert_eq!(rep.grad[1], 0.0);
        }
    }

    #[test]
    fn explicit_awsm_zero_for_every_tilt() {
        // the tilted family shares its conditional score with the constant
        // hazard it perturbs, so the explicit loss vanishes identically
        let domain = ObservationDomain::temporal(20.0).unwrap();
        let oracle = ProcessModel::TiltedConstant(TiltedConstant::new(1.5, 0.0).unwrap());
        let data = simulate_dataset(&oracle, &domain, &SimConfig::new(30, 12)).unwrap();
        for tilt in [-0.5, 0.0, 0.5, 2.0] {
            let m = ProcessModel::TiltedConstant(TiltedConstant::new(1.5, tilt).unwrap());
            let rep =
                l_awsm_explicit(&m, &data, &TemporalWeight::distance(), None, &oracle)
                    .unwrap();
            assert!(rep.value.abs() < 1e-10, "tilt {tilt}: loss {}", rep.value);
        }
    }

    #[test]
    fn explicit_awsm_nonnegative_and_zero_at_oracle() {
        let data = hawkes_data(5, 8);
        let m = table_model();
        let at_truth =
            l_awsm_explicit(&m, &data, &TemporalWeight::distance(), None, &m).unwrap();
        assert_eq!(at_truth.value, 0.0);
        let off = hawkes(vec![1.3, 0.7], vec![1.0, 0.5, 0.5, 1.2]);
        let away =
            l_awsm_explicit(&off, &data, &TemporalWeight::distance(), None, &m).unwrap();
        assert!(away.value > 0.0);
    }
}
