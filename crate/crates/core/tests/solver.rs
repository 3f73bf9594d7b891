use vadm::diagnostics::{self, cumulative_budget, regularity_from_records, regularity_norms, AprioriReport};
use vadm::ensemble::{random_vector, EnsembleSpec, MeanConstraint};
use vadm::solver::{self, heun_if_step, nonlinear_term, viscous_decay, ForcingDescriptor, InitDescriptor, Solver, SolverConfig};
use vadm::{ops, DeconvSpec, FilterSpec, Grid, SpectralField, VectorField};

fn config(n: usize, order: u32, init: InitDescriptor) -> SolverConfig {
    let mut cfg = SolverConfig::taylor_green(n).unwrap();
    cfg.order = order;
    cfg.init = init;
    cfg.t_end = 0.1;
    cfg
}

fn random_init(seed: u64) -> InitDescriptor {
    InitDescriptor::Random { seed, band: 3, energy: 1.0 }
}

/// `div(a (x) b)` from pairwise products and first derivatives.
fn divergence_of_products(a: &VectorField, b: &VectorField) -> VectorField {
    let comp = |i: usize| {
        let mut acc = SpectralField::zeros(*a.grid());
        for j in 0..3 {
            let p = ops::product(a.component(i), b.component(j)).unwrap();
            acc = &acc + &ops::partial(&p, j);
        }
        acc
    };
    VectorField::new(comp(0), comp(1), comp(2)).unwrap()
}

fn rel_diff(a: &VectorField, b: &VectorField) -> f64 {
    ops::vector_norm(&(a - b)) / ops::vector_norm(a).max(ops::vector_norm(b))
}

#[test]
fn zeroth_order_matches_path_without_deconvolution() {
    let cfg = config(12, 0, random_init(5));
    let solver = Solver::new(cfg.clone()).unwrap();
    let decay = viscous_decay(&cfg.grid, cfg.nu, cfg.dt);
    let filter = cfg.filter;
    let mut reference = solver.initial_state().w;
    let mut state = solver.initial_state();
    for _ in 0..5 {
        reference = ops::leray_project(&heun_if_step(&reference, cfg.dt, &decay, |w| {
            let z = ops::dealias_vector(w);
            ops::leray_project(&filter.bar(&divergence_of_products(&z, &z))).scaled(-1.0)
        }));
        state = solver.step(&state).unwrap();
        assert!(rel_diff(&state.w, &reference) < 1e-12, "{}", rel_diff(&state.w, &reference));
    }
}

/// Divergence-free field with `k3 = 0` support only.
fn horizontal_sector_field(grid: Grid) -> VectorField {
    VectorField::from_fn(grid, |x, y, _| {
        [
            -y.sin() + 0.3 * (x + 2.0 * y).cos(),
            x.sin() - 0.15 * (x + 2.0 * y).cos(),
            0.5 * (2.0 * x - y).sin(),
        ]
    })
}

#[test]
fn vertical_mean_sector_evolves_as_navier_stokes() {
    let grid = Grid::cubic(12).unwrap();
    let w0 = horizontal_sector_field(grid);
    assert!(w0.divergence_defect() < 1e-14);
    for (alpha, theta, order) in [(0.5, 1.0, 1), (2.0, 0.6, 5)] {
        let mut cfg = config(12, order, InitDescriptor::Zero);
        cfg.filter = FilterSpec::new(alpha, theta).unwrap();
        let solver = Solver::new(cfg.clone()).unwrap();
        let decay = viscous_decay(&grid, cfg.nu, cfg.dt);
        let mut ns = ops::dealias_vector(&w0);
        let mut state = solver.state_from(w0.clone());
        for _ in 0..5 {
            ns = ops::leray_project(&heun_if_step(&ns, cfg.dt, &decay, |w| {
                let z = ops::dealias_vector(w);
                ops::leray_project(&ops::tensor_divergence(&z)).scaled(-1.0)
            }));
            state = solver.step(&state).unwrap();
        }
        assert!(rel_diff(&state.w, &ns) < 1e-13, "{}", rel_diff(&state.w, &ns));
        // the sector is invariant
        for (idx, c) in state.w.component(0).coeffs().iter().enumerate() {
            if state.w.component(0).mode(idx).m[2] != 0 {
                assert!(c.norm() < 1e-15);
            }
        }
    }
}

#[test]
fn convective_term_is_orthogonal_to_deconvolved_field() {
    let grid = Grid::cubic(16).unwrap();
    let band = grid.dealias_limit(0);
    for i in 0..4 {
        let w = random_vector(grid, &EnsembleSpec::new(1, band, 9), i, true, MeanConstraint::None).unwrap();
        let spec = DeconvSpec::new(FilterSpec::new(0.5, 0.75).unwrap(), 3);
        let dw = ops::dealias_vector(&spec.deconv(&w));
        let t = ops::tensor_divergence(&dw);
        // physical-space quadrature, exact for these band limits
        let (tp, dp): (Vec<_>, Vec<_>) = (0..3)
            .map(|j| (t.component(j).inverse_transform().unwrap(), dw.component(j).inverse_transform().unwrap()))
            .unzip();
        let dot: f64 = (0..3).map(|j| tp[j].iter().zip(&dp[j]).map(|(a, b)| a * b).sum::<f64>()).sum();
        let q = dot * grid.volume() / grid.len() as f64;
        assert!(q.abs() <= 1e-10 * ops::vector_norm(&t) * ops::vector_norm(&dw), "{q}");
        let nl = nonlinear_term(&w, &spec);
        assert!(nl.divergence_defect() < 1e-12);
    }
    assert_eq!(
        ops::vector_norm(&nonlinear_term(&VectorField::zeros(grid), &DeconvSpec::new(FilterSpec::new(1.0, 1.0).unwrap(), 2))),
        0.0
    );
}

#[test]
fn steps_keep_every_mode_solenoidal() {
    let cfg = config(12, 2, random_init(8));
    let solver = Solver::new(cfg).unwrap();
    let mut state = solver.initial_state();
    for _ in 0..5 {
        state = solver.step(&state).unwrap();
        let w = &state.w;
        for idx in 0..w.grid().len() {
            let m = w.component(0).mode(idx);
            let c = [0, 1, 2].map(|j| w.component(j).coeffs()[idx]);
            let kc: num_complex::Complex64 = (0..3).map(|j| c[j] * m.kd[j]).sum();
            let size = (c.iter().map(|x| x.norm_sqr()).sum::<f64>()).sqrt();
            assert!(kc.norm() <= 1e-12 * size.max(1e-300) * m.k_squared().sqrt().max(1.0), "mode {:?}", m.m);
        }
    }
}

#[test]
fn pure_decay_residual_is_the_trapezoid_defect() {
    let mut cfg = config(8, 1, InitDescriptor::SingleMode { k: [1, 0, 2], amplitude: 1.0 });
    cfg.filter = FilterSpec::new(1.0, 1.0).unwrap();
    let out = solver::run(cfg.clone()).unwrap();
    let lambda = cfg.nu * 5.0;
    let x = 2.0 * lambda * cfg.dt;
    for pair in out.records.windows(2) {
        let e0 = pair[0].model_energy;
        let defect = e0 * (((-x).exp() - 1.0) / cfg.dt + lambda * (1.0 + (-x).exp()));
        assert!((pair[1].budget_residual - defect.abs()).abs() < 1e-12 * e0, "{} vs {defect}", pair[1].budget_residual);
        // the stepper itself is exact: energy decays like e^(-2 lambda t)
        assert!((pair[1].model_energy - e0 * (-x).exp()).abs() < 1e-13 * e0);
    }
}

#[test]
fn unforced_energy_law_and_chain() {
    for order in [0, 2] {
        let cfg = config(12, order, random_init(13));
        let out = solver::run(cfg.clone()).unwrap();
        let e0 = out.records[0].model_energy;
        for p in out.records.windows(2) {
            assert!(p[1].model_energy <= p[0].model_energy + 10.0 * cfg.dt * cfg.dt * e0);
        }
        assert!(out.records.iter().all(|r| r.chain_holds(1e-12)));
        let reg = regularity_from_records(&out.records);
        assert_eq!(reg.sup_l2_time, 0.0);
        let traj = regularity_norms(out.trajectory.iter().map(|s| (s.t, &s.w)), cfg.filter.theta());
        assert!((traj.sup_l2 - reg.sup_l2).abs() < 1e-12 * reg.sup_l2);
        assert!((traj.grad_sq_integral - reg.grad_sq_integral).abs() < 1e-12 * reg.grad_sq_integral);
    }
}

fn forced(dt: f64) -> SolverConfig {
    let mut cfg = config(12, 1, random_init(17));
    cfg.forcing = ForcingDescriptor::Band { seed: 18, band: 2, amplitude: 2.0 };
    cfg.dt = dt;
    cfg.t_end = 0.4;
    cfg
}

#[test]
fn forced_cumulative_budget_is_second_order() {
    let coarse = solver::run(forced(0.02)).unwrap();
    let fine = solver::run(forced(0.01)).unwrap();
    let a = cumulative_budget(&coarse.records).last().unwrap().abs();
    let b = cumulative_budget(&fine.records).last().unwrap().abs();
    let ratio = a / b;
    assert!((3.4..=4.6).contains(&ratio), "{a:e} / {b:e} = {ratio}");
    assert!(coarse.records.iter().any(|r| r.forcing_power.abs() > 0.0));
}

#[test]
fn regularity_is_bounded_by_the_apriori_right_side() {
    let cfg = forced(0.01);
    let solver = Solver::new(cfg.clone()).unwrap();
    let out = solver.run().unwrap();
    let f_sq = ops::vector_norm(solver.forcing()).powi(2);
    let v0_sq = ops::vector_norm(&solver.initial().v0).powi(2);
    let apriori = AprioriReport::new(&out.records, v0_sq, f_sq, cfg.nu, cfg.order);
    let c = apriori.measured_constant;
    assert!(c.is_finite() && c <= 1.0, "{c}");
    assert!(apriori.violations(c).is_empty() && apriori.violations(1.0).is_empty());
    let reg = regularity_from_records(&out.records);
    let t = out.records.last().unwrap().t;
    let rhs = v0_sq + (cfg.order as f64 + 1.0) / cfg.nu * f_sq * t;
    // ||w|| <= ||A^1/2 D^1/2 w|| and nu int ||grad w||^2 <= int dissipation
    assert!(reg.sup_l2.powi(2) <= rhs);
    assert!(cfg.nu * reg.grad_sq_integral <= rhs);
}

#[test]
fn runs_are_bit_identical() {
    let a = solver::run(forced(0.02)).unwrap();
    let b = solver::run(forced(0.02)).unwrap();
    assert_eq!(a.records.len(), b.records.len());
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!(diagnostics::csv_row(x), diagnostics::csv_row(y));
    }
    assert_eq!(a.final_state, b.final_state);
}

#[test]
fn dependence_is_linear_for_small_perturbations() {
    let mut cfg = config(12, 1, InitDescriptor::TaylorGreen);
    cfg.t_end = 0.2;
    let a = solver::dependence_experiment(&cfg, 1e-6, 4).unwrap();
    let b = solver::dependence_experiment(&cfg, 2e-6, 4).unwrap();
    for (x, y) in a.delta_norms.iter().zip(&b.delta_norms) {
        assert!((y / x / 2.0 - 1.0).abs() < 0.1);
    }
    assert!(a.envelope_holds() && a.fitted_constant.is_finite() && a.pathwise_constant.is_finite());
    let zero = solver::dependence_experiment(&cfg, 0.0, 4).unwrap();
    assert!(zero.delta_norms.iter().all(|d| *d == 0.0));
}
