use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vadm::ensemble::{random_scalar, random_vector, EnsembleSpec, MeanConstraint};
use vadm::filter::DeconvChainReport;
use vadm::ineq::{self, agmon_ratio, ratio_sweep, Lemma, Periodic1d};
use vadm::{ops, DeconvSpec, FilterSpec, Grid, SpectralField, VectorField};

fn field(n: usize, band: i64, seed: u64, divergence_free: bool) -> VectorField {
    random_vector(Grid::cubic(n).unwrap(), &EnsembleSpec::new(1, band, seed), 0, divergence_free, MeanConstraint::None).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip(seed in any::<u64>(), n in prop::sample::select(vec![4usize, 8, 12])) {
        let grid = Grid::new(n, 8, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let back = SpectralField::forward_transform(grid, &samples).unwrap().inverse_transform().unwrap();
        let err = samples.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn leray_is_an_orthogonal_projection(seed in any::<u64>()) {
        let u = field(8, 3, seed, false);
        let v = field(8, 3, seed ^ 1, false);
        let pu = ops::leray_project(&u);
        prop_assert!(pu.divergence_defect() <= 1e-12);
        prop_assert!(ops::vector_norm(&(&ops::leray_project(&pu) - &pu)) <= 1e-13 * ops::vector_norm(&u));
        let a = ops::vector_inner_product(&pu, &v).unwrap();
        let b = ops::vector_inner_product(&u, &ops::leray_project(&v)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * ops::vector_norm(&u) * ops::vector_norm(&v));
        let phi = random_scalar(*u.grid(), &EnsembleSpec::new(1, 3, seed), 0, MeanConstraint::None).unwrap();
        let g = ops::gradient(&phi);
        prop_assert!(ops::vector_norm(&ops::leray_project(&g)) <= 1e-13 * ops::vector_norm(&g));
    }

    #[test]
    fn horizontal_gradient_is_dominated(seed in any::<u64>()) {
        let u = field(8, 3, seed, false);
        prop_assert!(ops::horizontal_gradient_norm(&u) <= ops::gradient_norm(&u));
    }

    #[test]
    fn filter_parseval(seed in any::<u64>(), alpha in 0.05f64..3.0, theta in 0.0f64..=1.0) {
        let spec = FilterSpec::new(alpha, theta).unwrap();
        let v = field(8, 3, seed, false);
        let half = spec.filter_a_half(&v);
        let lhs = ops::vector_inner_product(&half, &half).unwrap();
        let rhs = ops::vector_norm(&v).powi(2) + spec.seminorm_weight() * ops::vector_vertical_seminorm(&v, theta).powi(2);
        prop_assert!(rel(lhs, rhs) <= 1e-12);
    }

    #[test]
    fn deconvolution_chain(seed in any::<u64>(), alpha in 0.05f64..3.0, theta in 0.0f64..=1.0, order in 0u32..20) {
        let spec = DeconvSpec::new(FilterSpec::new(alpha, theta).unwrap(), order);
        let v = field(8, 3, seed, false);
        let found = DeconvChainReport::measure(&spec, &v).violations(1e-10);
        prop_assert!(found.is_empty(), "{found:?}");
    }

    #[test]
    fn deconvolution_error_is_monotone(seed in any::<u64>(), alpha in 0.05f64..3.0, theta in 0.0f64..=1.0) {
        let filter = FilterSpec::new(alpha, theta).unwrap();
        let v = field(8, 3, seed, false);
        let bar_v = filter.bar(&v);
        let errors: Vec<f64> = (0..8)
            .map(|n| ops::vector_norm(&(&DeconvSpec::new(filter, n).deconv(&bar_v) - &v)))
            .collect();
        for p in errors.windows(2) {
            prop_assert!(p[1] <= p[0] * (1.0 + 1e-12) + 1e-14);
        }
    }

    #[test]
    fn agmon_split_bound_holds(seed in any::<u64>(), s in 0.55f64..=1.0, band in 1i64..8) {
        let spec = EnsembleSpec::new(1, band, seed);
        let g = Periodic1d::random_real(16, &spec, 0).unwrap();
        let r = agmon_ratio(&g, s).unwrap();
        prop_assert!(r.bound_holds(), "{r:?}");
        // explicit partial sums over the stored modes
        let kappa = r.kappa.floor() as i64;
        let low: f64 = g.modes().filter(|(k, _)| *k != 0 && k.abs() <= kappa).map(|(_, c)| c.norm()).sum();
        let high: f64 = g.modes().filter(|(k, _)| k.abs() > kappa).map(|(_, c)| c.norm()).sum();
        prop_assert!(r.sup_norm <= (low + high) * (1.0 + 1e-12));
        for lambda in [1e-3, 1.0, 1e3] {
            prop_assert!(rel(agmon_ratio(&g.scaled(lambda), s).unwrap().ratio, r.ratio) <= 1e-10);
        }
    }

    #[test]
    fn ratios_are_scale_invariant(seed in any::<u64>(), s in 0.55f64..=1.0) {
        let grid = Grid::cubic(8).unwrap();
        let spec = EnsembleSpec::new(1, 2, seed);
        let draw = |i, mean| random_vector(grid, &spec, i, true, mean).unwrap();
        let u = draw(0, MeanConstraint::Horizontal);
        let (a, b, c) = (draw(1, MeanConstraint::Vertical), draw(2, MeanConstraint::Vertical), draw(3, MeanConstraint::Vertical));
        let lady = ineq::ladyzhenskaya_ratio(&u).unwrap();
        let emb = ineq::vertical_embedding_ratio(&a, s).unwrap();
        let t1 = ineq::trilinear_ratio_i(&a, &b, &c, s).unwrap();
        let t2 = ineq::trilinear_ratio_ii(&a, &b, &c, s).unwrap();
        for lambda in [1e-3, 1.0, 1e3] {
            prop_assert!(rel(ineq::ladyzhenskaya_ratio(&u.scaled(lambda)).unwrap(), lady) <= 1e-10);
            prop_assert!(rel(ineq::vertical_embedding_ratio(&a.scaled(lambda), s).unwrap(), emb) <= 1e-10);
            let (la, lc) = (a.scaled(lambda), c.scaled(1.0 / lambda));
            prop_assert!(rel(ineq::trilinear_ratio_i(&la, &b, &lc, s).unwrap(), t1) <= 1e-10);
            prop_assert!(rel(ineq::trilinear_ratio_ii(&la, &b, &lc, s).unwrap(), t2) <= 1e-10);
        }
        // integration by parts swaps the roles of v and w
        prop_assert!(rel(t2, ineq::trilinear_ratio_i(&a, &c, &b, s).unwrap()) <= 1e-8);
    }
}

#[test]
fn ensemble_maxima_are_monotone_in_size() {
    let grid = Grid::cubic(8).unwrap();
    let spec = EnsembleSpec::new(40, 2, 3);
    for lemma in [Lemma::Ladyzhenskaya, Lemma::VerticalEmbedding, Lemma::TrilinearI] {
        let r = ratio_sweep(grid, &spec, lemma, 0.75).unwrap();
        let running = r.running_max();
        assert!(running.windows(2).all(|p| p[1] >= p[0]));
        assert_eq!(*running.last().unwrap(), r.max_ratio);
        assert!(r.max_ratio >= r.mean_ratio && r.mean_ratio >= 0.0);
        // a prefix ensemble never has a larger maximum
        let prefix = ratio_sweep(grid, &EnsembleSpec::new(10, 2, 3), lemma, 0.75).unwrap();
        assert_eq!(prefix.max_ratio, running[9]);
    }
}
