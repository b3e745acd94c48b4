use super::*;
use crate::lattice::{DomainKind, Site};
use approx::assert_relative_eq;

fn line_geom() -> LatticeGeometry {
    LatticeGeometry::new(DomainKind::Line1d, 32, 0.25, 32, 5.0).unwrap()
}

fn small_line_geom() -> LatticeGeometry {
    LatticeGeometry::new(DomainKind::Line1d, 16, 0.25, 16, 2.0).unwrap()
}

fn torus1_geom() -> LatticeGeometry {
    LatticeGeometry::new(DomainKind::Torus1d, 16, 1.0, 64, 2.5).unwrap()
}

fn torus3_geom() -> LatticeGeometry {
    LatticeGeometry::new(DomainKind::Torus3d, 6, 1.0, 32, 2.0).unwrap()
}

fn refs(fields: &[FrequencyField]) -> Vec<&FrequencyField> {
    fields.iter().collect()
}

#[test]
fn quotient_is_scale_invariant_per_slot_and_jointly() {
    let lam = num_complex::Complex64::new(2.5, -1.3);
    let probes = [
        ("lem31", Params::new(0.2, 0.6, 0.0), line_geom()),
        ("thm51", Params::new(-0.1, 0.55, -0.41), torus1_geom()),
        ("lem21", Params::new(0.3, 0.6, 0.0), torus1_geom()),
    ];
    for (id, params, geom) in probes {
        let case = find_case(id).unwrap();
        let fields = random_ensemble(&geom, 1.0, Sign::Plus, case.arity, 11).unwrap();
        let q0 = evaluate_quotient(&case, &params, &refs(&fields)).unwrap();
        assert!(q0.is_finite() && q0 > 0.0);
        for slot in 0..case.arity {
            let mut scaled = fields.clone();
            scaled[slot] = scaled[slot].scale(lam);
            let q1 = evaluate_quotient(&case, &params, &refs(&scaled)).unwrap();
            assert_relative_eq!(q0, q1, max_relative = 1e-10);
        }
        let all: Vec<FrequencyField> = fields.iter().map(|f| f.scale(lam)).collect();
        let q2 = evaluate_quotient(&case, &params, &refs(&all)).unwrap();
        assert_relative_eq!(q0, q2, max_relative = 1e-10);
    }
}

#[test]
fn branch_flip_with_conjugated_inputs_preserves_quotients() {
    let probes = [
        ("lem31", Params::new(0.2, 0.6, 0.0), line_geom()),
        ("thm41", Params::new(-0.3, 0.55, -0.46), torus1_geom()),
        ("cor23i", Params::new(0.3, 0.6, 0.45), small_line_geom()),
        ("cor23ii", Params::new(0.3, 0.6, -0.3), small_line_geom()),
        ("lem21", Params::new(0.3, 0.6, 0.0), torus1_geom()),
        ("thm42", Params::new(-0.25, 0.55, -0.48), torus3_geom()),
    ];
    for (id, params, geom) in probes {
        let case = find_case(id).unwrap();
        let shape = (case.build)(&params);
        let fields = random_ensemble(&geom, 1.0, Sign::Plus, case.arity, 29).unwrap();
        let q = evaluate_shape_quotient(&shape, &refs(&fields)).unwrap();
        let conj: Vec<FrequencyField> = fields.iter().map(conjugate_field).collect();
        let qf = evaluate_shape_quotient(&flip_case_signs(&shape), &refs(&conj)).unwrap();
        assert_relative_eq!(q, qf, max_relative = 1e-10);
    }
}

#[test]
fn conjugating_one_factor_of_an_l2_product_changes_nothing() {
    // both cases measure the plain L2 norm of the triple product, so the
    // pointwise modulus identity forces equal quotients on shared inputs;
    // supports are confined so the band never clips the triple sum
    let geom = line_geom();
    let params = Params::new(0.2, 0.6, 0.0);
    let confined = |site: &Site| {
        if site.xi[0].abs() <= 5 && site.tau.abs() <= 5 {
            1.0
        } else {
            0.0
        }
    };
    let fields: Vec<FrequencyField> = (0..3)
        .map(|i| gaussian_field(&geom, 1000 + i, confined))
        .collect();
    let plain = find_case("lem31").unwrap();
    let conj = find_case("cor31i").unwrap();
    let q_plain = evaluate_quotient(&plain, &params, &refs(&fields)).unwrap();
    let q_conj = evaluate_quotient(&conj, &params, &refs(&fields)).unwrap();
    assert_relative_eq!(q_plain, q_conj, max_relative = 1e-10);
}

#[test]
fn lowering_the_left_exponent_never_raises_the_quotient() {
    let geom = torus1_geom();
    for (id, hi, lo) in [
        (
            "thm41",
            Params::new(-0.3, 0.55, -0.3),
            Params::new(-0.3, 0.55, -0.45),
        ),
        (
            "thm51",
            Params::new(-0.1, 0.55, -0.41),
            Params::new(-0.1, 0.55, -0.49),
        ),
    ] {
        let case = find_case(id).unwrap();
        let fields = random_ensemble(&geom, 1.0, Sign::Plus, case.arity, 7).unwrap();
        let q_hi = evaluate_quotient(&case, &hi, &refs(&fields)).unwrap();
        let q_lo = evaluate_quotient(&case, &lo, &refs(&fields)).unwrap();
        assert!(
            q_lo <= q_hi * (1.0 + 1e-12),
            "{id}: quotient rose from {q_hi} to {q_lo} as b' decreased"
        );
    }
}

#[test]
fn two_mode_product_quotient_matches_hand_computation() {
    let geom = LatticeGeometry::new(DomainKind::Line1d, 64, 0.25, 32, 5.0).unwrap();
    let w = geom.measure_weight();
    let c = num_complex::Complex64::new;
    let mut u = FrequencyField::zeros_sparse(&geom);
    u.set(Site::new_1d(3, 2), c(1.0, 0.5));
    u.set(Site::new_1d(-5, -4), c(-0.25, 1.0));
    let mut v = FrequencyField::zeros_sparse(&geom);
    v.set(Site::new_1d(2, -1), c(0.7, 0.0));
    v.set(Site::new_1d(-1, 3), c(0.3, -0.2));

    let params = Params::new(0.3, 0.6, 0.45);
    let case = find_case("lem23i").unwrap();
    let got = evaluate_quotient(&case, &params, &[&u, &v]).unwrap();

    let br = |x: f64| (1.0 + x * x).sqrt();
    // right side: <tau + xi^2>^{b'} on u, <tau + xi^2>^{b} on v
    let m_u1 = 2.0 * 5.0 + 0.75f64.powi(2);
    let m_u2 = -4.0 * 5.0 + 1.25f64.powi(2);
    let rhs_u = (1.25 * br(m_u1).powf(0.9) * w + 1.0625 * br(m_u2).powf(0.9) * w).sqrt();
    let m_v1 = -5.0 + 0.5f64.powi(2);
    let m_v2 = 15.0 + 0.25f64.powi(2);
    let rhs_v = (0.49 * br(m_v1).powf(1.2) * w + 0.13 * br(m_v2).powf(1.2) * w).sqrt();
    // left side: four difference sites xi_1 - xi_2, coefficient
    // u(k1) conj(v(k2)), scaled by the product-transform constant
    let pairs = [
        (c(1.0, 0.5) * c(0.7, 0.0).conj(), 0.25),
        (c(1.0, 0.5) * c(0.3, -0.2).conj(), 1.0),
        (c(-0.25, 1.0) * c(0.7, 0.0).conj(), -1.75),
        (c(-0.25, 1.0) * c(0.3, -0.2).conj(), -1.0),
    ];
    let mut lhs_sq = 0.0;
    for (coef, xi) in pairs {
        lhs_sq += coef.norm_sqr() * br(xi).powf(0.6) * w;
    }
    let lhs = (w / (2.0 * std::f64::consts::PI)) * lhs_sq.sqrt();
    assert_relative_eq!(got, lhs / (rhs_u * rhs_v), max_relative = 1e-10);
}

#[test]
fn ensembles_are_deterministic_in_the_seed() {
    let geom = torus1_geom();
    let a = random_ensemble(&geom, 1.0, Sign::Plus, 3, 99).unwrap();
    let b = random_ensemble(&geom, 1.0, Sign::Plus, 3, 99).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.dense_coeffs().unwrap(), y.dense_coeffs().unwrap());
    }
    let c = random_ensemble(&geom, 1.0, Sign::Plus, 3, 100).unwrap();
    let differs = a[0]
        .dense_coeffs()
        .unwrap()
        .iter()
        .zip(c[0].dense_coeffs().unwrap())
        .any(|(x, y)| x != y);
    assert!(differs);
}

#[test]
fn ensemble_decay_controls_high_frequency_mass() {
    let geom = torus1_geom();
    let h1 = WeightSpec::new(1.0, 0.0, Sign::Plus);
    let mean_mass = |alpha: f64| {
        let fields = random_ensemble(&geom, alpha, Sign::Plus, 6, 21).unwrap();
        fields
            .iter()
            .map(|f| xsb_norm(f, &h1).powi(2))
            .sum::<f64>()
            / 6.0
    };
    assert!(mean_mass(0.0) > mean_mass(2.0));
}

#[test]
fn ensemble_mean_square_matches_envelope_sum() {
    let geom = torus1_geom();
    let envelope = WeightSpec::new(-1.0, -1.0, Sign::Plus);
    let mut expected = 0.0;
    for flat in 0..geom.site_count() {
        let site = geom.site_at(flat);
        if geom.in_symmetric_band(&site) {
            expected += envelope.value(&geom, &site).powi(2) * geom.measure_weight();
        }
    }
    let count = 64;
    let fields = random_ensemble(&geom, 1.0, Sign::Plus, count, 4242).unwrap();
    let zero = WeightSpec::new(0.0, 0.0, Sign::Plus);
    let mean: f64 = fields
        .iter()
        .map(|f| xsb_norm(f, &zero).powi(2))
        .sum::<f64>()
        / count as f64;
    assert_relative_eq!(mean, expected, max_relative = 0.15);
}

#[test]
fn zero_budget_search_evaluates_the_seeded_candidate() {
    let geom = torus1_geom();
    let case = find_case("thm41").unwrap();
    let params = Params::new(-0.3, 0.55, -0.46);
    let budget = SearchBudget {
        samples: 0,
        climb_steps: 0,
    };
    let rep = maximize_quotient(&case, &params, &geom, &budget, 5).unwrap();
    assert_eq!(rep.samples, 1);
    assert_eq!(rep.argmax_seed, mix_seed(5, 0));
    assert_eq!(rep.fingerprint, geom.fingerprint());
    assert_eq!(rep.refinement_ratio, None);

    let shape = (case.build)(&params);
    let fields: Vec<FrequencyField> = shape
        .factors
        .iter()
        .enumerate()
        .map(|(i, factor)| {
            let env = WeightSpec::new(-1.0, -1.0, factor.weight.sign);
            let g = geom.clone();
            gaussian_field(&geom, mix_seed(mix_seed(5, 0), i as u64), move |site| {
                env.value(&g, site)
            })
        })
        .collect();
    let q = evaluate_shape_quotient(&shape, &refs(&fields)).unwrap();
    assert_relative_eq!(rep.max_quotient, q, max_relative = 1e-14);
}

#[test]
fn climbing_never_loses_ground_and_reruns_agree() {
    let geom = torus1_geom();
    let case = find_case("thm41").unwrap();
    let params = Params::new(-0.3, 0.55, -0.46);
    let flat = SearchBudget {
        samples: 6,
        climb_steps: 0,
    };
    let climb = SearchBudget {
        samples: 6,
        climb_steps: 8,
    };
    let base = maximize_quotient(&case, &params, &geom, &flat, 3).unwrap();
    let climbed = maximize_quotient(&case, &params, &geom, &climb, 3).unwrap();
    assert!(climbed.max_quotient >= base.max_quotient);
    let again = maximize_quotient(&case, &params, &geom, &climb, 3).unwrap();
    assert_eq!(climbed, again);
}

#[test]
fn refinement_study_reports_the_ratio_on_the_base_grid() {
    let geom = torus1_geom();
    let case = find_case("lem21").unwrap();
    let params = Params::new(0.3, 0.6, 0.0);
    let budget = SearchBudget {
        samples: 2,
        climb_steps: 0,
    };
    let rep = refinement_study(&case, &params, &geom, 2, &budget, 17).unwrap();
    let ratio = rep.refinement_ratio.expect("ratio filled in");
    assert!(ratio.is_finite() && ratio > 0.0);
    assert_eq!(rep.fingerprint, geom.fingerprint());
}

#[test]
fn harness_rejects_malformed_requests() {
    let geom = line_geom();
    let case = find_case("lem31").unwrap();
    let params = Params::new(0.2, 0.6, 0.0);
    let fields = random_ensemble(&geom, 1.0, Sign::Plus, 2, 1).unwrap();
    let err = evaluate_quotient(&case, &params, &refs(&fields)).unwrap_err();
    assert!(matches!(err, CoreError::InvalidInput(_)));

    let torus_fields = random_ensemble(&torus1_geom(), 1.0, Sign::Plus, 3, 1).unwrap();
    let err = evaluate_quotient(&case, &params, &refs(&torus_fields)).unwrap_err();
    assert!(matches!(err, CoreError::InvalidInput(_)));

    let zeros: Vec<FrequencyField> = (0..3).map(|_| FrequencyField::zeros_dense(&geom)).collect();
    let err = evaluate_quotient(&case, &params, &refs(&zeros)).unwrap_err();
    assert!(matches!(err, CoreError::UndefinedQuotient));

    let err = random_ensemble(&geom, -1.0, Sign::Plus, 1, 1).unwrap_err();
    assert!(matches!(err, CoreError::InvalidInput(_)));

    let shape = CaseShape {
        lhs: LhsSpec {
            kind: LhsKind::Xsb(WeightSpec::new(0.0, 0.0, Sign::Plus)),
            combiner: Combiner::Bilinear {
                symbol: crate::bilinear::BilinearSymbol::j_minus(0.5),
                left: 1,
                right: 1,
            },
        },
        factors: vec![
            FactorSpec::plain(false, WeightSpec::new(0.0, 0.5, Sign::Plus)),
            FactorSpec::plain(false, WeightSpec::new(0.0, 0.5, Sign::Plus)),
        ],
    };
    let two = random_ensemble(&geom, 1.0, Sign::Plus, 2, 8).unwrap();
    let err = evaluate_shape_quotient(&shape, &refs(&two)).unwrap_err();
    assert!(matches!(err, CoreError::InvalidInput(_)));
}

#[test]
fn mixed_left_sides_evaluate_on_products() {
    let geom = line_geom();
    let case = find_case("lem23ii").unwrap();
    let params = Params::new(0.25, 0.6, 0.0);
    let fields = random_ensemble(&geom, 1.0, Sign::Plus, 2, 31).unwrap();
    let q = evaluate_quotient(&case, &params, &refs(&fields)).unwrap();
    assert!(q.is_finite() && q > 0.0);
}
