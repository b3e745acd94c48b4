//! The case table.  Each entry transcribes one inequality: which domain,
//! how many factors, which factor is conjugated, which weights the right
//! side carries, and what measures the left side.  `admissible` encodes
//! the hypotheses on `(s, b, b')` with open bounds kept strict; the
//! `*-target` entries describe the quotients the counterexample families
//! drive, with `admissible` marking where unbounded growth is ruled out.

use super::{CaseShape, Combiner, EstimateCase, FactorSpec, LhsKind, LhsSpec, Params};
use crate::bilinear::BilinearSymbol;
use crate::lattice::{DomainKind, Sign};
use crate::norms::{MixedNormSpec, WeightSpec};

fn w(s: f64, b: f64) -> WeightSpec {
    WeightSpec::new(s, b, Sign::Plus)
}

fn fac(conjugated: bool, s: f64, b: f64) -> FactorSpec {
    FactorSpec::plain(conjugated, w(s, b))
}

fn product(kind: LhsKind, factors: Vec<FactorSpec>) -> CaseShape {
    CaseShape {
        lhs: LhsSpec {
            kind,
            combiner: Combiner::PointwiseProduct,
        },
        factors,
    }
}

fn xsb(s: f64, b: f64) -> LhsKind {
    LhsKind::Xsb(w(s, b))
}

fn mixed(p: f64, q: f64, sigma: f64) -> LhsKind {
    LhsKind::Mixed(MixedNormSpec::new(p, q, sigma))
}

// --- single-factor space-time integrability bounds ---

fn lem21_build(p: &Params) -> CaseShape {
    product(mixed(6.0, 6.0, 0.0), vec![fac(false, p.s, p.b)])
}
fn lem21_adm(p: &Params) -> bool {
    p.s > 0.0 && p.b > 0.5
}

fn cor21_build(p: &Params) -> CaseShape {
    product(mixed(8.0, 4.0, 0.0), vec![fac(false, p.s, p.b)])
}

fn lem22i_build(p: &Params) -> CaseShape {
    product(mixed(4.0, 4.0, 0.0), vec![fac(false, p.s, p.b)])
}

fn lem22ii_build(p: &Params) -> CaseShape {
    product(mixed(4.0, 4.0, 0.0), vec![fac(false, p.s, p.b)])
}
fn lem22ii_adm(p: &Params) -> bool {
    p.s > 0.25 && p.b > 0.5
}

fn cor22_build(p: &Params) -> CaseShape {
    product(mixed(4.0, 10.0 / 3.0, 0.0), vec![fac(false, p.s, p.b)])
}
fn cor22_adm(p: &Params) -> bool {
    p.s > 0.2 && p.b > 0.45
}

// --- bilinear bounds on the line ---

fn lem23i_build(p: &Params) -> CaseShape {
    product(
        xsb(p.s, 0.0),
        vec![fac(false, 0.0, p.bprime), fac(true, 0.0, p.b)],
    )
}
fn lem23i_adm(p: &Params) -> bool {
    (0.0..=0.5).contains(&p.s) && p.b > 0.5 && p.bprime > 0.25 + p.s / 2.0
}

fn lem23ii_build(p: &Params) -> CaseShape {
    product(
        mixed(4.0 / (1.0 + 2.0 * p.s), 2.0, p.s),
        vec![fac(false, 0.0, p.b), fac(true, 0.0, p.b)],
    )
}
fn lem23ii_adm(p: &Params) -> bool {
    (0.0..=0.5).contains(&p.s) && p.b > 0.5
}

fn lem23iii_build(p: &Params) -> CaseShape {
    product(
        xsb(-p.s, p.bprime),
        vec![fac(false, -p.s, p.b), fac(false, 0.0, 0.0)],
    )
}
fn lem23iii_adm(p: &Params) -> bool {
    (0.0..=0.5).contains(&p.s) && p.b > 0.5 && p.bprime < -0.25 - p.s / 2.0
}

fn cor23i_build(p: &Params) -> CaseShape {
    CaseShape {
        lhs: LhsSpec {
            kind: xsb(0.0, 0.0),
            combiner: Combiner::Bilinear {
                symbol: BilinearSymbol::j_minus(p.s),
                left: 0,
                right: 1,
            },
        },
        factors: vec![fac(false, 0.0, p.b), fac(false, 0.0, p.bprime)],
    }
}
fn cor23i_adm(p: &Params) -> bool {
    (0.0..=0.5).contains(&p.s) && p.b > 0.5 && p.bprime > 0.25 + p.s / 2.0
}

fn cor23ii_build(p: &Params) -> CaseShape {
    CaseShape {
        lhs: LhsSpec {
            kind: xsb(0.0, p.bprime),
            combiner: Combiner::Bilinear {
                symbol: BilinearSymbol::j_plus(p.s),
                left: 1,
                right: 0,
            },
        },
        factors: vec![fac(true, 0.0, p.b), fac(false, 0.0, 0.0)],
    }
}
fn cor23ii_adm(p: &Params) -> bool {
    (0.0..=0.5).contains(&p.s) && p.b > 0.5 && p.bprime > -0.25 - p.s / 2.0
}

// --- trilinear smoothing on the line ---

fn lem31_build(p: &Params) -> CaseShape {
    product(
        xsb(0.0, 0.0),
        vec![
            fac(false, p.s, p.b),
            fac(false, -p.s, p.b),
            fac(false, 0.0, p.b),
        ],
    )
}
fn lem31_adm(p: &Params) -> bool {
    (0.0..=0.25).contains(&p.s) && p.b > 0.5
}

fn cor31i_build(p: &Params) -> CaseShape {
    product(
        xsb(0.0, 0.0),
        vec![
            fac(true, p.s, p.b),
            fac(false, -p.s, p.b),
            fac(false, 0.0, p.b),
        ],
    )
}

fn cor31ii_build(p: &Params) -> CaseShape {
    product(
        xsb(-p.s, -p.b),
        vec![
            fac(true, 0.0, 0.0),
            fac(false, -p.s, p.b),
            fac(false, 0.0, p.b),
        ],
    )
}

fn cor31iii_build(p: &Params) -> CaseShape {
    product(
        xsb(p.s, 0.0),
        vec![
            fac(true, p.s, p.b),
            fac(false, 0.0, p.b),
            fac(false, 0.0, p.b),
        ],
    )
}

fn cor31iv_build(p: &Params) -> CaseShape {
    product(
        xsb(-p.s, -p.b),
        vec![
            fac(true, -p.s, 0.0),
            fac(false, 0.0, p.b),
            fac(false, 0.0, p.b),
        ],
    )
}

fn lem32i_build(p: &Params) -> CaseShape {
    product(
        xsb(p.s, 0.0),
        vec![
            fac(false, 0.0, p.b),
            fac(true, 0.0, p.b),
            fac(false, p.s, p.b),
        ],
    )
}
fn lem32i_adm(p: &Params) -> bool {
    p.s.abs() < 0.5 && p.b > 0.5
}

fn lem32ii_build(p: &Params) -> CaseShape {
    product(
        xsb(p.s, 0.0),
        vec![
            fac(false, 0.0, p.b),
            fac(true, p.s, p.b),
            fac(false, 0.0, p.b),
        ],
    )
}
fn lem32ii_adm(p: &Params) -> bool {
    -0.5 < p.s && p.s <= 0.0 && p.b > 0.5
}

fn lem33_build(p: &Params) -> CaseShape {
    product(
        xsb(p.s, 0.0),
        vec![
            fac(false, p.s, p.b),
            fac(false, 0.0, p.b),
            fac(false, 0.0, p.b),
        ],
    )
}

// --- conjugate-product contraction bounds ---

fn thm41_build(p: &Params) -> CaseShape {
    product(xsb(0.0, p.bprime), vec![fac(true, p.s, p.b); 3])
}
fn thm41_adm(p: &Params) -> bool {
    p.s <= 0.0
        && p.s > -1.0 / 3.0
        && p.bprime > -0.5
        && p.bprime < 1.5 * p.s
        && p.b > 0.5
}

fn thm41_2d2_build(p: &Params) -> CaseShape {
    product(xsb(0.0, p.bprime), vec![fac(true, p.s, p.b); 2])
}
fn thm41_2d2_adm(p: &Params) -> bool {
    p.s <= 0.0 && p.s > -0.5 && p.bprime > -0.5 && p.bprime < p.s && p.b > 0.5
}

fn thm42_build(p: &Params) -> CaseShape {
    product(xsb(p.s, p.bprime), vec![fac(true, p.s, p.b); 2])
}
fn thm42_adm(p: &Params) -> bool {
    p.s <= 0.0
        && p.s > -0.3
        && p.bprime > -0.5
        && p.bprime < p.s / 2.0 - 0.35
        && p.b > 0.5
}

fn thm43_sigma(p: &Params) -> f64 {
    (3.0 * p.s - 2.0 * p.bprime).min(0.0) - 0.05
}

fn thm43_conj_build(p: &Params) -> CaseShape {
    product(xsb(thm43_sigma(p), p.bprime), vec![fac(true, p.s, p.b); 3])
}
fn thm43_adm(p: &Params) -> bool {
    p.s <= 0.0
        && p.s > -5.0 / 12.0
        && p.bprime > -0.5
        && p.bprime < (0.25 + 3.0 * p.s) / 2.0
        && p.b > 0.5
}

fn thm43_plain_build(p: &Params) -> CaseShape {
    product(xsb(thm43_sigma(p), p.bprime), vec![fac(false, p.s, p.b); 3])
}

fn thm44_build(p: &Params) -> CaseShape {
    product(
        xsb(p.s, p.bprime),
        vec![
            fac(false, p.s, p.b),
            fac(true, p.s, p.b),
            fac(true, p.s, p.b),
        ],
    )
}
fn thm44_adm(p: &Params) -> bool {
    p.s <= -0.25
        && p.s > -0.4
        && p.bprime > -0.5
        && p.bprime < (p.s - 0.1).min(p.s / 2.0 - 0.25)
        && p.b > 0.5
}

fn thm51_build(p: &Params) -> CaseShape {
    product(xsb(p.s, p.bprime), vec![fac(true, p.s, p.b); 4])
}
fn thm51_adm(p: &Params) -> bool {
    p.s <= 0.0
        && p.s > -1.0 / 6.0
        && p.bprime > -0.5
        && p.bprime < 1.5 * p.s - 0.25
        && p.b > 0.5
}

fn prop51_build(p: &Params) -> CaseShape {
    product(
        xsb(p.s, p.bprime),
        vec![
            fac(false, p.s, p.b),
            fac(false, p.s, p.b),
            fac(true, p.s, p.b),
            fac(true, p.s, p.b),
        ],
    )
}
fn prop51_adm(p: &Params) -> bool {
    p.s <= 0.0
        && p.s > -0.125
        && p.bprime > -0.5
        && p.bprime < 2.0 * p.s - 0.25
        && p.b > 0.5
}

fn thm52_u4_build(p: &Params) -> CaseShape {
    product(xsb(p.s, p.bprime), vec![fac(false, p.s, p.b); 4])
}

fn thm52_u3ub_build(p: &Params) -> CaseShape {
    product(
        xsb(p.s, p.bprime),
        vec![
            fac(false, p.s, p.b),
            fac(false, p.s, p.b),
            fac(false, p.s, p.b),
            fac(true, p.s, p.b),
        ],
    )
}

fn thm52_ub3u_build(p: &Params) -> CaseShape {
    product(
        xsb(p.s, p.bprime),
        vec![
            fac(true, p.s, p.b),
            fac(true, p.s, p.b),
            fac(true, p.s, p.b),
            fac(false, p.s, p.b),
        ],
    )
}

// --- growth-probe targets ---

fn ex41_target_build(p: &Params) -> CaseShape {
    product(xsb(p.s, p.bprime), vec![fac(false, p.s, p.b); 2])
}
fn nonneg_s(p: &Params) -> bool {
    p.s >= 0.0
}

fn ex42_target_build(p: &Params) -> CaseShape {
    product(xsb(0.0, p.bprime), vec![fac(true, p.s, p.b); 3])
}
fn ex42_target_adm(p: &Params) -> bool {
    p.s >= -1.0 / 3.0 || p.b - p.bprime > 1.0
}

fn ex51_target_build(p: &Params) -> CaseShape {
    product(xsb(p.s, p.bprime), vec![fac(false, p.s, p.b); 4])
}

fn ex51tri_target_build(p: &Params) -> CaseShape {
    product(xsb(p.s, p.bprime), vec![fac(false, p.s, p.b); 3])
}

fn ex52_target_build(p: &Params) -> CaseShape {
    product(
        xsb(p.s, p.bprime),
        vec![
            fac(false, p.s, p.b),
            fac(true, p.s, p.b),
            fac(false, p.s, p.b),
            fac(true, p.s, p.b),
        ],
    )
}

fn ex52tri_target_build(p: &Params) -> CaseShape {
    product(
        xsb(p.s, p.bprime),
        vec![
            fac(false, p.s, p.b),
            fac(true, p.s, p.b),
            fac(false, p.s, p.b),
        ],
    )
}

fn ex53_target_build(p: &Params) -> CaseShape {
    product(
        xsb(p.s, p.bprime),
        vec![
            fac(false, p.s, p.b),
            fac(false, p.s, p.b),
            fac(true, p.s, p.b),
            fac(true, p.s, p.b),
        ],
    )
}
fn ex53_target_adm(p: &Params) -> bool {
    p.s >= -0.125
}

/// All registered cases, fixed order.
pub fn registry() -> Vec<EstimateCase> {
    use DomainKind::*;
    let case = |id, arity, domain, anchor, build, admissible| EstimateCase {
        id,
        arity,
        domain,
        anchor,
        build,
        admissible,
    };
    vec![
        case(
            "lem21",
            1,
            Torus1d,
            "circle: sixth-power space-time integrability; any s > 0, b > 1/2",
            lem21_build as fn(&Params) -> CaseShape,
            lem21_adm as fn(&Params) -> bool,
        ),
        case(
            "cor21",
            1,
            Torus1d,
            "circle: eighth power in time, fourth in space; s > 0, b > 1/2",
            cor21_build,
            lem21_adm,
        ),
        case(
            "lem22i",
            1,
            Torus2d,
            "two-torus: fourth-power space-time integrability; s > 0, b > 1/2",
            lem22i_build,
            lem21_adm,
        ),
        case(
            "lem22ii",
            1,
            Torus3d,
            "three-torus: fourth-power space-time integrability; s > 1/4, b > 1/2",
            lem22ii_build,
            lem22ii_adm,
        ),
        case(
            "cor22",
            1,
            Torus3d,
            "three-torus: fourth power in time, 10/3 in space; s > 1/5, b > 9/20",
            cor22_build,
            cor22_adm,
        ),
        case(
            "lem23i",
            2,
            Line1d,
            "line: product with a conjugate gains s derivatives in L2 time; second exponent above 1/4 + s/2",
            lem23i_build,
            lem23i_adm,
        ),
        case(
            "lem23ii",
            2,
            Line1d,
            "line: product with a conjugate, time integrability 1/p = 1/4 + s/2",
            lem23ii_build,
            lem23ii_adm,
        ),
        case(
            "lem23iii",
            2,
            Line1d,
            "line: dual form, negative-order factor against exponent below -1/4 - s/2",
            lem23iii_build,
            lem23iii_adm,
        ),
        case(
            "cor23i",
            2,
            Line1d,
            "line: difference-frequency smoothing of order s into L2; second exponent above 1/4 + s/2",
            cor23i_build,
            cor23i_adm,
        ),
        case(
            "cor23ii",
            2,
            Line1d,
            "line: adjoint smoothing from a bare L2 factor into exponent above -1/4 - s/2",
            cor23ii_build,
            cor23ii_adm,
        ),
        case(
            "lem31",
            3,
            Line1d,
            "line: triple product with balanced +s/-s weights lands in L2; 0 <= s <= 1/4",
            lem31_build,
            lem31_adm,
        ),
        case(
            "cor31i",
            3,
            Line1d,
            "line: triple product, first factor conjugated; quotient matches the plain case",
            cor31i_build,
            lem31_adm,
        ),
        case(
            "cor31ii",
            3,
            Line1d,
            "line: dual triple product from a bare L2 factor into negative exponents",
            cor31ii_build,
            lem31_adm,
        ),
        case(
            "cor31iii",
            3,
            Line1d,
            "line: triple product measured in L2-time Sobolev of order s",
            cor31iii_build,
            lem31_adm,
        ),
        case(
            "cor31iv",
            3,
            Line1d,
            "line: dual triple product from an order -s L2-time factor",
            cor31iv_build,
            lem31_adm,
        ),
        case(
            "lem32i",
            3,
            Line1d,
            "line: cubic with conjugated middle factor, order-s output; |s| < 1/2 < b",
            lem32i_build,
            lem32i_adm,
        ),
        case(
            "lem32ii",
            3,
            Line1d,
            "line: cubic with the conjugated factor carrying the negative order; -1/2 < s <= 0",
            lem32ii_build,
            lem32ii_adm,
        ),
        case(
            "lem33",
            3,
            Line1d,
            "line: plain cubic, first factor carries the negative order; -1/2 < s <= 0",
            lem33_build,
            lem32ii_adm,
        ),
        case(
            "thm41",
            3,
            Torus1d,
            "circle: conjugate cube, 0 >= s > -1/3, -1/2 < b' < 3s/2, b > 1/2",
            thm41_build,
            thm41_adm,
        ),
        case(
            "thm41-2d2",
            2,
            Torus2d,
            "two-torus: conjugate square, 0 >= s > -1/2, -1/2 < b' < s, b > 1/2",
            thm41_2d2_build,
            thm41_2d2_adm,
        ),
        case(
            "thm42",
            2,
            Torus3d,
            "three-torus: conjugate square, 0 >= s > -3/10, b' < s/2 - 7/20",
            thm42_build,
            thm42_adm,
        ),
        case(
            "thm43-conj",
            3,
            Line1d,
            "line: conjugate cube, 0 >= s > -5/12, output order just under min(0, 3s - 2b')",
            thm43_conj_build,
            thm43_adm,
        ),
        case(
            "thm43-plain",
            3,
            Line1d,
            "line: plain cube, 0 >= s > -5/12, output order just under min(0, 3s - 2b')",
            thm43_plain_build,
            thm43_adm,
        ),
        case(
            "thm44",
            3,
            Line1d,
            "line: one plain by two conjugated, -1/4 >= s > -2/5, b' < min(s - 1/10, s/2 - 1/4)",
            thm44_build,
            thm44_adm,
        ),
        case(
            "thm51",
            4,
            Torus1d,
            "circle: conjugate fourth power, 0 >= s > -1/6, b' < 3s/2 - 1/4",
            thm51_build,
            thm51_adm,
        ),
        case(
            "prop51",
            4,
            Line1d,
            "line: two plain by two conjugated, 0 >= s > -1/8, b' < 2s - 1/4",
            prop51_build,
            prop51_adm,
        ),
        case(
            "thm52-u4",
            4,
            Line1d,
            "line: plain fourth power, 0 >= s > -1/6, b' < 3s/2 - 1/4",
            thm52_u4_build,
            thm51_adm,
        ),
        case(
            "thm52-u3ub",
            4,
            Line1d,
            "line: cube times one conjugate, same range as the plain fourth power",
            thm52_u3ub_build,
            thm51_adm,
        ),
        case(
            "thm52-ub3u",
            4,
            Line1d,
            "line: conjugate cube times one plain factor, same range as the plain fourth power",
            thm52_ub3u_build,
            thm51_adm,
        ),
        case(
            "ex41-target",
            2,
            Torus2d,
            "two-torus plain pair target; fails for all s < 0 whatever b and b'",
            ex41_target_build,
            nonneg_s,
        ),
        case(
            "ex42-target",
            3,
            Torus1d,
            "circle conjugate-cube target; fails for all s < -1/3 when b - b' <= 1",
            ex42_target_build,
            ex42_target_adm,
        ),
        case(
            "ex51-target",
            4,
            Torus1d,
            "circle plain quartic target; fails for all s < 0",
            ex51_target_build,
            nonneg_s,
        ),
        case(
            "ex51tri-target",
            3,
            Torus1d,
            "circle plain cubic target; fails for all s < 0",
            ex51tri_target_build,
            nonneg_s,
        ),
        case(
            "ex52-target",
            4,
            Torus1d,
            "circle alternating plain/conjugate quartic target; fails for all s < 0",
            ex52_target_build,
            nonneg_s,
        ),
        case(
            "ex52tri-target",
            3,
            Torus1d,
            "circle plain-conjugate-plain cubic target; fails for all s < 0",
            ex52tri_target_build,
            nonneg_s,
        ),
        case(
            "ex53-target",
            4,
            Line1d,
            "line two-plain-two-conjugate quartic target; fails for all s < -1/8",
            ex53_target_build,
            ex53_target_adm,
        ),
    ]
}
