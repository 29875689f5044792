//! Independent reference implementations evaluated in 256-bit binary
//! floating point. Nothing here calls into the library's formulas.

#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct Hp {
    cc: Consts,
}

impl Hp {
    pub fn new() -> Self {
        Self {
            cc: Consts::new().expect("constants cache"),
        }
    }

    pub fn num(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, P)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, P, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, P, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, P, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, P, RM)
    }

    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(P, RM, &mut self.cc)
    }

    pub fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(P, RM, &mut self.cc)
    }

    /// `a^e` for positive `a` as `exp(e ln a)`.
    pub fn powr(&mut self, a: &BigFloat, e: &BigFloat) -> BigFloat {
        let l = self.ln(a);
        let m = self.mul(e, &l);
        self.exp(&m)
    }

    pub fn to_f64(&self, a: &BigFloat) -> f64 {
        let s = format!("{a}");
        s.parse::<f64>()
            .unwrap_or_else(|_| panic!("cannot read back {s:?}"))
    }
}

/// `l^(1 - pi) u^pi`.
pub fn interval_value(l: f64, u: f64, pi: f64) -> f64 {
    interval_value_in(&mut Hp::new(), l, u, pi)
}

pub fn interval_value_in(h: &mut Hp, l: f64, u: f64, pi: f64) -> f64 {
    let one = h.num(1.0);
    let pi_b = h.num(pi);
    let w = h.sub(&one, &pi_b);
    let (lb, ub) = (h.num(l), h.num(u));
    let ll = h.ln(&lb);
    let lu = h.ln(&ub);
    let s = h.add(&h.mul(&w, &ll), &h.mul(&pi_b, &lu));
    let r = h.exp(&s);
    h.to_f64(&r)
}

/// Crisp model constants as plain numbers.
#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub p: f64,
    pub sigma: f64,
    pub x0: f64,
}

/// A reference value and the magnitude of the largest term that went into
/// it. Formulas that subtract nearly equal terms can only be compared
/// relative to that magnitude.
#[derive(Debug, Clone, Copy)]
pub struct Ref {
    pub value: f64,
    pub scale: f64,
}

impl Ref {
    pub fn agrees(&self, got: f64, rel: f64) -> bool {
        (got - self.value).abs() <= rel * self.scale.max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Thresholds {
    pub k: f64,
    pub state_bound: f64,
    pub delta: f64,
    pub h_holds: bool,
    pub sigma_prime_sq: Ref,
    pub sigma_dprime_sq: Ref,
    pub r1: Ref,
    pub r1s: Ref,
    pub a1_holds: bool,
    pub a2_holds: bool,
    pub a1_bound: Ref,
    pub a2_bound: Ref,
    pub a2_term: f64,
    pub persistence: Ref,
}

fn maxabs(h: &Hp, xs: &[&BigFloat]) -> f64 {
    xs.iter().map(|x| h.to_f64(x).abs()).fold(0.0, f64::max)
}

/// Every threshold for the point and a jump measure given as `(rate, gamma)`.
pub fn thresholds(pt: Point, marks: &[(f64, f64)]) -> Thresholds {
    let mut h = Hp::new();
    let one = h.num(1.0);
    let two = h.num(2.0);
    let (k1, k2, k3, k4) = (h.num(pt.k1), h.num(pt.k2), h.num(pt.k3), h.num(pt.k4));
    let (p, sigma, x0) = (h.num(pt.p), h.num(pt.sigma), h.num(pt.x0));

    let k = if pt.k2 <= pt.k4 {
        k2.clone()
    } else {
        k4.clone()
    };
    let k1x0 = h.mul(&k1, &x0);
    let b = h.div(&k1x0, &k);
    let bp = h.powr(&b, &p);
    let two_p = h.mul(&two, &p);
    let b2p = h.powr(&b, &two_p);

    let mut delta = h.num(0.0);
    for &(_, g) in marks {
        let v = h.mul(&bp, &h.num(g.abs()));
        if v > delta {
            delta = v;
        }
    }
    let delta_f = h.to_f64(&delta);
    let h_holds = delta < one;

    let sig2 = h.mul(&sigma, &sigma);
    let d_plus = h.add(&one, &delta);
    let d_minus = h.sub(&one, &delta);
    let d_plus2 = h.mul(&d_plus, &d_plus);
    let d_minus2 = h.mul(&d_minus, &d_minus);
    let mut jp = h.num(0.0);
    let mut jdp = h.num(0.0);
    for &(rate, g) in marks {
        let g2l = h.mul(&h.mul(&h.num(g), &h.num(g)), &h.num(rate));
        jp = h.add(&jp, &h.div(&g2l, &d_plus2));
        jdp = h.add(&jdp, &h.div(&g2l, &d_minus2));
    }
    let sp = h.add(&sig2, &jp);
    let sdp = h.add(&sig2, &jdp);

    let pk3 = h.mul(&p, &k3);
    let pk3_k4 = h.div(&pk3, &k4);
    let ratio = h.div(&k1x0, &k2);
    let ratio_p = h.powr(&ratio, &p);
    let r1 = h.mul(&pk3_k4, &ratio_p);
    let two_k4 = h.mul(&two, &k4);
    let r1s_corr = h.mul(&h.div(&sdp, &two_k4), &b2p);
    let r1s = h.sub(&r1, &r1s_corr);

    let pk3_sq = h.mul(&pk3, &pk3);
    let a1_lhs = h.div(&pk3_sq, &two_k4);
    let a1_holds = sp > a1_lhs;
    let a1_first = h.div(&pk3_sq, &h.mul(&two, &sp));
    let a1_bound = h.sub(&a1_first, &k4);

    let a2_first = h.mul(&pk3_k4, &bp);
    let a2_second = h.mul(&h.div(&sp, &two_k4), &b2p);
    let a2_term = h.sub(&a2_first, &a2_second);
    let a2_holds = sp <= h.div(&pk3, &bp) && a2_term < one;
    let a2_bound = h.mul(&k4, &h.sub(&a2_term, &one));

    let inner = h.add(
        &h.div(&k4, &pk3),
        &h.mul(&h.div(&sdp, &h.mul(&two, &pk3)), &b2p),
    );
    let root = h.powr(&inner, &h.div(&one, &p));
    let pers_first = h.mul(&h.div(&k2, &k4), &root);
    let pers_second = h.div(&k1x0, &k4);
    let persistence = h.sub(&pers_second, &pers_first);

    let r = |h: &Hp, v: &BigFloat, scale: f64| Ref {
        value: h.to_f64(v),
        scale,
    };
    let k4_a2 = h.mul(&k4, &a2_first);
    let k4_a2s = h.mul(&k4, &a2_second);
    Thresholds {
        k: h.to_f64(&k),
        state_bound: h.to_f64(&b),
        delta: delta_f,
        h_holds,
        sigma_prime_sq: r(&h, &sp, maxabs(&h, &[&sp])),
        sigma_dprime_sq: r(&h, &sdp, maxabs(&h, &[&sdp])),
        r1: r(&h, &r1, maxabs(&h, &[&r1])),
        r1s: r(&h, &r1s, maxabs(&h, &[&r1, &r1s_corr])),
        a1_holds,
        a2_holds,
        a1_bound: r(&h, &a1_bound, maxabs(&h, &[&a1_first, &k4])),
        a2_bound: r(&h, &a2_bound, maxabs(&h, &[&k4_a2, &k4_a2s, &k4])),
        a2_term: h.to_f64(&a2_term),
        persistence: r(&h, &persistence, maxabs(&h, &[&pers_first, &pers_second])),
    }
}

/// The bound the theory attaches to the extinction regime: the smaller of
/// the two when both conditions hold.
pub fn extinction_bound(t: &Thresholds) -> Option<Ref> {
    match (t.a1_holds, t.a2_holds) {
        (true, true) if t.a2_bound.value < t.a1_bound.value => Some(t.a2_bound),
        (true, _) => Some(t.a1_bound),
        (false, true) => Some(t.a2_bound),
        (false, false) => None,
    }
}
