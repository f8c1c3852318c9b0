//! Library results checked against independent closed forms and brute-force
//! enumerations written directly from the amplitude algebra.

use std::f64::consts::PI;

use qpv_core::adversary::{
    bayes_success_probability, cipher_mixtures, exact_mutual_information, grid_angles, helstrom_guess_bound,
    map_decoder,
};
use qpv_core::density::trace_distance;
use qpv_core::keys::{neighbor_distance, neighbor_distance_at};
use qpv_core::qubit::Angle;

const TOL: f64 = 1e-12;

fn step(t: u32) -> f64 {
    PI / (1u64 << t) as f64
}

/// `[ρ00, ρ01, ρ11]` of the uniform mixture over all key values, summed in
/// the closed form `|ψ><ψ| = [[c², cs], [cs, s²]]`.
fn mixture_oracle(t: u32, bit: bool) -> [f64; 3] {
    let n = 1u64 << t;
    let shift = if bit { PI / 2.0 } else { 0.0 };
    let mut acc = [0.0; 3];
    for s in 0..n {
        let a = s as f64 * step(t) + shift;
        let (sin, cos) = a.sin_cos();
        acc[0] += cos * cos;
        acc[1] += cos * sin;
        acc[2] += sin * sin;
    }
    acc.map(|x| x / n as f64)
}

#[test]
fn mixtures_match_brute_force_oracle() {
    for t in 1..=12 {
        for bit in [false, true] {
            let [[a, b], [c, d]] = cipher_mixtures(t, bit).unwrap().entries();
            let o = mixture_oracle(t, bit);
            assert!((a - o[0]).abs() < TOL, "t={t} bit={bit}");
            assert!((b - o[1]).abs() < TOL && (c - o[1]).abs() < TOL, "t={t} bit={bit}");
            assert!((d - o[2]).abs() < TOL, "t={t} bit={bit}");
            // Both equal I/2.
            assert!((o[0] - 0.5).abs() < TOL && o[1].abs() < TOL);
        }
    }
}

#[test]
fn secrecy_and_helstrom_bound() {
    for t in 1..=12 {
        let r0 = cipher_mixtures(t, false).unwrap();
        let r1 = cipher_mixtures(t, true).unwrap();
        assert!(trace_distance(&r0, &r1).unwrap() < TOL, "t={t}");
        assert!((helstrom_guess_bound(&r0, &r1).unwrap() - 0.5).abs() < TOL, "t={t}");
    }
}

#[test]
fn neighbor_distance_closed_form() {
    let mut last = f64::INFINITY;
    for t in 1..=20 {
        let d = neighbor_distance(t);
        assert!((d - step(t).sin()).abs() < TOL, "t={t}: {d}");
        assert!(d < last);
        last = d;
        let top = (1u64 << t) - 1;
        for s in [0, 1, top / 3, top / 2, top.saturating_sub(1)] {
            let ds = neighbor_distance_at(s, t);
            assert!((ds - step(t).sin()).abs() < TOL, "t={t} s={s}: {ds}");
        }
    }
}

/// MAP success by enumerating every ordered outcome string of `k` copies.
fn map_oracle(t: u32, k: u32, basis: f64) -> f64 {
    let n = 1u64 << t;
    let p: Vec<f64> = (0..n).map(|s| (s as f64 * step(t) - basis).sin().powi(2)).collect();
    let mut total = 0.0;
    for outcome in 0..1u32 << k {
        let best = p
            .iter()
            .map(|&q| {
                (0..k)
                    .map(|j| if outcome >> j & 1 == 1 { q } else { 1.0 - q })
                    .product::<f64>()
            })
            .fold(0.0, f64::max);
        total += best;
    }
    total / n as f64
}

#[test]
fn bayes_success_matches_string_enumeration() {
    for t in 1..=4 {
        for k in 1..=5 {
            for phi in grid_angles(24) {
                let lib = bayes_success_probability(t, k as usize, phi);
                let oracle = map_oracle(t, k, phi.radians());
                assert!((lib - oracle).abs() < 1e-12, "t={t} k={k} φ={}", phi.radians());
            }
        }
    }
}

#[test]
fn decoded_index_maximizes_likelihood() {
    let t = 3;
    let k = 4;
    let phi = 0.3;
    let table = map_decoder(t, k, Angle::from_radians(phi));
    for (ones, &pick) in table.iter().enumerate() {
        let like = |s: u64| {
            let q = (s as f64 * step(t) - phi).sin().powi(2);
            q.powi(ones as i32) * (1.0 - q).powi((k - ones) as i32)
        };
        for s in 0..1u64 << t {
            assert!(like(pick) >= like(s) - 1e-15, "ones={ones} pick={pick} s={s}");
        }
    }
}

/// `I(O; S)` straight from the joint distribution `P(s, o)`.
fn information_oracle(t: u32, basis: f64) -> f64 {
    let n = 1u64 << t;
    let ps = 1.0 / n as f64;
    let cond: Vec<[f64; 2]> = (0..n)
        .map(|s| {
            let q = (s as f64 * step(t) - basis).sin().powi(2);
            [1.0 - q, q]
        })
        .collect();
    let po = [0, 1].map(|o| cond.iter().map(|c| c[o] * ps).sum::<f64>());
    let mut mi = 0.0;
    for c in &cond {
        for o in 0..2 {
            let joint = c[o] * ps;
            if joint > 0.0 {
                mi += joint * (joint / (ps * po[o])).log2();
            }
        }
    }
    mi
}

#[test]
fn information_matches_joint_distribution() {
    for t in 1..=8 {
        for j in 0..200 {
            let phi = j as f64 * PI / 200.0;
            let lib = exact_mutual_information(t, Angle::from_radians(phi));
            let oracle = information_oracle(t, phi);
            assert!((lib - oracle).abs() < 1e-12, "t={t} φ={phi}");
            assert!(lib <= 1.0 + 1e-12);
        }
    }
}
