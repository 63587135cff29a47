use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twomap::affine::symbol_map;
use twomap::project::project_finite;
use twomap::{affine_of_word, bounding_set, project, project_prefix, EventualAddress, Symbol, SystemSpec, Vec2, Word};

fn word(bits: &[bool]) -> Word {
    bits.iter().map(|&b| if b { Symbol::P } else { Symbol::M }).collect()
}

/// Flip every other digit, starting with the second.
fn alternate(w: &Word) -> Word {
    w.symbols()
        .iter()
        .enumerate()
        .map(|(i, s)| if i % 2 == 1 { s.flip() } else { *s })
        .collect()
}

fn any_spec() -> impl Strategy<Value = SystemSpec> {
    (0usize..4, 0.2f64..0.95, 0.2f64..0.95, 0.1f64..3.0).prop_filter_map("valid", |(case, a, b, th)| {
        match case {
            0 => SystemSpec::positive_real(a.min(b), a.max(b)),
            1 => SystemSpec::mixed_real(a, b),
            2 => SystemSpec::jordan(a),
            _ => SystemSpec::complex(a * th.cos(), a * th.sin()),
        }
        .ok()
    })
}

fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
    a.dist(b) <= tol
}

proptest! {
    #[test]
    fn self_affinity(spec in any_spec(), bits in prop::collection::vec(any::<bool>(), 0..50), s in any::<bool>()) {
        let w = word(&bits);
        let s = if s { Symbol::P } else { Symbol::M };
        let sw = Word::repeat(s, 1).concat(&w);
        let lhs = project_prefix(&spec, &sw).0;
        let rhs = symbol_map(&spec, s).apply(project_prefix(&spec, &w).0);
        prop_assert!(close(lhs, rhs, 1e-12), "{lhs:?} vs {rhs:?}");
    }

    #[test]
    fn flip_symmetry(spec in any_spec(), pre in prop::collection::vec(any::<bool>(), 0..30), per in prop::collection::vec(any::<bool>(), 1..6)) {
        let addr = EventualAddress::new(word(&pre), word(&per)).unwrap();
        let a = project(&spec, &addr);
        let b = project(&spec, &addr.flipped());
        prop_assert!(close(a, -b, 1e-12));
    }

    #[test]
    fn affine_maps_compose(spec in any_spec(), x in prop::collection::vec(any::<bool>(), 0..30), y in prop::collection::vec(any::<bool>(), 0..30)) {
        let (x, y) = (word(&x), word(&y));
        let whole = affine_of_word(&spec, &x.concat(&y));
        let parts = affine_of_word(&spec, &x).compose(&affine_of_word(&spec, &y));
        prop_assert!(whole.max_abs_diff(&parts) <= 1e-12);
    }

    #[test]
    fn mixed_is_alternating_positive(l in 0.2f64..0.95, m in 0.2f64..0.95, bits in prop::collection::vec(any::<bool>(), 0..=40)) {
        prop_assume!((l - m).abs() > 1e-6);
        let w = word(&bits);
        let mixed = project_finite(&SystemSpec::mixed_real(l, m).unwrap(), &w);
        let pos = SystemSpec::positive_real(l.min(m), l.max(m)).unwrap();
        // the positive normal form orders eigenvalues, so pick the matching coordinate
        let alt = project_finite(&pos, &alternate(&w));
        let plain = project_finite(&pos, &w);
        let (alt_x, plain_y) = if l < m { (alt.x, plain.y) } else { (alt.y, plain.x) };
        // direct sums
        let sx: f64 = w.values().enumerate().map(|(i, a)| a * (-l).powi(i as i32)).sum();
        let sy: f64 = w.values().enumerate().map(|(i, a)| a * m.powi(i as i32)).sum();
        prop_assert!((mixed.x - sx).abs() <= 1e-12 && (mixed.y - sy).abs() <= 1e-12);
        prop_assert!((mixed.x - alt_x).abs() <= 1e-12);
        prop_assert!((mixed.y - plain_y).abs() <= 1e-12);
    }

    #[test]
    fn jordan_reflection(nu in 0.2f64..0.95, bits in prop::collection::vec(any::<bool>(), 0..=40)) {
        let w = word(&bits);
        let a = project_finite(&SystemSpec::jordan(nu).unwrap(), &w);
        let b = project_finite(&SystemSpec::jordan(-nu).unwrap(), &alternate(&w));
        prop_assert!(close(a, Vec2::new(-b.x, b.y), 1e-12), "{a:?} vs {b:?}");
    }
}

#[test]
fn bounding_set_contains_prefixes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..4 {
        let mut made = 0;
        while made < 20 {
            let a: f64 = rng.random_range(0.2..0.95);
            let b: f64 = rng.random_range(0.2..0.95);
            let th: f64 = rng.random_range(0.1..3.0);
            let spec = match case {
                0 => SystemSpec::positive_real(a.min(b), a.max(b)),
                1 => SystemSpec::mixed_real(a, b),
                2 => SystemSpec::jordan(a),
                _ => SystemSpec::complex(a * th.cos(), a * th.sin()),
            };
            let Ok(spec) = spec else { continue };
            made += 1;
            let set = bounding_set(&spec);
            let m = spec.matrix();
            let mut terms = Vec::with_capacity(60);
            let mut t = spec.translation();
            for _ in 0..60 {
                terms.push(t);
                t = m.apply(t);
            }
            for _ in 0..100_000 {
                let bits: u64 = rng.random();
                let mut p = Vec2::ZERO;
                for (i, t) in terms.iter().enumerate() {
                    p += *t * if bits >> i & 1 == 1 { 1.0 } else { -1.0 };
                }
                assert!(set.contains(p, 1e-12), "{spec}: {p:?} outside {set:?}");
            }
        }
    }
}

#[test]
fn jordan_bounding_set_holds_samples() {
    let spec = SystemSpec::jordan(0.9).unwrap();
    let set = bounding_set(&spec);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10_000 {
        let w: Word = (0..400).map(|_| if rng.random::<bool>() { Symbol::P } else { Symbol::M }).collect();
        let (p, r) = project_prefix(&spec, &w);
        assert!(r < 1e-10);
        assert!(set.contains(p, 1e-9));
    }
}
